//! Tokenizer for `.kos` sources.

use num_bigint::BigUint;

use super::diag::{Diagnostic, Span};
use crate::term::TimeKind;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(BigUint),
    Str(String),
    Time(TimeKind, u64),
    LParen,
    RParen,
    LAngle,
    RAngle,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Colon,
    Semi,
    Eq,
    EqEq,
    Arrow,
    FatArrow,
    Star,
    Plus,
    Backslash,
    Question,
    Hash,
    HashBang,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Time(..) => "time literal".into(),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LAngle => "<",
            Tok::RAngle => ">",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::Eq => "=",
            Tok::EqEq => "==",
            Tok::Arrow => "->",
            Tok::FatArrow => "=>",
            Tok::Star => "*",
            Tok::Plus => "+",
            Tok::Backslash => "\\",
            Tok::Question => "?",
            Tok::Hash => "#",
            Tok::HashBang => "#!",
            _ => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const DAY_MS: u64 = 86_400_000;

/// Parses the text after `@`: `HH:MM`, `YYYY-MM-DDTHH:MM[:SS]`, raw
/// milliseconds, or `+ms` for a duration.
pub fn parse_time(text: &str) -> Option<(TimeKind, u64)> {
    if let Some(rest) = text.strip_prefix('+') {
        return rest.parse().ok().map(|ms| (TimeKind::Duration, ms));
    }
    if text.bytes().all(|b| b.is_ascii_digit()) {
        return text.parse().ok().map(|ms| (TimeKind::Stamp, ms));
    }
    if let Ok(t) = chrono::NaiveTime::parse_from_str(text, "%H:%M") {
        let ms = chrono::Timelike::num_seconds_from_midnight(&t) as u64 * 1000;
        return Some((TimeKind::Stamp, ms));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = chrono::NaiveDateTime::parse_from_str(text, fmt) {
            let ms = dt.and_utc().timestamp_millis();
            return u64::try_from(ms).ok().map(|ms| (TimeKind::Stamp, ms));
        }
    }
    None
}

/// Inverse of [`parse_time`] for stamps and durations.
pub fn format_time(kind: TimeKind, ms: u64) -> String {
    match kind {
        TimeKind::Duration => format!("@+{ms}"),
        TimeKind::Stamp if ms.is_multiple_of(60_000) && ms < DAY_MS => {
            format!("@{:02}:{:02}", ms / 3_600_000, (ms / 60_000) % 60)
        }
        TimeKind::Stamp if ms.is_multiple_of(1000) => match chrono::DateTime::from_timestamp_millis(ms as i64) {
            Some(dt) if ms.is_multiple_of(60_000) => format!("@{}", dt.format("%Y-%m-%dT%H:%M")),
            Some(dt) => format!("@{}", dt.format("%Y-%m-%dT%H:%M:%S")),
            None => format!("@{ms}"),
        },
        TimeKind::Stamp => format!("@{ms}"),
    }
}

/// Wall-clock rendering used in reports: `HH:MM`.
pub fn clock_time(ms: u64) -> String {
    let m = (ms / 60_000) % (24 * 60);
    format!("{:02}:{:02}", m / 60, m % 60)
}

pub fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let span = Span::new(line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let double = match two.as_str() {
            "==" => Some(Tok::EqEq),
            "->" => Some(Tok::Arrow),
            "=>" => Some(Tok::FatArrow),
            "#!" => Some(Tok::HashBang),
            _ => None,
        };
        if let Some(tok) = double {
            bump!();
            bump!();
            out.push(Token { tok, span });
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '<' => Some(Tok::LAngle),
            '>' => Some(Tok::RAngle),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            ':' => Some(Tok::Colon),
            ';' => Some(Tok::Semi),
            '=' => Some(Tok::Eq),
            '*' => Some(Tok::Star),
            '+' => Some(Tok::Plus),
            '\\' => Some(Tok::Backslash),
            '?' => Some(Tok::Question),
            '#' => Some(Tok::Hash),
            _ => None,
        };
        if let Some(tok) = single {
            bump!();
            out.push(Token { tok, span });
            continue;
        }
        if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(Diagnostic::error(span, "unterminated string literal")),
                    Some('"') => {
                        bump!();
                        break;
                    }
                    Some('\\') => {
                        bump!();
                        match chars.get(i) {
                            Some(&e @ ('"' | '\\')) => {
                                s.push(e);
                                bump!();
                            }
                            Some('n') => {
                                s.push('\n');
                                bump!();
                            }
                            _ => return Err(Diagnostic::error(Span::new(line, col), "unknown escape in string")),
                        }
                    }
                    Some(&ch) => {
                        s.push(ch);
                        bump!();
                    }
                }
            }
            out.push(Token { tok: Tok::Str(s), span });
            continue;
        }
        if c == '@' {
            bump!();
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || matches!(chars[i], ':' | '-' | '+')) {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let (kind, ms) =
                parse_time(&text).ok_or_else(|| Diagnostic::error(span, format!("malformed time literal `@{text}`")))?;
            out.push(Token { tok: Tok::Time(kind, ms), span });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            let hex = c == '0' && matches!(chars.get(i + 1), Some('x' | 'X'));
            if hex {
                bump!();
                bump!();
            }
            while i < chars.len() && (chars[i].is_ascii_hexdigit() && hex || chars[i].is_ascii_digit() || chars[i] == '_') {
                bump!();
            }
            let text: String = chars[start..i].iter().filter(|&&c| c != '_').collect();
            let n = if hex {
                BigUint::parse_bytes(&text.as_bytes()[2..], 16)
            } else {
                BigUint::parse_bytes(text.as_bytes(), 10)
            };
            let n = n.ok_or_else(|| Diagnostic::error(span, format!("malformed number `{text}`")))?;
            out.push(Token { tok: Tok::Int(n), span });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                bump!();
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), span });
            continue;
        }
        return Err(Diagnostic::error(span, format!("unexpected character `{c}`")));
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(line, col) });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn symbols_and_literals() {
        assert_eq!(
            toks("\\x. <x, 0x4A> -> @07:55 // note"),
            vec![
                Tok::Backslash,
                Tok::Ident("x".into()),
                Tok::Dot,
                Tok::LAngle,
                Tok::Ident("x".into()),
                Tok::Comma,
                Tok::Int(BigUint::from(0x4Au32)),
                Tok::RAngle,
                Tok::Arrow,
                Tok::Time(TimeKind::Stamp, 7 * 3_600_000 + 55 * 60_000),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn time_formats_round_trip() {
        for (kind, ms) in [
            (TimeKind::Stamp, 36_000_000),
            (TimeKind::Stamp, 1_696_932_000_000),
            (TimeKind::Stamp, 1_696_932_001_000),
            (TimeKind::Stamp, 1_234),
            (TimeKind::Duration, 90_000),
        ] {
            let text = format_time(kind, ms);
            assert_eq!(parse_time(&text[1..]), Some((kind, ms)), "{text}");
        }
        assert_eq!(format_time(TimeKind::Stamp, 1_696_932_000_000), "@2023-10-10T10:00");
        assert_eq!(clock_time(1_696_932_000_000), "10:00");
    }

    #[test]
    fn spans_track_lines() {
        let t = lex("a\n  b").unwrap();
        assert_eq!(t[1].span, Span::new(2, 3));
        assert!(lex("\"open").is_err());
    }
}
