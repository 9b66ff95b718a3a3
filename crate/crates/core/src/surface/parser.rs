//! Recursive-descent parser for terms and `.kos` modules.
//!
//! Precedence, loosest first: `\`/`let`/`->`, `+`, `*`, application,
//! postfix projections `.1`/`.2`, atoms. `->`, `+` and `*` associate right.

use std::collections::HashSet;

use num_bigint::BigUint;

use super::ast::*;
use super::diag::{Diagnostic, Span};
use super::lexer::{lex, Tok, Token};
use crate::term::{BaseType, Name, PrimTag, Sort, Term};

/// Words with fixed meaning inside terms.
pub const TERM_KEYWORDS: &[&str] = &[
    "let", "in", "refl", "split", "case", "inl", "inr", "absurd", "J", "Id", "Prop", "Empty", "Val", "Time",
    "ID",
];

/// Words that end a term inside declarations.
const STOP_WORDS: &[&str] = &["in", "where", "when", "requires", "key", "guard", "join", "on", "trace"];

const DECL_KEYWORDS: &[&str] = &["sort", "axiom", "type", "def", "fact", "event", "template", "watcher"];

/// Reserved name for the logical clock inside event clauses.
pub const NOW: &str = "now";

pub fn is_reserved(name: &str) -> bool {
    TERM_KEYWORDS.contains(&name) || PrimTag::from_keyword(name).is_some() || sort_keyword(name).is_some()
}

fn sort_keyword(s: &str) -> Option<Sort> {
    if s == "Prop" {
        return Some(Sort::Prop);
    }
    let level = |rest: &str| -> Option<u32> {
        if rest.is_empty() || (rest.len() > 1 && rest.starts_with('0')) {
            return None;
        }
        rest.parse().ok()
    };
    if let Some(rest) = s.strip_prefix("Type") {
        return level(rest).filter(|&i| i >= 1).map(Sort::Type);
    }
    if let Some(rest) = s.strip_prefix('U') {
        return level(rest).map(Sort::Data);
    }
    None
}

type PResult<T> = Result<T, Diagnostic>;

enum Atom {
    Term(Term),
    Args(Vec<Term>, Span),
}

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    scope: Vec<String>,
    globals: HashSet<String>,
}

impl Parser {
    pub fn new(src: &str, globals: HashSet<String>) -> PResult<Parser> {
        Ok(Parser { toks: lex(src)?, pos: 0, scope: Vec::new(), globals })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, wanted: &str) -> Diagnostic {
        Diagnostic::error(self.span(), format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.unexpected(&t.describe()))
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.at_word(w) {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{w}`")))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected("a name")),
        }
    }

    /// A name that may be bound by a binder or declaration.
    fn binder_name(&mut self) -> PResult<String> {
        let span = self.span();
        let name = self.ident()?;
        if is_reserved(&name) {
            return Err(Diagnostic::error(span, format!("`{name}` is reserved and cannot be bound")));
        }
        Ok(name)
    }

    fn string(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected("a string")),
        }
    }

    fn small_int(&mut self) -> PResult<usize> {
        let span = self.span();
        match self.advance() {
            Tok::Int(n) => usize::try_from(&n).map_err(|_| Diagnostic::error(span, "number too large")),
            t => Err(Diagnostic::error(span, format!("expected a number, found {}", t.describe()))),
        }
    }

    fn with_bound<T>(&mut self, names: &[String], f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        let depth = self.scope.len();
        self.scope.extend(names.iter().cloned());
        let r = f(self);
        self.scope.truncate(depth);
        r
    }

    pub fn at_eof(&self) -> bool {
        self.at(&Tok::Eof)
    }

    // ----- terms -----

    pub fn expr(&mut self) -> PResult<Term> {
        if self.at(&Tok::Backslash) {
            return self.lambda();
        }
        if self.at_word("let") {
            return self.let_expr();
        }
        let lhs = self.sum()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.expr()?;
            return Ok(Term::arrow(lhs, rhs));
        }
        Ok(lhs)
    }

    fn lambda(&mut self) -> PResult<Term> {
        self.expect(Tok::Backslash)?;
        let mut binders: Vec<(String, Option<Term>)> = Vec::new();
        loop {
            if self.at(&Tok::LParen) {
                self.advance();
                let name = self.binder_name()?;
                self.expect(Tok::Colon)?;
                let names: Vec<String> = binders.iter().map(|b| b.0.clone()).collect();
                let ty = self.with_bound(&names, |p| p.expr())?;
                self.expect(Tok::RParen)?;
                binders.push((name, Some(ty)));
            } else if matches!(self.peek(), Tok::Ident(_)) {
                binders.push((self.binder_name()?, None));
            } else {
                break;
            }
        }
        if binders.is_empty() {
            return Err(self.unexpected("a binder"));
        }
        self.expect(Tok::Dot)?;
        let names: Vec<String> = binders.iter().map(|b| b.0.clone()).collect();
        let body = self.with_bound(&names, |p| p.expr())?;
        Ok(binders.into_iter().rev().fold(body, |body, (name, ty)| {
            Term::Lam(Name::new(name), ty.map(Box::new), Box::new(body))
        }))
    }

    fn let_expr(&mut self) -> PResult<Term> {
        self.expect_word("let")?;
        let name = self.binder_name()?;
        let ty = if self.eat(&Tok::Colon) { Some(self.expr()?) } else { None };
        self.expect(Tok::Eq)?;
        let value = self.expr()?;
        self.expect_word("in")?;
        let body = self.with_bound(std::slice::from_ref(&name), |p| p.expr())?;
        Ok(Term::Let(Name::new(name), Box::new(value), ty.map(Box::new), Box::new(body)))
    }

    fn sum(&mut self) -> PResult<Term> {
        let lhs = self.prod()?;
        if self.eat(&Tok::Plus) {
            let rhs = self.sum()?;
            return Ok(Term::sum(lhs, rhs));
        }
        Ok(lhs)
    }

    fn at_binder_group(&self) -> bool {
        self.at(&Tok::LParen) && matches!(self.peek_at(1), Tok::Ident(_)) && self.peek_at(2) == &Tok::Colon
    }

    fn prod(&mut self) -> PResult<Term> {
        if self.at_binder_group() {
            self.advance();
            let name = self.binder_name()?;
            self.expect(Tok::Colon)?;
            let dom = self.expr()?;
            self.expect(Tok::RParen)?;
            return if self.eat(&Tok::Arrow) {
                let body = self.with_bound(std::slice::from_ref(&name), |p| p.expr())?;
                Ok(Term::Pi(Name::new(name), Box::new(dom), Box::new(body)))
            } else if self.eat(&Tok::Star) {
                let body = self.with_bound(std::slice::from_ref(&name), |p| p.prod())?;
                Ok(Term::Sigma(Name::new(name), Box::new(dom), Box::new(body)))
            } else {
                Err(self.unexpected("`->` or `*` after a binder"))
            };
        }
        let lhs = self.app()?;
        if self.eat(&Tok::Star) {
            let rhs = self.prod()?;
            return Ok(Term::product(lhs, rhs));
        }
        Ok(lhs)
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => !STOP_WORDS.contains(&s.as_str()) && s != "let",
            Tok::Int(_) | Tok::Str(_) | Tok::Time(..) | Tok::LParen | Tok::LAngle | Tok::Hash | Tok::HashBang => true,
            _ => false,
        }
    }

    pub fn app(&mut self) -> PResult<Term> {
        let mut head = match self.postfix()? {
            Atom::Term(t) => t,
            Atom::Args(_, span) => {
                return Err(Diagnostic::error(span, "a parenthesized list is only allowed as arguments")
                    .with_note("pairs are written <a, b>"))
            }
        };
        while self.starts_atom() {
            match self.postfix()? {
                Atom::Term(a) => head = Term::app(head, a),
                Atom::Args(args, _) => head = Term::apps(head, args),
            }
        }
        Ok(head)
    }

    fn postfix(&mut self) -> PResult<Atom> {
        let mut atom = self.atom()?;
        while self.at(&Tok::Dot) {
            let which = match self.peek_at(1) {
                Tok::Int(n) if *n == BigUint::from(1u8) => 1,
                Tok::Int(n) if *n == BigUint::from(2u8) => 2,
                _ => break,
            };
            let span = self.span();
            self.advance();
            self.advance();
            let Atom::Term(t) = atom else {
                return Err(Diagnostic::error(span, "cannot project from an argument list"));
            };
            atom = Atom::Term(if which == 1 { Term::proj1(t) } else { Term::proj2(t) });
        }
        Ok(atom)
    }

    fn comma_list(&mut self, close: Tok) -> PResult<Vec<Term>> {
        let mut items = vec![self.expr()?];
        while self.eat(&Tok::Comma) {
            items.push(self.expr()?);
        }
        self.expect(close)?;
        Ok(items)
    }

    fn call_args(&mut self) -> PResult<Vec<Term>> {
        self.expect(Tok::LParen)?;
        self.comma_list(Tok::RParen)
    }

    fn call_args_n(&mut self, what: &str, n: usize) -> PResult<Vec<Term>> {
        let span = self.span();
        let args = self.call_args()?;
        if args.len() != n {
            return Err(Diagnostic::error(span, format!("`{what}` takes {n} arguments, got {}", args.len())));
        }
        Ok(args)
    }

    fn pred_args(&mut self, tag: PrimTag) -> PResult<Vec<Term>> {
        let span = self.span();
        self.expect(Tok::LParen)?;
        let mut args = vec![self.expr()?];
        if tag == PrimTag::InSet {
            self.expect(Tok::Comma)?;
            self.expect(Tok::LBracket)?;
            if !self.eat(&Tok::RBracket) {
                args.extend(self.comma_list(Tok::RBracket)?);
            }
            self.expect(Tok::RParen)?;
            return Ok(args);
        }
        while self.eat(&Tok::Comma) {
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen)?;
        if let Some(n) = crate::prim::arity(tag) {
            if args.len() != n {
                return Err(Diagnostic::error(
                    span,
                    format!("`{}` takes {n} operands, got {}", tag.keyword(), args.len()),
                ));
            }
        }
        Ok(args)
    }

    fn resolve(&self, name: &str, span: Span) -> PResult<Term> {
        if let Some(i) = self.scope.iter().rev().position(|s| s == name) {
            return Ok(Term::Var(i));
        }
        if self.globals.contains(name) {
            return Ok(Term::Const(name.to_owned()));
        }
        Err(Diagnostic::error(span, format!("unknown name `{name}`")))
    }

    fn atom(&mut self) -> PResult<Atom> {
        let span = self.span();
        let term = match self.advance() {
            Tok::Int(n) => Term::ValLit(n),
            Tok::Str(s) => Term::IdLit(s),
            Tok::Time(k, ms) => Term::TimeLit(k, ms),
            Tok::LParen => {
                let items = self.comma_list(Tok::RParen)?;
                if items.len() == 1 {
                    items.into_iter().next().unwrap()
                } else {
                    return Ok(Atom::Args(items, span));
                }
            }
            Tok::LAngle => {
                let items = self.comma_list(Tok::RAngle)?;
                items.into_iter().rev().reduce(|acc, x| Term::pair(x, acc)).unwrap()
            }
            tok @ (Tok::Hash | Tok::HashBang) => {
                let pspan = self.span();
                let name = self.ident()?;
                let tag = PrimTag::from_keyword(&name)
                    .ok_or_else(|| Diagnostic::error(pspan, format!("`{name}` is not a built-in predicate")))?;
                let args = self.pred_args(tag)?;
                if tok == Tok::Hash {
                    Term::PrimProof(tag, args)
                } else {
                    Term::PrimRefute(tag, args)
                }
            }
            Tok::Ident(word) => self.word(&word, span)?,
            t => return Err(Diagnostic::error(span, format!("expected a term, found {}", t.describe()))),
        };
        Ok(Atom::Term(term))
    }

    fn word(&mut self, word: &str, span: Span) -> PResult<Term> {
        if let Some(s) = sort_keyword(word) {
            return Ok(Term::Sort(s));
        }
        if let Some(tag) = PrimTag::from_keyword(word) {
            return Ok(Term::Pred(tag, self.pred_args(tag)?));
        }
        Ok(match word {
            "refl" => Term::Refl,
            "Empty" => Term::Empty,
            "Val" => Term::Base(BaseType::Val),
            "Time" => Term::Base(BaseType::Time),
            "ID" => Term::Base(BaseType::Id),
            "Id" => {
                let a = self.call_args_n("Id", 3)?;
                let [t, u, v] = <[Term; 3]>::try_from(a).unwrap();
                Term::id_type(t, u, v)
            }
            "inl" | "inr" => {
                let a = self.call_args_n(word, 2)?;
                let [x, ann] = <[Term; 2]>::try_from(a).unwrap();
                if word == "inl" {
                    Term::inl(x, ann)
                } else {
                    Term::inr(x, ann)
                }
            }
            "absurd" => {
                let a = self.call_args_n("absurd", 2)?;
                let [c, e] = <[Term; 2]>::try_from(a).unwrap();
                Term::absurd(c, e)
            }
            "J" => {
                let a = self.call_args_n("J", 3)?;
                let [m, b, p] = <[Term; 3]>::try_from(a).unwrap();
                Term::j(m, b, p)
            }
            "split" => {
                self.expect(Tok::LParen)?;
                let p = self.expr()?;
                self.expect(Tok::Comma)?;
                let x = self.binder_name()?;
                let y = self.binder_name()?;
                self.expect(Tok::Dot)?;
                let body = self.with_bound(&[x.clone(), y.clone()], |p| p.expr())?;
                self.expect(Tok::RParen)?;
                Term::Split(Box::new(p), Name::new(x), Name::new(y), Box::new(body))
            }
            "case" => {
                self.expect(Tok::LParen)?;
                let s = self.expr()?;
                self.expect(Tok::Comma)?;
                let x = self.binder_name()?;
                self.expect(Tok::Dot)?;
                let l = self.with_bound(std::slice::from_ref(&x), |p| p.expr())?;
                self.expect(Tok::Comma)?;
                let y = self.binder_name()?;
                self.expect(Tok::Dot)?;
                let r = self.with_bound(std::slice::from_ref(&y), |p| p.expr())?;
                self.expect(Tok::RParen)?;
                Term::Case(Box::new(s), Name::new(x), Box::new(l), Name::new(y), Box::new(r))
            }
            "let" | "in" => return Err(Diagnostic::error(span, format!("unexpected `{word}`"))),
            _ => self.resolve(word, span)?,
        })
    }

    // ----- declarations -----

    fn sort_expr(&mut self) -> PResult<Sort> {
        let span = self.span();
        match self.expr()? {
            Term::Sort(s) => Ok(s),
            _ => Err(Diagnostic::error(span, "expected a sort such as Prop, Type1 or U0")),
        }
    }

    fn declare(&mut self, name: &str, span: Span) -> PResult<()> {
        if is_reserved(name) || name == NOW {
            return Err(Diagnostic::error(span, format!("`{name}` is reserved")));
        }
        if !self.globals.insert(name.to_owned()) {
            return Err(Diagnostic::error(span, format!("duplicate name `{name}`")));
        }
        Ok(())
    }

    fn decl(&mut self) -> PResult<Decl> {
        let span = self.span();
        let kw = self.ident()?;
        let kind = match kw.as_str() {
            "sort" => {
                let nspan = self.span();
                let name = self.ident()?;
                let sort = if self.eat(&Tok::Colon) { self.sort_expr()? } else { Sort::Data(0) };
                self.expect(Tok::Semi)?;
                self.declare(&name, nspan)?;
                DeclKind::Sort { name, sort }
            }
            "axiom" => {
                let nspan = self.span();
                let name = self.ident()?;
                self.expect(Tok::Colon)?;
                let ty = self.expr()?;
                self.expect(Tok::Semi)?;
                self.declare(&name, nspan)?;
                DeclKind::Axiom { name, ty }
            }
            "type" => {
                let nspan = self.span();
                let name = self.ident()?;
                let sort = if self.eat(&Tok::Colon) { Some(self.sort_expr()?) } else { None };
                self.expect(Tok::Eq)?;
                let body = self.expr()?;
                self.expect(Tok::Semi)?;
                self.declare(&name, nspan)?;
                DeclKind::Type { name, sort, body }
            }
            "def" => {
                let nspan = self.span();
                let name = self.ident()?;
                let ty = if self.eat(&Tok::Colon) { Some(self.expr()?) } else { None };
                self.expect(Tok::Eq)?;
                let body = self.expr()?;
                self.expect(Tok::Semi)?;
                self.declare(&name, nspan)?;
                DeclKind::Def { name, ty, body }
            }
            "fact" => {
                let nspan = self.span();
                let id = self.ident()?;
                self.expect(Tok::Colon)?;
                let ty = self.expr()?;
                self.expect(Tok::Eq)?;
                let body = self.expr()?;
                self.expect(Tok::Semi)?;
                self.declare(&id, nspan)?;
                DeclKind::Fact { id, ty, body }
            }
            "event" => {
                let nspan = self.span();
                let name = self.ident()?;
                self.declare(&name, nspan)?;
                DeclKind::Event(self.event_body(name)?)
            }
            "template" => {
                let nspan = self.span();
                let name = self.ident()?;
                self.declare(&name, nspan)?;
                DeclKind::Template(self.template_body(name)?)
            }
            "watcher" => {
                let nspan = self.span();
                let name = self.ident()?;
                self.declare(&name, nspan)?;
                DeclKind::Watcher(self.watcher_body(name)?)
            }
            other => {
                return Err(Diagnostic::error(span, format!("unknown declaration keyword `{other}`"))
                    .with_note(format!("expected one of: {}", DECL_KEYWORDS.join(", "))))
            }
        };
        Ok(Decl::new(span, kind))
    }

    fn event_body(&mut self, name: String) -> PResult<EventDecl> {
        self.expect(Tok::LParen)?;
        let binder = self.binder_name()?;
        self.expect(Tok::Colon)?;
        let args_ty = self.expr()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::LBrace)?;
        let had_now = self.globals.insert(NOW.to_owned());
        let scope = [binder.clone()];
        let mut ev = EventDecl { name, binder, args_ty, pre: None, effects: Vec::new(), post: None };
        let result = (|| -> PResult<()> {
            while !self.eat(&Tok::RBrace) {
                let span = self.span();
                let kw = self.ident()?;
                match kw.as_str() {
                    "pre" if ev.pre.is_none() && ev.effects.is_empty() => {
                        ev.pre = Some(self.with_bound(&scope, |p| p.expr())?);
                    }
                    "post" if ev.post.is_none() => {
                        ev.post = Some(self.with_bound(&scope, |p| p.expr())?);
                    }
                    "add" if ev.post.is_none() => {
                        let id = match self.peek().clone() {
                            Tok::Str(s) => {
                                self.advance();
                                s
                            }
                            _ => {
                                let id = self.ident()?;
                                self.globals.insert(id.clone());
                                id
                            }
                        };
                        self.expect(Tok::Colon)?;
                        let ty = self.with_bound(&scope, |p| p.expr())?;
                        self.expect(Tok::Eq)?;
                        let term = self.with_bound(&scope, |p| p.expr())?;
                        ev.effects.push(EffectDecl::Add { id, ty, term });
                    }
                    "retract" if ev.post.is_none() => {
                        let id = self.ident()?;
                        ev.effects.push(EffectDecl::Retract(id));
                    }
                    "emit" if ev.post.is_none() => {
                        let event = self.ident()?;
                        let args = self.with_bound(&scope, |p| p.expr())?;
                        ev.effects.push(EffectDecl::Emit { event, args });
                    }
                    _ => {
                        return Err(Diagnostic::error(span, format!("unexpected `{kw}` in event body"))
                            .with_note("clauses are: pre, then add/retract/emit, then post"))
                    }
                }
                self.expect(Tok::Semi)?;
            }
            Ok(())
        })();
        if had_now {
            self.globals.remove(NOW);
        }
        result.map(|_| ev)
    }

    fn dexpr(&mut self) -> PResult<DExpr> {
        let mut lhs = self.dexpr_atom()?;
        while self.eat(&Tok::Plus) {
            let rhs = self.dexpr_atom()?;
            lhs = DExpr::Add(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn dexpr_atom(&mut self) -> PResult<DExpr> {
        match self.peek().clone() {
            Tok::Question => {
                self.advance();
                Ok(DExpr::Hole)
            }
            Tok::Int(n) => {
                self.advance();
                Ok(DExpr::Int(n))
            }
            Tok::LAngle => {
                self.advance();
                let mut items = vec![self.dexpr()?];
                while self.eat(&Tok::Comma) {
                    items.push(self.dexpr()?);
                }
                self.expect(Tok::RAngle)?;
                Ok(DExpr::Tuple(items))
            }
            Tok::Ident(w) if w == "wall_time" => {
                self.advance();
                Ok(DExpr::WallTime)
            }
            Tok::Ident(w) if matches!(w.as_str(), "field" | "byte" | "stamp" | "ident") && self.peek_at(1) == &Tok::LParen => {
                self.advance();
                self.advance();
                let d = match w.as_str() {
                    "field" => DExpr::Field(self.string()?),
                    "byte" => DExpr::Byte(self.small_int()?),
                    "stamp" => DExpr::Stamp(Box::new(self.dexpr()?)),
                    _ => DExpr::IdOf(Box::new(self.dexpr()?)),
                };
                self.expect(Tok::RParen)?;
                Ok(d)
            }
            _ => Ok(DExpr::Term(self.app()?)),
        }
    }

    fn skel(&mut self) -> PResult<Skel> {
        if self.eat(&Tok::Question) {
            return Ok(Skel::Hole);
        }
        if self.eat(&Tok::LAngle) {
            let mut items = vec![self.skel()?];
            while self.eat(&Tok::Comma) {
                items.push(self.skel()?);
            }
            self.expect(Tok::RAngle)?;
            return Ok(Skel::Tuple(items));
        }
        Ok(Skel::Term(self.app()?))
    }

    fn template_body(&mut self, name: String) -> PResult<TemplateDecl> {
        self.expect_word("on")?;
        let kind = self.string()?;
        let mut when = Vec::new();
        while self.at_word("when") {
            self.advance();
            let l = self.dexpr()?;
            self.expect(Tok::EqEq)?;
            let r = self.dexpr()?;
            when.push((l, r));
        }
        let requires = if self.at_word("requires") {
            self.advance();
            let binder = self.binder_name()?;
            self.expect(Tok::Colon)?;
            let ty = self.app()?;
            self.expect_word("where")?;
            let lhs = self.with_bound(std::slice::from_ref(&binder), |p| p.app())?;
            self.expect(Tok::EqEq)?;
            let rhs = self.dexpr()?;
            Some(Requires { binder, ty, lhs, rhs })
        } else {
            None
        };
        self.expect(Tok::FatArrow)?;
        let event = self.ident()?;
        let scope: Vec<String> = requires.iter().map(|r| r.binder.clone()).collect();
        let args = self.with_bound(&scope, |p| p.dexpr())?;
        self.expect(Tok::Semi)?;
        Ok(TemplateDecl { name, kind, when, requires, event, args })
    }

    fn typed_binder(&mut self) -> PResult<(String, Term)> {
        self.expect(Tok::LParen)?;
        let name = self.binder_name()?;
        self.expect(Tok::Colon)?;
        let ty = self.expr()?;
        self.expect(Tok::RParen)?;
        Ok((name, ty))
    }

    fn watcher_body(&mut self, name: String) -> PResult<WatcherDecl> {
        if self.at_word("trace") {
            self.advance();
            let subject = self.typed_binder()?;
            self.expect(Tok::FatArrow)?;
            let event = self.ident()?;
            self.expect(Tok::Semi)?;
            return Ok(WatcherDecl::Trace { name, subject, event });
        }
        self.expect_word("on")?;
        let subject = self.typed_binder()?;
        self.expect_word("join")?;
        let partner = self.typed_binder()?;
        let names = [subject.0.clone(), partner.0.clone()];
        self.expect_word("key")?;
        let (key, guard) = self.with_bound(&names, |p| {
            let l = p.app()?;
            p.expect(Tok::EqEq)?;
            let r = p.app()?;
            let guard = if p.at_word("guard") {
                p.advance();
                Some(p.app()?)
            } else {
                None
            };
            Ok(((l, r), guard))
        })?;
        self.expect(Tok::FatArrow)?;
        let event = self.ident()?;
        let args = self.with_bound(&names, |p| p.skel())?;
        self.expect(Tok::Semi)?;
        Ok(WatcherDecl::Join { name, subject, partner, key, guard, event, args })
    }

    fn recover(&mut self) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Semi | Tok::RBrace => {
                    self.advance();
                    if matches!(self.peek(), Tok::Ident(w) if DECL_KEYWORDS.contains(&w.as_str())) {
                        return;
                    }
                }
                _ => {
                    self.advance();
                }
            }
        }
    }

    fn at_decl_boundary(&self) -> bool {
        let after_end = self.pos > 0 && matches!(self.toks[self.pos - 1].tok, Tok::Semi | Tok::RBrace);
        after_end && (self.at_eof() || matches!(self.peek(), Tok::Ident(w) if DECL_KEYWORDS.contains(&w.as_str())))
    }

    pub fn module(&mut self) -> (ModuleAst, Vec<Diagnostic>) {
        let mut module = ModuleAst::default();
        let mut diags = Vec::new();
        while !self.at_eof() {
            let before = self.pos;
            match self.decl() {
                Ok(d) => module.decls.push(d),
                Err(e) => {
                    diags.push(e);
                    self.scope.clear();
                    if !self.at_decl_boundary() {
                        if self.pos == before {
                            self.advance();
                        }
                        self.recover();
                    }
                }
            }
        }
        check_references(&module, &mut diags);
        (module, diags)
    }
}

/// Cross-declaration checks that need the whole module.
fn check_references(module: &ModuleAst, diags: &mut Vec<Diagnostic>) {
    let events: HashSet<&str> = module
        .decls
        .iter()
        .filter_map(|d| match &d.kind {
            DeclKind::Event(e) => Some(e.name.as_str()),
            _ => None,
        })
        .collect();
    for d in &module.decls {
        let mut targets = Vec::new();
        match &d.kind {
            DeclKind::Event(e) => {
                for eff in &e.effects {
                    if let EffectDecl::Emit { event, .. } = eff {
                        targets.push(event.as_str());
                    }
                }
            }
            DeclKind::Template(t) => targets.push(t.event.as_str()),
            DeclKind::Watcher(WatcherDecl::Join { event, .. } | WatcherDecl::Trace { event, .. }) => {
                targets.push(event.as_str())
            }
            _ => {}
        }
        for t in targets {
            if !events.contains(t) {
                diags.push(Diagnostic::error(d.span(), format!("`{}` refers to unknown event `{t}`", d.kind.name())));
            }
        }
    }
}

/// Parses a whole module. Succeeds when there are no error diagnostics.
pub fn parse_defs(src: &str) -> Result<(ModuleAst, Vec<Diagnostic>), Vec<Diagnostic>> {
    let mut p = match Parser::new(src, HashSet::new()) {
        Ok(p) => p,
        Err(d) => return Err(vec![d]),
    };
    let (module, diags) = p.module();
    if diags.iter().any(Diagnostic::is_error) {
        Err(diags)
    } else {
        Ok((module, diags))
    }
}

/// Parses a single closed term; `globals` lists the constants it may mention.
pub fn parse_term_with(src: &str, globals: &HashSet<String>) -> Result<Term, Diagnostic> {
    let mut p = Parser::new(src, globals.clone())?;
    let t = p.expr()?;
    if !p.at_eof() {
        return Err(p.unexpected("end of input"));
    }
    Ok(t)
}

pub fn parse_term(src: &str) -> Result<Term, Diagnostic> {
    parse_term_with(src, &HashSet::new())
}
