//! Rendering terms and modules back to surface syntax.
//!
//! Output reparses to an alpha-equivalent term: binder names are freshened
//! against enclosing binders, constants and reserved words.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::ast::*;
use super::lexer::format_time;
use super::parser::{is_reserved, NOW};
use crate::search::RootCause;
use crate::term::{BaseType, PrimTag, Sort, Term};

// Precedence levels, loosest first.
const EXPR: u8 = 0;
const SUM: u8 = 1;
const PROD: u8 = 2;
const APP: u8 = 3;
const POSTFIX: u8 = 4;

pub fn print_term(t: &Term) -> String {
    print_term_in(t, &[])
}

/// Prints `t` with free variables named by `scope` (outermost first).
pub fn print_term_in(t: &Term, scope: &[String]) -> String {
    let mut p = Printer { scope: scope.to_vec(), constants: t.constants(), out: String::new() };
    p.term(t, EXPR);
    p.out
}

struct Printer {
    scope: Vec<String>,
    constants: BTreeSet<String>,
    out: String,
}

fn valid_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_alphabetic() || c == '_')
        && cs.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

fn sort_name(s: Sort) -> String {
    match s {
        Sort::Prop => "Prop".into(),
        Sort::Type(i) => format!("Type{i}"),
        Sort::Data(i) => format!("U{i}"),
    }
}

fn quote(s: &str) -> String {
    let mut q = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

impl Printer {
    fn fresh(&self, hint: &str) -> String {
        let base = if hint.is_empty() || hint == "_" || !valid_ident(hint) { "x" } else { hint };
        let taken = |n: &str| {
            self.scope.iter().any(|s| s == n) || self.constants.contains(n) || is_reserved(n) || n == NOW
        };
        if !taken(base) {
            return base.to_owned();
        }
        let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
        let stem = if stem.is_empty() { "x" } else { stem };
        (1..).map(|i| format!("{stem}{i}")).find(|n| !taken(n)).unwrap()
    }

    fn bind<R>(&mut self, hint: &str, f: impl FnOnce(&mut Self, &str) -> R) -> R {
        let name = self.fresh(hint);
        self.scope.push(name.clone());
        let r = f(self, &name);
        self.scope.pop();
        r
    }

    fn open(&mut self, wrap: bool) {
        if wrap {
            self.out.push('(');
        }
    }

    fn close(&mut self, wrap: bool) {
        if wrap {
            self.out.push(')');
        }
    }

    fn list(&mut self, items: &[&Term]) {
        for (i, t) in items.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.term(t, EXPR);
        }
    }

    fn call(&mut self, head: &str, items: &[&Term]) {
        self.out.push_str(head);
        self.out.push('(');
        self.list(items);
        self.out.push(')');
    }

    fn prim(&mut self, prefix: &str, tag: PrimTag, args: &[Term]) {
        self.out.push_str(prefix);
        self.out.push_str(tag.keyword());
        self.out.push('(');
        if tag == PrimTag::InSet && !args.is_empty() {
            self.term(&args[0], EXPR);
            self.out.push_str(", [");
            let rest: Vec<&Term> = args[1..].iter().collect();
            self.list(&rest);
            self.out.push_str("])");
        } else {
            let all: Vec<&Term> = args.iter().collect();
            self.list(&all);
            self.out.push(')');
        }
    }

    fn term(&mut self, t: &Term, level: u8) {
        match t {
            Term::Var(i) => {
                let name = self.scope.len().checked_sub(i + 1).map(|k| self.scope[k].clone());
                match name {
                    Some(n) => self.out.push_str(&n),
                    None => {
                        let _ = write!(self.out, "^{i}");
                    }
                }
            }
            Term::Const(c) => self.out.push_str(c),
            Term::Lam(..) => {
                let wrap = level > EXPR;
                self.open(wrap);
                self.out.push('\\');
                self.lambda_chain(t, 0);
                self.close(wrap);
            }
            Term::Let(x, v, ty, b) => {
                let wrap = level > EXPR;
                self.open(wrap);
                let name = self.fresh(x.as_str());
                let _ = write!(self.out, "let {name}");
                if let Some(ty) = ty {
                    self.out.push_str(" : ");
                    self.term(ty, EXPR);
                }
                self.out.push_str(" = ");
                self.term(v, EXPR);
                self.out.push_str(" in ");
                self.scope.push(name);
                self.term(b, EXPR);
                self.scope.pop();
                self.close(wrap);
            }
            Term::Pi(x, a, b) => {
                let wrap = level > EXPR;
                self.open(wrap);
                if b.has_free(0) {
                    let name = self.fresh(x.as_str());
                    let _ = write!(self.out, "({name} : ");
                    self.term(a, EXPR);
                    self.out.push_str(") -> ");
                    self.scope.push(name);
                } else {
                    self.term(a, SUM);
                    self.out.push_str(" -> ");
                    self.scope.push("_".into());
                }
                self.term(b, EXPR);
                self.scope.pop();
                self.close(wrap);
            }
            Term::Sigma(x, a, b) => {
                let wrap = level > PROD;
                self.open(wrap);
                if b.has_free(0) {
                    let name = self.fresh(x.as_str());
                    let _ = write!(self.out, "({name} : ");
                    self.term(a, EXPR);
                    self.out.push_str(") * ");
                    self.scope.push(name);
                } else {
                    self.term(a, APP);
                    self.out.push_str(" * ");
                    self.scope.push("_".into());
                }
                self.term(b, PROD);
                self.scope.pop();
                self.close(wrap);
            }
            Term::Sum(a, b) => {
                let wrap = level > SUM;
                self.open(wrap);
                self.term(a, PROD);
                self.out.push_str(" + ");
                self.term(b, SUM);
                self.close(wrap);
            }
            Term::App(..) => {
                let wrap = level > APP;
                self.open(wrap);
                let mut args = Vec::new();
                let mut head = t;
                while let Term::App(f, a) = head {
                    args.push(&**a);
                    head = f;
                }
                args.reverse();
                self.term(head, POSTFIX);
                self.out.push('(');
                self.list(&args);
                self.out.push(')');
                self.close(wrap);
            }
            Term::Pair(..) => {
                let mut items = Vec::new();
                let mut cur = t;
                while let Term::Pair(a, b) = cur {
                    items.push(&**a);
                    cur = b;
                }
                items.push(cur);
                self.out.push('<');
                self.list(&items);
                self.out.push('>');
            }
            Term::Split(p, _, _, body) if matches!(**body, Term::Var(0) | Term::Var(1)) => {
                self.term(p, POSTFIX);
                self.out.push_str(if **body == Term::Var(1) { ".1" } else { ".2" });
            }
            Term::Split(p, x, y, body) => {
                self.out.push_str("split(");
                self.term(p, EXPR);
                let nx = self.fresh(x.as_str());
                self.scope.push(nx.clone());
                let ny = self.fresh(y.as_str());
                self.scope.push(ny.clone());
                let _ = write!(self.out, ", {nx} {ny}. ");
                self.term(body, EXPR);
                self.scope.truncate(self.scope.len() - 2);
                self.out.push(')');
            }
            Term::Case(s, x, l, y, r) => {
                self.out.push_str("case(");
                self.term(s, EXPR);
                self.bind(x.as_str(), |p, n| {
                    let _ = write!(p.out, ", {n}. ");
                    p.term(l, EXPR);
                });
                self.bind(y.as_str(), |p, n| {
                    let _ = write!(p.out, ", {n}. ");
                    p.term(r, EXPR);
                });
                self.out.push(')');
            }
            Term::Inl(a, b) => self.call("inl", &[a, b]),
            Term::Inr(a, b) => self.call("inr", &[a, b]),
            Term::J(m, b, p) => self.call("J", &[m, b, p]),
            Term::Absurd(c, e) => self.call("absurd", &[c, e]),
            Term::IdType(a, u, v) => self.call("Id", &[a, u, v]),
            Term::Refl => self.out.push_str("refl"),
            Term::Sort(s) => self.out.push_str(&sort_name(*s)),
            Term::Base(b) => self.out.push_str(match b {
                BaseType::Val => "Val",
                BaseType::Time => "Time",
                BaseType::Id => "ID",
            }),
            Term::Empty => self.out.push_str("Empty"),
            Term::ValLit(n) => {
                let _ = write!(self.out, "{n}");
            }
            Term::TimeLit(k, ms) => self.out.push_str(&format_time(*k, *ms)),
            Term::IdLit(s) => self.out.push_str(&quote(s)),
            Term::Pred(tag, args) => self.prim("", *tag, args),
            Term::PrimProof(tag, args) => self.prim("#", *tag, args),
            Term::PrimRefute(tag, args) => self.prim("#!", *tag, args),
        }
    }

    fn lambda_chain(&mut self, t: &Term, bound: usize) {
        match t {
            Term::Lam(x, ty, body) => {
                let name = self.fresh(x.as_str());
                if bound > 0 {
                    self.out.push(' ');
                }
                match ty {
                    Some(ty) => {
                        let _ = write!(self.out, "({name} : ");
                        self.term(ty, EXPR);
                        self.out.push(')');
                    }
                    None => self.out.push_str(&name),
                }
                self.scope.push(name);
                self.lambda_chain(body, bound + 1);
                self.scope.pop();
            }
            _ => {
                self.out.push_str(". ");
                self.term(t, EXPR);
            }
        }
    }
}

// ----- modules -----

fn dexpr(d: &DExpr, scope: &[String], out: &mut String) {
    match d {
        DExpr::Field(f) => {
            let _ = write!(out, "field({})", quote(f));
        }
        DExpr::Byte(i) => {
            let _ = write!(out, "byte({i})");
        }
        DExpr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        DExpr::Stamp(e) | DExpr::IdOf(e) => {
            out.push_str(if matches!(d, DExpr::Stamp(_)) { "stamp(" } else { "ident(" });
            dexpr(e, scope, out);
            out.push(')');
        }
        DExpr::WallTime => out.push_str("wall_time"),
        DExpr::Add(a, b) => {
            dexpr(a, scope, out);
            out.push_str(" + ");
            dexpr(b, scope, out);
        }
        DExpr::Tuple(items) => {
            out.push('<');
            for (i, e) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                dexpr(e, scope, out);
            }
            out.push('>');
        }
        DExpr::Hole => out.push('?'),
        DExpr::Term(t) => out.push_str(&app_level(t, scope)),
    }
}

/// Terms in declaration positions that parse only an application.
fn app_level(t: &Term, scope: &[String]) -> String {
    let s = print_term_in(t, scope);
    match t {
        Term::Lam(..) | Term::Let(..) | Term::Pi(..) | Term::Sigma(..) | Term::Sum(..) => format!("({s})"),
        _ => s,
    }
}

fn skel(s: &Skel, scope: &[String], out: &mut String) {
    match s {
        Skel::Hole => out.push('?'),
        Skel::Term(t) => out.push_str(&app_level(t, scope)),
        Skel::Tuple(items) => {
            out.push('<');
            for (i, e) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                skel(e, scope, out);
            }
            out.push('>');
        }
    }
}

pub fn print_decl(d: &DeclKind) -> String {
    let t = |t: &Term| print_term(t);
    match d {
        DeclKind::Sort { name, sort } => format!("sort {name} : {};", sort_name(*sort)),
        DeclKind::Axiom { name, ty } => format!("axiom {name} : {};", t(ty)),
        DeclKind::Type { name, sort, body } => match sort {
            Some(s) => format!("type {name} : {} = {};", sort_name(*s), t(body)),
            None => format!("type {name} = {};", t(body)),
        },
        DeclKind::Def { name, ty, body } => match ty {
            Some(ty) => format!("def {name} : {} = {};", t(ty), t(body)),
            None => format!("def {name} = {};", t(body)),
        },
        DeclKind::Fact { id, ty, body } => format!("fact {id} : {} = {};", t(ty), t(body)),
        DeclKind::Event(e) => {
            let scope = [e.binder.clone()];
            let c = |t: &Term| print_term_in(t, &scope);
            let mut out = format!("event {} ({} : {}) {{\n", e.name, e.binder, t(&e.args_ty));
            if let Some(p) = &e.pre {
                let _ = writeln!(out, "    pre {};", c(p));
            }
            for eff in &e.effects {
                let _ = match eff {
                    EffectDecl::Add { id, ty, term } => {
                        let id = if valid_ident(id) && !is_reserved(id) { id.clone() } else { quote(id) };
                        writeln!(out, "    add {id} : {} = {};", c(ty), c(term))
                    }
                    EffectDecl::Retract(id) => writeln!(out, "    retract {id};"),
                    EffectDecl::Emit { event, args } => writeln!(out, "    emit {event} {};", app_level(args, &scope)),
                };
            }
            if let Some(p) = &e.post {
                let _ = writeln!(out, "    post {};", c(p));
            }
            out.push('}');
            out
        }
        DeclKind::Template(tp) => {
            let mut out = format!("template {} on {}", tp.name, quote(&tp.kind));
            for (l, r) in &tp.when {
                out.push_str(" when ");
                dexpr(l, &[], &mut out);
                out.push_str(" == ");
                dexpr(r, &[], &mut out);
            }
            let mut scope = Vec::new();
            if let Some(r) = &tp.requires {
                let _ = write!(out, " requires {} : {} where ", r.binder, app_level(&r.ty, &[]));
                scope.push(r.binder.clone());
                out.push_str(&app_level(&r.lhs, &scope));
                out.push_str(" == ");
                dexpr(&r.rhs, &[], &mut out);
            }
            let _ = write!(out, " => {} ", tp.event);
            dexpr(&tp.args, &scope, &mut out);
            out.push(';');
            out
        }
        DeclKind::Watcher(WatcherDecl::Trace { name, subject, event }) => {
            format!("watcher {name} trace ({} : {}) => {event};", subject.0, t(&subject.1))
        }
        DeclKind::Watcher(WatcherDecl::Join { name, subject, partner, key, guard, event, args }) => {
            let scope = [subject.0.clone(), partner.0.clone()];
            let mut out = format!(
                "watcher {name} on ({} : {}) join ({} : {}) key {} == {}",
                subject.0,
                t(&subject.1),
                partner.0,
                t(&partner.1),
                app_level(&key.0, &scope),
                app_level(&key.1, &scope)
            );
            if let Some(g) = guard {
                let _ = write!(out, " guard {}", app_level(g, &scope));
            }
            let _ = write!(out, " => {event} ");
            skel(args, &scope, &mut out);
            out.push(';');
            out
        }
    }
}

pub fn print_module(m: &ModuleAst) -> String {
    let mut out = String::new();
    for d in &m.decls {
        out.push_str(&print_decl(&d.kind));
        out.push('\n');
    }
    out
}

/// Human-readable root-cause report: the chosen item for each component of
/// the report type, then every comparison verified along the way.
pub fn print_report(r: &RootCause) -> String {
    let mut out = String::from("root cause report\n");
    let width = r.parts.iter().map(|(b, _)| b.len()).max().unwrap_or(0);
    for (binder, id) in &r.parts {
        let _ = writeln!(out, "  {binder:<width$} = {id}");
    }
    if !r.leaves.is_empty() {
        out.push_str("verified\n");
        for leaf in &r.leaves {
            let _ = writeln!(out, "  {}", leaf.render());
        }
    }
    let _ = writeln!(out, "witness {}", print_term(&r.report));
    out
}
