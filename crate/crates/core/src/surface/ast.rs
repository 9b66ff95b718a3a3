//! Declarations of a `.kos` module. Terms are already name-resolved: locals
//! are de Bruijn indices, globals are constants.

use num_bigint::BigUint;

use super::diag::Span;
use crate::term::{Sort, Term};

/// Equality ignores source positions so that reparsed modules compare equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct At(pub Span);

impl PartialEq for At {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModuleAst {
    pub decls: Vec<Decl>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decl {
    pub at: At,
    pub kind: DeclKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeclKind {
    /// `sort Name : U0` introduces an opaque type.
    Sort { name: String, sort: Sort },
    /// `axiom name : T`
    Axiom { name: String, ty: Term },
    /// `type Name (: S)? = T`
    Type { name: String, sort: Option<Sort>, body: Term },
    /// `def name (: T)? = e`
    Def { name: String, ty: Option<Term>, body: Term },
    /// `fact id : T = e`, an initial knowledge item.
    Fact { id: String, ty: Term, body: Term },
    Event(EventDecl),
    Template(TemplateDecl),
    Watcher(WatcherDecl),
}

impl DeclKind {
    pub fn name(&self) -> &str {
        match self {
            DeclKind::Sort { name, .. }
            | DeclKind::Axiom { name, .. }
            | DeclKind::Type { name, .. }
            | DeclKind::Def { name, .. } => name,
            DeclKind::Fact { id, .. } => id,
            DeclKind::Event(e) => &e.name,
            DeclKind::Template(t) => &t.name,
            DeclKind::Watcher(w) => w.name(),
        }
    }
}

/// `event name (a : Args) { pre P; effects...; post Q; }`. Clause terms are
/// under the single argument binder.
#[derive(Debug, Clone, PartialEq)]
pub struct EventDecl {
    pub name: String,
    pub binder: String,
    pub args_ty: Term,
    pub pre: Option<Term>,
    pub effects: Vec<EffectDecl>,
    pub post: Option<Term>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EffectDecl {
    /// `add id : T = e;` where `id` may contain `{now}`.
    Add { id: String, ty: Term, term: Term },
    /// `retract id;`
    Retract(String),
    /// `emit event e;`
    Emit { event: String, args: Term },
}

/// Decoding recipe evaluated against a raw signal.
#[derive(Debug, Clone, PartialEq)]
pub enum DExpr {
    /// `field("name")` from the structured payload.
    Field(String),
    /// `byte(i)` of the hex `raw` payload.
    Byte(usize),
    Int(BigUint),
    /// `stamp(e)`: a number of milliseconds as a time stamp.
    Stamp(Box<DExpr>),
    /// `id(e)`: a payload string or number as an identifier literal.
    IdOf(Box<DExpr>),
    WallTime,
    Add(Box<DExpr>, Box<DExpr>),
    Tuple(Vec<DExpr>),
    /// Proof obligation filled by search.
    Hole,
    /// Any other term; under the `requires` binder when there is one.
    Term(Term),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Requires {
    pub binder: String,
    pub ty: Term,
    /// Under the binder.
    pub lhs: Term,
    pub rhs: DExpr,
}

/// `template name on "kind" (when a == b)* (requires x : T where t == d)? => event args;`
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateDecl {
    pub name: String,
    pub kind: String,
    pub when: Vec<(DExpr, DExpr)>,
    pub requires: Option<Requires>,
    pub event: String,
    pub args: DExpr,
}

/// Event arguments built from terms and `?` holes.
#[derive(Debug, Clone, PartialEq)]
pub enum Skel {
    Term(Term),
    Tuple(Vec<Skel>),
    Hole,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WatcherDecl {
    /// `watcher n on (s : S) join (p : P) key ks == kp (guard g)? => event args;`
    /// Key, guard and args are under the two binders (`p` innermost).
    Join {
        name: String,
        subject: (String, Term),
        partner: (String, Term),
        key: (Term, Term),
        guard: Option<Term>,
        event: String,
        args: Skel,
    },
    /// `watcher n trace (f : F) => event;` builds a root-cause report for each new `F`.
    Trace { name: String, subject: (String, Term), event: String },
}

impl WatcherDecl {
    pub fn name(&self) -> &str {
        match self {
            WatcherDecl::Join { name, .. } | WatcherDecl::Trace { name, .. } => name,
        }
    }
}

impl TemplateDecl {
    pub fn binder(&self) -> Option<&str> {
        self.requires.as_ref().map(|r| r.binder.as_str())
    }
}

impl EventDecl {
    pub fn clause_scope(&self) -> Vec<String> {
        vec![self.binder.clone()]
    }
}

impl Decl {
    pub fn new(span: Span, kind: DeclKind) -> Self {
        Decl { at: At(span), kind }
    }

    pub fn span(&self) -> Span {
        self.at.0
    }
}
