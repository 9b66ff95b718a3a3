//! Abstract syntax of the core calculus.
//!
//! Variables are de Bruijn indices: `Var(0)` is the innermost binder. Binder
//! names are kept only as printing hints ([`Name`]) and never take part in
//! equality or hashing, so the derived `PartialEq` on [`Term`] is
//! alpha-equivalence.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::digest::{Digest, Encoder};

/// A binder name hint. All names compare equal.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Name(pub String);

impl Name {
    pub fn new(s: impl Into<String>) -> Self {
        Name(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl PartialEq for Name {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Name {}

impl Hash for Name {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name(s.to_owned())
    }
}

/// Universe sorts on the logical axis (`Prop`, `Type(i)`) and the data axis (`Data(i)`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sort {
    Prop,
    /// Logical universe, level ≥ 1.
    Type(u32),
    /// Data universe, level ≥ 0.
    Data(u32),
}

impl Sort {
    /// The sort this sort inhabits.
    pub fn successor(self) -> Sort {
        match self {
            Sort::Prop => Sort::Type(1),
            Sort::Type(i) => Sort::Type(i + 1),
            Sort::Data(i) => Sort::Data(i + 1),
        }
    }

    /// One-way coercions: `Prop ↪ Data(1)`, `Data(i) ↪ Type(i+1)`, and their composite.
    pub fn embeds_into(self, target: Sort) -> bool {
        match (self, target) {
            (a, b) if a == b => true,
            (Sort::Prop, Sort::Data(1)) | (Sort::Prop, Sort::Type(2)) => true,
            (Sort::Data(i), Sort::Type(j)) => j == i + 1,
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaseType {
    Val,
    Time,
    Id,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TimeKind {
    /// Milliseconds since the Unix epoch.
    Stamp,
    /// A span in milliseconds.
    Duration,
}

/// Built-in decidable predicates over literals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PrimTag {
    LeVal,
    LtVal,
    EqVal,
    LeTime,
    LtTime,
    /// First operand is a member of the remaining operands.
    InSet,
    /// `a * 100 > b * pct` for operands `[a, b, pct]`.
    GtPct,
}

impl PrimTag {
    pub const ALL: [PrimTag; 7] = [
        PrimTag::LeVal,
        PrimTag::LtVal,
        PrimTag::EqVal,
        PrimTag::LeTime,
        PrimTag::LtTime,
        PrimTag::InSet,
        PrimTag::GtPct,
    ];

    /// Surface keyword.
    pub fn keyword(self) -> &'static str {
        match self {
            PrimTag::LeVal => "le",
            PrimTag::LtVal => "lt",
            PrimTag::EqVal => "eq",
            PrimTag::LeTime => "le_time",
            PrimTag::LtTime => "lt_time",
            PrimTag::InSet => "in_set",
            PrimTag::GtPct => "gt_pct",
        }
    }

    pub fn from_keyword(s: &str) -> Option<PrimTag> {
        PrimTag::ALL.into_iter().find(|t| t.keyword() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(usize),
    Const(String),
    /// `λ(x : A). body`; the domain annotation is optional for untyped use.
    Lam(Name, Option<Box<Term>>, Box<Term>),
    App(Box<Term>, Box<Term>),
    Pair(Box<Term>, Box<Term>),
    /// `split(p, x y. body)`; in `body`, `Var(1)` is `x` and `Var(0)` is `y`.
    Split(Box<Term>, Name, Name, Box<Term>),
    /// Left injection with the right summand as annotation.
    Inl(Box<Term>, Box<Term>),
    /// Right injection with the left summand as annotation.
    Inr(Box<Term>, Box<Term>),
    Case(Box<Term>, Name, Box<Term>, Name, Box<Term>),
    Refl,
    /// Identity elimination `J(motive, base, proof)`.
    J(Box<Term>, Box<Term>, Box<Term>),
    /// Ex falso: `absurd(C, e)` with `e : Empty`.
    Absurd(Box<Term>, Box<Term>),
    Pi(Name, Box<Term>, Box<Term>),
    Sigma(Name, Box<Term>, Box<Term>),
    Sum(Box<Term>, Box<Term>),
    IdType(Box<Term>, Box<Term>, Box<Term>),
    Sort(Sort),
    Base(BaseType),
    Empty,
    ValLit(BigUint),
    TimeLit(TimeKind, u64),
    IdLit(String),
    Let(Name, Box<Term>, Option<Box<Term>>, Box<Term>),
    /// Primitive proposition.
    Pred(PrimTag, Vec<Term>),
    /// Checkable witness of a true primitive proposition.
    PrimProof(PrimTag, Vec<Term>),
    /// Checkable witness that a primitive proposition implies `Empty`.
    PrimRefute(PrimTag, Vec<Term>),
}

// Constructors used throughout the crate and in tests.
impl Term {
    pub fn var(i: usize) -> Term {
        Term::Var(i)
    }

    pub fn cnst(name: impl Into<String>) -> Term {
        Term::Const(name.into())
    }

    pub fn lam(name: &str, dom: Term, body: Term) -> Term {
        Term::Lam(Name::new(name), Some(Box::new(dom)), Box::new(body))
    }

    pub fn lam_untyped(name: &str, body: Term) -> Term {
        Term::Lam(Name::new(name), None, Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }

    pub fn split(p: Term, x: &str, y: &str, body: Term) -> Term {
        Term::Split(Box::new(p), Name::new(x), Name::new(y), Box::new(body))
    }

    /// `split(p, x y. x)`
    pub fn proj1(p: Term) -> Term {
        Term::split(p, "x", "y", Term::Var(1))
    }

    /// `split(p, x y. y)`
    pub fn proj2(p: Term) -> Term {
        Term::split(p, "x", "y", Term::Var(0))
    }

    pub fn inl(a: Term, right: Term) -> Term {
        Term::Inl(Box::new(a), Box::new(right))
    }

    pub fn inr(b: Term, left: Term) -> Term {
        Term::Inr(Box::new(b), Box::new(left))
    }

    pub fn case(s: Term, x: &str, l: Term, y: &str, r: Term) -> Term {
        Term::Case(Box::new(s), Name::new(x), Box::new(l), Name::new(y), Box::new(r))
    }

    pub fn j(motive: Term, base: Term, proof: Term) -> Term {
        Term::J(Box::new(motive), Box::new(base), Box::new(proof))
    }

    pub fn absurd(target: Term, proof: Term) -> Term {
        Term::Absurd(Box::new(target), Box::new(proof))
    }

    pub fn pi(name: &str, dom: Term, cod: Term) -> Term {
        Term::Pi(Name::new(name), Box::new(dom), Box::new(cod))
    }

    /// Non-dependent function type; `cod` is shifted under the binder.
    pub fn arrow(dom: Term, cod: Term) -> Term {
        Term::pi("_", dom, cod.shift(1, 0))
    }

    pub fn sigma(name: &str, fst: Term, snd: Term) -> Term {
        Term::Sigma(Name::new(name), Box::new(fst), Box::new(snd))
    }

    /// Non-dependent product; `snd` is shifted under the binder.
    pub fn product(fst: Term, snd: Term) -> Term {
        Term::sigma("_", fst, snd.shift(1, 0))
    }

    pub fn sum(a: Term, b: Term) -> Term {
        Term::Sum(Box::new(a), Box::new(b))
    }

    pub fn id_type(carrier: Term, lhs: Term, rhs: Term) -> Term {
        Term::IdType(Box::new(carrier), Box::new(lhs), Box::new(rhs))
    }

    pub fn sort(s: Sort) -> Term {
        Term::Sort(s)
    }

    pub fn prop() -> Term {
        Term::Sort(Sort::Prop)
    }

    pub fn val_ty() -> Term {
        Term::Base(BaseType::Val)
    }

    pub fn time_ty() -> Term {
        Term::Base(BaseType::Time)
    }

    pub fn id_ty() -> Term {
        Term::Base(BaseType::Id)
    }

    pub fn val(n: u64) -> Term {
        Term::ValLit(BigUint::from(n))
    }

    pub fn stamp(ms: u64) -> Term {
        Term::TimeLit(TimeKind::Stamp, ms)
    }

    pub fn duration(ms: u64) -> Term {
        Term::TimeLit(TimeKind::Duration, ms)
    }

    pub fn id_lit(s: impl Into<String>) -> Term {
        Term::IdLit(s.into())
    }

    pub fn let_in(name: &str, bound: Term, ty: Option<Term>, body: Term) -> Term {
        Term::Let(Name::new(name), Box::new(bound), ty.map(Box::new), Box::new(body))
    }

    pub fn pred(tag: PrimTag, args: Vec<Term>) -> Term {
        Term::Pred(tag, args)
    }

    pub fn prim_proof(tag: PrimTag, args: Vec<Term>) -> Term {
        Term::PrimProof(tag, args)
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::ValLit(_) | Term::TimeLit(..) | Term::IdLit(_))
    }
}

impl Term {
    /// Adds `d` to every variable with index ≥ `cutoff`.
    pub fn shift(&self, d: isize, cutoff: usize) -> Term {
        if d == 0 {
            return self.clone();
        }
        self.map_vars(cutoff, &|i, depth| {
            if i >= depth {
                let shifted = i as isize + d;
                assert!(shifted >= 0, "shift produced a negative index");
                Term::Var(shifted as usize)
            } else {
                Term::Var(i)
            }
        })
    }

    /// Rebuilds the term, replacing each variable through `f(index, binder_depth)`.
    /// `depth` starts at `cutoff` and grows under binders.
    fn map_vars(&self, depth: usize, f: &dyn Fn(usize, usize) -> Term) -> Term {
        let go = |t: &Term, extra: usize| Box::new(t.map_vars(depth + extra, f));
        let go_opt = |t: &Option<Box<Term>>| t.as_ref().map(|t| go(t, 0));
        let go_vec = |v: &[Term]| v.iter().map(|t| t.map_vars(depth, f)).collect();
        match self {
            Term::Var(i) => f(*i, depth),
            Term::Lam(n, a, b) => Term::Lam(n.clone(), go_opt(a), go(b, 1)),
            Term::App(x, y) => Term::App(go(x, 0), go(y, 0)),
            Term::Pair(x, y) => Term::Pair(go(x, 0), go(y, 0)),
            Term::Split(p, x, y, b) => Term::Split(go(p, 0), x.clone(), y.clone(), go(b, 2)),
            Term::Inl(a, b) => Term::Inl(go(a, 0), go(b, 0)),
            Term::Inr(a, b) => Term::Inr(go(a, 0), go(b, 0)),
            Term::Case(s, x, l, y, r) => {
                Term::Case(go(s, 0), x.clone(), go(l, 1), y.clone(), go(r, 1))
            }
            Term::J(m, b, p) => Term::J(go(m, 0), go(b, 0), go(p, 0)),
            Term::Absurd(c, e) => Term::Absurd(go(c, 0), go(e, 0)),
            Term::Pi(n, a, b) => Term::Pi(n.clone(), go(a, 0), go(b, 1)),
            Term::Sigma(n, a, b) => Term::Sigma(n.clone(), go(a, 0), go(b, 1)),
            Term::Sum(a, b) => Term::Sum(go(a, 0), go(b, 0)),
            Term::IdType(a, u, v) => Term::IdType(go(a, 0), go(u, 0), go(v, 0)),
            Term::Let(n, v, t, b) => Term::Let(n.clone(), go(v, 0), go_opt(t), go(b, 1)),
            Term::Pred(tag, args) => Term::Pred(*tag, go_vec(args)),
            Term::PrimProof(tag, args) => Term::PrimProof(*tag, go_vec(args)),
            Term::PrimRefute(tag, args) => Term::PrimRefute(*tag, go_vec(args)),
            Term::Const(_)
            | Term::Refl
            | Term::Sort(_)
            | Term::Base(_)
            | Term::Empty
            | Term::ValLit(_)
            | Term::TimeLit(..)
            | Term::IdLit(_) => self.clone(),
        }
    }

    /// Capture-avoiding substitution discharging the binder at `depth`:
    /// `Var(depth)` becomes `replacement` (shifted past any binders crossed
    /// below it), variables above it drop by one.
    pub fn substitute(&self, replacement: &Term, depth: usize) -> Term {
        self.map_vars(depth, &|i, d| {
            if i == d {
                replacement.shift((d - depth) as isize, 0)
            } else if i > d {
                Term::Var(i - 1)
            } else {
                Term::Var(i)
            }
        })
    }

    /// Instantiates the outermost pending binder of a body with `arg`.
    pub fn instantiate(&self, arg: &Term) -> Term {
        self.substitute(arg, 0)
    }

    /// Instantiates a two-binder body (`Var(1) := x`, `Var(0) := y`).
    pub fn instantiate2(&self, x: &Term, y: &Term) -> Term {
        self.substitute(&y.shift(1, 0), 0).substitute(x, 0)
    }

    pub fn free_vars(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_free(0, &mut out);
        out
    }

    fn collect_free(&self, depth: usize, out: &mut BTreeSet<usize>) {
        self.visit_vars(depth, &mut |i, d| {
            if i >= d {
                out.insert(i - d);
            }
        });
    }

    /// True when `Var(index)` (relative to this term's root) occurs free.
    pub fn has_free(&self, index: usize) -> bool {
        let mut found = false;
        self.visit_vars(0, &mut |i, d| {
            if i >= d && i - d == index {
                found = true;
            }
        });
        found
    }

    fn visit_vars(&self, depth: usize, f: &mut dyn FnMut(usize, usize)) {
        match self {
            Term::Var(i) => f(*i, depth),
            _ => {
                for (child, extra) in self.children_with_binders() {
                    child.visit_vars(depth + extra, f);
                }
            }
        }
    }

    /// Immediate subterms in syntactic order, with the number of binders each sits under.
    pub fn children_with_binders(&self) -> Vec<(&Term, usize)> {
        let mut out: Vec<(&Term, usize)> = Vec::new();
        match self {
            Term::Lam(_, a, b) => {
                if let Some(a) = a {
                    out.push((a, 0));
                }
                out.push((b, 1));
            }
            Term::App(x, y) | Term::Pair(x, y) | Term::Inl(x, y) | Term::Inr(x, y) => {
                out.push((x, 0));
                out.push((y, 0));
            }
            Term::Sum(x, y) | Term::Absurd(x, y) => {
                out.push((x, 0));
                out.push((y, 0));
            }
            Term::Split(p, _, _, b) => {
                out.push((p, 0));
                out.push((b, 2));
            }
            Term::Case(s, _, l, _, r) => {
                out.push((s, 0));
                out.push((l, 1));
                out.push((r, 1));
            }
            Term::J(a, b, c) | Term::IdType(a, b, c) => {
                out.push((a, 0));
                out.push((b, 0));
                out.push((c, 0));
            }
            Term::Pi(_, a, b) | Term::Sigma(_, a, b) => {
                out.push((a, 0));
                out.push((b, 1));
            }
            Term::Let(_, v, t, b) => {
                out.push((v, 0));
                if let Some(t) = t {
                    out.push((t, 0));
                }
                out.push((b, 1));
            }
            Term::Pred(_, args) | Term::PrimProof(_, args) | Term::PrimRefute(_, args) => {
                out.extend(args.iter().map(|a| (a, 0)));
            }
            Term::Var(_)
            | Term::Const(_)
            | Term::Refl
            | Term::Sort(_)
            | Term::Base(_)
            | Term::Empty
            | Term::ValLit(_)
            | Term::TimeLit(..)
            | Term::IdLit(_) => {}
        }
        out
    }

    /// Mutable access to the `i`-th child in the order of [`Term::children_with_binders`].
    pub fn child_mut(&mut self, i: usize) -> Option<&mut Term> {
        let mut slots: Vec<&mut Term> = Vec::new();
        match self {
            Term::Lam(_, a, b) => {
                if let Some(a) = a {
                    slots.push(a);
                }
                slots.push(b);
            }
            Term::App(x, y)
            | Term::Pair(x, y)
            | Term::Inl(x, y)
            | Term::Inr(x, y)
            | Term::Sum(x, y)
            | Term::Absurd(x, y) => {
                slots.push(x);
                slots.push(y);
            }
            Term::Split(p, _, _, b) => {
                slots.push(p);
                slots.push(b);
            }
            Term::Case(s, _, l, _, r) => {
                slots.push(s);
                slots.push(l);
                slots.push(r);
            }
            Term::J(a, b, c) | Term::IdType(a, b, c) => {
                slots.push(a);
                slots.push(b);
                slots.push(c);
            }
            Term::Pi(_, a, b) | Term::Sigma(_, a, b) => {
                slots.push(a);
                slots.push(b);
            }
            Term::Let(_, v, t, b) => {
                slots.push(v);
                if let Some(t) = t {
                    slots.push(t);
                }
                slots.push(b);
            }
            Term::Pred(_, args) | Term::PrimProof(_, args) | Term::PrimRefute(_, args) => {
                slots.extend(args.iter_mut());
            }
            _ => {}
        }
        slots.into_iter().nth(i)
    }

    /// Replaces every occurrence of constant `name` by the closed term `with`.
    pub fn replace_const(&self, name: &str, with: &Term) -> Term {
        let mut out = self.clone();
        fn go(t: &mut Term, name: &str, with: &Term) {
            if matches!(t, Term::Const(c) if c == name) {
                *t = with.clone();
                return;
            }
            let mut i = 0;
            while let Some(c) = t.child_mut(i) {
                go(c, name, with);
                i += 1;
            }
        }
        go(&mut out, name, with);
        out
    }

    /// Names of global constants referenced anywhere in the term.
    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_constants(&mut out);
        out
    }

    fn collect_constants(&self, out: &mut BTreeSet<String>) {
        if let Term::Const(c) = self {
            out.insert(c.clone());
        }
        for (c, _) in self.children_with_binders() {
            c.collect_constants(out);
        }
    }

    /// Structural size used to order proof search. Every node counts one;
    /// type annotations (lambda domains, injection summands, `absurd`
    /// targets, `let` types) and the operands of primitive witnesses are
    /// excluded, since they are fixed by the expected type.
    pub fn size(&self) -> usize {
        match self {
            Term::Lam(_, _, b) => 1 + b.size(),
            Term::Inl(a, _) | Term::Inr(a, _) => 1 + a.size(),
            Term::Absurd(_, e) => 1 + e.size(),
            Term::Let(_, v, _, b) => 1 + v.size() + b.size(),
            Term::PrimProof(..) | Term::PrimRefute(..) => 1,
            _ => {
                1 + self
                    .children_with_binders()
                    .iter()
                    .map(|(c, _)| c.size())
                    .sum::<usize>()
            }
        }
    }

    /// Canonical 256-bit digest; alpha-equivalent terms share a digest.
    pub fn digest(&self) -> Digest {
        let mut enc = Encoder::new();
        self.encode(&mut enc);
        enc.finish()
    }

    pub(crate) fn encode(&self, enc: &mut Encoder) {
        fn opt(enc: &mut Encoder, t: &Option<Box<Term>>) {
            match t {
                Some(t) => {
                    enc.tag(1);
                    t.encode(enc);
                }
                None => enc.tag(0),
            }
        }
        fn list(enc: &mut Encoder, tag: PrimTag, args: &[Term]) {
            enc.tag(tag as u8);
            enc.u64(args.len() as u64);
            for a in args {
                a.encode(enc);
            }
        }
        match self {
            Term::Var(i) => {
                enc.tag(0);
                enc.u64(*i as u64);
            }
            Term::Const(c) => {
                enc.tag(1);
                enc.str(c);
            }
            Term::Lam(_, a, b) => {
                enc.tag(2);
                opt(enc, a);
                b.encode(enc);
            }
            Term::App(x, y) => {
                enc.tag(3);
                x.encode(enc);
                y.encode(enc);
            }
            Term::Pair(x, y) => {
                enc.tag(4);
                x.encode(enc);
                y.encode(enc);
            }
            Term::Split(p, _, _, b) => {
                enc.tag(5);
                p.encode(enc);
                b.encode(enc);
            }
            Term::Inl(a, b) => {
                enc.tag(6);
                a.encode(enc);
                b.encode(enc);
            }
            Term::Inr(a, b) => {
                enc.tag(7);
                a.encode(enc);
                b.encode(enc);
            }
            Term::Case(s, _, l, _, r) => {
                enc.tag(8);
                s.encode(enc);
                l.encode(enc);
                r.encode(enc);
            }
            Term::Refl => enc.tag(9),
            Term::J(m, b, p) => {
                enc.tag(10);
                m.encode(enc);
                b.encode(enc);
                p.encode(enc);
            }
            Term::Absurd(c, e) => {
                enc.tag(11);
                c.encode(enc);
                e.encode(enc);
            }
            Term::Pi(_, a, b) => {
                enc.tag(12);
                a.encode(enc);
                b.encode(enc);
            }
            Term::Sigma(_, a, b) => {
                enc.tag(13);
                a.encode(enc);
                b.encode(enc);
            }
            Term::Sum(a, b) => {
                enc.tag(14);
                a.encode(enc);
                b.encode(enc);
            }
            Term::IdType(a, u, v) => {
                enc.tag(15);
                a.encode(enc);
                u.encode(enc);
                v.encode(enc);
            }
            Term::Sort(s) => {
                enc.tag(16);
                match s {
                    Sort::Prop => enc.tag(0),
                    Sort::Type(i) => {
                        enc.tag(1);
                        enc.u64(*i as u64);
                    }
                    Sort::Data(i) => {
                        enc.tag(2);
                        enc.u64(*i as u64);
                    }
                }
            }
            Term::Base(b) => {
                enc.tag(17);
                enc.tag(*b as u8);
            }
            Term::Empty => enc.tag(18),
            Term::ValLit(n) => {
                enc.tag(19);
                enc.bytes(&n.to_bytes_be());
            }
            Term::TimeLit(k, ms) => {
                enc.tag(20);
                enc.tag(*k as u8);
                enc.u64(*ms);
            }
            Term::IdLit(s) => {
                enc.tag(21);
                enc.str(s);
            }
            Term::Let(_, v, t, b) => {
                enc.tag(22);
                v.encode(enc);
                opt(enc, t);
                b.encode(enc);
            }
            Term::Pred(tag, args) => {
                enc.tag(23);
                list(enc, *tag, args);
            }
            Term::PrimProof(tag, args) => {
                enc.tag(24);
                list(enc, *tag, args);
            }
            Term::PrimRefute(tag, args) => {
                enc.tag(25);
                list(enc, *tag, args);
            }
        }
    }
}

/// Alpha-equivalence. Names are hints only, so this is structural equality.
pub fn alpha_equal(a: &Term, b: &Term) -> bool {
    a == b
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::surface::print_term(self))
    }
}
