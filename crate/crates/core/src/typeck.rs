//! Bidirectional type checking.
//!
//! Introduction forms (`λ` without annotation, pairs, `refl`, injections
//! against a sum) are checked; eliminations and annotated forms are inferred.
//! All work is charged to one [`Fuel`] pool so that running out surfaces as
//! [`Failure::Unknown`] rather than a type error.

use serde::{Deserialize, Serialize};

use crate::context::{Context, Entry};
use crate::prim;
use crate::reduce::{nf, whnf_owned, Fuel, OutOfFuel};
use crate::term::{BaseType, Name, PrimTag, Sort, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum TypeError {
    #[error("unbound variable #{0}")]
    UnboundVariable(usize),
    #[error("unknown constant `{0}`")]
    UnboundConstant(String),
    #[error("`{term}` is applied but has non-function type `{ty}`")]
    NotAFunction { term: Term, ty: Term },
    #[error("argument has type `{found}` but the function expects `{expected}`")]
    DomainMismatch { expected: Term, found: Term },
    #[error("split on a term of non-pair type `{ty}`")]
    NotAPair { ty: Term },
    #[error("case on a term of non-sum type `{ty}`")]
    NotASum { ty: Term },
    #[error("identity eliminator applied to a proof of `{ty}`")]
    NotAnIdentity { ty: Term },
    #[error("universe violation: {detail}")]
    UniverseViolation { detail: String },
    #[error("refl cannot prove `{lhs}` = `{rhs}`")]
    IdEndpointsUnequal { lhs: Term, rhs: Term },
    #[error("expected `{expected}` but found `{inferred}`")]
    Mismatch { inferred: Term, expected: Term },
    #[error("`{term}` is not a type")]
    NotAType { term: Term },
    #[error("cannot infer a type for `{term}`; add an annotation")]
    CannotInfer { term: Term },
    #[error("{} does not hold for these operands", tag.keyword())]
    PrimitiveRefuted { tag: PrimTag, args: Vec<Term> },
    #[error("{} holds, so it cannot be refuted", tag.keyword())]
    PrimitiveHolds { tag: PrimTag, args: Vec<Term> },
    #[error("{} is undecided: operands are not literals", tag.keyword())]
    PrimitiveUndecided { tag: PrimTag, args: Vec<Term> },
    #[error("{} takes {expected} operands, got {found}", tag.keyword())]
    Arity { tag: PrimTag, expected: usize, found: usize },
}

/// A judgment either fails with a definite type error or runs out of fuel.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Failure {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("unknown: fuel exhausted")]
    Unknown,
}

impl From<OutOfFuel> for Failure {
    fn from(_: OutOfFuel) -> Self {
        Failure::Unknown
    }
}

impl Failure {
    pub fn type_error(&self) -> Option<&TypeError> {
        match self {
            Failure::Type(e) => Some(e),
            Failure::Unknown => None,
        }
    }
}

type Res<T> = Result<T, Failure>;

#[derive(Debug, Clone)]
struct Local {
    ty: Option<Term>,
}

/// Typing state: global context, shared fuel and the stack of local binders.
pub struct Checker<'a> {
    ctx: &'a Context,
    fuel: &'a mut Fuel,
    locals: Vec<Local>,
}

/// Level used when a sort participates in a Π-type over a non-Prop codomain.
fn logical_level(s: Sort) -> u32 {
    match s {
        Sort::Prop => 2,
        Sort::Type(i) => i,
        Sort::Data(i) => i + 1,
    }
}

impl<'a> Checker<'a> {
    pub fn new(ctx: &'a Context, fuel: &'a mut Fuel) -> Self {
        Checker { ctx, fuel, locals: Vec::new() }
    }

    /// Adds a local binder with a known type; used by proof search.
    pub fn push_local(&mut self, ty: Term) {
        self.locals.push(Local { ty: Some(ty) });
    }

    pub fn pop_local(&mut self) {
        self.locals.pop();
    }

    pub fn local_count(&self) -> usize {
        self.locals.len()
    }

    pub fn context(&self) -> &Context {
        self.ctx
    }

    pub fn fuel_left(&self) -> u64 {
        self.fuel.remaining()
    }

    /// Spends one unit of fuel on behalf of a caller driving the checker.
    pub fn charge(&mut self) -> Result<(), OutOfFuel> {
        self.fuel.take()
    }

    fn tick(&mut self) -> Res<()> {
        Ok(self.fuel.take()?)
    }

    fn under<R>(&mut self, ty: Option<Term>, f: impl FnOnce(&mut Self) -> R) -> R {
        self.locals.push(Local { ty });
        let r = f(self);
        self.locals.pop();
        r
    }

    pub fn whnf(&mut self, t: &Term) -> Result<Term, OutOfFuel> {
        whnf_owned(t.clone(), self.ctx, self.fuel)
    }

    pub fn nf(&mut self, t: &Term) -> Result<Term, OutOfFuel> {
        nf(t, self.ctx, self.fuel)
    }

    fn local_type(&self, i: usize) -> Res<Term> {
        let n = self.locals.len();
        if i >= n {
            return Err(TypeError::UnboundVariable(i).into());
        }
        match &self.locals[n - 1 - i].ty {
            Some(ty) => Ok(ty.shift(i as isize + 1, 0)),
            None => Err(TypeError::CannotInfer { term: Term::Var(i) }.into()),
        }
    }

    /// Sort of a type, i.e. the universe it inhabits.
    pub fn sort_of(&mut self, ty: &Term) -> Res<Sort> {
        let s = self.infer(ty)?;
        match self.whnf(&s)? {
            Term::Sort(s) => Ok(s),
            _ => Err(TypeError::NotAType { term: ty.clone() }.into()),
        }
    }

    pub fn infer(&mut self, t: &Term) -> Res<Term> {
        self.tick()?;
        match t {
            Term::Var(i) => self.local_type(*i),
            Term::Const(c) => match self.ctx.lookup(c) {
                Some(e) => Ok(e.ty().clone()),
                None => Err(TypeError::UnboundConstant(c.clone()).into()),
            },
            Term::Sort(s) => Ok(Term::Sort(s.successor())),
            Term::Base(_) => Ok(Term::Sort(Sort::Data(0))),
            Term::Empty => Ok(Term::prop()),
            Term::ValLit(_) => Ok(Term::val_ty()),
            Term::TimeLit(..) => Ok(Term::time_ty()),
            Term::IdLit(_) => Ok(Term::id_ty()),
            Term::Pi(..) | Term::Sigma(..) | Term::Sum(..) | Term::IdType(..) | Term::Pred(..) => {
                Ok(Term::Sort(self.formation(t)?))
            }
            Term::Lam(_, Some(dom), body) => {
                self.sort_of(dom)?;
                let cod = self.under(Some((**dom).clone()), |s| s.infer(body))?;
                Ok(Term::Pi(Name::new("_"), dom.clone(), Box::new(cod)))
            }
            Term::Lam(_, None, _) | Term::Refl => Err(TypeError::CannotInfer { term: t.clone() }.into()),
            // A redex with an unannotated λ takes its domain from the argument.
            Term::App(f, a) if matches!(&**f, Term::Lam(_, None, _)) => {
                let Term::Lam(_, None, body) = &**f else { unreachable!() };
                let dom = self.infer(a)?;
                let cod = self.under(Some(dom), |s| s.infer(body))?;
                Ok(cod.instantiate(a))
            }
            Term::App(f, a) => {
                let fty = self.infer(f)?;
                match self.whnf(&fty)? {
                    Term::Pi(_, dom, cod) => {
                        self.check_argument(a, &dom)?;
                        Ok(cod.instantiate(a))
                    }
                    other => Err(TypeError::NotAFunction { term: (**f).clone(), ty: other }.into()),
                }
            }
            Term::Pair(a, b) => {
                let ta = self.infer(a)?;
                let tb = self.infer(b)?;
                Ok(Term::Sigma(Name::new("_"), Box::new(ta), Box::new(tb.shift(1, 0))))
            }
            Term::Split(p, _, _, body) => {
                let pty = self.infer(p)?;
                let (fst, snd) = match self.whnf(&pty)? {
                    Term::Sigma(_, a, b) => (*a, *b),
                    other => return Err(TypeError::NotAPair { ty: other }.into()),
                };
                let result = self.under(Some(fst), |s| s.under(Some(snd), |s| s.infer(body)))?;
                Ok(result.instantiate2(&Term::proj1((**p).clone()), &Term::proj2((**p).clone())))
            }
            Term::Inl(a, right) => {
                let left = self.infer(a)?;
                self.sort_of(right)?;
                Ok(Term::Sum(Box::new(left), right.clone()))
            }
            Term::Inr(b, left) => {
                let right = self.infer(b)?;
                self.sort_of(left)?;
                Ok(Term::Sum(left.clone(), Box::new(right)))
            }
            Term::Case(s, _, l, _, r) => {
                let (a, b) = self.sum_parts(s)?;
                let tl = self.under(Some(a), |c| c.infer(l))?;
                let tr = self.under(Some(b), |c| c.infer(r))?;
                if tl.has_free(0) || tr.has_free(0) {
                    return Err(TypeError::CannotInfer { term: t.clone() }.into());
                }
                let (tl, tr) = (tl.shift(-1, 0), tr.shift(-1, 0));
                if !self.conv(&tl, &tr)? {
                    return Err(TypeError::Mismatch { inferred: tr, expected: tl }.into());
                }
                Ok(tl)
            }
            Term::J(m, base, p) => {
                let pty = self.infer(p)?;
                let (carrier, u, v) = match self.whnf(&pty)? {
                    Term::IdType(a, u, v) => (*a, *u, *v),
                    other => return Err(TypeError::NotAnIdentity { ty: other }.into()),
                };
                let mty = self.infer(m)?;
                match self.whnf(&mty)? {
                    Term::Pi(_, dom, cod) => {
                        if !self.conv(&dom, &carrier)? {
                            return Err(TypeError::DomainMismatch { expected: *dom, found: carrier }.into());
                        }
                        let cod_head = self.under(Some((*dom).clone()), |s| s.whnf(&cod))?;
                        if !matches!(cod_head, Term::Sort(_)) {
                            return Err(TypeError::NotAType { term: *cod }.into());
                        }
                    }
                    other => return Err(TypeError::NotAFunction { term: (**m).clone(), ty: other }.into()),
                }
                self.check(base, &Term::app((**m).clone(), u))?;
                Ok(Term::app((**m).clone(), v))
            }
            Term::Absurd(target, e) => {
                self.sort_of(target)?;
                self.check(e, &Term::Empty)?;
                Ok((**target).clone())
            }
            // An annotated let binds an opaque local; an unannotated one is
            // typed by substitution.
            Term::Let(_, v, Some(ty), body) => {
                self.sort_of(ty)?;
                self.check(v, ty)?;
                let result = self.under(Some((**ty).clone()), |s| s.infer(body))?;
                Ok(result.instantiate(v))
            }
            Term::Let(_, v, None, body) => {
                self.infer(v)?;
                self.infer(&body.instantiate(v))
            }
            Term::PrimProof(tag, args) => {
                self.check_operands(*tag, args)?;
                match self.decide(*tag, args)? {
                    Some(true) => Ok(Term::Pred(*tag, args.clone())),
                    Some(false) => Err(TypeError::PrimitiveRefuted { tag: *tag, args: args.clone() }.into()),
                    None => Err(TypeError::PrimitiveUndecided { tag: *tag, args: args.clone() }.into()),
                }
            }
            Term::PrimRefute(tag, args) => {
                self.check_operands(*tag, args)?;
                match self.decide(*tag, args)? {
                    Some(false) => Ok(Term::arrow(Term::Pred(*tag, args.clone()), Term::Empty)),
                    Some(true) => Err(TypeError::PrimitiveHolds { tag: *tag, args: args.clone() }.into()),
                    None => Err(TypeError::PrimitiveUndecided { tag: *tag, args: args.clone() }.into()),
                }
            }
        }
    }

    fn sum_parts(&mut self, s: &Term) -> Res<(Term, Term)> {
        let sty = self.infer(s)?;
        match self.whnf(&sty)? {
            Term::Sum(a, b) => Ok((*a, *b)),
            other => Err(TypeError::NotASum { ty: other }.into()),
        }
    }

    fn check_argument(&mut self, a: &Term, dom: &Term) -> Res<()> {
        match self.check(a, dom) {
            Err(Failure::Type(TypeError::Mismatch { inferred, expected })) => {
                Err(TypeError::DomainMismatch { expected, found: inferred }.into())
            }
            other => other,
        }
    }

    fn decide(&mut self, tag: PrimTag, args: &[Term]) -> Res<Option<bool>> {
        let mut normal = Vec::with_capacity(args.len());
        for a in args {
            normal.push(self.nf(a)?);
        }
        Ok(prim::decide(tag, &normal))
    }

    fn check_operands(&mut self, tag: PrimTag, args: &[Term]) -> Res<()> {
        if let Some(n) = prim::arity(tag) {
            if args.len() != n {
                return Err(TypeError::Arity { tag, expected: n, found: args.len() }.into());
            }
        }
        match tag {
            PrimTag::InSet => {
                let Some((first, rest)) = args.split_first() else {
                    return Err(TypeError::Arity { tag, expected: 1, found: 0 }.into());
                };
                let ty = self.infer(first)?;
                if !matches!(self.whnf(&ty)?, Term::Base(_)) {
                    return Err(TypeError::Mismatch { inferred: ty, expected: Term::id_ty() }.into());
                }
                for a in rest {
                    self.check(a, &ty)?;
                }
            }
            _ => {
                for (i, a) in args.iter().enumerate() {
                    let base = prim::operand_type(tag, i).unwrap_or(BaseType::Val);
                    self.check(a, &Term::Base(base))?;
                }
            }
        }
        Ok(())
    }

    /// Universe of a type former.
    fn formation(&mut self, t: &Term) -> Res<Sort> {
        match t {
            Term::Pi(_, a, b) => {
                let sa = self.sort_of(a)?;
                let sb = self.under(Some((**a).clone()), |s| s.sort_of(b))?;
                if sb == Sort::Prop {
                    return Ok(Sort::Prop);
                }
                Ok(Sort::Type(logical_level(sa).max(logical_level(sb))))
            }
            Term::Sigma(_, a, b) => {
                let sa = self.sort_of(a)?;
                let sb = self.under(Some((**a).clone()), |s| s.sort_of(b))?;
                data_join(sa, sb, "Σ")
            }
            Term::Sum(a, b) => {
                let sa = self.sort_of(a)?;
                let sb = self.sort_of(b)?;
                data_join(sa, sb, "sum")
            }
            Term::IdType(a, u, v) => {
                self.sort_of(a)?;
                self.check(u, a)?;
                self.check(v, a)?;
                Ok(Sort::Prop)
            }
            Term::Pred(tag, args) => {
                self.check_operands(*tag, args)?;
                Ok(Sort::Prop)
            }
            other => self.sort_of(other),
        }
    }

    pub fn check(&mut self, t: &Term, expected: &Term) -> Res<()> {
        self.tick()?;
        match t {
            Term::Lam(_, dom, body) => {
                let exp = self.whnf(expected)?;
                match exp {
                    Term::Pi(_, edom, ecod) => {
                        if let Some(dom) = dom {
                            self.sort_of(dom)?;
                            if !self.conv(dom, &edom)? {
                                return Err(TypeError::Mismatch {
                                    inferred: (**dom).clone(),
                                    expected: *edom,
                                }
                                .into());
                            }
                        }
                        self.under(Some(*edom), |s| s.check(body, &ecod))
                    }
                    _ => self.subsume(t, expected),
                }
            }
            Term::Pair(a, b) => match self.whnf(expected)? {
                Term::Sigma(_, fst, snd) => {
                    self.check(a, &fst)?;
                    self.check(b, &snd.instantiate(a))
                }
                _ => self.subsume(t, expected),
            },
            Term::Refl => match self.whnf(expected)? {
                Term::IdType(carrier, u, v) => {
                    self.sort_of(&carrier)?;
                    if self.conv(&u, &v)? {
                        Ok(())
                    } else {
                        Err(TypeError::IdEndpointsUnequal { lhs: *u, rhs: *v }.into())
                    }
                }
                other => Err(TypeError::NotAnIdentity { ty: other }.into()),
            },
            Term::Inl(a, right) => match self.whnf(expected)? {
                Term::Sum(l, r) => {
                    self.check(a, &l)?;
                    self.expect_conv(right, &r)
                }
                _ => self.subsume(t, expected),
            },
            Term::Inr(b, left) => match self.whnf(expected)? {
                Term::Sum(l, r) => {
                    self.check(b, &r)?;
                    self.expect_conv(left, &l)
                }
                _ => self.subsume(t, expected),
            },
            Term::Case(s, _, l, _, r) => {
                let (a, b) = self.sum_parts(s)?;
                let shifted = expected.shift(1, 0);
                self.under(Some(a), |c| c.check(l, &shifted))?;
                self.under(Some(b), |c| c.check(r, &shifted))
            }
            Term::Let(_, v, ty, body) => {
                if let Some(ty) = ty {
                    self.sort_of(ty)?;
                    self.check(v, ty)?;
                } else {
                    self.infer(v)?;
                }
                self.check(&body.instantiate(v), expected)
            }
            _ => self.subsume(t, expected),
        }
    }

    fn expect_conv(&mut self, found: &Term, expected: &Term) -> Res<()> {
        if self.conv(found, expected)? {
            Ok(())
        } else {
            Err(TypeError::Mismatch { inferred: found.clone(), expected: expected.clone() }.into())
        }
    }

    fn subsume(&mut self, t: &Term, expected: &Term) -> Res<()> {
        let inferred = self.infer(t)?;
        let wi = self.whnf(&inferred)?;
        let we = self.whnf(expected)?;
        if let (Term::Sort(a), Term::Sort(b)) = (&wi, &we) {
            return if a.embeds_into(*b) {
                Ok(())
            } else {
                Err(TypeError::Mismatch { inferred, expected: expected.clone() }.into())
            };
        }
        if self.conv(&wi, &we)? {
            Ok(())
        } else {
            Err(TypeError::Mismatch { inferred, expected: expected.clone() }.into())
        }
    }

    /// Definitional equality under the current locals: weak-head reduce both
    /// sides, compare structurally with η for functions, and fall back to
    /// proof irrelevance for proofs of the same proposition.
    pub fn conv(&mut self, a: &Term, b: &Term) -> Result<bool, OutOfFuel> {
        self.fuel.take()?;
        if a == b {
            return Ok(true);
        }
        let wa = self.whnf(a)?;
        let wb = self.whnf(b)?;
        if wa == wb || self.conv_heads(&wa, &wb)? {
            return Ok(true);
        }
        self.irrelevant(&wa, &wb)
    }

    fn conv_all(&mut self, xs: &[&Term], ys: &[&Term]) -> Result<bool, OutOfFuel> {
        for (x, y) in xs.iter().zip(ys) {
            if !self.conv(x, y)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn conv_heads(&mut self, a: &Term, b: &Term) -> Result<bool, OutOfFuel> {
        use Term::*;
        match (a, b) {
            (Lam(_, da, ba), Lam(_, db, bb)) => {
                let dom = da.as_ref().or(db.as_ref()).map(|d| (**d).clone());
                self.under(dom, |s| s.conv(ba, bb))
            }
            (Lam(_, dom, body), f) | (f, Lam(_, dom, body)) => {
                let expanded = Term::app(f.shift(1, 0), Term::Var(0));
                self.under(dom.as_ref().map(|d| (**d).clone()), |s| s.conv(body, &expanded))
            }
            (Pi(_, a1, b1), Pi(_, a2, b2)) | (Sigma(_, a1, b1), Sigma(_, a2, b2)) => {
                Ok(self.conv(a1, a2)? && self.under(Some((**a1).clone()), |s| s.conv(b1, b2))?)
            }
            (Sum(a1, b1), Sum(a2, b2))
            | (App(a1, b1), App(a2, b2))
            | (Pair(a1, b1), Pair(a2, b2))
            | (Inl(a1, b1), Inl(a2, b2))
            | (Inr(a1, b1), Inr(a2, b2))
            | (Absurd(a1, b1), Absurd(a2, b2)) => self.conv_all(&[a1, b1], &[a2, b2]),
            (IdType(a1, b1, c1), IdType(a2, b2, c2)) | (J(a1, b1, c1), J(a2, b2, c2)) => {
                self.conv_all(&[a1, b1, c1], &[a2, b2, c2])
            }
            (Split(p1, _, _, b1), Split(p2, _, _, b2)) => {
                if !self.conv(p1, p2)? {
                    return Ok(false);
                }
                let (fst, snd) = self.sigma_parts_of(p1)?;
                self.under(fst, |s| s.under(snd, |s| s.conv(b1, b2)))
            }
            (Case(s1, _, l1, _, r1), Case(s2, _, l2, _, r2)) => {
                if !self.conv(s1, s2)? {
                    return Ok(false);
                }
                let (l, r) = match self.sum_parts(s1) {
                    Ok((l, r)) => (Some(l), Some(r)),
                    Err(Failure::Unknown) => return Err(OutOfFuel),
                    Err(Failure::Type(_)) => (None, None),
                };
                Ok(self.under(l, |s| s.conv(l1, l2))? && self.under(r, |s| s.conv(r1, r2))?)
            }
            (Pred(t1, a1), Pred(t2, a2))
            | (PrimProof(t1, a1), PrimProof(t2, a2))
            | (PrimRefute(t1, a1), PrimRefute(t2, a2)) => {
                if t1 != t2 || a1.len() != a2.len() {
                    return Ok(false);
                }
                let xs: Vec<&Term> = a1.iter().collect();
                let ys: Vec<&Term> = a2.iter().collect();
                self.conv_all(&xs, &ys)
            }
            _ => Ok(false),
        }
    }

    fn sigma_parts_of(&mut self, p: &Term) -> Result<(Option<Term>, Option<Term>), OutOfFuel> {
        let ty = match self.infer(p) {
            Ok(ty) => ty,
            Err(Failure::Unknown) => return Err(OutOfFuel),
            Err(Failure::Type(_)) => return Ok((None, None)),
        };
        match self.whnf(&ty)? {
            Term::Sigma(_, a, b) => Ok((Some(*a), Some(*b))),
            _ => Ok((None, None)),
        }
    }

    fn irrelevant(&mut self, a: &Term, b: &Term) -> Result<bool, OutOfFuel> {
        fn never_a_proof(t: &Term) -> bool {
            matches!(
                t,
                Term::Pi(..)
                    | Term::Sigma(..)
                    | Term::Sum(..)
                    | Term::IdType(..)
                    | Term::Sort(_)
                    | Term::Base(_)
                    | Term::Empty
                    | Term::Pred(..)
                    | Term::ValLit(_)
                    | Term::TimeLit(..)
                    | Term::IdLit(_)
            )
        }
        if never_a_proof(a) || never_a_proof(b) {
            return Ok(false);
        }
        let lift = |r: Res<Term>| match r {
            Ok(t) => Ok(Some(t)),
            Err(Failure::Unknown) => Err(OutOfFuel),
            Err(Failure::Type(_)) => Ok(None),
        };
        let Some(ta) = lift(self.infer(a))? else { return Ok(false) };
        match self.sort_of(&ta) {
            Ok(Sort::Prop) => {}
            Ok(_) | Err(Failure::Type(_)) => return Ok(false),
            Err(Failure::Unknown) => return Err(OutOfFuel),
        }
        let Some(tb) = lift(self.infer(b))? else { return Ok(false) };
        self.conv(&ta, &tb)
    }
}

pub fn infer(ctx: &Context, t: &Term, fuel: &mut Fuel) -> Result<Term, Failure> {
    Checker::new(ctx, fuel).infer(t)
}

pub fn check(ctx: &Context, t: &Term, expected: &Term, fuel: &mut Fuel) -> Result<(), Failure> {
    Checker::new(ctx, fuel).check(t, expected)
}

pub fn formation_sort(ctx: &Context, ty: &Term, fuel: &mut Fuel) -> Result<Sort, Failure> {
    Checker::new(ctx, fuel).sort_of(ty)
}

/// Σ and sums land on the data axis. Two propositions combine to a
/// proposition (conjunction, disjunction); otherwise `Prop` is lifted to
/// `Data(1)`. A full logical universe cannot be a component.
fn data_join(a: Sort, b: Sort, former: &str) -> Result<Sort, Failure> {
    let level = |s: Sort| match s {
        Sort::Prop => Ok(1),
        Sort::Data(i) => Ok(i),
        Sort::Type(i) => Err(TypeError::UniverseViolation {
            detail: format!("{former} component lives in Type{i}"),
        }),
    };
    if a == Sort::Prop && b == Sort::Prop {
        return Ok(Sort::Prop);
    }
    Ok(Sort::Data(level(a)?.max(level(b)?)))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("context entry {index} (`{name}`): {failure}")]
pub struct ContextError {
    pub index: usize,
    pub name: String,
    pub failure: Failure,
}

/// Re-checks every entry under its prefix.
pub fn check_context(ctx: &Context, fuel: &mut Fuel) -> Result<(), ContextError> {
    let mut prefix = Context::new();
    for (index, entry) in ctx.entries().into_iter().enumerate() {
        let fail = |failure| ContextError { index, name: entry.name().to_owned(), failure };
        {
            let mut ck = Checker::new(&prefix, fuel);
            ck.sort_of(entry.ty()).map_err(fail)?;
            if let Entry::Def { body, ty, .. } = entry {
                ck.check(body, ty).map_err(fail)?;
            }
        }
        prefix.push(entry.clone()).map_err(|d| fail(TypeError::UnboundConstant(d.0).into()))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrimOutcome {
    Proof(Term),
    Refuted,
    Unknown,
}

/// Decides a primitive predicate and, when it holds, returns its witness.
pub fn synth_prim_proof(ctx: &Context, tag: PrimTag, args: &[Term], fuel: &mut Fuel) -> PrimOutcome {
    let mut ck = Checker::new(ctx, fuel);
    let mut normal = Vec::with_capacity(args.len());
    for a in args {
        match ck.nf(a) {
            Ok(t) => normal.push(t),
            Err(_) => return PrimOutcome::Unknown,
        }
    }
    match prim::decide(tag, &normal) {
        Some(true) => PrimOutcome::Proof(Term::PrimProof(tag, normal)),
        Some(false) => PrimOutcome::Refuted,
        None => PrimOutcome::Unknown,
    }
}
