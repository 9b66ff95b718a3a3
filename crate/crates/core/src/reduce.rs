//! Reduction: single steps with positions, traced normalization, weak head
//! normalization, and the entry point for definitional equality.

use serde::{Deserialize, Serialize};

use crate::context::Context;
use crate::digest::{Digest, Encoder};
use crate::term::Term;
use crate::typeck::Checker;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("fuel exhausted")]
pub struct OutOfFuel;

/// Step budget shared by reduction, conversion and checking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fuel {
    remaining: u64,
}

impl Fuel {
    pub fn new(steps: u64) -> Self {
        Fuel { remaining: steps }
    }

    pub fn unlimited() -> Self {
        Fuel { remaining: u64::MAX }
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    pub fn is_empty(&self) -> bool {
        self.remaining == 0
    }

    pub fn take(&mut self) -> Result<(), OutOfFuel> {
        if self.remaining == 0 {
            return Err(OutOfFuel);
        }
        self.remaining -= 1;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    Beta,
    IotaSplit,
    IotaCase,
    IotaJ,
    Delta,
    Zeta,
}

impl Rule {
    /// δ and ζ steps are bookkeeping rather than logical computation.
    pub fn is_auxiliary(self) -> bool {
        matches!(self, Rule::Delta | Rule::Zeta)
    }
}

/// Child indices (in `children_with_binders` order) from the root to a subterm.
pub type Path = Vec<u8>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionStep {
    pub rule: Rule,
    pub path: Path,
    pub before: Digest,
    pub after: Digest,
}

impl ReductionStep {
    pub fn is_auxiliary(&self) -> bool {
        self.rule.is_auxiliary()
    }
}

/// Contracts `t` itself if it is a redex.
pub fn contract(t: &Term, ctx: &Context) -> Option<(Term, Rule)> {
    match t {
        Term::App(f, a) => match &**f {
            Term::Lam(_, _, body) => Some((body.instantiate(a), Rule::Beta)),
            _ => None,
        },
        Term::Split(p, _, _, body) => match &**p {
            Term::Pair(u, v) => Some((body.instantiate2(u, v), Rule::IotaSplit)),
            _ => None,
        },
        Term::Case(s, _, l, _, r) => match &**s {
            Term::Inl(a, _) => Some((l.instantiate(a), Rule::IotaCase)),
            Term::Inr(b, _) => Some((r.instantiate(b), Rule::IotaCase)),
            _ => None,
        },
        Term::J(_, base, p) if **p == Term::Refl => Some(((**base).clone(), Rule::IotaJ)),
        Term::Const(c) => ctx.definition(c).map(|body| (body.clone(), Rule::Delta)),
        Term::Let(_, v, _, body) => Some((body.instantiate(v), Rule::Zeta)),
        _ => None,
    }
}

fn is_redex(t: &Term, ctx: &Context) -> bool {
    match t {
        Term::App(f, _) => matches!(**f, Term::Lam(..)),
        Term::Split(p, ..) => matches!(**p, Term::Pair(..)),
        Term::Case(s, ..) => matches!(**s, Term::Inl(..) | Term::Inr(..)),
        Term::J(_, _, p) => **p == Term::Refl,
        Term::Const(c) => ctx.definition(c).is_some(),
        Term::Let(..) => true,
        _ => false,
    }
}

/// Path of the leftmost-outermost redex.
pub fn first_redex(t: &Term, ctx: &Context) -> Option<Path> {
    if is_redex(t, ctx) {
        return Some(Vec::new());
    }
    for (i, (child, _)) in t.children_with_binders().into_iter().enumerate() {
        if let Some(mut p) = first_redex(child, ctx) {
            p.insert(0, i as u8);
            return Some(p);
        }
    }
    None
}

/// Every redex position, in preorder.
pub fn all_redexes(t: &Term, ctx: &Context) -> Vec<Path> {
    fn go(t: &Term, ctx: &Context, prefix: &mut Path, out: &mut Vec<Path>) {
        if is_redex(t, ctx) {
            out.push(prefix.clone());
        }
        for (i, (child, _)) in t.children_with_binders().into_iter().enumerate() {
            prefix.push(i as u8);
            go(child, ctx, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(t, ctx, &mut Vec::new(), &mut out);
    out
}

pub fn subterm<'a>(t: &'a Term, path: &[u8]) -> Option<&'a Term> {
    match path.split_first() {
        None => Some(t),
        Some((&i, rest)) => {
            let child = t.children_with_binders().into_iter().nth(i as usize)?.0;
            subterm(child, rest)
        }
    }
}

/// Contracts the redex at `path`.
pub fn step_at(t: &Term, path: &[u8], ctx: &Context) -> Option<(Term, ReductionStep)> {
    fn rewrite(t: &mut Term, path: &[u8], ctx: &Context) -> Option<Rule> {
        match path.split_first() {
            None => {
                let (next, rule) = contract(t, ctx)?;
                *t = next;
                Some(rule)
            }
            Some((&i, rest)) => rewrite(t.child_mut(i as usize)?, rest, ctx),
        }
    }
    let mut out = t.clone();
    let rule = rewrite(&mut out, path, ctx)?;
    let step = ReductionStep {
        rule,
        path: path.to_vec(),
        before: t.digest(),
        after: out.digest(),
    };
    Some((out, step))
}

/// One leftmost-outermost step, or `None` when `t` is normal.
pub fn step_once(t: &Term, ctx: &Context) -> Option<(Term, ReductionStep)> {
    let path = first_redex(t, ctx)?;
    step_at(t, &path, ctx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub term: Term,
    pub trace: Vec<ReductionStep>,
}

impl Normalized {
    /// Steps excluding δ/ζ bookkeeping.
    pub fn logical_steps(&self) -> usize {
        self.trace.iter().filter(|s| !s.is_auxiliary()).count()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("fuel exhausted after {} steps", partial.len())]
pub struct FuelExhausted {
    pub reached: Term,
    pub partial: Vec<ReductionStep>,
}

/// Leftmost-outermost normalization with a full trace.
pub fn normalize(t: &Term, ctx: &Context, fuel: &mut Fuel) -> Result<Normalized, FuelExhausted> {
    normalize_by(t, ctx, fuel, &mut |_| 0)
}

/// Normalization where `choose` picks among all current redexes (in preorder).
pub fn normalize_by(
    t: &Term,
    ctx: &Context,
    fuel: &mut Fuel,
    choose: &mut dyn FnMut(&[Path]) -> usize,
) -> Result<Normalized, FuelExhausted> {
    let mut term = t.clone();
    let mut trace = Vec::new();
    loop {
        let redexes = all_redexes(&term, ctx);
        if redexes.is_empty() {
            return Ok(Normalized { term, trace });
        }
        if fuel.take().is_err() {
            return Err(FuelExhausted { reached: term, partial: trace });
        }
        let pick = choose(&redexes).min(redexes.len() - 1);
        let (next, step) = step_at(&term, &redexes[pick], ctx).expect("listed redex contracts");
        term = next;
        trace.push(step);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("step {index}: digest before does not match")]
    BeforeMismatch { index: usize },
    #[error("step {index}: no redex at recorded position")]
    NoRedex { index: usize },
    #[error("step {index}: recorded rule or result differs")]
    ResultMismatch { index: usize },
}

/// Re-applies a trace from `start`, checking every recorded digest.
pub fn replay(start: &Term, trace: &[ReductionStep], ctx: &Context) -> Result<Term, ReplayError> {
    let mut term = start.clone();
    for (index, step) in trace.iter().enumerate() {
        if term.digest() != step.before {
            return Err(ReplayError::BeforeMismatch { index });
        }
        let (next, redo) = step_at(&term, &step.path, ctx).ok_or(ReplayError::NoRedex { index })?;
        if redo.rule != step.rule || redo.after != step.after {
            return Err(ReplayError::ResultMismatch { index });
        }
        term = next;
    }
    Ok(term)
}

pub fn trace_digest(trace: &[ReductionStep]) -> Digest {
    let mut enc = Encoder::new();
    enc.u64(trace.len() as u64);
    for s in trace {
        enc.tag(s.rule as u8);
        enc.bytes(&s.path);
        enc.digest(&s.before);
        enc.digest(&s.after);
    }
    enc.finish()
}

/// Reduces until the head constructor is exposed.
pub fn whnf(t: &Term, ctx: &Context, fuel: &mut Fuel) -> Result<Term, OutOfFuel> {
    whnf_owned(t.clone(), ctx, fuel)
}

pub(crate) fn whnf_owned(t: Term, ctx: &Context, fuel: &mut Fuel) -> Result<Term, OutOfFuel> {
    match t {
        Term::App(f, a) => {
            let f = whnf_owned(*f, ctx, fuel)?;
            match f {
                Term::Lam(_, _, body) => {
                    fuel.take()?;
                    whnf_owned(body.instantiate(&a), ctx, fuel)
                }
                f => Ok(Term::App(Box::new(f), a)),
            }
        }
        Term::Split(p, x, y, body) => match whnf_owned(*p, ctx, fuel)? {
            Term::Pair(u, v) => {
                fuel.take()?;
                whnf_owned(body.instantiate2(&u, &v), ctx, fuel)
            }
            p => Ok(Term::Split(Box::new(p), x, y, body)),
        },
        Term::Case(s, x, l, y, r) => match whnf_owned(*s, ctx, fuel)? {
            Term::Inl(a, _) => {
                fuel.take()?;
                whnf_owned(l.instantiate(&a), ctx, fuel)
            }
            Term::Inr(b, _) => {
                fuel.take()?;
                whnf_owned(r.instantiate(&b), ctx, fuel)
            }
            s => Ok(Term::Case(Box::new(s), x, l, y, r)),
        },
        Term::J(m, base, p) => match whnf_owned(*p, ctx, fuel)? {
            Term::Refl => {
                fuel.take()?;
                whnf_owned(*base, ctx, fuel)
            }
            p => Ok(Term::J(m, base, Box::new(p))),
        },
        Term::Const(c) => match ctx.definition(&c) {
            Some(body) => {
                fuel.take()?;
                whnf_owned(body.clone(), ctx, fuel)
            }
            None => Ok(Term::Const(c)),
        },
        Term::Let(_, v, _, body) => {
            fuel.take()?;
            whnf_owned(body.instantiate(&v), ctx, fuel)
        }
        other => Ok(other),
    }
}

/// Untraced full normalization (weak head first, then subterms). Reaches the
/// same normal form as [`normalize`] on terminating input.
pub fn nf(t: &Term, ctx: &Context, fuel: &mut Fuel) -> Result<Term, OutOfFuel> {
    let mut head = whnf_owned(t.clone(), ctx, fuel)?;
    let n = head.children_with_binders().len();
    for i in 0..n {
        let child = head.child_mut(i).expect("child index in range");
        *child = nf(child, ctx, fuel)?;
    }
    Ok(head)
}

/// Outcome of a bounded decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conv {
    Equal,
    NotEqual,
    Unknown,
}

/// Definitional equality of two closed terms (relative to `ctx`).
pub fn conv_equal(a: &Term, b: &Term, ctx: &Context, fuel: &mut Fuel) -> Conv {
    let mut ck = Checker::new(ctx, fuel);
    match ck.conv(a, b) {
        Ok(true) => Conv::Equal,
        Ok(false) => Conv::NotEqual,
        Err(_) => Conv::Unknown,
    }
}
