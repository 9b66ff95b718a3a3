//! Elaboration: raw signal to proof-carrying event.

use serde::Serialize;
use serde_json::Value;

use super::env::Env;
use crate::context::Context;
use crate::digest::Digest;
use crate::kernel::{Event, KernelState};
use crate::reduce::Fuel;
use crate::search::{auto_prove, Budget, Fact, Proved};
use crate::surface::ast::{DExpr, Requires, TemplateDecl};
use crate::surface::RawSignal;
use crate::term::{Term, TimeKind};
use crate::typeck::{check, Checker};

/// What a deferred signal waits for: an item of the type with this digest
/// whose key normalizes to `literal`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Dependency {
    pub ty: Digest,
    pub literal: Term,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Elab {
    Event(Event),
    Deferred(Dependency),
    /// Logged and discarded.
    Dropped(String),
}

type Decoded<T> = Result<T, String>;

fn field(sig: &RawSignal, name: &str) -> Decoded<Term> {
    match sig.payload.get(name) {
        Some(Value::Number(n)) => n
            .as_u64()
            .map(Term::val)
            .ok_or_else(|| format!("field `{name}` is not a natural number")),
        Some(Value::String(s)) => Ok(Term::IdLit(s.clone())),
        Some(_) => Err(format!("field `{name}` has an unsupported shape")),
        None => Err(format!("missing field `{name}`")),
    }
}

fn as_u64(t: &Term) -> Option<u64> {
    match t {
        Term::ValLit(n) => u64::try_from(n).ok(),
        _ => None,
    }
}

/// Evaluates a decoding expression that is not a hole or a tuple.
fn eval(d: &DExpr, sig: &RawSignal, bound: Option<&Term>) -> Decoded<Term> {
    Ok(match d {
        DExpr::Field(name) => field(sig, name)?,
        DExpr::Byte(i) => {
            let bytes = sig.raw_bytes().ok_or("payload has no hex `raw` field")?;
            let b = bytes.get(*i).ok_or_else(|| format!("payload has no byte {i}"))?;
            Term::val(u64::from(*b))
        }
        DExpr::Int(n) => Term::ValLit(n.clone()),
        DExpr::WallTime => Term::TimeLit(TimeKind::Stamp, sig.wall_time_ms),
        DExpr::Stamp(e) => match eval(e, sig, bound)? {
            t @ Term::TimeLit(..) => t,
            v => Term::TimeLit(TimeKind::Stamp, as_u64(&v).ok_or("stamp needs a number of milliseconds")?),
        },
        DExpr::IdOf(e) => match eval(e, sig, bound)? {
            t @ Term::IdLit(_) => t,
            Term::ValLit(n) => Term::IdLit(n.to_string()),
            _ => return Err("ident needs a string or a number".into()),
        },
        DExpr::Add(a, b) => match (eval(a, sig, bound)?, eval(b, sig, bound)?) {
            (Term::ValLit(x), Term::ValLit(y)) => Term::ValLit(x + y),
            (Term::TimeLit(k, t), Term::ValLit(y)) => {
                let y = u64::try_from(&y).map_err(|_| "time offset too large")?;
                Term::TimeLit(k, t.checked_add(y).ok_or("time overflow")?)
            }
            _ => return Err("`+` needs numbers".into()),
        },
        DExpr::Term(t) => match bound {
            Some(x) => t.instantiate(x),
            None => t.clone(),
        },
        DExpr::Hole | DExpr::Tuple(_) => return Err("a hole or tuple cannot appear here".into()),
    })
}

struct Filler<'a> {
    view: &'a Context,
    facts: &'a [Fact],
    sig: &'a RawSignal,
    bound: Option<&'a Term>,
    budget: Budget,
}

impl Filler<'_> {
    /// Builds arguments against the expected type, proving holes.
    fn fill(&self, d: &DExpr, expected: &Term) -> Decoded<Term> {
        match d {
            DExpr::Hole => match auto_prove(self.view, self.facts, expected, self.budget) {
                Proved::Proof(p) => Ok(p),
                other => Err(format!("cannot fill a hole of type `{expected}`: {other:?}")),
            },
            DExpr::Tuple(items) => {
                let Some((last, init)) = items.split_last() else { return Err("empty tuple".into()) };
                if init.is_empty() {
                    return self.fill(last, expected);
                }
                let mut fuel = Fuel::new(self.budget.fuel);
                let Ok(Term::Sigma(_, a, b)) = Checker::new(self.view, &mut fuel).whnf(expected) else {
                    return Err(format!("a tuple cannot have type `{expected}`"));
                };
                let x = self.fill(&items[0], &a)?;
                let rest = if items.len() == 2 { items[1].clone() } else { DExpr::Tuple(items[1..].to_vec()) };
                let y = self.fill(&rest, &b.instantiate(&x))?;
                Ok(Term::pair(x, y))
            }
            other => eval(other, self.sig, self.bound),
        }
    }
}

fn normal(view: &Context, t: &Term, budget: Budget) -> Option<Term> {
    let mut fuel = Fuel::new(budget.fuel);
    Checker::new(view, &mut fuel).nf(t).ok()
}

/// Digest of a type's normal form, used to key dependencies.
pub fn type_key(view: &Context, ty: &Term, budget: Budget) -> Digest {
    normal(view, ty, budget).unwrap_or_else(|| ty.clone()).digest()
}

/// The first active item of the required type whose key matches, or the
/// dependency to wait for.
fn resolve(r: &Requires, view: &Context, state: &KernelState, sig: &RawSignal, budget: Budget) -> Decoded<Result<Term, Dependency>> {
    let want = eval(&r.rhs, sig, None)?;
    let want = normal(view, &want, budget).ok_or("budget exhausted decoding the key")?;
    for item in state.get_knowledge() {
        let mut fuel = Fuel::new(budget.fuel);
        let mut ck = Checker::new(view, &mut fuel);
        if !ck.conv(&item.ty, &r.ty).unwrap_or(false) {
            continue;
        }
        let c = Term::Const(item.id.clone());
        if ck.nf(&r.lhs.instantiate(&c)).ok().as_ref() == Some(&want) {
            return Ok(Ok(c));
        }
    }
    Ok(Err(Dependency { ty: type_key(view, &r.ty, budget), literal: want }))
}

fn matches(t: &TemplateDecl, sig: &RawSignal) -> Decoded<bool> {
    if t.kind != sig.kind {
        return Ok(false);
    }
    for (l, r) in &t.when {
        if eval(l, sig, None)? != eval(r, sig, None)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Lifts `sig` with the first template that matches it.
pub fn elaborate(sig: &RawSignal, env: &Env, state: &KernelState, budget: Budget) -> Elab {
    let mut chosen = None;
    for t in &env.templates {
        match matches(t, sig) {
            Ok(true) => {
                chosen = Some(t);
                break;
            }
            Ok(false) => {}
            Err(e) => return Elab::Dropped(format!("template `{}`: {e}", t.name)),
        }
    }
    let Some(t) = chosen else { return Elab::Dropped(format!("no template for kind `{}`", sig.kind)) };
    let Some(def) = env.defs.event(&t.event) else { return Elab::Dropped(format!("unknown event `{}`", t.event)) };
    let view = state.view(&env.defs);
    let facts = state.facts(&env.defs);

    let bound = match &t.requires {
        None => None,
        Some(r) => match resolve(r, &view, state, sig, budget) {
            Ok(Ok(c)) => Some(c),
            Ok(Err(dep)) => return Elab::Deferred(dep),
            Err(e) => return Elab::Dropped(format!("template `{}`: {e}", t.name)),
        },
    };
    let filler = Filler { view: &view, facts: &facts, sig, bound: bound.as_ref(), budget };
    let args = match filler.fill(&t.args, &def.args_ty) {
        Ok(a) => a,
        Err(e) => return Elab::Dropped(format!("template `{}`: {e}", t.name)),
    };
    let mut fuel = Fuel::new(budget.fuel);
    if let Err(f) = check(&view, &args, &def.args_ty, &mut fuel) {
        return Elab::Dropped(format!("template `{}`: arguments do not check: {f}", t.name));
    }
    // A precondition that cannot be proved here is left for the kernel to reject.
    let prf = def.pre.as_ref().and_then(|pre| match auto_prove(&view, &facts, &pre.instantiate(&args), budget) {
        Proved::Proof(p) => Some(p),
        _ => None,
    });
    Elab::Event(Event::new(&t.event, args, prf))
}

/// Whether an item of the dependency's type now exists; the key is checked
/// by elaborating again.
pub fn may_satisfy(dep: &Dependency, view: &Context, new_types: &[Term], budget: Budget) -> bool {
    new_types.iter().any(|ty| type_key(view, ty, budget) == dep.ty)
}
