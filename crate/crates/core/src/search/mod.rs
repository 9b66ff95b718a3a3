//! Budgeted proof search.
//!
//! Candidates are generated type-directed, by exact structural size, and
//! handed to a continuation so that dependent components can backtrack.
//! Sizes are tried in increasing order up to the depth bound. A goal that
//! produced no candidate at some size is remembered and never retried.
//! Proofs of propositions are interchangeable, so at most one is generated
//! per (goal, locals, size).

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::context::Context;
use crate::prim;
use crate::reduce::{Fuel, OutOfFuel};
use crate::term::{Name, Sort, Term};
use crate::typeck::{synth_prim_proof, Checker, Failure, PrimOutcome};

mod rootcause;
mod watch;

pub use rootcause::{build_root_cause, failure_goal, Leaf, RootCause, RootCauseOutcome};
pub use watch::{run_watchers, Watcher};

/// Resource vector bounding a search: β-steps, term size, wall clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub fuel: u64,
    /// Largest candidate size tried.
    pub depth: usize,
    pub timeout_ms: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { fuel: 1_000_000, depth: 64, timeout_ms: 5_000 }
    }
}

impl Budget {
    pub fn new(fuel: u64, depth: usize, timeout_ms: u64) -> Self {
        Budget { fuel, depth, timeout_ms }
    }

    /// Componentwise minimum.
    pub fn min(self, other: Budget) -> Budget {
        Budget {
            fuel: self.fuel.min(other.fuel),
            depth: self.depth.min(other.depth),
            timeout_ms: self.timeout_ms.min(other.timeout_ms),
        }
    }

    /// The bound used for consistency checks when knowledge is added.
    pub fn consistency() -> Budget {
        Budget { fuel: 10_000, depth: 4, timeout_ms: 5_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(Term),
    /// A proof of `goal -> Empty`.
    Refuted(Term),
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detailed {
    pub outcome: SearchOutcome,
    /// Every candidate up to the depth bound was examined for the goal itself.
    pub exhausted: bool,
}

/// A named premise available to search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fact {
    pub name: String,
    pub ty: Term,
}

impl Fact {
    pub fn new(name: impl Into<String>, ty: Term) -> Self {
        Fact { name: name.into(), ty }
    }
}

#[derive(Debug)]
enum Halt {
    Fuel,
    Time,
}

impl From<OutOfFuel> for Halt {
    fn from(_: OutOfFuel) -> Self {
        Halt::Fuel
    }
}

/// `Ok(true)` asks the producer for more candidates.
type Flow = Result<bool, Halt>;
/// Goal, local scope and size.
type Key = (Term, usize, usize);

struct Searcher<'a> {
    ck: Checker<'a>,
    facts: &'a [Fact],
    locals: Vec<Term>,
    /// Interned local contexts, so memo keys need not hash them each time.
    scopes: HashMap<Vec<Term>, usize>,
    scope_ids: Vec<usize>,
    /// Per fact, the most size its eliminations can use; `None` if unbounded.
    reach: Vec<Option<Option<usize>>>,
    failed: HashSet<Key>,
    proofs: HashMap<Key, Term>,
    props: HashMap<(Term, usize), bool>,
    deadline: Instant,
    ticks: u64,
}

fn lift<T>(r: Result<T, Failure>) -> Result<Option<T>, Halt> {
    match r {
        Ok(t) => Ok(Some(t)),
        Err(Failure::Unknown) => Err(Halt::Fuel),
        Err(Failure::Type(_)) => Ok(None),
    }
}

impl<'a> Searcher<'a> {
    fn new(ctx: &'a Context, fuel: &'a mut Fuel, facts: &'a [Fact], timeout_ms: u64) -> Self {
        Searcher {
            ck: Checker::new(ctx, fuel),
            facts,
            locals: Vec::new(),
            scopes: HashMap::from([(Vec::new(), 0)]),
            scope_ids: vec![0],
            reach: vec![None; facts.len()],
            failed: HashSet::new(),
            proofs: HashMap::new(),
            props: HashMap::new(),
            deadline: Instant::now() + Duration::from_millis(timeout_ms),
            ticks: 0,
        }
    }

    fn tick(&mut self) -> Result<(), Halt> {
        self.ck.charge()?;
        self.ticks += 1;
        if self.ticks.is_multiple_of(256) && Instant::now() > self.deadline {
            return Err(Halt::Time);
        }
        Ok(())
    }

    fn scope(&self) -> usize {
        *self.scope_ids.last().expect("the empty scope is never popped")
    }

    fn push(&mut self, ty: Term) {
        self.ck.push_local(ty.clone());
        self.locals.push(ty);
        let next = self.scopes.len();
        let id = *self.scopes.entry(self.locals.clone()).or_insert(next);
        self.scope_ids.push(id);
    }

    fn pop(&mut self) {
        self.ck.pop_local();
        self.locals.pop();
        self.scope_ids.pop();
    }

    fn local_type(&self, i: usize) -> Term {
        self.locals[self.locals.len() - 1 - i].shift(i as isize + 1, 0)
    }

    fn is_prop(&mut self, goal: &Term, scope: usize) -> Result<bool, Halt> {
        let key = (goal.clone(), scope);
        if let Some(&b) = self.props.get(&key) {
            return Ok(b);
        }
        let b = match lift(self.ck.infer(goal))? {
            Some(s) => self.ck.whnf(&s)? == Term::Sort(Sort::Prop),
            None => false,
        };
        self.props.insert(key, b);
        Ok(b)
    }

    /// Calls `k` on candidates of exact size `n` inhabiting `goal`.
    /// Returns `Ok(false)` when `k` asked to stop.
    fn gen(&mut self, goal: &Term, n: usize, k: &mut dyn FnMut(&mut Self, Term) -> Flow) -> Flow {
        if n == 0 {
            return Ok(true);
        }
        self.tick()?;
        let goal = self.ck.whnf(goal)?;
        let scope = self.scope();
        let key = (goal.clone(), scope, n);
        if self.failed.contains(&key) {
            return Ok(true);
        }
        let prop = self.is_prop(&goal, scope)?;
        if prop {
            if let Some(t) = self.proofs.get(&key).cloned() {
                return k(self, t);
            }
        }
        let mut produced = false;
        let mut stopped = false;
        {
            let mut emit = |s: &mut Self, t: Term| -> Flow {
                produced = true;
                if prop {
                    s.proofs.insert(key.clone(), t.clone());
                }
                if !k(s, t)? {
                    stopped = true;
                    return Ok(false);
                }
                Ok(!prop)
            };
            self.produce(&goal, n, prop, &mut emit)?;
        }
        if !produced {
            self.failed.insert(key);
        }
        Ok(!stopped)
    }

    fn produce(&mut self, goal: &Term, n: usize, prop: bool, emit: &mut dyn FnMut(&mut Self, Term) -> Flow) -> Flow {
        match goal {
            Term::Pi(x, a, b) => {
                if n == 1 {
                    if let Some(t) = self.prim_refutation(a, b)? {
                        if !emit(self, t)? {
                            return Ok(false);
                        }
                    }
                }
                if n >= 2 {
                    let (x, a) = (x.clone(), (**a).clone());
                    self.push(a.clone());
                    let r = self.gen(b, n - 1, &mut |s, body| {
                        s.pop();
                        let r = emit(s, Term::Lam(x.clone(), Some(Box::new(a.clone())), Box::new(body)));
                        s.push(a.clone());
                        r
                    });
                    self.pop();
                    if !r? {
                        return Ok(false);
                    }
                }
            }
            Term::Sigma(_, a, b) => {
                for i in 1..n.saturating_sub(1) {
                    let rest = n - 1 - i;
                    let more = self.gen(a, i, &mut |s, fst| {
                        let snd_ty = b.instantiate(&fst);
                        s.gen(&snd_ty, rest, &mut |s, snd| emit(s, Term::pair(fst.clone(), snd)))
                    })?;
                    if !more {
                        return Ok(false);
                    }
                }
            }
            Term::Sum(a, b) if n >= 2 => {
                if !self.gen(a, n - 1, &mut |s, x| emit(s, Term::inl(x, (**b).clone())))? {
                    return Ok(false);
                }
                if !self.gen(b, n - 1, &mut |s, y| emit(s, Term::inr(y, (**a).clone())))? {
                    return Ok(false);
                }
            }
            Term::IdType(_, u, v) if n == 1 => {
                if self.ck.conv(u, v)? && !emit(self, Term::Refl)? {
                    return Ok(false);
                }
            }
            Term::Pred(tag, args) if n == 1 => {
                let mut normal = Vec::with_capacity(args.len());
                for a in args {
                    normal.push(self.ck.nf(a)?);
                }
                if prim::decide(*tag, &normal) == Some(true) && !emit(self, Term::PrimProof(*tag, normal))? {
                    return Ok(false);
                }
            }
            _ => {}
        }
        // Data values are retrieved, never assembled from pieces of other
        // knowledge: a base-type goal takes only a whole local or fact.
        let whole_only = matches!(goal, Term::Base(_)) && n > 1;
        if !whole_only {
            let mut reach = |s: &mut Self, t: Term, ty: Term| -> Flow {
                if s.ck.conv(&ty, goal)? {
                    return emit(s, t);
                }
                Ok(true)
            };
            if !self.neutrals(n - 1, prop, &mut reach)? {
                return Ok(false);
            }
        }
        if prop && n >= 3 && !self.eliminate(goal, n, emit)? {
            return Ok(false);
        }
        if *goal != Term::Empty && n >= 2 {
            let target = goal.clone();
            if !self.gen(&Term::Empty, n - 1, &mut |s, e| emit(s, Term::absurd(target.clone(), e)))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `PrimRefute` for a goal `P -> Empty` with `P` a false primitive.
    fn prim_refutation(&mut self, dom: &Term, cod: &Term) -> Result<Option<Term>, Halt> {
        if cod.has_free(0) || self.ck.whnf(&cod.shift(-1, 0))? != Term::Empty {
            return Ok(None);
        }
        let Term::Pred(tag, args) = self.ck.whnf(dom)? else { return Ok(None) };
        let mut normal = Vec::with_capacity(args.len());
        for a in &args {
            normal.push(self.ck.nf(a)?);
        }
        Ok((prim::decide(tag, &normal) == Some(false)).then_some(Term::PrimRefute(tag, normal)))
    }

    /// Calls `done` on every local or fact extended by eliminations to use
    /// exactly `r` more size units, with the type of the result.
    fn neutrals(&mut self, r: usize, prop: bool, done: &mut dyn FnMut(&mut Self, Term, Term) -> Flow) -> Flow {
        for i in 0..self.locals.len() {
            let ty = self.local_type(i);
            if !self.spine(Term::Var(i), ty, r, prop, done)? {
                return Ok(false);
            }
        }
        for (i, f) in self.facts.iter().enumerate() {
            let head = Term::Const(f.name.clone());
            let bound = match self.reach[i] {
                Some(b) => b,
                None => {
                    let b = self.spine_bound(&head, &f.ty)?;
                    self.reach[i] = Some(b);
                    b
                }
            };
            if bound.is_some_and(|b| r > b) {
                continue;
            }
            if !self.spine(head, f.ty.clone(), r, prop, done)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The largest `r` for which `spine` can reach a result from `head`.
    /// Only projections are bounded; an application can absorb any size.
    fn spine_bound(&mut self, head: &Term, ty: &Term) -> Result<Option<usize>, Halt> {
        match self.ck.whnf(ty)? {
            Term::Pi(..) => Ok(None),
            Term::Sigma(_, a, b) => {
                let p1 = Term::proj1(head.clone());
                let snd_ty = b.instantiate(&p1);
                let l = self.spine_bound(&p1, &a)?;
                let r = self.spine_bound(&Term::proj2(head.clone()), &snd_ty)?;
                Ok(l.zip(r).map(|(l, r)| 2 + l.max(r)))
            }
            _ => Ok(Some(0)),
        }
    }

    /// Eliminations of `head : ty` using exactly `r` more size units.
    fn spine(
        &mut self,
        head: Term,
        ty: Term,
        r: usize,
        prop: bool,
        done: &mut dyn FnMut(&mut Self, Term, Term) -> Flow,
    ) -> Flow {
        self.tick()?;
        if r == 0 {
            return done(self, head, ty);
        }
        match self.ck.whnf(&ty)? {
            Term::Pi(_, a, b) => {
                // When the result type cannot depend on which argument is
                // used, one argument per size suffices.
                let arg_irrelevant = prop && !b.has_free(0);
                for i in 1..r {
                    let rest = r - 1 - i;
                    let mut stopped = false;
                    self.gen(&a, i, &mut |s, arg| {
                        let res_ty = b.instantiate(&arg);
                        if !s.spine(Term::app(head.clone(), arg), res_ty, rest, prop, done)? {
                            stopped = true;
                            return Ok(false);
                        }
                        Ok(!arg_irrelevant)
                    })?;
                    if stopped {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Term::Sigma(_, a, b) if r >= 2 => {
                let p1 = Term::proj1(head.clone());
                let snd_ty = b.instantiate(&p1);
                if !self.spine(p1, *a, r - 2, prop, done)? {
                    return Ok(false);
                }
                self.spine(Term::proj2(head), snd_ty, r - 2, prop, done)
            }
            _ => Ok(true),
        }
    }

    /// `split` and `case` on a neutral conjunction or disjunction, with the
    /// branches proving `goal` itself.
    fn eliminate(&mut self, goal: &Term, n: usize, emit: &mut dyn FnMut(&mut Self, Term) -> Flow) -> Flow {
        for i in 1..n - 1 {
            let rest = n - 1 - i;
            let flow = self.neutrals(i - 1, true, &mut |s, scrut, ty| {
                let ty = s.ck.whnf(&ty)?;
                if !s.is_prop(&ty, s.scope())? {
                    return Ok(true);
                }
                match ty {
                    Term::Sigma(_, a, b) => {
                        let g = goal.shift(2, 0);
                        s.push((*a).clone());
                        s.push((*b).clone());
                        let r = s.gen(&g, rest, &mut |s, body| {
                            s.pop();
                            s.pop();
                            let r = emit(s, Term::split(scrut.clone(), "x", "y", body));
                            s.push((*a).clone());
                            s.push((*b).clone());
                            r
                        });
                        s.pop();
                        s.pop();
                        r
                    }
                    Term::Sum(a, b) => {
                        let g = goal.shift(1, 0);
                        for j in 1..rest {
                            let k = rest - j;
                            s.push((*a).clone());
                            let r = s.gen(&g, j, &mut |s, l| {
                                s.pop();
                                s.push((*b).clone());
                                let r = s.gen(&g, k, &mut |s, r| {
                                    s.pop();
                                    let t = Term::case(scrut.clone(), "x", l.clone(), "y", r);
                                    let more = emit(s, t);
                                    s.push((*b).clone());
                                    more
                                });
                                s.pop();
                                s.push((*a).clone());
                                r
                            });
                            s.pop();
                            if !r? {
                                return Ok(false);
                            }
                        }
                        Ok(true)
                    }
                    _ => Ok(true),
                }
            })?;
            if !flow {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Iterative deepening over sizes `1..=depth`.
    fn deepen(&mut self, goal: &Term, depth: usize) -> Result<Option<Term>, Halt> {
        for n in 1..=depth {
            let mut found = None;
            self.gen(goal, n, &mut |s, t| {
                if lift(s.ck.check(&t, goal))?.is_some() {
                    found = Some(t);
                    return Ok(false);
                }
                Ok(true)
            })?;
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }
}

fn sorted(facts: &[Fact]) -> Vec<Fact> {
    let mut v = facts.to_vec();
    v.sort_by(|a, b| a.name.cmp(&b.name));
    v
}

/// Searches for a proof of `goal`, then for a refutation `goal -> Empty`.
pub fn search_proof_detailed(ctx: &Context, facts: &[Fact], goal: &Term, budget: Budget) -> Detailed {
    let unknown = |exhausted| Detailed { outcome: SearchOutcome::Unknown, exhausted };
    let mut fuel = Fuel::new(budget.fuel);
    if fuel.is_empty() || budget.depth == 0 {
        return unknown(false);
    }
    let facts = sorted(facts);
    let mut s = Searcher::new(ctx, &mut fuel, &facts, budget.timeout_ms);
    match s.deepen(goal, budget.depth) {
        Ok(Some(t)) => return Detailed { outcome: SearchOutcome::Found(t), exhausted: false },
        Ok(None) => {}
        Err(_) => return unknown(false),
    }
    let negation = Term::Pi(Name::new("_"), Box::new(goal.clone()), Box::new(Term::Empty));
    match s.deepen(&negation, budget.depth) {
        Ok(Some(t)) => Detailed { outcome: SearchOutcome::Refuted(t), exhausted: true },
        Ok(None) | Err(_) => unknown(true),
    }
}

pub fn search_proof(ctx: &Context, facts: &[Fact], goal: &Term, budget: Budget) -> SearchOutcome {
    search_proof_detailed(ctx, facts, goal, budget).outcome
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Proved {
    Proof(Term),
    Refuted,
    /// No proof within the size bound, and no refutation either.
    NotFound,
    Unknown,
}

/// Proves a proposition by splitting conjunctions and deciding primitive,
/// identity and refutation leaves directly; other leaves go to search.
pub fn auto_prove(ctx: &Context, facts: &[Fact], goal: &Term, budget: Budget) -> Proved {
    let mut fuel = Fuel::new(budget.fuel);
    auto_prove_with(ctx, facts, goal, budget, &mut fuel, &mut |_, _| {})
}

pub(crate) fn auto_prove_with(
    ctx: &Context,
    facts: &[Fact],
    goal: &Term,
    budget: Budget,
    fuel: &mut Fuel,
    on_leaf: &mut dyn FnMut(crate::term::PrimTag, &[Term]),
) -> Proved {
    let whnf = {
        let mut ck = Checker::new(ctx, fuel);
        match ck.whnf(goal) {
            Ok(t) => t,
            Err(_) => return Proved::Unknown,
        }
    };
    match &whnf {
        Term::Sigma(_, a, b) => {
            let mut ck = Checker::new(ctx, fuel);
            match ck.sort_of(a) {
                Ok(Sort::Prop) => {}
                Ok(_) | Err(Failure::Type(_)) => return search_leaf(ctx, facts, &whnf, budget, fuel),
                Err(Failure::Unknown) => return Proved::Unknown,
            }
            let p = match auto_prove_with(ctx, facts, a, budget, fuel, on_leaf) {
                Proved::Proof(p) => p,
                other => return other,
            };
            match auto_prove_with(ctx, facts, &b.instantiate(&p), budget, fuel, on_leaf) {
                Proved::Proof(q) => Proved::Proof(Term::pair(p, q)),
                other => other,
            }
        }
        Term::Pred(tag, args) => match synth_prim_proof(ctx, *tag, args, fuel) {
            PrimOutcome::Proof(p) => {
                if let Term::PrimProof(_, normal) = &p {
                    on_leaf(*tag, normal);
                }
                Proved::Proof(p)
            }
            PrimOutcome::Refuted => Proved::Refuted,
            PrimOutcome::Unknown => Proved::Unknown,
        },
        Term::IdType(_, u, v) => {
            let mut ck = Checker::new(ctx, fuel);
            match ck.conv(u, v) {
                Ok(true) => Proved::Proof(Term::Refl),
                Ok(false) => {
                    let (nu, nv) = match (ck.nf(u), ck.nf(v)) {
                        (Ok(a), Ok(b)) => (a, b),
                        _ => return Proved::Unknown,
                    };
                    if nu.is_literal() && nv.is_literal() {
                        Proved::Refuted
                    } else {
                        search_leaf(ctx, facts, &whnf, budget, fuel)
                    }
                }
                Err(_) => Proved::Unknown,
            }
        }
        _ => search_leaf(ctx, facts, &whnf, budget, fuel),
    }
}

fn search_leaf(ctx: &Context, facts: &[Fact], goal: &Term, budget: Budget, fuel: &Fuel) -> Proved {
    let budget = Budget { fuel: fuel.remaining().min(budget.fuel), ..budget };
    let d = search_proof_detailed(ctx, facts, goal, budget);
    match d.outcome {
        SearchOutcome::Found(t) => Proved::Proof(t),
        SearchOutcome::Refuted(_) => Proved::Refuted,
        SearchOutcome::Unknown if d.exhausted => Proved::NotFound,
        SearchOutcome::Unknown => Proved::Unknown,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Contribution {
    /// The goal is no longer provable without the fact.
    Necessary,
    /// The goal stays provable without the fact.
    Redundant,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CounterfactualError {
    #[error("`{0}` is not among the facts")]
    UnknownFact(String),
    #[error("the goal is not provable from the full fact base within the budget")]
    PreconditionUnproven,
}

/// Facts whose types mention `removed`, transitively, go with it.
pub fn shadow_facts(facts: &[Fact], removed: &str) -> Vec<Fact> {
    let mut gone: HashSet<String> = HashSet::from([removed.to_owned()]);
    loop {
        let before = gone.len();
        for f in facts {
            if !gone.contains(&f.name) && f.ty.constants().iter().any(|c| gone.contains(c)) {
                gone.insert(f.name.clone());
            }
        }
        if gone.len() == before {
            break;
        }
    }
    facts.iter().filter(|f| !gone.contains(&f.name)).cloned().collect()
}

/// Whether `removed` is needed for `goal`. The fact base is never mutated;
/// search runs over a shadow copy without the fact.
pub fn counterfactual_contrib(
    ctx: &Context,
    facts: &[Fact],
    removed: &str,
    goal: &Term,
    budget: Budget,
) -> Result<Contribution, CounterfactualError> {
    if !facts.iter().any(|f| f.name == removed) {
        return Err(CounterfactualError::UnknownFact(removed.to_owned()));
    }
    match search_proof(ctx, facts, goal, budget) {
        SearchOutcome::Found(_) => {}
        _ => return Err(CounterfactualError::PreconditionUnproven),
    }
    let shadow = shadow_facts(facts, removed);
    let d = search_proof_detailed(ctx, &shadow, goal, budget);
    Ok(match d.outcome {
        SearchOutcome::Found(_) => Contribution::Redundant,
        SearchOutcome::Refuted(_) => Contribution::Necessary,
        SearchOutcome::Unknown if d.exhausted => Contribution::Necessary,
        SearchOutcome::Unknown => Contribution::Unknown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::PrimTag;
    use crate::typeck::check;

    fn props(names: &[&str]) -> Context {
        let mut ctx = Context::new();
        for n in names {
            ctx.push_decl(n, Term::prop()).unwrap();
        }
        ctx
    }

    /// Declares the facts in the context as well, as a state view does.
    fn base(names: &[&str], facts: &[(&str, Term)]) -> (Context, Vec<Fact>) {
        let mut ctx = props(names);
        for (n, ty) in facts {
            ctx.push_decl(n, ty.clone()).unwrap();
        }
        (ctx, facts.iter().map(|(n, ty)| Fact::new(*n, ty.clone())).collect())
    }

    fn p(n: &str) -> Term {
        Term::cnst(n)
    }

    fn small() -> Budget {
        Budget::new(100_000, 8, 5_000)
    }

    #[test]
    fn reflexivity_and_primitives() {
        let ctx = Context::new();
        let goal = Term::id_type(Term::val_ty(), Term::val(25), Term::val(25));
        assert_eq!(search_proof(&ctx, &[], &goal, small()), SearchOutcome::Found(Term::Refl));
        let over = Term::pred(PrimTag::LeVal, vec![Term::val(82), Term::val(80)]);
        let SearchOutcome::Refuted(r) = search_proof(&ctx, &[], &over, small()) else { panic!() };
        assert_eq!(r, Term::PrimRefute(PrimTag::LeVal, vec![Term::val(82), Term::val(80)]));
    }

    #[test]
    fn modus_ponens_and_conjunction() {
        let (ctx, facts) = base(&["P", "Q", "R"], &[("hp", p("P")), ("pq", Term::arrow(p("P"), p("Q")))]);
        let goal = Term::product(p("Q"), p("P"));
        let SearchOutcome::Found(t) = search_proof(&ctx, &facts, &goal, small()) else { panic!() };
        check(&ctx, &t, &goal, &mut Fuel::new(10_000)).unwrap();
        assert_eq!(t, Term::pair(Term::app(p("pq"), p("hp")), p("hp")));
    }

    #[test]
    fn empty_is_never_found_on_a_consistent_base() {
        let (ctx, facts) = base(&["P", "Q"], &[("hp", p("P")), ("pq", Term::arrow(p("P"), p("Q")))]);
        let d = search_proof_detailed(&ctx, &facts, &Term::Empty, small());
        assert!(matches!(d.outcome, SearchOutcome::Refuted(_)));
        assert!(d.exhausted);
    }

    #[test]
    fn contradiction_is_found() {
        let (ctx, facts) = base(&["P"], &[("hp", p("P")), ("np", Term::arrow(p("P"), Term::Empty))]);
        let SearchOutcome::Found(t) = search_proof(&ctx, &facts, &Term::Empty, small()) else { panic!() };
        assert_eq!(t, Term::app(p("np"), p("hp")));
    }

    #[test]
    fn zero_fuel_is_unknown() {
        let ctx = props(&["P"]);
        let d = search_proof_detailed(&ctx, &[], &p("P"), Budget::new(0, 8, 1000));
        assert_eq!(d, Detailed { outcome: SearchOutcome::Unknown, exhausted: false });
    }

    #[test]
    fn dependent_pair_backtracks_on_first_component() {
        let mut ctx = Context::new();
        ctx.push_decl("Item", Term::sort(Sort::Data(0))).unwrap();
        ctx.push_def("a", Term::val(3), Term::val_ty()).unwrap();
        ctx.push_def("b", Term::val(30), Term::val_ty()).unwrap();
        let facts = vec![Fact::new("a", Term::val_ty()), Fact::new("b", Term::val_ty())];
        let goal = Term::sigma("v", Term::val_ty(), Term::pred(PrimTag::LtVal, vec![Term::val(10), Term::Var(0)]));
        let SearchOutcome::Found(t) = search_proof(&ctx, &facts, &goal, small()) else { panic!() };
        assert_eq!(t, Term::pair(p("b"), Term::PrimProof(PrimTag::LtVal, vec![Term::val(10), Term::val(30)])));
    }

    #[test]
    fn counterfactual_on_shadow_copy() {
        let cause = Term::arrow(p("A"), p("F"));
        let (ctx, single) = base(&["A", "F"], &[("a1", p("A")), ("cause", cause.clone())]);
        assert_eq!(counterfactual_contrib(&ctx, &single, "a1", &p("F"), small()), Ok(Contribution::Necessary));
        let (ctx, double) = base(&["A", "F"], &[("a1", p("A")), ("a3", p("A")), ("cause", cause)]);
        assert_eq!(counterfactual_contrib(&ctx, &double, "a1", &p("F"), small()), Ok(Contribution::Redundant));
        assert_eq!(
            counterfactual_contrib(&ctx, &single[..1], "a1", &p("F"), small()),
            Err(CounterfactualError::PreconditionUnproven)
        );
    }

    #[test]
    fn auto_prove_splits_conjunctions() {
        let ctx = Context::new();
        let goal = Term::product(
            Term::pred(PrimTag::LeVal, vec![Term::val(0), Term::val(25)]),
            Term::pred(PrimTag::LeVal, vec![Term::val(25), Term::val(80)]),
        );
        let Proved::Proof(t) = auto_prove(&ctx, &[], &goal, small()) else { panic!() };
        check(&ctx, &t, &goal, &mut Fuel::new(1000)).unwrap();
        let bad = Term::product(goal.clone(), Term::pred(PrimTag::LeVal, vec![Term::val(120), Term::val(110)]));
        assert_eq!(auto_prove(&ctx, &[], &bad, small()), Proved::Refuted);
    }
}
