//! Verified state transitions.
//!
//! A state holds knowledge items, a logical clock and a queue of pending
//! events. [`kstep`] takes the head event, checks or synthesizes its
//! precondition proof, applies its declarative effects to a copy of the
//! state, and proves the postcondition on that copy. Any failure leaves the
//! input state untouched. Each successful step yields a [`TransitionRecord`]
//! chained to the previous one by hash.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::context::{Context, Entry};
use crate::digest::{Digest, Encoder};
use crate::reduce::{normalize, trace_digest, Fuel};
use crate::search::{auto_prove, search_proof_detailed, Budget, Fact, Proved, SearchOutcome};
use crate::term::{Sort, Term};
use crate::typeck::{check, formation_sort, Failure};

/// Name under which the logical clock is visible to event clauses.
pub const NOW: &str = "now";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Active,
    /// Quarantined: `refutation` derives `Empty` from the item and the rest of the knowledge.
    Invalidated { refutation: Term },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeItem {
    pub id: String,
    pub term: Term,
    pub ty: Term,
    pub committed_at: u64,
    pub status: Status,
}

impl KnowledgeItem {
    pub fn new(id: impl Into<String>, term: Term, ty: Term, committed_at: u64) -> Self {
        KnowledgeItem { id: id.into(), term, ty, committed_at, status: Status::Active }
    }

    pub fn is_active(&self) -> bool {
        self.status == Status::Active
    }

    fn encode(&self, enc: &mut Encoder) {
        enc.str(&self.id);
        self.term.encode(enc);
        self.ty.encode(enc);
        enc.u64(self.committed_at);
        match &self.status {
            Status::Active => enc.tag(0),
            Status::Invalidated { refutation } => {
                enc.tag(1);
                refutation.encode(enc);
            }
        }
    }
}

/// An event instance: which event, its arguments and an optional
/// precondition proof.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub name: String,
    pub args: Term,
    pub prf: Option<Term>,
}

impl Event {
    pub fn new(name: impl Into<String>, args: Term, prf: Option<Term>) -> Self {
        Event { name: name.into(), args, prf }
    }

    fn encode(&self, enc: &mut Encoder) {
        enc.str(&self.name);
        self.args.encode(enc);
        match &self.prf {
            Some(p) => {
                enc.tag(1);
                p.encode(enc);
            }
            None => enc.tag(0),
        }
    }

    pub fn digest(&self) -> Digest {
        let mut enc = Encoder::new();
        self.encode(&mut enc);
        enc.finish()
    }
}

/// Declarative effects. Terms sit under the event's argument binder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    /// `id` may contain `{now}`, replaced by the new clock value.
    Add { id: String, ty: Term, term: Term },
    Retract(String),
    Emit { event: String, args: Term },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventDef {
    pub name: String,
    pub args_ty: Term,
    /// Under the argument binder; absent means trivially satisfied.
    pub pre: Option<Term>,
    pub effects: Vec<Effect>,
    pub post: Option<Term>,
}

/// The global context together with the event definitions.
#[derive(Debug, Clone)]
pub struct Defs {
    pub ctx: Arc<Context>,
    pub events: BTreeMap<String, EventDef>,
    /// Global constants whose type is a proposition; always available to search.
    proof_axioms: Vec<Fact>,
}

impl Defs {
    pub fn new(ctx: Context, events: BTreeMap<String, EventDef>) -> Self {
        let mut proof_axioms = Vec::new();
        for e in ctx.entries() {
            let mut fuel = Fuel::new(100_000);
            if formation_sort(&ctx, e.ty(), &mut fuel) == Ok(Sort::Prop) {
                proof_axioms.push(Fact::new(e.name(), e.ty().clone()));
            }
        }
        Defs { ctx: Arc::new(ctx), events, proof_axioms }
    }

    pub fn event(&self, name: &str) -> Option<&EventDef> {
        self.events.get(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelState {
    pub knowledge: BTreeMap<String, KnowledgeItem>,
    pub clock: u64,
    pub pending: VecDeque<Event>,
    /// Number of transitions so far; not part of the state digest.
    pub seq: u64,
    /// Chain hash of the last transition; not part of the state digest.
    pub chain: Digest,
}

impl Default for KernelState {
    fn default() -> Self {
        KernelState {
            knowledge: BTreeMap::new(),
            clock: 0,
            pending: VecDeque::new(),
            seq: 0,
            chain: Digest::ZERO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Equal,
    NotEqual,
}

pub fn verify_id(a: &KernelState, b: &KernelState) -> Verdict {
    if a.state_hash() == b.state_hash() {
        Verdict::Equal
    } else {
        Verdict::NotEqual
    }
}

impl KernelState {
    pub fn new(items: impl IntoIterator<Item = KnowledgeItem>) -> Self {
        KernelState {
            knowledge: items.into_iter().map(|i| (i.id.clone(), i)).collect(),
            ..Default::default()
        }
    }

    pub fn now(&self) -> u64 {
        self.clock
    }

    /// Active items in id order.
    pub fn get_knowledge(&self) -> impl Iterator<Item = &KnowledgeItem> {
        self.knowledge.values().filter(|i| i.is_active())
    }

    /// Canonical digest of knowledge, clock and pending queue.
    pub fn state_hash(&self) -> Digest {
        let mut enc = Encoder::new();
        enc.str("kernel-state");
        enc.u64(self.clock);
        enc.u64(self.knowledge.len() as u64);
        for item in self.knowledge.values() {
            item.encode(&mut enc);
        }
        enc.u64(self.pending.len() as u64);
        for e in &self.pending {
            e.encode(&mut enc);
        }
        enc.finish()
    }

    /// Global context extended with `now` and every active item as a definition.
    pub fn view(&self, defs: &Defs) -> Context {
        let mut ctx = Context::extend(&defs.ctx);
        let _ = ctx.push_def(NOW, Term::val(self.clock), Term::val_ty());
        for item in self.get_knowledge() {
            let _ = ctx.push_def(&item.id, item.term.clone(), item.ty.clone());
        }
        ctx
    }

    /// Premises for proof search: propositional axioms and active items.
    pub fn facts(&self, defs: &Defs) -> Vec<Fact> {
        let mut facts = defs.proof_axioms.clone();
        facts.extend(self.get_knowledge().map(|i| Fact::new(&i.id, i.ty.clone())));
        facts
    }

    pub fn tick(&self) -> KernelState {
        KernelState { clock: self.clock + 1, ..self.clone() }
    }

    /// Appends `e` after checking its arguments against the event's type.
    pub fn schedule(&mut self, defs: &Defs, e: Event, budget: Budget) -> Result<(), Rejection> {
        let def = defs
            .event(&e.name)
            .ok_or_else(|| Rejection::new(RejectReason::IllTypedPayload, format!("unknown event `{}`", e.name)))?;
        let view = self.view(defs);
        let mut fuel = Fuel::new(budget.fuel);
        check(&view, &e.args, &def.args_ty, &mut fuel).map_err(|f| judgment("arguments", f))?;
        self.pending.push_back(e);
        Ok(())
    }

    /// Drops the head event after a rejection.
    pub fn discard_head(&mut self) -> Option<Event> {
        self.pending.pop_front()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    MissingPreProof,
    PreRefuted,
    PostViolated,
    IllTypedPayload,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{reason:?}: {detail}")]
pub struct Rejection {
    pub reason: RejectReason,
    pub detail: String,
}

impl Rejection {
    pub fn new(reason: RejectReason, detail: impl Into<String>) -> Self {
        Rejection { reason, detail: detail.into() }
    }
}

fn judgment(what: &str, f: Failure) -> Rejection {
    match f {
        Failure::Unknown => Rejection::new(RejectReason::BudgetExhausted, format!("checking {what}")),
        Failure::Type(e) => Rejection::new(RejectReason::IllTypedPayload, format!("{what}: {e}")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub seq: u64,
    pub event: String,
    pub event_digest: Digest,
    pub state_before: Digest,
    pub state_after: Digest,
    pub clock_before: u64,
    pub clock_after: u64,
    pub pre_proof: Digest,
    pub post_proof: Digest,
    pub trace: Digest,
    pub prev_chain: Digest,
    pub chain: Digest,
}

impl TransitionRecord {
    /// Digest of every field except the chain hash itself.
    pub fn body_digest(&self) -> Digest {
        let mut enc = Encoder::new();
        enc.str("transition");
        enc.u64(self.seq);
        enc.str(&self.event);
        for d in [&self.event_digest, &self.state_before, &self.state_after] {
            enc.digest(d);
        }
        enc.u64(self.clock_before);
        enc.u64(self.clock_after);
        for d in [&self.pre_proof, &self.post_proof, &self.trace, &self.prev_chain] {
            enc.digest(d);
        }
        enc.finish()
    }

    pub fn expected_chain(&self) -> Digest {
        let mut enc = Encoder::new();
        enc.digest(&self.prev_chain);
        enc.digest(&self.body_digest());
        enc.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Transitioned(Box<KernelState>, TransitionRecord),
    Quiescent,
    Rejected(Rejection),
}

fn prove(view: &Context, facts: &[Fact], goal: &Term, budget: Budget, refuted: RejectReason, missing: RejectReason) -> Result<Term, Rejection> {
    match auto_prove(view, facts, goal, budget) {
        Proved::Proof(p) => Ok(p),
        Proved::Refuted => Err(Rejection::new(refuted, format!("`{goal}` is refuted"))),
        Proved::NotFound => Err(Rejection::new(missing, format!("no proof of `{goal}`"))),
        Proved::Unknown => Err(Rejection::new(RejectReason::BudgetExhausted, format!("proving `{goal}`"))),
    }
}

/// One small step of the head event.
pub fn kstep(state: &KernelState, defs: &Defs, budget: Budget) -> StepOutcome {
    let Some(ev) = state.pending.front() else { return StepOutcome::Quiescent };
    match try_step(state, ev, defs, budget) {
        Ok((next, record)) => StepOutcome::Transitioned(Box::new(next), record),
        Err(r) => StepOutcome::Rejected(r),
    }
}

fn try_step(state: &KernelState, ev: &Event, defs: &Defs, budget: Budget) -> Result<(KernelState, TransitionRecord), Rejection> {
    let def = defs
        .event(&ev.name)
        .ok_or_else(|| Rejection::new(RejectReason::IllTypedPayload, format!("unknown event `{}`", ev.name)))?;
    let mut fuel = Fuel::new(budget.fuel);
    let view = state.view(defs);
    check(&view, &ev.args, &def.args_ty, &mut fuel).map_err(|f| judgment("arguments", f))?;

    let (pre_proof, trace) = match &def.pre {
        None => (Term::Refl.digest(), Digest::ZERO),
        Some(pre) => {
            let goal = pre.instantiate(&ev.args);
            let trace = match normalize(&goal, &view, &mut fuel) {
                Ok(n) => trace_digest(&n.trace),
                Err(_) => return Err(Rejection::new(RejectReason::BudgetExhausted, "normalizing the precondition")),
            };
            let proof = match &ev.prf {
                Some(p) => match check(&view, p, &goal, &mut fuel) {
                    Ok(()) => p.clone(),
                    Err(Failure::Unknown) => {
                        return Err(Rejection::new(RejectReason::BudgetExhausted, "checking the precondition proof"))
                    }
                    Err(Failure::Type(e)) => {
                        return Err(Rejection::new(RejectReason::MissingPreProof, format!("supplied proof rejected: {e}")))
                    }
                },
                None => prove(
                    &view,
                    &state.facts(defs),
                    &goal,
                    budget,
                    RejectReason::PreRefuted,
                    RejectReason::MissingPreProof,
                )?,
            };
            (proof.digest(), trace)
        }
    };

    let mut next = state.clone();
    next.pending.pop_front();
    next.clock += 1;
    let now = Term::val(next.clock);
    let inst = |t: &Term| t.instantiate(&ev.args).replace_const(NOW, &now);
    for eff in &def.effects {
        match eff {
            Effect::Add { id, ty, term } => {
                let id = id.replace("{now}", &next.clock.to_string());
                if next.knowledge.contains_key(&id) || defs.ctx.contains(&id) || id == NOW {
                    return Err(Rejection::new(RejectReason::IllTypedPayload, format!("`{id}` already exists")));
                }
                let item = KnowledgeItem::new(id, inst(term), inst(ty), next.clock);
                next = match unify(&next, defs, item.clone(), budget.min(Budget::consistency()))? {
                    UnifyOutcome::Merged(s) | UnifyOutcome::Quarantined(s) => s,
                    // No refutation within the standing budget: keep it active.
                    UnifyOutcome::Unknown => {
                        let mut s = next;
                        s.knowledge.insert(item.id.clone(), item);
                        s
                    }
                };
            }
            Effect::Retract(id) => {
                if next.knowledge.remove(id).is_none() {
                    return Err(Rejection::new(RejectReason::IllTypedPayload, format!("no item `{id}` to retract")));
                }
                if let Some(dep) = next
                    .get_knowledge()
                    .find(|i| i.term.constants().contains(id) || i.ty.constants().contains(id))
                {
                    return Err(Rejection::new(
                        RejectReason::IllTypedPayload,
                        format!("`{}` still depends on `{id}`", dep.id),
                    ));
                }
            }
            Effect::Emit { event, args } => {
                let args = inst(args);
                next.schedule(defs, Event::new(event, args, None), budget)?;
            }
        }
    }

    let post_proof = match &def.post {
        None => Term::Refl.digest(),
        Some(post) => {
            let goal = post.instantiate(&ev.args);
            let view = next.view(defs);
            prove(&view, &next.facts(defs), &goal, budget, RejectReason::PostViolated, RejectReason::PostViolated)?
                .digest()
        }
    };

    let mut record = TransitionRecord {
        seq: state.seq + 1,
        event: ev.name.clone(),
        event_digest: ev.digest(),
        state_before: state.state_hash(),
        state_after: next.state_hash(),
        clock_before: state.clock,
        clock_after: next.clock,
        pre_proof,
        post_proof,
        trace,
        prev_chain: state.chain,
        chain: Digest::ZERO,
    };
    record.chain = record.expected_chain();
    next.seq = record.seq;
    next.chain = record.chain;
    Ok((next, record))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnifyOutcome {
    Merged(KernelState),
    Quarantined(KernelState),
    Unknown,
}

/// Adds `item` if no refutation of the extended knowledge is found.
pub fn unify(state: &KernelState, defs: &Defs, item: KnowledgeItem, budget: Budget) -> Result<UnifyOutcome, Rejection> {
    let mut fuel = Fuel::new(budget.fuel);
    match check(&state.view(defs), &item.term, &item.ty, &mut fuel) {
        Ok(()) => {}
        Err(Failure::Unknown) => return Ok(UnifyOutcome::Unknown),
        Err(f) => return Err(judgment(&format!("item `{}`", item.id), f)),
    }
    let mut next = state.clone();
    let id = item.id.clone();
    next.knowledge.insert(id.clone(), item);
    let view = next.view(defs);
    let d = search_proof_detailed(&view, &next.facts(defs), &Term::Empty, budget);
    Ok(match d.outcome {
        SearchOutcome::Found(refutation) => {
            next.knowledge.get_mut(&id).expect("just inserted").status = Status::Invalidated { refutation };
            UnifyOutcome::Quarantined(next)
        }
        _ if d.exhausted => UnifyOutcome::Merged(next),
        _ => UnifyOutcome::Unknown,
    })
}

/// Global entries that are propositions, for callers outside the kernel.
pub fn proof_axioms(defs: &Defs) -> &[Fact] {
    &defs.proof_axioms
}

/// Entries of the global context, for diagnostics.
pub fn global_entries(defs: &Defs) -> Vec<&Entry> {
    defs.ctx.entries()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::PrimTag;

    /// Pump status with an emergency stop guarded by a temperature threshold.
    fn plant() -> (Defs, KernelState) {
        let mut ctx = Context::new();
        ctx.push_decl("Status", Term::sort(Sort::Data(0))).unwrap();
        ctx.push_decl("Running", Term::cnst("Status")).unwrap();
        ctx.push_decl("Stopped", Term::cnst("Status")).unwrap();
        ctx.push_def("threshold", Term::val(80), Term::val_ty()).unwrap();
        let e_stop = EventDef {
            name: "e_stop".into(),
            args_ty: Term::val_ty(),
            pre: Some(Term::pred(PrimTag::LtVal, vec![Term::cnst("threshold"), Term::Var(0)])),
            effects: vec![
                Effect::Retract("pump".into()),
                Effect::Add { id: "pump".into(), ty: Term::cnst("Status"), term: Term::cnst("Stopped") },
                Effect::Add { id: "reading_{now}".into(), ty: Term::val_ty(), term: Term::Var(0) },
            ],
            post: Some(Term::id_type(Term::cnst("Status"), Term::cnst("pump"), Term::cnst("Stopped"))),
        };
        let defs = Defs::new(ctx, BTreeMap::from([("e_stop".to_owned(), e_stop)]));
        let state = KernelState::new([KnowledgeItem::new("pump", Term::cnst("Running"), Term::cnst("Status"), 0)]);
        (defs, state)
    }

    #[test]
    fn over_temperature_stops_the_pump() {
        let (defs, mut s) = plant();
        s.schedule(&defs, Event::new("e_stop", Term::val(82), None), Budget::default()).unwrap();
        let StepOutcome::Transitioned(next, rec) = kstep(&s, &defs, Budget::default()) else { panic!() };
        assert_eq!(next.knowledge["pump"].term, Term::cnst("Stopped"));
        assert_eq!(next.knowledge["reading_1"].term, Term::val(82));
        assert_eq!((rec.clock_before, rec.clock_after), (0, 1));
        assert_eq!(rec.state_before, s.state_hash());
        assert_eq!(rec.state_after, next.state_hash());
        assert_eq!(rec.chain, rec.expected_chain());
        assert_eq!(kstep(&next, &defs, Budget::default()), StepOutcome::Quiescent);
    }

    #[test]
    fn refuted_precondition_rolls_back() {
        let (defs, mut s) = plant();
        s.schedule(&defs, Event::new("e_stop", Term::val(75), None), Budget::default()).unwrap();
        let before = s.clone();
        let StepOutcome::Rejected(r) = kstep(&s, &defs, Budget::default()) else { panic!() };
        assert_eq!(r.reason, RejectReason::PreRefuted);
        assert_eq!(verify_id(&before, &s), Verdict::Equal);
    }

    #[test]
    fn ill_typed_arguments_are_not_scheduled() {
        let (defs, mut s) = plant();
        let r = s.schedule(&defs, Event::new("e_stop", Term::id_lit("hot"), None), Budget::default());
        assert_eq!(r.unwrap_err().reason, RejectReason::IllTypedPayload);
        assert!(s.pending.is_empty());
    }

    #[test]
    fn projections_and_tick() {
        let (_, s) = plant();
        assert_eq!(s.now(), 0);
        assert_eq!(s.tick().tick().now(), 2);
        assert_eq!(verify_id(&s, &s), Verdict::Equal);
        assert_eq!(verify_id(&s, &s.tick()), Verdict::NotEqual);
    }

    #[test]
    fn schedule_is_fifo() {
        let (defs, mut s) = plant();
        let h = s.state_hash();
        for v in [90, 91] {
            s.schedule(&defs, Event::new("e_stop", Term::val(v), None), Budget::default()).unwrap();
        }
        let args: Vec<Term> = s.pending.iter().map(|e| e.args.clone()).collect();
        assert_eq!(args, vec![Term::val(90), Term::val(91)]);
        assert_ne!(s.state_hash(), h);
        assert_eq!(s.knowledge.len(), 1);
    }

    #[test]
    fn unify_quarantines_contradictions() {
        let mut ctx = Context::new();
        // a standing axiom: no value reading may exist
        ctx.push_decl("no_values", Term::arrow(Term::val_ty(), Term::Empty)).unwrap();
        let defs = Defs::new(ctx, BTreeMap::new());
        let s = KernelState::default();
        let stamp = KnowledgeItem::new("seen", Term::stamp(5), Term::time_ty(), 0);
        let UnifyOutcome::Merged(m) = unify(&s, &defs, stamp, Budget::consistency()).unwrap() else { panic!() };
        assert!(m.get_knowledge().any(|i| i.id == "seen"));
        assert_ne!(m.state_hash(), s.state_hash());
        let reading = KnowledgeItem::new("r", Term::val(3), Term::val_ty(), 0);
        let UnifyOutcome::Quarantined(q) = unify(&s, &defs, reading.clone(), Budget::consistency()).unwrap() else {
            panic!()
        };
        let Status::Invalidated { refutation } = &q.knowledge["r"].status else { panic!() };
        assert_eq!(refutation, &Term::app(Term::cnst("no_values"), Term::cnst("r")));
        assert!(q.get_knowledge().next().is_none());
        assert_eq!(unify(&s, &defs, reading, Budget::new(0, 4, 100)).unwrap(), UnifyOutcome::Unknown);
    }
}
