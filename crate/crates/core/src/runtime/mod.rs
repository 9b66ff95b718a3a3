//! The environment boundary: signal intake, elaboration, the scheduler
//! loop with its pending pool, WAL commits and recovery.

mod elab;
mod env;
mod wal;

use std::collections::VecDeque;
use std::path::Path;

use serde::Serialize;

pub use elab::{elaborate, Dependency, Elab};
pub use env::Env;
pub use wal::{scan, scan_file, CommitError, FileWal, Persist, Scan, Stop};

use crate::digest::Digest;
use crate::kernel::{kstep, Event, KernelState, Rejection, StepOutcome, TransitionRecord};
use crate::search::{run_watchers, Budget};
use crate::surface::RawSignal;
use crate::term::Term;

/// Re-attempts of a deferred signal before it is abandoned.
pub const MAX_RETRIES: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InjectError {
    #[error("signal sequence {got} does not exceed {last}")]
    OutOfOrderSequence { last: u64, got: u64 },
}

/// One thing the scheduler did, for reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Committed { record: TransitionRecord },
    Rejected { event: String, reason: Rejection },
    Deferred { signal: u64, dependency: Dependency },
    /// A deferred signal elaborated after its dependency arrived.
    Completed { signal: u64, event: String },
    Dropped { signal: u64, reason: String },
    Abandoned { signal: u64 },
    CommitFailed { event: String, cause: String },
}

#[derive(Debug, Clone)]
struct Parked {
    signal: RawSignal,
    dependency: Dependency,
    retries: u32,
}

pub struct Runtime<'e, P: Persist> {
    env: &'e Env,
    /// State after the last successful commit.
    live: KernelState,
    /// Working copy that scheduling and discards act on.
    candidate: KernelState,
    raw: VecDeque<RawSignal>,
    last_seq: Option<u64>,
    pool: Vec<Parked>,
    /// Elaborated events waiting for the kernel queue to drain.
    ready: VecDeque<Event>,
    store: P,
    budget: Budget,
    halted: bool,
}

impl<'e, P: Persist> Runtime<'e, P> {
    pub fn new(env: &'e Env, store: P, budget: Budget) -> Self {
        Runtime {
            env,
            live: env.initial.clone(),
            candidate: env.initial.clone(),
            raw: VecDeque::new(),
            last_seq: None,
            pool: Vec::new(),
            ready: VecDeque::new(),
            store,
            budget,
            halted: false,
        }
    }

    /// The last committed state.
    pub fn state(&self) -> &KernelState {
        &self.live
    }

    /// Events scheduled on the kernel but not yet committed or rejected.
    pub fn pending(&self) -> usize {
        self.candidate.pending.len() + self.ready.len()
    }

    pub fn store(&self) -> &P {
        &self.store
    }

    pub fn queued(&self) -> usize {
        self.raw.len()
    }

    /// Signals still waiting on a dependency.
    pub fn parked(&self) -> impl Iterator<Item = (&RawSignal, &Dependency)> {
        self.pool.iter().map(|p| (&p.signal, &p.dependency))
    }

    /// Set after a failed commit; no further work is done.
    pub fn is_halted(&self) -> bool {
        self.halted
    }

    pub fn inject(&mut self, s: RawSignal) -> Result<(), InjectError> {
        if let Some(last) = self.last_seq {
            if s.seq <= last {
                return Err(InjectError::OutOfOrderSequence { last, got: s.seq });
            }
        }
        self.last_seq = Some(s.seq);
        self.raw.push_back(s);
        Ok(())
    }

    /// Takes one raw signal through elaboration and drives the kernel until
    /// it is quiescent.
    pub fn tick(&mut self) -> Vec<Action> {
        let mut actions = Vec::new();
        if self.halted {
            return actions;
        }
        if let Some(sig) = self.raw.pop_front() {
            match elaborate(&sig, self.env, &self.live, self.budget) {
                Elab::Event(e) => self.ready.push_back(e),
                Elab::Deferred(dependency) => {
                    actions.push(Action::Deferred { signal: sig.seq, dependency: dependency.clone() });
                    self.pool.push(Parked { signal: sig, dependency, retries: 0 });
                }
                Elab::Dropped(reason) => actions.push(Action::Dropped { signal: sig.seq, reason }),
            }
        }
        self.drive(&mut actions);
        actions
    }

    /// Ticks until no raw signal is left.
    pub fn run_to_quiescence(&mut self) -> Vec<Action> {
        let mut all = self.tick();
        while !self.raw.is_empty() && !self.halted {
            all.extend(self.tick());
        }
        all
    }

    fn drive(&mut self, actions: &mut Vec<Action>) {
        loop {
            if self.candidate.pending.is_empty() {
                let Some(e) = self.ready.pop_front() else { return };
                let name = e.name.clone();
                if let Err(reason) = self.candidate.schedule(&self.env.defs, e, self.budget) {
                    actions.push(Action::Rejected { event: name, reason });
                }
                continue;
            }
            let head = self.candidate.pending.front().cloned().expect("queue is not empty");
            match kstep(&self.candidate, &self.env.defs, self.budget) {
                StepOutcome::Transitioned(next, record) => {
                    if let Err(e) = self.store.append(&record, &head) {
                        actions.push(Action::CommitFailed { event: head.name, cause: e.to_string() });
                        self.halted = true;
                        return;
                    }
                    let before = std::mem::replace(&mut self.live, (*next).clone());
                    self.candidate = *next;
                    actions.push(Action::Committed { record });
                    self.after_commit(&before, actions);
                }
                StepOutcome::Rejected(reason) => {
                    self.candidate.discard_head();
                    actions.push(Action::Rejected { event: head.name, reason });
                }
                StepOutcome::Quiescent => unreachable!("queue is not empty"),
            }
        }
    }

    fn after_commit(&mut self, before: &KernelState, actions: &mut Vec<Action>) {
        for e in run_watchers(&self.live, &self.env.defs, &self.env.watchers, self.budget) {
            let name = e.name.clone();
            if let Err(reason) = self.candidate.schedule(&self.env.defs, e, self.budget) {
                actions.push(Action::Rejected { event: name, reason });
            }
        }
        let added: Vec<Term> = self
            .live
            .get_knowledge()
            .filter(|i| !before.knowledge.contains_key(&i.id))
            .map(|i| i.ty.clone())
            .collect();
        if added.is_empty() || self.pool.is_empty() {
            return;
        }
        let view = self.live.view(&self.env.defs);
        let mut keep = Vec::new();
        for mut p in std::mem::take(&mut self.pool) {
            if !elab::may_satisfy(&p.dependency, &view, &added, self.budget) {
                keep.push(p);
                continue;
            }
            match elaborate(&p.signal, self.env, &self.live, self.budget) {
                Elab::Event(e) => {
                    actions.push(Action::Completed { signal: p.signal.seq, event: e.name.clone() });
                    self.ready.push_back(e);
                }
                Elab::Deferred(dep) => {
                    p.retries += 1;
                    p.dependency = dep;
                    if p.retries >= MAX_RETRIES {
                        actions.push(Action::Abandoned { signal: p.signal.seq });
                    } else {
                        keep.push(p);
                    }
                }
                Elab::Dropped(reason) => actions.push(Action::Dropped { signal: p.signal.seq, reason }),
            }
        }
        self.pool = keep;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecoverError {
    #[error("cannot read the log: {0}")]
    Io(String),
    #[error("replay diverges from the log at record {at}: {detail}")]
    ReplayDivergence { at: u64, detail: String },
}

#[derive(Debug, Clone)]
pub struct Recovered {
    /// State after the last replayed record.
    pub state: KernelState,
    pub records: usize,
    /// Where the valid prefix ended, if the log had a bad tail.
    pub discarded: Option<(usize, Stop)>,
}

/// Replays the valid prefix of a log through the kernel, checking every
/// recomputed digest against the recorded one.
pub fn recover_from(scan: &Scan, env: &Env, budget: Budget) -> Result<Recovered, RecoverError> {
    let mut state = env.initial.clone();
    let mut committed = state.clone();
    for (record, event) in &scan.entries {
        let diverge = |detail: String| RecoverError::ReplayDivergence { at: record.seq, detail };
        let mut scheduled_here = false;
        loop {
            if state.pending.is_empty() {
                if scheduled_here {
                    return Err(diverge("the logged event is rejected on replay".into()));
                }
                if event.digest() != record.event_digest {
                    return Err(diverge("logged event does not match its digest".into()));
                }
                state.schedule(&env.defs, event.clone(), budget).map_err(|r| diverge(r.to_string()))?;
                scheduled_here = true;
            }
            match kstep(&state, &env.defs, budget) {
                StepOutcome::Transitioned(next, again) => {
                    if again != *record {
                        return Err(diverge(describe(record, &again)));
                    }
                    state = *next;
                    committed = state.clone();
                    for e in run_watchers(&state, &env.defs, &env.watchers, budget) {
                        let _ = state.schedule(&env.defs, e, budget);
                    }
                    break;
                }
                StepOutcome::Rejected(_) => {
                    state.discard_head();
                }
                StepOutcome::Quiescent => unreachable!("queue is not empty"),
            }
        }
    }
    Ok(Recovered { state: committed, records: scan.entries.len(), discarded: scan.stopped.clone() })
}

fn describe(want: &TransitionRecord, got: &TransitionRecord) -> String {
    let field = |name: &str, a: &Digest, b: &Digest| (a != b).then(|| format!("{name} {} != {}", b.short(), a.short()));
    [
        field("event", &want.event_digest, &got.event_digest),
        field("state_before", &want.state_before, &got.state_before),
        field("state_after", &want.state_after, &got.state_after),
        field("chain", &want.chain, &got.chain),
    ]
    .into_iter()
    .flatten()
    .next()
    .unwrap_or_else(|| "record fields differ".into())
}

pub fn recover(path: impl AsRef<Path>, env: &Env, budget: Budget) -> Result<Recovered, RecoverError> {
    let scan = scan_file(path).map_err(|e| RecoverError::Io(e.to_string()))?;
    recover_from(&scan, env, budget)
}
