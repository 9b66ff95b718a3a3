mod common;

use common::corpus::{self, committed};
use kos_core::kernel::{Event, TransitionRecord};
use kos_core::runtime::{recover, Action, CommitError, InjectError, Persist, Runtime};
use kos_core::search::Budget;
use kos_core::surface::parse_signal;

/// Keeps records in memory and fails the append numbered `fail_at`.
#[derive(Default)]
struct Memory {
    records: Vec<TransitionRecord>,
    fail_at: Option<usize>,
}

impl Persist for Memory {
    fn append(&mut self, record: &TransitionRecord, _: &Event) -> Result<(), CommitError> {
        if self.fail_at == Some(self.records.len() + 1) {
            return Err(CommitError::Injected(record.seq));
        }
        self.records.push(record.clone());
        Ok(())
    }
}

#[test]
fn sequence_numbers_must_increase() {
    let env = corpus::env(&["plant/plant.kos"]);
    let mut rt = Runtime::new(&env, Memory::default(), Budget::default());
    let mut s = corpus::signals("plant/pump.jsonl").remove(0);
    rt.inject(s.clone()).unwrap();
    assert_eq!(rt.inject(s.clone()), Err(InjectError::OutOfOrderSequence { last: 1, got: 1 }));
    s.seq = 2;
    assert!(rt.inject(s).is_ok());
}

#[test]
fn failed_commit_keeps_the_previous_state_and_halts() {
    let env = corpus::env(&["plant/plant.kos"]);
    let mut rt = Runtime::new(&env, Memory { fail_at: Some(2), ..Default::default() }, Budget::default());
    for s in corpus::signals("plant/mixed.jsonl") {
        rt.inject(s).unwrap();
    }
    let actions = rt.run_to_quiescence();
    assert!(matches!(actions.last(), Some(Action::CommitFailed { .. })));
    assert!(rt.is_halted());
    assert_eq!(rt.store().records.len(), 1);
    assert_eq!(rt.state().state_hash(), rt.store().records[0].state_after);
    assert!(rt.queued() > 0);
    assert!(rt.tick().is_empty());
}

#[test]
fn memory_and_file_stores_commit_the_same_records() {
    let env = corpus::env(&["plant/plant.kos"]);
    let mut rt = Runtime::new(&env, Memory::default(), Budget::default());
    for s in corpus::signals("plant/mixed.jsonl") {
        rt.inject(s).unwrap();
    }
    rt.run_to_quiescence();
    let dir = tempfile::tempdir().unwrap();
    let file = corpus::run(&env, corpus::signals("plant/mixed.jsonl"), &dir.path().join("w.wal"), None);
    assert_eq!(rt.store().records, file.records);
    assert_eq!(rt.state().state_hash(), file.digest);
}

#[test]
fn recovery_resumes_where_the_log_ends() {
    let env = corpus::env(&["plant/plant.kos"]);
    let dir = tempfile::tempdir().unwrap();
    let wal = dir.path().join("w.wal");
    let run = corpus::run(&env, corpus::signals("plant/mixed.jsonl"), &wal, None);
    let rec = recover(&wal, &env, Budget::default()).unwrap();
    assert_eq!(rec.records, run.records.len());
    assert_eq!(rec.state.state_hash(), run.digest);
    assert_eq!(rec.state.seq, run.records.last().unwrap().seq);
    assert_eq!(rec.state.chain, run.records.last().unwrap().chain);
}

#[test]
fn unsatisfied_dependency_stays_parked() {
    let env = corpus::bearing(&["causal/order.kos"]);
    let mut rt = Runtime::new(&env, Memory::default(), Budget::default());
    let inspect = r#"{"seq":1,"kind":"inspection","payload":{"machine":"Grind_01"},"wall_time_ms":0}"#;
    let anomaly = r#"{"seq":2,"kind":"equipment","payload":{"machine":"HeatTreatment_03","param":"temperature","value":12,"t_ms":28500000},"wall_time_ms":1}"#;
    rt.inject(parse_signal(inspect, 1).unwrap()).unwrap();
    rt.inject(parse_signal(anomaly, 2).unwrap()).unwrap();
    let actions = rt.run_to_quiescence();
    assert!(matches!(actions[0], Action::Deferred { signal: 1, .. }));
    assert_eq!(committed(&actions), ["record_anomaly"]);
    assert_eq!(rt.parked().count(), 1);
}

#[test]
fn unknown_signal_kinds_are_dropped() {
    let env = corpus::env(&["plant/plant.kos"]);
    let mut rt = Runtime::new(&env, Memory::default(), Budget::default());
    let s = r#"{"seq":1,"kind":"vibration","payload":{"mm_s":8},"wall_time_ms":0}"#;
    rt.inject(parse_signal(s, 1).unwrap()).unwrap();
    assert!(matches!(rt.tick()[..], [Action::Dropped { signal: 1, .. }]));
    assert_eq!(rt.state().state_hash(), env.initial.state_hash());
}
