//! Access to the example corpus at the workspace root.

use std::path::{Path, PathBuf};

use kos_core::kernel::TransitionRecord;
use kos_core::runtime::{scan_file, Action, Env, FileWal, Runtime};
use kos_core::search::Budget;
use kos_core::surface::{parse_signals, RawSignal};

pub fn path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel)
}

pub fn source(files: &[&str]) -> String {
    files.iter().map(|f| std::fs::read_to_string(path(f)).unwrap() + "\n").collect()
}

pub fn env(files: &[&str]) -> Env {
    Env::load(&source(files)).unwrap_or_else(|ds| panic!("{files:?}: {ds:?}"))
}

pub fn signals(file: &str) -> Vec<RawSignal> {
    parse_signals(&std::fs::read_to_string(path(file)).unwrap()).unwrap()
}

pub const BEARING: [&str; 4] = ["bearing/base.kos", "bearing/causal.kos", "bearing/report.kos", "bearing/step.kos"];

pub fn bearing(extra: &[&str]) -> Env {
    let mut files = BEARING.to_vec();
    files.extend_from_slice(extra);
    env(&files)
}

/// Result of driving a signal stream through a runtime backed by a WAL.
pub struct Run {
    pub actions: Vec<Action>,
    pub digest: kos_core::Digest,
    pub halted: bool,
    pub records: Vec<TransitionRecord>,
}

pub fn run(env: &Env, stream: Vec<RawSignal>, wal: &Path, fault: Option<u64>) -> Run {
    let store = FileWal::create(wal).unwrap().with_fault_at(fault);
    let mut rt = Runtime::new(env, store, Budget::default());
    for s in stream {
        rt.inject(s).unwrap();
    }
    let actions = rt.run_to_quiescence();
    let records = scan_file(wal).unwrap().entries.into_iter().map(|(r, _)| r).collect();
    Run { actions, digest: rt.state().state_hash(), halted: rt.is_halted(), records }
}

pub fn committed(actions: &[Action]) -> Vec<String> {
    actions
        .iter()
        .filter_map(|a| match a {
            Action::Committed { record } => Some(record.event.clone()),
            _ => None,
        })
        .collect()
}
