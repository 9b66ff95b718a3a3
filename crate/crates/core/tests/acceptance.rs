//! The nine acceptance criteria, each reported on one line.

mod common;

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::corpus::{self, committed, Run};
use common::gen::{consistent_base, rename_binders, signature, TermGen};
use common::oracle::{formulas_of_size, setting, Oracle, F};
use kos_core::kernel::{unify, KernelState, KnowledgeItem, UnifyOutcome};
use kos_core::reduce::{normalize, normalize_by, step_once};
use kos_core::runtime::{recover, scan_file, Action, Env, FileWal, Runtime, Stop};
use kos_core::search::{
    build_root_cause, counterfactual_contrib, failure_goal, search_proof, search_proof_detailed, Budget, Contribution,
    RootCauseOutcome, SearchOutcome,
};
use kos_core::surface::{parse_term_with, print_report};
use kos_core::term::alpha_equal;
use kos_core::typeck::{check, infer, Failure, TypeError};
use kos_core::{Context, Digest, Fuel, Term};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn parse(env: &Env, src: &str) -> Term {
    let globals = env.initial.view(&env.defs).entries().iter().map(|e| e.name().to_owned()).collect();
    parse_term_with(src, &globals).unwrap()
}

fn plant() -> Env {
    corpus::env(&["plant/plant.kos"])
}

fn run_plant(stream: &str, fault: Option<u64>) -> (Run, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let r = corpus::run(&plant(), corpus::signals(stream), &dir.path().join("w.wal"), fault);
    (r, dir)
}

fn metatheory() -> Outcome {
    let ctx = signature();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut normal_forms: HashMap<Digest, Term> = HashMap::new();
    let mut steps = 0;
    let start = Instant::now();
    for i in 0..1000 {
        let (t, ty) = TermGen::new(&mut rng).sample();
        let ty = ty.to_term();
        let typed = |u: &Term| check(&ctx, u, &ty, &mut Fuel::new(1_000_000)).is_ok();
        ensure!(typed(&t), "term {i} is ill-typed: {t}");

        let mut cur = t.clone();
        while let Some((next, _)) = step_once(&cur, &ctx) {
            ensure!(typed(&next), "term {i}: reduct {next} of {cur} loses type {ty}");
            cur = next;
        }
        let lo = normalize(&t, &ctx, &mut Fuel::new(1_000_000)).map_err(|_| format!("term {i} ran out of fuel"))?;
        let mut pick = ChaCha8Rng::seed_from_u64(i);
        let random = normalize_by(&t, &ctx, &mut Fuel::new(1_000_000), &mut |rs| pick.gen_range(0..rs.len()))
        .map_err(|_| format!("term {i}: random strategy ran out of fuel"))?;
        ensure!(alpha_equal(&lo.term, &cur), "term {i}: step_once and normalize disagree");
        ensure!(alpha_equal(&lo.term, &random.term), "term {i}: {} vs {}", lo.term, random.term);
        ensure!(typed(&random.term), "term {i}: random normal form is ill-typed");
        steps += lo.trace.len();

        let renamed = rename_binders(&t, "r");
        ensure!(t.digest() == renamed.digest(), "term {i}: digest depends on binder names");
        ensure!(lo.term.digest() == random.term.digest(), "term {i}: alpha-equal normal forms hash apart");
        let d = lo.term.digest();
        if let Some(prev) = normal_forms.insert(d, lo.term.clone()) {
            ensure!(alpha_equal(&prev, &lo.term), "digest collision between {prev} and {}", lo.term);
        }
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(60), "took {took:?}");
    Ok(format!("1000 terms, {steps} steps, {} distinct normal forms, {took:.1?}", normal_forms.len()))
}

fn consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let budget = Budget::new(10_000, 6, 10_000);
    for i in 0..50 {
        let base = consistent_base(&mut rng);
        let (ctx, facts) = setting(&base);
        if let SearchOutcome::Found(p) = search_proof(&ctx, &facts, &Term::Empty, budget) {
            return Err(format!("base {i} {base:?} proves Empty by {p}"));
        }
    }
    Ok("50 consistent bases, Empty never found".into())
}

fn goldens() -> Outcome {
    let budget = Budget::default();
    let mut done = Vec::new();

    let env = corpus::env(&["core/temperature.kos"]);
    let ctx = env.initial.view(&env.defs);
    check(&ctx, &Term::cnst("obj"), &Term::cnst("QualifiedTemp"), &mut Fuel::new(budget.fuel))
        .map_err(|e| format!("obj: {e}"))?;
    let bad = parse(&env, r#"<"B2310", Failure, refl>"#);
    match check(&ctx, &bad, &Term::cnst("QualifiedBatch"), &mut Fuel::new(budget.fuel)) {
        Err(Failure::Type(_)) => done.push("temperature"),
        other => return Err(format!("failure batch: {other:?}")),
    }

    let env = corpus::env(&["core/combine.kos"]);
    let ctx = env.initial.view(&env.defs);
    let n = normalize(&parse(&env, "combine(ku1, ku2)"), &ctx, &mut Fuel::new(budget.fuel)).unwrap();
    let want = Term::pair(Term::cnst("ku1"), Term::cnst("ku2"));
    ensure!(alpha_equal(&n.term, &want) && n.logical_steps() == 2, "combine: {} in {}", n.term, n.logical_steps());
    match infer(&ctx, &parse(&env, "combine(p, ku2)"), &mut Fuel::new(budget.fuel)) {
        Err(Failure::Type(TypeError::DomainMismatch { .. })) => done.push("combine"),
        other => return Err(format!("combine(p, ku2): {other:?}")),
    }

    let (r, dir) = run_plant("plant/e_stop.jsonl", None);
    ensure!(committed(&r.actions) == ["e_stop"], "e_stop: {:?}", r.actions);
    let status = |s: &KernelState| s.knowledge["pump_status"].term.clone();
    ensure!(status(&plant().initial) == Term::cnst("Running"), "pump does not start Running");
    let rec = recover(dir.path().join("w.wal"), &plant(), budget).unwrap();
    ensure!(status(&rec.state) == Term::cnst("Stopped"), "e_stop left the pump {}", status(&rec.state));
    ensure!(r.records[0].state_after == r.digest, "e_stop digest");
    done.push("e_stop");

    let (r, _dir) = run_plant("plant/pump.jsonl", None);
    let rejected = r.actions.iter().any(|a| matches!(a, Action::Rejected { event, .. } if event == "record_pressure"));
    ensure!(rejected && r.records.is_empty(), "pump 120: {:?}", r.actions);
    ensure!(r.digest == plant().initial.state_hash(), "pump 120 changed the state");
    done.push("pump");

    let trace = |extra: &[&str]| {
        let env = corpus::bearing(extra);
        let ty = env.report_type(&env.initial.knowledge["f_fail"].ty).expect("report type");
        let items: Vec<KnowledgeItem> = env.initial.get_knowledge().cloned().collect();
        let facts = env.initial.facts(&env.defs);
        build_root_cause(&env.initial.view(&env.defs), &facts, &items, "f_fail", &ty, budget)
    };
    match trace(&["bearing/table5.kos"]) {
        RootCauseOutcome::Found(rc) if print_report(&rc).contains("07:55 < 10:00") => done.push("report"),
        other => return Err(format!("report: {other:?}")),
    }
    let dual = corpus::env(&["bearing/base.kos", "bearing/causal_dual.kos", "bearing/report.kos", "bearing/step.kos", "bearing/volt.kos"]);
    let ty = dual.report_type(&dual.initial.knowledge["f_fail"].ty).unwrap();
    let items: Vec<KnowledgeItem> = dual.initial.get_knowledge().cloned().collect();
    match build_root_cause(&dual.initial.view(&dual.defs), &dual.initial.facts(&dual.defs), &items, "f_fail", &ty, budget) {
        RootCauseOutcome::NotFound => done.push("dual"),
        other => return Err(format!("dual anomaly on voltage only: {other:?}")),
    }

    let locks = |invoice: &str, signals: &str| {
        let env = corpus::bearing(&["audit/audit.kos", invoice]);
        let dir = tempfile::tempdir().unwrap();
        let r = corpus::run(&env, corpus::signals(signals), &dir.path().join("a.wal"), None);
        committed(&r.actions).iter().filter(|e| *e == "lock_audit").count()
    };
    let counts = [
        locks("audit/invoice.kos", "audit/signals.jsonl"),
        locks("audit/invoice_other.kos", "audit/signals.jsonl"),
        locks("audit/invoice.kos", "audit/signals_low_loss.jsonl"),
    ];
    ensure!(counts == [1, 0, 0], "audit locks {counts:?}");
    done.push("audit");

    let whatif = |facts_file: &str| {
        let env = corpus::bearing(&[facts_file]);
        let view = env.initial.view(&env.defs);
        let ty = env.report_type(&env.initial.knowledge["f_fail"].ty).unwrap();
        let goal = failure_goal(&view, &ty, "f_fail", budget).unwrap();
        counterfactual_contrib(&view, &env.initial.facts(&env.defs), "a_volt", &goal, budget)
    };
    let verdicts = (whatif("bearing/volt.kos"), whatif("bearing/volt_two.kos"));
    ensure!(verdicts == (Ok(Contribution::Necessary), Ok(Contribution::Redundant)), "whatif {verdicts:?}");
    done.push("whatif");

    Ok(done.join(", "))
}

fn determinism() -> Outcome {
    let env = plant();
    let stream = corpus::signals("plant/mixed.jsonl");
    let dir = tempfile::tempdir().unwrap();
    let mut hashes: Vec<Digest> = (0..10)
        .map(|i| corpus::run(&env, stream.clone(), &dir.path().join(format!("{i}.wal")), None).digest)
        .collect();
    hashes.dedup();
    ensure!(hashes.len() == 1, "{} distinct hashes", hashes.len());
    Ok(format!("10 runs, state {}", hashes[0].short()))
}

fn clocks_and_rejections() -> Outcome {
    let env = plant();
    let dir = tempfile::tempdir().unwrap();
    let wal = dir.path().join("w.wal");
    let mut rt = Runtime::new(&env, FileWal::create(&wal).unwrap(), Budget::default());
    for s in corpus::signals("plant/mixed.jsonl") {
        rt.inject(s).unwrap();
    }
    let mut rejections = 0;
    while rt.queued() > 0 {
        let before = rt.state().state_hash();
        let actions = rt.tick();
        let last_commit = actions.iter().rev().find_map(|a| match a {
            Action::Committed { record } => Some(record.state_after),
            _ => None,
        });
        let n = actions.iter().filter(|a| matches!(a, Action::Rejected { .. })).count();
        if n > 0 {
            ensure!(rt.state().state_hash() == last_commit.unwrap_or(before), "a rejection changed the state");
            rejections += n;
        }
    }
    let records = scan_file(&wal).unwrap().entries;
    for (r, _) in &records {
        ensure!(r.clock_after > r.clock_before, "record {} clock {} -> {}", r.seq, r.clock_before, r.clock_after);
    }
    ensure!(rejections >= 20, "only {rejections} rejections");
    Ok(format!("{} records with rising clocks, {rejections} rejections leave state unchanged", records.len()))
}

fn hash_after(records: &[kos_core::kernel::TransitionRecord], n: usize, initial: &KernelState) -> Digest {
    if n == 0 {
        initial.state_hash()
    } else {
        records[n - 1].state_after
    }
}

fn crash_recovery() -> Outcome {
    let env = plant();
    let budget = Budget::default();
    let (clean, dir) = run_plant("plant/mixed.jsonl", None);
    let total = clean.records.len();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let faults: Vec<u64> = (0..8).map(|_| rng.gen_range(1..=total as u64)).collect();
    for &k in &faults {
        let (r, d) = run_plant("plant/mixed.jsonl", Some(k));
        let prefix = k as usize - 1;
        ensure!(r.halted, "fault at {k}: runtime kept going");
        ensure!(r.digest == hash_after(&clean.records, prefix, &env.initial), "fault at {k}: live state moved");
        let rec = recover(d.path().join("w.wal"), &env, budget).map_err(|e| format!("fault at {k}: {e}"))?;
        ensure!(rec.records == prefix && matches!(rec.discarded, Some((_, Stop::TornTail))), "fault at {k}: {rec:?}");
        ensure!(rec.state.state_hash() == r.digest, "fault at {k}: recovered state differs");
    }

    for (file, records, stop) in [
        ("torn/torn_tail.wal", 7, Stop::TornTail),
        ("torn/bad_hash.wal", 4, Stop::HashMismatch),
        ("torn/garbage.wal", 3, Stop::Malformed),
    ] {
        let rec = recover(corpus::path(file), &env, budget).map_err(|e| format!("{file}: {e}"))?;
        ensure!(rec.records == records, "{file}: {} records", rec.records);
        ensure!(rec.discarded.as_ref().map(|(_, s)| s) == Some(&stop), "{file}: {:?}", rec.discarded);
        ensure!(rec.state.state_hash() == hash_after(&clean.records, records, &env.initial), "{file}: state");
    }

    let text = std::fs::read_to_string(dir.path().join("w.wal")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    for m in 0..=lines.len() {
        let p = dir.path().join(format!("prefix{m}.wal"));
        std::fs::write(&p, lines[..m].iter().map(|l| format!("{l}\n")).collect::<String>()).unwrap();
        let rec = recover(&p, &env, budget).map_err(|e| format!("prefix {m}: {e}"))?;
        ensure!(rec.discarded.is_none(), "prefix {m}: {:?}", rec.discarded);
        ensure!(rec.state.state_hash() == hash_after(&clean.records, m, &env.initial), "prefix {m}: state");
    }
    Ok(format!("faults at {faults:?}, 3 torn logs, {} clean prefixes", lines.len() + 1))
}

fn causal_order() -> Outcome {
    let env = corpus::bearing(&["causal/order.kos"]);
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for name in ["es_first", "qi_first"] {
        let r = corpus::run(&env, corpus::signals(&format!("causal/{name}.jsonl")), &dir.path().join(name), None);
        runs.push(r);
    }
    let orders: Vec<Vec<String>> = runs.iter().map(|r| r.records.iter().map(|x| x.event.clone()).collect()).collect();
    ensure!(orders[0] == orders[1], "WAL orders differ: {orders:?}");
    ensure!(runs[0].digest == runs[1].digest, "final states differ");
    let marks: Vec<&str> = runs[1]
        .actions
        .iter()
        .filter_map(|a| match a {
            Action::Deferred { .. } => Some("deferred"),
            Action::Completed { .. } => Some("completed"),
            _ => None,
        })
        .collect();
    ensure!(marks == ["deferred", "completed"], "qi_first: {marks:?}");
    Ok(format!("both orders log {orders:?}", orders = orders[0]))
}

#[derive(Debug, Clone, PartialEq)]
enum Answer {
    Unknown,
    Yes,
    No,
}

fn fuel_monotonicity() -> Outcome {
    let zero = Budget::new(0, 6, 5_000);
    let env = corpus::env(&["core/temperature.kos"]);
    let ctx = env.initial.view(&env.defs);
    let fast = |what: &str, t: Instant| -> Result<(), String> {
        let took = t.elapsed();
        ensure!(took < Duration::from_millis(10), "{what} at fuel 0 took {took:?}");
        Ok(())
    };

    let t = Instant::now();
    let s = search_proof(&ctx, &[], &Term::cnst("QualifiedTemp"), zero);
    fast("search", t)?;
    ensure!(s == SearchOutcome::Unknown, "search at fuel 0: {s:?}");
    let t = Instant::now();
    let c = check(&ctx, &Term::cnst("obj"), &Term::cnst("QualifiedTemp"), &mut Fuel::new(0));
    fast("check", t)?;
    ensure!(c == Err(Failure::Unknown), "check at fuel 0: {c:?}");
    let t = Instant::now();
    let item = KnowledgeItem::new("obj2", Term::cnst("obj"), Term::cnst("QualifiedTemp"), env.initial.now());
    let u = unify(&env.initial, &env.defs, item, zero);
    fast("unify", t)?;
    ensure!(matches!(u, Ok(UnifyOutcome::Unknown)), "unify at fuel 0: {u:?}");

    let bearing = corpus::bearing(&["bearing/volt.kos"]);
    let bview = bearing.initial.view(&bearing.defs);
    let bfacts = bearing.initial.facts(&bearing.defs);
    let bty = bearing.report_type(&bearing.initial.knowledge["f_fail"].ty).unwrap();
    let goal = failure_goal(&bview, &bty, "f_fail", Budget::default()).unwrap();
    let bad = parse(&env, r#"<"B2310", Failure, refl>"#);
    let combine = corpus::env(&["core/combine.kos"]);
    let cctx = combine.initial.view(&combine.defs);
    let press = parse(&combine, "combine(p, ku2)");
    let judge = |f: Result<(), Failure>| match f {
        Ok(()) => Answer::Yes,
        Err(Failure::Unknown) => Answer::Unknown,
        Err(_) => Answer::No,
    };
    let search = |ctx: &Context, facts, goal: &Term, b: Budget| {
        let d = search_proof_detailed(ctx, facts, goal, b);
        match d.outcome {
            SearchOutcome::Found(_) => Answer::Yes,
            SearchOutcome::Refuted(_) => Answer::No,
            SearchOutcome::Unknown if d.exhausted => Answer::No,
            SearchOutcome::Unknown => Answer::Unknown,
        }
    };
    let ladder = [0, 1, 10, 100, 1_000, 10_000, 100_000, 1_000_000];
    let mut rows: Vec<Vec<Answer>> = Vec::new();
    for &fuel in &ladder {
        let b = Budget::new(fuel, 6, 60_000);
        rows.push(vec![
            judge(check(&ctx, &Term::cnst("obj"), &Term::cnst("QualifiedTemp"), &mut Fuel::new(fuel))),
            judge(check(&ctx, &bad, &Term::cnst("QualifiedBatch"), &mut Fuel::new(fuel))),
            judge(infer(&cctx, &press, &mut Fuel::new(fuel)).map(|_| ())),
            search(&bview, &bfacts, &goal, b),
            search(&ctx, &[], &Term::Empty, b),
        ]);
    }
    for j in 0..rows[0].len() {
        let column: Vec<&Answer> = rows.iter().map(|r| &r[j]).collect();
        ensure!(*column[0] == Answer::Unknown, "query {j} is definite at fuel 0");
        let first = column.iter().position(|a| **a != Answer::Unknown);
        let Some(first) = first else { return Err(format!("query {j} never becomes definite")) };
        ensure!(column[first..].iter().all(|a| *a == column[first]), "query {j} is not monotone: {column:?}");
    }
    Ok(format!("fuel 0 gives Unknown quickly; {} golden queries settle and stay settled", rows[0].len()))
}

fn oracle_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let small: Vec<F> = [1, 3, 5].iter().flat_map(|&n| formulas_of_size(n)).collect();
    let budget = Budget::new(10_000_000, 8, 60_000);
    let (mut found, rounds) = (0, 300);
    for i in 0..rounds {
        let k = rng.gen_range(0..=5);
        let facts: Vec<F> = (0..k).map(|_| small.choose(&mut rng).unwrap().clone()).collect();
        let goal = small.choose(&mut rng).unwrap().clone();
        let (ctx, fs) = setting(&facts);
        let want = Oracle::new(&goal, &facts).inhabited(&goal, &facts, 8);
        let got = search_proof(&ctx, &fs, &goal.to_term(), budget);
        ensure!(want == matches!(got, SearchOutcome::Found(_)), "case {i}: {facts:?} |- {goal:?}: oracle {want}, search {got:?}");
        found += want as usize;
    }
    Ok(format!("{rounds} sampled problems agree, {found} provable"))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("metatheory", metatheory),
        ("consistency", consistency),
        ("goldens", goldens),
        ("determinism", determinism),
        ("clocks and rejections", clocks_and_rejections),
        ("crash recovery", crash_recovery),
        ("causal order", causal_order),
        ("fuel", fuel_monotonicity),
        ("search vs enumeration", oracle_agreement),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match r {
            Ok(note) => println!("criterion {} {name}: PASS ({note}) [{:.1?}]", i + 1, t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why}) [{:.1?}]", i + 1, t.elapsed())
            }
        }
    }
    assert_eq!(failed, 0, "{failed} criteria failed");
}
