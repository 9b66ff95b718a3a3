//! Watchers: rules evaluated after each committed transition that derive
//! new events from freshly committed knowledge.

use crate::context::Context;
use crate::kernel::{Defs, Event, KernelState, KnowledgeItem};
use crate::reduce::Fuel;
use crate::surface::ast::Skel;
use crate::term::Term;
use crate::typeck::Checker;

use super::{auto_prove, build_root_cause, Budget, Fact, Proved, RootCauseOutcome};

#[derive(Debug, Clone, PartialEq)]
pub enum Watcher {
    /// Fires for each pair of active items of the two types whose keys agree
    /// and whose guard is provable, when at least one of them is new. Key,
    /// guard and argument skeleton sit under two binders, partner innermost.
    Join {
        name: String,
        subject_ty: Term,
        partner_ty: Term,
        key: (Term, Term),
        guard: Option<Term>,
        event: String,
        args: Skel,
    },
    /// Builds a root-cause report for each new item of the subject type; the
    /// target event's argument type is the report type.
    Trace { name: String, subject_ty: Term, event: String },
}

impl Watcher {
    pub fn name(&self) -> &str {
        match self {
            Watcher::Join { name, .. } | Watcher::Trace { name, .. } => name,
        }
    }
}

fn of_type<'s>(ck: &mut Checker<'_>, state: &'s KernelState, ty: &Term) -> Vec<&'s KnowledgeItem> {
    state
        .get_knowledge()
        .filter(|i| ck.conv(&i.ty, ty).unwrap_or(false))
        .collect()
}

/// Instantiates a skeleton against the expected type, proving holes.
fn fill(ctx: &Context, facts: &[Fact], skel: &Skel, expected: &Term, s: &Term, p: &Term, budget: Budget) -> Option<Term> {
    match skel {
        Skel::Term(t) => Some(t.instantiate2(s, p)),
        Skel::Hole => match auto_prove(ctx, facts, expected, budget) {
            Proved::Proof(t) => Some(t),
            _ => None,
        },
        Skel::Tuple(items) => {
            let (first, rest) = items.split_first()?;
            if rest.is_empty() {
                return fill(ctx, facts, first, expected, s, p, budget);
            }
            let mut fuel = Fuel::new(budget.fuel);
            let Ok(Term::Sigma(_, a, b)) = Checker::new(ctx, &mut fuel).whnf(expected) else { return None };
            let x = fill(ctx, facts, first, &a, s, p, budget)?;
            let tail = if rest.len() == 1 { rest[0].clone() } else { Skel::Tuple(rest.to_vec()) };
            let y = fill(ctx, facts, &tail, &b.instantiate(&x), s, p, budget)?;
            Some(Term::pair(x, y))
        }
    }
}

/// Events derived from items committed at the current clock, in watcher
/// order and then item order.
pub fn run_watchers(state: &KernelState, defs: &Defs, watchers: &[Watcher], budget: Budget) -> Vec<Event> {
    let view = state.view(defs);
    let facts = state.facts(defs);
    let is_new = |i: &KnowledgeItem| i.committed_at == state.clock && state.clock > 0;
    let mut out = Vec::new();
    for w in watchers {
        let mut fuel = Fuel::new(budget.fuel);
        let mut ck = Checker::new(&view, &mut fuel);
        match w {
            Watcher::Join { subject_ty, partner_ty, key, guard, event, args, .. } => {
                let Some(def) = defs.event(event) else { continue };
                let subjects = of_type(&mut ck, state, subject_ty);
                let partners = of_type(&mut ck, state, partner_ty);
                for s in &subjects {
                    for p in &partners {
                        if s.id == p.id || !(is_new(s) || is_new(p)) {
                            continue;
                        }
                        let (sc, pc) = (Term::Const(s.id.clone()), Term::Const(p.id.clone()));
                        let (ks, kp) = (key.0.instantiate2(&sc, &pc), key.1.instantiate2(&sc, &pc));
                        if !ck.conv(&ks, &kp).unwrap_or(false) {
                            continue;
                        }
                        if let Some(g) = guard {
                            let g = g.instantiate2(&sc, &pc);
                            if !matches!(auto_prove(&view, &facts, &g, budget), Proved::Proof(_)) {
                                continue;
                            }
                        }
                        if let Some(a) = fill(&view, &facts, args, &def.args_ty, &sc, &pc, budget) {
                            out.push(Event::new(event, a, None));
                        }
                    }
                }
            }
            Watcher::Trace { subject_ty, event, .. } => {
                let Some(def) = defs.event(event) else { continue };
                let items: Vec<KnowledgeItem> = state.get_knowledge().cloned().collect();
                for f in of_type(&mut ck, state, subject_ty) {
                    if !is_new(f) {
                        continue;
                    }
                    if let RootCauseOutcome::Found(rc) =
                        build_root_cause(&view, &facts, &items, &f.id, &def.args_ty, budget)
                    {
                        out.push(Event::new(event, rc.report, None));
                    }
                }
            }
        }
    }
    out
}
