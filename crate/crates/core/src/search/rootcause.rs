//! Root-cause reports: dependent tuples whose data components are chosen
//! from knowledge items and whose propositional components are proved leaf
//! by leaf.

use crate::context::Context;
use crate::kernel::KnowledgeItem;
use crate::prim::relation_symbol;
use crate::reduce::Fuel;
use crate::surface::lexer::clock_time;
use crate::term::{PrimTag, Sort, Term, TimeKind};
use crate::typeck::{Checker, Failure};

use super::{auto_prove_with, Budget, Fact, Proved};

/// A primitive comparison verified while building a report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leaf {
    pub tag: PrimTag,
    pub args: Vec<Term>,
}

fn literal(t: &Term) -> String {
    match t {
        Term::TimeLit(TimeKind::Stamp, ms) => clock_time(*ms),
        Term::TimeLit(TimeKind::Duration, ms) => format!("+{ms}ms"),
        Term::IdLit(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Leaf {
    /// The comparison with literals shown, e.g. `07:55 < 10:00`.
    pub fn render(&self) -> String {
        let a: Vec<String> = self.args.iter().map(literal).collect();
        match (self.tag, a.as_slice()) {
            (PrimTag::InSet, [x, rest @ ..]) => format!("{x} in {{{}}}", rest.join(", ")),
            (PrimTag::GtPct, [x, total, pct]) => format!("{x} > {pct}% of {total}"),
            (tag, [x, y]) => format!("{x} {} {y}", relation_symbol(tag)),
            (tag, _) => format!("{}({})", tag.keyword(), a.join(", ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootCause {
    /// The report term; it checks against `report_ty`.
    pub report: Term,
    pub report_ty: Term,
    /// Binder name and chosen item id for each data component, in order.
    pub parts: Vec<(String, String)>,
    pub leaves: Vec<Leaf>,
}

impl RootCause {
    pub fn item_for(&self, binder: &str) -> Option<&str> {
        self.parts.iter().find(|(b, _)| b == binder).map(|(_, id)| id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RootCauseOutcome {
    Found(RootCause),
    NotFound,
    Unknown,
}

struct Builder<'a> {
    ctx: &'a Context,
    facts: &'a [Fact],
    items: &'a [KnowledgeItem],
    budget: Budget,
    fuel: Fuel,
    unknown: bool,
    parts: Vec<(String, String)>,
    leaves: Vec<Leaf>,
}

/// Sort key for candidates: first time literal, then first identifier literal.
fn tie_key(t: &Term) -> (Option<u64>, Option<String>) {
    fn walk(t: &Term, time: &mut Option<u64>, id: &mut Option<String>) {
        match t {
            Term::TimeLit(TimeKind::Stamp, ms) if time.is_none() => *time = Some(*ms),
            Term::IdLit(s) if id.is_none() => *id = Some(s.clone()),
            _ => {
                for (c, _) in t.children_with_binders() {
                    walk(c, time, id);
                }
            }
        }
    }
    let (mut time, mut id) = (None, None);
    walk(t, &mut time, &mut id);
    (time, id)
}

type Step<T> = Result<T, ()>;

impl Builder<'_> {
    fn checker(&mut self) -> Checker<'_> {
        Checker::new(self.ctx, &mut self.fuel)
    }

    fn sort(&mut self, ty: &Term) -> Step<Option<Sort>> {
        match self.checker().sort_of(ty) {
            Ok(s) => Ok(Some(s)),
            Err(Failure::Type(_)) => Ok(None),
            Err(Failure::Unknown) => Err(()),
        }
    }

    fn candidates(&mut self, ty: &Term, fixed: Option<&str>) -> Step<Vec<String>> {
        let mut out = Vec::new();
        for item in self.items.iter().filter(|i| i.is_active()) {
            if fixed.is_some_and(|f| f != item.id) {
                continue;
            }
            if self.checker().conv(&item.ty, ty).map_err(|_| ())? {
                let normal = self.checker().nf(&item.term).map_err(|_| ())?;
                out.push((tie_key(&normal), item.id.clone()));
            }
        }
        out.sort();
        Ok(out.into_iter().map(|(_, id)| id).collect())
    }

    fn prove(&mut self, goal: &Term) -> Step<Option<Term>> {
        let mut leaves = Vec::new();
        let r = auto_prove_with(self.ctx, self.facts, goal, self.budget, &mut self.fuel, &mut |tag, args| {
            leaves.push(Leaf { tag, args: args.to_vec() })
        });
        match r {
            Proved::Proof(p) => {
                self.leaves.extend(leaves);
                Ok(Some(p))
            }
            Proved::Refuted | Proved::NotFound => Ok(None),
            Proved::Unknown => {
                self.unknown = true;
                Ok(None)
            }
        }
    }

    fn fill(&mut self, ty: &Term, fixed: Option<&str>) -> Step<Option<Term>> {
        let ty = self.checker().whnf(ty).map_err(|_| ())?;
        let Term::Sigma(x, a, b) = &ty else {
            return match self.sort(&ty)? {
                Some(Sort::Prop) => self.prove(&ty),
                Some(_) => Ok(self.candidates(&ty, fixed)?.into_iter().next().map(Term::Const)),
                None => Ok(None),
            };
        };
        if self.sort(a)? == Some(Sort::Prop) {
            let mark = self.leaves.len();
            let Some(p) = self.prove(a)? else { return Ok(None) };
            return match self.fill(&b.instantiate(&p), None)? {
                Some(rest) => Ok(Some(Term::pair(p, rest))),
                None => {
                    self.leaves.truncate(mark);
                    Ok(None)
                }
            };
        }
        for id in self.candidates(a, fixed)? {
            let (mark, parts) = (self.leaves.len(), self.parts.len());
            self.parts.push((x.as_str().to_owned(), id.clone()));
            let c = Term::Const(id);
            if let Some(rest) = self.fill(&b.instantiate(&c), None)? {
                return Ok(Some(Term::pair(c, rest)));
            }
            self.leaves.truncate(mark);
            self.parts.truncate(parts);
        }
        Ok(None)
    }
}

/// What a report must show about `failure`: the rest of the report type
/// with the failure fixed. `None` if the report is not a pair over it.
pub fn failure_goal(ctx: &Context, report_ty: &Term, failure: &str, budget: Budget) -> Option<Term> {
    let mut fuel = Fuel::new(budget.fuel);
    match Checker::new(ctx, &mut fuel).whnf(report_ty) {
        Ok(Term::Sigma(_, _, rest)) => Some(rest.instantiate(&Term::cnst(failure))),
        _ => None,
    }
}

/// Builds a report of type `report_ty` whose first component is `failure`.
/// Candidates for each later component are tried earliest-first.
pub fn build_root_cause(
    ctx: &Context,
    facts: &[Fact],
    items: &[KnowledgeItem],
    failure: &str,
    report_ty: &Term,
    budget: Budget,
) -> RootCauseOutcome {
    let mut b = Builder {
        ctx,
        facts,
        items,
        budget,
        fuel: Fuel::new(budget.fuel),
        unknown: false,
        parts: Vec::new(),
        leaves: Vec::new(),
    };
    if budget.fuel == 0 {
        return RootCauseOutcome::Unknown;
    }
    match b.fill(report_ty, Some(failure)) {
        Ok(Some(report)) => {
            let mut fuel = Fuel::new(budget.fuel);
            debug_assert!(crate::typeck::check(ctx, &report, report_ty, &mut fuel).is_ok());
            RootCauseOutcome::Found(RootCause {
                report,
                report_ty: report_ty.clone(),
                parts: b.parts,
                leaves: b.leaves,
            })
        }
        Ok(None) if !b.unknown => RootCauseOutcome::NotFound,
        Ok(None) | Err(()) => RootCauseOutcome::Unknown,
    }
}
