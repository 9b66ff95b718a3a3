//! Loading a `.kos` module into a global context, event definitions,
//! initial knowledge, templates and watchers.

use std::collections::BTreeMap;

use crate::context::Context;
use crate::kernel::{unify, Defs, Effect, EventDef, KernelState, KnowledgeItem, UnifyOutcome, NOW};
use crate::reduce::Fuel;
use crate::search::{Budget, Watcher};
use crate::surface::ast::{DeclKind, EffectDecl, EventDecl, ModuleAst, TemplateDecl, WatcherDecl};
use crate::surface::{parse_defs, Diagnostic, Span};
use crate::term::{Sort, Term};
use crate::typeck::{Checker, Failure};

/// Fuel for checking declarations.
const LOAD_FUEL: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct Env {
    pub defs: Defs,
    pub initial: KernelState,
    pub templates: Vec<TemplateDecl>,
    pub watchers: Vec<Watcher>,
}

fn failure(span: Span, what: &str, f: Failure) -> Diagnostic {
    match f {
        Failure::Type(e) => Diagnostic::error(span, format!("{what}: {e}")),
        Failure::Unknown => Diagnostic::error(span, format!("{what}: ran out of fuel while checking")),
    }
}

impl Env {
    pub fn load(src: &str) -> Result<Env, Vec<Diagnostic>> {
        let (module, _) = parse_defs(src)?;
        Env::from_module(&module)
    }

    pub fn from_module(m: &ModuleAst) -> Result<Env, Vec<Diagnostic>> {
        let mut ctx = Context::new();
        let mut errors = Vec::new();
        let mut events = BTreeMap::new();
        let mut event_decls = Vec::new();
        let mut facts = Vec::new();
        let mut templates = Vec::new();
        let mut watcher_decls = Vec::new();

        for d in &m.decls {
            let span = d.span();
            let mut fuel = Fuel::new(LOAD_FUEL);
            let entry = match &d.kind {
                DeclKind::Sort { name, sort } => Ok((name, None, Term::sort(*sort))),
                DeclKind::Axiom { name, ty } => {
                    Checker::new(&ctx, &mut fuel).sort_of(ty).map(|_| (name, None, ty.clone()))
                }
                DeclKind::Type { name, sort, body } => {
                    let mut ck = Checker::new(&ctx, &mut fuel);
                    let s = match sort {
                        Some(s) => ck.check(body, &Term::sort(*s)).map(|_| *s),
                        None => ck.sort_of(body),
                    };
                    s.map(|s| (name, Some(body.clone()), Term::sort(s)))
                }
                DeclKind::Def { name, ty, body } => {
                    let mut ck = Checker::new(&ctx, &mut fuel);
                    let ty = match ty {
                        Some(ty) => ck.sort_of(ty).and_then(|_| ck.check(body, ty)).map(|_| ty.clone()),
                        None => ck.infer(body),
                    };
                    ty.map(|ty| (name, Some(body.clone()), ty))
                }
                DeclKind::Fact { id, ty, body } => {
                    facts.push((span, KnowledgeItem::new(id, body.clone(), ty.clone(), 0)));
                    continue;
                }
                DeclKind::Event(e) => {
                    event_decls.push((span, e.clone()));
                    continue;
                }
                DeclKind::Template(t) => {
                    templates.push(t.clone());
                    continue;
                }
                DeclKind::Watcher(w) => {
                    watcher_decls.push((span, w.clone()));
                    continue;
                }
            };
            match entry {
                Ok((name, body, ty)) => {
                    let pushed = match body {
                        Some(b) => ctx.push_def(name, b, ty),
                        None => ctx.push_decl(name, ty),
                    };
                    if pushed.is_err() {
                        errors.push(Diagnostic::error(span, format!("`{name}` is declared twice")));
                    }
                }
                Err(f) => errors.push(failure(span, &format!("declaration `{}`", d.kind.name()), f)),
            }
        }

        for (span, e) in &event_decls {
            let mut fuel = Fuel::new(LOAD_FUEL);
            match Checker::new(&ctx, &mut fuel).sort_of(&e.args_ty) {
                Ok(_) => {
                    events.insert(e.name.clone(), event_def(e));
                }
                Err(f) => errors.push(failure(*span, &format!("arguments of event `{}`", e.name), f)),
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }

        let defs = Defs::new(ctx, events);
        let mut state = KernelState::default();
        for (span, item) in facts {
            let id = item.id.clone();
            match unify(&state, &defs, item, Budget::consistency()) {
                Ok(UnifyOutcome::Merged(s)) | Ok(UnifyOutcome::Quarantined(s)) => state = s,
                Ok(UnifyOutcome::Unknown) => {
                    errors.push(Diagnostic::error(span, format!("fact `{id}`: ran out of fuel while checking")))
                }
                Err(r) => errors.push(Diagnostic::error(span, format!("fact {}", r.detail))),
            }
        }

        for (span, e) in &event_decls {
            errors.extend(check_clauses(&defs, &state, &event_decls, e).into_iter().map(|m| {
                Diagnostic::error(*span, format!("event `{}`: {m}", e.name))
            }));
        }

        let mut watchers = Vec::new();
        for (span, w) in watcher_decls {
            let mut fuel = Fuel::new(LOAD_FUEL);
            let mut ck = Checker::new(&defs.ctx, &mut fuel);
            let w = match w {
                WatcherDecl::Join { name, subject, partner, key, guard, event, args } => {
                    if let Err(f) = ck.sort_of(&subject.1).and_then(|_| ck.sort_of(&partner.1)) {
                        errors.push(failure(span, &format!("watcher `{name}`"), f));
                        continue;
                    }
                    Watcher::Join { name, subject_ty: subject.1, partner_ty: partner.1, key, guard, event, args }
                }
                WatcherDecl::Trace { name, subject, event } => {
                    if let Err(f) = ck.sort_of(&subject.1) {
                        errors.push(failure(span, &format!("watcher `{name}`"), f));
                        continue;
                    }
                    Watcher::Trace { name, subject_ty: subject.1, event }
                }
            };
            watchers.push(w);
        }

        if errors.is_empty() {
            Ok(Env { defs, initial: state, templates, watchers })
        } else {
            Err(errors)
        }
    }

    /// The report type built for failures of `failure_ty`: the argument type
    /// of the event targeted by a matching trace watcher.
    pub fn report_type(&self, failure_ty: &Term) -> Option<Term> {
        let mut fuel = Fuel::new(LOAD_FUEL);
        let mut ck = Checker::new(&self.defs.ctx, &mut fuel);
        self.watchers.iter().find_map(|w| match w {
            Watcher::Trace { subject_ty, event, .. } if ck.conv(subject_ty, failure_ty).unwrap_or(false) => {
                self.defs.event(event).map(|e| e.args_ty.clone())
            }
            _ => None,
        })
    }
}

fn event_def(e: &EventDecl) -> EventDef {
    EventDef {
        name: e.name.clone(),
        args_ty: e.args_ty.clone(),
        pre: e.pre.clone(),
        effects: e
            .effects
            .iter()
            .map(|eff| match eff {
                EffectDecl::Add { id, ty, term } => Effect::Add { id: id.clone(), ty: ty.clone(), term: term.clone() },
                EffectDecl::Retract(id) => Effect::Retract(id.clone()),
                EffectDecl::Emit { event, args } => Effect::Emit { event: event.clone(), args: args.clone() },
            })
            .collect(),
        post: e.post.clone(),
    }
}

/// Checks clause terms against the initial knowledge, with every item an
/// event may add declared at its type. Templated ids cannot be referenced.
fn check_clauses(defs: &Defs, state: &KernelState, all: &[(Span, EventDecl)], e: &EventDecl) -> Vec<String> {
    let mut view = state.view(defs);
    for (_, other) in all {
        for eff in &other.effects {
            if let EffectDecl::Add { id, ty, .. } = eff {
                if !id.contains('{') && !view.contains(id) && ty.free_vars().is_empty() {
                    let _ = view.push_decl(id, ty.clone());
                }
            }
        }
    }
    let mut errs = Vec::new();
    let mut fuel = Fuel::new(LOAD_FUEL);
    let mut ck = Checker::new(&view, &mut fuel);
    ck.push_local(e.args_ty.clone());
    let mut prop = |ck: &mut Checker<'_>, t: &Term, what: &str| match ck.sort_of(t) {
        Ok(Sort::Prop) => {}
        Ok(s) => errs.push(format!("{what} lives in {s:?}, not Prop")),
        Err(f) => errs.push(format!("{what}: {f}")),
    };
    if let Some(p) = &e.pre {
        prop(&mut ck, p, "pre");
    }
    if let Some(p) = &e.post {
        prop(&mut ck, p, "post");
    }
    for eff in &e.effects {
        let r = match eff {
            EffectDecl::Add { id, ty, term } => {
                ck.sort_of(ty).and_then(|_| ck.check(term, ty)).map_err(|f| format!("add {id}: {f}"))
            }
            EffectDecl::Retract(id) if id != NOW && !ck.context().contains(id) => {
                Err(format!("retract {id}: no such item"))
            }
            EffectDecl::Retract(_) => Ok(()),
            EffectDecl::Emit { event, args } => match defs.event(event) {
                Some(target) => ck.check(args, &target.args_ty.shift(1, 0)).map_err(|f| format!("emit {event}: {f}")),
                None => Err(format!("emit {event}: unknown event")),
            },
        };
        if let Err(m) = r {
            errs.push(m);
        }
    }
    errs
}
