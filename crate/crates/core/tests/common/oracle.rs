//! Exhaustive inhabitation oracle for the propositional fragment.
//!
//! `Oracle::inhabited` answers whether some term of size at most `max`
//! has the goal type, by computing for every context and size the set of
//! types of all terms of exactly that size. Term formers covered: variables,
//! constants, annotated lambdas, application, pairs, `split`, injections,
//! `case` and `absurd`; sizes follow the calculus (one per node, annotations
//! free). The type of every subterm, and every annotation, is drawn from the
//! subformula closure of the goal and the facts, which makes the set finite.

use std::collections::{BTreeSet, HashMap};

use kos_core::search::Fact;
use kos_core::{Context, Term};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum F {
    Atom(u8),
    Empty,
    Imp(Box<F>, Box<F>),
    And(Box<F>, Box<F>),
    Or(Box<F>, Box<F>),
}

pub const ATOMS: [&str; 3] = ["P", "Q", "R"];

impl F {
    pub fn imp(a: F, b: F) -> F {
        F::Imp(Box::new(a), Box::new(b))
    }
    pub fn and(a: F, b: F) -> F {
        F::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: F, b: F) -> F {
        F::Or(Box::new(a), Box::new(b))
    }

    pub fn size(&self) -> usize {
        match self {
            F::Atom(_) | F::Empty => 1,
            F::Imp(a, b) | F::And(a, b) | F::Or(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            F::Atom(i) => Term::cnst(ATOMS[*i as usize]),
            F::Empty => Term::Empty,
            F::Imp(a, b) => Term::arrow(a.to_term(), b.to_term()),
            F::And(a, b) => Term::product(a.to_term(), b.to_term()),
            F::Or(a, b) => Term::sum(a.to_term(), b.to_term()),
        }
    }

    fn subformulas(&self, out: &mut BTreeSet<F>) {
        out.insert(self.clone());
        if let F::Imp(a, b) | F::And(a, b) | F::Or(a, b) = self {
            a.subformulas(out);
            b.subformulas(out);
        }
    }
}

/// Every formula over [`ATOMS`] and `Empty` of exactly `size` nodes.
pub fn formulas_of_size(size: usize) -> Vec<F> {
    if size == 1 {
        let mut v: Vec<F> = (0..ATOMS.len() as u8).map(F::Atom).collect();
        v.push(F::Empty);
        return v;
    }
    let mut out = Vec::new();
    for i in 1..size - 1 {
        let (ls, rs) = (formulas_of_size(i), formulas_of_size(size - 1 - i));
        for l in &ls {
            for r in &rs {
                out.push(F::imp(l.clone(), r.clone()));
                out.push(F::and(l.clone(), r.clone()));
                out.push(F::or(l.clone(), r.clone()));
            }
        }
    }
    out
}

/// The context and fact list a search over `facts` runs in.
pub fn setting(facts: &[F]) -> (Context, Vec<Fact>) {
    let mut ctx = Context::new();
    for a in ATOMS {
        ctx.push_decl(a, Term::prop()).unwrap();
    }
    let mut out = Vec::new();
    for (i, f) in facts.iter().enumerate() {
        let name = format!("h{i}");
        ctx.push_decl(&name, f.to_term()).unwrap();
        out.push(Fact::new(name, f.to_term()));
    }
    (ctx, out)
}

/// A set of closure members, one bit each.
type Set = u64;

fn bits(s: Set) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| s & (1 << i) != 0)
}

pub struct Oracle {
    closure: Vec<F>,
    /// `imp[a][b]` is the index of `a -> b` when that is in the closure.
    imp: Vec<Vec<Option<usize>>>,
    and: Vec<Vec<Option<usize>>>,
    or: Vec<Vec<Option<usize>>>,
    empty: Option<usize>,
    all: Set,
    memo: HashMap<(Set, usize), Set>,
}

impl Oracle {
    pub fn new(goal: &F, facts: &[F]) -> Self {
        let mut members = BTreeSet::new();
        goal.subformulas(&mut members);
        for f in facts {
            f.subformulas(&mut members);
        }
        let closure: Vec<F> = members.into_iter().collect();
        assert!(closure.len() <= 64, "closure too large for the bitset");
        let index = |f: &F| closure.iter().position(|g| g == f);
        let table = |mk: fn(F, F) -> F| -> Vec<Vec<Option<usize>>> {
            closure.iter().map(|a| closure.iter().map(|b| index(&mk(a.clone(), b.clone()))).collect()).collect()
        };
        let (imp, and, or) = (table(F::imp), table(F::and), table(F::or));
        let all = if closure.len() == 64 { !0 } else { (1 << closure.len()) - 1 };
        Oracle { empty: index(&F::Empty), imp, and, or, all, memo: HashMap::new(), closure }
    }

    fn set_of(&self, fs: &[F]) -> Set {
        fs.iter().fold(0, |s, f| s | 1 << self.closure.iter().position(|g| g == f).expect("in closure"))
    }

    pub fn inhabited(&mut self, goal: &F, facts: &[F], max: usize) -> bool {
        let ctx = self.set_of(facts);
        let g = self.set_of(std::slice::from_ref(goal));
        (1..=max).any(|n| self.types(ctx, n) & g != 0)
    }

    /// Types of all terms of exactly `n` nodes in `ctx`.
    fn types(&mut self, ctx: Set, n: usize) -> Set {
        if let Some(&s) = self.memo.get(&(ctx, n)) {
            return s;
        }
        let m = self.closure.len();
        let mut out: Set = 0;
        if n == 1 {
            out = ctx;
        } else {
            // lambda
            for a in 0..m {
                for b in bits(self.types(ctx | 1 << a, n - 1)) {
                    if let Some(f) = self.imp[a][b] {
                        out |= 1 << f;
                    }
                }
            }
            let smaller = self.types(ctx, n - 1);
            // injections, absurd
            for a in bits(smaller) {
                for b in 0..m {
                    for f in [self.or[a][b], self.or[b][a]].into_iter().flatten() {
                        out |= 1 << f;
                    }
                }
            }
            if self.empty.is_some_and(|e| smaller & (1 << e) != 0) {
                out |= self.all;
            }
            // application, pairs, split
            for i in 1..n - 1 {
                let j = n - 1 - i;
                let (left, right) = (self.types(ctx, i), self.types(ctx, j));
                for t in bits(left) {
                    for u in bits(right) {
                        if let Some(f) = self.and[t][u] {
                            out |= 1 << f;
                        }
                    }
                    for (a, b) in self.pairs(&self.and, t) {
                        out |= self.types(ctx | 1 << a | 1 << b, j);
                    }
                }
                for a in bits(right) {
                    for b in 0..m {
                        if let Some(f) = self.imp[a][b] {
                            if left & (1 << f) != 0 {
                                out |= 1 << b;
                            }
                        }
                    }
                }
            }
            // case
            for i in 1..n.saturating_sub(2) {
                for t in bits(self.types(ctx, i)) {
                    for (a, b) in self.pairs(&self.or, t) {
                        for j in 1..n - 1 - i {
                            let k = n - 1 - i - j;
                            out |= self.types(ctx | 1 << a, j) & self.types(ctx | 1 << b, k);
                        }
                    }
                }
            }
        }
        self.memo.insert((ctx, n), out);
        out
    }

    /// The components of closure member `t` if it was built by `table`.
    fn pairs(&self, table: &[Vec<Option<usize>>], t: usize) -> Vec<(usize, usize)> {
        let m = self.closure.len();
        (0..m).flat_map(|a| (0..m).map(move |b| (a, b))).filter(|&(a, b)| table[a][b] == Some(t)).collect()
    }
}
