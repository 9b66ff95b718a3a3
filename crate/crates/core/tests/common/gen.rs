//! Seeded generators shared by the integration tests.

use kos_core::{Context, Name, Sort, Term};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::oracle::{formulas_of_size, F, ATOMS};

/// Simple types of the generated fragment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    A,
    B,
    P,
    Val,
    Arrow(Box<Ty>, Box<Ty>),
    Prod(Box<Ty>, Box<Ty>),
    Sum(Box<Ty>, Box<Ty>),
}

impl Ty {
    fn arrow(a: Ty, b: Ty) -> Ty {
        Ty::Arrow(Box::new(a), Box::new(b))
    }
    fn prod(a: Ty, b: Ty) -> Ty {
        Ty::Prod(Box::new(a), Box::new(b))
    }
    fn sum(a: Ty, b: Ty) -> Ty {
        Ty::Sum(Box::new(a), Box::new(b))
    }

    pub fn to_term(&self) -> Term {
        match self {
            Ty::A => Term::cnst("A"),
            Ty::B => Term::cnst("B"),
            Ty::P => Term::cnst("P"),
            Ty::Val => Term::val_ty(),
            Ty::Arrow(a, b) => Term::arrow(a.to_term(), b.to_term()),
            Ty::Prod(a, b) => Term::product(a.to_term(), b.to_term()),
            Ty::Sum(a, b) => Term::sum(a.to_term(), b.to_term()),
        }
    }

    fn random(rng: &mut ChaCha8Rng, depth: u32) -> Ty {
        let leaf = [Ty::A, Ty::B, Ty::P, Ty::Val];
        if depth == 0 || rng.gen_bool(0.5) {
            return leaf.choose(rng).unwrap().clone();
        }
        let (a, b) = (Ty::random(rng, depth - 1), Ty::random(rng, depth - 1));
        match rng.gen_range(0..3) {
            0 => Ty::arrow(a, b),
            1 => Ty::prod(a, b),
            _ => Ty::sum(a, b),
        }
    }
}

/// The signature generated terms live in. `id_a` and `swap` are
/// definitions, so their uses unfold.
pub fn signature() -> Context {
    let (a, b) = (Term::cnst("A"), Term::cnst("B"));
    let mut ctx = Context::new();
    ctx.push_decl("A", Term::sort(Sort::Data(0))).unwrap();
    ctx.push_decl("B", Term::sort(Sort::Data(0))).unwrap();
    ctx.push_decl("P", Term::prop()).unwrap();
    ctx.push_decl("a", a.clone()).unwrap();
    ctx.push_decl("b", b.clone()).unwrap();
    ctx.push_decl("p", Term::cnst("P")).unwrap();
    ctx.push_decl("f", Term::arrow(a.clone(), b.clone())).unwrap();
    ctx.push_def("id_a", Term::lam("x", a.clone(), Term::var(0)), Term::arrow(a.clone(), a.clone())).unwrap();
    let ab = Term::product(a.clone(), b.clone());
    let ba = Term::product(b, a);
    let swap = Term::lam("q", ab.clone(), Term::pair(Term::proj2(Term::var(0)), Term::proj1(Term::var(0))));
    ctx.push_def("swap", swap, Term::arrow(ab, ba)).unwrap();
    ctx
}

/// Type-directed generator of closed well-typed terms that are rich in
/// redexes of every kind.
pub struct TermGen<'r> {
    rng: &'r mut ChaCha8Rng,
    locals: Vec<Ty>,
}

impl<'r> TermGen<'r> {
    pub fn new(rng: &'r mut ChaCha8Rng) -> Self {
        TermGen { rng, locals: Vec::new() }
    }

    /// A term and its type.
    pub fn sample(&mut self) -> (Term, Ty) {
        let ty = Ty::random(self.rng, 2);
        let t = self.term(&ty, 6);
        (t, ty)
    }

    fn under<T>(&mut self, ty: Ty, k: impl FnOnce(&mut Self) -> T) -> T {
        self.locals.push(ty);
        let r = k(self);
        self.locals.pop();
        r
    }

    fn atom(&mut self, ty: &Ty) -> Option<Term> {
        let n = self.locals.len();
        let vars: Vec<usize> = (0..n).filter(|&i| self.locals[n - 1 - i] == *ty).collect();
        if let Some(&i) = vars.choose(self.rng) {
            if self.rng.gen_bool(0.7) {
                return Some(Term::var(i));
            }
        }
        match ty {
            Ty::A if self.rng.gen_bool(0.3) => Some(Term::app(Term::cnst("id_a"), Term::cnst("a"))),
            Ty::A => Some(Term::cnst("a")),
            Ty::B if self.rng.gen_bool(0.3) => Some(Term::app(Term::cnst("f"), Term::cnst("a"))),
            Ty::B => Some(Term::cnst("b")),
            Ty::P => Some(Term::cnst("p")),
            Ty::Val => Some(Term::val(self.rng.gen_range(0..100))),
            _ => None,
        }
    }

    pub fn term(&mut self, ty: &Ty, fuel: u32) -> Term {
        if fuel == 0 {
            return self.canonical(ty, 0);
        }
        match self.rng.gen_range(0..10) {
            0..=3 => self.canonical(ty, fuel),
            4 => {
                let s = Ty::random(self.rng, 1);
                let body = self.under(s.clone(), |g| g.term(ty, fuel - 1));
                let arg = self.term(&s, fuel - 1);
                Term::app(Term::lam("x", s.to_term(), body), arg)
            }
            5 => {
                let s = Ty::random(self.rng, 1);
                let pair = Term::pair(self.term(&s, fuel - 1), self.term(ty, fuel - 1));
                let body = self.under(s, |g| g.under(ty.clone(), |g| g.term(ty, fuel - 1)));
                Term::split(pair, "x", "y", body)
            }
            6 => {
                let (s, other) = (Ty::random(self.rng, 1), Ty::random(self.rng, 1));
                let scrut = if self.rng.gen_bool(0.5) {
                    Term::inl(self.term(&s, fuel - 1), other.to_term())
                } else {
                    Term::inr(self.term(&other, fuel - 1), s.to_term())
                };
                let l = self.under(s, |g| g.term(ty, fuel - 1));
                let r = self.under(other, |g| g.term(ty, fuel - 1));
                Term::case(scrut, "l", l, "r", r)
            }
            7 => {
                let s = Ty::random(self.rng, 1);
                let bound = self.term(&s, fuel - 1);
                let annotation = self.rng.gen_bool(0.5).then(|| s.to_term());
                let body = self.under(s, |g| g.term(ty, fuel - 1));
                Term::let_in("v", bound, annotation, body)
            }
            8 => {
                let s = Ty::random(self.rng, 1);
                let fun = self.term(&Ty::arrow(s.clone(), ty.clone()), fuel - 1);
                Term::app(fun, self.term(&s, fuel - 1))
            }
            _ => match ty {
                Ty::B if self.rng.gen_bool(0.5) => {
                    let arg = Term::pair(self.term(&Ty::A, fuel - 1), self.term(&Ty::B, fuel - 1));
                    Term::proj1(Term::app(Term::cnst("swap"), arg))
                }
                _ => self.canonical(ty, fuel),
            },
        }
    }

    fn canonical(&mut self, ty: &Ty, fuel: u32) -> Term {
        if let Some(t) = self.atom(ty) {
            return t;
        }
        let next = fuel.saturating_sub(1);
        match ty {
            Ty::Arrow(a, b) => {
                let body = self.under((**a).clone(), |g| g.term(b, next));
                Term::lam("x", a.to_term(), body)
            }
            Ty::Prod(a, b) => Term::pair(self.term(a, next), self.term(b, next)),
            Ty::Sum(a, b) => {
                if self.rng.gen_bool(0.5) {
                    Term::inl(self.term(a, next), b.to_term())
                } else {
                    Term::inr(self.term(b, next), a.to_term())
                }
            }
            _ => unreachable!("base types always have an atom"),
        }
    }
}

/// Every binder name replaced, so digests can be compared across renaming.
pub fn rename_binders(t: &Term, tag: &str) -> Term {
    let r = |t: &Term| Box::new(rename_binders(t, tag));
    let n = |x: &Name| Name::new(format!("{}_{tag}", x.as_str()));
    match t {
        Term::Lam(x, a, b) => Term::Lam(n(x), a.as_ref().map(|a| r(a)), r(b)),
        Term::Pi(x, a, b) => Term::Pi(n(x), r(a), r(b)),
        Term::Sigma(x, a, b) => Term::Sigma(n(x), r(a), r(b)),
        Term::Split(p, x, y, b) => Term::Split(r(p), n(x), n(y), r(b)),
        Term::Case(s, x, l, y, rr) => Term::Case(r(s), n(x), r(l), n(y), r(rr)),
        Term::Let(x, v, a, b) => Term::Let(n(x), r(v), a.as_ref().map(|a| r(a)), r(b)),
        Term::App(f, a) => Term::App(r(f), r(a)),
        Term::Pair(a, b) => Term::Pair(r(a), r(b)),
        Term::Inl(a, b) => Term::Inl(r(a), r(b)),
        Term::Inr(a, b) => Term::Inr(r(a), r(b)),
        Term::J(m, b, p) => Term::J(r(m), r(b), r(p)),
        Term::Absurd(c, e) => Term::Absurd(r(c), r(e)),
        Term::Sum(a, b) => Term::Sum(r(a), r(b)),
        Term::IdType(a, u, v) => Term::IdType(r(a), r(u), r(v)),
        other => other.clone(),
    }
}

impl F {
    /// Classical truth under a valuation of the atoms (bit `i` for atom `i`).
    pub fn holds(&self, v: u8) -> bool {
        match self {
            F::Atom(i) => v & (1 << i) != 0,
            F::Empty => false,
            F::Imp(a, b) => !a.holds(v) || b.holds(v),
            F::And(a, b) => a.holds(v) && b.holds(v),
            F::Or(a, b) => a.holds(v) || b.holds(v),
        }
    }
}

/// A base of one to five facts with a classical model, hence no proof of
/// `Empty`.
pub fn consistent_base(rng: &mut ChaCha8Rng) -> Vec<F> {
    let pool: Vec<F> = [1, 3, 5].iter().flat_map(|&n| formulas_of_size(n)).collect();
    loop {
        let k = rng.gen_range(1..=5);
        let facts: Vec<F> = (0..k).map(|_| pool.choose(rng).unwrap().clone()).collect();
        if (0..1u8 << ATOMS.len()).any(|v| facts.iter().all(|f| f.holds(v))) {
            return facts;
        }
    }
}
