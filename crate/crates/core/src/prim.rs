//! Decision procedures for the built-in predicates.
//!
//! Each predicate is decided only on literal operands; anything else is
//! undecided and left to the caller (usually reported as `Unknown`).

use num_bigint::BigUint;

use crate::term::{BaseType, PrimTag, Term};

/// Expected base type of each operand position, `None` meaning "same as the first".
pub fn operand_type(tag: PrimTag, position: usize) -> Option<BaseType> {
    match tag {
        PrimTag::LeVal | PrimTag::LtVal | PrimTag::EqVal | PrimTag::GtPct => Some(BaseType::Val),
        PrimTag::LeTime | PrimTag::LtTime => Some(BaseType::Time),
        PrimTag::InSet => {
            let _ = position;
            None
        }
    }
}

/// Required operand count, `None` for variadic.
pub fn arity(tag: PrimTag) -> Option<usize> {
    match tag {
        PrimTag::LeVal | PrimTag::LtVal | PrimTag::EqVal | PrimTag::LeTime | PrimTag::LtTime => {
            Some(2)
        }
        PrimTag::GtPct => Some(3),
        PrimTag::InSet => None,
    }
}

fn val(t: &Term) -> Option<&BigUint> {
    match t {
        Term::ValLit(n) => Some(n),
        _ => None,
    }
}

fn time(t: &Term) -> Option<u64> {
    match t {
        Term::TimeLit(_, ms) => Some(*ms),
        _ => None,
    }
}

/// Decides `tag(args)` on normalized operands. `None` when an operand is not a literal.
pub fn decide(tag: PrimTag, args: &[Term]) -> Option<bool> {
    if let Some(n) = arity(tag) {
        if args.len() != n {
            return None;
        }
    }
    match tag {
        PrimTag::LeVal => Some(val(&args[0])? <= val(&args[1])?),
        PrimTag::LtVal => Some(val(&args[0])? < val(&args[1])?),
        PrimTag::EqVal => Some(val(&args[0])? == val(&args[1])?),
        PrimTag::LeTime => Some(time(&args[0])? <= time(&args[1])?),
        PrimTag::LtTime => Some(time(&args[0])? < time(&args[1])?),
        PrimTag::GtPct => {
            let (a, b, pct) = (val(&args[0])?, val(&args[1])?, val(&args[2])?);
            Some(a * 100u32 > b * pct)
        }
        PrimTag::InSet => {
            let (elem, members) = args.split_first()?;
            if !elem.is_literal() || !members.iter().all(Term::is_literal) {
                return None;
            }
            Some(members.contains(elem))
        }
    }
}

/// Human-readable relation symbol for reports.
pub fn relation_symbol(tag: PrimTag) -> &'static str {
    match tag {
        PrimTag::LeVal | PrimTag::LeTime => "<=",
        PrimTag::LtVal | PrimTag::LtTime => "<",
        PrimTag::EqVal => "=",
        PrimTag::InSet => "in",
        PrimTag::GtPct => ">",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn over_temperature_and_pump_pressure_are_refuted() {
        assert_eq!(decide(PrimTag::LeVal, &[Term::val(82), Term::val(80)]), Some(false));
        assert_eq!(decide(PrimTag::LeVal, &[Term::val(120), Term::val(110)]), Some(false));
        assert_eq!(decide(PrimTag::LeVal, &[Term::val(25), Term::val(25)]), Some(true));
    }

    #[test]
    fn time_comparison_on_stamps() {
        let t0755 = Term::stamp(7 * 3_600_000 + 55 * 60_000);
        let t1000 = Term::stamp(10 * 3_600_000);
        assert_eq!(decide(PrimTag::LtTime, &[t0755.clone(), t1000.clone()]), Some(true));
        assert_eq!(decide(PrimTag::LtTime, &[t1000, t0755]), Some(false));
    }

    #[test]
    fn percentage_guard() {
        // loss 300 against total 1000 at 20%: 30000 > 20000
        assert_eq!(decide(PrimTag::GtPct, &[Term::val(300), Term::val(1000), Term::val(20)]), Some(true));
        assert_eq!(decide(PrimTag::GtPct, &[Term::val(200), Term::val(1000), Term::val(20)]), Some(false));
    }

    #[test]
    fn set_membership_and_non_literals() {
        let args = [Term::id_lit("M3"), Term::id_lit("M1"), Term::id_lit("M3")];
        assert_eq!(decide(PrimTag::InSet, &args), Some(true));
        assert_eq!(decide(PrimTag::InSet, &[Term::id_lit("M9"), Term::id_lit("M1")]), Some(false));
        assert_eq!(decide(PrimTag::LeVal, &[Term::Var(0), Term::val(1)]), None);
        assert_eq!(decide(PrimTag::LeVal, &[Term::val(1)]), None);
    }
}
