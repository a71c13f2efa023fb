mod common;

use common::gen::{brute_force, eval_lin, holds, lin_expr, pure_atom, pure_set};
use ooheap::arith::{entails_pure, simplify_expr, Entailment, PureSet, SatResult};
use ooheap::{CmpOp, PureAtom, SymExpr};
use proptest::prelude::*;

fn env() -> impl Strategy<Value = [i64; 3]> {
    [-8i64..=8, -8i64..=8, -8i64..=8]
}

proptest! {
    #![proptest_config(common::config(400))]

    #[test]
    fn sat_answers_agree_with_brute_force(p in pure_set()) {
        match p.check_sat() {
            SatResult::Unsat => prop_assert_eq!(brute_force(&p), None),
            SatResult::Sat(w) => {
                let env = ["x", "y", "z"].map(|v| w.get(v).unwrap_or(0));
                for a in p.atoms() {
                    prop_assert!(holds(a, env), "witness {:?} violates {:?}", env, a);
                }
            }
            SatResult::Unknown => {}
        }
    }

    #[test]
    fn simplification_preserves_value(e in lin_expr(), atoms in prop::collection::vec(pure_atom(), 0..6), env in env()) {
        // Keep the atoms that hold, so the assignment satisfies the context.
        let ctx = PureSet::from_atoms(atoms.into_iter().filter(|a| holds(a, env)));
        prop_assert_eq!(eval_lin(&simplify_expr(&e, &ctx), env), eval_lin(&e, env));
    }

    #[test]
    fn entailment_is_monotone(p in pure_set(), extra in pure_atom(), goal in pure_atom()) {
        if entails_pure(&p, &goal) == Entailment::Yes {
            prop_assert_ne!(entails_pure(&p.with(extra), &goal), Entailment::No);
        }
    }

    #[test]
    fn yes_means_valid_on_the_grid(p in pure_set(), goal in pure_atom(), env in env()) {
        if entails_pure(&p, &goal) == Entailment::Yes && p.atoms().iter().all(|a| holds(a, env)) {
            prop_assert!(holds(&goal, env));
        }
    }
}

fn v(n: &str) -> SymExpr {
    SymExpr::var(n)
}

#[test]
fn difference_cycle_is_unsat() {
    let p = PureSet::from_atoms([
        PureAtom::new(CmpOp::Lt, v("x"), v("y")),
        PureAtom::new(CmpOp::Lt, v("y"), v("z")),
        PureAtom::new(CmpOp::Le, v("z"), v("x")),
    ]);
    assert!(p.check_sat().is_unsat());
}

#[test]
fn congruence_and_disequality_clash() {
    let p = PureSet::from_atoms([PureAtom::eq(v("x"), v("y")), PureAtom::eq(v("y"), v("z")), PureAtom::ne(v("x"), v("z"))]);
    assert!(p.check_sat().is_unsat());
    let q = PureSet::from_atoms([PureAtom::eq(v("x"), v("y"))]);
    assert!(q.proves_eq(&v("y"), &v("x")));
}

#[test]
fn overflow_is_never_silent() {
    // x = MAX and x + 1 > x cannot both be decided by wrapping arithmetic.
    let p = PureSet::from_atoms([
        PureAtom::eq(v("x"), SymExpr::Int(i64::MAX)),
        PureAtom::new(CmpOp::Le, SymExpr::add(v("x"), SymExpr::Int(1)), v("x")),
    ]);
    assert_ne!(p.check_sat(), SatResult::Sat(Default::default()));
    assert!(matches!(p.check_sat(), SatResult::Unsat | SatResult::Unknown));
}

#[test]
fn nonlinear_goals_are_unknown_not_yes() {
    let p = PureSet::from_atoms([PureAtom::eq(v("x"), SymExpr::Int(2))]);
    let goal = PureAtom::eq(SymExpr::mul(v("y"), v("y")), SymExpr::Int(4));
    assert_ne!(entails_pure(&p, &goal), Entailment::Yes);
}
