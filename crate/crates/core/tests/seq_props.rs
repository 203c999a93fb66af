mod common;

use std::collections::BTreeSet;

use aeff_core::seq::{enumerate_redexes, result_status, step};
use aeff_core::syntax::{fv_comp, fv_value, subst_comp};
use aeff_core::{alpha_eq, AnnEnv, Checker, CompType, Computation, Store, ValueType};
use common::{signature, tape, Ctx, TermGen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

/// Synthesizes the least type and returns the elaborated term with the
/// annotation environment it needs.
fn typed(m: &Computation) -> (Computation, CompType, AnnEnv) {
    let sig = signature();
    let mut c = Checker::new(&sig, AnnEnv::new());
    let (m, t) = c.synth(&Ctx::new(), m).unwrap_or_else(|e| panic!("generated term is ill-typed: {e}\n{m}"));
    (m, t, c.into_env())
}

fn checks(m: &Computation, t: &CompType, env: &AnnEnv) -> Result<(), String> {
    let sig = signature();
    let mut c = Checker::new(&sig, env.clone());
    c.check(&Ctx::new(), m, t).map(|_| ()).map_err(|e| e.to_string())
}

proptest! {
    #![proptest_config(cases(1000))]

    /// Every terminal state reached by a random scheduler is a result, and
    /// results have no redexes.
    #[test]
    fn progress_and_finality(t in tape(), seed in any::<u64>()) {
        let (m, _) = TermGen::new(&t).closed_comp(8);
        let (mut m, _, _) = typed(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = Store::new();
        for _ in 0..200 {
            let rs = enumerate_redexes(&m);
            let status = result_status(&BTreeSet::new(), &m);
            if status.is_comp_result() {
                prop_assert!(rs.is_empty(), "result with redexes: {m}");
            }
            if rs.is_empty() {
                prop_assert!(status.is_comp_result(), "stuck: {m}");
                break;
            }
            let r = &rs[rng.gen_range(0..rs.len())];
            m = step(&m, r, &mut store).map_err(|e| TestCaseError::fail(format!("{e}: {m}")))?;
        }
    }

    #[test]
    fn preservation(t in tape(), seed in any::<u64>()) {
        let (m, _) = TermGen::new(&t).closed_comp(8);
        let (mut m, ty, env) = typed(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = Store::new();
        for _ in 0..200 {
            let rs = enumerate_redexes(&m);
            if rs.is_empty() {
                break;
            }
            let r = &rs[rng.gen_range(0..rs.len())];
            let next = step(&m, r, &mut store).map_err(|e| TestCaseError::fail(e.to_string()))?;
            if let Err(e) = checks(&next, &ty, &env) {
                return Err(TestCaseError::fail(format!("{m}\n--{r}-->\n{next}\nat {ty}: {e}")));
            }
            m = next;
        }
    }

    #[test]
    fn step_is_deterministic(t in tape()) {
        let (m, _) = TermGen::new(&t).closed_comp(8);
        for r in enumerate_redexes(&m) {
            let a = step(&m, &r, &mut Store::new()).unwrap();
            let b = step(&m, &r, &mut Store::new()).unwrap();
            prop_assert!(alpha_eq(&a, &b));
        }
    }

    #[test]
    fn subsumption(t in tape(), t2 in tape()) {
        let (m, _) = TermGen::new(&t).closed_comp(6);
        let mut g = common::AnnGen::new(&t2);
        let extra = g.effect();
        let sig = signature();
        let mut c = Checker::new(&sig, g.env.clone());
        let (m, ty) = c.synth(&Ctx::new(), &m).unwrap();
        let env = c.into_env();
        let bigger = CompType::new(ty.result.clone(), ty.effect.join(&extra));
        prop_assert!(env.leq(&ty.effect, &bigger.effect));
        prop_assert!(checks(&m, &bigger, &env).is_ok(), "{m} at {bigger}");
    }

    #[test]
    fn interrupt_payload_types_are_enforced(t in tape(), which in 0usize..3, pick in 0usize..3) {
        let op = common::OPS[which];
        let (m, _) = TermGen::new(&t).closed_comp(4);
        let (v, vt) = [
            (aeff_core::Value::Int(3), ValueType::int()),
            (aeff_core::Value::Unit, ValueType::Unit),
            (aeff_core::Value::bool(true), ValueType::bool()),
        ][pick].clone();
        let sig = signature();
        let mut c = Checker::new(&sig, AnnEnv::new());
        let ok = c.synth(&Ctx::new(), &Computation::interrupt(op, v, m)).is_ok();
        prop_assert_eq!(ok, sig.payload(op) == Some(&vt));
    }
}

proptest! {
    #![proptest_config(cases(500))]

    #[test]
    fn substitution_is_capture_avoiding(t in tape(), name in 0usize..4, target in 0usize..2) {
        let ctx: Ctx = vec![("y".into(), ValueType::int()), ("x".into(), ValueType::int())];
        let mut g = TermGen::new(&t);
        let m = g.comp(&ValueType::int(), &ctx, 6);
        let v = aeff_core::Value::var(["y", "x", "n", "p"][name]);
        let x = ["x", "y"][target];
        let out = subst_comp(&m, &v, x);
        let mut allowed = fv_comp(&m);
        allowed.remove(x);
        allowed.extend(fv_value(&v));
        prop_assert!(fv_comp(&out).is_subset(&allowed), "{m}\n[{v}/{x}]\n{out}");
        if !fv_comp(&m).contains(x) {
            prop_assert!(alpha_eq(&out, &m));
        }
    }

    #[test]
    fn substitution_preserves_types(t in tape(), n in -3i64..4) {
        let ctx: Ctx = vec![("x".into(), ValueType::int())];
        let m = TermGen::new(&t).comp(&ValueType::int(), &ctx, 6);
        let sig = signature();
        let mut c = Checker::new(&sig, AnnEnv::new());
        let (m, ty) = c.synth(&ctx, &m).unwrap();
        let env = c.into_env();
        let closed = subst_comp(&m, &aeff_core::Value::Int(n), "x");
        prop_assert!(checks(&closed, &ty, &env).is_ok(), "{closed} at {ty}");
    }

    #[test]
    fn alpha_equivalence_is_an_equivalence(t in tape(), other in tape()) {
        let (a, _) = TermGen::new(&t).closed_comp(8);
        let (b, _) = TermGen::renamed(&t, "'").closed_comp(8);
        let (c, _) = TermGen::renamed(&t, "_r").closed_comp(8);
        let (d, _) = TermGen::new(&other).closed_comp(8);
        prop_assert!(alpha_eq(&a, &a));
        prop_assert!(alpha_eq(&a, &b) && alpha_eq(&b, &a));
        prop_assert!(alpha_eq(&b, &c) && alpha_eq(&a, &c));
        prop_assert_eq!(alpha_eq(&a, &d), alpha_eq(&d, &a));
        if alpha_eq(&a, &d) {
            prop_assert!(alpha_eq(&d, &b));
        }
    }
}
