mod common;

use aeff_core::process::{enumerate_proc_redexes, proc_result_status, proc_subterm, step_proc, ProcFrame};
use aeff_core::typecheck::stepped_type;
use aeff_core::{AnnEnv, Checker, ProcRule, Process, Store};
use common::{signature, tape, Ctx, TermGen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig { cases: 400, ..ProptestConfig::default() })]

    /// Each step has a reduct type `D` with `C ⤳ D` that the new process
    /// checks against, and signal sets only grow along the way.
    #[test]
    fn process_preservation(t in tape(), seed in any::<u64>()) {
        let p = TermGen::new(&t).process(5);
        let sig = signature();
        let mut checker = Checker::new(&sig, AnnEnv::new());
        let (mut p, mut c) = checker.check_process(&Ctx::new(), &p).map_err(|e| TestCaseError::fail(format!("{e}\n{p}")))?;
        let env = checker.into_env();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = Store::new();
        for _ in 0..200 {
            let rs = enumerate_proc_redexes(&p);
            let status = proc_result_status(&p);
            if status.is_result() {
                prop_assert!(rs.is_empty(), "result with redexes: {p}");
            }
            if rs.is_empty() {
                prop_assert!(status.is_result(), "stuck: {p}");
                break;
            }
            let r = &rs[rng.gen_range(0..rs.len())];
            let q = step_proc(&p, r, &mut store).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let d = stepped_type(&c, &p, r);
            let check = Checker::new(&sig, env.clone());
            prop_assert!(check.type_reduces(&c, &d), "{} does not reduce to {}", c.render(&env), d.render(&env));
            let before = c.signals_of(&env);
            let after = d.signals_of(&env);
            prop_assert!(before.is_subset(&after), "signals shrank: {before:?} -> {after:?}");
            let mut check = Checker::new(&sig, env.clone());
            if let Err(e) = check.check_process_against(&Ctx::new(), &q, &d) {
                return Err(TestCaseError::fail(format!("{p}\n--{r}-->\n{q}\nat {}: {e}", d.render(&env))));
            }
            p = q;
            c = d;
        }
    }

    /// Interrupts reach the receiving `run` in the order the sender issued
    /// the signals.
    #[test]
    fn broadcasts_keep_order(t in tape(), t2 in tape(), seed in any::<u64>()) {
        let (a, _) = TermGen::new(&t).closed_comp(6);
        let (b, _) = TermGen::new(&t2).closed_comp(6);
        let mut p = Process::par(Process::run(a), Process::run(b));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = Store::new();
        let mut sent = Vec::new();
        let mut received = Vec::new();
        for _ in 0..300 {
            let rs = enumerate_proc_redexes(&p);
            if rs.is_empty() {
                break;
            }
            let r = &rs[rng.gen_range(0..rs.len())];
            let node = proc_subterm(&p, &r.path).expect("redex path");
            let top_par = r.path.iter().all(|f| *f == ProcFrame::Signal);
            match (r.rule, node) {
                (ProcRule::BroadcastLeft, Process::Par(l, _)) if top_par => {
                    if let Process::Signal(op, v, _) = &**l {
                        sent.push((op.clone(), v.clone()));
                    }
                }
                (ProcRule::IntIntoRun, Process::Interrupt(op, v, _)) if r.path.contains(&ProcFrame::ParRight) => {
                    received.push((op.clone(), v.clone()));
                }
                _ => {}
            }
            p = step_proc(&p, r, &mut store).map_err(|e| TestCaseError::fail(e.to_string()))?;
        }
        prop_assert!(sent.starts_with(&received), "sent {sent:?} received {received:?}");
    }
}
