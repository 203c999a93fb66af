//! One line per acceptance criterion. Runs without the libtest harness so
//! the report is always printed; exits non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;

use aeff_core::parser::{parse_module, parse_process_in};
use aeff_core::process::{enumerate_proc_redexes, proc_result_status, step_proc, trace_lines, Event, Injection};
use aeff_core::seq::{awaiting, enumerate_redexes, result_status, run_to_result, step, FirstScheduler, LastScheduler};
use aeff_core::typecheck::stepped_type;
use aeff_core::{
    alpha_eq, alpha_eq_process, check_module, AnnEnv, CheckedModule, Checker, Computation, EffectAnn,
    Machine, Process, Store, Value,
};
use common::{signature, AnnGen, Ctx, TermGen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn corpus_path(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus", name].iter().collect()
}

fn load(name: &str) -> Result<(aeff_core::SourceModule, CheckedModule), String> {
    let src = std::fs::read_to_string(corpus_path(name)).map_err(|e| format!("{name}: {e}"))?;
    let m = parse_module(&src).map_err(|e| format!("{name}:{e}"))?;
    let c = check_module(&m).map_err(|es| es.iter().map(|e| e.render(name)).collect::<Vec<_>>().join("; "))?;
    Ok((m, c))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_tape(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let n = rng.gen_range(0..160);
    (0..n).map(|_| rng.gen()).collect()
}

fn signals(events: &[Event], op: &str) -> Vec<Value> {
    events
        .iter()
        .filter_map(|e| match e {
            Event::Signal { op: o, payload } if o == op => Some(payload.clone()),
            _ => None,
        })
        .collect()
}

/// The value a run result returns, looking through handlers and signals.
fn returned(m: &Computation) -> Option<&Value> {
    match m {
        Computation::Return(v) => Some(v),
        Computation::Promise(h) => returned(&h.cont),
        Computation::Signal(_, _, m) => returned(m),
        _ => None,
    }
}

/// The promise variable a computation is blocked on, looking through
/// handlers and signals.
fn blocked_on(m: &Computation) -> Option<&String> {
    match m {
        Computation::Promise(h) => blocked_on(&h.cont),
        Computation::Signal(_, _, m) => blocked_on(m),
        m => awaiting(m),
    }
}

// ---------------------------------------------------------------------------

const WALKTHROUGH: &str = "
signal request : int
signal response : int
run send request 1; return ()
|| run promise (request x |-> send response (x + 1); return <<()>>) as p in return p
";

fn golden_trace() -> Check {
    let module = parse_module(WALKTHROUGH).map_err(|e| e.to_string())?;
    let checked = check_module(&module).map_err(|e| format!("{e:?}"))?;
    let start = checked.main.clone().unwrap().0;
    let server = "promise (request x |-> send response (x + 1); return <<()>>) as p in return p";
    let expected = [
        format!("run send request 1; return () || run {server}"),
        format!("(send request 1; run return ()) || run {server}"),
        format!("send request 1; (run return () || interrupt request 1 into run {server})"),
        format!("send request 1; (run return () || run interrupt request 1 into {server})"),
    ];
    let mut m = Machine::new(start.clone());
    for (i, want) in expected.iter().enumerate() {
        let want = parse_process_in(&module, want).map_err(|e| e.to_string())?;
        ensure(alpha_eq_process(&m.process, &want), || format!("state {i}: {} is not {want}", m.process))?;
        if i < 3 {
            let r = m.redexes().into_iter().next().ok_or("no redex")?;
            m.step(&r).map_err(|e| e.to_string())?;
        }
    }
    let mut again = Machine::new(start);
    let run = again.run(&mut FirstScheduler, 3, &[], &checked.sig, &mut |_| {}).map_err(|e| e.to_string())?;
    let lines = trace_lines(&run.events);
    let want = ["1 hoistSignal @ L", "2 broadcastLeft @ root", "3 intIntoRun @ sig.R"];
    ensure(lines == want, || format!("trace {lines:?}"))?;
    Ok(lines.join(" | "))
}

fn non_confluence() -> Check {
    let (_, c) = load("nonconfluence.aeff")?;
    let Some((Process::Run(m), _)) = &c.main else { return Err("main is not a single run".into()) };
    let mut checker = Checker::new(&c.sig, c.env.clone());
    let (_, ty) = checker.synth(&Ctx::new(), m).map_err(|e| e.to_string())?;
    let mut orders = Vec::new();
    let mut finals = Vec::new();
    for first in [true, false] {
        let run = if first {
            run_to_result(m, &mut FirstScheduler, 100, &mut Store::new())
        } else {
            run_to_result(m, &mut LastScheduler, 100, &mut Store::new())
        }
        .map_err(|e| e.to_string())?;
        let mut ops = Vec::new();
        let mut cur = &run.result;
        while let Computation::Signal(op, _, rest) = cur {
            ops.push(op.clone());
            cur = rest;
        }
        let mut checker = Checker::new(&c.sig, c.env.clone());
        checker.check(&Ctx::new(), &run.result, &ty).map_err(|e| format!("{}: {e}", run.result))?;
        orders.push(ops);
        finals.push(run.result);
    }
    ensure(orders[0] == ["op'", "op''"] && orders[1] == ["op''", "op'"], || format!("orders {orders:?}"))?;
    ensure(!alpha_eq(&finals[0], &finals[1]), || "finals coincide".into())?;
    Ok(format!("first: {}; last: {}; both at {ty}", orders[0].join(","), orders[1].join(",")))
}

/// Progress and preservation over one shared sample of generated terms.
fn sequential_sample() -> (Check, Check) {
    let sig = signature();
    let mut rng = ChaCha8Rng::seed_from_u64(0xAEFF);
    let (mut typed, mut terminal, mut exhausted, mut steps) = (0, 0, 0, 0);
    let mut progress_violations = Vec::new();
    let mut preservation_violations = Vec::new();
    let mut ill_typed = 0;
    while typed < 1000 {
        let t = random_tape(&mut rng);
        let (m, _) = TermGen::new(&t).closed_comp(8);
        let mut c = Checker::new(&sig, AnnEnv::new());
        let Ok((mut m, ty)) = c.synth(&Ctx::new(), &m) else {
            ill_typed += 1;
            continue;
        };
        let env = c.into_env();
        typed += 1;
        let mut store = Store::new();
        let mut done = false;
        for _ in 0..200 {
            let rs = enumerate_redexes(&m);
            if rs.is_empty() {
                if !result_status(&BTreeSet::new(), &m).is_comp_result() {
                    progress_violations.push(m.to_string());
                }
                done = true;
                break;
            }
            let r = &rs[rng.gen_range(0..rs.len())];
            match step(&m, r, &mut store) {
                Ok(n) => m = n,
                Err(e) => {
                    progress_violations.push(format!("{m}: {e}"));
                    done = true;
                    break;
                }
            }
            steps += 1;
            let mut c = Checker::new(&sig, env.clone());
            if let Err(e) = c.check(&Ctx::new(), &m, &ty) {
                preservation_violations.push(format!("{m} at {ty}: {e}"));
            }
        }
        if done {
            terminal += 1;
        } else {
            exhausted += 1;
        }
    }
    let progress = if progress_violations.is_empty() {
        Ok(format!("{typed} well-typed terms ({ill_typed} rejected), {terminal} terminal states all results, {exhausted} hit the step bound"))
    } else {
        Err(format!("{} violations, first: {}", progress_violations.len(), progress_violations[0]))
    };
    let preservation = if preservation_violations.is_empty() {
        Ok(format!("{steps} steps over {typed} paths, all checked at the original type"))
    } else {
        Err(format!("{} violations, first: {}", preservation_violations.len(), preservation_violations[0]))
    };
    (progress, preservation)
}

fn process_preservation() -> Check {
    let sig = signature();
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
    let (mut systems, mut steps, mut broadcasts) = (0, 0, 0);
    while systems < 300 {
        let t = random_tape(&mut rng);
        let p = TermGen::new(&t).process(5);
        let mut checker = Checker::new(&sig, AnnEnv::new());
        let Ok((mut p, mut c)) = checker.check_process(&Ctx::new(), &p) else { continue };
        let env = checker.into_env();
        systems += 1;
        let mut store = Store::new();
        for _ in 0..200 {
            let rs = enumerate_proc_redexes(&p);
            if rs.is_empty() {
                ensure(proc_result_status(&p).is_result(), || format!("stuck: {p}"))?;
                break;
            }
            let r = &rs[rng.gen_range(0..rs.len())];
            let q = step_proc(&p, r, &mut store).map_err(|e| format!("{p}: {e}"))?;
            let d = stepped_type(&c, &p, r);
            let checker = Checker::new(&sig, env.clone());
            ensure(checker.type_reduces(&c, &d), || format!("{} does not reduce to {}", c.render(&env), d.render(&env)))?;
            let (before, after) = (c.signals_of(&env), d.signals_of(&env));
            ensure(before.is_subset(&after), || format!("signals shrank: {before:?} -> {after:?}"))?;
            let mut checker = Checker::new(&sig, env.clone());
            checker
                .check_process_against(&Ctx::new(), &q, &d)
                .map_err(|e| format!("{p}\n--{r}-->\n{q}\nat {}: {e}", d.render(&env)))?;
            if matches!(r.rule, aeff_core::ProcRule::BroadcastLeft | aeff_core::ProcRule::BroadcastRight) {
                broadcasts += 1;
            }
            steps += 1;
            p = q;
            c = d;
        }
    }
    Ok(format!("{systems} systems, {steps} steps ({broadcasts} broadcasts), no violations"))
}

fn effect_laws() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xCAFE);
    let mut recursive = 0;
    for _ in 0..500 {
        let t = random_tape(&mut rng);
        let mut g = AnnGen::new(&t);
        if g.env.iter().next().is_some() {
            recursive += 1;
        }
        let (a, b, d) = (g.interrupt(3), g.interrupt(3), g.interrupt(3));
        let e = g.effect();
        let (op, other) = (g.op(), g.op());
        let ops = g.ops(4);
        let env = &g.env;
        let j = a.join(&b);
        ensure(env.leq_i(&a, &a), || format!("reflexivity: {a}"))?;
        ensure(env.leq_i(&a, &j) && env.leq_i(&b, &j), || format!("upper bound: {a}, {b}"))?;
        for c in [j.join(&d), d.clone()] {
            if env.leq_i(&a, &c) && env.leq_i(&b, &c) {
                ensure(env.leq_i(&j, &c), || format!("least: {j} vs {c}"))?;
            }
        }
        let acted = env.act(op, &e);
        ensure(AnnEnv::leq_o(&e.signals, &acted.signals), || format!("act keeps signals: {e}"))?;
        if let Some((o2, i2)) = env.get_op(&e.handlers, op) {
            ensure(env.leq(&EffectAnn::new(o2, i2), &acted), || format!("act covers handler: {op} on {e}"))?;
        }
        if op != other {
            if let Some((o2, i2)) = env.get_op(&e.handlers, other) {
                let after = env.get_op(&acted.handlers, other).map(|(o, i)| EffectAnn::new(o, i));
                let ok = after.is_some_and(|after| env.leq(&EffectAnn::new(o2, i2), &after));
                ensure(ok, || format!("act keeps {other}: {op} on {e}"))?;
            }
        }
        let plain = env.act_list(&ops, &e);
        let more = env.act_list(&ops, &acted);
        ensure(AnnEnv::leq_o(&plain.signals, &more.signals), || format!("act list: {ops:?} on {e}"))?;
    }
    Ok(format!("500 samples ({recursive} with recursive definitions), no violations"))
}

fn corpus_checks() -> Check {
    let files = [
        "feed.aeff",
        "guarded.aeff",
        "threads.aeff",
        "remote.aeff",
        "lcg.aeff",
        "heap.aeff",
        "postprocess.aeff",
        "batchsize.aeff",
    ];
    for f in files {
        let path = corpus_path(f);
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = aeff_cli::run_cli(["aeff", "check", path.to_str().unwrap()], &mut out, &mut err);
        ensure(code == 0, || format!("{f}: exit {code}: {}", String::from_utf8_lossy(&err)))?;
        if f == "batchsize.aeff" {
            let out = String::from_utf8_lossy(&out);
            let want = "waitForBatchSize : unit -> <<unit>> ! ({}, ib)";
            ensure(out.lines().any(|l| l == want), || format!("batchsize: {out}"))?;
        }
    }
    Ok(format!("{} programs exit 0; waitForBatchSize : unit -> <<unit>> ! ({{}}, ib)", files.len()))
}

fn feed_simulation() -> Check {
    let (module, mut c) = load("feed.aeff")?;
    let p = parse_process_in(&module, "run server 42 || run client ()").map_err(|e| e.to_string())?;
    let (p, _) = c.check_process(&p).map_err(|e| e.to_string())?;
    let injections: Vec<Injection> =
        (1..50).map(|k| Injection { at: 100 * k, op: "nextItem".into(), payload: Value::Unit }).collect();
    let mut m = Machine::new(p);
    let run = m.run(&mut FirstScheduler, 5000, &injections, &c.sig, &mut |_| {}).map_err(|e| e.to_string())?;
    let shown: Vec<String> = signals(&run.events, "display")
        .into_iter()
        .filter_map(|v| match v {
            Value::Str(s) => Some(s),
            _ => None,
        })
        .collect();
    let numbers: Vec<i64> = shown.iter().filter_map(|s| s.parse().ok()).collect();
    let oracle: Vec<i64> = (1..=numbers.len() as i64).map(|x| 10 * x).collect();
    ensure(numbers.len() >= 3 && numbers == oracle, || format!("displays {shown:?}"))?;
    let waits = shown.len() - numbers.len();
    Ok(format!("item displays {numbers:?} ({waits} wait messages) in {} steps", run.steps))
}

fn preemption() -> Check {
    let (_, c) = load("threads.aeff")?;
    let start = c.main.clone().unwrap().0;
    let final_value = |m: &Machine| m.process.leaves().first().and_then(|comp| returned(comp).cloned());

    let mut plain = Machine::new(start.clone());
    let run = plain.run(&mut FirstScheduler, 10_000, &[], &c.sig, &mut |_| {}).map_err(|e| e.to_string())?;
    let plain_out = signals(&run.events, "out");
    let plain_value = final_value(&plain).ok_or("uninterrupted run has no value")?;

    let mut m = Machine::new(start);
    let mut events = Vec::new();
    m.run(&mut FirstScheduler, 10, &[], &c.sig, &mut |e| events.push(e.clone())).map_err(|e| e.to_string())?;
    m.inject("stop", Value::Unit, &c.sig).map_err(|e| e.to_string())?;
    let mut paused = Vec::new();
    loop {
        let rs = m.redexes();
        if rs.is_empty() {
            break;
        }
        // Before the handler fires the interrupt frame sits in an evaluation
        // context, so the thread may still step; fifo takes the interrupt.
        let handled = paused.iter().any(|r| r == "intPromiseMatch");
        for r in if handled { &rs[..] } else { &rs[..1] } {
            let name = r.rule.to_string();
            ensure(name.starts_with("int") || name.starts_with("alg"), || format!("{name} enabled while stopping"))?;
        }
        ensure(paused.len() < 100, || "no quiescence after stop".into())?;
        m.step(&rs[0]).map_err(|e| e.to_string())?;
        paused.push(rs[0].rule.to_string());
    }
    let leaves = m.process.leaves();
    let comp = leaves.first().ok_or("no run")?;
    ensure(blocked_on(comp).is_some(), || format!("not awaiting: {comp}"))?;
    ensure(signals(&events, "out").is_empty(), || "output before stop".into())?;

    m.inject("go", Value::Unit, &c.sig).map_err(|e| e.to_string())?;
    let run = m.run(&mut FirstScheduler, 10_000, &[], &c.sig, &mut |e| events.push(e.clone())).map_err(|e| e.to_string())?;
    ensure(matches!(run.stop, aeff_core::process::StopReason::Finished), || "did not finish after go".into())?;
    let value = final_value(&m).ok_or("resumed run has no value")?;
    ensure(aeff_core::syntax::alpha_eq_value(&value, &plain_value), || format!("{value} vs {plain_value}"))?;
    ensure(signals(&events, "out") == plain_out, || "different output".into())?;
    Ok(format!("paused via [{}], resumed to {value} like the uninterrupted run", paused.join(", ")))
}

fn lcg() -> Check {
    let (_, c) = load("lcg.aeff")?;
    let mut m = Machine::new(c.main.clone().unwrap().0);
    let run = m.run(&mut FirstScheduler, 10_000, &[], &c.sig, &mut |_| {}).map_err(|e| e.to_string())?;
    let (modulus, a, inc, mut seed) = (1024i64, 21i64, 7i64, 5i64);
    let mut oracle = Vec::new();
    for call in 0..3 {
        oracle.push(Value::pair(Value::Int(seed), Value::Int(call)));
        seed = (a * seed + inc).rem_euclid(modulus);
    }
    let got = signals(&run.events, "randomRes");
    ensure(got == oracle, || format!("responses {got:?}"))?;
    let want = oracle.iter().map(|v| match v {
        Value::Pair(n, _) => match **n {
            Value::Int(n) => Value::Int(n % 10),
            _ => unreachable!(),
        },
        _ => unreachable!(),
    });
    let want = want.rev().fold(None, |acc: Option<Value>, v| Some(acc.map_or(v.clone(), |rest| Value::pair(v, rest))));
    let client = m.process.leaves().get(1).and_then(|leaf| returned(leaf).cloned());
    ensure(client == want, || format!("client returned {client:?}"))?;
    Ok(format!("responses {}", got.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")))
}

fn main() {
    let (progress, preservation) = sequential_sample();
    let results: Vec<(&str, Check)> = vec![
        ("golden broadcast trace", golden_trace()),
        ("non-confluence witness", non_confluence()),
        ("dynamic progress", progress),
        ("dynamic preservation", preservation),
        ("process preservation and signal monotonicity", process_preservation()),
        ("effect annotation laws", effect_laws()),
        ("corpus typechecks", corpus_checks()),
        ("feed simulation", feed_simulation()),
        ("preemptive threads", preemption()),
        ("LCG runner", lcg()),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
