mod common;

use aeff_core::parser::{parse_computation, parse_module, parse_process};
use aeff_core::process::{enumerate_proc_redexes, step_proc};
use aeff_core::seq::{run_to_result, FirstScheduler};
use aeff_core::{alpha_eq, alpha_eq_process, Computation, Prim, Store, Value};
use common::{tape, TermGen};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, ..ProptestConfig::default() })]

    #[test]
    fn printed_computations_parse_back(t in tape()) {
        let (m, _) = TermGen::new(&t).closed_comp(8);
        let printed = m.to_string();
        let again = parse_computation(&printed).map_err(|e| TestCaseError::fail(format!("{printed}\n{e}")))?;
        prop_assert!(alpha_eq(&m, &again), "{printed}\n{again}");
    }

    #[test]
    fn printed_processes_parse_back(t in tape()) {
        let p = TermGen::new(&t).process(5);
        let printed = p.to_string();
        let again = parse_process(&printed).map_err(|e| TestCaseError::fail(format!("{printed}\n{e}")))?;
        prop_assert!(alpha_eq_process(&p, &again), "{printed}\n{again}");
    }
}

fn lt(a: Value, b: Value) -> Computation {
    Computation::Apply(Value::Prim(Prim::Lt, vec![a]), b)
}

fn add(a: Value, b: Value) -> Computation {
    Computation::Apply(Value::Prim(Prim::Add, vec![a]), b)
}

/// Sugared source against a hand-written core term: same term, same
/// deterministic trace.
fn same_as_core(src: &str, core: Computation) {
    let sugared = parse_computation(src).unwrap_or_else(|e| panic!("{src}: {e}"));
    assert!(alpha_eq(&sugared, &core), "{src}\n{sugared}\n{core}");
    let a = run_to_result(&sugared, &mut FirstScheduler, 100, &mut Store::new()).unwrap();
    let b = run_to_result(&core, &mut FirstScheduler, 100, &mut Store::new()).unwrap();
    assert_eq!(a.trace, b.trace, "{src}");
    assert!(alpha_eq(&a.result, &b.result), "{src}");
}

#[test]
fn desugarings_match_hand_expansions() {
    // Nested operators get let-bound temporaries.
    same_as_core(
        "return ((1 + 2) + 3)",
        Computation::let_(
            "u",
            Computation::let_("t", add(Value::Int(1), Value::Int(2)), add(Value::var("t"), Value::Int(3))),
            Computation::ret(Value::var("u")),
        ),
    );
    // `if` is a match on `unit + unit` with unused binders, `send op V; M`
    // is the signal form.
    same_as_core(
        "if 1 < 2 then send a 1; return 1 else return 2",
        Computation::let_(
            "c",
            lt(Value::Int(1), Value::Int(2)),
            Computation::match_sum(
                Value::var("c"),
                "_",
                Computation::signal("a", Value::Int(1), Computation::ret(Value::Int(1))),
                "_",
                Computation::ret(Value::Int(2)),
            ),
        ),
    );
    // Tuple patterns destructure through fresh names.
    same_as_core(
        "let (x, y) = return (1, 2) in return (y, x)",
        Computation::let_(
            "t",
            Computation::ret(Value::pair(Value::Int(1), Value::Int(2))),
            Computation::match_pair(Value::var("t"), "x", "y", Computation::ret(Value::pair(Value::var("y"), Value::var("x")))),
        ),
    );
    // `M; N` sequences with a discarded binder.
    same_as_core(
        "interrupt b () into (return 1; return 2)",
        Computation::interrupt("b", Value::Unit, Computation::let_("_", Computation::ret(Value::Int(1)), Computation::ret(Value::Int(2)))),
    );
}

#[test]
fn guarded_handler_matches_its_expansion() {
    let sugared = "
        signal go : int
        run promise (go n when n > 2 |-> return <<n>>) as p in await p until <<v>> in return v
    ";
    let expanded = "
        signal go : int
        run let rec w (_ : unit) =
              promise (go n |-> if n > 2 then return <<n>> else w ()) as q in return q
            in
            let p = w () in await p until <<v>> in return v
    ";
    let a = parse_module(sugared).unwrap().main.unwrap().0;
    let b = parse_module(expanded).unwrap().main.unwrap().0;
    let drive = |p: aeff_core::Process| {
        let mut p = aeff_core::Process::interrupt("go", Value::Int(1), aeff_core::Process::interrupt("go", Value::Int(5), p));
        let mut rules = Vec::new();
        let mut store = Store::new();
        while let Some(r) = enumerate_proc_redexes(&p).into_iter().next() {
            rules.push(r.rule.to_string());
            p = step_proc(&p, &r, &mut store).unwrap();
        }
        (p, rules)
    };
    let (pa, ra) = drive(a);
    let (pb, rb) = drive(b);
    assert_eq!(ra, rb);
    assert!(alpha_eq_process(&pa, &pb), "{pa}\n{pb}");
    assert_eq!(pa.to_string(), "run return 5");
}
