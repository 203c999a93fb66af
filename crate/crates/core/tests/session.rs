mod common;

use aeff_core::parser::parse_process_in;
use aeff_core::session::{replay, Session};
use aeff_core::{alpha_eq_process, Process};
use common::{tape, Tape, TermGen};
use proptest::prelude::*;

const WALKTHROUGH: &str = "
signal request : int
signal response : int

run send request 1; return ()
|| run promise (request x |-> send response (x + 1); return <<()>>) as p in return p
";

fn click(s: &mut Session, rule: &str) {
    let view = s.view();
    let r = view.redexes.iter().find(|r| r.rule == rule).unwrap_or_else(|| panic!("no {rule} in {:?}", view.redexes));
    s.apply(&r.id).unwrap();
}

#[test]
fn broadcast_walkthrough_in_three_clicks() {
    let mut s = Session::create("w", WALKTHROUGH).unwrap();
    for rule in ["hoistSignal", "broadcastLeft", "intIntoRun"] {
        click(&mut s, rule);
    }
    let module = aeff_core::parser::parse_module(WALKTHROUGH).unwrap();
    let expected = parse_process_in(
        &module,
        "send request 1; (run return () || run interrupt request 1 into \
         promise (request x |-> send response (x + 1); return <<()>>) as p in return p)",
    )
    .unwrap();
    assert!(s.is_at(&expected), "{}", s.process());
    let view = s.view();
    assert_eq!(view.step_count, 3);
    assert_eq!(view.history_depth, 3);
}

#[test]
fn stale_ids_conflict_without_mutating() {
    let mut s = Session::create("w", WALKTHROUGH).unwrap();
    let first = s.view().redexes[0].id.clone();
    s.apply(&first).unwrap();
    let before = s.view();
    let err = s.apply(&first).unwrap_err();
    assert_eq!(err.kind, "conflict");
    assert_eq!(s.view(), before);
    assert_eq!(s.apply("nonsense").unwrap_err().kind, "conflict");
    assert_eq!(s.view(), before);
}

#[test]
fn undo_then_reapply_reproduces_the_view() {
    let mut s = Session::create("w", WALKTHROUGH).unwrap();
    click(&mut s, "hoistSignal");
    let after = s.view();
    assert!(s.undo());
    let back = s.view();
    assert_eq!(back.step_count, 0);
    let rule = &after.redexes[0].rule;
    let again = back.redexes.iter().position(|r| r.rule == "hoistSignal").unwrap();
    s.apply(&s.view().redexes[again].id.clone()).unwrap();
    let redo = s.view();
    assert_eq!(redo.text, after.text);
    assert_eq!(redo.redexes.iter().map(|r| &r.rule).collect::<Vec<_>>()[0], rule);
    assert!(s.undo());
    assert!(!s.undo());
}

#[test]
fn injections_are_checked_logged_and_undoable() {
    let mut s = Session::create("w", WALKTHROUGH).unwrap();
    let start = s.view().text;
    let err = s.inject("request", "true").unwrap_err();
    assert_eq!(err.kind, "type");
    let err = s.inject("nope", "1").unwrap_err();
    assert_eq!(err.kind, "type");
    assert!(s.inject("request", "1 +").is_err());
    assert_eq!(s.view().text, start);
    let view = s.inject("request", "4").unwrap();
    assert!(view.text.starts_with("interrupt request 4 into"), "{}", view.text);
    assert_eq!(s.log().len(), 1);
    assert!(s.undo());
    assert_eq!(s.view().text, start);
    assert!(s.log().is_empty());
}

#[test]
fn history_is_bounded() {
    let mut s = Session::create("w", WALKTHROUGH).unwrap().with_history_limit(2);
    for _ in 0..3 {
        let id = s.view().redexes[0].id.clone();
        s.apply(&id).unwrap();
    }
    assert_eq!(s.view().history_depth, 2);
    assert!(s.undo() && s.undo() && !s.undo());
    assert_eq!(s.view().step_count, 1);
}

#[test]
fn programs_without_main_or_with_errors_are_rejected() {
    let errs = Session::create("x", "signal a : int").unwrap_err();
    assert!(!errs.is_empty());
    let errs = Session::create("x", "run (").unwrap_err();
    assert_eq!(errs[0].kind, "parse");
    assert!(errs[0].location.is_some());
    let errs = Session::create("x", "signal a : int\nrun send a (); return ()").unwrap_err();
    assert_eq!(errs[0].kind, "type");
}

#[test]
fn view_tree_spans_match_the_text() {
    let s = Session::create("w", WALKTHROUGH).unwrap();
    let v = s.view();
    fn walk(n: &aeff_core::session::TreeNode, text: &str) {
        let (a, b) = n.span;
        assert!(a <= b && b <= text.len());
        if n.kind == "run" {
            assert!(text[a..b].starts_with("run "), "{}", &text[a..b]);
        }
        for c in &n.children {
            walk(c, text);
        }
    }
    walk(&v.process_tree, &v.text);
    assert!(v.redexes.iter().all(|r| r.preview.chars().count() <= aeff_core::session::PREVIEW_CHARS));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    /// Replaying a session's log through the command-line machinery lands
    /// on the same process.
    #[test]
    fn session_logs_replay(t in tape(), clicks in tape()) {
        let p = TermGen::new(&t).process(5);
        let src = format!("signal a : int\nsignal b : unit\nsignal c : int\n{p}");
        let mut s = Session::create("p", &src).map_err(|e| TestCaseError::fail(format!("{e:?}\n{src}")))?;
        let start: Process = s.module().main.clone().unwrap().0;
        let mut choose = Tape::new(&clicks);
        for _ in 0..40 {
            let view = s.view();
            match choose.pick(8) {
                0 => {
                    let op = common::OPS[choose.pick(3)];
                    let payload = if op == "b" { "()" } else { "2" };
                    s.inject(op, payload).unwrap();
                }
                1 => {
                    s.undo();
                }
                _ if view.redexes.is_empty() => break,
                _ => {
                    let i = choose.pick(view.redexes.len());
                    s.apply(&view.redexes[i].id).unwrap();
                }
            }
        }
        let replayed = replay(&start, &s.module().sig, &s.log()).unwrap();
        prop_assert!(alpha_eq_process(&replayed.process, s.process()), "{}\nvs\n{}", replayed.process, s.process());
    }
}
