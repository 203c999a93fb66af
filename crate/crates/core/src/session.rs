//! Interactive stepping sessions: a checked program, its current process,
//! an undo history and the view sent to clients.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::parser::{self, parse_module, ParseError};
use crate::process::{leaf_statuses, proc_result_status, Machine, ProcFrame, ProcRedex};
use crate::program::Pos;
use crate::syntax::{alpha_eq_process, Process, Value};
use crate::typecheck::{check_module, CheckedModule, TypeError};

pub const DEFAULT_HISTORY: usize = 1000;
pub const PREVIEW_CHARS: usize = 120;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Location {
    pub line: usize,
    pub col: usize,
}

impl From<Pos> for Location {
    fn from(p: Pos) -> Self {
        Location { line: p.line, col: p.col }
    }
}

/// Error object of the protocol.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Diagnostic {
    /// `parse`, `type`, `conflict`, `runtime`, `notFound` or `badRequest`.
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
}

impl Diagnostic {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        Diagnostic { kind: kind.to_string(), message: message.into(), location: None, rule: None }
    }

    fn parse(e: &ParseError) -> Self {
        Diagnostic { location: Some(e.pos.into()), ..Diagnostic::new("parse", e.message.clone()) }
    }

    fn type_error(e: &TypeError) -> Self {
        Diagnostic {
            location: e.pos.map(Location::from),
            rule: Some(e.rule.clone()),
            ..Diagnostic::new("type", e.to_string())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TreeNode {
    /// `par`, `signal`, `interrupt` or `run`.
    pub kind: String,
    pub label: String,
    pub path: String,
    /// Byte range of this node in `StateView::text`.
    pub span: (usize, usize),
    pub children: Vec<TreeNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RedexView {
    pub id: String,
    pub rule: String,
    pub path: String,
    pub preview: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LeafStatus {
    pub path: String,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SignalDecl {
    pub op: String,
    pub payload_type: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StateView {
    pub text: String,
    pub process_tree: TreeNode,
    pub redexes: Vec<RedexView>,
    pub step_count: usize,
    pub result_status: Vec<LeafStatus>,
    pub process_status: String,
    pub signals: Vec<SignalDecl>,
    pub history_depth: usize,
}

/// What changed the process: used for undo and replay.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "action")]
pub enum Action {
    /// `index` into the redex menu at the time of the step.
    Step { index: usize, rule: String, path: String },
    #[serde(rename_all = "camelCase")]
    Inject { op: String, payload: String, before_step: usize },
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub source: String,
    module: CheckedModule,
    machine: Machine,
    history: VecDeque<(Machine, usize, Action)>,
    history_limit: usize,
    step_count: usize,
    generation: u64,
    menu: Vec<ProcRedex>,
}

fn format_tree_path(path: &[ProcFrame]) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        path.iter().map(|f| f.label()).collect::<Vec<_>>().join(".")
    }
}

/// Pretty-prints `p`, recording each node's span. Mirrors the `Display`
/// implementation for processes.
fn render(p: &Process, path: &mut Vec<ProcFrame>, out: &mut String) -> TreeNode {
    let start = out.len();
    let (kind, label, children) = match p {
        Process::Run(m) => {
            out.push_str("run ");
            out.push_str(&m.to_string());
            ("run", "run".to_string(), Vec::new())
        }
        Process::Par(a, b) => {
            path.push(ProcFrame::ParLeft);
            let l = render(a, path, out);
            path.pop();
            out.push_str(" || ");
            path.push(ProcFrame::ParRight);
            let r = render_atom(b, path, out);
            path.pop();
            ("par", "||".to_string(), vec![l, r])
        }
        Process::Signal(op, v, q) => {
            out.push_str(&format!("send {op} {}; ", atom(v)));
            path.push(ProcFrame::Signal);
            let c = render_atom(q, path, out);
            path.pop();
            ("signal", format!("↑{op}({v})"), vec![c])
        }
        Process::Interrupt(op, v, q) => {
            out.push_str(&format!("interrupt {op} {} into ", atom(v)));
            path.push(ProcFrame::Interrupt);
            let c = render_atom(q, path, out);
            path.pop();
            ("interrupt", format!("↓{op}({v})"), vec![c])
        }
    };
    TreeNode { kind: kind.to_string(), label, path: format_tree_path(path), span: (start, out.len()), children }
}

fn render_atom(p: &Process, path: &mut Vec<ProcFrame>, out: &mut String) -> TreeNode {
    if let Process::Par(..) = p {
        out.push('(');
        let n = render(p, path, out);
        out.push(')');
        n
    } else {
        render(p, path, out)
    }
}

/// Same parenthesization as the pretty-printer uses for arguments.
fn atom(v: &Value) -> String {
    let s = v.to_string();
    let simple = match v {
        Value::Fun(..) => false,
        Value::Inl(..) | Value::Inr(..) => v.as_bool().is_some(),
        _ => true,
    };
    if simple {
        s
    } else {
        format!("({s})")
    }
}

fn truncate(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_string()
    } else {
        let mut t: String = s.chars().take(n.saturating_sub(1)).collect();
        t.push('…');
        t
    }
}

fn leaf_paths(p: &Process, path: &mut Vec<ProcFrame>, out: &mut Vec<String>) {
    match p {
        Process::Run(_) => out.push(format_tree_path(path)),
        Process::Par(a, b) => {
            path.push(ProcFrame::ParLeft);
            leaf_paths(a, path, out);
            path.pop();
            path.push(ProcFrame::ParRight);
            leaf_paths(b, path, out);
            path.pop();
        }
        Process::Signal(_, _, q) => {
            path.push(ProcFrame::Signal);
            leaf_paths(q, path, out);
            path.pop();
        }
        Process::Interrupt(_, _, q) => {
            path.push(ProcFrame::Interrupt);
            leaf_paths(q, path, out);
            path.pop();
        }
    }
}

impl Session {
    /// Parses and checks `source`; the session starts at its main process.
    pub fn create(id: impl Into<String>, source: &str) -> Result<Session, Vec<Diagnostic>> {
        let module = parse_module(source).map_err(|e| vec![Diagnostic::parse(&e)])?;
        let checked = check_module(&module).map_err(|es| es.iter().map(Diagnostic::type_error).collect::<Vec<_>>())?;
        let Some((main, _)) = checked.main.clone() else {
            return Err(vec![Diagnostic::new("type", "the program has no main process (`run ...`)")]);
        };
        let mut s = Session {
            id: id.into(),
            source: source.to_string(),
            module: checked,
            machine: Machine::new(main),
            history: VecDeque::new(),
            history_limit: DEFAULT_HISTORY,
            step_count: 0,
            generation: 0,
            menu: Vec::new(),
        };
        s.refresh();
        Ok(s)
    }

    pub fn with_history_limit(mut self, limit: usize) -> Self {
        self.history_limit = limit.max(1);
        self
    }

    pub fn process(&self) -> &Process {
        &self.machine.process
    }

    pub fn module(&self) -> &CheckedModule {
        &self.module
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Actions since creation that have not been undone, oldest first.
    pub fn log(&self) -> Vec<Action> {
        self.history.iter().map(|(_, _, a)| a.clone()).collect()
    }

    fn refresh(&mut self) {
        self.menu = self.machine.redexes();
    }

    fn redex_id(&self, i: usize) -> String {
        format!("r{}-{}", self.generation, i)
    }

    fn push_history(&mut self, before: Machine, action: Action) {
        self.history.push_back((before, self.step_count, action));
        while self.history.len() > self.history_limit {
            self.history.pop_front();
        }
        self.generation += 1;
    }

    pub fn view(&self) -> StateView {
        let mut text = String::new();
        let tree = render(&self.machine.process, &mut Vec::new(), &mut text);
        let redexes = self
            .menu
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut m = self.machine.clone();
                let preview = match m.step(r) {
                    Ok(()) => truncate(&m.process.to_string(), PREVIEW_CHARS),
                    Err(e) => format!("error: {e}"),
                };
                RedexView { id: self.redex_id(i), rule: r.rule.name().to_string(), path: r.path_string(), preview }
            })
            .collect();
        let mut paths = Vec::new();
        leaf_paths(&self.machine.process, &mut Vec::new(), &mut paths);
        let result_status = paths
            .into_iter()
            .zip(leaf_statuses(&self.machine.process))
            .map(|(path, s)| LeafStatus { path, status: s.label() })
            .collect();
        StateView {
            text,
            process_tree: tree,
            redexes,
            step_count: self.step_count,
            result_status,
            process_status: proc_result_status(&self.machine.process).label().to_string(),
            signals: self
                .module
                .sig
                .iter()
                .map(|(op, ty)| SignalDecl { op: op.clone(), payload_type: ty.to_string() })
                .collect(),
            history_depth: self.history.len(),
        }
    }

    /// Fires the redex with the given id from the current menu. Stale or
    /// unknown ids leave the session untouched.
    pub fn apply(&mut self, redex_id: &str) -> Result<StateView, Diagnostic> {
        let index = (0..self.menu.len()).find(|i| self.redex_id(*i) == redex_id).ok_or_else(|| {
            Diagnostic::new("conflict", format!("redex `{redex_id}` is not in the current menu; refresh and retry"))
        })?;
        let r = self.menu[index].clone();
        let before = self.machine.clone();
        self.machine.step(&r).map_err(|e| {
            self.machine = before.clone();
            Diagnostic::new("runtime", e.to_string())
        })?;
        self.push_history(
            before,
            Action::Step { index, rule: r.rule.name().to_string(), path: r.path_string() },
        );
        self.step_count += 1;
        self.refresh();
        Ok(self.view())
    }

    /// Wraps the current process in `↓op(payload, ·)`.
    pub fn inject(&mut self, op: &str, payload: &str) -> Result<StateView, Diagnostic> {
        let v = parser::parse_value(payload).map_err(|e| Diagnostic {
            kind: "type".to_string(),
            message: format!("payload: {}", e.message),
            location: Some(e.pos.into()),
            rule: None,
        })?;
        let before = self.machine.clone();
        self.machine
            .inject(op, v.clone(), &self.module.sig)
            .map_err(|e| Diagnostic { rule: Some("TyProc-Interrupt".into()), ..Diagnostic::new("type", e.to_string()) })?;
        self.push_history(before, Action::Inject { op: op.to_string(), payload: v.to_string(), before_step: self.step_count });
        self.refresh();
        Ok(self.view())
    }

    /// Pops one history entry; `false` when there was nothing to undo.
    pub fn undo(&mut self) -> bool {
        let Some((m, steps, _)) = self.history.pop_back() else { return false };
        self.machine = m;
        self.step_count = steps;
        self.generation += 1;
        self.refresh();
        true
    }

    /// Whether `p` is alpha-equivalent to the current process.
    pub fn is_at(&self, p: &Process) -> bool {
        alpha_eq_process(&self.machine.process, p)
    }
}

/// Scheduler choices and timed injections equivalent to a session log.
pub fn script_of(log: &[Action]) -> Result<(Vec<usize>, Vec<crate::process::Injection>), ParseError> {
    let mut choices = Vec::new();
    let mut injections = Vec::new();
    for a in log {
        match a {
            Action::Step { index, .. } => choices.push(*index),
            Action::Inject { op, payload, before_step } => {
                let payload = parser::parse_value(payload)?;
                injections.push(crate::process::Injection { at: *before_step, op: op.clone(), payload });
            }
        }
    }
    Ok((choices, injections))
}

/// Re-runs a session log from `start` through the scheduler-driven machine
/// used by the command line.
pub fn replay(
    start: &Process,
    sig: &crate::types::Signature,
    log: &[Action],
) -> Result<Machine, crate::process::RunError> {
    let (choices, injections) = script_of(log).expect("logged payloads are printed values");
    let mut m = Machine::new(start.clone());
    let fuel = choices.len();
    m.run(&mut crate::seq::ScriptedScheduler::new(choices), fuel, &injections, sig, &mut |_| {})?;
    Ok(m)
}
