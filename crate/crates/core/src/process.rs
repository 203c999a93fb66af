//! Small-step reduction of parallel processes, process result forms and the
//! stepping machine shared by the command line and the stepping service.

use std::collections::BTreeSet;
use std::fmt;

use crate::builtins::Store;
use crate::seq::{self, CompRule, Frame, Redex, ResultStatus, Scheduler, StepError};
use crate::syntax::{Computation, Process, Value};
use crate::types::{SignalName, Signature};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProcFrame {
    ParLeft,
    ParRight,
    Signal,
    Interrupt,
}

impl ProcFrame {
    pub fn label(self) -> &'static str {
        match self {
            ProcFrame::ParLeft => "L",
            ProcFrame::ParRight => "R",
            ProcFrame::Signal => "sig",
            ProcFrame::Interrupt => "int",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProcRule {
    /// A computation step inside `run`.
    Inner(CompRule),
    HoistSignal,
    BroadcastLeft,
    BroadcastRight,
    IntIntoRun,
    IntIntoPar,
    IntPastSignal,
}

impl ProcRule {
    pub fn name(self) -> &'static str {
        match self {
            ProcRule::Inner(r) => r.name(),
            ProcRule::HoistSignal => "hoistSignal",
            ProcRule::BroadcastLeft => "broadcastLeft",
            ProcRule::BroadcastRight => "broadcastRight",
            ProcRule::IntIntoRun => "intIntoRun",
            ProcRule::IntIntoPar => "intIntoPar",
            ProcRule::IntPastSignal => "intPastSignal",
        }
    }
}

impl fmt::Display for ProcRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A process-level redex. Inner computation redexes carry the path to the
/// `run` leaf in `path` and the path inside the computation in `inner`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProcRedex {
    pub rule: ProcRule,
    pub path: Vec<ProcFrame>,
    pub inner: Vec<Frame>,
}

impl ProcRedex {
    pub fn path_string(&self) -> String {
        let outer = if self.path.is_empty() {
            "root".to_string()
        } else {
            self.path.iter().map(|f| f.label()).collect::<Vec<_>>().join(".")
        };
        match self.rule {
            ProcRule::Inner(_) => format!("{outer}/{}", seq::format_path(&self.inner)),
            _ => outer,
        }
    }
}

impl fmt::Display for ProcRedex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ {}", self.rule, self.path_string())
    }
}

fn root_rule(p: &Process) -> Option<ProcRule> {
    Some(match p {
        Process::Run(Computation::Signal(..)) => ProcRule::HoistSignal,
        Process::Par(l, _) if matches!(**l, Process::Signal(..)) => ProcRule::BroadcastLeft,
        Process::Par(_, r) if matches!(**r, Process::Signal(..)) => ProcRule::BroadcastRight,
        Process::Interrupt(_, _, q) => match **q {
            Process::Run(_) => ProcRule::IntIntoRun,
            Process::Par(..) => ProcRule::IntIntoPar,
            Process::Signal(..) => ProcRule::IntPastSignal,
            Process::Interrupt(..) => return None,
        },
        _ => return None,
    })
}

/// Both broadcast rules can apply at one node.
fn root_rules(p: &Process) -> Vec<ProcRule> {
    match p {
        Process::Par(l, r) => {
            let mut out = Vec::new();
            if matches!(**l, Process::Signal(..)) {
                out.push(ProcRule::BroadcastLeft);
            }
            if matches!(**r, Process::Signal(..)) {
                out.push(ProcRule::BroadcastRight);
            }
            out
        }
        p => root_rule(p).into_iter().collect(),
    }
}

pub fn proc_child(p: &Process, f: ProcFrame) -> Option<&Process> {
    match (p, f) {
        (Process::Par(l, _), ProcFrame::ParLeft) => Some(l),
        (Process::Par(_, r), ProcFrame::ParRight) => Some(r),
        (Process::Signal(_, _, q), ProcFrame::Signal) => Some(q),
        (Process::Interrupt(_, _, q), ProcFrame::Interrupt) => Some(q),
        _ => None,
    }
}

fn proc_child_mut(p: &mut Process, f: ProcFrame) -> Option<&mut Process> {
    match (p, f) {
        (Process::Par(l, _), ProcFrame::ParLeft) => Some(l),
        (Process::Par(_, r), ProcFrame::ParRight) => Some(r),
        (Process::Signal(_, _, q), ProcFrame::Signal) => Some(q),
        (Process::Interrupt(_, _, q), ProcFrame::Interrupt) => Some(q),
        _ => None,
    }
}

pub fn proc_subterm<'a>(p: &'a Process, path: &[ProcFrame]) -> Option<&'a Process> {
    path.iter().try_fold(p, |p, f| proc_child(p, *f))
}

/// All process redexes, pre-order: a node's own rules, then its children
/// left to right. Inside `run` the computation redexes follow.
pub fn enumerate_proc_redexes(p: &Process) -> Vec<ProcRedex> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    enumerate_into(p, &mut path, &mut out);
    out
}

fn enumerate_into(p: &Process, path: &mut Vec<ProcFrame>, out: &mut Vec<ProcRedex>) {
    for rule in root_rules(p) {
        out.push(ProcRedex { rule, path: path.clone(), inner: vec![] });
    }
    let mut visit = |f: ProcFrame, q: &Process, out: &mut Vec<ProcRedex>| {
        path.push(f);
        enumerate_into(q, path, out);
        path.pop();
    };
    match p {
        Process::Run(m) => {
            for r in seq::enumerate_redexes(m) {
                out.push(ProcRedex { rule: ProcRule::Inner(r.rule), path: path.clone(), inner: r.path });
            }
        }
        Process::Par(l, r) => {
            visit(ProcFrame::ParLeft, l, out);
            visit(ProcFrame::ParRight, r, out);
        }
        Process::Signal(_, _, q) => visit(ProcFrame::Signal, q, out),
        Process::Interrupt(_, _, q) => visit(ProcFrame::Interrupt, q, out),
    }
}

pub fn step_proc_in_place(p: &mut Process, r: &ProcRedex, store: &mut Store) -> Result<(), StepError> {
    let not_redex = || StepError::NotARedex(r.to_string());
    let mut node = p;
    for f in &r.path {
        node = proc_child_mut(node, *f).ok_or_else(not_redex)?;
    }
    if let ProcRule::Inner(rule) = r.rule {
        let Process::Run(m) = node else { return Err(not_redex()) };
        return seq::step_in_place(m, &Redex { rule, path: r.inner.clone() }, store);
    }
    if !root_rules(node).contains(&r.rule) {
        return Err(not_redex());
    }
    let old = std::mem::replace(node, Process::Run(Computation::Return(Value::Unit)));
    *node = contract(old, r.rule);
    Ok(())
}

pub fn step_proc(p: &Process, r: &ProcRedex, store: &mut Store) -> Result<Process, StepError> {
    let mut out = p.clone();
    step_proc_in_place(&mut out, r, store)?;
    Ok(out)
}

/// Contracts a root redex already known to match.
fn contract(p: Process, rule: ProcRule) -> Process {
    match (rule, p) {
        (ProcRule::HoistSignal, Process::Run(Computation::Signal(op, v, m))) => {
            Process::Signal(op, v, Box::new(Process::Run(*m)))
        }
        (ProcRule::BroadcastLeft, Process::Par(l, q)) => match *l {
            Process::Signal(op, v, p) => {
                let q = Process::Interrupt(op.clone(), v.clone(), q);
                Process::Signal(op, v, Box::new(Process::Par(p, Box::new(q))))
            }
            _ => unreachable!("checked by root_rules"),
        },
        (ProcRule::BroadcastRight, Process::Par(p, r)) => match *r {
            Process::Signal(op, v, q) => {
                let p = Process::Interrupt(op.clone(), v.clone(), p);
                Process::Signal(op, v, Box::new(Process::Par(Box::new(p), q)))
            }
            _ => unreachable!("checked by root_rules"),
        },
        (ProcRule::IntIntoRun, Process::Interrupt(op, v, q)) => match *q {
            Process::Run(m) => Process::Run(Computation::Interrupt(op, v, Box::new(m))),
            _ => unreachable!("checked by root_rules"),
        },
        (ProcRule::IntIntoPar, Process::Interrupt(op, v, q)) => match *q {
            Process::Par(a, b) => Process::Par(
                Box::new(Process::Interrupt(op.clone(), v.clone(), a)),
                Box::new(Process::Interrupt(op, v, b)),
            ),
            _ => unreachable!("checked by root_rules"),
        },
        (ProcRule::IntPastSignal, Process::Interrupt(op, v, q)) => match *q {
            Process::Signal(op2, w, q) => Process::Signal(op2, w, Box::new(Process::Interrupt(op, v, q))),
            _ => unreachable!("checked by root_rules"),
        },
        (rule, _) => unreachable!("`{rule}` checked by root_rules"),
    }
}

// ---------------------------------------------------------------------------
// Result forms

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProcResultStatus {
    /// Parallel composition of run results.
    ParResult,
    /// Signals at the root over a parallel result.
    ProcResult,
    NotResult,
}

impl ProcResultStatus {
    pub fn is_result(self) -> bool {
        self != ProcResultStatus::NotResult
    }

    pub fn label(self) -> &'static str {
        match self {
            ProcResultStatus::ParResult => "parResult",
            ProcResultStatus::ProcResult => "procResult",
            ProcResultStatus::NotResult => "notResult",
        }
    }
}

pub fn is_par_result(p: &Process) -> bool {
    match p {
        Process::Run(m) => seq::is_run_result(&BTreeSet::new(), m),
        Process::Par(a, b) => is_par_result(a) && is_par_result(b),
        _ => false,
    }
}

pub fn is_proc_result(p: &Process) -> bool {
    match p {
        Process::Signal(_, _, q) => is_proc_result(q),
        p => is_par_result(p),
    }
}

pub fn proc_result_status(p: &Process) -> ProcResultStatus {
    if is_par_result(p) {
        ProcResultStatus::ParResult
    } else if is_proc_result(p) {
        ProcResultStatus::ProcResult
    } else {
        ProcResultStatus::NotResult
    }
}

/// Result status of every `run` leaf, left to right.
pub fn leaf_statuses(p: &Process) -> Vec<ResultStatus> {
    p.leaves().into_iter().map(|m| seq::result_status(&BTreeSet::new(), m)).collect()
}

/// Signals on the chain of `↑` nodes at the root, outermost first.
pub fn root_signals(p: &Process) -> Vec<(&SignalName, &Value)> {
    let mut out = Vec::new();
    let mut cur = p;
    while let Process::Signal(op, v, q) = cur {
        out.push((op, v));
        cur = q;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InjectError {
    #[error("unknown interrupt `{0}`")]
    UnknownSignal(SignalName),
    #[error("payload of `{op}` must have type {expected}")]
    PayloadType { op: SignalName, expected: String },
}

/// `↓op(V, P)` for a closed payload of the declared type.
pub fn inject_interrupt(p: Process, op: &str, v: Value, sig: &Signature) -> Result<Process, InjectError> {
    let ty = sig.payload(op).ok_or_else(|| InjectError::UnknownSignal(op.to_string()))?;
    if !crate::typecheck::value_has_ground_type(&v, ty) {
        return Err(InjectError::PayloadType { op: op.to_string(), expected: ty.to_string() });
    }
    Ok(Process::Interrupt(op.to_string(), v, Box::new(p)))
}

// ---------------------------------------------------------------------------
// Machine

/// A process together with the reference store of its computations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Machine {
    pub process: Process,
    pub store: Store,
}

/// An interrupt injected from outside immediately before step `at`
/// (counting from 0).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Injection {
    pub at: usize,
    pub op: SignalName,
    pub payload: Value,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// No redexes remain.
    Finished,
    /// The step budget ran out with redexes remaining.
    FuelExhausted,
    /// The scheduler declined to choose.
    Stopped,
}

/// Observable events of a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    Step { index: usize, redex: ProcRedex },
    Injected { before_step: usize, op: SignalName, payload: Value },
    /// A signal reached the chain of signals at the root.
    Signal { op: SignalName, payload: Value },
}

#[derive(Clone, Debug)]
pub struct ProcRun {
    pub steps: usize,
    pub stop: StopReason,
    pub events: Vec<Event>,
}

impl Machine {
    pub fn new(process: Process) -> Self {
        Machine { process, store: Store::new() }
    }

    pub fn redexes(&self) -> Vec<ProcRedex> {
        enumerate_proc_redexes(&self.process)
    }

    pub fn step(&mut self, r: &ProcRedex) -> Result<(), StepError> {
        step_proc_in_place(&mut self.process, r, &mut self.store)
    }

    pub fn inject(&mut self, op: &str, v: Value, sig: &Signature) -> Result<(), InjectError> {
        let p = std::mem::replace(&mut self.process, Process::Run(Computation::Return(Value::Unit)));
        match inject_interrupt(p.clone(), op, v, sig) {
            Ok(q) => {
                self.process = q;
                Ok(())
            }
            Err(e) => {
                self.process = p;
                Err(e)
            }
        }
    }

    /// Runs until no redexes remain, the scheduler stops, or `fuel` steps
    /// have been taken. Injections are applied before their step index, or
    /// earlier if the process runs out of redexes first.
    pub fn run(
        &mut self,
        scheduler: &mut dyn Scheduler,
        fuel: usize,
        injections: &[Injection],
        sig: &Signature,
        on_event: &mut dyn FnMut(&Event),
    ) -> Result<ProcRun, RunError> {
        let mut events = Vec::new();
        let mut emit = |e: Event, events: &mut Vec<Event>| {
            on_event(&e);
            events.push(e);
        };
        let mut pending: Vec<&Injection> = injections.iter().collect();
        pending.sort_by_key(|i| i.at);
        let mut pending = pending.into_iter().peekable();
        let mut seen_signals = root_signals(&self.process).len();
        for (op, v) in root_signals(&self.process) {
            emit(Event::Signal { op: op.clone(), payload: v.clone() }, &mut events);
        }
        let mut steps = 0;
        let stop = loop {
            while let Some(inj) = pending.next_if(|i| i.at <= steps) {
                self.inject(&inj.op, inj.payload.clone(), sig)?;
                emit(Event::Injected { before_step: steps, op: inj.op.clone(), payload: inj.payload.clone() }, &mut events);
            }
            let redexes = self.redexes();
            if redexes.is_empty() {
                // Idle: the outside world's next interrupt arrives now.
                if let Some(inj) = pending.next() {
                    self.inject(&inj.op, inj.payload.clone(), sig)?;
                    emit(Event::Injected { before_step: steps, op: inj.op.clone(), payload: inj.payload.clone() }, &mut events);
                    continue;
                }
                break StopReason::Finished;
            }
            if steps >= fuel {
                break StopReason::FuelExhausted;
            }
            let describe = |i: usize| redexes[i].to_string();
            let Some(i) = scheduler.choose(redexes.len(), &describe) else { break StopReason::Stopped };
            let r = redexes.get(i).ok_or_else(|| StepError::NotARedex(format!("choice {i}")))?.clone();
            self.step(&r)?;
            emit(Event::Step { index: steps, redex: r }, &mut events);
            steps += 1;
            let chain = root_signals(&self.process);
            if chain.len() > seen_signals {
                let fresh: Vec<_> = chain[seen_signals..].iter().map(|(o, v)| ((*o).clone(), (*v).clone())).collect();
                seen_signals = chain.len();
                for (op, payload) in fresh {
                    emit(Event::Signal { op, payload }, &mut events);
                }
            }
        };
        Ok(ProcRun { steps, stop, events })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Inject(#[from] InjectError),
}

/// One trace line per step: `<n> <rule> @ <path>`, numbered from 1.
pub fn trace_lines(events: &[Event]) -> Vec<String> {
    events
        .iter()
        .filter_map(|e| match e {
            Event::Step { index, redex } => Some(format!("{} {}", index + 1, redex)),
            _ => None,
        })
        .collect()
}
