//! Small-step reduction of computations: redex enumeration, single steps and
//! result forms.

use std::collections::BTreeSet;
use std::fmt;

use crate::builtins::{delta, RuntimeError, Store};
use crate::syntax::{
    fv_comp, fv_value, rename_binder, subst_comp, subst_comp_many, Computation, LetRec, Name, PromiseHandler, Subst,
    Value,
};

/// Evaluation-context frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Frame {
    /// `let x = [] in N`
    LetBound,
    /// `↑op(V, [])`
    SignalCont,
    /// `↓op(V, [])`
    InterruptCont,
    /// `promise (op x ↦ M) as p in []`
    PromiseCont,
}

impl Frame {
    pub fn label(self) -> &'static str {
        match self {
            Frame::LetBound => "let",
            Frame::SignalCont => "sig",
            Frame::InterruptCont => "int",
            Frame::PromiseCont => "promise",
        }
    }

    pub fn from_label(s: &str) -> Option<Frame> {
        Some(match s {
            "let" => Frame::LetBound,
            "sig" => Frame::SignalCont,
            "int" => Frame::InterruptCont,
            "promise" => Frame::PromiseCont,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CompRule {
    App,
    LetReturn,
    MatchPair,
    MatchInl,
    MatchInr,
    LetrecUnfold,
    AlgSignal,
    AlgPromise,
    CommuteSignalPromise,
    IntReturn,
    IntSignal,
    IntPromiseMatch,
    IntPromiseSkip,
    AwaitFulfilled,
    /// Builtin application; an extension of the calculus.
    Delta,
}

impl CompRule {
    pub fn name(self) -> &'static str {
        match self {
            CompRule::App => "app",
            CompRule::LetReturn => "letReturn",
            CompRule::MatchPair => "matchPair",
            CompRule::MatchInl => "matchInl",
            CompRule::MatchInr => "matchInr",
            CompRule::LetrecUnfold => "letrecUnfold",
            CompRule::AlgSignal => "algSignal",
            CompRule::AlgPromise => "algPromise",
            CompRule::CommuteSignalPromise => "commuteSignalPromise",
            CompRule::IntReturn => "intReturn",
            CompRule::IntSignal => "intSignal",
            CompRule::IntPromiseMatch => "intPromiseMatch",
            CompRule::IntPromiseSkip => "intPromiseSkip",
            CompRule::AwaitFulfilled => "awaitFulfilled",
            CompRule::Delta => "delta",
        }
    }

    pub fn is_extension(self) -> bool {
        self == CompRule::Delta
    }
}

impl fmt::Display for CompRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Redex {
    pub rule: CompRule,
    pub path: Vec<Frame>,
}

pub fn format_path(path: &[Frame]) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        path.iter().map(|f| f.label()).collect::<Vec<_>>().join(".")
    }
}

impl fmt::Display for Redex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ {}", self.rule, format_path(&self.path))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StepError {
    #[error("no `{0}` redex at the given position")]
    NotARedex(String),
    #[error("runtime error: {0}")]
    Runtime(#[from] RuntimeError),
}

/// The rule applicable at the root of `m`, if any.
pub fn root_rule(m: &Computation) -> Option<CompRule> {
    use Computation as C;
    Some(match m {
        C::Apply(Value::Fun(..), _) => CompRule::App,
        C::Apply(Value::Prim(..), _) => CompRule::Delta,
        C::Let(_, m, _) => match **m {
            C::Return(_) => CompRule::LetReturn,
            C::Signal(..) => CompRule::AlgSignal,
            C::Promise(_) => CompRule::AlgPromise,
            _ => return None,
        },
        C::MatchPair(Value::Pair(..), ..) => CompRule::MatchPair,
        C::MatchSum(Value::Inl(..), ..) => CompRule::MatchInl,
        C::MatchSum(Value::Inr(..), ..) => CompRule::MatchInr,
        C::LetRec(_) => CompRule::LetrecUnfold,
        C::Promise(h) => match &h.cont {
            C::Signal(_, v, _) if !fv_value(v).contains(&h.p) => CompRule::CommuteSignalPromise,
            _ => return None,
        },
        C::Interrupt(op, _, m) => match &**m {
            C::Return(_) => CompRule::IntReturn,
            C::Signal(..) => CompRule::IntSignal,
            C::Promise(h) if h.op == *op => CompRule::IntPromiseMatch,
            C::Promise(_) => CompRule::IntPromiseSkip,
            _ => return None,
        },
        C::Await(Value::Fulfilled(_), ..) => CompRule::AwaitFulfilled,
        _ => return None,
    })
}

/// The evaluation-context child of `m` selected by `frame`.
pub fn child(m: &Computation, frame: Frame) -> Option<&Computation> {
    match (m, frame) {
        (Computation::Let(_, m, _), Frame::LetBound) => Some(m),
        (Computation::Signal(_, _, m), Frame::SignalCont) => Some(m),
        (Computation::Interrupt(_, _, m), Frame::InterruptCont) => Some(m),
        (Computation::Promise(h), Frame::PromiseCont) => Some(&h.cont),
        _ => None,
    }
}

fn child_mut(m: &mut Computation, frame: Frame) -> Option<&mut Computation> {
    match (m, frame) {
        (Computation::Let(_, m, _), Frame::LetBound) => Some(m),
        (Computation::Signal(_, _, m), Frame::SignalCont) => Some(m),
        (Computation::Interrupt(_, _, m), Frame::InterruptCont) => Some(m),
        (Computation::Promise(h), Frame::PromiseCont) => Some(&mut h.cont),
        _ => None,
    }
}

fn e_frame(m: &Computation) -> Option<Frame> {
    match m {
        Computation::Let(..) => Some(Frame::LetBound),
        Computation::Signal(..) => Some(Frame::SignalCont),
        Computation::Interrupt(..) => Some(Frame::InterruptCont),
        Computation::Promise(..) => Some(Frame::PromiseCont),
        _ => None,
    }
}

pub fn subterm<'a>(m: &'a Computation, path: &[Frame]) -> Option<&'a Computation> {
    path.iter().try_fold(m, |m, f| child(m, *f))
}

/// All redexes of `m`, leftmost-outermost first.
pub fn enumerate_redexes(m: &Computation) -> Vec<Redex> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    let mut cur = m;
    // every computation has at most one E-child, so this is a walk down a spine
    loop {
        if let Some(rule) = root_rule(cur) {
            out.push(Redex { rule, path: path.clone() });
        }
        match e_frame(cur) {
            Some(f) => {
                path.push(f);
                cur = child(cur, f).expect("frame matches node");
            }
            None => return out,
        }
    }
}

pub fn has_redex(m: &Computation) -> bool {
    let mut cur = m;
    loop {
        if root_rule(cur).is_some() {
            return true;
        }
        match e_frame(cur) {
            Some(f) => cur = child(cur, f).expect("frame matches node"),
            None => return false,
        }
    }
}

/// Applies `r` to `m` in place.
pub fn step_in_place(m: &mut Computation, r: &Redex, store: &mut Store) -> Result<(), StepError> {
    let not_redex = || StepError::NotARedex(r.to_string());
    let mut node = m;
    for f in &r.path {
        node = child_mut(node, *f).ok_or_else(not_redex)?;
    }
    if root_rule(node) != Some(r.rule) {
        return Err(not_redex());
    }
    let old = std::mem::replace(node, Computation::Return(Value::Unit));
    match contract(old, store) {
        Ok(new) => {
            *node = new;
            Ok(())
        }
        Err((old, e)) => {
            *node = old;
            Err(e)
        }
    }
}

/// Applies `r` to a copy of `m`.
pub fn step(m: &Computation, r: &Redex, store: &mut Store) -> Result<Computation, StepError> {
    let mut out = m.clone();
    step_in_place(&mut out, r, store)?;
    Ok(out)
}

/// Contracts a root redex. On failure the original term is handed back.
fn contract(m: Computation, store: &mut Store) -> Result<Computation, (Computation, StepError)> {
    use Computation as C;
    Ok(match m {
        C::Apply(Value::Fun(x, _, body), v) => subst_comp(&body, &v, &x),
        C::Apply(Value::Prim(p, mut args), w) => {
            if args.len() + 1 < p.arity() {
                args.push(w);
                C::Return(Value::Prim(p, args))
            } else {
                args.push(w);
                match delta(p, &args, store) {
                    Ok(c) => c,
                    Err(e) => {
                        let w = args.pop().expect("pushed above");
                        return Err((C::Apply(Value::Prim(p, args), w), e.into()));
                    }
                }
            }
        }
        C::Let(x, m, n) => match *m {
            C::Return(v) => subst_comp(&n, &v, &x),
            C::Signal(op, v, m) => C::Signal(op, v, Box::new(C::Let(x, m, n))),
            C::Promise(h) => {
                let PromiseHandler { op, x: y, handler, p, cont } = *h;
                // `p` now scopes over `n` as well
                let mut avoid: BTreeSet<Name> = fv_comp(&n);
                avoid.remove(&x);
                let (p, cont) = rename_binder(&p, &cont, &avoid);
                C::Promise(Box::new(PromiseHandler {
                    op,
                    x: y,
                    handler,
                    p,
                    cont: C::Let(x, Box::new(cont), n),
                }))
            }
            other => return Err((C::Let(x, Box::new(other), n), StepError::NotARedex("let".into()))),
        },
        C::MatchPair(Value::Pair(v, w), x, y, body) => {
            let mut s = Subst::new();
            s.insert(x, *v);
            s.insert(y, *w);
            subst_comp_many(&body, &s)
        }
        C::MatchSum(Value::Inl(v, _), x, m, _, _) => subst_comp(&m, &v, &x),
        C::MatchSum(Value::Inr(w, _), _, _, y, n) => subst_comp(&n, &w, &y),
        C::LetRec(r) => {
            let LetRec { f, x, ann, body, cont } = *r;
            let dom = ann.dom.clone();
            let inner = C::LetRec(Box::new(LetRec { f, x: x.clone(), ann, body: body.clone(), cont: body }));
            let C::LetRec(r) = &inner else { unreachable!() };
            let fun = Value::Fun(x, dom, Box::new(inner.clone()));
            subst_comp(&cont, &fun, &r.f)
        }
        C::Promise(h) => {
            let PromiseHandler { op, x, handler, p, cont } = *h;
            match cont {
                C::Signal(op2, v, n) => C::Signal(
                    op2,
                    v,
                    Box::new(C::Promise(Box::new(PromiseHandler { op, x, handler, p, cont: *n }))),
                ),
                other => {
                    let h = PromiseHandler { op, x, handler, p, cont: other };
                    return Err((C::Promise(Box::new(h)), StepError::NotARedex("promise".into())));
                }
            }
        }
        C::Interrupt(op, v, m) => match *m {
            C::Return(w) => C::Return(w),
            C::Signal(op2, w, m) => C::Signal(op2, w, Box::new(C::Interrupt(op, v, m))),
            C::Promise(h) => {
                let PromiseHandler { op: hop, x, handler, p, cont } = *h;
                let (p, cont) = rename_binder(&p, &cont, &fv_value(&v));
                if hop == op {
                    let handler = subst_comp(&handler, &v, &x);
                    C::Let(p, Box::new(handler), Box::new(C::Interrupt(op, v, Box::new(cont))))
                } else {
                    C::Promise(Box::new(PromiseHandler {
                        op: hop,
                        x,
                        handler,
                        p,
                        cont: C::Interrupt(op, v, Box::new(cont)),
                    }))
                }
            }
            other => return Err((C::Interrupt(op, v, Box::new(other)), StepError::NotARedex("interrupt".into()))),
        },
        C::Await(Value::Fulfilled(v), x, m) => subst_comp(&m, &v, &x),
        other => return Err((other, StepError::NotARedex("root".into()))),
    })
}

// ---------------------------------------------------------------------------
// Result forms

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ResultStatus {
    /// Signals at the root over a run result.
    CompResult,
    /// Handlers over returns and computations awaiting a handler's promise.
    RunResult,
    /// Blocked on a promise variable that is in `Ψ`; also a run result.
    Awaiting(Name),
    NotResult,
}

impl ResultStatus {
    pub fn is_comp_result(&self) -> bool {
        !matches!(self, ResultStatus::NotResult)
    }

    pub fn is_run_result(&self) -> bool {
        matches!(self, ResultStatus::RunResult | ResultStatus::Awaiting(_))
    }

    pub fn label(&self) -> String {
        match self {
            ResultStatus::CompResult => "compResult".into(),
            ResultStatus::RunResult => "runResult".into(),
            ResultStatus::Awaiting(p) => format!("awaiting({p})"),
            ResultStatus::NotResult => "notResult".into(),
        }
    }
}

/// `⧖p M`: the promise variable `m` is blocked on, if any.
pub fn awaiting(m: &Computation) -> Option<&Name> {
    match m {
        Computation::Await(Value::Var(p), _, _) => Some(p),
        Computation::Let(_, m, _) | Computation::Interrupt(_, _, m) => awaiting(m),
        _ => None,
    }
}

/// `⟨Ψ⟩ RunRes M`
pub fn is_run_result(psi: &BTreeSet<Name>, m: &Computation) -> bool {
    match m {
        Computation::Return(_) => true,
        Computation::Promise(h) => {
            if psi.contains(&h.p) {
                is_run_result(psi, &h.cont)
            } else {
                let mut psi = psi.clone();
                psi.insert(h.p.clone());
                is_run_result(&psi, &h.cont)
            }
        }
        m => awaiting(m).is_some_and(|p| psi.contains(p)),
    }
}

/// `⟨Ψ⟩ CompRes M`
pub fn is_comp_result(psi: &BTreeSet<Name>, m: &Computation) -> bool {
    match m {
        Computation::Signal(_, _, m) => is_comp_result(psi, m),
        m => is_run_result(psi, m),
    }
}

pub fn result_status(psi: &BTreeSet<Name>, m: &Computation) -> ResultStatus {
    if let Some(p) = awaiting(m) {
        if psi.contains(p) {
            return ResultStatus::Awaiting(p.clone());
        }
    }
    if is_run_result(psi, m) {
        ResultStatus::RunResult
    } else if is_comp_result(psi, m) {
        ResultStatus::CompResult
    } else {
        ResultStatus::NotResult
    }
}

// ---------------------------------------------------------------------------
// Schedulers and driving

/// Picks one of `count` enumerated redexes; `describe(i)` renders option
/// `i`. `None` stops the run.
pub trait Scheduler {
    fn choose(&mut self, count: usize, describe: &dyn Fn(usize) -> String) -> Option<usize>;
}

/// Always the first (leftmost-outermost) redex.
#[derive(Clone, Copy, Debug, Default)]
pub struct FirstScheduler;

impl Scheduler for FirstScheduler {
    fn choose(&mut self, count: usize, _: &dyn Fn(usize) -> String) -> Option<usize> {
        (count > 0).then_some(0)
    }
}

/// Always the last enumerated redex.
#[derive(Clone, Copy, Debug, Default)]
pub struct LastScheduler;

impl Scheduler for LastScheduler {
    fn choose(&mut self, count: usize, _: &dyn Fn(usize) -> String) -> Option<usize> {
        count.checked_sub(1)
    }
}

/// Uniform choice from a seeded ChaCha8 stream.
#[derive(Clone, Debug)]
pub struct RandomScheduler {
    rng: rand_chacha::ChaCha8Rng,
}

impl RandomScheduler {
    pub fn new(seed: u64) -> Self {
        use rand::SeedableRng;
        RandomScheduler { rng: rand_chacha::ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Scheduler for RandomScheduler {
    fn choose(&mut self, count: usize, _: &dyn Fn(usize) -> String) -> Option<usize> {
        use rand::Rng;
        (count > 0).then(|| self.rng.gen_range(0..count))
    }
}

/// Replays a fixed list of choices, then stops.
#[derive(Clone, Debug, Default)]
pub struct ScriptedScheduler {
    choices: std::collections::VecDeque<usize>,
}

impl ScriptedScheduler {
    pub fn new(choices: impl IntoIterator<Item = usize>) -> Self {
        ScriptedScheduler { choices: choices.into_iter().collect() }
    }
}

impl Scheduler for ScriptedScheduler {
    fn choose(&mut self, count: usize, _: &dyn Fn(usize) -> String) -> Option<usize> {
        self.choices.pop_front().filter(|i| *i < count)
    }
}

#[derive(Clone, Debug)]
pub struct SeqRun {
    pub result: Computation,
    pub trace: Vec<Redex>,
    /// Redexes remained when the step budget ran out.
    pub exhausted: bool,
}

/// Steps `m` with scheduler-chosen redexes until none remain, the scheduler
/// stops, or `fuel` steps have been taken.
pub fn run_to_result(
    m: &Computation,
    scheduler: &mut dyn Scheduler,
    fuel: usize,
    store: &mut Store,
) -> Result<SeqRun, StepError> {
    let mut cur = m.clone();
    let mut trace = Vec::new();
    loop {
        let redexes = enumerate_redexes(&cur);
        if redexes.is_empty() {
            return Ok(SeqRun { result: cur, trace, exhausted: false });
        }
        if trace.len() >= fuel {
            return Ok(SeqRun { result: cur, trace, exhausted: true });
        }
        let describe = |i: usize| redexes[i].to_string();
        let Some(i) = scheduler.choose(redexes.len(), &describe) else {
            return Ok(SeqRun { result: cur, trace, exhausted: false });
        };
        let r = redexes.get(i).ok_or_else(|| StepError::NotARedex(format!("choice {i}")))?.clone();
        step_in_place(&mut cur, &r, store)?;
        trace.push(r);
    }
}

pub fn format_trace(trace: &[Redex]) -> String {
    trace.iter().enumerate().map(|(i, r)| format!("{} {}\n", i + 1, r)).collect()
}
