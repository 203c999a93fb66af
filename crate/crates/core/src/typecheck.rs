//! Bidirectional checking of values, computations and processes.
//!
//! Values infer. Computations synthesize their least effect and are checked
//! against a goal by comparing effects at rule premises. Missing `let rec`
//! codomains and effects are filled in by fixed-point iteration; the result of
//! checking is an elaborated term whose annotations are complete.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::builtins::{prim_sig, Prim};
use crate::effects::{drop_unguarded, AnnEnv, EffectAnn, InterruptAnn, SignalSet};
use crate::process::{ProcFrame, ProcRedex, ProcRule};
use crate::program::{Pos, SourceModule};
use crate::syntax::{
    subst_process_many, subst_value_many, Computation, FunAnn, LetRec, Name, Process, PromiseHandler, Subst,
    Value,
};
use crate::types::{BaseType, CompType, SignalName, Signature, ValueType};

/// Typing context; later entries shadow earlier ones.
pub type Ctx = Vec<(Name, ValueType)>;

const MAX_ROUNDS: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeError {
    pub rule: String,
    /// Breadcrumbs from the checked definition down to the failure.
    pub path: Vec<String>,
    pub expected: String,
    pub found: String,
    pub pos: Option<Pos>,
}

impl TypeError {
    fn new(rule: &str, expected: impl fmt::Display, found: impl fmt::Display) -> Self {
        TypeError {
            rule: rule.to_string(),
            path: Vec::new(),
            expected: expected.to_string(),
            found: found.to_string(),
            pos: None,
        }
    }

    /// `file:line:col [Rule] expected … found …`.
    pub fn render(&self, file: &str) -> String {
        let pos = self.pos.unwrap_or(Pos { line: 1, col: 1 });
        let mut s = format!("{file}:{pos} [{}] expected {} found {}", self.rule, self.expected, self.found);
        if !self.path.is_empty() {
            s.push_str(&format!(" (in {})", self.path.join(" > ")));
        }
        s
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = self.pos {
            write!(f, "{p} ")?;
        }
        write!(f, "[{}] expected {} found {}", self.rule, self.expected, self.found)?;
        if !self.path.is_empty() {
            write!(f, " (in {})", self.path.join(" > "))?;
        }
        Ok(())
    }
}

impl std::error::Error for TypeError {}

type Result<T> = std::result::Result<T, TypeError>;

/// Process types mirror the parallel structure of processes. A leaf keeps
/// the interrupts acting on it as a list, outermost first, so that type
/// reduction can insert actions under enveloping ones.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProcessType {
    Run { result: ValueType, base: EffectAnn, acts: Vec<SignalName> },
    Par(Box<ProcessType>, Box<ProcessType>),
}

impl ProcessType {
    pub fn run(result: ValueType, base: EffectAnn) -> Self {
        ProcessType::Run { result, base, acts: Vec::new() }
    }

    pub fn par(a: ProcessType, b: ProcessType) -> Self {
        ProcessType::Par(Box::new(a), Box::new(b))
    }

    /// Result type and effect of every leaf, left to right.
    pub fn leaves(&self, env: &AnnEnv) -> Vec<CompType> {
        let mut out = Vec::new();
        self.collect_leaves(env, &mut out);
        out
    }

    fn collect_leaves(&self, env: &AnnEnv, out: &mut Vec<CompType>) {
        match self {
            ProcessType::Run { result, base, acts } => {
                out.push(CompType::new(result.clone(), env.act_list(acts, base)))
            }
            ProcessType::Par(a, b) => {
                a.collect_leaves(env, out);
                b.collect_leaves(env, out);
            }
        }
    }

    /// `signals-of`: signal annotations of the leaves, joined.
    pub fn signals_of(&self, env: &AnnEnv) -> SignalSet {
        self.leaves(env).into_iter().flat_map(|c| c.effect.signals).collect()
    }

    /// Leafwise action of an interrupt.
    pub fn act(&self, op: &str) -> ProcessType {
        self.insert_act(op, 0)
    }

    fn insert_act(&self, op: &str, depth: usize) -> ProcessType {
        match self {
            ProcessType::Run { result, base, acts } => {
                let mut acts = acts.clone();
                acts.insert(depth.min(acts.len()), op.to_string());
                ProcessType::Run { result: result.clone(), base: base.clone(), acts }
            }
            ProcessType::Par(a, b) => ProcessType::par(a.insert_act(op, depth), b.insert_act(op, depth)),
        }
    }

    /// Removes the outermost action `op` from every leaf.
    fn pop_act(&self, op: &str) -> Option<ProcessType> {
        match self {
            ProcessType::Run { result, base, acts } => match acts.split_first() {
                Some((head, rest)) if head == op => {
                    Some(ProcessType::Run { result: result.clone(), base: base.clone(), acts: rest.to_vec() })
                }
                _ => None,
            },
            ProcessType::Par(a, b) => Some(ProcessType::par(a.pop_act(op)?, b.pop_act(op)?)),
        }
    }

    /// Pretty form with every leaf effect computed.
    pub fn render(&self, env: &AnnEnv) -> String {
        match self {
            ProcessType::Run { result, base, acts } => {
                let c = CompType::new(result.clone(), env.act_list(acts, base));
                c.to_string().replacen(" ! ", " !! ", 1)
            }
            ProcessType::Par(a, b) => {
                let side = |t: &ProcessType| match t {
                    ProcessType::Par(..) => format!("({})", t.render(env)),
                    _ => t.render(env),
                };
                format!("{} || {}", side(a), side(b))
            }
        }
    }
}

impl fmt::Display for ProcessType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessType::Run { result, base, acts } => {
                let c = CompType::new(result.clone(), base.clone());
                let s = c.to_string();
                let (r, e) = s.split_once(" ! ").unwrap_or((&s, ""));
                if acts.is_empty() {
                    write!(f, "{r} !! {e}")
                } else {
                    write!(f, "{r} !! [{}] {e}", acts.join(", "))
                }
            }
            ProcessType::Par(a, b) => write!(f, "({a}) || ({b})"),
        }
    }
}

pub struct Checker<'a> {
    sig: &'a Signature,
    env: AnnEnv,
    /// While guessing a recursive function's codomain, `empty` stands for
    /// the not-yet-known result and eliminates as anything.
    guess: bool,
    path: Vec<String>,
    used: BTreeSet<&'static str>,
    /// Annotation names chosen for inferred recursive definitions, by node,
    /// so that re-checking a body during outer inference reuses them.
    letrec_names: HashMap<*const LetRec, String>,
}

impl<'a> Checker<'a> {
    pub fn new(sig: &'a Signature, env: AnnEnv) -> Self {
        Checker { sig, env, guess: false, path: Vec::new(), used: BTreeSet::new(), letrec_names: HashMap::new() }
    }

    pub fn env(&self) -> &AnnEnv {
        &self.env
    }

    pub fn into_env(self) -> AnnEnv {
        self.env
    }

    /// Labels of the typing rules used so far.
    pub fn used_rules(&self) -> &BTreeSet<&'static str> {
        &self.used
    }

    fn note(&mut self, rule: &'static str) {
        self.used.insert(rule);
    }

    fn err(&self, rule: &str, expected: impl fmt::Display, found: impl fmt::Display) -> TypeError {
        let mut e = TypeError::new(rule, expected, found);
        e.path = self.path.clone();
        e
    }

    fn within<T>(&mut self, crumb: impl Into<String>, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        self.path.push(crumb.into());
        let r = f(self);
        self.path.pop();
        r
    }

    fn with_vars<T>(
        &mut self,
        ctx: &mut Ctx,
        vars: &[(&Name, &ValueType)],
        f: impl FnOnce(&mut Self, &mut Ctx) -> Result<T>,
    ) -> Result<T> {
        let n = ctx.len();
        ctx.extend(vars.iter().map(|(x, t)| ((*x).clone(), (*t).clone())));
        let r = f(self, ctx);
        ctx.truncate(n);
        r
    }

    fn payload(&self, rule: &str, op: &str) -> Result<ValueType> {
        self.sig
            .payload(op)
            .cloned()
            .ok_or_else(|| self.err(rule, "a declared signal", format!("unknown `{op}`")))
    }

    // -----------------------------------------------------------------------
    // Value types

    /// Subtyping on value types: effects in function types are ordered, all
    /// other constructors are covariant except references.
    pub fn subtype(&self, a: &ValueType, b: &ValueType) -> bool {
        use ValueType as T;
        if a == b || (self.guess && *a == T::Empty) {
            return true;
        }
        match (a, b) {
            (T::Product(a1, a2), T::Product(b1, b2)) | (T::Sum(a1, a2), T::Sum(b1, b2)) => {
                self.subtype(a1, b1) && self.subtype(a2, b2)
            }
            (T::Promise(x), T::Promise(y)) => self.subtype(x, y),
            (T::Ref(x), T::Ref(y)) => self.subtype(x, y) && self.subtype(y, x),
            (T::Fun(a1, c1), T::Fun(b1, c2)) => {
                self.subtype(b1, a1) && self.subtype(&c1.result, &c2.result) && self.env.leq(&c1.effect, &c2.effect)
            }
            _ => false,
        }
    }

    fn lub(&self, a: &ValueType, b: &ValueType) -> Option<ValueType> {
        use ValueType as T;
        if self.subtype(a, b) {
            return Some(b.clone());
        }
        if self.subtype(b, a) {
            return Some(a.clone());
        }
        Some(match (a, b) {
            (T::Product(a1, a2), T::Product(b1, b2)) => T::product(self.lub(a1, b1)?, self.lub(a2, b2)?),
            (T::Sum(a1, a2), T::Sum(b1, b2)) => T::sum(self.lub(a1, b1)?, self.lub(a2, b2)?),
            (T::Promise(x), T::Promise(y)) => T::promise(self.lub(x, y)?),
            (T::Fun(a1, c1), T::Fun(b1, c2)) => T::fun(
                self.glb(a1, b1)?,
                CompType::new(self.lub(&c1.result, &c2.result)?, c1.effect.join(&c2.effect)),
            ),
            _ => return None,
        })
    }

    fn glb(&self, a: &ValueType, b: &ValueType) -> Option<ValueType> {
        if self.subtype(a, b) {
            Some(a.clone())
        } else if self.subtype(b, a) {
            Some(b.clone())
        } else {
            None
        }
    }

    /// Type of a value with the given context.
    pub fn infer_value(&mut self, ctx: &Ctx, v: &Value) -> Result<ValueType> {
        let mut ctx = ctx.clone();
        Ok(self.infer(&mut ctx, v)?.1)
    }

    fn infer(&mut self, ctx: &mut Ctx, v: &Value) -> Result<(Value, ValueType)> {
        use ValueType as T;
        Ok(match v {
            Value::Var(x) => {
                self.note("TyVal-Var");
                match ctx.iter().rev().find(|(y, _)| y == x) {
                    Some((_, t)) => (v.clone(), t.clone()),
                    None => return Err(self.err("TyVal-Var", "a bound variable", format!("unbound `{x}`"))),
                }
            }
            Value::Unit => {
                self.note("TyVal-Unit");
                (Value::Unit, T::Unit)
            }
            Value::Int(_) => (v.clone(), T::int()),
            Value::Str(_) => (v.clone(), T::string()),
            Value::List(_) => (v.clone(), T::list()),
            Value::Loc(_) => (v.clone(), T::Base(BaseType::Loc)),
            Value::Heap(_) => (v.clone(), T::Base(BaseType::Heap)),
            Value::Pair(a, b) => {
                self.note("TyVal-Pair");
                let (a, ta) = self.infer(ctx, a)?;
                let (b, tb) = self.infer(ctx, b)?;
                (Value::pair(a, b), T::product(ta, tb))
            }
            Value::Inl(a, right) => {
                self.note("TyVal-Inl");
                let (a, ta) = self.infer(ctx, a)?;
                (Value::inl(a, right.clone()), T::sum(ta, right.clone()))
            }
            Value::Inr(b, left) => {
                self.note("TyVal-Inr");
                let (b, tb) = self.infer(ctx, b)?;
                (Value::inr(b, left.clone()), T::sum(left.clone(), tb))
            }
            Value::Fun(x, dom, body) => {
                self.note("TyVal-Fun");
                let (body, c) = self.within(format!("fun {x}"), |s| {
                    s.with_vars(ctx, &[(x, dom)], |s, ctx| s.synth_in(ctx, body))
                })?;
                (Value::fun(x.clone(), dom.clone(), body), T::fun(dom.clone(), c))
            }
            Value::Fulfilled(a) => {
                self.note("TyVal-Promise");
                let (a, ta) = self.infer(ctx, a)?;
                (Value::fulfilled(a), T::promise(ta))
            }
            Value::Prim(p, args) => {
                let (args, ty) = self.prim_value(ctx, *p, args, None)?;
                (Value::Prim(*p, args), ty)
            }
            Value::Ref(l) => {
                return Err(self.err("TyVal-Var", "a value with a static type", format!("store location #{l}")))
            }
        })
    }

    /// Type of a partially applied primitive. `hint` instantiates a
    /// polymorphic primitive that has no arguments yet.
    fn prim_value(
        &mut self,
        ctx: &mut Ctx,
        p: Prim,
        args: &[Value],
        hint: Option<&ValueType>,
    ) -> Result<(Vec<Value>, ValueType)> {
        let (args, sig) = self.prim_args(ctx, p, args, hint)?;
        let n = args.len();
        Ok((args, sig.remaining_type(n)))
    }

    fn prim_args(
        &mut self,
        ctx: &mut Ctx,
        p: Prim,
        args: &[Value],
        hint: Option<&ValueType>,
    ) -> Result<(Vec<Value>, crate::builtins::PrimSig)> {
        let first = match args.first() {
            Some(a) => Some(self.infer(ctx, a)?.1),
            None => hint.cloned(),
        };
        let sig = match prim_sig(p, first.as_ref()) {
            Ok(s) => s,
            Err(msg) if first.is_none() => {
                return Err(self.err("TyComp-Apply", format!("an argument for `{p}`"), msg));
            }
            Err(msg) => return Err(self.err("TyComp-Apply", format!("arguments fitting `{p}`"), msg)),
        };
        if args.len() > p.arity() {
            return Err(self.err("TyComp-Apply", format!("at most {} arguments", p.arity()), args.len()));
        }
        let mut out = Vec::new();
        for (a, t) in args.iter().zip(&sig.params) {
            out.push(self.check_value_in(ctx, a, t, "TyComp-Apply")?);
        }
        Ok((out, sig))
    }

    /// Checks a value against a type, pushing expected function types into
    /// function bodies.
    pub fn check_value(&mut self, ctx: &Ctx, v: &Value, ty: &ValueType) -> Result<Value> {
        let mut ctx = ctx.clone();
        self.check_value_in(&mut ctx, v, ty, "TyVal-Var")
    }

    fn check_value_in(&mut self, ctx: &mut Ctx, v: &Value, ty: &ValueType, rule: &str) -> Result<Value> {
        use ValueType as T;
        match (v, ty) {
            (Value::Fun(x, dom, body), T::Fun(dom2, cod)) => {
                self.note("TyVal-Fun");
                if !self.subtype(dom2, dom) {
                    return Err(self.err("TyVal-Fun", format!("parameter type {dom2}"), dom));
                }
                let body = self.within(format!("fun {x}"), |s| {
                    s.with_vars(ctx, &[(x, dom)], |s, ctx| s.check_in(ctx, body, cod))
                })?;
                Ok(Value::fun(x.clone(), dom.clone(), body))
            }
            (Value::Pair(a, b), T::Product(ta, tb)) => {
                self.note("TyVal-Pair");
                let a = self.check_value_in(ctx, a, ta, rule)?;
                let b = self.check_value_in(ctx, b, tb, rule)?;
                Ok(Value::pair(a, b))
            }
            (Value::Inl(a, right), T::Sum(ta, tb)) => {
                self.note("TyVal-Inl");
                if !self.subtype(right, tb) {
                    return Err(self.err("TyVal-Inl", ty, T::sum(T::Empty, right.clone())));
                }
                Ok(Value::inl(self.check_value_in(ctx, a, ta, rule)?, right.clone()))
            }
            (Value::Inr(b, left), T::Sum(ta, tb)) => {
                self.note("TyVal-Inr");
                if !self.subtype(left, ta) {
                    return Err(self.err("TyVal-Inr", ty, T::sum(left.clone(), T::Empty)));
                }
                Ok(Value::inr(self.check_value_in(ctx, b, tb, rule)?, left.clone()))
            }
            (Value::Fulfilled(a), T::Promise(t)) => {
                self.note("TyVal-Promise");
                Ok(Value::fulfilled(self.check_value_in(ctx, a, t, rule)?))
            }
            (Value::Prim(p, args), T::Fun(dom, _)) if args.is_empty() => {
                let (args, found) = self.prim_value(ctx, *p, args, Some(dom))?;
                if !self.subtype(&found, ty) {
                    return Err(self.err(rule, ty, found));
                }
                Ok(Value::Prim(*p, args))
            }
            _ => {
                let (v2, found) = self.infer(ctx, v)?;
                if !self.subtype(&found, ty) {
                    return Err(self.err(rule, ty, found));
                }
                Ok(v2)
            }
        }
    }

    // -----------------------------------------------------------------------
    // Computations

    /// Least type and effect of a computation.
    pub fn synth(&mut self, ctx: &Ctx, m: &Computation) -> Result<(Computation, CompType)> {
        let mut ctx = ctx.clone();
        self.synth_in(&mut ctx, m)
    }

    /// Checks `m` against `goal`, returning the elaborated computation.
    pub fn check(&mut self, ctx: &Ctx, m: &Computation, goal: &CompType) -> Result<Computation> {
        let mut ctx = ctx.clone();
        self.check_in(&mut ctx, m, goal)
    }

    fn subsumed(&mut self, found: &EffectAnn, goal: &EffectAnn) -> bool {
        if !self.env.leq(found, goal) {
            return false;
        }
        if !self.env.leq(goal, found) {
            self.note("TyComp-Subsume");
        }
        true
    }

    /// Synthesizes `m` and requires its effect to fit under `eff`; on
    /// failure the error comes from checking `m` against `eff` directly, so
    /// it points at the offending subterm.
    fn synth_under(&mut self, ctx: &mut Ctx, m: &Computation, eff: &EffectAnn) -> Result<(Computation, ValueType)> {
        let (m2, ct) = self.synth_in(ctx, m)?;
        if self.subsumed(&ct.effect, eff) {
            return Ok((m2, ct.result));
        }
        self.check_in(ctx, m, &CompType::new(ct.result.clone(), eff.clone()))?;
        Err(self.err("TyComp-Subsume", eff, &ct.effect))
    }

    fn expect_product(&self, rule: &str, t: ValueType) -> Result<(ValueType, ValueType)> {
        match t {
            ValueType::Product(a, b) => Ok((*a, *b)),
            ValueType::Empty if self.guess => Ok((ValueType::Empty, ValueType::Empty)),
            t => Err(self.err(rule, "a product", t)),
        }
    }

    fn expect_sum(&self, rule: &str, t: ValueType) -> Result<(ValueType, ValueType)> {
        match t {
            ValueType::Sum(a, b) => Ok((*a, *b)),
            ValueType::Empty if self.guess => Ok((ValueType::Empty, ValueType::Empty)),
            t => Err(self.err(rule, "a sum", t)),
        }
    }

    fn expect_promise(&self, rule: &str, t: ValueType) -> Result<ValueType> {
        match t {
            ValueType::Promise(a) => Ok(*a),
            ValueType::Empty if self.guess => Ok(ValueType::Empty),
            t => Err(self.err(rule, "a promise type", t)),
        }
    }

    fn synth_in(&mut self, ctx: &mut Ctx, m: &Computation) -> Result<(Computation, CompType)> {
        use Computation as C;
        match m {
            C::Return(v) => {
                self.note("TyComp-Return");
                let (v, t) = self.infer(ctx, v)?;
                Ok((C::Return(v), CompType::pure(t)))
            }
            C::Let(x, a, b) => {
                self.note("TyComp-Let");
                let (a, ta) = self.within(format!("let {x}"), |s| s.synth_in(ctx, a))?;
                let (b, tb) = self.with_vars(ctx, &[(x, &ta.result)], |s, ctx| s.synth_in(ctx, b))?;
                Ok((C::let_(x.clone(), a, b), CompType::new(tb.result, ta.effect.join(&tb.effect))))
            }
            C::LetRec(lr) => {
                let (ann, body, fty) = self.letrec(ctx, lr)?;
                let (cont, t) = self.with_vars(ctx, &[(&lr.f, &fty)], |s, ctx| s.synth_in(ctx, &lr.cont))?;
                Ok((C::letrec(lr.f.clone(), lr.x.clone(), ann, body, cont), t))
            }
            C::Apply(f, a) => self.apply(ctx, f, a),
            C::MatchPair(v, x, y, body) => {
                self.note("TyComp-MatchPair");
                let (v, t) = self.infer(ctx, v)?;
                let (tx, ty) = self.expect_product("TyComp-MatchPair", t)?;
                let (body, c) = self.with_vars(ctx, &[(x, &tx), (y, &ty)], |s, ctx| s.synth_in(ctx, body))?;
                Ok((C::match_pair(v, x.clone(), y.clone(), body), c))
            }
            C::MatchEmpty(v, t) => {
                self.note("TyComp-MatchEmpty");
                let v = self.check_value_in(ctx, v, &ValueType::Empty, "TyComp-MatchEmpty")?;
                Ok((C::MatchEmpty(v, t.clone()), t.clone()))
            }
            C::MatchSum(v, x, a, y, b) => {
                self.note("TyComp-MatchSum");
                let (v, t) = self.infer(ctx, v)?;
                let (tx, ty) = self.expect_sum("TyComp-MatchSum", t)?;
                let (a, ca) = self.within("left branch", |s| {
                    s.with_vars(ctx, &[(x, &tx)], |s, ctx| s.synth_in(ctx, a))
                })?;
                let (b, cb) = self.within("right branch", |s| {
                    s.with_vars(ctx, &[(y, &ty)], |s, ctx| s.synth_in(ctx, b))
                })?;
                let r = self
                    .lub(&ca.result, &cb.result)
                    .ok_or_else(|| self.err("TyComp-MatchSum", &ca.result, &cb.result))?;
                Ok((
                    C::match_sum(v, x.clone(), a, y.clone(), b),
                    CompType::new(r, ca.effect.join(&cb.effect)),
                ))
            }
            C::Signal(op, v, body) => {
                self.note("TyComp-Signal");
                let a = self.payload("TyComp-Signal", op)?;
                let v = self.check_value_in(ctx, v, &a, "TyComp-Signal")?;
                let (body, mut c) = self.synth_in(ctx, body)?;
                c.effect.signals.insert(op.clone());
                Ok((C::signal(op.clone(), v, body), c))
            }
            C::Interrupt(op, v, body) => {
                self.note("TyComp-Interrupt");
                let a = self.payload("TyComp-Interrupt", op)?;
                let v = self.check_value_in(ctx, v, &a, "TyComp-Interrupt")?;
                let (body, c) = self.synth_in(ctx, body)?;
                let effect = self.env.act(op, &c.effect);
                Ok((C::interrupt(op.clone(), v, body), CompType::new(c.result, effect)))
            }
            C::Promise(h) => {
                self.note("TyComp-Promise");
                let a = self.payload("TyComp-Promise", &h.op)?;
                let (handler, th) = self.within(format!("handler for {}", h.op), |s| {
                    s.with_vars(ctx, &[(&h.x, &a)], |s, ctx| s.synth_in(ctx, &h.handler))
                })?;
                let x = self.expect_promise("TyComp-Promise", th.result)?;
                let pt = ValueType::promise(x);
                let (cont, tc) = self.with_vars(ctx, &[(&h.p, &pt)], |s, ctx| s.synth_in(ctx, &h.cont))?;
                let mine = InterruptAnn::single(h.op.clone(), th.effect.signals, th.effect.handlers);
                let effect = EffectAnn::new(tc.effect.signals, tc.effect.handlers.join(&mine));
                Ok((rebuild_promise(h, handler, cont), CompType::new(tc.result, effect)))
            }
            C::Await(v, x, body) => {
                self.note("TyComp-Await");
                let (v, t) = self.infer(ctx, v)?;
                let tx = self.expect_promise("TyComp-Await", t)?;
                let (body, c) = self.with_vars(ctx, &[(x, &tx)], |s, ctx| s.synth_in(ctx, body))?;
                Ok((C::await_(v, x.clone(), body), c))
            }
        }
    }

    fn apply(&mut self, ctx: &mut Ctx, f: &Value, a: &Value) -> Result<(Computation, CompType)> {
        self.note("TyComp-Apply");
        if let Value::Prim(p, args) = f {
            let mut all = args.clone();
            all.push(a.clone());
            let (mut all, sig) = self.prim_args(ctx, *p, &all, None)?;
            let a = all.pop().expect("argument");
            let c = if all.len() + 1 == p.arity() {
                CompType::new(sig.result.clone(), sig.effect.clone())
            } else {
                CompType::pure(sig.remaining_type(all.len() + 1))
            };
            return Ok((Computation::Apply(Value::Prim(*p, all), a), c));
        }
        let (f, tf) = self.infer(ctx, f)?;
        match tf {
            ValueType::Fun(dom, cod) => {
                let a = self.check_value_in(ctx, a, &dom, "TyComp-Apply")?;
                Ok((Computation::Apply(f, a), *cod))
            }
            ValueType::Empty if self.guess => {
                let (a, _) = self.infer(ctx, a)?;
                Ok((Computation::Apply(f, a), CompType::pure(ValueType::Empty)))
            }
            t => Err(self.err("TyComp-Apply", "a function", t)),
        }
    }

    fn check_in(&mut self, ctx: &mut Ctx, m: &Computation, goal: &CompType) -> Result<Computation> {
        use Computation as C;
        match m {
            C::Return(v) => {
                self.note("TyComp-Return");
                let v = self.check_value_in(ctx, v, &goal.result, "TyComp-Return")?;
                self.subsumed(&EffectAnn::empty(), &goal.effect);
                Ok(C::Return(v))
            }
            C::Let(x, a, b) => {
                self.note("TyComp-Let");
                let (a, ta) = self.within(format!("let {x}"), |s| s.synth_under(ctx, a, &goal.effect))?;
                let b = self.with_vars(ctx, &[(x, &ta)], |s, ctx| s.check_in(ctx, b, goal))?;
                Ok(C::let_(x.clone(), a, b))
            }
            C::LetRec(lr) => {
                let (ann, body, fty) = self.letrec(ctx, lr)?;
                let cont = self.with_vars(ctx, &[(&lr.f, &fty)], |s, ctx| s.check_in(ctx, &lr.cont, goal))?;
                Ok(C::letrec(lr.f.clone(), lr.x.clone(), ann, body, cont))
            }
            C::Apply(..) | C::MatchEmpty(..) => {
                let (m2, c) = self.synth_in(ctx, m)?;
                let rule = if matches!(m, C::Apply(..)) { "TyComp-Apply" } else { "TyComp-MatchEmpty" };
                if !self.subtype(&c.result, &goal.result) {
                    return Err(self.err(rule, &goal.result, &c.result));
                }
                if !self.subsumed(&c.effect, &goal.effect) {
                    return Err(self.err("TyComp-Subsume", &goal.effect, &c.effect));
                }
                Ok(m2)
            }
            C::MatchPair(v, x, y, body) => {
                self.note("TyComp-MatchPair");
                let (v, t) = self.infer(ctx, v)?;
                let (tx, ty) = self.expect_product("TyComp-MatchPair", t)?;
                let body = self.with_vars(ctx, &[(x, &tx), (y, &ty)], |s, ctx| s.check_in(ctx, body, goal))?;
                Ok(C::match_pair(v, x.clone(), y.clone(), body))
            }
            C::MatchSum(v, x, a, y, b) => {
                self.note("TyComp-MatchSum");
                let (v, t) = self.infer(ctx, v)?;
                let (tx, ty) = self.expect_sum("TyComp-MatchSum", t)?;
                let a = self.within("left branch", |s| {
                    s.with_vars(ctx, &[(x, &tx)], |s, ctx| s.check_in(ctx, a, goal))
                })?;
                let b = self.within("right branch", |s| {
                    s.with_vars(ctx, &[(y, &ty)], |s, ctx| s.check_in(ctx, b, goal))
                })?;
                Ok(C::match_sum(v, x.clone(), a, y.clone(), b))
            }
            C::Signal(op, v, body) => {
                self.note("TyComp-Signal");
                let a = self.payload("TyComp-Signal", op)?;
                if !goal.effect.signals.contains(op) {
                    return Err(self.err(
                        "TyComp-Signal",
                        format!("`{op}` in {}", crate::effects::SetDisplay(&goal.effect.signals)),
                        format!("signal `{op}`"),
                    ));
                }
                let v = self.check_value_in(ctx, v, &a, "TyComp-Signal")?;
                let body = self.check_in(ctx, body, goal)?;
                Ok(C::signal(op.clone(), v, body))
            }
            C::Interrupt(op, v, body) => {
                self.note("TyComp-Interrupt");
                let a = self.payload("TyComp-Interrupt", op)?;
                let v = self.check_value_in(ctx, v, &a, "TyComp-Interrupt")?;
                let (body, c) = self.synth_in(ctx, body)?;
                if !self.subtype(&c.result, &goal.result) {
                    return Err(self.err("TyComp-Interrupt", &goal.result, &c.result));
                }
                let acted = self.env.act(op, &c.effect);
                if !self.subsumed(&acted, &goal.effect) {
                    return Err(self.err("TyComp-Interrupt", &goal.effect, format!("{op}↓{} = {acted}", c.effect)));
                }
                Ok(C::interrupt(op.clone(), v, body))
            }
            C::Promise(h) => {
                self.note("TyComp-Promise");
                let a = self.payload("TyComp-Promise", &h.op)?;
                let lookup = self
                    .env
                    .lookup(&goal.effect.handlers, &h.op)
                    .map_err(|e| self.err("TyComp-Promise", "resolved annotations", e))?;
                let Some((o2, i2)) = lookup else {
                    return Err(self.err(
                        "TyComp-Promise",
                        format!("a handler annotation for `{}` in {}", h.op, goal.effect.handlers),
                        "none",
                    ));
                };
                let heff = EffectAnn::new(o2, i2);
                let (handler, th) = self.within(format!("handler for {}", h.op), |s| {
                    s.with_vars(ctx, &[(&h.x, &a)], |s, ctx| s.synth_under(ctx, &h.handler, &heff))
                })?;
                let x = self.expect_promise("TyComp-Promise", th)?;
                let pt = ValueType::promise(x);
                let cont = self.with_vars(ctx, &[(&h.p, &pt)], |s, ctx| s.check_in(ctx, &h.cont, goal))?;
                Ok(rebuild_promise(h, handler, cont))
            }
            C::Await(v, x, body) => {
                self.note("TyComp-Await");
                let (v, t) = self.infer(ctx, v)?;
                let tx = self.expect_promise("TyComp-Await", t)?;
                let body = self.with_vars(ctx, &[(x, &tx)], |s, ctx| s.check_in(ctx, body, goal))?;
                Ok(C::await_(v, x.clone(), body))
            }
        }
    }

    /// Completes and checks a `let rec` annotation. Returns the complete
    /// annotation, the elaborated body and the type of `f`.
    fn letrec(&mut self, ctx: &mut Ctx, lr: &LetRec) -> Result<(FunAnn, Computation, ValueType)> {
        self.note("TyComp-LetRec");
        let dom = lr.ann.dom.clone();
        let (cod, eff) = match (&lr.ann.cod, &lr.ann.eff) {
            (Some(c), Some(e)) => (c.clone(), e.clone()),
            _ => self.within(format!("let rec {}", lr.f), |s| s.infer_letrec(ctx, lr))?,
        };
        if let Err(e) = self.env.check_resolved(&eff.handlers) {
            return Err(self.err("TyComp-LetRec", "resolved annotations", e));
        }
        let goal = CompType::new(cod.clone(), eff.clone());
        let fty = ValueType::fun(dom.clone(), goal.clone());
        let body = self.within(format!("let rec {}", lr.f), |s| {
            s.with_vars(ctx, &[(&lr.f, &fty), (&lr.x, &dom)], |s, ctx| s.check_in(ctx, &lr.body, &goal))
        })?;
        Ok((FunAnn { dom, cod: Some(cod), eff: Some(eff) }, body, fty))
    }

    /// Least codomain and effect by iteration. A recursive effect gets a
    /// named definition `f'` in the annotation environment.
    fn infer_letrec(&mut self, ctx: &mut Ctx, lr: &LetRec) -> Result<(ValueType, EffectAnn)> {
        let base_env = self.env.clone();
        let guess_cod = lr.ann.cod.is_none();
        let mut cod = lr.ann.cod.clone().unwrap_or(ValueType::Empty);
        let key = lr as *const LetRec;
        let name = match self.letrec_names.get(&key) {
            Some(n) => n.clone(),
            None => {
                let taken: BTreeSet<&String> = self.letrec_names.values().collect();
                let mut n = fresh_ann_name(&lr.f, &base_env);
                while taken.contains(&n) {
                    n.push('\'');
                }
                self.letrec_names.insert(key, n.clone());
                n
            }
        };
        let mut o = SignalSet::new();
        let mut i = InterruptAnn::empty();
        let mut converged = false;
        // Annotations inferred for nested definitions, carried between rounds.
        let mut inner: Vec<(String, InterruptAnn)> = Vec::new();
        for _ in 0..MAX_ROUNDS {
            self.env = base_env.clone();
            for (n, body) in &inner {
                self.env.redefine(n.clone(), body.clone());
            }
            let eff = match &lr.ann.eff {
                Some(e) => e.clone(),
                None => {
                    self.env.redefine(name.clone(), i.clone());
                    EffectAnn::new(o.clone(), InterruptAnn::named(name.clone()))
                }
            };
            let fty = ValueType::fun(lr.ann.dom.clone(), CompType::new(cod.clone(), eff));
            let outer = self.guess;
            self.guess = outer || guess_cod;
            let r = self.with_vars(ctx, &[(&lr.f, &fty), (&lr.x, &lr.ann.dom)], |s, ctx| s.synth_in(ctx, &lr.body));
            let new_cod = match &r {
                Ok((_, c)) if guess_cod => self.lub(&cod, &c.result),
                _ => Some(cod.clone()),
            };
            self.guess = outer;
            let (_, c) = r.inspect_err(|_| self.env = base_env.clone())?;
            inner = self
                .env
                .iter()
                .filter(|(n, _)| **n != name && !base_env.contains(n))
                .map(|(n, b)| (n.clone(), b.clone()))
                .collect();
            let Some(new_cod) = new_cod else {
                self.env = base_env;
                return Err(self.err("TyComp-LetRec", format!("a result type compatible with {cod}"), &c.result));
            };
            let (new_o, new_i) = if lr.ann.eff.is_none() {
                let o2: SignalSet = o.union(&c.effect.signals).cloned().collect();
                (o2, drop_unguarded(&i.join(&c.effect.handlers), &name))
            } else {
                (o.clone(), i.clone())
            };
            if new_cod == cod && new_o == o && new_i == i {
                converged = true;
                break;
            }
            cod = new_cod;
            o = new_o;
            i = new_i;
        }
        self.env = base_env;
        for (n, body) in inner {
            self.env.redefine(n, body);
        }
        if !converged {
            return Err(self.err("TyComp-LetRec", "an explicit annotation", format!("`{}` without one", lr.f)));
        }
        let eff = match &lr.ann.eff {
            Some(e) => e.clone(),
            None => {
                let mut names = BTreeSet::new();
                i.mentioned_names(&mut names);
                if names.contains(&name) {
                    self.env.redefine(name.clone(), i);
                    EffectAnn::new(o, InterruptAnn::named(name))
                } else {
                    EffectAnn::new(o, i)
                }
            }
        };
        Ok((cod, eff))
    }

    // -----------------------------------------------------------------------
    // Processes

    /// Synthesizes the type of a process.
    pub fn check_process(&mut self, ctx: &Ctx, p: &Process) -> Result<(Process, ProcessType)> {
        let mut ctx = ctx.clone();
        self.process_in(&mut ctx, p)
    }

    fn process_in(&mut self, ctx: &mut Ctx, p: &Process) -> Result<(Process, ProcessType)> {
        match p {
            Process::Run(m) => {
                self.note("TyProc-Run");
                let (m, c) = self.synth_in(ctx, m)?;
                Ok((Process::Run(m), ProcessType::run(c.result, c.effect)))
            }
            Process::Par(a, b) => {
                self.note("TyProc-Par");
                let (a, ta) = self.within("left process", |s| s.process_in(ctx, a))?;
                let (b, tb) = self.within("right process", |s| s.process_in(ctx, b))?;
                Ok((Process::par(a, b), ProcessType::par(ta, tb)))
            }
            Process::Signal(op, v, q) => {
                self.note("TyProc-Signal");
                let a = self.payload("TyProc-Signal", op)?;
                let v = self.check_value_in(ctx, v, &a, "TyProc-Signal")?;
                let (q, t) = self.process_in(ctx, q)?;
                let sigs = t.signals_of(&self.env);
                if !sigs.contains(op) {
                    return Err(self.err(
                        "TyProc-Signal",
                        format!("`{op}` in {}", crate::effects::SetDisplay(&sigs)),
                        format!("signal `{op}`"),
                    ));
                }
                Ok((Process::signal(op.clone(), v, q), t))
            }
            Process::Interrupt(op, v, q) => {
                self.note("TyProc-Interrupt");
                let a = self.payload("TyProc-Interrupt", op)?;
                let v = self.check_value_in(ctx, v, &a, "TyProc-Interrupt")?;
                let (q, t) = self.process_in(ctx, q)?;
                Ok((Process::interrupt(op.clone(), v, q), t.act(op)))
            }
        }
    }

    /// Checks a process against a given process type, with subsumption
    /// only inside `run` leaves.
    pub fn check_process_against(&mut self, ctx: &Ctx, p: &Process, d: &ProcessType) -> Result<Process> {
        let mut ctx = ctx.clone();
        self.process_against(&mut ctx, p, d)
    }

    fn process_against(&mut self, ctx: &mut Ctx, p: &Process, d: &ProcessType) -> Result<Process> {
        match (p, d) {
            (Process::Run(m), ProcessType::Run { result, base, acts }) => {
                self.note("TyProc-Run");
                let goal = CompType::new(result.clone(), self.env.act_list(acts, base));
                Ok(Process::Run(self.check_in(ctx, m, &goal)?))
            }
            (Process::Par(a, b), ProcessType::Par(ta, tb)) => {
                self.note("TyProc-Par");
                let a = self.within("left process", |s| s.process_against(ctx, a, ta))?;
                let b = self.within("right process", |s| s.process_against(ctx, b, tb))?;
                Ok(Process::par(a, b))
            }
            (Process::Signal(op, v, q), d) => {
                self.note("TyProc-Signal");
                let a = self.payload("TyProc-Signal", op)?;
                let v = self.check_value_in(ctx, v, &a, "TyProc-Signal")?;
                let sigs = d.signals_of(&self.env);
                if !sigs.contains(op) {
                    return Err(self.err(
                        "TyProc-Signal",
                        format!("`{op}` in {}", crate::effects::SetDisplay(&sigs)),
                        format!("signal `{op}`"),
                    ));
                }
                Ok(Process::signal(op.clone(), v, self.process_against(ctx, q, d)?))
            }
            (Process::Interrupt(op, v, q), d) => {
                self.note("TyProc-Interrupt");
                let a = self.payload("TyProc-Interrupt", op)?;
                let v = self.check_value_in(ctx, v, &a, "TyProc-Interrupt")?;
                let inner = d
                    .pop_act(op)
                    .ok_or_else(|| self.err("TyProc-Interrupt", format!("a type acted on by `{op}`"), d))?;
                Ok(Process::interrupt(op.clone(), v, self.process_against(ctx, q, &inner)?))
            }
            (Process::Run(_), d) => Err(self.err("TyProc-Run", d, "a single computation")),
            (Process::Par(..), d) => Err(self.err("TyProc-Par", d, "a parallel composition")),
        }
    }

    /// `C ⤳ D`: leafwise, either unchanged or acted on by one more interrupt
    /// under some enveloping prefix of actions.
    pub fn type_reduces(&self, c: &ProcessType, d: &ProcessType) -> bool {
        match (c, d) {
            (ProcessType::Par(a, b), ProcessType::Par(a2, b2)) => self.type_reduces(a, a2) && self.type_reduces(b, b2),
            (
                ProcessType::Run { result, base, acts },
                ProcessType::Run { result: r2, base: base2, acts: acts2 },
            ) => {
                if result != r2 {
                    return false;
                }
                let target = self.env.act_list(acts2, base2);
                if self.env.equiv(&self.env.act_list(acts, base), &target) {
                    return true;
                }
                (0..=acts.len()).any(|k| {
                    let inner = self.env.act_list(&acts[k..], base);
                    self.sig.names().any(|op| {
                        let e = self.env.act_list(&acts[..k], &self.env.act(op, &inner));
                        self.env.equiv(&e, &target)
                    })
                })
            }
            _ => false,
        }
    }
}

fn rebuild_promise(h: &PromiseHandler, handler: Computation, cont: Computation) -> Computation {
    Computation::Promise(Box::new(PromiseHandler {
        op: h.op.clone(),
        x: h.x.clone(),
        handler,
        p: h.p.clone(),
        cont,
    }))
}

fn fresh_ann_name(f: &str, env: &AnnEnv) -> String {
    let mut name = format!("{f}'");
    while env.contains(&name) {
        name.push('\'');
    }
    name
}

/// Process type after a step, for the redex's rule: broadcasts add an
/// action to the receiving side under the interrupts enveloping the
/// parallel composition; every other step keeps the type.
pub fn stepped_type(c: &ProcessType, p: &Process, r: &ProcRedex) -> ProcessType {
    let (ProcRule::BroadcastLeft | ProcRule::BroadcastRight) = r.rule else {
        return c.clone();
    };
    let depth = r.path.iter().filter(|f| **f == ProcFrame::Interrupt).count();
    let Some(node) = crate::process::proc_subterm(p, &r.path) else {
        return c.clone();
    };
    let op = match (r.rule, node) {
        (ProcRule::BroadcastLeft, Process::Par(l, _)) => match &**l {
            Process::Signal(op, _, _) => op.clone(),
            _ => return c.clone(),
        },
        (_, Process::Par(_, rt)) => match &**rt {
            Process::Signal(op, _, _) => op.clone(),
            _ => return c.clone(),
        },
        _ => return c.clone(),
    };
    let into_right = r.rule == ProcRule::BroadcastLeft;
    let par_path: Vec<ProcFrame> =
        r.path.iter().copied().filter(|f| matches!(f, ProcFrame::ParLeft | ProcFrame::ParRight)).collect();
    update_at(c, &par_path, &|t| match t {
        ProcessType::Par(a, b) if into_right => ProcessType::Par(a.clone(), Box::new(b.insert_act(&op, depth))),
        ProcessType::Par(a, b) => ProcessType::Par(Box::new(a.insert_act(&op, depth)), b.clone()),
        t => t.clone(),
    })
}

fn update_at(t: &ProcessType, path: &[ProcFrame], f: &dyn Fn(&ProcessType) -> ProcessType) -> ProcessType {
    match (path.split_first(), t) {
        (None, t) => f(t),
        (Some((ProcFrame::ParLeft, rest)), ProcessType::Par(a, b)) => {
            ProcessType::Par(Box::new(update_at(a, rest, f)), b.clone())
        }
        (Some((ProcFrame::ParRight, rest)), ProcessType::Par(a, b)) => {
            ProcessType::Par(a.clone(), Box::new(update_at(b, rest, f)))
        }
        _ => t.clone(),
    }
}

/// Whether a closed value has the given ground type.
pub fn value_has_ground_type(v: &Value, ty: &ValueType) -> bool {
    use ValueType as T;
    match (v, ty) {
        (Value::Unit, T::Unit) => true,
        (Value::Int(_), T::Base(BaseType::Int))
        | (Value::Str(_), T::Base(BaseType::Str))
        | (Value::List(_), T::Base(BaseType::List))
        | (Value::Loc(_), T::Base(BaseType::Loc))
        | (Value::Heap(_), T::Base(BaseType::Heap)) => true,
        (Value::Pair(a, b), T::Product(ta, tb)) => value_has_ground_type(a, ta) && value_has_ground_type(b, tb),
        (Value::Inl(a, r), T::Sum(ta, tb)) => r == &**tb && value_has_ground_type(a, ta),
        (Value::Inr(b, l), T::Sum(ta, tb)) => l == &**ta && value_has_ground_type(b, tb),
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// Modules

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckedDef {
    pub name: Name,
    pub value: Value,
    pub ty: ValueType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckedModule {
    pub sig: Signature,
    /// Declared annotations plus those inferred for `let rec`.
    pub env: AnnEnv,
    pub defs: Vec<CheckedDef>,
    /// `main` with every definition substituted in, and its type.
    pub main: Option<(Process, ProcessType)>,
    pub used_rules: BTreeSet<&'static str>,
}

impl CheckedModule {
    /// Definitions as a closing substitution.
    pub fn closing_subst(&self) -> Subst {
        let mut s = Subst::new();
        for d in &self.defs {
            let closed = subst_value_many(&d.value, &s);
            s.insert(d.name.clone(), closed);
        }
        s
    }

    /// Typing context with every definition.
    pub fn ctx(&self) -> Ctx {
        self.defs.iter().map(|d| (d.name.clone(), d.ty.clone())).collect()
    }

    /// Checks another process against this module's definitions and closes
    /// it.
    pub fn check_process(&mut self, p: &Process) -> Result<(Process, ProcessType)> {
        let mut checker = Checker::new(&self.sig, self.env.clone());
        let (q, t) = checker.check_process(&self.ctx(), p)?;
        self.used_rules.extend(checker.used.iter().copied());
        self.env = checker.into_env();
        Ok((subst_process_many(&q, &self.closing_subst()), t))
    }
}

/// Checks every definition in order, then `main`. Errors are reported per
/// definition in source order.
pub fn check_module(m: &SourceModule) -> std::result::Result<CheckedModule, Vec<TypeError>> {
    let mut errors = Vec::new();
    if let Err(e) = m.env.validate() {
        let mut te = TypeError::new("Annotation", "well-formed effect annotations", e);
        te.pos = Some(Pos { line: 1, col: 1 });
        errors.push(te);
        return Err(errors);
    }
    let mut checker = Checker::new(&m.sig, m.env.clone());
    let mut ctx = Ctx::new();
    let mut defs = Vec::new();
    let mut failed: BTreeSet<Name> = BTreeSet::new();
    let suppressed = |e: &TypeError, failed: &BTreeSet<Name>| {
        e.rule == "TyVal-Var" && failed.iter().any(|n| e.found == format!("unbound `{n}`"))
    };
    for d in &m.defs {
        checker.path = vec![d.name.clone()];
        let r = match &d.ascription {
            Some(t) => checker.check_value_in(&mut ctx, &d.value, t, "TyVal-Var").map(|v| (v, t.clone())),
            None => checker.infer(&mut ctx, &d.value),
        };
        match r {
            Ok((value, ty)) => {
                ctx.push((d.name.clone(), ty.clone()));
                defs.push(CheckedDef { name: d.name.clone(), value, ty });
            }
            Err(mut e) => {
                if !suppressed(&e, &failed) {
                    e.pos = Some(d.pos);
                    errors.push(e);
                }
                match &d.ascription {
                    Some(t) => ctx.push((d.name.clone(), t.clone())),
                    None => {
                        failed.insert(d.name.clone());
                    }
                }
            }
        }
    }
    let mut main = None;
    if let Some((p, pos)) = &m.main {
        checker.path = vec!["main".to_string()];
        match checker.process_in(&mut ctx, p) {
            Ok(r) => main = Some(r),
            Err(mut e) => {
                if !suppressed(&e, &failed) {
                    e.pos = Some(*pos);
                    errors.push(e);
                }
            }
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let used_rules = checker.used.clone();
    let mut out = CheckedModule { sig: m.sig.clone(), env: checker.into_env(), defs, main: None, used_rules };
    if let Some((p, t)) = main {
        out.main = Some((subst_process_many(&p, &out.closing_subst()), t));
    }
    Ok(out)
}

/// Annotation definitions introduced while checking, by name.
pub fn inferred_annotations(before: &AnnEnv, after: &AnnEnv) -> BTreeMap<String, InterruptAnn> {
    after.iter().filter(|(n, _)| !before.contains(n)).map(|(n, a)| (n.clone(), a.clone())).collect()
}
