//! Values, computations and processes, with capture-avoiding substitution,
//! free variables and alpha-equivalence.

use std::collections::{BTreeMap, BTreeSet};

use crate::builtins::Prim;
use crate::effects::EffectAnn;
use crate::types::{CompType, SignalName, ValueType};

pub type Name = String;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Var(Name),
    Unit,
    Int(i64),
    Str(String),
    List(Vec<i64>),
    Pair(Box<Value>, Box<Value>),
    /// Left injection; the type is the missing right summand.
    Inl(Box<Value>, ValueType),
    /// Right injection; the type is the missing left summand.
    Inr(Box<Value>, ValueType),
    Fun(Name, ValueType, Box<Computation>),
    Fulfilled(Box<Value>),
    /// Builtin applied to fewer arguments than its arity.
    Prim(Prim, Vec<Value>),
    /// Store location of a reference cell.
    Ref(usize),
    /// Location in a functional heap.
    Loc(usize),
    Heap(Vec<i64>),
}

/// Annotation of a recursive definition `f : dom -> cod ! eff`. The codomain
/// and effect are optional in source and filled in by elaboration before
/// checking.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FunAnn {
    pub dom: ValueType,
    pub cod: Option<ValueType>,
    pub eff: Option<EffectAnn>,
}

impl FunAnn {
    pub fn new(dom: ValueType, cod: ValueType, eff: EffectAnn) -> Self {
        FunAnn { dom, cod: Some(cod), eff: Some(eff) }
    }

    pub fn is_complete(&self) -> bool {
        self.cod.is_some() && self.eff.is_some()
    }

    pub fn fun_type(&self) -> Option<ValueType> {
        Some(ValueType::fun(self.dom.clone(), CompType::new(self.cod.clone()?, self.eff.clone()?)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LetRec {
    pub f: Name,
    pub x: Name,
    pub ann: FunAnn,
    pub body: Computation,
    pub cont: Computation,
}

/// `promise (op x ↦ handler) as p in cont`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PromiseHandler {
    pub op: SignalName,
    pub x: Name,
    pub handler: Computation,
    pub p: Name,
    pub cont: Computation,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Computation {
    Return(Value),
    Let(Name, Box<Computation>, Box<Computation>),
    LetRec(Box<LetRec>),
    Apply(Value, Value),
    MatchPair(Value, Name, Name, Box<Computation>),
    MatchEmpty(Value, CompType),
    MatchSum(Value, Name, Box<Computation>, Name, Box<Computation>),
    Signal(SignalName, Value, Box<Computation>),
    Interrupt(SignalName, Value, Box<Computation>),
    Promise(Box<PromiseHandler>),
    Await(Value, Name, Box<Computation>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Process {
    Run(Computation),
    Par(Box<Process>, Box<Process>),
    Signal(SignalName, Value, Box<Process>),
    Interrupt(SignalName, Value, Box<Process>),
}

impl Value {
    pub fn var(x: impl Into<Name>) -> Self {
        Value::Var(x.into())
    }

    pub fn pair(a: Value, b: Value) -> Self {
        Value::Pair(Box::new(a), Box::new(b))
    }

    pub fn inl(v: Value, right: ValueType) -> Self {
        Value::Inl(Box::new(v), right)
    }

    pub fn inr(v: Value, left: ValueType) -> Self {
        Value::Inr(Box::new(v), left)
    }

    pub fn fun(x: impl Into<Name>, ty: ValueType, body: Computation) -> Self {
        Value::Fun(x.into(), ty, Box::new(body))
    }

    pub fn fulfilled(v: Value) -> Self {
        Value::Fulfilled(Box::new(v))
    }

    pub fn bool(b: bool) -> Self {
        if b {
            Value::inl(Value::Unit, ValueType::Unit)
        } else {
            Value::inr(Value::Unit, ValueType::Unit)
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Inl(v, t) if **v == Value::Unit && *t == ValueType::Unit => Some(true),
            Value::Inr(v, t) if **v == Value::Unit && *t == ValueType::Unit => Some(false),
            _ => None,
        }
    }
}

impl Computation {
    pub fn ret(v: Value) -> Self {
        Computation::Return(v)
    }

    pub fn let_(x: impl Into<Name>, m: Computation, n: Computation) -> Self {
        Computation::Let(x.into(), Box::new(m), Box::new(n))
    }

    pub fn signal(op: impl Into<SignalName>, v: Value, m: Computation) -> Self {
        Computation::Signal(op.into(), v, Box::new(m))
    }

    pub fn interrupt(op: impl Into<SignalName>, v: Value, m: Computation) -> Self {
        Computation::Interrupt(op.into(), v, Box::new(m))
    }

    pub fn promise(
        op: impl Into<SignalName>,
        x: impl Into<Name>,
        handler: Computation,
        p: impl Into<Name>,
        cont: Computation,
    ) -> Self {
        Computation::Promise(Box::new(PromiseHandler {
            op: op.into(),
            x: x.into(),
            handler,
            p: p.into(),
            cont,
        }))
    }

    pub fn await_(v: Value, x: impl Into<Name>, m: Computation) -> Self {
        Computation::Await(v, x.into(), Box::new(m))
    }

    pub fn match_sum(v: Value, x: impl Into<Name>, m: Computation, y: impl Into<Name>, n: Computation) -> Self {
        Computation::MatchSum(v, x.into(), Box::new(m), y.into(), Box::new(n))
    }

    pub fn match_pair(v: Value, x: impl Into<Name>, y: impl Into<Name>, m: Computation) -> Self {
        Computation::MatchPair(v, x.into(), y.into(), Box::new(m))
    }

    pub fn letrec(f: impl Into<Name>, x: impl Into<Name>, ann: FunAnn, body: Computation, cont: Computation) -> Self {
        Computation::LetRec(Box::new(LetRec { f: f.into(), x: x.into(), ann, body, cont }))
    }
}

impl Process {
    pub fn run(m: Computation) -> Self {
        Process::Run(m)
    }

    pub fn par(p: Process, q: Process) -> Self {
        Process::Par(Box::new(p), Box::new(q))
    }

    pub fn signal(op: impl Into<SignalName>, v: Value, p: Process) -> Self {
        Process::Signal(op.into(), v, Box::new(p))
    }

    pub fn interrupt(op: impl Into<SignalName>, v: Value, p: Process) -> Self {
        Process::Interrupt(op.into(), v, Box::new(p))
    }

    /// Computations at the `run` leaves, left to right.
    pub fn leaves(&self) -> Vec<&Computation> {
        let mut out = Vec::new();
        fn go<'a>(p: &'a Process, out: &mut Vec<&'a Computation>) {
            match p {
                Process::Run(m) => out.push(m),
                Process::Par(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Process::Signal(_, _, p) | Process::Interrupt(_, _, p) => go(p, out),
            }
        }
        go(self, &mut out);
        out
    }
}

// ---------------------------------------------------------------------------
// Free variables

pub fn fv_value(v: &Value) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    FvCollector::default().value(v, &mut out);
    out
}

pub fn fv_comp(m: &Computation) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    FvCollector::default().comp(m, &mut out);
    out
}

pub fn fv_process(p: &Process) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    FvCollector::default().process(p, &mut out);
    out
}

#[derive(Default)]
struct FvCollector {
    bound: Vec<Name>,
}

impl FvCollector {
    fn under<F: FnOnce(&mut Self)>(&mut self, names: &[&Name], f: F) {
        let n = self.bound.len();
        self.bound.extend(names.iter().map(|s| (*s).clone()));
        f(self);
        self.bound.truncate(n);
    }

    fn value(&mut self, v: &Value, out: &mut BTreeSet<Name>) {
        match v {
            Value::Var(x) => {
                if !self.bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Value::Unit
            | Value::Int(_)
            | Value::Str(_)
            | Value::List(_)
            | Value::Ref(_)
            | Value::Loc(_)
            | Value::Heap(_) => {}
            Value::Pair(a, b) => {
                self.value(a, out);
                self.value(b, out);
            }
            Value::Inl(a, _) | Value::Inr(a, _) | Value::Fulfilled(a) => self.value(a, out),
            Value::Fun(x, _, m) => self.under(&[x], |s| s.comp(m, out)),
            Value::Prim(_, args) => args.iter().for_each(|a| self.value(a, out)),
        }
    }

    fn comp(&mut self, m: &Computation, out: &mut BTreeSet<Name>) {
        match m {
            Computation::Return(v) => self.value(v, out),
            Computation::Let(x, m, n) => {
                self.comp(m, out);
                self.under(&[x], |s| s.comp(n, out));
            }
            Computation::LetRec(r) => {
                self.under(&[&r.f, &r.x], |s| s.comp(&r.body, out));
                self.under(&[&r.f], |s| s.comp(&r.cont, out));
            }
            Computation::Apply(v, w) => {
                self.value(v, out);
                self.value(w, out);
            }
            Computation::MatchPair(v, x, y, m) => {
                self.value(v, out);
                self.under(&[x, y], |s| s.comp(m, out));
            }
            Computation::MatchEmpty(v, _) => self.value(v, out),
            Computation::MatchSum(v, x, m, y, n) => {
                self.value(v, out);
                self.under(&[x], |s| s.comp(m, out));
                self.under(&[y], |s| s.comp(n, out));
            }
            Computation::Signal(_, v, m) | Computation::Interrupt(_, v, m) => {
                self.value(v, out);
                self.comp(m, out);
            }
            Computation::Promise(h) => {
                self.under(&[&h.x], |s| s.comp(&h.handler, out));
                self.under(&[&h.p], |s| s.comp(&h.cont, out));
            }
            Computation::Await(v, x, m) => {
                self.value(v, out);
                self.under(&[x], |s| s.comp(m, out));
            }
        }
    }

    fn process(&mut self, p: &Process, out: &mut BTreeSet<Name>) {
        match p {
            Process::Run(m) => self.comp(m, out),
            Process::Par(a, b) => {
                self.process(a, out);
                self.process(b, out);
            }
            Process::Signal(_, v, p) | Process::Interrupt(_, v, p) => {
                self.value(v, out);
                self.process(p, out);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Substitution

/// `base_k` for the least `k` such that the name is not in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<Name>) -> Name {
    let stem = match base.rsplit_once('_') {
        Some((s, k)) if !s.is_empty() && k.chars().all(|c| c.is_ascii_digit()) && !k.is_empty() => s,
        _ => base,
    };
    (1..)
        .map(|k| format!("{stem}_{k}"))
        .find(|n| !avoid.contains(n))
        .expect("unbounded supply of names")
}

pub type Subst = BTreeMap<Name, Value>;

/// `M[V/x]`.
pub fn subst_comp(m: &Computation, v: &Value, x: &str) -> Computation {
    let mut s = Subst::new();
    s.insert(x.to_string(), v.clone());
    subst_comp_many(m, &s)
}

pub fn subst_value(w: &Value, v: &Value, x: &str) -> Value {
    let mut s = Subst::new();
    s.insert(x.to_string(), v.clone());
    Substituter::new(&s).value(w, &s)
}

/// Simultaneous substitution.
pub fn subst_comp_many(m: &Computation, s: &Subst) -> Computation {
    if s.is_empty() {
        return m.clone();
    }
    Substituter::new(s).comp(m, s)
}

pub fn subst_value_many(w: &Value, s: &Subst) -> Value {
    if s.is_empty() {
        return w.clone();
    }
    Substituter::new(s).value(w, s)
}

/// Simultaneous substitution into every `run` leaf and payload.
pub fn subst_process_many(p: &Process, s: &Subst) -> Process {
    if s.is_empty() {
        return p.clone();
    }
    let mut sub = Substituter::new(s);
    sub.process(p, s)
}

struct Substituter {
    /// Free variables of the substituted values; binders in this set get
    /// renamed.
    range_fv: BTreeSet<Name>,
}

impl Substituter {
    fn new(s: &Subst) -> Self {
        let mut range_fv = BTreeSet::new();
        for v in s.values() {
            range_fv.extend(fv_value(v));
        }
        Substituter { range_fv }
    }

    /// Enters the scope of `binders` over `bodies`: drops shadowed entries
    /// and renames binders that would capture.
    fn bind(&mut self, binders: &[&Name], bodies: &[&Computation], s: &Subst) -> (Vec<Name>, Subst) {
        let mut inner = s.clone();
        for b in binders {
            inner.remove(*b);
        }
        let mut names = Vec::with_capacity(binders.len());
        let mut avoid: Option<BTreeSet<Name>> = None;
        for b in binders {
            if inner.is_empty() || !self.range_fv.contains(*b) {
                names.push((*b).clone());
                continue;
            }
            let avoid = avoid.get_or_insert_with(|| {
                let mut a = self.range_fv.clone();
                for body in bodies {
                    a.extend(fv_comp(body));
                }
                a.extend(binders.iter().map(|b| (*b).clone()));
                a.extend(inner.keys().cloned());
                a
            });
            let fresh = fresh_name(b, avoid);
            avoid.insert(fresh.clone());
            inner.insert((*b).clone(), Value::Var(fresh.clone()));
            self.range_fv.insert(fresh.clone());
            names.push(fresh);
        }
        (names, inner)
    }

    fn value(&mut self, v: &Value, s: &Subst) -> Value {
        match v {
            Value::Var(x) => s.get(x).cloned().unwrap_or_else(|| v.clone()),
            Value::Unit
            | Value::Int(_)
            | Value::Str(_)
            | Value::List(_)
            | Value::Ref(_)
            | Value::Loc(_)
            | Value::Heap(_) => v.clone(),
            Value::Pair(a, b) => Value::pair(self.value(a, s), self.value(b, s)),
            Value::Inl(a, t) => Value::Inl(Box::new(self.value(a, s)), t.clone()),
            Value::Inr(a, t) => Value::Inr(Box::new(self.value(a, s)), t.clone()),
            Value::Fulfilled(a) => Value::fulfilled(self.value(a, s)),
            Value::Fun(x, t, m) => {
                let (xs, inner) = self.bind(&[x], &[m], s);
                Value::Fun(xs[0].clone(), t.clone(), Box::new(self.comp(m, &inner)))
            }
            Value::Prim(p, args) => Value::Prim(*p, args.iter().map(|a| self.value(a, s)).collect()),
        }
    }

    fn process(&mut self, p: &Process, s: &Subst) -> Process {
        match p {
            Process::Run(m) => Process::Run(self.comp(m, s)),
            Process::Par(a, b) => Process::Par(Box::new(self.process(a, s)), Box::new(self.process(b, s))),
            Process::Signal(op, v, q) => Process::Signal(op.clone(), self.value(v, s), Box::new(self.process(q, s))),
            Process::Interrupt(op, v, q) => {
                Process::Interrupt(op.clone(), self.value(v, s), Box::new(self.process(q, s)))
            }
        }
    }

    fn comp(&mut self, m: &Computation, s: &Subst) -> Computation {
        if s.is_empty() {
            return m.clone();
        }
        match m {
            Computation::Return(v) => Computation::Return(self.value(v, s)),
            Computation::Let(x, m1, n) => {
                let m1 = self.comp(m1, s);
                let (xs, inner) = self.bind(&[x], &[n], s);
                Computation::Let(xs[0].clone(), Box::new(m1), Box::new(self.comp(n, &inner)))
            }
            Computation::LetRec(r) => {
                // `f` scopes body and continuation, `x` only the body
                let (fs, inner_f) = self.bind(&[&r.f], &[&r.body, &r.cont], s);
                let cont = self.comp(&r.cont, &inner_f);
                let (xs, inner_fx) = self.bind(&[&r.x], &[&r.body], &inner_f);
                let body = self.comp(&r.body, &inner_fx);
                Computation::LetRec(Box::new(LetRec {
                    f: fs[0].clone(),
                    x: xs[0].clone(),
                    ann: r.ann.clone(),
                    body,
                    cont,
                }))
            }
            Computation::Apply(v, w) => Computation::Apply(self.value(v, s), self.value(w, s)),
            Computation::MatchPair(v, x, y, body) => {
                let v = self.value(v, s);
                let (xy, inner) = self.bind(&[x, y], &[body], s);
                Computation::MatchPair(v, xy[0].clone(), xy[1].clone(), Box::new(self.comp(body, &inner)))
            }
            Computation::MatchEmpty(v, t) => Computation::MatchEmpty(self.value(v, s), t.clone()),
            Computation::MatchSum(v, x, m1, y, n) => {
                let v = self.value(v, s);
                let (xs, inner_l) = self.bind(&[x], &[m1], s);
                let m1 = self.comp(m1, &inner_l);
                let (ys, inner_r) = self.bind(&[y], &[n], s);
                let n = self.comp(n, &inner_r);
                Computation::MatchSum(v, xs[0].clone(), Box::new(m1), ys[0].clone(), Box::new(n))
            }
            Computation::Signal(op, v, k) => Computation::Signal(op.clone(), self.value(v, s), Box::new(self.comp(k, s))),
            Computation::Interrupt(op, v, k) => {
                Computation::Interrupt(op.clone(), self.value(v, s), Box::new(self.comp(k, s)))
            }
            Computation::Promise(h) => {
                let (xs, inner_h) = self.bind(&[&h.x], &[&h.handler], s);
                let handler = self.comp(&h.handler, &inner_h);
                let (ps, inner_c) = self.bind(&[&h.p], &[&h.cont], s);
                let cont = self.comp(&h.cont, &inner_c);
                Computation::Promise(Box::new(PromiseHandler {
                    op: h.op.clone(),
                    x: xs[0].clone(),
                    handler,
                    p: ps[0].clone(),
                    cont,
                }))
            }
            Computation::Await(v, x, k) => {
                let v = self.value(v, s);
                let (xs, inner) = self.bind(&[x], &[k], s);
                Computation::Await(v, xs[0].clone(), Box::new(self.comp(k, &inner)))
            }
        }
    }
}

/// Renames the binder `from` of a term whose scope is `body` so that it
/// avoids `avoid`; returns the new binder and body.
pub fn rename_binder(from: &Name, body: &Computation, avoid: &BTreeSet<Name>) -> (Name, Computation) {
    if !avoid.contains(from) {
        return (from.clone(), body.clone());
    }
    let mut all = avoid.clone();
    all.extend(fv_comp(body));
    let fresh = fresh_name(from, &all);
    let body = subst_comp(body, &Value::Var(fresh.clone()), from);
    (fresh, body)
}

// ---------------------------------------------------------------------------
// Alpha-equivalence

/// Bound-variable environments for the two sides, innermost last.
#[derive(Default)]
struct AlphaEnv {
    left: Vec<Name>,
    right: Vec<Name>,
}

impl AlphaEnv {
    fn var_eq(&self, a: &Name, b: &Name) -> bool {
        let ia = self.left.iter().rposition(|n| n == a);
        let ib = self.right.iter().rposition(|n| n == b);
        match (ia, ib) {
            (Some(i), Some(j)) => i == j,
            (None, None) => a == b,
            _ => false,
        }
    }

    fn under<F: FnOnce(&mut Self) -> bool>(&mut self, pairs: &[(&Name, &Name)], f: F) -> bool {
        let n = self.left.len();
        for (a, b) in pairs {
            self.left.push((*a).clone());
            self.right.push((*b).clone());
        }
        let r = f(self);
        self.left.truncate(n);
        self.right.truncate(n);
        r
    }

    fn value(&mut self, a: &Value, b: &Value) -> bool {
        match (a, b) {
            (Value::Var(x), Value::Var(y)) => self.var_eq(x, y),
            (Value::Pair(a1, a2), Value::Pair(b1, b2)) => self.value(a1, b1) && self.value(a2, b2),
            (Value::Inl(a, t), Value::Inl(b, u)) | (Value::Inr(a, t), Value::Inr(b, u)) => t == u && self.value(a, b),
            (Value::Fulfilled(a), Value::Fulfilled(b)) => self.value(a, b),
            (Value::Fun(x, t, m), Value::Fun(y, u, n)) => t == u && self.under(&[(x, y)], |e| e.comp(m, n)),
            (Value::Prim(p, xs), Value::Prim(q, ys)) => {
                p == q && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.value(x, y))
            }
            (Value::Var(_), _) | (_, Value::Var(_)) => false,
            _ => a == b,
        }
    }

    fn comp(&mut self, a: &Computation, b: &Computation) -> bool {
        use Computation as C;
        match (a, b) {
            (C::Return(v), C::Return(w)) => self.value(v, w),
            (C::Let(x, m1, n1), C::Let(y, m2, n2)) => self.comp(m1, m2) && self.under(&[(x, y)], |e| e.comp(n1, n2)),
            (C::LetRec(r), C::LetRec(s)) => {
                r.ann == s.ann
                    && self.under(&[(&r.f, &s.f), (&r.x, &s.x)], |e| e.comp(&r.body, &s.body))
                    && self.under(&[(&r.f, &s.f)], |e| e.comp(&r.cont, &s.cont))
            }
            (C::Apply(v1, w1), C::Apply(v2, w2)) => self.value(v1, v2) && self.value(w1, w2),
            (C::MatchPair(v, x1, y1, m), C::MatchPair(w, x2, y2, n)) => {
                self.value(v, w) && self.under(&[(x1, x2), (y1, y2)], |e| e.comp(m, n))
            }
            (C::MatchEmpty(v, t), C::MatchEmpty(w, u)) => t == u && self.value(v, w),
            (C::MatchSum(v, x1, m1, y1, n1), C::MatchSum(w, x2, m2, y2, n2)) => {
                self.value(v, w)
                    && self.under(&[(x1, x2)], |e| e.comp(m1, m2))
                    && self.under(&[(y1, y2)], |e| e.comp(n1, n2))
            }
            (C::Signal(o1, v, m), C::Signal(o2, w, n)) | (C::Interrupt(o1, v, m), C::Interrupt(o2, w, n)) => {
                o1 == o2 && self.value(v, w) && self.comp(m, n)
            }
            (C::Promise(h), C::Promise(k)) => {
                h.op == k.op
                    && self.under(&[(&h.x, &k.x)], |e| e.comp(&h.handler, &k.handler))
                    && self.under(&[(&h.p, &k.p)], |e| e.comp(&h.cont, &k.cont))
            }
            (C::Await(v, x, m), C::Await(w, y, n)) => self.value(v, w) && self.under(&[(x, y)], |e| e.comp(m, n)),
            _ => false,
        }
    }

    fn process(&mut self, a: &Process, b: &Process) -> bool {
        match (a, b) {
            (Process::Run(m), Process::Run(n)) => self.comp(m, n),
            (Process::Par(a1, a2), Process::Par(b1, b2)) => self.process(a1, b1) && self.process(a2, b2),
            (Process::Signal(o1, v, p), Process::Signal(o2, w, q))
            | (Process::Interrupt(o1, v, p), Process::Interrupt(o2, w, q)) => {
                o1 == o2 && self.value(v, w) && self.process(p, q)
            }
            _ => false,
        }
    }
}

pub fn alpha_eq_value(a: &Value, b: &Value) -> bool {
    AlphaEnv::default().value(a, b)
}

pub fn alpha_eq(a: &Computation, b: &Computation) -> bool {
    AlphaEnv::default().comp(a, b)
}

pub fn alpha_eq_process(a: &Process, b: &Process) -> bool {
    AlphaEnv::default().process(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ret_var(x: &str) -> Computation {
        Computation::Return(Value::var(x))
    }

    #[test]
    fn subst_replaces_free_occurrence() {
        let m = subst_comp(&ret_var("x"), &Value::fulfilled(Value::Unit), "x");
        assert_eq!(m, Computation::Return(Value::fulfilled(Value::Unit)));
    }

    #[test]
    fn subst_freshens_capturing_binder() {
        let m = Computation::Return(Value::fun("y", ValueType::Unit, ret_var("x")));
        let out = subst_comp(&m, &Value::var("y"), "x");
        let Computation::Return(Value::Fun(binder, _, body)) = &out else { panic!("{out:?}") };
        assert_ne!(binder, "y");
        assert_eq!(**body, ret_var("y"));
        // oracle: y stays free, the binder does not capture it
        assert_eq!(fv_comp(&out), BTreeSet::from(["y".to_string()]));
        let expected = Computation::Return(Value::fun("z", ValueType::Unit, ret_var("y")));
        assert!(alpha_eq(&out, &expected));
    }

    #[test]
    fn subst_under_promise_and_await() {
        let m = Computation::promise(
            "op",
            "z",
            Computation::Return(Value::fulfilled(Value::var("z"))),
            "p",
            Computation::await_(Value::var("p"), "w", ret_var("x")),
        );
        let expected = Computation::promise(
            "op",
            "z",
            Computation::Return(Value::fulfilled(Value::var("z"))),
            "p",
            Computation::await_(Value::var("p"), "w", Computation::Return(Value::Unit)),
        );
        assert_eq!(subst_comp(&m, &Value::Unit, "x"), expected);
    }

    #[test]
    fn free_variables() {
        assert_eq!(fv_comp(&ret_var("x")), BTreeSet::from(["x".to_string()]));
        assert!(fv_value(&Value::fun("x", ValueType::Unit, ret_var("x"))).is_empty());
        let m = Computation::promise("op", "x", Computation::Return(Value::fulfilled(Value::var("x"))), "p", ret_var("p"));
        assert!(fv_comp(&m).is_empty());
    }

    #[test]
    fn alpha_equivalence() {
        let a = Value::fun("x", ValueType::Unit, ret_var("x"));
        let b = Value::fun("y", ValueType::Unit, ret_var("y"));
        assert!(alpha_eq_value(&a, &b));
        assert!(!alpha_eq(&ret_var("x"), &ret_var("y")));
        // a bound and a free variable with the same name differ
        let c = Value::fun("y", ValueType::Unit, ret_var("x"));
        assert!(!alpha_eq_value(&a, &c));
    }

    #[test]
    fn letrec_substitution_respects_scopes() {
        // x is bound in the body but free in the continuation
        let ann = FunAnn { dom: ValueType::Unit, cod: Some(ValueType::Unit), eff: None };
        let m = Computation::letrec("f", "x", ann.clone(), ret_var("x"), ret_var("x"));
        let out = subst_comp(&m, &Value::Unit, "x");
        let expected = Computation::letrec("f", "x", ann, ret_var("x"), Computation::Return(Value::Unit));
        assert_eq!(out, expected);
    }

    #[test]
    fn fresh_names_strip_numeric_suffix() {
        let avoid = BTreeSet::from(["y_1".to_string()]);
        assert_eq!(fresh_name("y", &avoid), "y_2");
        assert_eq!(fresh_name("y_1", &avoid), "y_2");
    }
}
