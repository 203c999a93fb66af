//! Generators shared by the property tests.
//!
//! Terms are built by interpreting a proptest-generated tape of choices, so
//! shrinking the tape shrinks the term: an exhausted tape always picks the
//! simplest alternative.

#![allow(dead_code)]

use std::collections::BTreeMap;

use aeff_core::effects::{AnnEnv, EffectAnn, InterruptAnn, SignalSet};
use aeff_core::syntax::FunAnn;
use aeff_core::{Computation, Prim, Process, Signature, Value, ValueType};
use proptest::prelude::*;

pub const OPS: [&str; 3] = ["a", "b", "c"];

pub fn signature() -> Signature {
    Signature::new().with("a", ValueType::int()).with("b", ValueType::Unit).with("c", ValueType::int())
}

pub fn tape() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(any::<u8>(), 0..160)
}

pub struct Tape<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tape<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Tape { bytes, pos: 0 }
    }

    /// A number below `n`; 0 once the tape runs out.
    pub fn pick(&mut self, n: usize) -> usize {
        let b = self.bytes.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b as usize % n.max(1)
    }
}

// ---------------------------------------------------------------------------
// Terms

pub struct TermGen<'a> {
    t: Tape<'a>,
    names: usize,
    suffix: &'static str,
}

pub type Ctx = Vec<(String, ValueType)>;

fn int(n: i64) -> Value {
    Value::Int(n)
}

fn binop(p: Prim, a: Value, b: Value) -> Computation {
    Computation::Apply(Value::Prim(p, vec![a]), b)
}

impl<'a> TermGen<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        TermGen { t: Tape::new(bytes), names: 0, suffix: "" }
    }

    /// Same choices, every binder renamed: the result is alpha-equivalent.
    pub fn renamed(bytes: &'a [u8], suffix: &'static str) -> Self {
        TermGen { t: Tape::new(bytes), names: 0, suffix }
    }

    fn fixed(&self, base: &str) -> String {
        format!("{base}{}", self.suffix)
    }

    /// Binder names come from a small pool so shadowing and capture happen.
    fn name(&mut self, base: &str) -> String {
        self.names += 1;
        match self.t.pick(3) {
            0 => format!("{base}{}{}", self.names, self.suffix),
            _ => self.fixed(base),
        }
    }

    fn small_type(&mut self) -> ValueType {
        match self.t.pick(4) {
            0 => ValueType::Unit,
            1 => ValueType::int(),
            2 => ValueType::bool(),
            _ => ValueType::product(ValueType::int(), ValueType::int()),
        }
    }

    fn visible<'c>(ctx: &'c Ctx, ty: &ValueType) -> Vec<&'c str> {
        let mut out = Vec::new();
        for (i, (x, t)) in ctx.iter().enumerate() {
            let shadowed = ctx[i + 1..].iter().any(|(y, _)| y == x);
            if !shadowed && t == ty {
                out.push(x.as_str());
            }
        }
        out
    }

    pub fn value(&mut self, ty: &ValueType, ctx: &Ctx) -> Value {
        let vars = Self::visible(ctx, ty);
        if !vars.is_empty() && self.t.pick(2) == 1 {
            let i = self.t.pick(vars.len());
            return Value::var(vars[i]);
        }
        match ty {
            ValueType::Unit => Value::Unit,
            ValueType::Base(_) => int(self.t.pick(7) as i64 - 2),
            ValueType::Product(a, b) => Value::pair(self.value(a, ctx), self.value(b, ctx)),
            ValueType::Sum(..) if *ty == ValueType::bool() => Value::bool(self.t.pick(2) == 0),
            ValueType::Promise(a) => Value::fulfilled(self.value(a, ctx)),
            other => panic!("no literal of type {other}"),
        }
    }

    /// A closed computation returning `ty`; at most `depth` constructors
    /// deep.
    pub fn comp(&mut self, ty: &ValueType, ctx: &Ctx, depth: usize) -> Computation {
        if depth == 0 {
            return Computation::ret(self.value(ty, ctx));
        }
        let d = depth - 1;
        match self.t.pick(12) {
            0 => Computation::ret(self.value(ty, ctx)),
            1 => {
                let y = self.small_type();
                let x = self.name("x");
                let m = self.comp(&y, ctx, d);
                let mut inner = ctx.clone();
                inner.push((x.clone(), y));
                Computation::let_(x, m, self.comp(ty, &inner, d))
            }
            2 => {
                let op = OPS[self.t.pick(3)];
                let v = self.value(&payload(op), ctx);
                Computation::signal(op, v, self.comp(ty, ctx, d))
            }
            3 => {
                let a = self.value(&ValueType::int(), ctx);
                let b = self.value(&ValueType::int(), ctx);
                let c = self.name("c");
                let m = self.comp(ty, ctx, d);
                let n = self.comp(ty, ctx, d);
                Computation::let_(
                    c.clone(),
                    binop(Prim::Lt, a, b),
                    Computation::match_sum(Value::var(c), "_", m, "_", n),
                )
            }
            4 | 5 => {
                let op = OPS[self.t.pick(3)];
                let x = self.name("x");
                let y = if self.t.pick(2) == 0 { ValueType::Unit } else { ValueType::int() };
                let mut hctx = ctx.clone();
                hctx.push((x.clone(), payload(op)));
                let handler = self.comp(&ValueType::promise(y.clone()), &hctx, d.min(3));
                let p = self.name("p");
                let mut inner = ctx.clone();
                inner.push((p.clone(), ValueType::promise(y)));
                let cont = self.comp(ty, &inner, d);
                Computation::promise(op, x, handler, p, cont)
            }
            6 => {
                let y = if self.t.pick(2) == 0 { ValueType::Unit } else { ValueType::int() };
                let v = self.value(&ValueType::promise(y.clone()), ctx);
                let x = self.name("x");
                let mut inner = ctx.clone();
                inner.push((x.clone(), y));
                Computation::await_(v, x, self.comp(ty, &inner, d))
            }
            7 => {
                let op = OPS[self.t.pick(3)];
                let v = self.value(&payload(op), ctx);
                Computation::interrupt(op, v, self.comp(ty, ctx, d))
            }
            8 => {
                let pair = ValueType::product(ValueType::int(), ValueType::int());
                let v = self.value(&pair, ctx);
                let (x, y) = (self.name("x"), self.name("y"));
                let mut inner = ctx.clone();
                inner.push((x.clone(), ValueType::int()));
                inner.push((y.clone(), ValueType::int()));
                Computation::match_pair(v, x, y, self.comp(ty, &inner, d))
            }
            9 if *ty == ValueType::int() => {
                let p = [Prim::Add, Prim::Sub, Prim::Mul][self.t.pick(3)];
                binop(p, self.value(ty, ctx), self.value(ty, ctx))
            }
            10 => self.countdown(ty, ctx, d),
            11 => {
                let x = self.name("x");
                let mut inner = ctx.clone();
                inner.push((x.clone(), ValueType::int()));
                let body = self.comp(ty, &inner, d);
                let arg = self.value(&ValueType::int(), ctx);
                Computation::Apply(Value::fun(x, ValueType::int(), body), arg)
            }
            _ => Computation::ret(self.value(ty, ctx)),
        }
    }

    /// `let rec f n = if n < 1 then M else (side effects; f (n - 1)) in f k`
    /// with the annotation left to inference.
    fn countdown(&mut self, ty: &ValueType, ctx: &Ctx, d: usize) -> Computation {
        let f = self.name("f");
        let n = self.name("n");
        // `f` is only ever applied, so it stays out of the context.
        let mut inner = ctx.clone();
        inner.push((n.clone(), ValueType::int()));
        let base = self.comp(ty, &inner, d.min(2));
        let tick = if self.t.pick(2) == 0 {
            let op = OPS[self.t.pick(3)];
            Some((op, self.value(&payload(op), &inner)))
        } else {
            None
        };
        let (m, c) = (self.fixed("m"), self.fixed("c"));
        let recur = Computation::let_(
            m.clone(),
            binop(Prim::Sub, Value::var(n.clone()), int(1)),
            Computation::Apply(Value::var(f.clone()), Value::var(m)),
        );
        let recur = match tick {
            Some((op, v)) => Computation::signal(op, v, recur),
            None => recur,
        };
        let body = Computation::let_(
            c.clone(),
            binop(Prim::Lt, Value::var(n.clone()), int(1)),
            Computation::match_sum(Value::var(c), "_", base, "_", recur),
        );
        let k = int(self.t.pick(4) as i64);
        let ann = FunAnn { dom: ValueType::int(), cod: None, eff: None };
        Computation::letrec(f.clone(), n, ann, body, Computation::Apply(Value::var(f), k))
    }

    pub fn closed_comp(&mut self, depth: usize) -> (Computation, ValueType) {
        let ty = self.small_type();
        (self.comp(&ty, &Ctx::new(), depth), ty)
    }

    /// Two or three processes, optionally under an interrupt. Process-level
    /// signals arise by hoisting.
    pub fn process(&mut self, depth: usize) -> Process {
        let n = 2 + self.t.pick(2);
        let mut p = Process::run(self.closed_comp(depth).0);
        for _ in 1..n {
            let q = Process::run(self.closed_comp(depth).0);
            p = if self.t.pick(2) == 0 { Process::par(p, q) } else { Process::par(q, p) };
        }
        if self.t.pick(3) == 0 {
            let op = OPS[self.t.pick(3)];
            let v = self.value(&payload(op), &Ctx::new());
            p = Process::interrupt(op, v, p);
        }
        p
    }
}

pub fn payload(op: &str) -> ValueType {
    signature().payload(op).expect("generator signal").clone()
}

// ---------------------------------------------------------------------------
// Effect annotations

/// An environment with up to two guarded recursive definitions, plus
/// annotations over it.
pub struct AnnGen<'a> {
    t: Tape<'a>,
    pub env: AnnEnv,
    names: Vec<String>,
}

impl<'a> AnnGen<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        let mut g = AnnGen { t: Tape::new(bytes), env: AnnEnv::new(), names: Vec::new() };
        let defs = g.t.pick(3);
        g.names = (0..defs).map(|i| format!("r{i}")).collect();
        for name in g.names.clone() {
            // Bodies are maps, so every reference is guarded.
            let body = g.map(2);
            g.env.define(name, body).expect("guarded definition");
        }
        g
    }

    pub fn signals(&mut self) -> SignalSet {
        OPS.iter().filter(|_| self.t.pick(2) == 1).map(|s| s.to_string()).collect()
    }

    pub fn op(&mut self) -> &'static str {
        OPS[self.t.pick(3)]
    }

    fn map(&mut self, depth: usize) -> InterruptAnn {
        let mut m = BTreeMap::new();
        for op in OPS {
            if self.t.pick(2) == 1 {
                let o = self.signals();
                m.insert(op.to_string(), (o, self.interrupt(depth.saturating_sub(1))));
            }
        }
        InterruptAnn::Map(m)
    }

    /// Depth counts nested maps.
    pub fn interrupt(&mut self, depth: usize) -> InterruptAnn {
        let named = !self.names.is_empty();
        match self.t.pick(if depth == 0 { 2 } else { 4 }) {
            0 => InterruptAnn::empty(),
            1 if named => {
                let i = self.t.pick(self.names.len());
                let n = InterruptAnn::named(self.names[i].clone());
                if self.t.pick(3) == 0 {
                    n.erase(self.op())
                } else {
                    n
                }
            }
            1 => InterruptAnn::empty(),
            2 => self.map(depth),
            _ => self.interrupt(depth - 1).join(&self.interrupt(depth - 1)),
        }
    }

    pub fn effect(&mut self) -> EffectAnn {
        let o = self.signals();
        EffectAnn::new(o, self.interrupt(3))
    }

    pub fn ops(&mut self, max: usize) -> Vec<String> {
        let n = self.t.pick(max + 1);
        (0..n).map(|_| self.op().to_string()).collect()
    }
}
