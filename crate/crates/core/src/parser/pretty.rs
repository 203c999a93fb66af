//! Concrete syntax for core terms. Output parses back to an alpha-equivalent
//! term.

use std::fmt::{self, Display, Formatter, Write};

use crate::builtins::Prim;
use crate::program::SourceModule;
use crate::syntax::{Computation, LetRec, Process, Value};
use crate::types::ValueType;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn is_atomic(v: &Value) -> bool {
    match v {
        Value::Fun(..) => false,
        Value::Inl(..) | Value::Inr(..) => v.as_bool().is_some(),
        _ => true,
    }
}

/// Value in argument position.
struct Atom<'a>(&'a Value);

impl Display for Atom<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if is_atomic(self.0) {
            write!(f, "{}", self.0)
        } else {
            write!(f, "({})", self.0)
        }
    }
}

/// Function types need parentheses before a trailing `! effect`.
struct TypeBeforeEffect<'a>(&'a ValueType);

impl Display for TypeBeforeEffect<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self.0 {
            ValueType::Fun(..) => write!(f, "({})", self.0),
            t => write!(f, "{t}"),
        }
    }
}

fn comma_list(xs: &[Value]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl Display for Value {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if let Some(b) = self.as_bool() {
            return f.write_str(if b { "true" } else { "false" });
        }
        match self {
            Value::Var(x) => f.write_str(x),
            Value::Unit => f.write_str("()"),
            Value::Int(n) if *n < 0 => write!(f, "(-{})", n.unsigned_abs()),
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => f.write_str(&escape(s)),
            Value::List(xs) => {
                let items: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
                write!(f, "[{}]", items.join("; "))
            }
            Value::Pair(a, b) => write!(f, "({a}, {b})"),
            Value::Inl(v, t) => write!(f, "inl[{t}] {}", Atom(v)),
            Value::Inr(v, t) => write!(f, "inr[{t}] {}", Atom(v)),
            Value::Fun(x, t, m) => write!(f, "fun ({x} : {t}) |-> {m}"),
            Value::Fulfilled(v) => write!(f, "<<{v}>>"),
            Value::Prim(p, args) if args.is_empty() => {
                if p.is_infix() || *p == Prim::Deref {
                    write!(f, "({p})")
                } else {
                    write!(f, "{p}")
                }
            }
            Value::Prim(p, args) => write!(f, "#{p}({})", comma_list(args)),
            Value::Ref(l) => write!(f, "#ref({l})"),
            Value::Loc(l) => write!(f, "#loc({l})"),
            Value::Heap(xs) => {
                let items: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
                write!(f, "#heap[{}]", items.join("; "))
            }
        }
    }
}

fn fmt_apply(fun: &Value, arg: &Value, f: &mut Formatter<'_>) -> fmt::Result {
    if let Value::Prim(p, args) = fun {
        if *p == Prim::Deref && args.is_empty() {
            return write!(f, "!{}", Atom(arg));
        }
        if p.is_infix() && args.len() == 1 {
            return write!(f, "{} {p} {}", Atom(&args[0]), Atom(arg));
        }
        if !p.is_infix() && args.len() + 1 == p.arity() {
            write!(f, "{p}")?;
            for a in args {
                write!(f, " {}", Atom(a))?;
            }
            return write!(f, " {}", Atom(arg));
        }
        if !args.is_empty() {
            return write!(f, "#{p}({}) {}", comma_list(args), Atom(arg));
        }
        if !p.is_infix() {
            return write!(f, "#{p}() {}", Atom(arg));
        }
    }
    write!(f, "{} {}", Atom(fun), Atom(arg))
}

fn fmt_letrec(lr: &LetRec, f: &mut Formatter<'_>) -> fmt::Result {
    write!(f, "let rec {} ({} : {})", lr.f, lr.x, lr.ann.dom)?;
    if let Some(cod) = &lr.ann.cod {
        write!(f, " : {}", TypeBeforeEffect(cod))?;
        if let Some(eff) = &lr.ann.eff {
            write!(f, " ! {eff}")?;
        }
    }
    write!(f, " = {} in {}", lr.body, lr.cont)
}

impl Display for Computation {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Computation::Return(v) => write!(f, "return {}", Atom(v)),
            Computation::Let(x, m, n) => write!(f, "let {x} = {m} in {n}"),
            Computation::LetRec(lr) => fmt_letrec(lr, f),
            Computation::Apply(g, v) => fmt_apply(g, v, f),
            Computation::MatchPair(v, x, y, m) => write!(f, "match {v} with {{ ({x}, {y}) |-> {m} }}"),
            Computation::MatchEmpty(v, t) => write!(f, "match {v} with {{}} : {t}"),
            Computation::MatchSum(v, x, m, y, n) if x == "_" && y == "_" => {
                write!(f, "if {v} then {m} else ")?;
                if matches!(**n, Computation::Signal(..)) {
                    write!(f, "({n})")
                } else {
                    write!(f, "{n}")
                }
            }
            Computation::MatchSum(v, x, m, y, n) => {
                write!(f, "match {v} with {{ inl {x} |-> {m} | inr {y} |-> {n} }}")
            }
            Computation::Signal(op, v, m) => write!(f, "send {op} {}; {m}", Atom(v)),
            Computation::Interrupt(op, v, m) => write!(f, "interrupt {op} {} into {m}", Atom(v)),
            Computation::Promise(h) => {
                write!(f, "promise ({} {} |-> {}) as {} in {}", h.op, h.x, h.handler, h.p, h.cont)
            }
            Computation::Await(v, x, m) => write!(f, "await {} until <<{x}>> in {m}", Atom(v)),
        }
    }
}

fn fmt_proc_atom(p: &Process, f: &mut Formatter<'_>) -> fmt::Result {
    match p {
        Process::Par(..) => write!(f, "({p})"),
        _ => write!(f, "{p}"),
    }
}

impl Display for Process {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Process::Run(m) => write!(f, "run {m}"),
            Process::Par(a, b) => {
                write!(f, "{a} || ")?;
                fmt_proc_atom(b, f)
            }
            Process::Signal(op, v, p) => {
                write!(f, "send {op} {}; ", Atom(v))?;
                fmt_proc_atom(p, f)
            }
            Process::Interrupt(op, v, p) => {
                write!(f, "interrupt {op} {} into ", Atom(v))?;
                fmt_proc_atom(p, f)
            }
        }
    }
}

/// Source text for a whole module.
pub fn pretty_module(m: &SourceModule) -> String {
    let mut out = String::new();
    for (name, ty) in &m.aliases {
        let _ = writeln!(out, "type {name} = {ty}");
    }
    for (op, ty) in m.sig.iter() {
        let _ = writeln!(out, "signal {op} : {ty}");
    }
    for (name, body) in m.env.iter() {
        let _ = writeln!(out, "effect rec {name} = {body}");
    }
    for d in &m.defs {
        match &d.ascription {
            Some(t) => {
                let _ = writeln!(out, "let {} : {t} = {}", d.name, d.value);
            }
            None => {
                let _ = writeln!(out, "let {} = {}", d.name, d.value);
            }
        }
    }
    if let Some((p, _)) = &m.main {
        let _ = writeln!(out, "{p}");
    }
    out
}
