//! Builtin primitives: integers, booleans, strings, integer lists, reference
//! cells and a functional heap.
//!
//! A primitive applied to all of its arguments reduces by a `delta` step to
//! a computation. Higher-order primitives (`map`, `filter`, `fold`) unfold
//! one list element at a time so that effects of the function argument go
//! through the ordinary reduction rules.

use std::fmt;

use crate::effects::EffectAnn;
use crate::syntax::{Computation, Value};
use crate::types::{BaseType, CompType, ValueType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prim {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Neq,
    Lt,
    Gt,
    Le,
    Ge,
    And,
    Or,
    Not,
    Concat,
    ToString,
    Cons,
    Append,
    Length,
    Nth,
    Range,
    Map,
    Filter,
    Fold,
    RefNew,
    Deref,
    Assign,
    EmptyHeap,
    AllocHeap,
    LookupHeap,
    UpdateHeap,
}

pub const ALL_PRIMS: [Prim; 31] = [
    Prim::Add,
    Prim::Sub,
    Prim::Mul,
    Prim::Div,
    Prim::Mod,
    Prim::Eq,
    Prim::Neq,
    Prim::Lt,
    Prim::Gt,
    Prim::Le,
    Prim::Ge,
    Prim::And,
    Prim::Or,
    Prim::Not,
    Prim::Concat,
    Prim::ToString,
    Prim::Cons,
    Prim::Append,
    Prim::Length,
    Prim::Nth,
    Prim::Range,
    Prim::Map,
    Prim::Filter,
    Prim::Fold,
    Prim::RefNew,
    Prim::Deref,
    Prim::Assign,
    Prim::EmptyHeap,
    Prim::AllocHeap,
    Prim::LookupHeap,
    Prim::UpdateHeap,
];

impl Prim {
    pub fn name(self) -> &'static str {
        match self {
            Prim::Add => "+",
            Prim::Sub => "-",
            Prim::Mul => "*",
            Prim::Div => "/",
            Prim::Mod => "mod",
            Prim::Eq => "=",
            Prim::Neq => "<>",
            Prim::Lt => "<",
            Prim::Gt => ">",
            Prim::Le => "<=",
            Prim::Ge => ">=",
            Prim::And => "&&",
            Prim::Or => "or",
            Prim::Not => "not",
            Prim::Concat => "^",
            Prim::ToString => "toString",
            Prim::Cons => "::",
            Prim::Append => "@",
            Prim::Length => "length",
            Prim::Nth => "nth",
            Prim::Range => "range",
            Prim::Map => "map",
            Prim::Filter => "filter",
            Prim::Fold => "fold",
            Prim::RefNew => "ref",
            Prim::Deref => "!",
            Prim::Assign => ":=",
            Prim::EmptyHeap => "emptyHeap",
            Prim::AllocHeap => "allocHeap",
            Prim::LookupHeap => "lookupHeap",
            Prim::UpdateHeap => "updateHeap",
        }
    }

    pub fn from_name(name: &str) -> Option<Prim> {
        ALL_PRIMS.iter().copied().find(|p| p.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Prim::Not
            | Prim::ToString
            | Prim::Length
            | Prim::RefNew
            | Prim::Deref
            | Prim::EmptyHeap => 1,
            Prim::Fold | Prim::UpdateHeap => 3,
            _ => 2,
        }
    }

    /// Infix operators print between their two arguments.
    pub fn is_infix(self) -> bool {
        matches!(
            self,
            Prim::Add
                | Prim::Sub
                | Prim::Mul
                | Prim::Div
                | Prim::Mod
                | Prim::Eq
                | Prim::Neq
                | Prim::Lt
                | Prim::Gt
                | Prim::Le
                | Prim::Ge
                | Prim::And
                | Prim::Or
                | Prim::Concat
                | Prim::Cons
                | Prim::Append
                | Prim::Assign
        )
    }

    /// Store primitives are untracked by effect annotations.
    pub fn touches_store(self) -> bool {
        matches!(self, Prim::RefNew | Prim::Deref | Prim::Assign)
    }
}

impl fmt::Display for Prim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameter and result types of a primitive, instantiated by the type of
/// its first argument where it is polymorphic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimSig {
    pub params: Vec<ValueType>,
    pub result: ValueType,
    pub effect: EffectAnn,
}

impl PrimSig {
    fn pure(params: Vec<ValueType>, result: ValueType) -> Self {
        PrimSig { params, result, effect: EffectAnn::empty() }
    }

    /// Curried type of the primitive after `applied` arguments.
    pub fn remaining_type(&self, applied: usize) -> ValueType {
        let mut ty = self.result.clone();
        let mut eff = self.effect.clone();
        for p in self.params[applied..].iter().rev() {
            ty = ValueType::fun(p.clone(), CompType::new(ty, eff));
            eff = EffectAnn::empty();
        }
        ty
    }
}

pub fn prim_sig(p: Prim, first: Option<&ValueType>) -> Result<PrimSig, String> {
    use ValueType as T;
    let int = T::int;
    let list = T::list;
    let heap = || T::Base(BaseType::Heap);
    let loc = || T::Base(BaseType::Loc);
    let need_first = || first.cloned().ok_or_else(|| format!("cannot infer the type of `{p}` without an argument"));
    Ok(match p {
        Prim::Add | Prim::Sub | Prim::Mul | Prim::Div | Prim::Mod => PrimSig::pure(vec![int(), int()], int()),
        Prim::Lt | Prim::Gt | Prim::Le | Prim::Ge => PrimSig::pure(vec![int(), int()], T::bool()),
        Prim::Eq | Prim::Neq => {
            let t = need_first()?;
            if !t.is_ground() {
                return Err(format!("`{p}` compares ground values only, found {t}"));
            }
            PrimSig::pure(vec![t.clone(), t], T::bool())
        }
        Prim::And | Prim::Or => PrimSig::pure(vec![T::bool(), T::bool()], T::bool()),
        Prim::Not => PrimSig::pure(vec![T::bool()], T::bool()),
        Prim::Concat => PrimSig::pure(vec![T::string(), T::string()], T::string()),
        Prim::ToString => PrimSig::pure(vec![int()], T::string()),
        Prim::Cons => PrimSig::pure(vec![int(), list()], list()),
        Prim::Append => PrimSig::pure(vec![list(), list()], list()),
        Prim::Length => PrimSig::pure(vec![list()], int()),
        Prim::Nth => PrimSig::pure(vec![list(), int()], int()),
        Prim::Range => PrimSig::pure(vec![int(), int()], list()),
        Prim::Map | Prim::Filter => {
            let f = need_first()?;
            let want = if p == Prim::Map { int() } else { T::bool() };
            match &f {
                T::Fun(dom, cod) if **dom == int() && cod.result == want => {
                    let effect = cod.effect.clone();
                    PrimSig { params: vec![f.clone(), list()], result: list(), effect }
                }
                _ => return Err(format!("`{p}` expects a function int -> {want}, found {f}")),
            }
        }
        Prim::Fold => {
            let f = need_first()?;
            let shape = || format!("`fold` expects a function A -> int -> A, found {f}");
            let T::Fun(acc, outer) = &f else { return Err(shape()) };
            let T::Fun(elem, inner) = &outer.result else { return Err(shape()) };
            if **elem != int() || inner.result != **acc {
                return Err(shape());
            }
            PrimSig {
                params: vec![f.clone(), (**acc).clone(), list()],
                result: (**acc).clone(),
                effect: outer.effect.join(&inner.effect),
            }
        }
        Prim::RefNew => {
            let t = need_first()?;
            PrimSig::pure(vec![t.clone()], T::Ref(Box::new(t)))
        }
        Prim::Deref => match need_first()? {
            T::Ref(t) => PrimSig::pure(vec![T::Ref(t.clone())], *t),
            t => return Err(format!("`!` expects a reference, found {t}")),
        },
        Prim::Assign => match need_first()? {
            T::Ref(t) => PrimSig::pure(vec![T::Ref(t.clone()), *t], T::Unit),
            t => return Err(format!("`:=` expects a reference, found {t}")),
        },
        Prim::EmptyHeap => PrimSig::pure(vec![T::Unit], heap()),
        Prim::AllocHeap => PrimSig::pure(vec![heap(), int()], T::product(heap(), loc())),
        Prim::LookupHeap => PrimSig::pure(vec![heap(), loc()], int()),
        Prim::UpdateHeap => PrimSig::pure(vec![heap(), loc(), int()], heap()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("list index {0} out of range")]
    IndexOutOfRange(i64),
    #[error("heap location {0} is not allocated")]
    AbsentLocation(usize),
    #[error("dangling reference {0}")]
    DanglingRef(usize),
    #[error("`{0}` applied to ill-typed arguments")]
    BadArguments(Prim),
}

/// Reference cells, allocated densely.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Store {
    cells: Vec<Value>,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alloc(&mut self, v: Value) -> usize {
        self.cells.push(v);
        self.cells.len() - 1
    }

    pub fn get(&self, l: usize) -> Option<&Value> {
        self.cells.get(l)
    }

    pub fn set(&mut self, l: usize, v: Value) -> Result<(), RuntimeError> {
        let cell = self.cells.get_mut(l).ok_or(RuntimeError::DanglingRef(l))?;
        *cell = v;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

fn apply(f: Value, x: Value) -> Computation {
    Computation::Apply(f, x)
}

fn app2(p: Prim, a: Value, b: Value) -> Computation {
    Computation::Apply(Value::Prim(p, vec![a]), b)
}

fn v(x: &str) -> Value {
    Value::var(x)
}

/// Reduces a saturated primitive application.
pub fn delta(p: Prim, args: &[Value], store: &mut Store) -> Result<Computation, RuntimeError> {
    use Value as V;
    let bad = || RuntimeError::BadArguments(p);
    let ret = Computation::Return;
    let int_pair = || match args {
        [V::Int(a), V::Int(b)] => Ok((*a, *b)),
        _ => Err(bad()),
    };
    let bool_arg = |i: usize| args.get(i).and_then(Value::as_bool).ok_or_else(bad);
    Ok(match p {
        Prim::Add => {
            let (a, b) = int_pair()?;
            ret(V::Int(a.wrapping_add(b)))
        }
        Prim::Sub => {
            let (a, b) = int_pair()?;
            ret(V::Int(a.wrapping_sub(b)))
        }
        Prim::Mul => {
            let (a, b) = int_pair()?;
            ret(V::Int(a.wrapping_mul(b)))
        }
        Prim::Div => {
            let (a, b) = int_pair()?;
            if b == 0 {
                return Err(RuntimeError::DivisionByZero);
            }
            ret(V::Int(a.wrapping_div(b)))
        }
        Prim::Mod => {
            let (a, b) = int_pair()?;
            if b == 0 {
                return Err(RuntimeError::DivisionByZero);
            }
            ret(V::Int(a.rem_euclid(b)))
        }
        Prim::Lt | Prim::Gt | Prim::Le | Prim::Ge => {
            let (a, b) = int_pair()?;
            let r = match p {
                Prim::Lt => a < b,
                Prim::Gt => a > b,
                Prim::Le => a <= b,
                _ => a >= b,
            };
            ret(V::bool(r))
        }
        Prim::Eq | Prim::Neq => {
            let [a, b] = args else { return Err(bad()) };
            let eq = a == b;
            ret(V::bool(if p == Prim::Eq { eq } else { !eq }))
        }
        Prim::And => ret(V::bool(bool_arg(0)? && bool_arg(1)?)),
        Prim::Or => ret(V::bool(bool_arg(0)? || bool_arg(1)?)),
        Prim::Not => ret(V::bool(!bool_arg(0)?)),
        Prim::Concat => match args {
            [V::Str(a), V::Str(b)] => ret(V::Str(format!("{a}{b}"))),
            _ => return Err(bad()),
        },
        Prim::ToString => match args {
            [V::Int(a)] => ret(V::Str(a.to_string())),
            _ => return Err(bad()),
        },
        Prim::Cons => match args {
            [V::Int(x), V::List(xs)] => {
                let mut out = Vec::with_capacity(xs.len() + 1);
                out.push(*x);
                out.extend_from_slice(xs);
                ret(V::List(out))
            }
            _ => return Err(bad()),
        },
        Prim::Append => match args {
            [V::List(a), V::List(b)] => ret(V::List(a.iter().chain(b).copied().collect())),
            _ => return Err(bad()),
        },
        Prim::Length => match args {
            [V::List(a)] => ret(V::Int(a.len() as i64)),
            _ => return Err(bad()),
        },
        Prim::Nth => match args {
            [V::List(a), V::Int(i)] => {
                let x = usize::try_from(*i).ok().and_then(|i| a.get(i)).ok_or(RuntimeError::IndexOutOfRange(*i))?;
                ret(V::Int(*x))
            }
            _ => return Err(bad()),
        },
        Prim::Range => {
            let (a, b) = int_pair()?;
            ret(V::List((a..=b).collect()))
        }
        Prim::Map => match args {
            [f, V::List(xs)] => match xs.split_first() {
                None => ret(V::List(vec![])),
                Some((x, rest)) => Computation::let_(
                    "$y",
                    apply(f.clone(), V::Int(*x)),
                    Computation::let_(
                        "$ys",
                        app2(Prim::Map, f.clone(), V::List(rest.to_vec())),
                        app2(Prim::Cons, v("$y"), v("$ys")),
                    ),
                ),
            },
            _ => return Err(bad()),
        },
        Prim::Filter => match args {
            [f, V::List(xs)] => match xs.split_first() {
                None => ret(V::List(vec![])),
                Some((x, rest)) => Computation::let_(
                    "$keep",
                    apply(f.clone(), V::Int(*x)),
                    Computation::let_(
                        "$rest",
                        app2(Prim::Filter, f.clone(), V::List(rest.to_vec())),
                        Computation::match_sum(
                            v("$keep"),
                            "$t",
                            app2(Prim::Cons, V::Int(*x), v("$rest")),
                            "$f",
                            ret(v("$rest")),
                        ),
                    ),
                ),
            },
            _ => return Err(bad()),
        },
        Prim::Fold => match args {
            [f, acc, V::List(xs)] => match xs.split_first() {
                None => ret(acc.clone()),
                Some((x, rest)) => Computation::let_(
                    "$g",
                    apply(f.clone(), acc.clone()),
                    Computation::let_(
                        "$acc",
                        apply(v("$g"), V::Int(*x)),
                        Computation::Apply(
                            V::Prim(Prim::Fold, vec![f.clone(), v("$acc")]),
                            V::List(rest.to_vec()),
                        ),
                    ),
                ),
            },
            _ => return Err(bad()),
        },
        Prim::RefNew => {
            let [x] = args else { return Err(bad()) };
            ret(V::Ref(store.alloc(x.clone())))
        }
        Prim::Deref => match args {
            [V::Ref(l)] => ret(store.get(*l).cloned().ok_or(RuntimeError::DanglingRef(*l))?),
            _ => return Err(bad()),
        },
        Prim::Assign => match args {
            [V::Ref(l), x] => {
                store.set(*l, x.clone())?;
                ret(V::Unit)
            }
            _ => return Err(bad()),
        },
        Prim::EmptyHeap => ret(V::Heap(vec![])),
        Prim::AllocHeap => match args {
            [V::Heap(h), V::Int(x)] => {
                let mut h = h.clone();
                h.push(*x);
                let l = h.len() - 1;
                ret(V::pair(V::Heap(h), V::Loc(l)))
            }
            _ => return Err(bad()),
        },
        Prim::LookupHeap => match args {
            [V::Heap(h), V::Loc(l)] => ret(V::Int(*h.get(*l).ok_or(RuntimeError::AbsentLocation(*l))?)),
            _ => return Err(bad()),
        },
        Prim::UpdateHeap => match args {
            [V::Heap(h), V::Loc(l), V::Int(x)] => {
                let mut h = h.clone();
                *h.get_mut(*l).ok_or(RuntimeError::AbsentLocation(*l))? = *x;
                ret(V::Heap(h))
            }
            _ => return Err(bad()),
        },
    })
}
