//! Surface syntax, before desugaring into the core calculus.

use crate::builtins::Prim;
use crate::effects::{EffectAnn, InterruptAnn};
use crate::program::Pos;
use crate::types::{CompType, ValueType};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pat {
    Var(String),
    /// `_` and `()`: bind nothing.
    Wild,
    Pair(Box<Pat>, Box<Pat>),
}

pub type Param = (Pat, ValueType);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    Int(i64),
    Str(String),
    List(Vec<i64>),
    Unit,
    Bool(bool),
    Pair(Box<Expr>, Box<Expr>),
    /// Injection with the type of the other summand.
    Inl(ValueType, Box<Expr>),
    Inr(ValueType, Box<Expr>),
    Fulfilled(Box<Expr>),
    Fun(Vec<Param>, Box<Expr>),
    /// `#p(a, ...)`: a partially applied primitive.
    PrimVal(Prim, Vec<Expr>),
    Loc(usize),
    Heap(Vec<i64>),
    RefLoc(usize),
    App(Box<Expr>, Vec<Expr>),
    BinOp(Prim, Box<Expr>, Box<Expr>),
    Deref(Box<Expr>),
    Return(Box<Expr>),
    Let(Pat, Box<Expr>, Box<Expr>),
    LetFun(String, Vec<Param>, Box<Expr>, Box<Expr>),
    LetRec(Box<LetRecExpr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    MatchSum(Box<Expr>, Pat, Box<Expr>, Pat, Box<Expr>),
    MatchPair(Box<Expr>, Pat, Box<Expr>),
    MatchEmpty(Box<Expr>, CompType),
    Send(String, Box<Expr>),
    /// `↑op(V, M)`.
    Signal(String, Box<Expr>, Box<Expr>),
    Seq(Box<Expr>, Box<Expr>),
    Interrupt(String, Box<Expr>, Box<Expr>),
    Promise(Box<PromiseExpr>),
    Await(Box<Expr>, Pat, Box<Expr>),
    /// `process op p with (<<x>> |-> comp) as q in cont`.
    ProcessOp(Box<ProcessOpExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LetRecExpr {
    pub name: String,
    pub params: Vec<Param>,
    pub cod: Option<ValueType>,
    pub eff: Option<EffectAnn>,
    pub body: Expr,
    pub cont: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromiseExpr {
    pub op: String,
    pub pat: Pat,
    pub guard: Option<Expr>,
    pub handler: Expr,
    pub p: Pat,
    pub cont: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessOpExpr {
    pub op: String,
    pub promise: Expr,
    pub pat: Pat,
    pub comp: Expr,
    pub q: Pat,
    pub cont: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Proc {
    Run(Expr),
    Par(Box<Proc>, Box<Proc>),
    Signal(String, Expr, Box<Proc>),
    Interrupt(String, Expr, Box<Proc>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Signal(String, ValueType, Pos),
    Effect(String, InterruptAnn, Pos),
    TypeAlias(String, ValueType),
    Def { name: String, ascription: Option<ValueType>, body: Expr, pos: Pos },
    Main(Proc, Pos),
}
