//! An executable model of a calculus of asynchronous algebraic effects.

pub mod builtins;
pub mod effects;
pub mod parser;
pub mod process;
pub mod program;
pub mod seq;
pub mod session;
pub mod syntax;
pub mod typecheck;
pub mod types;

pub use builtins::{Prim, RuntimeError, Store};
pub use effects::{AnnEnv, EffectAnn, EffectError, InterruptAnn, SignalSet};
pub use process::{Machine, ProcRedex, ProcRule};
pub use program::{Pos, SourceModule, TopDef};
pub use seq::{Redex, Scheduler};
pub use syntax::{alpha_eq, alpha_eq_process, Computation, FunAnn, Name, Process, Value};
pub use typecheck::{check_module, Checker, CheckedModule, ProcessType, TypeError};
pub use types::{BaseType, CompType, SignalName, Signature, SignatureError, ValueType};
