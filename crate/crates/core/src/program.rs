//! Whole source modules: declarations, top-level definitions and `main`.

use std::fmt;

use std::collections::BTreeMap;

use crate::effects::AnnEnv;
use crate::syntax::{Name, Process, Value};
use crate::types::{Signature, ValueType};

/// 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A top-level definition. Every definition denotes a value; recursive
/// functions are wrapped as `fun x -> let rec f x = M in f x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopDef {
    pub name: Name,
    pub value: Value,
    pub ascription: Option<ValueType>,
    pub pos: Pos,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SourceModule {
    pub sig: Signature,
    pub env: AnnEnv,
    /// Type abbreviations, already expanded in the terms.
    pub aliases: BTreeMap<String, ValueType>,
    pub defs: Vec<TopDef>,
    pub main: Option<(Process, Pos)>,
}
