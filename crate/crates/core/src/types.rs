//! Value, computation and process types, and the signal signature.

use std::collections::BTreeMap;
use std::fmt;

use crate::effects::EffectAnn;

pub type SignalName = String;

/// Named base types. `loc` and `heap` back the functional heap of the
/// runner examples; lists are lists of integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseType {
    Int,
    Str,
    List,
    Loc,
    Heap,
}

impl BaseType {
    pub fn name(self) -> &'static str {
        match self {
            BaseType::Int => "int",
            BaseType::Str => "string",
            BaseType::List => "list",
            BaseType::Loc => "loc",
            BaseType::Heap => "heap",
        }
    }

    pub fn from_name(name: &str) -> Option<BaseType> {
        Some(match name {
            "int" => BaseType::Int,
            "string" => BaseType::Str,
            "list" => BaseType::List,
            "loc" => BaseType::Loc,
            "heap" => BaseType::Heap,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueType {
    Base(BaseType),
    Unit,
    Empty,
    Product(Box<ValueType>, Box<ValueType>),
    Sum(Box<ValueType>, Box<ValueType>),
    Fun(Box<ValueType>, Box<CompType>),
    Promise(Box<ValueType>),
    /// Mutable reference cell. Untracked extension used by the examples.
    Ref(Box<ValueType>),
}

impl ValueType {
    pub fn int() -> Self {
        ValueType::Base(BaseType::Int)
    }

    pub fn string() -> Self {
        ValueType::Base(BaseType::Str)
    }

    pub fn list() -> Self {
        ValueType::Base(BaseType::List)
    }

    /// Booleans are `unit + unit`; `true` is the left injection.
    pub fn bool() -> Self {
        ValueType::Sum(Box::new(ValueType::Unit), Box::new(ValueType::Unit))
    }

    pub fn product(a: ValueType, b: ValueType) -> Self {
        ValueType::Product(Box::new(a), Box::new(b))
    }

    pub fn sum(a: ValueType, b: ValueType) -> Self {
        ValueType::Sum(Box::new(a), Box::new(b))
    }

    pub fn promise(a: ValueType) -> Self {
        ValueType::Promise(Box::new(a))
    }

    pub fn fun(dom: ValueType, cod: CompType) -> Self {
        ValueType::Fun(Box::new(dom), Box::new(cod))
    }

    /// Ground types: base, unit, empty, products and sums of ground types.
    pub fn is_ground(&self) -> bool {
        match self {
            ValueType::Base(_) | ValueType::Unit | ValueType::Empty => true,
            ValueType::Product(a, b) | ValueType::Sum(a, b) => a.is_ground() && b.is_ground(),
            ValueType::Fun(..) | ValueType::Promise(_) | ValueType::Ref(_) => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompType {
    pub result: ValueType,
    pub effect: EffectAnn,
}

impl CompType {
    pub fn new(result: ValueType, effect: EffectAnn) -> Self {
        CompType { result, effect }
    }

    pub fn pure(result: ValueType) -> Self {
        CompType { result, effect: EffectAnn::empty() }
    }
}

/// Payload types of signals and interrupts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    entries: BTreeMap<SignalName, ValueType>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("payload type of `{0}` must be ground, found {1}")]
    NotGround(SignalName, ValueType),
    #[error("signal `{0}` declared twice")]
    Duplicate(SignalName),
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, op: impl Into<SignalName>, ty: ValueType) -> Result<(), SignatureError> {
        let op = op.into();
        if !ty.is_ground() {
            return Err(SignatureError::NotGround(op, ty));
        }
        if self.entries.contains_key(&op) {
            return Err(SignatureError::Duplicate(op));
        }
        self.entries.insert(op, ty);
        Ok(())
    }

    pub fn with(mut self, op: &str, ty: ValueType) -> Self {
        self.declare(op, ty).expect("valid signature entry");
        self
    }

    pub fn payload(&self, op: &str) -> Option<&ValueType> {
        self.entries.get(op)
    }

    pub fn contains(&self, op: &str) -> bool {
        self.entries.contains_key(op)
    }

    pub fn names(&self) -> impl Iterator<Item = &SignalName> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SignalName, &ValueType)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atom(t: &ValueType, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match t {
                ValueType::Product(..) | ValueType::Sum(..) | ValueType::Fun(..) | ValueType::Ref(_)
                    if *t != ValueType::bool() =>
                {
                    write!(f, "({t})")
                }
                _ => write!(f, "{t}"),
            }
        }
        match self {
            ValueType::Base(b) => f.write_str(b.name()),
            ValueType::Unit => f.write_str("unit"),
            ValueType::Empty => f.write_str("empty"),
            t if *t == ValueType::bool() => f.write_str("bool"),
            ValueType::Product(a, b) => {
                atom(a, f)?;
                f.write_str(" * ")?;
                atom(b, f)
            }
            ValueType::Sum(a, b) => {
                atom(a, f)?;
                f.write_str(" + ")?;
                atom(b, f)
            }
            ValueType::Fun(a, c) => {
                atom(a, f)?;
                f.write_str(" -> ")?;
                atom(&c.result, f)?;
                if !c.effect.is_empty() {
                    write!(f, " ! {}", c.effect)?;
                }
                Ok(())
            }
            ValueType::Promise(a) => write!(f, "<<{a}>>"),
            ValueType::Ref(a) => {
                f.write_str("ref ")?;
                atom(a, f)
            }
        }
    }
}

impl fmt::Display for CompType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.result {
            t @ (ValueType::Fun(..) | ValueType::Product(..) | ValueType::Sum(..) | ValueType::Ref(_))
                if *t != ValueType::bool() =>
            {
                write!(f, "({t}) ! {}", self.effect)
            }
            t => write!(f, "{t} ! {}", self.effect),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn promise_types_are_not_ground() {
        let mut sig = Signature::new();
        assert!(sig.declare("ok", ValueType::product(ValueType::int(), ValueType::bool())).is_ok());
        let err = sig.declare("bad", ValueType::promise(ValueType::Unit)).unwrap_err();
        assert!(matches!(err, SignatureError::NotGround(..)));
        let fun = ValueType::fun(ValueType::Unit, CompType::pure(ValueType::Unit));
        assert!(sig.declare("bad2", ValueType::sum(ValueType::Unit, fun)).is_err());
    }

    #[test]
    fn duplicate_declaration_rejected() {
        let mut sig = Signature::new();
        sig.declare("op", ValueType::Unit).unwrap();
        assert_eq!(sig.declare("op", ValueType::Unit), Err(SignatureError::Duplicate("op".into())));
    }
}
