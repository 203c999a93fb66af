//! Effect annotations `(o, ι)`.
//!
//! `o` is a finite set of signal names. `ι` is a regular tree of partial maps
//! from interrupt names to nested annotations: finite maps plus guarded,
//! named recursive definitions held in an [`AnnEnv`]. Joins and the
//! `ι[op ↦ ⊥]` update are kept symbolic ([`InterruptAnn::Join`],
//! [`InterruptAnn::Erase`]) and interpreted lazily by [`AnnEnv::lookup`], so
//! joining two recursive annotations never needs to unfold them.
//!
//! The order on interrupt annotations is decided coinductively: a pair that is
//! already under comparison is assumed related. Every annotation reachable by
//! lookups is a normalized join of subterms of the environment and of the
//! two inputs, so the set of visited pairs is finite.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::types::SignalName;

pub type SignalSet = BTreeSet<SignalName>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InterruptAnn {
    /// `{ op ↦ (o, ι), ... }`; absent names map to ⊥.
    Map(BTreeMap<SignalName, (SignalSet, InterruptAnn)>),
    /// Reference to a definition in the enclosing [`AnnEnv`].
    Named(String),
    /// Normalized join of at least two atoms (at most one `Map`, no nested
    /// joins, sorted, duplicate-free).
    Join(Vec<InterruptAnn>),
    /// `ι[op ↦ ⊥]` for every listed `op`; only ever wraps a `Named`.
    Erase(BTreeSet<SignalName>, Box<InterruptAnn>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EffectAnn {
    pub signals: SignalSet,
    pub handlers: InterruptAnn,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EffectError {
    #[error("unresolved effect annotation `{0}`")]
    Unresolved(String),
    #[error("effect annotation `{0}` is defined twice")]
    Duplicate(String),
    #[error("recursive effect annotation `{0}` is unguarded")]
    Unguarded(String),
}

impl InterruptAnn {
    pub fn empty() -> Self {
        InterruptAnn::Map(BTreeMap::new())
    }

    pub fn named(name: impl Into<String>) -> Self {
        InterruptAnn::Named(name.into())
    }

    pub fn single(op: impl Into<SignalName>, signals: SignalSet, inner: InterruptAnn) -> Self {
        let mut m = BTreeMap::new();
        m.insert(op.into(), (signals, inner));
        InterruptAnn::Map(m)
    }

    pub fn is_empty_map(&self) -> bool {
        matches!(self, InterruptAnn::Map(m) if m.is_empty())
    }

    /// Symbolic `self ∪ other`, normalized.
    pub fn join(&self, other: &InterruptAnn) -> InterruptAnn {
        let mut atoms = Vec::new();
        self.push_atoms(&mut atoms);
        other.push_atoms(&mut atoms);
        normalize_join(atoms)
    }

    fn push_atoms(&self, out: &mut Vec<InterruptAnn>) {
        match self {
            InterruptAnn::Join(xs) => out.extend(xs.iter().cloned()),
            x => out.push(x.clone()),
        }
    }

    /// `self[op ↦ ⊥]`.
    pub fn erase(&self, op: &str) -> InterruptAnn {
        match self {
            InterruptAnn::Map(m) => {
                let mut m = m.clone();
                m.remove(op);
                InterruptAnn::Map(m)
            }
            InterruptAnn::Named(_) => {
                InterruptAnn::Erase(std::iter::once(op.to_string()).collect(), Box::new(self.clone()))
            }
            InterruptAnn::Erase(ops, inner) => {
                let mut ops = ops.clone();
                ops.insert(op.to_string());
                InterruptAnn::Erase(ops, inner.clone())
            }
            InterruptAnn::Join(xs) => normalize_join(xs.iter().map(|x| x.erase(op)).collect()),
        }
    }

    /// Names of the definitions this annotation mentions.
    pub fn mentioned_names(&self, out: &mut BTreeSet<String>) {
        match self {
            InterruptAnn::Map(m) => {
                for (_, i) in m.values() {
                    i.mentioned_names(out);
                }
            }
            InterruptAnn::Named(n) => {
                out.insert(n.clone());
            }
            InterruptAnn::Join(xs) => xs.iter().for_each(|x| x.mentioned_names(out)),
            InterruptAnn::Erase(_, x) => x.mentioned_names(out),
        }
    }
}

fn normalize_join(atoms: Vec<InterruptAnn>) -> InterruptAnn {
    let mut merged: Option<BTreeMap<SignalName, (SignalSet, InterruptAnn)>> = None;
    let mut rest: BTreeSet<InterruptAnn> = BTreeSet::new();
    for a in atoms {
        match a {
            InterruptAnn::Map(m) => {
                let acc = merged.get_or_insert_with(BTreeMap::new);
                for (op, (o, i)) in m {
                    match acc.remove(&op) {
                        Some((o2, i2)) => {
                            let o = o.union(&o2).cloned().collect();
                            acc.insert(op, (o, i2.join(&i)));
                        }
                        None => {
                            acc.insert(op, (o, i));
                        }
                    }
                }
            }
            InterruptAnn::Join(xs) => rest.extend(xs),
            other => {
                rest.insert(other);
            }
        }
    }
    // `n[ops ↦ ⊥]` is below `n`
    let named: BTreeSet<String> = rest
        .iter()
        .filter_map(|a| match a {
            InterruptAnn::Named(n) => Some(n.clone()),
            _ => None,
        })
        .collect();
    rest.retain(|a| match a {
        InterruptAnn::Erase(_, inner) => match inner.as_ref() {
            InterruptAnn::Named(n) => !named.contains(n),
            _ => true,
        },
        _ => true,
    });
    let mut out: Vec<InterruptAnn> = Vec::new();
    if let Some(m) = merged {
        if !m.is_empty() || rest.is_empty() {
            out.push(InterruptAnn::Map(m));
        }
    }
    out.extend(rest);
    out.sort();
    match out.len() {
        0 => InterruptAnn::empty(),
        1 => out.pop().unwrap(),
        _ => InterruptAnn::Join(out),
    }
}

impl EffectAnn {
    pub fn empty() -> Self {
        EffectAnn { signals: SignalSet::new(), handlers: InterruptAnn::empty() }
    }

    pub fn new(signals: SignalSet, handlers: InterruptAnn) -> Self {
        EffectAnn { signals, handlers }
    }

    pub fn signals<'a>(ops: impl IntoIterator<Item = &'a str>) -> Self {
        EffectAnn { signals: ops.into_iter().map(String::from).collect(), handlers: InterruptAnn::empty() }
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty() && self.handlers.is_empty_map()
    }

    pub fn join(&self, other: &EffectAnn) -> EffectAnn {
        EffectAnn {
            signals: self.signals.union(&other.signals).cloned().collect(),
            handlers: self.handlers.join(&other.handlers),
        }
    }
}

/// Named recursive interrupt annotations.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnnEnv {
    defs: BTreeMap<String, InterruptAnn>,
}

impl AnnEnv {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a definition. The body may mention `name` and earlier or later
    /// definitions; call [`AnnEnv::validate`] once all are in.
    pub fn define(&mut self, name: impl Into<String>, body: InterruptAnn) -> Result<(), EffectError> {
        let name = name.into();
        if self.defs.contains_key(&name) {
            return Err(EffectError::Duplicate(name));
        }
        self.defs.insert(name, body);
        Ok(())
    }

    /// Adds or replaces a definition; used while solving recursive
    /// annotations by iteration.
    pub fn redefine(&mut self, name: impl Into<String>, body: InterruptAnn) {
        self.defs.insert(name.into(), body);
    }

    pub fn remove(&mut self, name: &str) -> Option<InterruptAnn> {
        self.defs.remove(name)
    }

    pub fn get(&self, name: &str) -> Option<&InterruptAnn> {
        self.defs.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.defs.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &InterruptAnn)> {
        self.defs.iter()
    }

    /// Every mentioned name resolves and every definition is guarded.
    pub fn validate(&self) -> Result<(), EffectError> {
        for body in self.defs.values() {
            self.check_resolved(body)?;
        }
        for name in self.defs.keys() {
            let mut seen = Vec::new();
            self.check_guarded(name, &mut seen)?;
        }
        Ok(())
    }

    pub fn check_resolved(&self, ann: &InterruptAnn) -> Result<(), EffectError> {
        let mut names = BTreeSet::new();
        ann.mentioned_names(&mut names);
        match names.into_iter().find(|n| !self.defs.contains_key(n)) {
            Some(n) => Err(EffectError::Unresolved(n)),
            None => Ok(()),
        }
    }

    fn check_guarded(&self, name: &str, seen: &mut Vec<String>) -> Result<(), EffectError> {
        if seen.iter().any(|s| s == name) {
            return Err(EffectError::Unguarded(seen[0].clone()));
        }
        seen.push(name.to_string());
        if let Some(body) = self.defs.get(name) {
            for head in head_names(body) {
                self.check_guarded(&head, seen)?;
            }
        }
        seen.pop();
        Ok(())
    }

    /// `ι(op)`: one-level unfolding then map lookup. `Ok(None)` is ⊥.
    pub fn lookup(&self, ann: &InterruptAnn, op: &str) -> Result<Option<(SignalSet, InterruptAnn)>, EffectError> {
        match ann {
            InterruptAnn::Map(m) => Ok(m.get(op).cloned()),
            InterruptAnn::Named(n) => {
                let body = self.defs.get(n).ok_or_else(|| EffectError::Unresolved(n.clone()))?;
                self.lookup(body, op)
            }
            InterruptAnn::Erase(ops, inner) => {
                if ops.contains(op) {
                    Ok(None)
                } else {
                    self.lookup(inner, op)
                }
            }
            InterruptAnn::Join(xs) => {
                let mut acc: Option<(SignalSet, InterruptAnn)> = None;
                for x in xs {
                    if let Some((o, i)) = self.lookup(x, op)? {
                        acc = Some(match acc {
                            None => (o, i),
                            Some((o2, i2)) => (o2.union(&o).cloned().collect(), i2.join(&i)),
                        });
                    }
                }
                Ok(acc)
            }
        }
    }

    /// Lookup that reads unresolved names as ⊥.
    pub fn get_op(&self, ann: &InterruptAnn, op: &str) -> Option<(SignalSet, InterruptAnn)> {
        self.lookup(ann, op).ok().flatten()
    }

    /// Names mapped to something other than ⊥.
    pub fn domain(&self, ann: &InterruptAnn) -> BTreeSet<SignalName> {
        let mut out = BTreeSet::new();
        let mut visiting = Vec::new();
        self.domain_into(ann, &mut out, &mut visiting);
        out
    }

    fn domain_into(&self, ann: &InterruptAnn, out: &mut BTreeSet<SignalName>, visiting: &mut Vec<String>) {
        match ann {
            InterruptAnn::Map(m) => out.extend(m.keys().cloned()),
            InterruptAnn::Named(n) => {
                if visiting.contains(n) {
                    return;
                }
                if let Some(body) = self.defs.get(n) {
                    visiting.push(n.clone());
                    self.domain_into(body, out, visiting);
                    visiting.pop();
                }
            }
            InterruptAnn::Join(xs) => xs.iter().for_each(|x| self.domain_into(x, out, visiting)),
            InterruptAnn::Erase(ops, inner) => {
                let mut sub = BTreeSet::new();
                self.domain_into(inner, &mut sub, visiting);
                out.extend(sub.into_iter().filter(|o| !ops.contains(o)));
            }
        }
    }

    pub fn leq_o(a: &SignalSet, b: &SignalSet) -> bool {
        a.is_subset(b)
    }

    /// `a ⊑ b` on interrupt annotations.
    pub fn leq_i(&self, a: &InterruptAnn, b: &InterruptAnn) -> bool {
        let mut assumed = HashSet::new();
        self.leq_i_memo(a, b, &mut assumed)
    }

    fn leq_i_memo(
        &self,
        a: &InterruptAnn,
        b: &InterruptAnn,
        assumed: &mut HashSet<(InterruptAnn, InterruptAnn)>,
    ) -> bool {
        if a == b {
            return true;
        }
        if !assumed.insert((a.clone(), b.clone())) {
            return true;
        }
        for op in self.domain(a) {
            let Some((oa, ia)) = self.get_op(a, &op) else { continue };
            match self.get_op(b, &op) {
                None => return false,
                Some((ob, ib)) => {
                    if !oa.is_subset(&ob) || !self.leq_i_memo(&ia, &ib, assumed) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Product order on `(o, ι)`.
    pub fn leq(&self, a: &EffectAnn, b: &EffectAnn) -> bool {
        a.signals.is_subset(&b.signals) && self.leq_i(&a.handlers, &b.handlers)
    }

    pub fn equiv_i(&self, a: &InterruptAnn, b: &InterruptAnn) -> bool {
        self.leq_i(a, b) && self.leq_i(b, a)
    }

    pub fn equiv(&self, a: &EffectAnn, b: &EffectAnn) -> bool {
        self.leq(a, b) && self.leq(b, a)
    }

    /// Action of an interrupt: `op ↓ (o, ι)`.
    pub fn act(&self, op: &str, e: &EffectAnn) -> EffectAnn {
        match self.get_op(&e.handlers, op) {
            Some((o2, i2)) => EffectAnn {
                signals: e.signals.union(&o2).cloned().collect(),
                handlers: e.handlers.erase(op).join(&i2),
            },
            None => e.clone(),
        }
    }

    /// `ops ↓↓ e`, with the head of `ops` acting last (outermost).
    pub fn act_list(&self, ops: &[SignalName], e: &EffectAnn) -> EffectAnn {
        match ops.split_first() {
            None => e.clone(),
            Some((op, rest)) => self.act(op, &self.act_list(rest, e)),
        }
    }
}

/// Names reachable from the top of a body without passing under a map entry.
fn head_names(ann: &InterruptAnn) -> Vec<String> {
    match ann {
        InterruptAnn::Map(_) => Vec::new(),
        InterruptAnn::Named(n) => vec![n.clone()],
        InterruptAnn::Join(xs) => xs.iter().flat_map(head_names).collect(),
        InterruptAnn::Erase(_, x) => head_names(x),
    }
}

/// Removes top-level (unguarded) occurrences of `name` from a candidate
/// definition body. Under a least-fixed-point reading `F = F ∪ G` and
/// `F = F[op ↦ ⊥] ∪ G` both solve to `F = G`.
pub fn drop_unguarded(ann: &InterruptAnn, name: &str) -> InterruptAnn {
    let is_self = |a: &InterruptAnn| match a {
        InterruptAnn::Named(n) => n == name,
        InterruptAnn::Erase(_, inner) => matches!(inner.as_ref(), InterruptAnn::Named(n) if n == name),
        _ => false,
    };
    match ann {
        a if is_self(a) => InterruptAnn::empty(),
        InterruptAnn::Join(xs) => normalize_join(xs.iter().filter(|x| !is_self(x)).cloned().collect()),
        other => other.clone(),
    }
}

impl fmt::Display for InterruptAnn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterruptAnn::Map(m) => {
                f.write_str("{")?;
                for (k, (op, (o, i))) in m.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{op} -> ({}, {i})", SetDisplay(o))?;
                }
                f.write_str("}")
            }
            InterruptAnn::Named(n) => f.write_str(n),
            InterruptAnn::Join(xs) => {
                f.write_str("(")?;
                for (k, x) in xs.iter().enumerate() {
                    if k > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
            InterruptAnn::Erase(ops, x) => write!(f, "{x}\\{}", SetDisplay(ops)),
        }
    }
}

pub struct SetDisplay<'a>(pub &'a SignalSet);

impl fmt::Display for SetDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, op) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            f.write_str(op)?;
        }
        f.write_str("}")
    }
}

impl fmt::Display for EffectAnn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", SetDisplay(&self.signals), self.handlers)
    }
}
