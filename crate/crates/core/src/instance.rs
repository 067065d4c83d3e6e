//! Instances, the immutable instance base, and class distributions.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// An interned token. Equality and ordering follow the underlying string,
/// case-sensitively; symbols interned by the same [`InstanceBase`] share
/// storage so most equality checks short-circuit on the pointer.
#[derive(Clone)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(s: &str) -> Self {
        Symbol(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl PartialEq for Symbol {
    #[inline]
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl Eq for Symbol {}

impl std::hash::Hash for Symbol {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.cmp(&other.0)
    }
}

impl Borrow<str> for Symbol {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl Serialize for Symbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

pub type ClassLabel = Symbol;

/// The value held at one feature position.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureValue {
    Symbol(Symbol),
    Vector(Arc<[f64]>),
}

impl FeatureValue {
    pub fn symbol(s: &str) -> Self {
        FeatureValue::Symbol(Symbol::new(s))
    }

    pub fn vector(v: Vec<f64>) -> Self {
        FeatureValue::Vector(v.into())
    }

    pub fn kind(&self) -> FeatureKind {
        match self {
            FeatureValue::Symbol(_) => FeatureKind::Symbolic,
            FeatureValue::Vector(v) => FeatureKind::Vector(v.len()),
        }
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match self {
            FeatureValue::Symbol(s) => Some(s),
            FeatureValue::Vector(_) => None,
        }
    }
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureValue::Symbol(s) => f.write_str(s.as_str()),
            FeatureValue::Vector(v) => write!(f, "<vec{}>", v.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Symbolic,
    /// Real vectors of the given dimension.
    Vector(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub values: Vec<FeatureValue>,
    pub label: ClassLabel,
}

impl Instance {
    pub fn new(values: Vec<FeatureValue>, label: ClassLabel) -> Self {
        Instance { values, label }
    }

    /// Builds an all-symbolic instance from string tokens.
    pub fn symbolic(values: &[&str], label: &str) -> Self {
        Instance {
            values: values.iter().map(|v| FeatureValue::symbol(v)).collect(),
            label: Symbol::new(label),
        }
    }

    pub fn arity(&self) -> usize {
        self.values.len()
    }
}

/// Builds an all-symbolic query pattern from string tokens.
pub fn pattern(values: &[&str]) -> Vec<FeatureValue> {
    values.iter().map(|v| FeatureValue::symbol(v)).collect()
}

/// The stored training set. Immutable once built; instance order is the
/// input order and every downstream iteration follows it.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceBase {
    arity: usize,
    kinds: Vec<FeatureKind>,
    instances: Vec<Instance>,
    value_inventory: Vec<BTreeSet<Symbol>>,
    class_inventory: BTreeSet<ClassLabel>,
}

impl InstanceBase {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn is_symbolic(&self) -> bool {
        self.kinds.iter().all(|k| *k == FeatureKind::Symbolic)
    }

    /// Observed symbols at `feature`; empty for vector features.
    pub fn values(&self, feature: usize) -> &BTreeSet<Symbol> {
        &self.value_inventory[feature]
    }

    pub fn classes(&self) -> &BTreeSet<ClassLabel> {
        &self.class_inventory
    }

    /// Raw class frequencies over the whole base.
    pub fn class_counts(&self) -> BTreeMap<ClassLabel, f64> {
        let mut counts = BTreeMap::new();
        for inst in &self.instances {
            *counts.entry(inst.label.clone()).or_insert(0.0) += 1.0;
        }
        counts
    }

    pub(crate) fn check_query(&self, query: &[FeatureValue]) -> Result<()> {
        if query.len() != self.arity {
            return Err(Error::QueryArity {
                expected: self.arity,
                found: query.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_feature(&self, feature: usize) -> Result<()> {
        if feature >= self.arity {
            return Err(Error::FeatureOutOfRange {
                feature,
                arity: self.arity,
            });
        }
        Ok(())
    }
}

/// Builds an instance base, computing the value and class inventories.
pub fn build_instance_base(instances: Vec<Instance>) -> Result<InstanceBase> {
    let first = instances.first().ok_or(Error::EmptyBase)?;
    let arity = first.arity();
    let kinds: Vec<FeatureKind> = first.values.iter().map(FeatureValue::kind).collect();

    let mut interner: HashMap<Symbol, Symbol> = HashMap::new();
    let mut intern = |s: &Symbol| -> Symbol {
        interner
            .entry(s.clone())
            .or_insert_with(|| s.clone())
            .clone()
    };

    let mut value_inventory = vec![BTreeSet::new(); arity];
    let mut class_inventory = BTreeSet::new();
    let mut stored = Vec::with_capacity(instances.len());
    for (index, inst) in instances.into_iter().enumerate() {
        if inst.arity() != arity {
            return Err(Error::MixedArity {
                index,
                expected: arity,
                found: inst.arity(),
            });
        }
        let mut values = Vec::with_capacity(arity);
        for (feature, value) in inst.values.into_iter().enumerate() {
            if value.kind() != kinds[feature] {
                return Err(Error::MixedKind { feature });
            }
            match value {
                FeatureValue::Symbol(s) => {
                    let s = intern(&s);
                    value_inventory[feature].insert(s.clone());
                    values.push(FeatureValue::Symbol(s));
                }
                v @ FeatureValue::Vector(_) => values.push(v),
            }
        }
        let label = intern(&inst.label);
        class_inventory.insert(label.clone());
        stored.push(Instance { values, label });
    }

    Ok(InstanceBase {
        arity,
        kinds,
        instances: stored,
        value_inventory,
        class_inventory,
    })
}

/// A conditional class distribution. `defined` is false only when there was
/// no evidence at all, in which case `mass` is empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDistribution {
    mass: BTreeMap<ClassLabel, f64>,
    defined: bool,
}

impl ClassDistribution {
    pub fn undefined() -> Self {
        ClassDistribution {
            mass: BTreeMap::new(),
            defined: false,
        }
    }

    pub fn point(label: ClassLabel) -> Self {
        ClassDistribution {
            mass: BTreeMap::from([(label, 1.0)]),
            defined: true,
        }
    }

    pub fn is_defined(&self) -> bool {
        self.defined
    }

    pub fn mass(&self) -> &BTreeMap<ClassLabel, f64> {
        &self.mass
    }

    /// Probability of `label`; zero for labels absent from the map.
    pub fn get(&self, label: &str) -> f64 {
        self.mass.get(label).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.mass.values().sum()
    }

    /// Most probable label. Masses within 1e-12 count as tied and the
    /// lexicographically smallest tied label wins.
    pub fn argmax(&self) -> Option<&ClassLabel> {
        let mut best: Option<(&ClassLabel, f64)> = None;
        for (label, &p) in &self.mass {
            match best {
                Some((_, bp)) if p <= bp + crate::TIE_TOLERANCE => {}
                _ => best = Some((label, p)),
            }
        }
        best.map(|(l, _)| l)
    }

    /// Largest absolute difference over the union of both supports.
    pub fn max_abs_diff(&self, other: &ClassDistribution) -> f64 {
        self.mass
            .keys()
            .chain(other.mass.keys())
            .map(|l| (self.get(l.as_str()) - other.get(l.as_str())).abs())
            .fold(0.0, f64::max)
    }
}

/// Normalizes nonnegative class counts into a distribution. Classes with
/// zero count are left out of the support.
pub fn normalize_counts(counts: &BTreeMap<ClassLabel, f64>) -> Result<ClassDistribution> {
    for (label, &count) in counts {
        if count < 0.0 || count.is_nan() {
            return Err(Error::NegativeCount {
                label: label.to_string(),
                count,
            });
        }
    }
    let total: f64 = counts.values().sum();
    if total <= 0.0 {
        return Ok(ClassDistribution::undefined());
    }
    Ok(ClassDistribution {
        mass: counts
            .iter()
            .filter(|(_, &c)| c > 0.0)
            .map(|(l, &c)| (l.clone(), c / total))
            .collect(),
        defined: true,
    })
}
