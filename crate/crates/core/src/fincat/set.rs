use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{GlueError, Result};

/// Separator used to build canonical labels of pairs and tuples.
pub const SEPARATOR: char = '|';

/// A finite set of distinct string labels with a fixed iteration order.
#[derive(Clone, Default)]
pub struct FinSet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl FinSet {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(labels.len());
        for (pos, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), pos).is_some() {
                return Err(GlueError::structural(format!("duplicate label {label:?}")));
            }
        }
        Ok(FinSet { labels, index })
    }

    pub fn empty() -> Self {
        FinSet::default()
    }

    pub fn singleton(label: impl Into<String>) -> Self {
        FinSet::new([label.into()]).expect("a single label is distinct")
    }

    /// `{0, 1, ..., n-1}` labelled by decimal numerals.
    pub fn range(n: usize) -> Self {
        FinSet::new((0..n).map(|i| i.to_string())).expect("numerals are distinct")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, element: usize) -> &str {
        &self.labels[element]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn require(&self, label: &str) -> Result<usize> {
        self.position(label).ok_or_else(|| GlueError::structural(format!("unknown label {label:?}")))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.labels.len()
    }

    /// Sub-family of elements, in the given order.
    pub fn subset(&self, members: &[usize]) -> FinSet {
        FinSet::new(members.iter().map(|&m| self.labels[m].clone())).expect("members of a set are distinct")
    }

    /// Whether some label contains the reserved separator.
    pub fn reserved_label(&self) -> Option<&str> {
        self.labels.iter().find(|l| l.contains(SEPARATOR)).map(String::as_str)
    }
}

impl PartialEq for FinSet {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl Eq for FinSet {}

impl fmt::Debug for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.labels.iter()).finish()
    }
}

impl Serialize for FinSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.labels.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FinSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let labels = Vec::<String>::deserialize(deserializer)?;
        FinSet::new(labels).map_err(serde::de::Error::custom)
    }
}

/// Joins component labels into the canonical label of a tuple.
pub fn tuple_label<'a>(parts: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for (k, part) in parts.into_iter().enumerate() {
        if k > 0 {
            out.push(SEPARATOR);
        }
        out.push_str(part);
    }
    out
}

/// A total function between finite sets.
#[derive(Clone, PartialEq, Eq)]
pub struct FinFn {
    domain: FinSet,
    codomain: FinSet,
    map: Vec<usize>,
}

impl FinFn {
    pub fn new(domain: FinSet, codomain: FinSet, map: Vec<usize>) -> Result<Self> {
        if map.len() != domain.len() {
            return Err(GlueError::structural(format!(
                "map assigns {} values on a domain of size {}",
                map.len(),
                domain.len()
            )));
        }
        if let Some(&bad) = map.iter().find(|&&v| v >= codomain.len()) {
            return Err(GlueError::structural(format!(
                "value index {bad} outside a codomain of size {}",
                codomain.len()
            )));
        }
        Ok(FinFn { domain, codomain, map })
    }

    /// Builds a map from `(source label, target label)` assignments.
    pub fn from_pairs<'a>(
        domain: FinSet,
        codomain: FinSet,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let mut map = vec![usize::MAX; domain.len()];
        for (x, y) in pairs {
            let i = domain.require(x)?;
            let j = codomain.require(y)?;
            if map[i] != usize::MAX && map[i] != j {
                return Err(GlueError::structural(format!("label {x:?} assigned twice")));
            }
            map[i] = j;
        }
        if let Some(missing) = map.iter().position(|&v| v == usize::MAX) {
            return Err(GlueError::structural(format!("label {:?} has no assigned value", domain.label(missing))));
        }
        FinFn::new(domain, codomain, map)
    }

    pub fn identity(set: &FinSet) -> Self {
        FinFn { domain: set.clone(), codomain: set.clone(), map: set.elements().collect() }
    }

    pub fn constant(domain: &FinSet, codomain: &FinSet, value: usize) -> Result<Self> {
        FinFn::new(domain.clone(), codomain.clone(), vec![value; domain.len()])
    }

    pub fn domain(&self) -> &FinSet {
        &self.domain
    }

    pub fn codomain(&self) -> &FinSet {
        &self.codomain
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    pub fn apply_label(&self, x: &str) -> Result<&str> {
        let i = self.domain.require(x)?;
        Ok(self.codomain.label(self.map[i]))
    }

    pub fn values(&self) -> &[usize] {
        &self.map
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &FinFn) -> Result<FinFn> {
        if self.codomain != other.domain {
            return Err(GlueError::structural(format!(
                "cannot compose: codomain {:?} differs from domain {:?}",
                self.codomain, other.domain
            )));
        }
        Ok(FinFn {
            domain: self.domain.clone(),
            codomain: other.codomain.clone(),
            map: self.map.iter().map(|&y| other.map[y]).collect(),
        })
    }

    pub fn is_identity(&self) -> bool {
        self.domain == self.codomain && self.map.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.codomain.len()];
        self.map.iter().all(|&y| !std::mem::replace(&mut seen[y], true))
    }

    pub fn is_surjective(&self) -> bool {
        let mut hit = vec![false; self.codomain.len()];
        for &y in &self.map {
            hit[y] = true;
        }
        hit.into_iter().all(|h| h)
    }

    pub fn is_bijective(&self) -> bool {
        self.domain.len() == self.codomain.len() && self.is_injective()
    }

    /// Sorted, deduplicated image.
    pub fn image(&self) -> Vec<usize> {
        let mut hit = vec![false; self.codomain.len()];
        for &y in &self.map {
            hit[y] = true;
        }
        (0..hit.len()).filter(|&y| hit[y]).collect()
    }

    pub fn image_of(&self, subset: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = subset.iter().map(|&x| self.map[x]).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn preimage(&self, subset: &[usize]) -> Vec<usize> {
        let mut member = vec![false; self.codomain.len()];
        for &y in subset {
            member[y] = true;
        }
        (0..self.map.len()).filter(|&x| member[self.map[x]]).collect()
    }

    /// Two-sided inverse, when bijective.
    pub fn inverse(&self) -> Option<FinFn> {
        if !self.is_bijective() {
            return None;
        }
        let mut inv = vec![0; self.codomain.len()];
        for (x, &y) in self.map.iter().enumerate() {
            inv[y] = x;
        }
        Some(FinFn { domain: self.codomain.clone(), codomain: self.domain.clone(), map: inv })
    }

    /// Label-level assignments in domain order.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.map.iter().enumerate().map(|(x, &y)| (self.domain.label(x), self.codomain.label(y)))
    }
}

impl fmt::Debug for FinFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.pairs()).finish()
    }
}

#[derive(Serialize, Deserialize)]
struct FinFnRepr {
    domain: FinSet,
    codomain: FinSet,
    map: BTreeMap<String, String>,
}

impl Serialize for FinFn {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        FinFnRepr {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            map: self.pairs().map(|(x, y)| (x.to_string(), y.to_string())).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FinFn {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = FinFnRepr::deserialize(deserializer)?;
        FinFn::from_pairs(repr.domain, repr.codomain, repr.map.iter().map(|(x, y)| (x.as_str(), y.as_str())))
            .map_err(serde::de::Error::custom)
    }
}
