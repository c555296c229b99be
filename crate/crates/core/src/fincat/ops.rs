use serde::{Deserialize, Serialize};

use super::set::{tuple_label, FinFn, FinSet};
use super::union_find::UnionFind;
use crate::error::{check_cap, GlueError, Result};

/// Default bound on enumerated products, pullbacks and hom-sets.
pub const DEFAULT_CAP: u64 = 1_000_000;

/// A subobject presented by its members and the maps realising it
/// (the two projections of a pullback, or the inclusion of an equalizer).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedSubset {
    pub members: FinSet,
    pub legs: Vec<FinFn>,
}

/// `A ×_C B` with its projections; members are labelled `a|b`.
pub fn pullback(f: &FinFn, g: &FinFn) -> Result<PairedSubset> {
    pullback_capped(f, g, u64::MAX)
}

pub fn pullback_capped(f: &FinFn, g: &FinFn, cap: u64) -> Result<PairedSubset> {
    if f.codomain() != g.codomain() {
        return Err(GlueError::structural(format!(
            "pullback of maps with different codomains {:?} and {:?}",
            f.codomain(),
            g.codomain()
        )));
    }
    let mut fibre: Vec<Vec<usize>> = vec![Vec::new(); f.codomain().len()];
    for b in g.domain().elements() {
        fibre[g.apply(b)].push(b);
    }
    let size: u128 = f.domain().elements().map(|a| fibre[f.apply(a)].len() as u128).sum();
    check_cap(|| "pullback".into(), size, cap)?;
    let mut pairs = Vec::with_capacity(size as usize);
    for a in f.domain().elements() {
        for &b in &fibre[f.apply(a)] {
            pairs.push((a, b));
        }
    }
    let (a_set, b_set) = (f.domain(), g.domain());
    let members = FinSet::new(pairs.iter().map(|&(a, b)| tuple_label([a_set.label(a), b_set.label(b)])))
        .map_err(|e| GlueError::structural(format!("pullback labels collide: {e}")))?;
    let first = FinFn::new(members.clone(), a_set.clone(), pairs.iter().map(|p| p.0).collect())?;
    let second = FinFn::new(members.clone(), b_set.clone(), pairs.iter().map(|p| p.1).collect())?;
    Ok(PairedSubset { members, legs: vec![first, second] })
}

/// `{a : f(a) = g(a)}` with its inclusion.
pub fn equalizer(f: &FinFn, g: &FinFn) -> Result<PairedSubset> {
    if f.domain() != g.domain() || f.codomain() != g.codomain() {
        return Err(GlueError::structural("equalizer of maps with different endpoints"));
    }
    let members: Vec<usize> = f.domain().elements().filter(|&a| f.apply(a) == g.apply(a)).collect();
    let set = f.domain().subset(&members);
    let inclusion = FinFn::new(set.clone(), f.domain().clone(), members)?;
    Ok(PairedSubset { members: set, legs: vec![inclusion] })
}

/// A quotient set together with its projection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quotient {
    pub set: FinSet,
    pub projection: FinFn,
}

/// `S` modulo the equivalence relation generated by `pairs`.
///
/// Each class is labelled by its lexicographically smallest member; classes
/// appear in order of their first member in `S`.
pub fn quotient_by_pairs(set: &FinSet, pairs: &[(usize, usize)]) -> Result<Quotient> {
    if let Some(&(a, b)) = pairs.iter().find(|&&(a, b)| a >= set.len() || b >= set.len()) {
        return Err(GlueError::structural(format!(
            "pair ({a}, {b}) names an element outside a set of size {}",
            set.len()
        )));
    }
    let mut uf = UnionFind::new(set.len());
    for &(a, b) in pairs {
        uf.union(a, b);
    }
    Ok(quotient_from_roots(set, |x| uf.find(x)))
}

pub fn quotient_by_label_pairs(set: &FinSet, pairs: &[(&str, &str)]) -> Result<Quotient> {
    let indexed = pairs.iter().map(|(a, b)| Ok((set.require(a)?, set.require(b)?))).collect::<Result<Vec<_>>>()?;
    quotient_by_pairs(set, &indexed)
}

/// Builds the quotient from any class-representative function.
pub(crate) fn quotient_from_roots(set: &FinSet, mut root: impl FnMut(usize) -> usize) -> Quotient {
    let n = set.len();
    let mut class_of_root = vec![usize::MAX; n];
    let mut classes: Vec<usize> = Vec::new(); // smallest-label member per class
    let mut map = Vec::with_capacity(n);
    for x in 0..n {
        let r = root(x);
        if class_of_root[r] == usize::MAX {
            class_of_root[r] = classes.len();
            classes.push(x);
        }
        let c = class_of_root[r];
        if set.label(x) < set.label(classes[c]) {
            classes[c] = x;
        }
        map.push(c);
    }
    let quotient = set.subset(&classes);
    let projection = FinFn::new(set.clone(), quotient.clone(), map).expect("class indices are in range");
    Quotient { set: quotient, projection }
}

/// A finite product with its mixed-radix indexing.
#[derive(Clone, Debug)]
pub struct Product {
    pub set: FinSet,
    pub factors: Vec<FinSet>,
}

/// Label of the one-point empty product.
pub const EMPTY_PRODUCT_LABEL: &str = "*";

impl Product {
    /// Coordinates of the `k`-th tuple.
    pub fn tuple(&self, mut k: usize) -> Vec<usize> {
        let mut coords = vec![0; self.factors.len()];
        for (slot, f) in coords.iter_mut().zip(&self.factors).rev() {
            *slot = k % f.len();
            k /= f.len();
        }
        coords
    }

    pub fn index_of(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.factors).fold(0, |acc, (&c, f)| acc * f.len() + c)
    }

    pub fn projection(&self, factor: usize) -> FinFn {
        let map = self.set.elements().map(|k| self.tuple(k)[factor]).collect();
        FinFn::new(self.set.clone(), self.factors[factor].clone(), map).expect("coordinates are in range")
    }
}

pub fn product_size(factors: &[&FinSet]) -> u128 {
    factors.iter().fold(1u128, |acc, f| acc.saturating_mul(f.len() as u128))
}

/// Enumerates `∏ factors` in lexicographic order, labels `x|y|..`.
pub fn product_enumerate(factors: &[FinSet], cap: u64) -> Result<Product> {
    let size = product_size(&factors.iter().collect::<Vec<_>>());
    check_cap(|| format!("product of {} factors", factors.len()), size, cap)?;
    if factors.is_empty() {
        return Ok(Product { set: FinSet::singleton(EMPTY_PRODUCT_LABEL), factors: Vec::new() });
    }
    let mut labels = Vec::with_capacity(size as usize);
    let mut coords = vec![0usize; factors.len()];
    for _ in 0..size {
        labels.push(tuple_label(coords.iter().zip(factors).map(|(&c, f)| f.label(c))));
        for pos in (0..factors.len()).rev() {
            coords[pos] += 1;
            if coords[pos] < factors[pos].len() {
                break;
            }
            coords[pos] = 0;
        }
    }
    let set = FinSet::new(labels).map_err(|e| GlueError::structural(format!("product labels collide: {e}")))?;
    Ok(Product { set, factors: factors.to_vec() })
}
