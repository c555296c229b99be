//! Truncated power-set index categories `P₂(I)` and their split variants
//! `S₂(I)`, pair sorting maps, and the functors relating them.
//!
//! Objects are singletons `{i}` and pairs: unordered `{i, j}` with `i ≠ j`
//! in the non-split category, ordered `(i, j)` (including `(i, i)`) in the
//! split one. Morphisms are kept in a small normal form; composites are
//! normalised on demand.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{GlueError, Result};
use crate::fincat::{tuple_label, FinFn, FinSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[serde(alias = "non-split")]
    Nonsplit,
    Split,
}

/// An object of an index category; indices refer to positions in `I`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexObject {
    Single(usize),
    /// Non-split: stored with `i < j`. Split: ordered, `i == j` allowed.
    Pair(usize, usize),
}

/// Morphisms in normal form.
///
/// `Incl(i, j)` is `{i} → {i, j}` (non-split) or `(i) → (i, j)` (split);
/// `Tau(i, j)` is the swap `(i, j) → (j, i)`; `TauIncl(i, j)` is the
/// composite `τ_{i,j} ∘ 𝔦ˢ_{i,j} : (i) → (j, i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Morphism {
    Identity(IndexObject),
    Incl(usize, usize),
    Tau(usize, usize),
    TauIncl(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexCat {
    mode: Mode,
    index: FinSet,
    objects: Vec<IndexObject>,
    generators: Vec<Morphism>,
    lookup: HashMap<IndexObject, usize>,
}

impl IndexCat {
    pub fn new(index: FinSet, mode: Mode) -> Result<Self> {
        if index.is_empty() {
            return Err(GlueError::structural("an index category needs a nonempty index set"));
        }
        let n = index.len();
        let mut objects: Vec<IndexObject> = (0..n).map(IndexObject::Single).collect();
        let mut generators = Vec::new();
        match mode {
            Mode::Nonsplit => {
                for i in 0..n {
                    for j in i + 1..n {
                        objects.push(IndexObject::Pair(i, j));
                        generators.push(Morphism::Incl(i, j));
                        generators.push(Morphism::Incl(j, i));
                    }
                }
            }
            Mode::Split => {
                for i in 0..n {
                    for j in 0..n {
                        objects.push(IndexObject::Pair(i, j));
                        generators.push(Morphism::Incl(i, j));
                        generators.push(Morphism::Tau(i, j));
                    }
                }
            }
        }
        let lookup = objects.iter().enumerate().map(|(k, &o)| (o, k)).collect();
        Ok(IndexCat { mode, index, objects, generators, lookup })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn index(&self) -> &FinSet {
        &self.index
    }

    pub fn objects(&self) -> &[IndexObject] {
        &self.objects
    }

    pub fn generators(&self) -> &[Morphism] {
        &self.generators
    }

    pub fn object_id(&self, object: IndexObject) -> Option<usize> {
        self.lookup.get(&object).copied()
    }

    pub fn generator_id(&self, m: Morphism) -> Option<usize> {
        self.generators.iter().position(|&g| g == m)
    }

    /// The pair object containing `i` and `j` (`{i}` is not a pair).
    pub fn pair(&self, i: usize, j: usize) -> IndexObject {
        match self.mode {
            Mode::Nonsplit => IndexObject::Pair(i.min(j), i.max(j)),
            Mode::Split => IndexObject::Pair(i, j),
        }
    }

    pub fn is_object(&self, o: IndexObject) -> bool {
        self.lookup.contains_key(&o)
    }

    pub fn is_morphism(&self, m: Morphism) -> bool {
        let n = self.index.len();
        match (self.mode, m) {
            (_, Morphism::Identity(o)) => self.is_object(o),
            (Mode::Nonsplit, Morphism::Incl(i, j)) => i < n && j < n && i != j,
            (Mode::Nonsplit, _) => false,
            (Mode::Split, Morphism::Incl(i, j) | Morphism::Tau(i, j) | Morphism::TauIncl(i, j)) => i < n && j < n,
        }
    }

    pub fn source(&self, m: Morphism) -> IndexObject {
        match m {
            Morphism::Identity(o) => o,
            Morphism::Incl(i, _) | Morphism::TauIncl(i, _) => IndexObject::Single(i),
            Morphism::Tau(i, j) => IndexObject::Pair(i, j),
        }
    }

    pub fn target(&self, m: Morphism) -> IndexObject {
        match m {
            Morphism::Identity(o) => o,
            Morphism::Incl(i, j) => self.pair(i, j),
            Morphism::Tau(i, j) | Morphism::TauIncl(i, j) => IndexObject::Pair(j, i),
        }
    }

    /// `g ∘ f`, normalised.
    pub fn compose(&self, g: Morphism, f: Morphism) -> Result<Morphism> {
        if self.target(f) != self.source(g) {
            return Err(GlueError::structural(format!("cannot compose {g:?} after {f:?}")));
        }
        use Morphism::*;
        Ok(match (g, f) {
            (Identity(_), f) => f,
            (g, Identity(_)) => g,
            (Tau(..), Tau(i, j)) => Identity(IndexObject::Pair(i, j)),
            (Tau(..), Incl(i, j)) => TauIncl(i, j),
            (Tau(..), TauIncl(i, j)) => Incl(i, j),
            _ => return Err(GlueError::structural(format!("no composite {g:?} ∘ {f:?}"))),
        })
    }

    /// Every morphism of the category (finitely many).
    pub fn morphisms(&self) -> Vec<Morphism> {
        let mut all: Vec<Morphism> = self.objects.iter().map(|&o| Morphism::Identity(o)).collect();
        all.extend(self.generators.iter().copied());
        if self.mode == Mode::Split {
            let n = self.index.len();
            for i in 0..n {
                for j in 0..n {
                    all.push(Morphism::TauIncl(i, j));
                }
            }
        }
        all
    }

    pub fn object_label(&self, o: IndexObject) -> String {
        match o {
            IndexObject::Single(i) => self.index.label(i).to_string(),
            IndexObject::Pair(i, j) => {
                format!("{},{}", self.index.label(i), self.index.label(j))
            }
        }
    }

    /// Resolves `[i]` or `[i, j]` given by labels.
    pub fn parse_object(&self, labels: &[String]) -> Result<IndexObject> {
        let object = match labels {
            [i] => IndexObject::Single(self.index.require(i)?),
            [i, j] => {
                let (i, j) = (self.index.require(i)?, self.index.require(j)?);
                match self.mode {
                    Mode::Nonsplit if i == j => {
                        return Err(GlueError::structural(format!(
                            "non-split data has no overlap {{{}, {}}}",
                            labels[0], labels[1]
                        )))
                    }
                    _ => self.pair(i, j),
                }
            }
            _ => return Err(GlueError::structural("index objects name one or two indices")),
        };
        Ok(object)
    }
}

/// A choice of ordering for each unordered pair of distinct indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortingMap {
    n: usize,
    /// `(i, j)` with `i < j` ↦ whether the chosen order is `(i, j)`.
    ascending: BTreeMap<(usize, usize), bool>,
}

impl SortingMap {
    /// `choices` lists the chosen ordered pair for every unordered pair.
    pub fn new(index: &FinSet, choices: &[(usize, usize)]) -> Result<Self> {
        let n = index.len();
        let mut ascending = BTreeMap::new();
        for &(i, j) in choices {
            if i == j || i >= n || j >= n {
                return Err(GlueError::structural(format!("({i}, {j}) is not a pair of distinct indices")));
            }
            if ascending.insert((i.min(j), i.max(j)), i < j).is_some() {
                return Err(GlueError::structural(format!("pair {{{i}, {j}}} sorted twice")));
            }
        }
        let expected = n * n.saturating_sub(1) / 2;
        if ascending.len() != expected {
            return Err(GlueError::structural(format!("sorting map covers {} of {expected} pairs", ascending.len())));
        }
        Ok(SortingMap { n, ascending })
    }

    pub fn ascending(index: &FinSet) -> Self {
        let n = index.len();
        let ascending = (0..n).flat_map(|i| (i + 1..n).map(move |j| ((i, j), true))).collect();
        SortingMap { n, ascending }
    }

    /// All `2^(n choose 2)` sorting maps.
    pub fn all(index: &FinSet) -> Vec<SortingMap> {
        let n = index.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        (0..1u64 << pairs.len())
            .map(|mask| SortingMap {
                n,
                ascending: pairs.iter().enumerate().map(|(k, &p)| (p, mask >> k & 1 == 0)).collect(),
            })
            .collect()
    }

    /// `c({i, j})`.
    pub fn sort(&self, i: usize, j: usize) -> (usize, usize) {
        let (lo, hi) = (i.min(j), i.max(j));
        if self.ascending[&(lo, hi)] {
            (lo, hi)
        } else {
            (hi, lo)
        }
    }
}

/// A functor between index categories given on objects and generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexFunctor {
    pub source: IndexCat,
    pub target: IndexCat,
    objects: Vec<IndexObject>,
    generators: Vec<Morphism>,
}

impl IndexFunctor {
    /// Builds and checks the functor laws on generators.
    pub fn new(
        source: IndexCat,
        target: IndexCat,
        object_map: impl Fn(IndexObject) -> IndexObject,
        generator_map: impl Fn(Morphism) -> Morphism,
    ) -> Result<Self> {
        let objects = source.objects.iter().map(|&o| object_map(o)).collect();
        let generators = source.generators.iter().map(|&g| generator_map(g)).collect();
        let functor = IndexFunctor { source, target, objects, generators };
        let violations = functor.violations();
        if violations.is_empty() {
            Ok(functor)
        } else {
            Err(GlueError::structural(violations.join("; ")))
        }
    }

    pub fn object(&self, o: IndexObject) -> IndexObject {
        self.objects[self.source.object_id(o).expect("object of the source category")]
    }

    pub fn apply(&self, m: Morphism) -> Result<Morphism> {
        let gen = |g: Morphism| {
            self.source
                .generator_id(g)
                .map(|k| self.generators[k])
                .ok_or_else(|| GlueError::structural(format!("{g:?} is not a generator")))
        };
        match m {
            Morphism::Identity(o) => Ok(Morphism::Identity(self.object(o))),
            Morphism::Incl(..) | Morphism::Tau(..) => gen(m),
            Morphism::TauIncl(i, j) => self.target.compose(gen(Morphism::Tau(i, j))?, gen(Morphism::Incl(i, j))?),
        }
    }

    /// Violated endpoint and relation laws.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (&o, &image) in self.source.objects.iter().zip(&self.objects) {
            if !self.target.is_object(image) {
                out.push(format!("object {o:?} sent outside the target: {image:?}"));
            }
        }
        if !out.is_empty() {
            return out;
        }
        for (&g, &image) in self.source.generators.iter().zip(&self.generators) {
            if !self.target.is_morphism(image) {
                out.push(format!("generator {g:?} sent to a non-morphism {image:?}"));
                continue;
            }
            let (s, t) = (self.object(self.source.source(g)), self.object(self.source.target(g)));
            if self.target.source(image) != s || self.target.target(image) != t {
                out.push(format!("generator {g:?} sent to {image:?} with wrong endpoints"));
            }
        }
        if out.is_empty() && self.source.mode == Mode::Split {
            let n = self.source.index.len();
            for i in 0..n {
                for j in 0..n {
                    let there = self.apply(Morphism::Tau(i, j));
                    let back = self.apply(Morphism::Tau(j, i));
                    let round = there.and_then(|t| back.and_then(|b| self.target.compose(b, t)));
                    let id = Morphism::Identity(self.object(IndexObject::Pair(i, j)));
                    if round.as_ref() != Ok(&id) {
                        out.push(format!("τ_{{{j},{i}}} ∘ τ_{{{i},{j}}} is not sent to an identity"));
                    }
                }
            }
        }
        out
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &IndexFunctor) -> Result<IndexFunctor> {
        if self.target != other.source {
            return Err(GlueError::structural("functors are not composable"));
        }
        let objects = self.objects.iter().map(|&o| other.object(o)).collect();
        let generators = self.generators.iter().map(|&g| other.apply(g)).collect::<Result<_>>()?;
        Ok(IndexFunctor { source: self.source.clone(), target: other.target.clone(), objects, generators })
    }

    pub fn is_identity(&self) -> bool {
        self.source == self.target && self.objects == self.source.objects && self.generators == self.source.generators
    }
}

/// The functors `A_c : P₂(I) → S₂(I)`, `B_I : S₂(I) → P₂(I)` and
/// `A'_c : P₂(I ⨿ I) → S₂(I)`.
#[derive(Clone, Debug)]
pub struct SortingFunctors {
    pub a: IndexFunctor,
    pub b: IndexFunctor,
    pub a_prime: IndexFunctor,
}

/// `I ⨿ I` labelled `i|1`, `i|2`; the copy `k` of `i` sits at `k·|I| + i`.
pub fn doubled_index(index: &FinSet) -> FinSet {
    FinSet::new(
        [1, 2].iter().flat_map(|k| index.labels().iter().map(move |l| tuple_label([l.as_str(), &k.to_string()]))),
    )
    .expect("copies are distinct")
}

pub fn sorting_functors(index: &FinSet, c: &SortingMap) -> Result<SortingFunctors> {
    let n = index.len();
    if c.n != n {
        return Err(GlueError::structural("sorting map belongs to another index set"));
    }
    let p2 = IndexCat::new(index.clone(), Mode::Nonsplit)?;
    let s2 = IndexCat::new(index.clone(), Mode::Split)?;
    use IndexObject::*;
    use Morphism::*;

    let a = IndexFunctor::new(
        p2.clone(),
        s2.clone(),
        |o| match o {
            Single(i) => Single(i),
            Pair(i, j) => {
                let (x, y) = c.sort(i, j);
                Pair(x, y)
            }
        },
        |g| match g {
            Incl(i, j) if c.sort(i, j) == (i, j) => Incl(i, j),
            Incl(i, j) => TauIncl(i, j),
            other => other,
        },
    )?;

    let b = IndexFunctor::new(
        s2.clone(),
        p2.clone(),
        |o| match o {
            Pair(i, j) if i == j => Single(i),
            Pair(i, j) => Pair(i.min(j), i.max(j)),
            single => single,
        },
        |g| match g {
            Tau(i, j) if i == j => Identity(Single(i)),
            Tau(i, j) => Identity(Pair(i.min(j), i.max(j))),
            Incl(i, j) if i == j => Identity(Single(i)),
            other => other,
        },
    )?;

    let doubled = IndexCat::new(doubled_index(index), Mode::Nonsplit)?;
    let split = |p: usize| (p % n, p / n + 1); // (index, copy)
    let a_prime = IndexFunctor::new(
        doubled,
        s2,
        |o| match o {
            Single(p) => Single(split(p).0),
            Pair(p, q) => {
                let ((a, ka), (b, kb)) = (split(p), split(q));
                if a == b {
                    Pair(a, a)
                } else {
                    let (i, j) = c.sort(a, b);
                    let k_first = if a == i { ka } else { kb };
                    if k_first == 1 {
                        Pair(i, j)
                    } else {
                        Pair(j, i)
                    }
                }
            }
        },
        |g| match g {
            Incl(p, q) => {
                let ((a, ka), (b, _)) = (split(p), split(q));
                if a == b {
                    if ka == 1 {
                        Incl(a, a)
                    } else {
                        TauIncl(a, a)
                    }
                } else {
                    let (i, _) = c.sort(a, b);
                    match (a == i, ka) {
                        (true, 1) => Incl(a, b),
                        (true, _) => TauIncl(a, b),
                        (false, _) => {
                            // a is the second index of c({a, b}); look at i's copy.
                            let ki = split(q).1;
                            if ki == 1 {
                                TauIncl(a, b)
                            } else {
                                Incl(a, b)
                            }
                        }
                    }
                }
            }
            other => other,
        },
    )?;
    Ok(SortingFunctors { a, b, a_prime })
}

/// `P₂(γ) : P₂(I) → P₂(J)` for a map `γ : I → J`.
pub fn p2_of_map(gamma: &FinFn) -> Result<IndexFunctor> {
    let source = IndexCat::new(gamma.domain().clone(), Mode::Nonsplit)?;
    let target = IndexCat::new(gamma.codomain().clone(), Mode::Nonsplit)?;
    let g = |i: usize| gamma.apply(i);
    IndexFunctor::new(
        source,
        target,
        |o| match o {
            IndexObject::Single(i) => IndexObject::Single(g(i)),
            IndexObject::Pair(i, j) if g(i) == g(j) => IndexObject::Single(g(i)),
            IndexObject::Pair(i, j) => IndexObject::Pair(g(i).min(g(j)), g(i).max(g(j))),
        },
        |m| match m {
            Morphism::Incl(i, j) if g(i) == g(j) => Morphism::Identity(IndexObject::Single(g(i))),
            Morphism::Incl(i, j) => Morphism::Incl(g(i), g(j)),
            other => other,
        },
    )
}
