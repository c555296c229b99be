use std::collections::{BTreeMap, HashSet, VecDeque};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::set::{FinFn, FinSet};
use crate::error::{check_cap, GlueError, Result};

/// A topology on `{0, .., n-1}`, stored as the minimal open neighbourhood of
/// every point.
///
/// Every finite topology is determined by these sets: a subset is open iff it
/// contains the minimal neighbourhood of each of its points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    nbhd: Vec<Vec<usize>>,
}

impl Topology {
    pub fn discrete(n: usize) -> Self {
        Topology { nbhd: (0..n).map(|x| vec![x]).collect() }
    }

    pub fn indiscrete(n: usize) -> Self {
        Topology { nbhd: vec![(0..n).collect(); n] }
    }

    /// Validates a full family of opens: it must contain the empty set and
    /// the whole carrier and be closed under pairwise union and intersection.
    pub fn from_opens(n: usize, opens: &[Vec<usize>]) -> Result<Self> {
        let family: HashSet<Vec<usize>> = opens.iter().map(|o| normalized(o, n)).collect::<Result<_>>()?;
        if !family.contains(&Vec::new()) {
            return Err(GlueError::structural("open family lacks the empty set"));
        }
        if !family.contains(&(0..n).collect::<Vec<_>>()) {
            return Err(GlueError::structural("open family lacks the whole carrier"));
        }
        let members: Vec<&Vec<usize>> = family.iter().collect();
        for (k, a) in members.iter().enumerate() {
            for b in &members[k + 1..] {
                if !family.contains(&union(a, b)) {
                    return Err(GlueError::structural(format!("open family not closed under union: {a:?} ∪ {b:?}")));
                }
                if !family.contains(&intersection(a, b)) {
                    return Err(GlueError::structural(format!(
                        "open family not closed under intersection: {a:?} ∩ {b:?}"
                    )));
                }
            }
        }
        Ok(Self::generated_by(n, members.into_iter().cloned()))
    }

    /// The coarsest topology in which every given set is open.
    pub fn generated_by(n: usize, sets: impl IntoIterator<Item = Vec<usize>>) -> Self {
        let mut nbhd: Vec<Vec<usize>> = vec![(0..n).collect(); n];
        for set in sets {
            for &x in &set {
                nbhd[x] = intersection(&nbhd[x], &set);
            }
        }
        Topology { nbhd }
    }

    /// Builds from per-point neighbourhoods that already satisfy `y ∈ U_x ⇒ U_y ⊆ U_x`.
    pub fn from_neighbourhoods(nbhd: Vec<Vec<usize>>) -> Result<Self> {
        let n = nbhd.len();
        let nbhd: Vec<Vec<usize>> = nbhd.iter().map(|u| normalized(u, n)).collect::<Result<_>>()?;
        for (x, u) in nbhd.iter().enumerate() {
            if u.binary_search(&x).is_err() {
                return Err(GlueError::structural(format!("neighbourhood of point {x} misses it")));
            }
            for &y in u {
                if !is_subset(&nbhd[y], u) {
                    return Err(GlueError::structural(format!(
                        "neighbourhoods are not transitive at points {x} and {y}"
                    )));
                }
            }
        }
        Ok(Topology { nbhd })
    }

    pub fn len(&self) -> usize {
        self.nbhd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nbhd.is_empty()
    }

    pub fn neighbourhood(&self, x: usize) -> &[usize] {
        &self.nbhd[x]
    }

    pub fn is_discrete(&self) -> bool {
        self.nbhd.iter().all(|u| u.len() == 1)
    }

    /// `subset` must be sorted.
    pub fn is_open(&self, subset: &[usize]) -> bool {
        let mut member = vec![false; self.nbhd.len()];
        for &x in subset {
            member[x] = true;
        }
        subset.iter().all(|&x| self.nbhd[x].iter().all(|&y| member[y]))
    }

    /// Interior of a sorted subset.
    pub fn interior(&self, subset: &[usize]) -> Vec<usize> {
        subset.iter().copied().filter(|&x| is_subset(&self.nbhd[x], subset)).collect()
    }

    /// All open sets, ordered by size and then lexicographically.
    pub fn opens(&self, cap: u64) -> Result<Vec<Vec<usize>>> {
        let n = self.nbhd.len();
        let mut seen: HashSet<Vec<bool>> = HashSet::new();
        let mut all: Vec<Vec<bool>> = vec![vec![false; n]];
        seen.insert(all[0].clone());
        for x in 0..n {
            let snapshot = all.len();
            for k in 0..snapshot {
                let mut next = all[k].clone();
                for &y in &self.nbhd[x] {
                    next[y] = true;
                }
                if seen.insert(next.clone()) {
                    check_cap(|| "open-set family".into(), seen.len() as u128, cap)?;
                    all.push(next);
                }
            }
        }
        let mut opens: Vec<Vec<usize>> = all.into_iter().map(|bits| (0..n).filter(|&i| bits[i]).collect()).collect();
        opens.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(opens)
    }

    /// Subspace topology on the sorted `members`, reindexed `0..members.len()`.
    pub fn subspace(&self, members: &[usize]) -> Topology {
        let mut position = vec![usize::MAX; self.nbhd.len()];
        for (k, &m) in members.iter().enumerate() {
            position[m] = k;
        }
        let nbhd = members
            .iter()
            .map(|&m| self.nbhd[m].iter().filter_map(|&y| (position[y] != usize::MAX).then_some(position[y])).collect())
            .collect();
        Topology { nbhd }
    }
}

fn normalized(set: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut v = set.to_vec();
    v.sort_unstable();
    v.dedup();
    if let Some(&bad) = v.last().filter(|&&b| b >= n) {
        return Err(GlueError::structural(format!("point {bad} outside a carrier of size {n}")));
    }
    Ok(v)
}

pub(crate) fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    v.dedup();
    v
}

pub(crate) fn intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

pub(crate) fn is_subset(a: &[usize], b: &[usize]) -> bool {
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
    }
    true
}

/// A finite topological space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinTop {
    pub carrier: FinSet,
    pub topology: Topology,
}

impl FinTop {
    pub fn new(carrier: FinSet, topology: Topology) -> Result<Self> {
        if carrier.len() != topology.len() {
            return Err(GlueError::structural(format!(
                "topology on {} points attached to a carrier of size {}",
                topology.len(),
                carrier.len()
            )));
        }
        Ok(FinTop { carrier, topology })
    }

    pub fn discrete(carrier: FinSet) -> Self {
        let topology = Topology::discrete(carrier.len());
        FinTop { carrier, topology }
    }

    /// Opens given by labels.
    pub fn from_open_labels(carrier: FinSet, opens: &[Vec<String>]) -> Result<Self> {
        let opens = labels_to_points(&carrier, opens)?;
        let topology = Topology::from_opens(carrier.len(), &opens)?;
        Ok(FinTop { carrier, topology })
    }

    /// The points `{0, 1}` with opens `∅, {1}, {0, 1}`.
    pub fn sierpinski() -> Self {
        let carrier = FinSet::range(2);
        let topology = Topology::from_neighbourhoods(vec![vec![0, 1], vec![1]]).expect("valid");
        FinTop { carrier, topology }
    }

    pub fn len(&self) -> usize {
        self.carrier.len()
    }

    pub fn is_empty(&self) -> bool {
        self.carrier.is_empty()
    }

    pub fn opens(&self, cap: u64) -> Result<Vec<Vec<usize>>> {
        self.topology.opens(cap)
    }

    pub fn subspace(&self, members: &[usize]) -> FinTop {
        FinTop { carrier: self.carrier.subset(members), topology: self.topology.subspace(members) }
    }
}

fn labels_to_points(carrier: &FinSet, sets: &[Vec<String>]) -> Result<Vec<Vec<usize>>> {
    sets.iter().map(|s| s.iter().map(|l| carrier.require(l)).collect()).collect()
}

#[derive(Serialize, Deserialize)]
struct FinTopRepr {
    elements: FinSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    opens: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    basis: Option<Vec<Vec<String>>>,
}

impl Serialize for FinTop {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut basis: Vec<Vec<usize>> = self.topology.nbhd.clone();
        basis.sort();
        basis.dedup();
        let basis = basis.iter().map(|u| u.iter().map(|&x| self.carrier.label(x).to_string()).collect()).collect();
        FinTopRepr { elements: self.carrier.clone(), opens: None, basis: Some(basis) }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FinTop {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = FinTopRepr::deserialize(deserializer)?;
        let carrier = repr.elements;
        let n = carrier.len();
        let topology = match (repr.opens, repr.basis) {
            (Some(_), Some(_)) => return Err(serde::de::Error::custom("give either `opens` or `basis`, not both")),
            (Some(opens), None) => labels_to_points(&carrier, &opens).and_then(|o| Topology::from_opens(n, &o)),
            (None, Some(basis)) => labels_to_points(&carrier, &basis).map(|b| Topology::generated_by(n, b)),
            (None, None) => Ok(Topology::discrete(n)),
        }
        .map_err(serde::de::Error::custom)?;
        Ok(FinTop { carrier, topology })
    }
}

/// A continuous map between finite spaces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopMap {
    pub source: FinTop,
    pub target: FinTop,
    pub map: FinFn,
}

impl TopMap {
    pub fn new(source: FinTop, target: FinTop, map: FinFn) -> Result<Self> {
        if map.domain() != &source.carrier || map.codomain() != &target.carrier {
            return Err(GlueError::structural("map carriers differ from the spaces"));
        }
        if !is_continuous(&map, &source.topology, &target.topology) {
            return Err(GlueError::structural("map is not continuous"));
        }
        Ok(TopMap { source, target, map })
    }

    pub fn identity(space: &FinTop) -> Self {
        TopMap { source: space.clone(), target: space.clone(), map: FinFn::identity(&space.carrier) }
    }

    pub fn is_open(&self) -> bool {
        is_open_map(&self.map, &self.source.topology, &self.target.topology)
    }

    pub fn then(&self, other: &TopMap) -> Result<TopMap> {
        Ok(TopMap { source: self.source.clone(), target: other.target.clone(), map: self.map.then(&other.map)? })
    }
}

pub fn is_continuous(f: &FinFn, source: &Topology, target: &Topology) -> bool {
    f.domain().elements().all(|x| {
        let fx = target.neighbourhood(f.apply(x));
        source.neighbourhood(x).iter().all(|&y| fx.binary_search(&f.apply(y)).is_ok())
    })
}

pub fn is_open_map(f: &FinFn, source: &Topology, target: &Topology) -> bool {
    f.domain().elements().all(|x| target.is_open(&f.image_of(source.neighbourhood(x))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InduceMode {
    Final,
    Initial,
}

/// Final (maps into `carrier`) or initial (maps out of `carrier`) topology
/// with respect to a family of maps and the topologies on their other ends.
pub fn induce_topology(mode: InduceMode, carrier: &FinSet, maps: &[FinFn], spaces: &[&Topology]) -> Result<Topology> {
    if maps.len() != spaces.len() {
        return Err(GlueError::structural("one topology is needed per map"));
    }
    for (f, t) in maps.iter().zip(spaces) {
        let (near, far) = match mode {
            InduceMode::Final => (f.codomain(), f.domain()),
            InduceMode::Initial => (f.domain(), f.codomain()),
        };
        if near != carrier {
            return Err(GlueError::structural(format!(
                "direction mismatch: a {mode:?} topology needs maps {} the carrier",
                if mode == InduceMode::Final { "into" } else { "out of" }
            )));
        }
        if far.len() != t.len() {
            return Err(GlueError::structural("topology size differs from its map's far end"));
        }
    }
    Ok(match mode {
        InduceMode::Final => final_topology(carrier.len(), maps, spaces),
        InduceMode::Initial => initial_topology(carrier.len(), maps, spaces),
    })
}

fn final_topology(n: usize, maps: &[FinFn], spaces: &[&Topology]) -> Topology {
    // Specialisation edges fx -> fy for y in U_x; open sets are the up-closed sets.
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (f, t) in maps.iter().zip(spaces) {
        for x in f.domain().elements() {
            for &y in t.neighbourhood(x) {
                let (a, b) = (f.apply(x), f.apply(y));
                if a != b {
                    succ[a].push(b);
                }
            }
        }
    }
    for s in &mut succ {
        s.sort_unstable();
        s.dedup();
    }
    let nbhd = (0..n)
        .map(|start| {
            let mut seen = vec![false; n];
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(a) = queue.pop_front() {
                for &b in &succ[a] {
                    if !std::mem::replace(&mut seen[b], true) {
                        queue.push_back(b);
                    }
                }
            }
            (0..n).filter(|&q| seen[q]).collect()
        })
        .collect();
    Topology { nbhd }
}

fn initial_topology(n: usize, maps: &[FinFn], spaces: &[&Topology]) -> Topology {
    let nbhd = (0..n)
        .map(|p| {
            (0..n)
                .filter(|&q| {
                    maps.iter().zip(spaces).all(|(f, t)| t.neighbourhood(f.apply(p)).binary_search(&f.apply(q)).is_ok())
                })
                .collect()
        })
        .collect();
    Topology { nbhd }
}

/// Exhaustively checked properties of a map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapProperties {
    pub injective: bool,
    pub surjective: bool,
    pub continuous: bool,
    pub open: bool,
    pub embedding: bool,
}

/// Without topologies both ends are treated as discrete.
pub fn map_properties(f: &FinFn, topologies: Option<(&Topology, &Topology)>) -> MapProperties {
    let injective = f.is_injective();
    let surjective = f.is_surjective();
    let Some((source, target)) = topologies else {
        return MapProperties { injective, surjective, continuous: true, open: true, embedding: injective };
    };
    let continuous = is_continuous(f, source, target);
    let open = is_open_map(f, source, target);
    let embedding = injective && continuous && {
        let image = f.image();
        f.domain()
            .elements()
            .all(|x| f.image_of(source.neighbourhood(x)) == intersection(target.neighbourhood(f.apply(x)), &image))
    };
    MapProperties { injective, surjective, continuous, open, embedding }
}

/// Labelled open sets, handy for reports.
pub fn open_labels(space: &FinTop, cap: u64) -> Result<Vec<Vec<String>>> {
    Ok(space
        .opens(cap)?
        .into_iter()
        .map(|o| o.into_iter().map(|x| space.carrier.label(x).to_string()).collect())
        .collect())
}

/// Maps each open set (by its sorted points) to its position in `opens`.
pub fn open_index(opens: &[Vec<usize>]) -> BTreeMap<Vec<usize>, usize> {
    opens.iter().cloned().enumerate().map(|(k, o)| (o, k)).collect()
}
