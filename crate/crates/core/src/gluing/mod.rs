//! Gluing functors on `P₂(I)` / `S₂(I)` and their glued-up objects.
//!
//! Colimit-side data stores, for every generator, the map in the ambient
//! category pointing away from the overlaps (`G(i, j) → G(i)`); limit-side
//! data stores maps toward them (`G(i) → G(i, j)`). Swaps are always given
//! as `swap(i, j) : G(i, j) → G(j, i)` regardless of side.

mod colimit;
mod hom;
mod limit;
mod mediate;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use colimit::{colimit_glue, universal_glue_check, UniversalReport};
pub use hom::{hom_set, hom_transport, HomTransport};
pub use limit::{equalizer_glue_oracle, limit_glue};
pub use mediate::{mediating_map, ConeCandidate, Mediation};

use crate::error::{GlueError, Result};
use crate::fincat::{is_continuous, map_properties, FinFn, FinSet, FinTop, MapProperties};
use crate::indexcat::{IndexCat, IndexFunctor, IndexObject, Mode, Morphism};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ambient {
    Sets,
    Top,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Colimit,
    Limit,
}

/// A functor from an index category into finite sets or finite spaces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GluingData {
    cat: IndexCat,
    ambient: Ambient,
    side: Side,
    objects: Vec<FinTop>,
    arrows: Vec<FinFn>,
}

impl GluingData {
    pub fn builder(index: FinSet, mode: Mode, ambient: Ambient, side: Side) -> Result<GluingBuilder> {
        let cat = IndexCat::new(index, mode)?;
        Ok(GluingBuilder {
            objects: vec![None; cat.objects().len()],
            edges: HashMap::new(),
            swaps: HashMap::new(),
            cat,
            ambient,
            side,
        })
    }

    pub fn cat(&self) -> &IndexCat {
        &self.cat
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn mode(&self) -> Mode {
        self.cat.mode()
    }

    pub fn index(&self) -> &FinSet {
        self.cat.index()
    }

    pub fn len(&self) -> usize {
        self.cat.index().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn space(&self, o: IndexObject) -> &FinTop {
        &self.objects[self.cat.object_id(o).expect("object of the index category")]
    }

    pub fn set(&self, o: IndexObject) -> &FinSet {
        &self.space(o).carrier
    }

    /// `G(i)`.
    pub fn part(&self, i: usize) -> &FinSet {
        self.set(IndexObject::Single(i))
    }

    /// The overlap object containing `i` and `j`.
    pub fn overlap(&self, i: usize, j: usize) -> &FinSet {
        self.set(self.cat.pair(i, j))
    }

    /// Image of `𝔦_{i,j}` (or `𝔦ˢ_{i,j}`) in the ambient direction of the side.
    pub fn edge(&self, i: usize, j: usize) -> &FinFn {
        self.generator(Morphism::Incl(i, j))
    }

    /// `G(i, j) → G(j, i)`; split data only.
    pub fn swap(&self, i: usize, j: usize) -> &FinFn {
        match self.side {
            Side::Colimit => self.generator(Morphism::Tau(j, i)),
            Side::Limit => self.generator(Morphism::Tau(i, j)),
        }
    }

    fn generator(&self, g: Morphism) -> &FinFn {
        &self.arrows[self.cat.generator_id(g).expect("generator of the index category")]
    }

    /// Image of any morphism, as a map in the ambient direction of the side.
    pub fn arrow(&self, m: Morphism) -> Result<FinFn> {
        if !self.cat.is_morphism(m) {
            return Err(GlueError::structural(format!("{m:?} is not a morphism here")));
        }
        Ok(match m {
            Morphism::Identity(o) => FinFn::identity(self.set(o)),
            Morphism::Incl(i, j) => self.edge(i, j).clone(),
            Morphism::Tau(..) => self.generator(m).clone(),
            Morphism::TauIncl(i, j) => match self.side {
                Side::Limit => self.edge(i, j).then(self.swap(i, j))?,
                Side::Colimit => self.swap(j, i).then(self.edge(i, j))?,
            },
        })
    }

    /// The same functor with every space made discrete.
    pub fn to_sets(&self) -> GluingData {
        let mut out = self.clone();
        out.ambient = Ambient::Sets;
        for o in &mut out.objects {
            *o = FinTop::discrete(o.carrier.clone());
        }
        out
    }

    /// Whether every arrow is injective, open, continuous, as applicable.
    pub fn arrow_properties(&self) -> Vec<(Morphism, MapProperties)> {
        self.cat
            .generators()
            .iter()
            .zip(&self.arrows)
            .map(|(&g, f)| (g, self.properties(f, self.arrow_ends(g))))
            .collect()
    }

    pub(crate) fn properties(&self, f: &FinFn, ends: (IndexObject, IndexObject)) -> MapProperties {
        match self.ambient {
            Ambient::Sets => map_properties(f, None),
            Ambient::Top => map_properties(f, Some((&self.space(ends.0).topology, &self.space(ends.1).topology))),
        }
    }

    /// Source and target objects of a generator's image.
    fn arrow_ends(&self, g: Morphism) -> (IndexObject, IndexObject) {
        let (s, t) = (self.cat.source(g), self.cat.target(g));
        match self.side {
            Side::Limit => (s, t),
            Side::Colimit => (t, s),
        }
    }

    /// Violated endpoint, continuity and involution laws; empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (&g, f) in self.cat.generators().iter().zip(&self.arrows) {
            let (s, t) = self.arrow_ends(g);
            let name = self.morphism_name(g);
            if f.domain() != self.set(s) {
                out.push(format!(
                    "endpoint: image of {name} should start at G({}) but starts elsewhere",
                    self.cat.object_label(s)
                ));
                continue;
            }
            if f.codomain() != self.set(t) {
                out.push(format!(
                    "endpoint: image of {name} should land in G({}) but lands elsewhere",
                    self.cat.object_label(t)
                ));
                continue;
            }
            if self.ambient == Ambient::Top && !is_continuous(f, &self.space(s).topology, &self.space(t).topology) {
                out.push(format!("continuity: image of {name} is not continuous"));
            }
        }
        if !out.is_empty() || self.mode() == Mode::Nonsplit {
            return out;
        }
        let n = self.len();
        for i in 0..n {
            for j in 0..n {
                let round = self.swap(i, j).then(self.swap(j, i));
                if !matches!(round, Ok(ref r) if r.is_identity()) {
                    out.push(format!(
                        "involution: swap({}, {}) then swap({}, {}) is not the identity",
                        self.index().label(i),
                        self.index().label(j),
                        self.index().label(j),
                        self.index().label(i)
                    ));
                }
            }
        }
        out
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(GlueError::structural(format!("invalid gluing data: {}", violations.join("; "))))
        }
    }

    pub(crate) fn ensure_side(&self, side: Side) -> Result<()> {
        if self.side == side {
            Ok(())
        } else {
            Err(GlueError::structural(format!("expected {side:?}-side data, got {:?}-side", self.side)))
        }
    }

    pub fn morphism_name(&self, m: Morphism) -> String {
        let l = |k: usize| self.index().label(k);
        match m {
            Morphism::Identity(o) => format!("id({})", self.cat.object_label(o)),
            Morphism::Incl(i, j) => format!("incl({}, {})", l(i), l(j)),
            Morphism::Tau(i, j) => format!("tau({}, {})", l(i), l(j)),
            Morphism::TauIncl(i, j) => format!("tau({}, {}) . incl({}, {})", l(i), l(j), l(i), l(j)),
        }
    }

    /// `G ∘ F` for a functor `F` into this data's index category.
    pub fn precompose(&self, functor: &IndexFunctor) -> Result<GluingData> {
        if functor.target != self.cat {
            return Err(GlueError::structural("functor does not land in the index category"));
        }
        let cat = functor.source.clone();
        let objects = cat.objects().iter().map(|&o| self.space(functor.object(o)).clone()).collect();
        let arrows = cat.generators().iter().map(|&g| self.arrow(functor.apply(g)?)).collect::<Result<_>>()?;
        Ok(GluingData { cat, ambient: self.ambient, side: self.side, objects, arrows })
    }

    /// Split colimit-side data whose glued object is `⨿ parts` modulo the
    /// listed identifications `(i, x) ~ (j, y)`.
    ///
    /// Each identification between distinct parts becomes an element of both
    /// overlaps with identity swap; one inside a single part becomes two
    /// elements of `G(i, i)` exchanged by the swap.
    pub fn from_identifications(index: FinSet, parts: Vec<FinSet>, links: &[Identification]) -> Result<GluingData> {
        let n = index.len();
        if parts.len() != n {
            return Err(GlueError::structural("one part is needed per index"));
        }
        let mut overlap: HashMap<(usize, usize), (Vec<String>, Vec<usize>)> = HashMap::new();
        for (k, link) in links.iter().enumerate() {
            let ((i, x), (j, y)) = (link.left, link.right);
            if i >= n || j >= n || x >= parts[i].len() || y >= parts[j].len() {
                return Err(GlueError::structural(format!("identification {k} is out of range")));
            }
            if i == j {
                let entry = overlap.entry((i, i)).or_default();
                for (suffix, point) in [("a", x), ("b", y)] {
                    entry.0.push(format!("{}|{suffix}", link.label));
                    entry.1.push(point);
                }
            } else {
                for (p, q, point) in [(i, j, x), (j, i, y)] {
                    let entry = overlap.entry((p, q)).or_default();
                    entry.0.push(link.label.clone());
                    entry.1.push(point);
                }
            }
        }
        let mut b = GluingData::builder(index, Mode::Split, Ambient::Sets, Side::Colimit)?;
        for (i, part) in parts.iter().enumerate() {
            b.set(IndexObject::Single(i), part.clone());
        }
        for (i, part) in parts.iter().enumerate() {
            for j in 0..n {
                let (labels, points) = overlap.remove(&(i, j)).unwrap_or_default();
                let set = FinSet::new(labels)?;
                b.edge(i, j, FinFn::new(set.clone(), part.clone(), points)?);
                let swap = if i == j {
                    let map = (0..set.len()).map(|k| k ^ 1).collect();
                    FinFn::new(set.clone(), set.clone(), map)?
                } else {
                    FinFn::identity(&set)
                };
                b.swap(i, j, swap);
                b.set(IndexObject::Pair(i, j), set);
            }
        }
        b.build()
    }
}

/// `(i, x) ~ (j, y)` between elements of the parts of a gluing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Identification {
    pub label: String,
    pub left: (usize, usize),
    pub right: (usize, usize),
}

/// Assembles gluing data; missing swaps are filled in where determined.
#[derive(Clone, Debug)]
pub struct GluingBuilder {
    cat: IndexCat,
    ambient: Ambient,
    side: Side,
    objects: Vec<Option<FinTop>>,
    edges: HashMap<(usize, usize), FinFn>,
    swaps: HashMap<(usize, usize), FinFn>,
}

impl GluingBuilder {
    pub fn cat(&self) -> &IndexCat {
        &self.cat
    }

    pub fn space(&mut self, at: IndexObject, space: FinTop) -> &mut Self {
        if let Some(k) = self.cat.object_id(at) {
            self.objects[k] = Some(space);
        }
        self
    }

    pub fn set(&mut self, at: IndexObject, set: FinSet) -> &mut Self {
        self.space(at, FinTop::discrete(set))
    }

    pub fn edge(&mut self, i: usize, j: usize, map: FinFn) -> &mut Self {
        self.edges.insert((i, j), map);
        self
    }

    pub fn swap(&mut self, i: usize, j: usize, map: FinFn) -> &mut Self {
        self.swaps.insert((i, j), map);
        self
    }

    /// Fails on missing pieces; law violations are left to [`GluingData::validate`].
    pub fn build(&self) -> Result<GluingData> {
        let label = |o: IndexObject| self.cat.object_label(o);
        let mut objects = Vec::with_capacity(self.objects.len());
        for (o, space) in self.cat.objects().iter().zip(&self.objects) {
            match space {
                Some(s) => objects.push(s.clone()),
                None => return Err(GlueError::structural(format!("no object at {}", label(*o)))),
            }
        }
        if self.ambient == Ambient::Sets {
            for o in &mut objects {
                *o = FinTop::discrete(o.carrier.clone());
            }
        }
        let cat = &self.cat;
        let carrier = |o: IndexObject| &objects[cat.object_id(o).expect("object")].carrier;
        let mut swaps = self.swaps.clone();
        if cat.mode() == Mode::Split {
            let n = cat.index().len();
            for i in 0..n {
                for j in 0..n {
                    if swaps.contains_key(&(i, j)) {
                        continue;
                    }
                    let filled = if i == j {
                        FinFn::identity(carrier(IndexObject::Pair(i, i)))
                    } else if let Some(back) = self.swaps.get(&(j, i)) {
                        back.inverse().ok_or_else(|| {
                            GlueError::structural(format!(
                                "no swap at ({}, {}) and the one at ({}, {}) is not invertible",
                                cat.index().label(i),
                                cat.index().label(j),
                                cat.index().label(j),
                                cat.index().label(i)
                            ))
                        })?
                    } else {
                        return Err(GlueError::structural(format!(
                            "no swap between ({0}, {1}) and ({1}, {0})",
                            cat.index().label(i),
                            cat.index().label(j)
                        )));
                    };
                    swaps.insert((i, j), filled);
                }
            }
        } else if !swaps.is_empty() {
            return Err(GlueError::structural("non-split data takes no swaps"));
        }
        let mut arrows = Vec::with_capacity(cat.generators().len());
        for &g in cat.generators() {
            let map = match (g, self.side) {
                (Morphism::Incl(i, j), _) => self.edges.get(&(i, j)).cloned(),
                (Morphism::Tau(i, j), Side::Colimit) => swaps.remove(&(j, i)),
                (Morphism::Tau(i, j), Side::Limit) => swaps.remove(&(i, j)),
                _ => None,
            };
            match map {
                Some(f) => arrows.push(f),
                None => {
                    let (Morphism::Incl(i, j) | Morphism::Tau(i, j)) = g else { unreachable!() };
                    return Err(GlueError::structural(format!(
                        "no edge for ({}, {})",
                        cat.index().label(i),
                        cat.index().label(j)
                    )));
                }
            }
        }
        if self.edges.len() > cat.generators().iter().filter(|g| matches!(g, Morphism::Incl(..))).count() {
            return Err(GlueError::structural("edge given for a pair outside the index category"));
        }
        Ok(GluingData { cat: self.cat.clone(), ambient: self.ambient, side: self.side, objects, arrows })
    }
}

/// The computed glued-up object with its legs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluedObject {
    pub side: Side,
    pub apex: FinTop,
    /// Index objects, named by their indices, in the order of `legs`.
    pub objects: Vec<Vec<String>>,
    /// Colimit side: `G(a) → apex`; limit side: `apex → G(a)`.
    pub legs: Vec<FinFn>,
    pub witness: Witness,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
#[allow(clippy::large_enum_variant)]
pub enum Witness {
    /// The coproduct `⨿ G(i)` and its projection onto the apex.
    Quotient { coproduct: FinSet, projection: FinFn },
    /// Coordinates in `∏ G(i)` of every apex member.
    Families { coordinates: Vec<Vec<usize>> },
}

impl GluedObject {
    pub fn len(&self) -> usize {
        self.apex.len()
    }

    pub fn is_empty(&self) -> bool {
        self.apex.is_empty()
    }

    /// Leg at the singleton `{i}`; singletons come first.
    pub fn leg(&self, i: usize) -> &FinFn {
        &self.legs[i]
    }

    /// Colimit side: members of each class, as coproduct labels.
    pub fn classes(&self) -> Vec<Vec<String>> {
        match &self.witness {
            Witness::Quotient { coproduct, projection } => {
                let mut out = vec![Vec::new(); self.apex.len()];
                for x in coproduct.elements() {
                    out[projection.apply(x)].push(coproduct.label(x).to_string());
                }
                out
            }
            Witness::Families { .. } => self.apex.carrier.labels().iter().map(|l| vec![l.clone()]).collect(),
        }
    }

    /// Properties of each singleton leg, with topologies in the top ambient.
    pub fn leg_properties(&self, data: &GluingData) -> Vec<MapProperties> {
        (0..data.len())
            .map(|i| {
                let part = &data.space(IndexObject::Single(i)).topology;
                let topologies = match (data.ambient(), self.side) {
                    (Ambient::Sets, _) => None,
                    (Ambient::Top, Side::Colimit) => Some((part, &self.apex.topology)),
                    (Ambient::Top, Side::Limit) => Some((&self.apex.topology, part)),
                };
                map_properties(&self.legs[i], topologies)
            })
            .collect()
    }

    /// Cocone or cone law for every generator; returns the violated squares.
    pub fn law_violations(&self, data: &GluingData) -> Vec<String> {
        let cat = data.cat();
        let leg = |o: IndexObject| &self.legs[cat.object_id(o).expect("object")];
        let mut out = Vec::new();
        for &g in cat.generators() {
            let f = data.arrow(g).expect("generator");
            let (s, t) = (cat.source(g), cat.target(g));
            let holds = match self.side {
                Side::Colimit => f.then(leg(s)).map(|c| &c == leg(t)),
                Side::Limit => leg(s).then(&f).map(|c| &c == leg(t)),
            };
            if holds != Ok(true) {
                out.push(format!("square at {} fails", data.morphism_name(g)));
            }
        }
        out
    }
}

pub(crate) fn object_names(cat: &IndexCat) -> Vec<Vec<String>> {
    cat.objects()
        .iter()
        .map(|&o| match o {
            IndexObject::Single(i) => vec![cat.index().label(i).to_string()],
            IndexObject::Pair(i, j) => {
                vec![cat.index().label(i).to_string(), cat.index().label(j).to_string()]
            }
        })
        .collect()
}
