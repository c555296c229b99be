//! Input documents: the versioned envelope and the payload shape of each kind.

use std::collections::{BTreeMap, HashMap};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::CliError;
use crate::error::{GlueError, Result};
use crate::fincat::{FinFn, FinSet, FinTop, Topology, SEPARATOR};
use crate::gluing::{Ambient, GluingData, Side};
use crate::indexcat::{p2_of_map, IndexObject, Mode, Morphism};
use crate::presheaf::{GluingDatum, NatTrans, OpenLattice, PresheafStore};
use crate::refine::{MetaGluingData, MetaLink, NodePoint, Refinement};
use crate::site::{Covering, CoveringSource, Sink, SinkSource, SiteMorphism, SiteSpec};

pub const FORMAT_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Gluing,
    Sink,
    Site,
    Presheaf,
    GluingDatum,
    Refinement,
    MetaGluing,
    MapFamily,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Gluing => "gluing",
            Kind::Sink => "sink",
            Kind::Site => "site",
            Kind::Presheaf => "presheaf",
            Kind::GluingDatum => "gluing-datum",
            Kind::Refinement => "refinement",
            Kind::MetaGluing => "meta-gluing",
            Kind::MapFamily => "map-family",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub version: String,
    pub kind: Kind,
    pub payload: Value,
}

fn pointer(path: &serde_path_to_error::Path, prefix: &str) -> String {
    use serde_path_to_error::Segment;
    let mut out = prefix.to_string();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } | Segment::Enum { variant: key } => {
                out.push_str(&key.replace('~', "~0").replace('/', "~1"))
            }
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        "/".into()
    } else {
        out
    }
}

fn from_value<T: DeserializeOwned>(value: &Value, prefix: &str) -> std::result::Result<T, CliError> {
    serde_path_to_error::deserialize(value)
        .map_err(|e| CliError::Schema { pointer: pointer(e.path(), prefix), message: e.inner().to_string() })
}

fn reserved(value: &Value, at: &str) -> std::result::Result<(), CliError> {
    let escape = |k: &str| k.replace('~', "~0").replace('/', "~1");
    match value {
        Value::String(s) if s.contains(SEPARATOR) => {
            Err(CliError::Reserved { pointer: at.to_string(), label: s.clone() })
        }
        Value::Array(items) => items.iter().enumerate().try_for_each(|(k, v)| reserved(v, &format!("{at}/{k}"))),
        Value::Object(map) => map.iter().try_for_each(|(k, v)| {
            let here = format!("{at}/{}", escape(k));
            if k.contains(SEPARATOR) {
                return Err(CliError::Reserved { pointer: here, label: k.clone() });
            }
            reserved(v, &here)
        }),
        _ => Ok(()),
    }
}

/// Parses and checks the envelope; payloads are read per kind later.
pub fn parse_document(text: &str) -> std::result::Result<Document, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let doc: Document = from_value(&value, "")?;
    if doc.version != FORMAT_VERSION {
        return Err(CliError::Schema {
            pointer: "/version".into(),
            message: format!("unsupported version {:?}, expected {FORMAT_VERSION:?}", doc.version),
        });
    }
    reserved(&doc.payload, "/payload")?;
    Ok(doc)
}

impl Document {
    pub fn payload<T: DeserializeOwned>(&self) -> std::result::Result<T, CliError> {
        from_value(&self.payload, "/payload")
    }
}

type LabelMap = BTreeMap<String, String>;

fn finfn(domain: &FinSet, codomain: &FinSet, map: &LabelMap) -> Result<FinFn> {
    FinFn::from_pairs(domain.clone(), codomain.clone(), map.iter().map(|(x, y)| (x.as_str(), y.as_str())))
}

fn label_map(f: &FinFn) -> LabelMap {
    f.pairs().map(|(x, y)| (x.to_string(), y.to_string())).collect()
}

/// A finite space: discrete unless `opens` or `basis` is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDoc {
    pub elements: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opens: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<String>>>,
}

impl SpaceDoc {
    pub fn to_space(&self) -> Result<FinTop> {
        let carrier = FinSet::new(self.elements.iter().cloned())?;
        match (&self.opens, &self.basis) {
            (Some(_), Some(_)) => Err(GlueError::structural("give either opens or basis, not both")),
            (Some(opens), None) => FinTop::from_open_labels(carrier, opens),
            (None, Some(basis)) => {
                let points = basis
                    .iter()
                    .map(|b| b.iter().map(|l| carrier.require(l)).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                let n = carrier.len();
                FinTop::new(carrier, Topology::generated_by(n, points))
            }
            (None, None) => Ok(FinTop::discrete(carrier)),
        }
    }

    pub fn from_space(space: &FinTop, ambient: Ambient) -> SpaceDoc {
        let elements = space.carrier.labels().to_vec();
        let basis = (ambient == Ambient::Top && !space.topology.is_discrete()).then(|| {
            let mut nbhds: Vec<Vec<usize>> =
                space.carrier.elements().map(|x| space.topology.neighbourhood(x).to_vec()).collect();
            nbhds.sort();
            nbhds.dedup();
            nbhds.iter().map(|u| u.iter().map(|&x| space.carrier.label(x).to_string()).collect()).collect()
        });
        SpaceDoc { elements, opens: None, basis }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDoc {
    pub at: Vec<String>,
    pub elements: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opens: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrowDoc {
    pub from: Vec<String>,
    pub to: Vec<String>,
    pub map: LabelMap,
}

/// Gluing data over the (split) truncated power set of `index`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GluingDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient: Option<Ambient>,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    pub index: Vec<String>,
    pub objects: Vec<ObjectDoc>,
    #[serde(default)]
    pub edges: Vec<ArrowDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub swaps: Vec<ArrowDoc>,
    /// Target set for `hom`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codomain: Option<Vec<String>>,
}

fn object_labels(index: &FinSet, o: IndexObject) -> Vec<String> {
    match o {
        IndexObject::Single(i) => vec![index.label(i).to_string()],
        IndexObject::Pair(i, j) => vec![index.label(i).to_string(), index.label(j).to_string()],
    }
}

impl GluingDoc {
    pub fn to_data(&self, side: Option<Side>, ambient: Option<Ambient>) -> Result<GluingData> {
        let side = side.or(self.side).unwrap_or(Side::Colimit);
        let ambient = ambient.or(self.ambient).unwrap_or(Ambient::Sets);
        let index = FinSet::new(self.index.iter().cloned())?;
        let mut b = GluingData::builder(index.clone(), self.mode, ambient, side)?;
        let cat = b.cat().clone();
        let mut spaces: HashMap<IndexObject, FinTop> = HashMap::new();
        for o in &self.objects {
            let at = cat.parse_object(&o.at)?;
            let space =
                SpaceDoc { elements: o.elements.clone(), opens: o.opens.clone(), basis: o.basis.clone() }.to_space()?;
            if spaces.insert(at, space.clone()).is_some() {
                return Err(GlueError::structural(format!("object at [{}] given twice", o.at.join(", "))));
            }
            b.space(at, space);
        }
        let lookup = |o: IndexObject, at: &[String]| {
            spaces
                .get(&o)
                .map(|s| s.carrier.clone())
                .ok_or_else(|| GlueError::structural(format!("no object at [{}]", at.join(", "))))
        };
        for e in &self.edges {
            let (from, to) = (cat.parse_object(&e.from)?, cat.parse_object(&e.to)?);
            let (pair, single) = match side {
                Side::Colimit => (from, to),
                Side::Limit => (to, from),
            };
            let (IndexObject::Pair(p, q), IndexObject::Single(i)) = (pair, single) else {
                return Err(GlueError::structural(format!(
                    "edge [{}] -> [{}] must run between an overlap and a part in the {} direction",
                    e.from.join(", "),
                    e.to.join(", "),
                    match side {
                        Side::Colimit => "overlap-to-part",
                        Side::Limit => "part-to-overlap",
                    }
                )));
            };
            let j = match self.mode {
                Mode::Split if i == p => q,
                Mode::Nonsplit if i == p => q,
                Mode::Nonsplit if i == q => p,
                _ => {
                    return Err(GlueError::structural(format!(
                        "edge between [{}] and [{}] does not follow an inclusion",
                        e.from.join(", "),
                        e.to.join(", ")
                    )))
                }
            };
            let f = finfn(&lookup(from, &e.from)?, &lookup(to, &e.to)?, &e.map)?;
            b.edge(i, j, f);
        }
        for s in &self.swaps {
            let (from, to) = (cat.parse_object(&s.from)?, cat.parse_object(&s.to)?);
            match (self.mode, from, to) {
                (Mode::Split, IndexObject::Pair(i, j), IndexObject::Pair(k, l)) if (k, l) == (j, i) => {
                    let f = finfn(&lookup(from, &s.from)?, &lookup(to, &s.to)?, &s.map)?;
                    b.swap(i, j, f);
                }
                _ => {
                    return Err(GlueError::structural(format!(
                        "swap [{}] -> [{}] must exchange an ordered pair of split data",
                        s.from.join(", "),
                        s.to.join(", ")
                    )))
                }
            }
        }
        b.build()
    }

    pub fn from_data(data: &GluingData) -> GluingDoc {
        let index = data.index();
        let cat = data.cat();
        let objects = cat
            .objects()
            .iter()
            .map(|&o| {
                let s = SpaceDoc::from_space(data.space(o), data.ambient());
                ObjectDoc { at: object_labels(index, o), elements: s.elements, opens: None, basis: s.basis }
            })
            .collect();
        let mut edges = Vec::new();
        let mut swaps = Vec::new();
        for &g in cat.generators() {
            match g {
                Morphism::Incl(i, j) => {
                    let (pair, single) = (object_labels(index, cat.pair(i, j)), vec![index.label(i).to_string()]);
                    let (from, to) = match data.side() {
                        Side::Colimit => (pair, single),
                        Side::Limit => (single, pair),
                    };
                    edges.push(ArrowDoc { from, to, map: label_map(data.edge(i, j)) });
                }
                Morphism::Tau(i, j) if i <= j => swaps.push(ArrowDoc {
                    from: object_labels(index, IndexObject::Pair(i, j)),
                    to: object_labels(index, IndexObject::Pair(j, i)),
                    map: label_map(data.swap(i, j)),
                }),
                _ => {}
            }
        }
        GluingDoc {
            ambient: Some(data.ambient()),
            mode: data.mode(),
            side: Some(data.side()),
            index: index.labels().to_vec(),
            objects,
            edges,
            swaps,
            codomain: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceDoc {
    pub label: String,
    pub space: SpaceDoc,
    pub map: LabelMap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestDoc {
    pub space: SpaceDoc,
    pub map: LabelMap,
}

/// A family of maps into `target`, with optional base-change tests and
/// inner sinks to compose with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinkDoc {
    #[serde(default)]
    pub ambient: Option<Ambient>,
    pub target: SpaceDoc,
    pub sources: Vec<SourceDoc>,
    #[serde(default)]
    pub tests: Vec<TestDoc>,
    #[serde(default)]
    pub inner: Vec<SinkDoc>,
}

impl SinkDoc {
    pub fn to_sink(&self, ambient: Option<Ambient>) -> Result<Sink> {
        let ambient = ambient.or(self.ambient).unwrap_or(Ambient::Sets);
        let target = self.target.to_space()?;
        let sources = self
            .sources
            .iter()
            .map(|s| {
                let space = s.space.to_space()?;
                let map = finfn(&space.carrier, &target.carrier, &s.map)?;
                Ok(SinkSource { label: s.label.clone(), space, map })
            })
            .collect::<Result<Vec<_>>>()?;
        Sink::new(ambient, target, sources)
    }

    pub fn tests(&self, sink: &Sink) -> Result<Vec<(FinTop, FinFn)>> {
        self.tests
            .iter()
            .map(|t| {
                let space = t.space.to_space()?;
                let map = finfn(&space.carrier, &sink.target.carrier, &t.map)?;
                Ok((space, map))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSpaceDoc {
    pub name: String,
    pub space: SpaceDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphismDoc {
    pub label: String,
    pub from: String,
    pub to: String,
    pub map: LabelMap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringSourceDoc {
    pub object: String,
    pub map: LabelMap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringDoc {
    pub label: String,
    pub target: String,
    pub sources: Vec<CoveringSourceDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteDoc {
    #[serde(default)]
    pub ambient: Option<Ambient>,
    pub objects: Vec<NamedSpaceDoc>,
    #[serde(default)]
    pub morphisms: Vec<MorphismDoc>,
    pub coverings: Vec<CoveringDoc>,
}

impl SiteDoc {
    pub fn to_spec(&self, ambient: Option<Ambient>) -> Result<SiteSpec> {
        let ambient = ambient.or(self.ambient).unwrap_or(Ambient::Sets);
        let objects =
            self.objects.iter().map(|o| Ok((o.name.clone(), o.space.to_space()?))).collect::<Result<Vec<_>>>()?;
        let carrier = |name: &str| {
            objects
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, s)| s.carrier.clone())
                .ok_or_else(|| GlueError::structural(format!("unknown object {name}")))
        };
        let morphisms = self
            .morphisms
            .iter()
            .map(|m| {
                let map = finfn(&carrier(&m.from)?, &carrier(&m.to)?, &m.map)?;
                Ok(SiteMorphism { label: m.label.clone(), from: m.from.clone(), to: m.to.clone(), map })
            })
            .collect::<Result<Vec<_>>>()?;
        let coverings = self
            .coverings
            .iter()
            .map(|c| {
                let sources = c
                    .sources
                    .iter()
                    .map(|s| {
                        let map = finfn(&carrier(&s.object)?, &carrier(&c.target)?, &s.map)?;
                        Ok(CoveringSource { object: s.object.clone(), map })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Covering { label: c.label.clone(), target: c.target.clone(), sources })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = SiteSpec { ambient, objects, morphisms, coverings };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionsDoc {
    pub open: Vec<String>,
    pub elements: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestrictionDoc {
    pub from: Vec<String>,
    pub to: Vec<String>,
    pub map: LabelMap,
}

/// A presheaf given by one of: `functions` (all maps into a set),
/// `constant` (the same set everywhere), or explicit `sections` with
/// `restrictions` (missing ones are composed through intermediate opens).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresheafDoc {
    #[serde(default)]
    pub space: Option<SpaceDoc>,
    #[serde(default)]
    pub domain: Option<Vec<String>>,
    #[serde(default)]
    pub functions: Option<Vec<String>>,
    #[serde(default)]
    pub constant: Option<Vec<String>>,
    #[serde(default)]
    pub sections: Vec<SectionsDoc>,
    #[serde(default)]
    pub restrictions: Vec<RestrictionDoc>,
}

impl PresheafDoc {
    pub fn lattice(&self, cap: u64) -> Result<OpenLattice> {
        let space = self.space.as_ref().ok_or_else(|| GlueError::structural("presheaf needs a space"))?;
        OpenLattice::new(space.to_space()?, cap)
    }

    pub fn to_store(&self, lattice: &OpenLattice, default_domain: usize) -> Result<PresheafStore> {
        let domain = match &self.domain {
            Some(labels) => lattice.id_of_labels(labels)?,
            None => default_domain,
        };
        let explicit = !self.sections.is_empty() || !self.restrictions.is_empty();
        match (&self.functions, &self.constant, explicit) {
            (Some(values), None, false) => {
                PresheafStore::functions(lattice, domain, &FinSet::new(values.iter().cloned())?)
            }
            (None, Some(set), false) => PresheafStore::constant(lattice, domain, &FinSet::new(set.iter().cloned())?),
            (None, None, _) => {
                let mut sections = BTreeMap::new();
                for s in &self.sections {
                    let u = lattice.id_of_labels(&s.open)?;
                    if sections.insert(u, FinSet::new(s.elements.iter().cloned())?).is_some() {
                        return Err(GlueError::structural(format!("sections over {} given twice", lattice.name(u))));
                    }
                }
                let mut res = BTreeMap::new();
                for r in &self.restrictions {
                    let (w, v) = (lattice.id_of_labels(&r.from)?, lattice.id_of_labels(&r.to)?);
                    if !lattice.contains(w, v) {
                        return Err(GlueError::structural(format!(
                            "restriction {} -> {} goes to a larger open",
                            lattice.name(w),
                            lattice.name(v)
                        )));
                    }
                    let (sw, sv) = sections.get(&w).zip(sections.get(&v)).ok_or_else(|| {
                        GlueError::structural(format!(
                            "restriction {} -> {} between opens without sections",
                            lattice.name(w),
                            lattice.name(v)
                        ))
                    })?;
                    res.insert((w, v), finfn(sw, sv, &r.map)?);
                }
                PresheafStore::new(lattice.clone(), domain, sections, res)
            }
            _ => Err(GlueError::structural("give exactly one of functions, constant, or sections")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDoc {
    pub name: String,
    pub open: Vec<String>,
    pub presheaf: PresheafDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDoc {
    pub from: String,
    pub to: String,
    pub over: Vec<String>,
    pub map: LabelMap,
}

/// Local presheaves on charts of one space with transition bijections;
/// omitted transitions are inverses of given ones, or identities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GluingDatumDoc {
    pub space: SpaceDoc,
    pub charts: Vec<ChartDoc>,
    #[serde(default)]
    pub transitions: Vec<TransitionDoc>,
}

fn chart_index(names: &[String], name: &str) -> Result<usize> {
    names.iter().position(|n| n == name).ok_or_else(|| GlueError::structural(format!("unknown chart {name}")))
}

impl GluingDatumDoc {
    pub fn to_datum(&self, cap: u64) -> Result<GluingDatum> {
        let lattice = OpenLattice::new(self.space.to_space()?, cap)?;
        let names: Vec<String> = self.charts.iter().map(|c| c.name.clone()).collect();
        let mut charts = Vec::new();
        let mut locals = Vec::new();
        for c in &self.charts {
            if c.presheaf.space.is_some() {
                return Err(GlueError::structural(format!("chart {} repeats the space", c.name)));
            }
            let u = lattice.id_of_labels(&c.open)?;
            charts.push((c.name.clone(), u));
            locals.push(c.presheaf.to_store(&lattice, u)?);
        }
        let mut given: BTreeMap<(usize, usize, usize), FinFn> = BTreeMap::new();
        for t in &self.transitions {
            let (i, j) = (chart_index(&names, &t.from)?, chart_index(&names, &t.to)?);
            let w = lattice.id_of_labels(&t.over)?;
            let meet = lattice.meet(charts[i].1, charts[j].1);
            if !lattice.contains(meet, w) {
                return Err(GlueError::structural(format!(
                    "transition {} -> {} over {} leaves the overlap",
                    t.from,
                    t.to,
                    lattice.name(w)
                )));
            }
            let f = finfn(locals[i].sections(w), locals[j].sections(w), &t.map)?;
            if given.insert((i, j, w), f).is_some() {
                return Err(GlueError::structural(format!(
                    "transition {} -> {} over {} given twice",
                    t.from,
                    t.to,
                    lattice.name(w)
                )));
            }
        }
        let mut d = GluingDatum::with_identity_transitions(&lattice, charts.clone(), locals.clone());
        for i in 0..charts.len() {
            for j in 0..charts.len() {
                let meet = lattice.meet(charts[i].1, charts[j].1);
                for w in lattice.within(meet) {
                    let f = if let Some(f) = given.get(&(i, j, w)) {
                        f.clone()
                    } else if let Some(back) = given.get(&(j, i, w)) {
                        back.inverse().ok_or_else(|| {
                            GlueError::structural(format!("transition {} -> {} is not a bijection", names[j], names[i]))
                        })?
                    } else if locals[i].sections(w) == locals[j].sections(w) {
                        FinFn::identity(locals[i].sections(w))
                    } else {
                        return Err(GlueError::structural(format!(
                            "no transition {} -> {} over {}",
                            names[i],
                            names[j],
                            lattice.name(w)
                        )));
                    };
                    d.transitions.get_mut(&(i, j)).expect("all pairs").insert(w, f);
                }
            }
        }
        Ok(d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDoc {
    pub over: Vec<String>,
    pub map: LabelMap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartDoc {
    pub name: String,
    pub open: Vec<String>,
    pub components: Vec<ComponentDoc>,
}

/// Transformations `S|U_i → T|U_i` on charts, to be glued into `S → T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFamilyDoc {
    pub space: SpaceDoc,
    pub source: PresheafDoc,
    pub target: PresheafDoc,
    pub charts: Vec<PartDoc>,
}

pub struct MapFamily {
    pub charts: Vec<usize>,
    pub source: PresheafStore,
    pub target: PresheafStore,
    pub parts: Vec<NatTrans>,
}

impl MapFamilyDoc {
    pub fn to_family(&self, cap: u64) -> Result<MapFamily> {
        let lattice = OpenLattice::new(self.space.to_space()?, cap)?;
        let top = lattice.top();
        if self.source.space.is_some() || self.target.space.is_some() {
            return Err(GlueError::structural("source and target take the family's space"));
        }
        let source = self.source.to_store(&lattice, top)?;
        let target = self.target.to_store(&lattice, top)?;
        let mut charts = Vec::new();
        let mut parts = Vec::new();
        for c in &self.charts {
            let u = lattice.id_of_labels(&c.open)?;
            let (s, t) = (crate::presheaf::restrict_to(&source, u)?, crate::presheaf::restrict_to(&target, u)?);
            let mut components = BTreeMap::new();
            for comp in &c.components {
                let w = lattice.id_of_labels(&comp.over)?;
                if !lattice.contains(u, w) {
                    return Err(GlueError::structural(format!(
                        "component of {} over {} leaves the chart",
                        c.name,
                        lattice.name(w)
                    )));
                }
                components.insert(w, finfn(s.sections(w), t.sections(w), &comp.map)?);
            }
            charts.push(u);
            parts.push(NatTrans { source: s, target: t, components });
        }
        Ok(MapFamily { charts, source, target, parts })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementComponentDoc {
    pub at: Vec<String>,
    pub map: LabelMap,
}

/// `γ : I → J` from the target's indices to the source's, with one
/// component per object of the target's index category.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementDoc {
    pub source: GluingDoc,
    pub target: GluingDoc,
    pub gamma: LabelMap,
    pub components: Vec<RefinementComponentDoc>,
}

impl RefinementDoc {
    pub fn to_refinement(&self, ambient: Option<Ambient>) -> Result<Refinement> {
        let source = self.source.to_data(None, ambient)?;
        let target = self.target.to_data(None, ambient)?;
        if source.side() != target.side() {
            return Err(GlueError::structural("source and target are on different sides"));
        }
        let gamma = finfn(target.index(), source.index(), &self.gamma)?;
        let functor = p2_of_map(&gamma)?;
        let cat = target.cat();
        let mut components: Vec<Option<FinFn>> = vec![None; cat.objects().len()];
        for c in &self.components {
            let a = cat.parse_object(&c.at)?;
            let id = cat.object_id(a).expect("parsed object");
            let (from, to) = match target.side() {
                Side::Limit => (source.set(functor.object(a)), target.set(a)),
                Side::Colimit => (target.set(a), source.set(functor.object(a))),
            };
            components[id] = Some(finfn(from, to, &c.map)?);
        }
        let components = components
            .into_iter()
            .enumerate()
            .map(|(k, c)| {
                c.ok_or_else(|| {
                    GlueError::structural(format!("no component at {}", cat.object_label(cat.objects()[k])))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Refinement { source, target, gamma, components })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointDoc {
    pub node: String,
    pub index: String,
    pub element: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDoc {
    pub label: String,
    pub left: PointDoc,
    pub right: PointDoc,
}

/// Colimit-side gluings glued together along point identifications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaGluingDoc {
    pub outer: Vec<String>,
    pub nodes: Vec<GluingDoc>,
    #[serde(default)]
    pub links: Vec<LinkDoc>,
}

impl MetaGluingDoc {
    pub fn to_meta(&self) -> Result<MetaGluingData> {
        let outer = FinSet::new(self.outer.iter().cloned())?;
        let nodes = self.nodes.iter().map(|n| n.to_data(Some(Side::Colimit), None)).collect::<Result<Vec<_>>>()?;
        if nodes.len() != outer.len() {
            return Err(GlueError::structural(format!("{} nodes for {} outer indices", nodes.len(), outer.len())));
        }
        let point = |p: &PointDoc| -> Result<NodePoint> {
            let node = outer.require(&p.node)?;
            let index = nodes[node].index().require(&p.index)?;
            let element = nodes[node].part(index).require(&p.element)?;
            Ok(NodePoint { node, index, element })
        };
        let links = self
            .links
            .iter()
            .map(|l| Ok(MetaLink { label: l.label.clone(), left: point(&l.left)?, right: point(&l.right)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(MetaGluingData { outer, nodes, links })
    }
}
