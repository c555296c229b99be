//! Refinement morphisms between gluing data, the maps they induce between
//! glued objects, and composition of gluings.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{GlueError, Result};
use crate::fincat::{is_continuous, tuple_label, FinFn, FinSet, FinTop};
use crate::gluing::{
    colimit_glue, mediating_map, Ambient, ConeCandidate, GluedObject, GluingData, Identification, Side, Witness,
};
use crate::indexcat::{p2_of_map, IndexFunctor, IndexObject, Mode, Morphism};
use crate::site::{canonical_sink_functor, effective_epi_check, Sink};

/// A map `γ : I → J` with a natural family between `G ∘ P₂(γ)` and `F`.
///
/// Limit side components run `G(P₂γ(a)) → F(a)`, colimit side ones
/// `F(a) → G(P₂γ(a))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refinement {
    /// `G`, indexed by `J`.
    pub source: GluingData,
    /// `F`, indexed by `I`.
    pub target: GluingData,
    pub gamma: FinFn,
    /// One per object of the target's index category.
    pub components: Vec<FinFn>,
}

impl Refinement {
    fn functor(&self) -> Result<IndexFunctor> {
        p2_of_map(&self.gamma)
    }

    /// The identity refinement of `G`.
    pub fn identity(data: &GluingData) -> Refinement {
        let components = data.cat().objects().iter().map(|&o| FinFn::identity(data.set(o))).collect();
        Refinement { source: data.clone(), target: data.clone(), gamma: FinFn::identity(data.index()), components }
    }

    /// Restriction of `G` to the indices `keep`, with identity components.
    pub fn restriction(data: &GluingData, keep: &[usize]) -> Result<Refinement> {
        if data.mode() != Mode::Nonsplit {
            return Err(GlueError::structural("refinements relate non-split data"));
        }
        let index = data.index().subset(keep);
        let gamma = FinFn::new(index.clone(), data.index().clone(), keep.to_vec())?;
        let mut b = GluingData::builder(index, Mode::Nonsplit, data.ambient(), data.side())?;
        for (a, &i) in keep.iter().enumerate() {
            b.space(IndexObject::Single(a), data.space(IndexObject::Single(i)).clone());
            for (c, &j) in keep.iter().enumerate() {
                if a != c {
                    b.space(IndexObject::Pair(a.min(c), a.max(c)), data.space(data.cat().pair(i, j)).clone());
                    b.edge(a, c, data.edge(i, j).clone());
                }
            }
        }
        let target = b.build()?;
        let components = target.cat().objects().iter().map(|&o| FinFn::identity(target.set(o))).collect();
        Ok(Refinement { source: data.clone(), target, gamma, components })
    }

    pub fn component(&self, o: IndexObject) -> &FinFn {
        &self.components[self.target.cat().object_id(o).expect("object of the target")]
    }

    /// Violated endpoint and naturality squares; empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let (g, f) = (&self.source, &self.target);
        let mut out = Vec::new();
        if g.mode() != Mode::Nonsplit || f.mode() != Mode::Nonsplit {
            out.push("refinements relate non-split data".to_string());
        }
        if g.side() != f.side() || g.ambient() != f.ambient() {
            out.push("source and target differ in side or ambient".to_string());
        }
        if self.gamma.domain() != f.index() || self.gamma.codomain() != g.index() {
            out.push("gamma must run from the target's index set to the source's".to_string());
        }
        if self.components.len() != f.cat().objects().len() {
            out.push("one component is needed per index object of the target".to_string());
        }
        if !out.is_empty() {
            return out;
        }
        let functor = match self.functor() {
            Ok(p) => p,
            Err(e) => return vec![e.to_string()],
        };
        let side = f.side();
        for &a in f.cat().objects() {
            let ga = functor.object(a);
            let rho = self.component(a);
            let (from, to) = match side {
                Side::Limit => (g.space(ga), f.space(a)),
                Side::Colimit => (f.space(a), g.space(ga)),
            };
            let name = f.cat().object_label(a);
            if rho.domain() != &from.carrier || rho.codomain() != &to.carrier {
                out.push(format!("endpoint: component at {name} has the wrong endpoints"));
            } else if f.ambient() == Ambient::Top && !is_continuous(rho, &from.topology, &to.topology) {
                out.push(format!("continuity: component at {name} is not continuous"));
            }
        }
        if !out.is_empty() {
            return out;
        }
        for &m in f.cat().generators() {
            let Morphism::Incl(i, j) = m else { continue };
            let (s, t) = (IndexObject::Single(i), f.cat().pair(i, j));
            let f_arrow = f.edge(i, j);
            let g_arrow = match functor.apply(m).and_then(|gm| g.arrow(gm)) {
                Ok(a) => a,
                Err(e) => return vec![e.to_string()],
            };
            let (rs, rt) = (self.component(s), self.component(t));
            let commutes = match side {
                // F(𝔦) ∘ ρ_i = ρ_ij ∘ G(P₂γ 𝔦)
                Side::Limit => rs.then(f_arrow).and_then(|l| g_arrow.then(rt).map(|r| l == r)),
                // ρ_i ∘ F(𝔦) = G(P₂γ 𝔦) ∘ ρ_ij
                Side::Colimit => f_arrow.then(rs).and_then(|l| rt.then(&g_arrow).map(|r| l == r)),
            };
            if commutes != Ok(true) {
                out.push(format!("naturality: square at {} fails", f.morphism_name(m)));
            }
        }
        out
    }

    fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(GlueError::structural(format!("invalid refinement: {}", v.join("; "))))
        }
    }

    /// `self` followed by `next`: from `G` through `F` to `H`.
    pub fn then(&self, next: &Refinement) -> Result<Refinement> {
        if self.target != next.source {
            return Err(GlueError::structural("refinements are not composable"));
        }
        let gamma = next.gamma.then(&self.gamma)?;
        let inner = next.functor()?;
        let side = self.target.side();
        let components = next
            .target
            .cat()
            .objects()
            .iter()
            .map(|&a| {
                let (sigma, rho) = (next.component(a), self.component(inner.object(a)));
                match side {
                    Side::Limit => rho.then(sigma),
                    Side::Colimit => sigma.then(rho),
                }
            })
            .collect::<Result<_>>()?;
        Ok(Refinement { source: self.source.clone(), target: next.target.clone(), gamma, components })
    }
}

/// The map between glued objects induced by a refinement.
///
/// Limit side: `L_G → L_F`; colimit side: `Q_F → Q_G`.
pub fn induced_map(r: &Refinement, glued_source: &GluedObject, glued_target: &GluedObject) -> Result<FinFn> {
    r.ensure_valid()?;
    let (g, f) = (&r.source, &r.target);
    let functor = r.functor()?;
    let map = match f.side() {
        Side::Limit => {
            let (Witness::Families { coordinates: from }, Witness::Families { coordinates: to }) =
                (&glued_source.witness, &glued_target.witness)
            else {
                return Err(GlueError::structural("limit-side glued objects expected"));
            };
            let position: HashMap<&[usize], usize> = to.iter().enumerate().map(|(k, c)| (c.as_slice(), k)).collect();
            let values = from
                .iter()
                .map(|family| {
                    let image: Vec<usize> = (0..f.len())
                        .map(|i| r.component(IndexObject::Single(i)).apply(family[r.gamma.apply(i)]))
                        .collect();
                    position
                        .get(image.as_slice())
                        .copied()
                        .ok_or_else(|| GlueError::structural("induced family is not compatible"))
                })
                .collect::<Result<Vec<_>>>()?;
            FinFn::new(glued_source.apex.carrier.clone(), glued_target.apex.carrier.clone(), values)?
        }
        Side::Colimit => {
            let legs = (0..f.len())
                .map(|i| r.component(IndexObject::Single(i)).then(glued_source.leg(r.gamma.apply(i))))
                .collect::<Result<Vec<_>>>()?;
            let cone = ConeCandidate { apex: glued_source.apex.clone(), legs };
            mediating_map(f, glued_target, &cone)?.map
        }
    };
    for (k, &a) in f.cat().objects().iter().enumerate() {
        let ga = g.cat().object_id(functor.object(a)).expect("object");
        let rho = r.component(a);
        let holds = match f.side() {
            Side::Limit => {
                map.then(&glued_target.legs[k]).and_then(|l| glued_source.legs[ga].then(rho).map(|r| l == r))
            }
            Side::Colimit => {
                glued_target.legs[k].then(&map).and_then(|l| rho.then(&glued_source.legs[ga]).map(|r| l == r))
            }
        };
        if holds != Ok(true) {
            return Err(GlueError::structural(format!(
                "induced map fails to commute with the legs at {}",
                f.cat().object_label(a)
            )));
        }
    }
    Ok(map)
}

/// A point of a node's part: node, index within the node, element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodePoint {
    pub node: usize,
    pub index: usize,
    pub element: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetaLink {
    pub label: String,
    pub left: NodePoint,
    pub right: NodePoint,
}

/// Colimit-side gluings (the nodes) glued together along point identifications.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetaGluingData {
    pub outer: FinSet,
    pub nodes: Vec<GluingData>,
    pub links: Vec<MetaLink>,
}

impl MetaGluingData {
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.nodes.len() != self.outer.len() {
            out.push(format!("{} nodes for {} outer indices", self.nodes.len(), self.outer.len()));
            return out;
        }
        for (k, node) in self.nodes.iter().enumerate() {
            let name = self.outer.label(k);
            if node.side() != Side::Colimit {
                out.push(format!("node {name} is not colimit-side data"));
            }
            out.extend(node.validate().into_iter().map(|v| format!("node {name}: {v}")));
        }
        for link in &self.links {
            for p in [link.left, link.right] {
                let ok = p.node < self.nodes.len()
                    && p.index < self.nodes[p.node].len()
                    && p.element < self.nodes[p.node].part(p.index).len();
                if !ok {
                    out.push(format!("link {} names a point outside the nodes", link.label));
                }
            }
        }
        out
    }
}

/// Flat and two-stage gluing of meta data, with the canonical bijection between them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Composite {
    pub flat: GluedObject,
    pub nodes: Vec<GluedObject>,
    pub two_stage: GluedObject,
    /// Flat classes to two-stage classes.
    pub comparison: FinFn,
    pub agree: bool,
}

/// Flattens meta data into one identification list over all node parts.
pub fn flatten(meta: &MetaGluingData) -> Result<GluingData> {
    let violations = meta.validate();
    if !violations.is_empty() {
        return Err(GlueError::structural(violations.join("; ")));
    }
    let mut offsets = Vec::new();
    let mut labels = Vec::new();
    let mut parts = Vec::new();
    for (p, node) in meta.nodes.iter().enumerate() {
        offsets.push(labels.len());
        for i in 0..node.len() {
            labels.push(tuple_label([meta.outer.label(p), node.index().label(i)]));
            parts.push(node.part(i).clone());
        }
    }
    let flat_index = FinSet::new(labels)?;
    let mut links = Vec::new();
    for (p, node) in meta.nodes.iter().enumerate() {
        for ((i, x), (j, y)) in node_identifications(node) {
            let label = format!("g{}", links.len());
            links.push(Identification { label, left: (offsets[p] + i, x), right: (offsets[p] + j, y) });
        }
    }
    for link in &meta.links {
        let at = |q: NodePoint| (offsets[q.node] + q.index, q.element);
        links.push(Identification { label: format!("l{}", links.len()), left: at(link.left), right: at(link.right) });
    }
    GluingData::from_identifications(flat_index, parts, &links)
}

/// The generating identifications of colimit-side data, as `(index, element)` pairs.
fn node_identifications(data: &GluingData) -> Vec<((usize, usize), (usize, usize))> {
    let n = data.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if data.mode() == Mode::Nonsplit && i >= j {
                continue;
            }
            for u in data.overlap(i, j).elements() {
                let x = data.edge(i, j).apply(u);
                let v = match data.mode() {
                    Mode::Nonsplit => u,
                    Mode::Split => data.swap(i, j).apply(u),
                };
                out.push(((i, x), (j, data.edge(j, i).apply(v))));
            }
        }
    }
    out
}

/// Glues the flattened data and, separately, each node followed by the
/// outer gluing of the results; compares the two.
pub fn compose_gluings(meta: &MetaGluingData) -> Result<Composite> {
    let flat_data = flatten(meta)?;
    let flat = colimit_glue(&flat_data)?;
    let nodes = meta.nodes.iter().map(|n| colimit_glue(&n.to_sets())).collect::<Result<Vec<_>>>()?;
    let outer_links: Vec<Identification> = meta
        .links
        .iter()
        .map(|l| {
            let at = |q: NodePoint| (q.node, nodes[q.node].leg(q.index).apply(q.element));
            Identification { label: l.label.clone(), left: at(l.left), right: at(l.right) }
        })
        .collect();
    let outer_parts = nodes.iter().map(|q| q.apex.carrier.clone()).collect();
    let outer = GluingData::from_identifications(meta.outer.clone(), outer_parts, &unique_labels(outer_links))?;
    let two_stage = colimit_glue(&outer)?;
    let mut legs = Vec::new();
    for (p, node) in nodes.iter().enumerate() {
        for i in 0..meta.nodes[p].len() {
            legs.push(node.leg(i).then(two_stage.leg(p))?);
        }
    }
    let cone = ConeCandidate { apex: FinTop::discrete(two_stage.apex.carrier.clone()), legs };
    let mediation = mediating_map(&flat_data, &flat, &cone)?;
    Ok(Composite { flat, nodes, two_stage, agree: mediation.isomorphic, comparison: mediation.map })
}

fn unique_labels(mut links: Vec<Identification>) -> Vec<Identification> {
    for (k, l) in links.iter_mut().enumerate() {
        l.label = format!("{}#{k}", l.label);
    }
    links
}

/// Result of composing sinks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SinkComposite {
    pub flattened: Sink,
    pub canonical: GluingData,
    pub glued_up: bool,
}

/// Flattens `(U, ι_i)` and covers `(U_i, ℓ_ij)` into `(U, ι_i ∘ ℓ_ij)`.
pub fn compose_via_sinks(outer: &Sink, inner: &[Sink]) -> Result<SinkComposite> {
    let flattened = outer.compose(inner)?;
    let canonical = canonical_sink_functor(&flattened)?;
    let glued_up = effective_epi_check(&flattened)?;
    Ok(SinkComposite { flattened, canonical, glued_up })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::DEFAULT_CAP;
    use crate::gluing::limit_glue;

    fn set(labels: &[&str]) -> FinSet {
        FinSet::new(labels.iter().copied()).unwrap()
    }

    fn map(d: &FinSet, c: &FinSet, pairs: &[(&str, &str)]) -> FinFn {
        FinFn::from_pairs(d.clone(), c.clone(), pairs.iter().copied()).unwrap()
    }

    /// Limit-side two-chart data: parts of size 3 compared by parity.
    fn parity() -> GluingData {
        let a = set(&["a0", "a1", "a2"]);
        let b = set(&["b0", "b1", "b2"]);
        let bit = set(&["even", "odd"]);
        let mut builder = GluingData::builder(set(&["1", "2"]), Mode::Nonsplit, Ambient::Sets, Side::Limit).unwrap();
        builder
            .set(IndexObject::Single(0), a.clone())
            .set(IndexObject::Single(1), b.clone())
            .set(IndexObject::Pair(0, 1), bit.clone())
            .edge(0, 1, map(&a, &bit, &[("a0", "even"), ("a1", "odd"), ("a2", "even")]))
            .edge(1, 0, map(&b, &bit, &[("b0", "even"), ("b1", "odd"), ("b2", "even")]));
        builder.build().unwrap()
    }

    #[test]
    fn identity_refinement_induces_identity() {
        let g = parity();
        let r = Refinement::identity(&g);
        assert!(r.validate().is_empty());
        let l = limit_glue(&g, DEFAULT_CAP).unwrap();
        assert!(induced_map(&r, &l, &l).unwrap().is_identity());
    }

    #[test]
    fn mismatched_components_are_named() {
        let g = parity();
        let mut r = Refinement::identity(&g);
        r.components[0] = FinFn::identity(g.part(1));
        assert_eq!(r.validate(), ["endpoint: component at 1 has the wrong endpoints"]);
        let mut r = Refinement::identity(&g);
        r.components[0] = map(g.part(0), g.part(0), &[("a0", "a1"), ("a1", "a0"), ("a2", "a2")]);
        assert_eq!(r.validate(), ["naturality: square at incl(1, 2) fails"]);
    }

    #[test]
    fn restriction_projects_to_the_first_coordinate() {
        let g = parity();
        let r = Refinement::restriction(&g, &[0]).unwrap();
        assert!(r.validate().is_empty());
        let (lg, lf) = (limit_glue(&g, DEFAULT_CAP).unwrap(), limit_glue(&r.target, DEFAULT_CAP).unwrap());
        let mu = induced_map(&r, &lg, &lf).unwrap();
        assert_eq!(mu, lg.leg(0).clone());
    }

    #[test]
    fn swapping_the_charts() {
        let g = parity();
        let swap = FinFn::new(g.index().clone(), g.index().clone(), vec![1, 0]).unwrap();
        let mut b = GluingData::builder(g.index().clone(), Mode::Nonsplit, Ambient::Sets, Side::Limit).unwrap();
        b.set(IndexObject::Single(0), g.part(1).clone())
            .set(IndexObject::Single(1), g.part(0).clone())
            .set(IndexObject::Pair(0, 1), g.overlap(0, 1).clone())
            .edge(0, 1, g.edge(1, 0).clone())
            .edge(1, 0, g.edge(0, 1).clone());
        let f = b.build().unwrap();
        let components = f.cat().objects().iter().map(|&o| FinFn::identity(f.set(o))).collect();
        let r = Refinement { source: g.clone(), target: f.clone(), gamma: swap, components };
        assert!(r.validate().is_empty());
        let (lg, lf) = (limit_glue(&g, DEFAULT_CAP).unwrap(), limit_glue(&f, DEFAULT_CAP).unwrap());
        let mu = induced_map(&r, &lg, &lf).unwrap();
        assert!(mu.is_bijective());
        // Brute-force comparison with the mediating map of L_G as a cone over F.
        let cone = ConeCandidate { apex: lg.apex.clone(), legs: vec![lg.leg(1).clone(), lg.leg(0).clone()] };
        assert_eq!(mediating_map(&f, &lf, &cone).unwrap().map, mu);
    }

    #[test]
    fn composite_refinement_induces_composite_map() {
        let g = parity();
        let r = Refinement::identity(&g);
        let s = Refinement::restriction(&g, &[1]).unwrap();
        let rs = r.then(&s).unwrap();
        assert!(rs.validate().is_empty());
        let lg = limit_glue(&g, DEFAULT_CAP).unwrap();
        let lh = limit_glue(&s.target, DEFAULT_CAP).unwrap();
        let direct = induced_map(&rs, &lg, &lh).unwrap();
        let stepwise = induced_map(&r, &lg, &lg).unwrap().then(&induced_map(&s, &lg, &lh).unwrap()).unwrap();
        assert_eq!(direct, stepwise);
    }

    fn grid_node() -> GluingData {
        let labels: Vec<String> = (0..4).flat_map(|r| (0..4).map(move |c| format!("{r}{c}"))).collect();
        let grid = FinSet::new(labels).unwrap();
        let links: Vec<Identification> = (0..4)
            .map(|r| Identification { label: format!("c{r}"), left: (0, 4 * r), right: (0, 4 * r + 3) })
            .collect();
        GluingData::from_identifications(set(&["sq"]), vec![grid], &links).unwrap()
    }

    #[test]
    fn torus_from_a_square() {
        let node = grid_node();
        assert_eq!(colimit_glue(&node).unwrap().len(), 12);
        let links = (0..4)
            .map(|c| MetaLink {
                label: format!("r{c}"),
                left: NodePoint { node: 0, index: 0, element: c },
                right: NodePoint { node: 0, index: 0, element: 12 + c },
            })
            .collect();
        let meta = MetaGluingData { outer: set(&["t"]), nodes: vec![node], links };
        let composite = compose_gluings(&meta).unwrap();
        assert_eq!(composite.nodes[0].len(), 12);
        assert_eq!(composite.two_stage.len(), 9);
        assert_eq!(composite.flat.len(), 9);
        assert!(composite.agree);
    }

    #[test]
    fn single_node_without_links() {
        let node = grid_node();
        let meta = MetaGluingData { outer: set(&["n"]), nodes: vec![node], links: vec![] };
        let composite = compose_gluings(&meta).unwrap();
        assert_eq!(composite.flat.len(), 12);
        assert!(composite.agree);
    }

    #[test]
    fn disjoint_nodes_glue_to_a_disjoint_union() {
        let meta = MetaGluingData { outer: set(&["p", "q"]), nodes: vec![grid_node(), grid_node()], links: vec![] };
        let composite = compose_gluings(&meta).unwrap();
        assert_eq!(composite.flat.len(), 24);
        assert!(composite.agree);
    }
}
