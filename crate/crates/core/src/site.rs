//! Sinks, their canonical gluing functors, effective epimorphisms,
//! effectiveness of split gluing data, and covering axioms of finite sites.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{check_cap, GlueError, Result};
use crate::fincat::{
    is_continuous, map_properties, pullback, pullback_top, tuple_label, FinFn, FinSet, FinTop, TopMap,
};
use crate::gluing::{colimit_glue, hom_set, mediating_map, Ambient, ConeCandidate, GluingData, Side};
use crate::indexcat::{sorting_functors, IndexObject, Mode, SortingMap};

/// One member `ι_i : U_i → U` of a sink.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkSource {
    pub label: String,
    pub space: FinTop,
    pub map: FinFn,
}

/// A family of maps into a common target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sink {
    pub ambient: Ambient,
    pub target: FinTop,
    pub sources: Vec<SinkSource>,
}

impl Sink {
    pub fn new(ambient: Ambient, target: FinTop, sources: Vec<SinkSource>) -> Result<Sink> {
        let mut seen = HashSet::new();
        for s in &sources {
            if !seen.insert(&s.label) {
                return Err(GlueError::structural(format!("source {} appears twice", s.label)));
            }
            if s.map.domain() != &s.space.carrier || s.map.codomain() != &target.carrier {
                return Err(GlueError::structural(format!("map of source {} does not land in the target", s.label)));
            }
            if ambient == Ambient::Top && !is_continuous(&s.map, &s.space.topology, &target.topology) {
                return Err(GlueError::structural(format!("map of source {} is not continuous", s.label)));
            }
        }
        let mut sink = Sink { ambient, target, sources };
        if ambient == Ambient::Sets {
            sink.target = FinTop::discrete(sink.target.carrier.clone());
            for s in &mut sink.sources {
                s.space = FinTop::discrete(s.space.carrier.clone());
            }
        }
        Ok(sink)
    }

    /// The one-member sink `(U, id)`.
    pub fn identity(ambient: Ambient, target: FinTop, label: &str) -> Sink {
        let source =
            SinkSource { label: label.to_string(), space: target.clone(), map: FinFn::identity(&target.carrier) };
        Sink { ambient, target, sources: vec![source] }
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn index(&self) -> Result<FinSet> {
        FinSet::new(self.sources.iter().map(|s| s.label.clone()))
    }

    pub fn jointly_surjective(&self) -> bool {
        let mut hit = vec![false; self.target.len()];
        for s in &self.sources {
            for y in s.map.image() {
                hit[y] = true;
            }
        }
        hit.into_iter().all(|h| h)
    }

    /// `(U, ι_i ∘ ℓ_ij)` for covers `(U_i, ℓ_ij)` of each source.
    pub fn compose(&self, inner: &[Sink]) -> Result<Sink> {
        if inner.len() != self.sources.len() {
            return Err(GlueError::structural("one inner sink is needed per source"));
        }
        let mut sources = Vec::new();
        for (outer, sink) in self.sources.iter().zip(inner) {
            if sink.target != outer.space {
                return Err(GlueError::structural(format!("inner sink over {} has another target", outer.label)));
            }
            for s in &sink.sources {
                sources.push(SinkSource {
                    label: tuple_label([outer.label.as_str(), s.label.as_str()]),
                    space: s.space.clone(),
                    map: s.map.then(&outer.map)?,
                });
            }
        }
        Sink::new(self.ambient, self.target.clone(), sources)
    }

    /// `(V, U_i ×_U V)` along `f : V → U`.
    pub fn base_change(&self, base: &FinTop, f: &FinFn) -> Result<Sink> {
        if f.codomain() != &self.target.carrier || f.domain() != &base.carrier {
            return Err(GlueError::structural("base change map does not land in the sink's target"));
        }
        let mut sources = Vec::with_capacity(self.sources.len());
        for s in &self.sources {
            let (space, pb) = match self.ambient {
                Ambient::Sets => {
                    let pb = pullback(&s.map, f)?;
                    (FinTop::discrete(pb.members.clone()), pb)
                }
                Ambient::Top => {
                    let g = TopMap::new(s.space.clone(), self.target.clone(), s.map.clone())?;
                    let h = TopMap::new(base.clone(), self.target.clone(), f.clone())?;
                    pullback_top(&g, &h)?
                }
            };
            sources.push(SinkSource { label: s.label.clone(), space, map: pb.legs[1].clone() });
        }
        Sink::new(self.ambient, base.clone(), sources)
    }
}

/// Split colimit-side data with `G(i) = U_i`, `G(i, j) = U_i ×_U U_j`.
pub fn canonical_sink_functor(sink: &Sink) -> Result<GluingData> {
    let index = sink.index()?;
    let n = sink.len();
    if n == 0 {
        return Err(GlueError::structural("the empty sink has no canonical functor"));
    }
    let mut b = GluingData::builder(index, Mode::Split, sink.ambient, Side::Colimit)?;
    let mut overlaps = HashMap::new();
    for (i, si) in sink.sources.iter().enumerate() {
        b.space(IndexObject::Single(i), si.space.clone());
        for (j, sj) in sink.sources.iter().enumerate() {
            let (space, pb) = match sink.ambient {
                Ambient::Sets => {
                    let pb = pullback(&si.map, &sj.map)?;
                    (FinTop::discrete(pb.members.clone()), pb)
                }
                Ambient::Top => pullback_top(
                    &TopMap::new(si.space.clone(), sink.target.clone(), si.map.clone())?,
                    &TopMap::new(sj.space.clone(), sink.target.clone(), sj.map.clone())?,
                )?,
            };
            b.space(IndexObject::Pair(i, j), space);
            b.edge(i, j, pb.legs[0].clone());
            overlaps.insert((i, j), pb);
        }
    }
    for i in 0..n {
        for j in 0..n {
            let (here, there) = (&overlaps[&(i, j)], &overlaps[&(j, i)]);
            let position: HashMap<(usize, usize), usize> =
                there.members.elements().map(|m| ((there.legs[0].apply(m), there.legs[1].apply(m)), m)).collect();
            let map =
                here.members.elements().map(|m| position[&(here.legs[1].apply(m), here.legs[0].apply(m))]).collect();
            b.swap(i, j, FinFn::new(here.members.clone(), there.members.clone(), map)?);
        }
    }
    b.build()
}

/// Canonical functor of the sink pulled back along `f : V → U`.
pub fn base_change_functor(sink: &Sink, base: &FinTop, f: &FinFn) -> Result<GluingData> {
    canonical_sink_functor(&sink.base_change(base, f)?)
}

/// Whether the target is the glued-up object of the canonical functor.
pub fn effective_epi_check(sink: &Sink) -> Result<bool> {
    if sink.is_empty() {
        return Ok(sink.target.is_empty());
    }
    let data = canonical_sink_functor(sink)?;
    let glued = colimit_glue(&data)?;
    let cone = ConeCandidate { apex: sink.target.clone(), legs: sink.sources.iter().map(|s| s.map.clone()).collect() };
    Ok(mediating_map(&data, &glued, &cone)?.isomorphic)
}

/// Effective-epimorphism test through hom-sets: `Hom(U, Z)` must be the
/// equalizer of `∏ Hom(U_i, Z) ⇉ ∏ Hom(U_i ×_U U_j, Z)` for the two-point
/// set `Z` and, in the top ambient, also for the Sierpiński space.
pub fn is_effective_epi_by_hom(sink: &Sink, cap: u64) -> Result<bool> {
    let mut tests = vec![FinTop::discrete(FinSet::range(2))];
    if sink.ambient == Ambient::Top {
        tests.push(FinTop::sierpinski());
    }
    for z in &tests {
        let continuous_homs = |space: &FinTop| -> Result<Vec<FinFn>> {
            let (_, maps) = hom_set(&space.carrier, &z.carrier, cap)?;
            Ok(maps.into_iter().filter(|h| is_continuous(h, &space.topology, &z.topology)).collect())
        };
        let from_target = continuous_homs(&sink.target)?;
        let parts = sink.sources.iter().map(|s| continuous_homs(&s.space)).collect::<Result<Vec<_>>>()?;
        let pairs: Vec<Vec<(usize, usize)>> = sink
            .sources
            .iter()
            .flat_map(|a| {
                sink.sources.iter().map(move |b| {
                    let mut out = Vec::new();
                    for x in a.space.carrier.elements() {
                        for y in b.space.carrier.elements() {
                            if a.map.apply(x) == b.map.apply(y) {
                                out.push((x, y));
                            }
                        }
                    }
                    out
                })
            })
            .collect();
        let size = parts.iter().fold(1u128, |acc, p| acc.saturating_mul(p.len() as u128));
        check_cap(|| "product of hom-sets".into(), size, cap)?;
        let n = sink.len();
        let mut compatible = 0usize;
        let mut choice = vec![0usize; n];
        'families: loop {
            let ok = (0..n).all(|a| {
                (0..n).all(|b| {
                    pairs[a * n + b].iter().all(|&(x, y)| parts[a][choice[a]].apply(x) == parts[b][choice[b]].apply(y))
                })
            });
            if ok {
                compatible += 1;
            }
            for pos in (0..n).rev() {
                choice[pos] += 1;
                if choice[pos] < parts[pos].len() {
                    continue 'families;
                }
                choice[pos] = 0;
            }
            break;
        }
        if parts.iter().any(Vec::is_empty) {
            compatible = 0;
        }
        let restrictions: HashSet<Vec<Vec<usize>>> = from_target
            .iter()
            .map(|h| sink.sources.iter().map(|s| s.map.then(h).expect("composable").values().to_vec()).collect())
            .collect();
        if restrictions.len() != from_target.len() || restrictions.len() != compatible {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Effective-epimorphism verdicts along a family of test base changes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniversalReport {
    pub effective: bool,
    pub per_test: Vec<bool>,
    /// Sets ambient: joint surjectivity, which decides every base change.
    pub jointly_surjective: Option<bool>,
    pub all: bool,
}

pub fn universal_effective_epi_check(sink: &Sink, tests: &[(FinTop, FinFn)]) -> Result<UniversalReport> {
    let effective = effective_epi_check(sink)?;
    let per_test =
        tests.iter().map(|(base, f)| effective_epi_check(&sink.base_change(base, f)?)).collect::<Result<Vec<_>>>()?;
    let jointly_surjective = (sink.ambient == Ambient::Sets).then(|| sink.jointly_surjective());
    let all = effective && per_test.iter().all(|&b| b) && jointly_surjective != Some(false);
    Ok(UniversalReport { effective, per_test, jointly_surjective, all })
}

/// The three effectiveness conditions on split colimit-side data, each
/// computed on its own.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffectivenessReport {
    /// The relation `R_G` is an equivalence relation and every edge is
    /// one-to-one (an embedding in the top ambient).
    pub congruence: bool,
    /// Overlaps are exactly the intersections of images, legs and edges are
    /// one-to-one (embeddings in the top ambient).
    pub intersection: bool,
    /// Every `G(i, j) → G(i) ×_Q G(j)` is bijective and edges are one-to-one.
    pub strong: bool,
    /// Symmetric reflexive closure of `R_G` is transitive.
    pub relation_transitive: bool,
    pub edges_injective: bool,
    pub legs_injective: bool,
    /// Every edge is onto (the regular-epimorphism clause in sets).
    pub edges_surjective: bool,
    pub diagnostics: Vec<String>,
}

impl EffectivenessReport {
    pub fn effective(&self) -> bool {
        self.congruence && self.intersection && self.strong
    }
}

fn is_transitive(n: usize, rel: &HashSet<(usize, usize)>) -> bool {
    let mut succ = vec![Vec::new(); n];
    for &(a, b) in rel {
        succ[a].push(b);
    }
    rel.iter().all(|&(a, b)| succ[b].iter().all(|&c| rel.contains(&(a, c))))
}

/// Non-split data is read through `B_I` as split data first.
pub fn effective_gluing_check(data: &GluingData) -> Result<EffectivenessReport> {
    data.ensure_side_colimit()?;
    let split = match data.mode() {
        Mode::Split => data.clone(),
        Mode::Nonsplit => {
            let c = SortingMap::ascending(data.index());
            data.precompose(&sorting_functors(data.index(), &c)?.b)?
        }
    };
    let g = &split;
    let n = g.len();
    let label = |i: usize| g.index().label(i).to_string();
    let glued = colimit_glue(g)?;
    let mut diagnostics = Vec::new();

    let mut offsets = Vec::with_capacity(n);
    let mut total = 0;
    for i in 0..n {
        offsets.push(total);
        total += g.part(i).len();
    }
    let mut rel = HashSet::new();
    for i in 0..n {
        for j in 0..n {
            for u in g.overlap(i, j).elements() {
                let x = g.edge(i, j).apply(u);
                let y = g.edge(j, i).apply(g.swap(i, j).apply(u));
                rel.insert((offsets[i] + x, offsets[j] + y));
            }
        }
    }
    let reflexive = (0..total).all(|x| rel.contains(&(x, x)));
    let symmetric = rel.iter().all(|&(a, b)| rel.contains(&(b, a)));
    let transitive = is_transitive(total, &rel);
    if !reflexive {
        diagnostics.push("congruence: R_G is not reflexive".to_string());
    }
    if !symmetric {
        diagnostics.push("congruence: R_G is not symmetric".to_string());
    }
    if !transitive {
        diagnostics.push("congruence: R_G is not transitive".to_string());
    }
    let mut closure = rel.clone();
    closure.extend(rel.iter().map(|&(a, b)| (b, a)));
    closure.extend((0..total).map(|x| (x, x)));
    let relation_transitive = is_transitive(total, &closure);

    let mut edges_injective = true;
    let mut edges_surjective = true;
    for i in 0..n {
        for j in 0..n {
            let e = g.edge(i, j);
            let props = g.properties(e, (g.cat().pair(i, j), IndexObject::Single(i)));
            let ok = match g.ambient() {
                Ambient::Sets => props.injective,
                Ambient::Top => props.embedding,
            };
            if !ok {
                edges_injective = false;
                diagnostics.push(format!("edge ({}, {}) is not one-to-one", label(i), label(j)));
            }
            edges_surjective &= props.surjective;
        }
    }
    let mut legs_injective = true;
    for (i, p) in glued.leg_properties(g).into_iter().enumerate() {
        let ok = match g.ambient() {
            Ambient::Sets => p.injective,
            Ambient::Top => p.embedding,
        };
        if !ok {
            legs_injective = false;
            diagnostics.push(format!("leg at {} is not one-to-one", label(i)));
        }
    }

    let mut images_match = true;
    let mut thetas_bijective = true;
    for i in 0..n {
        for j in 0..n {
            let (li, lj) = (glued.leg(i), glued.leg(j));
            let meets: HashSet<usize> = lj.image().into_iter().collect();
            let expected: Vec<usize> = g.part(i).elements().filter(|&x| meets.contains(&li.apply(x))).collect();
            let image = g.edge(i, j).image();
            if image != expected {
                images_match = false;
                diagnostics.push(format!(
                    "intersection: image of G({0},{1}) in G({0}) has {2} points, the meet of G({0}) and G({1}) has {3}",
                    label(i),
                    label(j),
                    image.len(),
                    expected.len()
                ));
            }
            let fibre: Vec<(usize, usize)> = g
                .part(i)
                .elements()
                .flat_map(|x| g.part(j).elements().map(move |y| (x, y)))
                .filter(|&(x, y)| li.apply(x) == lj.apply(y))
                .collect();
            let theta: HashSet<(usize, usize)> = g
                .overlap(i, j)
                .elements()
                .map(|u| (g.edge(i, j).apply(u), g.edge(j, i).apply(g.swap(i, j).apply(u))))
                .collect();
            let bijective = theta.len() == g.overlap(i, j).len()
                && theta.len() == fibre.len()
                && fibre.iter().all(|p| theta.contains(p));
            if !bijective {
                thetas_bijective = false;
                diagnostics.push(format!(
                    "strong: G({0},{1}) -> G({0}) x_Q G({1}) is not bijective ({2} vs {3})",
                    label(i),
                    label(j),
                    g.overlap(i, j).len(),
                    fibre.len()
                ));
            }
        }
    }
    Ok(EffectivenessReport {
        congruence: reflexive && symmetric && transitive && edges_injective,
        intersection: images_match && legs_injective && edges_injective,
        strong: thetas_bijective && edges_injective,
        relation_transitive,
        edges_injective,
        legs_injective,
        edges_surjective,
        diagnostics,
    })
}

impl GluingData {
    fn ensure_side_colimit(&self) -> Result<()> {
        if self.side() == Side::Colimit {
            Ok(())
        } else {
            Err(GlueError::structural("effectiveness is defined for colimit-side data"))
        }
    }
}

/// A named morphism `from → to` between declared objects.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteMorphism {
    pub label: String,
    pub from: String,
    pub to: String,
    pub map: FinFn,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringSource {
    pub object: String,
    pub map: FinFn,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Covering {
    pub label: String,
    pub target: String,
    pub sources: Vec<CoveringSource>,
}

/// Declared objects, morphisms and coverings of a finite site.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteSpec {
    pub ambient: Ambient,
    pub objects: Vec<(String, FinTop)>,
    pub morphisms: Vec<SiteMorphism>,
    pub coverings: Vec<Covering>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub identities: bool,
    pub composition: bool,
    pub base_change: bool,
    pub violations: Vec<String>,
}

impl CoveringReport {
    pub fn passes(&self) -> bool {
        self.identities && self.composition && self.base_change
    }
}

impl SiteSpec {
    fn object(&self, name: &str) -> Result<&FinTop> {
        self.objects
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, o)| o)
            .ok_or_else(|| GlueError::structural(format!("unknown object {name}")))
    }

    pub fn sink(&self, c: &Covering) -> Result<Sink> {
        let target = self.object(&c.target)?.clone();
        let sources = c
            .sources
            .iter()
            .enumerate()
            .map(|(k, s)| {
                Ok(SinkSource {
                    label: format!("{}#{k}", s.object),
                    space: self.object(&s.object)?.clone(),
                    map: s.map.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Sink::new(self.ambient, target, sources)
    }

    fn declared(&self, target: &str, sink: &Sink) -> Result<bool> {
        for c in self.coverings.iter().filter(|c| c.target == target) {
            if sinks_isomorphic(&self.sink(c)?, sink) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn validate(&self) -> Result<()> {
        for m in &self.morphisms {
            let (from, to) = (self.object(&m.from)?, self.object(&m.to)?);
            if m.map.domain() != &from.carrier || m.map.codomain() != &to.carrier {
                return Err(GlueError::structural(format!("morphism {} has the wrong endpoints", m.label)));
            }
            if self.ambient == Ambient::Top && !is_continuous(&m.map, &from.topology, &to.topology) {
                return Err(GlueError::structural(format!("morphism {} is not continuous", m.label)));
            }
        }
        for c in &self.coverings {
            self.sink(c)?;
        }
        Ok(())
    }
}

/// Checks the identity, composition and base-change axioms on the declared data.
pub fn covering_axioms_check(spec: &SiteSpec, cap: u64) -> Result<CoveringReport> {
    spec.validate()?;
    let mut violations = Vec::new();
    let mut identities = true;
    for (name, space) in &spec.objects {
        if !spec.declared(name, &Sink::identity(spec.ambient, space.clone(), "id"))? {
            identities = false;
            violations.push(format!("identity: the identity of {name} is not a covering"));
        }
    }
    let mut composition = true;
    for c in &spec.coverings {
        let outer = spec.sink(c)?;
        let choices: Vec<Vec<&Covering>> =
            c.sources.iter().map(|s| spec.coverings.iter().filter(|d| d.target == s.object).collect()).collect();
        let combos = choices.iter().fold(1u128, |acc, v| acc.saturating_mul(v.len() as u128));
        check_cap(|| format!("covering families over {}", c.label), combos, cap)?;
        if combos == 0 {
            continue;
        }
        let mut pick = vec![0usize; choices.len()];
        'families: loop {
            let inner = pick.iter().zip(&choices).map(|(&k, v)| spec.sink(v[k])).collect::<Result<Vec<_>>>()?;
            let flat = outer.compose(&inner)?;
            if !spec.declared(&c.target, &flat)? {
                composition = false;
                let names: Vec<&str> = pick.iter().zip(&choices).map(|(&k, v)| v[k].label.as_str()).collect();
                violations.push(format!(
                    "composition: {} refined by [{}] is not a covering",
                    c.label,
                    names.join(", ")
                ));
            }
            for pos in (0..pick.len()).rev() {
                pick[pos] += 1;
                if pick[pos] < choices[pos].len() {
                    continue 'families;
                }
                pick[pos] = 0;
            }
            break;
        }
    }
    let mut base_change = true;
    for c in &spec.coverings {
        let sink = spec.sink(c)?;
        for m in spec.morphisms.iter().filter(|m| m.to == c.target) {
            let pulled = sink.base_change(spec.object(&m.from)?, &m.map)?;
            if !spec.declared(&m.from, &pulled)? {
                base_change = false;
                violations.push(format!("base change: {} along {} is not a covering", c.label, m.label));
            }
        }
    }
    Ok(CoveringReport { identities, composition, base_change, violations })
}

/// Whether two sinks over the same target agree up to reindexing and
/// isomorphisms of sources commuting with the maps.
pub fn sinks_isomorphic(a: &Sink, b: &Sink) -> bool {
    if a.target != b.target || a.len() != b.len() {
        return false;
    }
    let n = a.len();
    let compatible: Vec<Vec<bool>> = a
        .sources
        .iter()
        .map(|s| b.sources.iter().map(|t| sources_isomorphic(a.ambient, s, t, &a.target)).collect())
        .collect();
    let mut used = vec![false; n];
    fn assign(k: usize, compatible: &[Vec<bool>], used: &mut [bool]) -> bool {
        if k == compatible.len() {
            return true;
        }
        for l in 0..used.len() {
            if compatible[k][l] && !used[l] {
                used[l] = true;
                if assign(k + 1, compatible, used) {
                    return true;
                }
                used[l] = false;
            }
        }
        false
    }
    assign(0, &compatible, &mut used)
}

/// An isomorphism `φ : A → B` with `b ∘ φ = a`.
fn sources_isomorphic(ambient: Ambient, a: &SinkSource, b: &SinkSource, target: &FinTop) -> bool {
    let fibres = |s: &SinkSource| {
        let mut f = vec![Vec::new(); target.len()];
        for x in s.space.carrier.elements() {
            f[s.map.apply(x)].push(x);
        }
        f
    };
    let (fa, fb) = (fibres(a), fibres(b));
    if fa.iter().zip(&fb).any(|(x, y)| x.len() != y.len()) {
        return false;
    }
    if ambient == Ambient::Sets {
        return true;
    }
    // Search bijections fibre by fibre for a homeomorphism.
    let order: Vec<usize> = a.space.carrier.elements().collect();
    let mut phi = vec![usize::MAX; a.space.len()];
    let mut used = vec![false; b.space.len()];
    fn search(
        k: usize,
        order: &[usize],
        a: &SinkSource,
        b: &SinkSource,
        fb: &[Vec<usize>],
        phi: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        if k == order.len() {
            let f = FinFn::new(a.space.carrier.clone(), b.space.carrier.clone(), phi.clone()).expect("total");
            let p = map_properties(&f, Some((&a.space.topology, &b.space.topology)));
            let inv = f.inverse().expect("bijective");
            return p.continuous && is_continuous(&inv, &b.space.topology, &a.space.topology);
        }
        let x = order[k];
        for &y in &fb[a.map.apply(x)] {
            if !used[y] {
                used[y] = true;
                phi[x] = y;
                if search(k + 1, order, a, b, fb, phi, used) {
                    return true;
                }
                used[y] = false;
            }
        }
        false
    }
    search(0, &order, a, b, &fb, &mut phi, &mut used)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::DEFAULT_CAP;
    use crate::gluing::Identification;

    fn set(labels: &[&str]) -> FinSet {
        FinSet::new(labels.iter().copied()).unwrap()
    }

    fn map(d: &FinSet, c: &FinSet, pairs: &[(&str, &str)]) -> FinFn {
        FinFn::from_pairs(d.clone(), c.clone(), pairs.iter().copied()).unwrap()
    }

    fn inclusions(target: &[&str], parts: &[&[&str]]) -> Sink {
        let u = set(target);
        let sources = parts
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let s = set(p);
                let pairs: Vec<_> = p.iter().map(|x| (*x, *x)).collect();
                SinkSource { label: format!("{}", k + 1), space: FinTop::discrete(s.clone()), map: map(&s, &u, &pairs) }
            })
            .collect();
        Sink::new(Ambient::Sets, FinTop::discrete(u), sources).unwrap()
    }

    #[test]
    fn single_iso_sink_has_diagonal_overlap() {
        let s = inclusions(&["p", "q"], &[&["p", "q"]]);
        let g = canonical_sink_functor(&s).unwrap();
        assert_eq!(g.overlap(0, 0).labels(), ["p|p", "q|q"]);
        assert!(g.validate().is_empty());
    }

    #[test]
    fn disjoint_inclusions_have_empty_overlap() {
        let s = inclusions(&["p", "q"], &[&["p"], &["q"]]);
        assert!(canonical_sink_functor(&s).unwrap().overlap(0, 1).is_empty());
    }

    #[test]
    fn overlapping_inclusions_share_one_pair() {
        let s = inclusions(&["p", "q", "r"], &[&["p", "q"], &["q", "r"]]);
        let g = canonical_sink_functor(&s).unwrap();
        assert_eq!(g.overlap(0, 1).labels(), ["q|q"]);
        assert!(effective_epi_check(&s).unwrap());
    }

    #[test]
    fn base_change_examples() {
        let s = inclusions(&["p", "q"], &[&["p"], &["q"]]);
        let id = FinFn::identity(&s.target.carrier);
        let g = base_change_functor(&s, &s.target, &id).unwrap();
        assert_eq!(g.part(0).labels(), ["p|p"]);
        let empty = FinTop::discrete(FinSet::empty());
        let g =
            base_change_functor(&s, &empty, &FinFn::new(FinSet::empty(), s.target.carrier.clone(), vec![]).unwrap())
                .unwrap();
        assert!(g.part(0).is_empty() && g.part(1).is_empty());
        let v = set(&["v"]);
        let over_p = map(&v, &s.target.carrier, &[("v", "p")]);
        let g = base_change_functor(&s, &FinTop::discrete(v), &over_p).unwrap();
        assert_eq!((g.part(0).len(), g.part(1).len()), (1, 0));
    }

    #[test]
    fn effective_epi_examples() {
        assert!(effective_epi_check(&inclusions(&["p", "q"], &[&["p"], &["q"]])).unwrap());
        assert!(!effective_epi_check(&inclusions(&["p", "q"], &[&["p"]])).unwrap());
        // Both p and q hit, but U_1 = {a, b} sends a to p and b to q while
        // nothing identifies a with b: still effective.
        let u = set(&["p", "q"]);
        let ab = set(&["a", "b"]);
        let s = Sink::new(
            Ambient::Sets,
            FinTop::discrete(u.clone()),
            vec![
                SinkSource {
                    label: "1".into(),
                    space: FinTop::discrete(ab.clone()),
                    map: map(&ab, &u, &[("a", "p"), ("b", "q")]),
                },
                SinkSource {
                    label: "2".into(),
                    space: FinTop::discrete(ab.clone()),
                    map: map(&ab, &u, &[("a", "q"), ("b", "p")]),
                },
            ],
        )
        .unwrap();
        assert!(effective_epi_check(&s).unwrap());
        assert!(is_effective_epi_by_hom(&s, DEFAULT_CAP).unwrap());
    }

    #[test]
    fn hom_oracle_agrees_on_examples() {
        for s in [
            inclusions(&["p", "q"], &[&["p"], &["q"]]),
            inclusions(&["p", "q"], &[&["p"]]),
            inclusions(&["p", "q", "r"], &[&["p", "q"], &["q", "r"]]),
        ] {
            assert_eq!(effective_epi_check(&s).unwrap(), is_effective_epi_by_hom(&s, DEFAULT_CAP).unwrap());
        }
    }

    #[test]
    fn open_cover_in_top_is_effective() {
        let x = FinTop::sierpinski();
        let open = FinTop::discrete(set(&["1"]));
        let sources = vec![
            SinkSource { label: "u".into(), space: open.clone(), map: map(&open.carrier, &x.carrier, &[("1", "1")]) },
            SinkSource { label: "x".into(), space: x.clone(), map: FinFn::identity(&x.carrier) },
        ];
        let s = Sink::new(Ambient::Top, x.clone(), sources).unwrap();
        assert!(effective_epi_check(&s).unwrap());
        assert!(is_effective_epi_by_hom(&s, DEFAULT_CAP).unwrap());
        // The two points of Sierpiński space, each discrete, do not recover it.
        let zero = FinTop::discrete(set(&["0"]));
        let sources = vec![
            SinkSource { label: "a".into(), space: zero.clone(), map: map(&zero.carrier, &x.carrier, &[("0", "0")]) },
            SinkSource { label: "b".into(), space: open.clone(), map: map(&open.carrier, &x.carrier, &[("1", "1")]) },
        ];
        let s = Sink::new(Ambient::Top, x, sources).unwrap();
        assert!(!effective_epi_check(&s).unwrap());
        assert!(!is_effective_epi_by_hom(&s, DEFAULT_CAP).unwrap());
    }

    #[test]
    fn universal_check_on_surjective_sink() {
        let s = inclusions(&["p", "q"], &[&["p"], &["p", "q"]]);
        let v = set(&["v", "w"]);
        let tests = vec![
            (s.target.clone(), FinFn::identity(&s.target.carrier)),
            (FinTop::discrete(v.clone()), map(&v, &s.target.carrier, &[("v", "q"), ("w", "q")])),
        ];
        let r = universal_effective_epi_check(&s, &tests).unwrap();
        assert!(r.all && r.per_test == [true, true]);
        let bad = inclusions(&["p", "q"], &[&["p"]]);
        let r = universal_effective_epi_check(&bad, &tests[..1]).unwrap();
        assert!(!r.all && r.per_test == [false]);
    }

    fn circle() -> GluingData {
        let a = set(&["a0", "a1", "a2"]);
        let b = set(&["b0", "b1", "b2"]);
        let links = [
            Identification { label: "u".into(), left: (0, 0), right: (1, 2) },
            Identification { label: "v".into(), left: (0, 2), right: (1, 0) },
        ];
        GluingData::from_identifications(set(&["1", "2"]), vec![a, b], &links).unwrap()
    }

    #[test]
    fn circle_from_nonsplit_data_is_effective() {
        // Non-split E2 through B_I.
        let a = set(&["a0", "a1", "a2"]);
        let b = set(&["b0", "b1", "b2"]);
        let u = set(&["u", "v"]);
        let mut builder = GluingData::builder(set(&["1", "2"]), Mode::Nonsplit, Ambient::Sets, Side::Colimit).unwrap();
        builder
            .set(IndexObject::Single(0), a.clone())
            .set(IndexObject::Single(1), b.clone())
            .set(IndexObject::Pair(0, 1), u.clone())
            .edge(0, 1, map(&u, &a, &[("u", "a0"), ("v", "a2")]))
            .edge(1, 0, map(&u, &b, &[("u", "b2"), ("v", "b0")]));
        let r = effective_gluing_check(&builder.build().unwrap()).unwrap();
        assert!(r.congruence && r.intersection && r.strong, "{:?}", r.diagnostics);
    }

    #[test]
    fn split_circle_without_diagonals_is_not_effective() {
        // from_identifications leaves G(i, i) empty, so R_G is not reflexive.
        let r = effective_gluing_check(&circle()).unwrap();
        assert!(!r.congruence && !r.intersection && !r.strong);
        assert!(r.relation_transitive);
    }

    #[test]
    fn e4_fails_every_condition() {
        let parts = vec![set(&["x1"]), set(&["x2"]), set(&["x3"])];
        let links = [
            Identification { label: "p".into(), left: (0, 0), right: (1, 0) },
            Identification { label: "q".into(), left: (1, 0), right: (2, 0) },
        ];
        let g = GluingData::from_identifications(set(&["1", "2", "3"]), parts, &links).unwrap();
        let r = effective_gluing_check(&g).unwrap();
        assert!(!r.congruence && !r.intersection && !r.strong);
        assert!(r.diagnostics.iter().any(|d| d.starts_with("intersection: image of G(1,3)")));
    }

    #[test]
    fn single_index_identity_structure_is_effective() {
        let s = inclusions(&["p", "q"], &[&["p", "q"]]);
        let r = effective_gluing_check(&canonical_sink_functor(&s).unwrap()).unwrap();
        assert!(r.effective());
    }

    fn settop() -> SiteSpec {
        let (a, b, u) = (set(&["a"]), set(&["b"]), set(&["a", "b"]));
        let obj = |n: &str, s: &FinSet| (n.to_string(), FinTop::discrete(s.clone()));
        let cover = |label: &str, target: &str, sources: Vec<(&str, FinFn)>| Covering {
            label: label.into(),
            target: target.into(),
            sources: sources.into_iter().map(|(o, m)| CoveringSource { object: o.into(), map: m }).collect(),
        };
        let swap = map(&u, &u, &[("a", "b"), ("b", "a")]);
        SiteSpec {
            ambient: Ambient::Sets,
            objects: vec![obj("A", &a), obj("B", &b), obj("U", &u)],
            morphisms: vec![
                SiteMorphism { label: "idA".into(), from: "A".into(), to: "A".into(), map: FinFn::identity(&a) },
                SiteMorphism { label: "idB".into(), from: "B".into(), to: "B".into(), map: FinFn::identity(&b) },
                SiteMorphism { label: "idU".into(), from: "U".into(), to: "U".into(), map: FinFn::identity(&u) },
                SiteMorphism { label: "swap".into(), from: "U".into(), to: "U".into(), map: swap },
            ],
            coverings: vec![
                cover("A", "A", vec![("A", FinFn::identity(&a))]),
                cover("B", "B", vec![("B", FinFn::identity(&b))]),
                cover("U", "U", vec![("U", FinFn::identity(&u))]),
                cover("AB", "U", vec![("A", map(&a, &u, &[("a", "a")])), ("B", map(&b, &u, &[("b", "b")]))]),
            ],
        }
    }

    #[test]
    fn coproduct_site_passes() {
        let r = covering_axioms_check(&settop(), DEFAULT_CAP).unwrap();
        assert!(r.passes(), "{:?}", r.violations);
    }

    #[test]
    fn missing_composite_is_named() {
        let mut spec = settop();
        // A second two-piece covering of A whose composite with AB is undeclared.
        let a = set(&["a"]);
        spec.coverings.push(Covering {
            label: "AA".into(),
            target: "A".into(),
            sources: vec![
                CoveringSource { object: "A".into(), map: FinFn::identity(&a) },
                CoveringSource { object: "A".into(), map: FinFn::identity(&a) },
            ],
        });
        let r = covering_axioms_check(&spec, DEFAULT_CAP).unwrap();
        assert!(!r.composition);
        assert!(r.violations.iter().any(|v| v.starts_with("composition: AB refined by [AA, B]")));
    }

    #[test]
    fn missing_base_change_is_named() {
        let mut spec = settop();
        let (a, u) = (set(&["a"]), set(&["a", "b"]));
        spec.morphisms.push(SiteMorphism {
            label: "inc".into(),
            from: "A".into(),
            to: "U".into(),
            map: map(&a, &u, &[("a", "a")]),
        });
        // The base change of (U, id) along inc is (A, id), declared; AB along inc
        // gives (A, {a|a → a, ∅}), which is not.
        let r = covering_axioms_check(&spec, DEFAULT_CAP).unwrap();
        assert!(!r.base_change);
        assert!(r.violations.contains(&"base change: AB along inc is not a covering".to_string()));
    }
}
