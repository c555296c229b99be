//! Presheaves of finite sets on the open sets of a finite space: sheaf
//! conditions, direct images and restrictions, gluing of presheaves along
//! open covers, and gluing of natural transformations.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{check_cap, GlueError, Result};
use crate::fincat::{intersection, is_subset, union, FinFn, FinSet, FinTop, TopMap};

/// The open sets of a finite space, smallest first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpenLattice {
    space: FinTop,
    opens: Vec<Vec<usize>>,
    index: BTreeMap<Vec<usize>, usize>,
}

impl OpenLattice {
    pub fn new(space: FinTop, cap: u64) -> Result<Self> {
        let opens = space.opens(cap)?;
        let index = opens.iter().enumerate().map(|(k, o)| (o.clone(), k)).collect();
        Ok(OpenLattice { space, opens, index })
    }

    pub fn space(&self) -> &FinTop {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.opens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opens.is_empty()
    }

    pub fn open(&self, k: usize) -> &[usize] {
        &self.opens[k]
    }

    pub fn id(&self, points: &[usize]) -> Option<usize> {
        let mut sorted = points.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        self.index.get(&sorted).copied()
    }

    pub fn id_of_labels(&self, labels: &[String]) -> Result<usize> {
        let points = labels.iter().map(|l| self.space.carrier.require(l)).collect::<Result<Vec<_>>>()?;
        self.id(&points).ok_or_else(|| GlueError::structural(format!("{{{}}} is not open", labels.join(", "))))
    }

    pub fn top(&self) -> usize {
        self.opens.len() - 1
    }

    pub fn bottom(&self) -> usize {
        0
    }

    pub fn contains(&self, big: usize, small: usize) -> bool {
        is_subset(&self.opens[small], &self.opens[big])
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.index[&intersection(&self.opens[a], &self.opens[b])]
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        self.index[&union(&self.opens[a], &self.opens[b])]
    }

    /// Opens contained in `u`, in lattice order.
    pub fn within(&self, u: usize) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.contains(u, v)).collect()
    }

    pub fn labels(&self, k: usize) -> Vec<String> {
        self.opens[k].iter().map(|&x| self.space.carrier.label(x).to_string()).collect()
    }

    pub fn name(&self, k: usize) -> String {
        format!("{{{}}}", self.labels(k).join(","))
    }
}

/// A presheaf on the opens contained in `domain`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PresheafStore {
    lattice: OpenLattice,
    domain: usize,
    sections: BTreeMap<usize, FinSet>,
    /// `(w, v)` with `v ⊆ w` ↦ restriction `S(w) → S(v)`.
    res: BTreeMap<(usize, usize), FinFn>,
}

impl PresheafStore {
    /// Missing restrictions are filled by identities on `V ⊆ V` and by
    /// composing through intermediate opens.
    pub fn new(
        lattice: OpenLattice,
        domain: usize,
        sections: BTreeMap<usize, FinSet>,
        mut res: BTreeMap<(usize, usize), FinFn>,
    ) -> Result<Self> {
        let members = lattice.within(domain);
        for &v in &members {
            if !sections.contains_key(&v) {
                return Err(GlueError::structural(format!("no sections over {}", lattice.name(v))));
            }
        }
        if sections.keys().any(|k| !members.contains(k)) {
            return Err(GlueError::structural("sections given over an open outside the domain"));
        }
        let l = &lattice;
        let mut pairs: Vec<(usize, usize)> = members
            .iter()
            .flat_map(|&w| members.iter().filter(move |&&v| l.contains(w, v)).map(move |&v| (w, v)))
            .collect();
        pairs.sort_by_key(|&(w, v)| lattice.open(w).len() - lattice.open(v).len());
        for (w, v) in pairs {
            if res.contains_key(&(w, v)) {
                continue;
            }
            let map = if w == v {
                FinFn::identity(&sections[&v])
            } else {
                let via = members
                    .iter()
                    .find(|&&m| m != w && m != v && res.contains_key(&(w, m)) && res.contains_key(&(m, v)));
                match via {
                    Some(&m) => res[&(w, m)].then(&res[&(m, v)])?,
                    None => {
                        return Err(GlueError::structural(format!(
                            "no restriction from {} to {}",
                            lattice.name(w),
                            lattice.name(v)
                        )))
                    }
                }
            };
            res.insert((w, v), map);
        }
        Ok(PresheafStore { lattice, domain, sections, res })
    }

    /// `U ↦ Maps(U, values)`.
    pub fn functions(lattice: &OpenLattice, domain: usize, values: &FinSet) -> Result<Self> {
        let assignments = lattice
            .within(domain)
            .into_iter()
            .map(|u| {
                let n = lattice.open(u).len();
                let total = (values.len() as u128).saturating_pow(n as u32);
                check_cap(|| "function sections".into(), total, crate::fincat::DEFAULT_CAP)?;
                let mut all = Vec::with_capacity(total as usize);
                for k in 0..total as usize {
                    let mut rest = k;
                    let mut f = vec![0; n];
                    for slot in f.iter_mut().rev() {
                        *slot = rest % values.len();
                        rest /= values.len();
                    }
                    all.push(f);
                }
                Ok((u, all))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        Self::from_assignments(lattice, domain, values, assignments)
    }

    /// Sections over each open are functions on its points, restricted pointwise.
    ///
    /// `assignments[u]` lists value indices in the order of the points of `u`.
    pub fn from_assignments(
        lattice: &OpenLattice,
        domain: usize,
        values: &FinSet,
        assignments: BTreeMap<usize, Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let carrier = &lattice.space.carrier;
        let mut sections = BTreeMap::new();
        let mut lookup: HashMap<usize, HashMap<Vec<usize>, usize>> = HashMap::new();
        for (&u, list) in &assignments {
            let labels = list.iter().map(|f| {
                let named: serde_json::Map<String, serde_json::Value> = lattice
                    .open(u)
                    .iter()
                    .zip(f)
                    .map(|(&x, &v)| (carrier.label(x).to_string(), values.label(v).into()))
                    .collect();
                serde_json::Value::Object(named).to_string()
            });
            sections.insert(u, FinSet::new(labels)?);
            lookup.insert(u, list.iter().enumerate().map(|(k, f)| (f.clone(), k)).collect());
        }
        let mut res = BTreeMap::new();
        for (&w, list) in &assignments {
            for &v in assignments.keys().filter(|&&v| lattice.contains(w, v)) {
                let keep: Vec<usize> = lattice
                    .open(w)
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| lattice.open(v).contains(x))
                    .map(|(k, _)| k)
                    .collect();
                let map = list
                    .iter()
                    .map(|f| {
                        let restricted: Vec<usize> = keep.iter().map(|&k| f[k]).collect();
                        lookup[&v].get(&restricted).copied().ok_or_else(|| {
                            GlueError::structural(format!(
                                "a section over {} restricts outside the sections over {}",
                                lattice.name(w),
                                lattice.name(v)
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                res.insert((w, v), FinFn::new(sections[&w].clone(), sections[&v].clone(), map)?);
            }
        }
        Self::new(lattice.clone(), domain, sections, res)
    }

    /// The same set over every open, with identity restrictions.
    pub fn constant(lattice: &OpenLattice, domain: usize, set: &FinSet) -> Result<Self> {
        let opens = lattice.within(domain);
        let sections = opens.iter().map(|&u| (u, set.clone())).collect();
        let res = opens
            .iter()
            .flat_map(|&w| lattice.within(w).into_iter().map(move |v| ((w, v), FinFn::identity(set))))
            .collect();
        Self::new(lattice.clone(), domain, sections, res)
    }

    /// Continuous sections of `p : E → X` over each open of `X`.
    pub fn sections_of(p: &TopMap, lattice: &OpenLattice, cap: u64) -> Result<Self> {
        if p.target != lattice.space {
            return Err(GlueError::structural("the map does not land in the lattice's space"));
        }
        let mut fibres = vec![Vec::new(); p.target.len()];
        for e in p.source.carrier.elements() {
            fibres[p.map.apply(e)].push(e);
        }
        let domain = lattice.top();
        let mut assignments = BTreeMap::new();
        for u in lattice.within(domain) {
            let points = lattice.open(u);
            let size = points.iter().fold(1u128, |acc, &x| acc.saturating_mul(fibres[x].len() as u128));
            check_cap(|| "candidate sections".into(), size, cap)?;
            let sub = p.target.subspace(points);
            let mut list = Vec::new();
            let mut choice = vec![0usize; points.len()];
            if points.iter().all(|&x| !fibres[x].is_empty()) {
                'each: loop {
                    let values: Vec<usize> = points.iter().zip(&choice).map(|(&x, &c)| fibres[x][c]).collect();
                    let s = FinFn::new(sub.carrier.clone(), p.source.carrier.clone(), values.clone())?;
                    if crate::fincat::is_continuous(&s, &sub.topology, &p.source.topology) {
                        list.push(values);
                    }
                    for pos in (0..points.len()).rev() {
                        choice[pos] += 1;
                        if choice[pos] < fibres[points[pos]].len() {
                            continue 'each;
                        }
                        choice[pos] = 0;
                    }
                    break;
                }
            }
            assignments.insert(u, list);
        }
        Self::from_assignments(lattice, domain, &p.source.carrier, assignments)
    }

    pub fn lattice(&self) -> &OpenLattice {
        &self.lattice
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    /// Opens carrying sections, in lattice order.
    pub fn opens(&self) -> Vec<usize> {
        self.sections.keys().copied().collect()
    }

    pub fn sections(&self, u: usize) -> &FinSet {
        &self.sections[&u]
    }

    pub fn res(&self, w: usize, v: usize) -> &FinFn {
        &self.res[&(w, v)]
    }

    /// Violated endpoint, identity and composition laws.
    pub fn validate(&self) -> Vec<String> {
        let l = &self.lattice;
        let mut out = Vec::new();
        for (&(w, v), f) in &self.res {
            if f.domain() != &self.sections[&w] || f.codomain() != &self.sections[&v] {
                out.push(format!("endpoint: restriction {} -> {} has the wrong endpoints", l.name(w), l.name(v)));
            }
        }
        if !out.is_empty() {
            return out;
        }
        for &v in self.sections.keys() {
            if !self.res[&(v, v)].is_identity() {
                out.push(format!("identity: restriction {0} -> {0} is not the identity", l.name(v)));
            }
        }
        let opens = self.opens();
        for &x in &opens {
            for &w in opens.iter().filter(|&&w| l.contains(x, w)) {
                for &v in opens.iter().filter(|&&v| l.contains(w, v)) {
                    let two = self.res[&(x, w)].then(&self.res[&(w, v)]).expect("composable");
                    if two != self.res[&(x, v)] {
                        out.push(format!(
                            "composition: {} -> {} -> {} differs from the direct restriction",
                            l.name(x),
                            l.name(w),
                            l.name(v)
                        ));
                    }
                }
            }
        }
        out
    }

    fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(GlueError::structural(format!("invalid presheaf: {}", v.join("; "))))
        }
    }
}

/// An open `target` and opens inside it whose union is `target`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cover {
    pub target: usize,
    pub members: Vec<usize>,
}

impl Cover {
    pub fn new(lattice: &OpenLattice, target: usize, members: Vec<usize>) -> Result<Cover> {
        let mut covered = Vec::new();
        for &m in &members {
            if m >= lattice.len() || !lattice.contains(target, m) {
                return Err(GlueError::structural(format!(
                    "cover member is not an open inside {}",
                    lattice.name(target)
                )));
            }
            covered = union(&covered, lattice.open(m));
        }
        if covered != lattice.open(target) {
            return Err(GlueError::structural(format!("members do not cover {}", lattice.name(target))));
        }
        Ok(Cover { target, members })
    }

    pub fn describe(&self, lattice: &OpenLattice) -> String {
        let names: Vec<String> = self.members.iter().map(|&m| lattice.name(m)).collect();
        format!("{} by [{}]", lattice.name(self.target), names.join(", "))
    }
}

/// For each open inside `domain`: the trivial cover, the cover by maximal
/// proper opens when they cover, and (optionally) the empty cover of `∅`.
pub fn default_covers(lattice: &OpenLattice, domain: usize, empty_cover: bool) -> Vec<Cover> {
    let mut out = Vec::new();
    for u in lattice.within(domain) {
        out.push(Cover { target: u, members: vec![u] });
        let proper: Vec<usize> = lattice.within(u).into_iter().filter(|&v| v != u).collect();
        let maximal: Vec<usize> =
            proper.iter().copied().filter(|&v| !proper.iter().any(|&w| w != v && lattice.contains(w, v))).collect();
        if !maximal.is_empty() {
            if let Ok(c) = Cover::new(lattice, u, maximal) {
                out.push(c);
            }
        }
        if empty_cover && lattice.open(u).is_empty() {
            out.push(Cover { target: u, members: vec![] });
        }
    }
    out
}

/// Every cover of every open inside `domain` by a set of opens.
pub fn exhaustive_covers(lattice: &OpenLattice, domain: usize, empty_cover: bool, cap: u64) -> Result<Vec<Cover>> {
    let mut out = Vec::new();
    for u in lattice.within(domain) {
        let inside = lattice.within(u);
        check_cap(|| format!("subfamilies of opens in {}", lattice.name(u)), 1u128 << inside.len().min(127), cap)?;
        for mask in 0u64..1 << inside.len() {
            let members: Vec<usize> =
                inside.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &v)| v).collect();
            if members.is_empty() && !(empty_cover && lattice.open(u).is_empty()) {
                continue;
            }
            if let Ok(c) = Cover::new(lattice, u, members) {
                out.push(c);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SheafCheck {
    pub holds: bool,
    pub counterexample: Option<String>,
}

/// Compatible families over a cover, as section indices per member.
fn compatible_families(p: &PresheafStore, cover: &Cover, cap: u64) -> Result<Vec<Vec<usize>>> {
    let l = &p.lattice;
    let m = &cover.members;
    let size = m.iter().fold(1u128, |acc, &u| acc.saturating_mul(p.sections(u).len() as u128));
    check_cap(|| format!("families over {}", cover.describe(l)), size, cap)?;
    let mut out = Vec::new();
    let mut family = Vec::with_capacity(m.len());
    fn extend(p: &PresheafStore, m: &[usize], family: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let k = family.len();
        if k == m.len() {
            out.push(family.clone());
            return;
        }
        let l = &p.lattice;
        for s in p.sections(m[k]).elements() {
            let agrees = (0..k).all(|j| {
                let w = l.meet(m[j], m[k]);
                p.res(m[j], w).apply(family[j]) == p.res(m[k], w).apply(s)
            });
            if agrees {
                family.push(s);
                extend(p, m, family, out);
                family.pop();
            }
        }
    }
    extend(p, m, &mut family, &mut out);
    Ok(out)
}

fn restrictions(p: &PresheafStore, cover: &Cover, s: usize) -> Vec<usize> {
    cover.members.iter().map(|&u| p.res(cover.target, u).apply(s)).collect()
}

fn check_covers(p: &PresheafStore, covers: &[Cover]) -> Result<()> {
    for c in covers {
        if !p.lattice.contains(p.domain, c.target) {
            return Err(GlueError::structural(format!(
                "cover of {} outside the presheaf's domain",
                p.lattice.name(c.target)
            )));
        }
        Cover::new(&p.lattice, c.target, c.members.clone())?;
    }
    Ok(())
}

pub fn is_separated(p: &PresheafStore, covers: &[Cover]) -> Result<SheafCheck> {
    p.ensure_valid()?;
    check_covers(p, covers)?;
    for c in covers {
        let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
        for s in p.sections(c.target).elements() {
            if let Some(&t) = seen.get(&restrictions(p, c, s)) {
                let sec = p.sections(c.target);
                return Ok(SheafCheck {
                    holds: false,
                    counterexample: Some(format!(
                        "sections {} and {} over {} agree on the cover {}",
                        sec.label(t),
                        sec.label(s),
                        p.lattice.name(c.target),
                        c.describe(&p.lattice)
                    )),
                });
            }
            seen.insert(restrictions(p, c, s), s);
        }
    }
    Ok(SheafCheck { holds: true, counterexample: None })
}

pub fn is_sheaf(p: &PresheafStore, covers: &[Cover], cap: u64) -> Result<SheafCheck> {
    let separated = is_separated(p, covers)?;
    if !separated.holds {
        return Ok(separated);
    }
    for c in covers {
        let glued: HashSet<Vec<usize>> = p.sections(c.target).elements().map(|s| restrictions(p, c, s)).collect();
        for family in compatible_families(p, c, cap)? {
            if !glued.contains(&family) {
                let parts: Vec<String> =
                    family.iter().zip(&c.members).map(|(&s, &u)| p.sections(u).label(s).to_string()).collect();
                return Ok(SheafCheck {
                    holds: false,
                    counterexample: Some(format!(
                        "compatible family [{}] on the cover {} does not glue",
                        parts.join(", "),
                        c.describe(&p.lattice)
                    )),
                });
            }
        }
    }
    Ok(SheafCheck { holds: true, counterexample: None })
}

/// `f_* P` with `(f_* P)(V) = P(f⁻¹ V)`, on the opens of the target.
pub fn direct_image(f: &TopMap, p: &PresheafStore, target: &OpenLattice) -> Result<PresheafStore> {
    if f.source != p.lattice.space || f.target != target.space {
        return Err(GlueError::structural("map endpoints differ from the presheaf's space and the target lattice"));
    }
    if p.domain != p.lattice.top() {
        return Err(GlueError::structural("direct images are taken of presheaves on the whole space"));
    }
    let pre = |v: usize| {
        p.lattice.id(&f.map.preimage(target.open(v))).ok_or_else(|| GlueError::structural("the map is not continuous"))
    };
    let mut sections = BTreeMap::new();
    let mut res = BTreeMap::new();
    for v in 0..target.len() {
        sections.insert(v, p.sections(pre(v)?).clone());
    }
    for w in 0..target.len() {
        for v in target.within(w) {
            res.insert((w, v), p.res(pre(w)?, pre(v)?).clone());
        }
    }
    PresheafStore::new(target.clone(), target.top(), sections, res)
}

/// `P` restricted to the opens inside `v`.
pub fn restrict(p: &PresheafStore, v: &[usize]) -> Result<PresheafStore> {
    let v = p.lattice.id(v).ok_or_else(|| GlueError::structural("the subset is not open"))?;
    restrict_to(p, v)
}

pub fn restrict_to(p: &PresheafStore, v: usize) -> Result<PresheafStore> {
    if !p.lattice.contains(p.domain, v) {
        return Err(GlueError::structural(format!("{} is not inside the presheaf's domain", p.lattice.name(v))));
    }
    let keep = p.lattice.within(v);
    let sections = keep.iter().map(|&u| (u, p.sections(u).clone())).collect();
    let res = p.res.iter().filter(|((w, _), _)| keep.contains(w)).map(|(&k, f)| (k, f.clone())).collect();
    PresheafStore::new(p.lattice.clone(), v, sections, res)
}

/// Charts `U_i` covering the space, local presheaves on them and
/// transition bijections `Φ_ij(W) : S_i(W) → S_j(W)` for `W ⊆ U_i ∩ U_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GluingDatum {
    pub lattice: OpenLattice,
    pub charts: Vec<(String, usize)>,
    pub locals: Vec<PresheafStore>,
    pub transitions: BTreeMap<(usize, usize), BTreeMap<usize, FinFn>>,
}

impl GluingDatum {
    fn chart(&self, i: usize) -> usize {
        self.charts[i].1
    }

    pub fn phi(&self, i: usize, j: usize, w: usize) -> &FinFn {
        &self.transitions[&(i, j)][&w]
    }

    /// Identity transitions everywhere.
    pub fn with_identity_transitions(
        lattice: &OpenLattice,
        charts: Vec<(String, usize)>,
        locals: Vec<PresheafStore>,
    ) -> GluingDatum {
        let mut transitions = BTreeMap::new();
        for (i, &(_, ui)) in charts.iter().enumerate() {
            for (j, &(_, uj)) in charts.iter().enumerate() {
                let meet = lattice.meet(ui, uj);
                let family = lattice
                    .within(meet)
                    .into_iter()
                    .filter_map(|w| locals[i].sections.get(&w).map(|s| (w, FinFn::identity(s))))
                    .collect();
                transitions.insert((i, j), family);
            }
        }
        GluingDatum { lattice: lattice.clone(), charts, locals, transitions }
    }

    pub fn validate(&self) -> Vec<String> {
        let l = &self.lattice;
        let mut out = Vec::new();
        if self.charts.len() != self.locals.len() {
            return vec!["one local presheaf is needed per chart".into()];
        }
        let union_all = self.charts.iter().fold(Vec::new(), |acc, &(_, u)| union(&acc, l.open(u)));
        if union_all != l.open(l.top()) {
            out.push("charts do not cover the space".into());
        }
        for (i, local) in self.locals.iter().enumerate() {
            let name = &self.charts[i].0;
            if local.lattice != *l || local.domain != self.chart(i) {
                out.push(format!("local {name} does not live on its chart"));
                continue;
            }
            out.extend(local.validate().into_iter().map(|v| format!("local {name}: {v}")));
        }
        if !out.is_empty() {
            return out;
        }
        let n = self.charts.len();
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (&self.charts[i].0, &self.charts[j].0);
                let meet = l.meet(self.chart(i), self.chart(j));
                let Some(family) = self.transitions.get(&(i, j)) else {
                    out.push(format!("no transition from {a} to {b}"));
                    continue;
                };
                let opens = l.within(meet);
                if family.keys().copied().collect::<Vec<_>>() != opens {
                    out.push(format!("transition {a} -> {b} must be given exactly on the opens of the overlap"));
                    continue;
                }
                for &w in &opens {
                    let f = &family[&w];
                    let (si, sj) = (self.locals[i].sections(w), self.locals[j].sections(w));
                    if f.domain() != si || f.codomain() != sj || !f.is_bijective() {
                        out.push(format!("transition {a} -> {b} over {} is not a bijection of sections", l.name(w)));
                    }
                }
                if !out.is_empty() {
                    continue;
                }
                for &w in &opens {
                    for v in l.within(w) {
                        let left = family[&w].then(self.locals[j].res(w, v)).expect("composable");
                        let right = self.locals[i].res(w, v).then(&family[&v]).expect("composable");
                        if left != right {
                            out.push(format!(
                                "transition {a} -> {b} is not natural for {} -> {}",
                                l.name(w),
                                l.name(v)
                            ));
                        }
                    }
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
        for i in 0..n {
            for j in 0..n {
                for (&w, f) in &self.transitions[&(i, j)] {
                    if f.then(self.phi(j, i, w)).map(|c| c.is_identity()) != Ok(true) {
                        out.push(format!(
                            "transitions {} -> {} and back over {} are not inverse",
                            self.charts[i].0,
                            self.charts[j].0,
                            l.name(w)
                        ));
                    }
                }
            }
        }
        out
    }
}

/// The glued presheaf with its projections `Ψ_i(V) : L(V) → S_i(V ∩ U_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GluedPresheaf {
    pub store: PresheafStore,
    pub projections: Vec<BTreeMap<usize, FinFn>>,
}

pub fn glue_presheaves(d: &GluingDatum, cap: u64) -> Result<GluedPresheaf> {
    let violations = d.validate();
    if !violations.is_empty() {
        return Err(GlueError::structural(format!("invalid gluing datum: {}", violations.join("; "))));
    }
    let l = &d.lattice;
    let n = d.charts.len();
    let mut families: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
    for v in 0..l.len() {
        let pieces: Vec<usize> = (0..n).map(|i| l.meet(v, d.chart(i))).collect();
        let size = pieces
            .iter()
            .enumerate()
            .fold(1u128, |acc, (i, &p)| acc.saturating_mul(d.locals[i].sections(p).len() as u128));
        check_cap(|| format!("families over {}", l.name(v)), size, cap)?;
        let mut out = Vec::new();
        let mut family = Vec::with_capacity(n);
        fn extend(d: &GluingDatum, pieces: &[usize], family: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            let l = &d.lattice;
            let k = family.len();
            if k == pieces.len() {
                out.push(family.clone());
                return;
            }
            for s in d.locals[k].sections(pieces[k]).elements() {
                family.push(s);
                let ok = (0..=k).all(|i| {
                    [(i, k), (k, i)].iter().all(|&(a, b)| {
                        let w = l.meet(pieces[a], pieces[b]);
                        let there = d.locals[a].res(pieces[a], w).apply(family[a]);
                        d.phi(a, b, w).apply(there) == d.locals[b].res(pieces[b], w).apply(family[b])
                    })
                });
                if ok {
                    extend(d, pieces, family, out);
                }
                family.pop();
            }
        }
        extend(d, &pieces, &mut family, &mut out);
        families.insert(v, out);
    }
    let label = |v: usize, f: &[usize]| -> String {
        let parts: Vec<&str> =
            f.iter().enumerate().map(|(i, &s)| d.locals[i].sections(l.meet(v, d.chart(i))).label(s)).collect();
        serde_json::to_string(&parts).expect("strings serialize")
    };
    let mut sections = BTreeMap::new();
    for (&v, fams) in &families {
        sections.insert(v, FinSet::new(fams.iter().map(|f| label(v, f)))?);
    }
    let mut res = BTreeMap::new();
    for w in 0..l.len() {
        for v in l.within(w) {
            let index: HashMap<&[usize], usize> =
                families[&v].iter().enumerate().map(|(k, f)| (f.as_slice(), k)).collect();
            let map = families[&w]
                .iter()
                .map(|f| {
                    let restricted: Vec<usize> = (0..n)
                        .map(|i| d.locals[i].res(l.meet(w, d.chart(i)), l.meet(v, d.chart(i))).apply(f[i]))
                        .collect();
                    index[restricted.as_slice()]
                })
                .collect();
            res.insert((w, v), FinFn::new(sections[&w].clone(), sections[&v].clone(), map)?);
        }
    }
    let store = PresheafStore::new(l.clone(), l.top(), sections, res)?;
    let projections = (0..n)
        .map(|i| {
            (0..l.len())
                .map(|v| {
                    let map = families[&v].iter().map(|f| f[i]).collect();
                    let target = d.locals[i].sections(l.meet(v, d.chart(i))).clone();
                    Ok((v, FinFn::new(store.sections(v).clone(), target, map)?))
                })
                .collect::<Result<BTreeMap<_, _>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GluedPresheaf { store, projections })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresheafEffectiveness {
    /// `Φ_ii = id` for every chart.
    pub identity: bool,
    /// `Φ_jk ∘ Φ_ij = Φ_ik` on every triple overlap.
    pub cocycle: bool,
    /// Every `Ψ_i(V)` with `V ⊆ U_i` is a bijection.
    pub psi_bijective: bool,
    pub diagnostics: Vec<String>,
}

pub fn presheaf_effective_check(d: &GluingDatum, glued: &GluedPresheaf) -> PresheafEffectiveness {
    let l = &d.lattice;
    let n = d.charts.len();
    let name = |i: usize| d.charts[i].0.as_str();
    let mut diagnostics = Vec::new();
    let mut identity = true;
    for i in 0..n {
        for (&w, f) in &d.transitions[&(i, i)] {
            if !f.is_identity() {
                identity = false;
                diagnostics.push(format!(
                    "identity: transition {0} -> {0} over {1} is not the identity",
                    name(i),
                    l.name(w)
                ));
            }
        }
    }
    let mut cocycle = true;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let meet = l.meet(l.meet(d.chart(i), d.chart(j)), d.chart(k));
                for w in l.within(meet) {
                    let two = d.phi(i, j, w).then(d.phi(j, k, w)).expect("composable");
                    if &two != d.phi(i, k, w) {
                        cocycle = false;
                        diagnostics.push(format!(
                            "cocycle: {} -> {} -> {} differs from {} -> {} over {}",
                            name(i),
                            name(j),
                            name(k),
                            name(i),
                            name(k),
                            l.name(w)
                        ));
                    }
                }
            }
        }
    }
    let mut psi_bijective = true;
    for i in 0..n {
        for v in l.within(d.chart(i)) {
            if !glued.projections[i][&v].is_bijective() {
                psi_bijective = false;
                diagnostics.push(format!("psi: projection to {} over {} is not a bijection", name(i), l.name(v)));
            }
        }
    }
    PresheafEffectiveness { identity, cocycle, psi_bijective, diagnostics }
}

/// Restrictions of `F` to the charts with identity transitions.
pub fn canonical_presheaf_functor(f: &PresheafStore, charts: Vec<(String, usize)>) -> Result<GluingDatum> {
    let locals = charts.iter().map(|&(_, u)| restrict_to(f, u)).collect::<Result<Vec<_>>>()?;
    Ok(GluingDatum::with_identity_transitions(&f.lattice, charts, locals))
}

/// A natural transformation between presheaves on the same opens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NatTrans {
    pub source: PresheafStore,
    pub target: PresheafStore,
    pub components: BTreeMap<usize, FinFn>,
}

impl NatTrans {
    pub fn identity(p: &PresheafStore) -> NatTrans {
        let components = p.opens().into_iter().map(|u| (u, FinFn::identity(p.sections(u)))).collect();
        NatTrans { source: p.clone(), target: p.clone(), components }
    }

    pub fn validate(&self) -> Vec<String> {
        let (s, t) = (&self.source, &self.target);
        let l = &s.lattice;
        let mut out = Vec::new();
        if s.lattice != t.lattice || s.domain != t.domain {
            return vec!["source and target live on different opens".into()];
        }
        for u in s.opens() {
            match self.components.get(&u) {
                Some(f) if f.domain() == s.sections(u) && f.codomain() == t.sections(u) => {}
                _ => out.push(format!("component over {} is missing or ill-typed", l.name(u))),
            }
        }
        if !out.is_empty() {
            return out;
        }
        for w in s.opens() {
            for v in l.within(w) {
                let left = self.components[&w].then(t.res(w, v)).expect("composable");
                let right = s.res(w, v).then(&self.components[&v]).expect("composable");
                if left != right {
                    out.push(format!("naturality fails for {} -> {}", l.name(w), l.name(v)));
                }
            }
        }
        out
    }

    /// Components over the opens inside `u`.
    pub fn restrict_to(&self, u: usize) -> Result<NatTrans> {
        let source = restrict_to(&self.source, u)?;
        let target = restrict_to(&self.target, u)?;
        let components = source.opens().into_iter().map(|v| (v, self.components[&v].clone())).collect();
        Ok(NatTrans { source, target, components })
    }
}

/// The unique transformation `S → T` restricting to each part on its chart.
pub fn glue_nat_trans(
    charts: &[usize],
    s: &PresheafStore,
    t: &PresheafStore,
    parts: &[NatTrans],
    cap: u64,
) -> Result<NatTrans> {
    let l = &s.lattice;
    if s.lattice != t.lattice || s.domain != l.top() || t.domain != l.top() {
        return Err(GlueError::structural("presheaves must live on the whole space"));
    }
    Cover::new(l, l.top(), charts.to_vec())?;
    if parts.len() != charts.len() {
        return Err(GlueError::structural("one part is needed per chart"));
    }
    for (i, p) in parts.iter().enumerate() {
        if p.source.domain != charts[i] || p.target.domain != charts[i] {
            return Err(GlueError::structural(format!("part {i} does not live on its chart")));
        }
        let v = p.validate();
        if !v.is_empty() {
            return Err(GlueError::structural(format!("part {i}: {}", v.join("; "))));
        }
    }
    for i in 0..charts.len() {
        for j in i + 1..charts.len() {
            for w in l.within(l.meet(charts[i], charts[j])) {
                if parts[i].components[&w] != parts[j].components[&w] {
                    return Err(GlueError::structural(format!("parts {i} and {j} disagree over {}", l.name(w))));
                }
            }
        }
    }
    let induced: Vec<Cover> = (0..l.len())
        .map(|v| Cover::new(l, v, charts.iter().map(|&u| l.meet(v, u)).collect()))
        .collect::<Result<_>>()?;
    let check = is_sheaf(t, &induced, cap)?;
    if !check.holds {
        return Err(GlueError::structural(format!(
            "target is not a sheaf on the induced covers: {}",
            check.counterexample.unwrap_or_default()
        )));
    }
    let mut components = BTreeMap::new();
    for (v, cover) in induced.iter().enumerate() {
        let glued: HashMap<Vec<usize>, usize> =
            t.sections(v).elements().map(|x| (restrictions(t, cover, x), x)).collect();
        let map = s
            .sections(v)
            .elements()
            .map(|x| {
                let family: Vec<usize> = charts
                    .iter()
                    .zip(&cover.members)
                    .zip(parts)
                    .map(|((_, &piece), part)| part.components[&piece].apply(s.res(v, piece).apply(x)))
                    .collect();
                glued.get(&family).copied().ok_or_else(|| GlueError::structural("local images do not glue"))
            })
            .collect::<Result<Vec<_>>>()?;
        components.insert(v, FinFn::new(s.sections(v).clone(), t.sections(v).clone(), map)?);
    }
    let alpha = NatTrans { source: s.clone(), target: t.clone(), components };
    let v = alpha.validate();
    if !v.is_empty() {
        return Err(GlueError::structural(format!("glued transformation is not natural: {}", v.join("; "))));
    }
    for (i, part) in parts.iter().enumerate() {
        if &alpha.restrict_to(charts[i])? != part {
            return Err(GlueError::structural(format!("glued transformation does not restrict to part {i}")));
        }
    }
    Ok(alpha)
}

/// Every natural transformation `S → T`, by backtracking over the opens.
pub fn all_nat_trans(s: &PresheafStore, t: &PresheafStore, cap: u64) -> Result<Vec<NatTrans>> {
    let l = &s.lattice;
    let opens = s.opens();
    let mut out = Vec::new();
    let mut chosen: Vec<Vec<usize>> = Vec::new();
    fn hom_values(n: usize, m: usize, k: usize) -> Vec<usize> {
        let mut v = vec![0; n];
        let mut rest = k;
        for slot in v.iter_mut().rev() {
            *slot = rest % m.max(1);
            rest /= m.max(1);
        }
        v
    }
    #[allow(clippy::too_many_arguments)]
    fn go(
        k: usize,
        opens: &[usize],
        l: &OpenLattice,
        s: &PresheafStore,
        t: &PresheafStore,
        chosen: &mut Vec<Vec<usize>>,
        out: &mut Vec<Vec<Vec<usize>>>,
        cap: u64,
    ) -> Result<()> {
        if k == opens.len() {
            check_cap(|| "natural transformations".into(), out.len() as u128 + 1, cap)?;
            out.push(chosen.clone());
            return Ok(());
        }
        let w = opens[k];
        let (n, m) = (s.sections(w).len(), t.sections(w).len());
        if n > 0 && m == 0 {
            return Ok(());
        }
        let total = (m as u128).saturating_pow(n as u32);
        check_cap(|| "component maps".into(), total, cap)?;
        for idx in 0..total as usize {
            let f = hom_values(n, m, idx);
            // Opens come smallest first, so every v ⊊ w is already chosen.
            let natural = (0..k).filter(|&j| l.contains(w, opens[j])).all(|j| {
                let v = opens[j];
                (0..n).all(|x| t.res(w, v).apply(f[x]) == chosen[j][s.res(w, v).apply(x)])
            });
            if natural {
                chosen.push(f);
                go(k + 1, opens, l, s, t, chosen, out, cap)?;
                chosen.pop();
            }
        }
        Ok(())
    }
    let mut raw = Vec::new();
    go(0, &opens, l, s, t, &mut chosen, &mut raw, cap)?;
    for comps in raw {
        let components = opens
            .iter()
            .zip(comps)
            .map(|(&u, values)| Ok((u, FinFn::new(s.sections(u).clone(), t.sections(u).clone(), values)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        out.push(NatTrans { source: s.clone(), target: t.clone(), components });
    }
    Ok(out)
}
