//! Seeded random instances and brute-force oracles shared by the
//! integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use glueforge::fincat::{FinFn, FinSet, FinTop, Topology, DEFAULT_CAP};
use glueforge::gluing::{Ambient, GluingData, Identification, Side};
use glueforge::indexcat::{IndexObject, Mode};
use glueforge::presheaf::{NatTrans, OpenLattice, PresheafStore};
use glueforge::site::{Sink, SinkSource};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn labels(prefix: &str, n: usize) -> FinSet {
    FinSet::new((0..n).map(|k| format!("{prefix}{k}"))).unwrap()
}

pub fn set(names: &[&str]) -> FinSet {
    FinSet::new(names.iter().copied()).unwrap()
}

pub fn random_fn(rng: &mut ChaCha8Rng, domain: &FinSet, codomain: &FinSet) -> FinFn {
    let values = domain.elements().map(|_| rng.gen_range(0..codomain.len())).collect();
    FinFn::new(domain.clone(), codomain.clone(), values).unwrap()
}

fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

fn random_involution(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut p: Vec<usize> = (0..n).collect();
    for pair in order.chunks(2) {
        if pair.len() == 2 && rng.gen_bool(0.6) {
            p[pair[0]] = pair[1];
            p[pair[1]] = pair[0];
        }
    }
    p
}

fn index(n: usize) -> FinSet {
    FinSet::new((1..=n).map(|k| k.to_string())).unwrap()
}

/// Non-split colimit-side sets data: parts of size ≤ `max_size`, arbitrary edges.
pub fn random_nonsplit(rng: &mut ChaCha8Rng, max_n: usize, max_size: usize) -> GluingData {
    let n = rng.gen_range(1..=max_n);
    let parts: Vec<FinSet> = (0..n).map(|i| labels(&format!("p{i}_"), rng.gen_range(1..=max_size))).collect();
    let mut b = GluingData::builder(index(n), Mode::Nonsplit, Ambient::Sets, Side::Colimit).unwrap();
    for (i, p) in parts.iter().enumerate() {
        b.set(IndexObject::Single(i), p.clone());
    }
    for i in 0..n {
        for j in i + 1..n {
            let w = labels("w", rng.gen_range(0..=max_size.min(3)));
            b.set(IndexObject::Pair(i, j), w.clone());
            b.edge(i, j, random_fn(rng, &w, &parts[i]));
            b.edge(j, i, random_fn(rng, &w, &parts[j]));
        }
    }
    b.build().unwrap()
}

/// Split colimit-side sets data with random swaps (involutions on the diagonal).
pub fn random_split(rng: &mut ChaCha8Rng, max_n: usize, max_size: usize) -> GluingData {
    let n = rng.gen_range(1..=max_n);
    let parts: Vec<FinSet> = (0..n).map(|i| labels(&format!("p{i}_"), rng.gen_range(1..=max_size))).collect();
    let mut b = GluingData::builder(index(n), Mode::Split, Ambient::Sets, Side::Colimit).unwrap();
    for (i, p) in parts.iter().enumerate() {
        b.set(IndexObject::Single(i), p.clone());
    }
    for i in 0..n {
        for j in i..n {
            let k = rng.gen_range(0..=max_size.min(3));
            let w = labels(&format!("w{i}{j}_"), k);
            b.set(IndexObject::Pair(i, j), w.clone());
            b.edge(i, j, random_fn(rng, &w, &parts[i]));
            if i == j {
                let inv = random_involution(rng, k);
                b.swap(i, i, FinFn::new(w.clone(), w.clone(), inv).unwrap());
            } else {
                let v = labels(&format!("w{j}{i}_"), k);
                b.set(IndexObject::Pair(j, i), v.clone());
                b.edge(j, i, random_fn(rng, &v, &parts[j]));
                let perm = random_permutation(rng, k);
                b.swap(i, j, FinFn::new(w, v, perm).unwrap());
            }
        }
    }
    b.build().unwrap()
}

/// Limit-side sets data, split or not, with small overlaps so that
/// compatible families exist.
pub fn random_limit(rng: &mut ChaCha8Rng, max_n: usize, max_size: usize) -> GluingData {
    let n = rng.gen_range(1..=max_n);
    let split = rng.gen_bool(0.5);
    let mode = if split { Mode::Split } else { Mode::Nonsplit };
    let parts: Vec<FinSet> = (0..n).map(|i| labels(&format!("p{i}_"), rng.gen_range(0..=max_size))).collect();
    let mut b = GluingData::builder(index(n), mode, Ambient::Sets, Side::Limit).unwrap();
    for (i, p) in parts.iter().enumerate() {
        b.set(IndexObject::Single(i), p.clone());
    }
    for i in 0..n {
        let start = if split { i } else { i + 1 };
        for j in start..n {
            let k = rng.gen_range(1..=max_size.clamp(1, 2));
            let w = labels(&format!("w{i}{j}_"), k);
            b.set(IndexObject::Pair(i, j), w.clone());
            b.edge(i, j, random_fn(rng, &parts[i], &w));
            if split && i != j {
                let v = labels(&format!("w{j}{i}_"), k);
                b.set(IndexObject::Pair(j, i), v.clone());
                b.edge(j, i, random_fn(rng, &parts[j], &v));
                b.swap(i, j, FinFn::new(w, v, random_permutation(rng, k)).unwrap());
            } else if split {
                b.swap(i, i, FinFn::new(w.clone(), w, random_involution(rng, k)).unwrap());
            } else {
                b.edge(j, i, random_fn(rng, &parts[j], &w));
            }
        }
    }
    b.build().unwrap()
}

/// A chain `x_1 ~ x_2 ~ … ~ x_k` (k ≥ 3) of parts with extra points and no
/// overlap between the ends: never effective.
pub fn e4_family(rng: &mut ChaCha8Rng) -> GluingData {
    let k = rng.gen_range(3..=4);
    let parts: Vec<FinSet> = (0..k).map(|i| labels(&format!("x{i}_"), rng.gen_range(1..=3))).collect();
    let links: Vec<Identification> = (0..k - 1)
        .map(|i| Identification {
            label: format!("l{i}"),
            left: (i, rng.gen_range(0..parts[i].len())),
            right: (i + 1, rng.gen_range(0..parts[i + 1].len())),
        })
        .collect();
    GluingData::from_identifications(index(k), parts, &links).unwrap()
}

/// A random finite space on `n` points, generated by random subsets.
pub fn random_space(rng: &mut ChaCha8Rng, prefix: &str, n: usize) -> FinTop {
    let generators: Vec<Vec<usize>> =
        (0..rng.gen_range(0..=n + 1)).map(|_| (0..n).filter(|_| rng.gen_bool(0.5)).collect()).collect();
    FinTop::new(labels(prefix, n), Topology::generated_by(n, generators)).unwrap()
}

pub fn opens(space: &FinTop) -> Vec<Vec<usize>> {
    space.opens(DEFAULT_CAP).unwrap()
}

/// A sink of sets with random maps; sometimes missing points of the target.
pub fn random_sink_sets(rng: &mut ChaCha8Rng) -> Sink {
    let target = labels("u", rng.gen_range(0..=5));
    let k = rng.gen_range(0..=3);
    let sources = (0..k)
        .map(|s| {
            let dom = labels(&format!("s{s}_"), if target.is_empty() { 0 } else { rng.gen_range(0..=4) });
            SinkSource {
                label: format!("s{s}"),
                space: FinTop::discrete(dom.clone()),
                map: random_fn(rng, &dom, &target),
            }
        })
        .collect();
    Sink::new(Ambient::Sets, FinTop::discrete(target), sources).unwrap()
}

/// A jointly surjective sink of sets into `target`.
pub fn surjective_sink(rng: &mut ChaCha8Rng, target: &FinTop, prefix: &str) -> Sink {
    let u = &target.carrier;
    let k = rng.gen_range(1..=3);
    let mut domains: Vec<Vec<usize>> = vec![Vec::new(); k];
    for x in u.elements() {
        domains[rng.gen_range(0..k)].push(x);
    }
    for d in domains.iter_mut() {
        for _ in 0..rng.gen_range(0..=1) {
            if !u.is_empty() {
                d.push(rng.gen_range(0..u.len()));
            }
        }
    }
    let sources = domains
        .into_iter()
        .enumerate()
        .map(|(s, values)| {
            let dom = labels(&format!("{prefix}{s}_"), values.len());
            SinkSource {
                label: format!("{prefix}{s}"),
                space: FinTop::discrete(dom.clone()),
                map: FinFn::new(dom, u.clone(), values).unwrap(),
            }
        })
        .collect();
    Sink::new(Ambient::Sets, target.clone(), sources).unwrap()
}

/// Open subspace inclusion `U ↪ X`.
pub fn inclusion(space: &FinTop, members: &[usize], prefix: &str) -> (FinTop, FinFn) {
    let sub = space.subspace(members);
    let relabelled = FinSet::new(sub.carrier.labels().iter().map(|l| format!("{prefix}{l}"))).unwrap();
    let sub = FinTop::new(relabelled, sub.topology).unwrap();
    let map = FinFn::new(sub.carrier.clone(), space.carrier.clone(), members.to_vec()).unwrap();
    (sub, map)
}

/// An open cover of `space` as a sink of open inclusions.
pub fn open_cover_sink(rng: &mut ChaCha8Rng, space: &FinTop, prefix: &str) -> Sink {
    let all = opens(space);
    let mut chosen: Vec<Vec<usize>> = Vec::new();
    let mut covered: BTreeSet<usize> = BTreeSet::new();
    for _ in 0..rng.gen_range(1..=3) {
        chosen.push(all.choose(rng).unwrap().clone());
    }
    for o in &chosen {
        covered.extend(o);
    }
    for x in space.carrier.elements() {
        if !covered.contains(&x) {
            let o = space.topology.neighbourhood(x).to_vec();
            covered.extend(&o);
            chosen.push(o);
        }
    }
    let sources = chosen
        .iter()
        .enumerate()
        .map(|(k, o)| {
            let (sub, map) = inclusion(space, o, &format!("{prefix}{k}."));
            SinkSource { label: format!("{prefix}{k}"), space: sub, map }
        })
        .collect();
    Sink::new(Ambient::Top, space.clone(), sources).unwrap()
}

/// A sink of open continuous maps `V_i × F_i → V_i ↪ X`; injective when
/// every fibre has one point.
pub fn open_map_sink(rng: &mut ChaCha8Rng, space: &FinTop, fibres: bool) -> Sink {
    let cover = open_cover_sink(rng, space, "c");
    let sources = cover
        .sources
        .into_iter()
        .map(|s| {
            let f = if fibres { rng.gen_range(1..=2) } else { 1 };
            let n = s.space.len();
            let carrier =
                FinSet::new((0..n * f).map(|k| format!("{}#{}", s.space.carrier.label(k % n), k / n))).unwrap();
            let nbhd: Vec<Vec<usize>> = (0..n * f)
                .map(|k| s.space.topology.neighbourhood(k % n).iter().map(|&y| y + (k / n) * n).collect())
                .collect();
            let topology = Topology::from_neighbourhoods(nbhd).unwrap();
            let map =
                FinFn::new(carrier.clone(), space.carrier.clone(), (0..n * f).map(|k| s.map.apply(k % n)).collect())
                    .unwrap();
            SinkSource { label: s.label, space: FinTop::new(carrier, topology).unwrap(), map }
        })
        .collect();
    Sink::new(Ambient::Top, space.clone(), sources).unwrap()
}

/// Class id per `(i, x)` by saturating the generating relation to a fixed point.
#[allow(clippy::needless_range_loop)]
pub fn naive_colimit_classes(data: &GluingData) -> BTreeMap<(usize, usize), usize> {
    let n = data.len();
    let mut points = Vec::new();
    for i in 0..n {
        for x in data.part(i).elements() {
            points.push((i, x));
        }
    }
    let pos: BTreeMap<(usize, usize), usize> = points.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let m = points.len();
    let mut rel = vec![vec![false; m]; m];
    for (k, row) in rel.iter_mut().enumerate() {
        row[k] = true;
    }
    for i in 0..n {
        for j in 0..n {
            if data.mode() == Mode::Nonsplit && i >= j {
                continue;
            }
            for u in data.overlap(i, j).elements() {
                let v = if data.mode() == Mode::Split { data.swap(i, j).apply(u) } else { u };
                let a = pos[&(i, data.edge(i, j).apply(u))];
                let b = pos[&(j, data.edge(j, i).apply(v))];
                rel[a][b] = true;
                rel[b][a] = true;
            }
        }
    }
    loop {
        let mut changed = false;
        for a in 0..m {
            for b in 0..m {
                if rel[a][b] {
                    for c in 0..m {
                        if rel[b][c] && !rel[a][c] {
                            rel[a][c] = true;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut class = vec![usize::MAX; m];
    let mut next = 0;
    for a in 0..m {
        if class[a] == usize::MAX {
            for b in 0..m {
                if rel[a][b] {
                    class[b] = next;
                }
            }
            next += 1;
        }
    }
    points.into_iter().zip(class).collect()
}

/// Whether two class assignments induce the same partition.
pub fn same_partition(a: &BTreeMap<(usize, usize), usize>, b: &BTreeMap<(usize, usize), usize>) -> bool {
    let keys: Vec<_> = a.keys().collect();
    keys.len() == b.len()
        && keys.iter().all(|k| b.contains_key(k))
        && keys.iter().all(|p| keys.iter().all(|q| (a[p] == a[q]) == (b[p] == b[q])))
}

/// Every family `(x_i)` of the product satisfying the limit-side conditions.
pub fn brute_force_families(data: &GluingData) -> BTreeSet<Vec<usize>> {
    let n = data.len();
    let sizes: Vec<usize> = (0..n).map(|i| data.part(i).len()).collect();
    let mut out = BTreeSet::new();
    if sizes.contains(&0) {
        return out;
    }
    let mut family = vec![0usize; n];
    loop {
        let ok = (0..n).all(|i| {
            (0..n).all(|j| match data.mode() {
                Mode::Nonsplit => i >= j || data.edge(i, j).apply(family[i]) == data.edge(j, i).apply(family[j]),
                Mode::Split => {
                    data.edge(i, j).apply(family[i]) == data.swap(j, i).apply(data.edge(j, i).apply(family[j]))
                }
            })
        });
        if ok {
            out.insert(family.clone());
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            family[pos] += 1;
            if family[pos] < sizes[pos] {
                break;
            }
            family[pos] = 0;
        }
    }
}

/// Condition (4) recomputed from the closure oracle: every `G(i, j)` maps
/// bijectively onto the pairs of `G(i) × G(j)` with the same class, and
/// every edge is one-to-one.
pub fn strong_by_pullback(data: &GluingData) -> bool {
    let classes = naive_colimit_classes(data);
    let n = data.len();
    for i in 0..n {
        for j in 0..n {
            if !data.edge(i, j).is_injective() {
                return false;
            }
            let images: BTreeSet<(usize, usize)> = data
                .overlap(i, j)
                .elements()
                .map(|u| (data.edge(i, j).apply(u), data.edge(j, i).apply(data.swap(i, j).apply(u))))
                .collect();
            let fibre: BTreeSet<(usize, usize)> = data
                .part(i)
                .elements()
                .flat_map(|x| data.part(j).elements().map(move |y| (x, y)))
                .filter(|&(x, y)| classes[&(i, x)] == classes[&(j, y)])
                .collect();
            if images.len() != data.overlap(i, j).len() || images != fibre {
                return false;
            }
        }
    }
    true
}

/// A relabelled copy of `f`: sections over each open renamed `"{tag}k"` in a
/// shuffled order, with the bijections `f(W) → copy(W)` returned.
pub fn relabel(rng: &mut ChaCha8Rng, f: &PresheafStore, tag: &str) -> (PresheafStore, BTreeMap<usize, FinFn>) {
    let mut sections = BTreeMap::new();
    let mut to_copy = BTreeMap::new();
    for u in f.opens() {
        let n = f.sections(u).len();
        let copy = FinSet::new((0..n).map(|k| format!("{tag}{k}"))).unwrap();
        let perm = random_permutation(rng, n);
        to_copy.insert(u, FinFn::new(f.sections(u).clone(), copy.clone(), perm).unwrap());
        sections.insert(u, copy);
    }
    let mut res = BTreeMap::new();
    for w in f.opens() {
        for v in f.lattice().within(w) {
            let back = to_copy[&w].inverse().unwrap();
            let map = back.then(f.res(w, v)).unwrap().then(&to_copy[&v]).unwrap();
            res.insert((w, v), map);
        }
    }
    (PresheafStore::new(f.lattice().clone(), f.domain(), sections, res).unwrap(), to_copy)
}

/// Continuous sections of a random continuous `p : E → X`.
pub fn random_sheaf(rng: &mut ChaCha8Rng, lattice: &OpenLattice) -> PresheafStore {
    let x = lattice.space();
    let m = rng.gen_range(x.len()..=x.len() + 3);
    let e_points = labels("e", m);
    let mut values: Vec<usize> = (0..x.len()).collect();
    while values.len() < m {
        values.push(rng.gen_range(0..x.len()));
    }
    values.shuffle(rng);
    let p = FinFn::new(e_points.clone(), x.carrier.clone(), values).unwrap();
    let mut generators: Vec<Vec<usize>> = opens(x).iter().map(|o| p.preimage(o)).collect();
    for _ in 0..rng.gen_range(0..=2) {
        generators.push((0..m).filter(|_| rng.gen_bool(0.5)).collect());
    }
    let e = FinTop::new(e_points, Topology::generated_by(m, generators)).unwrap();
    let map = glueforge::fincat::TopMap::new(e, x.clone(), p).unwrap();
    PresheafStore::sections_of(&map, lattice, DEFAULT_CAP).unwrap()
}

/// Random charts covering the space, all containing the neighbourhood of `anchor` when given.
pub fn random_charts(rng: &mut ChaCha8Rng, lattice: &OpenLattice, count: usize, anchor: Option<usize>) -> Vec<usize> {
    let base = anchor.map(|x| lattice.space().topology.neighbourhood(x).to_vec()).unwrap_or_default();
    let candidates: Vec<usize> =
        (0..lattice.len()).filter(|&u| base.iter().all(|x| lattice.open(u).contains(x))).collect();
    let mut charts: Vec<usize> = (0..count).map(|_| *candidates.choose(rng).unwrap()).collect();
    let union = charts.iter().fold(0, |acc, &u| lattice.join(acc, u));
    if union != lattice.top() {
        charts[count - 1] = lattice.top();
    }
    charts
}

/// A natural transformation picked at random among all of them, if any.
pub fn random_nat_trans(rng: &mut ChaCha8Rng, all: &[NatTrans]) -> Option<NatTrans> {
    all.choose(rng).cloned()
}

/// Classes of a list of identifications on a disjoint union, by repeated merging.
pub type Point = (usize, usize);

pub fn closure(sizes: &[usize], pairs: &[(Point, Point)]) -> BTreeMap<(usize, usize), usize> {
    let mut class: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, &n) in sizes.iter().enumerate() {
        for x in 0..n {
            let next = class.len();
            class.insert((i, x), next);
        }
    }
    loop {
        let mut changed = false;
        for (a, b) in pairs {
            let (ca, cb) = (class[a], class[b]);
            if ca != cb {
                let (lo, hi) = (ca.min(cb), ca.max(cb));
                for v in class.values_mut() {
                    if *v == hi {
                        *v = lo;
                    }
                }
                changed = true;
            }
        }
        if !changed {
            return class;
        }
    }
}
