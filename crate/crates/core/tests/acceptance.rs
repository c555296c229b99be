mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use glueforge::fincat::{FinSet, FinTop, DEFAULT_CAP};
use glueforge::gluing::{
    colimit_glue, equalizer_glue_oracle, hom_transport, limit_glue, GluedObject, GluingData, Identification, Witness,
};
use glueforge::presheaf::{
    all_nat_trans, default_covers, glue_nat_trans, glue_presheaves, is_sheaf, presheaf_effective_check, restrict_to,
    GluingDatum, OpenLattice, PresheafStore,
};
use glueforge::refine::{compose_gluings, compose_via_sinks, MetaGluingData, MetaLink, NodePoint};
use glueforge::site::{
    canonical_sink_functor, effective_epi_check, effective_gluing_check, is_effective_epi_by_hom,
    universal_effective_epi_check, Sink,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn partition(data: &GluingData, glued: &GluedObject) -> BTreeMap<(usize, usize), usize> {
    (0..data.len()).flat_map(|i| data.part(i).elements().map(move |x| ((i, x), glued.leg(i).apply(x)))).collect()
}

fn class_count(classes: &BTreeMap<(usize, usize), usize>) -> usize {
    classes.values().collect::<BTreeSet<_>>().len()
}

fn families(glued: &GluedObject) -> BTreeSet<Vec<usize>> {
    match &glued.witness {
        Witness::Families { coordinates } => coordinates.iter().cloned().collect(),
        Witness::Quotient { .. } => BTreeSet::new(),
    }
}

fn colimit_oracle() -> Outcome {
    let mut r = rng(101);
    for k in 0..200 {
        let data = if k % 2 == 0 { random_nonsplit(&mut r, 4, 6) } else { random_split(&mut r, 4, 6) };
        let glued = colimit_glue(&data).map_err(|e| e.to_string())?;
        let oracle = naive_colimit_classes(&data);
        check(glued.len() == class_count(&oracle), || format!("instance {k}: apex size differs"))?;
        check(same_partition(&partition(&data, &glued), &oracle), || format!("instance {k}: partitions differ"))?;
    }
    Ok("200/200 instances, exact".into())
}

fn limit_oracle() -> Outcome {
    let mut r = rng(102);
    for k in 0..200 {
        let data = random_limit(&mut r, 3, 4);
        let lim = limit_glue(&data, DEFAULT_CAP).map_err(|e| e.to_string())?;
        let eq = equalizer_glue_oracle(&data, DEFAULT_CAP).map_err(|e| e.to_string())?;
        check(families(&lim) == families(&eq), || format!("instance {k}: member sets differ"))?;
        check(lim.legs == eq.legs, || format!("instance {k}: legs differ"))?;
        check(families(&lim) == brute_force_families(&data), || format!("instance {k}: enumeration differs"))?;
    }
    Ok("200/200 instances, members and legs identical".into())
}

fn effectiveness_agreement() -> Outcome {
    let mut r = rng(103);
    let (mut effective, mut engineered) = (0, 0);
    for k in 0..200 {
        let data = match k % 8 {
            0 => e4_family(&mut r),
            1 => {
                let n = r.gen_range(1..=4);
                let space = random_space(&mut r, "u", n);
                canonical_sink_functor(&open_cover_sink(&mut r, &space, "s")).map_err(|e| e.to_string())?
            }
            _ => random_split(&mut r, 3, 4),
        };
        let report = effective_gluing_check(&data).map_err(|e| e.to_string())?;
        let flags = [report.congruence, report.intersection, report.strong, strong_by_pullback(&data)];
        check(flags.iter().all(|&f| f == flags[0]), || format!("instance {k}: flags {flags:?}"))?;
        if k % 8 == 0 {
            check(!flags[0], || format!("instance {k}: engineered instance reported effective"))?;
            engineered += 1;
        }
        effective += usize::from(flags[0]);
    }
    check(engineered >= 20, || format!("only {engineered} engineered instances"))?;
    Ok(format!("200/200 agree; {effective} effective, {engineered} engineered non-effective"))
}

fn hom_transport_bijection() -> Outcome {
    let mut r = rng(104);
    for k in 0..50 {
        let data = random_nonsplit(&mut r, 3, 3);
        let z = labels("z", r.gen_range(1..=3));
        let t = hom_transport(&data, &z, DEFAULT_CAP).map_err(|e| e.to_string())?;
        let expected = z.len().pow(class_count(&naive_colimit_classes(&data)) as u32);
        check(t.bijective, || format!("instance {k}: not bijective"))?;
        check(t.homs == expected && t.families.len() == expected, || {
            format!("instance {k}: {} homs, {} families, expected {expected}", t.homs, t.families.len())
        })?;
    }
    let e1 = e1();
    let t = hom_transport(&e1, &FinSet::range(2), DEFAULT_CAP).map_err(|e| e.to_string())?;
    check(t.bijective && t.homs == 32 && t.families.len() == 32, || {
        format!("first example: {} homs, {} families", t.homs, t.families.len())
    })?;
    Ok("50/50 bijective; first example 32 = 32".into())
}

fn e1() -> GluingData {
    let parts = vec![labels("a", 3), labels("b", 3)];
    let ident = [Identification { label: "u".into(), left: (0, 2), right: (1, 0) }];
    GluingData::from_identifications(set(&["1", "2"]), parts, &ident).unwrap()
}

fn sink_effectiveness() -> Outcome {
    let mut r = rng(105);
    let mut positives = 0;
    for k in 0..100 {
        let sink = random_sink_sets(&mut r);
        let direct = effective_epi_check(&sink).map_err(|e| e.to_string())?;
        let by_hom = is_effective_epi_by_hom(&sink, DEFAULT_CAP).map_err(|e| e.to_string())?;
        let surjective = sink.jointly_surjective();
        check(direct == by_hom && by_hom == surjective, || {
            format!("sink {k}: mediating {direct}, hom {by_hom}, surjective {surjective}")
        })?;
        positives += usize::from(direct);
    }
    Ok(format!("100/100 agree; {positives} effective"))
}

fn inner_sinks(r: &mut ChaCha8Rng, outer: &Sink) -> Vec<Sink> {
    outer
        .sources
        .iter()
        .enumerate()
        .map(|(k, s)| match outer.ambient {
            glueforge::gluing::Ambient::Sets => surjective_sink(r, &s.space, &format!("i{k}.")),
            glueforge::gluing::Ambient::Top => open_cover_sink(r, &s.space, &format!("i{k}.")),
        })
        .collect()
}

fn composite_sinks() -> Outcome {
    let mut r = rng(106);
    for k in 0..50 {
        let outer = if k % 2 == 0 {
            let n = r.gen_range(0..=4);
            surjective_sink(&mut r, &FinTop::discrete(labels("x", n)), "o")
        } else {
            let n = r.gen_range(1..=4);
            let space = random_space(&mut r, "x", n);
            open_cover_sink(&mut r, &space, "o")
        };
        let inner = inner_sinks(&mut r, &outer);
        let passing = effective_epi_check(&outer).map_err(|e| e.to_string())?
            && inner.iter().all(|s| effective_epi_check(s).unwrap_or(false));
        check(passing, || format!("pair {k}: generated sinks do not pass"))?;
        let composite = compose_via_sinks(&outer, &inner).map_err(|e| e.to_string())?;
        let tests: Vec<_> = composite.flattened.sources.iter().map(|s| (s.space.clone(), s.map.clone())).collect();
        let report = universal_effective_epi_check(&composite.flattened, &tests).map_err(|e| e.to_string())?;
        check(report.all, || format!("pair {k}: composite fails {report:?}"))?;
    }
    Ok("50/50 composites universally effective".into())
}

fn torus() -> Outcome {
    let grid = FinSet::new((0..4).flat_map(|r| (0..4).map(move |c| format!("{r}{c}")))).unwrap();
    let columns: Vec<Identification> =
        (0..4).map(|r| Identification { label: format!("c{r}"), left: (0, 4 * r), right: (0, 4 * r + 3) }).collect();
    let node = GluingData::from_identifications(set(&["sq"]), vec![grid], &columns).map_err(|e| e.to_string())?;
    let rows = (0..4)
        .map(|c| MetaLink {
            label: format!("r{c}"),
            left: NodePoint { node: 0, index: 0, element: c },
            right: NodePoint { node: 0, index: 0, element: 12 + c },
        })
        .collect();
    let meta = MetaGluingData { outer: set(&["t"]), nodes: vec![node], links: rows };
    let composite = compose_gluings(&meta).map_err(|e| e.to_string())?;
    let pairs: Vec<_> =
        (0..4).map(|r| ((0, 4 * r), (0, 4 * r + 3))).chain((0..4).map(|c| ((0, c), (0, 12 + c)))).collect();
    let oracle = closure(&[16], &pairs);
    let flat: BTreeMap<_, _> = (0..16).map(|x| ((0, x), composite.flat.leg(0).apply(x))).collect();
    let (cylinder, two_stage, one_step) = (composite.nodes[0].len(), composite.two_stage.len(), composite.flat.len());
    check(cylinder == 12 && two_stage == 9 && one_step == 9, || format!("{cylinder} -> {two_stage}, flat {one_step}"))?;
    check(class_count(&oracle) == 9 && same_partition(&flat, &oracle), || {
        "flat partition differs from closure".into()
    })?;
    check(composite.agree, || "two-stage and flat gluing disagree".into())?;
    Ok("16 -> 12 -> 9; flat partition equals closure".into())
}

fn relabelled_datum(r: &mut ChaCha8Rng, f: &PresheafStore, charts: &[usize]) -> GluingDatum {
    let l = f.lattice().clone();
    let mut locals = Vec::new();
    let mut maps = Vec::new();
    for (i, &u) in charts.iter().enumerate() {
        let (copy, to_copy) = relabel(r, &restrict_to(f, u).unwrap(), &format!("c{i}."));
        locals.push(copy);
        maps.push(to_copy);
    }
    let mut transitions = BTreeMap::new();
    for i in 0..charts.len() {
        for j in 0..charts.len() {
            let family = l
                .within(l.meet(charts[i], charts[j]))
                .into_iter()
                .map(|w| (w, maps[i][&w].inverse().unwrap().then(&maps[j][&w]).unwrap()))
                .collect();
            transitions.insert((i, j), family);
        }
    }
    let charts = charts.iter().enumerate().map(|(i, &u)| (format!("U{i}"), u)).collect();
    GluingDatum { lattice: l, charts, locals, transitions }
}

fn swap_values(sections: &FinSet) -> glueforge::fincat::FinFn {
    let swapped: Vec<String> = sections
        .labels()
        .iter()
        .map(|s| s.replace("\"a\"", "\"_\"").replace("\"b\"", "\"a\"").replace("\"_\"", "\"b\""))
        .collect();
    let pairs = sections.labels().iter().zip(&swapped).map(|(x, y)| (x.as_str(), y.as_str()));
    glueforge::fincat::FinFn::from_pairs(sections.clone(), sections.clone(), pairs).unwrap()
}

fn small_lattice(r: &mut ChaCha8Rng, max: usize) -> OpenLattice {
    let n = r.gen_range(1..=max);
    OpenLattice::new(random_space(r, "x", n), DEFAULT_CAP).unwrap()
}

fn sheaf_gluing() -> Outcome {
    let mut r = rng(108);
    for k in 0..50 {
        let l = small_lattice(&mut r, 4);
        let f = random_sheaf(&mut r, &l);
        let count = r.gen_range(1..=3);
        let charts = random_charts(&mut r, &l, count, None);
        let d = relabelled_datum(&mut r, &f, &charts);
        let glued = glue_presheaves(&d, DEFAULT_CAP).map_err(|e| e.to_string())?;
        let covers = default_covers(&l, l.top(), true);
        let sheaf = is_sheaf(&glued.store, &covers, DEFAULT_CAP).map_err(|e| e.to_string())?;
        check(sheaf.holds, || format!("space {k}: glued presheaf is not a sheaf: {:?}", sheaf.counterexample))?;
    }
    for k in 0..50 {
        let l = small_lattice(&mut r, 4);
        let anchor = r.gen_range(0..l.space().len());
        let charts = random_charts(&mut r, &l, 3, Some(anchor));
        let f = PresheafStore::functions(&l, l.top(), &set(&["a", "b"])).map_err(|e| e.to_string())?;
        let locals = charts.iter().map(|&u| restrict_to(&f, u).unwrap()).collect();
        let named = charts.iter().enumerate().map(|(i, &u)| (format!("U{i}"), u)).collect();
        let mut d = GluingDatum::with_identity_transitions(&l, named, locals);
        for ((i, j), family) in d.transitions.iter_mut() {
            if i != j {
                for (w, phi) in family.iter_mut() {
                    *phi = swap_values(f.sections(*w));
                }
            }
        }
        let glued = glue_presheaves(&d, DEFAULT_CAP).map_err(|e| e.to_string())?;
        let report = presheaf_effective_check(&d, &glued);
        check(!report.cocycle && !report.psi_bijective, || format!("broken cocycle {k}: {report:?}"))?;
    }
    Ok("50/50 glued sheaves; 50/50 broken cocycles flagged twice".into())
}

fn nat_trans_gluing() -> Outcome {
    let mut r = rng(109);
    let (mut done, mut unique_checked, mut attempts) = (0, 0, 0);
    while done < 30 {
        attempts += 1;
        check(attempts < 1000, || format!("only {done} instances with transformations"))?;
        let l = small_lattice(&mut r, 3);
        let (s, t) = (random_sheaf(&mut r, &l), random_sheaf(&mut r, &l));
        let all = all_nat_trans(&s, &t, DEFAULT_CAP).map_err(|e| e.to_string())?;
        let Some(alpha) = random_nat_trans(&mut r, &all) else { continue };
        let count = r.gen_range(1..=3);
        let charts = random_charts(&mut r, &l, count, None);
        let parts: Vec<_> = charts.iter().map(|&u| alpha.restrict_to(u).unwrap()).collect();
        let glued = glue_nat_trans(&charts, &s, &t, &parts, DEFAULT_CAP).map_err(|e| e.to_string())?;
        for (i, (&u, part)) in charts.iter().zip(&parts).enumerate() {
            check(glued.restrict_to(u).unwrap() == *part, || format!("instance {done}: part {i} differs"))?;
        }
        if all.len() <= 200 {
            let matching = all
                .iter()
                .filter(|beta| charts.iter().zip(&parts).all(|(&u, p)| beta.restrict_to(u).unwrap() == *p))
                .count();
            check(matching == 1, || format!("instance {done}: {matching} transformations restrict to the parts"))?;
            unique_checked += 1;
        }
        done += 1;
    }
    Ok(format!("30/30 restrict exactly; uniqueness confirmed on {unique_checked}"))
}

fn image(points: &[usize], f: &glueforge::fincat::FinFn) -> BTreeSet<usize> {
    points.iter().map(|&x| f.apply(x)).collect()
}

fn topological_legs() -> Outcome {
    let mut r = rng(110);
    let mut embeddings = 0;
    for k in 0..50 {
        let fibres = k % 2 == 1;
        let n = r.gen_range(1..=4);
        let space = random_space(&mut r, "x", n);
        let sink = open_map_sink(&mut r, &space, fibres);
        let data = canonical_sink_functor(&sink).map_err(|e| e.to_string())?;
        let glued = colimit_glue(&data).map_err(|e| e.to_string())?;
        let apex_opens: BTreeSet<BTreeSet<usize>> =
            opens(&glued.apex).into_iter().map(|o| o.into_iter().collect()).collect();
        let effective = effective_gluing_check(&data).map_err(|e| e.to_string())?.effective();
        for i in 0..data.len() {
            let leg = glued.leg(i);
            let part = data.space(glueforge::indexcat::IndexObject::Single(i));
            let part_opens: BTreeSet<BTreeSet<usize>> =
                opens(part).into_iter().map(|o| o.into_iter().collect()).collect();
            let open =
                part_opens.iter().all(|o| apex_opens.contains(&image(&o.iter().copied().collect::<Vec<_>>(), leg)));
            let continuous = apex_opens.iter().all(|o| {
                part_opens.contains(&part.carrier.elements().filter(|&x| o.contains(&leg.apply(x))).collect())
            });
            check(open && continuous, || format!("instance {k}: leg {i} open {open}, continuous {continuous}"))?;
            if !fibres && effective {
                let injective = image(&part.carrier.elements().collect::<Vec<_>>(), leg).len() == part.len();
                check(injective, || format!("instance {k}: leg {i} is not an embedding"))?;
                embeddings += 1;
            }
        }
    }
    Ok(format!("50/50 open legs; {embeddings} legs verified as open embeddings"))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("colimit matches fixed-point closure", colimit_oracle),
        ("limit matches equalizer", limit_oracle),
        ("effectiveness conditions agree", effectiveness_agreement),
        ("hom transport is bijective", hom_transport_bijection),
        ("effective epis of sets", sink_effectiveness),
        ("composites of effective sinks", composite_sinks),
        ("torus from a square", torus),
        ("sheaf gluing and broken cocycles", sheaf_gluing),
        ("transformations glue uniquely", nat_trans_gluing),
        ("topological legs", topological_legs),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} ({detail})", n + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({detail})", n + 1);
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let within = elapsed < 60.0;
    println!(
        "{} {}/10 criteria passed in {elapsed:.1}s (limit 60s)",
        if failed == 0 && within { "PASS" } else { "FAIL" },
        10 - failed
    );
    if failed == 0 && within {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
