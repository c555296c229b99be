use std::collections::BTreeMap;

use super::{object_names, Ambient, GluedObject, GluingData, Side, Witness};
use crate::error::{check_cap, Result};
use crate::fincat::{
    equalizer, induce_topology, product_enumerate, product_size, FinFn, FinSet, FinTop, InduceMode, Product,
};
use crate::indexcat::{IndexObject, Mode};

/// Ordered slots `(i, j)` constraining compatible families.
fn slots(data: &GluingData) -> Vec<(usize, usize)> {
    let n = data.len();
    match data.mode() {
        Mode::Nonsplit => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        Mode::Split => (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect(),
    }
}

/// The two sides of the compatibility equation at a slot, as elements of `G(i, j)`.
fn slot_values(data: &GluingData, (i, j): (usize, usize), family: &[usize]) -> (usize, usize) {
    let left = data.edge(i, j).apply(family[i]);
    let right = data.edge(j, i).apply(family[j]);
    match data.mode() {
        Mode::Nonsplit => (left, right),
        Mode::Split => (left, data.swap(j, i).apply(right)),
    }
}

fn parts_product(data: &GluingData, cap: u64) -> Result<Product> {
    let factors: Vec<FinSet> = (0..data.len()).map(|i| data.part(i).clone()).collect();
    product_enumerate(&factors, cap)
}

/// Wraps chosen product members as the glued object with projection legs.
fn families_object(data: &GluingData, product: &Product, members: Vec<usize>) -> Result<GluedObject> {
    let carrier = product.set.subset(&members);
    let coordinates: Vec<Vec<usize>> = members.iter().map(|&k| product.tuple(k)).collect();
    let cat = data.cat();
    let mut singles = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        let map = coordinates.iter().map(|c| c[i]).collect();
        singles.push(FinFn::new(carrier.clone(), data.part(i).clone(), map)?);
    }
    let mut legs = Vec::with_capacity(cat.objects().len());
    for &o in cat.objects() {
        legs.push(match o {
            IndexObject::Single(i) => singles[i].clone(),
            IndexObject::Pair(i, j) => singles[i].then(data.edge(i, j))?,
        });
    }
    let apex = match data.ambient() {
        Ambient::Sets => FinTop::discrete(carrier),
        Ambient::Top => {
            let spaces: Vec<_> = (0..data.len()).map(|i| &data.space(IndexObject::Single(i)).topology).collect();
            let topology = induce_topology(InduceMode::Initial, &carrier, &singles, &spaces)?;
            FinTop::new(carrier, topology)?
        }
    };
    Ok(GluedObject {
        side: Side::Limit,
        apex,
        objects: object_names(cat),
        legs,
        witness: Witness::Families { coordinates },
    })
}

/// `L_G`: families in `∏ G(i)` agreeing on every overlap.
pub fn limit_glue(data: &GluingData, cap: u64) -> Result<GluedObject> {
    data.ensure_side(Side::Limit)?;
    data.ensure_valid()?;
    let product = parts_product(data, cap)?;
    let slots = slots(data);
    let members = product
        .set
        .elements()
        .filter(|&k| {
            let family = product.tuple(k);
            slots.iter().all(|&s| {
                let (l, r) = slot_values(data, s, &family);
                l == r
            })
        })
        .collect();
    families_object(data, &product, members)
}

/// The same limit, as the equalizer of the two maps `∏ G(i) ⇉ ∏ G(i, j)`.
pub fn equalizer_glue_oracle(data: &GluingData, cap: u64) -> Result<GluedObject> {
    data.ensure_side(Side::Limit)?;
    data.ensure_valid()?;
    let product = parts_product(data, cap)?;
    let slots = slots(data);
    let targets: Vec<FinSet> = slots.iter().map(|&(i, j)| data.overlap(i, j).clone()).collect();
    let size = product_size(&targets.iter().collect::<Vec<_>>());
    check_cap(|| "product of overlaps".into(), size, cap)?;
    let overlaps = Product { set: FinSet::empty(), factors: targets };
    // Only the part of ∏ G(i, j) hit by either map is materialised.
    let mut hit: BTreeMap<usize, usize> = BTreeMap::new();
    let mut left = Vec::with_capacity(product.set.len());
    let mut right = Vec::with_capacity(product.set.len());
    for k in product.set.elements() {
        let family = product.tuple(k);
        let (l, r): (Vec<usize>, Vec<usize>) = slots.iter().map(|&s| slot_values(data, s, &family)).unzip();
        for (coords, out) in [(l, &mut left), (r, &mut right)] {
            let next = hit.len();
            out.push(*hit.entry(overlaps.index_of(&coords)).or_insert(next));
        }
    }
    let codomain = FinSet::range(hit.len());
    let f = FinFn::new(product.set.clone(), codomain.clone(), left)?;
    let g = FinFn::new(product.set.clone(), codomain, right)?;
    let eq = equalizer(&f, &g)?;
    families_object(data, &product, eq.legs[0].values().to_vec())
}
