use serde::{Deserialize, Serialize};

use super::{colimit_glue, limit_glue, mediating_map, Ambient, ConeCandidate, GluedObject, GluingData, Side};
use crate::error::{check_cap, GlueError, Result};
use crate::fincat::{product_size, FinFn, FinSet, FinTop, Product};
use crate::indexcat::Morphism;

/// `Hom(A, Z)` with each function labelled by the JSON array of its values.
pub fn hom_set(domain: &FinSet, codomain: &FinSet, cap: u64) -> Result<(FinSet, Vec<FinFn>)> {
    let factors = vec![codomain.clone(); domain.len()];
    let size = product_size(&factors.iter().collect::<Vec<_>>());
    check_cap(|| "hom-set".into(), size, cap)?;
    let product = Product { set: FinSet::range(size as usize), factors };
    let mut labels = Vec::with_capacity(size as usize);
    let mut maps = Vec::with_capacity(size as usize);
    for k in 0..size as usize {
        let values = product.tuple(k);
        let named: Vec<&str> = values.iter().map(|&v| codomain.label(v)).collect();
        labels.push(serde_json::to_string(&named).expect("strings serialize"));
        maps.push(FinFn::new(domain.clone(), codomain.clone(), values)?);
    }
    Ok((FinSet::new(labels)?, maps))
}

fn hom_index(f: &FinFn) -> usize {
    let z = f.codomain().len();
    f.values().iter().fold(0, |acc, &v| acc * z + v)
}

/// Both sides of `lim Hom(G) ≅ Hom(Q_G, Z)` and the canonical map between them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomTransport {
    /// Compatible families `(f_i : G(i) → Z)`.
    pub families: GluedObject,
    /// Size of `Hom(Q_G, Z)`.
    pub homs: usize,
    /// `h ↦ (h ∘ ι_i)_i`, from `Hom(Q_G, Z)` to the families.
    pub canonical: FinFn,
    pub bijective: bool,
}

/// Limit-side data `a ↦ Hom(G(a), Z)` with arrows given by precomposition.
pub fn hom_functor(data: &GluingData, z: &FinSet, cap: u64) -> Result<GluingData> {
    data.ensure_side(Side::Colimit)?;
    let cat = data.cat();
    let mut homs = Vec::with_capacity(cat.objects().len());
    let mut b = GluingData::builder(data.index().clone(), data.mode(), Ambient::Sets, Side::Limit)?;
    for &o in cat.objects() {
        let (set, maps) = hom_set(data.set(o), z, cap)?;
        b.set(o, set.clone());
        homs.push((set, maps));
    }
    let at = |o| &homs[cat.object_id(o).expect("object")];
    // f : A → B in the data gives Hom(B, Z) → Hom(A, Z), h ↦ h ∘ f.
    let pre = |f: &FinFn, from, to| -> Result<FinFn> {
        let (src, dst) = (at(from), at(to));
        let map = src.1.iter().map(|h| f.then(h).map(|c| hom_index(&c))).collect::<Result<_>>()?;
        FinFn::new(src.0.clone(), dst.0.clone(), map)
    };
    for &g in cat.generators() {
        let f = data.arrow(g)?;
        let (s, t) = (cat.source(g), cat.target(g));
        match g {
            Morphism::Incl(i, j) => {
                b.edge(i, j, pre(&f, s, t)?);
            }
            // Colimit-side arrow of τ_{i,j} is swap(j, i) : G(j, i) → G(i, j);
            // precomposition turns it into Hom(G(i, j), Z) → Hom(G(j, i), Z).
            Morphism::Tau(i, j) => {
                b.swap(i, j, pre(&f, s, t)?);
            }
            _ => return Err(GlueError::structural("unexpected generator")),
        }
    }
    b.build()
}

pub fn hom_transport(data: &GluingData, z: &FinSet, cap: u64) -> Result<HomTransport> {
    let hom_data = hom_functor(data, z, cap)?;
    let families = limit_glue(&hom_data, cap)?;
    let q = colimit_glue(data)?;
    let (hom_q, maps) = hom_set(&q.apex.carrier, z, cap)?;
    let legs = (0..data.len())
        .map(|i| {
            let values = maps.iter().map(|h| q.leg(i).then(h).map(|c| hom_index(&c))).collect::<Result<_>>()?;
            FinFn::new(hom_q.clone(), hom_data.part(i).clone(), values)
        })
        .collect::<Result<Vec<_>>>()?;
    let cone = ConeCandidate { apex: FinTop::discrete(hom_q.clone()), legs };
    let mediation = mediating_map(&hom_data, &families, &cone)?;
    Ok(HomTransport { homs: hom_q.len(), bijective: mediation.isomorphic, canonical: mediation.map, families })
}
