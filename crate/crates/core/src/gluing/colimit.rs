use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{object_names, Ambient, GluedObject, GluingBuilder, GluingData, Side, Witness};
use crate::error::{GlueError, Result};
use crate::fincat::{induce_topology, pullback, quotient_by_pairs, tuple_label, FinFn, FinSet, FinTop, InduceMode};
use crate::indexcat::{IndexObject, Mode};

/// Coproduct of the parts, labelled `x|i`, with the offset of each part.
pub(crate) fn coproduct(data: &GluingData) -> Result<(FinSet, Vec<usize>)> {
    let mut labels = Vec::new();
    let mut offsets = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        offsets.push(labels.len());
        let tag = data.index().label(i);
        labels.extend(data.part(i).labels().iter().map(|x| tuple_label([x.as_str(), tag])));
    }
    let set = FinSet::new(labels).map_err(|e| GlueError::structural(format!("coproduct labels collide: {e}")))?;
    Ok((set, offsets))
}

/// Generating pairs of the identification relation on the coproduct.
pub(crate) fn generating_pairs(data: &GluingData, offsets: &[usize]) -> Vec<(usize, usize)> {
    let n = data.len();
    let mut pairs = Vec::new();
    let mut push = |i: usize, j: usize, x: usize, y: usize| pairs.push((offsets[i] + x, offsets[j] + y));
    match data.mode() {
        Mode::Nonsplit => {
            for i in 0..n {
                for j in i + 1..n {
                    let (e, f) = (data.edge(i, j), data.edge(j, i));
                    for u in data.overlap(i, j).elements() {
                        push(i, j, e.apply(u), f.apply(u));
                    }
                }
            }
        }
        Mode::Split => {
            for i in 0..n {
                for j in 0..n {
                    let (e, f, s) = (data.edge(i, j), data.edge(j, i), data.swap(i, j));
                    for u in data.overlap(i, j).elements() {
                        push(i, j, e.apply(u), f.apply(s.apply(u)));
                    }
                }
            }
        }
    }
    pairs
}

/// The standard representative `Q_G = (⨿ G(i)) / ≈` with its legs.
pub fn colimit_glue(data: &GluingData) -> Result<GluedObject> {
    data.ensure_side(Side::Colimit)?;
    data.ensure_valid()?;
    let (sum, offsets) = coproduct(data)?;
    let quotient = quotient_by_pairs(&sum, &generating_pairs(data, &offsets))?;
    let cat = data.cat();
    let mut singles = Vec::with_capacity(data.len());
    for (i, &offset) in offsets.iter().enumerate().take(data.len()) {
        let map = data.part(i).elements().map(|x| quotient.projection.apply(offset + x)).collect();
        singles.push(FinFn::new(data.part(i).clone(), quotient.set.clone(), map)?);
    }
    let mut legs = Vec::with_capacity(cat.objects().len());
    for &o in cat.objects() {
        legs.push(match o {
            IndexObject::Single(i) => singles[i].clone(),
            IndexObject::Pair(i, j) => data.edge(i, j).then(&singles[i])?,
        });
    }
    let apex = match data.ambient() {
        Ambient::Sets => FinTop::discrete(quotient.set.clone()),
        Ambient::Top => {
            let spaces: Vec<_> = (0..data.len()).map(|i| &data.space(IndexObject::Single(i)).topology).collect();
            let topology = induce_topology(InduceMode::Final, &quotient.set, &singles, &spaces)?;
            FinTop::new(quotient.set.clone(), topology)?
        }
    };
    Ok(GluedObject {
        side: Side::Colimit,
        apex,
        objects: object_names(cat),
        legs,
        witness: Witness::Quotient { coproduct: sum, projection: quotient.projection },
    })
}

/// Outcome of gluing the base change `G_V` of colimit-side data along `δ : V → Q_G`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniversalReport {
    pub glued_size: usize,
    pub base_size: usize,
    /// Whether `V` with the second projections is the glued-up object of `G_V`.
    pub glued_up: bool,
    pub fibres: Vec<usize>,
}

/// Glues `G_V(a) = G(a) ×_Q V` and compares the result with `V`.
///
/// The check is carried out on underlying sets.
pub fn universal_glue_check(data: &GluingData, glued: &GluedObject, delta: &FinFn) -> Result<UniversalReport> {
    data.ensure_side(Side::Colimit)?;
    if delta.codomain() != &glued.apex.carrier {
        return Err(GlueError::structural("the base map does not land in the glued object"));
    }
    let cat = data.cat();
    let mut b: GluingBuilder = GluingData::builder(data.index().clone(), data.mode(), Ambient::Sets, Side::Colimit)?;
    let mut fibres = Vec::with_capacity(cat.objects().len());
    let mut pulled = Vec::with_capacity(cat.objects().len());
    for (k, &o) in cat.objects().iter().enumerate() {
        let pb = pullback(&glued.legs[k], delta)?;
        fibres.push(pb.members.len());
        b.set(o, pb.members.clone());
        pulled.push(pb);
    }
    let at = |o: IndexObject| &pulled[cat.object_id(o).expect("object")];
    // An arrow f : G(a) → G(b) lifts to (x|v) ↦ (f(x)|v).
    let lift = |f: &FinFn, from: IndexObject, to: IndexObject| -> Result<FinFn> {
        let (src, dst) = (at(from), at(to));
        let position: HashMap<(usize, usize), usize> =
            dst.members.elements().map(|m| ((dst.legs[0].apply(m), dst.legs[1].apply(m)), m)).collect();
        let map = src
            .members
            .elements()
            .map(|m| {
                let key = (f.apply(src.legs[0].apply(m)), src.legs[1].apply(m));
                position.get(&key).copied().ok_or_else(|| {
                    GlueError::structural("an arrow of the data breaks the cocone law of the glued object")
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FinFn::new(src.members.clone(), dst.members.clone(), map)
    };
    let n = data.len();
    for i in 0..n {
        for j in 0..n {
            if data.mode() == Mode::Nonsplit && i == j {
                continue;
            }
            let pair = cat.pair(i, j);
            b.edge(i, j, lift(data.edge(i, j), pair, IndexObject::Single(i))?);
            if data.mode() == Mode::Split {
                b.swap(i, j, lift(data.swap(i, j), pair, IndexObject::Pair(j, i))?);
            }
        }
    }
    let base = b.build()?;
    let glued_base = colimit_glue(&base)?;
    let cone = super::ConeCandidate {
        apex: FinTop::discrete(delta.domain().clone()),
        legs: (0..n).map(|i| pulled[i].legs[1].clone()).collect(),
    };
    let mediation = super::mediating_map(&base, &glued_base, &cone)?;
    Ok(UniversalReport {
        glued_size: glued_base.len(),
        base_size: delta.domain().len(),
        glued_up: mediation.isomorphic,
        fibres,
    })
}
