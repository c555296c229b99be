use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::colimit::{coproduct, generating_pairs};
use super::{Ambient, GluedObject, GluingData, Side, Witness};
use crate::error::{GlueError, Result};
use crate::fincat::{is_continuous, FinFn, FinTop};
use crate::indexcat::{IndexObject, Mode};

/// An apex with one leg per index; the overlap legs follow from these.
///
/// Colimit side legs run `G(i) → apex`, limit side legs `apex → G(i)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeCandidate {
    pub apex: FinTop,
    pub legs: Vec<FinFn>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mediation {
    /// Colimit side `Q → apex`, limit side `apex → L`.
    pub map: FinFn,
    /// Bijective, and a homeomorphism in the top ambient.
    pub isomorphic: bool,
}

fn check_legs(data: &GluingData, cone: &ConeCandidate) -> Result<()> {
    if cone.legs.len() != data.len() {
        return Err(GlueError::structural(format!("cone has {} legs for {} indices", cone.legs.len(), data.len())));
    }
    for (i, leg) in cone.legs.iter().enumerate() {
        let part = data.space(IndexObject::Single(i));
        let (from, to) = match data.side() {
            Side::Colimit => (part, &cone.apex),
            Side::Limit => (&cone.apex, part),
        };
        let name = data.index().label(i);
        if leg.domain() != &from.carrier || leg.codomain() != &to.carrier {
            return Err(GlueError::structural(format!("leg at {name} has the wrong endpoints")));
        }
        if data.ambient() == Ambient::Top && !is_continuous(leg, &from.topology, &to.topology) {
            return Err(GlueError::structural(format!("leg at {name} is not continuous")));
        }
    }
    Ok(())
}

fn is_homeomorphism(map: &FinFn, source: &FinTop, target: &FinTop) -> bool {
    match map.inverse() {
        Some(inv) => {
            is_continuous(map, &source.topology, &target.topology)
                && is_continuous(&inv, &target.topology, &source.topology)
        }
        None => false,
    }
}

/// The unique map between the glued object and a (co)cone over the same data.
pub fn mediating_map(data: &GluingData, glued: &GluedObject, cone: &ConeCandidate) -> Result<Mediation> {
    if glued.side != data.side() {
        return Err(GlueError::structural("glued object and data are on different sides"));
    }
    check_legs(data, cone)?;
    let ambient = data.ambient();
    match data.side() {
        Side::Colimit => {
            let Witness::Quotient { projection, .. } = &glued.witness else {
                return Err(GlueError::structural("colimit-side glued object lacks its quotient"));
            };
            let (sum, offsets) = coproduct(data)?;
            let owner = |x: usize| offsets.iter().rposition(|&o| o <= x).expect("offsets start at zero");
            let value = |x: usize| {
                let i = owner(x);
                cone.legs[i].apply(x - offsets[i])
            };
            for (x, y) in generating_pairs(data, &offsets) {
                if value(x) != value(y) {
                    let (i, j) = (owner(x), owner(y));
                    return Err(GlueError::structural(format!(
                        "not a cocone: square over ({}, {}) fails at {} ~ {}",
                        data.index().label(i),
                        data.index().label(j),
                        sum.label(x),
                        sum.label(y)
                    )));
                }
            }
            let mut map = vec![usize::MAX; glued.len()];
            for x in sum.elements() {
                map[projection.apply(x)] = value(x);
            }
            let map = FinFn::new(glued.apex.carrier.clone(), cone.apex.carrier.clone(), map)?;
            let isomorphic = match ambient {
                Ambient::Sets => map.is_bijective(),
                Ambient::Top => is_homeomorphism(&map, &glued.apex, &cone.apex),
            };
            Ok(Mediation { map, isomorphic })
        }
        Side::Limit => {
            let Witness::Families { coordinates } = &glued.witness else {
                return Err(GlueError::structural("limit-side glued object lacks its families"));
            };
            let position: HashMap<&[usize], usize> =
                coordinates.iter().enumerate().map(|(k, c)| (c.as_slice(), k)).collect();
            let n = data.len();
            let mut map = Vec::with_capacity(cone.apex.len());
            for z in cone.apex.carrier.elements() {
                let family: Vec<usize> = cone.legs.iter().map(|l| l.apply(z)).collect();
                for i in 0..n {
                    for j in 0..n {
                        let skip = match data.mode() {
                            Mode::Nonsplit => i >= j,
                            Mode::Split => false,
                        };
                        if skip {
                            continue;
                        }
                        let left = data.edge(i, j).apply(family[i]);
                        let mut right = data.edge(j, i).apply(family[j]);
                        if data.mode() == Mode::Split {
                            right = data.swap(j, i).apply(right);
                        }
                        if left != right {
                            return Err(GlueError::structural(format!(
                                "not a cone: square over ({}, {}) fails at {}",
                                data.index().label(i),
                                data.index().label(j),
                                cone.apex.carrier.label(z)
                            )));
                        }
                    }
                }
                let k = position
                    .get(family.as_slice())
                    .copied()
                    .ok_or_else(|| GlueError::structural("compatible family missing from the glued object"))?;
                map.push(k);
            }
            let map = FinFn::new(cone.apex.carrier.clone(), glued.apex.carrier.clone(), map)?;
            let isomorphic = match ambient {
                Ambient::Sets => map.is_bijective(),
                Ambient::Top => is_homeomorphism(&map, &cone.apex, &glued.apex),
            };
            Ok(Mediation { map, isomorphic })
        }
    }
}

impl GluedObject {
    /// The glued object viewed as a cone over its own data.
    pub fn as_cone(&self, data: &GluingData) -> ConeCandidate {
        ConeCandidate { apex: self.apex.clone(), legs: self.legs[..data.len()].to_vec() }
    }
}
