//! Finite concrete categories: finite sets and finite topological spaces,
//! with the limit and colimit primitives the gluing code is built from.

mod ops;
mod set;
mod topology;
mod union_find;

pub use ops::{
    equalizer, product_enumerate, product_size, pullback, pullback_capped, quotient_by_label_pairs, quotient_by_pairs,
    PairedSubset, Product, Quotient, DEFAULT_CAP, EMPTY_PRODUCT_LABEL,
};
pub use set::{tuple_label, FinFn, FinSet, SEPARATOR};
pub use topology::{
    induce_topology, is_continuous, is_open_map, map_properties, open_index, open_labels, FinTop, InduceMode,
    MapProperties, TopMap, Topology,
};
pub(crate) use topology::{intersection, is_subset, union};
pub use union_find::UnionFind;

use crate::error::Result;

/// Pullback of continuous maps, carrying the initial topology of its projections.
pub fn pullback_top(f: &TopMap, g: &TopMap) -> Result<(FinTop, PairedSubset)> {
    let pb = pullback(&f.map, &g.map)?;
    let topology =
        induce_topology(InduceMode::Initial, &pb.members, &pb.legs, &[&f.source.topology, &g.source.topology])?;
    Ok((FinTop::new(pb.members.clone(), topology)?, pb))
}
