//! Shared fixtures for unit tests.

use crate::models::{FactorParetoModel, MevModel};
use crate::partition::{Partition, SubsetKey};

/// Three-asset factor model with weight rows (4,2,2)/8, (1,1,6)/8, (3,2,3)/8
/// at alpha = 1. Block extremal coefficients: eps{1,2} = eps{1,2,3} = 12/8,
/// eps{1,3} = 9/8, eps{2,3} = 11/8, singletons 1.
pub(crate) fn factor_example() -> MevModel {
    MevModel::FactorPareto(
        FactorParetoModel::new(
            3,
            1.0,
            vec![
                vec![4.0 / 8.0, 2.0 / 8.0, 2.0 / 8.0],
                vec![1.0 / 8.0, 1.0 / 8.0, 6.0 / 8.0],
                vec![3.0 / 8.0, 2.0 / 8.0, 3.0 / 8.0],
            ],
        )
        .unwrap(),
    )
}

/// Partition {{1,2},{3}} of three coordinates.
pub(crate) fn pair_and_single() -> Partition {
    Partition::new(3, vec![("first", vec![1, 2]), ("second", vec![3])]).unwrap()
}

pub(crate) fn subset(indices: &[usize], d: usize) -> SubsetKey {
    SubsetKey::new(indices.iter().copied(), d).unwrap()
}
