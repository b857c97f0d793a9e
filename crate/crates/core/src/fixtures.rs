//! Reference data used by examples, tests and the acceptance suite.

use crate::types::InfluenceMatrix;

/// Toy influence matrix for the five default subsystems (row `i` is acted on by column `j`).
pub const REFERENCE_MATRIX: [[f64; 5]; 5] = [
    [1.0, 0.9, 0.1, 0.3, 0.2],
    [0.3, 1.0, 0.0, 0.2, 0.4],
    [0.4, 0.6, 1.0, 0.0, 0.1],
    [0.0, 0.5, 0.2, 1.0, 0.0],
    [0.7, 0.6, 0.2, 0.0, 1.0],
];

pub fn reference_matrix(timestamp: i64) -> InfluenceMatrix {
    InfluenceMatrix::new(
        REFERENCE_MATRIX.iter().map(|r| r.to_vec()).collect(),
        timestamp,
    )
    .expect("reference matrix is valid")
}
