//! Dense complex linear algebra, bipartite index operations and seeded sampling.

pub mod bipartite;
pub mod linalg;
pub mod matrix;
pub mod random;

pub use bipartite::{partial_trace, partial_transpose, reshuffle, BipartiteShape, Subsystem};
pub use linalg::{complete_isometry, gram_vectors, herm_eig, is_psd, HermEig};
pub use matrix::{Matrix, Vector};
pub use random::{haar_unitary, random_state, Rng};
