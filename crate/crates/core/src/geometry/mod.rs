//! Charts, fields and almost para-quaternionic structures.

mod chart;
mod field;
mod generators;
mod io;
mod structure;

pub use chart::Chart;
pub use field::{EndomorphismField, MatrixJet, OneForm, VectorField};
pub use generators::{
    boost12, commuting_conjugator, conjugate_structure, fiber_rotation, flat_matrices, flat_model,
    from_diagonal_frame, propo_frame, propo_structure, pullback_structure, random_conjugator,
    random_diffeomorphism, random_fiber_rotation, rotate_basis, rotation23, FiberRotation,
};
pub use io::{load_structure, save_structure, StructureFile};
pub use structure::{
    admissible_basis_check, metric, structure_metric, AdmissibleReport, PqStructure, StructureElement,
    StructureJet, EPS,
};
