//! Approximation functions, directions on the boundary, cusp predicates,
//! boundary sampling and the two explicit constructions.

mod counterexamples;
mod cusp;
mod psi;
mod sampling;

pub use counterexamples::{
    example1_certificate, example2_witnesses, pell_solutions, summarize_witnesses, Example1Report,
    Example2Witness, WitnessSummary, PELL_FUNDAMENTAL,
};
pub use cusp::{
    cusp_member, cusp_test, radial_project, translated_cone_bound, ConeTest, CuspSpec, CuspVariant,
    Direction, BOUNDARY_TOL, UNIT_TOL,
};
pub use psi::{quasiconformal_check, PsiFamily, PsiSpec, QcGrid, TabulatedPsi};
pub use sampling::{boundary_from_parts, sample_boundary, uniform_sphere};
