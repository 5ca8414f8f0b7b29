//! Entropy maximizers of kinetic wave equations on the lattice torus.

pub mod classical;
pub mod dispersion;
pub mod error;
pub mod measures;
pub mod quadrature;
pub mod quantum;
pub mod roots;
pub mod verify;

pub use dispersion::{
    cusp_model, extremal_gap_integrals, from_coupling, nn_dispersion, nnn_dispersion,
    CouplingStencil, CuspLocation, DispersionRelation, GapIntegrals, OmegaSample,
};
pub use error::{Error, Result, Side};
pub use quadrature::{integrate, integrate_singular, IntegralKind, IntegralResult, QuadratureSpec};
pub use measures::{
    admissible, moments, strictly_admissible, Atom, EqParams, EquilibriumMeasure, GridDensity,
    MassEnergy, ParamLocation, Regime, RegularPart,
};
pub use classical::{
    check_classical_inequality, classical_entropy, classical_maximizer,
    classical_maximizer_paper_literal, f_function, rj_density, rj_moments, solve_rj, thresholds,
    Thresholds,
};
pub use quantum::{
    abc_integrals, be_density, be_moments, boundary_curves, check_quantum_inequality,
    quantum_entropy, quantum_maximizer, region_classify, solve_be, AbcIntegrals, BoundaryCurve,
    BoundaryCurves, Region,
};
