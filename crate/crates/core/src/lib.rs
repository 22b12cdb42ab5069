//! Hamiltonian mechanics on E-manifolds: singular tangent structures given
//! by frames, their canonical symplectic geometry, geodesic flows, and
//! gauge-coupled Wong dynamics.

pub mod decl;
pub mod ecalculus;
pub mod error;
pub mod estructure;
pub mod expr;
pub mod field;
pub mod gauge;
pub mod integrator;
pub mod phasespace;
pub mod riemann;
pub mod scenarios;
pub mod symmetry;
pub mod verify;

pub use ecalculus::{
    d_squared_residual, e_differential, lie_derivative, EForm, EFunction, LogTerm, PowerTerm,
};
pub use error::{Error, Result};
pub use estructure::{
    bracket_residual, jacobi_residual, make_b_structure, make_corner_structure,
    make_elliptic_structure, make_foliation_structure, make_vanishing_structure, BoundaryDatum,
    Chart, EFrame, FrameFamily, FrameVector,
};
pub use field::ScalarField;
pub use gauge::{
    coupled_poisson_bivector, curvature, minimal_coupling_map, wong_field, BivectorSigns,
    GaugeData, GaugePhasePoint, LieAlgebra,
};
pub use integrator::{
    integrate, invariant_report, IntegratorConfig, InvariantReport, Method, Monitor, OdeSystem,
    Status, Trajectory,
};
pub use phasespace::{
    canonical_symplectic, hamiltonian_field, liouville_components, poisson_bracket,
    pushforward_velocity, PhaseFunction, PhasePoint, SymplecticMatrix,
};
pub use scenarios::{
    build_scenario, calogero_reduced_hamiltonian, scenario_names, Hamiltonian, InitialState, ParamValue,
    Params, ScenarioSpec,
};
pub use symmetry::{level_tangency, moment_residual, ActionGenerator};
pub use riemann::{geodesic_field, kinetic_hamiltonian, EMetric, KineticHamiltonian, Signature};
