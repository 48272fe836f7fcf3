//! Composite Hilbert spaces, dense operators and Lindblad time evolution.

mod evolve;
mod lindblad;
mod operator;
mod space;
mod sparse;
mod state;

pub use evolve::{evolve, Coefficient, EvolveOptions, Generator, SampledSignal, StepControl, TimeGrid, Trajectory};
pub use lindblad::{lindblad_rhs, CollapseChannel};
pub use operator::{basis_ket, destroy, ket_bra, kron, tensor, CMatrix, CVector, Operator};
pub use space::SpaceLayout;
pub use state::{DensityMatrix, HERMITICITY_TOL, POSITIVITY_TOL, TRACE_TOL};
