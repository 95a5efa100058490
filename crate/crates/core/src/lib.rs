//! Pathwise solutions of `dY = f(Y) dX` for drivers of finite p-variation,
//! `p < 2`, in the Young sense.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and
//! the command-line front end live in the `youngflow` crate.

#![no_std]
// `num_traits::Float` supplies float math without std; builds that unify in
// std-enabled features resolve the inherent methods instead
#![allow(unused_imports)]

extern crate alloc;
#[cfg(feature = "parallel")]
extern crate std;

pub mod cadlag;
pub mod drivers;
pub mod error;
pub mod field;
pub mod flow;
mod par;
pub mod path;
pub mod solver;
pub mod young;

pub use cadlag::{parametrise, solve_forward_jump, solve_geometric, GeometricOptions, JumpParametrisation};
pub use error::{Error, Result};
pub use path::{
    concat, p_variation, p_variation_exact, p_variation_lower_bound, time_reverse, PathKind,
    SampledPath, VariationNorm,
};
pub use field::{LipschitzField, PairedField, VectorField, WorkingBox};
pub use young::{young_error_bound, young_integral, Rule};
pub use flow::{FlowMap, FlowTolerances};
pub use solver::{solve, solve_with_jacobian, SolverConfig, Trajectory};
