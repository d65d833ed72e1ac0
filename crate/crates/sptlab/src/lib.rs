//! Fixed-point SPT tensor networks from finite-group 3-cocycles.
//!
//! The crate builds symmetry MPOs and PEPS from a cocycle, checks the tensor
//! identities they satisfy, gauges the states and computes the invariants
//! (slant products, defect 2-cocycles, modular data, degeneracies).
//!
//! The tensor engine in [`tensors`] is generic over the real scalar type.
//! The physics modules work in `f64`: their identity checks use tolerances
//! down to `1e-12`, well below single-precision resolution.

pub mod analysis;
pub mod cocycle;
pub mod error;
pub mod gauging;
pub mod group;
pub mod hamiltonian;
pub mod lattice;
pub mod linalg;
pub mod mpo;
pub mod peps;
pub mod tensors;

use std::fmt::{Debug, Display};

pub use num_complex::Complex;

/// Real scalar types the tensor engine can run on.
pub trait Scalar:
    num_traits::Float + nalgebra::RealField + Copy + Debug + Display + std::fmt::LowerExp + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type C64 = Complex<f64>;
pub type C32 = Complex<f32>;

pub type Tensor = tensors::LabeledTensor<f64>;
pub type Tensor32 = tensors::LabeledTensor<f32>;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub use cocycle::{Cocycle2, Cocycle3, CocycleParams, Rep1D};
pub use error::{Error, Result};
pub use group::{make_group, FiniteGroup, GroupSpec};
pub use lattice::TriLattice;
pub use tensors::LabeledTensor;
