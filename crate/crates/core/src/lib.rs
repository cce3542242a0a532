//! Boundary-mean-zero torsion energy on planar domains.
//!
//! For a domain `Ω`, a radial source `f > 0` and `β ≥ 0`, the energy
//!
//! ```text
//! T_β(Ω) = min { ½∫|∇u|² + (β/2)∫_∂Ω u² − ∫ f u  :  ∫_∂Ω u dσ = 0 }
//! ```
//!
//! is computed two independent ways: exact closed forms ([`closed_form`]) and a
//! P1 finite-element solve of the bordered constrained system ([`fem`]).
//! [`shape_calculus`] differentiates a scale-invariant normalization of `T`
//! along boundary perturbations of the disk and runs the parameter sweeps that
//! produce [`report::SweepReport`] tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_form;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod quadrature;
pub mod report;
pub mod shape_calculus;

pub use error::{Error, Result};
pub use geometry::{DomainSpec, MeshMeasures, TriMesh};
