//! Numerical kernels for large-t limits of the SU(1,2) Hitchin equations.
//!
//! The crate covers the distinguished Painlevé III transcendent, the λ-family
//! of rank-2 local model metrics and their coefficient `c_λ`, glued
//! approximate solutions on model disks, admissible parabolic weights and
//! their t-compatible fixed points, the Neumann eigenvalue of a disk
//! Schrödinger operator, and a disk-level Newton solve of the full equation.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod bessel;
pub mod disksolver;
pub mod error;
pub mod fit;
pub mod gluing;
pub mod hermlin;
pub mod krylov;
pub mod localmodel;
pub mod operator;
pub mod painleve;
pub mod spectral;
pub mod weights;

pub use error::{Error, Result};
pub use hermlin::{CMat2, CMat3, HermMatrix2, HermMatrix3};

pub use localmodel::{AsymptoticModel, LocalModelSolution};
pub use num_complex::Complex64;
pub use painleve::PainleveSolution;
