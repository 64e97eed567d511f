//! Spectral rank, multiplicity and trace on finite-dimensional semisimple
//! algebras `M_{n1}(C) + ... + M_{nk}(C)`, computed from spectra alone and
//! certified against classical matrix oracles.
//!
//! The modules mirror the layers of the theory:
//!
//! * [`algebra`]: elements, spectra, resolvents, classical rank and trace.
//! * [`rank`]: rank as the supremum of `#sigma'(xa)` over random probes.
//! * [`riesz`]: Riesz projections by contour quadrature, multiplicities,
//!   the spectral trace and diagonalization of maximal finite-rank elements.
//! * [`commutator`]: explicit commutator certificates for traceless
//!   matrices and differences of rank-one projections.
//! * [`functional`]: linear functionals and the conditions characterizing
//!   multiples of the trace, with witnesses when a condition fails.
//! * [`socle`]: ideal structure and the theorem-pattern verification suite.

pub mod algebra;
pub mod commutator;
pub mod config;
pub mod error;
pub mod functional;
pub mod linalg;
pub mod rank;
pub mod riesz;
pub mod rng;
pub mod serde_util;
pub mod socle;

pub use algebra::{AlgebraSpec, Element, SpectralPoint, SpectrumReport};
pub use config::LabConfig;
pub use error::{LabError, Result};
pub use linalg::CMatrix;
pub use num_complex::Complex64;
