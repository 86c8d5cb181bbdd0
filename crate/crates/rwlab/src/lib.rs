//! rwlab: a laboratory for random walks on finitely generated groups.
//!
//! The crate computes and numerically verifies return-probability decay,
//! `L^p` isoperimetric/spectral profiles, Bernstein-function subordination,
//! wreath-product profile bounds and local-time functionals on concrete
//! groups (`Z^d`, finite cyclic groups, the discrete Heisenberg group, and
//! wreath products built from these).
//!
//! Layers:
//!
//! * [`group`] — canonical group elements, word metric, ball enumeration,
//!   wreath combinator;
//! * [`measure`] — finitely supported symmetric probability measures with
//!   truncation-deficit accounting, moment functionals and Bernstein
//!   subordination;
//! * [`conv`] — exact sparse convolution, convolution powers, return series,
//!   continuous-time kernels, Dirichlet energies, entropy diagnostics;
//! * [`profile`] — Dirichlet eigenvalues, `L^p` profile curves, Cheeger
//!   checks, pseudo-Poincaré and comparison bounds, Coulhon transfer,
//!   wreath test functions;
//! * [`mc`] — deterministic parallel Monte Carlo for trajectories, local
//!   times and range functionals;
//! * [`experiment`] — declarative experiment runner, prediction oracle and
//!   asymptotic decay fitting.
//!
//! The `examples/` directory holds one runnable example per capability; the
//! thin `rwlab` binary drives config-file experiments.

pub mod conv;
pub mod error;
pub mod experiment;
pub mod group;
pub mod mc;
pub mod measure;
pub mod profile;

pub use error::{Result, RwError};
