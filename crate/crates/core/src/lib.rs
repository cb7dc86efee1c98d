//! Numerical laboratory for random combinations of Laplace eigenfunctions on
//! the flat 2-torus and the round 2-sphere.
//!
//! The crate builds spectral windows `H_W(lambda)` (all eigenfunctions with
//! eigenfrequency in `[lambda - W, lambda]`), samples random waves from the
//! uniform measure on the unit sphere of coefficient space (or the matching
//! Gaussian ensemble), and measures how their L2 mass distributes over small
//! geodesic balls: closed-form expectation and variance through ball Gram
//! matrices, worst-case mass through the top eigenvalue, concentration of
//! measure against the Levy bound, and Weyl-law remainder diagnostics.

pub mod analytics;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod legendre;
pub mod manifold;
pub mod quadrature;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use manifold::{BallRegion, EigenMode, Manifold, ModeLabel, Point, QuadratureRule};
pub use spectral::SpectralWindow;
