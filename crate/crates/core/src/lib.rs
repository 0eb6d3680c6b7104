//! Construction and numerical certification of codimension-two Euclidean
//! submanifolds that attain equality in the DDVV inequality
//! `s <= c + |H|^2 - s_N`.
//!
//! The pipeline starts from an isotropic holomorphic curve `G = g + ih`
//! (see [`surface`]), builds the map `phi = g + g_* J h^T + |h^N| w` over the
//! unit normal bundle orthogonal to `h^N` (see [`construction`]) with exact
//! second derivatives carried by [`jets`], and measures the curvature
//! invariants of the result in [`geometry`]. [`transforms`] covers
//! inversions, stereographic projections and the holomorphic inversion of
//! curves.

pub mod catalog;
pub mod construction;
mod error;
pub mod expr;
pub mod geometry;
pub mod jets;
pub mod linalg;
pub mod surface;
pub mod transforms;

pub use error::{Error, Result};

/// Default threshold for divisions and square roots.
pub const EPS_DIV: f64 = 1e-12;

/// Default relative threshold below which a residual norm counts as a rank drop.
pub const EPS_RANK: f64 = 1e-9;

/// Thresholds used across the pipeline. Relative thresholds are scaled by
/// the quantity named in each field's comment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute floor for divisions in expression and jet evaluation.
    pub eps_div: f64,
    /// Relative rank cutoff in Gram-Schmidt.
    pub eps_rank: f64,
    /// `|h^N|` below `eps_hn * max(1, |h|)` marks a degenerate point.
    pub eps_hn: f64,
    /// Floor for `a = sqrt(1 - |grad r|^2)`.
    pub eps_a: f64,
    /// Rank margin below `eps_reg` times the larger of the median and mean
    /// metric eigenvalue is singular.
    pub eps_reg: f64,
    /// Minimal and umbilic flags, relative to the shape operator scale.
    pub eps_min: f64,
    /// DDVV equality tolerance, scaled by `max(1, |s|)`.
    pub tol_eq: f64,
    /// Allowed deviation from the canonical equality pattern, relative to `max(1, scale)`.
    pub tol_canonical: f64,
    /// Quadric classification tolerance, scaled by `max(1, 4 d^2)`.
    pub tol_quadric: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_div: EPS_DIV,
            eps_rank: EPS_RANK,
            eps_hn: 1e-8,
            eps_a: 1e-6,
            eps_reg: 1e-8,
            eps_min: 1e-7,
            tol_eq: 1e-7,
            tol_canonical: 1e-6,
            tol_quadric: 1e-8,
        }
    }
}

pub use catalog::{builtin, builtin_names};
pub use construction::{phi_jets, sample_grid, ChartPoint, GridSpec, PhiJet};
pub use expr::{parse, ComplexJet, Expr};
pub use geometry::{
    canonical_frame, curvatures, ddvv_residual, fundamental_forms, CanonicalFrame, DdvvReport, ShapeData,
};
pub use jets::{Jet2, VecJet};
pub use surface::{Domain, HolomorphicCurve};
pub use transforms::AmbientMap;
