//! The map `phi(y, w) = g(y) + g_* J h^T(y) + |h^N(y)| w` over the unit
//! sphere bundle of `Lambda`, with full 2-jets in `(u, v, theta_1, ...)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jets::{Jet2, VecJet};
use crate::linalg;
use crate::surface::{self, Domain, HolomorphicCurve};
use crate::{Error, Result, Tolerances};

/// A point of the construction's parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub u: f64,
    pub v: f64,
    /// `n - 2` fiber angles.
    pub theta: Vec<f64>,
}

impl ChartPoint {
    pub fn new(u: f64, v: f64, theta: Vec<f64>) -> Self {
        Self { u, v, theta }
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.u, self.v)
    }

    /// Parameter count `n`.
    pub fn params(&self) -> usize {
        self.theta.len() + 2
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut c = vec![self.u, self.v];
        c.extend(&self.theta);
        c
    }

    pub fn from_coords(c: &[f64]) -> Self {
        Self::new(c[0], c[1], c[2..].to_vec())
    }
}

/// Unit vector in the span of `frame` with spherical coordinates `theta`.
/// The angle jets are normally seeded in parameter slots `2..`.
pub fn fiber_vector(frame: &[VecJet], theta: &[Jet2]) -> VecJet {
    assert_eq!(frame.len(), theta.len() + 1, "need one more frame vector than angles");
    let m = frame[0].params();
    let mut coeffs = Vec::with_capacity(frame.len());
    let mut prefix = Jet2::constant(1.0, m);
    for t in theta {
        coeffs.push(prefix * t.cos());
        prefix = prefix * t.sin();
    }
    coeffs.push(prefix);
    let terms: Vec<_> = coeffs.into_iter().zip(frame).collect();
    VecJet::lincomb(&terms)
}

/// Evaluated construction at one chart point.
#[derive(Debug, Clone)]
pub struct PhiJet {
    pub point: ChartPoint,
    pub phi: VecJet,
    pub w: VecJet,
    pub g: VecJet,
    /// `g_* J h^T = a_v g_u - a_u g_v`.
    pub jh_t: VecJet,
    pub rho_n: Jet2,
    /// Smallest eigenvalue of `dphi^T dphi`.
    pub rank_margin: f64,
    /// Larger of the median and mean metric eigenvalue. The mean keeps the
    /// scale honest when more than half the directions collapse at once.
    pub metric_scale: f64,
    /// Set when `rank_margin < eps_reg * metric_scale`.
    pub singular: bool,
    /// Ambient axes used to complete the `Lambda` frame.
    pub pivots: Vec<usize>,
}

impl PhiJet {
    pub fn n(&self) -> usize {
        self.phi.params()
    }

    /// `dphi^T dphi`.
    pub fn metric(&self) -> DMatrix<f64> {
        metric_of(&self.phi)
    }
}

pub(crate) fn metric_of(phi: &VecJet) -> DMatrix<f64> {
    let m = phi.params();
    let cols: Vec<Vec<f64>> = (0..m).map(|i| phi.partial(i)).collect();
    DMatrix::from_fn(m, m, |i, j| cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum())
}

/// Evaluates `phi` with the axis order chosen at this point.
pub fn phi_jets(c: &HolomorphicCurve, p: &ChartPoint, tol: &Tolerances) -> Result<PhiJet> {
    phi_jets_with(c, p, tol, None)
}

/// Evaluates `phi`, optionally with a pinned axis order for the `Lambda`
/// frame so that neighbouring evaluations follow one smooth frame.
pub fn phi_jets_with(
    c: &HolomorphicCurve,
    p: &ChartPoint,
    tol: &Tolerances,
    pivots: Option<&[usize]>,
) -> Result<PhiJet> {
    let n = c.n();
    if p.params() != n {
        return Err(Error::InvalidInput(format!("chart point has {} parameters, curve needs {n}", p.params())));
    }
    if !c.domain.contains(p.z()) {
        return Err(Error::InvalidInput(format!("point {} lies outside the curve domain", p.z())));
    }
    let s = surface::eval_surface(c, p.z(), n, tol)?;
    let d = surface::split(&s, tol)?;
    let pivots = match pivots {
        Some(pv) => pv.to_vec(),
        None => surface::lambda_pivots(&s, &d, tol)?,
    };
    let frame = surface::lambda_frame_with_pivots(&s, &d, &pivots)?;
    let theta: Vec<Jet2> = p.theta.iter().enumerate().map(|(k, &t)| Jet2::seed(t, k + 2, n)).collect();
    let w = fiber_vector(&frame, &theta);
    let jh_t = VecJet::lincomb(&[(d.a_v, &s.gu), (-d.a_u, &s.gv)]);
    let phi = s.g.add(&jh_t).add(&w.scale(&d.rho_n));

    let metric = metric_of(&phi);
    let eig = linalg::sym_eigen(&metric)?;
    let mut vals: Vec<f64> = eig.values.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    let rank_margin = vals[0];
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let metric_scale = vals[vals.len() / 2].max(mean);
    let singular = rank_margin < tol.eps_reg * metric_scale;
    Ok(PhiJet { point: p.clone(), phi, w, g: s.g, jh_t, rho_n: d.rho_n, rank_margin, metric_scale, singular, pivots })
}

/// Tensor grid over `(u, v, theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
    pub nu: usize,
    pub nv: usize,
    /// Samples per fiber angle.
    pub n_theta: usize,
    /// Random offset as a fraction of the grid step; 0 disables jitter.
    pub jitter: f64,
    pub seed: u64,
}

impl GridSpec {
    pub fn new(n: usize, u_range: (f64, f64), v_range: (f64, f64), nu: usize, nv: usize, n_theta: usize) -> Self {
        Self { n, u_range, v_range, nu, nv, n_theta, jitter: 0.0, seed: 0 }
    }
}

fn linspace(range: (f64, f64), count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.5 * (range.0 + range.1)];
    }
    let step = (range.1 - range.0) / (count - 1) as f64;
    (0..count).map(|k| range.0 + step * k as f64).collect()
}

/// Angles offset by half a step so no sample sits on a chart pole. The last
/// angle runs over a full turn, the others over `[0, pi]`.
fn angle_samples(count: usize, full_turn: bool) -> Vec<f64> {
    let span = if full_turn { 2.0 * PI } else { PI };
    let step = span / count as f64;
    (0..count).map(|k| (k as f64 + 0.5) * step).collect()
}

/// Grid points in order: `u` outermost, then `v`, then the angles (first
/// angle outermost). Points outside `domain` are dropped.
pub fn sample_grid(spec: &GridSpec, domain: &Domain) -> Result<Vec<ChartPoint>> {
    if spec.n < 2 {
        return Err(Error::InvalidInput("grid dimension must be at least 2".into()));
    }
    if spec.nu == 0 || spec.nv == 0 || (spec.n > 2 && spec.n_theta == 0) {
        return Err(Error::InvalidInput("grid counts must be at least 1".into()));
    }
    let us = linspace(spec.u_range, spec.nu);
    let vs = linspace(spec.v_range, spec.nv);
    let n_angles = spec.n - 2;
    let per_angle: Vec<Vec<f64>> = (0..n_angles).map(|k| angle_samples(spec.n_theta, k + 1 == n_angles)).collect();

    let du = if spec.nu > 1 { (spec.u_range.1 - spec.u_range.0) / (spec.nu - 1) as f64 } else { 0.0 };
    let dv = if spec.nv > 1 { (spec.v_range.1 - spec.v_range.0) / (spec.nv - 1) as f64 } else { 0.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut thetas: Vec<Vec<f64>> = vec![Vec::new()];
    for samples in &per_angle {
        thetas = thetas
            .into_iter()
            .flat_map(|prefix| {
                samples.iter().map(move |&t| {
                    let mut next = prefix.clone();
                    next.push(t);
                    next
                })
            })
            .collect();
    }

    let mut out = Vec::new();
    for &u in &us {
        for &v in &vs {
            let (mut uu, mut vv) = (u, v);
            if spec.jitter > 0.0 {
                uu += spec.jitter * du * rng.random_range(-0.5..0.5);
                vv += spec.jitter * dv * rng.random_range(-0.5..0.5);
            }
            if !domain.contains(Complex64::new(uu, vv)) {
                continue;
            }
            for t in &thetas {
                out.push(ChartPoint::new(uu, vv, t.clone()));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(out)
}
