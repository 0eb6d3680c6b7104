//! The minimal surface `g = Re G`, its conjugate `h = Im G`, and the split
//! of `h` into parts tangent and normal to `g`.
//!
//! Complex structure convention: `J d/du = -d/dv` and `J d/dv = d/du`. With
//! `G` holomorphic in `z = u + iv` this makes `h_* = g_* J` hold exactly,
//! and `g_* J h^T = a_v g_u - a_u g_v` when `g_* h^T = a_u g_u + a_v g_v`.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;

use crate::expr::{eval_jet, ComplexJet, EvalOptions, Expr};
use crate::jets::{lift_complex, Jet2, Part, VecJet};
use crate::linalg::{self, axis};
use crate::{Error, Result, Tolerances};

/// Parameter domain of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Plane,
    Disk { radius: f64 },
}

impl Domain {
    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            Domain::Plane => z.re.is_finite() && z.im.is_finite(),
            Domain::Disk { radius } => z.norm() < radius,
        }
    }
}

/// Holomorphic map `G = g + ih` into complex `(n + 2)`-space.
#[derive(Debug, Clone, PartialEq)]
pub struct HolomorphicCurve {
    pub name: String,
    pub components: Vec<Expr>,
    pub domain: Domain,
}

impl HolomorphicCurve {
    pub fn new(name: impl Into<String>, components: Vec<Expr>, domain: Domain) -> Result<Self> {
        if components.len() < 4 {
            return Err(Error::InvalidInput(format!(
                "a curve needs at least 4 components (n >= 2), got {}",
                components.len()
            )));
        }
        Ok(Self { name: name.into(), components, domain })
    }

    pub fn from_strings(name: impl Into<String>, components: &[&str], domain: Domain) -> Result<Self> {
        let parsed = components.iter().map(|s| crate::expr::parse(s)).collect::<Result<Vec<_>>>()?;
        Self::new(name, parsed, domain)
    }

    /// Submanifold dimension; the ambient space has dimension `n + 2`.
    pub fn n(&self) -> usize {
        self.components.len() - 2
    }

    pub fn ambient_dim(&self) -> usize {
        self.components.len()
    }

    pub fn jets(&self, z: Complex64, order: usize, opts: &EvalOptions) -> Result<Vec<ComplexJet>> {
        self.components.iter().map(|e| eval_jet(e, z, order, opts)).collect()
    }

    pub fn eval(&self, z: Complex64) -> Result<Vec<Complex64>> {
        self.components.iter().map(|e| e.eval(z)).collect()
    }

    /// Bilinear square `<<G', G'>>` together with `|G'|`.
    pub fn isotropy_at(&self, z: Complex64) -> Result<(Complex64, f64)> {
        let jets = self.jets(z, 1, &EvalOptions::default())?;
        let q: Complex64 = jets.iter().map(|j| j.deriv(1) * j.deriv(1)).sum();
        let speed = jets.iter().map(|j| j.deriv(1).norm_sqr()).sum::<f64>().sqrt();
        Ok((q, speed))
    }
}

/// Outcome of an isotropy scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropyReport {
    /// `max |<<G', G'>>|` over the samples.
    pub max_isotropy: f64,
    /// `max |<<G', G'>>| / |G'|^2`.
    pub max_relative: f64,
    /// `min |G'|`: the immersion margin.
    pub min_speed: f64,
}

pub fn check_isotropy(c: &HolomorphicCurve, samples: &[Complex64]) -> Result<IsotropyReport> {
    let mut rep = IsotropyReport { max_isotropy: 0.0, max_relative: 0.0, min_speed: f64::INFINITY };
    for &z in samples {
        let (q, speed) = c.isotropy_at(z)?;
        rep.max_isotropy = rep.max_isotropy.max(q.norm());
        if speed > 0.0 {
            rep.max_relative = rep.max_relative.max(q.norm() / (speed * speed));
        } else {
            rep.max_relative = f64::INFINITY;
        }
        rep.min_speed = rep.min_speed.min(speed);
    }
    Ok(rep)
}

/// Jets of `g`, `h` and their first-derivative fields at one point. `u` and
/// `v` occupy parameter slots 0 and 1.
#[derive(Debug, Clone)]
pub struct SurfaceJets {
    pub z0: Complex64,
    pub g: VecJet,
    pub h: VecJet,
    pub gu: VecJet,
    pub gv: VecJet,
    pub hu: VecJet,
    pub hv: VecJet,
}

impl SurfaceJets {
    pub fn params(&self) -> usize {
        self.g.params()
    }

    pub fn ambient_dim(&self) -> usize {
        self.g.dim()
    }

    /// `|h_u + g_v| + |h_v - g_u|` at the value level.
    pub fn conjugacy_residual(&self) -> f64 {
        let d1 = self.hu.add(&self.gv).value();
        let d2 = self.hv.sub(&self.gu).value();
        norm(&d1) + norm(&d2)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Evaluates `g`, `h` and their derivative fields from order-3 complex
/// jets, so that the derivative fields still carry full 2-jets.
pub fn eval_surface(c: &HolomorphicCurve, z0: Complex64, m: usize, tol: &Tolerances) -> Result<SurfaceJets> {
    if m < 2 {
        return Err(Error::InvalidInput("surface jets need at least 2 parameters".into()));
    }
    let opts = EvalOptions { eps_div: tol.eps_div };
    let jets = c.jets(z0, 3, &opts)?;
    let slots = (0, 1);
    let mut g = Vec::new();
    let mut h = Vec::new();
    let mut gu = Vec::new();
    let mut gv = Vec::new();
    let mut hu = Vec::new();
    let mut hv = Vec::new();
    for f in &jets {
        let df = f.differentiate();
        g.push(lift_complex(f, Part::Real, slots, m));
        h.push(lift_complex(f, Part::Imag, slots, m));
        let re = lift_complex(&df, Part::Real, slots, m);
        let im = lift_complex(&df, Part::Imag, slots, m);
        gu.push(re);
        gv.push(-im);
        hu.push(im);
        hv.push(re);
    }
    Ok(SurfaceJets {
        z0,
        g: VecJet::new(g),
        h: VecJet::new(h),
        gu: VecJet::new(gu),
        gv: VecJet::new(gv),
        hu: VecJet::new(hu),
        hv: VecJet::new(hv),
    })
}

/// Tangent/normal decomposition `h = g_* h^T + h^N` and derived data.
#[derive(Debug, Clone)]
pub struct SplitData {
    /// Coefficients of `g_* h^T = a_u g_u + a_v g_v`.
    pub a_u: Jet2,
    pub a_v: Jet2,
    pub h_t: VecJet,
    pub h_n: VecJet,
    /// `|h^N|`.
    pub rho_n: Jet2,
    /// `r = |h|`.
    pub r: Jet2,
    /// `a = |h^N| / r`, which equals `sqrt(1 - |grad r|^2)`.
    pub a: Jet2,
    /// `sqrt(1 - |grad r|^2)` computed from the gradient of `r` (values only).
    pub a_from_gradient: f64,
    /// Coordinate components of the gradient of `r` in the metric of `g`.
    pub grad_r: Vector2<f64>,
    pub grad_r_norm: f64,
    /// Unit normal with `h^N = -(r a) xi`.
    pub xi: VecJet,
    /// Metric of `g` in the coordinates `(u, v)`.
    pub metric: Matrix2<f64>,
}

/// Splits `h` against the tangent plane of `g`.
pub fn split(s: &SurfaceJets, tol: &Tolerances) -> Result<SplitData> {
    let e = s.gu.dot(&s.gu);
    let f = s.gu.dot(&s.gv);
    let gg = s.gv.dot(&s.gv);
    let metric = Matrix2::new(e.value(), f.value(), f.value(), gg.value());
    let b1 = s.h.dot(&s.gu);
    let b2 = s.h.dot(&s.gv);
    // Value-level solve doubles as the nondegeneracy check.
    linalg::solve2(&metric, &Vector2::new(b1.value(), b2.value()))?;
    let det = e * gg - f * f;
    let inv_det = det.recip_eps(0.0)?;
    let a_u = (b1 * gg - f * b2) * inv_det;
    let a_v = (e * b2 - f * b1) * inv_det;

    let h_t = VecJet::lincomb(&[(a_u, &s.gu), (a_v, &s.gv)]);
    let h_n = s.h.sub(&h_t);

    let r_val = norm(&s.h.value());
    let scale = r_val.max(1.0);
    if r_val < tol.eps_hn {
        return Err(Error::NullConjugate(r_val));
    }
    let rho_val = norm(&h_n.value());
    if rho_val < tol.eps_hn * scale {
        return Err(Error::DegeneratePoint(rho_val));
    }
    let r = s.h.norm()?;
    let rho_n = h_n.norm()?;
    let a = rho_n.div(&r)?;
    let xi = h_n.scale(&rho_n.recip()?).scale_f64(-1.0);

    let dr = Vector2::new(r.d(0), r.d(1));
    let ginv = metric.try_inverse().ok_or(Error::DegenerateMetric(metric.determinant()))?;
    let grad_r = ginv * dr;
    let grad_r_norm = dr.dot(&grad_r).max(0.0).sqrt();
    let a_from_gradient = (1.0 - grad_r_norm * grad_r_norm).max(0.0).sqrt();

    Ok(SplitData { a_u, a_v, h_t, h_n, rho_n, r, a, a_from_gradient, grad_r, grad_r_norm, xi, metric })
}

/// Picks the order in which ambient axes complete `{g_u, g_v, xi}`, from
/// values at the current point. Exposed so callers can pin a different order.
pub fn lambda_pivots(s: &SurfaceJets, d: &SplitData, tol: &Tolerances) -> Result<Vec<usize>> {
    let n_amb = s.ambient_dim();
    let protected: Vec<DVector<f64>> = [&s.gu, &s.gv, &d.xi].iter().map(|v| DVector::from_vec(v.value())).collect();
    let axes: Vec<_> = (0..n_amb).map(|k| axis(k, n_amb)).collect();
    let o = linalg::gram_schmidt_pivoted(&axes, &protected, tol.eps_rank)
        .map_err(|_| Error::RankDeficiency("tangent plane and xi are linearly dependent".into()))?;
    if o.pivots.len() < n_amb - 3 {
        return Err(Error::RankDeficiency(format!("normal complement has rank {} < {}", o.pivots.len(), n_amb - 3)));
    }
    Ok(o.pivots[..n_amb - 3].to_vec())
}

/// Orthonormal frame of `Lambda`, the part of the normal bundle of `g`
/// orthogonal to `h^N`, as 2-jets.
pub fn lambda_frame(s: &SurfaceJets, d: &SplitData, tol: &Tolerances) -> Result<Vec<VecJet>> {
    let pivots = lambda_pivots(s, d, tol)?;
    lambda_frame_with_pivots(s, d, &pivots)
}

/// Jet-level Gram-Schmidt with a fixed axis order, so the frame is one
/// smooth procedure around the point.
pub fn lambda_frame_with_pivots(s: &SurfaceJets, d: &SplitData, pivots: &[usize]) -> Result<Vec<VecJet>> {
    let n_amb = s.ambient_dim();
    let m = s.params();
    let mut basis: Vec<VecJet> = Vec::with_capacity(n_amb);
    for v in [&s.gu, &s.gv, &d.xi] {
        basis.push(orthonormalize_against(v, &basis)?);
    }
    let mut frame = Vec::with_capacity(pivots.len());
    for &k in pivots {
        let e = VecJet::constant(axis(k, n_amb).as_slice(), m);
        let w = orthonormalize_against(&e, &basis)?;
        basis.push(w.clone());
        frame.push(w);
    }
    Ok(frame)
}

fn orthonormalize_against(v: &VecJet, basis: &[VecJet]) -> Result<VecJet> {
    let mut r = v.clone();
    for b in basis {
        let c = b.dot(&r);
        r = r.sub(&b.scale(&c));
    }
    r.normalize().map_err(|_| Error::RankDeficiency("frame vector collapsed during orthonormalization".into()))
}

/// Residuals of the conjugate-surface identities at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateReport {
    pub grad_r_norm: f64,
    pub a: f64,
    /// `|h - r (g_* J grad r - a xi)|`.
    pub h_reconstruction: f64,
    /// `|r^2 - |h^T|^2 - |h^N|^2|` relative to `r^2`.
    pub pythagoras: f64,
    /// Largest `|<B_delta J grad r, X> + a <D_X delta, xi>|` over the
    /// Lambda frame and `X in {d/du, d/dv}`.
    pub normal_connection: f64,
    /// Frobenius norm of `B_xi - (r Hess r - S) J / (a r)`.
    pub shape_xi: f64,
    /// `|S grad r - (1 - |grad r|^2) grad r|`.
    pub s_on_grad_r: f64,
}

/// `J` in the coordinate basis: columns are `J d/du = -d/dv`, `J d/dv = d/du`.
pub fn complex_structure() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

/// Checks `h = r (g_* J grad r - a xi)`, the normal-connection identity and
/// the formula for `B_xi` at one point.
pub fn conjugate_diagnostics(
    s: &SurfaceJets,
    d: &SplitData,
    frame: &[VecJet],
    tol: &Tolerances,
) -> Result<ConjugateReport> {
    let a = d.a_from_gradient;
    if a < tol.eps_a {
        return Err(Error::NearVanishingA(a));
    }
    let r = d.r.value();
    let g = d.metric;
    let ginv = g.try_inverse().ok_or(Error::DegenerateMetric(g.determinant()))?;
    let j = complex_structure();
    let gu = s.gu.value();
    let gv = s.gv.value();
    let push = |c: Vector2<f64>| -> Vec<f64> { gu.iter().zip(&gv).map(|(x, y)| c[0] * x + c[1] * y).collect() };

    let grad_r = d.grad_r;
    let j_grad_r = j * grad_r;
    let xi = d.xi.value();
    let h = s.h.value();
    let gj = push(j_grad_r);
    let recon: Vec<f64> = h.iter().zip(gj.iter().zip(&xi)).map(|(hk, (gk, xk))| hk - r * (gk - a * xk)).collect();
    let h_reconstruction = norm(&recon);

    let ht2 = dot(&d.h_t.value(), &d.h_t.value());
    let hn2 = dot(&d.h_n.value(), &d.h_n.value());
    let pythagoras = (r * r - ht2 - hn2).abs() / (r * r);

    // Second fundamental form of g against an ambient normal vector.
    let second = [s.g.second_partial(0, 0), s.g.second_partial(0, 1), s.g.second_partial(1, 1)];
    let form = |nu: &[f64]| -> Matrix2<f64> {
        let (a11, a12, a22) = (dot(&second[0], nu), dot(&second[1], nu), dot(&second[2], nu));
        Matrix2::new(a11, a12, a12, a22)
    };

    let mut normal_connection: f64 = 0.0;
    for delta in frame {
        let l = form(&delta.value());
        for x in 0..2 {
            let ex = Vector2::new(if x == 0 { 1.0 } else { 0.0 }, if x == 1 { 1.0 } else { 0.0 });
            let lhs = j_grad_r.dot(&(l * ex));
            let conn = dot(&delta.partial(x), &xi);
            normal_connection = normal_connection.max((lhs + a * conn).abs());
        }
    }

    // Covariant Hessian of r: r_ij - <g_ij, g_* grad r>.
    let g_grad_r = push(grad_r);
    let rh = Matrix2::new(
        d.r.dd(0, 0) - dot(&second[0], &g_grad_r),
        d.r.dd(0, 1) - dot(&second[1], &g_grad_r),
        d.r.dd(0, 1) - dot(&second[1], &g_grad_r),
        d.r.dd(1, 1) - dot(&second[2], &g_grad_r),
    );
    let hess_r = ginv * rh;
    let s_op = Matrix2::identity() - grad_r * (g * grad_r).transpose();
    let b_xi = ginv * form(&xi);
    let predicted = (hess_r * r - s_op) * j / (a * r);
    let shape_xi = (b_xi - predicted).norm();

    let s_on_grad_r = (s_op * grad_r - grad_r * (1.0 - d.grad_r_norm * d.grad_r_norm)).norm();

    Ok(ConjugateReport {
        grad_r_norm: d.grad_r_norm,
        a,
        h_reconstruction,
        pythagoras,
        normal_connection,
        shape_xi,
        s_on_grad_r,
    })
}

/// Largest `|<h^N, g_u>|, |<h^N, g_v>|`.
pub fn normal_orthogonality(s: &SurfaceJets, d: &SplitData) -> f64 {
    let hn = d.h_n.value();
    dot(&hn, &s.gu.value()).abs().max(dot(&hn, &s.gv.value()).abs())
}

/// Largest deviation of the frame `{g_u, g_v, xi, w_1, ...}` from the
/// Gram pattern `diag(E, E, 1, 1, ...)`.
pub fn frame_gram_error(s: &SurfaceJets, d: &SplitData, frame: &[VecJet]) -> f64 {
    let mut vecs = vec![s.gu.value(), s.gv.value(), d.xi.value()];
    vecs.extend(frame.iter().map(|w| w.value()));
    let e = d.metric[(0, 0)];
    let k = vecs.len();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&vecs[i], &vecs[j]));
    let mut want = DMatrix::identity(k, k);
    want[(0, 0)] = e;
    want[(1, 1)] = e;
    (gram - want).abs().max()
}
