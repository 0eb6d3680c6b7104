//! Inversions, stereographic projections, normal transport, quadric
//! classification and the holomorphic inversion of curves.
//!
//! Conventions: `S_d = S(d e_N; d)` in `R^N` and
//! `H_d = {X : <X + d e_N, X + d e_N> = -d^2}` in Lorentz space `L^N` (last
//! coordinate timelike). Both pass through the origin. Stereographic
//! projections are restrictions of inversions centred at `+-2d e_N` with
//! radius `2d`; the flat side is the hyperplane `x_N = 0`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::construction::{phi_jets, ChartPoint};
use crate::expr::{BinaryOp, Expr};
use crate::geometry::{canonical_frame, fundamental_forms_with, CanonicalFrame, ShapeData};
use crate::jets::{Jet2, Signature, VecJet};
use crate::surface::HolomorphicCurve;
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    /// `P0 + d^2 (P - P0) / |P - P0|^2`.
    EuclideanInversion {
        center: Vec<f64>,
        radius: f64,
    },
    /// `P0 - d^2 (P - P0) / <P - P0, P - P0>` in `L^N`.
    LorentzInversion {
        center: Vec<f64>,
        radius: f64,
    },
    StereoSphereToPlane {
        d: f64,
    },
    StereoPlaneToSphere {
        d: f64,
    },
    StereoHypToBall {
        d: f64,
    },
    StereoBallToHyp {
        d: f64,
    },
}

/// A conformal map acting on `R^N` or `L^N`. Stereographic kinds take or
/// return points of the hyperplane `R^{N-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientMap {
    pub kind: MapKind,
    /// Dimension `N` of the space the underlying inversion acts on.
    pub dim: usize,
    /// Overrides the sign in front of `d^2` (sensitivity checks only).
    pub sign_override: Option<f64>,
}

/// Centre, radius, signature and the signed factor `kappa = +-d^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub center: DVector<f64>,
    pub radius: f64,
    pub signature: Signature,
    pub kappa: f64,
}

impl AmbientMap {
    pub fn new(kind: MapKind, dim: usize) -> Result<Self> {
        let m = Self { kind, dim, sign_override: None };
        m.validate()?;
        Ok(m)
    }

    pub fn euclidean_inversion(center: Vec<f64>, radius: f64) -> Result<Self> {
        let dim = center.len();
        Self::new(MapKind::EuclideanInversion { center, radius }, dim)
    }

    pub fn lorentz_inversion(center: Vec<f64>, radius: f64) -> Result<Self> {
        let dim = center.len();
        Self::new(MapKind::LorentzInversion { center, radius }, dim)
    }

    fn validate(&self) -> Result<()> {
        let (r, center_len) = match &self.kind {
            MapKind::EuclideanInversion { center, radius } | MapKind::LorentzInversion { center, radius } => {
                (*radius, Some(center.len()))
            }
            MapKind::StereoSphereToPlane { d }
            | MapKind::StereoPlaneToSphere { d }
            | MapKind::StereoHypToBall { d }
            | MapKind::StereoBallToHyp { d } => (*d, None),
        };
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidInput(format!("map radius must be positive, got {r}")));
        }
        if center_len.is_some_and(|l| l != self.dim) {
            return Err(Error::InvalidInput("inversion centre has the wrong dimension".into()));
        }
        if self.dim < 2 {
            return Err(Error::InvalidInput("ambient dimension must be at least 2".into()));
        }
        Ok(())
    }

    pub fn inversion(&self) -> Inversion {
        let n = self.dim;
        let e_n = |s: f64| {
            let mut v = DVector::zeros(n);
            v[n - 1] = s;
            v
        };
        let (center, radius, signature, sign) = match &self.kind {
            MapKind::EuclideanInversion { center, radius } => {
                (DVector::from_column_slice(center), *radius, Signature::Euclidean, 1.0)
            }
            MapKind::LorentzInversion { center, radius } => {
                (DVector::from_column_slice(center), *radius, Signature::Lorentz, -1.0)
            }
            MapKind::StereoSphereToPlane { d } | MapKind::StereoPlaneToSphere { d } => {
                (e_n(2.0 * d), 2.0 * d, Signature::Euclidean, 1.0)
            }
            MapKind::StereoHypToBall { d } | MapKind::StereoBallToHyp { d } => {
                (e_n(-2.0 * d), 2.0 * d, Signature::Lorentz, -1.0)
            }
        };
        let sign = self.sign_override.unwrap_or(sign);
        Inversion { center, radius, signature, kappa: sign * radius * radius }
    }

    fn flat_input(&self) -> bool {
        matches!(self.kind, MapKind::StereoPlaneToSphere { .. } | MapKind::StereoBallToHyp { .. })
    }

    fn flat_output(&self) -> bool {
        matches!(self.kind, MapKind::StereoSphereToPlane { .. } | MapKind::StereoHypToBall { .. })
    }

    pub fn input_dim(&self) -> usize {
        if self.flat_input() {
            self.dim - 1
        } else {
            self.dim
        }
    }

    pub fn output_dim(&self) -> usize {
        if self.flat_output() {
            self.dim - 1
        } else {
            self.dim
        }
    }

    pub fn input_signature(&self) -> Signature {
        match self.kind {
            MapKind::LorentzInversion { .. } | MapKind::StereoHypToBall { .. } => Signature::Lorentz,
            _ => Signature::Euclidean,
        }
    }

    pub fn output_signature(&self) -> Signature {
        match self.kind {
            MapKind::LorentzInversion { .. } | MapKind::StereoBallToHyp { .. } => Signature::Lorentz,
            _ => Signature::Euclidean,
        }
    }

    fn embed(&self, p: &[f64]) -> Result<DVector<f64>> {
        if p.len() != self.input_dim() {
            return Err(Error::InvalidInput(format!("map expects dimension {}, got {}", self.input_dim(), p.len())));
        }
        let mut v = DVector::zeros(self.dim);
        v.rows_mut(0, p.len()).copy_from_slice(p);
        Ok(v)
    }

    pub fn apply_point(&self, p: &[f64]) -> Result<Vec<f64>> {
        let inv = self.inversion();
        let x = self.embed(p)?;
        let q = &x - &inv.center;
        let qq = inv.signature.dot(q.as_slice(), q.as_slice());
        if qq.abs() < crate::EPS_DIV {
            return Err(Error::MapSingularity(format!("<P - P0, P - P0> = {qq:e}")));
        }
        let y = &inv.center + q * (inv.kappa / qq);
        Ok(y.as_slice()[..self.output_dim()].to_vec())
    }
}

/// Applies `m` to an immersion jet.
pub fn apply_map(m: &AmbientMap, p: &VecJet) -> Result<VecJet> {
    if p.dim() != m.input_dim() {
        return Err(Error::InvalidInput(format!("map expects dimension {}, got {}", m.input_dim(), p.dim())));
    }
    let inv = m.inversion();
    let mut x = p.clone();
    if m.flat_input() {
        x.push(Jet2::constant(0.0, p.params()));
    }
    let center = VecJet::constant(inv.center.as_slice(), p.params());
    let q = x.sub(&center);
    let qq = q.dot_with(&q, inv.signature);
    if qq.value().abs() < crate::EPS_DIV {
        return Err(Error::MapSingularity(format!("<P - P0, P - P0> = {:e}", qq.value())));
    }
    let factor = qq.recip_eps(0.0)?.scale(inv.kappa);
    let y = center.add(&q.scale(&factor));
    Ok(if m.flat_output() { y.truncate_last() } else { y })
}

/// `P xi = xi - 2 <f - P0, xi> / <f - P0, f - P0> (f - P0)`, the normal of
/// the image at `m(f)` corresponding to `xi`. Works in the full space of
/// the inversion; flat inputs are embedded with last coordinate 0.
pub fn normal_transport(m: &AmbientMap, f: &[f64], xi: &[f64]) -> Result<DVector<f64>> {
    let inv = m.inversion();
    let q = m.embed(f)? - &inv.center;
    let xi = m.embed(xi)?;
    let sig = inv.signature;
    let qq = sig.dot(q.as_slice(), q.as_slice());
    if qq.abs() < crate::EPS_DIV {
        return Err(Error::MapSingularity(format!("<f - P0, f - P0> = {qq:e}")));
    }
    let qx = sig.dot(q.as_slice(), xi.as_slice());
    Ok(&xi - q * (2.0 * qx / qq))
}

/// Outcome of comparing the shape operators of `f` and `m o f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeLawReport {
    /// Frobenius norm of `A~_{P xi} - (<Q, Q> A_xi + 2 <Q, xi> I) / kappa`.
    pub residual: f64,
    /// `residual` divided by `max(1, |A~_{P xi}|)`.
    pub relative: f64,
    /// Largest mismatch between the transported and the computed frames.
    pub frame_error: f64,
}

fn pad(v: &DVector<f64>, n: usize) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    out.rows_mut(0, v.len()).copy_from(v);
    out
}

/// Checks the transformation law of shape operators under `m` for the
/// normal `xi` of `before`. Both data must come from the same parameter
/// point; the orthonormal frames built from `G^{-1/2}` correspond under a
/// conformal map, which is verified first.
pub fn shape_law_check(
    m: &AmbientMap,
    before: &ShapeData,
    after: &ShapeData,
    xi: &DVector<f64>,
) -> Result<ShapeLawReport> {
    let inv = m.inversion();
    let sig = inv.signature;
    let big_n = m.dim;
    if before.n() != after.n() {
        return Err(Error::FrameMismatch("tangent dimensions differ".into()));
    }
    let q = m.embed(before.point.as_slice())? - &inv.center;
    let qq = sig.dot(q.as_slice(), q.as_slice());
    if qq.abs() < crate::EPS_DIV {
        return Err(Error::MapSingularity(format!("<f - P0, f - P0> = {qq:e}")));
    }
    let reflect = |v: &DVector<f64>| -> DVector<f64> {
        let v = pad(v, big_n);
        let c = 2.0 * sig.dot(q.as_slice(), v.as_slice()) / qq;
        &v - &q * c
    };
    let e_before = before.ambient_tangent_frame();
    let e_after = after.ambient_tangent_frame();
    let mut frame_error: f64 = 0.0;
    for k in 0..before.n() {
        let t = reflect(&e_before.column(k).into_owned());
        let a = pad(&e_after.column(k).into_owned(), big_n);
        frame_error = frame_error.max((t - a).amax());
    }
    if frame_error > 1e-6 {
        return Err(Error::FrameMismatch(format!("transported frame differs by {frame_error:e}")));
    }
    let p_xi = reflect(xi);
    let p_xi = p_xi.rows(0, after.ambient_dim()).into_owned();
    let a_after = after.shape_operator(&p_xi);
    let a_before = before.shape_operator(xi);
    let n = before.n();
    let qxi = sig.dot(q.as_slice(), pad(xi, big_n).as_slice());
    let want = (a_before * qq + DMatrix::identity(n, n) * (2.0 * qxi)) / inv.kappa;
    let residual = (&a_after - want).norm();
    Ok(ShapeLawReport { residual, relative: residual / a_after.norm().max(1.0), frame_error })
}

/// `<<G(z), G(z)>> = sum_k G_k(z)^2`.
pub fn quadric_value(c: &HolomorphicCurve, z: Complex64) -> Result<Complex64> {
    Ok(c.eval(z)?.iter().map(|g| g * g).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadricKind {
    Zero,
    PlusFourDSquared,
    MinusFourDSquared,
    Nonconstant,
}

impl QuadricKind {
    pub fn label(self) -> &'static str {
        match self {
            QuadricKind::Zero => "0",
            QuadricKind::PlusFourDSquared => "+4d^2",
            QuadricKind::MinusFourDSquared => "-4d^2",
            QuadricKind::Nonconstant => "nonconstant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadricClass {
    pub kind: QuadricKind,
    /// The matched constant, if any.
    pub k: Option<f64>,
    /// Largest distance of the sampled values from the matched constant,
    /// or from the nearest candidate when nothing matched.
    pub max_deviation: f64,
    /// Classification of `<<G, G>> + 4 d^2`: the value in `C^{n+3}` after
    /// appending the coordinate `2d`.
    pub offset_kind: QuadricKind,
}

fn classify_values(values: &[Complex64], d: f64, tol: f64) -> (QuadricKind, Option<f64>, f64) {
    let four = 4.0 * d * d;
    let limit = tol * four.max(1.0);
    let candidates =
        [(QuadricKind::Zero, 0.0), (QuadricKind::PlusFourDSquared, four), (QuadricKind::MinusFourDSquared, -four)];
    let mut best = (QuadricKind::Nonconstant, None, f64::INFINITY);
    for (kind, k) in candidates {
        let dev = values.iter().map(|q| (q - Complex64::new(k, 0.0)).norm()).fold(0.0, f64::max);
        if dev < best.2 {
            best = (kind, Some(k), dev);
        }
    }
    if best.2 > limit {
        best.0 = QuadricKind::Nonconstant;
        best.1 = None;
    }
    best
}

pub fn quadric_classify(c: &HolomorphicCurve, samples: &[Complex64], d: f64, tol: f64) -> Result<QuadricClass> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("quadric classification needs samples".into()));
    }
    let values = samples.iter().map(|&z| quadric_value(c, z)).collect::<Result<Vec<_>>>()?;
    let (kind, k, max_deviation) = classify_values(&values, d, tol);
    let shifted: Vec<_> = values.iter().map(|q| q + 4.0 * d * d).collect();
    let (offset_kind, _, _) = classify_values(&shifted, d, tol);
    Ok(QuadricClass { kind, k, max_deviation, offset_kind })
}

/// `T_d o G = d^2 G / <<G, G>>` as a new curve.
pub fn holo_invert(c: &HolomorphicCurve, d: f64, samples: &[Complex64], tol: &Tolerances) -> Result<HolomorphicCurve> {
    let mut scale: f64 = 0.0;
    let mut largest: f64 = 0.0;
    for &z in samples {
        let g = c.eval(z)?;
        scale = scale.max(g.iter().map(|x| x.norm_sqr()).sum());
        largest = largest.max(quadric_value(c, z)?.norm());
    }
    if largest <= tol.tol_quadric * scale.max(1.0) {
        return Err(Error::NullQuadricCurve);
    }
    let q = c
        .components
        .iter()
        .map(|e| e.clone().pow(2))
        .reduce(|a, b| Expr::binary(BinaryOp::Add, a, b))
        .expect("curve has components");
    let d2 = Expr::real(d * d);
    let comps = c
        .components
        .iter()
        .map(|e| Expr::binary(BinaryOp::Div, Expr::binary(BinaryOp::Mul, d2.clone(), e.clone()), q.clone()))
        .collect();
    HolomorphicCurve::new(format!("{}-inverted", c.name), comps, c.domain)
}

/// `g = f + eta / lambda` and `h = -zeta / lambda` from a canonical frame.
pub fn leaf_data(point: &DVector<f64>, cf: &CanonicalFrame) -> (DVector<f64>, DVector<f64>) {
    let r = 1.0 / cf.lambda;
    (point + &cf.eta * r, -&cf.zeta * r)
}

/// Sign that makes `zeta` agree with the parameter orientation. Flipping
/// `zeta` flips `Y2` (the equality form ties them together), so the sign of
/// `zeta` is read off the orientation of `(Y1, Y2)` projected to the first
/// two coordinates, which span the leaf directions transversal to the
/// fibers.
pub fn orientation_sign(sd: &ShapeData, cf: &CanonicalFrame) -> f64 {
    let y1 = &sd.tangent_frame * cf.y_basis.column(0);
    let y2 = &sd.tangent_frame * cf.y_basis.column(1);
    let det = y1[0] * y2[1] - y1[1] * y2[0];
    if det < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Leaf data of `m o phi` at one chart point.
#[derive(Debug, Clone)]
pub struct AssociatedSample {
    pub point: ChartPoint,
    pub g: DVector<f64>,
    pub h: DVector<f64>,
    pub lambda: f64,
    pub mu: f64,
}

/// Evaluates `m o phi` at each point, extracts its canonical frame and
/// returns `g~ = phi~ + eta~ / lambda~`, `h~ = -zeta~ / lambda~`. The sign of
/// `zeta~` follows [`orientation_sign`], times `zeta_sign`, so it varies
/// continuously along the samples.
pub fn associated_pair_samples(
    c: &HolomorphicCurve,
    m: &AmbientMap,
    points: &[ChartPoint],
    tol: &Tolerances,
    zeta_sign: f64,
) -> Vec<Result<AssociatedSample>> {
    points
        .iter()
        .map(|p| {
            let pj = phi_jets(c, p, tol)?;
            let img = apply_map(m, &pj.phi)?;
            let sd = fundamental_forms_with(&img, m.output_signature(), tol)?;
            let mut cf = canonical_frame(&sd, tol)?;
            cf.zeta *= orientation_sign(&sd, &cf) * zeta_sign;
            let (g, h) = leaf_data(&sd.point, &cf);
            Ok(AssociatedSample { point: p.clone(), g, h, lambda: cf.lambda, mu: cf.mu })
        })
        .collect()
}

/// Result of comparing associated pairs with `T_d o G`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociatedReport {
    /// Global sign applied to every `h~`, chosen at the first sample.
    pub seed_sign: f64,
    /// `(s_g, s_h, residual)` for `g~ = s_g Re T_d G`, `h~ = s_h Im T_d G`.
    pub conventions: Vec<(f64, f64, f64)>,
    pub best: (f64, f64, f64),
    /// Sample with the largest deviation under `best`.
    pub worst_point: ChartPoint,
    /// Largest spread of `g~` (and `h~`) over the fiber at a base point.
    pub fiber_spread_g: f64,
    pub fiber_spread_h: f64,
    pub used: usize,
    pub failed: usize,
}

fn split_complex(v: &[Complex64]) -> (DVector<f64>, DVector<f64>) {
    (DVector::from_iterator(v.len(), v.iter().map(|x| x.re)), DVector::from_iterator(v.len(), v.iter().map(|x| x.im)))
}

/// Runs [`associated_pair_samples`] under the inversion at the origin with
/// radius `d` and compares with `T_d o G` under the four sign conventions.
pub fn associated_compare(
    c: &HolomorphicCurve,
    d: f64,
    points: &[ChartPoint],
    tol: &Tolerances,
) -> Result<AssociatedReport> {
    let m = AmbientMap::euclidean_inversion(vec![0.0; c.ambient_dim()], d)?;
    let results = associated_pair_samples(c, &m, points, tol, 1.0);
    let mut used = Vec::new();
    let mut failed = 0;
    for r in results {
        match r {
            Ok(s) => used.push(s),
            Err(_) => failed += 1,
        }
    }
    if used.is_empty() {
        return Err(Error::InvalidInput("no sample admitted a canonical frame".into()));
    }
    let targets = used
        .iter()
        .map(|s| {
            let z = s.point.z();
            let q = quadric_value(c, z)?;
            if q.norm() < crate::EPS_DIV {
                return Err(Error::NullQuadricCurve);
            }
            let t: Vec<Complex64> = c.eval(z)?.iter().map(|g| g * (d * d) / q).collect();
            Ok(split_complex(&t))
        })
        .collect::<Result<Vec<_>>>()?;

    let (_, im0) = &targets[0];
    let h0 = &used[0].h;
    let seed_sign = if (h0 + im0).norm() <= (-h0 + im0).norm() { 1.0 } else { -1.0 };

    let mut conventions = Vec::new();
    let mut worst_at = Vec::new();
    for s_g in [1.0, -1.0] {
        for s_h in [1.0, -1.0] {
            let mut worst: f64 = 0.0;
            let mut at = 0;
            for (k, (s, (re, im))) in used.iter().zip(&targets).enumerate() {
                let eg = (&s.g - re * s_g).norm();
                let eh = (&s.h * seed_sign - im * s_h).norm();
                if eg.max(eh) > worst {
                    worst = eg.max(eh);
                    at = k;
                }
            }
            conventions.push((s_g, s_h, worst));
            worst_at.push(at);
        }
    }
    let best_idx = (0..conventions.len())
        .min_by(|&a, &b| conventions[a].2.total_cmp(&conventions[b].2))
        .expect("four conventions");
    let best = conventions[best_idx];
    let worst_point = used[worst_at[best_idx]].point.clone();

    let mut fiber_spread_g: f64 = 0.0;
    let mut fiber_spread_h: f64 = 0.0;
    for (i, a) in used.iter().enumerate() {
        for b in &used[i + 1..] {
            if a.point.u == b.point.u && a.point.v == b.point.v {
                fiber_spread_g = fiber_spread_g.max((&a.g - &b.g).norm());
                fiber_spread_h = fiber_spread_h.max((&a.h - &b.h).norm());
            }
        }
    }
    Ok(AssociatedReport {
        seed_sign,
        conventions,
        best,
        worst_point,
        fiber_spread_g,
        fiber_spread_h,
        used: used.len(),
        failed,
    })
}

/// The map under which a construction from a curve in the given quadric is
/// expected to become austere: the inversion at the origin for `k = 0`, and
/// a stereographic picture for `k = +-4d^2`. `n_plus_2` is the dimension
/// of the construction's ambient space.
///
/// The pairing is the one observed numerically: `k = +4d^2` becomes austere
/// in `H_d` (via `L^{n+3}`) and `k = -4d^2` in `S_d`. See
/// `tests/quadric_pairing.rs`.
pub fn austere_map_for(kind: QuadricKind, d: f64, n_plus_2: usize) -> Result<Option<AmbientMap>> {
    Ok(match kind {
        QuadricKind::Zero => Some(AmbientMap::euclidean_inversion(vec![0.0; n_plus_2], d)?),
        QuadricKind::PlusFourDSquared => Some(AmbientMap::new(MapKind::StereoBallToHyp { d }, n_plus_2 + 1)?),
        QuadricKind::MinusFourDSquared => Some(AmbientMap::new(MapKind::StereoPlaneToSphere { d }, n_plus_2 + 1)?),
        QuadricKind::Nonconstant => None,
    })
}

/// Normal of the model space containing the image of `m` at `y`: the
/// radial vector of `S_d` or `H_d`. `None` for plain inversions.
pub fn model_space_normal(m: &AmbientMap, y: &[f64]) -> Option<DVector<f64>> {
    let n = m.dim;
    let mut v = DVector::from_column_slice(y);
    match m.kind {
        MapKind::StereoPlaneToSphere { d } => {
            v[n - 1] -= d;
            Some(v)
        }
        MapKind::StereoBallToHyp { d } => {
            v[n - 1] += d;
            Some(v)
        }
        _ => None,
    }
}
