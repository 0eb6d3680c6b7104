//! Fundamental forms, curvature invariants and the canonical equality frame.
//!
//! Shape operators follow `<A_nu X, Y> = <alpha(X, Y), nu>` and are written
//! in the orthonormal tangent frame `e_k = sum_i L_ik d/dt_i` with
//! `L = G^{-1/2}` (symmetric square root). Conformal maps rescale `G` by a
//! scalar, so this choice makes frames before and after such a map
//! directly comparable.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};

use crate::jets::{Signature, VecJet};
use crate::linalg::{self, axis};
use crate::{Error, Result, Tolerances};

/// First and second fundamental form data at one point of an immersion.
#[derive(Debug, Clone)]
pub struct ShapeData {
    pub signature: Signature,
    pub point: DVector<f64>,
    /// Columns `d phi / d t_i`.
    pub tangent: DMatrix<f64>,
    pub metric: DMatrix<f64>,
    /// `L = G^{-1/2}`: column `k` holds the coordinates of `e_k`.
    pub tangent_frame: DMatrix<f64>,
    pub normals: Vec<DVector<f64>>,
    /// `<nu_a, nu_a>`, which is `-1` only for a timelike normal.
    pub normal_signs: Vec<f64>,
    /// `A_{nu_a}` in the orthonormal tangent frame.
    pub ops: Vec<DMatrix<f64>>,
    /// Smallest metric eigenvalue.
    pub rank_margin: f64,
    second: Vec<DVector<f64>>,
}

fn packed(i: usize, j: usize) -> usize {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

fn sig_dot(sig: Signature, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    sig.dot(a.as_slice(), b.as_slice())
}

impl ShapeData {
    pub fn n(&self) -> usize {
        self.metric.nrows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.point.len()
    }

    pub fn codim(&self) -> usize {
        self.normals.len()
    }

    pub fn a1(&self) -> &DMatrix<f64> {
        &self.ops[0]
    }

    pub fn a2(&self) -> &DMatrix<f64> {
        &self.ops[1]
    }

    /// Ambient vectors `e_1, ..., e_n` as columns.
    pub fn ambient_tangent_frame(&self) -> DMatrix<f64> {
        &self.tangent * &self.tangent_frame
    }

    /// Ambient vector for a tangent vector given in the orthonormal frame.
    pub fn tangent_vector(&self, coords: &DVector<f64>) -> DVector<f64> {
        self.ambient_tangent_frame() * coords
    }

    /// `d^2 phi / d t_i d t_j`.
    pub fn second_partial(&self, i: usize, j: usize) -> &DVector<f64> {
        &self.second[packed(i, j)]
    }

    /// `A_xi` in the orthonormal tangent frame for any normal vector `xi`.
    pub fn shape_operator(&self, xi: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n();
        let s = DMatrix::from_fn(n, n, |i, j| sig_dot(self.signature, self.second_partial(i, j), xi));
        &self.tangent_frame * s * &self.tangent_frame
    }

    /// Synthetic data in `R^{n+p}` with tangent space spanned by the first
    /// `n` axes and normals by the remaining ones.
    pub fn from_operators(ops: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = ops.first().map(|a| a.nrows()).unwrap_or(0);
        if n == 0 || ops.iter().any(|a| a.nrows() != n || a.ncols() != n) {
            return Err(Error::InvalidInput("operators must be nonempty and n x n".into()));
        }
        let big_n = n + ops.len();
        let normals: Vec<_> = (0..ops.len()).map(|a| axis(n + a, big_n)).collect();
        let mut second = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            for i in 0..=j {
                let mut v = DVector::zeros(big_n);
                for (a, op) in ops.iter().enumerate() {
                    v[n + a] = 0.5 * (op[(i, j)] + op[(j, i)]);
                }
                second.push(v);
            }
        }
        Ok(Self {
            signature: Signature::Euclidean,
            point: DVector::zeros(big_n),
            tangent: DMatrix::from_fn(big_n, n, |r, c| if r == c { 1.0 } else { 0.0 }),
            metric: DMatrix::identity(n, n),
            tangent_frame: DMatrix::identity(n, n),
            normal_signs: vec![1.0; ops.len()],
            normals,
            ops,
            rank_margin: 1.0,
            second,
        })
    }

    /// Same point with the normal frame replaced by an orthonormal basis of
    /// the normals orthogonal to `exclude`. Used to view a submanifold of a
    /// sphere or hyperbolic space inside that space.
    pub fn restrict_normals(&self, exclude: &DVector<f64>, eps_rank: f64) -> Result<Self> {
        let sig = self.signature;
        let q = sig_dot(sig, exclude, exclude);
        if q.abs() < eps_rank {
            return Err(Error::RankDeficiency("excluded direction is null".into()));
        }
        // Components of the current normals orthogonal to `exclude`.
        let mut kept: Vec<DVector<f64>> = Vec::new();
        let mut signs = Vec::new();
        let mut cands: Vec<DVector<f64>> =
            self.normals.iter().map(|nu| nu - exclude * (sig_dot(sig, nu, exclude) / q)).collect();
        cands.sort_by(|a, b| sig_dot(sig, b, b).abs().total_cmp(&sig_dot(sig, a, a).abs()));
        for c in cands {
            let mut r = c;
            for (k, s) in kept.iter().zip(&signs) {
                r -= k * (sig_dot(sig, &r, k) * s);
            }
            let len2 = sig_dot(sig, &r, &r);
            if len2.abs() > eps_rank {
                signs.push(len2.signum());
                kept.push(r / len2.abs().sqrt());
            }
            if kept.len() + 1 == self.codim() {
                break;
            }
        }
        if kept.len() + 1 != self.codim() {
            return Err(Error::RankDeficiency("normal space does not contain the excluded direction".into()));
        }
        let ops = kept.iter().map(|nu| self.shape_operator(nu)).collect();
        Ok(Self { normals: kept, normal_signs: signs, ops, ..self.clone() })
    }
}

/// Fundamental forms of a Euclidean immersion given by its 2-jet.
pub fn fundamental_forms(phi: &VecJet, tol: &Tolerances) -> Result<ShapeData> {
    fundamental_forms_with(phi, Signature::Euclidean, tol)
}

/// As [`fundamental_forms`], with the ambient inner product of `sig`. The
/// induced metric must be positive definite.
pub fn fundamental_forms_with(phi: &VecJet, sig: Signature, tol: &Tolerances) -> Result<ShapeData> {
    let n = phi.params();
    let big_n = phi.dim();
    if big_n <= n {
        return Err(Error::InvalidInput(format!("no normal space: dimension {n} in {big_n}")));
    }
    let point = DVector::from_vec(phi.value());
    let cols: Vec<DVector<f64>> = (0..n).map(|i| DVector::from_vec(phi.partial(i))).collect();
    let tangent = DMatrix::from_columns(&cols);
    let metric = DMatrix::from_fn(n, n, |i, j| sig_dot(sig, &cols[i], &cols[j]));
    let eig = linalg::sym_eigen(&metric)?;
    let rank_margin = eig.values[n - 1];
    // Same scale as the construction's singular flag.
    let mean = eig.values.sum() / n as f64;
    let scale = eig.values[n / 2].abs().max(mean);
    if rank_margin <= tol.eps_reg * scale || rank_margin <= 0.0 {
        return Err(Error::SingularPoint(rank_margin));
    }
    let tangent_frame = linalg::inv_sqrt_spd(&metric)?;

    let axes: Vec<_> = (0..big_n).map(|k| axis(k, big_n)).collect();
    // Vectors whose Euclidean complement is the normal space of `sig`.
    let flipped: Vec<DVector<f64>> =
        cols.iter().map(|c| DVector::from_fn(big_n, |k, _| sig.sign(k, big_n) * c[k])).collect();
    let o =
        linalg::gram_schmidt_pivoted(&axes, &flipped, tol.eps_rank).map_err(|_| Error::SingularPoint(rank_margin))?;
    let codim = big_n - n;
    if o.basis.len() < big_n {
        return Err(Error::RankDeficiency(format!("normal complement has rank {} < {codim}", o.basis.len() - n)));
    }
    let raw = &o.basis[n..];
    let (normals, normal_signs) = match sig {
        Signature::Euclidean => (raw.to_vec(), vec![1.0; codim]),
        Signature::Lorentz => {
            let m = DMatrix::from_fn(codim, codim, |a, b| sig_dot(sig, &raw[a], &raw[b]));
            let e = linalg::sym_eigen(&m)?;
            let mut normals = Vec::with_capacity(codim);
            let mut signs = Vec::with_capacity(codim);
            for k in 0..codim {
                let d = e.values[k];
                if d.abs() < tol.eps_rank {
                    return Err(Error::RankDeficiency("normal space contains a null direction".into()));
                }
                let mut v = DVector::zeros(big_n);
                for (a, r) in raw.iter().enumerate() {
                    v += r * e.vectors[(a, k)];
                }
                normals.push(v / d.abs().sqrt());
                signs.push(d.signum());
            }
            (normals, signs)
        }
    };

    let mut second = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in 0..=j {
            second.push(DVector::from_vec(phi.second_partial(i, j)));
        }
    }
    let mut sd = ShapeData {
        signature: sig,
        point,
        tangent,
        metric,
        tangent_frame,
        normals,
        normal_signs,
        ops: Vec::new(),
        rank_margin,
        second,
    };
    sd.ops = sd.normals.iter().map(|nu| sd.shape_operator(nu)).collect();
    Ok(sd)
}

/// Normalized scalar curvature, normal scalar curvature and `|H|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvatures {
    pub s: f64,
    pub s_n: f64,
    pub h2: f64,
}

fn frob2(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|x| x * x).sum()
}

fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Closed forms from the Gauss and Ricci equations in a flat ambient space.
pub fn curvatures_of(ops: &[DMatrix<f64>], signs: &[f64]) -> Curvatures {
    let n = ops[0].nrows() as f64;
    let nn = n * (n - 1.0);
    let mut s = 0.0;
    let mut h2 = 0.0;
    for (a, eps) in ops.iter().zip(signs) {
        let t = a.trace();
        s += eps * (t * t - frob2(a));
        h2 += eps * (t / n).powi(2);
    }
    let mut comm = 0.0;
    for a in 0..ops.len() {
        for b in a + 1..ops.len() {
            comm += frob2(&commutator(&ops[a], &ops[b]));
        }
    }
    Curvatures { s: s / nn, s_n: SQRT_2 / nn * comm.sqrt(), h2 }
}

pub fn curvatures(sd: &ShapeData) -> Curvatures {
    curvatures_of(&sd.ops, &sd.normal_signs)
}

/// Point classification attached to a [`DdvvReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DdvvFlags {
    pub regular: bool,
    pub minimal_point: bool,
    pub umbilic_point: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdvvReport {
    pub s: f64,
    pub s_n: f64,
    pub h2: f64,
    /// `s - (c + |H|^2 - s_N)`; never positive beyond roundoff.
    pub residual: f64,
    pub lambda: f64,
    pub mu: f64,
    pub flags: DdvvFlags,
}

impl DdvvReport {
    /// Scaled equality tolerance `tol_eq * max(1, |s|)`.
    pub fn equality_tolerance(&self, tol: &Tolerances) -> f64 {
        tol.tol_eq * self.s.abs().max(1.0)
    }

    pub fn attains_equality(&self, tol: &Tolerances) -> bool {
        self.residual.abs() <= self.equality_tolerance(tol)
    }
}

/// Scale of the shape operators, `sqrt(sum |A_a|^2)`.
pub fn operator_scale(ops: &[DMatrix<f64>]) -> f64 {
    ops.iter().map(frob2).sum::<f64>().sqrt()
}

/// Trace direction angle, `lambda` and the spectrum of the traceless part
/// of `A_eta`, shared by the report and the canonical frame.
struct EtaSplit {
    psi: f64,
    a_eta: DMatrix<f64>,
    a_zeta: DMatrix<f64>,
    lambda: f64,
    eig: linalg::SymEigen,
    mu: f64,
    minimal: bool,
    scale: f64,
}

fn eta_split(ops: &[DMatrix<f64>], tol: &Tolerances) -> Result<EtaSplit> {
    if ops.len() != 2 {
        return Err(Error::InvalidInput(format!("equality frame needs codimension two, got {}", ops.len())));
    }
    let n = ops[0].nrows();
    let (t1, t2) = (ops[0].trace(), ops[1].trace());
    let scale = operator_scale(ops);
    let minimal = scale == 0.0 || t1.abs() + t2.abs() < tol.eps_min * scale;
    let psi = if minimal { 0.0 } else { t2.atan2(t1) };
    let (c, s) = (psi.cos(), psi.sin());
    let a_eta = &ops[0] * c + &ops[1] * s;
    let a_zeta = &ops[1] * c - &ops[0] * s;
    let lambda = a_eta.trace() / n as f64;
    let b = &a_eta - DMatrix::identity(n, n) * lambda;
    let eig = linalg::sym_eigen(&b)?;
    let mu = 0.5 * (eig.values[0] - eig.values[n - 1]);
    Ok(EtaSplit { psi, a_eta, a_zeta, lambda, eig, mu, minimal, scale })
}

/// Evaluates the inequality with ambient curvature `c` and classifies the
/// point.
pub fn ddvv_residual(sd: &ShapeData, c: f64, tol: &Tolerances) -> DdvvReport {
    let k = curvatures(sd);
    let mut report = DdvvReport {
        s: k.s,
        s_n: k.s_n,
        h2: k.h2,
        residual: k.s - (c + k.h2 - k.s_n),
        lambda: f64::NAN,
        mu: f64::NAN,
        flags: DdvvFlags { regular: true, ..Default::default() },
    };
    let scale = operator_scale(&sd.ops);
    if sd.codim() == 2 {
        match eta_split(&sd.ops, tol) {
            Ok(e) => {
                report.lambda = e.lambda;
                report.mu = e.mu;
                report.flags.minimal_point = e.minimal;
                report.flags.umbilic_point = e.mu <= tol.eps_min * scale;
            }
            Err(_) => report.flags.degenerate = true,
        }
    } else {
        let traces: f64 = sd.ops.iter().map(|a| a.trace().abs()).sum();
        report.flags.minimal_point = scale == 0.0 || traces < tol.eps_min * scale;
    }
    report
}

/// Both sides of `sum_{a,b} |[B_a, B_b]|^2 <= (sum_a |B_a|^2)^2` for
/// traceless symmetric matrices. Equality in the curvature inequality holds
/// exactly when the two sides agree.
pub fn traceless_commutator(bs: &[DMatrix<f64>]) -> Result<(f64, f64)> {
    for b in bs {
        let t = b.trace();
        if t.abs() > 1e-9 * b.norm() || (b.norm() == 0.0 && t != 0.0) {
            return Err(Error::NotTraceless(t));
        }
    }
    let mut lhs = 0.0;
    for a in bs {
        for b in bs {
            lhs += frob2(&commutator(a, b));
        }
    }
    let rhs = bs.iter().map(frob2).sum::<f64>().powi(2);
    Ok((lhs, rhs))
}

/// Traceless parts `A - (tr A / n) I`.
pub fn traceless_parts(ops: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    ops.iter()
        .map(|a| {
            let n = a.nrows();
            a - DMatrix::identity(n, n) * (a.trace() / n as f64)
        })
        .collect()
}

/// Whether the commutator sides agree within the tolerance equivalent to
/// `|residual| <= tol_eq * max(1, |s|)`: the two differ by
/// `n (n - 1) |residual| (sqrt(lhs) + sqrt(rhs))`.
pub fn commutator_matches(sd: &ShapeData, tol: &Tolerances) -> Result<bool> {
    let n = sd.n() as f64;
    let (lhs, rhs) = traceless_commutator(&traceless_parts(&sd.ops))?;
    let s = curvatures(sd).s;
    let allowed = n * (n - 1.0) * tol.tol_eq * s.abs().max(1.0) * (lhs.sqrt() + rhs.sqrt());
    Ok((lhs - rhs).abs() <= allowed)
}

/// Frame in which the shape operators take the equality form
/// `A_eta = lambda I + mu (E12 + E21)`, `A_zeta = mu (E11 - E22)`.
#[derive(Debug, Clone)]
pub struct CanonicalFrame {
    pub lambda: f64,
    pub mu: f64,
    /// Rotation angle of `eta` within the normal frame.
    pub psi: f64,
    pub eta: DVector<f64>,
    pub zeta: DVector<f64>,
    /// Orthonormal-frame coordinates: columns `Y1, Y2, Y3, ...` with
    /// `A_eta Y1 = (lambda + mu) Y1` and `A_eta Y2 = (lambda - mu) Y2`.
    pub y_basis: DMatrix<f64>,
    /// Ambient tangent vectors `Y1`, `Y2`, `e1 = (Y1 + Y2)/sqrt 2`, `e2 = (Y1 - Y2)/sqrt 2`.
    pub y1: DVector<f64>,
    pub y2: DVector<f64>,
    pub e1: DVector<f64>,
    pub e2: DVector<f64>,
    pub residual: f64,
    pub umbilic: bool,
    pub minimal: bool,
    pub a_eta: DMatrix<f64>,
    pub a_zeta: DMatrix<f64>,
}

impl CanonicalFrame {
    /// Orthonormal-frame coordinates of `e1, e2, Y3, ...` as columns.
    pub fn e_basis(&self) -> DMatrix<f64> {
        let mut q = self.y_basis.clone();
        let (y1, y2) = (self.y_basis.column(0).into_owned(), self.y_basis.column(1).into_owned());
        q.set_column(0, &((&y1 + &y2) / SQRT_2));
        q.set_column(1, &((&y1 - &y2) / SQRT_2));
        q
    }
}

/// Canonical frame at a non-minimal point.
pub fn canonical_frame(sd: &ShapeData, tol: &Tolerances) -> Result<CanonicalFrame> {
    canonical_impl(sd, tol, false)
}

/// As [`canonical_frame`] but at minimal points takes `eta` to be the first
/// normal. Austere points are minimal, so this is the variant for them.
pub fn canonical_frame_lenient(sd: &ShapeData, tol: &Tolerances) -> Result<CanonicalFrame> {
    canonical_impl(sd, tol, true)
}

fn canonical_impl(sd: &ShapeData, tol: &Tolerances, lenient: bool) -> Result<CanonicalFrame> {
    let e = eta_split(&sd.ops, tol)?;
    if e.minimal && !lenient {
        return Err(Error::MinimalPoint);
    }
    let n = sd.n();
    let (c, s) = (e.psi.cos(), e.psi.sin());
    let eta = &sd.normals[0] * c + &sd.normals[1] * s;
    let zeta = &sd.normals[1] * c - &sd.normals[0] * s;
    let limit = tol.tol_canonical * (e.lambda.abs() + e.mu).max(1.0);
    let umbilic = e.mu <= tol.eps_min * e.scale;

    let mut q = DMatrix::zeros(n, n);
    let mut mu = e.mu;
    let residual;
    if umbilic {
        q.copy_from(&e.eig.vectors);
        mu = 0.0;
        let b = &e.a_eta - DMatrix::identity(n, n) * e.lambda;
        residual = b.norm() + e.a_zeta.norm();
    } else {
        // Y1, Y2 from the extreme eigenvalues, the rest in between.
        q.set_column(0, &e.eig.vectors.column(0));
        q.set_column(1, &e.eig.vectors.column(n - 1));
        for k in 1..n - 1 {
            q.set_column(k + 1, &e.eig.vectors.column(k));
        }
        let z = q.transpose() * &e.a_zeta * &q;
        if z[(0, 1)] < 0.0 {
            let flipped = -q.column(1);
            q.set_column(1, &flipped);
        }
        let b = q.transpose() * (&e.a_eta - DMatrix::identity(n, n) * e.lambda) * &q;
        let z = q.transpose() * &e.a_zeta * &q;
        let mut want_b = DMatrix::zeros(n, n);
        want_b[(0, 0)] = mu;
        want_b[(1, 1)] = -mu;
        let mut want_z = DMatrix::zeros(n, n);
        want_z[(0, 1)] = mu;
        want_z[(1, 0)] = mu;
        residual = (b - want_b).norm() + (z - want_z).norm();
    }
    if residual > limit {
        return Err(Error::NotEqualityForm(format!(
            "deviation {residual:e} exceeds {limit:e} (lambda {}, mu {mu})",
            e.lambda
        )));
    }
    let frame = sd.ambient_tangent_frame();
    let y1 = &frame * q.column(0);
    let y2 = &frame * q.column(1);
    Ok(CanonicalFrame {
        lambda: e.lambda,
        mu,
        psi: e.psi,
        eta,
        zeta,
        e1: (&y1 + &y2) / SQRT_2,
        e2: (&y1 - &y2) / SQRT_2,
        y1,
        y2,
        y_basis: q,
        residual,
        umbilic,
        minimal: e.minimal,
        a_eta: e.a_eta,
        a_zeta: e.a_zeta,
    })
}

/// Whether the frame has `lambda = 0` relative to its scale.
pub fn austere_test(cf: &CanonicalFrame, tol: f64) -> bool {
    cf.lambda.abs() <= tol * (cf.lambda.abs() + cf.mu)
}

/// Operators of the equality form in the `e` basis.
pub fn equality_form(n: usize, lambda: f64, mu: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut a_eta = DMatrix::identity(n, n) * lambda;
    a_eta[(0, 1)] = mu;
    a_eta[(1, 0)] = mu;
    let mut a_zeta = DMatrix::zeros(n, n);
    a_zeta[(0, 0)] = mu;
    a_zeta[(1, 1)] = -mu;
    (a_eta, a_zeta)
}
