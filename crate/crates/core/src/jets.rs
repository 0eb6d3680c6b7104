//! Second-order forward-mode differentiation in `m` real parameters.
//!
//! A [`Jet2`] carries a value, its gradient and its Hessian. Arithmetic on
//! jets applies the product, quotient and chain rules exactly, so a quantity
//! assembled from jets has exact first and second derivatives up to floating
//! point roundoff.

use std::ops;

use crate::expr::ComplexJet;
use crate::{Error, Result};

/// Largest supported parameter count.
pub const MAX_PARAMS: usize = 8;
const PACKED: usize = MAX_PARAMS * (MAX_PARAMS + 1) / 2;

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

/// Value, gradient and symmetric Hessian (packed upper triangle).
#[derive(Clone, Copy)]
pub struct Jet2 {
    m: usize,
    value: f64,
    grad: [f64; MAX_PARAMS],
    hess: [f64; PACKED],
}

impl std::fmt::Debug for Jet2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Jet2")
            .field("value", &self.value)
            .field("grad", &self.gradient())
            .field("hess", &&self.hess[..self.m * (self.m + 1) / 2])
            .finish()
    }
}

impl Jet2 {
    pub fn constant(value: f64, m: usize) -> Self {
        assert!(m <= MAX_PARAMS, "at most {MAX_PARAMS} parameters supported");
        Self { m, value, grad: [0.0; MAX_PARAMS], hess: [0.0; PACKED] }
    }

    /// Independent variable `t_slot = value`.
    pub fn seed(value: f64, slot: usize, m: usize) -> Self {
        assert!(slot < m);
        let mut j = Self::constant(value, m);
        j.grad[slot] = 1.0;
        j
    }

    pub fn from_parts(value: f64, grad: &[f64], hess: impl Fn(usize, usize) -> f64) -> Self {
        let m = grad.len();
        let mut j = Self::constant(value, m);
        j.grad[..m].copy_from_slice(grad);
        for b in 0..m {
            for a in 0..=b {
                j.hess[packed_index(a, b)] = hess(a, b);
            }
        }
        j
    }

    pub fn params(&self) -> usize {
        self.m
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn gradient(&self) -> &[f64] {
        &self.grad[..self.m]
    }

    pub fn d(&self, i: usize) -> f64 {
        self.grad[i]
    }

    pub fn dd(&self, i: usize, j: usize) -> f64 {
        self.hess[packed_index(i, j)]
    }

    pub fn hessian(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.m, self.m, |i, j| self.dd(i, j))
    }

    /// Largest absolute entry over gradient and Hessian.
    pub fn derivative_size(&self) -> f64 {
        let p = self.m * (self.m + 1) / 2;
        self.gradient().iter().chain(&self.hess[..p]).fold(0.0, |acc, x| acc.max(x.abs()))
    }

    fn check_same(&self, o: &Self) {
        assert_eq!(self.m, o.m, "jets must share the parameter count");
    }

    /// `f(self)` given `f`, `f'` and `f''` at `self.value`.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let m = self.m;
        let mut out = Self::constant(f0, m);
        for i in 0..m {
            out.grad[i] = f1 * self.grad[i];
        }
        for b in 0..m {
            for a in 0..=b {
                let k = packed_index(a, b);
                out.hess[k] = f1 * self.hess[k] + f2 * self.grad[a] * self.grad[b];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.value *= s;
        out.grad.iter_mut().for_each(|x| *x *= s);
        out.hess.iter_mut().for_each(|x| *x *= s);
        out
    }

    pub fn add_const(&self, c: f64) -> Self {
        let mut out = *self;
        out.value += c;
        out
    }

    pub fn recip(&self) -> Result<Self> {
        self.recip_eps(crate::EPS_DIV)
    }

    pub fn recip_eps(&self, eps: f64) -> Result<Self> {
        let v = self.value;
        if v.abs() < eps {
            return Err(Error::SingularJet(format!("reciprocal of {v:e}")));
        }
        let r = 1.0 / v;
        Ok(self.chain(r, -r * r, 2.0 * r * r * r))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(*self * o.recip()?)
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.sqrt_eps(crate::EPS_DIV)
    }

    pub fn sqrt_eps(&self, eps: f64) -> Result<Self> {
        let v = self.value;
        if v < eps {
            return Err(Error::SingularJet(format!("square root of {v:e}")));
        }
        let s = v.sqrt();
        Ok(self.chain(s, 0.5 / s, -0.25 / (s * v)))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn powi(&self, k: i32) -> Self {
        let v = self.value;
        let kf = k as f64;
        self.chain(v.powi(k), kf * v.powi(k - 1), kf * (kf - 1.0) * v.powi(k - 2))
    }
}

impl ops::Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        self.check_same(&o);
        let mut out = self;
        out.value += o.value;
        for (a, b) in out.grad.iter_mut().zip(&o.grad) {
            *a += b;
        }
        for (a, b) in out.hess.iter_mut().zip(&o.hess) {
            *a += b;
        }
        out
    }
}

impl ops::Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + (-o)
    }
}

impl ops::Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl ops::Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        self.check_same(&o);
        let m = self.m;
        let mut out = Jet2::constant(self.value * o.value, m);
        for i in 0..m {
            out.grad[i] = self.value * o.grad[i] + o.value * self.grad[i];
        }
        for b in 0..m {
            for a in 0..=b {
                let k = packed_index(a, b);
                out.hess[k] = self.value * o.hess[k]
                    + o.value * self.hess[k]
                    + self.grad[a] * o.grad[b]
                    + self.grad[b] * o.grad[a];
            }
        }
        out
    }
}

impl ops::Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, s: f64) -> Jet2 {
        self.scale(s)
    }
}

impl std::iter::Sum for Jet2 {
    fn sum<I: Iterator<Item = Jet2>>(mut iter: I) -> Jet2 {
        let first = iter.next().expect("sum of an empty jet sequence");
        iter.fold(first, |acc, x| acc + x)
    }
}

/// Which real part of a holomorphic function to lift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Real,
    Imag,
}

/// Real or imaginary part of a holomorphic `F(u + iv)` as a jet in `m`
/// parameters, with `u` and `v` in the given slots. The Cauchy-Riemann
/// equations fix every derivative from `F'` and `F''`.
pub fn lift_complex(f: &ComplexJet, part: Part, slots: (usize, usize), m: usize) -> Jet2 {
    assert!(f.order() >= 2, "lift needs F' and F''");
    let (iu, iv) = slots;
    assert!(iu != iv && iu < m && iv < m, "invalid (u, v) slots");
    let (f0, f1, f2) = (f.deriv(0), f.deriv(1), f.deriv(2));
    let mut j = Jet2::constant(0.0, m);
    match part {
        Part::Real => {
            j.value = f0.re;
            j.grad[iu] = f1.re;
            j.grad[iv] = -f1.im;
            j.hess[packed_index(iu, iu)] = f2.re;
            j.hess[packed_index(iu, iv)] = -f2.im;
            j.hess[packed_index(iv, iv)] = -f2.re;
        }
        Part::Imag => {
            j.value = f0.im;
            j.grad[iu] = f1.im;
            j.grad[iv] = f1.re;
            j.hess[packed_index(iu, iu)] = f2.im;
            j.hess[packed_index(iu, iv)] = f2.re;
            j.hess[packed_index(iv, iv)] = -f2.im;
        }
    }
    j
}

/// Inner product signature of the ambient space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signature {
    Euclidean,
    /// `(+, ..., +, -)`: the last coordinate is timelike.
    Lorentz,
}

impl Signature {
    /// Sign of coordinate `k` out of `n` in the inner product.
    pub fn sign(self, k: usize, n: usize) -> f64 {
        match self {
            Signature::Lorentz if k + 1 == n => -1.0,
            _ => 1.0,
        }
    }

    pub fn dot(self, a: &[f64], b: &[f64]) -> f64 {
        let n = a.len();
        a.iter().zip(b).enumerate().map(|(k, (x, y))| self.sign(k, n) * x * y).sum()
    }
}

/// A vector of jets sharing one parameter count.
#[derive(Debug, Clone)]
pub struct VecJet(Vec<Jet2>);

impl VecJet {
    pub fn new(components: Vec<Jet2>) -> Self {
        assert!(!components.is_empty(), "empty vector jet");
        let m = components[0].m;
        assert!(components.iter().all(|c| c.m == m), "components must share the parameter count");
        VecJet(components)
    }

    pub fn constant(v: &[f64], m: usize) -> Self {
        Self::new(v.iter().map(|&x| Jet2::constant(x, m)).collect())
    }

    pub fn zeros(dim: usize, m: usize) -> Self {
        Self::new(vec![Jet2::constant(0.0, m); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn params(&self) -> usize {
        self.0[0].m
    }

    pub fn components(&self) -> &[Jet2] {
        &self.0
    }

    pub fn get(&self, k: usize) -> &Jet2 {
        &self.0[k]
    }

    pub fn value(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.value).collect()
    }

    /// Ambient vector `d/dt_i`.
    pub fn partial(&self, i: usize) -> Vec<f64> {
        self.0.iter().map(|c| c.d(i)).collect()
    }

    /// Ambient vector `d^2/dt_i dt_j`.
    pub fn second_partial(&self, i: usize, j: usize) -> Vec<f64> {
        self.0.iter().map(|c| c.dd(i, j)).collect()
    }

    fn check(&self, o: &VecJet) {
        assert_eq!(self.dim(), o.dim(), "vector jets must share dimension");
    }

    pub fn dot(&self, o: &VecJet) -> Jet2 {
        self.dot_with(o, Signature::Euclidean)
    }

    pub fn dot_lorentz(&self, o: &VecJet) -> Jet2 {
        self.dot_with(o, Signature::Lorentz)
    }

    pub fn dot_with(&self, o: &VecJet, sig: Signature) -> Jet2 {
        self.check(o);
        let n = self.dim();
        self.0.iter().zip(&o.0).enumerate().map(|(k, (a, b))| (*a * *b).scale(sig.sign(k, n))).sum()
    }

    /// Euclidean norm.
    pub fn norm(&self) -> Result<Jet2> {
        let q = self.dot(self);
        if q.value <= crate::EPS_DIV {
            return Err(Error::SingularJet(format!("norm of a vector with squared length {:e}", q.value)));
        }
        q.sqrt_eps(0.0)
    }

    pub fn normalize(&self) -> Result<VecJet> {
        let inv = self.norm()?.recip()?;
        Ok(self.scale(&inv))
    }

    pub fn scale(&self, s: &Jet2) -> VecJet {
        VecJet(self.0.iter().map(|c| *c * *s).collect())
    }

    pub fn scale_f64(&self, s: f64) -> VecJet {
        VecJet(self.0.iter().map(|c| c.scale(s)).collect())
    }

    pub fn add(&self, o: &VecJet) -> VecJet {
        self.check(o);
        VecJet(self.0.iter().zip(&o.0).map(|(a, b)| *a + *b).collect())
    }

    pub fn sub(&self, o: &VecJet) -> VecJet {
        self.check(o);
        VecJet(self.0.iter().zip(&o.0).map(|(a, b)| *a - *b).collect())
    }

    /// `sum_k c_k v_k`.
    pub fn lincomb(terms: &[(Jet2, &VecJet)]) -> VecJet {
        let (c0, v0) = &terms[0];
        terms[1..].iter().fold(v0.scale(c0), |acc, (c, v)| acc.add(&v.scale(c)))
    }

    pub fn push(&mut self, c: Jet2) {
        assert_eq!(c.m, self.params());
        self.0.push(c);
    }

    /// Drops the last coordinate.
    pub fn truncate_last(&self) -> VecJet {
        VecJet::new(self.0[..self.dim() - 1].to_vec())
    }
}
