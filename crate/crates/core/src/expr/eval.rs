use num_complex::Complex64;

use super::{BinaryOp, Expr, UnaryOp};
use crate::{Error, Result};

/// Evaluation thresholds.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    /// Denominators and logarithm arguments with modulus below this are
    /// rejected.
    pub eps_div: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { eps_div: 1e-12 }
    }
}

/// Value and complex derivatives `F(z0), F'(z0), ..., F^(K)(z0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexJet {
    derivs: Vec<Complex64>,
}

impl ComplexJet {
    pub fn from_derivatives(derivs: Vec<Complex64>) -> Self {
        assert!(!derivs.is_empty(), "a jet carries at least its value");
        Self { derivs }
    }

    pub fn constant(c: Complex64, order: usize) -> Self {
        let mut derivs = vec![Complex64::new(0.0, 0.0); order + 1];
        derivs[0] = c;
        Self { derivs }
    }

    pub fn variable(z0: Complex64, order: usize) -> Self {
        let mut j = Self::constant(z0, order);
        if order >= 1 {
            j.derivs[1] = Complex64::new(1.0, 0.0);
        }
        j
    }

    pub fn order(&self) -> usize {
        self.derivs.len() - 1
    }

    pub fn value(&self) -> Complex64 {
        self.derivs[0]
    }

    /// `F^(k)(z0)`.
    pub fn deriv(&self, k: usize) -> Complex64 {
        self.derivs[k]
    }

    pub fn derivatives(&self) -> &[Complex64] {
        &self.derivs
    }

    /// Jet of `F'`, one order shorter.
    pub fn differentiate(&self) -> ComplexJet {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        Self { derivs: self.derivs[1..].to_vec() }
    }

    pub fn add(&self, other: &ComplexJet) -> ComplexJet {
        Series::from_jet(self).add(&Series::from_jet(other)).into_jet()
    }

    pub fn sub(&self, other: &ComplexJet) -> ComplexJet {
        Series::from_jet(self).sub(&Series::from_jet(other)).into_jet()
    }

    pub fn mul(&self, other: &ComplexJet) -> ComplexJet {
        Series::from_jet(self).mul(&Series::from_jet(other)).into_jet()
    }

    pub fn div(&self, other: &ComplexJet, eps_div: f64) -> Result<ComplexJet> {
        let b = Series::from_jet(other).recip(eps_div)?;
        Ok(Series::from_jet(self).mul(&b).into_jet())
    }

    pub fn scale(&self, c: Complex64) -> ComplexJet {
        Self { derivs: self.derivs.iter().map(|d| d * c).collect() }
    }
}

/// Truncated Taylor series `sum c_k (z - z0)^k`; the working form for
/// arithmetic. Converted to raw derivatives at the boundary.
#[derive(Debug, Clone)]
struct Series(Vec<Complex64>);

fn factorials(n: usize) -> impl Iterator<Item = f64> {
    (0..=n).scan(1.0, |acc, k| {
        if k > 0 {
            *acc *= k as f64;
        }
        Some(*acc)
    })
}

impl Series {
    fn from_jet(j: &ComplexJet) -> Self {
        Series(j.derivs.iter().zip(factorials(j.order())).map(|(d, f)| d / f).collect())
    }

    fn into_jet(self) -> ComplexJet {
        let k = self.0.len() - 1;
        ComplexJet { derivs: self.0.iter().zip(factorials(k)).map(|(c, f)| c * f).collect() }
    }

    fn zero(len: usize) -> Self {
        Series(vec![Complex64::new(0.0, 0.0); len])
    }

    fn len(&self) -> usize {
        self.0.len()
    }

    fn add(&self, o: &Self) -> Self {
        Series(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    fn sub(&self, o: &Self) -> Self {
        Series(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    fn neg(&self) -> Self {
        Series(self.0.iter().map(|a| -a).collect())
    }

    fn mul(&self, o: &Self) -> Self {
        let n = self.len();
        let mut out = Self::zero(n);
        for k in 0..n {
            out.0[k] = (0..=k).map(|j| self.0[j] * o.0[k - j]).sum();
        }
        out
    }

    fn recip(&self, eps: f64) -> Result<Self> {
        let a0 = self.0[0];
        if a0.norm() < eps {
            return Err(Error::SingularEvaluation(format!("division by a value of modulus {:e}", a0.norm())));
        }
        let n = self.len();
        let mut b = Self::zero(n);
        b.0[0] = 1.0 / a0;
        for k in 1..n {
            let s: Complex64 = (1..=k).map(|j| self.0[j] * b.0[k - j]).sum();
            b.0[k] = -s / a0;
        }
        Ok(b)
    }

    fn exp(&self) -> Self {
        let n = self.len();
        let mut e = Self::zero(n);
        e.0[0] = self.0[0].exp();
        for k in 1..n {
            let s: Complex64 = (1..=k).map(|j| self.0[j] * e.0[k - j] * j as f64).sum();
            e.0[k] = s / k as f64;
        }
        e
    }

    fn log(&self, eps: f64) -> Result<Self> {
        let a0 = self.0[0];
        if a0.norm() < eps {
            return Err(Error::SingularEvaluation(format!("logarithm of a value of modulus {:e}", a0.norm())));
        }
        let n = self.len();
        let mut l = Self::zero(n);
        l.0[0] = a0.ln();
        for k in 1..n {
            let s: Complex64 = (1..k).map(|j| l.0[j] * self.0[k - j] * j as f64).sum();
            l.0[k] = (self.0[k] - s / k as f64) / a0;
        }
        Ok(l)
    }

    /// Returns `(s, c)` with `s' = c a'` and `c' = sign * s a'`: `sign = -1`
    /// gives (sin, cos), `sign = +1` gives (sinh, cosh).
    fn sin_cos_like(&self, hyperbolic: bool) -> (Self, Self) {
        let n = self.len();
        let mut s = Self::zero(n);
        let mut c = Self::zero(n);
        let a0 = self.0[0];
        if hyperbolic {
            s.0[0] = a0.sinh();
            c.0[0] = a0.cosh();
        } else {
            s.0[0] = a0.sin();
            c.0[0] = a0.cos();
        }
        let sign = if hyperbolic { 1.0 } else { -1.0 };
        for k in 1..n {
            let mut ds = Complex64::new(0.0, 0.0);
            let mut dc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                let w = self.0[j] * j as f64;
                ds += w * c.0[k - j];
                dc += w * s.0[k - j];
            }
            s.0[k] = ds / k as f64;
            c.0[k] = sign * dc / k as f64;
        }
        (s, c)
    }

    fn powi(&self, k: i32, eps: f64) -> Result<Self> {
        let mut e = k.unsigned_abs();
        let mut base = self.clone();
        let mut acc = Self::zero(self.len());
        acc.0[0] = Complex64::new(1.0, 0.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        if k < 0 {
            acc.recip(eps)
        } else {
            Ok(acc)
        }
    }
}

fn eval_series(e: &Expr, z0: Complex64, len: usize, opts: &EvalOptions) -> Result<Series> {
    Ok(match e {
        Expr::Const(c) => {
            let mut s = Series::zero(len);
            s.0[0] = *c;
            s
        }
        Expr::Var => {
            let mut s = Series::zero(len);
            s.0[0] = z0;
            if len > 1 {
                s.0[1] = Complex64::new(1.0, 0.0);
            }
            s
        }
        Expr::Unary(op, a) => {
            let a = eval_series(a, z0, len, opts)?;
            match op {
                UnaryOp::Neg => a.neg(),
                UnaryOp::Exp => a.exp(),
                UnaryOp::Log => a.log(opts.eps_div)?,
                UnaryOp::Sin => a.sin_cos_like(false).0,
                UnaryOp::Cos => a.sin_cos_like(false).1,
                UnaryOp::Sinh => a.sin_cos_like(true).0,
                UnaryOp::Cosh => a.sin_cos_like(true).1,
            }
        }
        Expr::Binary(op, a, b) => {
            let a = eval_series(a, z0, len, opts)?;
            let b = eval_series(b, z0, len, opts)?;
            match op {
                BinaryOp::Add => a.add(&b),
                BinaryOp::Sub => a.sub(&b),
                BinaryOp::Mul => a.mul(&b),
                BinaryOp::Div => a.mul(&b.recip(opts.eps_div)?),
            }
        }
        Expr::Pow(a, k) => eval_series(a, z0, len, opts)?.powi(*k, opts.eps_div)?,
    })
}

/// Evaluates `e` and its first `order` complex derivatives at `z0`.
///
/// The logarithm uses the principal branch.
pub fn eval_jet(e: &Expr, z0: Complex64, order: usize, opts: &EvalOptions) -> Result<ComplexJet> {
    Ok(eval_series(e, z0, order + 1, opts)?.into_jet())
}
