//! Small dense linear algebra: symmetric eigenproblems, pivoted
//! Gram-Schmidt and 2x2 solves. Sized for matrices up to about 11x11.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::{Error, Result};

/// Eigen-decomposition of a symmetric matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.vectors * DMatrix::from_diagonal(&self.values) * self.vectors.transpose()
    }
}

/// Cyclic Jacobi eigensolver.
pub fn sym_eigen(a: &DMatrix<f64>) -> Result<SymEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidInput(format!("eigenproblem needs a square matrix, got {}x{}", n, a.ncols())));
    }
    let scale = a.norm();
    let asym = (a - a.transpose()).norm();
    if asym > 1e-9 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let mut m = (a + a.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-16 * scale || off < f64::MIN_POSITIVE {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| m[(i, i)]));
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

/// Result of a pivoted Gram-Schmidt pass.
#[derive(Debug, Clone)]
pub struct Orthonormalized {
    /// Protected vectors first, then the accepted candidates.
    pub basis: Vec<DVector<f64>>,
    /// Indices into the candidate list, in acceptance order.
    pub pivots: Vec<usize>,
}

impl Orthonormalized {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }
}

/// Modified Gram-Schmidt. `protected` vectors are kept first and in order;
/// the remaining `candidates` are taken greedily by largest residual norm
/// and dropped once that residual falls below `eps_rank` times the largest
/// input norm.
pub fn gram_schmidt_pivoted(
    candidates: &[DVector<f64>],
    protected: &[DVector<f64>],
    eps_rank: f64,
) -> Result<Orthonormalized> {
    let max_norm = protected.iter().chain(candidates).map(|v| v.norm()).fold(0.0, f64::max);
    let cutoff = eps_rank * max_norm;

    let mut basis: Vec<DVector<f64>> = Vec::new();
    let project_out = |basis: &[DVector<f64>], v: &DVector<f64>| {
        let mut r = v.clone();
        for b in basis {
            let c = b.dot(&r);
            r.axpy(-c, b, 1.0);
        }
        r
    };

    for p in protected {
        let r = project_out(&basis, p);
        let norm = r.norm();
        if norm <= cutoff || norm == 0.0 {
            return Err(Error::DependentProtected);
        }
        basis.push(r / norm);
    }

    let mut residuals: Vec<Option<DVector<f64>>> = candidates.iter().map(|c| Some(project_out(&basis, c))).collect();
    let mut pivots = Vec::new();
    loop {
        let best = residuals
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().map(|r| (i, r.norm())))
            // Ties go to the earliest candidate.
            .fold(None, |acc: Option<(usize, f64)>, c| match acc {
                Some(a) if a.1 >= c.1 => Some(a),
                _ => Some(c),
            });
        let Some((i, norm)) = best else { break };
        if norm <= cutoff || norm == 0.0 {
            break;
        }
        // Re-orthogonalize once against the whole basis for stability.
        let r = project_out(&basis, &residuals[i].take().expect("live residual"));
        let q = &r / r.norm();
        for slot in residuals.iter_mut().flatten() {
            let c = q.dot(slot);
            slot.axpy(-c, &q, 1.0);
        }
        basis.push(q);
        pivots.push(i);
    }
    Ok(Orthonormalized { basis, pivots })
}

/// Orthonormal set and its size.
pub fn gram_schmidt(vectors: &[DVector<f64>], protected: &[DVector<f64>]) -> Result<(Vec<DVector<f64>>, usize)> {
    let o = gram_schmidt_pivoted(vectors, protected, crate::EPS_RANK)?;
    let rank = o.rank();
    Ok((o.basis, rank))
}

/// Cramer solve of a 2x2 symmetric positive definite system.
pub fn solve2(g: &Matrix2<f64>, rhs: &Vector2<f64>) -> Result<Vector2<f64>> {
    let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
    if det <= crate::EPS_RANK * crate::EPS_RANK {
        return Err(Error::DegenerateMetric(det));
    }
    Ok(Vector2::new((rhs[0] * g[(1, 1)] - g[(0, 1)] * rhs[1]) / det, (g[(0, 0)] * rhs[1] - g[(1, 0)] * rhs[0]) / det))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn smallest_eig(g: &DMatrix<f64>) -> Result<f64> {
    if g.nrows() == 2 && g.ncols() == 2 {
        let (a, b, d) = (g[(0, 0)], 0.5 * (g[(0, 1)] + g[(1, 0)]), g[(1, 1)]);
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        return Ok(mean - rad);
    }
    let e = sym_eigen(g)?;
    Ok(e.values[e.values.len() - 1])
}

/// Inverse symmetric square root of a symmetric positive definite matrix.
pub fn inv_sqrt_spd(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = sym_eigen(g)?;
    let n = g.nrows();
    let smallest = e.values[n - 1];
    if smallest <= 0.0 {
        return Err(Error::DegenerateMetric(smallest));
    }
    let d = DMatrix::from_diagonal(&e.values.map(|x| 1.0 / x.sqrt()));
    Ok(&e.vectors * d * e.vectors.transpose())
}

/// Standard basis vector `e_k` of length `n`.
pub fn axis(k: usize, n: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[k] = 1.0;
    v
}
