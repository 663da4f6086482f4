//! Dense complex linear algebra for the boundary integral solver: LU with
//! partial pivoting, solves against the matrix and its adjoint from one
//! factorization, and the smallest singular pairs by inverse iteration.
//!
//! Matrices are row-major `Vec<Complex64>` of size n*n. The sizes involved
//! (a few hundred up to a couple thousand) need no blocking; the
//! elimination fans its independent row updates out across threads, which
//! keeps results bitwise reproducible because each row is updated serially.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular to working precision at pivot {0}")]
    Singular(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// LU factors of a square complex matrix, P A = L U.
pub struct ComplexLu {
    lu: Vec<Complex64>,
    piv: Vec<usize>,
    n: usize,
}

impl ComplexLu {
    /// Factor a row-major n x n matrix.
    pub fn factor(a: &[Complex64], n: usize) -> Result<ComplexLu, LinalgError> {
        if a.len() != n * n {
            return Err(LinalgError::Dimension {
                expected: n * n,
                got: a.len(),
            });
        }
        let mut lu = a.to_vec();
        let mut piv = Vec::with_capacity(n);
        for col in 0..n {
            // pivot: largest magnitude in this column at or below the diagonal
            let mut best = col;
            let mut best_mag = lu[col * n + col].norm_sqr();
            for row in col + 1..n {
                let m = lu[row * n + col].norm_sqr();
                if m > best_mag {
                    best_mag = m;
                    best = row;
                }
            }
            if best_mag == 0.0 {
                return Err(LinalgError::Singular(col));
            }
            piv.push(best);
            if best != col {
                for j in 0..n {
                    lu.swap(col * n + j, best * n + j);
                }
            }
            let inv_p = lu[col * n + col].inv();
            let (head, tail) = lu.split_at_mut((col + 1) * n);
            let pivot_row = &head[col * n + col + 1..col * n + n];
            let update = |row: &mut [Complex64]| {
                let m = row[col] * inv_p;
                row[col] = m;
                if m != Complex64::new(0.0, 0.0) {
                    for (d, s) in row[col + 1..].iter_mut().zip(pivot_row) {
                        *d -= m * s;
                    }
                }
            };
            if n - col > 64 {
                tail.par_chunks_mut(n).for_each(update);
            } else {
                tail.chunks_mut(n).for_each(update);
            }
        }
        Ok(ComplexLu { lu, piv, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve A x = b in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for (col, &p) in self.piv.iter().enumerate() {
            if p != col {
                b.swap(col, p);
            }
        }
        // L y = P b (unit lower)
        for i in 1..n {
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * b[j];
            }
            b[i] = acc;
        }
        // U x = y
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..n {
                acc -= self.lu[i * n + j] * b[j];
            }
            b[i] = acc / self.lu[i * n + i];
        }
    }

    /// Solve A^H x = b in place, reusing the same factors:
    /// A^H = U^H L^H P, so forward-substitute U^H, back-substitute L^H,
    /// then undo the pivoting.
    pub fn solve_adjoint_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        // U^H y = b (lower triangular with conjugated diagonal)
        for i in 0..n {
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.lu[j * n + i].conj() * b[j];
            }
            b[i] = acc / self.lu[i * n + i].conj();
        }
        // L^H z = y (unit upper)
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..n {
                acc -= self.lu[j * n + i].conj() * b[j];
            }
            b[i] = acc;
        }
        // x = P^T z: undo the swaps in reverse order
        for (col, &p) in self.piv.iter().enumerate().rev() {
            if p != col {
                b.swap(col, p);
            }
        }
    }
}

pub fn matvec(a: &[Complex64], n: usize, x: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.len(), n * n);
    assert_eq!(x.len(), n);
    (0..n)
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += a[i * n + j] * x[j];
            }
            acc
        })
        .collect()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let nm = norm(v);
    if nm > 0.0 {
        for z in v.iter_mut() {
            *z /= nm;
        }
    }
    nm
}

/// Remove the projection of `v` onto unit vector `u`.
fn deflate_against(v: &mut [Complex64], u: &[Complex64]) {
    let overlap: Complex64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
    for (z, w) in v.iter_mut().zip(u.iter()) {
        *z -= overlap * w;
    }
}

#[derive(Debug, Clone)]
pub struct SingularPair {
    pub sigma: f64,
    /// right singular vector, unit norm
    pub vector: Vec<Complex64>,
    pub iterations: usize,
}

/// Smallest singular value and right singular vector of A by inverse
/// iteration on (A^H A)^{-1}, optionally deflated against an already-found
/// singular vector to reach the second-smallest pair.
///
/// `rel_tol` controls the stop criterion on successive sigma estimates.
pub fn smallest_singular_pair(
    a: &[Complex64],
    n: usize,
    deflated: Option<&[Complex64]>,
    rel_tol: f64,
) -> Result<SingularPair, LinalgError> {
    let lu = ComplexLu::factor(a, n)?;
    Ok(smallest_singular_pair_with(&lu, a, deflated, rel_tol))
}

/// Same as [`smallest_singular_pair`] against an existing factorization of
/// the same matrix, saving the O(n^3) refactor when both the smallest and
/// the deflated second pair are wanted.
pub fn smallest_singular_pair_with(
    lu: &ComplexLu,
    a: &[Complex64],
    deflated: Option<&[Complex64]>,
    rel_tol: f64,
) -> SingularPair {
    let n = lu.n();
    // fixed deterministic start, generic with respect to symmetry sectors
    let mut v: Vec<Complex64> = (0..n)
        .map(|j| {
            let t = j as f64;
            Complex64::new((0.7 * t).cos() + 0.3, 0.2 * (1.3 * t).sin() + 0.1)
        })
        .collect();
    if let Some(u) = deflated {
        deflate_against(&mut v, u);
    }
    normalize(&mut v);
    let mut sigma_prev = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..40 {
        iterations = it + 1;
        let mut w = v.clone();
        lu.solve_adjoint_in_place(&mut w);
        lu.solve_in_place(&mut w);
        if let Some(u) = deflated {
            deflate_against(&mut w, u);
        }
        let growth = normalize(&mut w);
        v = w;
        // one step of (A^H A)^{-1} grows a converged vector by 1/sigma^2
        let sigma = 1.0 / growth.sqrt();
        let done = (sigma - sigma_prev).abs() <= rel_tol * sigma.max(f64::MIN_POSITIVE);
        sigma_prev = sigma;
        if done && it >= 2 {
            break;
        }
    }
    // measure sigma directly as |A v| for the converged vector
    let av = matvec(a, n, &v);
    SingularPair {
        sigma: norm(&av),
        vector: v,
        iterations,
    }
}
