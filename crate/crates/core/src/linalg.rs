//! Small dense-free linear algebra kernels: tridiagonal and banded solves,
//! and Sturm-sequence bisection for symmetric tridiagonal eigenproblems.

use crate::error::{Error, Result};

/// Solves a tridiagonal system with the Thomas algorithm.
///
/// `lower[i]` couples row `i + 1` to column `i`, `upper[i]` couples row `i`
/// to column `i + 1`.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if rhs.len() != n || lower.len() + 1 != n.max(1) || upper.len() + 1 != n.max(1) {
        return Err(Error::Solver(format!(
            "tridiagonal shape mismatch: n = {n}, lower = {}, upper = {}, rhs = {}",
            lower.len(),
            upper.len(),
            rhs.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::Solver(format!("zero pivot at row 0 (diag = {pivot})")));
    }
    if n > 1 {
        c[0] = upper[0] / pivot;
    }
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::Solver(format!("zero pivot at row {i} (diag = {})", diag[i])));
        }
        if i + 1 < n {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Square banded matrix with equal lower and upper half-bandwidth, stored by
/// diagonals. Factorised without pivoting, so it is meant for diagonally
/// dominant systems.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    half: usize,
    // row-major: band[i * (2 * half + 1) + (j + half - i)]
    band: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, half: usize) -> Self {
        Self { n, half, band: vec![0.0; n * (2 * half + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn index(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || i.abs_diff(j) > self.half {
            return None;
        }
        Some(i * (2 * self.half + 1) + (j + self.half - i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.index(i, j).map_or(0.0, |k| self.band[k])
    }

    /// Adds `value` to entry `(i, j)`. Panics if the entry lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let k = self.index(i, j).expect("entry outside band");
        self.band[k] += value;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.half);
                let hi = (i + self.half).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Solves `self * x = rhs` by banded Gaussian elimination.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::Solver("banded rhs length mismatch".into()));
        }
        let mut a = self.clone();
        let mut x = rhs.to_vec();
        let n = self.n;
        let p = self.half;
        for k in 0..n {
            let pivot = a.get(k, k);
            if pivot.abs() < 1e-300 || !pivot.is_finite() {
                return Err(Error::Solver(format!("banded solve: zero pivot at row {k}")));
            }
            for i in (k + 1)..=(k + p).min(n - 1) {
                let factor = a.get(i, k) / pivot;
                if factor == 0.0 {
                    continue;
                }
                for j in k..=(k + p).min(n - 1) {
                    let v = a.get(k, j);
                    if v != 0.0 {
                        a.add(i, j, -factor * v);
                    }
                }
                x[i] -= factor * x[k];
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in (k + 1)..=(k + p).min(n - 1) {
                s -= a.get(k, j) * x[j];
            }
            x[k] = s / a.get(k, k);
        }
        Ok(x)
    }
}

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::Solver(format!("symmetric tridiagonal shape: diag = {}, off = {}", diag.len(), off.len())));
        }
        if diag.iter().chain(off.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("non-finite matrix entry".into()));
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `x` (Sturm count from the LDLᵀ pivots).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            let denom = if q == 0.0 { f64::EPSILON * (1.0 + x.abs()) } else { q };
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based), by bisection to relative
    /// tolerance `rel_tol`.
    pub fn eigenvalue(&self, k: usize, rel_tol: f64) -> Result<f64> {
        if k >= self.dim() {
            return Err(Error::Solver(format!("eigenvalue index {k} out of range {}", self.dim())));
        }
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= rel_tol * mid.abs() {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// The `count` smallest eigenvalues in increasing order.
    pub fn lowest_eigenvalues(&self, count: usize, rel_tol: f64) -> Result<Vec<f64>> {
        (0..count.min(self.dim())).map(|k| self.eigenvalue(k, rel_tol)).collect()
    }

    /// Solves `(self - shift) x = rhs`.
    pub fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let diag: Vec<f64> = self.diag.iter().map(|d| d - shift).collect();
        solve_tridiagonal(&self.off, &diag, &self.off, rhs)
    }

    /// Unit eigenvector for a (converged) eigenvalue, by inverse iteration.
    pub fn eigenvector(&self, lambda: f64) -> Result<Vec<f64>> {
        let n = self.dim();
        let shift = lambda + 1e-9 * lambda.abs().max(1e-12);
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..4 {
            let y = self.solve_shifted(shift, &x)?;
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return Err(Error::Solver("inverse iteration diverged".into()));
            }
            x = y.into_iter().map(|v| v / norm).collect();
        }
        Ok(x)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_direct_multiplication() {
        let lower = vec![-1.0, -2.0, 0.5];
        let diag = vec![4.0, 5.0, 6.0, 3.0];
        let upper = vec![1.0, -1.0, 0.25];
        let x_true = vec![1.0, -2.0, 3.0, 0.5];
        let rhs: Vec<f64> = (0..4)
            .map(|i| {
                let mut s = diag[i] * x_true[i];
                if i > 0 {
                    s += lower[i - 1] * x_true[i - 1];
                }
                if i < 3 {
                    s += upper[i] * x_true[i + 1];
                }
                s
            })
            .collect();
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn thomas_reports_zero_pivot() {
        let err = solve_tridiagonal(&[1.0], &[0.0, 1.0], &[1.0], &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Solver(_)));
    }

    #[test]
    fn banded_solve_roundtrip() {
        let n = 9;
        let mut a = BandedMatrix::zeros(n, 2);
        for i in 0..n {
            a.add(i, i, 6.0 + i as f64 * 0.1);
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
                a.add(i + 1, i, -0.5);
            }
            if i + 2 < n {
                a.add(i, i + 2, -1.5);
                a.add(i + 2, i, -0.75);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let rhs = a.mul_vec(&x_true);
        let x = a.solve(&rhs).unwrap();
        for (p, q) in x.iter().zip(&x_true) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn sturm_bisection_matches_discrete_laplacian() {
        // Dirichlet second difference: eigenvalues 2 - 2 cos(k pi / (n + 1)).
        let n = 50;
        let m = SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap();
        for k in 0..5 {
            let exact = 2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            let got = m.eigenvalue(k, 1e-14).unwrap();
            assert!((got - exact).abs() < 1e-12, "k = {k}: {got} vs {exact}");
        }
        let lambda = m.eigenvalue(0, 1e-14).unwrap();
        let v = m.eigenvector(lambda).unwrap();
        let mv = m.mul_vec(&v);
        let resid: f64 = mv.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        assert!(resid < 1e-9);
    }
}
