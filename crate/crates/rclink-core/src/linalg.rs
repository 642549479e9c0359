//! Dense complex matrices sized for per-subcarrier MIMO work (2x2 .. 8x8).
//!
//! Row-major storage. Solvers are LU with partial pivoting; log-determinants
//! of Hermitian positive-definite matrices go through Cholesky; eigenvalues
//! of Hermitian matrices through cyclic Jacobi. All routines are
//! deterministic: no randomized pivoting, fixed sweep order.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Condition-number limit above which a channel matrix is treated as singular.
pub const SINGULAR_COND_LIMIT: f64 = 1e12;

/// Small dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from a row-major slice. Panics if the length disagrees.
    pub fn from_row_major(rows: usize, cols: usize, data: &[Complex64]) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        CMat {
            rows,
            cols,
            data: data.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn mul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        out
    }

    /// `A† A` (cols x cols, Hermitian).
    pub fn gram(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.cols);
        for i in 0..self.cols {
            for j in 0..self.cols {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..self.rows {
                    acc += self[(r, i)].conj() * self[(r, j)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// `A A†` (rows x rows, Hermitian).
    pub fn outer_gram(&self) -> CMat {
        let mut out = CMat::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..self.rows {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..self.cols {
                    acc += self[(i, c)] * self[(j, c)].conj();
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let mut y = vec![Complex64::new(0.0, 0.0); self.rows];
        for r in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..self.cols {
                acc += self[(r, c)] * x[c];
            }
            y[r] = acc;
        }
        y
    }

    /// `A† x` without forming the transpose.
    pub fn hermitian_mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.rows, "matvec dimension mismatch");
        let mut y = vec![Complex64::new(0.0, 0.0); self.cols];
        for c in 0..self.cols {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..self.rows {
                acc += self[(r, c)].conj() * x[r];
            }
            y[c] = acc;
        }
        y
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    pub fn add(&self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
        out
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, rhs: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max-norm deviation from unitarity, `max |A†A - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        self.gram().max_abs_diff(&CMat::identity(self.cols))
    }

    /// Solve `A x = b` by LU with partial pivoting. `A` must be square.
    pub fn lu_solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let f = LuFactors::new(self)?;
        Ok(f.solve(b))
    }

    /// `log2 det(A)` for Hermitian positive-definite `A`, via Cholesky.
    pub fn cholesky_log2_det(&self) -> Result<f64> {
        assert_eq!(self.rows, self.cols, "cholesky needs a square matrix");
        let n = self.rows;
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        let mut log2_det = 0.0;
        for j in 0..n {
            let mut d = self[(j, j)].re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if !(d > 0.0) {
                return Err(Error::Numerical(format!(
                    "matrix not positive definite at pivot {j}: {d:.3e}"
                )));
            }
            let dj = d.sqrt();
            l[j * n + j] = Complex64::new(dj, 0.0);
            log2_det += d.log2();
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / dj;
            }
        }
        Ok(log2_det)
    }

    /// Eigenvalues of a Hermitian matrix by cyclic Jacobi, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        assert_eq!(self.rows, self.cols, "eigenvalues need a square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let scale = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return vec![0.0; n];
        }
        for _sweep in 0..64 {
            let mut off = 0.0_f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(a[(p, q)].norm());
                }
            }
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq.norm() <= 1e-30 * scale {
                        continue;
                    }
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let phase = apq / apq.norm();
                    let theta = 0.5 * (2.0 * apq.norm()).atan2(app - aqq);
                    let c = theta.cos();
                    let s_mag = theta.sin();
                    let s = phase * s_mag;
                    // A <- J† A J with J = [[c, s], [-s̄, c]] on rows/cols (p, q)
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * c + akq * s.conj();
                        a[(k, q)] = -akp * s + akq * c;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = apk * c + aqk * s;
                        a[(q, k)] = -apk * s.conj() + aqk * c;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        eig
    }

    /// Condition number (ratio of extreme eigenvalue magnitudes) of a
    /// Hermitian positive-semidefinite matrix. Infinite when rank-deficient.
    pub fn hermitian_condition(&self) -> f64 {
        let eig = self.hermitian_eigenvalues();
        let max = eig.iter().cloned().fold(0.0, f64::max);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            return f64::INFINITY;
        }
        max / min
    }

    /// `exp(i A)` for Hermitian `A`: unitary to machine precision.
    /// Scaling-and-squaring with a Taylor core.
    pub fn exp_j_hermitian(&self) -> CMat {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let norm1 = (0..n)
            .map(|c| (0..n).map(|r| self[(r, c)].norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let squarings: u32 = if norm1 > 0.25 {
            (norm1 / 0.25).log2().ceil() as u32
        } else {
            0
        };
        let scale = Complex64::new(0.0, 1.0 / 2f64.powi(squarings as i32));
        let b = self.scale(scale);
        // Taylor series of exp(B) with ||B|| <= 0.25: 16 terms reach 1e-18.
        let mut result = CMat::identity(n);
        let mut term = CMat::identity(n);
        for k in 1..=16 {
            term = term.mul(&b).scale(Complex64::new(1.0 / k as f64, 0.0));
            result = result.add(&term);
        }
        for _ in 0..squarings {
            result = result.mul(&result);
        }
        result
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// LU factorization with partial pivoting, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<Complex64>,
    piv: Vec<usize>,
}

impl LuFactors {
    pub fn new(a: &CMat) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_mag = lu[col * n + col].norm();
            for r in (col + 1)..n {
                let mag = lu[r * n + col].norm();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = r;
                }
            }
            if pivot_mag == 0.0 {
                return Err(Error::Numerical(format!(
                    "exactly singular matrix at column {col}"
                )));
            }
            if pivot_row != col {
                for c in 0..n {
                    lu.swap(col * n + c, pivot_row * n + c);
                }
                piv.swap(col, pivot_row);
            }
            let inv_pivot = Complex64::new(1.0, 0.0) / lu[col * n + col];
            for r in (col + 1)..n {
                let factor = lu[r * n + col] * inv_pivot;
                lu[r * n + col] = factor;
                for c in (col + 1)..n {
                    let sub = factor * lu[col * n + c];
                    lu[r * n + c] -= sub;
                }
            }
        }
        Ok(LuFactors { n, lu, piv })
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(b.len(), self.n, "rhs length mismatch");
        let n = self.n;
        let mut x: Vec<Complex64> = self.piv.iter().map(|&p| b[p]).collect();
        for r in 1..n {
            for c in 0..r {
                let sub = self.lu[r * n + c] * x[c];
                x[r] -= sub;
            }
        }
        for r in (0..n).rev() {
            for c in (r + 1)..n {
                let sub = self.lu[r * n + c] * x[c];
                x[r] -= sub;
            }
            x[r] /= self.lu[r * n + r];
        }
        x
    }
}
