//! Dense complex linear algebra used by the solver: Hermitian eigendecomposition,
//! singular values, the phase-estimation unitary `exp(2πi A)` and a classical
//! direct solver that serves as the reference answer.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::problem::LinearSystem;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Absolute tolerance for treating a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Relative threshold below which the smallest singular value counts as zero.
pub const SINGULAR_RTOL: f64 = 1e-13;

const MAX_JACOBI_SWEEPS: usize = 100;

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(invalid(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C1;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major real entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(invalid("ragged rows"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_real(n_rows, n_cols, &flat)
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Row-major real parts.
    pub fn real_parts(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.re).collect())
            .collect()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.data.iter().all(|z| z.im.abs() <= tol)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(invalid(format!(
                "vector of length {} does not match {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(invalid("shape mismatch"));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|i| (i..self.cols).all(|j| (self[(i, j)] - self[(j, i)].conj()).norm() <= tol))
    }

    /// Returns `(A + A†)/2`, removing round-off asymmetry.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// Parses a plain-text CSV of real numbers, one row per line.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::from_real_rows(&parse_real_csv(text)?)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for row in self.real_parts() {
            let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Parses comma separated real values; blank lines and `#` comments are skipped.
pub fn parse_real_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                tok.parse::<f64>().map_err(|_| {
                    Error::Parse(format!("line {}: `{tok}` is not a real number", lineno + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a vector stored either as one value per line or as a single CSV row.
pub fn parse_real_vector_csv(text: &str) -> Result<Vec<f64>> {
    let rows = parse_real_csv(text)?;
    if rows.len() > 1 && rows.iter().any(|r| r.len() != 1) {
        return Err(Error::Parse("vector must be a single row or a single column".into()));
    }
    Ok(rows.into_iter().flatten().collect())
}

/// ⟨u|v⟩, conjugating the left argument.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn real_to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Multiplies `v` by the phase that makes its largest-magnitude entry real and
/// positive. The first entry wins among equal magnitudes.
pub fn fix_phase(v: &mut [Complex64]) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag * (1.0 + 1e-12) {
            best = i;
            best_mag = mag;
        }
    }
    if best_mag <= 0.0 {
        return;
    }
    let phase = v[best].conj() / best_mag;
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[best] = Complex64::new(v[best].re, 0.0);
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> Vec<Complex64> {
        self.eigenvectors.column(i)
    }

    /// Coefficients `⟨a_i|ψ⟩` of `psi` in the eigenbasis.
    pub fn coefficients(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        self.eigenvectors.adjoint().mul_vec(psi)
    }

    /// `Σ f(λ_i) |a_i⟩⟨a_i|`.
    pub fn apply_function(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let weights: Vec<Complex64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * weights[k] * v[(j, k)].conj()).sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_function(|l| Complex64::new(l, 0.0))
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Each eigenvector's largest-magnitude component is made real and positive.
/// Eigenpairs are ordered by ascending eigenvalue; exact ties fall back to a
/// lexicographic comparison of the phase-fixed eigenvector entries.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<SpectralDecomposition> {
    if !a.is_square() {
        return Err(invalid(format!("eigendecomposition needs a square matrix, got {}x{}", a.rows, a.cols)));
    }
    if !a.is_hermitian(HERMITIAN_TOL) {
        return Err(invalid("matrix is not Hermitian"));
    }
    let n = a.rows;
    let mut w = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = w.frobenius_norm();

    if scale > 0.0 {
        for _ in 0..MAX_JACOBI_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
                .map(|(p, q)| w[(p, q)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= f64::EPSILON * 1e-2 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    jacobi_rotate(&mut w, &mut v, p, q, scale);
                }
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|i| {
            let mut col = v.column(i);
            fix_phase(&mut col);
            (w[(i, i)].re, col)
        })
        .collect();
    pairs.sort_by(|(la, va), (lb, vb)| {
        la.total_cmp(lb).then_with(|| {
            va.iter()
                .zip(vb)
                .map(|(x, y)| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });

    let eigenvalues = pairs.iter().map(|(l, _)| *l).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| pairs[j].1[i]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Annihilates `w[p][q]` with the unitary `G = diag(1, e^{-iφ}) · R(θ)`.
fn jacobi_rotate(w: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, scale: f64) {
    let apq = w[(p, q)];
    let r = apq.norm();
    if r <= f64::MIN_POSITIVE.max(f64::EPSILON * 1e-3 * scale) {
        return;
    }
    let phase = apq / r;
    let app = w[(p, p)].re;
    let aqq = w[(q, q)].re;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let e_minus = phase.conj();

    let n = w.rows;
    for k in 0..n {
        let wkp = w[(k, p)];
        let wkq = w[(k, q)];
        w[(k, p)] = wkp * c - wkq * e_minus * s;
        w[(k, q)] = wkp * s + wkq * e_minus * c;
    }
    for k in 0..n {
        let wpk = w[(p, k)];
        let wqk = w[(q, k)];
        w[(p, k)] = wpk * c - wqk * phase * s;
        w[(q, k)] = wpk * s + wqk * phase * c;
    }
    w[(p, q)] = C0;
    w[(q, p)] = C0;
    w[(p, p)] = Complex64::new(w[(p, p)].re, 0.0);
    w[(q, q)] = Complex64::new(w[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * e_minus * s;
        v[(k, q)] = vkp * s + vkq * e_minus * c;
    }
}

/// Singular values in descending order (one-sided Jacobi).
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let (rows, cols) = (m.rows, m.cols);
    // columns stored contiguously
    let mut colv: Vec<Vec<Complex64>> = (0..cols).map(|j| m.column(j)).collect();
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = colv[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = colv[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma = inner(&colv[p], &colv[q]);
                let r = gamma.norm();
                if r <= f64::EPSILON * (alpha * beta).sqrt() || r == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / r;
                let e_minus = phase.conj();
                let theta = (beta - alpha) / (2.0 * r);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let (lo, hi) = colv.split_at_mut(q);
                let (cp, cq) = (&mut lo[p], &mut hi[0]);
                for k in 0..rows {
                    let xp = cp[k];
                    let xq = cq[k];
                    cp[k] = xp * c - xq * e_minus * s;
                    cq[k] = xp * s + xq * e_minus * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = colv.iter().map(|c| norm(c)).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// `κ = σ_max / σ_min`.
pub fn condition_number(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() || m.rows == 0 {
        return Err(invalid("condition number needs a non-empty square matrix"));
    }
    let sv = singular_values(m);
    let smax = sv[0];
    let smin = *sv.last().unwrap();
    if smax == 0.0 || smin < SINGULAR_RTOL * smax {
        return Err(Error::SingularMatrix(format!(
            "σ_min = {smin:e}, σ_max = {smax:e}"
        )));
    }
    Ok(smax / smin)
}

/// `exp(2πi·a)` for Hermitian `a`, evaluated through its spectral decomposition.
pub fn unitary_exp(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let sd = hermitian_eig(a)?;
    Ok(unitary_exp_from_spectrum(&sd, 1.0))
}

/// `exp(2πi·t·A)` given the spectrum of `A`.
pub fn unitary_exp_from_spectrum(sd: &SpectralDecomposition, t: f64) -> ComplexMatrix {
    sd.apply_function(|l| Complex64::from_polar(1.0, 2.0 * PI * t * l))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// General matrix exponential `exp(x)` by degree-13 Padé approximation with
/// scaling and squaring.
pub fn expm_pade(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !x.is_square() {
        return Err(invalid("matrix exponential needs a square matrix"));
    }
    let n = x.rows;
    let norm1 = x.norm_one();
    let squarings = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = x.scale_real(0.5f64.powi(squarings));
    let id = ComplexMatrix::identity(n);
    let a2 = a.matmul(&a)?;
    let a4 = a2.matmul(&a2)?;
    let a6 = a4.matmul(&a2)?;
    let b = &PADE13;
    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> Result<ComplexMatrix> {
        a6.scale_real(c6)
            .add(&a4.scale_real(c4))?
            .add(&a2.scale_real(c2))?
            .add(&id.scale_real(c0))
    };
    let u_inner = a6.matmul(&lin(b[13], b[11], b[9], 0.0)?)?.add(&lin(b[7], b[5], b[3], b[1])?)?;
    let u = a.matmul(&u_inner)?;
    let v = a6.matmul(&lin(b[12], b[10], b[8], 0.0)?)?.add(&lin(b[6], b[4], b[2], b[0])?)?;
    let mut r = lu_solve_complex(&v.sub(&u)?, &v.add(&u)?)?;
    for _ in 0..squarings {
        r = r.matmul(&r)?;
    }
    Ok(r)
}

/// `exp(2πi·a)` through the Padé path; agrees with [`unitary_exp`] for Hermitian input.
pub fn unitary_exp_pade(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_hermitian(HERMITIAN_TOL) {
        return Err(invalid("matrix is not Hermitian"));
    }
    expm_pade(&a.scale(Complex64::new(0.0, 2.0 * PI)))
}

/// Solves `A X = B` by LU with partial pivoting.
pub fn lu_solve_complex(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() || a.rows != b.rows {
        return Err(invalid("incompatible shapes for solve"));
    }
    let n = a.rows;
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = lu.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| lu[(i, k)].norm().total_cmp(&lu[(j, k)].norm()))
            .unwrap();
        if lu[(piv, k)].norm() <= SINGULAR_RTOL * scale {
            return Err(Error::SingularMatrix(format!("zero pivot in column {k}")));
        }
        if piv != k {
            for j in 0..n {
                lu.data.swap(k * n + j, piv * n + j);
            }
            for j in 0..x.cols {
                x.data.swap(k * x.cols + j, piv * x.cols + j);
            }
        }
        let d = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / d;
            if f == C0 {
                continue;
            }
            for j in k..n {
                let t = lu[(k, j)];
                lu[(i, j)] -= f * t;
            }
            for j in 0..x.cols {
                let t = x[(k, j)];
                x[(i, j)] -= f * t;
            }
        }
    }
    for k in (0..n).rev() {
        for j in 0..x.cols {
            let mut s = x[(k, j)];
            for c in k + 1..n {
                s -= lu[(k, c)] * x[(c, j)];
            }
            x[(k, j)] = s / lu[(k, k)];
        }
    }
    Ok(x)
}

/// Solves a real square system by Gaussian elimination with partial pivoting.
pub fn solve_real(m: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = m.len();
    if b.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(invalid("solve needs a square matrix and matching right-hand side"));
    }
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut x = b.to_vec();
    let scale = a.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        if a[piv][k].abs() <= SINGULAR_RTOL * scale {
            return Err(Error::SingularMatrix(format!("zero pivot in column {k}")));
        }
        a.swap(k, piv);
        x.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f == 0.0 {
                continue;
            }
            let (upper, lower) = a.split_at_mut(i);
            for (v, p) in lower[0][k..].iter_mut().zip(&upper[k][k..]) {
                *v -= f * p;
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (x[k] - s) / a[k][k];
    }
    Ok(x)
}

/// Reference solution of `M x = b` by direct elimination.
pub fn classical_solve(system: &LinearSystem) -> Result<Vec<f64>> {
    solve_real(&system.matrix().real_parts(), system.b())
}
