//! Dense complex matrix helpers and the operator wrappers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Tolerance used when a constructor has to decide whether its input is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Tolerance used when a constructor has to decide whether its input is unitary.
pub const UNITARY_TOL: f64 = 1e-10;

pub(crate) fn qubits_of_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::Dimension(format!("{dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for j in 0..m.nrows() {
        for k in j..m.ncols() {
            dev = dev.max((m[(j, k)] - m[(k, j)].conj()).norm());
        }
    }
    dev
}

/// Frobenius norm of U†U − I, an upper bound on the operator-norm deviation.
pub fn unitarity_deviation(m: &CMatrix) -> f64 {
    let mut p = m.adjoint() * m;
    for j in 0..p.nrows() {
        p[(j, j)] -= ONE;
    }
    p.norm()
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// exp(−i·H·t) for Hermitian H via its eigendecomposition.
pub fn exp_minus_i(h: &CMatrix, t: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -l * t));
    let mut scaled = v.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[k];
    }
    scaled * v.adjoint()
}

/// Nearest unitary in Frobenius norm (polar factor).
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the R-diagonal phases removed.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let z = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) / std::f64::consts::SQRT_2
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..dim {
        let d = r[(k, k)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        let mut col = q.column_mut(k);
        col *= ph;
    }
    q
}

/// Random Hermitian matrix with i.i.d. Gaussian entries (GUE-like scaling).
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let z = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    (&z + z.adjoint()).scale(0.5)
}

pub fn determinant(m: &CMatrix) -> Complex64 {
    m.clone().lu().determinant()
}

/// Multiplies `m` by a scalar phase so that det = 1, using the principal branch of the root.
pub fn normalize_determinant(m: &CMatrix) -> CMatrix {
    let det = determinant(m);
    let dim = m.nrows() as f64;
    let phase = Complex64::from_polar(1.0, -det.arg() / dim);
    m * phase
}

/// Dense Hermitian operator on n qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOp {
    n: usize,
    mat: CMatrix,
}

impl HermitianOp {
    /// Wraps a matrix, rejecting it if it deviates from Hermitian by more than 1e-9 per entry.
    /// The stored matrix is exactly symmetrized.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Dimension("matrix is not square".into()));
        }
        let n = qubits_of_dim(mat.nrows())?;
        let dev = hermitian_deviation(&mat);
        if !(dev <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian(dev));
        }
        let mat = (&mat + mat.adjoint()).scale(0.5);
        Ok(Self { n, mat })
    }

    pub fn zeros(n: usize) -> Self {
        let d = 1 << n;
        Self { n, mat: CMatrix::zeros(d, d) }
    }

    pub(crate) fn from_raw(n: usize, mat: CMatrix) -> Self {
        Self { n, mat }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Operator with the identity component removed.
    pub fn traceless(&self) -> Self {
        let d = self.mat.nrows();
        let shift = self.trace() / d as f64;
        let mut mat = self.mat.clone();
        for j in 0..d {
            mat[(j, j)] -= Complex64::new(shift, 0.0);
        }
        Self { n: self.n, mat }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { n: self.n, mat: self.mat.scale(s) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { n: self.n, mat: &self.mat + &other.mat }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { n: self.n, mat: &self.mat - &other.mat }
    }

    /// i[self, other], which is again Hermitian.
    pub fn icomm(&self, other: &Self) -> Self {
        Self { n: self.n, mat: commutator(&self.mat, &other.mat) * I }
    }

    pub fn op_norm(&self) -> f64 {
        op_norm(&self.mat)
    }

    /// exp(−i·self·t).
    pub fn evolve(&self, t: f64) -> UnitaryOp {
        UnitaryOp { n: self.n, mat: exp_minus_i(&self.mat, t) }
    }
}

/// Dense unitary operator on n qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOp {
    n: usize,
    mat: CMatrix,
}

impl UnitaryOp {
    /// Wraps a matrix, rejecting it if ‖U†U − I‖ exceeds 1e-10.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Dimension("matrix is not square".into()));
        }
        let n = qubits_of_dim(mat.nrows())?;
        let dev = unitarity_deviation(&mat);
        if !(dev <= UNITARY_TOL) {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { n, mat })
    }

    pub(crate) fn from_raw(n: usize, mat: CMatrix) -> Self {
        Self { n, mat }
    }

    pub fn identity(n: usize) -> Self {
        Self { n, mat: identity(1 << n) }
    }

    pub fn haar<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self { n, mat: haar_unitary(1 << n, rng) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self { n: self.n, mat: self.mat.adjoint() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { n: self.n, mat: &self.mat * &other.mat }
    }

    pub fn determinant(&self) -> Complex64 {
        determinant(&self.mat)
    }

    /// Same operator rescaled by a global phase to unit determinant.
    pub fn special(&self) -> Self {
        Self { n: self.n, mat: normalize_determinant(&self.mat) }
    }

    /// Operator-norm distance, phase-sensitive.
    pub fn distance(&self, other: &Self) -> f64 {
        op_norm(&(&self.mat - &other.mat))
    }

    /// The n-qubit quantum Fourier transform, |x⟩ ↦ 2^{−n/2} Σ_y e^{2πixy/2ⁿ}|y⟩.
    pub fn qft(n: usize) -> Self {
        let d = 1usize << n;
        let norm = 1.0 / (d as f64).sqrt();
        let mat = CMatrix::from_fn(d, d, |y, x| {
            let angle = 2.0 * std::f64::consts::PI * ((x * y) % d) as f64 / d as f64;
            Complex64::from_polar(norm, angle)
        });
        Self { n, mat }
    }
}

/// Serialized complex matrix: row-major list of [re, im] pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrixData {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&CMatrix> for ComplexMatrixData {
    fn from(m: &CMatrix) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                entries.push([m[(r, c)].re, m[(r, c)].im]);
            }
        }
        Self { dim: m.nrows(), entries }
    }
}
