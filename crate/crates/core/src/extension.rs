//! Canonical ancilla extensions and Boolean-function unitaries.
//!
//! Register layout is (x: n qubits)(y: m qubits)(z: 1 qubit), most significant first, so the
//! basis index is x·2^{m+1} + y·2 + z.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{haar_unitary, unitarity_deviation, CMatrix, UnitaryOp, ONE, UNITARY_TOL, ZERO};

/// Largest register handled densely (1024 × 1024).
pub const MAX_EXTENSION_QUBITS: usize = 10;
/// Fidelity deviation allowed when factoring V|x⟩|0⟩.
pub const EXTENSION_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionSpec {
    pub n: usize,
    pub m: usize,
    pub u: UnitaryOp,
    pub u_m: UnitaryOp,
}

fn check_size(total: usize) -> Result<()> {
    if total > MAX_EXTENSION_QUBITS {
        return Err(Error::TooLarge(format!("{total} qubits exceed the dense limit of {MAX_EXTENSION_QUBITS}")));
    }
    Ok(())
}

fn check_unitary(u: &CMatrix) -> Result<()> {
    let dev = unitarity_deviation(u);
    if !(dev <= UNITARY_TOL) {
        return Err(Error::NotUnitary(dev));
    }
    Ok(())
}

/// U_m: U on the x register when y = 0, z = 0; U† when y = 0, z = 1; identity elsewhere.
pub fn canonical_extension(u: &UnitaryOp, m: usize) -> Result<ExtensionSpec> {
    let n = u.n();
    check_size(n + m + 1)?;
    check_unitary(u.matrix())?;
    let dx = 1usize << n;
    let stride = 1usize << (m + 1);
    let mut out = CMatrix::identity(dx * stride, dx * stride);
    let ud = u.matrix().adjoint();
    for (z, block) in [(0usize, u.matrix()), (1, &ud)] {
        for r in 0..dx {
            for c in 0..dx {
                out[(r * stride + z, c * stride + z)] = block[(r, c)];
            }
        }
    }
    Ok(ExtensionSpec { n, m, u: u.clone(), u_m: UnitaryOp::new(out)? })
}

/// Controlled gate on (x, y) with an open control on z, as a full-register matrix.
fn controlled_on_z0(v: &CMatrix, stride_xy: usize) -> CMatrix {
    let dim = 2 * stride_xy;
    let mut out = CMatrix::identity(dim, dim);
    for r in 0..stride_xy {
        for c in 0..stride_xy {
            out[(2 * r, 2 * c)] = v[(r, c)];
        }
    }
    out
}

/// X on z controlled on y = 0.
fn flag_flip(n: usize, m: usize) -> CMatrix {
    let dim = 1usize << (n + m + 1);
    let ymask = ((1usize << m) - 1) << 1;
    let mut out = CMatrix::zeros(dim, dim);
    for c in 0..dim {
        let r = if c & ymask == 0 { c ^ 1 } else { c };
        out[(r, c)] = ONE;
    }
    out
}

/// The four-gate circuit built from an m-fold special extension V on n + m qubits:
/// controlled-V (z = 0), flag flip (y = 0), controlled-V† (z = 0), flag flip (y = 0).
pub fn circuit_from_extension(v: &UnitaryOp, n: usize) -> Result<UnitaryOp> {
    if v.n() < n {
        return Err(Error::Dimension(format!("extension on {} qubits cannot carry {n} targets", v.n())));
    }
    let m = v.n() - n;
    check_size(n + m + 1)?;
    let sxy = 1usize << (n + m);
    let cv = controlled_on_z0(v.matrix(), sxy);
    let cvd = controlled_on_z0(&v.matrix().adjoint(), sxy);
    let flip = flag_flip(n, m);
    let total = &flip * &cvd * &flip * &cv;
    UnitaryOp::new(total)
}

/// Outcome of factoring V|x⟩|0⟩ = (U|x⟩)|A⟩.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionCheck {
    pub is_extension: bool,
    pub is_special: bool,
    pub ancilla: Option<Vec<Complex64>>,
}

/// Tests whether V (on n + m qubits, targets first) extends U (on n qubits).
pub fn special_extension_check(v: &UnitaryOp, u: &UnitaryOp) -> Result<ExtensionCheck> {
    let n = u.n();
    if v.n() < n {
        return Err(Error::Dimension(format!("V acts on {} qubits, U on {n}", v.n())));
    }
    let da = 1usize << (v.n() - n);
    let dx = 1usize << n;
    let (vm, um) = (v.matrix(), u.matrix());
    let mut common: Option<Vec<Complex64>> = None;
    let fail = ExtensionCheck { is_extension: false, is_special: false, ancilla: None };
    for x in 0..dx {
        let col = vm.column(x * da);
        // A_a = Σ_x' conj((U|x⟩)_x') ⟨x', a|V|x, 0⟩
        let a: Vec<Complex64> =
            (0..da).map(|k| (0..dx).map(|xp| um[(xp, x)].conj() * col[xp * da + k]).sum()).collect();
        let mut resid = 0.0;
        for xp in 0..dx {
            for (k, ak) in a.iter().enumerate() {
                resid += (col[xp * da + k] - um[(xp, x)] * ak).norm_sqr();
            }
        }
        if resid.sqrt() > EXTENSION_TOL {
            return Ok(fail);
        }
        match &common {
            None => common = Some(a),
            Some(c) => {
                let diff: f64 = c.iter().zip(&a).map(|(p, q)| (p - q).norm_sqr()).sum();
                if diff.sqrt() > EXTENSION_TOL {
                    return Ok(fail);
                }
            }
        }
    }
    let a = common.expect("at least one basis state");
    let dev: f64 = a.iter().enumerate().map(|(k, ak)| (ak - if k == 0 { ONE } else { ZERO }).norm_sqr()).sum();
    Ok(ExtensionCheck { is_extension: true, is_special: dev.sqrt() <= EXTENSION_TOL, ancilla: Some(a) })
}

/// A random m-fold special extension C·(U⊗I)·B, where B and C are Haar on the span of
/// |x⟩|y⟩ with y ≠ 0 and fix every |x⟩|0⟩.
pub fn random_special_extension<R: Rng + ?Sized>(u: &UnitaryOp, m: usize, rng: &mut R) -> Result<UnitaryOp> {
    let n = u.n();
    check_size(n + m)?;
    let (dx, da) = (1usize << n, 1usize << m);
    let dim = dx * da;
    let mut base = CMatrix::zeros(dim, dim);
    for r in 0..dx {
        for c in 0..dx {
            for a in 0..da {
                base[(r * da + a, c * da + a)] = u.matrix()[(r, c)];
            }
        }
    }
    let rest: Vec<usize> = (0..dim).filter(|i| i % da != 0).collect();
    let mut sector = || {
        let h = haar_unitary(rest.len(), rng);
        let mut out = CMatrix::identity(dim, dim);
        for (i, &r) in rest.iter().enumerate() {
            for (j, &c) in rest.iter().enumerate() {
                out[(r, c)] = h[(i, j)];
            }
        }
        out
    };
    let b = sector();
    let c = sector();
    UnitaryOp::new(c * base * b)
}

/// Parses a truth table given as a string of 0/1 characters, entry x at position x.
pub fn parse_truth_table(s: &str) -> Result<Vec<bool>> {
    let bits: Vec<bool> = s
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '_')
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::TruthTable(format!("unexpected character {other:?}"))),
        })
        .collect::<Result<_>>()?;
    Ok(bits)
}

/// U_f|x⟩|z⟩ = |x⟩|z ⊕ f(x)⟩ on n + 1 qubits and V_f|x⟩ = (−1)^{f(x)}|x⟩ on n qubits.
pub fn boolean_unitaries(table: &[bool]) -> Result<(UnitaryOp, UnitaryOp)> {
    let len = table.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::TruthTable(format!("length {len} is not 2ⁿ with n ≥ 1")));
    }
    let n = len.trailing_zeros() as usize;
    check_size(n + 1)?;
    let mut uf = CMatrix::zeros(2 * len, 2 * len);
    for (x, &f) in table.iter().enumerate() {
        for z in 0..2 {
            uf[(2 * x + (z ^ usize::from(f)), 2 * x + z)] = ONE;
        }
    }
    let vf = CMatrix::from_fn(len, len, |r, c| {
        if r != c {
            ZERO
        } else if table[r] {
            -ONE
        } else {
            ONE
        }
    });
    Ok((UnitaryOp::new(uf)?, UnitaryOp::new(vf)?))
}
