//! Generalized Pauli operators: words, products, dense realizations and coefficient vectors.
//!
//! Words are indexed in base 4 (I=0, X=1, Y=2, Z=3) with the leftmost qubit most significant.
//! Qubit k (counted from the left) maps to bit n−1−k of a computational basis index.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianOp, RMatrix, RVector, I, ONE, ZERO};
use crate::metric::PenaltyMetric;

/// Largest qubit count handled by the dense Pauli machinery.
pub const MAX_QUBITS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Letter {
    fn from_digit(d: usize) -> Self {
        match d & 3 {
            0 => Letter::I,
            1 => Letter::X,
            2 => Letter::Y,
            _ => Letter::Z,
        }
    }

    fn bits(self) -> (usize, usize) {
        match self {
            Letter::I => (0, 0),
            Letter::X => (1, 0),
            Letter::Y => (1, 1),
            Letter::Z => (0, 1),
        }
    }

    fn from_bits(x: usize, z: usize) -> Self {
        match (x, z) {
            (0, 0) => Letter::I,
            (1, 0) => Letter::X,
            (1, 1) => Letter::Y,
            _ => Letter::Z,
        }
    }

    pub fn as_char(self) -> char {
        ['I', 'X', 'Y', 'Z'][self as usize]
    }
}

/// A fourth root of unity, i^k.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        [ONE, I, -ONE, -I][self.0 as usize]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliWord {
    letters: Vec<Letter>,
}

impl PauliWord {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self { letters }
    }

    pub fn identity(n: usize) -> Self {
        Self { letters: vec![Letter::I; n] }
    }

    /// Word with `letter` on qubit `k` (0-based from the left) and identities elsewhere.
    pub fn single(n: usize, k: usize, letter: Letter) -> Self {
        let mut letters = vec![Letter::I; n];
        letters[k] = letter;
        Self { letters }
    }

    pub fn from_index(n: usize, index: usize) -> Self {
        let letters = (0..n).map(|k| Letter::from_digit(index >> (2 * (n - 1 - k)))).collect();
        Self { letters }
    }

    pub fn index(&self) -> usize {
        self.letters.iter().fold(0, |acc, &l| acc * 4 + l as usize)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&l| l == Letter::I)
    }

    fn masks(&self) -> (usize, usize) {
        let n = self.letters.len();
        let mut xm = 0;
        let mut zm = 0;
        for (k, &l) in self.letters.iter().enumerate() {
            let (x, z) = l.bits();
            xm |= x << (n - 1 - k);
            zm |= z << (n - 1 - k);
        }
        (xm, zm)
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Letter::I),
                'X' => Ok(Letter::X),
                'Y' => Ok(Letter::Y),
                'Z' => Ok(Letter::Z),
                _ => Err(Error::InvalidWord(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() {
            return Err(Error::InvalidWord(s.to_string()));
        }
        Ok(Self { letters })
    }
}

impl Serialize for PauliWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn weight(w: &PauliWord) -> usize {
    w.letters.iter().filter(|&&l| l != Letter::I).count()
}

fn check_len(a: &PauliWord, b: &PauliWord) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// Letterwise product: matrix(a)·matrix(b) = phase·matrix(word).
pub fn pauli_product(a: &PauliWord, b: &PauliWord) -> Result<(Phase, PauliWord)> {
    check_len(a, b)?;
    let mut k = 0u8;
    let letters = a
        .letters
        .iter()
        .zip(&b.letters)
        .map(|(&x, &y)| {
            let (xa, za) = x.bits();
            let (xb, zb) = y.bits();
            let c = Letter::from_bits(xa ^ xb, za ^ zb);
            let ya = (xa & za) as u8;
            let yb = (xb & zb) as u8;
            let yc = ((xa ^ xb) & (za ^ zb)) as u8;
            k = (k + ya + yb + 4 - yc + 2 * (za & xb) as u8) % 4;
            c
        })
        .collect();
    Ok((Phase(k), PauliWord { letters }))
}

pub fn commutes(a: &PauliWord, b: &PauliWord) -> Result<bool> {
    check_len(a, b)?;
    let clashes =
        a.letters.iter().zip(&b.letters).filter(|(&x, &y)| x != Letter::I && y != Letter::I && x != y).count();
    Ok(clashes % 2 == 0)
}

pub fn to_matrix(w: &PauliWord) -> HermitianOp {
    let n = w.len();
    let alg = PauliAlgebra::get(n);
    let mut coeffs = RVector::zeros(alg.dim());
    coeffs[w.index()] = 1.0;
    HermitianOp::from_raw(n, alg.compose(coeffs.as_slice()))
}

/// Real Pauli coefficients tr(Aσ)/2ⁿ of a Hermitian operator.
pub fn decompose(a: &HermitianOp) -> PauliVector {
    let alg = PauliAlgebra::get(a.n());
    PauliVector { n: a.n(), coeffs: alg.decompose(a.matrix()) }
}

/// Splits H into its easy (𝒫) and hard (𝒬) parts under `metric`.
pub fn split_pq(h: &HermitianOp, metric: &PenaltyMetric) -> Result<(HermitianOp, HermitianOp)> {
    if h.n() != metric.n() {
        return Err(Error::LengthMismatch(h.n(), metric.n()));
    }
    let v = decompose(h);
    let mut p = v.coeffs.clone();
    let mut q = v.coeffs.clone();
    for k in 0..p.len() {
        if metric.is_hard(k) {
            p[k] = 0.0;
        } else {
            q[k] = 0.0;
        }
    }
    let alg = PauliAlgebra::get(h.n());
    Ok((
        HermitianOp::from_raw(h.n(), alg.compose(p.as_slice())),
        HermitianOp::from_raw(h.n(), alg.compose(q.as_slice())),
    ))
}

/// Real coefficient vector over all 4ⁿ words in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliVector {
    pub n: usize,
    pub coeffs: RVector,
}

impl PauliVector {
    pub fn zeros(n: usize) -> Self {
        Self { n, coeffs: RVector::zeros(1 << (2 * n)) }
    }

    pub fn from_coeffs(n: usize, coeffs: RVector) -> Result<Self> {
        if coeffs.len() != 1 << (2 * n) {
            return Err(Error::Dimension(format!("expected {} coefficients, got {}", 1usize << (2 * n), coeffs.len())));
        }
        Ok(Self { n, coeffs })
    }

    pub fn get(&self, w: &PauliWord) -> f64 {
        self.coeffs[w.index()]
    }

    pub fn set(&mut self, w: &PauliWord, value: f64) {
        self.coeffs[w.index()] = value;
    }

    pub fn compose(&self) -> HermitianOp {
        let alg = PauliAlgebra::get(self.n);
        HermitianOp::from_raw(self.n, alg.compose(self.coeffs.as_slice()))
    }

    /// CSV body with rows `word,coefficient` at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("word,coefficient\n");
        for (k, c) in self.coeffs.iter().enumerate() {
            out.push_str(&format!("{},{:.16e}\n", PauliWord::from_index(self.n, k), c));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("word") {
                continue;
            }
            let (w, c) = line.split_once(',').ok_or_else(|| Error::Parse(format!("bad row {line:?}")))?;
            let w: PauliWord = w.trim().parse()?;
            let c: f64 = c.trim().parse().map_err(|_| Error::Parse(format!("bad number in {line:?}")))?;
            entries.push((w, c));
        }
        let n = entries.first().map(|(w, _)| w.len()).ok_or_else(|| Error::Parse("empty vector".into()))?;
        let mut v = Self::zeros(n);
        for (w, c) in entries {
            check_len(&w, &PauliWord::identity(n))?;
            v.set(&w, c);
        }
        Ok(v)
    }
}

/// One nonzero structure constant: i[σ_a, σ_b] = coef·σ_c.
#[derive(Clone, Copy, Debug)]
pub struct StructureEntry {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub coef: f64,
}

/// Precomputed Pauli algebra for a fixed n: masks, dense actions and structure constants.
#[derive(Debug)]
pub struct PauliAlgebra {
    n: usize,
    dim: usize,
    xmask: Vec<usize>,
    zmask: Vec<usize>,
    ypow: Vec<u8>,
    weight: Vec<usize>,
    index_of: Vec<usize>,
    entries: Vec<StructureEntry>,
}

static ALGEBRAS: [OnceLock<PauliAlgebra>; MAX_QUBITS + 1] =
    [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];

impl PauliAlgebra {
    /// Shared algebra for n qubits. Panics for n outside 1..=MAX_QUBITS.
    pub fn get(n: usize) -> &'static PauliAlgebra {
        assert!((1..=MAX_QUBITS).contains(&n), "Pauli algebra supports 1 ≤ n ≤ {MAX_QUBITS}, got {n}");
        ALGEBRAS[n].get_or_init(|| PauliAlgebra::build(n))
    }

    fn build(n: usize) -> Self {
        let dim = 1usize << (2 * n);
        let mut xmask = vec![0; dim];
        let mut zmask = vec![0; dim];
        let mut ypow = vec![0u8; dim];
        let mut weight_v = vec![0; dim];
        let mut index_of = vec![0; dim];
        for k in 0..dim {
            let w = PauliWord::from_index(n, k);
            let (xm, zm) = w.masks();
            xmask[k] = xm;
            zmask[k] = zm;
            ypow[k] = ((xm & zm).count_ones() % 4) as u8;
            weight_v[k] = weight(&w);
            index_of[(xm << n) | zm] = k;
        }
        let mut alg = Self { n, dim, xmask, zmask, ypow, weight: weight_v, index_of, entries: Vec::new() };
        let mut entries = Vec::new();
        for a in 1..dim {
            for b in 1..dim {
                if alg.anticommute(a, b) {
                    let (ph, c) = alg.product(a, b);
                    // i[σa,σb] = 2i·phase·σc with phase = ±i
                    let coef = -2.0 * ph.to_complex().im;
                    entries.push(StructureEntry { a: a as u32, b: b as u32, c: c as u32, coef });
                }
            }
        }
        alg.entries = entries;
        alg
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of words, 4ⁿ.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Hilbert-space dimension, 2ⁿ.
    pub fn hilbert_dim(&self) -> usize {
        1 << self.n
    }

    pub fn weight(&self, k: usize) -> usize {
        self.weight[k]
    }

    pub fn entries(&self) -> &[StructureEntry] {
        &self.entries
    }

    pub fn anticommute(&self, a: usize, b: usize) -> bool {
        ((self.xmask[a] & self.zmask[b]).count_ones() + (self.zmask[a] & self.xmask[b]).count_ones()) % 2 == 1
    }

    /// σ_a σ_b = phase·σ_c.
    pub fn product(&self, a: usize, b: usize) -> (Phase, usize) {
        let xc = self.xmask[a] ^ self.xmask[b];
        let zc = self.zmask[a] ^ self.zmask[b];
        let c = self.index_of[(xc << self.n) | zc];
        let k = (self.ypow[a] as u32 + self.ypow[b] as u32 + 4 - self.ypow[c] as u32
            + 2 * (self.zmask[a] & self.xmask[b]).count_ones())
            % 4;
        (Phase(k as u8), c)
    }

    /// Index of the word proportional to σ_a σ_b.
    pub fn product_index(&self, a: usize, b: usize) -> usize {
        self.index_of[((self.xmask[a] ^ self.xmask[b]) << self.n) | (self.zmask[a] ^ self.zmask[b])]
    }

    /// σ_k |x⟩ = phase·|row⟩.
    #[inline]
    pub fn column_action(&self, k: usize, x: usize) -> (usize, Complex64) {
        let sign = (self.zmask[k] & x).count_ones() % 2;
        let p = (self.ypow[k] as usize + 2 * sign as usize) % 4;
        (x ^ self.xmask[k], [ONE, I, -ONE, -I][p])
    }

    pub fn compose(&self, coeffs: &[f64]) -> CMatrix {
        let hd = self.hilbert_dim();
        let mut m = CMatrix::zeros(hd, hd);
        for (k, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for x in 0..hd {
                let (r, ph) = self.column_action(k, x);
                m[(r, x)] += ph * c;
            }
        }
        m
    }

    /// Real parts of tr(Aσ)/2ⁿ for every word.
    pub fn decompose(&self, a: &CMatrix) -> RVector {
        let hd = self.hilbert_dim();
        let scale = 1.0 / hd as f64;
        RVector::from_fn(self.dim, |k, _| {
            let mut acc = ZERO;
            for x in 0..hd {
                let (r, ph) = self.column_action(k, x);
                acc += ph * a[(x, r)];
            }
            acc.re * scale
        })
    }

    /// Complex coefficients tr(Aσ)/2ⁿ for a general (not necessarily Hermitian) A.
    pub fn decompose_complex(&self, a: &CMatrix) -> Vec<Complex64> {
        let hd = self.hilbert_dim();
        let scale = 1.0 / hd as f64;
        (0..self.dim)
            .map(|k| {
                let mut acc = ZERO;
                for x in 0..hd {
                    let (r, ph) = self.column_action(k, x);
                    acc += ph * a[(x, r)];
                }
                acc * scale
            })
            .collect()
    }

    /// Coefficients of i[X, Y].
    pub fn icomm(&self, x: &[f64], y: &[f64]) -> RVector {
        let mut out = RVector::zeros(self.dim);
        self.icomm_acc(x, y, 1.0, out.as_mut_slice());
        out
    }

    /// out += alpha·i[X, Y] in coefficient space.
    pub fn icomm_acc(&self, x: &[f64], y: &[f64], alpha: f64, out: &mut [f64]) {
        for e in &self.entries {
            let xa = x[e.a as usize];
            if xa == 0.0 {
                continue;
            }
            out[e.c as usize] += alpha * e.coef * xa * y[e.b as usize];
        }
    }

    /// Matrix of Y ↦ i[X, Y].
    pub fn ad_matrix(&self, x: &[f64]) -> RMatrix {
        let mut m = RMatrix::zeros(self.dim, self.dim);
        for e in &self.entries {
            let xa = x[e.a as usize];
            if xa != 0.0 {
                m[(e.c as usize, e.b as usize)] += e.coef * xa;
            }
        }
        m
    }

    /// Matrix of X ↦ V X V† in coefficient space (V unitary).
    pub fn conjugation_matrix(&self, v: &CMatrix) -> RMatrix {
        let hd = self.hilbert_dim();
        let vd = v.adjoint();
        let mut out = RMatrix::zeros(self.dim, self.dim);
        let mut a = CMatrix::zeros(hd, hd);
        for k in 0..self.dim {
            // a = V σ_k: column x of σ_k has one entry at row r
            for x in 0..hd {
                let (r, ph) = self.column_action(k, x);
                for i in 0..hd {
                    a[(i, x)] = v[(i, r)] * ph;
                }
            }
            let w = &a * &vd;
            let col = self.decompose(&w);
            out.set_column(k, &col);
        }
        out
    }
}
