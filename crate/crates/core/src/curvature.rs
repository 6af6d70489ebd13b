//! Curvature of right-invariant penalty metrics in the Pauli frame.
//!
//! Components are taken with respect to the unnormalized frame σ with ⟨σ, τ⟩ = q_σ δ_στ.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{HermitianOp, RVector};
use crate::metric::{MetricKind, PenaltyMetric};
use crate::pauli::{PauliAlgebra, PauliWord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RicciMethod {
    Brute,
    ClosedForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarMethod {
    ClosedForm,
    Contraction,
}

/// Group whose tangent directions are averaged over: U(2ⁿ) includes the identity direction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    #[default]
    U,
    Su,
}

impl Group {
    /// Tangent-space dimension.
    pub fn dim(self, n: usize) -> usize {
        match self {
            Group::U => 1 << (2 * n),
            Group::Su => (1 << (2 * n)) - 1,
        }
    }

    /// Proportionality constant between R and the mean sectional curvature as stated in the
    /// literature: 4ⁿ − 1 on U(2ⁿ), 4ⁿ − 2 on SU(2ⁿ).
    pub fn average_constant(self, n: usize) -> f64 {
        (self.dim(n) - 1) as f64
    }
}

/// i[σ_a, σ_b] = k·σ_c, or None when the words commute.
fn bracket(alg: &PauliAlgebra, a: usize, b: usize) -> Option<(f64, usize)> {
    if !alg.anticommute(a, b) {
        return None;
    }
    let (ph, c) = alg.product(a, b);
    Some((-2.0 * ph.to_complex().im, c))
}

/// q_{[σ,τ]}, with the convention q_{[σ,τ]} = 1 for commuting words.
fn q_bracket(m: &PenaltyMetric, a: usize, b: usize) -> f64 {
    let alg = m.algebra();
    if alg.anticommute(a, b) {
        m.penalty(alg.product_index(a, b))
    } else {
        1.0
    }
}

/// c_{σ,τ} = (1 + (q_τ − q_σ)/q_{[σ,τ]})/2.
pub fn c_coefficient(m: &PenaltyMetric, a: usize, b: usize) -> f64 {
    0.5 * (1.0 + (m.penalty(b) - m.penalty(a)) / q_bracket(m, a, b))
}

fn pair_term(m: &PenaltyMetric, a: usize, b: usize, c: usize, d: usize) -> f64 {
    let alg = m.algebra();
    match (bracket(alg, a, b), bracket(alg, c, d)) {
        (Some((k1, w1)), Some((k2, w2))) if w1 == w2 => {
            c_coefficient(m, a, b) * c_coefficient(m, c, d) * k1 * k2 * m.penalty(w1)
        }
        _ => 0.0,
    }
}

/// R_{ρστμ} on word indices.
pub fn component_index(m: &PenaltyMetric, r: usize, s: usize, t: usize, u: usize) -> f64 {
    let alg = m.algebra();
    if alg.product_index(alg.product_index(r, s), alg.product_index(t, u)) != 0 {
        return 0.0;
    }
    let t1 = pair_term(m, r, t, s, u);
    let t2 = pair_term(m, s, t, r, u);
    let t3 = match bracket(alg, r, s) {
        Some((k1, w)) => match bracket(alg, w, t) {
            Some((k2, w2)) if w2 == u => c_coefficient(m, w, t) * k1 * k2 * m.penalty(u),
            _ => 0.0,
        },
        None => 0.0,
    };
    t1 - t2 - t3
}

fn check_words(m: &PenaltyMetric, words: &[&PauliWord]) -> Result<()> {
    for w in words {
        if w.len() != m.n() {
            return Err(Error::LengthMismatch(w.len(), m.n()));
        }
    }
    Ok(())
}

pub fn curvature_component(
    rho: &PauliWord,
    sigma: &PauliWord,
    tau: &PauliWord,
    mu: &PauliWord,
    metric: &PenaltyMetric,
) -> Result<f64> {
    check_words(metric, &[rho, sigma, tau, mu])?;
    Ok(component_index(metric, rho.index(), sigma.index(), tau.index(), mu.index()))
}

/// ⟨x, y⟩ on full coefficient vectors, identity direction included.
fn inner_full(m: &PenaltyMetric, x: &RVector, y: &RVector) -> f64 {
    m.penalties().iter().zip(x.iter().zip(y.iter())).map(|(p, (a, b))| p * a * b).sum()
}

/// Sectional curvature and whether the inputs had to be orthonormalized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sectional {
    pub value: f64,
    pub adjusted: bool,
}

/// Gram–Schmidt under the metric; the flag reports whether anything changed.
fn orthonormalize(m: &PenaltyMetric, x: &RVector, y: &RVector) -> Result<(RVector, RVector, bool)> {
    let nx = inner_full(m, x, x).sqrt();
    if !(nx > 0.0) {
        return Err(Error::LinearlyDependent);
    }
    let e1 = x / nx;
    let proj = inner_full(m, &e1, y);
    let rest = y - &e1 * proj;
    let ny = inner_full(m, &rest, &rest).sqrt();
    let ylen = inner_full(m, y, y).sqrt();
    if !(ny > 1e-12 * ylen) {
        return Err(Error::LinearlyDependent);
    }
    let e2 = rest / ny;
    let adjusted = (nx - 1.0).abs() > 1e-12 || proj.abs() > 1e-12 || (ny - 1.0).abs() > 1e-12;
    Ok((e1, e2, adjusted))
}

/// K(X, Y) for metric-orthonormal coefficient vectors.
pub fn sectional_coeffs(m: &PenaltyMetric, x: &RVector, y: &RVector) -> f64 {
    let alg = m.algebra();
    let xy = alg.icomm(x.as_slice(), y.as_slice());
    let bxy = m.f_coeffs(&alg.icomm(m.g_coeffs(x).as_slice(), y.as_slice()));
    let byx = m.f_coeffs(&alg.icomm(m.g_coeffs(y).as_slice(), x.as_slice()));
    let sum = &bxy + &byx;
    let diff = &bxy - &byx;
    -0.75 * inner_full(m, &xy, &xy) + 0.25 * inner_full(m, &sum, &sum) + 0.5 * inner_full(m, &xy, &diff)
}

pub fn sectional(x: &HermitianOp, y: &HermitianOp, metric: &PenaltyMetric) -> Result<Sectional> {
    if x.n() != metric.n() || y.n() != metric.n() {
        return Err(Error::LengthMismatch(x.n().max(y.n()), metric.n()));
    }
    let alg = metric.algebra();
    let (e1, e2, adjusted) = orthonormalize(metric, &alg.decompose(x.matrix()), &alg.decompose(y.matrix()))?;
    Ok(Sectional { value: sectional_coeffs(metric, &e1, &e2), adjusted })
}

/// Rc_σσ = 4ⁿ + Σ′_ρ (q_σ² − 2q_ρ²)/(q_ρ q_{[ρ,σ]}) over ρ anticommuting with σ.
fn ricci_brute(m: &PenaltyMetric, s: usize) -> f64 {
    let alg = m.algebra();
    let qs = m.penalty(s);
    let sum: f64 = (1..alg.dim())
        .filter(|&r| alg.anticommute(r, s))
        .map(|r| {
            let qr = m.penalty(r);
            (qs * qs - 2.0 * qr * qr) / (qr * q_bracket(m, r, s))
        })
        .sum();
    alg.dim() as f64 + sum
}

/// Rc_σσ of the standard metric from the weight-resolved closed forms.
pub fn ricci_standard(n: usize, w: usize, q: f64) -> f64 {
    let (n, wf) = (n as f64, w as f64);
    let half = 4f64.powf(n) / 2.0;
    match w {
        1 => 2.0 * (3.0 * n - 2.0) + (half - 2.0 * (3.0 * n - 2.0)) / (q * q),
        2 => -24.0 * (n - 2.0) * q + 8.0 * (6.0 * n - 11.0) + (half - 8.0 * (3.0 * n - 5.0)) / (q * q),
        3 => 12.0 * q * q + half + 36.0 * (n - 3.0) - 12.0 * (3.0 * n - 8.0) / q,
        _ => half + 4.0 * wf * (3.0 * n - 2.0 * wf) - 4.0 * wf * (3.0 * n - 2.0 * wf) / q,
    }
}

pub fn ricci_diagonal(sigma: &PauliWord, metric: &PenaltyMetric, method: RicciMethod) -> Result<f64> {
    check_words(metric, &[sigma])?;
    if sigma.is_identity() {
        return Err(Error::IdentityWord);
    }
    match method {
        RicciMethod::Brute => Ok(ricci_brute(metric, sigma.index())),
        RicciMethod::ClosedForm => {
            if metric.spec().kind != MetricKind::Standard {
                return Err(Error::InvalidMetric("closed-form Ricci values exist for the standard metric only".into()));
            }
            Ok(ricci_standard(metric.n(), crate::pauli::weight(sigma), metric.q()))
        }
    }
}

/// Σ_ρ R_{ρσσρ}/q_ρ straight from the tensor.
pub fn ricci_contracted(sigma: &PauliWord, metric: &PenaltyMetric) -> Result<f64> {
    check_words(metric, &[sigma])?;
    let s = sigma.index();
    Ok((0..metric.dim()).map(|r| component_index(metric, r, s, s, r) / metric.penalty(r)).sum())
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// N_σ(v, w) for a word of weight `s` on `n` qubits.
pub fn n_sigma_weights(n: usize, s: usize, v: usize, w: usize) -> u64 {
    if s + v <= w || (s + v - w) % 2 == 0 || v > n || s > n {
        return 0;
    }
    let d = s + v - w;
    let mut total: u128 = 0;
    for k in 0..=v.min(s) {
        if d < k || d - k > k {
            continue;
        }
        total += 3u128.pow((v - k) as u32)
            * 4u128.pow(k as u32)
            * binomial(s, k)
            * binomial(n - s, v - k)
            * binomial(k, d - k);
    }
    debug_assert_eq!(total % (1u128 << d), 0);
    (total >> d) as u64
}

/// Number of weight-v words ρ with [σ, ρ] ≠ 0 of weight w.
pub fn n_sigma_count(sigma: &PauliWord, v: usize, w: usize) -> u64 {
    n_sigma_weights(sigma.len(), crate::pauli::weight(sigma), v, w)
}

/// Exhaustive count of the same quantity.
pub fn n_sigma_enumerate(sigma: &PauliWord, v: usize, w: usize) -> u64 {
    let alg = PauliAlgebra::get(sigma.len());
    let s = sigma.index();
    (0..alg.dim())
        .filter(|&r| alg.weight(r) == v && alg.anticommute(r, s) && alg.weight(alg.product_index(r, s)) == w)
        .count() as u64
}

/// Rc per weight class w = 1..=n for a metric whose penalty depends only on weight.
/// `weights[v]` is the penalty of weight-v words; entry 0 is unused.
pub fn weight_ricci(n: usize, weights: &[f64]) -> Vec<f64> {
    let full = 4f64.powi(n as i32);
    (1..=n)
        .map(|s| {
            let qs = weights[s];
            let mut rc = full;
            for v in 1..=n {
                for w in 1..=n {
                    let c = n_sigma_weights(n, s, v, w);
                    if c > 0 {
                        rc += c as f64 * (qs * qs - 2.0 * weights[v] * weights[v]) / (weights[v] * weights[w]);
                    }
                }
            }
            rc
        })
        .collect()
}

/// R = Σ_σ Rc_σσ/q_σ for a weight-diagonal metric.
pub fn weight_scalar(n: usize, weights: &[f64]) -> f64 {
    weight_ricci(n, weights)
        .iter()
        .enumerate()
        .map(|(i, rc)| {
            let w = i + 1;
            3f64.powi(w as i32) * binomial(n, w) as f64 * rc / weights[w]
        })
        .sum()
}

fn standard_weights(n: usize, q: f64) -> Vec<f64> {
    (0..=n).map(|w| if w >= 3 { q } else { 1.0 }).collect()
}

/// Scalar curvature of the standard metric.
pub fn scalar_curvature(n: usize, q: f64, method: ScalarMethod) -> f64 {
    match method {
        ScalarMethod::ClosedForm => {
            let nf = n as f64;
            let p = 4f64.powi(n as i32);
            -54.0 * nf * (nf - 1.0) * (nf - 2.0) * q
                + 6.0 * nf * (36.0 * nf * nf - 99.0 * nf + 64.0)
                + ((p - 1.0 + 1.5 * nf * (3.0 * nf - 1.0)) * p / 2.0 - 6.0 * nf * (45.0 * nf * nf - 117.0 * nf + 74.0))
                    / q
                - (3.0 * nf * (3.0 * nf - 1.0) * p / 4.0 - 6.0 * nf * (3.0 * nf - 4.0) * (6.0 * nf - 7.0)) / (q * q)
        }
        ScalarMethod::Contraction => weight_scalar(n, &standard_weights(n, q)),
    }
}

/// Leading large-n terms of the standard-metric scalar curvature.
pub fn scalar_asymptotic(n: usize, q: f64) -> f64 {
    let nf = n as f64;
    -54.0 * nf.powi(3) * q + 216.0 * nf.powi(3) + 16f64.powi(n as i32) / (2.0 * q)
        - 9.0 * nf * nf * 4f64.powi(n as i32 - 1) / (q * q)
}

/// Scalar curvature of an arbitrary penalty metric by summing the brute Ricci diagonal.
pub fn scalar_brute(metric: &PenaltyMetric) -> f64 {
    let terms: Vec<f64> =
        (1..metric.dim()).into_par_iter().map(|s| ricci_brute(metric, s) / metric.penalty(s)).collect();
    terms.iter().sum()
}

/// One explicit Euler step of ∂g/∂s = −2Rc + 2Rg/(4ⁿ − 1) on weight-class penalties.
pub fn ricci_flow_step(weights: &[f64], n: usize, ds: f64) -> Result<Vec<f64>> {
    if weights.len() != n + 1 {
        return Err(Error::LengthMismatch(weights.len(), n + 1));
    }
    if let Some(w) = (1..=n).find(|&w| !(weights[w] > 0.0)) {
        return Err(Error::StepRejected(w));
    }
    let rc = weight_ricci(n, weights);
    let r = weight_scalar(n, weights);
    let norm = 4f64.powi(n as i32) - 1.0;
    let mut out = weights.to_vec();
    for w in 1..=n {
        out[w] = weights[w] + ds * (-2.0 * rc[w - 1] + 2.0 * r * weights[w] / norm);
        if !(out[w] > 0.0) {
            return Err(Error::StepRejected(w));
        }
    }
    Ok(out)
}

/// Monte Carlo estimate of the mean sectional curvature over metric-orthonormal pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionalAverage {
    pub samples: usize,
    pub mean: f64,
    pub std_error: f64,
}

const CHUNK: usize = 1024;

/// Pairs are drawn from the isotropic Gaussian in an orthonormal frame and orthonormalized.
/// Chunk k uses stream k of a ChaCha generator seeded with `seed`, so results do not depend
/// on the thread count.
pub fn sectional_average(metric: &PenaltyMetric, group: Group, samples: usize, seed: u64) -> SectionalAverage {
    let d = metric.dim();
    let first = match group {
        Group::U => 0,
        Group::Su => 1,
    };
    let scales: Vec<f64> = metric.penalties().iter().map(|p| 1.0 / p.sqrt()).collect();
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let count = CHUNK.min(samples - k * CHUNK);
            let draw = |rng: &mut ChaCha8Rng| {
                RVector::from_fn(d, |i, _| {
                    if i < first {
                        0.0
                    } else {
                        let g: f64 = StandardNormal.sample(rng);
                        g * scales[i]
                    }
                })
            };
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let x = draw(&mut rng);
                let y = draw(&mut rng);
                if let Ok((e1, e2, _)) = orthonormalize(metric, &x, &y) {
                    let k = sectional_coeffs(metric, &e1, &e2);
                    s += k;
                    s2 += k * k;
                }
            }
            (s, s2)
        })
        .collect();
    // summed in chunk order so the result is independent of scheduling
    let (sum, sum_sq) = partial.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = samples as f64;
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean) * nf / (nf - 1.0).max(1.0);
    SectionalAverage { samples, mean, std_error: (var / nf).sqrt() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentValue {
    pub words: [PauliWord; 4],
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightRicci {
    pub weight: usize,
    pub brute: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountEntry {
    pub sigma_weight: usize,
    pub v: usize,
    pub w: usize,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowStep {
    pub s: f64,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub n: usize,
    pub q: f64,
    pub components: Vec<ComponentValue>,
    pub sectional: Vec<Sectional>,
    pub ricci: Vec<WeightRicci>,
    pub scalar: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scalar_closed_form: Option<f64>,
    pub counts: Vec<CountEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average: Option<SectionalAverage>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flow: Vec<FlowStep>,
}

impl CurvatureReport {
    /// Ricci values per weight (brute force at the word with that weight's lowest index),
    /// scalar curvature and all counts N_σ(v, w).
    pub fn build(metric: &PenaltyMetric) -> Self {
        let n = metric.n();
        let alg = metric.algebra();
        let standard = metric.spec().kind == MetricKind::Standard;
        let ricci = (1..=n)
            .map(|w| {
                let s = (1..alg.dim()).find(|&k| alg.weight(k) == w).expect("word of every weight");
                WeightRicci {
                    weight: w,
                    brute: ricci_brute(metric, s),
                    closed_form: standard.then(|| ricci_standard(n, w, metric.q())),
                }
            })
            .collect();
        let mut counts = Vec::new();
        for s in 1..=n {
            for v in 0..=n {
                for w in 0..=n {
                    let count = n_sigma_weights(n, s, v, w);
                    if count > 0 {
                        counts.push(CountEntry { sigma_weight: s, v, w, count });
                    }
                }
            }
        }
        Self {
            n,
            q: metric.q(),
            components: Vec::new(),
            sectional: Vec::new(),
            ricci,
            scalar: scalar_brute(metric),
            scalar_closed_form: standard.then(|| scalar_curvature(n, metric.q(), ScalarMethod::ClosedForm)),
            counts,
            average: None,
            flow: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::word_op;
    use proptest::prelude::*;

    fn word(s: &str) -> PauliWord {
        s.parse().unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    #[test]
    fn selection_rule_and_single_qubit_value() {
        let m = PenaltyMetric::standard(1, 1.0);
        let (x, y, z) = (word("X"), word("Y"), word("Z"));
        assert_eq!(curvature_component(&x, &y, &y, &z, &m).unwrap(), 0.0);
        assert!((curvature_component(&x, &y, &y, &x, &m).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(curvature_component(&x, &word("XY"), &y, &x, &m), Err(Error::LengthMismatch(2, 1))));
    }

    #[test]
    fn bi_invariant_sectional_is_quarter_bracket_norm() {
        let m = PenaltyMetric::standard(2, 1.0);
        let x = word_op("XZ").unwrap();
        let y = word_op("YI").unwrap().add(&word_op("ZX").unwrap().scale(0.4));
        let k = sectional(&x, &y, &m).unwrap();
        assert!(k.adjusted);
        let alg = m.algebra();
        let (e1, e2, _) = orthonormalize(&m, &alg.decompose(x.matrix()), &alg.decompose(y.matrix())).unwrap();
        let b = alg.icomm(e1.as_slice(), e2.as_slice());
        assert!((k.value - 0.25 * inner_full(&m, &b, &b)).abs() < 1e-12);
        let zz = sectional(&word_op("ZI").unwrap(), &word_op("IZ").unwrap(), &m).unwrap();
        assert_eq!(zz.value, 0.0);
        assert!(!zz.adjusted);
        assert!(matches!(sectional(&x, &x.scale(2.0), &m), Err(Error::LinearlyDependent)));
    }

    #[test]
    fn sectional_matches_tensor_on_word_pairs() {
        for (n, q) in [(1, 1.0), (2, 4.0), (2, 64.0)] {
            let mut m = PenaltyMetric::standard(n, q);
            if n == 2 {
                // a metric with genuinely different penalties at n = 2
                m = PenaltyMetric::projective(2, q, vec![word("XI"), word("IX"), word("ZZ"), word("YZ")]).unwrap();
            }
            let alg = m.algebra();
            for s in 1..alg.dim() {
                for t in 1..alg.dim() {
                    if !alg.anticommute(s, t) {
                        continue;
                    }
                    let (qs, qt) = (m.penalty(s), m.penalty(t));
                    let mut x = RVector::zeros(alg.dim());
                    let mut y = RVector::zeros(alg.dim());
                    x[s] = 1.0 / qs.sqrt();
                    y[t] = 1.0 / qt.sqrt();
                    let k = sectional_coeffs(&m, &x, &y);
                    let r = component_index(&m, s, t, t, s) / (qs * qt);
                    assert!((k - r).abs() < 1e-10 * r.abs().max(1.0), "{n} {q} {s} {t}: {k} vs {r}");
                }
            }
        }
    }

    #[test]
    fn both_signs_at_large_q() {
        let m = PenaltyMetric::standard(3, 64.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut draw = || {
            RVector::from_fn(
                64,
                |i, _| if i == 0 { 0.0 } else { StandardNormal.sample(&mut rng) } / m.penalty(i).sqrt(),
            )
        };
        let (mut pos, mut neg) = (0, 0);
        for _ in 0..400 {
            let (x, y) = (draw(), draw());
            let (e1, e2, _) = orthonormalize(&m, &x, &y).unwrap();
            if sectional_coeffs(&m, &e1, &e2) > 0.0 {
                pos += 1;
            } else {
                neg += 1;
            }
        }
        assert!(pos > 0 && neg > 0, "{pos} {neg}");
    }

    #[test]
    fn tensor_symmetries_and_bianchi() {
        let m = PenaltyMetric::projective(2, 64.0, vec![word("XI"), word("IY"), word("ZZ"), word("XY"), word("YX")])
            .unwrap();
        let d = m.dim();
        let mut checked = 0;
        for r in 1..d {
            for s in 1..d {
                for t in 1..d {
                    let alg = m.algebra();
                    let u = alg.product_index(alg.product_index(r, s), t);
                    if u == 0 {
                        continue;
                    }
                    let v = component_index(&m, r, s, t, u);
                    assert!((v + component_index(&m, s, r, t, u)).abs() < 1e-10);
                    assert!((v + component_index(&m, r, s, u, t)).abs() < 1e-10);
                    assert!((v - component_index(&m, t, u, r, s)).abs() < 1e-10);
                    let b = v + component_index(&m, s, t, r, u) + component_index(&m, t, r, s, u);
                    assert!(b.abs() < 1e-10);
                    checked += 1;
                }
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn ricci_brute_equals_tensor_contraction() {
        let metrics = [
            PenaltyMetric::standard(2, 4.0),
            PenaltyMetric::projective(2, 7.0, vec![word("XI"), word("IZ"), word("YY")]).unwrap(),
            PenaltyMetric::three_qubit(0.5, 9.0),
        ];
        for m in &metrics {
            for s in 1..m.dim() {
                let sigma = PauliWord::from_index(m.n(), s);
                let a = ricci_diagonal(&sigma, m, RicciMethod::Brute).unwrap();
                let b = ricci_contracted(&sigma, m).unwrap();
                assert!(rel(a, b) < 1e-9, "{sigma}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn ricci_closed_forms() {
        for q in [1.0, 4.0, 64.0, 1e3] {
            for n in 1..=3 {
                let m = PenaltyMetric::standard(n, q);
                for s in 1..m.dim() {
                    let sigma = PauliWord::from_index(n, s);
                    let a = ricci_diagonal(&sigma, &m, RicciMethod::Brute).unwrap();
                    let b = ricci_diagonal(&sigma, &m, RicciMethod::ClosedForm).unwrap();
                    assert!(rel(a, b) < 1e-9, "n={n} q={q} {sigma}: {a} vs {b}");
                }
            }
        }
        let m = PenaltyMetric::standard(3, 5.0);
        let w3 = ricci_diagonal(&word("XYZ"), &m, RicciMethod::Brute).unwrap();
        assert!((w3 - (12.0 * 25.0 + 32.0 - 12.0 / 5.0)).abs() < 1e-10);
        assert!(
            (ricci_diagonal(&word("ZI"), &PenaltyMetric::standard(2, 64.0), RicciMethod::Brute).unwrap() - 8.0).abs()
                < 1e-12
        );
        assert!(matches!(
            ricci_diagonal(&word("II"), &m.with_q(1.0), RicciMethod::Brute),
            Err(Error::LengthMismatch(..))
        ));
        assert!(matches!(ricci_diagonal(&word("III"), &m, RicciMethod::Brute), Err(Error::IdentityWord)));
        let p = PenaltyMetric::projective(2, 3.0, vec![word("XI")]).unwrap();
        assert!(matches!(ricci_diagonal(&word("XI"), &p, RicciMethod::ClosedForm), Err(Error::InvalidMetric(_))));
    }

    #[test]
    fn bi_invariant_ricci_is_half_dimension() {
        for n in 1..=3 {
            let m = PenaltyMetric::standard(n, 1.0);
            for s in 1..m.dim() {
                let rc = ricci_brute(&m, s);
                assert!((rc - (1 << (2 * n)) as f64 / 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scalar_methods_agree() {
        assert!((scalar_curvature(1, 1.0, ScalarMethod::ClosedForm) - 6.0).abs() < 1e-12);
        assert!((scalar_curvature(1, 1.0, ScalarMethod::Contraction) - 6.0).abs() < 1e-12);
        for n in 1..=8 {
            for q in [1.0, 4.0, 64.0, 4f64.powi(n as i32)] {
                let a = scalar_curvature(n, q, ScalarMethod::ClosedForm);
                let b = scalar_curvature(n, q, ScalarMethod::Contraction);
                assert!(rel(a, b) < 1e-9, "n={n} q={q}: {a} vs {b}");
                if n <= 3 {
                    let c = scalar_brute(&PenaltyMetric::standard(n, q));
                    assert!(rel(b, c) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn scalar_sign_at_q_four_to_the_n() {
        assert!((scalar_curvature(2, 16.0, ScalarMethod::ClosedForm) - 120.0).abs() < 1e-9);
        assert!(scalar_curvature(3, 64.0, ScalarMethod::ClosedForm) < 0.0);
        assert!(scalar_curvature(4, 256.0, ScalarMethod::ClosedForm) < 0.0);
    }

    #[test]
    fn asymptotic_ratio_approaches_one() {
        let ratio = |n| scalar_curvature(n, 4.0, ScalarMethod::ClosedForm) / scalar_asymptotic(n, 4.0);
        assert!((ratio(20) - 1.0).abs() < (ratio(8) - 1.0).abs());
        assert!((ratio(20) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn counting_examples() {
        assert_eq!(n_sigma_count(&word("Z"), 1, 1), 2);
        assert_eq!(n_sigma_count(&word("XZ"), 1, 1), 0);
        for s in 1..64 {
            let sigma = PauliWord::from_index(3, s);
            let mut total = 0;
            for v in 0..=3 {
                for w in 0..=3 {
                    let c = n_sigma_count(&sigma, v, w);
                    assert_eq!(c, n_sigma_enumerate(&sigma, v, w), "{sigma} {v} {w}");
                    total += c;
                }
            }
            assert_eq!(total, 32);
        }
    }

    #[test]
    fn weight_ricci_matches_brute_for_three_qubit_metric() {
        let m = PenaltyMetric::three_qubit(0.3, 20.0);
        let rc = weight_ricci(3, &[1.0, 0.3, 1.0, 20.0]);
        for s in 1..64 {
            let w = m.algebra().weight(s);
            assert!(rel(rc[w - 1], ricci_brute(&m, s)) < 1e-12);
        }
    }

    #[test]
    fn ricci_flow_fixed_point_and_rejection() {
        for n in [2, 3] {
            let w = vec![1.0; n + 1];
            let next = ricci_flow_step(&w, n, 1e-3).unwrap();
            for k in 1..=n {
                assert!((next[k] - 1.0).abs() < 1e-12);
            }
        }
        let w = standard_weights(3, 64.0);
        assert_eq!(ricci_flow_step(&w, 3, 0.0).unwrap(), w);
        assert!(matches!(ricci_flow_step(&w, 3, 1.0), Err(Error::StepRejected(_))));
        assert!(matches!(ricci_flow_step(&w, 2, 1e-6), Err(Error::LengthMismatch(4, 3))));
    }

    #[test]
    fn ricci_flow_drives_ratios_toward_one() {
        let mut w = standard_weights(3, 64.0);
        let spread = |w: &[f64]| {
            w[1..].iter().cloned().fold(0.0, f64::max) / w[1..].iter().cloned().fold(f64::INFINITY, f64::min)
        };
        let mut last = spread(&w);
        for _ in 0..400 {
            w = ricci_flow_step(&w, 3, 2e-6).unwrap();
            let s = spread(&w);
            assert!(s <= last);
            last = s;
        }
        assert!(last < 64.0);
    }

    #[test]
    fn sectional_average_reproduces_dimension_identity() {
        let m = PenaltyMetric::standard(2, 4.0);
        let r = scalar_brute(&m);
        for group in [Group::U, Group::Su] {
            let d = group.dim(2) as f64;
            let avg = sectional_average(&m, group, 20000, 5);
            assert!((avg.mean * d * (d - 1.0) - r).abs() < 4.0 * avg.std_error * d * (d - 1.0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn pair_exchange_symmetry(r in 1usize..16, s in 1usize..16, t in 1usize..16, q in 1.0f64..100.0) {
            let m = PenaltyMetric::projective(2, q, vec![PauliWord::from_index(2, 1), PauliWord::from_index(2, 6)]).unwrap();
            let alg = m.algebra();
            let u = alg.product_index(alg.product_index(r, s), t);
            prop_assert!((component_index(&m, r, s, t, u) - component_index(&m, t, u, r, s)).abs() < 1e-10);
        }

        #[test]
        fn counting_is_complete(n in 1usize..10, s in 1usize..10) {
            prop_assume!(s <= n);
            let total: u64 = (0..=n).flat_map(|v| (0..=n).map(move |w| (v, w))).map(|(v, w)| n_sigma_weights(n, s, v, w)).sum();
            prop_assert_eq!(total, 1u64 << (2 * n - 1));
        }
    }
}
