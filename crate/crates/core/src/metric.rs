//! Right-invariant penalty metrics, the Levi-Civita connection at the origin, and curve lengths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{HermitianOp, RMatrix, RVector};
use crate::pauli::{self, PauliAlgebra, PauliWord, MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Penalty 1 for weight ≤ 2, q otherwise.
    Standard,
    /// n = 3 only: s for weight 1, 1 for weight 2, q for weight 3.
    ThreeQubitStq,
    /// Penalty 1 on declared easy words, q elsewhere.
    Projective,
}

/// Serializable description of a metric, as read from job configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub n: usize,
    pub kind: MetricKind,
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub easy_words: Option<Vec<PauliWord>>,
}

/// Diagonal right-invariant metric in the Pauli basis.
///
/// The identity word carries penalty 1 so that 𝒢 and ℱ stay invertible on the full
/// coefficient space; all physical quantities live in the traceless sector.
#[derive(Clone, Debug, PartialEq)]
pub struct PenaltyMetric {
    spec: MetricSpec,
    penalties: Vec<f64>,
    hard: Vec<bool>,
}

impl PenaltyMetric {
    pub fn from_spec(spec: MetricSpec) -> Result<Self> {
        let n = spec.n;
        if !(1..=MAX_QUBITS).contains(&n) {
            return Err(Error::InvalidMetric(format!("n = {n} outside 1..={MAX_QUBITS}")));
        }
        if !(spec.q > 0.0 && spec.q.is_finite()) {
            return Err(Error::InvalidMetric(format!("penalty q = {} must be positive", spec.q)));
        }
        let alg = PauliAlgebra::get(n);
        let d = alg.dim();
        let mut penalties = vec![1.0; d];
        let mut hard = vec![false; d];
        match spec.kind {
            MetricKind::Standard => {
                for k in 1..d {
                    if alg.weight(k) >= 3 {
                        penalties[k] = spec.q;
                        hard[k] = true;
                    }
                }
            }
            MetricKind::ThreeQubitStq => {
                if n != 3 {
                    return Err(Error::InvalidMetric("three_qubit_stq requires n = 3".into()));
                }
                let s = spec.s.ok_or_else(|| Error::InvalidMetric("three_qubit_stq requires s".into()))?;
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::InvalidMetric(format!("s = {s} must be positive")));
                }
                for k in 1..d {
                    match alg.weight(k) {
                        1 => penalties[k] = s,
                        2 => {}
                        _ => {
                            penalties[k] = spec.q;
                            hard[k] = true;
                        }
                    }
                }
            }
            MetricKind::Projective => {
                let easy = spec
                    .easy_words
                    .as_ref()
                    .ok_or_else(|| Error::InvalidMetric("projective metric requires easy_words".into()))?;
                let mut is_easy = vec![false; d];
                for w in easy {
                    if w.len() != n {
                        return Err(Error::LengthMismatch(w.len(), n));
                    }
                    is_easy[w.index()] = true;
                }
                for k in 1..d {
                    if !is_easy[k] {
                        penalties[k] = spec.q;
                        hard[k] = true;
                    }
                }
            }
        }
        Ok(Self { spec, penalties, hard })
    }

    pub fn standard(n: usize, q: f64) -> Self {
        Self::from_spec(MetricSpec { n, kind: MetricKind::Standard, q, s: None, easy_words: None })
            .expect("valid standard metric")
    }

    pub fn three_qubit(s: f64, q: f64) -> Self {
        Self::from_spec(MetricSpec { n: 3, kind: MetricKind::ThreeQubitStq, q, s: Some(s), easy_words: None })
            .expect("valid three-qubit metric")
    }

    pub fn projective(n: usize, q: f64, easy_words: Vec<PauliWord>) -> Result<Self> {
        Self::from_spec(MetricSpec { n, kind: MetricKind::Projective, q, s: None, easy_words: Some(easy_words) })
    }

    /// Same family with a different hard-subspace penalty.
    pub fn with_q(&self, q: f64) -> Self {
        Self::from_spec(MetricSpec { q, ..self.spec.clone() }).expect("valid metric")
    }

    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn q(&self) -> f64 {
        self.spec.q
    }

    pub fn dim(&self) -> usize {
        self.penalties.len()
    }

    pub fn penalty(&self, k: usize) -> f64 {
        self.penalties[k]
    }

    pub fn penalty_of(&self, w: &PauliWord) -> f64 {
        self.penalties[w.index()]
    }

    pub fn penalties(&self) -> &[f64] {
        &self.penalties
    }

    /// Whether word k lies in the hard subspace 𝒬.
    pub fn is_hard(&self, k: usize) -> bool {
        self.hard[k]
    }

    pub fn algebra(&self) -> &'static PauliAlgebra {
        PauliAlgebra::get(self.spec.n)
    }

    pub fn g_coeffs(&self, h: &RVector) -> RVector {
        RVector::from_fn(h.len(), |k, _| h[k] * self.penalties[k])
    }

    pub fn f_coeffs(&self, l: &RVector) -> RVector {
        RVector::from_fn(l.len(), |k, _| l[k] / self.penalties[k])
    }

    /// 𝒬 projection, which is also d𝒢/dq for every supported family.
    pub fn q_coeffs(&self, h: &RVector) -> RVector {
        RVector::from_fn(h.len(), |k, _| if self.hard[k] { h[k] } else { 0.0 })
    }

    pub fn p_coeffs(&self, h: &RVector) -> RVector {
        RVector::from_fn(h.len(), |k, _| if self.hard[k] { 0.0 } else { h[k] })
    }

    pub fn inner_coeffs(&self, h: &RVector, j: &RVector) -> f64 {
        (1..h.len()).map(|k| self.penalties[k] * h[k] * j[k]).sum()
    }

    fn check(&self, h: &HermitianOp) -> Result<()> {
        if h.n() != self.n() {
            return Err(Error::LengthMismatch(h.n(), self.n()));
        }
        Ok(())
    }
}

/// ⟨H, J⟩ = Σ_σ q_σ h_σ j_σ over the traceless part.
pub fn inner(h: &HermitianOp, j: &HermitianOp, metric: &PenaltyMetric) -> Result<f64> {
    metric.check(h)?;
    metric.check(j)?;
    let alg = metric.algebra();
    let hv = alg.decompose(h.matrix());
    let jv = alg.decompose(j.matrix());
    Ok(metric.inner_coeffs(&hv, &jv))
}

/// L = 𝒢(H).
pub fn dual(h: &HermitianOp, metric: &PenaltyMetric) -> Result<HermitianOp> {
    metric.check(h)?;
    let alg = metric.algebra();
    let l = metric.g_coeffs(&alg.decompose(h.matrix()));
    Ok(HermitianOp::from_raw(h.n(), alg.compose(l.as_slice())))
}

/// H = ℱ(L).
pub fn inverse_dual(l: &HermitianOp, metric: &PenaltyMetric) -> Result<HermitianOp> {
    metric.check(l)?;
    let alg = metric.algebra();
    let h = metric.f_coeffs(&alg.decompose(l.matrix()));
    Ok(HermitianOp::from_raw(l.n(), alg.compose(h.as_slice())))
}

/// Quadrature of speeds over a strictly increasing grid: composite Simpson on interval pairs,
/// with the final interval of an odd count closed by the quadratic through the last three nodes.
pub fn simpson(times: &[f64], values: &[f64]) -> Result<f64> {
    let n = times.len();
    if n < 2 || values.len() != n {
        return Err(Error::TooFewSamples);
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::BadGrid);
    }
    if n == 2 {
        return Ok(0.5 * (times[1] - times[0]) * (values[0] + values[1]));
    }
    let mut total = 0.0;
    let mut k = 0;
    while k + 2 < n {
        total += simpson_pair(&times[k..k + 3], &values[k..k + 3]);
        k += 2;
    }
    if k + 1 < n {
        // one interval left: integrate the parabola through the last three nodes over it
        let (t0, t1, t2) = (times[n - 3], times[n - 2], times[n - 1]);
        let (f0, f1, f2) = (values[n - 3], values[n - 2], values[n - 1]);
        let h1 = t1 - t0;
        let h2 = t2 - t1;
        total += h2 / 6.0 * ((3.0 - h2 / (h1 + h2)) * f2 + (3.0 + h2 / h1) * f1 - h2 * h2 / (h1 * (h1 + h2)) * f0);
    }
    Ok(total)
}

fn simpson_pair(t: &[f64], f: &[f64]) -> f64 {
    let h0 = t[1] - t[0];
    let h1 = t[2] - t[1];
    let s = h0 + h1;
    s / 6.0 * ((2.0 - h1 / h0) * f[0] + s * s / (h0 * h1) * f[1] + (2.0 - h0 / h1) * f[2])
}

/// Length ∫√⟨H,H⟩dt together with a grid-halving error estimate.
pub fn curve_length_with_error(samples: &[(f64, HermitianOp)], metric: &PenaltyMetric) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples);
    }
    let alg = metric.algebra();
    let mut times = Vec::with_capacity(samples.len());
    let mut speeds = Vec::with_capacity(samples.len());
    for (t, h) in samples {
        metric.check(h)?;
        let hv = alg.decompose(h.matrix());
        times.push(*t);
        speeds.push(metric.inner_coeffs(&hv, &hv).max(0.0).sqrt());
    }
    length_from_speeds(&times, &speeds)
}

pub(crate) fn length_from_speeds(times: &[f64], speeds: &[f64]) -> Result<(f64, f64)> {
    let fine = simpson(times, speeds)?;
    let m = times.len();
    let estimate = if m >= 5 {
        let mut ct: Vec<f64> = times.iter().step_by(2).copied().collect();
        let mut cs: Vec<f64> = speeds.iter().step_by(2).copied().collect();
        if (m - 1) % 2 == 1 {
            ct.push(times[m - 1]);
            cs.push(speeds[m - 1]);
        }
        (fine - simpson(&ct, &cs)?).abs() / 15.0
    } else {
        0.0
    };
    Ok((fine, estimate))
}

pub fn curve_length(samples: &[(f64, HermitianOp)], metric: &PenaltyMetric) -> Result<f64> {
    curve_length_with_error(samples, metric).map(|(l, _)| l)
}

/// Metric components g_{στ} in Pauli coordinates around the origin, X = x·σ.
///
/// Uses ℰ_X = 𝓘 − A/2 + A²/6 with A the matrix of i·ad_X, truncated consistently at
/// first (`order = 1`) or second (`order = 2`) order in X. Rows and columns run over all
/// 4ⁿ words; the identity row is decoupled.
pub fn pauli_coordinate_metric(x: &HermitianOp, metric: &PenaltyMetric, order: usize) -> Result<RMatrix> {
    metric.check(x)?;
    let alg = metric.algebra();
    let xv = alg.decompose(x.matrix());
    let a = alg.ad_matrix(xv.as_slice());
    let g = RMatrix::from_diagonal(&RVector::from_vec(metric.penalties().to_vec()));
    let ag = &a * &g;
    let ga = &g * &a;
    let mut out = &g + (&ag - &ga).scale(0.5);
    if order >= 2 {
        let a2 = &a * &a;
        out += (&a2 * &g + &g * &a2).scale(1.0 / 6.0) - (&ag * &a).scale(0.25);
    }
    Ok(out)
}

/// ∂g_{στ}/∂x^μ at the origin: ½·coef_μ(i[𝒢σ,τ] + i[𝒢τ,σ]).
pub fn metric_derivative(sigma: &PauliWord, tau: &PauliWord, mu: &PauliWord, metric: &PenaltyMetric) -> f64 {
    let alg = metric.algebra();
    let (s, t, m) = (sigma.index(), tau.index(), mu.index());
    if !alg.anticommute(s, t) || alg.product_index(s, t) != m {
        return 0.0;
    }
    let (ph, _) = alg.product(s, t);
    let coef = -2.0 * ph.to_complex().im;
    0.5 * coef * (metric.penalty(s) - metric.penalty(t))
}

/// Γ^ρ_{στ} = (q_τ − q_σ)/(2q_ρ)·coef_ρ(i[σ,τ]).
pub fn christoffel(rho: &PauliWord, sigma: &PauliWord, tau: &PauliWord, metric: &PenaltyMetric) -> Result<f64> {
    for w in [rho, sigma, tau] {
        if w.len() != metric.n() {
            return Err(Error::LengthMismatch(w.len(), metric.n()));
        }
    }
    let alg = metric.algebra();
    let (r, s, t) = (rho.index(), sigma.index(), tau.index());
    if !alg.anticommute(s, t) || alg.product_index(s, t) != r {
        return Ok(0.0);
    }
    let (ph, _) = alg.product(s, t);
    let coef = -2.0 * ph.to_complex().im;
    Ok((metric.penalty(t) - metric.penalty(s)) / (2.0 * metric.penalty(r)) * coef)
}

/// ∇_Y Z for right-invariant fields in coefficient space.
pub(crate) fn connection_coeffs(y: &RVector, z: &RVector, metric: &PenaltyMetric) -> RVector {
    let alg = metric.algebra();
    let gy = metric.g_coeffs(y);
    let gz = metric.g_coeffs(z);
    let mut inner = RVector::zeros(y.len());
    alg.icomm_acc(y.as_slice(), gz.as_slice(), 1.0, inner.as_mut_slice());
    alg.icomm_acc(z.as_slice(), gy.as_slice(), 1.0, inner.as_mut_slice());
    let mut out = metric.f_coeffs(&inner);
    alg.icomm_acc(y.as_slice(), z.as_slice(), 1.0, out.as_mut_slice());
    out.scale(0.5)
}

/// ∇_Y Z = (i/2)([Y,Z] + ℱ([Y,𝒢Z] + [Z,𝒢Y])) for right-invariant fields.
pub fn connection_right_invariant(y: &HermitianOp, z: &HermitianOp, metric: &PenaltyMetric) -> Result<HermitianOp> {
    metric.check(y)?;
    metric.check(z)?;
    let alg = metric.algebra();
    let out = connection_coeffs(&alg.decompose(y.matrix()), &alg.decompose(z.matrix()), metric);
    Ok(HermitianOp::from_raw(y.n(), alg.compose(out.as_slice())))
}

/// Weights of the derivative at `x0` of the Lagrange interpolant through `nodes`.
fn lagrange_derivative_weights(nodes: &[f64], x0: f64) -> Vec<f64> {
    let m = nodes.len();
    (0..m)
        .map(|j| {
            let denom: f64 = (0..m).filter(|&k| k != j).map(|k| nodes[j] - nodes[k]).product();
            let mut num = 0.0;
            for i in 0..m {
                if i == j {
                    continue;
                }
                let mut p = 1.0;
                for k in 0..m {
                    if k != j && k != i {
                        p *= x0 - nodes[k];
                    }
                }
                num += p;
            }
            num / denom
        })
        .collect()
}

fn stencil(len: usize, k: usize, width: usize) -> std::ops::Range<usize> {
    let half = width / 2;
    let start = k.saturating_sub(half).min(len - width);
    start..start + width
}

/// Covariant derivative D_tZ along a curve with tangent Y, both sampled on `times`.
///
/// dZ/dt uses three-point Lagrange differences; the difference to a five-point estimate
/// serves as the error estimate and must stay below `tol` (relative to max(1, |dZ/dt|)).
pub fn covariant_derivative(
    times: &[f64],
    y: &[HermitianOp],
    z: &[HermitianOp],
    metric: &PenaltyMetric,
    tol: f64,
) -> Result<Vec<HermitianOp>> {
    let m = times.len();
    if m < 3 || y.len() != m || z.len() != m {
        return Err(Error::TooFewSamples);
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::BadGrid);
    }
    let alg = metric.algebra();
    let yv: Vec<RVector> = y.iter().map(|h| alg.decompose(h.matrix())).collect();
    let zv: Vec<RVector> = z.iter().map(|h| alg.decompose(h.matrix())).collect();
    let mut out = Vec::with_capacity(m);
    let mut worst: f64 = 0.0;
    for k in 0..m {
        let r3 = stencil(m, k, 3);
        let w3 = lagrange_derivative_weights(&times[r3.clone()], times[k]);
        let mut dz = RVector::zeros(zv[0].len());
        for (w, j) in w3.iter().zip(r3) {
            dz.axpy(*w, &zv[j], 1.0);
        }
        if m >= 5 {
            let r5 = stencil(m, k, 5);
            let w5 = lagrange_derivative_weights(&times[r5.clone()], times[k]);
            let mut dz5 = RVector::zeros(zv[0].len());
            for (w, j) in w5.iter().zip(r5) {
                dz5.axpy(*w, &zv[j], 1.0);
            }
            let scale = dz5.amax().max(1.0);
            worst = worst.max((&dz - &dz5).amax() / scale);
        }
        let d = dz + connection_coeffs(&yv[k], &zv[k], metric);
        out.push(HermitianOp::from_raw(metric.n(), alg.compose(d.as_slice())));
    }
    if worst > tol {
        return Err(Error::GridTooCoarse { estimate: worst, tol });
    }
    Ok(out)
}

/// Convenience: the coefficient vector of a single word.
pub fn word_vector(w: &PauliWord) -> RVector {
    let d = 1usize << (2 * w.len());
    let mut v = RVector::zeros(d);
    v[w.index()] = 1.0;
    v
}

pub fn word_op(s: &str) -> Result<HermitianOp> {
    let w: PauliWord = s.parse()?;
    Ok(pauli::to_matrix(&w))
}
