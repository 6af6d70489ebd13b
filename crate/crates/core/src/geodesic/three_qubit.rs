//! Closed-form three-qubit geodesics for the 𝒢 = s𝒮 + 𝒯 + q𝒬 metric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{exp_minus_i, CMatrix, HermitianOp, UnitaryOp};
use crate::pauli::PauliAlgebra;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticMode {
    /// Ũ = e^{−its⁻¹S0}·e^{it(S0+Q0)}·e^{−it(S0+T0+Q0)}.
    Full,
    /// Ũ = e^{−its⁻¹S0}·e^{itQ0}·e^{−it(T0+Q0)}.
    SToZero,
    /// Ũ = e^{−its⁻¹S0}·e^{−itℛ_{S0+Q0}(T0)}.
    FirstOrderReduced,
    /// Ũ = e^{−its⁻¹S0}·e^{−itℛ_{Q0}(T0)}.
    FirstOrderReducedSToZero,
}

#[derive(Clone, Debug)]
pub struct ThreeQubitSolution {
    pub s: HermitianOp,
    pub t: HermitianOp,
    pub q: HermitianOp,
    pub u: UnitaryOp,
}

fn check_support(op: &HermitianOp, w: usize, name: &'static str) -> Result<()> {
    if op.n() != 3 {
        return Err(Error::LengthMismatch(op.n(), 3));
    }
    let alg = PauliAlgebra::get(3);
    let v = alg.decompose(op.matrix());
    let scale = v.amax().max(1.0);
    for k in 0..alg.dim() {
        if alg.weight(k) != w && v[k].abs() > 1e-12 * scale {
            return Err(Error::WrongSupport(name));
        }
    }
    Ok(())
}

/// e^{+iXτ}.
fn exp_plus_i(x: &CMatrix, tau: f64) -> CMatrix {
    exp_minus_i(x, -tau)
}

/// Diagonal part of `t0` in the eigenbasis of `a`, mapped back to the computational basis.
fn reduce(a: &CMatrix, t0: &CMatrix) -> Result<CMatrix> {
    let eig = a.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|x, y| x.total_cmp(y));
    let spread = vals.last().unwrap() - vals.first().unwrap();
    let min_gap = vals.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if !(min_gap > 1e-8 * spread.max(1.0)) {
        return Err(Error::DegenerateSpectrum);
    }
    let v = &eig.eigenvectors;
    let rotated = v.adjoint() * t0 * v;
    let diag = CMatrix::from_diagonal(&rotated.diagonal());
    Ok(v * diag * v.adjoint())
}

/// Exact dual components and the large-q approximate unitary at time t.
/// `q = None` stands for q = ∞.
pub fn three_qubit_analytic(
    s0: &HermitianOp,
    t0: &HermitianOp,
    q0: &HermitianOp,
    s: f64,
    q: Option<f64>,
    t: f64,
    mode: AnalyticMode,
) -> Result<ThreeQubitSolution> {
    check_support(s0, 1, "weight-1")?;
    check_support(t0, 2, "weight-2")?;
    check_support(q0, 3, "weight-3")?;
    let qinv = q.map_or(0.0, |q| 1.0 / q);
    let sinv = 1.0 / s;
    let (sm, tm, qm) = (s0.matrix(), t0.matrix(), q0.matrix());
    let a = qinv - sinv;
    let b = 1.0 - qinv;
    let sq = sm + qm;
    let outer = exp_plus_i(sm, t * a);
    let inner = exp_plus_i(&sq, t * b);
    let rot = &outer * &inner;
    let t_t = &rot * tm * rot.adjoint();
    let q_t = &outer * qm * outer.adjoint();
    let local = exp_minus_i(sm, t * sinv);
    let u = match mode {
        AnalyticMode::Full => local * exp_plus_i(&sq, t) * exp_minus_i(&(sm + tm + qm), t),
        AnalyticMode::SToZero => local * exp_plus_i(qm, t) * exp_minus_i(&(tm + qm), t),
        AnalyticMode::FirstOrderReduced => local * exp_minus_i(&reduce(&sq, tm)?, t),
        AnalyticMode::FirstOrderReducedSToZero => local * exp_minus_i(&reduce(qm, tm)?, t),
    };
    Ok(ThreeQubitSolution {
        s: s0.clone(),
        t: HermitianOp::from_raw(3, (&t_t + t_t.adjoint()).scale(0.5)),
        q: HermitianOp::from_raw(3, (&q_t + q_t.adjoint()).scale(0.5)),
        u: UnitaryOp::from_raw(3, u),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::integrate_coeffs;
    use crate::metric::PenaltyMetric;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_class(w: usize, rng: &mut ChaCha8Rng) -> HermitianOp {
        let alg = PauliAlgebra::get(3);
        let mut v = crate::linalg::RVector::zeros(64);
        for k in 1..64 {
            if alg.weight(k) == w {
                v[k] = StandardNormal.sample(rng);
            }
        }
        HermitianOp::from_raw(3, alg.compose(v.as_slice()))
    }

    #[test]
    fn collapses_without_two_and_three_body_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s0 = random_class(1, &mut rng);
        let zero = HermitianOp::zeros(3);
        let sol = three_qubit_analytic(&s0, &zero, &zero, 0.7, Some(50.0), 0.8, AnalyticMode::Full).unwrap();
        let expected = exp_minus_i(s0.matrix(), 0.8 / 0.7);
        assert!((sol.u.matrix() - expected).camax() < 1e-12);
    }

    #[test]
    fn s_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (s0, t0, q0) = (random_class(1, &mut rng), random_class(2, &mut rng), random_class(3, &mut rng));
        for t in [0.0, 0.4, 2.0] {
            let sol = three_qubit_analytic(&s0, &t0, &q0, 0.5, Some(10.0), t, AnalyticMode::Full).unwrap();
            assert_eq!(sol.s, s0);
        }
    }

    #[test]
    fn components_match_integration_at_finite_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (s0, t0, q0) = (random_class(1, &mut rng), random_class(2, &mut rng), random_class(3, &mut rng));
        let (s, q, t) = (0.6, 7.0, 0.7);
        let metric = PenaltyMetric::three_qubit(s, q);
        let alg = PauliAlgebra::get(3);
        let l0 = alg.decompose(s0.add(&t0).add(&q0).matrix());
        let traj = integrate_coeffs(&l0, &metric, t, 2000).unwrap();
        let sol = three_qubit_analytic(&s0, &t0, &q0, s, Some(q), t, AnalyticMode::Full).unwrap();
        let exact = alg.decompose(sol.s.add(&sol.t).add(&sol.q).matrix());
        assert!((exact - traj.l.last().unwrap()).amax() < 1e-9);
    }

    #[test]
    fn reduced_mode_rejects_degenerate_spectra() {
        let alg = PauliAlgebra::get(3);
        let mut v = crate::linalg::RVector::zeros(64);
        v["ZZZ".parse::<crate::PauliWord>().unwrap().index()] = 1.0;
        let q0 = HermitianOp::from_raw(3, alg.compose(v.as_slice()));
        let zero = HermitianOp::zeros(3);
        let r = three_qubit_analytic(&zero, &zero, &q0, 1.0, None, 1.0, AnalyticMode::FirstOrderReducedSToZero);
        assert!(matches!(r, Err(Error::DegenerateSpectrum)));
    }

    #[test]
    fn wrong_support_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t0 = random_class(2, &mut rng);
        let r = three_qubit_analytic(&t0, &t0, &HermitianOp::zeros(3), 1.0, None, 1.0, AnalyticMode::Full);
        assert!(matches!(r, Err(Error::WrongSupport("weight-1"))));
    }
}
