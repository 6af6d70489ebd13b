//! Geodesic integration, constants of motion, canonical logarithms and closed-form solutions.

mod series;
mod three_qubit;

pub use series::{power_series_l, PowerSeriesContext};
pub use three_qubit::{three_qubit_analytic, AnalyticMode, ThreeQubitSolution};

use log::debug;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    exp_minus_i, identity, op_norm, polar_unitary, unitarity_deviation, CMatrix, HermitianOp, RVector, UnitaryOp, I,
    UNITARY_TOL,
};
use crate::metric::{length_from_speeds, PenaltyMetric};

/// Drift in ‖U†U − I‖ above which the integrator projects U back onto the unitary group.
pub const REPAIR_THRESHOLD: f64 = 1e-12;

/// Time-gridded geodesic: duals L (Pauli coefficients) and unitaries U at every node.
#[derive(Clone, Debug)]
pub struct GeodesicTrajectory {
    pub metric: PenaltyMetric,
    pub times: Vec<f64>,
    pub l: Vec<RVector>,
    pub u: Vec<CMatrix>,
    /// Number of unitarity repairs applied during integration.
    pub repairs: usize,
}

impl GeodesicTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n(&self) -> usize {
        self.metric.n()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    pub fn h(&self, k: usize) -> RVector {
        self.metric.f_coeffs(&self.l[k])
    }

    pub fn l_op(&self, k: usize) -> HermitianOp {
        HermitianOp::from_raw(self.n(), self.metric.algebra().compose(self.l[k].as_slice()))
    }

    pub fn h_op(&self, k: usize) -> HermitianOp {
        HermitianOp::from_raw(self.n(), self.metric.algebra().compose(self.h(k).as_slice()))
    }

    pub fn u_op(&self, k: usize) -> UnitaryOp {
        UnitaryOp::from_raw(self.n(), self.u[k].clone())
    }

    pub fn final_u(&self) -> UnitaryOp {
        self.u_op(self.len() - 1)
    }

    pub fn speed_squared(&self, k: usize) -> f64 {
        let h = self.h(k);
        self.metric.inner_coeffs(&h, &h)
    }

    /// Riemannian length with a grid-halving error estimate.
    pub fn length_with_error(&self) -> (f64, f64) {
        let speeds: Vec<f64> = (0..self.len()).map(|k| self.speed_squared(k).max(0.0).sqrt()).collect();
        length_from_speeds(&self.times, &speeds).expect("valid grid")
    }

    pub fn length(&self) -> f64 {
        self.length_with_error().0
    }
}

/// Right-hand side of L̇ = i[L, ℱL], U̇ = −iHU.
fn rhs(l: &RVector, u: &CMatrix, metric: &PenaltyMetric) -> (RVector, CMatrix) {
    let alg = metric.algebra();
    let h = metric.f_coeffs(l);
    let ldot = alg.icomm(l.as_slice(), h.as_slice());
    let hm = alg.compose(h.as_slice());
    let udot = (&hm * u) * (-I);
    (ldot, udot)
}

/// States at the four stages of one classical Runge–Kutta step, plus the result.
pub(crate) struct Rk4Step {
    pub stage_l: [RVector; 4],
    pub stage_u: [CMatrix; 4],
    pub l_next: RVector,
    pub u_next: CMatrix,
}

pub(crate) fn rk4_step(l: &RVector, u: &CMatrix, dt: f64, metric: &PenaltyMetric) -> Rk4Step {
    let (k1l, k1u) = rhs(l, u, metric);
    let l2 = l + &k1l * (0.5 * dt);
    let u2 = u + &k1u * Complex64::new(0.5 * dt, 0.0);
    let (k2l, k2u) = rhs(&l2, &u2, metric);
    let l3 = l + &k2l * (0.5 * dt);
    let u3 = u + &k2u * Complex64::new(0.5 * dt, 0.0);
    let (k3l, k3u) = rhs(&l3, &u3, metric);
    let l4 = l + &k3l * dt;
    let u4 = u + &k3u * Complex64::new(dt, 0.0);
    let (k4l, k4u) = rhs(&l4, &u4, metric);
    let l_next = l + (k1l + k2l * 2.0 + k3l * 2.0 + k4l) * (dt / 6.0);
    let u_next = u
        + (k1u + k2u * Complex64::new(2.0, 0.0) + k3u * Complex64::new(2.0, 0.0) + k4u) * Complex64::new(dt / 6.0, 0.0);
    Rk4Step { stage_l: [l.clone(), l2, l3, l4], stage_u: [u.clone(), u2, u3, u4], l_next, u_next }
}

/// Integrates from coefficient-space initial data on a uniform grid of `steps` intervals.
pub fn integrate_coeffs(
    l0: &RVector,
    metric: &PenaltyMetric,
    t_final: f64,
    steps: usize,
) -> Result<GeodesicTrajectory> {
    if steps < 2 {
        return Err(Error::TooFewSamples);
    }
    let dt = t_final / steps as f64;
    let hd = metric.algebra().hilbert_dim();
    let mut l = l0.clone();
    l[0] = 0.0;
    let mut u = identity(hd);
    let mut times = Vec::with_capacity(steps + 1);
    let mut ls = Vec::with_capacity(steps + 1);
    let mut us = Vec::with_capacity(steps + 1);
    times.push(0.0);
    ls.push(l.clone());
    us.push(u.clone());
    let mut repairs = 0;
    for k in 1..=steps {
        let step = rk4_step(&l, &u, dt, metric);
        l = step.l_next;
        u = step.u_next;
        if !l.iter().all(|x| x.is_finite()) || !u.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        let drift = unitarity_deviation(&u);
        if drift > REPAIR_THRESHOLD {
            debug!("unitarity repair at step {k}: drift {drift:e}");
            u = polar_unitary(&u);
            repairs += 1;
        }
        times.push(k as f64 * dt);
        ls.push(l.clone());
        us.push(u.clone());
    }
    Ok(GeodesicTrajectory { metric: metric.clone(), times, l: ls, u: us, repairs })
}

/// Integrates L̇ = i[L, ℱL] together with U̇ = −iHU from U(0) = I.
pub fn integrate_geodesic(
    l0: &HermitianOp,
    metric: &PenaltyMetric,
    t_final: f64,
    steps: usize,
) -> Result<GeodesicTrajectory> {
    if l0.n() != metric.n() {
        return Err(Error::LengthMismatch(l0.n(), metric.n()));
    }
    let lv = metric.algebra().decompose(l0.matrix());
    integrate_coeffs(&lv, metric, t_final, steps)
}

/// Per-node deviations of the constants of motion.
#[derive(Clone, Debug)]
pub struct ConservationReport {
    /// ‖U(t)†L(t)U(t) − L(0)‖ in operator norm.
    pub matrix_drift: Vec<f64>,
    /// max over weight-1 words of |l_σ(t) − l_σ(0)|; standard metric only.
    pub one_body_drift: Option<Vec<f64>>,
    /// |⟨H(t),H(t)⟩ − ⟨H(0),H(0)⟩|.
    pub speed_drift: Vec<f64>,
}

impl ConservationReport {
    pub fn max_matrix_drift(&self) -> f64 {
        self.matrix_drift.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_one_body_drift(&self) -> Option<f64> {
        self.one_body_drift.as_ref().map(|v| v.iter().cloned().fold(0.0, f64::max))
    }

    pub fn max_speed_drift(&self) -> f64 {
        self.speed_drift.iter().cloned().fold(0.0, f64::max)
    }
}

pub fn conserved_quantities(traj: &GeodesicTrajectory) -> ConservationReport {
    let alg = traj.metric.algebra();
    let l0 = alg.compose(traj.l[0].as_slice());
    let s0 = traj.speed_squared(0);
    let standard = traj.metric.spec().kind == crate::metric::MetricKind::Standard;
    let one_body: Vec<usize> = (1..alg.dim()).filter(|&k| alg.weight(k) == 1).collect();
    let mut matrix_drift = Vec::with_capacity(traj.len());
    let mut one_body_drift = Vec::with_capacity(traj.len());
    let mut speed_drift = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let lk = alg.compose(traj.l[k].as_slice());
        let u = &traj.u[k];
        let conj = u.adjoint() * lk * u;
        matrix_drift.push(op_norm(&(conj - &l0)));
        speed_drift.push((traj.speed_squared(k) - s0).abs());
        let d = one_body.iter().map(|&w| (traj.l[k][w] - traj.l[0][w]).abs()).fold(0.0, f64::max);
        one_body_drift.push(d);
    }
    ConservationReport { matrix_drift, one_body_drift: standard.then_some(one_body_drift), speed_drift }
}

/// Commutator norm ‖[𝒬H, 𝒫H]‖ deciding whether exp(−iHt) is a geodesic.
pub fn constant_h_defect(h: &HermitianOp, metric: &PenaltyMetric) -> Result<f64> {
    if h.n() != metric.n() {
        return Err(Error::LengthMismatch(h.n(), metric.n()));
    }
    let alg = metric.algebra();
    let hv = alg.decompose(h.matrix());
    let p = alg.compose(metric.p_coeffs(&hv).as_slice());
    let q = alg.compose(metric.q_coeffs(&hv).as_slice());
    Ok(op_norm(&(&q * &p - &p * &q)))
}

pub fn is_constant_h_geodesic(h: &HermitianOp, metric: &PenaltyMetric) -> Result<bool> {
    Ok(constant_h_defect(h, metric)? <= 1e-12)
}

/// Traceless Hamiltonian H with U = e^{iφ}·exp(−iHT).
#[derive(Clone, Debug)]
pub struct CanonicalHamiltonian {
    pub hamiltonian: HermitianOp,
    pub global_phase: f64,
    /// Eigenvalues of the untraced logarithm, ascending in the principal branch before shifts.
    pub eigenvalues: Vec<f64>,
}

impl CanonicalHamiltonian {
    /// The unit-phase target exp(−iHT) actually reached by H.
    pub fn special_target(&self, t_final: f64) -> UnitaryOp {
        self.hamiltonian.evolve(t_final)
    }
}

/// Principal-branch Hamiltonian of a unitary: eigenvalues −arg(z)/T in (−π/T, π/T], with an
/// optional 2πk/T shift per eigenvalue (eigenvalues taken in ascending principal order).
pub fn canonical_hamiltonian(
    u: &UnitaryOp,
    t_final: f64,
    branch_shifts: Option<&[i64]>,
) -> Result<CanonicalHamiltonian> {
    let m = u.matrix();
    let dev = unitarity_deviation(m);
    if !(dev <= UNITARY_TOL) {
        return Err(Error::NotUnitary(dev));
    }
    let d = m.nrows();
    let (q, t) = m.clone().schur().unpack();
    let period = 2.0 * std::f64::consts::PI / t_final;
    let mut pairs: Vec<(f64, usize)> = (0..d)
        .map(|k| {
            let mut lam = -t[(k, k)].arg() / t_final;
            if lam <= -0.5 * period + 1e-12 / t_final {
                lam += period;
            }
            (lam, k)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(shifts) = branch_shifts {
        if shifts.len() != d {
            return Err(Error::Dimension(format!("expected {d} branch shifts, got {}", shifts.len())));
        }
        for (p, &s) in pairs.iter_mut().zip(shifts) {
            p.0 += s as f64 * period;
        }
    }
    let mut h = CMatrix::zeros(d, d);
    for &(lam, k) in &pairs {
        let v = q.column(k);
        h += (&v * v.adjoint()) * Complex64::new(lam, 0.0);
    }
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let full = HermitianOp::from_raw(u.n(), h);
    let mu = full.trace() / d as f64;
    let reconstructed = exp_minus_i(full.matrix(), t_final);
    let err = op_norm(&(reconstructed - m));
    if err > 1e-10 {
        return Err(Error::NotUnitary(err));
    }
    Ok(CanonicalHamiltonian {
        hamiltonian: full.traceless(),
        global_phase: -mu * t_final,
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
    })
}
