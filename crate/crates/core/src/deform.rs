//! Geodesic derivative with respect to the penalty q, and continuation in q towards a target.

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{canonical_hamiltonian, integrate_coeffs, GeodesicTrajectory};
use crate::jacobi::{endpoint_propagator, from_traceless_coeffs};
use crate::linalg::{op_norm, CMatrix, HermitianOp, RMatrix, RVector, UnitaryOp};
use crate::metric::{simpson, PenaltyMetric};
use crate::pauli::{PauliVector, PauliWord};

/// Singular values of 𝒥_T below this fraction of the largest are dropped by the pseudo-inverse.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-10;

/// Relative width in q at which the search for a σ_min(𝒥_T) minimum stops.
pub const REFINE_Q_TOL: f64 = 1e-7;

/// ‖U(T) − U_target‖ in operator norm, global phase included.
pub fn endpoint_error(traj: &GeodesicTrajectory, target: &UnitaryOp) -> f64 {
    op_norm(&(traj.u.last().expect("non-empty trajectory") - target.matrix()))
}

/// SVD-based solve of 𝒥x = b with a relative cutoff; also returns σ_min(𝒥).
fn pinv_solve(jt: &RMatrix, b: &RVector) -> (RVector, f64) {
    let svd = jt.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let x = svd.solve(b, PINV_RELATIVE_CUTOFF * smax).expect("U and V were computed");
    (x, smin)
}

fn traceless(v: &RVector) -> RVector {
    v.rows(1, v.len() - 1).into_owned()
}

fn with_identity(v: &RVector) -> RVector {
    let mut out = RVector::zeros(v.len() + 1);
    out.rows_mut(1, v.len()).copy_from(v);
    out
}

/// Result of a geodesic-derivative evaluation.
#[derive(Clone, Debug)]
pub struct GeodesicDerivative {
    /// Dγ = dH_q(0)/dq.
    pub dh: HermitianOp,
    /// Smallest singular value of 𝒥_T.
    pub sigma_min: f64,
    /// σ_min(𝒥_T) fell below the near-singular threshold and the pseudo-inverse was used.
    pub near_singular: bool,
}

fn check_family(metric: &PenaltyMetric, q: f64) -> Result<()> {
    if (metric.q() - q).abs() > 1e-12 * q.abs().max(1.0) {
        return Err(Error::InvalidMetric(format!("trajectory penalty {} differs from q = {q}", metric.q())));
    }
    if !(q >= 1.0) {
        return Err(Error::InvalidMetric(format!("q = {q} below 1")));
    }
    for k in 1..metric.dim() {
        let expected = if metric.is_hard(k) { q } else { 1.0 };
        if metric.penalty(k) != expected {
            return Err(Error::InvalidMetric("geodesic derivative needs a 𝒫 + q𝒬 family".into()));
        }
    }
    Ok(())
}

/// Dγ in traceless coefficients given the endpoint block 𝒥_T.
fn derivative_coeffs(traj: &GeodesicTrajectory, jt: &RMatrix) -> (RVector, f64) {
    let m = &traj.metric;
    let q = m.q();
    let t_final = traj.final_time();
    let alg = m.algebra();
    let h = traj.h(0);
    let pq = alg.icomm(m.p_coeffs(&h).as_slice(), m.q_coeffs(&h).as_slice());
    if pq.amax() <= 1e-14 * h.amax().powi(2).max(1.0) {
        // [𝒫H, 𝒬H] = 0: H stays a constant geodesic for every q
        let smin = jt.singular_values().min();
        return (RVector::zeros(alg.dim() - 1), smin);
    }
    if (q - 1.0).abs() <= 1e-12 {
        // ∫₀ᵀ U†(t)·it[𝒫H, 𝒬H]·U(t) dt
        let x = alg.compose(pq.as_slice());
        let samples: Vec<RVector> = (0..traj.len())
            .map(|k| {
                let u = &traj.u[k];
                let w: CMatrix = u.adjoint() * &x * u;
                alg.decompose(&w) * traj.times[k]
            })
            .collect();
        let b = RVector::from_fn(alg.dim() - 1, |i, _| {
            let vals: Vec<f64> = samples.iter().map(|s| s[i + 1]).collect();
            simpson(&traj.times, &vals).expect("valid grid")
        });
        pinv_solve(jt, &b)
    } else {
        let l0 = traceless(&traj.l[0]);
        let (x, smin) = pinv_solve(jt, &l0);
        ((x * t_final - l0) / (q * (q - 1.0)), smin)
    }
}

/// dH_q(0)/dq for the geodesic `traj` of the 𝒫 + q𝒬 metric, with its endpoint pinned.
/// `near_singular_threshold` is compared against σ_min(𝒥_T)/T.
pub fn geodesic_derivative(
    traj: &GeodesicTrajectory,
    q: f64,
    near_singular_threshold: f64,
) -> Result<GeodesicDerivative> {
    check_family(&traj.metric, q)?;
    let jt = endpoint_propagator(traj);
    let (dh, sigma_min) = derivative_coeffs(traj, &jt);
    let near_singular = sigma_min < near_singular_threshold * traj.final_time();
    if near_singular {
        warn!("near-singular endpoint propagator at q = {q}: sigma_min = {sigma_min:e}");
    }
    Ok(GeodesicDerivative { dh: from_traceless_coeffs(traj.n(), &dh), sigma_min, near_singular })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationOptions {
    /// RK4 steps per geodesic integration.
    pub steps: usize,
    pub nodes_per_decade: usize,
    /// Endpoint error every accepted node must meet.
    pub tolerance: f64,
    /// Corrector iterations per node before the step is densified.
    pub max_corrector: usize,
    /// Sub-steps used when a node is flagged or its corrector stalls.
    pub densify: usize,
    /// σ_min(𝒥_T)/T below this raises the near-singular flag.
    pub near_singular_threshold: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            steps: 500,
            nodes_per_decade: 64,
            tolerance: 1e-6,
            max_corrector: 6,
            densify: 4,
            near_singular_threshold: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeformationNode {
    pub q: f64,
    pub l0: PauliVector,
    pub length: f64,
    pub endpoint_error: f64,
    pub sigma_min_jt: f64,
    pub near_singular: bool,
    /// Newton corrector iterations applied at this node.
    pub corrector_steps: usize,
    /// Analytic dL_q(0)/dq.
    pub dl_dq: RVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeformationTrace {
    pub t_final: f64,
    /// Unit-determinant target the continuation actually reaches.
    pub target: UnitaryOp,
    pub nodes: Vec<DeformationNode>,
}

impl DeformationTrace {
    pub fn q_grid(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.q).collect()
    }

    pub fn final_node(&self) -> &DeformationNode {
        self.nodes.last().expect("non-empty trace")
    }

    /// Largest drop in length between consecutive nodes (zero when nondecreasing).
    pub fn max_length_decrease(&self) -> f64 {
        self.nodes.windows(2).map(|w| (w[0].length - w[1].length).max(0.0)).fold(0.0, f64::max)
    }

    /// First q whose node carries the near-singular flag.
    pub fn first_flagged_q(&self) -> Option<f64> {
        self.nodes.iter().find(|n| n.near_singular).map(|n| n.q)
    }

    pub fn to_csv(&self) -> String {
        let n = self.target.n();
        let dim = 1usize << (2 * n);
        let mut s = String::from("q,length,endpoint_error,sigma_min_JT,near_singular,corrector_steps");
        for k in 1..dim {
            s.push_str(&format!(",{}", PauliWord::from_index(n, k)));
        }
        s.push('\n');
        for node in &self.nodes {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
                node.q,
                node.length,
                node.endpoint_error,
                node.sigma_min_jt,
                u8::from(node.near_singular),
                node.corrector_steps
            ));
            for k in 1..dim {
                s.push_str(&format!(",{:.16e}", node.l0.coeffs[k]));
            }
            s.push('\n');
        }
        s
    }
}

/// Log-spaced grid 1 = q₀ < q₁ < … = q_end with `per_decade` nodes per decade.
pub fn q_grid(q_end: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(q_end >= 1.0) || per_decade == 0 {
        return Err(Error::BadGrid);
    }
    let total = q_end.log10() * per_decade as f64;
    let count = (total - 1e-9).ceil().max(0.0) as usize;
    let mut grid: Vec<f64> = (0..count).map(|k| 10f64.powf(k as f64 / per_decade as f64)).collect();
    if grid.is_empty() || q_end > 1.0 {
        grid.push(q_end);
    }
    grid.dedup();
    Ok(grid)
}

struct Continuation<'a> {
    base: &'a PenaltyMetric,
    target: UnitaryOp,
    t_final: f64,
    opts: &'a ContinuationOptions,
}

#[derive(Clone)]
struct Accepted {
    jt: RMatrix,
    node: DeformationNode,
}

impl Continuation<'_> {
    fn integrate(&self, l: &RVector, q: f64) -> Result<GeodesicTrajectory> {
        integrate_coeffs(l, &self.base.with_q(q), self.t_final, self.opts.steps)
    }

    /// Endpoint mismatch X with U_target = U(T)e^{−iX}, traceless coefficients.
    fn mismatch(&self, traj: &GeodesicTrajectory) -> Result<RVector> {
        let w = UnitaryOp::from_raw(traj.n(), traj.u.last().expect("non-empty").adjoint() * self.target.matrix());
        let x = canonical_hamiltonian(&w, 1.0, None)?;
        Ok(traceless(&traj.metric.algebra().decompose(x.hamiltonian.matrix())))
    }

    /// Chord-Newton corrector on L(0) using a fixed 𝒥_T; returns the corrected trajectory and
    /// the number of iterations, or None if the tolerance was not met.
    fn correct(&self, mut l: RVector, q: f64, jt: &RMatrix) -> Result<Option<(RVector, GeodesicTrajectory, usize)>> {
        let metric = self.base.with_q(q);
        let mut traj = self.integrate(&l, q)?;
        let mut err = endpoint_error(&traj, &self.target);
        let mut iters = 0;
        while err > 0.1 * self.opts.tolerance {
            if iters == self.opts.max_corrector {
                return Ok((err <= self.opts.tolerance).then_some((l, traj, iters)));
            }
            let x = self.mismatch(&traj)?;
            let (dh, _) = pinv_solve(jt, &x);
            l += metric.g_coeffs(&with_identity(&dh));
            traj = self.integrate(&l, q)?;
            let next = endpoint_error(&traj, &self.target);
            debug!("corrector at q = {q}: {err:e} -> {next:e}");
            iters += 1;
            if !(next < err) && next > self.opts.tolerance {
                return Ok(None);
            }
            err = next;
        }
        Ok(Some((l, traj, iters)))
    }

    fn accept(&self, l: RVector, traj: GeodesicTrajectory, iters: usize) -> Accepted {
        let q = traj.metric.q();
        let jt = endpoint_propagator(&traj);
        let (dh, sigma_min) = derivative_coeffs(&traj, &jt);
        let m = &traj.metric;
        let h = traj.h(0);
        let dl_dq = m.q_coeffs(&h) + m.g_coeffs(&with_identity(&dh));
        let node = DeformationNode {
            q,
            l0: PauliVector::from_coeffs(traj.n(), l).expect("dimension"),
            length: traj.length(),
            endpoint_error: endpoint_error(&traj, &self.target),
            sigma_min_jt: sigma_min,
            near_singular: sigma_min < self.opts.near_singular_threshold * self.t_final,
            corrector_steps: iters,
            dl_dq,
        };
        debug!("q = {q:.6}: length {:.10}, error {:e}, sigma_min {sigma_min:e}", node.length, node.endpoint_error);
        Accepted { jt, node }
    }

    /// Golden-section search for the minimum of σ_min(𝒥_T) over q between two accepted nodes.
    /// Geodesics at trial values start from the linear interpolant of the bracketing L(0).
    fn refine_minimum(&self, left: &Accepted, right: &Accepted) -> Result<Option<Accepted>> {
        let (qa, qb) = (left.node.q, right.node.q);
        let solve = |q: f64| -> Result<Option<Accepted>> {
            let w = (q - qa) / (qb - qa);
            let l = &left.node.l0.coeffs * (1.0 - w) + &right.node.l0.coeffs * w;
            let jt = if w < 0.5 { &left.jt } else { &right.jt };
            Ok(self.correct(l, q, jt)?.map(|(l, traj, iters)| self.accept(l, traj, iters)))
        };
        let sigma = |a: &Option<Accepted>| a.as_ref().map_or(f64::INFINITY, |a| a.node.sigma_min_jt);
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (qa, qb);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let mut fc = solve(c)?;
        let mut fd = solve(d)?;
        while b - a > REFINE_Q_TOL * b {
            if sigma(&fc) < sigma(&fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = solve(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = solve(d)?;
            }
        }
        let best = if sigma(&fc) < sigma(&fd) { fc } else { fd };
        if let Some(b) = &best {
            debug!("refined sigma_min minimum at q = {}: {:e}", b.node.q, b.node.sigma_min_jt);
        }
        Ok(best)
    }

    /// Euler predictor in q followed by the corrector, from `from` to `q`.
    fn advance(&self, from: &Accepted, q: f64) -> Result<Option<Accepted>> {
        let l = &from.node.l0.coeffs + &from.node.dl_dq * (q - from.node.q);
        Ok(self.correct(l, q, &from.jt)?.map(|(l, traj, iters)| self.accept(l, traj, iters)))
    }
}

/// Follows the geodesic through `target` from q = 1 to `q_end` on `base.with_q(q)`.
///
/// The target is normalized to unit determinant; without `h_start` the starting Hamiltonian is the
/// canonical one and the continuation reaches exp(−iH_canon T).
pub fn continue_in_q(
    target: &UnitaryOp,
    base: &PenaltyMetric,
    t_final: f64,
    q_end: f64,
    h_start: Option<&HermitianOp>,
    opts: &ContinuationOptions,
) -> Result<DeformationTrace> {
    if target.n() != base.n() {
        return Err(Error::LengthMismatch(target.n(), base.n()));
    }
    let special = target.special();
    let (h0, effective) = match h_start {
        None => {
            let ch = canonical_hamiltonian(&special, t_final, None)?;
            if ch.global_phase.abs() > 1e-12 {
                info!("canonical Hamiltonian carries global phase {}", ch.global_phase);
            }
            let eff = ch.special_target(t_final);
            (ch.hamiltonian, eff)
        }
        Some(h) => {
            let h = h.traceless();
            let reached = h.evolve(t_final);
            // align the determinant branch of the target with exp(−iHT)
            let d = 1usize << target.n();
            let phase = (0..d)
                .map(|k| num_complex::Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64))
                .min_by(|a, b| {
                    let ea = op_norm(&(special.matrix() * *a - reached.matrix()));
                    let eb = op_norm(&(special.matrix() * *b - reached.matrix()));
                    ea.total_cmp(&eb)
                })
                .expect("at least one root");
            (h, UnitaryOp::from_raw(target.n(), special.matrix() * phase))
        }
    };
    let ctx = Continuation { base, target: effective.clone(), t_final, opts };
    let grid = q_grid(q_end, opts.nodes_per_decade)?;
    let alg = base.algebra();
    let l_start = base.with_q(1.0).g_coeffs(&alg.decompose(h0.matrix()));
    let traj = ctx.integrate(&l_start, 1.0)?;
    let jt = endpoint_propagator(&traj);
    let (l, traj, iters) = ctx
        .correct(l_start, 1.0, &jt)?
        .ok_or_else(|| Error::ContinuationFailed { q: 1.0, error: endpoint_error(&traj, &effective) })?;
    let mut current = ctx.accept(l, traj, iters);
    let mut nodes = vec![current.node.clone()];
    let mut recent: Vec<Accepted> = Vec::new();
    for &q in &grid[1..] {
        let direct = if current.node.near_singular { None } else { ctx.advance(&current, q)? };
        let mut accepted = Vec::new();
        match direct {
            Some(a) if !a.node.near_singular => accepted.push(a),
            _ => {
                // densify between current.q and q
                let q0 = current.node.q;
                let mut sub = current.clone();
                for s in 1..=opts.densify {
                    let qs = q0 * (q / q0).powf(s as f64 / opts.densify as f64);
                    let a =
                        ctx.advance(&sub, qs)?.ok_or_else(|| Error::ContinuationFailed { q: qs, error: f64::NAN })?;
                    accepted.push(a.clone());
                    sub = a;
                }
            }
        }
        for a in accepted {
            nodes.push(a.node.clone());
            recent.push(a);
            if recent.len() > 3 {
                recent.remove(0);
            }
            if let [left, mid, right] = &recent[..] {
                let s = |a: &Accepted| a.node.sigma_min_jt;
                if s(mid) < s(left) && s(mid) < s(right) && !mid.node.near_singular {
                    if let Some(r) = ctx.refine_minimum(left, right)? {
                        if r.node.sigma_min_jt < s(mid) {
                            let at = nodes.iter().position(|n| n.q > r.node.q).unwrap_or(nodes.len());
                            nodes.insert(at, r.node);
                        }
                    }
                }
            }
        }
        current = recent.last().expect("at least one accepted node").clone();
    }
    let trace = DeformationTrace { t_final, target: effective, nodes };
    let worst = trace.max_length_decrease();
    if worst > 1e-6 {
        warn!("geodesic length decreased by {worst:e} along the continuation");
    }
    Ok(trace)
}
