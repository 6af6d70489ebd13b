//! Jacobi and lifted Jacobi fields along right-invariant geodesics, and conjugate points.
//!
//! Fields use the Hamiltonian representation: a neighbouring curve is Ũ(t) = U(t)e^{−iΔJ(t)},
//! whose Hamiltonian is H + ΔK with K = UJ̇U†. In coefficient space K obeys
//! K̇ = 𝒜K − C with 𝒜 = ℱ(ad_L − ad_H∘𝒢) and drive C = ℱ(𝒬ℱ(i[L,H]) + i[H,𝒬H]).

use std::collections::VecDeque;

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::geodesic::{constant_h_defect, is_constant_h_geodesic, rk4_step, GeodesicTrajectory};
use crate::linalg::{exp_minus_i, identity, CMatrix, HermitianOp, RMatrix, RVector};
use crate::metric::PenaltyMetric;
use crate::pauli::{Letter, PauliAlgebra, PauliVector, PauliWord};

/// Relative step-halving tolerance for lifted Jacobi integration.
pub const LIFTED_GRID_TOL: f64 = 1e-7;
/// A refined local minimum of σ_min(E₂) below this fraction of the scan median is a conjugate point.
pub const DIP_RELATIVE_THRESHOLD: f64 = 1e-4;

/// Traceless Pauli coefficients of `h` (the identity component is dropped).
pub fn traceless_coeffs(h: &HermitianOp) -> RVector {
    let v = PauliAlgebra::get(h.n()).decompose(h.matrix());
    v.rows(1, v.len() - 1).into_owned()
}

pub fn from_traceless_coeffs(n: usize, v: &RVector) -> HermitianOp {
    let alg = PauliAlgebra::get(n);
    let mut full = vec![0.0; alg.dim()];
    full[1..].copy_from_slice(v.as_slice());
    HermitianOp::from_raw(n, alg.compose(&full))
}

fn traceless_block(m: &RMatrix) -> RMatrix {
    let d = m.nrows() - 1;
    m.view((1, 1), (d, d)).into_owned()
}

/// Coefficient-space data of the lifted Jacobi equation at one geodesic state.
struct Frame {
    a: RMatrix,
    /// X ↦ U†XU
    ad: RMatrix,
    c: RVector,
}

fn frame(l: &RVector, u: &CMatrix, metric: &PenaltyMetric) -> Frame {
    let alg = metric.algebra();
    let d = alg.dim() - 1;
    let p = metric.penalties();
    let h = metric.f_coeffs(l);
    let ad_l = alg.ad_matrix(l.as_slice());
    let ad_h = alg.ad_matrix(h.as_slice());
    let a = RMatrix::from_fn(d, d, |r, c| (ad_l[(r + 1, c + 1)] - ad_h[(r + 1, c + 1)] * p[c + 1]) / p[r + 1]);
    let ad = traceless_block(&alg.conjugation_matrix(&u.adjoint()));
    let lh = alg.icomm(l.as_slice(), h.as_slice());
    let mut inner = metric.q_coeffs(&metric.f_coeffs(&lh));
    let qh = metric.q_coeffs(&h);
    alg.icomm_acc(h.as_slice(), qh.as_slice(), 1.0, inner.as_mut_slice());
    let c = metric.f_coeffs(&inner);
    Frame { a, ad, c: c.rows(1, d).into_owned() }
}

fn stage_frames(traj: &GeodesicTrajectory, node: usize, dt: f64) -> [Frame; 4] {
    let step = rk4_step(&traj.l[node], &traj.u[node], dt, &traj.metric);
    let f = |i: usize| frame(&step.stage_l[i], &step.stage_u[i], &traj.metric);
    [f(0), f(1), f(2), f(3)]
}

/// One RK4 step of K̇ = 𝒜K − C, J̇ = Ad_{U†}K, the drive subtracted from every column.
fn jacobi_step(fr: &[Frame; 4], k: &RMatrix, j: &RMatrix, dt: f64, drive: bool) -> (RMatrix, RMatrix) {
    let fk = |f: &Frame, k: &RMatrix| {
        let mut r = &f.a * k;
        if drive {
            for mut col in r.column_iter_mut() {
                col -= &f.c;
            }
        }
        r
    };
    let k1 = fk(&fr[0], k);
    let j1 = &fr[0].ad * k;
    let s2 = k + &k1 * (0.5 * dt);
    let k2 = fk(&fr[1], &s2);
    let j2 = &fr[1].ad * &s2;
    let s3 = k + &k2 * (0.5 * dt);
    let k3 = fk(&fr[2], &s3);
    let j3 = &fr[2].ad * &s3;
    let s4 = k + &k3 * dt;
    let k4 = fk(&fr[3], &s4);
    let j4 = &fr[3].ad * &s4;
    let k_next = k + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    let j_next = j + (j1 + j2 * 2.0 + j3 * 2.0 + j4) * (dt / 6.0);
    (k_next, j_next)
}

/// Integrates (K, J) along every `stride`-th trajectory node, calling `visit(node, K, J)` at
/// node 0 and after every step.
fn propagate<F: FnMut(usize, &RMatrix, &RMatrix)>(
    traj: &GeodesicTrajectory,
    stride: usize,
    k0: RMatrix,
    j0: RMatrix,
    drive: bool,
    mut visit: F,
) -> (RMatrix, RMatrix) {
    let (mut k, mut j) = (k0, j0);
    visit(0, &k, &j);
    let mut node = 0;
    while node + stride < traj.len() {
        let dt = traj.times[node + stride] - traj.times[node];
        let fr = stage_frames(traj, node, dt);
        (k, j) = jacobi_step(&fr, &k, &j, dt, drive);
        node += stride;
        visit(node, &k, &j);
    }
    (k, j)
}

/// Lifted Jacobi field: J, K = UJ̇U† and the drive C at every trajectory node.
#[derive(Clone, Debug)]
pub struct LiftedField {
    pub times: Vec<f64>,
    pub j: Vec<HermitianOp>,
    pub k: Vec<HermitianOp>,
    /// Drive entering the equation (zero for the conventional Jacobi equation).
    pub c: Vec<HermitianOp>,
    pub jdot0: HermitianOp,
}

impl LiftedField {
    pub fn final_j(&self) -> &HermitianOp {
        self.j.last().expect("non-empty field")
    }
}

/// Solves the lifted Jacobi equation along `traj` with 𝒢′ = 𝒬. With `include_inhomogeneous`
/// false the drive is dropped and the conventional Jacobi field results. Trace parts of the
/// initial data are ignored.
pub fn lifted_jacobi_solve(
    traj: &GeodesicTrajectory,
    j0: &HermitianOp,
    jdot0: &HermitianOp,
    include_inhomogeneous: bool,
) -> Result<LiftedField> {
    let n = traj.n();
    if j0.n() != n || jdot0.n() != n {
        return Err(Error::LengthMismatch(j0.n().max(jdot0.n()), n));
    }
    let jv = traceless_coeffs(j0);
    let kv = traceless_coeffs(jdot0);
    let d = jv.len();
    let mut js = Vec::with_capacity(traj.len());
    let mut ks = Vec::with_capacity(traj.len());
    let (kf, jf) = propagate(
        traj,
        1,
        RMatrix::from_column_slice(d, 1, kv.as_slice()),
        RMatrix::from_column_slice(d, 1, jv.as_slice()),
        include_inhomogeneous,
        |_, k, j| {
            ks.push(k.column(0).into_owned());
            js.push(j.column(0).into_owned());
        },
    );
    if traj.len() >= 5 && (traj.len() - 1) % 2 == 0 {
        let (_, jc) = propagate(
            traj,
            2,
            RMatrix::from_column_slice(d, 1, kv.as_slice()),
            RMatrix::from_column_slice(d, 1, jv.as_slice()),
            include_inhomogeneous,
            |_, _, _| {},
        );
        let scale = jf.amax().max(kf.amax()).max(1.0);
        let estimate = (&jf - jc).amax() / 15.0;
        let tol = LIFTED_GRID_TOL * scale;
        if estimate > tol {
            return Err(Error::GridTooCoarse { estimate, tol });
        }
    }
    let cs = (0..traj.len())
        .map(|i| {
            if include_inhomogeneous {
                from_traceless_coeffs(n, &frame(&traj.l[i], &traj.u[i], &traj.metric).c)
            } else {
                HermitianOp::zeros(n)
            }
        })
        .collect();
    Ok(LiftedField {
        times: traj.times.clone(),
        j: js.iter().map(|v| from_traceless_coeffs(n, v)).collect(),
        k: ks.iter().map(|v| from_traceless_coeffs(n, v)).collect(),
        c: cs,
        jdot0: from_traceless_coeffs(n, &kv),
    })
}

/// Homogeneous Jacobi propagator on traceless Pauli coefficients, stored at selected nodes.
///
/// In this representation E₁ = I and E₃ = 0; E₂ = 𝒥_t maps J̇(0) to J(t), E₄ maps J̇(0) to
/// J̇(t), and 𝒦_t maps K(0) to K(t).
#[derive(Clone, Debug)]
pub struct JacobiPropagator {
    pub base: GeodesicTrajectory,
    /// Trajectory node index of every stored block.
    pub nodes: Vec<usize>,
    pub e2: Vec<RMatrix>,
    pub e4: Vec<RMatrix>,
    pub k: Vec<RMatrix>,
}

impl JacobiPropagator {
    pub fn dim(&self) -> usize {
        self.base.metric.dim() - 1
    }

    pub fn time(&self, i: usize) -> f64 {
        self.base.times[self.nodes[i]]
    }

    pub fn e1(&self, _i: usize) -> RMatrix {
        RMatrix::identity(self.dim(), self.dim())
    }

    pub fn e3(&self, _i: usize) -> RMatrix {
        RMatrix::zeros(self.dim(), self.dim())
    }

    /// Full 2(4ⁿ−1)-square propagator E_t.
    pub fn block(&self, i: usize) -> RMatrix {
        let d = self.dim();
        let mut e = RMatrix::zeros(2 * d, 2 * d);
        e.view_mut((0, 0), (d, d)).fill_with_identity();
        e.view_mut((0, d), (d, d)).copy_from(&self.e2[i]);
        e.view_mut((d, d), (d, d)).copy_from(&self.e4[i]);
        e
    }

    pub fn apply(&self, i: usize, j0: &RVector, jdot0: &RVector) -> (RVector, RVector) {
        (j0 + &self.e2[i] * jdot0, &self.e4[i] * jdot0)
    }

    pub fn apply_op(&self, i: usize, j0: &HermitianOp, jdot0: &HermitianOp) -> (HermitianOp, HermitianOp) {
        let n = self.base.n();
        let (j, jd) = self.apply(i, &traceless_coeffs(j0), &traceless_coeffs(jdot0));
        (from_traceless_coeffs(n, &j), from_traceless_coeffs(n, &jd))
    }
}

/// Propagator blocks at every trajectory node.
pub fn jacobi_propagator(traj: &GeodesicTrajectory) -> JacobiPropagator {
    let nodes: Vec<usize> = (0..traj.len()).collect();
    jacobi_propagator_at(traj, &nodes).expect("all nodes are valid")
}

/// Propagator blocks at the given (increasing) trajectory nodes only.
pub fn jacobi_propagator_at(traj: &GeodesicTrajectory, nodes: &[usize]) -> Result<JacobiPropagator> {
    if nodes.windows(2).any(|w| w[1] <= w[0]) || nodes.last().is_some_and(|&k| k >= traj.len()) {
        return Err(Error::BadGrid);
    }
    let d = traj.metric.dim() - 1;
    let alg = traj.metric.algebra();
    let mut out = JacobiPropagator { base: traj.clone(), nodes: nodes.to_vec(), e2: vec![], e4: vec![], k: vec![] };
    let mut next = 0;
    propagate(traj, 1, RMatrix::identity(d, d), RMatrix::zeros(d, d), false, |node, k, j| {
        if next < nodes.len() && nodes[next] == node {
            let ad = traceless_block(&alg.conjugation_matrix(&traj.u[node].adjoint()));
            out.e2.push(j.clone());
            out.e4.push(ad * k);
            out.k.push(k.clone());
            next += 1;
        }
    });
    Ok(out)
}

/// 𝒥_T, the endpoint block E₂ of the propagator.
pub fn endpoint_propagator(traj: &GeodesicTrajectory) -> RMatrix {
    let last = traj.len() - 1;
    jacobi_propagator_at(traj, &[last]).expect("valid node").e2.pop().expect("one block")
}

/// Matrix P(t) with J(t) = J(0) + P(t)J̇(0) along the constant-H geodesic e^{−iHt}.
///
/// P(t) = ∫₀ᵗ e^{r·ad_H}e^{r𝒜}dr is the top-right block of a block-triangular exponential.
pub fn constant_h_propagator(h: &HermitianOp, metric: &PenaltyMetric, t: f64) -> Result<RMatrix> {
    if h.n() != metric.n() {
        return Err(Error::LengthMismatch(h.n(), metric.n()));
    }
    if !is_constant_h_geodesic(h, metric)? {
        return Err(Error::NotConstantH(constant_h_defect(h, metric)?));
    }
    let alg = metric.algebra();
    let d = alg.dim() - 1;
    let mut hv = alg.decompose(h.matrix());
    hv[0] = 0.0;
    let lv = metric.g_coeffs(&hv);
    let hd = alg.hilbert_dim();
    let a = frame(&lv, &identity(hd), metric).a;
    let x = traceless_block(&alg.ad_matrix(hv.as_slice()));
    let mut big = RMatrix::zeros(2 * d, 2 * d);
    big.view_mut((0, 0), (d, d)).copy_from(&(-x * t));
    big.view_mut((0, d), (d, d)).fill_diagonal(t);
    big.view_mut((d, d), (d, d)).copy_from(&(a * t));
    let e = big.exp();
    let f = e.view((0, d), (d, d)).into_owned();
    let u = exp_minus_i(h.matrix(), t);
    let ad = traceless_block(&alg.conjugation_matrix(&u.adjoint()));
    Ok(ad * f)
}

/// Closed-form Jacobi field J(t) along the constant-H geodesic e^{−iHt}, where the lifted and
/// conventional equations coincide.
pub fn constant_h_closed_form(
    h: &HermitianOp,
    metric: &PenaltyMetric,
    j0: &HermitianOp,
    jdot0: &HermitianOp,
    t: f64,
) -> Result<HermitianOp> {
    let p = constant_h_propagator(h, metric, t)?;
    let j = traceless_coeffs(j0) + p * traceless_coeffs(jdot0);
    Ok(from_traceless_coeffs(h.n(), &j))
}

/// All t_c = 2mπ/(λ_j − λ_k) in (0, t_max], sorted and deduplicated within 1e-10.
pub fn biinvariant_conjugate_times(h: &HermitianOp, t_max: f64) -> Vec<f64> {
    let eig = h.matrix().clone().symmetric_eigen();
    let vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut gaps = Vec::new();
    for (i, a) in vals.iter().enumerate() {
        for b in &vals[i + 1..] {
            let g = (a - b).abs();
            if g > 1e-10 * scale {
                gaps.push(g);
            }
        }
    }
    if gaps.is_empty() {
        warn!("fully degenerate spectrum: no conjugate points");
        return vec![];
    }
    let mut times = Vec::new();
    let tau = 2.0 * std::f64::consts::PI;
    for g in gaps {
        let mut m = 1.0;
        while tau * m / g <= t_max * (1.0 + 1e-12) {
            times.push(tau * m / g);
            m += 1.0;
        }
    }
    times.sort_by(|a, b| a.total_cmp(b));
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-10);
    times
}

/// Transverse-field Ising chain Σ Z_jZ_{j+1} + hΣX_j; `periodic` adds the Z_nZ_1 bond for n > 2.
pub fn transverse_ising(n: usize, field: f64, periodic: bool) -> HermitianOp {
    let mut v = PauliVector::zeros(n);
    let bonds = if periodic && n > 2 { n } else { n.saturating_sub(1) };
    for j in 0..bonds {
        let mut letters = vec![Letter::I; n];
        letters[j] = Letter::Z;
        letters[(j + 1) % n] = Letter::Z;
        v.set(&PauliWord::new(letters), 1.0);
    }
    for j in 0..n {
        v.set(&PauliWord::single(n, j, Letter::X), field);
    }
    v.compose()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanPoint {
    pub t: f64,
    pub sigma_min: f64,
    pub min_abs_eig: f64,
    pub dip: bool,
}

/// A local minimum of σ_min(E₂), resolved on a subdivided grid and refined.
#[derive(Clone, Debug, PartialEq)]
pub struct ConjugateDip {
    pub t: f64,
    pub sigma_min: f64,
    /// Index of the grid point nearest the minimum.
    pub index: usize,
}

#[derive(Clone, Debug)]
pub struct ConjugateScan {
    pub points: Vec<ScanPoint>,
    /// Every refined local minimum, flagged or not.
    pub candidates: Vec<ConjugateDip>,
    /// Refined minima below the threshold.
    pub dips: Vec<ConjugateDip>,
    pub threshold: f64,
    /// Grid intervals whose σ_min jump exceeds 10× the neighbouring jumps.
    pub aliasing: Vec<usize>,
}

impl ConjugateScan {
    pub fn first_conjugate_time(&self) -> Option<f64> {
        self.dips.first().map(|d| d.t)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,sigma_min,min_abs_eig,dip\n");
        for p in &self.points {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e},{}\n", p.t, p.sigma_min, p.min_abs_eig, u8::from(p.dip)));
        }
        s
    }
}

struct Snapshot {
    node: usize,
    k: RMatrix,
    j: RMatrix,
}

/// E₂ at an arbitrary time, integrating forward from a stored node state.
fn e2_at(traj: &GeodesicTrajectory, snap: &Snapshot, t: f64) -> RMatrix {
    let (mut k, mut j) = (snap.k.clone(), snap.j.clone());
    let mut node = snap.node;
    while node + 1 < traj.len() && traj.times[node + 1] <= t {
        let dt = traj.times[node + 1] - traj.times[node];
        (k, j) = jacobi_step(&stage_frames(traj, node, dt), &k, &j, dt, false);
        node += 1;
    }
    let tau = t - traj.times[node];
    if tau > 0.0 {
        (_, j) = jacobi_step(&stage_frames(traj, node, tau), &k, &j, tau, false);
    }
    j
}

/// Smallest eigenvalue magnitude; NaN when the eigenvalue iteration fails.
fn min_abs_eigenvalue(m: &RMatrix) -> f64 {
    let f = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    match f.eigenvalues() {
        Ok(v) => v.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min),
        Err(e) => {
            warn!("eigenvalue iteration failed: {e:?}");
            f64::NAN
        }
    }
}

fn sigma_min(m: &RMatrix) -> f64 {
    m.singular_values().min()
}

fn golden_min<F: FnMut(f64) -> f64>(mut a: f64, mut b: f64, mut f: F) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if b - a <= 1e-13 * (1.0 + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn grid_nodes(traj: &GeodesicTrajectory, grid: &[f64]) -> Result<Vec<usize>> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) || traj.len() < 2 {
        return Err(Error::BadGrid);
    }
    let dt = traj.times[1] - traj.times[0];
    grid.iter()
        .map(|&t| {
            let k = (t / dt).round();
            if k < 0.0 || k as usize >= traj.len() || (traj.times[k as usize] - t).abs() > 1e-9 * dt.max(t.abs()) {
                Err(Error::BadGrid)
            } else {
                Ok(k as usize)
            }
        })
        .collect()
}

/// Sub-intervals per grid interval when a grid minimum is resolved into individual zeros.
pub const DIP_SUBDIVISION: usize = 8;

/// Local minima of σ_min(E₂) on a subdivided window around a grid minimum, each refined by golden
/// section. Clustered conjugate times that the grid merges into one minimum come out separately.
fn resolve_window(traj: &GeodesicTrajectory, start: &Snapshot, times: &[f64]) -> Vec<(f64, f64)> {
    let mut fine = Vec::with_capacity(times.len() * DIP_SUBDIVISION);
    for w in times.windows(2) {
        for i in 0..DIP_SUBDIVISION {
            fine.push(w[0] + (w[1] - w[0]) * i as f64 / DIP_SUBDIVISION as f64);
        }
    }
    fine.push(*times.last().expect("non-empty window"));
    let vals: Vec<f64> = fine.iter().map(|&t| sigma_min(&e2_at(traj, start, t))).collect();
    let mut out = Vec::new();
    for i in 1..fine.len() - 1 {
        if vals[i] < vals[i - 1] && vals[i] <= vals[i + 1] {
            let (tr, vr) = golden_min(fine[i - 1], fine[i + 1], |t| sigma_min(&e2_at(traj, start, t)));
            out.push(if vr < vals[i] { (tr, vr) } else { (fine[i], vals[i]) });
        }
    }
    out
}

/// Smallest singular value and smallest-magnitude eigenvalue of E₂ on `grid` (which must consist
/// of trajectory node times), with conjugate points flagged.
pub fn conjugate_scan(traj: &GeodesicTrajectory, grid: &[f64]) -> Result<ConjugateScan> {
    let nodes = grid_nodes(traj, grid)?;
    let d = traj.metric.dim() - 1;
    let mut points: Vec<ScanPoint> = Vec::with_capacity(grid.len());
    let mut candidates: Vec<ConjugateDip> = Vec::new();
    let mut snaps: VecDeque<Snapshot> = VecDeque::with_capacity(4);
    let mut g = 0;
    propagate(traj, 1, RMatrix::identity(d, d), RMatrix::zeros(d, d), false, |node, k, j| {
        if g >= nodes.len() || nodes[g] != node {
            return;
        }
        let t = traj.times[node];
        let min_abs_eig = min_abs_eigenvalue(j);
        points.push(ScanPoint { t, sigma_min: sigma_min(j), min_abs_eig, dip: false });
        if snaps.len() == 4 {
            snaps.pop_front();
        }
        snaps.push_back(Snapshot { node, k: k.clone(), j: j.clone() });
        if g >= 2 && points[g - 2].t > 0.0 {
            let (left, mid, right) = (&points[g - 2], &points[g - 1], &points[g]);
            if mid.sigma_min < left.sigma_min && mid.sigma_min < right.sigma_min {
                let first = g + 1 - snaps.len();
                let last = (g + 1).min(nodes.len() - 1);
                let window: Vec<f64> = (first..=last).map(|i| traj.times[nodes[i]]).collect();
                for (t, sigma_min) in resolve_window(traj, &snaps[0], &window) {
                    let dt = window[1] - window[0];
                    if candidates.iter().any(|c| (c.t - t).abs() <= 1e-3 * dt) {
                        continue;
                    }
                    debug!("local minimum of sigma_min near t = {t}: {sigma_min:e}");
                    candidates.push(ConjugateDip { t, sigma_min, index: 0 });
                }
            }
        }
        g += 1;
    });
    candidates.sort_by(|a, b| a.t.total_cmp(&b.t));
    for c in &mut candidates {
        let i = points.partition_point(|p| p.t < c.t).min(points.len() - 1);
        c.index = if i > 0 && (c.t - points[i - 1].t) < (points[i].t - c.t) { i - 1 } else { i };
    }
    let mut positive: Vec<f64> = points.iter().filter(|p| p.t > 0.0).map(|p| p.sigma_min).collect();
    positive.sort_by(|a, b| a.total_cmp(b));
    let median = if positive.is_empty() { 0.0 } else { positive[positive.len() / 2] };
    let threshold = DIP_RELATIVE_THRESHOLD * median;
    let dips: Vec<ConjugateDip> = candidates.iter().filter(|c| c.sigma_min < threshold).cloned().collect();
    for dip in &dips {
        points[dip.index].dip = true;
    }
    let jumps: Vec<f64> = points.windows(2).map(|w| (w[1].sigma_min - w[0].sigma_min).abs()).collect();
    let aliasing: Vec<usize> = (1..jumps.len().saturating_sub(1))
        .filter(|&i| points[i].t > 0.0 && jumps[i] > 1e-12 && jumps[i] > 10.0 * jumps[i - 1].max(jumps[i + 1]))
        .collect();
    if !aliasing.is_empty() {
        warn!("sigma_min jumps faster than its neighbours on {} grid intervals", aliasing.len());
    }
    Ok(ConjugateScan { points, candidates, dips, threshold, aliasing })
}
