//! Formal power series |L(t)) = Σ_j Π_k T_k(E⊗I^{k−1})|L(0))^{⊗(j+1)} t^j/j!.
//!
//! Tensors live on the traceless coefficient space of dimension m = 4ⁿ − 1, first system
//! most significant in the flat layout.

use crate::error::{Error, Result};
use crate::linalg::{HermitianOp, RVector};
use crate::metric::PenaltyMetric;

/// Largest tensor (number of f64 entries) a series evaluation may allocate.
pub const MAX_TENSOR_ENTRIES: usize = 1 << 25;
pub const MAX_ORDER: usize = 8;

/// Sparse form of the bilinear map E(|X)⊗|Y)) = |i[X, ℱY]).
#[derive(Clone, Debug)]
pub struct PowerSeriesContext {
    m: usize,
    n: usize,
    order: usize,
    /// (a, b, c, weight): E maps e_a⊗e_b to weight·e_c
    entries: Vec<(usize, usize, usize, f64)>,
}

impl PowerSeriesContext {
    pub fn new(metric: &PenaltyMetric, order: usize) -> Result<Self> {
        let n = metric.n();
        let m = metric.dim() - 1;
        let too_big = order > MAX_ORDER
            || (order > 4 && n > 2)
            || (m as f64).powi(order.max(1) as i32) > MAX_TENSOR_ENTRIES as f64;
        if too_big {
            return Err(Error::OrderTooLarge { order, n });
        }
        let entries = metric
            .algebra()
            .entries()
            .iter()
            .map(|e| {
                let (a, b, c) = (e.a as usize, e.b as usize, e.c as usize);
                (a - 1, b - 1, c - 1, e.coef / metric.penalty(b))
            })
            .collect();
        Ok(Self { m, n, order, entries })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// E(x⊗y) on traceless coefficient vectors.
    pub fn apply_e(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for &(a, b, c, w) in &self.entries {
            out[c] += w * x[a] * y[b];
        }
        out
    }

    /// (E ⊗ I^{⊗r}) on a tensor of r + 2 systems.
    fn contract_first_pair(&self, x: &[f64], r: usize) -> Vec<f64> {
        let tail = self.m.pow(r as u32);
        let mut out = vec![0.0; self.m * tail];
        for &(a, b, c, w) in &self.entries {
            let src = &x[(a * self.m + b) * tail..(a * self.m + b + 1) * tail];
            let dst = &mut out[c * tail..(c + 1) * tail];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
        out
    }

    /// T_k = I + S_{1,2} + … + S_{1,k} on a tensor of k systems.
    fn symmetrize(&self, x: &[f64], k: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = x.to_vec();
        let lead = m.pow(k as u32 - 1);
        for p in 2..=k {
            let stride = m.pow((k - p) as u32);
            for (idx, o) in out.iter_mut().enumerate() {
                let d1 = idx / lead;
                let dp = (idx / stride) % m;
                let swapped = idx + dp * lead + d1 * stride - d1 * lead - dp * stride;
                *o += x[swapped];
            }
        }
        out
    }

    /// Taylor coefficients L^{(j)}(0), j = 0..=order, as traceless coefficient vectors.
    pub fn derivatives(&self, l0: &[f64]) -> Vec<Vec<f64>> {
        let mut out = vec![l0.to_vec()];
        if self.order == 0 {
            return out;
        }
        let ldot = self.apply_e(l0, l0);
        out.push(ldot.clone());
        for j in 2..=self.order {
            // (E⊗I^{j−1})|L)^{⊗(j+1)} = |L̇)⊗|L)^{⊗(j−1)}
            let mut x = ldot.clone();
            for _ in 1..j {
                let mut next = Vec::with_capacity(x.len() * self.m);
                for &xi in &x {
                    next.extend(l0.iter().map(|&li| xi * li));
                }
                x = next;
            }
            for k in (2..=j).rev() {
                x = self.symmetrize(&x, k);
                x = self.contract_first_pair(&x, k - 2);
            }
            out.push(x);
        }
        out
    }

    pub fn evaluate(&self, l0: &[f64], t: f64) -> Vec<f64> {
        let mut sum = vec![0.0; self.m];
        let mut factor = 1.0;
        for (j, d) in self.derivatives(l0).iter().enumerate() {
            if j > 0 {
                factor *= t / j as f64;
            }
            for (s, v) in sum.iter_mut().zip(d) {
                *s += factor * v;
            }
        }
        sum
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Truncated power-series value of L(t) for the geodesic through L0.
pub fn power_series_l(l0: &HermitianOp, metric: &PenaltyMetric, order: usize, t: f64) -> Result<HermitianOp> {
    if l0.n() != metric.n() {
        return Err(Error::LengthMismatch(l0.n(), metric.n()));
    }
    let ctx = PowerSeriesContext::new(metric, order)?;
    let alg = metric.algebra();
    let lv = alg.decompose(l0.matrix());
    let val = ctx.evaluate(&lv.as_slice()[1..], t);
    let mut full = RVector::zeros(alg.dim());
    full.as_mut_slice()[1..].copy_from_slice(&val);
    Ok(HermitianOp::from_raw(l0.n(), alg.compose(full.as_slice())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::integrate_coeffs;
    use crate::linalg::random_hermitian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_l0(n: usize, seed: u64) -> RVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = HermitianOp::new(random_hermitian(1 << n, &mut rng)).unwrap().traceless();
        let mut v = crate::pauli::PauliAlgebra::get(n).decompose(h.matrix());
        v[0] = 0.0;
        v
    }

    #[test]
    fn e_reproduces_the_geodesic_bracket() {
        let m = PenaltyMetric::standard(2, 8.0);
        let ctx = PowerSeriesContext::new(&m, 2).unwrap();
        let l = random_l0(2, 1);
        let e = ctx.apply_e(&l.as_slice()[1..], &l.as_slice()[1..]);
        let direct = m.algebra().icomm(l.as_slice(), m.f_coeffs(&l).as_slice());
        for k in 0..15 {
            assert!((e[k] - direct[k + 1]).abs() < 1e-12);
        }
        assert!(direct[0].abs() < 1e-15);
    }

    #[test]
    fn order_zero_and_bi_invariant() {
        let l = random_l0(2, 2);
        let m = PenaltyMetric::standard(2, 8.0);
        let ctx = PowerSeriesContext::new(&m, 0).unwrap();
        assert_eq!(ctx.evaluate(&l.as_slice()[1..], 0.3), l.as_slice()[1..].to_vec());
        let m1 = PenaltyMetric::standard(2, 1.0);
        let ctx = PowerSeriesContext::new(&m1, 5).unwrap();
        let v = ctx.evaluate(&l.as_slice()[1..], 0.3);
        for k in 0..15 {
            assert!((v[k] - l[k + 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn second_derivative_matches_direct_formula() {
        // L̈ = E(L̇⊗L) + E(L⊗L̇)
        let m = PenaltyMetric::standard(2, 3.0);
        let ctx = PowerSeriesContext::new(&m, 3).unwrap();
        let l = random_l0(2, 5);
        let d = ctx.derivatives(&l.as_slice()[1..]);
        let ldot = ctx.apply_e(&d[0], &d[0]);
        let a = ctx.apply_e(&ldot, &d[0]);
        let b = ctx.apply_e(&d[0], &ldot);
        for k in 0..15 {
            assert!((d[2][k] - a[k] - b[k]).abs() < 1e-12);
        }
        let lddot = &d[2];
        let c3 = ctx.apply_e(lddot, &d[0]);
        let c2 = ctx.apply_e(&ldot, &ldot);
        let c1 = ctx.apply_e(&d[0], lddot);
        for k in 0..15 {
            assert!((d[3][k] - c3[k] - 2.0 * c2[k] - c1[k]).abs() < 1e-11);
        }
    }

    #[test]
    fn matches_integrator_at_short_times() {
        let m = PenaltyMetric::standard(2, 8.0);
        let l = random_l0(2, 9) * 0.5;
        let t = 0.05;
        let traj = integrate_coeffs(&l, &m, t, 200).unwrap();
        let ctx = PowerSeriesContext::new(&m, 4).unwrap();
        let v = ctx.evaluate(&l.as_slice()[1..], t);
        let last = traj.l.last().unwrap();
        let err = (0..15).map(|k| (v[k] - last[k + 1]).abs()).fold(0.0, f64::max);
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn large_orders_are_rejected() {
        let m = PenaltyMetric::standard(3, 8.0);
        assert!(matches!(PowerSeriesContext::new(&m, 5), Err(Error::OrderTooLarge { .. })));
        let m2 = PenaltyMetric::standard(2, 8.0);
        assert!(PowerSeriesContext::new(&m2, 6).is_ok());
        assert!(matches!(PowerSeriesContext::new(&m2, 9), Err(Error::OrderTooLarge { .. })));
    }
}
