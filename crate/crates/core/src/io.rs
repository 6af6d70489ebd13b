//! Text formats: trajectories, dense unitaries and whitespace-delimited plot columns.

use num_complex::Complex64;

use crate::deform::DeformationTrace;
use crate::error::{Error, Result};
use crate::geodesic::GeodesicTrajectory;
use crate::jacobi::ConjugateScan;
use crate::linalg::{CMatrix, UnitaryOp};
use crate::metric::PenaltyMetric;
use crate::pauli::PauliWord;

/// CSV with t, the 4ⁿ − 1 traceless coefficients of L, and optionally U entries as
/// row-major re/im column pairs.
pub fn trajectory_csv(traj: &GeodesicTrajectory, include_u: bool) -> String {
    let n = traj.n();
    let dim = 1usize << (2 * n);
    let hd = 1usize << n;
    let mut s = String::from("t");
    for k in 1..dim {
        s.push_str(&format!(",{}", PauliWord::from_index(n, k)));
    }
    if include_u {
        for r in 0..hd {
            for c in 0..hd {
                s.push_str(&format!(",re_u{r}_{c},im_u{r}_{c}"));
            }
        }
    }
    s.push('\n');
    for (k, t) in traj.times.iter().enumerate() {
        s.push_str(&format!("{t:.16e}"));
        for v in traj.l[k].iter().skip(1) {
            s.push_str(&format!(",{v:.16e}"));
        }
        if include_u {
            let u = &traj.u[k];
            for r in 0..hd {
                for c in 0..hd {
                    s.push_str(&format!(",{:.16e},{:.16e}", u[(r, c)].re, u[(r, c)].im));
                }
            }
        }
        s.push('\n');
    }
    s
}

/// One matrix row per line as `re,im` pairs at 17 significant digits.
pub fn unitary_to_text(u: &UnitaryOp) -> String {
    let m = u.matrix();
    let mut s = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:.16e},{:.16e}", m[(r, c)].re, m[(r, c)].im)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Parses the format written by [`unitary_to_text`]; `#` lines are comments and commas or
/// whitespace separate numbers.
pub fn unitary_from_text(text: &str) -> Result<UnitaryOp> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad number {t:?}"))))
            .collect::<Result<_>>()?;
        if nums.len() % 2 != 0 {
            return Err(Error::Parse(format!("odd number of values in row {}", rows.len())));
        }
        rows.push(nums.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect());
    }
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Dimension(format!("expected a square matrix, got {d} rows")));
    }
    UnitaryOp::new(CMatrix::from_fn(d, d, |r, c| rows[r][c]))
}

/// Columns t and log₁₀ σ_min(E₂); exact zeros are written as NaN so plotting tools skip them.
pub fn scan_plot(scan: &ConjugateScan) -> String {
    let mut s = String::from("# t log10_sigma_min\n");
    for p in &scan.points {
        if p.sigma_min > 0.0 {
            s.push_str(&format!("{:.16e} {:.16e}\n", p.t, p.sigma_min.log10()));
        } else {
            s.push_str(&format!("{:.16e} NaN\n", p.t));
        }
    }
    s
}

/// Columns t and σ_min(𝒥_t).
pub fn sigma_plot(scan: &ConjugateScan) -> String {
    let mut s = String::from("# t sigma_min_Jt\n");
    for p in &scan.points {
        s.push_str(&format!("{:.16e} {:.16e}\n", p.t, p.sigma_min));
    }
    s
}

/// q followed by every traceless coefficient of L_q(0); the header tags each word P or Q.
pub fn trace_plot(trace: &DeformationTrace, metric: &PenaltyMetric) -> String {
    let n = metric.n();
    let mut s = String::from("# q");
    for k in 1..metric.dim() {
        let class = if metric.is_hard(k) { 'Q' } else { 'P' };
        s.push_str(&format!(" {}:{class}", PauliWord::from_index(n, k)));
    }
    s.push('\n');
    for node in &trace.nodes {
        s.push_str(&format!("{:.16e}", node.q));
        for v in node.l0.coeffs.iter().skip(1) {
            s.push_str(&format!(" {v:.16e}"));
        }
        s.push('\n');
    }
    s
}
