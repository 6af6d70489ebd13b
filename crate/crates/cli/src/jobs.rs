//! Executes one job config and writes its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use qcgeom::curvature::{self, ComponentValue, CurvatureReport, FlowStep, Group, ScalarMethod};
use qcgeom::deform::continue_in_q;
use qcgeom::extension::{boolean_unitaries, canonical_extension, parse_truth_table, special_extension_check};
use qcgeom::geodesic::{canonical_hamiltonian, conserved_quantities, integrate_geodesic};
use qcgeom::io::{scan_plot, sigma_plot, trace_plot, trajectory_csv, unitary_from_text, unitary_to_text};
use qcgeom::jacobi::{conjugate_scan, transverse_ising};
use qcgeom::metric::dual;
use qcgeom::{HermitianOp, PauliVector, PauliWord, PenaltyMetric, UnitaryOp};

use crate::config::*;

/// Outcome of one job: where it wrote and which declared thresholds failed.
#[derive(Debug)]
pub struct JobOutcome {
    pub name: String,
    pub dir: PathBuf,
    pub failures: Vec<String>,
}

fn write(dir: &Path, file: &str, body: &str) -> Result<()> {
    let path = dir.join(file);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
}

fn write_json(dir: &Path, file: &str, value: &impl serde::Serialize) -> Result<()> {
    write(dir, file, &(serde_json::to_string_pretty(value)? + "\n"))
}

pub fn hamiltonian_from_coefficients(n: usize, coeffs: &Coefficients) -> Result<HermitianOp> {
    let mut v = PauliVector::zeros(n);
    for (w, c) in coeffs {
        let word: PauliWord = w.parse()?;
        if word.len() != n {
            bail!("word {w} has length {}, expected {n}", word.len());
        }
        v.set(&word, *c);
    }
    Ok(v.compose())
}

pub fn load_unitary(src: &UnitarySource, job_seed: u64) -> Result<UnitaryOp> {
    Ok(match src {
        UnitarySource::Builtin { builtin, n, seed } => match builtin {
            Builtin::Qft => UnitaryOp::qft(*n),
            Builtin::Identity => UnitaryOp::identity(*n),
            Builtin::HaarRandom => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(job_seed));
                UnitaryOp::haar(*n, &mut rng).special()
            }
        },
        UnitarySource::File { file } => {
            let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
            unitary_from_text(&text)?
        }
    })
}

fn check_max(failures: &mut Vec<String>, what: &str, value: f64, limit: Option<f64>) {
    if let Some(limit) = limit {
        if !(value <= limit) {
            failures.push(format!("{what} = {value:e} exceeds {limit:e}"));
        }
    }
}

fn check_range(failures: &mut Vec<String>, what: &str, value: Option<f64>, range: Option<[f64; 2]>) {
    if let Some([lo, hi]) = range {
        match value {
            Some(v) if (lo..=hi).contains(&v) => {}
            Some(v) => failures.push(format!("{what} = {v} outside [{lo}, {hi}]")),
            None => failures.push(format!("no {what} found, expected one in [{lo}, {hi}]")),
        }
    }
}

/// Runs `cfg`, writing into `out/<name>`.
pub fn run(cfg: &JobConfig, out: &Path) -> Result<JobOutcome> {
    let name = cfg.name.clone().unwrap_or_else(|| cfg.job.command().name().into());
    let dir = out.join(&name);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_json(&dir, "config.json", cfg)?;
    info!("running {} job {name}", cfg.job.command().name());
    let mut failures = Vec::new();
    match &cfg.job {
        Job::Geodesic(job) => geodesic(job, cfg.seed, &dir, &mut failures)?,
        Job::Conjugate(job) => conjugate(job, &dir, &mut failures)?,
        Job::Deform(job) => deform(job, cfg.seed, &dir, &mut failures)?,
        Job::Curvature(job) => curvature_job(job, cfg.seed, cfg.group, &dir, &mut failures)?,
        Job::Extend(job) => extend(job, cfg.seed, &dir, &mut failures)?,
    }
    Ok(JobOutcome { name, dir, failures })
}

fn geodesic(job: &GeodesicJob, seed: u64, dir: &Path, failures: &mut Vec<String>) -> Result<()> {
    let metric = PenaltyMetric::from_spec(job.metric.clone())?;
    let l0 = match &job.l0 {
        InitialDual::Coefficients(c) => hamiltonian_from_coefficients(metric.n(), c)?,
        InitialDual::Target { target_unitary } => {
            let u = load_unitary(target_unitary, seed)?;
            let h = canonical_hamiltonian(&u.special(), job.t_final, None)?.hamiltonian;
            dual(&h, &metric)?
        }
    };
    let traj = integrate_geodesic(&l0, &metric, job.t_final, job.steps)?;
    write(dir, "trajectory.csv", &trajectory_csv(&traj, job.include_u))?;
    let cons = conserved_quantities(&traj);
    let (length, length_err) = traj.length_with_error();
    write_json(
        dir,
        "summary.json",
        &json!({
            "length": length,
            "length_error_estimate": length_err,
            "max_speed_drift": cons.max_speed_drift(),
            "max_matrix_drift": cons.max_matrix_drift(),
            "max_one_body_drift": cons.max_one_body_drift(),
            "repairs": traj.repairs,
        }),
    )?;
    check_max(failures, "speed drift", cons.max_speed_drift(), job.expect.max_speed_drift);
    check_max(failures, "matrix drift", cons.max_matrix_drift(), job.expect.max_matrix_drift);
    Ok(())
}

fn conjugate(job: &ConjugateJob, dir: &Path, failures: &mut Vec<String>) -> Result<()> {
    let metric = PenaltyMetric::from_spec(job.metric.clone())?;
    let h = match &job.hamiltonian {
        HamiltonianSource::Ising { ising } => {
            if ising.n != metric.n() {
                bail!("Ising chain has {} sites but the metric has n = {}", ising.n, metric.n());
            }
            transverse_ising(ising.n, ising.field, ising.periodic)
        }
        HamiltonianSource::Coefficients(c) => hamiltonian_from_coefficients(metric.n(), c)?,
    };
    let traj = integrate_geodesic(&dual(&h, &metric)?, &metric, job.t_final, job.steps)?;
    let scan = conjugate_scan(&traj, &traj.times)?;
    write(dir, "scan.csv", &scan.to_csv())?;
    let mut dips = String::from("t,sigma_min\n");
    for d in &scan.dips {
        dips.push_str(&format!("{:.16e},{:.16e}\n", d.t, d.sigma_min));
    }
    write(dir, "dips.csv", &dips)?;
    write(dir, "scan.dat", &scan_plot(&scan))?;
    write_json(
        dir,
        "summary.json",
        &json!({
            "first_conjugate_time": scan.first_conjugate_time(),
            "threshold": scan.threshold,
            "dips": scan.dips.iter().map(|d| [d.t, d.sigma_min]).collect::<Vec<_>>(),
            "aliasing_intervals": scan.aliasing,
        }),
    )?;
    check_range(failures, "first conjugate time", scan.first_conjugate_time(), job.expect.first_dip);
    Ok(())
}

fn deform(job: &DeformJob, seed: u64, dir: &Path, failures: &mut Vec<String>) -> Result<()> {
    let base = PenaltyMetric::from_spec(job.metric.clone())?;
    let target = load_unitary(&job.target, seed)?;
    let h_start = job.h_start.as_ref().map(|c| hamiltonian_from_coefficients(base.n(), c)).transpose()?;
    let trace = continue_in_q(&target, &base, job.t_final, job.q_end, h_start.as_ref(), &job.options)?;
    write(dir, "trace.csv", &trace.to_csv())?;
    write(dir, "target.txt", &unitary_to_text(&trace.target))?;
    let final_metric = base.with_q(job.q_end);
    write(dir, "trace.dat", &format!("# seed {seed}\n{}", trace_plot(&trace, &final_metric)))?;
    if job.profile_steps > 0 {
        let node = trace.final_node();
        let traj = integrate_geodesic(&node.l0.compose(), &final_metric, job.t_final, job.profile_steps)?;
        let scan = conjugate_scan(&traj, &traj.times)?;
        write(dir, "final_sigma.dat", &format!("# seed {seed}\n{}", sigma_plot(&scan)))?;
    }
    let fin = trace.final_node();
    write_json(
        dir,
        "summary.json",
        &json!({
            "seed": seed,
            "nodes": trace.nodes.len(),
            "final_q": fin.q,
            "final_length": fin.length,
            "final_endpoint_error": fin.endpoint_error,
            "max_length_decrease": trace.max_length_decrease(),
            "first_flagged_q": trace.first_flagged_q(),
            "first_flagged_sigma_min": trace.nodes.iter().find(|n| n.near_singular).map(|n| n.sigma_min_jt),
            "corrector_steps": trace.nodes.iter().map(|n| n.corrector_steps).sum::<usize>(),
        }),
    )?;
    check_max(failures, "final endpoint error", fin.endpoint_error, job.expect.max_endpoint_error);
    check_max(failures, "length decrease", trace.max_length_decrease(), job.expect.max_length_decrease);
    check_range(failures, "first near-singular q", trace.first_flagged_q(), job.expect.first_flag);
    Ok(())
}

fn curvature_job(job: &CurvatureJob, seed: u64, group: Group, dir: &Path, failures: &mut Vec<String>) -> Result<()> {
    let metric = PenaltyMetric::from_spec(job.metric.clone())?;
    let n = metric.n();
    let mut report = CurvatureReport::build(&metric);
    for words in &job.components {
        let w: Vec<PauliWord> = words.iter().map(|s| s.parse()).collect::<qcgeom::Result<_>>()?;
        let value = curvature::curvature_component(&w[0], &w[1], &w[2], &w[3], &metric)?;
        let words = [w[0].clone(), w[1].clone(), w[2].clone(), w[3].clone()];
        report.components.push(ComponentValue { words, value });
    }
    for [x, y] in &job.sectional {
        let (x, y) = (hamiltonian_from_coefficients(n, x)?, hamiltonian_from_coefficients(n, y)?);
        report.sectional.push(curvature::sectional(&x, &y, &metric)?);
    }
    if job.samples > 0 {
        report.average = Some(curvature::sectional_average(&metric, group, job.samples, seed));
    }
    if let Some(flow) = &job.flow {
        if job.metric.kind == qcgeom::MetricKind::Projective {
            bail!("Ricci flow needs penalties that depend only on weight");
        }
        let alg = metric.algebra();
        let mut weights = vec![1.0; n + 1];
        for k in 1..alg.dim() {
            weights[alg.weight(k)] = metric.penalty(k);
        }
        report.flow.push(FlowStep { s: 0.0, weights: weights.clone() });
        for i in 1..=flow.steps {
            weights = curvature::ricci_flow_step(&weights, n, flow.ds)?;
            report.flow.push(FlowStep { s: i as f64 * flow.ds, weights: weights.clone() });
        }
    }
    write_json(dir, "report.json", &json!({ "group": group, "seed": seed, "report": report }))?;
    if let Some(tol) = job.expect.scalar_rel_tol {
        let closed = report.scalar_closed_form.ok_or_else(|| anyhow!("scalar_rel_tol needs the standard metric"))?;
        let contracted = curvature::scalar_curvature(n, metric.q(), ScalarMethod::Contraction);
        for (what, v) in [("brute-force", report.scalar), ("contracted", contracted)] {
            let rel = (v - closed).abs() / closed.abs().max(1.0);
            if !(rel <= tol) {
                failures.push(format!("{what} scalar curvature differs from the closed form by {rel:e}"));
            }
        }
    }
    Ok(())
}

fn extend(job: &ExtendJob, seed: u64, dir: &Path, failures: &mut Vec<String>) -> Result<()> {
    let u = match (&job.unitary, &job.truth_table) {
        (Some(src), None) => load_unitary(src, seed)?,
        (None, Some(table)) => {
            let (uf, vf) = boolean_unitaries(&parse_truth_table(table)?)?;
            write(dir, "u_f.txt", &unitary_to_text(&uf))?;
            write(dir, "v_f.txt", &unitary_to_text(&vf))?;
            uf
        }
        _ => bail!("extend jobs need exactly one of unitary and truth_table"),
    };
    let ext = canonical_extension(&u, job.m)?;
    write(dir, "u_m.txt", &unitary_to_text(&ext.u_m))?;
    let chk = special_extension_check(&ext.u_m, &u)?;
    write_json(
        dir,
        "summary.json",
        &json!({
            "n": ext.n,
            "m": ext.m,
            "qubits": ext.u_m.n(),
            "is_extension": chk.is_extension,
            "is_special": chk.is_special,
        }),
    )?;
    if job.expect.special && !chk.is_special {
        failures.push("canonical extension is not special".into());
    }
    Ok(())
}
