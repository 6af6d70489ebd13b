//! Job configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use qcgeom::curvature::Group;
use qcgeom::deform::ContinuationOptions;
use qcgeom::{MetricKind, MetricSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Geodesic,
    Conjugate,
    Deform,
    Curvature,
    Extend,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Geodesic => "geodesic",
            Command::Conjugate => "conjugate",
            Command::Deform => "deform",
            Command::Curvature => "curvature",
            Command::Extend => "extend",
        }
    }
}

/// Pauli coefficients keyed by word, e.g. {"ZZI": 1.0, "XII": 0.5}.
pub type Coefficients = BTreeMap<String, f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Qft,
    HaarRandom,
    Identity,
}

/// Where a unitary comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UnitarySource {
    Builtin {
        builtin: Builtin,
        n: usize,
        /// Seed for haar_random; the job seed is used when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    File {
        file: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HamiltonianSource {
    Ising { ising: IsingParams },
    Coefficients(Coefficients),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingParams {
    pub n: usize,
    pub field: f64,
    #[serde(default = "yes")]
    pub periodic: bool,
}

fn yes() -> bool {
    true
}

/// Initial dual for a geodesic: explicit coefficients of L(0), or the canonical Hamiltonian of a
/// target unitary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialDual {
    Target { target_unitary: UnitarySource },
    Coefficients(Coefficients),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicJob {
    pub metric: MetricSpec,
    #[serde(rename = "L0")]
    pub l0: InitialDual,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub steps: usize,
    #[serde(default)]
    pub include_u: bool,
    #[serde(default)]
    pub expect: GeodesicExpect,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GeodesicExpect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_speed_drift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_matrix_drift: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugateJob {
    pub metric: MetricSpec,
    pub hamiltonian: HamiltonianSource,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub steps: usize,
    #[serde(default)]
    pub expect: ConjugateExpect,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConjugateExpect {
    /// Accepted interval for the first conjugate time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_dip: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformJob {
    /// Base metric; its q is ignored and swept from 1 to q_end.
    pub metric: MetricSpec,
    pub target: UnitarySource,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub q_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_start: Option<Coefficients>,
    #[serde(default)]
    pub options: ContinuationOptions,
    /// Steps for the σ_min(𝒥_t) profile along the final geodesic; 0 skips it.
    #[serde(default)]
    pub profile_steps: usize,
    #[serde(default)]
    pub expect: DeformExpect,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeformExpect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_endpoint_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_flag: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_length_decrease: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureJob {
    pub metric: MetricSpec,
    #[serde(default)]
    pub components: Vec<[String; 4]>,
    #[serde(default)]
    pub sectional: Vec<[Coefficients; 2]>,
    /// Monte Carlo samples of the sectional curvature; 0 skips the average.
    #[serde(default)]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowParams>,
    #[serde(default)]
    pub expect: CurvatureExpect,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub steps: usize,
    pub ds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurvatureExpect {
    /// Relative agreement required between closed-form and contracted scalar curvature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar_rel_tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendJob {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<UnitarySource>,
    /// Truth table as a bitstring, entry x at position x.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_table: Option<String>,
    pub m: usize,
    #[serde(default)]
    pub expect: ExtendExpect,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtendExpect {
    #[serde(default)]
    pub special: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Job {
    Geodesic(GeodesicJob),
    Conjugate(ConjugateJob),
    Deform(DeformJob),
    Curvature(CurvatureJob),
    Extend(ExtendJob),
}

impl Job {
    pub fn command(&self) -> Command {
        match self {
            Job::Geodesic(_) => Command::Geodesic,
            Job::Conjugate(_) => Command::Conjugate,
            Job::Deform(_) => Command::Deform,
            Job::Curvature(_) => Command::Curvature,
            Job::Extend(_) => Command::Extend,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobConfig {
    /// Output subdirectory; defaults to the config file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub group: Group,
    #[serde(flatten)]
    pub job: Job,
}

fn standard(n: usize, q: f64) -> MetricSpec {
    MetricSpec { n, kind: MetricKind::Standard, q, s: None, easy_words: None }
}

impl JobConfig {
    /// The job run when a subcommand is given without a config file.
    pub fn default_for(command: Command) -> Self {
        let job = match command {
            Command::Geodesic => Job::Geodesic(GeodesicJob {
                metric: standard(3, 64.0),
                l0: InitialDual::Target {
                    target_unitary: UnitarySource::Builtin { builtin: Builtin::Qft, n: 3, seed: None },
                },
                t_final: 1.0,
                steps: 1000,
                include_u: false,
                expect: GeodesicExpect::default(),
            }),
            Command::Conjugate => Job::Conjugate(ConjugateJob {
                metric: standard(3, 64.0),
                hamiltonian: HamiltonianSource::Ising { ising: IsingParams { n: 3, field: 1.0, periodic: true } },
                t_final: 2.0,
                steps: 2000,
                expect: ConjugateExpect::default(),
            }),
            Command::Deform => Job::Deform(DeformJob {
                metric: standard(3, 1.0),
                target: UnitarySource::Builtin { builtin: Builtin::Qft, n: 3, seed: None },
                t_final: 1.0,
                q_end: 16.0,
                h_start: None,
                options: ContinuationOptions::default(),
                profile_steps: 0,
                expect: DeformExpect::default(),
            }),
            Command::Curvature => Job::Curvature(CurvatureJob {
                metric: standard(3, 64.0),
                components: Vec::new(),
                sectional: Vec::new(),
                samples: 0,
                flow: None,
                expect: CurvatureExpect::default(),
            }),
            Command::Extend => Job::Extend(ExtendJob {
                unitary: None,
                truth_table: Some("0001".into()),
                m: 1,
                expect: ExtendExpect { special: true },
            }),
        };
        Self { name: Some(command.name().into()), seed: 0, group: Group::U, job }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if cfg.name.is_none() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Makes unitary file paths relative to the config's directory.
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |src: &mut UnitarySource| {
            if let UnitarySource::File { file } = src {
                if file.is_relative() {
                    *file = base.join(&*file);
                }
            }
        };
        match &mut self.job {
            Job::Geodesic(g) => {
                if let InitialDual::Target { target_unitary } = &mut g.l0 {
                    fix(target_unitary);
                }
            }
            Job::Deform(d) => fix(&mut d.target),
            Job::Extend(e) => {
                if let Some(u) = &mut e.unitary {
                    fix(u);
                }
            }
            _ => {}
        }
    }

    pub fn check_command(&self, command: Command) -> Result<()> {
        if self.job.command() != command {
            bail!(
                "config {:?} is a {} job, not {}",
                self.name.as_deref().unwrap_or("?"),
                self.job.command().name(),
                command.name()
            );
        }
        Ok(())
    }
}
