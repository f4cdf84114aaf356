//! Batch experiment runner behind the `kerrq` binary: TOML configuration,
//! job fan-out, CSV artifacts, and a JSON manifest with checksums.
//!
//! Everything here is deterministic: rerunning the same config rewrites
//! byte-identical CSVs (the manifest differs only in timings).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{self, QuenchSpec, Trajectory};
use crate::gaussianity;
use crate::liouville;
use crate::meanfield;
use crate::operators::{self, DensityMatrix, ModelParams};
use crate::phasespace;
use crate::{exactness, Error, Result};

fn default_delta() -> f64 {
    -2.0
}
fn default_kappa() -> f64 {
    0.5
}
fn default_u() -> f64 {
    1.0
}
fn default_prop_tol() -> f64 {
    1e-8
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_eps_i() -> f64 {
    0.5
}
fn default_dt_out() -> f64 {
    0.2
}
fn default_true() -> bool {
    true
}
fn default_spectrum_k() -> usize {
    6
}
fn default_orders() -> Vec<(usize, usize)> {
    vec![(0, 1), (1, 1)]
}

/// `[model]` section: the three static couplings. Pump strength and scale
/// live in the experiment sections.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_u")]
    pub u: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            delta: default_delta(),
            kappa: default_kappa(),
            u: default_u(),
        }
    }
}

/// `[numerics]` section: solver knobs shared by all jobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    /// Local error tolerance of the Krylov propagator.
    #[serde(default = "default_prop_tol")]
    pub prop_tol: f64,
    /// Fock cutoff override (highest retained index); sized automatically
    /// from the mean-field occupation when absent.
    #[serde(default)]
    pub n_max: Option<usize>,
    /// Phase-space grid spacing override.
    #[serde(default)]
    pub grid_h: Option<f64>,
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            prop_tol: default_prop_tol(),
            n_max: None,
            grid_h: None,
        }
    }
}

/// `[output]` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
        }
    }
}

/// Pump values, either explicit or an inclusive arithmetic range.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsValues {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl EpsValues {
    pub fn expand(&self) -> Result<Vec<f64>> {
        match *self {
            EpsValues::List(ref v) => {
                if v.is_empty() {
                    return Err(Error::Config("eps list is empty".into()));
                }
                Ok(v.clone())
            }
            EpsValues::Range { start, stop, step } => {
                if !(step > 0.0 && step.is_finite()) {
                    return Err(Error::Config(format!("eps range step {step} must be positive")));
                }
                if !(stop >= start) {
                    return Err(Error::Config(format!(
                        "eps range stop {stop} is below start {start}"
                    )));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize;
                Ok((0..=count).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanfieldSpec {
    pub eps: EpsValues,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NessSweepSpec {
    pub eps: EpsValues,
    pub n_scale: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    pub eps: EpsValues,
    pub n_scale: Vec<f64>,
    /// How many slowest eigenvalues to resolve.
    #[serde(default = "default_spectrum_k")]
    pub k: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactMomentsSpec {
    pub eps: EpsValues,
    pub n_scale: Vec<f64>,
    /// Moment orders `(n, m)` for `<(a^dag)^n a^m>`.
    #[serde(default = "default_orders")]
    pub orders: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchExperiment {
    #[serde(default = "default_eps_i")]
    pub eps_i: f64,
    pub eps_f: EpsValues,
    pub n_scale: Vec<f64>,
    pub t_max: f64,
    #[serde(default = "default_dt_out")]
    pub dt_out: f64,
    /// Entropy rates per output step (the expensive part); first moments
    /// and non-Gaussianity are always recorded.
    #[serde(default = "default_true")]
    pub with_entropy: bool,
}

/// `[experiment.*]` subsections; one per subcommand.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default)]
    pub meanfield: Option<MeanfieldSpec>,
    #[serde(default)]
    pub ness_sweep: Option<NessSweepSpec>,
    #[serde(default)]
    pub spectrum: Option<SpectrumSpec>,
    #[serde(default)]
    pub exact_moments: Option<ExactMomentsSpec>,
    #[serde(default)]
    pub quench: Option<QuenchExperiment>,
}

impl ExperimentSection {
    fn is_empty(&self) -> bool {
        self.meanfield.is_none()
            && self.ness_sweep.is_none()
            && self.spectrum.is_none()
            && self.exact_moments.is_none()
            && self.quench.is_none()
    }
}

/// A fully parsed and validated run configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub numerics: NumericsSection,
    pub output: OutputSection,
    pub experiment: ExperimentSection,
}

impl RunConfig {
    /// Model parameters for one pump value and scale.
    fn params(&self, eps: f64, n_scale: f64) -> Result<ModelParams> {
        ModelParams::new(self.model.delta, self.model.kappa, self.model.u, eps, n_scale)
    }

    fn check_eps_and_scales(&self, eps: &EpsValues, scales: &[f64]) -> Result<()> {
        if scales.is_empty() {
            return Err(Error::Config("n_scale list is empty".into()));
        }
        for &n in scales {
            self.params(0.0, n)?;
        }
        for eps in eps.expand()? {
            self.params(eps, scales[0])?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.params(0.0, 1.0)?;
        if !(self.numerics.prop_tol > 0.0) {
            return Err(Error::Config("numerics.prop_tol must be positive".into()));
        }
        if let Some(h) = self.numerics.grid_h {
            if !(h > 0.0) {
                return Err(Error::Config("numerics.grid_h must be positive".into()));
            }
        }
        if self.experiment.is_empty() {
            return Err(Error::Config("no experiment specified".into()));
        }
        if let Some(ref mf) = self.experiment.meanfield {
            for eps in mf.eps.expand()? {
                self.params(eps, 1.0)?;
            }
        }
        if let Some(ref s) = self.experiment.ness_sweep {
            self.check_eps_and_scales(&s.eps, &s.n_scale)?;
        }
        if let Some(ref s) = self.experiment.spectrum {
            self.check_eps_and_scales(&s.eps, &s.n_scale)?;
            if s.k < 2 {
                return Err(Error::Config("spectrum.k must be at least 2".into()));
            }
        }
        if let Some(ref s) = self.experiment.exact_moments {
            self.check_eps_and_scales(&s.eps, &s.n_scale)?;
        }
        if let Some(ref q) = self.experiment.quench {
            self.check_eps_and_scales(&q.eps_f, &q.n_scale)?;
            self.params(q.eps_i, q.n_scale[0])?;
            if !(q.t_max > 0.0) {
                return Err(Error::Config("quench.t_max must be positive".into()));
            }
            if !(q.dt_out > 0.0) {
                return Err(Error::Config("quench.dt_out must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Parse and validate a TOML configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// What to execute; mirrors the CLI subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Meanfield,
    NessSweep,
    Spectrum,
    ExactMoments,
    Quench,
    Validate,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Meanfield => "meanfield",
            Task::NessSweep => "ness-sweep",
            Task::Spectrum => "spectrum",
            Task::ExactMoments => "exact-moments",
            Task::Quench => "quench",
            Task::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone)]
enum JobKind {
    Meanfield {
        eps: Vec<f64>,
    },
    NessSweep {
        n_scale: f64,
        eps: Vec<f64>,
    },
    Spectrum {
        n_scale: f64,
        eps: Vec<f64>,
        k: usize,
    },
    ExactMoments {
        n_scale: f64,
        eps: Vec<f64>,
        orders: Vec<(usize, usize)>,
    },
    Quench {
        n_scale: f64,
        eps_f: f64,
    },
    Validate,
}

#[derive(Debug, Clone)]
struct Job {
    name: String,
    kind: JobKind,
}

/// Outcome of one job, as recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct JobReport {
    pub name: String,
    pub status: String,
    pub seconds: f64,
    pub outputs: Vec<String>,
    pub error: Option<String>,
    /// Achieved tolerances and sizes (solver residuals, precision digits,
    /// Fock dimensions); keys vary by job kind.
    pub diagnostics: BTreeMap<String, f64>,
}

impl JobReport {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

/// Everything a rerun needs to audit this run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub task: String,
    pub config: RunConfig,
    pub jobs: Vec<JobReport>,
    pub outputs: Vec<OutputEntry>,
    pub total_seconds: f64,
}

impl RunManifest {
    pub fn all_ok(&self) -> bool {
        self.jobs.iter().all(JobReport::ok)
    }
}

fn missing(section: &str) -> Error {
    Error::Config(format!("config has no [experiment.{section}] section"))
}

fn expand_jobs(config: &RunConfig, task: Task) -> Result<Vec<Job>> {
    let mut jobs = Vec::new();
    match task {
        Task::Meanfield => {
            let spec = config.experiment.meanfield.as_ref().ok_or_else(|| missing("meanfield"))?;
            jobs.push(Job {
                name: "meanfield".into(),
                kind: JobKind::Meanfield { eps: spec.eps.expand()? },
            });
        }
        Task::NessSweep => {
            let spec = config.experiment.ness_sweep.as_ref().ok_or_else(|| missing("ness_sweep"))?;
            let eps = spec.eps.expand()?;
            for &n in &spec.n_scale {
                jobs.push(Job {
                    name: format!("ness-sweep N={n}"),
                    kind: JobKind::NessSweep { n_scale: n, eps: eps.clone() },
                });
            }
        }
        Task::Spectrum => {
            let spec = config.experiment.spectrum.as_ref().ok_or_else(|| missing("spectrum"))?;
            let eps = spec.eps.expand()?;
            for &n in &spec.n_scale {
                jobs.push(Job {
                    name: format!("spectrum N={n}"),
                    kind: JobKind::Spectrum { n_scale: n, eps: eps.clone(), k: spec.k },
                });
            }
        }
        Task::ExactMoments => {
            let spec = config.experiment.exact_moments.as_ref().ok_or_else(|| missing("exact_moments"))?;
            let eps = spec.eps.expand()?;
            for &n in &spec.n_scale {
                jobs.push(Job {
                    name: format!("exact-moments N={n}"),
                    kind: JobKind::ExactMoments {
                        n_scale: n,
                        eps: eps.clone(),
                        orders: spec.orders.clone(),
                    },
                });
            }
        }
        Task::Quench => {
            let spec = config.experiment.quench.as_ref().ok_or_else(|| missing("quench"))?;
            for &n in &spec.n_scale {
                for &eps_f in &spec.eps_f.expand()? {
                    jobs.push(Job {
                        name: format!("quench N={n} eps_f={eps_f:.4}"),
                        kind: JobKind::Quench { n_scale: n, eps_f },
                    });
                }
            }
        }
        Task::Validate => {
            jobs.push(Job {
                name: "validate".into(),
                kind: JobKind::Validate,
            });
        }
    }
    Ok(jobs)
}

/// Names of the jobs `task` would expand to, in execution order. Useful to
/// inspect a sweep before paying for it.
pub fn job_names(config: &RunConfig, task: Task) -> Result<Vec<String>> {
    config.validate()?;
    Ok(expand_jobs(config, task)?.into_iter().map(|j| j.name).collect())
}

/// Execute all jobs for `task`, write artifacts and the manifest under the
/// output directory, and return the manifest. Individual job failures are
/// recorded, not propagated; the caller decides the exit code via
/// [`RunManifest::all_ok`].
pub fn run(
    config: &RunConfig,
    task: Task,
    out_override: Option<&Path>,
    jobs_cap: Option<usize>,
) -> Result<RunManifest> {
    let started = Instant::now();
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output.dir.clone());
    fs::create_dir_all(&out_dir).map_err(|e| io_err(&out_dir, e))?;

    let jobs = expand_jobs(config, task)?;
    let reports: Vec<JobReport> = match jobs_cap {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            pool.install(|| jobs.par_iter().map(|j| execute(config, j, &out_dir)).collect())
        }
        None => jobs.par_iter().map(|j| execute(config, j, &out_dir)).collect(),
    };

    let mut outputs = Vec::new();
    for report in &reports {
        for name in &report.outputs {
            let path = out_dir.join(name);
            let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
            outputs.push(OutputEntry {
                path: name.clone(),
                sha256: hex_digest(&bytes),
            });
        }
    }

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        task: task.name().to_string(),
        config: config.clone(),
        jobs: reports,
        outputs,
        total_seconds: started.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
    let manifest_path = out_dir.join("manifest.json");
    fs::write(&manifest_path, text).map_err(|e| io_err(&manifest_path, e))?;
    Ok(manifest)
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn execute(config: &RunConfig, job: &Job, out_dir: &Path) -> JobReport {
    let t0 = Instant::now();
    let mut diagnostics = BTreeMap::new();
    let mut files = Vec::new();
    let result = run_job(config, &job.kind, out_dir, &mut diagnostics, &mut files);
    JobReport {
        name: job.name.clone(),
        status: if result.is_ok() { "ok" } else { "failed" }.into(),
        seconds: t0.elapsed().as_secs_f64(),
        outputs: files,
        error: result.err().map(|e| e.to_string()),
        diagnostics,
    }
}

/// 17 significant digits: enough to round-trip any f64.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_artifact(out_dir: &Path, name: &str, contents: &str, files: &mut Vec<String>) -> Result<()> {
    let path = out_dir.join(name);
    fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
    files.push(name.to_string());
    Ok(())
}

/// Fock dimension for one parameter set, honoring the config override.
fn fock_dim(config: &RunConfig, p: &ModelParams) -> usize {
    match config.numerics.n_max {
        Some(n_max) => n_max + 1,
        None => operators::choose_truncation(p) + 1,
    }
}

fn run_job(
    config: &RunConfig,
    kind: &JobKind,
    out_dir: &Path,
    diagnostics: &mut BTreeMap<String, f64>,
    files: &mut Vec<String>,
) -> Result<()> {
    match kind {
        JobKind::Meanfield { eps } => {
            let mut csv = String::from("eps,n,re_alpha,im_alpha,stable\n");
            for &e in eps {
                let p = config.params(e, 1.0)?;
                for root in meanfield::mf_steady_states(e, &p).roots {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{}",
                        fmt(e),
                        fmt(root.n),
                        fmt(root.alpha.re),
                        fmt(root.alpha.im),
                        root.stable as u8
                    );
                }
            }
            write_artifact(out_dir, "meanfield.csv", &csv, files)?;

            let p = config.params(0.0, 1.0)?;
            match meanfield::bistability_edges(&p) {
                Ok(edges) => {
                    let mut csv = String::from("eps_lo,eps_hi,n_at_lo,n_at_hi\n");
                    let _ = writeln!(
                        csv,
                        "{},{},{},{}",
                        fmt(edges.eps_lo),
                        fmt(edges.eps_hi),
                        fmt(edges.n_at_lo),
                        fmt(edges.n_at_hi)
                    );
                    write_artifact(out_dir, "meanfield_edges.csv", &csv, files)?;
                    diagnostics.insert("bistable".into(), 1.0);
                }
                Err(Error::NoBistability(_)) => {
                    diagnostics.insert("bistable".into(), 0.0);
                }
                Err(e) => return Err(e),
            }
            Ok(())
        }
        JobKind::NessSweep { n_scale, eps } => {
            let mut csv = String::from("eps,re_alpha,im_alpha,abs_alpha,n,residual\n");
            let mut max_residual = 0.0f64;
            for &e in eps {
                let p = config.params(e, *n_scale)?;
                let d = fock_dim(config, &p);
                let l = liouville::build_liouvillian(&p, d)?;
                let ness = liouville::solve_ness(&l)?;
                let alpha = ness.rho.mean_a() / n_scale.sqrt();
                max_residual = max_residual.max(ness.residual);
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    fmt(e),
                    fmt(alpha.re),
                    fmt(alpha.im),
                    fmt(alpha.norm()),
                    fmt(ness.rho.occupation()),
                    fmt(ness.residual)
                );
            }
            diagnostics.insert("max_ness_residual".into(), max_residual);
            write_artifact(out_dir, &format!("ness_sweep_n{n_scale}.csv"), &csv, files)
        }
        JobKind::Spectrum { n_scale, eps, k } => {
            let mut csv = String::from("eps,idx,re_zeta,im_zeta,residual,gap\n");
            let mut max_residual = 0.0f64;
            for &e in eps {
                let p = config.params(e, *n_scale)?;
                let d = fock_dim(config, &p);
                let l = liouville::build_liouvillian(&p, d)?;
                let spec = liouville::spectrum(&l, *k)?;
                for (idx, zeta) in spec.eigenvalues.iter().enumerate() {
                    max_residual = max_residual.max(spec.residuals[idx]);
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{}",
                        fmt(e),
                        idx,
                        fmt(zeta.re),
                        fmt(zeta.im),
                        fmt(spec.residuals[idx]),
                        fmt(spec.gap)
                    );
                }
            }
            diagnostics.insert("max_eigen_residual".into(), max_residual);
            write_artifact(out_dir, &format!("spectrum_n{n_scale}.csv"), &csv, files)
        }
        JobKind::ExactMoments { n_scale, eps, orders } => {
            let mut csv = String::from("eps,n_idx,m_idx,re,im,digits\n");
            let mut min_digits = f64::INFINITY;
            for &e in eps {
                let p = config.params(e, *n_scale)?;
                for &(n_idx, m_idx) in orders {
                    let (value, digits) = exactness::exact_moment_detailed(n_idx, m_idx, &p)?;
                    min_digits = min_digits.min(digits);
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{:.2}",
                        fmt(e),
                        n_idx,
                        m_idx,
                        fmt(value.re),
                        fmt(value.im),
                        digits
                    );
                }
            }
            diagnostics.insert("min_oracle_digits".into(), min_digits);
            write_artifact(out_dir, &format!("exact_moments_n{n_scale}.csv"), &csv, files)
        }
        JobKind::Quench { n_scale, eps_f } => {
            let exp = config.experiment.quench.as_ref().ok_or_else(|| missing("quench"))?;
            let model = config.params(exp.eps_i, *n_scale)?;
            let mut spec = QuenchSpec::new(exp.eps_i, *eps_f, *n_scale, exp.t_max);
            spec.dt_out = exp.dt_out;
            spec.tol = config.numerics.prop_tol;
            spec.n_max = config.numerics.n_max;
            spec.grid_h = config.numerics.grid_h;
            spec.with_entropy = exp.with_entropy;
            let traj = dynamics::run_quench(&model, &spec)?;
            diagnostics.insert("fock_dim".into(), traj.fock_dim as f64);
            diagnostics.insert("steps".into(), traj.times.len() as f64);
            let name = format!("quench_n{n_scale}_ef{eps_f:.4}.csv");
            let path = out_dir.join(&name);
            emit_timeseries(&traj, &path)?;
            files.push(name);
            Ok(())
        }
        JobKind::Validate => {
            let checks = validation_checks()?;
            let mut csv = String::from("check,value,reference,tolerance,pass\n");
            let mut failed = 0usize;
            for c in &checks {
                let pass = (c.value - c.reference).abs() <= c.tol;
                if !pass {
                    failed += 1;
                }
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    c.name,
                    fmt(c.value),
                    fmt(c.reference),
                    fmt(c.tol),
                    pass
                );
            }
            diagnostics.insert("checks".into(), checks.len() as f64);
            diagnostics.insert("failed".into(), failed as f64);
            write_artifact(out_dir, "validate.csv", &csv, files)?;
            if failed > 0 {
                return Err(Error::Config(format!(
                    "{failed} of {} validation checks failed",
                    checks.len()
                )));
            }
            Ok(())
        }
    }
}

/// Write a trajectory as CSV with the fixed column set. Entropy columns are
/// NaN when the trajectory was run without entropy evaluation.
pub fn emit_timeseries(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut csv =
        String::from("t,re_alpha,im_alpha,n,phi,phi_ext,phi_q,pi_j,pi_ext,pi_d,pi_u,s_q,g,residual\n");
    for i in 0..traj.times.len() {
        let alpha = traj.alpha[i];
        let nan = f64::NAN;
        let (phi, phi_ext, phi_q, pi_j, pi_ext, pi_d, pi_u, s_q, residual) =
            match traj.records.as_ref().map(|r| &r[i]) {
                Some(r) => (
                    r.phi,
                    r.phi_ext,
                    r.phi_q,
                    r.pi_j,
                    r.pi_ext,
                    r.pi_d,
                    r.pi_u,
                    r.s_q,
                    r.balance_residual,
                ),
                None => (nan, nan, nan, nan, nan, nan, nan, nan, nan),
            };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt(traj.times[i]),
            fmt(alpha.re),
            fmt(alpha.im),
            fmt(traj.occupation[i]),
            fmt(phi),
            fmt(phi_ext),
            fmt(phi_q),
            fmt(pi_j),
            fmt(pi_ext),
            fmt(pi_d),
            fmt(pi_u),
            fmt(s_q),
            fmt(traj.gaussianity[i]),
            fmt(residual)
        );
    }
    fs::write(path, csv).map_err(|e| io_err(path, e))
}

struct ValidationCheck {
    name: &'static str,
    value: f64,
    reference: f64,
    tol: f64,
}

/// Fast self-checks against closed-form references, always at the standard
/// couplings (delta = -2, kappa = 1/2, u = 1 and its linear limit u = 0).
fn validation_checks() -> Result<Vec<ValidationCheck>> {
    let mut checks = Vec::new();

    // two-level Hamiltonian against its explicit matrix
    {
        let p = ModelParams::new(-2.0, 0.5, 1.0, 0.5, 1.0)?;
        let h = operators::build_hamiltonian(&p, 2)?;
        let reference = [
            [Complex64::ZERO, Complex64::new(0.0, -0.5)],
            [Complex64::new(0.0, 0.5), Complex64::new(-2.0, 0.0)],
        ];
        let mut err = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                err = err.max((h[(i, j)] - reference[i][j]).norm());
            }
        }
        checks.push(ValidationCheck {
            name: "hamiltonian_d2",
            value: err,
            reference: 0.0,
            tol: 1e-12,
        });
    }

    // undriven linear cavity: the four Liouvillian modes are known exactly
    {
        let p = ModelParams::new(-2.0, 0.5, 0.0, 0.0, 1.0)?;
        let l = liouville::build_liouvillian(&p, 2)?;
        let modes: [(Vec<Complex64>, Complex64); 4] = [
            (c64vec(&[1.0, 0.0, 0.0, 0.0]), Complex64::ZERO),
            (c64vec(&[0.0, 1.0, 0.0, 0.0]), Complex64::new(-0.5, 2.0)),
            (c64vec(&[0.0, 0.0, 1.0, 0.0]), Complex64::new(-0.5, -2.0)),
            (c64vec(&[-1.0, 0.0, 0.0, 1.0]), Complex64::new(-1.0, 0.0)),
        ];
        let mut err = 0.0f64;
        for (v, zeta) in &modes {
            let mut lv = vec![Complex64::ZERO; 4];
            l.apply_vec(v, &mut lv);
            for i in 0..4 {
                err = err.max((lv[i] - zeta * v[i]).norm());
            }
        }
        checks.push(ValidationCheck {
            name: "liouvillian_modes_d2",
            value: err,
            reference: 0.0,
            tol: 1e-12,
        });
    }

    // bistability edges of the scaled cubic
    {
        let p = ModelParams::new(-2.0, 0.5, 1.0, 0.0, 1.0)?;
        let edges = meanfield::bistability_edges(&p)?;
        checks.push(ValidationCheck {
            name: "mf_eps_lo",
            value: edges.eps_lo,
            reference: 0.701373,
            tol: 1e-5,
        });
        checks.push(ValidationCheck {
            name: "mf_eps_hi",
            value: edges.eps_hi,
            reference: 1.16616,
            tol: 1e-5,
        });
    }

    // hypergeometric series at a unit point, against direct summation
    {
        let one = Complex64::ONE;
        let h = exactness::hyper0f2(one, one, one)?;
        checks.push(ValidationCheck {
            name: "hyper0f2_unit",
            value: h.value.norm(),
            reference: 2.1297025489833064,
            tol: 1e-6,
        });
    }

    // gamma function at an integer
    {
        let g = exactness::complex_gamma(Complex64::new(5.0, 0.0))?;
        checks.push(ValidationCheck {
            name: "gamma_factorial",
            value: (g - Complex64::new(24.0, 0.0)).norm(),
            reference: 0.0,
            tol: 1e-9,
        });
    }

    // Wehrl entropy of a coherent state
    {
        let rho = DensityMatrix::coherent(14, Complex64::new(0.8, 0.3))?;
        let field = phasespace::evaluate(&rho, None)?;
        checks.push(ValidationCheck {
            name: "coherent_wehrl",
            value: phasespace::wehrl_entropy(&field),
            reference: 1.0 + std::f64::consts::PI.ln(),
            tol: 1e-3,
        });
    }

    // non-Gaussianity of the first Fock state
    {
        let rho = DensityMatrix::fock(14, 1)?;
        checks.push(ValidationCheck {
            name: "fock1_nongaussianity",
            value: gaussianity::non_gaussianity(&rho)?,
            reference: 2.0 * std::f64::consts::LN_2,
            tol: 1e-6,
        });
    }

    // linear cavity: the steady state is the known coherent state
    {
        let p = ModelParams::new(-2.0, 0.5, 0.0, 0.5, 1.0)?;
        let d = operators::choose_truncation(&p) + 1;
        let l = liouville::build_liouvillian(&p, d)?;
        let ness = liouville::solve_ness(&l)?;
        let alpha = p.pump() / Complex64::new(p.kappa, p.delta);
        let target = DensityMatrix::coherent(d, alpha)?;
        checks.push(ValidationCheck {
            name: "linear_ness_coherent",
            value: ness.rho.trace_distance(&target),
            reference: 0.0,
            tol: 1e-6,
        });
    }

    // linear cavity: transient first moment from vacuum
    {
        let p = ModelParams::new(-2.0, 0.5, 0.0, 0.5, 1.0)?;
        let d = 16;
        let l = liouville::build_liouvillian(&p, d)?;
        let rho = dynamics::propagate(&l, &DensityMatrix::vacuum(d)?, 1.0, 1e-10)?;
        let decay = Complex64::new(p.kappa, p.delta);
        let expected = p.pump() / decay * (1.0 - (-decay).exp());
        checks.push(ValidationCheck {
            name: "linear_transient_mean",
            value: (rho.mean_a() - expected).norm(),
            reference: 0.0,
            tol: 1e-6,
        });
    }

    Ok(checks)
}

fn c64vec(xs: &[f64]) -> Vec<Complex64> {
    xs.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}
