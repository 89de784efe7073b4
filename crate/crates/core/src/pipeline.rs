//! Configuration, the end-to-end synthesis run, forward-only verification and
//! the report.
//!
//! A run goes: analyze `f` → choose `L` → build `h` → bound `‖Gh‖` → form
//! `ψ = u₀ − Gh` (perturbing `h` where `ψ` nearly vanishes) → `q = h/ψ` →
//! solve the forward problem for `q` → compare its far field with `f`.

use serde::Deserialize;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result, StageExt};
use crate::forward::{far_field, solve_scattering, DEFAULT_SOLVER_TOL};
use crate::io::{
    read_pattern, read_samples, read_spectrum, samples_on_quadrature, write_potential, write_samples, write_spectrum,
    PatternFile, PotentialFile, SphereSample,
};
use crate::potential::{
    check_condition_on, denominator_field, perturb_source, potential_from_field, potential_from_source, sample_source,
    support_mask, BallGrid, ComplexField, GridGreenOperator, PerturbationRecord, DEFAULT_DELTA, DEFAULT_TAU,
};
use crate::specfun::Direction;
use crate::sphere::{analyze, choose_truncation, FarField, HarmonicSpectrum, SphereQuadrature};
use crate::synthesis::{amplification, born_residual, smallness_bound, source_from_pattern, SourceDensity, WaveConfig};

pub const DEFAULT_RADIAL_ORDER: usize = 24;
pub const DEFAULT_POLAR_ORDER: usize = 12;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RawTruncation {
    Fixed(i64),
    Named(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    k: Option<f64>,
    alpha_theta: Option<f64>,
    alpha_phi: Option<f64>,
    epsilon: Option<f64>,
    b: Option<f64>,
    a: Option<f64>,
    #[serde(rename = "L")]
    truncation: Option<RawTruncation>,
    radial_order: Option<i64>,
    polar_order: Option<i64>,
    delta: Option<f64>,
    tau: Option<f64>,
    f_coeffs_path: Option<PathBuf>,
    f_samples_path: Option<PathBuf>,
}

/// Where the target pattern comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum PatternSource {
    Coefficients(PathBuf),
    Samples(PathBuf),
}

/// A parsed configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub wave: WaveConfig,
    pub alpha_theta: f64,
    pub alpha_phi: f64,
    /// `None` means choose `L` from `f` and `ε`.
    pub truncation: Option<usize>,
    pub radial_order: usize,
    pub polar_order: usize,
    pub delta: f64,
    pub tau: f64,
    /// Paths are resolved against the directory of the config file.
    pub pattern: Option<PatternSource>,
}

fn positive(problems: &mut Vec<(String, String)>, key: &str, v: Option<f64>, default: Option<f64>) -> f64 {
    match v.or(default) {
        None => {
            problems.push((key.into(), "missing".into()));
            f64::NAN
        }
        Some(x) if !(x > 0.0 && x.is_finite()) => {
            problems.push((key.into(), format!("must be > 0, got {x}")));
            f64::NAN
        }
        Some(x) => x,
    }
}

fn order(problems: &mut Vec<(String, String)>, key: &str, v: Option<i64>, default: usize) -> usize {
    match v {
        None => default,
        Some(n) if n >= 1 => n as usize,
        Some(n) => {
            problems.push((key.into(), format!("must be >= 1, got {n}")));
            default
        }
    }
}

impl PipelineConfig {
    /// Parses config text; relative paths are taken relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0),
            message: e.message().to_string(),
        })?;
        let mut problems = Vec::new();
        let k = positive(&mut problems, "k", raw.k, None);
        let epsilon = positive(&mut problems, "epsilon", raw.epsilon, None);
        let b = positive(&mut problems, "b", raw.b, None);
        let a = positive(&mut problems, "a", raw.a, None);
        if b > 1.0 {
            problems.push(("b".into(), format!("must be <= 1, got {b}")));
        }
        if b > a {
            problems.push(("b".into(), format!("support radius b = {b} exceeds domain radius a = {a}")));
        }
        let alpha_theta = raw.alpha_theta.unwrap_or(0.0);
        let alpha_phi = raw.alpha_phi.unwrap_or(0.0);
        for (key, v) in [("alpha_theta", alpha_theta), ("alpha_phi", alpha_phi)] {
            if !v.is_finite() {
                problems.push((key.into(), format!("must be finite, got {v}")));
            }
        }
        let truncation = match raw.truncation {
            None => None,
            Some(RawTruncation::Named(s)) if s == "auto" => None,
            Some(RawTruncation::Named(s)) => {
                problems.push(("L".into(), format!("must be a degree or \"auto\", got {s:?}")));
                None
            }
            Some(RawTruncation::Fixed(n)) if n >= 0 => Some(n as usize),
            Some(RawTruncation::Fixed(n)) => {
                problems.push(("L".into(), format!("must be >= 0, got {n}")));
                None
            }
        };
        let radial_order = order(&mut problems, "radial_order", raw.radial_order, DEFAULT_RADIAL_ORDER);
        let polar_order = order(&mut problems, "polar_order", raw.polar_order, DEFAULT_POLAR_ORDER);
        if let Some(l) = truncation {
            if polar_order < l + 1 {
                problems.push((
                    "polar_order".into(),
                    format!("must be >= L + 1 = {} to resolve degree {l}, got {polar_order}", l + 1),
                ));
            }
        }
        let delta = positive(&mut problems, "delta", raw.delta, Some(DEFAULT_DELTA));
        let tau = positive(&mut problems, "tau", raw.tau, Some(DEFAULT_TAU));
        let pattern = match (raw.f_coeffs_path, raw.f_samples_path) {
            (Some(_), Some(_)) => {
                problems.push(("f_coeffs_path".into(), "give either f_coeffs_path or f_samples_path, not both".into()));
                None
            }
            (Some(p), None) => Some(PatternSource::Coefficients(base.join(p))),
            (None, Some(p)) => Some(PatternSource::Samples(base.join(p))),
            (None, None) => None,
        };
        if !problems.is_empty() {
            return Err(Error::InvalidConfig { problems });
        }
        let alpha = Direction::from_angles(alpha_theta, alpha_phi);
        Ok(Self {
            wave: WaveConfig::new(k, alpha, epsilon, b, a)?,
            alpha_theta,
            alpha_phi,
            truncation,
            radial_order,
            polar_order,
            delta,
            tau,
            pattern,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    /// The effective configuration, defaults included, in config syntax.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let w = &self.wave;
        let _ = writeln!(s, "k = {}", w.k);
        let _ = writeln!(s, "alpha_theta = {}", self.alpha_theta);
        let _ = writeln!(s, "alpha_phi = {}", self.alpha_phi);
        let _ = writeln!(s, "epsilon = {}", w.epsilon);
        let _ = writeln!(s, "b = {}", w.b);
        let _ = writeln!(s, "a = {}", w.a);
        match self.truncation {
            Some(l) => {
                let _ = writeln!(s, "L = {l}");
            }
            None => {
                let _ = writeln!(s, "L = \"auto\"");
            }
        }
        let _ = writeln!(s, "radial_order = {}", self.radial_order);
        let _ = writeln!(s, "polar_order = {}", self.polar_order);
        let _ = writeln!(s, "delta = {}", self.delta);
        let _ = writeln!(s, "tau = {}", self.tau);
        match &self.pattern {
            Some(PatternSource::Coefficients(p)) => {
                let _ = writeln!(s, "f_coeffs_path = {:?}", p.display().to_string());
            }
            Some(PatternSource::Samples(p)) => {
                let _ = writeln!(s, "f_samples_path = {:?}", p.display().to_string());
            }
            None => {}
        }
        s
    }

    pub fn grid(&self) -> Result<Arc<BallGrid>> {
        Ok(Arc::new(BallGrid::for_config(&self.wave, self.radial_order, self.polar_order)?))
    }
}

/// Spectrum of sampled data up to degree `lmax` (default: all the sample
/// quadrature resolves), with the order of that quadrature.
pub fn analyze_samples(samples: &[SphereSample], lmax: Option<usize>) -> Result<(HarmonicSpectrum, usize)> {
    let (quad, values) = samples_on_quadrature(samples)?;
    let n = quad.order();
    let lmax = match lmax {
        Some(l) if l + 1 > n => {
            return Err(Error::config(
                "L",
                format!(
                    "samples on an order-{n} sphere quadrature resolve degrees up to {}; L = {l} needs order >= {}",
                    n - 1,
                    l + 1
                ),
            ))
        }
        Some(l) => l,
        None => n - 1,
    };
    Ok((analyze(&values, &quad, lmax)?, n))
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path).map(BufReader::new).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

/// Reads a pattern file of either kind. Samples are analyzed up to the
/// highest degree their quadrature resolves, which must be at least `need`.
pub fn load_pattern(path: &Path, need: Option<usize>) -> Result<HarmonicSpectrum> {
    match read_pattern(open(path)?)? {
        PatternFile::Spectrum(s) => Ok(s),
        PatternFile::Samples(s) => {
            if let Some(l) = need {
                analyze_samples(&s, Some(l))?;
            }
            Ok(analyze_samples(&s, None)?.0)
        }
    }
}

/// A configuration together with the pattern it names.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub config: PipelineConfig,
    pub f: HarmonicSpectrum,
}

pub fn validate_config(path: &Path) -> Result<ValidatedConfig> {
    let config = PipelineConfig::from_file(path)?;
    let f = match &config.pattern {
        None => {
            return Err(Error::InvalidConfig {
                problems: vec![("f_coeffs_path".into(), "missing: give f_coeffs_path or f_samples_path".into())],
            })
        }
        Some(PatternSource::Coefficients(p)) => read_spectrum(open(p)?)?,
        Some(PatternSource::Samples(p)) => {
            let samples = read_samples(open(p)?)?;
            if let Some(l) = config.truncation {
                analyze_samples(&samples, Some(l))?;
            }
            analyze_samples(&samples, None)?.0
        }
    };
    Ok(ValidatedConfig { config, f })
}

/// Everything a synthesis run reports.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisReport {
    pub truncation: usize,
    pub truncation_auto: bool,
    pub epsilon: f64,
    /// `‖f − Born(h)‖_{L²(S²)}`.
    pub born_residual: f64,
    /// `√a/√(4π) ‖h‖_{L²(D)}`; below 1 certifies `ψ ≠ 0`.
    pub smallness_bound: f64,
    pub certified: bool,
    /// `min |ψ|` over the grid for the unperturbed `h`.
    pub min_psi: f64,
    /// `min |ψ|` over the support of `h`.
    pub min_psi_support: f64,
    pub perturbation: Option<PerturbationRecord>,
    pub max_q: f64,
    /// `‖f − A_q‖_{L²(S²)}`.
    pub final_residual: f64,
    pub radial_order: usize,
    pub polar_order: usize,
    pub nodes: usize,
    pub far_field_order: usize,
    pub solver_iterations: usize,
    pub solver_relative_residual: f64,
    pub used_dense: bool,
    /// Wall-clock seconds per stage.
    pub timings: Vec<(&'static str, f64)>,
}

impl SynthesisReport {
    /// The run succeeds iff the final residual is below `ε`.
    pub fn passed(&self) -> bool {
        self.final_residual < self.epsilon
    }

    /// Flat `key=value` lines; timing keys start with `time_`.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("L", self.truncation.to_string());
        kv("L_auto", self.truncation_auto.to_string());
        kv("epsilon", format!("{:e}", self.epsilon));
        kv("born_residual", format!("{:e}", self.born_residual));
        kv("smallness_bound", format!("{:e}", self.smallness_bound));
        kv("certified", self.certified.to_string());
        kv("min_psi", format!("{:e}", self.min_psi));
        kv("min_psi_support", format!("{:e}", self.min_psi_support));
        kv("perturbed", self.perturbation.is_some().to_string());
        if let Some(p) = &self.perturbation {
            kv("perturbation_delta", format!("{:e}", p.delta));
            kv("perturbation_zeroed_nodes", p.zeroed_nodes.to_string());
            kv("perturbation_volume", format!("{:e}", p.near_zero_volume));
            kv("perturbation_change_norm", format!("{:e}", p.change_norm));
            kv("perturbation_min_psi", format!("{:e}", p.min_modulus));
            kv("perturbation_rounds", p.rounds.to_string());
        }
        kv("max_q", format!("{:e}", self.max_q));
        kv("final_residual", format!("{:e}", self.final_residual));
        kv("passed", self.passed().to_string());
        kv("radial_order", self.radial_order.to_string());
        kv("polar_order", self.polar_order.to_string());
        kv("nodes", self.nodes.to_string());
        kv("far_field_order", self.far_field_order.to_string());
        kv("solver_iterations", self.solver_iterations.to_string());
        kv("solver_relative_residual", format!("{:e}", self.solver_relative_residual));
        kv("solver_dense", self.used_dense.to_string());
        for (stage, t) in &self.timings {
            kv(&format!("time_{stage}"), format!("{t:.6}"));
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let auto = if self.truncation_auto { " (chosen from epsilon)" } else { "" };
        let _ = writeln!(s, "truncation degree L     {}{auto}", self.truncation);
        let _ = writeln!(s, "Born residual           {:.6e}", self.born_residual);
        let _ = writeln!(s, "smallness bound         {:.6e}{}", self.smallness_bound,
            if self.certified { "  (< 1: psi certified nonzero)" } else { "  (>= 1: not certified)" });
        let _ = writeln!(s, "min |psi| on grid       {:.6e}", self.min_psi);
        let _ = writeln!(s, "min |psi| on supp h     {:.6e}", self.min_psi_support);
        match &self.perturbation {
            None => {
                let _ = writeln!(s, "perturbation            none");
            }
            Some(p) => {
                let _ = writeln!(s, "perturbation            delta = {:e}, {} rounds", p.delta, p.rounds);
                let _ = writeln!(s, "  zeroed nodes          {}", p.zeroed_nodes);
                let _ = writeln!(s, "  zeroed volume         {:.6e}", p.near_zero_volume);
                let _ = writeln!(s, "  ||h - h_delta||       {:.6e}", p.change_norm);
                let _ = writeln!(s, "  min |psi_delta|       {:.6e}", p.min_modulus);
            }
        }
        let _ = writeln!(s, "max |q|                 {:.6e}", self.max_q);
        let _ = writeln!(s, "grid                    radial {} x polar {} ({} nodes)", self.radial_order, self.polar_order, self.nodes);
        let _ = writeln!(s, "forward solve           {} iterations{}, relative residual {:.3e}",
            self.solver_iterations, if self.used_dense { " + dense LU" } else { "" }, self.solver_relative_residual);
        let _ = writeln!(s, "final residual          {:.6e}  (epsilon {:e}): {}", self.final_residual, self.epsilon,
            if self.passed() { "PASS" } else { "FAIL" });
        let total: f64 = self.timings.iter().map(|(_, t)| t).sum();
        let _ = writeln!(s, "wall clock              {total:.3} s");
        for (stage, t) in &self.timings {
            let _ = writeln!(s, "  {stage:<21} {t:.3} s");
        }
        s
    }
}

/// In-memory result of a synthesis run.
#[derive(Debug, Clone)]
pub struct SynthesisRun {
    pub report: SynthesisReport,
    pub source: SourceDensity,
    pub q: ComplexField,
    /// Total field solving the forward problem for `q`.
    pub u: ComplexField,
    pub far_field: FarField,
    /// Relative GMRES residual after each step.
    pub residual_history: Vec<f64>,
}

struct Clock {
    last: Instant,
    timings: Vec<(&'static str, f64)>,
}

impl Clock {
    fn new() -> Self {
        Self { last: Instant::now(), timings: Vec::new() }
    }

    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.timings.push((stage, (now - self.last).as_secs_f64()));
        self.last = now;
    }
}

/// Runs the whole pipeline without touching the filesystem.
pub fn synthesize(v: &ValidatedConfig) -> Result<SynthesisRun> {
    let c = &v.config;
    let cfg = &c.wave;
    let f = &v.f;
    let mut clock = Clock::new();

    let truncation = match c.truncation {
        Some(l) => l,
        None => choose_truncation(f, cfg.epsilon).stage("truncation")?,
    };
    if c.polar_order < truncation + 1 {
        return Err(Error::config(
            "polar_order",
            format!("must be >= L + 1 = {} to resolve degree {truncation}, got {}", truncation + 1, c.polar_order),
        ))
        .stage("truncation");
    }
    clock.lap("truncation");

    let h = source_from_pattern(f, cfg, truncation).stage("synthesis")?;
    let born = born_residual(f, &h, cfg).stage("synthesis")?;
    let bound = smallness_bound(&h, cfg);
    let certified = bound < 1.0;
    clock.lap("synthesis");

    let grid = c.grid().stage("denominator")?;
    let den = denominator_field(&h, &grid, cfg).stage("denominator")?;
    let h_grid = sample_source(&h, &grid);
    let support = support_mask(&h_grid);
    let min_psi_support = den.psi.min_modulus(Some(&support)).map_or(f64::INFINITY, |(m, _)| m);
    clock.lap("denominator");

    let op = GridGreenOperator::new(Arc::clone(&grid), cfg.k).stage("operator")?;
    clock.lap("operator");

    let needs_perturbation = !certified && !check_condition_on(&den.psi, c.delta, Some(&support)).satisfied;
    let (q, perturbation) = if needs_perturbation {
        let p = perturb_source(&h_grid, c.delta, &op, cfg).stage("perturbation")?;
        let q = potential_from_field(&p.h, &p.psi, c.tau).stage("potential")?;
        (q, Some(p.record))
    } else {
        (potential_from_source(&h, &den.psi, c.tau).stage("potential")?, None)
    };
    clock.lap("potential");

    let sol = solve_scattering(&q, &op, cfg, DEFAULT_SOLVER_TOL).stage("forward")?;
    let far_order = c.polar_order.max(f.degree() + 1);
    let quad = SphereQuadrature::new(far_order).stage("forward")?;
    let ff = far_field(&q, &sol.u, &quad, cfg).stage("forward")?;
    let final_residual = ff.distance_to(f);
    clock.lap("forward");

    let report = SynthesisReport {
        truncation,
        truncation_auto: c.truncation.is_none(),
        epsilon: cfg.epsilon,
        born_residual: born,
        smallness_bound: bound,
        certified,
        min_psi: den.min_modulus,
        min_psi_support,
        perturbation,
        max_q: q.max_modulus(),
        final_residual,
        radial_order: c.radial_order,
        polar_order: c.polar_order,
        nodes: grid.len(),
        far_field_order: far_order,
        solver_iterations: sol.iterations,
        solver_relative_residual: sol.relative_residual,
        used_dense: sol.used_dense,
        timings: clock.timings,
    };
    Ok(SynthesisRun {
        report,
        source: h,
        q,
        u: sol.u,
        far_field: ff,
        residual_history: sol.residual_history,
    })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn potential_header(c: &PipelineConfig) -> Vec<(&'static str, String)> {
    vec![
        ("k", c.wave.k.to_string()),
        ("alpha_theta", c.alpha_theta.to_string()),
        ("alpha_phi", c.alpha_phi.to_string()),
        ("a", c.wave.a.to_string()),
        ("b", c.wave.b.to_string()),
        ("radial_order", c.radial_order.to_string()),
        ("polar_order", c.polar_order.to_string()),
    ]
}

pub fn write_solver_log<W: Write>(mut w: W, history: &[f64], used_dense: bool, final_relative: f64) -> Result<()> {
    writeln!(w, "# iteration,relative_residual")?;
    for (i, r) in history.iter().enumerate() {
        writeln!(w, "{},{r:e}", i + 1)?;
    }
    writeln!(w, "# dense_fallback={used_dense}")?;
    writeln!(w, "# final_relative_residual={final_relative:e}")?;
    Ok(())
}

/// Names of the files written into the run directory.
pub mod artifacts {
    pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";
    pub const POTENTIAL: &str = "q.csv";
    pub const FAR_FIELD: &str = "far_field.csv";
    pub const FAR_FIELD_SPECTRUM: &str = "far_field_spectrum.csv";
    pub const TARGET_SPECTRUM: &str = "f_spectrum.csv";
    pub const SOURCE_SPECTRUM: &str = "h_spectrum.csv";
    pub const REPORT_TEXT: &str = "report.txt";
    pub const REPORT_KV: &str = "report.kv";
    pub const SOLVER_LOG: &str = "solver.log";
    pub const RESIDUAL_VS_L: &str = "residual_vs_L.csv";
    pub const Q_PROFILE: &str = "q_profile.csv";
}

/// Writes all run artifacts into `dir`, creating it if needed. With `plot`,
/// also writes the Born residual and amplification against `L`, and radial
/// profiles of `|q|`.
pub fn write_artifacts(v: &ValidatedConfig, run: &SynthesisRun, dir: &Path, plot: bool) -> Result<()> {
    use artifacts::*;
    fs::create_dir_all(dir)?;
    let c = &v.config;
    fs::write(dir.join(EFFECTIVE_CONFIG), c.echo())?;
    let grid = run.q.grid();
    write_potential(create(&dir.join(POTENTIAL))?, &potential_header(c), grid.points(), run.q.values())?;
    write_samples(create(&dir.join(FAR_FIELD))?, run.far_field.quadrature(), run.far_field.values())?;
    write_spectrum(create(&dir.join(FAR_FIELD_SPECTRUM))?, &run.far_field.spectrum())?;
    write_spectrum(create(&dir.join(TARGET_SPECTRUM))?, &v.f)?;
    write_spectrum(create(&dir.join(SOURCE_SPECTRUM))?, run.source.spectrum())?;
    write_solver_log(
        create(&dir.join(SOLVER_LOG))?,
        &run.residual_history,
        run.report.used_dense,
        run.report.solver_relative_residual,
    )?;
    fs::write(dir.join(REPORT_TEXT), run.report.to_text())?;
    fs::write(dir.join(REPORT_KV), run.report.to_key_values())?;
    if plot {
        let mut w = create(&dir.join(RESIDUAL_VS_L))?;
        writeln!(w, "L,born_residual,max_amplification")?;
        let mut worst: f64 = 0.0;
        for l in 0..=v.f.degree() {
            worst = worst.max(amplification(l, c.wave.k, c.wave.b)?);
            writeln!(w, "{l},{:e},{worst:e}", v.f.tail_mass(l).sqrt())?;
        }
        let mut w = create(&dir.join(Q_PROFILE))?;
        writeln!(w, "r,max_abs_q,rms_abs_q")?;
        let m = grid.shell_size();
        for (i, r) in grid.radii().iter().enumerate() {
            let shell = &run.q.values()[i * m..(i + 1) * m];
            let wts = &grid.sphere().weights()[..m];
            let max = shell.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let ms: f64 = shell.iter().zip(wts).map(|(z, w)| w * z.norm_sqr()).sum::<f64>() / (4.0 * std::f64::consts::PI);
            writeln!(w, "{r:e},{max:e},{:e}", ms.sqrt())?;
        }
    }
    Ok(())
}

/// `synthesize` followed by `write_artifacts`.
pub fn run_synthesis(config_path: &Path, out_dir: &Path, plot: bool) -> Result<SynthesisRun> {
    let v = validate_config(config_path).stage("config")?;
    let run = synthesize(&v)?;
    write_artifacts(&v, &run, out_dir, plot).stage("output")?;
    Ok(run)
}

/// Result of re-solving the forward problem for a stored potential.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub epsilon: f64,
    pub final_residual: f64,
    pub max_q: f64,
    pub nodes: usize,
    pub far_field_order: usize,
    pub solver_iterations: usize,
    pub solver_relative_residual: f64,
    pub used_dense: bool,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.final_residual < self.epsilon
    }

    pub fn to_key_values(&self) -> String {
        format!(
            "epsilon={:e}\nfinal_residual={:e}\npassed={}\nmax_q={:e}\nnodes={}\nfar_field_order={}\nsolver_iterations={}\nsolver_relative_residual={:e}\nsolver_dense={}\n",
            self.epsilon,
            self.final_residual,
            self.passed(),
            self.max_q,
            self.nodes,
            self.far_field_order,
            self.solver_iterations,
            self.solver_relative_residual,
            self.used_dense
        )
    }

    pub fn to_text(&self) -> String {
        format!(
            "grid                    {} nodes\nmax |q|                 {:.6e}\nforward solve           {} iterations{}, relative residual {:.3e}\nfinal residual          {:.6e}  (epsilon {:e}): {}\n",
            self.nodes,
            self.max_q,
            self.solver_iterations,
            if self.used_dense { " + dense LU" } else { "" },
            self.solver_relative_residual,
            self.final_residual,
            self.epsilon,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

/// Solves the forward problem for a potential file written by a synthesis
/// run and compares the far field with `f`. The grid comes from the config
/// and must reproduce the file's nodes.
pub fn verify(config: &PipelineConfig, potential: &PotentialFile, f: &HarmonicSpectrum) -> Result<VerifyReport> {
    let cfg = &config.wave;
    for (key, want) in potential_header(config) {
        if let Some(got) = potential.header_value(key) {
            let same = match (got.parse::<f64>(), want.parse::<f64>()) {
                (Ok(x), Ok(y)) => x == y,
                _ => got == want,
            };
            if !same {
                return Err(Error::config(key, format!("q file has {key}={got}, config gives {want}")));
            }
        }
    }
    let grid = config.grid()?;
    if potential.points.len() != grid.len() {
        return Err(Error::config(
            "radial_order",
            format!(
                "q file has {} nodes; radial_order={} polar_order={} give {}",
                potential.points.len(),
                config.radial_order,
                config.polar_order,
                grid.len()
            ),
        ));
    }
    let tol = 1e-12 * cfg.a.max(1.0);
    for (i, (p, x)) in potential.points.iter().zip(grid.points()).enumerate() {
        if (0..3).any(|d| (p[d] - x[d]).abs() > tol) {
            return Err(Error::config("radial_order", format!("q file node {} does not lie on the configured grid", i + 1)));
        }
    }
    let q = ComplexField::new(Arc::clone(&grid), potential.values.clone())?;
    let op = GridGreenOperator::new(Arc::clone(&grid), cfg.k).stage("operator")?;
    let sol = solve_scattering(&q, &op, cfg, DEFAULT_SOLVER_TOL).stage("forward")?;
    let far_order = config.polar_order.max(f.degree() + 1);
    let quad = SphereQuadrature::new(far_order)?;
    let ff = far_field(&q, &sol.u, &quad, cfg).stage("forward")?;
    Ok(VerifyReport {
        epsilon: cfg.epsilon,
        final_residual: ff.distance_to(f),
        max_q: q.max_modulus(),
        nodes: grid.len(),
        far_field_order: far_order,
        solver_iterations: sol.iterations,
        solver_relative_residual: sol.relative_residual,
        used_dense: sol.used_dense,
    })
}

/// Broad failure classes, one process exit status each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Bad config, unreadable or malformed input, or output failure.
    Input,
    PerturbationFailed,
    SolverNotConverged,
    Other,
}

impl FailureKind {
    pub fn of(e: &Error) -> Self {
        match e.root() {
            Error::Config { .. } | Error::InvalidConfig { .. } | Error::Parse { .. } | Error::Io(_) => Self::Input,
            Error::PerturbationFailed { .. } => Self::PerturbationFailed,
            Error::SolverNotConverged { .. } => Self::SolverNotConverged,
            _ => Self::Other,
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Self::Input => 2,
            Self::PerturbationFailed => 3,
            Self::SolverNotConverged => 4,
            Self::Other => 5,
        }
    }
}
