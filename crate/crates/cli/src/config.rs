//! Run configuration: TOML file plus flag overrides.
//!
//! File layout (all sections and keys optional unless noted):
//!
//! ```toml
//! [problem]
//! example = "ex_simple"        # built-in id, or give custom densities:
//! # u0 = [c0, c1, c2, c3]      # cubic initial potential (default: the
//! #                            # compatible quadratic)
//! # [problem.f]                # custom source density
//! # interval = [-1.0, 1.0]
//! # breakpoints = [0.0]
//! # pieces = [[0.2, 0.0, 0.3, 0.0], [0.6, 0.0, 0.3, 0.0]]  # c0..c3 per piece
//! # [problem.g]                # custom target density, same keys
//!
//! [solver]
//! sigma = 0.01
//! r_safety = 0.5
//! max_steps = 10000000
//! j = 0                        # grid cells; 0 = auto from the admissible dx
//! quad_tol = 1e-10
//! check_cadence = 200
//! probe_count = 0              # 0 = auto (J/16)
//! max_dt = 1.0
//!
//! [bounds]
//! n_samples = 20001
//! # delta1 = ..., delta2 = ..., psi = ..., gamma = ..., k = ...
//! gamma_fallback = 0.0
//!
//! [output]
//! dir = "."
//! timeseries = false
//! solution = true
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use pot1d_core::bounds::BoundsConfig;
use pot1d_core::densities::{self, CatalogEntry, DensitySpec};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    problem: ProblemSection,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    bounds: BoundsSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemSection {
    example: Option<String>,
    u0: Option<[f64; 4]>,
    f: Option<DensitySection>,
    g: Option<DensitySection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensitySection {
    interval: [f64; 2],
    #[serde(default)]
    breakpoints: Vec<f64>,
    pieces: Vec<[f64; 4]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    sigma: Option<f64>,
    r_safety: Option<f64>,
    max_steps: Option<u64>,
    j: Option<usize>,
    quad_tol: Option<f64>,
    check_cadence: Option<u64>,
    probe_count: Option<usize>,
    max_dt: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsSection {
    n_samples: Option<usize>,
    delta1: Option<f64>,
    delta2: Option<f64>,
    psi: Option<f64>,
    gamma: Option<f64>,
    k: Option<f64>,
    gamma_fallback: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
    timeseries: Option<bool>,
    solution: Option<bool>,
}

/// Flag values that override the file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub example: Option<String>,
    pub sigma: Option<f64>,
    pub j: Option<usize>,
    pub max_steps: Option<u64>,
    pub out: Option<PathBuf>,
    pub timeseries: bool,
}

/// Fully resolved run configuration.
pub struct RunConfig {
    pub entry: CatalogEntry<f64>,
    pub sigma: f64,
    pub r_safety: f64,
    pub max_steps: u64,
    /// Grid cells; 0 means size from the admissible dx.
    pub j_count: usize,
    pub quad_tol: f64,
    pub check_cadence: u64,
    pub probe_count: usize,
    pub max_dt: f64,
    pub bounds: BoundsConfig<f64>,
    pub output_dir: PathBuf,
    pub emit_timeseries: bool,
    pub emit_solution: bool,
}

pub fn resolve(config_path: Option<&Path>, flags: Overrides) -> Result<RunConfig> {
    let file: FileConfig = match config_path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config file {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => FileConfig::default(),
    };

    let entry = resolve_entry(&file.problem, flags.example.as_deref())?;

    let sigma = flags.sigma.or(file.solver.sigma).unwrap_or(0.01);
    if sigma <= 0.0 {
        bail!("sigma must be positive (got {sigma})");
    }
    let j_count = flags.j.or(file.solver.j).unwrap_or(0);
    if j_count != 0 && j_count < 4 {
        bail!("grid must be 0 (auto) or at least 4 (got {j_count})");
    }

    let output_dir = flags
        .out
        .or(file.output.dir)
        .or_else(|| std::env::var_os("POT1D_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    Ok(RunConfig {
        entry,
        sigma,
        r_safety: file.solver.r_safety.unwrap_or(0.5),
        max_steps: flags
            .max_steps
            .or(file.solver.max_steps)
            .unwrap_or(10_000_000),
        j_count,
        quad_tol: file.solver.quad_tol.unwrap_or(1e-10),
        check_cadence: file.solver.check_cadence.unwrap_or(200),
        probe_count: file.solver.probe_count.unwrap_or(0),
        max_dt: file.solver.max_dt.unwrap_or(1.0),
        bounds: BoundsConfig {
            n_samples: file.bounds.n_samples.unwrap_or(20_001),
            delta1: file.bounds.delta1,
            delta2: file.bounds.delta2,
            psi: file.bounds.psi,
            gamma: file.bounds.gamma,
            k_tt: file.bounds.k,
            gamma_fallback: file.bounds.gamma_fallback.unwrap_or(0.0),
        },
        output_dir,
        emit_timeseries: flags.timeseries || file.output.timeseries.unwrap_or(false),
        emit_solution: file.output.solution.unwrap_or(true),
    })
}

fn resolve_entry(
    problem: &ProblemSection,
    flag_example: Option<&str>,
) -> Result<CatalogEntry<f64>> {
    let example = flag_example.or(problem.example.as_deref());
    match (example, &problem.f, &problem.g) {
        (Some(id), None, None) => Ok(densities::catalog(id)?),
        (None, Some(f), Some(g)) => {
            let f = build_density("f", f)?;
            let g = build_density("g", g)?;
            let u0 = problem
                .u0
                .unwrap_or_else(|| CatalogEntry::compatible_quadratic(&f, &g));
            let entry = CatalogEntry::with_cubic_u0("custom", f, g, u0, "user-supplied densities");
            entry.check_compatibility(1001)?;
            Ok(entry)
        }
        (Some(_), _, _) => bail!("give either an example id or custom densities, not both"),
        (None, _, _) => {
            bail!("no problem selected: pass --example ID or define [problem.f] and [problem.g]")
        }
    }
}

fn build_density(name: &str, sec: &DensitySection) -> Result<DensitySpec<f64>> {
    let [lo, hi] = sec.interval;
    if !(lo < hi) {
        bail!("{name}: interval must satisfy lo < hi");
    }
    if sec.pieces.len() != sec.breakpoints.len() + 1 {
        bail!(
            "{name}: need one more piece than breakpoints (got {} pieces, {} breakpoints)",
            sec.pieces.len(),
            sec.breakpoints.len()
        );
    }
    if !sec.breakpoints.windows(2).all(|w| w[0] < w[1])
        || !sec.breakpoints.iter().all(|&b| b > lo && b < hi)
    {
        bail!("{name}: breakpoints must be strictly increasing and inside the interval");
    }
    let d = DensitySpec::piecewise_cubic(lo, hi, sec.breakpoints.clone(), sec.pieces.clone());
    let report = densities::validate(&d, 10_001, 1e-10);
    if !report.positivity_ok {
        bail!(
            "{name}: density not positive (sampled min {})",
            report.min_val
        );
    }
    if !report.mass_ok {
        bail!("{name}: density mass {} is not 1", report.mass);
    }
    Ok(d)
}
