use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use super::config::{load_config, AdditivitySpec, ExperimentConfig, ScenarioSpec};
use super::output::write_outputs;
use super::sampling::{sampled_additivity, SampledCheck};
use crate::fem::{CoefficientField, SourceTerm};
use crate::gap::{
    check_subadditivity, check_superadditivity, energy_gap, inner_envelope, scan_monotone_family, AdditivityCheck,
    EnvelopeReport, GapOptions, GapReport, ScanRow, SequenceSpec, ShrinkPolicy,
};
use crate::mesh::{build_mesh, Mesh};
use crate::region::Region;
use crate::scenarios::{
    build_concentration, build_trap_set, control_strong, homogenization_sequence, oscillation_1d, pointwise_control,
    ConcentrationParams, ConcentrationTerm,
};

/// Command-line level switches for one run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the rayon default.
    pub jobs: Option<usize>,
    pub allow_aliasing: bool,
    /// Output directory from the command line.
    pub out_dir: Option<PathBuf>,
}

/// Output directory precedence: command line, then `GGL_OUT`, then the
/// config's `output_dir`, then `ggl-out/<config name>`.
pub fn resolve_output_dir(cli: Option<&Path>, env: Option<&str>, config: &ExperimentConfig) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    if let Some(e) = env.filter(|e| !e.is_empty()) {
        return PathBuf::from(e);
    }
    match &config.output_dir {
        Some(p) => p.clone(),
        None => Path::new("ggl-out").join(&config.name),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrapSplit {
    pub kept: Vec<usize>,
    pub even: Vec<usize>,
    pub odd: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct EnvelopeOutcome {
    pub target: String,
    pub result: Result<EnvelopeReport, String>,
}

#[derive(Debug, Clone)]
pub struct AdditivityOutcome {
    pub label: String,
    pub result: Result<AdditivityCheck, String>,
}

#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub label: String,
    pub result: Result<Vec<ScanRow>, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub build_seconds: f64,
    pub solve_seconds: f64,
}

/// Everything a run computed, in deterministic order.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: ExperimentConfig,
    pub scenario: String,
    pub expected: String,
    pub resolution_rule: String,
    pub reports: Vec<GapReport>,
    pub envelopes: Vec<EnvelopeOutcome>,
    pub additivity: Vec<AdditivityOutcome>,
    pub scans: Vec<ScanOutcome>,
    pub sampled: Option<Result<Vec<SampledCheck>, String>>,
    pub concentration: Vec<ConcentrationTerm>,
    pub trap: Option<TrapSplit>,
    pub failures: Vec<String>,
    pub timing: Timing,
}

impl RunOutcome {
    pub fn report(&self, region: &str) -> Option<&GapReport> {
        self.reports.iter().find(|r| r.region == region)
    }

    pub fn envelope(&self, target: &str) -> Option<&EnvelopeOutcome> {
        self.envelopes.iter().find(|e| e.target == target)
    }
}

/// A finished run: the outcome plus the files written.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub outcome: RunOutcome,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

struct Built {
    name: String,
    expected: String,
    resolution_rule: String,
    sequence: SequenceSpec<f64>,
    concentration: Vec<ConcentrationTerm>,
    trap: Option<(Region<f64>, TrapSplit)>,
}

fn mesh_of(cfg: &ExperimentConfig) -> crate::Result<Arc<Mesh<f64>>> {
    let bounds: Vec<(f64, f64)> = cfg.mesh.bounds.iter().map(|b| (b[0], b[1])).collect();
    Ok(Arc::new(build_mesh(cfg.mesh.dimension, &bounds, &cfg.mesh.resolution)?))
}

fn build(cfg: &ExperimentConfig, mesh: &Arc<Mesh<f64>>, allow_aliasing: bool) -> crate::Result<Built> {
    let indices = cfg.indices.clone();
    let dim = mesh.dim();
    let from_scenario = |s: crate::scenarios::Scenario<f64>| Built {
        name: s.name.clone(),
        expected: s.expected.describe(),
        resolution_rule: s.resolution_rule.clone(),
        sequence: s.sequence,
        concentration: Vec::new(),
        trap: None,
    };
    Ok(match &cfg.scenario {
        ScenarioSpec::ControlStrong { coefficient, density } => {
            let m = coefficient.matrix(dim).map_err(crate::Error::InvalidParameter)?;
            let (lo, hi) = m.eigen_bounds();
            let coeff = CoefficientField::constant(mesh.clone(), m, lo, hi)?;
            let source = SourceTerm::constant_density(mesh.clone(), *density);
            from_scenario(control_strong(coeff, source, indices)?)
        }
        ScenarioSpec::Oscillation1d { amplitude } => {
            from_scenario(oscillation_1d(mesh.clone(), *amplitude, indices, allow_aliasing)?)
        }
        ScenarioSpec::PointwiseControl { base, amplitude } => {
            from_scenario(pointwise_control(mesh.clone(), *base, *amplitude, indices, allow_aliasing)?)
        }
        ScenarioSpec::Homogenization { pattern, cell_resolution, density } => {
            let source = SourceTerm::constant_density(mesh.clone(), *density);
            from_scenario(homogenization_sequence(
                mesh.clone(),
                pattern.clone(),
                *cell_resolution,
                source,
                indices,
                allow_aliasing,
            )?)
        }
        ScenarioSpec::Concentration(p) | ScenarioSpec::TrapSet(p) => {
            let params = ConcentrationParams {
                x0: p.x0,
                inward_normal: p.inward_normal,
                u0: p.u0.clone(),
                outer_radius: p.outer_radius,
                schedule: p.schedule.clone(),
                placement: p.placement.clone(),
                indices,
                min_cells_per_radius: p.min_cells_per_radius,
            };
            let conc = build_concentration(mesh.clone(), &params, &cfg.solver)?;
            let terms = conc.terms.clone();
            if matches!(cfg.scenario, ScenarioSpec::TrapSet(_)) {
                let trap = build_trap_set(&conc)?;
                let split = TrapSplit { kept: trap.kept.clone(), even: trap.even.clone(), odd: trap.odd.clone() };
                Built {
                    name: "trap_set".into(),
                    expected: "even split 1, odd split 0 on the trap region".into(),
                    resolution_rule: conc.scenario.resolution_rule.clone(),
                    sequence: trap.sequence,
                    concentration: terms,
                    trap: Some((trap.region, split)),
                }
            } else {
                let mut b = from_scenario(conc.scenario);
                b.concentration = terms;
                b
            }
        }
    })
}

fn gap_or_partial(seq: &SequenceSpec<f64>, region: &Region<f64>, label: &str, opts: &GapOptions) -> GapReport {
    match energy_gap(seq, region, label, opts) {
        Ok(r) => r,
        Err(f) => {
            warn!("region `{label}`: {}", f.error);
            *f.partial
        }
    }
}

/// Builds the scenario and evaluates every requested report on the current
/// rayon pool. Solver failures are recorded, never dropped.
pub fn execute(cfg: &ExperimentConfig, allow_aliasing: bool) -> anyhow::Result<RunOutcome> {
    let t0 = Instant::now();
    let mesh = mesh_of(cfg)?;
    let built = build(cfg, &mesh, allow_aliasing).with_context(|| format!("building scenario {}", cfg.scenario.name()))?;
    let build_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let opts = GapOptions { solver: cfg.solver, tail_window: cfg.tail_window, tau_spread: cfg.tau_spread };
    let seq = &built.sequence;

    let mut regions: BTreeMap<&str, Region<f64>> = BTreeMap::new();
    for r in &cfg.regions {
        let region = match (&r.shape, &built.trap) {
            (Some(s), _) => s.region(&mesh),
            (None, Some((t, _))) => t.clone(),
            (None, None) => bail!("region `{}` has no shape", r.name),
        };
        regions.insert(r.name.as_str(), region);
    }

    let mut jobs: Vec<(String, SequenceSpec<f64>, &Region<f64>)> = Vec::new();
    for r in &cfg.regions {
        let region = &regions[r.name.as_str()];
        jobs.push((r.name.clone(), seq.clone(), region));
        if let (true, Some((_, split))) = (r.trap_set, &built.trap) {
            jobs.push((format!("{}:even", r.name), seq.subsequence(split.even.clone())?, region));
            jobs.push((format!("{}:odd", r.name), seq.subsequence(split.odd.clone())?, region));
        }
    }
    let reports: Vec<GapReport> = jobs.par_iter().map(|(label, s, region)| gap_or_partial(s, region, label, &opts)).collect();

    let mut failures = Vec::new();
    for r in &reports {
        for e in r.entries.iter().filter(|e| e.error.is_some()) {
            failures.push(format!("region `{}`, k = {}: {}", r.region, e.k, e.error.as_deref().unwrap_or("")));
        }
        if let Some(f) = &r.failure {
            if r.entries.iter().all(|e| e.error.is_none()) {
                failures.push(format!("region `{}`: {f}", r.region));
            }
        }
    }

    let envelopes: Vec<EnvelopeOutcome> = cfg
        .envelopes
        .iter()
        .map(|e| {
            let policy = ShrinkPolicy::Erosion { margins: e.margins.clone() };
            let result = inner_envelope(seq, &regions[e.target.as_str()], &e.target, &policy, &opts).map_err(|err| err.to_string());
            if let Err(msg) = &result {
                failures.push(format!("envelope `{}`: {msg}", e.target));
            }
            EnvelopeOutcome { target: e.target.clone(), result }
        })
        .collect();

    let additivity: Vec<AdditivityOutcome> = cfg
        .additivity
        .iter()
        .map(|a| {
            let (label, result) = match a {
                AdditivitySpec::Superadditivity { v, w, tol } => (
                    format!("super({v}, {w})"),
                    check_superadditivity(seq, &regions[v.as_str()], &regions[w.as_str()], *tol, &opts),
                ),
                AdditivitySpec::Subadditivity { v_inner, v, w, margin, tol } => (
                    format!("sub({v_inner} in {v}, {w})"),
                    check_subadditivity(
                        seq,
                        &regions[v_inner.as_str()],
                        &regions[v.as_str()],
                        &regions[w.as_str()],
                        *margin,
                        *tol,
                        &opts,
                    ),
                ),
            };
            let result = result.map_err(|e| e.to_string());
            if let Err(msg) = &result {
                failures.push(format!("additivity {label}: {msg}"));
            }
            AdditivityOutcome { label, result }
        })
        .collect();

    let scans: Vec<ScanOutcome> = cfg
        .scans
        .iter()
        .map(|s| {
            let family: Vec<(f64, Region<f64>)> =
                s.members.iter().map(|m| (m.t, regions[m.region.as_str()].clone())).collect();
            let result = scan_monotone_family(seq, &family, s.margin, &opts).map_err(|e| e.to_string());
            if let Err(msg) = &result {
                failures.push(format!("scan `{}`: {msg}", s.label));
            }
            ScanOutcome { label: s.label.clone(), result }
        })
        .collect();

    let sampled = cfg.sampled_audit.as_ref().map(|a| {
        let r = sampled_additivity(seq, a.samples, cfg.seed, a.tol, &opts).map_err(|e| e.to_string());
        if let Err(msg) = &r {
            failures.push(format!("sampled audit: {msg}"));
        }
        r
    });

    let solve_seconds = t1.elapsed().as_secs_f64();
    info!("{}: {} reports in {solve_seconds:.2} s", cfg.name, reports.len());
    Ok(RunOutcome {
        config: cfg.clone(),
        scenario: built.name,
        expected: built.expected,
        resolution_rule: built.resolution_rule,
        reports,
        envelopes,
        additivity,
        scans,
        sampled,
        concentration: built.concentration,
        trap: built.trap.map(|(_, s)| s),
        failures,
        timing: Timing { build_seconds, solve_seconds },
    })
}

/// Loads, validates and runs a configuration file, writing all artifacts.
pub fn run_experiment(config_path: &Path, opts: &RunOptions) -> anyhow::Result<RunArtifacts> {
    let started = Instant::now();
    let text = std::fs::read(config_path).with_context(|| format!("reading {}", config_path.display()))?;
    let cfg = load_config(config_path, opts.allow_aliasing).map_err(|issues| {
        let lines: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
        anyhow::anyhow!("invalid configuration {}:\n{}", config_path.display(), lines.join("\n"))
    })?;
    let env = std::env::var("GGL_OUT").ok();
    let out_dir = resolve_output_dir(opts.out_dir.as_deref(), env.as_deref(), &cfg);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().context("building the worker pool")?;
    let outcome = pool.install(|| execute(&cfg, opts.allow_aliasing))?;
    let files = write_outputs(&outcome, &out_dir, &text, opts, started)?;
    Ok(RunArtifacts { outcome, out_dir, files })
}
