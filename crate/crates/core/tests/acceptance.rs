use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ggl::energy::{check_min_energy_identity, h_minus_one_norm};
use ggl::fem::{SolverOptions, SourceTerm};
use ggl::gap::{GapOptions, GapReport, Verdict};
use ggl::mesh::build_mesh;
use ggl::region::Region;
use ggl::runner::{run_experiment, sampled_additivity, RunArtifacts, RunOptions, RunOutcome};
use ggl::scenarios::{
    build_concentration, effective_tensor, ConcentrationParams, PeriodicPattern, Placement, RadiusSchedule,
};
use ggl::shape::ShapeExpr;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONFIGS: [&str; 6] =
    ["control_strong", "oscillation_1d", "pointwise_control", "homogenization", "concentration", "trap_set"];

struct Gate {
    failed: usize,
}

impl Gate {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("{} [{id}] {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"))
}

fn run(name: &str, jobs: usize, dir: &Path) -> RunArtifacts {
    let opts = RunOptions { jobs: Some(jobs), allow_aliasing: false, out_dir: Some(dir.join(format!("{name}-j{jobs}"))) };
    run_experiment(&config_path(name), &opts).unwrap_or_else(|e| panic!("{name}: {e:#}"))
}

fn report<'a>(o: &'a RunOutcome, region: &str) -> &'a GapReport {
    o.report(region).unwrap_or_else(|| panic!("{}: no report for `{region}`", o.config.name))
}

fn nu(r: &GapReport) -> (f64, f64) {
    (r.nu_lo.unwrap_or(f64::NAN), r.nu_hi.unwrap_or(f64::NAN))
}

fn secs(d: Duration) -> String {
    format!("{:.1} s", d.as_secs_f64())
}

fn criterion_1(g: &mut Gate) {
    let t = Instant::now();
    let mesh = Arc::new(build_mesh::<f64>(2, &[(0.0, 1.0), (0.0, 1.0)], &[64, 64]).unwrap());
    let region = Region::full(mesh.clone());
    let opts = SolverOptions { tolerance: 1e-10, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let blocks: usize = rng.gen_range(2..=8);
        let values: Vec<f64> = (0..blocks * blocks).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let f = SourceTerm::from_fn(mesh.clone(), |x| {
            let i = ((x[0] * blocks as f64) as usize).min(blocks - 1);
            let j = ((x[1] * blocks as f64) as usize).min(blocks - 1);
            (values[j * blocks + i], [0.0, 0.0])
        })
        .unwrap();
        let check = check_min_energy_identity(&f, &region, &opts).unwrap();
        worst = worst.max(check.relative);
    }
    let elapsed = t.elapsed();
    g.line(
        "1",
        worst <= 1e-8 && elapsed < Duration::from_secs(60),
        format!("min-energy identity, 50 random piecewise-constant sources at h=1/64: worst relative residual {worst:.3e} (<= 1e-8), {}", secs(elapsed)),
    );
}

fn criterion_2(g: &mut Gate) {
    let mesh = Arc::new(build_mesh::<f64>(1, &[(0.0, 1.0)], &[512]).unwrap());
    let region = Region::full(mesh.clone());
    let opts = SolverOptions { tolerance: 1e-12, ..Default::default() };
    let norm = h_minus_one_norm(&SourceTerm::constant_density(mesh, 1.0), &region, &opts).unwrap().norm;
    let err = (norm - 1.0 / 12f64.sqrt()).abs();
    g.line("2", err <= 1e-6, format!("dual norm of 1 on (0,1) at h=1/512: {norm:.10} vs 1/sqrt(12), error {err:.2e} (<= 1e-6)"));
}

fn criterion_3(g: &mut Gate, o: &RunOutcome, elapsed: Duration) {
    let mut pass = elapsed < Duration::from_secs(120);
    let mut parts = Vec::new();
    for (region, len) in [("unit", 1.0), ("left_half", 0.5), ("middle", 0.5)] {
        let r = report(o, region);
        let (lo, hi) = nu(r);
        let target = len / 4.0;
        let rel = ((lo - target).abs()).max((hi - target).abs()) / target;
        let spread = r.spread.unwrap_or(f64::NAN);
        pass &= rel <= 0.02 && spread <= 0.005;
        parts.push(format!("{region}: [{lo:.4}, {hi:.4}] vs {target:.4} (rel {rel:.2e}), spread {spread:.4}"));
    }
    g.line("3", pass, format!("1D oscillation gap, k=64..256, h=2^-15: {}; {}", parts.join("; "), secs(elapsed)));
}

fn criterion_4(g: &mut Gate, o: &RunOutcome, elapsed: Duration) {
    let (lo, hi) = nu(report(o, "far"));
    g.line("4a", lo <= 0.05 && hi <= 0.05, format!("concentration, region away from x0: nu'' {lo:.4}, nu' {hi:.4} (<= 0.05)"));

    let (lo, hi) = nu(report(o, "ball_r"));
    let inside = |v: f64| (0.85..=1.1).contains(&v);
    g.line("4b", inside(lo) && inside(hi), format!("concentration, B(x0,R): nu'' {lo:.4}, nu' {hi:.4} (in [0.85, 1.1])"));

    let (lo, _) = nu(report(o, "u0"));
    let (env, defect) = match o.envelope("u0").map(|e| &e.result) {
        Some(Ok(e)) => (e.envelope, e.defect),
        _ => (f64::NAN, f64::NAN),
    };
    g.line(
        "4c",
        lo >= 0.85 && env <= 0.1 && defect >= 0.75,
        format!("concentration, U0: nu'' {lo:.4} (>= 0.85), inner envelope {env:.4} (<= 0.1), defect {defect:.4} (>= 0.75)"),
    );

    let norms: Vec<f64> = o.concentration.iter().filter(|t| t.retained).filter_map(|t| t.normalization).collect();
    let ok = !norms.is_empty() && norms.iter().all(|n| (1.96..=2.04).contains(n));
    let (min, max) = norms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &n| (a.min(n), b.max(n)));
    g.line(
        "4d",
        ok && elapsed < Duration::from_secs(900),
        format!("concentration normalization over {} retained indices in [{min:.4}, {max:.4}] (within [1.96, 2.04]), {}", norms.len(), secs(elapsed)),
    );
}

fn criterion_5(g: &mut Gate, o: &RunOutcome, elapsed: Duration) {
    let trap = o.trap.as_ref().expect("trap split");
    let alpha_gaps = |label: &str| -> Vec<f64> {
        let r = report(o, label);
        let a = r.alpha.unwrap_or(f64::NAN);
        r.entries.iter().map(|e| e.alpha_k.unwrap_or(f64::NAN) - a).collect()
    };
    let odd = alpha_gaps("trap:odd");
    let even = alpha_gaps("trap:even");
    let verdict = report(o, "trap").verdict;
    let odd_max = odd.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let even_min = even.iter().copied().fold(f64::INFINITY, f64::min);
    g.line(
        "5",
        trap.kept.len() >= 4
            && odd_max <= 0.1
            && even_min >= 0.8
            && verdict == Verdict::NonConverged
            && elapsed < Duration::from_secs(900),
        format!(
            "trap set with {} disjoint balls: odd split max gap {odd_max:.4} (<= 0.1), even split min gap {even_min:.4} (>= 0.8), verdict {verdict}, {}",
            trap.kept.len(),
            secs(elapsed)
        ),
    );
}

fn criterion_6(g: &mut Gate, o: &RunOutcome) {
    let t = Instant::now();
    let lam = effective_tensor::<f64>(&PeriodicPattern::Laminate { a: 1.0, b: 4.0, axis: 0, fraction: 0.5 }, 1, 128).unwrap();
    let lam_err = (lam.get(0, 0) - 1.6).abs() / 1.6;
    let cb = effective_tensor::<f64>(&PeriodicPattern::Checkerboard { a: 1.0, b: 4.0 }, 2, 128).unwrap();
    let cb_err = [(cb.get(0, 0) - 2.0).abs(), (cb.get(1, 1) - 2.0).abs(), cb.get(0, 1).abs()]
        .into_iter()
        .fold(0.0, f64::max)
        / 2.0;
    let r = report(o, "unit");
    let alpha = r.alpha.unwrap_or(f64::NAN);
    let at32 = r.entries.iter().find(|e| e.k == 32).and_then(|e| e.alpha_k).unwrap_or(f64::NAN);
    let rel32 = (at32 - alpha).abs() / alpha;
    let raw = r.nu_hi_raw.unwrap_or(f64::NAN).abs().max(r.nu_lo_raw.unwrap_or(f64::NAN).abs());
    let elapsed = t.elapsed();
    g.line(
        "6",
        lam_err <= 0.01 && cb_err <= 0.02 && rel32 <= 0.05 && raw <= 0.02 * alpha && elapsed < Duration::from_secs(600),
        format!(
            "homogenization: laminate {:.6} vs 1.6 (rel {lam_err:.2e}), checkerboard [{:.4}, {:.4}; {:.4}] vs 2I (rel {cb_err:.2e}), alpha_32 rel {rel32:.2e} (<= 5%), max |raw nu| {raw:.2e} (<= {:.2e}), {}",
            lam.get(0, 0),
            cb.get(0, 0),
            cb.get(0, 1),
            cb.get(1, 1),
            0.02 * alpha,
            secs(elapsed)
        ),
    );
}

fn criterion_7(g: &mut Gate, outcomes: &BTreeMap<&str, RunOutcome>) {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut tally = |family: &str, checks: Vec<ggl::gap::AdditivityCheck>| {
        let ok = checks.len() == 20 && checks.iter().all(|c| c.pass);
        let worst = checks.iter().map(|c| c.slack()).fold(f64::INFINITY, f64::min);
        pass &= ok;
        parts.push(format!("{family}: {}/{} hold, min slack {worst:.4}", checks.iter().filter(|c| c.pass).count(), checks.len()));
    };
    for family in ["control_strong", "oscillation_1d"] {
        let checks = match &outcomes[family].sampled {
            Some(Ok(v)) => v.iter().flat_map(|c| [c.superadditivity.clone(), c.subadditivity.clone()]).collect(),
            _ => Vec::new(),
        };
        tally(family, checks);
    }
    let mesh = Arc::new(build_mesh::<f64>(2, &[(0.0, 128.0), (0.0, 128.0)], &[128, 128]).unwrap());
    let params = ConcentrationParams {
        x0: [64.0, 64.0],
        inward_normal: [0.0, -1.0],
        u0: ShapeExpr::cube(vec![16.0, 16.0], vec![112.0, 64.0]),
        outer_radius: 24.0,
        schedule: RadiusSchedule::Geometric { first: 4.0, ratio: 0.75 },
        placement: Placement::Normal,
        indices: vec![1, 2, 3, 4],
        min_cells_per_radius: 2.0,
    };
    let solver = SolverOptions { tolerance: 1e-10, preconditioner: ggl::fem::Preconditioner::IncompleteCholesky, ..Default::default() };
    let conc = build_concentration(mesh, &params, &solver).unwrap();
    let opts = GapOptions { solver, ..Default::default() };
    let checks = sampled_additivity(&conc.scenario.sequence, 10, 23, 0.02, &opts).unwrap();
    tally("concentration", checks.iter().flat_map(|c| [c.superadditivity.clone(), c.subadditivity.clone()]).collect());

    let mut reports = 0usize;
    let mut order_ok = true;
    for o in outcomes.values() {
        let mut all: Vec<&GapReport> = o.reports.iter().collect();
        for e in &o.envelopes {
            if let Ok(env) = &e.result {
                all.push(&env.target);
                all.extend(env.members.iter().map(|m| &m.report));
            }
        }
        for r in all {
            reports += 1;
            if let (Some(lo), Some(hi)) = (r.nu_lo, r.nu_hi) {
                order_ok &= 0.0 <= lo && lo <= hi;
            }
        }
    }
    g.line(
        "7",
        pass && order_ok,
        format!("set-function audit, tol 0.02: {}; order 0 <= nu'' <= nu' in all {reports} reports: {order_ok}", parts.join("; ")),
    );
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().unwrap();
    let mut g = Gate { failed: 0 };
    criterion_1(&mut g);
    criterion_2(&mut g);

    let mut outcomes = BTreeMap::new();
    let mut timings = BTreeMap::new();
    let mut identical = Vec::new();
    for name in CONFIGS {
        let serial = run(name, 1, tmp.path());
        let t = Instant::now();
        let parallel = run(name, 8, tmp.path());
        timings.insert(name, t.elapsed());
        let same = csv_files(&serial.out_dir) == csv_files(&parallel.out_dir);
        identical.push((name, same, csv_files(&parallel.out_dir).len()));
        outcomes.insert(name, parallel.outcome);
    }

    criterion_3(&mut g, &outcomes["oscillation_1d"], timings["oscillation_1d"]);
    criterion_4(&mut g, &outcomes["concentration"], timings["concentration"]);
    criterion_5(&mut g, &outcomes["trap_set"], timings["trap_set"]);
    criterion_6(&mut g, &outcomes["homogenization"]);
    criterion_7(&mut g, &outcomes);
    let all_same = identical.iter().all(|(_, s, n)| *s && *n > 0);
    let detail: Vec<String> = identical.iter().map(|(n, s, c)| format!("{n} ({c} csv): {}", if *s { "identical" } else { "DIFFER" })).collect();
    g.line("8", all_same, format!("--jobs 1 vs --jobs 8 CSV bytes: {}", detail.join(", ")));

    println!("{} criteria failed", g.failed);
    if g.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
