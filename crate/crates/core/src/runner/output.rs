use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::run::{RunOptions, RunOutcome};
use crate::gap::GapReport;

/// 17 significant digits, so values round-trip bit for bit.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

const GAP_HEADER: [&str; 9] = ["scenario", "region", "k", "alpha_k", "alpha", "nu_lo", "nu_hi", "spread", "verdict"];

fn gap_rows(w: &mut csv::Writer<Vec<u8>>, scenario: &str, region: &str, r: &GapReport) -> csv::Result<()> {
    for e in &r.entries {
        let verdict = if e.error.is_some() { "failed".to_string() } else { r.verdict.to_string() };
        w.write_record([
            scenario.to_string(),
            region.to_string(),
            e.k.to_string(),
            opt(e.alpha_k),
            opt(r.alpha),
            opt(r.nu_lo),
            opt(r.nu_hi),
            opt(r.spread),
            verdict,
        ])?;
    }
    Ok(())
}

fn finish(w: csv::Writer<Vec<u8>>) -> anyhow::Result<Vec<u8>> {
    w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))
}

fn gaps_csv(o: &RunOutcome) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(GAP_HEADER)?;
    for r in &o.reports {
        gap_rows(&mut w, &o.scenario, &r.region, r)?;
    }
    finish(w)
}

fn traces_csv(o: &RunOutcome) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "region", "k", "alpha_k", "min_energy", "iterations", "error"])?;
    for r in &o.reports {
        for e in &r.entries {
            w.write_record([
                o.scenario.clone(),
                r.region.clone(),
                e.k.to_string(),
                opt(e.alpha_k),
                opt(e.min_energy),
                e.iterations.map(|i| i.to_string()).unwrap_or_default(),
                e.error.clone().unwrap_or_default(),
            ])?;
        }
    }
    finish(w)
}

fn envelopes_csv(o: &RunOutcome) -> anyhow::Result<(Vec<u8>, Vec<u8>)> {
    let mut rows = csv::Writer::from_writer(Vec::new());
    rows.write_record(GAP_HEADER)?;
    let mut summary = csv::Writer::from_writer(Vec::new());
    summary.write_record(["scenario", "target", "members", "envelope", "target_nu_lo", "defect", "error"])?;
    for e in &o.envelopes {
        match &e.result {
            Ok(env) => {
                gap_rows(&mut rows, &o.scenario, &e.target, &env.target)?;
                for m in &env.members {
                    gap_rows(&mut rows, &o.scenario, &format!("{}/{}", e.target, m.label), &m.report)?;
                }
                summary.write_record([
                    o.scenario.clone(),
                    e.target.clone(),
                    env.members.len().to_string(),
                    num(env.envelope),
                    opt(env.target.nu_lo),
                    num(env.defect),
                    String::new(),
                ])?;
            }
            Err(msg) => summary.write_record([
                o.scenario.clone(),
                e.target.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                msg.clone(),
            ])?,
        }
    }
    Ok((finish(rows)?, finish(summary)?))
}

fn setfn_csv(o: &RunOutcome) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "check", "kind", "union_value", "part_v", "part_w", "tol", "slack", "pass", "error"])?;
    let mut row = |label: String, c: &Result<crate::gap::AdditivityCheck, String>| -> csv::Result<()> {
        match c {
            Ok(c) => w.write_record([
                o.scenario.clone(),
                label,
                format!("{:?}", c.kind).to_lowercase(),
                num(c.union_value),
                num(c.parts[0]),
                num(c.parts[1]),
                num(c.tol),
                num(c.slack()),
                c.pass.to_string(),
                String::new(),
            ]),
            Err(msg) => {
                let mut rec = vec![o.scenario.clone(), label];
                rec.extend(std::iter::repeat_n(String::new(), 7));
                rec.push(msg.clone());
                w.write_record(rec)
            }
        }
    };
    for a in &o.additivity {
        row(a.label.clone(), &a.result)?;
    }
    match &o.sampled {
        Some(Ok(samples)) => {
            for s in samples {
                row(format!("sample {}", s.sample), &Ok(s.superadditivity.clone()))?;
                row(format!("sample {}", s.sample), &Ok(s.subadditivity.clone()))?;
            }
        }
        Some(Err(msg)) => row("sampled audit".into(), &Err(msg.clone()))?,
        None => {}
    }
    finish(w)
}

fn scans_csv(o: &RunOutcome) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "scan", "t", "nu_hi", "nu_lo", "spread", "flagged", "error"])?;
    for s in &o.scans {
        match &s.result {
            Ok(rows) => {
                for r in rows {
                    w.write_record([
                        o.scenario.clone(),
                        s.label.clone(),
                        num(r.t),
                        num(r.nu_hi),
                        num(r.nu_lo),
                        num(r.spread),
                        r.flagged.to_string(),
                        String::new(),
                    ])?;
                }
            }
            Err(msg) => w.write_record([
                o.scenario.clone(),
                s.label.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                msg.clone(),
            ])?,
        }
    }
    finish(w)
}

fn concentration_csv(o: &RunOutcome) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "k", "r", "c", "chi_norm", "u_l2_sq", "big_r", "center_x", "center_y", "normalization", "retained", "split", "note",
    ])?;
    for t in &o.concentration {
        let split = match &o.trap {
            Some(s) if s.even.contains(&t.k) => "even",
            Some(s) if s.odd.contains(&t.k) => "odd",
            _ => "",
        };
        w.write_record([
            t.k.to_string(),
            num(t.r),
            opt(t.c),
            opt(t.chi_norm),
            opt(t.u_l2_sq),
            opt(t.big_r),
            opt(t.center.map(|c| c[0])),
            opt(t.center.map(|c| c[1])),
            opt(t.normalization),
            t.retained.to_string(),
            split.to_string(),
            t.note.clone(),
        ])?;
    }
    finish(w)
}

fn short(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
}

fn summary_md(o: &RunOutcome) -> String {
    let c = &o.config;
    let mut s = String::new();
    let _ = writeln!(s, "# {}\n", c.name);
    let _ = writeln!(s, "- scenario: `{}`", o.scenario);
    let _ = writeln!(s, "- expected gap: {}", o.expected);
    let _ = writeln!(s, "- resolution rule: {}", o.resolution_rule);
    let _ = writeln!(
        s,
        "- mesh: dimension {}, box {:?}, resolution {:?}",
        c.mesh.dimension, c.mesh.bounds, c.mesh.resolution
    );
    let _ = writeln!(s, "- indices: {:?}", c.indices);
    let _ = writeln!(s, "- tau_spread: {}\n", c.tau_spread);

    let _ = writeln!(s, "## Regions\n");
    let _ = writeln!(s, "| region | window | nu'' | nu' | spread | verdict | notes |");
    let _ = writeln!(s, "|---|---|---|---|---|---|---|");
    for r in &o.reports {
        let mut notes = Vec::new();
        if let Some(f) = &r.failure {
            notes.push(format!("failed: {f}"));
        }
        if !r.aliasing.is_empty() {
            notes.push(format!("{} aliasing warnings", r.aliasing.len()));
        }
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} | {} |",
            r.region,
            r.window,
            short(r.nu_lo),
            short(r.nu_hi),
            short(r.spread),
            r.verdict,
            notes.join("; ")
        );
    }

    if !o.envelopes.is_empty() {
        let _ = writeln!(s, "\n## Inner envelopes\n");
        let _ = writeln!(s, "| target | members | envelope | nu''(target) | defect |");
        let _ = writeln!(s, "|---|---|---|---|---|");
        for e in &o.envelopes {
            match &e.result {
                Ok(env) => {
                    let _ = writeln!(
                        s,
                        "| {} | {} | {:.4} | {} | {:.4} |",
                        e.target,
                        env.members.len(),
                        env.envelope,
                        short(env.target.nu_lo),
                        env.defect
                    );
                }
                Err(msg) => {
                    let _ = writeln!(s, "| {} | error: {msg} | | | |", e.target);
                }
            }
        }
    }

    let sampled_checks: Vec<_> = match &o.sampled {
        Some(Ok(v)) => v.iter().flat_map(|c| [&c.superadditivity, &c.subadditivity]).collect(),
        _ => Vec::new(),
    };
    if !o.additivity.is_empty() || o.sampled.is_some() {
        let _ = writeln!(s, "\n## Set-function checks\n");
        for a in &o.additivity {
            match &a.result {
                Ok(c) => {
                    let _ = writeln!(
                        s,
                        "- {}: union {:.4}, parts {:.4} + {:.4}, slack {:.4}, {}",
                        a.label,
                        c.union_value,
                        c.parts[0],
                        c.parts[1],
                        c.slack(),
                        if c.pass { "pass" } else { "FAIL" }
                    );
                }
                Err(msg) => {
                    let _ = writeln!(s, "- {}: error: {msg}", a.label);
                }
            }
        }
        match &o.sampled {
            Some(Ok(_)) => {
                let passed = sampled_checks.iter().filter(|c| c.pass).count();
                let worst = sampled_checks.iter().map(|c| c.slack()).fold(f64::INFINITY, f64::min);
                let _ = writeln!(
                    s,
                    "- sampled audit (seed {}): {passed}/{} inequalities hold, smallest slack {worst:.4}",
                    c.seed,
                    sampled_checks.len()
                );
            }
            Some(Err(msg)) => {
                let _ = writeln!(s, "- sampled audit: error: {msg}");
            }
            None => {}
        }
    }

    for scan in &o.scans {
        let _ = writeln!(s, "\n## Scan `{}`\n", scan.label);
        match &scan.result {
            Ok(rows) => {
                let _ = writeln!(s, "| t | nu' | nu'' | spread | flagged |");
                let _ = writeln!(s, "|---|---|---|---|---|");
                for r in rows {
                    let _ = writeln!(s, "| {} | {:.4} | {:.4} | {:.4} | {} |", r.t, r.nu_hi, r.nu_lo, r.spread, r.flagged);
                }
            }
            Err(msg) => {
                let _ = writeln!(s, "error: {msg}");
            }
        }
    }

    if !o.concentration.is_empty() {
        let _ = writeln!(s, "\n## Concentration terms\n");
        let _ = writeln!(s, "| k | r_k | R_k | x_k | normalization | retained |");
        let _ = writeln!(s, "|---|---|---|---|---|---|");
        for t in &o.concentration {
            let center = t.center.map(|c| format!("({}, {})", c[0], c[1])).unwrap_or_default();
            let _ = writeln!(
                s,
                "| {} | {:.4} | {} | {} | {} | {} |",
                t.k,
                t.r,
                short(t.big_r),
                center,
                short(t.normalization),
                if t.retained { "yes".to_string() } else { format!("no ({})", t.note) }
            );
        }
    }
    if let Some(t) = &o.trap {
        let _ = writeln!(s, "\nTrap set: disjoint indices {:?}, even split {:?}, odd split {:?}", t.kept, t.even, t.odd);
    }

    if !o.failures.is_empty() {
        let _ = writeln!(s, "\n## Failures\n");
        for f in &o.failures {
            let _ = writeln!(s, "- {f}");
        }
    }
    s
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config_name: &'a str,
    config_sha256: String,
    scenario: &'a str,
    seed: u64,
    jobs: Option<usize>,
    allow_aliasing: bool,
    build_seconds: f64,
    solve_seconds: f64,
    total_seconds: f64,
    failures: usize,
    files: Vec<FileEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes CSV tables, the markdown summary and the JSON manifest into
/// `dir`, returning the paths written.
pub(crate) fn write_outputs(
    o: &RunOutcome,
    dir: &Path,
    config_text: &[u8],
    opts: &RunOptions,
    started: Instant,
) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let (envelopes, envelope_summary) = envelopes_csv(o)?;
    let mut files: Vec<(&str, Vec<u8>)> = vec![
        ("gaps.csv", gaps_csv(o)?),
        ("traces.csv", traces_csv(o)?),
        ("envelopes.csv", envelopes),
        ("envelope_summary.csv", envelope_summary),
        ("setfn.csv", setfn_csv(o)?),
        ("scans.csv", scans_csv(o)?),
    ];
    if !o.concentration.is_empty() {
        files.push(("concentration.csv", concentration_csv(o)?));
    }
    files.push(("summary.md", summary_md(o).into_bytes()));

    let mut written = Vec::new();
    let mut inventory = Vec::new();
    for (name, bytes) in &files {
        let path = dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        inventory.push(FileEntry { path: name.to_string(), bytes: bytes.len(), sha256: sha256_hex(bytes) });
        written.push(path);
    }
    let manifest = Manifest {
        tool: "ggl",
        version: env!("CARGO_PKG_VERSION"),
        config_name: &o.config.name,
        config_sha256: sha256_hex(config_text),
        scenario: &o.scenario,
        seed: o.config.seed,
        jobs: opts.jobs,
        allow_aliasing: opts.allow_aliasing,
        build_seconds: o.timing.build_seconds,
        solve_seconds: o.timing.solve_seconds,
        total_seconds: started.elapsed().as_secs_f64(),
        failures: o.failures.len(),
        files: inventory,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_vec_pretty(&manifest)?).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(written)
}
