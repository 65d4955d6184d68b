use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;

use cyclecert_core::certify::{certify_unique_attracting_cycle, CertificationReport, CheckResult, Verdict};
use cyclecert_core::dynamics::{
    count_sign_changes, displacement_scan, find_cycle, integrate, sample_uniform, LimitCycle,
};
use cyclecert_core::expr::Expr;
use cyclecert_core::geometry::{check_ray_uniqueness, extract_a0, polyline_distance, ContourSet};
use cyclecert_core::model::{PlanarSystem, Point};
use cyclecert_core::Error;

use crate::config::{canonical_json, RunConfig};
use crate::svg;

pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const FAIL: u8 = 2;
    pub const INCONCLUSIVE: u8 = 3;
    pub const NO_CYCLE: u8 = 4;
}

/// Exit code, a human-readable summary and the files written.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: u8,
    pub message: String,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            files: Vec::new(),
        }
    }

    fn usage(err: impl std::fmt::Display) -> Self {
        Self::new(exit::USAGE, format!("error: {err}"))
    }
}

pub fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Pass => exit::OK,
        Verdict::Fail => exit::FAIL,
        Verdict::Inconclusive => exit::INCONCLUSIVE,
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Inconclusive => "inconclusive",
    }
}

/// Round-trippable float for CSV cells.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    files.push(path);
    Ok(())
}

/// System errors that are the input's fault map to usage; an inadmissible
/// restoring force violates a hypothesis and maps to failure.
fn system_or_outcome(cfg: &RunConfig) -> Result<PlanarSystem, Outcome> {
    cfg.system().map_err(|e| match e {
        Error::Inadmissible { .. } => Outcome::new(exit::FAIL, e.to_string()),
        e => Outcome::usage(e),
    })
}

#[derive(Serialize)]
struct SystemInfo<'a> {
    phi: &'a str,
    g: &'a str,
    params: &'a BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    system: SystemInfo<'a>,
    checks: &'a [CheckResult],
    overall: Verdict,
    notes: &'a [String],
    versions: BTreeMap<&'static str, &'static str>,
}

pub fn report_json(cfg: &RunConfig, report: &CertificationReport) -> String {
    canonical_json(&ReportFile {
        system: SystemInfo {
            phi: &cfg.phi,
            g: &cfg.g,
            params: &cfg.params,
        },
        checks: &report.checks,
        overall: report.overall,
        notes: &report.notes,
        versions: [("spec", "1")].into(),
    })
}

fn summarize(report: &CertificationReport) -> String {
    let mut out = String::new();
    for c in &report.checks {
        let _ = write!(out, "{:<18} {:<12} sampled {}", c.name, verdict_name(c.verdict), c.sampled);
        if let Some(d) = &c.detail {
            let _ = write!(out, "  ({d})");
        }
        out.push('\n');
        for w in c.witnesses.iter().take(3) {
            let _ = writeln!(out, "    witness ({}, {}) value {}", w.x, w.y, w.value);
        }
    }
    let _ = write!(out, "overall: {}", verdict_name(report.overall));
    out
}

pub fn cmd_certify(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let sys = match system_or_outcome(cfg) {
        Ok(s) => s,
        Err(o) => return Ok(o),
    };
    let report = certify_unique_attracting_cycle(&sys, &cfg.certify);
    let mut out = Outcome::new(verdict_code(report.overall), summarize(&report));
    write_file(&cfg.output_dir, "report.json", &report_json(cfg, &report), &mut out.files)?;
    Ok(out)
}

#[derive(Serialize)]
struct CycleFile {
    anchor: f64,
    period: f64,
    multiplier: f64,
    residual: f64,
    attracting: bool,
    mean_radius: f64,
    /// Sign changes of `P(x) − x` over the scan ladder.
    fixed_points: usize,
    scan: BTreeMap<&'static str, f64>,
}

fn cycle_csv(cycle: &LimitCycle) -> String {
    let mut s = String::from("t,x,y\n");
    for (t, p) in &cycle.loop_points {
        let _ = writeln!(s, "{},{},{}", num(*t), num(p[0]), num(p[1]));
    }
    s
}

fn locate(sys: &PlanarSystem, cfg: &RunConfig) -> cyclecert_core::Result<LimitCycle> {
    let bracket = cfg.cycle.bracket.map(|[a, b]| (a, b));
    find_cycle(sys, bracket, &cfg.dynamics())
}

pub fn cmd_find_cycle(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let sys = match system_or_outcome(cfg) {
        Ok(s) => s,
        Err(o) => return Ok(o),
    };
    let cycle = match locate(&sys, cfg) {
        Ok(c) => c,
        Err(e @ (Error::Parse(_) | Error::Usage(_))) => return Ok(Outcome::usage(e)),
        Err(e) => return Ok(Outcome::new(exit::NO_CYCLE, format!("no cycle: {e}"))),
    };
    let dynamics = cfg.dynamics();
    let scan = displacement_scan(&sys, dynamics.scan_start, dynamics.scan_max, dynamics.scan_ratio, &dynamics);
    let fixed_points = count_sign_changes(&scan);
    let file = CycleFile {
        anchor: cycle.section_anchor,
        period: cycle.period,
        multiplier: cycle.multiplier,
        residual: cycle.residual,
        attracting: cycle.is_attracting(),
        mean_radius: cycle.mean_radius(),
        fixed_points,
        scan: [
            ("start", dynamics.scan_start),
            ("ratio", dynamics.scan_ratio),
            ("max", dynamics.scan_max),
            ("failed", scan.iter().filter(|(_, d)| d.is_err()).count() as f64),
        ]
        .into(),
    };
    let mut out = Outcome::new(
        exit::OK,
        format!(
            "x* = {}\nperiod = {}\nmultiplier = {}\nfixed points in scan: {fixed_points}",
            cycle.section_anchor, cycle.period, cycle.multiplier
        ),
    );
    write_file(&cfg.output_dir, "cycle.csv", &cycle_csv(&cycle), &mut out.files)?;
    write_file(&cfg.output_dir, "cycle.json", &canonical_json(&file), &mut out.files)?;
    Ok(out)
}

#[derive(Serialize)]
struct PortraitFile {
    a0_polylines: usize,
    a0_outside_even_quadrants: usize,
    ray_uniqueness: Verdict,
    cycle_found: bool,
    max_endpoint_distance: Option<f64>,
}

fn orbit(sys: &PlanarSystem, seed: Point, cfg: &RunConfig) -> Vec<(f64, Point)> {
    let p = &cfg.portrait;
    let dynamics = cfg.dynamics();
    sample_uniform(sys, seed, p.orbit_t_max, p.orbit_samples, &dynamics)
        .or_else(|_| integrate(sys, seed, p.orbit_t_max, &dynamics).map(|t| t.samples))
        .unwrap_or_else(|_| vec![(0.0, seed)])
}

pub fn cmd_portrait(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let sys = match system_or_outcome(cfg) {
        Ok(s) => s,
        Err(o) => return Ok(o),
    };
    let p = &cfg.portrait;
    let a0 = match extract_a0(&sys, p.window, p.a0_grid, p.a0_grid) {
        Ok(c) => c,
        Err(e) => return Ok(Outcome::usage(e)),
    };
    let cycle = locate(&sys, cfg).ok();
    let orbits: Vec<Vec<(f64, Point)>> = p.orbit_seeds.par_iter().map(|&s| orbit(&sys, s, cfg)).collect();

    let rays = check_ray_uniqueness(&a0, p.rays);
    let outside = a0.vertices().filter(|v| v[0] * v[1] >= 0.0).count();
    let max_endpoint_distance = cycle.as_ref().map(|c| {
        let line = c.polyline();
        orbits
            .iter()
            .map(|o| polyline_distance(o.last().expect("orbit has a start").1, &line))
            .fold(0.0, f64::max)
    });
    let summary = PortraitFile {
        a0_polylines: a0.polylines.len(),
        a0_outside_even_quadrants: outside,
        ray_uniqueness: rays.verdict,
        cycle_found: cycle.is_some(),
        max_endpoint_distance,
    };

    let mut out = Outcome::new(
        exit::OK,
        format!(
            "A0 polylines: {} ({} vertices outside quadrants 2 and 4)\nray uniqueness: {}\ncycle: {}{}",
            summary.a0_polylines,
            outside,
            verdict_name(rays.verdict),
            if cycle.is_some() { "found" } else { "none" },
            max_endpoint_distance
                .map(|d| format!("\nmax orbit endpoint distance to cycle: {d:e}"))
                .unwrap_or_default()
        ),
    );
    let dir = &cfg.output_dir;
    write_file(dir, "A0.csv", &a0_csv(&a0), &mut out.files)?;
    write_file(dir, "orbits.csv", &orbits_csv(&orbits), &mut out.files)?;
    let plot = svg::portrait(p.window, p.size_px, &orbits, cycle.as_ref(), &a0);
    write_file(dir, "portrait.svg", &plot, &mut out.files)?;
    write_file(dir, "portrait.json", &canonical_json(&summary), &mut out.files)?;
    Ok(out)
}

fn a0_csv(a0: &ContourSet) -> String {
    let mut s = String::from("polyline_id,x,y\n");
    for (id, line) in a0.polylines.iter().enumerate() {
        for v in line {
            let _ = writeln!(s, "{id},{},{}", num(v[0]), num(v[1]));
        }
    }
    s
}

fn orbits_csv(orbits: &[Vec<(f64, Point)>]) -> String {
    let mut s = String::from("orbit_id,t,x,y\n");
    for (id, o) in orbits.iter().enumerate() {
        for (t, p) in o {
            let _ = writeln!(s, "{id},{},{},{}", num(*t), num(p[0]), num(p[1]));
        }
    }
    s
}

pub fn cmd_transform(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let parsed = Expr::parse(&cfg.phi, &cfg.params).and_then(|phi| Ok((phi, Expr::parse(&cfg.g, &cfg.params)?)));
    let (phi, g) = match parsed {
        Ok(pair) => pair,
        Err(e) => return Ok(Outcome::usage(e)),
    };
    let sys = match PlanarSystem::new_nonlinear(phi, g, cfg.window) {
        Ok(s) => s,
        Err(e @ Error::Inadmissible { .. }) => {
            return Ok(Outcome::new(exit::FAIL, e.to_string()));
        }
        Err(e) => return Ok(Outcome::usage(e)),
    };
    let t = sys.transform();
    let settings = &cfg.transform;
    let n = settings.nx.max(2);
    let mut csv = String::from("x,v,alpha,beta_alpha,phi_tilde\n");
    for &v in &settings.v {
        for k in 0..n {
            let x = cfg.window.x_max * (2.0 * k as f64 - (n - 1) as f64) / (n - 1) as f64;
            let row = t
                .alpha(x)
                .and_then(|a| Ok((a, t.beta(a)?, t.phi_tilde(a, v)?)));
            match row {
                Ok((a, b, f)) => {
                    let _ = writeln!(csv, "{},{},{},{},{}", num(x), num(v), num(a), num(b), num(f));
                }
                Err(e) => return Ok(Outcome::new(exit::FAIL, format!("transform failed at x = {x}: {e}"))),
            }
        }
    }
    let report = certify_unique_attracting_cycle(&sys, &cfg.certify);
    let mut out = Outcome::new(
        exit::OK,
        format!("transformed system\n{}", summarize(&report)),
    );
    write_file(&cfg.output_dir, "transform.csv", &csv, &mut out.files)?;
    write_file(&cfg.output_dir, "transform_report.json", &report_json(cfg, &report), &mut out.files)?;
    Ok(out)
}

struct SweepRow {
    verdict: Option<Verdict>,
    cycle: Option<LimitCycle>,
    error: String,
}

fn sweep_row(base: &RunConfig, param: &str, value: f64) -> SweepRow {
    let mut cfg = base.clone();
    cfg.params.insert(param.to_string(), value);
    let sys = match cfg.system() {
        Ok(s) => s,
        Err(e) => {
            return SweepRow {
                verdict: None,
                cycle: None,
                error: e.to_string(),
            }
        }
    };
    let verdict = certify_unique_attracting_cycle(&sys, &cfg.certify).overall;
    match locate(&sys, &cfg) {
        Ok(c) => SweepRow {
            verdict: Some(verdict),
            cycle: Some(c),
            error: String::new(),
        },
        Err(e) => SweepRow {
            verdict: Some(verdict),
            cycle: None,
            error: e.to_string(),
        },
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn cmd_sweep(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let sweep = &cfg.sweep;
    if sweep.param.is_empty() {
        return Ok(Outcome::usage("sweep.param is empty"));
    }
    if sweep.values.is_empty() {
        return Ok(Outcome::usage("sweep.values is empty"));
    }
    let mut probe = cfg.clone();
    probe.params.insert(sweep.param.clone(), sweep.values[0]);
    if let Err(e @ Error::Parse(_)) = probe.system() {
        return Ok(Outcome::usage(e));
    }
    let rows: Vec<SweepRow> = sweep.values.par_iter().map(|&v| sweep_row(cfg, &sweep.param, v)).collect();

    let mut csv = String::from("param,value,verdict,x_star,period,multiplier,mean_radius,error\n");
    let mut lines = Vec::new();
    for (&value, row) in sweep.values.iter().zip(&rows) {
        let verdict = row.verdict.map(verdict_name).unwrap_or("error");
        let cells = match &row.cycle {
            Some(c) => [c.section_anchor, c.period, c.multiplier, c.mean_radius()].map(num).join(","),
            None => ",,,".to_string(),
        };
        let _ = writeln!(
            csv,
            "{},{},{verdict},{cells},{}",
            csv_text(&sweep.param),
            num(value),
            csv_text(&row.error)
        );
        lines.push(format!("{} = {value}: {verdict}", sweep.param));
    }
    let mut out = Outcome::new(exit::OK, lines.join("\n"));
    write_file(&cfg.output_dir, "sweep.csv", &csv, &mut out.files)?;
    Ok(out)
}
