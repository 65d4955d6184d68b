//! Sampling checks of the uniqueness and global-attraction hypotheses,
//! with witnesses for every failure.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::contour::{march, par_eval, Grid};
use crate::model::{Form, PlanarSystem, Point, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// Pass only if all pass; fail if any fails.
    pub fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Pass;
        for v in verdicts {
            match v {
                Verdict::Fail => return Verdict::Fail,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Pass => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

impl Witness {
    pub fn at(p: Point, value: f64) -> Self {
        Self { x: p[0], y: p[1], value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub sampled: usize,
    pub window: Window,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    fn new(name: &str, window: Window) -> Self {
        Self {
            name: name.to_string(),
            verdict: Verdict::Pass,
            witnesses: Vec::new(),
            sampled: 0,
            window,
            tolerances: BTreeMap::new(),
            detail: None,
        }
    }

    fn tolerance(mut self, key: &str, value: f64) -> Self {
        self.tolerances.insert(key.to_string(), value);
        self
    }

    /// A failed check for an expression that could not be evaluated.
    fn from_error(name: &str, window: Window, err: &Error) -> Self {
        let mut c = Self::new(name, window);
        c.verdict = Verdict::Fail;
        if let Error::Eval(e) = err {
            c.witnesses.push(Witness {
                x: e.x,
                y: e.y,
                value: f64::NAN,
            });
        }
        c.detail = Some(err.to_string());
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub checks: Vec<CheckResult>,
    pub overall: Verdict,
    pub notes: Vec<String>,
}

impl CertificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSource {
    UserSupplied,
    AutoEstimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterBound {
    /// Sup of `√(x² + y²)` (linear `g`) or `√(2E)` (nonlinear `g`) over `U`.
    pub sigma_bound: f64,
    pub source: BoundSource,
    /// `{φ < 0}` reached the window edge, so `U` may be unbounded.
    pub touches_boundary: bool,
}

impl OuterBound {
    pub fn user(sigma_bound: f64) -> Self {
        Self {
            sigma_bound,
            source: BoundSource::UserSupplied,
            touches_boundary: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertifyConfig {
    pub n_r: usize,
    pub n_theta: usize,
    pub r_min: f64,
    /// `tol_zero = zero_scale·(1 + x² + y²)`.
    pub zero_scale: f64,
    pub bound_grid: usize,
    pub damping_radii: usize,
    pub circle_samples: usize,
    pub level_grid: usize,
    pub nonvanish_tol: f64,
    pub max_witnesses: usize,
    pub sigma_bound: Option<f64>,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            n_r: 128,
            n_theta: 256,
            r_min: 1e-3,
            zero_scale: 1e-9,
            bound_grid: 401,
            damping_radii: 12,
            circle_samples: 720,
            level_grid: 257,
            nonvanish_tol: 1e-6,
            max_witnesses: 16,
            sigma_bound: None,
        }
    }
}

impl CertifyConfig {
    fn tol_zero(&self, p: Point) -> f64 {
        self.zero_scale * (1.0 + p[0] * p[0] + p[1] * p[1])
    }
}

pub const STAR_SHAPED: &str = "star_shaped";
pub const G_MONOTONE: &str = "g_prime_positive";
pub const OUTER_BOUND: &str = "outer_bound";
pub const OUTER_DAMPING: &str = "outer_damping";
pub const ORIGIN_REPULSION: &str = "origin_repulsion";

/// Unit vector at angle `θ`, exact on the axes.
fn direction(theta_index: usize, n_theta: usize) -> Point {
    if n_theta.is_multiple_of(4) {
        let q = n_theta / 4;
        match theta_index {
            0 => return [1.0, 0.0],
            k if k == q => return [0.0, 1.0],
            k if k == 2 * q => return [-1.0, 0.0],
            k if k == 3 * q => return [0.0, -1.0],
            _ => {}
        }
    }
    let (s, c) = (2.0 * PI * theta_index as f64 / n_theta as f64).sin_cos();
    [c, s]
}

/// Log-spaced radii × uniform angles, clipped to the window; row-major
/// in radius so the sample order does not depend on scheduling.
fn polar_samples(window: Window, cfg: &CertifyConfig) -> Vec<(usize, usize, Point)> {
    let r_max = window.x_max.hypot(window.y_max);
    let ratio = (r_max / cfg.r_min).ln() / (cfg.n_r - 1) as f64;
    let mut out = Vec::with_capacity(cfg.n_r * cfg.n_theta);
    for i in 0..cfg.n_r {
        let r = cfg.r_min * (ratio * i as f64).exp();
        for j in 0..cfg.n_theta {
            let d = direction(j, cfg.n_theta);
            let p = [r * d[0], r * d[1]];
            if window.contains(p) {
                out.push((i, j, p));
            }
        }
    }
    out
}

/// Strict sign-constancy of `field` on the polar grid: both signs, or a
/// zero with a zero neighbour in radius or angle, is a failure; isolated
/// zeros alone make the check inconclusive.
fn sign_constancy<F>(name: &str, window: Window, cfg: &CertifyConfig, field: F) -> Result<(CheckResult, f64)>
where
    F: Fn(Point) -> Result<f64> + Sync,
{
    assert!(cfg.n_r >= 64 && cfg.n_theta >= 64, "polar grid needs at least 64 × 64 samples");
    let samples = polar_samples(window, cfg);
    let points: Vec<Point> = samples.iter().map(|s| s.2).collect();
    let values = par_eval(&points, field)?;

    // -1, 0, +1 per sample, indexed by (i, j)
    let mut sign = vec![None; cfg.n_r * cfg.n_theta];
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    let mut zeros = Vec::new();
    for (k, &(i, j, p)) in samples.iter().enumerate() {
        let v = values[k];
        let s = if v > cfg.tol_zero(p) {
            pos.push(k);
            1
        } else if v < -cfg.tol_zero(p) {
            neg.push(k);
            -1
        } else {
            zeros.push(k);
            0
        };
        sign[i * cfg.n_theta + j] = Some(s);
    }
    let is_zero = |i: usize, j: usize| sign[i * cfg.n_theta + j] == Some(0);
    let extended: Vec<usize> = zeros
        .iter()
        .copied()
        .filter(|&k| {
            let (i, j, _) = samples[k];
            let jp = (j + 1) % cfg.n_theta;
            let jm = (j + cfg.n_theta - 1) % cfg.n_theta;
            (i > 0 && is_zero(i - 1, j)) || (i + 1 < cfg.n_r && is_zero(i + 1, j)) || is_zero(i, jp) || is_zero(i, jm)
        })
        .collect();

    let mut check = CheckResult::new(name, window)
        .tolerance("zero_scale", cfg.zero_scale)
        .tolerance("r_min", cfg.r_min);
    check.sampled = samples.len();
    let witness = |k: usize| Witness::at(samples[k].2, values[k]);
    let majority = if pos.len() >= neg.len() { 1.0 } else { -1.0 };
    if !pos.is_empty() && !neg.is_empty() {
        check.verdict = Verdict::Fail;
        let minority = if majority > 0.0 { &neg } else { &pos };
        check.witnesses.extend(minority.iter().take(cfg.max_witnesses).map(|&k| witness(k)));
        check.detail = Some(format!("{} positive and {} negative samples", pos.len(), neg.len()));
    } else if !extended.is_empty() {
        check.verdict = Verdict::Fail;
        check.witnesses.extend(extended.iter().take(cfg.max_witnesses).map(|&k| witness(k)));
        check.detail = Some(format!("vanishes on {} adjacent samples", extended.len()));
    } else if !zeros.is_empty() {
        check.verdict = Verdict::Inconclusive;
        check.witnesses.extend(zeros.iter().take(cfg.max_witnesses).map(|&k| witness(k)));
        check.detail = Some(format!("{} isolated near-zero samples", zeros.len()));
    } else {
        check.detail = Some(format!("sign {}", if majority > 0.0 { '+' } else { '-' }));
    }
    Ok((check, majority))
}

/// Sign-constancy of `s = x·φₓ + y·φ_y`. Returns the check and the sign
/// carried by the majority of samples.
pub fn check_star_shaped(sys: &PlanarSystem, window: Window, cfg: &CertifyConfig) -> Result<(CheckResult, f64)> {
    if !sys.is_linear() {
        return Err(Error::Usage("check_star_shaped needs a linear restoring force".into()));
    }
    sign_constancy(STAR_SHAPED, window, cfg, |p| Ok(sys.nu_scalar(p)?.s))
}

/// Sign-constancy of the star-shapedness scalar of the transformed damping,
/// evaluated in the original coordinates.
pub fn check_star_shaped_nonlinear(
    sys: &PlanarSystem,
    window: Window,
    cfg: &CertifyConfig,
) -> Result<(CheckResult, f64)> {
    let t = sys.transform();
    sign_constancy(STAR_SHAPED, window, cfg, |p| t.nu_scalar_xy(p))
}

/// `g'(x) > 0` on `[-x_max, x_max]`.
pub fn check_g_monotone(sys: &PlanarSystem, window: Window, samples: usize) -> Result<CheckResult> {
    let mut check = CheckResult::new(G_MONOTONE, window);
    check.sampled = 2 * samples + 1;
    for k in 0..=2 * samples {
        let x = window.x_max * (k as f64 - samples as f64) / samples as f64;
        let gp = sys.g_prime(x)?;
        if gp <= 0.0 {
            check.verdict = Verdict::Fail;
            check.witnesses.push(Witness::at([x, 0.0], gp));
        }
    }
    Ok(check)
}

/// `√(x² + y²)` for linear `g`, `√(2E)` otherwise.
fn bound_radius(sys: &PlanarSystem, p: Point) -> Result<f64> {
    match sys.form() {
        Form::LinearG { .. } => Ok(p[0].hypot(p[1])),
        Form::NonlinearG => Ok((2.0 * sys.energy(p)?).sqrt()),
    }
}

/// `U = {φ < 0}` sampled on a square grid, grown by the neighbouring nodes.
pub fn estimate_outer_bound(sys: &PlanarSystem, window: Window, cfg: &CertifyConfig) -> Result<OuterBound> {
    let grid = Grid::new(window, cfg.bound_grid, cfg.bound_grid);
    let phi = grid.sample(|p| sys.damping(p))?;
    let n = grid.nx;
    let inside = |i: usize, j: usize| phi[j * n + i] < 0.0;
    let mut sigma: f64 = 0.0;
    let mut touches = false;
    for j in 0..grid.ny {
        for i in 0..n {
            if !inside(i, j) {
                continue;
            }
            if i == 0 || j == 0 || i == n - 1 || j == grid.ny - 1 {
                touches = true;
            }
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if a >= 0 && b >= 0 && (a as usize) < n && (b as usize) < grid.ny {
                        sigma = sigma.max(bound_radius(sys, grid.node(a as usize, b as usize))?);
                    }
                }
            }
        }
    }
    Ok(OuterBound {
        sigma_bound: sigma,
        source: BoundSource::AutoEstimated,
        touches_boundary: touches,
    })
}

/// Largest level `r` whose set `{√(x²+y²) = r}` or `{√(2E) = r}` fits the window.
pub fn level_radius_max(sys: &PlanarSystem, window: Window) -> Result<f64> {
    match sys.form() {
        Form::LinearG { .. } => Ok(window.inscribed_radius()),
        Form::NonlinearG => {
            let g_min = sys.potential(window.x_max)?.min(sys.potential(-window.x_max)?);
            Ok((2.0 * g_min).min(window.y_max * window.y_max).sqrt())
        }
    }
}

/// Points on the level set of radius `r`.
fn level_set(sys: &PlanarSystem, window: Window, r: f64, cfg: &CertifyConfig, two_e: &[f64]) -> Result<Vec<Point>> {
    match sys.form() {
        Form::LinearG { .. } => Ok((0..cfg.circle_samples)
            .map(|k| {
                let d = direction(k, cfg.circle_samples);
                [r * d[0], r * d[1]]
            })
            .collect()),
        Form::NonlinearG => {
            let grid = Grid::new(window, cfg.level_grid, cfg.level_grid);
            let c = march(grid, two_e, r * r, |_, _| false);
            if c.is_empty() {
                return Err(Error::LevelSet { level: r });
            }
            Ok(c.vertices().collect())
        }
    }
}

/// `φ ≥ 0` and `φ ≢ 0` on each tested level set beyond the bound.
pub fn check_outer_damping(
    sys: &PlanarSystem,
    window: Window,
    bound: &OuterBound,
    radii: Option<&[f64]>,
    cfg: &CertifyConfig,
) -> Result<CheckResult> {
    let r_max = level_radius_max(sys, window)?;
    let mut check = CheckResult::new(OUTER_DAMPING, window)
        .tolerance("zero_scale", cfg.zero_scale)
        .tolerance("nonvanish", cfg.nonvanish_tol)
        .tolerance("sigma_bound", bound.sigma_bound);
    let radii: Vec<f64> = match radii {
        Some(r) => r.to_vec(),
        None => {
            if bound.sigma_bound >= r_max {
                check.verdict = Verdict::Inconclusive;
                check.detail = Some(format!(
                    "sigma_bound {} leaves no level set inside the window (largest {r_max})",
                    bound.sigma_bound
                ));
                return Ok(check);
            }
            let n = cfg.damping_radii;
            (1..=n)
                .map(|k| bound.sigma_bound + (r_max - bound.sigma_bound) * k as f64 / n as f64)
                .collect()
        }
    };
    let two_e = match sys.form() {
        Form::NonlinearG => Grid::new(window, cfg.level_grid, cfg.level_grid).sample(|p| Ok(2.0 * sys.energy(p)?))?,
        Form::LinearG { .. } => Vec::new(),
    };
    let mut vanishing = Vec::new();
    for &r in &radii {
        let pts = level_set(sys, window, r, cfg, &two_e)?;
        let vals = par_eval(&pts, |p| sys.damping(p))?;
        check.sampled += pts.len();
        let mut worst: Option<(usize, f64)> = None;
        let mut peak: f64 = 0.0;
        for (k, &v) in vals.iter().enumerate() {
            peak = peak.max(v.abs());
            if v < -cfg.tol_zero(pts[k]) && worst.is_none_or(|(_, w)| v < w) {
                worst = Some((k, v));
            }
        }
        if let Some((k, v)) = worst {
            check.verdict = Verdict::Fail;
            check.witnesses.push(Witness::at(pts[k], v));
        }
        if peak <= cfg.nonvanish_tol {
            check.verdict = Verdict::Fail;
            check.witnesses.push(Witness::at(pts[0], vals[0]));
            vanishing.push(r);
        }
    }
    if bound.touches_boundary {
        if check.verdict == Verdict::Pass {
            check.verdict = Verdict::Inconclusive;
        }
        check.detail = Some("the set {φ < 0} reaches the window edge".into());
    } else if !vanishing.is_empty() {
        check.detail = Some(format!("φ vanishes identically on {} level sets", vanishing.len()));
    } else {
        let list: Vec<String> = radii.iter().map(|r| format!("{r:.6}")).collect();
        check.detail = Some(format!("radii tested: {}", list.join(", ")));
    }
    check.witnesses.truncate(cfg.max_witnesses);
    Ok(check)
}

/// `φ(0, 0) < 0`.
pub fn check_origin_repulsion(sys: &PlanarSystem, window: Window, cfg: &CertifyConfig) -> Result<CheckResult> {
    let v = sys.damping([0.0, 0.0])?;
    let tol = cfg.tol_zero([0.0, 0.0]);
    let mut check = CheckResult::new(ORIGIN_REPULSION, window).tolerance("zero", tol);
    check.sampled = 1;
    if v >= -tol {
        check.verdict = Verdict::Fail;
        check.witnesses.push(Witness::at([0.0, 0.0], v));
    }
    check.detail = Some(format!("φ(0,0) = {v}"));
    Ok(check)
}

fn outer_bound_check(bound: &OuterBound, window: Window, cfg: &CertifyConfig) -> CheckResult {
    let mut check = CheckResult::new(OUTER_BOUND, window).tolerance("sigma_bound", bound.sigma_bound);
    check.sampled = match bound.source {
        BoundSource::AutoEstimated => cfg.bound_grid * cfg.bound_grid,
        BoundSource::UserSupplied => 0,
    };
    if bound.touches_boundary {
        check.verdict = Verdict::Inconclusive;
        check.detail = Some("U may be unbounded".into());
    } else {
        check.detail = Some(format!("sigma_bound = {}", bound.sigma_bound));
    }
    check
}

/// Runs every hypothesis check for the form of `sys`.
pub fn certify_unique_attracting_cycle(sys: &PlanarSystem, cfg: &CertifyConfig) -> CertificationReport {
    let window = sys.window();
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let linear = sys.is_linear();

    let star = if linear {
        check_star_shaped(sys, window, cfg)
    } else {
        check_star_shaped_nonlinear(sys, window, cfg)
    };
    checks.push(star.map(|(c, _)| c).unwrap_or_else(|e| CheckResult::from_error(STAR_SHAPED, window, &e)));

    if !linear {
        checks.push(check_g_monotone(sys, window, 1000).unwrap_or_else(|e| CheckResult::from_error(G_MONOTONE, window, &e)));
        notes.push(
            "star_shaped uses the star-shapedness scalar of the transformed damping; the closed form \
             σ√(2G)/g·[2G(Φₓg − Φg')/g² + Φ] + yΦ_y omits the factor σ√(2G)/g on yΦ_y and is not used"
                .into(),
        );
        notes.push("origin_repulsion reads the condition at the origin as Φ(0,0) < 0".into());
    }

    let bound = match cfg.sigma_bound {
        Some(s) => Ok(OuterBound::user(s)),
        None => estimate_outer_bound(sys, window, cfg),
    };
    match bound {
        Ok(bound) => {
            if bound.sigma_bound == 0.0 {
                notes.push("φ ≥ 0 on every sample: U is empty and origin_repulsion cannot pass".into());
            }
            checks.push(outer_bound_check(&bound, window, cfg));
            checks.push(
                check_outer_damping(sys, window, &bound, None, cfg)
                    .unwrap_or_else(|e| CheckResult::from_error(OUTER_DAMPING, window, &e)),
            );
            notes.push("outer_damping tests finitely many level sets beyond sigma_bound".into());
        }
        Err(e) => checks.push(CheckResult::from_error(OUTER_BOUND, window, &e)),
    }

    checks.push(
        check_origin_repulsion(sys, window, cfg).unwrap_or_else(|e| CheckResult::from_error(ORIGIN_REPULSION, window, &e)),
    );

    let overall = Verdict::combine(checks.iter().map(|c| c.verdict));
    CertificationReport { checks, overall, notes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn sys(phi: &str) -> PlanarSystem {
        PlanarSystem::from_strings(phi, "x", &BTreeMap::new(), Window::default()).unwrap()
    }

    fn nonlinear(phi: &str, g: &str) -> PlanarSystem {
        let p = BTreeMap::new();
        PlanarSystem::new_nonlinear(Expr::parse(phi, &p).unwrap(), Expr::parse(g, &p).unwrap(), Window::default())
            .unwrap()
    }

    const PED: &str = "x^2 + x*y + y^2 - 1";
    const QPOLY: &str = "-1 + (x^2+x*y+y^2) - (x^2+x*y+y^2)^2 + (x^2+x*y+y^2)^3";

    fn cfg() -> CertifyConfig {
        CertifyConfig::default()
    }

    #[test]
    fn axis_directions_are_exact() {
        assert_eq!(direction(64, 256), [0.0, 1.0]);
        assert_eq!(direction(192, 256), [0.0, -1.0]);
        assert_eq!(direction(128, 256), [-1.0, 0.0]);
    }

    #[test]
    fn pedestrian_is_star_shaped_positive() {
        let (c, sign) = check_star_shaped(&sys(PED), Window::default(), &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
        assert_eq!(sign, 1.0);
        // corners beyond the inscribed disk are clipped
        assert!(c.sampled > 100 * 256 && c.sampled < 128 * 256);
    }

    #[test]
    fn van_der_pol_fails_on_vertical_axis() {
        let (c, _) = check_star_shaped(&sys("x^2 - 1"), Window::default(), &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        assert!(!c.witnesses.is_empty());
        assert!(c.witnesses.iter().all(|w| w.x == 0.0));
    }

    #[test]
    fn constant_damping_fails() {
        let (c, _) = check_star_shaped(&sys("0.7"), Window::default(), &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
    }

    #[test]
    fn mixed_signs_fail() {
        let (c, _) = check_star_shaped(&sys("x^2 - y^2"), Window::default(), &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        assert!(c.detail.unwrap().contains("negative"));
    }

    #[test]
    fn negative_star_scalar_passes_with_negative_sign() {
        let (c, sign) = check_star_shaped(&sys("1/(1 + x^2 + y^2)"), Window::default(), &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
        assert_eq!(sign, -1.0);
    }

    #[test]
    fn star_shaped_verdict_is_scale_invariant() {
        for phi in [PED, "x^2 - 1", "1/(1 + x^2 + y^2)"] {
            let base = check_star_shaped(&sys(phi), Window::default(), &cfg()).unwrap().0.verdict;
            let scaled = phi.replace('x', "(2.5*x)").replace('y', "(2.5*y)");
            let s = check_star_shaped(&sys(&scaled), Window::default(), &cfg()).unwrap().0.verdict;
            assert_eq!(base, s, "{phi}");
        }
    }

    #[test]
    fn pass_survives_refinement() {
        let fine = CertifyConfig {
            n_r: 256,
            n_theta: 512,
            ..cfg()
        };
        for phi in [PED, QPOLY] {
            assert_eq!(check_star_shaped(&sys(phi), Window::default(), &fine).unwrap().0.verdict, Verdict::Pass);
        }
    }

    #[test]
    fn nonlinear_reduces_to_linear_for_unit_g() {
        for phi in [PED, "x^2 - 1", "1/(1 + x^2 + y^2)"] {
            let a = check_star_shaped(&sys(phi), Window::default(), &cfg()).unwrap();
            let b = check_star_shaped_nonlinear(&nonlinear(phi, "x"), Window::default(), &cfg()).unwrap();
            assert_eq!(a.0.verdict, b.0.verdict, "{phi}");
            assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn constant_negative_damping_fails_nonlinear() {
        for g in ["x", "x + x^3"] {
            let (c, _) = check_star_shaped_nonlinear(&nonlinear("-1", g), Window::default(), &cfg()).unwrap();
            assert_eq!(c.verdict, Verdict::Fail, "{g}");
        }
    }

    #[test]
    fn cubic_g_pedestrian_matches_uv_side_signs() {
        let s = nonlinear(PED, "x + x^3");
        let (c, sign) = check_star_shaped_nonlinear(&s, Window::default(), &cfg()).unwrap();
        let t = s.transform();
        for (_, _, p) in polar_samples(Window::default(), &cfg()).into_iter().step_by(97) {
            let oracle = t.star_scalar(t.alpha(p[0]).unwrap(), p[1]).unwrap();
            if c.verdict == Verdict::Pass {
                assert_eq!(oracle.signum(), sign, "{p:?}");
            }
        }
        assert_eq!(check_g_monotone(&s, Window::default(), 1000).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn g_monotone_catches_flat_spot() {
        // x·g(x) > 0 but g' < 0 around x = ±π
        let s = nonlinear("x^2 + y^2 - 1", "x + 2*sin(x)");
        let c = check_g_monotone(&s, Window::default(), 1000).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        assert!(!c.witnesses.is_empty());
    }

    #[test]
    fn pedestrian_outer_bound_is_root_two() {
        let b = estimate_outer_bound(&sys(PED), Window::default(), &cfg()).unwrap();
        let cell = Grid::new(Window::default(), 401, 401).cell_diagonal();
        assert!((b.sigma_bound - 2f64.sqrt()).abs() <= cell, "{}", b.sigma_bound);
        assert!(b.sigma_bound >= 2f64.sqrt());
        assert!(!b.touches_boundary);
        assert_eq!(b.source, BoundSource::AutoEstimated);
    }

    #[test]
    fn disk_outer_bound_and_empty_bound() {
        let b = estimate_outer_bound(&sys("x^2 + y^2 - 1"), Window::default(), &cfg()).unwrap();
        assert!((b.sigma_bound - 1.0).abs() <= 0.08);
        let e = estimate_outer_bound(&sys("x^2 + y^2"), Window::default(), &cfg()).unwrap();
        assert_eq!(e.sigma_bound, 0.0);
        let vdp = estimate_outer_bound(&sys("x^2 - 1"), Window::default(), &cfg()).unwrap();
        assert!(vdp.touches_boundary);
    }

    #[test]
    fn outer_damping_examples() {
        let w = Window::default();
        let ped = sys(PED);
        let b = estimate_outer_bound(&ped, w, &cfg()).unwrap();
        let c = check_outer_damping(&ped, w, &b, None, &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
        assert_eq!(c.sampled, 12 * 720);

        let disk = sys("x^2 + y^2 - 1");
        let radii = [1.5, 2.0, 4.0];
        let c = check_outer_damping(&disk, w, &OuterBound::user(1.0), Some(&radii), &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);

        let zero = sys("0");
        let c = check_outer_damping(&zero, w, &OuterBound::user(0.0), None, &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        assert_eq!(c.witnesses.len(), 12);
    }

    #[test]
    fn outer_damping_finds_negative_witness() {
        let s = sys("x^2 + y^2 - 1 - 3*x*y");
        let c = check_outer_damping(&s, Window::default(), &OuterBound::user(1.0), None, &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        assert!(c.witnesses.iter().all(|w| w.value < 0.0));
    }

    #[test]
    fn nonlinear_outer_damping_traces_energy_levels() {
        let s = nonlinear(PED, "x + x^3");
        let b = estimate_outer_bound(&s, Window::default(), &cfg()).unwrap();
        let c = check_outer_damping(&s, Window::default(), &b, None, &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
        assert!(c.sampled > 12 * 100);
    }

    #[test]
    fn origin_repulsion_examples() {
        let w = Window::default();
        assert_eq!(check_origin_repulsion(&sys(PED), w, &cfg()).unwrap().verdict, Verdict::Pass);
        assert_eq!(check_origin_repulsion(&sys(QPOLY), w, &cfg()).unwrap().verdict, Verdict::Pass);
        let c = check_origin_repulsion(&sys("x^2 + y^2"), w, &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        assert_eq!(c.witnesses[0].value, 0.0);
    }

    #[test]
    fn overall_verdicts() {
        assert_eq!(certify_unique_attracting_cycle(&sys(PED), &cfg()).overall, Verdict::Pass);
        assert_eq!(certify_unique_attracting_cycle(&sys(QPOLY), &cfg()).overall, Verdict::Pass);
        let vdp = certify_unique_attracting_cycle(&sys("x^2 - 1"), &cfg());
        assert_eq!(vdp.overall, Verdict::Fail);
        assert_eq!(vdp.check(STAR_SHAPED).unwrap().verdict, Verdict::Fail);
        let empty = certify_unique_attracting_cycle(&sys("x^2 + y^2"), &cfg());
        assert_eq!(empty.overall, Verdict::Fail);
        assert!(empty.notes.iter().any(|n| n.contains("empty")));
    }

    #[test]
    fn every_fail_carries_a_witness() {
        for phi in [PED, "x^2 - 1", "0", "x^2 + y^2", "x^2 - y^2", "1/x"] {
            let r = certify_unique_attracting_cycle(&sys(phi), &cfg());
            for c in &r.checks {
                if c.verdict == Verdict::Fail {
                    assert!(!c.witnesses.is_empty(), "{phi}: {}", c.name);
                }
            }
        }
    }

    #[test]
    fn combine_rules() {
        use Verdict::*;
        assert_eq!(Verdict::combine([Pass, Pass]), Pass);
        assert_eq!(Verdict::combine([Pass, Inconclusive]), Inconclusive);
        assert_eq!(Verdict::combine([Inconclusive, Fail]), Fail);
    }
}
