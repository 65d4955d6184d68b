//! The zero set of `A`, the ray and radial properties it must have, and
//! basin-of-attraction probing.

pub mod contour;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{CheckResult, Verdict, Witness};
use crate::dynamics::{integrate_until, DynamicsConfig, LimitCycle, Termination, Tolerance, VectorField};
use crate::error::Result;
use crate::model::{PlanarSystem, Point, Window};

pub use contour::{march, ContourSet, Grid};

pub const RAY_UNIQUENESS: &str = "ray_uniqueness";
pub const RADIAL_MONOTONICITY: &str = "radial_monotonicity";

fn norm(p: Point) -> f64 {
    p[0].hypot(p[1])
}

/// `A₀ = {A = 0} \ {O}` by marching squares; cells touching `O` are dropped.
///
/// For nonlinear `g` the curve is traced for the transformed system in the
/// `(u, v)` plane and its vertices are mapped back by `β`; the returned
/// grid is then the `(u, v)` grid.
pub fn extract_a0(sys: &PlanarSystem, window: Window, nx: usize, ny: usize) -> Result<ContourSet> {
    let skip_origin = |grid: Grid| move |i: usize, j: usize| grid.cell_contains(i, j, [0.0, 0.0]);
    if sys.is_linear() {
        let grid = Grid::new(window, nx, ny);
        let values = grid.sample(|p| sys.a_field(p))?;
        return Ok(march(grid, &values, 0.0, skip_origin(grid)));
    }
    let t = sys.transform();
    let u_max = t.alpha(window.x_max)?.min(-t.alpha(-window.x_max)?);
    let grid = Grid::new(Window { x_max: u_max, y_max: window.y_max }, nx, ny);
    let values = grid.sample(|[u, v]| Ok(u * u + v * v + u * v * t.phi_tilde(u, v)?))?;
    let mut set = march(grid, &values, 0.0, skip_origin(grid));
    for line in &mut set.polylines {
        for p in line.iter_mut() {
            *p = t.to_original(*p)?;
        }
    }
    Ok(set)
}

/// Distances along the ray at angle `theta` where it meets the contour,
/// sorted, with hits closer than `merge` collapsed.
pub fn ray_hits(contour: &ContourSet, theta: f64, merge: f64) -> Vec<f64> {
    let d = [theta.cos(), theta.sin()];
    let mut hits = Vec::new();
    for line in &contour.polylines {
        let last = line.len().saturating_sub(2);
        for (k, w) in line.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let e = [b[0] - a[0], b[1] - a[1]];
            let den = d[0] * e[1] - d[1] * e[0];
            if den == 0.0 {
                continue;
            }
            // a + s·e = t·d
            let t = (a[0] * e[1] - a[1] * e[0]) / den;
            let s = (a[0] * d[1] - a[1] * d[0]) / den;
            // half-open so that a shared vertex is counted once
            let s_ok = (0.0..1.0).contains(&s) || (k == last && s == 1.0);
            if t > 0.0 && s_ok {
                hits.push(t);
            }
        }
    }
    hits.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(hits.len());
    for t in hits {
        match merged.last() {
            Some(&m) if t - m <= merge => {}
            _ => merged.push(t),
        }
    }
    merged
}

/// Every ray from `O` meets the contour at most once.
pub fn check_ray_uniqueness(contour: &ContourSet, n_rays: usize) -> CheckResult {
    let merge = 0.5 * contour.grid.dx().min(contour.grid.dy());
    let mut check = CheckResult {
        name: RAY_UNIQUENESS.to_string(),
        verdict: Verdict::Pass,
        witnesses: Vec::new(),
        sampled: n_rays,
        window: contour.grid.window,
        tolerances: [("merge_radius".to_string(), merge)].into(),
        detail: None,
    };
    let mut worst = 0;
    for k in 0..n_rays {
        let theta = 2.0 * PI * k as f64 / n_rays as f64;
        let hits = ray_hits(contour, theta, merge);
        worst = worst.max(hits.len());
        if hits.len() > 1 {
            check.verdict = Verdict::Fail;
            if check.witnesses.len() < 16 {
                let t = hits[1];
                check.witnesses.push(Witness::at([t * theta.cos(), t * theta.sin()], hits.len() as f64));
            }
        }
    }
    check.detail = Some(format!("at most {worst} crossing(s) per ray"));
    check
}

/// Sign of `s` on the unit circle, or `None` if it changes or vanishes.
fn star_sign(sys: &PlanarSystem) -> Result<Option<f64>> {
    let mut sign = None;
    for k in 0..64 {
        let (s, c) = (2.0 * PI * (k as f64 + 0.5) / 64.0).sin_cos();
        let v = sys.nu_scalar([c, s])?.s;
        if v == 0.0 {
            return Ok(None);
        }
        match sign {
            None => sign = Some(v.signum()),
            Some(prev) if prev != v.signum() => return Ok(None),
            _ => {}
        }
    }
    Ok(sign)
}

/// `r ↦ A(r·p)` on `r ∈ [1, R]` at 21 radii, `R` capped by the window and by 3.
fn radial_profile(sys: &PlanarSystem, window: Window, p: Point) -> Result<Option<Vec<f64>>> {
    let reach = (window.x_max / p[0].abs()).min(window.y_max / p[1].abs()).min(3.0);
    if reach <= 1.0 + 1e-6 {
        return Ok(None);
    }
    (0..=20)
        .map(|k| {
            let r = 1.0 + (reach - 1.0) * k as f64 / 20.0;
            sys.a_field([r * p[0], r * p[1]])
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// Along rays through random points: where `xy·sign(s) > 0` and `A ≥ 0`,
/// `A` must strictly increase outward; where `xy·sign(s) < 0` and `A < 0`,
/// it must strictly decrease.
pub fn check_radial_monotonicity(sys: &PlanarSystem, window: Window, samples: usize, seed: u64) -> Result<CheckResult> {
    let mut check = CheckResult {
        name: RADIAL_MONOTONICITY.to_string(),
        verdict: Verdict::Pass,
        witnesses: Vec::new(),
        sampled: 0,
        window,
        tolerances: [("radii".to_string(), 21.0)].into(),
        detail: None,
    };
    let Some(sign) = star_sign(sys)? else {
        check.verdict = Verdict::Inconclusive;
        check.detail = Some("s is not of one sign on the unit circle".into());
        return Ok(check);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut increasing, mut decreasing) = (0usize, 0usize);
    let mut draws = 0;
    while increasing + decreasing < samples && draws < 100 * samples {
        draws += 1;
        let p = [
            rng.random_range(-window.x_max..window.x_max),
            rng.random_range(-window.y_max..window.y_max),
        ];
        let side = p[0] * p[1] * sign;
        if side == 0.0 {
            continue;
        }
        let a = sys.a_field(p)?;
        let expect_up = if side > 0.0 && a >= 0.0 {
            true
        } else if side < 0.0 && a < 0.0 {
            false
        } else {
            continue;
        };
        let Some(profile) = radial_profile(sys, window, p)? else { continue };
        if expect_up {
            increasing += 1;
        } else {
            decreasing += 1;
        }
        let bad = profile.windows(2).position(|w| if expect_up { w[1] <= w[0] } else { w[1] >= w[0] });
        if let Some(k) = bad {
            check.verdict = Verdict::Fail;
            if check.witnesses.len() < 16 {
                check.witnesses.push(Witness::at(p, profile[k + 1] - profile[k]));
            }
        }
    }
    check.sampled = increasing + decreasing;
    check.detail = Some(format!(
        "sign(s) = {sign:+}; {increasing} increasing and {decreasing} decreasing profiles"
    ));
    Ok(check)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasinOutcome {
    ConvergedToCycle,
    ConvergedToOrigin,
    Timeout,
    Escaped,
    /// Within the exclusion disk around `O`.
    Excluded,
    /// The integrator stopped on an evaluation error or step underflow.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinReport {
    pub grid: Grid,
    pub threshold: f64,
    /// Row-major, `j` outer, as in [`Grid::sample`].
    pub outcomes: Vec<BasinOutcome>,
}

impl BasinReport {
    pub fn count(&self, outcome: BasinOutcome) -> usize {
        self.outcomes.iter().filter(|o| **o == outcome).count()
    }

    /// Fraction of non-excluded cells that reached the cycle.
    pub fn converged_fraction(&self) -> f64 {
        let total = self.outcomes.len() - self.count(BasinOutcome::Excluded);
        if total == 0 {
            return 0.0;
        }
        self.count(BasinOutcome::ConvergedToCycle) as f64 / total as f64
    }
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let e = [b[0] - a[0], b[1] - a[1]];
    let len2 = e[0] * e[0] + e[1] * e[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * e[0] + (p[1] - a[1]) * e[1]) / len2).clamp(0.0, 1.0)
    };
    norm([p[0] - a[0] - t * e[0], p[1] - a[1] - t * e[1]])
}

/// Euclidean distance from `p` to a polyline.
pub fn polyline_distance(p: Point, line: &[Point]) -> f64 {
    match line {
        [] => f64::INFINITY,
        [a] => norm([p[0] - a[0], p[1] - a[1]]),
        _ => line.windows(2).map(|w| segment_distance(p, w[0], w[1])).fold(f64::INFINITY, f64::min),
    }
}

pub const BASIN_EXCLUSION: f64 = 1e-3;
pub const BASIN_THRESHOLD: f64 = 1e-3;
pub const ORIGIN_CAPTURE: f64 = 1e-6;

/// Integrates from every grid node until it comes within `BASIN_THRESHOLD`
/// of the cycle loop, falls into `O`, escapes, or runs out of time.
pub fn probe_basin<F: VectorField + ?Sized>(field: &F, cycle: &LimitCycle, grid: Grid, t_max: f64) -> BasinReport {
    let cfg = DynamicsConfig {
        tol: Tolerance { rel: 1e-9, abs: 1e-12 },
        ..DynamicsConfig::default()
    };
    let line = cycle.polyline();
    let (r_lo, r_hi) = line
        .iter()
        .map(|p| norm(*p))
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
    let (r_lo, r_hi) = (r_lo - BASIN_THRESHOLD, r_hi + BASIN_THRESHOLD);
    let near_cycle = |p: Point| {
        let r = norm(p);
        r >= r_lo && r <= r_hi && polyline_distance(p, &line) < BASIN_THRESHOLD
    };

    let outcomes = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let p0 = grid.node(k % grid.nx, k / grid.nx);
            if norm(p0) < BASIN_EXCLUSION {
                return BasinOutcome::Excluded;
            }
            if near_cycle(p0) {
                return BasinOutcome::ConvergedToCycle;
            }
            let traj = integrate_until(field, p0, t_max, &cfg, |_, p| norm(p) < ORIGIN_CAPTURE || near_cycle(p));
            match traj {
                Err(_) => BasinOutcome::Failed,
                Ok(t) => match t.termination {
                    Termination::EnteredSet if norm(t.last().1) < ORIGIN_CAPTURE => BasinOutcome::ConvergedToOrigin,
                    Termination::EnteredSet => BasinOutcome::ConvergedToCycle,
                    Termination::Blowup => BasinOutcome::Escaped,
                    _ => BasinOutcome::Timeout,
                },
            }
        })
        .collect();
    BasinReport {
        grid,
        threshold: BASIN_THRESHOLD,
        outcomes,
    }
}
