//! Trajectories, the first-return map to the positive x-semi-axis, and
//! limit-cycle location.

mod dopri;

use serde::{Deserialize, Serialize};

pub use dopri::{Step, Stepper};

use crate::error::{Error, Result};
use crate::model::{PlanarSystem, Point, TransformedSystem};

/// Anything that can be integrated.
pub trait VectorField: Sync {
    fn velocity(&self, p: Point) -> Result<Point>;

    /// Divides working durations to obtain durations in caller time.
    fn time_scale(&self) -> f64 {
        1.0
    }
}

impl VectorField for PlanarSystem {
    fn velocity(&self, p: Point) -> Result<Point> {
        self.vector_field(p)
    }

    fn time_scale(&self) -> f64 {
        PlanarSystem::time_scale(self)
    }
}

impl VectorField for TransformedSystem {
    fn velocity(&self, p: Point) -> Result<Point> {
        self.vector_field(p)
    }
}

/// Plain closure as a vector field.
pub struct FnField<F>(pub F);

impl<F: Fn(Point) -> Result<Point> + Sync> VectorField for FnField<F> {
    fn velocity(&self, p: Point) -> Result<Point> {
        (self.0)(p)
    }
}

/// The same field with time running backwards.
pub struct Reversed<'a, F: ?Sized>(pub &'a F);

impl<F: VectorField + ?Sized> VectorField for Reversed<'_, F> {
    fn velocity(&self, p: Point) -> Result<Point> {
        let v = self.0.velocity(p)?;
        Ok([-v[0], -v[1]])
    }

    fn time_scale(&self) -> f64 {
        self.0.time_scale()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub fn uniform(tol: f64) -> Self {
        Self { rel: tol, abs: tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicsConfig {
    pub tol: Tolerance,
    pub t_max: f64,
    pub blowup_radius: f64,
    pub h_max: f64,
    /// The return map gives up once an orbit comes this close to O.
    pub origin_radius: f64,
    pub scan_start: f64,
    pub scan_ratio: f64,
    pub scan_max: f64,
    pub loop_points: usize,
    /// Accepted steps allowed for one return of the section map.
    pub max_steps: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            tol: Tolerance { rel: 1e-11, abs: 1e-13 },
            t_max: 1e4,
            blowup_radius: 1e6,
            h_max: 0.1,
            origin_radius: 1e-9,
            scan_start: 0.05,
            scan_ratio: 1.3,
            scan_max: 10.0,
            loop_points: 512,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    TimeLimit,
    EnteredSet,
    SectionHitCount,
    Blowup,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `(t, p)` at every accepted step, starting with `(0, p0)`.
    pub samples: Vec<(f64, Point)>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last(&self) -> (f64, Point) {
        *self.samples.last().expect("trajectory holds its initial point")
    }
}

fn norm(p: Point) -> f64 {
    p[0].hypot(p[1])
}

/// Integrates until `t_max`, blowup, or until `stop` returns true at an
/// accepted step.
pub fn integrate_until<F, S>(field: &F, p0: Point, t_max: f64, cfg: &DynamicsConfig, mut stop: S) -> Result<Trajectory>
where
    F: VectorField + ?Sized,
    S: FnMut(f64, Point) -> bool,
{
    let mut stepper = Stepper::new(field, p0, cfg.tol, cfg.h_max)?;
    let mut samples = vec![(0.0, p0)];
    let termination = loop {
        if stepper.time() >= t_max {
            break Termination::TimeLimit;
        }
        let step = stepper.step(t_max)?;
        samples.push((step.t1(), step.y1));
        if norm(step.y1) > cfg.blowup_radius {
            break Termination::Blowup;
        }
        if stop(step.t1(), step.y1) {
            break Termination::EnteredSet;
        }
    };
    Ok(Trajectory { samples, termination })
}

pub fn integrate<F: VectorField + ?Sized>(field: &F, p0: Point, t_max: f64, cfg: &DynamicsConfig) -> Result<Trajectory> {
    integrate_until(field, p0, t_max, cfg, |_, _| false)
}

/// States at `n + 1` equally spaced times on `[0, t_end]`, from dense output.
pub fn sample_uniform<F: VectorField + ?Sized>(
    field: &F,
    p0: Point,
    t_end: f64,
    n: usize,
    cfg: &DynamicsConfig,
) -> Result<Vec<(f64, Point)>> {
    let mut stepper = Stepper::new(field, p0, cfg.tol, cfg.h_max)?;
    let mut out = Vec::with_capacity(n + 1);
    out.push((0.0, p0));
    let mut k = 1;
    while k <= n {
        let step = stepper.step(t_end)?;
        while k <= n {
            let t = t_end * k as f64 / n as f64;
            if t > step.t1() && k < n {
                break;
            }
            if k == n && stepper.time() < t_end {
                break;
            }
            let p = if k == n { step.y1 } else { step.at(t) };
            out.push((t, p));
            k += 1;
        }
        if norm(step.y1) > cfg.blowup_radius {
            return Err(Error::NoReturn {
                t: step.t1(),
                x: step.y1[0],
                y: step.y1[1],
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeDirection {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Return {
    pub x_return: f64,
    /// Elapsed working time (always positive).
    pub flight_time: f64,
}

/// Root of `y` on the step's dense output, assuming a sign change.
fn polish_crossing(step: &Step) -> (f64, Point) {
    let (mut a, mut b) = (0.0, 1.0);
    let (mut ya, mut yb) = (step.y0[1], step.y1[1]);
    let mut side = 0;
    let mut best = (1.0, step.y1);
    for _ in 0..200 {
        // Illinois variant of regula falsi
        let theta = (a * yb - b * ya) / (yb - ya);
        let p = step.at_fraction(theta);
        best = (theta, p);
        if p[1].abs() <= 1e-12 || (b - a) <= 1e-15 {
            break;
        }
        if (p[1] > 0.0) == (ya > 0.0) {
            a = theta;
            ya = p[1];
            if side == -1 {
                yb *= 0.5;
            }
            side = -1;
        } else {
            b = theta;
            yb = p[1];
            if side == 1 {
                ya *= 0.5;
            }
            side = 1;
        }
    }
    (step.t0 + best.0 * step.h, best.1)
}

/// First return of the orbit through `(x_start, 0)` to `{y = 0, x > 0}`.
pub fn poincare_return<F: VectorField + ?Sized>(
    field: &F,
    x_start: f64,
    direction: TimeDirection,
    cfg: &DynamicsConfig,
) -> Result<Return> {
    if x_start.is_nan() || x_start <= 0.0 {
        return Err(Error::Usage(format!("section start {x_start} must be positive")));
    }
    match direction {
        TimeDirection::Forward => return_on(field, x_start, cfg),
        TimeDirection::Backward => return_on(&Reversed(field), x_start, cfg),
    }
}

fn return_on<F: VectorField + ?Sized>(field: &F, x_start: f64, cfg: &DynamicsConfig) -> Result<Return> {
    let p0 = [x_start, 0.0];
    let departure = field.velocity(p0)?[1].signum();
    if departure == 0.0 {
        return Err(Error::Usage(format!("section is not transversal at x = {x_start}")));
    }
    let mut stepper = Stepper::new(field, p0, cfg.tol, cfg.h_max)?;
    for _ in 0..cfg.max_steps {
        let step = stepper.step(cfg.t_max)?;
        let (y0, y1) = (step.y0[1], step.y1[1]);
        if y0 * departure < 0.0 && y1 * departure >= 0.0 {
            let (t, p) = polish_crossing(&step);
            if p[0] > 0.0 {
                return Ok(Return {
                    x_return: p[0],
                    flight_time: t,
                });
            }
        }
        let r = norm(step.y1);
        if r < cfg.origin_radius || r > cfg.blowup_radius || stepper.time() >= cfg.t_max {
            return Err(Error::NoReturn {
                t: stepper.time(),
                x: step.y1[0],
                y: step.y1[1],
            });
        }
    }
    let p = stepper.state();
    Err(Error::NoReturn {
        t: stepper.time(),
        x: p[0],
        y: p[1],
    })
}

/// Return-map displacement `P(x) − x` on a geometric ladder, errors kept per point.
pub fn displacement_scan<F: VectorField + ?Sized>(
    field: &F,
    lo: f64,
    hi: f64,
    ratio: f64,
    cfg: &DynamicsConfig,
) -> Vec<(f64, Result<f64>)> {
    let mut out = Vec::new();
    let mut x = lo;
    while x <= hi * (1.0 + 1e-12) {
        let d = poincare_return(field, x, TimeDirection::Forward, cfg).map(|r| r.x_return - x);
        out.push((x, d));
        x *= ratio;
    }
    out
}

/// Number of sign changes of the displacement along a scan, skipping
/// points where the return map failed.
pub fn count_sign_changes(scan: &[(f64, Result<f64>)]) -> usize {
    let signs: Vec<f64> = scan
        .iter()
        .filter_map(|(_, d)| d.as_ref().ok().copied())
        .filter(|d| *d != 0.0)
        .map(f64::signum)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    /// Fixed point `x*` of the return map on `{y = 0, x > 0}`.
    pub section_anchor: f64,
    /// Period in caller time units.
    pub period: f64,
    /// `P'(x*)`; the cycle attracts nearby orbits iff `|multiplier| < 1`.
    pub multiplier: f64,
    /// `|P(x*) − x*|`.
    pub residual: f64,
    /// One period sampled uniformly in time, `(t, x, y)` with `t` in caller units.
    pub loop_points: Vec<(f64, Point)>,
}

impl LimitCycle {
    pub fn is_attracting(&self) -> bool {
        self.multiplier.abs() < 1.0
    }

    /// Time-averaged distance from the origin over the loop.
    pub fn mean_radius(&self) -> f64 {
        let n = self.loop_points.len() - 1;
        self.loop_points[..n].iter().map(|(_, p)| norm(*p)).sum::<f64>() / n as f64
    }

    pub fn polyline(&self) -> Vec<Point> {
        self.loop_points.iter().map(|(_, p)| *p).collect()
    }
}

/// Locates the fixed point of the return map. With `bracket = None`, or
/// when the bracket does not straddle a sign change, scans the geometric
/// ladder `scan_start·scan_ratioᵏ ≤ scan_max` and uses the first change.
pub fn find_cycle<F: VectorField + ?Sized>(
    field: &F,
    bracket: Option<(f64, f64)>,
    cfg: &DynamicsConfig,
) -> Result<LimitCycle> {
    let disp = |x: f64| -> Result<f64> { Ok(poincare_return(field, x, TimeDirection::Forward, cfg)?.x_return - x) };

    let mut found = None;
    if let Some((lo, hi)) = bracket {
        if 0.0 < lo && lo < hi {
            if let (Ok(dl), Ok(dh)) = (disp(lo), disp(hi)) {
                if dl * dh <= 0.0 {
                    found = Some((lo, dl, hi, dh));
                }
            }
        }
    }
    if found.is_none() {
        let mut prev: Option<(f64, f64)> = None;
        let mut x = cfg.scan_start;
        while x <= cfg.scan_max * (1.0 + 1e-12) {
            if let Ok(d) = disp(x) {
                if let Some((xp, dp)) = prev {
                    if dp * d <= 0.0 {
                        found = Some((xp, dp, x, d));
                        break;
                    }
                }
                prev = Some((x, d));
            }
            x *= cfg.scan_ratio;
        }
    }
    let (mut lo, mut dlo, mut hi, mut dhi) = found.ok_or(Error::NoCycleFound {
        lo: cfg.scan_start,
        hi: cfg.scan_max,
    })?;

    // bisection down to a narrow bracket, then guarded secant
    while hi - lo > 1e-3 * lo {
        let m = 0.5 * (lo + hi);
        let dm = disp(m)?;
        if dm * dlo <= 0.0 {
            hi = m;
            dhi = dm;
        } else {
            lo = m;
            dlo = dm;
        }
    }
    let target = |x: f64| 1e-10 * (1.0 + x);
    let (mut x, mut d) = if dlo.abs() < dhi.abs() { (lo, dlo) } else { (hi, dhi) };
    let mut iterations = 0;
    while d.abs() > target(x) {
        iterations += 1;
        if iterations > 60 {
            return Err(Error::NonConvergence { residual: d.abs() });
        }
        let mut next = hi - dhi * (hi - lo) / (dhi - dlo);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let dn = disp(next)?;
        if dn * dlo <= 0.0 {
            hi = next;
            dhi = dn;
        } else {
            lo = next;
            dlo = dn;
        }
        x = next;
        d = dn;
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    if d.abs() > 1e-9 * (1.0 + x) {
        return Err(Error::NonConvergence { residual: d.abs() });
    }

    let ret = poincare_return(field, x, TimeDirection::Forward, cfg)?;
    let h = 1e-5 * x;
    let multiplier = (disp(x + h)? - disp(x - h)?) / (2.0 * h) + 1.0;
    let scale = field.time_scale();
    let loop_points = sample_uniform(field, [x, 0.0], ret.flight_time, cfg.loop_points, cfg)?
        .into_iter()
        .map(|(t, p)| (t / scale, p))
        .collect();
    Ok(LimitCycle {
        section_anchor: x,
        period: ret.flight_time / scale,
        multiplier,
        residual: d.abs(),
        loop_points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OriginClass {
    NegativelyAsymptoticallyStable,
    Other,
    Inconclusive,
}

/// Integrates the time-reversed flow from 8 points at radius 1e-3 and
/// reports whether all of them fall into `‖p‖ < 1e-6`.
pub fn classify_origin<F: VectorField + ?Sized>(field: &F, t_max: f64) -> Result<OriginClass> {
    const START: f64 = 1e-3;
    const CAPTURE: f64 = 1e-6;
    const ESCAPE: f64 = 0.1;
    let cfg = DynamicsConfig {
        tol: Tolerance { rel: 1e-9, abs: 1e-14 },
        ..DynamicsConfig::default()
    };
    let reversed = Reversed(field);
    let mut timed_out = false;
    for k in 0..8 {
        let (s, c) = (k as f64 * std::f64::consts::FRAC_PI_4).sin_cos();
        let traj = integrate_until(&reversed, [START * c, START * s], t_max, &cfg, |_, p| {
            let r = norm(p);
            !(CAPTURE..=ESCAPE).contains(&r)
        })?;
        let (_, end) = traj.last();
        match traj.termination {
            Termination::EnteredSet if norm(end) < CAPTURE => {}
            Termination::TimeLimit => timed_out = true,
            _ => return Ok(OriginClass::Other),
        }
    }
    Ok(if timed_out {
        OriginClass::Inconclusive
    } else {
        OriginClass::NegativelyAsymptoticallyStable
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    use super::*;
    use crate::model::Window;

    fn sys(phi: &str) -> PlanarSystem {
        let params: BTreeMap<String, f64> = [("eps".to_string(), 1.0)].into();
        PlanarSystem::from_strings(phi, "x", &params, Window::default()).unwrap()
    }

    const PED: &str = "eps*(x^2 + x*y + y^2 - 1)";

    #[test]
    fn harmonic_oscillator_closes() {
        let h = sys("0");
        let cfg = DynamicsConfig::default();
        let traj = integrate(&h, [1.0, 0.0], 2.0 * PI, &cfg).unwrap();
        let (t, p) = traj.last();
        assert_eq!(t, 2.0 * PI);
        assert!((p[0] - 1.0).abs() < 1e-8 && p[1].abs() < 1e-8, "{p:?}");
        assert_eq!(traj.termination, Termination::TimeLimit);
        assert!(traj.samples.windows(2).all(|w| w[1].0 > w[0].0));
    }

    #[test]
    fn dense_output_tracks_exact_rotation() {
        let h = sys("0");
        let pts = sample_uniform(&h, [1.0, 0.0], 2.0 * PI, 100, &DynamicsConfig::default()).unwrap();
        assert_eq!(pts.len(), 101);
        for (t, p) in pts {
            assert!((p[0] - t.cos()).abs() < 1e-9 && (p[1] + t.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn harmonic_return_map() {
        let r = poincare_return(&sys("0"), 1.5, TimeDirection::Forward, &DynamicsConfig::default()).unwrap();
        assert!((r.x_return - 1.5).abs() < 1e-9);
        assert!((r.flight_time - 2.0 * PI).abs() < 1e-9);
        let r = poincare_return(&sys("0"), 1.5, TimeDirection::Backward, &DynamicsConfig::default()).unwrap();
        assert!((r.flight_time - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn invariant_circle_return() {
        let r = poincare_return(&sys("x^2 + y^2 - 1"), 1.0, TimeDirection::Forward, &DynamicsConfig::default())
            .unwrap();
        assert!((r.x_return - 1.0).abs() < 1e-9);
        assert!((r.flight_time - 2.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn pedestrian_contracts_from_outside() {
        let r = poincare_return(&sys(PED), 3.0, TimeDirection::Forward, &DynamicsConfig::default()).unwrap();
        assert!(r.x_return < 3.0);
    }

    #[test]
    fn return_rejects_nonpositive_start() {
        assert!(poincare_return(&sys("0"), 0.0, TimeDirection::Forward, &DynamicsConfig::default()).is_err());
    }

    #[test]
    fn no_return_when_orbit_dies_at_origin() {
        let cfg = DynamicsConfig {
            t_max: 200.0,
            ..DynamicsConfig::default()
        };
        let e = poincare_return(&sys("3"), 1.0, TimeDirection::Forward, &cfg).unwrap_err();
        assert!(matches!(e, Error::NoReturn { .. }));
    }

    #[test]
    fn unit_circle_cycle() {
        let c = find_cycle(&sys("x^2 + y^2 - 1"), None, &DynamicsConfig::default()).unwrap();
        assert!((c.section_anchor - 1.0).abs() <= 1e-7);
        assert!((c.period - 2.0 * PI).abs() <= 1e-6);
        assert!(c.is_attracting());
        // δ(r²) decays by exp(-2∫y²dt) = exp(-2π) per turn
        assert!((c.multiplier - (-2.0 * PI).exp()).abs() < 1e-4, "{}", c.multiplier);
        assert!(c.residual <= 1e-9 * 2.0);
        let first = c.loop_points[0].1;
        let last = c.loop_points.last().unwrap().1;
        assert!(norm([first[0] - last[0], first[1] - last[1]]) <= 1e-7);
        assert_eq!(c.loop_points.len(), 513);
    }

    #[test]
    fn explicit_bracket_is_used() {
        let c = find_cycle(&sys("x^2 + y^2 - 1"), Some((0.5, 2.0)), &DynamicsConfig::default()).unwrap();
        assert!((c.section_anchor - 1.0).abs() <= 1e-7);
    }

    #[test]
    fn rescaled_period_is_reported_in_caller_time() {
        // ẍ + ẋ(x² + ẋ²/4 − 1) + 4x = 0 normalizes to the unit-circle system with τ = 2t
        let s = PlanarSystem::from_strings("x^2 + y^2/4 - 1", "4*x", &BTreeMap::new(), Window::default()).unwrap();
        let c = find_cycle(&s, None, &DynamicsConfig::default()).unwrap();
        assert!((c.period - PI).abs() <= 1e-6);
    }

    #[test]
    fn pure_damping_has_no_cycle() {
        let cfg = DynamicsConfig {
            t_max: 500.0,
            ..DynamicsConfig::default()
        };
        assert!(matches!(find_cycle(&sys("1"), None, &cfg), Err(Error::NoCycleFound { .. })));
    }

    #[test]
    fn small_eps_pedestrian_radius() {
        let params: BTreeMap<String, f64> = [("eps".to_string(), 0.05)].into();
        let s = PlanarSystem::from_strings(PED, "x", &params, Window::default()).unwrap();
        let c = find_cycle(&s, None, &DynamicsConfig::default()).unwrap();
        assert!((c.mean_radius() - 1.0).abs() <= 0.02, "{}", c.mean_radius());
    }

    #[test]
    fn pedestrian_has_one_fixed_point_in_scan() {
        let s = sys(PED);
        let scan = displacement_scan(&s, 0.05, 6.0, 1.3, &DynamicsConfig::default());
        assert!(scan.iter().all(|(_, d)| d.is_ok()));
        assert_eq!(count_sign_changes(&scan), 1);
    }

    #[test]
    fn origin_classification() {
        assert_eq!(classify_origin(&sys(PED), 200.0).unwrap(), OriginClass::NegativelyAsymptoticallyStable);
        assert_eq!(classify_origin(&sys("1"), 200.0).unwrap(), OriginClass::Other);
        assert_eq!(
            classify_origin(&sys("x^2 + y^2 - 1"), 200.0).unwrap(),
            OriginClass::NegativelyAsymptoticallyStable
        );
        assert_eq!(classify_origin(&sys("0"), 50.0).unwrap(), OriginClass::Inconclusive);
    }

    #[test]
    fn trajectory_stays_in_trapping_disk() {
        let s = sys(PED);
        let traj = integrate(&s, [3.0, 3.0], 60.0, &DynamicsConfig::default()).unwrap();
        let bound = 1.4143;
        let entry = traj.samples.iter().position(|(_, p)| norm(*p) < bound).expect("orbit enters the disk");
        assert!(traj.samples[entry..].iter().all(|(_, p)| norm(*p) <= bound + 1e-6));
    }

    #[test]
    fn v_decreases_outside_ellipse() {
        let s = sys(PED);
        let traj = integrate(&s, [4.0, -1.0], 30.0, &DynamicsConfig::default()).unwrap();
        let outside = |p: Point| p[0] * p[0] + p[0] * p[1] + p[1] * p[1] > 1.0;
        for w in traj.samples.windows(2) {
            let (a, b) = (w[0].1, w[1].1);
            if outside(a) && outside(b) {
                assert!(s.v(b) <= s.v(a) + 1e-12, "{a:?} -> {b:?}");
            }
        }
    }

    #[test]
    fn backward_flow_inside_cycle_approaches_origin() {
        let s = sys(PED);
        let back = Reversed(&s);
        let traj = integrate(&back, [0.5, 0.0], 30.0, &DynamicsConfig::default()).unwrap();
        assert!(norm(traj.last().1) < 0.05);
    }

    #[test]
    fn global_error_scales_with_tolerance() {
        let h = sys("0");
        let tols = [1e-6, 1e-8, 1e-10];
        let errs: Vec<f64> = tols
            .iter()
            .map(|&tol| {
                let cfg = DynamicsConfig {
                    tol: Tolerance::uniform(tol),
                    h_max: 10.0,
                    ..DynamicsConfig::default()
                };
                let (_, p) = integrate(&h, [1.0, 0.0], 2.0 * PI, &cfg).unwrap().last();
                (p[0] - 1.0).hypot(p[1])
            })
            .collect();
        let slope = (errs[2].ln() - errs[0].ln()) / (tols[2].ln() - tols[0].ln());
        assert!((0.75..=1.25).contains(&slope), "{errs:?} slope {slope}");
        assert!(errs.iter().zip(&tols).all(|(e, t)| *e <= 100.0 * t));
    }
}
