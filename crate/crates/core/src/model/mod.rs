//! Planar systems `ẋ = y, ẏ = -g(x) - y·φ(x, y)` and the scalar fields
//! attached to them.
//!
//! Linear restoring forces `g(x) = k·x` are normalized to `k = 1` at
//! construction: time is rescaled by `√k` and the damping becomes
//! `φ(x, √k·y)/√k`. All coordinates handled by the rest of the crate are
//! the normalized ones `(x, ẋ/√k)`; only periods are mapped back to the
//! caller's time unit (see [`PlanarSystem::time_scale`]).

mod quadrature;
mod transform;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{BinOp, Dual2, Expr, Var};

pub use quadrature::{integrate, AntiderivativeTable};
pub use transform::TransformedSystem;

pub type Point = [f64; 2];

/// Rectangle `[-x_max, x_max] × [-y_max, y_max]` on which sampling
/// checks and inverse solves take place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_max: f64,
    pub y_max: f64,
}

impl Default for Window {
    fn default() -> Self {
        Self {
            x_max: 10.0,
            y_max: 10.0,
        }
    }
}

impl Window {
    pub fn square(half_width: f64) -> Self {
        Self {
            x_max: half_width,
            y_max: half_width,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0].abs() <= self.x_max && p[1].abs() <= self.y_max
    }

    /// Radius of the largest origin-centred disk inside the window.
    pub fn inscribed_radius(&self) -> f64 {
        self.x_max.min(self.y_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Form {
    /// `g(x) = k·x`, stored normalized to `k = 1`.
    LinearG { k: f64 },
    NonlinearG,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScalarFieldKind {
    /// `A = y² + x² + x·y·φ`, opposite in sign to the angular speed.
    A,
    /// `s = x·φₓ + y·φ_y`.
    NuScalar,
    V,
    VDot,
    E,
    EDot,
    /// `φ̃(u, v)` of the transformed system, evaluated at `(u, v) = p`.
    PhiTilde,
}

/// Star-shapedness scalar `s = x·φₓ + y·φ_y` and `ν = -y²·s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuScalar {
    pub s: f64,
    pub nu: f64,
}

const LINEAR_PROBE_TOL: f64 = 1e-9;
const ADMISSIBILITY_SAMPLES: usize = 1000;
const POTENTIAL_NODES: usize = 1000;
const POTENTIAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PlanarSystem {
    phi: Expr,
    phi_source: Expr,
    g: Expr,
    form: Form,
    window: Window,
    time_scale: f64,
    g_slope0: f64,
    potential: Option<Arc<AntiderivativeTable>>,
}

fn linear_probe_points() -> impl Iterator<Item = f64> {
    (0..=24).flat_map(|k| {
        let x = 1e-3 * 10f64.powf(k as f64 / 6.0);
        [x, -x]
    })
}

impl PlanarSystem {
    /// Builds a system from parsed expressions, detecting whether `g` is linear.
    pub fn new(phi: Expr, g: Expr, window: Window) -> Result<Self> {
        if g.depends_on(Var::Y) {
            return Err(Error::GDependsOnY);
        }
        match Self::linear_coefficient(&g)? {
            Some(k) => Self::linear(phi, g, k, window),
            None => Self::new_nonlinear(phi, g, window),
        }
    }

    /// Parses both expressions against `params` and calls [`PlanarSystem::new`].
    pub fn from_strings(
        phi: &str,
        g: &str,
        params: &BTreeMap<String, f64>,
        window: Window,
    ) -> Result<Self> {
        Self::new(Expr::parse(phi, params)?, Expr::parse(g, params)?, window)
    }

    /// Treats `g` through the nonlinear machinery (quadrature for `G`,
    /// numerical inverse for `β`) even when it happens to be linear.
    pub fn new_nonlinear(phi: Expr, g: Expr, window: Window) -> Result<Self> {
        if g.depends_on(Var::Y) {
            return Err(Error::GDependsOnY);
        }
        let x_max = window.x_max;
        for i in 1..=ADMISSIBILITY_SAMPLES {
            let x = x_max * i as f64 / ADMISSIBILITY_SAMPLES as f64;
            for x in [x, -x] {
                if x * g.eval(x, 0.0)? <= 0.0 {
                    return Err(Error::Inadmissible {
                        reason: "x·g(x) must be positive for x ≠ 0".into(),
                        x,
                    });
                }
            }
        }
        let slope = g.eval_dual(0.0, 0.0)?.dx;
        if slope.is_nan() || slope <= 0.0 {
            return Err(Error::Inadmissible {
                reason: format!("g'(0) = {slope} must be positive"),
                x: 0.0,
            });
        }
        let g_fn = |x: f64| g.eval(x, 0.0).map_err(Error::from);
        let table = AntiderivativeTable::build(g_fn, x_max, POTENTIAL_NODES, POTENTIAL_TOL)?;
        Ok(Self {
            phi_source: phi.clone(),
            phi,
            g,
            form: Form::NonlinearG,
            window,
            time_scale: 1.0,
            g_slope0: slope,
            potential: Some(Arc::new(table)),
        })
    }

    fn linear(phi: Expr, g: Expr, k: f64, window: Window) -> Result<Self> {
        if k <= 0.0 {
            return Err(Error::Inadmissible {
                reason: format!("linear g = {k}·x needs k > 0"),
                x: 1.0,
            });
        }
        let c = k.sqrt();
        let working = if c == 1.0 {
            phi.clone()
        } else {
            let scaled_y = Expr::Binary(BinOp::Mul, Box::new(Expr::Const(c)), Box::new(Expr::Var(Var::Y)));
            Expr::Binary(
                BinOp::Div,
                Box::new(phi.substitute(Var::Y, &scaled_y)),
                Box::new(Expr::Const(c)),
            )
        };
        Ok(Self {
            phi: working,
            phi_source: phi,
            g,
            form: Form::LinearG { k },
            window,
            time_scale: c,
            g_slope0: 1.0,
            potential: None,
        })
    }

    /// `Some(k)` when `g(x)/x` is constant (to 1e-9 relative) on the probe points.
    fn linear_coefficient(g: &Expr) -> Result<Option<f64>> {
        let mut first = None;
        for x in linear_probe_points() {
            let r = g.eval(x, 0.0)? / x;
            match first {
                None => first = Some(r),
                Some(r0) => {
                    if (r - r0).abs() > LINEAR_PROBE_TOL * r0.abs().max(1.0) {
                        return Ok(None);
                    }
                }
            }
        }
        Ok(first)
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.form, Form::LinearG { .. })
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// Damping in working (normalized) coordinates.
    pub fn phi(&self) -> &Expr {
        &self.phi
    }

    /// Damping exactly as supplied by the caller.
    pub fn phi_source(&self) -> &Expr {
        &self.phi_source
    }

    pub fn g_expr(&self) -> &Expr {
        &self.g
    }

    /// `√k` for linear systems, 1 otherwise. A duration in working time
    /// divided by this is a duration in the caller's time.
    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    pub fn damping(&self, p: Point) -> Result<f64> {
        Ok(self.phi.eval(p[0], p[1])?)
    }

    pub fn damping_dual(&self, p: Point) -> Result<Dual2> {
        Ok(self.phi.eval_dual(p[0], p[1])?)
    }

    pub fn g_value(&self, x: f64) -> Result<f64> {
        match self.form {
            Form::LinearG { .. } => Ok(x),
            Form::NonlinearG => Ok(self.g.eval(x, 0.0)?),
        }
    }

    /// `g` on a dual argument (chain rule through whatever `x` is seeded with).
    pub fn g_dual(&self, x: Dual2) -> Result<Dual2> {
        match self.form {
            Form::LinearG { .. } => Ok(x),
            Form::NonlinearG => Ok(self.g.eval_with(x, Dual2::constant(0.0))?),
        }
    }

    pub fn g_prime(&self, x: f64) -> Result<f64> {
        Ok(self.g_dual(Dual2::var_x(x))?.dx)
    }

    /// `g'(0)`, positive for every constructed system.
    pub fn g_slope_at_origin(&self) -> f64 {
        self.g_slope0
    }

    pub fn vector_field(&self, p: Point) -> Result<Point> {
        let [x, y] = p;
        Ok([y, -self.g_value(x)? - y * self.damping(p)?])
    }

    fn require_linear(&self, what: &str) -> Result<()> {
        if self.is_linear() {
            Ok(())
        } else {
            Err(Error::Usage(format!(
                "{what} is defined for linear g only; transform the system first"
            )))
        }
    }

    pub fn a_field(&self, p: Point) -> Result<f64> {
        self.require_linear("A(x, y)")?;
        let [x, y] = p;
        Ok(y * y + x * x + x * y * self.damping(p)?)
    }

    pub fn nu_scalar(&self, p: Point) -> Result<NuScalar> {
        self.require_linear("the star-shapedness scalar")?;
        let d = self.damping_dual(p)?;
        let s = p[0] * d.dx + p[1] * d.dy;
        Ok(NuScalar {
            s,
            nu: -p[1] * p[1] * s,
        })
    }

    pub fn v(&self, p: Point) -> f64 {
        0.5 * (p[0] * p[0] + p[1] * p[1])
    }

    /// `∇V · f`.
    pub fn v_dot(&self, p: Point) -> Result<f64> {
        let f = self.vector_field(p)?;
        Ok(p[0] * f[0] + p[1] * f[1])
    }

    /// `G(x) = ∫₀ˣ g`.
    pub fn potential(&self, x: f64) -> Result<f64> {
        match &self.potential {
            None => Ok(0.5 * x * x),
            Some(table) => table.eval(|s| Ok(self.g.eval(s, 0.0)?), x),
        }
    }

    /// `E = G(x) + y²/2`.
    pub fn energy(&self, p: Point) -> Result<f64> {
        Ok(self.potential(p[0])? + 0.5 * p[1] * p[1])
    }

    /// `∇E · f = g(x)·ẋ + y·ẏ`.
    pub fn energy_dot(&self, p: Point) -> Result<f64> {
        let f = self.vector_field(p)?;
        Ok(self.g_value(p[0])? * f[0] + p[1] * f[1])
    }

    /// `α(x) = sign(x)·√(2G(x))`.
    pub fn alpha(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let big_g = self.potential(x)?;
        if big_g <= 0.0 {
            return Err(Error::Inadmissible {
                reason: format!("G(x) = {big_g} is not positive"),
                x,
            });
        }
        Ok((2.0 * big_g).sqrt().copysign(x))
    }

    /// `α'(x) = g(x)/α(x)`, `√g'(0)` at the origin.
    pub fn alpha_prime(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(self.g_slope0.sqrt());
        }
        Ok(self.g_value(x)? / self.alpha(x)?)
    }

    /// Inverse of [`PlanarSystem::alpha`] on the working window, by
    /// bracketed Newton iteration.
    pub fn beta(&self, u: f64) -> Result<f64> {
        if u == 0.0 {
            return Ok(0.0);
        }
        if self.is_linear() {
            return Ok(u);
        }
        let edge = self.window.x_max.copysign(u);
        let edge_alpha = self.alpha(edge)?;
        if u.abs() > edge_alpha.abs() {
            return Err(Error::WindowExceeded { u });
        }
        // bracket in |x|, working on the side of sign(u)
        let (mut lo, mut hi) = if u > 0.0 { (0.0, edge) } else { (edge, 0.0) };
        let mut x = (u / self.g_slope0.sqrt()).clamp(lo, hi);
        let target_tol = 1e-15 * (1.0 + u.abs());
        for _ in 0..200 {
            let r = self.alpha(x)? - u;
            if r.abs() <= target_tol {
                return Ok(x);
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let slope = self.alpha_prime(x)?;
            let mut next = x - r / slope;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-16 * (1.0 + x.abs()) || hi - lo <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
                x = next;
                break;
            }
            x = next;
        }
        let residual = (self.alpha(x)? - u).abs();
        if residual <= 1e-10 * (1.0 + u.abs()) {
            Ok(x)
        } else {
            Err(Error::NonConvergence { residual })
        }
    }

    /// The transformed system `u̇ = v, v̇ = -u - v·φ̃(u, v)`.
    pub fn transform(&self) -> TransformedSystem {
        TransformedSystem::new(self.clone())
    }

    pub fn scalar_field(&self, kind: ScalarFieldKind, p: Point) -> Result<f64> {
        match kind {
            ScalarFieldKind::A => self.a_field(p),
            ScalarFieldKind::NuScalar => Ok(self.nu_scalar(p)?.s),
            ScalarFieldKind::V => Ok(self.v(p)),
            ScalarFieldKind::VDot => self.v_dot(p),
            ScalarFieldKind::E => self.energy(p),
            ScalarFieldKind::EDot => self.energy_dot(p),
            ScalarFieldKind::PhiTilde => self.transform().phi_tilde(p[0], p[1]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn pedestrian() -> PlanarSystem {
        PlanarSystem::from_strings("eps*(x^2 + x*y + y^2 - 1)", "x", &params(&[("eps", 1.0)]), Window::default())
            .unwrap()
    }

    fn cubic_g(phi: &str) -> PlanarSystem {
        PlanarSystem::from_strings(phi, "x + x^3", &params(&[("eps", 1.0)]), Window::default()).unwrap()
    }

    #[test]
    fn detects_forms() {
        assert_eq!(pedestrian().form(), Form::LinearG { k: 1.0 });
        assert_eq!(cubic_g("1").form(), Form::NonlinearG);
        let k4 = PlanarSystem::from_strings("1", "4*x", &BTreeMap::new(), Window::default()).unwrap();
        assert_eq!(k4.form(), Form::LinearG { k: 4.0 });
        assert_eq!(k4.time_scale(), 2.0);
    }

    #[test]
    fn rejects_bad_g() {
        let e = PlanarSystem::from_strings("1", "x + y", &BTreeMap::new(), Window::default()).unwrap_err();
        assert_eq!(e, Error::GDependsOnY);
        let e = PlanarSystem::from_strings("1", "-x", &BTreeMap::new(), Window::default()).unwrap_err();
        assert!(matches!(e, Error::Inadmissible { .. }));
        let e = PlanarSystem::from_strings("1", "x^3", &BTreeMap::new(), Window::default()).unwrap_err();
        assert!(matches!(e, Error::Inadmissible { x, .. } if x == 0.0));
        let e = PlanarSystem::from_strings("1", "x - x^3/4", &BTreeMap::new(), Window::default()).unwrap_err();
        assert!(matches!(e, Error::Inadmissible { .. }));
    }

    #[test]
    fn rescaled_linear_system_has_unit_frequency() {
        // ẍ + ẋ·(y) + 4x = 0 → φ̂(x, y) = φ(x, 2y)/2 = y
        let sys = PlanarSystem::from_strings("y", "4*x", &BTreeMap::new(), Window::default()).unwrap();
        assert_eq!(sys.damping([0.3, 1.5]).unwrap(), 1.5);
        assert_eq!(sys.vector_field([1.0, 0.0]).unwrap(), [0.0, -1.0]);
    }

    #[test]
    fn vector_field_examples() {
        let sys = pedestrian();
        assert_eq!(sys.vector_field([1.0, 0.0]).unwrap(), [0.0, -1.0]);
        assert_eq!(sys.vector_field([0.0, 0.0]).unwrap(), [0.0, 0.0]);
        assert_eq!(sys.vector_field([0.0, 1.0]).unwrap(), [1.0, 0.0]);
        assert_eq!(cubic_g("eps*(x^2 + x*y + y^2 - 1)").vector_field([0.0, 0.0]).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn a_field_examples() {
        let sys = pedestrian();
        assert_eq!(sys.a_field([0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(sys.a_field([0.0, 1.0]).unwrap(), 1.0);
        // ray θ = 3π/4: A = 3t²/2 − t⁴/4
        let (s, c) = (3.0 * std::f64::consts::FRAC_PI_4).sin_cos();
        for &t in &[0.5, 1.0, 2.0, 3.0] {
            let a = sys.a_field([t * c, t * s]).unwrap();
            let closed = 1.5 * t * t - t.powi(4) / 4.0;
            assert!((a - closed).abs() < 1e-12, "t={t}");
        }
        let root = 6f64.sqrt();
        assert!(sys.a_field([root * c, root * s]).unwrap().abs() < 1e-12);
        // bisection on the sampled field agrees with √6
        let (mut lo, mut hi) = (1.0, 4.0);
        for _ in 0..60 {
            let m = 0.5 * (lo + hi);
            if sys.a_field([m * c, m * s]).unwrap() > 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        assert!((lo - root).abs() < 1e-12);
    }

    #[test]
    fn a_field_rejects_nonlinear() {
        assert!(matches!(cubic_g("1").a_field([1.0, 1.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn a_field_positive_on_axes() {
        let sys = pedestrian();
        for &t in &[-3.0, -0.1, 0.2, 5.0] {
            assert_eq!(sys.a_field([t, 0.0]).unwrap(), t * t);
            assert_eq!(sys.a_field([0.0, t]).unwrap(), t * t);
        }
    }

    #[test]
    fn nu_scalar_examples() {
        let n = pedestrian().nu_scalar([1.0, 1.0]).unwrap();
        assert_eq!(n.s, 6.0);
        assert_eq!(n.nu, -6.0);
        assert_eq!(pedestrian().nu_scalar([0.0, 0.0]).unwrap().s, 0.0);
        let h2 = PlanarSystem::from_strings("-M + (x^2 + x*y + y^2)", "x", &params(&[("M", 1.0)]), Window::default())
            .unwrap();
        assert_eq!(h2.nu_scalar([1.0, 0.0]).unwrap().s, 2.0);
    }

    #[test]
    fn potential_examples() {
        assert_eq!(pedestrian().potential(2.0).unwrap(), 2.0);
        let sys = cubic_g("1");
        assert!((sys.potential(1.0).unwrap() - 0.75).abs() < 1e-12);
        assert!(sys.potential(0.5).unwrap() > 0.0);
        assert!(sys.potential(-0.5).unwrap() > 0.0);
        assert_eq!(sys.potential(0.0).unwrap(), 0.0);
    }

    #[test]
    fn alpha_beta() {
        let sys = cubic_g("1");
        assert!((sys.alpha(1.0).unwrap() - 1.5f64.sqrt()).abs() < 1e-12);
        for i in -20..=20 {
            let x = i as f64 / 10.0;
            let back = sys.beta(sys.alpha(x).unwrap()).unwrap();
            assert!((back - x).abs() <= 1e-9 * x.abs().max(1.0), "x={x}");
        }
        assert!(sys.alpha_prime(0.0).unwrap() == 1.0);
        assert!(matches!(sys.beta(1e4), Err(Error::WindowExceeded { .. })));

        let id = PlanarSystem::new_nonlinear(
            Expr::parse("1", &BTreeMap::new()).unwrap(),
            Expr::parse("x", &BTreeMap::new()).unwrap(),
            Window::default(),
        )
        .unwrap();
        for i in -50..=50 {
            let x = i as f64 / 10.0;
            assert!((id.alpha(x).unwrap() - x).abs() <= 1e-12);
            assert!((id.beta(x).unwrap() - x).abs() <= 1e-12);
        }
    }

    #[test]
    fn scalar_fields_vanish_at_origin() {
        let sys = pedestrian();
        for kind in [ScalarFieldKind::A, ScalarFieldKind::V, ScalarFieldKind::E] {
            assert_eq!(sys.scalar_field(kind, [0.0, 0.0]).unwrap(), 0.0);
        }
        assert_eq!(cubic_g("1").energy([0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn lyapunov_derivatives_match_closed_forms() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let sys = pedestrian();
        let cubic = cubic_g("eps*(x^2 + x*y + y^2 - 1)");
        for _ in 0..100 {
            let p = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let vd = sys.v_dot(p).unwrap();
            let closed = -p[1] * p[1] * sys.damping(p).unwrap();
            assert!((vd - closed).abs() <= 1e-12 * (1.0 + closed.abs()));
            let ed = cubic.energy_dot(p).unwrap();
            let closed = -p[1] * p[1] * cubic.damping(p).unwrap();
            assert!((ed - closed).abs() <= 1e-12 * (1.0 + closed.abs()));
        }
    }
}
