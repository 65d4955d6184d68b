//! Conti–Filippov reduction `(u, v) = (α(x), y)`.
//!
//! After multiplying the transformed field by `u/g(β(u)) > 0` the system
//! becomes `u̇ = v, v̇ = -u - v·φ̃(u, v)` with
//! `φ̃(u, v) = u·Φ(β(u), v)/g(β(u))`, which has the orbits of the original
//! system mapped by `Λ`.

use super::{PlanarSystem, Point};
use crate::error::{Error, Result};
use crate::expr::Dual2;

#[derive(Debug, Clone)]
pub struct TransformedSystem {
    base: PlanarSystem,
    slope0: f64,
}

impl TransformedSystem {
    pub(super) fn new(base: PlanarSystem) -> Self {
        let slope0 = base.g_slope_at_origin().sqrt();
        Self { base, slope0 }
    }

    pub fn base(&self) -> &PlanarSystem {
        &self.base
    }

    pub fn alpha(&self, x: f64) -> Result<f64> {
        self.base.alpha(x)
    }

    pub fn beta(&self, u: f64) -> Result<f64> {
        self.base.beta(u)
    }

    /// `Λ(x, y) = (α(x), y)`.
    pub fn to_transformed(&self, p: Point) -> Result<Point> {
        Ok([self.alpha(p[0])?, p[1]])
    }

    pub fn to_original(&self, q: Point) -> Result<Point> {
        Ok([self.beta(q[0])?, q[1]])
    }

    /// `φ̃(u, v)`; at `u = 0` the continuous extension `Φ(0, v)/√g'(0)`.
    pub fn phi_tilde(&self, u: f64, v: f64) -> Result<f64> {
        if u == 0.0 {
            return Ok(self.base.damping([0.0, v])? / self.slope0);
        }
        let x = self.beta(u)?;
        Ok(u * self.base.damping([x, v])? / self.base.g_value(x)?)
    }

    /// `φ̃` with partials in `(u, v)`, chaining through `β'(u) = u/g(β(u))`.
    /// Defined for `u ≠ 0`.
    pub fn phi_tilde_dual(&self, u: f64, v: f64) -> Result<Dual2> {
        if u == 0.0 {
            return Err(Error::Usage("φ̃ partials are taken off the v-axis only".into()));
        }
        let x = self.beta(u)?;
        let beta_prime = u / self.base.g_value(x)?;
        let xd = Dual2::new(x, beta_prime, 0.0);
        let vd = Dual2::var_y(v);
        let ud = Dual2::var_x(u);
        let phi = self.base.phi().eval_with(xd, vd)?;
        let g = self.base.g_dual(xd)?;
        Ok(ud * phi / g)
    }

    pub fn vector_field(&self, q: Point) -> Result<Point> {
        let [u, v] = q;
        Ok([v, -u - v * self.phi_tilde(u, v)?])
    }

    /// Star-shapedness scalar of the transformed damping,
    /// `u·φ̃_u + v·φ̃_v`, computed on the `(u, v)` side with dual numbers.
    pub fn star_scalar(&self, u: f64, v: f64) -> Result<f64> {
        if u == 0.0 {
            let d = self.base.damping_dual([0.0, v])?;
            return Ok(v * d.dy / self.slope0);
        }
        let d = self.phi_tilde_dual(u, v)?;
        Ok(u * d.dx + v * d.dy)
    }

    /// `u·φ̃_u + v·Φ_v(β(u), v)` on the `(u, v)` side. This is the
    /// left-hand side the closed form of [`Self::displayed_condition`]
    /// simplifies; note that its second term lacks the factor `u/g(β(u))`
    /// carried by `v·φ̃_v`.
    pub fn displayed_condition_uv(&self, u: f64, v: f64) -> Result<f64> {
        if u == 0.0 {
            let d = self.base.damping_dual([0.0, v])?;
            return Ok(v * d.dy);
        }
        let d = self.phi_tilde_dual(u, v)?;
        let x = self.beta(u)?;
        let phi = self.base.damping_dual([x, v])?;
        Ok(u * d.dx + v * phi.dy)
    }

    /// Pieces shared by the two x-side closed forms:
    /// `(σ√(2G)/g, Φ + 2G·(Φₓg − Φg')/g², y·Φ_y)`.
    fn x_side_terms(&self, p: Point) -> Result<(f64, f64, f64)> {
        let [x, y] = p;
        let phi = self.base.damping_dual(p)?;
        let g = self.base.g_value(x)?;
        let gp = self.base.g_prime(x)?;
        let two_big_g = 2.0 * self.base.potential(x)?;
        let factor = two_big_g.sqrt().copysign(x) / g;
        let bracket = phi.value + two_big_g * (phi.dx * g - phi.value * gp) / (g * g);
        Ok((factor, bracket, y * phi.dy))
    }

    /// Star-shapedness scalar of `φ̃` expressed in the original
    /// coordinates: `σ√(2G)/g · [2G(Φₓg − Φg')/g² + Φ + yΦ_y]`, with the
    /// value `yΦ_y(0, y)/√g'(0)` on `x = 0`. Agrees with
    /// [`Self::star_scalar`] at `(α(x), y)`.
    pub fn nu_scalar_xy(&self, p: Point) -> Result<f64> {
        if p[0] == 0.0 {
            let d = self.base.damping_dual(p)?;
            return Ok(p[1] * d.dy / self.slope0);
        }
        let (factor, bracket, radial_y) = self.x_side_terms(p)?;
        Ok(factor * (bracket + radial_y))
    }

    /// Uniqueness condition in its published closed form,
    /// `σ√(2G)/g · [2G(Φₓg − Φg')/g² + Φ] + yΦ_y`, with `yΦ_y(0, y)` on
    /// `x = 0`. For `g(x) = x` it reduces to `xΦₓ + yΦ_y`.
    pub fn displayed_condition(&self, p: Point) -> Result<f64> {
        if p[0] == 0.0 {
            let d = self.base.damping_dual(p)?;
            return Ok(p[1] * d.dy);
        }
        let (factor, bracket, radial_y) = self.x_side_terms(p)?;
        Ok(factor * bracket + radial_y)
    }
}
