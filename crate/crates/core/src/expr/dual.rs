//! First-order forward-mode dual numbers in two seed directions.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// A value together with its partial derivatives along two seed directions.
///
/// When seeded with [`Dual2::var_x`] / [`Dual2::var_y`] the slots are
/// ∂/∂x and ∂/∂y. Callers that chain through a change of variables seed
/// the slots with whatever the outer coordinates are.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual2 {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Dual2 {
    pub const fn new(value: f64, dx: f64, dy: f64) -> Self {
        Self { value, dx, dy }
    }

    pub const fn constant(value: f64) -> Self {
        Self::new(value, 0.0, 0.0)
    }

    pub const fn var_x(value: f64) -> Self {
        Self::new(value, 1.0, 0.0)
    }

    pub const fn var_y(value: f64) -> Self {
        Self::new(value, 0.0, 1.0)
    }

    /// Applies a scalar function with known derivative `slope` at `self.value`.
    #[inline]
    fn chain(self, value: f64, slope: f64) -> Self {
        Self::new(value, slope * self.dx, slope * self.dy)
    }

    fn has_tangent(&self) -> bool {
        self.dx != 0.0 || self.dy != 0.0
    }
}

impl Add for Dual2 {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.dx + rhs.dx, self.dy + rhs.dy)
    }
}

impl Sub for Dual2 {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value, self.dx - rhs.dx, self.dy - rhs.dy)
    }
}

impl Mul for Dual2 {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.value * rhs.value,
            self.dx * rhs.value + self.value * rhs.dx,
            self.dy * rhs.value + self.value * rhs.dy,
        )
    }
}

impl Div for Dual2 {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.value;
        let q = self.value * inv;
        Self::new(q, (self.dx - q * rhs.dx) * inv, (self.dy - q * rhs.dy) * inv)
    }
}

impl Neg for Dual2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.value, -self.dx, -self.dy)
    }
}

/// Arithmetic needed by the expression evaluator, implemented for plain
/// `f64` and for [`Dual2`].
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn value(&self) -> f64;
    fn powi(self, n: u32) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    /// Caller guarantees `value() >= 0`.
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    /// True when `sqrt` at a zero argument would produce an infinite derivative.
    fn sqrt_singular(&self) -> bool;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn powi(self, n: u32) -> Self {
        // exponents are bounded by the parser
        f64::powi(self, n as i32)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt_singular(&self) -> bool {
        false
    }
}

impl Scalar for Dual2 {
    fn from_f64(v: f64) -> Self {
        Self::constant(v)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn powi(self, n: u32) -> Self {
        match n {
            0 => Self::constant(1.0),
            _ => {
                let lower = f64::powi(self.value, n as i32 - 1);
                self.chain(lower * self.value, n as f64 * lower)
            }
        }
    }
    fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c)
    }
    fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s)
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }
    fn sqrt(self) -> Self {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r)
    }
    fn abs(self) -> Self {
        // subgradient 0 at the kink
        let slope = if self.value > 0.0 {
            1.0
        } else if self.value < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(self.value.abs(), slope)
    }
    fn sqrt_singular(&self) -> bool {
        self.value == 0.0 && self.has_tangent()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let x = Dual2::var_x(3.0);
        let y = Dual2::var_y(-2.0);
        let p = x * y;
        assert_eq!(p, Dual2::new(-6.0, -2.0, 3.0));
    }

    #[test]
    fn quotient_rule() {
        let x = Dual2::var_x(1.0);
        let y = Dual2::var_y(2.0);
        let q = x / y;
        assert_eq!(q.value, 0.5);
        assert_eq!(q.dx, 0.5);
        assert_eq!(q.dy, -0.25);
    }

    #[test]
    fn powi_matches_repeated_product() {
        let x = Dual2::new(1.7, 0.3, -1.1);
        let p = x.powi(3);
        let q = x * x * x;
        assert!((p.value - q.value).abs() < 1e-14);
        assert!((p.dx - q.dx).abs() < 1e-14);
        assert!((p.dy - q.dy).abs() < 1e-14);
        assert_eq!(x.powi(0), Dual2::constant(1.0));
    }

    #[test]
    fn sqrt_at_zero_is_flagged_only_with_tangent() {
        assert!(Dual2::var_x(0.0).sqrt_singular());
        assert!(!Dual2::constant(0.0).sqrt_singular());
    }
}
