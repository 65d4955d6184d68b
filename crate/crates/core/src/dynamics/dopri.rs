//! Dormand–Prince 5(4) stepper with the standard continuous extension.

use super::{Tolerance, VectorField};
use crate::error::{Error, Result};
use crate::model::Point;


const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MAX_SHRINK: f64 = 5.0;
const MAX_GROWTH: f64 = 10.0;

#[inline]
fn axpy(y: Point, terms: &[(f64, &Point)], h: f64) -> Point {
    let mut out = y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// One accepted step together with its dense-output coefficients.
#[derive(Debug, Clone, Copy)]
pub struct Step {
    pub t0: f64,
    pub h: f64,
    pub y0: Point,
    pub y1: Point,
    cont: [Point; 5],
}

impl Step {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Interpolated state at fraction `theta ∈ [0, 1]` of the step.
    pub fn at_fraction(&self, theta: f64) -> Point {
        let t1 = 1.0 - theta;
        let c = &self.cont;
        let mut out = [0.0; 2];
        for i in 0..2 {
            out[i] = c[0][i] + theta * (c[1][i] + t1 * (c[2][i] + theta * (c[3][i] + t1 * c[4][i])));
        }
        out
    }

    pub fn at(&self, t: f64) -> Point {
        self.at_fraction((t - self.t0) / self.h)
    }
}

pub struct Stepper<'a, F: VectorField + ?Sized> {
    field: &'a F,
    tol: Tolerance,
    h_max: f64,
    t: f64,
    y: Point,
    k1: Point,
    h: f64,
}

impl<'a, F: VectorField + ?Sized> Stepper<'a, F> {
    pub fn new(field: &'a F, y0: Point, tol: Tolerance, h_max: f64) -> Result<Self> {
        let k1 = field.velocity(y0)?;
        let h = initial_step(field, y0, k1, tol, h_max)?;
        Ok(Self {
            field,
            tol,
            h_max,
            t: 0.0,
            y: y0,
            k1,
            h,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> Point {
        self.y
    }

    fn scaled_error(&self, y0: Point, y1: Point, err: Point) -> f64 {
        let mut acc = 0.0;
        for i in 0..2 {
            let sk = self.tol.abs + self.tol.rel * y0[i].abs().max(y1[i].abs());
            acc += (err[i] / sk).powi(2);
        }
        (acc / 2.0).sqrt()
    }

    /// Advances by one accepted step, never past `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<Step> {
        let f = self.field;
        loop {
            let mut h = self.h.min(self.h_max);
            let last = self.t + h >= t_limit;
            if last {
                h = t_limit - self.t;
            }
            if h <= 1e-14 * (1.0 + self.t.abs()) {
                return Err(Error::StepUnderflow {
                    t: self.t,
                    x: self.y[0],
                    y: self.y[1],
                });
            }
            let y = self.y;
            let k1 = self.k1;
            let k2 = f.velocity(axpy(y, &[(A21, &k1)], h))?;
            let k3 = f.velocity(axpy(y, &[(A31, &k1), (A32, &k2)], h))?;
            let k4 = f.velocity(axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h))?;
            let k5 = f.velocity(axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h))?;
            let k6 = f.velocity(axpy(
                y,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                h,
            ))?;
            let y1 = axpy(
                y,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
                h,
            );
            let k7 = f.velocity(y1)?;
            let err_vec = axpy(
                [0.0; 2],
                &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
                h,
            );
            let err = self.scaled_error(y, y1, err_vec);
            let fac = (err.powf(0.2) / SAFETY).clamp(1.0 / MAX_GROWTH, MAX_SHRINK);
            if err <= 1.0 {
                let dy = [y1[0] - y[0], y1[1] - y[1]];
                let bspl = [h * k1[0] - dy[0], h * k1[1] - dy[1]];
                let c3 = [dy[0] - h * k7[0] - bspl[0], dy[1] - h * k7[1] - bspl[1]];
                let c4 = axpy(
                    [0.0; 2],
                    &[(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)],
                    h,
                );
                let step = Step {
                    t0: self.t,
                    h,
                    y0: y,
                    y1,
                    cont: [y, dy, bspl, c3, c4],
                };
                self.t = if last { t_limit } else { self.t + h };
                self.y = y1;
                self.k1 = k7;
                // keep the pre-truncation size when the step was shortened to land on t_limit
                let h_next = h / fac;
                if !last || h_next > self.h {
                    self.h = h_next;
                }
                return Ok(step);
            }
            self.h = h / (err.powf(0.2) / SAFETY).min(MAX_SHRINK);
        }
    }
}

fn initial_step<F: VectorField + ?Sized>(field: &F, y0: Point, f0: Point, tol: Tolerance, h_max: f64) -> Result<f64> {
    let norm = |v: Point| {
        let mut acc = 0.0;
        for i in 0..2 {
            let sk = tol.abs + tol.rel * y0[i].abs();
            acc += (v[i] / sk).powi(2);
        }
        (acc / 2.0).sqrt()
    };
    let d0 = norm(y0);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(h_max);
    let y1 = axpy(y0, &[(1.0, &f0)], h0);
    let f1 = field.velocity(y1)?;
    let d2 = norm([f1[0] - f0[0], f1[1] - f0[1]]) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (1e-6f64).max(h0 * 1e-3)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(h_max))
}
