//! Truncated second-order Taylor arithmetic in up to four variables.
//!
//! A [`Jet`] carries a value, its gradient and its Hessian. Closed-form
//! exact solutions, coefficient fields and boundary liftings are written
//! once against the [`Scalar`] trait and evaluated either on plain `f64`
//! or on jets when exact input derivatives are needed.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub const MAX_VARS: usize = 4;

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn constant(value: f64) -> Self;
    fn value(&self) -> f64;
    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value()`.
    fn apply(self, f: (f64, f64, f64)) -> Self;

    fn exp(self) -> Self {
        let e = self.value().exp();
        self.apply((e, e, e))
    }
    fn sin(self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.apply((s, c, -s))
    }
    fn cos(self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.apply((c, -s, -c))
    }
    fn sqrt(self) -> Self {
        let r = self.value().sqrt();
        self.apply((r, 0.5 / r, -0.25 / (r * r * r)))
    }
    fn recip(self) -> Self {
        let v = self.value();
        self.apply((1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)))
    }
}

impl Scalar for f64 {
    fn constant(value: f64) -> Self {
        value
    }
    fn value(&self) -> f64 {
        *self
    }
    fn apply(self, f: (f64, f64, f64)) -> Self {
        f.0
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; MAX_VARS],
    pub hess: [[f64; MAX_VARS]; MAX_VARS],
}

impl Jet {
    pub const fn constant(value: f64) -> Self {
        Self {
            value,
            grad: [0.0; MAX_VARS],
            hess: [[0.0; MAX_VARS]; MAX_VARS],
        }
    }

    /// The independent variable `index` evaluated at `value`.
    pub fn variable(value: f64, index: usize) -> Self {
        let mut jet = Self::constant(value);
        jet.grad[index] = 1.0;
        jet
    }

    /// Independent variables at `point`, one per coordinate.
    pub fn variables(point: &[f64]) -> Vec<Jet> {
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| Self::variable(v, i))
            .collect()
    }

    /// Mixed partial for a derivative-order list of total order ≤ 2.
    pub fn partial(&self, orders: &[usize]) -> Option<f64> {
        let mut axes = Vec::with_capacity(2);
        for (axis, &k) in orders.iter().enumerate() {
            for _ in 0..k {
                axes.push(axis);
            }
        }
        match axes.as_slice() {
            [] => Some(self.value),
            [a] => Some(self.grad[*a]),
            [a, b] => Some(self.hess[*a][*b]),
            _ => None,
        }
    }

    fn zip(self, other: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::constant(f(self.value, other.value));
        for i in 0..MAX_VARS {
            out.grad[i] = f(self.grad[i], other.grad[i]);
            for j in 0..MAX_VARS {
                out.hess[i][j] = f(self.hess[i][j], other.hess[i][j]);
            }
        }
        out
    }

    fn scale(mut self, s: f64) -> Self {
        self.value *= s;
        for i in 0..MAX_VARS {
            self.grad[i] *= s;
            for j in 0..MAX_VARS {
                self.hess[i][j] *= s;
            }
        }
        self
    }
}

impl Scalar for Jet {
    fn constant(value: f64) -> Self {
        Jet::constant(value)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn apply(self, (f0, f1, f2): (f64, f64, f64)) -> Self {
        let mut out = Self::constant(f0);
        for i in 0..MAX_VARS {
            out.grad[i] = f1 * self.grad[i];
            for j in 0..MAX_VARS {
                out.hess[i][j] = f1 * self.hess[i][j] + f2 * self.grad[i] * self.grad[j];
            }
        }
        out
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut out = Self::constant(self.value * rhs.value);
        for i in 0..MAX_VARS {
            out.grad[i] = self.grad[i] * rhs.value + self.value * rhs.grad[i];
            for j in 0..MAX_VARS {
                out.hess[i][j] = self.hess[i][j] * rhs.value
                    + self.value * rhs.hess[i][j]
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i];
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.value += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.value -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample<S: Scalar>(x: S, y: S) -> S {
        (x * y).exp() * (y * 3.0).sin() / (x * x + 2.0)
    }

    #[test]
    fn matches_finite_differences() {
        let (x0, y0) = (0.3, -0.7);
        let v = Jet::variables(&[x0, y0]);
        let jet = sample(v[0], v[1]);
        let f = |x: f64, y: f64| sample(x, y);
        let h = 1e-4;
        assert_relative_eq!(jet.value, f(x0, y0), epsilon = 1e-15);
        let fx = (f(x0 + h, y0) - f(x0 - h, y0)) / (2.0 * h);
        let fy = (f(x0, y0 + h) - f(x0, y0 - h)) / (2.0 * h);
        let fxx = (f(x0 + h, y0) - 2.0 * f(x0, y0) + f(x0 - h, y0)) / (h * h);
        let fxy = (f(x0 + h, y0 + h) - f(x0 + h, y0 - h) - f(x0 - h, y0 + h) + f(x0 - h, y0 - h))
            / (4.0 * h * h);
        assert_relative_eq!(jet.grad[0], fx, epsilon = 1e-7);
        assert_relative_eq!(jet.grad[1], fy, epsilon = 1e-7);
        assert_relative_eq!(jet.hess[0][0], fxx, epsilon = 1e-5);
        assert_relative_eq!(jet.hess[0][1], fxy, epsilon = 1e-5);
        assert_eq!(jet.hess[0][1], jet.hess[1][0]);
        assert_eq!(jet.partial(&[1, 1]), Some(jet.hess[0][1]));
        assert_eq!(jet.partial(&[2, 1]), None);
    }

    #[test]
    fn sqrt_and_cos() {
        let x = Jet::variable(4.0, 0);
        let r = x.sqrt();
        assert_relative_eq!(r.grad[0], 0.25);
        assert_relative_eq!(r.hess[0][0], -1.0 / 32.0);
        let c = Jet::variable(0.0, 0).cos();
        assert_eq!(c.value, 1.0);
        assert_eq!(c.hess[0][0], -1.0);
    }
}
