//! Maps between the reference cube `[-1, 1]^d` and physical domains.
//!
//! Polar-type domains `f_1(θ) ≤ r ≤ f_2(θ)` use the parameter layout
//! `(z, t[, ẑ])`: `z` is the stretched radius
//! `z = 2 (r − f_1) / (f_2 − f_1) − 1`, the angle is `θ = (t + 1)π`, and the
//! cylinder shell carries its height `ẑ` unchanged as the third coordinate.

use std::f64::consts::PI;

use crate::error::{CsnnError, Result};
use crate::jet::Scalar;

const CUBE_TOLERANCE: f64 = 1e-12;
const SINGULAR_TOLERANCE: f64 = 1e-14;

/// Radial bound `f(θ)` of a polar domain.
#[derive(Debug, Clone, Copy)]
pub enum RadialProfile {
    Constant(f64),
    /// Returns `(f, f', f'')` at `θ`.
    Function(fn(f64) -> (f64, f64, f64)),
}

impl RadialProfile {
    pub fn eval(&self, theta: f64) -> (f64, f64, f64) {
        match self {
            RadialProfile::Constant(c) => (*c, 0.0, 0.0),
            RadialProfile::Function(f) => f(theta),
        }
    }

    fn eval_scalar<S: Scalar>(&self, theta: S) -> S {
        match self {
            RadialProfile::Constant(c) => S::constant(*c),
            RadialProfile::Function(f) => theta.apply(f(theta.value())),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, RadialProfile::Constant(_))
    }
}

impl PartialEq for RadialProfile {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (RadialProfile::Constant(a), RadialProfile::Constant(b)) => a == b,
            (RadialProfile::Function(a), RadialProfile::Function(b)) => std::ptr::fn_addr_eq(*a, *b),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    IdentityRect,
    Annulus,
    Disk,
    CylinderShell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainMap {
    kind: DomainKind,
    dims: usize,
    inner: RadialProfile,
    outer: RadialProfile,
}

/// Multipliers relating polar derivatives to parameter derivatives:
///
/// ```text
/// ∂u/∂r|_θ = radial_scale · ∂u/∂z|_θ
/// ∂u/∂θ|_r = ∂u/∂θ|_z − theta_coupling · ∂u/∂z|_θ
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarFactors {
    pub radius: f64,
    pub theta: f64,
    pub radial_scale: f64,
    pub theta_coupling: f64,
}

impl DomainMap {
    pub fn identity(dims: usize) -> Self {
        Self {
            kind: DomainKind::IdentityRect,
            dims,
            inner: RadialProfile::Constant(0.0),
            outer: RadialProfile::Constant(0.0),
        }
    }

    pub fn annulus(inner: f64, outer: f64) -> Result<Self> {
        Self::polar(DomainKind::Annulus, RadialProfile::Constant(inner), RadialProfile::Constant(outer))
    }

    pub fn annulus_with_profiles(inner: RadialProfile, outer: RadialProfile) -> Result<Self> {
        Self::polar(DomainKind::Annulus, inner, outer)
    }

    pub fn disk(radius: f64) -> Result<Self> {
        Self::polar(DomainKind::Disk, RadialProfile::Constant(0.0), RadialProfile::Constant(radius))
    }

    pub fn cylinder_shell(inner: f64, outer: f64) -> Result<Self> {
        Self::polar(
            DomainKind::CylinderShell,
            RadialProfile::Constant(inner),
            RadialProfile::Constant(outer),
        )
    }

    fn polar(kind: DomainKind, inner: RadialProfile, outer: RadialProfile) -> Result<Self> {
        let dims = if kind == DomainKind::CylinderShell { 3 } else { 2 };
        // sample the profiles once around the circle
        for i in 0..64 {
            let theta = 2.0 * PI * i as f64 / 64.0;
            let (f1, _, _) = inner.eval(theta);
            let (f2, _, _) = outer.eval(theta);
            if kind == DomainKind::Disk && f1 != 0.0 {
                return Err(CsnnError::Singular("disk inner profile must vanish".into()));
            }
            if !(f1 >= 0.0 && f2 > f1) {
                return Err(CsnnError::Singular(format!(
                    "radial profiles must satisfy 0 <= f1 < f2 (f1 = {f1}, f2 = {f2} at θ = {theta})"
                )));
            }
        }
        Ok(Self {
            kind,
            dims,
            inner,
            outer,
        })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn is_polar(&self) -> bool {
        self.kind != DomainKind::IdentityRect
    }

    pub fn has_constant_profiles(&self) -> bool {
        self.inner.is_constant() && self.outer.is_constant()
    }

    pub fn profiles(&self, theta: f64) -> ((f64, f64, f64), (f64, f64, f64)) {
        (self.inner.eval(theta), self.outer.eval(theta))
    }

    /// Index of the periodic parameter axis, if any.
    pub fn periodic_axis(&self) -> Option<usize> {
        self.is_polar().then_some(1)
    }

    /// `θ = (t + 1)π`.
    pub fn angle(t: f64) -> f64 {
        (t + 1.0) * PI
    }

    pub fn stretch_z(&self, r: f64, theta: f64) -> Result<f64> {
        let ((f1, _, _), (f2, _, _)) = self.profiles(theta);
        if !(r >= f1 - CUBE_TOLERANCE && r <= f2 + CUBE_TOLERANCE) {
            return Err(CsnnError::RadiusOutOfRange { r, inner: f1, outer: f2 });
        }
        Ok((2.0 * (r - f1) / (f2 - f1) - 1.0).clamp(-1.0, 1.0))
    }

    /// Inverse of [`DomainMap::stretch_z`].
    pub fn radius(&self, z: f64, theta: f64) -> f64 {
        let ((f1, _, _), (f2, _, _)) = self.profiles(theta);
        f1 + 0.5 * (z + 1.0) * (f2 - f1)
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dims {
            return Err(CsnnError::DimensionMismatch {
                expected: self.dims,
                got: p.len(),
            });
        }
        if let Some(v) = p.iter().find(|v| !(v.abs() <= 1.0 + CUBE_TOLERANCE)) {
            return Err(CsnnError::Domain { value: *v });
        }
        Ok(())
    }

    /// Cartesian coordinates of the reference point `p`.
    pub fn param_to_physical(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_point(p)?;
        Ok(self.map_point(p))
    }

    /// Unchecked map, generic so that jets can be pushed through it.
    pub fn map_point<S: Scalar>(&self, p: &[S]) -> Vec<S> {
        match self.kind {
            DomainKind::IdentityRect => p.to_vec(),
            _ => {
                let theta = (p[1] + 1.0) * PI;
                let f1 = self.inner.eval_scalar(theta);
                let f2 = self.outer.eval_scalar(theta);
                let r = f1 + (p[0] + 1.0) * (f2 - f1) * 0.5;
                let mut q = vec![r * theta.cos(), r * theta.sin()];
                if self.kind == DomainKind::CylinderShell {
                    q.push(p[2]);
                }
                q
            }
        }
    }

    /// Reference coordinates of the physical point `q`; angles land in `t ∈ [−1, 1)`.
    pub fn physical_to_param(&self, q: &[f64]) -> Result<Vec<f64>> {
        if q.len() != self.dims {
            return Err(CsnnError::DimensionMismatch {
                expected: self.dims,
                got: q.len(),
            });
        }
        match self.kind {
            DomainKind::IdentityRect => {
                self.check_point(q)?;
                Ok(q.to_vec())
            }
            _ => {
                let r = q[0].hypot(q[1]);
                let mut theta = if r == 0.0 { 0.0 } else { q[1].atan2(q[0]) };
                if theta < 0.0 {
                    theta += 2.0 * PI;
                }
                let mut t = theta / PI - 1.0;
                if t >= 1.0 {
                    t -= 2.0;
                }
                let z = self.stretch_z(r, theta)?;
                let mut p = vec![z, t];
                if self.kind == DomainKind::CylinderShell {
                    if q[2].abs() > 1.0 + CUBE_TOLERANCE {
                        return Err(CsnnError::Domain { value: q[2] });
                    }
                    p.push(q[2]);
                }
                Ok(p)
            }
        }
    }

    pub fn polar_factors(&self, p: &[f64]) -> Result<PolarFactors> {
        self.check_point(p)?;
        if !self.is_polar() {
            return Err(CsnnError::Singular("rectangular map has no polar factors".into()));
        }
        let z = p[0];
        let theta = Self::angle(p[1]);
        let ((f1, d1, _), (f2, d2, _)) = self.profiles(theta);
        let width = f2 - f1;
        if width < SINGULAR_TOLERANCE {
            return Err(CsnnError::Singular(format!("radial width {width:e} at θ = {theta}")));
        }
        let radius = f1 + 0.5 * (z + 1.0) * width;
        if self.kind == DomainKind::Disk && radius < SINGULAR_TOLERANCE {
            return Err(CsnnError::Singular(format!("physical radius {radius:e} at the disk center")));
        }
        Ok(PolarFactors {
            radius,
            theta,
            radial_scale: 2.0 / width,
            theta_coupling: (z * (d2 - d1) + (d2 + d1)) / width,
        })
    }
}

pub fn stretch_z(r: f64, theta: f64, map: &DomainMap) -> Result<f64> {
    map.stretch_z(r, theta)
}

pub fn param_to_physical(map: &DomainMap, p: &[f64]) -> Result<Vec<f64>> {
    map.param_to_physical(p)
}

pub fn polar_derivative_factors(map: &DomainMap, p: &[f64]) -> Result<PolarFactors> {
    map.polar_factors(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn stretch_examples() {
        let annulus = DomainMap::annulus(0.5, 1.0).unwrap();
        assert_relative_eq!(stretch_z(0.75, 0.3, &annulus).unwrap(), 0.0);
        assert_eq!(annulus.stretch_z(0.5, 1.0).unwrap(), -1.0);
        assert_eq!(annulus.stretch_z(1.0, 1.0).unwrap(), 1.0);
        let disk = DomainMap::disk(1.0).unwrap();
        assert_relative_eq!(disk.stretch_z(0.25, 2.0).unwrap(), -0.5);
        assert!(matches!(
            annulus.stretch_z(0.2, 0.0),
            Err(CsnnError::RadiusOutOfRange { .. })
        ));
    }

    #[test]
    fn map_examples() {
        let annulus = DomainMap::annulus(0.5, 1.0).unwrap();
        let q = param_to_physical(&annulus, &[1.0, -1.0]).unwrap();
        assert_relative_eq!(q[0], 1.0);
        assert_relative_eq!(q[1], 0.0);
        let q = annulus.param_to_physical(&[-1.0, 0.0]).unwrap();
        assert_relative_eq!(q[0], -0.5);
        assert!(q[1].abs() < 1e-15);
        // matches the explicit (s + 3)/4 form of the annulus map
        let (s, t) = (0.3f64, -0.45f64);
        let q = annulus.param_to_physical(&[s, t]).unwrap();
        assert_relative_eq!(q[0], (s + 3.0) / 4.0 * ((t + 1.0) * PI).cos(), epsilon = 1e-15);
        assert_relative_eq!(q[1], (s + 3.0) / 4.0 * ((t + 1.0) * PI).sin(), epsilon = 1e-15);

        let cyl = DomainMap::cylinder_shell(0.5, 1.0).unwrap();
        let q = cyl.param_to_physical(&[1.0, -1.0, 0.3]).unwrap();
        assert_relative_eq!(q[0], 1.0);
        assert!(q[1].abs() < 1e-15);
        assert_eq!(q[2], 0.3);
        assert!(cyl.param_to_physical(&[1.2, 0.0, 0.0]).is_err());
        assert!(cyl.param_to_physical(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn factor_examples() {
        let annulus = DomainMap::annulus(0.5, 1.0).unwrap();
        let f = polar_derivative_factors(&annulus, &[0.2, 0.1]).unwrap();
        assert_relative_eq!(f.radial_scale, 4.0);
        assert_eq!(f.theta_coupling, 0.0);
        let disk = DomainMap::disk(1.0).unwrap();
        assert_relative_eq!(disk.polar_factors(&[0.0, 0.4]).unwrap().radial_scale, 2.0);
        assert!(matches!(disk.polar_factors(&[-1.0, 0.4]), Err(CsnnError::Singular(_))));
        assert!(DomainMap::identity(2).polar_factors(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn invalid_profiles_rejected() {
        assert!(DomainMap::annulus(1.0, 0.5).is_err());
        assert!(DomainMap::annulus(0.5, 0.5).is_err());
        assert!(DomainMap::disk(0.0).is_err());
    }

    fn wavy_inner(theta: f64) -> (f64, f64, f64) {
        (0.4 + 0.1 * (2.0 * theta).sin(), 0.2 * (2.0 * theta).cos(), -0.4 * (2.0 * theta).sin())
    }

    fn wavy_outer(theta: f64) -> (f64, f64, f64) {
        (1.0 + 0.2 * (3.0 * theta).cos(), -0.6 * (3.0 * theta).sin(), -1.8 * (3.0 * theta).cos())
    }

    proptest! {
        #[test]
        fn stretch_round_trip(r_frac in 0.0f64..=1.0, theta in 0.0f64..6.28) {
            let map = DomainMap::annulus_with_profiles(
                RadialProfile::Function(wavy_inner),
                RadialProfile::Function(wavy_outer),
            ).unwrap();
            let ((f1, _, _), (f2, _, _)) = map.profiles(theta);
            let r = f1 + r_frac * (f2 - f1);
            let z = map.stretch_z(r, theta).unwrap();
            prop_assert!((map.radius(z, theta) - r).abs() < 1e-12);
        }

        #[test]
        fn physical_round_trip(z in -0.99f64..0.99, t in -1.0f64..0.999) {
            for map in [DomainMap::annulus(0.5, 1.0).unwrap(), DomainMap::disk(1.0).unwrap()] {
                let q = map.param_to_physical(&[z, t]).unwrap();
                let p = map.physical_to_param(&q).unwrap();
                prop_assert!((p[0] - z).abs() < 1e-12);
                prop_assert!((p[1] - t).abs() < 1e-12);
            }
        }

        #[test]
        fn chain_rule_reproduces_polar_derivatives(z in -0.9f64..0.9, t in -0.95f64..0.95) {
            let g = |x: f64, y: f64| (0.7 * x).exp() * (1.3 * y + 0.2).sin() + x * y * y;
            let gx = |x: f64, y: f64| 0.7 * (0.7 * x).exp() * (1.3 * y + 0.2).sin() + y * y;
            let gy = |x: f64, y: f64| 1.3 * (0.7 * x).exp() * (1.3 * y + 0.2).cos() + 2.0 * x * y;
            for map in [
                DomainMap::annulus(0.5, 1.0).unwrap(),
                DomainMap::disk(1.0).unwrap(),
                DomainMap::annulus_with_profiles(
                    RadialProfile::Function(wavy_inner),
                    RadialProfile::Function(wavy_outer),
                ).unwrap(),
            ] {
                let composed = |zz: f64, tt: f64| {
                    let q = map.map_point(&[zz, tt]);
                    g(q[0], q[1])
                };
                let h = 1e-6;
                let d_z = (composed(z + h, t) - composed(z - h, t)) / (2.0 * h);
                let d_t = (composed(z, t + h) - composed(z, t - h)) / (2.0 * h);
                let f = map.polar_factors(&[z, t]).unwrap();
                let d_r = f.radial_scale * d_z;
                let d_theta = d_t / PI - f.theta_coupling * d_z;
                let q = map.map_point(&[z, t]);
                let (s, c) = f.theta.sin_cos();
                let exact_r = gx(q[0], q[1]) * c + gy(q[0], q[1]) * s;
                let exact_theta = f.radius * (-gx(q[0], q[1]) * s + gy(q[0], q[1]) * c);
                prop_assert!((d_r - exact_r).abs() <= 1e-6 * exact_r.abs().max(1.0));
                prop_assert!((d_theta - exact_theta).abs() <= 1e-6 * exact_theta.abs().max(1.0));
            }
        }
    }
}
