//! One-dimensional basis families that satisfy homogeneous boundary
//! conditions by construction.
//!
//! Non-periodic axes use `φ_k = T_k + a_k T_{k+1} + b_k T_{k+2}` with
//! `(a_k, b_k)` chosen so that `a_± φ_k(±1) + b_± φ_k'(±1) = 0`. Periodic
//! axes use the trigonometric family `1, cos πt, sin πt, cos 2πt, …`.
//! Non-homogeneous two-point data is shifted away by a polynomial of degree
//! at most two (see [`homogenize`]).

use std::f64::consts::PI;
use std::fmt;

use crate::chebyshev::{clamp_unit, values_upto};
use crate::error::{CsnnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    Robin,
    Periodic,
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::Neumann => "neumann",
            BoundaryKind::Robin => "robin",
            BoundaryKind::Periodic => "periodic",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for BoundaryKind {
    type Err = CsnnError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(Self::Dirichlet),
            "neumann" => Ok(Self::Neumann),
            "robin" => Ok(Self::Robin),
            "periodic" => Ok(Self::Periodic),
            other => Err(CsnnError::InvalidBoundary(format!("unknown kind '{other}'"))),
        }
    }
}

/// `a_− u(−1) + b_− u'(−1) = c_−` and `a_+ u(1) + b_+ u'(1) = c_+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCondition {
    pub a_minus: f64,
    pub b_minus: f64,
    pub c_minus: f64,
    pub a_plus: f64,
    pub b_plus: f64,
    pub c_plus: f64,
    pub kind: BoundaryKind,
}

impl BoundaryCondition {
    /// General two-point condition; the kind is inferred from the coefficients.
    pub fn robin(
        a_minus: f64,
        b_minus: f64,
        c_minus: f64,
        a_plus: f64,
        b_plus: f64,
        c_plus: f64,
    ) -> Result<Self> {
        let kind = if b_minus == 0.0 && b_plus == 0.0 {
            BoundaryKind::Dirichlet
        } else if a_minus == 0.0 && a_plus == 0.0 {
            BoundaryKind::Neumann
        } else {
            BoundaryKind::Robin
        };
        let bc = Self {
            a_minus,
            b_minus,
            c_minus,
            a_plus,
            b_plus,
            c_plus,
            kind,
        };
        bc.validate()?;
        Ok(bc)
    }

    pub fn dirichlet(c_minus: f64, c_plus: f64) -> Self {
        Self {
            a_minus: 1.0,
            b_minus: 0.0,
            c_minus,
            a_plus: 1.0,
            b_plus: 0.0,
            c_plus,
            kind: BoundaryKind::Dirichlet,
        }
    }

    pub fn homogeneous_dirichlet() -> Self {
        Self::dirichlet(0.0, 0.0)
    }

    pub fn neumann(c_minus: f64, c_plus: f64) -> Self {
        Self {
            a_minus: 0.0,
            b_minus: 1.0,
            c_minus,
            a_plus: 0.0,
            b_plus: 1.0,
            c_plus,
            kind: BoundaryKind::Neumann,
        }
    }

    pub fn periodic() -> Self {
        Self {
            a_minus: 0.0,
            b_minus: 0.0,
            c_minus: 0.0,
            a_plus: 0.0,
            b_plus: 0.0,
            c_plus: 0.0,
            kind: BoundaryKind::Periodic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let coeffs = [
            self.a_minus,
            self.b_minus,
            self.c_minus,
            self.a_plus,
            self.b_plus,
            self.c_plus,
        ];
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(CsnnError::InvalidBoundary("non-finite coefficient".into()));
        }
        if self.kind == BoundaryKind::Periodic {
            return Ok(());
        }
        if self.a_minus == 0.0 && self.b_minus == 0.0 {
            return Err(CsnnError::InvalidBoundary("a_- and b_- are both zero".into()));
        }
        if self.a_plus == 0.0 && self.b_plus == 0.0 {
            return Err(CsnnError::InvalidBoundary("a_+ and b_+ are both zero".into()));
        }
        let consistent = match self.kind {
            BoundaryKind::Dirichlet => self.b_minus == 0.0 && self.b_plus == 0.0,
            BoundaryKind::Neumann => self.a_minus == 0.0 && self.a_plus == 0.0,
            BoundaryKind::Robin | BoundaryKind::Periodic => true,
        };
        if !consistent {
            return Err(CsnnError::InvalidBoundary(format!(
                "coefficients are inconsistent with kind {}",
                self.kind
            )));
        }
        Ok(())
    }

    /// The same operator with zero data.
    pub fn homogeneous(&self) -> Self {
        Self {
            c_minus: 0.0,
            c_plus: 0.0,
            ..*self
        }
    }

    /// `(a_− v(−1) + b_− v'(−1), a_+ v(1) + b_+ v'(1))` for endpoint data.
    pub fn apply(&self, minus: (f64, f64), plus: (f64, f64)) -> (f64, f64) {
        (
            self.a_minus * minus.0 + self.b_minus * minus.1,
            self.a_plus * plus.0 + self.b_plus * plus.1,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftingForm {
    /// `β x² + γ x`, used when `a_± = 0`.
    Quadratic,
    /// `β x + γ`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftingPolynomial {
    pub form: LiftingForm,
    pub beta: f64,
    pub gamma: f64,
}

impl LiftingPolynomial {
    pub fn zero() -> Self {
        Self {
            form: LiftingForm::Linear,
            beta: 0.0,
            gamma: 0.0,
        }
    }

    /// Value (`order = 0`) or derivative of the shift at `x`.
    pub fn eval(&self, x: f64, order: usize) -> f64 {
        match (self.form, order) {
            (LiftingForm::Quadratic, 0) => self.beta * x * x + self.gamma * x,
            (LiftingForm::Quadratic, 1) => 2.0 * self.beta * x + self.gamma,
            (LiftingForm::Quadratic, 2) => 2.0 * self.beta,
            (LiftingForm::Linear, 0) => self.beta * x + self.gamma,
            (LiftingForm::Linear, 1) => self.beta,
            _ => 0.0,
        }
    }
}

/// Polynomial shift `ũ` carrying the data `c_±` of `bc`, so that `U − ũ`
/// satisfies the homogeneous conditions.
pub fn homogenize(bc: &BoundaryCondition) -> Result<LiftingPolynomial> {
    bc.validate()?;
    if bc.kind == BoundaryKind::Periodic {
        return Err(CsnnError::PeriodicInput);
    }
    let (form, m) = if bc.a_minus == 0.0 && bc.a_plus == 0.0 {
        (
            LiftingForm::Quadratic,
            [[-2.0 * bc.b_minus, bc.b_minus], [2.0 * bc.b_plus, bc.b_plus]],
        )
    } else {
        (
            LiftingForm::Linear,
            [
                [-bc.a_minus + bc.b_minus, bc.a_minus],
                [bc.a_plus + bc.b_plus, bc.a_plus],
            ],
        )
    };
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if det.abs() <= 1e-14 * scale * scale || det == 0.0 {
        return Err(CsnnError::SingularSystem { det });
    }
    let beta = (bc.c_minus * m[1][1] - m[0][1] * bc.c_plus) / det;
    let gamma = (m[0][0] * bc.c_plus - m[1][0] * bc.c_minus) / det;
    Ok(LiftingPolynomial { form, beta, gamma })
}

/// Coefficients `(a_k, b_k)` making `T_k + a_k T_{k+1} + b_k T_{k+2}`
/// satisfy the homogeneous version of `bc`.
pub fn robin_coeffs(k: usize, bc: &BoundaryCondition) -> Result<(f64, f64)> {
    let (am, bm, ap, bp) = (bc.a_minus, bc.b_minus, bc.a_plus, bc.b_plus);
    let k0 = (k * k) as f64;
    let k1 = ((k + 1) * (k + 1)) as f64;
    let k2 = ((k + 2) * (k + 2)) as f64;
    let det = 2.0 * ap * am - 2.0 * bp * bm * k1 * k2 + (am * bp - ap * bm) * (k1 + k2);
    let scale = [
        (2.0 * ap * am).abs(),
        (2.0 * bp * bm * k1 * k2).abs(),
        ((am * bp).abs() + (ap * bm).abs()) * (k1 + k2),
    ]
    .into_iter()
    .fold(0.0f64, f64::max);
    if det == 0.0 || det.abs() <= 1e-12 * scale {
        return Err(CsnnError::DegenerateDeterminant { k, det });
    }
    let a_k = -((ap + bp * k2) * (-am + bm * k0) - (am - bm * k2) * (-ap - bp * k0)) / det;
    let b_k = ((ap + bp * k1) * (-am + bm * k0) + (am - bm * k1) * (-ap - bp * k0)) / det;
    Ok((a_k, b_k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    ChebyshevBc,
    Fourier,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::ChebyshevBc => "chebyshev_bc",
            FamilyKind::Fourier => "fourier",
        })
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = CsnnError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chebyshev_bc" => Ok(Self::ChebyshevBc),
            "fourier" => Ok(Self::Fourier),
            other => Err(CsnnError::FamilyMismatch(format!("unknown family '{other}'"))),
        }
    }
}

/// An ordered set of 1D basis functions on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisFamily {
    kind: FamilyKind,
    size: usize,
    coeffs: Vec<(f64, f64)>,
    bc: BoundaryCondition,
}

impl BasisFamily {
    pub fn new(kind: FamilyKind, size: usize, bc: BoundaryCondition) -> Result<Self> {
        if size == 0 {
            return Err(CsnnError::FamilyMismatch("family size must be at least 1".into()));
        }
        bc.validate()?;
        let coeffs = match (kind, bc.kind) {
            (FamilyKind::ChebyshevBc, BoundaryKind::Periodic) => {
                return Err(CsnnError::FamilyMismatch(
                    "chebyshev_bc family needs a non-periodic condition".into(),
                ))
            }
            (FamilyKind::ChebyshevBc, _) => (0..size)
                .map(|k| robin_coeffs(k, &bc))
                .collect::<Result<Vec<_>>>()?,
            (FamilyKind::Fourier, BoundaryKind::Periodic) => Vec::new(),
            (FamilyKind::Fourier, _) => {
                return Err(CsnnError::FamilyMismatch(
                    "fourier family needs a periodic condition".into(),
                ))
            }
        };
        Ok(Self {
            kind,
            size,
            coeffs,
            bc: bc.homogeneous(),
        })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn boundary(&self) -> &BoundaryCondition {
        &self.bc
    }

    pub fn is_periodic(&self) -> bool {
        self.kind == FamilyKind::Fourier
    }

    /// `(a_k, b_k)` for every member; empty for the Fourier family.
    pub fn coeffs(&self) -> &[(f64, f64)] {
        &self.coeffs
    }

    /// Value (`order = 0`) or derivative of member `k` at `x`.
    pub fn eval(&self, k: usize, x: f64, order: usize) -> Result<f64> {
        if k >= self.size {
            return Err(CsnnError::IndexOutOfRange {
                index: k,
                size: self.size,
            });
        }
        Ok(self.eval_all(x, order)?[k])
    }

    /// Every member's value or derivative at `x`, in family order.
    pub fn eval_all(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        if order > 2 {
            return Err(CsnnError::UnsupportedOrder(order));
        }
        let x = clamp_unit(x)?;
        Ok(match self.kind {
            FamilyKind::ChebyshevBc => {
                let t = &values_upto(self.size + 1, x, order)[order];
                self.coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, (a, b))| t[k] + a * t[k + 1] + b * t[k + 2])
                    .collect()
            }
            FamilyKind::Fourier => (0..self.size).map(|m| fourier_member(m, x, order)).collect(),
        })
    }

    /// Row-major `nodes.len() × size` matrix of member values or derivatives.
    pub fn matrix(&self, nodes: &[f64], order: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(nodes.len() * self.size);
        for &x in nodes {
            out.extend(self.eval_all(x, order)?);
        }
        Ok(out)
    }
}

fn fourier_member(m: usize, t: f64, order: usize) -> f64 {
    if m == 0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    let freq = ((m + 1) / 2) as f64 * PI;
    let (s, c) = (freq * t).sin_cos();
    let is_cos = m % 2 == 1;
    match (is_cos, order) {
        (true, 0) => c,
        (true, 1) => -freq * s,
        (true, _) => -freq * freq * c,
        (false, 0) => s,
        (false, 1) => freq * c,
        (false, _) => -freq * freq * s,
    }
}

pub fn build_family(kind: FamilyKind, size: usize, bc: BoundaryCondition) -> Result<BasisFamily> {
    BasisFamily::new(kind, size, bc)
}

pub fn eval_basis(family: &BasisFamily, k: usize, x: f64, order: usize) -> Result<f64> {
    family.eval(k, x, order)
}
