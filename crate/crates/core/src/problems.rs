//! Benchmark catalog.
//!
//! Every problem is linear: its residual in parameter coordinates is
//!
//! ```text
//! R(p) = Σ_α c_α(p) ∂^α (A + N)(p) − f(map(p))
//! ```
//!
//! where `A` is a boundary lifting, `N` the network and `f` the forcing.
//! Forcings are manufactured from the closed-form solution by applying the
//! Cartesian operator to a jet of `u*`, so they never go through the
//! transformed operators `c_α` that the training residual uses.

use std::f64::consts::PI;

use crate::basis::{build_family, homogenize, BasisFamily, BoundaryCondition, FamilyKind, LiftingPolynomial};
use crate::error::{CsnnError, Result};
use crate::geometry::DomainMap;
use crate::jet::{Jet, Scalar};
use crate::model::{MultiIndex, TensorModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    Robin1d,
    Poisson2dRect,
    Poisson2dAnnulus,
    Helmholtz2dAnnulus,
    Poisson2dDisk,
    Elliptic3dCyl,
    Poisson4d,
}

impl ProblemId {
    pub const ALL: [ProblemId; 7] = [
        ProblemId::Robin1d,
        ProblemId::Poisson2dRect,
        ProblemId::Poisson2dAnnulus,
        ProblemId::Helmholtz2dAnnulus,
        ProblemId::Poisson2dDisk,
        ProblemId::Elliptic3dCyl,
        ProblemId::Poisson4d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Robin1d => "robin1d",
            ProblemId::Poisson2dRect => "poisson2d_rect",
            ProblemId::Poisson2dAnnulus => "poisson2d_annulus",
            ProblemId::Helmholtz2dAnnulus => "helmholtz2d_annulus",
            ProblemId::Poisson2dDisk => "poisson2d_disk",
            ProblemId::Elliptic3dCyl => "elliptic3d_cyl",
            ProblemId::Poisson4d => "poisson4d",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ProblemId::Robin1d => "u'' + x u' - u = f on [-1,1], Robin data, u = exp(5x) + sin(x^2)",
            ProblemId::Poisson2dRect => "-Δu = f on [-1,1]^2, Dirichlet data, u = exp(-x) sin(πy)",
            ProblemId::Poisson2dAnnulus => "-Δu = f on the annulus 0.5 <= r <= 1, u = exp(x) cos(πy)",
            ProblemId::Helmholtz2dAnnulus => "Δu + u = f on the annulus 0.5 <= r <= 1, u = exp(x) sin(πy)",
            ProblemId::Poisson2dDisk => "-Δu = f on the unit disk with trainable center value, u = exp(x) cos(πy)",
            ProblemId::Elliptic3dCyl => {
                "∇·(σ∇u) - κu = f on the cylindrical shell 0.5 <= r <= 1, |z| <= 1, u = exp((2x+2y+z)/3) sin(π(x+y+z))"
            }
            ProblemId::Poisson4d => "-Δu = 4π² Π sin(πx_i) on [-1,1]^4, homogeneous Dirichlet",
        }
    }
}

/// Basis prescription for one parameter axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub kind: FamilyKind,
    pub bc: BoundaryCondition,
}

/// Default hyperparameters for one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemDefaults {
    pub n: usize,
    /// Fixed budget, or `None` when the budget scales as `iterations_per_n · N`.
    pub iterations: Option<usize>,
    pub iterations_per_n: usize,
    pub lr: f64,
    pub factor: f64,
    pub patience: usize,
    pub uniform_samples: usize,
    pub u0_lr: f64,
    pub u0_factor: f64,
    pub u0_patience: usize,
    pub grid_cells: usize,
    pub n_list: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
enum Lifting {
    Zero,
    /// Appendix-style polynomial shift on a single axis.
    Polynomial(LiftingPolynomial),
    /// Boolean-sum blend of the exact solution's traces on the listed axes.
    Transfinite(Vec<usize>),
    /// `(1 − z)/2 · u0 + (1 + z)/2 · g(θ)` on the disk.
    CenterBlend,
}

/// Forcing in physical coordinates replacing the manufactured one.
pub type ForcingFn = fn(&[f64]) -> f64;

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    id: ProblemId,
    map: DomainMap,
    axes: Vec<AxisSpec>,
    lifting: Lifting,
    defaults: ProblemDefaults,
    forcing: Option<ForcingFn>,
}

const ROBIN_A_MINUS: f64 = 1.0;
const ROBIN_B_MINUS: f64 = -1.0;
const ROBIN_A_PLUS: f64 = 1.0;
const ROBIN_B_PLUS: f64 = 1.0;

pub fn robin1d_boundary() -> BoundaryCondition {
    let (s1, c1) = 1f64.sin_cos();
    let c_minus = -4.0 * (-5f64).exp() + s1 + 2.0 * c1;
    let c_plus = 6.0 * 5f64.exp() + s1 + 2.0 * c1;
    BoundaryCondition::robin(ROBIN_A_MINUS, ROBIN_B_MINUS, c_minus, ROBIN_A_PLUS, ROBIN_B_PLUS, c_plus)
        .expect("constant Robin data is valid")
}

pub fn names() -> Vec<&'static str> {
    ProblemId::ALL.iter().map(|id| id.name()).collect()
}

pub fn catalog(name: &str) -> Result<ProblemSpec> {
    let id = ProblemId::ALL
        .into_iter()
        .find(|id| id.name() == name)
        .ok_or_else(|| CsnnError::UnknownProblem {
            name: name.to_string(),
            valid: names().join(", "),
        })?;
    Ok(ProblemSpec::new(id))
}

pub fn all() -> Vec<ProblemSpec> {
    ProblemId::ALL.into_iter().map(ProblemSpec::new).collect()
}

fn defaults(n: usize, iterations: usize, lr: f64, factor: f64, patience: usize) -> ProblemDefaults {
    ProblemDefaults {
        n,
        iterations: Some(iterations),
        iterations_per_n: 0,
        lr,
        factor,
        patience,
        uniform_samples: 0,
        u0_lr: 0.0,
        u0_factor: 0.0,
        u0_patience: 0,
        grid_cells: 300,
        n_list: vec![n],
    }
}

impl ProblemSpec {
    pub fn new(id: ProblemId) -> Self {
        Self::build(id)
    }

    /// Same operator, lifting and geometry with a different right-hand side.
    pub fn with_forcing(mut self, forcing: ForcingFn) -> Self {
        self.forcing = Some(forcing);
        self
    }

    fn build(id: ProblemId) -> Self {
        let dirichlet = AxisSpec {
            kind: FamilyKind::ChebyshevBc,
            bc: BoundaryCondition::homogeneous_dirichlet(),
        };
        let periodic = AxisSpec {
            kind: FamilyKind::Fourier,
            bc: BoundaryCondition::periodic(),
        };
        let annulus = || DomainMap::annulus(0.5, 1.0).expect("valid annulus");
        match id {
            ProblemId::Robin1d => {
                let bc = robin1d_boundary();
                let shift = homogenize(&bc).expect("Robin data of the 1D benchmark is nonsingular");
                Self {
                    id,
                    map: DomainMap::identity(1),
                    axes: vec![AxisSpec {
                        kind: FamilyKind::ChebyshevBc,
                        bc: bc.homogeneous(),
                    }],
                    lifting: Lifting::Polynomial(shift),
                    forcing: None,
                    defaults: ProblemDefaults {
                        iterations: None,
                        iterations_per_n: 300,
                        grid_cells: 500,
                        n_list: vec![6, 8, 10, 12, 14],
                        ..defaults(14, 0, 0.1, 0.7, 600)
                    },
                }
            }
            ProblemId::Poisson2dRect => Self {
                id,
                map: DomainMap::identity(2),
                axes: vec![dirichlet; 2],
                lifting: Lifting::Transfinite(vec![0, 1]),
                forcing: None,
                defaults: ProblemDefaults {
                    n_list: vec![6, 8, 10],
                    ..defaults(10, 2000, 0.1, 0.7, 600)
                },
            },
            ProblemId::Poisson2dAnnulus | ProblemId::Helmholtz2dAnnulus => Self {
                id,
                map: annulus(),
                axes: vec![dirichlet, periodic],
                lifting: Lifting::Transfinite(vec![0]),
                forcing: None,
                defaults: {
                    let n = if id == ProblemId::Poisson2dAnnulus { 10 } else { 13 };
                    ProblemDefaults {
                        uniform_samples: 500,
                        ..defaults(n, 2000, 0.01, 0.6, 500)
                    }
                },
            },
            ProblemId::Poisson2dDisk => Self {
                id,
                map: DomainMap::disk(1.0).expect("valid disk"),
                axes: vec![dirichlet, periodic],
                lifting: Lifting::CenterBlend,
                forcing: None,
                defaults: ProblemDefaults {
                    uniform_samples: 500,
                    u0_lr: 6e-2,
                    u0_factor: 0.8,
                    u0_patience: 600,
                    ..defaults(10, 10000, 8e-3, 0.7, 800)
                },
            },
            ProblemId::Elliptic3dCyl => Self {
                id,
                map: DomainMap::cylinder_shell(0.5, 1.0).expect("valid shell"),
                axes: vec![dirichlet, periodic, dirichlet],
                lifting: Lifting::Transfinite(vec![0, 2]),
                forcing: None,
                defaults: ProblemDefaults {
                    uniform_samples: 100,
                    grid_cells: 32,
                    ..defaults(8, 500, 0.01, 0.7, 100)
                },
            },
            ProblemId::Poisson4d => Self {
                id,
                map: DomainMap::identity(4),
                axes: vec![dirichlet; 4],
                lifting: Lifting::Zero,
                forcing: None,
                defaults: ProblemDefaults {
                    grid_cells: 11,
                    n_list: vec![6, 8, 10],
                    ..defaults(10, 1000, 0.1, 0.7, 100)
                },
            },
        }
    }

    pub fn id(&self) -> ProblemId {
        self.id
    }

    pub fn name(&self) -> &'static str {
        self.id.name()
    }

    pub fn description(&self) -> &'static str {
        self.id.description()
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn map(&self) -> &DomainMap {
        &self.map
    }

    pub fn axes(&self) -> &[AxisSpec] {
        &self.axes
    }

    pub fn defaults(&self) -> &ProblemDefaults {
        &self.defaults
    }

    /// Whether the model carries the trainable center value.
    pub fn has_u0(&self) -> bool {
        self.lifting == Lifting::CenterBlend
    }

    /// Basis families for a model of order `n`: `n − 1` members on
    /// non-periodic axes and `fourier_size` on periodic ones.
    pub fn families(&self, n: usize, fourier_size: usize) -> Result<Vec<BasisFamily>> {
        if n < 2 {
            return Err(CsnnError::InvalidOrder(n));
        }
        self.axes
            .iter()
            .map(|a| {
                let size = match a.kind {
                    FamilyKind::ChebyshevBc => n - 1,
                    FamilyKind::Fourier => fourier_size,
                };
                build_family(a.kind, size, a.bc)
            })
            .collect()
    }

    pub fn zero_model(&self, n: usize, fourier_size: usize) -> Result<TensorModel> {
        TensorModel::zeros(self.families(n, fourier_size)?, self.has_u0())
    }

    /// Closed-form solution at a physical point.
    pub fn exact<S: Scalar>(&self, q: &[S]) -> S {
        match self.id {
            ProblemId::Robin1d => (q[0] * 5.0).exp() + (q[0] * q[0]).sin(),
            ProblemId::Poisson2dRect => (-q[0]).exp() * (q[1] * PI).sin(),
            ProblemId::Poisson2dAnnulus | ProblemId::Poisson2dDisk => q[0].exp() * (q[1] * PI).cos(),
            ProblemId::Helmholtz2dAnnulus => q[0].exp() * (q[1] * PI).sin(),
            ProblemId::Elliptic3dCyl => {
                ((q[0] * 2.0 + q[1] * 2.0 + q[2]) / 3.0).exp() * ((q[0] + q[1] + q[2]) * PI).sin()
            }
            ProblemId::Poisson4d => {
                (q[0] * PI).sin() * (q[1] * PI).sin() * (q[2] * PI).sin() * (q[3] * PI).sin()
            }
        }
    }

    pub fn exact_solution(&self, q: &[f64]) -> f64 {
        self.exact(q)
    }

    fn sigma<S: Scalar>(q: &[S]) -> S {
        ((q[0] + q[1] + q[2]) * PI).cos() + 2.0
    }

    fn kappa<S: Scalar>(q: &[S]) -> S {
        ((q[0] + q[1] + q[2]) * PI).sin() + 2.0
    }

    /// Applies the Cartesian operator to the jet `u` taken at `q`.
    fn cartesian_operator(&self, q: &[f64], u: &Jet) -> f64 {
        let d = self.dims();
        let laplacian: f64 = (0..d).map(|i| u.hess[i][i]).sum();
        match self.id {
            ProblemId::Robin1d => u.hess[0][0] + q[0] * u.grad[0] - u.value,
            ProblemId::Poisson2dRect
            | ProblemId::Poisson2dAnnulus
            | ProblemId::Poisson2dDisk
            | ProblemId::Poisson4d => -laplacian,
            ProblemId::Helmholtz2dAnnulus => laplacian + u.value,
            ProblemId::Elliptic3dCyl => {
                let vars = Jet::variables(q);
                let sigma = Self::sigma(&vars);
                let kappa = Self::kappa(&q[..3]);
                let flux: f64 = (0..3).map(|i| sigma.grad[i] * u.grad[i]).sum();
                sigma.value * laplacian + flux - kappa * u.value
            }
        }
    }

    /// Forcing at a physical point, manufactured from `u*`.
    pub fn forcing_physical(&self, q: &[f64]) -> f64 {
        if let Some(f) = self.forcing {
            return f(q);
        }
        let u = self.exact(&Jet::variables(q));
        self.cartesian_operator(q, &u)
    }

    /// Forcing pulled back to the parameter point `p`.
    pub fn forcing(&self, p: &[f64]) -> f64 {
        self.forcing_physical(&self.map.map_point(p))
    }

    /// Derivative multi-indices of the parameter-space operator.
    pub fn operator_indices(&self) -> Vec<MultiIndex> {
        let d = self.dims();
        let mut idx = vec![MultiIndex::zero(d)];
        let axes: Vec<usize> = match self.id {
            ProblemId::Robin1d => vec![0],
            ProblemId::Poisson2dRect | ProblemId::Poisson4d => vec![],
            ProblemId::Poisson2dAnnulus | ProblemId::Helmholtz2dAnnulus | ProblemId::Poisson2dDisk => vec![0],
            ProblemId::Elliptic3dCyl => vec![0, 1, 2],
        };
        for a in axes {
            idx.push(MultiIndex::axis(d, a, 1));
        }
        for a in 0..d {
            idx.push(MultiIndex::axis(d, a, 2));
        }
        idx
    }

    /// Coefficients `c_α(p)` aligned with [`ProblemSpec::operator_indices`].
    pub fn operator_coeffs(&self, p: &[f64]) -> Result<Vec<f64>> {
        let d = self.dims();
        if p.len() != d {
            return Err(CsnnError::DimensionMismatch { expected: d, got: p.len() });
        }
        match self.id {
            // u'' + x u' − u
            ProblemId::Robin1d => Ok(vec![-1.0, p[0], 1.0]),
            ProblemId::Poisson2dRect | ProblemId::Poisson4d => {
                let mut c = vec![0.0];
                c.extend(std::iter::repeat_n(-1.0, d));
                Ok(c)
            }
            ProblemId::Poisson2dAnnulus | ProblemId::Helmholtz2dAnnulus | ProblemId::Poisson2dDisk => {
                if !self.map.has_constant_profiles() {
                    return Err(CsnnError::Singular("operator needs constant radial profiles".into()));
                }
                let f = self.map.polar_factors(p)?;
                let (scale, r) = (f.radial_scale, f.radius);
                // Δ = F² ∂zz + (F / r) ∂z + 1 / (π r)² ∂tt
                let lap = [0.0, scale / r, scale * scale, 1.0 / (PI * r).powi(2)];
                Ok(if self.id == ProblemId::Helmholtz2dAnnulus {
                    vec![1.0, lap[1], lap[2], lap[3]]
                } else {
                    lap.iter().map(|c| -c).collect()
                })
            }
            ProblemId::Elliptic3dCyl => {
                if !self.map.has_constant_profiles() {
                    return Err(CsnnError::Singular("operator needs constant radial profiles".into()));
                }
                let f = self.map.polar_factors(p)?;
                let (scale, r) = (f.radial_scale, f.radius);
                let sigma = Self::sigma(&self.map.map_point(&Jet::variables(p)));
                let kappa = Self::kappa(&self.map.map_point(p));
                let s = sigma.value;
                let angular = 1.0 / (PI * r).powi(2);
                // order: u, u_r̂, u_t, u_ẑ, u_r̂r̂, u_tt, u_ẑẑ
                Ok(vec![
                    -kappa,
                    s * scale / r + scale * scale * sigma.grad[0],
                    sigma.grad[1] * angular,
                    sigma.grad[2],
                    s * scale * scale,
                    s * angular,
                    s,
                ])
            }
        }
    }

    /// `Σ_α c_α(p) ∂^α u` for a jet `u` in parameter coordinates.
    pub fn apply_operator(&self, p: &[f64], u: &Jet) -> Result<f64> {
        let coeffs = self.operator_coeffs(p)?;
        Ok(self
            .operator_indices()
            .iter()
            .zip(coeffs)
            .map(|(idx, c)| c * u.partial(idx.orders()).expect("operator order <= 2"))
            .sum())
    }

    fn lifting_generic<S: Scalar>(&self, p: &[S], u0: f64) -> S {
        match &self.lifting {
            Lifting::Zero => S::constant(0.0),
            Lifting::Polynomial(poly) => {
                let x = p[0];
                match poly.form {
                    crate::basis::LiftingForm::Quadratic => x * x * poly.beta + x * poly.gamma,
                    crate::basis::LiftingForm::Linear => x * poly.beta + poly.gamma,
                }
            }
            Lifting::Transfinite(axes) => {
                // A = Σ_{∅ ≠ S ⊆ axes} (−1)^{|S|+1} P_S g
                let mut total = S::constant(0.0);
                for mask in 1u32..(1 << axes.len()) {
                    let chosen: Vec<usize> = (0..axes.len())
                        .filter(|b| mask & (1 << b) != 0)
                        .map(|b| axes[b])
                        .collect();
                    let sign = if chosen.len() % 2 == 1 { 1.0 } else { -1.0 };
                    for corner in 0u32..(1 << chosen.len()) {
                        let mut q = p.to_vec();
                        let mut weight = S::constant(sign);
                        for (b, &axis) in chosen.iter().enumerate() {
                            if corner & (1 << b) != 0 {
                                weight = weight * (p[axis] + 1.0) * 0.5;
                                q[axis] = S::constant(1.0);
                            } else {
                                weight = weight * (-p[axis] + 1.0) * 0.5;
                                q[axis] = S::constant(-1.0);
                            }
                        }
                        total = total + weight * self.exact(&self.map.map_point(&q));
                    }
                }
                total
            }
            Lifting::CenterBlend => {
                let z = p[0];
                let outer = self.exact(&self.map.map_point(&[S::constant(1.0), p[1]]));
                (-z + 1.0) * (0.5 * u0) + (z + 1.0) * 0.5 * outer
            }
        }
    }

    fn check_u0(&self, u0: Option<f64>) -> Result<f64> {
        match (self.has_u0(), u0) {
            (true, Some(v)) => Ok(v),
            (true, None) => Err(CsnnError::MissingU0),
            (false, _) => Ok(0.0),
        }
    }

    /// Lifting `A(p)`; the disk problem reads the center value `u0`.
    pub fn lifting_value(&self, p: &[f64], u0: Option<f64>) -> Result<f64> {
        let u0 = self.check_u0(u0)?;
        Ok(self.lifting_generic(p, u0))
    }

    /// Lifting with its parameter-space derivatives.
    pub fn lifting_jet(&self, p: &[f64], u0: Option<f64>) -> Result<Jet> {
        let u0 = self.check_u0(u0)?;
        Ok(self.lifting_generic(&Jet::variables(p), u0))
    }

    /// `∂A/∂u0` with derivatives, for problems with a center value.
    pub fn lifting_u0_jet(&self, p: &[f64]) -> Option<Jet> {
        self.has_u0().then(|| {
            let z = Jet::variable(p[0], 0);
            (-z + 1.0) * 0.5
        })
    }

    /// `u*∘map` with parameter-space derivatives.
    pub fn exact_jet(&self, p: &[f64]) -> Jet {
        self.exact(&self.map.map_point(&Jet::variables(p)))
    }

    /// Trial solution `A + N` at the parameter point `p`.
    pub fn trial_value(&self, model: &TensorModel, p: &[f64]) -> Result<f64> {
        Ok(self.lifting_value(p, model.u0())? + model.evaluate(p)?)
    }

    /// Residual of `lifting + model` at the parameter point `p`.
    pub fn residual(&self, model: &TensorModel, p: &[f64]) -> Result<f64> {
        let coeffs = self.operator_coeffs(p)?;
        let lifting = self.lifting_jet(p, model.u0())?;
        let mut r = -self.forcing(p);
        for (idx, c) in self.operator_indices().iter().zip(coeffs) {
            let l = lifting.partial(idx.orders()).expect("operator order <= 2");
            r += c * (l + model.partial(p, idx)?);
        }
        Ok(r)
    }

    /// Residual with the exact solution substituted for `lifting + model`.
    pub fn exact_residual(&self, p: &[f64]) -> Result<f64> {
        Ok(self.apply_operator(p, &self.exact_jet(p))? - self.forcing(p))
    }
}

pub fn residual(spec: &ProblemSpec, model: &TensorModel, p: &[f64]) -> Result<f64> {
    spec.residual(model, p)
}

pub fn lifting_value(spec: &ProblemSpec, p: &[f64], u0: Option<f64>) -> Result<f64> {
    spec.lifting_value(p, u0)
}

pub fn exact_solution(spec: &ProblemSpec, q: &[f64]) -> f64 {
    spec.exact_solution(q)
}
