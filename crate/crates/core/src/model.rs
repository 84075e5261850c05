//! The spectral network: a tensor-product expansion
//!
//! ```text
//! N(x; w) = Σ_{i_1 … i_d} w[i_1 … i_d] · φ¹_{i_1}(x_1) ⋯ φᵈ_{i_d}(x_d)
//! ```
//!
//! Because the output is linear in `w`, input derivatives and weight
//! gradients are exact products of per-axis basis derivatives.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{build_family, BasisFamily, BoundaryCondition, BoundaryKind, FamilyKind};
use crate::error::{CsnnError, Result};
use crate::grid::{GridBasis, TensorGrid};

pub const MAX_DIMS: usize = 4;

/// Per-axis derivative orders.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(orders: Vec<usize>) -> Result<Self> {
        if let Some(&o) = orders.iter().find(|&&o| o > 2) {
            return Err(CsnnError::UnsupportedOrder(o));
        }
        Ok(Self(orders))
    }

    pub fn zero(dims: usize) -> Self {
        Self(vec![0; dims])
    }

    /// Derivative of order `order` along `axis` only.
    pub fn axis(dims: usize, axis: usize, order: usize) -> Self {
        let mut v = vec![0; dims];
        v[axis] = order;
        Self(v)
    }

    pub fn orders(&self) -> &[usize] {
        &self.0
    }

    pub fn total_order(&self) -> usize {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorModel {
    families: Vec<BasisFamily>,
    weights: Vec<f64>,
    u0: Option<f64>,
}

impl TensorModel {
    /// Zero-initialized model over `families`.
    pub fn zeros(families: Vec<BasisFamily>, with_u0: bool) -> Result<Self> {
        if families.is_empty() || families.len() > MAX_DIMS {
            return Err(CsnnError::DimensionMismatch {
                expected: MAX_DIMS,
                got: families.len(),
            });
        }
        let len = families.iter().map(BasisFamily::size).product();
        Ok(Self {
            families,
            weights: vec![0.0; len],
            u0: with_u0.then_some(0.0),
        })
    }

    pub fn dims(&self) -> usize {
        self.families.len()
    }

    pub fn families(&self) -> &[BasisFamily] {
        &self.families
    }

    pub fn shape(&self) -> Vec<usize> {
        self.families.iter().map(BasisFamily::size).collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.weights.len() {
            return Err(CsnnError::ShapeMismatch(format!(
                "expected {} weights, got {}",
                self.weights.len(),
                weights.len()
            )));
        }
        self.weights = weights;
        Ok(())
    }

    pub fn u0(&self) -> Option<f64> {
        self.u0
    }

    pub fn set_u0(&mut self, value: f64) -> Result<()> {
        match self.u0.as_mut() {
            Some(u0) => {
                *u0 = value;
                Ok(())
            }
            None => Err(CsnnError::MissingU0),
        }
    }

    /// Uniform weights in `[-scale, scale]` from a seeded stream.
    pub fn randomize(&mut self, seed: u64, scale: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in &mut self.weights {
            *w = rng.random_range(-scale..=scale);
        }
        if let Some(u0) = self.u0.as_mut() {
            *u0 = rng.random_range(-scale..=scale);
        }
    }

    fn check_point(&self, x: &[f64], idx: Option<&MultiIndex>) -> Result<()> {
        if x.len() != self.dims() {
            return Err(CsnnError::DimensionMismatch {
                expected: self.dims(),
                got: x.len(),
            });
        }
        if let Some(idx) = idx {
            if idx.orders().len() != self.dims() {
                return Err(CsnnError::DimensionMismatch {
                    expected: self.dims(),
                    got: idx.orders().len(),
                });
            }
        }
        Ok(())
    }

    fn axis_values(&self, x: &[f64], idx: &MultiIndex) -> Result<Vec<Vec<f64>>> {
        self.families
            .iter()
            .zip(x)
            .zip(idx.orders())
            .map(|((fam, &xi), &order)| fam.eval_all(xi, order))
            .collect()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.partial(x, &MultiIndex::zero(self.dims()))
    }

    /// Mixed partial `∂^idx N` at `x`.
    pub fn partial(&self, x: &[f64], idx: &MultiIndex) -> Result<f64> {
        self.check_point(x, Some(idx))?;
        let values = self.axis_values(x, idx)?;
        // contract the last axis first
        let mut data = self.weights.clone();
        for axis_vals in values.iter().rev() {
            let n = axis_vals.len();
            data = data
                .chunks(n)
                .map(|c| c.iter().zip(axis_vals).map(|(w, v)| w * v).sum())
                .collect();
        }
        Ok(data[0])
    }

    /// `∂ partial(x, idx) / ∂w`, shaped like the weights.
    pub fn weight_gradient(&self, x: &[f64], idx: &MultiIndex) -> Result<Vec<f64>> {
        self.check_point(x, Some(idx))?;
        let values = self.axis_values(x, idx)?;
        let mut out = vec![1.0];
        for axis_vals in &values {
            out = out
                .iter()
                .flat_map(|&a| axis_vals.iter().map(move |&b| a * b))
                .collect();
        }
        Ok(out)
    }

    /// `∂^idx N` at every point of `grid`.
    pub fn evaluate_on_grid(&self, grid: &TensorGrid, idx: &MultiIndex) -> Result<Vec<f64>> {
        let gb = GridBasis::new(&self.families, grid)?;
        Ok(gb.apply(&self.weights, idx.orders()))
    }

    pub fn to_checkpoint(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "csnn-checkpoint 1");
        let _ = writeln!(s, "dims {}", self.dims());
        for (i, fam) in self.families.iter().enumerate() {
            let bc = fam.boundary();
            let _ = writeln!(
                s,
                "family {i} {} {} {} {:.16e} {:.16e} {:.16e} {:.16e}",
                fam.kind(),
                fam.size(),
                bc.kind,
                bc.a_minus,
                bc.b_minus,
                bc.a_plus,
                bc.b_plus
            );
        }
        match self.u0 {
            Some(u0) => {
                let _ = writeln!(s, "u0 {u0:.16e}");
            }
            None => {
                let _ = writeln!(s, "u0 none");
            }
        }
        let _ = writeln!(s, "weights {}", self.weights.len());
        for w in &self.weights {
            let _ = writeln!(s, "{w:.16e}");
        }
        s
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let bad = |msg: &str| CsnnError::Checkpoint(msg.to_string());
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number '{s}'")));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("csnn-checkpoint 1") {
            return Err(bad("missing header"));
        }
        let dims: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("dims "))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad("missing dims"))?;
        let mut families = Vec::with_capacity(dims);
        for i in 0..dims {
            let line = lines.next().ok_or_else(|| bad("missing family line"))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 9 || f[0] != "family" || f[1] != i.to_string() {
                return Err(bad(&format!("malformed family line '{line}'")));
            }
            let kind: FamilyKind = f[2].parse()?;
            let size: usize = f[3].parse().map_err(|_| bad("bad family size"))?;
            let bc_kind: BoundaryKind = f[4].parse()?;
            let bc = if bc_kind == BoundaryKind::Periodic {
                BoundaryCondition::periodic()
            } else {
                BoundaryCondition::robin(num(f[5])?, num(f[6])?, 0.0, num(f[7])?, num(f[8])?, 0.0)?
            };
            families.push(build_family(kind, size, bc)?);
        }
        let u0_line = lines.next().ok_or_else(|| bad("missing u0"))?;
        let u0 = match u0_line.strip_prefix("u0 ").map(str::trim) {
            Some("none") => None,
            Some(v) => Some(num(v)?),
            None => return Err(bad("missing u0")),
        };
        let count: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("weights "))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad("missing weights header"))?;
        let weights = lines.map(|l| num(l.trim())).collect::<Result<Vec<f64>>>()?;
        if weights.len() != count {
            return Err(bad("weight count mismatch"));
        }
        let mut model = Self::zeros(families, u0.is_some())?;
        model.set_weights(weights)?;
        if let Some(u0) = u0 {
            model.set_u0(u0)?;
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&std::fs::read_to_string(path)?)
    }
}

pub fn evaluate(model: &TensorModel, x: &[f64]) -> Result<f64> {
    model.evaluate(x)
}

pub fn partial(model: &TensorModel, x: &[f64], idx: &MultiIndex) -> Result<f64> {
    model.partial(x, idx)
}

pub fn weight_gradient(model: &TensorModel, x: &[f64], idx: &MultiIndex) -> Result<Vec<f64>> {
    model.weight_gradient(x, idx)
}
