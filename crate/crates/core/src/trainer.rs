//! Collocation sets, the mean-squared residual loss and the training loop.

use std::fmt::Write as _;
use std::time::Instant;

use crate::basis::FamilyKind;
use crate::chebyshev::CglRule;
use crate::config::{Init, TrainConfig};
use crate::error::{CsnnError, Result};
use crate::grid::{GridBasis, TensorGrid};
use crate::model::{MultiIndex, TensorModel};
use crate::optim::{adam_step, u0_correction, AdamState, PlateauScheduler};
use crate::problems::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisSampling {
    /// Interior nodes `cos(πj/N)`, `j = 1..N−1`.
    InteriorCgl { order: usize },
    /// `count` equispaced points of `[−1, 1)`.
    Uniform { count: usize },
}

impl AxisSampling {
    pub fn nodes(&self) -> Result<Vec<f64>> {
        match *self {
            AxisSampling::InteriorCgl { order } => Ok(CglRule::new(order)?.interior_nodes().to_vec()),
            AxisSampling::Uniform { count } => {
                if count == 0 {
                    return Err(CsnnError::Empty("uniform sample axis"));
                }
                Ok((0..count).map(|i| -1.0 + 2.0 * i as f64 / count as f64).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    grid: TensorGrid,
    provenance: Vec<AxisSampling>,
}

impl SampleSet {
    pub fn new(provenance: Vec<AxisSampling>) -> Result<Self> {
        let axes = provenance.iter().map(AxisSampling::nodes).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: TensorGrid::new(axes)?,
            provenance,
        })
    }

    pub fn grid(&self) -> &TensorGrid {
        &self.grid
    }

    pub fn provenance(&self) -> &[AxisSampling] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        self.grid.points()
    }
}

pub fn build_sample_set(spec: &ProblemSpec, cfg: &TrainConfig) -> Result<SampleSet> {
    let order = cfg.cgl_order_at(cfg.n);
    SampleSet::new(
        spec.axes()
            .iter()
            .map(|a| match a.kind {
                FamilyKind::ChebyshevBc => AxisSampling::InteriorCgl { order },
                FamilyKind::Fourier => AxisSampling::Uniform {
                    count: cfg.uniform_samples,
                },
            })
            .collect(),
    )
}

/// The residual on a fixed sample set, factored as
/// `r = Σ_α c_α ⊙ (B_α w) + offset + u0 · sensitivity`.
#[derive(Debug, Clone)]
pub struct Collocation {
    basis: GridBasis,
    indices: Vec<MultiIndex>,
    coeffs: Vec<Vec<f64>>,
    offset: Vec<f64>,
    sensitivity: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub u0: Option<f64>,
}

impl Collocation {
    pub fn new(spec: &ProblemSpec, model: &TensorModel, samples: &SampleSet) -> Result<Self> {
        let basis = GridBasis::new(model.families(), samples.grid())?;
        let indices = spec.operator_indices();
        let count = samples.len();
        let mut coeffs = vec![Vec::with_capacity(count); indices.len()];
        let mut offset = Vec::with_capacity(count);
        let mut sensitivity = spec.has_u0().then(|| Vec::with_capacity(count));
        let u0 = spec.has_u0().then_some(0.0);
        for p in samples.points() {
            let c = spec.operator_coeffs(&p)?;
            for (dst, v) in coeffs.iter_mut().zip(&c) {
                dst.push(*v);
            }
            let lifting = spec.lifting_jet(&p, u0)?;
            offset.push(spec.apply_operator(&p, &lifting)? - spec.forcing(&p));
            if let (Some(s), Some(jet)) = (sensitivity.as_mut(), spec.lifting_u0_jet(&p)) {
                s.push(spec.apply_operator(&p, &jet)?);
            }
        }
        Ok(Self {
            basis,
            indices,
            coeffs,
            offset,
            sensitivity,
        })
    }

    pub fn len(&self) -> usize {
        self.offset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offset.is_empty()
    }

    pub fn residuals(&self, model: &TensorModel) -> Vec<f64> {
        let mut r = self.offset.clone();
        if let (Some(s), Some(u0)) = (&self.sensitivity, model.u0()) {
            for (ri, si) in r.iter_mut().zip(s) {
                *ri += u0 * si;
            }
        }
        for (idx, c) in self.indices.iter().zip(&self.coeffs) {
            let d = self.basis.apply(model.weights(), idx.orders());
            for ((ri, ci), di) in r.iter_mut().zip(c).zip(d) {
                *ri += ci * di;
            }
        }
        r
    }

    pub fn loss(&self, model: &TensorModel) -> f64 {
        let r = self.residuals(model);
        r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64
    }

    /// Loss and its exact gradient `(2/|T|) Σ r(p) ∂r(p)/∂θ`.
    pub fn loss_and_gradient(&self, model: &TensorModel) -> (f64, Gradient) {
        let r = self.residuals(model);
        let scale = 2.0 / r.len() as f64;
        let loss = r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64;
        let mut weights = vec![0.0; model.weights().len()];
        for (idx, c) in self.indices.iter().zip(&self.coeffs) {
            let weighted: Vec<f64> = r.iter().zip(c).map(|(ri, ci)| ri * ci).collect();
            let g = self.basis.apply_transpose(&weighted, idx.orders());
            for (w, gi) in weights.iter_mut().zip(g) {
                *w += scale * gi;
            }
        }
        let u0 = self
            .sensitivity
            .as_ref()
            .map(|s| scale * r.iter().zip(s).map(|(a, b)| a * b).sum::<f64>());
        (loss, Gradient { weights, u0 })
    }
}

pub fn loss(spec: &ProblemSpec, model: &TensorModel, samples: &SampleSet) -> Result<f64> {
    Ok(Collocation::new(spec, model, samples)?.loss(model))
}

pub fn loss_gradient(spec: &ProblemSpec, model: &TensorModel, samples: &SampleSet) -> Result<Gradient> {
    Ok(Collocation::new(spec, model, samples)?.loss_and_gradient(model).1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub iter: usize,
    pub loss: f64,
    pub lr: f64,
    pub u0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub problem: String,
    pub n: usize,
    pub rows: Vec<LogRow>,
    pub final_loss: f64,
    pub seconds: f64,
}

impl RunReport {
    /// Per-iteration log: `iter,loss,lr,u0` with 17 significant digits.
    pub fn loss_csv(&self) -> String {
        let mut s = String::from("iter,loss,lr,u0\n");
        for row in &self.rows {
            let u0 = row.u0.map(|v| format!("{v:.16e}")).unwrap_or_default();
            let _ = writeln!(s, "{},{:.16e},{:.16e},{}", row.iter, row.loss, row.lr, u0);
        }
        s
    }

    pub fn initial_loss(&self) -> Option<f64> {
        self.rows.first().map(|r| r.loss)
    }
}

/// Model initialized per `cfg`, before any training.
pub fn initial_model(spec: &ProblemSpec, cfg: &TrainConfig) -> Result<TensorModel> {
    let mut model = spec.zero_model(cfg.n, cfg.fourier_size())?;
    if cfg.init == Init::Random {
        model.randomize(cfg.seed, cfg.init_scale);
    }
    if spec.has_u0() {
        model.set_u0(cfg.u0_init)?;
    }
    Ok(model)
}

/// Full-batch Adam on the collocation loss with plateau schedules and, for
/// problems with a center value, periodic five-point corrections.
pub fn train(spec: &ProblemSpec, cfg: &TrainConfig) -> Result<(TensorModel, RunReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let mut model = initial_model(spec, cfg)?;
    let samples = build_sample_set(spec, cfg)?;
    let col = Collocation::new(spec, &model, &samples)?;
    let iterations = cfg.total_iterations();
    let policy = cfg.correction_policy();

    let mut adam = AdamState::new(model.weights().len(), cfg.lr);
    let mut sched = PlateauScheduler::new(cfg.lr, cfg.factor, cfg.patience, cfg.min_lr)?;
    let mut adam_u0 = AdamState::new(1, cfg.u0_lr);
    let mut sched_u0 = PlateauScheduler::new(cfg.u0_lr, cfg.u0_factor, cfg.u0_patience, cfg.min_lr)?;

    let mut rows = Vec::with_capacity(iterations);
    let mut last_good = model.clone();
    for iter in 1..=iterations {
        let (loss, grad) = col.loss_and_gradient(&model);
        let diverged = |what, last_good: &TensorModel| CsnnError::Diverged {
            what,
            iteration: iter,
            last_good: Box::new(last_good.clone()),
        };
        if !loss.is_finite() {
            return Err(diverged("loss", &last_good));
        }
        rows.push(LogRow {
            iter,
            loss,
            lr: adam.lr(),
            u0: model.u0(),
        });
        last_good = model.clone();
        if adam_step(&mut adam, model.weights_mut(), &grad.weights).is_err() {
            return Err(diverged("gradient", &last_good));
        }
        if let (Some(g), Some(u0)) = (grad.u0, model.u0()) {
            let mut v = [u0];
            if adam_step(&mut adam_u0, &mut v, &[g]).is_err() {
                return Err(diverged("gradient", &last_good));
            }
            model.set_u0(v[0])?;
            adam_u0.set_lr(sched_u0.observe(loss)?);
        }
        adam.set_lr(sched.observe(loss)?);
        if cfg.correction && policy.due(iter) {
            let corrected = u0_correction(&policy, &model, spec)?;
            model.set_u0(corrected)?;
        }
    }
    let final_loss = col.loss(&model);
    if !final_loss.is_finite() {
        return Err(CsnnError::Diverged {
            what: "loss",
            iteration: iterations + 1,
            last_good: Box::new(last_good),
        });
    }
    let report = RunReport {
        problem: spec.name().to_string(),
        n: cfg.n,
        rows,
        final_loss,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((model, report))
}
