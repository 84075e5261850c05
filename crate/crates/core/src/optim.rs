//! Adam, a reduce-on-plateau scheduler and the center-value correction.

use crate::error::{CsnnError, Result};
use crate::model::TensorModel;
use crate::problems::ProblemSpec;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
    lr: f64,
}

impl AdamState {
    pub fn new(len: usize, lr: f64) -> Self {
        Self {
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
            lr,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    if params.len() != state.len() || grads.len() != state.len() {
        return Err(CsnnError::LengthMismatch {
            expected: state.len(),
            got: if params.len() != state.len() { params.len() } else { grads.len() },
        });
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(CsnnError::NonFinite {
            what: "gradient",
            iteration: state.step as usize + 1,
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    for ((p, &g), (m, v)) in params.iter_mut().zip(grads).zip(state.m.iter_mut().zip(state.v.iter_mut())) {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= state.lr * m_hat / (v_hat.sqrt() + EPSILON);
    }
    Ok(())
}

/// Multiplies the learning rate by `factor` after `patience` observations
/// without a strict improvement of the best loss.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    factor: f64,
    patience: usize,
    min_lr: f64,
    lr: f64,
    best: f64,
    counter: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, factor: f64, patience: usize, min_lr: f64) -> Result<Self> {
        if !(factor > 0.0 && factor < 1.0) {
            return Err(CsnnError::Validation {
                field: "factor".into(),
                message: format!("must lie in (0, 1), got {factor}"),
            });
        }
        if patience == 0 {
            return Err(CsnnError::Validation {
                field: "patience".into(),
                message: "must be positive".into(),
            });
        }
        Ok(Self {
            factor,
            patience,
            min_lr,
            lr,
            best: f64::INFINITY,
            counter: 0,
        })
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn observe(&mut self, loss: f64) -> Result<f64> {
        if !loss.is_finite() {
            return Err(CsnnError::NonFinite {
                what: "loss",
                iteration: 0,
            });
        }
        if loss < self.best {
            self.best = loss;
            self.counter = 0;
        } else {
            self.counter += 1;
            if self.counter >= self.patience {
                self.lr = (self.lr * self.factor).max(self.min_lr);
                self.counter = 0;
            }
        }
        Ok(self.lr)
    }
}

pub fn scheduler_observe(s: &mut PlateauScheduler, loss: f64) -> Result<f64> {
    s.observe(loss)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionPolicy {
    pub threshold: usize,
    pub interval: usize,
    pub h: f64,
}

impl Default for CorrectionPolicy {
    fn default() -> Self {
        Self {
            threshold: 1000,
            interval: 100,
            h: 1e-3,
        }
    }
}

impl CorrectionPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.interval == 0 {
            return Err(CsnnError::Validation {
                field: "interval".into(),
                message: "must be at least 1".into(),
            });
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(CsnnError::Validation {
                field: "h".into(),
                message: format!("must be positive, got {}", self.h),
            });
        }
        Ok(())
    }

    /// Whether the correction fires after completing `iteration` steps.
    pub fn due(&self, iteration: usize) -> bool {
        iteration >= self.threshold && iteration % self.interval == 0
    }
}

/// Center value from the five-point Laplacian `−Δu = f` on a cross of radius `h`.
pub fn five_point_center(neighbors: [f64; 4], f_center: f64, h: f64) -> f64 {
    neighbors.iter().sum::<f64>() / 4.0 + h * h * f_center / 4.0
}

/// Corrected center value for `model`; the model is not modified.
pub fn u0_correction(policy: &CorrectionPolicy, model: &TensorModel, spec: &ProblemSpec) -> Result<f64> {
    policy.validate()?;
    if !spec.has_u0() || model.u0().is_none() {
        return Err(CsnnError::MissingU0);
    }
    let h = policy.h;
    let mut neighbors = [0.0; 4];
    for (slot, q) in neighbors.iter_mut().zip([[h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]]) {
        let p = spec
            .map()
            .physical_to_param(&q)
            .map_err(|_| CsnnError::StencilOutsideDomain { h })?;
        if p[0] >= 1.0 {
            return Err(CsnnError::StencilOutsideDomain { h });
        }
        *slot = spec.trial_value(model, &p)?;
    }
    Ok(five_point_center(neighbors, spec.forcing_physical(&[0.0, 0.0]), h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::catalog;

    #[test]
    fn adam_examples() {
        let mut s = AdamState::new(2, 0.1);
        let mut p = vec![1.0, -2.0];
        adam_step(&mut s, &mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(s.step(), 1);

        for g in [3.0, -1e-3, 250.0] {
            let mut s = AdamState::new(1, 0.05);
            let mut p = [0.0];
            adam_step(&mut s, &mut p, &[g]).unwrap();
            // m̂ = g, v̂ = g², update = −η g / (|g| + ε)
            let expected = -0.05 * g / (g.abs() + EPSILON);
            assert!((p[0] - expected).abs() < 1e-15);
        }

        let mut a = AdamState::new(3, 0.01);
        let mut pa = vec![0.3, 0.1, -0.7];
        adam_step(&mut a, &mut pa, &[0.5, -0.2, 0.9]).unwrap();
        let mut b = a.clone();
        let mut pb = pa.clone();
        adam_step(&mut a, &mut pa, &[0.1, 0.4, -0.3]).unwrap();
        adam_step(&mut b, &mut pb, &[0.1, 0.4, -0.3]).unwrap();
        assert_eq!(pa, pb);
        assert_eq!(a, b);
    }

    #[test]
    fn adam_rejects_bad_input() {
        let mut s = AdamState::new(2, 0.1);
        let mut p = vec![0.0; 2];
        assert!(matches!(adam_step(&mut s, &mut p, &[1.0]), Err(CsnnError::LengthMismatch { .. })));
        assert!(matches!(
            adam_step(&mut s, &mut p, &[f64::NAN, 0.0]),
            Err(CsnnError::NonFinite { what: "gradient", .. })
        ));
        assert_eq!(s.step(), 0);
    }

    #[test]
    fn adam_minimizes_convex_quadratic() {
        // f(w) = ½ wᵀ diag(d) w − bᵀ w
        let d = [1.0, 4.0, 0.25, 9.0];
        let b = [1.0, -2.0, 0.5, 3.0];
        let grad = |w: &[f64]| -> Vec<f64> { w.iter().zip(d.iter().zip(&b)).map(|(w, (d, b))| d * w - b).collect() };
        let norm = |g: &[f64]| g.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut w = vec![0.0; 4];
        let g0 = norm(&grad(&w));
        let mut s = AdamState::new(4, 0.1);
        let mut sched = PlateauScheduler::new(0.1, 0.7, 50, 0.0).unwrap();
        for _ in 0..20000 {
            let g = grad(&w);
            let loss: f64 = w.iter().zip(d.iter().zip(&b)).map(|(w, (d, b))| 0.5 * d * w * w - b * w).sum();
            s.set_lr(sched.observe(loss).unwrap());
            adam_step(&mut s, &mut w, &g).unwrap();
        }
        assert!(norm(&grad(&w)) < 1e-6 * g0, "{:e}", norm(&grad(&w)));
    }

    #[test]
    fn scheduler_examples() {
        let mut s = PlateauScheduler::new(0.1, 0.7, 5, 0.0).unwrap();
        for i in 0..50 {
            assert_eq!(s.observe(10.0 - i as f64).unwrap(), 0.1);
        }

        let mut s = PlateauScheduler::new(0.1, 0.7, 5, 0.0).unwrap();
        s.observe(1.0).unwrap();
        for _ in 0..5 {
            s.observe(1.0).unwrap();
        }
        assert!((s.lr() - 0.07).abs() < 1e-15);
        for _ in 0..5 {
            s.observe(1.0).unwrap();
        }
        assert!((s.lr() - 0.049).abs() < 1e-15);

        assert!(PlateauScheduler::new(0.1, 1.5, 5, 0.0).is_err());
        assert!(s.observe(f64::INFINITY).is_err());
    }

    #[test]
    fn scheduler_floor_and_reduction_count() {
        for stall in [0usize, 3, 7, 20, 41] {
            let mut s = PlateauScheduler::new(1.0, 0.5, 4, 0.0).unwrap();
            s.observe(0.0).unwrap();
            let mut last = s.lr();
            for _ in 0..stall {
                let lr = s.observe(0.0).unwrap();
                assert!(lr <= last);
                last = lr;
            }
            let reductions = (s.lr().log2() / 0.5f64.log2()).round() as usize;
            assert_eq!(reductions, stall / 4);
        }
        let mut s = PlateauScheduler::new(1.0, 0.5, 1, 0.3).unwrap();
        for _ in 0..10 {
            s.observe(1.0).unwrap();
        }
        assert_eq!(s.lr(), 0.3);
    }

    #[test]
    fn five_point_examples() {
        assert_eq!(five_point_center([2.5; 4], 0.0, 0.1), 2.5);
        assert!((five_point_center([0.0; 4], 4.0, 0.01) - 1e-4).abs() < 1e-18);

        let spec = catalog("poisson2d_disk").unwrap();
        let h = 1e-3;
        let neighbors = [[h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]].map(|q| spec.exact_solution(&q));
        let u0 = five_point_center(neighbors, spec.forcing_physical(&[0.0, 0.0]), h);
        assert!((u0 - spec.exact_solution(&[0.0, 0.0])).abs() < 1e-5);
    }

    #[test]
    fn correction_is_idempotent_at_fixed_point() {
        let spec = catalog("poisson2d_disk").unwrap();
        let policy = CorrectionPolicy { h: 1e-2, ..Default::default() };
        let mut model = spec.zero_model(6, 9).unwrap();
        model.randomize(3, 0.1);
        // the correction is affine in u0: F(u) = a u + b
        model.set_u0(0.0).unwrap();
        let b = u0_correction(&policy, &model, &spec).unwrap();
        model.set_u0(1.0).unwrap();
        let a = u0_correction(&policy, &model, &spec).unwrap() - b;
        model.set_u0(b / (1.0 - a)).unwrap();
        let first = u0_correction(&policy, &model, &spec).unwrap();
        model.set_u0(first).unwrap();
        let second = u0_correction(&policy, &model, &spec).unwrap();
        assert!((second - first).abs() < 1e-12, "{:e}", second - first);
    }

    #[test]
    fn correction_errors() {
        let spec = catalog("poisson2d_disk").unwrap();
        let model = spec.zero_model(6, 9).unwrap();
        let far = CorrectionPolicy { h: 1.5, ..Default::default() };
        assert!(matches!(u0_correction(&far, &model, &spec), Err(CsnnError::StencilOutsideDomain { .. })));
        let rect = catalog("poisson2d_rect").unwrap();
        let m = rect.zero_model(6, 1).unwrap();
        assert!(matches!(
            u0_correction(&CorrectionPolicy::default(), &m, &rect),
            Err(CsnnError::MissingU0)
        ));
        assert!(CorrectionPolicy { interval: 0, ..Default::default() }.validate().is_err());
        let p = CorrectionPolicy { threshold: 1000, interval: 100, h: 1e-3 };
        assert!(!p.due(900) && p.due(1000) && !p.due(1050) && p.due(1100));
    }
}
