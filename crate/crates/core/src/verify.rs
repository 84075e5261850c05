//! Error norms, test grids, convergence sweeps and the least-squares oracle.
//!
//! Every catalog residual is affine in the network weights and the center
//! value, so the collocation problem is an ordinary linear least-squares
//! system. The oracle assembles it row by row from pointwise weight
//! gradients and solves it by column-pivoted QR, independently of the
//! tensor-product machinery the trainer uses.

use std::time::Instant;

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::FamilyKind;
use crate::config::TrainConfig;
use crate::error::{CsnnError, Result};
use crate::grid::{GridBasis, TensorGrid};
use crate::model::{MultiIndex, TensorModel};
use crate::problems::ProblemSpec;
use crate::trainer::{build_sample_set, train, Collocation, SampleSet};

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub linf: f64,
    pub l2: f64,
    pub rel_l2: f64,
    pub count: usize,
    pub grid: String,
}

/// Uniform grid with `cells + 1` points on non-periodic axes and `cells`
/// right-open points on periodic ones.
pub fn test_grid(spec: &ProblemSpec, cells: usize) -> Result<TensorGrid> {
    if cells == 0 {
        return Err(CsnnError::Empty("test grid"));
    }
    let axes = spec
        .axes()
        .iter()
        .map(|a| match a.kind {
            FamilyKind::ChebyshevBc => (0..=cells).map(|i| -1.0 + 2.0 * i as f64 / cells as f64).collect(),
            FamilyKind::Fourier => (0..cells).map(|i| -1.0 + 2.0 * i as f64 / cells as f64).collect(),
        })
        .collect();
    TensorGrid::new(axes)
}

fn describe(grid: &TensorGrid) -> String {
    grid.shape().iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x")
}

/// Predicted and exact values at every point of a test grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEvaluation {
    pub grid: TensorGrid,
    pub predicted: Vec<f64>,
    pub exact: Vec<f64>,
}

pub fn evaluate_grid(spec: &ProblemSpec, model: &TensorModel, grid: &TensorGrid) -> Result<GridEvaluation> {
    if grid.is_empty() {
        return Err(CsnnError::Empty("test grid"));
    }
    let network = GridBasis::new(model.families(), grid)?.apply(model.weights(), MultiIndex::zero(grid.dims()).orders());
    let mut predicted = Vec::with_capacity(grid.len());
    let mut exact = Vec::with_capacity(grid.len());
    for (p, n) in grid.points().zip(network) {
        predicted.push(spec.lifting_value(&p, model.u0())? + n);
        exact.push(spec.exact_solution(&spec.map().map_point(&p)));
    }
    Ok(GridEvaluation {
        grid: grid.clone(),
        predicted,
        exact,
    })
}

impl GridEvaluation {
    pub fn report(&self) -> ErrorReport {
        let (pairs, grid) = (self.predicted.iter().zip(&self.exact), describe(&self.grid));
        norms(pairs.map(|(p, e)| (p - e, *e)), grid)
    }
}

fn norms(samples: impl Iterator<Item = (f64, f64)>, grid: String) -> ErrorReport {
    let (mut linf, mut sq, mut exact_sq, mut count) = (0.0f64, 0.0, 0.0, 0usize);
    for (e, u) in samples {
        linf = linf.max(e.abs());
        sq += e * e;
        exact_sq += u * u;
        count += 1;
    }
    ErrorReport {
        linf,
        l2: (sq / count as f64).sqrt(),
        rel_l2: if exact_sq > 0.0 { sq.sqrt() / exact_sq.sqrt() } else { f64::INFINITY },
        count,
        grid,
    }
}

/// Norms of `lifting + model − u*∘map` over `grid`.
pub fn error_norms(spec: &ProblemSpec, model: &TensorModel, grid: &TensorGrid) -> Result<ErrorReport> {
    Ok(evaluate_grid(spec, model, grid)?.report())
}

/// Norms from raw `(error, exact)` pairs.
pub fn error_norms_from(errors: &[f64], exact: &[f64]) -> Result<ErrorReport> {
    if errors.is_empty() {
        return Err(CsnnError::Empty("error sample"));
    }
    if errors.len() != exact.len() {
        return Err(CsnnError::LengthMismatch {
            expected: errors.len(),
            got: exact.len(),
        });
    }
    Ok(norms(errors.iter().copied().zip(exact.iter().copied()), errors.len().to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub report: ErrorReport,
    pub final_loss: f64,
    pub seconds: f64,
}

/// One train and evaluate run per order in `n_list`.
pub fn convergence_study(spec: &ProblemSpec, n_list: &[usize], template: &TrainConfig) -> Result<Vec<SweepRow>> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CsnnError::Validation {
            field: "N_list".into(),
            message: "must be strictly increasing and non-empty".into(),
        });
    }
    let grid = test_grid(spec, template.grid_cells)?;
    n_list
        .iter()
        .map(|&n| {
            let start = Instant::now();
            let cfg = template.with_n(n);
            let (model, run) = train(spec, &cfg)?;
            let report = error_norms(spec, &model, &grid)?;
            Ok(SweepRow {
                n,
                report,
                final_loss: run.final_loss,
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub model: TensorModel,
    pub loss: f64,
    pub rank: usize,
    pub columns: usize,
    /// Set when the collocation matrix is numerically rank deficient.
    pub warning: Option<String>,
}

const RANK_TOLERANCE: f64 = 1e-13;
const LINEARITY_TOLERANCE: f64 = 1e-10;

/// Residual matrix `R` and right-hand side `b` with `residual = R θ − b`,
/// where `θ` is the weights followed by `u0` when present.
pub fn assemble_system(spec: &ProblemSpec, template: &TensorModel, samples: &SampleSet) -> Result<(Mat<f64>, Vec<f64>)> {
    let indices = spec.operator_indices();
    let n_weights = template.weights().len();
    let columns = n_weights + usize::from(spec.has_u0());
    let u0 = spec.has_u0().then_some(0.0);
    let mut r = Mat::<f64>::zeros(samples.len(), columns);
    let mut b = Vec::with_capacity(samples.len());
    for (row, p) in samples.points().enumerate() {
        let coeffs = spec.operator_coeffs(&p)?;
        for (idx, c) in indices.iter().zip(&coeffs) {
            for (col, g) in template.weight_gradient(&p, idx)?.into_iter().enumerate() {
                r[(row, col)] += c * g;
            }
        }
        if let Some(jet) = spec.lifting_u0_jet(&p) {
            r[(row, n_weights)] = spec.apply_operator(&p, &jet)?;
        }
        let lifting = spec.lifting_jet(&p, u0)?;
        b.push(spec.forcing(&p) - spec.apply_operator(&p, &lifting)?);
    }
    Ok((r, b))
}

/// Checks `r(a + b) − r(a) − r(b) + r(0) = 0` at random interior points.
pub fn superposition_probe(spec: &ProblemSpec, template: &TensorModel, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zero = template.clone();
    zero.set_weights(vec![0.0; template.weights().len()])?;
    if zero.u0().is_some() {
        zero.set_u0(0.0)?;
    }
    let (mut a, mut b) = (zero.clone(), zero.clone());
    a.randomize(rng.random(), 1.0);
    b.randomize(rng.random(), 1.0);
    let mut sum = zero.clone();
    let w: Vec<f64> = a.weights().iter().zip(b.weights()).map(|(x, y)| x + y).collect();
    sum.set_weights(w)?;
    if let (Some(x), Some(y)) = (a.u0(), b.u0()) {
        sum.set_u0(x + y)?;
    }
    let mut worst = 0.0f64;
    for _ in 0..8 {
        let p: Vec<f64> = (0..spec.dims()).map(|_| rng.random_range(-0.95..0.95)).collect();
        let [rs, ra, rb, r0] = [&sum, &a, &b, &zero].map(|m| spec.residual(m, &p));
        let (rs, ra, rb, r0) = (rs?, ra?, rb?, r0?);
        let scale = 1.0 + rs.abs() + ra.abs() + rb.abs() + r0.abs();
        worst = worst.max((rs - ra - rb + r0).abs() / scale);
    }
    if worst > LINEARITY_TOLERANCE {
        return Err(CsnnError::Nonlinear { defect: worst });
    }
    Ok(worst)
}

fn mat_vec(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum())
        .collect()
}

/// Least-squares collocation solution over `samples`; `template` fixes the
/// basis families and whether a center value is present.
pub fn least_squares_oracle(spec: &ProblemSpec, template: &TensorModel, samples: &SampleSet) -> Result<OracleSolution> {
    superposition_probe(spec, template, 0x5eed)?;
    let (r, b) = assemble_system(spec, template, samples)?;
    let (rows, columns) = (r.nrows(), r.ncols());
    faer::set_global_parallelism(faer::Par::Seq);

    let qr = r.col_piv_qr();
    let diag = qr.thin_R();
    let lead = diag[(0, 0)].abs();
    let rank = (0..rows.min(columns))
        .filter(|&i| diag[(i, i)].abs() > RANK_TOLERANCE * lead.max(f64::MIN_POSITIVE))
        .count();
    let (theta, warning) = if rank == columns && rows >= columns {
        let rhs = Mat::from_fn(rows, 1, |i, _| b[i]);
        let x = qr.solve_lstsq(&rhs);
        ((0..columns).map(|i| x[(i, 0)]).collect::<Vec<_>>(), None)
    } else {
        // minimum-norm solution through the pseudoinverse
        let svd = r.thin_svd().map_err(|e| CsnnError::Singular(format!("SVD failed: {e:?}")))?;
        let s = svd.S().column_vector();
        let cutoff = RANK_TOLERANCE * s[0];
        let (u, v) = (svd.U(), svd.V());
        let mut x = vec![0.0; columns];
        let mut effective = 0;
        for k in 0..s.nrows() {
            if s[k] <= cutoff {
                continue;
            }
            effective += 1;
            let coef: f64 = (0..rows).map(|i| u[(i, k)] * b[i]).sum::<f64>() / s[k];
            for (j, xj) in x.iter_mut().enumerate() {
                *xj += coef * v[(j, k)];
            }
        }
        let msg = format!("collocation matrix is rank deficient: effective rank {effective} of {columns}");
        (x, Some(msg))
    };

    let mut model = template.clone();
    let n_weights = template.weights().len();
    model.set_weights(theta[..n_weights].to_vec())?;
    if spec.has_u0() {
        model.set_u0(theta[n_weights])?;
    }
    let residual: Vec<f64> = mat_vec(&r, &theta).iter().zip(&b).map(|(x, y)| x - y).collect();
    let loss = residual.iter().map(|v| v * v).sum::<f64>() / rows as f64;
    Ok(OracleSolution {
        model,
        loss,
        rank,
        columns,
        warning,
    })
}

/// Oracle on the sample set and families `cfg` describes.
pub fn oracle_for_config(spec: &ProblemSpec, cfg: &TrainConfig) -> Result<OracleSolution> {
    let template = spec.zero_model(cfg.n, cfg.fourier_size())?;
    let samples = build_sample_set(spec, cfg)?;
    least_squares_oracle(spec, &template, &samples)
}

/// Training loss of `model` on the sample set `cfg` describes.
pub fn collocation_loss(spec: &ProblemSpec, model: &TensorModel, cfg: &TrainConfig) -> Result<f64> {
    let samples = build_sample_set(spec, cfg)?;
    Ok(Collocation::new(spec, model, &samples)?.loss(model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::problems::catalog;
    use crate::trainer::loss_gradient;

    fn cfg(name: &str, extra: &str) -> TrainConfig {
        parse_config(&format!("problem = {name}\n{extra}")).unwrap()
    }

    #[test]
    fn norm_examples() {
        let r = error_norms_from(&[0.5], &[2.0]).unwrap();
        assert_eq!((r.linf, r.l2), (0.5, 0.5));
        let r = error_norms_from(&[0.3, -0.4], &[1.0, 1.0]).unwrap();
        assert_eq!(r.linf, 0.4);
        assert!((r.l2 - 0.125f64.sqrt()).abs() < 1e-15);
        assert!((r.rel_l2 - 0.125f64.sqrt()).abs() < 1e-15);
        assert!(error_norms_from(&[], &[]).is_err());
    }

    #[test]
    fn grid_examples() {
        assert_eq!(test_grid(&catalog("robin1d").unwrap(), 500).unwrap().len(), 501);
        assert_eq!(test_grid(&catalog("poisson2d_rect").unwrap(), 300).unwrap().shape(), vec![301, 301]);
        assert_eq!(test_grid(&catalog("poisson4d").unwrap(), 11).unwrap().len(), 12usize.pow(4));
        let annulus = test_grid(&catalog("poisson2d_annulus").unwrap(), 4).unwrap();
        assert_eq!(annulus.axes()[1], vec![-1.0, -0.5, 0.0, 0.5]);
    }

    #[test]
    fn exact_model_has_zero_error_on_faces() {
        // the lifting alone reproduces u* on non-periodic faces
        let spec = catalog("poisson2d_rect").unwrap();
        let model = spec.zero_model(6, 1).unwrap();
        let grid = TensorGrid::new(vec![vec![-1.0, 1.0], vec![-1.0, -0.3, 0.4, 1.0]]).unwrap();
        let r = error_norms(&spec, &model, &grid).unwrap();
        assert!(r.linf < 1e-14);
        assert!(r.l2 <= r.linf);
    }

    fn one_hot_forcing(q: &[f64]) -> f64 {
        // −Δ Π (2 − 2x_i²), the product of the first Dirichlet members
        let phi: Vec<f64> = q.iter().map(|x| 2.0 - 2.0 * x * x).collect();
        (0..4)
            .map(|i| 4.0 * (0..4).filter(|&j| j != i).map(|j| phi[j]).product::<f64>())
            .sum()
    }

    #[test]
    fn oracle_recovers_representable_solution() {
        let spec = catalog("poisson4d").unwrap().with_forcing(one_hot_forcing);
        let c = cfg("poisson4d", "N = 5");
        let template = spec.zero_model(5, 1).unwrap();
        let samples = build_sample_set(&spec, &c).unwrap();
        let sol = least_squares_oracle(&spec, &template, &samples).unwrap();
        assert_eq!(sol.rank, sol.columns);
        assert!(sol.warning.is_none());
        for (i, w) in sol.model.weights().iter().enumerate() {
            let expected = if i == 0 { 1.0 } else { 0.0 };
            assert!((w - expected).abs() < 1e-10, "{i}: {w}");
        }
        assert!(sol.loss < 1e-20);
        // the trainer's loss agrees at the exact representation
        let mut exact = template.clone();
        exact.weights_mut()[0] = 1.0;
        assert!(Collocation::new(&spec, &exact, &samples).unwrap().loss(&exact) < 1e-16);
    }

    #[test]
    fn gradient_vanishes_at_oracle_solution() {
        for name in ["robin1d", "poisson2d_rect", "poisson2d_annulus", "poisson2d_disk", "elliptic3d_cyl"] {
            let spec = catalog(name).unwrap();
            let c = cfg(name, "N = 6\nuniform_samples = 16");
            let sol = oracle_for_config(&spec, &c).unwrap();
            let samples = build_sample_set(&spec, &c).unwrap();
            let g = loss_gradient(&spec, &sol.model, &samples).unwrap();
            let norm = (g.weights.iter().map(|v| v * v).sum::<f64>() + g.u0.unwrap_or(0.0).powi(2)).sqrt();
            let g0 = loss_gradient(&spec, &spec.zero_model(6, c.fourier_size()).unwrap(), &samples).unwrap();
            let norm0 = g0.weights.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm < 1e-9 * norm0.max(1.0), "{name}: {norm:e}");
        }
    }

    #[test]
    fn robin_oracle_matches_monomial_collocation() {
        // reference: degree-N Chebyshev collocation with the two Robin rows
        // appended, solved densely in numpy, L∞ over 501 points
        let reference = [(10, 4.322e-2), (12, 1.702e-3), (14, 5.114e-5)];
        let spec = catalog("robin1d").unwrap();
        let grid = test_grid(&spec, 500).unwrap();
        for (n, expected) in reference {
            let sol = oracle_for_config(&spec, &cfg("robin1d", &format!("N = {n}"))).unwrap();
            let r = error_norms(&spec, &sol.model, &grid).unwrap();
            assert!((r.linf - expected).abs() < 1e-3 * expected, "N={n}: {:e}", r.linf);
        }
    }

    #[test]
    fn oracle_decays_geometrically() {
        for (name, ns) in [("robin1d", vec![6, 8, 10, 12, 14]), ("poisson2d_rect", vec![6, 8, 10])] {
            let spec = catalog(name).unwrap();
            let grid = test_grid(&spec, 100).unwrap();
            let errs: Vec<f64> = ns
                .iter()
                .map(|&n| {
                    let sol = oracle_for_config(&spec, &cfg(name, &format!("N = {n}"))).unwrap();
                    error_norms(&spec, &sol.model, &grid).unwrap().linf
                })
                .collect();
            assert!(errs.windows(2).all(|w| w[1] <= 0.5 * w[0]), "{name}: {errs:?}");
        }
    }

    #[test]
    fn superposition_probe_passes_for_catalog() {
        for spec in crate::problems::all() {
            let template = spec.zero_model(5, 7).unwrap();
            assert!(superposition_probe(&spec, &template, 1).unwrap() < 1e-10);
        }
    }

    #[test]
    fn rank_deficient_system_is_flagged() {
        // more Fourier members than uniform samples on the periodic axis
        let spec = catalog("poisson2d_annulus").unwrap();
        let c = cfg("poisson2d_annulus", "N = 5\nuniform_samples = 4\nfourier_size = 9");
        let template = spec.zero_model(5, 9).unwrap();
        let samples = build_sample_set(&spec, &c).unwrap();
        let sol = least_squares_oracle(&spec, &template, &samples).unwrap();
        assert!(sol.rank < sol.columns);
        assert!(sol.warning.as_deref().is_some_and(|w| w.contains("rank deficient")));
    }

    #[test]
    fn sweep_rows_follow_n_order() {
        let spec = catalog("robin1d").unwrap();
        let c = cfg("robin1d", "iterations = 50");
        let rows = convergence_study(&spec, &[6], &c).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n, 6);
        assert_eq!(rows[0].report.count, 501);
        assert!(convergence_study(&spec, &[8, 6], &c).is_err());
    }
}
