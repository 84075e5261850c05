//! Tensor-product point sets and per-axis basis matrices.
//!
//! Collocation sets and test grids are products of per-axis node lists, so
//! applying a derivative of the expansion to every grid point factors into
//! one small matrix product per axis.

use crate::basis::BasisFamily;
use crate::error::{CsnnError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    axes: Vec<Vec<f64>>,
}

impl TensorGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() || axes.iter().any(Vec::is_empty) {
            return Err(CsnnError::Empty("grid axis"));
        }
        Ok(Self { axes })
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point with flat (row-major, last axis fastest) index `flat`.
    pub fn point(&self, mut flat: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            p[k] = axis[flat % axis.len()];
            flat /= axis.len();
        }
        p
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }
}

/// Applies `matrix` (`rows × shape[axis]`, row-major) along `axis` of a
/// row-major tensor.
pub(crate) fn mode_product(
    tensor: &[f64],
    shape: &[usize],
    axis: usize,
    matrix: &[f64],
    rows: usize,
) -> (Vec<f64>, Vec<usize>) {
    let cols = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; outer * rows * inner];
    for o in 0..outer {
        let src = &tensor[o * cols * inner..(o + 1) * cols * inner];
        let dst = &mut out[o * rows * inner..(o + 1) * rows * inner];
        for i in 0..rows {
            let row = &matrix[i * cols..(i + 1) * cols];
            let d = &mut dst[i * inner..(i + 1) * inner];
            for (j, &m) in row.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let s = &src[j * inner..(j + 1) * inner];
                for (a, b) in d.iter_mut().zip(s) {
                    *a += m * b;
                }
            }
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape[axis] = rows;
    (out, new_shape)
}

fn transpose(matrix: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = matrix[i * cols + j];
        }
    }
    out
}

/// Basis values and derivatives of every family on every grid axis.
#[derive(Debug, Clone)]
pub struct GridBasis {
    grid_shape: Vec<usize>,
    sizes: Vec<usize>,
    // [axis][order] -> (nodes × size, size × nodes)
    matrices: Vec<[(Vec<f64>, Vec<f64>); 3]>,
}

impl GridBasis {
    pub fn new(families: &[BasisFamily], grid: &TensorGrid) -> Result<Self> {
        if families.len() != grid.dims() {
            return Err(CsnnError::DimensionMismatch {
                expected: families.len(),
                got: grid.dims(),
            });
        }
        let mut matrices = Vec::with_capacity(families.len());
        for (fam, nodes) in families.iter().zip(grid.axes()) {
            let mk = |order| -> Result<(Vec<f64>, Vec<f64>)> {
                let m = fam.matrix(nodes, order)?;
                let t = transpose(&m, nodes.len(), fam.size());
                Ok((m, t))
            };
            matrices.push([mk(0)?, mk(1)?, mk(2)?]);
        }
        Ok(Self {
            grid_shape: grid.shape(),
            sizes: families.iter().map(BasisFamily::size).collect(),
            matrices,
        })
    }

    pub fn grid_len(&self) -> usize {
        self.grid_shape.iter().product()
    }

    pub fn weight_len(&self) -> usize {
        self.sizes.iter().product()
    }

    /// `∂^orders` of the expansion with `weights` at every grid point.
    pub fn apply(&self, weights: &[f64], orders: &[usize]) -> Vec<f64> {
        let mut data = weights.to_vec();
        let mut shape = self.sizes.clone();
        for (axis, &order) in orders.iter().enumerate() {
            let (m, _) = &self.matrices[axis][order];
            let (d, s) = mode_product(&data, &shape, axis, m, self.grid_shape[axis]);
            data = d;
            shape = s;
        }
        data
    }

    /// Adjoint of [`GridBasis::apply`]: maps grid values back to weight space.
    pub fn apply_transpose(&self, values: &[f64], orders: &[usize]) -> Vec<f64> {
        let mut data = values.to_vec();
        let mut shape = self.grid_shape.clone();
        for (axis, &order) in orders.iter().enumerate() {
            let (_, mt) = &self.matrices[axis][order];
            let (d, s) = mode_product(&data, &shape, axis, mt, self.sizes[axis]);
            data = d;
            shape = s;
        }
        data
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_family, BoundaryCondition, FamilyKind};

    #[test]
    fn point_ordering_is_row_major() {
        let g = TensorGrid::new(vec![vec![0.0, 1.0], vec![10.0, 20.0, 30.0]]).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.point(0), vec![0.0, 10.0]);
        assert_eq!(g.point(2), vec![0.0, 30.0]);
        assert_eq!(g.point(3), vec![1.0, 10.0]);
        assert!(TensorGrid::new(vec![vec![]]).is_err());
    }

    #[test]
    fn transpose_is_adjoint() {
        let fams = vec![
            build_family(FamilyKind::ChebyshevBc, 3, BoundaryCondition::homogeneous_dirichlet()).unwrap(),
            build_family(FamilyKind::Fourier, 5, BoundaryCondition::periodic()).unwrap(),
        ];
        let grid = TensorGrid::new(vec![vec![-0.5, 0.1, 0.6, 0.9], vec![-1.0, -0.3, 0.2, 0.5, 0.8, 0.95]]).unwrap();
        let gb = GridBasis::new(&fams, &grid).unwrap();
        let w: Vec<f64> = (0..15).map(|i| (i as f64 * 0.37).sin()).collect();
        let v: Vec<f64> = (0..24).map(|i| (i as f64 * 0.91).cos()).collect();
        for orders in [[0, 0], [1, 0], [2, 1], [0, 2]] {
            let aw = gb.apply(&w, &orders);
            let atv = gb.apply_transpose(&v, &orders);
            let lhs: f64 = aw.iter().zip(&v).map(|(a, b)| a * b).sum();
            let rhs: f64 = w.iter().zip(&atv).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        }
    }
}
