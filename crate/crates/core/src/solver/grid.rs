//! Tensor-product grids on boxes and centered finite-difference stencils.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Uniform grid on `[lo_0, hi_0] x ... x [lo_{n-1}, hi_{n-1}]`, flattened
/// row-major with axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub h: Vec<f64>,
    pub dims: Vec<usize>,
    strides: Vec<usize>,
}

impl Grid {
    pub fn new(bounds: &[[f64; 2]], h: &[f64]) -> Result<Self> {
        let n = bounds.len();
        if n == 0 || h.len() != n {
            return Err(Error::InvalidInput("box and mesh width must have the same dimension".into()));
        }
        let mut dims = Vec::with_capacity(n);
        for (a, (b, &ha)) in bounds.iter().zip(h).enumerate() {
            let extent = b[1] - b[0];
            if !(extent > 0.0) || !(ha > 0.0) {
                return Err(Error::InvalidInput(format!("axis {a}: need hi > lo and h > 0")));
            }
            let cells = extent / ha;
            let m = cells.round();
            if (cells - m).abs() > 1e-12 * m.max(1.0) {
                return Err(Error::InvalidInput(format!("axis {a}: h = {ha} does not divide the extent {extent}")));
            }
            if m < 2.0 {
                return Err(Error::InvalidInput(format!("axis {a}: need at least one interior node")));
            }
            dims.push(m as usize + 1);
        }
        let mut strides = vec![1; n];
        for a in (0..n.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        Ok(Self {
            lo: bounds.iter().map(|b| b[0]).collect(),
            hi: bounds.iter().map(|b| b[1]).collect(),
            h: h.to_vec(),
            dims,
            strides,
        })
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut rem = flat;
        self.strides
            .iter()
            .map(|&s| {
                let i = rem / s;
                rem %= s;
                i
            })
            .collect()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn point(&self, flat: usize) -> DVector<f64> {
        let idx = self.multi_index(flat);
        DVector::from_iterator(self.ndim(), (0..self.ndim()).map(|a| self.lo[a] + idx[a] as f64 * self.h[a]))
    }

    pub fn is_boundary(&self, flat: usize) -> bool {
        self.multi_index(flat).iter().zip(&self.dims).any(|(&i, &d)| i == 0 || i + 1 == d)
    }

    pub fn interior(&self) -> Vec<usize> {
        (0..self.len()).filter(|&f| !self.is_boundary(f)).collect()
    }

    pub fn boundary(&self) -> Vec<usize> {
        (0..self.len()).filter(|&f| self.is_boundary(f)).collect()
    }

    /// Flat index of the neighbour `flat + sum_a shift_a e_a`; the caller
    /// guarantees it stays on the grid (true for unit shifts of interior nodes).
    pub fn shifted(&self, flat: usize, shifts: &[(usize, isize)]) -> usize {
        let mut f = flat as isize;
        for &(axis, d) in shifts {
            f += d * self.strides[axis] as isize;
        }
        f as usize
    }

    /// Centered gradient and Hessian at an interior node.
    pub fn derivatives(&self, u: &[f64], flat: usize) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.ndim();
        let mut p = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        let c = u[flat];
        for a in 0..n {
            let up = u[self.shifted(flat, &[(a, 1)])];
            let dn = u[self.shifted(flat, &[(a, -1)])];
            p[a] = (up - dn) / (2.0 * self.h[a]);
            hess[(a, a)] = (up - 2.0 * c + dn) / (self.h[a] * self.h[a]);
            for b in (a + 1)..n {
                let pp = u[self.shifted(flat, &[(a, 1), (b, 1)])];
                let pm = u[self.shifted(flat, &[(a, 1), (b, -1)])];
                let mp = u[self.shifted(flat, &[(a, -1), (b, 1)])];
                let mm = u[self.shifted(flat, &[(a, -1), (b, -1)])];
                let v = (pp - pm - mp + mm) / (4.0 * self.h[a] * self.h[b]);
                hess[(a, b)] = v;
                hess[(b, a)] = v;
            }
        }
        (p, hess)
    }

    /// Stencil weights `(node, d value / d u_node)` of the Hessian entry
    /// `(a, b)` at an interior node.
    pub fn hessian_stencil(&self, flat: usize, a: usize, b: usize) -> Vec<(usize, f64)> {
        if a == b {
            let w = 1.0 / (self.h[a] * self.h[a]);
            vec![(self.shifted(flat, &[(a, 1)]), w), (flat, -2.0 * w), (self.shifted(flat, &[(a, -1)]), w)]
        } else {
            let w = 1.0 / (4.0 * self.h[a] * self.h[b]);
            vec![
                (self.shifted(flat, &[(a, 1), (b, 1)]), w),
                (self.shifted(flat, &[(a, 1), (b, -1)]), -w),
                (self.shifted(flat, &[(a, -1), (b, 1)]), -w),
                (self.shifted(flat, &[(a, -1), (b, -1)]), w),
            ]
        }
    }

    /// Stencil weights of the centered first derivative along `a`.
    pub fn gradient_stencil(&self, flat: usize, a: usize) -> [(usize, f64); 2] {
        let w = 1.0 / (2.0 * self.h[a]);
        [(self.shifted(flat, &[(a, 1)]), w), (self.shifted(flat, &[(a, -1)]), -w)]
    }
}
