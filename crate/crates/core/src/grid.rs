use crate::error::{Error, Result};
use nalgebra::DVector;

/// Coordinate frame a grid lives in. The cylindrical frame is the fixed
/// reference interval [0,1]; a physical frame covers [0, length] where
/// length is usually the current front position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame {
    Cylindrical,
    Physical { length: f64 },
}

/// Uniform grid with nodes x_i = i * h. Both frames always use the same
/// node count so switching frames is a relabeling, never an interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n_nodes: usize,
    h: f64,
    frame: Frame,
}

impl Grid {
    pub fn cylindrical(n_nodes: usize) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::GridTooSmall(n_nodes));
        }
        Ok(Grid {
            n_nodes,
            h: 1.0 / (n_nodes - 1) as f64,
            frame: Frame::Cylindrical,
        })
    }

    pub fn physical(n_nodes: usize, length: f64) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::GridTooSmall(n_nodes));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::BadLength(length));
        }
        Ok(Grid {
            n_nodes,
            h: length / (n_nodes - 1) as f64,
            frame: Frame::Physical { length },
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn length(&self) -> f64 {
        match self.frame {
            Frame::Cylindrical => 1.0,
            Frame::Physical { length } => length,
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i < self.n_nodes);
        i as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes).map(|i| self.node(i))
    }
}

/// Boundary tag at x = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcLeft {
    NeumannZero,
    Free,
}

/// Boundary tag at the right end (the front in physical coordinates).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcRight {
    DirichletZero,
    Free,
}

/// Nodal samples of a scalar function on a grid, with boundary tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: DVector<f64>,
    bc_left: BcLeft,
    bc_right: BcRight,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>, bc_left: BcLeft, bc_right: BcRight) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::FieldLengthMismatch {
                values: values.len(),
                nodes: grid.n_nodes(),
            });
        }
        Ok(Field {
            grid,
            values: DVector::from_vec(values),
            bc_left,
            bc_right,
        })
    }

    pub fn from_fn(
        grid: Grid,
        f: impl Fn(f64) -> f64,
        bc_left: BcLeft,
        bc_right: BcRight,
    ) -> Self {
        let values = DVector::from_iterator(grid.n_nodes(), grid.nodes().map(f));
        Field {
            grid,
            values,
            bc_left,
            bc_right,
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.n_nodes();
        Field {
            grid,
            values: DVector::zeros(n),
            bc_left: BcLeft::NeumannZero,
            bc_right: BcRight::DirichletZero,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn bc_left(&self) -> BcLeft {
        self.bc_left
    }

    pub fn bc_right(&self) -> BcRight {
        self.bc_right
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Trapezoid integral over the grid.
    pub fn trapezoid(&self) -> f64 {
        let n = self.len();
        let h = self.grid.spacing();
        let mut acc = 0.5 * (self.values[0] + self.values[n - 1]);
        for i in 1..n - 1 {
            acc += self.values[i];
        }
        acc * h
    }

    /// Rebuilds the field on another grid with the same node count.
    pub(crate) fn relabel(&self, grid: Grid) -> Result<Self> {
        if grid.n_nodes() != self.grid.n_nodes() {
            return Err(Error::NodeCountMismatch(grid.n_nodes(), self.grid.n_nodes()));
        }
        Ok(Field {
            grid,
            values: self.values.clone(),
            bc_left: self.bc_left,
            bc_right: self.bc_right,
        })
    }

    pub fn with_values(&self, values: DVector<f64>) -> Self {
        debug_assert_eq!(values.len(), self.grid.n_nodes());
        Field {
            grid: self.grid.clone(),
            values,
            bc_left: self.bc_left,
            bc_right: self.bc_right,
        }
    }
}
