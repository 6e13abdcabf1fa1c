//! Uniform grid with ghost slots and the centered difference operators.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform discretization of `[a, b]` into `j_count` cells, with ghost
/// nodes at j = -1 and j = J + 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<S> {
    a: S,
    b: S,
    j_count: usize,
    dx: S,
}

impl<S: Scalar> Grid<S> {
    pub fn a(&self) -> S {
        self.a
    }

    pub fn b(&self) -> S {
        self.b
    }

    /// Number of cells J; nodes run j = -1 ..= J + 1.
    pub fn j_count(&self) -> usize {
        self.j_count
    }

    pub fn dx(&self) -> S {
        self.dx
    }

    /// Node coordinate. The physical endpoints are returned exactly, not
    /// as accumulated sums.
    pub fn node(&self, j: isize) -> S {
        if j == 0 {
            self.a
        } else if j == self.j_count as isize {
            self.b
        } else {
            self.a + S::from_isize(j).unwrap() * self.dx
        }
    }

    /// Interior node coordinates x_0 ..= x_J.
    pub fn interior_nodes(&self) -> Vec<S> {
        (0..=self.j_count as isize).map(|j| self.node(j)).collect()
    }
}

/// Build a grid over `[a, b]` with `j_count >= 4` cells.
pub fn build_grid<S: Scalar>(a: S, b: S, j_count: usize) -> Result<Grid<S>> {
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInterval {
            lo: a.to_f64().unwrap_or(f64::NAN),
            hi: b.to_f64().unwrap_or(f64::NAN),
        });
    }
    if j_count < 4 {
        return Err(Error::InvalidGridSize { j_count });
    }
    Ok(Grid {
        a,
        b,
        j_count,
        dx: (b - a) / S::of_usize(j_count),
    })
}

/// Potential values at one time level, ghosts included. Index j runs
/// -1 ..= J + 1; storage is contiguous with offset 1 so the stepping loop
/// is branch-free.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow<S> {
    pub(crate) vals: Vec<S>,
}

impl<S: Scalar> GridRow<S> {
    pub fn zeros(grid: &Grid<S>) -> Self {
        Self {
            vals: vec![S::zero(); grid.j_count + 3],
        }
    }

    /// Sample a function at every node, ghosts included.
    pub fn sample(grid: &Grid<S>, f: impl Fn(S) -> S) -> Self {
        let vals = (-1..=grid.j_count as isize + 1)
            .map(|j| f(grid.node(j)))
            .collect();
        Self { vals }
    }

    #[inline]
    pub fn at(&self, j: isize) -> S {
        self.vals[(j + 1) as usize]
    }

    #[inline]
    pub fn set(&mut self, j: isize, v: S) {
        self.vals[(j + 1) as usize] = v;
    }

    /// j of the first non-finite entry, if any.
    pub fn first_non_finite(&self) -> Option<isize> {
        self.vals
            .iter()
            .position(|v| !v.is_finite())
            .map(|i| i as isize - 1)
    }
}

/// First-order centered difference at node j (0 ..= J); ghosts must be
/// populated.
#[inline]
pub fn grad_centered<S: Scalar>(row: &GridRow<S>, grid: &Grid<S>, j: usize) -> S {
    assert!(j <= grid.j_count, "grad_centered: j = {j} outside 0..=J");
    (row.vals[j + 2] - row.vals[j]) / (S::two() * grid.dx)
}

/// Second-order centered difference at node j (0 ..= J).
#[inline]
pub fn lap_centered<S: Scalar>(row: &GridRow<S>, grid: &Grid<S>, j: usize) -> S {
    assert!(j <= grid.j_count, "lap_centered: j = {j} outside 0..=J");
    (row.vals[j + 2] + row.vals[j] - S::two() * row.vals[j + 1]) / (grid.dx * grid.dx)
}

/// Set the ghost slots so the centered gradient equals `c` at j = 0 and
/// `d` at j = J: U_{-1} = U_1 - 2 c dx, U_{J+1} = U_{J-1} + 2 d dx.
pub fn apply_ghosts<S: Scalar>(row: &mut GridRow<S>, grid: &Grid<S>, c: S, d: S) {
    let n = grid.j_count;
    row.vals[0] = row.vals[2] - S::two() * c * grid.dx;
    row.vals[n + 2] = row.vals[n] + S::two() * d * grid.dx;
}

/// Minimum of the discrete second derivative over the interior nodes.
pub fn min_lap<S: Scalar>(row: &GridRow<S>, grid: &Grid<S>) -> S {
    (0..=grid.j_count)
        .map(|j| lap_centered(row, grid, j))
        .fold(S::infinity(), S::min)
}
