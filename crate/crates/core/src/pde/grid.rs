use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Values beyond this magnitude mark a solver run as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// How grid indices map to coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// `nx` nodes spanning `[x0, x1]` including both ends; same for y.
    Nodal,
    /// x is periodic with `x_i = x0 + i (x1 - x0) / nx`; y is nodal.
    PeriodicX,
}

/// Scalar field on a rectangular grid, stored row-major: entry `(ix, iy)`
/// lives at `iy * nx + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
    domain: [f64; 4],
    layout: Layout,
}

impl GridFunction {
    pub fn new(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        Self::with_domain(nx, ny, values, [0.0, 1.0, 0.0, 1.0], Layout::Nodal)
    }

    /// `domain` is `[x0, x1, y0, y1]`.
    pub fn with_domain(nx: usize, ny: usize, values: Vec<f64>, domain: [f64; 4], layout: Layout) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(invalid("grid dimensions must be positive"));
        }
        if values.len() != nx * ny {
            return Err(invalid("value count does not match grid size"));
        }
        Ok(GridFunction { nx, ny, values, domain, layout })
    }

    pub fn zeros(nx: usize, ny: usize) -> Self {
        GridFunction { nx, ny, values: alloc::vec![0.0; nx * ny], domain: [0.0, 1.0, 0.0, 1.0], layout: Layout::Nodal }
    }

    /// Samples `f(x, y)` at the nodes of a nodal grid on the unit square.
    pub fn from_fn(nx: usize, ny: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut g = Self::zeros(nx, ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let (x, y) = (g.x(ix), g.y(iy));
                g.values[iy * nx + ix] = f(x, y);
            }
        }
        g
    }

    /// A same-shaped grid with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::with_domain(self.nx, self.ny, values, self.domain, self.layout)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn domain(&self) -> [f64; 4] {
        self.domain
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        self.values[iy * self.nx + ix] = v;
    }

    pub fn x(&self, ix: usize) -> f64 {
        let [x0, x1, _, _] = self.domain;
        match self.layout {
            Layout::Nodal if self.nx > 1 => x0 + (x1 - x0) * ix as f64 / (self.nx - 1) as f64,
            Layout::Nodal => x0,
            Layout::PeriodicX => x0 + (x1 - x0) * ix as f64 / self.nx as f64,
        }
    }

    pub fn y(&self, iy: usize) -> f64 {
        let [_, _, y0, y1] = self.domain;
        if self.ny > 1 {
            y0 + (y1 - y0) * iy as f64 / (self.ny - 1) as f64
        } else {
            y0
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Mean squared difference of two equally sized grids.
pub fn mse(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    if a.nx != b.nx || a.ny != b.ny {
        return Err(invalid("grid shapes differ"));
    }
    let s: f64 = a.values.iter().zip(&b.values).map(|(p, q)| (p - q) * (p - q)).sum();
    Ok(s / a.len() as f64)
}

/// Output of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub field: GridFunction,
    pub diverged: bool,
    pub solver_id: String,
}

impl SolverResult {
    /// Wraps `field`, clamping to `+-DIVERGENCE_BOUND` (NaN to the upper bound)
    /// and setting `diverged` when anything had to be clamped.
    pub fn new(mut field: GridFunction, solver_id: &str) -> Self {
        let mut diverged = false;
        for v in field.values.iter_mut() {
            if v.is_nan() {
                *v = DIVERGENCE_BOUND;
                diverged = true;
            } else if v.abs() > DIVERGENCE_BOUND {
                *v = v.signum() * DIVERGENCE_BOUND;
                diverged = true;
            }
        }
        SolverResult { field, diverged, solver_id: solver_id.into() }
    }

    /// A run that failed outright: every value set to the bound.
    pub fn failed(nx: usize, ny: usize, solver_id: &str) -> Self {
        let mut field = GridFunction::zeros(nx, ny);
        field.values.iter_mut().for_each(|v| *v = DIVERGENCE_BOUND);
        SolverResult { field, diverged: true, solver_id: solver_id.into() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn clamping_flags_divergence() {
        let g = GridFunction::new(2, 2, vec![1.0, f64::NAN, -5e7, 0.0]).unwrap();
        let r = SolverResult::new(g, "x");
        assert!(r.diverged);
        assert_eq!(r.field.values(), &[1.0, 1e6, -1e6, 0.0]);
        let ok = SolverResult::new(GridFunction::zeros(3, 3), "y");
        assert!(!ok.diverged);
    }

    #[test]
    fn coordinates() {
        let g = GridFunction::zeros(5, 3);
        assert_eq!(g.x(4), 1.0);
        assert_eq!(g.y(1), 0.5);
        let p = GridFunction::with_domain(4, 2, vec![0.0; 8], [0.0, 1.0, 0.0, 1.0], Layout::PeriodicX).unwrap();
        assert_eq!(p.x(3), 0.75);
    }
}
