//! Gaussian-process collocation for `-Δu = f` with the RBF kernel in two
//! dimensions.
//!
//! Observations are `-Δξ` at interior points and `ξ` at boundary points, so
//! the covariance blocks are `ΔΔκ` (interior/interior), `-Δκ`
//! (interior/boundary and interior/point) and `κ` (boundary/boundary).

use alloc::vec::Vec;

use nalgebra::{Cholesky, Dyn};
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::index;
use rand::Rng;

use super::grid::{GridFunction, SolverResult};
use crate::linalg::{Matrix, Vector};

/// Relative nugget on each diagonal block of the collocation Gram matrix.
pub const GP_NUGGET: f64 = 1e-8;

const DIM: f64 = 2.0;

fn rbf(s: f64, ell: f64) -> f64 {
    (-s / (2.0 * ell * ell)).exp()
}

/// `Δ_x κ(x, y)` for the RBF kernel in two dimensions, with `s = |x - y|^2`.
pub fn rbf_laplacian(s: f64, ell: f64) -> f64 {
    let l2 = ell * ell;
    rbf(s, ell) * (s / (l2 * l2) - DIM / l2)
}

/// `Δ_x Δ_y κ(x, y)` for the RBF kernel in two dimensions.
pub fn rbf_bilaplacian(s: f64, ell: f64) -> f64 {
    let l2 = ell * ell;
    let l4 = l2 * l2;
    rbf(s, ell) * (s * s / (l4 * l4) - (2.0 * DIM + 4.0) * s / (l4 * l2) + DIM * (DIM + 2.0) / l4)
}

fn sq(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])
}

/// A set of interior and boundary collocation points with a lengthscale.
#[derive(Debug, Clone, PartialEq)]
pub struct GpCollocation {
    pub interior: Vec<[f64; 2]>,
    pub boundary: Vec<[f64; 2]>,
    pub lengthscale: f64,
}

impl GpCollocation {
    pub fn n_obs(&self) -> usize {
        self.interior.len() + self.boundary.len()
    }

    fn obs_points(&self) -> impl Iterator<Item = ([f64; 2], bool)> + '_ {
        self.interior.iter().map(|p| (*p, true)).chain(self.boundary.iter().map(|p| (*p, false)))
    }

    /// `K(φ_self, φ_other)`.
    pub fn cross(&self, other: &GpCollocation) -> Matrix {
        let ell = self.lengthscale;
        let a: Vec<_> = self.obs_points().collect();
        let b: Vec<_> = other.obs_points().collect();
        Matrix::from_fn(a.len(), b.len(), |i, j| {
            let (p, pi) = a[i];
            let (q, qi) = b[j];
            let s = sq(p, q);
            match (pi, qi) {
                (true, true) => rbf_bilaplacian(s, ell),
                (true, false) | (false, true) => -rbf_laplacian(s, ell),
                (false, false) => rbf(s, ell),
            }
        })
    }

    /// `K(φ, φ)` without nugget.
    pub fn gram(&self) -> Matrix {
        self.cross(self)
    }

    /// `K(φ, δ_x)`.
    pub fn against_point(&self, x: [f64; 2]) -> Vector {
        let ell = self.lengthscale;
        Vector::from_iterator(
            self.n_obs(),
            self.obs_points().map(|(p, interior)| {
                let s = sq(p, x);
                if interior {
                    -rbf_laplacian(s, ell)
                } else {
                    rbf(s, ell)
                }
            }),
        )
    }

    /// Cholesky factor of `K(φ, φ)` plus a nugget of `GP_NUGGET` times each
    /// block's diagonal value.
    pub fn factor(&self) -> Option<Cholesky<f64, Dyn>> {
        let mut g = self.gram();
        let ell = self.lengthscale;
        let d_int = rbf_bilaplacian(0.0, ell);
        for i in 0..self.n_obs() {
            g[(i, i)] += GP_NUGGET * if i < self.interior.len() { d_int } else { 1.0 };
        }
        Cholesky::new(g)
    }
}

/// `n` points evenly spaced along the perimeter of `[x0, x1] x [y0, y1]`,
/// starting at the lower-left corner.
pub fn perimeter_points(n: usize, domain: [f64; 4]) -> Vec<[f64; 2]> {
    let [x0, x1, y0, y1] = domain;
    let (w, h) = (x1 - x0, y1 - y0);
    let per = 2.0 * (w + h);
    (0..n)
        .map(|k| {
            let mut t = per * k as f64 / n as f64;
            if t < w {
                return [x0 + t, y0];
            }
            t -= w;
            if t < h {
                return [x1, y0 + t];
            }
            t -= h;
            if t < w {
                return [x1 - t, y1];
            }
            t -= w;
            [x0, y1 - t]
        })
        .collect()
}

/// Collocation solver on a fixed grid. The collocation set is drawn once at
/// construction, so the solver is a fixed linear map `f -> u`.
#[derive(Debug, Clone)]
pub struct GpSolver {
    nx: usize,
    ny: usize,
    colloc: GpCollocation,
    interior_nodes: Vec<(usize, usize)>,
    // K(x, φ) K(φ, φ)^{-1}, restricted to the interior observation columns.
    operator: Matrix,
    ok: bool,
}

impl GpSolver {
    /// Picks `n_colloc` distinct interior grid nodes and `4 ceil(sqrt(n_colloc))`
    /// evenly spaced boundary points on a unit-square nodal grid.
    pub fn new<R: Rng + ?Sized>(nx: usize, ny: usize, n_colloc: usize, lengthscale: f64, rng: &mut R) -> Self {
        let (mx, my) = (nx.saturating_sub(2), ny.saturating_sub(2));
        let n_int = n_colloc.min(mx * my);
        let picks = index::sample(rng, mx * my, n_int).into_vec();
        let grid = GridFunction::zeros(nx, ny);
        let interior_nodes: Vec<(usize, usize)> = picks.iter().map(|&k| (k % mx + 1, k / mx + 1)).collect();
        let interior = interior_nodes.iter().map(|&(ix, iy)| [grid.x(ix), grid.y(iy)]).collect();
        let nb = 4 * (n_colloc as f64).sqrt().ceil() as usize;
        let boundary = perimeter_points(nb, [0.0, 1.0, 0.0, 1.0]);
        let colloc = GpCollocation { interior, boundary, lengthscale };
        let (operator, ok) = match colloc.factor() {
            Some(ch) => {
                let n_grid = nx * ny;
                let mut kx = Matrix::zeros(colloc.n_obs(), n_grid);
                for iy in 0..ny {
                    for ix in 0..nx {
                        kx.set_column(iy * nx + ix, &colloc.against_point([grid.x(ix), grid.y(iy)]));
                    }
                }
                // Rows of the operator are K(x, φ) K(φ, φ)^{-1}; keep interior columns.
                let sol = ch.solve(&kx);
                let op = sol.rows(0, n_int).transpose();
                (op, true)
            }
            None => (Matrix::zeros(0, 0), false),
        };
        GpSolver { nx, ny, colloc, interior_nodes, operator, ok }
    }

    pub fn collocation(&self) -> &GpCollocation {
        &self.colloc
    }

    /// `û = K(x, φ) K(φ, φ)^{-1} (f(X); 0)` at every grid node.
    pub fn solve(&self, f: &GridFunction) -> SolverResult {
        if !self.ok || f.nx() != self.nx || f.ny() != self.ny || !f.is_finite() {
            return SolverResult::failed(f.nx(), f.ny(), "gp");
        }
        let data = Vector::from_iterator(self.interior_nodes.len(), self.interior_nodes.iter().map(|&(ix, iy)| f.get(ix, iy)));
        let u = &self.operator * data;
        let mut out = GridFunction::zeros(self.nx, self.ny);
        out.values_mut().copy_from_slice(u.as_slice());
        SolverResult::new(out, "gp")
    }
}

/// One-shot collocation solve with a freshly drawn collocation set.
pub fn laplace_gp<R: Rng + ?Sized>(f: &GridFunction, n_colloc: usize, lengthscale: f64, rng: &mut R) -> SolverResult {
    GpSolver::new(f.nx(), f.ny(), n_colloc, lengthscale, rng).solve(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn derivative_kernels_match_finite_differences() {
        let ell = 0.3;
        let k = |x: [f64; 2], y: [f64; 2]| rbf(sq(x, y), ell);
        let lap1 = |x: [f64; 2], y: [f64; 2]| {
            let h = 1e-3;
            let c = k(x, y);
            (k([x[0] + h, x[1]], y) + k([x[0] - h, x[1]], y) + k([x[0], x[1] + h], y) + k([x[0], x[1] - h], y) - 4.0 * c)
                / (h * h)
        };
        let (x, y) = ([0.1, 0.2], [0.35, -0.05]);
        let s = sq(x, y);
        assert!((lap1(x, y) - rbf_laplacian(s, ell)).abs() < 1e-4);
        let h = 1e-2;
        let lap2 = (lap1(x, [y[0] + h, y[1]]) + lap1(x, [y[0] - h, y[1]]) + lap1(x, [y[0], y[1] + h])
            + lap1(x, [y[0], y[1] - h])
            - 4.0 * lap1(x, y))
            / (h * h);
        let exact = rbf_bilaplacian(s, ell);
        assert!((lap2 - exact).abs() < 1e-2 * exact.abs().max(1.0), "{lap2} {exact}");
    }

    #[test]
    fn collocation_gram_is_psd() {
        let mut r = rng::seeded(5);
        let s = GpSolver::new(20, 20, 30, 0.2, &mut r);
        let g = s.collocation().gram();
        assert!(crate::linalg::asymmetry(&g) < 1e-9);
        let ev = g.symmetric_eigen().eigenvalues;
        let scale = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(ev.iter().all(|v| *v >= -1e-9 * scale));
    }

    #[test]
    fn zero_data_zero_solution() {
        let mut r = rng::seeded(1);
        let out = laplace_gp(&GridFunction::zeros(16, 16), 20, 0.2, &mut r);
        assert!(!out.diverged);
        assert!(out.field.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn perimeter_layout() {
        let p = perimeter_points(8, [0.0, 1.0, 0.0, 1.0]);
        assert_eq!(p[0], [0.0, 0.0]);
        assert_eq!(p[2], [1.0, 0.0]);
        assert_eq!(p[5], [0.5, 1.0]);
    }
}
