//! Dirichlet Laplace problems `-Δu = f` on the unit square with `u = 0` on
//! the boundary: the random sampler and the classical solvers.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use super::gp::GpSolver;
use super::grid::{GridFunction, SolverResult};
use crate::linalg::{BandedMatrix, Matrix};

/// Parameters of one random solution
/// `u = -sin(pi x) sin(pi y) sin(f_max exp(-(p - mu)^T R (p - mu)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceParams {
    pub f_max: f64,
    pub mu: [f64; 2],
    /// Symmetric positive definite, row-major `[r00, r01, r10, r11]`.
    pub r: [f64; 4],
}

impl LaplaceParams {
    pub fn u(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.mu[0];
        let dy = y - self.mu[1];
        let q = self.r[0] * dx * dx + (self.r[1] + self.r[2]) * dx * dy + self.r[3] * dy * dy;
        -(PI * x).sin() * (PI * y).sin() * (self.f_max * (-q).exp()).sin()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceSample {
    pub f: GridFunction,
    pub u: GridFunction,
    pub params: LaplaceParams,
}

/// `f_max ~ U[1, 10]`, `mu ~ U[0.2, 0.8]^2`, `R = Q diag(r) Q^T` with a
/// uniformly random rotation `Q` and `r_i ~ U[5, 50]`.
pub fn sample_laplace_params<R: Rng + ?Sized>(rng: &mut R) -> LaplaceParams {
    let f_max = rng.random_range(1.0..10.0);
    let mu = [rng.random_range(0.2..0.8), rng.random_range(0.2..0.8)];
    let theta: f64 = rng.random_range(0.0..PI);
    let r1 = rng.random_range(5.0..50.0);
    let r2 = rng.random_range(5.0..50.0);
    let (c, s) = (theta.cos(), theta.sin());
    let r00 = c * c * r1 + s * s * r2;
    let r01 = c * s * (r1 - r2);
    let r11 = s * s * r1 + c * c * r2;
    LaplaceParams { f_max, mu, r: [r00, r01, r01, r11] }
}

/// `-Δu` at the nodes of an `nx x ny` unit-square grid by fourth-order central
/// differences with a quarter of the grid spacing (the stencil of a 4x refined
/// grid restricted to the coarse nodes).
pub fn minus_laplacian_fd(u: impl Fn(f64, f64) -> f64, nx: usize, ny: usize) -> GridFunction {
    let hx = 0.25 / (nx - 1) as f64;
    let hy = 0.25 / (ny - 1) as f64;
    GridFunction::from_fn(nx, ny, |x, y| {
        let uc = u(x, y);
        let dxx = (-u(x + 2.0 * hx, y) + 16.0 * u(x + hx, y) - 30.0 * uc + 16.0 * u(x - hx, y) - u(x - 2.0 * hx, y))
            / (12.0 * hx * hx);
        let dyy = (-u(x, y + 2.0 * hy) + 16.0 * u(x, y + hy) - 30.0 * uc + 16.0 * u(x, y - hy) - u(x, y - 2.0 * hy))
            / (12.0 * hy * hy);
        -(dxx + dyy)
    })
}

/// Draws a random solution on an `nx x ny` nodal grid and its source term.
pub fn sample_laplace_pair<R: Rng + ?Sized>(rng: &mut R, nx: usize, ny: usize) -> LaplaceSample {
    let params = sample_laplace_params(rng);
    let mut u = GridFunction::from_fn(nx, ny, |x, y| params.u(x, y));
    for ix in 0..nx {
        u.set(ix, 0, 0.0);
        u.set(ix, ny - 1, 0.0);
    }
    for iy in 0..ny {
        u.set(0, iy, 0.0);
        u.set(nx - 1, iy, 0.0);
    }
    let f = minus_laplacian_fd(|x, y| params.u(x, y), nx, ny);
    LaplaceSample { f, u, params }
}

/// Node placement along x for the finite-difference solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grading {
    Uniform,
    /// Finer spacing on `x < 0.4`.
    LeftDense,
    /// Finer spacing on `x > 0.4`.
    RightDense,
}

/// Break point of the graded grids.
pub const GRADING_BREAK: f64 = 0.4;
/// Ratio of coarse to fine spacing on graded grids.
pub const GRADING_RATIO: f64 = 1.5;

/// x nodes of a grid with `n` nodes on `[0, 1]`.
pub fn graded_nodes(n: usize, grading: Grading) -> Vec<f64> {
    let m = n - 1;
    let uniform = |k: usize| k as f64 / m as f64;
    let left_intervals = match grading {
        Grading::Uniform => return (0..n).map(uniform).collect(),
        Grading::LeftDense => {
            let w = GRADING_BREAK * GRADING_RATIO;
            (m as f64 * w / (w + (1.0 - GRADING_BREAK))).round() as usize
        }
        Grading::RightDense => {
            let w = (1.0 - GRADING_BREAK) * GRADING_RATIO;
            (m as f64 * GRADING_BREAK / (GRADING_BREAK + w)).round() as usize
        }
    };
    let ml = left_intervals.clamp(1, m - 1);
    let mr = m - ml;
    let mut x = Vec::with_capacity(n);
    for k in 0..=ml {
        x.push(GRADING_BREAK * k as f64 / ml as f64);
    }
    for k in 1..=mr {
        x.push(GRADING_BREAK + (1.0 - GRADING_BREAK) * k as f64 / mr as f64);
    }
    x[m] = 1.0;
    x
}

// Cubic Lagrange interpolation of (xs, ys) at t, using the four nearest nodes.
fn lagrange4(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let n = xs.len();
    let mut hi = xs.partition_point(|&v| v < t).clamp(1, n - 1);
    if xs[hi] == t {
        return ys[hi];
    }
    if xs[hi - 1] == t {
        return ys[hi - 1];
    }
    hi = hi.clamp(2, n - 2);
    let start = hi - 2;
    let mut acc = 0.0;
    for a in start..start + 4 {
        let mut w = 1.0;
        for b in start..start + 4 {
            if a != b {
                w *= (t - xs[b]) / (xs[a] - xs[b]);
            }
        }
        acc += w * ys[a];
    }
    acc
}

// Re-samples every row of `g` (nx values at x nodes `from`) onto nodes `to`.
fn resample_rows(g: &GridFunction, from: &[f64], to: &[f64]) -> Vec<f64> {
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = alloc::vec![0.0; to.len() * ny];
    for iy in 0..ny {
        let row = &g.values()[iy * nx..(iy + 1) * nx];
        for (ix, &t) in to.iter().enumerate() {
            out[iy * to.len() + ix] = lagrange4(from, row, t);
        }
    }
    out
}

/// Five-point finite differences on a uniform or x-graded grid with the same
/// node counts as `f`. Graded variants interpolate `f` onto their nodes and
/// the solution back with cubic Lagrange interpolation.
pub fn laplace_fdm(f: &GridFunction, grading: Grading) -> SolverResult {
    let id = match grading {
        Grading::Uniform => "fdm",
        Grading::LeftDense => "fdm_left",
        Grading::RightDense => "fdm_right",
    };
    let (nx, ny) = (f.nx(), f.ny());
    if nx < 3 || ny < 3 || !f.is_finite() {
        return SolverResult::failed(nx, ny, id);
    }
    let uniform_x: Vec<f64> = (0..nx).map(|i| f.x(i)).collect();
    let xs = graded_nodes(nx, grading);
    let rhs_grid = if grading == Grading::Uniform {
        f.values().to_vec()
    } else {
        resample_rows(f, &uniform_x, &xs)
    };
    let mx = nx - 2;
    let my = ny - 2;
    let hy = 1.0 / (ny - 1) as f64;
    let mut a = BandedMatrix::zeros(mx * my, mx, mx);
    let mut b = alloc::vec![0.0; mx * my];
    for jy in 0..my {
        for jx in 0..mx {
            let row = jy * mx + jx;
            let (ix, iy) = (jx + 1, jy + 1);
            let hl = xs[ix] - xs[ix - 1];
            let hr = xs[ix + 1] - xs[ix];
            let cl = 2.0 / (hl * (hl + hr));
            let cr = 2.0 / (hr * (hl + hr));
            let cy = 1.0 / (hy * hy);
            a.add(row, row, cl + cr + 2.0 * cy);
            if jx > 0 {
                a.add(row, row - 1, -cl);
            }
            if jx + 1 < mx {
                a.add(row, row + 1, -cr);
            }
            if jy > 0 {
                a.add(row, row - mx, -cy);
            }
            if jy + 1 < my {
                a.add(row, row + mx, -cy);
            }
            b[row] = rhs_grid[iy * nx + ix];
        }
    }
    let sol = match a.factor() {
        Ok(lu) => lu.solve(&b),
        Err(_) => return SolverResult::failed(nx, ny, id),
    };
    let mut u = GridFunction::zeros(nx, ny);
    for jy in 0..my {
        for jx in 0..mx {
            u.set(jx + 1, jy + 1, sol[jy * mx + jx]);
        }
    }
    if grading != Grading::Uniform {
        let back = resample_rows(&u, &xs, &uniform_x);
        u = GridFunction::new(nx, ny, back).expect("same shape");
    }
    SolverResult::new(u, id)
}

fn sine_matrix(m: usize) -> Matrix {
    let l = (m + 1) as f64;
    Matrix::from_fn(m, m, |j, k| (PI * ((j + 1) * (k + 1)) as f64 / l).sin())
}

/// Sine-series solver: the interior values of `f` are expanded by a type-I
/// discrete sine transform and each mode is divided by `pi^2 (k^2 + l^2)`.
pub fn laplace_spectral(f: &GridFunction) -> SolverResult {
    laplace_spectral_modes(f, usize::MAX)
}

/// As [`laplace_spectral`], keeping only the modes with `k, l <= modes`.
pub fn laplace_spectral_modes(f: &GridFunction, modes: usize) -> SolverResult {
    let (nx, ny) = (f.nx(), f.ny());
    if nx < 3 || ny < 3 || !f.is_finite() {
        return SolverResult::failed(nx, ny, "spectral");
    }
    let (mx, my) = (nx - 2, ny - 2);
    let sx = sine_matrix(mx);
    let sy = sine_matrix(my);
    // Rows index y, columns index x.
    let fi = Matrix::from_fn(my, mx, |jy, jx| f.get(jx + 1, jy + 1));
    let scale = 4.0 / ((mx + 1) as f64 * (my + 1) as f64);
    let mut coef = &sy * fi * &sx * scale;
    for l in 0..my {
        for k in 0..mx {
            if k >= modes || l >= modes {
                coef[(l, k)] = 0.0;
                continue;
            }
            let kk = (k + 1) as f64;
            let ll = (l + 1) as f64;
            coef[(l, k)] /= PI * PI * (kk * kk + ll * ll);
        }
    }
    let ui = &sy * coef * &sx;
    let mut u = GridFunction::zeros(nx, ny);
    for jy in 0..my {
        for jx in 0..mx {
            u.set(jx + 1, jy + 1, ui[(jy, jx)]);
        }
    }
    SolverResult::new(u, "spectral")
}

/// The Laplace solver bank.
#[derive(Debug, Clone)]
pub enum LaplaceSolver {
    Fdm(Grading),
    /// Sine-series solver keeping `modes` modes per direction.
    Spectral { modes: usize },
    Gp(GpSolver),
}

/// Modes per direction kept by the spectral solver of the standard bank.
pub const BANK_SPECTRAL_MODES: usize = 16;

impl LaplaceSolver {
    /// Standard roster: uniform, left- and right-graded finite differences,
    /// the sine-series solver and the collocation solver `gp`.
    pub fn bank(gp: GpSolver) -> Vec<LaplaceSolver> {
        alloc::vec![
            LaplaceSolver::Fdm(Grading::Uniform),
            LaplaceSolver::Fdm(Grading::LeftDense),
            LaplaceSolver::Fdm(Grading::RightDense),
            LaplaceSolver::Spectral { modes: BANK_SPECTRAL_MODES },
            LaplaceSolver::Gp(gp),
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            LaplaceSolver::Fdm(Grading::Uniform) => "fdm",
            LaplaceSolver::Fdm(Grading::LeftDense) => "fdm_left",
            LaplaceSolver::Fdm(Grading::RightDense) => "fdm_right",
            LaplaceSolver::Spectral { .. } => "spectral",
            LaplaceSolver::Gp(_) => "gp",
        }
    }

    pub fn solve(&self, f: &GridFunction) -> SolverResult {
        match self {
            LaplaceSolver::Fdm(g) => laplace_fdm(f, *g),
            LaplaceSolver::Spectral { modes } => laplace_spectral_modes(f, *modes),
            LaplaceSolver::Gp(gp) => gp.solve(f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::grid::mse;
    use crate::rng;

    fn manufactured(n: usize) -> (GridFunction, GridFunction) {
        let u = GridFunction::from_fn(n, n, |x, y| (PI * x).sin() * (PI * y).sin());
        let f = GridFunction::from_fn(n, n, |x, y| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin());
        (f, u)
    }

    fn max_err(a: &GridFunction, b: &GridFunction) -> f64 {
        a.values().iter().zip(b.values()).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
    }

    #[test]
    fn center_of_bump() {
        let p = LaplaceParams { f_max: 2.3, mu: [0.3, 0.6], r: [10.0, 1.0, 1.0, 20.0] };
        let expect = -(PI * 0.3).sin() * (PI * 0.6).sin() * 2.3f64.sin();
        assert!((p.u(0.3, 0.6) - expect).abs() < 1e-15);
    }

    #[test]
    fn sample_vanishes_on_boundary() {
        let mut r = rng::seeded(3);
        let s = sample_laplace_pair(&mut r, 20, 17);
        for ix in 0..20 {
            assert_eq!(s.u.get(ix, 0), 0.0);
            assert_eq!(s.u.get(ix, 16), 0.0);
        }
        for iy in 0..17 {
            assert_eq!(s.u.get(0, iy), 0.0);
            assert_eq!(s.u.get(19, iy), 0.0);
        }
        assert!(s.params.f_max >= 1.0 && s.params.f_max < 10.0);
    }

    #[test]
    fn source_term_of_single_mode() {
        let f = minus_laplacian_fd(|x, y| (PI * x).sin() * (PI * y).sin(), 33, 33);
        let (exact, _) = manufactured(33);
        let err = max_err(&f, &exact);
        assert!(err < 1e-4, "err {err}");
        let f2 = minus_laplacian_fd(|x, y| (PI * x).sin() * (PI * y).sin(), 65, 65);
        let (exact2, _) = manufactured(65);
        let ratio = err / max_err(&f2, &exact2);
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn zero_source_zero_solution() {
        let z = GridFunction::zeros(16, 16);
        for g in [Grading::Uniform, Grading::LeftDense, Grading::RightDense] {
            assert!(laplace_fdm(&z, g).field.values().iter().all(|v| *v == 0.0));
        }
        assert!(laplace_spectral(&z).field.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn second_order_convergence() {
        let mut errs = Vec::new();
        for n in [17, 33, 65] {
            let (f, u) = manufactured(n);
            errs.push(max_err(&laplace_fdm(&f, Grading::Uniform).field, &u));
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.7..=2.3).contains(&order), "order {order}");
        }
    }

    #[test]
    fn graded_grids_are_accurate() {
        let (f, u) = manufactured(33);
        for g in [Grading::LeftDense, Grading::RightDense] {
            let e = mse(&laplace_fdm(&f, g).field, &u).unwrap();
            assert!(e < 1e-5, "{g:?} {e}");
        }
        let left = graded_nodes(33, Grading::LeftDense);
        assert!((left[16] - 0.4).abs() < 1e-15);
        let right = graded_nodes(33, Grading::RightDense);
        assert!(right[1] - right[0] > right[32] - right[31]);
    }

    #[test]
    fn spectral_single_mode_exact() {
        let (f, u) = manufactured(31);
        assert!(max_err(&laplace_spectral(&f).field, &u) < 1e-10);
    }

    #[test]
    fn solvers_are_linear() {
        let mut r = rng::seeded(11);
        let a = sample_laplace_pair(&mut r, 24, 24).f;
        let b = sample_laplace_pair(&mut r, 24, 24).f;
        let sum = a.with_values(a.values().iter().zip(b.values()).map(|(p, q)| p + q).collect()).unwrap();
        for s in [LaplaceSolver::Fdm(Grading::Uniform), LaplaceSolver::Fdm(Grading::RightDense), LaplaceSolver::Spectral { modes: 12 }] {
            let (ua, ub, us) = (s.solve(&a).field, s.solve(&b).field, s.solve(&sum).field);
            let scale = us.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for i in 0..us.len() {
                assert!((ua.values()[i] + ub.values()[i] - us.values()[i]).abs() <= 1e-10 * scale.max(1.0));
            }
        }
    }
}
