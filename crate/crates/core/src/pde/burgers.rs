//! Periodic viscous Burgers equation `u_t + (u^2 / 2)_x = nu u_xx` on
//! `(x, t) in [0, 1]^2`: initial-condition sampler, seven solvers and a
//! fine-grid reference.
//!
//! All solvers return an `nx x nt` field whose row `j` is the state at
//! `t_j = j / (nt - 1)` and whose columns are `x_i = i / nx`.

use alloc::vec::Vec;

use nalgebra::{Cholesky, Dyn};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use super::fft::{fft_in_place, ifft_in_place};
use super::grid::{GridFunction, Layout, SolverResult, DIVERGENCE_BOUND};
use crate::kernels::{Kernel, KernelSpec};
use crate::linalg::{Matrix, Vector};

/// Viscosity used by the benchmark.
pub const BURGERS_NU: f64 = 2e-3;
/// Lengthscale of the periodic initial-condition kernel.
pub const IC_LENGTHSCALE: f64 = 1.5;
const IC_NUGGET: f64 = 1e-10;

/// Draws initial conditions from the zero-mean periodic Gaussian process with
/// the exp-sine-squared kernel on `x_i = i / nx`. The Cholesky factor is
/// computed once.
#[derive(Debug, Clone)]
pub struct BurgersSampler {
    nx: usize,
    chol: Cholesky<f64, Dyn>,
}

impl BurgersSampler {
    pub fn new(nx: usize) -> Self {
        let k = KernelSpec::expsin2(IC_LENGTHSCALE).expect("positive lengthscale");
        let xs: Vec<f64> = (0..nx).map(|i| i as f64 / nx as f64).collect();
        let mut g = Matrix::from_fn(nx, nx, |i, j| k.eval_unchecked(&[xs[i]], &[xs[j]]));
        for i in 0..nx {
            g[(i, i)] += IC_NUGGET;
        }
        let chol = crate::linalg::cholesky_with_retry(&g).expect("periodic Gram matrix with nugget is positive definite");
        BurgersSampler { nx, chol }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GridFunction {
        let z = Vector::from_iterator(self.nx, (0..self.nx).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let u = self.chol.l() * z;
        periodic_line(u.as_slice().to_vec())
    }
}

fn periodic_line(values: Vec<f64>) -> GridFunction {
    let n = values.len();
    GridFunction::with_domain(n, 1, values, [0.0, 1.0, 0.0, 0.0], Layout::PeriodicX).expect("non-empty")
}

/// One-shot initial-condition draw on `nx` periodic points.
pub fn sample_burgers_ic<R: Rng + ?Sized>(rng: &mut R, nx: usize) -> GridFunction {
    BurgersSampler::new(nx).sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BurgersScheme {
    /// Forward Euler in time, central convection and diffusion.
    Explicit,
    /// Backward Euler with the convecting velocity lagged one step.
    Implicit,
    /// Two-step Lax-Wendroff on the convective flux, explicit diffusion.
    LaxWendroff,
    /// Fourier pseudo-spectral: integrating factor for diffusion, RK4 for
    /// convection, 2/3 dealiasing.
    Spectral,
    /// Finite volumes with the local Lax-Friedrichs flux, forward Euler.
    Fvm,
    /// MUSCL with the minmod limiter, Lax-Friedrichs flux, SSP-RK2.
    Tvd,
    /// Godunov scheme for the inviscid equation; `nu` is ignored.
    Riemann,
}

impl BurgersScheme {
    pub const ALL: [BurgersScheme; 7] = [
        BurgersScheme::Explicit,
        BurgersScheme::Implicit,
        BurgersScheme::LaxWendroff,
        BurgersScheme::Spectral,
        BurgersScheme::Fvm,
        BurgersScheme::Tvd,
        BurgersScheme::Riemann,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BurgersScheme::Explicit => "explicit",
            BurgersScheme::Implicit => "implicit",
            BurgersScheme::LaxWendroff => "lax_wendroff",
            BurgersScheme::Spectral => "spectral",
            BurgersScheme::Fvm => "fvm",
            BurgersScheme::Tvd => "tvd",
            BurgersScheme::Riemann => "riemann",
        }
    }

    // Sub-steps per output interval for the fixed-substep finite-volume schemes.
    fn substeps(self) -> usize {
        match self {
            BurgersScheme::Fvm | BurgersScheme::Tvd => 3,
            _ => 1,
        }
    }
}

fn flux(u: f64) -> f64 {
    0.5 * u * u
}

// Second difference written as a difference of differences so that constant
// data give exactly zero.
fn second_diff(u: &[f64], i: usize) -> f64 {
    let n = u.len();
    let l = u[(i + n - 1) % n];
    let r = u[(i + 1) % n];
    (r - u[i]) - (u[i] - l)
}

fn rusanov(ul: f64, ur: f64) -> f64 {
    let a = ul.abs().max(ur.abs());
    0.5 * (flux(ul) + flux(ur)) - 0.5 * a * (ur - ul)
}

fn godunov(ul: f64, ur: f64) -> f64 {
    if ul > ur {
        if ul + ur > 0.0 {
            flux(ul)
        } else {
            flux(ur)
        }
    } else if ul > 0.0 {
        flux(ul)
    } else if ur < 0.0 {
        flux(ur)
    } else {
        0.0
    }
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

fn mc_limiter(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else {
        let s = a.signum();
        s * (2.0 * a.abs()).min(2.0 * b.abs()).min(0.5 * (a + b).abs())
    }
}

// Conservative update `u - dt/dx (F_{i+1/2} - F_{i-1/2}) + nu dt/dx^2 D2 u`
// from interface fluxes `f[i] = F_{i+1/2}`.
fn conservative_rhs(u: &[f64], f: &[f64], dx: f64, nu: f64) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| -(f[i] - f[(i + n - 1) % n]) / dx + nu * second_diff(u, i) / (dx * dx))
        .collect()
}

fn muscl_fluxes(u: &[f64], limiter: fn(f64, f64) -> f64) -> Vec<f64> {
    let n = u.len();
    let slope: Vec<f64> = (0..n)
        .map(|i| limiter(u[i] - u[(i + n - 1) % n], u[(i + 1) % n] - u[i]))
        .collect();
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            rusanov(u[i] + 0.5 * slope[i], u[j] - 0.5 * slope[j])
        })
        .collect()
}

fn axpy(u: &[f64], a: f64, r: &[f64]) -> Vec<f64> {
    u.iter().zip(r).map(|(p, q)| p + a * q).collect()
}

fn blown_up(u: &[f64]) -> bool {
    u.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND)
}

// Solves the periodic tridiagonal system with sub-diagonal a, diagonal b and
// super-diagonal c (a[0] and c[n-1] are the wrap-around corners) by the
// Sherman-Morrison correction of a Thomas solve.
fn cyclic_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Option<Vec<f64>> {
    let n = d.len();
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] -= gamma;
    bb[n - 1] -= c[n - 1] * a[0] / gamma;
    let thomas = |rhs: &[f64]| -> Option<Vec<f64>> {
        let mut cp = alloc::vec![0.0; n];
        let mut dp = alloc::vec![0.0; n];
        let mut den = bb[0];
        if den == 0.0 {
            return None;
        }
        cp[0] = c[0] / den;
        dp[0] = rhs[0] / den;
        for i in 1..n {
            den = bb[i] - a[i] * cp[i - 1];
            if den == 0.0 || !den.is_finite() {
                return None;
            }
            cp[i] = if i + 1 < n { c[i] / den } else { 0.0 };
            dp[i] = (rhs[i] - a[i] * dp[i - 1]) / den;
        }
        let mut x = dp;
        for i in (0..n - 1).rev() {
            x[i] -= cp[i] * x[i + 1];
        }
        Some(x)
    };
    let x = thomas(d)?;
    let mut uvec = alloc::vec![0.0; n];
    uvec[0] = gamma;
    uvec[n - 1] = c[n - 1];
    let z = thomas(&uvec)?;
    let fact = (x[0] + a[0] * x[n - 1] / gamma) / (1.0 + z[0] + a[0] * z[n - 1] / gamma);
    Some(x.iter().zip(&z).map(|(p, q)| p - fact * q).collect())
}

struct Stepper {
    scheme: BurgersScheme,
    nu: f64,
    dx: f64,
    k: Vec<f64>,
}

impl Stepper {
    fn new(scheme: BurgersScheme, nu: f64, nx: usize) -> Self {
        let k = (0..nx)
            .map(|j| {
                let m = if j <= nx / 2 { j as f64 } else { j as f64 - nx as f64 };
                2.0 * core::f64::consts::PI * m
            })
            .collect();
        Stepper { scheme, nu, dx: 1.0 / nx as f64, k }
    }

    // Advances `u` by `dt`; `None` when the scheme breaks down.
    fn step(&self, u: &[f64], dt: f64) -> Option<Vec<f64>> {
        let (dx, nu) = (self.dx, self.nu);
        let n = u.len();
        let out = match self.scheme {
            BurgersScheme::Explicit => (0..n)
                .map(|i| {
                    let conv = (flux(u[(i + 1) % n]) - flux(u[(i + n - 1) % n])) / (2.0 * dx);
                    u[i] + dt * (-conv + nu * second_diff(u, i) / (dx * dx))
                })
                .collect(),
            BurgersScheme::Implicit => {
                let r = nu * dt / (dx * dx);
                let al = dt / (2.0 * dx);
                let a: Vec<f64> = u.iter().map(|v| -v * al - r).collect();
                let b = alloc::vec![1.0 + 2.0 * r; n];
                let c: Vec<f64> = u.iter().map(|v| v * al - r).collect();
                // Unknown is the increment, so constant states are reproduced exactly.
                let rhs: Vec<f64> = (0..n)
                    .map(|i| -u[i] * al * (u[(i + 1) % n] - u[(i + n - 1) % n]) + r * second_diff(u, i))
                    .collect();
                let du = cyclic_tridiagonal(&a, &b, &c, &rhs)?;
                axpy(u, 1.0, &du)
            }
            BurgersScheme::LaxWendroff => {
                let half: Vec<f64> = (0..n)
                    .map(|i| {
                        let j = (i + 1) % n;
                        0.5 * (u[i] + u[j]) - dt / (2.0 * dx) * (flux(u[j]) - flux(u[i]))
                    })
                    .collect();
                let f: Vec<f64> = half.iter().map(|v| flux(*v)).collect();
                axpy(u, dt, &conservative_rhs(u, &f, dx, nu))
            }
            BurgersScheme::Spectral => self.spectral_step(u, dt),
            BurgersScheme::Fvm => {
                let f: Vec<f64> = (0..n).map(|i| rusanov(u[i], u[(i + 1) % n])).collect();
                axpy(u, dt, &conservative_rhs(u, &f, dx, nu))
            }
            BurgersScheme::Tvd => {
                let l = |v: &[f64]| conservative_rhs(v, &muscl_fluxes(v, minmod), dx, nu);
                let u1 = axpy(u, dt, &l(u));
                let u2 = axpy(&u1, dt, &l(&u1));
                u.iter().zip(&u2).map(|(a, b)| 0.5 * (a + b)).collect()
            }
            BurgersScheme::Riemann => {
                let f: Vec<f64> = (0..n).map(|i| godunov(u[i], u[(i + 1) % n])).collect();
                (0..n).map(|i| u[i] - dt / dx * (f[i] - f[(i + n - 1) % n])).collect()
            }
        };
        Some(out)
    }

    fn spectral_rhs(&self, v: &[Complex64], t: f64) -> Vec<Complex64> {
        // v is the integrating-factor variable exp(nu k^2 t) u_hat.
        let n = v.len();
        let cutoff = n as f64 / 3.0;
        let mut uh: Vec<Complex64> = v
            .iter()
            .zip(&self.k)
            .map(|(c, k)| c * (-self.nu * k * k * t).exp())
            .collect();
        ifft_in_place(&mut uh);
        let mut w: Vec<Complex64> = uh.iter().map(|c| Complex64::new(flux(c.re), 0.0)).collect();
        fft_in_place(&mut w);
        w.iter()
            .zip(&self.k)
            .map(|(c, k)| {
                if (k / (2.0 * core::f64::consts::PI)).abs() > cutoff {
                    Complex64::new(0.0, 0.0)
                } else {
                    -Complex64::new(0.0, *k) * c * (self.nu * k * k * t).exp()
                }
            })
            .collect()
    }

    fn spectral_step(&self, u: &[f64], dt: f64) -> Vec<f64> {
        let mut v: Vec<Complex64> = u.iter().map(|x| Complex64::new(*x, 0.0)).collect();
        fft_in_place(&mut v);
        let add = |a: &[Complex64], s: f64, b: &[Complex64]| -> Vec<Complex64> {
            a.iter().zip(b).map(|(p, q)| p + q * s).collect()
        };
        let k1 = self.spectral_rhs(&v, 0.0);
        let k2 = self.spectral_rhs(&add(&v, 0.5 * dt, &k1), 0.5 * dt);
        let k3 = self.spectral_rhs(&add(&v, 0.5 * dt, &k2), 0.5 * dt);
        let k4 = self.spectral_rhs(&add(&v, dt, &k3), dt);
        let mut out: Vec<Complex64> = (0..v.len())
            .map(|i| {
                let vn = v[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
                let k = self.k[i];
                vn * (-self.nu * k * k * dt).exp()
            })
            .collect();
        ifft_in_place(&mut out);
        out.iter().map(|c| c.re).collect()
    }
}

/// Runs `scheme` from `u0` (periodic, `nx` points) and records `nt` time levels.
///
/// Every scheme advances one output interval `dt = 1 / (nt - 1)` per step;
/// `fvm` and `tvd` split it into three sub-steps and `riemann` into as many as
/// needed for a Courant number of 0.9. If a run blows up, the remaining rows
/// repeat the last state and the result is flagged as diverged.
pub fn burgers_solve(u0: &GridFunction, scheme: BurgersScheme, nu: f64, nt: usize) -> SolverResult {
    let nx = u0.nx();
    let id = scheme.name();
    if nt < 2 || nx < 3 || !u0.is_finite() {
        return SolverResult::failed(nx, nt.max(1), id);
    }
    let stepper = Stepper::new(scheme, nu, nx);
    let dt = 1.0 / (nt - 1) as f64;
    let mut rows: Vec<f64> = Vec::with_capacity(nx * nt);
    let mut u: Vec<f64> = u0.values()[..nx].to_vec();
    rows.extend_from_slice(&u);
    let mut dead = false;
    for _ in 1..nt {
        if !dead {
            let subs = match scheme {
                BurgersScheme::Riemann => {
                    let amax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    ((amax * dt / (0.9 * stepper.dx)).ceil() as usize).max(1)
                }
                s => s.substeps(),
            };
            let h = dt / subs as f64;
            for _ in 0..subs {
                match stepper.step(&u, h) {
                    Some(next) if !blown_up(&next) => u = next,
                    Some(next) => {
                        u = next;
                        dead = true;
                        break;
                    }
                    None => {
                        u.iter_mut().for_each(|v| *v = f64::NAN);
                        dead = true;
                        break;
                    }
                }
            }
        }
        rows.extend_from_slice(&u);
    }
    let field = GridFunction::with_domain(nx, nt, rows, [0.0, 1.0, 0.0, 1.0], Layout::PeriodicX).expect("shape");
    SolverResult::new(field, id)
}

/// Band-limited interpolation of periodic samples onto `m >= n` points.
pub fn fourier_interpolate(u: &[f64], m: usize) -> Vec<f64> {
    let n = u.len();
    let mut c: Vec<Complex64> = u.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fft_in_place(&mut c);
    let mut big = alloc::vec![Complex64::new(0.0, 0.0); m];
    let half = n / 2;
    for j in 0..n {
        let scale = m as f64 / n as f64;
        if n % 2 == 0 && j == half {
            // Split the Nyquist mode symmetrically.
            big[half] += c[j] * (0.5 * scale);
            big[m - half] += c[j] * (0.5 * scale);
        } else if j < half || (n % 2 == 1 && j == half) {
            big[j] = c[j] * scale;
        } else {
            big[m - (n - j)] = c[j] * scale;
        }
    }
    ifft_in_place(&mut big);
    big.iter().map(|v| v.re).collect()
}

/// High-resolution reference solution: `u0` is Fourier-interpolated to
/// `refine * nx` points and advanced by MUSCL with the monotonized-central
/// limiter, local Lax-Friedrichs fluxes and central diffusion under SSP-RK3
/// with adaptive steps; every `refine`-th point is kept.
pub fn burgers_reference(u0: &GridFunction, nu: f64, nt: usize, refine: usize) -> GridFunction {
    let nx = u0.nx();
    let m = nx * refine.max(1);
    let dx = 1.0 / m as f64;
    let mut u = fourier_interpolate(&u0.values()[..nx], m);
    let l = |v: &[f64]| conservative_rhs(v, &muscl_fluxes(v, mc_limiter), dx, nu);
    let mut rows: Vec<f64> = Vec::with_capacity(nx * nt);
    let keep = |v: &[f64], rows: &mut Vec<f64>| rows.extend((0..nx).map(|i| v[i * refine.max(1)]));
    keep(&u, &mut rows);
    let dt_out = 1.0 / (nt - 1) as f64;
    for _ in 1..nt {
        let mut left = dt_out;
        while left > 0.0 {
            let amax = u.iter().fold(1e-12f64, |a, v| a.max(v.abs()));
            let mut h = (0.4 * dx / amax).min(if nu > 0.0 { 0.4 * dx * dx / nu } else { f64::INFINITY });
            if h >= left {
                h = left;
            }
            let u1 = axpy(&u, h, &l(&u));
            let u2: Vec<f64> = {
                let r = l(&u1);
                (0..m).map(|i| 0.75 * u[i] + 0.25 * (u1[i] + h * r[i])).collect()
            };
            let r = l(&u2);
            u = (0..m).map(|i| u[i] / 3.0 + 2.0 / 3.0 * (u2[i] + h * r[i])).collect();
            left -= h;
            if left < 1e-15 {
                break;
            }
        }
        keep(&u, &mut rows);
    }
    GridFunction::with_domain(nx, nt, rows, [0.0, 1.0, 0.0, 1.0], Layout::PeriodicX).expect("shape")
}
