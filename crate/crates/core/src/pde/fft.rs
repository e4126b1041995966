//! Complex FFT: iterative radix-2 for power-of-two lengths, direct DFT otherwise.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

fn dft(data: &mut [Complex64], sign: f64) {
    let n = data.len();
    let input: Vec<Complex64> = data.to_vec();
    for (k, out) in data.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, v) in input.iter().enumerate() {
            let ang = sign * 2.0 * PI * ((j * k) % n) as f64 / n as f64;
            acc += v * Complex64::new(ang.cos(), ang.sin());
        }
        *out = acc;
    }
}

fn radix2(data: &mut [Complex64], sign: f64) {
    let n = data.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        for k in 0..half {
            let ang = sign * 2.0 * PI * k as f64 / len as f64;
            let w = Complex64::new(ang.cos(), ang.sin());
            let mut start = 0;
            while start < n {
                let a = data[start + k];
                let b = data[start + k + half] * w;
                data[start + k] = a + b;
                data[start + k + half] = a - b;
                start += len;
            }
        }
        len *= 2;
    }
}

/// Forward transform `X_k = sum_j x_j exp(-2 pi i j k / n)`.
pub fn fft_in_place(data: &mut [Complex64]) {
    match data.len() {
        0 | 1 => {}
        n if n.is_power_of_two() => radix2(data, -1.0),
        _ => dft(data, -1.0),
    }
}

/// Inverse transform including the `1 / n` factor.
pub fn ifft_in_place(data: &mut [Complex64]) {
    let n = data.len();
    match n {
        0 | 1 => return,
        n if n.is_power_of_two() => radix2(data, 1.0),
        _ => dft(data, 1.0),
    }
    let s = 1.0 / n as f64;
    for v in data.iter_mut() {
        *v *= s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_dft_and_inverts() {
        for n in [8usize, 12, 64] {
            let x: Vec<Complex64> = (0..n).map(|j| Complex64::new((j as f64 * 0.7).sin(), (j as f64).cos() * 0.3)).collect();
            let mut a = x.clone();
            fft_in_place(&mut a);
            let mut b = x.clone();
            dft(&mut b, -1.0);
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).norm() < 1e-11);
            }
            ifft_in_place(&mut a);
            for (p, q) in a.iter().zip(&x) {
                assert!((p - q).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn constant_input_is_exact() {
        let mut a = alloc::vec![Complex64::new(0.37, 0.0); 128];
        fft_in_place(&mut a);
        assert_eq!(a[0].re, 0.37 * 128.0);
        assert!(a[1..].iter().all(|v| v.re == 0.0 && v.im == 0.0));
    }
}
