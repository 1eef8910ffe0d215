//! Uniform-grid helpers on the circle: FFT coefficients, spectral derivative,
//! band-limited resampling, trapezoid integration.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;
use std::f64::consts::PI;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn grid_points(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

/// Signed frequency carried by FFT bin `i` of an `n`-point transform.
pub fn bin_freq(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

pub fn freq_bin(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// c_k with f(t_j) = sum_k c_k e^{i k t_j}, in FFT order.
pub fn coefficients(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= s);
    buf
}

pub fn from_coefficients(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let mut buf = coeffs.to_vec();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut buf));
    buf
}

/// Coefficient of frequency k (|k| < n/2 unambiguous; the Nyquist bin is returned as is).
pub fn coefficient(samples: &[Complex64], k: i64) -> Complex64 {
    let n = samples.len();
    let c = coefficients(samples);
    c[freq_bin(k, n)]
}

pub fn derivative(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut c = coefficients(samples);
    for (i, v) in c.iter_mut().enumerate() {
        if n % 2 == 0 && i == n / 2 {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v *= Complex64::new(0.0, bin_freq(i, n) as f64);
        }
    }
    from_coefficients(&c)
}

/// Trigonometric interpolation onto an m-point grid.
pub fn resample(samples: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = samples.len();
    if n == m {
        return samples.to_vec();
    }
    let c = coefficients(samples);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for (i, v) in c.iter().enumerate() {
        if n % 2 == 0 && i == n / 2 {
            let k = (n / 2) as i64;
            if m > n {
                out[freq_bin(k, m)] += v * 0.5;
                out[freq_bin(-k, m)] += v * 0.5;
            } else if 2 * k < m as i64 || (m % 2 == 0 && 2 * k == m as i64) {
                out[freq_bin(k, m)] += v;
            }
            continue;
        }
        let k = bin_freq(i, n);
        if 2 * k.abs() < m as i64 {
            out[freq_bin(k, m)] += v;
        } else if m % 2 == 0 && 2 * k.abs() == m as i64 {
            out[m / 2] += v;
        }
    }
    from_coefficients(&out)
}

/// Periodic trapezoid rule over [0, 2pi).
pub fn integrate(samples: &[Complex64]) -> Complex64 {
    let n = samples.len() as f64;
    samples.iter().sum::<Complex64>() * (2.0 * PI / n)
}

pub fn sup_norm(samples: &[Complex64]) -> f64 {
    samples.iter().fold(0.0, |a, v| a.max(v.norm()))
}

/// Evaluate the trigonometric interpolant at an arbitrary point.
pub fn interpolate_at(coeffs: &[Complex64], t: f64) -> Complex64 {
    let n = coeffs.len();
    let mut s = Complex64::new(0.0, 0.0);
    for (i, c) in coeffs.iter().enumerate() {
        if n % 2 == 0 && i == n / 2 {
            let k = (n / 2) as f64;
            s += c * (k * t).cos();
        } else {
            s += c * Complex64::from_polar(1.0, bin_freq(i, n) as f64 * t);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(f: impl Fn(f64) -> Complex64, n: usize) -> Vec<Complex64> {
        grid_points(n).into_iter().map(f).collect()
    }

    #[test]
    fn derivative_of_exponential() {
        let s = sample(|t| Complex64::from_polar(1.0, 3.0 * t), 32);
        let d = derivative(&s);
        for (i, t) in grid_points(32).into_iter().enumerate() {
            assert!((d[i] - Complex64::new(0.0, 3.0) * Complex64::from_polar(1.0, 3.0 * t)).norm() < 1e-12);
        }
    }

    #[test]
    fn resample_is_exact_for_band_limited() {
        let f = |t: f64| Complex64::new(t.cos() + (2.0 * t).sin(), (3.0 * t).cos());
        let s = sample(f, 16);
        let up = resample(&s, 64);
        for (i, t) in grid_points(64).into_iter().enumerate() {
            assert!((up[i] - f(t)).norm() < 1e-12);
        }
        let down = resample(&up, 16);
        for i in 0..16 {
            assert!((down[i] - s[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn integral_and_coefficient() {
        let s = sample(|t| Complex64::new(1.0 + t.cos(), 0.0), 8);
        assert!((integrate(&s) - Complex64::new(2.0 * PI, 0.0)).norm() < 1e-12);
        assert!((coefficient(&s, 1) - 0.5).norm() < 1e-14);
        assert!((coefficient(&s, -1) - 0.5).norm() < 1e-14);
        let c = coefficients(&s);
        assert!((interpolate_at(&c, 0.3) - (1.0 + 0.3f64.cos())).norm() < 1e-13);
    }
}
