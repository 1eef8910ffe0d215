//! The periodic scalar equation u' + theta(t) u = g on the circle: both
//! non-resonant solution formulas, the resonant family, the compatibility
//! integral and the homogeneous solution.

use crate::error::{GshError, Result};
use crate::fourier::tgrid;
use crate::fourier::trig::CTrig;
use num_complex::Complex64;
use std::f64::consts::PI;

const TAU: f64 = 2.0 * PI;

/// Relative tolerance of the compatibility gate: |c| <= COMPAT_TOL (||g|| + 1).
pub const COMPAT_TOL: f64 = 1e-9;

/// Log-magnitude range of e^{P} above which the factorized fast path is avoided.
const FAST_PATH_RANGE: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Minus,
    Plus,
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Minus,
    Plus,
    Resonant,
    ArgmaxBasepoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeOde {
    pub theta: CTrig,
    /// samples of g on the uniform grid
    pub g: Vec<Complex64>,
    /// theta0 in iZ
    pub resonant: bool,
}

impl ModeOde {
    /// Resonance supplied by the caller (decided on exact data).
    pub fn with_resonance(theta: CTrig, g: Vec<Complex64>, resonant: bool) -> Self {
        ModeOde { theta, g, resonant }
    }

    /// Resonance decided from the float mean.
    pub fn new(theta: CTrig, g: Vec<Complex64>) -> Self {
        let t0 = theta.mean();
        let resonant = t0.re.abs() <= 1e-12 && (t0.im - t0.im.round()).abs() <= 1e-12;
        ModeOde { theta, g, resonant }
    }

    pub fn theta0(&self) -> Complex64 {
        self.theta.mean()
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    fn grid(&self) -> Vec<f64> {
        tgrid::grid_points(self.n())
    }

    /// P(t) = int_0^t (theta - theta0), periodic.
    fn wave_primitive(&self) -> Vec<Complex64> {
        self.grid().into_iter().map(|t| self.theta.wave_primitive(t)).collect()
    }

    /// Theta(t) = int_0^t theta.
    pub fn big_theta(&self) -> Vec<Complex64> {
        let t0 = self.theta0();
        self.grid().into_iter().map(|t| t0 * t + self.theta.wave_primitive(t)).collect()
    }

    fn g_sup(&self) -> f64 {
        tgrid::sup_norm(&self.g)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeSolution {
    pub u: Vec<Complex64>,
    pub method: Method,
    /// max log-magnitude of the kernel used (non-resonant branches)
    pub kernel_log_max: Option<f64>,
}

fn band(n: usize) -> impl Iterator<Item = i64> {
    let h = ((n - 1) / 2) as i64;
    -h..=h
}

/// Product-integration weights: sol- uses 1/(theta0 - ik), sol+ 1/(theta0 + ik).
fn filon_weights(theta0: Complex64, n: usize, plus: bool) -> Vec<Complex64> {
    let sgn = if plus { 1.0 } else { -1.0 };
    let inv: Vec<(f64, Complex64)> = band(n).map(|k| (k as f64, 1.0 / (theta0 + Complex64::new(0.0, sgn * k as f64)))).collect();
    (0..n)
        .map(|j| {
            let s = TAU * j as f64 / n as f64;
            inv.iter().map(|(k, c)| c * Complex64::from_polar(1.0, -k * s)).sum::<Complex64>() / n as f64
        })
        .collect()
}

/// Max log-magnitudes of the integrand kernels (before the 1/(1 - e^{-2 pi theta0}) factors) of (sol-) and (sol+) over the grid.
pub fn kernel_exponents(ode: &ModeOde) -> (f64, f64) {
    let n = ode.n();
    let t0 = ode.theta0();
    let rp: Vec<f64> = ode.wave_primitive().iter().map(|p| p.re).collect();
    let mut minus = f64::NEG_INFINITY;
    let mut plus = f64::NEG_INFINITY;
    for j in 0..n {
        let s = TAU * j as f64 / n as f64;
        let mut dm = f64::NEG_INFINITY;
        let mut dp = f64::NEG_INFINITY;
        for i in 0..n {
            dm = dm.max(rp[(i + n - j) % n] - rp[i]);
            dp = dp.max(rp[(i + j) % n] - rp[i]);
        }
        minus = minus.max(-t0.re * s + dm);
        plus = plus.max(t0.re * s + dp);
    }
    (minus, plus)
}

/// Direct quadrature of one branch formula.
fn solve_direct(ode: &ModeOde, plus: bool) -> Vec<Complex64> {
    let n = ode.n();
    let p = ode.wave_primitive();
    let w = filon_weights(ode.theta0(), n, plus);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let k = if plus { (i + j) % n } else { (i + n - j) % n };
                    w[j] * (p[k] - p[i]).exp() * ode.g[k]
                })
                .sum()
        })
        .collect()
}

/// Spectral evaluation u = e^{-P} F^{-1}[ (e^P g)^_k / (theta0 + ik) ].
fn solve_factorized(ode: &ModeOde) -> Vec<Complex64> {
    let n = ode.n();
    let p = ode.wave_primitive();
    let shift = p.iter().fold(f64::NEG_INFINITY, |a, v| a.max(v.re));
    let e: Vec<Complex64> = p.iter().zip(&ode.g).map(|(pi, g)| (pi - shift).exp() * g).collect();
    let mut c = tgrid::coefficients(&e);
    let t0 = ode.theta0();
    for (i, v) in c.iter_mut().enumerate() {
        if n % 2 == 0 && i == n / 2 {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v /= t0 + Complex64::new(0.0, tgrid::bin_freq(i, n) as f64);
        }
    }
    let v = tgrid::from_coefficients(&c);
    v.iter().zip(&p).map(|(x, pi)| x * (shift - pi).exp()).collect()
}

/// Solve the mode; `lambda` parametrizes the resonant family.
pub fn solve_mode(ode: &ModeOde, branch: Branch, lambda: Complex64) -> Result<ModeSolution> {
    if ode.resonant {
        let u = resonant_solution(ode, lambda)?;
        return Ok(ModeSolution { u, method: Method::Resonant, kernel_log_max: None });
    }
    let (km, kp) = kernel_exponents(ode);
    let plus = match branch {
        Branch::Minus => false,
        Branch::Plus => true,
        Branch::Auto => kp < km,
    };
    let method = if plus { Method::Plus } else { Method::Minus };
    let kernel_log_max = Some(if plus { kp } else { km });
    let u = if branch == Branch::Auto {
        let rp: Vec<f64> = ode.wave_primitive().iter().map(|p| p.re).collect();
        let range = rp.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - rp.iter().cloned().fold(f64::INFINITY, f64::min);
        if range <= FAST_PATH_RANGE {
            solve_factorized(ode)
        } else {
            solve_direct(ode, plus)
        }
    } else {
        solve_direct(ode, plus)
    };
    Ok(ModeSolution { u, method, kernel_log_max })
}

/// e^{-c} int_0^{2pi} g e^{Theta}, c = max Re Theta >= 0 (positive rescaling, so
/// vanishing is unaffected; for bounded Theta it is the plain integral).
pub fn compatibility(ode: &ModeOde) -> Complex64 {
    let th = ode.big_theta();
    let c = th.iter().fold(0.0f64, |a, v| a.max(v.re));
    let prod: Vec<Complex64> = th.iter().zip(&ode.g).map(|(t, g)| (t - c).exp() * g).collect();
    tgrid::integrate(&prod)
}

pub fn compatibility_holds(ode: &ModeOde) -> bool {
    compatibility(ode).norm() <= COMPAT_TOL * (ode.g_sup() + 1.0)
}

/// e^{-Theta(t)} on the grid; periodic only in the resonant case.
pub fn homogeneous(ode: &ModeOde) -> Result<Vec<Complex64>> {
    if !ode.resonant {
        return Err(GshError::NotPeriodic);
    }
    Ok(ode.big_theta().into_iter().map(|t| (-t).exp()).collect())
}

/// (scaled primitive Q e^{-c} of e^{Theta} g, c)
fn scaled_primitive(ode: &ModeOde) -> (Vec<Complex64>, f64) {
    let th = ode.big_theta();
    let c = th.iter().fold(f64::NEG_INFINITY, |a, v| a.max(v.re));
    let gq: Vec<Complex64> = th.iter().zip(&ode.g).map(|(t, g)| (t - c).exp() * g).collect();
    let n = ode.n();
    let coef = tgrid::coefficients(&gq);
    let mut q = vec![Complex64::new(0.0, 0.0); n];
    let mut at0 = Complex64::new(0.0, 0.0);
    let mut qc = vec![Complex64::new(0.0, 0.0); n];
    for (i, v) in coef.iter().enumerate() {
        let k = tgrid::bin_freq(i, n);
        if k == 0 || (n % 2 == 0 && i == n / 2) {
            continue;
        }
        qc[i] = v / Complex64::new(0.0, k as f64);
        at0 += qc[i];
    }
    let vals = tgrid::from_coefficients(&qc);
    for i in 0..n {
        q[i] = vals[i] - at0;
    }
    (q, c)
}

fn check_compat(ode: &ModeOde) -> Result<()> {
    if !compatibility_holds(ode) {
        let c = compatibility(ode);
        return Err(GshError::NoSolution { re: c.re, im: c.im });
    }
    Ok(())
}

/// u = e^{-Theta}(lambda + int_0^t e^{Theta} g).
pub fn resonant_solution(ode: &ModeOde, lambda: Complex64) -> Result<Vec<Complex64>> {
    check_compat(ode)?;
    let (q, c) = scaled_primitive(ode);
    let th = ode.big_theta();
    Ok(th
        .iter()
        .zip(&q)
        .map(|(t, qi)| {
            let base = (c - t).exp() * qi;
            base + lambda * (-t).exp()
        })
        .collect())
}

/// u(t) = int_{t*}^t e^{-int_s^t theta} g ds with t* the grid minimizer of Re Theta.
pub fn solve_argmax_basepoint(ode: &ModeOde) -> Result<ModeSolution> {
    if !ode.resonant {
        return Err(GshError::NotPeriodic);
    }
    check_compat(ode)?;
    let (q, c) = scaled_primitive(ode);
    let th = ode.big_theta();
    let star = (0..ode.n()).min_by(|&a, &b| th[a].re.partial_cmp(&th[b].re).unwrap()).unwrap();
    let q0 = q[star];
    let u = th.iter().zip(&q).map(|(t, qi)| (c - t).exp() * (qi - q0)).collect();
    Ok(ModeSolution { u, method: Method::ArgmaxBasepoint, kernel_log_max: Some(0.0) })
}

/// sup |u' + theta u - g| via spectral differentiation.
pub fn residual(ode: &ModeOde, u: &[Complex64]) -> f64 {
    let du = tgrid::derivative(u);
    let th = ode.theta.samples(ode.n());
    du.iter().zip(&th).zip(u).zip(&ode.g).map(|(((d, t), u), g)| (d + t * u - g).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const N: usize = 256;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_trig(rng: &mut ChaCha8Rng, bw: i64, amp: f64) -> CTrig {
        CTrig::from_coeffs((-bw..=bw).map(|k| (k, c(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp)))))
    }

    #[test]
    fn constant_theta() {
        let th = c(0.7, 0.3);
        let ode = ModeOde::new(CTrig::constant(th), vec![c(1.0, 0.0); N]);
        for b in [Branch::Minus, Branch::Plus, Branch::Auto] {
            let s = solve_mode(&ode, b, c(0.0, 0.0)).unwrap();
            for u in &s.u {
                assert!((u - 1.0 / th).norm() < 1e-12, "{b:?} {u}");
            }
        }
    }

    #[test]
    fn branches_agree_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let mut theta = random_trig(&mut rng, 3, 0.5);
            theta = theta.add(&CTrig::constant(c(rng.gen_range(0.2..1.0), rng.gen_range(-2.0..2.0))));
            let g = random_trig(&mut rng, 4, 1.0).samples(N);
            let ode = ModeOde::new(theta, g);
            assert!(!ode.resonant);
            let m = solve_mode(&ode, Branch::Minus, c(0.0, 0.0)).unwrap().u;
            let p = solve_mode(&ode, Branch::Plus, c(0.0, 0.0)).unwrap().u;
            let a = solve_mode(&ode, Branch::Auto, c(0.0, 0.0)).unwrap().u;
            for i in 0..N {
                assert!((m[i] - p[i]).norm() < 1e-10);
                assert!((m[i] - a[i]).norm() < 1e-10);
            }
            assert!(residual(&ode, &m) < 1e-9 * (1.0 + tgrid::sup_norm(&ode.g)));
        }
    }

    #[test]
    fn auto_prefers_decaying_kernel() {
        let ode = ModeOde::new(CTrig::constant(c(-3.0, 0.0)), vec![c(1.0, 0.0); 64]);
        let (km, kp) = kernel_exponents(&ode);
        assert!(kp < km);
        assert_eq!(solve_mode(&ode, Branch::Auto, c(0.0, 0.0)).unwrap().method, Method::Plus);
        let ode = ModeOde::new(CTrig::constant(c(3.0, 0.0)), vec![c(1.0, 0.0); 64]);
        assert_eq!(solve_mode(&ode, Branch::Auto, c(0.0, 0.0)).unwrap().method, Method::Minus);
    }

    #[test]
    fn compatibility_examples() {
        let zero = ModeOde::new(CTrig::constant(c(0.0, 0.0)), vec![c(0.0, 0.0); N]);
        assert_eq!(compatibility(&zero), c(0.0, 0.0));
        let g: Vec<Complex64> = tgrid::grid_points(N).into_iter().map(|t| Complex64::from_polar(1.0, t)).collect();
        let ode = ModeOde::new(CTrig::constant(c(0.0, 0.0)), g);
        assert!(compatibility(&ode).norm() < 1e-13);
        let ode = ModeOde::new(CTrig::constant(c(0.0, 0.0)), vec![c(1.0, 0.0); N]);
        assert!((compatibility(&ode) - TAU).norm() < 1e-12);
        match solve_mode(&ode, Branch::Auto, c(0.0, 0.0)) {
            Err(GshError::NoSolution { re, .. }) => assert!((re - TAU).abs() < 1e-12),
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn homogeneous_examples() {
        let ode = ModeOde::new(CTrig::constant(c(0.0, 1.0)), vec![c(0.0, 0.0); N]);
        let h = homogeneous(&ode).unwrap();
        for (t, v) in tgrid::grid_points(N).into_iter().zip(&h) {
            assert!((v - Complex64::from_polar(1.0, -t)).norm() < 1e-13);
        }
        assert!((h[0].norm() - 1.0).abs() < 1e-15);
        let half = ModeOde::new(CTrig::constant(c(0.5, 0.0)), vec![c(0.0, 0.0); N]);
        assert_eq!(homogeneous(&half), Err(GshError::NotPeriodic));
    }

    #[test]
    fn resonant_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // theta = 2i + i sin t + cos t / 2: theta0 = 2i
        let theta = CTrig::from_coeffs([(0, c(0.0, 2.0)), (1, c(0.25, -0.5)), (-1, c(0.25, 0.5))]);
        let h = random_trig(&mut rng, 3, 1.0);
        let h = h.add(&CTrig::constant(-h.mean()));
        let pre = ModeOde::new(theta.clone(), vec![c(0.0, 0.0); N]);
        let hom = homogeneous(&pre).unwrap();
        // g = e^{-Theta} h with h mean zero is compatible
        let g: Vec<Complex64> = hom.iter().zip(h.samples(N)).map(|(e, v)| e * v).collect();
        let ode = ModeOde::new(theta, g);
        assert!(ode.resonant);
        assert!(compatibility(&ode).norm() < 1e-12);
        let u1 = solve_mode(&ode, Branch::Auto, c(0.0, 0.0)).unwrap().u;
        let u2 = solve_mode(&ode, Branch::Auto, c(1.5, -0.5)).unwrap().u;
        for i in 0..N {
            assert!((u2[i] - u1[i] - c(1.5, -0.5) * hom[i]).norm() < 1e-10);
        }
        assert!(residual(&ode, &u1) < 1e-9);
        let ab = solve_argmax_basepoint(&ode).unwrap();
        assert!(residual(&ode, &ab.u) < 1e-9);
    }

    #[test]
    fn argmax_basepoint_bound() {
        // resonant theta = -i sin t (pure imaginary wave, so |kernel| = 1) and a sign-changing real part
        let theta = CTrig::from_coeffs([(1, c(0.5, 0.0)), (-1, c(0.5, 0.0))]);
        let pre = ModeOde::new(theta.clone(), vec![c(0.0, 0.0); N]);
        let hom = homogeneous(&pre).unwrap();
        let g: Vec<Complex64> = tgrid::grid_points(N).iter().zip(&hom).map(|(t, e)| e * Complex64::from_polar(1.0, 2.0 * t)).collect();
        let ode = ModeOde::new(theta, g);
        let s = solve_argmax_basepoint(&ode).unwrap();
        assert!(tgrid::sup_norm(&s.u) <= TAU * tgrid::sup_norm(&ode.g) + 1e-9);
        assert!(residual(&ode, &s.u) < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn residual_is_small(seed in 0u64..1000, re0 in 0.1f64..2.0, im0 in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let theta = random_trig(&mut rng, 2, 0.4).add(&CTrig::constant(c(re0, im0)));
            let ode = ModeOde::new(theta, random_trig(&mut rng, 3, 1.0).samples(128));
            let u = solve_mode(&ode, Branch::Auto, c(0.0, 0.0)).unwrap().u;
            prop_assert!(residual(&ode, &u) < 1e-9 * (1.0 + tgrid::sup_norm(&ode.g)));
        }
    }
}
