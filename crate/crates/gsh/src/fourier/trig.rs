//! Finite Fourier series on the circle: exact (rational) and floating variants.

use crate::error::{GshError, Result};
use crate::numerics::{format_rational, parse_rational, rat, rat_int, CRat, Rational, TaggedRealJson};
use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrigPoly {
    coeffs: BTreeMap<i64, CRat>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        TrigPoly::default()
    }

    pub fn from_coeffs(it: impl IntoIterator<Item = (i64, CRat)>) -> Self {
        let mut p = TrigPoly::zero();
        for (k, c) in it {
            p.add_term(k, &c);
        }
        p
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_coeffs([(0, CRat::real(c))])
    }

    /// amp * cos(k t)
    pub fn cos(k: i64, amp: Rational) -> Self {
        let h = amp * rat(1, 2);
        Self::from_coeffs([(k, CRat::real(h.clone())), (-k, CRat::real(h))])
    }

    /// amp * sin(k t)
    pub fn sin(k: i64, amp: Rational) -> Self {
        let h = amp * rat(1, 2);
        Self::from_coeffs([(k, CRat::new(rat_int(0), -h.clone())), (-k, CRat::new(rat_int(0), h))])
    }

    fn add_term(&mut self, k: i64, c: &CRat) {
        let e = self.coeffs.entry(k).or_insert_with(CRat::zero);
        *e = &*e + c;
        if e.is_zero() {
            self.coeffs.remove(&k);
        }
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, CRat> {
        &self.coeffs
    }

    pub fn coeff(&self, k: i64) -> CRat {
        self.coeffs.get(&k).cloned().unwrap_or_else(CRat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn bandwidth(&self) -> i64 {
        self.coeffs.keys().map(|k| k.abs()).max().unwrap_or(0)
    }

    pub fn mean(&self) -> CRat {
        self.coeff(0)
    }

    /// Oscillatory part (mean removed).
    pub fn wave(&self) -> TrigPoly {
        let mut p = self.clone();
        p.coeffs.remove(&0);
        p
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|(k, c)| self.coeff(-k) == c.conj())
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.keys().all(|&k| k == 0)
    }

    pub fn add(&self, o: &TrigPoly) -> TrigPoly {
        let mut p = self.clone();
        for (k, c) in &o.coeffs {
            p.add_term(*k, c);
        }
        p
    }

    pub fn sub(&self, o: &TrigPoly) -> TrigPoly {
        self.add(&o.scale(&rat_int(-1)))
    }

    pub fn scale(&self, s: &Rational) -> TrigPoly {
        TrigPoly::from_coeffs(self.coeffs.iter().map(|(k, c)| (*k, c.scale(s))))
    }

    pub fn scale_c(&self, s: &CRat) -> TrigPoly {
        TrigPoly::from_coeffs(self.coeffs.iter().map(|(k, c)| (*k, c * s)))
    }

    pub fn mul(&self, o: &TrigPoly) -> TrigPoly {
        let mut p = TrigPoly::zero();
        for (k1, c1) in &self.coeffs {
            for (k2, c2) in &o.coeffs {
                p.add_term(k1 + k2, &(c1 * c2));
            }
        }
        p
    }

    pub fn pow(&self, n: u32) -> TrigPoly {
        let mut p = TrigPoly::constant(rat_int(1));
        for _ in 0..n {
            p = p.mul(self);
        }
        p
    }

    pub fn derivative(&self) -> TrigPoly {
        // d/dt c e^{ikt} = ik c e^{ikt}
        TrigPoly::from_coeffs(self.coeffs.iter().map(|(k, c)| {
            let kk = rat_int(*k);
            (*k, CRat::new(-&c.im * &kk, &c.re * &kk))
        }))
    }

    /// Exact primitive of the oscillatory part, normalized to vanish at t = 0.
    /// The mean contributes the linear slope, returned separately.
    pub fn primitive(&self) -> (TrigPoly, CRat) {
        let mut p = TrigPoly::zero();
        let mut c0 = CRat::zero();
        for (k, c) in &self.coeffs {
            if *k == 0 {
                continue;
            }
            // c/(ik) = -i c / k
            let inv = rat(1, *k);
            let term = CRat::new(&c.im * &inv, -&c.re * &inv);
            c0 = &c0 - &term;
            p.add_term(*k, &term);
        }
        p.add_term(0, &c0);
        (p, self.mean())
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.coeffs.iter().map(|(k, c)| c.to_c64() * Complex64::from_polar(1.0, *k as f64 * t)).sum()
    }

    pub fn eval_real(&self, t: f64) -> f64 {
        self.eval(t).re
    }

    pub fn to_float(&self) -> CTrig {
        CTrig::from_coeffs(self.coeffs.iter().map(|(k, c)| (*k, c.to_c64())))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TrigTermJson {
    pub freq: i64,
    pub re: String,
    pub im: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
pub struct TrigPolyJson {
    #[serde(default)]
    pub coeffs: Vec<TrigTermJson>,
    /// Optional tagged mean overriding the frequency-zero coefficient.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean: Option<TaggedRealJson>,
}

impl From<&TrigPoly> for TrigPolyJson {
    fn from(p: &TrigPoly) -> Self {
        TrigPolyJson {
            coeffs: p
                .coeffs
                .iter()
                .map(|(k, c)| TrigTermJson { freq: *k, re: format_rational(&c.re), im: format_rational(&c.im) })
                .collect(),
            mean: None,
        }
    }
}

impl TryFrom<&TrigPolyJson> for TrigPoly {
    type Error = GshError;
    fn try_from(j: &TrigPolyJson) -> Result<Self> {
        let mut p = TrigPoly::zero();
        for t in &j.coeffs {
            p.add_term(t.freq, &CRat::new(parse_rational(&t.re)?, parse_rational(&t.im)?));
        }
        Ok(p)
    }
}

/// Complex trigonometric polynomial with floating coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CTrig {
    pub coeffs: BTreeMap<i64, Complex64>,
}

impl CTrig {
    pub fn from_coeffs(it: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        let mut coeffs = BTreeMap::new();
        for (k, c) in it {
            *coeffs.entry(k).or_insert(Complex64::zero()) += c;
        }
        coeffs.retain(|_, c: &mut Complex64| !c.is_zero());
        CTrig { coeffs }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_coeffs([(0, c)])
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs.get(&0).copied().unwrap_or_default()
    }

    pub fn bandwidth(&self) -> i64 {
        self.coeffs.keys().map(|k| k.abs()).max().unwrap_or(0)
    }

    pub fn add(&self, o: &CTrig) -> CTrig {
        Self::from_coeffs(self.coeffs.iter().chain(o.coeffs.iter()).map(|(k, c)| (*k, *c)))
    }

    pub fn scale(&self, s: Complex64) -> CTrig {
        Self::from_coeffs(self.coeffs.iter().map(|(k, c)| (*k, c * s)))
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.coeffs.iter().map(|(k, c)| c * Complex64::from_polar(1.0, *k as f64 * t)).sum()
    }

    /// P(t) = integral over [0, t] of the oscillatory part (mean excluded).
    pub fn wave_primitive(&self, t: f64) -> Complex64 {
        self.coeffs
            .iter()
            .filter(|(k, _)| **k != 0)
            .map(|(k, c)| {
                let kf = *k as f64;
                c * (Complex64::from_polar(1.0, kf * t) - 1.0) / Complex64::new(0.0, kf)
            })
            .sum()
    }

    /// Integral over [0, t] including the mean.
    pub fn primitive(&self, t: f64) -> Complex64 {
        self.mean() * t + self.wave_primitive(t)
    }

    pub fn samples(&self, n: usize) -> Vec<Complex64> {
        (0..n).map(|i| self.eval(2.0 * std::f64::consts::PI * i as f64 / n as f64)).collect()
    }
}

/// Real part of `p` treated as a real function; critical points where the
/// derivative changes sign, sorted in [0, 2pi).
pub fn real_critical_points(p: &CTrig) -> Vec<f64> {
    let d = CTrig::from_coeffs(p.coeffs.iter().filter(|(k, _)| **k != 0).map(|(k, c)| (*k, c * Complex64::new(0.0, *k as f64))));
    if d.coeffs.is_empty() {
        return Vec::new();
    }
    let bw = d.bandwidth().max(1) as usize;
    let n = 64 * bw;
    let scale: f64 = d.coeffs.values().map(|c| c.norm()).sum();
    let tiny = 1e-14 * (1.0 + scale);
    let h = 2.0 * PI / n as f64;
    let val = |t: f64| d.eval(t).re;
    let sign = |v: f64| if v.abs() <= tiny { 0 } else if v > 0.0 { 1 } else { -1 };
    let vals: Vec<f64> = (0..n).map(|i| val(i as f64 * h)).collect();
    let signs: Vec<i32> = vals.iter().map(|&v| sign(v)).collect();
    if signs.iter().all(|&s| s == 0) {
        return Vec::new();
    }
    let mut roots = Vec::new();
    // start just after a nonzero sample so zero runs are never split
    let start = signs.iter().position(|&s| s != 0).unwrap();
    let mut last_sign = signs[start];
    let mut zero_run: Option<usize> = None;
    for step in 1..=n {
        let i = (start + step) % n;
        let prev = (start + step - 1) % n;
        let si = signs[i];
        if si == 0 {
            if zero_run.is_none() {
                zero_run = Some(step);
            }
            continue;
        }
        if let Some(z0) = zero_run.take() {
            if si != last_sign {
                let mid = (start as f64 + (z0 + step - 1) as f64 / 2.0) * h;
                roots.push(mid.rem_euclid(2.0 * PI));
            }
        } else if si != last_sign {
            let (mut a, mut b) = (prev as f64 * h, if i == 0 { 2.0 * PI } else { i as f64 * h });
            let fa = val(a);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let fm = val(m);
                if (fm > 0.0) == (fa > 0.0) {
                    a = m;
                } else {
                    b = m;
                }
                if b - a < 1e-15 {
                    break;
                }
            }
            roots.push((0.5 * (a + b)).rem_euclid(2.0 * PI));
        }
        last_sign = si;
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// (min, argmin, max, argmax) of the real part over the circle.
pub fn real_range(p: &CTrig) -> (f64, f64, f64, f64) {
    let mut cands = real_critical_points(p);
    let n = 64 * p.bandwidth().max(1) as usize;
    cands.extend((0..n).map(|i| 2.0 * PI * i as f64 / n as f64));
    let mut out = (f64::INFINITY, 0.0, f64::NEG_INFINITY, 0.0);
    for t in cands {
        let v = p.eval(t).re;
        if v < out.0 {
            out.0 = v;
            out.1 = t;
        }
        if v > out.2 {
            out.2 = v;
            out.3 = t;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_cubed_primitive() {
        let s3 = TrigPoly::sin(2, rat_int(1)).pow(3);
        assert!(s3.is_real());
        assert_eq!(s3.bandwidth(), 6);
        let (f, slope) = s3.primitive();
        assert!(slope.is_zero());
        // F(pi/2) = 2/3
        assert!((f.eval_real(PI / 2.0) - 2.0 / 3.0).abs() < 1e-14);
        assert!(f.eval(0.0).norm() < 1e-15);
        // closed form (1/2)(2/3 - cos 2t + (1/3) cos^3 2t)
        let c2 = TrigPoly::cos(2, rat_int(1));
        let closed = TrigPoly::constant(rat(2, 3)).sub(&c2).add(&c2.pow(3).scale(&rat(1, 3))).scale(&rat(1, 2));
        assert_eq!(f, closed);
        assert_eq!(f.derivative(), s3);
    }

    #[test]
    fn one_minus_cos() {
        let (f, slope) = TrigPoly::sin(1, rat_int(1)).primitive();
        assert!(slope.is_zero());
        assert_eq!(f, TrigPoly::constant(rat_int(1)).sub(&TrigPoly::cos(1, rat_int(1))));
    }

    #[test]
    fn float_primitive_matches() {
        let p = TrigPoly::cos(1, rat_int(2)).add(&TrigPoly::constant(rat(1, 3))).add(&TrigPoly::sin(3, rat(1, 5)));
        let c = p.to_float();
        let (f, s) = p.primitive();
        for &t in &[0.3, 1.7, 5.0] {
            let exact = f.eval(t) + s.to_c64() * t;
            assert!((c.primitive(t) - exact).norm() < 1e-14);
        }
    }

    #[test]
    fn critical_points_of_sin_cubed_primitive() {
        let (f, _) = TrigPoly::sin(2, rat_int(1)).pow(3).primitive();
        let c = real_critical_points(&f.to_float());
        // derivative sin^3(2t) vanishes (with sign change) at multiples of pi/2
        assert_eq!(c.len(), 4);
        for (k, t) in c.iter().enumerate() {
            assert!((t - k as f64 * PI / 2.0).abs() < 1e-9, "{t}");
        }
        let (lo, _, hi, thi) = real_range(&f.to_float());
        assert!(lo.abs() < 1e-12 && (hi - 2.0 / 3.0).abs() < 1e-12);
        assert!((thi - PI / 2.0).abs() < 1e-9 || (thi - 3.0 * PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let p = TrigPoly::sin(1, rat(3, 7)).add(&TrigPoly::constant(rat(-1, 2)));
        let j = TrigPolyJson::from(&p);
        let s = serde_json::to_string(&j).unwrap();
        let back: TrigPolyJson = serde_json::from_str(&s).unwrap();
        assert_eq!(TrigPoly::try_from(&back).unwrap(), p);
    }
}
