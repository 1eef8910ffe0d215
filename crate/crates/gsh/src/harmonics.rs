//! Representation coefficients of SU(2) in Euler angles and the action of the
//! left-invariant fields D1, D2, D3.

use crate::error::{GshError, Result};
use crate::numerics::HalfInt;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl EulerAngles {
    pub fn new(phi: f64, theta: f64, psi: f64) -> Self {
        EulerAngles { phi, theta, psi }
    }
    pub fn identity() -> Self {
        EulerAngles { phi: 0.0, theta: 0.0, psi: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WignerIndex {
    pub l: HalfInt,
    pub m: HalfInt,
    pub n: HalfInt,
}

impl WignerIndex {
    pub fn new(l: HalfInt, m: HalfInt, n: HalfInt) -> Result<Self> {
        let idx = WignerIndex { l, m, n };
        idx.validate()?;
        Ok(idx)
    }

    /// Shorthand with all entries given as twice their value.
    pub fn from_twice(l2: i64, m2: i64, n2: i64) -> Result<Self> {
        Self::new(HalfInt::new(l2), HalfInt::new(m2), HalfInt::new(n2))
    }

    pub fn validate(&self) -> Result<()> {
        let (l, m, n) = (self.l.twice, self.m.twice, self.n.twice);
        if l < 0 || m.abs() > l || n.abs() > l || (l - m) % 2 != 0 || (l - n) % 2 != 0 {
            return Err(GshError::InvalidIndex(format!("(l,m,n) = ({}, {}, {})", self.l, self.m, self.n)));
        }
        Ok(())
    }
}

/// All valid (m) values for a given l, ascending.
pub fn magnetic_range(l: HalfInt) -> impl Iterator<Item = HalfInt> {
    (0..=l.twice).map(move |k| HalfInt::new(-l.twice + 2 * k))
}

fn fact(n: i64) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

fn binom(n: i64, k: i64) -> BigInt {
    fact(n) / (fact(k) * fact(n - k))
}

/// P^l_{mn}(x) as sum of coef * (1-x)^e1 * (1+x)^e2, with one global phase.
#[derive(Clone, Debug)]
pub struct LegendreExpansion {
    pub phase: Complex64,
    pub terms: Vec<(f64, f64, f64)>,
}

impl LegendreExpansion {
    pub fn new(idx: &WignerIndex) -> Result<Self> {
        idx.validate()?;
        let l2 = idx.l.twice;
        let m2 = idx.m.twice;
        let n2 = idx.n.twice;
        let a = (l2 - n2) / 2;
        let b = (l2 + n2) / 2;
        let d = (l2 - m2) / 2;
        let lpm = (l2 + m2) / 2;
        // sqrt((l+m)! / ((l-m)! (l-n)! (l+n)!)) * 2^-l
        let ratio = BigRational::new(fact(lpm), fact(d) * fact(a) * fact(b));
        let ratio = ratio.to_f64().unwrap_or(f64::NAN);
        let scale = ratio.sqrt() * 2f64.powf(-(l2 as f64) / 2.0);
        let sign_ln = if a % 2 == 0 { 1.0 } else { -1.0 };
        let nm = (n2 - m2) / 2;
        let ipow = match nm.rem_euclid(4) {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        let phase = ipow * sign_ln;
        let mut terms = Vec::new();
        let half_mn = (m2 + n2) as f64 / 4.0;
        for k in 0..=d {
            if k > a || d - k > b {
                continue;
            }
            let mut c = binom(d, k) * (fact(a) / fact(a - k)) * (fact(b) / fact(b - d + k));
            if k % 2 == 1 {
                c = -c;
            }
            let e1 = (l2 as f64) / 2.0 - k as f64 - half_mn;
            let e2 = k as f64 + half_mn;
            let cf = c.to_f64().unwrap_or(f64::NAN) * scale;
            terms.push((cf, e1.max(0.0), e2.max(0.0)));
        }
        Ok(LegendreExpansion { phase, terms })
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let x = x.clamp(-1.0, 1.0);
        let u = 1.0 - x;
        let v = 1.0 + x;
        let mut s = 0.0;
        for &(c, e1, e2) in &self.terms {
            s += c * pw(u, e1) * pw(v, e2);
        }
        self.phase * s
    }
}

fn pw(base: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 0.5 {
        base.sqrt()
    } else if e.fract() == 0.0 {
        base.powi(e as i32)
    } else {
        base.powi(e.floor() as i32) * base.sqrt()
    }
}

pub fn legendre_p(idx: &WignerIndex, x: f64) -> Result<Complex64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(GshError::InvalidIndex(format!("x = {x} outside [-1, 1]")));
    }
    Ok(LegendreExpansion::new(idx)?.eval(x))
}

/// t^l_{mn}(phi, theta, psi) = exp(-i(m phi + n psi)) P^l_{mn}(cos theta).
pub fn wigner_t(idx: &WignerIndex, y: &EulerAngles) -> Result<Complex64> {
    let p = legendre_p(idx, y.theta.cos())?;
    let arg = -(idx.m.to_f64() * y.phi + idx.n.to_f64() * y.psi);
    Ok(Complex64::from_polar(1.0, arg) * p)
}

/// Matrix [t^l_{mn}(y)] with rows m and columns n, both ascending from -l.
pub fn wigner_matrix(l: HalfInt, y: &EulerAngles) -> Result<Vec<Vec<Complex64>>> {
    if l.twice < 0 {
        return Err(GshError::InvalidIndex(format!("l = {l}")));
    }
    let x = y.theta.cos();
    let ms: Vec<HalfInt> = magnetic_range(l).collect();
    let mut out = Vec::with_capacity(ms.len());
    for &m in &ms {
        let mut row = Vec::with_capacity(ms.len());
        for &n in &ms {
            let idx = WignerIndex { l, m, n };
            let p = LegendreExpansion::new(&idx)?.eval(x);
            let arg = -(m.to_f64() * y.phi + n.to_f64() * y.psi);
            row.push(Complex64::from_polar(1.0, arg) * p);
        }
        out.push(row);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvariantField {
    D1,
    D2,
    D3,
}

/// Image of t^l_{ab} under the field, as a combination of coefficients.
pub fn invariant_field_action(which: InvariantField, idx: &WignerIndex) -> Result<Vec<(Complex64, WignerIndex)>> {
    idx.validate()?;
    let l = idx.l.to_f64();
    let b = idx.n.to_f64();
    let up = ((l - b) * (l + b + 1.0)).max(0.0).sqrt();
    let down = ((l + b) * (l - b + 1.0)).max(0.0).sqrt();
    let shifted = |d: i64| -> Option<WignerIndex> {
        let n = HalfInt::new(idx.n.twice + 2 * d);
        let w = WignerIndex { l: idx.l, m: idx.m, n };
        w.validate().ok().map(|_| w)
    };
    let mut out = Vec::new();
    match which {
        InvariantField::D3 => out.push((Complex64::new(0.0, b), *idx)),
        InvariantField::D2 => {
            if let Some(w) = shifted(1) {
                out.push((Complex64::new(up / 2.0, 0.0), w));
            }
            if let Some(w) = shifted(-1) {
                out.push((Complex64::new(-down / 2.0, 0.0), w));
            }
        }
        InvariantField::D1 => {
            // 1/(-2i) = i/2
            if let Some(w) = shifted(1) {
                out.push((Complex64::new(0.0, up / 2.0), w));
            }
            if let Some(w) = shifted(-1) {
                out.push((Complex64::new(0.0, down / 2.0), w));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_angles(rng: &mut ChaCha8Rng) -> EulerAngles {
        EulerAngles::new(rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..PI), rng.gen_range(-2.0 * PI..2.0 * PI))
    }

    #[test]
    fn trivial_representation() {
        let idx = WignerIndex::from_twice(0, 0, 0).unwrap();
        assert!((legendre_p(&idx, 0.3).unwrap() - 1.0).norm() < 1e-15);
        let y = EulerAngles::new(1.0, 2.0, -3.0);
        assert!((wigner_t(&idx, &y).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn spin_half_is_half_angle() {
        let idx = WignerIndex::from_twice(1, 1, 1).unwrap();
        for &th in &[0.0, 0.4, 1.3, 2.9, PI] {
            let p = legendre_p(&idx, f64::cos(th)).unwrap();
            assert!((p.norm() - (th / 2.0).cos().abs()).abs() < 1e-14);
        }
    }

    #[test]
    fn l_one_zero_zero_is_x() {
        let idx = WignerIndex::from_twice(2, 0, 0).unwrap();
        for &x in &[-1.0, -0.3, 0.0, 0.6, 1.0] {
            let p = legendre_p(&idx, x).unwrap();
            assert!((p - x).norm() < 1e-14, "x={x} p={p}");
        }
    }

    #[test]
    fn invalid_indices() {
        assert!(WignerIndex::from_twice(1, 2, 1).is_err());
        assert!(WignerIndex::from_twice(2, 1, 0).is_err());
        assert!(legendre_p(&WignerIndex::from_twice(2, 0, 0).unwrap(), 1.5).is_err());
    }

    #[test]
    fn identity_gives_delta() {
        for l2 in 0..=8 {
            let t = wigner_matrix(HalfInt::new(l2), &EulerAngles::identity()).unwrap();
            for (i, row) in t.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((v - e).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn unitarity_and_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let y = random_angles(&mut rng);
            for l2 in 0..=10 {
                let t = wigner_matrix(HalfInt::new(l2), &y).unwrap();
                let d = t.len();
                for i in 0..d {
                    for j in 0..d {
                        let s: Complex64 = (0..d).map(|k| t[i][k] * t[j][k].conj()).sum();
                        let e = if i == j { 1.0 } else { 0.0 };
                        assert!((s - e).norm() < 1e-12);
                    }
                }
                // conj(t_mn) = (-1)^(n-m) t_{-m,-n}
                for i in 0..d {
                    for j in 0..d {
                        let sign = if ((j as i64 - i as i64) % 2).abs() == 0 { 1.0 } else { -1.0 };
                        let lhs = t[i][j].conj();
                        let rhs = t[d - 1 - i][d - 1 - j] * sign;
                        assert!((lhs - rhs).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn conjugation_spec_example() {
        let y = EulerAngles::new(0.7, 1.1, -2.3);
        let a = wigner_t(&WignerIndex::from_twice(3, 1, -1).unwrap(), &y).unwrap();
        let b = wigner_t(&WignerIndex::from_twice(3, -1, 1).unwrap(), &y).unwrap();
        assert!((a.conj() + b).norm() < 1e-12);
    }

    #[test]
    fn psi_only_is_diagonal() {
        for l2 in 0..=6 {
            let t = wigner_matrix(HalfInt::new(l2), &EulerAngles::new(0.0, 0.0, 1.234)).unwrap();
            for (i, row) in t.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    if i == j {
                        assert!((v.norm() - 1.0).abs() < 1e-13);
                    } else {
                        assert!(v.norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn homomorphism_along_theta() {
        // rotations about a fixed axis compose additively
        let (a, b) = (0.4, 0.9);
        for l2 in 0..=6 {
            let l = HalfInt::new(l2);
            let ta = wigner_matrix(l, &EulerAngles::new(0.0, a, 0.0)).unwrap();
            let tb = wigner_matrix(l, &EulerAngles::new(0.0, b, 0.0)).unwrap();
            let tab = wigner_matrix(l, &EulerAngles::new(0.0, a + b, 0.0)).unwrap();
            let d = ta.len();
            for i in 0..d {
                for j in 0..d {
                    let s: Complex64 = (0..d).map(|k| ta[i][k] * tb[k][j]).sum();
                    assert!((s - tab[i][j]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn d3_matches_minus_d_psi() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-4;
        for _ in 0..10 {
            let y = random_angles(&mut rng);
            for l2 in 0..=6 {
                let l = HalfInt::new(l2);
                for m in magnetic_range(l) {
                    for n in magnetic_range(l) {
                        let idx = WignerIndex { l, m, n };
                        let f = |psi: f64| wigner_t(&idx, &EulerAngles { psi, ..y }).unwrap();
                        let fd = -(f(y.psi + h) - f(y.psi - h)) / (2.0 * h);
                        let act = invariant_field_action(InvariantField::D3, &idx).unwrap();
                        let v: Complex64 = act.iter().map(|(c, w)| c * wigner_t(w, &y).unwrap()).sum();
                        assert!((fd - v).norm() < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn d2_spec_example() {
        let idx = WignerIndex::from_twice(1, 1, 1).unwrap();
        let act = invariant_field_action(InvariantField::D2, &idx).unwrap();
        assert_eq!(act.len(), 1);
        assert_eq!(act[0].1, WignerIndex::from_twice(1, 1, -1).unwrap());
        assert!((act[0].0 - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
        let act3 = invariant_field_action(InvariantField::D3, &idx).unwrap();
        assert_eq!(act3, vec![(Complex64::new(0.0, 0.5), idx)]);
    }

    fn ladder(which: InvariantField, l: HalfInt) -> Vec<Vec<Complex64>> {
        let ns: Vec<HalfInt> = magnetic_range(l).collect();
        let d = ns.len();
        let mut mat = vec![vec![Complex64::new(0.0, 0.0); d]; d];
        for (j, &n) in ns.iter().enumerate() {
            let idx = WignerIndex { l, m: l, n };
            for (c, w) in invariant_field_action(which, &idx).unwrap() {
                let i = ns.iter().position(|&x| x == w.n).unwrap();
                mat[i][j] += c;
            }
        }
        mat
    }

    #[test]
    fn ladder_commutator_is_d3() {
        for l2 in 0..=8 {
            let l = HalfInt::new(l2);
            let a = ladder(InvariantField::D2, l);
            let b = ladder(InvariantField::D1, l);
            let c = ladder(InvariantField::D3, l);
            let d = a.len();
            for i in 0..d {
                for j in 0..d {
                    let ab: Complex64 = (0..d).map(|k| a[i][k] * b[k][j]).sum();
                    let ba: Complex64 = (0..d).map(|k| b[i][k] * a[k][j]).sum();
                    assert!((ab - ba - c[i][j]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn field_action_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let y = random_angles(&mut rng);
            for l2 in 0..=6 {
                let l = HalfInt::new(l2);
                for m in magnetic_range(l) {
                    for n in magnetic_range(l) {
                        let idx = WignerIndex { l, m, n };
                        for which in [InvariantField::D1, InvariantField::D2, InvariantField::D3] {
                            let v: Complex64 = invariant_field_action(which, &idx)
                                .unwrap()
                                .iter()
                                .map(|(c, w)| c * wigner_t(w, &y).unwrap())
                                .sum();
                            assert!(v.norm() <= 2.0 * l.to_f64() + 1e-12);
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn rows_have_unit_norm(l2 in 0i64..11, phi in 0.0..6.28f64, theta in 0.0..3.14159f64, psi in -6.28..6.28f64) {
            let t = wigner_matrix(HalfInt::new(l2), &EulerAngles::new(phi, theta, psi)).unwrap();
            for row in &t {
                let s: f64 = row.iter().map(|v| v.norm_sqr()).sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }
}
