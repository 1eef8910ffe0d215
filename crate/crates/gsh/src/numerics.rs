//! Exact rationals, half-integers, tagged reals and Liouville generators.

use crate::error::{GshError, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub type Rational = BigRational;

pub fn rat(p: i64, q: i64) -> Rational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: i64) -> Rational {
    BigRational::from_integer(BigInt::from(p))
}

pub fn rat_to_f64(x: &Rational) -> f64 {
    if let Some(v) = x.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // huge numerators: go through the decimal exponent
    let n = x.numer().to_f64().unwrap_or(f64::INFINITY);
    let d = x.denom().to_f64().unwrap_or(f64::INFINITY);
    n / d
}

pub fn format_rational(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Accepts "p/q", "p" or a finite decimal literal such as "0.25".
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| GshError::Parse(format!("bad rational '{s}'")))?;
        let q: BigInt = q.trim().parse().map_err(|_| GshError::Parse(format!("bad rational '{s}'")))?;
        if q.is_zero() {
            return Err(GshError::Parse(format!("zero denominator in '{s}'")));
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let digits = format!("{}{}", ip.trim_start_matches(['-', '+']), fp);
        let n: BigInt = digits.parse().map_err(|_| GshError::Parse(format!("bad rational '{s}'")))?;
        let d = num_traits::pow(BigInt::from(10), fp.len());
        let v = BigRational::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    let p: BigInt = s.parse().map_err(|_| GshError::Parse(format!("bad rational '{s}'")))?;
    Ok(BigRational::from_integer(p))
}

pub mod rational_str {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::String(s) => parse_rational(&s).map_err(serde::de::Error::custom),
            serde_json::Value::Number(n) => parse_rational(&n.to_string()).map_err(serde::de::Error::custom),
            other => Err(serde::de::Error::custom(format!("expected rational string, got {other}"))),
        }
    }
}

pub fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Uniform lower bound for nonzero values of integer combinations of `values`
/// (an integer offset included): every such value lies in (1/D)Z with D the lcm
/// of the denominators.
pub fn rational_symbol_floor(values: &[Rational]) -> Result<Rational> {
    if values.is_empty() {
        return Err(GshError::EmptyInput);
    }
    Ok(BigRational::new(BigInt::one(), lcm_denominators(values)))
}

/// Value `twice / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInt {
    pub twice: i64,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };

    pub fn new(twice: i64) -> Self {
        HalfInt { twice }
    }
    pub fn int(k: i64) -> Self {
        HalfInt { twice: 2 * k }
    }
    pub fn half(k: i64) -> Self {
        HalfInt { twice: k }
    }
    pub fn to_f64(self) -> f64 {
        self.twice as f64 / 2.0
    }
    pub fn to_rational(self) -> Rational {
        rat(self.twice, 2)
    }
    pub fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }
    pub fn abs(self) -> Self {
        HalfInt { twice: self.twice.abs() }
    }
    pub fn from_f64(x: f64) -> Result<Self> {
        let t = 2.0 * x;
        if !t.is_finite() || (t - t.round()).abs() > 1e-9 {
            return Err(GshError::Parse(format!("{x} is not a half-integer")));
        }
        Ok(HalfInt { twice: t.round() as i64 })
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, o: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice + o.twice }
    }
}
impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, o: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice - o.twice }
    }
}
impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt { twice: -self.twice }
    }
}
impl Mul<i64> for HalfInt {
    type Output = HalfInt;
    fn mul(self, k: i64) -> HalfInt {
        HalfInt { twice: self.twice * k }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::Number(n) => {
                HalfInt::from_f64(n.as_f64().unwrap_or(f64::NAN)).map_err(serde::de::Error::custom)
            }
            serde_json::Value::String(s) => {
                let r = parse_rational(&s).map_err(serde::de::Error::custom)?;
                let t = r * rat_int(2);
                if !t.is_integer() {
                    return Err(serde::de::Error::custom(format!("{s} is not a half-integer")));
                }
                Ok(HalfInt { twice: t.to_integer().to_i64().ok_or_else(|| serde::de::Error::custom("overflow"))? })
            }
            other => Err(serde::de::Error::custom(format!("expected half-integer, got {other}"))),
        }
    }
}

/// mu = sum_{k>=1} 10^(-k!), optionally transformed to scale*mu + shift.
#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleGenerator {
    pub scale: Rational,
    pub shift: Rational,
    /// Constant C of the paired approximation |x - p/j| + |y - q/j| < C j^(-n)
    /// when the generator drives a vector.
    pub pair_constant: f64,
}

fn factorial(n: u32) -> u32 {
    (1..=n).product::<u32>().max(1)
}

fn pow10(e: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), e as usize)
}

impl LiouvilleGenerator {
    pub fn standard() -> Self {
        LiouvilleGenerator { scale: rat_int(1), shift: rat_int(0), pair_constant: 2.0 }
    }

    pub fn affine(&self, scale: &Rational, shift: &Rational) -> Self {
        LiouvilleGenerator {
            scale: &self.scale * scale,
            shift: &self.shift * scale + shift,
            pair_constant: self.pair_constant,
        }
    }

    pub fn is_standard(&self) -> bool {
        self.scale.is_one() && self.shift.is_zero()
    }

    /// (p_n, j_n) for the underlying mu: j_n = 10^(n!), p_n = round(mu j_n).
    pub fn emit_mu(n: u32) -> (BigInt, BigInt) {
        let nf = factorial(n);
        let j = pow10(nf);
        let mut p = BigInt::zero();
        for k in 1..=n {
            p += pow10(nf - factorial(k));
        }
        (p, j)
    }

    /// Approximation pairs for scale*mu + shift.
    pub fn emit(&self, n: u32) -> (BigInt, BigInt) {
        let (p, j) = Self::emit_mu(n);
        let v = &self.scale * BigRational::new(p, j.clone()) + &self.shift;
        if self.is_standard() {
            return Self::emit_mu(n);
        }
        let den = lcm_denominators([&self.scale, &self.shift]) * &j;
        let num = (v * BigRational::from_integer(den.clone())).to_integer();
        (num, den)
    }

    /// Tail mu*j_n - p_n = sum_{k>n} 10^(n! - k!), as log10.
    pub fn log10_tail(n: u32) -> f64 {
        let nf = factorial(n) as f64;
        let mut s = 0.0f64;
        let lead = nf - factorial(n + 1) as f64;
        for k in n + 1..n + 4 {
            let e = nf - factorial(k) as f64 - lead;
            if e > -300.0 {
                s += 10f64.powf(e);
            }
        }
        lead + s.log10()
    }

    /// Certified upper bound mu_upper >= mu with truncation after `terms` terms:
    /// the tail sum_{k>terms} 10^(-k!) is at most 2*10^(-(terms+1)!).
    pub fn mu_upper(terms: u32) -> Rational {
        let d = pow10(factorial(terms + 1));
        let mut num = BigInt::zero();
        for k in 1..=terms {
            num += pow10(factorial(terms + 1) - factorial(k));
        }
        num += BigInt::from(2);
        BigRational::new(num, d)
    }

    /// Big-integer check of |mu - p_n/j_n| < j_n^(-n).
    pub fn verify(n: u32) -> bool {
        let (p, j) = Self::emit_mu(n);
        let approx = BigRational::new(p, j.clone());
        let upper = Self::mu_upper(n + 1);
        let lower = {
            // truncation itself is a lower bound
            let mut num = BigInt::zero();
            let d = pow10(factorial(n + 1));
            for k in 1..=n + 1 {
                num += pow10(factorial(n + 1) - factorial(k));
            }
            BigRational::new(num, d)
        };
        let bound = BigRational::new(BigInt::one(), num_traits::pow(j, n as usize));
        let err_hi = (&upper - &approx).abs();
        let err_lo = (&lower - &approx).abs();
        lower > approx && err_hi < bound && err_lo < bound
    }

    pub fn mu_approx() -> f64 {
        (1..=4u32).map(|k| 10f64.powi(-(factorial(k) as i32))).sum()
    }

    pub fn approx(&self) -> f64 {
        rat_to_f64(&self.scale) * Self::mu_approx() + rat_to_f64(&self.shift)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tag {
    Rational(Rational),
    NonLiouville,
    Liouville(LiouvilleGenerator),
    Unspecified,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaggedReal {
    pub approx: f64,
    pub tag: Tag,
}

impl TaggedReal {
    pub fn rational(x: Rational) -> Self {
        TaggedReal { approx: rat_to_f64(&x), tag: Tag::Rational(x) }
    }
    pub fn int(k: i64) -> Self {
        Self::rational(rat_int(k))
    }
    pub fn zero() -> Self {
        Self::int(0)
    }
    pub fn non_liouville(approx: f64) -> Self {
        TaggedReal { approx, tag: Tag::NonLiouville }
    }
    pub fn liouville(g: LiouvilleGenerator) -> Self {
        TaggedReal { approx: g.approx(), tag: Tag::Liouville(g) }
    }
    pub fn unspecified(approx: f64) -> Self {
        TaggedReal { approx, tag: Tag::Unspecified }
    }
    pub fn as_rational(&self) -> Option<&Rational> {
        match &self.tag {
            Tag::Rational(r) => Some(r),
            _ => None,
        }
    }
    pub fn is_rational(&self) -> bool {
        matches!(self.tag, Tag::Rational(_))
    }
    pub fn is_exact_zero(&self) -> bool {
        matches!(&self.tag, Tag::Rational(r) if r.is_zero())
    }
    pub fn is_irrational(&self) -> bool {
        matches!(self.tag, Tag::NonLiouville | Tag::Liouville(_))
    }
}

/// sum of multiplier*value. Rational terms add exactly; a single irrational term
/// keeps its class (a Liouville term becomes an affine Liouville generator);
/// two or more irrational terms, or any unspecified term, give UNSPECIFIED.
pub fn tagged_combination(terms: &[(&TaggedReal, Rational)]) -> TaggedReal {
    let mut exact = rat_int(0);
    let mut approx = 0.0;
    let mut irr: Vec<(&TaggedReal, &Rational)> = Vec::new();
    let mut unspecified = false;
    for (x, m) in terms {
        if m.is_zero() {
            continue;
        }
        approx += x.approx * rat_to_f64(m);
        match &x.tag {
            Tag::Rational(r) => exact += r * m,
            Tag::Unspecified => unspecified = true,
            _ => irr.push((x, m)),
        }
    }
    if unspecified || irr.len() > 1 {
        return TaggedReal::unspecified(approx);
    }
    match irr.first() {
        None => TaggedReal::rational(exact),
        Some((x, m)) => match &x.tag {
            Tag::Liouville(g) => TaggedReal { approx, tag: Tag::Liouville(g.affine(m, &exact)) },
            _ => TaggedReal::non_liouville(approx),
        },
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gap {
    Exact(Rational),
    Qualitative,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LatticeMembership {
    InLattice,
    NotInLattice(Gap),
    Unknown,
}

impl LatticeMembership {
    pub fn is_in(&self) -> bool {
        matches!(self, LatticeMembership::InLattice)
    }
    pub fn is_out(&self) -> bool {
        matches!(self, LatticeMembership::NotInLattice(_))
    }
}

pub const LATTICE_TOL: f64 = 1e-9;

/// Is x in modulus*Z?
pub fn classify_lattice_membership(x: &TaggedReal, modulus: &Rational) -> LatticeMembership {
    assert!(modulus.is_positive(), "modulus must be positive");
    match &x.tag {
        Tag::Rational(r) => {
            let q = r / modulus;
            let fl = q.floor();
            let frac = &q - &fl;
            if frac.is_zero() {
                LatticeMembership::InLattice
            } else {
                let up = rat_int(1) - &frac;
                let d = if frac < up { frac } else { up };
                LatticeMembership::NotInLattice(Gap::Exact(d * modulus))
            }
        }
        Tag::NonLiouville | Tag::Liouville(_) => LatticeMembership::NotInLattice(Gap::Qualitative),
        Tag::Unspecified => {
            let m = rat_to_f64(modulus);
            let q = x.approx / m;
            if (q - q.round()).abs() * m <= LATTICE_TOL {
                LatticeMembership::Unknown
            } else {
                LatticeMembership::NotInLattice(Gap::Qualitative)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TaggedRealJson {
    pub approx: Option<f64>,
    pub tag: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scale: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shift: Option<String>,
}

impl From<&TaggedReal> for TaggedRealJson {
    fn from(x: &TaggedReal) -> Self {
        let mut j = TaggedRealJson { approx: Some(x.approx), tag: String::new(), value: None, scale: None, shift: None };
        match &x.tag {
            Tag::Rational(r) => {
                j.tag = "rational".into();
                j.value = Some(format_rational(r));
            }
            Tag::NonLiouville => j.tag = "non_liouville".into(),
            Tag::Liouville(g) => {
                j.tag = "liouville_standard".into();
                if !g.is_standard() {
                    j.scale = Some(format_rational(&g.scale));
                    j.shift = Some(format_rational(&g.shift));
                }
            }
            Tag::Unspecified => j.tag = "unspecified".into(),
        }
        j
    }
}

impl TryFrom<TaggedRealJson> for TaggedReal {
    type Error = GshError;
    fn try_from(j: TaggedRealJson) -> Result<Self> {
        match j.tag.as_str() {
            "rational" => {
                let v = match (&j.value, j.approx) {
                    (Some(s), _) => parse_rational(s)?,
                    (None, Some(a)) => parse_rational(&format!("{a}"))?,
                    _ => return Err(GshError::Parse("rational tag needs a value".into())),
                };
                Ok(TaggedReal::rational(v))
            }
            "non_liouville" => j
                .approx
                .map(TaggedReal::non_liouville)
                .ok_or_else(|| GshError::Parse("non_liouville needs approx".into())),
            "liouville_standard" => {
                let g = LiouvilleGenerator::standard();
                let scale = j.scale.as_deref().map(parse_rational).transpose()?.unwrap_or_else(|| rat_int(1));
                let shift = j.shift.as_deref().map(parse_rational).transpose()?.unwrap_or_else(|| rat_int(0));
                Ok(TaggedReal::liouville(g.affine(&scale, &shift)))
            }
            "unspecified" => j
                .approx
                .map(TaggedReal::unspecified)
                .ok_or_else(|| GshError::Parse("unspecified needs approx".into())),
            other => Err(GshError::Parse(format!("unknown tag '{other}'"))),
        }
    }
}

impl Serialize for TaggedReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TaggedRealJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for TaggedReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = TaggedRealJson::deserialize(d)?;
        TaggedReal::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Exact complex rational.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CRat {
    pub re: Rational,
    pub im: Rational,
}

impl CRat {
    pub fn new(re: Rational, im: Rational) -> Self {
        CRat { re, im }
    }
    pub fn zero() -> Self {
        CRat { re: rat_int(0), im: rat_int(0) }
    }
    pub fn real(re: Rational) -> Self {
        CRat { re, im: rat_int(0) }
    }
    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    pub fn conj(&self) -> Self {
        CRat { re: self.re.clone(), im: -self.im.clone() }
    }
    pub fn to_c64(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }
    pub fn scale(&self, k: &Rational) -> Self {
        CRat { re: &self.re * k, im: &self.im * k }
    }
}

impl Add for &CRat {
    type Output = CRat;
    fn add(self, o: &CRat) -> CRat {
        CRat { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}
impl Sub for &CRat {
    type Output = CRat;
    fn sub(self, o: &CRat) -> CRat {
        CRat { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}
impl Mul for &CRat {
    type Output = CRat;
    fn mul(self, o: &CRat) -> CRat {
        CRat { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }
}
impl Neg for &CRat {
    type Output = CRat;
    fn neg(self) -> CRat {
        CRat { re: -self.re.clone(), im: -self.im.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lattice_examples() {
        assert_eq!(
            classify_lattice_membership(&TaggedReal::rational(rat(3, 2)), &rat_int(1)),
            LatticeMembership::NotInLattice(Gap::Exact(rat(1, 2)))
        );
        assert!(classify_lattice_membership(&TaggedReal::int(2), &rat_int(2)).is_in());
        assert_eq!(
            classify_lattice_membership(&TaggedReal::non_liouville(2f64.sqrt()), &rat_int(1)),
            LatticeMembership::NotInLattice(Gap::Qualitative)
        );
        assert_eq!(
            classify_lattice_membership(&TaggedReal::unspecified(3.0 + 1e-12), &rat_int(1)),
            LatticeMembership::Unknown
        );
        assert!(classify_lattice_membership(&TaggedReal::unspecified(3.3), &rat_int(1)).is_out());
        assert!(classify_lattice_membership(&TaggedReal::int(3), &rat_int(2)).is_out());
    }

    #[test]
    fn liouville_emits() {
        let (p1, j1) = LiouvilleGenerator::emit_mu(1);
        assert_eq!((p1, j1), (BigInt::from(1), BigInt::from(10)));
        let (p2, j2) = LiouvilleGenerator::emit_mu(2);
        assert_eq!((p2, j2), (BigInt::from(11), BigInt::from(100)));
        for n in 1..=5 {
            assert!(LiouvilleGenerator::verify(n), "n={n}");
        }
    }

    #[test]
    fn liouville_tail_log() {
        // mu*10 - 1 = 0.1 + 10^(-5) + ...
        let t = LiouvilleGenerator::log10_tail(1);
        assert!((t - (0.10001f64).log10()).abs() < 1e-9);
        assert!(LiouvilleGenerator::log10_tail(3) < -(3.0 * 6.0) + 0.31);
    }

    #[test]
    fn symbol_floor_examples() {
        assert_eq!(rational_symbol_floor(&[rat(1, 2), rat(1, 3), rat(1, 5)]).unwrap(), rat(1, 30));
        assert_eq!(rational_symbol_floor(&[rat_int(1)]).unwrap(), rat_int(1));
        assert_eq!(rational_symbol_floor(&[rat(2, 7)]).unwrap(), rat(1, 7));
        assert_eq!(rational_symbol_floor(&[]), Err(GshError::EmptyInput));
    }

    #[test]
    fn symbol_floor_brute_force_two_sevenths() {
        let mut best = f64::INFINITY;
        for k in -30i64..=30 {
            for m in -30i64..=30 {
                let v = (k as f64) * 2.0 / 7.0 - m as f64;
                if v.abs() > 1e-12 {
                    best = best.min(v.abs());
                }
            }
        }
        assert!((best - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn rational_json_round_trip() {
        for s in ["3/7", "-2/4", "5", "0.25"] {
            let r = parse_rational(s).unwrap();
            assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
        }
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn tagged_json_round_trip() {
        let xs = vec![
            TaggedReal::rational(rat(-3, 5)),
            TaggedReal::non_liouville(2f64.sqrt()),
            TaggedReal::liouville(LiouvilleGenerator::standard()),
            TaggedReal::liouville(LiouvilleGenerator::standard().affine(&rat(1, 2), &rat(1, 3))),
            TaggedReal::unspecified(0.7),
        ];
        for x in xs {
            let s = serde_json::to_string(&x).unwrap();
            let y: TaggedReal = serde_json::from_str(&s).unwrap();
            assert_eq!(x.tag, y.tag);
        }
    }

    #[test]
    fn combination_classes() {
        let s2 = TaggedReal::non_liouville(2f64.sqrt());
        let l = TaggedReal::liouville(LiouvilleGenerator::standard());
        let h = TaggedReal::rational(rat(1, 2));
        let c = tagged_combination(&[(&h, rat_int(2)), (&s2, rat_int(0))]);
        assert_eq!(c.tag, Tag::Rational(rat_int(1)));
        assert_eq!(tagged_combination(&[(&s2, rat_int(3)), (&h, rat_int(1))]).tag, Tag::NonLiouville);
        assert!(matches!(tagged_combination(&[(&l, rat_int(2))]).tag, Tag::Liouville(_)));
        assert_eq!(tagged_combination(&[(&l, rat_int(1)), (&s2, rat_int(1))]).tag, Tag::Unspecified);
    }

    #[test]
    fn halfint_basics() {
        let a = HalfInt::half(3);
        assert_eq!(a.to_f64(), 1.5);
        assert!(!a.is_integer());
        assert_eq!(a + HalfInt::half(1), HalfInt::int(2));
        assert_eq!(format!("{}", a), "3/2");
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<HalfInt>(&s).unwrap(), a);
        assert!(HalfInt::from_f64(0.3).is_err());
    }

    fn arb_rat() -> impl Strategy<Value = Rational> {
        (-1000i64..1000, 1i64..500).prop_map(|(p, q)| rat(p, q))
    }

    proptest! {
        #[test]
        fn rational_add_sub_exact(a in arb_rat(), b in arb_rat()) {
            prop_assert_eq!((&a + &b) - &b, a);
        }

        #[test]
        fn rational_tag_never_unknown(a in arb_rat(), m in 1i64..20) {
            let x = TaggedReal::rational(a);
            prop_assert_ne!(classify_lattice_membership(&x, &rat_int(m)), LatticeMembership::Unknown);
        }

        #[test]
        fn floor_bounds_integer_combinations(p1 in -20i64..20, q1 in 1i64..12, p2 in -20i64..20, q2 in 1i64..12,
                                             k1 in -15i64..15, k2 in -15i64..15, m in -15i64..15) {
            let vals = [rat(p1, q1), rat(p2, q2)];
            let eps = rational_symbol_floor(&vals).unwrap();
            let v = &vals[0] * rat_int(k1) + &vals[1] * rat_int(k2) + rat_int(m);
            if !v.is_zero() {
                prop_assert!(v.abs() >= eps);
            }
        }
    }
}
