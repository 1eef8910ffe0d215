//! Evolution operators on T^{r+1} x (S^3)^s with time-periodic coefficients:
//! data model, symbol, zero set, gauge reduction, structure flags and the
//! global solvability / hypoellipticity classifier.

use crate::diophantine::{self, DcReport, DcStatus};
use crate::error::{GshError, Result};
use crate::fourier::trig::{real_range, CTrig, TrigPoly, TrigPolyJson};
use crate::fourier::{tgrid, PartialMode, SpectralField};
use crate::numerics::{
    classify_lattice_membership, format_rational, rat, rat_int, tagged_combination, CRat, HalfInt,
    LatticeMembership, Rational, Tag, TaggedReal, LATTICE_TOL,
};
use crate::sublevel;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Real coefficient function: mean-zero real TrigPoly plus a tagged mean.
#[derive(Clone, Debug, PartialEq)]
pub struct RealFn {
    pub wave: TrigPoly,
    pub mean: TaggedReal,
}

impl RealFn {
    pub fn zero() -> Self {
        RealFn { wave: TrigPoly::zero(), mean: TaggedReal::zero() }
    }

    pub fn constant(mean: TaggedReal) -> Self {
        RealFn { wave: TrigPoly::zero(), mean }
    }

    pub fn rational(x: Rational) -> Self {
        Self::constant(TaggedReal::rational(x))
    }

    /// From a real TrigPoly; its zero coefficient becomes the (rational) mean.
    pub fn from_poly(p: &TrigPoly) -> Result<Self> {
        if !p.is_real() {
            return Err(GshError::Parse("coefficient function is not real-valued".into()));
        }
        Ok(RealFn { wave: p.wave(), mean: TaggedReal::rational(p.mean().re) })
    }

    pub fn with_mean(wave: &TrigPoly, mean: TaggedReal) -> Result<Self> {
        let mut r = Self::from_poly(wave)?;
        r.wave = wave.wave();
        r.mean = mean;
        Ok(r)
    }

    pub fn is_constant(&self) -> bool {
        self.wave.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.wave.is_zero() && self.mean.is_exact_zero()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.wave.eval_real(t) + self.mean.approx
    }

    pub fn to_ctrig(&self) -> CTrig {
        self.wave.to_float().add(&CTrig::constant(Complex64::new(self.mean.approx, 0.0)))
    }

    /// The whole function as an exact TrigPoly, when the mean is rational.
    pub fn to_poly(&self) -> Option<TrigPoly> {
        self.mean.as_rational().map(|m| self.wave.add(&TrigPoly::constant(m.clone())))
    }

    pub fn combination(terms: &[(&RealFn, Rational)]) -> RealFn {
        let mut wave = TrigPoly::zero();
        for (f, m) in terms {
            wave = wave.add(&f.wave.scale(m));
        }
        let means: Vec<(&TaggedReal, Rational)> = terms.iter().map(|(f, m)| (&f.mean, m.clone())).collect();
        RealFn { wave, mean: tagged_combination(&means) }
    }

    pub fn scale(&self, k: &Rational) -> RealFn {
        Self::combination(&[(self, k.clone())])
    }

    /// Sign change with the relative margin used throughout.
    pub fn changes_sign(&self) -> bool {
        if self.is_constant() {
            return false;
        }
        let (lo, _, hi, _) = real_range(&self.to_ctrig());
        let margin = 1e-12 * (1.0 + self.coeff_mass());
        hi > margin && lo < -margin
    }

    fn coeff_mass(&self) -> f64 {
        self.wave.coeffs().values().map(|c| c.to_c64().norm()).sum::<f64>() + self.mean.approx.abs()
    }

    pub fn to_json(&self) -> TrigPolyJson {
        match self.mean.as_rational() {
            Some(m) => TrigPolyJson::from(&self.wave.add(&TrigPoly::constant(m.clone()))),
            None => {
                let mut j = TrigPolyJson::from(&self.wave);
                j.mean = Some((&self.mean).into());
                j
            }
        }
    }

    pub fn from_json(j: &TrigPolyJson) -> Result<Self> {
        let p = TrigPoly::try_from(j)?;
        match &j.mean {
            None => Self::from_poly(&p),
            Some(m) => Self::with_mean(&p, TaggedReal::try_from(m.clone())?),
        }
    }

    /// Human-readable form like `1/2 + 1*cos(1t) + ...`.
    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        match &self.mean.tag {
            Tag::Rational(r) if r.is_zero() => {}
            Tag::Rational(r) => parts.push(format_rational(r)),
            _ => parts.push(format!("{:.6}", self.mean.approx)),
        }
        for (k, c) in self.wave.coeffs() {
            if *k <= 0 {
                continue;
            }
            // c e^{ikt} + conj(c) e^{-ikt} = 2 Re c cos kt - 2 Im c sin kt
            let two = rat_int(2);
            let cc = &c.re * &two;
            let ss = -(&c.im * &two);
            if !cc.is_zero() {
                parts.push(format!("{}cos({k}t)", format_rational(&cc)));
            }
            if !ss.is_zero() {
                parts.push(format!("{}sin({k}t)", format_rational(&ss)));
            }
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionOperator {
    pub r: usize,
    pub s: usize,
    /// c_j = a_j + i b_j
    pub a: Vec<RealFn>,
    pub b: Vec<RealFn>,
    /// d_k = e_k + i f_k
    pub e: Vec<RealFn>,
    pub f: Vec<RealFn>,
    pub q_re: TaggedReal,
    pub q_im: TaggedReal,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexFnJson {
    pub re: TrigPolyJson,
    pub im: TrigPolyJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexConstJson {
    pub re: TaggedReal,
    pub im: TaggedReal,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorJson {
    pub r: usize,
    pub s: usize,
    pub c: Vec<ComplexFnJson>,
    pub d: Vec<ComplexFnJson>,
    pub q: ComplexConstJson,
}

impl EvolutionOperator {
    pub fn new(c: Vec<(RealFn, RealFn)>, d: Vec<(RealFn, RealFn)>, q_re: TaggedReal, q_im: TaggedReal) -> Self {
        let (a, b) = c.into_iter().unzip();
        let (e, f) = d.into_iter().unzip();
        let mut op = EvolutionOperator { r: 0, s: 0, a, b, e, f, q_re, q_im };
        op.r = op.a.len();
        op.s = op.e.len();
        op
    }

    /// Same operator with rational complex constant q.
    pub fn with_rational_q(c: Vec<(RealFn, RealFn)>, d: Vec<(RealFn, RealFn)>, q: (Rational, Rational)) -> Self {
        Self::new(c, d, TaggedReal::rational(q.0), TaggedReal::rational(q.1))
    }

    pub fn from_json(j: &OperatorJson) -> Result<Self> {
        if j.c.len() != j.r || j.d.len() != j.s {
            return Err(GshError::Parse(format!(
                "operator declares r={}, s={} but has {} torus and {} sphere coefficients",
                j.r,
                j.s,
                j.c.len(),
                j.d.len()
            )));
        }
        let conv = |v: &Vec<ComplexFnJson>| -> Result<Vec<(RealFn, RealFn)>> {
            v.iter().map(|c| Ok((RealFn::from_json(&c.re)?, RealFn::from_json(&c.im)?))).collect()
        };
        Ok(Self::new(conv(&j.c)?, conv(&j.d)?, j.q.re.clone(), j.q.im.clone()))
    }

    pub fn to_json(&self) -> OperatorJson {
        let conv = |x: &[RealFn], y: &[RealFn]| {
            x.iter().zip(y).map(|(p, q)| ComplexFnJson { re: p.to_json(), im: q.to_json() }).collect()
        };
        OperatorJson {
            r: self.r,
            s: self.s,
            c: conv(&self.a, &self.b),
            d: conv(&self.e, &self.f),
            q: ComplexConstJson { re: self.q_re.clone(), im: self.q_im.clone() },
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let j: OperatorJson = serde_json::from_str(text)?;
        Self::from_json(&j)
    }

    pub fn q_approx(&self) -> Complex64 {
        Complex64::new(self.q_re.approx, self.q_im.approx)
    }

    /// The constant-coefficient operator L0 built from the averages.
    pub fn averaged(&self) -> EvolutionOperator {
        let m = |v: &[RealFn]| v.iter().map(|f| RealFn::constant(f.mean.clone())).collect::<Vec<_>>();
        EvolutionOperator { r: self.r, s: self.s, a: m(&self.a), b: m(&self.b), e: m(&self.e), f: m(&self.f), ..self.clone() }
    }

    pub fn is_constant(&self) -> bool {
        self.a.iter().chain(&self.b).chain(&self.e).chain(&self.f).all(|f| f.is_constant())
    }

    /// <b, xi> + <f, alpha>
    pub fn imag_combination(&self, xi: &[i64], alpha: &[HalfInt]) -> RealFn {
        let mut terms: Vec<(&RealFn, Rational)> = Vec::new();
        for (f, x) in self.b.iter().zip(xi) {
            terms.push((f, rat_int(*x)));
        }
        for (f, a) in self.f.iter().zip(alpha) {
            terms.push((f, a.to_rational()));
        }
        RealFn::combination(&terms)
    }

    /// <a, xi> + <e, alpha>
    pub fn real_combination(&self, xi: &[i64], alpha: &[HalfInt]) -> RealFn {
        let mut terms: Vec<(&RealFn, Rational)> = Vec::new();
        for (f, x) in self.a.iter().zip(xi) {
            terms.push((f, rat_int(*x)));
        }
        for (f, a) in self.e.iter().zip(alpha) {
            terms.push((f, a.to_rational()));
        }
        RealFn::combination(&terms)
    }

    /// Mode function theta(t) = i(<c(t),xi> + <d(t),alpha> - iq).
    pub fn mode_theta(&self, xi: &[i64], alpha: &[HalfInt]) -> CTrig {
        let re = self.real_combination(xi, alpha);
        let im = self.imag_combination(xi, alpha);
        // i(A + iB) + q = -B + q_re + i(A + q_im)
        let wave = re.wave.to_float().scale(Complex64::new(0.0, 1.0)).add(&im.wave.to_float().scale(Complex64::new(-1.0, 0.0)));
        wave.add(&CTrig::constant(Complex64::new(-im.mean.approx + self.q_re.approx, re.mean.approx + self.q_im.approx)))
    }

    /// Parts of z0 = <c0,xi> + <d0,alpha> - iq: (Re, Im) as tagged reals.
    pub fn shifted_symbol(&self, xi: &[i64], alpha: &[HalfInt]) -> (TaggedReal, TaggedReal) {
        let mut re: Vec<(&TaggedReal, Rational)> = vec![(&self.q_im, rat_int(1))];
        let mut im: Vec<(&TaggedReal, Rational)> = vec![(&self.q_re, rat_int(-1))];
        for j in 0..self.r {
            re.push((&self.a[j].mean, rat_int(xi[j])));
            im.push((&self.b[j].mean, rat_int(xi[j])));
        }
        for k in 0..self.s {
            re.push((&self.e[k].mean, alpha[k].to_rational()));
            im.push((&self.f[k].mean, alpha[k].to_rational()));
        }
        (tagged_combination(&re), tagged_combination(&im))
    }

    /// Is z0(xi, alpha) an integer?
    pub fn resonance(&self, xi: &[i64], alpha: &[HalfInt]) -> LatticeMembership {
        let (re, im) = self.shifted_symbol(xi, alpha);
        match zero_membership(&im) {
            LatticeMembership::NotInLattice(g) => LatticeMembership::NotInLattice(g),
            LatticeMembership::Unknown => match classify_lattice_membership(&re, &rat_int(1)) {
                LatticeMembership::NotInLattice(g) => LatticeMembership::NotInLattice(g),
                _ => LatticeMembership::Unknown,
            },
            LatticeMembership::InLattice => classify_lattice_membership(&re, &rat_int(1)),
        }
    }

    /// Mode-wise gauge multiplication u -> e^{-i(<A,xi> + <E,alpha>)} u.
    pub fn check_dims(&self, field: &SpectralField) -> Result<()> {
        if field.r != self.r || field.s != self.s {
            return Err(GshError::DimensionMismatch(format!(
                "operator has (r,s)=({},{}), field has ({},{})",
                self.r, self.s, field.r, field.s
            )));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        let mut s = String::from("dt");
        for j in 0..self.r {
            s += &format!(" + [{} + i({})]dx{}", self.a[j].describe(), self.b[j].describe(), j + 1);
        }
        for k in 0..self.s {
            s += &format!(" + [{} + i({})]D3_{}", self.e[k].describe(), self.f[k].describe(), k + 1);
        }
        let show = |x: &TaggedReal| match &x.tag {
            Tag::Rational(r) => format_rational(r),
            _ => format!("{:.6}", x.approx),
        };
        s + &format!(" + ({} + i{})", show(&self.q_re), show(&self.q_im))
    }
}

/// x == 0 as a three-valued decision.
pub fn zero_membership(x: &TaggedReal) -> LatticeMembership {
    match &x.tag {
        Tag::Rational(r) if r.is_zero() => LatticeMembership::InLattice,
        Tag::Rational(r) => LatticeMembership::NotInLattice(crate::numerics::Gap::Exact(r.abs())),
        Tag::NonLiouville | Tag::Liouville(_) => LatticeMembership::NotInLattice(crate::numerics::Gap::Qualitative),
        Tag::Unspecified => {
            if x.approx.abs() <= LATTICE_TOL {
                LatticeMembership::Unknown
            } else {
                LatticeMembership::NotInLattice(crate::numerics::Gap::Qualitative)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Averages {
    pub a0: Vec<TaggedReal>,
    pub b0: Vec<TaggedReal>,
    pub e0: Vec<TaggedReal>,
    pub f0: Vec<TaggedReal>,
}

impl Averages {
    /// c0 and d0 as floating complex vectors.
    pub fn c0(&self) -> Vec<Complex64> {
        self.a0.iter().zip(&self.b0).map(|(a, b)| Complex64::new(a.approx, b.approx)).collect()
    }
    pub fn d0(&self) -> Vec<Complex64> {
        self.e0.iter().zip(&self.f0).map(|(a, b)| Complex64::new(a.approx, b.approx)).collect()
    }
    /// Exact c0 when all parts are rational.
    pub fn c0_exact(&self) -> Option<Vec<CRat>> {
        exact_pairs(&self.a0, &self.b0)
    }
    pub fn d0_exact(&self) -> Option<Vec<CRat>> {
        exact_pairs(&self.e0, &self.f0)
    }
}

fn exact_pairs(x: &[TaggedReal], y: &[TaggedReal]) -> Option<Vec<CRat>> {
    x.iter().zip(y).map(|(a, b)| Some(CRat::new(a.as_rational()?.clone(), b.as_rational()?.clone()))).collect()
}

pub fn averages(op: &EvolutionOperator) -> Averages {
    let m = |v: &[RealFn]| v.iter().map(|f| f.mean.clone()).collect();
    Averages { a0: m(&op.a), b0: m(&op.b), e0: m(&op.e), f0: m(&op.f) }
}

/// Symbol value; `exact` present when all data are rational.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolValue {
    pub value: Complex64,
    pub exact: Option<CRat>,
}

/// sigma_{L0}(tau, xi, alpha) = i(tau + <c0,xi> + <d0,alpha> - iq)
pub fn symbol_l0(op: &EvolutionOperator, tau: i64, xi: &[i64], alpha: &[HalfInt]) -> Result<SymbolValue> {
    if xi.len() != op.r || alpha.len() != op.s {
        return Err(GshError::DimensionMismatch("xi/alpha lengths do not match the operator".into()));
    }
    let (re, im) = op.shifted_symbol(xi, alpha);
    let z = Complex64::new(re.approx + tau as f64, im.approx);
    let value = Complex64::new(0.0, 1.0) * z;
    let exact = match (re.as_rational(), im.as_rational()) {
        (Some(x), Some(y)) => Some(CRat::new(-y, x + rat_int(tau))),
        _ => None,
    };
    Ok(SymbolValue { value, exact })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroElement {
    pub tau: i64,
    pub xi: Vec<i64>,
    pub l: Vec<HalfInt>,
    pub alpha: Vec<HalfInt>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub elements: Vec<ZeroElement>,
    pub infinite: bool,
    pub empty: bool,
    /// false when irrational data prevented an exact decision
    pub decided: bool,
    pub bound: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum LinearVerdict {
    NoSolution,
    Solutions { kernel_dim: usize },
    Undecided,
}

/// Integer solutions u = (tau, xi, 2 alpha) of z(u) = 0 with tagged coefficients.
fn zero_lattice(op: &EvolutionOperator) -> LinearVerdict {
    let n = 1 + op.r + op.s;
    let half = rat(1, 2);
    let mut rows: Vec<(Vec<TaggedReal>, TaggedReal)> = Vec::new();
    let mut re = vec![TaggedReal::int(1)];
    let mut im = vec![TaggedReal::zero()];
    for j in 0..op.r {
        re.push(op.a[j].mean.clone());
        im.push(op.b[j].mean.clone());
    }
    for k in 0..op.s {
        re.push(tagged_combination(&[(&op.e[k].mean, half.clone())]));
        im.push(tagged_combination(&[(&op.f[k].mean, half.clone())]));
    }
    rows.push((re, op.q_im.clone()));
    rows.push((im, tagged_combination(&[(&op.q_re, rat_int(-1))])));
    let mut active = vec![true; n];
    loop {
        let mut changed = false;
        for (coef, c) in &rows {
            let mut irr: Vec<Option<usize>> = Vec::new();
            if matches!(c.tag, Tag::Unspecified) {
                return LinearVerdict::Undecided;
            }
            if !c.is_rational() {
                irr.push(None);
            }
            for (v, x) in coef.iter().enumerate() {
                if !active[v] {
                    continue;
                }
                if matches!(x.tag, Tag::Unspecified) {
                    return LinearVerdict::Undecided;
                }
                if !x.is_rational() {
                    irr.push(Some(v));
                }
            }
            match irr.as_slice() {
                [] => {}
                [None] => return LinearVerdict::NoSolution,
                [Some(v)] => {
                    active[*v] = false;
                    changed = true;
                }
                _ => return LinearVerdict::Undecided,
            }
        }
        if !changed {
            break;
        }
    }
    let vars: Vec<usize> = (0..n).filter(|&v| active[v]).collect();
    let mut mat: Vec<Vec<BigInt>> = Vec::new();
    let mut rhs: Vec<BigInt> = Vec::new();
    for (coef, c) in &rows {
        let mut vals: Vec<Rational> = vars.iter().map(|&v| coef[v].as_rational().unwrap().clone()).collect();
        vals.push(-c.as_rational().unwrap().clone());
        let l = crate::numerics::lcm_denominators(vals.iter());
        let ints: Vec<BigInt> = vals.iter().map(|x| (x * Rational::from_integer(l.clone())).to_integer()).collect();
        rhs.push(ints[vars.len()].clone());
        mat.push(ints[..vars.len()].to_vec());
    }
    match diophantine::solve_integer_system(&mat, &rhs) {
        None => LinearVerdict::NoSolution,
        Some((rank, _)) => LinearVerdict::Solutions { kernel_dim: vars.len() - rank },
    }
}

/// Zeros of the averaged symbol with |tau| + |xi| + |l| <= bound.
pub fn zero_set(op: &EvolutionOperator, bound: usize) -> ZeroSet {
    let verdict = zero_lattice(op);
    let mut elements = Vec::new();
    if verdict != LinearVerdict::NoSolution {
        for m in crate::fourier::enumerate_modes(op.r, op.s, bound) {
            // one representative beta per (xi, l, alpha)
            if m.beta != m.alpha {
                continue;
            }
            let (re, im) = op.shifted_symbol(&m.xi, &m.alpha);
            let zero_im = match zero_membership(&im) {
                LatticeMembership::InLattice => true,
                LatticeMembership::Unknown => true,
                LatticeMembership::NotInLattice(_) => false,
            };
            if !zero_im {
                continue;
            }
            let tau = match re.as_rational() {
                Some(x) if x.is_integer() => -x.to_integer().to_i64().unwrap_or(i64::MAX / 4),
                Some(_) => continue,
                None => {
                    if matches!(re.tag, Tag::Unspecified) && (re.approx - re.approx.round()).abs() <= LATTICE_TOL {
                        -(re.approx.round() as i64)
                    } else {
                        continue;
                    }
                }
            };
            if (tau.abs() as f64 + m.norm()) <= bound as f64 + 1e-9 {
                elements.push(ZeroElement { tau, xi: m.xi.clone(), l: m.l.clone(), alpha: m.alpha.clone() });
            }
        }
    }
    let (infinite, empty, decided) = match verdict {
        LinearVerdict::NoSolution => (false, true, true),
        LinearVerdict::Solutions { kernel_dim } => (op.s >= 1 || kernel_dim > 0, false, true),
        LinearVerdict::Undecided => (op.s >= 1 && !elements.is_empty(), elements.is_empty(), false),
    };
    ZeroSet { elements, infinite, empty, decided, bound }
}

/// Primitives A_j, E_k of the oscillatory real parts.
#[derive(Clone, Debug, PartialEq)]
pub struct Gauge {
    pub a: Vec<TrigPoly>,
    pub e: Vec<TrigPoly>,
}

impl Gauge {
    pub fn is_identity(&self) -> bool {
        self.a.iter().chain(&self.e).all(|p| p.is_zero())
    }

    /// Phase <A(t),xi> + <E(t),alpha>.
    pub fn phase(&self, xi: &[i64], alpha: &[HalfInt], t: f64) -> f64 {
        let mut p = 0.0;
        for (a, x) in self.a.iter().zip(xi) {
            p += a.eval_real(t) * *x as f64;
        }
        for (e, al) in self.e.iter().zip(alpha) {
            p += e.eval_real(t) * al.to_f64();
        }
        p
    }

    /// Mode-wise multiplication by e^{-i(<A,xi> + <E,alpha>)}; the inverse with `inverse`.
    pub fn apply(&self, field: &SpectralField, inverse: bool) -> SpectralField {
        let ts = tgrid::grid_points(field.n_t);
        let sign = if inverse { 1.0 } else { -1.0 };
        let mut out = field.clone();
        for (m, v) in out.table.iter_mut() {
            for (i, c) in v.iter_mut().enumerate() {
                *c *= Complex64::from_polar(1.0, sign * self.phase(&m.xi, &m.alpha, ts[i]));
            }
        }
        out
    }
}

/// Replace real parts by their averages; L(Psi u) = Psi(L~ u) with Psi the gauge multiplication.
pub fn gauge_reduce(op: &EvolutionOperator) -> (EvolutionOperator, Gauge) {
    let prim = |f: &RealFn| f.wave.primitive().0;
    let gauge = Gauge { a: op.a.iter().map(prim).collect(), e: op.e.iter().map(prim).collect() };
    let mut t = op.clone();
    t.a = op.a.iter().map(|f| RealFn::constant(f.mean.clone())).collect();
    t.e = op.e.iter().map(|f| RealFn::constant(f.mean.clone())).collect();
    (t, gauge)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    In,
    Out,
    Unknown,
}

impl From<&LatticeMembership> for Membership {
    fn from(m: &LatticeMembership) -> Self {
        match m {
            LatticeMembership::InLattice => Membership::In,
            LatticeMembership::NotInLattice(_) => Membership::Out,
            LatticeMembership::Unknown => Membership::Unknown,
        }
    }
}

/// Ratio between two functions; exact when both are rational.
#[derive(Clone, Debug, PartialEq)]
pub struct Ratio {
    pub approx: f64,
    pub exact: Option<Rational>,
}

impl Ratio {
    fn to_json(&self) -> Value {
        json!({"approx": self.approx, "exact": self.exact.as_ref().map(format_rational)})
    }
}

/// b = base*lambda, f = base*gamma.
#[derive(Clone, Debug, PartialEq)]
pub struct Span1 {
    pub base: RealFn,
    pub lambda: Vec<Ratio>,
    pub gamma: Vec<Ratio>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructureReport {
    pub averages: Averages,
    pub imag_zero: bool,
    pub is_imag_constant: bool,
    pub span_dim: usize,
    pub span_exact: bool,
    pub sign_change_b: Vec<bool>,
    pub sign_change_f: Vec<bool>,
    pub b0f0_zero: Membership,
    pub a0_in_z: Vec<Membership>,
    pub e0_in_2z: Vec<Membership>,
    pub q_in_iz: Membership,
    pub span1: Option<Span1>,
}

impl StructureReport {
    pub fn any_sign_change(&self) -> bool {
        self.sign_change_b.iter().chain(&self.sign_change_f).any(|x| *x)
    }

    /// (a0, e0, q) in Z^r x 2Z^s x iZ.
    pub fn lattice(&self) -> Membership {
        let all: Vec<&Membership> = self.a0_in_z.iter().chain(&self.e0_in_2z).chain(std::iter::once(&self.q_in_iz)).collect();
        if all.iter().any(|m| **m == Membership::Out) {
            Membership::Out
        } else if all.iter().all(|m| **m == Membership::In) {
            Membership::In
        } else {
            Membership::Unknown
        }
    }

    pub fn to_json(&self) -> Value {
        let t = |v: &[TaggedReal]| v.iter().map(|x| serde_json::to_value(x).unwrap()).collect::<Vec<_>>();
        json!({
            "a0": t(&self.averages.a0),
            "b0": t(&self.averages.b0),
            "e0": t(&self.averages.e0),
            "f0": t(&self.averages.f0),
            "imag_zero": self.imag_zero,
            "is_imag_constant": self.is_imag_constant,
            "span_dim": self.span_dim,
            "span_exact": self.span_exact,
            "sign_change_b": self.sign_change_b,
            "sign_change_f": self.sign_change_f,
            "b0f0_zero": self.b0f0_zero,
            "a0_in_z": self.a0_in_z,
            "e0_in_2z": self.e0_in_2z,
            "q_in_iz": self.q_in_iz,
            "span1": self.span1.as_ref().map(|s| json!({
                "base": s.base.describe(),
                "lambda": s.lambda.iter().map(Ratio::to_json).collect::<Vec<_>>(),
                "gamma": s.gamma.iter().map(Ratio::to_json).collect::<Vec<_>>(),
            })),
        })
    }
}

/// Coordinates of a real function: mean followed by (Re, Im) of positive frequencies.
fn coordinates(f: &RealFn, kmax: i64) -> Vec<TaggedReal> {
    let mut v = vec![f.mean.clone()];
    for k in 1..=kmax {
        let c = f.wave.coeff(k);
        v.push(TaggedReal::rational(c.re));
        v.push(TaggedReal::rational(c.im));
    }
    v
}

fn rational_rank(rows: &[Vec<Rational>]) -> usize {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let mut rank = 0;
    let cols = m.first().map(|r| r.len()).unwrap_or(0);
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(rank, p);
        for i in 0..m.len() {
            if i != rank && !m[i][c].is_zero() {
                let k = &m[i][c] / &m[rank][c];
                for j in c..cols {
                    let d = &k * &m[rank][j];
                    m[i][j] -= d;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn float_rank(rows: &[Vec<f64>]) -> usize {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let scale = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
    let tol = 1e-10 * scale;
    let mut rank = 0;
    let cols = m.first().map(|r| r.len()).unwrap_or(0);
    for c in 0..cols {
        let Some(p) = (rank..m.len()).max_by(|&a, &b| m[a][c].abs().partial_cmp(&m[b][c].abs()).unwrap()) else { continue };
        if m[p][c].abs() <= tol {
            continue;
        }
        m.swap(rank, p);
        for i in 0..m.len() {
            if i != rank {
                let k = m[i][c] / m[rank][c];
                for j in c..cols {
                    m[i][j] -= k * m[rank][j];
                }
            }
        }
        rank += 1;
    }
    rank
}

pub fn structure_report(op: &EvolutionOperator) -> StructureReport {
    let av = averages(op);
    let fns: Vec<&RealFn> = op.b.iter().chain(&op.f).collect();
    let imag_zero = fns.iter().all(|f| f.is_zero());
    let is_imag_constant = fns.iter().all(|f| f.is_constant());
    let kmax = fns.iter().map(|f| f.wave.bandwidth()).max().unwrap_or(0);
    let coords: Vec<Vec<TaggedReal>> = fns.iter().map(|f| coordinates(f, kmax)).collect();
    let all_rational = coords.iter().flatten().all(|x| x.is_rational());
    let (span_dim, span_exact) = if fns.is_empty() {
        (0, true)
    } else if all_rational {
        let rows: Vec<Vec<Rational>> = coords.iter().map(|r| r.iter().map(|x| x.as_rational().unwrap().clone()).collect()).collect();
        (rational_rank(&rows), true)
    } else {
        let rows: Vec<Vec<f64>> = coords.iter().map(|r| r.iter().map(|x| x.approx).collect()).collect();
        (float_rank(&rows), false)
    };
    let span1 = if span_dim == 1 {
        let base_idx = fns.iter().position(|f| !f.is_zero() && !(f.is_constant() && zero_membership(&f.mean).is_in()));
        base_idx.map(|bi| {
            let base = &coords[bi];
            let p = base
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.approx.abs().partial_cmp(&b.1.approx.abs()).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            let ratio = |row: &Vec<TaggedReal>| -> Ratio {
                let approx = row[p].approx / base[p].approx;
                let exact = match (row[p].as_rational(), base[p].as_rational()) {
                    (Some(x), Some(y)) if all_rational => Some(x / y),
                    _ => None,
                };
                Ratio { approx, exact }
            };
            Span1 {
                base: fns[bi].clone(),
                lambda: coords[..op.r].iter().map(ratio).collect(),
                gamma: coords[op.r..].iter().map(ratio).collect(),
            }
        })
    } else {
        None
    };
    let zeros: Vec<LatticeMembership> = av.b0.iter().chain(&av.f0).map(zero_membership).collect();
    let b0f0_zero = if zeros.iter().all(|m| m.is_in()) {
        Membership::In
    } else if zeros.iter().any(|m| m.is_out()) {
        Membership::Out
    } else {
        Membership::Unknown
    };
    let q_in_iz = match (zero_membership(&op.q_re), classify_lattice_membership(&op.q_im, &rat_int(1))) {
        (LatticeMembership::InLattice, LatticeMembership::InLattice) => Membership::In,
        (a, b) if a.is_out() || b.is_out() => Membership::Out,
        _ => Membership::Unknown,
    };
    StructureReport {
        imag_zero,
        is_imag_constant,
        span_dim,
        span_exact,
        sign_change_b: op.b.iter().map(|f| f.changes_sign()).collect(),
        sign_change_f: op.f.iter().map(|f| f.changes_sign()).collect(),
        b0f0_zero,
        a0_in_z: av.a0.iter().map(|x| (&classify_lattice_membership(x, &rat_int(1))).into()).collect(),
        e0_in_2z: av.e0.iter().map(|x| (&classify_lattice_membership(x, &rat_int(2))).into()).collect(),
        q_in_iz,
        span1,
        averages: av,
    }
}

/// (xi~, alpha~) with z0 not an integer and <b,xi~> + <f,alpha~> sign-changing.
#[derive(Clone, Debug, PartialEq)]
pub struct CsWitness {
    pub xi: Vec<i64>,
    pub alpha: Vec<HalfInt>,
    pub theta: RealFn,
    /// z0 = <c0,xi> + <d0,alpha> - iq
    pub z0: Complex64,
    /// non-integrality decided exactly (rational data)
    pub exact: bool,
}

impl CsWitness {
    pub fn to_json(&self) -> Value {
        json!({
            "xi": self.xi,
            "alpha": self.alpha,
            "theta": self.theta.describe(),
            "z0": [self.z0.re, self.z0.im],
            "exact": self.exact,
        })
    }
}

fn unit(n: usize, i: usize, v: i64) -> Vec<i64> {
    let mut x = vec![0; n];
    x[i] = v;
    x
}

fn unit_h(n: usize, i: usize, twice: i64) -> Vec<HalfInt> {
    let mut x = vec![HalfInt::ZERO; n];
    x[i] = HalfInt::new(twice);
    x
}

/// Candidate directions ordered by weight |xi| + 2|alpha|, positive entries first.
pub fn lattice_directions(r: usize, s: usize, bound: usize) -> Vec<(Vec<i64>, Vec<HalfInt>)> {
    let n = r + s;
    let mut out: Vec<(i64, Vec<i64>)> = Vec::new();
    // vectors u = (xi, 2 alpha) with sum |u| <= bound
    let mut stack: Vec<(Vec<i64>, i64)> = vec![(vec![], 0)];
    while let Some((v, used)) = stack.pop() {
        if v.len() == n {
            if used > 0 {
                out.push((used, v));
            }
            continue;
        }
        let rem = bound as i64 - used;
        for x in -rem..=rem {
            let mut w = v.clone();
            w.push(x);
            stack.push((w, used + x.abs()));
        }
    }
    let key = |v: &Vec<i64>| -> Vec<i64> { v.iter().map(|x| if *x >= 0 { 2 * x } else { -2 * x + 1 }).collect() };
    out.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| key(&a.1).cmp(&key(&b.1))));
    out.into_iter().map(|(_, u)| (u[..r].to_vec(), u[r..].iter().map(|x| HalfInt::new(*x)).collect())).collect()
}

fn cs_candidate(op: &EvolutionOperator, xi: &[i64], alpha: &[HalfInt]) -> Option<CsWitness> {
    if xi.iter().all(|x| *x == 0) && alpha.iter().all(|a| a.twice == 0) {
        return None;
    }
    let theta = op.imag_combination(xi, alpha);
    if !theta.changes_sign() {
        return None;
    }
    let exact = match op.resonance(xi, alpha) {
        LatticeMembership::NotInLattice(g) => matches!(g, crate::numerics::Gap::Exact(_)),
        _ => return None,
    };
    let (re, im) = op.shifted_symbol(xi, alpha);
    Some(CsWitness { xi: xi.to_vec(), alpha: alpha.to_vec(), theta, z0: Complex64::new(re.approx, im.approx), exact })
}

/// Search for a sign-change witness: coordinate directions first, then the weighted lattice.
pub fn detect_cs(op: &EvolutionOperator, search_bound: usize) -> Option<CsWitness> {
    let (r, s) = (op.r, op.s);
    let zr = vec![0; r];
    let zs = vec![HalfInt::ZERO; s];
    let mut cands: Vec<(Vec<i64>, Vec<HalfInt>)> = Vec::new();
    for k in 0..s {
        if op.f[k].is_constant() {
            continue;
        }
        for tw in [1, 2, 4] {
            cands.push((zr.clone(), unit_h(s, k, tw)));
        }
        for k2 in 0..s {
            if k2 != k {
                let mut a = unit_h(s, k, 2);
                a[k2] = HalfInt::new(1);
                cands.push((zr.clone(), a));
            }
        }
        for j in 0..r {
            cands.push((unit(r, j, 1), unit_h(s, k, 2)));
        }
    }
    for j in 0..r {
        if op.b[j].is_constant() {
            continue;
        }
        for v in [1, 2] {
            cands.push((unit(r, j, v), zs.clone()));
        }
        for j2 in 0..r {
            if j2 != j {
                let mut x = unit(r, j, 1);
                x[j2] = 1;
                cands.push((x, zs.clone()));
            }
        }
        for k in 0..s {
            cands.push((unit(r, j, 1), unit_h(s, k, 1)));
        }
    }
    for (xi, alpha) in &cands {
        for sign in [1i64, -1] {
            let x: Vec<i64> = xi.iter().map(|v| v * sign).collect();
            let a: Vec<HalfInt> = alpha.iter().map(|v| *v * sign).collect();
            if let Some(w) = cs_candidate(op, &x, &a) {
                return Some(w);
            }
        }
    }
    lattice_directions(r, s, search_bound).into_iter().find_map(|(x, a)| cs_candidate(op, &x, &a))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Yes,
    No,
    UnknownAtBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Property {
    GS,
    GH,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    Cs(CsWitness),
    Sublevel(sublevel::SublevelWitness),
    DcViolation(Box<DcReport>),
    ZeroElement(ZeroElement),
    KernelFamily { xi: Vec<i64>, alpha: Vec<HalfInt>, ladder: Vec<PartialMode> },
    Certificate(Value),
}

impl Witness {
    pub fn to_json(&self) -> Value {
        match self {
            Witness::Cs(w) => json!({"kind": "CS", "data": w.to_json()}),
            Witness::Sublevel(w) => json!({"kind": "sublevel", "data": w.to_json()}),
            Witness::DcViolation(r) => json!({"kind": "DC", "data": r.to_json()}),
            Witness::ZeroElement(z) => json!({"kind": "zero_set", "data": z}),
            Witness::KernelFamily { xi, alpha, ladder } => {
                json!({"kind": "kernel_family", "data": {"xi": xi, "alpha": alpha, "ladder": ladder}})
            }
            Witness::Certificate(v) => json!({"kind": "certificate", "data": v}),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub property: Property,
    pub status: Status,
    pub clause: String,
    pub witness: Option<Witness>,
    pub bound: Option<usize>,
    pub note: String,
}

impl Verdict {
    fn new(property: Property, status: Status, clause: &str, witness: Option<Witness>, note: impl Into<String>) -> Self {
        Verdict { property, status, clause: clause.into(), witness, bound: None, note: note.into() }
    }

    fn unknown(property: Property, clause: &str, bound: usize, note: impl Into<String>) -> Self {
        Verdict { property, status: Status::UnknownAtBound, clause: clause.into(), witness: None, bound: Some(bound), note: note.into() }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "property": self.property,
            "status": self.status,
            "clause": self.clause,
            "witness": self.witness.as_ref().map(Witness::to_json),
            "bound": self.bound,
            "note": self.note,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyOptions {
    /// lattice sweep bound for sublevel and witness searches
    pub bound: usize,
    /// zero-set enumeration and DC probe bound
    pub probe_bound: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { bound: 16, probe_bound: 12 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub gs: Verdict,
    pub gh: Verdict,
    pub structure: StructureReport,
    pub dc: DcReport,
    pub zero_set: ZeroSet,
}

impl Classification {
    pub fn to_json(&self) -> Value {
        json!({
            "GS": self.gs.to_json(),
            "GH": self.gh.to_json(),
            "structure": self.structure.to_json(),
            "dc": self.dc.to_json(),
            "zero_set": {
                "infinite": self.zero_set.infinite,
                "empty": self.zero_set.empty,
                "decided": self.zero_set.decided,
                "bound": self.zero_set.bound,
                "elements": self.zero_set.elements.iter().take(32).collect::<Vec<_>>(),
            },
        })
    }

    pub fn decided(&self) -> bool {
        self.gs.status != Status::UnknownAtBound && self.gh.status != Status::UnknownAtBound
    }
}

/// Infinite family of resonant modes (kernel elements of L).
pub fn kernel_family_witness(op: &EvolutionOperator, bound: usize) -> Option<Witness> {
    let zr = vec![0i64; op.r];
    let mut dirs = vec![(zr, vec![HalfInt::ZERO; op.s])];
    dirs.extend(lattice_directions(op.r, op.s, bound));
    for (xi, alpha) in dirs {
        if !op.resonance(&xi, &alpha).is_in() {
            continue;
        }
        if op.s >= 1 {
            // every l = |alpha| + n up to the bound, at least four rungs
            let top = alpha.iter().map(|a| a.abs()).max().unwrap_or(HalfInt::ZERO);
            let rungs = (bound as i64 - top.to_f64().ceil() as i64 + 1).max(4);
            let ladder: Vec<PartialMode> = (0..rungs)
                .map(|n| PartialMode {
                    xi: xi.clone(),
                    l: alpha.iter().map(|a| a.abs() + HalfInt::int(n)).collect(),
                    alpha: alpha.clone(),
                    beta: alpha.clone(),
                })
                .collect();
            return Some(Witness::KernelFamily { xi, alpha, ladder });
        }
        // s = 0: need infinitely many resonant xi; multiples k*xi of a resonant direction
        if xi.iter().any(|x| *x != 0) {
            let step = xi.iter().map(|x| x.abs()).sum::<i64>();
            let count = (bound as i64 / step).max(4);
            let multiples: Vec<Vec<i64>> = (1..=count).map(|k| xi.iter().map(|x| k * x).collect()).collect();
            if multiples.iter().all(|m| op.resonance(m, &[]).is_in()) {
                let ladder = multiples.into_iter().map(|m| PartialMode { xi: m, l: vec![], alpha: vec![], beta: vec![] }).collect();
                return Some(Witness::KernelFamily { xi, alpha, ladder });
            }
        }
    }
    None
}

fn dc_to_verdict(prop: Property, clause: &str, dc: &DcReport, bound: usize) -> Verdict {
    match &dc.status {
        DcStatus::Holds { .. } => Verdict::new(prop, Status::Yes, clause, Some(Witness::Certificate(dc.to_json())), "averaged operator satisfies (DC)"),
        DcStatus::Fails { .. } => Verdict::new(prop, Status::No, clause, Some(Witness::DcViolation(Box::new(dc.clone()))), "averaged operator violates (DC)"),
        DcStatus::Unknown { .. } => Verdict::unknown(prop, clause, bound, "(DC) undecided for this data"),
    }
}

/// Global solvability and hypoellipticity verdicts.
pub fn classify(op: &EvolutionOperator, opts: &ClassifyOptions) -> Classification {
    let st = structure_report(op);
    let dc = diophantine::dc_check(op, opts.probe_bound);
    let zs = zero_set(op, opts.probe_bound);
    let gs = classify_gs(op, opts, &st, &dc);
    let gh = classify_gh(op, opts, &st, &dc, &zs);
    Classification { gs, gh, structure: st, dc, zero_set: zs }
}

fn no_with_cs(op: &EvolutionOperator, prop: Property, clause: &str, opts: &ClassifyOptions, note: &str) -> Verdict {
    match detect_cs(op, opts.bound) {
        Some(w) => Verdict::new(prop, Status::No, clause, Some(Witness::Cs(w)), note),
        None => Verdict::unknown(prop, clause, opts.bound, format!("{note}; no sign-change witness found within the bound")),
    }
}

fn classify_gs(op: &EvolutionOperator, opts: &ClassifyOptions, st: &StructureReport, dc: &DcReport) -> Verdict {
    let p = Property::GS;
    if st.is_imag_constant {
        return dc_to_verdict(p, "clause_i", dc, opts.probe_bound);
    }
    if st.span_dim == 1 && !st.any_sign_change() {
        return dc_to_verdict(p, "clause_ii", dc, opts.probe_bound);
    }
    match st.b0f0_zero {
        Membership::In => match st.lattice() {
            Membership::Out => no_with_cs(op, p, "CS", opts, "(a0, e0, q) outside Z^r x 2Z^s x iZ"),
            Membership::Unknown => Verdict::unknown(p, "clause_iii", opts.bound, "lattice membership of the averages undecided"),
            Membership::In => match sublevel::connectedness_family(op, opts.bound) {
                Ok(sublevel::FamilyVerdict::Connected { exact: true, .. }) => Verdict::new(
                    p,
                    Status::Yes,
                    "clause_iii",
                    Some(Witness::Certificate(json!({"sublevel": "connected for all directions (span reduction)"}))),
                    "all sublevel sets connected",
                ),
                Ok(sublevel::FamilyVerdict::Connected { exact: false, checked }) => Verdict::unknown(
                    p,
                    "clause_iii",
                    opts.bound,
                    format!("all {checked} directions with |xi|+2|alpha| <= {} have connected sublevel sets", opts.bound),
                ),
                Ok(sublevel::FamilyVerdict::Disconnected(w)) => {
                    Verdict::new(p, Status::No, "clause_iii", Some(Witness::Sublevel(w)), "a sublevel set is disconnected")
                }
                Err(e) => Verdict::unknown(p, "clause_iii", opts.bound, e.to_string()),
            },
        },
        Membership::Out => no_with_cs(op, p, "CS", opts, "(b0, f0) != 0 with span >= 2 or a sign change"),
        Membership::Unknown => Verdict::unknown(p, "CS", opts.bound, "vanishing of (b0, f0) undecided"),
    }
}

fn l0_gh(dc: &DcReport, zs: &ZeroSet, s: usize) -> (Status, Option<Witness>, String) {
    match &dc.status {
        DcStatus::Fails { .. } => return (Status::No, Some(Witness::DcViolation(Box::new(dc.clone()))), "averaged operator violates (DC)".into()),
        DcStatus::Unknown { .. } => return (Status::UnknownAtBound, None, "(DC) undecided".into()),
        DcStatus::Holds { .. } => {}
    }
    if !zs.decided {
        if let Some(z) = zs.elements.first().filter(|_| s >= 1) {
            return (Status::No, Some(Witness::ZeroElement(z.clone())), "zero set nonempty (ladder makes it infinite)".into());
        }
        return (Status::UnknownAtBound, None, "finiteness of the zero set undecided".into());
    }
    if zs.infinite {
        let w = zs.elements.first().cloned().map(Witness::ZeroElement);
        (Status::No, w, "zero set of the averaged symbol is infinite".into())
    } else {
        (Status::Yes, Some(Witness::Certificate(dc.to_json())), "(DC) holds and the zero set is finite".into())
    }
}

fn classify_gh(op: &EvolutionOperator, opts: &ClassifyOptions, st: &StructureReport, dc: &DcReport, zs: &ZeroSet) -> Verdict {
    let p = Property::GH;
    let clause = if st.is_imag_constant {
        Some("clause_i")
    } else if st.span_dim == 1 && !st.any_sign_change() {
        Some("clause_ii")
    } else {
        None
    };
    if let Some(c) = clause {
        let (status, w, note) = l0_gh(dc, zs, op.s);
        let mut v = Verdict::new(p, status, c, w, note);
        if status == Status::UnknownAtBound {
            v.bound = Some(opts.probe_bound);
        }
        if status == Status::No && v.witness.is_none() {
            if let Some(k) = kernel_family_witness(op, opts.bound) {
                v.witness = Some(k);
            }
        }
        return v;
    }
    if let Some(w) = detect_cs(op, opts.bound) {
        return Verdict::new(p, Status::No, "CS", Some(Witness::Cs(w)), "sign-change witness rules out hypoellipticity");
    }
    if let Some(k) = kernel_family_witness(op, opts.bound) {
        return Verdict::new(p, Status::No, "kernel", Some(k), "infinite family of non-decaying kernel modes");
    }
    Verdict::unknown(p, "CS", opts.bound, "neither clause holds but no witness was found within the bound")
}

/// Operators used in tests, the acceptance suite and documentation.
pub mod catalog {
    use super::*;

    fn c(re: TrigPoly, im: TrigPoly) -> (RealFn, RealFn) {
        (RealFn::from_poly(&re).unwrap(), RealFn::from_poly(&im).unwrap())
    }

    fn k(x: i64) -> TrigPoly {
        TrigPoly::constant(rat_int(x))
    }

    fn cos() -> TrigPoly {
        TrigPoly::cos(1, rat_int(1))
    }

    fn sin() -> TrigPoly {
        TrigPoly::sin(1, rat_int(1))
    }

    /// dt + [cos t + 1 + i sin t]dx + [sin t + 2 + i cos t]D3 + 3i
    pub fn rotating_connected() -> EvolutionOperator {
        EvolutionOperator::with_rational_q(vec![c(cos().add(&k(1)), sin())], vec![c(sin().add(&k(2)), cos())], (rat_int(0), rat_int(3)))
    }

    /// dt + [cos t + 2 + i sin t]dx + [sin t + 1 + i cos t]D3
    pub fn odd_sphere_mean() -> EvolutionOperator {
        EvolutionOperator::with_rational_q(vec![c(cos().add(&k(2)), sin())], vec![c(sin().add(&k(1)), cos())], (rat_int(0), rat_int(0)))
    }

    /// dt + [cos t + 1 + i sin t]dx + [sin t + 2 + i sin^3(2t)]D3 - i
    pub fn cubic_sine_sphere() -> EvolutionOperator {
        let s3 = TrigPoly::sin(2, rat_int(1)).pow(3);
        EvolutionOperator::with_rational_q(vec![c(cos().add(&k(1)), sin())], vec![c(sin().add(&k(2)), s3)], (rat_int(0), rat_int(-1)))
    }

    /// dt + (1/3 + i/2)dx1 + (2/5 + i/3)dx2 + 1/5 + i/7 on the torus only
    pub fn rational_torus() -> EvolutionOperator {
        let cst = |a: Rational, b: Rational| c(TrigPoly::constant(a), TrigPoly::constant(b));
        EvolutionOperator::with_rational_q(vec![cst(rat(1, 3), rat(1, 2)), cst(rat(2, 5), rat(1, 3))], vec![], (rat(1, 5), rat(1, 7)))
    }

    /// dt + (1/2 + i)dx + (1 + i/3)D3, q = 0
    pub fn undamped_constant() -> EvolutionOperator {
        let cst = |a: Rational, b: Rational| c(TrigPoly::constant(a), TrigPoly::constant(b));
        EvolutionOperator::with_rational_q(vec![cst(rat(1, 2), rat_int(1))], vec![cst(rat_int(1), rat(1, 3))], (rat_int(0), rat_int(0)))
    }

    /// dt + sqrt(2) i dx + i D3 + 1/4
    pub fn sqrt2_constant() -> EvolutionOperator {
        let b = RealFn::constant(TaggedReal::non_liouville(std::f64::consts::SQRT_2));
        EvolutionOperator::new(
            vec![(RealFn::zero(), b)],
            vec![(RealFn::zero(), RealFn::rational(rat_int(1)))],
            TaggedReal::rational(rat(1, 4)),
            TaggedReal::zero(),
        )
    }

    /// dt + [cos t + 1 + i(sin t + 1)]dx + [sin t + 2 + i(sin t + 1)]D3 + sqrt(2) + 3i
    pub fn span_one_irrational_damping() -> EvolutionOperator {
        let p = sin().add(&k(1));
        EvolutionOperator::new(
            vec![c(cos().add(&k(1)), p.clone())],
            vec![c(sin().add(&k(2)), p)],
            TaggedReal::non_liouville(std::f64::consts::SQRT_2),
            TaggedReal::int(3),
        )
    }

    /// dt + [cos t + 1 + i(sin t + 1)]dx + [sin t + 2 - i(sin t + 1)]D3 + 1/2 - 2i
    pub fn span_one_resonant() -> EvolutionOperator {
        let p = sin().add(&k(1));
        EvolutionOperator::with_rational_q(
            vec![c(cos().add(&k(1)), p.clone())],
            vec![c(sin().add(&k(2)), p.scale(&rat_int(-1)))],
            (rat(1, 2), rat_int(-2)),
        )
    }

    /// dt + i D3
    pub fn pure_sphere_rotation() -> EvolutionOperator {
        EvolutionOperator::with_rational_q(vec![], vec![c(TrigPoly::zero(), k(1))], (rat_int(0), rat_int(0)))
    }

    /// dt + i sin(t) D3 + 1/2
    pub fn sine_sphere_half() -> EvolutionOperator {
        EvolutionOperator::with_rational_q(vec![], vec![c(TrigPoly::zero(), sin())], (rat(1, 2), rat_int(0)))
    }

    /// dt + mu dx with mu the standard Liouville number (s = 0)
    pub fn liouville_torus() -> EvolutionOperator {
        let a = RealFn::constant(TaggedReal::liouville(crate::numerics::LiouvilleGenerator::standard()));
        EvolutionOperator::new(vec![(a, RealFn::zero())], vec![], TaggedReal::zero(), TaggedReal::zero())
    }

    /// dt + (mu + i)dx + i D3 on T^2 x S^3
    pub fn liouville_sphere() -> EvolutionOperator {
        let a = RealFn::constant(TaggedReal::liouville(crate::numerics::LiouvilleGenerator::standard()));
        EvolutionOperator::new(
            vec![(a, RealFn::rational(rat_int(1)))],
            vec![(RealFn::zero(), RealFn::rational(rat_int(1)))],
            TaggedReal::zero(),
            TaggedReal::zero(),
        )
    }

    /// Every built-in operator by name.
    pub fn named() -> Vec<(&'static str, EvolutionOperator)> {
        let mut v: Vec<_> = golden().into_iter().map(|g| (g.0, g.1)).collect();
        v.push(("pure_sphere_rotation", pure_sphere_rotation()));
        v.push(("sine_sphere_half", sine_sphere_half()));
        v.push(("liouville_torus", liouville_torus()));
        v.push(("liouville_sphere", liouville_sphere()));
        v
    }

    /// (name, operator, expected GS, expected GH); None where the golden table is silent.
    pub fn golden() -> Vec<(&'static str, EvolutionOperator, Option<Status>, Option<Status>)> {
        vec![
            ("rational_torus", rational_torus(), Some(Status::Yes), None),
            ("undamped_constant", undamped_constant(), None, Some(Status::No)),
            ("sqrt2_constant", sqrt2_constant(), None, Some(Status::Yes)),
            ("rotating_connected", rotating_connected(), Some(Status::Yes), None),
            ("odd_sphere_mean", odd_sphere_mean(), Some(Status::No), None),
            ("cubic_sine_sphere", cubic_sine_sphere(), Some(Status::No), None),
            ("span_one_irrational_damping", span_one_irrational_damping(), None, Some(Status::Yes)),
            ("span_one_resonant", span_one_resonant(), None, Some(Status::No)),
        ]
    }
}
