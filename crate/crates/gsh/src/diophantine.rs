//! Diophantine condition for the averaged operator: exact bounds for rational
//! data, explicit violation sequences for Liouville data, numeric probes
//! otherwise; plus the exponential gap |1 - e^{-+2 pi i z}|.

use crate::error::{GshError, Result};
use crate::numerics::{
    format_rational, lcm_denominators, rat, rat_int, rat_to_f64, rational_symbol_floor, tagged_combination, HalfInt,
    LiouvilleGenerator, Rational, Tag, TaggedReal,
};
use crate::operator_model::EvolutionOperator;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use std::f64::consts::{LN_10, PI};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DcMethod {
    ExactRational,
    /// analytic argument for a single irrational quantity (no float decision involved)
    IrrationalPattern,
    LiouvilleConstruction,
    NumericProbe,
}

impl DcMethod {
    pub fn name(&self) -> &'static str {
        match self {
            DcMethod::ExactRational => "EXACT_RATIONAL",
            DcMethod::IrrationalPattern => "IRRATIONAL_PATTERN",
            DcMethod::LiouvilleConstruction => "LIOUVILLE_CONSTRUCTION",
            DcMethod::NumericProbe => "NUMERIC_PROBE",
        }
    }
}

/// One index of a violation sequence; large integers kept exact.
#[derive(Clone, Debug, PartialEq)]
pub struct ViolationTerm {
    pub n: u32,
    pub tau: BigInt,
    pub xi: Vec<BigInt>,
    /// 2*alpha
    pub alpha_twice: Vec<BigInt>,
    /// natural logs
    pub log_sigma: f64,
    pub log_norm: f64,
    pub log_j: f64,
    /// log C' - (n-1) log j_n
    pub log_bound: f64,
    /// exact big-rational verification of 0 < |sigma| <= C' j_n^{-(n-1)}
    pub verified: bool,
}

impl ViolationTerm {
    pub fn l_twice(&self) -> Vec<BigInt> {
        self.alpha_twice.iter().map(|a| a.abs()).collect()
    }

    pub fn to_json(&self) -> Value {
        let s = |v: &[BigInt]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let half = |v: &[BigInt]| v.iter().map(|x| format_rational(&BigRational::new(x.clone(), BigInt::from(2)))).collect::<Vec<_>>();
        json!({
            "n": self.n,
            "tau": self.tau.to_string(),
            "xi": s(&self.xi),
            "l": half(&self.l_twice()),
            "alpha": half(&self.alpha_twice),
            "log_sigma": self.log_sigma,
            "log_norm": self.log_norm,
            "log_j": self.log_j,
            "log_bound": self.log_bound,
            "verified": self.verified,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleSequence {
    pub terms: Vec<ViolationTerm>,
    /// C' in |sigma_n| <= C' j_n^{-(n-1)}
    pub constant: Rational,
    /// which part (re/im) carries the Liouville coefficient
    pub part: &'static str,
    pub multiplier: BigInt,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DcStatus {
    Holds { m: f64, n: f64, exact: bool },
    Fails { sequence: LiouvilleSequence },
    Unknown { fitted_exponent: Option<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DcReport {
    pub status: DcStatus,
    pub method: DcMethod,
    /// exact uniform floor when available
    pub epsilon: Option<Rational>,
    pub note: String,
}

impl DcReport {
    pub fn holds(&self) -> bool {
        matches!(self.status, DcStatus::Holds { .. })
    }

    pub fn status_name(&self) -> &'static str {
        match self.status {
            DcStatus::Holds { .. } => "HOLDS",
            DcStatus::Fails { .. } => "FAILS",
            DcStatus::Unknown { .. } => "UNKNOWN",
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "status": self.status_name(),
            "method": self.method.name(),
            "epsilon": self.epsilon.as_ref().map(format_rational),
            "note": self.note,
        });
        match &self.status {
            DcStatus::Holds { m, n, exact } => {
                v["M"] = json!(m);
                v["N"] = json!(n);
                v["exact"] = json!(exact);
            }
            DcStatus::Fails { sequence } => {
                v["sequence"] = json!(sequence.terms.iter().map(ViolationTerm::to_json).collect::<Vec<_>>());
                v["constant"] = json!(format_rational(&sequence.constant));
                v["part"] = json!(sequence.part);
            }
            DcStatus::Unknown { fitted_exponent } => v["fitted_exponent"] = json!(fitted_exponent),
        }
        v
    }
}

/// Real or imaginary part of z = tau + <c0,xi> + <d0,alpha> - iq as an affine
/// form in u = (tau, xi, 2 alpha).
#[derive(Clone, Debug)]
pub(crate) struct AffinePart {
    pub coefs: Vec<TaggedReal>,
    pub constant: TaggedReal,
}

impl AffinePart {
    fn eval_f64(&self, u: &[i64]) -> f64 {
        self.coefs.iter().zip(u).map(|(c, x)| c.approx * *x as f64).sum::<f64>() + self.constant.approx
    }
}

pub(crate) fn affine_parts(op: &EvolutionOperator) -> (AffinePart, AffinePart) {
    let half = rat(1, 2);
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
    (
        AffinePart { coefs: re, constant: op.q_im.clone() },
        AffinePart { coefs: im, constant: tagged_combination(&[(&op.q_re, rat_int(-1))]) },
    )
}

#[derive(Clone, Debug, PartialEq)]
enum PartKind {
    Exact(Rational),
    /// rational coefficients, irrational offset: never zero, bounded away from 0
    Positive,
    /// one non-Liouville coefficient, rest rational
    Polynomial,
    Liouville { var: usize, gen: LiouvilleGenerator },
    Unknown,
}

fn part_kind(p: &AffinePart) -> PartKind {
    let all: Vec<&TaggedReal> = p.coefs.iter().chain(std::iter::once(&p.constant)).collect();
    if all.iter().any(|x| matches!(x.tag, Tag::Unspecified)) {
        return PartKind::Unknown;
    }
    let irr: Vec<usize> = p.coefs.iter().enumerate().filter(|(_, c)| c.is_irrational()).map(|(i, _)| i).collect();
    let const_irr = p.constant.is_irrational();
    match (irr.as_slice(), const_irr) {
        ([], false) => {
            let vals: Vec<Rational> = all.iter().map(|x| x.as_rational().unwrap().clone()).collect();
            PartKind::Exact(rational_symbol_floor(&vals).expect("nonempty"))
        }
        ([], true) => PartKind::Positive,
        ([v], false) => match &p.coefs[*v].tag {
            Tag::NonLiouville => PartKind::Polynomial,
            Tag::Liouville(g) => PartKind::Liouville { var: *v, gen: g.clone() },
            _ => PartKind::Unknown,
        },
        _ => PartKind::Unknown,
    }
}

/// Nonzero u with sum weights[i]*|u_i| <= budget, paired with norm = weighted sum / 2.
fn probe_points(weights: &[i64], budget: i64) -> Vec<(Vec<i64>, f64)> {
    fn rec(weights: &[i64], budget: i64, cur: &mut Vec<i64>, used: i64, out: &mut Vec<(Vec<i64>, f64)>) {
        if cur.len() == weights.len() {
            if cur.iter().any(|x| *x != 0) {
                out.push((cur.clone(), used as f64 / 2.0));
            }
            return;
        }
        let w = weights[cur.len()];
        let lim = (budget - used) / w;
        for x in -lim..=lim {
            cur.push(x);
            rec(weights, budget, cur, used + w * x.abs(), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(weights, budget, &mut Vec::new(), 0, &mut out);
    out
}

/// Lattice probe: (|tau|+|xi|+|l|, |sigma|) for nonzero symbol values within the bound (l = |alpha|).
pub fn probe(op: &EvolutionOperator, bound: usize) -> Vec<(f64, f64)> {
    let (re, im) = affine_parts(op);
    // tau and xi count in units of 1, w = 2 alpha in units of 1/2
    let weights: Vec<i64> = (0..1 + op.r + op.s).map(|i| if i <= op.r { 2 } else { 1 }).collect();
    let scale = 1.0 + re.coefs.iter().chain(&im.coefs).map(|c| c.approx.abs()).sum::<f64>();
    let zero_tol = 1e-13 * scale * (1.0 + bound as f64);
    probe_points(&weights, 2 * bound as i64)
        .into_iter()
        .filter_map(|(u, norm)| {
            let a = Complex64::new(re.eval_f64(&u), im.eval_f64(&u)).norm();
            (a > zero_tol).then_some((norm, a))
        })
        .collect()
}

/// Least-squares slope of log min|sigma| per integer shell against log shell.
fn fitted_exponent(pts: &[(f64, f64)]) -> Option<f64> {
    let mut shells: std::collections::BTreeMap<i64, f64> = std::collections::BTreeMap::new();
    for &(norm, a) in pts {
        let k = norm.ceil() as i64;
        if k < 1 {
            continue;
        }
        let e = shells.entry(k).or_insert(f64::INFINITY);
        *e = e.min(a);
    }
    let xy: Vec<(f64, f64)> = shells.iter().map(|(k, a)| ((*k as f64).ln(), a.ln())).collect();
    if xy.len() < 3 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

fn probe_constants(pts: &[(f64, f64)], n_exp: f64) -> f64 {
    pts.iter().map(|&(norm, a)| a * norm.max(1.0).powf(n_exp)).fold(f64::INFINITY, f64::min)
}

/// Decide or probe the Diophantine condition of the averaged operator.
pub fn dc_check(op: &EvolutionOperator, bound: usize) -> DcReport {
    let (re, im) = affine_parts(op);
    let (kr, ki) = (part_kind(&re), part_kind(&im));
    let kinds = [&kr, &ki];
    if kinds.iter().any(|k| **k == PartKind::Positive) {
        let pts = probe(op, bound);
        return DcReport {
            status: DcStatus::Holds { m: probe_constants(&pts, 0.0), n: 0.0, exact: false },
            method: DcMethod::IrrationalPattern,
            epsilon: None,
            note: "one part has rational coefficients and an irrational offset, so it never vanishes and stays a fixed distance from 0; M is the probed minimum".into(),
        };
    }
    // an exact part with no integer zero is bounded below by its floor everywhere
    for (k, p) in [(&kr, &re), (&ki, &im)] {
        if let PartKind::Exact(eps) = k {
            if !exact_part_vanishes(p) && !(matches!(kr, PartKind::Exact(_)) && matches!(ki, PartKind::Exact(_))) {
                return DcReport {
                    status: DcStatus::Holds { m: rat_to_f64(eps), n: 0.0, exact: false },
                    method: DcMethod::ExactRational,
                    epsilon: Some(eps.clone()),
                    note: "one part is rational and never vanishes on the lattice; its floor bounds |sigma|".into(),
                };
            }
        }
    }
    if let (PartKind::Exact(er), PartKind::Exact(ei)) = (&kr, &ki) {
        let eps = if er < ei { er.clone() } else { ei.clone() };
        return DcReport {
            status: DcStatus::Holds { m: rat_to_f64(&eps), n: 0.0, exact: true },
            method: DcMethod::ExactRational,
            epsilon: Some(eps),
            note: format!("real part floor {}, imaginary part floor {}", format_rational(er), format_rational(ei)),
        };
    }
    let poly_ok = |k: &PartKind| matches!(k, PartKind::Exact(_) | PartKind::Polynomial);
    if poly_ok(&kr) && poly_ok(&ki) {
        let pts = probe(op, bound);
        let n_exp = fitted_exponent(&pts).map(|s| (-s).max(0.0)).unwrap_or(0.0).ceil();
        return DcReport {
            status: DcStatus::Holds { m: probe_constants(&pts, n_exp), n: n_exp, exact: false },
            method: DcMethod::IrrationalPattern,
            epsilon: None,
            note: "single non-Liouville coefficient with rational remaining data; M and N fitted on the probe".into(),
        };
    }
    if kinds.iter().any(|k| matches!(k, PartKind::Liouville { .. })) {
        match liouville_violation_sequence(op, 6) {
            Ok(seq) => {
                return DcReport {
                    status: DcStatus::Fails { sequence: seq },
                    method: DcMethod::LiouvilleConstruction,
                    epsilon: None,
                    note: "explicit super-polynomially small nonzero symbol values".into(),
                }
            }
            Err(e) => log::debug!("Liouville construction unavailable: {e}"),
        }
    }
    let pts = probe(op, bound);
    DcReport {
        status: DcStatus::Unknown { fitted_exponent: fitted_exponent(&pts) },
        method: DcMethod::NumericProbe,
        epsilon: None,
        note: format!("data outside the decidable patterns; probed |tau|+|xi|+|l| <= {bound}"),
    }
}

fn exact_part_vanishes(p: &AffinePart) -> bool {
    let Some((c, k)) = rational_row(p, None) else { return true };
    let l = BigRational::from_integer(lcm_denominators(c.iter().chain([&k])));
    let row: Vec<BigInt> = c.iter().map(|x| (x * &l).to_integer()).collect();
    solve_integer_system(&[row], &[-(&k * &l).to_integer()]).is_some()
}

/// Particular integer solution of A x = b with the rank of A, or None.
pub fn solve_integer_system(a: &[Vec<BigInt>], b: &[BigInt]) -> Option<(usize, Vec<BigInt>)> {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let mut a: Vec<Vec<BigInt>> = a.to_vec();
    // columns of u track the unimodular transform: A_orig * u = A_current
    let mut u: Vec<Vec<BigInt>> = (0..n).map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect();
    let mut pc = 0usize;
    let mut rank = 0;
    for i in 0..m {
        if pc >= n {
            break;
        }
        if a[i][pc].is_zero() {
            match (pc + 1..n).find(|&j| !a[i][j].is_zero()) {
                Some(j) => {
                    for row in a.iter_mut().chain(u.iter_mut()) {
                        row.swap(pc, j);
                    }
                }
                None => continue,
            }
        }
        for j in pc + 1..n {
            if a[i][j].is_zero() {
                continue;
            }
            let (x0, y0) = (a[i][pc].clone(), a[i][j].clone());
            let eg = x0.extended_gcd(&y0);
            let (p, q) = (&y0 / &eg.gcd, &x0 / &eg.gcd);
            for row in a.iter_mut().chain(u.iter_mut()) {
                let (s, t) = (row[pc].clone(), row[j].clone());
                row[pc] = &eg.x * &s + &eg.y * &t;
                row[j] = -&p * &s + &q * &t;
            }
        }
        rank += 1;
        pc += 1;
    }
    let mut y: Vec<Option<BigInt>> = vec![None; n];
    for i in 0..m {
        let mut acc = b[i].clone();
        let mut pivot = None;
        for col in 0..n {
            if a[i][col].is_zero() {
                continue;
            }
            match &y[col] {
                Some(v) => acc -= &a[i][col] * v,
                None => pivot = Some(col),
            }
        }
        match pivot {
            None if !acc.is_zero() => return None,
            None => {}
            Some(col) => {
                let (qt, rm) = acc.div_rem(&a[i][col]);
                if !rm.is_zero() {
                    return None;
                }
                y[col] = Some(qt);
            }
        }
    }
    let y: Vec<BigInt> = y.into_iter().map(|v| v.unwrap_or_else(BigInt::zero)).collect();
    let x = (0..n).map(|i| (0..n).map(|j| &u[i][j] * &y[j]).sum()).collect();
    Some((rank, x))
}

fn rational_row(p: &AffinePart, skip: Option<usize>) -> Option<(Vec<Rational>, Rational)> {
    let mut coefs = Vec::new();
    for (i, c) in p.coefs.iter().enumerate() {
        if Some(i) == skip {
            coefs.push(rat_int(0));
        } else {
            coefs.push(c.as_rational()?.clone());
        }
    }
    Some((coefs, p.constant.as_rational()?.clone()))
}

fn pow10(e: u64) -> BigInt {
    num_traits::pow(BigInt::from(10), e as usize)
}

/// Integer check of 0 < mu j_n - p_n and (mu j_n - p_n) j_n^{n-1} <= 2, using
/// the truncations of mu after n+1 terms (lower) and with tail bound 2*10^{-(n+2)!} (upper).
fn tail_within_bound(n: u32) -> bool {
    let fact = |k: u32| (1..=k as u64).product::<u64>();
    let (p, j) = LiouvilleGenerator::emit_mu(n);
    let e = fact(n + 2);
    let d = pow10(e);
    let mut t = BigInt::zero();
    for k in 1..=n + 1 {
        t += pow10(e - fact(k));
    }
    // lower bound t/d is itself a truncation strictly above p/j
    let lower_ok = &t * &j > &p * &d;
    let upper = ((&t + BigInt::from(2)) * &j - &p * &d) * num_traits::pow(j.clone(), (n - 1) as usize);
    lower_ok && upper <= BigInt::from(2) * &d
}

fn log_big(x: &BigInt) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits < 1000 {
        return x.abs().to_f64().unwrap().ln();
    }
    let shift = bits - 60;
    let top: BigInt = x.abs() >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Explicit violation sequence for a single Liouville coefficient; n = 1..=n_max.
pub fn liouville_violation_sequence(op: &EvolutionOperator, n_max: u32) -> Result<LiouvilleSequence> {
    let (re, im) = affine_parts(op);
    let (kr, ki) = (part_kind(&re), part_kind(&im));
    let (lp, other, var, gen, part) = match (&kr, &ki) {
        (PartKind::Liouville { var, gen }, PartKind::Exact(_)) => (&re, &im, *var, gen.clone(), "re"),
        (PartKind::Exact(_), PartKind::Liouville { var, gen }) => (&im, &re, *var, gen.clone(), "im"),
        _ => {
            return Err(GshError::PatternNotRecognized(
                "need one Liouville coefficient in one part and rational data elsewhere".into(),
            ))
        }
    };
    let (lc, lconst) = rational_row(lp, Some(var)).expect("rational apart from the Liouville entry");
    let (oc, oconst) = rational_row(other, None).expect("rational part");
    let nvars = lc.len();
    let others: Vec<usize> = (0..nvars).filter(|&v| v != var).collect();
    let (kappa, shift) = (gen.scale.clone(), gen.shift.clone());
    let den = lcm_denominators(lc.iter().chain(&oc).chain([&lconst, &oconst, &kappa, &shift]));
    let d = BigRational::from_integer(den.clone());
    let to_int = |x: &Rational| (x * &d).to_integer();
    let mat: Vec<Vec<BigInt>> = vec![others.iter().map(|&v| to_int(&lc[v])).collect(), others.iter().map(|&v| to_int(&oc[v])).collect()];
    let solve_for = |k: &BigInt, n: u32| -> Option<Vec<BigInt>> {
        let (p, j) = LiouvilleGenerator::emit_mu(n);
        let kj = k * &j;
        // rational residue of the Liouville part and the other part must vanish
        let rhs_l = -(to_int(&lconst) + to_int(&(&kappa * BigRational::from_integer(k * &p))) + to_int(&(&shift * BigRational::from_integer(kj.clone()))));
        let rhs_o = -(to_int(&oconst) + to_int(&(&oc[var] * BigRational::from_integer(kj.clone()))));
        let (_, x) = solve_integer_system(&mat, &[rhs_l, rhs_o])?;
        let mut u = vec![BigInt::zero(); nvars];
        u[var] = kj;
        for (i, &v) in others.iter().enumerate() {
            u[v] = x[i].clone();
        }
        Some(u)
    };
    let k = (1..=64i64)
        .map(BigInt::from)
        .find(|k| (1..=n_max.min(4)).all(|n| solve_for(k, n).is_some()))
        .ok_or_else(|| GshError::PatternNotRecognized("no integer multiplier makes the rational residue vanish".into()))?;
    let ck = BigRational::from_integer(k.clone()) * &kappa;
    let constant = ck.abs() * rat_int(2);
    let log_ck = rat_to_f64(&ck.abs()).ln();
    let mut terms = Vec::new();
    for n in 1..=n_max {
        let u = solve_for(&k, n).ok_or_else(|| GshError::PatternNotRecognized(format!("rational residue not solvable at n={n}")))?;
        let (p, j) = LiouvilleGenerator::emit_mu(n);
        // exact checks: other part zero, Liouville residue zero, 0 < |sigma| <= C' j^{-(n-1)}
        let dot = |c: &[Rational], cst: &Rational| -> Rational {
            c.iter().zip(&u).map(|(a, x)| a * BigRational::from_integer(x.clone())).fold(cst.clone(), |s, t| s + t)
        };
        let other_zero = dot(&oc, &oconst).is_zero();
        let residue = dot(&lc, &lconst) + &kappa * BigRational::from_integer(&k * &p) + &shift * BigRational::from_integer(&k * &j);
        let verified = other_zero && residue.is_zero() && tail_within_bound(n);
        let log_j = (1..=n as u64).product::<u64>() as f64 * LN_10;
        let log_sigma = log_ck + LiouvilleGenerator::log10_tail(n) * LN_10;
        let norm: BigInt = u[0].abs() + u[1..=op.r].iter().map(|x| x.abs()).sum::<BigInt>();
        let sph: BigInt = u[op.r + 1..].iter().map(|x| x.abs()).sum();
        let log_norm = {
            let lt = log_big(&norm);
            let ls = log_big(&sph) - std::f64::consts::LN_2;
            let (a, b) = if lt > ls { (lt, ls) } else { (ls, lt) };
            if b == f64::NEG_INFINITY {
                a
            } else {
                a + (b - a).exp().ln_1p()
            }
        };
        terms.push(ViolationTerm {
            n,
            tau: u[0].clone(),
            xi: u[1..=op.r].to_vec(),
            alpha_twice: u[op.r + 1..].to_vec(),
            log_sigma,
            log_norm,
            log_j,
            log_bound: rat_to_f64(&constant).ln() - (n as f64 - 1.0) * log_j,
            verified,
        });
    }
    Ok(LiouvilleSequence { terms, constant, part, multiplier: k })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpGap {
    /// log|1 - e^{-2 pi i z}|
    pub log_minus: f64,
    /// log|1 - e^{+2 pi i z}|
    pub log_plus: f64,
    /// log of a certified lower bound valid for both signs, when (DC) holds
    pub certified_log: Option<f64>,
}

/// log|1 - e^w| without overflow for large Re w.
pub fn log_abs_one_minus_exp(w: Complex64) -> f64 {
    let b = w.im.rem_euclid(2.0 * PI);
    let a = w.re;
    if a > 30.0 {
        // e^w (e^{-w} - 1): the bracket has modulus within e^{-30} of 1
        return a + (Complex64::from_polar((-a).exp(), -b) - 1.0).norm().ln();
    }
    // expm1 form: (e^a - 1) cos b + (cos b - 1) + i e^a sin b
    let em1 = a.exp_m1();
    let re = em1 * b.cos() - 2.0 * (b / 2.0).sin().powi(2);
    let im = a.exp() * b.sin();
    Complex64::new(re, im).norm().ln()
}

/// |1 - e^{-+2 pi i z}| for z = <c0,xi> + <d0,alpha> - iq.
pub fn exp_gap_lower_bound(op: &EvolutionOperator, xi: &[i64], alpha: &[HalfInt], dc: Option<&DcReport>) -> Result<ExpGap> {
    if op.resonance(xi, alpha).is_in() {
        return Err(GshError::Resonant);
    }
    let (re, im) = op.shifted_symbol(xi, alpha);
    let z = Complex64::new(re.approx, im.approx);
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let log_minus = log_abs_one_minus_exp(-two_pi_i * z);
    let log_plus = log_abs_one_minus_exp(two_pi_i * z);
    let certified_log = match dc.map(|d| &d.status) {
        Some(DcStatus::Holds { m, n, .. }) => {
            // dist(z, Z) >= M (|tau*| + |xi| + |l|)^{-N} with |tau*| <= |Re z| + 1/2, and
            // |1 - e^{2 pi i w}| >= min(2 e^{-pi |Im w|} d, pi d / 2, 1/2) for d = dist(w, Z)
            let norm = re.approx.abs() + 0.5 + xi.iter().map(|x| x.abs() as f64).sum::<f64>() + alpha.iter().map(|a| a.abs().to_f64()).sum::<f64>();
            let ld = m.ln() - n * norm.max(1.0).ln();
            let c1 = 2f64.ln() - PI * z.im.abs() + ld;
            let c2 = (PI / 2.0).ln() + ld;
            Some(c1.min(c2).min(0.5f64.ln()))
        }
        _ => None,
    };
    Ok(ExpGap { log_minus, log_plus, certified_log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_model::{catalog, RealFn};
    use proptest::prelude::*;

    fn cst(a: Rational, b: Rational) -> (RealFn, RealFn) {
        (RealFn::rational(a), RealFn::rational(b))
    }

    fn thirty_op() -> EvolutionOperator {
        EvolutionOperator::with_rational_q(vec![cst(rat_int(0), rat(1, 2)), cst(rat_int(0), rat(1, 3))], vec![], (rat(1, 5), rat_int(0)))
    }

    #[test]
    fn exact_rational_floor() {
        let r = dc_check(&thirty_op(), 12);
        assert_eq!(r.method, DcMethod::ExactRational);
        assert_eq!(r.epsilon, Some(rat(1, 30)));
        assert!(matches!(r.status, DcStatus::Holds { exact: true, .. }));
        // no nonzero symbol below the floor
        let min = probe(&thirty_op(), 12).iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        assert!(min >= 1.0 / 30.0 - 1e-15);
    }

    #[test]
    fn integer_data_has_unit_floor() {
        // even sphere coefficients keep alpha in 1/2 Z from producing halves
        let op = EvolutionOperator::with_rational_q(vec![cst(rat_int(2), rat_int(1))], vec![cst(rat_int(2), rat_int(4))], (rat_int(0), rat_int(4)));
        let r = dc_check(&op, 8);
        assert_eq!(r.status, DcStatus::Holds { m: 1.0, n: 0.0, exact: true });
        let op = EvolutionOperator::with_rational_q(vec![cst(rat_int(2), rat_int(1)), cst(rat_int(-3), rat_int(5))], vec![], (rat_int(0), rat_int(-2)));
        assert_eq!(dc_check(&op, 8).status, DcStatus::Holds { m: 1.0, n: 0.0, exact: true });
    }

    #[test]
    fn half_integer_entries_halve_denominators() {
        // e0 = 1: alpha in Z/2 gives values in Z/2
        let op = EvolutionOperator::with_rational_q(vec![], vec![cst(rat_int(1), rat_int(0))], (rat_int(0), rat_int(0)));
        assert_eq!(dc_check(&op, 6).epsilon, Some(rat(1, 2)));
    }

    #[test]
    fn liouville_sphere_sequence() {
        let op = catalog::liouville_sphere();
        let seq = liouville_violation_sequence(&op, 6).unwrap();
        assert_eq!(seq.multiplier, BigInt::one());
        let t1 = &seq.terms[0];
        assert_eq!(t1.xi[0], BigInt::from(10));
        assert_eq!(t1.alpha_twice[0], BigInt::from(-20));
        assert_eq!(t1.tau, BigInt::from(-1));
        let t2 = &seq.terms[1];
        assert_eq!(t2.tau, BigInt::from(-11));
        for t in &seq.terms {
            assert!(t.verified, "n={}", t.n);
            assert!(t.log_sigma <= t.log_bound);
        }
        // super-polynomial: log|sigma| / log(norm) decreases without bound
        let ratios: Vec<f64> = seq.terms.iter().map(|t| t.log_sigma / t.log_norm).collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]));
        assert!(ratios[5] < -5.0);
        assert_eq!(dc_check(&op, 6).status_name(), "FAILS");
    }

    #[test]
    fn liouville_torus_fails() {
        let r = dc_check(&catalog::liouville_torus(), 6);
        assert_eq!(r.method, DcMethod::LiouvilleConstruction);
        // Re q nonzero keeps the imaginary part away from zero
        let mut op = catalog::liouville_torus();
        op.q_re = TaggedReal::rational(rat(1, 3));
        assert!(dc_check(&op, 6).holds());
    }

    #[test]
    fn rational_op_pattern_not_recognized() {
        assert!(matches!(liouville_violation_sequence(&thirty_op(), 3), Err(GshError::PatternNotRecognized(_))));
    }

    #[test]
    fn sqrt2_holds_qualitatively() {
        let r = dc_check(&catalog::sqrt2_constant(), 10);
        assert!(matches!(r.status, DcStatus::Holds { exact: false, .. }));
        let r = dc_check(&catalog::span_one_irrational_damping(), 10);
        assert!(matches!(r.status, DcStatus::Holds { exact: false, n, .. } if n == 0.0));
    }

    #[test]
    fn unspecified_is_unknown() {
        let mut op = thirty_op();
        op.b[0].mean = TaggedReal::unspecified(0.5);
        assert!(matches!(dc_check(&op, 6).status, DcStatus::Unknown { .. }));
    }

    #[test]
    fn exp_gap_values() {
        // z0 = 1/2 from q = -i/2
        let op = EvolutionOperator::with_rational_q(vec![], vec![], (rat_int(0), rat(-1, 2)));
        let g = exp_gap_lower_bound(&op, &[], &[], None).unwrap();
        assert!((g.log_minus - 2f64.ln()).abs() < 1e-14);
        assert!((g.log_plus - 2f64.ln()).abs() < 1e-14);
        // z0 = -iy with q = y real: |1 - e^{-2 pi y}| and |1 - e^{2 pi y}|
        for y in [0.3, 2.0, 40.0] {
            let op = EvolutionOperator::new(vec![], vec![], TaggedReal::unspecified(y), TaggedReal::zero());
            let g = exp_gap_lower_bound(&op, &[], &[], None).unwrap();
            let closed_minus = (1.0 - (-2.0 * PI * y).exp()).abs().ln();
            let closed_plus = 2.0 * PI * y + (1.0 - (-2.0 * PI * y).exp()).ln();
            assert!((g.log_minus - closed_minus).abs() < 1e-12);
            assert!((g.log_plus - closed_plus).abs() < 1e-12 * closed_plus.abs().max(1.0));
        }
        let resonant = EvolutionOperator::with_rational_q(vec![], vec![], (rat_int(0), rat_int(3)));
        assert_eq!(exp_gap_lower_bound(&resonant, &[], &[], None), Err(GshError::Resonant));
    }

    #[test]
    fn exp_gap_certified_bound_below_value() {
        let op = thirty_op();
        let dc = dc_check(&op, 8);
        for xi in [[1, 0], [0, 1], [3, -2], [5, 7]] {
            let g = exp_gap_lower_bound(&op, &xi, &[], Some(&dc)).unwrap();
            let c = g.certified_log.unwrap();
            assert!(c <= g.log_minus && c <= g.log_plus);
        }
    }

    #[test]
    fn integer_system_solutions() {
        let bi = |v: &[i64]| v.iter().map(|x| BigInt::from(*x)).collect::<Vec<_>>();
        let a = vec![bi(&[6, 10, 15]), bi(&[1, 1, 1])];
        let b = bi(&[1, 2]);
        let (rank, x) = solve_integer_system(&a, &b).unwrap();
        assert_eq!(rank, 2);
        for (row, rhs) in a.iter().zip(&b) {
            assert_eq!(row.iter().zip(&x).map(|(p, q)| p * q).sum::<BigInt>(), *rhs);
        }
        assert!(solve_integer_system(&[bi(&[2, 4])], &bi(&[3])).is_none());
    }

    proptest! {
        #[test]
        fn rational_floor_is_a_true_lower_bound(p1 in -6i64..6, q1 in 1i64..6, p2 in -6i64..6, q2 in 1i64..6, pq in -6i64..6, qq in 1i64..6) {
            let op = EvolutionOperator::with_rational_q(
                vec![cst(rat(p1, q1), rat(p2, q2))],
                vec![cst(rat(p2, q1), rat(p1, q2))],
                (rat(pq, qq), rat(pq, q1)),
            );
            let r = dc_check(&op, 6);
            let eps = rat_to_f64(r.epsilon.as_ref().unwrap());
            for (_, a) in probe(&op, 6) {
                prop_assert!(a >= eps * (1.0 - 1e-12));
            }
        }

        #[test]
        fn permuting_torus_coordinates_keeps_verdict(p1 in -6i64..6, q1 in 1i64..6, p2 in -6i64..6, q2 in 1i64..6) {
            let c1 = cst(rat(p1, q1), rat(p2, q2));
            let c2 = cst(rat(p2, q1), rat(p1, q2));
            let a = EvolutionOperator::with_rational_q(vec![c1.clone(), c2.clone()], vec![], (rat(1, 3), rat(1, 7)));
            let b = EvolutionOperator::with_rational_q(vec![c2, c1], vec![], (rat(1, 3), rat(1, 7)));
            prop_assert_eq!(dc_check(&a, 5), dc_check(&b, 5));
        }
    }
}
