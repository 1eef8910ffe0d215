//! Explicit counterexample data: singular right-hand sides under a sign change,
//! violating pairs for the closed-range inequality when a sublevel set splits,
//! singular data along a small-divisor sequence, and non-smooth kernel elements.
//! Magnitudes that can leave the float range are carried as logarithms.

use crate::diophantine::{DcReport, DcStatus};
use crate::error::{GshError, Result};
use crate::fourier::{self, tgrid, DecayClass, PartialMode, SpectralField};
use crate::global_solver::apply_operator;
use crate::numerics::{HalfInt, LatticeMembership};
use crate::ode_solver::{self, Branch, ModeOde};
use crate::operator_model::{gauge_reduce, kernel_family_witness, CsWitness, EvolutionOperator, Witness};
use crate::sublevel::{self, Bump, ClosurePair, PrimitiveFn, SublevelWitness};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::PI;

const TAU: f64 = 2.0 * PI;
const CS_GRID: usize = 2048;

/// Which extremum drives the construction: max of H (mean of theta <= 0) or min of G.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CsBranch {
    Backward,
    Forward,
}

#[derive(Clone, Debug, Serialize)]
pub struct CsTerm {
    pub n: u32,
    pub k: i64,
    pub mode: PartialMode,
    pub log_norm: f64,
    /// ln sup |g_n|
    pub log_g: f64,
    /// ln |u_n(t*)| from the mode solver
    pub log_u_peak: f64,
    /// ln of the closed-form value of |u_n(t*)|
    pub log_u_formula: f64,
    /// ln sup |u_n|
    pub log_u_sup: f64,
    /// sup |u' + theta u - g| relative to sup |g| + sup |theta| sup |u|, on the rescaled equation
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CsConstruction {
    pub xi: Vec<i64>,
    pub alpha: Vec<HalfInt>,
    pub theta0: f64,
    pub branch: CsBranch,
    /// A = max H > 0 (backward) or B = min G < 0 (forward)
    pub extremum: f64,
    pub s_star: f64,
    pub t_star: f64,
    pub sigma: f64,
    pub delta: f64,
    pub terms: Vec<CsTerm>,
    /// regression slope of ln|u_n(t*)| against ln norm
    pub lower_exponent: f64,
    /// ln(2 pi e^{2 pi |Re q|})
    pub log_upper_bound: f64,
    pub g_decay: Option<DecayClass>,
    pub u_decay: Option<DecayClass>,
}

impl CsConstruction {
    /// Lower-bound exponent >= -1/2 - 0.1 and every |u_n| under the uniform bound.
    pub fn verified(&self) -> bool {
        self.extremum_sign_ok()
            && self.lower_exponent >= -0.6
            && self.terms.iter().all(|t| t.log_u_sup <= self.log_upper_bound + 1e-9)
            && self.g_decay == Some(DecayClass::RapidDecay)
    }

    fn extremum_sign_ok(&self) -> bool {
        match self.branch {
            CsBranch::Backward => self.extremum > 0.0,
            CsBranch::Forward => self.extremum < 0.0,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = serde_json::to_value(self).unwrap();
        v["verified"] = json!(self.verified());
        v
    }
}

fn zoom_extremum(f: &dyn Fn(f64, f64) -> f64, maximize: bool) -> (f64, f64, f64) {
    let better = |a: f64, b: f64| if maximize { a > b } else { a < b };
    let n = 256;
    let h = TAU / n as f64;
    let mut best = (f(0.0, 0.0), 0.0, 0.0);
    for i in 0..=n {
        for j in 0..=n {
            let (s, t) = (i as f64 * h, j as f64 * h);
            let v = f(s, t);
            if better(v, best.0) {
                best = (v, s, t);
            }
        }
    }
    let mut w = 2.0 * h;
    for _ in 0..6 {
        let (s0, t0) = (best.1, best.2);
        let m = 16;
        for i in -m..=m {
            for j in -m..=m {
                let s = (s0 + w * i as f64 / m as f64).clamp(0.0, TAU);
                let t = (t0 + w * j as f64 / m as f64).clamp(0.0, TAU);
                let v = f(s, t);
                if better(v, best.0) {
                    best = (v, s, t);
                }
            }
        }
        w /= 8.0;
    }
    best
}

fn wrap_pi(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

fn regression_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Multipliers k_1 < k_2 < ... with k_n >= n and k_n (xi, alpha) non-resonant (decided exactly).
pub fn nonresonant_multipliers(op: &EvolutionOperator, xi: &[i64], alpha: &[HalfInt], count: u32) -> Result<Vec<i64>> {
    let mut out = Vec::new();
    let mut k = 0i64;
    for n in 1..=count as i64 {
        k = (k + 1).max(n);
        let start = k;
        loop {
            let x: Vec<i64> = xi.iter().map(|v| v * k).collect();
            let a: Vec<HalfInt> = alpha.iter().map(|v| *v * k).collect();
            if matches!(op.resonance(&x, &a), LatticeMembership::NotInLattice(_)) {
                break;
            }
            k += 1;
            if k > start + 1000 {
                return Err(GshError::InvalidWitness("no non-resonant multiple found".into()));
            }
        }
        out.push(k);
    }
    Ok(out)
}

/// Singular right-hand side along multiples of a sign-change direction.
pub fn cs_singular_rhs(op: &EvolutionOperator, witness: &CsWitness, n_max: u32) -> Result<CsConstruction> {
    let (xi, alpha) = (&witness.xi, &witness.alpha);
    let theta = op.imag_combination(xi, alpha);
    if !theta.changes_sign() {
        return Err(GshError::InvalidWitness("theta does not change sign".into()));
    }
    let (op_t, _) = gauge_reduce(op);
    let prim: PrimitiveFn = sublevel::primitive(op, xi, alpha);
    let theta0 = theta.mean.approx;
    let branch = if theta0 <= 0.0 { CsBranch::Backward } else { CsBranch::Forward };
    let (extremum, s_star, t_star) = match branch {
        CsBranch::Backward => zoom_extremum(&|s, t| prim.eval(t) - prim.eval(t - s), true),
        CsBranch::Forward => zoom_extremum(&|s, t| prim.eval(t + s) - prim.eval(t), false),
    };
    let sigma = match branch {
        CsBranch::Backward => t_star - s_star,
        CsBranch::Forward => t_star + s_star,
    };
    let delta = s_star.min(TAU - s_star).min(1.0) / 2.0;
    let bump = Bump { center: sigma.rem_euclid(TAU), delta };
    let za = op_t.real_combination(xi, alpha).mean.approx;
    let q = Complex64::new(op.q_re.approx, op.q_im.approx);
    let ks = nonresonant_multipliers(op, xi, alpha, n_max)?;
    let ts = tgrid::grid_points(CS_GRID);

    let terms: Vec<Result<CsTerm>> = ks
        .par_iter()
        .enumerate()
        .map(|(i, &k)| -> Result<CsTerm> {
            let xn: Vec<i64> = xi.iter().map(|v| v * k).collect();
            let an: Vec<HalfInt> = alpha.iter().map(|v| *v * k).collect();
            let mode = PartialMode { xi: xn.clone(), l: an.iter().map(|a| a.abs()).collect(), alpha: an.clone(), beta: an.clone() };
            let th = op_t.mode_theta(&xn, &an);
            let w = TAU * th.mean();
            let factor = match branch {
                CsBranch::Backward => 1.0 - (-w).exp(),
                CsBranch::Forward => w.exp() - 1.0,
            };
            let log_scale = match branch {
                CsBranch::Backward => -(k as f64) * extremum,
                CsBranch::Forward => k as f64 * extremum,
            };
            let rate = Complex64::new(0.0, k as f64 * za) + q;
            // g_n = e^{log_scale} * g_tilde
            let g: Vec<Complex64> = ts
                .iter()
                .map(|&t| {
                    let b = bump.eval(t);
                    if b == 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let off = wrap_pi(t - bump.center);
                    factor * b * (rate * (t_star - sigma - off)).exp()
                })
                .collect();
            let ode = ModeOde::with_resonance(th, g, false);
            let sol = ode_solver::solve_mode(&ode, Branch::Auto, Complex64::new(0.0, 0.0))?;
            let g_sup = tgrid::sup_norm(&ode.g);
            let theta_sup = tgrid::sup_norm(&ode.theta.samples(CS_GRID));
            let residual = ode_solver::residual(&ode, &sol.u) / (g_sup + theta_sup * tgrid::sup_norm(&sol.u));
            let coef = tgrid::coefficients(&sol.u);
            let peak = tgrid::interpolate_at(&coef, t_star.rem_euclid(TAU)).norm();
            // closed form: int phi(t* -+ s) e^{-k(A - H)} ds (resp. e^{-k(G - B)})
            let nq = 8192;
            let hq = TAU / nq as f64;
            let integral: f64 = (0..nq)
                .map(|j| {
                    let s = j as f64 * hq;
                    let (pt, expo) = match branch {
                        CsBranch::Backward => (t_star - s, -(k as f64) * (extremum - (prim.eval(t_star) - prim.eval(t_star - s)))),
                        CsBranch::Forward => (t_star + s, -(k as f64) * (prim.eval(t_star + s) - prim.eval(t_star) - extremum)),
                    };
                    bump.eval(pt.rem_euclid(TAU)) * expo.exp()
                })
                .sum::<f64>()
                * hq;
            Ok(CsTerm {
                n: i as u32 + 1,
                k,
                log_norm: mode.norm().ln(),
                mode,
                log_g: g_sup.ln() + log_scale,
                log_u_peak: peak.ln() + log_scale,
                log_u_formula: integral.ln(),
                log_u_sup: tgrid::sup_norm(&sol.u).ln() + log_scale,
                residual,
            })
        })
        .collect();
    let terms: Vec<CsTerm> = terms.into_iter().collect::<Result<_>>()?;
    let lower_exponent = regression_slope(&terms.iter().map(|t| (t.log_norm, t.log_u_peak)).collect::<Vec<_>>());
    let g_entries: Vec<(f64, f64)> = terms.iter().map(|t| (t.log_norm, t.log_g)).collect();
    let u_entries: Vec<(f64, f64)> = terms.iter().map(|t| (t.log_norm, t.log_u_peak)).collect();
    Ok(CsConstruction {
        xi: xi.clone(),
        alpha: alpha.clone(),
        theta0,
        branch,
        extremum,
        s_star,
        t_star,
        sigma,
        delta,
        terms,
        lower_exponent,
        log_upper_bound: TAU.ln() + TAU * op.q_re.approx.abs(),
        g_decay: fourier::decay_classify_log(&g_entries, -700.0, fourier::DEFAULT_SHELLS).ok(),
        u_decay: fourier::decay_classify_log(&u_entries, -700.0, fourier::DEFAULT_SHELLS).ok(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HormanderEval {
    pub n: u32,
    /// int g_n v_n, expected (2 pi)^r
    pub pairing: f64,
    /// (lambda, ln of the seminorm-product bound)
    pub log_bounds: Vec<(u32, f64)>,
}

#[derive(Clone, Debug)]
pub struct HormanderPair {
    pub pair: ClosurePair,
    pub xi: Vec<i64>,
    pub alpha: Vec<HalfInt>,
    pub r: usize,
    pub s: usize,
    /// ln M for lambda = 1, 2, 3
    pub log_constants: Vec<(u32, f64)>,
    pub evaluations: Vec<HormanderEval>,
}

pub const HORMANDER_LAMBDAS: [u32; 3] = [1, 2, 3];

impl HormanderPair {
    pub fn omega(&self) -> f64 {
        self.pair.omega
    }

    /// First n from which the bound is decreasing: (4 lambda + 3 + s)/|omega|.
    pub fn decreasing_from(&self, lambda: u32) -> u32 {
        ((4 * lambda + 3 + self.s as u32) as f64 / self.omega().abs()).ceil() as u32
    }

    pub fn log_bound(&self, lambda: u32, n: u32) -> f64 {
        let lm = self.log_constants.iter().find(|c| c.0 == lambda).map(|c| c.1).unwrap_or(0.0);
        lm + (4 * lambda + 3 + self.s as u32) as f64 * (n as f64).ln() + n as f64 * self.omega()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "xi": self.xi,
            "alpha": self.alpha,
            "closure_pair": self.pair.to_json(),
            "integral_g0": self.pair.integral_g0(),
            "omega": self.omega(),
            "log_constants": self.log_constants,
            "decreasing_from": HORMANDER_LAMBDAS.iter().map(|l| (*l, self.decreasing_from(*l))).collect::<Vec<_>>(),
            "evaluations": self.evaluations,
        })
    }
}

fn cj_norm(samples: &[Complex64], order: u32) -> f64 {
    let mut cur = samples.to_vec();
    let mut total = tgrid::sup_norm(&cur);
    for _ in 0..order {
        cur = tgrid::derivative(&cur);
        total += tgrid::sup_norm(&cur);
    }
    total
}

/// Pairs g_n, v_n built on the closure pair of a split sublevel set, evaluated at `ns`.
pub fn hormander_pair(op: &EvolutionOperator, witness: &SublevelWitness, ns: &[u32]) -> Result<HormanderPair> {
    let (xi, alpha) = (&witness.xi, &witness.alpha);
    let f = sublevel::primitive(op, xi, alpha);
    if !f.is_periodic() {
        return Err(GshError::InvalidWitness("integrand has nonzero mean".into()));
    }
    let pair = sublevel::disjoint_closure_pair(&f, witness.m).map_err(|e| GshError::InvalidWitness(e.to_string()))?;
    let nq = sublevel::QUAD_POINTS;
    let ts = tgrid::grid_points(nq);
    let g0: Vec<Complex64> = ts.iter().map(|&t| Complex64::new(pair.g0(t), 0.0)).collect();
    let v0: Vec<Complex64> = ts.iter().map(|&t| Complex64::new(pair.v0(t), 0.0)).collect();
    let dv0 = tgrid::derivative(&v0);
    let size = 1.0 + xi.iter().map(|x| x.abs() as f64).sum::<f64>() + alpha.iter().map(|a| a.to_f64().abs()).fold(0.0, f64::max);
    let q = Complex64::new(op.q_re.approx, op.q_im.approx);
    let s = op.s;
    let log_constants: Vec<(u32, f64)> = HORMANDER_LAMBDAS
        .iter()
        .map(|&l| {
            let lead = (2 * l + 1 + s as u32) as f64 * (2.0 * size).ln() + (2 * l + 1) as f64 * (1.0 + q.norm()).ln();
            (l, cj_norm(&g0, l).ln() + cj_norm(&dv0, l + 1).ln() + lead)
        })
        .collect();
    // w(t) = int_0^t <c, xi> + <d, alpha>
    let re_w = op.real_combination(xi, alpha);
    let re_prim = re_w.wave.primitive().0;
    let w_at = |t: f64| Complex64::new(re_prim.eval_real(t) + re_w.mean.approx * t, f.eval(t));
    let r = op.r;
    let mut out = HormanderPair { pair, xi: xi.clone(), alpha: alpha.clone(), r, s, log_constants, evaluations: vec![] };
    for &n in ns {
        let nf = n as f64;
        let h = TAU / nq as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &t) in ts.iter().enumerate() {
            if g0[i].re == 0.0 {
                continue;
            }
            let iw = Complex64::new(0.0, 1.0) * w_at(t);
            // log-magnitudes of the two t-factors, combined before exponentiating
            let eg = nf * iw - q * t;
            let ev = -nf * iw + q * t;
            acc += (eg + ev).exp() * g0[i] * v0[i];
        }
        let pairing = TAU.powi(r as i32) * acc.re * h;
        let log_bounds = HORMANDER_LAMBDAS.iter().map(|&l| (l, out.log_bound(l, n))).collect();
        out.evaluations.push(HormanderEval { n, pairing, log_bounds });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct DcSingularTerm {
    pub n: u32,
    pub log_norm: f64,
    pub log_j: f64,
    /// ln |g_n| = ln |sigma_n| / 2
    pub log_g: f64,
    /// ln |u_n| = -ln |sigma_n| / 2
    pub log_u: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DcSingularData {
    pub terms: Vec<DcSingularTerm>,
    /// ln C' / 2 in ln|g_n| <= -(n-1)/2 ln j_n + c
    pub log_c: f64,
    pub g_decay: Option<DecayClass>,
    pub u_decay: Option<DecayClass>,
}

impl DcSingularData {
    /// Smooth data, forced solution of super-polynomial growth, every term verified.
    pub fn certified(&self) -> bool {
        self.g_decay == Some(DecayClass::RapidDecay) && self.u_decay == Some(DecayClass::Suprapolynomial) && self.bounds_hold()
    }

    pub fn bounds_hold(&self) -> bool {
        self.terms.iter().all(|t| {
            let b = (t.n as f64 - 1.0) / 2.0 * t.log_j;
            t.log_g <= -b + self.log_c + 1e-9 && t.log_u >= b - self.log_c - 1e-9
        })
    }

    pub fn to_json(&self) -> Value {
        let mut v = serde_json::to_value(self).unwrap();
        v["certified"] = json!(self.certified());
        v
    }
}

/// g = |sigma_n|^{1/2} on the small-divisor modes; the forced u has |u_n| = |sigma_n|^{-1/2}.
pub fn dc_violation_singular_data(report: &DcReport) -> Result<DcSingularData> {
    let seq = match &report.status {
        DcStatus::Fails { sequence } => sequence,
        _ => return Err(GshError::InvalidWitness("the small-divisor condition is not known to fail".into())),
    };
    if seq.terms.iter().any(|t| !t.verified) {
        return Err(GshError::InvalidWitness("sequence contains an unverified term".into()));
    }
    let terms: Vec<DcSingularTerm> = seq
        .terms
        .iter()
        .map(|t| DcSingularTerm { n: t.n, log_norm: t.log_norm, log_j: t.log_j, log_g: t.log_sigma / 2.0, log_u: -t.log_sigma / 2.0 })
        .collect();
    let log_c = crate::numerics::rat_to_f64(&seq.constant).ln() / 2.0;
    let ge: Vec<(f64, f64)> = terms.iter().map(|t| (t.log_norm, t.log_g)).collect();
    let ue: Vec<(f64, f64)> = terms.iter().map(|t| (t.log_norm, t.log_u)).collect();
    Ok(DcSingularData {
        g_decay: fourier::decay_classify_log(&ge, f64::NEG_INFINITY, fourier::DEFAULT_SHELLS).ok(),
        u_decay: fourier::decay_classify_log(&ue, f64::NEG_INFINITY, fourier::DEFAULT_SHELLS).ok(),
        terms,
        log_c,
    })
}

#[derive(Clone, Debug)]
pub struct KernelFamily {
    pub xi: Vec<i64>,
    pub alpha: Vec<HalfInt>,
    pub u: SpectralField,
    /// sup over the family of sup_t |u|
    pub k_bound: f64,
    /// min over the family of |u(0)|
    pub min_at_zero: f64,
    pub residual: f64,
}

impl KernelFamily {
    pub fn to_json(&self) -> Value {
        json!({
            "xi": self.xi,
            "alpha": self.alpha,
            "modes": self.u.table.keys().collect::<Vec<_>>(),
            "k_bound": self.k_bound,
            "min_abs_at_zero": self.min_at_zero,
            "residual": self.residual,
            "u": fourier::SpectralFieldJson::from(&self.u),
        })
    }
}

/// u = e^{-int theta} on an infinite ladder of resonant modes: Lu = 0, |u(0)| = 1.
pub fn homogeneous_kernel_family(op: &EvolutionOperator, bound: usize, n_t: usize) -> Result<KernelFamily> {
    let (xi, alpha, ladder) = match kernel_family_witness(op, bound) {
        Some(Witness::KernelFamily { xi, alpha, ladder }) => (xi, alpha, ladder),
        _ => return Err(GshError::InvalidWitness("no infinite resonant family within the bound".into())),
    };
    let max_norm = ladder.iter().map(|m| m.norm().ceil() as usize).max().unwrap_or(0);
    let mut u = SpectralField::new(op.r, op.s, n_t, max_norm.max(bound));
    for m in &ladder {
        let ode = ModeOde::with_resonance(op.mode_theta(&m.xi, &m.alpha), vec![Complex64::new(0.0, 0.0); n_t], true);
        u.insert(m.clone(), ode_solver::homogeneous(&ode)?)?;
    }
    let lu = apply_operator(op, &u)?;
    Ok(KernelFamily {
        xi,
        alpha,
        k_bound: u.sup_norm(),
        min_at_zero: u.table.values().map(|v| v[0].norm()).fold(f64::INFINITY, f64::min),
        residual: lu.sup_norm(),
        u,
    })
}
