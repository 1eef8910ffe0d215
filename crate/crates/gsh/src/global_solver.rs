//! Lu = g mode by mode: application of L, annihilator membership, the solve
//! itself and growth certification of the result.

use crate::error::{GshError, Result};
use crate::fourier::{self, tgrid, DecayClass, PartialMode, SpectralField};
use crate::numerics::LatticeMembership;
use crate::ode_solver::{self, Branch, Method, ModeOde};
use crate::operator_model::{structure_report, EvolutionOperator, Membership};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// Application of L on the sample grid of `u`. Products are formed pointwise, so
/// the result is exact as long as the t-bandwidth of u plus that of the
/// coefficients stays below n_t / 2; see [`bandwidth_after`].
pub fn apply_operator(op: &EvolutionOperator, u: &SpectralField) -> Result<SpectralField> {
    op.check_dims(u)?;
    let mut out = SpectralField::new(u.r, u.s, u.n_t, u.bound);
    for (m, v) in &u.table {
        let th = op.mode_theta(&m.xi, &m.alpha).samples(u.n_t);
        let du = tgrid::derivative(v);
        let w = du.iter().zip(&th).zip(v).map(|((d, t), x)| d + t * x).collect();
        out.insert(m.clone(), w)?;
    }
    Ok(out)
}

/// t-bandwidth of Lu for a field of t-bandwidth `u_bw`.
pub fn bandwidth_after(op: &EvolutionOperator, u_bw: i64) -> i64 {
    let coef = op.a.iter().chain(&op.b).chain(&op.e).chain(&op.f).map(|f| f.wave.bandwidth()).max().unwrap_or(0);
    u_bw + coef
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Annihilator {
    In,
    Out { mode: PartialMode, re: f64, im: f64 },
}

impl Annihilator {
    pub fn is_in(&self) -> bool {
        matches!(self, Annihilator::In)
    }
}

/// Resonance of the mode (xi, alpha), decided on the exact data when possible.
fn mode_resonant(op: &EvolutionOperator, m: &PartialMode) -> bool {
    match op.resonance(&m.xi, &m.alpha) {
        LatticeMembership::InLattice => true,
        LatticeMembership::NotInLattice(_) => false,
        LatticeMembership::Unknown => {
            let t0 = op.mode_theta(&m.xi, &m.alpha).mean();
            t0.re.abs() <= 1e-12 && (t0.im - t0.im.round()).abs() <= 1e-12
        }
    }
}

/// Every resonant mode of g must pass the compatibility gate.
pub fn annihilator_test(op: &EvolutionOperator, g: &SpectralField, bound: usize) -> Result<Annihilator> {
    op.check_dims(g)?;
    for (m, v) in &g.table {
        if m.norm() > bound as f64 || !mode_resonant(op, m) {
            continue;
        }
        let ode = ModeOde::with_resonance(op.mode_theta(&m.xi, &m.alpha), v.clone(), true);
        if !ode_solver::compatibility_holds(&ode) {
            let c = ode_solver::compatibility(&ode);
            return Ok(Annihilator::Out { mode: m.clone(), re: c.re, im: c.im });
        }
    }
    Ok(Annihilator::In)
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// coefficient of the homogeneous solution on resonant modes
    pub lambda: Complex64,
    pub parallel: bool,
    /// use the argmax-basepoint formula on resonant modes when b0 = f0 = 0
    pub basepoint: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { lambda: Complex64::new(0.0, 0.0), parallel: true, basepoint: true }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub u: SpectralField,
    pub residual_sup: f64,
    pub methods: BTreeMap<PartialMode, Method>,
    pub decay: Option<DecayClass>,
    pub annihilator: Annihilator,
}

impl SolveReport {
    pub fn to_json(&self) -> Value {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for m in self.methods.values() {
            *counts.entry(serde_json::to_value(m).unwrap().as_str().unwrap().to_string()).or_default() += 1;
        }
        json!({
            "u": fourier::SpectralFieldJson::from(&self.u),
            "residual_sup": self.residual_sup,
            "methods": self.methods.iter().map(|(m, t)| json!({"mode": m, "method": t})).collect::<Vec<_>>(),
            "method_counts": counts,
            "decay": self.decay,
            "annihilator": self.annihilator,
        })
    }
}

fn solve_one(op: &EvolutionOperator, m: &PartialMode, g: &[Complex64], opts: &SolveOptions, basepoint: bool) -> Result<(Vec<Complex64>, Method)> {
    let resonant = mode_resonant(op, m);
    let ode = ModeOde::with_resonance(op.mode_theta(&m.xi, &m.alpha), g.to_vec(), resonant);
    let sol = if resonant && basepoint && opts.lambda == Complex64::new(0.0, 0.0) {
        ode_solver::solve_argmax_basepoint(&ode)
    } else {
        ode_solver::solve_mode(&ode, Branch::Auto, opts.lambda)
    };
    match sol {
        Ok(s) => Ok((s.u, s.method)),
        Err(GshError::NoSolution { .. }) => Err(GshError::Annihilator(format!("{m:?}"))),
        Err(e) => Err(e),
    }
}

/// sup |L u - g| evaluated on a grid four times finer than the solve grid.
pub fn residual(op: &EvolutionOperator, u: &SpectralField, g: &SpectralField) -> Result<f64> {
    let fine = u.n_t * 4;
    let lu = apply_operator(op, &u.resampled(fine))?;
    let gf = g.resampled(fine);
    let mut r: f64 = 0.0;
    for (m, v) in &lu.table {
        let zero = vec![Complex64::new(0.0, 0.0); fine];
        let gv = gf.get(m).unwrap_or(&zero);
        r = r.max(v.iter().zip(gv).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
    }
    for (m, v) in &gf.table {
        if lu.get(m).is_none() {
            r = r.max(tgrid::sup_norm(v));
        }
    }
    Ok(r)
}

pub fn solve(op: &EvolutionOperator, g: &SpectralField, opts: &SolveOptions) -> Result<SolveReport> {
    op.check_dims(g)?;
    let annihilator = annihilator_test(op, g, usize::MAX)?;
    if let Annihilator::Out { mode, .. } = &annihilator {
        return Err(GshError::Annihilator(format!("{mode:?}")));
    }
    let basepoint = opts.basepoint && structure_report(op).b0f0_zero == Membership::In;
    let modes: Vec<(&PartialMode, &Vec<Complex64>)> = g.table.iter().collect();
    let run = |(m, v): &(&PartialMode, &Vec<Complex64>)| solve_one(op, m, v, opts, basepoint).map(|r| ((*m).clone(), r));
    let solved: Vec<Result<(PartialMode, (Vec<Complex64>, Method))>> =
        if opts.parallel { modes.par_iter().map(run).collect() } else { modes.iter().map(run).collect() };
    let mut u = SpectralField::new(g.r, g.s, g.n_t, g.bound);
    let mut methods = BTreeMap::new();
    for r in solved {
        let (m, (v, method)) = r?;
        methods.insert(m.clone(), method);
        u.insert(m, v)?;
    }
    let residual_sup = residual(op, &u, g)?;
    // magnitudes below the round-off floor of the solve count as zero
    let floor = 1e-12 * u.sup_norm().max(1.0);
    let decay = fourier::decay_classify(&fourier::field_entries(&u), floor, fourier::DEFAULT_SHELLS).ok();
    Ok(SolveReport { u, residual_sup, methods, decay, annihilator })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    /// |u(t)| <= k (|xi| + |l|)^m ||g||
    pub k: f64,
    pub m: f64,
    pub decay: Option<DecayClass>,
}

/// Fit the per-mode bound |u| <= K (|xi|+|l|)^M ||g_mode|| over the solved modes.
pub fn decay_certify(report: &SolveReport, g: &SpectralField) -> DecayCertificate {
    let mut best: BTreeMap<i64, f64> = BTreeMap::new();
    for (m, v) in &report.u.table {
        let gn = g.get(m).map(|x| tgrid::sup_norm(x)).unwrap_or(0.0);
        if gn <= 0.0 {
            continue;
        }
        let w = m.norm().max(1.0);
        let key = (w * 1024.0).round() as i64;
        let e = best.entry(key).or_insert(0.0);
        *e = e.max(tgrid::sup_norm(v) / gn);
    }
    let pts: Vec<(f64, f64)> = best.iter().filter(|(_, r)| **r > 0.0).map(|(w, r)| ((*w as f64 / 1024.0).ln(), r.ln())).collect();
    let m = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 }
    } else {
        0.0
    };
    let k = pts.iter().map(|(lw, lr)| (lr - m * lw).exp()).fold(0.0, f64::max);
    DecayCertificate { k, m, decay: report.decay.clone() }
}

/// Seeded band-limited field: every partial mode within `bound`, t-bandwidth `t_bw`,
/// coefficients decaying like e^{-decay * norm}.
pub fn random_field(r: usize, s: usize, n_t: usize, bound: usize, t_bw: i64, decay: f64, seed: u64) -> Result<SpectralField> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::new(r, s, n_t, bound);
    for m in fourier::enumerate_modes(r, s, bound) {
        let scale = (-decay * m.norm()).exp();
        let coeffs: Vec<(i64, Complex64)> =
            (-t_bw..=t_bw).map(|k| (k, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale)).collect();
        let p = crate::fourier::CTrig::from_coeffs(coeffs);
        f.insert(m, p.samples(n_t))?;
    }
    Ok(f)
}
