//! Primitives F(t) = int_0^t (<b,xi> + <f,alpha>) and connectedness of their
//! sublevel sets {F < m} on the circle, with witnesses and the bump data
//! separating two components.

use crate::error::{GshError, Result};
use crate::fourier::trig::{real_critical_points, CTrig, TrigPoly};
use crate::numerics::{HalfInt, TaggedReal};
use crate::operator_model::{lattice_directions, structure_report, EvolutionOperator, Membership};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::f64::consts::PI;

const TAU: f64 = 2.0 * PI;

#[derive(Clone, Debug, PartialEq)]
pub struct PrimitiveFn {
    /// exact primitive of the oscillatory part, zero at t = 0
    pub wave: TrigPoly,
    /// mean of the integrand
    pub slope: TaggedReal,
    pub xi: Vec<i64>,
    pub alpha: Vec<HalfInt>,
}

impl PrimitiveFn {
    pub fn eval(&self, t: f64) -> f64 {
        self.wave.eval_real(t) + self.slope.approx * t
    }

    pub fn is_periodic(&self) -> bool {
        self.slope.is_exact_zero()
    }

    pub fn to_ctrig(&self) -> CTrig {
        self.wave.to_float()
    }

    pub fn negated(&self) -> PrimitiveFn {
        let m1 = crate::numerics::rat_int(-1);
        PrimitiveFn {
            wave: self.wave.scale(&m1),
            slope: crate::numerics::tagged_combination(&[(&self.slope, m1)]),
            xi: self.xi.iter().map(|x| -x).collect(),
            alpha: self.alpha.iter().map(|a| -*a).collect(),
        }
    }
}

/// F for the direction (xi, alpha).
pub fn primitive(op: &EvolutionOperator, xi: &[i64], alpha: &[HalfInt]) -> PrimitiveFn {
    let integrand = op.imag_combination(xi, alpha);
    PrimitiveFn { wave: integrand.wave.primitive().0, slope: integrand.mean, xi: xi.to_vec(), alpha: alpha.to_vec() }
}

/// Arc (start, end) traversed counterclockwise; end < start means it wraps through 0.
pub type Arc = (f64, f64);

#[derive(Clone, Debug, PartialEq)]
pub enum Connectivity {
    Connected,
    Disconnected { m: f64, arcs: Vec<Arc> },
}

impl Connectivity {
    pub fn is_connected(&self) -> bool {
        matches!(self, Connectivity::Connected)
    }
}

/// Circular list of (t, F(t)) at the strict local extrema.
fn extrema(f: &CTrig) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = real_critical_points(f).into_iter().map(|t| (t, f.eval(t).re)).collect();
    // merge numerically repeated points
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12);
    if pts.len() > 1 && (pts[0].0 + TAU - pts[pts.len() - 1].0).abs() < 1e-12 {
        pts.pop();
    }
    pts
}

fn crossings(f: &CTrig, ext: &[(f64, f64)], m: f64) -> Vec<(f64, bool)> {
    // (t, going_down)
    let n = ext.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (t0, v0) = ext[i];
        let (mut t1, v1) = ext[(i + 1) % n];
        if t1 <= t0 {
            t1 += TAU;
        }
        if (v0 < m) == (v1 < m) {
            continue;
        }
        let (mut a, mut b) = (t0, t1);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if (f.eval(mid).re < m) == (v0 < m) {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < 1e-14 {
                break;
            }
        }
        out.push((0.5 * (a + b) % TAU, v1 < m));
    }
    out
}

/// Components of {F < m} as arcs.
pub fn sublevel_arcs(f: &PrimitiveFn, m: f64) -> Vec<Arc> {
    let c = f.to_ctrig();
    let ext = extrema(&c);
    if ext.is_empty() {
        return if c.eval(0.0).re < m { vec![(0.0, TAU)] } else { vec![] };
    }
    let cr = crossings(&c, &ext, m);
    if cr.is_empty() {
        return if ext[0].1 < m { vec![(0.0, TAU)] } else { vec![] };
    }
    let mut arcs = Vec::new();
    for (i, &(t, down)) in cr.iter().enumerate() {
        if down {
            let (e, _) = cr[(i + 1) % cr.len()];
            arcs.push((t, e));
        }
    }
    arcs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    arcs
}

/// Are all sublevel sets of F connected? Otherwise a witness level and its arcs.
pub fn connected_all_m(f: &PrimitiveFn) -> Result<Connectivity> {
    if !f.is_periodic() {
        return Err(GshError::NonzeroSlope(format!("{}", f.slope.approx)));
    }
    let c = f.to_ctrig();
    let ext = extrema(&c);
    if ext.len() <= 2 {
        return Ok(Connectivity::Connected);
    }
    let mut levels: Vec<f64> = ext.iter().map(|e| e.1).collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = 1.0 + levels.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    levels.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * scale);
    // first run of level intervals with >= 2 components
    let mut run: Option<(f64, f64)> = None;
    for w in levels.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let comps = crossings(&c, &ext, mid).len() / 2;
        match (&mut run, comps >= 2) {
            (None, true) => run = Some((w[0], w[1])),
            (Some(r), true) => r.1 = w[1],
            (Some(_), false) => break,
            (None, false) => {}
        }
    }
    match run {
        None => Ok(Connectivity::Connected),
        Some((lo, hi)) => {
            let m = 0.5 * (lo + hi);
            Ok(Connectivity::Disconnected { m, arcs: sublevel_arcs(f, m) })
        }
    }
}

/// Superlevel sets {F > m} connected for all m (equivalently sublevels of -F).
pub fn connected_all_m_superlevel(f: &PrimitiveFn) -> Result<Connectivity> {
    connected_all_m(&f.negated())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SublevelWitness {
    pub m: f64,
    pub xi: Vec<i64>,
    pub alpha: Vec<HalfInt>,
    pub arcs: Vec<Arc>,
    pub primitive: PrimitiveFn,
}

impl SublevelWitness {
    pub fn to_json(&self) -> Value {
        json!({"m": self.m, "xi": self.xi, "alpha": self.alpha, "arcs": self.arcs})
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyVerdict {
    /// exact: the check covers every direction
    Connected { exact: bool, checked: usize },
    Disconnected(SublevelWitness),
}

fn check_direction(op: &EvolutionOperator, xi: &[i64], alpha: &[HalfInt]) -> Result<Option<SublevelWitness>> {
    let f = primitive(op, xi, alpha);
    Ok(match connected_all_m(&f)? {
        Connectivity::Connected => None,
        Connectivity::Disconnected { m, arcs } => Some(SublevelWitness { m, xi: xi.to_vec(), alpha: alpha.to_vec(), arcs, primitive: f }),
    })
}

fn primitive_vector(u: &[i64]) -> bool {
    use num_integer::Integer;
    u.iter().fold(0i64, |g, x| g.gcd(x)) == 1
}

/// Connectedness of all sublevel sets over every direction (xi, alpha).
pub fn connectedness_family(op: &EvolutionOperator, bound: usize) -> Result<FamilyVerdict> {
    let st = structure_report(op);
    if st.b0f0_zero != Membership::In {
        return Err(GshError::NonzeroSlope("(b0, f0) is not zero".into()));
    }
    let (r, s) = (op.r, op.s);
    if st.span_dim == 0 {
        return Ok(FamilyVerdict::Connected { exact: true, checked: 0 });
    }
    if let Some(sp) = &st.span1 {
        // every integrand is a multiple of the base function
        let base = PrimitiveFn { wave: sp.base.wave.primitive().0, slope: TaggedReal::zero(), xi: vec![], alpha: vec![] };
        for sign in [1.0, -1.0] {
            let f = if sign > 0.0 { base.clone() } else { base.negated() };
            if !connected_all_m(&f)?.is_connected() {
                // a lattice direction whose multiplier has this sign
                let dir = lattice_directions(r, s, bound.max(2)).into_iter().find(|(xi, al)| {
                    let k: f64 = xi.iter().zip(&sp.lambda).map(|(x, l)| *x as f64 * l.approx).sum::<f64>()
                        + al.iter().zip(&sp.gamma).map(|(a, g)| a.to_f64() * g.approx).sum::<f64>();
                    k * sign > 1e-12
                });
                if let Some((xi, al)) = dir {
                    if let Some(w) = check_direction(op, &xi, &al)? {
                        return Ok(FamilyVerdict::Disconnected(w));
                    }
                }
            }
        }
        return Ok(FamilyVerdict::Connected { exact: true, checked: 2 });
    }
    // all integrands of frequency one: every F is a single sinusoid with one minimum
    let fns: Vec<_> = op.b.iter().chain(&op.f).collect();
    let freqs: std::collections::BTreeSet<i64> = fns.iter().flat_map(|f| f.wave.coeffs().keys().map(|k| k.abs())).collect();
    if freqs.iter().all(|k| *k == 1) {
        return Ok(FamilyVerdict::Connected { exact: true, checked: 0 });
    }
    let mut dirs: Vec<(Vec<i64>, Vec<HalfInt>)> = Vec::new();
    // coordinate directions first (weights |xi| + 2|alpha| within the bound)
    for j in (0..r).filter(|_| bound >= 1) {
        let mut x = vec![0; r];
        x[j] = 1;
        dirs.push((x, vec![HalfInt::ZERO; s]));
    }
    for k in (0..s).filter(|_| bound >= 2) {
        let mut a = vec![HalfInt::ZERO; s];
        a[k] = HalfInt::int(1);
        dirs.push((vec![0; r], a));
    }
    for (xi, al) in lattice_directions(r, s, bound) {
        let u: Vec<i64> = xi.iter().copied().chain(al.iter().map(|a| a.twice)).collect();
        if primitive_vector(&u) {
            dirs.push((xi, al));
        }
    }
    let checked = dirs.len();
    let found: Vec<Result<Option<SublevelWitness>>> = dirs.par_iter().map(|(xi, al)| check_direction(op, xi, al)).collect();
    for f in found {
        if let Some(w) = f? {
            return Ok(FamilyVerdict::Disconnected(w));
        }
    }
    Ok(FamilyVerdict::Connected { exact: false, checked })
}

/// C^infinity step: 0 for x <= 0, 1 for x >= 1.
pub fn smooth_step(x: f64) -> f64 {
    fn h(x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            (-1.0 / x).exp()
        }
    }
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        h(x) / (h(x) + h(1.0 - x))
    }
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Plateau bump: 1 within delta/2 of the center, 0 beyond delta.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub delta: f64,
}

impl Bump {
    pub fn eval(&self, t: f64) -> f64 {
        let d = circ_dist(t, self.center);
        smooth_step((self.delta - d) / (0.5 * self.delta))
    }
}

/// Periodic function rising 0 -> 1 around `rise`, falling back around `fall`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub rise: f64,
    pub rise_half: f64,
    pub fall: f64,
    pub fall_half: f64,
}

impl Step {
    pub fn eval(&self, t: f64) -> f64 {
        let o = self.rise - self.rise_half;
        let x = (t - o).rem_euclid(TAU);
        let fall_start = (self.fall - self.fall_half - o).rem_euclid(TAU);
        if x <= 2.0 * self.rise_half {
            smooth_step(x / (2.0 * self.rise_half))
        } else if x <= fall_start {
            1.0
        } else {
            1.0 - smooth_step((x - fall_start) / (2.0 * self.fall_half))
        }
    }

    /// Intervals (center, half-width) where the derivative can be nonzero.
    pub fn transitions(&self) -> [(f64, f64); 2] {
        [(self.rise, self.rise_half), (self.fall, self.fall_half)]
    }
}

/// g0 = phi1/int(phi1) - phi2/int(phi2) off the sublevel set; v0 a step whose
/// transitions sit inside it, so that int g0 = 0 and int g0 v0 = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosurePair {
    pub m0: f64,
    pub m_witness: f64,
    pub components: Vec<Arc>,
    pub phi1: Bump,
    pub phi2: Bump,
    pub norm1: f64,
    pub norm2: f64,
    pub v0: Step,
    /// max of F - m0 over the transition intervals of v0 (negative)
    pub omega: f64,
    pub t1: f64,
}

pub const QUAD_POINTS: usize = 8192;

fn quad(f: impl Fn(f64) -> f64) -> f64 {
    let h = TAU / QUAD_POINTS as f64;
    (0..QUAD_POINTS).map(|i| f(i as f64 * h)).sum::<f64>() * h
}

impl ClosurePair {
    pub fn g0(&self, t: f64) -> f64 {
        self.phi1.eval(t) / self.norm1 - self.phi2.eval(t) / self.norm2
    }

    pub fn v0(&self, t: f64) -> f64 {
        self.v0.eval(t)
    }

    pub fn integral_g0(&self) -> f64 {
        quad(|t| self.g0(t))
    }

    pub fn pairing(&self) -> f64 {
        quad(|t| self.g0(t) * self.v0(t))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "m0": self.m0,
            "m_witness": self.m_witness,
            "components": self.components,
            "g0": {"bumps": [
                {"center": self.phi1.center, "delta": self.phi1.delta, "weight": 1.0 / self.norm1},
                {"center": self.phi2.center, "delta": self.phi2.delta, "weight": -1.0 / self.norm2},
            ], "plateau_fraction": 0.5},
            "v0": {"rise": self.v0.rise, "rise_half": self.v0.rise_half, "fall": self.v0.fall, "fall_half": self.v0.fall_half},
            "omega": self.omega,
            "t1": self.t1,
        })
    }
}

fn arc_len(a: &Arc) -> f64 {
    (a.1 - a.0).rem_euclid(TAU)
}

fn arc_point(a: &Arc, frac: f64) -> f64 {
    (a.0 + frac * arc_len(a)).rem_euclid(TAU)
}

/// argmin of F within an arc, sampled then refined.
fn arc_argmin(f: &PrimitiveFn, a: &Arc) -> f64 {
    let n = 512;
    let mut best = (f64::INFINITY, a.0);
    for i in 1..n {
        let t = arc_point(a, i as f64 / n as f64);
        let v = f.eval(t);
        if v < best.0 {
            best = (v, t);
        }
    }
    best.1
}

fn arc_argmax(f: &PrimitiveFn, a: &Arc) -> f64 {
    let g = f.negated();
    arc_argmin(&g, a)
}

/// Separating data for a disconnected sublevel set.
pub fn disjoint_closure_pair(f: &PrimitiveFn, m_witness: f64) -> Result<ClosurePair> {
    if connected_all_m(f)?.is_connected() {
        return Err(GshError::Connected);
    }
    let comps_w = sublevel_arcs(f, m_witness);
    if comps_w.len() < 2 {
        return Err(GshError::InvalidWitness(format!("{{F < {m_witness}}} has {} component(s)", comps_w.len())));
    }
    // lowest level at which the same two components are already present
    let mins: Vec<f64> = comps_w.iter().map(|a| f.eval(arc_argmin(f, a))).collect();
    let mut sorted = mins.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m0 = 0.5 * (sorted[1] + m_witness);
    let comps = sublevel_arcs(f, m0);
    if comps.len() < 2 {
        return Err(GshError::InvalidWitness("components merge below the witness level".into()));
    }
    // keep two components: the two deepest
    let mut idx: Vec<usize> = (0..comps.len()).collect();
    idx.sort_by(|&i, &j| f.eval(arc_argmin(f, &comps[i])).partial_cmp(&f.eval(arc_argmin(f, &comps[j]))).unwrap());
    let (mut c1, mut c2) = (comps[idx[0]], comps[idx[1]]);
    if c2.0 < c1.0 {
        std::mem::swap(&mut c1, &mut c2);
    }
    // separating arcs between them (complement of the union, in circular order)
    let k1: Arc = (c1.1, c2.0);
    let k2: Arc = (c2.1, c1.0);
    let bump_in = |k: &Arc| -> Bump {
        let center = arc_argmax(f, k);
        // radius keeping F > m0 and staying inside the arc
        let room = circ_dist(center, k.0).min(circ_dist(center, k.1));
        let mut delta = 0.5 * room;
        while delta > 1e-6 && (0..=32).any(|i| f.eval(center + delta * (i as f64 / 16.0 - 1.0)) <= m0) {
            delta *= 0.5;
        }
        Bump { center, delta }
    };
    let phi1 = bump_in(&k1);
    let phi2 = bump_in(&k2);
    let trans = |c: &Arc| -> (f64, f64) {
        let center = arc_argmin(f, c);
        let room = circ_dist(center, c.0).min(circ_dist(center, c.1));
        (center, 0.5 * room)
    };
    let (rise, rise_half) = trans(&c1);
    let (fall, fall_half) = trans(&c2);
    let v0 = Step { rise, rise_half, fall, fall_half };
    let norm1 = quad(|t| phi1.eval(t));
    let norm2 = quad(|t| phi2.eval(t));
    let mut omega = f64::NEG_INFINITY;
    let mut t1 = rise;
    for (c, h) in v0.transitions() {
        for i in 0..=256 {
            let t = c + h * (i as f64 / 128.0 - 1.0);
            let v = f.eval(t) - m0;
            if v > omega {
                omega = v;
                t1 = t.rem_euclid(TAU);
            }
        }
    }
    Ok(ClosurePair { m0, m_witness, components: vec![c1, c2], phi1, phi2, norm1, norm2, v0, omega, t1 })
}

/// Samples of F on an n-point grid, for plotting.
pub fn samples(f: &PrimitiveFn, n: usize) -> Vec<(f64, f64)> {
    (0..n).map(|i| {
        let t = TAU * i as f64 / n as f64;
        (t, f.eval(t))
    }).collect()
}
