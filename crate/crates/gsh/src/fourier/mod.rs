//! Partial and total Fourier analysis on T^{r+1} x (S^3)^s, the bilinear
//! pairing, and growth classification of coefficient tables.

pub mod tgrid;
pub mod trig;

use crate::error::{GshError, Result};
use crate::harmonics::{LegendreExpansion, WignerIndex};
use crate::numerics::HalfInt;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

pub use trig::{CTrig, TrigPoly, TrigPolyJson};

/// Partial mode (xi, l, alpha, beta); the t-dependence stays a function.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartialMode {
    pub xi: Vec<i64>,
    pub l: Vec<HalfInt>,
    pub alpha: Vec<HalfInt>,
    pub beta: Vec<HalfInt>,
}

impl PartialMode {
    pub fn new(xi: Vec<i64>, l: Vec<HalfInt>, alpha: Vec<HalfInt>, beta: Vec<HalfInt>) -> Result<Self> {
        let m = PartialMode { xi, l, alpha, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn trivial(r: usize, s: usize) -> Self {
        PartialMode { xi: vec![0; r], l: vec![HalfInt::ZERO; s], alpha: vec![HalfInt::ZERO; s], beta: vec![HalfInt::ZERO; s] }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.l.len();
        if self.alpha.len() != s || self.beta.len() != s {
            return Err(GshError::InvalidIndex("alpha/beta length differs from l".into()));
        }
        for k in 0..s {
            WignerIndex { l: self.l[k], m: self.alpha[k], n: self.beta[k] }.validate()?;
        }
        Ok(())
    }

    pub fn r(&self) -> usize {
        self.xi.len()
    }
    pub fn s(&self) -> usize {
        self.l.len()
    }

    /// |xi| + |l| (l1 norms).
    pub fn norm(&self) -> f64 {
        self.xi.iter().map(|x| x.abs() as f64).sum::<f64>() + self.l.iter().map(|l| l.to_f64()).sum::<f64>()
    }

    /// d_l = prod (2 l_k + 1)
    pub fn dim(&self) -> f64 {
        self.l.iter().map(|l| (l.twice + 1) as f64).product()
    }

    /// (-xi, l, -alpha, -beta)
    pub fn reflect(&self) -> Self {
        PartialMode {
            xi: self.xi.iter().map(|x| -x).collect(),
            l: self.l.clone(),
            alpha: self.alpha.iter().map(|a| -*a).collect(),
            beta: self.beta.iter().map(|b| -*b).collect(),
        }
    }

    /// (-1)^{sum (alpha_k - beta_k)}
    pub fn reflection_sign(&self) -> f64 {
        let d: i64 = self.alpha.iter().zip(&self.beta).map(|(a, b)| (a.twice - b.twice) / 2).sum();
        if d.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TotalMode {
    pub tau: i64,
    pub mode: PartialMode,
}

impl TotalMode {
    pub fn norm(&self) -> f64 {
        self.tau.abs() as f64 + self.mode.norm()
    }
}

/// All partial modes with |xi| + |l| <= bound.
pub fn enumerate_modes(r: usize, s: usize, bound: usize) -> Vec<PartialMode> {
    let budget2 = 2 * bound as i64;
    let mut out = Vec::new();
    let mut xis: Vec<(Vec<i64>, i64)> = vec![(vec![], 0)];
    for _ in 0..r {
        let mut next = Vec::new();
        for (xi, used) in &xis {
            let rem = (budget2 - used) / 2;
            for x in -rem..=rem {
                let mut v = xi.clone();
                v.push(x);
                next.push((v, used + 2 * x.abs()));
            }
        }
        xis = next;
    }
    for (xi, used) in xis {
        let mut sph: Vec<(Vec<HalfInt>, Vec<HalfInt>, Vec<HalfInt>, i64)> = vec![(vec![], vec![], vec![], used)];
        for _ in 0..s {
            let mut next = Vec::new();
            for (l, a, b, used) in &sph {
                for l2 in 0..=(budget2 - used) {
                    for a2 in (-l2..=l2).step_by(2) {
                        for b2 in (-l2..=l2).step_by(2) {
                            let mut l = l.clone();
                            let mut a = a.clone();
                            let mut b = b.clone();
                            l.push(HalfInt::new(l2));
                            a.push(HalfInt::new(a2));
                            b.push(HalfInt::new(b2));
                            next.push((l, a, b, used + l2));
                        }
                    }
                }
            }
            sph = next;
        }
        for (l, alpha, beta, _) in sph {
            out.push(PartialMode { xi: xi.clone(), l, alpha, beta });
        }
    }
    out.sort();
    out
}

/// Mode table whose values are functions of t sampled on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    pub r: usize,
    pub s: usize,
    pub n_t: usize,
    pub bound: usize,
    pub table: BTreeMap<PartialMode, Vec<Complex64>>,
}

impl SpectralField {
    pub fn new(r: usize, s: usize, n_t: usize, bound: usize) -> Self {
        SpectralField { r, s, n_t, bound, table: BTreeMap::new() }
    }

    pub fn insert(&mut self, mode: PartialMode, samples: Vec<Complex64>) -> Result<()> {
        if mode.r() != self.r || mode.s() != self.s {
            return Err(GshError::DimensionMismatch(format!("mode has r={}, s={}", mode.r(), mode.s())));
        }
        if samples.len() != self.n_t {
            return Err(GshError::DimensionMismatch(format!("{} samples, expected {}", samples.len(), self.n_t)));
        }
        mode.validate()?;
        self.table.insert(mode, samples);
        Ok(())
    }

    pub fn get(&self, mode: &PartialMode) -> Option<&Vec<Complex64>> {
        self.table.get(mode)
    }

    pub fn zero_samples(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.n_t]
    }

    pub fn sup_norm(&self) -> f64 {
        self.table.values().fold(0.0, |a, v| a.max(tgrid::sup_norm(v)))
    }

    /// max over modes of sup_t |f - g|, treating missing modes as zero.
    pub fn max_diff(&self, o: &SpectralField) -> f64 {
        let mut keys: Vec<&PartialMode> = self.table.keys().collect();
        keys.extend(o.table.keys());
        let z = self.zero_samples();
        let mut m: f64 = 0.0;
        for k in keys {
            let a = self.table.get(k).unwrap_or(&z);
            let b = o.table.get(k).map(|v| tgrid::resample(v, self.n_t)).unwrap_or_else(|| z.clone());
            for (x, y) in a.iter().zip(&b) {
                m = m.max((x - y).norm());
            }
        }
        m
    }

    pub fn resampled(&self, n_t: usize) -> SpectralField {
        SpectralField {
            r: self.r,
            s: self.s,
            n_t,
            bound: self.bound,
            table: self.table.iter().map(|(k, v)| (k.clone(), tgrid::resample(v, n_t))).collect(),
        }
    }

    pub fn linear_combination(&self, a: Complex64, o: &SpectralField, b: Complex64) -> Result<SpectralField> {
        if self.r != o.r || self.s != o.s || self.n_t != o.n_t {
            return Err(GshError::DimensionMismatch("fields differ in shape".into()));
        }
        let mut out = SpectralField::new(self.r, self.s, self.n_t, self.bound.max(o.bound));
        let z = self.zero_samples();
        let keys: std::collections::BTreeSet<&PartialMode> = self.table.keys().chain(o.table.keys()).collect();
        for k in keys {
            let x = self.table.get(k).unwrap_or(&z);
            let y = o.table.get(k).unwrap_or(&z);
            out.table.insert(k.clone(), x.iter().zip(y).map(|(p, q)| a * p + b * q).collect());
        }
        Ok(out)
    }

    /// Total coefficients: t-axis Fourier transform of every mode.
    pub fn to_total(&self, bound: usize) -> TotalTable {
        let mut t = TotalTable { r: self.r, s: self.s, bound, table: BTreeMap::new() };
        for (m, v) in &self.table {
            let c = tgrid::coefficients(v);
            let budget = bound as f64 - m.norm();
            if budget < 0.0 {
                continue;
            }
            let kmax = (budget.floor() as i64).min((self.n_t as i64 - 1) / 2);
            for tau in -kmax..=kmax {
                t.table.insert(TotalMode { tau, mode: m.clone() }, c[tgrid::freq_bin(tau, self.n_t)]);
            }
        }
        t
    }

    /// (2pi)^r sum d_l integral |f|^2 dt
    pub fn l2_norm_sq(&self) -> f64 {
        let vol = (2.0 * PI).powi(self.r as i32);
        self.table
            .iter()
            .map(|(m, v)| m.dim() * 2.0 * PI * v.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.n_t as f64)
            .sum::<f64>()
            * vol
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TotalTable {
    pub r: usize,
    pub s: usize,
    pub bound: usize,
    pub table: BTreeMap<TotalMode, Complex64>,
}

impl TotalTable {
    /// (2pi)^{r+1} sum d_l |f|^2
    pub fn l2_norm_sq(&self) -> f64 {
        (2.0 * PI).powi(self.r as i32 + 1) * self.table.iter().map(|(m, c)| m.mode.dim() * c.norm_sqr()).sum::<f64>()
    }

    pub fn to_partial(&self, n_t: usize) -> SpectralField {
        let mut f = SpectralField::new(self.r, self.s, n_t, self.bound);
        let ts = tgrid::grid_points(n_t);
        for (m, c) in &self.table {
            let e = f.table.entry(m.mode.clone()).or_insert_with(|| vec![Complex64::new(0.0, 0.0); n_t]);
            for (i, t) in ts.iter().enumerate() {
                e[i] += c * Complex64::from_polar(1.0, m.tau as f64 * t);
            }
        }
        f
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereGrid {
    pub n_phi: usize,
    pub n_theta: usize,
    pub n_psi: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r: usize,
    pub s: usize,
    pub n_t: usize,
    pub n_x: Vec<usize>,
    pub sphere: Vec<SphereGrid>,
}

impl GridSpec {
    /// Smallest grids on which products of two band-`bound` functions integrate exactly.
    pub fn for_bound(r: usize, s: usize, n_t: usize, bound: usize) -> Self {
        let b = bound;
        GridSpec {
            r,
            s,
            n_t,
            n_x: vec![2 * b + 1; r],
            sphere: vec![SphereGrid { n_phi: 2 * b + 1, n_theta: b + 1, n_psi: 4 * b + 1 }; s],
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        let mut v = vec![self.n_t];
        v.extend(&self.n_x);
        for g in &self.sphere {
            v.extend([g.n_phi, g.n_theta, g.n_psi]);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check(&self) -> Result<()> {
        if self.n_x.len() != self.r || self.sphere.len() != self.s {
            return Err(GshError::DimensionMismatch("grid axes do not match (r, s)".into()));
        }
        Ok(())
    }

    pub fn check_resolves(&self, bound: usize, with_t: bool) -> Result<()> {
        self.check()?;
        let b = bound;
        let mut bad = Vec::new();
        if with_t && self.n_t < 2 * b + 1 {
            bad.push(format!("n_t={} < {}", self.n_t, 2 * b + 1));
        }
        for (j, &n) in self.n_x.iter().enumerate() {
            if n < 2 * b + 1 {
                bad.push(format!("n_x[{j}]={n} < {}", 2 * b + 1));
            }
        }
        for (k, g) in self.sphere.iter().enumerate() {
            if g.n_phi < 2 * b + 1 || g.n_psi < 4 * b + 1 || g.n_theta < b + 1 {
                bad.push(format!("sphere[{k}]=({},{},{}) needs ({},{},{})", g.n_phi, g.n_theta, g.n_psi, 2 * b + 1, b + 1, 4 * b + 1));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(GshError::UnderResolved(bad.join("; ")))
        }
    }
}

/// Gauss-Legendre nodes (ascending) and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            let mut pn = p1;
            let mut pm = p0;
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * z * pn - (k - 1) as f64 * pm) / k as f64;
                pm = pn;
                pn = pk;
            }
            if n == 1 {
                pn = z;
                pm = 1.0;
            }
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub data: Vec<Complex64>,
}

/// Node coordinates and quadrature weights for each axis.
struct Axes {
    t: Vec<f64>,
    x: Vec<Vec<f64>>,
    phi: Vec<Vec<f64>>,
    cos_theta: Vec<Vec<f64>>,
    theta_w: Vec<Vec<f64>>,
    psi: Vec<Vec<f64>>,
}

impl Axes {
    fn new(spec: &GridSpec) -> Self {
        let mut a = Axes { t: tgrid::grid_points(spec.n_t), x: vec![], phi: vec![], cos_theta: vec![], theta_w: vec![], psi: vec![] };
        for &n in &spec.n_x {
            a.x.push(tgrid::grid_points(n));
        }
        for g in &spec.sphere {
            a.phi.push(tgrid::grid_points(g.n_phi));
            let (x, w) = gauss_legendre(g.n_theta);
            a.cos_theta.push(x);
            a.theta_w.push(w);
            a.psi.push((0..g.n_psi).map(|c| -2.0 * PI + 4.0 * PI * c as f64 / g.n_psi as f64).collect());
        }
        a
    }
}

impl GridFunction {
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, &[f64], &[crate::harmonics::EulerAngles]) -> Complex64) -> Result<Self> {
        spec.check()?;
        let ax = Axes::new(&spec);
        let shape = spec.shape();
        let total: usize = shape.iter().product();
        let mut data = Vec::with_capacity(total);
        let mut idx = vec![0usize; shape.len()];
        let mut xs = vec![0.0; spec.r];
        let mut ys = vec![crate::harmonics::EulerAngles::identity(); spec.s];
        for _ in 0..total {
            let t = ax.t[idx[0]];
            for j in 0..spec.r {
                xs[j] = ax.x[j][idx[1 + j]];
            }
            for k in 0..spec.s {
                let o = 1 + spec.r + 3 * k;
                ys[k] = crate::harmonics::EulerAngles::new(ax.phi[k][idx[o]], ax.cos_theta[k][idx[o + 1]].acos(), ax.psi[k][idx[o + 2]]);
            }
            data.push(f(t, &xs, &ys));
            for a in (0..shape.len()).rev() {
                idx[a] += 1;
                if idx[a] < shape[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(GridFunction { spec, data })
    }

    /// Quadrature weight of every node; the weights sum to (2pi)^{r+1}.
    pub fn weights(&self) -> Vec<f64> {
        let spec = &self.spec;
        let ax = Axes::new(spec);
        let mut w = vec![2.0 * PI / spec.n_t as f64; spec.n_t];
        for &n in &spec.n_x {
            w = outer(&w, &vec![2.0 * PI / n as f64; n]);
        }
        for (k, g) in spec.sphere.iter().enumerate() {
            w = outer(&w, &vec![1.0 / g.n_phi as f64; g.n_phi]);
            let tw: Vec<f64> = ax.theta_w[k].iter().map(|x| x / 2.0).collect();
            w = outer(&w, &tw);
            w = outer(&w, &vec![1.0 / g.n_psi as f64; g.n_psi]);
        }
        w
    }

    pub fn integral(&self) -> Complex64 {
        self.weights().iter().zip(&self.data).map(|(w, v)| v * w).sum()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.weights().iter().zip(&self.data).map(|(w, v)| w * v.norm_sqr()).sum()
    }

    pub fn max_diff(&self, o: &GridFunction) -> f64 {
        self.data.iter().zip(&o.data).fold(0.0, |a, (x, y)| a.max((x - y).norm()))
    }
}

fn outer(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            v.push(x * y);
        }
    }
    v
}

#[derive(Clone, Debug)]
struct Tensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl Tensor {
    fn split(&self, axis: usize) -> (usize, usize, usize) {
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        (outer, self.shape[axis], inner)
    }

    /// new[.., j, ..] = sum_i mat[j][i] old[.., i, ..]
    fn contract(&self, axis: usize, mat: &[Vec<Complex64>]) -> Tensor {
        let (outer, n_in, inner) = self.split(axis);
        let n_out = mat.len();
        let mut data = vec![Complex64::new(0.0, 0.0); outer * n_out * inner];
        for o in 0..outer {
            for (j, row) in mat.iter().enumerate() {
                let dst = &mut data[(o * n_out + j) * inner..(o * n_out + j + 1) * inner];
                for (i, m) in row.iter().enumerate().take(n_in) {
                    if m.re == 0.0 && m.im == 0.0 {
                        continue;
                    }
                    let src = &self.data[(o * n_in + i) * inner..(o * n_in + i + 1) * inner];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += m * s;
                    }
                }
            }
        }
        let mut shape = self.shape.clone();
        shape[axis] = n_out;
        Tensor { shape, data }
    }

    /// Contract the middle axis of three consecutive axes (p, mid, q) with a matrix
    /// depending on the (p, q) position.
    fn contract_block(&self, p_axis: usize, mats: &dyn Fn(usize, usize) -> Option<std::sync::Arc<Vec<Vec<Complex64>>>>, n_out: usize) -> Tensor {
        let outer: usize = self.shape[..p_axis].iter().product();
        let (np, nm, nq) = (self.shape[p_axis], self.shape[p_axis + 1], self.shape[p_axis + 2]);
        let inner: usize = self.shape[p_axis + 3..].iter().product();
        let mut data = vec![Complex64::new(0.0, 0.0); outer * np * n_out * nq * inner];
        for o in 0..outer {
            for p in 0..np {
                for q in 0..nq {
                    let Some(mat) = mats(p, q) else { continue };
                    for (j, row) in mat.iter().enumerate() {
                        for (i, m) in row.iter().enumerate().take(nm) {
                            if m.re == 0.0 && m.im == 0.0 {
                                continue;
                            }
                            let src = (((o * np + p) * nm + i) * nq + q) * inner;
                            let dst = (((o * np + p) * n_out + j) * nq + q) * inner;
                            for k in 0..inner {
                                data[dst + k] += m * self.data[src + k];
                            }
                        }
                    }
                }
            }
        }
        let mut shape = self.shape.clone();
        shape[p_axis + 1] = n_out;
        Tensor { shape, data }
    }
}

type MatCache = HashMap<(i64, i64), std::sync::Arc<Vec<Vec<Complex64>>>>;

/// P^l_{mn} at the theta nodes for all l <= bound with the given (m, n), one row per 2l.
fn legendre_rows(bound: usize, m2: i64, n2: i64, nodes: &[f64]) -> Vec<Option<Vec<Complex64>>> {
    (0..=2 * bound as i64)
        .map(|l2| {
            let idx = WignerIndex { l: HalfInt::new(l2), m: HalfInt::new(m2), n: HalfInt::new(n2) };
            if idx.validate().is_err() {
                return None;
            }
            let e = LegendreExpansion::new(&idx).ok()?;
            Some(nodes.iter().map(|&x| e.eval(x)).collect())
        })
        .collect()
}

fn half_range(bound: usize) -> Vec<i64> {
    let b2 = 2 * bound as i64;
    (-b2..=b2).collect()
}

/// Partial coefficients of `f` for all modes with |xi| + |l| <= bound.
pub fn analyze_partial(f: &GridFunction, bound: usize) -> Result<SpectralField> {
    let spec = &f.spec;
    spec.check_resolves(bound, false)?;
    let ax = Axes::new(spec);
    let b = bound as i64;
    let mut tensor = Tensor { shape: spec.shape(), data: f.data.clone() };
    for j in 0..spec.r {
        let n = spec.n_x[j];
        let mat: Vec<Vec<Complex64>> =
            (-b..=b).map(|xi| ax.x[j].iter().map(|&x| Complex64::from_polar(1.0 / n as f64, -(xi as f64) * x)).collect()).collect();
        tensor = tensor.contract(1 + j, &mat);
    }
    let halves = half_range(bound);
    for k in 0..spec.s {
        let g = spec.sphere[k];
        let o = 1 + spec.r + 3 * k;
        let mphi: Vec<Vec<Complex64>> = halves
            .iter()
            .map(|&b2| ax.phi[k].iter().map(|&p| Complex64::from_polar(1.0 / g.n_phi as f64, b2 as f64 / 2.0 * p)).collect())
            .collect();
        let mpsi: Vec<Vec<Complex64>> = halves
            .iter()
            .map(|&a2| ax.psi[k].iter().map(|&p| Complex64::from_polar(1.0 / g.n_psi as f64, a2 as f64 / 2.0 * p)).collect())
            .collect();
        tensor = tensor.contract(o, &mphi);
        tensor = tensor.contract(o + 2, &mpsi);
        let mut cache: MatCache = HashMap::new();
        for &b2 in &halves {
            for &a2 in &halves {
                // conj(t^l_{beta alpha}): P with m = beta, n = alpha
                let rows = legendre_rows(bound, b2, a2, &ax.cos_theta[k]);
                let mat: Vec<Vec<Complex64>> = rows
                    .into_iter()
                    .map(|row| match row {
                        None => vec![Complex64::new(0.0, 0.0); g.n_theta],
                        Some(v) => v.iter().zip(&ax.theta_w[k]).map(|(p, w)| p.conj() * (w / 2.0)).collect(),
                    })
                    .collect();
                cache.insert((b2, a2), std::sync::Arc::new(mat));
            }
        }
        let lookup = |p: usize, q: usize| cache.get(&(halves[p], halves[q])).cloned();
        tensor = tensor.contract_block(o, &lookup, 2 * bound + 1);
    }
    let mut out = SpectralField::new(spec.r, spec.s, spec.n_t, bound);
    let nh = halves.len();
    for mode in enumerate_modes(spec.r, spec.s, bound) {
        let mut off = 0usize;
        let mut stride = 1usize;
        let mut pos = Vec::new();
        for k in (0..spec.s).rev() {
            pos.push(((mode.alpha[k].twice + 2 * b) as usize, nh));
            pos.push((mode.l[k].twice as usize, 2 * bound + 1));
            pos.push(((mode.beta[k].twice + 2 * b) as usize, nh));
        }
        for j in (0..spec.r).rev() {
            pos.push(((mode.xi[j] + b) as usize, 2 * bound + 1));
        }
        for (p, n) in pos {
            off += p * stride;
            stride *= n;
        }
        let samples: Vec<Complex64> = (0..spec.n_t).map(|i| tensor.data[i * stride + off]).collect();
        out.table.insert(mode, samples);
    }
    Ok(out)
}

/// Evaluate the Peter-Weyl series of a partial table on the grid `spec`.
pub fn synthesize(field: &SpectralField, spec: &GridSpec) -> Result<GridFunction> {
    spec.check()?;
    if spec.r != field.r || spec.s != field.s {
        return Err(GshError::DimensionMismatch("grid and field differ in (r, s)".into()));
    }
    let field = if field.n_t != spec.n_t { field.resampled(spec.n_t) } else { field.clone() };
    let bound = field.table.keys().map(|m| m.norm().ceil() as usize).max().unwrap_or(0).max(field.bound.min(64));
    let b = bound as i64;
    let halves = half_range(bound);
    let nh = halves.len();
    // coefficient tensor (t, xi..., (beta, l, alpha)...)
    let mut shape = vec![spec.n_t];
    shape.extend(std::iter::repeat_n(2 * bound + 1, spec.r));
    for _ in 0..spec.s {
        shape.extend([nh, 2 * bound + 1, nh]);
    }
    let total: usize = shape.iter().product();
    let mut data = vec![Complex64::new(0.0, 0.0); total];
    let stride_t: usize = shape[1..].iter().product();
    for (mode, samples) in &field.table {
        if mode.norm() > bound as f64 {
            continue;
        }
        let mut off = 0usize;
        let mut stride = 1usize;
        let mut pos = Vec::new();
        for k in (0..spec.s).rev() {
            pos.push(((mode.alpha[k].twice + 2 * b) as usize, nh));
            pos.push((mode.l[k].twice as usize, 2 * bound + 1));
            pos.push(((mode.beta[k].twice + 2 * b) as usize, nh));
        }
        for j in (0..spec.r).rev() {
            pos.push(((mode.xi[j] + b) as usize, 2 * bound + 1));
        }
        for (p, n) in pos {
            off += p * stride;
            stride *= n;
        }
        for (i, v) in samples.iter().enumerate() {
            data[i * stride_t + off] += v;
        }
    }
    let mut tensor = Tensor { shape, data };
    let ax = Axes::new(spec);
    for k in 0..spec.s {
        let g = spec.sphere[k];
        let o = 1 + spec.r + 3 * k;
        let mut cache: MatCache = HashMap::new();
        for &b2 in &halves {
            for &a2 in &halves {
                let rows = legendre_rows(bound, b2, a2, &ax.cos_theta[k]);
                // mat[node][l] = (2l+1) P^l_{beta alpha}(x_node)
                let mut mat = vec![vec![Complex64::new(0.0, 0.0); 2 * bound + 1]; g.n_theta];
                for (l2, row) in rows.iter().enumerate() {
                    if let Some(v) = row {
                        for (node, p) in v.iter().enumerate() {
                            mat[node][l2] = p * (l2 as f64 + 1.0);
                        }
                    }
                }
                cache.insert((b2, a2), std::sync::Arc::new(mat));
            }
        }
        let lookup = |p: usize, q: usize| cache.get(&(halves[p], halves[q])).cloned();
        tensor = tensor.contract_block(o, &lookup, g.n_theta);
        let mphi: Vec<Vec<Complex64>> =
            ax.phi[k].iter().map(|&p| halves.iter().map(|&b2| Complex64::from_polar(1.0, -(b2 as f64) / 2.0 * p)).collect()).collect();
        let mpsi: Vec<Vec<Complex64>> =
            ax.psi[k].iter().map(|&p| halves.iter().map(|&a2| Complex64::from_polar(1.0, -(a2 as f64) / 2.0 * p)).collect()).collect();
        tensor = tensor.contract(o, &mphi);
        tensor = tensor.contract(o + 2, &mpsi);
    }
    for j in 0..spec.r {
        let mat: Vec<Vec<Complex64>> = ax.x[j].iter().map(|&x| (-b..=b).map(|xi| Complex64::from_polar(1.0, xi as f64 * x)).collect()).collect();
        tensor = tensor.contract(1 + j, &mat);
    }
    Ok(GridFunction { spec: spec.clone(), data: tensor.data })
}

/// Total coefficients with |tau| + |xi| + |l| <= bound.
pub fn analyze_total(f: &GridFunction, bound: usize) -> Result<TotalTable> {
    f.spec.check_resolves(bound, true)?;
    Ok(analyze_partial(f, bound)?.to_total(bound))
}

pub fn synthesize_total(t: &TotalTable, spec: &GridSpec) -> Result<GridFunction> {
    synthesize(&t.to_partial(spec.n_t), spec)
}

/// Integral over G of f*g from the mode-wise formula.
pub fn pairing(f: &SpectralField, g: &SpectralField) -> Result<Complex64> {
    if f.r != g.r || f.s != g.s {
        return Err(GshError::DimensionMismatch(format!("(r,s) = ({},{}) vs ({},{})", f.r, f.s, g.r, g.s)));
    }
    let n = f.n_t.max(g.n_t);
    let vol = (2.0 * PI).powi(f.r as i32);
    let mut s = Complex64::new(0.0, 0.0);
    for (m, fv) in &f.table {
        let Some(gv) = g.table.get(&m.reflect()) else { continue };
        let a = if fv.len() == n { fv.clone() } else { tgrid::resample(fv, n) };
        let b = if gv.len() == n { gv.clone() } else { tgrid::resample(gv, n) };
        let prod: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        s += tgrid::integrate(&prod) * m.dim() * m.reflection_sign();
    }
    Ok(s * vol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DecayClass {
    RapidDecay,
    PolynomialGrowth { n_est: f64 },
    Suprapolynomial,
}

pub const DEFAULT_SHELLS: usize = 6;

/// Dyadic-shell regression of log|coef| against log(norm).
pub fn decay_classify(entries: &[(f64, f64)], norm_floor: f64, max_shells: usize) -> Result<DecayClass> {
    let logs: Vec<(f64, f64)> = entries.iter().filter(|e| e.0 > 0.0).map(|&(n, m)| (n.ln(), if m > 0.0 { m.ln() } else { f64::NEG_INFINITY })).collect();
    decay_classify_log(&logs, norm_floor.max(1e-300).ln(), max_shells)
}

/// Same classification on (ln norm, ln |coef|) pairs, for magnitudes outside the float range.
pub fn decay_classify_log(entries: &[(f64, f64)], ln_floor: f64, max_shells: usize) -> Result<DecayClass> {
    let mut shells: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for &(ln_norm, ln_mag) in entries {
        if ln_norm < 0.0 {
            continue;
        }
        let sh = (ln_norm / std::f64::consts::LN_2).floor() as i64;
        let y = ln_mag.max(ln_floor);
        let e = shells.entry(sh).or_insert((ln_norm, f64::NEG_INFINITY));
        if y > e.1 || (y == e.1 && ln_norm > e.0) {
            *e = (ln_norm, y);
        }
    }
    if shells.len() < 3 {
        return Err(GshError::InsufficientShells { found: shells.len(), need: 3 });
    }
    let mut pts: Vec<(f64, f64)> = shells.values().copied().collect();
    let keep = max_shells.max(3);
    if pts.len() > keep {
        pts = pts.split_off(pts.len() - keep);
    }
    let lf = ln_floor;
    let at_floor = |y: f64| y <= lf + 1e-9;
    if let Some(first_floor) = pts.iter().position(|p| at_floor(p.1)) {
        if first_floor > 0 && pts[first_floor..].iter().all(|p| at_floor(p.1)) {
            return Ok(DecayClass::RapidDecay);
        }
    }
    let slopes: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0).max(1e-12)).collect();
    let first = slopes[0];
    let last = *slopes.last().unwrap();
    let diffs: Vec<f64> = slopes.windows(2).map(|w| w[1] - w[0]).collect();
    if diffs.iter().all(|&d| d < 0.1) && last - first <= -1.0 && last < 0.0 {
        return Ok(DecayClass::RapidDecay);
    }
    if diffs.iter().all(|&d| d > -0.1) && last - first >= 1.0 && last > 0.0 {
        return Ok(DecayClass::Suprapolynomial);
    }
    Ok(DecayClass::PolynomialGrowth { n_est: last })
}

/// Norm-magnitude pairs of a partial table (sup over t).
pub fn field_entries(f: &SpectralField) -> Vec<(f64, f64)> {
    f.table.iter().map(|(m, v)| (m.norm(), tgrid::sup_norm(v))).collect()
}

pub fn total_entries(t: &TotalTable) -> Vec<(f64, f64)> {
    t.table.iter().map(|(m, c)| (m.norm(), c.norm())).collect()
}

/// <xi (x) l> = sqrt(1 + |xi|^2 + sum l(l+1))-type weight used in the norm-equivalence check.
pub fn bracket_norm(mode: &PartialMode) -> f64 {
    let a: f64 = mode.xi.iter().map(|x| (1.0 + (*x as f64).powi(2)).sqrt()).sum();
    let b: f64 = mode.l.iter().map(|l| (1.0 + l.to_f64() * (l.to_f64() + 1.0)).sqrt()).sum();
    a + b
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeEntryJson {
    pub mode: PartialMode,
    pub coeffs: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralFieldJson {
    pub r: usize,
    pub s: usize,
    pub n_t: usize,
    pub bound: usize,
    pub modes: Vec<ModeEntryJson>,
}

impl From<&SpectralField> for SpectralFieldJson {
    fn from(f: &SpectralField) -> Self {
        SpectralFieldJson {
            r: f.r,
            s: f.s,
            n_t: f.n_t,
            bound: f.bound,
            modes: f
                .table
                .iter()
                .map(|(m, v)| ModeEntryJson { mode: m.clone(), coeffs: v.iter().map(|c| [c.re, c.im]).collect() })
                .collect(),
        }
    }
}

impl TryFrom<SpectralFieldJson> for SpectralField {
    type Error = GshError;
    fn try_from(j: SpectralFieldJson) -> Result<Self> {
        let mut f = SpectralField::new(j.r, j.s, j.n_t, j.bound);
        for e in j.modes {
            f.insert(e.mode, e.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect())?;
        }
        Ok(f)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridFunctionJson {
    pub header: GridSpec,
    pub data: Vec<[f64; 2]>,
}

impl GridFunction {
    pub fn to_json(&self) -> GridFunctionJson {
        GridFunctionJson { header: self.spec.clone(), data: self.data.iter().map(|c| [c.re, c.im]).collect() }
    }

    pub fn from_json(j: GridFunctionJson) -> Result<Self> {
        j.header.check()?;
        if j.data.len() != j.header.len() {
            return Err(GshError::DimensionMismatch(format!("{} values for grid of size {}", j.data.len(), j.header.len())));
        }
        Ok(GridFunction { spec: j.header, data: j.data.iter().map(|c| Complex64::new(c[0], c[1])).collect() })
    }

    const MAGIC: &'static [u8; 4] = b"GSHT";

    /// Binary layout: magic, u32 header length, JSON header, then (re, im) f64 pairs, little endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.spec).expect("grid spec serializes");
        let mut out = Vec::with_capacity(8 + header.len() + 16 * self.data.len());
        out.extend_from_slice(Self::MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for c in &self.data {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        if b.len() < 8 || &b[..4] != Self::MAGIC {
            return Err(GshError::Parse("not a binary grid tensor".into()));
        }
        let hl = u32::from_le_bytes([b[4], b[5], b[6], b[7]]) as usize;
        if b.len() < 8 + hl {
            return Err(GshError::Parse("truncated header".into()));
        }
        let spec: GridSpec = serde_json::from_slice(&b[8..8 + hl])?;
        spec.check()?;
        let body = &b[8 + hl..];
        if body.len() != 16 * spec.len() {
            return Err(GshError::Parse(format!("expected {} bytes of data, found {}", 16 * spec.len(), body.len())));
        }
        let data = body
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Ok(GridFunction { spec, data })
    }
}
