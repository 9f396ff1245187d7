//! Lattice random walks: step laws, return probabilities, first-return and
//! first-hitting laws.

use std::io::Write;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quad;
use crate::rng::Rng;
use crate::special::dot;

/// Finite-support step distribution on ℤ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepLaw {
    pub name: String,
    /// (offset, probability), sorted by offset, offsets distinct.
    pub support: Vec<(i64, f64)>,
}

impl Default for StepLaw {
    fn default() -> Self {
        Self::default_law()
    }
}

impl StepLaw {
    pub fn new(name: impl Into<String>, support: Vec<(i64, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidInput("step law has empty support".into()));
        }
        let mut s = support;
        s.sort_by_key(|&(k, _)| k);
        let mut merged: Vec<(i64, f64)> = Vec::with_capacity(s.len());
        for (k, p) in s {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidInput(format!("probability {p} at offset {k}")));
            }
            match merged.last_mut() {
                Some(last) if last.0 == k => last.1 += p,
                _ => merged.push((k, p)),
            }
        }
        merged.retain(|&(_, p)| p > 0.0);
        if merged.is_empty() {
            return Err(Error::InvalidInput("step law has no positive mass".into()));
        }
        Ok(Self { name: name.into(), support: merged })
    }

    /// {0: 3/8, ±1: 1/4, ±2: 1/16}, the law of Bin(4, 1/2) − 2.
    pub fn default_law() -> Self {
        Self {
            name: "binomial4".into(),
            support: vec![(-2, 0.0625), (-1, 0.25), (0, 0.375), (1, 0.25), (2, 0.0625)],
        }
    }

    pub fn min_step(&self) -> i64 {
        self.support[0].0
    }

    pub fn max_step(&self) -> i64 {
        self.support[self.support.len() - 1].0
    }

    /// Largest |offset|.
    pub fn reach(&self) -> i64 {
        self.min_step().abs().max(self.max_step().abs())
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.support.len();
        (0..n).all(|i| {
            let (a, p) = self.support[i];
            let (b, q) = self.support[n - 1 - i];
            a == -b && p == q
        })
    }

    /// Law of −X.
    pub fn reversed(&self) -> Self {
        let mut s: Vec<(i64, f64)> = self.support.iter().map(|&(k, p)| (-k, p)).collect();
        s.reverse();
        Self { name: format!("{}-reversed", self.name), support: s }
    }

    /// Dense probability vector indexed by `offset - min_step`.
    pub fn dense(&self) -> Vec<f64> {
        let lo = self.min_step();
        let mut v = vec![0.0; (self.max_step() - lo + 1) as usize];
        for &(k, p) in &self.support {
            v[(k - lo) as usize] = p;
        }
        v
    }

    pub fn prob(&self, k: i64) -> f64 {
        self.support.iter().find(|&&(j, _)| j == k).map_or(0.0, |&(_, p)| p)
    }

    /// Draws one step by inverting the cumulative distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(k, p) in &self.support {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.support[self.support.len() - 1].0
    }

    /// Characteristic function E e^{itX} as (re, im).
    pub fn char_fn(&self, t: f64) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for &(k, p) in &self.support {
            let (s, c) = (k as f64 * t).sin_cos();
            re += p * c;
            im += p * s;
        }
        (re, im)
    }

    /// Stable identifier of the law (first 8 bytes of a SHA-256 digest).
    pub fn hash(&self) -> u64 {
        let mut h = Sha256::new();
        for &(k, p) in &self.support {
            h.update(k.to_le_bytes());
            h.update(p.to_bits().to_le_bytes());
        }
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().expect("digest length"))
    }
}

/// Exact rational representation of a double with denominator ≤ 2^20, if any.
/// Larger denominators would match nearly every double and misread rounding
/// noise as an exact violation.
fn exact_rational(x: f64) -> Option<Ratio<i128>> {
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > (1i128 << 20) {
            return None;
        }
        if h2 as f64 / k2 as f64 == x {
            return Some(Ratio::new(h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = y - a;
        if frac == 0.0 {
            return None;
        }
        y = 1.0 / frac;
    }
    None
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub mass: f64,
    pub mean: f64,
    pub variance: f64,
    pub third: f64,
    pub fourth: f64,
    /// gcd of the support offsets (1 iff irreducible).
    pub span: i64,
    /// gcd of pairwise differences of the support (1 iff aperiodic).
    pub period: i64,
    /// Moments were checked in rational arithmetic.
    pub exact: bool,
    pub violations: Vec<String>,
}

impl MomentReport {
    pub fn accepted(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Moments, span and period of a step law, with every violated assumption listed.
pub fn moment_report(law: &StepLaw) -> MomentReport {
    let rats: Option<Vec<(i64, Ratio<i128>)>> =
        law.support.iter().map(|&(k, p)| exact_rational(p).map(|r| (k, r))).collect();
    let mut violations = Vec::new();
    let (mass, mean, variance, third, fourth, exact);
    if let Some(rs) = rats {
        let m = |e: u32| -> Ratio<i128> { rs.iter().map(|(k, r)| r * Ratio::from_integer((*k as i128).pow(e))).sum() };
        let (m0, m1, m2, m3, m4) = (m(0), m(1), m(2), m(3), m(4));
        let f = |r: &Ratio<i128>| *r.numer() as f64 / *r.denom() as f64;
        (mass, mean, variance, third, fourth) = (f(&m0), f(&m1), f(&m2), f(&m3), f(&m4));
        exact = true;
        if m0 != Ratio::from_integer(1) {
            violations.push(format!("probabilities sum to 1 (got {mass})"));
        }
        if m1 != Ratio::from_integer(0) {
            violations.push(format!("mean = 0 (got {mean})"));
        }
        if m2 != Ratio::from_integer(1) {
            violations.push(format!("variance = 1 (got {variance})"));
        }
        if m3 != Ratio::from_integer(0) {
            violations.push(format!("third moment = 0 (got {third})"));
        }
    } else {
        let m = |e: i32| -> f64 { law.support.iter().map(|&(k, p)| p * (k as f64).powi(e)).sum() };
        (mass, mean, variance, third, fourth) = (m(0), m(1), m(2), m(3), m(4));
        exact = false;
        let tol = 1e-12;
        if (mass - 1.0).abs() > tol {
            violations.push(format!("probabilities sum to 1 (got {mass})"));
        }
        if mean.abs() > tol {
            violations.push(format!("mean = 0 (got {mean})"));
        }
        if (variance - 1.0).abs() > tol {
            violations.push(format!("variance = 1 (got {variance})"));
        }
        if third.abs() > tol {
            violations.push(format!("third moment = 0 (got {third})"));
        }
    }
    let span = law.support.iter().fold(0, |g, &(k, _)| gcd(g, k));
    let k0 = law.support[0].0;
    let period = law.support.iter().fold(0, |g, &(k, _)| gcd(g, k - k0));
    if span != 1 {
        violations.push(format!("irreducible (offsets share factor {span})"));
    }
    if period != 1 {
        violations.push(format!("aperiodic (period {period})"));
    }
    if !fourth.is_finite() {
        violations.push("finite fourth moment".into());
    }
    MomentReport { mass, mean, variance, third, fourth, span, period, exact, violations }
}

/// Accepts the law iff every moment and lattice assumption holds.
pub fn validate_step_law(law: &StepLaw) -> Result<MomentReport> {
    let r = moment_report(law);
    if let Some(v) = r.violations.first() {
        let name = v.split(" (").next().unwrap_or(v);
        let assumption = match name {
            "probabilities sum to 1" => "probabilities sum to 1",
            "mean = 0" => "mean = 0",
            "variance = 1" => "variance = 1",
            "third moment = 0" => "third moment = 0",
            "irreducible" => "irreducible",
            "aperiodic" => "aperiodic",
            _ => "finite fourth moment",
        };
        return Err(Error::Assumption { assumption, detail: v.clone() });
    }
    Ok(r)
}

/// Return probabilities p_n(0) = (1/2π)∫ φ(t)^n dt, n = 0..=n_max, and the
/// largest panel-doubling difference encountered.
pub fn return_probabilities(law: &StepLaw, n_max: usize) -> Result<(Vec<f64>, f64)> {
    const GRID: usize = 8192;
    const ORDER: usize = 20;
    const CUT: f64 = 1e-18;
    const TOL: f64 = 1e-13;
    let pi = std::f64::consts::PI;
    let symmetric = law.is_symmetric();
    let lip: f64 = law.support.iter().map(|&(k, p)| k.abs() as f64 * p).sum();
    let h = pi / GRID as f64;
    let mut env = vec![0.0; GRID + 1];
    let mut run: f64 = 0.0;
    for j in (0..=GRID).rev() {
        let (re, im) = law.char_fn(j as f64 * h);
        run = run.max(re.hypot(im));
        env[j] = (run + lip * h).min(1.0);
    }
    let mut p = vec![0.0; n_max + 1];
    p[0] = 1.0;
    let mut worst: f64 = 0.0;
    let mut panels = 4usize;
    for n in 1..=n_max {
        // env is nonincreasing; first grid point where env^n < CUT
        let ln_cut = CUT.ln() / n as f64;
        let j = env.partition_point(|&e| e.ln() >= ln_cut);
        let t_max = if j > GRID { pi } else { (j as f64 * h).min(pi) };
        let f = |t: f64| -> f64 {
            let (re, im) = law.char_fn(t);
            if symmetric {
                re.powi(n as i32)
            } else {
                let r = re.hypot(im);
                r.powi(n as i32) * (n as f64 * im.atan2(re)).cos()
            }
        };
        let mut cur_panels = (panels / 2).max(2);
        let mut prev = quad::composite(f, 0.0, t_max, cur_panels, ORDER);
        let val = loop {
            cur_panels *= 2;
            let cur = quad::composite(f, 0.0, t_max, cur_panels, ORDER);
            let d = (cur - prev).abs();
            if d < TOL * 0.1 {
                worst = worst.max(d);
                break cur;
            }
            if cur_panels > 1 << 16 {
                return Err(Error::Quadrature { what: format!("p_{n}(0)"), achieved: d, target: TOL });
            }
            prev = cur;
        };
        panels = cur_panels;
        p[n] = val / pi;
    }
    Ok((p, worst / pi))
}

/// Return-probability, first-return and overlap tables.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub law_hash: u64,
    pub n_max: usize,
    /// p_n(0), n = 0..=n_max.
    pub p0: Vec<f64>,
    /// K(n), n = 0..=k_max with K(0) = 0.
    pub k: Vec<f64>,
    /// u(n) = p_n(0)², n = 0..=n_max.
    pub u: Vec<f64>,
    /// R_N = Σ_{n=1}^N u(n), N = 0..=n_max.
    pub r: Vec<f64>,
    pub quad_error: f64,
}

impl KernelTable {
    pub fn build(law: &StepLaw, n_max: usize) -> Result<Self> {
        Self::build_with(law, n_max, n_max)
    }

    /// Builds p up to `n_max` and the first-return law up to `k_max ≤ n_max`.
    pub fn build_with(law: &StepLaw, n_max: usize, k_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidInput("n_max must be at least 1".into()));
        }
        validate_step_law(law)?;
        let (p0, err) = return_probabilities(law, n_max)?;
        Ok(Self::from_p0(law.hash(), p0, k_max.min(n_max), err))
    }

    pub fn from_p0(law_hash: u64, p0: Vec<f64>, k_max: usize, quad_error: f64) -> Self {
        let n_max = p0.len() - 1;
        let k = first_return_law(&p0, k_max);
        let u: Vec<f64> = p0.iter().map(|x| x * x).collect();
        let mut r = vec![0.0; n_max + 1];
        for n in 1..=n_max {
            r[n] = r[n - 1] + u[n];
        }
        Self { law_hash, n_max, p0, k, u, r, quad_error }
    }

    pub fn k_max(&self) -> usize {
        self.k.len() - 1
    }

    pub fn require(&self, n: usize) -> Result<()> {
        if n > self.n_max {
            return Err(Error::TableTooShort { what: "return probability", needed: n, have: self.n_max });
        }
        Ok(())
    }

    pub fn require_k(&self, n: usize) -> Result<()> {
        if n > self.k_max() {
            return Err(Error::TableTooShort { what: "first return", needed: n, have: self.k_max() });
        }
        Ok(())
    }

    /// Largest violation of p_n(0) = Σ_j K(j) p_{n-j}(0) over the K range.
    pub fn first_return_residual(&self) -> f64 {
        (1..=self.k_max())
            .map(|n| {
                let s: f64 = (1..=n).map(|j| self.k[j] * self.p0[n - j]).sum();
                (s - self.p0[n]).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,p0,K,u,R")?;
        for n in 0..=self.n_max {
            let k = self.k.get(n).map_or(String::new(), |x| format!("{x:e}"));
            writeln!(w, "{n},{:e},{k},{:e},{:e}", self.p0[n], self.u[n], self.r[n])?;
        }
        Ok(())
    }
}

/// K(n) = p_n(0) − Σ_{1≤j<n} K(j) p_{n−j}(0).
pub fn first_return_law(p0: &[f64], k_max: usize) -> Vec<f64> {
    let pr: Vec<f64> = p0[..=k_max].iter().rev().copied().collect();
    let mut k = vec![0.0; k_max + 1];
    for n in 1..=k_max {
        // pr[k_max - i] = p0[i]; p0[n - j] for j = 1..n-1 is pr[k_max - n + j]
        let s = dot(&k[1..n], &pr[k_max - n + 1..k_max]);
        k[n] = p0[n] - s;
    }
    k
}

/// The sequence √(2π) n^{3/2} K(n) for n = 1..=k_max.
pub fn k_asymptotic_ratios(table: &KernelTable) -> Vec<f64> {
    let c = (2.0 * std::f64::consts::PI).sqrt();
    (1..=table.k_max()).map(|n| c * (n as f64).powf(1.5) * table.k[n]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KAsymptotics {
    pub ratios: Vec<f64>,
    pub total_mass: f64,
    pub nonnegative: bool,
    pub within_band: bool,
}

/// Checks √(2π) n^{3/2} K(n) ∈ [0.9, 1.1] for n ≥ 1000.
pub fn k_asymptotics_check(table: &KernelTable) -> KAsymptotics {
    let ratios = k_asymptotic_ratios(table);
    let within_band = ratios.iter().enumerate().filter(|(i, _)| i + 1 >= 1000).all(|(_, r)| (0.9..=1.1).contains(r));
    KAsymptotics {
        total_mass: table.k.iter().sum(),
        nonnegative: table.k.iter().all(|&x| x >= 0.0),
        within_band,
        ratios,
    }
}

/// q_x(n) = P^x(first visit to 0 at time n), for x in [x_lo, x_hi], n ≤ n_max.
#[derive(Debug, Clone, PartialEq)]
pub struct HitTable {
    pub x_lo: i64,
    pub x_hi: i64,
    pub n_max: usize,
    q: Vec<f64>,
}

pub const DEFAULT_MEMORY_BUDGET: usize = 2 << 30;

impl HitTable {
    pub fn build(law: &StepLaw, x_lo: i64, x_hi: i64, n_max: usize) -> Result<Self> {
        Self::build_with_budget(law, x_lo, x_hi, n_max, DEFAULT_MEMORY_BUDGET)
    }

    /// Dynamic programming with 0 absorbing:
    /// h_1(x) = p(−x), h_n(x) = Σ_k p(k) 1{x+k≠0} h_{n−1}(x+k).
    pub fn build_with_budget(law: &StepLaw, x_lo: i64, x_hi: i64, n_max: usize, budget: usize) -> Result<Self> {
        if x_hi < x_lo {
            return Err(Error::InvalidInput("empty x range".into()));
        }
        let nx = (x_hi - x_lo + 1) as usize;
        let s = law.reach();
        let xa = x_lo.abs().max(x_hi.abs());
        let half = (s * n_max as i64).min(xa + s * n_max as i64);
        let width = (2 * half + 1) as usize;
        let needed = nx * (n_max + 1) * 8 + 2 * width * 8;
        if needed > budget {
            return Err(Error::MemoryBudget { needed, budget });
        }
        let mut q = vec![0.0; nx * (n_max + 1)];
        let idx = |x: i64| (x + half) as usize;
        let mut cur = vec![0.0; width];
        let mut next = vec![0.0; width];
        let offs: Vec<(i64, f64)> = law.support.clone();
        for n in 1..=n_max {
            // live window at level n: |x| ≤ min(s n, xa + s (n_max − n))
            let w = (s * n as i64).min(xa + s * (n_max - n) as i64).min(half);
            for x in -w..=w {
                let mut v = 0.0;
                if n == 1 {
                    v = law.prob(-x);
                } else {
                    for &(k, p) in &offs {
                        let y = x + k;
                        if y != 0 && y.abs() <= half {
                            v += p * cur[idx(y)];
                        }
                    }
                }
                next[idx(x)] = v;
            }
            std::mem::swap(&mut cur, &mut next);
            for x in x_lo..=x_hi {
                if x.abs() <= w {
                    q[(x - x_lo) as usize * (n_max + 1) + n] = cur[idx(x)];
                }
            }
        }
        Ok(Self { x_lo, x_hi, n_max, q })
    }

    pub fn q(&self, x: i64, n: usize) -> f64 {
        debug_assert!(x >= self.x_lo && x <= self.x_hi && n <= self.n_max);
        self.q[(x - self.x_lo) as usize * (self.n_max + 1) + n]
    }

    pub fn row(&self, x: i64) -> &[f64] {
        let i = (x - self.x_lo) as usize * (self.n_max + 1);
        &self.q[i..i + self.n_max + 1]
    }
}

/// A finite stretch of a function on ℤ: `values[i]` sits at `lo + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeVec {
    pub lo: i64,
    pub values: Vec<f64>,
}

impl LatticeVec {
    pub fn new(lo: i64, values: Vec<f64>) -> Self {
        Self { lo, values }
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn get(&self, x: i64) -> f64 {
        if x < self.lo || x > self.hi() {
            0.0
        } else {
            self.values[(x - self.lo) as usize]
        }
    }

    pub fn set(&mut self, x: i64, v: f64) {
        if x >= self.lo && x <= self.hi() {
            self.values[(x - self.lo) as usize] = v;
        }
    }

    pub fn pair(&self, other: &LatticeVec) -> f64 {
        let lo = self.lo.max(other.lo);
        let hi = self.hi().min(other.hi());
        if hi < lo {
            return 0.0;
        }
        let a = &self.values[(lo - self.lo) as usize..=(hi - self.lo) as usize];
        let b = &other.values[(lo - other.lo) as usize..=(hi - other.lo) as usize];
        dot(a, b)
    }

    /// Drops leading and trailing entries below `tol · max|v|`.
    pub fn trim(&mut self, tol: f64) {
        let m = self.values.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if m == 0.0 {
            return;
        }
        let cut = tol * m;
        let first = self.values.iter().position(|v| v.abs() > cut).unwrap_or(0);
        let last = self.values.iter().rposition(|v| v.abs() > cut).unwrap_or(self.values.len() - 1);
        self.values = self.values[first..=last].to_vec();
        self.lo += first as i64;
    }
}

/// out(y) = Σ_k p(k) in(y − k): one step of the law of S_n started from `v`.
pub fn forward_step(law: &StepLaw, v: &LatticeVec) -> LatticeVec {
    let (a, b) = (law.min_step(), law.max_step());
    let n = v.values.len();
    let mut out = vec![0.0; n + (b - a) as usize];
    for &(k, p) in &law.support {
        let shift = (k - a) as usize;
        for (o, x) in out[shift..shift + n].iter_mut().zip(&v.values) {
            *o += p * x;
        }
    }
    LatticeVec::new(v.lo + a, out)
}

/// out(x) = Σ_k p(k) in(x + k): one step of x ↦ E^x[f(S_1)].
pub fn backward_step(law: &StepLaw, v: &LatticeVec) -> LatticeVec {
    let (a, b) = (law.min_step(), law.max_step());
    let n = v.values.len();
    let mut out = vec![0.0; n + (b - a) as usize];
    for &(k, p) in &law.support {
        let shift = (b - k) as usize;
        for (o, x) in out[shift..shift + n].iter_mut().zip(&v.values) {
            *o += p * x;
        }
    }
    LatticeVec::new(v.lo - b, out)
}

/// p_n(0) ≈ Σ_q w_q λ_q^n from a graded θ-quadrature of the characteristic
/// function. Symmetric laws only, so that every λ_q is real with |λ_q| ≤ 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralKernel {
    pub lambda: Vec<f64>,
    pub weight: Vec<f64>,
    pub n_max: usize,
    /// Largest relative error against the table over 1..=n_max.
    pub rel_error: f64,
}

impl SpectralKernel {
    pub fn build(law: &StepLaw, table: &KernelTable, n_max: usize) -> Result<Self> {
        const ORDER: usize = 16;
        if !law.is_symmetric() {
            return Err(Error::InvalidInput("spectral kernel needs a symmetric step law".into()));
        }
        table.require(n_max)?;
        let pi = std::f64::consts::PI;
        let levels = (pi * (n_max.max(2) as f64).sqrt()).log2().ceil() as usize + 4;
        let breaks = quad::graded_breaks(0.0, pi, levels);
        let rule = quad::gauss_legendre(ORDER);
        let (mut lambda, mut weight) = (vec![], vec![]);
        for w in breaks.windows(2) {
            let (m, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
                lambda.push(law.char_fn(m + h * x).0);
                weight.push(h * wt / pi);
            }
        }
        let mut k = Self { lambda, weight, n_max, rel_error: 0.0 };
        let mut pw = vec![1.0; k.lambda.len()];
        for n in 1..=n_max {
            for (a, l) in pw.iter_mut().zip(&k.lambda) {
                *a *= l;
            }
            let v = dot(&pw, &k.weight);
            k.rel_error = k.rel_error.max((v / table.p0[n] - 1.0).abs());
        }
        Ok(k)
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn p(&self, n: usize) -> f64 {
        self.lambda.iter().zip(&self.weight).map(|(l, w)| w * l.powi(n as i32)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom_oracle(n: usize) -> f64 {
        // C(4n, 2n) / 16^n via a stable product
        let mut c = 1.0f64;
        for j in 1..=n {
            let j = j as f64;
            c *= (4.0 * j) * (4.0 * j - 1.0) * (4.0 * j - 2.0) * (4.0 * j - 3.0) / ((2.0 * j).powi(2) * (2.0 * j - 1.0).powi(2) * 16.0);
        }
        c
    }

    #[test]
    fn default_law_accepted() {
        let r = validate_step_law(&StepLaw::default_law()).unwrap();
        assert!(r.exact);
        assert_eq!(r.variance, 1.0);
        assert_eq!(r.third, 0.0);
        assert_eq!(r.period, 1);
        assert!((r.fourth - 2.5).abs() < 1e-15);
    }

    #[test]
    fn simple_walk_rejected_for_period() {
        let law = StepLaw::new("srw", vec![(-1, 0.5), (1, 0.5)]).unwrap();
        match validate_step_law(&law) {
            Err(Error::Assumption { assumption, .. }) => assert_eq!(assumption, "aperiodic"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_variance_rejected() {
        let law = StepLaw::new("lazy", vec![(-1, 0.25), (0, 0.5), (1, 0.25)]).unwrap();
        match validate_step_law(&law) {
            Err(Error::Assumption { assumption, .. }) => assert_eq!(assumption, "variance = 1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_dyadic_law_checked_in_rationals() {
        // {0: 1/3, ±1: 1/6, ±2: 1/6}: variance 2·(1/6) + 2·(4/6) = 10/6 → rejected
        let law = StepLaw::new("t", vec![(-2, 1.0 / 6.0), (-1, 1.0 / 6.0), (0, 1.0 / 3.0), (1, 1.0 / 6.0), (2, 1.0 / 6.0)]).unwrap();
        let r = moment_report(&law);
        assert!(r.exact);
        assert!(!r.accepted());
    }

    #[test]
    fn return_probabilities_match_binomial_oracle() {
        let (p, err) = return_probabilities(&StepLaw::default_law(), 3000).unwrap();
        assert_eq!(p[0], 1.0);
        assert!(err < 1e-13);
        for n in [1, 2, 3, 10, 100, 999, 3000] {
            assert!((p[n] - binom_oracle(n)).abs() < 1e-13, "n={n}: {} vs {}", p[n], binom_oracle(n));
        }
        assert!((p[1] - 0.375).abs() < 1e-15);
    }

    #[test]
    fn nonsymmetric_law_return_probabilities() {
        // mean 0, variance 1, third moment 0 but asymmetric support: {-2:a,...}
        // Oracle: direct convolution.
        let law = StepLaw::new("skew", vec![(-3, 1.0 / 48.0), (-1, 0.25), (0, 0.5), (1, 1.0 / 6.0), (2, 1.0 / 16.0)]).unwrap();
        let (p, _) = return_probabilities(&law, 40).unwrap();
        let mut v = LatticeVec::new(0, vec![1.0]);
        for n in 1..=40 {
            v = forward_step(&law, &v);
            assert!((v.get(0) - p[n]).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn first_return_identity_and_trivia() {
        let t = KernelTable::build(&StepLaw::default_law(), 2000).unwrap();
        assert_eq!(t.p0[0], 1.0);
        assert!((t.k[1] - t.p0[1]).abs() < 1e-16);
        assert!(t.first_return_residual() < 1e-12);
        assert!(t.r.windows(2).all(|w| w[1] >= w[0]));
        for n in 0..=t.n_max {
            assert_eq!(t.u[n], t.p0[n] * t.p0[n]);
        }
        let a = k_asymptotics_check(&t);
        assert!(a.nonnegative && a.within_band);
        assert!(a.total_mass < 1.0 && a.total_mass > 0.95);
    }

    #[test]
    fn hit_table_reproduces_first_return_law() {
        let law = StepLaw::default_law();
        let t = KernelTable::build(&law, 30).unwrap();
        let h = HitTable::build(&law, -5, 5, 30).unwrap();
        for n in 1..=30 {
            assert!((h.q(0, n) - t.k[n]).abs() < 1e-15, "n={n}");
        }
        // reachability
        assert_eq!(h.q(5, 1), 0.0);
        assert_eq!(h.q(5, 2), 0.0);
        assert!(h.q(5, 3) > 0.0);
        for x in -5..=5 {
            let s: f64 = h.row(x).iter().sum();
            assert!(s <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn hit_table_matches_brute_force_paths() {
        let law = StepLaw::default_law();
        let h = HitTable::build(&law, -4, 4, 7).unwrap();
        // exhaustive enumeration over all step sequences of length n
        for x in -4i64..=4 {
            for n in 1..=7usize {
                let mut total = 0.0;
                let m = law.support.len();
                let mut idx = vec![0usize; n];
                loop {
                    let mut pos = x;
                    let mut w = 1.0;
                    let mut ok = true;
                    for (t, &i) in idx.iter().enumerate() {
                        pos += law.support[i].0;
                        w *= law.support[i].1;
                        if pos == 0 && t + 1 < n {
                            ok = false;
                            break;
                        }
                    }
                    if ok && pos == 0 {
                        total += w;
                    }
                    let mut d = 0;
                    while d < n {
                        idx[d] += 1;
                        if idx[d] < m {
                            break;
                        }
                        idx[d] = 0;
                        d += 1;
                    }
                    if d == n {
                        break;
                    }
                }
                assert!((total - h.q(x, n)).abs() < 1e-15, "x={x} n={n}");
            }
        }
    }

    #[test]
    fn hit_table_budget_enforced() {
        assert!(matches!(
            HitTable::build_with_budget(&StepLaw::default_law(), -100, 100, 1000, 1000),
            Err(Error::MemoryBudget { .. })
        ));
    }

    #[test]
    fn translation_invariance_of_propagation() {
        let law = StepLaw::default_law();
        let mut a = LatticeVec::new(0, vec![1.0]);
        let mut b = LatticeVec::new(7, vec![1.0]);
        for _ in 0..9 {
            a = forward_step(&law, &a);
            b = forward_step(&law, &b);
        }
        for y in -20..20 {
            assert_eq!(a.get(y), b.get(y + 7));
        }
        // backward and forward kernels agree on p_n(x, y)
        let mut f = LatticeVec::new(3, vec![1.0]);
        for _ in 0..5 {
            f = backward_step(&law, &f);
        }
        let mut g = LatticeVec::new(-2, vec![1.0]);
        for _ in 0..5 {
            g = forward_step(&law, &g);
        }
        assert!((f.get(-2) - g.get(3)).abs() < 1e-16);
    }

    #[test]
    fn spectral_kernel_matches_table() {
        let law = StepLaw::default_law();
        let t = KernelTable::build(&law, 20000).unwrap();
        let k = SpectralKernel::build(&law, &t, 20000).unwrap();
        assert!(k.rel_error < 1e-11, "{}", k.rel_error);
        assert!(k.len() < 300);
        assert!((k.p(7) - t.p0[7]).abs() < 1e-14);
        let skew = StepLaw::new("skew", vec![(-1, 0.5), (0, 0.25), (2, 0.25)]);
        if let Ok(skew) = skew {
            assert!(SpectralKernel::build(&skew, &t, 10).is_err());
        }
    }
}
