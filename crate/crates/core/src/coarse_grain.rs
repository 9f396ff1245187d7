//! Mesoscopic time grid, no-triple index sets, block disorders Θ and the
//! coarse-grained partition functions built from them.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::continuum::{g_pair, heat_kernel, TestFn};
use crate::disorder::{solve_critical_beta, zeta_field, ChaosField, CriticalWindow, DisorderLaw};
use crate::ensemble::run_indexed;
use crate::error::{Error, Result};
use crate::partition::{discretize, exact_second_moment, polymer_measure_integral, prefix_chain, QVectors};
use crate::quad;
use crate::rng::{self, StreamKey};
use crate::special::dot;
use crate::stats::{covariance, ks_two_sample, MCEstimate};
use crate::walks::{KernelTable, LatticeVec, SpectralKernel};

fn floor_guarded(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

/// ⌈(log 1/ε)⁶⌉ capped at ⌊1/(4ε)⌋.
pub fn default_k_eps(eps: f64) -> usize {
    let l = (1.0 / eps).ln();
    let paper = l.powi(6).ceil();
    let cap = floor_guarded(0.25 / eps);
    (paper.min(cap as f64) as usize).max(1)
}

/// ⌊(log 1/ε)²⌋, at least 1.
pub fn default_r_max(eps: f64) -> usize {
    ((1.0 / eps).ln().powi(2).floor() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MesoGrid {
    pub n: usize,
    pub eps: f64,
    /// ⌊1/ε⌋
    pub m: usize,
    pub k_eps: usize,
    pub r_max: usize,
}

impl MesoGrid {
    pub fn new(n: usize, eps: f64, k_eps: Option<usize>, r_max: Option<usize>) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidInput(format!("ε must lie in (0, 1), got {eps}")));
        }
        let m = floor_guarded(1.0 / eps);
        let k_eps = k_eps.unwrap_or_else(|| default_k_eps(eps));
        let r_max = r_max.unwrap_or_else(|| default_r_max(eps));
        if k_eps == 0 || r_max == 0 {
            return Err(Error::InvalidInput("K_ε and r_max must be positive".into()));
        }
        if 2.0 * k_eps as f64 >= 1.0 / eps {
            return Err(Error::Domain(format!("empty index set: K_ε = {k_eps} ≥ 1/(2ε) = {}", 0.5 / eps)));
        }
        if eps * (n as f64) < 1.0 {
            return Err(Error::InvalidInput(format!("εN = {} < 1", eps * n as f64)));
        }
        Ok(Self { n, eps, m, k_eps, r_max })
    }

    /// εN
    pub fn scale(&self) -> f64 {
        self.eps * self.n as f64
    }

    fn edge(&self, i: usize) -> usize {
        floor_guarded(i as f64 * self.scale())
    }

    /// T(i) = ((i−1)εN, iεN] ∩ ℤ as a half-open range of times.
    pub fn interval(&self, i: usize) -> Range<usize> {
        assert!(i >= 1 && i <= self.m);
        self.edge(i - 1) + 1..self.edge(i) + 1
    }

    pub fn interval_of(&self, t: usize) -> Option<usize> {
        (1..=self.m).find(|&i| self.interval(i).contains(&t))
    }

    /// Lowest and highest admissible interval index.
    pub fn active(&self) -> (usize, usize) {
        (self.k_eps, self.m - self.k_eps)
    }

    /// All blocks with K_ε ≤ i ≤ i' ≤ ⌊1/ε⌋ − K_ε and i' − i < K_ε.
    pub fn blocks(&self) -> Vec<TimeBlock> {
        let (lo, hi) = self.active();
        let mut v = vec![];
        for i in lo..=hi {
            for j in i..=(i + self.k_eps - 1).min(hi) {
                v.push(TimeBlock { i, j });
            }
        }
        v
    }
}

/// A pair (i, i') of interval indices, i ≤ i'.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimeBlock {
    pub i: usize,
    pub j: usize,
}

impl TimeBlock {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if j < i {
            return Err(Error::InvalidInput(format!("block ({i}, {j}) has i > i'")));
        }
        Ok(Self { i, j })
    }

    pub fn width(&self) -> usize {
        self.j - self.i + 1
    }

    /// dist(self, next) = next.i − self.i'
    pub fn dist(&self, next: &TimeBlock) -> i64 {
        next.i as i64 - self.j as i64
    }
}

impl std::fmt::Display for TimeBlock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// K ≤ i₁ < … < i_k ≤ m − K with no two consecutive gaps below K.
pub fn is_no_triple(t: &[usize], m: usize, k: usize) -> bool {
    if t.is_empty() {
        return true;
    }
    if t[0] < k || t[t.len() - 1] + k > m {
        return false;
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return false;
    }
    t.windows(3).all(|w| w[1] - w[0] >= k || w[2] - w[1] >= k)
}

/// Paired form: blocks of span i' − i < K, consecutive dist ≥ K, inside [K, m − K].
pub fn is_paired(blocks: &[TimeBlock], m: usize, k: usize) -> bool {
    if blocks.is_empty() {
        return true;
    }
    if blocks[0].i < k || blocks[blocks.len() - 1].j + k > m {
        return false;
    }
    blocks.iter().all(|b| b.j >= b.i && b.j - b.i < k) && blocks.windows(2).all(|w| w[0].dist(&w[1]) >= k as i64)
}

/// Groups a no-triple tuple into blocks: indices closer than K pair up.
pub fn pair_up(t: &[usize], k: usize) -> Vec<TimeBlock> {
    let mut out = vec![];
    let mut j = 0;
    while j < t.len() {
        if j + 1 < t.len() && t[j + 1] - t[j] < k {
            out.push(TimeBlock { i: t[j], j: t[j + 1] });
            j += 2;
        } else {
            out.push(TimeBlock { i: t[j], j: t[j] });
            j += 1;
        }
    }
    out
}

pub fn expand(blocks: &[TimeBlock]) -> Vec<usize> {
    let mut v = vec![];
    for b in blocks {
        v.push(b.i);
        if b.j != b.i {
            v.push(b.j);
        }
    }
    v
}

type Step<T> = Box<dyn Fn(&[T]) -> Option<T> + Send>;
type Succ<T> = Box<dyn Fn(&[T], &T) -> Option<T> + Send>;

/// Depth-first lexicographic enumeration of sequences up to `depth` items.
pub struct Sequences<T> {
    cur: Vec<T>,
    started: bool,
    depth: usize,
    first: Step<T>,
    succ: Succ<T>,
}

impl<T: Clone> Iterator for Sequences<T> {
    type Item = Vec<T>;

    fn next(&mut self) -> Option<Vec<T>> {
        if !self.started {
            self.started = true;
            let x = (self.first)(&[])?;
            self.cur.push(x);
            return Some(self.cur.clone());
        }
        if self.cur.len() < self.depth {
            if let Some(x) = (self.first)(&self.cur) {
                self.cur.push(x);
                return Some(self.cur.clone());
            }
        }
        loop {
            let last = self.cur.pop()?;
            if let Some(x) = (self.succ)(&self.cur, &last) {
                self.cur.push(x);
                return Some(self.cur.clone());
            }
        }
    }
}

fn check_domain(eps: f64, k: usize) -> Result<usize> {
    if 2.0 * k as f64 >= 1.0 / eps || k == 0 {
        return Err(Error::Domain(format!("empty index set: K_ε = {k}, 1/(2ε) = {}", 0.5 / eps)));
    }
    Ok(floor_guarded(1.0 / eps))
}

/// Lazily yields the nonempty no-triple tuples of length ≤ r_max.
pub fn enumerate_no_triple(eps: f64, k: usize, r_max: usize) -> Result<Sequences<usize>> {
    let m = check_domain(eps, k)?;
    let hi = m - k;
    let first = move |p: &[usize]| -> Option<usize> {
        let x = match p.len() {
            0 => k,
            1 => p[0] + 1,
            l if p[l - 1] - p[l - 2] < k => p[l - 1] + k,
            l => p[l - 1] + 1,
        };
        (x <= hi).then_some(x)
    };
    Ok(Sequences { cur: vec![], started: false, depth: r_max, first: Box::new(first), succ: Box::new(move |_, &x| (x < hi).then_some(x + 1)) })
}

/// Lazily yields the paired form: up to r_max blocks.
pub fn enumerate_paired(eps: f64, k: usize, r_max: usize) -> Result<Sequences<TimeBlock>> {
    let m = check_domain(eps, k)?;
    let hi = m - k;
    let first = move |p: &[TimeBlock]| -> Option<TimeBlock> {
        let s = p.last().map_or(k, |b| b.j + k);
        (s <= hi).then_some(TimeBlock { i: s, j: s })
    };
    let succ = move |_: &[TimeBlock], b: &TimeBlock| -> Option<TimeBlock> {
        if b.j < (b.i + k - 1).min(hi) {
            Some(TimeBlock { i: b.i, j: b.j + 1 })
        } else if b.i < hi {
            Some(TimeBlock { i: b.i + 1, j: b.i + 1 })
        } else {
            None
        }
    };
    Ok(Sequences { cur: vec![], started: false, depth: r_max, first: Box::new(first), succ: Box::new(succ) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaAlgorithm {
    PrefixRecursion,
    /// The same recursion with p_n(0) in its spectral form Σ w λⁿ.
    SpectralRecursion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaSample {
    pub block: TimeBlock,
    pub value: f64,
    pub n: usize,
    pub eps: f64,
    pub seed: u64,
    pub index: u64,
    pub algorithm: ThetaAlgorithm,
}

/// Return-probability source for the Θ recursions.
#[derive(Debug, Clone, Copy)]
pub enum ThetaKernel<'a> {
    Table(&'a KernelTable),
    Spectral(&'a SpectralKernel),
}

fn require_block(field: &[f64], grid: &MesoGrid, b: &TimeBlock) -> Result<()> {
    if b.i < 1 || b.j > grid.m || b.j < b.i {
        return Err(Error::InvalidInput(format!("block {b} outside the grid 1..={}", grid.m)));
    }
    let end = grid.interval(b.j).end;
    if field.len() < end {
        return Err(Error::TableTooShort { what: "disorder field", needed: end - 1, have: field.len().saturating_sub(1) });
    }
    Ok(())
}

/// Forward sums B(f) = Σ_{d≤f} X_{d,f} and backward sums C(d) = Σ_{f≥d} X_{d,f}
/// over one interval.
struct IntervalChains {
    b: Vec<f64>,
    c: Vec<f64>,
}

fn chains_table(z: &[f64], p: &[f64]) -> IntervalChains {
    let ones = vec![1.0; z.len()];
    let b = prefix_chain(z, &ones, p);
    let zr: Vec<f64> = z.iter().rev().copied().collect();
    let mut c = prefix_chain(&zr, &ones, p);
    c.reverse();
    IntervalChains { b, c }
}

fn chains_spectral(z: &[f64], sk: &SpectralKernel) -> IntervalChains {
    let q = sk.len();
    let l = z.len();
    let mut s = vec![0.0; q];
    let mut b = vec![0.0; l];
    for j in 0..l {
        if j > 0 {
            let prev = b[j - 1];
            for (x, lam) in s.iter_mut().zip(&sk.lambda) {
                *x = lam * (*x + prev);
            }
        }
        b[j] = z[j] * (1.0 + dot(&s, &sk.weight));
    }
    s.iter_mut().for_each(|x| *x = 0.0);
    let mut c = vec![0.0; l];
    for j in (0..l).rev() {
        if j + 1 < l {
            let next = c[j + 1];
            for (x, lam) in s.iter_mut().zip(&sk.lambda) {
                *x = lam * (*x + next);
            }
        }
        c[j] = z[j] * (1.0 + dot(&s, &sk.weight));
    }
    IntervalChains { b, c }
}

/// Σ_{f∈T(i)} B(f) Σ_{d'∈T(i')} p(d'−f) C(d').
fn connect(bi: &[f64], ri: &Range<usize>, cj: &[f64], rj: &Range<usize>, kernel: ThetaKernel) -> Result<f64> {
    match kernel {
        ThetaKernel::Table(kt) => {
            kt.require(rj.end - 1 - ri.start)?;
            let mut s = 0.0;
            for (a, f) in ri.clone().enumerate() {
                if bi[a] == 0.0 {
                    continue;
                }
                let inner: f64 = rj.clone().enumerate().map(|(c, d)| kt.p0[d - f] * cj[c]).sum();
                s += bi[a] * inner;
            }
            Ok(s)
        }
        ThetaKernel::Spectral(sk) => {
            if rj.end - 1 - ri.start > sk.n_max {
                return Err(Error::TableTooShort { what: "spectral kernel", needed: rj.end - 1 - ri.start, have: sk.n_max });
            }
            let gap = (rj.start - (ri.end - 1)) as i32;
            let mut s = 0.0;
            for (lam, w) in sk.lambda.iter().zip(&sk.weight) {
                let mut u = 0.0;
                for x in bi {
                    u = lam * u + x;
                }
                let mut v = 0.0;
                for x in cj.iter().rev() {
                    v = lam * v + x;
                }
                s += w * lam.powi(gap) * u * v;
            }
            Ok(s)
        }
    }
}

fn chains_for(z: &[f64], kernel: ThetaKernel) -> Result<IntervalChains> {
    match kernel {
        ThetaKernel::Table(kt) => {
            kt.require(z.len())?;
            Ok(chains_table(z, &kt.p0))
        }
        ThetaKernel::Spectral(sk) => {
            if z.len() > sk.n_max {
                return Err(Error::TableTooShort { what: "spectral kernel", needed: z.len(), have: sk.n_max });
            }
            Ok(chains_spectral(z, sk))
        }
    }
}

/// Θ(ī) for one field: (εN)^{-1/2} Σ_{d≤f∈T(i)} X_{d,f} for width one, and
/// (εN)^{-1/2} Σ X_{d,f} p_{d'−f}(0) X_{d',f'} over T(i) × T(i') otherwise.
pub fn theta(field: &ChaosField, grid: &MesoGrid, block: TimeBlock, kt: &KernelTable) -> Result<ThetaSample> {
    require_block(&field.zeta, grid, &block)?;
    let value = theta_value(&field.zeta, grid, block, ThetaKernel::Table(kt))?;
    Ok(ThetaSample { block, value, n: grid.n, eps: grid.eps, seed: field.seed, index: field.index, algorithm: ThetaAlgorithm::PrefixRecursion })
}

pub fn theta_value(zeta: &[f64], grid: &MesoGrid, block: TimeBlock, kernel: ThetaKernel) -> Result<f64> {
    require_block(zeta, grid, &block)?;
    let norm = grid.scale().sqrt();
    let ri = grid.interval(block.i);
    let ci = chains_for(&zeta[ri.clone()], kernel)?;
    if block.width() == 1 {
        return Ok(ci.b.iter().sum::<f64>() / norm);
    }
    let rj = grid.interval(block.j);
    let cj = chains_for(&zeta[rj.clone()], kernel)?;
    Ok(connect(&ci.b, &ri, &cj.c, &rj, kernel)? / norm)
}

/// Θ over a set of blocks, sharing interval chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockThetas {
    pub blocks: Vec<TimeBlock>,
    pub values: Vec<f64>,
}

impl BlockThetas {
    pub fn compute(zeta: &[f64], grid: &MesoGrid, blocks: &[TimeBlock], kernel: ThetaKernel) -> Result<Self> {
        let mut chains: std::collections::BTreeMap<usize, IntervalChains> = Default::default();
        for b in blocks {
            require_block(zeta, grid, b)?;
            for i in [b.i, b.j] {
                if let std::collections::btree_map::Entry::Vacant(e) = chains.entry(i) {
                    e.insert(chains_for(&zeta[grid.interval(i)], kernel)?);
                }
            }
        }
        let norm = grid.scale().sqrt();
        let mut values = Vec::with_capacity(blocks.len());
        for b in blocks {
            let ci = &chains[&b.i];
            let v = if b.width() == 1 {
                ci.b.iter().sum::<f64>()
            } else {
                connect(&ci.b, &grid.interval(b.i), &chains[&b.j].c, &grid.interval(b.j), kernel)?
            };
            values.push(v / norm);
        }
        Ok(Self { blocks: blocks.to_vec(), values })
    }

    pub fn zeros(blocks: &[TimeBlock]) -> Self {
        Self { blocks: blocks.to_vec(), values: vec![0.0; blocks.len()] }
    }

    pub fn get(&self, b: &TimeBlock) -> Option<f64> {
        self.blocks.iter().position(|x| x == b).map(|k| self.values[k])
    }
}

/// Z̃_{d,f}(0,0) for d ≤ f in one interval by last-visit decomposition, and
/// Θ(ī) as the termwise sum of X_{d,f} = ζ_d Z̃_{d,f}(0,0) ζ_f (X_{d,d} = ζ_d).
/// Quartic cost; meant for intervals of a few dozen steps.
pub fn theta_definitional(zeta: &[f64], grid: &MesoGrid, block: TimeBlock, kt: &KernelTable) -> Result<f64> {
    require_block(zeta, grid, &block)?;
    let x_matrix = |r: &Range<usize>| -> Result<Vec<Vec<f64>>> {
        let l = r.len();
        kt.require(l)?;
        let z = &zeta[r.clone()];
        let mut x = vec![vec![0.0; l]; l];
        for d in 0..l {
            // zt[f] = Z̃_{d,f}(0,0)
            let mut zt = vec![0.0; l];
            for f in d + 1..l {
                let mut s = kt.p0[f - d];
                for t in d + 1..f {
                    s += zt[t] * z[t] * kt.p0[f - t];
                }
                zt[f] = s;
            }
            x[d][d] = z[d];
            for f in d + 1..l {
                x[d][f] = z[d] * zt[f] * z[f];
            }
        }
        Ok(x)
    };
    let ri = grid.interval(block.i);
    let xi = x_matrix(&ri)?;
    let l = ri.len();
    let mut total = 0.0;
    if block.width() == 1 {
        for d in 0..l {
            for f in d..l {
                total += xi[d][f];
            }
        }
    } else {
        let rj = grid.interval(block.j);
        let xj = x_matrix(&rj)?;
        kt.require(rj.end - ri.start)?;
        let lj = rj.len();
        for d in 0..l {
            for f in d..l {
                for e in 0..lj {
                    for g in e..lj {
                        total += xi[d][f] * kt.p0[(rj.start + e) - (ri.start + f)] * xj[e][g];
                    }
                }
            }
        }
    }
    Ok(total / grid.scale().sqrt())
}

/// Σ over time chains 0 < t₁ < … < t_m < N whose visited intervals form a
/// no-triple tuple of length ≤ r_max: seed(t₁) w(t₁) Π kern(t_{j+1}−t_j) w(t_{j+1}) close(t_m).
pub fn no_triple_chain_sum(grid: &MesoGrid, w: &[f64], seed: &[f64], close: &[f64], kern: &[f64]) -> Result<f64> {
    let (ilo, ihi) = grid.active();
    let tmin = grid.interval(ilo).start;
    let tend = grid.interval(ihi).end;
    let l = tend - tmin;
    for (name, v) in [("weights", w), ("seed", seed), ("close", close)] {
        if v.len() < tend {
            return Err(Error::InvalidInput(format!("{name} covers {} times, need {tend}", v.len())));
        }
    }
    if kern.len() <= l {
        return Err(Error::TableTooShort { what: "chain kernel", needed: l, have: kern.len().saturating_sub(1) });
    }
    let r = grid.r_max;
    let k = grid.k_eps;
    let krev: Vec<f64> = (0..l).map(|i| kern[l - i]).collect();
    let start: Vec<usize> = (0..=grid.m).map(|i| if i == 0 { 0 } else { grid.interval(i).start.saturating_sub(tmin) }).collect();
    let iv: Vec<usize> = (ilo..=ihi).flat_map(|i| std::iter::repeat(i).take(grid.interval(i).len())).collect();
    // d[k][f][j], f = last gap short
    let mut d = vec![[vec![0.0; l], vec![0.0; l]]; r];
    let mut e = vec![vec![0.0; l]; r];
    let sum = |x: &[f64], a: usize, b: usize, j: usize| -> f64 {
        if b <= a {
            0.0
        } else {
            dot(&x[a..b], &krev[l - j + a..l - j + b])
        }
    };
    let mut total = 0.0;
    for j in 0..l {
        let t = tmin + j;
        let wt = w[t];
        if wt == 0.0 {
            continue;
        }
        let i = iv[j];
        let s0 = start[i];
        let short_lo = if i > ilo + k - 1 { start[i + 1 - k] } else { 0 };
        let long_hi = short_lo;
        for c in 0..r {
            for f in 0..2 {
                let mut s = sum(&d[c][f], s0, j, j);
                if c == 0 {
                    if f == 0 {
                        s += seed[t];
                    }
                } else if f == 1 {
                    s += sum(&d[c - 1][0], short_lo, s0, j);
                } else {
                    s += sum(&e[c - 1], 0, long_hi, j);
                }
                d[c][f][j] = wt * s;
            }
            e[c][j] = d[c][0][j] + d[c][1][j];
            total += e[c][j] * close[t];
        }
    }
    Ok(total)
}

/// Z^{no triple}: the polymer integral restricted to no-triple interval tuples.
pub fn z_no_triple(zeta: &[f64], grid: &MesoGrid, qv: &QVectors, kt: &KernelTable) -> Result<f64> {
    check_grid_n(grid, qv)?;
    kt.require(qv.n)?;
    let s = no_triple_chain_sum(grid, zeta, &qv.fwd, &qv.bwd, &kt.p0)?;
    Ok(qv.full + s / (qv.n as f64).sqrt())
}

/// E[(Z^{no triple})²], by orthogonality of the chaos terms.
pub fn z_no_triple_second_moment(sigma2: f64, grid: &MesoGrid, qv: &QVectors, kt: &KernelTable) -> Result<f64> {
    check_grid_n(grid, qv)?;
    kt.require(qv.n)?;
    let w = vec![sigma2; qv.n + 1];
    let f2: Vec<f64> = qv.fwd.iter().map(|x| x * x).collect();
    let b2: Vec<f64> = qv.bwd.iter().map(|x| x * x).collect();
    let s = no_triple_chain_sum(grid, &w, &f2, &b2, &kt.u)?;
    Ok(qv.full * qv.full + s / qv.n as f64)
}

fn check_grid_n(grid: &MesoGrid, qv: &QVectors) -> Result<()> {
    if grid.n != qv.n {
        return Err(Error::InvalidInput(format!("grid N = {} but q-vectors N = {}", grid.n, qv.n)));
    }
    Ok(())
}

/// φ_ε(a) = ∫_a^{a+1} φ(√ε x) dx.
pub fn eps_level(phi: &TestFn, eps: f64) -> Result<LatticeVec> {
    let (lo, hi) = phi.bounded_support()?;
    let se = eps.sqrt();
    let a0 = (lo / se).floor() as i64 - 1;
    let a1 = (hi / se).ceil() as i64 + 1;
    let vals = (a0..=a1)
        .map(|a| {
            let (x0, x1) = (a as f64 * se, (a + 1) as f64 * se);
            quad::over_breaks(|y| phi.eval(y), &phi.breaks(x0, x1), 10) / se
        })
        .collect();
    Ok(LatticeVec::new(a0, vals))
}

/// φ_{N,ε}(a) = (εN)^{-1/2} Σ_{u ∈ (a√(εN), (a+1)√(εN)]} φ_N(u).
pub fn eps_level_from_lattice(phi_n: &LatticeVec, grid: &MesoGrid) -> LatticeVec {
    let w = grid.scale().sqrt();
    let cell = |u: i64| ((u as f64) / w).ceil() as i64 - 1;
    let a0 = cell(phi_n.lo);
    let a1 = cell(phi_n.hi());
    let mut vals = vec![0.0; (a1 - a0 + 1) as usize];
    for (k, v) in phi_n.values.iter().enumerate() {
        let u = phi_n.lo + k as i64;
        vals[(cell(u) - a0) as usize] += v / w;
    }
    LatticeVec::new(a0, vals)
}

/// g₁(φ,ψ) + √ε Σ_{paired tuples, r ≤ r_max} Φ(i₁) Θ(ī₁) Π g_{(i_j − i'_{j−1})}(0) Θ(ī_j) Ψ(i'_r),
/// with Φ(i) = Σ_a φ_e(a) g_i(a) and Ψ(i') = Σ_b g_{⌊1/ε⌋−i'}(b) ψ_e(b).
pub fn cg_model(thetas: &BlockThetas, grid: &MesoGrid, phi_e: &LatticeVec, psi_e: &LatticeVec, g1: f64) -> Result<f64> {
    let (lo, hi) = grid.active();
    let k = grid.k_eps;
    let pair = |v: &LatticeVec, t: usize| -> f64 {
        v.values.iter().enumerate().map(|(j, x)| x * heat_kernel(t as f64, (v.lo + j as i64) as f64)).sum()
    };
    let blocks: Vec<(TimeBlock, f64)> = thetas.blocks.iter().copied().zip(thetas.values.iter().copied()).collect();
    for (b, _) in &blocks {
        if b.i < lo || b.j > hi || b.j - b.i >= k {
            return Err(Error::InvalidInput(format!("block {b} outside the paired domain")));
        }
    }
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.sort_by_key(|&x| blocks[x].0);
    let phi_i: Vec<f64> = (0..=grid.m).map(|i| if i == 0 { 0.0 } else { pair(phi_e, i) }).collect();
    let psi_i: Vec<f64> = (0..=grid.m).map(|i| if i >= grid.m { 0.0 } else { pair(psi_e, grid.m - i) }).collect();
    let g0: Vec<f64> = (0..=grid.m).map(|t| if t == 0 { 0.0 } else { heat_kernel(t as f64, 0.0) }).collect();
    // v[c][x]: chains of c+1 blocks ending with block x
    let nb = blocks.len();
    let mut prev = vec![0.0; nb];
    let mut total = 0.0;
    for c in 0..grid.r_max {
        let mut cur = vec![0.0; nb];
        for &x in &order {
            let (b, th) = blocks[x];
            if th == 0.0 {
                continue;
            }
            let mut s = if c == 0 { phi_i[b.i] } else { 0.0 };
            if c > 0 {
                for &y in &order {
                    let (a, _) = blocks[y];
                    if a.j + k <= b.i && prev[y] != 0.0 {
                        s += prev[y] * g0[b.i - a.j];
                    }
                }
            }
            cur[x] = th * s;
            total += cur[x] * psi_i[b.j];
        }
        if cur.iter().all(|v| *v == 0.0) {
            break;
        }
        prev = cur;
    }
    Ok(g1 + grid.eps.sqrt() * total)
}

/// L^{(cg)}(φ,ψ|Θ) with the ε-level test functions φ_ε, ψ_ε.
pub fn l_cg(thetas: &BlockThetas, grid: &MesoGrid, phi: &TestFn, psi: &TestFn) -> Result<f64> {
    let g1 = g_pair(phi, psi, 1.0)?.value;
    cg_model(thetas, grid, &eps_level(phi, grid.eps)?, &eps_level(psi, grid.eps)?, g1)
}

/// Z^{(cg)}: Θ from the field, test functions φ_{N,ε}, ψ_{N,ε} from φ_N, ψ_N.
pub fn z_cg(zeta: &[f64], grid: &MesoGrid, phi: &TestFn, psi: &TestFn, kernel: ThetaKernel) -> Result<f64> {
    let th = BlockThetas::compute(zeta, grid, &grid.blocks(), kernel)?;
    let g1 = g_pair(phi, psi, 1.0)?.value;
    let pe = eps_level_from_lattice(&discretize(phi, grid.n)?, grid);
    let qe = eps_level_from_lattice(&discretize(psi, grid.n)?, grid);
    cg_model(&th, grid, &pe, &qe, g1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaMoments {
    pub block: TimeBlock,
    pub mean: MCEstimate,
    /// E Θ²
    pub m2: MCEstimate,
    /// E Θ⁴
    pub m4: MCEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockCovariance {
    pub a: TimeBlock,
    pub b: TimeBlock,
    pub cov: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaMomentReport {
    pub grid: MesoGrid,
    pub beta: f64,
    pub moments: Vec<ThetaMoments>,
    pub covariances: Vec<BlockCovariance>,
    /// max over blocks of E Θ⁴ / (E Θ²)²
    pub max_kurtosis: f64,
}

impl ThetaMomentReport {
    /// Largest |cov|/stderr over disjoint block pairs.
    pub fn max_cov_z(&self) -> f64 {
        self.covariances.iter().map(|c| c.cov.abs() / c.stderr).fold(0.0, f64::max)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn theta_moment_experiment(
    law: &DisorderLaw,
    window: &CriticalWindow,
    grid: &MesoGrid,
    blocks: &[TimeBlock],
    samples: usize,
    seed: u64,
    kt: &KernelTable,
    workers: Option<usize>,
) -> Result<ThetaMomentReport> {
    if blocks.is_empty() {
        return Err(Error::InvalidInput("no blocks".into()));
    }
    let t0 = std::time::Instant::now();
    let len = blocks.iter().map(|b| grid.interval(b.j).end).max().unwrap_or(0);
    let rows = run_indexed(samples, workers, |i| -> Result<Vec<f64>> {
        let f = zeta_field(law, window.beta, len, seed, i)?;
        Ok(BlockThetas::compute(&f.zeta, grid, blocks, ThetaKernel::Table(kt))?.values)
    });
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let dt = t0.elapsed().as_secs_f64();
    let col = |k: usize| -> Vec<f64> { rows.iter().map(|r| r[k]).collect() };
    let mut moments = vec![];
    let mut max_kurtosis: f64 = 0.0;
    for (k, b) in blocks.iter().enumerate() {
        let x = col(k);
        let x2: Vec<f64> = x.iter().map(|v| v * v).collect();
        let x4: Vec<f64> = x2.iter().map(|v| v * v).collect();
        let m2 = MCEstimate::from_samples(&x2, seed, dt)?;
        let m4 = MCEstimate::from_samples(&x4, seed, dt)?;
        if m2.mean > 0.0 {
            max_kurtosis = max_kurtosis.max(m4.mean / (m2.mean * m2.mean));
        }
        moments.push(ThetaMoments { block: *b, mean: MCEstimate::from_samples(&x, seed, dt)?, m2, m4 });
    }
    let mut covariances = vec![];
    for a in 0..blocks.len() {
        for b in 0..blocks.len() {
            if blocks[a].j < blocks[b].i {
                let (cov, stderr) = covariance(&col(a), &col(b));
                covariances.push(BlockCovariance { a: blocks[a], b: blocks[b], cov, stderr });
            }
        }
    }
    Ok(ThetaMomentReport { grid: *grid, beta: window.beta, moments, covariances, max_kurtosis })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoTripleL2 {
    pub grid: MesoGrid,
    /// (Z̃ − Z^{no triple})² over fields.
    pub squared_gap: MCEstimate,
    /// √ of the empirical mean square.
    pub empirical: f64,
    /// √(E Z̃² − E (Z^{no triple})²).
    pub exact: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn no_triple_l2_experiment(
    law: &DisorderLaw,
    window: &CriticalWindow,
    grid: &MesoGrid,
    qv: &QVectors,
    kt: &KernelTable,
    ubar: &[f64],
    samples: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<NoTripleL2> {
    let t0 = std::time::Instant::now();
    let gaps = run_indexed(samples, workers, |i| -> Result<f64> {
        let f = zeta_field(law, window.beta, qv.n + 1, seed, i)?;
        let z = polymer_measure_integral(&f.zeta, qv, kt)?;
        let y = z_no_triple(&f.zeta, grid, qv, kt)?;
        Ok((z - y) * (z - y))
    });
    let gaps: Vec<f64> = gaps.into_iter().collect::<Result<_>>()?;
    let squared_gap = MCEstimate::from_samples(&gaps, seed, t0.elapsed().as_secs_f64())?;
    let full = exact_second_moment(qv, ubar)?;
    let part = z_no_triple_second_moment(window.sigma2, grid, qv, kt)?;
    Ok(NoTripleL2 { grid: *grid, squared_gap, empirical: squared_gap.mean.sqrt(), exact: (full - part).max(0.0).sqrt() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgConvergence {
    pub ns: Vec<usize>,
    pub grids: Vec<MesoGrid>,
    pub betas: Vec<f64>,
    /// ks[a][b] = KS distance between the L^{(cg)} samples at ns[a] and ns[b].
    pub ks: Vec<Vec<f64>>,
    pub means: Vec<MCEstimate>,
    pub g1: f64,
}

impl CgConvergence {
    /// KS between consecutive entries of `ns`.
    pub fn consecutive(&self) -> Vec<f64> {
        (1..self.ns.len()).map(|a| self.ks[a - 1][a]).collect()
    }
}

/// Samples L^{(cg)}(φ,ψ|Θ_{N,ε}) for each N of `ns` under Gaussian disorder.
/// The levels are coupled: ω at N is the √c-normalized block sum of one
/// white-noise sequence at the finest N = c·N, so each level has the exact
/// Gaussian law while sharing randomness with the others.
#[allow(clippy::too_many_arguments)]
pub fn cg_convergence_experiment(
    eps: f64,
    k_eps: Option<usize>,
    r_max: Option<usize>,
    ns: &[usize],
    vartheta: f64,
    phi: &TestFn,
    psi: &TestFn,
    samples: usize,
    seed: u64,
    kt: &KernelTable,
    spectral: Option<&SpectralKernel>,
    workers: Option<usize>,
) -> Result<CgConvergence> {
    let n_top = *ns.iter().max().ok_or_else(|| Error::InvalidInput("empty N list".into()))?;
    if let Some(n) = ns.iter().find(|&&n| n == 0 || n_top % n != 0) {
        return Err(Error::InvalidInput(format!("N = {n} does not divide the finest N = {n_top}")));
    }
    kt.require(n_top)?;
    let law = DisorderLaw::gaussian();
    let grids: Vec<MesoGrid> = ns.iter().map(|&n| MesoGrid::new(n, eps, k_eps, r_max)).collect::<Result<_>>()?;
    let betas: Vec<f64> = ns.iter().map(|&n| Ok(solve_critical_beta(&law, n, vartheta, kt.r[n])?.beta)).collect::<Result<_>>()?;
    let g1 = g_pair(phi, psi, 1.0)?.value;
    let pe = eps_level(phi, eps)?;
    let qe = eps_level(psi, eps)?;
    let blocks: Vec<Vec<TimeBlock>> = grids.iter().map(|g| g.blocks()).collect();
    let kernels: Vec<ThetaKernel> = grids
        .iter()
        .map(|g| match spectral {
            Some(sk) if (g.scale() as usize) > 2 * sk.len() && sk.n_max >= g.k_eps * (g.scale().ceil() as usize) => ThetaKernel::Spectral(sk),
            _ => ThetaKernel::Table(kt),
        })
        .collect();
    let t0 = std::time::Instant::now();
    let rows = run_indexed(samples, workers, |s| -> Result<Vec<f64>> {
        let mut r = StreamKey::new(seed, rng::domain::DISORDER).stream(s);
        let top: Vec<f64> = (0..n_top).map(|_| rng::std_normal(&mut r)).collect();
        let mut out = Vec::with_capacity(ns.len());
        for (a, &n) in ns.iter().enumerate() {
            let c = n_top / n;
            let sc = (c as f64).sqrt();
            let beta = betas[a];
            let lam = beta * beta / 2.0;
            // time t ∈ 1..=n uses the block of fine times (t−1)c..tc
            let mut zeta = vec![0.0; n + 1];
            for t in 1..=n {
                let w: f64 = top[(t - 1) * c..t * c].iter().sum::<f64>() / sc;
                zeta[t] = (beta * w - lam).exp_m1();
            }
            let th = BlockThetas::compute(&zeta, &grids[a], &blocks[a], kernels[a])?;
            out.push(cg_model(&th, &grids[a], &pe, &qe, g1)?);
        }
        Ok(out)
    });
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let dt = t0.elapsed().as_secs_f64();
    let cols: Vec<Vec<f64>> = (0..ns.len()).map(|a| rows.iter().map(|r| r[a]).collect()).collect();
    let ks = (0..ns.len()).map(|a| (0..ns.len()).map(|b| ks_two_sample(&cols[a], &cols[b])).collect()).collect();
    let means = cols.iter().map(|c| MCEstimate::from_samples(c, seed, dt)).collect::<Result<_>>()?;
    Ok(CgConvergence { ns: ns.to_vec(), grids, betas, ks, means, g1 })
}
