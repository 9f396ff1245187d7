//! Pinning and polymer partition functions: last-return recursions, chaos
//! sums, integrals against test functions and their second moments.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::continuum::{g_phi_point, TestFn};
use crate::dickman::GThetaTable;
use crate::disorder::{zeta_field, ChaosField, DisorderLaw};
use crate::ensemble::run_indexed;
use crate::error::{Error, Result};
use crate::interp::ChebPanels;
use crate::quad::{self, Quad};
use crate::rng::{self, StreamKey};
use crate::special::dot;
use crate::stats::MCEstimate;
use crate::walks::{backward_step, forward_step, HitTable, KernelTable, LatticeVec, SpectralKernel, StepLaw};

/// Largest N for which a full PartitionTable is built by default.
pub const MAX_TABLE_N: usize = 5000;

fn require_field(field: &ChaosField, last: usize) -> Result<()> {
    if field.len() <= last {
        return Err(Error::TableTooShort { what: "disorder field", needed: last, have: field.len().saturating_sub(1) });
    }
    Ok(())
}

/// D_j = ζ_j (seed_j + Σ_{i<j} D_i p(j−i)) for j = 0..len, with p indexed by gap.
pub fn prefix_chain(zeta: &[f64], seed: &[f64], p: &[f64]) -> Vec<f64> {
    let l = zeta.len();
    assert!(seed.len() >= l && p.len() > l.saturating_sub(1));
    // prev[i] = p(l − i), so prev[l−j..l] = (p(j), …, p(1))
    let prev: Vec<f64> = (0..l).map(|i| p[l - i]).collect();
    let mut d = Vec::with_capacity(l);
    for j in 0..l {
        let z = zeta[j];
        if z == 0.0 {
            d.push(0.0);
            continue;
        }
        d.push(z * (seed[j] + dot(&d[..j], &prev[l - j..])));
    }
    d
}

/// [`prefix_chain`] with p(n) = Σ_q w_q λ_q^n, in O(len · Q).
pub fn prefix_chain_spectral(zeta: &[f64], seed: &[f64], sk: &SpectralKernel) -> Result<Vec<f64>> {
    let l = zeta.len();
    assert!(seed.len() >= l);
    if l > sk.n_max + 1 {
        return Err(Error::TableTooShort { what: "spectral kernel", needed: l, have: sk.n_max });
    }
    let mut s = vec![0.0; sk.len()];
    let mut d = Vec::with_capacity(l);
    for j in 0..l {
        if j > 0 {
            let prev = d[j - 1];
            for (x, lam) in s.iter_mut().zip(&sk.lambda) {
                *x = lam * (*x + prev);
            }
        }
        d.push(zeta[j] * (seed[j] + dot(&s, &sk.weight)));
    }
    Ok(d)
}

/// W_m(k) for k = m..=end: W(k) = w_k [1{k=m} + Σ_{m≤j<k} W(j) K(k−j)] with
/// w_k = (1+ζ_k) e^h.
pub fn pin_row(field: &ChaosField, h: f64, m: usize, end: usize, kt: &KernelTable) -> Result<Vec<f64>> {
    if end < m {
        return Err(Error::InvalidInput(format!("pin_row: end {end} < start {m}")));
    }
    let l = end - m;
    kt.require_k(l)?;
    require_field(field, end)?;
    let eh = h.exp();
    let krev: Vec<f64> = kt.k[1..=l].iter().rev().copied().collect();
    let z = &field.zeta;
    let mut w = Vec::with_capacity(l + 1);
    w.push((1.0 + z[m]) * eh);
    for j in 1..=l {
        let s = dot(&w[..j], &krev[l - j..]);
        w.push((1.0 + z[m + j]) * eh * s);
    }
    Ok(w)
}

/// Point-to-point pinning partition function Z_{M,K}, disorder at both ends.
pub fn pin_partition(field: &ChaosField, h: f64, m: usize, k: usize, kt: &KernelTable) -> Result<f64> {
    Ok(*pin_row(field, h, m, k, kt)?.last().expect("nonempty row"))
}

/// All Z_{m,n}, 0 ≤ m ≤ n ≤ N, at h = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTable {
    pub n: usize,
    rows: Vec<Vec<f64>>,
}

impl PartitionTable {
    pub fn build(field: &ChaosField, n: usize, kt: &KernelTable) -> Result<Self> {
        Self::build_with_cap(field, n, kt, MAX_TABLE_N)
    }

    pub fn build_with_cap(field: &ChaosField, n: usize, kt: &KernelTable, cap: usize) -> Result<Self> {
        if n > cap {
            let needed = (n + 1) * (n + 2) / 2 * 8;
            return Err(Error::MemoryBudget { needed, budget: (cap + 1) * (cap + 2) / 2 * 8 });
        }
        kt.require_k(n)?;
        require_field(field, n)?;
        let rows = run_indexed(n + 1, None, |m| pin_row(field, 0.0, m as usize, n, kt));
        Ok(Self { n, rows: rows.into_iter().collect::<Result<_>>()? })
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        debug_assert!(m <= n && n <= self.n);
        self.rows[m][n - m]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.rows[m]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "m,n,Z")?;
        for (m, row) in self.rows.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                writeln!(w, "{},{},{:.17e}", m, m + j, z)?;
            }
        }
        Ok(())
    }
}

/// Point-to-line chaos sum 1 + Σ_n D(n) over times 1..=N.
pub fn chaos_eval(zeta: &[f64], n: usize, kt: &KernelTable) -> Result<f64> {
    kt.require(n)?;
    if zeta.len() <= n {
        return Err(Error::TableTooShort { what: "disorder field", needed: n, have: zeta.len().saturating_sub(1) });
    }
    let d = prefix_chain(&zeta[1..=n], &kt.p0[1..=n], &kt.p0);
    Ok(1.0 + d.iter().sum::<f64>())
}

/// Point-to-point chaos sum (1+ζ_M)(1+ζ_K)[p_{K−M} + chains inside (M,K)].
pub fn chaos_eval_p2p(zeta: &[f64], m: usize, k: usize, kt: &KernelTable) -> Result<f64> {
    if k < m || zeta.len() <= k {
        return Err(Error::InvalidInput(format!("chaos_eval_p2p: bad range {m}..{k}")));
    }
    if k == m {
        return Ok(1.0 + zeta[m]);
    }
    let l = k - m;
    kt.require(l)?;
    let d = prefix_chain(&zeta[m + 1..k], &kt.p0[1..l], &kt.p0);
    let tail: f64 = d.iter().enumerate().map(|(j, x)| x * kt.p0[l - 1 - j]).sum();
    Ok((1.0 + zeta[m]) * (1.0 + zeta[k]) * (kt.p0[l] + tail))
}

/// P(τ₁ > j) = 1 − Σ_{i≤j} K(i), j = 0..=n.
pub fn survival(kt: &KernelTable, n: usize) -> Result<Vec<f64>> {
    kt.require_k(n)?;
    let mut s = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    for j in 0..=n {
        acc += kt.k[j];
        s.push(1.0 - acc);
    }
    Ok(s)
}

/// Point-to-line partition function over times 1..=N assembled from the
/// last-return recursion: Σ_k V(k) P(τ₁ > N−k), V(0) = 1.
pub fn point_to_line_via_pin(field: &ChaosField, h: f64, n: usize, kt: &KernelTable) -> Result<f64> {
    Ok(log_partition_p2l(field, h, n, kt)?.exp())
}

/// log of the point-to-line partition function, rescaling on the fly.
pub fn log_partition_p2l(field: &ChaosField, h: f64, n: usize, kt: &KernelTable) -> Result<f64> {
    require_field(field, n)?;
    let surv = survival(kt, n)?;
    let krev: Vec<f64> = kt.k[1..=n].iter().rev().copied().collect();
    let eh = h.exp();
    let mut v = Vec::with_capacity(n + 1);
    v.push(1.0);
    let mut log_scale = 0.0;
    const BIG: f64 = 1e150;
    for k in 1..=n {
        let s = dot(&v[..k], &krev[n - k..]);
        let x = (1.0 + field.zeta[k]) * eh * s;
        v.push(x);
        if x > BIG {
            for y in v.iter_mut() {
                *y /= BIG;
            }
            log_scale += BIG.ln();
        }
    }
    let z: f64 = v.iter().enumerate().map(|(k, x)| x * surv[n - k]).sum();
    if !(z > 0.0) {
        return Err(Error::Domain(format!("nonpositive partition function {z}")));
    }
    Ok(z.ln() + log_scale)
}

/// Exhaustive sum over renewal sets inside (M,K) with K-weights; K−M ≤ 20.
pub fn brute_force_p2p(field: &ChaosField, h: f64, m: usize, k: usize, kt: &KernelTable) -> Result<f64> {
    if k < m || k - m > 20 {
        return Err(Error::InvalidInput("brute force needs 0 ≤ K−M ≤ 20".into()));
    }
    require_field(field, k)?;
    kt.require_k(k - m)?;
    let w = |t: usize| (1.0 + field.zeta[t]) * h.exp();
    if k == m {
        return Ok(w(m));
    }
    let inner = k - m - 1;
    let mut total = 0.0;
    for mask in 0u32..(1 << inner) {
        let mut prod = w(m);
        let mut last = m;
        for b in 0..inner {
            if mask >> b & 1 == 1 {
                let t = m + 1 + b;
                prod *= kt.k[t - last] * w(t);
                last = t;
            }
        }
        total += prod * kt.k[k - last] * w(k);
    }
    Ok(total)
}

/// Exhaustive point-to-line chaos sum over subsets of {1..N}; N ≤ 20.
pub fn brute_force_chaos(zeta: &[f64], n: usize, kt: &KernelTable) -> Result<f64> {
    if n > 20 || zeta.len() <= n {
        return Err(Error::InvalidInput("brute force needs N ≤ 20 and ζ on 1..N".into()));
    }
    kt.require(n)?;
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let mut prod = 1.0;
        let mut last = 0;
        for b in 0..n {
            if mask >> b & 1 == 1 {
                let t = b + 1;
                prod *= kt.p0[t - last] * zeta[t];
                last = t;
            }
        }
        total += prod;
    }
    Ok(total)
}

/// φ_N(a) = ∫_a^{a+1} φ(t/√N) dt on the cells meeting the support.
pub fn discretize(phi: &TestFn, n: usize) -> Result<LatticeVec> {
    let (lo, hi) = phi.bounded_support()?;
    let sn = (n as f64).sqrt();
    let a0 = (lo * sn).floor() as i64 - 1;
    let a1 = (hi * sn).ceil() as i64 + 1;
    let mut vals = Vec::with_capacity((a1 - a0 + 1) as usize);
    for a in a0..=a1 {
        let (x0, x1) = (a as f64 / sn, (a + 1) as f64 / sn);
        let br = phi.breaks(x0, x1);
        vals.push(sn * quad::over_breaks(|x| phi.eval(x), &br, 10));
    }
    Ok(LatticeVec::new(a0, vals))
}

/// Relative cut used when trimming propagated vectors.
const TRIM: f64 = 1e-18;

/// The deterministic kernels of the polymer integral:
/// fwd[n] = q_{0,n}(φ,0) = Σ_u φ_N(u) p_n(−u), bwd[n] = q_{n,N}(0,ψ) =
/// Σ_v p_{N−n}(v) ψ_N(v), full = q_{0,N}(φ,ψ) (with its 1/√N).
#[derive(Debug, Clone, PartialEq)]
pub struct QVectors {
    pub n: usize,
    pub fwd: Vec<f64>,
    pub bwd: Vec<f64>,
    pub full: f64,
}

pub fn q_vectors(law: &StepLaw, phi_n: &LatticeVec, psi_n: &LatticeVec, n: usize) -> QVectors {
    let mut fwd = Vec::with_capacity(n + 1);
    let mut cur = phi_n.clone();
    fwd.push(cur.get(0));
    for _ in 0..n {
        cur = forward_step(law, &cur);
        cur.trim(TRIM);
        fwd.push(cur.get(0));
    }
    let full = cur.pair(psi_n) / (n as f64).sqrt();
    let mut bwd = vec![0.0; n + 1];
    let mut cur = psi_n.clone();
    bwd[n] = cur.get(0);
    for j in 1..=n {
        cur = backward_step(law, &cur);
        cur.trim(TRIM);
        bwd[n - j] = cur.get(0);
    }
    QVectors { n, fwd, bwd, full }
}

/// Builds φ_N, ψ_N and their q-vectors.
pub fn q_vectors_for(law: &StepLaw, phi: &TestFn, psi: &TestFn, n: usize) -> Result<QVectors> {
    Ok(q_vectors(law, &discretize(phi, n)?, &discretize(psi, n)?, n))
}

/// Z̃_{0,N}(φ,ψ) = q_{0,N}(φ,ψ) + N^{-1/2} Σ_{n<N} A(n) q_{n,N}(0,ψ), with
/// A(n) = ζ_n (q_{0,n}(φ,0) + Σ_{m<n} A(m) p_{n−m}(0)); no disorder at 0 or N.
pub fn polymer_measure_integral(zeta: &[f64], qv: &QVectors, kt: &KernelTable) -> Result<f64> {
    let n = qv.n;
    if n < 2 {
        return Ok(qv.full);
    }
    kt.require(n)?;
    if zeta.len() < n {
        return Err(Error::TableTooShort { what: "disorder field", needed: n - 1, have: zeta.len().saturating_sub(1) });
    }
    let a = prefix_chain(&zeta[1..n], &qv.fwd[1..n], &kt.p0);
    let s: f64 = a.iter().zip(&qv.bwd[1..n]).map(|(x, y)| x * y).sum();
    Ok(qv.full + s / (n as f64).sqrt())
}

/// [`polymer_measure_integral`] with the spectral kernel.
pub fn polymer_measure_integral_spectral(zeta: &[f64], qv: &QVectors, sk: &SpectralKernel) -> Result<f64> {
    let n = qv.n;
    if n < 2 {
        return Ok(qv.full);
    }
    if zeta.len() < n {
        return Err(Error::TableTooShort { what: "disorder field", needed: n - 1, have: zeta.len().saturating_sub(1) });
    }
    let a = prefix_chain_spectral(&zeta[1..n], &qv.fwd[1..n], sk)?;
    let s: f64 = a.iter().zip(&qv.bwd[1..n]).map(|(x, y)| x * y).sum();
    Ok(qv.full + s / (n as f64).sqrt())
}

/// E[Z̃²] = q_{0,N}(φ,ψ)² + (1/N) Σ_{1≤m≤n<N} q_{0,m}(φ,0)² Ū(n−m) q_{n,N}(0,ψ)².
pub fn exact_second_moment(qv: &QVectors, ubar: &[f64]) -> Result<f64> {
    let n = qv.n;
    if n < 2 {
        return Ok(qv.full * qv.full);
    }
    if ubar.len() < n - 1 {
        return Err(Error::TableTooShort { what: "Ū", needed: n - 2, have: ubar.len().saturating_sub(1) });
    }
    let l = n - 1;
    let f2: Vec<f64> = qv.fwd[1..n].iter().map(|x| x * x).collect();
    let urev: Vec<f64> = ubar[..l].iter().rev().copied().collect();
    let mut s = 0.0;
    for j in 0..l {
        // Σ_{i≤j} f2[i] Ū(j−i)
        let c = dot(&f2[..=j], &urev[l - 1 - j..]);
        let b = qv.bwd[j + 1];
        s += c * b * b;
    }
    Ok(qv.full * qv.full + s / n as f64)
}

/// ∫_{m/N}^{(m+1)/N} f for m = 0..N.
pub fn cell_integrals<F: Fn(f64) -> f64>(f: F, n: usize) -> Vec<f64> {
    let h = 1.0 / n as f64;
    (0..n).map(|m| quad::gl(&f, m as f64 * h, (m + 1) as f64 * h, 8)).collect()
}

/// Σ_{m≤n<N} I_m(f) √N Z_{m,n} I_n(h), streamed:
/// V(k) = w_k [I_k(f) + Σ_{j<k} V(j) K(k−j)], result √N Σ V(k) I_k(h).
pub fn pinning_measure_integral(field: &ChaosField, fi: &[f64], hi: &[f64], kt: &KernelTable) -> Result<f64> {
    let n = fi.len();
    if hi.len() != n || n == 0 {
        return Err(Error::InvalidInput("cell integral vectors must have equal nonzero length".into()));
    }
    kt.require_k(n - 1)?;
    require_field(field, n - 1)?;
    let krev: Vec<f64> = kt.k[1..n].iter().rev().copied().collect();
    let mut v = Vec::with_capacity(n);
    for k in 0..n {
        let s = fi[k] + dot(&v[..k], &krev[n - 1 - k..]);
        v.push((1.0 + field.zeta[k]) * s);
    }
    Ok((n as f64).sqrt() * dot(&v, hi))
}

/// Same sum read off a PartitionTable (N cells need a table of size N−1).
pub fn pinning_measure_integral_table(table: &PartitionTable, fi: &[f64], hi: &[f64]) -> f64 {
    let n = fi.len();
    let mut s = 0.0;
    for m in 0..n {
        s += fi[m] * dot(&table.row(m)[..n - m], &hi[m..]);
    }
    (n as f64).sqrt() * s
}

/// N^{-1/2} Σ φ_N(x) P^x(S_N = y, no visit to 0 at times 1..N−1) ψ_N(y).
pub fn no_hit_term(law: &StepLaw, phi_n: &LatticeVec, psi_n: &LatticeVec, n: usize) -> f64 {
    let mut cur = phi_n.clone();
    for step in 1..=n {
        cur = forward_step(law, &cur);
        if step < n {
            cur.set(0, 0.0);
        }
        cur.trim(TRIM);
    }
    cur.pair(psi_n) / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub direct: f64,
    pub reconstructed: f64,
    pub no_hit: f64,
    pub gap: f64,
}

/// Field-independent pieces of the first/last hitting decomposition.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub n: usize,
    pub qv: QVectors,
    /// a(m) = Σ_x φ_N(x) q_x(m).
    pub first: Vec<f64>,
    /// b(j) = Σ_y ψ_N(y) q_{−y}(j).
    pub last: Vec<f64>,
    pub no_hit: f64,
}

impl Decomposition {
    pub fn new(law: &StepLaw, phi: &TestFn, psi: &TestFn, n: usize) -> Result<Self> {
        Self::from_lattice(law, &discretize(phi, n)?, &discretize(psi, n)?, n)
    }

    pub fn from_lattice(law: &StepLaw, phi_n: &LatticeVec, psi_n: &LatticeVec, n: usize) -> Result<Self> {
        let x_lo = phi_n.lo.min(-psi_n.hi());
        let x_hi = phi_n.hi().max(-psi_n.lo);
        let hits = HitTable::build(law, x_lo, x_hi, n)?;
        let mut first = vec![0.0; n + 1];
        let mut last = vec![0.0; n + 1];
        for (i, v) in phi_n.values.iter().enumerate() {
            quad_axpy(*v, hits.row(phi_n.lo + i as i64), &mut first);
        }
        for (i, v) in psi_n.values.iter().enumerate() {
            quad_axpy(*v, hits.row(-(psi_n.lo + i as i64)), &mut last);
        }
        let qv = q_vectors(law, phi_n, psi_n, n);
        let no_hit = no_hit_term(law, phi_n, psi_n, n);
        Ok(Self { n, qv, first, last, no_hit })
    }

    /// Reconstructs Z̃_{0,N}(φ,ψ) from the no-hit term and
    /// Σ_{1≤m≤n≤N−1} a(m) Z_{m,n} b(N−n), and compares with the prefix recursion.
    pub fn check(&self, field: &ChaosField, kt: &KernelTable) -> Result<DecompositionReport> {
        let n = self.n;
        let table = PartitionTable::build(field, n - 1, kt)?;
        let mut s = 0.0;
        for m in 1..n {
            let row = &table.row(m)[..n - m];
            // Σ_{n'=m}^{N−1} Z_{m,n'} b(N−n')
            let t: f64 = row.iter().enumerate().map(|(j, z)| z * self.last[n - m - j]).sum();
            s += self.first[m] * t;
        }
        let reconstructed = self.no_hit + s / (n as f64).sqrt();
        let direct = polymer_measure_integral(&field.zeta, &self.qv, kt)?;
        Ok(DecompositionReport { direct, reconstructed, no_hit: self.no_hit, gap: (direct - reconstructed).abs() })
    }
}

fn quad_axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Largest decomposition gap over `fields` disorder samples.
pub fn decomposition_identity_check(
    law: &DisorderLaw,
    beta: f64,
    decomposition: &Decomposition,
    kt: &KernelTable,
    fields: usize,
    seed: u64,
) -> Result<f64> {
    let n = decomposition.n;
    let gaps = run_indexed(fields, None, |i| -> Result<f64> {
        let f = zeta_field(law, beta, n + 1, seed, i)?;
        Ok(decomposition.check(&f, kt)?.gap)
    });
    let mut worst = 0.0f64;
    for g in gaps {
        worst = worst.max(g?);
    }
    Ok(worst)
}

/// Monte Carlo for the no-hit term: start cell a with probability
/// |φ_N(a)|/Σ|φ_N|, run the walk N steps, score ψ_N(S_N) if 0 is not
/// visited at times 1..N−1.
pub fn no_hit_walk_mc(law: &StepLaw, phi_n: &LatticeVec, psi_n: &LatticeVec, n: usize, paths: usize, seed: u64) -> Result<MCEstimate> {
    let mass: f64 = phi_n.values.iter().map(|v| v.abs()).sum();
    if mass == 0.0 {
        return Err(Error::InvalidInput("φ_N vanishes".into()));
    }
    let mut cdf = Vec::with_capacity(phi_n.values.len());
    let mut acc = 0.0;
    for v in &phi_n.values {
        acc += v.abs() / mass;
        cdf.push(acc);
    }
    let key = StreamKey::new(seed, rng::domain::WALK);
    let scale = mass / (n as f64).sqrt();
    let t0 = std::time::Instant::now();
    let vals = run_indexed(paths, None, |i| {
        let mut r = key.stream(i);
        let u: f64 = rng::Rng::random(&mut r);
        let c = cdf.partition_point(|x| *x <= u).min(cdf.len() - 1);
        let mut x = phi_n.lo + c as i64;
        let sign = phi_n.values[c].signum();
        for step in 1..=n {
            x += law.sample(&mut r);
            if x == 0 && step < n {
                return 0.0;
            }
        }
        scale * sign * psi_n.get(x)
    });
    MCEstimate::from_samples(&vals, seed, t0.elapsed().as_secs_f64())
}

/// (1/N) log Z over independent fields, with the annealed bound (1/N) log E Z
/// and the sample-level bound (1/N) log(mean Z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyReport {
    pub estimate: MCEstimate,
    pub annealed: f64,
    pub log_mean: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn free_energy_estimate(
    law: &DisorderLaw,
    beta: f64,
    h: f64,
    n: usize,
    samples: usize,
    seed: u64,
    kt: &KernelTable,
    workers: Option<usize>,
) -> Result<FreeEnergyReport> {
    let t0 = std::time::Instant::now();
    let logs = run_indexed(samples, workers, |i| -> Result<f64> {
        let f = zeta_field(law, beta, n + 1, seed, i)?;
        log_partition_p2l(&f, h, n, kt)
    });
    let logs: Vec<f64> = logs.into_iter().collect::<Result<_>>()?;
    let vals: Vec<f64> = logs.iter().map(|l| l / n as f64).collect();
    let estimate = MCEstimate::from_samples(&vals, seed, t0.elapsed().as_secs_f64())?;
    let annealed = log_partition_p2l(&ChaosField::zeros(n + 1), h, n, kt)? / n as f64;
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean_z = logs.iter().map(|l| (l - top).exp()).sum::<f64>() / logs.len() as f64;
    Ok(FreeEnergyReport { estimate, annealed, log_mean: (top + mean_z.ln()) / n as f64 })
}

/// Ensemble of polymer integrals over fields `0..samples` of `seed`; the
/// spectral kernel, when given, replaces the O(N²) convolution.
#[allow(clippy::too_many_arguments)]
pub fn polymer_ensemble(law: &DisorderLaw, beta: f64, qv: &QVectors, kt: &KernelTable, spectral: Option<&SpectralKernel>, samples: usize, seed: u64, workers: Option<usize>) -> Result<Vec<f64>> {
    run_indexed(samples, workers, |i| -> Result<f64> {
        let f = zeta_field(law, beta, qv.n, seed, i)?;
        match spectral {
            Some(sk) => polymer_measure_integral_spectral(&f.zeta, qv, sk),
            None => polymer_measure_integral(&f.zeta, qv, kt),
        }
    })
    .into_iter()
    .collect()
}

/// V₁^ϑ(φ,ψ) = 2π ∫₀¹ b(s) ∫₀^s a(s−x) G_ϑ(x) dx ds with a(r) = g_r(φ,0)²
/// and b(s) = g_{1−s}(0,ψ)². The innermost piece near x = 0 uses the
/// cumulative ∫₀^δ G_ϑ.
pub fn v1_theta(phi: &TestFn, psi: &TestFn, g: &GThetaTable) -> Result<Quad> {
    if phi.is_zero() || psi.is_zero() {
        return Ok(Quad { value: 0.0, error: 0.0, evaluations: 0 });
    }
    if g.t_max() < 1.0 {
        return Err(Error::TableTooShort { what: "G_ϑ", needed: 1, have: 0 });
    }
    let br = quad::graded_breaks(0.0, 1.0, 40);
    let a = ChebPanels::try_build(br.clone(), 16, |r| Ok(g_phi_point(phi, r, 0.0)?.powi(2)))?;
    let b = ChebPanels::try_build(br, 16, |tau| Ok(g_phi_point(psi, tau, 0.0)?.powi(2)))?;
    let value = |order: usize| -> f64 {
        let inner = |s: f64| -> f64 {
            let delta = s * 1e-13;
            let mut xs: Vec<f64> = (0..=43).map(|k| s * 0.5f64.powi(k)).collect();
            xs.extend((1..=30).map(|k| s * (1.0 - 0.5f64.powi(k))));
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            let body = quad::over_breaks(|x| a.eval(s - x) * g.eval(x), &xs, order);
            body + a.eval(s) * g.cumulative(xs[0].min(delta).max(xs[0]))
        };
        let mut outer: Vec<f64> = (0..=44).map(|k| 0.5f64.powi(k)).collect();
        outer.extend((2..=30).map(|k| 1.0 - 0.5f64.powi(k)));
        outer.push(0.0);
        outer.sort_by(f64::total_cmp);
        outer.dedup();
        2.0 * std::f64::consts::PI * quad::over_breaks(|s| b.eval(1.0 - s) * inner(s), &outer, order)
    };
    let hi = value(20);
    let lo = value(14);
    Ok(Quad { value: hi, error: (hi - lo).abs(), evaluations: 0 })
}
