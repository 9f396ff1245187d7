//! Dickman subordinator densities f_s, the kernel G_ϑ, the discrete renewal
//! kernel Ū_N and the rescaled renewal sampler.

use serde::{Deserialize, Serialize};

use crate::ensemble::run_indexed;
use crate::error::{Error, Result};
use crate::interp::ChebPanels;
use crate::quad::{self, gauss_legendre, graded_breaks};
use crate::rng::{self, Rng, StreamKey};
use crate::special::{dot, ln_gamma, EULER_GAMMA};
use crate::stats::{ks_one_sample, MCEstimate};
use crate::walks::KernelTable;

const LEVELS: usize = 40;
const DEGREE: usize = 16;

/// Ein(θ) = ∫₀^θ (e^u − 1)/u du.
pub fn ein(theta: f64) -> f64 {
    let mut term = 1.0;
    let mut s = 0.0;
    for k in 1..400 {
        term *= theta / k as f64;
        let add = term / k as f64;
        s += add;
        if add < 1e-17 * s {
            break;
        }
    }
    s
}

/// Chernoff bound on P(Y_s > t): min_θ exp(−θt + s Ein(θ)).
pub fn dickman_tail_bound(s: f64, t: f64) -> f64 {
    if t <= s {
        return 1.0;
    }
    let g = |th: f64| -th * t + s * ein(th);
    let (mut a, mut b) = (0.0, 80.0);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if g(m1) < g(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    g(0.5 * (a + b)).exp().min(1.0)
}

/// f_s tabulated on (0, t_max]: closed form on (0,1], then interval by
/// interval f(t) = t^{s−1}(c_s − s I(t−1)) with I(x) = ∫₀^x f(a)(1+a)^{−s} da.
#[derive(Debug, Clone)]
pub struct DickmanDensity {
    pub s: f64,
    /// c_s = e^{−γs}/Γ(s).
    pub c: f64,
    pub t_max: f64,
    f_tab: Vec<ChebPanels>,
    i_tab: Vec<ChebPanels>,
    cdf_int: Vec<f64>,
    /// Chernoff bound on the mass beyond t_max.
    pub tail_bound: f64,
}

impl DickmanDensity {
    /// t_max is the first integer ≥ 2 where the tail bound drops below 1e-10.
    pub fn new(s: f64) -> Result<Self> {
        let mut t = 2.0;
        while dickman_tail_bound(s, t) > 1e-10 && t < 64.0 {
            t += 1.0;
        }
        Self::with_t_max(s, t)
    }

    pub fn with_t_max(s: f64, t_max: f64) -> Result<Self> {
        if !(s > 0.0) || !(t_max >= 1.0) {
            return Err(Error::InvalidInput(format!("dickman needs s > 0 and t_max ≥ 1 (got {s}, {t_max})")));
        }
        let t_max = t_max.ceil();
        let c = (-EULER_GAMMA * s - ln_gamma(s)).exp();
        let mut d = Self { s, c, t_max, f_tab: vec![], i_tab: vec![], cdf_int: vec![c / s], tail_bound: dickman_tail_bound(s, t_max) };
        let kmax = t_max as usize;
        for k in 1..kmax {
            // f on (k, k+1]
            let kf = k as f64;
            let f_panel = ChebPanels::build(graded_breaks(kf, kf + 1.0, LEVELS), DEGREE, |t| {
                let i = if k == 1 { d.i_closed(t - 1.0) } else { d.i_tab[k - 2].eval(t - 1.0) };
                t.powf(s - 1.0) * (c - s * i)
            });
            let fint = f_panel.breaks.windows(2).map(|w| quad::gl(|t| f_panel.eval(t), w[0], w[1], 20)).sum::<f64>();
            d.cdf_int.push(d.cdf_int[k - 1] + fint);
            // I on (k, k+1], needed for the next interval
            if k + 1 < kmax {
                let start = if k == 1 { d.i_closed(1.0) } else { d.i_tab[k - 2].eval(kf) };
                let br = graded_breaks(kf, kf + 1.0, LEVELS);
                let integrand = |a: f64| f_panel.eval(a) * (1.0 + a).powf(-s);
                let mut lefts = Vec::with_capacity(br.len());
                let mut acc = start;
                for w in br.windows(2) {
                    lefts.push(acc);
                    acc += quad::gl(integrand, w[0], w[1], 20);
                }
                let i_panel = ChebPanels::build(br.clone(), DEGREE, |x| {
                    let p = br.partition_point(|b| *b < x).saturating_sub(1);
                    lefts[p] + quad::gl(integrand, br[p], x, 20)
                });
                d.i_tab.push(i_panel);
            }
            d.f_tab.push(f_panel);
        }
        Ok(d)
    }

    /// I(x) for 0 ≤ x ≤ 1, after one integration by parts:
    /// (c/s)[x^s(1+x)^{−s} + s ∫₀^x a^s (1+a)^{−s−1} da].
    fn i_closed(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let s = self.s;
        let rest = quad::over_breaks(|a| a.powf(s) * (1.0 + a).powf(-s - 1.0), &graded_breaks(0.0, x, 30), 20);
        self.c / s * (x.powf(s) * (1.0 + x).powf(-s) + s * rest)
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        if t > self.t_max {
            return Err(Error::TableTooShort { what: "dickman continuation", needed: t.ceil() as usize, have: self.t_max as usize });
        }
        if t <= 1.0 {
            return Ok(self.c * t.powf(self.s - 1.0));
        }
        let k = (t.ceil() as usize).max(2) - 1;
        let tab = &self.f_tab[k - 1];
        // the innermost panel next to 1 carries a (t−1)^s singularity
        if k == 1 && t < tab.breaks[1] {
            return Ok(t.powf(self.s - 1.0) * (self.c - self.s * self.i_closed(t - 1.0)));
        }
        Ok(tab.eval(t))
    }

    /// P(Y_s ≤ t); 1 beyond t_max up to the tail bound.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t <= 1.0 {
            return self.c / self.s * t.powf(self.s);
        }
        if t >= self.t_max {
            return self.cdf_int[self.cdf_int.len() - 1];
        }
        let k = t.ceil() as usize - 1;
        let tab = &self.f_tab[k - 1];
        let mut acc = self.cdf_int[k - 1];
        for w in tab.breaks.windows(2) {
            if w[0] >= t {
                break;
            }
            acc += quad::gl(|x| tab.eval(x), w[0], w[1].min(t), 20);
        }
        acc.min(1.0)
    }

    /// ∫₀^{t_max} f_s.
    pub fn total_mass(&self) -> f64 {
        self.cdf_int[self.cdf_int.len() - 1]
    }
}

/// log of ∫₀^∞ s^m e^{κ s}/Γ(s+1) ds (m = 0 or 1).
fn log_tilted_gamma_integral(kappa: f64, m: i32) -> Result<f64> {
    let ell = |s: f64| m as f64 * s.max(1e-300).ln() + kappa * s - ln_gamma(s + 1.0);
    // peak location: for m = 1 near 1/|κ| when κ ≪ 0, else near e^κ
    let scale = if kappa < -1.0 { 1.0 / -kappa } else { (kappa.exp()).max(1.0) };
    let mut peak = f64::NEG_INFINITY;
    let mut s = 0.0;
    let step = scale / 16.0;
    let mut s_end = 0.0;
    for _ in 0..100_000 {
        s += step;
        let v = ell(s);
        peak = peak.max(v);
        if v < peak - 40.0 && s > 2.0 * scale {
            s_end = s;
            break;
        }
    }
    if s_end == 0.0 {
        return Err(Error::Quadrature { what: "G_ϑ s-truncation".into(), achieved: f64::NAN, target: 1e-14 });
    }
    let q = quad::adaptive(|s| (ell(s) - peak).exp(), 0.0, s_end, 0.0, 1e-13)?;
    Ok(peak + q.value.ln())
}

/// G_ϑ(t) for 0 < t ≤ 1 by direct s-quadrature:
/// (1/t) ∫₀^∞ s e^{s(ϑ−γ+log t)}/Γ(s+1) ds.
pub fn g_theta_small(vartheta: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!("g_theta_small needs 0 < t ≤ 1, got {t}")));
    }
    Ok((log_tilted_gamma_integral(vartheta - EULER_GAMMA + t.ln(), 1)? - t.ln()).exp())
}

/// ∫₀^t G_ϑ = ∫₀^∞ e^{(ϑ−γ)s} t^s/Γ(s+1) ds for 0 < t ≤ 1.
pub fn g_theta_cumulative(vartheta: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!("cumulative G_ϑ needs 0 < t ≤ 1, got {t}")));
    }
    Ok(log_tilted_gamma_integral(vartheta - EULER_GAMMA + t.ln(), 0)?.exp())
}

/// Smallest log t handled by the small-t table.
pub const LOG_T_MIN: f64 = -700.0;

/// G_ϑ on (0, t_max]: log G against log t on (0,1], and an s-quadrature
/// over Dickman tables on (1, t_max].
#[derive(Debug, Clone)]
pub struct GThetaTable {
    pub vartheta: f64,
    small: ChebPanels,
    large: Option<ChebPanels>,
    /// s-truncation used on (1, t_max].
    pub s_max: f64,
    /// Largest interpolation error seen at check points (relative on (0,1]).
    pub interp_error: f64,
}

impl GThetaTable {
    pub fn build(vartheta: f64, t_max: f64) -> Result<Self> {
        let mut br = vec![LOG_T_MIN, -400.0, -200.0, -100.0, -50.0, -25.0, -12.0, -6.0, -3.0, -1.5, -0.75, -0.3, 0.0];
        // split each panel in two
        let mut fine = Vec::with_capacity(2 * br.len());
        for w in br.windows(2) {
            fine.push(w[0]);
            fine.push(0.5 * (w[0] + w[1]));
        }
        fine.push(0.0);
        br = fine;
        let small = ChebPanels::try_build(br, 24, |x| Ok(g_theta_small(vartheta, x.exp())?.ln()))?;
        let mut err = 0.0f64;
        for w in small.breaks.windows(2) {
            let x = 0.5 * (w[0] + w[1]) + 0.1 * (w[1] - w[0]);
            err = err.max((small.eval(x) - g_theta_small(vartheta, x.exp())?.ln()).abs());
        }
        let (large, s_max) = if t_max > 1.0 { Self::build_large(vartheta, t_max.ceil(), &mut err)? } else { (None, 0.0) };
        Ok(Self { vartheta, small, large, s_max, interp_error: err })
    }

    fn build_large(vartheta: f64, t_max: f64, err: &mut f64) -> Result<(Option<ChebPanels>, f64)> {
        // truncation: e^{ϑs}/Γ(s+1) · s t^{s−1} < 1e-14 at t = t_max
        let bound = |s: f64| (vartheta * s - ln_gamma(s + 1.0) + s.ln() + (s - 1.0) * t_max.ln()).exp();
        let mut s_max = 1.0;
        while bound(s_max) > 1e-14 || s_max < 2.0 {
            s_max += 0.5;
        }
        let mut sb = vec![0.0, 0.25, 0.5, 1.0];
        while *sb.last().unwrap() < s_max {
            let l = *sb.last().unwrap();
            sb.push((l * 2.0).min(s_max));
        }
        let rule = gauss_legendre(16);
        let mut nodes = vec![];
        for w in sb.windows(2) {
            let (a, b) = (w[0], w[1]);
            for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
                nodes.push((0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * wt));
            }
        }
        let tables: Vec<Result<DickmanDensity>> = run_indexed(nodes.len(), None, |i| DickmanDensity::with_t_max(nodes[i as usize].0, t_max));
        let tables: Vec<DickmanDensity> = tables.into_iter().collect::<Result<_>>()?;
        let mut br = vec![1.0];
        let mut k = 1.0;
        while k < t_max {
            let g = graded_breaks(k, k + 1.0, 30);
            br.extend_from_slice(&g[1..]);
            k += 1.0;
        }
        let eval = |t: f64| -> Result<f64> {
            let mut acc = 0.0;
            for ((s, w), d) in nodes.iter().zip(&tables) {
                acc += w * (vartheta * s).exp() * d.density(t)?;
            }
            Ok(acc)
        };
        let large = ChebPanels::try_build(br, 12, eval)?;
        let mid = large.breaks[large.breaks.len() / 2];
        let rel = ((large.eval(mid * 1.0001) - eval(mid * 1.0001)?) / eval(mid * 1.0001)?).abs();
        *err = err.max(rel);
        Ok((Some(large), s_max))
    }

    pub fn t_max(&self) -> f64 {
        self.large.as_ref().map_or(1.0, |l| l.hi())
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 1.0 {
            let x = t.ln().max(LOG_T_MIN);
            self.small.eval(x).exp()
        } else {
            match &self.large {
                Some(l) if t <= l.hi() => l.eval(t),
                _ => f64::NAN,
            }
        }
    }

    pub fn try_eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || t > self.t_max() || t.ln() < LOG_T_MIN {
            return Err(Error::Domain(format!("G_ϑ table covers (e^{LOG_T_MIN}, {}], got {t}", self.t_max())));
        }
        Ok(self.eval(t))
    }

    /// ∫₀^t G_ϑ for t ≤ 1.
    pub fn cumulative(&self, t: f64) -> f64 {
        g_theta_cumulative(self.vartheta, t.min(1.0)).unwrap_or(f64::NAN)
    }
}

/// Both sides of G(t) = ∬_{0<u<t̄≤v<t} G(u) (v−u)^{−1} G(t−v) du dv.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenewalIdentity {
    pub t: f64,
    pub t_bar: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_gap: f64,
}

pub fn renewal_identity(g: &GThetaTable, t: f64, t_bar: f64) -> Result<RenewalIdentity> {
    if !(0.0 < t_bar && t_bar < t && t <= g.t_max().min(1.0)) {
        return Err(Error::InvalidInput("renewal identity needs 0 < t̄ < t ≤ 1".into()));
    }
    let lhs = g_theta_small(g.vartheta, t)?;
    let span = t - t_bar;
    // H(u) = ∫₀^{t−t̄} G(y)/(t − y − u) dy, y = t − v
    let h = |u: f64| -> f64 {
        let d0 = span * 0.5f64.powi(45);
        let mut br: Vec<f64> = (0..=45).map(|k| span * 0.5f64.powi(k)).collect();
        br.extend((1..=40).map(|k| span * (1.0 - 0.5f64.powi(k))));
        br.sort_by(f64::total_cmp);
        br.dedup();
        g.cumulative(d0) / (t - u) + quad::over_breaks(|y| g.eval(y) / (t - y - u), &br, 20)
    };
    let u0 = t_bar * 0.5f64.powi(45);
    let mut br: Vec<f64> = (0..=45).map(|k| t_bar * 0.5f64.powi(k)).collect();
    br.extend((1..=40).map(|k| t_bar * (1.0 - 0.5f64.powi(k))));
    br.sort_by(f64::total_cmp);
    br.dedup();
    let rhs = g.cumulative(u0) * h(0.0) + quad::over_breaks(|u| g.eval(u) * h(u), &br, 20);
    Ok(RenewalIdentity { t, t_bar, lhs, rhs, rel_gap: ((lhs - rhs) / lhs).abs() })
}

/// t G_ϑ(t) (log 1/t)² and (∫₀^t G_ϑ) log(1/t) at the given points.
pub fn g_theta_asymptotics(vartheta: f64, ts: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    ts.iter()
        .map(|&t| {
            let l = (1.0 / t).ln();
            Ok((t, t * g_theta_small(vartheta, t)? * l * l, g_theta_cumulative(vartheta, t)? * l))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UbarTable {
    pub n: usize,
    pub sigma2: f64,
    pub values: Vec<f64>,
}

/// Ū(0) = σ², Ū(n) = σ² W(n), W(n) = σ² (u(n) + Σ_{1≤j<n} u(j) W(n−j)).
pub fn build_ubar(n: usize, sigma2: f64, kt: &KernelTable) -> Result<UbarTable> {
    kt.require(n)?;
    let urev: Vec<f64> = kt.u[1..=n.max(1)].iter().rev().copied().collect();
    let l = urev.len();
    let mut w = vec![0.0; n + 1];
    for k in 1..=n {
        // Σ_{j=1}^{k−1} u(j) W(k−j) = Σ_{i=1}^{k−1} W(i) u(k−i)
        let s = dot(&w[1..k], &urev[l - (k - 1)..]);
        w[k] = sigma2 * (kt.u[k] + s);
    }
    let mut values: Vec<f64> = w.iter().map(|x| sigma2 * x).collect();
    values[0] = sigma2;
    Ok(UbarTable { n, sigma2, values })
}

/// Ū(n) from its definition: Σ_{k≥1} σ^{2(k+1)} Σ over compositions of n
/// into k parts of Π u(parts); n ≤ 20.
pub fn ubar_by_compositions(n: usize, sigma2: f64, kt: &KernelTable) -> f64 {
    if n == 0 {
        return sigma2;
    }
    let mut total = 0.0;
    // compositions of n ↔ subsets of the n−1 cut points
    for mask in 0u32..(1 << (n - 1)) {
        let mut prod = 1.0;
        let mut last = 0;
        let mut parts = 0;
        for b in 1..n {
            if mask >> (b - 1) & 1 == 1 {
                prod *= kt.u[b - last];
                last = b;
                parts += 1;
            }
        }
        prod *= kt.u[n - last];
        parts += 1;
        total += prod * sigma2.powi(parts + 1);
    }
    total
}

/// sup over n ∈ [lo_frac N, N] of |N Ū(n) / (2π G_ϑ(n/N)) − 1|.
pub fn ubar_ratio_deviation(ubar: &UbarTable, g: &GThetaTable, lo_frac: f64) -> f64 {
    let n = ubar.n as f64;
    let start = (lo_frac * n).ceil() as usize;
    (start.max(1)..=ubar.n)
        .map(|k| (n * ubar.values[k] / (2.0 * std::f64::consts::PI * g.eval(k as f64 / n)) - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Rescaled renewal positions ι_k/N, k = ⌊s log N⌋, increments with law
/// u(n)/R_N on {1..N}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalSample {
    pub n: usize,
    pub s: f64,
    pub steps: usize,
    pub values: Vec<f64>,
    pub ks: f64,
    pub first_increment: MCEstimate,
    pub mean_increment_exact: f64,
}

pub fn sample_increment<R: Rng + ?Sized>(kt: &KernelTable, n: usize, rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * kt.r[n];
    // smallest m with R_m > u
    let m = kt.r[1..=n].partition_point(|x| *x <= u) + 1;
    m.min(n)
}

pub fn sample_dickman_renewal(kt: &KernelTable, n: usize, s: f64, count: usize, seed: u64, dickman: &DickmanDensity) -> Result<RenewalSample> {
    kt.require(n)?;
    if count < 2 {
        return Err(Error::InvalidInput("need at least 2 samples".into()));
    }
    let steps = (s * (n as f64).ln()).floor() as usize;
    let key = StreamKey::new(seed, rng::domain::RENEWAL);
    let t0 = std::time::Instant::now();
    let draws = run_indexed(count, None, |i| {
        let mut r = key.stream(i);
        let mut pos = 0usize;
        let mut first = 0usize;
        for j in 0..steps {
            let x = sample_increment(kt, n, &mut r);
            if j == 0 {
                first = x;
            }
            pos += x;
        }
        (pos as f64 / n as f64, first as f64)
    });
    let values: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let firsts: Vec<f64> = draws.iter().map(|d| d.1).collect();
    let ks = ks_one_sample(&values, |x| dickman.cdf(x));
    let mean_exact = (1..=n).map(|m| m as f64 * kt.u[m]).sum::<f64>() / kt.r[n];
    Ok(RenewalSample {
        n,
        s,
        steps,
        values,
        ks,
        first_increment: MCEstimate::from_samples(&firsts, seed, t0.elapsed().as_secs_f64())?,
        mean_increment_exact: mean_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walks::StepLaw;

    /// I(x) on [0,1] with a = y^k, k ≥ 2/s, and many panels.
    fn oracle_density_1_2(s: f64, t: f64) -> f64 {
        let c = (-EULER_GAMMA * s - ln_gamma(s)).exp();
        let k = (2.0 / s).ceil().max(1.0);
        let y1 = (t - 1.0).powf(1.0 / k);
        let i = quad::composite(|y: f64| c * k * y.powf(k * s - 1.0) * (1.0 + y.powf(k)).powf(-s), 0.0, y1, 400, 20);
        t.powf(s - 1.0) * (c - s * i)
    }

    #[test]
    fn closed_form_on_unit_interval() {
        let d = DickmanDensity::new(1.0).unwrap();
        for t in [1e-9, 0.3, 1.0] {
            assert!((d.density(t).unwrap() - (-EULER_GAMMA).exp()).abs() < 1e-15);
        }
        assert!(((-EULER_GAMMA).exp() - 0.5614594836).abs() < 1e-10);
    }

    #[test]
    fn continuation_against_oracle() {
        for s in [0.5, 1.0, 2.0] {
            let d = DickmanDensity::new(s).unwrap();
            for i in 1..=40 {
                let t = 1.0 + i as f64 / 40.0 - 1e-3;
                let o = oracle_density_1_2(s, t);
                assert!((d.density(t).unwrap() - o).abs() < 1e-8, "s={s} t={t}");
            }
            let right = d.density(1.0 + 1e-12).unwrap();
            assert!((right - d.density(1.0).unwrap()).abs() < 1e-5);
        }
    }

    #[test]
    fn s1_matches_dickman_rho_on_1_2() {
        // f_1(t) = e^{−γ} ρ(t) with ρ(t) = 1 − log t on [1,2]
        let d = DickmanDensity::new(1.0).unwrap();
        for t in [1.0 + 1e-13, 1.1, 1.5, 1.99, 2.0] {
            assert!((d.density(t).unwrap() - (-EULER_GAMMA).exp() * (1.0 - t.ln())).abs() < 1e-10, "{t}");
        }
    }

    #[test]
    fn total_mass_is_one() {
        for s in [0.5, 1.0, 2.0] {
            let d = DickmanDensity::new(s).unwrap();
            assert!((d.total_mass() - 1.0).abs() < 1e-6, "s={s}: {}", d.total_mass());
            assert!(d.tail_bound < 1e-6);
            assert!((d.cdf(d.t_max) - d.total_mass()).abs() < 1e-14);
            assert!(d.cdf(1.5) < d.cdf(2.5));
        }
    }

    #[test]
    fn g_small_t_asymptotics_trend() {
        let r = g_theta_asymptotics(0.0, &[1e-2, 1e-4, 1e-6]).unwrap();
        assert!((r[2].1 - 1.0).abs() < (r[1].1 - 1.0).abs());
        assert!((r[1].1 - 1.0).abs() < (r[0].1 - 1.0).abs());
        assert!(r[2].1 > 0.7 && r[2].1 < 1.3);
        assert!((r[2].2 - 1.0).abs() < (r[0].2 - 1.0).abs());
    }

    #[test]
    fn g_cumulative_is_integral_of_g() {
        let th = 0.5;
        let a = 0.01;
        let b = 0.7;
        let direct = quad::adaptive(|t| g_theta_small(th, t).unwrap(), a, b, 1e-12, 1e-11).unwrap().value;
        let diff = g_theta_cumulative(th, b).unwrap() - g_theta_cumulative(th, a).unwrap();
        assert!((direct - diff).abs() < 1e-9 * diff);
    }

    #[test]
    fn table_matches_direct_and_monotone_in_theta() {
        let g0 = GThetaTable::build(0.0, 1.0).unwrap();
        let g1 = GThetaTable::build(1.0, 1.0).unwrap();
        assert!(g0.interp_error < 1e-9);
        for t in [1e-200, 1e-30, 1e-5, 0.01, 0.3, 0.77, 1.0] {
            let d = g_theta_small(0.0, t).unwrap();
            assert!(((g0.eval(t) - d) / d).abs() < 1e-9, "{t}");
            assert!(g1.eval(t) > g0.eval(t));
        }
    }

    #[test]
    fn large_t_table() {
        let g = GThetaTable::build(0.3, 2.0).unwrap();
        // G(1+ε) − G(1) ≈ −1/log²(1/ε)
        let g1 = g.eval(1.0);
        let gaps: Vec<f64> = [1e-3, 1e-6, 1e-9].iter().map(|e| (g.eval(1.0 + e) - g1).abs()).collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
        assert!((gaps[2] * (1e9f64).ln().powi(2) - 1.0).abs() < 0.2);
        let t = 1.5;
        let oracle = quad::adaptive(|s| (0.3 * s).exp() * DickmanDensity::with_t_max(s, 2.0).unwrap().density(t).unwrap(), 1e-9, 40.0, 1e-11, 1e-9)
            .unwrap()
            .value;
        assert!(((g.eval(t) - oracle) / oracle).abs() < 1e-7, "{} {oracle}", g.eval(t));
    }

    #[test]
    fn renewal_identity_holds() {
        let g = GThetaTable::build(0.0, 1.0).unwrap();
        for (t, tb) in [(0.8, 0.4), (0.5, 0.25)] {
            let r = renewal_identity(&g, t, tb).unwrap();
            assert!(r.rel_gap < 1e-3, "{r:?}");
        }
    }

    #[test]
    fn ubar_recursion_vs_compositions() {
        let kt = KernelTable::build(&StepLaw::default_law(), 12).unwrap();
        let s2 = 0.37;
        let u = build_ubar(12, s2, &kt).unwrap();
        assert_eq!(u.values[0], s2);
        assert!((u.values[1] - s2 * s2 * kt.u[1]).abs() < 1e-17);
        for n in 0..=10 {
            let b = ubar_by_compositions(n, s2, &kt);
            assert!((u.values[n] - b).abs() < 1e-13 * b, "{n} {} {b}", u.values[n]);
        }
    }

    #[test]
    fn renewal_first_increment_mean() {
        let n = 10_000;
        let kt = KernelTable::build(&StepLaw::default_law(), n).unwrap();
        let d = DickmanDensity::new(1.0).unwrap();
        let r = sample_dickman_renewal(&kt, n, 1.0, 4000, 3, &d).unwrap();
        assert!(r.values.iter().all(|v| *v > 0.0));
        assert!(r.first_increment.within(r.mean_increment_exact, 3.0));
        let mut rng = StreamKey::new(1, 2).stream(0);
        for _ in 0..1000 {
            let x = sample_increment(&kt, 50, &mut rng);
            assert!((1..=50).contains(&x));
        }
    }
}
