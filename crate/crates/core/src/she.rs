//! Mollified stochastic heat equation: r(t), R_δ, the θ → ϑ conversion,
//! the renewal approximation of the second moment and Feynman–Kac Monte Carlo.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::continuum::{g_phi_point, heat_kernel, TestFn};
use crate::dickman::g_theta_cumulative;
use crate::ensemble::run_indexed;
use crate::error::{Error, Result};
use crate::interp::ChebPanels;
use crate::quad::{self, QuadratureScheme};
use crate::rng::{self, domain, Rng, StreamKey};
use crate::special::EULER_GAMMA;
use crate::stats::{mean_var, MCEstimate};

/// An even probability density with support [−radius, radius], and its
/// tabulated self-convolution.
#[derive(Clone)]
pub struct Mollifier {
    pub name: String,
    pub radius: f64,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    norm: f64,
    conv: ChebPanels,
    pub sup: f64,
}

impl std::fmt::Debug for Mollifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mollifier").field("name", &self.name).field("radius", &self.radius).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierCheck {
    pub mass_error: f64,
    pub asymmetry: f64,
    pub outside: f64,
}

impl MollifierCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.mass_error <= tol && self.asymmetry <= tol && self.outside <= tol
    }
}

impl Mollifier {
    /// c·exp(−1/(1−x²)) on (−1, 1).
    pub fn bump() -> Result<Self> {
        Self::from_fn("bump", 1.0, |x: f64| if x.abs() < 1.0 { (-1.0 / (1.0 - x * x)).exp() } else { 0.0 })
    }

    /// Normalizes `f` on [−radius, radius]; `f` must be even and vanish outside.
    pub fn from_fn<F>(name: &str, radius: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput("mollifier radius must be positive".into()));
        }
        let scheme = QuadratureScheme::with_tol(1e-15, 1e-14);
        let mass = scheme.integrate(&f, -radius, radius)?.value;
        if !(mass > 0.0) {
            return Err(Error::InvalidInput(format!("mollifier {name} has mass {mass}")));
        }
        let norm = 1.0 / mass;
        let f: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(f);
        let g = f.clone();
        let rho = move |x: f64| if x.abs() <= radius { norm * g(x) } else { 0.0 };
        let breaks: Vec<f64> = (0..=64).map(|k| 2.0 * radius * k as f64 / 64.0).collect();
        let conv = ChebPanels::try_build(breaks, 16, |a| {
            if a >= 2.0 * radius {
                return Ok(0.0);
            }
            Ok(scheme.integrate(|x| rho(x) * rho(a - x), a - radius, radius)?.value)
        })?;
        let n = 20_000;
        let sup = (0..=n).map(|k| norm * f(radius * k as f64 / n as f64)).fold(0.0, f64::max);
        Ok(Self { name: name.into(), radius, f, norm, conv, sup })
    }

    #[inline]
    pub fn density(&self, x: f64) -> f64 {
        if x.abs() <= self.radius {
            self.norm * (self.f)(x)
        } else {
            0.0
        }
    }

    /// (ρ*ρ)(a), supported on [−2R, 2R].
    pub fn self_conv(&self, a: f64) -> f64 {
        let a = a.abs();
        if a >= 2.0 * self.radius {
            0.0
        } else {
            self.conv.eval(a)
        }
    }

    pub fn check(&self) -> Result<MollifierCheck> {
        let r = self.radius;
        let mass = QuadratureScheme::with_tol(1e-15, 1e-14).integrate(|x| self.density(x), -r, r)?.value;
        let mut asym: f64 = 0.0;
        let mut outside: f64 = 0.0;
        for k in 0..=1000 {
            let x = 1.5 * r * k as f64 / 1000.0;
            asym = asym.max((self.density(x) - self.density(-x)).abs());
            if x > r {
                outside = outside.max(self.density(x).abs().max(self.density(-x).abs()));
            }
        }
        Ok(MollifierCheck { mass_error: (mass - 1.0).abs(), asymmetry: asym, outside })
    }
}

/// r(t) = h(t)² with h(t) = ∫ g_t(a) (ρ*ρ)(a) da.
pub fn r_of_t(rho: &Mollifier, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("r(t) needs t > 0, got {t}")));
    }
    let top = 2.0 * rho.radius;
    let st = t.sqrt();
    let mut br = vec![0.0, top];
    for k in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        if k * st < top {
            br.push(k * st);
        }
    }
    br.sort_by(f64::total_cmp);
    let scheme = QuadratureScheme { order: 16, initial_panels: 1, max_panels: 1 << 12, abs_tol: 1e-16, rel_tol: 1e-13 };
    let mut h = 0.0;
    for w in br.windows(2) {
        h += scheme.integrate(|a| heat_kernel(t, a) * rho.self_conv(a), w[0], w[1])?.value;
    }
    Ok((2.0 * h).powi(2))
}

/// ∬ (ρ*ρ)(a)(ρ*ρ)(b) log(1/(a²+b²)) da db in polar coordinates.
pub fn log_energy(rho: &Mollifier) -> f64 {
    let top = 2.0 * rho.radius;
    let radial = |th: f64| -> f64 {
        let (c, s) = (th.cos(), th.sin());
        let rmax = top / c.max(s);
        let br = quad::graded_breaks(0.0, rmax, 30);
        quad::over_breaks(|r| rho.self_conv(r * c) * rho.self_conv(r * s) * (-2.0 * r.ln()) * r, &br, 16)
    };
    let q = PI / 4.0;
    let half = quad::composite(radial, 0.0, q, 16, 20) + quad::composite(radial, q, 2.0 * q, 16, 20);
    4.0 * half
}

/// ϑ = log 2 − γ + ∬ (ρ*ρ)(a)(ρ*ρ)(b) log(1/(a²+b²)) da db + θ/(2π).
pub fn vartheta_from_theta(theta: f64, rho: &Mollifier) -> f64 {
    vartheta_from_energy(theta, log_energy(rho))
}

pub fn vartheta_from_energy(theta: f64, energy: f64) -> f64 {
    std::f64::consts::LN_2 - EULER_GAMMA + energy + theta / (2.0 * PI)
}

/// R_δ = ∫₀^{δ^{-2}} r(t) dt.
pub fn r_delta(rho: &Mollifier, delta2: f64) -> Result<f64> {
    let top = 1.0 / delta2;
    let br = quad::graded_breaks(0.0, top, 60);
    let mut s = 0.0;
    for w in br.windows(2) {
        let rule = quad::gauss_legendre(16);
        let (m, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
            s += h * wt * r_of_t(rho, m + h * x)?;
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuumWindow {
    pub delta2: f64,
    pub theta: f64,
    /// log δ^{-2}
    pub log_l: f64,
    /// β_δ² = 2π/log δ^{-2} + θ/(log δ^{-2})²
    pub beta2: f64,
    pub beta: f64,
    pub vartheta: f64,
    pub r_delta: f64,
    /// β_δ² R_δ − 1 − ϑ/log δ^{-2}
    pub consistency: f64,
}

pub fn continuum_window(rho: &Mollifier, delta2: f64, theta: f64) -> Result<ContinuumWindow> {
    continuum_window_with(rho, delta2, theta, log_energy(rho))
}

/// As [`continuum_window`] with a precomputed log-energy of ρ.
pub fn continuum_window_with(rho: &Mollifier, delta2: f64, theta: f64, energy: f64) -> Result<ContinuumWindow> {
    if !(delta2 > 0.0 && delta2 < 1.0) {
        return Err(Error::InvalidInput(format!("δ² must lie in (0, 1), got {delta2}")));
    }
    let l = (1.0 / delta2).ln();
    let beta2 = 2.0 * PI / l + theta / (l * l);
    if !(beta2 > 0.0) {
        return Err(Error::Domain(format!("β_δ² = {beta2} ≤ 0 for θ = {theta}")));
    }
    let vartheta = vartheta_from_energy(theta, energy);
    let r = r_delta(rho, delta2)?;
    Ok(ContinuumWindow { delta2, theta, log_l: l, beta2, beta: beta2.sqrt(), vartheta, r_delta: r, consistency: beta2 * r - 1.0 - vartheta / l })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentReport {
    pub delta2: f64,
    /// E[(u^δ[f])²] − (∫f)²
    pub variance: f64,
    pub mean: f64,
    /// |V(h) − V(2h)| / 3.
    pub discretization: f64,
    /// Exact single-point term β_δ² ∫₀¹ a_δ(t) dt.
    pub k1_term: f64,
    /// 2π ∫₀¹ g_t(f,0)² ∫₀^{1−t} G_ϑ, when ϑ is given.
    pub limit: Option<f64>,
}

/// a_δ(t) = (∫ ρ(x) (f*g_t)(δx) dx)².
fn a_delta(rho: &Mollifier, f: &TestFn, delta: f64, t: f64) -> Result<f64> {
    let r = rho.radius;
    let mut s = 0.0;
    let rule = quad::gauss_legendre(24);
    for k in 0..4 {
        let (a, b) = (-r + 0.5 * r * k as f64, -r + 0.5 * r * (k + 1) as f64);
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let y = m + h * x;
            let rv = rho.density(y);
            if rv != 0.0 {
                s += h * w * rv * g_phi_point(f, t, delta * y)?;
            }
        }
    }
    Ok(s * s)
}

/// U(T) = 1 + β² ∫₀^T r(s) U(T−s) ds on the grid jh by the trapezoid rule.
pub fn renewal_u(r: &[f64], beta2: f64, h: f64) -> Vec<f64> {
    let n = r.len();
    let mut u = vec![0.0; n];
    if n == 0 {
        return u;
    }
    u[0] = 1.0;
    let diag = 1.0 - 0.5 * beta2 * h * r[0];
    for j in 1..n {
        let mut s = 0.5 * r[j] * u[0];
        for i in 1..j {
            s += r[i] * u[j - i];
        }
        u[j] = (1.0 + beta2 * h * s) / diag;
    }
    u
}

/// Var(u^δ[f]) with every two-point overlap replaced by r(t):
/// ∫₀¹ a_δ(t) β_δ² U(δ^{-2}(1−t)) dt, trapezoid in τ = δ^{-2}(1−t) with step h,
/// Richardson-corrected against step 2h.
pub fn she_second_moment_semianalytic(rho: &Mollifier, window: &ContinuumWindow, f: &TestFn, h: f64, limit_vartheta: Option<f64>) -> Result<SecondMomentReport> {
    let mean = f.integral()?;
    let delta = window.delta2.sqrt();
    if f.is_zero() {
        return Ok(SecondMomentReport { delta2: window.delta2, variance: 0.0, mean, discretization: 0.0, k1_term: 0.0, limit: Some(0.0) });
    }
    let top = 1.0 / window.delta2;
    let n = (top / h).round() as usize;
    if n < 8 {
        return Err(Error::InvalidInput(format!("time grid too coarse: {n} steps")));
    }
    let h = top / n as f64;
    let br = quad::graded_breaks(0.0, 1.0, 24);
    let a_tab = ChebPanels::try_build(br, 16, |t| a_delta(rho, f, delta, t))?;
    let rs: Vec<f64> = (0..=n).map(|j| if j == 0 { Ok(rho.self_conv(0.0).powi(2)) } else { r_of_t(rho, j as f64 * h) }).collect::<Result<_>>()?;
    let var_at = |step: usize| -> f64 {
        let r: Vec<f64> = rs.iter().step_by(step).copied().collect();
        let hh = h * step as f64;
        let u = renewal_u(&r, window.beta2, hh);
        let m = u.len() - 1;
        let mut s = 0.0;
        for (j, uj) in u.iter().enumerate() {
            let w = if j == 0 || j == m { 0.5 } else { 1.0 };
            s += w * a_tab.eval(1.0 - window.delta2 * j as f64 * hh) * uj;
        }
        window.delta2 * hh * window.beta2 * s
    };
    let fine = var_at(1);
    let coarse = if n % 2 == 0 { var_at(2) } else { fine };
    let fine = fine + (fine - coarse) / 3.0;
    let k1 = window.beta2 * QuadratureScheme::with_tol(1e-14, 1e-12).integrate(|t| a_tab.eval(t), 0.0, 1.0)?.value;
    let limit = match limit_vartheta {
        Some(v) => Some(second_moment_limit(f, v)?),
        None => None,
    };
    Ok(SecondMomentReport { delta2: window.delta2, variance: fine, mean, discretization: (fine - coarse).abs() / 3.0, k1_term: k1, limit })
}

/// 2π ∫₀¹ g_t(f,0)² (∫₀^{1−t} G_ϑ) dt.
pub fn second_moment_limit(f: &TestFn, vartheta: f64) -> Result<f64> {
    let br: Vec<f64> = quad::graded_breaks(0.0, 1.0, 40).iter().map(|x| 1.0 - x).rev().collect();
    let mut s = 0.0;
    for w in br.windows(2) {
        let rule = quad::gauss_legendre(16);
        let (m, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
            let t = m + h * x;
            s += h * wt * g_phi_point(f, t, 0.0)?.powi(2) * g_theta_cumulative(vartheta, 1.0 - t)?;
        }
    }
    Ok(2.0 * PI * s)
}

/// Renewal time step: 1/16, coarsened so the grid has at most 40000 points.
pub fn default_time_step(delta2: f64) -> f64 {
    (1.0 / 16.0f64).max(1.0 / delta2 / 40_000.0)
}

/// E[(u^δ[f])²] − (∫f)² = E[f(x)f(y)/(q(x)q(y)) (exp(β² ∫ ρ(B)ρ(B') ds) − 1)]
/// over two independent paths started at x/δ, y/δ with x, y ~ q; no noise
/// is sampled and no overlap is approximated.
pub fn she_replica_second_moment(rho: &Mollifier, f: &TestFn, window: &ContinuumWindow, steps: usize, pairs: usize, seed: u64, workers: Option<usize>) -> Result<MCEstimate> {
    if steps == 0 || pairs < 2 {
        return Err(Error::InvalidInput("need steps > 0 and at least 2 pairs".into()));
    }
    let sampler = StartSampler::new(f)?;
    let top = 1.0 / window.delta2;
    let dt = top / steps as f64;
    let sdt = dt.sqrt();
    let delta = window.delta2.sqrt();
    let r = rho.radius;
    let key = StreamKey::new(seed, domain::PATH);
    let t0 = std::time::Instant::now();
    let xs = run_indexed(pairs, workers, |p| {
        let mut g = key.stream(p);
        let (x, wx) = sampler.sample(f, &mut g);
        let (y, wy) = sampler.sample(f, &mut g);
        let (mut b, mut c) = (x / delta, y / delta);
        let mut acc = 0.0;
        let mut i = 0;
        while i < steps {
            let far = b.abs().max(c.abs()) - r;
            if far > SKIP_SIGMAS * sdt {
                let k = (((far / SKIP_SIGMAS).powi(2) / dt) as usize).clamp(1, steps - i);
                let s = (k as f64).sqrt() * sdt;
                b += s * rng::std_normal(&mut g);
                c += s * rng::std_normal(&mut g);
                i += k;
                continue;
            }
            acc += rho.density(b) * rho.density(c);
            b += sdt * rng::std_normal(&mut g);
            c += sdt * rng::std_normal(&mut g);
            i += 1;
        }
        wx * wy * (window.beta2 * acc * dt).exp_m1()
    });
    MCEstimate::from_samples(&xs, seed, t0.elapsed().as_secs_f64())
}

/// Piecewise-constant proposal for start points, proportional to |f| cell averages.
struct StartSampler {
    lo: f64,
    width: f64,
    cdf: Vec<f64>,
    dens: Vec<f64>,
}

impl StartSampler {
    fn new(f: &TestFn) -> Result<Self> {
        let (lo, hi) = f.bounded_support()?;
        let cells = 4096;
        let width = (hi - lo) / cells as f64;
        let mass: Vec<f64> = (0..cells)
            .map(|k| {
                let (a, b) = (lo + k as f64 * width, lo + (k + 1) as f64 * width);
                quad::over_breaks(|x| f.eval(x).abs(), &f.breaks(a, b), 8)
            })
            .collect();
        let total: f64 = mass.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("test function vanishes".into()));
        }
        let mut cdf = Vec::with_capacity(cells);
        let mut c = 0.0;
        for m in &mass {
            c += m / total;
            cdf.push(c);
        }
        let dens = mass.iter().map(|m| m / total / width).collect();
        Ok(Self { lo, width, cdf, dens })
    }

    /// (x, f(x)/q(x))
    fn sample<R: Rng + ?Sized>(&self, f: &TestFn, rng: &mut R) -> (f64, f64) {
        loop {
            let u: f64 = rng.random();
            let k = self.cdf.partition_point(|c| *c < u).min(self.cdf.len() - 1);
            if self.dens[k] == 0.0 {
                continue;
            }
            let x = self.lo + (k as f64 + rng.random::<f64>()) * self.width;
            return (x, f.eval(x) / self.dens[k]);
        }
    }
}

/// How the path expectation E_B[·] is evaluated for one noise realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    /// Average over `n_paths` sampled Brownian paths.
    #[default]
    Paths,
    /// Backward Kolmogorov equation on a graded spatial grid; the same
    /// expectation without path sampling.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheMcConfig {
    pub delta2: f64,
    pub theta: f64,
    /// Time step in the rescaled clock; default δ^{-2}/2^16.
    pub dt: Option<f64>,
    pub n_paths: usize,
    pub n_noise: usize,
    pub seed: u64,
    #[serde(default)]
    pub inner: InnerSolver,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheMcReport {
    /// Over noises of the inner expectation of u^δ[f].
    pub estimate: MCEstimate,
    /// Spread of the noise means minus the mean inner variance / n_paths.
    pub variance_corrected: f64,
    pub inner_variance: f64,
    pub inner: InnerSolver,
    pub beta: f64,
    pub dt: f64,
    pub steps: usize,
    pub n_paths: usize,
    /// Largest log-weight seen (paths only).
    pub max_log_weight: f64,
}

/// Paths are advanced several grid steps at once while farther than eight
/// standard deviations of the jump from supp ρ; every grid time inside the
/// strip is visited.
const SKIP_SIGMAS: f64 = 8.0;
const MAX_LOG_WEIGHT: f64 = 700.0;

struct MollifiedNoise<'a> {
    rho: &'a Mollifier,
    beta: f64,
    beta2: f64,
    delta: f64,
    dt: f64,
    steps: usize,
}

impl MollifiedNoise<'_> {
    fn paths(&self, f: &TestFn, sampler: &StartSampler, dw: &[f64], pk: StreamKey, n_paths: usize, noise: u64) -> Result<(f64, f64, f64)> {
        let sdt = self.dt.sqrt();
        let r = self.rho.radius;
        let mut vals = Vec::with_capacity(n_paths);
        let mut worst = f64::NEG_INFINITY;
        for p in 0..n_paths {
            let mut pr = pk.stream(p as u64);
            let (x, wx) = sampler.sample(f, &mut pr);
            let mut b = x / self.delta;
            let mut lw = 0.0;
            let mut i = 0;
            while i < self.steps {
                let d = b.abs() - r;
                if d > SKIP_SIGMAS * sdt {
                    let k = (((d / SKIP_SIGMAS).powi(2) / self.dt) as usize).clamp(1, self.steps - i);
                    b += (k as f64).sqrt() * sdt * rng::std_normal(&mut pr);
                    i += k;
                    continue;
                }
                let v = self.rho.density(b);
                if v != 0.0 {
                    lw += self.beta * v * dw[i] - 0.5 * self.beta2 * v * v * self.dt;
                }
                b += sdt * rng::std_normal(&mut pr);
                i += 1;
            }
            if !lw.is_finite() || lw > MAX_LOG_WEIGHT {
                return Err(Error::WeightOverflow { sample: noise as usize * n_paths + p, log_weight: lw });
            }
            worst = worst.max(lw);
            vals.push(wx * lw.exp());
        }
        let (m, v) = mean_var(&vals);
        Ok((m, v, worst))
    }

    /// v(s, y) = E[exp(β ∫_s^T ρ(B) dW − ½β² ∫_s^T ρ(B)²) | B_s = y], stepped
    /// backward from v(T) = 1 by Crank–Nicolson heat steps followed by the
    /// exact multiplicative factor at the left point. v is even in y.
    fn grid(&self, f: &TestFn, grid: &HalfLineGrid, dw: &[f64]) -> f64 {
        let x = &grid.x;
        let n = x.len();
        let rho: Vec<f64> = x.iter().map(|&y| self.rho.density(y)).collect();
        let active = rho.iter().rposition(|&r| r != 0.0).map_or(0, |k| k + 1);
        // tridiagonal ½∂² with Neumann at 0 and v = 1 at the far end
        let mut lo = vec![0.0; n];
        let mut di = vec![0.0; n];
        let mut up = vec![0.0; n];
        for j in 0..n - 1 {
            let hp = x[j + 1] - x[j];
            let hm = if j == 0 { hp } else { x[j] - x[j - 1] };
            let c = 1.0 / (hp + hm);
            let (a, b) = (c / hm, c / hp);
            lo[j] = if j == 0 { 0.0 } else { a };
            up[j] = if j == 0 { a + b } else { b };
            di[j] = -(a + b);
        }
        let h = 0.5 * self.dt;
        let mut v = vec![1.0; n];
        let mut rhs = vec![0.0; n];
        let mut cp = vec![0.0; n];
        for i in (0..self.steps).rev() {
            // (I − hA) v⁺ = (I + hA) v
            for j in 0..n - 1 {
                let left = if j == 0 { 0.0 } else { lo[j] * v[j - 1] };
                rhs[j] = v[j] + h * (left + di[j] * v[j] + up[j] * v[j + 1]);
            }
            rhs[n - 1] = 1.0;
            // Thomas
            let mut b0 = 1.0 - h * di[0];
            cp[0] = -h * up[0] / b0;
            rhs[0] /= b0;
            for j in 1..n {
                let (a, b, c) = if j == n - 1 { (0.0, 1.0, 0.0) } else { (-h * lo[j], 1.0 - h * di[j], -h * up[j]) };
                b0 = b - a * cp[j - 1];
                cp[j] = c / b0;
                rhs[j] = (rhs[j] - a * rhs[j - 1]) / b0;
            }
            v[n - 1] = rhs[n - 1];
            for j in (0..n - 1).rev() {
                v[j] = rhs[j] - cp[j] * v[j + 1];
            }
            let w = dw[i];
            for j in 0..active {
                let r = rho[j];
                if r != 0.0 {
                    v[j] *= (self.beta * r * w - 0.5 * self.beta2 * r * r * self.dt).exp();
                }
            }
        }
        // ∫f + δ ∫₀^M (f(δy) + f(−δy)) (v − 1) dy, trapezoid
        let g = |j: usize| (f.eval(self.delta * x[j]) + f.eval(-self.delta * x[j])) * (v[j] - 1.0);
        let mut s = 0.0;
        for j in 0..n - 1 {
            s += 0.5 * (x[j + 1] - x[j]) * (g(j) + g(j + 1));
        }
        grid.integral + self.delta * s
    }
}

/// Nodes on [0, M]: spacing `h0` on the strip, then geometric growth.
struct HalfLineGrid {
    x: Vec<f64>,
    integral: f64,
}

impl HalfLineGrid {
    fn new(radius: f64, horizon: f64, h0: f64, integral: f64) -> Self {
        let top = radius + 8.0 * horizon.sqrt();
        let hmax = (horizon.sqrt() / 25.0).max(h0);
        let mut x = vec![0.0];
        let mut h = h0;
        while *x.last().unwrap() < top {
            let last = *x.last().unwrap();
            if last > 1.5 * radius {
                h = (h * 1.03).min(hmax);
            }
            x.push(last + h);
        }
        Self { x, integral }
    }
}

/// Feynman–Kac Monte Carlo for u^δ[f] = ∫ f(x) u^δ(1,x) dx with η ≡ 1: for
/// each noise grid ΔW the inner expectation over paths B started at x/δ of
/// exp(β Σ ρ(B_{t_i}) ΔW_i − ½ β² Σ ρ(B_{t_i})² Δt) (left-point sums) is
/// evaluated by `cfg.inner`; mean and spread are taken over noises.
pub fn she_mc(rho: &Mollifier, f: &TestFn, cfg: &SheMcConfig, workers: Option<usize>) -> Result<SheMcReport> {
    if cfg.n_noise < 2 || (cfg.inner == InnerSolver::Paths && cfg.n_paths < 2) {
        return Err(Error::InvalidInput("need at least 2 paths and 2 noises".into()));
    }
    if !(cfg.delta2 > 0.0 && cfg.delta2 < 1.0) {
        return Err(Error::InvalidInput(format!("δ² must lie in (0, 1), got {}", cfg.delta2)));
    }
    let top = 1.0 / cfg.delta2;
    let l = top.ln();
    let beta2 = 2.0 * PI / l + cfg.theta / (l * l);
    if !(beta2 >= 0.0) {
        return Err(Error::Domain(format!("β_δ² = {beta2} < 0")));
    }
    let steps = match cfg.dt {
        Some(dt) if dt > 0.0 => (top / dt).round().max(1.0) as usize,
        Some(dt) => return Err(Error::InvalidInput(format!("Δt must be positive, got {dt}"))),
        None => 1 << 16,
    };
    let dt = top / steps as f64;
    let stiff = beta2 * rho.sup * rho.sup * dt;
    if stiff > 0.05 {
        return Err(Error::InvalidInput(format!("Δt too large: β²·sup ρ²·Δt = {stiff:.3e} > 0.05")));
    }
    let model = MollifiedNoise { rho, beta: beta2.sqrt(), beta2, delta: cfg.delta2.sqrt(), dt, steps };
    let t0 = std::time::Instant::now();
    let sampler = match cfg.inner {
        InnerSolver::Paths => Some(StartSampler::new(f)?),
        InnerSolver::Grid => None,
    };
    let grid = match cfg.inner {
        InnerSolver::Grid => Some(HalfLineGrid::new(rho.radius, top, 0.05 * rho.radius, f.integral()?)),
        InnerSolver::Paths => None,
    };
    let rows = run_indexed(cfg.n_noise, workers, |noise| -> Result<(f64, f64, f64)> {
        let mut nr = StreamKey::new(cfg.seed, domain::NOISE).stream(noise);
        let sdt = dt.sqrt();
        let dw: Vec<f64> = (0..steps).map(|_| sdt * rng::std_normal(&mut nr)).collect();
        match (&sampler, &grid) {
            (Some(s), _) => model.paths(f, s, &dw, StreamKey::new(cfg.seed, domain::PATH).child(noise), cfg.n_paths, noise),
            (_, Some(g)) => Ok((model.grid(f, g, &dw), 0.0, 0.0)),
            _ => unreachable!(),
        }
    });
    let rows: Vec<(f64, f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
    let means: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let inner = rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64;
    let n_paths = if cfg.inner == InnerSolver::Paths { cfg.n_paths } else { 0 };
    let estimate = MCEstimate::from_samples(&means, cfg.seed, t0.elapsed().as_secs_f64())?;
    Ok(SheMcReport {
        estimate,
        variance_corrected: if n_paths > 0 { estimate.variance - inner / n_paths as f64 } else { estimate.variance },
        inner_variance: inner,
        inner: cfg.inner,
        beta: model.beta,
        dt,
        steps,
        n_paths,
        max_log_weight: if n_paths > 0 { rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max) } else { f64::NAN },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump() -> Mollifier {
        Mollifier::bump().unwrap()
    }

    #[test]
    fn bump_passes_checks() {
        let m = bump();
        assert!(m.check().unwrap().passes(1e-10));
        let direct = QuadratureScheme::with_tol(1e-15, 1e-13).integrate(|x| m.density(x) * m.density(0.7 - x), -0.3, 1.0).unwrap().value;
        assert!((m.self_conv(0.7) - direct).abs() < 1e-12);
        assert_eq!(m.self_conv(2.5), 0.0);
    }

    #[test]
    fn r_of_t_matches_tensor_quadrature() {
        let m = bump();
        let t = 5.0;
        // ∫∫∫∫ ρ(x')ρ(y') g_t(x−x') g_t(y−y') ρ(x)ρ(y) on a tensor grid
        let rule = quad::gauss_legendre(20);
        let mut pts = vec![];
        for k in 0..4 {
            let (a, b) = (-1.0 + 0.5 * k as f64, -0.5 + 0.5 * k as f64);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let y = 0.5 * (a + b) + 0.5 * (b - a) * x;
                pts.push((y, 0.5 * (b - a) * w * m.density(y)));
            }
        }
        let mut s = 0.0;
        for &(x, wx) in &pts {
            for &(xp, wxp) in &pts {
                let gx = heat_kernel(t, x - xp) * wx * wxp;
                for &(y, wy) in &pts {
                    for &(yp, wyp) in &pts {
                        s += gx * heat_kernel(t, y - yp) * wy * wyp;
                    }
                }
            }
        }
        let r = r_of_t(&m, t).unwrap();
        assert!((r - s).abs() < 1e-6 * s, "{r} vs {s}");
        for t in [1e-6, 0.1, 1.0, 50.0] {
            assert!(r_of_t(&m, t).unwrap() <= m.sup * m.sup);
        }
        let trend: Vec<f64> = [10.0, 100.0, 1000.0].iter().map(|&t| (2.0 * PI * t * r_of_t(&m, t).unwrap() - 1.0).abs()).collect();
        assert!(trend[0] > trend[1] && trend[1] > trend[2], "{trend:?}");
    }

    #[test]
    fn log_energy_matches_four_dimensional_quadrature() {
        let m = bump();
        let e = log_energy(&m);
        // outer (x, y) tensor grid; inner (x', y') in polar coordinates about (x, y)
        let rule = quad::gauss_legendre(12);
        let mut pts = vec![];
        for k in 0..4 {
            let (a, b) = (-1.0 + 0.5 * k as f64, -0.5 + 0.5 * k as f64);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let y = 0.5 * (a + b) + 0.5 * (b - a) * x;
                pts.push((y, 0.5 * (b - a) * w * m.density(y)));
            }
        }
        let inner = |x: f64, y: f64| -> f64 {
            let ang = |phi: f64| -> f64 {
                let (c, s) = (phi.cos(), phi.sin());
                let tx = if c > 0.0 { (1.0 - x) / c } else if c < 0.0 { (-1.0 - x) / c } else { f64::INFINITY };
                let ty = if s > 0.0 { (1.0 - y) / s } else if s < 0.0 { (-1.0 - y) / s } else { f64::INFINITY };
                let rmax = tx.min(ty);
                let br = quad::graded_breaks(0.0, rmax, 16);
                quad::over_breaks(|r| m.density(x + r * c) * m.density(y + r * s) * (-2.0 * r.ln()) * r, &br, 10)
            };
            quad::composite(ang, 0.0, 2.0 * PI, 24, 10)
        };
        let mut s = 0.0;
        for &(x, wx) in &pts {
            for &(y, wy) in &pts {
                s += wx * wy * inner(x, y);
            }
        }
        assert!((e - s).abs() < 1e-5, "{e} vs {s}");
    }

    #[test]
    fn vartheta_is_linear_in_theta() {
        let m = bump();
        let a = vartheta_from_theta(0.0, &m);
        let b = vartheta_from_theta(2.0 * PI, &m);
        assert!((b - a - 1.0).abs() < 1e-14);
        let c = vartheta_from_theta(-1.3, &m);
        assert!((a - c - 1.3 / (2.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn renewal_u_matches_series() {
        // constant kernel r ≡ c: U(T) = exp(β² c T)
        let (c, b2, h) = (0.3, 0.5, 1e-3);
        let r = vec![c; 2001];
        let u = renewal_u(&r, b2, h);
        assert!((u[2000] - (b2 * c * 2.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn k1_term_matches_gaussian_closed_form() {
        let m = bump();
        let w = continuum_window(&m, 1e-2, 0.0).unwrap();
        let f = TestFn::gaussian_bump(0.0, 1.0, 1.0);
        let rep = she_second_moment_semianalytic(&m, &w, &f, 0.5, None).unwrap();
        let d = w.delta2.sqrt();
        // a(t) = (∫ ρ(x) N(0, 1+t)(δx) dx)²
        let a = |t: f64| -> f64 {
            let s = QuadratureScheme::with_tol(1e-15, 1e-13).integrate(|x| m.density(x) * heat_kernel(1.0 + t, d * x), -1.0, 1.0).unwrap().value;
            s * s
        };
        let k1 = w.beta2 * QuadratureScheme::with_tol(1e-14, 1e-12).integrate(a, 0.0, 1.0).unwrap().value;
        assert!((rep.k1_term - k1).abs() < 1e-9 * k1, "{} vs {k1}", rep.k1_term);
        assert!(rep.variance > rep.k1_term);
        let zero = she_second_moment_semianalytic(&m, &w, &TestFn::zero(), 0.5, None).unwrap();
        assert_eq!(zero.variance, 0.0);
    }

    #[test]
    fn beta_zero_samples_are_the_integral() {
        let m = bump();
        let f = TestFn::gaussian_bump(0.0, 1.0, 1.0);
        let l = 100f64.ln();
        let cfg = SheMcConfig { delta2: 1e-2, theta: -2.0 * PI * l, dt: Some(0.05), n_paths: 20, n_noise: 4, seed: 3, inner: InnerSolver::Paths };
        let rep = she_mc(&m, &f, &cfg, None).unwrap();
        assert_eq!(rep.beta, 0.0);
        assert!((rep.estimate.mean - 1.0).abs() < 0.02, "{}", rep.estimate.mean);
        let a = she_mc(&m, &f, &SheMcConfig { theta: 0.0, ..cfg }, Some(1)).unwrap();
        let b = she_mc(&m, &f, &SheMcConfig { theta: 0.0, ..cfg }, Some(3)).unwrap();
        assert_eq!(a.estimate.mean.to_bits(), b.estimate.mean.to_bits());
        assert!(she_mc(&m, &f, &SheMcConfig { dt: Some(5.0), theta: 0.0, ..cfg }, None).is_err());
    }

    fn weak_window(m: &Mollifier, beta2: f64) -> ContinuumWindow {
        let l = 10f64.ln();
        continuum_window(m, 0.1, (beta2 - 2.0 * PI / l) * l * l).unwrap()
    }

    #[test]
    fn grid_and_paths_agree_on_shared_noise() {
        let m = bump();
        let f = TestFn::gaussian_bump(0.0, 1.0, 1.0);
        let w = weak_window(&m, 1.0);
        let cfg = SheMcConfig { delta2: 0.1, theta: w.theta, dt: Some(10.0 / 256.0), n_paths: 20_000, n_noise: 4, seed: 11, inner: InnerSolver::Paths };
        let p = she_mc(&m, &f, &cfg, None).unwrap();
        let g = she_mc(&m, &f, &SheMcConfig { inner: InnerSolver::Grid, ..cfg }, None).unwrap();
        let se = (p.inner_variance / (cfg.n_paths * cfg.n_noise) as f64).sqrt();
        assert!((p.estimate.mean - g.estimate.mean).abs() < 4.0 * se, "{} vs {} ({se})", p.estimate.mean, g.estimate.mean);
    }

    #[test]
    fn replica_moment_matches_renewal_at_weak_coupling() {
        let m = bump();
        let f = TestFn::gaussian_bump(0.0, 1.0, 1.0);
        let w = weak_window(&m, 0.3);
        let s = she_second_moment_semianalytic(&m, &w, &f, 0.05, None).unwrap();
        let r = she_replica_second_moment(&m, &f, &w, 1024, 100_000, 5, None).unwrap();
        assert!(r.within(s.variance, 4.0) || (r.mean - s.variance).abs() < 0.03 * s.variance, "{} ± {} vs {}", r.mean, r.stderr, s.variance);
    }
}
