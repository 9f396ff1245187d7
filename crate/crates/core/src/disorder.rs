//! Disorder laws, log-moment generating functions, the centered field ζ and
//! the critical-window solver.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, QuadratureScheme};
use crate::rng::{self, Rng, StreamKey};

/// Config-level description of a disorder law.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisorderSpec {
    #[default]
    Gaussian,
    Rademacher,
    /// Uniform on [−√3, √3].
    Uniform,
    /// Piecewise-linear density through (x, f) points.
    Tabulated {
        points: Vec<(f64, f64)>,
        beta0: f64,
    },
}

impl DisorderSpec {
    pub fn build(&self) -> Result<DisorderLaw> {
        match self {
            DisorderSpec::Gaussian => Ok(DisorderLaw::gaussian()),
            DisorderSpec::Rademacher => Ok(DisorderLaw::rademacher()),
            DisorderSpec::Uniform => DisorderLaw::uniform(),
            DisorderSpec::Tabulated { points, beta0 } => DisorderLaw::tabulated("tabulated", points, *beta0),
        }
    }
}

#[derive(Clone)]
pub struct Custom {
    pub name: String,
    density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub support: (f64, f64),
    pub breaks: Vec<f64>,
    pub beta0: f64,
    /// Inverse CDF on an equispaced probability grid.
    quantiles: Vec<f64>,
}

#[derive(Clone)]
pub enum DisorderLaw {
    Gaussian,
    Rademacher,
    Custom(Custom),
}

impl fmt::Debug for DisorderLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DisorderLaw({})", self.name())
    }
}

const QUANTILE_GRID: usize = 1 << 14;

impl DisorderLaw {
    pub fn gaussian() -> Self {
        DisorderLaw::Gaussian
    }

    pub fn rademacher() -> Self {
        DisorderLaw::Rademacher
    }

    pub fn uniform() -> Result<Self> {
        let a = 3f64.sqrt();
        Self::custom("uniform", move |_| 0.5 / a, (-a, a), vec![], 40.0)
    }

    /// Density given as a closure on a bounded support. Checks mass 1, mean 0
    /// and variance 1 to 1e-8.
    pub fn custom<F>(name: &str, density: F, support: (f64, f64), breaks: Vec<f64>, beta0: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mut br = vec![support.0, support.1];
        br.extend(breaks.iter().copied().filter(|x| *x > support.0 && *x < support.1));
        br.sort_by(f64::total_cmp);
        br.dedup();
        let scheme = QuadratureScheme::with_tol(1e-15, 1e-14);
        let moment = |k: i32| -> Result<f64> {
            let mut s = 0.0;
            for w in br.windows(2) {
                s += scheme.integrate(|x| x.powi(k) * density(x), w[0], w[1])?.value;
            }
            Ok(s)
        };
        let (m0, m1, m2) = (moment(0)?, moment(1)?, moment(2)?);
        if (m0 - 1.0).abs() > 1e-8 || m1.abs() > 1e-8 || (m2 - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidInput(format!("{name}: need mass 1, mean 0, variance 1 (got {m0}, {m1}, {m2})")));
        }
        // CDF on a fine grid, then invert by linear interpolation.
        let grid = 1 << 15;
        let (a, b) = support;
        let h = (b - a) / grid as f64;
        let mut xs = Vec::with_capacity(grid + 1);
        let mut cdf = Vec::with_capacity(grid + 1);
        let mut acc = 0.0;
        xs.push(a);
        cdf.push(0.0);
        for i in 0..grid {
            let lo = a + h * i as f64;
            acc += quad::gl(&density, lo, lo + h, 4);
            xs.push(lo + h);
            cdf.push(acc);
        }
        let total = acc;
        let mut quantiles = Vec::with_capacity(QUANTILE_GRID + 1);
        let mut j = 0;
        for k in 0..=QUANTILE_GRID {
            let target = total * k as f64 / QUANTILE_GRID as f64;
            while j + 1 < cdf.len() - 1 && cdf[j + 1] < target {
                j += 1;
            }
            let (c0, c1) = (cdf[j], cdf[j + 1]);
            let frac = if c1 > c0 { ((target - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.0 };
            quantiles.push(xs[j] + frac * h);
        }
        Ok(DisorderLaw::Custom(Custom { name: name.into(), density: Arc::new(density), support, breaks: br, beta0, quantiles }))
    }

    /// Piecewise-linear density through the given points.
    pub fn tabulated(name: &str, points: &[(f64, f64)], beta0: f64) -> Result<Self> {
        if points.len() < 2 || points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInput("tabulated density needs increasing x with ≥ 2 points".into()));
        }
        let pts = points.to_vec();
        let support = (pts[0].0, pts[pts.len() - 1].0);
        let breaks: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let f = move |x: f64| {
            let i = pts.partition_point(|p| p.0 <= x);
            if i == 0 || i == pts.len() {
                return if i == pts.len() && x == pts[pts.len() - 1].0 { pts[pts.len() - 1].1 } else { 0.0 };
            }
            let (x0, f0) = pts[i - 1];
            let (x1, f1) = pts[i];
            f0 + (f1 - f0) * (x - x0) / (x1 - x0)
        };
        Self::custom(name, f, support, breaks, beta0)
    }

    pub fn name(&self) -> &str {
        match self {
            DisorderLaw::Gaussian => "gaussian",
            DisorderLaw::Rademacher => "rademacher",
            DisorderLaw::Custom(c) => &c.name,
        }
    }

    /// λ is finite on (−β₀, β₀).
    pub fn beta0(&self) -> f64 {
        match self {
            DisorderLaw::Custom(c) => c.beta0,
            _ => f64::INFINITY,
        }
    }

    /// λ(β) = log E e^{βω}.
    pub fn log_mgf(&self, beta: f64) -> Result<f64> {
        if beta.abs() >= self.beta0() {
            return Err(Error::Domain(format!("β = {beta} outside (−β₀, β₀) with β₀ = {}", self.beta0())));
        }
        Ok(match self {
            DisorderLaw::Gaussian => 0.5 * beta * beta,
            DisorderLaw::Rademacher => {
                let a = beta.abs();
                a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
            }
            DisorderLaw::Custom(c) => {
                if beta == 0.0 {
                    return Ok(0.0);
                }
                custom_log_mgf(c, beta, 1)?
            }
        })
    }

    /// σ²(β) = e^{λ(2β) − 2λ(β)} − 1 = Var(e^{βω − λ(β)}).
    pub fn sigma2(&self, beta: f64) -> Result<f64> {
        Ok(match self {
            DisorderLaw::Gaussian => (beta * beta).exp_m1(),
            _ => (self.log_mgf(2.0 * beta)? - 2.0 * self.log_mgf(beta)?).exp_m1(),
        })
    }

    /// Cumulants κ₂, κ₃, κ₄.
    pub fn cumulants(&self) -> Result<(f64, f64, f64)> {
        Ok(match self {
            DisorderLaw::Gaussian => (1.0, 0.0, 0.0),
            DisorderLaw::Rademacher => (1.0, 0.0, -2.0),
            DisorderLaw::Custom(c) => {
                let scheme = QuadratureScheme::with_tol(1e-15, 1e-14);
                let mut m = [0.0; 5];
                for (k, mk) in m.iter_mut().enumerate() {
                    for w in c.breaks.windows(2) {
                        *mk += scheme.integrate(|x| x.powi(k as i32) * (c.density)(x), w[0], w[1])?.value;
                    }
                }
                (m[2], m[3], m[4] - 3.0 * m[2] * m[2])
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DisorderLaw::Gaussian => rng::std_normal(rng),
            DisorderLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            DisorderLaw::Custom(c) => {
                let u: f64 = rng.random::<f64>() * QUANTILE_GRID as f64;
                let i = (u as usize).min(QUANTILE_GRID - 1);
                let f = u - i as f64;
                c.quantiles[i] + f * (c.quantiles[i + 1] - c.quantiles[i])
            }
        }
    }
}

fn custom_log_mgf(c: &Custom, beta: f64, refine: usize) -> Result<f64> {
    // shift by the maximum exponent for stability
    let top = if beta > 0.0 { beta * c.support.1 } else { beta * c.support.0 };
    let scheme = QuadratureScheme { order: 20, initial_panels: 2 * refine, max_panels: 1 << 16, abs_tol: 1e-300, rel_tol: 1e-14 };
    let mut s = 0.0;
    for w in c.breaks.windows(2) {
        s += scheme.integrate(|x| (beta * x - top).exp() * (c.density)(x), w[0], w[1])?.value;
    }
    Ok(top + s.ln())
}

/// λ for a custom law with the integration panels multiplied by `refine`.
pub fn log_mgf_refined(law: &DisorderLaw, beta: f64, refine: usize) -> Result<f64> {
    match law {
        DisorderLaw::Custom(c) => custom_log_mgf(c, beta, refine),
        other => other.log_mgf(beta),
    }
}

/// Solved critical-window parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalWindow {
    pub n: usize,
    pub vartheta: f64,
    pub r_n: f64,
    pub target: f64,
    pub sigma2: f64,
    pub beta: f64,
    /// σ_N² R_N.
    pub lambda_n: f64,
    pub residual: f64,
}

/// Solves e^{λ(2β)−2λ(β)} − 1 = (1/R_N)(1 + ϑ/log N) for β > 0.
pub fn solve_critical_beta(law: &DisorderLaw, n: usize, vartheta: f64, r_n: f64) -> Result<CriticalWindow> {
    if n < 3 {
        return Err(Error::InvalidInput("critical window needs N ≥ 3".into()));
    }
    let target = (1.0 + vartheta / (n as f64).ln()) / r_n;
    if !(target > 0.0) {
        return Err(Error::Unattainable(format!("target σ² = {target} is not positive")));
    }
    let f = |b: f64| -> Result<f64> { Ok(law.sigma2(b)? - target) };
    let cap = 0.5 * law.beta0();
    let mut hi = 1.0f64.min(0.5 * cap);
    while f(hi)? < 0.0 {
        hi *= 2.0;
        if hi >= cap || hi > 1e3 {
            return Err(Error::Unattainable(format!("σ² = {target} not reached for β < {}", cap.min(1e3))));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut beta = if f(lo)?.abs() < f(hi)?.abs() { lo } else { hi };
    // Newton polish with a centered-difference slope
    for _ in 0..3 {
        let r = f(beta)?;
        let h = 1e-6 * beta.max(1e-6);
        let d = (f(beta + h)? - f(beta - h)?) / (2.0 * h);
        if d <= 0.0 {
            break;
        }
        let nb = beta - r / d;
        if f(nb)?.abs() < r.abs() {
            beta = nb;
        } else {
            break;
        }
    }
    let sigma2 = law.sigma2(beta)?;
    Ok(CriticalWindow { n, vartheta, r_n, target, sigma2, beta, lambda_n: sigma2 * r_n, residual: (sigma2 - target).abs() })
}

/// One disorder realization: ζ_n = e^{βω_n − λ(β)} − 1 for n = 0..len.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosField {
    pub zeta: Vec<f64>,
    pub law: String,
    pub beta: f64,
    pub seed: u64,
    pub index: u64,
}

impl ChaosField {
    pub fn zeros(len: usize) -> Self {
        Self { zeta: vec![0.0; len], law: "none".into(), beta: 0.0, seed: 0, index: 0 }
    }

    pub fn from_zeta(zeta: Vec<f64>) -> Self {
        Self { zeta, law: "given".into(), beta: f64::NAN, seed: 0, index: 0 }
    }

    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }
}

/// Samples ω_0..ω_{len−1} from the stream `index` of (seed, disorder domain).
pub fn zeta_field(law: &DisorderLaw, beta: f64, len: usize, seed: u64, index: u64) -> Result<ChaosField> {
    let lam = law.log_mgf(beta)?;
    let mut r = StreamKey::new(seed, rng::domain::DISORDER).stream(index);
    let zeta = (0..len).map(|_| (beta * law.sample(&mut r) - lam).exp_m1()).collect();
    Ok(ChaosField { zeta, law: law.name().into(), beta, seed, index })
}

/// ζ built from a given ω sequence.
pub fn zeta_from_omega(law: &DisorderLaw, beta: f64, omega: &[f64]) -> Result<Vec<f64>> {
    let lam = law.log_mgf(beta)?;
    Ok(omega.iter().map(|w| (beta * w - lam).exp_m1()).collect())
}
