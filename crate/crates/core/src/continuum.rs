//! Heat kernel, Brownian first-hit and no-hit densities, test functions,
//! Gaussian pairings and the deterministic no-hit correction sE.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, QuadratureScheme};
use crate::rng::{self, Rng, StreamKey};
use crate::special::{double_factorial_odd, SQRT_2PI};
use crate::stats::MCEstimate;

/// g_t(x) = exp(−x²/2t)/√(2πt), with g_0(0) = 1 and g_0(x) = 0 otherwise.
pub fn heat_kernel(t: f64, x: f64) -> f64 {
    if t <= 0.0 {
        return if x == 0.0 { 1.0 } else { 0.0 };
    }
    (-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// Q(x,s) = |x| e^{−x²/2s} / (√(2π) s^{3/2}).
pub fn bm_first_hit(x: f64, s: f64) -> f64 {
    debug_assert!(s > 0.0);
    x.abs() * (-x * x / (2.0 * s)).exp() / (SQRT_2PI * s.powf(1.5))
}

/// Q̄(x,y) = g_1(y−x) − g_1(y+x) when xy > 0, else 0.
pub fn bm_no_hit(x: f64, y: f64) -> f64 {
    if x * y > 0.0 {
        heat_kernel(1.0, y - x) - heat_kernel(1.0, y + x)
    } else {
        0.0
    }
}

/// ∫ |x|^{2k+1} Q(x,s) dx by quadrature.
pub fn hitting_moment(k: usize, s: f64) -> Result<f64> {
    let e = (2 * k + 1) as i32;
    let top = s.sqrt() * (((2 * k + 2) as f64).sqrt() + 14.0);
    let q = QuadratureScheme::with_tol(0.0, 1e-14).integrate(|x| x.powi(e) * bm_first_hit(x, s), 0.0, top)?;
    Ok(2.0 * q.value)
}

/// Named test-function catalog, as used in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFnSpec {
    /// mass · N(center, width²) density, cut at nine widths.
    GaussianBump {
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default = "one")]
        mass: f64,
    },
    /// height · max(0, 1 − |x − center|/half_width).
    Tent {
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        half_width: f64,
        #[serde(default = "one")]
        height: f64,
    },
    /// Smooth plateau equal to 1 on [a + ramp, b − ramp], supported on [a, b].
    IndicatorSmooth {
        #[serde(default = "minus_one")]
        a: f64,
        #[serde(default = "one")]
        b: f64,
        #[serde(default = "quarter")]
        ramp: f64,
    },
    Zero,
}

fn one() -> f64 {
    1.0
}
fn minus_one() -> f64 {
    -1.0
}
fn quarter() -> f64 {
    0.25
}

impl Default for TestFnSpec {
    fn default() -> Self {
        TestFnSpec::GaussianBump { center: 0.0, width: 1.0, mass: 1.0 }
    }
}

impl TestFnSpec {
    pub fn build(&self) -> Result<TestFn> {
        match *self {
            TestFnSpec::GaussianBump { center, width, mass } => {
                if width <= 0.0 {
                    return Err(Error::InvalidInput("gaussian_bump width must be positive".into()));
                }
                Ok(TestFn::gaussian_bump(center, width, mass))
            }
            TestFnSpec::Tent { center, half_width, height } => {
                if half_width <= 0.0 {
                    return Err(Error::InvalidInput("tent half_width must be positive".into()));
                }
                Ok(TestFn::tent(center, half_width, height))
            }
            TestFnSpec::IndicatorSmooth { a, b, ramp } => {
                if !(b > a && ramp > 0.0 && 2.0 * ramp <= b - a) {
                    return Err(Error::InvalidInput("indicator_smooth needs a < b and 0 < 2 ramp ≤ b − a".into()));
                }
                Ok(TestFn::indicator_smooth(a, b, ramp))
            }
            TestFnSpec::Zero => Ok(TestFn::zero()),
        }
    }
}

pub const GAUSSIAN_CUT: f64 = 9.0;

/// A real test function with declared support and sup norm.
#[derive(Clone)]
pub struct TestFn {
    pub name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Bounded support, or None for "unbounded".
    pub support: Option<(f64, f64)>,
    pub sup_norm: f64,
    /// Points of non-smoothness, used as quadrature breakpoints.
    pub kinks: Vec<f64>,
}

impl fmt::Debug for TestFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFn").field("name", &self.name).field("support", &self.support).field("sup_norm", &self.sup_norm).finish()
    }
}

impl TestFn {
    /// Wraps a closure. The sup norm is taken from a dense sample of the
    /// support (or of [-50, 50] when unbounded), padded slightly.
    pub fn from_fn<F>(name: impl Into<String>, support: Option<(f64, f64)>, kinks: Vec<f64>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let (lo, hi) = support.unwrap_or((-50.0, 50.0));
        let n = 20_000;
        let mut m: f64 = 0.0;
        for i in 0..=n {
            m = m.max(f(lo + (hi - lo) * i as f64 / n as f64).abs());
        }
        for &k in &kinks {
            m = m.max(f(k).abs());
        }
        Self::with_sup(name, support, kinks, m * (1.0 + 1e-9), f)
    }

    fn with_sup<F>(name: impl Into<String>, support: Option<(f64, f64)>, kinks: Vec<f64>, sup_norm: f64, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let support_c = support;
        let g = move |x: f64| match support_c {
            Some((a, b)) if x < a || x > b => 0.0,
            _ => f(x),
        };
        Self { name: name.into(), f: Arc::new(g), support, sup_norm, kinks }
    }

    pub fn gaussian_bump(center: f64, width: f64, mass: f64) -> Self {
        let c = mass / (width * SQRT_2PI);
        let sup = (center - GAUSSIAN_CUT * width, center + GAUSSIAN_CUT * width);
        Self::with_sup("gaussian_bump", Some(sup), vec![], c.abs(), move |x| {
            let z = (x - center) / width;
            c * (-0.5 * z * z).exp()
        })
    }

    pub fn tent(center: f64, half_width: f64, height: f64) -> Self {
        Self::with_sup("tent", Some((center - half_width, center + half_width)), vec![center], height.abs(), move |x| {
            height * (1.0 - (x - center).abs() / half_width).max(0.0)
        })
    }

    pub fn indicator_smooth(a: f64, b: f64, ramp: f64) -> Self {
        Self::with_sup("indicator_smooth", Some((a, b)), vec![a + ramp, b - ramp], 1.0, move |x| {
            smooth_step((x - a) / ramp) * smooth_step((b - x) / ramp)
        })
    }

    pub fn zero() -> Self {
        Self::with_sup("zero", Some((0.0, 0.0)), vec![], 0.0, |_| 0.0)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn is_zero(&self) -> bool {
        self.sup_norm == 0.0
    }

    /// Breakpoints of [lo, hi] at the kinks and support ends inside it.
    pub fn breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut v = vec![lo, hi];
        let mut extra = self.kinks.clone();
        if let Some((a, b)) = self.support {
            extra.push(a);
            extra.push(b);
        }
        for k in extra {
            if k > lo && k < hi {
                v.push(k);
            }
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// ∫ φ(x) h(x) dx over [lo, hi] (clipped to the support), split at kinks.
    pub fn integrate_with<H: FnMut(f64) -> f64>(&self, mut h: H, lo: f64, hi: f64, scheme: &QuadratureScheme) -> Result<quad::Quad> {
        let (lo, hi) = match self.support {
            Some((a, b)) => (lo.max(a), hi.min(b)),
            None => (lo, hi),
        };
        let mut out = quad::Quad { value: 0.0, error: 0.0, evaluations: 0 };
        if hi <= lo || self.is_zero() {
            return Ok(out);
        }
        for w in self.breaks(lo, hi).windows(2) {
            let q = scheme.integrate(|x| self.eval(x) * h(x), w[0], w[1])?;
            out.value += q.value;
            out.error += q.error;
            out.evaluations += q.evaluations;
        }
        Ok(out)
    }

    pub fn integral(&self) -> Result<f64> {
        let (lo, hi) = self.support.ok_or_else(|| Error::InvalidInput("integral of unbounded test function".into()))?;
        Ok(self.integrate_with(|_| 1.0, lo, hi, &QuadratureScheme::with_tol(1e-14, 1e-13))?.value)
    }

    /// Support, or an error for unbounded functions.
    pub fn bounded_support(&self) -> Result<(f64, f64)> {
        self.support.ok_or_else(|| Error::InvalidInput(format!("{} needs bounded support", self.name)))
    }
}

/// C^∞ step: 0 for u ≤ 0, 1 for u ≥ 1.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / u).exp();
        let b = (-1.0 / (1.0 - u)).exp();
        a / (a + b)
    }
}

fn pairing_scheme() -> QuadratureScheme {
    QuadratureScheme { order: 16, initial_panels: 1, max_panels: 1 << 12, abs_tol: 1e-13, rel_tol: 1e-12 }
}

/// g_t(φ, a) = ∫ φ(x) g_t(a − x) dx = E φ(a + √t Z).
pub fn g_phi_point(phi: &TestFn, t: f64, a: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(phi.eval(a));
    }
    let st = t.sqrt();
    let (lo, hi) = (a - 12.0 * st, a + 12.0 * st);
    Ok(phi.integrate_with(|x| heat_kernel(t, a - x), lo, hi, &pairing_scheme())?.value)
}

/// The three pairings (g_t(φ,·) at `a`, g_t(·,ψ) at `b`, g_t(φ,ψ)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pairings {
    pub phi_a: f64,
    pub b_psi: f64,
    pub phi_psi: f64,
    pub error: f64,
}

pub fn pairings(phi: &TestFn, psi: &TestFn, t: f64, a: f64, b: f64) -> Result<Pairings> {
    let pp = g_pair(phi, psi, t)?;
    Ok(Pairings { phi_a: g_phi_point(phi, t, a)?, b_psi: g_phi_point(psi, t, b)?, phi_psi: pp.value, error: pp.error })
}

/// g_t(φ,ψ) = ∬ φ(x) g_t(y − x) ψ(y) dx dy; φ must have bounded support.
pub fn g_pair(phi: &TestFn, psi: &TestFn, t: f64) -> Result<quad::Quad> {
    let (lo, hi) = phi.bounded_support()?;
    let scheme = QuadratureScheme { order: 16, initial_panels: 1, max_panels: 1 << 10, abs_tol: 1e-11, rel_tol: 1e-11 };
    let mut err = None;
    let q = phi.integrate_with(
        |x| match g_phi_point(psi, t, x) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                0.0
            }
        },
        lo,
        hi,
        &scheme,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    if q.error > 1e-8 {
        return Err(Error::Quadrature { what: "g_t(φ,ψ)".into(), achieved: q.error, target: 1e-8 });
    }
    Ok(q)
}

/// ∫ φ(u) Q(u,s) du.
pub fn q_pair(phi: &TestFn, s: f64) -> Result<f64> {
    Ok(hit_weight(phi, s.sqrt())? / s.sqrt())
}

/// A(σ) = (2π)^{-1/2} ∫ φ(σx)|x| e^{−x²/2} dx = σ ∫ φ(u) Q(u, σ²) du.
fn hit_weight(phi: &TestFn, sigma: f64) -> Result<f64> {
    let c = 1.0 / SQRT_2PI;
    if sigma == 0.0 {
        return Ok(2.0 * c * phi.eval(0.0));
    }
    let (lo, hi) = match phi.support {
        Some((a, b)) => ((a / sigma).max(-14.0), (b / sigma).min(14.0)),
        None => (-14.0, 14.0),
    };
    if hi <= lo {
        return Ok(0.0);
    }
    let mut br: Vec<f64> = phi.breaks(lo * sigma, hi * sigma).iter().map(|x| x / sigma).collect();
    if lo < 0.0 && hi > 0.0 {
        br.push(0.0);
    }
    br.sort_by(f64::total_cmp);
    br.dedup();
    let scheme = QuadratureScheme { order: 16, initial_panels: 1, max_panels: 1 << 12, abs_tol: 1e-14, rel_tol: 1e-13 };
    let mut s = 0.0;
    for w in br.windows(2) {
        s += scheme.integrate(|x| phi.eval(sigma * x) * x.abs() * (-0.5 * x * x).exp(), w[0], w[1])?.value;
    }
    Ok(c * s)
}

/// sE(φ,ψ) = ∬_{0<s<t<1} (∫φQ(·,s)) g_{t−s}(0) (∫ψQ(·,1−t)) ds dt,
/// evaluated after s = σ², 1−t = τ² and polar coordinates with
/// w = √(1−σ²−τ²), which leave a smooth integrand on [0,π/2]×[0,1].
pub fn s_e(phi: &TestFn, psi: &TestFn) -> Result<quad::Quad> {
    phi.bounded_support()?;
    psi.bounded_support()?;
    if phi.is_zero() || psi.is_zero() {
        return Ok(quad::Quad { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let eval = |m: usize| -> Result<f64> {
        let r = quad::gauss_legendre(m);
        let mut total = 0.0;
        for (wx, ww) in r.nodes.iter().zip(&r.weights) {
            let w = 0.5 * (wx + 1.0);
            let rho = (1.0 - w * w).max(0.0).sqrt();
            for (ax, aw) in r.nodes.iter().zip(&r.weights) {
                let alpha = 0.25 * PI * (ax + 1.0);
                let a = hit_weight(phi, rho * alpha.cos())?;
                let b = hit_weight(psi, rho * alpha.sin())?;
                total += ww * aw * a * b;
            }
        }
        Ok(total * 0.5 * 0.25 * PI * 4.0 / SQRT_2PI)
    };
    let mut m = 16;
    let mut prev = eval(m)?;
    loop {
        let next_m = m * 2;
        let cur = eval(next_m)?;
        let d = (cur - prev).abs();
        if d <= 1e-9_f64.max(1e-9 * cur.abs()) {
            return Ok(quad::Quad { value: cur, error: d, evaluations: next_m * next_m });
        }
        if next_m >= 128 {
            if d <= 1e-6 {
                return Ok(quad::Quad { value: cur, error: d, evaluations: next_m * next_m });
            }
            return Err(Error::Quadrature { what: "sE".into(), achieved: d, target: 1e-6 });
        }
        m = next_m;
        prev = cur;
    }
}

/// Upper bound ‖φ‖‖ψ‖ (2π)^{-3/2} · 2π · 4 on |sE(φ,ψ)|.
pub fn s_e_bound(phi: &TestFn, psi: &TestFn) -> f64 {
    phi.sup_norm * psi.sup_norm * 8.0 * PI / (2.0 * PI).powf(1.5)
}

/// Monte Carlo estimate of P^x(B_1 ∈ [a,b], B does not hit 0 on [0,1]),
/// using a Gaussian-increment walk with the exact Brownian-bridge crossing
/// probability exp(−2 x_i x_{i+1}/Δt) on each step.
pub fn bm_no_hit_mc(x: f64, a: f64, b: f64, steps: usize, paths: usize, seed: u64) -> Result<MCEstimate> {
    let key = StreamKey::new(seed, rng::domain::PATH);
    let dt = 1.0 / steps as f64;
    let sd = dt.sqrt();
    let t0 = std::time::Instant::now();
    let vals = crate::ensemble::run_indexed(paths, None, |i| {
        let mut r = key.stream(i);
        let mut pos = x;
        for _ in 0..steps {
            let next = pos + sd * rng::std_normal(&mut r);
            let u: f64 = r.random();
            if pos * next <= 0.0 || u < (-2.0 * pos * next / dt).exp() {
                return 0.0;
            }
            pos = next;
        }
        if pos >= a && pos <= b {
            1.0
        } else {
            0.0
        }
    });
    MCEstimate::from_samples(&vals, seed, t0.elapsed().as_secs_f64())
}

/// Result of projecting f onto {s^k} and lifting to the hitting basis.
#[derive(Debug, Clone)]
pub struct HittingProjection {
    /// Monomial coefficients c_k of f(s) ≈ Σ c_k s^k.
    pub coeffs: Vec<f64>,
    /// φ(x) = Σ c_k |x|^{2k+1}/(2k+1)!!, cut at the truncation radius if one was given.
    pub phi: TestFn,
    /// sup over a dense grid of |f(s) − Σ c_k s^k|.
    pub sup_error: f64,
    /// Σ|c_k| / sup|f|.
    pub condition: f64,
    /// sup over s ∈ (0,1] of ∫_{|x|>R} |φ| Q(x,s) dx (0 without truncation).
    pub truncation_error: f64,
}

pub const MAX_CONDITION: f64 = 1e10;

/// Chebyshev least-squares fit of f on [0,1] by a degree-K polynomial,
/// converted to monomials, then φ(x) = Σ c_k |x|^{2k+1}/(2k+1)!! so that
/// ∫ φ(x) Q(x,s) dx = Σ c_k s^k.
pub fn project_onto_hitting_basis<F: Fn(f64) -> f64>(f: F, k: usize, truncation: Option<f64>) -> Result<HittingProjection> {
    let m = (4 * (k + 1)).max(64);
    let xs: Vec<f64> = (0..m).map(|i| (PI * (i as f64 + 0.5) / m as f64).cos()).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(0.5 * (x + 1.0))).collect();
    // Chebyshev coefficients a_j on x ∈ [-1,1]
    let a: Vec<f64> = (0..=k)
        .map(|j| {
            let s: f64 = (0..m).map(|i| fs[i] * (j as f64 * PI * (i as f64 + 0.5) / m as f64).cos()).sum();
            s * if j == 0 { 1.0 } else { 2.0 } / m as f64
        })
        .collect();
    // T_j(2s − 1) as monomials in s
    let mut c = vec![0.0; k + 1];
    let mut t_prev = vec![1.0];
    let mut t_cur = vec![-1.0, 2.0];
    for (j, aj) in a.iter().enumerate() {
        let tj: &Vec<f64> = if j == 0 { &t_prev } else { &t_cur };
        for (i, v) in tj.iter().enumerate() {
            c[i] += aj * v;
        }
        if j >= 1 {
            let mut t_next = vec![0.0; t_cur.len() + 1];
            for (i, v) in t_cur.iter().enumerate() {
                t_next[i] += -2.0 * v;
                t_next[i + 1] += 4.0 * v;
            }
            for (i, v) in t_prev.iter().enumerate() {
                t_next[i] -= v;
            }
            t_prev = std::mem::replace(&mut t_cur, t_next);
        }
    }
    let grid = 2001;
    let mut sup_f: f64 = 0.0;
    let mut sup_err: f64 = 0.0;
    for i in 0..grid {
        let s = i as f64 / (grid - 1) as f64;
        let p = c.iter().rev().fold(0.0, |acc, ck| acc * s + ck);
        sup_f = sup_f.max(f(s).abs());
        sup_err = sup_err.max((f(s) - p).abs());
    }
    let condition = c.iter().map(|x| x.abs()).sum::<f64>() / sup_f.max(f64::MIN_POSITIVE);
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned(condition));
    }
    let cc = c.clone();
    let phi_raw = move |x: f64| -> f64 {
        let ax = x.abs();
        cc.iter().enumerate().map(|(k, ck)| ck * ax.powi(2 * k as i32 + 1) / double_factorial_odd(k)).sum()
    };
    let (phi, truncation_error) = match truncation {
        None => {
            let sup = (0..=2000).map(|i| phi_raw(-20.0 + 0.02 * i as f64).abs()).fold(0.0, f64::max);
            (TestFn::with_sup("hitting_basis", None, vec![0.0], sup, phi_raw), 0.0)
        }
        Some(r) => {
            let pr = phi_raw.clone();
            let mut worst: f64 = 0.0;
            for i in 1..=20 {
                let s = i as f64 / 20.0;
                let top = r.max(s.sqrt() * (2.0 * k as f64 + 20.0).sqrt() * 3.0);
                let q = quad::composite(|x| pr(x).abs() * bm_first_hit(x, s), r, top, 64, 16);
                worst = worst.max(2.0 * q);
            }
            (TestFn::from_fn("hitting_basis_truncated", Some((-r, r)), vec![0.0], phi_raw), worst)
        }
    };
    Ok(HittingProjection { coeffs: c, phi, sup_error: sup_err, condition, truncation_error })
}
