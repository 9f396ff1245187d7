//! Gauss–Legendre and Gauss–Kronrod quadrature.
//!
//! Rules are generated once per order and cached. Composite integration
//! doubles the panel count until two successive sums agree; the adaptive
//! integrator bisects the panel with the largest Kronrod error estimate.

use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const MAX_CACHED: usize = 128;

fn cache() -> &'static [OnceLock<Rule>; MAX_CACHED + 1] {
    static CACHE: OnceLock<[OnceLock<Rule>; MAX_CACHED + 1]> = OnceLock::new();
    CACHE.get_or_init(|| std::array::from_fn(|_| OnceLock::new()))
}

/// Gauss–Legendre rule with `n` points; exact for polynomials of degree 2n-1.
pub fn gauss_legendre(n: usize) -> &'static Rule {
    assert!((1..=MAX_CACHED).contains(&n), "Gauss-Legendre order {n} out of range");
    cache()[n].get_or_init(|| build_gauss_legendre(n))
}

fn build_gauss_legendre(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Single-panel Gauss–Legendre integral over [a, b].
#[inline]
pub fn gl<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, order: usize) -> f64 {
    let r = gauss_legendre(order);
    let h = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    let mut s = 0.0;
    for (x, w) in r.nodes.iter().zip(&r.weights) {
        s += w * f(c + h * x);
    }
    s * h
}

/// Composite Gauss–Legendre with `panels` equal panels.
pub fn composite<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for j in 0..panels {
        let lo = a + h * j as f64;
        let hi = if j + 1 == panels { b } else { lo + h };
        s += gl(&mut f, lo, hi, order);
    }
    s
}

/// Composite Gauss–Legendre on panels whose breakpoints are given.
pub fn over_breaks<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], order: usize) -> f64 {
    breaks.windows(2).map(|w| gl(&mut f, w[0], w[1], order)).sum()
}

/// Breakpoints `a, a + h, a + 2h, ...` geometrically refined towards `a`:
/// panels `[a + L 2^{-j-1}, a + L 2^{-j}]` for `j < levels`, plus `[a, a + L 2^{-levels}]`.
pub fn graded_breaks(a: f64, b: f64, levels: usize) -> Vec<f64> {
    let len = b - a;
    let mut v = Vec::with_capacity(levels + 2);
    v.push(a);
    for j in (0..levels).rev() {
        v.push(a + len * 0.5f64.powi(j as i32 + 1));
    }
    v.push(b);
    v
}

/// Outcome of a refined quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Composite Gauss–Legendre with panel doubling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureScheme {
    pub order: usize,
    pub initial_panels: usize,
    pub max_panels: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        Self { order: 20, initial_panels: 2, max_panels: 1 << 14, abs_tol: 1e-13, rel_tol: 1e-13 }
    }
}

impl QuadratureScheme {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }

    /// Degree of polynomials integrated exactly on a single panel.
    pub fn exactness_degree(&self) -> usize {
        2 * self.order - 1
    }

    /// Doubles panels until successive sums agree. The returned error is the
    /// last difference, which for rules of this order overestimates the true
    /// error once the sequence is in its asymptotic regime.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<Quad> {
        let mut panels = self.initial_panels.max(1);
        let mut prev = composite(&mut f, a, b, panels, self.order);
        let mut evals = panels * self.order;
        loop {
            panels *= 2;
            let cur = composite(&mut f, a, b, panels, self.order);
            evals += panels * self.order;
            let diff = (cur - prev).abs();
            if diff <= self.abs_tol.max(self.rel_tol * cur.abs()) {
                return Ok(Quad { value: cur, error: diff, evaluations: evals });
            }
            if panels >= self.max_panels {
                return Err(Error::Quadrature {
                    what: "composite Gauss-Legendre".into(),
                    achieved: diff,
                    target: self.abs_tol.max(self.rel_tol * cur.abs()),
                });
            }
            prev = cur;
        }
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

struct Seg {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Seg {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Seg {}
impl PartialOrd for Seg {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Seg {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive Gauss–Kronrod (7, 15) integration.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Quad> {
    adaptive_limit(&mut f, a, b, abs_tol, rel_tol, 4000)
}

pub fn adaptive_limit<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<Quad> {
    let (v, e) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Seg { a, b, val: v, err: e });
    let (mut total, mut err) = (v, e);
    let mut evals = 15;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= max_segments {
            return Err(Error::Quadrature { what: "adaptive Gauss-Kronrod".into(), achieved: err, target: abs_tol.max(rel_tol * total.abs()) });
        }
        let s = heap.pop().expect("nonempty heap");
        let m = 0.5 * (s.a + s.b);
        let (v1, e1) = gk15(f, s.a, m);
        let (v2, e2) = gk15(f, m, s.b);
        evals += 30;
        total += v1 + v2 - s.val;
        err += e1 + e2 - s.err;
        heap.push(Seg { a: s.a, b: m, val: v1, err: e1 });
        heap.push(Seg { a: m, b: s.b, val: v2, err: e2 });
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|s| s.val).sum();
            err = heap.iter().map(|s| s.err).sum();
        }
    }
    let value = heap.iter().map(|s| s.val).sum();
    Ok(Quad { value, error: err, evaluations: evals })
}
