//! Piecewise Chebyshev interpolation with barycentric evaluation.

use crate::error::Result;

/// Chebyshev–Lobatto nodes cos(jπ/d) mapped to [a, b], j = 0..=d.
pub fn lobatto_nodes(a: f64, b: f64, d: usize) -> Vec<f64> {
    (0..=d)
        .map(|j| {
            let c = (std::f64::consts::PI * j as f64 / d as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * c
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChebPanels {
    pub breaks: Vec<f64>,
    pub degree: usize,
    values: Vec<f64>,
}

impl ChebPanels {
    pub fn build<F: FnMut(f64) -> f64>(breaks: Vec<f64>, degree: usize, mut f: F) -> Self {
        Self::try_build(breaks, degree, |x| Ok(f(x))).expect("infallible")
    }

    pub fn try_build<F: FnMut(f64) -> Result<f64>>(breaks: Vec<f64>, degree: usize, mut f: F) -> Result<Self> {
        assert!(breaks.len() >= 2 && degree >= 1);
        let mut values = Vec::with_capacity((breaks.len() - 1) * (degree + 1));
        for w in breaks.windows(2) {
            for x in lobatto_nodes(w[0], w[1], degree) {
                values.push(f(x)?);
            }
        }
        Ok(Self { breaks, degree, values })
    }

    /// Builds panel by panel; `f(panel, x)` may read earlier panels through
    /// the partially built table.
    pub fn build_sequential<F>(breaks: Vec<f64>, degree: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&ChebPanels, f64) -> Result<f64>,
    {
        let mut t = Self { breaks: vec![breaks[0]], degree, values: vec![] };
        for w in breaks.windows(2) {
            let mut vals = Vec::with_capacity(degree + 1);
            for x in lobatto_nodes(w[0], w[1], degree) {
                vals.push(f(&t, x)?);
            }
            t.breaks.push(w[1]);
            t.values.extend(vals);
        }
        Ok(t)
    }

    pub fn lo(&self) -> f64 {
        self.breaks[0]
    }

    pub fn hi(&self) -> f64 {
        self.breaks[self.breaks.len() - 1]
    }

    pub fn panels(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo() && x <= self.hi()
    }

    /// Clamps to the end panels outside the domain.
    pub fn eval(&self, x: f64) -> f64 {
        let np = self.panels();
        let i = self.breaks.partition_point(|b| *b <= x).saturating_sub(1).min(np - 1);
        let (a, b) = (self.breaks[i], self.breaks[i + 1]);
        let d = self.degree;
        let vals = &self.values[i * (d + 1)..(i + 1) * (d + 1)];
        let t = ((2.0 * x - a - b) / (b - a)).clamp(-1.0, 1.0);
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, &v) in vals.iter().enumerate() {
            let xj = (std::f64::consts::PI * j as f64 / d as f64).cos();
            let diff = t - xj;
            if diff == 0.0 {
                return v;
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == d {
                w *= 0.5;
            }
            let c = w / diff;
            num += c * v;
            den += c;
        }
        num / den
    }

    /// Largest |interpolant − f| at panel midpoints and quarter points.
    pub fn check<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let mut worst = 0.0f64;
        for w in self.breaks.windows(2) {
            for frac in [0.25, 0.5, 0.75] {
                let x = w[0] + frac * (w[1] - w[0]);
                worst = worst.max((self.eval(x) - f(x)).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_smooth_functions() {
        let t = ChebPanels::build(vec![0.0, 0.5, 1.0, 3.0], 16, f64::exp);
        assert!(t.check(f64::exp) < 1e-13);
        assert_eq!(t.eval(0.5), 0.5f64.exp());
        let s = ChebPanels::build(vec![-1.0, 1.0], 5, |x| x.powi(5) - x);
        assert!((s.eval(0.3) - (0.3f64.powi(5) - 0.3)).abs() < 1e-15);
    }

    #[test]
    fn sequential_build_sees_earlier_panels() {
        // f(x) = 1 + f(x − 1) on unit panels with f(x) = x² on [0, 1]
        let t = ChebPanels::build_sequential(vec![0.0, 1.0, 2.0, 3.0], 4, |t, x| {
            Ok(if x <= 1.0 { x * x } else { 1.0 + t.eval(x - 1.0) })
        })
        .unwrap();
        assert!((t.eval(2.5) - 2.25).abs() < 1e-14);
    }
}
