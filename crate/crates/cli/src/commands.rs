//! One function per subcommand. Each writes its CSV tables through [`Run`]
//! and returns the assertions that decide the exit code.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use pinlab::coarse_grain::*;
use pinlab::continuum::{g_pair, TestFnSpec};
use pinlab::dickman::*;
use pinlab::disorder::*;
use pinlab::partition::*;
use pinlab::she::*;
use pinlab::stats::MCEstimate;
use pinlab::walks::*;
use serde::{Deserialize, Serialize};

use crate::config::LawSpec;
use crate::manifest::Assertion;

/// Output sink for one run.
pub struct Run {
    pub dir: PathBuf,
    pub stem: String,
    pub seed: u64,
    pub workers: Option<usize>,
    pub outputs: Vec<String>,
}

impl Run {
    /// `{stem}.csv` for an empty table name, `{stem}.{table}.csv` otherwise.
    pub fn csv(&mut self, table: &str) -> Result<BufWriter<File>> {
        let file = if table.is_empty() { format!("{}.csv", self.stem) } else { format!("{}.{table}.csv", self.stem) };
        let path = self.dir.join(&file);
        self.outputs.push(file);
        Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
    }
}

fn kernel_table(law: &StepLaw, n: usize, k_max: usize) -> Result<KernelTable> {
    Ok(KernelTable::cached(law, n, k_max)?)
}

fn z_assert(name: &str, est: &MCEstimate, target: f64, z_max: f64) -> Assertion {
    Assertion::below(name, est.z_score(target), z_max).with_detail(format!("mean {:e} stderr {:e} target {target:e}", est.mean, est.stderr))
}

// ---------------------------------------------------------------- validate-walk

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateWalk {
    #[serde(default)]
    pub law: LawSpec,
    /// Length of the K(n) table used for the tail check.
    #[serde(default = "d_validate_n")]
    pub n_max: usize,
}

fn d_validate_n() -> usize {
    2000
}

pub fn validate_walk(cfg: &ValidateWalk, run: &mut Run) -> Result<Vec<Assertion>> {
    let law = cfg.law.build()?;
    let rep = moment_report(&law);
    let mut w = run.csv("")?;
    writeln!(w, "quantity,value")?;
    for (k, v) in [("mass", rep.mass), ("mean", rep.mean), ("variance", rep.variance), ("third", rep.third), ("fourth", rep.fourth)] {
        writeln!(w, "{k},{v:e}")?;
    }
    writeln!(w, "span,{}\nperiod,{}\nexact,{}", rep.span, rep.period, rep.exact)?;
    w.flush()?;
    let mut out = vec![Assertion::flag("assumptions hold", rep.accepted()).with_detail(rep.violations.join("; "))];
    if rep.accepted() {
        let kt = kernel_table(&law, cfg.n_max, cfg.n_max)?;
        let k = k_asymptotics_check(&kt);
        out.push(Assertion::flag("K(n) ≥ 0", k.nonnegative));
        out.push(Assertion::below("first-return residual", kt.first_return_residual(), 1e-12));
        if cfg.n_max >= 1000 {
            out.push(Assertion::flag("√(2π) n^{3/2} K(n) ∈ [0.9, 1.1] for n ≥ 1000", k.within_band));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- kernels

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Kernels {
    #[serde(default)]
    pub law: LawSpec,
    pub n_max: usize,
    /// K(n) is tabulated up to this length (quadratic cost).
    #[serde(default)]
    pub k_max: Option<usize>,
    #[serde(default = "d_quad_tol")]
    pub quad_tol: f64,
}

fn d_quad_tol() -> f64 {
    1e-12
}

pub fn kernels(cfg: &Kernels, run: &mut Run) -> Result<Vec<Assertion>> {
    let law = cfg.law.build()?;
    let k_max = cfg.k_max.unwrap_or(cfg.n_max.min(4000));
    let kt = kernel_table(&law, cfg.n_max, k_max)?;
    kt.write_csv(run.csv("")?)?;
    let k = k_asymptotics_check(&kt);
    let mut out = vec![
        Assertion::below("p_n(0) quadrature error", kt.quad_error, cfg.quad_tol),
        Assertion::below("first-return residual", kt.first_return_residual(), 1e-12),
        Assertion::flag("K(n) ≥ 0", k.nonnegative),
    ];
    if kt.k_max() >= 1000 {
        out.push(Assertion::flag("√(2π) n^{3/2} K(n) ∈ [0.9, 1.1] for n ≥ 1000", k.within_band));
    }
    Ok(out)
}

// ---------------------------------------------------------------- beta

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Beta {
    #[serde(default)]
    pub law: LawSpec,
    #[serde(default)]
    pub disorder: DisorderSpec,
    pub n: usize,
    #[serde(default)]
    pub vartheta: f64,
    #[serde(default = "d_residual_tol")]
    pub residual_tol: f64,
}

fn d_residual_tol() -> f64 {
    1e-12
}

pub fn beta(cfg: &Beta, run: &mut Run) -> Result<Vec<Assertion>> {
    let law = cfg.law.build()?;
    let kt = kernel_table(&law, cfg.n, 1)?;
    let w = solve_critical_beta(&cfg.disorder.build()?, cfg.n, cfg.vartheta, kt.r[cfg.n])?;
    let mut f = run.csv("")?;
    writeln!(f, "n,vartheta,r_n,target,sigma2,beta,lambda_n,residual")?;
    writeln!(f, "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}", w.n, w.vartheta, w.r_n, w.target, w.sigma2, w.beta, w.lambda_n, w.residual)?;
    f.flush()?;
    Ok(vec![Assertion::below("relative residual", w.residual, cfg.residual_tol)])
}

// ---------------------------------------------------------------- partition

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Partition {
    #[serde(default)]
    pub law: LawSpec,
    #[serde(default)]
    pub disorder: DisorderSpec,
    pub n: usize,
    #[serde(default)]
    pub vartheta: f64,
    #[serde(default = "d_fields")]
    pub fields: usize,
    #[serde(default)]
    pub phi: TestFnSpec,
    #[serde(default)]
    pub psi: TestFnSpec,
    #[serde(default = "d_gap_tol")]
    pub decomposition_tol: f64,
    #[serde(default = "d_chaos_tol")]
    pub chaos_tol: f64,
}

fn d_fields() -> usize {
    100
}
fn d_gap_tol() -> f64 {
    1e-10
}
fn d_chaos_tol() -> f64 {
    1e-12
}

pub fn partition(cfg: &Partition, run: &mut Run) -> Result<Vec<Assertion>> {
    let law = cfg.law.build()?;
    let dl = cfg.disorder.build()?;
    let n = cfg.n;
    let kt = kernel_table(&law, n, n)?;
    let w = solve_critical_beta(&dl, n, cfg.vartheta, kt.r[n])?;
    let d = Decomposition::new(&law, &cfg.phi.build()?, &cfg.psi.build()?, n)?;
    let rows = pinlab::ensemble::run_indexed(cfg.fields, run.workers, |i| -> pinlab::Result<_> {
        let f = zeta_field(&dl, w.beta, n + 1, run.seed, i)?;
        let rep = d.check(&f, &kt)?;
        let chaos = chaos_eval(&f.zeta, n, &kt)?;
        let pin = point_to_line_via_pin(&f, 0.0, n, &kt)?;
        Ok((rep, chaos, pin))
    });
    let mut out = run.csv("")?;
    writeln!(out, "field,direct,reconstructed,no_hit,gap,chaos_p2l,pin_p2l")?;
    let (mut gap, mut chaos_gap) = (0.0f64, 0.0f64);
    for (i, r) in rows.into_iter().enumerate() {
        let (rep, chaos, pin) = r?;
        gap = gap.max(rep.gap);
        chaos_gap = chaos_gap.max((chaos - pin).abs() / pin.abs().max(1.0));
        writeln!(out, "{i},{:e},{:e},{:e},{:e},{chaos:e},{pin:e}", rep.direct, rep.reconstructed, rep.no_hit, rep.gap)?;
    }
    out.flush()?;
    Ok(vec![
        Assertion::below("decomposition identity gap", gap, cfg.decomposition_tol),
        Assertion::below("chaos vs pinning recursion", chaos_gap, cfg.chaos_tol),
    ])
}

// ---------------------------------------------------------------- moments

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Moments {
    #[serde(default)]
    pub law: LawSpec,
    #[serde(default)]
    pub disorder: DisorderSpec,
    pub n: usize,
    #[serde(default)]
    pub vartheta: f64,
    #[serde(default = "d_samples")]
    pub fields: usize,
    #[serde(default)]
    pub phi: TestFnSpec,
    #[serde(default)]
    pub psi: TestFnSpec,
    /// Use the spectral return-probability kernel (O(N) per field).
    #[serde(default = "d_true")]
    pub spectral: bool,
    #[serde(default = "d_mean_tol")]
    pub mean_rel_tol: f64,
    #[serde(default = "d_z")]
    pub z_max: f64,
}

fn d_samples() -> usize {
    10_000
}
fn d_true() -> bool {
    true
}
fn d_mean_tol() -> f64 {
    0.02
}
fn d_z() -> f64 {
    3.0
}

pub fn moments(cfg: &Moments, run: &mut Run) -> Result<Vec<Assertion>> {
    let law = cfg.law.build()?;
    let dl = cfg.disorder.build()?;
    let (phi, psi) = (cfg.phi.build()?, cfg.psi.build()?);
    let n = cfg.n;
    let kt = kernel_table(&law, n, 10)?;
    let w = solve_critical_beta(&dl, n, cfg.vartheta, kt.r[n])?;
    let qv = q_vectors_for(&law, &phi, &psi, n)?;
    let g1 = g_pair(&phi, &psi, 1.0)?.value;
    let ub = build_ubar(n, w.sigma2, &kt)?;
    let m2 = exact_second_moment(&qv, &ub.values)?;
    let sk = if cfg.spectral { Some(SpectralKernel::build(&law, &kt, n)?) } else { None };
    let t = std::time::Instant::now();
    let xs = polymer_ensemble(&dl, w.beta, &qv, &kt, sk.as_ref(), cfg.fields, run.seed, run.workers)?;
    let secs = t.elapsed().as_secs_f64();
    let mean = MCEstimate::from_samples(&xs, run.seed, secs)?;
    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let second = MCEstimate::from_samples(&sq, run.seed, secs)?;
    let mut s = run.csv("samples")?;
    writeln!(s, "field,z")?;
    for (i, x) in xs.iter().enumerate() {
        writeln!(s, "{i},{x:e}")?;
    }
    s.flush()?;
    let mut f = run.csv("")?;
    writeln!(f, "n,beta,sigma2,q,g,exact_second_moment,mc_mean,mc_mean_stderr,mc_second_moment,mc_second_moment_stderr")?;
    writeln!(f, "{n},{:e},{:e},{:e},{g1:e},{m2:e},{:e},{:e},{:e},{:e}", w.beta, w.sigma2, qv.full, mean.mean, mean.stderr, second.mean, second.stderr)?;
    f.flush()?;
    Ok(vec![
        Assertion::below("|q/g − 1|", (qv.full / g1 - 1.0).abs(), cfg.mean_rel_tol),
        z_assert("MC mean vs exact (stderrs)", &mean, qv.full, cfg.z_max),
        z_assert("MC second moment vs exact (stderrs)", &second, m2, cfg.z_max),
    ])
}

// ---------------------------------------------------------------- dickman

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dickman {
    #[serde(default = "d_s")]
    pub s: Vec<f64>,
    #[serde(default = "d_t_max")]
    pub t_max: f64,
    #[serde(default = "d_points")]
    pub points: usize,
    #[serde(default = "d_mass_tol")]
    pub mass_tol: f64,
    /// Optional renewal convergence check.
    #[serde(default)]
    pub renewal: Option<RenewalCheck>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenewalCheck {
    #[serde(default)]
    pub law: LawSpec,
    pub n: usize,
    #[serde(default = "d_one")]
    pub s: f64,
    #[serde(default = "d_samples")]
    pub samples: usize,
    /// Pilot-calibrated KS threshold.
    #[serde(default = "d_ks")]
    pub ks_max: f64,
}

fn d_s() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn d_t_max() -> f64 {
    4.0
}
fn d_points() -> usize {
    400
}
fn d_mass_tol() -> f64 {
    1e-6
}
fn d_one() -> f64 {
    1.0
}
fn d_ks() -> f64 {
    0.05
}

pub fn dickman(cfg: &Dickman, run: &mut Run) -> Result<Vec<Assertion>> {
    if cfg.s.is_empty() || cfg.points < 2 {
        bail!("dickman needs at least one s and two grid points");
    }
    // at least as far as the automatic cutoff, so the mass check sees the whole law
    let ds: Vec<DickmanDensity> = cfg
        .s
        .iter()
        .map(|&s| {
            let d = DickmanDensity::new(s)?;
            if cfg.t_max > d.t_max { DickmanDensity::with_t_max(s, cfg.t_max) } else { Ok(d) }
        })
        .collect::<pinlab::Result<_>>()?;
    let mut f = run.csv("")?;
    write!(f, "t")?;
    for s in &cfg.s {
        write!(f, ",f_{s},cdf_{s}")?;
    }
    writeln!(f)?;
    for i in 1..=cfg.points {
        let t = cfg.t_max * i as f64 / cfg.points as f64;
        write!(f, "{t:e}")?;
        for d in &ds {
            write!(f, ",{:e},{:e}", d.density(t)?, d.cdf(t))?;
        }
        writeln!(f)?;
    }
    f.flush()?;
    let mut out: Vec<Assertion> =
        cfg.s.iter().zip(&ds).map(|(s, d)| Assertion::below(&format!("|∫f_{s} − 1|"), (d.total_mass() - 1.0).abs(), cfg.mass_tol)).collect();
    if let Some(r) = &cfg.renewal {
        let law = r.law.build()?;
        let kt = kernel_table(&law, r.n, 10)?;
        let d = DickmanDensity::new(r.s)?;
        let smp = sample_dickman_renewal(&kt, r.n, r.s, r.samples, run.seed, &d)?;
        let mut w = run.csv("renewal")?;
        writeln!(w, "sample,value")?;
        for (i, v) in smp.values.iter().enumerate() {
            writeln!(w, "{i},{v:e}")?;
        }
        w.flush()?;
        out.push(Assertion::below("KS distance to the Dickman law", smp.ks, r.ks_max).with_detail(format!("{} renewal steps", smp.steps)));
    }
    Ok(out)
}

// ---------------------------------------------------------------- gtheta

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gtheta {
    #[serde(default)]
    pub vartheta: f64,
    #[serde(default = "d_one")]
    pub t_max: f64,
    /// Log-spaced grid points from `t_min` to `t_max`.
    #[serde(default = "d_points")]
    pub points: usize,
    #[serde(default = "d_t_min")]
    pub t_min: f64,
    #[serde(default = "d_pairs")]
    pub renewal_pairs: Vec<(f64, f64)>,
    #[serde(default = "d_renewal_tol")]
    pub renewal_tol: f64,
}

fn d_t_min() -> f64 {
    1e-8
}
fn d_pairs() -> Vec<(f64, f64)> {
    vec![(0.8, 0.4), (0.5, 0.25)]
}
fn d_renewal_tol() -> f64 {
    1e-3
}

pub fn gtheta(cfg: &Gtheta, run: &mut Run) -> Result<Vec<Assertion>> {
    if !(cfg.t_min > 0.0 && cfg.t_min < cfg.t_max) || cfg.points < 2 {
        bail!("gtheta needs 0 < t_min < t_max and at least two points");
    }
    let g = GThetaTable::build(cfg.vartheta, cfg.t_max)?;
    let mut f = run.csv("")?;
    writeln!(f, "t,g,cumulative")?;
    let r = (cfg.t_max / cfg.t_min).ln();
    for i in 0..cfg.points {
        let t = cfg.t_min * (r * i as f64 / (cfg.points - 1) as f64).exp();
        let t = t.min(cfg.t_max);
        writeln!(f, "{t:e},{:e},{:e}", g.eval(t), g.cumulative(t))?;
    }
    f.flush()?;
    let mut out = vec![];
    for &(t, tb) in &cfg.renewal_pairs {
        let ri = renewal_identity(&g, t, tb)?;
        out.push(Assertion::below(&format!("renewal identity at ({t}, {tb})"), ri.rel_gap, cfg.renewal_tol));
    }
    Ok(out)
}

// ---------------------------------------------------------------- cg

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CgOperation {
    /// Θ moments and disjoint-block covariances.
    Moments,
    /// ‖Z − Z^{no triple}‖₂ along 1/ε.
    NoTriple,
    /// Cross-N KS distances of L^{(cg)}.
    Convergence,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cg {
    pub operation: CgOperation,
    #[serde(default)]
    pub law: LawSpec,
    #[serde(default)]
    pub disorder: DisorderSpec,
    #[serde(default = "d_cg_n")]
    pub n: usize,
    #[serde(default = "d_inv_eps")]
    pub inv_eps: Vec<usize>,
    #[serde(default)]
    pub k_eps: Option<usize>,
    #[serde(default)]
    pub r_max: Option<usize>,
    #[serde(default)]
    pub vartheta: f64,
    #[serde(default = "d_cg_samples")]
    pub samples: usize,
    #[serde(default)]
    pub phi: TestFnSpec,
    #[serde(default)]
    pub psi: TestFnSpec,
    /// Walk lengths for `convergence`; each must divide the largest.
    #[serde(default = "d_ns")]
    pub ns: Vec<usize>,
    /// Blocks for `moments` as (i, j); default all admissible blocks.
    #[serde(default)]
    pub blocks: Option<Vec<(usize, usize)>>,
    #[serde(default = "d_z")]
    pub z_max: f64,
}

fn d_cg_n() -> usize {
    1024
}
fn d_inv_eps() -> Vec<usize> {
    vec![8, 16, 32]
}
fn d_cg_samples() -> usize {
    1000
}
fn d_ns() -> Vec<usize> {
    vec![1_000, 10_000, 100_000]
}

pub fn cg(cfg: &Cg, run: &mut Run) -> Result<Vec<Assertion>> {
    let law = cfg.law.build()?;
    let (phi, psi) = (cfg.phi.build()?, cfg.psi.build()?);
    match cfg.operation {
        CgOperation::Moments => {
            let dl = cfg.disorder.build()?;
            let &[m] = cfg.inv_eps.as_slice() else { bail!("cg moments takes a single inv_eps") };
            let kt = kernel_table(&law, cfg.n, cfg.n)?;
            let w = solve_critical_beta(&dl, cfg.n, cfg.vartheta, kt.r[cfg.n])?;
            let grid = MesoGrid::new(cfg.n, 1.0 / m as f64, cfg.k_eps, cfg.r_max)?;
            let blocks = match &cfg.blocks {
                Some(b) => b.iter().map(|&(i, j)| TimeBlock::new(i, j)).collect::<pinlab::Result<Vec<_>>>()?,
                None => grid.blocks(),
            };
            let rep = theta_moment_experiment(&dl, &w, &grid, &blocks, cfg.samples, run.seed, &kt, run.workers)?;
            let mut f = run.csv("")?;
            writeln!(f, "i,j,mean,mean_stderr,m2,m2_stderr,m4,m4_stderr")?;
            for t in &rep.moments {
                writeln!(f, "{},{},{:e},{:e},{:e},{:e},{:e},{:e}", t.block.i, t.block.j, t.mean.mean, t.mean.stderr, t.m2.mean, t.m2.stderr, t.m4.mean, t.m4.stderr)?;
            }
            f.flush()?;
            let mut c = run.csv("covariances")?;
            writeln!(c, "a_i,a_j,b_i,b_j,cov,stderr")?;
            for x in &rep.covariances {
                writeln!(c, "{},{},{},{},{:e},{:e}", x.a.i, x.a.j, x.b.i, x.b.j, x.cov, x.stderr)?;
            }
            c.flush()?;
            Ok(vec![Assertion::below("max |cov|/stderr over disjoint blocks", rep.max_cov_z(), cfg.z_max)])
        }
        CgOperation::NoTriple => {
            let dl = cfg.disorder.build()?;
            let kt = kernel_table(&law, cfg.n, cfg.n)?;
            let w = solve_critical_beta(&dl, cfg.n, cfg.vartheta, kt.r[cfg.n])?;
            let ub = build_ubar(cfg.n, w.sigma2, &kt)?;
            let qv = q_vectors_for(&law, &phi, &psi, cfg.n)?;
            let mut f = run.csv("")?;
            writeln!(f, "inv_eps,k_eps,empirical,empirical_sq_stderr,exact")?;
            let (mut emp, mut exact) = (vec![], vec![]);
            for &m in &cfg.inv_eps {
                let grid = MesoGrid::new(cfg.n, 1.0 / m as f64, cfg.k_eps, cfg.r_max)?;
                let r = no_triple_l2_experiment(&dl, &w, &grid, &qv, &kt, &ub.values, cfg.samples, run.seed, run.workers)?;
                writeln!(f, "{m},{},{:e},{:e},{:e}", grid.k_eps, r.empirical, r.squared_gap.stderr, r.exact)?;
                emp.push(r.empirical);
                exact.push(r.exact);
            }
            f.flush()?;
            Ok(vec![Assertion::decreasing("empirical L² distance decreasing in 1/ε", &emp), Assertion::decreasing("exact L² distance decreasing in 1/ε", &exact)])
        }
        CgOperation::Convergence => {
            if !matches!(cfg.disorder, DisorderSpec::Gaussian) {
                bail!("cg convergence couples levels through Gaussian block sums; set disorder to gaussian");
            }
            let &[m] = cfg.inv_eps.as_slice() else { bail!("cg convergence takes a single inv_eps") };
            let top = *cfg.ns.iter().max().unwrap_or(&0);
            let kt = kernel_table(&law, top, 10)?;
            let sk = SpectralKernel::build(&law, &kt, top)?;
            let r = cg_convergence_experiment(1.0 / m as f64, cfg.k_eps, cfg.r_max, &cfg.ns, cfg.vartheta, &phi, &psi, cfg.samples, run.seed, &kt, Some(&sk), run.workers)?;
            let mut f = run.csv("")?;
            writeln!(f, "n,beta,mean,stderr")?;
            for (k, n) in r.ns.iter().enumerate() {
                writeln!(f, "{n},{:e},{:e},{:e}", r.betas[k], r.means[k].mean, r.means[k].stderr)?;
            }
            f.flush()?;
            let mut k = run.csv("ks")?;
            writeln!(k, "n_a,n_b,ks")?;
            for a in 0..r.ns.len() {
                for b in a + 1..r.ns.len() {
                    writeln!(k, "{},{},{:e}", r.ns[a], r.ns[b], r.ks[a][b])?;
                }
            }
            k.flush()?;
            Ok(vec![Assertion::decreasing("consecutive KS distances decreasing in N", &r.consecutive())])
        }
    }
}

// ---------------------------------------------------------------- she

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct She {
    #[serde(default = "d_delta2")]
    pub delta2: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub f: TestFnSpec,
    #[serde(default = "d_noises")]
    pub n_noise: usize,
    /// Brownian paths per noise (path solver only).
    #[serde(default = "d_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "d_grid")]
    pub inner: InnerSolver,
    /// Noise-free pair paths for the replica second moment; 0 skips it.
    #[serde(default)]
    pub replica_pairs: usize,
    #[serde(default = "d_z")]
    pub z_max: f64,
    #[serde(default = "d_var_tol")]
    pub variance_rel_tol: f64,
}

fn d_delta2() -> f64 {
    1e-3
}
fn d_noises() -> usize {
    256
}
fn d_paths() -> usize {
    64
}
fn d_grid() -> InnerSolver {
    InnerSolver::Grid
}
fn d_var_tol() -> f64 {
    0.25
}

pub fn she(cfg: &She, run: &mut Run) -> Result<Vec<Assertion>> {
    let m = Mollifier::bump()?;
    let f = cfg.f.build()?;
    let mc_cfg = SheMcConfig { delta2: cfg.delta2, theta: cfg.theta, dt: cfg.dt, n_paths: cfg.n_paths, n_noise: cfg.n_noise, seed: run.seed, inner: cfg.inner };
    let mc = she_mc(&m, &f, &mc_cfg, run.workers)?;
    let w = continuum_window(&m, cfg.delta2, cfg.theta)?;
    let semi = she_second_moment_semianalytic(&m, &w, &f, default_time_step(cfg.delta2), None)?;
    let mass = f.integral()?;
    let replica = if cfg.replica_pairs >= 2 { Some(she_replica_second_moment(&m, &f, &w, 1 << 14, cfg.replica_pairs, run.seed, run.workers)?) } else { None };
    let mut out = run.csv("")?;
    writeln!(out, "delta2,theta,beta,vartheta,consistency,integral,mean,stderr,variance,variance_corrected,semianalytic_variance,semianalytic_discretization,replica_variance,replica_stderr")?;
    let (rv, rs) = replica.map_or((f64::NAN, f64::NAN), |r| (r.mean, r.stderr));
    writeln!(
        out,
        "{:e},{:e},{:e},{:e},{:e},{mass:e},{:e},{:e},{:e},{:e},{:e},{:e},{rv:e},{rs:e}",
        cfg.delta2,
        cfg.theta,
        w.beta,
        w.vartheta,
        w.consistency,
        mc.estimate.mean,
        mc.estimate.stderr,
        mc.estimate.variance,
        mc.variance_corrected,
        semi.variance,
        semi.discretization
    )?;
    out.flush()?;
    Ok(vec![
        z_assert("E u[f] vs ∫f (stderrs)", &mc.estimate, mass, cfg.z_max),
        Assertion::below("|Var/renewal − 1|", (mc.estimate.variance / semi.variance - 1.0).abs(), cfg.variance_rel_tol),
    ])
}
