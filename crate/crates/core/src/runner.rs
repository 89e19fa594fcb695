//! Subcommand runner: builds the model named by an [`ExperimentConfig`], runs
//! one experiment and writes CSV data, a JSON summary, gnuplot-ready `.dat`
//! files and a run manifest.
//!
//! Everything except the manifest (which carries wall-clock time and the
//! thread count) is byte-identical for a fixed config, whatever the number of
//! worker threads: tasks draw from their own random streams and results are
//! collected in task order.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, MapKind, SystemKind};
use crate::error::{Error, Result};
use crate::gibbs::{self, Region, UnstableDisk};
use crate::lyapunov::{self, CaseHistogram, CentralOptions};
use crate::perturbation::{frame_preservation_residual, Perturbation, Perturbed};
use crate::rng::{self, Purpose};
use crate::splitting::{check_domination, gain_suite};
use crate::stats::{mean_se, MeanSe};
use crate::systems::{CatPoint, CatSuspension, DiffMap, GeoPoint, GeodesicSurface, LocalChart, PartiallyHyperbolicSystem};

pub const THREADS_ENV: &str = "HYPEXP_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Spectrum,
    Central,
    PerturbAudit,
    Ugibbs,
    Visits,
    Basin,
    Verify,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Spectrum,
        Subcommand::Central,
        Subcommand::PerturbAudit,
        Subcommand::Ugibbs,
        Subcommand::Visits,
        Subcommand::Basin,
        Subcommand::Verify,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Spectrum => "spectrum",
            Subcommand::Central => "central",
            Subcommand::PerturbAudit => "perturb-audit",
            Subcommand::Ugibbs => "ugibbs",
            Subcommand::Visits => "visits",
            Subcommand::Basin => "basin",
            Subcommand::Verify => "verify",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Subcommand::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown subcommand `{s}`"))
    }
}

/// A model the runner can drive.
pub trait Lab: PartiallyHyperbolicSystem<Chart: Clone> + Clone {
    /// Point from three config numbers.
    fn point(&self, p: &[f64]) -> Result<Self::Point>;

    fn default_base(&self) -> [f64; 3];

    fn default_disk_base(&self) -> [f64; 3];

    /// Coordinate ranges on which the invariant volume has uniform marginals.
    fn uniform_ranges(&self) -> Option<Vec<(f64, f64)>>;
}

impl Lab for CatSuspension {
    fn point(&self, p: &[f64]) -> Result<CatPoint> {
        if !(0.0..self.roof()).contains(&p[2]) {
            return Err(Error::Config(format!("fiber coordinate {} outside [0, {})", p[2], self.roof())));
        }
        Ok(CatPoint::new(p[0], p[1], p[2]))
    }

    fn default_base(&self) -> [f64; 3] {
        [0.2, 0.7, 0.7]
    }

    fn default_disk_base(&self) -> [f64; 3] {
        [0.3, 0.6, 0.7]
    }

    fn uniform_ranges(&self) -> Option<Vec<(f64, f64)>> {
        Some(self.coord_ranges().to_vec())
    }
}

impl Lab for GeodesicSurface {
    /// `(φ, ρ, θ)` as in [`GeodesicSurface::polar_point`].
    fn point(&self, p: &[f64]) -> Result<GeoPoint> {
        self.polar_point(p[0], p[1], p[2])
    }

    fn default_base(&self) -> [f64; 3] {
        [0.3, 0.2, 0.7]
    }

    fn default_disk_base(&self) -> [f64; 3] {
        [1.1, 0.4, 2.3]
    }

    fn uniform_ranges(&self) -> Option<Vec<(f64, f64)>> {
        None
    }
}

/// Constants fixed by the config, recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Derived {
    pub system: &'static str,
    pub roof: Option<f64>,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub s0: f64,
    pub eps: f64,
    pub t: f64,
    pub t_cap: f64,
    pub gamma: f64,
    pub base: [f64; 3],
}

struct Ctx<S: Lab> {
    cfg: ExperimentConfig,
    f: S,
    g: Perturbed<S>,
    derived: Derived,
}

/// Run `body` with `m` bound to whichever map the config selects.
macro_rules! on_map {
    ($ctx:expr, |$m:ident| $body:expr) => {
        match $ctx.cfg.map {
            MapKind::F => {
                let $m = &$ctx.f;
                $body
            }
            MapKind::G => {
                let $m = &$ctx.g;
                $body
            }
        }
    };
}

impl<S: Lab> Ctx<S> {
    fn new(f: S, cfg: &ExperimentConfig, roof: Option<f64>) -> Result<Self> {
        let base = cfg.base.as_deref().map(|b| [b[0], b[1], b[2]]).unwrap_or(f.default_base());
        let q0 = f.point(&base)?;
        let h = Perturbation::new(cfg.eps, cfg.t, cfg.gamma, f.dims())?;
        let cert = h.certificate().clone();
        let p = *h.params();
        let g = Perturbed::new(f.clone(), &q0, h)?;
        let derived = Derived {
            system: f.name(),
            roof,
            c: cert.c1,
            c2: cert.c2,
            s0: cert.s0,
            eps: p.eps,
            t: p.t,
            t_cap: 1.0 / (4.0 * cert.c1),
            gamma: p.gamma,
            base,
        };
        Ok(Self { cfg: cfg.clone(), f, g, derived })
    }

    /// `cfg.start` alone, or `orbits` draws from the invariant volume.
    fn starts(&self) -> Result<Vec<S::Point>> {
        if let Some(p) = &self.cfg.start {
            return Ok(vec![self.f.point(p)?]);
        }
        if self.cfg.orbits == 0 {
            return Err(Error::Config("orbits must be at least 1".into()));
        }
        (0..self.cfg.orbits)
            .map(|k| self.f.sample_volume(&mut rng::stream(self.cfg.seed, k as u64, Purpose::InitialPoints)))
            .collect()
    }

    fn coords_cell(&self, q: &S::Point) -> String {
        self.f.coords(q).iter().map(|x| fnum(*x)).collect::<Vec<_>>().join(";")
    }
}

/// 17 significant digits, enough to round-trip a double.
pub fn fnum(x: f64) -> String {
    format!("{x:.16e}")
}

struct Writer {
    dir: PathBuf,
    main_csv: Option<String>,
    files: Vec<String>,
}

impl Writer {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    /// The subcommand's primary CSV, honoring `out = <file>.csv`.
    fn main_name(&self, sub: Subcommand) -> String {
        self.main_csv.clone().unwrap_or_else(|| format!("{}.csv", sub.name()))
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut text = header.join(",");
        text.push('\n');
        for r in rows {
            text.push_str(&r.join(","));
            text.push('\n');
        }
        fs::write(self.path(name), text)?;
        Ok(())
    }

    fn dat(&mut self, name: &str, comment: &str, rows: &[Vec<f64>]) -> Result<()> {
        let mut text = format!("# {comment}\n");
        for r in rows {
            text.push_str(&r.iter().map(|x| fnum(*x)).collect::<Vec<_>>().join(" "));
            text.push('\n');
        }
        fs::write(self.path(name), text)?;
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(self.path(name), text + "\n")?;
        Ok(())
    }
}

/// Result of one run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub summary: Value,
    pub error: Option<String>,
}

/// `HYPEXP_THREADS`, when set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).filter(|&n: &usize| n > 0)
}

fn output_layout(out: &Path) -> (PathBuf, Option<String>) {
    if out.extension().is_some_and(|e| e == "csv") {
        let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_path_buf();
        (dir, out.file_name().map(|n| n.to_string_lossy().into_owned()))
    } else {
        (out.to_path_buf(), None)
    }
}

/// Execute `sub` under `cfg` on a pool of `threads` workers (`None`: the
/// `HYPEXP_THREADS` cap, else one per core). Exit codes: 0 pass, 1 invariant
/// failure, 2 usage error, 3 numeric hard error.
pub fn run(sub: Subcommand, cfg: &ExperimentConfig, threads: Option<usize>) -> RunOutcome {
    let started = Instant::now();
    let (dir, main_csv) = output_layout(&cfg.out);
    let mut w = Writer { dir: dir.clone(), main_csv, files: Vec::new() };
    let threads = threads.or_else(threads_from_env);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build();
    let (result, derived) = match (fs::create_dir_all(&dir), pool) {
        (Err(e), _) => (Err(Error::from(e)), None),
        (_, Err(e)) => (Err(Error::Io(e.to_string())), None),
        (Ok(()), Ok(pool)) => pool.install(|| dispatch(sub, cfg, &mut w)),
    };
    let (exit_code, summary, error) = match result {
        Ok(v) => (if v.passed { 0 } else { 1 }, v.summary, None),
        Err(e) => (e.exit_code(), Value::Null, Some(e.to_string())),
    };
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": sub.name(),
        "config": cfg.entries().into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect::<serde_json::Map<_, _>>(),
        "config_text": cfg.to_string(),
        "derived": derived,
        "threads": threads.unwrap_or_else(rayon::current_num_threads),
        "wall_clock_seconds": started.elapsed().as_secs_f64(),
        "files": w.files.clone(),
        "exit_code": exit_code,
        "error": error,
    });
    let name = format!("{}.manifest.json", sub.name());
    let (exit_code, error) = match w.json(&name, &manifest) {
        Ok(()) => (exit_code, error),
        Err(e) if error.is_none() => (e.exit_code(), Some(e.to_string())),
        Err(_) => (exit_code, error),
    };
    RunOutcome { exit_code, dir, files: w.files, summary, error }
}

struct Verdict {
    passed: bool,
    summary: Value,
}

fn dispatch(sub: Subcommand, cfg: &ExperimentConfig, w: &mut Writer) -> (Result<Verdict>, Option<Derived>) {
    match cfg.system {
        SystemKind::Cat => match CatSuspension::new(cfg.roof.value()) {
            Ok(f) => run_lab(f, sub, cfg, Some(cfg.roof.value()), w),
            Err(e) => (Err(e), None),
        },
        SystemKind::Geodesic => match GeodesicSurface::new() {
            Ok(f) => run_lab(f, sub, cfg, None, w),
            Err(e) => (Err(e), None),
        },
    }
}

fn run_lab<S: Lab>(f: S, sub: Subcommand, cfg: &ExperimentConfig, roof: Option<f64>, w: &mut Writer) -> (Result<Verdict>, Option<Derived>) {
    let ctx = match Ctx::new(f, cfg, roof) {
        Ok(c) => c,
        Err(e) => return (Err(e), None),
    };
    let result = match sub {
        Subcommand::Spectrum => spectrum(&ctx, w),
        Subcommand::Central => central(&ctx, w),
        Subcommand::PerturbAudit => perturb_audit(&ctx, w),
        Subcommand::Ugibbs => ugibbs(&ctx, w),
        Subcommand::Visits => visits(&ctx, w),
        Subcommand::Basin => basin(&ctx, w),
        Subcommand::Verify => verify(&ctx, w),
    };
    let result = result.and_then(|v| {
        w.json(&format!("{}.summary.json", sub.name()), &v.summary)?;
        Ok(v)
    });
    (result, Some(ctx.derived))
}

fn map_name(kind: MapKind) -> &'static str {
    match kind {
        MapKind::F => "f",
        MapKind::G => "g",
    }
}

fn pooled(values: &[f64], fallback_se: f64) -> MeanSe {
    let mut r = mean_se(values);
    if values.len() == 1 {
        r.se = fallback_se;
    }
    r
}

fn spectrum<S: Lab>(ctx: &Ctx<S>, w: &mut Writer) -> Result<Verdict> {
    let cfg = &ctx.cfg;
    let starts = ctx.starts()?;
    let results: Vec<lyapunov::SpectrumEstimate> =
        on_map!(ctx, |m| starts.par_iter().map(|q| lyapunov::qr_spectrum(m, q, cfg.steps, cfg.batches)).collect::<Result<_>>())?;
    let rows: Vec<Vec<String>> = results
        .iter()
        .zip(&starts)
        .enumerate()
        .map(|(k, (r, q))| {
            let mut row = vec![k.to_string(), ctx.coords_cell(q)];
            row.extend(r.exponents.iter().map(|x| fnum(*x)));
            row.extend(r.stderr.iter().map(|x| fnum(*x)));
            row
        })
        .collect();
    w.csv(&w.main_name(Subcommand::Spectrum), &["orbit_id", "q0_coords", "lambda_1", "lambda_2", "lambda_3", "stderr_1", "stderr_2", "stderr_3"], &rows)?;
    let d = ctx.f.dims().total();
    let pooled: Vec<MeanSe> = (0..d)
        .map(|i| pooled(&results.iter().map(|r| r.exponents[i]).collect::<Vec<_>>(), results[0].stderr[i]))
        .collect();
    w.dat("spectrum.dat", "index exponent stderr", &pooled.iter().enumerate().map(|(i, p)| vec![(i + 1) as f64, p.mean, p.se]).collect::<Vec<_>>())?;
    Ok(Verdict {
        passed: pooled.iter().all(|p| p.mean.is_finite()),
        summary: json!({ "map": map_name(cfg.map), "orbits": starts.len(), "steps": cfg.steps, "exponents": pooled }),
    })
}

#[derive(Serialize)]
struct CentralPool {
    estimate: MeanSe,
    qr_middle: MeanSe,
    /// `estimate.mean > 3·estimate.se`.
    positive: bool,
    min_summand: f64,
    negative_summands: usize,
    visits: usize,
    xi_positive: usize,
    cases: CaseHistogram,
}

fn pooled_central<M: DiffMap>(map: &M, starts: &[M::Point], opts: &CentralOptions) -> Result<(Vec<(lyapunov::CentralEstimate, lyapunov::SpectrumEstimate)>, CentralPool)> {
    let results: Vec<_> = starts
        .par_iter()
        .map(|q| lyapunov::orbit_exponents(map, q, opts, true).map(|(c, s)| (c, s.expect("spectrum was requested"))))
        .collect::<Result<_>>()?;
    let estimate = pooled(&results.iter().map(|r| r.0.estimate).collect::<Vec<_>>(), results[0].0.stderr);
    let qr_middle = pooled(&results.iter().map(|r| r.1.exponents[1]).collect::<Vec<_>>(), results[0].1.stderr[1]);
    let mut cases = CaseHistogram::default();
    results.iter().for_each(|r| cases.merge(&r.0.cases));
    let pool = CentralPool {
        positive: estimate.mean > 3.0 * estimate.se,
        estimate,
        qr_middle,
        min_summand: results.iter().map(|r| r.0.min_summand).fold(f64::INFINITY, f64::min),
        negative_summands: results.iter().map(|r| r.0.negative_summands).sum(),
        visits: results.iter().map(|r| r.0.visits).sum(),
        xi_positive: results.iter().map(|r| r.0.xi_positive).sum(),
        cases,
    };
    Ok((results, pool))
}

fn histogram(xs: &[f64], bins: usize) -> Vec<Vec<f64>> {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Vec::new();
    }
    if lo == hi {
        return vec![vec![lo, xs.len() as f64]];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in xs {
        counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
    }
    counts.iter().enumerate().map(|(i, &c)| vec![lo + (i as f64 + 0.5) * width, c as f64]).collect()
}

fn central<S: Lab>(ctx: &Ctx<S>, w: &mut Writer) -> Result<Verdict> {
    let cfg = &ctx.cfg;
    let starts = ctx.starts()?;
    let opts = CentralOptions { steps: cfg.steps, settle: cfg.settle, block: cfg.block, batches: cfg.batches };
    let (results, pool) = on_map!(ctx, |m| pooled_central(m, &starts, &opts))?;
    let rows: Vec<Vec<String>> = results
        .iter()
        .zip(&starts)
        .enumerate()
        .map(|(k, ((c, s), q))| {
            vec![
                k.to_string(),
                ctx.coords_cell(q),
                fnum(c.estimate),
                fnum(c.stderr),
                fnum(c.min_summand),
                c.visits.to_string(),
                c.cases.compact(),
                fnum(c.max_summand),
                c.negative_summands.to_string(),
                fnum(s.exponents[1]),
                fnum(s.stderr[1]),
            ]
        })
        .collect();
    w.csv(
        &w.main_name(Subcommand::Central),
        &[
            "orbit_id",
            "q0_coords",
            "estimate",
            "stderr",
            "min_summand",
            "visits_V",
            "case_histogram",
            "max_summand",
            "negative_summands",
            "qr_middle",
            "qr_middle_stderr",
        ],
        &rows,
    )?;
    // ξ along the start of the first orbit
    let window = cfg.steps.min(100_000);
    let summands = on_map!(ctx, |m| lyapunov::central_summands(m, &starts[0], window, cfg.settle))?;
    let xi: Vec<f64> = summands.iter().map(|s| s.exp_m1()).collect();
    w.dat("xi_hist.dat", "xi count (first orbit)", &histogram(&xi, 40))?;
    let mut sweep = Vec::new();
    for &eps in &cfg.eps_sweep {
        let h = Perturbation::new(eps, cfg.t, cfg.gamma, ctx.f.dims())?;
        let g = Perturbed::new(ctx.f.clone(), &ctx.f.point(&ctx.derived.base)?, h)?;
        let (_, p) = pooled_central(&g, &starts, &opts)?;
        sweep.push(vec![eps, p.estimate.mean, p.estimate.se]);
    }
    if !sweep.is_empty() {
        w.dat("exponent_vs_eps.dat", "eps central_exponent stderr", &sweep)?;
    }
    Ok(Verdict {
        passed: pool.estimate.mean.is_finite(),
        summary: json!({ "map": map_name(cfg.map), "orbits": starts.len(), "steps": cfg.steps, "settle": cfg.settle, "pooled": pool }),
    })
}

fn audit_row<S: Lab>(ctx: &Ctx<S>, eps: f64) -> Result<(Vec<f64>, bool, Value)> {
    let cfg = &ctx.cfg;
    let h = Perturbation::new(eps, cfg.t, cfg.gamma, ctx.f.dims())?;
    let rep = h.closeness_audit(cfg.grid, 2e-4 * eps, 2e-2 * eps)?;
    let round_trip = h.round_trip_error(10_000, cfg.seed)?;
    let g = Perturbed::new(ctx.f.clone(), &ctx.f.point(&ctx.derived.base)?, h)?;
    let frame = frame_residual(&g, 10, cfg.seed)?;
    let pass = rep.pass_c1 && rep.pass_det && round_trip <= 1e-12 && frame <= 1e-12;
    let row = vec![
        eps,
        rep.t,
        rep.c_bound,
        rep.c2_bound,
        rep.c1_distance,
        rep.bound_c1,
        rep.c2_distance,
        rep.bound_c2,
        rep.det_min,
        rep.det_floor,
        round_trip,
        frame,
    ];
    Ok((row, pass, json!({ "closeness": rep, "round_trip_error": round_trip, "frame_residual": frame, "pass": pass })))
}

/// Worst frame-preservation residual of `DH` over a jittered `n³` lattice of
/// the support box.
fn frame_residual<S: Lab>(g: &Perturbed<S>, n: usize, seed: u64) -> Result<f64> {
    let half = 2.0 * g.perturbation().params().eps;
    let mut rng = rng::stream(seed, 0, Purpose::GridJitter);
    let mut worst = 0.0f64;
    let d = g.dims().total();
    for idx in 0..n.pow(d as u32) {
        let mut r = idx;
        let p: Vec<f64> = (0..d)
            .map(|_| {
                let i = r % n;
                r /= n;
                -half + 2.0 * half * (i as f64 + rand::Rng::random::<f64>(&mut rng)) / n as f64
            })
            .collect();
        let q = g.chart().forward(&p)?;
        if let (_, Some(dh)) = g.dh_frame(&q)? {
            worst = worst.max(frame_preservation_residual(&dh));
        }
    }
    Ok(worst)
}

fn perturb_audit<S: Lab>(ctx: &Ctx<S>, w: &mut Writer) -> Result<Verdict> {
    let cfg = &ctx.cfg;
    let eps_list = if cfg.eps_sweep.is_empty() { vec![cfg.eps] } else { cfg.eps_sweep.clone() };
    let mut rows = Vec::new();
    let mut details = Vec::new();
    let mut all = true;
    for &eps in &eps_list {
        let (row, pass, detail) = audit_row(ctx, eps)?;
        all &= pass;
        rows.push(row);
        details.push(detail);
    }
    // C² distance must shrink with ε and stay below C₂·ε
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[b][0].total_cmp(&rows[a][0]));
    let decreasing = order.windows(2).all(|p| rows[p[1]][6] < rows[p[0]][6]);
    let below = rows.iter().all(|r| r[6] <= r[3] * r[0]);
    let text: Vec<Vec<String>> = rows
        .iter()
        .zip(&details)
        .map(|(r, d)| {
            let mut cells: Vec<String> = r.iter().map(|x| fnum(*x)).collect();
            cells.push(d["pass"].to_string());
            cells
        })
        .collect();
    w.csv(
        &w.main_name(Subcommand::PerturbAudit),
        &[
            "eps",
            "t",
            "C",
            "C2",
            "c1_distance",
            "bound_c1",
            "c2_distance",
            "bound_c2",
            "det_min",
            "det_floor",
            "round_trip_error",
            "frame_residual",
            "pass",
        ],
        &text,
    )?;
    w.dat("c2_vs_eps.dat", "eps c2_distance C2*eps", &order.iter().map(|&i| vec![rows[i][0], rows[i][6], rows[i][3] * rows[i][0]]).collect::<Vec<_>>())?;
    let passed = all && (eps_list.len() < 2 || decreasing) && below;
    Ok(Verdict {
        passed,
        summary: json!({
            "bump": ctx.g.perturbation().certificate(),
            "audits": details,
            "c2_strictly_decreasing": decreasing,
            "c2_below_C2_eps": below,
            "passed": passed,
        }),
    })
}

fn ugibbs<S: Lab>(ctx: &Ctx<S>, w: &mut Writer) -> Result<Verdict> {
    let cfg = &ctx.cfg;
    let base = cfg.disk_base.clone().unwrap_or(ctx.f.default_disk_base().to_vec());
    let disk = UnstableDisk::sample(&ctx.f, &ctx.f.point(&base)?, cfg.disk_len, cfg.samples, cfg.seed)?;
    let ranges = ctx.f.uniform_ranges();
    let (measure, integrals, stability) = on_map!(ctx, |m| ugibbs_on(m, &disk, cfg, ranges.as_deref()))?;
    let (total_weight, points, ks) = measure;
    let rows: Vec<Vec<String>> = cfg
        .observables
        .iter()
        .zip(&integrals)
        .map(|(o, r)| vec![o.to_string(), fnum(r.value), fnum(r.stderr), r.groups.to_string()])
        .collect();
    w.csv(&w.main_name(Subcommand::Ugibbs), &["observable", "integral", "stderr", "groups"], &rows)?;
    if let Some(ks) = &ks {
        let ranges = ctx.f.uniform_ranges().unwrap_or_default();
        let rows: Vec<Vec<String>> = ks
            .iter()
            .zip(&ranges)
            .enumerate()
            .map(|(i, (d, r))| vec![i.to_string(), fnum(r.0), fnum(r.1), fnum(*d)])
            .collect();
        w.csv("ugibbs_marginals.csv", &["coord", "lo", "hi", "ks_uniform"], &rows)?;
    }
    let weight_ok = (total_weight - 1.0).abs() <= 1e-12;
    Ok(Verdict {
        passed: weight_ok,
        summary: json!({
            "map": map_name(cfg.map),
            "provenance": "disk-pushforward",
            "disk_base": base,
            "disk_len": cfg.disk_len,
            "samples": cfg.samples,
            "iters": cfg.iters,
            "points": points,
            "total_weight": total_weight,
            "marginal_ks": ks,
            "cesaro_ks_n_vs_2n": stability,
            "integrals": cfg.observables.iter().zip(&integrals).map(|(o, r)| json!({ "observable": o.to_string(), "value": r.value, "stderr": r.stderr })).collect::<Vec<_>>(),
        }),
    })
}

type Cloud = (f64, usize, Option<Vec<f64>>);

fn ugibbs_on<M: DiffMap>(m: &M, disk: &UnstableDisk<M::Point>, cfg: &ExperimentConfig, ranges: Option<&[(f64, f64)]>) -> Result<(Cloud, Vec<gibbs::Integral>, f64)> {
    let measure = gibbs::pushforward_measure(m, disk, cfg.iters)?;
    let integrals = cfg.observables.iter().map(|o| gibbs::integrate(m, &measure, o)).collect::<Result<Vec<_>>>()?;
    let stability = gibbs::cesaro_stability(m, disk, cfg.iters, m.dims().total())?;
    let ks = ranges.map(|r| gibbs::marginal_ks(m, &measure, r));
    Ok(((measure.total_weight(), measure.len(), ks), integrals, stability))
}

fn visits<S: Lab>(ctx: &Ctx<S>, w: &mut Writer) -> Result<Verdict> {
    let cfg = &ctx.cfg;
    let starts = ctx.starts()?;
    let stats: Vec<gibbs::VisitStats> =
        on_map!(ctx, |m| starts.par_iter().map(|q| gibbs::visit_frequency(m, q, cfg.steps, &cfg.region, cfg.batches)).collect::<Result<_>>())?;
    let rows: Vec<Vec<String>> = stats
        .iter()
        .zip(&starts)
        .enumerate()
        .map(|(k, (v, q))| {
            vec![
                k.to_string(),
                ctx.coords_cell(q),
                v.visits.to_string(),
                v.steps.to_string(),
                fnum(v.frequency),
                fnum(v.stderr),
                v.min_return.map(|r| r.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    w.csv(&w.main_name(Subcommand::Visits), &["orbit_id", "q0_coords", "visits", "steps", "frequency", "stderr", "min_return"], &rows)?;
    let mut returns = std::collections::BTreeMap::new();
    for v in &stats {
        for (r, c) in &v.returns {
            *returns.entry(*r).or_insert(0usize) += c;
        }
    }
    w.dat("returns.dat", "return_time count", &returns.iter().map(|(r, c)| vec![*r as f64, *c as f64]).collect::<Vec<_>>())?;
    let freq = pooled(&stats.iter().map(|v| v.frequency).collect::<Vec<_>>(), stats[0].stderr);
    let volume = if cfg.region == Region::Support && cfg.map == MapKind::G {
        Some(gibbs::support_volume_fraction(&ctx.g, 1_000_000, cfg.seed)?)
    } else {
        None
    };
    Ok(Verdict {
        passed: true,
        summary: json!({
            "map": map_name(cfg.map),
            "region": cfg.region.to_string(),
            "orbits": starts.len(),
            "steps": cfg.steps,
            "visits": stats.iter().map(|v| v.visits).sum::<usize>(),
            "frequency": freq,
            "min_return": stats.iter().filter_map(|v| v.min_return).min(),
            "volume_fraction_mc": volume,
        }),
    })
}

fn basin<S: Lab>(ctx: &Ctx<S>, w: &mut Writer) -> Result<Verdict> {
    let cfg = &ctx.cfg;
    let starts = ctx.starts()?;
    let report = on_map!(ctx, |m| gibbs::basin_agreement(m, &cfg.observables, &starts, cfg.steps, cfg.batches))?;
    let mut header = vec!["orbit_id".to_string(), "q0_coords".to_string()];
    for o in &cfg.observables {
        header.push(format!("avg[{o}]"));
        header.push(format!("se[{o}]"));
    }
    let rows: Vec<Vec<String>> = starts
        .iter()
        .enumerate()
        .map(|(k, q)| {
            let mut row = vec![k.to_string(), ctx.coords_cell(q)];
            for o in &report.observables {
                row.push(fnum(o.averages[k]));
                row.push(fnum(o.stderrs[k]));
            }
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    w.csv(&w.main_name(Subcommand::Basin), &header, &rows)?;
    let agreement: Vec<Value> = report
        .observables
        .iter()
        .map(|o| {
            json!({
                "observable": o.observable,
                "mean": o.mean,
                "dispersion": o.dispersion,
                "max_pairwise_gap": o.max_pairwise_gap,
                "mean_within_se": o.mean_within_se,
                "within_3se": o.dispersion <= 3.0 * o.mean_within_se,
            })
        })
        .collect();
    Ok(Verdict {
        passed: true,
        summary: json!({ "map": map_name(cfg.map), "orbits": report.orbits, "steps": report.steps, "observables": agreement }),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub note: String,
}

fn check(name: &'static str, r: Result<(f64, f64, bool)>) -> Check {
    match r {
        Ok((value, threshold, passed)) => Check { name, value, threshold, passed, note: String::new() },
        Err(e) => Check { name, value: f64::NAN, threshold: f64::NAN, passed: false, note: e.to_string() },
    }
}

/// The quick invariant suite.
fn verify<S: Lab>(ctx: &Ctx<S>, w: &mut Writer) -> Result<Verdict> {
    let cfg = &ctx.cfg;
    let h = ctx.g.perturbation();
    let q = ctx.f.sample_volume(&mut rng::stream(cfg.seed, 0, Purpose::InitialPoints))?;
    let mut checks = vec![
        check("bump_certificate", Ok((if h.certificate().flags.all_pass() { 1.0 } else { 0.0 }, 1.0, h.certificate().flags.all_pass()))),
        check(
            "c1_closeness",
            h.closeness_audit(16, 2e-4 * cfg.eps, 2e-2 * cfg.eps).map(|r| (r.c1_distance, r.bound_c1, r.pass_c1)),
        ),
        check("det_floor", h.determinant_floor(32).map(|d| (d, 0.5f64.max(1.0 - 2.0 * h.params().c_bound * h.params().t), d >= 0.5 && d >= 1.0 - 2.0 * h.params().c_bound * h.params().t))),
        check("round_trip", h.round_trip_error(10_000, cfg.seed).map(|e| (e, 1e-12, e <= 1e-12))),
        check("frame_preservation", frame_residual(&ctx.g, 10, cfg.seed).map(|e| (e, 1e-12, e <= 1e-12))),
    ];
    checks.push(check("domination", {
        let mut jac = Vec::new();
        let mut p = q;
        (|| -> Result<_> {
            for _ in 0..1000 {
                let (next, j) = ctx.f.step(&p)?;
                jac.push(j);
                p = next;
            }
            let r = check_domination(&ctx.f.rates(), &jac);
            Ok((r.violations.len() as f64, 0.0, r.passed()))
        })()
    }));
    checks.push(check("graph_gain", gain_suite(1000, 1000, 2, 2, 1e-9, cfg.seed).map(|r| (r.exact_violations as f64 + r.zero_gain as f64, 0.0, r.passed_exact()))));
    checks.push(check(
        "f_central_neutral",
        lyapunov::central_exponent(&ctx.f, &q, &CentralOptions { steps: 10_000, settle: cfg.settle, block: 10_000, batches: 10 })
            .map(|r| (r.estimate.abs(), 1e-4, r.estimate.abs() <= 1e-4)),
    ));
    checks.push(check("tracker_invariance", lyapunov::invariance_audit(&ctx.g, &q, 10_000, cfg.settle).map(|r| (r.max_angle, 1e-8, r.max_angle <= 1e-8))));
    checks.push(check(
        "slope_audit",
        lyapunov::slope_audit(&ctx.g, &q, 50, 5_000_000, cfg.settle).map(|r| (r.max_telescoping_error, 1e-10, r.passed(1e-10))),
    ));
    checks.push(check("visit_additivity", {
        (|| -> Result<_> {
            let a = gibbs::visit_frequency(&ctx.g, &q, 100_000, &Region::Support, 10)?;
            let b = gibbs::visit_frequency(&ctx.g, &q, 100_000, &Region::Support.complement(), 10)?;
            let s = a.frequency + b.frequency;
            Ok(((s - 1.0).abs(), 0.0, s == 1.0 && a.visits + b.visits == 100_000))
        })()
    }));
    checks.push(check(
        "chart_return_time",
        gibbs::visit_frequency(&ctx.g, &q, 200_000, &Region::ChartImage, 10).map(|v| {
            let r = v.min_return.unwrap_or(usize::MAX);
            (r as f64, 2.0, r >= 2)
        }),
    ));
    checks.push(check("pushforward_weight", {
        (|| -> Result<_> {
            let disk = UnstableDisk::sample(&ctx.f, &ctx.f.point(&ctx.f.default_disk_base())?, 0.01, 256, cfg.seed)?;
            let mu = gibbs::pushforward_measure(&ctx.g, &disk, 50)?;
            let e = (mu.total_weight() - 1.0).abs();
            Ok((e, 1e-12, e <= 1e-12))
        })()
    }));
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| vec![c.name.to_string(), fnum(c.value), fnum(c.threshold), c.passed.to_string(), c.note.replace(',', ";")])
        .collect();
    w.csv(&w.main_name(Subcommand::Verify), &["check", "value", "threshold", "passed", "note"], &rows)?;
    let passed = checks.iter().all(|c| c.passed);
    Ok(Verdict { passed, summary: json!({ "passed": passed, "checks": checks }) })
}
