//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any criterion fails.

use std::path::Path;
use std::time::Instant;

use hypexp::config::ExperimentConfig;
use hypexp::gibbs::{self, Observable, Region, UnstableDisk};
use hypexp::lyapunov::{self, CentralOptions};
use hypexp::perturbation::{t_schedule, Perturbation, Perturbed, TChoice};
use hypexp::rng::{self, Purpose};
use hypexp::runner::{self, Subcommand};
use hypexp::splitting::gain_suite;
use hypexp::stats::mean_se;
use hypexp::systems::{CatPoint, CatSuspension, GeodesicSurface};
use hypexp::systems::{DiffMap, PartiallyHyperbolicSystem};
use hypexp::Result;

const SEED: u64 = 2024;
const EPS: f64 = 0.05;
const GAMMA: f64 = 0.2;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { passed, detail: detail.into() })
}

fn base() -> CatPoint {
    CatPoint::new(0.2, 0.7, 0.7)
}

fn perturbed(roof: f64, t: TChoice, gamma: f64) -> Result<Perturbed<CatSuspension>> {
    let f = CatSuspension::new(roof)?;
    let h = Perturbation::new(EPS, t, gamma, f.dims())?;
    Perturbed::new(f, &base(), h)
}

fn starts<S: PartiallyHyperbolicSystem>(sys: &S, k: usize) -> Result<Vec<S::Point>> {
    (0..k).map(|i| sys.sample_volume(&mut rng::stream(SEED, i as u64, Purpose::InitialPoints))).collect()
}

fn neutrality() -> Result<Outcome> {
    let cat = CatSuspension::sqrt2();
    let q = starts(&cat, 1)?[0];
    let opts = CentralOptions { steps: 1_000_000, ..Default::default() };
    let c = lyapunov::central_exponent(&cat, &q, &opts)?;
    let cat_ok = c.estimate.abs() <= 1e-4 && c.min_summand == 0.0 && c.max_summand == 0.0;
    let geo = GeodesicSurface::new()?;
    let p = starts(&geo, 1)?[0];
    let s = lyapunov::qr_spectrum(&geo, &p, 1_000_000, 100)?;
    let geo_ok = s.exponents[1].abs() <= 1e-4;
    outcome(
        cat_ok && geo_ok,
        format!(
            "cat λc={:.3e} summands∈[{:.1e},{:.1e}]; geodesic middle={:.3e}",
            c.estimate, c.min_summand, c.max_summand, s.exponents[1]
        ),
    )
}

fn geodesic_spectrum() -> Result<Outcome> {
    let geo = GeodesicSurface::new()?;
    let p = starts(&geo, 1)?[0];
    let s = lyapunov::qr_spectrum(&geo, &p, 100_000, 100)?;
    let err = s.exponents.iter().zip([1.0, 0.0, -1.0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(err <= 1e-3, format!("exponents {:?}, max error {err:.2e}", s.exponents))
}

fn cat_unstable_oracle() -> Result<Outcome> {
    let cat = CatSuspension::sqrt2();
    let q0 = starts(&cat, 1)?[0];
    let n = 1_000_000;
    let s = lyapunov::qr_spectrum(&cat, &q0, n, 100)?;
    let mut q = q0;
    let mut crossings = 0u64;
    for _ in 0..n {
        crossings += cat.crossings(q.s) as u64;
        q = cat.apply(&q)?;
    }
    let oracle = crossings as f64 / n as f64 * ((3.0 + 5f64.sqrt()) / 2.0).ln();
    let err = (s.exponents[0] - oracle).abs();
    outcome(err <= 1e-10, format!("QR top {:.15} vs oracle {oracle:.15} ({crossings} crossings), error {err:.2e}", s.exponents[0]))
}

fn certificates() -> Result<Outcome> {
    let dims = CatSuspension::sqrt2().dims();
    let h = Perturbation::new(EPS, TChoice::Auto, GAMMA, dims)?;
    let p = h.params();
    let below_cap = p.t < 1.0 / (4.0 * p.c_bound);
    let rep = h.closeness_audit(41, 2e-4 * EPS, 2e-2 * EPS)?;
    let round_trip = h.round_trip_error(10_000, SEED)?;
    let passed = below_cap && rep.det_min >= 0.5 && rep.pass_c1 && round_trip <= 1e-12;
    outcome(
        passed,
        format!(
            "t={:.3e} (cap {:.3e}), det_min={:.6}, C¹ {:.3e} ≤ {:.3e}, round trip {:.1e}",
            p.t,
            1.0 / (4.0 * p.c_bound),
            rep.det_min,
            rep.c1_distance,
            rep.bound_c1,
            round_trip
        ),
    )
}

fn c2_trend() -> Result<Outcome> {
    let dims = CatSuspension::sqrt2().dims();
    let mut prev = f64::INFINITY;
    let mut passed = true;
    let mut parts = Vec::new();
    for eps in [0.05, 0.02, 0.01] {
        let h = Perturbation::new(eps, TChoice::Auto, GAMMA, dims)?;
        let rep = h.closeness_audit(41, 2e-4 * eps, 2e-2 * eps)?;
        let bound = rep.c2_bound * eps;
        passed &= rep.c2_distance < prev && rep.c2_distance <= bound;
        prev = rep.c2_distance;
        debug_assert_eq!(rep.t, t_schedule(eps, rep.c_bound));
        parts.push(format!("ε={eps}: {:.3e} ≤ {:.3e}", rep.c2_distance, bound));
    }
    outcome(passed, parts.join(", "))
}

fn graph_gain_suite() -> Result<Outcome> {
    let r = gain_suite(10_000, 1000, 2, 2, 1e-9, SEED)?;
    outcome(
        r.passed(),
        format!(
            "{} sampled violations (worst shortfall {:.2e}), {} exact violations (worst {:.2e}), {} zero gains, min ξ {:.2e}",
            r.violations, r.worst_shortfall, r.exact_violations, r.worst_exact_shortfall, r.zero_gain, r.min_xi
        ),
    )
}

fn central_positivity() -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let mut cfg = ExperimentConfig::default();
    cfg.apply_text(&format!("t = cap:0.9\neps = {EPS}\norbits = 100\nsteps = 1e6\nseed = {SEED}\nout = {}\n", dir.path().display()))?;
    let r = runner::run(Subcommand::Central, &cfg, None);
    if let Some(e) = r.error {
        return outcome(false, format!("error: {e}"));
    }
    let p = &r.summary["pooled"];
    let num = |v: &serde_json::Value| v.as_f64().unwrap_or(f64::NAN);
    let (est, se) = (num(&p["estimate"]["mean"]), num(&p["estimate"]["se"]));
    let (qr, qr_se) = (num(&p["qr_middle"]["mean"]), num(&p["qr_middle"]["se"]));
    let min_summand = num(&p["min_summand"]);
    let a = min_summand >= -1e-9;
    let b = est > 0.0 && est > 3.0 * se;
    let c = (est - qr).abs() <= 3.0 * se.hypot(qr_se);
    outcome(
        a && b && c,
        format!(
            "(a) {} min summand {min_summand:.3e}; (b) {} λc={est:.3e}±{se:.1e}; (c) {} QR middle {qr:.3e}±{qr_se:.1e}",
            verdict(a),
            verdict(b),
            verdict(c)
        ),
    )
}

fn minimality_control() -> Result<Outcome> {
    // With r = 1 the box of radius 0.2 meets its own image; 0.15 is the
    // largest usable radius above the support half-width 2ε.
    let g = perturbed(1.0, TChoice::CapFraction(0.9), 0.15)?;
    let q = CatPoint::new(0.41, 0.13, 0.2);
    let opts = CentralOptions { steps: 1_000_000, ..Default::default() };
    let c = lyapunov::central_exponent(&g, &q, &opts)?;
    let v = gibbs::visit_frequency(&g, &q, 1_000_000, &Region::Support, 100)?;
    outcome(c.estimate.abs() <= 1e-4 && v.visits == 0 && c.visits == 0, format!("λc={:.3e}, visits to V: {}", c.estimate, v.visits))
}

fn tracker_invariance() -> Result<Outcome> {
    let g = perturbed(2f64.sqrt(), TChoice::CapFraction(0.9), GAMMA)?;
    let q = starts(g.system(), 1)?[0];
    let r = lyapunov::invariance_audit(&g, &q, 100_000, 80)?;
    outcome(r.max_angle <= 1e-8, format!("max angle {:.2e}, mean {:.2e}", r.max_angle, r.mean_angle))
}

fn slope_identity() -> Result<Outcome> {
    let g = perturbed(2f64.sqrt(), TChoice::CapFraction(0.9), GAMMA)?;
    let q = starts(g.system(), 1)?[0];
    let r = lyapunov::slope_audit(&g, &q, 1000, 100_000_000, 80)?;
    outcome(
        r.passed(1e-10) && r.blocks_audited >= 1000,
        format!(
            "{} blocks ({} skipped), telescoping {:.2e}, bound violations {}, monotonicity violations {}",
            r.blocks_audited, r.blocks_skipped, r.max_telescoping_error, r.bound_violations, r.monotonicity_violations
        ),
    )
}

fn ugibbs_sanity() -> Result<Outcome> {
    let f = CatSuspension::sqrt2();
    let disk = UnstableDisk::sample(&f, &CatPoint::new(0.3, 0.6, 0.7), 0.01, 4096, SEED)?;
    let cloud = gibbs::pushforward_measure(&f, &disk, 200)?;
    let ks = gibbs::marginal_ks(&f, &cloud, &f.coord_ranges());
    let ks_max = ks.iter().copied().fold(0.0, f64::max);

    let g = perturbed(2f64.sqrt(), TChoice::CapFraction(0.9), GAMMA)?;
    let small = UnstableDisk::sample(&f, &CatPoint::new(0.3, 0.6, 0.7), 0.01, 256, SEED)?;
    let gcloud = gibbs::pushforward_measure(&g, &small, 200)?;
    let integral = gibbs::integrate(&g, &gcloud, &Observable::LogCentralStretch { settle: 80 })?;
    let opts = CentralOptions { steps: 100_000, ..Default::default() };
    let orbit: Vec<f64> =
        starts(g.system(), 20)?.iter().map(|q| lyapunov::central_exponent(&g, q, &opts).map(|c| c.estimate)).collect::<Result<_>>()?;
    let orbit = mean_se(&orbit);
    let tol = 3.0 * integral.stderr.hypot(orbit.se);
    let agree = (integral.value - orbit.mean).abs() <= tol;
    outcome(
        ks_max <= 0.02 && agree,
        format!(
            "KS {ks:.4?}; ∫ = {:.3e}±{:.1e} vs orbits {:.3e}±{:.1e} (tolerance {tol:.1e})",
            integral.value, integral.stderr, orbit.mean, orbit.se
        ),
    )
}

fn read_outputs(dir: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files = Vec::new();
    for e in std::fs::read_dir(dir)? {
        let path = e?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if !name.ends_with(".manifest.json") {
            files.push((name, std::fs::read(&path)?));
        }
    }
    files.sort();
    Ok(files)
}

fn determinism() -> Result<Outcome> {
    let mut mismatched = Vec::new();
    for sub in Subcommand::ALL {
        let mut reference = None;
        for threads in [1, 4, 8] {
            let dir = tempfile::tempdir()?;
            let mut cfg = ExperimentConfig::default();
            cfg.apply_text(&format!(
                "steps = 20000\norbits = 8\nsamples = 256\niters = 50\ngrid = 9\nseed = {SEED}\nout = {}\n",
                dir.path().display()
            ))?;
            let r = runner::run(sub, &cfg, Some(threads));
            if let Some(e) = r.error {
                return outcome(false, format!("error: {e}"));
            }
            let files = read_outputs(dir.path())?;
            match &reference {
                None => reference = Some(files),
                Some(f) if *f != files => mismatched.push(format!("{sub}@{threads}")),
                Some(_) => {}
            }
        }
    }
    outcome(mismatched.is_empty(), format!("{} subcommands at 1/4/8 threads; mismatches: {mismatched:?}", Subcommand::ALL.len()))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

type Criterion = (&'static str, fn() -> Result<Outcome>);

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 12] = [
        ("unperturbed neutrality", neutrality),
        ("geodesic spectrum", geodesic_spectrum),
        ("cat unstable exponent oracle", cat_unstable_oracle),
        ("perturbation certificates", certificates),
        ("C² closeness trend", c2_trend),
        ("graph gain suite", graph_gain_suite),
        ("central positivity", central_positivity),
        ("minimality control", minimality_control),
        ("tracker invariance", tracker_invariance),
        ("slope audit", slope_identity),
        ("u-Gibbs estimator", ugibbs_sanity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = match run() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!("{} {:>2} {name} [{:.1}s]: {detail}", verdict(ok), i + 1, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
