//! Central-direction tracking, Lyapunov exponents and the slope and
//! positivity audits.
//!
//! The perturbed center `E^c_g` lives in the invariant plane `E^{cu}` and is
//! stored as a unit vector `(c, u)` in that plane. Forward iteration pushes
//! every direction towards `E^u`, so the center is found by pulling a seed
//! back along the orbit with `Dg⁻¹`, where it is the attracting direction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::perturbation::Perturbed;
use crate::splitting::{Dims, FrameMatrix};
use crate::stats::BatchMeans;
use crate::systems::{DiffMap, PartiallyHyperbolicSystem};

/// `E^{cu}` block in `(c, u)` coordinates.
pub type Cu = [[f64; 2]; 2];

const COLLAPSE: f64 = 1e-30;

fn require_planar(dims: Dims) -> Result<()> {
    if dims.c != 1 || dims.u != 1 {
        return Err(Error::Precondition(format!("central tracking needs dim E^c = dim E^u = 1, got {dims:?}")));
    }
    Ok(())
}

pub fn cu_block(m: &FrameMatrix) -> Cu {
    let (c, u) = (m.dims().s, m.dims().s + 1);
    [[m.get(c, c), m.get(c, u)], [m.get(u, c), m.get(u, u)]]
}

fn apply(m: &Cu, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Unoriented angle between two nonzero plane vectors.
pub fn angle(a: [f64; 2], b: [f64; 2]) -> f64 {
    let cross = a[0] * b[1] - a[1] * b[0];
    let dot = a[0] * b[0] + a[1] * b[1];
    cross.abs().atan2(dot.abs())
}

/// Smallest singular value of a 2×2 matrix.
fn conorm(m: &Cu) -> f64 {
    let p = m[0][0].powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + m[1][1].powi(2);
    let d = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
    let smax = ((p + (p * p - 4.0 * d * d).max(0.0).sqrt()) / 2.0).sqrt();
    if smax == 0.0 {
        0.0
    } else {
        d / smax
    }
}

/// Graph slope `|u|/|c|` of a plane direction.
pub fn plane_slope(v: [f64; 2]) -> f64 {
    if v[0] == 0.0 {
        f64::INFINITY
    } else {
        v[1].abs() / v[0].abs()
    }
}

/// Orbit points, `E^{cu}` blocks and support flags for `len` steps.
struct Segment<P> {
    points: Vec<P>,
    full: Vec<FrameMatrix>,
    blocks: Vec<Cu>,
    in_v: Vec<bool>,
}

fn record<M: DiffMap>(map: &M, q: &M::Point, len: usize) -> Result<Segment<M::Point>> {
    let mut points = Vec::with_capacity(len + 1);
    let mut full = Vec::with_capacity(len);
    let mut blocks = Vec::with_capacity(len);
    let mut in_v = Vec::with_capacity(len);
    let mut p = *q;
    points.push(p);
    for _ in 0..len {
        in_v.push(map.in_support(&p));
        let (next, j) = map.step(&p)?;
        blocks.push(cu_block(&j));
        full.push(j);
        p = next;
        points.push(p);
    }
    Ok(Segment { points, full, blocks, in_v })
}

/// Pull `seed` (a direction at the end of `blocks`) back to the start; the
/// result has one unit direction per point, oriented with `c ≥ 0`.
fn pull_back(blocks: &[Cu], seed: [f64; 2]) -> Result<Vec<[f64; 2]>> {
    let mut dirs = vec![[0.0; 2]; blocks.len() + 1];
    let n = norm(seed);
    let mut v = [seed[0] / n, seed[1] / n];
    dirs[blocks.len()] = v;
    for k in (0..blocks.len()).rev() {
        let m = &blocks[k];
        // adjugate: proportional to the inverse, and the scale is irrelevant
        let w = [m[1][1] * v[0] - m[0][1] * v[1], -m[1][0] * v[0] + m[0][0] * v[1]];
        let n = norm(w);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::SingularJacobian);
        }
        v = [w[0] / n, w[1] / n];
        if v[0] < 0.0 {
            v = [-v[0], -v[1]];
        }
        if v[0].abs() < COLLAPSE {
            return Err(Error::TrackerCollapse(v[0]));
        }
        dirs[k] = v;
    }
    Ok(dirs)
}

/// Tracked central direction at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CentralDirection {
    pub c: f64,
    pub u: f64,
    /// Graph slope `σ = u/c` over `E^c_f`.
    pub sigma: f64,
}

/// Settle forward `n_settle` steps, seed with `E^c_f` there and pull back.
pub fn track_central_direction<M: DiffMap>(map: &M, q: &M::Point, n_settle: usize) -> Result<CentralDirection> {
    require_planar(map.dims())?;
    if n_settle == 0 {
        return Err(Error::Precondition("n_settle must be at least 1".into()));
    }
    let seg = record(map, q, n_settle)?;
    let d = pull_back(&seg.blocks, [1.0, 0.0])?[0];
    Ok(CentralDirection { c: d[0], u: d[1], sigma: d[1] / d[0] })
}

/// The case split of the positivity lemma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Case {
    /// `σ ≠ 0`, outside `V`.
    A1,
    /// `σ ≠ 0`, inside `V`.
    A2,
    /// `σ = 0`, outside `V`.
    B1,
    /// `σ = 0` inside `V` and `DH` keeps `E^c_f`.
    B2a,
    /// `σ = 0` inside `V` and `DH` tilts `E^c_f`.
    B2b,
}

impl Case {
    pub fn label(&self) -> &'static str {
        match self {
            Case::A1 => "A.1",
            Case::A2 => "A.2",
            Case::B1 => "B.1",
            Case::B2a => "B.2a",
            Case::B2b => "B.2b",
        }
    }
}

fn classify(in_v: bool, dir: [f64; 2], block: &Cu) -> Case {
    match (in_v, dir[1] == 0.0) {
        (false, false) => Case::A1,
        (true, false) => Case::A2,
        (false, true) => Case::B1,
        (true, true) if block[1][0] == 0.0 => Case::B2a,
        (true, true) => Case::B2b,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CaseHistogram {
    pub a1: usize,
    pub a2: usize,
    pub b1: usize,
    pub b2a: usize,
    pub b2b: usize,
}

impl CaseHistogram {
    pub fn add(&mut self, case: Case) {
        match case {
            Case::A1 => self.a1 += 1,
            Case::A2 => self.a2 += 1,
            Case::B1 => self.b1 += 1,
            Case::B2a => self.b2a += 1,
            Case::B2b => self.b2b += 1,
        }
    }

    pub fn merge(&mut self, other: &CaseHistogram) {
        self.a1 += other.a1;
        self.a2 += other.a2;
        self.b1 += other.b1;
        self.b2a += other.b2a;
        self.b2b += other.b2b;
    }

    /// `A.1:n;A.2:n;…` for CSV cells.
    pub fn compact(&self) -> String {
        format!("A.1:{};A.2:{};B.1:{};B.2a:{};B.2b:{}", self.a1, self.a2, self.b1, self.b2a, self.b2b)
    }
}

/// `ξ(q) = ‖Dg(q)|E^c_g(q)‖ − 1` and its case label.
pub fn xi_field<M: DiffMap>(map: &M, q: &M::Point, n_settle: usize) -> Result<(f64, Case)> {
    let dir = track_central_direction(map, q, n_settle)?;
    let block = cu_block(&map.jacobian(q));
    let v = [dir.c, dir.u];
    Ok((norm(apply(&block, v)) - 1.0, classify(map.in_support(q), v, &block)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralOptions {
    pub steps: usize,
    pub settle: usize,
    /// Re-settling period.
    pub block: usize,
    pub batches: usize,
}

impl Default for CentralOptions {
    fn default() -> Self {
        Self { steps: 1_000_000, settle: 80, block: 10_000, batches: 100 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CentralEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub steps: usize,
    pub settle: usize,
    pub min_summand: f64,
    pub max_summand: f64,
    /// Summands below `−10⁻⁹`.
    pub negative_summands: usize,
    pub visits: usize,
    /// Steps with `ξ > 0`.
    pub xi_positive: usize,
    pub cases: CaseHistogram,
    pub batch_means: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumEstimate {
    /// Sorted descending.
    pub exponents: Vec<f64>,
    pub stderr: Vec<f64>,
    pub steps: usize,
    pub settle: usize,
}

/// Orbit-wise central exponent and, optionally, the full QR spectrum on the
/// same orbit, in re-settled blocks.
pub fn orbit_exponents<M: DiffMap>(
    map: &M,
    q: &M::Point,
    opts: &CentralOptions,
    with_spectrum: bool,
) -> Result<(CentralEstimate, Option<SpectrumEstimate>)> {
    require_planar(map.dims())?;
    if opts.steps < 1 || opts.block < 1 || opts.settle < 1 {
        return Err(Error::Precondition("steps, block and settle must be positive".into()));
    }
    let d = map.dims().total();
    let mut central = BatchMeans::new(opts.steps, opts.batches);
    let mut columns: Vec<BatchMeans> = (0..d).map(|_| BatchMeans::new(opts.steps, opts.batches)).collect();
    let mut qr = Qr::new(d);
    let (mut min_s, mut max_s) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut negative, mut visits, mut xi_pos) = (0, 0, 0);
    let mut cases = CaseHistogram::default();
    let mut start = *q;
    let mut done = 0;
    while done < opts.steps {
        let len = opts.block.min(opts.steps - done);
        let seg = record(map, &start, len + opts.settle)?;
        let dirs = pull_back(&seg.blocks, [1.0, 0.0])?;
        for k in 0..len {
            let stretch = norm(apply(&seg.blocks[k], dirs[k]));
            let s = stretch.ln();
            central.push(s);
            min_s = min_s.min(s);
            max_s = max_s.max(s);
            if s < -1e-9 {
                negative += 1;
            }
            if stretch - 1.0 > 0.0 {
                xi_pos += 1;
            }
            if seg.in_v[k] {
                visits += 1;
            }
            cases.add(classify(seg.in_v[k], dirs[k], &seg.blocks[k]));
            if with_spectrum {
                let logs = qr.step(&seg.full[k])?;
                for (acc, l) in columns.iter_mut().zip(logs) {
                    acc.push(l);
                }
            }
        }
        start = seg.points[len];
        done += len;
    }
    let r = central.finish();
    let estimate = CentralEstimate {
        estimate: r.mean,
        stderr: r.se,
        steps: opts.steps,
        settle: opts.settle,
        min_summand: min_s,
        max_summand: max_s,
        negative_summands: negative,
        visits,
        xi_positive: xi_pos,
        cases,
        batch_means: central.means(),
    };
    let spectrum = with_spectrum.then(|| sorted_spectrum(&columns, opts.steps, opts.settle));
    Ok((estimate, spectrum))
}

pub fn central_exponent<M: DiffMap>(map: &M, q: &M::Point, opts: &CentralOptions) -> Result<CentralEstimate> {
    Ok(orbit_exponents(map, q, opts, false)?.0)
}

/// Per-step `log‖Dg|E^c_g‖` along the first `steps` iterates of `q`.
pub fn central_summands<M: DiffMap>(map: &M, q: &M::Point, steps: usize, settle: usize) -> Result<Vec<f64>> {
    require_planar(map.dims())?;
    let seg = record(map, q, steps + settle)?;
    let dirs = pull_back(&seg.blocks, [1.0, 0.0])?;
    Ok((0..steps).map(|k| norm(apply(&seg.blocks[k], dirs[k])).ln()).collect())
}

fn sorted_spectrum(columns: &[BatchMeans], steps: usize, settle: usize) -> SpectrumEstimate {
    let mut pairs: Vec<(f64, f64)> = columns.iter().map(|c| c.finish()).map(|r| (r.mean, r.se)).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    SpectrumEstimate {
        exponents: pairs.iter().map(|p| p.0).collect(),
        stderr: pairs.iter().map(|p| p.1).collect(),
        steps,
        settle,
    }
}

/// Benettin iteration state: an orthonormal frame, initially the identity.
struct Qr {
    d: usize,
    /// Column-major orthonormal frame.
    q: Vec<f64>,
    work: Vec<f64>,
}

impl Qr {
    fn new(d: usize) -> Self {
        let mut q = vec![0.0; d * d];
        for i in 0..d {
            q[i * d + i] = 1.0;
        }
        Self { d, q, work: vec![0.0; d * d] }
    }

    /// Advance by `j` and return `log|r_ii|` per column (modified Gram–Schmidt).
    fn step(&mut self, j: &FrameMatrix) -> Result<Vec<f64>> {
        let d = self.d;
        let m = j.matrix();
        for col in 0..d {
            for row in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += m[(row, k)] * self.q[col * d + k];
                }
                self.work[col * d + row] = s;
            }
        }
        let mut logs = Vec::with_capacity(d);
        for col in 0..d {
            for prev in 0..col {
                let mut dot = 0.0;
                for row in 0..d {
                    dot += self.work[prev * d + row] * self.work[col * d + row];
                }
                if dot != 0.0 {
                    for row in 0..d {
                        self.work[col * d + row] -= dot * self.work[prev * d + row];
                    }
                }
            }
            let n = (0..d).map(|row| self.work[col * d + row].powi(2)).sum::<f64>().sqrt();
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::SingularJacobian);
            }
            for row in 0..d {
                self.work[col * d + row] /= n;
            }
            logs.push(n.ln());
        }
        std::mem::swap(&mut self.q, &mut self.work);
        Ok(logs)
    }
}

/// Full spectrum by QR re-orthonormalization starting from the identity frame.
pub fn qr_spectrum<M: DiffMap>(map: &M, q: &M::Point, steps: usize, batches: usize) -> Result<SpectrumEstimate> {
    let d = map.dims().total();
    let mut columns: Vec<BatchMeans> = (0..d).map(|_| BatchMeans::new(steps, batches)).collect();
    let mut qr = Qr::new(d);
    let mut p = *q;
    for _ in 0..steps {
        let (next, j) = map.step(&p)?;
        for (acc, l) in columns.iter_mut().zip(qr.step(&j)?) {
            acc.push(l);
        }
        p = next;
    }
    Ok(sorted_spectrum(&columns, steps, 0))
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub steps: usize,
    pub settle: usize,
    pub max_angle: f64,
    pub mean_angle: f64,
}

/// Angle between `Dg(q_k)·dir(q_k)` and `dir(q_{k+1})`, each direction settled
/// independently from `settle` steps ahead.
pub fn invariance_audit<M: DiffMap>(map: &M, q: &M::Point, steps: usize, settle: usize) -> Result<InvarianceReport> {
    require_planar(map.dims())?;
    let seg = record(map, q, steps + 1 + settle)?;
    let dir_at = |k: usize| -> Result<[f64; 2]> { Ok(pull_back(&seg.blocks[k..k + settle], [1.0, 0.0])?[0]) };
    let (mut worst, mut total) = (0.0f64, 0.0);
    let mut current = dir_at(0)?;
    for k in 0..steps {
        let next = dir_at(k + 1)?;
        let a = angle(apply(&seg.blocks[k], current), next);
        worst = worst.max(a);
        total += a;
        current = next;
    }
    Ok(InvarianceReport { steps, settle, max_angle: worst, mean_angle: total / steps.max(1) as f64 })
}

#[derive(Debug, Clone, Serialize)]
pub struct MostlyExpanding {
    pub steps: usize,
    /// Average of `log‖Dmap⁻¹|E^{cu}‖`.
    pub estimate: f64,
    pub stderr: f64,
    /// `−estimate`; positive values indicate non-uniform `E^{cu}` expansion.
    pub c0: f64,
    pub min_step: f64,
    pub max_step: f64,
}

/// Birkhoff average of `log‖Dmap⁻¹|E^{cu}(map^j q)‖ = −log m(Dmap|E^{cu}(map^{j−1} q))`.
pub fn mostly_expanding_diagnostic<M: DiffMap>(map: &M, q: &M::Point, steps: usize, batches: usize) -> Result<MostlyExpanding> {
    require_planar(map.dims())?;
    let mut acc = BatchMeans::new(steps, batches);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut p = *q;
    for _ in 0..steps {
        let (next, j) = map.step(&p)?;
        let v = -conorm(&cu_block(&j)).ln();
        lo = lo.min(v);
        hi = hi.max(v);
        acc.push(v);
        p = next;
    }
    let r = acc.finish();
    Ok(MostlyExpanding { steps, estimate: r.mean, stderr: r.se, c0: -r.mean, min_step: lo, max_step: hi })
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeBlock {
    pub entry_step: usize,
    /// Steps outside `V` before re-entry.
    pub n: usize,
    pub vector: &'static str,
    pub entry_slope: f64,
    pub exit_slope: f64,
    pub realized_factor_log: f64,
    pub telescoping_error: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeAuditReport {
    pub blocks_audited: usize,
    /// Blocks whose slope range exceeds double precision.
    pub blocks_skipped: usize,
    pub max_telescoping_error: f64,
    pub bound_violations: usize,
    pub monotonicity_violations: usize,
    pub non_diagonal_steps: usize,
    /// Entries with `E^c_f` kicked to a strictly positive slope.
    pub positive_entry_kicks: usize,
    pub entries_on_plateau: usize,
    pub blocks: Vec<SlopeBlock>,
}

impl SlopeAuditReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.blocks_audited > 0
            && self.max_telescoping_error <= tol
            && self.bound_violations == 0
            && self.monotonicity_violations == 0
            && self.non_diagonal_steps == 0
    }
}

/// Audits return blocks `q ∈ V, g(q), …, g^n(q) ∉ V, g^{n+1}(q) ∈ V` along the
/// orbit of `q` for both the tracked center and `E^c_f`: the exit slope must
/// equal the entry slope after `DH` times the realized product of unstable
/// stretches, and lie within the global rate bounds.
pub fn slope_audit<S: PartiallyHyperbolicSystem>(
    g: &Perturbed<S>,
    q: &S::Point,
    blocks_wanted: usize,
    max_steps: usize,
    settle: usize,
) -> Result<SlopeAuditReport> {
    require_planar(g.dims())?;
    let rates = g.system().rates();
    let (l3, m3, c_rate) = (rates.lambda[2], rates.mu[2], rates.c_rate);
    let chunk = 10_000;
    let mut report = SlopeAuditReport {
        blocks_audited: 0,
        blocks_skipped: 0,
        max_telescoping_error: 0.0,
        bound_violations: 0,
        monotonicity_violations: 0,
        non_diagonal_steps: 0,
        positive_entry_kicks: 0,
        entries_on_plateau: 0,
        blocks: Vec::new(),
    };
    let mut start = *q;
    let mut offset = 0;
    while report.blocks_audited < blocks_wanted && offset < max_steps {
        let seg = record(g, &start, chunk + settle)?;
        let dirs = pull_back(&seg.blocks, [1.0, 0.0])?;
        // Process blocks delimited by consecutive entries of this chunk.
        let entries: Vec<usize> = (0..chunk).filter(|&k| seg.in_v[k]).collect();
        for w in entries.windows(2) {
            let (k0, k1) = (w[0], w[1]);
            audit_block(g, &seg.points[k0..=k1], dirs[k0], offset + k0, (l3, m3, c_rate), &mut report)?;
            if report.blocks_audited >= blocks_wanted {
                break;
            }
        }
        // Restart the next chunk at the last entry so no block is lost.
        let restart = entries.last().copied().filter(|&k| k > 0).unwrap_or(chunk);
        start = seg.points[restart];
        offset += restart;
    }
    Ok(report)
}

fn audit_block<S: PartiallyHyperbolicSystem>(
    g: &Perturbed<S>,
    points: &[S::Point],
    tracked: [f64; 2],
    entry_step: usize,
    (l3, m3, c_rate): (f64, f64, f64),
    report: &mut SlopeAuditReport,
) -> Result<()> {
    let f = g.system();
    let n = points.len() - 2;
    let (hq, dh) = g.dh_frame(&points[0])?;
    let dh = dh.map(|m| cu_block(&m)).unwrap_or([[1.0, 0.0], [0.0, 1.0]]);
    // Df along H(q), g(q), …, g^n(q)
    let mut dfs = Vec::with_capacity(n + 1);
    dfs.push(cu_block(&f.jacobian(&hq)));
    for p in &points[1..=n] {
        dfs.push(cu_block(&f.jacobian(p)));
    }
    if dh[1][0] != 0.0 {
        report.positive_entry_kicks += 1;
    }
    if let Some(p) = g.support_coords(&points[0]) {
        if p.iter().all(|x| x.abs() <= g.perturbation().params().eps) {
            report.entries_on_plateau += 1;
        }
    }
    for (label, v) in [("tracked", tracked), ("center_f", [1.0, 0.0])] {
        let w = apply(&dh, v);
        let entry = plane_slope(w);
        let mut realized = 0.0;
        let mut vec = [w[0] / norm(w), w[1] / norm(w)];
        let mut last = entry;
        let mut monotone_ok = true;
        for m in &dfs {
            if m[0][1] != 0.0 || m[1][0] != 0.0 {
                report.non_diagonal_steps += 1;
            }
            realized += (norm([m[0][1], m[1][1]]) / norm([m[0][0], m[1][0]])).ln();
            let next = apply(m, vec);
            let nn = norm(next);
            vec = [next[0] / nn, next[1] / nn];
            let s = plane_slope(vec);
            if label == "tracked" && s < last * (1.0 - 1e-12) {
                monotone_ok = false;
            }
            last = s;
        }
        let exit = plane_slope(vec);
        if entry == 0.0 {
            if exit != 0.0 {
                report.bound_violations += 1;
            }
            continue;
        }
        if !(entry.ln().abs() < 650.0 && realized.abs() < 650.0 && (entry.ln() + realized).abs() < 650.0) {
            report.blocks_skipped += 1;
            continue;
        }
        let predicted = entry * realized.exp();
        let err = ((exit - predicted) / predicted).abs();
        let log_ratio = (exit / entry).ln();
        let steps = (n + 1) as f64;
        let lower_ok = log_ratio >= steps * l3.ln() - c_rate.ln() - 1e-12;
        let upper_ok = log_ratio <= steps * m3.ln() + c_rate.ln() + 1e-12;
        if !(lower_ok && upper_ok) {
            report.bound_violations += 1;
        }
        if !monotone_ok {
            report.monotonicity_violations += 1;
        }
        // NaN must not vanish in the max
        report.max_telescoping_error = if err.is_nan() { f64::NAN } else { report.max_telescoping_error.max(err) };
        if label == "tracked" {
            report.blocks_audited += 1;
        }
        report.blocks.push(SlopeBlock {
            entry_step,
            n,
            vector: label,
            entry_slope: entry,
            exit_slope: exit,
            realized_factor_log: realized,
            telescoping_error: err,
            lower_ok,
            upper_ok,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::{Perturbation, TChoice};
    use crate::systems::{CatPoint, CatSuspension, GeodesicSurface, LocalChart};

    fn cat_g(theta: f64) -> Perturbed<CatSuspension> {
        let h = Perturbation::new(0.05, TChoice::CapFraction(theta), 0.2, Dims::new(1, 1, 1)).unwrap();
        Perturbed::new(CatSuspension::sqrt2(), &CatPoint::new(0.3, 0.4, 0.7), h).unwrap()
    }

    #[test]
    fn unperturbed_center_is_exactly_neutral() {
        let f = CatSuspension::sqrt2();
        let opts = CentralOptions { steps: 20_000, block: 5_000, ..Default::default() };
        let (c, s) = orbit_exponents(&f, &CatPoint::new(0.1, 0.2, 0.3), &opts, true).unwrap();
        assert_eq!(c.estimate, 0.0);
        assert_eq!(c.min_summand, 0.0);
        assert_eq!(c.cases.b1, 20_000);
        let s = s.unwrap();
        assert_eq!(s.exponents[1], 0.0);
        assert!(s.exponents.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn zero_amplitude_reproduces_f() {
        let g = cat_g(0.9).with_t(0.0).unwrap();
        let f = CatSuspension::sqrt2();
        let q = CatPoint::new(0.31, 0.41, 0.69);
        let opts = CentralOptions { steps: 30_000, block: 10_000, ..Default::default() };
        let (a, sa) = orbit_exponents(&g, &q, &opts, true).unwrap();
        let (b, sb) = orbit_exponents(&f, &q, &opts, true).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(sa.unwrap().exponents, sb.unwrap().exponents);
        assert_eq!(a.cases.b1, 30_000);
        let (xi, case) = xi_field(&g, &q, 80).unwrap();
        assert_eq!((xi, case), (0.0, Case::B1));
    }

    #[test]
    fn geodesic_spectrum() {
        let sys = GeodesicSurface::new().unwrap();
        let s = qr_spectrum(&sys, &GeoPointExt::sample(), 1000, 10).unwrap();
        for (e, x) in s.exponents.iter().zip([1.0, 0.0, -1.0]) {
            assert!((e - x).abs() < 1e-12);
        }
    }

    struct GeoPointExt;
    impl GeoPointExt {
        fn sample() -> crate::systems::GeoPoint {
            crate::systems::GeoPoint { m: [[1.1, 0.2], [0.3, (1.0 + 0.2 * 0.3) / 1.1]] }
        }
    }

    #[test]
    fn settle_lengths_agree() {
        let g = cat_g(0.9);
        let mut q = g.chart().base();
        for _ in 0..200 {
            let a = track_central_direction(&g, &q, 80).unwrap();
            let b = track_central_direction(&g, &q, 100).unwrap();
            assert!(angle([a.c, a.u], [b.c, b.u]) <= 1e-8);
            q = g.apply(&q).unwrap();
        }
    }

    #[test]
    fn tracked_direction_is_invariant() {
        let g = cat_g(0.9);
        let r = invariance_audit(&g, &CatPoint::new(0.3, 0.4, 0.7), 20_000, 80).unwrap();
        assert!(r.max_angle <= 1e-8, "{r:?}");
    }

    #[test]
    fn perturbation_tilts_center() {
        let g = cat_g(0.9);
        // right after leaving V through the plateau, the center is off E^c_f
        let q = g.chart().forward(&[0.0, 0.02, 0.0]).unwrap();
        let d = track_central_direction(&g, &q, 80).unwrap();
        assert!(d.sigma != 0.0);
    }

    #[test]
    fn slope_audit_on_cat() {
        let g = cat_g(0.9);
        let r = slope_audit(&g, &CatPoint::new(0.3, 0.4, 0.7), 50, 200_000, 80).unwrap();
        assert!(r.blocks_audited >= 50, "{} blocks", r.blocks_audited);
        assert!(r.passed(1e-10), "{r:?}");
        assert!(r.positive_entry_kicks > 0);
    }

    #[test]
    fn mostly_expanding_on_models() {
        let geo = GeodesicSurface::new().unwrap();
        let r = mostly_expanding_diagnostic(&geo, &GeoPointExt::sample(), 1000, 10).unwrap();
        assert_eq!(r.estimate, 0.0);
        let cat = CatSuspension::sqrt2();
        let r = mostly_expanding_diagnostic(&cat, &CatPoint::new(0.1, 0.2, 0.3), 1000, 10).unwrap();
        assert!(r.estimate.abs() < 1e-15);
    }

    #[test]
    fn case_labels() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        let kicked = [[1.0, 0.0], [0.1, 1.0]];
        assert_eq!(classify(false, [1.0, 0.0], &id), Case::B1);
        assert_eq!(classify(false, [0.9, 0.1], &id), Case::A1);
        assert_eq!(classify(true, [0.9, 0.1], &kicked), Case::A2);
        assert_eq!(classify(true, [1.0, 0.0], &id), Case::B2a);
        assert_eq!(classify(true, [1.0, 0.0], &kicked), Case::B2b);
    }
}
