use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};
use hypexp::config::ExperimentConfig;
use hypexp::runner::{run, threads_from_env, Subcommand};

/// Central Lyapunov exponents of perturbed time-1 maps of Anosov flows.
///
/// Parallelism is capped by HYPEXP_THREADS. Exit codes: 0 pass, 1 invariant
/// failure, 2 usage error, 3 numeric hard error.
#[derive(Parser)]
#[command(name = "hypexp", version)]
enum Cli {
    /// QR (Benettin) Lyapunov spectrum along K orbits.
    Spectrum(Flags),
    /// Central exponent log‖Dg|E^c_g‖ per orbit with the case histogram.
    Central(Flags),
    /// Certificates of the shear h: C¹/C² closeness, det Dh, inversion.
    PerturbAudit(Flags),
    /// Unstable-disk pushforward approximating a u-Gibbs state.
    Ugibbs(Flags),
    /// Visit frequencies to a region and return times.
    Visits(Flags),
    /// Agreement of forward averages across initial points.
    Basin(Flags),
    /// The quick invariant suite; exits 0 iff every check passes.
    Verify(Flags),
}

#[derive(Args)]
struct Flags {
    /// `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Re-run the config embedded in a manifest.
    #[arg(long, conflicts_with = "config")]
    from_manifest: Option<PathBuf>,
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    roof: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    /// auto, cap:<θ> or a value.
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    base: Option<String>,
    /// f or g.
    #[arg(long)]
    map: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    settle: Option<String>,
    #[arg(long)]
    block: Option<String>,
    #[arg(long)]
    orbits: Option<String>,
    #[arg(long)]
    batches: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output directory, or a .csv path for the main table.
    #[arg(long)]
    out: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    disk_base: Option<String>,
    #[arg(long)]
    disk_len: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    iters: Option<String>,
    #[arg(long)]
    region: Option<String>,
    #[arg(long)]
    observables: Option<String>,
    #[arg(long)]
    eps_sweep: Option<String>,
    #[arg(long)]
    grid: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("system", &self.system),
            ("roof", &self.roof),
            ("eps", &self.eps),
            ("t", &self.t),
            ("gamma", &self.gamma),
            ("base", &self.base),
            ("map", &self.map),
            ("steps", &self.steps),
            ("settle", &self.settle),
            ("block", &self.block),
            ("orbits", &self.orbits),
            ("batches", &self.batches),
            ("seed", &self.seed),
            ("out", &self.out),
            ("start", &self.start),
            ("disk_base", &self.disk_base),
            ("disk_len", &self.disk_len),
            ("samples", &self.samples),
            ("iters", &self.iters),
            ("region", &self.region),
            ("observables", &self.observables),
            ("eps_sweep", &self.eps_sweep),
            ("grid", &self.grid),
        ]
    }

    fn config(&self) -> hypexp::Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.from_manifest) {
            (Some(path), _) => ExperimentConfig::from_file(path)?,
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)?;
                let manifest: serde_json::Value =
                    serde_json::from_str(&text).map_err(|e| hypexp::Error::Config(format!("{}: {e}", path.display())))?;
                let embedded = manifest["config_text"]
                    .as_str()
                    .ok_or_else(|| hypexp::Error::Config(format!("{}: no config_text", path.display())))?;
                ExperimentConfig::parse_str(embedded)?
            }
            (None, None) => ExperimentConfig::default(),
        };
        for (key, value) in self.pairs() {
            if let Some(v) = value {
                cfg.apply_flag(key, v)?;
            }
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (sub, flags) = match &cli {
        Cli::Spectrum(f) => (Subcommand::Spectrum, f),
        Cli::Central(f) => (Subcommand::Central, f),
        Cli::PerturbAudit(f) => (Subcommand::PerturbAudit, f),
        Cli::Ugibbs(f) => (Subcommand::Ugibbs, f),
        Cli::Visits(f) => (Subcommand::Visits, f),
        Cli::Basin(f) => (Subcommand::Basin, f),
        Cli::Verify(f) => (Subcommand::Verify, f),
    };
    let cfg = match flags.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("hypexp: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let outcome = run(sub, &cfg, threads_from_env());
    if let Some(e) = &outcome.error {
        eprintln!("hypexp {sub}: {e}");
    }
    println!("{}", serde_json::to_string_pretty(&outcome.summary).unwrap_or_default());
    for f in &outcome.files {
        eprintln!("wrote {}", outcome.dir.join(f).display());
    }
    ExitCode::from(outcome.exit_code as u8)
}
