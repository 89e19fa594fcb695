//! Drive a subcommand from a `key = value` config, as the binary does, and
//! list what it wrote.

use hypexp::config::ExperimentConfig;
use hypexp::runner::{run, Subcommand};

fn main() -> hypexp::Result<()> {
    let out = std::env::temp_dir().join("hypexp-example");
    let cfg = ExperimentConfig::parse_str(&format!(
        "system = cat\nt = cap:0.9\nsteps = 50000\norbits = 4\nseed = 1\nout = {}\n",
        out.display()
    ))?;
    print!("{cfg}");
    for sub in [Subcommand::Central, Subcommand::Verify] {
        let r = run(sub, &cfg, None);
        println!("{sub}: exit {} -> {}", r.exit_code, r.dir.display());
        for f in &r.files {
            println!("  {f}");
        }
    }
    Ok(())
}
