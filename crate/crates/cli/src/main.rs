use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use poisson_forms::rng::WORKERS_ENV;
use poisson_forms_cli::config::{Check, ExperimentConfig, Potential};
use poisson_forms_cli::run::{run_all, summary, Outcome};

#[derive(Parser)]
#[command(name = "poisson-forms", version, about = "Verification battery for forms on Poisson configuration spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for the CSV and JSON artifacts.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PotentialArg {
    Zero,
    Weitzenbock,
}

#[derive(Subcommand)]
enum Command {
    /// Poisson sampling against the exact series.
    Sample(Common),
    /// Normalization, Mecke, integration by parts and the Dirichlet form.
    Identities(Common),
    /// Bochner and de Rham quadratic forms.
    Forms(Common),
    /// Pointwise Weitzenböck identity on sampled configurations.
    Weitzenbock(Common),
    /// Generator consistency of the diffusion semigroups.
    Semigroup {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long, value_enum)]
        potential: Option<PotentialArg>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Every check listed in the configuration.
    All(Common),
    /// Prints the available presets.
    ListPresets,
}

fn fail_config(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("{msg}");
    ExitCode::from(2)
}

fn load(path: &Path) -> Result<ExperimentConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("config error: cannot read {}: {e}", path.display()))?;
    ExperimentConfig::parse(&text).map_err(|e| e.to_string())
}

fn write_artifacts(dir: &Path, command: &str, cfg: &ExperimentConfig, out: &Outcome) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{command}.csv")), out.csv())?;
    let json = serde_json::to_string_pretty(&summary(command, cfg, out)).expect("summary serializes");
    fs::write(dir.join(format!("{command}.json")), json + "\n")?;
    for (name, body) in &out.artifacts {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn execute(command: &str, common: &Common, cfg: ExperimentConfig, checks: &[Check]) -> ExitCode {
    let out = match run_all(&cfg, checks) {
        Ok(o) => o,
        Err(e) => return fail_config(format!("config error: {e}")),
    };
    if let Err(e) = write_artifacts(&common.out, command, &cfg, &out) {
        eprintln!("cannot write artifacts to {}: {e}", common.out.display());
        return ExitCode::from(2);
    }
    for r in out.reports.iter().filter(|r| !r.pass) {
        eprintln!("FAIL {}: residual {:e} exceeds tolerance {:e}", r.check, r.residual, r.tol);
    }
    let failed = out.reports.iter().filter(|r| !r.pass).count();
    println!("{command}: {} checks, {failed} failed", out.reports.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn dispatch(cli: Cli) -> ExitCode {
    let (name, common, checks, cfg) = match &cli.command {
        Command::ListPresets => {
            print!("{}", poisson_forms_cli::list_presets());
            return ExitCode::SUCCESS;
        }
        Command::Sample(c) => ("sample", c, vec![Check::Sample], load(&c.config)),
        Command::Identities(c) => ("identities", c, vec![Check::Identities], load(&c.config)),
        Command::Forms(c) => ("forms", c, vec![Check::Forms], load(&c.config)),
        Command::Weitzenbock(c) => ("weitzenbock", c, vec![Check::Weitzenbock], load(&c.config)),
        Command::All(c) => {
            let cfg = load(&c.config);
            let checks = cfg.as_ref().map(|g| g.checks.clone()).unwrap_or_default();
            ("all", c, checks, cfg)
        }
        Command::Semigroup { common, t, dt, paths, potential, seed } => {
            let cfg = load(&common.config).and_then(|mut g| {
                let n = &mut g.numerics;
                n.t = t.unwrap_or(n.t);
                n.dt = dt.unwrap_or(n.dt);
                n.n_paths = paths.unwrap_or(n.n_paths);
                g.seed = seed.or(g.seed);
                if let Some(p) = potential {
                    g.potentials = vec![match p {
                        PotentialArg::Zero => Potential::Zero,
                        PotentialArg::Weitzenbock => Potential::Weitzenbock,
                    }];
                }
                let steps = (n.t / n.dt).round();
                if !(n.t > 0.0 && n.dt > 0.0) || steps < 1.0 || (steps * n.dt - n.t).abs() > 1e-9 * n.t || n.n_paths == 0 {
                    return Err(format!("config error: invalid path parameters t = {}, dt = {}, paths = {}", n.t, n.dt, n.n_paths));
                }
                Ok(g)
            });
            ("semigroup", common, vec![Check::Semigroup], cfg)
        }
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => return fail_config(e),
    };
    if cfg.seed.is_none() {
        if let Some(c) = checks.iter().find(|c| c.stochastic()) {
            return fail_config(format!("config error: check `{}` needs [seed] value", c.name()));
        }
    }
    execute(name, common, cfg, &checks)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|n| *n > 0);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    match builder.build() {
        Ok(pool) => pool.install(|| dispatch(cli)),
        Err(_) => dispatch(cli),
    }
}
