//! `riemgrid` command-line runner.
//!
//! Exit codes: 0 all verdicts pass, 1 some verdict fails (or a certificate
//! does not validate), 2 parse or input error, 3 execution error.

mod figures;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use riemgrid::covers::validate_certificate;
use riemgrid::experiment::{self, gallery, ExperimentConfig, RunOptions, RunOutput, Verdict};
use riemgrid::io::{read_certificate, read_field};
use riemgrid::Error;

#[derive(Parser)]
#[command(name = "riemgrid", version, about = "Discrete Riemannian geometry experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output directory (default: the config's run.out, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run at this single resolution instead of the configured list.
    #[arg(long)]
    resolution: Option<usize>,
    /// Seed for randomized builders (overrides run.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Also write SVG figures.
    #[arg(long)]
    figures: bool,
    /// Worker threads for the data-parallel kernels.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// List the canonical experiments, print one config, or run some.
    Gallery {
        /// Items to run; lists the gallery when empty.
        names: Vec<String>,
        /// Run every item.
        #[arg(long)]
        all: bool,
        /// Print the configs of one item instead of running it.
        #[arg(long, value_name = "NAME")]
        dump: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Convergence table of one quantity over the configured resolutions.
    Refine {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        quantity: String,
        #[command(flatten)]
        common: Common,
    },
    /// Re-check a width certificate against a field.
    ValidateCertificate {
        certificate: PathBuf,
        /// Field file written by riemgrid.
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        field: Option<PathBuf>,
        /// Config that rebuilds the field at the certificate's resolution.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

enum Failure {
    Input(String),
    Exec(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Io(_) => Failure::Input(e.to_string()),
            other => Failure::Exec(other.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Run { config, common } => run_config(&config, &common),
        Command::Gallery { names, all, dump, common } => run_gallery(names, all, dump, &common),
        Command::Refine { config, quantity, common } => refine(&config, &quantity, &common),
        Command::ValidateCertificate { certificate, field, config, threads } => {
            set_threads(threads).and_then(|_| validate(&certificate, field.as_deref(), config.as_deref()))
        }
    };
    match out {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Exec(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn set_threads(threads: Option<usize>) -> Result<(), Failure> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(Failure::Input("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Exec(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path, common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::parse(&read(path)?)?;
    apply(&mut cfg, common)?;
    Ok(cfg)
}

fn apply(cfg: &mut ExperimentConfig, common: &Common) -> Result<(), Failure> {
    if let Some(n) = common.resolution {
        cfg.run.resolutions = vec![n];
    }
    if let Some(s) = common.seed {
        cfg.run.seed = Some(s);
        if let Some(m) = cfg.metric.as_mut() {
            m.params.remove("seed");
        }
    }
    cfg.validate()?;
    Ok(())
}

fn out_dir(cfg: &ExperimentConfig, common: &Common) -> Result<PathBuf, Failure> {
    let dir = common.out.clone().or_else(|| cfg.run.out.as_ref().map(PathBuf::from)).unwrap_or_else(|| "out".into());
    fs::create_dir_all(&dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Exec(format!("{}: {e}", path.display())))
}

fn execute(cfg: &ExperimentConfig, common: &Common) -> Outcome {
    let opts = RunOptions { figures: common.figures, ..Default::default() };
    let out: RunOutput = experiment::run(cfg, opts)?;
    let dir = out_dir(cfg, common)?;
    write(&dir.join(format!("{}.csv", cfg.id())), &experiment::rows_to_csv(&out.rows))?;
    for (name, text) in &out.artifacts {
        write(&dir.join(name), text)?;
    }
    for fig in &out.figures {
        write(&dir.join(format!("{}.svg", fig.name)), &figures::render(fig))?;
    }
    let failed: Vec<_> = out.rows.iter().filter(|r| r.verdict() == Verdict::Fail).collect();
    for r in &failed {
        println!("FAIL {} N={} {} = {} (reference {:?})", r.experiment, r.resolution, r.quantity, r.value, r.reference);
    }
    println!(
        "{}: {} rows, {} failed, report {}",
        cfg.id(),
        out.rows.len(),
        failed.len(),
        dir.join(format!("{}.csv", cfg.id())).display()
    );
    Ok(failed.is_empty())
}

fn run_config(path: &Path, common: &Common) -> Outcome {
    set_threads(common.threads)?;
    let cfg = load_config(path, common)?;
    execute(&cfg, common)
}

fn run_gallery(names: Vec<String>, all: bool, dump: Option<String>, common: &Common) -> Outcome {
    if let Some(name) = dump {
        let item = gallery::find(&name).ok_or_else(|| Failure::Input(format!("no gallery item '{name}'")))?;
        let mut o = io::stdout().lock();
        for (k, c) in item.configs.iter().enumerate() {
            if item.configs.len() > 1 {
                let _ = writeln!(o, "# config {} of {}", k + 1, item.configs.len());
            }
            let _ = write!(o, "{c}");
        }
        return Ok(true);
    }
    let items: Vec<gallery::GalleryItem> = if all {
        gallery::gallery()
    } else if names.is_empty() {
        let mut o = io::stdout().lock();
        for g in gallery::gallery() {
            let _ = writeln!(o, "{:<22} {}", g.name, g.description);
        }
        return Ok(true);
    } else {
        names
            .iter()
            .map(|n| gallery::find(n).ok_or_else(|| Failure::Input(format!("no gallery item '{n}'"))))
            .collect::<Result<_, _>>()?
    };
    set_threads(common.threads)?;
    let mut ok = true;
    for item in items {
        for mut cfg in item.parsed()? {
            apply(&mut cfg, common)?;
            ok &= execute(&cfg, common)?;
        }
    }
    Ok(ok)
}

fn refine(path: &Path, quantity: &str, common: &Common) -> Outcome {
    set_threads(common.threads)?;
    let cfg = load_config(path, common)?;
    if cfg.run.resolutions.len() < 3 {
        return Err(Failure::Input("refine needs at least 3 resolutions".into()));
    }
    let table = experiment::refine(&cfg, quantity, RunOptions::default())?;
    let csv = table.to_csv();
    let dir = out_dir(&cfg, common)?;
    write(&dir.join(format!("{}_refine_{quantity}.csv", cfg.id())), &csv)?;
    let mut o = io::stdout().lock();
    let _ = write!(o, "{csv}");
    let _ = writeln!(o, "errors non-increasing: {}", table.non_increasing);
    Ok(true)
}

fn validate(cert_path: &Path, field: Option<&Path>, config: Option<&Path>) -> Outcome {
    let (desc, cert) = read_certificate(&read(cert_path)?)?;
    let field = match (field, config) {
        (Some(f), _) => read_field(&read(f)?)?,
        (None, Some(c)) => {
            let cfg = ExperimentConfig::from_toml(&read(c)?)?;
            cfg.field(desc.resolution)?.ok_or_else(|| Failure::Input("config has no field".into()))?
        }
        (None, None) => return Err(Failure::Input("need --field or --config".into())),
    };
    let reasons = validate_certificate(&field, &cert);
    if reasons.is_empty() {
        println!("valid: R = {}, multiplicity {}, {} sets", cert.r, cert.cover.multiplicity, cert.cover.len());
        Ok(true)
    } else {
        for r in &reasons {
            println!("invalid: {r}");
        }
        Ok(false)
    }
}
