use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fis::config::{self, ConfigError, Overrides, RunConfig};
use fis::experiments::{self, Check, Mode};
use fis::lsq;
use fis::manifest::RunManifest;
use fis::report::{self, float};
use fis_core::model::ToyDiT;

#[derive(Parser)]
#[command(
    name = "fis",
    version,
    about = "Frame-sparse inference on a toy video DiT"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Denoise each seed densely and/or sparsely and dump latents and ledgers.
    Run(Shared),
    /// Interleaving and protection ablations.
    Ablate(Shared),
    /// Temporal redundancy statistics over dense runs.
    Diagnose(Shared),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Dense,
    Sparse,
    Both,
}

#[derive(Args)]
struct Shared {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "FIS_OUT", default_value = "fis-out")]
    out: PathBuf,
    /// Comma-separated seeds.
    #[arg(long, default_value = "0")]
    seed: String,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,
    #[arg(long)]
    tail: Option<usize>,
    /// Comma-separated sensitive block indices; empty for none.
    #[arg(long)]
    sensitive: Option<String>,
    #[arg(long)]
    no_interleave: bool,
}

enum Failure {
    Config(String),
    Io(String),
    Assertion(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
            Failure::Assertion(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Io(m) | Failure::Assertion(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<fis_core::Error> for Failure {
    fn from(e: fis_core::Error) -> Self {
        match e {
            fis_core::Error::Config(_) | fis_core::Error::InvalidArgument(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Assertion(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<lsq::LsqError> for Failure {
    fn from(e: lsq::LsqError) -> Self {
        match e {
            lsq::LsqError::Io(_) => Failure::Io(e.to_string()),
            _ => Failure::Assertion(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Ablate(args) => cmd_ablate(args),
        Command::Diagnose(args) => cmd_diagnose(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

struct Setup {
    config: RunConfig,
    model: ToyDiT,
    seeds: Vec<u64>,
    manifest: RunManifest,
}

fn setup(command: &str, args: &Shared, mode: Option<&str>) -> Result<Setup, Failure> {
    let sensitive = match &args.sensitive {
        Some(list) => Some(
            config::parse_list(list).map_err(|e| Failure::Config(format!("--sensitive: {e}")))?,
        ),
        None => None,
    };
    let overrides = Overrides {
        stride: args.stride,
        tail: args.tail,
        sensitive,
        no_interleave: args.no_interleave,
    };
    let config = config::load(args.config.as_deref(), &overrides)?;
    let seeds: Vec<u64> =
        config::parse_list(&args.seed).map_err(|e| Failure::Config(format!("--seed: {e}")))?;
    if seeds.is_empty() {
        return Err(Failure::Config(
            "--seed: at least one seed is required".into(),
        ));
    }
    let model = ToyDiT::new(config.model.clone())?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", args.out.display())))?;
    let manifest = RunManifest::new(command, &config, &seeds, mode, &args.out);
    report::write_atomic(
        &args.out.join("manifest.json"),
        manifest.to_json().as_bytes(),
    )?;
    Ok(Setup {
        config,
        model,
        seeds,
        manifest,
    })
}

fn mode_name(m: ModeArg) -> (&'static str, Mode) {
    match m {
        ModeArg::Dense => ("dense", Mode::Dense),
        ModeArg::Sparse => ("sparse", Mode::Sparse),
        ModeArg::Both => ("both", Mode::Both),
    }
}

fn cmd_run(args: &Shared) -> Result<(), Failure> {
    let (name, mode) = mode_name(args.mode);
    let s = setup("run", args, Some(name))?;
    let out = &args.out;
    let mut metrics = Vec::new();
    for &seed in &s.seeds {
        let run = experiments::run_seed(&s.model, &s.config.sparsity, seed, mode)?;
        let dense_madds = run.dense.ledger.counted_madds();
        metrics.push((format!("seed{seed}.dense_madds"), dense_madds.to_string()));
        if mode != Mode::Sparse {
            lsq::write(
                &out.join(format!("dense_seed{seed}.lsq")),
                &run.dense.latent,
            )?;
            report::ledger_table(&s.manifest, &run.dense.ledger)
                .write(&out.join(format!("ledger_dense_seed{seed}.csv")))?;
        }
        if let Some(sparse) = &run.sparse {
            lsq::write(&out.join(format!("sparse_seed{seed}.lsq")), &sparse.latent)?;
            report::ledger_table(&s.manifest, &sparse.ledger)
                .write(&out.join(format!("ledger_sparse_seed{seed}.csv")))?;
            let errors = run.per_frame_error().expect("sparse run present")?;
            report::per_frame_error_table(&s.manifest, &errors)
                .write(&out.join(format!("per_frame_error_seed{seed}.csv")))?;
            let speedup = run.speedup().expect("sparse run present");
            let diff = run.max_abs_diff().expect("sparse run present")?;
            metrics.push((
                format!("seed{seed}.sparse_madds"),
                sparse.ledger.counted_madds().to_string(),
            ));
            metrics.push((format!("seed{seed}.speedup"), float(speedup)));
            metrics.push((format!("seed{seed}.max_abs_diff"), float(diff as f64)));
            metrics.push((
                format!("seed{seed}.mean_error"),
                float(experiments::mean(&errors)),
            ));
            eprintln!(
                "seed {seed}: speedup {speedup:.3}, max abs diff {diff:.3e}, mean error {:.4e}",
                experiments::mean(&errors)
            );
        } else {
            eprintln!("seed {seed}: dense");
        }
        if !run.dense.ledger.is_consistent()
            || run
                .sparse
                .as_ref()
                .is_some_and(|s| !s.ledger.is_consistent())
        {
            return Err(Failure::Assertion(format!(
                "seed {seed}: counted madds differ from the closed form"
            )));
        }
    }
    report::summary_table(&s.manifest, &metrics, &[]).write(&out.join("summary.csv"))?;
    Ok(())
}

fn cmd_ablate(args: &Shared) -> Result<(), Failure> {
    let s = setup("ablate", args, None)?;
    let ablation =
        experiments::ablate(&s.model, &s.config.sparsity, &[3, 4, 5], &s.seeds, |line| {
            eprintln!("{line}")
        })?;
    report::ablation_table(&s.manifest, &ablation.cells).write(&args.out.join("ablation.csv"))?;
    report::summary_table(&s.manifest, &[], &ablation.checks)
        .write(&args.out.join("summary.csv"))?;
    let failed: Vec<&str> = ablation
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    for c in &ablation.checks {
        eprintln!(
            "{} {}: {}",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(format!(
            "ablation checks failed: {}",
            failed.join(", ")
        )))
    }
}

fn cmd_diagnose(args: &Shared) -> Result<(), Failure> {
    let s = setup("diagnose", args, None)?;
    let out: &Path = &args.out;
    let report = experiments::diagnose(&s.model, &s.config.sparsity, &s.seeds, |line| {
        eprintln!("{line}")
    })?;
    report::rel_change_table(&s.manifest, &report).write(&out.join("rel_change.csv"))?;
    report::cv_table(&s.manifest, &report).write(&out.join("cv_heatmap.csv"))?;
    if let Some(errors) = &report.per_frame_errors {
        report::per_frame_error_table(&s.manifest, errors)
            .write(&out.join("per_frame_error.csv"))?;
    }
    let mut metrics: Vec<(String, String)> = report.metadata.clone();
    let probe = fis_core::diagnostics::synthetic_probe();
    let check = match &probe {
        Ok(r) => {
            metrics.push(("synthetic.mean_cv".into(), float(r.cv_matrix[0].mean_cv)));
            Check::new("synthetic_flatness", true, "flat")
        }
        Err(e) => Check::new("synthetic_flatness", false, e.to_string()),
    };
    report::summary_table(&s.manifest, &metrics, std::slice::from_ref(&check))
        .write(&out.join("summary.csv"))?;
    match probe {
        Ok(_) => Ok(()),
        Err(e) => Err(Failure::Assertion(format!("synthetic probe: {e}"))),
    }
}
