use clap::{Args, Parser, Subcommand};
use gem_core::cli::{
    cmd_analyze, cmd_demo_pca_vs_pls, cmd_fit, cmd_simulate, AnalysisKind, RunConfig,
};
use gem_core::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// General Effect Modelling: GLM decomposition of multivariate data into
/// effect-plus-residual matrices, analyzed per design variable with PCA,
/// PLS or the elastic net.
#[derive(Parser)]
#[command(name = "gem", version, about)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the linear model and persist the decomposition.
    Fit(RunFlags),
    /// Analyze one effect's ER matrix with PCA, PLS or the elastic net.
    Analyze(RunFlags),
    /// Generate a synthetic designed dataset from a JSON spec.
    Simulate {
        /// Simulation spec (JSON).
        #[arg(long)]
        spec: PathBuf,
        /// Output CSV path; a `.truth.json` sidecar lands next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Built-in demonstrations.
    #[command(subcommand)]
    Demo(DemoCommand),
}

#[derive(Subcommand)]
enum DemoCommand {
    /// Compare the first PCA and PLS components on a built-in seeded toy.
    PcaVsPls {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 424242)]
        seed: u64,
    },
}

/// Flags shared by `fit` and `analyze`. Everything can also come from
/// `--config file.json`; explicit flags win.
#[derive(Args)]
struct RunFlags {
    /// JSON run config to start from.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Response columns: prefix, `first:last` header range, or comma list.
    #[arg(long)]
    responses: Option<String>,
    /// Sample-id column (defaults to the row index).
    #[arg(long)]
    id_column: Option<String>,
    /// Comma list of variables forced categorical.
    #[arg(long)]
    categorical: Option<String>,
    /// Comma list of variables forced continuous.
    #[arg(long)]
    continuous: Option<String>,
    /// Model formula, e.g. "y ~ disease + age".
    #[arg(long)]
    model: Option<String>,
    /// Effect term(s) to analyze (repeatable or comma list).
    #[arg(long)]
    effect: Vec<String>,
    /// pca, pls or enet.
    #[arg(long)]
    analysis: Option<String>,
    /// Maximum component count (PCA/PLS).
    #[arg(long)]
    ncomp: Option<usize>,
    /// Cross-validation: `loo` or `kfold:K`.
    #[arg(long)]
    cv: Option<String>,
    /// Seed for k-fold shuffling and anything stochastic.
    #[arg(long)]
    seed: Option<u64>,
    /// Elastic-net mixing parameter.
    #[arg(long)]
    alpha: Option<f64>,
    /// gaussian or binomial (checked against the target type).
    #[arg(long)]
    family: Option<String>,
    /// Lambda grid size.
    #[arg(long)]
    nlambda: Option<usize>,
    /// Run shaving; optional value is the per-step drop fraction.
    #[arg(long, num_args = 0..=1, default_missing_value = "0.2")]
    shave: Option<f64>,
    /// Compute jackknife p-values.
    #[arg(long)]
    jackknife: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Natural-log transform responses before fitting.
    #[arg(long)]
    log: bool,
    /// Scale responses to unit variance before fitting.
    #[arg(long)]
    scale_responses: bool,
    /// Add the grand-mean row back when exporting ER matrices.
    #[arg(long)]
    add_intercept_to_er: bool,
    /// Embed effect/residual/ER matrices in gemfit.json.
    #[arg(long)]
    embed_matrices: bool,
    /// Write per-term ER matrices as CSV during fit.
    #[arg(long)]
    write_er: bool,
    /// Autoscale ER columns in PCA.
    #[arg(long)]
    scale_er: bool,
}

fn split_list(text: &str) -> Vec<String> {
    text.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

impl RunFlags {
    fn into_config(self) -> Result<RunConfig, Error> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig {
                data: PathBuf::new(),
                responses: String::new(),
                id_column: None,
                categorical: Vec::new(),
                continuous: Vec::new(),
                model: String::new(),
                effect: Vec::new(),
                analysis: None,
                ncomp: None,
                cv: "loo".into(),
                seed: 0,
                alpha: 0.5,
                family: None,
                nlambda: 100,
                shave: None,
                jackknife: false,
                out: PathBuf::from("out"),
                log_transform: false,
                scale_responses: false,
                add_intercept_to_er: false,
                embed_matrices: false,
                write_er: false,
                scale_er: false,
            },
        };
        if let Some(v) = self.data {
            config.data = v;
        }
        if let Some(v) = self.responses {
            config.responses = v;
        }
        if let Some(v) = self.id_column {
            config.id_column = Some(v);
        }
        if let Some(v) = self.categorical {
            config.categorical = split_list(&v);
        }
        if let Some(v) = self.continuous {
            config.continuous = split_list(&v);
        }
        if let Some(v) = self.model {
            config.model = v;
        }
        if !self.effect.is_empty() {
            config.effect = self.effect.iter().flat_map(|e| split_list(e)).collect();
        }
        if let Some(v) = self.analysis {
            config.analysis = Some(AnalysisKind::parse(&v)?);
        }
        if let Some(v) = self.ncomp {
            config.ncomp = Some(v);
        }
        if let Some(v) = self.cv {
            config.cv = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.alpha {
            config.alpha = v;
        }
        if let Some(v) = self.family {
            config.family = Some(v);
        }
        if let Some(v) = self.nlambda {
            config.nlambda = v;
        }
        if let Some(v) = self.shave {
            config.shave = Some(v);
        }
        if self.jackknife {
            config.jackknife = true;
        }
        if let Some(v) = self.out {
            config.out = v;
        }
        if self.log {
            config.log_transform = true;
        }
        if self.scale_responses {
            config.scale_responses = true;
        }
        if self.add_intercept_to_er {
            config.add_intercept_to_er = true;
        }
        if self.embed_matrices {
            config.embed_matrices = true;
        }
        if self.write_er {
            config.write_er = true;
        }
        if self.scale_er {
            config.scale_er = true;
        }
        if config.data.as_os_str().is_empty() {
            return Err(Error::InvalidArgument("--data is required".into()));
        }
        if config.responses.is_empty() {
            return Err(Error::InvalidArgument("--responses is required".into()));
        }
        if config.model.is_empty() {
            return Err(Error::InvalidArgument("--model is required".into()));
        }
        Ok(config)
    }
}

/// Exit code 1 for data/model failures, 2 for usage problems.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) | Error::Formula(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("GEM_THREADS") {
        if let Ok(n) = threads.trim().parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let args = CliArgs::parse();
    let outcome = match args.command {
        Command::Fit(flags) => flags.into_config().and_then(|c| cmd_fit(&c)),
        Command::Analyze(flags) => flags.into_config().and_then(|c| cmd_analyze(&c)),
        Command::Simulate { spec, out } => cmd_simulate(&spec, &out),
        Command::Demo(DemoCommand::PcaVsPls { out, seed }) => cmd_demo_pca_vs_pls(&out, seed),
    };
    match outcome {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
