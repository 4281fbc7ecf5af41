//! `gridge` command line.
//!
//! Exit status: 0 on success, 1 for invalid input or usage, 2 for numerical
//! failures (rank deficiency, singular auxiliary systems, exhausted
//! bootstrap).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridge_core::inference::BootstrapConfig;
use gridge_core::selection::GridSpec;
use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::io::{load_correlation, load_csv_excluding, parse_list};
use crate::model::{parse_grid, parse_rule, parse_shape, Analysis};
use crate::parallel;
use crate::report::{self, Format};

#[derive(Debug, Parser)]
#[command(name = "gridge", version, about = "Generalized ridge regression with multicollinearity diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coefficients of variation, augmented correlations, VIFs and condition number.
    Diagnose {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "zero")]
        penalty: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Coefficients, standard errors, MSE, goodness of fit and condition number.
    Estimate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "zero")]
        penalty: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Penalty selection rules.
    Select {
        #[command(flatten)]
        input: InputArgs,
        /// hkb, hk, min, min-uniform, min-single:L, cn-threshold, mse-crossing or plateau (repeatable).
        #[arg(long, required = true)]
        rule: Vec<String>,
        #[command(flatten)]
        search: SearchArgs,
        /// Condition-number target for cn-threshold.
        #[arg(long, default_value_t = 10.0)]
        threshold: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Diagnostics over a grid of uniform or single-direction penalties.
    Trace {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
        format: FormatArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Pairs-bootstrap percentile intervals for a fixed penalty.
    Bootstrap {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "zero")]
        penalty: String,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV of raw observations with a header row.
    #[arg(long, conflicts_with = "correlation_matrix")]
    pub input: Option<PathBuf>,
    /// Name of the response column.
    #[arg(long, requires = "input")]
    pub dependent: Option<String>,
    /// Columns to ignore (comma separated or repeated).
    #[arg(long, value_delimiter = ',', requires = "input")]
    pub exclude: Vec<String>,
    /// CSV of the regressor correlation matrix, header row = names.
    #[arg(long, requires_all = ["beta_ols", "sigma2", "n"])]
    pub correlation_matrix: Option<PathBuf>,
    /// OLS coefficients of the standardized model, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub beta_ols: Option<String>,
    /// Residual variance of the standardized OLS fit.
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Number of observations.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// uniform or single:L.
    #[arg(long, default_value = "uniform")]
    pub kind: String,
    /// lower:upper:step.
    #[arg(long, default_value = "0:1:1e-5")]
    pub grid: String,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
    /// Write here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Tsv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Tsv => Format::Tsv,
        }
    }
}

impl InputArgs {
    pub fn load(&self) -> Result<Analysis> {
        if let Some(path) = &self.input {
            let dependent =
                self.dependent.as_deref().ok_or_else(|| Error::Usage("--input needs --dependent".into()))?;
            return Analysis::from_raw(load_csv_excluding(path, dependent, &self.exclude)?);
        }
        let Some(path) = &self.correlation_matrix else {
            return Err(Error::Usage("either --input or --correlation-matrix is required".into()));
        };
        let (names, r) = load_correlation(path)?;
        let beta = parse_list(self.beta_ols.as_deref().unwrap_or_default())?;
        let sigma2 = self.sigma2.ok_or_else(|| Error::Usage("--sigma2 is required".into()))?;
        let n = self.n.ok_or_else(|| Error::Usage("--n is required".into()))?;
        Analysis::from_correlation(names, r, DVector::from_vec(beta), sigma2, n)
    }
}

/// Writes the whole report at once; files go through a temporary sibling
/// that is renamed into place.
fn emit(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    fn io_err(p: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
        move |source| Error::Io { path: p.to_path_buf(), source }
    }
    match path {
        None => stdout.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>"))),
        Some(path) => {
            let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
            tmp.write_all(text.as_bytes()).map_err(io_err(path))?;
            tmp.persist(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e.error })?;
            Ok(())
        }
    }
}

/// Runs a parsed command and returns the rendered report.
pub fn execute(command: &Command) -> Result<(String, Option<PathBuf>)> {
    let default_grid = GridSpec::default();
    match command {
        Command::Diagnose { input, penalty, output } => {
            let a = input.load()?;
            let k = a.penalty(&penalty.parse()?, &default_grid)?;
            let text = report::render(&report::diagnostics(&a, &a.diagnose(&k)?), output.format.into());
            Ok((text, output.output.clone()))
        }
        Command::Estimate { input, penalty, output } => {
            let a = input.load()?;
            let k = a.penalty(&penalty.parse()?, &default_grid)?;
            let text = report::render(&report::estimate(&a, &a.estimate(&k)?)?, output.format.into());
            Ok((text, output.output.clone()))
        }
        Command::Select { input, rule, search, threshold, output } => {
            let a = input.load()?;
            let kind = parse_shape(&search.kind)?;
            let grid = parse_grid(&search.grid)?;
            let results =
                rule.iter().map(|r| a.select(parse_rule(r, kind, *threshold)?, &grid)).collect::<Result<Vec<_>>>()?;
            let text = report::render(&report::selection(&a, &results), output.format.into());
            Ok((text, output.output.clone()))
        }
        Command::Trace { input, search, format, output } => {
            let a = input.load()?;
            let table = parallel::trace(&a, parse_shape(&search.kind)?, &parse_grid(&search.grid)?)?;
            Ok((table.render((*format).into()), output.clone()))
        }
        Command::Bootstrap { input, penalty, replicates, seed, level, output } => {
            let a = input.load()?;
            let raw =
                a.raw.as_ref().ok_or_else(|| Error::Usage("bootstrap needs raw observations (--input)".into()))?;
            let k = a.penalty(&penalty.parse()?, &default_grid)?;
            let config = BootstrapConfig::new(*replicates, *seed, *level)?;
            let report = parallel::bootstrap(raw, k, config)?;
            Ok((report::render(&report::bootstrap(&a, &report), output.format.into()), output.output.clone()))
        }
    }
}

/// Parses `args`, runs the command and returns the exit status. Reports go
/// to `stdout`, messages to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = execute(&cli.command).and_then(|(text, path)| emit(&text, path.as_deref(), stdout));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "gridge: {e}");
            e.exit_code()
        }
    }
}

pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
