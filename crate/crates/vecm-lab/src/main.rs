use std::path::PathBuf;
use std::process::ExitCode as ProcessExit;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vecm_core::dataset::{
    apply_transforms, descriptive_stats, first_difference, Deterministic, TimeSeriesTable,
    Transform, TransformSpec,
};
use vecm_core::diagnostics::{granger_short_run, lm_autocorrelation, stability, weak_exogeneity};
use vecm_core::johansen::{estimate_vecm, normalize_beta, trace_test, VecmDeterministic, VecmSpec};
use vecm_core::structural::{bootstrap_bands, fevd, irf, BootstrapSettings, Ordering};
use vecm_core::synthetic::{simulate, VecmDgp};
use vecm_core::unitroot::{adf_test, IntegrationOrder, LagSelection};
use vecm_core::varbase::lag_order_table;

use vecm_lab::config::{preset_ordering, RunConfig};
use vecm_lab::error::CliError;
use vecm_lab::pipeline::run_pipeline;
use vecm_lab::report::*;

/// Cointegration toolkit: unit roots, Johansen trace test, VECM estimation,
/// diagnostics, impulse responses, and variance decompositions.
#[derive(Parser)]
#[command(name = "vecm-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV: header row, one date column (YYYYQn or first-day-of-quarter
    /// ISO dates), numeric columns.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "date")]
    date_column: String,
    /// Column to log-transform before analysis (repeatable).
    #[arg(long = "log")]
    log: Vec<String>,
}

impl DataArgs {
    fn load(&self) -> Result<TimeSeriesTable, CliError> {
        let table = TimeSeriesTable::load_csv(&self.input, &self.date_column)?;
        let mut spec = TransformSpec::new();
        for name in table.names() {
            let transform = if self.log.iter().any(|l| l == name) {
                Transform::Log
            } else {
                Transform::Level
            };
            spec.set(name, transform, Deterministic::Constant);
        }
        Ok(apply_transforms(&table, &spec)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DetArg {
    Constant,
    ConstantTrend,
}

impl From<DetArg> for Deterministic {
    fn from(value: DetArg) -> Self {
        match value {
            DetArg::Constant => Deterministic::Constant,
            DetArg::ConstantTrend => Deterministic::ConstantTrend,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VecmDetArg {
    Constant,
    RestrictedTrend,
}

impl From<VecmDetArg> for VecmDeterministic {
    fn from(value: VecmDetArg) -> Self {
        match value {
            VecmDetArg::Constant => VecmDeterministic::ConstantOnly,
            VecmDetArg::RestrictedTrend => VecmDeterministic::RestrictedTrend,
        }
    }
}

#[derive(Args)]
struct ModelArgs {
    /// VAR lag order; defaults to the Schwarz choice over 1..=8.
    #[arg(long)]
    lags: Option<usize>,
    /// Cointegration rank; defaults to the 5% trace-test selection.
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, value_enum, default_value = "restricted-trend")]
    deterministic: VecmDetArg,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the full pipeline described by a TOML configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Descriptive statistics per variable.
    Stats {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        json: bool,
    },
    /// Augmented Dickey-Fuller tests in levels and first differences.
    Adf {
        #[command(flatten)]
        data: DataArgs,
        /// Variables to test (default: all).
        #[arg(long = "var")]
        vars: Vec<String>,
        #[arg(long, value_enum, default_value = "constant")]
        deterministic: DetArg,
        /// Fixed augmentation lag (default: Schwarz-selected).
        #[arg(long)]
        lags: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        json: bool,
    },
    /// VAR lag-order criteria table.
    Lags {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 8)]
        p_max: usize,
        #[arg(long, value_enum, default_value = "constant")]
        deterministic: DetArg,
        #[arg(long)]
        json: bool,
    },
    /// Johansen trace cointegration test.
    Trace {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        json: bool,
    },
    /// Rank-restricted VECM estimate with normalized long-run relations.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Variables carrying the identity block, comma separated (default:
        /// the first r columns).
        #[arg(long, value_delimiter = ',')]
        normalize: Option<Vec<String>>,
        #[arg(long)]
        json: bool,
    },
    /// Stability, autocorrelation, weak exogeneity, and Granger tests.
    Diagnose {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2])]
        lm_lags: Vec<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Orthogonalized impulse responses with optional bootstrap bands.
    Irf {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Preset name (order1..order4) or comma-separated variable list,
        /// most exogenous first.
        #[arg(long)]
        ordering: String,
        #[arg(long, default_value_t = 6)]
        horizon: usize,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Skip the bootstrap and report point responses only.
        #[arg(long)]
        no_bands: bool,
        #[arg(long)]
        json: bool,
    },
    /// Forecast-error variance decomposition.
    Fevd {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        ordering: String,
        #[arg(long, default_value_t = 6)]
        horizon: usize,
        #[arg(long)]
        json: bool,
    },
    /// Write a synthetic cointegrated panel in the standard CSV format.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        t: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        rank: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ProcessExit {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ProcessExit::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ProcessExit::from(err.exit_code() as u8)
        }
    }
}

fn print_report<T: serde::Serialize>(value: &T, text: String, json: bool) {
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(value).expect("serializable report")
        );
    } else {
        print!("{text}");
    }
}

/// Resolve `--lags`/`--rank` defaults against the data.
fn resolve_model(
    table: &TimeSeriesTable,
    model: &ModelArgs,
) -> Result<(usize, usize, VecmDeterministic), CliError> {
    let det: VecmDeterministic = model.deterministic.into();
    let lags = match model.lags {
        Some(l) => l,
        None => {
            let var_det = match det {
                VecmDeterministic::RestrictedTrend => Deterministic::ConstantTrend,
                VecmDeterministic::ConstantOnly => Deterministic::Constant,
            };
            lag_order_table(table, 8, var_det)?.best_schwarz
        }
    };
    let rank = match model.rank {
        Some(r) => r,
        None => trace_test(table, lags, det)?.selected_rank_5pct,
    };
    Ok((lags, rank, det))
}

fn parse_ordering(spec: &str, names: &[String]) -> Result<Ordering, CliError> {
    let list: Vec<String> = match preset_ordering(spec) {
        Some(preset) => preset.into_iter().map(|s| s.to_string()).collect(),
        None => spec.split(',').map(|s| s.trim().to_string()).collect(),
    };
    Ok(Ordering::new(list, names)?)
}

fn fitted_model(
    data: &DataArgs,
    model: &ModelArgs,
    normalize: Option<&[String]>,
) -> Result<vecm_core::johansen::VecmFit, CliError> {
    let table = data.load()?;
    let (lags, rank, det) = resolve_model(&table, model)?;
    let mut fit = estimate_vecm(
        &table,
        VecmSpec {
            lags,
            rank,
            deterministic: det,
        },
    )?;
    if rank > 0 {
        let normalization: Vec<String> = match normalize {
            Some(list) => list.to_vec(),
            None => table.names()[..rank].to_vec(),
        };
        fit = normalize_beta(&fit, &normalization)?;
    }
    Ok(fit)
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config } => {
            let config = RunConfig::from_path(&config)?;
            let summary = run_pipeline(&config).map_err(|e| {
                eprintln!("pipeline failed at stage {:?}", e.stage);
                e.source
            })?;
            for warning in &summary.warnings {
                eprintln!("warning: {warning}");
            }
            println!(
                "done: l = {}, r = {}, loglik = {:.4}, stable = {}; reports in {}",
                summary.lags,
                summary.rank,
                summary.loglik,
                summary.stable,
                config.output_dir.display()
            );
            Ok(())
        }

        Command::Stats { data, json } => {
            let table = data.load()?;
            let report = StatsReport {
                variables: descriptive_stats(&table)
                    .into_iter()
                    .map(|stats| StatsEntry {
                        transform: if data.log.iter().any(|l| l == &stats.name) {
                            "log".to_string()
                        } else {
                            "level".to_string()
                        },
                        stats,
                        note: None,
                    })
                    .collect(),
            };
            print_report(&report, report.render_text(), json);
            Ok(())
        }

        Command::Adf {
            data,
            vars,
            deterministic,
            lags,
            alpha,
            json,
        } => {
            let table = data.load()?;
            let det: Deterministic = deterministic.into();
            let selection = match lags {
                Some(l) => LagSelection::Fixed(l),
                None => LagSelection::Auto,
            };
            let names: Vec<String> = if vars.is_empty() {
                table.names().to_vec()
            } else {
                vars
            };
            let mut rows = Vec::new();
            for name in &names {
                let series: Vec<f64> = table.column(name)?.iter().copied().collect();
                let level = adf_test(&series, det, selection)?;
                let diffed = adf_test(&first_difference(&series)?, det, selection)?;
                let order = if level.p_value < alpha {
                    IntegrationOrder::I0
                } else if diffed.p_value < alpha {
                    IntegrationOrder::I1
                } else {
                    IntegrationOrder::I2Plus
                };
                rows.push(UnitRootRow {
                    variable: name.clone(),
                    deterministic: det,
                    level_statistic: level.statistic,
                    level_p: level.p_value,
                    level_lags: level.lags_used,
                    difference_statistic: diffed.statistic,
                    difference_p: diffed.p_value,
                    difference_lags: diffed.lags_used,
                    order,
                });
            }
            let report = UnitRootReport { alpha, rows };
            print_report(&report, report.render_text(), json);
            Ok(())
        }

        Command::Lags {
            data,
            p_max,
            deterministic,
            json,
        } => {
            let table = data.load()?;
            let table_out = lag_order_table(&table, p_max, deterministic.into())?;
            let report = LagReport {
                chosen: table_out.best_schwarz,
                chosen_by: "Schwarz minimum".to_string(),
                table: table_out,
            };
            print_report(&report, report.render_text(), json);
            Ok(())
        }

        Command::Trace { data, model, json } => {
            let table = data.load()?;
            let det: VecmDeterministic = model.deterministic.into();
            let lags = match model.lags {
                Some(l) => l,
                None => resolve_model(&table, &model)?.0,
            };
            let result = trace_test(&table, lags, det)?;
            let used_rank = model.rank.unwrap_or(result.selected_rank_5pct);
            let report = TraceReport {
                rank_source: if model.rank.is_some() {
                    "configured".to_string()
                } else {
                    "trace test at 5%".to_string()
                },
                used_rank,
                result,
            };
            print_report(&report, report.render_text(), json);
            Ok(())
        }

        Command::Fit {
            data,
            model,
            normalize,
            json,
        } => {
            let fit = fitted_model(&data, &model, normalize.as_deref())?;
            let report = FitReport::from_fit(&fit);
            print_report(&report, report.render_text(), json);
            Ok(())
        }

        Command::Diagnose {
            data,
            model,
            lm_lags,
            json,
        } => {
            let fit = fitted_model(&data, &model, None)?;
            let mut lm_tests = Vec::new();
            for lag in lm_lags {
                lm_tests.push(NamedTest {
                    name: lag.to_string(),
                    result: lm_autocorrelation(&fit, lag)?,
                });
            }
            let mut weak = Vec::new();
            if fit.rank() > 0 {
                for name in fit.names.clone() {
                    weak.push(NamedTest {
                        result: weak_exogeneity(&fit, &name)?,
                        name,
                    });
                }
            }
            let mut granger = Vec::new();
            if fit.spec.lags >= 2 {
                for cause in fit.names.clone() {
                    for effect in fit.names.clone() {
                        granger.push(GrangerEntry {
                            result: granger_short_run(&fit, &cause, &effect)?,
                            cause: cause.clone(),
                            effect,
                        });
                    }
                }
            }
            let report = DiagnosticsReport {
                stability: stability(&fit)?,
                lm_autocorrelation: lm_tests,
                weak_exogeneity: weak,
                granger,
            };
            print_report(&report, report.render_text(&fit.names), json);
            Ok(())
        }

        Command::Irf {
            data,
            model,
            ordering,
            horizon,
            reps,
            level,
            seed,
            no_bands,
            json,
        } => {
            let fit = fitted_model(&data, &model, None)?;
            let ord = parse_ordering(&ordering, &fit.names)?;
            let result = if no_bands {
                irf(&fit, &ord, horizon)?
            } else {
                bootstrap_bands(
                    &fit,
                    &ord,
                    horizon,
                    BootstrapSettings {
                        replications: reps,
                        level,
                        seed,
                    },
                )?
            };
            let report = IrfReport {
                horizon,
                blocks: vec![IrfBlock::from_result(&ordering, &fit.names, &result)],
            };
            print_report(&report, report.to_csv(), json);
            Ok(())
        }

        Command::Fevd {
            data,
            model,
            ordering,
            horizon,
            json,
        } => {
            let fit = fitted_model(&data, &model, None)?;
            let ord = parse_ordering(&ordering, &fit.names)?;
            let result = fevd(&fit, &ord, horizon.max(1))?;
            let report = FevdReport {
                steps: horizon.max(1),
                blocks: vec![FevdBlock::from_result(&ordering, &fit.names, &result)],
            };
            print_report(&report, report.to_csv(), json);
            Ok(())
        }

        Command::Simulate {
            out,
            t,
            k,
            rank,
            seed,
        } => {
            let dgp = VecmDgp::demo(k, rank)?;
            let table = simulate(&dgp, t, seed)?;
            table.save_csv(&out, "date")?;
            println!(
                "wrote {} ({} quarters, {} variables, rank {rank}, seed {seed})",
                out.display(),
                t,
                k
            );
            Ok(())
        }
    }
}
