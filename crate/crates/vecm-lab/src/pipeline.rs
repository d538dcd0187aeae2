//! Staged end-to-end run: dataset -> unit roots -> lag selection -> trace
//! test -> VECM fit -> diagnostics -> IRF/FEVD -> sign comparison.
//!
//! Each stage writes its own JSON (source of record) and text rendering
//! under the configured output directory with stable filenames. A stage
//! failure leaves the earlier outputs in place next to a `failure.json`
//! marker. Identical config + input produce byte-identical outputs.

use std::path::Path;

use serde::Serialize;
use serde_json::json;

use vecm_core::dataset::{
    apply_transforms, descriptive_stats, first_difference, TimeSeriesTable, Transform,
    TransformSpec,
};
use vecm_core::diagnostics::{granger_short_run, lm_autocorrelation, stability, weak_exogeneity};
use vecm_core::johansen::{estimate_vecm, normalize_beta, trace_test, VecmDeterministic, VecmSpec};
use vecm_core::structural::{bootstrap_bands, fevd, irf, BootstrapSettings, Ordering};
use vecm_core::unitroot::{adf_test, IntegrationOrder, LagSelection};
use vecm_core::varbase::lag_order_table;

use crate::config::RunConfig;
use crate::error::{CliError, StageContext, StageError};
use crate::report::*;
use crate::signs::sign_report;

/// Key outcomes of a pipeline run, also written as `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub variables: Vec<String>,
    pub observations: usize,
    pub lags: usize,
    pub lag_source: String,
    pub rank: usize,
    pub rank_source: String,
    pub deterministic: VecmDeterministic,
    pub loglik: f64,
    pub stable: bool,
    pub max_non_unit_modulus: f64,
    pub all_i1: bool,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
    pub notes: Vec<String>,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Self {
        Self {
            dir,
            files: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, content).map_err(|source| CliError::Output {
            path: path.display().to_string(),
            source,
        })?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable report");
        text.push('\n');
        self.write(name, &text)
    }
}

/// Run every stage, writing reports as they complete.
pub fn run_pipeline(config: &RunConfig) -> Result<Summary, StageError> {
    match run_stages(config) {
        Ok(summary) => Ok(summary),
        Err(err) => {
            // leave partial outputs behind, marked
            let marker = json!({
                "failed_stage": err.stage,
                "error": err.source.to_string(),
            });
            let path = config.output_dir.join("failure.json");
            let _ = std::fs::write(
                &path,
                serde_json::to_string_pretty(&marker).expect("marker") + "\n",
            );
            Err(err)
        }
    }
}

fn run_stages(config: &RunConfig) -> Result<Summary, StageError> {
    config.validate().stage("config")?;
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|source| CliError::Output {
            path: config.output_dir.display().to_string(),
            source,
        })
        .stage("config")?;
    let mut writer = Writer::new(&config.output_dir);
    let mut warnings: Vec<String> = Vec::new();

    // ---- dataset ----------------------------------------------------
    let raw = TimeSeriesTable::load_csv(&config.input, &config.date_column).stage("dataset")?;
    let selected = raw.select(&config.variable_names()).stage("dataset")?;
    let mut transform_spec = TransformSpec::new();
    for v in &config.variables {
        transform_spec.set(&v.name, v.transform, v.adf_deterministic);
    }
    let table = apply_transforms(&selected, &transform_spec).stage("dataset")?;

    let stats = StatsReport {
        variables: descriptive_stats(&table)
            .into_iter()
            .zip(&config.variables)
            .map(|(stats, vc)| StatsEntry {
                stats,
                transform: match vc.transform {
                    Transform::Level => "level".to_string(),
                    Transform::Log => "log".to_string(),
                },
                note: vc.note.clone(),
            })
            .collect(),
    };
    writer
        .write_json("descriptive_stats.json", &stats)
        .stage("dataset")?;
    writer
        .write("descriptive_stats.txt", &stats.render_text())
        .stage("dataset")?;

    // ---- unit roots --------------------------------------------------
    let mut unit_rows = Vec::new();
    let mut all_i1 = true;
    for v in &config.variables {
        let series: Vec<f64> = table.column(&v.name).stage("unitroot")?.iter().copied().collect();
        let level = adf_test(&series, v.adf_deterministic, LagSelection::Auto).stage("unitroot")?;
        let diff = first_difference(&series).stage("unitroot")?;
        let diffed = adf_test(&diff, v.adf_deterministic, LagSelection::Auto).stage("unitroot")?;
        let order = if level.p_value < config.alpha {
            IntegrationOrder::I0
        } else if diffed.p_value < config.alpha {
            IntegrationOrder::I1
        } else {
            IntegrationOrder::I2Plus
        };
        if order != IntegrationOrder::I1 {
            all_i1 = false;
            warnings.push(format!(
                "variable {:?} classified {} rather than I(1) at alpha {}",
                v.name, order, config.alpha
            ));
        }
        unit_rows.push(UnitRootRow {
            variable: v.name.clone(),
            deterministic: v.adf_deterministic,
            level_statistic: level.statistic,
            level_p: level.p_value,
            level_lags: level.lags_used,
            difference_statistic: diffed.statistic,
            difference_p: diffed.p_value,
            difference_lags: diffed.lags_used,
            order,
        });
    }
    let unit_report = UnitRootReport {
        alpha: config.alpha,
        rows: unit_rows,
    };
    writer
        .write_json("unit_roots.json", &unit_report)
        .stage("unitroot")?;
    writer
        .write("unit_roots.txt", &unit_report.render_text())
        .stage("unitroot")?;

    // ---- lag selection -----------------------------------------------
    let var_det = match config.deterministic {
        VecmDeterministic::RestrictedTrend => vecm_core::dataset::Deterministic::ConstantTrend,
        VecmDeterministic::ConstantOnly => vecm_core::dataset::Deterministic::Constant,
    };
    let lag_table = lag_order_table(&table, config.p_max, var_det).stage("varbase")?;
    let (lags, lag_source) = match config.lags {
        Some(l) => (l, "configured".to_string()),
        None => (lag_table.best_schwarz, "Schwarz minimum".to_string()),
    };
    let lag_report = LagReport {
        table: lag_table,
        chosen: lags,
        chosen_by: lag_source.clone(),
    };
    writer
        .write_json("lag_selection.json", &lag_report)
        .stage("varbase")?;
    writer
        .write("lag_selection.txt", &lag_report.render_text())
        .stage("varbase")?;

    // ---- trace test and fit -------------------------------------------
    let trace = trace_test(&table, lags, config.deterministic).stage("johansen")?;
    let (rank, rank_source) = match config.rank {
        Some(r) => {
            if r != trace.selected_rank_5pct {
                warnings.push(format!(
                    "configured rank {r} overrides the trace-test selection {} at 5%",
                    trace.selected_rank_5pct
                ));
            }
            (r, "configured".to_string())
        }
        None => (trace.selected_rank_5pct, "trace test at 5%".to_string()),
    };
    let trace_report = TraceReport {
        result: trace,
        used_rank: rank,
        rank_source: rank_source.clone(),
    };
    writer
        .write_json("trace_test.json", &trace_report)
        .stage("johansen")?;
    writer
        .write("trace_test.txt", &trace_report.render_text())
        .stage("johansen")?;

    let spec = VecmSpec {
        lags,
        rank,
        deterministic: config.deterministic,
    };
    let mut fit = estimate_vecm(&table, spec).stage("johansen")?;
    if rank > 0 {
        let normalization = config
            .normalization
            .clone()
            .unwrap_or_else(|| config.variable_names()[..rank].to_vec());
        if normalization.len() != rank {
            return Err(StageError {
                stage: "johansen",
                source: CliError::Config(format!(
                    "normalization lists {} variables but rank is {rank}",
                    normalization.len()
                )),
            });
        }
        fit = normalize_beta(&fit, &normalization).stage("johansen")?;
    }
    let fit_report = FitReport::from_fit(&fit);
    writer.write_json("vecm_fit.json", &fit_report).stage("johansen")?;
    writer
        .write("vecm_fit.txt", &fit_report.render_text())
        .stage("johansen")?;

    // ---- diagnostics ---------------------------------------------------
    let stability_report = stability(&fit).stage("diagnostics")?;
    if !stability_report.is_stable {
        warnings.push(format!(
            "model unstable: largest non-unit modulus {:.6}",
            stability_report.max_non_unit
        ));
    }
    let mut lm_tests = Vec::new();
    for &lag in &config.lm_lags {
        let result = lm_autocorrelation(&fit, lag).stage("diagnostics")?;
        lm_tests.push(NamedTest {
            name: lag.to_string(),
            result,
        });
    }
    let mut weak = Vec::new();
    if rank > 0 {
        for name in fit.names.clone() {
            let result = weak_exogeneity(&fit, &name).stage("diagnostics")?;
            weak.push(NamedTest { name, result });
        }
    } else {
        warnings.push("rank 0: weak-exogeneity tests skipped".to_string());
    }
    let mut granger = Vec::new();
    if lags >= 2 {
        for cause in fit.names.clone() {
            for effect in fit.names.clone() {
                let result = granger_short_run(&fit, &cause, &effect).stage("diagnostics")?;
                granger.push(GrangerEntry {
                    cause: cause.clone(),
                    effect,
                    result,
                });
            }
        }
    } else {
        warnings.push("l = 1: no differenced lags, Granger tests skipped".to_string());
    }
    let diag_report = DiagnosticsReport {
        stability: stability_report,
        lm_autocorrelation: lm_tests,
        weak_exogeneity: weak,
        granger,
    };
    writer
        .write_json("diagnostics.json", &diag_report)
        .stage("diagnostics")?;
    writer
        .write("diagnostics.txt", &diag_report.render_text(&fit.names))
        .stage("diagnostics")?;
    if config.strict_stability && !diag_report.stability.is_stable {
        return Err(StageError {
            stage: "diagnostics",
            source: CliError::Unstable {
                modulus: diag_report.stability.max_non_unit,
            },
        });
    }

    // ---- structural ------------------------------------------------------
    let mut irf_blocks = Vec::new();
    let mut fevd_blocks = Vec::new();
    for spec_entry in &config.orderings {
        let (name, names) = config.resolve_ordering(spec_entry).stage("structural")?;
        let ordering = Ordering::new(names, &fit.names).stage("structural")?;
        let irf_result = if config.bootstrap.enabled {
            bootstrap_bands(
                &fit,
                &ordering,
                config.horizon,
                BootstrapSettings {
                    replications: config.bootstrap.replications,
                    level: config.bootstrap.level,
                    seed: config.bootstrap.seed,
                },
            )
            .stage("structural")?
        } else {
            irf(&fit, &ordering, config.horizon).stage("structural")?
        };
        irf_blocks.push(IrfBlock::from_result(&name, &fit.names, &irf_result));
        let fevd_result = fevd(&fit, &ordering, config.horizon.max(1)).stage("structural")?;
        fevd_blocks.push(FevdBlock::from_result(&name, &fit.names, &fevd_result));
    }
    let irf_report = IrfReport {
        horizon: config.horizon,
        blocks: irf_blocks,
    };
    let fevd_report = FevdReport {
        steps: config.horizon.max(1),
        blocks: fevd_blocks,
    };
    writer.write_json("irf.json", &irf_report).stage("structural")?;
    writer.write("irf.csv", &irf_report.to_csv()).stage("structural")?;
    writer.write_json("fevd.json", &fevd_report).stage("structural")?;
    writer.write("fevd.csv", &fevd_report.to_csv()).stage("structural")?;

    // ---- sign comparison ---------------------------------------------------
    if let Some(expectations) = &config.signs {
        if rank > 0 {
            let report = sign_report(&fit, expectations).stage("signs")?;
            writer.write_json("signs.json", &report).stage("signs")?;
            writer
                .write("signs.txt", &report.render_text())
                .stage("signs")?;
        } else {
            warnings.push("rank 0: sign comparison skipped".to_string());
        }
    }

    // ---- summary -------------------------------------------------------------
    let notes = vec![
        "long-run relations are normalized so listed variables carry unit coefficients; \
         the implied effect of a right-hand variable on the normalized one is minus its \
         coefficient"
            .to_string(),
        "expected-sign entries follow a money-demand price decomposition; expectations \
         about past inflation are embodied by the lagged differences of the system and \
         carry no separate series"
            .to_string(),
        "markup-side symbols (margins, unit labor cost, intermediate input cost) have no \
         computational role in this model family and enter no report"
            .to_string(),
    ];
    let summary = Summary {
        variables: config.variable_names(),
        observations: table.len(),
        lags,
        lag_source,
        rank,
        rank_source,
        deterministic: config.deterministic,
        loglik: fit.loglik,
        stable: diag_report.stability.is_stable,
        max_non_unit_modulus: diag_report.stability.max_non_unit,
        all_i1,
        warnings: warnings.clone(),
        files: writer.files.clone(),
        notes,
    };
    writer.write_json("summary.json", &summary).stage("summary")?;
    Ok(summary)
}
