//! Serializable report structures and their text renderings.
//!
//! The JSON form is the source of record: every number in a text table is
//! taken from the same struct that is serialized, so the text is only a
//! rendering. Serialization is deterministic (struct field order, sorted
//! maps, no timestamps).

use serde::Serialize;
use vecm_core::dataset::{Deterministic, VariableStats};
use vecm_core::diagnostics::{StabilityReport, TestResult};
use vecm_core::johansen::{TraceTestResult, VecmDeterministic, VecmFit};
use vecm_core::structural::{FevdResult, IrfResult};
use vecm_core::unitroot::IntegrationOrder;
use vecm_core::varbase::LagOrderTable;

use nalgebra::DMatrix;

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn matrix_rows_opt(m: &DMatrix<f64>) -> Vec<Vec<Option<f64>>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| {
                    let v = m[(i, j)];
                    v.is_finite().then_some(v)
                })
                .collect()
        })
        .collect()
}

/// Minimal fixed-width table renderer; first column left-aligned, the rest
/// right-aligned.
pub fn text_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (j, cell) in row.iter().enumerate() {
            widths[j] = widths[j].max(cell.len());
        }
    }
    let mut out = String::new();
    let render_row = |cells: Vec<String>, widths: &[usize]| -> String {
        let mut line = String::new();
        for (j, cell) in cells.iter().enumerate() {
            if j > 0 {
                line.push_str("  ");
            }
            if j == 0 {
                line.push_str(&format!("{:<width$}", cell, width = widths[j]));
            } else {
                line.push_str(&format!("{:>width$}", cell, width = widths[j]));
            }
        }
        line.push('\n');
        line
    };
    out.push_str(&render_row(
        headers.iter().map(|h| h.to_string()).collect(),
        &widths,
    ));
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in rows {
        out.push_str(&render_row(row.clone(), &widths));
    }
    out
}

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

// ---------------------------------------------------------------- stats

#[derive(Debug, Clone, Serialize)]
pub struct StatsEntry {
    #[serde(flatten)]
    pub stats: VariableStats,
    pub transform: String,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsReport {
    pub variables: Vec<StatsEntry>,
}

impl StatsReport {
    pub fn render_text(&self) -> String {
        let rows = self
            .variables
            .iter()
            .map(|e| {
                vec![
                    e.stats.name.clone(),
                    e.stats.n.to_string(),
                    fmt(e.stats.mean),
                    if e.stats.sd_defined {
                        fmt(e.stats.sd)
                    } else {
                        "n/a".to_string()
                    },
                    fmt(e.stats.min),
                    fmt(e.stats.p25),
                    fmt(e.stats.p50),
                    fmt(e.stats.p75),
                    fmt(e.stats.max),
                ]
            })
            .collect::<Vec<_>>();
        text_table(
            &["variable", "N", "mean", "SD", "min", "p25", "p50", "p75", "max"],
            &rows,
        )
    }
}

// ------------------------------------------------------------- unit roots

#[derive(Debug, Clone, Serialize)]
pub struct UnitRootRow {
    pub variable: String,
    pub deterministic: Deterministic,
    pub level_statistic: f64,
    pub level_p: f64,
    pub level_lags: usize,
    pub difference_statistic: f64,
    pub difference_p: f64,
    pub difference_lags: usize,
    pub order: IntegrationOrder,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitRootReport {
    pub alpha: f64,
    pub rows: Vec<UnitRootRow>,
}

impl UnitRootReport {
    pub fn render_text(&self) -> String {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.variable.clone(),
                    format!("{:.3}", r.level_p),
                    format!("{:.3}", r.difference_p),
                    r.deterministic.to_string(),
                    r.order.to_string(),
                ]
            })
            .collect::<Vec<_>>();
        let mut out = text_table(
            &["variable", "level p", "diff p", "deterministic", "order"],
            &rows,
        );
        out.push_str(&format!(
            "\np-values: null hypothesis of a unit root; classification at alpha = {}\n",
            self.alpha
        ));
        out
    }
}

// ---------------------------------------------------------- lag selection

#[derive(Debug, Clone, Serialize)]
pub struct LagReport {
    pub table: LagOrderTable,
    pub chosen: usize,
    pub chosen_by: String,
}

impl LagReport {
    pub fn render_text(&self) -> String {
        let rows = self
            .table
            .rows
            .iter()
            .map(|r| {
                let mark = |best: usize| if r.p == best { "*" } else { "" };
                vec![
                    r.p.to_string(),
                    fmt(r.loglik),
                    format!("{}{}", fmt(r.aic), mark(self.table.best_aic)),
                    format!("{}{}", fmt(r.schwarz), mark(self.table.best_schwarz)),
                    format!("{}{}", fmt(r.hannan_quinn), mark(self.table.best_hannan_quinn)),
                ]
            })
            .collect::<Vec<_>>();
        let mut out = text_table(&["p", "loglik", "AIC", "Schwarz", "Hannan-Quinn"], &rows);
        out.push_str(&format!(
            "\nchosen lag order: {} ({})\n",
            self.chosen, self.chosen_by
        ));
        out
    }
}

// ------------------------------------------------------------ trace test

#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    #[serde(flatten)]
    pub result: TraceTestResult,
    pub used_rank: usize,
    pub rank_source: String,
}

impl TraceReport {
    pub fn render_text(&self) -> String {
        let rows = self
            .result
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.null_rank.to_string(),
                    fmt(r.statistic),
                    format!("{:.2}", r.cv_5pct),
                    format!("{:.2}", r.cv_1pct),
                ]
            })
            .collect::<Vec<_>>();
        let mut out = text_table(&["rank", "statistic", "5%", "1%"], &rows);
        out.push_str(&format!(
            "\ndeterministic case: {}\nselected rank: {} at 5%, {} at 1%; using r = {} ({})\n",
            self.result.deterministic,
            self.result.selected_rank_5pct,
            self.result.selected_rank_1pct,
            self.used_rank,
            self.rank_source
        ));
        out
    }
}

// -------------------------------------------------------------- VECM fit

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub names: Vec<String>,
    pub lags: usize,
    pub rank: usize,
    pub deterministic: VecmDeterministic,
    pub t_eff: usize,
    pub loglik: f64,
    pub eigenvalues: Vec<f64>,
    /// Rows: variables, then the trend when restricted. Columns: relations.
    pub beta: Vec<Vec<f64>>,
    pub beta_se: Option<Vec<Vec<Option<f64>>>>,
    pub beta_rows: Vec<String>,
    pub alpha: Vec<Vec<f64>>,
    pub gammas: Vec<Vec<Vec<f64>>>,
    pub intercept: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub normalization: Option<Vec<String>>,
}

impl FitReport {
    pub fn from_fit(fit: &VecmFit) -> Self {
        let mut beta_rows = fit.names.clone();
        if fit.beta.nrows() > fit.k() {
            beta_rows.push("trend".to_string());
        }
        Self {
            names: fit.names.clone(),
            lags: fit.spec.lags,
            rank: fit.spec.rank,
            deterministic: fit.spec.deterministic,
            t_eff: fit.t_eff,
            loglik: fit.loglik,
            eigenvalues: fit.eigenvalues.clone(),
            beta: matrix_rows(&fit.beta),
            beta_se: fit.beta_se.as_ref().map(matrix_rows_opt),
            beta_rows,
            alpha: matrix_rows(&fit.alpha),
            gammas: fit.gammas.iter().map(matrix_rows).collect(),
            intercept: fit.intercept.iter().copied().collect(),
            sigma: matrix_rows(&fit.sigma),
            normalization: fit.normalization.clone(),
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "VECM: l = {}, r = {}, {}; T_eff = {}, loglik = {:.4}\n\n",
            self.lags, self.rank, self.deterministic, self.t_eff, self.loglik
        ));
        if self.rank > 0 {
            out.push_str("long-run relations (beta; standard errors in parentheses):\n");
            let mut headers = vec!["variable"];
            let relation_names: Vec<String> =
                (1..=self.rank).map(|c| format!("relation {c}")).collect();
            headers.extend(relation_names.iter().map(|s| s.as_str()));
            let rows: Vec<Vec<String>> = self
                .beta_rows
                .iter()
                .enumerate()
                .map(|(i, name)| {
                    let mut row = vec![name.clone()];
                    for c in 0..self.rank {
                        let mut cell = fmt(self.beta[i][c]);
                        if let Some(se) = &self.beta_se {
                            if let Some(s) = se[i][c] {
                                cell.push_str(&format!(" ({})", fmt(s)));
                            }
                        }
                        row.push(cell);
                    }
                    row
                })
                .collect();
            out.push_str(&text_table(&headers, &rows));

            out.push_str("\nadjustment coefficients (alpha):\n");
            let rows: Vec<Vec<String>> = self
                .names
                .iter()
                .enumerate()
                .map(|(i, name)| {
                    let mut row = vec![name.clone()];
                    for c in 0..self.rank {
                        row.push(fmt(self.alpha[i][c]));
                    }
                    row
                })
                .collect();
            out.push_str(&text_table(&headers, &rows));
        } else {
            out.push_str("rank 0: no long-run relations; VAR in differences\n");
        }
        out.push_str(&format!(
            "\neigenvalues: [{}]\n",
            self.eigenvalues
                .iter()
                .map(|v| format!("{v:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        ));
        out
    }
}

// ------------------------------------------------------------ diagnostics

#[derive(Debug, Clone, Serialize)]
pub struct NamedTest {
    pub name: String,
    #[serde(flatten)]
    pub result: TestResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrangerEntry {
    pub cause: String,
    pub effect: String,
    #[serde(flatten)]
    pub result: TestResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub stability: StabilityReport,
    /// LM autocorrelation tests, one per tested lag.
    pub lm_autocorrelation: Vec<NamedTest>,
    pub weak_exogeneity: Vec<NamedTest>,
    /// Wald tests; `cause` column, `effect` row in the rendered table.
    pub granger: Vec<GrangerEntry>,
}

impl DiagnosticsReport {
    pub fn render_text(&self, names: &[String]) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "companion moduli: [{}]\nunit moduli: {}; largest non-unit: {:.4}; stable: {}\n\n",
            self.stability
                .moduli
                .iter()
                .map(|v| format!("{v:.4}"))
                .collect::<Vec<_>>()
                .join(", "),
            self.stability.unit_count,
            self.stability.max_non_unit,
            self.stability.is_stable
        ));

        out.push_str("residual autocorrelation (LM):\n");
        let rows: Vec<Vec<String>> = self
            .lm_autocorrelation
            .iter()
            .map(|t| {
                vec![
                    t.name.clone(),
                    format!("{:.2}", t.result.statistic),
                    t.result.degrees_of_freedom.to_string(),
                    format!("{:.3}", t.result.p_value),
                ]
            })
            .collect();
        out.push_str(&text_table(&["lag", "chi2", "df", "p"], &rows));

        out.push_str("\nweak exogeneity (LR, df = r):\n");
        let rows: Vec<Vec<String>> = self
            .weak_exogeneity
            .iter()
            .map(|t| {
                vec![
                    t.name.clone(),
                    format!("{:.3}", t.result.statistic),
                    format!("{:.3}", t.result.p_value),
                ]
            })
            .collect();
        out.push_str(&text_table(&["variable", "chi2", "p"], &rows));

        out.push_str("\nshort-run Granger causality (p-values; column does not cause row):\n");
        let mut headers = vec!["effect \\ cause"];
        let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        headers.extend(name_refs.iter());
        let rows: Vec<Vec<String>> = names
            .iter()
            .map(|effect| {
                let mut row = vec![effect.clone()];
                for cause in names {
                    let p = self
                        .granger
                        .iter()
                        .find(|g| &g.cause == cause && &g.effect == effect)
                        .map(|g| format!("{:.3}", g.result.p_value))
                        .unwrap_or_else(|| "-".to_string());
                    row.push(p);
                }
                row
            })
            .collect();
        out.push_str(&text_table(&headers, &rows));
        out
    }
}

// ---------------------------------------------------------------- IRF/FEVD

#[derive(Debug, Clone, Serialize)]
pub struct IrfCell {
    pub shock: String,
    pub response: String,
    pub horizon: usize,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IrfBlock {
    pub ordering_name: String,
    pub ordering: Vec<String>,
    pub level: Option<f64>,
    pub failed_replications: usize,
    pub cells: Vec<IrfCell>,
}

impl IrfBlock {
    pub fn from_result(name: &str, names: &[String], irf: &IrfResult) -> Self {
        let k = names.len();
        let mut cells = Vec::with_capacity((irf.horizon + 1) * k * k);
        for h in 0..=irf.horizon {
            for (j, shock) in names.iter().enumerate() {
                for (i, response) in names.iter().enumerate() {
                    cells.push(IrfCell {
                        shock: shock.clone(),
                        response: response.clone(),
                        horizon: h,
                        value: irf.responses[h][(i, j)],
                        lower: irf.lower.as_ref().map(|l| l[h][(i, j)]),
                        upper: irf.upper.as_ref().map(|u| u[h][(i, j)]),
                    });
                }
            }
        }
        Self {
            ordering_name: name.to_string(),
            ordering: irf.ordering.names().to_vec(),
            level: irf.level,
            failed_replications: irf.failed_replications,
            cells,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IrfReport {
    pub horizon: usize,
    pub blocks: Vec<IrfBlock>,
}

impl IrfReport {
    /// Long-format delimited rows: ordering, shock, response, horizon,
    /// value, lower, upper.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ordering,shock,response,horizon,value,lower,upper\n");
        for block in &self.blocks {
            for cell in &block.cells {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    csv_field(&block.ordering_name),
                    csv_field(&cell.shock),
                    csv_field(&cell.response),
                    cell.horizon,
                    cell.value,
                    cell.lower.map(|v| v.to_string()).unwrap_or_default(),
                    cell.upper.map(|v| v.to_string()).unwrap_or_default(),
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FevdCell {
    pub response: String,
    pub shock: String,
    /// Forecast step (1 = one quarter ahead).
    pub step: usize,
    pub share: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FevdBlock {
    pub ordering_name: String,
    pub ordering: Vec<String>,
    pub cells: Vec<FevdCell>,
}

impl FevdBlock {
    pub fn from_result(name: &str, names: &[String], fevd: &FevdResult) -> Self {
        let k = names.len();
        let mut cells = Vec::with_capacity(fevd.steps * k * k);
        for s in 1..=fevd.steps {
            for (i, response) in names.iter().enumerate() {
                for (j, shock) in names.iter().enumerate() {
                    cells.push(FevdCell {
                        response: response.clone(),
                        shock: shock.clone(),
                        step: s,
                        share: fevd.shares[s - 1][(i, j)],
                    });
                }
            }
        }
        Self {
            ordering_name: name.to_string(),
            ordering: fevd.ordering.names().to_vec(),
            cells,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FevdReport {
    pub steps: usize,
    pub blocks: Vec<FevdBlock>,
}

impl FevdReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ordering,response,shock,step,share\n");
        for block in &self.blocks {
            for cell in &block.cells {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    csv_field(&block.ordering_name),
                    csv_field(&cell.response),
                    csv_field(&cell.shock),
                    cell.step,
                    cell.share,
                ));
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
