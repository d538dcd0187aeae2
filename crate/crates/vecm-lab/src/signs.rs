//! Expected-sign comparison for the first (price) long-run relation.
//!
//! With the price variable normalized to coefficient 1, the relation reads
//! `p + sum_j c_j x_j (+ tau t) ~ stationary`, so the implied long-run
//! effect of `x_j` on the price level is `-c_j`. Each configured variable's
//! implied sign is compared with its expectation at the 5% level.

use std::collections::BTreeMap;

use serde::Serialize;
use vecm_core::johansen::VecmFit;

use crate::config::SignExpectation;
use crate::error::CliError;
use crate::report::text_table;

/// Verdict for one variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignLabel {
    Match,
    Mismatch,
    Ambiguous,
    NotSignificant,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignRow {
    pub variable: String,
    /// Coefficient in the normalized first relation.
    pub coefficient: f64,
    pub standard_error: Option<f64>,
    /// Sign of the implied long-run effect on the price variable.
    pub implied_effect: String,
    pub expected: SignExpectation,
    pub label: SignLabel,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignReport {
    pub price_variable: String,
    pub rows: Vec<SignRow>,
}

/// Compare the first relation's coefficients against the expected signs.
///
/// Requires a normalized fit whose first relation has unit coefficient on
/// the first normalization variable (the price variable).
pub fn sign_report(
    fit: &VecmFit,
    expectations: &BTreeMap<String, SignExpectation>,
) -> Result<SignReport, CliError> {
    let normalization = fit.normalization.as_ref().ok_or_else(|| {
        CliError::Config("sign report needs a normalized fit".to_string())
    })?;
    let price_variable = normalization
        .first()
        .ok_or_else(|| CliError::Config("sign report needs rank >= 1".to_string()))?
        .clone();
    let price_row = fit
        .names
        .iter()
        .position(|n| n == &price_variable)
        .expect("normalization variable exists");
    if (fit.beta[(price_row, 0)] - 1.0).abs() > 1e-8 {
        return Err(CliError::Config(format!(
            "price variable {price_variable:?} does not carry a unit coefficient in relation 1"
        )));
    }

    let se = fit.beta_se.as_ref();
    let mut rows = Vec::new();
    for (variable, expected) in expectations {
        if variable == &price_variable {
            continue;
        }
        let row = fit
            .names
            .iter()
            .position(|n| n == variable)
            .ok_or_else(|| CliError::Config(format!("unknown sign variable {variable:?}")))?;
        let coefficient = fit.beta[(row, 0)];
        let standard_error = se.and_then(|m| {
            let v = m[(row, 0)];
            v.is_finite().then_some(v)
        });
        let implied_positive = -coefficient > 0.0;
        let significant = match standard_error {
            Some(s) if s > 0.0 => coefficient.abs() / s >= 1.96,
            // a pinned (normalized) row is exact, anything else counts as
            // not testable
            _ => false,
        };
        let label = match expected {
            SignExpectation::Ambiguous => SignLabel::Ambiguous,
            _ if !significant => SignLabel::NotSignificant,
            SignExpectation::Positive if implied_positive => SignLabel::Match,
            SignExpectation::Negative if !implied_positive => SignLabel::Match,
            _ => SignLabel::Mismatch,
        };
        rows.push(SignRow {
            variable: variable.clone(),
            coefficient,
            standard_error,
            implied_effect: if implied_positive { "+" } else { "-" }.to_string(),
            expected: *expected,
            label,
        });
    }
    Ok(SignReport {
        price_variable,
        rows,
    })
}

impl SignReport {
    pub fn render_text(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.variable.clone(),
                    format!("{:.4}", r.coefficient),
                    r.standard_error
                        .map(|s| format!("{s:.4}"))
                        .unwrap_or_else(|| "n/a".to_string()),
                    r.implied_effect.clone(),
                    match r.expected {
                        SignExpectation::Positive => "+",
                        SignExpectation::Negative => "-",
                        SignExpectation::Ambiguous => "ambiguous",
                    }
                    .to_string(),
                    format!("{:?}", r.label),
                ]
            })
            .collect();
        let mut out = format!(
            "expected-sign comparison for the long-run {} relation\n(implied effect = minus the relation coefficient)\n\n",
            self.price_variable
        );
        out.push_str(&text_table(
            &["variable", "coef", "se", "implied", "expected", "verdict"],
            &rows,
        ));
        out
    }
}
