use serde::{Deserialize, Serialize};

use super::RetrofitError;
use crate::evalstats::fisher_exact_2x2;

/// Translatability under both paradigms for the same corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParadigmComparison {
    pub n: u64,
    pub proposed: u64,
    pub template: u64,
    /// `[[proposed yes, proposed no], [template yes, template no]]`.
    pub table: [[u64; 2]; 2],
    pub proposed_fraction: f64,
    pub template_fraction: f64,
    pub p_value: f64,
}

/// One flag pair per prescription: does the generated program parse and
/// validate, and does the template accept it.
pub fn paradigm_comparison(items: &[(bool, bool)]) -> Result<ParadigmComparison, RetrofitError> {
    if items.is_empty() {
        return Err(RetrofitError::EmptyCorpus);
    }
    let n = items.len() as u64;
    let proposed = items.iter().filter(|i| i.0).count() as u64;
    let template = items.iter().filter(|i| i.1).count() as u64;
    let table = [[proposed, n - proposed], [template, n - template]];
    let p_value = fisher_exact_2x2(table[0][0], table[0][1], table[1][0], table[1][1])?;
    Ok(ParadigmComparison {
        n,
        proposed,
        template,
        table,
        proposed_fraction: proposed as f64 / n as f64,
        template_fraction: template as f64 / n as f64,
        p_value,
    })
}
