use super::StatsError;

/// Relative slack when comparing table probabilities to the observed one.
pub const TIE_SLACK: f64 = 1e-12;

fn ln_factorials(n: u64) -> Vec<f64> {
    let mut t = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0;
    t.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        t.push(acc);
    }
    t
}

/// Probability of every table sharing the margins of `[[a, b], [c, d]]`,
/// indexed by the top-left cell, together with the smallest top-left value.
pub fn hypergeometric_tables(a: u64, b: u64, c: u64, d: u64) -> Result<(u64, Vec<f64>), StatsError> {
    let (r1, r2, c1, c2) = (a + b, c + d, a + c, b + d);
    if r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0 {
        return Err(StatsError::Domain(format!("table [[{a}, {b}], [{c}, {d}]] has an empty margin")));
    }
    let n = r1 + r2;
    let lf = ln_factorials(n);
    let f = |k: u64| lf[k as usize];
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let base = f(r1) + f(r2) + f(c1) + f(c2) - f(n);
    let probs = (lo..=hi)
        .map(|x| (base - f(x) - f(r1 - x) - f(c1 - x) - f(r2 + x - c1)).exp())
        .collect();
    Ok((lo, probs))
}

/// Two-sided exact p: total probability of tables no more likely than the
/// observed one.
pub fn fisher_exact_2x2(a: u64, b: u64, c: u64, d: u64) -> Result<f64, StatsError> {
    let (lo, probs) = hypergeometric_tables(a, b, c, d)?;
    let observed = probs[(a - lo) as usize];
    let cut = observed * (1.0 + TIE_SLACK);
    let p: f64 = probs.iter().filter(|&&q| q <= cut).sum();
    Ok(p.min(1.0))
}
