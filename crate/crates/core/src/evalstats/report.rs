use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::confusion::{matrix_of, ConfusionMatrix, StepOutcome};
use super::interval::wilson_interval;
use super::StatsError;
use crate::runtime::PacingVerdict;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub point: f64,
    pub successes: u64,
    pub trials: u64,
    pub ci: (f64, f64),
}

impl Metric {
    pub fn new(successes: u64, trials: u64, gamma: f64) -> Result<Metric, StatsError> {
        let ci = wilson_interval(successes, trials, gamma)?;
        Ok(Metric { point: successes as f64 / trials as f64, successes, trials, ci })
    }
}

/// Incorrect detections split by whether the step's monitor was hallucinated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub incorrect: u64,
    pub hallucination: u64,
    pub detection_noise: u64,
    /// Monitored steps carrying at least one hallucination finding.
    pub hallucinated_steps: u64,
    /// `hallucinated_steps` over all monitored steps.
    pub hallucination_share: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PacingSummary {
    pub adequate: u64,
    pub premature: u64,
    pub delayed: u64,
}

impl PacingSummary {
    pub fn of(verdicts: &[PacingVerdict]) -> Self {
        let mut s = PacingSummary::default();
        for v in verdicts {
            match v {
                PacingVerdict::Adequate => s.adequate += 1,
                PacingVerdict::Premature => s.premature += 1,
                PacingVerdict::Delayed => s.delayed += 1,
            }
        }
        s
    }

    pub fn total(&self) -> u64 {
        self.adequate + self.premature + self.delayed
    }

    pub fn adequate_fraction(&self) -> Option<f64> {
        (self.total() > 0).then(|| self.adequate as f64 / self.total() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub gamma: f64,
    pub matrix: ConfusionMatrix,
    /// Absent when the batch has no steps of the needed class.
    pub accuracy: Metric,
    pub sensitivity: Option<Metric>,
    pub specificity: Option<Metric>,
    pub pacing: PacingSummary,
    pub pacing_adequate_fraction: Option<f64>,
    pub attribution: Attribution,
}

pub fn build_report(outcomes: &[StepOutcome], pacing: &[PacingVerdict], gamma: f64) -> Result<EvalReport, StatsError> {
    let m = matrix_of(outcomes);
    if m.n() == 0 {
        return Err(StatsError::Domain("no labelled steps".into()));
    }
    let metric = |k, n| if n == 0 { Ok(None) } else { Metric::new(k, n, gamma).map(Some) };
    let hallucinated_steps = outcomes.iter().filter(|o| o.hallucinations > 0).count() as u64;
    let wrong: Vec<&StepOutcome> = outcomes.iter().filter(|o| !o.is_correct()).collect();
    let hallucination = wrong.iter().filter(|o| o.hallucinations > 0).count() as u64;
    let attribution = Attribution {
        incorrect: wrong.len() as u64,
        hallucination,
        detection_noise: wrong.len() as u64 - hallucination,
        hallucinated_steps,
        hallucination_share: hallucinated_steps as f64 / outcomes.len() as f64,
    };
    let pacing = PacingSummary::of(pacing);
    Ok(EvalReport {
        gamma,
        matrix: m,
        accuracy: Metric::new(m.correct(), m.n(), gamma)?,
        sensitivity: metric(m.tp, m.tp + m.fn_)?,
        specificity: metric(m.tn, m.tn + m.fp)?,
        pacing_adequate_fraction: pacing.adequate_fraction(),
        pacing,
        attribution,
    })
}

impl EvalReport {
    /// Metric, point estimate and interval, one row each.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let pct = (self.gamma * 100.0).round();
        let _ = writeln!(out, "{:<12} {:>7} {:>9}  {pct}% Wilson CI", "metric", "point", "k/n");
        let mut row = |name: &str, m: &Option<Metric>| {
            let _ = match m {
                Some(m) => writeln!(
                    out,
                    "{:<12} {:>7.3} {:>9}  [{:.3}, {:.3}]",
                    name,
                    m.point,
                    format!("{}/{}", m.successes, m.trials),
                    m.ci.0,
                    m.ci.1
                ),
                None => writeln!(out, "{name:<12} {:>7} {:>9}  -", "n/a", "0/0"),
            };
        };
        row("accuracy", &Some(self.accuracy));
        row("sensitivity", &self.sensitivity);
        row("specificity", &self.specificity);
        let m = &self.matrix;
        let _ = writeln!(out, "confusion    tp={} fn={} tn={} fp={}", m.tp, m.fn_, m.tn, m.fp);
        if let Some(f) = self.pacing_adequate_fraction {
            let p = &self.pacing;
            let _ = writeln!(
                out,
                "pacing       {:.3} adequate ({}/{}), premature {}, delayed {}",
                f,
                p.adequate,
                p.total(),
                p.premature,
                p.delayed
            );
        }
        let a = &self.attribution;
        let _ = writeln!(
            out,
            "monitors     {} of {} steps hallucinated ({:.1}%); {} incorrect: {} hallucination, {} detection noise",
            a.hallucinated_steps,
            m.n(),
            a.hallucination_share * 100.0,
            a.incorrect,
            a.hallucination,
            a.detection_noise
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patientsim::Expected;

    fn outcome(i: u32, expected: Expected, detected: bool, h: usize) -> StepOutcome {
        StepOutcome { session: "s".into(), step: i, expected, detected, hallucinations: h }
    }

    #[test]
    fn perfect_batch() {
        let o: Vec<StepOutcome> = (0..20).map(|i| outcome(i, Expected::ShouldComplete, true, 0)).collect();
        let r = build_report(&o, &[PacingVerdict::Adequate; 20], 0.95).unwrap();
        assert_eq!(r.accuracy.point, 1.0);
        assert_eq!(r.accuracy.ci.1, 1.0);
        assert!(r.specificity.is_none());
        assert_eq!(r.pacing_adequate_fraction, Some(1.0));
        assert!(r.to_text().contains("specificity      n/a"));
    }

    #[test]
    fn hallucination_share() {
        let o: Vec<StepOutcome> = (0..398)
            .map(|i| outcome(i, Expected::ShouldComplete, i >= 10, usize::from(i < 10)))
            .collect();
        let r = build_report(&o, &[], 0.95).unwrap();
        assert_eq!(r.attribution.hallucinated_steps, 10);
        assert!((r.attribution.hallucination_share - 10.0 / 398.0).abs() < 1e-12);
        assert_eq!(r.attribution.hallucination, 10);
        assert_eq!(r.attribution.detection_noise, 0);
        assert!(r.to_text().contains("(2.5%)"));
    }
}
