//! End-to-end statistics suite: fidelity, hallucinated monitors, monitoring
//! accuracy under calibrated noise, pacing, and the retrofit comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsl::{self, Program};
use crate::evalstats::{
    build_report, pair_outcomes, wilson_interval, EvalReport, PreLabel, StepOutcome,
};
use crate::fixtures;
use crate::genpipe::{
    detect_hallucinated_monitors, faithful_program, mutate_against, validate_fidelity, MutationDetail, MutationKind,
    MutationLabel, Prescription, Verdict,
};
use crate::patientsim::{make_prelabel_mix, BehaviorScript, NoiseModel, PatientProfile, DEFAULT_FRAME_HZ};
use crate::retrofit::{category_counts, paradigm_comparison, retrofit_check, ParadigmComparison};
use crate::runtime::{
    assess_pacing, run_session, PacingEntry, PacingVerdict, SessionConfig, SessionLog, StepTruth, VirtualClock,
    DELAY_THRESHOLD_S,
};

/// Monitored steps in one evaluation batch.
pub const BATCH_STEPS: usize = 398;
/// Share of batch steps pre-labelled as not completed.
pub const INCOMPLETE_FRACTION: f64 = 0.363;
pub const HALLUCINATED_STEPS: usize = 10;
pub const MUTATIONS: usize = 100;
pub const ACCURACY_SEEDS: u64 = 20;
pub const TARGET_ACCURACY: f64 = 0.884;
pub const TARGET_SENSITIVITY: f64 = 0.886;
pub const TARGET_SPECIFICITY: f64 = 0.875;
pub const ACCURACY_TOLERANCE: f64 = 0.02;
/// Published interval for the accuracy estimate.
pub const PUBLISHED_CI: (f64, f64) = (0.843, 0.915);
pub const WILSON_EXPECTED: (f64, f64) = (0.8493, 0.9122);
pub const TRANSLATABLE_EXPECTED: usize = 22;
pub const CATEGORY_COUNTS_EXPECTED: [usize; 5] = [15, 6, 6, 4, 3];

/// Per-poll false-positive rates tried by the calibration sweep.
pub const FP_GRID: [f64; 8] = [0.0002, 0.0004, 0.0006, 0.0007, 0.0008, 0.001, 0.0015, 0.002];
/// Per-poll false-negative rates tried by the calibration sweep.
pub const FN_GRID: [f64; 8] = [0.5, 0.6, 0.7, 0.75, 0.8, 0.83, 0.86, 0.9];
/// Seeds per sweep cell.
pub const SWEEP_SEEDS: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    pub summary: String,
    #[serde(default)]
    pub failures: Vec<String>,
    pub elapsed_s: f64,
}

impl Criterion {
    fn new(id: u8, name: &str, failures: Vec<String>, summary: String, started: Instant) -> Self {
        Criterion {
            id,
            name: name.into(),
            pass: failures.is_empty(),
            summary,
            failures,
            elapsed_s: started.elapsed().as_secs_f64(),
        }
    }

    pub fn line(&self) -> String {
        let mut s = format!(
            "criterion {} {:<28} {}  {} ({:.2}s)",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.summary,
            self.elapsed_s
        );
        for f in &self.failures {
            s.push_str("\n    - ");
            s.push_str(f);
        }
        s
    }
}

/// One session of a batch: a worksheet, or a prefix of one, and its program.
#[derive(Debug, Clone)]
pub struct BatchSession {
    pub id: String,
    pub rx: Prescription,
    pub program: Program,
}

impl BatchSession {
    fn monitored(&self) -> Vec<u32> {
        self.program.steps.iter().filter(|s| s.is_monitored()).map(|s| s.index).collect()
    }
}

/// Worksheets in goal order, repeated until `n` monitored steps are covered.
/// The last session is cut short after its final needed monitored step.
pub fn monitored_batch(n: usize) -> Vec<BatchSession> {
    let sheets = fixtures::worksheets();
    let mut out = Vec::new();
    let mut left = n;
    for round in 0.. {
        for w in &sheets {
            if left == 0 {
                return out;
            }
            let p = faithful_program(w);
            let monitored: Vec<usize> = (0..p.steps.len()).filter(|&i| p.steps[i].is_monitored()).collect();
            let id = format!("s{:02}", out.len() + 1);
            let mut rx = w.clone();
            rx.id = format!("{}-r{round}", w.id);
            if monitored.len() > left {
                rx.steps.truncate(monitored[left - 1] + 1);
                rx.id.push_str("-prefix");
            }
            let program = faithful_program(&rx);
            left -= program.steps.iter().filter(|s| s.is_monitored()).count();
            out.push(BatchSession { id, rx, program });
        }
    }
    unreachable!()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationCheck {
    pub label: MutationLabel,
    pub prescription: String,
    pub ok: bool,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityBench {
    pub prescriptions: usize,
    pub steps: usize,
    pub correct_and_complete: usize,
    pub mutations: Vec<MutationCheck>,
}

fn expected_flag(label: &MutationLabel) -> String {
    match &label.detail {
        MutationDetail::Omit => format!("omitted rx {}", label.step),
        MutationDetail::Duplicate { .. } => "extraneous".into(),
        MutationDetail::Substitute { .. } => format!("substituted rx {}", label.step),
        MutationDetail::Reorder { .. } => "reordered".into(),
        MutationDetail::HallucinateAtom { joint } => format!("hallucinated {joint} at step {}", label.step),
    }
}

fn observed_flags(rx: &Prescription, p: &Program) -> Vec<String> {
    let mut flags: Vec<String> = validate_fidelity(rx, p)
        .defects()
        .map(|v| match v.verdict {
            Verdict::Omitted => format!("omitted rx {}", v.rx_step.unwrap_or(0)),
            Verdict::Extraneous => "extraneous".into(),
            Verdict::Substituted => format!("substituted rx {}", v.rx_step.unwrap_or(0)),
            Verdict::Reordered => "reordered".into(),
            Verdict::Match => unreachable!("defects exclude matches"),
        })
        .collect();
    flags.extend(
        detect_hallucinated_monitors(rx, p).into_iter().map(|f| format!("hallucinated {} at step {}", f.symbol, f.step)),
    );
    flags
}

/// Faithful generation of every worksheet, then [`MUTATIONS`] seeded defects
/// spread evenly over mutation kinds and worksheets.
pub fn fidelity_bench(seed: u64) -> FidelityBench {
    let sheets = fixtures::worksheets();
    let mut correct = 0;
    for w in &sheets {
        let r = validate_fidelity(w, &faithful_program(w));
        if r.correct && r.complete && detect_hallucinated_monitors(w, &faithful_program(w)).is_empty() {
            correct += 1;
        }
    }
    let mut mutations = Vec::with_capacity(MUTATIONS);
    let mut attempt = 0u64;
    while mutations.len() < MUTATIONS {
        let i = mutations.len();
        let kind = MutationKind::ALL[i % MutationKind::ALL.len()];
        let w = &sheets[(i / MutationKind::ALL.len() + attempt as usize) % sheets.len()];
        let p = faithful_program(w);
        let m = match mutate_against(w, &p, kind, seed.wrapping_mul(1_000_003).wrapping_add(i as u64 + attempt * 7919)) {
            Ok(m) => m,
            Err(_) => {
                attempt += 1;
                continue;
            }
        };
        let flags = observed_flags(w, &m.program);
        let ok = flags == [expected_flag(&m.label)];
        mutations.push(MutationCheck { label: m.label, prescription: w.id.clone(), ok, flags });
    }
    FidelityBench {
        prescriptions: sheets.len(),
        steps: sheets.iter().map(|w| w.steps.len()).sum(),
        correct_and_complete: correct,
        mutations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HallucinationBench {
    pub monitored_steps: usize,
    pub injected: Vec<(String, u32, String)>,
    pub found: Vec<(String, u32, String)>,
    pub report: EvalReport,
}

/// [`BATCH_STEPS`] monitored steps with [`HALLUCINATED_STEPS`] of them given
/// an extra joint atom the prescription never mentions.
pub fn hallucination_bench(seed: u64) -> Result<HallucinationBench, String> {
    let mut batch = monitored_batch(BATCH_STEPS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks: Vec<usize> = (0..batch.len()).collect();
    picks.shuffle(&mut rng);
    let mut injected = Vec::new();
    for &i in picks.iter().take(HALLUCINATED_STEPS) {
        let s = &mut batch[i];
        let m = mutate_against(&s.rx, &s.program, MutationKind::HallucinateAtom, seed ^ (i as u64) << 8)
            .map_err(|e| e.to_string())?;
        let MutationDetail::HallucinateAtom { joint } = &m.label.detail else { unreachable!() };
        injected.push((s.id.clone(), m.label.step, joint.clone()));
        s.program = m.program;
    }
    injected.sort();

    let mut found = Vec::new();
    let mut per_step: BTreeMap<(String, u32), usize> = BTreeMap::new();
    for s in &batch {
        for f in detect_hallucinated_monitors(&s.rx, &s.program) {
            *per_step.entry((s.id.clone(), f.step)).or_default() += 1;
            found.push((s.id.clone(), f.step, f.symbol));
        }
    }
    found.sort();

    let run = run_batch(&batch, &NoiseModel::none(seed), seed, &PatientProfile::unimpaired())?;
    let mut outcomes = run.outcomes;
    for o in &mut outcomes {
        o.hallucinations = per_step.get(&(o.session.clone(), o.step)).copied().unwrap_or(0);
    }
    let report = build_report(&outcomes, &run.pacing, 0.95).map_err(|e| e.to_string())?;
    Ok(HallucinationBench { monitored_steps: outcomes.len(), injected, found, report })
}

/// Labels, logs, truth and pacing of one simulated batch.
#[derive(Debug, Clone)]
pub struct BatchRun {
    pub labels: Vec<PreLabel>,
    pub logs: Vec<(String, SessionLog)>,
    pub truth: Vec<(String, Vec<StepTruth>)>,
    pub outcomes: Vec<StepOutcome>,
    pub pacing_entries: Vec<(String, PacingEntry)>,
    pub pacing: Vec<PacingVerdict>,
}

/// Simulate every session of `batch` with the pre-labelled mix drawn from
/// `seed`. Each session gets its own noise stream derived from the model's.
pub fn run_batch(
    batch: &[BatchSession],
    noise: &NoiseModel,
    seed: u64,
    profile: &PatientProfile,
) -> Result<BatchRun, String> {
    let total: usize = batch.iter().map(|s| s.monitored().len()).sum();
    let mix = make_prelabel_mix(total, INCOMPLETE_FRACTION, seed);
    let mut behaviors = mix.behaviors.into_iter();
    let mut run = BatchRun {
        labels: Vec::with_capacity(total),
        logs: Vec::with_capacity(batch.len()),
        truth: Vec::with_capacity(batch.len()),
        outcomes: Vec::new(),
        pacing_entries: Vec::with_capacity(total),
        pacing: Vec::with_capacity(total),
    };
    let config = SessionConfig { seed: Some(seed), ..SessionConfig::default() };
    for (i, s) in batch.iter().enumerate() {
        let mut script = BehaviorScript::default();
        for step in s.monitored() {
            let b = behaviors.next().expect("mix covers the batch");
            run.labels.push(PreLabel { session: s.id.clone(), step, expected: crate::patientsim::Expected::of(&b) });
            script.steps.insert(step, b);
        }
        let noise = NoiseModel { seed: noise.seed.wrapping_mul(0x9E37_79B9).wrapping_add(i as u64), ..noise.clone() };
        let mut sim = crate::patientsim::SimulatedPatient::new(&s.program, profile, &script, &noise, DEFAULT_FRAME_HZ)
            .map_err(|e| format!("{}: {e}", s.id))?;
        let log = run_session(&s.program, &mut sim, &mut VirtualClock::new(), &config, &mut |_| {})
            .map_err(|e| format!("{}: {e}", s.id))?;
        for e in assess_pacing(&log, sim.truth(), DELAY_THRESHOLD_S) {
            run.pacing.push(e.verdict);
            run.pacing_entries.push((s.id.clone(), e));
        }
        run.truth.push((s.id.clone(), sim.truth().to_vec()));
        run.logs.push((s.id.clone(), log));
    }
    run.outcomes = pair_outcomes(&run.labels, &run.logs).map_err(|e| e.to_string())?;
    Ok(run)
}

/// Steps whose monitor fired while the movement had not yet been completed.
pub fn false_positive_detections(run: &BatchRun) -> BTreeSet<(String, u32)> {
    let mut out = BTreeSet::new();
    for ((id, log), (_, truth)) in run.logs.iter().zip(&run.truth) {
        for s in log.steps.iter().filter(|s| s.monitored) {
            let at = s.detection_at.or_else(|| s.fallback.as_ref().and_then(|f| f.detection_at));
            let Some(at) = at else { continue };
            let done = truth.iter().find(|t| t.step == s.step).and_then(|t| t.completed_at);
            if done.is_none_or(|t| at < t) {
                out.insert((id.clone(), s.step));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub fp_rate: f64,
    pub fn_rate: f64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub adequate_fraction: f64,
    pub premature: usize,
    pub false_positive_detections: usize,
    pub premature_matches_false_positives: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoringBench {
    pub sweep: Vec<SweepCell>,
    pub fp_rate: f64,
    pub fn_rate: f64,
    pub seeds: Vec<SeedResult>,
    pub mean_accuracy: f64,
    /// Report of the first calibrated seed.
    pub report: EvalReport,
    pub wilson: (f64, f64),
    pub zero_noise_steps: usize,
    pub zero_noise_adequate: usize,
    pub zero_noise_correct: usize,
    pub mean_adequate_fraction: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean sensitivity and specificity of the batch under `noise` over `seeds`.
fn cell(batch: &[BatchSession], fp: f64, fn_: f64, seeds: std::ops::Range<u64>) -> Result<SweepCell, String> {
    let mut acc = Vec::new();
    let mut sens = Vec::new();
    let mut spec = Vec::new();
    for seed in seeds {
        let noise = NoiseModel { fp_rate: fp, fn_rate: fn_, dropout_rate: 0.0, seed, poll_hz: 10 };
        let run = run_batch(batch, &noise, seed, &PatientProfile::standardized())?;
        let m = crate::evalstats::matrix_of(&run.outcomes);
        acc.push(m.accuracy());
        sens.push(m.sensitivity());
        spec.push(m.specificity());
    }
    Ok(SweepCell {
        fp_rate: fp,
        fn_rate: fn_,
        accuracy: mean(acc.into_iter()),
        sensitivity: mean(sens.into_iter()),
        specificity: mean(spec.into_iter()),
    })
}

/// Calibration sweep and the calibrated accuracy and pacing runs.
///
/// A false positive can only flip a step that should not complete and a
/// false negative only one that should, so the sweep fits the two rates
/// separately: false-positive rates against specificity with no misses,
/// false-negative rates against sensitivity with no spurious hits. Sweep
/// seeds (1000 and up) are disjoint from the evaluation seeds.
pub fn monitoring_bench(seed: u64) -> Result<MonitoringBench, String> {
    let batch = monitored_batch(BATCH_STEPS);
    let sweep_seeds = 1000 + seed * 100..1000 + seed * 100 + SWEEP_SEEDS;
    let mut sweep = Vec::new();
    for fp in FP_GRID {
        sweep.push(cell(&batch, fp, 0.0, sweep_seeds.clone())?);
    }
    for fn_ in FN_GRID {
        sweep.push(cell(&batch, 0.0, fn_, sweep_seeds.clone())?);
    }
    let best = |key: fn(&SweepCell) -> f64, target: f64, pick: fn(&SweepCell) -> bool| {
        sweep
            .iter()
            .filter(|c| pick(c))
            .min_by(|a, b| (key(a) - target).abs().total_cmp(&(key(b) - target).abs()))
            .copied()
            .expect("grid is not empty")
    };
    let fp_rate = best(|c| c.specificity, TARGET_SPECIFICITY, |c| c.fn_rate == 0.0).fp_rate;
    let fn_rate = best(|c| c.sensitivity, TARGET_SENSITIVITY, |c| c.fp_rate == 0.0).fn_rate;

    let mut seeds = Vec::new();
    let mut report = None;
    for k in 0..ACCURACY_SEEDS {
        let s = seed * 1000 + k;
        let noise = NoiseModel { fp_rate, fn_rate, dropout_rate: 0.0, seed: s, poll_hz: 10 };
        let run = run_batch(&batch, &noise, s, &PatientProfile::standardized())?;
        let r = build_report(&run.outcomes, &run.pacing, 0.95).map_err(|e| e.to_string())?;
        let premature: BTreeSet<(String, u32)> = run
            .pacing_entries
            .iter()
            .filter(|(_, e)| e.verdict == PacingVerdict::Premature)
            .map(|(id, e)| (id.clone(), e.step))
            .collect();
        let fps = false_positive_detections(&run);
        seeds.push(SeedResult {
            seed: s,
            accuracy: r.accuracy.point,
            sensitivity: r.sensitivity.map_or(f64::NAN, |m| m.point),
            specificity: r.specificity.map_or(f64::NAN, |m| m.point),
            adequate_fraction: r.pacing_adequate_fraction.unwrap_or(f64::NAN),
            premature: premature.len(),
            false_positive_detections: fps.len(),
            premature_matches_false_positives: premature == fps,
        });
        report.get_or_insert(r);
    }

    let zero = run_batch(&batch, &NoiseModel::none(seed), seed, &PatientProfile::standardized())?;
    Ok(MonitoringBench {
        sweep,
        fp_rate,
        fn_rate,
        mean_accuracy: mean(seeds.iter().map(|s| s.accuracy)),
        mean_adequate_fraction: mean(seeds.iter().map(|s| s.adequate_fraction)),
        seeds,
        report: report.expect("at least one seed"),
        wilson: wilson_interval(352, 398, 0.95).map_err(|e| e.to_string())?,
        zero_noise_steps: zero.pacing.len(),
        zero_noise_adequate: zero.pacing.iter().filter(|v| **v == PacingVerdict::Adequate).count(),
        zero_noise_correct: zero.outcomes.iter().filter(|o| o.is_correct()).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrofitBench {
    pub prescriptions: usize,
    pub proposed_ok: usize,
    pub translatable: usize,
    /// Procedural variation, new equipment, contingency, compensatory
    /// strategy options, motor priming.
    pub category_counts: [usize; 5],
    pub comparison: ParadigmComparison,
    pub fisher_oracle: f64,
    pub failures: Vec<String>,
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Two-sided Fisher p by exact integer enumeration of the hypergeometric
/// numerators.
pub fn fisher_by_enumeration(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let (r1, r2, c1) = (a + b, c + d, a + c);
    let weight = |x: u64| binomial(r1, x) * binomial(r2, c1 - x);
    let observed = weight(a);
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let tail: u128 = (lo..=hi).map(weight).filter(|&w| w <= observed).sum();
    tail as f64 / binomial(r1 + r2, c1) as f64
}

/// Every corpus prescription through the generator and parser, then through
/// the template check of its goal.
pub fn retrofit_bench() -> Result<RetrofitBench, String> {
    let corpus = fixtures::corpus();
    let mut failures = Vec::new();
    let mut items = Vec::with_capacity(corpus.len());
    let mut verdicts = Vec::with_capacity(corpus.len());
    let mut proposed_ok = 0;
    for rx in &corpus {
        let text = dsl::print_program(&faithful_program(rx));
        let ok = match dsl::parse_program(&text) {
            Ok(p) => {
                let f = validate_fidelity(rx, &p);
                dsl::validate_semantics(&p).is_empty() && f.correct && f.complete
            }
            Err(_) => false,
        };
        if ok {
            proposed_ok += 1;
        } else {
            failures.push(format!("{}: generated program does not round-trip", rx.id));
        }
        let goal = rx.goal_id.number().ok_or_else(|| format!("{} has no goal", rx.id))?;
        let t = fixtures::template(goal).ok_or_else(|| format!("no template for goal {goal}"))?;
        let v = retrofit_check(rx, &t);
        items.push((ok, v.translatable));
        verdicts.push(v);
    }
    let comparison = paradigm_comparison(&items).map_err(|e| e.to_string())?;
    let [[a, b], [c, d]] = comparison.table;
    Ok(RetrofitBench {
        prescriptions: corpus.len(),
        proposed_ok,
        translatable: verdicts.iter().filter(|v| v.translatable).count(),
        category_counts: category_counts(&verdicts),
        fisher_oracle: fisher_by_enumeration(a, b, c, d),
        comparison,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub criteria: Vec<Criterion>,
    pub fidelity: FidelityBench,
    pub hallucination: Option<HallucinationBench>,
    pub monitoring: Option<MonitoringBench>,
    pub retrofit: Option<RetrofitBench>,
}

impl BenchReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<String> {
        self.criteria
            .iter()
            .flat_map(|c| c.failures.iter().map(move |f| format!("criterion {}: {f}", c.id)))
            .collect()
    }

    /// Monitoring table followed by the category counts.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.criteria {
            out.push_str(&c.line());
            out.push('\n');
        }
        if let Some(m) = &self.monitoring {
            out.push_str(&format!(
                "\nmonitoring, first calibrated seed (fp {} / fn {} per poll)\n",
                m.fp_rate, m.fn_rate
            ));
            out.push_str(&m.report.to_text());
            out.push_str(&format!(
                "mean accuracy over {} seeds: {:.4}\nmean pacing adequacy: {:.4} (calibration only)\n",
                m.seeds.len(),
                m.mean_accuracy,
                m.mean_adequate_fraction
            ));
        }
        if let Some(r) = &self.retrofit {
            out.push_str("\nretrofit categories\n");
            let names = [
                "procedural variation",
                "new equipment use",
                "contingency",
                "compensatory strategy options",
                "motor priming",
            ];
            for (n, c) in names.iter().zip(r.category_counts) {
                out.push_str(&format!("  {n:<30} {c:>3}\n"));
            }
            let [[a, b], [c, d]] = r.comparison.table;
            out.push_str(&format!(
                "  proposed {a}/{}  template {c}/{}  Fisher p = {:.3e}\n",
                a + b,
                c + d,
                r.comparison.p_value
            ));
        }
        out
    }
}

pub fn criterion_fidelity(f: &FidelityBench, started: Instant) -> Criterion {
    let mut failures = Vec::new();
    if f.steps != 106 {
        failures.push(format!("worksheets hold {} steps, expected 106", f.steps));
    }
    if f.correct_and_complete != f.prescriptions {
        failures.push(format!("{}/{} programs correct and complete", f.correct_and_complete, f.prescriptions));
    }
    for m in f.mutations.iter().filter(|m| !m.ok) {
        failures.push(format!(
            "{} {} seed {} step {}: expected [{}], flagged {:?}",
            m.prescription,
            m.label.kind.as_str(),
            m.label.seed,
            m.label.step,
            expected_flag(&m.label),
            m.flags
        ));
    }
    let elapsed = started.elapsed().as_secs_f64();
    if elapsed >= 10.0 {
        failures.push(format!("took {elapsed:.1}s, limit 10s"));
    }
    let ok = f.mutations.iter().filter(|m| m.ok).count();
    let summary = format!(
        "{}/{} programs over {} steps correct and complete; {ok}/{} mutations flagged exactly",
        f.correct_and_complete,
        f.prescriptions,
        f.steps,
        f.mutations.len()
    );
    Criterion::new(1, "fidelity reproduction", failures, summary, started)
}

pub fn criterion_hallucination(h: &Result<HallucinationBench, String>, started: Instant) -> Criterion {
    let mut failures = Vec::new();
    let summary = match h {
        Err(e) => {
            failures.push(e.clone());
            "batch failed".into()
        }
        Ok(h) => {
            if h.monitored_steps != BATCH_STEPS {
                failures.push(format!("batch has {} monitored steps", h.monitored_steps));
            }
            if h.injected.len() != HALLUCINATED_STEPS {
                failures.push(format!("{} atoms injected", h.injected.len()));
            }
            if h.found != h.injected {
                failures.push(format!("found {:?}, injected {:?}", h.found, h.injected));
            }
            let share = h.report.attribution.hallucination_share;
            if (share * 1000.0).round() != 25.0 {
                failures.push(format!("hallucination share {share:.4} does not round to 2.5%"));
            }
            format!(
                "{}/{} findings on {} steps; attributed share {:.1}%",
                h.found.len(),
                h.injected.len(),
                h.monitored_steps,
                share * 100.0
            )
        }
    };
    Criterion::new(2, "hallucination detection", failures, summary, started)
}

pub fn criterion_monitoring(m: &Result<MonitoringBench, String>, started: Instant) -> Criterion {
    let mut failures = Vec::new();
    let summary = match m {
        Err(e) => {
            failures.push(e.clone());
            "simulation failed".into()
        }
        Ok(m) => {
            if (m.mean_accuracy - TARGET_ACCURACY).abs() > ACCURACY_TOLERANCE {
                failures.push(format!("mean accuracy {:.4} outside {TARGET_ACCURACY} +/- {ACCURACY_TOLERANCE}", m.mean_accuracy));
            }
            let (lo, hi) = m.wilson;
            if (lo - WILSON_EXPECTED.0).abs() > 0.0005 || (hi - WILSON_EXPECTED.1).abs() > 0.0005 {
                failures.push(format!("Wilson interval ({lo:.4}, {hi:.4})"));
            }
            if (lo - PUBLISHED_CI.0).abs() > 0.01 || (hi - PUBLISHED_CI.1).abs() > 0.01 {
                failures.push(format!("Wilson interval ({lo:.4}, {hi:.4}) is more than 0.01 from the published one"));
            }
            let elapsed = started.elapsed().as_secs_f64();
            if elapsed >= 60.0 {
                failures.push(format!("took {elapsed:.1}s, limit 60s"));
            }
            format!(
                "fp {} fn {} per poll; mean accuracy {:.4} over {} seeds; Wilson(352/398) = ({lo:.4}, {hi:.4})",
                m.fp_rate,
                m.fn_rate,
                m.mean_accuracy,
                m.seeds.len()
            )
        }
    };
    Criterion::new(3, "monitoring statistics", failures, summary, started)
}

pub fn criterion_retrofit(r: &Result<RetrofitBench, String>, started: Instant) -> Criterion {
    let mut failures = Vec::new();
    let summary = match r {
        Err(e) => {
            failures.push(e.clone());
            "corpus failed".into()
        }
        Ok(r) => {
            failures.extend(r.failures.iter().cloned());
            if r.translatable != TRANSLATABLE_EXPECTED {
                failures.push(format!("{} translatable, expected {TRANSLATABLE_EXPECTED}", r.translatable));
            }
            if r.category_counts != CATEGORY_COUNTS_EXPECTED {
                failures.push(format!("category counts {:?}, expected {:?}", r.category_counts, CATEGORY_COUNTS_EXPECTED));
            }
            if r.comparison.p_value >= 0.01 {
                failures.push(format!("Fisher p {:.3e} is not below 0.01", r.comparison.p_value));
            }
            if (r.comparison.p_value - r.fisher_oracle).abs() > 1e-10 {
                failures.push(format!("Fisher p {:e} differs from enumeration {:e}", r.comparison.p_value, r.fisher_oracle));
            }
            format!(
                "proposed {}/{}, template {}/{}; categories {:?}; p = {:.3e}",
                r.proposed_ok, r.prescriptions, r.translatable, r.prescriptions, r.category_counts, r.comparison.p_value
            )
        }
    };
    Criterion::new(4, "paradigm comparison", failures, summary, started)
}

pub fn criterion_pacing(m: &Result<MonitoringBench, String>, started: Instant) -> Criterion {
    let mut failures = Vec::new();
    let summary = match m {
        Err(e) => {
            failures.push(e.clone());
            "simulation failed".into()
        }
        Ok(m) => {
            if m.zero_noise_adequate != m.zero_noise_steps {
                failures.push(format!("zero noise: {}/{} adequate", m.zero_noise_adequate, m.zero_noise_steps));
            }
            for s in m.seeds.iter().filter(|s| !s.premature_matches_false_positives) {
                failures.push(format!(
                    "seed {}: {} premature vs {} false-positive detections",
                    s.seed, s.premature, s.false_positive_detections
                ));
            }
            let premature: usize = m.seeds.iter().map(|s| s.premature).sum();
            format!(
                "zero noise {}/{} adequate; calibrated adequacy {:.3} (calibration only); {premature} premature = false positives",
                m.zero_noise_adequate, m.zero_noise_steps, m.mean_adequate_fraction
            )
        }
    };
    Criterion::new(5, "pacing", failures, summary, started)
}

/// Criteria 1 to 5. Property suites are left to the test harness.
pub fn run_suite(seed: u64) -> BenchReport {
    let t = Instant::now();
    let fidelity = fidelity_bench(seed);
    let c1 = criterion_fidelity(&fidelity, t);

    let t = Instant::now();
    let hallucination = hallucination_bench(seed);
    let c2 = criterion_hallucination(&hallucination, t);

    let t = Instant::now();
    let monitoring = monitoring_bench(seed);
    let c3 = criterion_monitoring(&monitoring, t);
    let c5 = criterion_pacing(&monitoring, Instant::now());

    let t = Instant::now();
    let retrofit = retrofit_bench();
    let c4 = criterion_retrofit(&retrofit, t);

    BenchReport {
        seed,
        criteria: vec![c1, c2, c3, c4, c5],
        fidelity,
        hallucination: hallucination.ok(),
        monitoring: monitoring.ok(),
        retrofit: retrofit.ok(),
    }
}
