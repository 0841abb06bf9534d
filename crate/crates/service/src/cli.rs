//! Command-line front end. Exit codes: 0 success, 1 check failed or runtime
//! error, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use clinprog_core::bench::{self, BenchReport};
use clinprog_core::dsl;
use clinprog_core::evalstats::{build_report, pair_outcomes, PreLabel};
use clinprog_core::genpipe::{
    assemble_prompt, detect_hallucinated_monitors, generate_program, validate_fidelity, DeterministicBackend,
    GeneratorBackend, Prescription, PromptConfig, RemoteBackend, ReplayBackend,
};
use clinprog_core::patientsim::Scenario;
use clinprog_core::retrofit::{retrofit_check, TemplateSchema};
use clinprog_core::runtime::{assess_pacing, run_session, SessionConfig, SessionLog, VirtualClock, DELAY_THRESHOLD_S};
use serde_json::json;

use crate::api::{serve, AppState};
use crate::store::Store;

#[derive(Debug, Parser)]
#[command(name = "clinprog", version, about = "Exercise intervention programs: generate, check, simulate, evaluate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Deterministic,
    Replay,
    Remote,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a program for a prescription and print it.
    Generate {
        #[arg(long)]
        prescription: PathBuf,
        #[arg(long, value_enum, default_value = "deterministic")]
        backend: Backend,
        /// Transcript directory for the replay backend.
        #[arg(long)]
        replay_dir: Option<PathBuf>,
        /// Directory holding language.md, api.md, guideline.md and examples.json.
        #[arg(long)]
        prompt_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse a program and compare it with its prescription.
    Validate {
        #[arg(long)]
        prescription: PathBuf,
        #[arg(long)]
        program: PathBuf,
    },
    /// Run a program against a simulated patient on the virtual clock.
    Run {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        /// Print events as JSON lines instead of the log.
        #[arg(long)]
        events: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score session logs against pre-labels.
    Eval {
        /// JSON array of {session, step, expected}.
        #[arg(long)]
        labels: PathBuf,
        /// Session log as SESSION=PATH; repeatable.
        #[arg(long = "log", value_parser = parse_log_arg, required = true)]
        logs: Vec<(String, PathBuf)>,
        #[arg(long, default_value_t = 0.95)]
        gamma: f64,
        #[arg(long)]
        json: bool,
    },
    /// Check whether a prescription is a parameter setting of a template.
    Retrofit {
        #[arg(long)]
        prescription: PathBuf,
        /// Goal number of a bundled template.
        #[arg(long, conflicts_with = "template_file")]
        template: Option<u8>,
        #[arg(long)]
        template_file: Option<PathBuf>,
    },
    /// Run the statistics suite and write a report directory.
    Bench {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, env = "DATA_DIR", default_value = "data")]
        data_dir: PathBuf,
        #[arg(long, env = "PORT", default_value_t = 8080)]
        port: u16,
    },
}

fn parse_log_arg(s: &str) -> Result<(String, PathBuf), String> {
    let (id, path) = s.split_once('=').ok_or_else(|| format!("expected SESSION=PATH, got `{s}`"))?;
    if id.is_empty() || path.is_empty() {
        return Err(format!("expected SESSION=PATH, got `{s}`"));
    }
    Ok((id.to_string(), PathBuf::from(path)))
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    serde_json::from_str(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Parse `argv` and run. Returns the process exit code.
pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("{}", json!({ "error": msg }));
            1
        }
    }
}

fn run(cmd: Command) -> Result<i32, String> {
    match cmd {
        Command::Generate { prescription, backend, replay_dir, prompt_dir, out } => {
            let rx: Prescription = read_json(&prescription)?;
            let config = match prompt_dir {
                Some(d) => PromptConfig::from_dir(&d).map_err(|e| e.to_string())?,
                None => PromptConfig::default(),
            };
            let bundle = assemble_prompt(&rx, &config).map_err(|e| e.to_string())?;
            let backend: Box<dyn GeneratorBackend> = match backend {
                Backend::Deterministic => Box::new(DeterministicBackend),
                Backend::Replay => Box::new(ReplayBackend::new(replay_dir.ok_or("--replay-dir is required for replay")?)),
                Backend::Remote => Box::new(RemoteBackend::from_env().map_err(|e| e.to_string())?),
            };
            let (text, prov) = generate_program(&rx, &bundle, backend.as_ref()).map_err(|e| e.to_string())?;
            eprintln!("{}", json!(prov));
            emit(&out, &text)?;
            Ok(0)
        }
        Command::Validate { prescription, program } => {
            let rx: Prescription = read_json(&prescription)?;
            let src = read(&program)?;
            let report = match dsl::parse_program(&src) {
                Err(diagnostics) => json!({ "valid": false, "diagnostics": diagnostics, "failures": ["program does not parse"] }),
                Ok(p) => {
                    let fidelity = validate_fidelity(&rx, &p);
                    let hallucinations = detect_hallucinated_monitors(&rx, &p);
                    let mut failures: Vec<String> = fidelity
                        .defects()
                        .map(|v| format!("{:?} rx step {:?} program step {:?}", v.verdict, v.rx_step, v.program_step))
                        .collect();
                    failures.extend(hallucinations.iter().map(|h| format!("hallucinated {} at step {}", h.symbol, h.step)));
                    json!({ "valid": true, "fidelity": fidelity, "hallucinations": hallucinations, "failures": failures })
                }
            };
            println!("{}", serde_json::to_string_pretty(&report).expect("json"));
            Ok(if report["failures"].as_array().is_some_and(|f| f.is_empty()) { 0 } else { 1 })
        }
        Command::Run { program, scenario, events, out } => {
            let p = dsl::parse_program(&read(&program)?).map_err(|d| {
                d.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
            })?;
            let sc: Scenario = read_json(&scenario)?;
            let mut sim = sc.patient(&p).map_err(|e| e.to_string())?;
            let cfg = SessionConfig { poll_hz: sc.noise.poll_hz, seed: Some(sc.noise.seed), ..Default::default() };
            let mut lines = String::new();
            let log = run_session(&p, &mut sim, &mut VirtualClock::new(), &cfg, &mut |e| {
                lines.push_str(&serde_json::to_string(e).expect("json"));
                lines.push('\n');
            })
            .map_err(|e| e.to_string())?;
            if events {
                emit(&out, &lines)?;
            } else {
                let pacing = assess_pacing(&log, sim.truth(), DELAY_THRESHOLD_S);
                let doc = json!({ "log": log, "truth": sim.truth(), "pacing": pacing });
                emit(&out, &(serde_json::to_string_pretty(&doc).expect("json") + "\n"))?;
            }
            Ok(0)
        }
        Command::Eval { labels, logs, gamma, json } => {
            let labels: Vec<PreLabel> = read_json(&labels)?;
            let mut loaded: Vec<(String, SessionLog)> = Vec::new();
            for (id, path) in logs {
                let v: serde_json::Value = read_json(&path)?;
                let log = v.get("log").cloned().unwrap_or(v);
                let log: SessionLog = serde_json::from_value(log).map_err(|e| format!("{}: {e}", path.display()))?;
                loaded.push((id, log));
            }
            let outcomes = pair_outcomes(&labels, &loaded).map_err(|e| e.to_string())?;
            let report = build_report(&outcomes, &[], gamma).map_err(|e| e.to_string())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("json"));
            } else {
                print!("{}", report.to_text());
            }
            Ok(0)
        }
        Command::Retrofit { prescription, template, template_file } => {
            let rx: Prescription = read_json(&prescription)?;
            let t: TemplateSchema = match (template, template_file) {
                (_, Some(f)) => TemplateSchema::from_json(&read(&f)?).map_err(|e| e.to_string())?,
                (Some(g), None) => clinprog_core::fixtures::template(g).ok_or(format!("no bundled template for goal {g}"))?,
                (None, None) => {
                    let g = rx.goal_id.number().ok_or("prescription has no goal; pass --template")?;
                    clinprog_core::fixtures::template(g).ok_or(format!("no bundled template for goal {g}"))?
                }
            };
            println!("{}", serde_json::to_string_pretty(&retrofit_check(&rx, &t)).expect("json"));
            Ok(0)
        }
        Command::Bench { seed, out } => {
            let report = bench::run_suite(seed);
            write_bench(&report, &out)?;
            print!("{}", report.to_text());
            if report.passed() {
                Ok(0)
            } else {
                eprintln!("{}", json!({ "failures": report.failures() }));
                Ok(1)
            }
        }
        Command::Serve { data_dir, port } => {
            let store = Store::open(&data_dir).map_err(|e| e.to_string())?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            rt.block_on(serve(AppState::new(store), port)).map_err(|e| e.to_string())?;
            Ok(0)
        }
    }
}

/// Files: `report.json`, `summary.txt`, `monitoring.txt`, `categories.json`,
/// `calibration.csv` and `failures.json`.
pub fn write_bench(report: &BenchReport, dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    write(&dir.join("report.json"), &serde_json::to_string_pretty(report).expect("json"))?;
    write(&dir.join("summary.txt"), &report.to_text())?;
    write(&dir.join("failures.json"), &serde_json::to_string_pretty(&report.failures()).expect("json"))?;
    if let Some(m) = &report.monitoring {
        write(&dir.join("monitoring.txt"), &m.report.to_text())?;
        let mut csv = String::from("fp_rate,fn_rate,accuracy,sensitivity,specificity\n");
        for c in &m.sweep {
            csv.push_str(&format!("{},{},{},{},{}\n", c.fp_rate, c.fn_rate, c.accuracy, c.sensitivity, c.specificity));
        }
        write(&dir.join("calibration.csv"), &csv)?;
    }
    if let Some(r) = &report.retrofit {
        let names = ["procedural_variation", "new_equipment_use", "contingency", "compensatory_strategy_options", "motor_priming"];
        let counts: BTreeMap<&str, usize> = names.iter().copied().zip(r.category_counts).collect();
        let doc = json!({
            "translatable": r.translatable,
            "prescriptions": r.prescriptions,
            "categories": counts,
            "table": r.comparison.table,
            "p_value": r.comparison.p_value,
        });
        write(&dir.join("categories.json"), &serde_json::to_string_pretty(&doc).expect("json"))?;
    }
    Ok(())
}
