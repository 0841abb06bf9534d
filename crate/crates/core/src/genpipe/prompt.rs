use std::fmt::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::prescription::Prescription;
use super::GenError;
use crate::dsl;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExamplePair {
    pub prescription: String,
    pub program: String,
}

/// The four prompt components supplied by the operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptConfig {
    pub language_doc: String,
    pub api_library: String,
    pub coding_guideline: String,
    pub example_programs: Vec<ExamplePair>,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig {
            language_doc: include_str!("../../prompt/language.md").to_string(),
            api_library: include_str!("../../prompt/api.md").to_string(),
            coding_guideline: include_str!("../../prompt/guideline.md").to_string(),
            example_programs: serde_json::from_str(include_str!("../../prompt/examples.json"))
                .expect("bundled examples are valid JSON"),
        }
    }
}

impl PromptConfig {
    /// Read `language.md`, `api.md`, `guideline.md` and `examples.json` from
    /// a directory.
    pub fn from_dir(dir: &Path) -> Result<Self, GenError> {
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name))
                .map_err(|e| GenError::Config(format!("{}: {e}", dir.join(name).display())))
        };
        let examples = read("examples.json")?;
        Ok(PromptConfig {
            language_doc: read("language.md")?,
            api_library: read("api.md")?,
            coding_guideline: read("guideline.md")?,
            example_programs: serde_json::from_str(&examples)
                .map_err(|e| GenError::Config(format!("examples.json: {e}")))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub language_doc: String,
    pub api_library: String,
    pub coding_guideline: String,
    pub example_programs: Vec<ExamplePair>,
    pub prescription_payload: String,
    /// Full text sent to the generator.
    pub rendered: String,
    /// Hex SHA-256 of `rendered`.
    pub digest: String,
}

pub const SECTION_HEADINGS: [&str; 5] = [
    "# Language documentation",
    "# API library",
    "# Coding guideline",
    "# Example programs",
    "# Prescription",
];

pub fn assemble_prompt(rx: &Prescription, config: &PromptConfig) -> Result<PromptBundle, GenError> {
    for (name, text) in [
        ("language_doc", &config.language_doc),
        ("api_library", &config.api_library),
        ("coding_guideline", &config.coding_guideline),
    ] {
        if text.trim().is_empty() {
            return Err(GenError::Config(format!("{name} is empty")));
        }
    }
    if config.example_programs.is_empty() {
        return Err(GenError::Config("example_programs is empty".into()));
    }
    for (i, ex) in config.example_programs.iter().enumerate() {
        if ex.prescription.trim().is_empty() {
            return Err(GenError::Config(format!("example {} has an empty prescription", i + 1)));
        }
        if let Err(diags) = dsl::parse_program(&ex.program) {
            let first = diags.first().map(|d| d.to_string()).unwrap_or_default();
            return Err(GenError::Config(format!("example {} does not parse: {first}", i + 1)));
        }
    }

    let payload = prescription_payload(rx);
    let mut out = String::new();
    let sections = [&config.language_doc, &config.api_library, &config.coding_guideline];
    for (heading, body) in SECTION_HEADINGS.iter().zip(sections) {
        let _ = writeln!(out, "{heading}\n\n{}\n", body.trim_end());
    }
    let _ = writeln!(out, "{}\n", SECTION_HEADINGS[3]);
    for (i, ex) in config.example_programs.iter().enumerate() {
        let _ = writeln!(
            out,
            "## Example {}\n\nPrescription:\n{}\n\nProgram:\n```dsl\n{}\n```\n",
            i + 1,
            ex.prescription.trim_end(),
            ex.program.trim_end()
        );
    }
    let _ = writeln!(out, "{}\n\n{}", SECTION_HEADINGS[4], payload.trim_end());

    let digest = hex::encode(Sha256::digest(out.as_bytes()));
    Ok(PromptBundle {
        language_doc: config.language_doc.clone(),
        api_library: config.api_library.clone(),
        coding_guideline: config.coding_guideline.clone(),
        example_programs: config.example_programs.clone(),
        prescription_payload: payload,
        rendered: out,
        digest,
    })
}

/// Numbered step list followed by the entity annotations as JSON.
pub fn prescription_payload(rx: &Prescription) -> String {
    let annotations: Vec<_> = rx
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| serde_json::json!({ "step": i + 1, "entities": s.entities }))
        .collect();
    format!(
        "{}\nAnnotations:\n{}\n",
        rx.numbered_text(),
        serde_json::to_string_pretty(&annotations).expect("annotations serialize")
    )
}
