use std::time::{Duration, Instant};

use serde_json::json;

use super::generator::GeneratorBackend;
use super::prescription::Prescription;
use super::prompt::{PromptBundle, SECTION_HEADINGS};
use super::{Attempt, GenError};

/// Chat-completions style HTTP endpoint.
#[derive(Debug, Clone)]
pub struct RemoteBackend {
    pub base_url: String,
    pub model: String,
    pub key: Option<String>,
    /// Budget for the whole call, retries included.
    pub deadline: Duration,
    pub max_attempts: u32,
    pub backoff: Duration,
}

impl RemoteBackend {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        RemoteBackend {
            base_url: base_url.into(),
            model: model.into(),
            key: None,
            deadline: Duration::from_secs(120),
            max_attempts: 3,
            backoff: Duration::from_millis(250),
        }
    }

    /// Reads GENERATOR_URL, GENERATOR_MODEL and GENERATOR_KEY.
    pub fn from_env() -> Result<Self, GenError> {
        let url = std::env::var("GENERATOR_URL")
            .map_err(|_| GenError::Config("GENERATOR_URL is not set".into()))?;
        let model = std::env::var("GENERATOR_MODEL").unwrap_or_else(|_| "default".into());
        let mut b = RemoteBackend::new(url, model);
        b.key = std::env::var("GENERATOR_KEY").ok().filter(|k| !k.is_empty());
        Ok(b)
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }

    fn once(&self, client: &reqwest::blocking::Client, body: &serde_json::Value, left: Duration) -> Result<String, String> {
        let mut req = client.post(self.endpoint()).timeout(left).json(body);
        if let Some(k) = &self.key {
            req = req.bearer_auth(k);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("HTTP {status}"));
        }
        let v: serde_json::Value = resp.json().map_err(|e| format!("bad JSON: {e}"))?;
        v.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| "reply has no choices[0].message.content".to_string())
    }
}

impl GeneratorBackend for RemoteBackend {
    fn id(&self) -> String {
        format!("remote:{}", self.model)
    }

    fn generate(&self, _rx: &Prescription, bundle: &PromptBundle) -> Result<String, GenError> {
        let split = bundle.rendered.find(SECTION_HEADINGS[4]).unwrap_or(bundle.rendered.len());
        let body = json!({
            "model": self.model,
            "temperature": 0,
            "messages": [
                { "role": "system", "content": &bundle.rendered[..split] },
                { "role": "user", "content": &bundle.rendered[split..] },
            ],
        });
        let client = reqwest::blocking::Client::new();
        let start = Instant::now();
        let mut attempts = Vec::new();
        for n in 1..=self.max_attempts.max(1) {
            let left = match self.deadline.checked_sub(start.elapsed()) {
                Some(d) if !d.is_zero() => d,
                _ => return Err(GenError::Timeout { after_ms: start.elapsed().as_millis() as u64, attempts }),
            };
            let t0 = Instant::now();
            match self.once(&client, &body, left) {
                Ok(text) => return Ok(text),
                Err(error) => attempts.push(Attempt { attempt: n, error, elapsed_ms: t0.elapsed().as_millis() as u64 }),
            }
            if n < self.max_attempts {
                std::thread::sleep(self.backoff * n);
            }
        }
        let message = attempts.last().map(|a| a.error.clone()).unwrap_or_default();
        Err(GenError::Transport { message, attempts })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genpipe::prescription::{GoalId, PrescriptionStep};
    use crate::genpipe::prompt::{assemble_prompt, PromptConfig};

    #[test]
    fn unreachable_endpoint_reports_every_attempt() {
        let mut b = RemoteBackend::new("http://127.0.0.1:9", "m");
        b.backoff = Duration::from_millis(1);
        b.deadline = Duration::from_secs(10);
        let rx = Prescription {
            id: "x".into(),
            goal_id: GoalId::Custom,
            author: String::new(),
            steps: vec![PrescriptionStep::plain("Wave.")],
        };
        let bundle = assemble_prompt(&rx, &PromptConfig::default()).unwrap();
        match b.generate(&rx, &bundle) {
            Err(GenError::Transport { attempts, .. }) => {
                assert_eq!(attempts.len(), 3);
                assert_eq!(attempts.iter().map(|a| a.attempt).collect::<Vec<_>>(), vec![1, 2, 3]);
            }
            other => panic!("expected transport error, got {other:?}"),
        }
    }
}
