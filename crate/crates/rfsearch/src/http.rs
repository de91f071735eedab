//! Chat-completion designer over HTTP.

use std::thread;
use std::time::Duration;

use rfsearch_core::designer::{Designer, DesignerError};
use rfsearch_core::prompts::PromptBundle;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const API_KEY_ENV: &str = "RFSEARCH_API_KEY";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// Per-call timeout, connection through body.
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Extra attempts after a transport failure, 429 or 5xx.
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    /// Forward the per-call seed as the request's `seed` field.
    #[serde(default = "default_true")]
    pub send_seed: bool,
}

fn default_temperature() -> f64 {
    1.0
}

fn default_timeout() -> u64 {
    120
}

fn default_retries() -> u32 {
    2
}

fn default_backoff() -> u64 {
    1000
}

fn default_true() -> bool {
    true
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            temperature: default_temperature(),
            timeout_secs: default_timeout(),
            retries: default_retries(),
            backoff_ms: default_backoff(),
            send_seed: true,
        }
    }
}

pub struct HttpDesigner {
    config: HttpConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpDesigner {
    /// Reads the API key from `RFSEARCH_API_KEY`; a missing key sends no
    /// `Authorization` header, which suits local endpoints.
    pub fn new(config: HttpConfig) -> Self {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::with_key(config, key)
    }

    pub fn with_key(config: HttpConfig, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, api_key, agent }
    }

    pub fn request_body(&self, prompt: &PromptBundle, seed: u64) -> Value {
        let mut body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [
                {"role": "system", "content": prompt.system_text},
                {"role": "user", "content": prompt.user_text},
            ],
        });
        if self.config.send_seed {
            body["seed"] = json!(seed);
        }
        body
    }

    fn attempt(&self, body: &Value) -> Result<String, (bool, String)> {
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| (true, e.to_string()))?;
        let status = resp.status().as_u16();
        if status != 200 {
            let text = resp.body_mut().read_to_string().unwrap_or_default();
            let retry = status == 429 || status >= 500;
            return Err((retry, format!("HTTP {status}: {}", text.trim())));
        }
        let value: Value = resp.body_mut().read_json().map_err(|e| (true, e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| (false, "response has no choices[0].message.content".to_owned()))
    }
}

impl Designer for HttpDesigner {
    fn complete(&self, prompt: &PromptBundle, seed: u64) -> Result<String, DesignerError> {
        let body = self.request_body(prompt, seed);
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err((true, _)) if attempt < self.config.retries => {
                    attempt += 1;
                    thread::sleep(Duration::from_millis(self.config.backoff_ms * u64::from(attempt)));
                }
                Err((_, msg)) => return Err(DesignerError::Transport(msg)),
            }
        }
    }
}
