use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Environment variable holding the bearer token for [`HttpGenerator`].
pub const API_KEY_ENV: &str = "COPLAN_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneratorError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("generator returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed generator response: {0}")]
    BadResponse(String),
    #[error("{0}")]
    Other(String),
}

/// A text generator that is deterministic given `(prompt, seed)`.
pub trait GeneratorClient: Send + Sync {
    fn generate(&self, prompt: &str, seed: u64) -> Result<String, GeneratorError>;
}

impl<G: GeneratorClient + ?Sized> GeneratorClient for &G {
    fn generate(&self, prompt: &str, seed: u64) -> Result<String, GeneratorError> {
        (**self).generate(prompt, seed)
    }
}

impl<G: GeneratorClient + ?Sized> GeneratorClient for Box<G> {
    fn generate(&self, prompt: &str, seed: u64) -> Result<String, GeneratorError> {
        (**self).generate(prompt, seed)
    }
}

/// Fires when every substring in `when` occurs in the prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockRule {
    pub when: Vec<String>,
    pub respond: String,
}

/// Replies with the first matching rule's response, else the default.
/// Ignores the seed.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScriptedMock {
    pub rules: Vec<MockRule>,
    pub default: String,
}

impl ScriptedMock {
    pub fn new(default: impl Into<String>) -> Self {
        ScriptedMock { rules: Vec::new(), default: default.into() }
    }

    pub fn rule(self, trigger: impl Into<String>, respond: impl Into<String>) -> Self {
        self.rule_all([trigger.into()], respond)
    }

    pub fn rule_all(mut self, triggers: impl IntoIterator<Item = String>, respond: impl Into<String>) -> Self {
        self.rules.push(MockRule { when: triggers.into_iter().collect(), respond: respond.into() });
        self
    }

    pub fn respond(&self, prompt: &str) -> &str {
        self.rules
            .iter()
            .find(|r| r.when.iter().all(|w| prompt.contains(w.as_str())))
            .map_or(self.default.as_str(), |r| r.respond.as_str())
    }
}

impl GeneratorClient for ScriptedMock {
    fn generate(&self, prompt: &str, _seed: u64) -> Result<String, GeneratorError> {
        Ok(self.respond(prompt).to_string())
    }
}

/// Connection settings for a chat-completion style endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    pub retries: u32,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "default".into(),
            temperature: 0.7,
            timeout_secs: 60,
            retries: 2,
        }
    }
}

/// Blocking HTTP client. Sends
/// `{"model", "messages": [{"role": "user", "content": prompt}], "temperature", "seed"}`
/// and reads `choices[0].message.content`. Transport failures, 429 and 5xx
/// responses are retried up to `retries` times.
pub struct HttpGenerator {
    config: HttpConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpGenerator {
    /// Reads the API key from [`API_KEY_ENV`] if set.
    pub fn new(config: HttpConfig) -> Result<Self, GeneratorError> {
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::with_api_key(config, api_key)
    }

    pub fn with_api_key(config: HttpConfig, api_key: Option<String>) -> Result<Self, GeneratorError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GeneratorError::Transport(e.to_string()))?;
        Ok(HttpGenerator { config, api_key, client })
    }

    fn request_once(&self, body: &Value) -> Result<String, (bool, GeneratorError)> {
        let mut req = self.client.post(&self.config.endpoint).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| (true, GeneratorError::Transport(e.to_string())))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| (true, GeneratorError::Transport(e.to_string())))?;
        if !status.is_success() {
            let retry = status.is_server_error() || status.as_u16() == 429;
            return Err((retry, GeneratorError::Status { status: status.as_u16(), body: text }));
        }
        let value: Value = serde_json::from_str(&text).map_err(|e| (false, GeneratorError::BadResponse(e.to_string())))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| (false, GeneratorError::BadResponse("missing choices[0].message.content".into())))
    }
}

impl GeneratorClient for HttpGenerator {
    fn generate(&self, prompt: &str, seed: u64) -> Result<String, GeneratorError> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "seed": seed,
        });
        let mut attempt = 0;
        loop {
            match self.request_once(&body) {
                Ok(text) => return Ok(text),
                Err((true, _)) if attempt < self.config.retries => {
                    attempt += 1;
                    std::thread::sleep(Duration::from_millis(100 * u64::from(attempt)));
                }
                Err((_, e)) => return Err(e),
            }
        }
    }
}
