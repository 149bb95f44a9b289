use std::path::Path;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One message to the model: prompt text plus at most one image.
#[derive(Clone, Copy, Debug)]
pub struct ModelRequest<'a> {
    pub stage: u8,
    /// Zero-based retry counter within the stage (and area, for stage 3).
    pub attempt: u32,
    /// Focus-area index for stage-3 requests.
    pub area: Option<usize>,
    pub prompt: &'a str,
    pub image_png: Option<&'a [u8]>,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClientError {
    #[error("request timed out after {0:.1} s")]
    Timeout(f64),
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("mock script has no reply for stage {stage}, attempt {attempt}{}", area_suffix(*.area))]
    Unscripted { stage: u8, attempt: u32, area: Option<usize> },
}

fn area_suffix(area: Option<usize>) -> String {
    area.map(|a| format!(", area {a}")).unwrap_or_default()
}

/// A vision-language model: image + text in, text out.
pub trait ModelClient: Sync {
    fn complete(&self, request: &ModelRequest<'_>) -> Result<String, ClientError>;
}

impl<C: ModelClient + ?Sized> ModelClient for &C {
    fn complete(&self, request: &ModelRequest<'_>) -> Result<String, ClientError> {
        (**self).complete(request)
    }
}

pub const SCRIPT_VERSION: u32 = 1;

/// One scripted reply. `attempt` or `area` left out match any value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptedReply {
    pub stage: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<usize>,
    pub reply: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MockScript {
    pub version: u32,
    pub replies: Vec<ScriptedReply>,
}

impl MockScript {
    pub fn new() -> Self {
        Self { version: SCRIPT_VERSION, replies: Vec::new() }
    }

    pub fn push(&mut self, stage: u8, attempt: Option<u32>, area: Option<usize>, reply: impl Into<String>) -> &mut Self {
        self.replies.push(ScriptedReply { stage, attempt, area, reply: reply.into() });
        self
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let script: MockScript = serde_json::from_str(json).map_err(Error::from_json)?;
        if script.version != SCRIPT_VERSION {
            return Err(Error::Input(format!(
                "mock script version {} is not supported (expected {SCRIPT_VERSION})",
                script.version
            )));
        }
        Ok(script)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&crate::io::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mock script serializes")
    }
}

/// Replays a [`MockScript`]. The reply for a request is the most specific
/// matching entry (attempt and area both given beats one given beats none);
/// among equally specific entries the first wins.
#[derive(Clone, Debug)]
pub struct MockClient {
    script: MockScript,
}

impl MockClient {
    pub fn new(script: MockScript) -> Self {
        Self { script }
    }

    pub fn script(&self) -> &MockScript {
        &self.script
    }
}

impl ModelClient for MockClient {
    fn complete(&self, request: &ModelRequest<'_>) -> Result<String, ClientError> {
        self.script
            .replies
            .iter()
            .filter(|r| {
                r.stage == request.stage
                    && r.attempt.is_none_or(|a| a == request.attempt)
                    && r.area.is_none_or(|a| Some(a) == request.area)
            })
            .min_by_key(|r| u8::from(r.attempt.is_none()) + u8::from(r.area.is_none()))
            .map(|r| r.reply.clone())
            .ok_or(ClientError::Unscripted {
                stage: request.stage,
                attempt: request.attempt,
                area: request.area,
            })
    }
}

fn default_timeout() -> f64 {
    120.0
}

fn default_key_env() -> String {
    "WANAV_API_KEY".into()
}

/// Settings for [`HttpClient`]. `WANAV_ENDPOINT` and `WANAV_MODEL` override
/// the file values; the key is read from the variable named by `api_key_env`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default)]
    pub max_tokens: Option<u32>,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key_env: default_key_env(),
            timeout_s: default_timeout(),
            max_tokens: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: HttpConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Ok(endpoint) = std::env::var("WANAV_ENDPOINT") {
            cfg.endpoint = endpoint;
        }
        if let Ok(model) = std::env::var("WANAV_MODEL") {
            cfg.model = model;
        }
        if !(cfg.timeout_s > 0.0 && cfg.timeout_s.is_finite()) {
            return Err(Error::Config(format!("timeout_s {} must be positive", cfg.timeout_s)));
        }
        Ok(cfg)
    }
}

/// Chat-completions client: one user message carrying the prompt text and
/// the image as a base64 PNG data URL.
pub struct HttpClient {
    config: HttpConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpClient {
    pub fn new(config: HttpConfig) -> Self {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_s)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, api_key, agent }
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    pub fn request_body(&self, request: &ModelRequest<'_>) -> serde_json::Value {
        let mut content = vec![serde_json::json!({"type": "text", "text": request.prompt})];
        if let Some(png) = request.image_png {
            let data = base64::engine::general_purpose::STANDARD.encode(png);
            content.push(serde_json::json!({
                "type": "image_url",
                "image_url": {"url": format!("data:image/png;base64,{data}")},
            }));
        }
        let mut body = serde_json::json!({
            "model": self.config.model,
            "temperature": request.temperature,
            "messages": [{"role": "user", "content": content}],
        });
        if let Some(max) = self.config.max_tokens {
            body["max_tokens"] = max.into();
        }
        body
    }
}

impl ModelClient for HttpClient {
    fn complete(&self, request: &ModelRequest<'_>) -> Result<String, ClientError> {
        let body = self.request_body(request);
        let mut call = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        log::debug!("stage {} attempt {} -> {}", request.stage, request.attempt, self.config.endpoint);
        let mut response = call.send_json(&body).map_err(|e| match e {
            ureq::Error::Timeout(_) => ClientError::Timeout(self.config.timeout_s),
            other => ClientError::Transport(other.to_string()),
        })?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => ClientError::Timeout(self.config.timeout_s),
                other => ClientError::Transport(other.to_string()),
            })?;
        if !(200..300).contains(&status) {
            return Err(ClientError::Status { status, body: text });
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| ClientError::Malformed(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| ClientError::Malformed("missing choices[0].message.content".into()))
    }
}
