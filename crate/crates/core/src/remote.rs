//! Port to an external text-generation service.
//!
//! Everything that can consult a language model (strategy generation,
//! planning, recognition) goes through [`TextGenerator`] and falls back to
//! its rule-based path on any error. With the `remote` feature,
//! [`ChatClient`] talks to a chat-completion endpoint:
//!
//! ```text
//! POST <endpoint>
//! Authorization: Bearer <key>
//! {"model": "...", "messages": [{"role": "system", "content": "..."},
//!                               {"role": "user", "content": "..."}]}
//! ```
//!
//! The reply text is read from `choices[0].message.content`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENDPOINT_ENV: &str = "SAP_LLM_ENDPOINT";
pub const API_KEY_ENV: &str = "SAP_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RemoteError {
    #[error("no endpoint configured")]
    NotConfigured,
    #[error("request failed: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

/// Single-shot text completion.
pub trait TextGenerator {
    fn complete(&self, system: &str, user: &str) -> Result<String, RemoteError>;
}

impl<T: TextGenerator + ?Sized> TextGenerator for &T {
    fn complete(&self, system: &str, user: &str) -> Result<String, RemoteError> {
        (**self).complete(system, user)
    }
}

impl<T: TextGenerator + ?Sized> TextGenerator for Box<T> {
    fn complete(&self, system: &str, user: &str) -> Result<String, RemoteError> {
        (**self).complete(system, user)
    }
}

/// Calls `gen` once plus up to `retries` more times on error.
pub fn complete_with_retry<G: TextGenerator + ?Sized>(
    gen: &G,
    system: &str,
    user: &str,
    retries: u32,
) -> Result<String, RemoteError> {
    let mut last = gen.complete(system, user);
    for _ in 0..retries {
        if last.is_ok() {
            break;
        }
        last = gen.complete(system, user);
    }
    last
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub enabled: bool,
    /// Overridden by `SAP_LLM_ENDPOINT` when set.
    pub endpoint: Option<String>,
    pub model: String,
    pub timeout_secs: u64,
    pub retries: u32,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            enabled: false,
            endpoint: None,
            model: "default".into(),
            timeout_secs: 30,
            retries: 1,
        }
    }
}

impl RemoteConfig {
    pub fn resolved_endpoint(&self) -> Option<String> {
        std::env::var(ENDPOINT_ENV)
            .ok()
            .filter(|s| !s.is_empty())
            .or_else(|| self.endpoint.clone())
    }
}

/// Always fails; stands in when no service is configured.
#[derive(Clone, Copy, Debug, Default)]
pub struct Disabled;

impl TextGenerator for Disabled {
    fn complete(&self, _system: &str, _user: &str) -> Result<String, RemoteError> {
        Err(RemoteError::NotConfigured)
    }
}

#[cfg(feature = "remote")]
pub use client::ChatClient;

#[cfg(feature = "remote")]
mod client {
    use std::time::Duration;

    use serde_json::{json, Value};

    use super::{RemoteConfig, RemoteError, TextGenerator, API_KEY_ENV};

    /// Blocking chat-completion client.
    pub struct ChatClient {
        agent: ureq::Agent,
        endpoint: String,
        model: String,
        api_key: Option<String>,
    }

    impl ChatClient {
        pub fn from_config(cfg: &RemoteConfig) -> Result<ChatClient, RemoteError> {
            let endpoint = cfg.resolved_endpoint().ok_or(RemoteError::NotConfigured)?;
            let agent: ureq::Agent = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
                .build()
                .into();
            Ok(ChatClient {
                agent,
                endpoint,
                model: cfg.model.clone(),
                api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            })
        }
    }

    impl TextGenerator for ChatClient {
        fn complete(&self, system: &str, user: &str) -> Result<String, RemoteError> {
            let body = json!({
                "model": self.model,
                "messages": [
                    {"role": "system", "content": system},
                    {"role": "user", "content": user},
                ],
            });
            let mut req = self.agent.post(&self.endpoint);
            if let Some(key) = &self.api_key {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            let mut resp = req
                .send_json(&body)
                .map_err(|e| RemoteError::Transport(e.to_string()))?;
            let v: Value = resp
                .body_mut()
                .read_json()
                .map_err(|e| RemoteError::Malformed(e.to_string()))?;
            v.pointer("/choices/0/message/content")
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| RemoteError::Malformed("no choices[0].message.content".into()))
        }
    }
}
