//! Chat-completions style HTTP provider.

use std::time::Duration;

use serde_json::{json, Value};

use super::{estimate_tokens, ChatBackend, GatewayError, Reply, Request, Speaker, TokenCount};

#[derive(Clone, Debug, PartialEq)]
pub struct ProviderConfig {
    /// Base URL; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the API key. Unset means no auth header.
    pub api_key_env: String,
    pub temperature: Option<f64>,
    /// Sent as a system message at the head of every request.
    pub system_prompt: Option<String>,
    pub request_timeout: Duration,
    pub max_tries: u32,
    /// First retry delay; doubles per retry up to `max_backoff`.
    pub backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for ProviderConfig {
    fn default() -> ProviderConfig {
        ProviderConfig {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o".into(),
            api_key_env: "INVSYNTH_API_KEY".into(),
            temperature: None,
            system_prompt: None,
            request_timeout: Duration::from_secs(300),
            max_tries: 3,
            backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(8),
        }
    }
}

pub struct LiveBackend {
    cfg: ProviderConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl LiveBackend {
    pub fn new(cfg: ProviderConfig) -> Result<LiveBackend, GatewayError> {
        if cfg.base_url.trim().is_empty() || cfg.model.trim().is_empty() {
            return Err(GatewayError::Config("base URL and model are required".into()));
        }
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.request_timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(LiveBackend { cfg, agent, api_key })
    }

    fn body(&self, req: &Request<'_>) -> Value {
        let mut messages = Vec::new();
        if let Some(sys) = &self.cfg.system_prompt {
            messages.push(json!({"role": "system", "content": sys}));
        }
        for m in req.history {
            let role = match m.speaker {
                Speaker::User => "user",
                Speaker::Assistant => "assistant",
            };
            messages.push(json!({"role": role, "content": m.text}));
        }
        messages.push(json!({"role": "user", "content": req.prompt}));
        let mut body = json!({"model": self.cfg.model, "messages": messages});
        if let Some(t) = self.cfg.temperature {
            body["temperature"] = json!(t);
        }
        body
    }

    fn attempt(&self, body: &Value, req: &Request<'_>) -> Result<Reply, GatewayError> {
        let url = format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'));
        let mut call = self.agent.post(&url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = call
            .send_json(body)
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            let message: String = text.chars().take(300).collect();
            return Err(GatewayError::Http { status, message });
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| GatewayError::Malformed(e.to_string()))?;
        let content = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| GatewayError::Malformed("no choices[0].message.content".into()))?
            .to_string();
        let usage = &v["usage"];
        let tokens = TokenCount {
            input: usage["prompt_tokens"]
                .as_u64()
                .unwrap_or_else(|| req.history.iter().map(|m| estimate_tokens(&m.text)).sum::<u64>() + estimate_tokens(req.prompt)),
            output: usage["completion_tokens"]
                .as_u64()
                .unwrap_or_else(|| estimate_tokens(&content)),
        };
        Ok(Reply {
            text: content,
            tokens,
            latency: Duration::ZERO,
        })
    }
}

impl ChatBackend for LiveBackend {
    fn complete(&mut self, req: &Request<'_>) -> Result<Reply, GatewayError> {
        let body = self.body(req);
        let mut delay = self.cfg.backoff;
        let mut tries = 0;
        loop {
            tries += 1;
            match self.attempt(&body, req) {
                Err(e) if e.is_retriable() && tries < self.cfg.max_tries.max(1) => {
                    std::thread::sleep(delay);
                    delay = (delay * 2).min(self.cfg.max_backoff);
                }
                other => return other,
            }
        }
    }

    fn describe(&self) -> String {
        format!("live ({} at {})", self.cfg.model, self.cfg.base_url)
    }
}
