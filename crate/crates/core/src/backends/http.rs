//! Live HTTP clients in the common chat-completions wire format.

use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::chat::{ChatBackend, ChatReply, ChatRequest, Message, Role, ToolCall, ToolSpec};
use crate::error::{Error, Result};

pub const ENV_LLM_ENDPOINT: &str = "TVS_LLM_ENDPOINT";
pub const ENV_LLM_MODEL: &str = "TVS_LLM_MODEL";
pub const ENV_LLM_API_KEY: &str = "TVS_LLM_API_KEY";
pub const ENV_CAPTION_ENDPOINT: &str = "TVS_CAPTION_ENDPOINT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpSettings {
    pub retries: u32,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
    pub pool_size: usize,
    pub temperature: f64,
    /// Seeds retry jitter.
    pub seed: u64,
}

impl Default for HttpSettings {
    fn default() -> Self {
        HttpSettings {
            retries: 3,
            backoff_ms: 500,
            timeout_secs: 120,
            pool_size: 8,
            temperature: 0.0,
            seed: 0,
        }
    }
}

/// Shared connection pool plus retry policy.
pub(crate) struct Transport {
    agent: ureq::Agent,
    settings: HttpSettings,
    jitter: Mutex<ChaCha8Rng>,
}

impl Transport {
    pub(crate) fn new(settings: HttpSettings) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(settings.timeout_secs.max(1))))
            .max_idle_connections(settings.pool_size.max(1))
            .max_idle_connections_per_host(settings.pool_size.max(1))
            .build();
        Transport {
            agent: config.into(),
            jitter: Mutex::new(ChaCha8Rng::seed_from_u64(settings.seed)),
            settings,
        }
    }

    /// POSTs `body` as JSON, retrying transport failures, 429 and 5xx.
    pub(crate) fn post_json(&self, url: &str, bearer: Option<&str>, body: &Value) -> Result<Value> {
        let mut attempt = 0;
        loop {
            match self.post_once(url, bearer, body) {
                Ok(v) => return Ok(v),
                Err(Error::Backend { message, retryable: true }) if attempt < self.settings.retries => {
                    let base = self.settings.backoff_ms.saturating_mul(1 << attempt.min(16));
                    let jitter = self.jitter.lock().unwrap().random_range(0..=base / 2 + 1);
                    log::warn!("{url}: {message}; retry {} in {} ms", attempt + 1, base + jitter);
                    std::thread::sleep(Duration::from_millis(base + jitter));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn post_once(&self, url: &str, bearer: Option<&str>, body: &Value) -> Result<Value> {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = bearer {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        match req.send_json(body) {
            Ok(mut resp) => resp.body_mut().read_json::<Value>().map_err(|e| Error::Backend {
                message: format!("unreadable response body: {e}"),
                retryable: true,
            }),
            Err(ureq::Error::StatusCode(code)) => Err(Error::Backend {
                message: format!("http status {code}"),
                retryable: code == 429 || code >= 500,
            }),
            Err(e) => Err(Error::Backend { message: e.to_string(), retryable: true }),
        }
    }
}

fn env_required(name: &str) -> Result<String> {
    std::env::var(name)
        .ok()
        .filter(|v| !v.is_empty())
        .ok_or_else(|| Error::Unavailable(format!("environment variable {name} is not set")))
}

pub struct HttpChatClient {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    transport: Transport,
}

impl HttpChatClient {
    pub fn new(endpoint: &str, model: &str, api_key: Option<String>, settings: HttpSettings) -> Self {
        HttpChatClient {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            api_key,
            transport: Transport::new(settings),
        }
    }

    /// Reads endpoint, model and key from the environment.
    pub fn from_env(settings: HttpSettings) -> Result<Self> {
        let endpoint = env_required(ENV_LLM_ENDPOINT)?;
        let model = env_required(ENV_LLM_MODEL)?;
        let key = std::env::var(ENV_LLM_API_KEY).ok().filter(|k| !k.is_empty());
        Ok(Self::new(&endpoint, &model, key, settings))
    }

    pub fn build_request_body(&self, request: &ChatRequest<'_>) -> Value {
        build_request_body(&self.model, self.transport.settings.temperature, request)
    }
}

impl ChatBackend for HttpChatClient {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<ChatReply> {
        let body = self.build_request_body(request);
        let resp = self.transport.post_json(&self.endpoint, self.api_key.as_deref(), &body)?;
        parse_response(&resp)
    }
}

fn wire_message(m: &Message) -> Value {
    match (m.role, &m.tool_call) {
        (Role::Assistant, Some(call)) => json!({
            "role": "assistant",
            "content": Value::Null,
            "tool_calls": [{
                "id": call.id,
                "type": "function",
                "function": {"name": call.name, "arguments": call.arguments.to_string()},
            }],
        }),
        (Role::Tool, _) => json!({
            "role": "tool",
            "tool_call_id": m.tool_call_id.clone().unwrap_or_default(),
            "content": m.content,
        }),
        (role, _) => json!({"role": role, "content": m.content}),
    }
}

fn wire_tool(t: &ToolSpec) -> Value {
    json!({
        "type": "function",
        "function": {"name": t.name, "description": t.description, "parameters": t.parameters},
    })
}

pub fn build_request_body(model: &str, temperature: f64, request: &ChatRequest<'_>) -> Value {
    let mut body = json!({
        "model": model,
        "temperature": temperature,
        "messages": request.messages.iter().map(wire_message).collect::<Vec<_>>(),
    });
    if !request.tools.is_empty() {
        body["tools"] = request.tools.iter().map(wire_tool).collect::<Vec<_>>().into();
    }
    body
}

/// Extracts the first choice: a tool call if present, else the text content.
pub fn parse_response(resp: &Value) -> Result<ChatReply> {
    let msg = resp
        .pointer("/choices/0/message")
        .ok_or_else(|| Error::protocol(format!("response has no choices[0].message: {resp}")))?;
    if let Some(call) = msg.pointer("/tool_calls/0") {
        let name = call
            .pointer("/function/name")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::protocol("tool call without a function name"))?;
        let arguments = match call.pointer("/function/arguments") {
            Some(Value::String(s)) if s.trim().is_empty() => json!({}),
            Some(Value::String(s)) => serde_json::from_str(s)
                .map_err(|e| Error::protocol(format!("tool call `{name}` arguments are not JSON: {e}")))?,
            Some(v @ Value::Object(_)) => v.clone(),
            None | Some(Value::Null) => json!({}),
            Some(other) => return Err(Error::protocol(format!("tool call arguments: {other}"))),
        };
        let id = call.get("id").and_then(Value::as_str).unwrap_or_default();
        return Ok(ChatReply::ToolCall(ToolCall {
            id: id.to_string(),
            name: name.to_string(),
            arguments,
        }));
    }
    match msg.get("content") {
        Some(Value::String(s)) => Ok(ChatReply::text(s.clone())),
        _ => Err(Error::protocol("response message has neither content nor tool calls")),
    }
}
