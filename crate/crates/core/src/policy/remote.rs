//! Chat-completion adapters for an HTTP language-model endpoint.
//!
//! The endpoint receives `{"messages": [{"role": "user", "content": ...}],
//! "temperature": t}` and may answer either `{"content": "..."}` or the
//! common `{"choices": [{"message": {"content": "..."}}]}` shape.

use std::fmt::Write as _;
use std::time::Duration;

use serde_json::{json, Map, Value as Json};

use super::{
    Action, ActionCandidate, Evaluation, EvaluationRequest, Evaluator, Policy, PolicyError,
    PolicyRequest,
};
use crate::tools::ToolInvocation;

pub const ENV_URL: &str = "SCOPEKG_LLM_URL";
pub const ENV_KEY: &str = "SCOPEKG_LLM_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub url: String,
    pub key: Option<String>,
    pub model: Option<String>,
    pub timeout: Duration,
    /// Extra attempts after a transport failure.
    pub retries: u32,
    pub tool_temperature: f64,
    pub eval_temperature: f64,
}

impl RemoteConfig {
    pub fn new(url: impl Into<String>) -> Self {
        RemoteConfig {
            url: url.into(),
            key: None,
            model: None,
            timeout: Duration::from_secs(60),
            retries: 2,
            tool_temperature: 0.0,
            eval_temperature: 0.7,
        }
    }

    /// Reads the endpoint from `SCOPEKG_LLM_URL` and the optional bearer
    /// token from `SCOPEKG_LLM_KEY`.
    pub fn from_env() -> Result<Self, PolicyError> {
        let url = std::env::var(ENV_URL)
            .ok()
            .filter(|u| !u.trim().is_empty())
            .ok_or_else(|| PolicyError::Transport(format!("{ENV_URL} is not set")))?;
        let mut cfg = RemoteConfig::new(url);
        cfg.key = std::env::var(ENV_KEY).ok().filter(|k| !k.is_empty());
        Ok(cfg)
    }

    fn complete(&self, prompt: &str, temperature: f64) -> Result<String, PolicyError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build()
            .into();
        let mut body = json!({
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
        });
        if let Some(m) = &self.model {
            body["model"] = json!(m);
        }
        let mut last_error = String::new();
        for _ in 0..=self.retries {
            let mut req = agent.post(&self.url);
            if let Some(key) = &self.key {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            let mut resp = match req.send_json(&body) {
                Ok(r) => r,
                Err(e) => {
                    last_error = e.to_string();
                    continue;
                }
            };
            let reply: Json = resp
                .body_mut()
                .read_json()
                .map_err(|e| PolicyError::Malformed(e.to_string()))?;
            let content = reply["content"]
                .as_str()
                .or_else(|| reply["choices"][0]["message"]["content"].as_str())
                .ok_or_else(|| PolicyError::Malformed("reply has no content".into()))?;
            return Ok(content.to_string());
        }
        Err(PolicyError::Transport(last_error))
    }
}

/// Contents of the fenced code blocks in `text`, in order.
fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("```") {
        let after = &rest[start + 3..];
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        let body = &after[body_start..];
        let Some(end) = body.find("```") else {
            break;
        };
        out.push(body[..end].trim());
        rest = &body[end + 3..];
    }
    out
}

fn candidate_from(obj: &Map<String, Json>) -> Result<ActionCandidate, PolicyError> {
    let thought = obj.get("thought").and_then(Json::as_str).unwrap_or("").to_string();
    if let Some(answer) = obj.get("answer") {
        let text = answer
            .as_str()
            .ok_or_else(|| PolicyError::Malformed("`answer` must be a string".into()))?;
        return Ok(ActionCandidate::new(thought, Action::answer(text)));
    }
    let name = obj
        .get("tool")
        .and_then(Json::as_str)
        .ok_or_else(|| PolicyError::Malformed("block has neither `tool` nor `answer`".into()))?;
    let mut inv = ToolInvocation::new(name);
    match obj.get("args") {
        None | Some(Json::Null) => {}
        Some(Json::Object(args)) => {
            inv.args = args.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        }
        Some(_) => return Err(PolicyError::Malformed("`args` must be an object".into())),
    }
    Ok(ActionCandidate::new(thought, Action::Tool(inv)))
}

/// Parses a policy reply into at most `k` candidates. Every fenced block
/// must hold a candidate object or an array of them; free text without a
/// block is malformed.
pub fn parse_action_reply(text: &str, k: usize) -> Result<Vec<ActionCandidate>, PolicyError> {
    let blocks = fenced_blocks(text);
    if blocks.is_empty() {
        return Err(PolicyError::Malformed("no fenced json block".into()));
    }
    let mut out = Vec::new();
    for block in blocks {
        let value: Json =
            serde_json::from_str(block).map_err(|e| PolicyError::Malformed(format!("invalid json: {e}")))?;
        match value {
            Json::Object(o) => out.push(candidate_from(&o)?),
            Json::Array(items) => {
                for item in items {
                    let o = item
                        .as_object()
                        .ok_or_else(|| PolicyError::Malformed("array items must be objects".into()))?;
                    out.push(candidate_from(o)?);
                }
            }
            _ => return Err(PolicyError::Malformed("block is not an object".into())),
        }
    }
    out.truncate(k);
    Ok(out)
}

/// Parses `{"reward": r, "rationale": "..."}` from a fenced block (or the
/// bare reply). Rewards outside `[0, 1]` are clamped and the rationale
/// records the original value.
pub fn parse_evaluation_reply(text: &str) -> Result<Evaluation, PolicyError> {
    let body = fenced_blocks(text).first().copied().unwrap_or(text.trim());
    let value: Json =
        serde_json::from_str(body).map_err(|e| PolicyError::Malformed(format!("invalid json: {e}")))?;
    let reward = value["reward"]
        .as_f64()
        .filter(|r| r.is_finite())
        .ok_or_else(|| PolicyError::Malformed("missing numeric `reward`".into()))?;
    let mut rationale = value["rationale"].as_str().unwrap_or("").to_string();
    let clamped = reward.clamp(0.0, 1.0);
    if clamped != reward {
        if !rationale.is_empty() {
            rationale.push(' ');
        }
        let _ = write!(rationale, "(reward {reward} clamped to {clamped})");
    }
    Ok(Evaluation {
        reward: clamped,
        rationale,
    })
}

#[derive(Debug, Clone)]
pub struct RemotePolicy {
    pub config: RemoteConfig,
}

impl Policy for RemotePolicy {
    fn name(&self) -> &str {
        "remote"
    }

    fn propose(&self, request: &PolicyRequest<'_>) -> Result<Vec<ActionCandidate>, PolicyError> {
        let prompt = format!(
            "{}\nPropose up to {} distinct next actions.",
            request.prompt, request.k
        );
        let reply = self.config.complete(&prompt, request.temperature)?;
        parse_action_reply(&reply, request.k)
    }
}

#[derive(Debug, Clone)]
pub struct RemoteEvaluator {
    pub config: RemoteConfig,
}

impl Evaluator for RemoteEvaluator {
    fn name(&self) -> &str {
        "remote"
    }

    fn evaluate(&self, request: &EvaluationRequest<'_>) -> Result<Evaluation, PolicyError> {
        let mut prompt = request.prompt.clone();
        prompt.push_str("\n# Step feedback\n");
        for f in &request.feedback {
            let _ = writeln!(
                prompt,
                "step {}: {} {}{}",
                f.step + 1,
                f.tool.as_deref().unwrap_or("answer"),
                if f.success { "ok" } else { "failed" },
                f.result_count.map(|n| format!(" ({n} results)")).unwrap_or_default()
            );
        }
        if !request.memory.is_empty() {
            let failed = request
                .memory
                .iter()
                .filter(|m| m.observation.as_ref().is_some_and(|o| !o.success))
                .count();
            let _ = writeln!(
                prompt,
                "# Memory\n{} earlier actions across the search, {failed} failed.",
                request.memory.len()
            );
        }
        prompt.push_str(
            "\nRate how close the transcript is to a correct final answer. Reply with a fenced json block {\"reward\": <0..1>, \"rationale\": \"...\"}.",
        );
        let reply = self.config.complete(&prompt, self.config.eval_temperature)?;
        parse_evaluation_reply(&reply)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    #[test]
    fn parses_tool_and_answer_blocks() {
        let reply = "Let me think.\n```json\n{\"thought\": \"list\", \"tool\": \"structured_query\", \"args\": {\"query\": \"MATCH (p:Park) RETURN p.id\"}}\n```\nor\n```\n{\"answer\": \"ANSWER: park:a\"}\n```";
        let c = parse_action_reply(reply, 5).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].action.tool_name(), Some("structured_query"));
        assert_eq!(c[1].action, Action::answer("ANSWER: park:a"));
        assert_eq!(parse_action_reply(reply, 1).unwrap().len(), 1);
    }

    #[test]
    fn free_text_is_malformed() {
        assert!(matches!(
            parse_action_reply("I would query the parks.", 2),
            Err(PolicyError::Malformed(_))
        ));
        assert!(matches!(
            parse_action_reply("```json\n{\"tool\": 3}\n```", 2),
            Err(PolicyError::Malformed(_))
        ));
    }

    #[test]
    fn rewards_are_clamped_with_a_note() {
        let e = parse_evaluation_reply("```json\n{\"reward\": 1.7, \"rationale\": \"great\"}\n```").unwrap();
        assert_eq!(e.reward, 1.0);
        assert!(e.rationale.contains("1.7"));
        let e = parse_evaluation_reply("{\"reward\": 0.25}").unwrap();
        assert_eq!((e.reward, e.rationale.as_str()), (0.25, ""));
        assert!(parse_evaluation_reply("{\"reward\": \"high\"}").is_err());
    }

    #[test]
    fn talks_to_an_http_endpoint() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = vec![0u8; 65536];
            let mut seen = Vec::new();
            // read until the JSON body has closed
            while !String::from_utf8_lossy(&seen).contains("\"temperature\"") {
                let n = stream.read(&mut buf).unwrap();
                if n == 0 {
                    break;
                }
                seen.extend_from_slice(&buf[..n]);
            }
            let body = r#"{"content": "```json\n{\"reward\": 0.4, \"rationale\": \"ok\"}\n```"}"#;
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
            String::from_utf8_lossy(&seen).to_string()
        });
        let cfg = RemoteConfig {
            key: Some("secret".into()),
            retries: 0,
            ..RemoteConfig::new(format!("http://{addr}/v1/chat"))
        };
        let text = cfg.complete("hello", 0.7).unwrap();
        assert_eq!(parse_evaluation_reply(&text).unwrap().reward, 0.4);
        let request = server.join().unwrap();
        assert!(request.contains("Bearer secret"));
        assert!(request.contains("hello"));
    }

    #[test]
    fn unreachable_endpoint_is_a_transport_error() {
        let cfg = RemoteConfig {
            timeout: Duration::from_millis(200),
            retries: 1,
            ..RemoteConfig::new("http://127.0.0.1:9/chat")
        };
        assert!(matches!(cfg.complete("x", 0.0), Err(PolicyError::Transport(_))));
    }
}
