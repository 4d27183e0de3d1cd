//! Chat sessions for the two model roles and the backends that answer them:
//! a live HTTP provider, transcript replay, and a fixed script.

mod live;
mod transcript;

use std::collections::{HashMap, VecDeque};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::prompts::PromptBundle;

pub use live::{LiveBackend, ProviderConfig};
pub use transcript::{load_transcript, Transcript, TranscriptEntry, TranscriptWriter, TRANSCRIPT_VERSION};

/// Proposes invariants and proofs, or translates proofs into formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Synthesizer,
    Formalizer,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Synthesizer => "synthesizer",
            Role::Formalizer => "formalizer",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub speaker: Speaker,
    pub text: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCount {
    pub input: u64,
    pub output: u64,
}

impl TokenCount {
    pub fn total(self) -> u64 {
        self.input + self.output
    }
}

impl std::ops::AddAssign for TokenCount {
    fn add_assign(&mut self, rhs: TokenCount) {
        self.input += rhs.input;
        self.output += rhs.output;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChatSession {
    pub role: Role,
    pub messages: Vec<Message>,
    pub tokens: TokenCount,
}

impl ChatSession {
    pub fn new(role: Role) -> ChatSession {
        ChatSession {
            role,
            messages: Vec::new(),
            tokens: TokenCount::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("refusing to send an empty prompt")]
    EmptyPrompt,
    #[error("provider returned HTTP {status}: {message}")]
    Http { status: u16, message: String },
    #[error("provider request failed: {0}")]
    Transport(String),
    #[error("provider reply is malformed: {0}")]
    Malformed(String),
    #[error("no transcript entry for {role} request {digest}; the prompt differs from the recorded run")]
    ReplayMiss { digest: String, role: &'static str },
    #[error("scripted backend has no reply left for request {0}")]
    ScriptExhausted(String),
    #[error("provider configuration: {0}")]
    Config(String),
    #[error("transcript: {0}")]
    Transcript(String),
}

impl GatewayError {
    pub fn is_retriable(&self) -> bool {
        match self {
            GatewayError::Http { status, .. } => *status == 429 || *status >= 500,
            GatewayError::Transport(_) => true,
            _ => false,
        }
    }
}

pub struct Request<'a> {
    pub role: Role,
    pub digest: &'a str,
    pub history: &'a [Message],
    pub prompt: &'a str,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reply {
    pub text: String,
    pub tokens: TokenCount,
    /// Provider time for live calls; the recorded time on replay.
    pub latency: Duration,
}

pub trait ChatBackend: Send {
    fn complete(&mut self, req: &Request<'_>) -> Result<Reply, GatewayError>;
    fn describe(&self) -> String;
    /// Replayed backends report recorded latency instead of wall time.
    fn is_replay(&self) -> bool {
        false
    }
}

/// Hex SHA-256 of the role and prompt, shortened to 16 digits.
pub fn request_digest(role: Role, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(role.as_str().as_bytes());
    h.update(b"\n");
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())[..16].to_string()
}

/// Rough count for backends without provider usage data.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

fn estimate_request(req: &Request<'_>) -> u64 {
    req.history.iter().map(|m| estimate_tokens(&m.text)).sum::<u64>() + estimate_tokens(req.prompt)
}

pub struct ReplayBackend {
    transcript: Transcript,
}

impl ReplayBackend {
    pub fn new(transcript: Transcript) -> ReplayBackend {
        ReplayBackend { transcript }
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&mut self, req: &Request<'_>) -> Result<Reply, GatewayError> {
        let e = self
            .transcript
            .find(req.digest)
            .filter(|e| e.role == req.role)
            .ok_or_else(|| GatewayError::ReplayMiss {
                digest: req.digest.to_string(),
                role: req.role.as_str(),
            })?;
        Ok(Reply {
            text: e.response.clone(),
            tokens: e.tokens,
            latency: Duration::from_millis(e.latency_ms),
        })
    }

    fn describe(&self) -> String {
        format!("replay ({} entries)", self.transcript.entries.len())
    }

    fn is_replay(&self) -> bool {
        true
    }
}

/// One canned reply. Deserializes from a bare string or from an object
/// with optional usage figures for authoring budget scenarios.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptedReply {
    Text(String),
    Detailed {
        text: String,
        #[serde(default)]
        tokens: Option<TokenCount>,
        #[serde(default)]
        latency_ms: Option<u64>,
    },
}

impl From<String> for ScriptedReply {
    fn from(s: String) -> ScriptedReply {
        ScriptedReply::Text(s)
    }
}

/// Answers with canned replies in order, regardless of the prompt.
pub struct ScriptedBackend {
    replies: VecDeque<ScriptedReply>,
}

impl ScriptedBackend {
    pub fn new<R: Into<ScriptedReply>, I: IntoIterator<Item = R>>(replies: I) -> ScriptedBackend {
        ScriptedBackend {
            replies: replies.into_iter().map(Into::into).collect(),
        }
    }

    pub fn remaining(&self) -> usize {
        self.replies.len()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&mut self, req: &Request<'_>) -> Result<Reply, GatewayError> {
        let reply = self
            .replies
            .pop_front()
            .ok_or_else(|| GatewayError::ScriptExhausted(req.digest.to_string()))?;
        let (text, tokens, latency_ms) = match reply {
            ScriptedReply::Text(t) => (t, None, None),
            ScriptedReply::Detailed {
                text,
                tokens,
                latency_ms,
            } => (text, tokens, latency_ms),
        };
        Ok(Reply {
            tokens: tokens.unwrap_or(TokenCount {
                input: estimate_request(req),
                output: estimate_tokens(&text),
            }),
            latency: Duration::from_millis(latency_ms.unwrap_or(1000)),
            text,
        })
    }

    fn describe(&self) -> String {
        "scripted".into()
    }

    fn is_replay(&self) -> bool {
        true
    }
}

/// Routes prompts to a backend, keeps per-prompt occurrence counts so
/// repeated prompts get distinct digests, and optionally records.
pub struct Gateway {
    backend: Box<dyn ChatBackend>,
    recorder: Option<TranscriptWriter>,
    seen: HashMap<String, usize>,
}

impl Gateway {
    pub fn new(backend: Box<dyn ChatBackend>) -> Gateway {
        Gateway {
            backend,
            recorder: None,
            seen: HashMap::new(),
        }
    }

    pub fn recording(mut self, writer: TranscriptWriter) -> Gateway {
        self.recorder = Some(writer);
        self
    }

    pub fn describe(&self) -> String {
        self.backend.describe()
    }

    pub fn is_replay(&self) -> bool {
        self.backend.is_replay()
    }

    fn next_digest(&mut self, role: Role, prompt: &str) -> String {
        let base = request_digest(role, prompt);
        let n = self.seen.entry(base.clone()).or_insert(0);
        *n += 1;
        if *n == 1 {
            base
        } else {
            format!("{base}-{n}")
        }
    }

    /// Sends `prompt` in `session`, appends both messages and adds the
    /// reply's token usage to the session.
    pub fn send(&mut self, session: &mut ChatSession, prompt: &PromptBundle) -> Result<Reply, GatewayError> {
        if prompt.text.trim().is_empty() {
            return Err(GatewayError::EmptyPrompt);
        }
        let digest = self.next_digest(session.role, &prompt.text);
        let req = Request {
            role: session.role,
            digest: &digest,
            history: &session.messages,
            prompt: &prompt.text,
        };
        let started = Instant::now();
        let mut reply = self.backend.complete(&req)?;
        if !self.backend.is_replay() {
            reply.latency = started.elapsed();
        }
        if let Some(w) = self.recorder.as_mut() {
            w.write(&TranscriptEntry {
                digest: digest.clone(),
                role: session.role,
                response: reply.text.clone(),
                tokens: reply.tokens,
                latency_ms: reply.latency.as_millis() as u64,
                prompt: Some(prompt.text.clone()),
            })?;
        }
        session.messages.push(Message {
            speaker: Speaker::User,
            text: prompt.text.clone(),
        });
        session.messages.push(Message {
            speaker: Speaker::Assistant,
            text: reply.text.clone(),
        });
        session.tokens += reply.tokens;
        Ok(reply)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompts::PromptKind;

    fn bundle(text: &str) -> PromptBundle {
        PromptBundle {
            kind: PromptKind::InitialSynthesis,
            text: text.into(),
            slots: Default::default(),
        }
    }

    #[test]
    fn empty_prompt_rejected() {
        let mut g = Gateway::new(Box::new(ScriptedBackend::new(vec!["x".to_string()])));
        let mut s = ChatSession::new(Role::Synthesizer);
        assert!(matches!(g.send(&mut s, &bundle("  \n")), Err(GatewayError::EmptyPrompt)));
        assert!(s.messages.is_empty());
    }

    #[test]
    fn repeated_prompts_get_distinct_digests() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let mut g = Gateway::new(Box::new(ScriptedBackend::new(vec!["a".to_string(), "b".to_string()])))
            .recording(TranscriptWriter::create(&path).unwrap());
        let mut s = ChatSession::new(Role::Synthesizer);
        g.send(&mut s, &bundle("same")).unwrap();
        g.send(&mut s, &bundle("same")).unwrap();
        let t = load_transcript(&path).unwrap();
        let base = request_digest(Role::Synthesizer, "same");
        assert_eq!(t.entries[0].digest, base);
        assert_eq!(t.entries[1].digest, format!("{base}-2"));

        // Replaying gives the same answers in the same order.
        let mut r = Gateway::new(Box::new(ReplayBackend::new(t)));
        let mut s2 = ChatSession::new(Role::Synthesizer);
        assert_eq!(r.send(&mut s2, &bundle("same")).unwrap().text, "a");
        assert_eq!(r.send(&mut s2, &bundle("same")).unwrap().text, "b");
        assert_eq!(s2.tokens, s.tokens);
    }

    #[test]
    fn replay_miss_names_digest() {
        let mut g = Gateway::new(Box::new(ReplayBackend::new(Transcript::default())));
        let mut s = ChatSession::new(Role::Formalizer);
        let err = g.send(&mut s, &bundle("hello")).unwrap_err();
        assert!(err.to_string().contains(&request_digest(Role::Formalizer, "hello")));
    }

    #[test]
    fn roles_do_not_share_digests() {
        assert_ne!(request_digest(Role::Synthesizer, "p"), request_digest(Role::Formalizer, "p"));
    }
}
