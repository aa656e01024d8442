//! Behavioral contract for text-generation backends.
//!
//! The controller drives any implementation of [`ModelClient`]: a scripted
//! mock for offline runs and tests, or an HTTP client for an
//! OpenAI-compatible endpoint. Implementations must be safe for concurrent
//! use; the controller fans requests out across threads.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::ReasoningMode;

/// Default generation temperature.
pub const DEFAULT_TEMPERATURE: f64 = 0.3;
/// Default cap on newly generated tokens.
pub const DEFAULT_MAX_TOKENS: u32 = 4092;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// One turn of a chat conversation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// A single generation request.
#[derive(Debug, Clone)]
pub struct GenerateRequest {
    /// Sample this request belongs to; scripted clients key on it.
    pub sample_id: String,
    /// The full user prompt (with the image slot marker left in place).
    pub prompt: String,
    /// Opaque image reference forwarded as an attachment; never decoded.
    pub image_ref: Option<String>,
    /// Committed assistant text the backend must continue from verbatim.
    pub committed_prefix: Option<String>,
    /// Stop sequences; generated text excludes the matched stop.
    pub stop: Vec<String>,
    pub max_tokens: u32,
    pub temperature: f64,
    /// How many alternatives to return per generated token.
    pub top_logprobs: u8,
    /// The response grammar this prompt asks for.
    pub mode: ReasoningMode,
}

/// One alternative continuation token and its log-probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub token: String,
    pub logprob: f64,
}

/// A generated token with its sampled log-probability and the candidate
/// alternatives at that position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprob {
    pub token: String,
    pub logprob: f64,
    pub top: Vec<Candidate>,
}

/// Result of one generation call.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerateOutput {
    /// Newly generated text, excluding any matched stop sequence.
    pub text: String,
    /// Per-token log-probability data for the generated text, in order.
    pub tokens: Vec<TokenLogprob>,
    /// Which stop sequence ended generation, if one did.
    pub stopped_on: Option<String>,
}

impl GenerateOutput {
    pub fn token_count(&self) -> u32 {
        self.tokens.len() as u32
    }
}

#[derive(Debug, Clone, Error)]
pub enum ClientError {
    /// Transport-level failure; retryable.
    #[error("transport error: {0}")]
    Transport(String),
    /// The endpoint answered but not in the shape the controller needs
    /// (missing log-probabilities, empty choices, unparseable body).
    #[error("protocol error: {0}")]
    Protocol(String),
    /// Non-success HTTP status.
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl ClientError {
    /// Whether a retry could plausibly succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            ClientError::Transport(_) => true,
            ClientError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// A text-generation backend.
pub trait ModelClient: Send + Sync {
    /// Generate a fresh completion for the prompt.
    fn generate(&self, req: &GenerateRequest) -> Result<GenerateOutput, ClientError>;

    /// Continue generation after `req.committed_prefix`, which the backend
    /// must treat as authoritative, already-produced assistant text.
    fn continue_generation(&self, req: &GenerateRequest) -> Result<GenerateOutput, ClientError>;

    /// Scored-choice fallback: return `(logprob_real, logprob_fake)` for
    /// the two verdict continuations of `committed_prefix`. Used when the
    /// endpoint cannot report candidates for the non-sampled verdict.
    fn score_verdict_continuations(
        &self,
        _req: &GenerateRequest,
    ) -> Result<(f64, f64), ClientError> {
        Err(ClientError::Protocol(
            "backend does not support scored-choice fallback".into(),
        ))
    }
}
