//! Verifiable reward components for scored rollouts.
//!
//! Five components make up the score of one response:
//!
//! * accuracy — 1 iff the final answer matches the ground truth;
//! * confidence — `1 − cos(π/2 · p)` where `p` is the impression
//!   distribution's mass on the true class; smooth, increasing, 0 at p=0
//!   and 1 at p=1;
//! * length — `(1 − cos(l·π/512))/2`, granted only when the final answer
//!   is correct; by default the token count is clamped at the expected
//!   length so the reward is monotone then flat rather than oscillating;
//! * repetition — `−n/20` where `n` counts duplicate 16-token windows
//!   beyond their first occurrence;
//! * format — 1 iff the response parses under its grammar.
//!
//! The total is the plain unit-weight sum of the five (a weight vector is
//! accepted in the config but defaults to all ones).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gate::AnswerDistribution;
use crate::grammar::{self, ReasoningMode, Segments};
use crate::verdict::Verdict;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("domain error: {0}")]
    Domain(String),
}

/// Which part of the response feeds the repetition penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RepetitionScope {
    /// Count windows over the whole transcript (default).
    #[default]
    FullTranscript,
    /// Count only over the reasoning bodies (reason/reflection/think) when
    /// the response parses; falls back to the full transcript otherwise.
    ReasoningOnly,
}

/// Per-component weights applied when summing the total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub acc: f64,
    pub conf: f64,
    pub len: f64,
    pub rep: f64,
    pub fmt: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            acc: 1.0,
            conf: 1.0,
            len: 1.0,
            rep: 1.0,
            fmt: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Soft cap for the length reward, in tokens.
    pub expected_length_tokens: u32,
    /// Window size for the repetition count.
    pub ngram_size: usize,
    /// Divisor for the repetition penalty.
    pub repetition_scale: f64,
    /// Clamp the token count at the soft cap (see module docs).
    pub length_clamp: bool,
    pub repetition_scope: RepetitionScope,
    pub weights: RewardWeights,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            expected_length_tokens: 512,
            ngram_size: 16,
            repetition_scale: 20.0,
            length_clamp: true,
            repetition_scope: RepetitionScope::default(),
            weights: RewardWeights::default(),
        }
    }
}

/// The five components and their sum for one rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub acc: f64,
    pub conf: f64,
    pub len: f64,
    pub rep: f64,
    pub fmt: f64,
    pub total: f64,
}

/// Pluggable token boundary definition for length and repetition counting.
/// Model tokenizers are tokenizer-specific, so the engine defaults to
/// whitespace-delimited units and accepts a caller-supplied replacement.
pub trait Tokenizer {
    fn tokenize<'a>(&self, text: &'a str) -> Vec<&'a str>;
}

/// Default tokenizer: `str::split_whitespace`.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize<'a>(&self, text: &'a str) -> Vec<&'a str> {
        text.split_whitespace().collect()
    }
}

/// 1 iff the final answer matches the ground truth.
pub fn accuracy_reward(final_answer: Verdict, truth: Verdict) -> f64 {
    if final_answer == truth {
        1.0
    } else {
        0.0
    }
}

/// Soft calibration reward `1 − cos(π/2 · p_truth)`.
pub fn confidence_reward(p_truth: f64) -> Result<f64, RewardError> {
    if !p_truth.is_finite() || !(0.0..=1.0).contains(&p_truth) {
        return Err(RewardError::Domain(format!(
            "p_truth {p_truth} outside [0, 1]"
        )));
    }
    Ok(1.0 - (std::f64::consts::FRAC_PI_2 * p_truth).cos())
}

/// Length reward, granted only for correct final answers.
pub fn length_reward(length_tokens: u32, final_correct: bool, cfg: &RewardConfig) -> f64 {
    if !final_correct {
        return 0.0;
    }
    let cap = cfg.expected_length_tokens;
    let l = if cfg.length_clamp {
        length_tokens.min(cap)
    } else {
        length_tokens
    };
    (1.0 - (l as f64 * std::f64::consts::PI / cap as f64).cos()) / 2.0
}

/// Repetition penalty `−n / scale`, where `n` is the number of duplicate
/// `ngram_size`-token windows beyond their first occurrence. Sequences
/// shorter than the window size yield zero windows, hence zero penalty.
pub fn repetition_penalty<T: AsRef<str>>(tokens: &[T], cfg: &RewardConfig) -> f64 {
    let k = cfg.ngram_size;
    if k == 0 || tokens.len() < k {
        return 0.0;
    }
    let toks: Vec<&str> = tokens.iter().map(|t| t.as_ref()).collect();
    let mut seen = std::collections::HashSet::new();
    let mut duplicates = 0usize;
    for window in toks.windows(k) {
        if !seen.insert(window.to_vec()) {
            duplicates += 1;
        }
    }
    -(duplicates as f64) / cfg.repetition_scale
}

/// Binary format reward: 1 iff the text is well-formed under `mode`.
pub fn format_reward(text: &str, mode: ReasoningMode) -> f64 {
    if grammar::is_well_formed(text, mode) {
        1.0
    } else {
        0.0
    }
}

/// Score one response end to end with whitespace tokenization.
pub fn total_reward(
    text: &str,
    mode: ReasoningMode,
    truth: Verdict,
    impression_dist: &AnswerDistribution,
    cfg: &RewardConfig,
) -> RewardBreakdown {
    total_reward_with(text, mode, truth, impression_dist, cfg, &WhitespaceTokenizer)
}

/// Score one response end to end.
///
/// Total function: a malformed response still gets a full breakdown. The
/// format component is 0, and accuracy/length are computed from a lenient
/// `<answer>` scan when one is recoverable, else both are 0. Confidence is
/// computed from the supplied impression distribution regardless, since it
/// comes from the decoder and not from the text.
pub fn total_reward_with(
    text: &str,
    mode: ReasoningMode,
    truth: Verdict,
    impression_dist: &AnswerDistribution,
    cfg: &RewardConfig,
    tokenizer: &dyn Tokenizer,
) -> RewardBreakdown {
    let parsed = grammar::parse_mode(text, mode);
    let fmt = if parsed.is_ok() { 1.0 } else { 0.0 };
    let final_answer = match &parsed {
        Ok(p) => Some(p.answer()),
        Err(_) => recover_answer(text, mode),
    };
    let acc = final_answer.map_or(0.0, |v| accuracy_reward(v, truth));
    let conf = confidence_reward(impression_dist.mass_on(truth))
        .expect("distribution mass is in [0, 1] by construction");
    let all_tokens = tokenizer.tokenize(text);
    let len = length_reward(all_tokens.len() as u32, acc == 1.0, cfg);
    let rep = match (cfg.repetition_scope, &parsed) {
        (RepetitionScope::ReasoningOnly, Ok(p)) => {
            let scoped = reasoning_text(&p.segments);
            repetition_penalty(&tokenizer.tokenize(&scoped), cfg)
        }
        _ => repetition_penalty(&all_tokens, cfg),
    };
    let w = &cfg.weights;
    let total = w.acc * acc + w.conf * conf + w.len * len + w.rep * rep + w.fmt * fmt;
    RewardBreakdown {
        acc,
        conf,
        len,
        rep,
        fmt,
        total,
    }
}

fn reasoning_text(segments: &Segments) -> String {
    match segments {
        Segments::Bare { .. } => String::new(),
        Segments::AnswerReason { reason, .. } => reason.clone(),
        Segments::ThinkAnswer { think, .. } => think.clone(),
        Segments::GuessThinkAnswer { think, .. } => think.clone(),
        Segments::Staged {
            reason, reflection, ..
        } => format!("{reason}\n{reflection}"),
    }
}

/// Lenient scan for a final `<answer>…</answer>` verdict in malformed text.
/// Takes the last pair whose body is a verdict token; bare-verdict mode has
/// no tags to recover from and always yields `None`.
fn recover_answer(text: &str, mode: ReasoningMode) -> Option<Verdict> {
    if mode == ReasoningMode::WithoutReasoning {
        return None;
    }
    let mut found = None;
    let mut from = 0usize;
    while let Some(rel) = text[from..].find("<answer>") {
        let body_start = from + rel + "<answer>".len();
        match text[body_start..].find("</answer>") {
            Some(rel_close) => {
                let body = &text[body_start..body_start + rel_close];
                if let Some(v) = Verdict::parse_token(body) {
                    found = Some(v);
                }
                from = body_start + rel_close + "</answer>".len();
            }
            None => break,
        }
    }
    found
}
