//! Deterministic scripted model client for offline runs and tests.
//!
//! Every sample's behavior is declared up front in a [`MockSampleSpec`]:
//! the impression-token distribution, the verdict the deep continuation
//! lands on, optional canned reasoning text, and an optional number of
//! transient failures to inject. Identical specs and seed produce
//! byte-identical transcripts.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::client::{
    Candidate, ClientError, GenerateOutput, GenerateRequest, ModelClient, TokenLogprob,
};
use crate::grammar::ReasoningMode;
use crate::verdict::Verdict;

/// Scripted behavior for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockSampleSpec {
    pub sample_id: String,
    /// Probability mass on "fake" at the impression token.
    pub fast_p_fake: f64,
    /// Verdict the deep transcript concludes with.
    pub deep_verdict: Verdict,
    /// Token actually emitted at the impression position; defaults to the
    /// distribution's argmax.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fast_verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflection: Option<String>,
    /// Filler length for the generated reason when no text is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason_tokens: Option<u32>,
    /// Transient transport failures to inject before the first success.
    #[serde(default)]
    pub fail_attempts: u32,
}

impl MockSampleSpec {
    pub fn new(sample_id: impl Into<String>, fast_p_fake: f64, deep_verdict: Verdict) -> Self {
        MockSampleSpec {
            sample_id: sample_id.into(),
            fast_p_fake,
            deep_verdict,
            fast_verdict: None,
            reason: None,
            reflection: None,
            reason_tokens: None,
            fail_attempts: 0,
        }
    }

    fn sampled_verdict(&self) -> Verdict {
        self.fast_verdict.unwrap_or(if self.fast_p_fake >= 0.5 {
            Verdict::Fake
        } else {
            Verdict::Real
        })
    }
}

/// The scripted client.
pub struct MockModelClient {
    specs: HashMap<String, MockSampleSpec>,
    seed: u64,
    failures_left: Mutex<HashMap<String, u32>>,
}

impl MockModelClient {
    pub fn new(specs: Vec<MockSampleSpec>, seed: u64) -> Self {
        let failures_left = specs
            .iter()
            .filter(|s| s.fail_attempts > 0)
            .map(|s| (s.sample_id.clone(), s.fail_attempts))
            .collect();
        MockModelClient {
            specs: specs.into_iter().map(|s| (s.sample_id.clone(), s)).collect(),
            seed,
            failures_left: Mutex::new(failures_left),
        }
    }

    /// Load specs from a JSON-lines file.
    pub fn from_jsonl_path<P: AsRef<Path>>(path: P, seed: u64) -> Result<Self, ClientError> {
        let file = File::open(&path)
            .map_err(|e| ClientError::InvalidRequest(format!("mock spec file: {e}")))?;
        let specs = crate::jsonl::read_jsonl(BufReader::new(file))
            .map_err(|e| ClientError::InvalidRequest(format!("mock spec file: {e}")))?;
        Ok(MockModelClient::new(specs, seed))
    }

    fn spec_for(&self, sample_id: &str) -> Result<&MockSampleSpec, ClientError> {
        self.specs.get(sample_id).ok_or_else(|| {
            ClientError::InvalidRequest(format!("no scripted behavior for sample {sample_id:?}"))
        })
    }

    fn maybe_fail(&self, sample_id: &str) -> Result<(), ClientError> {
        let mut left = self.failures_left.lock().expect("mock failure counter");
        if let Some(n) = left.get_mut(sample_id) {
            if *n > 0 {
                *n -= 1;
                return Err(ClientError::Transport(format!(
                    "injected failure for {sample_id}"
                )));
            }
        }
        Ok(())
    }

    fn reason_text(&self, spec: &MockSampleSpec) -> String {
        match &spec.reason {
            Some(text) => text.clone(),
            None => filler_tokens(self.seed, &spec.sample_id, spec.reason_tokens.unwrap_or(24)),
        }
    }

    fn reflection_text(&self, spec: &MockSampleSpec) -> String {
        spec.reflection
            .clone()
            .unwrap_or_else(|| "re-examined the flagged areas and settled the call".into())
    }

    fn continuation_text(&self, spec: &MockSampleSpec) -> String {
        format!(
            "\n<reason>{}</reason>\n<reflection>{}</reflection>\n<answer> {} </answer>",
            self.reason_text(spec),
            self.reflection_text(spec),
            spec.deep_verdict
        )
    }

    fn impression_candidates(&self, spec: &MockSampleSpec) -> Vec<Candidate> {
        let p_fake = spec.fast_p_fake.clamp(1e-12, 1.0 - 1e-12);
        vec![
            Candidate {
                token: "real".into(),
                logprob: (1.0 - p_fake).ln(),
            },
            Candidate {
                token: "fake".into(),
                logprob: p_fake.ln(),
            },
        ]
    }

    fn verdict_token(&self, spec: &MockSampleSpec, verdict: Verdict) -> TokenLogprob {
        let candidates = self.impression_candidates(spec);
        let logprob = candidates
            .iter()
            .find(|c| c.token == verdict.as_str())
            .map(|c| c.logprob)
            .unwrap_or(0.0);
        TokenLogprob {
            token: verdict.as_str().into(),
            logprob,
            top: candidates,
        }
    }

    fn output_from_text(&self, spec: &MockSampleSpec, text: String) -> GenerateOutput {
        // one token entry per whitespace unit; the verdict token after the
        // impression tag carries the two-candidate distribution
        let mut saw_impression_tag = false;
        let tokens = text
            .split_whitespace()
            .map(|tok| {
                if saw_impression_tag {
                    if let Some(v) = Verdict::parse_token(tok) {
                        saw_impression_tag = false;
                        return self.verdict_token(spec, v);
                    }
                }
                if tok == "<impression>" || tok == "<guess>" {
                    saw_impression_tag = true;
                }
                TokenLogprob {
                    token: tok.to_string(),
                    logprob: -0.1,
                    top: Vec::new(),
                }
            })
            .collect();
        GenerateOutput {
            text,
            tokens,
            stopped_on: None,
        }
    }
}

/// Deterministic filler text: `n` tokens keyed by seed and sample id.
fn filler_tokens(seed: u64, sample_id: &str, n: u32) -> String {
    let base = crate::annotate::stable_hash(seed, sample_id);
    let mut out = String::new();
    for i in 0..n {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&format!("w{}", (base.wrapping_add(i as u64 * 31)) % 9973));
    }
    out
}

impl ModelClient for MockModelClient {
    fn generate(&self, req: &GenerateRequest) -> Result<GenerateOutput, ClientError> {
        self.maybe_fail(&req.sample_id)?;
        let spec = self.spec_for(&req.sample_id)?;
        let sampled = spec.sampled_verdict();
        match req.mode {
            ReasoningMode::WithoutReasoning => {
                let text = sampled.to_string();
                let tokens = vec![self.verdict_token(spec, sampled)];
                Ok(GenerateOutput {
                    text,
                    tokens,
                    stopped_on: None,
                })
            }
            ReasoningMode::Heuristic => {
                let text = format!(
                    "<answer> {} </answer>\n<reason>{}</reason>",
                    sampled,
                    self.reason_text(spec)
                );
                Ok(self.output_from_text(spec, text))
            }
            ReasoningMode::Analytic => {
                let text = format!(
                    "<think>{}</think>\n<answer> {} </answer>",
                    self.reason_text(spec),
                    spec.deep_verdict
                );
                Ok(self.output_from_text(spec, text))
            }
            ReasoningMode::GuessReasonAnswer => {
                let text = format!(
                    "<impression> {} </impression>\n<think>{}</think>\n<answer> {} </answer>",
                    sampled,
                    self.reason_text(spec),
                    spec.deep_verdict
                );
                Ok(self.output_from_text(spec, text))
            }
            ReasoningMode::HeuristicToAnalytic => {
                let phase1 = req.stop.iter().any(|s| s == "</impression>");
                if phase1 {
                    let text = format!("<impression> {sampled}");
                    let mut out = self.output_from_text(spec, text);
                    out.stopped_on = Some("</impression>".into());
                    Ok(out)
                } else {
                    let text = format!(
                        "<impression> {sampled} </impression>{}",
                        self.continuation_text(spec)
                    );
                    Ok(self.output_from_text(spec, text))
                }
            }
        }
    }

    fn continue_generation(&self, req: &GenerateRequest) -> Result<GenerateOutput, ClientError> {
        self.maybe_fail(&req.sample_id)?;
        let spec = self.spec_for(&req.sample_id)?;
        if req.committed_prefix.is_none() {
            return Err(ClientError::InvalidRequest(
                "continue_generation requires a committed prefix".into(),
            ));
        }
        let text = self.continuation_text(spec);
        Ok(self.output_from_text(spec, text))
    }

    fn score_verdict_continuations(
        &self,
        req: &GenerateRequest,
    ) -> Result<(f64, f64), ClientError> {
        let spec = self.spec_for(&req.sample_id)?;
        let p_fake = spec.fast_p_fake.clamp(1e-12, 1.0 - 1e-12);
        Ok(((1.0 - p_fake).ln(), p_fake.ln()))
    }
}
