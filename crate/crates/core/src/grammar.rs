//! Tagged reasoning grammars: parsing, validation and canonical rendering.
//!
//! Five output formats are supported, one per [`ReasoningMode`]:
//!
//! * bare verdict — the whole (trimmed) response is `real` or `fake`;
//! * answer-first — `<answer>…</answer><reason>…</reason>`;
//! * reason-first — `<think>…</think><answer>…</answer>`;
//! * guess/think/answer — `<impression>…</impression><think>…</think><answer>…</answer>`,
//!   with `<guess>` accepted as an alias for the opening pair;
//! * staged — `<impression>…</impression><reason>…</reason><reflection>…</reflection><answer>…</answer>`.
//!
//! Parsing is strict: each tag pair must appear exactly once, in grammar
//! order, with nothing but whitespace outside the tags. Tags are
//! case-sensitive lowercase; verdict bodies are matched case-insensitively
//! with surrounding whitespace trimmed. Segment bodies may contain any text
//! except a literal tag token of the same grammar, which keeps the scan
//! single-pass and unambiguous.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::verdict::Verdict;

/// Which reasoning grammar a response is expected to follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasoningMode {
    /// Bare verdict, no tags.
    WithoutReasoning,
    /// Answer first, then supporting reasons.
    Heuristic,
    /// Thinking first, then the answer.
    Analytic,
    /// Initial guess, thinking, final answer.
    GuessReasonAnswer,
    /// Impression, reasons, reflection, final answer.
    HeuristicToAnalytic,
}

impl ReasoningMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReasoningMode::WithoutReasoning => "without_reasoning",
            ReasoningMode::Heuristic => "heuristic",
            ReasoningMode::Analytic => "analytic",
            ReasoningMode::GuessReasonAnswer => "guess_reason_answer",
            ReasoningMode::HeuristicToAnalytic => "heuristic_to_analytic",
        }
    }
}

impl fmt::Display for ReasoningMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Logical segment of a tagged response.
///
/// A guess opened with `<guess>` is reported as [`SegmentName::Impression`];
/// the surface spelling is preserved separately in [`GuessOpener`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentName {
    Impression,
    Reason,
    Reflection,
    Think,
    Answer,
}

impl SegmentName {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentName::Impression => "impression",
            SegmentName::Reason => "reason",
            SegmentName::Reflection => "reflection",
            SegmentName::Think => "think",
            SegmentName::Answer => "answer",
        }
    }
}

impl fmt::Display for SegmentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Byte range of one segment body inside the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub segment: SegmentName,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

/// Parse failure for any of the tagged grammars.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("missing tag pair <{0}>…</{0}>")]
    MissingTag(SegmentName),
    #[error("tag <{0}> appears more than once")]
    DuplicateTag(SegmentName),
    #[error("tag <{0}> out of order")]
    OutOfOrder(SegmentName),
    #[error("segment <{segment}> holds {token:?}, expected real or fake")]
    BadVerdict { segment: SegmentName, token: String },
    #[error("non-whitespace content outside tags")]
    TrailingContent,
    #[error("segment <{0}> is empty after trimming")]
    EmptyBody(SegmentName),
    #[error("segment <{0}> body contains a reserved tag token")]
    TagInBody(SegmentName),
    #[error("segments do not match grammar of mode {0}")]
    UnsupportedMode(ReasoningMode),
}

/// Which opening spelling introduced the first segment of the
/// guess/think/answer grammar. Preserved so rendering round-trips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuessOpener {
    Impression,
    Guess,
}

impl GuessOpener {
    fn open(self) -> &'static str {
        match self {
            GuessOpener::Impression => "<impression>",
            GuessOpener::Guess => "<guess>",
        }
    }

    fn close(self) -> &'static str {
        match self {
            GuessOpener::Impression => "</impression>",
            GuessOpener::Guess => "</guess>",
        }
    }
}

/// A parsed staged transcript: impression, reasons, reflection, answer.
///
/// `spans` records where each body sat in the source text. Equality (and
/// therefore round-trip checks) compares the four content fields only —
/// spans are provenance, not content.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarResponse {
    pub impression: Verdict,
    pub reason: String,
    pub reflection: String,
    pub answer: Verdict,
    pub spans: Vec<Span>,
}

impl PartialEq for HarResponse {
    fn eq(&self, other: &Self) -> bool {
        self.impression == other.impression
            && self.reason == other.reason
            && self.reflection == other.reflection
            && self.answer == other.answer
    }
}

impl Eq for HarResponse {}

impl HarResponse {
    /// Build a response from parts, trimming the text bodies and computing
    /// spans as they fall in the canonical rendering.
    ///
    /// Rejects empty bodies and bodies that embed one of this grammar's own
    /// tag tokens, since those could never round-trip through the parser.
    pub fn new(
        impression: Verdict,
        reason: &str,
        reflection: &str,
        answer: Verdict,
    ) -> Result<Self, GrammarError> {
        let reason = reason.trim().to_string();
        let reflection = reflection.trim().to_string();
        for (name, body) in [
            (SegmentName::Reason, reason.as_str()),
            (SegmentName::Reflection, reflection.as_str()),
        ] {
            if body.is_empty() {
                return Err(GrammarError::EmptyBody(name));
            }
            if contains_any_token(body, STAGED_TOKENS) {
                return Err(GrammarError::TagInBody(name));
            }
        }
        let mut resp = HarResponse {
            impression,
            reason,
            reflection,
            answer,
            spans: Vec::new(),
        };
        resp.spans = canonical_staged_spans(&resp);
        Ok(resp)
    }

    /// Canonical serialization: one segment per line, lowercase verdicts.
    pub fn render(&self) -> String {
        format!(
            "<impression>{}</impression>\n<reason>{}</reason>\n<reflection>{}</reflection>\n<answer>{}</answer>",
            self.impression, self.reason, self.reflection, self.answer
        )
    }
}

/// Mode-dependent segment contents of a parsed response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segments {
    Bare {
        answer: Verdict,
    },
    AnswerReason {
        answer: Verdict,
        reason: String,
    },
    ThinkAnswer {
        think: String,
        answer: Verdict,
    },
    GuessThinkAnswer {
        guess: Verdict,
        opener: GuessOpener,
        think: String,
        answer: Verdict,
    },
    Staged {
        impression: Verdict,
        reason: String,
        reflection: String,
        answer: Verdict,
    },
}

impl Segments {
    fn mode(&self) -> ReasoningMode {
        match self {
            Segments::Bare { .. } => ReasoningMode::WithoutReasoning,
            Segments::AnswerReason { .. } => ReasoningMode::Heuristic,
            Segments::ThinkAnswer { .. } => ReasoningMode::Analytic,
            Segments::GuessThinkAnswer { .. } => ReasoningMode::GuessReasonAnswer,
            Segments::Staged { .. } => ReasoningMode::HeuristicToAnalytic,
        }
    }
}

/// A response parsed under any of the five grammars.
///
/// Equality compares `mode` and `segments`; spans are provenance only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub mode: ReasoningMode,
    pub segments: Segments,
    pub spans: Vec<Span>,
}

impl PartialEq for ParsedResponse {
    fn eq(&self, other: &Self) -> bool {
        self.mode == other.mode && self.segments == other.segments
    }
}

impl Eq for ParsedResponse {}

impl ParsedResponse {
    /// Pair segments with their mode, rejecting mismatched combinations.
    pub fn new(mode: ReasoningMode, segments: Segments) -> Result<Self, GrammarError> {
        if segments.mode() != mode {
            return Err(GrammarError::UnsupportedMode(mode));
        }
        Ok(ParsedResponse {
            mode,
            segments,
            spans: Vec::new(),
        })
    }

    /// The final verdict of the response, whatever the grammar.
    pub fn answer(&self) -> Verdict {
        match &self.segments {
            Segments::Bare { answer }
            | Segments::AnswerReason { answer, .. }
            | Segments::ThinkAnswer { answer, .. }
            | Segments::GuessThinkAnswer { answer, .. }
            | Segments::Staged { answer, .. } => *answer,
        }
    }

    /// The up-front verdict (impression or guess), where the grammar has one.
    pub fn initial_verdict(&self) -> Option<Verdict> {
        match &self.segments {
            Segments::GuessThinkAnswer { guess, .. } => Some(*guess),
            Segments::Staged { impression, .. } => Some(*impression),
            _ => None,
        }
    }

    /// Canonical serialization; [`parse_mode`] of the result reparses equal.
    pub fn render(&self) -> String {
        match &self.segments {
            Segments::Bare { answer } => answer.to_string(),
            Segments::AnswerReason { answer, reason } => {
                format!("<answer>{answer}</answer>\n<reason>{reason}</reason>")
            }
            Segments::ThinkAnswer { think, answer } => {
                format!("<think>{think}</think>\n<answer>{answer}</answer>")
            }
            Segments::GuessThinkAnswer {
                guess,
                opener,
                think,
                answer,
            } => format!(
                "{}{guess}{}\n<think>{think}</think>\n<answer>{answer}</answer>",
                opener.open(),
                opener.close()
            ),
            Segments::Staged {
                impression,
                reason,
                reflection,
                answer,
            } => HarResponse {
                impression: *impression,
                reason: reason.clone(),
                reflection: reflection.clone(),
                answer: *answer,
                spans: Vec::new(),
            }
            .render(),
        }
    }
}

impl From<HarResponse> for ParsedResponse {
    fn from(r: HarResponse) -> Self {
        ParsedResponse {
            mode: ReasoningMode::HeuristicToAnalytic,
            segments: Segments::Staged {
                impression: r.impression,
                reason: r.reason,
                reflection: r.reflection,
                answer: r.answer,
            },
            spans: r.spans,
        }
    }
}

// ── grammar tables ──────────────────────────────────────────────────────

#[derive(Clone, Copy, PartialEq)]
enum BodyKind {
    Verdict,
    Text,
}

#[derive(Clone, Copy)]
struct SegmentSpec {
    name: SegmentName,
    kind: BodyKind,
    open: &'static str,
    close: &'static str,
}

const fn seg(
    name: SegmentName,
    kind: BodyKind,
    open: &'static str,
    close: &'static str,
) -> SegmentSpec {
    SegmentSpec {
        name,
        kind,
        open,
        close,
    }
}

const STAGED_GRAMMAR: &[SegmentSpec] = &[
    seg(SegmentName::Impression, BodyKind::Verdict, "<impression>", "</impression>"),
    seg(SegmentName::Reason, BodyKind::Text, "<reason>", "</reason>"),
    seg(SegmentName::Reflection, BodyKind::Text, "<reflection>", "</reflection>"),
    seg(SegmentName::Answer, BodyKind::Verdict, "<answer>", "</answer>"),
];

const HEURISTIC_GRAMMAR: &[SegmentSpec] = &[
    seg(SegmentName::Answer, BodyKind::Verdict, "<answer>", "</answer>"),
    seg(SegmentName::Reason, BodyKind::Text, "<reason>", "</reason>"),
];

const ANALYTIC_GRAMMAR: &[SegmentSpec] = &[
    seg(SegmentName::Think, BodyKind::Text, "<think>", "</think>"),
    seg(SegmentName::Answer, BodyKind::Verdict, "<answer>", "</answer>"),
];

const STAGED_TOKENS: &[&str] = &[
    "<impression>",
    "</impression>",
    "<reason>",
    "</reason>",
    "<reflection>",
    "</reflection>",
    "<answer>",
    "</answer>",
];

fn contains_any_token(body: &str, tokens: &[&str]) -> bool {
    tokens.iter().any(|t| body.contains(t))
}

fn canonical_staged_spans(r: &HarResponse) -> Vec<Span> {
    let mut spans = Vec::with_capacity(4);
    let mut pos = 0usize;
    let bodies = [
        (SegmentName::Impression, "<impression>", "</impression>", r.impression.as_str().len()),
        (SegmentName::Reason, "<reason>", "</reason>", r.reason.len()),
        (SegmentName::Reflection, "<reflection>", "</reflection>", r.reflection.len()),
        (SegmentName::Answer, "<answer>", "</answer>", r.answer.as_str().len()),
    ];
    for (i, (name, open, close, body_len)) in bodies.into_iter().enumerate() {
        if i > 0 {
            pos += 1; // newline separator
        }
        pos += open.len();
        spans.push(Span {
            segment: name,
            start: pos,
            end: pos + body_len,
        });
        pos += body_len + close.len();
    }
    spans
}

// ── the scanner ─────────────────────────────────────────────────────────

struct RawSegment {
    name: SegmentName,
    kind: BodyKind,
    body: Range<usize>,
}

/// Scan `text` against a fixed segment sequence.
///
/// Error precedence: duplicated tags first, then missing tags (both in
/// grammar order), then ordering, then stray content outside tags.
fn scan_tagged(text: &str, grammar: &[SegmentSpec]) -> Result<Vec<RawSegment>, GrammarError> {
    // (segment index, is_close, byte position, token length)
    let mut tokens: Vec<(usize, bool, usize, usize)> = Vec::new();
    let mut opens = vec![0usize; grammar.len()];
    let mut closes = vec![0usize; grammar.len()];
    for (i, s) in grammar.iter().enumerate() {
        for (pos, _) in text.match_indices(s.open) {
            tokens.push((i, false, pos, s.open.len()));
            opens[i] += 1;
        }
        for (pos, _) in text.match_indices(s.close) {
            tokens.push((i, true, pos, s.close.len()));
            closes[i] += 1;
        }
    }
    for (i, s) in grammar.iter().enumerate() {
        if opens[i] > 1 || closes[i] > 1 {
            return Err(GrammarError::DuplicateTag(s.name));
        }
    }
    for (i, s) in grammar.iter().enumerate() {
        if opens[i] == 0 || closes[i] == 0 {
            return Err(GrammarError::MissingTag(s.name));
        }
    }
    tokens.sort_by_key(|t| t.2);
    for (k, &(seg_idx, is_close, _, _)) in tokens.iter().enumerate() {
        let (want_seg, want_close) = (k / 2, k % 2 == 1);
        if seg_idx != want_seg || is_close != want_close {
            return Err(GrammarError::OutOfOrder(grammar[seg_idx].name));
        }
    }
    // Whitespace-only gaps before, between and after the tag pairs.
    let mut cursor = 0usize;
    for pair in tokens.chunks(2) {
        let (_, _, open_pos, _) = pair[0];
        if !text[cursor..open_pos].trim().is_empty() {
            return Err(GrammarError::TrailingContent);
        }
        let (_, _, close_pos, close_len) = pair[1];
        cursor = close_pos + close_len;
    }
    if !text[cursor..].trim().is_empty() {
        return Err(GrammarError::TrailingContent);
    }
    Ok(tokens
        .chunks(2)
        .zip(grammar)
        .map(|(pair, s)| {
            let body_start = pair[0].2 + pair[0].3;
            let body_end = pair[1].2;
            RawSegment {
                name: s.name,
                kind: s.kind,
                body: body_start..body_end,
            }
        })
        .collect())
}

struct Extracted {
    verdicts: Vec<(SegmentName, Verdict)>,
    texts: Vec<(SegmentName, String)>,
    spans: Vec<Span>,
}

fn extract_bodies(text: &str, raw: Vec<RawSegment>) -> Result<Extracted, GrammarError> {
    let mut verdicts = Vec::new();
    let mut texts = Vec::new();
    let mut spans = Vec::new();
    for seg in raw {
        let body = &text[seg.body.clone()];
        match seg.kind {
            BodyKind::Verdict => {
                let v = Verdict::parse_token(body).ok_or_else(|| GrammarError::BadVerdict {
                    segment: seg.name,
                    token: body.trim().to_string(),
                })?;
                verdicts.push((seg.name, v));
            }
            BodyKind::Text => {
                let trimmed = body.trim();
                if trimmed.is_empty() {
                    return Err(GrammarError::EmptyBody(seg.name));
                }
                texts.push((seg.name, trimmed.to_string()));
            }
        }
        spans.push(Span {
            segment: seg.name,
            start: seg.body.start,
            end: seg.body.end,
        });
    }
    Ok(Extracted {
        verdicts,
        texts,
        spans,
    })
}

fn verdict_of(e: &Extracted, name: SegmentName) -> Verdict {
    e.verdicts.iter().find(|(n, _)| *n == name).expect("segment present").1
}

fn text_of(e: &Extracted, name: SegmentName) -> String {
    e.texts
        .iter()
        .find(|(n, _)| *n == name)
        .expect("segment present")
        .1
        .clone()
}

// ── public parse/render entry points ────────────────────────────────────

/// Parse a staged four-segment transcript.
pub fn parse_har(text: &str) -> Result<HarResponse, GrammarError> {
    let raw = scan_tagged(text, STAGED_GRAMMAR)?;
    let e = extract_bodies(text, raw)?;
    Ok(HarResponse {
        impression: verdict_of(&e, SegmentName::Impression),
        reason: text_of(&e, SegmentName::Reason),
        reflection: text_of(&e, SegmentName::Reflection),
        answer: verdict_of(&e, SegmentName::Answer),
        spans: e.spans,
    })
}

/// Parse a response under the grammar selected by `mode`.
pub fn parse_mode(text: &str, mode: ReasoningMode) -> Result<ParsedResponse, GrammarError> {
    match mode {
        ReasoningMode::WithoutReasoning => {
            let answer = Verdict::parse_token(text).ok_or_else(|| GrammarError::BadVerdict {
                segment: SegmentName::Answer,
                token: text.trim().to_string(),
            })?;
            let trimmed = text.trim();
            let start = text.len() - text.trim_start().len();
            Ok(ParsedResponse {
                mode,
                segments: Segments::Bare { answer },
                spans: vec![Span {
                    segment: SegmentName::Answer,
                    start,
                    end: start + trimmed.len(),
                }],
            })
        }
        ReasoningMode::Heuristic => {
            let raw = scan_tagged(text, HEURISTIC_GRAMMAR)?;
            let e = extract_bodies(text, raw)?;
            Ok(ParsedResponse {
                mode,
                segments: Segments::AnswerReason {
                    answer: verdict_of(&e, SegmentName::Answer),
                    reason: text_of(&e, SegmentName::Reason),
                },
                spans: e.spans,
            })
        }
        ReasoningMode::Analytic => {
            let raw = scan_tagged(text, ANALYTIC_GRAMMAR)?;
            let e = extract_bodies(text, raw)?;
            Ok(ParsedResponse {
                mode,
                segments: Segments::ThinkAnswer {
                    think: text_of(&e, SegmentName::Think),
                    answer: verdict_of(&e, SegmentName::Answer),
                },
                spans: e.spans,
            })
        }
        ReasoningMode::GuessReasonAnswer => parse_gra(text),
        ReasoningMode::HeuristicToAnalytic => parse_har(text).map(ParsedResponse::from),
    }
}

/// Decide between the `<impression>` and `<guess>` spellings, then scan.
///
/// Exactly one spelling must be fully present; seeing both is reported as a
/// duplicate of the first segment, and a half-open pair as missing.
fn parse_gra(text: &str) -> Result<ParsedResponse, GrammarError> {
    let imp_complete =
        text.contains("<impression>") && text.contains("</impression>");
    let guess_complete = text.contains("<guess>") && text.contains("</guess>");
    let imp_any = text.contains("<impression>") || text.contains("</impression>");
    let guess_any = text.contains("<guess>") || text.contains("</guess>");
    let opener = match (imp_complete, guess_complete) {
        (true, true) => return Err(GrammarError::DuplicateTag(SegmentName::Impression)),
        (true, false) if !guess_any => GuessOpener::Impression,
        (false, true) if !imp_any => GuessOpener::Guess,
        _ => return Err(GrammarError::MissingTag(SegmentName::Impression)),
    };
    let grammar = [
        seg(
            SegmentName::Impression,
            BodyKind::Verdict,
            opener.open(),
            opener.close(),
        ),
        seg(SegmentName::Think, BodyKind::Text, "<think>", "</think>"),
        seg(SegmentName::Answer, BodyKind::Verdict, "<answer>", "</answer>"),
    ];
    let raw = scan_tagged(text, &grammar)?;
    let e = extract_bodies(text, raw)?;
    Ok(ParsedResponse {
        mode: ReasoningMode::GuessReasonAnswer,
        segments: Segments::GuessThinkAnswer {
            guess: verdict_of(&e, SegmentName::Impression),
            opener,
            think: text_of(&e, SegmentName::Think),
            answer: verdict_of(&e, SegmentName::Answer),
        },
        spans: e.spans,
    })
}

/// Format-correctness predicate: true iff `text` parses under `mode`.
/// Total — never panics, never errors.
pub fn is_well_formed(text: &str, mode: ReasoningMode) -> bool {
    parse_mode(text, mode).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANONICAL: &str = "<impression>fake</impression><reason>flat light</reason><reflection>confirmed</reflection><answer>fake</answer>";

    #[test]
    fn parses_canonical_staged_transcript() {
        let r = parse_har(CANONICAL).unwrap();
        assert_eq!(r.impression, Verdict::Fake);
        assert_eq!(r.reason, "flat light");
        assert_eq!(r.reflection, "confirmed");
        assert_eq!(r.answer, Verdict::Fake);
        assert_eq!(r.spans.len(), 4);
        assert_eq!(&CANONICAL[r.spans[1].range()], "flat light");
    }

    #[test]
    fn empty_input_reports_first_missing_tag() {
        assert_eq!(
            parse_har(""),
            Err(GrammarError::MissingTag(SegmentName::Impression))
        );
    }

    #[test]
    fn reordered_segments_rejected() {
        let text = "<reason>x</reason><impression>real</impression><reflection>y</reflection><answer>real</answer>";
        assert_eq!(
            parse_har(text),
            Err(GrammarError::OutOfOrder(SegmentName::Reason))
        );
    }

    #[test]
    fn whitespace_between_segments_is_fine() {
        let text = "  <impression> FAKE </impression>\n\n<reason>a</reason>\t<reflection>b</reflection>\n<answer>Real</answer>  ";
        let r = parse_har(text).unwrap();
        assert_eq!(r.impression, Verdict::Fake);
        assert_eq!(r.answer, Verdict::Real);
    }

    #[test]
    fn stray_content_rejected() {
        let text = format!("so, {CANONICAL}");
        assert_eq!(parse_har(&text), Err(GrammarError::TrailingContent));
        let text = format!("{CANONICAL} extra");
        assert_eq!(parse_har(&text), Err(GrammarError::TrailingContent));
    }

    #[test]
    fn duplicate_answer_block_rejected() {
        let text = format!("{CANONICAL}<answer>fake</answer>");
        assert_eq!(
            parse_har(&text),
            Err(GrammarError::DuplicateTag(SegmentName::Answer))
        );
        assert!(!is_well_formed(&text, ReasoningMode::HeuristicToAnalytic));
    }

    #[test]
    fn bad_verdict_token_rejected() {
        let text = "<impression>maybe</impression><reason>a</reason><reflection>b</reflection><answer>fake</answer>";
        assert_eq!(
            parse_har(text),
            Err(GrammarError::BadVerdict {
                segment: SegmentName::Impression,
                token: "maybe".into()
            })
        );
    }

    #[test]
    fn empty_reason_rejected() {
        let text = "<impression>fake</impression><reason>  </reason><reflection>b</reflection><answer>fake</answer>";
        assert_eq!(
            parse_har(text),
            Err(GrammarError::EmptyBody(SegmentName::Reason))
        );
    }

    #[test]
    fn tag_token_inside_body_rejected() {
        let text = "<impression>fake</impression><reason>see <answer> below</reason><reflection>b</reflection><answer>fake</answer>";
        assert_eq!(
            parse_har(text),
            Err(GrammarError::DuplicateTag(SegmentName::Answer))
        );
        // A foreign tag is ordinary text.
        let text = "<impression>fake</impression><reason>the <think> tag</reason><reflection>b</reflection><answer>fake</answer>";
        assert!(parse_har(text).is_ok());
    }

    #[test]
    fn render_is_canonical_and_round_trips() {
        let r = HarResponse::new(Verdict::Fake, "a", "b", Verdict::Fake).unwrap();
        let rendered = r.render();
        assert_eq!(
            rendered,
            "<impression>fake</impression>\n<reason>a</reason>\n<reflection>b</reflection>\n<answer>fake</answer>"
        );
        assert_eq!(parse_har(&rendered).unwrap(), r);
        // spans of the constructed value match the canonical layout
        let reparsed = parse_har(&rendered).unwrap();
        assert_eq!(reparsed.spans, r.spans);
    }

    #[test]
    fn mixed_case_verdicts_render_lowercase() {
        let text = "<impression>FAKE</impression><reason>a</reason><reflection>b</reflection><answer>Fake</answer>";
        let r = parse_har(text).unwrap();
        let rendered = r.render();
        assert!(rendered.contains("<impression>fake</impression>"));
        assert_eq!(parse_har(&rendered).unwrap(), r);
    }

    #[test]
    fn bare_mode_parses_verdict_only() {
        let p = parse_mode("real", ReasoningMode::WithoutReasoning).unwrap();
        assert_eq!(p.segments, Segments::Bare { answer: Verdict::Real });
        assert_eq!(p.render(), "real");
        assert!(parse_mode(" Fake \n", ReasoningMode::WithoutReasoning).is_ok());
        assert!(parse_mode("real fake", ReasoningMode::WithoutReasoning).is_err());
        assert!(parse_mode("", ReasoningMode::WithoutReasoning).is_err());
    }

    #[test]
    fn heuristic_mode_answer_then_reason() {
        let p = parse_mode(
            "<answer>fake</answer><reason>r</reason>",
            ReasoningMode::Heuristic,
        )
        .unwrap();
        assert_eq!(
            p.segments,
            Segments::AnswerReason {
                answer: Verdict::Fake,
                reason: "r".into()
            }
        );
        // reversed order is invalid for this grammar
        assert!(parse_mode(
            "<reason>r</reason><answer>fake</answer>",
            ReasoningMode::Heuristic
        )
        .is_err());
    }

    #[test]
    fn analytic_mode_requires_think_block() {
        assert_eq!(
            parse_mode("<answer>fake</answer>", ReasoningMode::Analytic),
            Err(GrammarError::MissingTag(SegmentName::Think))
        );
        let p = parse_mode(
            "<think>t</think><answer>fake</answer>",
            ReasoningMode::Analytic,
        )
        .unwrap();
        assert_eq!(p.answer(), Verdict::Fake);
    }

    #[test]
    fn gra_accepts_both_opening_spellings() {
        for (open, close, opener) in [
            ("<impression>", "</impression>", GuessOpener::Impression),
            ("<guess>", "</guess>", GuessOpener::Guess),
        ] {
            let text = format!("{open}real{close}<think>t</think><answer>fake</answer>");
            let p = parse_mode(&text, ReasoningMode::GuessReasonAnswer).unwrap();
            match p.segments {
                Segments::GuessThinkAnswer {
                    guess,
                    opener: got,
                    ref think,
                    answer,
                } => {
                    assert_eq!(guess, Verdict::Real);
                    assert_eq!(got, opener);
                    assert_eq!(think, "t");
                    assert_eq!(answer, Verdict::Fake);
                }
                _ => panic!("wrong segments"),
            }
            // preserves the original opener through render
            assert_eq!(parse_mode(&p.render(), ReasoningMode::GuessReasonAnswer).unwrap(), p);
        }
    }

    #[test]
    fn gra_rejects_mixed_or_double_openers() {
        let both = "<impression>real</impression><guess>real</guess><think>t</think><answer>fake</answer>";
        assert_eq!(
            parse_mode(both, ReasoningMode::GuessReasonAnswer),
            Err(GrammarError::DuplicateTag(SegmentName::Impression))
        );
        let mixed = "<impression>real</guess><think>t</think><answer>fake</answer>";
        assert_eq!(
            parse_mode(mixed, ReasoningMode::GuessReasonAnswer),
            Err(GrammarError::MissingTag(SegmentName::Impression))
        );
    }

    #[test]
    fn parsed_response_new_rejects_mode_mismatch() {
        let err = ParsedResponse::new(
            ReasoningMode::Analytic,
            Segments::Bare {
                answer: Verdict::Real,
            },
        )
        .unwrap_err();
        assert_eq!(err, GrammarError::UnsupportedMode(ReasoningMode::Analytic));
    }

    #[test]
    fn all_24_permutations_of_staged_segments_fail_except_canonical() {
        let blocks = [
            "<impression>fake</impression>",
            "<reason>a</reason>",
            "<reflection>b</reflection>",
            "<answer>fake</answer>",
        ];
        let mut ok = 0;
        let mut idx = [0usize, 1, 2, 3];
        // Heap's algorithm, iterative enumeration of all 24 orders.
        let mut perms = Vec::new();
        fn heap(k: usize, a: &mut [usize; 4], out: &mut Vec<[usize; 4]>) {
            if k == 1 {
                out.push(*a);
                return;
            }
            for i in 0..k {
                heap(k - 1, a, out);
                if k % 2 == 0 {
                    a.swap(i, k - 1);
                } else {
                    a.swap(0, k - 1);
                }
            }
        }
        heap(4, &mut idx, &mut perms);
        assert_eq!(perms.len(), 24);
        for p in &perms {
            let text: String = p.iter().map(|&i| blocks[i]).collect();
            if parse_har(&text).is_ok() {
                ok += 1;
                assert_eq!(*p, [0, 1, 2, 3]);
            }
        }
        assert_eq!(ok, 1);
    }
}
