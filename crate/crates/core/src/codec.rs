//! Message encoding and decoding.
//!
//! The schema grammar is the public contract
//!
//! ```text
//! @say {name: Ck}
//! ```
//!
//! with exactly one space after `@say` and an optional single space after
//! `name:`. Text around the tag is tolerated; the tag itself is
//! case-sensitive and the leftmost match decides. Messages that fail the
//! grammar go through [`enforce_schema`]: one reminder retry, then a
//! free-text scan, then the configured fallback.

use std::sync::LazyLock;

use rand::Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::config::FallbackMode;
use crate::lexicon::{DecodedName, Lexicon, NameId};
use crate::rng::SimRng;

/// The grammar line shown to agents under the schema condition.
pub const SCHEMA_GRAMMAR: &str = "@say {name: Ck}";

static SCHEMA_TAG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"@say \{name: ?C(0|[1-9][0-9]*)\}").expect("valid regex"));

/// Where a message's token count came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenSource {
    /// Whitespace-delimited count of the text (mock agents).
    Whitespace,
    /// `usage.completion_tokens` reported by the endpoint.
    Endpoint,
    /// Endpoint omitted usage; whitespace count used instead.
    UsageEstimated,
}

/// One generated message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawMessage {
    pub text: String,
    pub token_count: u64,
    pub accounting: TokenSource,
    /// Prompt tokens reported by an endpoint, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_tokens: Option<u64>,
}

impl RawMessage {
    /// A locally produced message counted by whitespace tokens.
    pub fn local(text: impl Into<String>) -> Self {
        let text = text.into();
        let token_count = count_tokens(&text);
        RawMessage {
            text,
            token_count,
            accounting: TokenSource::Whitespace,
            prompt_tokens: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeStage {
    SchemaFirstTry,
    SchemaRetry,
    FreeText,
    RandomFallback,
    None,
}

/// What the decoder made of one agent's turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeOutcome {
    pub name: DecodedName,
    pub compliant: bool,
    pub stage: DecodeStage,
    /// Tokens spent on the reminder retry, if one happened.
    pub extra_tokens: u64,
}

impl DecodeOutcome {
    fn new(name: DecodedName, stage: DecodeStage, extra_tokens: u64) -> Self {
        DecodeOutcome {
            name,
            compliant: matches!(
                stage,
                DecodeStage::SchemaFirstTry | DecodeStage::SchemaRetry
            ),
            stage,
            extra_tokens,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(rename_all = "snake_case")]
pub enum SchemaViolation {
    #[error("no @say tag")]
    NoTag,
    #[error("@say tag with a malformed payload")]
    BadPayload,
    #[error("name index outside the lexicon")]
    IndexOutOfRange,
}

/// Renders the canonical schema tag for `name`.
pub fn format_schema(name: NameId) -> RawMessage {
    RawMessage::local(format!("@say {{name: {name}}}"))
}

/// Extracts the name from the leftmost schema tag in `text`.
pub fn parse_schema(text: &str, lexicon: &Lexicon) -> Result<NameId, SchemaViolation> {
    let Some(caps) = SCHEMA_TAG.captures(text) else {
        return Err(if text.contains("@say") {
            SchemaViolation::BadPayload
        } else {
            SchemaViolation::NoTag
        });
    };
    caps[1]
        .parse::<u32>()
        .ok()
        .and_then(|k| lexicon.name(k))
        .ok_or(SchemaViolation::IndexOutOfRange)
}

/// Returns the first standalone lexicon label in reading order.
///
/// A label is standalone when the characters on either side are not
/// alphanumeric, so `C1` never matches inside `C12` or `xC1`.
pub fn decode_free_text(text: &str, lexicon: &Lexicon) -> DecodedName {
    let mut prev: Option<char> = None;
    for (start, c) in text.char_indices() {
        let boundary_before = prev.is_none_or(|p| !p.is_alphanumeric());
        prev = Some(c);
        if c != 'C' || !boundary_before {
            continue;
        }
        let rest = &text[start + 1..];
        let digits_len = rest.bytes().take_while(u8::is_ascii_digit).count();
        if digits_len == 0 {
            continue;
        }
        let digits = &rest[..digits_len];
        let boundary_after = rest[digits_len..]
            .chars()
            .next()
            .is_none_or(|n| !n.is_alphanumeric());
        if !boundary_after || digits.starts_with('0') {
            continue;
        }
        if let Some(name) = digits.parse::<u32>().ok().and_then(|k| lexicon.name(k)) {
            return Some(name);
        }
    }
    None
}

/// Decoding used outside the schema condition: a single free-text scan.
pub fn decode_direct(msg: &RawMessage, lexicon: &Lexicon) -> DecodeOutcome {
    match decode_free_text(&msg.text, lexicon) {
        Some(name) => DecodeOutcome::new(Some(name), DecodeStage::FreeText, 0),
        None => DecodeOutcome::new(None, DecodeStage::None, 0),
    }
}

/// Result of [`enforce_schema`]: the outcome plus the retry message, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Enforced {
    pub outcome: DecodeOutcome,
    pub retry: Option<RawMessage>,
}

/// Runs the compliance state machine on one agent's turn.
///
/// `retry_provider` is called at most once, and only when `first` fails the
/// grammar. The fallback draw uses `fallback_rng`.
pub fn enforce_schema<E>(
    first: &RawMessage,
    retry_provider: impl FnOnce() -> Result<RawMessage, E>,
    lexicon: &Lexicon,
    fallback_mode: FallbackMode,
    fallback_rng: &mut SimRng,
) -> Result<Enforced, E> {
    if let Ok(name) = parse_schema(&first.text, lexicon) {
        return Ok(Enforced {
            outcome: DecodeOutcome::new(Some(name), DecodeStage::SchemaFirstTry, 0),
            retry: None,
        });
    }
    let retry = retry_provider()?;
    let extra = retry.token_count;
    let outcome = if let Ok(name) = parse_schema(&retry.text, lexicon) {
        DecodeOutcome::new(Some(name), DecodeStage::SchemaRetry, extra)
    } else if let Some(name) = decode_free_text(&retry.text, lexicon) {
        DecodeOutcome::new(Some(name), DecodeStage::FreeText, extra)
    } else {
        match fallback_mode {
            FallbackMode::RandomName => {
                let k = fallback_rng.random_range(1..=lexicon.len() as u32);
                DecodeOutcome::new(lexicon.name(k), DecodeStage::RandomFallback, extra)
            }
            FallbackMode::None => DecodeOutcome::new(None, DecodeStage::None, extra),
        }
    };
    Ok(Enforced {
        outcome,
        retry: Some(retry),
    })
}

/// Whitespace-delimited token count.
pub fn count_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

#[cfg(test)]
mod tests {
    use std::cell::Cell;
    use std::convert::Infallible;

    use super::*;
    use crate::rng::{derive_rng, FALLBACK};

    fn lex(m: usize) -> Lexicon {
        Lexicon::new(m).unwrap()
    }

    fn id(k: u32) -> NameId {
        NameId::new(k).unwrap()
    }

    #[test]
    fn format_examples() {
        assert_eq!(format_schema(id(3)).text, "@say {name: C3}");
        assert_eq!(format_schema(id(12)).text, "@say {name: C12}");
        assert_eq!(format_schema(id(1)).text, "@say {name: C1}");
        assert_eq!(format_schema(id(1)).token_count, 3);
    }

    #[test]
    fn parse_examples() {
        let l = lex(12);
        assert_eq!(parse_schema("@say {name: C7}", &l), Ok(id(7)));
        assert_eq!(
            parse_schema("Sure! @say {name: C2} is my pick", &l),
            Ok(id(2))
        );
        assert_eq!(
            parse_schema("@say {name: C13}", &l),
            Err(SchemaViolation::IndexOutOfRange)
        );
        assert_eq!(
            parse_schema("@say {name: c7}", &l),
            Err(SchemaViolation::BadPayload)
        );
    }

    #[test]
    fn parse_whitespace_variants() {
        let l = lex(12);
        assert_eq!(parse_schema("@say {name:C4}", &l), Ok(id(4)));
        assert_eq!(
            parse_schema("@say {name:  C4}", &l),
            Err(SchemaViolation::BadPayload)
        );
        assert_eq!(
            parse_schema("@say  {name: C4}", &l),
            Err(SchemaViolation::BadPayload)
        );
        assert_eq!(
            parse_schema("@SAY {name: C4}", &l),
            Err(SchemaViolation::NoTag)
        );
        assert_eq!(parse_schema("C4", &l), Err(SchemaViolation::NoTag));
    }

    #[test]
    fn parse_leftmost_wins() {
        let l = lex(12);
        assert_eq!(
            parse_schema("@say {name: C3} then @say {name: C9}", &l),
            Ok(id(3))
        );
        assert_eq!(
            parse_schema("@say {name: C30} then @say {name: C9}", &l),
            Err(SchemaViolation::IndexOutOfRange)
        );
        assert_eq!(
            parse_schema("@say {name: C0}", &l),
            Err(SchemaViolation::IndexOutOfRange)
        );
        assert_eq!(
            parse_schema("@say {name: C99999999999999999999}", &l),
            Err(SchemaViolation::IndexOutOfRange)
        );
        assert_eq!(
            parse_schema("@say {name: C07}", &l),
            Err(SchemaViolation::BadPayload)
        );
    }

    /// Independent scanner: tries every label at every byte position.
    fn brute_force_scan(text: &str, lexicon: &Lexicon) -> DecodedName {
        let bytes_alnum_before = |pos: usize| {
            text[..pos]
                .chars()
                .next_back()
                .is_some_and(char::is_alphanumeric)
        };
        let alnum_after = |end: usize| {
            text[end..]
                .chars()
                .next()
                .is_some_and(char::is_alphanumeric)
        };
        let mut best: Option<(usize, NameId)> = None;
        for name in lexicon.ids() {
            let label = name.label();
            for (pos, _) in text.match_indices(&label) {
                if bytes_alnum_before(pos) || alnum_after(pos + label.len()) {
                    continue;
                }
                if best.is_none_or(|(p, _)| pos < p) {
                    best = Some((pos, name));
                }
            }
        }
        best.map(|(_, n)| n)
    }

    #[test]
    fn free_text_examples() {
        let l = lex(12);
        assert_eq!(
            decode_free_text("I think we should call it C4 today", &l),
            Some(id(4))
        );
        assert_eq!(decode_free_text("C12 beats C3", &l), Some(id(12)));
        assert_eq!(brute_force_scan("C12 beats C3", &l), Some(id(12)));
        assert_eq!(decode_free_text("completely unrelated text", &l), None);
        assert_eq!(decode_free_text("C128 is not a name", &l), None);
        assert_eq!(brute_force_scan("C128 is not a name", &l), None);
    }

    #[test]
    fn free_text_boundaries() {
        let l = lex(12);
        assert_eq!(decode_free_text("xC1 C2", &l), Some(id(2)));
        assert_eq!(decode_free_text("(C5).", &l), Some(id(5)));
        assert_eq!(decode_free_text("C1C2 C07 c3", &l), None);
        assert_eq!(decode_free_text("@say {name: C9}", &l), Some(id(9)));
        assert_eq!(decode_free_text("éC3 C4", &l), Some(id(4)));
        assert_eq!(decode_free_text("_C3", &l), Some(id(3)));
    }

    #[test]
    fn free_text_matches_brute_force_on_samples() {
        let l = lex(12);
        let samples = [
            "C1",
            "C13 C2",
            "aC1 bC2 C3",
            "C10C11 C11",
            "C0 C00 C012",
            "—C6—",
            "C ",
            "",
            "C1 C1",
            "9C9 C9",
            "C2x C7",
            "x C12",
            "Ç1 C1",
        ];
        for s in samples {
            assert_eq!(decode_free_text(s, &l), brute_force_scan(s, &l), "{s:?}");
        }
    }

    #[test]
    fn count_tokens_examples() {
        assert_eq!(count_tokens("@say {name: C3}"), 3);
        assert_eq!(count_tokens(""), 0);
        assert_eq!(count_tokens("a  b\tc"), 3);
    }

    fn run_enforce(first: &str, retry: &str, mode: FallbackMode) -> (DecodeOutcome, usize) {
        let calls = Cell::new(0);
        let mut rng = derive_rng(1, FALLBACK);
        let out = enforce_schema::<Infallible>(
            &RawMessage::local(first),
            || {
                calls.set(calls.get() + 1);
                Ok(RawMessage::local(retry))
            },
            &lex(12),
            mode,
            &mut rng,
        )
        .unwrap();
        (out.outcome, calls.get())
    }

    #[test]
    fn enforce_first_try() {
        let (o, calls) = run_enforce("@say {name: C5}", "unused", FallbackMode::RandomName);
        assert_eq!(
            o,
            DecodeOutcome {
                name: Some(id(5)),
                compliant: true,
                stage: DecodeStage::SchemaFirstTry,
                extra_tokens: 0
            }
        );
        assert_eq!(calls, 0);
    }

    #[test]
    fn enforce_retry() {
        let (o, calls) = run_enforce("hello", "@say {name: C9}", FallbackMode::RandomName);
        assert_eq!(
            o,
            DecodeOutcome {
                name: Some(id(9)),
                compliant: true,
                stage: DecodeStage::SchemaRetry,
                extra_tokens: 3
            }
        );
        assert_eq!(calls, 1);
    }

    #[test]
    fn enforce_free_text() {
        let (o, calls) = run_enforce("hello", "maybe C2?", FallbackMode::RandomName);
        assert_eq!(
            o,
            DecodeOutcome {
                name: Some(id(2)),
                compliant: false,
                stage: DecodeStage::FreeText,
                extra_tokens: 2
            }
        );
        assert_eq!(calls, 1);
    }

    #[test]
    fn enforce_random_fallback() {
        let (o, calls) = run_enforce("x", "y", FallbackMode::RandomName);
        assert_eq!(o.stage, DecodeStage::RandomFallback);
        assert!(!o.compliant);
        assert!(o.name.is_some_and(|n| (1..=12).contains(&n.index())));
        assert_eq!(o.extra_tokens, 1);
        assert_eq!(calls, 1);
    }

    #[test]
    fn enforce_none() {
        let (o, calls) = run_enforce("x", "y", FallbackMode::None);
        assert_eq!(
            o,
            DecodeOutcome {
                name: None,
                compliant: false,
                stage: DecodeStage::None,
                extra_tokens: 1
            }
        );
        assert_eq!(calls, 1);
    }

    #[test]
    fn enforce_propagates_retry_failure() {
        let mut rng = derive_rng(1, FALLBACK);
        let res = enforce_schema(
            &RawMessage::local("no"),
            || Err("endpoint down"),
            &lex(12),
            FallbackMode::RandomName,
            &mut rng,
        );
        assert_eq!(res.unwrap_err(), "endpoint down");
    }

    #[test]
    fn direct_decoding_has_no_retry_stage() {
        let l = lex(12);
        let o = decode_direct(&RawMessage::local("we like C3"), &l);
        assert_eq!(o.stage, DecodeStage::FreeText);
        assert!(!o.compliant);
        let o = decode_direct(&RawMessage::local("nothing"), &l);
        assert_eq!((o.name, o.stage), (None, DecodeStage::None));
    }
}
