use serde::{Deserialize, Serialize};

use super::ExperimentError;

pub const SEPARATOR: &str = "[EXP]";

const QUOTES: &[char] = &['"', '\'', '“', '”', '‘', '’', '`'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub decision: Decision,
    pub rationale: String,
    pub raw: String,
}

/// Renders a response in the requested "answer [EXP] rationale" shape.
pub fn compose_response(decision: Decision, rationale: &str) -> String {
    let answer = match decision {
        Decision::Accept => "Yes",
        Decision::Reject => "No",
    };
    format!("{answer} {SEPARATOR} {rationale}")
}

fn find_ci(haystack: &str, needle: &str) -> Option<usize> {
    let n = needle.len();
    haystack
        .char_indices()
        .map(|(i, _)| i)
        .find(|&i| haystack.get(i..i + n).is_some_and(|s| s.eq_ignore_ascii_case(needle)))
}

/// Reads a leading yes/no answer and the rationale after the `[EXP]` separator.
///
/// Surrounding whitespace and quotes are ignored and the answer is matched
/// case-insensitively. Without a separator the rationale is whatever follows
/// the answer.
pub fn parse_decision(raw: &str) -> Result<ParsedResponse, ExperimentError> {
    let unparseable = || ExperimentError::UnparseableResponse { raw: raw.to_string() };
    let trimmed = raw.trim();
    let body = trimmed.trim_start_matches(|c: char| QUOTES.contains(&c) || c.is_whitespace());
    let quoted = body.len() != trimmed.len();

    let (decision, token_len) = if body.get(..3).is_some_and(|s| s.eq_ignore_ascii_case("yes")) {
        (Decision::Accept, 3)
    } else if body.get(..2).is_some_and(|s| s.eq_ignore_ascii_case("no")) {
        (Decision::Reject, 2)
    } else {
        return Err(unparseable());
    };
    let rest = &body[token_len..];
    if rest.chars().next().is_some_and(char::is_alphanumeric) {
        return Err(unparseable());
    }

    let rationale = match find_ci(rest, SEPARATOR) {
        Some(i) => &rest[i + SEPARATOR.len()..],
        None => rest.trim_start_matches(|c: char| c.is_whitespace() || c.is_ascii_punctuation()),
    };
    let mut rationale = rationale.trim();
    if quoted {
        rationale = rationale.trim_end_matches(QUOTES).trim_end();
    }
    Ok(ParsedResponse {
        decision,
        rationale: rationale.to_string(),
        raw: raw.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{HADZA_RESPONSES, TSIMANE_RESPONSES};
    use proptest::prelude::*;

    #[test]
    fn published_responses() {
        let p = parse_decision(TSIMANE_RESPONSES[0]).unwrap();
        assert_eq!(p.decision, Decision::Reject);
        assert!(p.rationale.starts_with("1. As a member"));
        let r = parse_decision(TSIMANE_RESPONSES[1]).unwrap();
        assert_eq!(r.decision, Decision::Accept);
        assert!(r.rationale.starts_with("1. The offer of $6"));
        for h in HADZA_RESPONSES {
            assert_eq!(parse_decision(h).unwrap().decision, Decision::Reject);
        }
    }

    #[test]
    fn minimal_and_edge_forms() {
        let p = parse_decision("Yes [EXP] ok").unwrap();
        assert_eq!((p.decision, p.rationale.as_str()), (Decision::Accept, "ok"));
        let p = parse_decision("\n\n  \"no.\" because").unwrap();
        assert_eq!((p.decision, p.rationale.as_str()), (Decision::Reject, "because"));
        let p = parse_decision("YES, I accept").unwrap();
        assert_eq!((p.decision, p.rationale.as_str()), (Decision::Accept, "I accept"));
        let p = parse_decision("'No [exp] too low'").unwrap();
        assert_eq!(p.rationale, "too low");
        assert_eq!(parse_decision("No").unwrap().rationale, "");
        let p = parse_decision("Yes [EXP] first [EXP] second").unwrap();
        assert_eq!(p.rationale, "first [EXP] second");
    }

    #[test]
    fn unparseable_forms() {
        for raw in ["Maybe, it depends", "é", "né", "", "   ", "Nope [EXP] x", "Yesterday I said no", "[EXP] yes", "I accept: Yes"] {
            assert!(matches!(parse_decision(raw), Err(ExperimentError::UnparseableResponse { .. })), "{raw:?}");
        }
    }

    fn rationale_strategy() -> impl Strategy<Value = String> {
        "[A-Za-z0-9 .,;:!?$%'\"()\\n-]{0,80}"
            .prop_map(|s| s.trim().to_string())
            .prop_filter("no separator", |s| find_ci(s, SEPARATOR).is_none())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn compose_parse_round_trip(accept in any::<bool>(), rationale in rationale_strategy()) {
            let decision = if accept { Decision::Accept } else { Decision::Reject };
            let parsed = parse_decision(&compose_response(decision, &rationale)).unwrap();
            prop_assert_eq!(parsed.decision, decision);
            prop_assert_eq!(parsed.rationale, rationale);
        }
    }
}
