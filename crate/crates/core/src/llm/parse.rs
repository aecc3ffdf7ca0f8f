use super::ParsedOutcome;
use crate::scale::{score_response, Item, ItemFormat};
use regex::Regex;
use std::sync::OnceLock;

fn integer_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"-?\d+").expect("valid regex"))
}

/// Extracts an answer from free completion text.
///
/// Multiple choice: the first standalone option id (case-insensitive,
/// word-boundary match). Likert: the first integer inside `[min, max]`.
pub fn parse_response(raw_completion: &str, item: &Item) -> ParsedOutcome {
    let chosen = match &item.format {
        ItemFormat::MultipleChoice { options, .. } => {
            let mut ids: Vec<&str> = options.iter().map(|o| o.id.as_str()).collect();
            ids.sort_by_key(|s| std::cmp::Reverse(s.len()));
            let alternation = ids.iter().map(|s| regex::escape(s)).collect::<Vec<_>>().join("|");
            let re = Regex::new(&format!(r"(?i)\b(?:{alternation})\b")).expect("escaped ids");
            re.find(raw_completion).map(|m| m.as_str().to_string())
        }
        ItemFormat::Likert { min, max } => integer_pattern()
            .find_iter(raw_completion)
            .filter_map(|m| m.as_str().parse::<i64>().ok())
            .find(|v| (*min..=*max).contains(v))
            .map(|v| v.to_string()),
    };
    match chosen.and_then(|c| score_response(item, &c).ok()) {
        Some(s) => ParsedOutcome::Scored(s),
        None => ParsedOutcome::Unparseable,
    }
}
