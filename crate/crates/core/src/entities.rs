//! Gazetteer-and-rules entity recognition.
//!
//! The recognizer scans tokens left to right and takes the longest gazetteer
//! surface starting at each position, preferring an exact-case match over a
//! case-insensitive one at the same length. Matched spans consume their
//! tokens, so spans never overlap. A DATE rule layer then tags duration/era
//! words, month names, and four-digit years that no gazetteer match consumed.

use crate::corpus::Message;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Entity labels, mirroring the usual NER tag set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityLabel {
    Person,
    Norp,
    Gpe,
    Org,
    Loc,
    Date,
    Event,
}

impl EntityLabel {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "PERSON" => Ok(EntityLabel::Person),
            "NORP" => Ok(EntityLabel::Norp),
            "GPE" => Ok(EntityLabel::Gpe),
            "ORG" => Ok(EntityLabel::Org),
            "LOC" => Ok(EntityLabel::Loc),
            "DATE" => Ok(EntityLabel::Date),
            "EVENT" => Ok(EntityLabel::Event),
            other => Err(Error::Format(format!("unknown entity label `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EntityLabel::Person => "PERSON",
            EntityLabel::Norp => "NORP",
            EntityLabel::Gpe => "GPE",
            EntityLabel::Org => "ORG",
            EntityLabel::Loc => "LOC",
            EntityLabel::Date => "DATE",
            EntityLabel::Event => "EVENT",
        }
    }

    /// Title-case form used in rendered reports ("Person", "Gpe", ...).
    pub fn title(&self) -> &'static str {
        match self {
            EntityLabel::Person => "Person",
            EntityLabel::Norp => "Norp",
            EntityLabel::Gpe => "Gpe",
            EntityLabel::Org => "Org",
            EntityLabel::Loc => "Loc",
            EntityLabel::Date => "Date",
            EntityLabel::Event => "Event",
        }
    }
}

impl std::fmt::Display for EntityLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One recognized span. Offsets are character indices into the source text,
/// end exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub text: String,
    pub label: EntityLabel,
    pub char_start: usize,
    pub char_end: usize,
}

struct GazEntry {
    surface: String,
    tokens: Vec<String>,
    lower: Vec<String>,
    label: EntityLabel,
}

/// Known entity surfaces (1-5 tokens each) mapped to labels.
pub struct Gazetteer {
    entries: Vec<GazEntry>,
    /// First token (lowercased) to candidate entry indices.
    index: BTreeMap<String, Vec<usize>>,
}

impl Gazetteer {
    /// Parse the `surface<TAB>LABEL` format; `#` starts a comment line.
    pub fn parse(contents: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for (lineno, line) in contents.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, label) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!(
                    "gazetteer line {}: expected `surface<TAB>LABEL`",
                    lineno + 1
                ))
            })?;
            let surface = surface.trim().to_string();
            let label = EntityLabel::parse(label.trim())
                .map_err(|e| Error::Format(format!("gazetteer line {}: {e}", lineno + 1)))?;
            let tokens: Vec<String> = alnum_tokens(&surface)
                .into_iter()
                .map(|t| t.text)
                .collect();
            if tokens.is_empty() || tokens.len() > 5 {
                return Err(Error::Format(format!(
                    "gazetteer line {}: surface must span 1-5 tokens",
                    lineno + 1
                )));
            }
            if !seen.insert(surface.clone()) {
                return Err(Error::Format(format!(
                    "gazetteer line {}: duplicate surface `{surface}`",
                    lineno + 1
                )));
            }
            let lower = tokens.iter().map(|t| t.to_lowercase()).collect();
            entries.push(GazEntry {
                surface,
                tokens,
                lower,
                label,
            });
        }
        let mut index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            index.entry(e.lower[0].clone()).or_default().push(i);
        }
        Ok(Gazetteer { entries, index })
    }

    /// The starter gazetteer bundled with this crate.
    pub fn bundled() -> Self {
        Gazetteer::parse(include_str!("../data/gazetteer.tsv"))
            .expect("bundled gazetteer is well-formed")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// DATE rule layer: a word list plus a built-in four-digit-year rule.
pub struct DateRules {
    terms: BTreeSet<String>,
}

impl DateRules {
    pub fn parse(contents: &str) -> Result<Self> {
        let mut terms = BTreeSet::new();
        for line in contents.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            terms.insert(line.to_lowercase());
        }
        Ok(DateRules { terms })
    }

    pub fn bundled() -> Self {
        DateRules::parse(include_str!("../data/date_terms.txt"))
            .expect("bundled date terms are well-formed")
    }

    fn matches(&self, lower_token: &str) -> bool {
        if self.terms.contains(lower_token) {
            return true;
        }
        if lower_token.len() == 4 && lower_token.bytes().all(|b| b.is_ascii_digit()) {
            let year: u32 = lower_token.parse().unwrap_or(0);
            return (1900..=2099).contains(&year);
        }
        false
    }
}

/// Gazetteer plus DATE rules behind one recognize call.
pub struct EntityRecognizer {
    pub gazetteer: Gazetteer,
    pub date_rules: DateRules,
}

impl EntityRecognizer {
    pub fn new(gazetteer: Gazetteer, date_rules: DateRules) -> Self {
        EntityRecognizer {
            gazetteer,
            date_rules,
        }
    }

    pub fn bundled() -> Self {
        EntityRecognizer::new(Gazetteer::bundled(), DateRules::bundled())
    }

    /// Recognize entity spans in one text, ordered by start position.
    pub fn recognize(&self, text: &str) -> Vec<EntitySpan> {
        let chars: Vec<char> = text.chars().collect();
        let tokens = alnum_tokens(text);
        let lowers: Vec<String> = tokens.iter().map(|t| t.text.to_lowercase()).collect();
        let mut spans = Vec::new();
        let mut pos = 0;
        while pos < tokens.len() {
            if let Some((len, entry_ix, _)) = self.best_match(&tokens, &lowers, &chars, pos) {
                let start = tokens[pos].start;
                let end = tokens[pos + len - 1].end;
                spans.push(EntitySpan {
                    text: chars[start..end].iter().collect(),
                    label: self.gazetteer.entries[entry_ix].label,
                    char_start: start,
                    char_end: end,
                });
                pos += len;
            } else if self.date_rules.matches(&lowers[pos]) {
                let t = &tokens[pos];
                spans.push(EntitySpan {
                    text: t.text.clone(),
                    label: EntityLabel::Date,
                    char_start: t.start,
                    char_end: t.end,
                });
                pos += 1;
            } else {
                pos += 1;
            }
        }
        spans
    }

    /// Longest gazetteer entry matching at `pos`; at equal length an
    /// exact-case match beats a case-insensitive one.
    fn best_match(
        &self,
        tokens: &[Token],
        lowers: &[String],
        chars: &[char],
        pos: usize,
    ) -> Option<(usize, usize, bool)> {
        let candidates = self.gazetteer.index.get(&lowers[pos])?;
        let mut best: Option<(usize, usize, bool)> = None;
        for &ix in candidates {
            let entry = &self.gazetteer.entries[ix];
            let n = entry.lower.len();
            if pos + n > tokens.len() {
                continue;
            }
            let ci = (0..n).all(|k| entry.lower[k] == lowers[pos + k]);
            if !ci {
                continue;
            }
            let cs = (0..n).all(|k| entry.tokens[k] == tokens[pos + k].text);
            let slice: String = chars[tokens[pos].start..tokens[pos + n - 1].end]
                .iter()
                .collect();
            let slice_ok = if cs {
                slice == entry.surface
            } else {
                slice.eq_ignore_ascii_case(&entry.surface)
            };
            if !slice_ok {
                continue;
            }
            let better = match best {
                None => true,
                Some((blen, _, bcs)) => n > blen || (n == blen && cs && !bcs),
            };
            if better {
                best = Some((n, ix, cs));
            }
        }
        best
    }
}

struct Token {
    text: String,
    start: usize,
    end: usize,
}

/// Maximal alphanumeric runs with character offsets.
fn alnum_tokens(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    for (i, ch) in text.chars().enumerate() {
        if ch.is_alphanumeric() {
            if current.is_empty() {
                start = i;
            }
            current.push(ch);
        } else if !current.is_empty() {
            tokens.push(Token {
                text: std::mem::take(&mut current),
                start,
                end: i,
            });
        }
    }
    if !current.is_empty() {
        let end = start + current.chars().count();
        tokens.push(Token {
            text: current,
            start,
            end,
        });
    }
    tokens
}

/// Entities of one label, in span order with duplicates preserved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityGroup {
    pub label: EntityLabel,
    pub texts: Vec<String>,
}

/// Group spans by label, labels ordered by their first occurrence.
pub fn group_by_label(spans: &[EntitySpan]) -> Vec<EntityGroup> {
    let mut groups: Vec<EntityGroup> = Vec::new();
    for span in spans {
        match groups.iter_mut().find(|g| g.label == span.label) {
            Some(g) => g.texts.push(span.text.clone()),
            None => groups.push(EntityGroup {
                label: span.label,
                texts: vec![span.text.clone()],
            }),
        }
    }
    groups
}

/// Grouped entities for one message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageEntities {
    pub id: String,
    pub groups: Vec<EntityGroup>,
}

/// Per-message grouped summary, aligned by position.
pub fn entity_report(messages: &[Message], spans: &[Vec<EntitySpan>]) -> Vec<MessageEntities> {
    messages
        .iter()
        .zip(spans)
        .map(|(m, s)| MessageEntities {
            id: m.id.clone(),
            groups: group_by_label(s),
        })
        .collect()
}

/// Figure-style rendering: one block per message, one line per label.
pub fn render_entity_report(report: &[MessageEntities]) -> String {
    let mut out = String::new();
    for (i, m) in report.iter().enumerate() {
        out.push_str(&format!("Message {} (id {}):\n", i + 1, m.id));
        if m.groups.is_empty() {
            out.push_str("  (no entities)\n");
        }
        for g in &m.groups {
            out.push_str(&format!("  {}: {}\n", g.label.title(), g.texts.join(", ")));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MESSAGE_1: &str = "I Killmilk, represented by the organizer of the hacker group \
        Killnet, officially take full responsibility for causing particularly serious damage \
        to the network infrastructure of the Bulgarian corrupt government. And I declare this \
        officially! Chief Prosecutor of the Republic of Bulgaria Ivan Geshev Fuck you!";

    const MESSAGE_2: &str = "South Africa was a victim of apartheid for decades. We don't want \
        any nations experience it again. This time Israel is committing genocide against \
        Palestinians. We are doing our best to stop Israel and Free Palestine. We tried to sue \
        against Israel in International court, and now be keep on our try in cyber \
        court...Long live the South Africa, long live the Palestine";

    #[test]
    fn message_two_matches_published_entities_exactly() {
        let rec = EntityRecognizer::bundled();
        let spans = rec.recognize(MESSAGE_2);
        let gpe: Vec<&str> = spans
            .iter()
            .filter(|s| s.label == EntityLabel::Gpe)
            .map(|s| s.text.as_str())
            .collect();
        assert_eq!(
            gpe,
            vec!["South Africa", "Israel", "Israel", "Israel", "South Africa"]
        );
        let norp: Vec<&str> = spans
            .iter()
            .filter(|s| s.label == EntityLabel::Norp)
            .map(|s| s.text.as_str())
            .collect();
        assert_eq!(norp, vec!["Palestinians"]);
        let date: Vec<&str> = spans
            .iter()
            .filter(|s| s.label == EntityLabel::Date)
            .map(|s| s.text.as_str())
            .collect();
        assert_eq!(date, vec!["decades"]);
        assert_eq!(spans.len(), 7, "unexpected extra spans: {spans:?}");
    }

    #[test]
    fn message_one_contains_expected_entities() {
        let rec = EntityRecognizer::bundled();
        let spans = rec.recognize(MESSAGE_1);
        let has = |label: EntityLabel, text: &str| {
            spans.iter().any(|s| s.label == label && s.text == text)
        };
        assert!(has(EntityLabel::Person, "Killmilk"));
        assert!(has(EntityLabel::Norp, "Bulgarian"));
        assert!(spans
            .iter()
            .any(|s| s.label == EntityLabel::Gpe && s.text.contains("Bulgaria")));
        // Deliberate deviations from the upstream tool's false positives.
        assert!(has(EntityLabel::Org, "Killnet"));
        assert!(has(EntityLabel::Gpe, "the Republic of Bulgaria"));
    }

    #[test]
    fn empty_text_yields_no_spans() {
        let rec = EntityRecognizer::bundled();
        assert!(rec.recognize("").is_empty());
    }

    #[test]
    fn longest_match_wins() {
        let gaz = Gazetteer::parse("New York\tGPE\nNew York Times\tORG\n").unwrap();
        let rec = EntityRecognizer::new(gaz, DateRules::bundled());
        let spans = rec.recognize("New York Times reported");
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].label, EntityLabel::Org);
        assert_eq!(spans[0].text, "New York Times");
        let spans = rec.recognize("New York is large");
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].label, EntityLabel::Gpe);
    }

    #[test]
    fn exact_case_beats_case_insensitive_at_equal_length() {
        let gaz = Gazetteer::parse("Bill Gates\tPERSON\nbill gates\tORG\n").unwrap();
        let rec = EntityRecognizer::new(gaz, DateRules::bundled());
        let spans = rec.recognize("Bill Gates spoke");
        assert_eq!(spans[0].label, EntityLabel::Person);
        let spans = rec.recognize("bill gates spoke");
        assert_eq!(spans[0].label, EntityLabel::Org);
    }

    #[test]
    fn case_insensitive_fallback_matches() {
        let rec = EntityRecognizer::bundled();
        let spans = rec.recognize("attacks on BULGARIA continue");
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].label, EntityLabel::Gpe);
        assert_eq!(spans[0].text, "BULGARIA");
    }

    #[test]
    fn date_rules_tag_years_and_durations() {
        let rec = EntityRecognizer::bundled();
        let spans = rec.recognize("expect attacks in March 2024, within weeks");
        let dates: Vec<&str> = spans
            .iter()
            .filter(|s| s.label == EntityLabel::Date)
            .map(|s| s.text.as_str())
            .collect();
        assert_eq!(dates, vec!["March", "2024", "weeks"]);
        let none = rec.recognize("error code 5050 appeared again");
        assert!(none.iter().all(|s| s.label != EntityLabel::Date));
    }

    #[test]
    fn spans_are_sorted_and_non_overlapping_and_slices_match() {
        let rec = EntityRecognizer::bundled();
        for text in [MESSAGE_1, MESSAGE_2, "Israel Israel ISRAEL 2022 decades"] {
            let spans = rec.recognize(text);
            let again = rec.recognize(text);
            assert_eq!(spans, again);
            let chars: Vec<char> = text.chars().collect();
            let mut last_end = 0;
            for s in &spans {
                assert!(s.char_start >= last_end, "overlap at {s:?}");
                assert!(s.char_start < s.char_end && s.char_end <= chars.len());
                let slice: String = chars[s.char_start..s.char_end].iter().collect();
                assert_eq!(slice, s.text);
                last_end = s.char_end;
            }
        }
    }

    #[test]
    fn grouping_preserves_order_and_multiplicity() {
        let rec = EntityRecognizer::bundled();
        let spans = rec.recognize(MESSAGE_2);
        let groups = group_by_label(&spans);
        assert_eq!(groups[0].label, EntityLabel::Gpe);
        assert_eq!(groups[0].texts.len(), 5);
        assert_eq!(groups[1].label, EntityLabel::Date);
        assert_eq!(groups[2].label, EntityLabel::Norp);
        let total: usize = groups.iter().map(|g| g.texts.len()).sum();
        assert_eq!(total, spans.len());
        assert!(group_by_label(&[]).is_empty());
    }

    #[test]
    fn report_renders_figure_style_lines() {
        let rec = EntityRecognizer::bundled();
        let message = Message {
            id: "2".into(),
            content: MESSAGE_2.into(),
            date: "2023-11-01T00:00:00".into(),
            group: "hacktivist".into(),
            label: None,
        };
        let spans = vec![rec.recognize(MESSAGE_2)];
        let report = entity_report(std::slice::from_ref(&message), &spans);
        let rendered = render_entity_report(&report);
        assert!(
            rendered.contains("Gpe: South Africa, Israel, Israel, Israel, South Africa"),
            "{rendered}"
        );
        assert!(rendered.contains("Norp: Palestinians"));
        assert!(rendered.contains("Date: decades"));
    }
}
