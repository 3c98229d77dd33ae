//! Lexicon-and-heuristics sentiment scorer.
//!
//! Per-token valences from the lexicon are modified, in order, by booster and
//! dampener words in the three preceding positions (+-0.293, damped with
//! distance), negation in the same window (valence scaled by -0.74), ALL-CAPS
//! emphasis (+-0.733 toward the valence sign, only in mixed-case text), and a
//! small idiom table. Valences before the first "but" scale by 0.5 and after
//! it by 1.5. The valence sum S is amplified by trailing exclamation marks
//! (0.292 each, up to three) and question-mark counts (0.18 each for two or
//! three, 0.96 total for four or more), then normalized to the compound score
//! S / sqrt(S^2 + 15). The neg/neu/pos fields are the magnitude proportions
//! of negative, zero-valence, and positive token contributions.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const BOOST_INCR: f64 = 0.293;
const BOOST_DECR: f64 = -0.293;
const CAPS_INCR: f64 = 0.733;
const NEGATION_SCALAR: f64 = -0.74;
const EXCLAIM_STEP: f64 = 0.292;
const QUESTION_STEP: f64 = 0.18;
const QUESTION_CAP: f64 = 0.96;
const NORMALIZATION_ALPHA: f64 = 15.0;

const NEGATE: &[&str] = &[
    "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt", "ain't", "aren't",
    "can't", "couldn't", "daren't", "didn't", "doesn't", "dont", "hadnt", "hasnt", "havent",
    "isnt", "mightnt", "mustnt", "neither", "don't", "hadn't", "hasn't", "haven't", "isn't",
    "mightn't", "mustn't", "neednt", "needn't", "never", "none", "nope", "nor", "not", "nothing",
    "nowhere", "oughtnt", "shant", "shouldnt", "uhuh", "wasnt", "werent", "oughtn't", "shan't",
    "shouldn't", "uh-uh", "wasn't", "weren't", "without", "wont", "wouldnt", "won't", "wouldn't",
    "rarely", "seldom", "despite",
];

const BOOSTERS: &[(&str, f64)] = &[
    ("absolutely", BOOST_INCR),
    ("amazingly", BOOST_INCR),
    ("awfully", BOOST_INCR),
    ("completely", BOOST_INCR),
    ("considerably", BOOST_INCR),
    ("decidedly", BOOST_INCR),
    ("deeply", BOOST_INCR),
    ("enormously", BOOST_INCR),
    ("entirely", BOOST_INCR),
    ("especially", BOOST_INCR),
    ("exceptionally", BOOST_INCR),
    ("extremely", BOOST_INCR),
    ("fabulously", BOOST_INCR),
    ("fully", BOOST_INCR),
    ("greatly", BOOST_INCR),
    ("highly", BOOST_INCR),
    ("hugely", BOOST_INCR),
    ("incredibly", BOOST_INCR),
    ("intensely", BOOST_INCR),
    ("majorly", BOOST_INCR),
    ("more", BOOST_INCR),
    ("most", BOOST_INCR),
    ("particularly", BOOST_INCR),
    ("purely", BOOST_INCR),
    ("quite", BOOST_INCR),
    ("really", BOOST_INCR),
    ("remarkably", BOOST_INCR),
    ("so", BOOST_INCR),
    ("substantially", BOOST_INCR),
    ("thoroughly", BOOST_INCR),
    ("totally", BOOST_INCR),
    ("tremendously", BOOST_INCR),
    ("unbelievably", BOOST_INCR),
    ("unusually", BOOST_INCR),
    ("utterly", BOOST_INCR),
    ("very", BOOST_INCR),
    ("almost", BOOST_DECR),
    ("barely", BOOST_DECR),
    ("hardly", BOOST_DECR),
    ("kinda", BOOST_DECR),
    ("less", BOOST_DECR),
    ("little", BOOST_DECR),
    ("marginally", BOOST_DECR),
    ("occasionally", BOOST_DECR),
    ("partly", BOOST_DECR),
    ("scarcely", BOOST_DECR),
    ("slightly", BOOST_DECR),
    ("somewhat", BOOST_DECR),
    ("sorta", BOOST_DECR),
];

/// Two-word boosters checked as bigrams preceding a scored token.
const BIGRAM_BOOSTERS: &[(&str, f64)] = &[
    ("kind of", BOOST_DECR),
    ("sort of", BOOST_DECR),
    ("just enough", BOOST_DECR),
];

/// Fixed-valence idioms; a match overrides the token valence.
const IDIOMS: &[(&str, f64)] = &[
    ("the shit", 3.0),
    ("the bomb", 3.0),
    ("bad ass", 1.5),
    ("yeah right", -2.0),
    ("kiss of death", -1.5),
    ("to die for", 3.0),
    ("beating heart", 3.1),
    ("broken heart", -2.9),
];

/// Token-to-valence map; valences live in [-4, +4].
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentLexicon {
    map: BTreeMap<String, f64>,
}

impl SentimentLexicon {
    /// Parse the `token<TAB>valence` format. `#` starts a comment line.
    pub fn parse(contents: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, line) in contents.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (token, valence) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!(
                    "lexicon line {}: expected `token<TAB>valence`",
                    lineno + 1
                ))
            })?;
            let valence: f64 = valence.trim().parse().map_err(|_| {
                Error::Format(format!("lexicon line {}: bad valence `{valence}`", lineno + 1))
            })?;
            if !(-4.0..=4.0).contains(&valence) {
                return Err(Error::Format(format!(
                    "lexicon line {}: valence {valence} outside [-4, 4]",
                    lineno + 1
                )));
            }
            let token = token.trim().to_lowercase();
            if map.insert(token.clone(), valence).is_some() {
                return Err(Error::Format(format!(
                    "lexicon line {}: duplicate token `{token}`",
                    lineno + 1
                )));
            }
        }
        Ok(SentimentLexicon { map })
    }

    /// The valence lexicon bundled with this crate (see data/README.md for
    /// its provenance).
    pub fn bundled() -> Self {
        SentimentLexicon::parse(include_str!("../data/sentiment_lexicon.txt"))
            .expect("bundled lexicon is well-formed")
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.map.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Negate every valence; used by the symmetry property tests.
    pub fn negated(&self) -> Self {
        SentimentLexicon {
            map: self.map.iter().map(|(k, v)| (k.clone(), -v)).collect(),
        }
    }
}

/// Proportions of negative/neutral/positive contributions plus the
/// normalized compound score in [-1, +1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub neg: f64,
    pub neu: f64,
    pub pos: f64,
    pub compound: f64,
}

impl SentimentScore {
    fn zero() -> Self {
        SentimentScore {
            neg: 0.0,
            neu: 0.0,
            pos: 0.0,
            compound: 0.0,
        }
    }
}

/// Whitespace tokens with leading/trailing punctuation stripped; tokens that
/// reduce to one character or less are dropped (so negation windows skip
/// them, matching the scorer's word model).
fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let stripped = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if stripped.chars().count() > 1 {
                Some(stripped.to_string())
            } else {
                None
            }
        })
        .collect()
}

fn is_all_caps(word: &str) -> bool {
    let mut has_alpha = false;
    for c in word.chars() {
        if c.is_alphabetic() {
            has_alpha = true;
            if !c.is_uppercase() {
                return false;
            }
        }
    }
    has_alpha
}

fn booster_scalar(word: &str) -> Option<f64> {
    let lw = word.to_lowercase();
    BOOSTERS
        .iter()
        .find(|(b, _)| *b == lw)
        .map(|&(_, s)| s)
}

fn negated(word: &str) -> bool {
    let lw = word.to_lowercase();
    NEGATE.contains(&lw.as_str()) || lw.contains("n't")
}

/// Booster contribution of `word` toward a token with the given valence:
/// sign-aligned with the valence, with an extra caps bump in mixed-case text.
fn scalar_inc_dec(word: &str, valence: f64, cap_diff: bool) -> f64 {
    match booster_scalar(word) {
        None => 0.0,
        Some(mut s) => {
            if valence < 0.0 {
                s = -s;
            }
            if is_all_caps(word) && cap_diff {
                if valence > 0.0 {
                    s += CAPS_INCR;
                } else {
                    s -= CAPS_INCR;
                }
            }
            s
        }
    }
}

fn lower(words: &[String], i: usize) -> String {
    words[i].to_lowercase()
}

fn negation_check(mut valence: f64, words: &[String], start_i: usize, i: usize) -> f64 {
    match start_i {
        0 => {
            if negated(&words[i - 1]) {
                valence *= NEGATION_SCALAR;
            }
        }
        1 => {
            if lower(words, i - 2) == "never"
                && (lower(words, i - 1) == "so" || lower(words, i - 1) == "this")
            {
                valence *= 1.25;
            } else if negated(&words[i - 2]) {
                valence *= NEGATION_SCALAR;
            }
        }
        2 => {
            if lower(words, i - 3) == "never"
                && (["so", "this"].contains(&lower(words, i - 2).as_str())
                    || ["so", "this"].contains(&lower(words, i - 1).as_str()))
            {
                valence *= 1.25;
            } else if negated(&words[i - 3]) {
                valence *= NEGATION_SCALAR;
            }
        }
        _ => {}
    }
    valence
}

fn idiom_check(mut valence: f64, words: &[String], i: usize) -> f64 {
    let lw: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
    let gram = |from: usize, to: usize| lw[from..=to].join(" ");
    let mut windows: Vec<String> = vec![gram(i - 1, i), gram(i - 2, i), gram(i - 2, i - 1)];
    if i >= 3 {
        windows.push(gram(i - 3, i - 1));
        windows.push(gram(i - 3, i - 2));
    }
    if i + 1 < words.len() {
        windows.push(gram(i, i + 1));
    }
    if i + 2 < words.len() {
        windows.push(gram(i, i + 2));
    }
    for w in &windows {
        if let Some(&(_, v)) = IDIOMS.iter().find(|(idiom, _)| idiom == w) {
            valence = v;
            break;
        }
    }
    // Dampener bigrams such as "kind of" two or three slots back.
    let trailing = [gram(i - 2, i - 1)];
    let trailing2 = if i >= 3 { Some(gram(i - 3, i - 2)) } else { None };
    for w in trailing.iter().chain(trailing2.iter()) {
        if let Some(&(_, s)) = BIGRAM_BOOSTERS.iter().find(|(b, _)| b == w) {
            valence += s;
        }
    }
    valence
}

fn least_check(mut valence: f64, words: &[String], lexicon: &SentimentLexicon, i: usize) -> f64 {
    if i > 1
        && lexicon.get(&lower(words, i - 1)).is_none()
        && lower(words, i - 1) == "least"
        && lower(words, i - 2) != "at"
        && lower(words, i - 2) != "very"
    {
        valence *= NEGATION_SCALAR;
    } else if i == 1 && lexicon.get(&lower(words, i - 1)).is_none() && lower(words, i - 1) == "least"
    {
        valence *= NEGATION_SCALAR;
    }
    valence
}

/// Trailing '!' amplification (up to three) plus '?' amplification by count.
fn punctuation_emphasis(text: &str) -> f64 {
    let trimmed = text.trim_end();
    let bangs = trimmed.chars().rev().take_while(|&c| c == '!').count().min(3);
    let exclaim = bangs as f64 * EXCLAIM_STEP;
    let questions = text.chars().filter(|&c| c == '?').count();
    let question = match questions {
        0 | 1 => 0.0,
        2 | 3 => questions as f64 * QUESTION_STEP,
        _ => QUESTION_CAP,
    };
    exclaim + question
}

/// Score one text against a lexicon. Empty or token-free text scores all
/// zeros by convention.
pub fn score(text: &str, lexicon: &SentimentLexicon) -> SentimentScore {
    let words = tokens(text);
    if words.is_empty() {
        return SentimentScore::zero();
    }
    let any_caps = words.iter().any(|w| is_all_caps(w));
    let all_caps = words.iter().all(|w| is_all_caps(w));
    let cap_diff = any_caps && !all_caps;

    let mut sentiments: Vec<f64> = Vec::with_capacity(words.len());
    for i in 0..words.len() {
        let lw = lower(&words, i);
        // Boosters contribute through the words they modify, not directly.
        if booster_scalar(&words[i]).is_some()
            || (lw == "kind" && i + 1 < words.len() && lower(&words, i + 1) == "of")
        {
            sentiments.push(0.0);
            continue;
        }
        let mut valence = match lexicon.get(&lw) {
            None => {
                sentiments.push(0.0);
                continue;
            }
            Some(v) => v,
        };
        if is_all_caps(&words[i]) && cap_diff {
            if valence > 0.0 {
                valence += CAPS_INCR;
            } else {
                valence -= CAPS_INCR;
            }
        }
        for start_i in 0..3usize {
            if i <= start_i {
                break;
            }
            let prev = &words[i - (start_i + 1)];
            if lexicon.get(&prev.to_lowercase()).is_some() {
                continue;
            }
            let mut s = scalar_inc_dec(prev, valence, cap_diff);
            if s != 0.0 {
                if start_i == 1 {
                    s *= 0.95;
                } else if start_i == 2 {
                    s *= 0.9;
                }
            }
            valence += s;
            valence = negation_check(valence, &words, start_i, i);
            if start_i == 2 {
                valence = idiom_check(valence, &words, i);
            }
        }
        valence = least_check(valence, &words, lexicon, i);
        sentiments.push(valence);
    }

    // "but" reweights the clauses around it.
    if let Some(bi) = words.iter().position(|w| w.to_lowercase() == "but") {
        for (idx, s) in sentiments.iter_mut().enumerate() {
            if idx < bi {
                *s *= 0.5;
            } else if idx > bi {
                *s *= 1.5;
            }
        }
    }

    let mut sum: f64 = sentiments.iter().sum();
    let punct = punctuation_emphasis(text);
    if sum > 0.0 {
        sum += punct;
    } else if sum < 0.0 {
        sum -= punct;
    }
    let compound = (sum / (sum * sum + NORMALIZATION_ALPHA).sqrt()).clamp(-1.0, 1.0);

    let mut pos_sum = 0.0;
    let mut neg_sum = 0.0;
    let mut neu_count = 0.0;
    for &v in &sentiments {
        if v > 0.0 {
            pos_sum += v + 1.0;
        } else if v < 0.0 {
            neg_sum += v - 1.0;
        } else {
            neu_count += 1.0;
        }
    }
    if pos_sum > neg_sum.abs() {
        pos_sum += punct;
    } else if pos_sum < neg_sum.abs() {
        neg_sum -= punct;
    }
    let total = pos_sum + neg_sum.abs() + neu_count;
    if total == 0.0 {
        return SentimentScore {
            neg: 0.0,
            neu: 0.0,
            pos: 0.0,
            compound,
        };
    }
    SentimentScore {
        neg: (neg_sum / total).abs(),
        neu: (neu_count / total).abs(),
        pos: (pos_sum / total).abs(),
        compound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lexicon(entries: &[(&str, f64)]) -> SentimentLexicon {
        let contents: String = entries
            .iter()
            .map(|(t, v)| format!("{t}\t{v}\n"))
            .collect();
        SentimentLexicon::parse(&contents).unwrap()
    }

    #[test]
    fn single_word_closed_form() {
        let lex = SentimentLexicon::bundled();
        assert_eq!(lex.get("good"), Some(1.9));
        let s = score("good", &lex);
        let expected = 1.9 / (1.9f64 * 1.9 + 15.0).sqrt();
        assert!((s.compound - expected).abs() < 1e-12);
        assert!((s.compound - 0.4404).abs() < 1e-4);
    }

    #[test]
    fn text_without_lexicon_tokens_is_neutral() {
        let lex = SentimentLexicon::bundled();
        let s = score("the chair is near the table", &lex);
        assert_eq!(s.compound, 0.0);
        assert_eq!(s.pos, 0.0);
        assert_eq!(s.neg, 0.0);
        assert!((s.neu - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_text_is_all_zero() {
        let lex = SentimentLexicon::bundled();
        let s = score("", &lex);
        assert_eq!(s.compound, 0.0);
        assert_eq!(s.neu, 0.0);
        let s = score("... !!!", &lex);
        assert_eq!(s.compound, 0.0);
    }

    #[test]
    fn proportions_sum_to_one_for_scored_text() {
        let lex = SentimentLexicon::bundled();
        for text in [
            "good good bad table",
            "this is really great news!",
            "terrible awful day but a happy ending",
        ] {
            let s = score(text, &lex);
            assert!(
                (s.neg + s.neu + s.pos - 1.0).abs() < 1e-6,
                "{text}: {s:?}"
            );
        }
    }

    #[test]
    fn booster_raises_and_dampener_lowers() {
        let lex = lexicon(&[("glad", 2.0)]);
        let plain = score("feeling glad", &lex).compound;
        let boosted = score("feeling very glad", &lex).compound;
        let dampened = score("feeling slightly glad", &lex).compound;
        assert!(boosted > plain, "boosted {boosted} vs {plain}");
        assert!(dampened < plain, "dampened {dampened} vs {plain}");
    }

    #[test]
    fn booster_effect_decays_with_distance() {
        let lex = lexicon(&[("glad", 2.0)]);
        let near = score("very glad", &lex).compound;
        let far = score("very damn fine glad", &lex).compound;
        // Distance-2 booster scales by 0.9.
        assert!(near > far && far > score("glad", &lex).compound);
    }

    #[test]
    fn negation_flips_and_shrinks() {
        let lex = lexicon(&[("happy", 2.7)]);
        let plain = score("happy", &lex);
        let negated = score("not happy", &lex);
        assert!(plain.compound > 0.0);
        assert!(negated.compound < 0.0);
        assert!(negated.compound.abs() < plain.compound.abs());
        let contraction = score("isn't happy", &lex);
        assert!((contraction.compound - negated.compound).abs() < 1e-12);
    }

    #[test]
    fn caps_emphasis_only_in_mixed_case() {
        let lex = lexicon(&[("great", 3.1)]);
        let mixed = score("this is GREAT news", &lex).compound;
        let plain = score("this is great news", &lex).compound;
        let shouting = score("THIS IS GREAT NEWS", &lex).compound;
        assert!(mixed > plain);
        assert!((shouting - plain).abs() < 1e-12);
    }

    #[test]
    fn but_clause_reweighting() {
        let lex = lexicon(&[("good", 1.9), ("bad", -2.5)]);
        let with_but = score("good but bad", &lex);
        // 1.9*0.5 - 2.5*1.5 = -2.8 against plain -0.6.
        let expected = -2.8 / (2.8f64 * 2.8 + 15.0).sqrt();
        assert!((with_but.compound - expected).abs() < 1e-12);
    }

    #[test]
    fn exclamation_amplifies_toward_sign_and_caps_at_three() {
        let lex = lexicon(&[("good", 1.9), ("bad", -2.5)]);
        let base = score("good", &lex).compound;
        let one = score("good!", &lex).compound;
        let three = score("good!!!", &lex).compound;
        let four = score("good!!!!", &lex).compound;
        assert!(one > base);
        assert!(three > one);
        assert_eq!(three, four);
        let neg_base = score("bad", &lex).compound;
        let neg_one = score("bad!", &lex).compound;
        assert!(neg_one < neg_base);
    }

    #[test]
    fn question_marks_amplify_by_count() {
        let lex = lexicon(&[("good", 1.9)]);
        let base = score("good", &lex).compound;
        let one = score("good?", &lex).compound;
        let two = score("good??", &lex).compound;
        let many = score("good?????", &lex).compound;
        assert_eq!(base, one);
        assert!(two > one);
        assert!(many > two);
    }

    #[test]
    fn idiom_overrides_token_valence() {
        let lex = lexicon(&[("shit", -2.6), ("bomb", -3.0)]);
        let idiom = score("that film was the shit", &lex);
        assert!(idiom.compound > 0.0, "{:?}", idiom);
        let plain = score("covered in shit", &lex);
        assert!(plain.compound < 0.0);
    }

    #[test]
    fn compound_is_odd_under_lexicon_negation() {
        let lex = lexicon(&[("calm", 1.3), ("storm", -2.1), ("glad", 2.0)]);
        let neg = lex.negated();
        for text in [
            "calm seas and glad sailors",
            "storm warnings everywhere",
            "not calm anymore",
            "very glad about the calm storm",
        ] {
            let a = score(text, &lex).compound;
            let b = score(text, &neg).compound;
            assert_eq!(a.to_bits(), (-b).to_bits(), "{text}: {a} vs {b}");
        }
    }

    #[test]
    fn compound_stays_bounded() {
        let lex = lexicon(&[("rage", -4.0)]);
        let text = "rage ".repeat(200) + "!!!";
        let s = score(&text, &lex);
        assert!(s.compound > -1.0 && s.compound < 0.0);
    }

    #[test]
    fn lexicon_rejects_out_of_range_and_duplicates() {
        assert!(SentimentLexicon::parse("over\t4.5\n").is_err());
        assert!(SentimentLexicon::parse("a\t1.0\na\t2.0\n").is_err());
        assert!(SentimentLexicon::parse("# comment\nok\t1.0\n").is_ok());
        assert!(SentimentLexicon::parse("broken line\n").is_err());
    }

    #[test]
    fn figure_messages_match_published_scores() {
        let lex = SentimentLexicon::bundled();
        let message1 = "I Killmilk, represented by the organizer of the hacker group Killnet, \
            officially take full responsibility for causing particularly serious damage to the \
            network infrastructure of the Bulgarian corrupt government. And I declare this \
            officially! Chief Prosecutor of the Republic of Bulgaria Ivan Geshev Fuck you!";
        let message2 = "South Africa was a victim of apartheid for decades. We don't want any \
            nations experience it again. This time Israel is committing genocide against \
            Palestinians. We are doing our best to stop Israel and Free Palestine. We tried to \
            sue against Israel in International court, and now be keep on our try in cyber \
            court...Long live the South Africa, long live the Palestine";
        let s1 = score(message1, &lex);
        let s2 = score(message2, &lex);
        assert!(s1.compound < 0.0);
        assert!((s1.compound - (-0.8464)).abs() <= 0.02, "message 1: {}", s1.compound);
        assert!(s2.compound > 0.0);
        assert!((s2.compound - 0.7003).abs() <= 0.02, "message 2: {}", s2.compound);
    }
}
