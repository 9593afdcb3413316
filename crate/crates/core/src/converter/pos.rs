//! Lexicon and suffix-heuristic part-of-speech tagger over Penn Treebank tags.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::morph;
use super::ConvertError;

macro_rules! penn_tags {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// Penn Treebank part-of-speech tag.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum PosTag {
            $($variant),+
        }

        impl PosTag {
            pub const ALL: &'static [PosTag] = &[$(PosTag::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(PosTag::$variant => $name),+
                }
            }
        }

        impl FromStr for PosTag {
            type Err = ConvertError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(PosTag::$variant),)+
                    other => Err(ConvertError::UnknownTag(other.to_string())),
                }
            }
        }
    };
}

penn_tags! {
    CC => "CC", CD => "CD", DT => "DT", EX => "EX", FW => "FW", IN => "IN",
    JJ => "JJ", JJR => "JJR", JJS => "JJS", LS => "LS", MD => "MD",
    NN => "NN", NNS => "NNS", NNP => "NNP", NNPS => "NNPS", PDT => "PDT",
    POS => "POS", PRP => "PRP", PRPS => "PRP$", RB => "RB", RBR => "RBR",
    RBS => "RBS", RP => "RP", SYM => "SYM", TO => "TO", UH => "UH",
    VB => "VB", VBD => "VBD", VBG => "VBG", VBN => "VBN", VBP => "VBP",
    VBZ => "VBZ", WDT => "WDT", WP => "WP", WPS => "WP$", WRB => "WRB",
    Comma => ",", Period => ".", Colon => ":",
}

impl PosTag {
    pub fn is_verb(self) -> bool {
        matches!(
            self,
            PosTag::VB | PosTag::VBD | PosTag::VBG | PosTag::VBN | PosTag::VBP | PosTag::VBZ
        )
    }

    pub fn is_finite_verb(self) -> bool {
        matches!(self, PosTag::VBD | PosTag::VBP | PosTag::VBZ)
    }

    pub fn is_noun(self) -> bool {
        matches!(self, PosTag::NN | PosTag::NNS | PosTag::NNP | PosTag::NNPS)
    }

    pub fn is_adjective(self) -> bool {
        matches!(self, PosTag::JJ | PosTag::JJR | PosTag::JJS)
    }

    pub fn is_wh(self) -> bool {
        matches!(self, PosTag::WP | PosTag::WPS | PosTag::WDT | PosTag::WRB)
    }
}

impl Serialize for PosTag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PosTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const BUILTIN_LEXICON: &str = include_str!("lexicon.txt");

/// Lexicon-first tagger. Ambiguous tokens are resolved left to right by a
/// handful of contextual preferences; unknown words fall back to suffix
/// heuristics and finally `NN`.
#[derive(Debug, Clone)]
pub struct Tagger {
    lexicon: HashMap<String, Vec<PosTag>>,
}

impl Default for Tagger {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Tagger {
    pub fn builtin() -> Self {
        Self::from_lexicon(BUILTIN_LEXICON).expect("builtin lexicon parses")
    }

    /// Parses `token TAG [TAG ...]` lines. Repeated tokens append
    /// alternatives; the first tag listed is the default reading.
    pub fn from_lexicon(text: &str) -> Result<Self, ConvertError> {
        let mut lexicon: HashMap<String, Vec<PosTag>> = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().expect("non-empty line").to_lowercase();
            let tags = parts
                .map(PosTag::from_str)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ConvertError::Lexicon(format!("line {}: {e}", lineno + 1)))?;
            if tags.is_empty() {
                return Err(ConvertError::Lexicon(format!("line {}: no tag for {token:?}", lineno + 1)));
            }
            let entry = lexicon.entry(token).or_default();
            for tag in tags {
                if !entry.contains(&tag) {
                    entry.push(tag);
                }
            }
        }
        Ok(Self { lexicon })
    }

    /// Adds entries on top of the current lexicon.
    pub fn extend_lexicon(&mut self, text: &str) -> Result<(), ConvertError> {
        let extra = Self::from_lexicon(text)?;
        for (token, tags) in extra.lexicon {
            self.lexicon.insert(token, tags);
        }
        Ok(())
    }

    pub fn lexicon_tags(&self, token: &str) -> Option<&[PosTag]> {
        self.lexicon.get(&token.to_lowercase()).map(Vec::as_slice)
    }

    /// One tag per token.
    pub fn tag<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<PosTag> {
        let mut tags: Vec<PosTag> = Vec::with_capacity(tokens.len());
        let mut awaiting_base = false;
        for (i, token) in tokens.iter().enumerate() {
            let token = token.as_ref();
            let lower = token.to_lowercase();
            let cands = self.candidates(token, i == 0);
            let prev_tag = tags.last().copied();
            let prev_word = (i > 0).then(|| tokens[i - 1].as_ref().to_lowercase());
            let tag = if cands.len() == 1 {
                cands[0]
            } else {
                choose(&cands, prev_tag, prev_word.as_deref(), awaiting_base)
            };
            if tag == PosTag::MD || (morph::is_do(&lower) && tag.is_finite_verb() && !awaiting_base) {
                awaiting_base = true;
            } else if tag.is_verb() {
                awaiting_base = false;
            }
            tags.push(tag);
        }
        tags
    }

    fn candidates(&self, token: &str, sentence_initial: bool) -> Vec<PosTag> {
        let lower = token.to_lowercase();
        match token {
            "," => return vec![PosTag::Comma],
            "." | "?" | "!" => return vec![PosTag::Period],
            ":" | ";" => return vec![PosTag::Colon],
            "'s" | "'" => return vec![PosTag::POS],
            _ => {}
        }
        if !lower.is_empty() && lower.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') {
            return vec![PosTag::CD];
        }
        let mut cands: Vec<PosTag> = self.lexicon.get(&lower).cloned().unwrap_or_default();
        for tag in verb_readings(&lower) {
            if !cands.contains(&tag) {
                cands.push(tag);
            }
        }
        if !cands.is_empty() {
            return cands;
        }
        if !sentence_initial && token.chars().next().is_some_and(char::is_uppercase) {
            return vec![PosTag::NNP];
        }
        suffix_guess(&lower)
    }
}

/// Verb tags derivable from morphology alone.
fn verb_readings(lower: &str) -> Vec<PosTag> {
    let mut out: Vec<PosTag> = Vec::new();
    fn push(out: &mut Vec<PosTag>, t: PosTag) {
        if !out.contains(&t) {
            out.push(t);
        }
    }
    if morph::is_known_verb(lower) {
        push(&mut out, PosTag::VB);
        push(&mut out, PosTag::VBP);
    }
    if let Some(base) = morph::irregular_base(lower) {
        match lower {
            "is" | "has" | "does" | "goes" => push(&mut out, PosTag::VBZ),
            "are" | "am" => push(&mut out, PosTag::VBP),
            "being" => push(&mut out, PosTag::VBG),
            _ => {
                if morph::irregular_past(base) == Some(lower) {
                    push(&mut out, PosTag::VBD);
                }
                if morph::irregular_participle(base) == Some(lower) {
                    push(&mut out, PosTag::VBN);
                }
            }
        }
    }
    if out.is_empty() {
        let lemma = morph::lemmatize(lower);
        if lemma != lower && morph::is_known_verb(&lemma) {
            if lower.ends_with("ing") {
                push(&mut out, PosTag::VBG);
            } else if lower.ends_with("ed") {
                push(&mut out, PosTag::VBD);
                push(&mut out, PosTag::VBN);
            } else if lower.ends_with('s') {
                push(&mut out, PosTag::VBZ);
            }
        }
    }
    out
}

fn suffix_guess(lower: &str) -> Vec<PosTag> {
    const ADJ_SUFFIXES: &[&str] = &["ous", "ful", "ive", "able", "ible", "less", "ish", "ical"];
    const NOUN_SUFFIXES: &[&str] = &["tion", "sion", "ness", "ment", "ity", "ship", "ance", "ence", "er", "or", "ist"];
    if lower.len() > 4 && lower.ends_with("ing") {
        return vec![PosTag::VBG, PosTag::NN];
    }
    if lower.len() > 3 && lower.ends_with("ed") {
        return vec![PosTag::VBD, PosTag::VBN, PosTag::JJ];
    }
    if lower.len() > 3 && lower.ends_with("ly") {
        return vec![PosTag::RB];
    }
    if ADJ_SUFFIXES.iter().any(|s| lower.len() > s.len() + 1 && lower.ends_with(s)) {
        return vec![PosTag::JJ];
    }
    if NOUN_SUFFIXES.iter().any(|s| lower.len() > s.len() + 1 && lower.ends_with(s)) {
        return vec![PosTag::NN];
    }
    if lower.len() > 2 && morph::looks_plural(lower) {
        return vec![PosTag::NNS];
    }
    vec![PosTag::NN]
}

fn first_where(cands: &[PosTag], pred: impl Fn(PosTag) -> bool) -> Option<PosTag> {
    cands.iter().copied().find(|t| pred(*t))
}

fn choose(cands: &[PosTag], prev_tag: Option<PosTag>, prev_word: Option<&str>, awaiting_base: bool) -> PosTag {
    use PosTag::*;
    let has_base = cands.contains(&VB);
    if matches!(prev_tag, Some(MD | TO)) && has_base {
        return VB;
    }
    let determiner_like = matches!(prev_tag, Some(DT | PRPS | JJ | JJR | JJS | POS | CD))
        || matches!(prev_word, Some("what" | "which" | "whose" | "many"));
    if determiner_like {
        if let Some(t) = first_where(cands, |t| t.is_noun()) {
            return t;
        }
    }
    if awaiting_base && has_base {
        return VB;
    }
    if let Some(w) = prev_word {
        if morph::is_be(w) {
            if let Some(t) = first_where(cands, |t| matches!(t, VBG | VBN | JJ)) {
                return t;
            }
        }
        if morph::is_have(w) || morph::is_get(w) {
            if let Some(t) = first_where(cands, |t| t == VBN) {
                return t;
            }
        }
    }
    let subject_before = matches!(prev_tag, Some(NN | NNS | NNP | NNPS | PRP)) || prev_word == Some("who");
    if subject_before {
        if let Some(t) = first_where(cands, |t| t.is_finite_verb()) {
            return t;
        }
    }
    cands[0]
}
