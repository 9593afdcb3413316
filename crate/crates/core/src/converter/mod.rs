//! Rewrites a question and its answer into a declarative sentence.

pub mod morph;
pub mod pos;
mod rewrite;
pub mod rules;

use serde::{Deserialize, Serialize};

pub use morph::{conjugate, VerbForm};
pub use pos::{PosTag, Tagger};
pub use rules::{Rule, RuleBody, RuleExample, RuleTable};

use rewrite::{Context, Origin, Tok};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConvertError {
    #[error("empty question")]
    EmptyQuestion,
    #[error("question does not end with '?': {0:?}")]
    MissingQuestionMark(String),
    #[error("cannot classify question {0:?}: no leading verb, modal or wh-word")]
    Unclassifiable(String),
    #[error("empty answer")]
    EmptyAnswer,
    #[error("{answer:?} is not a yes/no answer to {question:?}")]
    InvalidAnswer { question: String, answer: String },
    #[error("no conversion rule matches {question:?} / {answer:?}")]
    NoRuleMatch { question: String, answer: String },
    #[error("no finite verb to negate in {0:?}")]
    NoFiniteVerb(String),
    #[error("question {0:?} has no wh-word to substitute")]
    NoWhToken(String),
    #[error("unknown part-of-speech tag {0:?}")]
    UnknownTag(String),
    #[error("lexicon: {0}")]
    Lexicon(String),
    #[error("rule table: {0}")]
    RuleTable(String),
}

impl ConvertError {
    pub fn code(&self) -> &'static str {
        match self {
            ConvertError::EmptyQuestion | ConvertError::MissingQuestionMark(_) => "invalid-question",
            ConvertError::Unclassifiable(_) => "unclassifiable",
            ConvertError::EmptyAnswer | ConvertError::InvalidAnswer { .. } => "invalid-answer",
            ConvertError::NoRuleMatch { .. } => "no-rule-match",
            ConvertError::NoFiniteVerb(_) => "no-finite-verb",
            ConvertError::NoWhToken(_) => "no-wh-token",
            ConvertError::UnknownTag(_) | ConvertError::Lexicon(_) | ConvertError::RuleTable(_) => "config",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QType {
    YesNo,
    Number,
    WhOther,
}

impl QType {
    pub fn as_str(self) -> &'static str {
        match self {
            QType::YesNo => "yes_no",
            QType::Number => "number",
            QType::WhOther => "wh_other",
        }
    }
}

/// Splits on whitespace, then peels trailing punctuation and clitics
/// (`man's` becomes `man 's`, `isn't` becomes `is n't`).
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chunk = chunk.trim_start_matches(['"', '(', '[', '\u{201c}']);
        let mut trailing = Vec::new();
        let mut word = chunk;
        while let Some(c) = word.chars().last().filter(|c| ",?!.;:\")]\u{201d}".contains(*c)) {
            if ",?!.;:".contains(c) {
                trailing.push(c.to_string());
            }
            word = &word[..word.len() - c.len_utf8()];
        }
        if !word.is_empty() {
            let lower = word.to_lowercase();
            if lower.len() > 3 && lower.ends_with("n't") {
                out.push(word[..word.len() - 3].to_string());
                out.push(word[word.len() - 3..].to_string());
            } else if let Some(i) = word.find('\'').filter(|&i| i > 0 && i + 1 < word.len()) {
                out.push(word[..i].to_string());
                out.push(word[i..].to_string());
            } else {
                out.push(word.to_string());
            }
        }
        out.extend(trailing.into_iter().rev());
    }
    out
}

/// Question type from the leading tokens.
pub fn classify_question<S: AsRef<str>>(tokens: &[S], tags: &[PosTag]) -> Result<QType, ConvertError> {
    let first = tokens.first().map(|t| t.as_ref().to_lowercase());
    let second = tokens.get(1).map(|t| t.as_ref().to_lowercase());
    if first.as_deref() == Some("how") && second.as_deref() == Some("many") {
        return Ok(QType::Number);
    }
    match tags.first() {
        Some(t) if t.is_verb() || *t == PosTag::MD => Ok(QType::YesNo),
        Some(t) if t.is_wh() => Ok(QType::WhOther),
        _ => Err(ConvertError::Unclassifiable(rewrite::join_words(tokens.iter().map(AsRef::as_ref)))),
    }
}

/// A tokenized, tagged and classified question. The final token is `?`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    raw: String,
    tokens: Vec<String>,
    pos: Vec<PosTag>,
    qtype: QType,
}

impl Question {
    pub fn parse(raw: &str, tagger: &Tagger) -> Result<Self, ConvertError> {
        let raw = raw.trim();
        if raw.is_empty() {
            return Err(ConvertError::EmptyQuestion);
        }
        let tokens = tokenize(raw);
        if tokens.last().map(String::as_str) != Some("?") || tokens.len() < 2 {
            return Err(ConvertError::MissingQuestionMark(raw.to_string()));
        }
        let pos = tagger.tag(&tokens);
        let qtype = classify_question(&tokens, &pos)?;
        Ok(Self {
            raw: raw.to_string(),
            tokens,
            pos,
            qtype,
        })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn pos(&self) -> &[PosTag] {
        &self.pos
    }

    pub fn qtype(&self) -> QType {
        self.qtype
    }

    /// Tokens without the question mark.
    pub fn body(&self) -> (&[String], &[PosTag]) {
        let n = self.tokens.len() - 1;
        (&self.tokens[..n], &self.pos[..n])
    }
}

const AFFIRMATIVE: &[&str] = &["yes", "yeah", "yep", "true"];
const NEGATIVE: &[&str] = &["no", "nope", "false"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    label: String,
    is_affirmation: Option<bool>,
}

impl Answer {
    /// Polarity is parsed for yes/no questions and absent otherwise.
    pub fn for_question(question: &Question, label: &str) -> Result<Self, ConvertError> {
        let label = label.trim();
        if label.is_empty() {
            return Err(ConvertError::EmptyAnswer);
        }
        let is_affirmation = match question.qtype() {
            QType::YesNo => {
                let lower = label.to_lowercase();
                if AFFIRMATIVE.contains(&lower.as_str()) {
                    Some(true)
                } else if NEGATIVE.contains(&lower.as_str()) {
                    Some(false)
                } else {
                    return Err(ConvertError::InvalidAnswer {
                        question: question.raw().to_string(),
                        answer: label.to_string(),
                    });
                }
            }
            _ => None,
        };
        Ok(Self {
            label: label.to_string(),
            is_affirmation,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_affirmation(&self) -> Option<bool> {
        self.is_affirmation
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub question: String,
    pub answer: String,
    /// Name of the rule that produced the text; `None` for the fallback template.
    pub rule: Option<String>,
}

/// Declarative word sequence before sentence casing and punctuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rewrite {
    pub words: Vec<String>,
    pub rule: String,
}

impl Rewrite {
    pub fn phrase(&self) -> String {
        rewrite::join_words(self.words.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone)]
pub struct Converter {
    tagger: Tagger,
    rules: RuleTable,
    fallback: Option<String>,
}

impl Default for Converter {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Converter {
    pub fn new(tagger: Tagger, rules: RuleTable) -> Self {
        Self {
            tagger,
            rules,
            fallback: None,
        }
    }

    pub fn builtin() -> Self {
        Self::new(Tagger::builtin(), RuleTable::builtin())
    }

    /// Template used when no rule matches; `{answer}` and `{question}` are
    /// substituted.
    pub fn with_fallback(mut self, template: impl Into<String>) -> Self {
        self.fallback = Some(template.into());
        self
    }

    pub fn tagger(&self) -> &Tagger {
        &self.tagger
    }

    pub fn rules(&self) -> &RuleTable {
        &self.rules
    }

    pub fn parse_question(&self, raw: &str) -> Result<Question, ConvertError> {
        Question::parse(raw, &self.tagger)
    }

    pub fn rewrite(&self, question: &Question, answer: &Answer) -> Result<Rewrite, ConvertError> {
        let (words, tags) = question.body();
        let toks = self.rewrite_toks(question, answer, words, tags)?;
        let (toks, rule) = toks;
        Ok(Rewrite {
            words: rewrite::surface(&toks),
            rule,
        })
    }

    fn rewrite_toks(
        &self,
        question: &Question,
        answer: &Answer,
        words: &[String],
        tags: &[PosTag],
    ) -> Result<(Vec<Tok>, String), ConvertError> {
        let (rule, captures) = self
            .rules
            .find(question.qtype(), words, tags)
            .ok_or_else(|| ConvertError::NoRuleMatch {
                question: question.raw().to_string(),
                answer: answer.label().to_string(),
            })?;
        let ctx = Context {
            tagger: &self.tagger,
            words,
            tags,
            captures: &captures,
            answer: answer.label(),
        };
        let template = match (&rule.body, answer.is_affirmation()) {
            (RuleBody::Template(t), _) => t,
            (RuleBody::Polar { affirm, .. }, Some(true)) => affirm,
            (RuleBody::Polar { deny, .. }, Some(false)) => deny,
            (RuleBody::Polar { .. }, None) => {
                return Err(ConvertError::InvalidAnswer {
                    question: question.raw().to_string(),
                    answer: answer.label().to_string(),
                })
            }
        };
        let toks = ctx.eval_template(template)?;
        if toks.is_empty() {
            return Err(ConvertError::NoRuleMatch {
                question: question.raw().to_string(),
                answer: answer.label().to_string(),
            });
        }
        Ok((toks, rule.name.clone()))
    }

    pub fn convert(&self, question: &Question, answer: &Answer) -> Result<Sentence, ConvertError> {
        match self.rewrite(question, answer) {
            Ok(rw) => Ok(Sentence {
                text: sentence_case(&rw.phrase()),
                question: question.raw().to_string(),
                answer: answer.label().to_string(),
                rule: Some(rw.rule),
            }),
            Err(ConvertError::NoRuleMatch { .. }) if self.fallback.is_some() => {
                let template = self.fallback.as_deref().unwrap_or_default();
                let stem = question.raw().trim_end_matches('?').trim();
                let text = template.replace("{answer}", answer.label()).replace("{question}", stem);
                Ok(Sentence {
                    text: sentence_case(&text),
                    question: question.raw().to_string(),
                    answer: answer.label().to_string(),
                    rule: None,
                })
            }
            Err(e) => Err(e),
        }
    }

    /// Parses both strings and converts them.
    pub fn convert_text(&self, question: &str, answer: &str) -> Result<Sentence, ConvertError> {
        let q = self.parse_question(question)?;
        let a = Answer::for_question(&q, answer)?;
        self.convert(&q, &a)
    }

    /// Negates a verb phrase such as `"got hurt"` or `"may cross the road"`.
    pub fn negate(&self, phrase: &str) -> Result<String, ConvertError> {
        let words = tokenize(phrase);
        let tags = self.tagger.tag(&words);
        let toks = words
            .into_iter()
            .zip(tags)
            .enumerate()
            .map(|(i, (text, tag))| Tok {
                text,
                tag,
                origin: Origin::Question(i),
            })
            .collect();
        let out = rewrite::negate_toks(toks)?;
        Ok(rewrite::join_words(out.iter().map(|t| t.text.as_str())))
    }
}

/// Capitalizes the first letter and ends the text with a single period.
pub fn sentence_case(text: &str) -> String {
    let trimmed = text.trim().trim_end_matches(['.', '?', '!']).trim_end();
    let mut out = morph::capitalize(trimmed);
    out.push('.');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_peels_punctuation() {
        assert_eq!(tokenize("What is on the man's table?"), ["What", "is", "on", "the", "man", "'s", "table", "?"]);
        assert_eq!(tokenize("Isn't it?"), ["Is", "n't", "it", "?"]);
        assert_eq!(tokenize("  "), Vec::<String>::new());
    }

    #[test]
    fn classification() {
        let c = Converter::builtin();
        assert_eq!(c.parse_question("Did he get hurt?").unwrap().qtype(), QType::YesNo);
        assert_eq!(c.parse_question("How many pens are there?").unwrap().qtype(), QType::Number);
        assert_eq!(c.parse_question("Who threw the ball?").unwrap().qtype(), QType::WhOther);
        assert!(matches!(c.parse_question("The ball?"), Err(ConvertError::Unclassifiable(_))));
        assert!(matches!(c.parse_question("Who threw the ball"), Err(ConvertError::MissingQuestionMark(_))));
    }

    #[test]
    fn yes_no_answers_need_polarity() {
        let c = Converter::builtin();
        let q = c.parse_question("Is she happy?").unwrap();
        assert!(matches!(Answer::for_question(&q, "maybe"), Err(ConvertError::InvalidAnswer { .. })));
        assert_eq!(Answer::for_question(&q, "Yes").unwrap().is_affirmation(), Some(true));
        let q = c.parse_question("Who are they?").unwrap();
        assert_eq!(Answer::for_question(&q, "no").unwrap().is_affirmation(), None);
    }

    #[test]
    fn negation_examples() {
        let c = Converter::builtin();
        assert_eq!(c.negate("is happy").unwrap(), "is not happy");
        assert_eq!(c.negate("may cross the road").unwrap(), "may not cross the road");
        assert_eq!(c.negate("got hurt").unwrap(), "did not get hurt");
        assert_eq!(c.negate("has eaten").unwrap(), "has not eaten");
        assert_eq!(c.negate("has 4 pens").unwrap(), "does not have 4 pens");
        assert!(matches!(c.negate("the red ball"), Err(ConvertError::NoFiniteVerb(_))));
    }

    #[test]
    fn number_agreement() {
        let c = Converter::builtin();
        assert_eq!(c.convert_text("How many pens are there?", "1").unwrap().text, "There is 1 pen.");
        assert_eq!(c.convert_text("How many pens were there?", "2").unwrap().text, "There were 2 pens.");
        assert_eq!(c.convert_text("How many people are walking?", "1").unwrap().text, "1 person is walking.");
    }

    #[test]
    fn fallback_template() {
        let strict = Converter::builtin();
        assert!(matches!(
            strict.convert_text("Why did he fall?", "park"),
            Err(ConvertError::NoRuleMatch { .. })
        ));
        let lenient = Converter::builtin().with_fallback("The answer is {answer}.");
        let s = lenient.convert_text("Why did he fall?", "park").unwrap();
        assert_eq!(s.text, "The answer is park.");
        assert_eq!(s.rule, None);
    }

    #[test]
    fn rule_table_examples_hold() {
        let c = Converter::builtin();
        for rule in c.rules().rules() {
            for ex in &rule.examples {
                let s = c.convert_text(&ex.question, &ex.answer).unwrap();
                assert_eq!(s.text, ex.expected, "rule {}", rule.name);
                assert_eq!(s.rule.as_deref(), Some(rule.name.as_str()), "{}", ex.question);
            }
        }
    }
}
