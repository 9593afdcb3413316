//! Evaluation of rewrite templates against a matched question.

use std::ops::Range;

use super::morph::{self, VerbForm};
use super::pos::{PosTag, Tagger};
use super::rules::{Captures, Expr, Template};
use super::ConvertError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Origin {
    Question(usize),
    Answer,
    Inserted,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tok {
    pub text: String,
    pub tag: PosTag,
    pub origin: Origin,
}

pub(crate) struct Context<'a> {
    pub tagger: &'a Tagger,
    pub words: &'a [String],
    pub tags: &'a [PosTag],
    pub captures: &'a Captures,
    pub answer: &'a str,
}

impl Context<'_> {
    fn span(&self, name: &str) -> Option<Range<usize>> {
        self.captures.iter().find(|(n, _)| n == name).map(|(_, r)| r.clone())
    }

    fn capture(&self, name: &str) -> Vec<Tok> {
        self.span(name)
            .map(|r| {
                r.map(|i| Tok {
                    text: self.words[i].clone(),
                    tag: self.tags[i],
                    origin: Origin::Question(i),
                })
                .collect()
            })
            .unwrap_or_default()
    }

    fn answer_toks(&self) -> Vec<Tok> {
        let words: Vec<&str> = self.answer.split_whitespace().collect();
        let tags = self.tagger.tag(&words);
        words
            .into_iter()
            .zip(tags)
            .map(|(w, tag)| Tok {
                text: w.to_string(),
                tag,
                origin: Origin::Answer,
            })
            .collect()
    }

    fn answer_is_singular(&self) -> bool {
        morph::count_is_singular(self.answer.trim())
    }

    pub fn eval_template(&self, template: &Template) -> Result<Vec<Tok>, ConvertError> {
        let mut out = Vec::new();
        for item in template.items() {
            out.extend(self.eval(item)?);
        }
        Ok(out)
    }

    fn eval(&self, expr: &Expr) -> Result<Vec<Tok>, ConvertError> {
        match expr {
            Expr::Capture(name) => Ok(self.capture(name)),
            Expr::Literal(text) => {
                let words: Vec<&str> = text.split_whitespace().collect();
                let tags = self.tagger.tag(&words);
                Ok(words
                    .into_iter()
                    .zip(tags)
                    .map(|(w, tag)| Tok {
                        text: w.to_string(),
                        tag,
                        origin: Origin::Inserted,
                    })
                    .collect())
            }
            Expr::Answer => Ok(self.answer_toks()),
            Expr::AnswerGap(name) => {
                let tail = self.capture(name);
                let ans = self.answer_toks();
                Ok(match tail.last() {
                    None => ans,
                    Some(last) if matches!(last.tag, PosTag::IN | PosTag::RP | PosTag::TO) => {
                        tail.into_iter().chain(ans).collect()
                    }
                    Some(_) => ans.into_iter().chain(tail).collect(),
                })
            }
            Expr::Conjugate(target, source) => {
                let phrase = self.eval(target)?;
                Ok(conjugate_with(phrase, self.capture(source)))
            }
            Expr::Negate(inner) => negate_toks(self.eval(inner)?),
            Expr::Agree(inner) => Ok(agree(self.eval(inner)?, self.answer_is_singular())),
            Expr::Number(inner) => Ok(number(self.eval(inner)?, self.answer_is_singular())),
        }
    }
}

fn form_tag(form: VerbForm) -> PosTag {
    match form {
        VerbForm::Base => PosTag::VB,
        VerbForm::Present3sg => PosTag::VBZ,
        VerbForm::PresentNon3sg => PosTag::VBP,
        VerbForm::Past => PosTag::VBD,
        VerbForm::PastParticiple => PosTag::VBN,
        VerbForm::PresentParticiple => PosTag::VBG,
    }
}

fn do_form(aux: &str) -> VerbForm {
    match aux {
        "did" => VerbForm::Past,
        "does" => VerbForm::Present3sg,
        _ => VerbForm::PresentNon3sg,
    }
}

/// `conjug(X,tense(Y))`. A do-auxiliary is absorbed into the first verb of
/// `X`; any other auxiliary or modal is kept in front of the phrase.
fn conjugate_with(mut phrase: Vec<Tok>, source: Vec<Tok>) -> Vec<Tok> {
    let Some(aux) = source.first() else {
        return phrase;
    };
    let aux_word = aux.text.to_lowercase();
    if morph::is_do(&aux_word) {
        if let Some(verb) = phrase.iter_mut().find(|t| t.tag.is_verb()) {
            let form = do_form(&aux_word);
            verb.text = morph::conjugate(&verb.text, form);
            verb.tag = form_tag(form);
            return phrase;
        }
    }
    source.into_iter().chain(phrase).collect()
}

pub(crate) fn negate_toks(mut phrase: Vec<Tok>) -> Result<Vec<Tok>, ConvertError> {
    let not = |origin| Tok {
        text: "not".into(),
        tag: PosTag::RB,
        origin,
    };
    let Some(i) = phrase.iter().position(|t| t.tag == PosTag::MD || t.tag.is_verb()) else {
        return Err(ConvertError::NoFiniteVerb(join_plain(&phrase)));
    };
    let word = phrase[i].text.to_lowercase();
    let perfect = morph::is_have(&word) && phrase.get(i + 1).is_some_and(|t| t.tag == PosTag::VBN);
    if phrase[i].tag == PosTag::MD || morph::is_be(&word) || morph::is_do(&word) || perfect {
        phrase.insert(i + 1, not(Origin::Inserted));
        return Ok(phrase);
    }
    let support = match phrase[i].tag {
        PosTag::VBD => "did",
        PosTag::VBZ => "does",
        PosTag::VBP | PosTag::VB => "do",
        _ => return Err(ConvertError::NoFiniteVerb(join_plain(&phrase))),
    };
    let support_tag = match support {
        "did" => PosTag::VBD,
        "does" => PosTag::VBZ,
        _ => PosTag::VBP,
    };
    let origin = phrase[i].origin;
    phrase[i].text = morph::lemmatize(&word);
    phrase[i].tag = PosTag::VB;
    phrase[i].origin = Origin::Inserted;
    phrase.insert(
        i,
        Tok {
            text: support.into(),
            tag: support_tag,
            origin,
        },
    );
    phrase.insert(i + 1, not(Origin::Inserted));
    Ok(phrase)
}

/// Makes the first verb agree in number with the answer.
fn agree(mut phrase: Vec<Tok>, singular: bool) -> Vec<Tok> {
    let Some(tok) = phrase.iter_mut().find(|t| t.tag.is_verb() || t.tag == PosTag::MD) else {
        return phrase;
    };
    let word = tok.text.to_lowercase();
    let (text, tag) = match word.as_str() {
        "is" | "are" | "am" => if singular { ("is", PosTag::VBZ) } else { ("are", PosTag::VBP) },
        "was" | "were" => if singular { ("was", PosTag::VBD) } else { ("were", PosTag::VBD) },
        _ if tok.tag == PosTag::VBZ || tok.tag == PosTag::VBP => {
            let form = if singular { VerbForm::Present3sg } else { VerbForm::PresentNon3sg };
            tok.text = morph::conjugate(&word, form);
            tok.tag = form_tag(form);
            return phrase;
        }
        _ => return phrase,
    };
    tok.text = text.to_string();
    tok.tag = tag;
    phrase
}

/// Inflects the head noun of a phrase for the answer's count.
fn number(mut phrase: Vec<Tok>, singular: bool) -> Vec<Tok> {
    if let Some(tok) = phrase.iter_mut().rev().find(|t| matches!(t.tag, PosTag::NN | PosTag::NNS)) {
        if singular {
            tok.text = morph::singularize(&tok.text);
            tok.tag = PosTag::NN;
        } else if tok.tag == PosTag::NN {
            tok.text = morph::pluralize(&tok.text);
            tok.tag = PosTag::NNS;
        }
    }
    phrase
}

fn attaches_left(text: &str) -> bool {
    text.starts_with('\'') || text == "n't" || text == ","
}

pub(crate) fn join_words<'a>(words: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for w in words {
        if !out.is_empty() && !attaches_left(w) {
            out.push(' ');
        }
        out.push_str(w);
    }
    out
}

fn join_plain(toks: &[Tok]) -> String {
    join_words(toks.iter().map(|t| t.text.as_str()))
}

/// Word forms after normalizing the case of the question's first token.
pub(crate) fn surface(toks: &[Tok]) -> Vec<String> {
    toks.iter()
        .map(|t| {
            let keep = matches!(t.tag, PosTag::NNP | PosTag::NNPS) || t.text == "I";
            if t.origin == Origin::Question(0) && !keep {
                t.text.to_lowercase()
            } else {
                t.text.clone()
            }
        })
        .collect()
}
