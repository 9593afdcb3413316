//! Rule table: declarative patterns over tagged question tokens and the
//! rewrite templates applied when they match.
//!
//! Pattern elements are whitespace separated:
//!
//! * `"how"` or `"is"|"are"`: literal words (case-insensitive)
//! * `VB*`, `JJ|NN*`, `PRP$`: tag globs
//! * `NP`, `VG`, `TAIL`, `ANY`: chunks (noun phrase, verb group, verb-free
//!   remainder, anything)
//! * a `NAME=` prefix captures the span, a `...` suffix lets a single-token
//!   element absorb everything after it, and a `?` suffix makes it optional.
//!
//! Templates are sequences of capture names, `"literals"`, `ans`, and the
//! directives `ans(X)`, `conjug(X,tense(Y))`, `negate(X)`, `agree(X)`, `num(X)`.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::Deserialize;

use super::pos::PosTag;
use super::{ConvertError, QType};

const BUILTIN_RULES: &str = include_str!("rules.toml");

#[derive(Debug, Clone, PartialEq)]
struct TagGlob {
    prefix: String,
    wildcard: bool,
}

impl TagGlob {
    fn parse(s: &str) -> Result<Self, ConvertError> {
        let (prefix, wildcard) = match s.strip_suffix('*') {
            Some(p) => (p, true),
            None => (s, false),
        };
        let known = PosTag::ALL.iter().any(|t| {
            if wildcard {
                t.as_str().starts_with(prefix)
            } else {
                t.as_str() == prefix
            }
        });
        if prefix.is_empty() || !known {
            return Err(ConvertError::RuleTable(format!("tag pattern {s:?} matches no tag")));
        }
        Ok(Self {
            prefix: prefix.to_string(),
            wildcard,
        })
    }

    fn matches(&self, tag: PosTag) -> bool {
        if self.wildcard {
            tag.as_str().starts_with(&self.prefix)
        } else {
            tag.as_str() == self.prefix
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Alt {
    Word(String),
    Tag(TagGlob),
}

#[derive(Debug, Clone, PartialEq)]
enum Atom {
    Token(Vec<Alt>),
    NounPhrase,
    VerbGroup,
    Tail,
    Any,
}

#[derive(Debug, Clone, PartialEq)]
struct Element {
    capture: Option<String>,
    atom: Atom,
    rest: bool,
    optional: bool,
}

/// Captured spans, in pattern order. Skipped optional elements are absent.
pub type Captures = Vec<(String, Range<usize>)>;

#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    source: String,
    elements: Vec<Element>,
}

fn is_capture_name(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_uppercase())
        && chars.all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

impl Pattern {
    pub fn parse(source: &str) -> Result<Self, ConvertError> {
        let mut elements = Vec::new();
        for raw in source.split_whitespace() {
            let mut body = raw;
            let mut capture = None;
            if let Some((name, rhs)) = raw.split_once('=') {
                if !is_capture_name(name) {
                    return Err(ConvertError::RuleTable(format!("bad capture name {name:?} in {raw:?}")));
                }
                capture = Some(name.to_string());
                body = rhs;
            }
            let optional = body.ends_with('?');
            let body = body.strip_suffix('?').unwrap_or(body);
            let rest = body.ends_with("...");
            let body = body.strip_suffix("...").unwrap_or(body);
            let atom = match body {
                "NP" => Atom::NounPhrase,
                "VG" => Atom::VerbGroup,
                "TAIL" => Atom::Tail,
                "ANY" => Atom::Any,
                "" => return Err(ConvertError::RuleTable(format!("empty element {raw:?}"))),
                alts => Atom::Token(
                    alts.split('|')
                        .map(|a| match a.strip_prefix('"').and_then(|a| a.strip_suffix('"')) {
                            Some(word) if !word.is_empty() => Ok(Alt::Word(word.to_lowercase())),
                            Some(_) => Err(ConvertError::RuleTable(format!("empty literal in {raw:?}"))),
                            None => TagGlob::parse(a).map(Alt::Tag),
                        })
                        .collect::<Result<_, _>>()?,
                ),
            };
            if rest && !matches!(atom, Atom::Token(_)) {
                return Err(ConvertError::RuleTable(format!("'...' only applies to single tokens: {raw:?}")));
            }
            elements.push(Element {
                capture,
                atom,
                rest,
                optional,
            });
        }
        if elements.is_empty() {
            return Err(ConvertError::RuleTable("empty pattern".into()));
        }
        let mut seen = BTreeSet::new();
        for name in elements.iter().filter_map(|e| e.capture.as_deref()) {
            if !seen.insert(name) {
                return Err(ConvertError::RuleTable(format!("capture {name} defined twice in {source:?}")));
            }
        }
        Ok(Self {
            source: source.to_string(),
            elements,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn capture_names(&self) -> BTreeSet<&str> {
        self.elements.iter().filter_map(|e| e.capture.as_deref()).collect()
    }

    /// Anchored match over the whole token list. Returns the first
    /// assignment found by longest-first backtracking.
    pub fn match_tokens(&self, words: &[String], tags: &[PosTag]) -> Option<Captures> {
        debug_assert_eq!(words.len(), tags.len());
        let seq = TaggedSeq { words, tags };
        let mut caps = Vec::new();
        self.search(0, 0, &seq, &mut caps).then_some(caps)
    }

    fn search(&self, ei: usize, pos: usize, seq: &TaggedSeq<'_>, caps: &mut Captures) -> bool {
        let Some(el) = self.elements.get(ei) else {
            return pos == seq.len();
        };
        for end in seq.candidate_ends(el, pos) {
            if let Some(name) = &el.capture {
                caps.push((name.clone(), pos..end));
            }
            if self.search(ei + 1, end, seq, caps) {
                return true;
            }
            if el.capture.is_some() {
                caps.pop();
            }
        }
        el.optional && self.search(ei + 1, pos, seq, caps)
    }
}

struct TaggedSeq<'a> {
    words: &'a [String],
    tags: &'a [PosTag],
}

const DEMONSTRATIVES: &[&str] = &["this", "that", "these", "those"];

impl TaggedSeq<'_> {
    fn len(&self) -> usize {
        self.words.len()
    }

    fn alt_matches(&self, alts: &[Alt], i: usize) -> bool {
        alts.iter().any(|a| match a {
            Alt::Word(w) => self.words[i].eq_ignore_ascii_case(w),
            Alt::Tag(g) => g.matches(self.tags[i]),
        })
    }

    /// End positions (exclusive) the element may consume from `pos`, most
    /// preferred first.
    fn candidate_ends(&self, el: &Element, pos: usize) -> Vec<usize> {
        let n = self.len();
        match &el.atom {
            Atom::Token(alts) => {
                if pos >= n || !self.alt_matches(alts, pos) {
                    Vec::new()
                } else if el.rest {
                    (pos + 1..=n).rev().collect()
                } else {
                    vec![pos + 1]
                }
            }
            Atom::NounPhrase => self.np_ends(pos),
            Atom::VerbGroup => self.vg_ends(pos),
            Atom::Tail => {
                let stop = (pos..n)
                    .find(|&i| self.tags[i].is_verb() || self.tags[i] == PosTag::MD)
                    .unwrap_or(n);
                (pos..=stop).rev().collect()
            }
            Atom::Any => (pos..=n).rev().collect(),
        }
    }

    fn base_np_ends(&self, pos: usize) -> Vec<usize> {
        let n = self.len();
        if pos >= n {
            return Vec::new();
        }
        let tag = self.tags[pos];
        let word = self.words[pos].to_lowercase();
        let mut ends = Vec::new();
        if matches!(tag, PosTag::PRP | PosTag::EX) || DEMONSTRATIVES.contains(&word.as_str()) {
            ends.push(pos + 1);
        }
        if !matches!(tag, PosTag::PRP | PosTag::EX) {
            let mut i = pos;
            if matches!(tag, PosTag::DT | PosTag::PRPS | PosTag::PDT) {
                i += 1;
            }
            while i < n {
                let t = self.tags[i];
                let modifier = t.is_noun()
                    || t.is_adjective()
                    || matches!(t, PosTag::CD | PosTag::VBG | PosTag::VBN);
                if modifier {
                    if t.is_noun() {
                        ends.push(i + 1);
                    }
                    i += 1;
                } else if t == PosTag::POS && i > pos && self.tags[i - 1].is_noun() {
                    i += 1;
                } else {
                    break;
                }
            }
        }
        ends.sort_unstable_by(|a, b| b.cmp(a));
        ends.dedup();
        ends
    }

    fn np_ends(&self, pos: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for end in self.base_np_ends(pos) {
            if end < self.len() && self.tags[end] == PosTag::IN {
                for pp_end in self.np_ends(end + 1) {
                    out.push(pp_end);
                }
            }
            out.push(end);
        }
        out.sort_unstable_by(|a, b| b.cmp(a));
        out.dedup();
        out
    }

    fn vg_ends(&self, pos: usize) -> Vec<usize> {
        let n = self.len();
        let verbal = |t: PosTag| t.is_verb() || t == PosTag::MD;
        if pos >= n || !verbal(self.tags[pos]) {
            return Vec::new();
        }
        let mut ends = Vec::new();
        let mut i = pos;
        while i < n && (verbal(self.tags[i]) || self.tags[i] == PosTag::RB) {
            if verbal(self.tags[i]) {
                ends.push(i + 1);
            }
            i += 1;
        }
        ends.reverse();
        ends
    }
}

/// One node of a rewrite template.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Capture(String),
    Literal(String),
    Answer,
    /// `ans(X)`: the answer fills the gap left at the end of `X`.
    AnswerGap(String),
    /// `conjug(X,tense(Y))`
    Conjugate(Box<Expr>, String),
    Negate(Box<Expr>),
    Agree(Box<Expr>),
    Number(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    source: String,
    items: Vec<Expr>,
}

impl Template {
    pub fn parse(source: &str) -> Result<Self, ConvertError> {
        let mut p = TemplateParser {
            src: source,
            chars: source.char_indices().collect(),
            at: 0,
        };
        let mut items = Vec::new();
        loop {
            p.skip_separators();
            if p.at >= p.chars.len() {
                break;
            }
            items.push(p.expr()?);
        }
        if items.is_empty() {
            return Err(ConvertError::RuleTable("empty template".into()));
        }
        Ok(Self {
            source: source.to_string(),
            items,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn items(&self) -> &[Expr] {
        &self.items
    }

    fn references(&self) -> BTreeSet<&str> {
        fn walk<'a>(e: &'a Expr, out: &mut BTreeSet<&'a str>) {
            match e {
                Expr::Capture(n) | Expr::AnswerGap(n) => {
                    out.insert(n);
                }
                Expr::Conjugate(x, t) => {
                    out.insert(t);
                    walk(x, out);
                }
                Expr::Negate(x) | Expr::Agree(x) | Expr::Number(x) => walk(x, out),
                Expr::Literal(_) | Expr::Answer => {}
            }
        }
        let mut out = BTreeSet::new();
        for e in &self.items {
            walk(e, &mut out);
        }
        out
    }

    fn uses_answer(&self) -> bool {
        fn walk(e: &Expr) -> bool {
            match e {
                Expr::Answer | Expr::AnswerGap(_) => true,
                Expr::Conjugate(x, _) | Expr::Negate(x) | Expr::Agree(x) | Expr::Number(x) => walk(x),
                Expr::Capture(_) | Expr::Literal(_) => false,
            }
        }
        self.items.iter().any(walk)
    }
}

struct TemplateParser<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    at: usize,
}

impl TemplateParser<'_> {
    fn err(&self, what: &str) -> ConvertError {
        ConvertError::RuleTable(format!("{what} at offset {} in template {:?}", self.at, self.src))
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.at).map(|&(_, c)| c)
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace() || c == '+') {
            self.at += 1;
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.at += 1;
        }
    }

    fn expect(&mut self, want: char) -> Result<(), ConvertError> {
        self.skip_ws();
        if self.peek() == Some(want) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected {want:?}")))
        }
    }

    fn ident(&mut self) -> Result<String, ConvertError> {
        self.skip_ws();
        let start = self.at;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.at += 1;
        }
        if start == self.at {
            return Err(self.err("expected a name"));
        }
        Ok(self.chars[start..self.at].iter().map(|&(_, c)| c).collect())
    }

    fn capture_arg(&mut self) -> Result<String, ConvertError> {
        let name = self.ident()?;
        if !is_capture_name(&name) {
            return Err(self.err(&format!("{name:?} is not a capture name")));
        }
        Ok(name)
    }

    fn expr(&mut self) -> Result<Expr, ConvertError> {
        self.skip_ws();
        if self.peek() == Some('"') {
            self.at += 1;
            let start = self.at;
            while matches!(self.peek(), Some(c) if c != '"') {
                self.at += 1;
            }
            if self.peek().is_none() {
                return Err(self.err("unterminated literal"));
            }
            let text: String = self.chars[start..self.at].iter().map(|&(_, c)| c).collect();
            self.at += 1;
            if text.trim().is_empty() {
                return Err(self.err("empty literal"));
            }
            return Ok(Expr::Literal(text));
        }
        let name = self.ident()?;
        self.skip_ws();
        let call = self.peek() == Some('(');
        if !call {
            return match name.as_str() {
                "ans" => Ok(Expr::Answer),
                n if is_capture_name(n) => Ok(Expr::Capture(name)),
                n => Err(self.err(&format!("{n:?} is neither a capture nor a bare directive"))),
            };
        }
        self.at += 1;
        let expr = match name.as_str() {
            "ans" => Expr::AnswerGap(self.capture_arg()?),
            "conjug" => {
                let target = self.expr()?;
                self.expect(',')?;
                if self.ident()? != "tense" {
                    return Err(self.err("conjug takes tense(CAPTURE) as its second argument"));
                }
                self.expect('(')?;
                let source = self.capture_arg()?;
                self.expect(')')?;
                Expr::Conjugate(Box::new(target), source)
            }
            "negate" => Expr::Negate(Box::new(self.expr()?)),
            "agree" => Expr::Agree(Box::new(self.expr()?)),
            "num" => Expr::Number(Box::new(self.expr()?)),
            other => return Err(self.err(&format!("unknown directive {other:?}"))),
        };
        self.expect(')')?;
        Ok(expr)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleBody {
    Template(Template),
    /// Yes/no rules rewrite differently for affirmative and negative answers.
    Polar { affirm: Template, deny: Template },
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleExample {
    pub question: String,
    pub answer: String,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: String,
    pub qtype: QType,
    pub pattern: Pattern,
    pub body: RuleBody,
    pub examples: Vec<RuleExample>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    name: String,
    qtype: QType,
    pattern: String,
    template: Option<String>,
    affirm: Option<String>,
    deny: Option<String>,
    #[serde(default)]
    example: Vec<RuleExample>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    rule: Vec<RawRule>,
}

impl Rule {
    fn from_raw(raw: RawRule) -> Result<Self, ConvertError> {
        let ctx = |e: ConvertError| ConvertError::RuleTable(format!("rule {:?}: {e}", raw.name));
        let pattern = Pattern::parse(&raw.pattern).map_err(ctx)?;
        let body = match (raw.qtype, &raw.template, &raw.affirm, &raw.deny) {
            (QType::YesNo, None, Some(a), Some(d)) => RuleBody::Polar {
                affirm: Template::parse(a).map_err(ctx)?,
                deny: Template::parse(d).map_err(ctx)?,
            },
            (QType::YesNo, ..) => return Err(ctx(ConvertError::RuleTable("yes/no rules need affirm and deny".into()))),
            (_, Some(t), None, None) => RuleBody::Template(Template::parse(t).map_err(ctx)?),
            _ => return Err(ctx(ConvertError::RuleTable("rules other than yes/no need exactly one template".into()))),
        };
        let defined = pattern.capture_names();
        let templates: Vec<&Template> = match &body {
            RuleBody::Template(t) => vec![t],
            RuleBody::Polar { affirm, deny } => vec![affirm, deny],
        };
        for t in &templates {
            if let Some(missing) = t.references().into_iter().find(|r| !defined.contains(r)) {
                return Err(ctx(ConvertError::RuleTable(format!("template uses undefined capture {missing}"))));
            }
            if raw.qtype != QType::YesNo && !t.uses_answer() {
                return Err(ctx(ConvertError::RuleTable("template never inserts the answer".into())));
            }
        }
        Ok(Rule {
            name: raw.name,
            qtype: raw.qtype,
            pattern,
            body,
            examples: raw.example,
        })
    }
}

/// Ordered rules; the first one whose qtype and pattern match wins.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleTable {
    rules: Vec<Rule>,
}

impl Default for RuleTable {
    fn default() -> Self {
        Self::builtin()
    }
}

impl RuleTable {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN_RULES).expect("builtin rule table parses")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConvertError> {
        let raw: RawTable = toml::from_str(text).map_err(|e| ConvertError::RuleTable(e.to_string()))?;
        let rules = raw.rule.into_iter().map(Rule::from_raw).collect::<Result<Vec<_>, _>>()?;
        let mut names = BTreeSet::new();
        for r in &rules {
            if !names.insert(r.name.as_str()) {
                return Err(ConvertError::RuleTable(format!("duplicate rule name {:?}", r.name)));
            }
        }
        Ok(Self { rules })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConvertError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConvertError::RuleTable(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// First matching rule and its captures. Each rule is tried once.
    pub fn find(&self, qtype: QType, words: &[String], tags: &[PosTag]) -> Option<(&Rule, Captures)> {
        self.rules
            .iter()
            .filter(|r| r.qtype == qtype)
            .find_map(|r| r.pattern.match_tokens(words, tags).map(|c| (r, c)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(spec: &str) -> (Vec<String>, Vec<PosTag>) {
        spec.split_whitespace()
            .map(|wt| {
                let (w, t) = wt.rsplit_once('/').unwrap();
                (w.to_string(), t.parse::<PosTag>().unwrap())
            })
            .unzip()
    }

    fn spans(p: &str, s: &str) -> Option<Vec<(String, String)>> {
        let (w, t) = seq(s);
        Pattern::parse(p).unwrap().match_tokens(&w, &t).map(|caps| {
            caps.into_iter()
                .map(|(n, r)| (n, w[r].join(" ")))
                .collect()
        })
    }

    fn pair(a: &str, b: &str) -> (String, String) {
        (a.to_string(), b.to_string())
    }

    #[test]
    fn noun_phrase_with_pp() {
        let got = spans("W=WP BE=VBZ NP=NP", "what/WP is/VBZ the/DT cup/NN on/IN the/DT table/NN").unwrap();
        assert_eq!(got[2], pair("NP", "the cup on the table"));
    }

    #[test]
    fn rest_suffix_and_optional() {
        let got = spans("V=VB* S=NP P=VB*|JJ*...", "did/VBD he/PRP get/VB hurt/VBN").unwrap();
        assert_eq!(got[2], pair("P", "get hurt"));
        let got = spans("\"how\" \"many\" N=NP X=EX?", "how/WRB many/JJ pens/NNS").unwrap();
        assert_eq!(got, vec![pair("N", "pens")]);
    }

    #[test]
    fn tail_refuses_verbs() {
        assert!(spans("W=WP V=VG T=TAIL", "what/WP is/VBZ the/DT man/NN eating/VBG").is_none());
        let got = spans("W=WP V=VG T=TAIL", "who/WP threw/VBD the/DT ball/NN").unwrap();
        assert_eq!(got[2], pair("T", "the ball"));
    }

    #[test]
    fn verb_group_prefers_longest() {
        let got = spans("N=NP V=VG T=TAIL", "hand/NN is/VBZ holding/VBG it/PRP").unwrap();
        assert_eq!(got[1], pair("V", "is holding"));
    }

    #[test]
    fn template_parsing() {
        let t = Template::parse("SUBJ negate(conjug(PRED, tense(VB1))) \"here\" ans(T)").unwrap();
        assert_eq!(t.items().len(), 4);
        assert!(matches!(&t.items()[1], Expr::Negate(inner) if matches!(**inner, Expr::Conjugate(_, ref s) if s == "VB1")));
        assert!(Template::parse("frobnicate(X)").is_err());
        assert!(Template::parse("conjug(X, past(Y))").is_err());
        assert!(Template::parse("negate(X").is_err());
        assert!(Template::parse("tense").is_err());
    }

    #[test]
    fn table_validation() {
        let bad_capture = r#"
            [[rule]]
            name = "r"
            qtype = "wh_other"
            pattern = "W=WP NP=NP"
            template = "NP MISSING ans"
        "#;
        assert!(RuleTable::from_toml(bad_capture).is_err());
        let polar_without_deny = r#"
            [[rule]]
            name = "r"
            qtype = "yes_no"
            pattern = "V=VB* NP=NP"
            affirm = "NP V"
        "#;
        assert!(RuleTable::from_toml(polar_without_deny).is_err());
        let no_answer = r#"
            [[rule]]
            name = "r"
            qtype = "wh_other"
            pattern = "W=WP NP=NP"
            template = "NP"
        "#;
        assert!(RuleTable::from_toml(no_answer).is_err());
    }

    #[test]
    fn builtin_table_loads() {
        let t = RuleTable::builtin();
        assert!(t.len() >= 12);
        assert!(t.rules().iter().all(|r| !r.examples.is_empty()));
    }
}
