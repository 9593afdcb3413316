//! English verb and noun inflection.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

/// Target form for [`conjugate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerbForm {
    Base,
    /// he/she/it present: "has", "walks"
    Present3sg,
    /// other persons, present: "have", "walk"
    PresentNon3sg,
    Past,
    PastParticiple,
    /// "eating"; the progressive after a "be" auxiliary
    PresentParticiple,
}

// base, past, past participle
const IRREGULAR: &[(&str, &str, &str)] = &[
    ("arise", "arose", "arisen"),
    ("awake", "awoke", "awoken"),
    ("be", "was", "been"),
    ("bear", "bore", "born"),
    ("beat", "beat", "beaten"),
    ("become", "became", "become"),
    ("begin", "began", "begun"),
    ("bend", "bent", "bent"),
    ("bet", "bet", "bet"),
    ("bind", "bound", "bound"),
    ("bite", "bit", "bitten"),
    ("bleed", "bled", "bled"),
    ("blow", "blew", "blown"),
    ("break", "broke", "broken"),
    ("breed", "bred", "bred"),
    ("bring", "brought", "brought"),
    ("build", "built", "built"),
    ("burn", "burnt", "burnt"),
    ("buy", "bought", "bought"),
    ("catch", "caught", "caught"),
    ("choose", "chose", "chosen"),
    ("cling", "clung", "clung"),
    ("come", "came", "come"),
    ("cost", "cost", "cost"),
    ("creep", "crept", "crept"),
    ("cut", "cut", "cut"),
    ("deal", "dealt", "dealt"),
    ("dig", "dug", "dug"),
    ("do", "did", "done"),
    ("draw", "drew", "drawn"),
    ("dream", "dreamt", "dreamt"),
    ("drink", "drank", "drunk"),
    ("drive", "drove", "driven"),
    ("eat", "ate", "eaten"),
    ("fall", "fell", "fallen"),
    ("feed", "fed", "fed"),
    ("feel", "felt", "felt"),
    ("fight", "fought", "fought"),
    ("find", "found", "found"),
    ("fit", "fit", "fit"),
    ("flee", "fled", "fled"),
    ("fling", "flung", "flung"),
    ("fly", "flew", "flown"),
    ("forbid", "forbade", "forbidden"),
    ("forget", "forgot", "forgotten"),
    ("forgive", "forgave", "forgiven"),
    ("freeze", "froze", "frozen"),
    ("get", "got", "gotten"),
    ("give", "gave", "given"),
    ("go", "went", "gone"),
    ("grind", "ground", "ground"),
    ("grow", "grew", "grown"),
    ("hang", "hung", "hung"),
    ("have", "had", "had"),
    ("hear", "heard", "heard"),
    ("hide", "hid", "hidden"),
    ("hit", "hit", "hit"),
    ("hold", "held", "held"),
    ("hurt", "hurt", "hurt"),
    ("keep", "kept", "kept"),
    ("kneel", "knelt", "knelt"),
    ("know", "knew", "known"),
    ("lay", "laid", "laid"),
    ("lead", "led", "led"),
    ("lean", "leant", "leant"),
    ("leap", "leapt", "leapt"),
    ("learn", "learnt", "learnt"),
    ("leave", "left", "left"),
    ("lend", "lent", "lent"),
    ("let", "let", "let"),
    ("lie", "lay", "lain"),
    ("light", "lit", "lit"),
    ("lose", "lost", "lost"),
    ("make", "made", "made"),
    ("mean", "meant", "meant"),
    ("meet", "met", "met"),
    ("pay", "paid", "paid"),
    ("put", "put", "put"),
    ("quit", "quit", "quit"),
    ("read", "read", "read"),
    ("ride", "rode", "ridden"),
    ("ring", "rang", "rung"),
    ("rise", "rose", "risen"),
    ("run", "ran", "run"),
    ("say", "said", "said"),
    ("see", "saw", "seen"),
    ("seek", "sought", "sought"),
    ("sell", "sold", "sold"),
    ("send", "sent", "sent"),
    ("set", "set", "set"),
    ("shake", "shook", "shaken"),
    ("shine", "shone", "shone"),
    ("shoot", "shot", "shot"),
    ("show", "showed", "shown"),
    ("shrink", "shrank", "shrunk"),
    ("shut", "shut", "shut"),
    ("sing", "sang", "sung"),
    ("sink", "sank", "sunk"),
    ("sit", "sat", "sat"),
    ("sleep", "slept", "slept"),
    ("slide", "slid", "slid"),
    ("speak", "spoke", "spoken"),
    ("spend", "spent", "spent"),
    ("spin", "spun", "spun"),
    ("spread", "spread", "spread"),
    ("spring", "sprang", "sprung"),
    ("stand", "stood", "stood"),
    ("steal", "stole", "stolen"),
    ("stick", "stuck", "stuck"),
    ("sting", "stung", "stung"),
    ("strike", "struck", "struck"),
    ("swear", "swore", "sworn"),
    ("sweep", "swept", "swept"),
    ("swim", "swam", "swum"),
    ("swing", "swung", "swung"),
    ("take", "took", "taken"),
    ("teach", "taught", "taught"),
    ("tear", "tore", "torn"),
    ("tell", "told", "told"),
    ("think", "thought", "thought"),
    ("throw", "threw", "thrown"),
    ("understand", "understood", "understood"),
    ("wake", "woke", "woken"),
    ("wear", "wore", "worn"),
    ("weep", "wept", "wept"),
    ("win", "won", "won"),
    ("wind", "wound", "wound"),
    ("write", "wrote", "written"),
];

const REGULAR_VERBS: &[&str] = &[
    "act", "add", "allow", "answer", "appear", "arrive", "ask", "attach", "attack", "bake", "balance",
    "bark", "bathe", "belong", "bike", "blend", "block", "board", "boil", "bounce", "bow", "brush",
    "call", "camp", "care", "carry", "celebrate", "chase", "cheer", "chew", "circle", "clap",
    "clean", "climb", "close", "collect", "comb", "compete", "contain", "cook", "count", "cover",
    "crawl", "cross", "crowd", "cry", "dance", "decorate", "deliver", "dive", "drag", "dress",
    "drop", "dry", "dump", "enjoy", "enter", "escape", "face", "fill", "film", "finish", "fish",
    "fix", "float", "flip", "flow", "fold", "follow", "gather", "gaze", "glance", "glow", "graze",
    "greet", "grill", "guard", "guess", "hand", "happen", "hate", "head", "help", "hike", "hop",
    "hope", "hover", "hug", "hunt", "hurry", "jog", "join", "joke", "juggle", "jump", "kick",
    "kiss", "knock", "land", "laugh", "launch", "lick", "lift", "like", "line", "list",
    "listen", "live", "load", "lock", "look", "love", "march", "mark", "milk", "miss", "mix",
    "move", "need", "nod", "note", "obey", "offer", "open", "order", "own", "pack", "paddle",
    "paint", "park", "pass", "pause", "pedal", "peel", "perform", "pet", "pick", "pitch", "place",
    "plan", "plant", "play", "point", "polish", "pose", "pour", "pray", "prepare", "present",
    "press", "pretend", "print", "pull", "pump", "punch", "push", "race", "rain", "reach",
    "relax", "remember", "repair", "rest", "return", "roar", "roll", "row", "rub", "rush", "sail",
    "save", "scare", "scream", "serve", "share", "shave", "shop", "shout", "sign", "skate",
    "skateboard", "ski", "skip", "slice", "smell", "smile", "smoke", "sneeze", "sniff", "snow",
    "snowboard", "sort", "splash", "spray", "squeeze", "stack", "stare", "start", "stay", "step",
    "stir", "stop", "stretch", "study", "surf", "surround", "swallow", "talk", "taste", "text",
    "thank", "tie", "touch", "tour", "tow", "trace", "train", "travel", "trick", "trim", "trot",
    "try", "turn", "type", "use", "vacuum", "visit", "wait", "walk", "want", "wash", "watch",
    "water", "wave", "weigh", "whisper", "wink", "wipe", "wish", "work", "worry", "wrap", "yawn",
    "yell", "zip",
];

const MODALS: &[&str] = &["will", "would", "can", "could", "may", "might", "shall", "should", "must"];

// singular, plural
const IRREGULAR_NOUNS: &[(&str, &str)] = &[
    ("person", "people"),
    ("man", "men"),
    ("woman", "women"),
    ("child", "children"),
    ("foot", "feet"),
    ("tooth", "teeth"),
    ("mouse", "mice"),
    ("goose", "geese"),
    ("ox", "oxen"),
    ("sheep", "sheep"),
    ("deer", "deer"),
    ("fish", "fish"),
    ("knife", "knives"),
    ("leaf", "leaves"),
    ("wolf", "wolves"),
    ("shelf", "shelves"),
    ("loaf", "loaves"),
    ("half", "halves"),
    ("life", "lives"),
    ("wife", "wives"),
    ("scarf", "scarves"),
    ("policeman", "policemen"),
    ("fireman", "firemen"),
    ("bus", "buses"),
    ("glass", "glasses"),
    ("dress", "dresses"),
    ("cactus", "cacti"),
    ("tomato", "tomatoes"),
    ("potato", "potatoes"),
];

/// Verbs whose final consonant doubles despite having two syllables.
const DOUBLING_EXCEPTIONS: &[&str] = &["begin", "forget", "admit", "commit", "prefer", "refer", "occur", "permit"];

struct Tables {
    by_base: HashMap<&'static str, (&'static str, &'static str)>,
    by_inflected: HashMap<&'static str, &'static str>,
    regular: HashSet<&'static str>,
    plural_of: HashMap<&'static str, &'static str>,
    singular_of: HashMap<&'static str, &'static str>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut by_base = HashMap::new();
        let mut by_inflected = HashMap::new();
        for &(base, past, pp) in IRREGULAR {
            by_base.insert(base, (past, pp));
            by_inflected.entry(past).or_insert(base);
            by_inflected.entry(pp).or_insert(base);
        }
        for (form, base) in [
            ("is", "be"),
            ("am", "be"),
            ("are", "be"),
            ("were", "be"),
            ("being", "be"),
            ("has", "have"),
            ("does", "do"),
            ("goes", "go"),
        ] {
            by_inflected.insert(form, base);
        }
        let regular = REGULAR_VERBS.iter().copied().filter(|v| !v.contains(' ')).collect();
        let mut plural_of = HashMap::new();
        let mut singular_of = HashMap::new();
        for &(s, p) in IRREGULAR_NOUNS {
            plural_of.insert(s, p);
            singular_of.insert(p, s);
        }
        Tables {
            by_base,
            by_inflected,
            regular,
            plural_of,
            singular_of,
        }
    })
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn vowel_groups(word: &str) -> usize {
    let mut groups = 0;
    let mut prev = false;
    for c in word.chars() {
        let v = is_vowel(c);
        if v && !prev {
            groups += 1;
        }
        prev = v;
    }
    groups
}

/// Consonant-vowel-consonant ending on a single stressed syllable: "sit", "stop".
fn doubles_final(word: &str) -> bool {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    if n < 3 {
        return false;
    }
    let (a, b, c) = (chars[n - 3], chars[n - 2], chars[n - 1]);
    let cvc = !is_vowel(a) && is_vowel(b) && !is_vowel(c) && !matches!(c, 'w' | 'x' | 'y');
    cvc && (vowel_groups(word) == 1 || DOUBLING_EXCEPTIONS.contains(&word))
}

pub fn is_modal(word: &str) -> bool {
    MODALS.contains(&word.to_lowercase().as_str())
}

pub fn is_be(word: &str) -> bool {
    matches!(
        word.to_lowercase().as_str(),
        "be" | "am" | "is" | "are" | "was" | "were" | "been" | "being"
    )
}

pub fn is_do(word: &str) -> bool {
    matches!(word.to_lowercase().as_str(), "do" | "does" | "did")
}

pub fn is_have(word: &str) -> bool {
    matches!(word.to_lowercase().as_str(), "have" | "has" | "had")
}

pub fn is_get(word: &str) -> bool {
    matches!(word.to_lowercase().as_str(), "get" | "gets" | "got" | "gotten" | "getting")
}

/// Known base form (irregular table or regular verb list).
pub fn is_known_verb(base: &str) -> bool {
    let t = tables();
    t.by_base.contains_key(base) || t.regular.contains(base)
}

/// Irregular-table lookup for an inflected form: `"got"` -> `"get"`.
pub fn irregular_base(form: &str) -> Option<&'static str> {
    tables().by_inflected.get(form).copied()
}

pub fn irregular_past(base: &str) -> Option<&'static str> {
    tables().by_base.get(base).map(|(p, _)| *p)
}

pub fn irregular_participle(base: &str) -> Option<&'static str> {
    tables().by_base.get(base).map(|(_, pp)| *pp)
}

fn third_singular(base: &str) -> String {
    match base {
        "be" => return "is".into(),
        "have" => return "has".into(),
        _ => {}
    }
    if base.ends_with('s')
        || base.ends_with('x')
        || base.ends_with('z')
        || base.ends_with("ch")
        || base.ends_with("sh")
        || base.ends_with('o')
    {
        format!("{base}es")
    } else if ends_consonant_y(base) {
        format!("{}ies", &base[..base.len() - 1])
    } else {
        format!("{base}s")
    }
}

fn ends_consonant_y(word: &str) -> bool {
    let chars: Vec<char> = word.chars().collect();
    chars.len() >= 2 && chars[chars.len() - 1] == 'y' && !is_vowel(chars[chars.len() - 2])
}

fn regular_past(base: &str) -> String {
    if base.ends_with('e') {
        format!("{base}d")
    } else if ends_consonant_y(base) {
        format!("{}ied", &base[..base.len() - 1])
    } else if doubles_final(base) {
        let last = base.chars().last().expect("non-empty");
        format!("{base}{last}ed")
    } else {
        format!("{base}ed")
    }
}

fn present_participle(base: &str) -> String {
    if base == "be" {
        return "being".into();
    }
    if let Some(stem) = base.strip_suffix("ie") {
        return format!("{stem}ying");
    }
    if base.ends_with('e') && !base.ends_with("ee") && !base.ends_with("ye") && !base.ends_with("oe") && base.len() > 2 {
        return format!("{}ing", &base[..base.len() - 1]);
    }
    if doubles_final(base) {
        let last = base.chars().last().expect("non-empty");
        return format!("{base}{last}ing");
    }
    format!("{base}ing")
}

fn restore_case(template: &str, word: String) -> String {
    if template.chars().next().is_some_and(char::is_uppercase) {
        capitalize(&word)
    } else {
        word
    }
}

pub fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Inflects `verb` (any form) into `form`, using the irregular lexicon and
/// falling back to regular suffix rules.
pub fn conjugate(verb: &str, form: VerbForm) -> String {
    let lower = verb.to_lowercase();
    let base = lemmatize(&lower);
    let out = match form {
        VerbForm::Base => base,
        VerbForm::Present3sg => third_singular(&base),
        VerbForm::PresentNon3sg => {
            if base == "be" {
                "are".into()
            } else {
                base
            }
        }
        VerbForm::Past => irregular_past(&base).map(String::from).unwrap_or_else(|| regular_past(&base)),
        VerbForm::PastParticiple => irregular_participle(&base)
            .map(String::from)
            .unwrap_or_else(|| regular_past(&base)),
        VerbForm::PresentParticiple => present_participle(&base),
    };
    restore_case(verb, out)
}

/// Base form of a verb. Unknown words pass through suffix stripping that
/// prefers stems found in the verb lexicon.
pub fn lemmatize(word: &str) -> String {
    let w = word.to_lowercase();
    if is_known_verb(&w) {
        return w;
    }
    if let Some(base) = irregular_base(&w) {
        return base.to_string();
    }
    let candidates = |stem: &str| -> Vec<String> {
        let mut c = vec![stem.to_string(), format!("{stem}e")];
        let chars: Vec<char> = stem.chars().collect();
        if chars.len() >= 2 && chars[chars.len() - 1] == chars[chars.len() - 2] {
            c.push(chars[..chars.len() - 1].iter().collect());
        }
        c
    };
    let pick = |cands: Vec<String>, fallback: String| -> String {
        cands.into_iter().find(|c| is_known_verb(c)).unwrap_or(fallback)
    };
    if let Some(stem) = w.strip_suffix("ying") {
        if is_known_verb(&format!("{stem}ie")) {
            return format!("{stem}ie");
        }
    }
    if let Some(stem) = w.strip_suffix("ing") {
        if stem.len() >= 2 {
            return pick(candidates(stem), stem.to_string());
        }
    }
    if let Some(stem) = w.strip_suffix("ied") {
        return format!("{stem}y");
    }
    if let Some(stem) = w.strip_suffix("ed") {
        if stem.len() >= 2 {
            let fallback = if w.ends_with("eed") { w[..w.len() - 1].to_string() } else { stem.to_string() };
            return pick(candidates(stem), fallback);
        }
    }
    if let Some(stem) = w.strip_suffix("ies") {
        return format!("{stem}y");
    }
    if let Some(stem) = w.strip_suffix("es") {
        if is_known_verb(stem) {
            return stem.to_string();
        }
    }
    if let Some(stem) = w.strip_suffix('s') {
        if !w.ends_with("ss") && stem.len() >= 2 {
            return stem.to_string();
        }
    }
    w
}

/// Grammatical number of an answer read as a count.
pub fn count_is_singular(answer: &str) -> bool {
    matches!(answer.trim().to_lowercase().as_str(), "1" | "one" | "a" | "an")
}

pub fn pluralize(noun: &str) -> String {
    let lower = noun.to_lowercase();
    let t = tables();
    if let Some(p) = t.plural_of.get(lower.as_str()) {
        return restore_case(noun, (*p).to_string());
    }
    if t.singular_of.contains_key(lower.as_str()) {
        return noun.to_string();
    }
    let out = if lower.ends_with('s')
        || lower.ends_with('x')
        || lower.ends_with('z')
        || lower.ends_with("ch")
        || lower.ends_with("sh")
    {
        format!("{lower}es")
    } else if ends_consonant_y(&lower) {
        format!("{}ies", &lower[..lower.len() - 1])
    } else {
        format!("{lower}s")
    };
    restore_case(noun, out)
}

pub fn singularize(noun: &str) -> String {
    let lower = noun.to_lowercase();
    let t = tables();
    if let Some(s) = t.singular_of.get(lower.as_str()) {
        return restore_case(noun, (*s).to_string());
    }
    if t.plural_of.contains_key(lower.as_str()) {
        return noun.to_string();
    }
    let out = if let Some(stem) = lower.strip_suffix("ies") {
        format!("{stem}y")
    } else if ["ses", "xes", "zes", "ches", "shes"].iter().any(|s| lower.ends_with(s)) {
        lower[..lower.len() - 2].to_string()
    } else if lower.ends_with('s') && !lower.ends_with("ss") && !lower.ends_with("us") && !lower.ends_with("is") {
        lower[..lower.len() - 1].to_string()
    } else {
        lower
    };
    restore_case(noun, out)
}

/// Whether `word` looks like a plural of a noun: irregular table or a
/// `-s` ending that [`singularize`] strips.
pub fn looks_plural(word: &str) -> bool {
    let lower = word.to_lowercase();
    if tables().singular_of.contains_key(lower.as_str()) {
        return true;
    }
    singularize(&lower) != lower
}
