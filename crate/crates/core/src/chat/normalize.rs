//! Main-tier normalization.
//!
//! Fillers (`&uh`, `&-um`) become plain words, retracing and repetition
//! markers vanish while the retraced words stay, `[: word]` replacements
//! substitute the preceding word or `<...>` group, events, pauses,
//! unintelligible material and other codes are removed. The output holds
//! only word tokens and `.`, `?`, `!`.

#[derive(Debug, Clone, PartialEq)]
enum Item {
    Word(String),
    Code(String),
    Open,
    Close,
    Pause,
}

fn lex(raw: &str) -> Vec<Item> {
    let mut items = Vec::new();
    let mut word = String::new();
    let mut chars = raw.chars().peekable();
    let mut in_bullet = false;
    let flush = |word: &mut String, items: &mut Vec<Item>| {
        if !word.is_empty() {
            items.push(Item::Word(std::mem::take(word)));
        }
    };
    while let Some(c) = chars.next() {
        if c == '\u{15}' {
            flush(&mut word, &mut items);
            in_bullet = !in_bullet;
            continue;
        }
        if in_bullet {
            continue;
        }
        match c {
            c if c.is_whitespace() => flush(&mut word, &mut items),
            '[' => {
                flush(&mut word, &mut items);
                let mut code = String::new();
                for d in chars.by_ref() {
                    if d == ']' {
                        break;
                    }
                    code.push(d);
                }
                items.push(Item::Code(code.trim().to_string()));
            }
            '<' => {
                flush(&mut word, &mut items);
                items.push(Item::Open);
            }
            '>' => {
                flush(&mut word, &mut items);
                items.push(Item::Close);
            }
            '(' if word.is_empty() && chars.peek() == Some(&'.') => {
                let mut dots = 0;
                while chars.peek() == Some(&'.') {
                    chars.next();
                    dots += 1;
                }
                if chars.peek() == Some(&')') {
                    chars.next();
                    items.push(Item::Pause);
                } else {
                    word.push('(');
                    word.extend(std::iter::repeat_n('.', dots));
                }
            }
            c => word.push(c),
        }
    }
    flush(&mut word, &mut items);
    items
}

/// Codes whose removal is expected; anything else is counted as a warning.
fn is_known_code(code: &str) -> bool {
    let known_prefix = ["/", "x ", "+", "*", "=", "%", "!", "?", "^", "<", ">", "- ", "#", "::"];
    code.is_empty() || known_prefix.iter().any(|p| code.starts_with(p))
}

fn is_punct(tok: &str) -> bool {
    matches!(tok, "." | "?" | "!")
}

/// Reduces one whitespace-delimited chunk to zero or more clean tokens.
fn clean_word(raw: &str, out: &mut Vec<String>) {
    if raw.starts_with("&=") || raw.starts_with("&+") || raw.starts_with("&*") || raw.starts_with("&~") {
        return;
    }
    let body = if let Some(rest) = raw.strip_prefix("&-") {
        rest
    } else if let Some(rest) = raw.strip_prefix('&') {
        rest
    } else if raw.starts_with('+') {
        // Utterance terminators such as `+...` and `+/.`; linkers are dropped.
        if let Some(last) = raw.chars().last().filter(|c| matches!(c, '.' | '?' | '!')) {
            out.push(if raw == "+..." || raw.ends_with("/.") {
                ".".into()
            } else {
                last.to_string()
            });
        }
        return;
    } else {
        raw
    };
    let body = body.split('@').next().unwrap_or("");

    let mut trailing = None;
    let mut stem = body;
    if let Some(last) = body.chars().last().filter(|c| matches!(c, '.' | '?' | '!')) {
        let trimmed = body.trim_end_matches(['.', '?', '!']);
        if trimmed.is_empty() {
            if body == "." || body == "?" || body == "!" {
                out.push(body.to_string());
            }
            return;
        }
        trailing = Some(last.to_string());
        stem = trimmed;
    }

    for piece in stem.split(['_', '+']) {
        let cleaned: String = piece
            .chars()
            .filter(|c| c.is_alphanumeric() || *c == '\'' || *c == '-')
            .collect();
        if !cleaned.chars().any(char::is_alphanumeric) {
            continue;
        }
        if matches!(cleaned.as_str(), "xxx" | "yyy" | "www") || cleaned.starts_with('0') {
            continue;
        }
        out.push(cleaned);
    }
    if let Some(p) = trailing {
        out.push(p);
    }
}

/// Normalizes a main-tier body, returning the clean text and the number of
/// unknown bracket codes that were dropped.
pub fn normalize_with_warnings(raw: &str) -> (String, usize) {
    let mut out: Vec<String> = Vec::new();
    let mut warnings = 0;
    let mut open_groups: Vec<usize> = Vec::new();
    // Output index where the most recently closed `<...>` group starts; a
    // replacement code right after it replaces the whole group.
    let mut closed_group: Option<usize> = None;
    let mut last_word_start: Option<usize> = None;

    for item in lex(raw) {
        match item {
            Item::Word(w) => {
                let start = out.len();
                clean_word(&w, &mut out);
                if out.len() > start && !out[start..].iter().all(|t| is_punct(t)) {
                    last_word_start = Some(start);
                }
                closed_group = None;
            }
            Item::Open => open_groups.push(out.len()),
            Item::Close => {
                closed_group = open_groups.pop();
            }
            Item::Pause => {}
            Item::Code(code) => {
                if let Some(rep) = code.strip_prefix(':').filter(|r| !r.starts_with(':')) {
                    let target = closed_group.or(last_word_start);
                    if let Some(start) = target {
                        out.truncate(start);
                    }
                    let start = out.len();
                    for w in rep.split_whitespace() {
                        clean_word(w, &mut out);
                    }
                    out.retain(|t| !t.is_empty());
                    last_word_start = (out.len() > start).then_some(start);
                    closed_group = None;
                } else if !is_known_code(&code) {
                    warnings += 1;
                }
            }
        }
    }
    (out.join(" "), warnings)
}

pub fn normalize_utterance(raw: &str) -> String {
    normalize_with_warnings(raw).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fillers_and_retracing() {
        assert_eq!(
            normalize_utterance("&uh the boy [//] the boy fell ."),
            "uh the boy the boy fell ."
        );
    }

    #[test]
    fn fragments_events_and_unintelligible() {
        assert_eq!(
            normalize_utterance("(be)cause xxx he laughed &=laughs ."),
            "because he laughed ."
        );
    }

    #[test]
    fn plain_text_is_identity() {
        assert_eq!(normalize_utterance("the window is open ."), "the window is open .");
    }

    #[test]
    fn dash_filler_and_pauses() {
        assert_eq!(normalize_utterance("&-um (.) the (..) sink (...) ."), "um the sink .");
    }

    #[test]
    fn angle_group_keeps_words() {
        assert_eq!(
            normalize_utterance("<the boy> [/] the boy is [x 3] falling ."),
            "the boy the boy is falling ."
        );
    }

    #[test]
    fn replacement_resolves() {
        assert_eq!(normalize_utterance("he goed [: went] out ."), "he went out .");
        assert_eq!(
            normalize_utterance("<a cooky> [: the cookie] jar ."),
            "the cookie jar ."
        );
    }

    #[test]
    fn postcodes_and_terminators() {
        assert_eq!(normalize_utterance("mhm [+ exc] +..."), "mhm .");
        assert_eq!(normalize_utterance("what is that +/?"), "what is that ?");
    }

    #[test]
    fn unknown_code_counts_warning() {
        let (clean, warnings) = normalize_with_warnings("the boy [qqq] fell .");
        assert_eq!(clean, "the boy fell .");
        assert_eq!(warnings, 1);
        assert_eq!(normalize_with_warnings("the boy [//] fell .").1, 0);
    }

    #[test]
    fn compounds_and_markers() {
        assert_eq!(
            normalize_utterance("cookie+jar wa:ter gonna@i ,"),
            "cookie jar water gonna"
        );
        assert_eq!(normalize_utterance("fell."), "fell .");
        assert_eq!(normalize_utterance("0is the boy ."), "the boy .");
    }

    fn chat_token() -> impl Strategy<Value = String> {
        prop_oneof![
            "[a-z]{1,8}".prop_map(|s| s),
            Just("&uh".to_string()),
            Just("&-um".to_string()),
            Just("&=laughs".to_string()),
            Just("[//]".to_string()),
            Just("[/]".to_string()),
            Just("[x 2]".to_string()),
            Just("[: word]".to_string()),
            Just("[+ exc]".to_string()),
            Just("[zz]".to_string()),
            Just("(.)".to_string()),
            Just("(...)".to_string()),
            Just("xxx".to_string()),
            Just("(be)cause".to_string()),
            Just("<".to_string()),
            Just(">".to_string()),
            Just(".".to_string()),
            Just("?".to_string()),
            Just("+...".to_string()),
            Just("that's".to_string()),
        ]
    }

    proptest! {
        #[test]
        fn idempotent_on_chat_tokens(toks in prop::collection::vec(chat_token(), 0..20)) {
            let once = normalize_utterance(&toks.join(" "));
            prop_assert_eq!(normalize_utterance(&once), once.clone());
        }

        #[test]
        fn idempotent_on_arbitrary_text(s in "\\PC{0,60}") {
            let once = normalize_utterance(&s);
            prop_assert_eq!(normalize_utterance(&once), once.clone());
        }

        #[test]
        fn filler_survives(toks in prop::collection::vec(chat_token(), 0..12), at in 0usize..12) {
            // Replacement codes legitimately rewrite the preceding word.
            let mut toks: Vec<String> = toks.into_iter().filter(|t| !t.starts_with("[:")).collect();
            let at = at.min(toks.len());
            toks.insert(at, "&uh".to_string());
            let out = normalize_utterance(&toks.join(" "));
            prop_assert!(out.split(' ').any(|t| t == "uh"), "{:?} -> {:?}", toks, out);
        }

        #[test]
        fn output_alphabet(s in "\\PC{0,60}") {
            let out = normalize_utterance(&s);
            for tok in out.split_whitespace() {
                prop_assert!(
                    is_punct(tok) || tok.chars().all(|c| c.is_alphanumeric() || c == '\'' || c == '-'),
                    "bad token {:?}", tok
                );
            }
        }
    }
}
