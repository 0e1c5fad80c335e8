//! `token<TAB>TAG` lines, one token per line, blank line between sequences.

use super::{Tag, TagSet, TextError};

pub type TaggedSentence = Vec<(String, Tag)>;

pub fn parse_pretagged(text: &str, tagset: &TagSet) -> Result<Vec<TaggedSentence>, TextError> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            continue;
        }
        let (token, tag) = line.split_once('\t').ok_or_else(|| TextError::BadPretagged {
            line: i + 1,
            reason: "expected token<TAB>TAG".into(),
        })?;
        let tag = tagset.tag(tag.trim())?;
        current.push((token.trim().to_lowercase(), tag));
    }
    if !current.is_empty() {
        out.push(current);
    }
    Ok(out)
}

pub fn write_pretagged(sentences: &[TaggedSentence], tagset: &TagSet) -> String {
    let blocks: Vec<String> = sentences
        .iter()
        .map(|s| {
            s.iter()
                .map(|(w, t)| format!("{w}\t{}\n", tagset.name(*t)))
                .collect::<String>()
        })
        .collect();
    blocks.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_blocks() {
        let ts = TagSet::penn();
        let s = parse_pretagged("The\tDT\nboy\tNN\n\nuh\tUH\n", ts).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0][0], ("the".to_string(), ts.get("DT").unwrap()));
        assert_eq!(s[1][0].1, ts.get("UH").unwrap());
        assert_eq!(parse_pretagged(&write_pretagged(&s, ts), ts).unwrap(), s);
    }

    #[test]
    fn rejects_unknown_tag_and_missing_tab() {
        let ts = TagSet::penn();
        assert!(matches!(
            parse_pretagged("boy\tXYZ\n", ts),
            Err(TextError::UnknownTag(_))
        ));
        assert!(matches!(
            parse_pretagged("boy NN\n", ts),
            Err(TextError::BadPretagged { line: 1, .. })
        ));
    }
}
