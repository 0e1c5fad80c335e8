use super::normalize::normalize_with_warnings;
use super::{ChatError, Demographics, Gender, Label, SpeakerCode, TranscriptRecord, Utterance};

/// Main tiers and participant demographics of one CHAT file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedChat {
    pub utterances: Vec<Utterance>,
    pub demographics: Demographics,
    pub warnings: usize,
}

impl ParsedChat {
    pub fn participant_text(&self) -> String {
        super::extract_participant_text(&self.utterances)
    }
}

fn parse_id(value: &str) -> Result<Option<Demographics>, ChatError> {
    let fields: Vec<&str> = value.split('|').map(str::trim).collect();
    if fields.get(2) != Some(&"PAR") {
        return Ok(None);
    }
    let age_field = fields.get(3).copied().unwrap_or("");
    let years = age_field.split(';').next().unwrap_or("").trim();
    let age = if years.is_empty() {
        None
    } else {
        let a: u32 = years
            .parse()
            .map_err(|_| ChatError::BadDemographics(format!("unparseable age {age_field:?}")))?;
        if a == 0 || a > 130 {
            return Err(ChatError::BadDemographics(format!("age {a} out of range")));
        }
        Some(a)
    };
    let gender = match fields.get(4).map(|g| g.to_ascii_lowercase()).as_deref() {
        Some("female") => Gender::Female,
        Some("male") => Gender::Male,
        _ => Gender::Unknown,
    };
    Ok(Some(Demographics { age, gender }))
}

/// Parses the tiers of a CHAT file without requiring a label.
pub fn parse_chat_body(content: &str) -> Result<ParsedChat, ChatError> {
    // Join continuation lines onto their logical line, remembering where
    // each logical line started for error messages.
    let mut logical: Vec<(usize, String)> = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.starts_with('\t') {
            if let Some((_, prev)) = logical.last_mut() {
                prev.push(' ');
                prev.push_str(line.trim());
                continue;
            }
        }
        logical.push((i + 1, line.to_string()));
    }

    let mut utterances = Vec::new();
    let mut demographics = Demographics::default();
    let mut warnings = 0;
    for (lineno, line) in logical {
        if let Some(rest) = line.strip_prefix('*') {
            let Some((tag, body)) = rest.split_once(':') else {
                return Err(ChatError::MalformedTier {
                    line: lineno,
                    text: line,
                });
            };
            let speaker = SpeakerCode::from_tag(tag.trim()).ok_or_else(|| ChatError::MalformedTier {
                line: lineno,
                text: line.clone(),
            })?;
            let raw_text = body.trim().to_string();
            let (clean_text, w) = normalize_with_warnings(&raw_text);
            warnings += w;
            utterances.push(Utterance {
                speaker,
                raw_text,
                clean_text,
                index: utterances.len(),
            });
        } else if let Some(rest) = line.strip_prefix('@') {
            if let Some((key, value)) = rest.split_once(':') {
                if key.trim() == "ID" {
                    if let Some(d) = parse_id(value.trim())? {
                        demographics = d;
                    }
                }
            }
        }
        // `%` dependent tiers and anything else are ignored.
    }

    if !utterances.iter().any(|u| u.speaker == SpeakerCode::Participant) {
        return Err(ChatError::MissingParticipantTier);
    }
    Ok(ParsedChat {
        utterances,
        demographics,
        warnings,
    })
}

/// Parses a labeled transcript. Transcript and participant ids are left
/// empty; callers assign them with [`TranscriptRecord::with_ids`].
pub fn parse_chat_file(content: &str, label: Label) -> Result<TranscriptRecord, ChatError> {
    let parsed = parse_chat_body(content)?;
    Ok(TranscriptRecord {
        transcript_id: String::new(),
        participant_id: String::new(),
        utterances: parsed.utterances,
        demographics: parsed.demographics,
        label,
        warnings: parsed.warnings,
    })
}
