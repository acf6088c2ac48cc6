//! Prompt rendering and response parsing for the text annotator.

use std::path::Path;

use crate::data::LabelSpace;
use crate::error::{Error, Result};

/// Default classification prompt for citation-style nodes.
pub const DEFAULT_TEMPLATE: &str = "Given a node-centered graph with centric node \
description: {text}, each node represents a paper, we need to classify the center \
node into {num_classes} classes: {labels}, please tell me which class the center \
node belongs to?";

const PLACEHOLDERS: [&str; 3] = ["text", "num_classes", "labels"];

/// A prompt template with `{text}`, `{num_classes}`, and `{labels}`
/// placeholders. Placeholders are validated at construction; only the
/// template itself is scanned, never the substituted text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    template: String,
}

impl PromptTemplate {
    pub fn new(template: impl Into<String>) -> Result<PromptTemplate> {
        let template = template.into();
        for piece in split_template(&template)? {
            if let Piece::Placeholder(name) = piece {
                if !PLACEHOLDERS.contains(&name) {
                    return Err(Error::invalid(format!(
                        "unknown placeholder {{{name}}} in template"
                    )));
                }
            }
        }
        Ok(PromptTemplate { template })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PromptTemplate> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PromptTemplate::new(raw.trim_end_matches('\n'))
    }

    pub fn default_template() -> PromptTemplate {
        PromptTemplate::new(DEFAULT_TEMPLATE).expect("default template is valid")
    }

    pub fn as_str(&self) -> &str {
        &self.template
    }

    /// Substitutes the node text and label space into the template.
    pub fn render(&self, text: &str, space: &LabelSpace) -> String {
        let mut out = String::with_capacity(self.template.len() + text.len());
        for piece in split_template(&self.template).expect("validated at construction") {
            match piece {
                Piece::Literal(s) => out.push_str(s),
                Piece::Placeholder("text") => out.push_str(text),
                Piece::Placeholder("num_classes") => out.push_str(&space.len().to_string()),
                Piece::Placeholder("labels") => out.push_str(&space.names().join(", ")),
                Piece::Placeholder(_) => unreachable!("validated at construction"),
            }
        }
        out
    }
}

enum Piece<'a> {
    Literal(&'a str),
    Placeholder(&'a str),
}

fn split_template(template: &str) -> Result<Vec<Piece<'_>>> {
    let mut pieces = Vec::new();
    let mut rest = template;
    loop {
        match rest.find(['{', '}']) {
            None => {
                if !rest.is_empty() {
                    pieces.push(Piece::Literal(rest));
                }
                return Ok(pieces);
            }
            Some(i) if rest.as_bytes()[i] == b'}' => {
                return Err(Error::invalid("unmatched '}' in template"));
            }
            Some(i) => {
                if i > 0 {
                    pieces.push(Piece::Literal(&rest[..i]));
                }
                let after = &rest[i + 1..];
                let close = after
                    .find('}')
                    .ok_or_else(|| Error::invalid("unmatched '{' in template"))?;
                if after[..close].contains('{') {
                    return Err(Error::invalid("unmatched '{' in template"));
                }
                pieces.push(Piece::Placeholder(&after[..close]));
                rest = &after[close + 1..];
            }
        }
    }
}

/// Maps a raw annotator response to a class index.
///
/// First the response is trimmed of surrounding whitespace and punctuation
/// and compared case-insensitively against each class name. Failing that,
/// the response is scanned for class names as substrings; exactly one
/// distinct matching class parses, anything else is unparsable.
pub fn parse_llm_label(raw: &str, space: &LabelSpace) -> Option<usize> {
    let trimmed = raw
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    if !trimmed.is_empty() {
        for (i, name) in space.names().iter().enumerate() {
            if name.to_lowercase() == trimmed {
                return Some(i);
            }
        }
    }
    let lowered = raw.to_lowercase();
    let matches: Vec<usize> = space
        .names()
        .iter()
        .enumerate()
        .filter_map(|(i, name)| lowered.contains(&name.to_lowercase()).then_some(i))
        .collect();
    match matches.as_slice() {
        [single] => Some(*single),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> LabelSpace {
        LabelSpace::from_names(vec![
            "Case_Based".into(),
            "Neural_Networks".into(),
            "Rule_Learning".into(),
        ])
        .unwrap()
    }

    #[test]
    fn default_template_renders_all_fields() {
        let rendered = PromptTemplate::default_template().render("a paper about rules", &space());
        assert!(rendered.contains("description: a paper about rules,"));
        assert!(rendered.contains("into 3 classes"));
        assert!(rendered.contains("Case_Based, Neural_Networks, Rule_Learning"));
    }

    #[test]
    fn unknown_placeholder_is_rejected() {
        let err = PromptTemplate::new("classify {noun} now").unwrap_err();
        assert!(err.to_string().contains("{noun}"));
    }

    #[test]
    fn unbalanced_braces_are_rejected() {
        assert!(PromptTemplate::new("broken {text").is_err());
        assert!(PromptTemplate::new("broken } here").is_err());
        assert!(PromptTemplate::new("broken {te{xt}").is_err());
    }

    #[test]
    fn braces_inside_substituted_text_are_inert() {
        let template = PromptTemplate::new("desc: {text} end").unwrap();
        let rendered = template.render("weird {not_a_placeholder} body", &space());
        assert_eq!(rendered, "desc: weird {not_a_placeholder} body end");
    }

    #[test]
    fn template_without_placeholders_is_allowed() {
        let template = PromptTemplate::new("no placeholders").unwrap();
        assert_eq!(template.render("x", &space()), "no placeholders");
    }

    #[test]
    fn parse_exact_match_ignores_case_and_punctuation() {
        assert_eq!(parse_llm_label("Neural_Networks", &space()), Some(1));
        assert_eq!(parse_llm_label("  neural_networks.\n", &space()), Some(1));
        assert_eq!(parse_llm_label("\"Case_Based\"", &space()), Some(0));
    }

    #[test]
    fn parse_falls_back_to_unique_substring() {
        assert_eq!(
            parse_llm_label("The paper belongs to Rule_Learning class.", &space()),
            Some(2)
        );
        assert_eq!(
            parse_llm_label("it is about neural_networks mostly", &space()),
            Some(1)
        );
    }

    #[test]
    fn parse_rejects_ambiguous_or_absent() {
        assert_eq!(
            parse_llm_label("Either Case_Based or Rule_Learning", &space()),
            None
        );
        assert_eq!(parse_llm_label("no idea", &space()), None);
        assert_eq!(parse_llm_label("", &space()), None);
        assert_eq!(parse_llm_label("...", &space()), None);
    }
}
