//! Prompt templates.
//!
//! A template file has `[system]`, `[user]` and an optional `[reminder]`
//! section. Placeholders: `{{lexicon}}`, `{{memory}}`, `{{schema_line}}`
//! and `{{reminder}}`. `{{reminder}}` expands to a newline plus the
//! reminder section on retries and to nothing otherwise, so it belongs at
//! the very end of the user section.

use std::path::{Path, PathBuf};

use crate::agents::AgentState;
use crate::codec::SCHEMA_GRAMMAR;
use crate::config::Condition;
use crate::error::TemplateError;
use crate::lexicon::Lexicon;

use super::ChatMessage;

const DEFAULT_NL: &str = include_str!("../../templates/nl.txt");
const DEFAULT_NL_SW: &str = include_str!("../../templates/nl_sw.txt");
const DEFAULT_SCHEMA: &str = include_str!("../../templates/schema.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub system: String,
    pub user: String,
    pub reminder: String,
}

impl Template {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, TemplateError> {
        let mut sections: Vec<(&str, String)> = Vec::new();
        for line in text.lines() {
            let trimmed = line.trim();
            if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                if matches!(name, "system" | "user" | "reminder") {
                    sections.push((name, String::new()));
                    continue;
                }
            }
            if let Some((_, body)) = sections.last_mut() {
                if !body.is_empty() {
                    body.push('\n');
                }
                body.push_str(line);
            }
        }
        let take = |name: &'static str| {
            sections
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, body)| body.trim_end().to_string())
        };
        let missing = |section| TemplateError::MissingSection {
            path: origin.to_path_buf(),
            section,
        };
        Ok(Template {
            system: take("system").ok_or_else(|| missing("system"))?,
            user: take("user").ok_or_else(|| missing("user"))?,
            reminder: take("reminder").unwrap_or_default(),
        })
    }
}

/// One template per condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub nl: Template,
    pub nl_sw: Template,
    pub schema: Template,
}

impl PromptTemplates {
    /// The templates shipped in `templates/`.
    pub fn builtin() -> Self {
        let parse = |text, name: &str| {
            Template::parse(text, Path::new(name)).expect("built-in template parses")
        };
        PromptTemplates {
            nl: parse(DEFAULT_NL, "nl.txt"),
            nl_sw: parse(DEFAULT_NL_SW, "nl_sw.txt"),
            schema: parse(DEFAULT_SCHEMA, "schema.txt"),
        }
    }

    /// Loads `nl.txt`, `nl_sw.txt` and `schema.txt` from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, TemplateError> {
        let load = |file: &str| -> Result<Template, TemplateError> {
            let path: PathBuf = dir.join(file);
            let text = std::fs::read_to_string(&path).map_err(|source| TemplateError::Missing {
                path: path.clone(),
                source,
            })?;
            Template::parse(&text, &path)
        };
        Ok(PromptTemplates {
            nl: load("nl.txt")?,
            nl_sw: load("nl_sw.txt")?,
            schema: load("schema.txt")?,
        })
    }

    pub fn for_condition(&self, condition: Condition) -> &Template {
        match condition {
            Condition::Nl => &self.nl,
            Condition::NlSw => &self.nl_sw,
            Condition::Schema => &self.schema,
        }
    }
}

fn memory_section(state: &AgentState) -> String {
    if state.memory_window() == 0 {
        return String::new();
    }
    if state.memory().is_empty() {
        return "You have not interacted with anyone yet.".to_string();
    }
    let names: Vec<String> = state
        .memory()
        .iter()
        .map(|r| {
            r.partner_name
                .map_or_else(|| "(unclear)".to_string(), |n| n.label())
        })
        .collect();
    format!(
        "Names your recent partners used, oldest first: {}.",
        names.join(", ")
    )
}

fn render(text: &str, lexicon: &str, memory: &str, reminder: &str) -> String {
    text.replace("{{lexicon}}", lexicon)
        .replace("{{memory}}", memory)
        .replace("{{schema_line}}", SCHEMA_GRAMMAR)
        .replace("{{reminder}}", reminder)
}

/// Renders the system and user messages for one agent's turn.
pub fn build_prompt(
    templates: &PromptTemplates,
    condition: Condition,
    state: &AgentState,
    lexicon: &Lexicon,
    reminder: bool,
) -> Vec<ChatMessage> {
    let template = templates.for_condition(condition);
    let listing = lexicon.labels().join(", ");
    let memory = memory_section(state);
    let reminder_text = if reminder && !template.reminder.is_empty() {
        format!("\n{}", render(&template.reminder, &listing, &memory, ""))
    } else {
        String::new()
    };
    let user = render(&template.user, &listing, &memory, &reminder_text);
    // drop the blank line a K=0 memory section would leave behind
    let user = user
        .lines()
        .filter(|l| !(memory.is_empty() && l.trim().is_empty()))
        .collect::<Vec<_>>()
        .join("\n");
    vec![
        ChatMessage::system(render(&template.system, &listing, &memory, "")),
        ChatMessage::user(user),
    ]
}
