use crate::model::Minutes;
use std::collections::BTreeMap;
use std::path::Path;

const BUILTIN: &[(&str, &str)] = &[
    ("factual_intro", include_str!("../../templates/factual_intro.txt")),
    ("factual_late", include_str!("../../templates/factual_late.txt")),
    ("factual_early", include_str!("../../templates/factual_early.txt")),
    ("factual_satisfied", include_str!("../../templates/factual_satisfied.txt")),
    ("contrastive", include_str!("../../templates/contrastive.txt")),
    ("contrastive_mixed", include_str!("../../templates/contrastive_mixed.txt")),
    ("contrastive_reasons_one", include_str!("../../templates/contrastive_reasons_one.txt")),
    ("contrastive_reasons_two", include_str!("../../templates/contrastive_reasons_two.txt")),
    ("contrastive_service", include_str!("../../templates/contrastive_service.txt")),
    ("contrastive_punctuality", include_str!("../../templates/contrastive_punctuality.txt")),
    ("hard_constraint", include_str!("../../templates/hard_constraint.txt")),
    ("tree_expansion_intro", include_str!("../../templates/tree_expansion_intro.txt")),
    ("tree_expansion_early", include_str!("../../templates/tree_expansion_early.txt")),
    ("tree_expansion_late", include_str!("../../templates/tree_expansion_late.txt")),
    ("tree_expansion_satisfied", include_str!("../../templates/tree_expansion_satisfied.txt")),
    ("tree_expansion_hard", include_str!("../../templates/tree_expansion_hard.txt")),
    ("overall_not_best", include_str!("../../templates/overall_not_best.txt")),
    ("overall_competitive", include_str!("../../templates/overall_competitive.txt")),
];

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("no template named '{0}'")]
    Unknown(String),
    #[error("template '{template}' needs slot '{slot}'")]
    MissingSlot { template: String, slot: String },
    #[error("cannot read template {path}: {message}")]
    Io { path: String, message: String },
}

/// Named explanation templates with `[slot]` placeholders.
#[derive(Clone, Debug)]
pub struct Templates {
    texts: BTreeMap<String, String>,
}

impl Default for Templates {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Templates {
    pub fn builtin() -> Self {
        let texts = BUILTIN.iter().map(|(k, v)| (k.to_string(), v.trim_end().to_string())).collect();
        Self { texts }
    }

    /// Built-in templates overridden by any `<name>.txt` found in `dir`.
    pub fn with_overrides(dir: &Path) -> Result<Self, TemplateError> {
        let mut templates = Self::builtin();
        let names: Vec<String> = templates.texts.keys().cloned().collect();
        for name in names {
            let path = dir.join(format!("{name}.txt"));
            if path.is_file() {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| TemplateError::Io { path: path.display().to_string(), message: e.to_string() })?;
                templates.texts.insert(name, text.trim_end().to_string());
            }
        }
        Ok(templates)
    }

    pub fn get(&self, name: &str) -> Result<&str, TemplateError> {
        self.texts.get(name).map(String::as_str).ok_or_else(|| TemplateError::Unknown(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.texts.keys().map(String::as_str)
    }

    /// Fills every `[slot]` of the named template.
    pub fn render(&self, name: &str, slots: &BTreeMap<String, String>) -> Result<String, TemplateError> {
        fill(name, self.get(name)?, slots)
    }
}

fn is_slot_name(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_lowercase() || b == b'_')
}

/// Names of the slots a template text uses, in order of appearance.
pub fn slot_names(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('[') {
        let after = &rest[open + 1..];
        match after.find(']') {
            Some(close) if is_slot_name(&after[..close]) => {
                out.push(&after[..close]);
                rest = &after[close + 1..];
            }
            _ => rest = after,
        }
    }
    out
}

fn fill(name: &str, text: &str, slots: &BTreeMap<String, String>) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('[') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find(']') {
            Some(close) if is_slot_name(&after[..close]) => {
                let slot = &after[..close];
                let value = slots
                    .get(slot)
                    .ok_or_else(|| TemplateError::MissingSlot { template: name.to_string(), slot: slot.to_string() })?;
                out.push_str(value);
                rest = &after[close + 1..];
            }
            _ => {
                out.push('[');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// `h:mm AM/PM` for a scenario minute, given the clock time of minute 0.
pub fn format_clock(minute: Minutes, start_of_day: Minutes) -> String {
    let clock = (start_of_day + minute).rem_euclid(24 * 60);
    let (h24, m) = (clock / 60, clock % 60);
    let suffix = if h24 < 12 { "AM" } else { "PM" };
    let h12 = match h24 % 12 {
        0 => 12,
        h => h,
    };
    format!("{h12}:{m:02} {suffix}")
}
