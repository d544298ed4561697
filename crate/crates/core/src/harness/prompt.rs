//! The generation prompt and context-window budgeting.

use serde::{Deserialize, Serialize};

pub const SYSTEM_MESSAGE: &str = "you are a professional UML class diagram design expert, which can generate the corresponding PlantUML class diagram design based on system requirements.";

const INSTRUCTION_HEAD: &str = "System requirement is as follows :";

const INSTRUCTION_TAIL: &str = "please generate plantuml code based on system requirement. You should follow the instructions below:
1. Generate standard PlantUML class diagram code directly, start with @startuml and end with @enduml tags. Do not generate any analysis, explanations, or irrelevant content.
2. Class names, attributes, and method names should use meaningful english names from system requirement.
3. Reasonably use inheritance, implementation, dependence, association, aggregation, and composition relationships to design the class diagram.";

/// Total context window shared by prompt and completion, in tokens.
pub const CONTEXT_WINDOW: usize = 4096;

/// Token estimate used for budgeting: one token per four characters,
/// rounded up. No tokenizer is shared across endpoints, so this is only an
/// approximation.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptParts {
    pub system: String,
    /// Instruction section through the trailing `## Response` marker.
    pub user: String,
    /// Whether the requirement was shortened to fit the window.
    pub truncated: bool,
}

impl PromptParts {
    /// Single-string form for completion-style endpoints.
    pub fn text(&self) -> String {
        format!("## System Message\n{}\n{}", self.system, self.user)
    }

    pub fn estimated_tokens(&self) -> usize {
        estimate_tokens(&self.system) + estimate_tokens(&self.user)
    }
}

fn instruction(requirement: &str) -> String {
    format!("## Instruction\n{INSTRUCTION_HEAD}\n{requirement}\n{INSTRUCTION_TAIL}\n## Response")
}

pub fn build_prompt(requirement: &str) -> PromptParts {
    PromptParts {
        system: SYSTEM_MESSAGE.to_string(),
        user: instruction(requirement),
        truncated: false,
    }
}

/// Builds the prompt so that it plus `max_output_tokens` fits in
/// [`CONTEXT_WINDOW`], cutting the requirement at a word boundary if needed.
pub fn build_prompt_within(requirement: &str, max_output_tokens: usize) -> PromptParts {
    let full = build_prompt(requirement);
    let budget = CONTEXT_WINDOW.saturating_sub(max_output_tokens);
    if full.estimated_tokens() <= budget {
        return full;
    }
    let overhead = build_prompt("").estimated_tokens();
    let keep_chars = budget.saturating_sub(overhead) * 4;
    let mut cut: String = requirement.chars().take(keep_chars).collect();
    if let Some(space) = cut.rfind(char::is_whitespace) {
        if space > 0 {
            cut.truncate(space);
        }
    }
    log::warn!(
        "requirement of {} characters exceeds the prompt budget of {budget} tokens; truncated to {} characters",
        requirement.chars().count(),
        cut.chars().count()
    );
    PromptParts {
        system: SYSTEM_MESSAGE.to_string(),
        user: instruction(cut.trim_end()),
        truncated: true,
    }
}
