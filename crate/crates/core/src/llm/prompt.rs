use super::PromptCondition;
use crate::scale::{Item, ItemFormat};

pub const ROLE_PLAY_INSTRUCTION: &str = "Act as a senior cognitive scientist.";

/// Stand-in bias-mitigation block for the dual-strategy condition;
/// overridable per session.
pub const DEFAULT_MITIGATION: &str = "Before answering, identify any cognitive bias the scenario may trigger and deliberately counteract it; reason step by step; choose the option a fully rational agent would choose.";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub system_text: String,
    pub user_text: String,
}

pub fn render_prompt(item: &Item, condition: PromptCondition) -> RenderedPrompt {
    render_prompt_with(item, condition, DEFAULT_MITIGATION)
}

pub fn render_prompt_with(item: &Item, condition: PromptCondition, mitigation: &str) -> RenderedPrompt {
    let system_text = match condition {
        PromptCondition::Baseline => String::new(),
        PromptCondition::RolePlay => ROLE_PLAY_INSTRUCTION.to_string(),
        PromptCondition::DualStrategy => format!("{ROLE_PLAY_INSTRUCTION}\n\n{mitigation}"),
    };
    let mut user_text = item.text.trim().to_string();
    match &item.format {
        ItemFormat::MultipleChoice { options, .. } => {
            user_text.push_str("\n\n");
            for o in options {
                user_text.push_str(&format!("{}. {}\n", o.id, o.text));
            }
            user_text.push_str("\nAnswer with the option letter only.");
        }
        ItemFormat::Likert { min, max } => {
            user_text.push_str(&format!("\n\nAnswer with a single integer {min}–{max}."));
        }
    }
    RenderedPrompt { system_text, user_text }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::demo_scale;

    #[test]
    fn baseline_multiple_choice() {
        let s = demo_scale();
        let p = render_prompt(&s.items[0], PromptCondition::Baseline);
        assert!(p.system_text.is_empty());
        assert!(p.user_text.starts_with(&s.items[0].text));
        assert!(p.user_text.ends_with("Answer with the option letter only."));
        assert!(p.user_text.contains("\nB. "));
    }

    #[test]
    fn likert_suffix() {
        let s = demo_scale();
        let p = render_prompt(&s.items[2], PromptCondition::Baseline);
        assert!(p.user_text.ends_with("Answer with a single integer 1–5."));
    }

    #[test]
    fn role_play_system_text() {
        let s = demo_scale();
        let p = render_prompt(&s.items[0], PromptCondition::RolePlay);
        assert_eq!(p.system_text, "Act as a senior cognitive scientist.");
    }

    #[test]
    fn dual_strategy_order() {
        let s = demo_scale();
        let p = render_prompt(&s.items[0], PromptCondition::DualStrategy);
        let role = p.system_text.find(ROLE_PLAY_INSTRUCTION).unwrap();
        let mitig = p.system_text.find(DEFAULT_MITIGATION).unwrap();
        assert_eq!(role, 0);
        assert!(mitig > role);
        let custom = render_prompt_with(&s.items[0], PromptCondition::DualStrategy, "Be careful.");
        assert!(custom.system_text.ends_with("Be careful."));
    }

    #[test]
    fn byte_identical_across_calls() {
        let s = demo_scale();
        for it in &s.items {
            assert_eq!(
                render_prompt(it, PromptCondition::DualStrategy),
                render_prompt(it, PromptCondition::DualStrategy)
            );
        }
    }
}
