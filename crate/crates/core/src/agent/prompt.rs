use serde::{Deserialize, Serialize};

use crate::backend::{command_descriptions, render_action, reply_format, ActionRules, ChatMessage};
use crate::domain::{Action, BenchmarkInstance, CommandClass, Observation, PaperDate, PaperMeta, RunConfig};

const TASK: &str = "You help attribute citations in scientific writing. You will be shown an \
excerpt from a paper in which one reference has been replaced by the token [CITATION]. Your job \
is to identify the single paper that [CITATION] refers to.";

const NO_COMMANDS_TASK: &str = "Answer from your own knowledge; no tools are available. You may \
reason first, but the last line of your reply must contain only the full title of the cited \
paper.";

const COMMANDS_TASK: &str = "You can use the commands below, one per reply. Search results never \
include papers published after the excerpt's source paper. Once you are confident, select the \
paper. You have at most {max} commands; after {force} you will be asked to select.";

const INSTRUCTION: &str = "Identify the paper cited at [CITATION] in the excerpt below. Check that \
the paper you choose matches the specific details the excerpt attributes to it. When a result \
looks promising but you are unsure, inspect it further before deciding. A paper that itself \
cites the target can point you to its exact title through its references.";

const NO_COMMANDS_INSTRUCTION: &str = "Identify the paper cited at [CITATION] in the excerpt \
below. End your reply with its full title on a line of its own.";

/// Everything sent to the model before the first action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demo_turns: Option<Vec<ChatMessage>>,
    pub instance_prompt: String,
}

impl PromptBundle {
    /// System message, demonstration turns, then the instance prompt.
    pub fn messages(&self) -> Vec<ChatMessage> {
        let mut out = vec![ChatMessage::system(&self.system_text)];
        out.extend(self.demo_turns.iter().flatten().cloned());
        out.push(ChatMessage::user(&self.instance_prompt));
        out
    }
}

pub fn assemble_prompt(config: &RunConfig, instance: &BenchmarkInstance) -> PromptBundle {
    let class = config.command_class;
    let system_text = match class {
        CommandClass::NoCommands => format!("{TASK}\n\n{NO_COMMANDS_TASK}"),
        _ => format!(
            "{TASK}\n\n{}\n\nCommands:\n{}\n\n{}",
            COMMANDS_TASK
                .replace("{max}", &config.max_actions.to_string())
                .replace("{force}", &config.force_select_at.to_string()),
            command_descriptions(class),
            reply_format(ActionRules::from(class)),
        ),
    };
    PromptBundle {
        system_text,
        demo_turns: config.with_demo.then(|| demo_turns(class)),
        instance_prompt: instance_prompt(class, &instance.excerpt),
    }
}

pub fn instance_prompt(class: CommandClass, excerpt: &str) -> String {
    let instruction = match class {
        CommandClass::NoCommands => NO_COMMANDS_INSTRUCTION,
        _ => INSTRUCTION,
    };
    format!("{instruction}\n\n{excerpt}")
}

/// How an observation is shown to the model.
pub fn render_observation(observation: &Observation) -> String {
    match observation {
        Observation::SearchResults { results } if results.is_empty() => {
            "No results. Try a different query.".to_string()
        }
        Observation::SearchResults { results } => {
            results.iter().map(render_result).collect::<Vec<_>>().join("\n\n")
        }
        Observation::PaperText { text, .. } => text.clone(),
        Observation::Notice { message } => message.clone(),
        Observation::ForcedSelectPrompt => {
            "You have reached the command limit. Your next reply must be a select command naming \
the paper you consider most likely."
                .to_string()
        }
    }
}

fn render_result(p: &PaperMeta) -> String {
    let abstract_text = if p.r#abstract.trim().is_empty() { "(not available)" } else { p.r#abstract.trim() };
    format!(
        "- Paper ID: {}\n   Title: {}\n   Abstract: {}\n   Citation Count: {}",
        p.paper_id, p.title, abstract_text, p.citation_count
    )
}

const DEMO_EXCERPT: &str = "All networks are trained for 90 epochs with Adam [CITATION], using an \
initial learning rate of 0.001 that is divided by 10 every 30 epochs.";

fn demo_paper(id: &str, title: &str, abstract_text: &str, citations: u64, year: i32) -> PaperMeta {
    PaperMeta {
        paper_id: id.into(),
        title: title.into(),
        r#abstract: abstract_text.into(),
        citation_count: citations,
        pub_date: PaperDate::from_year(year).expect("valid demo year"),
        fulltext_locator: None,
    }
}

fn demo_turns(class: CommandClass) -> Vec<ChatMessage> {
    let mut turns = vec![ChatMessage::user(instance_prompt(class, DEMO_EXCERPT))];
    if class == CommandClass::NoCommands {
        turns.push(ChatMessage::assistant(
            "The excerpt uses Adam as its optimizer, and the standard reference for Adam is the \
paper that introduced it.\nAdam: A Method for Stochastic Optimization",
        ));
        return turns;
    }
    let comparison = demo_paper(
        "demo00000000000000000000000000000000002",
        "An Empirical Comparison of Optimizers for Deep Image Classifiers",
        "We benchmark stochastic gradient descent with momentum, RMSProp and adaptive moment \
estimation on image classification tasks.",
        410,
        2016,
    );
    let convergence = demo_paper(
        "demo00000000000000000000000000000000003",
        "On Convergence Failures of Adaptive Gradient Methods",
        "We show that exponential moving averages of squared gradients can prevent \
convergence and propose a fix.",
        2100,
        2017,
    );
    let adam = demo_paper(
        "demo00000000000000000000000000000000001",
        "Adam: A Method for Stochastic Optimization",
        "We introduce an algorithm for first-order gradient-based optimization based on \
adaptive estimates of lower-order moments.",
        90000,
        2014,
    );
    let mut step = |reason: &str, action: Action, observation: Option<Observation>| {
        turns.push(ChatMessage::assistant(render_action(reason, &action)));
        if let Some(obs) = observation {
            turns.push(ChatMessage::user(render_observation(&obs)));
        }
    };
    step(
        "The excerpt names the Adam optimizer. I will search for it directly.",
        Action::SearchRelevance { query: "Adam optimizer".into() },
        Some(Observation::SearchResults { results: vec![comparison.clone(), convergence] }),
    );
    if class == CommandClass::SearchAndRead {
        step(
            "Neither result introduces Adam, but the optimizer comparison likely cites the \
original paper. I will read it and look at its references.",
            Action::Read { paper_id: comparison.paper_id.clone() },
            Some(Observation::PaperText {
                paper_id: comparison.paper_id.clone(),
                text: "An Empirical Comparison of Optimizers for Deep Image Classifiers\n\n\
1 Introduction\nWe compare SGD with momentum, RMSProp and Adam [17] ...\n\nReferences\n\
[17] D. Kingma and J. Ba. Adam: A Method for Stochastic Optimization. 2014."
                    .into(),
                truncated: false,
            }),
        );
    } else {
        step(
            "Neither result introduces Adam. Sorting by citation count should surface the \
original, heavily cited paper.",
            Action::SearchCitations { query: "Adam stochastic optimization".into() },
            Some(Observation::SearchResults { results: vec![adam.clone(), comparison] }),
        );
    }
    if class == CommandClass::SearchAndRead {
        step(
            "The reference list gives the exact title. I will search for it.",
            Action::SearchCitations { query: "Adam: A Method for Stochastic Optimization".into() },
            Some(Observation::SearchResults { results: vec![adam.clone()] }),
        );
    }
    step(
        "This is the paper that introduced Adam, which the excerpt cites for its optimizer.",
        Action::Select { paper_id: adam.paper_id.clone() },
        None,
    );
    turns
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{parse_action, Role};

    fn instance() -> BenchmarkInstance {
        BenchmarkInstance {
            instance_id: "i1".into(),
            excerpt: "We adopt batch normalization (BN) [CITATION] right after each convolution.".into(),
            target_title: "t".into(),
            target_paper_id: None,
            source_paper_id: "s".into(),
            source_date: PaperDate::from_year(2015).unwrap(),
            target_year: 2015,
            tags: vec![],
        }
    }

    fn actions(turns: &[ChatMessage], class: CommandClass) -> Vec<&'static str> {
        turns
            .iter()
            .filter(|m| m.role == Role::Assistant)
            .map(|m| parse_action(&m.content, class).unwrap().1.name())
            .collect()
    }

    #[test]
    fn search_only_without_demo() {
        let cfg = RunConfig::new("c", "b", CommandClass::SearchOnly, false);
        let p = assemble_prompt(&cfg, &instance());
        assert!(p.demo_turns.is_none());
        assert!(p.system_text.contains("search_relevance") && p.system_text.contains("select("));
        assert!(!p.system_text.contains("read("));
    }

    #[test]
    fn search_read_demo_shape() {
        let cfg = RunConfig::new("c", "b", CommandClass::SearchAndRead, true);
        let p = assemble_prompt(&cfg, &instance());
        let turns = p.demo_turns.as_ref().unwrap();
        assert_eq!(
            actions(turns, CommandClass::SearchAndRead),
            ["search_relevance", "read", "search_citations", "select"]
        );
        assert!(p.system_text.contains("read("));
    }

    #[test]
    fn search_only_demo_never_reads() {
        let cfg = RunConfig::new("c", "b", CommandClass::SearchOnly, true);
        let turns = assemble_prompt(&cfg, &instance()).demo_turns.unwrap();
        assert!(!actions(&turns, CommandClass::SearchOnly).contains(&"read"));
    }

    #[test]
    fn no_commands_has_no_command_list() {
        let cfg = RunConfig::new("c", "b", CommandClass::NoCommands, false);
        let p = assemble_prompt(&cfg, &instance());
        assert!(!p.system_text.contains("search_relevance"));
        assert!(p.system_text.contains("title"));
    }

    #[test]
    fn excerpt_embedded_verbatim() {
        let cfg = RunConfig::new("c", "b", CommandClass::SearchAndRead, true);
        let p = assemble_prompt(&cfg, &instance());
        assert!(p.instance_prompt.ends_with(&instance().excerpt));
        let msgs = p.messages();
        assert_eq!(msgs[0].role, Role::System);
        assert_eq!(msgs.last().unwrap().content, p.instance_prompt);
    }

    #[test]
    fn result_rendering() {
        let obs = Observation::SearchResults {
            results: vec![demo_paper("abc", "A Title", "", 18, 2015)],
        };
        assert_eq!(
            render_observation(&obs),
            "- Paper ID: abc\n   Title: A Title\n   Abstract: (not available)\n   Citation Count: 18"
        );
    }
}
