//! The citation agent: prompt assembly, the think-act-observe loop over the
//! gateway and reader, the action budget with forced selection, and
//! trajectory logging.

mod clock;
mod log;
mod prompt;

use crate::backend::{
    complete_with_retries, ActionRules, Attempt, Backend, ChatMessage, CompletionRequest, Role,
};
use crate::domain::{
    Action, BenchmarkInstance, CommandClass, Cost, Observation, Outcome, RunConfig, TechnicalErrorClass,
    Trajectory, TrajectoryStep,
};
use crate::gateway::{Gateway, GatewayError, SearchQuery, SortOrder};
use crate::reader::{budget_text, extract_text};

pub use clock::{Clock, ClockKind, LogicalClock, WallClock};
pub use log::{find_logs, log_path, read_log, read_records, write_log, LogError, LogRecord, RunLog};
pub use prompt::{assemble_prompt, instance_prompt, render_observation, PromptBundle};

/// A finished run: the trajectory and the log records describing it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub records: Vec<LogRecord>,
    pub failed_turn_cost: Cost,
}

/// The conversation key scripted backends use to look up replies.
pub fn conversation_key(config_id: &str, instance_id: &str) -> String {
    format!("{config_id}/{instance_id}")
}

/// The direct answer in a tool-less completion: its last non-empty line,
/// without list markers or surrounding quotes.
pub fn extract_answer_title(completion: &str) -> Option<String> {
    let line = completion.lines().map(str::trim).filter(|l| !l.is_empty()).next_back()?;
    let line = line.trim_start_matches(['-', '*', '>']).trim();
    let title = line.trim_matches(|c: char| matches!(c, '"' | '\'' | '*' | '`' | '“' | '”')).trim();
    (!title.is_empty()).then(|| title.to_string())
}

fn stub_text(paper_id: &str) -> String {
    format!("[Full text of {paper_id} omitted to fit the context window.]")
}

struct Run<'a> {
    config: &'a RunConfig,
    instance: &'a BenchmarkInstance,
    backend: &'a dyn Backend,
    gateway: Option<&'a Gateway>,
    clock: &'a dyn Clock,
    records: Vec<LogRecord>,
    steps: Vec<TrajectoryStep>,
    messages: Vec<ChatMessage>,
    /// Message indices holding full paper text, oldest first.
    paper_messages: Vec<(usize, String)>,
    started_ms: u64,
}

enum Executed {
    Observation(Observation, Option<usize>),
    Failure(TechnicalErrorClass, String),
}

/// Runs one instance under one configuration. Technical failures end up in
/// the outcome; nothing is returned as an error.
pub fn run_instance(
    config: &RunConfig,
    instance: &BenchmarkInstance,
    backend: &dyn Backend,
    gateway: Option<&Gateway>,
    clock: &dyn Clock,
) -> RunOutput {
    let bundle = assemble_prompt(config, instance);
    let messages = bundle.messages();
    let run = Run {
        config,
        instance,
        backend,
        gateway,
        clock,
        records: vec![
            LogRecord::Header {
                instance: instance.clone(),
                config: config.clone(),
                provider: gateway.map(|g| g.provider_name().to_string()).unwrap_or_else(|| "none".into()),
            },
            LogRecord::Prompt { messages: messages.clone() },
        ],
        steps: Vec::new(),
        messages,
        paper_messages: Vec::new(),
        started_ms: clock.now_ms(),
    };
    match config.command_class {
        CommandClass::NoCommands => run.answer_directly(),
        _ => run.act(),
    }
}

impl Run<'_> {
    fn request(&self) -> CompletionRequest {
        let mut req = CompletionRequest::new(&self.config.backend_id, self.messages.clone(), self.config.temperature)
            .with_conversation(conversation_key(&self.config.config_id, &self.instance.instance_id));
        req.seed = self.config.seed;
        req
    }

    fn log_attempts(&mut self, step: u32, attempts: &[Attempt]) {
        for attempt in attempts {
            self.records.push(LogRecord::Attempt { step, attempt: attempt.clone() });
        }
    }

    fn finish(mut self, outcome: Outcome, failed_turn_cost: Cost, message: Option<String>) -> RunOutput {
        let total_cost: Cost = self.steps.iter().map(|s| s.cost).sum();
        let ended = self.clock.now_ms();
        let total_duration_ms = ended.saturating_sub(self.started_ms);
        self.records.push(LogRecord::Outcome {
            outcome: outcome.clone(),
            total_cost,
            total_duration_ms,
            failed_turn_cost,
            message,
        });
        RunOutput {
            trajectory: Trajectory {
                instance_id: self.instance.instance_id.clone(),
                config_id: self.config.config_id.clone(),
                steps: self.steps,
                outcome,
                total_cost,
                total_duration_ms,
            },
            records: self.records,
            failed_turn_cost,
        }
    }

    fn failure(self, class: TechnicalErrorClass, cost: Cost, message: String) -> RunOutput {
        self.finish(Outcome::TechnicalFailure { error_class: class }, cost, Some(message))
    }

    fn answer_directly(mut self) -> RunOutput {
        let started = self.clock.now_ms();
        let result = self.backend.complete(&self.request());
        let ended = self.clock.now_ms();
        let completion = match result {
            Ok(c) => c,
            Err(e) => return self.failure(e.class, Cost::ZERO, e.message),
        };
        let attempt = Attempt {
            raw: completion.text.clone(),
            tokens_in: completion.tokens_in,
            tokens_out: completion.tokens_out,
            cost: completion.cost,
            error: None,
        };
        let Some(title) = extract_answer_title(&completion.text) else {
            let attempt = Attempt { error: Some("empty reply".into()), ..attempt };
            self.log_attempts(1, std::slice::from_ref(&attempt));
            return self.failure(TechnicalErrorClass::UnparseableResponse, attempt.cost, "empty reply".into());
        };
        self.log_attempts(1, std::slice::from_ref(&attempt));
        let step = TrajectoryStep {
            index: 1,
            thought: completion.text.clone(),
            action: Action::DirectAnswer { title: title.clone() },
            observation: None,
            started_at_ms: started,
            ended_at_ms: ended,
            tokens_in: completion.tokens_in,
            tokens_out: completion.tokens_out,
            cost: completion.cost,
            attempts: 1,
            raw_result_count: None,
            forced_select_prompt: false,
        };
        self.records.push(LogRecord::Step { step: step.clone() });
        self.steps.push(step);
        self.finish(Outcome::Answered { title }, Cost::ZERO, None)
    }

    /// Replaces the oldest full-text observations with stubs until the
    /// history fits the backend's window.
    fn fit_context(&mut self, step: u32) {
        let window = self.backend.context_window();
        while self.backend.count_message_tokens(&self.messages) > window && !self.paper_messages.is_empty() {
            let (index, paper_id) = self.paper_messages.remove(0);
            self.messages[index].content = stub_text(&paper_id);
            self.records.push(LogRecord::ContextTrim { step, paper_id });
        }
    }

    fn act(mut self) -> RunOutput {
        let class = self.config.command_class;
        let mut forced = false;
        for index in 1..=self.config.max_actions {
            self.fit_context(index);
            let started = self.clock.now_ms();
            let rules = if forced { ActionRules::select_only(class) } else { ActionRules::from(class) };
            let turn = complete_with_retries(self.backend, &self.request(), rules, self.config.parse_retries);
            let turn = match turn {
                Ok(t) => t,
                Err(f) => {
                    self.log_attempts(index, &f.attempts);
                    let cost = f.cost();
                    return self.failure(f.class, cost, f.message);
                }
            };
            self.log_attempts(index, &turn.attempts);
            let (observation, raw_result_count) = match self.execute(&turn.action) {
                Executed::Observation(obs, raw) => (Some(obs), raw),
                Executed::Failure(class, message) => {
                    let cost = turn.cost();
                    return self.failure(class, cost, message);
                }
            };
            let is_select = matches!(turn.action, Action::Select { .. });
            let observation = if is_select { None } else { observation };
            forced = !is_select && index == self.config.force_select_at;
            let step = TrajectoryStep {
                index,
                thought: turn.thought.clone(),
                action: turn.action.clone(),
                observation: observation.clone(),
                started_at_ms: started,
                ended_at_ms: self.clock.now_ms(),
                tokens_in: turn.tokens_in(),
                tokens_out: turn.tokens_out(),
                cost: turn.cost(),
                attempts: turn.attempts.len() as u32,
                raw_result_count,
                forced_select_prompt: forced,
            };
            self.records.push(LogRecord::Step { step: step.clone() });
            self.steps.push(step);
            if let Action::Select { paper_id } = turn.action {
                return self.finish(Outcome::Selected { paper_id }, Cost::ZERO, None);
            }
            self.messages.push(ChatMessage::assistant(turn.raw));
            let observation = observation.expect("non-select steps carry an observation");
            let mut shown = render_observation(&observation);
            if forced {
                shown.push_str("\n\n");
                shown.push_str(&render_observation(&Observation::ForcedSelectPrompt));
            }
            if let Observation::PaperText { paper_id, .. } = &observation {
                self.paper_messages.push((self.messages.len(), paper_id.clone()));
            }
            self.messages.push(ChatMessage { role: Role::User, content: shown });
        }
        let message = format!("no selection within {} actions", self.config.max_actions);
        self.failure(TechnicalErrorClass::UnparseableResponse, Cost::ZERO, message)
    }

    fn execute(&self, action: &Action) -> Executed {
        let needs_gateway = matches!(action, Action::SearchRelevance { .. } | Action::SearchCitations { .. } | Action::Read { .. });
        let gateway = match (needs_gateway, self.gateway) {
            (false, _) => None,
            (true, Some(g)) => Some(g),
            (true, None) => {
                return Executed::Failure(TechnicalErrorClass::ProviderFailure, "no search gateway configured".into())
            }
        };
        match action {
            Action::SearchRelevance { query } | Action::SearchCitations { query } => {
                let sort = if matches!(action, Action::SearchCitations { .. }) {
                    SortOrder::CitationCount
                } else {
                    SortOrder::Relevance
                };
                let q = SearchQuery { query: query.clone(), sort, issued_for: self.instance.instance_id.clone() };
                let gateway = gateway.expect("searches have a gateway");
                match gateway.search(&q, &self.instance.source_paper_id, self.instance.source_date, self.config.top_k) {
                    Ok(out) => Executed::Observation(Observation::SearchResults { results: out.results }, Some(out.raw_count)),
                    Err(GatewayError::Invalid(msg)) => Executed::Observation(Observation::Notice { message: format!("Search rejected: {msg}.") }, None),
                    Err(e) => Executed::Failure(TechnicalErrorClass::ProviderFailure, e.to_string()),
                }
            }
            Action::Read { paper_id } => {
                let gateway = gateway.expect("reads have a gateway");
                let notice = |message: String| Executed::Observation(Observation::Notice { message }, None);
                match gateway.get_fulltext_document(paper_id) {
                    Ok(bytes) => match extract_text(&bytes) {
                        Ok(text) => {
                            let text = budget_text(
                                text.for_paper(paper_id.clone()),
                                self.config.read_text_budget,
                                self.backend.tokenizer(),
                            );
                            Executed::Observation(
                                Observation::PaperText { paper_id: paper_id.clone(), text: text.text, truncated: text.truncated },
                                None,
                            )
                        }
                        Err(e) => notice(format!("The full text of {paper_id} could not be read ({e}). Choose another paper or command.")),
                    },
                    Err(GatewayError::MissingFullText { .. } | GatewayError::NotFound(_)) => {
                        notice(format!("No full text is available for {paper_id}. Choose another paper or command."))
                    }
                    Err(GatewayError::Invalid(msg)) => notice(format!("Read rejected: {msg}.")),
                    Err(e) => Executed::Failure(TechnicalErrorClass::ProviderFailure, e.to_string()),
                }
            }
            Action::Select { .. } => Executed::Observation(Observation::Notice { message: String::new() }, None),
            Action::DirectAnswer { .. } => {
                Executed::Failure(TechnicalErrorClass::UnparseableResponse, "direct answer in a command session".into())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answer_title_is_last_line() {
        assert_eq!(
            extract_answer_title("Reasoning here.\n\n\"Deep Residual Learning\"\n  \n").as_deref(),
            Some("Deep Residual Learning")
        );
        assert_eq!(extract_answer_title("- Attention Is All You Need").as_deref(), Some("Attention Is All You Need"));
        assert_eq!(extract_answer_title("  \n "), None);
    }
}
