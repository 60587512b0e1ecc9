use std::io::{BufRead, Write};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::score::score_selection;
use crate::domain::{BenchmarkInstance, Outcome};

pub const DEFAULT_TIME_LIMIT_SECS: u64 = 120;

#[derive(Debug, Clone, PartialEq)]
pub enum AnswerEvent {
    Answered { title: String, elapsed: Duration },
    TimedOut,
    /// The participant ended the session.
    Aborted,
}

/// Where answers come from: a terminal, or a script in tests.
pub trait AnswerSource {
    fn ask(&mut self, excerpt: &str, position: usize, total: usize, limit: Duration) -> AnswerEvent;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanResult {
    pub instance_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    pub elapsed_secs: f64,
    pub correct: bool,
}

/// Draws `sample` instances without replacement (all when `None`) in an
/// order fixed by `seed`.
pub fn sample_instances(instances: &[BenchmarkInstance], sample: Option<usize>, seed: u64) -> Vec<BenchmarkInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<BenchmarkInstance> = instances.to_vec();
    picked.shuffle(&mut rng);
    picked.truncate(sample.unwrap_or(instances.len()));
    picked
}

/// Shows each excerpt and records the typed title and elapsed time. Answers
/// after `time_limit`, timeouts and everything after an abort are recorded
/// as unanswered.
pub fn run_human_session(
    instances: &[BenchmarkInstance],
    source: &mut dyn AnswerSource,
    time_limit: Duration,
) -> Vec<HumanResult> {
    let mut results = Vec::with_capacity(instances.len());
    let mut aborted = false;
    for (i, instance) in instances.iter().enumerate() {
        let event = if aborted {
            AnswerEvent::Aborted
        } else {
            source.ask(&instance.excerpt, i + 1, instances.len(), time_limit)
        };
        let (answer, elapsed_secs) = match event {
            AnswerEvent::Answered { title, elapsed } if elapsed <= time_limit && !title.trim().is_empty() => {
                (Some(title.trim().to_string()), elapsed.as_secs_f64())
            }
            AnswerEvent::Answered { .. } | AnswerEvent::TimedOut => (None, time_limit.as_secs_f64()),
            AnswerEvent::Aborted => {
                aborted = true;
                (None, 0.0)
            }
        };
        let correct = answer.as_ref().is_some_and(|title| {
            score_selection(&Outcome::Answered { title: title.clone() }, instance, "human", None).correct
        });
        results.push(HumanResult { instance_id: instance.instance_id.clone(), answer, elapsed_secs, correct });
    }
    results
}

/// Reads answers from standard input; an empty line skips, `:q` aborts.
pub struct TerminalSource {
    lines: Receiver<String>,
}

impl TerminalSource {
    pub fn new() -> Self {
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in std::io::stdin().lock().lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Self { lines: rx }
    }
}

impl Default for TerminalSource {
    fn default() -> Self {
        Self::new()
    }
}

impl AnswerSource for TerminalSource {
    fn ask(&mut self, excerpt: &str, position: usize, total: usize, limit: Duration) -> AnswerEvent {
        println!("\n[{position}/{total}] You have {} seconds. Type the cited paper's title (empty line to skip, :q to quit).\n", limit.as_secs());
        println!("{excerpt}\n");
        print!("> ");
        let _ = std::io::stdout().flush();
        let started = Instant::now();
        match self.lines.recv_timeout(limit) {
            Ok(line) if line.trim() == ":q" => AnswerEvent::Aborted,
            Ok(line) => AnswerEvent::Answered { title: line, elapsed: started.elapsed() },
            Err(RecvTimeoutError::Timeout) => {
                println!("\nTime is up.");
                AnswerEvent::TimedOut
            }
            Err(RecvTimeoutError::Disconnected) => AnswerEvent::Aborted,
        }
    }
}

/// Replays fixed events; runs out as `Aborted`.
pub struct ScriptedAnswers(pub std::collections::VecDeque<AnswerEvent>);

impl AnswerSource for ScriptedAnswers {
    fn ask(&mut self, _: &str, _: usize, _: usize, _: Duration) -> AnswerEvent {
        self.0.pop_front().unwrap_or(AnswerEvent::Aborted)
    }
}
