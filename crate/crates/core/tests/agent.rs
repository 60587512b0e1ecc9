use citefind::agent::{assemble_prompt, run_instance, LogRecord, LogicalClock};
use citefind::backend::{render_action, Backend, ScriptEntry, ScriptedBackend};
use citefind::domain::{Action, PaperDate, PaperMeta, CommandClass, Observation, Outcome, RunConfig, TechnicalErrorClass};
use citefind::gateway::{Gateway, GatewayConfig, RecordedProvider};
use citefind::testkit::worked_example;
use citefind::testkit::pdf::{build_pdf, PdfPage};

fn gateway(dir: &std::path::Path) -> Gateway {
    Gateway::from_config(&GatewayConfig::recorded(dir)).unwrap()
}

#[test]
fn worked_example_replays_in_three_steps() {
    let dir = tempfile::tempdir().unwrap();
    worked_example::write_provider_dir(dir.path()).unwrap();
    let gw = gateway(dir.path());
    let backend = ScriptedBackend::new("scripted", worked_example::script());
    let config = RunConfig::new("scripted/search_read/demo", "scripted", CommandClass::SearchAndRead, true);
    let out = run_instance(&config, &worked_example::instance(), &backend, Some(&gw), &LogicalClock::default());
    let t = &out.trajectory;
    assert_eq!(t.steps.len(), 3);
    assert_eq!(t.outcome, Outcome::Selected { paper_id: worked_example::BN_ID.into() });
    t.check(config.max_actions).unwrap();
    let Some(Observation::SearchResults { results }) = &t.steps[0].observation else { panic!("no results") };
    assert_eq!(results.len(), 10);
    assert_eq!(results[0].paper_id, worked_example::BN_ID);
    assert_eq!(results[1].paper_id, worked_example::SECOND_ID);
    assert_eq!(results[1].citation_count, 18);
    assert_eq!(t.steps[0].raw_result_count, Some(12));
    let Some(Observation::PaperText { text, truncated, .. }) = &t.steps[1].observation else { panic!("no text") };
    assert!(text.contains("Batch Normalization") && !truncated);
    assert!(t.steps[2].observation.is_none());
}

#[test]
fn never_selecting_is_forced_at_fourteen() {
    let dir = tempfile::tempdir().unwrap();
    worked_example::write_provider_dir(dir.path()).unwrap();
    let gw = gateway(dir.path());
    let search = render_action("again", &Action::SearchRelevance { query: "batch normalization".into() });
    let mut entries: Vec<ScriptEntry> = (0..14).map(|_| ScriptEntry::reply("*", &search)).collect();
    entries.push(ScriptEntry::reply("*", render_action("final", &Action::Select { paper_id: "x".into() })));
    let backend = ScriptedBackend::new("s", entries);
    let config = RunConfig::new("c", "s", CommandClass::SearchOnly, false);
    let out = run_instance(&config, &worked_example::instance(), &backend, Some(&gw), &LogicalClock::default());
    assert_eq!(out.trajectory.steps.len(), 15);
    assert!(out.trajectory.steps[13].forced_select_prompt);
    assert!(matches!(out.trajectory.outcome, Outcome::Selected { .. }));

    // Still searching after the prompt: the retries are select-only and fail.
    let entries: Vec<ScriptEntry> = (0..30).map(|_| ScriptEntry::reply("*", &search)).collect();
    let backend = ScriptedBackend::new("s", entries);
    let out = run_instance(&config, &worked_example::instance(), &backend, Some(&gw), &LogicalClock::default());
    assert_eq!(out.trajectory.steps.len(), 14);
    assert_eq!(out.trajectory.outcome, Outcome::TechnicalFailure { error_class: TechnicalErrorClass::UnparseableResponse });
}

#[test]
fn select_first_is_one_step() {
    let backend = ScriptedBackend::new(
        "s",
        [ScriptEntry::reply("*", render_action("sure", &Action::Select { paper_id: "p".into() }))],
    );
    let dir = tempfile::tempdir().unwrap();
    worked_example::write_provider_dir(dir.path()).unwrap();
    let gw = gateway(dir.path());
    let config = RunConfig::new("c", "s", CommandClass::SearchAndRead, false);
    let out = run_instance(&config, &worked_example::instance(), &backend, Some(&gw), &LogicalClock::default());
    assert_eq!(out.trajectory.steps.len(), 1);
    assert_eq!(out.trajectory.outcome, Outcome::Selected { paper_id: "p".into() });
}

#[test]
fn no_commands_answers_without_gateway() {
    let backend = ScriptedBackend::new("s", [ScriptEntry::reply("*", "Thinking...\nDeep Residual Learning")]);
    let config = RunConfig::new("c", "s", CommandClass::NoCommands, false);
    let out = run_instance(&config, &worked_example::instance(), &backend, None, &LogicalClock::default());
    assert_eq!(out.trajectory.outcome, Outcome::Answered { title: "Deep Residual Learning".into() });
}

#[test]
fn read_under_search_only_consumes_retries() {
    let read = render_action("r", &Action::Read { paper_id: worked_example::BN_ID.into() });
    let select = render_action("s", &Action::Select { paper_id: worked_example::BN_ID.into() });
    let backend = ScriptedBackend::new("s", [ScriptEntry::reply("*", &read), ScriptEntry::reply("*", &select)]);
    let dir = tempfile::tempdir().unwrap();
    worked_example::write_provider_dir(dir.path()).unwrap();
    let gw = gateway(dir.path());
    let config = RunConfig::new("c", "s", CommandClass::SearchOnly, false);
    let out = run_instance(&config, &worked_example::instance(), &backend, Some(&gw), &LogicalClock::default());
    assert_eq!(out.trajectory.steps.len(), 1);
    assert_eq!(out.trajectory.steps[0].attempts, 2);
    assert!(out.trajectory.steps.iter().all(|s| !matches!(s.action, Action::Read { .. })));
}

#[test]
fn missing_full_text_becomes_notice() {
    let read = render_action("r", &Action::Read { paper_id: worked_example::SECOND_ID.into() });
    let select = render_action("s", &Action::Select { paper_id: worked_example::BN_ID.into() });
    let backend = ScriptedBackend::new("s", [ScriptEntry::reply("*", &read), ScriptEntry::reply("*", &select)]);
    let dir = tempfile::tempdir().unwrap();
    worked_example::write_provider_dir(dir.path()).unwrap();
    let gw = gateway(dir.path());
    let config = RunConfig::new("c", "s", CommandClass::SearchAndRead, false);
    let out = run_instance(&config, &worked_example::instance(), &backend, Some(&gw), &LogicalClock::default());
    assert!(matches!(out.trajectory.steps[0].observation, Some(Observation::Notice { .. })));
    assert_eq!(out.trajectory.steps.len(), 2);
}

#[test]
fn old_paper_text_is_stubbed_when_the_window_fills() {
    let dir = tempfile::tempdir().unwrap();
    let body = (0..300).map(|i| format!("word{i}")).collect::<Vec<_>>().join(" ");
    let mut papers = Vec::new();
    let mut docs = Vec::new();
    for k in 0..4 {
        let locator = format!("documents/long{k}.pdf");
        papers.push(PaperMeta {
            paper_id: format!("long{k}"),
            title: format!("Long paper {k}"),
            r#abstract: String::new(),
            citation_count: 1,
            pub_date: PaperDate::from_year(2010).unwrap(),
            fulltext_locator: Some(locator.clone()),
        });
        docs.push((locator, build_pdf(&[PdfPage::from_paragraph(&body, 12)])));
    }
    RecordedProvider::write_dir(dir.path(), &papers, &[], &docs).unwrap();
    let gw = gateway(dir.path());
    let mut entries: Vec<ScriptEntry> = (0..4)
        .map(|k| ScriptEntry::reply("*", render_action("r", &Action::Read { paper_id: format!("long{k}") })))
        .collect();
    entries.push(ScriptEntry::reply("*", render_action("s", &Action::Select { paper_id: "long0".into() })));
    let config = RunConfig::new("c", "s", CommandClass::SearchAndRead, false);
    let instance = worked_example::instance();
    let probe = ScriptedBackend::new("s", Vec::<ScriptEntry>::new());
    let base = probe.count_message_tokens(&assemble_prompt(&config, &instance).messages());
    // Room for the prompt and about two documents.
    let backend = ScriptedBackend::new("s", entries).with_window(base + 700);
    let out = run_instance(&config, &instance, &backend, Some(&gw), &LogicalClock::default());
    assert_eq!(out.trajectory.outcome, Outcome::Selected { paper_id: "long0".into() });
    let trimmed: Vec<&str> = out
        .records
        .iter()
        .filter_map(|r| match r {
            LogRecord::ContextTrim { paper_id, .. } => Some(paper_id.as_str()),
            _ => None,
        })
        .collect();
    assert!(!trimmed.is_empty());
    assert_eq!(trimmed[0], "long0");
    let mut sorted = trimmed.clone();
    sorted.sort();
    assert_eq!(trimmed, sorted, "oldest documents go first");
}
