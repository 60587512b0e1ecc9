use crate::domain::{
    normalize_title, Action, BenchmarkInstance, EvalRecord, MatchKind, Observation, Outcome, Trajectory,
};
use crate::gateway::Gateway;

/// Scores one outcome. Selections match by id first, then by the normalized
/// `resolved_title` of the selected paper; answers match by title only.
pub fn score_selection(
    outcome: &Outcome,
    instance: &BenchmarkInstance,
    config_id: &str,
    resolved_title: Option<&str>,
) -> EvalRecord {
    let target = normalize_title(&instance.target_title);
    let title_matches = |t: &str| !target.is_empty() && normalize_title(t) == target;
    let (correct, match_kind, technical_error) = match outcome {
        Outcome::Selected { paper_id } => {
            if instance.target_paper_id.as_deref() == Some(paper_id.as_str()) {
                (true, MatchKind::ById, None)
            } else if resolved_title.is_some_and(title_matches) {
                (true, MatchKind::ByTitle, None)
            } else {
                (false, MatchKind::None, None)
            }
        }
        Outcome::Answered { title } if title_matches(title) => (true, MatchKind::ByTitle, None),
        Outcome::Answered { .. } => (false, MatchKind::None, None),
        Outcome::TechnicalFailure { error_class } => (false, MatchKind::None, Some(*error_class)),
    };
    EvalRecord {
        instance_id: instance.instance_id.clone(),
        config_id: config_id.to_string(),
        correct,
        match_kind,
        error_label: None,
        technical_error,
    }
}

/// Title of `paper_id` as shown in the trajectory's search results.
pub fn title_from_trajectory(trajectory: &Trajectory, paper_id: &str) -> Option<String> {
    trajectory.steps.iter().rev().find_map(|step| match &step.observation {
        Some(Observation::SearchResults { results }) => {
            results.iter().find(|p| p.paper_id == paper_id).map(|p| p.title.clone())
        }
        _ => None,
    })
}

/// Title needed to score a selection by title. `None` when the id already
/// decides the match or nothing is selected. Prefers the gateway's record and
/// falls back to the trajectory's search results.
pub fn resolve_selected_title(
    trajectory: &Trajectory,
    instance: &BenchmarkInstance,
    gateway: Option<&Gateway>,
) -> Option<String> {
    let Outcome::Selected { paper_id } = &trajectory.outcome else { return None };
    if instance.target_paper_id.as_deref() == Some(paper_id.as_str()) {
        return None;
    }
    debug_assert!(matches!(trajectory.steps.last().map(|s| &s.action), Some(Action::Select { .. })));
    gateway
        .and_then(|g| g.get_paper(paper_id).ok())
        .map(|p| p.title)
        .or_else(|| title_from_trajectory(trajectory, paper_id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{PaperDate, TechnicalErrorClass};

    fn instance() -> BenchmarkInstance {
        BenchmarkInstance {
            instance_id: "i".into(),
            excerpt: "[CITATION]".into(),
            target_title: "Batch Normalization: Accelerating Deep Network Training by Reducing Internal Covariate Shift".into(),
            target_paper_id: Some("bn".into()),
            source_paper_id: "s".into(),
            source_date: PaperDate::from_year(2015).unwrap(),
            target_year: 2015,
            tags: vec![],
        }
    }

    #[test]
    fn by_id() {
        let r = score_selection(&Outcome::Selected { paper_id: "bn".into() }, &instance(), "c", None);
        assert!(r.correct);
        assert_eq!(r.match_kind, MatchKind::ById);
    }

    #[test]
    fn by_title_for_answers_and_resolved_selections() {
        let answer = Outcome::Answered {
            title: "batch normalization accelerating deep network training by reducing internal covariate shift".into(),
        };
        assert_eq!(score_selection(&answer, &instance(), "c", None).match_kind, MatchKind::ByTitle);
        let other = Outcome::Selected { paper_id: "dup".into() };
        let resolved = Some("BATCH NORMALIZATION - accelerating deep network training by reducing internal covariate shift");
        assert!(score_selection(&other, &instance(), "c", resolved).correct);
        assert!(!score_selection(&other, &instance(), "c", Some("Layer Normalization")).correct);
    }

    #[test]
    fn technical_failure_is_incorrect() {
        let out = Outcome::TechnicalFailure { error_class: TechnicalErrorClass::UnparseableResponse };
        let r = score_selection(&out, &instance(), "c", None);
        assert!(!r.correct);
        assert_eq!(r.technical_error, Some(TechnicalErrorClass::UnparseableResponse));
    }
}
