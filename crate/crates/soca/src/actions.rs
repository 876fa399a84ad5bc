//! Custom actions that answer from the live free-path assessment.

use sidewalk_core::freepath::{top_k_report, FreePathAssessment, ReportEntry};
use sidewalk_core::ObstacleKind;

/// How many clusters a report mentions.
pub const REPORT_K: usize = 5;
/// Below this many meters an obstacle is called close.
pub const CLOSE_M: f64 = 2.0;

pub const FREE_PATH_REPLY: &str = "the path ahead is free";
pub const NOTHING_SPOTTED_REPLY: &str = "I have not spotted anything yet";

fn spoken_label(entry: &ReportEntry) -> String {
    entry.label.map_or_else(|| "an unknown obstacle".to_string(), ObstacleKind::display_name)
}

pub fn render_entry(entry: &ReportEntry) -> String {
    format!("I see {} {:.1} meters {}", spoken_label(entry), entry.distance, entry.bearing_word)
}

/// The nearest clusters, one sentence each.
pub fn report_obstacles(assessment: &FreePathAssessment) -> (String, Vec<ReportEntry>) {
    let report = top_k_report(assessment, REPORT_K);
    if report.is_empty() {
        return (FREE_PATH_REPLY.to_string(), report);
    }
    let text = report.iter().map(render_entry).collect::<Vec<_>>().join(". ");
    (text, report)
}

/// A kind named anywhere in `text`, longest name first so "electric
/// scooter" wins over a shorter overlap.
pub fn mentioned_kind(text: &str) -> Option<ObstacleKind> {
    let norm: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");
    let padded = format!(" {norm} ");
    let mut kinds = ObstacleKind::ALL.to_vec();
    kinds.sort_by_key(|k| std::cmp::Reverse(k.display_name().len()));
    kinds.into_iter().find(|k| padded.contains(&format!(" {} ", k.display_name())))
}

/// Distance to the nearest reported obstacle of `kind`, or to the nearest
/// overall when no kind is given.
pub fn report_distance(last_report: Option<&[ReportEntry]>, kind: Option<ObstacleKind>) -> String {
    let Some(report) = last_report else {
        return NOTHING_SPOTTED_REPLY.to_string();
    };
    if report.is_empty() {
        return FREE_PATH_REPLY.to_string();
    }
    let nearest = report
        .iter()
        .filter(|e| kind.is_none() || e.label == kind)
        .min_by(|a, b| a.distance.total_cmp(&b.distance));
    match nearest {
        None => format!("I have not seen a {} yet", kind.expect("filtered by kind").display_name()),
        Some(e) if e.distance < CLOSE_M => format!("yes, about {:.1} meters, close", e.distance),
        Some(e) => format!("about {:.1} meters away", e.distance),
    }
}
