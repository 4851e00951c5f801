//! Scores the four reference cases in both modes and prints the Markdown
//! report.
//!
//!     cargo run --example score_reference_cases

use deceptive_risk::corpus::{batch_score, emit_report, ReportFormat};
use deceptive_risk::fixtures;
use deceptive_risk::model::Mode;

fn main() -> deceptive_risk::Result<()> {
    let corpus = fixtures::reference_corpus();
    let assessments = batch_score(
        &corpus,
        &fixtures::default_profile(),
        &fixtures::default_detector(),
        &Mode::BOTH,
    )?;
    print!("{}", emit_report(&assessments, ReportFormat::Human));
    Ok(())
}
