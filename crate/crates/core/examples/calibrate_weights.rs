//! Searches the weight grid for a profile that reproduces the reference
//! bands, then shows what happens on a grid that is too coarse.
//!
//!     cargo run --release --example calibrate_weights

use deceptive_risk::calibrate::{calibrate, CalibrationOutcome, SearchSpace};
use deceptive_risk::fixtures;

fn main() -> deceptive_risk::Result<()> {
    let corpus = fixtures::reference_corpus();
    let constraints = fixtures::reference_constraints();
    for c in &constraints {
        println!("constraint: {}", c.describe());
    }

    for step in [0.05, 0.5] {
        println!("\ngrid step {step}");
        match calibrate(&corpus, &constraints, &SearchSpace::from_defaults(step))? {
            CalibrationOutcome::Found(found) => {
                println!("found at grid point {}", found.grid_points_examined);
                print!("{}", found.profile.to_json());
                print!("{}", found.detector.to_json());
            }
            CalibrationOutcome::Exhausted(report) => {
                println!("exhausted {} grid points", report.grid_points);
                if let Some(best) = report.best {
                    for f in best.failures {
                        println!("nearest miss: {} (got {:.3})", f.constraint, f.actual);
                    }
                }
            }
        }
    }
    Ok(())
}
