//! File formats, reports and the `srplan` command line over [`srplan_core`].

pub mod cli;
pub mod formats;
pub mod pnm;
pub mod report;

use rayon::prelude::*;
use srplan_core::{DesignRow, DseError, DseRequest, Explorer, SearchMode, SearchOutcome};

pub use srplan_core;

/// [`srplan_core::search`] with candidates evaluated on the rayon pool. The
/// outcome is identical to the sequential search.
pub fn search_parallel(request: DseRequest<'_>) -> Result<SearchOutcome, DseError> {
    let ex = Explorer::new(request)?;
    let rows: Vec<DesignRow> = match ex.mode() {
        SearchMode::Exhaustive => ex.candidates().par_iter().map(|c| ex.evaluate(c)).collect(),
        SearchMode::Screened => {
            let mut rows: Vec<DesignRow> = ex.candidates().par_iter().map(|c| ex.screen(c)).collect();
            let simulated: Vec<DesignRow> = ex.shortlist(&rows).par_iter().map(|c| ex.evaluate(c)).collect();
            for sim in simulated {
                if let Some(slot) = rows.iter_mut().find(|r| r.m1 == sim.m1 && r.m2 == sim.m2 && r.thr == sim.thr) {
                    *slot = sim;
                }
            }
            rows
        }
    };
    Ok(ex.finish(rows))
}
