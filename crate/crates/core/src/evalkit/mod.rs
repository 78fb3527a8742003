//! Evaluation protocol: gated optimal matching, Jaccard index and RMSE,
//! reports, and a multiscale LoG reference detector.

mod log;
mod matching;
mod report;

pub use log::{default_log_sigmas, log_baseline, log_responses, LOG_STEPS_PER_OCTAVE};
pub use matching::{
    forbidden_cost, hungarian, jaccard, match_detections, match_points, rmse, MatchResult,
    MatchedPair, Rmse, DEFAULT_GATE,
};
pub use report::{
    jaccard_plot, rows_from_csv, rows_to_csv, summarize, svg_line_plot, EvalRow, SummaryRow,
};
