mod fit;
mod gini;
mod simulate;
mod summarize;

pub use fit::{fit, FitArgs, DEVIATIONS, DIAGNOSTICS_FILE};
pub use gini::{gini, GiniArgs, GINI_SUMMARY_FILE};
pub use simulate::{simulate, SimulateArgs};
pub use summarize::{summarize, SummarizeArgs, METRICS_FILE, PREDICTIVE_LOSS_FILE, SUMMARY_FILE};
