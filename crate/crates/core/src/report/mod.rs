//! Figures as self-contained SVG and the consolidated JSON report.

pub mod cli;
pub mod consolidated;
pub mod figures;
pub mod svg;

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use consolidated::{consolidated_report, ConsolidatedReport, ReportOptions};
pub use figures::{
    best_f1_step, gr_histogram_svg, linear_fit, load_training_log, meanstd_scatter_svg, metric_scatter_svg,
    pearson, training_curves_svg, Coloring, LinearFit, TrainingLogEntry,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    GrHistogram,
    MeanstdScatter,
    MetricScatter,
    TrainingCurves,
}

impl FromStr for FigureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "gr_histogram" => Ok(FigureKind::GrHistogram),
            "meanstd_scatter" => Ok(FigureKind::MeanstdScatter),
            "metric_scatter" => Ok(FigureKind::MetricScatter),
            "training_curves" => Ok(FigureKind::TrainingCurves),
            other => Err(format!("unknown figure kind {other:?}")),
        }
    }
}

impl fmt::Display for FigureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FigureKind::GrHistogram => "gr_histogram",
            FigureKind::MeanstdScatter => "meanstd_scatter",
            FigureKind::MetricScatter => "metric_scatter",
            FigureKind::TrainingCurves => "training_curves",
        })
    }
}

/// Where a figure goes and what it is called.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSpec {
    pub kind: FigureKind,
    pub title: String,
    pub output: PathBuf,
}

impl FigureSpec {
    pub fn new(kind: FigureKind, output: impl Into<PathBuf>) -> Self {
        let title = match kind {
            FigureKind::GrHistogram => "Golden Rank distribution",
            FigureKind::MeanstdScatter => "Golden Rank mean vs. standard deviation",
            FigureKind::MetricScatter => "Metric relationship",
            FigureKind::TrainingCurves => "Validation during training",
        };
        FigureSpec {
            kind,
            title: title.to_string(),
            output: output.into(),
        }
    }

    pub fn write(&self, svg: &str) -> Result<()> {
        if let Some(dir) = self.output.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(&self.output, svg).map_err(|e| Error::io(&self.output, e))
    }
}

#[cfg(test)]
mod tests;
