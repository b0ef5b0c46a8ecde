use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::failure::{config_error, Classify, Failure};
use crate::model::Mode;
use crate::output;
use crate::simulate::{DensityRecord, RunReport};

#[derive(Args, Clone, Debug)]
pub struct ReportArgs {
    /// Run directories, each holding a `report.json`.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    /// Directory for `summary.json` and `summary.md`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineSummary {
    pub engine: String,
    pub conserved: String,
    pub conserved_drift: f64,
    pub norm_drift: Option<f64>,
    pub envelope_degree: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub directory: PathBuf,
    pub mode: Mode,
    pub k: f64,
    pub t_final: f64,
    pub engines: Vec<EngineSummary>,
    /// Largest grid-moment deviation over all observers, when both engines ran.
    pub max_deviation: Option<f64>,
    /// Validation of the final reduced quantum density, for grid runs.
    pub density: Option<DensityRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: Vec<RunSummary>,
}

fn summarize(dir: &Path) -> Result<RunSummary, Failure> {
    let path = dir.join("report.json");
    if !path.is_file() {
        config_error!("{} has no report.json", dir.display());
    }
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display())).runtime()?;
    let report: RunReport =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display())).runtime()?;
    let density_path = dir.join("density.json");
    let density = if density_path.is_file() {
        let text = std::fs::read_to_string(&density_path).runtime()?;
        Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", density_path.display())).runtime()?)
    } else {
        None
    };
    Ok(RunSummary {
        directory: dir.to_path_buf(),
        mode: report.config.mode,
        k: report.config.k,
        t_final: report.config.t_final,
        engines: report
            .engines
            .iter()
            .map(|e| EngineSummary {
                engine: e.engine.clone(),
                conserved: e.conserved.clone(),
                conserved_drift: e.conserved_drift,
                norm_drift: e.norm_drift,
                envelope_degree: e.envelope.as_ref().map(|f| f.degree),
            })
            .collect(),
        max_deviation: report
            .comparison
            .as_ref()
            .map(|c| c.rows.iter().fold(0.0, |m: f64, r| m.max(r.max_abs_deviation))),
        density,
    })
}

fn optional(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.3e}"))
}

pub fn markdown(summary: &Summary) -> String {
    let mut out = String::from(
        "| run | mode | k | t_final | engine | conserved drift | norm drift | envelope degree | max deviation | density valid | purity |\n\
         |---|---|---|---|---|---|---|---|---|---|---|\n",
    );
    for run in &summary.runs {
        let mode = serde_json::to_value(run.mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        for e in &run.engines {
            let density = run.density.as_ref().filter(|_| e.engine == "grid");
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} ({}) | {} | {} | {} | {} | {} |\n",
                run.directory.display(),
                mode,
                run.k,
                run.t_final,
                e.engine,
                optional(Some(e.conserved_drift)),
                e.conserved,
                optional(e.norm_drift),
                e.envelope_degree.map_or("-".into(), |d| d.to_string()),
                optional(run.max_deviation),
                density.map_or("-".into(), |d| d.validation.pass.to_string()),
                optional(density.map(|d| d.purity)),
            ));
        }
    }
    out
}

/// Prints a markdown table and optionally writes `summary.json` and `summary.md`.
pub fn run(args: &ReportArgs) -> Result<Summary, Failure> {
    let summary = Summary { runs: args.runs.iter().map(|d| summarize(d)).collect::<Result<_, _>>()? };
    let table = markdown(&summary);
    if let Some(dir) = &args.output {
        output::write_json(&dir.join("summary.json"), &summary).runtime()?;
        output::write_atomic(&dir.join("summary.md"), table.as_bytes()).runtime()?;
    }
    print!("{table}");
    Ok(summary)
}
