//! `occuforge eval occ <pred> <gt>` and `occuforge eval pc --pred ... --truth ...`

use std::path::{Path, PathBuf};

use occuforge_core::grid::{iou_miou, SemanticOccupancyGrid};
use occuforge_core::io::read_ply_cloud;
use occuforge_core::metrics::{bev_histogram, chamfer, jsd, mmd, BevHistogram};
use serde::Serialize;

use super::write_json;
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::schemas::file_digest;

#[derive(Serialize)]
struct MetricEntry {
    metric: String,
    value: f64,
    parameters: serde_json::Value,
}

#[derive(Serialize)]
struct InputEntry {
    path: String,
    digest: String,
}

#[derive(Serialize)]
struct EvalReport {
    kind: &'static str,
    metrics: Vec<MetricEntry>,
    inputs: Vec<InputEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_class_iou: Option<std::collections::BTreeMap<u8, f64>>,
}

fn inputs(paths: &[&Path]) -> Result<Vec<InputEntry>, CliError> {
    paths
        .iter()
        .map(|p| {
            Ok(InputEntry {
                path: p.display().to_string(),
                digest: file_digest(p)?,
            })
        })
        .collect()
}

pub fn run_occ(pred: &Path, gt: &Path, out: &Path, config: &PipelineConfig) -> Result<(), CliError> {
    let load = |p: &Path| {
        SemanticOccupancyGrid::load_occg(p).map_err(|e| CliError::Usage(format!("occ {}: {e}", p.display())))
    };
    let report = iou_miou(&load(pred)?, &load(gt)?).map_err(CliError::compute)?;
    let out_report = EvalReport {
        kind: "occ",
        metrics: vec![
            MetricEntry {
                metric: "iou_occupied".into(),
                value: report.iou_occupied,
                parameters: serde_json::json!({}),
            },
            MetricEntry {
                metric: "miou".into(),
                value: report.miou,
                parameters: serde_json::json!({}),
            },
        ],
        inputs: inputs(&[pred, gt])?,
        per_class_iou: Some(report.per_class_iou.clone()),
    };
    write_json(out, &out_report)?;
    println!("{}", serde_json::to_string_pretty(&out_report).unwrap());
    let _ = config;
    Ok(())
}

pub fn run_pc(pred: &[PathBuf], truth: &[PathBuf], out: &Path, config: &PipelineConfig) -> Result<(), CliError> {
    if pred.is_empty() || truth.is_empty() {
        return Err(CliError::Usage("eval pc needs at least one --pred and one --truth cloud".into()));
    }
    let load = |p: &Path| read_ply_cloud(p).map_err(|e| CliError::Usage(format!("ply {}: {e}", p.display())));
    let pred_clouds: Vec<_> = pred.iter().map(|p| load(p)).collect::<Result<_, _>>()?;
    let truth_clouds: Vec<_> = truth.iter().map(|p| load(p)).collect::<Result<_, _>>()?;

    let binning = &config.metrics.bev;
    let pred_hists: Vec<BevHistogram> = pred_clouds.iter().map(|c| bev_histogram(c, binning)).collect();
    let truth_hists: Vec<BevHistogram> = truth_clouds.iter().map(|c| bev_histogram(c, binning)).collect();

    let mut metrics = Vec::new();
    let bin_params = serde_json::json!({
        "nx": binning.nx, "ny": binning.ny,
        "x_range": binning.x_range, "y_range": binning.y_range,
    });

    if pred_clouds.len() == 1 && truth_clouds.len() == 1 {
        let value = chamfer(&pred_clouds[0], &truth_clouds[0]).map_err(CliError::compute)?;
        metrics.push(MetricEntry {
            metric: "chamfer".into(),
            value,
            parameters: serde_json::json!({}),
        });
    }
    if let (Some(a), Some(b)) = (pred_hists.first(), truth_hists.first()) {
        if !a.empty && !b.empty {
            let value = jsd(a, b).map_err(CliError::compute)?;
            metrics.push(MetricEntry {
                metric: "jsd".into(),
                value,
                parameters: bin_params.clone(),
            });
        }
    }
    if pred_hists.len() >= 2 && truth_hists.len() >= 2 {
        let value = mmd(&pred_hists, &truth_hists, config.metrics.mmd_sigma).map_err(CliError::compute)?;
        let mut p = bin_params.clone();
        p["sigma"] = match config.metrics.mmd_sigma {
            Some(s) => serde_json::json!(s),
            None => serde_json::json!("median-pairwise"),
        };
        metrics.push(MetricEntry {
            metric: "mmd".into(),
            value,
            parameters: p,
        });
    }

    let all_paths: Vec<&Path> = pred.iter().chain(truth).map(|p| p.as_path()).collect();
    let out_report = EvalReport {
        kind: "pc",
        metrics,
        inputs: inputs(&all_paths)?,
        per_class_iou: None,
    };
    write_json(out, &out_report)?;
    println!("{}", serde_json::to_string_pretty(&out_report).unwrap());
    Ok(())
}
