use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiment::ExperimentReport;
use super::HarnessError;
use crate::alloc::write_allocation_csv;
use crate::edge::{write_delay_csv, EdgeWork};
use crate::popularity::write_popularity_csv;

/// Empirical CDF: sorted values with cumulative fraction `k / n`.
pub fn cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.into_iter()
        .enumerate()
        .map(|(k, x)| (x, (k + 1) as f64 / n))
        .collect()
}

pub(crate) fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 0 { 0.5 * (v[m - 1] + v[m]) } else { v[m] })
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl SeriesStats {
    pub fn of(values: &[f64]) -> Self {
        SeriesStats {
            mean: mean(values),
            median: median(values),
            min: values.iter().copied().reduce(f64::min),
            max: values.iter().copied().reduce(f64::max),
        }
    }
}

/// Condensed results plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub n_users: usize,
    pub n_chunks: u64,
    pub qoe: BTreeMap<String, SeriesStats>,
    pub precision: BTreeMap<String, SeriesStats>,
    pub switch_delay_ms: SeriesStats,
    pub switch_events: usize,
    pub startup_ms: SeriesStats,
    pub sessions: usize,
    pub decodable_sessions: usize,
    pub work: EdgeWork,
    /// Per scheme, user-chunks where reassembled > HAS-10 or HAS-10 > conventional.
    pub bandwidth_order_violations: BTreeMap<String, usize>,
    /// Per scheme, mean bits per user-chunk as `[reassembled, has10, conventional]`.
    pub mean_bandwidth_bits: BTreeMap<String, [f64; 3]>,
    pub train_mae: Vec<f64>,
}

impl Summary {
    pub fn from_report(r: &ExperimentReport) -> Self {
        let delays: Vec<f64> = r.delays.iter().map(|d| d.ms).collect();
        let startup: Vec<f64> = r.startup.iter().map(|d| d.ms).collect();
        Summary {
            config: r.config.clone(),
            seed: r.config.seed,
            n_users: r.n_users,
            n_chunks: r.n_chunks,
            qoe: r.qoe.iter().map(|(k, v)| (k.clone(), SeriesStats::of(v))).collect(),
            precision: r.precision.iter().map(|(k, v)| (k.clone(), SeriesStats::of(v))).collect(),
            switch_delay_ms: SeriesStats::of(&delays),
            switch_events: delays.len(),
            startup_ms: SeriesStats::of(&startup),
            sessions: r.sessions,
            decodable_sessions: r.decodable_sessions,
            work: r.work,
            bandwidth_order_violations: r
                .bandwidth
                .iter()
                .map(|(k, rows)| (k.clone(), rows.iter().filter(|b| !b.ordered()).count()))
                .collect(),
            mean_bandwidth_bits: r
                .bandwidth
                .iter()
                .map(|(k, rows)| {
                    let n = rows.len().max(1) as f64;
                    let sum = rows.iter().fold([0.0; 3], |acc, b| {
                        [
                            acc[0] + b.reassembled as f64,
                            acc[1] + b.has10 as f64,
                            acc[2] + b.conventional as f64,
                        ]
                    });
                    (k.clone(), sum.map(|s| s / n))
                })
                .collect(),
            train_mae: r.train_mae.clone(),
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, HarnessError> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

fn io(e: csv::Error) -> HarnessError {
    HarnessError::Io(e.to_string())
}

fn write_cdf<W: Write>(out: W, value_col: &str, values: &[f64]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([value_col, "cdf"]).map_err(io)?;
    for (x, c) in cdf(values) {
        w.write_record([format!("{x}"), format!("{c}")]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every report artifact into `out_dir` and returns the paths written.
///
/// `precision.csv` and `qoe_<scheme>.csv` hold CDFs, `*_series.csv` the
/// per-chunk values, `delay.csv` one row per switch, `delay_histogram.csv`
/// counts per frame delay, `bandwidth.csv` per-user per-chunk bits and
/// `summary.json` the condensed results with the configuration.
pub fn emit_report(report: &ExperimentReport, out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::Io(format!("{}: {e}", out_dir.display())))?;
    let mut written = Vec::new();
    let mut track = |name: &str| {
        written.push(out_dir.join(name));
        name.to_string()
    };

    {
        let mut w = csv::Writer::from_writer(create(out_dir, &track("precision.csv"))?);
        w.write_record(["predictor", "precision", "cdf"]).map_err(io)?;
        for (name, values) in &report.precision {
            for (x, c) in cdf(values) {
                w.write_record([name.clone(), format!("{x}"), format!("{c}")]).map_err(io)?;
            }
        }
        w.flush()?;
    }
    {
        let mut w = csv::Writer::from_writer(create(out_dir, &track("precision_series.csv"))?);
        w.write_record(["chunk", "predictor", "precision"]).map_err(io)?;
        for (name, values) in &report.precision {
            for (j, x) in values.iter().enumerate() {
                w.write_record([j.to_string(), name.clone(), format!("{x}")]).map_err(io)?;
            }
        }
        w.flush()?;
    }
    for scheme in report.schemes() {
        let name = scheme.name();
        let values = report.qoe.get(name).map(Vec::as_slice).unwrap_or(&[]);
        write_cdf(create(out_dir, &track(&format!("qoe_{name}.csv")))?, "qoe", values)?;
        let allocs = report.allocations.get(name).map(Vec::as_slice).unwrap_or(&[]);
        write_allocation_csv(create(out_dir, &track(&format!("allocation_{name}.csv")))?, allocs).map_err(io)?;
    }
    {
        let mut w = csv::Writer::from_writer(create(out_dir, &track("qoe_series.csv"))?);
        w.write_record(["chunk", "scheme", "qoe"]).map_err(io)?;
        for (name, values) in &report.qoe {
            for (j, x) in values.iter().enumerate() {
                w.write_record([j.to_string(), name.clone(), format!("{x}")]).map_err(io)?;
            }
        }
        w.flush()?;
    }
    write_delay_csv(create(out_dir, &track("delay.csv"))?, &report.delays).map_err(io)?;
    {
        let mut hist: BTreeMap<u64, usize> = BTreeMap::new();
        for d in &report.delays {
            *hist.entry(d.frames).or_default() += 1;
        }
        let frame_ms = report.config.stream.frame_interval_ms();
        let mut w = csv::Writer::from_writer(create(out_dir, &track("delay_histogram.csv"))?);
        w.write_record(["frames", "ms", "count"]).map_err(io)?;
        for (frames, count) in hist {
            w.write_record([frames.to_string(), format!("{}", frames as f64 * frame_ms), count.to_string()])
                .map_err(io)?;
        }
        w.flush()?;
    }
    {
        let mut w = csv::Writer::from_writer(create(out_dir, &track("bandwidth.csv"))?);
        w.write_record(["scheme", "chunk", "user_id", "reassembled_bits", "has10_bits", "conventional_bits"])
            .map_err(io)?;
        for (name, rows) in &report.bandwidth {
            for b in rows {
                w.write_record([
                    name.clone(),
                    b.chunk.to_string(),
                    b.user_id.to_string(),
                    b.reassembled.to_string(),
                    b.has10.to_string(),
                    b.conventional.to_string(),
                ])
                .map_err(io)?;
            }
        }
        w.flush()?;
    }
    write_popularity_csv(create(out_dir, &track("popularity.csv"))?, &report.popularity).map_err(io)?;
    {
        let mut out = create(out_dir, &track("summary.json"))?;
        serde_json::to_writer_pretty(&mut out, &Summary::from_report(report))
            .map_err(|e| HarnessError::Io(e.to_string()))?;
        out.flush()?;
    }
    Ok(written)
}

pub fn load_summary<R: Read>(input: R) -> Result<Summary, HarnessError> {
    serde_json::from_reader(input).map_err(|e| HarnessError::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_is_monotone() {
        let c = cdf(&[3.0, 1.0, 2.0, 2.0]);
        assert_eq!(c.iter().map(|p| p.0).collect::<Vec<_>>(), vec![1.0, 2.0, 2.0, 3.0]);
        assert!(c.windows(2).all(|w| w[0].1 <= w[1].1));
        assert_eq!(c.last().unwrap().1, 1.0);
        assert!(cdf(&[]).is_empty());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
