//! Desk-scale experiments and their CSV reports.

pub mod align;
pub mod ik;
pub mod linearity;
pub mod probe;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};

pub use align::{run_alignment, AlignConfig, HeadChoice, LossChoice};
pub use ik::{run_ik, IKConfig};
pub use linearity::{parse_eps_grid, run_linearity, run_linearity_jobs, LinearityConfig};
pub use probe::{run_restricted_rotvec_probe, run_restricted_rotvec_probe_jobs};

pub const CSV_HEADER: &str = "experiment,mapping,seed,key,metric,value";

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub mapping: String,
    pub seed: u64,
    /// Optimizer step or step size, depending on the experiment.
    pub key: String,
    pub metric: String,
    pub value: f64,
}

/// Append-only list of report rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentReport {
    rows: Vec<ReportRow>,
}

/// Formats a float with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl ExperimentReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> &[ReportRow] {
        &self.rows
    }

    pub fn push(&mut self, experiment: &str, mapping: &str, seed: u64, key: impl Into<String>, metric: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFinite("report value"));
        }
        for field in [experiment, mapping, metric] {
            if field.contains([',', '\n', '"']) {
                return Err(Error::InvalidConfig(format!("report field '{field}' contains a separator")));
            }
        }
        self.rows.push(ReportRow {
            experiment: experiment.to_string(),
            mapping: mapping.to_string(),
            seed,
            key: key.into(),
            metric: metric.to_string(),
            value,
        });
        Ok(())
    }

    pub fn extend(&mut self, other: ExperimentReport) {
        self.rows.extend(other.rows);
    }

    /// Values of `metric` for `(experiment, mapping)` at `key`, in row order.
    pub fn values(&self, experiment: &str, mapping: &str, key: &str, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.experiment == experiment && r.mapping == mapping && r.key == key && r.metric == metric)
            .map(|r| r.value)
            .collect()
    }

    /// Single value of `metric` for one seed.
    pub fn value(&self, experiment: &str, mapping: &str, seed: u64, key: &str, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.experiment == experiment && r.mapping == mapping && r.seed == seed && r.key == key && r.metric == metric)
            .map(|r| r.value)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{},{}", r.experiment, r.mapping, r.seed, r.key, r.metric, fmt_float(r.value));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim_end_matches('\r') == CSV_HEADER => {}
            _ => return Err(Error::InvalidConfig(format!("CSV must start with '{CSV_HEADER}'"))),
        }
        let mut report = Self::new();
        for (i, line) in lines.enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::InvalidConfig(format!("CSV line {}: '{line}'", i + 2));
            if f.len() != 6 {
                return Err(bad());
            }
            let seed = f[2].parse().map_err(|_| bad())?;
            let value = f[5].parse().map_err(|_| bad())?;
            report.push(f[0], f[1], seed, f[3], f[4], value)?;
        }
        Ok(report)
    }

    /// Markdown table: one line per `(experiment, mapping, key, metric)`
    /// with mean, min and max over seeds. With `last_key_only`, keeps per
    /// `(experiment, mapping, metric)` only the numerically largest key.
    pub fn summary_markdown(&self, last_key_only: bool) -> String {
        type Group = (String, String, String);
        let mut keys: BTreeMap<Group, Vec<String>> = BTreeMap::new();
        let mut values: BTreeMap<(Group, String), Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            let g = (r.experiment.clone(), r.mapping.clone(), r.metric.clone());
            let ks = keys.entry(g.clone()).or_default();
            if !ks.contains(&r.key) {
                ks.push(r.key.clone());
            }
            values.entry((g, r.key.clone())).or_default().push(r.value);
        }
        let mut out = String::from("| experiment | mapping | key | metric | seeds | mean | min | max |\n");
        out.push_str("|---|---|---|---|---|---|---|---|\n");
        for (g, ks) in &keys {
            let selected: Vec<&String> = if last_key_only {
                let last = ks
                    .iter()
                    .max_by(|a, b| {
                        let (x, y) = (a.parse::<f64>().unwrap_or(f64::NEG_INFINITY), b.parse::<f64>().unwrap_or(f64::NEG_INFINITY));
                        x.total_cmp(&y)
                    })
                    .expect("non-empty group");
                vec![last]
            } else {
                ks.iter().collect()
            };
            for k in selected {
                let v = &values[&(g.clone(), k.clone())];
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                let min = v.iter().copied().fold(f64::INFINITY, f64::min);
                let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let _ = writeln!(out, "| {} | {} | {} | {} | {} | {:.6} | {:.6} | {:.6} |", g.0, g.1, k, g.2, v.len(), mean, min, max);
            }
        }
        out
    }
}

/// Nearest-rank percentile (`p` in `[0, 100]`) of an ascending slice.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Runs `f` over `items` on up to `jobs` threads; results keep item order.
pub fn parallel_map<T, R, F>(items: Vec<T>, jobs: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.into_iter().map(f).collect();
    }
    let n = items.len();
    let slots: Vec<Mutex<Option<T>>> = items.into_iter().map(|t| Mutex::new(Some(t))).collect();
    let results: Vec<Mutex<Option<R>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let item = slots[i].lock().expect("item lock").take().expect("each item taken once");
                let r = f(item);
                *results[i].lock().expect("result lock") = Some(r);
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().expect("result lock").expect("every item processed"))
        .collect()
}

/// Runs independent configurations on up to `jobs` threads and concatenates
/// their reports in configuration order.
pub fn run_batch<C, F>(configs: Vec<C>, jobs: usize, run: F) -> Result<ExperimentReport>
where
    C: Send,
    F: Fn(C) -> Result<ExperimentReport> + Sync,
{
    let mut report = ExperimentReport::new();
    for r in parallel_map(configs, jobs, run) {
        report.extend(r?);
    }
    Ok(report)
}

/// `count` points logarithmically spaced from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == count - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut r = ExperimentReport::new();
        r.push("align", "procrustes", 3, "500", "test_error_deg", 12.5).unwrap();
        r.push("linearity", "6d", 0, fmt_float(1e-3), "median", 1.0 / 3.0).unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("experiment,mapping,seed,key,metric,value\n"));
        assert!(csv.contains("align,procrustes,3,500,test_error_deg,1.2500000000000000e1\n"));
        assert!(!csv.contains('\r'));
        assert_eq!(ExperimentReport::from_csv(&csv).unwrap(), r);
    }

    #[test]
    fn rejects_non_finite_and_separators() {
        let mut r = ExperimentReport::new();
        assert!(r.push("a", "b", 0, "0", "m", f64::NAN).is_err());
        assert!(r.push("a,b", "b", 0, "0", "m", 1.0).is_err());
        assert!(ExperimentReport::from_csv("nope\n").is_err());
    }

    #[test]
    fn nearest_rank_percentiles() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(percentile_sorted(&v, 50.0), 5.0);
        assert_eq!(percentile_sorted(&v, 25.0), 3.0);
        assert_eq!(percentile_sorted(&v, 75.0), 8.0);
        assert_eq!(percentile_sorted(&v, 0.0), 1.0);
        assert_eq!(percentile_sorted(&v, 100.0), 10.0);
    }

    #[test]
    fn logspace_endpoints() {
        let g = logspace(1e-3, 1.0, 20);
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[19], 1.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn parallel_map_keeps_order() {
        let out = parallel_map((0..37).collect(), 4, |i: u64| i * i);
        assert_eq!(out, (0..37).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn summary_picks_last_step() {
        let mut r = ExperimentReport::new();
        for seed in 0..2 {
            r.push("align", "6d", seed, "0", "err", 90.0).unwrap();
            r.push("align", "6d", seed, "1000", "err", 2.0 + seed as f64).unwrap();
            r.push("align", "6d", seed, "500", "err", 9.0).unwrap();
        }
        let md = r.summary_markdown(true);
        assert!(md.contains("| align | 6d | 1000 | err | 2 | 2.500000 | 2.000000 | 3.000000 |"));
        assert!(!md.contains("| 500 |"));
        assert_eq!(r.summary_markdown(false).lines().count(), 5);
    }
}
