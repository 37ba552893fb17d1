//! Deviation from linearity of `L(x) = v₁ᵀ R(x) v₂` along its gradient.
//!
//! For a step `ε`, the deviation is
//! `|L(x − ε∇L) − (L(x) − ε‖∇L‖²)|`. Every step size is evaluated on the same
//! draws of `(x, v₁, v₂)`.

use crate::error::{Error, Result};
use crate::experiments::{fmt_float, logspace, parallel_map, percentile_sorted, ExperimentReport};
use crate::linalg;
use crate::mappings::{self, MappingKind};
use crate::rng::Rng;

pub const EXPERIMENT: &str = "linearity";

#[derive(Clone, Debug, PartialEq)]
pub struct LinearityConfig {
    pub mappings: Vec<MappingKind>,
    pub samples: usize,
    pub eps: Vec<f64>,
    pub seed: u64,
}

impl Default for LinearityConfig {
    fn default() -> Self {
        Self {
            mappings: vec![
                MappingKind::Procrustes,
                MappingKind::SixD,
                MappingKind::Quaternion,
                MappingKind::RotVec,
                MappingKind::ALL[1],
            ],
            samples: 10_000,
            eps: logspace(1e-3, 1.0, 20),
            seed: 0,
        }
    }
}

impl LinearityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 100 {
            return Err(Error::InvalidConfig(format!("linearity needs at least 100 samples, got {}", self.samples)));
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::InvalidConfig("step sizes must be positive and finite".into()));
        }
        if self.mappings.is_empty() {
            return Err(Error::InvalidConfig("no mapping selected".into()));
        }
        Ok(())
    }
}

/// Parses a step-size grid: `lo:hi:logspaceN`, `lo:hi:linspaceN` or a
/// comma-separated list.
pub fn parse_eps_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("bad step grid '{spec}' (expected lo:hi:logspaceN, lo:hi:linspaceN or a comma list)"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [lo, hi, kind] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let (log, count) = if let Some(c) = kind.strip_prefix("logspace") {
                (true, c)
            } else if let Some(c) = kind.strip_prefix("linspace") {
                (false, c)
            } else {
                return Err(bad());
            };
            let count: usize = count.parse().map_err(|_| bad())?;
            if count == 0 || !(lo > 0.0 && hi >= lo) {
                return Err(bad());
            }
            if log {
                logspace(lo, hi, count)
            } else if count == 1 {
                vec![lo]
            } else {
                (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
            }
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<f64>>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() || grid.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(bad());
    }
    Ok(grid)
}

/// Per-mapping result: one sorted deviation sample per step size, plus the
/// number of rejected draws.
#[derive(Clone, Debug, PartialEq)]
pub struct Deviations {
    pub kind: MappingKind,
    pub per_eps: Vec<Vec<f64>>,
    pub resampled: usize,
}

fn loss(r: &[f64; 9], v1: &[f64; 3], v2: &[f64; 3]) -> f64 {
    let m = linalg::unvec9(r);
    linalg::dot(v1, &linalg::mat_vec(&m, v2))
}

/// Deviations of one mapping; `stream` selects the random stream.
pub fn deviations(kind: MappingKind, cfg: &LinearityConfig, stream: u64) -> Result<Deviations> {
    let mut rng = Rng::new(cfg.seed).split(stream);
    let mut per_eps = vec![Vec::with_capacity(cfg.samples); cfg.eps.len()];
    let mut resampled = 0;
    let n = kind.input_dim();
    let mut done = 0;
    while done < cfg.samples {
        let x = rng.normal_vec(n);
        let v1 = rng.unit_vector3();
        let v2 = rng.unit_vector3();
        let e = match mappings::jacobian_with_fallback(kind, &x) {
            Ok(e) => e,
            Err(Error::DegenerateInput { .. }) => {
                resampled += 1;
                continue;
            }
            Err(err) => return Err(err),
        };
        let l0 = loss(&e.value.vec9(), &v1, &v2);
        // ∂L/∂vec(R) = vec(v₁v₂ᵀ)
        let dl = linalg::vec9(&linalg::outer(&v1, &v2));
        let grad = e.jacobian.transpose_mul_vec(&dl);
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        let mut row = Vec::with_capacity(cfg.eps.len());
        for &eps in &cfg.eps {
            let xs: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a - eps * g).collect();
            match mappings::apply(kind, &xs) {
                Ok(r) => row.push((loss(&r.vec9(), &v1, &v2) - (l0 - eps * g2)).abs()),
                Err(Error::DegenerateInput { .. }) => break,
                Err(err) => return Err(err),
            }
        }
        if row.len() < cfg.eps.len() {
            resampled += 1;
            continue;
        }
        for (bucket, d) in per_eps.iter_mut().zip(row) {
            bucket.push(d);
        }
        done += 1;
    }
    for bucket in per_eps.iter_mut() {
        bucket.sort_by(f64::total_cmp);
    }
    Ok(Deviations { kind, per_eps, resampled })
}

/// Median and quartiles of the deviation per mapping and step size.
pub fn run_linearity(cfg: &LinearityConfig) -> Result<ExperimentReport> {
    run_linearity_jobs(cfg, 1)
}

pub fn run_linearity_jobs(cfg: &LinearityConfig, jobs: usize) -> Result<ExperimentReport> {
    cfg.validate()?;
    let items: Vec<(usize, MappingKind)> = cfg.mappings.iter().copied().enumerate().collect();
    let results = parallel_map(items, jobs, |(i, kind)| deviations(kind, cfg, i as u64));
    let mut report = ExperimentReport::new();
    for res in results {
        let d = res?;
        let name = d.kind.to_string();
        for (eps, sorted) in cfg.eps.iter().zip(&d.per_eps) {
            let key = fmt_float(*eps);
            report.push(EXPERIMENT, &name, cfg.seed, key.clone(), "p25", percentile_sorted(sorted, 25.0))?;
            report.push(EXPERIMENT, &name, cfg.seed, key.clone(), "median", percentile_sorted(sorted, 50.0))?;
            report.push(EXPERIMENT, &name, cfg.seed, key, "p75", percentile_sorted(sorted, 75.0))?;
        }
        report.push(EXPERIMENT, &name, cfg.seed, "all", "resampled", d.resampled as f64)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_steps_are_more_linear() {
        let cfg = LinearityConfig {
            samples: 200,
            eps: vec![1e-3, 1.0],
            ..Default::default()
        };
        let report = run_linearity(&cfg).unwrap();
        for kind in &cfg.mappings {
            let name = kind.to_string();
            let small = report.values(EXPERIMENT, &name, &fmt_float(1e-3), "median")[0];
            let large = report.values(EXPERIMENT, &name, &fmt_float(1.0), "median")[0];
            assert!(small < large, "{name}: {small} vs {large}");
        }
    }

    #[test]
    fn parallel_run_matches_sequential() {
        let cfg = LinearityConfig {
            samples: 150,
            eps: vec![0.01, 0.1],
            ..Default::default()
        };
        assert_eq!(run_linearity(&cfg).unwrap().to_csv(), run_linearity_jobs(&cfg, 3).unwrap().to_csv());
    }

    #[test]
    fn eps_grids() {
        assert_eq!(parse_eps_grid("1e-3:1:logspace20").unwrap(), logspace(1e-3, 1.0, 20));
        assert_eq!(parse_eps_grid("0.1:0.3:linspace3").unwrap().len(), 3);
        assert_eq!(parse_eps_grid("0.5,0.25").unwrap(), vec![0.5, 0.25]);
        for bad in ["", "1:2", "1:2:cubic3", "0:1:logspace5", "a,b", "1:2:logspace0", "-1"] {
            assert!(parse_eps_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = LinearityConfig {
            samples: 99,
            ..Default::default()
        };
        assert!(run_linearity(&cfg).is_err());
        cfg.samples = 100;
        cfg.eps = vec![0.0];
        assert!(run_linearity(&cfg).is_err());
    }
}
