//! Sample-size sweeps of the empirical rate.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use surro_core::models::{GaussianLatentModel, SymmetricMixture};
use surro_core::rates::sweep::summarize;
use surro_core::rates::{sample_rate_sweep, SweepModel, SweepRow, SweepSummary};

use crate::error::{io_error, CliError, CliResult, Context};
use crate::format::num;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepModelSpec {
    GaussianLatent {
        sigma_x2: f64,
        sigma_y2: f64,
        theta_star: f64,
    },
    Mixture {
        theta_star: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub name: String,
    pub model: SweepModelSpec,
    pub ks: Vec<usize>,
    pub seeds: Vec<u64>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::ConfigInvalid(msg.into())
}

impl SweepConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(io_error(path))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.seeds.is_empty() {
            return Err(invalid("seeds must not be empty"));
        }
        if self.ks.is_empty() {
            return Err(invalid("ks must not be empty"));
        }
        if self.ks[0] == 0 || self.ks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("ks must be positive and strictly ascending"));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("seeds must be distinct"));
        }
        self.model()?;
        Ok(())
    }

    pub fn model(&self) -> CliResult<SweepModel> {
        match self.model {
            SweepModelSpec::GaussianLatent {
                sigma_x2,
                sigma_y2,
                theta_star,
            } => GaussianLatentModel::new(sigma_x2, sigma_y2, theta_star)
                .map(SweepModel::Gaussian)
                .map_err(|e| invalid(format!("model: {e}"))),
            SweepModelSpec::Mixture { theta_star } => SymmetricMixture::new(theta_star)
                .map(SweepModel::Mixture)
                .map_err(|e| invalid(format!("model: {e}"))),
        }
    }
}

pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummary>,
}

pub fn run_sweep(cfg: &SweepConfig) -> CliResult<SweepOutcome> {
    cfg.validate()?;
    let rows = sample_rate_sweep(&cfg.model()?, &cfg.ks, &cfg.seeds)
        .context(|| format!("{}: sweep", cfg.name))?;
    let summary = summarize(&rows);
    Ok(SweepOutcome { rows, summary })
}

pub fn rows_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("k,seed,rho_samp,abs_dev,theta_hat\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{}",
            r.k,
            r.seed,
            num(r.rho_samp),
            num(r.abs_dev),
            num(r.theta_hat)
        )
        .unwrap();
    }
    s
}

pub fn summary_csv(summary: &[SweepSummary]) -> String {
    let mut s = String::from("k,median_abs_dev,q90_abs_dev\n");
    for r in summary {
        writeln!(s, "{},{},{}", r.k, num(r.median_abs_dev), num(r.q90_abs_dev)).unwrap();
    }
    s
}

/// Writes `sweep.csv` and `sweep_summary.csv` into `dir`.
pub fn write_sweep(out: &SweepOutcome, dir: &Path) -> CliResult<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let a = dir.join("sweep.csv");
    fs::write(&a, rows_csv(&out.rows)).map_err(io_error(&a))?;
    let b = dir.join("sweep_summary.csv");
    fs::write(&b, summary_csv(&out.summary)).map_err(io_error(&b))?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let ok = r#"{"name": "g", "model": {"kind": "gaussian_latent", "sigma_x2": 1, "sigma_y2": 1, "theta_star": 0},
            "ks": [10, 20], "seeds": [1, 2]}"#;
        assert!(SweepConfig::from_json(ok).is_ok());
        for (from, to, msg) in [
            ("[1, 2]", "[]", "seeds must not be empty"),
            ("[10, 20]", "[20, 10]", "strictly ascending"),
            ("[1, 2]", "[2, 2]", "distinct"),
            ("\"theta_star\": 0}", "\"theta_star\": 0, \"extra\": 1}", "extra"),
        ] {
            let e = SweepConfig::from_json(&ok.replace(from, to)).unwrap_err().to_string();
            assert!(e.contains(msg), "{e}");
        }
    }

    #[test]
    fn gaussian_sweep_tables() {
        let c = SweepConfig::from_json(
            r#"{"name": "g", "model": {"kind": "gaussian_latent", "sigma_x2": 1, "sigma_y2": 2, "theta_star": 0.5},
            "ks": [5, 50], "seeds": [3, 1]}"#,
        )
        .unwrap();
        let out = run_sweep(&c).unwrap();
        let csv = rows_csv(&out.rows);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().starts_with("5,1,"));
        assert!(out.rows.iter().all(|r| r.abs_dev <= 1e-6));
        assert_eq!(summary_csv(&out.summary).lines().count(), 3);
    }
}
