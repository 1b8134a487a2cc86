//! Run configuration: JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use dxpp_core::active_set::DEFAULT_EPS_ACTIVE;
use dxpp_core::penalty::{PenaltyConfig, DEFAULT_DELTA, DEFAULT_ZETA};
use dxpp_core::solver::{SolverSettings, BUILTIN_SOLVER};
use serde::{Deserialize, Serialize};

use crate::format::FormatError;

/// Which parameters the gradient check differentiates.
#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum GradMode {
    /// Full Jacobian with respect to `q`.
    #[default]
    Q,
    /// All six data blocks, compared through one seeded VJP.
    All,
}

impl GradMode {
    pub fn parse(s: &str) -> Option<GradMode> {
        match s {
            "q" => Some(GradMode::Q),
            "all" => Some(GradMode::All),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub family: String,
    pub sizes: Vec<String>,
    pub seeds: Vec<u64>,
    pub delta: f64,
    pub zeta: f64,
    pub eps_active: f64,
    pub eps_abs: f64,
    pub solver_choice: String,
    pub prune_inactive: bool,
    pub repetitions: usize,
    pub out: PathBuf,
    pub mode: GradMode,
    pub deltas: Vec<f64>,
    pub timeout_secs: f64,
    /// Seeds whose gradcheck instance is made infeasible on purpose.
    pub inject_infeasible: Vec<u64>,
    /// Gradcheck pass threshold on mean ε_rel; by default 1e-5 up to
    /// n = 100 and 1e-3 above.
    pub max_eps_rel: Option<f64>,
    pub risk_aversion: f64,
    pub turnover: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            family: "random_qp".into(),
            sizes: vec!["10x5".into()],
            seeds: (0..50).collect(),
            delta: DEFAULT_DELTA,
            zeta: DEFAULT_ZETA,
            eps_active: DEFAULT_EPS_ACTIVE,
            eps_abs: 1e-6,
            solver_choice: BUILTIN_SOLVER.into(),
            prune_inactive: true,
            repetitions: 5,
            out: PathBuf::from("out"),
            mode: GradMode::Q,
            deltas: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7],
            timeout_secs: 300.0,
            inject_infeasible: Vec::new(),
            max_eps_rel: None,
            risk_aversion: 10.0,
            turnover: 2.0,
        }
    }
}

impl RunConfig {
    /// Loads a config file. A run manifest is accepted too; its `config`
    /// field is used.
    pub fn load(path: &Path) -> Result<RunConfig, FormatError> {
        let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let inner = match value.get("config") {
            Some(c) if value.get("version").is_some() => c.clone(),
            _ => value,
        };
        Ok(serde_json::from_value(inner)?)
    }

    pub fn penalty(&self) -> Result<PenaltyConfig, dxpp_core::Error> {
        PenaltyConfig::new(self.delta, self.zeta, self.prune_inactive)
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings::with_eps_abs(self.eps_abs)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.penalty().map_err(|e| e.to_string())?;
        self.solver_settings().validate().map_err(|e| e.to_string())?;
        if !(self.eps_active >= 0.0) {
            return Err("eps_active must be nonnegative".into());
        }
        if self.sizes.is_empty() {
            return Err("no sizes given".into());
        }
        if self.seeds.is_empty() {
            return Err("no seeds given".into());
        }
        if self.repetitions == 0 {
            return Err("repetitions must be at least 1".into());
        }
        if self.deltas.iter().any(|d| !(*d > 0.0)) {
            return Err("deltas must be positive".into());
        }
        if !(self.timeout_secs > 0.0) {
            return Err("timeout must be positive".into());
        }
        Ok(())
    }
}

/// `"50"` → seeds 0..50, `"3..7"` → 3..7, `"1,4,9"` → that list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let s = s.trim();
    let bad = || format!("invalid seed list '{s}'");
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
        if hi <= lo {
            return Err(bad());
        }
        return Ok((lo..hi).collect());
    }
    if s.contains(',') {
        return s.split(',').filter(|t| !t.trim().is_empty()).map(|t| t.trim().parse().map_err(|_| bad())).collect();
    }
    let count: u64 = s.parse().map_err(|_| bad())?;
    if count == 0 {
        return Err(bad());
    }
    Ok((0..count).collect())
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(|_| format!("invalid list entry '{}'", t.trim())))
        .collect()
}

/// `"10x5"` → `(10, 5)`.
pub fn parse_pair(s: &str) -> Option<(usize, usize)> {
    let (a, b) = s.split_once(['x', 'X'])?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_forms() {
        assert_eq!(parse_seeds("3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("2..5").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_seeds("7, 1").unwrap(), vec![7, 1]);
        assert_eq!(parse_seeds("4,").unwrap(), vec![4]);
        assert!(parse_seeds("0").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!((c.delta, c.zeta, c.eps_abs, c.eps_active), (1e-6, 10.0, 1e-6, 1e-5));
        assert_eq!(c.deltas.len(), 7);
        assert_eq!(parse_pair("10x5"), Some((10, 5)));
        assert_eq!(parse_pair("10"), None);
    }

    #[test]
    fn partial_json_keeps_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"sizes":["50x10"],"delta":1e-4}"#).unwrap();
        assert_eq!(c.sizes, vec!["50x10".to_string()]);
        assert_eq!(c.delta, 1e-4);
        assert_eq!(c.zeta, 10.0);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus":1}"#).is_err());
    }
}
