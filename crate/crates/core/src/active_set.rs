//! Active-set classification at a forward solution.

use alloc::vec;
use alloc::vec::Vec;

use crate::problem::QpProblem;
use crate::solver::QpSolution;

pub const DEFAULT_EPS_ACTIVE: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct ActiveSet {
    pub active_rows: Vec<usize>,
    pub inactive_rows: Vec<usize>,
    /// `Cz* − d`
    pub slack: Vec<f64>,
    /// `min_{i∈ℐ} −slackᵢ`, or `+∞` when every row is active.
    pub margin: f64,
    pub threshold: f64,
    position: Vec<Option<usize>>,
}

impl ActiveSet {
    /// Partitions rows by `slackᵢ ≥ −eps_active` (ties count as active).
    pub fn from_slack(slack: Vec<f64>, eps_active: f64) -> ActiveSet {
        let mut active_rows = Vec::new();
        let mut inactive_rows = Vec::new();
        let mut position = vec![None; slack.len()];
        let mut margin = f64::INFINITY;
        for (i, &s) in slack.iter().enumerate() {
            if s >= -eps_active {
                position[i] = Some(active_rows.len());
                active_rows.push(i);
            } else {
                inactive_rows.push(i);
                margin = margin.min(-s);
            }
        }
        ActiveSet { active_rows, inactive_rows, slack, margin, threshold: eps_active, position }
    }

    pub fn num_active(&self) -> usize {
        self.active_rows.len()
    }

    pub fn is_active(&self, row: usize) -> bool {
        self.position[row].is_some()
    }

    /// Index of `row` within `active_rows`.
    pub fn active_position(&self, row: usize) -> Option<usize> {
        self.position[row]
    }
}

pub fn classify_active_set(problem: &QpProblem, solution: &QpSolution, eps_active: f64) -> ActiveSet {
    ActiveSet::from_slack(problem.inequality_slack(&solution.z), eps_active)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        let a = ActiveSet::from_slack(vec![-3e-6, -0.5], 1e-5);
        assert_eq!(a.active_rows, vec![0]);
        assert_eq!(a.inactive_rows, vec![1]);
        assert_eq!(a.margin, 0.5);

        let e = ActiveSet::from_slack(Vec::new(), 1e-5);
        assert!(e.active_rows.is_empty() && e.inactive_rows.is_empty());
        assert_eq!(e.margin, f64::INFINITY);

        let b = ActiveSet::from_slack(vec![-2e-5], 1e-5);
        assert!(b.active_rows.is_empty());
        assert_eq!(b.inactive_rows, vec![0]);
    }

    #[test]
    fn tie_is_active() {
        let a = ActiveSet::from_slack(vec![-1e-5], 1e-5);
        assert_eq!(a.active_rows, vec![0]);
        assert_eq!(a.active_position(0), Some(0));
    }
}
