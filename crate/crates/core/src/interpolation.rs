//! Training-record synthesis.
//!
//! Every executed round contributes one observed accuracy improvement to the
//! column of the arm that was played. Unobserved entries of a column are
//! filled by Newton divided-difference extrapolation through the most recent
//! observations of that column.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_NODES: usize = 3;

/// Sparse matrix of observed accuracy improvements, one entry per round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordMatrix {
    num_arms: u32,
    max_round: u32,
    rows: BTreeMap<u32, (u32, f64)>,
    columns: BTreeMap<u32, Vec<(u32, f64)>>,
}

impl RecordMatrix {
    /// Matrix over arms `1..=num_arms` (that is, `N - 1` for `N` clients).
    pub fn new(num_arms: u32) -> Self {
        Self { num_arms, ..Default::default() }
    }

    pub fn num_arms(&self) -> u32 {
        self.num_arms
    }

    pub fn max_round(&self) -> u32 {
        self.max_round
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, round: u32) -> Option<(u32, f64)> {
        self.rows.get(&round).copied()
    }

    /// Recorded `(round, delta)` pairs of one arm, in round order.
    pub fn column(&self, arm: u32) -> &[(u32, f64)] {
        self.columns.get(&arm).map_or(&[], Vec::as_slice)
    }

    /// Rounds must be recorded in increasing order. Skipped rounds (no
    /// training happened) leave gaps.
    pub fn record(&mut self, round: u32, arm: u32, delta: f64) -> Result<()> {
        if round == 0 || round <= self.max_round {
            return Err(Error::RoundAlreadyRecorded(round));
        }
        if arm == 0 || arm > self.num_arms {
            return Err(Error::ArmOutOfRange { arm, max: self.num_arms });
        }
        if !(-1.0..=1.0).contains(&delta) {
            return Err(Error::DeltaOutOfRange(delta));
        }
        self.rows.insert(round, (arm, delta));
        self.columns.entry(arm).or_default().push((round, delta));
        self.max_round = round;
        Ok(())
    }
}

/// Newton form of the interpolating polynomial through a set of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonPolynomial {
    nodes: Vec<f64>,
    coefficients: Vec<f64>,
}

impl NewtonPolynomial {
    pub fn fit(points: &[(u32, f64)]) -> Result<Self> {
        let coefficients = divided_differences(points)?;
        let nodes = points.iter().map(|&(t, _)| f64::from(t)).collect();
        Ok(Self { nodes, coefficients })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    /// Nested evaluation of `c0 + c1 (x - t1) + c2 (x - t1)(x - t2) + ...`.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.coefficients.len();
        let mut acc = self.coefficients[k - 1];
        for j in (0..k - 1).rev() {
            acc = acc * (x - self.nodes[j]) + self.coefficients[j];
        }
        acc
    }
}

/// Newton coefficients `y[t1], y[t1,t2], ..., y[t1..tJ]`.
///
/// Node order is free; repeated nodes are rejected.
pub fn divided_differences(points: &[(u32, f64)]) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::InvalidConfig("divided differences need at least one point".into()));
    }
    for (i, &(t, _)) in points.iter().enumerate() {
        if points[..i].iter().any(|&(s, _)| s == t) {
            return Err(Error::DegenerateNodes(t));
        }
    }
    let x: Vec<f64> = points.iter().map(|&(t, _)| f64::from(t)).collect();
    let mut c: Vec<f64> = points.iter().map(|&(_, y)| y).collect();
    // After pass j, c[i] holds y[t_{i-j}, ..., t_i] for i >= j.
    for j in 1..c.len() {
        for i in (j..c.len()).rev() {
            c[i] = (c[i] - c[i - 1]) / (x[i] - x[i - j]);
        }
    }
    Ok(c)
}

/// Completes record-matrix columns and turns them into final-accuracy
/// estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonExtrapolator {
    /// At most this many of the most recent observations define the
    /// polynomial of a column.
    pub max_nodes: usize,
}

impl Default for NewtonExtrapolator {
    fn default() -> Self {
        Self { max_nodes: DEFAULT_MAX_NODES }
    }
}

impl NewtonExtrapolator {
    pub fn new(max_nodes: usize) -> Self {
        assert!(max_nodes >= 1, "max_nodes must be at least 1");
        Self { max_nodes }
    }

    /// Polynomial through the most recent `max_nodes` entries of a column.
    pub fn column_polynomial(&self, matrix: &RecordMatrix, arm: u32) -> Result<NewtonPolynomial> {
        let column = matrix.column(arm);
        if column.is_empty() {
            return Err(Error::NoObservations(arm));
        }
        let start = column.len().saturating_sub(self.max_nodes);
        NewtonPolynomial::fit(&column[start..])
    }

    /// Estimated improvements for rounds `1..=horizon` of `arm`. Recorded
    /// rounds keep their recorded value; all outputs lie in `[-1, 1]`.
    pub fn extrapolate_column(&self, matrix: &RecordMatrix, arm: u32, horizon: u32) -> Result<Vec<f64>> {
        let poly = self.column_polynomial(matrix, arm)?;
        let mut recorded = matrix.column(arm).iter().peekable();
        Ok((1..=horizon)
            .map(|tau| {
                while recorded.next_if(|&&(r, _)| r < tau).is_some() {}
                match recorded.peek() {
                    Some(&&(r, y)) if r == tau => y,
                    _ => poly.eval(f64::from(tau)).clamp(-1.0, 1.0),
                }
            })
            .collect())
    }

    /// `a0` plus the completed column summed over the horizon, in `[0, 1]`.
    pub fn final_accuracy_estimate(&self, matrix: &RecordMatrix, arm: u32, horizon: u32, a0: f64) -> Result<f64> {
        let gain: f64 = self.extrapolate_column(matrix, arm, horizon)?.iter().sum();
        Ok((a0 + gain).clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_matrix(arm: u32, points: &[(u32, f64)]) -> RecordMatrix {
        let mut m = RecordMatrix::new(19);
        for &(t, y) in points {
            m.record(t, arm, y).unwrap();
        }
        m
    }

    #[test]
    fn record_basics() {
        let mut m = RecordMatrix::new(19);
        m.record(1, 5, 0.12).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.max_round(), 1);
        assert!(matches!(m.record(1, 5, 0.1), Err(Error::RoundAlreadyRecorded(1))));
        assert!(matches!(m.record(2, 20, 0.1), Err(Error::ArmOutOfRange { .. })));
        assert!(matches!(m.record(2, 0, 0.1), Err(Error::ArmOutOfRange { .. })));
        assert!(matches!(m.record(2, 3, 1.5), Err(Error::DeltaOutOfRange(_))));
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn forty_records_one_per_row() {
        let mut m = RecordMatrix::new(19);
        for t in 1..=40u32 {
            m.record(t, (t * 7) % 19 + 1, 0.01).unwrap();
        }
        assert_eq!(m.len(), 40);
        let total: usize = (1..=19).map(|a| m.column(a).len()).sum();
        assert_eq!(total, 40);
    }

    #[test]
    fn squares_have_unit_leading_difference() {
        let c = divided_differences(&[(1, 1.0), (2, 4.0), (3, 9.0)]).unwrap();
        assert_eq!(c, vec![1.0, 3.0, 1.0]);
    }

    #[test]
    fn constant_data_kills_higher_differences() {
        assert_eq!(divided_differences(&[(5, 0.3)]).unwrap(), vec![0.3]);
        let c = divided_differences(&[(1, 0.7), (2, 0.7), (3, 0.7)]).unwrap();
        assert_eq!(c, vec![0.7, 0.0, 0.0]);
    }

    #[test]
    fn repeated_node_is_degenerate() {
        assert!(matches!(
            divided_differences(&[(1, 0.1), (3, 0.2), (1, 0.4)]),
            Err(Error::DegenerateNodes(1))
        ));
    }

    #[test]
    fn squares_extrapolate_then_clamp() {
        let poly = NewtonPolynomial::fit(&[(1, 1.0), (2, 4.0), (3, 9.0)]).unwrap();
        let raw: Vec<f64> = (1..=4).map(|t| poly.eval(f64::from(t))).collect();
        assert_eq!(raw, vec![1.0, 4.0, 9.0, 16.0]);

        // Recordable deltas must lie in [-1, 1]: use tau^2 / 100 instead.
        let m = column_matrix(2, &[(1, 0.01), (2, 0.04), (3, 0.09)]);
        let col = NewtonExtrapolator::default().extrapolate_column(&m, 2, 12).unwrap();
        for (i, v) in col.iter().enumerate() {
            let tau = (i + 1) as f64;
            assert!((v - (tau * tau / 100.0).min(1.0)).abs() < 1e-12, "tau={tau}: {v}");
        }
        assert_eq!(col[10], 1.0);
        assert_eq!(col[11], 1.0);
    }

    #[test]
    fn single_point_extrapolates_constant() {
        let m = column_matrix(4, &[(3, 0.05)]);
        let col = NewtonExtrapolator::default().extrapolate_column(&m, 4, 5).unwrap();
        assert_eq!(col, vec![0.05; 5]);
    }

    #[test]
    fn empty_column_errors() {
        let m = column_matrix(4, &[(3, 0.05)]);
        let ext = NewtonExtrapolator::default();
        assert!(matches!(ext.extrapolate_column(&m, 5, 3), Err(Error::NoObservations(5))));
        assert!(matches!(ext.final_accuracy_estimate(&m, 5, 3, 0.1), Err(Error::NoObservations(5))));
    }

    #[test]
    fn recorded_values_survive_when_capped() {
        // More points than max_nodes: recorded rounds still read back exactly.
        let pts: Vec<(u32, f64)> = (1..=9).map(|t| (t, 0.05 / f64::from(t))).collect();
        let m = column_matrix(1, &pts);
        let col = NewtonExtrapolator::new(3).extrapolate_column(&m, 1, 9).unwrap();
        for (t, y) in pts {
            assert_eq!(col[(t - 1) as usize], y);
        }
    }

    #[test]
    fn final_accuracy_examples() {
        let pts: Vec<(u32, f64)> = (1..=3).map(|t| (t * 2, 0.01)).collect();
        let m = column_matrix(3, &pts);
        let ext = NewtonExtrapolator::default();
        let a = ext.final_accuracy_estimate(&m, 3, 50, 0.1).unwrap();
        assert!((a - 0.6).abs() < 1e-12);
        assert_eq!(ext.final_accuracy_estimate(&m, 3, 50, 0.9).unwrap(), 1.0);
        assert_eq!(ext.final_accuracy_estimate(&m, 3, 0, 0.37).unwrap(), 0.37);
    }
}
