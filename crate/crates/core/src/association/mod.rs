//! Category gating, composed cost matrices and the threshold-gated two-stage
//! assignment cascade.

pub mod lap;

use std::fmt;

use crate::detection::CategoryId;
use crate::error::{Error, Result};

pub use lap::linear_assignment;

/// Additive penalty placed on every detection/track pair of different
/// categories. Any association threshold must stay below it.
pub const CATEGORY_GAP: f64 = 1e5;

/// Dense `detections x tracks` cost matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from row vectors; ragged input is rejected.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch {
                left: (rows.len(), cols),
                right: (1, bad.len()),
            });
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }

    /// Elementwise sum with a same-shaped layer.
    pub fn compose(&self, layer: &CostMatrix) -> Result<Self> {
        if self.shape() != layer.shape() {
            return Err(Error::ShapeMismatch {
                left: self.shape(),
                right: layer.shape(),
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&layer.data).map(|(a, b)| a + b).collect(),
        })
    }
}

impl fmt::Debug for CostMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for i in 0..self.rows {
            list.entry(&self.row(i));
        }
        list.finish()
    }
}

/// `0` for same-category pairs and [`CATEGORY_GAP`] otherwise.
pub fn category_gate(det_categories: &[CategoryId], track_categories: &[CategoryId]) -> CostMatrix {
    CostMatrix::from_fn(det_categories.len(), track_categories.len(), |i, j| {
        if det_categories[i] == track_categories[j] {
            0.0
        } else {
            CATEGORY_GAP
        }
    })
}

pub fn compose(base: &CostMatrix, gate: &CostMatrix) -> Result<CostMatrix> {
    base.compose(gate)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssignmentResult {
    /// `(detection, track)` index pairs, sorted by detection.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_dets: Vec<usize>,
    pub unmatched_tracks: Vec<usize>,
}

impl AssignmentResult {
    fn from_matches(rows: usize, cols: usize, mut matches: Vec<(usize, usize)>) -> Self {
        matches.sort_unstable();
        let mut det_used = vec![false; rows];
        let mut track_used = vec![false; cols];
        for &(i, j) in &matches {
            det_used[i] = true;
            track_used[j] = true;
        }
        Self {
            matches,
            unmatched_dets: (0..rows).filter(|&i| !det_used[i]).collect(),
            unmatched_tracks: (0..cols).filter(|&j| !track_used[j]).collect(),
        }
    }
}

/// Optimal assignment on the full matrix; pairs costing more than
/// `threshold` are then split back into the unmatched lists.
pub fn solve(cost: &CostMatrix, threshold: f64) -> AssignmentResult {
    let matches = linear_assignment(cost)
        .into_iter()
        .filter(|&(i, j)| cost.get(i, j) <= threshold)
        .collect();
    AssignmentResult::from_matches(cost.rows(), cost.cols(), matches)
}

/// Which cost matrix produced a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    First,
    Second,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CascadeResult {
    pub assignment: AssignmentResult,
    /// Stage of each entry of `assignment.matches`.
    pub stages: Vec<Stage>,
}

impl CascadeResult {
    pub fn stage_of(&self, det: usize) -> Option<Stage> {
        self.assignment
            .matches
            .iter()
            .position(|&(i, _)| i == det)
            .map(|k| self.stages[k])
    }
}

/// Solves `first` at `first_threshold`, then `second` restricted to the
/// leftover rows and columns at `second_threshold`.
pub fn cascade(
    first: &CostMatrix,
    first_threshold: f64,
    second: &CostMatrix,
    second_threshold: f64,
) -> Result<CascadeResult> {
    if first.shape() != second.shape() {
        return Err(Error::ShapeMismatch {
            left: first.shape(),
            right: second.shape(),
        });
    }
    let stage1 = solve(first, first_threshold);
    let rest = second.submatrix(&stage1.unmatched_dets, &stage1.unmatched_tracks);
    let stage2 = solve(&rest, second_threshold);

    let mut tagged: Vec<((usize, usize), Stage)> = stage1
        .matches
        .iter()
        .map(|&m| (m, Stage::First))
        .chain(stage2.matches.iter().map(|&(i, j)| {
            (
                (stage1.unmatched_dets[i], stage1.unmatched_tracks[j]),
                Stage::Second,
            )
        }))
        .collect();
    tagged.sort_unstable_by_key(|&(m, _)| m);

    let (matches, stages): (Vec<_>, Vec<_>) = tagged.into_iter().unzip();
    Ok(CascadeResult {
        assignment: AssignmentResult::from_matches(first.rows(), first.cols(), matches),
        stages,
    })
}

/// Motion first, appearance on the leftovers. Both matrices are expected to
/// already carry the category gate.
pub fn two_stage_associate(
    motion: &CostMatrix,
    appearance: &CostMatrix,
    motion_threshold: f64,
    appearance_threshold: f64,
) -> Result<CascadeResult> {
    cascade(motion, motion_threshold, appearance, appearance_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> CostMatrix {
        CostMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn gate_values() {
        let car = CategoryId(0);
        let ped = CategoryId(1);
        assert_eq!(category_gate(&[car], &[car]).get(0, 0), 0.0);
        assert_eq!(category_gate(&[car], &[ped]).get(0, 0), 1e5);
        assert_eq!(category_gate(&[car, ped], &[]).shape(), (2, 0));
    }

    #[test]
    fn compose_examples() {
        let base = m(&[&[0.3]]);
        assert_eq!(compose(&base, &m(&[&[0.0]])).unwrap().get(0, 0), 0.3);
        assert_eq!(compose(&base, &m(&[&[1e5]])).unwrap().get(0, 0), 100000.3);
        let z = CostMatrix::zeros(2, 2);
        assert_eq!(compose(&z, &z).unwrap(), z);
        assert!(matches!(
            compose(&base, &z),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(CostMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn solve_examples() {
        let r = solve(&m(&[&[0.2]]), 0.5);
        assert_eq!(r.matches, vec![(0, 0)]);

        let r = solve(&m(&[&[0.9]]), 0.5);
        assert!(r.matches.is_empty());
        assert_eq!(r.unmatched_dets, vec![0]);
        assert_eq!(r.unmatched_tracks, vec![0]);

        let c = m(&[&[0.1, 0.4], &[0.4, 0.1]]);
        let r = solve(&c, 0.5);
        assert_eq!(r.matches, vec![(0, 0), (1, 1)]);
        let total: f64 = r.matches.iter().map(|&(i, j)| c.get(i, j)).sum();
        assert!((total - 0.2).abs() < 1e-12);
    }

    #[test]
    fn solve_rectangular_partitions() {
        let c = m(&[&[0.1, 0.9, 0.3]]);
        let r = solve(&c, 1.0);
        assert_eq!(r.matches, vec![(0, 0)]);
        assert_eq!(r.unmatched_tracks, vec![1, 2]);
    }

    #[test]
    fn cascade_exclusivity() {
        // det 0 overlaps track 0; det 1 is far away but looks identical.
        let motion = m(&[&[0.0], &[1.8]]);
        let app = m(&[&[0.0], &[0.0]]);
        let r = two_stage_associate(&motion, &app, 0.5, 0.5).unwrap();
        assert_eq!(r.assignment.matches, vec![(0, 0)]);
        assert_eq!(r.stages, vec![Stage::First]);
        assert_eq!(r.assignment.unmatched_dets, vec![1]);
    }

    #[test]
    fn cascade_recovers_large_displacement() {
        let motion = m(&[&[1.7]]);
        let app = m(&[&[0.1]]);
        let r = two_stage_associate(&motion, &app, 0.5, 1.4).unwrap();
        assert_eq!(r.assignment.matches, vec![(0, 0)]);
        assert_eq!(r.stage_of(0), Some(Stage::Second));
    }

    #[test]
    fn cascade_respects_gate() {
        let gate = category_gate(&[CategoryId(0)], &[CategoryId(1)]);
        let motion = compose(&m(&[&[0.001]]), &gate).unwrap();
        let app = compose(&m(&[&[0.001]]), &gate).unwrap();
        let r = two_stage_associate(&motion, &app, 0.5, 1.4).unwrap();
        assert!(r.assignment.matches.is_empty());
    }
}
