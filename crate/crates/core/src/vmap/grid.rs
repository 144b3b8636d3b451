use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{monte_carlo_violation, ViolationModel};
use crate::csvfmt::{axis_header, sig9, writer};
use crate::error::{check_dim, Error, Result};
use crate::problem::{BoxDomain, ProblemSpec};
use crate::seeds;

/// Scalar field sampled on a regular lattice, stored row-major (last axis fastest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeField {
    axes: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl LatticeField {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if axes.is_empty() || axes.iter().any(|a| a.len() < 2) {
            return Err(Error::invalid("lattice needs at least 2 points on every axis"));
        }
        let count: usize = axes.iter().map(Vec::len).product();
        check_dim("lattice values", count, values.len())?;
        Ok(Self { axes, values })
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Lattice index of flat position `flat`.
    pub fn index_of(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            idx[k] = flat % axis.len();
            flat /= axis.len();
        }
        idx
    }

    pub fn flat_of(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, axis)| acc * axis.len() + i)
    }

    /// Coordinates of flat position `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.index_of(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, axis)| axis[i])
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|f| self.point(f)).collect()
    }

    /// Writes `u1,…,un,v` rows in lattice order.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = writer(path)?;
        let mut header = axis_header(self.dim());
        header.push("v".to_owned());
        w.write_record(&header)?;
        for (f, v) in self.values.iter().enumerate() {
            let mut row: Vec<String> = self.point(f).into_iter().map(sig9).collect();
            row.push(sig9(*v));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Monte-Carlo violation surface on a lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceGrid {
    pub field: LatticeField,
    pub n_delta: usize,
    pub seed: u64,
}

/// Estimates `V` at every lattice point with `n_delta` fresh draws per point.
/// Point `j` (in lattice order) draws from a generator seeded with `seed ^ j`,
/// so the result does not depend on how work is split across threads.
pub fn build_reference_grid(
    spec: &ProblemSpec,
    per_axis: &[usize],
    n_delta: usize,
    seed: u64,
) -> Result<ReferenceGrid> {
    let axes = spec.domain().lattice_axes(per_axis)?;
    let count: usize = axes.iter().map(Vec::len).product();
    let shell = LatticeField::new(axes, vec![0.0; count])?;
    let values = (0..count)
        .into_par_iter()
        .map(|j| {
            let mut rng = seeds::rng(seed ^ j as u64);
            monte_carlo_violation(spec, &shell.point(j), n_delta, &mut rng)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ReferenceGrid {
        field: LatticeField { values, ..shell },
        n_delta,
        seed,
    })
}

/// Evaluates a violation model on the lattice of `domain`.
pub fn probe_map<M: ViolationModel + Sync>(map: &M, domain: &BoxDomain, per_axis: &[usize]) -> Result<LatticeField> {
    check_dim("map input", domain.dim(), map.input_dim())?;
    let axes = domain.lattice_axes(per_axis)?;
    let count: usize = axes.iter().map(Vec::len).product();
    let mut field = LatticeField::new(axes, vec![0.0; count])?;
    let values: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|j| map.violation(&field.point(j)))
        .collect();
    field.values = values;
    Ok(field)
}

/// Mean absolute difference between two fields on the same lattice.
pub fn mean_absolute_error(a: &LatticeField, b: &LatticeField) -> Result<f64> {
    if a.axes != b.axes {
        return Err(Error::invalid("fields are defined on different lattices"));
    }
    let total: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ncvx_2d;

    struct Affine;

    impl ViolationModel for Affine {
        fn input_dim(&self) -> usize {
            2
        }
        fn violation(&self, u: &[f64]) -> f64 {
            ((u[0] + 6.0) / 11.0).clamp(0.0, 1.0)
        }
    }

    #[test]
    fn lattice_indexing_is_row_major() {
        let f = LatticeField::new(vec![vec![0.0, 1.0, 2.0], vec![10.0, 20.0]], (0..6).map(f64::from).collect())
            .unwrap();
        assert_eq!(f.point(0), vec![0.0, 10.0]);
        assert_eq!(f.point(1), vec![0.0, 20.0]);
        assert_eq!(f.point(2), vec![1.0, 10.0]);
        for flat in 0..6 {
            assert_eq!(f.flat_of(&f.index_of(flat)), flat);
        }
        assert!(LatticeField::new(vec![vec![0.0, 1.0]], vec![0.0]).is_err());
    }

    #[test]
    fn reference_grid_is_reproducible_and_bounded() {
        let p = ncvx_2d();
        let a = build_reference_grid(&p, &[5, 4], 200, 9).unwrap();
        let b = build_reference_grid(&p, &[5, 4], 200, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.field.len(), 20);
        assert!(a.field.values().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(a.field.point(0), vec![-6.0, -6.0]);
        assert_eq!(a.field.point(19), vec![5.0, 5.0]);
    }

    #[test]
    fn probe_and_mae() {
        let p = ncvx_2d();
        let f = probe_map(&Affine, p.domain(), &[12, 3]).unwrap();
        assert_eq!(f.values()[0], 0.0);
        assert_eq!(*f.values().last().unwrap(), 1.0);
        assert_eq!(mean_absolute_error(&f, &f).unwrap(), 0.0);
        let shifted = LatticeField::new(f.axes().to_vec(), f.values().iter().map(|v| v + 0.25).collect()).unwrap();
        assert!((mean_absolute_error(&f, &shifted).unwrap() - 0.25).abs() < 1e-12);
        let other = probe_map(&Affine, p.domain(), &[3, 12]).unwrap();
        assert!(mean_absolute_error(&f, &other).is_err());
    }

    #[test]
    fn csv_layout() {
        let f = LatticeField::new(vec![vec![-6.0, 5.0], vec![0.0, 0.5]], vec![0.1, 0.2, 0.3, 1.0 / 3.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        f.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "u1,u2,v\n-6,0,0.1\n-6,0.5,0.2\n5,0,0.3\n5,0.5,0.333333333\n");
    }
}
