use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LatticeField;
use crate::csvfmt::{axis_header, sig9};
use crate::error::{Error, Result};

/// Level-set approximation of a lattice field.
///
/// `points` holds every lattice-edge crossing (any dimension). For 2-D fields
/// `polylines` chains those crossings into curves by marching squares.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub level: f64,
    pub points: Vec<Vec<f64>>,
    pub polylines: Vec<Vec<[f64; 2]>>,
}

impl Boundary {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Writes `u1,…,un` rows. In 2-D each polyline is written in order with a
    /// blank line between polylines; otherwise the raw crossings are written.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let dim = self.points.first().map_or(2, Vec::len);
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut text = axis_header(dim).join(",");
        text.push('\n');
        if self.polylines.is_empty() {
            for p in &self.points {
                let row: Vec<String> = p.iter().map(|v| sig9(*v)).collect();
                text.push_str(&row.join(","));
                text.push('\n');
            }
        } else {
            for (k, line) in self.polylines.iter().enumerate() {
                if k > 0 {
                    text.push('\n');
                }
                for p in line {
                    text.push_str(&format!("{},{}\n", sig9(p[0]), sig9(p[1])));
                }
            }
        }
        out.write_all(text.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }
}

/// Edge of a 2-D lattice: `(axis, i, j)` joins `(i, j)` to its neighbour along `axis`.
type EdgeId = (u8, usize, usize);

fn crossing(a: f64, b: f64, level: f64) -> f64 {
    if a == b {
        0.5
    } else {
        ((level - a) / (b - a)).clamp(0.0, 1.0)
    }
}

/// Extracts the `level` set of `field`. A node counts as inside when its
/// value exceeds `level`; crossings are placed by linear interpolation along
/// lattice edges whose endpoints disagree.
pub fn extract_boundary(field: &LatticeField, level: f64) -> Result<Boundary> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("boundary level must lie in (0, 1), got {level}")));
    }
    let values = field.values();
    let shape = field.shape();
    let mut points = Vec::new();
    for flat in 0..field.len() {
        let idx = field.index_of(flat);
        for axis in 0..field.dim() {
            if idx[axis] + 1 == shape[axis] {
                continue;
            }
            let mut next = idx.clone();
            next[axis] += 1;
            let (a, b) = (values[flat], values[field.flat_of(&next)]);
            if (a > level) != (b > level) {
                let t = crossing(a, b, level);
                let mut p = field.point(flat);
                let axis_vals = &field.axes()[axis];
                p[axis] += t * (axis_vals[idx[axis] + 1] - axis_vals[idx[axis]]);
                points.push(p);
            }
        }
    }
    let polylines = if field.dim() == 2 {
        march_squares(field, level)
    } else {
        Vec::new()
    };
    Ok(Boundary {
        level,
        points,
        polylines,
    })
}

fn march_squares(field: &LatticeField, level: f64) -> Vec<Vec<[f64; 2]>> {
    let (xs, ys) = (&field.axes()[0], &field.axes()[1]);
    let (nx, ny) = (xs.len(), ys.len());
    let v = |i: usize, j: usize| field.values()[i * ny + j];
    let above = |i: usize, j: usize| v(i, j) > level;

    let edge_point = |e: EdgeId| -> [f64; 2] {
        let (axis, i, j) = e;
        if axis == 0 {
            let t = crossing(v(i, j), v(i + 1, j), level);
            [xs[i] + t * (xs[i + 1] - xs[i]), ys[j]]
        } else {
            let t = crossing(v(i, j), v(i, j + 1), level);
            [xs[i], ys[j] + t * (ys[j + 1] - ys[j])]
        }
    };

    let mut links: BTreeMap<EdgeId, Vec<EdgeId>> = BTreeMap::new();
    let mut link = |a: EdgeId, b: EdgeId| {
        links.entry(a).or_default().push(b);
        links.entry(b).or_default().push(a);
    };
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            // Corners counter-clockwise from (i, j); edge k follows corner k.
            let c = [above(i, j), above(i + 1, j), above(i + 1, j + 1), above(i, j + 1)];
            let edges: [EdgeId; 4] = [(0, i, j), (1, i + 1, j), (0, i, j + 1), (1, i, j)];
            let cut: Vec<usize> = (0..4).filter(|&k| c[k] != c[(k + 1) % 4]).collect();
            match cut.len() {
                2 => link(edges[cut[0]], edges[cut[1]]),
                4 => {
                    let centre = (v(i, j) + v(i + 1, j) + v(i + 1, j + 1) + v(i, j + 1)) / 4.0 > level;
                    if centre == c[0] {
                        link(edges[0], edges[1]);
                        link(edges[2], edges[3]);
                    } else {
                        link(edges[3], edges[0]);
                        link(edges[1], edges[2]);
                    }
                }
                _ => {}
            }
        }
    }

    let mut used: BTreeSet<(EdgeId, EdgeId)> = BTreeSet::new();
    let key = |a: EdgeId, b: EdgeId| if a <= b { (a, b) } else { (b, a) };
    let mut polylines = Vec::new();
    // Open chains start at degree-1 nodes (curve meets the lattice border); closed loops afterwards.
    let starts: Vec<EdgeId> = links
        .iter()
        .filter(|(_, n)| n.len() == 1)
        .map(|(e, _)| *e)
        .chain(links.keys().copied())
        .collect();
    for start in starts {
        let mut line = vec![start];
        let mut current = start;
        loop {
            let next = links[&current]
                .iter()
                .copied()
                .find(|&n| !used.contains(&key(current, n)));
            match next {
                Some(n) => {
                    used.insert(key(current, n));
                    line.push(n);
                    current = n;
                }
                None => break,
            }
        }
        if line.len() > 1 {
            polylines.push(line.into_iter().map(edge_point).collect());
        }
    }
    polylines
}

fn segment_distance(p: &[f64], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

fn point_distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// One-sided Chamfer deviation: mean over `reference` crossings of the
/// distance to the nearest part of `predicted` (its polyline segments in 2-D,
/// its crossings otherwise). `None` when `predicted` is empty but `reference`
/// is not.
pub fn chamfer_deviation(reference: &Boundary, predicted: &Boundary) -> Option<f64> {
    if reference.points.is_empty() {
        return Some(0.0);
    }
    if predicted.points.is_empty() {
        return None;
    }
    let nearest = |p: &Vec<f64>| -> f64 {
        if predicted.polylines.is_empty() {
            predicted
                .points
                .iter()
                .map(|q| point_distance(p, q))
                .fold(f64::INFINITY, f64::min)
        } else {
            predicted
                .polylines
                .iter()
                .flat_map(|l| l.windows(2))
                .map(|s| segment_distance(p, s[0], s[1]))
                .fold(f64::INFINITY, f64::min)
        }
    };
    let total: f64 = reference.points.iter().map(nearest).sum();
    Some(total / reference.points.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(nx: usize, ny: usize, f: impl Fn(f64, f64) -> f64) -> LatticeField {
        let xs: Vec<f64> = (0..nx).map(|i| i as f64 / (nx - 1) as f64 * 4.0 - 2.0).collect();
        let ys: Vec<f64> = (0..ny).map(|j| j as f64 / (ny - 1) as f64 * 4.0 - 2.0).collect();
        let mut values = Vec::new();
        for &x in &xs {
            for &y in &ys {
                values.push(f(x, y));
            }
        }
        LatticeField::new(vec![xs, ys], values).unwrap()
    }

    #[test]
    fn circle_is_one_closed_loop() {
        let f = field(41, 41, |x, y| (1.0 - (x * x + y * y)).max(0.0) * 0.8);
        assert!(extract_boundary(&f, 0.0).is_err());
        // V > 0.4 inside radius sqrt(0.5).
        let b = extract_boundary(&f, 0.4).unwrap();
        assert_eq!(b.polylines.len(), 1);
        let line = &b.polylines[0];
        assert_eq!(line.first(), line.last());
        for p in line {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - 0.5f64.sqrt()).abs() < 0.01, "r = {r}");
        }
    }

    #[test]
    fn straight_edge_meets_border() {
        let f = field(11, 7, |x, _| ((x + 2.0) / 4.0).clamp(0.0, 1.0));
        let b = extract_boundary(&f, 0.3).unwrap();
        assert_eq!(b.polylines.len(), 1);
        assert_eq!(b.polylines[0].len(), 7);
        assert!(b.points.iter().all(|p| (p[0] - (-0.8)).abs() < 1e-12));
    }

    #[test]
    fn constant_field_has_no_boundary() {
        let b = extract_boundary(&field(5, 5, |_, _| 0.01), 0.05).unwrap();
        assert!(b.is_empty());
        assert!(b.polylines.is_empty());
    }

    #[test]
    fn saddle_cells_split_into_two_segments() {
        let f = LatticeField::new(vec![vec![0.0, 1.0], vec![0.0, 1.0]], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let b = extract_boundary(&f, 0.5).unwrap();
        assert_eq!(b.points.len(), 4);
        assert_eq!(b.polylines.len(), 2);
        assert!(b.polylines.iter().all(|l| l.len() == 2));
    }

    #[test]
    fn one_dimensional_crossings() {
        let f = LatticeField::new(vec![vec![0.0, 1.0, 2.0, 3.0]], vec![0.0, 0.2, 0.0, 0.6]).unwrap();
        let b = extract_boundary(&f, 0.1).unwrap();
        assert_eq!(b.points, vec![vec![0.5], vec![1.5], vec![2.0 + 1.0 / 6.0]]);
        assert!(b.polylines.is_empty());
    }

    #[test]
    fn chamfer_cases() {
        let a = extract_boundary(&field(21, 21, |x, _| ((x + 2.0) / 4.0).clamp(0.0, 1.0)), 0.5).unwrap();
        assert!(chamfer_deviation(&a, &a).unwrap() < 1e-12);
        let shifted = extract_boundary(&field(21, 21, |x, _| ((x + 1.5) / 4.0).clamp(0.0, 1.0)), 0.5).unwrap();
        assert!((chamfer_deviation(&a, &shifted).unwrap() - 0.5).abs() < 1e-9);
        let empty = Boundary::default();
        assert_eq!(chamfer_deviation(&a, &empty), None);
        assert_eq!(chamfer_deviation(&empty, &a), Some(0.0));
    }

    #[test]
    fn boundary_csv_separates_polylines() {
        let f = LatticeField::new(vec![vec![0.0, 1.0], vec![0.0, 1.0]], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let b = extract_boundary(&f, 0.5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.csv");
        b.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "u1,u2");
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[3], "");
    }
}
