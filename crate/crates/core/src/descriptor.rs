//! Normalized decaying maps used as shape descriptors.

use crate::error::{Error, Result};
use crate::pgm::GrayImage;
use crate::scalar::Scalar;
use crate::tracker::{Phase, TrackerState};
use crate::vec2::Vec2;
use std::io::Write;

/// Discrete probability distribution over an observation window.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor<T> {
    cols: usize,
    rows: usize,
    cells: Vec<T>,
    pub tracker_id: Option<usize>,
    pub velocity: Option<Vec2<T>>,
    pub captured_us: Option<u64>,
}

impl<T: Scalar> Descriptor<T> {
    /// L1-normalizes a non-negative grid.
    pub fn from_grid(cols: usize, rows: usize, values: &[T]) -> Result<Self> {
        if values.len() != cols * rows || values.is_empty() {
            return Err(Error::Shape(cols, rows, values.len(), 1));
        }
        if values.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
            return Err(Error::Config("descriptor cells must be finite and non-negative".into()));
        }
        let sum = values.iter().fold(T::zero(), |a, &b| a + b);
        if !(sum > T::zero()) {
            return Err(Error::ZeroMass);
        }
        Ok(Self {
            cols,
            rows,
            cells: values.iter().map(|&v| v / sum).collect(),
            tracker_id: None,
            velocity: None,
            captured_us: None,
        })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    /// Area-weighted resampling onto a `cols x rows` grid covering the same extent.
    pub fn resample(&self, cols: usize, rows: usize) -> Result<Self> {
        if cols == 0 || rows == 0 {
            return Err(Error::Shape(self.cols, self.rows, cols, rows));
        }
        if cols == self.cols && rows == self.rows {
            return Ok(self.clone());
        }
        let wx = overlap_weights(self.cols, cols);
        let wy = overlap_weights(self.rows, rows);
        let mut out = vec![T::zero(); cols * rows];
        for &(sy, dy, fy) in &wy {
            for &(sx, dx, fx) in &wx {
                out[dy * cols + dx] += self.cells[sy * self.cols + sx] * T::of(fx * fy);
            }
        }
        let mut d = Self::from_grid(cols, rows, &out)?;
        d.tracker_id = self.tracker_id;
        d.velocity = self.velocity;
        d.captured_us = self.captured_us;
        Ok(d)
    }

    pub fn to_image(&self) -> GrayImage {
        GrayImage::from_max_normalized(self.cols, self.rows, &self.cells)
    }

    /// `ix,iy,value` rows; a `# shape COLSxROWS` comment carries the grid size.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "# shape {}x{}", self.cols, self.rows)?;
        writeln!(w, "ix,iy,value")?;
        for (i, v) in self.cells.iter().enumerate() {
            writeln!(w, "{},{},{}", i % self.cols, i / self.cols, v)?;
        }
        Ok(())
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut shape = None;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("# shape") {
                let (c, r) = rest
                    .trim()
                    .split_once('x')
                    .and_then(|(c, r)| Some((c.parse::<usize>().ok()?, r.parse::<usize>().ok()?)))
                    .ok_or_else(|| Error::Parse { line: i + 1, msg: "bad shape comment".into() })?;
                shape = Some((c, r));
                continue;
            }
            if line.is_empty() || line.starts_with('#') || line.starts_with("ix") {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let perr = || Error::Parse { line: i + 1, msg: format!("expected ix,iy,value, got '{line}'") };
            if f.len() != 3 {
                return Err(perr());
            }
            let ix: usize = f[0].parse().map_err(|_| perr())?;
            let iy: usize = f[1].parse().map_err(|_| perr())?;
            let v: f64 = f[2].parse().map_err(|_| perr())?;
            entries.push((ix, iy, v));
        }
        let (cols, rows) = shape.unwrap_or_else(|| {
            let c = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
            let r = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
            (c, r)
        });
        let mut grid = vec![T::zero(); cols * rows];
        for (ix, iy, v) in entries {
            if ix >= cols || iy >= rows {
                return Err(Error::Shape(cols, rows, ix + 1, iy + 1));
            }
            grid[iy * cols + ix] = T::of(v);
        }
        Self::from_grid(cols, rows, &grid)
    }
}

/// For each source cell, the destination cells it overlaps and the fraction
/// of the source cell that falls in each: `(src, dst, fraction)`.
fn overlap_weights(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    let ratio = dst as f64 / src as f64;
    for s in 0..src {
        let (a, b) = (s as f64 * ratio, (s + 1) as f64 * ratio);
        let mut d = a.floor() as usize;
        while (d as f64) < b && d < dst {
            let lo = a.max(d as f64);
            let hi = b.min((d + 1) as f64);
            if hi > lo {
                out.push((s, d, (hi - lo) / ratio));
            }
            d += 1;
        }
    }
    out
}

/// Snapshot of a correcting tracker's map, normalized to unit mass.
pub fn capture<T: Scalar>(tr: &TrackerState<T>) -> Result<Descriptor<T>> {
    if tr.phase() != Phase::Correcting {
        return Err(Error::Config("descriptor capture needs a tracker with a reference".into()));
    }
    let map = tr.map();
    let mut d = Descriptor::from_grid(map.cols(), map.rows(), &map.snapshot())?;
    d.tracker_id = Some(tr.id());
    d.velocity = Some(tr.velocity());
    d.captured_us = map.last_update_us();
    Ok(d)
}

/// `-ln(sum(sqrt(a * b)))`; the coarser descriptor is resampled onto the finer grid.
pub fn bhattacharyya_distance<T: Scalar>(a: &Descriptor<T>, b: &Descriptor<T>) -> Result<T> {
    let bc = if a.cols == b.cols && a.rows == b.rows {
        coefficient(&a.cells, &b.cells)
    } else {
        let cols = a.cols.max(b.cols);
        let rows = a.rows.max(b.rows);
        let (ra, rb) = (a.resample(cols, rows)?, b.resample(cols, rows)?);
        coefficient(&ra.cells, &rb.cells)
    };
    if bc <= T::zero() {
        return Ok(T::infinity());
    }
    Ok((-bc.min(T::one()).ln()).max(T::zero()))
}

/// `sum(sqrt(p q))` over the actual masses, so that rounding in the
/// normalization cannot make `BC(a, a)` differ from 1.
fn coefficient<T: Scalar>(a: &[T], b: &[T]) -> T {
    let total = |v: &[T]| v.iter().fold(T::zero(), |acc, &x| acc + x);
    let raw = a.iter().zip(b).fold(T::zero(), |acc, (&p, &q)| acc + (p * q).sqrt());
    raw / (total(a) * total(b)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(cols: usize, v: &[f64]) -> Descriptor<f64> {
        Descriptor::from_grid(cols, v.len() / cols, v).unwrap()
    }

    #[test]
    fn normalization() {
        assert_eq!(d(2, &[2.0, 2.0]).cells(), &[0.5, 0.5]);
        assert_eq!(d(1, &[3.0]).cells(), &[1.0]);
        assert!(matches!(Descriptor::<f64>::from_grid(2, 1, &[0.0, 0.0]), Err(Error::ZeroMass)));
    }

    #[test]
    fn distance_closed_forms() {
        let a = d(2, &[0.5, 0.5]);
        let b = d(2, &[1.0, 0.0]);
        let dist = bhattacharyya_distance(&a, &b).unwrap();
        assert!((dist - 0.5f64.sqrt().ln().abs()).abs() < 1e-12);
        assert!((dist - 0.3466).abs() < 1e-4);
        assert_eq!(bhattacharyya_distance(&a, &a).unwrap(), 0.0);
        let c = d(2, &[0.0, 1.0]);
        assert_eq!(bhattacharyya_distance(&b, &c).unwrap(), f64::INFINITY);
    }

    #[test]
    fn resampling_preserves_mass_and_layout() {
        let a = d(2, &[1.0, 0.0, 0.0, 0.0]);
        let r = a.resample(4, 4).unwrap();
        let s: f64 = r.cells().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!((r.cells()[0] - 0.25).abs() < 1e-12);
        assert!((r.cells()[5] - 0.25).abs() < 1e-12);
        assert_eq!(r.cells()[2], 0.0);
        let back = r.resample(2, 2).unwrap();
        for (x, y) in back.cells().iter().zip(a.cells()) {
            assert!((x - y).abs() < 1e-12);
        }
        // non-integer ratio
        let r3 = d(2, &[1.0, 1.0, 1.0, 1.0]).resample(3, 3).unwrap();
        for v in r3.cells() {
            assert!((v - 1.0 / 9.0).abs() < 1e-12);
        }
        // comparing across shapes goes through the finer grid
        assert!(bhattacharyya_distance(&a, &r).unwrap().abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let a = d(3, &[0.1, 0.2, 0.3, 0.4, 0.0, 0.0]);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let b = Descriptor::<f64>::parse_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!((b.cols(), b.rows()), (3, 2));
        for (x, y) in a.cells().iter().zip(b.cells()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
