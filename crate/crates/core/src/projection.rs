//! Velocity-directed projection of events onto a reference plane and
//! recovery of the time-independent contour they were generated by.
//!
//! An event at `x` and time `t` is projected onto the plane `t = t_ref` along a
//! velocity hypothesis `v`: `p = x - v (t - t_ref)`. For a rigid structure
//! moving at `v`, every event of a given structure point lands on the same
//! spot, so accumulating projections over time recovers the structure.

use crate::error::{Error, Result};
use crate::event::Event;
use crate::pgm::GrayImage;
use crate::scalar::Scalar;
use crate::vec2::Vec2;
use std::io::Write;

/// Minimum travel, in pixels, before a histogram is considered to describe a
/// contour rather than a blur of the first few events.
pub const MIN_TRAVEL_PX: f64 = 10.0;

pub const DEFAULT_PI: f64 = 0.5;

/// `x - v (t - t_ref)`, with `t_ref` in microseconds.
#[inline]
pub fn project_event<T: Scalar>(e: &Event, v: Vec2<T>, t_ref_us: u64) -> Vec2<T> {
    let dt = T::us_delta(e.t, t_ref_us);
    Vec2::new(T::of_usize(e.x as usize) - v.x * dt, T::of_usize(e.y as usize) - v.y * dt)
}

/// Grid cell index (column, row).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub ix: u32,
    pub iy: u32,
}

/// Rounds `(p - origin) * scale` half-up on each axis. Unbounded.
#[inline]
pub fn bin_projection<T: Scalar>(p: Vec2<T>, scale: u32, origin: Vec2<T>) -> (i64, i64) {
    let s = T::of(scale as f64);
    let half = T::of(0.5);
    let fx = ((p.x - origin.x) * s + half).floor();
    let fy = ((p.y - origin.y) * s + half).floor();
    (
        fx.to_i64().unwrap_or(i64::MIN),
        fy.to_i64().unwrap_or(i64::MIN),
    )
}

/// Bounded sub-pixel grid anchored in sensor coordinates.
///
/// Cell `(ix, iy)` is centered at `origin + (ix, iy) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region<T> {
    pub origin: Vec2<T>,
    pub cols: usize,
    pub rows: usize,
    pub scale: u32,
}

impl<T: Scalar> Region<T> {
    pub fn new(origin: Vec2<T>, cols: usize, rows: usize, scale: u32) -> Self {
        assert!(scale >= 1, "subpixel scale must be at least 1");
        Self {
            origin,
            cols,
            rows,
            scale,
        }
    }

    /// Region covering a `width x height` pixel frame.
    pub fn full_frame(width: usize, height: usize, scale: u32) -> Self {
        let s = scale as usize;
        Self::new(Vec2::zero(), width * s, height * s, scale)
    }

    /// Square of side `side` pixels centered on `center`.
    pub fn square(center: Vec2<T>, side: usize, scale: u32) -> Self {
        let half = T::of(side as f64 / 2.0);
        let n = side * scale as usize;
        Self::new(center - Vec2::new(half, half), n, n, scale)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn bin(&self, p: Vec2<T>) -> Option<Cell> {
        let (ix, iy) = bin_projection(p, self.scale, self.origin);
        if ix >= 0 && iy >= 0 && (ix as usize) < self.cols && (iy as usize) < self.rows {
            Some(Cell {
                ix: ix as u32,
                iy: iy as u32,
            })
        } else {
            None
        }
    }

    #[inline]
    pub fn index(&self, c: Cell) -> usize {
        c.iy as usize * self.cols + c.ix as usize
    }

    #[inline]
    pub fn cell_at(&self, index: usize) -> Cell {
        Cell {
            ix: (index % self.cols) as u32,
            iy: (index / self.cols) as u32,
        }
    }

    /// Sensor coordinates of a cell center.
    #[inline]
    pub fn center_of(&self, c: Cell) -> Vec2<T> {
        let s = T::of(self.scale as f64);
        self.origin + Vec2::new(T::of(c.ix as f64) / s, T::of(c.iy as f64) / s)
    }
}

/// Counts of projected events per cell for one velocity hypothesis.
#[derive(Debug, Clone)]
pub struct ProjectionHistogram<T> {
    region: Region<T>,
    velocity: Vec2<T>,
    t_ref_us: u64,
    t_now_us: u64,
    counts: Vec<u32>,
    accepted: u64,
    rejected: u64,
}

impl<T: Scalar> ProjectionHistogram<T> {
    pub fn new(region: Region<T>, velocity: Vec2<T>, t_ref_us: u64) -> Self {
        Self {
            region,
            velocity,
            t_ref_us,
            t_now_us: t_ref_us,
            counts: vec![0; region.len()],
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn region(&self) -> &Region<T> {
        &self.region
    }

    pub fn velocity(&self) -> Vec2<T> {
        self.velocity
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn count(&self, c: Cell) -> u32 {
        self.counts[self.region.index(c)]
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    /// Projects one event; returns the cell it landed in, if inside the region.
    pub fn push(&mut self, e: &Event) -> Option<Cell> {
        let p = project_event(e, self.velocity, self.t_ref_us);
        self.t_now_us = self.t_now_us.max(e.t);
        match self.region.bin(p) {
            Some(c) => {
                let i = self.region.index(c);
                self.counts[i] += 1;
                self.accepted += 1;
                Some(c)
            }
            None => {
                self.rejected += 1;
                None
            }
        }
    }

    /// Accumulates the events falling in `[t_ref, t_end_us]`; others are skipped.
    pub fn accumulate(&mut self, events: &[Event], t_end_us: u64) {
        for e in events {
            if e.t >= self.t_ref_us && e.t <= t_end_us {
                self.push(e);
            }
        }
        self.t_now_us = self.t_now_us.max(t_end_us);
    }

    /// Pixels travelled at the hypothesis speed since `t_ref`.
    pub fn travel_px(&self) -> T {
        T::us_delta(self.t_now_us, self.t_ref_us) * self.velocity.norm()
    }

    pub fn sufficient_motion(&self) -> bool {
        self.travel_px() >= T::of(MIN_TRAVEL_PX)
    }

    pub fn to_pdf(&self) -> Result<Pdf<T>> {
        to_pdf(self)
    }

    /// Thresholded contour, refused until enough motion has been observed.
    pub fn contour(&self, pi: T) -> Result<Contour<T>> {
        if !self.sufficient_motion() {
            return Err(Error::InsufficientMotion(self.travel_px().to_f64_lossy()));
        }
        threshold_contour(&self.to_pdf()?, pi)
    }
}

/// Histogram normalized by its maximum cell.
#[derive(Debug, Clone)]
pub struct Pdf<T> {
    region: Region<T>,
    values: Vec<T>,
}

impl<T: Scalar> Pdf<T> {
    pub fn region(&self) -> &Region<T> {
        &self.region
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, c: Cell) -> T {
        self.values[self.region.index(c)]
    }

    pub fn to_image(&self) -> GrayImage {
        GrayImage::from_max_normalized(self.region.cols, self.region.rows, &self.values)
    }

    /// `cx,cy,value` rows for non-zero cells, cell centers in sensor coordinates.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "cx,cy,value")?;
        for (i, &v) in self.values.iter().enumerate() {
            if v > T::zero() {
                let c = self.region.center_of(self.region.cell_at(i));
                writeln!(w, "{},{},{}", c.x, c.y, v)?;
            }
        }
        Ok(())
    }
}

pub fn to_pdf<T: Scalar>(hist: &ProjectionHistogram<T>) -> Result<Pdf<T>> {
    let max = hist.counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Err(Error::EmptyHistogram);
    }
    let m = T::of(max as f64);
    Ok(Pdf {
        region: hist.region,
        values: hist.counts.iter().map(|&c| T::of(c as f64) / m).collect(),
    })
}

/// Set of cells whose pdf value reaches a threshold.
#[derive(Debug, Clone)]
pub struct Contour<T> {
    region: Region<T>,
    cells: Vec<Cell>,
}

impl<T: Scalar> Contour<T> {
    pub fn region(&self) -> &Region<T> {
        &self.region
    }

    /// Row-major ordered cells.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, c: Cell) -> bool {
        self.cells.binary_search_by_key(&(c.iy, c.ix), |k| (k.iy, k.ix)).is_ok()
    }

    /// Cell centers in sensor coordinates.
    pub fn positions(&self) -> impl Iterator<Item = Vec2<T>> + '_ {
        self.cells.iter().map(|&c| self.region.center_of(c))
    }

    pub fn centroid(&self) -> Option<Vec2<T>> {
        if self.cells.is_empty() {
            return None;
        }
        let sum = self.positions().fold(Vec2::zero(), |a, p| a + p);
        Some(sum / T::of_usize(self.cells.len()))
    }

    pub fn to_image(&self) -> GrayImage {
        let mut img = GrayImage::new(self.region.cols, self.region.rows);
        for c in &self.cells {
            img.put(c.ix as i64, c.iy as i64, 255);
        }
        img
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "cx,cy,value")?;
        for p in self.positions() {
            writeln!(w, "{},{},1", p.x, p.y)?;
        }
        Ok(())
    }
}

pub fn threshold_contour<T: Scalar>(pdf: &Pdf<T>, pi: T) -> Result<Contour<T>> {
    if !(pi > T::zero() && pi <= T::one()) {
        return Err(Error::Threshold(pi.to_f64_lossy()));
    }
    let cells = pdf
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= pi)
        .map(|(i, _)| pdf.region.cell_at(i))
        .collect();
    Ok(Contour {
        region: pdf.region,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Polarity;

    fn ev(t: u64, x: u16, y: u16) -> Event {
        Event::new(t, x, y, Polarity::On)
    }

    #[test]
    fn projection_examples() {
        let p = project_event(&ev(1_001_000, 11, 5), Vec2::new(1000.0f64, 0.0), 1_000_000);
        assert!((p.x - 10.0).abs() < 1e-9 && p.y == 5.0);
        let p = project_event(&ev(123_456, 7, 9), Vec2::<f64>::zero(), 0);
        assert_eq!(p, Vec2::new(7.0, 9.0));
        let p = project_event(&ev(500, 10, 10), Vec2::new(-321.0f32, 77.0), 500);
        assert_eq!(p, Vec2::new(10.0, 10.0));
    }

    #[test]
    fn binning_rounds_half_up() {
        let o = Vec2::<f64>::zero();
        assert_eq!(bin_projection(Vec2::new(10.49, 2.0), 1, o), (10, 2));
        assert_eq!(bin_projection(Vec2::new(10.50, 2.0), 1, o), (11, 2));
        assert_eq!(bin_projection(Vec2::new(10.25, 2.0), 4, o), (41, 8));
        assert_eq!(bin_projection(Vec2::new(-0.5, -0.51), 1, o), (0, -1));
    }

    #[test]
    fn region_rejects_instead_of_clamping() {
        let r = Region::<f64>::new(Vec2::zero(), 4, 4, 1);
        assert_eq!(r.bin(Vec2::new(3.4, 0.0)), Some(Cell { ix: 3, iy: 0 }));
        assert_eq!(r.bin(Vec2::new(3.5, 0.0)), None);
        assert_eq!(r.bin(Vec2::new(-0.6, 0.0)), None);
    }

    #[test]
    fn accumulate_counts_and_rejections() {
        let mut h = ProjectionHistogram::new(Region::<f64>::new(Vec2::zero(), 8, 8, 1), Vec2::zero(), 0);
        h.accumulate(&[ev(0, 2, 2), ev(1, 2, 2), ev(2, 30, 2), ev(99, 1, 1)], 50);
        assert_eq!(h.count(Cell { ix: 2, iy: 2 }), 2);
        assert_eq!(h.accepted(), 2);
        assert_eq!(h.rejected(), 1);

        let empty = ProjectionHistogram::new(Region::<f64>::new(Vec2::zero(), 8, 8, 1), Vec2::zero(), 0);
        assert!(empty.counts().iter().all(|&c| c == 0));
        assert!(matches!(empty.to_pdf(), Err(Error::EmptyHistogram)));
    }

    #[test]
    fn pdf_and_threshold() {
        let mut h = ProjectionHistogram::new(Region::<f64>::new(Vec2::zero(), 3, 1, 1), Vec2::zero(), 0);
        for _ in 0..4 {
            h.push(&ev(0, 0, 0));
        }
        for _ in 0..2 {
            h.push(&ev(0, 1, 0));
        }
        let pdf = h.to_pdf().unwrap();
        assert_eq!(pdf.values(), &[1.0, 0.5, 0.0]);
        let c = threshold_contour(&pdf, 0.6).unwrap();
        assert_eq!(c.cells(), &[Cell { ix: 0, iy: 0 }]);
        let c = threshold_contour(&pdf, 1.0).unwrap();
        assert_eq!(c.len(), 1);
        assert!(matches!(threshold_contour(&pdf, 0.0), Err(Error::Threshold(_))));
        assert!(matches!(threshold_contour(&pdf, 1.5), Err(Error::Threshold(_))));
    }

    #[test]
    fn contour_gated_on_travel() {
        let mut h = ProjectionHistogram::new(Region::<f64>::new(Vec2::zero(), 8, 8, 1), Vec2::new(100.0, 0.0), 0);
        h.accumulate(&[ev(0, 1, 1)], 50_000);
        assert!(matches!(h.contour(0.5), Err(Error::InsufficientMotion(_))));
        h.accumulate(&[], 100_000);
        assert_eq!(h.contour(0.5).unwrap().len(), 1);
    }
}
