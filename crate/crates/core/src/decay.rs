//! Exponentially decaying accumulation grid.
//!
//! Each event adds 1 to its cell, and every contribution decays as
//! `exp(-(t - t_j) / tau)`. Decay is lazy: every cell stores its value at the
//! last write together with the decay clock at that moment, where the clock is
//! the accumulated exponent `sum(dt / tau)`. Reading a cell applies the
//! outstanding decay. Whole-grid sums (mass and first moments) are kept
//! up to date in O(1) per event because decay is a common factor across
//! cells. When `tau` changes between events the clock integrates the piecewise
//! rate, so lazy cells and running sums stay consistent.

use crate::error::{Error, Result};
use crate::projection::Cell;
use crate::scalar::Scalar;
use crate::vec2::Vec2;

/// Clock value at which cells are rebased to keep exponents small.
const REBASE_AT: f64 = 64.0;

/// Accepted backwards jitter between consecutive updates, microseconds.
pub const REGRESSION_TOLERANCE_US: u64 = 1;

#[derive(Debug, Clone)]
pub struct DecayingMap<T> {
    cols: usize,
    rows: usize,
    scale: u32,
    tau: T,
    values: Vec<T>,
    stamps: Vec<T>,
    clock: T,
    last_us: Option<u64>,
    sum: T,
    sum_x: T,
    sum_y: T,
}

impl<T: Scalar> DecayingMap<T> {
    /// `cols x rows` cells at `scale` cells per pixel, decay constant `tau` seconds.
    pub fn new(cols: usize, rows: usize, scale: u32, tau: T) -> Self {
        assert!(tau > T::zero(), "tau must be positive");
        Self {
            cols,
            rows,
            scale,
            tau,
            values: vec![T::zero(); cols * rows],
            stamps: vec![T::zero(); cols * rows],
            clock: T::zero(),
            last_us: None,
            sum: T::zero(),
            sum_x: T::zero(),
            sum_y: T::zero(),
        }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    /// Decay constant for the following time intervals.
    pub fn set_tau(&mut self, tau: T) {
        assert!(tau > T::zero(), "tau must be positive");
        self.tau = tau;
    }

    pub fn last_update_us(&self) -> Option<u64> {
        self.last_us
    }

    /// Advances the map to `t_us`, decaying everything.
    pub fn decay_to(&mut self, t_us: u64) -> Result<()> {
        let last = match self.last_us {
            None => {
                self.last_us = Some(t_us);
                return Ok(());
            }
            Some(l) => l,
        };
        if t_us < last {
            if last - t_us > REGRESSION_TOLERANCE_US {
                return Err(Error::TimeRegression { last_us: last, t_us });
            }
            return Ok(());
        }
        if t_us == last {
            return Ok(());
        }
        let step = T::us_delta(t_us, last) / self.tau;
        let f = (-step).exp();
        self.sum *= f;
        self.sum_x *= f;
        self.sum_y *= f;
        self.clock += step;
        self.last_us = Some(t_us);
        if self.clock > T::of(REBASE_AT) {
            self.rebase();
        }
        Ok(())
    }

    /// Decays to `t_us` then adds one event to `cell`.
    pub fn update(&mut self, cell: Cell, t_us: u64) -> Result<()> {
        self.decay_to(t_us)?;
        let i = cell.iy as usize * self.cols + cell.ix as usize;
        let v = self.values[i] * (self.stamps[i] - self.clock).exp() + T::one();
        self.values[i] = v;
        self.stamps[i] = self.clock;
        let s = T::of(self.scale as f64);
        self.sum += T::one();
        self.sum_x += T::of(cell.ix as f64) / s;
        self.sum_y += T::of(cell.iy as f64) / s;
        Ok(())
    }

    /// Cell value at the last update time.
    #[inline]
    pub fn value(&self, cell: Cell) -> T {
        let i = cell.iy as usize * self.cols + cell.ix as usize;
        self.values[i] * (self.stamps[i] - self.clock).exp()
    }

    /// Cell value extrapolated to `t_us` (no later than any future update).
    pub fn value_at(&self, cell: Cell, t_us: u64) -> T {
        self.value(cell) * self.pending_decay(t_us)
    }

    /// Total mass at the last update time.
    #[inline]
    pub fn sum(&self) -> T {
        self.sum
    }

    /// Total mass extrapolated to `t_us`.
    pub fn sum_at(&self, t_us: u64) -> T {
        self.sum * self.pending_decay(t_us)
    }

    fn pending_decay(&self, t_us: u64) -> T {
        match self.last_us {
            Some(l) if t_us > l => (-T::us_delta(t_us, l) / self.tau).exp(),
            _ => T::one(),
        }
    }

    /// Mass-weighted centroid in grid-local pixels (cell index / scale).
    pub fn mean_position(&self) -> Result<Vec2<T>> {
        if !(self.sum > T::zero()) {
            return Err(Error::ZeroMass);
        }
        Ok(Vec2::new(self.sum_x / self.sum, self.sum_y / self.sum))
    }

    /// Decayed cell values at the last update time, row-major.
    pub fn snapshot_into(&self, out: &mut Vec<T>) {
        out.clear();
        out.extend(
            self.values
                .iter()
                .zip(&self.stamps)
                .map(|(&v, &s)| v * (s - self.clock).exp()),
        );
    }

    pub fn snapshot(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.values.len());
        self.snapshot_into(&mut v);
        v
    }

    /// Forgets all content; the clock keeps running.
    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = T::zero());
        self.sum = T::zero();
        self.sum_x = T::zero();
        self.sum_y = T::zero();
    }

    /// Moves content by `(-dx, -dy)` cells, dropping what leaves the grid.
    pub fn shift(&mut self, dx: i64, dy: i64) {
        if dx == 0 && dy == 0 {
            return;
        }
        self.rebase();
        let (cols, rows) = (self.cols as i64, self.rows as i64);
        // Walk in the direction that never reads an already overwritten cell.
        for yi in 0..rows {
            let y = if dy > 0 { yi } else { rows - 1 - yi };
            for xi in 0..cols {
                let x = if dx > 0 { xi } else { cols - 1 - xi };
                let (sx, sy) = (x + dx, y + dy);
                let v = if sx >= 0 && sy >= 0 && sx < cols && sy < rows {
                    self.values[(sy * cols + sx) as usize]
                } else {
                    T::zero()
                };
                self.values[(y * cols + x) as usize] = v;
            }
        }
        self.recompute_sums();
    }

    /// Folds outstanding decay into the stored values and restarts the clock.
    fn rebase(&mut self) {
        for (v, s) in self.values.iter_mut().zip(self.stamps.iter_mut()) {
            *v *= (*s - self.clock).exp();
            *s = T::zero();
        }
        self.clock = T::zero();
        self.recompute_sums();
    }

    fn recompute_sums(&mut self) {
        let s = T::of(self.scale as f64);
        let (mut m, mut mx, mut my) = (T::zero(), T::zero(), T::zero());
        for (i, &v) in self.values.iter().enumerate() {
            let w = v * (self.stamps[i] - self.clock).exp();
            m += w;
            mx += w * T::of((i % self.cols) as f64) / s;
            my += w * T::of((i / self.cols) as f64) / s;
        }
        self.sum = m;
        self.sum_x = mx;
        self.sum_y = my;
    }
}
