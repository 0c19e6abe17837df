//! Tracker configuration and its `key=value` text form.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig<T> {
    /// Observation window side, pixels.
    pub window: usize,
    /// Displacement over which the speed is meant to converge, pixels.
    pub dx: T,
    /// Relative speed error below which the projection epoch may move.
    pub k: T,
    /// Pixels of travel required before the projection epoch may move.
    pub n: T,
    /// Contour threshold on the max-normalized projection pdf.
    pub pi: T,
    pub subpixel: u32,
    pub v_min: T,
    pub v_max: T,
    pub v_grid: usize,
    pub b_detect: T,
    pub b_lost: T,
    pub a_idle: T,
    /// Speeds are floored here when deriving `tau = 1/|v|`, px/s.
    pub speed_floor: T,
}

impl<T: Scalar> Default for TrackerConfig<T> {
    fn default() -> Self {
        Self {
            window: 30,
            dx: T::of(30.0),
            k: T::of(0.01),
            n: T::of(6.0),
            pi: T::of(0.5),
            subpixel: 4,
            v_min: T::of(-1000.0),
            v_max: T::of(1000.0),
            v_grid: 5,
            b_detect: T::of(0.01),
            b_lost: T::of(0.2),
            a_idle: T::of(0.1),
            speed_floor: T::one(),
        }
    }
}

impl<T: Scalar> TrackerConfig<T> {
    /// Parses `key=value` lines; `#` starts a comment. Unset keys keep their
    /// defaults, and `dx` follows `R` unless given explicitly.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut dx_set = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let real = || -> Result<T> {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(T::of)
                    .ok_or_else(|| Error::Config(format!("line {}: bad number for {key}: '{value}'", i + 1)))
            };
            let int = || -> Result<usize> {
                value
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("line {}: bad integer for {key}: '{value}'", i + 1)))
            };
            match key {
                "R" => cfg.window = int()?,
                "dx" => {
                    cfg.dx = real()?;
                    dx_set = true;
                }
                "k" => cfg.k = real()?,
                "N" => cfg.n = real()?,
                "pi" => cfg.pi = real()?,
                "subpixel" => cfg.subpixel = int()? as u32,
                "v_min" => cfg.v_min = real()?,
                "v_max" => cfg.v_max = real()?,
                "v_grid" => cfg.v_grid = int()?,
                "b_detect" => cfg.b_detect = real()?,
                "b_lost" => cfg.b_lost = real()?,
                "a_idle" => cfg.a_idle = real()?,
                other => return Err(Error::Config(format!("line {}: unknown key '{other}'", i + 1))),
            }
        }
        if !dx_set {
            cfg.dx = T::of_usize(cfg.window);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.window == 0 {
            return bad("R must be positive");
        }
        if !(self.dx > T::zero()) {
            return bad("dx must be positive");
        }
        if self.subpixel == 0 {
            return bad("subpixel must be at least 1");
        }
        if !(self.pi > T::zero() && self.pi <= T::one()) {
            return bad("pi must lie in (0, 1]");
        }
        if self.v_grid == 0 || self.v_min > self.v_max {
            return bad("empty velocity grid");
        }
        if self.k < T::zero() || self.n < T::zero() {
            return bad("k and N must be non-negative");
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "R={}", self.window);
        let _ = writeln!(s, "dx={}", self.dx);
        let _ = writeln!(s, "k={}", self.k);
        let _ = writeln!(s, "N={}", self.n);
        let _ = writeln!(s, "pi={}", self.pi);
        let _ = writeln!(s, "subpixel={}", self.subpixel);
        let _ = writeln!(s, "v_min={}", self.v_min);
        let _ = writeln!(s, "v_max={}", self.v_max);
        let _ = writeln!(s, "v_grid={}", self.v_grid);
        let _ = writeln!(s, "b_detect={}", self.b_detect);
        let _ = writeln!(s, "b_lost={}", self.b_lost);
        let _ = writeln!(s, "a_idle={}", self.a_idle);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = TrackerConfig::<f64>::default();
        assert_eq!(c.window, 30);
        assert_eq!(c.dx, 30.0);
        assert_eq!(c.k, 0.01);
        assert_eq!(c.n, 6.0);
    }

    #[test]
    fn dx_follows_window_unless_set() {
        let c = TrackerConfig::<f64>::parse("R=20\n").unwrap();
        assert_eq!(c.dx, 20.0);
        let c = TrackerConfig::<f64>::parse("R=20\ndx = 7.5 # explicit\n").unwrap();
        assert_eq!(c.dx, 7.5);
    }

    #[test]
    fn text_round_trip() {
        let mut c = TrackerConfig::<f64>::default();
        c.k = 0.02;
        c.subpixel = 2;
        assert_eq!(TrackerConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn errors() {
        assert!(TrackerConfig::<f64>::parse("bogus=1").is_err());
        assert!(TrackerConfig::<f64>::parse("R").is_err());
        assert!(TrackerConfig::<f64>::parse("k=abc").is_err());
        assert!(TrackerConfig::<f64>::parse("pi=0").is_err());
        assert!(TrackerConfig::<f64>::parse("subpixel=0").is_err());
    }
}
