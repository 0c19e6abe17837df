//! Synthetic event streams with exact ground truth.
//!
//! A rigid set of source points follows a piecewise-constant-velocity
//! trajectory. Each source point emits `events_per_pixel` events whenever it
//! passes over a pixel center along either axis; the event is reported at the
//! pixel whose center is crossed (the other axis is rounded). Simultaneous
//! crossings on both axes count once. Timestamps get uniform jitter and the
//! stream is sorted afterwards; optional uniform background noise is mixed in.

use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Polarity, SensorGeometry};
use crate::vec2::Vec2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::Path;

type P = Vec2<f64>;

/// Crossings closer than this on the two axes are one emission, seconds.
const SIMULTANEOUS_S: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start_us: u64,
    /// Pixels per second.
    pub velocity: P,
}

/// Piecewise-constant-velocity motion of the scene center.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub start: P,
    pub segments: Vec<Segment>,
    pub duration_us: u64,
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        let first = self
            .segments
            .first()
            .ok_or_else(|| Error::Script("no trajectory segment".into()))?;
        if first.start_us != 0 {
            return Err(Error::Script("first segment must start at t=0".into()));
        }
        if self.segments.windows(2).any(|w| w[1].start_us <= w[0].start_us) {
            return Err(Error::Script("segments must be strictly time-ordered".into()));
        }
        if self.segments.iter().any(|s| !s.velocity.is_finite()) {
            return Err(Error::Script("non-finite segment velocity".into()));
        }
        if !self.start.is_finite() {
            return Err(Error::Script("non-finite start position".into()));
        }
        Ok(())
    }

    /// `(start_us, end_us, velocity)` of every segment clipped to the duration.
    pub fn spans(&self) -> impl Iterator<Item = (u64, u64, P)> + '_ {
        self.segments.iter().enumerate().filter_map(move |(i, s)| {
            let end = self
                .segments
                .get(i + 1)
                .map_or(self.duration_us, |n| n.start_us)
                .min(self.duration_us);
            (s.start_us < end).then_some((s.start_us, end, s.velocity))
        })
    }

    pub fn center_at(&self, t_us: u64) -> P {
        let mut p = self.start;
        for (s, e, v) in self.spans() {
            if t_us <= s {
                break;
            }
            let until = t_us.min(e);
            p += v * ((until - s) as f64 * 1e-6);
        }
        p
    }

    pub fn velocity_at(&self, t_us: u64) -> P {
        self.segments
            .iter()
            .rev()
            .find(|s| s.start_us <= t_us)
            .map_or(P::zero(), |s| s.velocity)
    }

    /// Distance travelled by the center over `[a_us, b_us]`.
    pub fn path_length(&self, a_us: u64, b_us: u64) -> f64 {
        self.spans()
            .map(|(s, e, v)| {
                let (lo, hi) = (s.max(a_us), e.min(b_us));
                if hi > lo {
                    v.norm() * (hi - lo) as f64 * 1e-6
                } else {
                    0.0
                }
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneScript {
    pub geometry: SensorGeometry,
    /// Source points relative to the scene center.
    pub contour: Vec<P>,
    /// Labeled feature points relative to the scene center.
    pub features: Vec<P>,
    pub trajectory: Trajectory,
    pub events_per_pixel: u32,
    pub jitter_us: u64,
    /// Background events per second over the whole frame.
    pub noise_rate: f64,
    /// Shift every source point by a random fraction of a pixel step along
    /// the initial direction of motion, decorrelating emission phases.
    pub dither: bool,
}

/// Lattice outline of a 45-degree rotated square: `|dx| + |dy| = half_diagonal`.
pub fn diamond(half_diagonal: i64) -> Vec<P> {
    let h = half_diagonal.abs();
    if h == 0 {
        return vec![P::zero()];
    }
    let mut pts = Vec::with_capacity(4 * h as usize);
    for dx in -h..=h {
        let r = h - dx.abs();
        pts.push(P::new(dx as f64, r as f64));
        if r != 0 {
            pts.push(P::new(dx as f64, -(r as f64)));
        }
    }
    pts
}

/// Right, bottom, left, top vertices of [`diamond`] (image y grows downwards).
pub fn diamond_corners(half_diagonal: i64) -> Vec<P> {
    let h = half_diagonal as f64;
    vec![P::new(h, 0.0), P::new(0.0, h), P::new(-h, 0.0), P::new(0.0, -h)]
}

/// Horizontal segment of `len` lattice points centered on the origin.
pub fn bar(len: usize) -> Vec<P> {
    let start = -((len as f64 - 1.0) / 2.0).floor();
    (0..len).map(|i| P::new(start + i as f64, 0.0)).collect()
}

impl SceneScript {
    pub fn new(contour: Vec<P>, start: P, velocity: P, duration_us: u64) -> Self {
        Self {
            geometry: SensorGeometry::default(),
            contour,
            features: Vec::new(),
            trajectory: Trajectory {
                start,
                segments: vec![Segment {
                    start_us: 0,
                    velocity,
                }],
                duration_us,
            },
            events_per_pixel: 3,
            jitter_us: 100,
            noise_rate: 0.0,
            dither: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.trajectory.validate()?;
        if self.events_per_pixel == 0 {
            return Err(Error::Script("events_per_pixel must be positive".into()));
        }
        if !(self.noise_rate >= 0.0 && self.noise_rate.is_finite()) {
            return Err(Error::Script("noise_rate must be a non-negative number".into()));
        }
        if self.contour.iter().any(|p| !p.is_finite()) {
            return Err(Error::Script("non-finite contour point".into()));
        }
        Ok(())
    }

    /// Per-source offsets after optional dithering.
    fn sources(&self, rng: &mut ChaCha8Rng) -> Vec<P> {
        let v = self.trajectory.segments.first().map_or(P::zero(), |s| s.velocity);
        let linf = v.x.abs().max(v.y.abs());
        self.contour
            .iter()
            .map(|&p| {
                if self.dither && linf > 0.0 {
                    p + v * (rng.gen::<f64>() / linf)
                } else {
                    p
                }
            })
            .collect()
    }

    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut script = SceneScript::new(Vec::new(), P::zero(), P::zero(), 0);
        script.trajectory.segments.clear();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::Script(format!("line {}: {m}", i + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected key=value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let nums = |n: usize| -> Result<Vec<f64>> {
                let v: Vec<f64> = value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| err(format!("bad numbers '{value}'")))?;
                if v.len() != n {
                    return Err(err(format!("{key} expects {n} values")));
                }
                Ok(v)
            };
            match key {
                "geometry" => script.geometry = SensorGeometry::parse(value)?,
                "start" => {
                    let v = nums(2)?;
                    script.trajectory.start = P::new(v[0], v[1]);
                }
                "segment" => {
                    let v = nums(3)?;
                    if v[0] < 0.0 {
                        return Err(err("negative segment start".into()));
                    }
                    script.trajectory.segments.push(Segment {
                        start_us: v[0] as u64,
                        velocity: P::new(v[1], v[2]),
                    });
                }
                "duration_us" => script.trajectory.duration_us = nums(1)?[0] as u64,
                "events_per_pixel" => script.events_per_pixel = nums(1)?[0] as u32,
                "jitter_us" => script.jitter_us = nums(1)?[0] as u64,
                "noise_rate" => script.noise_rate = nums(1)?[0],
                "dither" => {
                    script.dither = value
                        .parse()
                        .map_err(|_| err(format!("bad boolean '{value}'")))?
                }
                "diamond" => script.contour.extend(diamond(nums(1)?[0] as i64)),
                "diamond_corners" => script.features.extend(diamond_corners(nums(1)?[0] as i64)),
                "point" => {
                    let v = nums(2)?;
                    script.contour.push(P::new(v[0], v[1]));
                }
                "feature" => {
                    let v = nums(2)?;
                    script.features.push(P::new(v[0], v[1]));
                }
                "contour_file" => {
                    let path = match base_dir {
                        Some(d) => d.join(value),
                        None => value.into(),
                    };
                    script.contour.extend(read_points_csv(&std::fs::read_to_string(path)?)?);
                }
                other => return Err(err(format!("unknown key '{other}'"))),
            }
        }
        script.validate()?;
        Ok(script)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path)?, path.parent())
    }
}

/// `dx,dy` rows, optional header.
pub fn read_points_csv(text: &str) -> Result<Vec<P>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        match (f.first().and_then(|s| s.parse::<f64>().ok()), f.get(1).and_then(|s| s.parse::<f64>().ok())) {
            (Some(x), Some(y)) if f.len() == 2 => out.push(P::new(x, y)),
            _ if i == 0 => continue,
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected dx,dy, got '{line}'"),
                })
            }
        }
    }
    Ok(out)
}

/// Exact positions behind a generated stream.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub trajectory: Trajectory,
    /// Source point offsets actually used, after dithering.
    pub sources: Vec<P>,
    pub features: Vec<P>,
    /// Emitting source index per stream event, `None` for noise.
    pub source_ids: Vec<Option<u32>>,
}

impl GroundTruth {
    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn feature_at(&self, feature: usize, t_us: u64) -> P {
        self.trajectory.center_at(t_us) + self.features[feature]
    }

    pub fn source_at(&self, source: usize, t_us: u64) -> P {
        self.trajectory.center_at(t_us) + self.sources[source]
    }

    /// Piecewise-linear tracks sampled at segment boundaries, the end of the
    /// run and every `period_us` (0 disables periodic samples).
    pub fn tracks(&self, period_us: u64) -> TruthTracks {
        let mut times: Vec<u64> = self.trajectory.spans().flat_map(|(s, e, _)| [s, e]).collect();
        times.push(0);
        times.push(self.trajectory.duration_us);
        if period_us > 0 {
            times.extend((0..=self.trajectory.duration_us).step_by(period_us as usize));
        }
        times.sort_unstable();
        times.dedup();
        let tracks = (0..self.features.len())
            .map(|f| times.iter().map(|&t| (t, self.feature_at(f, t))).collect())
            .collect();
        TruthTracks { tracks }
    }
}

/// Sampled feature paths, linearly interpolated between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTracks {
    pub tracks: Vec<Vec<(u64, P)>>,
}

pub const TRUTH_HEADER: &str = "t_us,feature_id,x,y";

impl TruthTracks {
    pub fn feature_count(&self) -> usize {
        self.tracks.len()
    }

    pub fn position(&self, feature: usize, t_us: u64) -> Option<P> {
        let track = self.tracks.get(feature)?;
        let i = track.partition_point(|&(t, _)| t < t_us);
        if i < track.len() && track[i].0 == t_us {
            return Some(track[i].1);
        }
        if i == 0 || i == track.len() {
            return None;
        }
        let ((ta, pa), (tb, pb)) = (track[i - 1], track[i]);
        let w = (t_us - ta) as f64 / (tb - ta) as f64;
        Some(pa + (pb - pa) * w)
    }

    /// Velocity of the linear piece containing `t_us` (the last piece at the end).
    pub fn velocity(&self, feature: usize, t_us: u64) -> Option<P> {
        let track = self.tracks.get(feature)?;
        if track.len() < 2 || t_us < track[0].0 || t_us > track[track.len() - 1].0 {
            return None;
        }
        let i = track.partition_point(|&(t, _)| t <= t_us).clamp(1, track.len() - 1);
        let ((ta, pa), (tb, pb)) = (track[i - 1], track[i]);
        Some((pb - pa) / ((tb - ta) as f64 * 1e-6))
    }

    pub fn span(&self, feature: usize) -> Option<(u64, u64)> {
        let t = self.tracks.get(feature)?;
        Some((t.first()?.0, t.last()?.0))
    }

    pub fn path_length(&self, feature: usize, a_us: u64, b_us: u64) -> f64 {
        let Some(track) = self.tracks.get(feature) else { return 0.0 };
        let mut len = 0.0;
        let mut prev: Option<P> = None;
        let mut pts: Vec<(u64, P)> = track
            .iter()
            .copied()
            .filter(|&(t, _)| t > a_us && t < b_us)
            .collect();
        if let Some(p) = self.position(feature, a_us) {
            pts.insert(0, (a_us, p));
        }
        if let Some(p) = self.position(feature, b_us) {
            pts.push((b_us, p));
        }
        for (_, p) in pts {
            if let Some(q) = prev {
                len += (p - q).norm();
            }
            prev = Some(p);
        }
        len
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{TRUTH_HEADER}")?;
        for (f, track) in self.tracks.iter().enumerate() {
            for &(t, p) in track {
                writeln!(w, "{t},{f},{},{}", p.x, p.y)?;
            }
        }
        Ok(())
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut tracks: Vec<Vec<(u64, P)>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("t_us")) {
                continue;
            }
            let perr = || Error::Parse {
                line: i + 1,
                msg: format!("expected {TRUTH_HEADER}, got '{line}'"),
            };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(perr());
            }
            let t: u64 = f[0].parse().map_err(|_| perr())?;
            let id: usize = f[1].parse().map_err(|_| perr())?;
            let x: f64 = f[2].parse().map_err(|_| perr())?;
            let y: f64 = f[3].parse().map_err(|_| perr())?;
            if tracks.len() <= id {
                tracks.resize(id + 1, Vec::new());
            }
            tracks[id].push((t, P::new(x, y)));
        }
        for t in tracks.iter_mut() {
            t.sort_by_key(|s| s.0);
            t.dedup_by_key(|s| s.0);
        }
        Ok(Self { tracks })
    }
}

/// Emissions of one source point over the whole trajectory: `(t_seconds, pixel)`.
fn source_crossings(traj: &Trajectory, offset: P, out: &mut Vec<(f64, (i64, i64))>) {
    out.clear();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (s_us, e_us, v) in traj.spans() {
        let ts = s_us as f64 * 1e-6;
        let te = e_us as f64 * 1e-6;
        let a = traj.center_at(s_us) + offset;
        let b = a + v * (te - ts);
        axis_crossings(a.x, b.x, v.x, ts, &mut xs);
        axis_crossings(a.y, b.y, v.y, ts, &mut ys);
        let at = |t: f64| a + v * (t - ts);
        let round = |c: f64| (c + 0.5).floor() as i64;
        let (mut i, mut j) = (0, 0);
        while i < xs.len() || j < ys.len() {
            let tx = xs.get(i).map(|c| c.0);
            let ty = ys.get(j).map(|c| c.0);
            match (tx, ty) {
                (Some(x), Some(y)) if (x - y).abs() < SIMULTANEOUS_S => {
                    out.push((x.min(y), (xs[i].1, ys[j].1)));
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x < y => {
                    out.push((x, (xs[i].1, round(at(x).y))));
                    i += 1;
                }
                (Some(x), None) => {
                    out.push((x, (xs[i].1, round(at(x).y))));
                    i += 1;
                }
                (_, Some(y)) => {
                    out.push((y, (round(at(y).x), ys[j].1)));
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
    }
}

/// Integers passed when moving from `a` to `b` in `(ts, ..]`, with crossing times.
fn axis_crossings(a: f64, b: f64, v: f64, ts: f64, out: &mut Vec<(f64, i64)>) {
    out.clear();
    if v > 0.0 {
        let mut k = a.floor() as i64 + 1;
        while (k as f64) <= b {
            out.push((ts + (k as f64 - a) / v, k));
            k += 1;
        }
    } else if v < 0.0 {
        let mut k = a.ceil() as i64 - 1;
        while (k as f64) >= b {
            out.push((ts + (k as f64 - a) / v, k));
            k -= 1;
        }
    }
}

/// Deterministic stream and ground truth for `script` and `seed`.
pub fn generate(script: &SceneScript, seed: u64) -> Result<(EventStream, GroundTruth)> {
    script.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources = script.sources(&mut rng);
    let n = sources.len().max(1) as f64;
    let centroid = sources.iter().fold(P::zero(), |a, &p| a + p) / n;
    let geometry = script.geometry;
    let traj = &script.trajectory;
    let jitter = script.jitter_us as i64;

    let mut tagged: Vec<(Event, Option<u32>)> = Vec::new();
    let mut crossings = Vec::new();
    for (id, &offset) in sources.iter().enumerate() {
        source_crossings(traj, offset, &mut crossings);
        for &(t, (px, py)) in &crossings {
            if px < 0 || py < 0 || !geometry.contains(px as u32, py as u32) {
                continue;
            }
            let v = traj.velocity_at((t * 1e6) as u64);
            let polarity = if (offset - centroid).dot(v) >= 0.0 {
                Polarity::On
            } else {
                Polarity::Off
            };
            let base = (t * 1e6).round() as i64;
            for _ in 0..script.events_per_pixel {
                let dt = if jitter > 0 { rng.gen_range(-jitter..=jitter) } else { 0 };
                let t_us = (base + dt).max(0) as u64;
                tagged.push((Event::new(t_us, px as u16, py as u16, polarity), Some(id as u32)));
            }
        }
    }

    if script.noise_rate > 0.0 && traj.duration_us > 0 {
        let mut t = 0.0f64;
        let end = traj.duration_us as f64 * 1e-6;
        loop {
            t += -(1.0 - rng.gen::<f64>()).ln() / script.noise_rate;
            if t > end {
                break;
            }
            let x = rng.gen_range(0..geometry.width);
            let y = rng.gen_range(0..geometry.height);
            let p = if rng.gen::<bool>() { Polarity::On } else { Polarity::Off };
            tagged.push((Event::new((t * 1e6) as u64, x, y, p), None));
        }
    }

    // Simultaneous events leave the sensor in arbitrary order.
    tagged.shuffle(&mut rng);
    tagged.sort_by_key(|(e, _)| e.t);
    let (events, source_ids): (Vec<Event>, Vec<Option<u32>>) = tagged.into_iter().unzip();
    let stream = EventStream::new(geometry, events)?;
    Ok((
        stream,
        GroundTruth {
            trajectory: traj.clone(),
            sources,
            features: script.features.clone(),
            source_ids,
        },
    ))
}

/// Parameters of the canonical rotated-square benchmark.
pub mod fig4 {
    /// Half diagonal of the square, pixels.
    pub const HALF_DIAGONAL: i64 = 40;
    pub const SPEED: f64 = 750.0;
    pub const START: (f64, f64) = (100.0, 70.0);
    pub const DURATION_US: u64 = 600_000;
    pub const SEED: u64 = 4;
    /// Dense emission keeps the per-event centroid noise well under the
    /// velocity error being measured.
    pub const EVENTS_PER_PIXEL: u32 = 60;
    pub const JITTER_US: u64 = 0;
}

/// Rotated square moving diagonally at 750 px/s, corners labeled as features.
pub fn fig4_script() -> SceneScript {
    let c = fig4::SPEED / std::f64::consts::SQRT_2;
    let mut s = SceneScript::new(
        diamond(fig4::HALF_DIAGONAL),
        P::new(fig4::START.0, fig4::START.1),
        P::new(c, c),
        fig4::DURATION_US,
    );
    s.features = diamond_corners(fig4::HALF_DIAGONAL);
    s.events_per_pixel = fig4::EVENTS_PER_PIXEL;
    s.jitter_us = fig4::JITTER_US;
    s
}

pub fn fig4_benchmark() -> (EventStream, GroundTruth) {
    generate(&fig4_script(), fig4::SEED).expect("canonical script is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_contour_is_silent() {
        let s = SceneScript::new(diamond(5), P::new(100.0, 100.0), P::zero(), 100_000);
        let (stream, _) = generate(&s, 1).unwrap();
        assert!(stream.is_empty());
    }

    #[test]
    fn single_point_steps_one_pixel_every_10ms() {
        let mut s = SceneScript::new(vec![P::zero()], P::new(50.0, 20.0), P::new(100.0, 0.0), 100_000);
        s.events_per_pixel = 1;
        s.jitter_us = 0;
        let (stream, truth) = generate(&s, 0).unwrap();
        let ev = stream.events();
        assert_eq!(ev.len(), 10);
        for (i, e) in ev.iter().enumerate() {
            assert_eq!(e.x as usize, 51 + i);
            assert_eq!(e.y, 20);
            assert_eq!(e.t, 10_000 * (i as u64 + 1));
        }
        assert!(truth.source_ids.iter().all(|&id| id == Some(0)));
    }

    #[test]
    fn diamond_shape() {
        let d = diamond(14);
        assert_eq!(d.len(), 56);
        assert!(d.iter().all(|p| p.x.abs() + p.y.abs() == 14.0));
        assert_eq!(diamond_corners(14)[0], P::new(14.0, 0.0));
    }

    #[test]
    fn diagonal_crossings_merge() {
        let mut s = SceneScript::new(vec![P::zero()], P::new(10.0, 10.0), P::new(100.0, 100.0), 50_000);
        s.events_per_pixel = 1;
        s.jitter_us = 0;
        let (stream, _) = generate(&s, 0).unwrap();
        assert_eq!(stream.len(), 5);
        assert_eq!((stream.events()[0].x, stream.events()[0].y), (11, 11));
    }

    #[test]
    fn deterministic_given_seed() {
        let mut s = fig4_script();
        s.trajectory.duration_us = 50_000;
        s.noise_rate = 1000.0;
        s.dither = true;
        let (a, _) = generate(&s, 9).unwrap();
        let (b, _) = generate(&s, 9).unwrap();
        let (c, _) = generate(&s, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn trajectory_continuous_across_segments() {
        let t = Trajectory {
            start: P::new(0.0, 0.0),
            segments: vec![
                Segment { start_us: 0, velocity: P::new(100.0, 0.0) },
                Segment { start_us: 100_000, velocity: P::new(0.0, -50.0) },
            ],
            duration_us: 300_000,
        };
        assert_eq!(t.center_at(100_000), P::new(10.0, 0.0));
        assert_eq!(t.center_at(300_000), P::new(10.0, -10.0));
        assert!((t.path_length(0, 300_000) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn truth_tracks_interpolate_and_round_trip() {
        let (_, truth) = {
            let mut s = fig4_script();
            s.trajectory.duration_us = 20_000;
            generate(&s, 0).unwrap()
        };
        let tracks = truth.tracks(5_000);
        let mid = tracks.position(0, 7_500).unwrap();
        let exact = truth.feature_at(0, 7_500);
        assert!((mid - exact).norm() < 1e-9);
        assert!(tracks.position(0, 30_000).is_none());
        let mut buf = Vec::new();
        tracks.write_csv(&mut buf).unwrap();
        let back = TruthTracks::parse_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.feature_count(), 4);
        assert!((back.position(2, 12_345).unwrap() - truth.feature_at(2, 12_345)).norm() < 1e-6);
    }

    #[test]
    fn script_text_parse() {
        let text = "geometry=320x240\nstart=50,60\nsegment=0,100,0\nsegment=5000,0,100\nduration_us=10000\n\
                    events_per_pixel=2\njitter_us=0\ndiamond=3\ndiamond_corners=3\npoint=0.5,0.5\n";
        let s = SceneScript::parse(text, None).unwrap();
        assert_eq!(s.geometry, SensorGeometry::new(320, 240).unwrap());
        assert_eq!(s.contour.len(), 13);
        assert_eq!(s.features.len(), 4);
        assert_eq!(s.trajectory.segments.len(), 2);
        assert!(SceneScript::parse("bogus=1\nsegment=0,1,1\n", None).is_err());
        assert!(SceneScript::parse("segment=5,1,1\n", None).is_err());
    }
}
