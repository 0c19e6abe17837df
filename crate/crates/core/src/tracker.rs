//! Multi-hypothesis velocity tracking.
//!
//! Every tracker owns a velocity hypothesis `v`, a projection epoch `t0` and a
//! square observation window in the projection plane. Each incoming event is
//! projected along `v` onto `t = t0`; if it lands in the window the decaying
//! map is updated, the map centroid is compared with the reference centroid
//! captured one `tau = 1/|v|` into the epoch, and the resulting speed error
//! `eps = (mean - ref) / (t - t0)` is fed back with gain `1 / (S * dx)`,
//! `S` being the decayed map mass. Once the error is small and the feature has
//! travelled `N` pixels the epoch is moved forward to `t - tau` and the window
//! follows the feature.

use crate::config::TrackerConfig;
use crate::decay::DecayingMap;
use crate::error::{Error, Result};
use crate::event::Event;
use crate::projection::{project_event, Cell, Region};
use crate::scalar::Scalar;
use crate::vec2::Vec2;
use std::fmt;

/// Whether the reference centroid of the current epoch exists yet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Warming,
    Correcting,
}

/// Detection lifecycle reported to users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Warming,
    Tracking,
    Lost,
    Idle,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Warming => "warming",
            Status::Tracking => "tracking",
            Status::Lost => "lost",
            Status::Idle => "idle",
        })
    }
}

impl std::str::FromStr for Status {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "warming" => Ok(Status::Warming),
            "tracking" => Ok(Status::Tracking),
            "lost" => Ok(Status::Lost),
            "idle" => Ok(Status::Idle),
            other => Err(Error::Config(format!("unknown status '{other}'"))),
        }
    }
}

/// One correction step, emitted for every in-window event once a reference exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Telemetry<T> {
    pub t_us: u64,
    pub tracker_id: usize,
    pub feature: usize,
    pub velocity: Vec2<T>,
    pub eps: Vec2<T>,
    pub s: T,
    pub a: T,
    pub b: T,
    pub center: Vec2<T>,
    pub status: Status,
    /// Displacement of the reported position caused by a plan update at this event.
    pub plan_jump: Option<T>,
}

pub const TELEMETRY_HEADER: &str = "t_us,tracker_id,vx,vy,ex,ey,S,A,B,cx,cy,status";

impl<T: Scalar> Telemetry<T> {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.t_us,
            self.tracker_id,
            self.velocity.x,
            self.velocity.y,
            self.eps.x,
            self.eps.y,
            self.s,
            self.a,
            self.b,
            self.center.x,
            self.center.y,
            self.status
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrackerState<T> {
    id: usize,
    feature: usize,
    seed_velocity: Vec2<T>,
    velocity: Vec2<T>,
    t0_us: Option<u64>,
    /// Window grid origin in the projection plane of the current epoch.
    origin: Vec2<T>,
    /// Sub-cell part of the tracked point not absorbed by the window grid.
    carry: Vec2<T>,
    /// Measured drift not yet applied to the window.
    pending: Vec2<T>,
    window: usize,
    scale: u32,
    map: DecayingMap<T>,
    x_ref: Option<Vec2<T>>,
    /// Start of the warm-up: `t0`, or the first in-window event if later.
    warm_from_us: Option<u64>,
    phase: Phase,
    status: Status,
    last_eps: Vec2<T>,
    corrections: u64,
    plan_updates: u64,
    b_low_since: Option<u64>,
    b_high_since: Option<u64>,
    a_low_since: Option<u64>,
    idle_due_us: Option<u64>,
    last_idle_check: u64,
}

impl<T: Scalar> TrackerState<T> {
    pub fn new(id: usize, feature: usize, center: Vec2<T>, velocity: Vec2<T>, cfg: &TrackerConfig<T>) -> Self {
        let velocity = clamp_seed(velocity, cfg.speed_floor);
        let tau = T::one() / velocity.norm().max(cfg.speed_floor);
        let n = cfg.window * cfg.subpixel as usize;
        let half = T::of(cfg.window as f64 / 2.0);
        Self {
            id,
            feature,
            seed_velocity: velocity,
            velocity,
            t0_us: None,
            origin: center - Vec2::new(half, half),
            carry: Vec2::zero(),
            pending: Vec2::zero(),
            window: cfg.window,
            scale: cfg.subpixel,
            map: DecayingMap::new(n, n, cfg.subpixel, tau),
            x_ref: None,
            warm_from_us: None,
            phase: Phase::Warming,
            status: Status::Warming,
            last_eps: Vec2::zero(),
            corrections: 0,
            plan_updates: 0,
            b_low_since: None,
            b_high_since: None,
            a_low_since: None,
            idle_due_us: None,
            last_idle_check: 0,
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn feature(&self) -> usize {
        self.feature
    }

    pub fn seed_velocity(&self) -> Vec2<T> {
        self.seed_velocity
    }

    pub fn velocity(&self) -> Vec2<T> {
        self.velocity
    }

    pub fn t0_us(&self) -> Option<u64> {
        self.t0_us
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn map(&self) -> &DecayingMap<T> {
        &self.map
    }

    pub fn reference(&self) -> Option<Vec2<T>> {
        self.x_ref
    }

    pub fn last_eps(&self) -> Vec2<T> {
        self.last_eps
    }

    pub fn corrections(&self) -> u64 {
        self.corrections
    }

    pub fn plan_updates(&self) -> u64 {
        self.plan_updates
    }

    pub fn window_side(&self) -> usize {
        self.window
    }

    /// Decay constant `1/|v|`, with the speed floored by `floor`.
    pub fn tau(&self, floor: T) -> T {
        T::one() / self.velocity.norm().max(floor)
    }

    fn tau_us(&self, floor: T) -> u64 {
        (self.tau(floor) * T::of(1e6)).round().to_u64().unwrap_or(u64::MAX)
    }

    /// Window grid in the projection plane of the current epoch.
    pub fn region(&self) -> Region<T> {
        let n = self.window * self.scale as usize;
        Region::new(self.origin, n, n, self.scale)
    }

    /// Window center in the projection plane (sensor coordinates at `t0`).
    pub fn window_center(&self) -> Vec2<T> {
        let half = T::of(self.window as f64 / 2.0);
        self.origin + Vec2::new(half, half)
    }

    /// Reported feature position: the tracked point advected to `t_us` along `v`.
    pub fn position_at(&self, t_us: u64) -> Vec2<T> {
        let base = self.window_center() + self.carry;
        match self.t0_us {
            Some(t0) => base + self.velocity * T::us_delta(t_us, t0),
            None => base,
        }
    }

    /// Starts the first epoch at `t_us` if it has not started yet.
    pub fn start(&mut self, t_us: u64) {
        if self.t0_us.is_none() {
            self.t0_us = Some(t_us);
            self.last_idle_check = t_us;
        }
    }

    /// Cell hit by the projection of `e`, if inside the window.
    #[inline]
    pub fn project(&self, e: &Event) -> Option<Cell> {
        let t0 = self.t0_us?;
        self.region().bin(project_event(e, self.velocity, t0))
    }

    pub fn decay_update(&mut self, cell: Cell, t_us: u64) -> Result<()> {
        self.map.update(cell, t_us)
    }

    /// Captures the reference centroid once the epoch is `tau` old.
    /// Returns whether the reference was set by this call.
    pub fn set_reference(&mut self, t_now_us: u64, floor: T) -> bool {
        let Some(from) = self.warm_from_us.or(self.t0_us) else { return false };
        if self.phase != Phase::Warming || t_now_us <= from.saturating_add(self.tau_us(floor)) {
            return false;
        }
        match self.map.mean_position() {
            Ok(m) => {
                self.x_ref = Some(m);
                self.phase = Phase::Correcting;
                true
            }
            Err(_) => false,
        }
    }

    /// `(mean - ref) / (t - t0)`; `None` while warming or at `t = t0`.
    pub fn speed_error(&self, t_now_us: u64) -> Option<Vec2<T>> {
        let (t0, x_ref) = (self.t0_us?, self.x_ref?);
        if self.phase != Phase::Correcting || t_now_us <= t0 {
            return None;
        }
        let mean = self.map.mean_position().ok()?;
        Some((mean - x_ref) / T::us_delta(t_now_us, t0))
    }

    /// `1 / (S dx)`, or `None` for an empty map.
    pub fn gain(&self, dx: T) -> Option<T> {
        let s = self.map.sum();
        (s > T::zero()).then(|| T::one() / (s * dx))
    }

    /// `v += gain * eps`, then refresh the decay constant.
    pub fn speed_update(&mut self, eps: Vec2<T>, gain: T, floor: T) {
        self.velocity += eps * gain;
        let tau = self.tau(floor);
        self.map.set_tau(tau);
    }

    /// Moves the projection epoch forward once the speed error is below
    /// `k |v|` and the feature travelled more than `N` pixels since `t0`.
    /// Returns the jump of the reported position when the update fires.
    pub fn plan_update(&mut self, t_us: u64, cfg: &TrackerConfig<T>) -> Option<T> {
        let t0 = self.t0_us?;
        if self.phase != Phase::Correcting {
            return None;
        }
        let speed = self.velocity.norm().max(cfg.speed_floor);
        let elapsed = T::us_delta(t_us, t0);
        if !(self.last_eps.norm() <= cfg.k * speed && elapsed > cfg.n / speed) {
            return None;
        }
        let before = self.position_at(t_us);
        let new_t0 = t_us.saturating_sub(self.tau_us(cfg.speed_floor)).max(t0);
        let advection = self.velocity * T::us_delta(new_t0, t0);
        let mean = self.map.mean_position().ok()?;
        let drift = mean - self.x_ref?;

        // Follow the feature: the window moves with the projection plane plus the
        // observed drift; whole cells of drift shift the map, the rest is carried.
        // A bounded step per update keeps the reported position continuous.
        let s = T::of(self.scale as f64);
        let owed = drift + self.pending;
        let len = owed.norm();
        let limit = T::of(MAX_RECENTER_PX);
        let applied = if len > limit { owed * (limit / len) } else { owed };
        self.pending = owed - applied;
        let total = applied + self.carry;
        let kx = (total.x * s).round();
        let ky = (total.y * s).round();
        self.map
            .shift(kx.to_i64().unwrap_or(0), ky.to_i64().unwrap_or(0));
        let quantized = Vec2::new(kx / s, ky / s);
        self.origin += advection + quantized;
        self.carry = total - quantized;

        self.t0_us = Some(new_t0);
        self.warm_from_us = Some(new_t0);
        self.x_ref = None;
        self.phase = Phase::Warming;
        self.plan_updates += 1;
        Some((self.position_at(t_us) - before).norm())
    }

    /// `(A, B) = (S / R, |eps| / |v|)`.
    pub fn detection_metrics(&self, floor: T) -> (T, T) {
        let a = self.map.sum() / T::of_usize(self.window);
        let speed = self.velocity.norm();
        let b = if speed < floor {
            T::infinity()
        } else {
            self.last_eps.norm() / speed
        };
        (a, b)
    }

    fn update_lifecycle(&mut self, t_us: u64, a: T, b: T, cfg: &TrackerConfig<T>) {
        let tau_us = self.tau_us(cfg.speed_floor);
        let sustained = |since: &mut Option<u64>, cond: bool, span: u64| -> bool {
            if cond {
                let s = *since.get_or_insert(t_us);
                t_us - s >= span
            } else {
                *since = None;
                false
            }
        };
        if sustained(&mut self.b_low_since, b < cfg.b_detect, tau_us) {
            self.status = Status::Tracking;
        }
        if sustained(&mut self.b_high_since, b > cfg.b_lost, tau_us) {
            self.status = Status::Lost;
        }
        self.check_idle(t_us, a, cfg);
    }

    fn check_idle(&mut self, t_us: u64, a: T, cfg: &TrackerConfig<T>) {
        let tau_us = self.tau_us(cfg.speed_floor);
        if a < cfg.a_idle {
            let since = match self.a_low_since {
                Some(s) => s,
                None => {
                    let s = self.low_activity_since(t_us, cfg);
                    self.a_low_since = Some(s);
                    s
                }
            };
            let due = since.saturating_add(5 * tau_us);
            self.idle_due_us = Some(due);
            if t_us >= due {
                self.status = Status::Idle;
            }
        } else {
            self.a_low_since = None;
            self.idle_due_us = None;
            if self.status == Status::Idle {
                self.status = Status::Warming;
            }
        }
        self.last_idle_check = t_us;
    }

    /// Instant `A` fell under the idle threshold, from the exponential decay
    /// since the last map update; `t0` for a window that never saw an event.
    fn low_activity_since(&self, t_us: u64, cfg: &TrackerConfig<T>) -> u64 {
        let floor = self.t0_us.unwrap_or(t_us);
        let Some(last) = self.map.last_update_us() else { return floor.min(t_us) };
        let level = cfg.a_idle * T::of_usize(self.window);
        let s = self.map.sum();
        let cross = if s > level {
            let dt = self.map.tau() * (s / level).ln() * T::of(1e6);
            last.saturating_add(dt.round().to_u64().unwrap_or(u64::MAX))
        } else {
            last
        };
        cross.max(floor).min(t_us)
    }

    /// Full per-event step. Returns telemetry when a correction was made.
    pub fn offer(&mut self, e: &Event, cfg: &TrackerConfig<T>) -> Result<Option<Telemetry<T>>> {
        self.start(e.t);
        let Some(cell) = self.project(e) else {
            // Cheap idle bookkeeping for windows the event missed.
            // The map holds the current tau, which spares a square root here.
            let due = self.status != Status::Idle && self.idle_due_us.is_some_and(|d| e.t >= d);
            if due || (e.t > self.last_idle_check && T::us_delta(e.t, self.last_idle_check) >= self.map.tau()) {
                let a = self.map.sum_at(e.t) / T::of_usize(self.window);
                self.check_idle(e.t, a, cfg);
            }
            return Ok(None);
        };
        // The reference is the centroid at exactly t0 + tau, so an event arriving
        // after that instant must not be part of it.
        if self.phase == Phase::Warming {
            if self.warm_from_us.is_none() {
                self.warm_from_us = Some(e.t);
            }
            self.map.decay_to(e.t)?;
            self.set_reference(e.t, cfg.speed_floor);
        }
        self.decay_update(cell, e.t)?;
        let Some(eps) = self.speed_error(e.t) else {
            return Ok(None);
        };
        self.last_eps = eps;
        if let Some(g) = self.gain(cfg.dx) {
            self.speed_update(eps, g, cfg.speed_floor);
        }
        self.corrections += 1;
        let (a, b) = self.detection_metrics(cfg.speed_floor);
        self.update_lifecycle(e.t, a, b, cfg);
        let plan_jump = self.plan_update(e.t, cfg);
        Ok(Some(Telemetry {
            t_us: e.t,
            tracker_id: self.id,
            feature: self.feature,
            velocity: self.velocity,
            eps,
            s: self.map.sum(),
            a,
            b,
            center: self.position_at(e.t),
            status: self.status,
            plan_jump,
        }))
    }
}

/// Largest window recentring applied by one plan update, pixels.
pub const MAX_RECENTER_PX: f64 = 0.5;

fn clamp_seed<T: Scalar>(v: Vec2<T>, floor: T) -> Vec2<T> {
    if v.norm() < floor {
        Vec2::new(floor, T::zero())
    } else {
        v
    }
}

/// Uniform `n x n` grid over `[min, max]^2`, row-major in `vy` then `vx`.
pub fn velocity_grid<T: Scalar>(min: T, max: T, n: usize) -> Vec<Vec2<T>> {
    let axis: Vec<T> = match n {
        0 => Vec::new(),
        1 => vec![(min + max) / T::of(2.0)],
        _ => (0..n)
            .map(|i| min + (max - min) * T::of_usize(i) / T::of_usize(n - 1))
            .collect(),
    };
    axis.iter()
        .flat_map(|&vy| axis.iter().map(move |&vx| Vec2::new(vx, vy)))
        .collect()
}

/// All trackers of a run plus their shared configuration.
#[derive(Debug, Clone)]
pub struct TrackerBank<T> {
    config: TrackerConfig<T>,
    trackers: Vec<TrackerState<T>>,
    features: usize,
    last_us: Option<u64>,
    events: u64,
}

/// One tracker per (window position, velocity) pair, all warming.
pub fn seed_bank<T: Scalar>(
    positions: &[Vec2<T>],
    velocities: &[Vec2<T>],
    config: TrackerConfig<T>,
) -> Result<TrackerBank<T>> {
    if positions.is_empty() || velocities.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut trackers = Vec::with_capacity(positions.len() * velocities.len());
    for (f, &p) in positions.iter().enumerate() {
        for &v in velocities {
            trackers.push(TrackerState::new(trackers.len(), f, p, v, &config));
        }
    }
    Ok(TrackerBank {
        config,
        trackers,
        features: positions.len(),
        last_us: None,
        events: 0,
    })
}

impl<T: Scalar> TrackerBank<T> {
    /// Seeds with the configured velocity grid.
    pub fn with_grid(positions: &[Vec2<T>], config: TrackerConfig<T>) -> Result<Self> {
        let grid = velocity_grid(config.v_min, config.v_max, config.v_grid);
        seed_bank(positions, &grid, config)
    }

    /// Opens the first epoch of every tracker at `t_us`, the instant the seed
    /// positions refer to. Without it each tracker starts at its first event.
    pub fn start_at(&mut self, t_us: u64) {
        for tr in self.trackers.iter_mut() {
            tr.start(t_us);
        }
    }

    pub fn config(&self) -> &TrackerConfig<T> {
        &self.config
    }

    pub fn trackers(&self) -> &[TrackerState<T>] {
        &self.trackers
    }

    pub fn tracker(&self, id: usize) -> &TrackerState<T> {
        &self.trackers[id]
    }

    pub fn feature_count(&self) -> usize {
        self.features
    }

    pub fn events_processed(&self) -> u64 {
        self.events
    }

    /// Offers `e` to every tracker; `sink` sees each correction.
    pub fn process_event<F>(&mut self, e: &Event, sink: &mut F) -> Result<usize>
    where
        F: FnMut(&Telemetry<T>),
    {
        if let Some(last) = self.last_us {
            if e.t < last {
                return Err(Error::Ordering {
                    index: self.events as usize,
                    prev_us: last,
                    t_us: e.t,
                });
            }
        }
        self.last_us = Some(e.t);
        self.events += 1;
        let mut corrected = 0;
        for tr in self.trackers.iter_mut() {
            if let Some(t) = tr.offer(e, &self.config)? {
                corrected += 1;
                sink(&t);
            }
        }
        Ok(corrected)
    }

    pub fn process_all<F>(&mut self, events: &[Event], sink: &mut F) -> Result<()>
    where
        F: FnMut(&Telemetry<T>),
    {
        for e in events {
            self.process_event(e, sink)?;
        }
        Ok(())
    }

    /// Same result as `process_all` without telemetry, trackers split across
    /// `workers` threads that each replay the full event feed.
    pub fn process_sharded(&mut self, events: &[Event], workers: usize) -> Result<()> {
        if let Some(w) = events.windows(2).position(|w| w[1].t < w[0].t) {
            return Err(Error::Ordering {
                index: w + 1,
                prev_us: events[w].t,
                t_us: events[w + 1].t,
            });
        }
        if let (Some(last), Some(first)) = (self.last_us, events.first()) {
            if first.t < last {
                return Err(Error::Ordering {
                    index: 0,
                    prev_us: last,
                    t_us: first.t,
                });
            }
        }
        let workers = workers.max(1);
        let chunk = self.trackers.len().div_ceil(workers).max(1);
        let cfg = &self.config;
        std::thread::scope(|scope| -> Result<()> {
            let handles: Vec<_> = self
                .trackers
                .chunks_mut(chunk)
                .map(|shard| {
                    scope.spawn(move || -> Result<()> {
                        for e in events {
                            for tr in shard.iter_mut() {
                                tr.offer(e, cfg)?;
                            }
                        }
                        Ok(())
                    })
                })
                .collect();
            for h in handles {
                h.join().expect("tracker worker panicked")?;
            }
            Ok(())
        })?;
        if let Some(last) = events.last() {
            self.last_us = Some(last.t);
        }
        self.events += events.len() as u64;
        Ok(())
    }

    /// Tracker of `feature` with the lowest current B among non-idle ones.
    pub fn best_for_feature(&self, feature: usize) -> Option<&TrackerState<T>> {
        let floor = self.config.speed_floor;
        self.trackers
            .iter()
            .filter(|t| t.feature == feature && t.phase == Phase::Correcting && t.status != Status::Idle)
            .min_by(|a, b| {
                let ba = a.detection_metrics(floor).1;
                let bb = b.detection_metrics(floor).1;
                ba.partial_cmp(&bb).unwrap_or(std::cmp::Ordering::Equal)
            })
    }
}
