//! Tracking accuracy against ground truth.
//!
//! A feature is followed by many trackers (one per velocity seed). Each
//! tracker's corrections are compared with the truth path from the moment the
//! feature sits inside its window; per feature the tracker with the lowest
//! time-averaged B (among those covering most of the run) is reported.
//!
//! The raw error is the mean distance between reported and true positions.
//! The compensated error first removes the mean displacement vector, which
//! absorbs the constant lag introduced while the reference centroid forms.

use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::event::Event;
use crate::synth::TruthTracks;
use crate::tracker::{Telemetry, TrackerBank, TrackerState};
use crate::vec2::Vec2;
use std::io::Write;
use std::time::Instant;

type P = Vec2<f64>;

/// Relative velocity error below which a tracker counts as converged.
pub const CONVERGENCE_TOLERANCE: f64 = 0.02;

pub const REPORT_HEADER: &str = "feature,tracker_id,samples,raw_error_px,offset_x,offset_y,error_px,\
length_px,raw_ratio,ratio,ratio_std,convergence_px,mean_b";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureReport {
    pub feature: usize,
    pub tracker_id: usize,
    pub samples: u64,
    /// Mean distance to truth, pixels.
    pub raw_error: f64,
    /// Mean displacement vector (reported minus truth).
    pub offset: P,
    /// Mean distance after removing `offset`.
    pub error: f64,
    /// Truth path length over the compared span.
    pub length: f64,
    pub raw_ratio: f64,
    /// `error / length`.
    pub ratio: f64,
    /// Standard deviation of the per-sample compensated error over `length`.
    pub ratio_std: f64,
    /// Travel until the velocity came within [`CONVERGENCE_TOLERANCE`].
    pub convergence_px: Option<f64>,
    /// Time-averaged B after convergence (over the whole comparison if never).
    pub mean_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub features: Vec<FeatureReport>,
    pub events: u64,
    pub trackers: usize,
    /// Seconds spent inside the per-event tracking loop, when measured.
    pub elapsed_s: Option<f64>,
}

impl BenchmarkReport {
    pub fn feature(&self, feature: usize) -> Option<&FeatureReport> {
        self.features.iter().find(|f| f.feature == feature)
    }

    /// Events per second through the whole bank.
    pub fn throughput(&self) -> Option<f64> {
        self.elapsed_s
            .filter(|&s| s > 0.0)
            .map(|s| self.events as f64 / s)
    }

    /// Worst convergence travel over features; `None` if any feature never converged.
    pub fn convergence_px(&self) -> Option<f64> {
        self.features
            .iter()
            .map(|f| f.convergence_px)
            .try_fold(0.0f64, |acc, c| c.map(|c| acc.max(c)))
    }

    pub fn mean_ratio(&self) -> f64 {
        mean(self.features.iter().map(|f| f.ratio))
    }

    pub fn mean_b(&self) -> f64 {
        mean(self.features.iter().map(|f| f.mean_b))
    }

    /// Per-feature rows. Timing is left out so equal inputs give equal bytes.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{REPORT_HEADER}")?;
        for f in &self.features {
            let conv = f.convergence_px.map(|c| format!("{c:.3}")).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6}",
                f.feature,
                f.tracker_id,
                f.samples,
                f.raw_error,
                f.offset.x,
                f.offset.y,
                f.error,
                f.length,
                f.raw_ratio,
                f.ratio,
                f.ratio_std,
                conv,
                f.mean_b
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("ascii report")
    }

    /// One human-readable line with the run-level numbers.
    pub fn summary(&self) -> String {
        let conv = self
            .convergence_px()
            .map_or("not reached".to_string(), |c| format!("{c:.1} px"));
        let tp = self
            .throughput()
            .map_or("n/a".to_string(), |t| format!("{t:.0} events/s"));
        format!(
            "features={} trackers={} events={} mean_ratio={:.4} mean_B={:.4} convergence={} throughput={}",
            self.features.len(),
            self.trackers,
            self.events,
            self.mean_ratio(),
            self.mean_b(),
            conv,
            tp
        )
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

#[derive(Debug, Clone, Default)]
struct TrackStats {
    feature: usize,
    samples: u64,
    first_us: u64,
    last_us: u64,
    err_sum: f64,
    offset_sum: P,
    converged_us: Option<u64>,
    b_area: f64,
    b_time: f64,
    b_sum: f64,
    b_count: u64,
    last_b: Option<(u64, f64)>,
}

impl TrackStats {
    fn mean_b(&self) -> f64 {
        if self.b_time > 0.0 {
            self.b_area / self.b_time
        } else if self.b_count > 0 {
            self.b_sum / self.b_count as f64
        } else {
            f64::INFINITY
        }
    }
}

/// Streaming first pass over telemetry: per-tracker error, offset and B.
#[derive(Debug, Clone)]
pub struct TruthComparison<'a> {
    truth: &'a TruthTracks,
    half_window: f64,
    stats: Vec<Option<TrackStats>>,
}

impl<'a> TruthComparison<'a> {
    /// `window` is the tracker window side, pixels.
    pub fn new(truth: &'a TruthTracks, window: usize) -> Self {
        Self {
            truth,
            half_window: window as f64 / 2.0,
            stats: Vec::new(),
        }
    }

    pub fn observe(&mut self, t: &Telemetry<f64>) {
        if self.stats.len() <= t.tracker_id {
            self.stats.resize(t.tracker_id + 1, None);
        }
        let Some(truth) = self.truth.position(t.feature, t.t_us) else {
            return;
        };
        let slot = &mut self.stats[t.tracker_id];
        if slot.is_none() {
            let d = t.center - truth;
            if d.x.abs() > self.half_window || d.y.abs() > self.half_window {
                return;
            }
            *slot = Some(TrackStats {
                feature: t.feature,
                first_us: t.t_us,
                ..TrackStats::default()
            });
        }
        let st = slot.as_mut().expect("just filled");
        let d = t.center - truth;
        st.samples += 1;
        st.last_us = t.t_us;
        st.err_sum += d.norm();
        st.offset_sum += d;

        if st.converged_us.is_none() {
            if let Some(vth) = self.truth.velocity(t.feature, t.t_us) {
                let speed = vth.norm();
                if speed > 0.0 && (t.velocity - vth).norm() / speed < CONVERGENCE_TOLERANCE {
                    st.converged_us = Some(t.t_us);
                    // B is averaged from convergence on.
                    st.b_area = 0.0;
                    st.b_time = 0.0;
                    st.b_sum = 0.0;
                    st.b_count = 0;
                    st.last_b = None;
                }
            }
        }
        if let Some((lt, lb)) = st.last_b {
            let dt = (t.t_us - lt) as f64;
            st.b_area += lb * dt;
            st.b_time += dt;
        }
        if t.b.is_finite() {
            st.b_sum += t.b;
            st.b_count += 1;
            st.last_b = Some((t.t_us, t.b));
        }
    }

    /// Tracker chosen per feature among those whose compared span is at least
    /// half the longest one: the first to converge, or the lowest time-averaged
    /// B when none did.
    pub fn select(&self) -> Vec<Option<usize>> {
        let features = self.truth.feature_count();
        let mut longest = vec![0u64; features];
        for st in self.stats.iter().flatten() {
            if st.feature < features {
                longest[st.feature] = longest[st.feature].max(st.last_us - st.first_us);
            }
        }
        let mut best: Vec<Option<(usize, (u64, f64))>> = vec![None; features];
        for (id, st) in self.stats.iter().enumerate() {
            let Some(st) = st else { continue };
            if st.feature >= features || 2 * (st.last_us - st.first_us) < longest[st.feature] {
                continue;
            }
            let key = (st.converged_us.unwrap_or(u64::MAX), st.mean_b());
            let slot = &mut best[st.feature];
            if slot.map_or(true, |(_, k)| key < k) {
                *slot = Some((id, key));
            }
        }
        best.into_iter().map(|b| b.map(|(id, _)| id)).collect()
    }

    fn offset(&self, id: usize) -> Option<P> {
        let st = self.stats.get(id)?.as_ref()?;
        (st.samples > 0).then(|| st.offset_sum / st.samples as f64)
    }

    fn report(&self, id: usize, second: &Residuals) -> Option<FeatureReport> {
        let st = self.stats.get(id)?.as_ref()?;
        if st.samples == 0 {
            return None;
        }
        let length = self.truth.path_length(st.feature, st.first_us, st.last_us);
        if length <= 0.0 {
            return None;
        }
        let n = second.count.max(1) as f64;
        let error = second.sum / n;
        let var = (second.sum_sq / n - error * error).max(0.0);
        let raw_error = st.err_sum / st.samples as f64;
        let start = self.truth.span(st.feature).map_or(0, |s| s.0);
        Some(FeatureReport {
            feature: st.feature,
            tracker_id: id,
            samples: st.samples,
            raw_error,
            offset: st.offset_sum / st.samples as f64,
            error,
            length,
            raw_ratio: raw_error / length,
            ratio: error / length,
            ratio_std: var.sqrt() / length,
            convergence_px: st
                .converged_us
                .map(|t| self.truth.path_length(st.feature, start, t)),
            mean_b: st.mean_b(),
        })
    }
}

/// Second pass: distances after removing the first pass's mean offset.
#[derive(Debug, Clone, Default)]
struct Residuals {
    offset: P,
    started: bool,
    count: u64,
    sum: f64,
    sum_sq: f64,
}

impl Residuals {
    fn observe(&mut self, t: &Telemetry<f64>, truth: &TruthTracks, half_window: f64) {
        let Some(p) = truth.position(t.feature, t.t_us) else { return };
        let d = t.center - p;
        if !self.started {
            if d.x.abs() > half_window || d.y.abs() > half_window {
                return;
            }
            self.started = true;
        }
        let r = (d - self.offset).norm();
        self.count += 1;
        self.sum += r;
        self.sum_sq += r * r;
    }
}

fn assemble(
    first: &TruthComparison<'_>,
    selected: &[Option<usize>],
    residuals: &[Residuals],
    events: u64,
    trackers: usize,
    elapsed_s: Option<f64>,
) -> Result<BenchmarkReport> {
    let features: Vec<FeatureReport> = selected
        .iter()
        .zip(residuals)
        .filter_map(|(id, r)| id.and_then(|id| first.report(id, r)))
        .collect();
    if features.is_empty() {
        return Err(Error::NoOverlap);
    }
    Ok(BenchmarkReport {
        features,
        events,
        trackers,
        elapsed_s,
    })
}

/// Report from recorded telemetry. `window` is the tracker window side.
pub fn compare_to_truth(
    telemetry: &[Telemetry<f64>],
    truth: &TruthTracks,
    window: usize,
) -> Result<BenchmarkReport> {
    let mut first = TruthComparison::new(truth, window);
    for t in telemetry {
        first.observe(t);
    }
    let selected = first.select();
    let mut residuals: Vec<Residuals> = selected
        .iter()
        .map(|id| Residuals {
            offset: id.and_then(|id| first.offset(id)).unwrap_or_default(),
            ..Residuals::default()
        })
        .collect();
    for t in telemetry {
        if let Some(f) = selected.iter().position(|&s| s == Some(t.tracker_id)) {
            residuals[f].observe(t, truth, first.half_window);
        }
    }
    let trackers = first.stats.len();
    assemble(&first, &selected, &residuals, 0, trackers, None)
}

/// Seeds a bank on the truth positions at the start of the truth span, runs
/// it over `events` and compares with `truth`. The selected trackers are
/// replayed from their initial state for the offset-compensated pass, so no
/// telemetry has to be kept in memory.
pub fn run_benchmark(
    events: &[Event],
    truth: &TruthTracks,
    config: TrackerConfig<f64>,
) -> Result<BenchmarkReport> {
    let start = (0..truth.feature_count())
        .filter_map(|f| truth.span(f).map(|s| s.0))
        .min()
        .ok_or(Error::NoOverlap)?;
    let positions: Vec<P> = (0..truth.feature_count())
        .map(|f| truth.position(f, start).ok_or(Error::NoOverlap))
        .collect::<Result<_>>()?;
    let window = config.window;
    let mut bank = TrackerBank::with_grid(&positions, config)?;
    bank.start_at(start);
    let initial: Vec<TrackerState<f64>> = bank.trackers().to_vec();

    let mut first = TruthComparison::new(truth, window);
    let began = Instant::now();
    for e in events {
        bank.process_event(e, &mut |t: &Telemetry<f64>| first.observe(t))?;
    }
    let elapsed = began.elapsed().as_secs_f64();

    let selected = first.select();
    let mut replay: Vec<(usize, TrackerState<f64>, Residuals)> = selected
        .iter()
        .enumerate()
        .filter_map(|(f, id)| id.map(|id| (f, id)))
        .map(|(f, id)| {
            let r = Residuals {
                offset: first.offset(id).unwrap_or_default(),
                ..Residuals::default()
            };
            (f, initial[id].clone(), r)
        })
        .collect();
    let cfg = bank.config();
    for e in events {
        for (_, tr, r) in replay.iter_mut() {
            if let Some(t) = tr.offer(e, cfg)? {
                r.observe(&t, truth, first.half_window);
            }
        }
    }
    let mut residuals = vec![Residuals::default(); selected.len()];
    for (f, _, r) in replay {
        residuals[f] = r;
    }
    assemble(
        &first,
        &selected,
        &residuals,
        bank.events_processed(),
        bank.trackers().len(),
        Some(elapsed),
    )
}
