//! Pure event-based feature detection and tracking.
//!
//! Events are projected along velocity hypotheses onto a reference plane; a
//! hypothesis matching the true motion turns the events of a rigid structure
//! into a sharp, time-independent contour. Per-event feedback from decaying
//! accumulation maps drives each hypothesis towards the true velocity.
//!
//! The math is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! `f64`, which is what the command-line harness uses.

pub mod bench;
pub mod config;
pub mod decay;
pub mod descriptor;
pub mod error;
pub mod event;
pub mod io;
pub mod pgm;
pub mod projection;
pub mod scalar;
pub mod synth;
pub mod tracker;
pub mod vec2;

pub use error::{Error, Result};
pub use event::{merge_sorted, Event, EventStream, Polarity, SensorGeometry};
pub use scalar::Scalar;
pub use vec2::Vec2;

pub type Velocity = vec2::Vec2<f64>;
pub type Velocity32 = vec2::Vec2<f32>;
pub type Config = config::TrackerConfig<f64>;
pub type Config32 = config::TrackerConfig<f32>;
pub type DecayingMap = decay::DecayingMap<f64>;
pub type DecayingMap32 = decay::DecayingMap<f32>;
pub type Tracker = tracker::TrackerState<f64>;
pub type Tracker32 = tracker::TrackerState<f32>;
pub type TrackerBank = tracker::TrackerBank<f64>;
pub type TrackerBank32 = tracker::TrackerBank<f32>;
pub type Histogram = projection::ProjectionHistogram<f64>;
pub type Histogram32 = projection::ProjectionHistogram<f32>;
pub type Descriptor = descriptor::Descriptor<f64>;
pub type Descriptor32 = descriptor::Descriptor<f32>;
