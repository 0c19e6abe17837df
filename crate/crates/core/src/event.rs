//! Events, sensor geometry and ordered event streams.

use crate::error::{Error, Result};

/// Sign of the luminance change that triggered an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Off,
    On,
}

impl Polarity {
    pub fn as_i8(self) -> i8 {
        match self {
            Polarity::On => 1,
            Polarity::Off => -1,
        }
    }

    pub fn from_i64(p: i64) -> Result<Self> {
        match p {
            1 => Ok(Polarity::On),
            -1 => Ok(Polarity::Off),
            other => Err(Error::Polarity(other)),
        }
    }
}

/// One asynchronous luminance-change sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    /// Microseconds.
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, polarity: Polarity) -> Self {
        Self { t, x, y, polarity }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SensorGeometry {
    pub width: u16,
    pub height: u16,
}

impl SensorGeometry {
    pub fn new(width: u16, height: u16) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(width as u32, height as u32));
        }
        Ok(Self { width, height })
    }

    #[inline]
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x < self.width as u32 && y < self.height as u32
    }

    /// Parses `WxH`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad geometry '{s}', expected WxH"));
        let (w, h) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let w: u32 = w.trim().parse().map_err(|_| bad())?;
        let h: u32 = h.trim().parse().map_err(|_| bad())?;
        if w > u16::MAX as u32 || h > u16::MAX as u32 {
            return Err(Error::Geometry(w, h));
        }
        Self::new(w as u16, h as u16)
    }
}

impl Default for SensorGeometry {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
        }
    }
}

/// Time-ordered, immutable sequence of events on a fixed sensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    geometry: SensorGeometry,
    events: Vec<Event>,
}

impl EventStream {
    /// Validates bounds and timestamp monotonicity.
    pub fn new(geometry: SensorGeometry, events: Vec<Event>) -> Result<Self> {
        let mut prev = 0u64;
        for (index, e) in events.iter().enumerate() {
            if !geometry.contains(e.x as u32, e.y as u32) {
                return Err(Error::OutOfBounds {
                    index,
                    x: e.x as u32,
                    y: e.y as u32,
                    width: geometry.width,
                    height: geometry.height,
                });
            }
            if index > 0 && e.t < prev {
                return Err(Error::Ordering {
                    index,
                    prev_us: prev,
                    t_us: e.t,
                });
            }
            prev = e.t;
        }
        Ok(Self { geometry, events })
    }

    pub fn empty(geometry: SensorGeometry) -> Self {
        Self {
            geometry,
            events: Vec::new(),
        }
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    /// First and last timestamps, if any.
    pub fn span(&self) -> Option<(u64, u64)> {
        Some((self.events.first()?.t, self.events.last()?.t))
    }
}

/// Stable two-way merge; on equal timestamps events of `a` come first.
pub fn merge_sorted(a: &EventStream, b: &EventStream) -> Result<EventStream> {
    if a.geometry != b.geometry {
        return Err(Error::GeometryMismatch(
            a.geometry.width,
            a.geometry.height,
            b.geometry.width,
            b.geometry.height,
        ));
    }
    let (ea, eb) = (a.events(), b.events());
    let mut out = Vec::with_capacity(ea.len() + eb.len());
    let (mut i, mut j) = (0, 0);
    while i < ea.len() && j < eb.len() {
        if eb[j].t < ea[i].t {
            out.push(eb[j]);
            j += 1;
        } else {
            out.push(ea[i]);
            i += 1;
        }
    }
    out.extend_from_slice(&ea[i..]);
    out.extend_from_slice(&eb[j..]);
    Ok(EventStream {
        geometry: a.geometry,
        events: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t: u64) -> Event {
        Event::new(t, 1, 1, Polarity::On)
    }

    fn stream(ts: &[u64]) -> EventStream {
        EventStream::new(SensorGeometry::default(), ts.iter().map(|&t| ev(t)).collect()).unwrap()
    }

    #[test]
    fn rejects_regression_at_offending_index() {
        let err = EventStream::new(SensorGeometry::default(), vec![ev(5), ev(4)]).unwrap_err();
        assert!(matches!(err, Error::Ordering { index: 1, .. }));
    }

    #[test]
    fn rejects_out_of_bounds() {
        let g = SensorGeometry::new(10, 10).unwrap();
        let err = EventStream::new(g, vec![Event::new(0, 10, 0, Polarity::On)]).unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { index: 0, .. }));
    }

    #[test]
    fn equal_timestamps_are_legal() {
        assert_eq!(stream(&[3, 3, 3]).len(), 3);
    }

    #[test]
    fn merge_orders_and_breaks_ties_toward_a() {
        assert_eq!(
            merge_sorted(&stream(&[1]), &stream(&[2])).unwrap().events().iter().map(|e| e.t).collect::<Vec<_>>(),
            vec![1, 2]
        );
        let a = EventStream::new(SensorGeometry::default(), vec![Event::new(5, 1, 1, Polarity::On)]).unwrap();
        let b = EventStream::new(SensorGeometry::default(), vec![Event::new(5, 2, 2, Polarity::Off)]).unwrap();
        let m = merge_sorted(&a, &b).unwrap();
        assert_eq!(m.events()[0].x, 1);
        assert_eq!(m.events()[1].x, 2);
        assert_eq!(merge_sorted(&stream(&[]), &stream(&[3])).unwrap().events(), stream(&[3]).events());
    }

    #[test]
    fn merge_rejects_geometry_mismatch() {
        let a = EventStream::empty(SensorGeometry::default());
        let b = EventStream::empty(SensorGeometry::new(10, 10).unwrap());
        assert!(matches!(merge_sorted(&a, &b), Err(Error::GeometryMismatch(..))));
    }

    #[test]
    fn geometry_parse() {
        assert_eq!(SensorGeometry::parse("640x480").unwrap(), SensorGeometry::default());
        assert!(SensorGeometry::parse("0x5").is_err());
        assert!(SensorGeometry::parse("abc").is_err());
    }
}
