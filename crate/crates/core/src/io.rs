//! Event recording formats.
//!
//! CSV: one `t_us,x,y,p` record per line, optional non-numeric header line,
//! optional `# geometry WxH` comment (640x480 otherwise).
//!
//! Binary (`EVT1`): 8-byte magic `EVT1\0\0\0\0`, u16 LE width, u16 LE height,
//! then 13-byte records of u64 LE t_us, u16 LE x, u16 LE y, i8 polarity.

use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Polarity, SensorGeometry};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: [u8; 8] = *b"EVT1\0\0\0\0";
pub const HEADER_LEN: usize = 12;
pub const RECORD_LEN: usize = 13;

pub fn read_csv(path: impl AsRef<Path>) -> Result<EventStream> {
    parse_csv(BufReader::new(File::open(path)?))
}

pub fn parse_csv<R: BufRead>(reader: R) -> Result<EventStream> {
    let mut geometry = SensorGeometry::default();
    let mut events = Vec::new();
    let mut seen_record = false;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(g) = comment.trim().strip_prefix("geometry") {
                geometry = SensorGeometry::parse(g).map_err(|e| Error::Parse {
                    line: lineno,
                    msg: e.to_string(),
                })?;
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !seen_record && fields[0].parse::<u64>().is_err() {
            // header line
            seen_record = true;
            continue;
        }
        seen_record = true;
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 4 fields t_us,x,y,p, found {}", fields.len()),
            });
        }
        let perr = |what: &str, v: &str| Error::Parse {
            line: lineno,
            msg: format!("bad {what} '{v}'"),
        };
        let t: u64 = fields[0].parse().map_err(|_| perr("timestamp", fields[0]))?;
        let x: u16 = fields[1].parse().map_err(|_| perr("x", fields[1]))?;
        let y: u16 = fields[2].parse().map_err(|_| perr("y", fields[2]))?;
        let p: i64 = fields[3].parse().map_err(|_| perr("polarity", fields[3]))?;
        let polarity = Polarity::from_i64(p).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        events.push(Event::new(t, x, y, polarity));
    }
    EventStream::new(geometry, events)
}

pub fn write_csv(stream: &EventStream, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    format_csv(stream, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn format_csv<W: Write>(stream: &EventStream, w: &mut W) -> Result<()> {
    let g = stream.geometry();
    writeln!(w, "# geometry {}x{}", g.width, g.height)?;
    writeln!(w, "t_us,x,y,p")?;
    for e in stream.events() {
        writeln!(w, "{},{},{},{}", e.t, e.x, e.y, e.polarity.as_i8())?;
    }
    Ok(())
}

pub fn read_binary(path: impl AsRef<Path>) -> Result<EventStream> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_binary(&bytes)
}

pub fn decode_binary(bytes: &[u8]) -> Result<EventStream> {
    let n = bytes.len().min(MAGIC.len());
    if bytes[..n] != MAGIC[..n] {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated(format!("{} byte header", bytes.len())));
    }
    let width = u16::from_le_bytes([bytes[8], bytes[9]]);
    let height = u16::from_le_bytes([bytes[10], bytes[11]]);
    let geometry = SensorGeometry::new(width, height)?;
    let body = &bytes[HEADER_LEN..];
    if body.len() % RECORD_LEN != 0 {
        return Err(Error::Truncated(format!(
            "record {} has {} of {RECORD_LEN} bytes",
            body.len() / RECORD_LEN,
            body.len() % RECORD_LEN
        )));
    }
    let mut events = Vec::with_capacity(body.len() / RECORD_LEN);
    for r in body.chunks_exact(RECORD_LEN) {
        let t = u64::from_le_bytes(r[0..8].try_into().unwrap());
        let x = u16::from_le_bytes([r[8], r[9]]);
        let y = u16::from_le_bytes([r[10], r[11]]);
        let polarity = Polarity::from_i64(r[12] as i8 as i64)?;
        events.push(Event::new(t, x, y, polarity));
    }
    EventStream::new(geometry, events)
}

pub fn write_binary(stream: &EventStream, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_binary(stream))?;
    w.flush()?;
    Ok(())
}

pub fn encode_binary(stream: &EventStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * stream.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&stream.geometry().width.to_le_bytes());
    out.extend_from_slice(&stream.geometry().height.to_le_bytes());
    for e in stream.events() {
        out.extend_from_slice(&e.t.to_le_bytes());
        out.extend_from_slice(&e.x.to_le_bytes());
        out.extend_from_slice(&e.y.to_le_bytes());
        out.push(e.polarity.as_i8() as u8);
    }
    out
}

/// Picks the reader by extension: `.csv` is text, anything else binary.
pub fn read_auto(path: impl AsRef<Path>) -> Result<EventStream> {
    let path = path.as_ref();
    if is_csv(path) {
        read_csv(path)
    } else {
        read_binary(path)
    }
}

pub fn write_auto(stream: &EventStream, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if is_csv(path) {
        write_csv(stream, path)
    } else {
        write_binary(stream, path)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_line_maps_fields() {
        let s = parse_csv("1000,10,20,1\n".as_bytes()).unwrap();
        assert_eq!(s.events(), &[Event::new(1000, 10, 20, Polarity::On)]);
    }

    #[test]
    fn csv_empty_file_is_empty_stream() {
        let s = parse_csv("".as_bytes()).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.geometry(), SensorGeometry::default());
    }

    #[test]
    fn csv_header_and_geometry_comment() {
        let s = parse_csv("# geometry 32x16\nt_us,x,y,p\n5,31,15,-1\n".as_bytes()).unwrap();
        assert_eq!(s.geometry(), SensorGeometry::new(32, 16).unwrap());
        assert_eq!(s.events()[0].polarity, Polarity::Off);
    }

    #[test]
    fn csv_ordering_violation() {
        let err = parse_csv("5,1,1,1\n4,1,1,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Ordering { index: 1, .. }));
    }

    #[test]
    fn csv_parse_error_carries_line_number() {
        let err = parse_csv("t,x,y,p\n1,2,3,1\n2,abc,3,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_csv("1,2,3,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn csv_out_of_bounds() {
        let err = parse_csv("1,640,0,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { .. }));
    }

    #[test]
    fn binary_round_trip_three_events() {
        let s = EventStream::new(
            SensorGeometry::default(),
            vec![
                Event::new(1, 0, 0, Polarity::On),
                Event::new(2, 639, 479, Polarity::Off),
                Event::new(u64::MAX, 5, 6, Polarity::On),
            ],
        )
        .unwrap();
        let bytes = encode_binary(&s);
        assert_eq!(bytes.len(), HEADER_LEN + 3 * RECORD_LEN);
        let back = decode_binary(&bytes).unwrap();
        assert_eq!(back, s);
        assert_eq!(encode_binary(&back), bytes);
    }

    #[test]
    fn binary_header_only() {
        let mut b = MAGIC.to_vec();
        b.extend_from_slice(&100u16.to_le_bytes());
        b.extend_from_slice(&50u16.to_le_bytes());
        let s = decode_binary(&b).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.geometry(), SensorGeometry::new(100, 50).unwrap());
    }

    #[test]
    fn binary_errors() {
        assert!(matches!(decode_binary(b"XXXXXXXXXXXX"), Err(Error::BadMagic)));
        let s = EventStream::new(SensorGeometry::default(), vec![Event::new(1, 1, 1, Polarity::On)]).unwrap();
        let b = encode_binary(&s);
        assert!(matches!(decode_binary(&b[..b.len() - 1]), Err(Error::Truncated(_))));
        assert!(matches!(decode_binary(&b[..10]), Err(Error::Truncated(_))));
        let mut oob = b.clone();
        oob[HEADER_LEN + 8..HEADER_LEN + 10].copy_from_slice(&700u16.to_le_bytes());
        assert!(matches!(decode_binary(&oob), Err(Error::OutOfBounds { .. })));
    }
}
