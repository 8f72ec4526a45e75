//! ASCII wire protocol for streaming frames from an acquisition board.
//!
//! Grammar, bit-exact:
//!
//! ```text
//! $F,<seq>,<mq2>,<mq135>,<mq3>,<tgs2610>,<tgs2611>,<hum>,<temp>*<HH>\n
//! ```
//!
//! `<seq>` is a decimal unsigned 32-bit counter, each channel a decimal
//! float with exactly 3 fraction digits, and `<HH>` two uppercase hex digits
//! of the XOR of every byte strictly between `$` and `*`. Lines end with a
//! single LF.
//!
//! The stream reader reassembles lines across arbitrary fragment boundaries,
//! skips corrupt lines with a counted notice instead of aborting — field
//! acquisition has to survive line noise — and reports sequence gaps.

use std::fmt;
use std::io::Read;

use thiserror::Error;

use crate::data::{SensorFrame, CHANNEL_COUNT};

/// One transport frame: sequence number, payload, verified checksum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireFrame {
    pub seq: u32,
    pub frame: SensorFrame,
    pub checksum: u8,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum WireParseError {
    #[error("bad prefix (expected \"$F,\"): {line:?}")]
    BadPrefix { line: String },
    #[error("bad field count (expected 9, found {found}): {line:?}")]
    BadFieldCount { found: usize, line: String },
    #[error("bad number in field {field}: {line:?}")]
    BadNumber { field: usize, line: String },
    #[error("bad checksum (expected {expected:02X}, found {found}): {line:?}")]
    BadChecksum {
        expected: u8,
        found: String,
        line: String,
    },
}

fn xor_checksum(payload: &[u8]) -> u8 {
    payload.iter().fold(0, |acc, b| acc ^ b)
}

/// Render one frame as a wire line, LF terminator included.
///
/// Cannot fail: [`SensorFrame`] construction already guarantees finite
/// channels.
pub fn serialize_frame(seq: u32, frame: &SensorFrame) -> String {
    let mut payload = format!("F,{seq}");
    for v in frame.channels() {
        debug_assert!(v.is_finite());
        payload.push_str(&format!(",{v:.3}"));
    }
    let checksum = xor_checksum(payload.as_bytes());
    format!("${payload}*{checksum:02X}\n")
}

fn lossy(line: &[u8]) -> String {
    String::from_utf8_lossy(line).into_owned()
}

/// Parse one line (with or without its trailing LF) against the full
/// grammar, checksum first.
pub fn parse_frame(line: &[u8]) -> Result<WireFrame, WireParseError> {
    let line = line.strip_suffix(b"\n").unwrap_or(line);
    let body = line
        .strip_prefix(b"$")
        .ok_or_else(|| WireParseError::BadPrefix { line: lossy(line) })?;
    // split at the checksum marker
    let star = body
        .iter()
        .position(|&b| b == b'*')
        .ok_or_else(|| WireParseError::BadChecksum {
            expected: 0,
            found: "<missing '*'>".to_string(),
            line: lossy(line),
        })?;
    let (payload, after) = body.split_at(star);
    let hex = &after[1..];
    let expected = xor_checksum(payload);
    let checksum_err = |found: String| WireParseError::BadChecksum {
        expected,
        found,
        line: lossy(line),
    };
    if hex.len() != 2 || !hex.iter().all(|b| b.is_ascii_digit() || (b'A'..=b'F').contains(b)) {
        return Err(checksum_err(lossy(hex)));
    }
    let found = u8::from_str_radix(std::str::from_utf8(hex).expect("ascii"), 16)
        .expect("two hex digits");
    if found != expected {
        return Err(checksum_err(format!("{found:02X}")));
    }

    let fields: Vec<&[u8]> = payload.split(|&b| b == b',').collect();
    if fields[0] != b"F" {
        return Err(WireParseError::BadPrefix { line: lossy(line) });
    }
    if fields.len() != 2 + CHANNEL_COUNT {
        return Err(WireParseError::BadFieldCount {
            found: fields.len(),
            line: lossy(line),
        });
    }
    let seq = parse_seq(fields[1]).ok_or_else(|| WireParseError::BadNumber {
        field: 1,
        line: lossy(line),
    })?;
    let mut channels = [0.0; CHANNEL_COUNT];
    for (c, field) in fields[2..].iter().enumerate() {
        channels[c] = parse_channel(field).ok_or_else(|| WireParseError::BadNumber {
            field: c + 2,
            line: lossy(line),
        })?;
    }
    let frame = SensorFrame::new(channels).expect("finite by construction");
    Ok(WireFrame {
        seq,
        frame,
        checksum: expected,
    })
}

// strict decimal unsigned: digits only, fits in u32
fn parse_seq(field: &[u8]) -> Option<u32> {
    if field.is_empty() || !field.iter().all(|b| b.is_ascii_digit()) {
        return None;
    }
    std::str::from_utf8(field).ok()?.parse().ok()
}

// strict channel float: optional '-', digits, '.', exactly 3 fraction digits
fn parse_channel(field: &[u8]) -> Option<f64> {
    let digits = field.strip_prefix(b"-").unwrap_or(field);
    let dot = digits.iter().position(|&b| b == b'.')?;
    if dot == 0 || digits.len() != dot + 4 {
        return None;
    }
    if !digits[..dot].iter().all(|b| b.is_ascii_digit())
        || !digits[dot + 1..].iter().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let value: f64 = std::str::from_utf8(field).ok()?.parse().ok()?;
    value.is_finite().then_some(value)
}

/// What the stream reader hands back per reassembled line.
#[derive(Debug, Clone, PartialEq)]
pub enum StreamEvent {
    Frame(WireFrame),
    /// A corrupt line was dropped; the stream continues.
    Skipped { line: String, error: WireParseError },
    /// The sequence jumped forward; `missing` frames were never seen.
    Gap {
        from_seq: u32,
        to_seq: u32,
        missing: u32,
    },
}

impl fmt::Display for StreamEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamEvent::Frame(frame) => write!(f, "frame seq={}", frame.seq),
            StreamEvent::Skipped { error, .. } => write!(f, "skipped line: {error}"),
            StreamEvent::Gap {
                from_seq,
                to_seq,
                missing,
            } => write!(f, "sequence gap: {missing} missing between {from_seq} and {to_seq}"),
        }
    }
}

/// Incremental line reassembler over arbitrarily fragmented byte chunks.
///
/// Single consumer; feed chunks with [`push`](StreamReader::push) and call
/// [`finish`](StreamReader::finish) at end of source. Empty lines are
/// ignored; anything else that fails to parse becomes a
/// [`StreamEvent::Skipped`].
#[derive(Debug, Default)]
pub struct StreamReader {
    buffer: Vec<u8>,
    last_seq: Option<u32>,
    frames: u64,
    skipped: u64,
    gaps: u64,
    missing: u64,
}

impl StreamReader {
    pub fn new() -> StreamReader {
        StreamReader::default()
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn gaps(&self) -> u64 {
        self.gaps
    }

    pub fn missing(&self) -> u64 {
        self.missing
    }

    /// Feed one chunk; returns the events completed by it.
    pub fn push(&mut self, chunk: &[u8]) -> Vec<StreamEvent> {
        self.buffer.extend_from_slice(chunk);
        let mut events = Vec::new();
        let mut start = 0;
        while let Some(offset) = self.buffer[start..].iter().position(|&b| b == b'\n') {
            let end = start + offset;
            self.line(&self.buffer[start..end].to_vec(), &mut events);
            start = end + 1;
        }
        self.buffer.drain(..start);
        events
    }

    /// Flush at end of source. A non-empty trailing partial line is a
    /// truncated frame and is reported as skipped.
    pub fn finish(&mut self) -> Vec<StreamEvent> {
        let mut events = Vec::new();
        if !self.buffer.is_empty() {
            let line = std::mem::take(&mut self.buffer);
            self.line(&line, &mut events);
        }
        events
    }

    fn line(&mut self, line: &[u8], events: &mut Vec<StreamEvent>) {
        if line.is_empty() {
            return;
        }
        match parse_frame(line) {
            Ok(frame) => {
                if let Some(last) = self.last_seq {
                    if frame.seq > last + 1 {
                        let missing = frame.seq - last - 1;
                        self.gaps += 1;
                        self.missing += missing as u64;
                        events.push(StreamEvent::Gap {
                            from_seq: last,
                            to_seq: frame.seq,
                            missing,
                        });
                    }
                }
                self.last_seq = Some(frame.seq);
                self.frames += 1;
                events.push(StreamEvent::Frame(frame));
            }
            Err(error) => {
                self.skipped += 1;
                events.push(StreamEvent::Skipped {
                    line: lossy(line),
                    error,
                });
            }
        }
    }

    /// Drain an entire byte source into its event sequence.
    pub fn read_all<R: Read>(mut source: R) -> std::io::Result<Vec<StreamEvent>> {
        let mut reader = StreamReader::new();
        let mut events = Vec::new();
        let mut chunk = [0u8; 4096];
        loop {
            let n = source.read(&mut chunk)?;
            if n == 0 {
                break;
            }
            events.extend(reader.push(&chunk[..n]));
        }
        events.extend(reader.finish());
        Ok(events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frame(values: [f64; 7]) -> SensorFrame {
        SensorFrame::new(values).unwrap()
    }

    #[test]
    fn zero_frame_serializes_with_xor_checksum() {
        let line = serialize_frame(0, &frame([0.0; 7]));
        // byte-level oracle: recompute the XOR independently
        let payload = "F,0,0.000,0.000,0.000,0.000,0.000,0.000,0.000";
        let mut cs = 0u8;
        for b in payload.bytes() {
            cs ^= b;
        }
        assert_eq!(line, format!("${payload}*{cs:02X}\n"));
    }

    #[test]
    fn round_trip_preserves_values_at_three_decimals() {
        let original = frame([1.2345, -9.8765, 100.5, 0.0004, 55.5555, 48.2, 24.75]);
        let line = serialize_frame(12345, &original);
        let parsed = parse_frame(line.as_bytes()).unwrap();
        assert_eq!(parsed.seq, 12345);
        for (a, b) in parsed.frame.channels().iter().zip(original.channels()) {
            assert!((a - b).abs() <= 5.0005e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn max_sequence_number_is_accepted() {
        let line = serialize_frame(u32::MAX, &frame([1.0; 7]));
        assert_eq!(parse_frame(line.as_bytes()).unwrap().seq, u32::MAX);
    }

    #[test]
    fn six_channel_line_is_a_field_count_error() {
        // valid checksum over an invalid payload: structural error surfaces
        let payload = "F,1,1.000,2.000,3.000,4.000,5.000,6.000";
        let line = format!("${payload}*{:02X}\n", xor_checksum(payload.as_bytes()));
        assert!(matches!(
            parse_frame(line.as_bytes()).unwrap_err(),
            WireParseError::BadFieldCount { found: 8, .. }
        ));
    }

    #[test]
    fn flipped_checksum_digit_is_rejected() {
        let line = serialize_frame(7, &frame([3.5; 7]));
        let mut corrupted = line.clone().into_bytes();
        let star = corrupted.iter().position(|&b| b == b'*').unwrap();
        corrupted[star + 1] = if corrupted[star + 1] == b'0' { b'1' } else { b'0' };
        assert!(matches!(
            parse_frame(&corrupted).unwrap_err(),
            WireParseError::BadChecksum { .. }
        ));
    }

    #[test]
    fn prefix_and_number_errors_are_distinct() {
        assert!(matches!(
            parse_frame(b"garbage").unwrap_err(),
            WireParseError::BadPrefix { .. }
        ));
        // seq field with a sign: strict grammar wants bare digits
        let payload = "F,+1,1.000,2.000,3.000,4.000,5.000,6.000,7.000";
        let line = format!("${payload}*{:02X}", xor_checksum(payload.as_bytes()));
        assert!(matches!(
            parse_frame(line.as_bytes()).unwrap_err(),
            WireParseError::BadNumber { field: 1, .. }
        ));
        // channel with two fraction digits
        let payload = "F,1,1.00,2.000,3.000,4.000,5.000,6.000,7.000";
        let line = format!("${payload}*{:02X}", xor_checksum(payload.as_bytes()));
        assert!(matches!(
            parse_frame(line.as_bytes()).unwrap_err(),
            WireParseError::BadNumber { field: 2, .. }
        ));
    }

    #[test]
    fn single_byte_payload_mutations_never_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let line = serialize_frame(4242, &frame([12.345, 0.001, 99.999, 5.0, 7.25, 51.3, 24.9]));
        let bytes = line.as_bytes();
        let star = bytes.iter().position(|&b| b == b'*').unwrap();
        for _ in 0..2000 {
            let index = rng.random_range(1..star);
            let mut mutated = bytes.to_vec();
            let replacement = loop {
                let candidate: u8 = rng.random_range(0..=255);
                if candidate != mutated[index] {
                    break candidate;
                }
            };
            mutated[index] = replacement;
            assert!(
                parse_frame(&mutated).is_err(),
                "mutation at {index} to {replacement:#04x} was accepted"
            );
        }
    }

    #[test]
    fn frames_split_across_chunks_are_reassembled() {
        let a = serialize_frame(0, &frame([1.0; 7]));
        let b = serialize_frame(1, &frame([2.0; 7]));
        let stream = format!("{a}{b}");
        let bytes = stream.as_bytes();
        let mut reader = StreamReader::new();
        let mut events = Vec::new();
        // three chunks, cutting both lines mid-frame
        events.extend(reader.push(&bytes[..10]));
        events.extend(reader.push(&bytes[10..bytes.len() - 7]));
        events.extend(reader.push(&bytes[bytes.len() - 7..]));
        events.extend(reader.finish());
        assert_eq!(events.len(), 2);
        assert!(matches!(&events[0], StreamEvent::Frame(f) if f.seq == 0));
        assert!(matches!(&events[1], StreamEvent::Frame(f) if f.seq == 1));
    }

    #[test]
    fn garbage_between_frames_is_skipped_not_fatal() {
        let stream = format!(
            "{}\x07\x7fnoise on the line\n{}",
            serialize_frame(0, &frame([1.0; 7])),
            serialize_frame(1, &frame([2.0; 7]))
        );
        let mut reader = StreamReader::new();
        let mut events = reader.push(stream.as_bytes());
        events.extend(reader.finish());
        let frames = events
            .iter()
            .filter(|e| matches!(e, StreamEvent::Frame(_)))
            .count();
        let skips = events
            .iter()
            .filter(|e| matches!(e, StreamEvent::Skipped { .. }))
            .count();
        assert_eq!((frames, skips), (2, 1));
        assert_eq!(reader.frames(), 2);
        assert_eq!(reader.skipped(), 1);
    }

    #[test]
    fn sequence_gaps_are_reported() {
        let stream = format!(
            "{}{}",
            serialize_frame(5, &frame([1.0; 7])),
            serialize_frame(7, &frame([2.0; 7]))
        );
        let mut reader = StreamReader::new();
        let events = reader.push(stream.as_bytes());
        assert_eq!(events.len(), 3);
        assert!(matches!(
            events[1],
            StreamEvent::Gap {
                from_seq: 5,
                to_seq: 7,
                missing: 1
            }
        ));
        assert_eq!(reader.missing(), 1);
    }

    #[test]
    fn trailing_partial_line_is_reported_at_finish() {
        let mut reader = StreamReader::new();
        let full = serialize_frame(0, &frame([1.0; 7]));
        let mut events = reader.push(full.as_bytes());
        events.extend(reader.push(b"$F,1,0.000"));
        assert_eq!(events.len(), 1);
        let tail = reader.finish();
        assert_eq!(tail.len(), 1);
        assert!(matches!(tail[0], StreamEvent::Skipped { .. }));
    }

    proptest! {
        #[test]
        fn round_trip_property(
            seq in any::<u32>(),
            values in proptest::array::uniform7(-1000.0f64..1000.0)
        ) {
            let original = frame(values);
            let parsed = parse_frame(serialize_frame(seq, &original).as_bytes()).unwrap();
            prop_assert_eq!(parsed.seq, seq);
            for (a, b) in parsed.frame.channels().iter().zip(original.channels()) {
                prop_assert!((a - b).abs() <= 5.0005e-4);
            }
        }

        #[test]
        fn rechunking_does_not_change_events(cuts in proptest::collection::vec(0usize..2000, 0..12)) {
            let mut stream = String::new();
            for seq in 0..20u32 {
                stream.push_str(&serialize_frame(seq * 2, &frame([seq as f64; 7])));
            }
            stream.push_str("interference\n");
            stream.push_str(&serialize_frame(100, &frame([1.5; 7])));
            let bytes = stream.as_bytes();

            let mut canonical = StreamReader::new();
            let mut expected = canonical.push(bytes);
            expected.extend(canonical.finish());

            let mut boundaries: Vec<usize> = cuts.iter().map(|c| c % bytes.len()).collect();
            boundaries.sort_unstable();
            boundaries.dedup();
            let mut reader = StreamReader::new();
            let mut events = Vec::new();
            let mut start = 0;
            for b in boundaries {
                events.extend(reader.push(&bytes[start..b]));
                start = b;
            }
            events.extend(reader.push(&bytes[start..]));
            events.extend(reader.finish());
            prop_assert_eq!(events, expected);
        }
    }
}
