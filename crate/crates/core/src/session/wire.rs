//! Text messages and length-prefixed framing for the live service.
//!
//! Each frame is a big-endian `u32` byte count followed by that many bytes
//! of UTF-8. Message bodies:
//!
//! ```text
//! client → server   HIP t x y z
//! server → client   MODEL n            then n lines: id x y z E
//!                   STATE t px py pz contact fmag fx fy fz stale
//!                   [PATCH k           then k lines: id x y z]
//!                   ERROR message
//! ```
//!
//! `contact` and `stale` are `0` or `1`. Numbers use the shortest
//! representation that parses back to the same `f64`.

use std::fmt::Write as _;
use std::io::{self, Read, Write};

use crate::model::PointCloudModel;
use crate::Vec3;

/// Frames larger than this are rejected.
pub const MAX_FRAME_BYTES: usize = 64 << 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("protocol error: {0}")]
pub struct ProtocolError(pub String);

pub fn write_frame<W: Write>(out: &mut W, body: &str) -> io::Result<()> {
    let len = u32::try_from(body.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    out.write_all(&len.to_be_bytes())?;
    out.write_all(body.as_bytes())?;
    out.flush()
}

/// Reads one frame; `Ok(None)` on a clean end of stream.
pub fn read_frame<R: Read>(input: &mut R) -> io::Result<Option<String>> {
    let mut len = [0u8; 4];
    match input.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame of {len} bytes exceeds limit")));
    }
    let mut body = vec![0u8; len];
    input.read_exact(&mut body)?;
    String::from_utf8(body).map(Some).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HipUpdate {
    pub t: f64,
    pub hip: Vec3,
}

/// What the server sends after each HIP message.
#[derive(Debug, Clone, PartialEq)]
pub struct StateUpdate {
    pub t: f64,
    pub proxy: Vec3,
    pub in_contact: bool,
    pub force_magnitude: f64,
    /// Zero when out of contact.
    pub force_direction: Vec3,
    /// The attached (or last sent) deformation is older than this contact.
    pub stale: bool,
    pub patch: Option<Vec<(usize, Vec3)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ServerMessage {
    Model(Vec<(usize, Vec3, f64)>),
    State(StateUpdate),
    Error(String),
}

fn numbers<const N: usize>(words: &[&str]) -> Result<[f64; N], ProtocolError> {
    if words.len() != N {
        return Err(ProtocolError(format!("expected {N} numbers, found {}", words.len())));
    }
    let mut out = [0.0f64; N];
    for (slot, w) in out.iter_mut().zip(words) {
        *slot = w.parse().map_err(|_| ProtocolError(format!("bad number `{w}`")))?;
        if !slot.is_finite() {
            return Err(ProtocolError(format!("non-finite number `{w}`")));
        }
    }
    Ok(out)
}

fn flag(word: &str) -> Result<bool, ProtocolError> {
    match word {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(ProtocolError(format!("expected 0 or 1, found `{other}`"))),
    }
}

pub fn parse_hip(body: &str) -> Result<HipUpdate, ProtocolError> {
    let words: Vec<&str> = body.split_whitespace().collect();
    match words.split_first() {
        Some((&"HIP", rest)) => {
            let [t, x, y, z] = numbers::<4>(rest)?;
            Ok(HipUpdate { t, hip: Vec3::new(x, y, z) })
        }
        Some((other, _)) => Err(ProtocolError(format!("unknown message `{other}`"))),
        None => Err(ProtocolError("empty message".into())),
    }
}

pub fn encode_hip(update: &HipUpdate) -> String {
    let h = update.hip;
    format!("HIP {} {} {} {}", update.t, h.x, h.y, h.z)
}

pub fn encode_model(model: &PointCloudModel) -> String {
    let mut s = format!("MODEL {}", model.len());
    for (id, p) in model.points().iter().enumerate() {
        let q = p.position;
        let _ = write!(s, "\n{id} {} {} {} {}", q.x, q.y, q.z, p.elastic_modulus);
    }
    s
}

pub fn encode_state(update: &StateUpdate) -> String {
    let (p, d) = (update.proxy, update.force_direction);
    let mut s = format!(
        "STATE {} {} {} {} {} {} {} {} {} {}",
        update.t,
        p.x,
        p.y,
        p.z,
        update.in_contact as u8,
        update.force_magnitude,
        d.x,
        d.y,
        d.z,
        update.stale as u8
    );
    if let Some(patch) = &update.patch {
        let _ = write!(s, "\nPATCH {}", patch.len());
        for (id, q) in patch {
            let _ = write!(s, "\n{id} {} {} {}", q.x, q.y, q.z);
        }
    }
    s
}

pub fn encode_error(message: &str) -> String {
    format!("ERROR {}", message.replace('\n', " "))
}

fn parse_count(word: Option<&str>, what: &str) -> Result<usize, ProtocolError> {
    word.and_then(|w| w.parse().ok()).ok_or_else(|| ProtocolError(format!("missing {what} count")))
}

/// Parses any server message (used by clients and tests).
pub fn parse_server(body: &str) -> Result<ServerMessage, ProtocolError> {
    let mut lines = body.split('\n');
    let head = lines.next().unwrap_or("");
    let words: Vec<&str> = head.split_whitespace().collect();
    match words.first().copied() {
        Some("MODEL") => {
            let n = parse_count(words.get(1).copied(), "MODEL")?;
            let mut points = Vec::with_capacity(n);
            for _ in 0..n {
                let line = lines.next().ok_or_else(|| ProtocolError("truncated MODEL".into()))?;
                let w: Vec<&str> = line.split_whitespace().collect();
                let id = w.first().and_then(|s| s.parse().ok()).ok_or_else(|| ProtocolError("bad point id".into()))?;
                let [x, y, z, e] = numbers::<4>(&w[1..])?;
                points.push((id, Vec3::new(x, y, z), e));
            }
            Ok(ServerMessage::Model(points))
        }
        Some("STATE") => {
            if words.len() != 11 {
                return Err(ProtocolError(format!("STATE needs 10 fields, found {}", words.len() - 1)));
            }
            let [t, px, py, pz] = numbers::<4>(&words[1..5])?;
            let in_contact = flag(words[5])?;
            let [fmag, fx, fy, fz] = numbers::<4>(&words[6..10])?;
            let stale = flag(words[10])?;
            let patch = match lines.next() {
                None => None,
                Some(line) => {
                    let w: Vec<&str> = line.split_whitespace().collect();
                    if w.first() != Some(&"PATCH") {
                        return Err(ProtocolError(format!("expected PATCH, found `{line}`")));
                    }
                    let k = parse_count(w.get(1).copied(), "PATCH")?;
                    let mut pts = Vec::with_capacity(k);
                    for _ in 0..k {
                        let line = lines.next().ok_or_else(|| ProtocolError("truncated PATCH".into()))?;
                        let w: Vec<&str> = line.split_whitespace().collect();
                        let id = w.first().and_then(|s| s.parse().ok()).ok_or_else(|| ProtocolError("bad point id".into()))?;
                        let [x, y, z] = numbers::<3>(&w[1..])?;
                        pts.push((id, Vec3::new(x, y, z)));
                    }
                    Some(pts)
                }
            };
            Ok(ServerMessage::State(StateUpdate {
                t,
                proxy: Vec3::new(px, py, pz),
                in_contact,
                force_magnitude: fmag,
                force_direction: Vec3::new(fx, fy, fz),
                stale,
                patch,
            }))
        }
        Some("ERROR") => Ok(ServerMessage::Error(head.trim_start()["ERROR".len()..].trim().to_string())),
        Some(other) => Err(ProtocolError(format!("unknown message `{other}`"))),
        None => Err(ProtocolError("empty message".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MaterialPoint;

    #[test]
    fn hip_round_trip_and_errors() {
        let h = HipUpdate { t: 0.25, hip: Vec3::new(0.1, -2.0, 1e-9) };
        assert_eq!(parse_hip(&encode_hip(&h)).unwrap(), h);
        assert!(parse_hip("HIP 1 2 3").is_err());
        assert!(parse_hip("HOP 1 2 3 4").is_err());
        assert!(parse_hip("HIP 1 2 x 4").is_err());
        assert!(parse_hip("HIP 1 2 NaN 4").is_err());
        assert!(parse_hip("").is_err());
    }

    #[test]
    fn state_round_trip() {
        let s = StateUpdate {
            t: 1.5,
            proxy: Vec3::new(0.1, 0.2, 0.3),
            in_contact: true,
            force_magnitude: 0.123456789012345,
            force_direction: Vec3::new(0.0, 1.0, 0.0),
            stale: false,
            patch: Some(vec![(3, Vec3::new(1.0, 2.0, 3.0)), (9, Vec3::new(-0.5, 0.0, 1.0 / 3.0))]),
        };
        let text = encode_state(&s);
        assert!(text.starts_with("STATE 1.5 0.1 0.2 0.3 1 0.123456789012345 0 1 0 0\nPATCH 2\n3 1 2 3\n"));
        assert_eq!(parse_server(&text).unwrap(), ServerMessage::State(s.clone()));
        let bare = StateUpdate { patch: None, ..s };
        assert_eq!(parse_server(&encode_state(&bare)).unwrap(), ServerMessage::State(bare));
    }

    #[test]
    fn model_and_error_messages() {
        let m = PointCloudModel::new(
            vec![MaterialPoint::new(Vec3::new(0.5, 0.0, -1.0), 20.0), MaterialPoint::new(Vec3::zeros(), 7.5)],
            0.2,
        )
        .unwrap();
        let text = encode_model(&m);
        assert_eq!(text, "MODEL 2\n0 0.5 0 -1 20\n1 0 0 0 7.5");
        match parse_server(&text).unwrap() {
            ServerMessage::Model(p) => assert_eq!(p[1], (1, Vec3::zeros(), 7.5)),
            other => panic!("{other:?}"),
        }
        assert_eq!(parse_server(&encode_error("bad\nthing")).unwrap(), ServerMessage::Error("bad thing".into()));
    }

    #[test]
    fn framing() {
        let mut buf = Vec::new();
        write_frame(&mut buf, "HIP 0 0 0 0").unwrap();
        write_frame(&mut buf, "").unwrap();
        assert_eq!(&buf[..4], &[0, 0, 0, 11]);
        let mut r = &buf[..];
        assert_eq!(read_frame(&mut r).unwrap().as_deref(), Some("HIP 0 0 0 0"));
        assert_eq!(read_frame(&mut r).unwrap().as_deref(), Some(""));
        assert_eq!(read_frame(&mut r).unwrap(), None);
        let huge = (MAX_FRAME_BYTES as u32 + 1).to_be_bytes();
        assert!(read_frame(&mut &huge[..]).is_err());
        let truncated = [0u8, 0, 0, 5, b'H'];
        assert!(read_frame(&mut &truncated[..]).is_err());
    }
}
