//! Trajectory text format: one row per frame,
//! `frame_id,timestamp,x,y[,z],traversal_dist`, with a header row.
//!
//! Floats are written in Rust's shortest round-trip representation, so a
//! parsed file rewrites to identical bytes.

use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{Frame, Position, Sequence, SequenceRole};

const HEADER_2D: &str = "frame_id,timestamp,x,y,traversal_dist";
const HEADER_3D: &str = "frame_id,timestamp,x,y,z,traversal_dist";

/// Renders a sequence as trajectory text. The z column is included only
/// when some frame has a nonzero z.
pub fn write_trajectory(seq: &Sequence) -> String {
    let has_z = seq.frames().iter().any(|f| f.pose.z != 0.0);
    let mut out = String::new();
    out.push_str(if has_z { HEADER_3D } else { HEADER_2D });
    out.push('\n');
    for f in seq.frames() {
        if has_z {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                f.frame_id, f.timestamp, f.pose.x, f.pose.y, f.pose.z, f.traversal_dist
            ));
        } else {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                f.frame_id, f.timestamp, f.pose.x, f.pose.y, f.traversal_dist
            ));
        }
    }
    out
}

/// Parses trajectory text into a sequence of descriptor-less frames,
/// enforcing the frame invariants.
pub fn read_trajectory(text: &str, role: SequenceRole) -> Result<Sequence> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("trajectory file is empty".into()))?;
    let has_z = match header {
        HEADER_2D => false,
        HEADER_3D => true,
        other => {
            return Err(Error::Format(format!(
                "unrecognized trajectory header '{other}'"
            )))
        }
    };
    let expected = if has_z { 6 } else { 5 };
    let mut frames = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected {
            return Err(Error::Format(format!(
                "trajectory row {} has {} fields, expected {}",
                lineno + 2,
                fields.len(),
                expected
            )));
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| {
                Error::Format(format!(
                    "trajectory row {}: cannot parse {what} '{s}'",
                    lineno + 2
                ))
            })
        };
        let frame_id: usize = fields[0].parse().map_err(|_| {
            Error::Format(format!(
                "trajectory row {}: cannot parse frame_id '{}'",
                lineno + 2,
                fields[0]
            ))
        })?;
        let timestamp = parse_f(fields[1], "timestamp")?;
        let x = parse_f(fields[2], "x")?;
        let y = parse_f(fields[3], "y")?;
        let (z, trav_idx) = if has_z {
            (parse_f(fields[4], "z")?, 5)
        } else {
            (0.0, 4)
        };
        let traversal_dist = parse_f(fields[trav_idx], "traversal_dist")?;
        frames.push(Frame {
            frame_id,
            timestamp,
            pose: Position::new3d(x, y, z),
            traversal_dist,
            descriptor: None,
        });
    }
    Sequence::new(frames, role)
}

pub fn save_trajectory(path: &Path, seq: &Sequence) -> Result<()> {
    Ok(std::fs::write(path, write_trajectory(seq))?)
}

pub fn load_trajectory(path: &Path, role: SequenceRole) -> Result<Sequence> {
    let text = std::fs::read_to_string(path)?;
    read_trajectory(&text, role)
}
