//! 15-minute power profiles on disk: `timestamp_iso8601,power_kw`.
//!
//! Files store consumption as positive numbers, as meter exports do; load
//! profiles are negated on ingestion so that power into the node bus is
//! positive everywhere inside the simulator.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Duration, FixedOffset};

use crate::domain::{PowerProfile, ProfileKind};
use crate::error::{Error, Result};

pub const PROFILE_HEADER: [&str; 2] = ["timestamp_iso8601", "power_kw"];

const SLOT_MINUTES: i64 = 15;

/// A validated profile plus the timestamp of its first sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedProfile {
    pub start: DateTime<FixedOffset>,
    pub profile: PowerProfile,
}

pub fn read_profile<R: Read>(
    reader: R,
    label: &str,
    node_id: &str,
    kind: ProfileKind,
) -> Result<TimedProfile> {
    let err = |row: usize, message: String| Error::Csv {
        path: label.to_string(),
        row,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != PROFILE_HEADER {
        return Err(err(
            1,
            format!("expected header {:?}, found {:?}", PROFILE_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }

    let step = Duration::minutes(SLOT_MINUTES);
    let mut start: Option<DateTime<FixedOffset>> = None;
    let mut prev: Option<DateTime<FixedOffset>> = None;
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        // line 1 is the header
        let row = i + 2;
        let rec = rec.map_err(|e| err(row, e.to_string()))?;
        if rec.len() != 2 {
            return Err(err(row, format!("expected 2 fields, found {}", rec.len())));
        }
        let ts = DateTime::parse_from_rfc3339(rec[0].trim())
            .map_err(|e| err(row, format!("bad timestamp {:?}: {e}", &rec[0])))?;
        let v: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| err(row, format!("bad power value {:?}", &rec[1])))?;
        if !v.is_finite() {
            return Err(err(row, format!("non-finite power {v}")));
        }
        if v < 0.0 {
            let what = match kind {
                ProfileKind::Generation => "negative generation",
                ProfileKind::Load => "negative consumption",
            };
            return Err(err(row, format!("{what} {v} kW")));
        }
        if let Some(p) = prev {
            let delta = ts - p;
            if delta == Duration::zero() {
                return Err(err(row, format!("duplicate timestamp {}", ts.to_rfc3339())));
            }
            if delta < Duration::zero() {
                return Err(err(row, format!("timestamp {} goes backwards", ts.to_rfc3339())));
            }
            if delta != step {
                if delta.num_seconds() % step.num_seconds() == 0 {
                    return Err(err(
                        row,
                        format!("gap: missing timestamp {} before {}", (p + step).to_rfc3339(), ts.to_rfc3339()),
                    ));
                }
                return Err(err(
                    row,
                    format!("spacing of {} s is not 15 minutes", delta.num_seconds()),
                ));
            }
        }
        start.get_or_insert(ts);
        prev = Some(ts);
        values.push(match kind {
            ProfileKind::Generation => v,
            ProfileKind::Load => -v,
        });
    }
    let start = start.ok_or_else(|| err(1, "profile has no samples".into()))?;
    Ok(TimedProfile {
        start,
        profile: PowerProfile::new(node_id, kind, 0, values)?,
    })
}

pub fn load_profile(path: impl AsRef<Path>, node_id: &str, kind: ProfileKind) -> Result<TimedProfile> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_profile(file, &path.display().to_string(), node_id, kind)
}

/// Writes samples in file convention (consumption positive).
pub fn write_profile<W: Write>(
    mut w: W,
    start: DateTime<FixedOffset>,
    kind: ProfileKind,
    values: &[f64],
) -> std::io::Result<()> {
    writeln!(w, "{}", PROFILE_HEADER.join(","))?;
    for (i, &v) in values.iter().enumerate() {
        let ts = start + Duration::minutes(SLOT_MINUTES * i as i64);
        let v = match kind {
            ProfileKind::Generation => v,
            ProfileKind::Load => -v,
        };
        // `+ 0.0` turns a negated zero into a plain zero
        writeln!(w, "{},{}", ts.to_rfc3339(), v + 0.0)?;
    }
    Ok(())
}
