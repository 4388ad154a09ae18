//! Surprise-frame file formats: JSON lines (one canonical frame per line)
//! and a flat CSV.

use std::io::{self, BufRead, Write};

use atlas_core::SurpriseFrame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum FrameFormat {
    #[default]
    Jsonl,
    Csv,
}

pub fn write_jsonl<W: Write>(frames: &[SurpriseFrame], mut out: W) -> io::Result<()> {
    for frame in frames {
        out.write_all(crate::canonical::to_string(frame).as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_jsonl<R: BufRead>(input: R) -> io::Result<Vec<SurpriseFrame>> {
    input
        .lines()
        .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
        .map(|line| serde_json::from_str(&line?).map_err(io::Error::from))
        .collect()
}

/// `date,metric,fips,observed,expected,surprise,signed`, one row per entry.
pub fn write_csv<W: Write>(frames: &[SurpriseFrame], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "metric", "fips", "observed", "expected", "surprise", "signed"])?;
    for frame in frames {
        let date = frame.date.to_string();
        for e in &frame.entries {
            w.write_record([
                date.as_str(),
                frame.metric.name(),
                &e.fips.to_string(),
                &e.observed.to_string(),
                &e.expected.to_string(),
                &e.surprise.to_string(),
                &e.signed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The `/surprise` response body: a canonical JSON array of frames.
pub fn to_json_array(frames: &[SurpriseFrame]) -> String {
    crate::canonical::to_string(frames)
}
