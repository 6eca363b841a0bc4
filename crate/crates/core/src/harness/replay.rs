//! Replay files: a header with the session config, then one TickFrame per line.

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use crate::channel::{transcript_hash, TickFrame};
use crate::learners::ReplayLearner;
use crate::session::{Session, SessionConfig, SessionError, SessionReport};

pub const MAGIC: &str = "# kindergarten replay v1";

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("transcript diverges at tick {tick}: recorded {recorded}, replayed {replayed}")]
    Divergence { tick: u64, recorded: String, replayed: String },
    #[error("recorded hash {recorded} but frames hash to {computed}")]
    HashMismatch { recorded: String, computed: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub config: SessionConfig,
    pub frames: Vec<TickFrame>,
    /// Present when the writer finished cleanly.
    pub hash: Option<String>,
}

pub fn write(w: &mut impl Write, config: &SessionConfig, frames: &[TickFrame]) -> io::Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "# config {}", serde_json::to_string(config).map_err(io::Error::other)?)?;
    for f in frames {
        writeln!(w, "{}", f.to_line())?;
    }
    writeln!(w, "# hash {}", transcript_hash(frames))
}

pub fn save(path: &Path, config: &SessionConfig, frames: &[TickFrame]) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    write(&mut f, config, frames)?;
    f.flush()
}

pub fn read(r: impl io::Read) -> Result<Recording, ReplayError> {
    let mut config = None;
    let mut frames = Vec::new();
    let mut hash = None;
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let n = i + 1;
        let bad = |message: String| ReplayError::Format { line: n, message };
        if n == 1 {
            if line != MAGIC {
                return Err(bad(format!("expected {MAGIC:?}")));
            }
            continue;
        }
        if let Some(json) = line.strip_prefix("# config ") {
            config = Some(serde_json::from_str(json).map_err(|e| bad(e.to_string()))?);
        } else if let Some(h) = line.strip_prefix("# hash ") {
            hash = Some(h.trim().to_string());
        } else if line.starts_with('#') || line.is_empty() {
            continue;
        } else {
            // a torn last line is a truncation, not a format error
            match TickFrame::from_line(&line) {
                Ok(f) => frames.push(f),
                Err(_) if hash.is_none() => break,
                Err(e) => return Err(bad(e)),
            }
        }
    }
    let config = config.ok_or(ReplayError::Format { line: 2, message: "missing config header".into() })?;
    Ok(Recording { config, frames, hash })
}

pub fn load(path: &Path) -> Result<Recording, ReplayError> {
    read(fs::File::open(path)?)
}

/// Re-run a recording's learner outputs through a fresh session.
///
/// Returns the reconstructed report, or the first tick at which the
/// recorded and re-simulated streams disagree.
pub fn replay(rec: &Recording) -> Result<SessionReport, ReplayError> {
    if let Some(h) = &rec.hash {
        let computed = transcript_hash(&rec.frames);
        if *h != computed {
            return Err(ReplayError::HashMismatch { recorded: h.clone(), computed });
        }
    }
    let learner = ReplayLearner::new(rec.frames.iter().map(|f| f.output));
    let mut session = Session::new(rec.config.clone(), Box::new(learner))?;
    let report = session.run();
    let n = session.frames.len().max(rec.frames.len());
    for i in 0..n {
        let (a, b) = (rec.frames.get(i), session.frames.get(i));
        if a != b {
            let show = |f: Option<&TickFrame>| f.map_or("end of file".to_string(), |f| f.to_line());
            return Err(ReplayError::Divergence { tick: i as u64, recorded: show(a), replayed: show(b) });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::RandomLearner;

    fn recorded() -> (SessionConfig, Vec<TickFrame>, SessionReport) {
        let cfg = SessionConfig::new(9, 600);
        let mut s = Session::new(cfg.clone(), Box::new(RandomLearner::new(9))).unwrap();
        let r = s.run();
        (cfg, s.frames, r)
    }

    #[test]
    fn roundtrip_reproduces_report() {
        let (cfg, frames, report) = recorded();
        let mut buf = Vec::new();
        write(&mut buf, &cfg, &frames).unwrap();
        let rec = read(&buf[..]).unwrap();
        assert_eq!(rec.frames, frames);
        let again = replay(&rec).unwrap();
        assert_eq!(again.deterministic(), report.deterministic());
    }

    #[test]
    fn truncation_reports_divergence_point() {
        let (cfg, frames, _) = recorded();
        let mut buf = Vec::new();
        write(&mut buf, &cfg, &frames).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // cut mid-way through the line for tick 300
        let cut = text.find("\n300\t").unwrap() + 3;
        let rec = read(text[..cut].as_bytes()).unwrap();
        assert_eq!(rec.frames.len(), 300);
        match replay(&rec) {
            Err(ReplayError::Divergence { tick, .. }) => assert_eq!(tick, 300),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tampered_frame_is_caught() {
        let (cfg, frames, _) = recorded();
        let mut buf = Vec::new();
        write(&mut buf, &cfg, &frames).unwrap();
        let text = String::from_utf8(buf).unwrap().replacen("\n5\t", "\n6\t", 1);
        assert!(matches!(replay(&read(text.as_bytes()).unwrap()), Err(ReplayError::HashMismatch { .. })));
    }
}
