//! Versioned CSV and JSON output.
//!
//! Every CSV starts with a `# schema: <name>/v<version>` line followed by a
//! header row. Reals are written as `{:.16e}` (17 significant digits), so
//! they round-trip exactly and golden files can be compared byte for byte.
//! Missing values are empty cells.

use std::io::Write;

use serde::Serialize;

use crate::engine::{EventKind, StepOutcome};
use crate::error::Result;
use crate::experiments::{DriftCurve, EscapeStats, SStarDecay};
use crate::state::{horizontal_momentum, kinetic_energy, PhaseState};

pub const SCHEMA_VERSION: u32 = 1;

pub const ESCAPE_SCAN: &str = "escape-scan";
pub const DRIFT: &str = "drift";
pub const SSTAR_DECAY: &str = "sstar-decay";
pub const EVENT_LOG: &str = "event-log";

pub fn real(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.16e}")
    }
}

fn opt_real(x: Option<f64>) -> String {
    x.map_or_else(String::new, real)
}

fn csv_writer<W: Write>(mut w: W, schema: &str, header: &[&str]) -> Result<csv::Writer<W>> {
    writeln!(w, "# schema: {schema}/v{SCHEMA_VERSION}")?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

/// One row per λ.
pub fn write_escape_csv<W: Write>(w: W, stats: &[EscapeStats]) -> Result<()> {
    let mut out = csv_writer(
        w,
        ESCAPE_SCAN,
        &[
            "lambda",
            "mean_tau",
            "stderr",
            "censored",
            "n_samples",
            "n_uncensored",
            "anomalies",
        ],
    )?;
    for s in stats {
        out.write_record([
            real(s.lambda),
            real(s.mean_tau),
            real(s.stderr),
            s.censored_count.to_string(),
            s.n_samples.to_string(),
            s.n_uncensored.to_string(),
            s.anomalies.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One row per bin; empty bins have blank means.
pub fn write_drift_csv<W: Write>(w: W, curve: &DriftCurve) -> Result<()> {
    let mut out = csv_writer(w, DRIFT, &["bin_center", "mean_du", "stderr", "count"])?;
    for (((u, m), se), n) in curve
        .bin_centers()
        .iter()
        .zip(&curve.mean_du)
        .zip(&curve.stderr)
        .zip(&curve.counts)
    {
        out.write_record([real(*u), real(*m), real(*se), n.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// One row per disk–disk collision.
pub fn write_sstar_csv<W: Write>(w: W, decay: &SStarDecay) -> Result<()> {
    let mut out = csv_writer(w, SSTAR_DECAY, &["collision", "m", "parity", "log_dv", "log_ell"])?;
    for r in &decay.rows {
        let parity = serde_json::to_value(r.parity)?;
        out.write_record([
            r.collision.to_string(),
            r.m.to_string(),
            parity.as_str().unwrap_or_default().to_string(),
            opt_real(r.log_dv),
            opt_real(r.log_ell),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Streaming per-event log.
pub struct EventLog<W: Write> {
    out: csv::Writer<W>,
}

impl<W: Write> EventLog<W> {
    pub fn new(w: W) -> Result<Self> {
        let out = csv_writer(
            w,
            EVENT_LOG,
            &[
                "event",
                "time",
                "kind",
                "i",
                "j",
                "wall",
                "image",
                "energy",
                "momentum_x",
            ],
        )?;
        Ok(Self { out })
    }

    /// Logs the collision that produced `state`.
    pub fn record(&mut self, state: &PhaseState, outcome: &StepOutcome) -> Result<()> {
        let (kind, i, j, wall, image) = match outcome.event.kind {
            EventKind::Wall { disk, wall } => ("wall", disk, String::new(), wall.k().to_string(), String::new()),
            EventKind::Pair { i, j, image } => ("pair", i, j.to_string(), String::new(), image.to_string()),
        };
        self.out.write_record([
            state.collisions.to_string(),
            real(outcome.event.time),
            kind.to_string(),
            i.to_string(),
            j,
            wall,
            image,
            real(kinetic_energy(state)),
            real(horizontal_momentum(state)),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'a str,
    schema_version: u32,
    data: &'a T,
}

/// Pretty JSON with a schema name and version around `data`.
pub fn json_report<T: Serialize>(schema: &str, data: &T) -> Result<String> {
    let env = Envelope {
        schema,
        schema_version: SCHEMA_VERSION,
        data,
    };
    let mut text = serde_json::to_string_pretty(&env)?;
    text.push('\n');
    Ok(text)
}
