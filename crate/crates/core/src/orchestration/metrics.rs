use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

/// One line of `metrics.ndjson`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub wall_seconds: f64,
    pub episodes: u64,
    pub solve_rate: f64,
    pub expansions_p25: Option<f64>,
    pub expansions_p50: Option<f64>,
    pub expansions_p75: Option<f64>,
    pub learner_loss: Option<f64>,
    pub learner_steps: u64,
    pub buffer_fill: f64,
    pub checkpoint_id: Option<usize>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[u64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(sorted[lo] as f64 * (1.0 - frac) + sorted[hi] as f64 * frac)
}

pub(crate) struct MetricsLog {
    out: BufWriter<File>,
    last: f64,
}

impl MetricsLog {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        Ok(MetricsLog {
            out: BufWriter::new(File::create(path)?),
            last: f64::NEG_INFINITY,
        })
    }

    pub fn write(&mut self, mut rec: MetricsRecord) -> std::io::Result<()> {
        // timestamps never go backwards
        rec.wall_seconds = rec.wall_seconds.max(self.last);
        self.last = rec.wall_seconds;
        serde_json::to_writer(&mut self.out, &rec)?;
        self.out.write_all(b"\n")?;
        self.out.flush()
    }
}
