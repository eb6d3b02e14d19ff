//! Per-run time series of oracle calls versus true objective value.

use crate::subsolver::Branch;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// Outer iteration (SCR) or step (first-order methods); 0 is the start point.
    pub iter: u64,
    pub total_oracle_calls: u64,
    pub true_f: f64,
    /// Algorithm-specific scalar: the model decrease for SCR.
    pub extra: Option<f64>,
    pub branch: Option<Branch>,
}

/// Non-fatal events worth surfacing in run summaries.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    /// The final solver hit its iteration cap at the given outer iteration.
    FinalSolverCapExhausted { iter: u64, gradient_norm: f64 },
    /// The iterate became non-finite; the run stopped.
    Diverged { iter: u64 },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub events: Vec<TraceEvent>,
}

impl RunTrace {
    pub fn push(&mut self, record: TraceRecord) {
        debug_assert!(
            self.records.last().is_none_or(|r| r.total_oracle_calls < record.total_oracle_calls),
            "oracle calls must strictly increase"
        );
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last_calls(&self) -> u64 {
        self.records.last().map_or(0, |r| r.total_oracle_calls)
    }

    pub fn diverged(&self) -> bool {
        self.events.iter().any(|e| matches!(e, TraceEvent::Diverged { .. }))
    }

    /// Uniform decimation to at most `max_rows` records, keeping the first
    /// and last.
    pub fn thinned(&self, max_rows: usize) -> Vec<TraceRecord> {
        let n = self.records.len();
        if n <= max_rows || max_rows < 2 {
            return self.records.clone();
        }
        let mut out = Vec::with_capacity(max_rows);
        let mut last = usize::MAX;
        for k in 0..max_rows {
            // Integer arithmetic keeps the index sequence exact and monotone.
            let idx = ((k as u128 * (n as u128 - 1)) / (max_rows as u128 - 1)) as usize;
            if idx != last {
                out.push(self.records[idx]);
                last = idx;
            }
        }
        out
    }
}
