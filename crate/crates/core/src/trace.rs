//! Regret traces shared by every strategy, with a columnar text format.
//!
//! ```text
//! # bead trace v1
//! # strategy = <name>
//! # dim = <d>
//! # <key> = <value>                                            (metadata, repeated)
//! # refine = <queries so far> <old depth> <survivors> <new active size>   (repeated)
//! step x0 .. x{d-1} y instant_regret cumulative_regret depth active
//! 1 0.5 0.83 0.02 0.02 0 1
//! ```
//!
//! Strategies without a partition write depth 0 and active size 0.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::kernel::Point;

pub const TRACE_HEADER: &str = "# bead trace v1";

/// Slack for negative instant regret caused by the argmax grid.
pub const REGRET_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RefineEvent {
    /// Number of queries issued before the refinement.
    pub query_index: usize,
    pub old_depth: u32,
    pub survivors: usize,
    pub new_active: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegretTrace {
    pub strategy: String,
    pub dim: usize,
    /// Extra `# key = value` header lines, such as run configuration.
    pub metadata: Vec<(String, String)>,
    pub queried_points: Vec<Point>,
    pub observations: Vec<f64>,
    pub instant_regret: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub depths: Vec<u32>,
    pub active_sizes: Vec<usize>,
    pub refine_events: Vec<RefineEvent>,
}

impl RegretTrace {
    pub fn new(strategy: &str, dim: usize) -> Self {
        Self {
            strategy: strategy.to_string(),
            dim,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.queried_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queried_points.is_empty()
    }

    pub fn push(&mut self, x: Point, y: f64, regret: f64, depth: u32, active: usize) {
        let total = self.cumulative.last().copied().unwrap_or(0.0) + regret;
        self.queried_points.push(x);
        self.observations.push(y);
        self.instant_regret.push(regret);
        self.cumulative.push(total);
        self.depths.push(depth);
        self.active_sizes.push(active);
    }

    /// Cumulative regret after all queries.
    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Checks nonnegative instant regret and a nondecreasing cumulative sum.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.len();
        if [self.observations.len(), self.instant_regret.len(), self.cumulative.len(), self.depths.len(), self.active_sizes.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(Error::Contract("trace columns differ in length".into()));
        }
        for (t, r) in self.instant_regret.iter().enumerate() {
            if *r < -REGRET_SLACK {
                return Err(Error::Contract(format!("negative instant regret {r} at step {}", t + 1)));
            }
        }
        if self.cumulative.windows(2).any(|w| w[1] < w[0] - REGRET_SLACK) {
            return Err(Error::Contract("cumulative regret decreases".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{TRACE_HEADER}");
        let _ = writeln!(s, "# strategy = {}", self.strategy);
        let _ = writeln!(s, "# dim = {}", self.dim);
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "# {k} = {v}");
        }
        for e in &self.refine_events {
            let _ = writeln!(s, "# refine = {} {} {} {}", e.query_index, e.old_depth, e.survivors, e.new_active);
        }
        s.push_str("step");
        for a in 0..self.dim {
            let _ = write!(s, " x{a}");
        }
        s.push_str(" y instant_regret cumulative_regret depth active\n");
        for t in 0..self.len() {
            let _ = write!(s, "{}", t + 1);
            for v in &self.queried_points[t] {
                let _ = write!(s, " {v}");
            }
            let _ = writeln!(
                s,
                " {} {} {} {} {}",
                self.observations[t], self.instant_regret[t], self.cumulative[t], self.depths[t], self.active_sizes[t]
            );
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == TRACE_HEADER => {}
            _ => return Err(Error::parse(1, "missing trace header")),
        }
        let mut trace = RegretTrace::default();
        let mut have_dim = false;
        let mut have_columns = false;
        for (i, raw) in lines {
            let line = i + 1;
            let body = raw.trim();
            if body.is_empty() {
                continue;
            }
            if let Some(meta) = body.strip_prefix('#') {
                let (key, value) = meta
                    .split_once('=')
                    .ok_or_else(|| Error::parse(line, "expected `# key = value`"))?;
                let value = value.trim();
                match key.trim() {
                    "strategy" => trace.strategy = value.to_string(),
                    "dim" => {
                        trace.dim = value.parse().map_err(|e| Error::parse(line, format!("{e}")))?;
                        have_dim = true;
                    }
                    "refine" => {
                        let v: Vec<u64> = value
                            .split_whitespace()
                            .map(|t| t.parse().map_err(|e| Error::parse(line, format!("{e}"))))
                            .collect::<Result<_>>()?;
                        if v.len() != 4 {
                            return Err(Error::parse(line, "refine needs four integers"));
                        }
                        trace.refine_events.push(RefineEvent {
                            query_index: v[0] as usize,
                            old_depth: v[1] as u32,
                            survivors: v[2] as usize,
                            new_active: v[3] as usize,
                        });
                    }
                    other => trace.metadata.push((other.to_string(), value.to_string())),
                }
                continue;
            }
            if !have_columns {
                if !body.starts_with("step") {
                    return Err(Error::parse(line, "missing column header"));
                }
                have_columns = true;
                continue;
            }
            if !have_dim {
                return Err(Error::parse(line, "dimension must precede data rows"));
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            let d = trace.dim;
            if fields.len() != d + 6 {
                return Err(Error::parse(line, format!("expected {} columns, found {}", d + 6, fields.len())));
            }
            let real = |t: &str| t.parse::<f64>().map_err(|e| Error::parse(line, format!("bad number {t:?}: {e}")));
            let x: Point = fields[1..=d].iter().map(|t| real(t)).collect::<Result<_>>()?;
            trace.queried_points.push(x);
            trace.observations.push(real(fields[d + 1])?);
            trace.instant_regret.push(real(fields[d + 2])?);
            trace.cumulative.push(real(fields[d + 3])?);
            trace
                .depths
                .push(fields[d + 4].parse().map_err(|e| Error::parse(line, format!("{e}")))?);
            trace
                .active_sizes
                .push(fields[d + 5].parse().map_err(|e| Error::parse(line, format!("{e}")))?);
        }
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut t = RegretTrace::new("bead", 2);
        t.metadata.push(("seed".into(), "7".into()));
        t.push(vec![0.5, 0.25], 0.1 + 0.2, 1.0 / 3.0, 0, 1);
        t.push(vec![0.75, 0.125], -1e-300, 0.0, 1, 2);
        t.refine_events.push(RefineEvent { query_index: 1, old_depth: 0, survivors: 1, new_active: 2 });
        let text = t.to_text();
        let back = RegretTrace::parse(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_text(), text);
        assert!(t.check_invariants().is_ok());
    }

    #[test]
    fn rejects_malformed() {
        assert!(RegretTrace::parse("nope").is_err());
        let bad = format!("{TRACE_HEADER}\n# dim = 1\nstep x0 y instant_regret cumulative_regret depth active\n1 0.5 1\n");
        assert!(matches!(RegretTrace::parse(&bad), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn negative_regret_is_flagged() {
        let mut t = RegretTrace::new("x", 1);
        t.push(vec![0.5], 0.0, -1e-6, 0, 0);
        assert!(t.check_invariants().is_err());
    }
}
