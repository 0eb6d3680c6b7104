//! PASS/FAIL bookkeeping. Every check keeps its worst sample, measured as
//! the ratio of value to limit, so a failure can name where it happened.

use std::io::{self, Write};

#[derive(Debug, Clone)]
struct Worst {
    ratio: f64,
    value: f64,
    limit: f64,
    at: String,
}

#[derive(Debug, Clone)]
struct Check {
    name: String,
    what: String,
    count: usize,
    failures: usize,
    worst: Option<Worst>,
}

#[derive(Debug, Clone)]
pub struct Summary {
    command: &'static str,
    checks: Vec<Check>,
    notes: Vec<String>,
}

impl Summary {
    pub fn new(command: &'static str) -> Self {
        Self { command, checks: Vec::new(), notes: Vec::new() }
    }

    /// Declares a check so that it reports FAIL when nothing was measured.
    pub fn expect(&mut self, name: &str, what: &str) {
        if !self.checks.iter().any(|c| c.name == name) {
            self.checks.push(Check { name: name.into(), what: what.into(), count: 0, failures: 0, worst: None });
        }
    }

    /// Records `value <= limit` for the check `name` at the location `at`.
    pub fn record(&mut self, name: &str, value: f64, limit: f64, at: &str) {
        self.expect(name, name);
        let check = self.checks.iter_mut().find(|c| c.name == name).expect("declared");
        check.count += 1;
        let ok = value <= limit;
        if !ok {
            check.failures += 1;
        }
        let ratio = if limit > 0.0 {
            value / limit
        } else if value <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        // NaN counts as the worst possible value.
        let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
        if check.worst.as_ref().is_none_or(|w| ratio > w.ratio) {
            check.worst = Some(Worst { ratio, value, limit, at: at.into() });
        }
    }

    /// As [`record`](Self::record) for a value already aggregated over
    /// `samples` samples.
    pub fn record_aggregate(&mut self, name: &str, value: f64, limit: f64, at: &str, samples: usize) {
        self.record(name, value, limit, at);
        let check = self.checks.iter_mut().find(|c| c.name == name).expect("declared");
        check.count = check.count - 1 + samples;
        if check.failures > 0 {
            check.failures = samples;
        }
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.count > 0 && c.failures == 0)
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out: Vec<String> = self.notes.iter().map(|n| format!("{}: {n}", self.command)).collect();
        for c in &self.checks {
            let line = match &c.worst {
                None => format!("FAIL {} {}: nothing to check", self.command, c.name),
                Some(w) if c.failures == 0 => format!(
                    "PASS {} {}: {} samples, worst {} {:.3e} <= {:.3e} at {}",
                    self.command, c.name, c.count, c.what, w.value, w.limit, w.at
                ),
                Some(w) => format!(
                    "FAIL {} {}: {} of {} samples exceed the tolerance, worst {} {:.3e} > {:.3e} at {}",
                    self.command, c.name, c.failures, c.count, c.what, w.value, w.limit, w.at
                ),
            };
            out.push(line);
        }
        out
    }

    pub fn print(&self, w: &mut impl Write) -> io::Result<()> {
        for line in self.lines() {
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}
