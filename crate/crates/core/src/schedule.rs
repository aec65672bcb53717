//! Piecewise-linear annealing schedules `A(s)`, `B(s)` over the anneal
//! fraction `s` in `[0, 1]`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The shipped approximate schedule, `s,A_GHz,B_GHz`.
pub const DEFAULT_SCHEDULE_CSV: &str = include_str!("../data/dw1-approx.csv");

/// Name under which the default schedule is reported in output metadata.
pub const DEFAULT_SCHEDULE_NAME: &str = "dw1-approx";

/// One knot of the schedule. Energies in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub s: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    knots: Vec<Knot>,
}

impl AnnealSchedule {
    /// Builds a schedule with the monotonicity check enabled
    /// (`A` non-increasing, `B` non-decreasing).
    pub fn new(knots: Vec<Knot>) -> Result<Self> {
        Self::with_monotonicity(knots, true)
    }

    pub fn with_monotonicity(knots: Vec<Knot>, require_monotone: bool) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Schedule("need at least two knots".into()));
        }
        if knots[0].s != 0.0 || knots[knots.len() - 1].s != 1.0 {
            return Err(Error::Schedule(
                "first knot must be s=0 and last s=1".into(),
            ));
        }
        for k in &knots {
            if !(k.s.is_finite() && k.a.is_finite() && k.b.is_finite()) {
                return Err(Error::Schedule("non-finite value".into()));
            }
            if k.a < 0.0 || k.b < 0.0 {
                return Err(Error::Schedule(format!("negative A or B at s={}", k.s)));
            }
        }
        for w in knots.windows(2) {
            if w[1].s <= w[0].s {
                return Err(Error::Schedule(format!(
                    "s must be strictly increasing ({} then {})",
                    w[0].s, w[1].s
                )));
            }
            if require_monotone && (w[1].a > w[0].a || w[1].b < w[0].b) {
                return Err(Error::Schedule(format!(
                    "A must not increase and B must not decrease (between s={} and s={})",
                    w[0].s, w[1].s
                )));
            }
        }
        Ok(AnnealSchedule { knots })
    }

    /// Linear ramp from `(a0, b0)` at `s=0` to `(a1, b1)` at `s=1`.
    pub fn linear(a0: f64, b0: f64, a1: f64, b1: f64) -> Result<Self> {
        Self::with_monotonicity(
            vec![
                Knot {
                    s: 0.0,
                    a: a0,
                    b: b0,
                },
                Knot {
                    s: 1.0,
                    a: a1,
                    b: b1,
                },
            ],
            false,
        )
    }

    pub fn default_schedule() -> Self {
        Self::parse_csv(DEFAULT_SCHEDULE_CSV, Path::new(DEFAULT_SCHEDULE_NAME), true)
            .expect("shipped schedule is valid")
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    /// Same `B`, transverse field forced to zero everywhere.
    pub fn without_transverse(&self) -> Self {
        AnnealSchedule {
            knots: self.knots.iter().map(|k| Knot { a: 0.0, ..*k }).collect(),
        }
    }

    /// `(A, B)` at fraction `s`, exact at knots.
    pub fn evaluate(&self, s: f64) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::FractionOutOfRange(s));
        }
        Ok(self.eval_unchecked(s))
    }

    pub(crate) fn eval_unchecked(&self, s: f64) -> (f64, f64) {
        let idx = self.knots.partition_point(|k| k.s <= s);
        if idx == 0 {
            let k = self.knots[0];
            return (k.a, k.b);
        }
        if idx == self.knots.len() {
            let k = self.knots[idx - 1];
            return (k.a, k.b);
        }
        let (lo, hi) = (self.knots[idx - 1], self.knots[idx]);
        if s == lo.s {
            return (lo.a, lo.b);
        }
        let w = (s - lo.s) / (hi.s - lo.s);
        (lo.a + w * (hi.a - lo.a), lo.b + w * (hi.b - lo.b))
    }

    /// Fraction where `A(s) = B(s)`, found by bisection to `|A - B| < 1e-9`.
    pub fn crossing_point(&self) -> Result<f64> {
        let diff = |s: f64| {
            let (a, b) = self.eval_unchecked(s);
            a - b
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        if !(diff(lo) > 0.0 && diff(hi) < 0.0) {
            return Err(Error::NoCrossing);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let d = diff(mid);
            if d.abs() < 1e-9 {
                return Ok(mid);
            }
            if d > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn parse_csv(text: &str, origin: &Path, require_monotone: bool) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut knots = Vec::new();
        let mut saw_header = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !saw_header {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols != ["s", "A_GHz", "B_GHz"] {
                    return Err(err(idx + 1, "header must be `s,A_GHz,B_GHz`".into()));
                }
                saw_header = true;
                continue;
            }
            let vals = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| err(idx + 1, e.to_string()))?;
            if vals.len() != 3 {
                return Err(err(
                    idx + 1,
                    format!("expected 3 columns, got {}", vals.len()),
                ));
            }
            knots.push(Knot {
                s: vals[0],
                a: vals[1],
                b: vals[2],
            });
        }
        if !saw_header {
            return Err(err(0, "missing header".into()));
        }
        Self::with_monotonicity(knots, require_monotone)
    }

    pub fn read_csv(path: impl AsRef<Path>, require_monotone: bool) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, path, require_monotone)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,A_GHz,B_GHz\n");
        for k in &self.knots {
            let _ = writeln!(out, "{},{},{}", k.s, k.a, k.b);
        }
        out
    }
}

/// Anneal fraction of step `k` out of `steps`: `k / (steps - 1)`, and 0 for
/// a single-step run.
pub fn step_fraction(k: usize, steps: usize) -> f64 {
    if steps <= 1 {
        0.0
    } else {
        k as f64 / (steps - 1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_midpoint_and_knots() {
        let sched = AnnealSchedule::linear(5.0, 0.0, 0.0, 5.0).unwrap();
        assert_eq!(sched.evaluate(0.5).unwrap(), (2.5, 2.5));
        assert_eq!(sched.evaluate(0.0).unwrap(), (5.0, 0.0));
        assert_eq!(sched.evaluate(1.0).unwrap(), (0.0, 5.0));
        assert!(matches!(
            sched.evaluate(1.5),
            Err(Error::FractionOutOfRange(_))
        ));
        assert!(sched.evaluate(-0.1).is_err());
    }

    #[test]
    fn default_schedule_shape() {
        let sched = AnnealSchedule::default_schedule();
        assert_eq!(sched.evaluate(1.0).unwrap().0, 0.0);
        let first = sched.knots()[0];
        assert_eq!(sched.evaluate(0.0).unwrap(), (first.a, first.b));
        for k in sched.knots() {
            assert_eq!(sched.evaluate(k.s).unwrap(), (k.a, k.b));
        }
        let cross = sched.crossing_point().unwrap();
        assert!((0.25..0.35).contains(&cross), "{cross}");
    }

    #[test]
    fn crossing_points() {
        let s = AnnealSchedule::linear(5.0, 0.0, 0.0, 5.0).unwrap();
        assert!((s.crossing_point().unwrap() - 0.5).abs() < 1e-9);
        let s = AnnealSchedule::linear(4.0, 0.0, 0.0, 12.0).unwrap();
        assert!((s.crossing_point().unwrap() - 0.25).abs() < 1e-9);
        let flat = AnnealSchedule::linear(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(flat.crossing_point(), Err(Error::NoCrossing)));
    }

    #[test]
    fn continuity_and_monotonicity_on_grid() {
        let sched = AnnealSchedule::default_schedule();
        let n = 20_000;
        let mut prev = sched.evaluate(0.0).unwrap();
        for k in 1..=n {
            let cur = sched.evaluate(k as f64 / n as f64).unwrap();
            assert!(cur.0 <= prev.0 && cur.1 >= prev.1);
            assert!((cur.0 - prev.0).abs() < 1e-2 && (cur.1 - prev.1).abs() < 1e-2);
            prev = cur;
        }
        let eps = 1e-12;
        let (a0, b0) = sched.evaluate(0.37).unwrap();
        let (a1, b1) = sched.evaluate(0.37 + eps).unwrap();
        assert!((a1 - a0).abs() < 1e-9 && (b1 - b0).abs() < 1e-9);
    }

    #[test]
    fn validation() {
        let k = |s, a, b| Knot { s, a, b };
        assert!(AnnealSchedule::new(vec![k(0.0, 1.0, 0.0)]).is_err());
        assert!(AnnealSchedule::new(vec![k(0.1, 1.0, 0.0), k(1.0, 0.0, 1.0)]).is_err());
        assert!(
            AnnealSchedule::new(vec![k(0.0, 1.0, 0.0), k(0.0, 1.0, 0.0), k(1.0, 0.0, 1.0)])
                .is_err()
        );
        assert!(AnnealSchedule::new(vec![k(0.0, 1.0, 0.0), k(1.0, 2.0, 1.0)]).is_err());
        assert!(
            AnnealSchedule::with_monotonicity(vec![k(0.0, 1.0, 0.0), k(1.0, 2.0, 1.0)], false)
                .is_ok()
        );
        assert!(AnnealSchedule::new(vec![k(0.0, -1.0, 0.0), k(1.0, -2.0, 1.0)]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let sched = AnnealSchedule::default_schedule();
        let again = AnnealSchedule::parse_csv(&sched.to_csv(), Path::new("x"), true).unwrap();
        assert_eq!(sched, again);
        assert!(AnnealSchedule::parse_csv("s,A,B\n0,1,0\n1,0,1\n", Path::new("x"), true).is_err());
    }

    #[test]
    fn step_fractions() {
        assert_eq!(step_fraction(0, 1), 0.0);
        assert_eq!(step_fraction(0, 5), 0.0);
        assert_eq!(step_fraction(4, 5), 1.0);
        assert_eq!(step_fraction(2, 5), 0.5);
    }
}
