use std::fmt::Write as _;
use std::io;
use std::path::Path;

use super::Segment;

/// Accepted steps of one integration together with their interpolants.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    samples: Vec<(f64, [f64; N])>,
    segments: Vec<Segment<N>>,
    pub field_id: String,
}

impl<const N: usize> Trajectory<N> {
    pub(crate) fn start(t0: f64, y0: [f64; N]) -> Self {
        Trajectory {
            samples: vec![(t0, y0)],
            segments: Vec::new(),
            field_id: String::new(),
        }
    }

    pub(crate) fn push(&mut self, seg: Segment<N>, t: f64, y: [f64; N]) {
        self.segments.push(seg);
        self.samples.push((t, y));
    }

    /// Final step cut short at an event; the interpolant is kept whole but
    /// only used up to `t`.
    pub(crate) fn push_partial(&mut self, seg: Segment<N>, t: f64, y: [f64; N]) {
        if t > self.last().0 {
            self.push(seg, t, y);
        }
    }

    pub fn with_field_id(mut self, id: impl Into<String>) -> Self {
        self.field_id = id.into();
        self
    }

    pub fn samples(&self) -> &[(f64, [f64; N])] {
        &self.samples
    }

    pub fn segments(&self) -> &[Segment<N>] {
        &self.segments
    }

    pub fn last(&self) -> (f64, [f64; N]) {
        *self
            .samples
            .last()
            .expect("trajectory has an initial sample")
    }

    pub fn t_span(&self) -> (f64, f64) {
        (self.samples[0].0, self.last().0)
    }

    /// Dense-output state at `t`, or `None` outside the integrated span.
    pub fn interpolate(&self, t: f64) -> Option<[f64; N]> {
        let (t0, t1) = self.t_span();
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        if !(lo..=hi).contains(&t) {
            return None;
        }
        if self.segments.is_empty() {
            return Some(self.samples[0].1);
        }
        let forward = t1 >= t0;
        // samples[i + 1].0 closes segment i
        let idx =
            self.samples[1..].partition_point(|(ts, _)| if forward { *ts < t } else { *ts > t });
        let idx = idx.min(self.segments.len() - 1);
        Some(self.segments[idx].at(t))
    }
}

impl Trajectory<4> {
    /// CSV with header `t,a,b,z,eps`, one row per accepted step.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,a,b,z,eps\n");
        for (t, y) in &self.samples {
            let _ = writeln!(out, "{:?},{:?},{:?},{:?},{:?}", t, y[0], y[1], y[2], y[3]);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}
