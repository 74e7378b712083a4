// SPDX-License-Identifier: Apache-2.0

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instrument::TimeTagStream;

/// Photon counts summed over shots in equal bins [t0 + k·w, t0 + (k+1)·w).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    bin_width: f64,
    t0: f64,
    counts: Vec<u64>,
    shot_count: u64,
}

impl Histogram {
    pub fn new(bin_width: f64, t0: f64, counts: Vec<u64>, shot_count: u64) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::Precondition(format!("bin width must be > 0, got {bin_width}")));
        }
        if !t0.is_finite() {
            return Err(Error::Precondition("histogram start must be finite".into()));
        }
        Ok(Self { bin_width, t0, counts, shot_count })
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn shot_count(&self) -> u64 {
        self.shot_count
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn bin_start(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.bin_width
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        self.t0 + (k as f64 + 0.5) * self.bin_width
    }

    pub fn end(&self) -> f64 {
        self.bin_start(self.counts.len())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bin index containing `t` under the left-closed rule, if in range.
    pub fn bin_of(&self, t: f64) -> Option<usize> {
        bin_index(self.t0, self.bin_width, self.counts.len(), t)
    }

    /// Indices of bins whose centres lie in [a, b).
    pub fn bins_between(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let n = self.counts.len();
        let first = (0..n).find(|&k| self.bin_center(k) >= a).unwrap_or(n);
        let last = (first..n).find(|&k| self.bin_center(k) >= b).unwrap_or(n);
        first..last
    }

    /// Same bin edges and length.
    pub fn same_grid(&self, other: &Histogram) -> bool {
        self.counts.len() == other.counts.len()
            && (self.bin_width - other.bin_width).abs() <= 1e-12 * self.bin_width
            && (self.t0 - other.t0).abs() <= 1e-9 * self.bin_width
    }

    /// Counts per shot.
    pub fn normalized(&self) -> Vec<f64> {
        let n = self.shot_count.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "bin_width_us,t0_us,shot_count")?;
        writeln!(w, "{:e},{:e},{}", self.bin_width, self.t0, self.shot_count)?;
        writeln!(w, "bin_start_us,count")?;
        for (k, c) in self.counts.iter().enumerate() {
            writeln!(w, "{:.9e},{c}", self.bin_start(k))?;
        }
        Ok(())
    }

    /// Parses the format written by [`Self::write_csv`]. Lines starting with
    /// `#` are skipped. Errors name the offending line.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('#')));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, Ok(s))) => Ok((n, s)),
                Some((n, Err(e))) => Err(Error::Precondition(format!("line {n}: {e}"))),
                None => Err(Error::Precondition(format!("unexpected end of file, expected {what}"))),
            }
        };
        let (n, header) = next("header")?;
        if header.trim() != "bin_width_us,t0_us,shot_count" {
            return Err(Error::Precondition(format!("line {n}: expected header 'bin_width_us,t0_us,shot_count'")));
        }
        let (n, meta) = next("histogram parameters")?;
        let fields: Vec<&str> = meta.split(',').map(str::trim).collect();
        let bad = |n: usize, msg: &str| Error::Precondition(format!("line {n}: {msg}"));
        if fields.len() != 3 {
            return Err(bad(n, "expected bin_width_us,t0_us,shot_count values"));
        }
        let bin_width: f64 = fields[0].parse().map_err(|_| bad(n, "invalid bin width"))?;
        let t0: f64 = fields[1].parse().map_err(|_| bad(n, "invalid t0"))?;
        let shot_count: u64 = fields[2].parse().map_err(|_| bad(n, "invalid shot count"))?;
        let (n, cols) = next("bin header")?;
        if cols.trim() != "bin_start_us,count" {
            return Err(bad(n, "expected header 'bin_start_us,count'"));
        }
        let mut counts = Vec::new();
        for (n, line) in lines {
            let line = line.map_err(|e| Error::Precondition(format!("line {n}: {e}")))?;
            let (start, count) = line.split_once(',').ok_or_else(|| bad(n, "expected 'bin_start_us,count'"))?;
            let start: f64 = start.trim().parse().map_err(|_| bad(n, "invalid bin start"))?;
            let count: u64 = count.trim().parse().map_err(|_| bad(n, "count must be a non-negative integer"))?;
            let want = t0 + counts.len() as f64 * bin_width;
            if (start - want).abs() > 1e-6 * bin_width {
                return Err(bad(n, &format!("bin start {start} does not continue the grid (expected {want})")));
            }
            counts.push(count);
        }
        Histogram::new(bin_width, t0, counts, shot_count)
    }
}

fn bin_index(t0: f64, w: f64, n: usize, t: f64) -> Option<usize> {
    if !(t >= t0) {
        return None;
    }
    let edge = |k: usize| t0 + k as f64 * w;
    let mut k = ((t - t0) / w).floor() as usize;
    // Correct rounding so that t = edge(k) always lands in bin k.
    if k > 0 && t < edge(k) {
        k -= 1;
    } else if t >= edge(k + 1) {
        k += 1;
    }
    (k < n).then_some(k)
}

/// Bins arbitrary times into `[t0, t1)`; the bin count is (t1 − t0)/w,
/// rounded up unless it is within 1e-9 of an integer.
pub fn bin_times<I: IntoIterator<Item = f64>>(times: I, shot_count: u64, bin_width: f64, range: (f64, f64)) -> Result<Histogram> {
    let (t0, t1) = range;
    if !(bin_width > 0.0) {
        return Err(Error::Precondition(format!("bin width must be > 0, got {bin_width}")));
    }
    if !(t1 > t0) {
        return Err(Error::Precondition(format!("empty histogram range [{t0}, {t1})")));
    }
    let ratio = (t1 - t0) / bin_width;
    let n = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) { ratio.round() } else { ratio.ceil() } as usize;
    let mut counts = vec![0u64; n];
    for t in times {
        if t < t1 {
            if let Some(k) = bin_index(t0, bin_width, n, t) {
                counts[k] += 1;
            }
        }
    }
    Histogram::new(bin_width, t0, counts, shot_count)
}

/// Aggregated histogram of a photon stream.
pub fn bin_timestamps(stream: &TimeTagStream, bin_width: f64, range: (f64, f64)) -> Result<Histogram> {
    bin_times(stream.timestamps(), stream.shot_count(), bin_width, range)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_go_right() {
        let w = 0.01;
        let times: Vec<f64> = (0..100).map(|k| k as f64 * w).collect();
        let h = bin_times(times, 1, w, (0.0, 1.0)).unwrap();
        assert_eq!(h.len(), 100);
        assert!(h.counts().iter().all(|&c| c == 1), "{:?}", h.counts());
    }

    #[test]
    fn out_of_range_dropped_and_empty() {
        let h = bin_times([-0.1, 0.5, 1.0, 2.0], 3, 0.25, (0.0, 1.0)).unwrap();
        assert_eq!(h.counts(), &[0, 0, 1, 0]);
        let e = bin_times(std::iter::empty(), 0, 0.1, (0.0, 1.0)).unwrap();
        assert_eq!(e.total(), 0);
        assert!(bin_times([0.1], 1, 0.1, (1.0, 1.0)).is_err());
        assert!(bin_times([0.1], 1, 0.0, (0.0, 1.0)).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let h = Histogram::new(0.01, 6.0, vec![1, 0, 5, 7], 1000).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let back = Histogram::read_csv(&buf[..]).unwrap();
        assert_eq!(back, h);
        let text = String::from_utf8(buf).unwrap();
        let broken = text.replacen(",5\n", ",-5\n", 1);
        let err = Histogram::read_csv(broken.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 6"), "{err}");
        let commented = format!("# role=sp\n{text}");
        assert_eq!(Histogram::read_csv(commented.as_bytes()).unwrap(), h);
    }

    #[test]
    fn bins_between_uses_centres() {
        let h = Histogram::new(0.1, 0.0, vec![0; 10], 1).unwrap();
        assert_eq!(h.bins_between(0.2, 0.5), 2..5);
        assert_eq!(h.bin_of(0.35), Some(3));
        assert_eq!(h.bin_of(3.0 * 0.1), Some(3));
        assert_eq!(h.bin_of(1.0), None);
    }
}
