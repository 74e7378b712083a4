// SPDX-License-Identifier: Apache-2.0

use std::io::Write;

use serde::{Deserialize, Serialize};

/// One detected photon: the shot it belongs to and its time within the shot (µs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeTag {
    pub shot: u64,
    pub t: f64,
}

/// All photons of a run, ordered by (time, shot).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeTagStream {
    events: Vec<TimeTag>,
    shot_count: u64,
}

impl TimeTagStream {
    /// Sorts `events` into canonical order.
    pub fn new(mut events: Vec<TimeTag>, shot_count: u64) -> Self {
        events.sort_unstable_by(|a, b| a.t.total_cmp(&b.t).then(a.shot.cmp(&b.shot)));
        Self { events, shot_count }
    }

    pub fn events(&self) -> &[TimeTag] {
        &self.events
    }

    pub fn shot_count(&self) -> u64 {
        self.shot_count
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn timestamps(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(|e| e.t)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "shot_index,timestamp_us")?;
        for e in &self.events {
            writeln!(w, "{},{:.12e}", e.shot, e.t)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_and_csv() {
        let s = TimeTagStream::new(
            vec![TimeTag { shot: 2, t: 1.0 }, TimeTag { shot: 1, t: 1.0 }, TimeTag { shot: 0, t: 0.5 }],
            3,
        );
        let shots: Vec<u64> = s.events().iter().map(|e| e.shot).collect();
        assert_eq!(shots, vec![0, 1, 2]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("shot_index,timestamp_us\n0,5.0"));
        assert_eq!(text.lines().count(), 4);
    }
}
