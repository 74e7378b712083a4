// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};
use crate::quantum::{Liouvillian, RealMatrix9};

#[derive(Debug, Clone)]
struct Piece {
    end: f64,
    generator: Liouvillian,
    real: RealMatrix9,
}

/// A generator that is constant between declared breakpoints.
///
/// Pieces are contiguous: piece `k` covers `[end_{k-1}, end_k)`, the first
/// one starting at [`GeneratorSchedule::start`].
#[derive(Debug, Clone)]
pub struct GeneratorSchedule {
    start: f64,
    pieces: Vec<Piece>,
}

impl GeneratorSchedule {
    /// Empty schedule beginning at `start`; extend it with [`push`](Self::push).
    pub fn starting_at(start: f64) -> Self {
        Self { start, pieces: Vec::new() }
    }

    pub fn constant(generator: Liouvillian, start: f64, end: f64) -> Result<Self> {
        let mut schedule = Self::starting_at(start);
        schedule.push(end, generator)?;
        Ok(schedule)
    }

    /// Append a piece that holds `generator` until `end`. Adjacent pieces with
    /// identical generators are merged.
    pub fn push(&mut self, end: f64, generator: Liouvillian) -> Result<()> {
        let last = self.end();
        if !(end > last) {
            return Err(Error::Precondition(format!("schedule piece must end after {last}, got {end}")));
        }
        match self.pieces.last_mut() {
            Some(piece) if piece.generator == generator => piece.end = end,
            _ => self.pieces.push(Piece { end, real: generator.real_generator(), generator }),
        }
        Ok(())
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.pieces.last().map_or(self.start, |p| p.end)
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    /// Interior breakpoints between pieces.
    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.pieces.len();
        self.pieces.iter().take(n.saturating_sub(1)).map(|p| p.end)
    }

    /// Generator in force at `t` (right-continuous at breakpoints).
    pub fn generator_at(&self, t: f64) -> Option<&Liouvillian> {
        self.piece_at(t).map(|p| &p.generator)
    }

    /// Real-coordinate form of [`generator_at`](Self::generator_at).
    pub fn real_generator_at(&self, t: f64) -> Option<&RealMatrix9> {
        self.piece_at(t).map(|p| &p.real)
    }

    fn piece_at(&self, t: f64) -> Option<&Piece> {
        if self.pieces.is_empty() || t < self.start || t > self.end() {
            return None;
        }
        let idx = self.pieces.partition_point(|p| p.end <= t);
        self.pieces.get(idx.min(self.pieces.len() - 1))
    }

    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        !self.pieces.is_empty() && t0 >= self.start && t1 <= self.end()
    }
}
