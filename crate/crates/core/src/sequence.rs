//! The block-harmonic coefficient sequence and its probe points.
//!
//! Coefficients are never stored densely. Block `k` covers the positions
//! `p_k..=q_k` and carries the harmonic reciprocals `sign_k / h` for
//! `h = h_start..=h_end`; every position between two blocks is zero.

use astro_float::BigFloat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ExponentSpec;
use crate::precision::{exact_decimal, to_f64, Working};

/// One nonzero block of coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub sign: i8,
    /// First position `p_k`.
    pub p: u64,
    /// Last position `q_k`.
    pub q: u64,
    /// Harmonic index at position `p_k` (`r_{k-1} + 1`).
    pub h_start: u64,
    /// Harmonic index at position `q_k` (`r_k`).
    pub h_end: u64,
}

/// A single nonzero coefficient `beta_m = sign / harmonic`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Term {
    pub m: u64,
    pub harmonic: u64,
    pub sign: i8,
}

impl Term {
    pub fn coefficient(&self) -> f64 {
        f64::from(self.sign) / self.harmonic as f64
    }
}

impl Block {
    pub fn len(&self) -> u64 {
        self.q - self.p + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, m: u64) -> bool {
        (self.p..=self.q).contains(&m)
    }

    pub fn terms(&self) -> impl Iterator<Item = Term> + '_ {
        (0..self.len()).map(move |i| Term {
            m: self.p + i,
            harmonic: self.h_start + i,
            sign: self.sign,
        })
    }
}

/// Output of the block-harmonic construction: coefficient blocks and the
/// probe points `z_k`, stored as `delta_k = 1 - z_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChatterSequence {
    exponents: ExponentSpec,
    blocks: Vec<Block>,
    deltas: Vec<BigFloat>,
    precision_bits: usize,
}

impl ChatterSequence {
    /// Assembles a sequence and checks its structural invariants.
    pub fn from_parts(
        exponents: ExponentSpec,
        blocks: Vec<Block>,
        deltas: Vec<BigFloat>,
        precision_bits: usize,
    ) -> Result<Self> {
        let seq = ChatterSequence {
            exponents,
            blocks,
            deltas,
            precision_bits,
        };
        seq.check_structure()?;
        Ok(seq)
    }

    pub(crate) fn seed(exponents: ExponentSpec, delta_1: BigFloat, precision_bits: usize) -> Self {
        ChatterSequence {
            exponents,
            blocks: vec![Block {
                sign: 1,
                p: 1,
                q: 1,
                h_start: 1,
                h_end: 1,
            }],
            deltas: vec![delta_1],
            precision_bits,
        }
    }

    pub(crate) fn push(&mut self, block: Block, delta: BigFloat) {
        self.blocks.push(block);
        self.deltas.push(delta);
    }

    pub fn exponents(&self) -> &ExponentSpec {
        &self.exponents
    }

    pub fn precision_bits(&self) -> usize {
        self.precision_bits
    }

    /// Number of completed iterations `K` (= number of blocks = number of probes).
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Block `k`, 1-based.
    pub fn block(&self, k: usize) -> &Block {
        &self.blocks[k - 1]
    }

    pub fn p(&self, k: usize) -> u64 {
        self.block(k).p
    }

    pub fn q(&self, k: usize) -> u64 {
        self.block(k).q
    }

    pub fn r(&self, k: usize) -> u64 {
        self.block(k).h_end
    }

    /// `delta_k = 1 - z_k` at working precision, 1-based.
    pub fn delta(&self, k: usize) -> &BigFloat {
        &self.deltas[k - 1]
    }

    pub fn deltas(&self) -> &[BigFloat] {
        &self.deltas
    }

    pub fn delta_f64(&self, k: usize) -> f64 {
        to_f64(self.delta(k))
    }

    pub fn z_f64(&self, k: usize) -> f64 {
        1.0 - self.delta_f64(k)
    }

    /// `ln z_k` in `f64`, computed from `delta_k` without cancellation.
    pub fn log_z_f64(&self, k: usize) -> f64 {
        (-self.delta_f64(k)).ln_1p()
    }

    /// Nonzero terms of `P_level`, in increasing position order.
    pub fn terms(&self, level: usize) -> impl Iterator<Item = Term> + '_ {
        self.blocks[..level].iter().flat_map(|b| b.terms())
    }

    /// `beta_m`; zero between blocks and beyond `q_K`.
    pub fn coefficient(&self, m: u64) -> f64 {
        let idx = self.blocks.partition_point(|b| b.q < m);
        match self.blocks.get(idx) {
            Some(b) if b.contains(m) => f64::from(b.sign) / (b.h_start + (m - b.p)) as f64,
            _ => 0.0,
        }
    }

    /// The first `level` iterations as a sequence of their own.
    pub fn truncated(&self, level: usize) -> Result<Self> {
        if level == 0 || level > self.k() {
            return Err(Error::domain(format!(
                "truncation level {level} outside 1..={}",
                self.k()
            )));
        }
        Ok(ChatterSequence {
            exponents: self.exponents.clone(),
            blocks: self.blocks[..level].to_vec(),
            deltas: self.deltas[..level].to_vec(),
            precision_bits: self.precision_bits,
        })
    }

    pub(crate) fn check_level(&self, level: usize) -> Result<()> {
        if level == 0 || level > self.k() {
            Err(Error::domain(format!(
                "level L = {level} must lie in 1..={}",
                self.k()
            )))
        } else {
            Ok(())
        }
    }

    /// Structural invariants: the seed block, block placement and lengths,
    /// harmonic growth, alternating signs, and monotone probe points.
    pub fn check_structure(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Invariant(msg));
        if self.blocks.is_empty() || self.blocks.len() != self.deltas.len() {
            return fail(format!(
                "{} blocks but {} probe points",
                self.blocks.len(),
                self.deltas.len()
            ));
        }
        self.exponents.validate()?;
        let first = Block {
            sign: 1,
            p: 1,
            q: 1,
            h_start: 1,
            h_end: 1,
        };
        if self.blocks[0] != first {
            return fail(format!("block 1 is {:?}", self.blocks[0]));
        }
        for (i, pair) in self.blocks.windows(2).enumerate() {
            let (prev, cur) = (pair[0], pair[1]);
            let k = i + 2;
            if cur.p <= prev.q {
                return fail(format!("p_{k} = {} <= q_{} = {}", cur.p, k - 1, prev.q));
            }
            if cur.h_start != prev.h_end + 1 {
                return fail(format!("block {k} does not continue the harmonic sequence"));
            }
            if cur.h_end <= prev.h_end + 1 {
                return fail(format!("r_{k} = {} <= r_{} + 1", cur.h_end, k - 1));
            }
            if cur.q != cur.p + cur.h_end - prev.h_end - 1 {
                return fail(format!("q_{k} = {} does not match p_{k} + r_{k} - r_{} - 1", cur.q, k - 1));
            }
            let expected = if k % 2 == 1 { 1 } else { -1 };
            if cur.sign != expected {
                return fail(format!("block {k} has sign {}", cur.sign));
            }
        }
        let mut prev = None;
        for (i, d) in self.deltas.iter().enumerate() {
            let v = to_f64(d);
            if !(d.is_positive() && v < 1.0) {
                return fail(format!("delta_{} = {v:e} outside (0, 1)", i + 1));
            }
            if let Some(p) = prev {
                if d >= p {
                    return fail(format!("delta_{} does not decrease", i + 1));
                }
            }
            prev = Some(d);
        }
        Ok(())
    }

    pub fn to_document(&self) -> Result<SequenceDocument> {
        Ok(SequenceDocument {
            exponents: self.exponents.clone(),
            blocks: self.blocks.clone(),
            deltas: self.deltas.iter().map(exact_decimal).collect(),
            k: self.k(),
            precision_bits: self.precision_bits,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document()?)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: SequenceDocument = serde_json::from_str(s)?;
        Self::from_document(doc)
    }

    pub fn from_document(doc: SequenceDocument) -> Result<Self> {
        if doc.k != doc.blocks.len() || doc.k != doc.deltas.len() {
            return Err(Error::Document(format!(
                "K = {} but {} blocks and {} deltas",
                doc.k,
                doc.blocks.len(),
                doc.deltas.len()
            )));
        }
        let w = Working::new(doc.precision_bits)?;
        let deltas = doc
            .deltas
            .iter()
            .map(|s| w.parse_decimal(s))
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(doc.exponents, doc.blocks, deltas, doc.precision_bits)
    }
}

/// JSON form of a [`ChatterSequence`]; probe distances are decimal strings so
/// that no precision is lost.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceDocument {
    pub exponents: ExponentSpec,
    pub blocks: Vec<Block>,
    pub deltas: Vec<String>,
    #[serde(rename = "K")]
    pub k: usize,
    pub precision_bits: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_blocks() -> ChatterSequence {
        let w = Working::new(128).unwrap();
        ChatterSequence::from_parts(
            ExponentSpec::Squares,
            vec![
                Block { sign: 1, p: 1, q: 1, h_start: 1, h_end: 1 },
                Block { sign: -1, p: 2, q: 5, h_start: 2, h_end: 5 },
            ],
            vec![w.from_f64(0.5), w.from_f64(0.015625)],
            128,
        )
        .unwrap()
    }

    #[test]
    fn coefficients_follow_blocks() {
        let seq = two_blocks();
        assert_eq!(seq.coefficient(1), 1.0);
        assert_eq!(seq.coefficient(3), -1.0 / 3.0);
        assert_eq!(seq.coefficient(6), 0.0);
        let ms: Vec<u64> = seq.terms(2).map(|t| t.m).collect();
        assert_eq!(ms, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn structure_violations_are_caught() {
        let w = Working::new(128).unwrap();
        let bad_sign = ChatterSequence::from_parts(
            ExponentSpec::Squares,
            vec![
                Block { sign: 1, p: 1, q: 1, h_start: 1, h_end: 1 },
                Block { sign: 1, p: 2, q: 5, h_start: 2, h_end: 5 },
            ],
            vec![w.from_f64(0.5), w.from_f64(0.1)],
            128,
        );
        assert!(matches!(bad_sign, Err(Error::Invariant(_))));

        let increasing_delta = ChatterSequence::from_parts(
            ExponentSpec::Squares,
            vec![
                Block { sign: 1, p: 1, q: 1, h_start: 1, h_end: 1 },
                Block { sign: -1, p: 2, q: 5, h_start: 2, h_end: 5 },
            ],
            vec![w.from_f64(0.5), w.from_f64(0.6)],
            128,
        );
        assert!(increasing_delta.is_err());
    }

    #[test]
    fn json_round_trip_preserves_deltas() {
        let seq = two_blocks();
        let back = ChatterSequence::from_json(&seq.to_json().unwrap()).unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn document_count_mismatch_is_rejected() {
        let mut doc = two_blocks().to_document().unwrap();
        doc.k = 3;
        assert!(matches!(
            ChatterSequence::from_document(doc),
            Err(Error::Document(_))
        ));
    }
}
