use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralBasis;

/// Model used for the eigenvalues beyond the stored range, so that the
/// infinite product F_n has a closed-form tail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailModel {
    /// λ_k = k², with ∏(1 − z/k²) = sin(π√z)/(π√z).
    Squares,
    /// λ_k = (k − ½)², with ∏(1 − z/(k−½)²) = cos(π√z).
    HalfSquares,
}

impl TailModel {
    pub fn value(&self, k: usize) -> f64 {
        match self {
            TailModel::Squares => (k * k) as f64,
            TailModel::HalfSquares => {
                let h = k as f64 - 0.5;
                h * h
            }
        }
    }

    /// Offset o with λ_k = (k − o)².
    pub(crate) fn offset(&self) -> f64 {
        match self {
            TailModel::Squares => 0.0,
            TailModel::HalfSquares => 0.5,
        }
    }
}

/// Increasing positive sequence λ_n = n² + O(n), stored up to some K.
///
/// `scale` and `shift` record how the sequence was obtained from physical
/// eigenvalues μ_n: λ_n = μ_n/scale + shift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSequence {
    values: Vec<f64>,
    tail: TailModel,
    growth_constant: f64,
    scale: f64,
    shift: f64,
}

impl SpectralSequence {
    pub fn new(values: Vec<f64>, tail: TailModel) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("sequence", "empty"));
        }
        if values[0] <= 0.0 {
            return Err(Error::validation(
                "sequence",
                format!("λ_1 = {} is not positive", values[0]),
            ));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::validation(
                "sequence",
                format!("not increasing at index {}", i + 2),
            ));
        }
        let growth_constant = values
            .iter()
            .enumerate()
            .map(|(i, &l)| (l.sqrt() - (i + 1) as f64).abs())
            .fold(0.0, f64::max);
        Ok(SpectralSequence {
            values,
            tail,
            growth_constant,
            scale: 1.0,
            shift: 0.0,
        })
    }

    /// λ_k = k² for k = 1..=count.
    pub fn squares(count: usize) -> Self {
        SpectralSequence::new((1..=count).map(|k| (k * k) as f64).collect(), TailModel::Squares)
            .expect("squares are increasing")
    }

    /// λ_k = (k − ½)² for k = 1..=count.
    pub fn half_squares(count: usize) -> Self {
        SpectralSequence::new(
            (1..=count).map(|k| TailModel::HalfSquares.value(k)).collect(),
            TailModel::HalfSquares,
        )
        .expect("half squares are increasing")
    }

    /// Normalised eigenvalues of a basis: λ̃_n = μ_n·(L/π)² + shift, with the
    /// shift (a whole number, zero when possible) making λ̃_1 positive and the
    /// tail model picked from the fitted ν.
    pub fn from_basis(basis: &SpectralBasis, count: usize) -> Result<Self> {
        if count > basis.len() {
            return Err(Error::validation(
                "count",
                format!("{count} > {} stored modes", basis.len()),
            ));
        }
        let scale = (std::f64::consts::PI / basis.weighted_length()).powi(2);
        let raw: Vec<f64> = basis.eigenvalues()[..count].iter().map(|m| m / scale).collect();
        let shift = if raw[0] > 0.0 { 0.0 } else { (1.0 - raw[0]).ceil() };
        let tail = if (basis.shift_index() + 0.5).abs() < 0.25 {
            TailModel::HalfSquares
        } else {
            TailModel::Squares
        };
        let mut seq = SpectralSequence::new(raw.iter().map(|v| v + shift).collect(), tail)?;
        seq.scale = scale;
        seq.shift = shift;
        Ok(seq)
    }

    /// Records that λ_n = μ_n/scale + shift for physical eigenvalues μ_n.
    pub fn with_scale(mut self, scale: f64, shift: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && shift.is_finite()) {
            return Err(Error::validation("scale", format!("scale {scale}, shift {shift}")));
        }
        self.scale = scale;
        self.shift = shift;
        Ok(self)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// λ_n for 1-based n.
    pub fn value(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    pub fn tail(&self) -> TailModel {
        self.tail
    }

    /// sup_n |√λ_n − n| over the stored range.
    pub fn growth_constant(&self) -> f64 {
        self.growth_constant
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// True when every stored value coincides with the tail model.
    pub fn matches_model(&self) -> bool {
        self.values
            .iter()
            .enumerate()
            .all(|(i, &v)| v == self.tail.value(i + 1))
    }

    /// λ_k for any k: stored values first, the tail model beyond.
    pub fn extended(&self, k: usize) -> f64 {
        if k <= self.len() {
            self.value(k)
        } else {
            self.tail.value(k)
        }
    }
}

/// N_n(r) = #{k ≠ n : |λ_k − λ_n| ≤ r} over the stored sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingFunction {
    pub center_index: usize,
    pub jump_points: Vec<f64>,
}

/// What the counting function certifies over the range it can see.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingCertificate {
    /// Smallest gap r̲: N_n vanishes below it.
    pub min_gap: f64,
    /// sup |√r − N_n(r)| over [0, r_max].
    pub deviation: f64,
    /// Largest r for which N_n is complete.
    pub r_max: f64,
    /// sup (N_n(r) − √(2r)) over [r̲, r_max]; at most 2·C for λ_n = n² + O(n).
    pub excess_over_sqrt_2r: f64,
}

impl CountingFunction {
    pub fn new(seq: &SpectralSequence, n: usize) -> Result<Self> {
        if n == 0 || n > seq.len() {
            return Err(Error::validation("n", format!("index {n} outside 1..={}", seq.len())));
        }
        let ln = seq.value(n);
        let mut jump_points: Vec<f64> = (1..=seq.len())
            .filter(|&k| k != n)
            .map(|k| (seq.value(k) - ln).abs())
            .collect();
        jump_points.sort_by(f64::total_cmp);
        Ok(CountingFunction {
            center_index: n,
            jump_points,
        })
    }

    pub fn count(&self, r: f64) -> usize {
        self.jump_points.partition_point(|&g| g <= r)
    }

    /// The stored jumps only describe N_n up to the distance from λ_n to the
    /// last stored value; beyond that, missing larger λ_k would be miscounted.
    pub fn certificate(&self, seq: &SpectralSequence) -> CountingCertificate {
        let ln = seq.value(self.center_index);
        let r_max = seq.value(seq.len()) - ln;
        let min_gap = self.jump_points.first().copied().unwrap_or(f64::INFINITY);
        let mut deviation: f64 = 0.0;
        let mut excess = f64::NEG_INFINITY;
        let mut prev = 0.0f64;
        let mut count = 0usize;
        for &g in self.jump_points.iter().filter(|&&g| g <= r_max) {
            // on [prev, g): N = count; |√r − N| peaks at an end of the interval
            deviation = deviation
                .max((prev.sqrt() - count as f64).abs())
                .max((g.sqrt() - count as f64).abs());
            if count > 0 {
                excess = excess.max(count as f64 - (2.0 * prev).sqrt());
            }
            count += 1;
            prev = g;
        }
        deviation = deviation
            .max((r_max.sqrt() - count as f64).abs())
            .max((prev.sqrt() - count as f64).abs());
        excess = excess.max(count as f64 - (2.0 * prev).sqrt());
        CountingCertificate {
            min_gap,
            deviation,
            r_max,
            excess_over_sqrt_2r: excess,
        }
    }
}
