//! Homogeneous continuous-time Markov processes over a flat state space.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::{Error, Result};

/// Relative slack allowed on the row sums of a proper intensity matrix.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;
/// Tolerance on the total mass of a state distribution.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;
/// Entries of a transition matrix may dip this far below zero from rounding.
pub const NEGATIVITY_SLACK: f64 = 1e-12;

/// Whether every row must sum to zero or is allowed to leak mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntensityKind {
    /// Rows sum to zero: a generator of a conservative process.
    Proper,
    /// Rows sum to at most zero: a generator restricted to a subsystem.
    Restricted,
}

/// A validated matrix of transition intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMatrix {
    entries: DMatrix<f64>,
    kind: IntensityKind,
}

impl IntensityMatrix {
    /// Validates `entries` against the invariants of `kind`.
    pub fn new(entries: DMatrix<f64>, kind: IntensityKind) -> Result<Self> {
        validate_intensity(&entries, kind)?;
        Ok(Self { entries, kind })
    }

    pub fn from_rows(rows: &[Vec<f64>], kind: IntensityKind) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::NonSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(m, kind)
    }

    /// Builds a proper matrix from off-diagonal rates, filling the diagonal
    /// with the negative row sums.
    pub fn from_rates(mut rates: DMatrix<f64>) -> Result<Self> {
        let n = rates.nrows();
        if rates.ncols() != n {
            return Err(Error::NonSquare {
                rows: n,
                cols: rates.ncols(),
            });
        }
        for i in 0..n {
            rates[(i, i)] = 0.0;
            let s: f64 = rates.row(i).iter().sum();
            rates[(i, i)] = -s;
        }
        Self::new(rates, IntensityKind::Proper)
    }

    pub(crate) fn new_unchecked(entries: DMatrix<f64>, kind: IntensityKind) -> Self {
        Self { entries, kind }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn kind(&self) -> IntensityKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    /// Total exit intensity `q_i`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.entries[(i, i)]
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Largest total exit intensity.
    pub fn max_exit_rate(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.exit_rate(i))
            .fold(0.0, f64::max)
    }

    /// `exp(Q t)`.
    pub fn exp(&self, t: f64) -> DMatrix<f64> {
        matrix_exponential(&self.entries, t)
    }
}

/// Checks the structural invariants of an intensity matrix.
pub fn validate_intensity(q: &DMatrix<f64>, kind: IntensityKind) -> Result<()> {
    let (rows, cols) = q.shape();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    let scale = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..rows {
        let mut sum = 0.0;
        for j in 0..cols {
            let v = q[(i, j)];
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            if i != j && v < 0.0 {
                return Err(Error::NegativeOffDiagonal { row: i, col: j });
            }
            sum += v;
        }
        let slack = ROW_SUM_TOLERANCE * scale.max(f64::MIN_POSITIVE);
        let bad = match kind {
            IntensityKind::Proper => sum.abs() > slack,
            IntensityKind::Restricted => sum > slack,
        };
        if bad {
            return Err(Error::RowSumViolation { row: i, sum });
        }
    }
    Ok(())
}

/// `exp(a t)`; nalgebra's scaling-and-squaring Padé approximant.
pub fn matrix_exponential(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    assert!(t >= 0.0 && t.is_finite(), "time must be finite and nonnegative");
    if t == 0.0 {
        return DMatrix::identity(a.nrows(), a.ncols());
    }
    (a * t).exp()
}

/// A probability vector over the states of a flat process.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution(Vec<f64>);

impl StateDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {p}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("sums to {s}")));
        }
        Ok(Self(probs))
    }

    pub fn point_mass(n: usize, state: usize) -> Self {
        let mut v = vec![0.0; n];
        v[state] = 1.0;
        Self(v)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub(crate) fn new_unchecked(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }
}

/// `p0 · exp(Q t)`.
pub fn transient_distribution(
    p0: &StateDistribution,
    q: &IntensityMatrix,
    t: f64,
) -> Result<StateDistribution> {
    if p0.len() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            found: p0.len(),
        });
    }
    if t == 0.0 {
        return Ok(p0.clone());
    }
    let e = q.exp(t);
    let p = e.tr_mul(&p0.to_vector());
    Ok(StateDistribution::new_unchecked(p.iter().copied().collect()))
}

/// One maximal stay in a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stay {
    pub state: usize,
    pub start: f64,
    pub end: f64,
}

/// A fully observed trajectory of a flat process on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompleteTrajectory {
    stays: Vec<Stay>,
}

impl CompleteTrajectory {
    pub fn new(stays: Vec<Stay>) -> Result<Self> {
        let first = stays
            .first()
            .ok_or_else(|| Error::InvalidTrajectory("no segments".into()))?;
        if first.start != 0.0 {
            return Err(Error::InvalidTrajectory("must start at time 0".into()));
        }
        for (i, s) in stays.iter().enumerate() {
            if !(s.end > s.start) {
                return Err(Error::InvalidTrajectory(format!(
                    "segment {i} has non-positive duration"
                )));
            }
            if i > 0 {
                let prev = &stays[i - 1];
                if prev.end != s.start {
                    return Err(Error::InvalidTrajectory(format!(
                        "gap before segment {i}"
                    )));
                }
                if prev.state == s.state {
                    return Err(Error::InvalidTrajectory(format!(
                        "segments {} and {i} repeat state {}",
                        i - 1,
                        s.state
                    )));
                }
            }
        }
        Ok(Self { stays })
    }

    pub fn stays(&self) -> &[Stay] {
        &self.stays
    }

    pub fn horizon(&self) -> f64 {
        self.stays.last().map_or(0.0, |s| s.end)
    }

    pub fn state_at(&self, t: f64) -> usize {
        let idx = self.stays.partition_point(|s| s.end <= t);
        self.stays[idx.min(self.stays.len() - 1)].state
    }

    pub fn transition_count(&self) -> usize {
        self.stays.len() - 1
    }
}

/// Samples a trajectory on `[0, horizon]` with exponential dwell times and
/// multinomial successors.
pub fn sample_trajectory(
    p0: &StateDistribution,
    q: &IntensityMatrix,
    horizon: f64,
    seed: u64,
) -> CompleteTrajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_trajectory_with(p0, q, horizon, &mut rng)
}

/// Like [`sample_trajectory`] but draws from a caller-owned generator.
pub fn sample_trajectory_with<R: Rng + ?Sized>(
    p0: &StateDistribution,
    q: &IntensityMatrix,
    horizon: f64,
    rng: &mut R,
) -> CompleteTrajectory {
    assert!(horizon > 0.0, "horizon must be positive");
    let mut state = sample_index(p0.probs(), rng);
    let mut t = 0.0;
    let mut stays = Vec::new();
    loop {
        let rate = q.exit_rate(state);
        let dwell = if rate > 0.0 {
            Exp::new(rate).expect("positive rate").sample(rng)
        } else {
            f64::INFINITY
        };
        let end = t + dwell;
        if end >= horizon {
            stays.push(Stay {
                state,
                start: t,
                end: horizon,
            });
            break;
        }
        stays.push(Stay {
            state,
            start: t,
            end,
        });
        let weights: Vec<f64> = (0..q.dim())
            .map(|j| if j == state { 0.0 } else { q.rate(state, j) })
            .collect();
        state = sample_index(&weights, rng);
        t = end;
    }
    CompleteTrajectory { stays }
}

/// Draws an index proportionally to nonnegative `weights`.
pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w <= 0.0 {
            continue;
        }
        last = i;
        if u < *w {
            return i;
        }
        u -= w;
    }
    last
}
