//! Test-only oracles and random fixtures shared by the integration suites.
#![allow(dead_code)]

use ctbn::evidence::{Evidence, EvidenceSegment, Subsystem};
use ctbn::markov::{IntensityMatrix, StateDistribution};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Posterior quantities computed on a discretised chain.
#[derive(Debug, Clone)]
pub struct OracleStats {
    pub dwell: Vec<f64>,
    pub transitions: Vec<Vec<f64>>,
    pub marginals: Vec<Vec<f64>>,
    pub step: f64,
}

/// Discrete-time HMM with transition matrix `I + Q h` on the grid `k h`.
///
/// Evidence boundaries must sit on the grid. The state at a grid point must
/// lie in every subsystem that covers it (segments are closed on the left,
/// the last one also on the right; point segments cover their instant).
pub fn discrete_oracle(
    q: &IntensityMatrix,
    p0: &StateDistribution,
    evidence: &Evidence,
    h: f64,
) -> OracleStats {
    let n = q.dim();
    let tau = evidence.horizon();
    let steps = (tau / h).round() as usize;
    assert!(((steps as f64) * h - tau).abs() < 1e-9, "horizon off grid");
    let p: Vec<f64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            q.rate(i, j) * h + if i == j { 1.0 } else { 0.0 }
        })
        .collect();
    let allowed: Vec<Vec<bool>> = (0..=steps)
        .map(|k| allowed_at(evidence, k, h, steps, n))
        .collect();

    let mut fwd = vec![vec![0.0; n]; steps + 1];
    let mut fscale = vec![0.0; steps + 1];
    for i in 0..n {
        fwd[0][i] = if allowed[0][i] { p0.probs()[i] } else { 0.0 };
    }
    normalize(&mut fwd[0], &mut fscale[0], 0.0);
    for k in 0..steps {
        let mut next = vec![0.0; n];
        for j in 0..n {
            if !allowed[k + 1][j] {
                continue;
            }
            next[j] = (0..n).map(|i| fwd[k][i] * p[i * n + j]).sum();
        }
        let prev = fscale[k];
        normalize(&mut next, &mut fscale[k + 1], prev);
        fwd[k + 1] = next;
    }
    let mut bwd = vec![vec![0.0; n]; steps + 1];
    let mut bscale = vec![0.0; steps + 1];
    for i in 0..n {
        bwd[steps][i] = if allowed[steps][i] { 1.0 } else { 0.0 };
    }
    normalize(&mut bwd[steps], &mut bscale[steps], 0.0);
    for k in (0..steps).rev() {
        let mut prev = vec![0.0; n];
        for i in 0..n {
            if !allowed[k][i] {
                continue;
            }
            prev[i] = (0..n).map(|j| p[i * n + j] * bwd[k + 1][j]).sum();
        }
        let s = bscale[k + 1];
        normalize(&mut prev, &mut bscale[k], s);
        bwd[k] = prev;
    }
    let logp = {
        let dot: f64 = (0..n).map(|i| fwd[0][i] * bwd[0][i]).sum();
        dot.ln() + fscale[0] + bscale[0]
    };
    let marginals: Vec<Vec<f64>> = (0..=steps)
        .map(|k| {
            let w: Vec<f64> = (0..n).map(|i| fwd[k][i] * bwd[k][i]).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let mut dwell = vec![0.0; n];
    for k in 0..steps {
        for i in 0..n {
            dwell[i] += 0.5 * h * (marginals[k][i] + marginals[k + 1][i]);
        }
    }
    let mut transitions = vec![vec![0.0; n]; n];
    for k in 0..steps {
        let w = (fscale[k] + bscale[k + 1] - logp).exp();
        for i in 0..n {
            if fwd[k][i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if i != j {
                    transitions[i][j] += w * fwd[k][i] * p[i * n + j] * bwd[k + 1][j];
                }
            }
        }
    }
    OracleStats {
        dwell,
        transitions,
        marginals,
        step: h,
    }
}

/// Richardson combination `2 X(h) - X(2h)` of two first-order oracles.
/// Marginals are extrapolated at even grid indices only.
pub fn extrapolated_oracle(
    q: &IntensityMatrix,
    p0: &StateDistribution,
    evidence: &Evidence,
    h: f64,
) -> OracleStats {
    let fine = discrete_oracle(q, p0, evidence, h);
    let coarse = discrete_oracle(q, p0, evidence, 2.0 * h);
    let n = fine.dwell.len();
    OracleStats {
        dwell: (0..n).map(|i| 2.0 * fine.dwell[i] - coarse.dwell[i]).collect(),
        transitions: (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| 2.0 * fine.transitions[i][j] - coarse.transitions[i][j])
                    .collect()
            })
            .collect(),
        // Extrapolated where both grids have a point; fine values elsewhere.
        marginals: fine
            .marginals
            .iter()
            .enumerate()
            .map(|(k, m)| {
                if k % 2 == 0 {
                    let c = &coarse.marginals[k / 2];
                    m.iter().zip(c).map(|(a, b)| 2.0 * a - b).collect()
                } else {
                    m.clone()
                }
            })
            .collect(),
        step: h,
    }
}

fn normalize(v: &mut [f64], log_scale: &mut f64, prev: f64) {
    let s: f64 = v.iter().sum();
    assert!(s > 0.0, "oracle evidence has zero probability");
    for x in v.iter_mut() {
        *x /= s;
    }
    *log_scale = prev + s.ln();
}

fn allowed_at(evidence: &Evidence, k: usize, h: f64, steps: usize, n: usize) -> Vec<bool> {
    let mut ok = vec![true; n];
    let segs = evidence.segments();
    let on_grid = |t: f64| (t / h).round() as usize;
    for (idx, s) in segs.iter().enumerate() {
        let (a, b) = (on_grid(s.start), on_grid(s.end));
        let covers = if a == b {
            k == a
        } else {
            (a <= k && k < b) || (k == steps && b == steps && idx == last_positive(segs))
        };
        if covers {
            let mask = s.subsystem.mask();
            for i in 0..n {
                ok[i] &= mask[i];
            }
        }
    }
    ok
}

fn last_positive(segs: &[EvidenceSegment]) -> usize {
    segs.iter().rposition(|s| s.end > s.start).unwrap_or(0)
}

/// Dense random proper matrix with off-diagonal rates in `[lo, hi]`.
pub fn random_intensity<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> IntensityMatrix {
    let rates = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            rng.random_range(lo..=hi)
        }
    });
    IntensityMatrix::from_rates(rates).unwrap()
}

pub fn random_distribution<R: Rng>(rng: &mut R, n: usize) -> StateDistribution {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    StateDistribution::new(w.into_iter().map(|x| x / s).collect()).unwrap()
}

pub fn random_subsystem<R: Rng>(rng: &mut R, n: usize) -> Subsystem {
    loop {
        let members: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if !members.is_empty() {
            return Subsystem::new(n, members).unwrap();
        }
    }
}

/// Random evidence with up to `max_segments` segments whose boundaries sit on
/// a 0.01 grid; roughly one segment in five is point evidence.
pub fn random_evidence<R: Rng>(rng: &mut R, n: usize, max_segments: usize) -> Evidence {
    let count = rng.random_range(1..=max_segments);
    let mut segments: Vec<EvidenceSegment> = Vec::with_capacity(count);
    let mut t_ticks = 0u32;
    for i in 0..count {
        let after_point = segments.last().is_some_and(|s| s.start == s.end);
        let point = i > 0 && i + 1 < count && !after_point && rng.random_bool(0.2);
        let len = if point { 0 } else { rng.random_range(5..=40) };
        let start = t_ticks as f64 / 100.0;
        t_ticks += len;
        let mut subsystem = if rng.random_bool(0.3) {
            Subsystem::all(n)
        } else {
            random_subsystem(rng, n)
        };
        if after_point {
            // A point observation must be compatible with the state after it.
            let prev = &segments[i - 1].subsystem;
            let mut members = subsystem.members().to_vec();
            members.extend_from_slice(prev.members());
            subsystem = Subsystem::new(n, members).unwrap();
        }
        segments.push(EvidenceSegment {
            subsystem,
            start,
            end: t_ticks as f64 / 100.0,
        });
    }
    Evidence::new(segments).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `‖a - b‖∞ / ‖b‖∞`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let scale = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Network over variables with the given cardinalities, each with up to
/// `max_parents` random parents (cycles allowed) and random rates in
/// `[lo, hi]`.
pub fn random_network<R: Rng>(
    rng: &mut R,
    cardinalities: &[usize],
    max_parents: usize,
    lo: f64,
    hi: f64,
) -> ctbn::network::CtbnModel {
    use ctbn::network::{instantiation_count, Cim, CtbnModel, Variable};
    let k = cardinalities.len();
    let variables: Vec<Variable> = cardinalities
        .iter()
        .enumerate()
        .map(|(i, &c)| Variable::new(format!("X{i}"), (0..c).map(|s| format!("s{s}"))).unwrap())
        .collect();
    let cims = (0..k)
        .map(|v| {
            let mut parents: Vec<usize> = (0..k).filter(|&p| p != v && rng.random_bool(0.5)).collect();
            parents.truncate(max_parents);
            let count = instantiation_count(&variables, &parents);
            let matrices = (0..count)
                .map(|_| random_intensity(rng, cardinalities[v], lo, hi))
                .collect();
            Cim::new(parents, matrices)
        })
        .collect();
    let initial = cardinalities.iter().map(|&c| random_distribution(rng, c)).collect();
    CtbnModel::new(variables, cims, initial).unwrap()
}
