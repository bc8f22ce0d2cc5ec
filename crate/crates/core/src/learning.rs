//! Parameter and structure learning from partially observed trajectories.
//!
//! EM alternates exact expected statistics on the flat process with the
//! closed-form maximiser `q = M/T`, `θ = M[x,x']/M[x]` per family row.
//! Structural EM interleaves a few EM iterations with an exhaustive
//! per-variable parent-set search under a BIC score.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::evidence::ObservedTrajectory;
use crate::inference::{forward_backward, infer, FlatStatistics, DEFAULT_TOLERANCE};
use crate::markov::{IntensityKind, IntensityMatrix, StateDistribution};
use crate::network::{
    aggregate_family, aggregate_statistics, amalgamate, family_table_log_likelihood,
    instantiation_count, Cim, CtbnModel, FamilyStatistics, FamilyTable, JointSpace,
};
use crate::sum::Compensated;
use crate::{Error, Result};

/// Below this, a dwell time or departure count is treated as zero.
pub const DEGENERATE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub max_iterations: usize,
    /// Stop once the relative log-likelihood improvement falls below this.
    pub tolerance: f64,
    pub seed: u64,
    /// Range for log-uniform random initial rates.
    pub rate_range: (f64, f64),
    pub freeze_initial: bool,
    /// Random restarts for [`fit`]; the best final likelihood wins.
    pub restarts: usize,
    /// Relative tolerance of the adaptive quadrature.
    pub quadrature_tolerance: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-6,
            seed: 0,
            rate_range: (0.1, 10.0),
            freeze_initial: false,
            restarts: 3,
            quadrature_tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.rate_range;
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidModel("EM tolerance must be positive".into()));
        }
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidModel("rate range must be positive".into()));
        }
        if !(self.quadrature_tolerance > 0.0) {
            return Err(Error::InvalidModel("quadrature tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// What `w` stands for in the BIC penalty `(ln w)/2` per free parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleSize {
    #[default]
    Trajectories,
    TotalTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemConfig {
    pub em: EmConfig,
    pub max_parents: usize,
    /// EM iterations between structure steps.
    pub em_steps: usize,
    /// Candidate parents per variable; `None` allows every other variable.
    pub candidates: Option<Vec<Vec<usize>>>,
    pub sample_size: SampleSize,
    pub max_rounds: usize,
}

impl Default for SemConfig {
    fn default() -> Self {
        Self {
            em: EmConfig::default(),
            max_parents: 2,
            em_steps: 5,
            candidates: None,
            sample_size: SampleSize::Trajectories,
            max_rounds: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: CtbnModel,
    /// Observed-data log-likelihood of each evaluated parameter set; the first
    /// entry belongs to the starting point.
    pub trace: Vec<f64>,
    pub statistics: FamilyStatistics,
    pub converged: bool,
    /// Observed-data BIC at each structure step (structural EM only).
    pub score_trace: Vec<f64>,
}

impl FitResult {
    pub fn log_likelihood(&self) -> f64 {
        *self.trace.last().expect("trace is never empty")
    }
}

/// Expected statistics of a dataset under one model.
#[derive(Debug, Clone)]
pub struct Expectation {
    pub statistics: FamilyStatistics,
    /// Flat statistics summed over records.
    pub flat: FlatStatistics,
    pub joint: JointSpace,
    pub log_likelihood: f64,
    pub record_log_likelihoods: Vec<f64>,
    /// Whether every record pins down the joint state at all times.
    pub complete: bool,
}

struct FlatAccumulator {
    n: usize,
    dwell: Vec<Compensated>,
    transitions: Vec<Compensated>,
    initial: Vec<Compensated>,
    log_likelihood: Compensated,
}

impl FlatAccumulator {
    fn new(n: usize) -> Self {
        Self {
            n,
            dwell: vec![Compensated::default(); n],
            transitions: vec![Compensated::default(); n * n],
            initial: vec![Compensated::default(); n],
            log_likelihood: Compensated::default(),
        }
    }

    fn add(&mut self, s: &FlatStatistics) {
        let n = self.n;
        for j in 0..n {
            self.dwell[j].add(s.dwell[j]);
            self.initial[j].add(s.initial[j]);
            for k in 0..n {
                let m = s.transitions[(j, k)];
                if m != 0.0 {
                    self.transitions[j * n + k].add(m);
                }
            }
        }
        self.log_likelihood.add(s.log_likelihood);
    }

    fn finish(self) -> FlatStatistics {
        let n = self.n;
        FlatStatistics {
            dwell: DVector::from_iterator(n, self.dwell.iter().map(Compensated::value)),
            transitions: DMatrix::from_fn(n, n, |j, k| self.transitions[j * n + k].value()),
            initial: DVector::from_iterator(n, self.initial.iter().map(Compensated::value)),
            log_likelihood: self.log_likelihood.value(),
        }
    }
}

fn tag_record(e: Error, record: usize) -> Error {
    match e {
        Error::ZeroProbabilityEvidence { segment, .. } => Error::ZeroProbabilityEvidence {
            record: Some(record),
            segment,
        },
        other => other,
    }
}

/// Expected statistics and log-likelihood of `data` under `model`.
pub fn expectation(
    model: &CtbnModel,
    data: &[ObservedTrajectory],
    tolerance: f64,
) -> Result<Expectation> {
    let flat_model = amalgamate(model)?;
    let n = flat_model.joint.size();
    let mut acc = FlatAccumulator::new(n);
    let mut records = Vec::with_capacity(data.len());
    let mut complete = true;
    for (r, obs) in data.iter().enumerate() {
        check_width(model, obs, r)?;
        let ev = flat_model.joint.evidence(obs).map_err(|e| tag_record(e, r))?;
        complete &= ev.is_complete();
        let s = infer(&flat_model.intensity, &flat_model.initial, &ev, tolerance)
            .map_err(|e| tag_record(e, r))?;
        records.push(s.log_likelihood);
        acc.add(&s);
    }
    let flat = acc.finish();
    let statistics = aggregate_statistics(&flat, &flat_model.joint, model);
    Ok(Expectation {
        statistics,
        log_likelihood: flat.log_likelihood,
        flat,
        joint: flat_model.joint,
        record_log_likelihoods: records,
        complete,
    })
}

fn check_width(model: &CtbnModel, obs: &ObservedTrajectory, record: usize) -> Result<()> {
    if obs.num_variables() != model.num_variables() {
        return Err(Error::InvalidTrajectory(format!(
            "record {record} observes {} variables, the model has {}",
            obs.num_variables(),
            model.num_variables()
        )));
    }
    Ok(())
}

/// Family statistics and total observed-data log-likelihood.
pub fn e_step(model: &CtbnModel, data: &[ObservedTrajectory]) -> Result<(FamilyStatistics, f64)> {
    let e = expectation(model, data, DEFAULT_TOLERANCE)?;
    Ok((e.statistics, e.log_likelihood))
}

/// `ln p(σ)` of every record, without computing statistics.
pub fn record_log_likelihoods(model: &CtbnModel, data: &[ObservedTrajectory]) -> Result<Vec<f64>> {
    let flat_model = amalgamate(model)?;
    data.iter()
        .enumerate()
        .map(|(r, obs)| {
            check_width(model, obs, r)?;
            let ev = flat_model.joint.evidence(obs).map_err(|e| tag_record(e, r))?;
            forward_backward(&flat_model.intensity, &flat_model.initial, &ev)
                .map(|c| c.log_likelihood())
                .map_err(|e| tag_record(e, r))
        })
        .collect()
}

/// Total observed-data log-likelihood.
pub fn log_likelihood(model: &CtbnModel, data: &[ObservedTrajectory]) -> Result<f64> {
    let mut acc = Compensated::default();
    for l in record_log_likelihoods(model, data)? {
        acc.add(l);
    }
    Ok(acc.value())
}

/// Maximum-likelihood intensity matrix for one instantiation's statistics.
///
/// Rows with no dwell time keep `previous_exit`'s rate; rows with no
/// departures spread their exits uniformly over the support.
pub fn ml_intensity(
    dwell: &DVector<f64>,
    transitions: &DMatrix<f64>,
    support: &DMatrix<bool>,
    previous_exit: &[f64],
) -> IntensityMatrix {
    let d = dwell.len();
    let mut q = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        let allowed: Vec<usize> = (0..d).filter(|&j| support[(i, j)]).collect();
        if allowed.is_empty() {
            continue;
        }
        let mut departures = Compensated::default();
        for &j in &allowed {
            departures.add(transitions[(i, j)]);
        }
        let m = departures.value();
        let rate = if dwell[i] < DEGENERATE_THRESHOLD {
            previous_exit[i]
        } else {
            m / dwell[i]
        };
        for &j in &allowed {
            let theta = if m < DEGENERATE_THRESHOLD {
                1.0 / allowed.len() as f64
            } else {
                transitions[(i, j)] / m
            };
            q[(i, j)] = rate * theta;
        }
    }
    IntensityMatrix::from_rates(q).expect("nonnegative finite rates")
}

fn exit_rates(q: &IntensityMatrix) -> Vec<f64> {
    (0..q.dim()).map(|i| q.exit_rate(i)).collect()
}

fn ml_family(cim: &Cim, table: &FamilyTable, previous: &[IntensityMatrix]) -> Vec<IntensityMatrix> {
    (0..table.num_instantiations())
        .map(|u| {
            ml_intensity(
                table.dwell(u),
                table.transitions(u),
                cim.support(u.min(cim.num_instantiations() - 1)),
                &exit_rates(&previous[u.min(previous.len() - 1)]),
            )
        })
        .collect()
}

fn ml_initial(model: &CtbnModel, stats: &FamilyStatistics) -> Vec<StateDistribution> {
    (0..model.num_variables())
        .map(|v| {
            let w = stats.initial(v);
            let total: f64 = w.sum();
            if total < DEGENERATE_THRESHOLD {
                model.initial(v).clone()
            } else {
                StateDistribution::new_unchecked(w.iter().map(|x| x / total).collect())
            }
        })
        .collect()
}

/// Closed-form maximiser of the expected log-likelihood for fixed structure.
pub fn m_step(stats: &FamilyStatistics, previous: &CtbnModel, freeze_initial: bool) -> Result<CtbnModel> {
    let cims = (0..previous.num_variables())
        .map(|v| {
            let cim = previous.cim(v);
            cim.with_matrices(ml_family(cim, stats.family(v), cim.matrices()))
        })
        .collect();
    let initial = if freeze_initial {
        previous.initial_marginals().to_vec()
    } else {
        ml_initial(previous, stats)
    };
    CtbnModel::new(previous.variables().to_vec(), cims, initial)
}

/// Same structure with random parameters: log-uniform exit rates and
/// Dirichlet(1) branching over each row's support. Initial marginals become
/// uniform over each variable's (state, phase) pairs.
pub fn random_parameters<R: Rng + ?Sized>(
    template: &CtbnModel,
    rate_range: (f64, f64),
    rng: &mut R,
) -> Result<CtbnModel> {
    let (lo, hi) = (rate_range.0.ln(), rate_range.1.ln());
    let cims = template
        .cims()
        .iter()
        .map(|cim| {
            let matrices = (0..cim.num_instantiations())
                .map(|u| {
                    let s = cim.support(u);
                    let d = s.nrows();
                    let mut q = DMatrix::<f64>::zeros(d, d);
                    for i in 0..d {
                        let allowed: Vec<usize> = (0..d).filter(|&j| s[(i, j)]).collect();
                        if allowed.is_empty() {
                            continue;
                        }
                        let rate = if hi > lo { rng.random_range(lo..hi) } else { lo }.exp();
                        let draws: Vec<f64> = allowed.iter().map(|_| rng.sample(Exp1)).collect();
                        let total: f64 = draws.iter().sum();
                        for (&j, g) in allowed.iter().zip(draws) {
                            q[(i, j)] = rate * g / total;
                        }
                    }
                    IntensityMatrix::from_rates(q)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(cim.with_matrices(matrices))
        })
        .collect::<Result<Vec<_>>>()?;
    let initial = template
        .variables()
        .iter()
        .map(|v| StateDistribution::uniform(v.local_dim()))
        .collect();
    CtbnModel::new(template.variables().to_vec(), cims, initial)
}

struct EmRun {
    model: CtbnModel,
    trace: Vec<f64>,
    expectation: Expectation,
    converged: bool,
}

fn improvement_is_small(previous: f64, current: f64, tolerance: f64) -> bool {
    (current - previous).abs() <= tolerance * previous.abs()
}

/// Runs up to `iterations` M-steps starting from `model`. `previous` is the
/// log-likelihood before `model`, when continuing an earlier run.
fn em_run(
    mut model: CtbnModel,
    data: &[ObservedTrajectory],
    config: &EmConfig,
    iterations: usize,
    previous: Option<f64>,
) -> Result<EmRun> {
    let mut trace = Vec::new();
    let mut last = previous;
    let mut step = 0;
    loop {
        let e = expectation(&model, data, config.quadrature_tolerance)?;
        let ll = e.log_likelihood;
        trace.push(ll);
        let done_exactly = e.complete && step > 0;
        if let Some(prev) = last {
            if done_exactly || improvement_is_small(prev, ll, config.tolerance) {
                return Ok(EmRun {
                    model,
                    trace,
                    expectation: e,
                    converged: true,
                });
            }
        }
        if step == iterations {
            return Ok(EmRun {
                model,
                trace,
                expectation: e,
                converged: false,
            });
        }
        model = m_step(&e.statistics, &model, config.freeze_initial)?;
        last = Some(ll);
        step += 1;
    }
}

/// EM from the given parameters.
pub fn em(model: &CtbnModel, data: &[ObservedTrajectory], config: &EmConfig) -> Result<FitResult> {
    config.validate()?;
    let run = em_run(model.clone(), data, config, config.max_iterations, None)?;
    Ok(FitResult {
        model: run.model,
        trace: run.trace,
        statistics: run.expectation.statistics,
        converged: run.converged,
        score_trace: Vec::new(),
    })
}

/// EM from `config.restarts` random initialisations of `template`'s
/// structure (or from `template` itself when `restarts` is 0), keeping the
/// run with the highest final log-likelihood.
pub fn fit(template: &CtbnModel, data: &[ObservedTrajectory], config: &EmConfig) -> Result<FitResult> {
    config.validate()?;
    if config.restarts == 0 {
        return em(template, data, config);
    }
    let mut best: Option<FitResult> = None;
    for r in 0..config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(r as u64));
        let mut start = random_parameters(template, config.rate_range, &mut rng)?;
        if config.freeze_initial {
            start = start.with_initial(template.initial_marginals().to_vec())?;
        }
        let result = em(&start, data, config)?;
        if best
            .as_ref()
            .is_none_or(|b| result.log_likelihood() > b.log_likelihood())
        {
            best = Some(result);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// BIC of every family, plus their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct BicScore {
    pub total: f64,
    pub families: Vec<f64>,
}

/// Number of free parameters of a family with `instantiations` parent
/// configurations sharing `support`.
pub fn family_parameters(support: &DMatrix<bool>, instantiations: usize) -> usize {
    support.iter().filter(|&&b| b).count() * instantiations
}

/// Penalised score of one family at its maximum-likelihood parameters.
/// Returns the score and those parameters.
pub fn family_bic(
    var: usize,
    cim: &Cim,
    table: &FamilyTable,
    fallback: &[IntensityMatrix],
    sample_size: f64,
) -> Result<(f64, Vec<IntensityMatrix>)> {
    let matrices = ml_family(cim, table, fallback);
    let ll = family_table_log_likelihood(var, &matrices, table)?;
    let params: usize = (0..table.num_instantiations())
        .map(|u| family_parameters(cim.support(u.min(cim.num_instantiations() - 1)), 1))
        .sum();
    Ok((ll - 0.5 * sample_size.ln() * params as f64, matrices))
}

/// BIC of the model's structure given its statistics, with each family at its
/// maximum-likelihood parameters.
pub fn bic_score(stats: &FamilyStatistics, model: &CtbnModel, sample_size: f64) -> Result<BicScore> {
    assert!(sample_size >= 1.0, "sample size must be at least 1");
    let families = (0..model.num_variables())
        .map(|v| {
            let cim = model.cim(v);
            family_bic(v, cim, stats.family(v), cim.matrices(), sample_size).map(|(s, _)| s)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(BicScore {
        total: families.iter().sum(),
        families,
    })
}

/// The BIC penalty of a whole model.
pub fn bic_penalty(model: &CtbnModel, sample_size: f64) -> f64 {
    0.5 * sample_size.ln() * crate::network::count_parameters(model) as f64
}

pub fn sample_size(data: &[ObservedTrajectory], kind: SampleSize) -> f64 {
    let w = match kind {
        SampleSize::Trajectories => data.len() as f64,
        SampleSize::TotalTime => data.iter().map(|d| d.horizon()).sum(),
    };
    w.max(1.0)
}

/// Subsets of `pool` with at most `max` elements, smallest first and
/// lexicographic within a size.
fn parent_sets(pool: &[usize], max: usize) -> Vec<Vec<usize>> {
    let mut pool = pool.to_vec();
    pool.sort_unstable();
    pool.dedup();
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<(Vec<usize>, usize)> = vec![(Vec::new(), 0)];
    for _ in 0..max.min(pool.len()) {
        let mut next = Vec::new();
        for (set, from) in &frontier {
            for (i, &p) in pool.iter().enumerate().skip(*from) {
                let mut s = set.clone();
                s.push(p);
                next.push((s, i + 1));
            }
        }
        next.sort();
        out.extend(next.iter().map(|(s, _)| s.clone()));
        frontier = next;
    }
    out
}

fn template_cim(model: &CtbnModel, v: usize, parents: &[usize], matrices: Vec<IntensityMatrix>) -> Result<Cim> {
    let cim = model.cim(v);
    if !cim.is_uniform() {
        return Err(Error::InvalidModel(format!(
            "variable {} has per-instantiation structure and cannot change parents",
            model.variable(v).name()
        )));
    }
    let count = matrices.len();
    Ok(Cim::with_structure(
        parents.to_vec(),
        matrices,
        vec![cim.support(0).clone(); count],
        vec![cim.entry(0).clone(); count],
        cim.reset_on_parent_change(),
    ))
}

/// Each row's exit rate averaged over the current instantiations; used for
/// rows a candidate family never visits.
fn averaged_fallback(cim: &Cim) -> Vec<IntensityMatrix> {
    let d = cim.matrix(0).dim();
    let count = cim.num_instantiations() as f64;
    let mut q = DMatrix::<f64>::zeros(d, d);
    for m in cim.matrices() {
        q += m.matrix() / count;
    }
    vec![IntensityMatrix::new(q, IntensityKind::Proper)
        .unwrap_or_else(|_| cim.matrix(0).clone())]
}

/// Best-scoring parent set of one variable.
fn best_parents(
    exp: &Expectation,
    model: &CtbnModel,
    v: usize,
    pool: &[usize],
    max_parents: usize,
    w: f64,
) -> Result<(Vec<usize>, f64, Vec<IntensityMatrix>)> {
    let vars = model.variables();
    let fallback = averaged_fallback(model.cim(v));
    let pool: Vec<usize> = pool.iter().copied().filter(|&p| p != v).collect();
    let mut best: Option<(Vec<usize>, f64, Vec<IntensityMatrix>)> = None;
    for parents in parent_sets(&pool, max_parents) {
        let table = aggregate_family(&exp.flat, &exp.joint, vars, v, &parents);
        let count = instantiation_count(vars, &parents);
        let stub = template_cim(model, v, &parents, vec![fallback[0].clone(); count])?;
        let (score, matrices) = family_bic(v, &stub, &table, &fallback, w)?;
        let better = match &best {
            None => true,
            Some((_, b, _)) => score > *b + 1e-9 * b.abs().max(1.0),
        };
        if better {
            best = Some((parents, score, matrices));
        }
    }
    Ok(best.expect("the empty set is always a candidate"))
}

/// Exhaustive per-variable parent-set search under BIC, using statistics for
/// every candidate family re-aggregated from one set of flat statistics.
/// Returns the chosen parent set of every variable.
pub fn structure_search(
    exp: &Expectation,
    model: &CtbnModel,
    candidates: &[Vec<usize>],
    max_parents: usize,
    sample_size: f64,
) -> Result<Vec<Vec<usize>>> {
    (0..model.num_variables())
        .map(|v| best_parents(exp, model, v, &candidates[v], max_parents, sample_size).map(|b| b.0))
        .collect()
}

fn all_candidates(model: &CtbnModel) -> Vec<Vec<usize>> {
    let k = model.num_variables();
    (0..k).map(|v| (0..k).filter(|&p| p != v).collect()).collect()
}

/// Model with the given parent sets and maximum-likelihood parameters for
/// `exp`'s statistics. Variables whose parents are unchanged keep their
/// current CIM.
fn restructure(
    exp: &Expectation,
    model: &CtbnModel,
    parents: &[Vec<usize>],
    w: f64,
) -> Result<CtbnModel> {
    let cims = (0..model.num_variables())
        .map(|v| {
            if parents[v] == model.parents(v) {
                return Ok(model.cim(v).clone());
            }
            let vars = model.variables();
            let fallback = averaged_fallback(model.cim(v));
            let count = instantiation_count(vars, &parents[v]);
            let stub = template_cim(model, v, &parents[v], vec![fallback[0].clone(); count])?;
            let table = aggregate_family(&exp.flat, &exp.joint, vars, v, &parents[v]);
            let (_, matrices) = family_bic(v, &stub, &table, &fallback, w)?;
            template_cim(model, v, &parents[v], matrices)
        })
        .collect::<Result<Vec<_>>>()?;
    model.with_cims(cims)
}

/// Drops every edge, keeping each variable's first CIM.
pub fn without_edges(model: &CtbnModel) -> Result<CtbnModel> {
    let cims = (0..model.num_variables())
        .map(|v| template_cim(model, v, &[], vec![model.cim(v).matrix(0).clone()]))
        .collect::<Result<Vec<_>>>()?;
    model.with_cims(cims)
}

/// Structural EM from `start`: `em_steps` EM iterations, then a full
/// structure search, repeated until the structure is stable and EM has
/// converged. `score_trace` holds the observed-data BIC before each search.
pub fn sem(start: &CtbnModel, data: &[ObservedTrajectory], config: &SemConfig) -> Result<FitResult> {
    config.em.validate()?;
    let candidates = config
        .candidates
        .clone()
        .unwrap_or_else(|| all_candidates(start));
    if candidates.len() != start.num_variables() {
        return Err(Error::InvalidModel("one candidate pool per variable required".into()));
    }
    let w = sample_size(data, config.sample_size);
    let mut model = start.clone();
    let mut trace = Vec::new();
    let mut score_trace = Vec::new();
    let mut previous = None;
    let mut rounds = 0;
    loop {
        let run = em_run(model, data, &config.em, config.em_steps.max(1), previous)?;
        trace.extend_from_slice(&run.trace);
        let exp = run.expectation;
        let score = exp.log_likelihood - bic_penalty(&run.model, w);
        score_trace.push(score);
        let parents = structure_search(&exp, &run.model, &candidates, config.max_parents, w)?;
        let stable = (0..parents.len()).all(|v| parents[v] == run.model.parents(v));
        rounds += 1;
        if stable && run.converged {
            return Ok(FitResult {
                model: run.model,
                trace,
                statistics: exp.statistics,
                converged: true,
                score_trace,
            });
        }
        if rounds >= config.max_rounds {
            return Ok(FitResult {
                model: run.model,
                trace,
                statistics: exp.statistics,
                converged: false,
                score_trace,
            });
        }
        if stable {
            previous = Some(exp.log_likelihood);
            model = m_step(&exp.statistics, &run.model, config.em.freeze_initial)?;
        } else {
            previous = None;
            model = restructure(&exp, &run.model, &parents, w)?;
            if !config.em.freeze_initial {
                let stats = aggregate_statistics(&exp.flat, &exp.joint, &model);
                model = model.with_initial(ml_initial(&model, &stats))?;
            }
        }
    }
}

/// Structural EM from an empty graph with random parameters.
pub fn sem_from_scratch(
    template: &CtbnModel,
    data: &[ObservedTrajectory],
    config: &SemConfig,
) -> Result<FitResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.em.seed);
    let empty = without_edges(template)?;
    let mut start = random_parameters(&empty, config.em.rate_range, &mut rng)?;
    if config.em.freeze_initial {
        start = start.with_initial(template.initial_marginals().to_vec())?;
    }
    sem(&start, data, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Variable;

    fn q2(a: f64, b: f64) -> IntensityMatrix {
        IntensityMatrix::from_rows(&[vec![-a, a], vec![b, -b]], IntensityKind::Proper).unwrap()
    }

    #[test]
    fn m_step_quotients() {
        let support = DMatrix::from_fn(3, 3, |i, j| i != j);
        let dwell = DVector::from_vec(vec![6.0, 1.0, 0.0]);
        let moves = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 2.0, 0.0, 6.0, 0.0, 0.0, 0.0]);
        let q = ml_intensity(&dwell, &moves, &support, &[9.0, 9.0, 4.0]);
        assert!((q.exit_rate(0) - 0.5).abs() < 1e-15);
        assert!((q.rate(1, 0) / q.exit_rate(1) - 0.25).abs() < 1e-15);
        assert!((q.rate(1, 2) / q.exit_rate(1) - 0.75).abs() < 1e-15);
        // Unvisited row keeps its rate and branches uniformly.
        assert_eq!(q.exit_rate(2), 4.0);
        assert_eq!(q.rate(2, 0), 2.0);
    }

    #[test]
    fn bic_single_cell() {
        let mut support = DMatrix::from_element(2, 2, false);
        support[(0, 1)] = true;
        let cim = Cim::with_structure(
            vec![],
            vec![q2(1.0, 0.0)],
            vec![support],
            vec![DVector::from_element(2, 1.0)],
            false,
        );
        let table = FamilyTable::new(
            vec![],
            vec![DVector::from_vec(vec![2.0, 0.0])],
            vec![DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])],
        );
        let (score, m) = family_bic(0, &cim, &table, &[q2(1.0, 0.0)], 2f64.exp()).unwrap();
        assert!((score - (-2.6931471806)).abs() < 1e-10);
        assert!((m[0].rate(0, 1) - 0.5).abs() < 1e-15);
        let (score, _) = family_bic(0, &cim, &table, &[q2(1.0, 0.0)], 1.0).unwrap();
        assert!((score - (-1.6931471806)).abs() < 1e-10);
    }

    #[test]
    fn parent_set_enumeration_order() {
        assert_eq!(parent_sets(&[2, 0, 1], 0), vec![Vec::<usize>::new()]);
        assert_eq!(
            parent_sets(&[2, 0, 1], 2),
            vec![
                vec![],
                vec![0],
                vec![1],
                vec![2],
                vec![0, 1],
                vec![0, 2],
                vec![1, 2]
            ]
        );
    }

    #[test]
    fn empty_dataset_gives_zero_statistics() {
        let model = CtbnModel::new(
            vec![Variable::new("X", ["a", "b"]).unwrap()],
            vec![Cim::new(vec![], vec![q2(1.0, 2.0)])],
            vec![StateDistribution::uniform(2)],
        )
        .unwrap();
        let (stats, ll) = e_step(&model, &[]).unwrap();
        assert_eq!(ll, 0.0);
        assert_eq!(stats, FamilyStatistics::zeros(&model));
    }
}
