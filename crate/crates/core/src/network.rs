//! Factored processes: variables, conditional intensity matrices, and the flat
//! joint process they define.
//!
//! A variable may carry several hidden phases per state. Its conditional
//! intensity matrices then live on the *local* space of (state, phase) pairs,
//! while children and evidence only ever see the state.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::evidence::{Evidence, EvidenceSegment, ObservedSegment, ObservedTrajectory, Subsystem};
use crate::inference::FlatStatistics;
use crate::markov::{CompleteTrajectory, IntensityKind, IntensityMatrix, StateDistribution};
use crate::sum::Compensated;
use crate::{Error, Result};

/// Largest joint space [`amalgamate`] builds unless told otherwise.
pub const DEFAULT_JOINT_CAP: usize = 4096;

const ENTRY_TOLERANCE: f64 = 1e-9;

/// A discrete variable, optionally with hidden phases inside each state.
#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    name: String,
    states: Vec<String>,
    phases: Vec<usize>,
    offsets: Vec<usize>,
    state_of_local: Vec<usize>,
}

impl Variable {
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        states: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        let phases = vec![1; states.len()];
        Self::with_phases(name, states, phases)
    }

    pub fn with_phases<S: Into<String>>(
        name: impl Into<String>,
        states: impl IntoIterator<Item = S>,
        phases: Vec<usize>,
    ) -> Result<Self> {
        let name = name.into();
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        if states.len() < 2 {
            return Err(Error::InvalidModel(format!(
                "variable {name} needs at least two states"
            )));
        }
        let distinct: HashSet<&String> = states.iter().collect();
        if distinct.len() != states.len() {
            return Err(Error::InvalidModel(format!(
                "variable {name} has repeated state labels"
            )));
        }
        if phases.len() != states.len() || phases.contains(&0) {
            return Err(Error::InvalidModel(format!(
                "variable {name} needs a positive phase count for each state"
            )));
        }
        let mut offsets = Vec::with_capacity(states.len());
        let mut state_of_local = Vec::new();
        for (x, &p) in phases.iter().enumerate() {
            offsets.push(state_of_local.len());
            state_of_local.extend(std::iter::repeat_n(x, p));
        }
        Ok(Self {
            name,
            states,
            phases,
            offsets,
            state_of_local,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    /// Number of observable states.
    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn phases(&self) -> &[usize] {
        &self.phases
    }

    pub fn has_phases(&self) -> bool {
        self.phases.iter().any(|&p| p > 1)
    }

    /// Number of (state, phase) pairs.
    pub fn local_dim(&self) -> usize {
        self.state_of_local.len()
    }

    pub fn local_index(&self, state: usize, phase: usize) -> usize {
        debug_assert!(phase < self.phases[state]);
        self.offsets[state] + phase
    }

    pub fn state_of(&self, local: usize) -> usize {
        self.state_of_local[local]
    }

    pub fn phase_of(&self, local: usize) -> usize {
        local - self.offsets[self.state_of_local[local]]
    }

    /// Local indices belonging to `state`.
    pub fn block(&self, state: usize) -> std::ops::Range<usize> {
        self.offsets[state]..self.offsets[state] + self.phases[state]
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// Conditional intensity matrices of one variable, one per parent
/// instantiation.
///
/// `support` marks the off-diagonal entries that are free parameters; every
/// other off-diagonal entry is structurally zero. `entry` gives, per
/// instantiation, the distribution over phases used when a state is entered
/// because a parent changed and phases reset.
#[derive(Debug, Clone, PartialEq)]
pub struct Cim {
    parents: Vec<usize>,
    matrices: Vec<IntensityMatrix>,
    support: Vec<DMatrix<bool>>,
    entry: Vec<DVector<f64>>,
    reset_on_parent_change: bool,
}

impl Cim {
    /// Every off-diagonal entry is free; phases (if any) are entered at the
    /// first phase.
    pub fn new(parents: Vec<usize>, matrices: Vec<IntensityMatrix>) -> Self {
        let support = matrices
            .iter()
            .map(|m| DMatrix::from_fn(m.dim(), m.dim(), |i, j| i != j))
            .collect();
        Self {
            parents,
            matrices,
            support,
            entry: Vec::new(),
            reset_on_parent_change: false,
        }
    }

    pub fn with_structure(
        parents: Vec<usize>,
        matrices: Vec<IntensityMatrix>,
        support: Vec<DMatrix<bool>>,
        entry: Vec<DVector<f64>>,
        reset_on_parent_change: bool,
    ) -> Self {
        Self {
            parents,
            matrices,
            support,
            entry,
            reset_on_parent_change,
        }
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn num_instantiations(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[IntensityMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, u: usize) -> &IntensityMatrix {
        &self.matrices[u]
    }

    pub fn support(&self, u: usize) -> &DMatrix<bool> {
        &self.support[u]
    }

    pub fn entry(&self, u: usize) -> &DVector<f64> {
        &self.entry[u]
    }

    pub fn reset_on_parent_change(&self) -> bool {
        self.reset_on_parent_change
    }

    /// Whether every instantiation shares one support and entry policy.
    pub fn is_uniform(&self) -> bool {
        self.support.iter().all(|s| s == &self.support[0])
            && self.entry.iter().all(|e| e == &self.entry[0])
    }

    /// Same structure with new parameters.
    pub fn with_matrices(&self, matrices: Vec<IntensityMatrix>) -> Self {
        Self {
            matrices,
            ..self.clone()
        }
    }

    /// Free off-diagonal entries, summed over instantiations.
    pub fn free_parameters(&self) -> usize {
        self.support
            .iter()
            .map(|s| s.iter().filter(|&&b| b).count())
            .sum()
    }
}

pub(crate) fn first_phase_entry(var: &Variable) -> DVector<f64> {
    let mut e = DVector::zeros(var.local_dim());
    for x in 0..var.cardinality() {
        e[var.local_index(x, 0)] = 1.0;
    }
    e
}

/// Number of joint assignments of `parents`.
pub fn instantiation_count(variables: &[Variable], parents: &[usize]) -> usize {
    parents.iter().map(|&p| variables[p].cardinality()).product()
}

/// Index of the parent assignment read off a full state vector. The first
/// parent varies slowest.
pub fn instantiation_index(variables: &[Variable], parents: &[usize], states: &[usize]) -> usize {
    parents
        .iter()
        .fold(0, |acc, &p| acc * variables[p].cardinality() + states[p])
}

/// Parent states for instantiation `u`, in parent order.
pub fn decode_instantiation(variables: &[Variable], parents: &[usize], mut u: usize) -> Vec<usize> {
    let mut out = vec![0; parents.len()];
    for (slot, &p) in parents.iter().enumerate().rev() {
        let c = variables[p].cardinality();
        out[slot] = u % c;
        u /= c;
    }
    out
}

/// A continuous-time Bayesian network with independent initial marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct CtbnModel {
    variables: Vec<Variable>,
    cims: Vec<Cim>,
    initial: Vec<StateDistribution>,
}

impl CtbnModel {
    /// Validates and assembles a model. Missing entry distributions default to
    /// the first phase of each state.
    pub fn new(
        variables: Vec<Variable>,
        mut cims: Vec<Cim>,
        initial: Vec<StateDistribution>,
    ) -> Result<Self> {
        let k = variables.len();
        if k == 0 {
            return Err(Error::InvalidModel("model has no variables".into()));
        }
        let names: HashSet<&str> = variables.iter().map(|v| v.name()).collect();
        if names.len() != k {
            return Err(Error::InvalidModel("variable names must be distinct".into()));
        }
        if cims.len() != k || initial.len() != k {
            return Err(Error::InvalidModel(format!(
                "{k} variables but {} CIMs and {} initial marginals",
                cims.len(),
                initial.len()
            )));
        }
        for (v, cim) in cims.iter_mut().enumerate() {
            let var = &variables[v];
            let name = var.name();
            let mut seen = HashSet::new();
            for &p in &cim.parents {
                if p >= k || p == v || !seen.insert(p) {
                    return Err(Error::InvalidModel(format!(
                        "variable {name} has an invalid parent list"
                    )));
                }
            }
            let count = instantiation_count(&variables, &cim.parents);
            if cim.matrices.len() != count {
                return Err(Error::InvalidModel(format!(
                    "variable {name} needs {count} intensity matrices, found {}",
                    cim.matrices.len()
                )));
            }
            if cim.entry.is_empty() {
                cim.entry = vec![first_phase_entry(var); count];
            }
            if cim.support.len() != count || cim.entry.len() != count {
                return Err(Error::InvalidModel(format!(
                    "variable {name} has mismatched support or entry tables"
                )));
            }
            let dim = var.local_dim();
            for u in 0..count {
                let m = &cim.matrices[u];
                if m.dim() != dim || m.kind() != IntensityKind::Proper {
                    return Err(Error::InvalidModel(format!(
                        "variable {name}: matrix {u} must be a proper {dim}x{dim} intensity matrix"
                    )));
                }
                let s = &cim.support[u];
                if s.nrows() != dim || s.ncols() != dim {
                    return Err(Error::InvalidModel(format!(
                        "variable {name}: support {u} has the wrong shape"
                    )));
                }
                for i in 0..dim {
                    if s[(i, i)] {
                        return Err(Error::InvalidModel(format!(
                            "variable {name}: support {u} marks a diagonal entry"
                        )));
                    }
                    for j in 0..dim {
                        if i != j && m.rate(i, j) > 0.0 && !s[(i, j)] {
                            return Err(Error::InvalidModel(format!(
                                "variable {name}: matrix {u} has a rate outside its support at ({i}, {j})"
                            )));
                        }
                    }
                }
                let e = &cim.entry[u];
                if e.len() != dim || e.iter().any(|&w| !(w >= 0.0)) {
                    return Err(Error::InvalidModel(format!(
                        "variable {name}: entry distribution {u} is invalid"
                    )));
                }
                for x in 0..var.cardinality() {
                    let total: f64 = var.block(x).map(|l| e[l]).sum();
                    if (total - 1.0).abs() > ENTRY_TOLERANCE {
                        return Err(Error::InvalidModel(format!(
                            "variable {name}: entry weights of state {x} sum to {total}"
                        )));
                    }
                }
            }
            if initial[v].len() != dim {
                return Err(Error::InvalidModel(format!(
                    "variable {name}: initial marginal has {} entries, expected {dim}",
                    initial[v].len()
                )));
            }
        }
        Ok(Self {
            variables,
            cims,
            initial,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, v: usize) -> &Variable {
        &self.variables[v]
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name() == name)
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        self.cims[v].parents()
    }

    pub fn cims(&self) -> &[Cim] {
        &self.cims
    }

    pub fn cim(&self, v: usize) -> &Cim {
        &self.cims[v]
    }

    pub fn initial(&self, v: usize) -> &StateDistribution {
        &self.initial[v]
    }

    pub fn initial_marginals(&self) -> &[StateDistribution] {
        &self.initial
    }

    /// `(parent, child)` pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.num_variables())
            .flat_map(|c| self.parents(c).iter().map(move |&p| (p, c)))
            .collect()
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        (0..self.num_variables())
            .filter(|&c| self.parents(c).contains(&v))
            .collect()
    }

    /// Replaces the CIMs, keeping variables and initial marginals.
    pub fn with_cims(&self, cims: Vec<Cim>) -> Result<Self> {
        Self::new(self.variables.clone(), cims, self.initial.clone())
    }

    pub fn with_initial(&self, initial: Vec<StateDistribution>) -> Result<Self> {
        Self::new(self.variables.clone(), self.cims.clone(), initial)
    }

    /// Number of joint (state, phase) configurations.
    pub fn joint_size(&self) -> usize {
        self.variables
            .iter()
            .map(|v| v.local_dim())
            .try_fold(1usize, |acc, d| acc.checked_mul(d))
            .unwrap_or(usize::MAX)
    }
}

/// Number of free off-diagonal entries across all CIMs.
pub fn count_parameters(model: &CtbnModel) -> usize {
    model.cims().iter().map(Cim::free_parameters).sum()
}

/// Mixed-radix indexing of the joint (state, phase) space; variable 0 varies
/// slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpace {
    dims: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
    locals: Vec<usize>,
    states: Vec<usize>,
    cardinalities: Vec<usize>,
}

impl JointSpace {
    pub fn new(model: &CtbnModel, cap: usize) -> Result<Self> {
        let size = model.joint_size();
        if size > cap {
            return Err(Error::JointSpaceTooLarge { size, cap });
        }
        let k = model.num_variables();
        let dims: Vec<usize> = model.variables().iter().map(|v| v.local_dim()).collect();
        let mut strides = vec![1; k];
        for x in (0..k.saturating_sub(1)).rev() {
            strides[x] = strides[x + 1] * dims[x + 1];
        }
        let mut locals = Vec::with_capacity(size * k);
        let mut states = Vec::with_capacity(size * k);
        for j in 0..size {
            for x in 0..k {
                let l = (j / strides[x]) % dims[x];
                locals.push(l);
                states.push(model.variable(x).state_of(l));
            }
        }
        Ok(Self {
            dims,
            strides,
            size,
            locals,
            states,
            cardinalities: model.variables().iter().map(|v| v.cardinality()).collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn num_variables(&self) -> usize {
        self.dims.len()
    }

    pub fn encode(&self, locals: &[usize]) -> usize {
        locals.iter().zip(&self.strides).map(|(l, s)| l * s).sum()
    }

    /// Local (state, phase) index of every variable in joint state `j`.
    pub fn locals(&self, j: usize) -> &[usize] {
        let k = self.num_variables();
        &self.locals[j * k..(j + 1) * k]
    }

    /// Observable state of every variable in joint state `j`.
    pub fn states(&self, j: usize) -> &[usize] {
        let k = self.num_variables();
        &self.states[j * k..(j + 1) * k]
    }

    pub fn consistent(&self, j: usize, values: &[Option<usize>]) -> bool {
        self.states(j)
            .iter()
            .zip(values)
            .all(|(s, v)| v.is_none_or(|v| v == *s))
    }

    /// Joint states whose observable coordinates agree with `values`.
    pub fn subsystem(&self, values: &[Option<usize>]) -> Result<Subsystem> {
        if values.len() != self.num_variables() {
            return Err(Error::DimensionMismatch {
                expected: self.num_variables(),
                found: values.len(),
            });
        }
        for (x, v) in values.iter().enumerate() {
            if let Some(v) = v {
                if *v >= self.cardinalities[x] {
                    return Err(Error::StateOutOfRange {
                        state: *v,
                        n: self.cardinalities[x],
                    });
                }
            }
        }
        let members: Vec<usize> = (0..self.size)
            .filter(|&j| self.consistent(j, values))
            .collect();
        Subsystem::new(self.size, members)
    }

    /// Evidence on the joint process; phases are never observed.
    pub fn evidence(&self, observed: &ObservedTrajectory) -> Result<Evidence> {
        let segments = observed
            .segments()
            .iter()
            .map(|s| {
                Ok(EvidenceSegment {
                    subsystem: self.subsystem(&s.values)?,
                    start: s.start,
                    end: s.end,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Evidence::new(segments)
    }

    /// Records the observable states of a joint trajectory; phase moves are
    /// invisible and merge into the surrounding segment.
    pub fn observe(&self, trajectory: &CompleteTrajectory) -> ObservedTrajectory {
        let segments = trajectory
            .stays()
            .iter()
            .map(|s| ObservedSegment {
                start: s.start,
                end: s.end,
                values: self.states(s.state).iter().map(|&x| Some(x)).collect(),
            })
            .collect();
        ObservedTrajectory::new(segments)
            .expect("a complete trajectory is a valid observation")
            .merged()
    }

    /// Distribution of variable `x`'s state under a joint distribution.
    pub fn state_marginal(&self, dist: &[f64], x: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.cardinalities[x]];
        for (j, &p) in dist.iter().enumerate() {
            out[self.states(j)[x]] += p;
        }
        out
    }

    /// Distribution of variable `x`'s (state, phase) index.
    pub fn local_marginal(&self, dist: &[f64], x: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dims[x]];
        for (j, &p) in dist.iter().enumerate() {
            out[self.locals(j)[x]] += p;
        }
        out
    }

    /// The variable responsible for a joint transition `j -> k`.
    ///
    /// Exactly one variable changes state (others may only have their phase
    /// reset), or no state changes and exactly one variable changes phase.
    pub fn mover(&self, j: usize, k: usize) -> Option<usize> {
        let (lj, lk) = (self.locals(j), self.locals(k));
        let (sj, sk) = (self.states(j), self.states(k));
        let mut state_moves = 0;
        let mut state_var = 0;
        let mut local_moves = 0;
        let mut local_var = 0;
        for x in 0..self.num_variables() {
            if lj[x] != lk[x] {
                local_moves += 1;
                local_var = x;
                if sj[x] != sk[x] {
                    state_moves += 1;
                    state_var = x;
                }
            }
        }
        match (state_moves, local_moves) {
            (1, _) => Some(state_var),
            (0, 1) => Some(local_var),
            _ => None,
        }
    }
}

/// The flat process of a model.
#[derive(Debug, Clone)]
pub struct Amalgamation {
    pub joint: JointSpace,
    pub intensity: IntensityMatrix,
    pub initial: StateDistribution,
}

pub fn amalgamate(model: &CtbnModel) -> Result<Amalgamation> {
    amalgamate_with_cap(model, DEFAULT_JOINT_CAP)
}

/// Builds the joint intensity matrix. A transition changes one variable; if
/// that variable's state changes, children that reset on parent changes
/// re-enter their current state according to their entry distribution.
pub fn amalgamate_with_cap(model: &CtbnModel, cap: usize) -> Result<Amalgamation> {
    let joint = JointSpace::new(model, cap)?;
    let n = joint.size();
    let k = model.num_variables();
    let vars = model.variables();
    let reset_children: Vec<Vec<usize>> = (0..k)
        .map(|x| {
            model
                .children(x)
                .into_iter()
                .filter(|&c| model.cim(c).reset_on_parent_change())
                .collect()
        })
        .collect();

    let mut rates = DMatrix::<f64>::zeros(n, n);
    let mut targets: Vec<(Vec<usize>, f64)> = Vec::new();
    for j in 0..n {
        let locals = joint.locals(j);
        let states = joint.states(j);
        for x in 0..k {
            let cim = model.cim(x);
            let u = instantiation_index(vars, cim.parents(), states);
            let q = cim.matrix(u);
            let l = locals[x];
            for l2 in 0..vars[x].local_dim() {
                let r = if l2 == l { 0.0 } else { q.rate(l, l2) };
                if r == 0.0 {
                    continue;
                }
                let mut target = locals.to_vec();
                target[x] = l2;
                let new_state = vars[x].state_of(l2);
                if new_state == states[x] || reset_children[x].is_empty() {
                    rates[(j, joint.encode(&target))] += r;
                    continue;
                }
                let mut new_states = states.to_vec();
                new_states[x] = new_state;
                targets.clear();
                targets.push((target, 1.0));
                for &c in &reset_children[x] {
                    let child = model.cim(c);
                    let uc = instantiation_index(vars, child.parents(), &new_states);
                    let entry = child.entry(uc);
                    let mut next = Vec::new();
                    for (t, w) in &targets {
                        for lc in vars[c].block(new_states[c]) {
                            if entry[lc] > 0.0 {
                                let mut t2 = t.clone();
                                t2[c] = lc;
                                next.push((t2, w * entry[lc]));
                            }
                        }
                    }
                    targets = next;
                }
                for (t, w) in &targets {
                    rates[(j, joint.encode(t))] += r * w;
                }
            }
        }
    }
    let intensity = IntensityMatrix::from_rates(rates)?;
    let initial: Vec<f64> = (0..n)
        .map(|j| {
            joint
                .locals(j)
                .iter()
                .enumerate()
                .map(|(x, &l)| model.initial(x).probs()[l])
                .product()
        })
        .collect();
    Ok(Amalgamation {
        joint,
        intensity,
        initial: StateDistribution::new_unchecked(initial),
    })
}

/// Sufficient statistics of one family (a variable and a parent set), per
/// parent instantiation, over the variable's local (state, phase) space.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyTable {
    parents: Vec<usize>,
    dwell: Vec<DVector<f64>>,
    transitions: Vec<DMatrix<f64>>,
}

impl FamilyTable {
    pub fn zeros(variables: &[Variable], var: usize, parents: &[usize]) -> Self {
        let count = instantiation_count(variables, parents);
        let d = variables[var].local_dim();
        Self {
            parents: parents.to_vec(),
            dwell: vec![DVector::zeros(d); count],
            transitions: vec![DMatrix::zeros(d, d); count],
        }
    }

    pub fn new(parents: Vec<usize>, dwell: Vec<DVector<f64>>, transitions: Vec<DMatrix<f64>>) -> Self {
        Self {
            parents,
            dwell,
            transitions,
        }
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn num_instantiations(&self) -> usize {
        self.dwell.len()
    }

    /// Time spent in each local state under instantiation `u`.
    pub fn dwell(&self, u: usize) -> &DVector<f64> {
        &self.dwell[u]
    }

    /// Transition counts between local states under instantiation `u`.
    pub fn transitions(&self, u: usize) -> &DMatrix<f64> {
        &self.transitions[u]
    }

    /// Number of departures from each local state under `u`.
    pub fn departures(&self, u: usize) -> DVector<f64> {
        let m = &self.transitions[u];
        DVector::from_fn(m.nrows(), |i, _| m.row(i).sum())
    }

    pub fn total_time(&self) -> f64 {
        self.dwell.iter().map(|d| d.sum()).sum()
    }
}

/// Per-variable family tables plus the time-0 posterior of each variable.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyStatistics {
    families: Vec<FamilyTable>,
    initial: Vec<DVector<f64>>,
}

impl FamilyStatistics {
    pub fn new(families: Vec<FamilyTable>, initial: Vec<DVector<f64>>) -> Self {
        Self { families, initial }
    }

    pub fn zeros(model: &CtbnModel) -> Self {
        let vars = model.variables();
        Self {
            families: (0..vars.len())
                .map(|v| FamilyTable::zeros(vars, v, model.parents(v)))
                .collect(),
            initial: vars.iter().map(|v| DVector::zeros(v.local_dim())).collect(),
        }
    }

    pub fn families(&self) -> &[FamilyTable] {
        &self.families
    }

    pub fn family(&self, v: usize) -> &FamilyTable {
        &self.families[v]
    }

    /// Expected number of trajectories starting in each local state.
    pub fn initial(&self, v: usize) -> &DVector<f64> {
        &self.initial[v]
    }
}

/// Sums flat statistics into the family of `var` with the given parents.
pub fn aggregate_family(
    flat: &FlatStatistics,
    joint: &JointSpace,
    variables: &[Variable],
    var: usize,
    parents: &[usize],
) -> FamilyTable {
    let n = joint.size();
    let mut table = FamilyTable::zeros(variables, var, parents);
    let d = variables[var].local_dim();
    let count = table.num_instantiations();
    let mut dwell = vec![vec![Compensated::default(); d]; count];
    let mut moves = vec![vec![Compensated::default(); d * d]; count];
    for j in 0..n {
        let u = instantiation_index(variables, parents, joint.states(j));
        let l = joint.locals(j)[var];
        dwell[u][l].add(flat.dwell[j]);
        for k in 0..n {
            let m = flat.transitions[(j, k)];
            if m == 0.0 || j == k || joint.mover(j, k) != Some(var) {
                continue;
            }
            let l2 = joint.locals(k)[var];
            moves[u][l * d + l2].add(m);
        }
    }
    for u in 0..count {
        for l in 0..d {
            table.dwell[u][l] = dwell[u][l].value();
            for l2 in 0..d {
                table.transitions[u][(l, l2)] = moves[u][l * d + l2].value();
            }
        }
    }
    table
}

/// Family statistics for the model's own parent sets.
pub fn aggregate_statistics(
    flat: &FlatStatistics,
    joint: &JointSpace,
    model: &CtbnModel,
) -> FamilyStatistics {
    let vars = model.variables();
    let families = (0..vars.len())
        .map(|v| aggregate_family(flat, joint, vars, v, model.parents(v)))
        .collect();
    let initial = (0..vars.len())
        .map(|v| DVector::from_vec(joint.local_marginal(flat.initial.as_slice(), v)))
        .collect();
    FamilyStatistics { families, initial }
}

/// Expected log-likelihood of one family's statistics under `matrices`:
/// for each local row, departures times log exit rate, minus exit rate times
/// dwell, plus transition counts times log branching probability.
pub fn family_table_log_likelihood(
    var: usize,
    matrices: &[IntensityMatrix],
    table: &FamilyTable,
) -> Result<f64> {
    let mut acc = Compensated::default();
    for (u, q) in matrices.iter().enumerate() {
        let m = table.transitions(u);
        let t = table.dwell(u);
        for i in 0..q.dim() {
            let exit = q.exit_rate(i);
            acc.add(-exit * t[i]);
            for j in 0..q.dim() {
                if i == j || m[(i, j)] == 0.0 {
                    continue;
                }
                let r = q.rate(i, j);
                if r <= 0.0 {
                    return Err(Error::IncompatibleSupport {
                        variable: var,
                        instantiation: u,
                        state: i,
                    });
                }
                acc.add(m[(i, j)] * r.ln());
            }
        }
    }
    Ok(acc.value())
}

/// Summed expected transition log-likelihood over all families. The initial
/// state term is reported by [`initial_log_likelihood`].
pub fn family_log_likelihood(model: &CtbnModel, stats: &FamilyStatistics) -> Result<f64> {
    let mut total = 0.0;
    for v in 0..model.num_variables() {
        total += family_table_log_likelihood(v, model.cim(v).matrices(), stats.family(v))?;
    }
    Ok(total)
}

/// Expected log-probability of the initial states.
pub fn initial_log_likelihood(model: &CtbnModel, stats: &FamilyStatistics) -> f64 {
    let mut acc = Compensated::default();
    for v in 0..model.num_variables() {
        let p = model.initial(v).probs();
        for (l, &w) in stats.initial(v).iter().enumerate() {
            if w > 0.0 {
                acc.add(w * p[l].ln());
            }
        }
    }
    acc.value()
}
