//! Phase-type durations: absorption-time distributions of transient Markov
//! subsystems, and their use as state durations of network variables.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::markov::{matrix_exponential, IntensityKind, IntensityMatrix, StateDistribution};
use crate::network::{
    decode_instantiation, instantiation_count, instantiation_index, Cim, CtbnModel, JointSpace,
    Variable, DEFAULT_JOINT_CAP,
};
use crate::{Error, Result};

/// A row must leak at least this much intensity to count as an exit.
const EXIT_TOLERANCE: f64 = 1e-12;

/// Time to absorption of a process started in `entry` and moving over the
/// transient phases of `transient`; each row's missing mass is its exit rate.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDistribution {
    transient: IntensityMatrix,
    entry: StateDistribution,
}

impl PhaseDistribution {
    pub fn new(transient: IntensityMatrix, entry: StateDistribution) -> Result<Self> {
        if entry.len() != transient.dim() {
            return Err(Error::DimensionMismatch {
                expected: transient.dim(),
                found: entry.len(),
            });
        }
        let transient = IntensityMatrix::new(transient.into_matrix(), IntensityKind::Restricted)?;
        let has_exit = (0..transient.dim())
            .any(|i| -transient.matrix().row(i).sum() > EXIT_TOLERANCE);
        if !has_exit {
            return Err(Error::SingularTransientMatrix);
        }
        Ok(Self { transient, entry })
    }

    pub fn phases(&self) -> usize {
        self.transient.dim()
    }

    pub fn transient(&self) -> &IntensityMatrix {
        &self.transient
    }

    pub fn entry(&self) -> &StateDistribution {
        &self.entry
    }

    /// Rate of absorption from each phase.
    pub fn exit_rates(&self) -> DVector<f64> {
        let m = self.transient.matrix();
        DVector::from_fn(m.nrows(), |i, _| (-m.row(i).sum()).max(0.0))
    }

    /// The same shape, sped up or slowed down so the mean becomes `mean`.
    pub fn with_mean(&self, mean: f64) -> Result<Self> {
        let current = phase_mean(self)?;
        let scaled = self.transient.matrix() * (current / mean);
        Self::new(
            IntensityMatrix::new(scaled, IntensityKind::Restricted)?,
            self.entry.clone(),
        )
    }
}

/// Chain of `p` phases each left at rate `q`, entered at the first phase.
pub fn erlang(p: usize, q: f64) -> Result<PhaseDistribution> {
    if p == 0 || !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "Erlang distribution needs p >= 1 and q > 0 (got p = {p}, q = {q})"
        )));
    }
    let m = DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            -q
        } else if j == i + 1 {
            q
        } else {
            0.0
        }
    });
    PhaseDistribution::new(
        IntensityMatrix::new(m, IntensityKind::Restricted)?,
        StateDistribution::point_mass(p, 0),
    )
}

/// Density of the absorption time at `t`.
pub fn phase_density(d: &PhaseDistribution, t: f64) -> f64 {
    assert!(t >= 0.0, "time must be nonnegative");
    let e = matrix_exponential(d.transient.matrix(), t);
    let occupancy = e.tr_mul(&d.entry.to_vector());
    occupancy.dot(&d.exit_rates()).max(0.0)
}

/// Probability that absorption has not happened by `t`.
pub fn phase_survival(d: &PhaseDistribution, t: f64) -> f64 {
    let e = matrix_exponential(d.transient.matrix(), t);
    e.tr_mul(&d.entry.to_vector()).sum()
}

/// Expected absorption time, `entry · (-Q)⁻¹ · 1`.
pub fn phase_mean(d: &PhaseDistribution) -> Result<f64> {
    let neg = -d.transient.matrix();
    let ones = DVector::from_element(d.phases(), 1.0);
    let x = neg
        .lu()
        .solve(&ones)
        .ok_or(Error::SingularTransientMatrix)?;
    if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::SingularTransientMatrix);
    }
    Ok(d.entry.to_vector().dot(&x))
}

/// Which phase-to-phase moves are free within a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Topology {
    /// Phases in sequence; the state is entered at the first phase and left
    /// from the last.
    Chain,
    /// Any phase may move to any other and leave the state; states are
    /// entered uniformly over their phases.
    #[default]
    Unrestricted,
}

/// Phase layout of one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct VariablePhases {
    /// Phase count per state; states beyond the list get one phase.
    pub counts: Vec<usize>,
    pub topology: Topology,
    /// Whether a parent change sends the variable back to its entry phase.
    pub reset_on_parent_change: bool,
    /// Phase counts for particular parent instantiations.
    pub overrides: BTreeMap<usize, Vec<usize>>,
}

impl VariablePhases {
    pub fn uniform(states: usize, phases: usize, topology: Topology) -> Self {
        Self::per_state(vec![phases; states], topology)
    }

    pub fn per_state(counts: Vec<usize>, topology: Topology) -> Self {
        Self {
            counts,
            topology,
            reset_on_parent_change: false,
            overrides: BTreeMap::new(),
        }
    }

    pub fn resetting(mut self) -> Self {
        self.reset_on_parent_change = true;
        self
    }

    fn counts_for(&self, states: usize, u: usize) -> Result<Vec<usize>> {
        let list = self.overrides.get(&u).unwrap_or(&self.counts);
        if list.len() > states || list.contains(&0) {
            return Err(Error::InvalidModel(
                "phase counts must be positive and one per state".into(),
            ));
        }
        let mut out = list.clone();
        out.resize(states, 1);
        Ok(out)
    }
}

/// Phase layouts keyed by variable name; unnamed variables keep one phase.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseSpec {
    pub variables: BTreeMap<String, VariablePhases>,
}

impl PhaseSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, phases: VariablePhases) -> Self {
        self.variables.insert(name.into(), phases);
        self
    }

    /// `phases` per state for every variable of `model`.
    pub fn everywhere(model: &CtbnModel, phases: usize, topology: Topology) -> Self {
        let variables = model
            .variables()
            .iter()
            .map(|v| {
                (
                    v.name().to_string(),
                    VariablePhases::uniform(v.cardinality(), phases, topology),
                )
            })
            .collect();
        Self { variables }
    }
}

fn entry_vector(var: &Variable, counts: &[usize], topology: Topology) -> DVector<f64> {
    let mut e = DVector::zeros(var.local_dim());
    for (x, &c) in counts.iter().enumerate() {
        match topology {
            Topology::Chain => e[var.local_index(x, 0)] = 1.0,
            Topology::Unrestricted => {
                for k in 0..c {
                    e[var.local_index(x, k)] = 1.0 / c as f64;
                }
            }
        }
    }
    e
}

/// Expands one exponential-duration matrix into phases. Phases beyond
/// `counts` (present only because another instantiation uses more) are
/// unreachable and left without rates.
fn expand_matrix(
    var: &Variable,
    base: &IntensityMatrix,
    base_support: &DMatrix<bool>,
    counts: &[usize],
    topology: Topology,
    entry: &DVector<f64>,
) -> Result<(IntensityMatrix, DMatrix<bool>)> {
    let d = var.local_dim();
    let n = var.cardinality();
    let mut rates = DMatrix::<f64>::zeros(d, d);
    let mut support = DMatrix::from_element(d, d, false);
    for x in 0..n {
        let qx = base.exit_rate(x);
        let c = counts[x];
        match topology {
            Topology::Chain => {
                for k in 0..c - 1 {
                    let (a, b) = (var.local_index(x, k), var.local_index(x, k + 1));
                    rates[(a, b)] = qx;
                    support[(a, b)] = true;
                }
                let last = var.local_index(x, c - 1);
                for y in (0..n).filter(|&y| y != x) {
                    let target = var.local_index(y, 0);
                    rates[(last, target)] = base.rate(x, y);
                    support[(last, target)] = base_support[(x, y)];
                }
            }
            Topology::Unrestricted => {
                for k in 0..c {
                    let a = var.local_index(x, k);
                    for k2 in (0..c).filter(|&k2| k2 != k) {
                        let b = var.local_index(x, k2);
                        rates[(a, b)] = qx / (c - 1) as f64;
                        support[(a, b)] = true;
                    }
                    for y in (0..n).filter(|&y| y != x) {
                        for k2 in 0..counts[y] {
                            let b = var.local_index(y, k2);
                            rates[(a, b)] = base.rate(x, y) * entry[b];
                            support[(a, b)] = base_support[(x, y)];
                        }
                    }
                }
            }
        }
    }
    Ok((IntensityMatrix::from_rates(rates)?, support))
}

/// Replaces exponential state durations by phase-type ones.
///
/// Chains move through each state's phases at the state's original exit rate
/// and leave from the last phase with the original transition rates, entering
/// the next state at its first phase. Unrestricted layouts start with every
/// phase leaving at the original rates, so the state duration is unchanged
/// until the parameters are learned.
pub fn expand_phases(model: &CtbnModel, spec: &PhaseSpec) -> Result<CtbnModel> {
    for name in spec.variables.keys() {
        if model.index_of(name).is_none() {
            return Err(Error::InvalidModel(format!("unknown variable {name}")));
        }
    }
    let mut variables = Vec::with_capacity(model.num_variables());
    let mut cims = Vec::with_capacity(model.num_variables());
    let mut initial = Vec::with_capacity(model.num_variables());
    for v in 0..model.num_variables() {
        let base_var = model.variable(v);
        let cim = model.cim(v);
        let Some(layout) = spec.variables.get(base_var.name()) else {
            variables.push(base_var.clone());
            cims.push(cim.clone());
            initial.push(model.initial(v).clone());
            continue;
        };
        if base_var.has_phases() {
            return Err(Error::InvalidModel(format!(
                "variable {} already has phases",
                base_var.name()
            )));
        }
        let n = base_var.cardinality();
        let count = cim.num_instantiations();
        if let Some(&u) = layout.overrides.keys().find(|&&u| u >= count) {
            return Err(Error::InvalidModel(format!(
                "variable {} has no parent instantiation {u}",
                base_var.name()
            )));
        }
        let per_u: Vec<Vec<usize>> = (0..count)
            .map(|u| layout.counts_for(n, u))
            .collect::<Result<_>>()?;
        if !layout.reset_on_parent_change && per_u.iter().any(|c| c != &per_u[0]) {
            return Err(Error::InconsistentPhaseCounts {
                variable: base_var.name().to_string(),
            });
        }
        let max_counts: Vec<usize> = (0..n)
            .map(|x| per_u.iter().map(|c| c[x]).max().unwrap_or(1))
            .collect();
        let var = Variable::with_phases(base_var.name(), base_var.states().to_vec(), max_counts)?;
        let mut matrices = Vec::with_capacity(count);
        let mut supports = Vec::with_capacity(count);
        let mut entries = Vec::with_capacity(count);
        for (u, counts) in per_u.iter().enumerate() {
            let entry = entry_vector(&var, counts, layout.topology);
            let (m, s) = expand_matrix(
                &var,
                cim.matrix(u),
                cim.support(u),
                counts,
                layout.topology,
                &entry,
            )?;
            matrices.push(m);
            supports.push(s);
            entries.push(entry);
        }
        let start = &entries[0];
        let pi: Vec<f64> = (0..var.local_dim())
            .map(|l| model.initial(v).probs()[var.state_of(l)] * start[l])
            .collect();
        initial.push(StateDistribution::new_unchecked(pi));
        cims.push(Cim::with_structure(
            cim.parents().to_vec(),
            matrices,
            supports,
            entries,
            layout.reset_on_parent_change,
        ));
        variables.push(var);
    }
    CtbnModel::new(variables, cims, initial)
}

/// Result of folding a hidden parent into its child's phases.
#[derive(Debug, Clone)]
pub struct PhaseMerge {
    pub model: CtbnModel,
    /// Index of the merged variable in the new model.
    pub merged: usize,
    /// `bijection[j]` is the new joint index of old joint state `j`.
    pub bijection: Vec<usize>,
}

/// Merges hidden parent `h` into child `x`. The merged variable keeps `x`'s
/// name and states and has one phase per value of `h`; phase `(x, k)` means
/// `x` is in state `x` while `h = k`. Moves that would change both at once
/// stay structurally zero.
pub fn hidden_parent_to_phase(model: &CtbnModel, x: usize, h: usize) -> Result<PhaseMerge> {
    let k = model.num_variables();
    if x >= k || h >= k || x == h {
        return Err(Error::InvalidModel("invalid variable indices".into()));
    }
    if !model.parents(x).contains(&h) {
        return Err(Error::InvalidModel(format!(
            "{} is not a parent of {}",
            model.variable(h).name(),
            model.variable(x).name()
        )));
    }
    if model.children(h) != vec![x] {
        return Err(Error::InvalidModel(format!(
            "{} must have {} as its only child",
            model.variable(h).name(),
            model.variable(x).name()
        )));
    }
    if model.variable(x).has_phases() || model.variable(h).has_phases() {
        return Err(Error::InvalidModel("variables must not already have phases".into()));
    }
    let old_vars = model.variables();
    let nx = old_vars[x].cardinality();
    let nh = old_vars[h].cardinality();
    let renumber = |i: usize| if i > h { i - 1 } else { i };

    let merged_var = Variable::with_phases(
        old_vars[x].name(),
        old_vars[x].states().to_vec(),
        vec![nh; nx],
    )?;
    let mut new_vars: Vec<Variable> = Vec::with_capacity(k - 1);
    for (i, v) in old_vars.iter().enumerate() {
        if i == h {
            continue;
        }
        new_vars.push(if i == x { merged_var.clone() } else { v.clone() });
    }
    let merged = renumber(x);

    // Parents of the merged variable, as old indices in new-index order.
    let mut old_parents: Vec<usize> = model
        .parents(x)
        .iter()
        .chain(model.parents(h))
        .copied()
        .filter(|&p| p != x && p != h)
        .collect();
    old_parents.sort_unstable();
    old_parents.dedup();
    let new_parents: Vec<usize> = old_parents.iter().map(|&p| renumber(p)).collect();

    let cim_x = model.cim(x);
    let cim_h = model.cim(h);
    let count = instantiation_count(&new_vars, &new_parents);
    let d = nx * nh;
    let local = |xs: usize, hs: usize| xs * nh + hs;
    let mut matrices = Vec::with_capacity(count);
    let mut supports = Vec::with_capacity(count);
    for u in 0..count {
        let parent_states = decode_instantiation(&new_vars, &new_parents, u);
        let mut states = vec![0usize; k];
        for (&p, &s) in old_parents.iter().zip(&parent_states) {
            states[p] = s;
        }
        let mut rates = DMatrix::<f64>::zeros(d, d);
        let mut support = DMatrix::from_element(d, d, false);
        for xs in 0..nx {
            for hs in 0..nh {
                states[x] = xs;
                states[h] = hs;
                let ux = instantiation_index(old_vars, cim_x.parents(), &states);
                let uh = instantiation_index(old_vars, cim_h.parents(), &states);
                let from = local(xs, hs);
                for x2 in (0..nx).filter(|&x2| x2 != xs) {
                    rates[(from, local(x2, hs))] = cim_x.matrix(ux).rate(xs, x2);
                    support[(from, local(x2, hs))] = cim_x.support(ux)[(xs, x2)];
                }
                for h2 in (0..nh).filter(|&h2| h2 != hs) {
                    rates[(from, local(xs, h2))] = cim_h.matrix(uh).rate(hs, h2);
                    support[(from, local(xs, h2))] = cim_h.support(uh)[(hs, h2)];
                }
            }
        }
        matrices.push(IntensityMatrix::from_rates(rates)?);
        supports.push(support);
    }
    let entry = DVector::from_element(d, 1.0 / nh as f64);
    let merged_cim = Cim::with_structure(
        new_parents,
        matrices,
        supports,
        vec![entry; count],
        false,
    );

    let mut new_cims = Vec::with_capacity(k - 1);
    let mut new_initial = Vec::with_capacity(k - 1);
    for i in 0..k {
        if i == h {
            continue;
        }
        if i == x {
            new_cims.push(merged_cim.clone());
            let px = model.initial(x).probs();
            let ph = model.initial(h).probs();
            let pi = (0..d).map(|l| px[l / nh] * ph[l % nh]).collect();
            new_initial.push(StateDistribution::new_unchecked(pi));
            continue;
        }
        let cim = model.cim(i);
        let parents: Vec<usize> = cim.parents().iter().map(|&p| renumber(p)).collect();
        new_cims.push(Cim::with_structure(
            parents,
            cim.matrices().to_vec(),
            (0..cim.num_instantiations()).map(|u| cim.support(u).clone()).collect(),
            (0..cim.num_instantiations()).map(|u| cim.entry(u).clone()).collect(),
            cim.reset_on_parent_change(),
        ));
        new_initial.push(model.initial(i).clone());
    }
    let new_model = CtbnModel::new(new_vars, new_cims, new_initial)?;

    let old_joint = JointSpace::new(model, DEFAULT_JOINT_CAP)?;
    let new_joint = JointSpace::new(&new_model, DEFAULT_JOINT_CAP)?;
    let bijection = (0..old_joint.size())
        .map(|j| {
            let old = old_joint.locals(j);
            let new_locals: Vec<usize> = (0..k)
                .filter(|&i| i != h)
                .map(|i| if i == x { local(old[x], old[h]) } else { old[i] })
                .collect();
            new_joint.encode(&new_locals)
        })
        .collect();
    Ok(PhaseMerge {
        model: new_model,
        merged,
        bijection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{amalgamate, count_parameters};

    fn binary_model(a: f64, b: f64) -> CtbnModel {
        CtbnModel::new(
            vec![Variable::new("W", ["w1", "w2"]).unwrap()],
            vec![Cim::new(
                vec![],
                vec![IntensityMatrix::from_rows(&[vec![-a, a], vec![b, -b]], IntensityKind::Proper)
                    .unwrap()],
            )],
            vec![StateDistribution::uniform(2)],
        )
        .unwrap()
    }

    #[test]
    fn single_phase_is_exponential() {
        let d = erlang(1, 2.0).unwrap();
        assert_eq!(d.transient().matrix(), &DMatrix::from_element(1, 1, -2.0));
        assert!((phase_density(&d, 0.5) - 0.7357588823).abs() < 1e-10);
    }

    #[test]
    fn erlang_three_values() {
        let d = erlang(3, 3.0).unwrap();
        assert!((phase_mean(&d).unwrap() - 1.0).abs() < 1e-12);
        assert!((phase_density(&d, 1.0) - 0.6721254230).abs() < 1e-10);
        let d = erlang(3, 1.0).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -1.0]);
        assert_eq!(d.transient().matrix(), &expected);
    }

    #[test]
    fn absorbing_loop_without_exit_is_rejected() {
        let m = IntensityMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]], IntensityKind::Restricted)
            .unwrap();
        assert_eq!(
            PhaseDistribution::new(m, StateDistribution::point_mass(2, 0)).unwrap_err(),
            Error::SingularTransientMatrix
        );
    }

    #[test]
    fn unreachable_absorption_has_no_mean() {
        let m = IntensityMatrix::from_rows(
            &[vec![-1.0, 0.0, 0.0], vec![0.0, -1.0, 1.0], vec![0.0, 1.0, -1.0]],
            IntensityKind::Restricted,
        )
        .unwrap();
        let d = PhaseDistribution::new(m, StateDistribution::point_mass(3, 1)).unwrap();
        assert_eq!(phase_mean(&d).unwrap_err(), Error::SingularTransientMatrix);
    }

    #[test]
    fn chain_expansion_reproduces_erlang_matrix() {
        let spec = PhaseSpec::new().with("W", VariablePhases::uniform(2, 3, Topology::Chain));
        let expanded = expand_phases(&binary_model(1.0, 2.0), &spec).unwrap();
        let q = expanded.cim(0).matrix(0).matrix().clone();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(6, 6, &[
            -1.0, 1.0, 0.0, 0.0, 0.0, 0.0,
            0.0, -1.0, 1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, -1.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 0.0, -2.0, 2.0, 0.0,
            0.0, 0.0, 0.0, 0.0, -2.0, 2.0,
            2.0, 0.0, 0.0, 0.0, 0.0, -2.0,
        ]);
        assert_eq!(q, expected);
        assert_eq!(count_parameters(&expanded), 6);
        assert_eq!(expanded.initial(0).probs(), &[0.5, 0.0, 0.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn unrestricted_expansion_counts_every_entry() {
        let spec = PhaseSpec::new().with("W", VariablePhases::uniform(2, 3, Topology::Unrestricted));
        let expanded = expand_phases(&binary_model(1.0, 2.0), &spec).unwrap();
        assert_eq!(count_parameters(&expanded), 30);
        // Every phase leaves w1 at the original rate.
        let q = expanded.cim(0).matrix(0);
        for l in 0..3 {
            let out: f64 = (3..6).map(|m| q.rate(l, m)).sum();
            assert!((out - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_phase_spec_changes_nothing() {
        let model = binary_model(1.0, 2.0);
        let spec = PhaseSpec::everywhere(&model, 1, Topology::Chain);
        assert_eq!(expand_phases(&model, &spec).unwrap(), model);
    }

    #[test]
    fn first_passage_matches_erlang_density() {
        let spec = PhaseSpec::new().with("W", VariablePhases::uniform(2, 3, Topology::Chain));
        let expanded = expand_phases(&binary_model(1.0, 2.0), &spec).unwrap();
        let flat = amalgamate(&expanded).unwrap();
        let block = flat.intensity.matrix().view((0, 0), (3, 3)).clone_owned();
        let exits = DVector::from_fn(3, |i, _| (3..6).map(|j| flat.intensity.rate(i, j)).sum());
        let reference = erlang(3, 1.0).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let e = matrix_exponential(&block, t);
            let density = e.row(0).transpose().dot(&exits);
            assert!((density - phase_density(&reference, t)).abs() < 1e-10);
        }
    }

    #[test]
    fn inconsistent_counts_need_reset() {
        let parent = Variable::new("P", ["a", "b"]).unwrap();
        let child = Variable::new("W", ["w1", "w2"]).unwrap();
        let q = IntensityMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]], IntensityKind::Proper)
            .unwrap();
        let model = CtbnModel::new(
            vec![parent, child],
            vec![
                Cim::new(vec![], vec![q.clone()]),
                Cim::new(vec![0], vec![q.clone(), q]),
            ],
            vec![StateDistribution::uniform(2); 2],
        )
        .unwrap();
        let mut layout = VariablePhases::uniform(2, 2, Topology::Chain);
        layout.overrides.insert(1, vec![3, 2]);
        let spec = PhaseSpec::new().with("W", layout.clone());
        assert_eq!(
            expand_phases(&model, &spec).unwrap_err(),
            Error::InconsistentPhaseCounts {
                variable: "W".into()
            }
        );
        let spec = PhaseSpec::new().with("W", layout.resetting());
        let expanded = expand_phases(&model, &spec).unwrap();
        assert_eq!(expanded.variable(1).phases(), &[3, 2]);
        // Under P = a the third phase of w1 is never used.
        let q0 = expanded.cim(1).matrix(0);
        assert_eq!(q0.exit_rate(2), 0.0);
        assert!((0..5).all(|l| q0.rate(l, 2) == 0.0));
        let flat = amalgamate(&expanded).unwrap();
        // P flips a -> b while W sits in w1 phase 2: W resets to phase 1.
        let j = &flat.joint;
        let from = j.encode(&[0, 1]);
        assert_eq!(flat.intensity.rate(from, j.encode(&[1, 0])), 1.0);
        assert_eq!(flat.intensity.rate(from, j.encode(&[1, 1])), 0.0);
    }
}
