//! Versioned JSON documents for models and trajectory datasets.
//!
//! Model documents list variables, `[parent, child]` edges (a child's parent
//! order is the order its edges appear), one rate matrix per parent
//! instantiation keyed by parent labels, and initial marginals. Trajectory
//! documents hold records of contiguous segments whose observations map every
//! variable to a state label or `null` for hidden.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::evidence::{ObservedSegment, ObservedTrajectory};
use crate::markov::{IntensityKind, IntensityMatrix, StateDistribution};
use crate::network::{
    decode_instantiation, first_phase_entry, instantiation_count, Cim, CtbnModel, Variable,
};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    version: u32,
    variables: Vec<VariableDoc>,
    edges: Vec<[String; 2]>,
    cims: Vec<CimDoc>,
    initial: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDoc {
    name: String,
    states: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phases: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CimDoc {
    variable: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    reset_on_parent_change: bool,
    entries: Vec<CimEntryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CimEntryDoc {
    given: BTreeMap<String, String>,
    rates: Vec<Vec<f64>>,
    /// Free off-diagonal entries as `[row, column]`; absent means all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    free: Option<Vec<[usize; 2]>>,
    /// Phase entry weights; absent means the first phase of each state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entry: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryDoc {
    version: u32,
    records: Vec<RecordDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordDoc {
    segments: Vec<SegmentDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentDoc {
    start: f64,
    end: f64,
    observations: BTreeMap<String, Option<String>>,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: Option<u32>,
}

fn check_version(text: &str) -> Result<()> {
    let probe: VersionProbe = serde_json::from_str(text).map_err(json_error)?;
    match probe.version {
        Some(FORMAT_VERSION) => Ok(()),
        Some(v) => Err(Error::UnsupportedVersion(v)),
        None => Err(Error::Parse("missing field `version`".into())),
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

fn field(context: &str, message: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{context}: {message}"))
}

fn to_text<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents always serialise");
    s.push('\n');
    s
}

/// Parses a model document.
pub fn parse_model(text: &str) -> Result<CtbnModel> {
    check_version(text)?;
    let doc: ModelDoc = serde_json::from_str(text).map_err(json_error)?;
    let variables = doc
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let phases = v.phases.clone().unwrap_or_else(|| vec![1; v.states.len()]);
            Variable::with_phases(v.name.clone(), v.states.clone(), phases)
                .map_err(|e| field(&format!("variables[{i}]"), e))
        })
        .collect::<Result<Vec<_>>>()?;
    let index = |name: &str, context: &str| {
        variables
            .iter()
            .position(|v| v.name() == name)
            .ok_or_else(|| field(context, format!("unknown variable `{name}`")))
    };

    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); variables.len()];
    for (i, [p, c]) in doc.edges.iter().enumerate() {
        let context = format!("edges[{i}]");
        let (p, c) = (index(p, &context)?, index(c, &context)?);
        if parents[c].contains(&p) || p == c {
            return Err(field(&context, "repeated edge or self-loop"));
        }
        parents[c].push(p);
    }

    let mut cims: Vec<Option<Cim>> = vec![None; variables.len()];
    for (i, cim_doc) in doc.cims.iter().enumerate() {
        let context = format!("cims[{i}]");
        let v = index(&cim_doc.variable, &context)?;
        if cims[v].is_some() {
            return Err(field(&context, "second CIM for the same variable"));
        }
        cims[v] = Some(parse_cim(&variables, v, &parents[v], cim_doc, &context)?);
    }
    let cims = cims
        .into_iter()
        .enumerate()
        .map(|(v, c)| c.ok_or_else(|| field("cims", format!("no CIM for `{}`", variables[v].name()))))
        .collect::<Result<Vec<_>>>()?;

    let mut initial = Vec::with_capacity(variables.len());
    for v in &variables {
        let probs = doc
            .initial
            .get(v.name())
            .ok_or_else(|| field("initial", format!("no marginal for `{}`", v.name())))?;
        initial.push(
            StateDistribution::new(probs.clone())
                .map_err(|e| field(&format!("initial.{}", v.name()), e))?,
        );
    }
    if doc.initial.len() != variables.len() {
        return Err(field("initial", "marginal for an unknown variable"));
    }
    CtbnModel::new(variables, cims, initial).map_err(|e| Error::Parse(e.to_string()))
}

fn parse_cim(
    variables: &[Variable],
    v: usize,
    parents: &[usize],
    doc: &CimDoc,
    context: &str,
) -> Result<Cim> {
    let var = &variables[v];
    let count = instantiation_count(variables, parents);
    let d = var.local_dim();
    type Slot = (IntensityMatrix, DMatrix<bool>, DVector<f64>);
    let mut slots: Vec<Option<Slot>> = vec![None; count];
    for (i, e) in doc.entries.iter().enumerate() {
        let context = format!("{context}.entries[{i}]");
        if e.given.len() != parents.len() {
            return Err(field(&context, "`given` must name every parent exactly once"));
        }
        let mut u = 0;
        for &p in parents {
            let pv = &variables[p];
            let label = e
                .given
                .get(pv.name())
                .ok_or_else(|| field(&context, format!("missing parent `{}`", pv.name())))?;
            let s = pv
                .state_index(label)
                .ok_or_else(|| field(&context, format!("unknown state `{label}` of `{}`", pv.name())))?;
            u = u * pv.cardinality() + s;
        }
        if slots[u].is_some() {
            return Err(field(&context, "duplicate parent instantiation"));
        }
        let q = IntensityMatrix::from_rows(&e.rates, IntensityKind::Proper)
            .map_err(|err| field(&format!("{context}.rates"), err))?;
        if q.dim() != d {
            return Err(field(&format!("{context}.rates"), format!("expected a {d}x{d} matrix")));
        }
        let support = match &e.free {
            None => DMatrix::from_fn(d, d, |a, b| a != b),
            Some(list) => {
                let mut s = DMatrix::from_element(d, d, false);
                for &[a, b] in list {
                    if a >= d || b >= d || a == b {
                        return Err(field(&format!("{context}.free"), format!("invalid entry [{a}, {b}]")));
                    }
                    s[(a, b)] = true;
                }
                s
            }
        };
        let entry = match &e.entry {
            None => first_phase_entry(var),
            Some(w) => DVector::from_vec(w.clone()),
        };
        slots[u] = Some((q, support, entry));
    }
    let mut matrices = Vec::with_capacity(count);
    let mut supports = Vec::with_capacity(count);
    let mut entries = Vec::with_capacity(count);
    for (u, slot) in slots.into_iter().enumerate() {
        let (q, s, e) = slot.ok_or_else(|| {
            field(context, format!("missing parent instantiation {u} of {count}"))
        })?;
        matrices.push(q);
        supports.push(s);
        entries.push(e);
    }
    Ok(Cim::with_structure(
        parents.to_vec(),
        matrices,
        supports,
        entries,
        doc.reset_on_parent_change,
    ))
}

/// Serialises a model in canonical form.
pub fn write_model(model: &CtbnModel) -> String {
    let vars = model.variables();
    let variables = vars
        .iter()
        .map(|v| VariableDoc {
            name: v.name().to_string(),
            states: v.states().to_vec(),
            phases: v.has_phases().then(|| v.phases().to_vec()),
        })
        .collect();
    let edges = (0..vars.len())
        .flat_map(|c| {
            model
                .parents(c)
                .iter()
                .map(move |&p| [vars[p].name().to_string(), vars[c].name().to_string()])
        })
        .collect();
    let cims = (0..vars.len())
        .map(|v| {
            let cim = model.cim(v);
            let d = vars[v].local_dim();
            let all_free = DMatrix::from_fn(d, d, |a, b| a != b);
            let default_entry = first_phase_entry(&vars[v]);
            let entries = (0..cim.num_instantiations())
                .map(|u| {
                    let parent_states = decode_instantiation(vars, cim.parents(), u);
                    let given = cim
                        .parents()
                        .iter()
                        .zip(parent_states)
                        .map(|(&p, s)| (vars[p].name().to_string(), vars[p].states()[s].clone()))
                        .collect();
                    let q = cim.matrix(u).matrix();
                    let rates = (0..d).map(|a| (0..d).map(|b| q[(a, b)]).collect()).collect();
                    let s = cim.support(u);
                    let free = (s != &all_free).then(|| {
                        (0..d)
                            .flat_map(|a| (0..d).map(move |b| (a, b)))
                            .filter(|&(a, b)| s[(a, b)])
                            .map(|(a, b)| [a, b])
                            .collect()
                    });
                    let e = cim.entry(u);
                    let entry = (e != &default_entry).then(|| e.iter().copied().collect());
                    CimEntryDoc {
                        given,
                        rates,
                        free,
                        entry,
                    }
                })
                .collect();
            CimDoc {
                variable: vars[v].name().to_string(),
                reset_on_parent_change: cim.reset_on_parent_change(),
                entries,
            }
        })
        .collect();
    let initial = (0..vars.len())
        .map(|v| (vars[v].name().to_string(), model.initial(v).probs().to_vec()))
        .collect();
    to_text(&ModelDoc {
        version: FORMAT_VERSION,
        variables,
        edges,
        cims,
        initial,
    })
}

/// A dataset as written on disk: labels rather than indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFile {
    doc: TrajectoryDoc,
}

impl TrajectoryFile {
    pub fn parse(text: &str) -> Result<Self> {
        check_version(text)?;
        let doc: TrajectoryDoc = serde_json::from_str(text).map_err(json_error)?;
        let file = Self { doc };
        file.check_shape()?;
        Ok(file)
    }

    pub fn to_text(&self) -> String {
        to_text(&self.doc)
    }

    pub fn len(&self) -> usize {
        self.doc.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc.records.is_empty()
    }

    fn check_shape(&self) -> Result<()> {
        let names = self.variable_names();
        for (r, rec) in self.doc.records.iter().enumerate() {
            let context = format!("records[{r}]");
            let first = rec
                .segments
                .first()
                .ok_or_else(|| field(&context, "no segments"))?;
            if first.start != 0.0 {
                return Err(field(&context, "first segment must start at 0"));
            }
            for (s, seg) in rec.segments.iter().enumerate() {
                let context = format!("{context}.segments[{s}]");
                if !(seg.start.is_finite() && seg.end.is_finite()) || seg.end < seg.start {
                    return Err(field(&context, "invalid interval"));
                }
                if s > 0 && rec.segments[s - 1].end != seg.start {
                    return Err(field(&context, "segments must be contiguous"));
                }
                if !seg.observations.keys().eq(names.iter()) {
                    return Err(field(&context, "observations must name the same variables in every segment"));
                }
            }
        }
        Ok(())
    }

    /// Variable names in sorted order, as found in the first segment.
    pub fn variable_names(&self) -> Vec<String> {
        self.doc
            .records
            .first()
            .and_then(|r| r.segments.first())
            .map(|s| s.observations.keys().cloned().collect())
            .unwrap_or_default()
    }

    /// Resolves labels against `model`.
    pub fn to_observed(&self, model: &CtbnModel) -> Result<Vec<ObservedTrajectory>> {
        let vars = model.variables();
        self.doc
            .records
            .iter()
            .enumerate()
            .map(|(r, rec)| {
                let segments = rec
                    .segments
                    .iter()
                    .enumerate()
                    .map(|(s, seg)| {
                        let context = format!("records[{r}].segments[{s}]");
                        if seg.observations.len() != vars.len() {
                            return Err(field(&context, "observations must name every model variable"));
                        }
                        let values = vars
                            .iter()
                            .map(|v| {
                                let obs = seg.observations.get(v.name()).ok_or_else(|| {
                                    field(&context, format!("no observation for `{}`", v.name()))
                                })?;
                                obs.as_ref()
                                    .map(|label| {
                                        v.state_index(label).ok_or_else(|| {
                                            field(&context, format!("unknown state `{label}` of `{}`", v.name()))
                                        })
                                    })
                                    .transpose()
                            })
                            .collect::<Result<Vec<_>>>()?;
                        Ok(ObservedSegment {
                            start: seg.start,
                            end: seg.end,
                            values,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                ObservedTrajectory::new(segments).map_err(|e| field(&format!("records[{r}]"), e))
            })
            .collect()
    }

    pub fn from_observed(model: &CtbnModel, data: &[ObservedTrajectory]) -> Self {
        let names: Vec<&str> = model.variables().iter().map(|v| v.name()).collect();
        let labels: Vec<&[String]> = model.variables().iter().map(|v| v.states()).collect();
        Self::from_indexed(&names, &labels, data)
    }

    /// Converts to index form without a model: each variable's labels are
    /// numbered in order of first appearance. Returns the names, the label
    /// tables and the records.
    pub fn to_indexed(&self) -> (Vec<String>, Vec<Vec<String>>, Vec<ObservedTrajectory>) {
        let names = self.variable_names();
        let mut labels: Vec<Vec<String>> = vec![Vec::new(); names.len()];
        let records = self
            .doc
            .records
            .iter()
            .map(|rec| {
                let segments = rec
                    .segments
                    .iter()
                    .map(|seg| ObservedSegment {
                        start: seg.start,
                        end: seg.end,
                        values: names
                            .iter()
                            .enumerate()
                            .map(|(v, n)| {
                                seg.observations[n].as_ref().map(|label| {
                                    match labels[v].iter().position(|l| l == label) {
                                        Some(i) => i,
                                        None => {
                                            labels[v].push(label.clone());
                                            labels[v].len() - 1
                                        }
                                    }
                                })
                            })
                            .collect(),
                    })
                    .collect();
                ObservedTrajectory::new(segments).expect("shape checked on parse")
            })
            .collect();
        (names, labels, records)
    }

    pub fn from_indexed<N: AsRef<str>, L: AsRef<[String]>>(
        names: &[N],
        labels: &[L],
        data: &[ObservedTrajectory],
    ) -> Self {
        let records = data
            .iter()
            .map(|rec| RecordDoc {
                segments: rec
                    .segments()
                    .iter()
                    .map(|seg| SegmentDoc {
                        start: seg.start,
                        end: seg.end,
                        observations: names
                            .iter()
                            .zip(&seg.values)
                            .enumerate()
                            .map(|(v, (n, x))| {
                                (
                                    n.as_ref().to_string(),
                                    x.map(|x| labels[v].as_ref()[x].clone()),
                                )
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect();
        Self {
            doc: TrajectoryDoc {
                version: FORMAT_VERSION,
                records,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{feedback_loop_network, sample_dataset};
    use crate::phase::{expand_phases, PhaseSpec, Topology};

    #[test]
    fn model_round_trip_is_canonical() {
        let model = feedback_loop_network();
        let text = write_model(&model);
        let back = parse_model(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(write_model(&back), text);
    }

    #[test]
    fn phased_model_round_trip() {
        let base = feedback_loop_network();
        let model = expand_phases(&base, &PhaseSpec::everywhere(&base, 2, Topology::Chain)).unwrap();
        let text = write_model(&model);
        assert!(text.contains("\"free\""));
        assert_eq!(parse_model(&text).unwrap(), model);
    }

    #[test]
    fn unknown_version_is_rejected() {
        let text = write_model(&feedback_loop_network()).replacen("\"version\": 1", "\"version\": 7", 1);
        assert_eq!(parse_model(&text).unwrap_err(), Error::UnsupportedVersion(7));
    }

    #[test]
    fn parse_errors_carry_location() {
        let text = write_model(&feedback_loop_network()).replace("\"states\"", "\"labels\"");
        match parse_model(&text).unwrap_err() {
            Error::Parse(msg) => assert!(msg.contains("line"), "{msg}"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn trajectory_round_trip() {
        let model = feedback_loop_network();
        let data = sample_dataset(&model, 5, 2.0, 4).unwrap();
        let file = TrajectoryFile::from_observed(&model, &data);
        let text = file.to_text();
        let back = TrajectoryFile::parse(&text).unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back.to_observed(&model).unwrap(), data);
    }

    #[test]
    fn hidden_values_are_explicit_nulls() {
        let model = feedback_loop_network();
        let mut data = sample_dataset(&model, 1, 1.0, 4).unwrap();
        let mut segs = data[0].segments().to_vec();
        segs[0].values[1] = None;
        data[0] = ObservedTrajectory::new(segs).unwrap();
        let text = TrajectoryFile::from_observed(&model, &data).to_text();
        assert!(text.contains("\"B\": null"));
        let missing = text.replacen("\"B\": null,", "", 1);
        let file = TrajectoryFile::parse(&missing);
        assert!(matches!(file, Err(Error::Parse(_))) || file.unwrap().to_observed(&model).is_err());
    }
}
