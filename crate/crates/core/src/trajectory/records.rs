use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ConditionalOp, Instrument, JointInstrument};
use crate::classical::sample_index;
use crate::error::{Error, Result};
use crate::linalg::{DensityOperator, Effect, Matrix};
use crate::scalar::Real;

pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// Step weights at or below this are treated as impossible outcomes.
const ZERO_WEIGHT: f64 = 1e-14;

/// Alice outcome indices, one per step.
pub type Record = Vec<usize>;
/// Indices into [`JointInstrument::ops`], one per step.
pub type JointRecord = Vec<usize>;

/// Propagates `ρ₀` through a sequence of conditional operations, normalizing
/// after every step. Returns `(ρ_F, ln p(record))`.
pub fn filter_ops<'a, T: Real>(
    rho0: &DensityOperator<T>,
    ops: impl IntoIterator<Item = &'a ConditionalOp<T>>,
) -> Result<(DensityOperator<T>, T)> {
    let mut rho = rho0.matrix().clone();
    let mut log_prob = T::zero();
    let mut stepped = false;
    for op in ops {
        let (next, w) = op.apply(&rho);
        if !(w > T::tol(ZERO_WEIGHT)) {
            return Err(Error::ZeroProbabilityRecord);
        }
        log_prob = log_prob + w.ln();
        rho = next.scale(T::one() / w);
        stepped = true;
    }
    if !stepped {
        return Ok((rho0.clone(), T::zero()));
    }
    Ok((DensityOperator::normalized(&rho)?, log_prob))
}

/// Filtered state `Φ_record(ρ₀)/Tr[Φ_record(ρ₀)]` and `ln p(record)`.
pub fn filter<T: Real>(
    instrument: &Instrument<T>,
    rho0: &DensityOperator<T>,
    record: &[usize],
) -> Result<(DensityOperator<T>, T)> {
    let ops: Vec<&ConditionalOp<T>> = record.iter().map(|&y| instrument.op(y)).collect::<Result<_>>()?;
    filter_ops(rho0, ops)
}

/// Adjoint sweep from the identity, last operation first.
pub fn retrofilter_ops<'a, T: Real>(
    dim: usize,
    ops: impl DoubleEndedIterator<Item = &'a ConditionalOp<T>>,
) -> Result<Effect<T>> {
    let mut e = Matrix::identity(dim);
    for op in ops.rev() {
        e = op.apply_adjoint(&e);
    }
    Effect::new(e.symmetrized())
}

/// Retrofiltered effect `Φ†_future(𝕀)`.
pub fn retrofilter<T: Real>(instrument: &Instrument<T>, future: &[usize]) -> Result<Effect<T>> {
    let ops: Vec<&ConditionalOp<T>> = future.iter().map(|&y| instrument.op(y)).collect::<Result<_>>()?;
    retrofilter_ops(instrument.dim(), ops.into_iter())
}

fn check_cap(alphabet: usize, steps: usize, cap: usize) -> Result<()> {
    let count = (alphabet as u128).checked_pow(steps as u32).unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(Error::EnumerationTooLarge { count, cap });
    }
    Ok(())
}

fn enumerate_with<T: Real>(
    ops: &[&ConditionalOp<T>],
    rho0: &DensityOperator<T>,
    steps: usize,
    cap: usize,
) -> Result<Vec<(Vec<usize>, T)>> {
    check_cap(ops.len(), steps, cap)?;
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(steps);
    walk(ops, rho0.matrix(), steps, &mut prefix, &mut out);
    Ok(out)
}

fn walk<T: Real>(
    ops: &[&ConditionalOp<T>],
    state: &Matrix<T>,
    remaining: usize,
    prefix: &mut Vec<usize>,
    out: &mut Vec<(Vec<usize>, T)>,
) {
    if remaining == 0 {
        out.push((prefix.clone(), state.trace_re().max(T::zero())));
        return;
    }
    for (i, op) in ops.iter().enumerate() {
        let (next, _) = op.apply(state);
        prefix.push(i);
        walk(ops, &next, remaining - 1, prefix, out);
        prefix.pop();
    }
}

/// Every Alice record of length `steps` with probability `Tr[Φ_record(ρ₀)]`,
/// in lexicographic order of outcome indices.
pub fn enumerate_records<T: Real>(
    instrument: &Instrument<T>,
    rho0: &DensityOperator<T>,
    steps: usize,
    cap: usize,
) -> Result<Vec<(Record, T)>> {
    let ops: Vec<&ConditionalOp<T>> = instrument.ops().iter().collect();
    enumerate_with(&ops, rho0, steps, cap)
}

/// Every joint (Alice, Bob) record of length `steps` with its probability.
pub fn enumerate_joint_records<T: Real>(
    joint: &JointInstrument<T>,
    rho0: &DensityOperator<T>,
    steps: usize,
    cap: usize,
) -> Result<Vec<(JointRecord, T)>> {
    let ops: Vec<&ConditionalOp<T>> = joint.ops().iter().map(|j| &j.op).collect();
    enumerate_with(&ops, rho0, steps, cap)
}

fn sample_with<T: Real, R: Rng + ?Sized>(
    ops: &[&ConditionalOp<T>],
    rho0: &DensityOperator<T>,
    steps: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<DensityOperator<T>>)> {
    let mut record = Vec::with_capacity(steps);
    let mut path = vec![rho0.clone()];
    let mut rho = rho0.matrix().clone();
    for _ in 0..steps {
        let branches: Vec<(Matrix<T>, T)> = ops.iter().map(|op| op.apply(&rho)).collect();
        let y = sample_index(rng, branches.iter().map(|(_, w)| *w));
        let (next, w) = &branches[y];
        if !(*w > T::zero()) {
            return Err(Error::ZeroProbabilityRecord);
        }
        rho = next.scale(T::one() / *w);
        record.push(y);
        path.push(DensityOperator::normalized(&rho)?);
    }
    Ok((record, path))
}

/// Samples an Alice record by sequential Born weights; also returns `ρ_F` after every step.
pub fn sample_record<T: Real, R: Rng + ?Sized>(
    instrument: &Instrument<T>,
    rho0: &DensityOperator<T>,
    steps: usize,
    rng: &mut R,
) -> Result<(Record, Vec<DensityOperator<T>>)> {
    let ops: Vec<&ConditionalOp<T>> = instrument.ops().iter().collect();
    sample_with(&ops, rho0, steps, rng)
}

/// Samples a joint record; the path holds the true (Alice-and-Bob conditioned) states.
pub fn sample_joint_record<T: Real, R: Rng + ?Sized>(
    joint: &JointInstrument<T>,
    rho0: &DensityOperator<T>,
    steps: usize,
    rng: &mut R,
) -> Result<(JointRecord, Vec<DensityOperator<T>>)> {
    let ops: Vec<&ConditionalOp<T>> = joint.ops().iter().map(|j| &j.op).collect();
    sample_with(&ops, rho0, steps, rng)
}

/// A labelled measurement record, optionally with Bob's outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub alice: Vec<String>,
    pub bob: Option<Vec<String>>,
}

/// One step of a serialized record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordLine {
    pub trajectory: usize,
    pub step: usize,
    pub alice: String,
    pub bob: Option<String>,
}

impl MeasurementRecord {
    pub fn from_alice<T: Real>(instrument: &Instrument<T>, record: &[usize]) -> Self {
        Self { alice: record.iter().map(|&y| instrument.outcomes()[y].clone()).collect(), bob: None }
    }

    pub fn from_joint<T: Real>(joint: &JointInstrument<T>, record: &[usize]) -> Self {
        let ops = joint.ops();
        Self {
            alice: record.iter().map(|&i| joint.alice_outcomes()[ops[i].alice].clone()).collect(),
            bob: Some(record.iter().map(|&i| joint.bob_outcomes()[ops[i].bob].clone()).collect()),
        }
    }

    pub fn len(&self) -> usize {
        self.alice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice.is_empty()
    }

    /// Alice's outcomes before step `t`, and from step `t` on.
    pub fn split(&self, t: usize) -> Result<(&[String], &[String])> {
        if t > self.alice.len() {
            return Err(Error::InvalidRecord(format!("split index {t} beyond record length {}", self.alice.len())));
        }
        Ok(self.alice.split_at(t))
    }

    pub fn to_lines(&self, trajectory: usize) -> Vec<RecordLine> {
        self.alice
            .iter()
            .enumerate()
            .map(|(step, a)| RecordLine {
                trajectory,
                step,
                alice: a.clone(),
                bob: self.bob.as_ref().map(|b| b[step].clone()),
            })
            .collect()
    }

    /// Groups serialized lines back into records, ordered by trajectory index.
    pub fn from_lines(lines: &[RecordLine]) -> Result<Vec<(usize, Self)>> {
        let mut out: Vec<(usize, Self)> = Vec::new();
        for line in lines {
            let start_new = out.last().map_or(true, |(t, _)| *t != line.trajectory);
            if start_new {
                out.push((line.trajectory, Self { alice: Vec::new(), bob: line.bob.as_ref().map(|_| Vec::new()) }));
            }
            let (_, rec) = out.last_mut().expect("just pushed");
            if line.step != rec.alice.len() {
                return Err(Error::InvalidRecord(format!(
                    "trajectory {} has step {} out of order",
                    line.trajectory, line.step
                )));
            }
            rec.alice.push(line.alice.clone());
            match (&mut rec.bob, &line.bob) {
                (Some(b), Some(u)) => b.push(u.clone()),
                (None, None) => {}
                _ => {
                    return Err(Error::InvalidRecord(format!(
                        "trajectory {} mixes steps with and without Bob outcomes",
                        line.trajectory
                    )))
                }
            }
        }
        Ok(out)
    }
}
