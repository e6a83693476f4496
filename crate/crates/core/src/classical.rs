//! Classical hidden-Markov filtering, retrofiltering and smoothing.
//!
//! One step of the chain measures the current state `x′` with likelihood
//! `p(y|x′)` and then transitions with the column-stochastic `D(x|x′)`, so the
//! conditional map is `φ_y(x|x′) = D(x|x′) p(y|x′)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

const MODEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalModel<T: Real> {
    /// `transition[x][x′] = D(x|x′)`.
    transition: Vec<Vec<T>>,
    /// `likelihood[y][x] = p(y|x)`.
    likelihood: Vec<Vec<T>>,
    outcomes: Vec<String>,
}

impl<T: Real> ClassicalModel<T> {
    pub fn new(transition: Vec<Vec<T>>, likelihood: Vec<Vec<T>>, outcomes: Vec<String>) -> Result<Self> {
        let n = transition.len();
        if n == 0 || transition.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel("transition matrix must be square and nonempty".into()));
        }
        if likelihood.len() != outcomes.len() || likelihood.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel("one likelihood vector of length n per outcome".into()));
        }
        let tol = T::tol(MODEL_TOL);
        let negative = |rows: &Vec<Vec<T>>| rows.iter().flatten().any(|&v| v < T::zero() || !v.is_finite());
        if negative(&transition) || negative(&likelihood) {
            return Err(Error::InvalidModel("entries must be finite and nonnegative".into()));
        }
        for col in 0..n {
            let s: T = transition.iter().map(|r| r[col]).sum();
            if (s - T::one()).abs() > tol {
                return Err(Error::InvalidModel(format!("column {col} of D sums to {s}")));
            }
            let s: T = likelihood.iter().map(|r| r[col]).sum();
            if (s - T::one()).abs() > tol {
                return Err(Error::InvalidModel(format!("likelihoods for state {col} sum to {s}")));
            }
        }
        Ok(Self { transition, likelihood, outcomes })
    }

    pub fn n_states(&self) -> usize {
        self.transition.len()
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn transition(&self) -> &[Vec<T>] {
        &self.transition
    }

    /// `p(y|·)` for outcome index `y`.
    pub fn likelihood(&self, y: usize) -> &[T] {
        &self.likelihood[y]
    }

    pub fn outcome_index(&self, label: &str) -> Result<usize> {
        self.outcomes.iter().position(|o| o == label).ok_or_else(|| Error::UnknownOutcome(label.into()))
    }

    /// Maps string labels to dense outcome indices.
    pub fn encode(&self, labels: &[impl AsRef<str>]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.outcome_index(l.as_ref())).collect()
    }

    fn check_outcome(&self, y: usize) -> Result<()> {
        if y < self.outcomes.len() {
            Ok(())
        } else {
            Err(Error::UnknownOutcome(y.to_string()))
        }
    }

    /// `φ_y(x|x′) = D(x|x′) p(y|x′)`, indexed `[x][x′]`.
    pub fn conditional_map(&self, y: usize) -> Result<Vec<Vec<T>>> {
        self.check_outcome(y)?;
        let lik = &self.likelihood[y];
        Ok(self.transition.iter().map(|row| row.iter().zip(lik).map(|(&d, &p)| d * p).collect()).collect())
    }

    fn forward_step(&self, y: usize, probs: &[T]) -> Vec<T> {
        let lik = &self.likelihood[y];
        self.transition
            .iter()
            .map(|row| row.iter().zip(lik).zip(probs).map(|((&d, &l), &p)| d * l * p).sum())
            .collect()
    }

    fn backward_step(&self, y: usize, effect: &[T]) -> Vec<T> {
        let lik = &self.likelihood[y];
        (0..self.n_states())
            .map(|xp| lik[xp] * self.transition.iter().zip(effect).map(|(row, &e)| row[xp] * e).sum::<T>())
            .collect()
    }
}

/// A probability vector over the hidden states.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalState<T: Real>(Vec<T>);

impl<T: Real> ClassicalState<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.iter().any(|&p| p < -T::tol(1e-12) || !p.is_finite()) {
            return Err(Error::InvalidDistribution("negative or non-finite entry".into()));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > T::tol(1e-10) {
            return Err(Error::InvalidDistribution(format!("sums to {total}")));
        }
        Ok(Self(probs.into_iter().map(|p| p.max(T::zero())).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![T::one() / T::of(n as f64); n])
    }

    pub fn delta(n: usize, x: usize) -> Self {
        let mut v = vec![T::zero(); n];
        v[x] = T::one();
        Self(v)
    }

    pub fn probs(&self) -> &[T] {
        &self.0
    }
}

/// Unnormalized retrofiltered effect `E_R(x;t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalEffect<T: Real>(Vec<T>);

impl<T: Real> ClassicalEffect<T> {
    pub fn values(&self) -> &[T] {
        &self.0
    }
}

fn check_prior<T: Real>(model: &ClassicalModel<T>, prior: &ClassicalState<T>) -> Result<()> {
    if prior.0.len() != model.n_states() {
        return Err(Error::DimensionMismatch { expected: model.n_states(), got: prior.0.len() });
    }
    Ok(())
}

/// Forward filter with per-step normalization; returns `(℘_F, ln p(record))`.
pub fn classical_filter<T: Real>(
    model: &ClassicalModel<T>,
    prior: &ClassicalState<T>,
    record: &[usize],
) -> Result<(ClassicalState<T>, T)> {
    check_prior(model, prior)?;
    let mut probs = prior.0.clone();
    let mut log_lik = T::zero();
    for &y in record {
        model.check_outcome(y)?;
        let next = model.forward_step(y, &probs);
        let norm: T = next.iter().copied().sum();
        if !(norm > T::zero()) {
            return Err(Error::ZeroProbabilityRecord);
        }
        log_lik = log_lik + norm.ln();
        probs = next.into_iter().map(|p| p / norm).collect();
    }
    Ok((ClassicalState(probs), log_lik))
}

/// Backward pass from the uninformative all-ones effect.
pub fn classical_retrofilter<T: Real>(model: &ClassicalModel<T>, future: &[usize]) -> Result<ClassicalEffect<T>> {
    let mut effect = vec![T::one(); model.n_states()];
    for &y in future.iter().rev() {
        model.check_outcome(y)?;
        effect = model.backward_step(y, &effect);
    }
    Ok(ClassicalEffect(effect))
}

/// `℘_S ∝ ℘_F · E_R`.
pub fn classical_smooth<T: Real>(
    model: &ClassicalModel<T>,
    prior: &ClassicalState<T>,
    past: &[usize],
    future: &[usize],
) -> Result<ClassicalState<T>> {
    let (filtered, _) = classical_filter(model, prior, past)?;
    let effect = classical_retrofilter(model, future)?;
    let weighted: Vec<T> = filtered.0.iter().zip(&effect.0).map(|(&p, &e)| p * e).collect();
    let norm: T = weighted.iter().copied().sum();
    if !(norm > T::zero()) {
        return Err(Error::ZeroProbabilityRecord);
    }
    Ok(ClassicalState(weighted.into_iter().map(|w| w / norm).collect()))
}

pub(crate) fn sample_index<T: Real, R: Rng + ?Sized>(rng: &mut R, weights: impl Iterator<Item = T>) -> usize {
    let u = T::of(rng.random::<f64>());
    let mut acc = T::zero();
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > T::zero() {
            last = i;
        }
        acc = acc + w;
        if u < acc {
            return i;
        }
    }
    last
}

/// Samples `(x_0..x_steps, y_0..y_{steps−1})` from the joint law of the chain.
pub fn sample_classical_trajectory<T: Real, R: Rng + ?Sized>(
    model: &ClassicalModel<T>,
    prior: &ClassicalState<T>,
    steps: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    check_prior(model, prior)?;
    let mut path = Vec::with_capacity(steps + 1);
    let mut record = Vec::with_capacity(steps);
    let mut x = sample_index(rng, prior.0.iter().copied());
    path.push(x);
    for _ in 0..steps {
        let y = sample_index(rng, model.likelihood.iter().map(|l| l[x]));
        x = sample_index(rng, model.transition.iter().map(|row| row[x]));
        record.push(y);
        path.push(x);
    }
    Ok((path, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::seeded_rng;
    use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};
    use std::collections::HashMap;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    fn two_state() -> ClassicalModel<f64> {
        ClassicalModel::new(vec![vec![0.9, 0.2], vec![0.1, 0.8]], vec![vec![0.8, 0.3], vec![0.2, 0.7]], labels(2))
            .unwrap()
    }

    fn noiseless(n: usize) -> ClassicalModel<f64> {
        let eye: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        ClassicalModel::new(eye.clone(), eye, labels(n)).unwrap()
    }

    /// Joint weight of every hidden path `x_0..x_T` together with `record`.
    fn path_weights(model: &ClassicalModel<f64>, prior: &[f64], record: &[usize]) -> Vec<(Vec<usize>, f64)> {
        let n = model.n_states();
        let len = record.len() + 1;
        let mut out = Vec::new();
        for code in 0..n.pow(len as u32) {
            let path: Vec<usize> = (0..len).map(|k| (code / n.pow(k as u32)) % n).collect();
            let mut w = prior[path[0]];
            for (k, &y) in record.iter().enumerate() {
                w *= model.likelihood[y][path[k]] * model.transition[path[k + 1]][path[k]];
            }
            out.push((path, w));
        }
        out
    }

    fn posterior_at(model: &ClassicalModel<f64>, prior: &[f64], record: &[usize], t: usize) -> Vec<f64> {
        let weights = path_weights(model, prior, record);
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        let mut post = vec![0.0; model.n_states()];
        for (path, w) in &weights {
            post[path[t]] += w / total;
        }
        post
    }

    fn random_model(seed: u64, n: usize, n_out: usize) -> ClassicalModel<f64> {
        let mut rng = seeded_rng(seed);
        let mut col = |len: usize| {
            let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 0.05).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect::<Vec<_>>()
        };
        let d_cols: Vec<Vec<f64>> = (0..n).map(|_| col(n)).collect();
        let l_cols: Vec<Vec<f64>> = (0..n).map(|_| col(n_out)).collect();
        let transition = (0..n).map(|x| (0..n).map(|xp| d_cols[xp][x]).collect()).collect();
        let likelihood = (0..n_out).map(|y| (0..n).map(|x| l_cols[x][y]).collect()).collect();
        ClassicalModel::new(transition, likelihood, labels(n_out)).unwrap()
    }

    #[test]
    fn conditional_map_examples() {
        let m = noiseless(3);
        let phi = m.conditional_map(1).unwrap();
        assert_eq!(phi, vec![vec![0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]]);

        let m = two_state();
        let phi0 = m.conditional_map(0).unwrap();
        let expected = [[0.72, 0.06], [0.08, 0.24]];
        for x in 0..2 {
            for xp in 0..2 {
                assert!((phi0[x][xp] - expected[x][xp]).abs() < 1e-15);
            }
        }
        assert!(matches!(m.conditional_map(2), Err(Error::UnknownOutcome(_))));
        assert!(matches!(m.outcome_index("z"), Err(Error::UnknownOutcome(_))));

        let m = random_model(4, 3, 3);
        let phis: Vec<_> = (0..3).map(|y| m.conditional_map(y).unwrap()).collect();
        for x in 0..3 {
            for xp in 0..3 {
                let s: f64 = phis.iter().map(|p| p[x][xp]).sum();
                assert!((s - m.transition[x][xp]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn model_validation() {
        let bad = ClassicalModel::new(vec![vec![0.5, 0.2], vec![0.1, 0.8]], vec![vec![1.0, 1.0]], labels(1));
        assert!(matches!(bad, Err(Error::InvalidModel(_))));
        let bad = ClassicalModel::new(vec![vec![1.0]], vec![vec![0.7], vec![0.2]], labels(2));
        assert!(matches!(bad, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn filter_examples() {
        let m = two_state();
        let prior = ClassicalState::new(vec![0.5, 0.5]).unwrap();
        let (f, ll) = classical_filter(&m, &prior, &[]).unwrap();
        assert_eq!(f, prior);
        assert_eq!(ll, 0.0);

        let n = noiseless(3);
        let (f, _) = classical_filter(&n, &ClassicalState::delta(3, 2), &[2, 2, 2]).unwrap();
        assert_eq!(f.probs(), &[0.0, 0.0, 1.0]);

        // Frozen from joint-path enumeration.
        let (f, ll) = classical_filter(&m, &prior, &[0, 0, 1]).unwrap();
        assert!((f.probs()[0] - 0.580_674_157_303_370_8).abs() < 1e-14);
        assert!((f.probs()[1] - 0.419_325_842_696_629_15).abs() < 1e-14);
        assert!((ll - -2.236_797_352_456_042_3).abs() < 1e-13);
        let oracle = posterior_at(&m, &[0.5, 0.5], &[0, 0, 1], 3);
        assert!((f.probs()[0] - oracle[0]).abs() < 1e-14);

        assert!(matches!(
            classical_filter(&n, &ClassicalState::delta(3, 0), &[1]),
            Err(Error::ZeroProbabilityRecord)
        ));
    }

    #[test]
    fn retrofilter_examples() {
        let m = two_state();
        assert_eq!(classical_retrofilter(&m, &[]).unwrap().values(), &[1.0, 1.0]);

        let n = noiseless(2);
        assert_eq!(classical_retrofilter(&n, &[1]).unwrap().values(), n.likelihood(1));

        let e = classical_retrofilter(&m, &[1, 0]).unwrap();
        assert!((e.values()[0] - 0.15).abs() < 1e-15);
        assert!((e.values()[1] - 0.28).abs() < 1e-15);
        for x in 0..2 {
            let delta: Vec<f64> = (0..2).map(|i| if i == x { 1.0 } else { 0.0 }).collect();
            let p: f64 = path_weights(&m, &delta, &[1, 0]).iter().map(|(_, w)| w).sum();
            assert!((e.values()[x] - p).abs() < 1e-15);
        }
    }

    #[test]
    fn smooth_examples() {
        let m = two_state();
        let prior = ClassicalState::new(vec![0.3, 0.7]).unwrap();
        let (f, _) = classical_filter(&m, &prior, &[0, 1]).unwrap();
        let s = classical_smooth(&m, &prior, &[0, 1], &[]).unwrap();
        assert!(s.probs().iter().zip(f.probs()).all(|(a, b)| (a - b).abs() < 1e-15));

        let e = classical_retrofilter(&m, &[1, 1, 0]).unwrap();
        let s = classical_smooth(&m, &ClassicalState::uniform(2), &[], &[1, 1, 0]).unwrap();
        let z: f64 = e.values().iter().sum();
        for x in 0..2 {
            assert!((s.probs()[x] - e.values()[x] / z).abs() < 1e-15);
        }

        let s = classical_smooth(&m, &ClassicalState::uniform(2), &[0, 0], &[1, 0]).unwrap();
        assert!((s.probs()[0] - 0.690_902_169_775_409_4).abs() < 1e-14);
        assert!((s.probs()[1] - 0.309_097_830_224_590_75).abs() < 1e-14);
    }

    #[test]
    fn sampling_examples() {
        let m = two_state();
        let mut rng = seeded_rng(1);
        let (path, rec) = sample_classical_trajectory(&m, &ClassicalState::uniform(2), 0, &mut rng).unwrap();
        assert_eq!(path.len(), 1);
        assert!(rec.is_empty());

        let n = noiseless(3);
        let (path, rec) = sample_classical_trajectory(&n, &ClassicalState::delta(3, 1), 6, &mut rng).unwrap();
        assert!(path.iter().all(|&x| x == 1));
        assert!(rec.iter().all(|&y| y == 1));

        let a = sample_classical_trajectory(&m, &ClassicalState::uniform(2), 5, &mut seeded_rng(9)).unwrap();
        let b = sample_classical_trajectory(&m, &ClassicalState::uniform(2), 5, &mut seeded_rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampled_record_frequencies_match_enumeration() {
        let m = two_state();
        let prior = ClassicalState::new(vec![0.4, 0.6]).unwrap();
        let steps = 3;
        let samples = 100_000;
        let mut rng = seeded_rng(2024);
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for _ in 0..samples {
            let (_, rec) = sample_classical_trajectory(&m, &prior, steps, &mut rng).unwrap();
            *counts.entry(rec).or_default() += 1;
        }
        for code in 0..8usize {
            let rec: Vec<usize> = (0..steps).map(|k| (code >> k) & 1).collect();
            let p: f64 = path_weights(&m, prior.probs(), &rec).iter().map(|(_, w)| w).sum();
            let freq = *counts.get(&rec).unwrap_or(&0) as f64 / samples as f64;
            let sigma = (p * (1.0 - p) / samples as f64).sqrt();
            assert!((freq - p).abs() <= 3.0 * sigma + 1e-12, "record {rec:?}: {freq} vs {p}");
        }
    }

    fn record_of(code: usize, n_out: usize, len: usize) -> Vec<usize> {
        (0..len).map(|k| (code / n_out.pow(k as u32)) % n_out).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn consistency_identity(seed in any::<u64>(), n in 2usize..=3, steps in 1usize..=4) {
            let m = random_model(seed, n, 2);
            let raw: Vec<f64> = (0..n).map(|i| 1.0 + ((seed >> (8 * i)) & 0xff) as f64).collect();
            let total: f64 = raw.iter().sum();
            let prior = ClassicalState::new(raw.iter().map(|r| r / total).collect()).unwrap();
            for code in 0..2usize.pow(steps as u32) {
                let rec = record_of(code, 2, steps);
                let p_all: f64 = path_weights(&m, prior.probs(), &rec).iter().map(|(_, w)| w).sum();
                for t in 0..=steps {
                    let (f, ll) = classical_filter(&m, &prior, &rec[..t]).unwrap();
                    let e = classical_retrofilter(&m, &rec[t..]).unwrap();
                    let dot: f64 = f.probs().iter().zip(e.values()).map(|(a, b)| a * b).sum();
                    prop_assert!((dot * ll.exp() - p_all).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn smoothing_equals_brute_force_posterior(seed in any::<u64>(), n in 2usize..=3, steps in 1usize..=4) {
            let m = random_model(seed, n, 3);
            let prior = ClassicalState::uniform(n);
            for code in 0..3usize.pow(steps as u32) {
                let rec = record_of(code, 3, steps);
                for t in 0..=steps {
                    let s = classical_smooth(&m, &prior, &rec[..t], &rec[t..]).unwrap();
                    let oracle = posterior_at(&m, prior.probs(), &rec, t);
                    for x in 0..n {
                        prop_assert!((s.probs()[x] - oracle[x]).abs() < 1e-10);
                    }
                }
            }
        }
    }
}
