//! Entropies, capacity lower bounds, and perfect-correctability certificates.
//!
//! All logarithms are base 2.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{self, check_state, compose, kraus_of_choi, QuantumChannel};
use crate::error::{Error, Result};
use crate::io::complex_matrix;
use crate::processes::{slot, PureProcessVector};
use crate::tensor::{eigh, eigvalsh, gates, real, tol, CMatrix, CVector, SpaceLayout, C64};

/// `−Σ λ log₂ λ` over eigenvalues above the entropy cutoff.
fn entropy_of_values(values: &[f64]) -> f64 {
    values.iter().filter(|&&v| v > tol::ENTROPY_ZERO).map(|&v| -v * v.log2()).sum()
}

/// Entropy of a Hermitian matrix without density-matrix checks.
pub(crate) fn entropy_unchecked(rho: &CMatrix) -> f64 {
    eigvalsh(rho).map(|v| entropy_of_values(&v)).unwrap_or(f64::NAN)
}

pub fn von_neumann_entropy(rho: &CMatrix) -> Result<f64> {
    check_state(rho)?;
    let s = entropy_of_values(&eigvalsh(rho)?);
    Ok(s.clamp(0.0, (rho.nrows() as f64).log2()))
}

/// `h(p) = −p log₂ p − (1−p) log₂(1−p)`.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of_values(&[p, 1.0 - p])
}

/// Probability-weighted input states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    items: Vec<EnsembleItem>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleItem {
    pub probability: f64,
    #[serde(with = "complex_matrix")]
    pub state: CMatrix,
}

impl Ensemble {
    pub fn new(items: Vec<(f64, CMatrix)>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidArgument("empty ensemble".into()));
        }
        let total: f64 = items.iter().map(|(p, _)| p).sum();
        if items.iter().any(|(p, _)| *p < 0.0 || p.is_nan()) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("ensemble probabilities sum to {total}")));
        }
        let d = items[0].1.nrows();
        for (_, s) in &items {
            if s.nrows() != d {
                return Err(Error::DimensionMismatch("ensemble states of different dimensions".into()));
            }
            check_state(s)?;
        }
        Ok(Self { items: items.into_iter().map(|(probability, state)| EnsembleItem { probability, state }).collect() })
    }

    /// Equal-weight ensemble of pure states.
    pub fn uniform_pure(vectors: &[CVector]) -> Result<Self> {
        let p = 1.0 / vectors.len() as f64;
        Self::new(vectors.iter().map(|v| (p, v * v.adjoint())).collect())
    }

    pub fn items(&self) -> &[EnsembleItem] {
        &self.items
    }

    pub fn dim(&self) -> usize {
        self.items[0].state.nrows()
    }
}

/// `χ = S(Σ p_i σ_i) − Σ p_i S(σ_i)` for outputs `σ_i`.
fn holevo_of_outputs(probs: &[f64], outputs: &[CMatrix], output_entropies: &[f64]) -> f64 {
    let d = outputs[0].nrows();
    let avg = probs.iter().zip(outputs).fold(CMatrix::zeros(d, d), |acc, (p, s)| acc + s * real(*p));
    let mean_entropy: f64 = probs.iter().zip(output_entropies).map(|(p, s)| p * s).sum();
    entropy_unchecked(&avg) - mean_entropy
}

pub fn holevo_quantity(c: &QuantumChannel, e: &Ensemble) -> Result<f64> {
    if e.dim() != c.in_dim() {
        return Err(Error::DimensionMismatch(format!(
            "ensemble lives in dimension {} but channel input is {}",
            e.dim(),
            c.in_dim()
        )));
    }
    let probs: Vec<f64> = e.items.iter().map(|i| i.probability).collect();
    let outputs: Vec<CMatrix> = e.items.iter().map(|i| c.apply_matrix(&i.state)).collect();
    let entropies: Vec<f64> = outputs.iter().map(entropy_unchecked).collect();
    let chi = holevo_of_outputs(&probs, &outputs, &entropies);
    Ok(chi.clamp(0.0, (c.out_dim() as f64).log2()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Achiever {
    Ensemble(Ensemble),
    State(#[serde(with = "complex_matrix")] CMatrix),
}

/// Result of a seeded multi-restart optimization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    /// Best value found, in bits.
    pub value: f64,
    pub achiever: Achiever,
    pub restarts: usize,
    /// Index of the restart that produced `value`.
    pub best_restart: usize,
    pub seed: u64,
    pub converged: bool,
    /// Per-iteration values of the best restart.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<f64>,
}

impl CapacityReport {
    pub fn without_history(mut self) -> Self {
        self.history.clear();
        self
    }
}

pub const DEFAULT_HOLEVO_STATES: usize = 4;
pub const DEFAULT_RESTARTS: usize = 32;
pub const DEFAULT_MAX_ITER: usize = 500;

const STEP_INIT: f64 = 0.5;
const STEP_MIN: f64 = 1e-7;
const STEP_MAX: f64 = 1.0;
const STALL_LIMIT: usize = 30;
const IMPROVEMENT_EPS: f64 = 1e-13;

fn random_pure(d: usize, rng: &mut ChaCha8Rng) -> CVector {
    let v = CVector::from_fn(d, |_, _| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
    let n = v.norm();
    v / real(n)
}

fn perturb_vector(v: &CVector, step: f64, rng: &mut ChaCha8Rng) -> CVector {
    let g = CVector::from_fn(v.len(), |_, _| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
    let w = v + g * real(step);
    let n = w.norm();
    w / real(n)
}

struct HolevoState<'a> {
    channel: &'a QuantumChannel,
    vectors: Vec<CVector>,
    probs: Vec<f64>,
    outputs: Vec<CMatrix>,
    entropies: Vec<f64>,
    value: f64,
}

impl<'a> HolevoState<'a> {
    fn new(channel: &'a QuantumChannel, vectors: Vec<CVector>) -> Self {
        let n = vectors.len();
        let outputs: Vec<CMatrix> = vectors.iter().map(|v| channel.apply_matrix(&(v * v.adjoint()))).collect();
        let entropies = outputs.iter().map(entropy_unchecked).collect();
        let mut s = Self { channel, vectors, probs: vec![1.0 / n as f64; n], outputs, entropies, value: 0.0 };
        s.value = holevo_of_outputs(&s.probs, &s.outputs, &s.entropies);
        s
    }

    /// One Blahut–Arimoto update of the input distribution for the induced
    /// classical-quantum channel: `p_x ← p_x·2^{D(σ_x‖σ̄)} / Z`.
    fn reweight(&mut self) -> bool {
        let d = self.outputs[0].nrows();
        let avg = self.probs.iter().zip(&self.outputs).fold(CMatrix::zeros(d, d), |acc, (p, s)| acc + s * real(*p));
        let Ok(dec) = eigh(&avg) else { return false };
        let logs = CMatrix::from_diagonal(&CVector::from_iterator(
            d,
            dec.values.iter().map(|&v| real(v.max(tol::ENTROPY_ZERO).log2())),
        ));
        let log_avg = &dec.vectors * logs * dec.vectors.adjoint();
        let weights: Vec<f64> = self
            .outputs
            .iter()
            .zip(&self.entropies)
            .zip(&self.probs)
            .map(|((s, h), p)| {
                let cross = (s * &log_avg).trace().re;
                let divergence = (-h - cross).max(0.0);
                p * divergence.min(60.0).exp2()
            })
            .collect();
        let z: f64 = weights.iter().sum();
        if !(z.is_finite() && z > 0.0) {
            return false;
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();
        let value = holevo_of_outputs(&probs, &self.outputs, &self.entropies);
        if value >= self.value {
            self.probs = probs;
            self.value = value;
            true
        } else {
            false
        }
    }

    fn try_replace(&mut self, idx: usize, v: CVector) -> bool {
        let out = self.channel.apply_matrix(&(&v * v.adjoint()));
        let h = entropy_unchecked(&out);
        let old_out = std::mem::replace(&mut self.outputs[idx], out);
        let old_h = std::mem::replace(&mut self.entropies[idx], h);
        let value = holevo_of_outputs(&self.probs, &self.outputs, &self.entropies);
        if value > self.value {
            self.vectors[idx] = v;
            self.value = value;
            true
        } else {
            self.outputs[idx] = old_out;
            self.entropies[idx] = old_h;
            false
        }
    }

    /// Top eigenvector of `M†(log σ_x − log σ̄)`, the linearized ascent
    /// direction for state `idx`.
    fn linearized_proposal(&self, idx: usize) -> Option<CVector> {
        let d = self.outputs[0].nrows();
        let avg = self.probs.iter().zip(&self.outputs).fold(CMatrix::zeros(d, d), |acc, (p, s)| acc + s * real(*p));
        let g = matrix_log2(&self.outputs[idx])? - matrix_log2(&avg)?;
        let pulled =
            self.channel.kraus().iter().fold(CMatrix::zeros(self.channel.in_dim(), self.channel.in_dim()), |acc, k| {
                acc + k.adjoint() * &g * k
            });
        let herm = (&pulled + pulled.adjoint()) * real(0.5);
        let dec = eigh(&herm).ok()?;
        Some(dec.vectors.column(0).into_owned())
    }

    fn ensemble(&self) -> Ensemble {
        let items = self
            .vectors
            .iter()
            .zip(&self.probs)
            .map(|(v, p)| EnsembleItem { probability: *p, state: v * v.adjoint() })
            .collect();
        Ensemble { items }
    }
}

fn matrix_log2(m: &CMatrix) -> Option<CMatrix> {
    let dec = eigh(m).ok()?;
    let d = m.nrows();
    let logs = CMatrix::from_diagonal(&CVector::from_iterator(
        d,
        dec.values.iter().map(|&v| real(v.max(tol::ENTROPY_ZERO).log2())),
    ));
    Some(&dec.vectors * logs * dec.vectors.adjoint())
}

struct RestartOutcome<A> {
    value: f64,
    achiever: A,
    converged: bool,
    history: Vec<f64>,
}

fn best_of<A>(outcomes: Vec<RestartOutcome<A>>) -> (usize, RestartOutcome<A>) {
    let mut best: Option<(usize, RestartOutcome<A>)> = None;
    for (i, o) in outcomes.into_iter().enumerate() {
        // strict comparison keeps the lowest index on ties
        if best.as_ref().is_none_or(|(_, b)| o.value > b.value) {
            best = Some((i, o));
        }
    }
    best.expect("at least one restart")
}

fn holevo_restart(c: &QuantumChannel, n_states: usize, max_iter: usize, seed: u64) -> RestartOutcome<Ensemble> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = (0..n_states).map(|_| random_pure(c.in_dim(), &mut rng)).collect();
    let mut state = HolevoState::new(c, vectors);
    let mut history = vec![state.value];
    let mut step = STEP_INIT;
    let mut stall = 0;
    let mut converged = false;
    for _ in 0..max_iter {
        let before = state.value;
        state.reweight();
        for idx in 0..n_states {
            if let Some(v) = state.linearized_proposal(idx) {
                state.try_replace(idx, v);
            }
            let proposal = perturb_vector(&state.vectors[idx], step, &mut rng);
            if state.try_replace(idx, proposal) {
                step = (step * 1.5).min(STEP_MAX);
            } else {
                step = (step * 0.8).max(STEP_MIN);
            }
        }
        history.push(state.value);
        if state.value - before < IMPROVEMENT_EPS {
            stall += 1;
        } else {
            stall = 0;
        }
        if stall >= STALL_LIMIT {
            converged = true;
            break;
        }
    }
    RestartOutcome { value: state.value, achiever: state.ensemble(), converged, history }
}

/// Best Holevo quantity over pure-state ensembles of size `n_states`.
///
/// Each restart draws its own ensemble from `seed + restart`. An iteration
/// does one Blahut–Arimoto reweighting, then for each state tries the
/// linearized ascent step and a random perturbation, keeping only
/// improvements, so the per-restart history never decreases. Restarts run in parallel; the result
/// does not depend on scheduling.
pub fn optimize_holevo(
    c: &QuantumChannel,
    n_states: usize,
    n_restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<CapacityReport> {
    if n_states < 2 {
        return Err(Error::InvalidArgument("Holevo optimization needs at least two states".into()));
    }
    if n_restarts == 0 {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    let outcomes: Vec<_> = (0..n_restarts)
        .into_par_iter()
        .map(|r| holevo_restart(c, n_states, max_iter, seed.wrapping_add(r as u64)))
        .collect();
    let (best_restart, best) = best_of(outcomes);
    let cap = (c.out_dim() as f64).log2();
    Ok(CapacityReport {
        value: best.value.clamp(0.0, cap),
        achiever: Achiever::Ensemble(best.achiever),
        restarts: n_restarts,
        best_restart,
        seed,
        converged: best.converged,
        history: best.history,
    })
}

/// `I_c = S(M(ρ)) − S((M ⊗ id)(|φ_ρ⟩⟨φ_ρ|))` with `|φ_ρ⟩` a purification of `ρ`.
pub fn coherent_information(c: &QuantumChannel, rho: &CMatrix) -> Result<f64> {
    if rho.nrows() != c.in_dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {} but channel input is {}",
            rho.nrows(),
            c.in_dim()
        )));
    }
    check_state(rho)?;
    coherent_information_unchecked(c, rho)
}

fn coherent_information_unchecked(c: &QuantumChannel, rho: &CMatrix) -> Result<f64> {
    let d = rho.nrows();
    let dec = eigh(rho)?;
    // |φ⟩ = Σ_i √λ_i |e_i⟩ ⊗ |i⟩, stored as the d×d matrix Φ[a, i]
    let mut phi = CMatrix::zeros(d, d);
    for (i, &lambda) in dec.values.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        for a in 0..d {
            phi[(a, i)] = dec.vectors[(a, i)] * s;
        }
    }
    let out_dim = c.out_dim();
    let joint_dim = out_dim * d;
    let mut joint = CMatrix::zeros(joint_dim, joint_dim);
    for k in c.kraus() {
        // (K ⊗ I)|φ⟩ flattened with the output index most significant
        let kp = k * &phi;
        let v = CVector::from_fn(joint_dim, |idx, _| kp[(idx / d, idx % d)]);
        joint += &v * v.adjoint();
    }
    let out = c.apply_matrix(rho);
    Ok(entropy_unchecked(&out) - entropy_unchecked(&joint))
}

fn density_from_factor(a: &CMatrix) -> CMatrix {
    let m = a * a.adjoint();
    let t = m.trace().re;
    m / real(t)
}

fn perturb_matrix(a: &CMatrix, step: f64, rng: &mut ChaCha8Rng) -> CMatrix {
    let g =
        CMatrix::from_fn(a.nrows(), a.ncols(), |_, _| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
    let b = a + g * real(step);
    let n = b.norm();
    b / real(n)
}

fn coherent_restart(c: &QuantumChannel, max_iter: usize, seed: u64, start_mixed: bool) -> RestartOutcome<CMatrix> {
    let d = c.in_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factor = if start_mixed {
        CMatrix::identity(d, d) / real((d as f64).sqrt())
    } else {
        let g =
            CMatrix::from_fn(d, d, |_, _| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)));
        let n = g.norm();
        g / real(n)
    };
    let mut rho = density_from_factor(&factor);
    let mut value = coherent_information_unchecked(c, &rho).unwrap_or(f64::NEG_INFINITY);
    let mut history = vec![value];
    let mut step = STEP_INIT;
    let mut stall = 0;
    let mut converged = false;
    for _ in 0..max_iter {
        let before = value;
        for _ in 0..2 {
            let proposal = perturb_matrix(&factor, step, &mut rng);
            let candidate = density_from_factor(&proposal);
            let v = coherent_information_unchecked(c, &candidate).unwrap_or(f64::NEG_INFINITY);
            if v > value {
                factor = proposal;
                rho = candidate;
                value = v;
                step = (step * 1.5).min(STEP_MAX);
            } else {
                step = (step * 0.8).max(STEP_MIN);
            }
        }
        history.push(value);
        if value - before < IMPROVEMENT_EPS {
            stall += 1;
        } else {
            stall = 0;
        }
        if stall >= STALL_LIMIT {
            converged = true;
            break;
        }
    }
    RestartOutcome { value, achiever: rho, converged, history }
}

/// Best one-shot coherent information found by seeded gradient-free ascent
/// over input density matrices `ρ = AA†/tr(AA†)`. Restart 0 starts from the
/// maximally mixed state. The reported value is a lower bound on the quantum
/// capacity and is never negative, since any pure input attains zero.
pub fn optimize_coherent_information(
    c: &QuantumChannel,
    n_restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<CapacityReport> {
    if n_restarts == 0 {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    let outcomes: Vec<_> = (0..n_restarts)
        .into_par_iter()
        .map(|r| coherent_restart(c, max_iter, seed.wrapping_add(r as u64), r == 0))
        .collect();
    let (best_restart, best) = best_of(outcomes);
    let d = c.in_dim();
    let (value, achiever) = if best.value >= 0.0 {
        (best.value.min((d as f64).log2()), best.achiever)
    } else {
        (0.0, gates::basis_projector(d, 0))
    };
    Ok(CapacityReport {
        value,
        achiever: Achiever::State(achiever),
        restarts: n_restarts,
        best_restart,
        seed,
        converged: best.converged,
        history: best.history,
    })
}

/// `F = ⟨Φ⁺|(M ⊗ id)(|Φ⁺⟩⟨Φ⁺|)|Φ⁺⟩ = ⟨⟨I|J|I⟩⟩ / d²`.
pub fn entanglement_fidelity(c: &QuantumChannel) -> Result<f64> {
    let d = c.in_dim();
    if c.out_dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "entanglement fidelity needs a {d} -> {d} map, got {d} -> {}",
            c.out_dim()
        )));
    }
    let phi = channels::pure_cj(&gates::identity(d));
    let v = phi.vector();
    let f = (v.adjoint() * c.choi_matrix() * v)[(0, 0)].re / (d * d) as f64;
    Ok(f.clamp(0.0, 1.0))
}

/// Outcome of the Knill–Laflamme test with the code space equal to the whole input.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrectabilityCertificate {
    pub correctable: bool,
    /// `λ_jk` with `G_j†G_k ≈ λ_jk I`.
    #[serde(with = "complex_matrix")]
    pub lambda: CMatrix,
    /// Largest `‖G_j†G_k − λ_jk I‖_F`.
    pub max_violation: f64,
    pub tolerance: f64,
    #[serde(skip)]
    pub recovery: Option<QuantumChannel>,
    /// Entanglement fidelity of `recovery ∘ channel`.
    pub recovery_fidelity: Option<f64>,
}

pub const KL_TOLERANCE: f64 = 1e-9;
pub const FIDELITY_TOLERANCE: f64 = 1e-9;

/// Tests `G_j†G_k = λ_jk I` on the canonical Kraus operators of `c` and, when
/// it holds, builds and verifies the recovery channel.
pub fn kl_correctability(c: &QuantumChannel, tol: f64) -> Result<CorrectabilityCertificate> {
    let d = c.in_dim();
    let g = kraus_of_choi(c.choi(), d, tol::RANK)?;
    let n = g.len();
    let id = CMatrix::identity(d, d);
    let mut lambda = CMatrix::zeros(n, n);
    let mut max_violation: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            let m = g[j].adjoint() * &g[k];
            let l = m.trace() / real(d as f64);
            lambda[(j, k)] = l;
            max_violation = max_violation.max((m - &id * l).norm());
        }
    }
    let mut cert = CorrectabilityCertificate {
        correctable: false,
        lambda,
        max_violation,
        tolerance: tol,
        recovery: None,
        recovery_fidelity: None,
    };
    if max_violation > tol {
        return Ok(cert);
    }
    let recovery = kl_recovery(c, &g, &cert.lambda)?;
    let fidelity = entanglement_fidelity(&compose(&recovery, c)?)?;
    cert.correctable = fidelity >= 1.0 - FIDELITY_TOLERANCE;
    cert.recovery = Some(recovery);
    cert.recovery_fidelity = Some(fidelity);
    Ok(cert)
}

/// Measure-and-rotate-back recovery: diagonalize `λ`, turn each rotated
/// Kraus operator `F_k = √D_k·W_k` into the isometry `W_k`, and undo it on
/// its range; the orthogonal complement is sent to `|0⟩`.
fn kl_recovery(c: &QuantumChannel, g: &[CMatrix], lambda: &CMatrix) -> Result<QuantumChannel> {
    let d = c.in_dim();
    let out = c.out_dim();
    let dec = eigh(lambda)?;
    let mut kraus = Vec::new();
    let mut covered = CMatrix::zeros(out, out);
    for (k, &dk) in dec.values.iter().enumerate() {
        if dk <= tol::RANK {
            continue;
        }
        let f = g.iter().enumerate().fold(CMatrix::zeros(out, d), |acc, (j, gj)| acc + gj * dec.vectors[(j, k)]);
        let w = f / real(dk.sqrt());
        covered += &w * w.adjoint();
        kraus.push(w.adjoint());
    }
    let complement = CMatrix::identity(out, out) - covered;
    let rest = eigh(&complement)?;
    let zero = gates::ket(d, 0);
    for (k, &v) in rest.values.iter().enumerate() {
        if v > 0.5 {
            let q = rest.vectors.column(k).into_owned();
            kraus.push(&zero * q.adjoint());
        }
    }
    let input = c.output().clone();
    let output = if input.contains("R") { SpaceLayout::single("recovered", d) } else { SpaceLayout::single("R", d) };
    QuantumChannel::from_kraus_on(input, output, kraus)
}

/// Which qubit is measured and how the other one is corrected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureAndCorrect {
    /// Measure the target in the computational basis and keep the control,
    /// applying `X` on outcome 1.
    TargetZCorrectX,
    /// Measure the control in the `|±⟩` basis and keep the target, applying
    /// `Z` on outcome `−`.
    ControlXCorrectZ,
}

impl MeasureAndCorrect {
    pub const ALL: [MeasureAndCorrect; 2] = [MeasureAndCorrect::TargetZCorrectX, MeasureAndCorrect::ControlXCorrectZ];

    /// Two-Kraus channel `C ⊗ F → R`.
    pub fn channel(self) -> QuantumChannel {
        let kraus = match self {
            MeasureAndCorrect::TargetZCorrectX => vec![
                gates::identity(2).kronecker(&gates::ket(2, 0).adjoint()),
                gates::x().kronecker(&gates::ket(2, 1).adjoint()),
            ],
            MeasureAndCorrect::ControlXCorrectZ => vec![
                gates::plus().adjoint().kronecker(&gates::identity(2)),
                gates::minus().adjoint().kronecker(&gates::z()),
            ],
        };
        QuantumChannel::from_kraus_on(
            SpaceLayout::new([(slot::C, 2), (slot::F, 2)]).expect("decoder input"),
            SpaceLayout::single("R", 2),
            kraus,
        )
        .expect("decoder is CPTP")
    }
}

/// A decoder chosen for a particular induced channel.
#[derive(Clone, Debug)]
pub struct Decoder {
    pub kind: MeasureAndCorrect,
    pub channel: QuantumChannel,
    /// Entanglement fidelity of `decoder ∘ c` for the channel it was chosen for.
    pub fidelity: f64,
}

/// Measure-and-correct decoder for a channel `P → C ⊗ F` on qubits.
///
/// Both members of [`MeasureAndCorrect`] are evaluated and the one with the
/// higher entanglement fidelity is returned, preferring
/// [`MeasureAndCorrect::TargetZCorrectX`] on ties.
pub fn measure_and_correct_decoder(c: &QuantumChannel) -> Result<Decoder> {
    let labels = c.output().labels();
    let dims: Vec<usize> = c.output().factors().iter().map(|f| f.dim).collect();
    if labels != [slot::C, slot::F] || dims != [2, 2] || c.in_dim() != 2 {
        return Err(Error::InvalidLayout(format!(
            "decoder expects a qubit channel into (C: 2, F: 2), got {labels:?} with dims {dims:?}"
        )));
    }
    let mut best: Option<Decoder> = None;
    for kind in MeasureAndCorrect::ALL {
        let channel = kind.channel();
        let fidelity = entanglement_fidelity(&compose(&channel, c)?)?;
        if best.as_ref().is_none_or(|b| fidelity > b.fidelity + 1e-12) {
            best = Some(Decoder { kind, channel, fidelity });
        }
    }
    Ok(best.expect("two candidates"))
}

/// `q` for channels of the form `(1−q)ρ + q PρP` with a single Pauli `P`.
pub fn single_pauli_error_probability(c: &QuantumChannel) -> Option<f64> {
    if c.in_dim() != 2 || c.out_dim() != 2 {
        return None;
    }
    let paulis = [gates::identity(2), gates::x(), gates::y(), gates::z()];
    let vecs: Vec<CVector> = paulis.iter().map(|p| channels::pure_cj(p).vector().clone()).collect();
    let probs: Vec<f64> = vecs.iter().map(|v| (v.adjoint() * c.choi_matrix() * v)[(0, 0)].re / 4.0).collect();
    let rebuilt = vecs.iter().zip(&probs).fold(CMatrix::zeros(4, 4), |acc, (v, p)| acc + v * v.adjoint() * real(*p));
    if channels::max_abs_diff(&rebuilt, c.choi_matrix()) > 1e-9 {
        return None;
    }
    let errors: Vec<f64> = probs[1..].iter().copied().filter(|p| *p > 1e-12).collect();
    match errors.len() {
        0 => Some(0.0),
        1 => Some(errors[0]),
        _ => None,
    }
}

/// Exact quantum capacity `1 − h(q)` of a single-Pauli channel.
pub fn dephasing_capacity(q: f64) -> f64 {
    1.0 - binary_entropy(q)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { restarts: 8, max_iter: 300, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelQBound {
    /// Best coherent information found by the optimizer.
    pub optimized: f64,
    /// `1 − h(q)` when the channel has a single Pauli error.
    pub exact: Option<f64>,
    /// The bound used for the comparison.
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BottleneckReport {
    pub channel_a: ChannelQBound,
    pub channel_b: ChannelQBound,
    /// Bound for `M_B ∘ M_A`.
    pub composition: ChannelQBound,
    pub assisted_rate: f64,
    pub assisted_correctable: bool,
    pub assisted_fidelity: Option<f64>,
    pub margin: f64,
    pub violation: bool,
}

fn q_bound(c: &QuantumChannel, settings: OptimizerSettings) -> Result<ChannelQBound> {
    let optimized = optimize_coherent_information(c, settings.restarts, settings.max_iter, settings.seed)?.value;
    let exact = single_pauli_error_probability(c).map(dephasing_capacity);
    let bound = exact.unwrap_or(optimized);
    Ok(ChannelQBound { optimized, exact, bound })
}

pub const BOTTLENECK_MARGIN: f64 = 1e-6;

/// Compares the process-assisted quantum rate with the individual bounds.
pub fn bottleneck_audit(
    m_a: &QuantumChannel,
    m_b: &QuantumChannel,
    process: &PureProcessVector,
    settings: OptimizerSettings,
) -> Result<BottleneckReport> {
    for m in [m_a, m_b] {
        if m.in_dim() != 2 || m.out_dim() != 2 {
            return Err(Error::DimensionMismatch("bottleneck audit works on qubit channels".into()));
        }
    }
    let channel_a = q_bound(m_a, settings)?;
    let channel_b = q_bound(m_b, settings)?;
    let composition = q_bound(&compose(m_b, m_a)?, settings)?;
    let induced = process.apply(m_a, m_b)?;
    let cert = kl_correctability(&induced, KL_TOLERANCE)?;
    let assisted_rate = if cert.correctable {
        (induced.in_dim() as f64).log2()
    } else {
        optimize_coherent_information(&induced, settings.restarts, settings.max_iter, settings.seed)?.value
    };
    let min_individual = channel_a.bound.min(channel_b.bound);
    Ok(BottleneckReport {
        channel_a,
        channel_b,
        composition,
        assisted_rate,
        assisted_correctable: cert.correctable,
        assisted_fidelity: cert.recovery_fidelity,
        margin: BOTTLENECK_MARGIN,
        violation: assisted_rate > min_individual + BOTTLENECK_MARGIN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{bit_flip, depolarizing, identity_channel, phase_flip, unitary_channel, xy_channel};
    use crate::processes::{build_cnot_sdpp, build_salek_sdpp, build_switch};

    #[test]
    fn entropy_examples() {
        let pure = gates::plus() * gates::plus().adjoint();
        assert!(von_neumann_entropy(&pure).unwrap().abs() < 1e-12);
        assert!((von_neumann_entropy(&(CMatrix::identity(2, 2) * real(0.5))).unwrap() - 1.0).abs() < 1e-14);
        let diag = CMatrix::from_diagonal(&CVector::from_vec(vec![real(0.75), real(0.25)]));
        let oracle = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((von_neumann_entropy(&diag).unwrap() - oracle).abs() < 1e-14);
        assert!((oracle - 0.811278).abs() < 1e-6);
        assert!(von_neumann_entropy(&CMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn holevo_examples() {
        let e = Ensemble::uniform_pure(&[gates::ket(2, 0), gates::ket(2, 1)]).unwrap();
        assert!((holevo_quantity(&identity_channel(2), &e).unwrap() - 1.0).abs() < 1e-12);
        assert!(holevo_quantity(&depolarizing(2).unwrap(), &e).unwrap().abs() < 1e-12);
        let big = Ensemble::uniform_pure(&[gates::ket(3, 0), gates::ket(3, 1)]).unwrap();
        assert!(matches!(holevo_quantity(&identity_channel(2), &big), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn ensemble_validation() {
        let s = gates::basis_projector(2, 0);
        assert!(Ensemble::new(vec![(0.5, s.clone()), (0.4, s.clone())]).is_err());
        assert!(Ensemble::new(vec![(1.0, CMatrix::identity(2, 2))]).is_err());
        assert!(Ensemble::new(vec![(1.0, s)]).is_ok());
    }

    #[test]
    fn optimize_holevo_identity() {
        let r = optimize_holevo(&identity_channel(2), 4, 4, 200, 0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6, "{}", r.value);
        assert!(r.history.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(optimize_holevo(&identity_channel(2), 1, 4, 10, 0).is_err());
    }

    #[test]
    fn optimize_holevo_is_deterministic() {
        let a = optimize_holevo(&bit_flip(0.2).unwrap(), 3, 4, 50, 7).unwrap();
        let b = optimize_holevo(&bit_flip(0.2).unwrap(), 3, 4, 50, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coherent_information_examples() {
        let half = CMatrix::identity(2, 2) * real(0.5);
        assert!((coherent_information(&identity_channel(2), &half).unwrap() - 1.0).abs() < 1e-12);
        let u = unitary_channel(&gates::hadamard()).unwrap();
        assert!((coherent_information(&u, &half).unwrap() - 1.0).abs() < 1e-12);
        let pf = phase_flip(0.1).unwrap();
        let oracle = 1.0 - binary_entropy(0.1);
        assert!((coherent_information(&pf, &half).unwrap() - oracle).abs() < 1e-12);
        assert!(coherent_information(&pf, &CMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn optimize_coherent_information_dephasing() {
        let r = optimize_coherent_information(&phase_flip(0.5).unwrap(), 4, 100, 1).unwrap();
        assert!(r.value.abs() < 1e-6);
        let r = optimize_coherent_information(&phase_flip(0.1).unwrap(), 4, 100, 1).unwrap();
        assert!((r.value - 0.531).abs() < 1e-3, "{}", r.value);
        assert!(r.value >= dephasing_capacity(0.1) - 1e-3);
    }

    #[test]
    fn entanglement_fidelity_examples() {
        assert!((entanglement_fidelity(&identity_channel(2)).unwrap() - 1.0).abs() < 1e-15);
        assert!(entanglement_fidelity(&unitary_channel(&gates::x()).unwrap()).unwrap().abs() < 1e-15);
        assert!((entanglement_fidelity(&depolarizing(2).unwrap()).unwrap() - 0.25).abs() < 1e-15);
        let rect = channels::random_cptp(2, 3, 2, 0).unwrap();
        assert!(entanglement_fidelity(&rect).is_err());
    }

    #[test]
    fn kl_unitary_channel() {
        let u = unitary_channel(&gates::hadamard()).unwrap();
        let cert = kl_correctability(&u, KL_TOLERANCE).unwrap();
        assert!(cert.correctable);
        assert_eq!(cert.lambda.shape(), (1, 1));
        assert!((cert.lambda[(0, 0)] - real(1.0)).norm() < 1e-12);
        let rec = cert.recovery.unwrap();
        assert_eq!(rec.kraus().len(), 1);
        assert!(channels::max_abs_diff(&rec.kraus()[0], &gates::hadamard().adjoint()) < 1e-12);
    }

    #[test]
    fn kl_depolarizing_not_correctable() {
        let cert = kl_correctability(&depolarizing(2).unwrap(), KL_TOLERANCE).unwrap();
        assert!(!cert.correctable);
        assert!(cert.max_violation > 0.1);
        assert!(cert.recovery.is_none());
    }

    #[test]
    fn decoders_for_xy_channels() {
        let xy = xy_channel();
        let d = measure_and_correct_decoder(&build_cnot_sdpp().apply(&xy, &xy).unwrap()).unwrap();
        assert_eq!(d.kind, MeasureAndCorrect::TargetZCorrectX);
        assert!(d.fidelity >= 1.0 - 1e-9);
        let d = measure_and_correct_decoder(&build_switch().apply(&xy, &xy).unwrap()).unwrap();
        assert_eq!(d.kind, MeasureAndCorrect::ControlXCorrectZ);
        assert!(d.fidelity >= 1.0 - 1e-9);
        for kind in MeasureAndCorrect::ALL {
            assert!(kind.channel().is_cptp(1e-12));
        }
    }

    #[test]
    fn target_measuring_decoder_misses_the_switch() {
        let xy = xy_channel();
        let g = build_switch().apply(&xy, &xy).unwrap();
        let f = entanglement_fidelity(&compose(&MeasureAndCorrect::TargetZCorrectX.channel(), &g).unwrap()).unwrap();
        assert!((f - 0.25).abs() < 1e-9);
    }

    #[test]
    fn decoder_rejects_wrong_layout() {
        assert!(matches!(measure_and_correct_decoder(&xy_channel()), Err(Error::InvalidLayout(_))));
    }

    #[test]
    fn single_pauli_detection() {
        assert!((single_pauli_error_probability(&phase_flip(0.3).unwrap()).unwrap() - 0.3).abs() < 1e-12);
        assert!((single_pauli_error_probability(&bit_flip(0.2).unwrap()).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(single_pauli_error_probability(&identity_channel(2)), Some(0.0));
        assert!(single_pauli_error_probability(&depolarizing(2).unwrap()).is_none());
        assert!(single_pauli_error_probability(&unitary_channel(&gates::hadamard()).unwrap()).is_none());
    }

    #[test]
    fn bottleneck_identity_channels_no_violation() {
        let id = identity_channel(2);
        let r =
            bottleneck_audit(&id, &id, &build_salek_sdpp(), OptimizerSettings { restarts: 2, max_iter: 50, seed: 0 })
                .unwrap();
        assert!((r.channel_a.bound - 1.0).abs() < 1e-12);
        assert!((r.assisted_rate - 1.0).abs() < 1e-12);
        assert!(!r.violation);
    }

    #[test]
    fn bottleneck_low_noise_point() {
        let r = bottleneck_audit(
            &bit_flip(0.1).unwrap(),
            &phase_flip(0.1).unwrap(),
            &build_salek_sdpp(),
            OptimizerSettings { restarts: 2, max_iter: 100, seed: 0 },
        )
        .unwrap();
        let oracle = 1.0 - binary_entropy(0.1);
        assert!((r.channel_a.exact.unwrap() - oracle).abs() < 1e-12);
        assert!((r.channel_b.exact.unwrap() - oracle).abs() < 1e-12);
        assert!(r.assisted_correctable);
        assert!(r.violation);
    }
}
