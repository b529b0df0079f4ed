//! Pure processes, superpositions of direct pure processes, and their action
//! on pairs of channels.
//!
//! Every process lives on the slot layout `(C, P, A_I, A_O, B_I, B_O, F)`,
//! with `C` absent for a direct process. A pure process is stored as a unit
//! vector `ŵ`; its process matrix is `W = s·|ŵ⟩⟨ŵ|` with
//! `s = d_P·d_{A_O}·d_{B_O}`, which is the normalization that makes the
//! induced map trace preserving.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{self, pure_cj, QuantumChannel};
use crate::error::{Error, Result};
use crate::tensor::{
    eigvalsh, gates, real, tol, unitarity_residual, CMatrix, CVector, LabeledOperator, LabeledVector, SpaceLayout, C64,
};

/// Slot labels.
pub mod slot {
    pub const C: &str = "C";
    pub const P: &str = "P";
    pub const A_I: &str = "A_I";
    pub const A_O: &str = "A_O";
    pub const B_I: &str = "B_I";
    pub const B_O: &str = "B_O";
    pub const F: &str = "F";

    pub const PARTY: [&str; 4] = [A_I, A_O, B_I, B_O];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalOrder {
    /// `T → M_A → U → M_B → V`
    #[serde(rename = "AB")]
    AThenB,
    /// `T → M_B → U → M_A → V`
    #[serde(rename = "BA")]
    BThenA,
}

/// One fixed-order circuit `T, M_first, U, M_second, V`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectPureProcessSpec {
    pub order: CausalOrder,
    pub t: CMatrix,
    pub u: CMatrix,
    pub v: CMatrix,
}

impl DirectPureProcessSpec {
    pub fn new(order: CausalOrder, t: CMatrix, u: CMatrix, v: CMatrix) -> Result<Self> {
        let spec = Self { order, t, u, v };
        spec.validate()?;
        Ok(spec)
    }

    /// The plain circuit with `T = U = V = I`.
    pub fn identity(order: CausalOrder, d: usize) -> Self {
        Self { order, t: gates::identity(d), u: gates::identity(d), v: gates::identity(d) }
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.t.nrows();
        for m in [&self.t, &self.u, &self.v] {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimensionMismatch("T, U, V must be square of one dimension".into()));
            }
            let residual = unitarity_residual(m);
            if residual > tol::DEFAULT {
                return Err(Error::NotUnitary { residual });
            }
        }
        Ok(())
    }

    /// The unitary this circuit implements when the parties apply `a` and `b`.
    pub fn circuit_unitary(&self, a: &CMatrix, b: &CMatrix) -> CMatrix {
        match self.order {
            CausalOrder::AThenB => &self.v * b * &self.u * a * &self.t,
            CausalOrder::BThenA => &self.v * a * &self.u * b * &self.t,
        }
    }
}

/// Equal-weight superposition of direct pure processes, indexed by a control.
#[derive(Clone, Debug, PartialEq)]
pub struct SdppSpec {
    terms: Vec<DirectPureProcessSpec>,
}

impl SdppSpec {
    pub fn new(terms: Vec<DirectPureProcessSpec>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::InvalidArgument("an SDPP needs at least one term".into()))?;
        let d = first.dim();
        for t in &terms {
            t.validate()?;
            if t.dim() != d {
                return Err(Error::DimensionMismatch(format!("SDPP terms of dimensions {d} and {}", t.dim())));
            }
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[DirectPureProcessSpec] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.terms[0].dim()
    }
}

/// A unit vector on the slot layout representing `W ∝ |w⟩⟨w|`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureProcessVector {
    vector: LabeledVector,
}

fn direct_layout(d: usize) -> SpaceLayout {
    SpaceLayout::new([(slot::P, d), (slot::A_I, d), (slot::A_O, d), (slot::B_I, d), (slot::B_O, d), (slot::F, d)])
        .expect("direct layout")
}

fn cj_on(k: &CMatrix, input: &str, output: &str) -> LabeledVector {
    let layout = SpaceLayout::new([(input, k.ncols()), (output, k.nrows())]).expect("cj layout");
    LabeledVector::new(layout, pure_cj(k).vector().clone()).expect("cj vector")
}

fn check_layout(layout: &SpaceLayout) -> Result<()> {
    let labels = layout.labels();
    let ok = match labels.len() {
        6 => labels == [slot::P, slot::A_I, slot::A_O, slot::B_I, slot::B_O, slot::F],
        7 => labels == [slot::C, slot::P, slot::A_I, slot::A_O, slot::B_I, slot::B_O, slot::F],
        _ => false,
    };
    if !ok {
        return Err(Error::InvalidLayout(format!(
            "expected slot layout (C?, P, A_I, A_O, B_I, B_O, F), got {labels:?}"
        )));
    }
    let d = layout.dim_of(slot::A_I)?;
    for l in slot::PARTY {
        if layout.dim_of(l)? != d {
            return Err(Error::InvalidLayout("party slots must share one dimension".into()));
        }
    }
    Ok(())
}

impl PureProcessVector {
    /// Wraps a vector on the slot layout; the vector is normalized.
    pub fn new(vector: LabeledVector) -> Result<Self> {
        check_layout(vector.layout())?;
        let n = vector.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidArgument("process vector has zero norm".into()));
        }
        let amplitudes = vector.amplitudes() / real(n);
        Ok(Self { vector: LabeledVector::new(vector.layout().clone(), amplitudes)? })
    }

    pub fn vector(&self) -> &LabeledVector {
        &self.vector
    }

    pub fn layout(&self) -> &SpaceLayout {
        self.vector.layout()
    }

    pub fn amplitudes(&self) -> &CVector {
        self.vector.amplitudes()
    }

    /// Dimension of each party slot.
    pub fn party_dim(&self) -> usize {
        self.layout().dim_of(slot::A_I).expect("checked layout")
    }

    pub fn control_dim(&self) -> Option<usize> {
        self.layout().dim_of(slot::C).ok()
    }

    pub fn has_control(&self) -> bool {
        self.layout().contains(slot::C)
    }

    /// `d_P·d_{A_O}·d_{B_O}`.
    pub fn scale(&self) -> f64 {
        let l = self.layout();
        (l.dim_of(slot::P).unwrap() * l.dim_of(slot::A_O).unwrap() * l.dim_of(slot::B_O).unwrap()) as f64
    }

    pub fn process_matrix(&self) -> ProcessMatrix {
        ProcessMatrix { op: LabeledOperator::projector(&self.vector).scale(self.scale()) }
    }

    fn output_labels(&self) -> Vec<&'static str> {
        if self.has_control() {
            vec![slot::C, slot::F]
        } else {
            vec![slot::F]
        }
    }

    /// Induced channel `P → (C,) F` through the rank-one factorization
    /// `G = s·Ω (M_A ⊗ M_B) Ω†`, where `Ω` reshapes `ŵ` with rows
    /// `(P, C, F)` and columns `(A_I, A_O, B_I, B_O)`.
    pub fn apply(&self, m_a: &QuantumChannel, m_b: &QuantumChannel) -> Result<QuantumChannel> {
        let d = self.party_dim();
        check_party_channel(m_a, d, "M_A")?;
        check_party_channel(m_b, d, "M_B")?;
        let mut rows = vec![slot::P];
        rows.extend(self.output_labels());
        let (row_layout, _, omega) = self.vector.to_matrix(&rows)?;
        let m = m_a.choi_matrix().kronecker(m_b.choi_matrix());
        let g = &omega * m * omega.adjoint() * real(self.scale());
        QuantumChannel::from_choi(LabeledOperator::new(row_layout, g)?, 1)
    }

    /// `(1/d²)·tr_{A_I A_O B_I B_O} W`, on `(C, P, F)` in slot order.
    pub fn reduced(&self) -> Result<LabeledOperator> {
        let mut rows = Vec::new();
        if self.has_control() {
            rows.push(slot::C);
        }
        rows.extend([slot::P, slot::F]);
        let (row_layout, _, omega) = self.vector.to_matrix(&rows)?;
        let d = self.party_dim() as f64;
        LabeledOperator::new(row_layout, &omega * omega.adjoint() * real(self.scale() / (d * d)))
    }
}

fn check_party_channel(m: &QuantumChannel, d: usize, name: &str) -> Result<()> {
    if m.in_dim() != d || m.out_dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "{name} maps {} -> {} but the party slots have dimension {d}",
            m.in_dim(),
            m.out_dim()
        )));
    }
    if !m.is_cptp(tol::DEFAULT) {
        return Err(Error::NotCptp(format!("{name} is not CPTP")));
    }
    Ok(())
}

/// A process matrix on the slot layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessMatrix {
    op: LabeledOperator,
}

impl ProcessMatrix {
    pub fn new(op: LabeledOperator) -> Result<Self> {
        check_layout(op.layout())?;
        Ok(Self { op })
    }

    pub fn operator(&self) -> &LabeledOperator {
        &self.op
    }

    pub fn party_dim(&self) -> usize {
        self.op.layout().dim_of(slot::A_I).expect("checked layout")
    }

    /// Induced channel `G = tr_{A_I A_O B_I B_O}(W^{T_{A_I A_O B_I B_O}} · (M_A ⊗ M_B ⊗ I))`,
    /// evaluated literally on the full space.
    pub fn apply(&self, m_a: &QuantumChannel, m_b: &QuantumChannel) -> Result<QuantumChannel> {
        let d = self.party_dim();
        check_party_channel(m_a, d, "M_A")?;
        check_party_channel(m_b, d, "M_B")?;
        let layout = self.op.layout();
        let a = LabeledOperator::new(SpaceLayout::new([(slot::A_I, d), (slot::A_O, d)])?, m_a.choi_matrix().clone())?;
        let b = LabeledOperator::new(SpaceLayout::new([(slot::B_I, d), (slot::B_O, d)])?, m_b.choi_matrix().clone())?;
        let rest = layout.restrict(&[slot::C, slot::P, slot::F]);
        let full = a.tensor(&b)?.tensor(&LabeledOperator::identity(rest))?;
        let full = full.permute_factors(&layout.labels())?;
        let wt = self.op.partial_transpose(&slot::PARTY)?;
        let product = LabeledOperator::new(layout.clone(), wt.matrix() * full.matrix())?;
        let g = product.partial_trace(&slot::PARTY)?;
        let mut order = vec![slot::P];
        if layout.contains(slot::C) {
            order.push(slot::C);
        }
        order.push(slot::F);
        QuantumChannel::from_choi(g.permute_factors(&order)?, 1)
    }

    /// `(1/d²)·tr_{A_I A_O B_I B_O} W`.
    pub fn reduced(&self) -> Result<LabeledOperator> {
        let d = self.party_dim() as f64;
        Ok(self.op.partial_trace(&slot::PARTY)?.scale(1.0 / (d * d)))
    }
}

/// `|T⟩⟩^{P A_I}|U⟩⟩^{A_O B_I}|V⟩⟩^{B_O F}` (or with `A` and `B` exchanged),
/// normalized.
pub fn build_direct_pure_process(spec: &DirectPureProcessSpec) -> Result<PureProcessVector> {
    spec.validate()?;
    let (first_in, first_out, second_in, second_out) = match spec.order {
        CausalOrder::AThenB => (slot::A_I, slot::A_O, slot::B_I, slot::B_O),
        CausalOrder::BThenA => (slot::B_I, slot::B_O, slot::A_I, slot::A_O),
    };
    let w = cj_on(&spec.t, slot::P, first_in).tensor(&cj_on(&spec.u, first_out, second_in))?.tensor(&cj_on(
        &spec.v,
        second_out,
        slot::F,
    ))?;
    let w = w.permute_factors(&direct_layout(spec.dim()).labels())?;
    PureProcessVector::new(w)
}

/// `(1/√N) Σ_i |i⟩^C |w_i⟩`.
pub fn build_sdpp(spec: &SdppSpec) -> Result<PureProcessVector> {
    let n = spec.terms().len();
    let d = spec.dim();
    let inner = direct_layout(d).dim();
    let mut amplitudes = CVector::zeros(n * inner);
    for (i, term) in spec.terms().iter().enumerate() {
        let w = build_direct_pure_process(term)?;
        amplitudes.rows_mut(i * inner, inner).copy_from(w.amplitudes());
    }
    let layout = SpaceLayout::single(slot::C, n).concat(&direct_layout(d))?;
    PureProcessVector::new(LabeledVector::new(layout, amplitudes / real((n as f64).sqrt()))?)
}

/// The qubit quantum switch, written out amplitude by amplitude.
pub fn build_switch() -> PureProcessVector {
    let layout = SpaceLayout::single(slot::C, 2).concat(&direct_layout(2)).expect("switch layout");
    let mut amplitudes = CVector::zeros(layout.dim());
    for idx in 0..layout.dim() {
        let bit = |k: usize| (idx >> (6 - k)) & 1;
        let (c, p, ai, ao, bi, bo, f) = (bit(0), bit(1), bit(2), bit(3), bit(4), bit(5), bit(6));
        let first = c == 0 && p == ai && ao == bi && bo == f;
        let second = c == 1 && p == bi && bo == ai && ao == f;
        if first || second {
            amplitudes[idx] = real(0.25);
        }
    }
    PureProcessVector::new(LabeledVector::new(layout, amplitudes).expect("switch vector")).expect("switch")
}

pub fn switch_spec() -> SdppSpec {
    SdppSpec::new(vec![
        DirectPureProcessSpec::identity(CausalOrder::AThenB, 2),
        DirectPureProcessSpec::identity(CausalOrder::BThenA, 2),
    ])
    .expect("switch spec")
}

/// Control-not from `|+⟩^C` onto the target, then `M_A`, then `M_B`.
pub fn cnot_sdpp_spec() -> SdppSpec {
    let id = gates::identity(2);
    SdppSpec::new(vec![
        DirectPureProcessSpec::identity(CausalOrder::AThenB, 2),
        DirectPureProcessSpec::new(CausalOrder::AThenB, gates::x(), id.clone(), id).expect("unitary"),
    ])
    .expect("cnot spec")
}

pub fn build_cnot_sdpp() -> PureProcessVector {
    build_sdpp(&cnot_sdpp_spec()).expect("cnot sdpp")
}

/// Control-not, then `M_B`, `H`, `M_A`, `H`.
pub fn salek_sdpp_spec() -> SdppSpec {
    let h = gates::hadamard();
    SdppSpec::new(vec![
        DirectPureProcessSpec::new(CausalOrder::BThenA, gates::identity(2), h.clone(), h.clone()).expect("unitary"),
        DirectPureProcessSpec::new(CausalOrder::BThenA, gates::x(), h.clone(), h).expect("unitary"),
    ])
    .expect("salek spec")
}

pub fn build_salek_sdpp() -> PureProcessVector {
    build_sdpp(&salek_sdpp_spec()).expect("salek sdpp")
}

/// Encoding unitary for control bitstring `b = b₁b₂b₃b₄` (b₁ most
/// significant): `T_b = Z^{b₁⊕b₂}·X^{b₃⊕b₄}`.
///
/// This is the restriction of the nine-qubit Shor encoder to the target and
/// the four ancillas that protect it, with each control-not reversed so the
/// ancillas act as `|+⟩` controls. The `T_b` run uniformly over `{I, X, Z, ZX}`,
/// so the target's reduced state is maximally mixed for every input.
pub fn shor_target_unitary(bits: usize) -> CMatrix {
    let b = |k: usize| (bits >> (3 - k)) & 1;
    let z_power = b(0) ^ b(1);
    let x_power = b(2) ^ b(3);
    let mut t = gates::identity(2);
    if x_power == 1 {
        t = gates::x() * t;
    }
    if z_power == 1 {
        t = gates::z() * t;
    }
    t
}

pub fn shor_sdpp_spec() -> SdppSpec {
    let id = gates::identity(2);
    SdppSpec::new(
        (0..16)
            .map(|b| DirectPureProcessSpec::new(CausalOrder::AThenB, shor_target_unitary(b), id.clone(), id.clone()))
            .collect::<Result<Vec<_>>>()
            .expect("unitaries"),
    )
    .expect("shor spec")
}

pub fn build_shor_sdpp() -> PureProcessVector {
    build_sdpp(&shor_sdpp_spec()).expect("shor sdpp")
}

/// `n` controls all kicking back onto the target inside one Hadamard pair:
/// `T_b = H·X^{parity(b)}·H = Z^{parity(b)}`. Only the parity of the control
/// matters, so this is a single effective control qubit and is not
/// correctable against arbitrary noise.
pub fn parity_kickback_sdpp_spec(n_controls: u32) -> SdppSpec {
    let id = gates::identity(2);
    let h = gates::hadamard();
    SdppSpec::new(
        (0..1usize << n_controls)
            .map(|b| {
                let t = if b.count_ones() % 2 == 1 { &h * gates::x() * &h } else { id.clone() };
                DirectPureProcessSpec::new(CausalOrder::AThenB, t, id.clone(), id.clone())
            })
            .collect::<Result<Vec<_>>>()
            .expect("unitaries"),
    )
    .expect("parity spec")
}

/// Outcome of sampling-based validation of a pure process.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ValidationReport {
    pub n_samples: usize,
    pub seed: u64,
    /// Largest second eigenvalue of the induced Choi operator over unitary pairs.
    pub max_second_eigenvalue: f64,
    /// Largest trace-preservation residual over all samples.
    pub max_tp_residual: f64,
    /// Most negative Choi eigenvalue over random CPTP pairs (as a positive number).
    pub max_negativity: f64,
    pub rank_tolerance: f64,
    pub passed: bool,
}

fn tp_residual(g: &LabeledOperator) -> Result<f64> {
    let outputs: Vec<&str> = g.layout().labels().into_iter().filter(|l| *l != slot::P).collect();
    let m = g.partial_trace(&outputs)?;
    let d = m.dim();
    Ok((m.matrix() - CMatrix::identity(d, d)).norm())
}

/// Induced Choi `s·Ω (M_A ⊗ M_B) Ω†` without CPTP checks on the result.
fn induced_choi(w: &PureProcessVector, m_a: &CMatrix, m_b: &CMatrix) -> Result<LabeledOperator> {
    let mut rows = vec![slot::P];
    rows.extend(w.output_labels());
    let (row_layout, _, omega) = w.vector.to_matrix(&rows)?;
    let g = &omega * m_a.kronecker(m_b) * omega.adjoint() * real(w.scale());
    LabeledOperator::new(row_layout, g)
}

/// Checks by sampling that `w` maps unitary pairs to unitary channels and
/// CPTP pairs to CPTP maps.
pub fn validate_pure_process(w: &PureProcessVector, n_samples: usize, seed: u64) -> Result<ValidationReport> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let d = w.party_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_second: f64 = 0.0;
    let mut max_tp: f64 = 0.0;
    let mut max_neg: f64 = 0.0;
    for _ in 0..n_samples {
        let ua = channels::haar_unitary(d, &mut rng);
        let ub = channels::haar_unitary(d, &mut rng);
        let g = induced_choi(w, &pure_choi(&ua), &pure_choi(&ub))?;
        let ev = eigvalsh(g.matrix())?;
        max_second = max_second.max(ev.get(1).copied().unwrap_or(0.0).abs());
        max_tp = max_tp.max(tp_residual(&g)?);

        let ca = channels::random_cptp_with(d, d, 2, &mut rng)?;
        let cb = channels::random_cptp_with(d, d, 2, &mut rng)?;
        let g = induced_choi(w, ca.choi_matrix(), cb.choi_matrix())?;
        let ev = eigvalsh(g.matrix())?;
        max_neg = max_neg.max(-ev.last().copied().unwrap_or(0.0));
        max_tp = max_tp.max(tp_residual(&g)?);
    }
    let rank_tolerance = 1e-8;
    let passed = max_second <= rank_tolerance && max_tp <= tol::DEFAULT && max_neg <= tol::DEFAULT;
    Ok(ValidationReport {
        n_samples,
        seed,
        max_second_eigenvalue: max_second,
        max_tp_residual: max_tp,
        max_negativity: max_neg,
        rank_tolerance,
        passed,
    })
}

fn pure_choi(u: &CMatrix) -> CMatrix {
    let v = pure_cj(u).vector().clone();
    &v * v.adjoint()
}

/// Channel `P → C ⊗ F` obtained by tracing both environments from
///
/// `|ψ⟩ ↦ (1/√2)|0⟩ Σ_i K_i|ψ⟩|i⟩|ε₁⟩ + (1/√2)|1⟩ Σ_j L_j|ψ⟩|ε₀⟩|j⟩`.
///
/// `eps0[i] = ⟨ε₀|i⟩` and `eps1[j] = ⟨ε₁|j⟩`. Unlike a process, the result
/// depends on the Kraus operators themselves.
pub fn build_path_superposition(
    kraus_a: &[CMatrix],
    kraus_b: &[CMatrix],
    eps0: &[C64],
    eps1: &[C64],
) -> Result<QuantumChannel> {
    if eps0.len() != kraus_a.len() {
        return Err(Error::LengthMismatch(format!(
            "{} overlaps for {} Kraus operators of M_A",
            eps0.len(),
            kraus_a.len()
        )));
    }
    if eps1.len() != kraus_b.len() {
        return Err(Error::LengthMismatch(format!(
            "{} overlaps for {} Kraus operators of M_B",
            eps1.len(),
            kraus_b.len()
        )));
    }
    for eps in [eps0, eps1] {
        let n = eps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (n - 1.0).abs() > tol::DEFAULT {
            return Err(Error::NonUnitOverlap(n));
        }
    }
    let d = kraus_a.first().ok_or_else(|| Error::InvalidArgument("empty Kraus list".into()))?.ncols();
    if kraus_a.iter().chain(kraus_b).any(|k| k.shape() != (d, d)) {
        return Err(Error::DimensionMismatch("path superposition needs square Kraus operators of one size".into()));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut kraus = Vec::with_capacity(kraus_a.len() * kraus_b.len());
    for (i, k) in kraus_a.iter().enumerate() {
        for (j, l) in kraus_b.iter().enumerate() {
            let mut g = CMatrix::zeros(2 * d, d);
            g.rows_mut(0, d).copy_from(&(k * (eps1[j].conj() * s)));
            g.rows_mut(d, d).copy_from(&(l * (eps0[i].conj() * s)));
            kraus.push(g);
        }
    }
    QuantumChannel::from_kraus_on(
        SpaceLayout::single(slot::P, d),
        SpaceLayout::new([(slot::C, 2), (slot::F, d)])?,
        kraus,
    )
}

/// `⟨ε|i⟩ = δ_{i0}`.
pub fn first_basis_overlap(n: usize) -> Vec<C64> {
    (0..n).map(|i| if i == 0 { real(1.0) } else { C64::default() }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{depolarizing, max_abs_diff, unitary_channel};

    fn bell_projector() -> CMatrix {
        pure_choi(&gates::identity(2))
    }

    #[test]
    fn direct_identity_process_vector() {
        let w = build_direct_pure_process(&DirectPureProcessSpec::identity(CausalOrder::AThenB, 2)).unwrap();
        assert!((w.vector().norm() - 1.0).abs() < 1e-12);
        // |I⟩⟩|I⟩⟩|I⟩⟩ / 2^{3/2}: nonzero exactly when p=ai, ao=bi, bo=f
        for idx in 0..64 {
            let bit = |k: usize| (idx >> (5 - k)) & 1;
            let on = bit(0) == bit(1) && bit(2) == bit(3) && bit(4) == bit(5);
            let expected = if on { 1.0 / 8f64.sqrt() } else { 0.0 };
            assert!((w.amplitudes()[idx] - real(expected)).norm() < 1e-15);
        }
        assert!(!w.has_control());
    }

    #[test]
    fn direct_process_with_x_in_first_slot() {
        let id = gates::identity(2);
        let spec = DirectPureProcessSpec::new(CausalOrder::AThenB, gates::x(), id.clone(), id).unwrap();
        let w = build_direct_pure_process(&spec).unwrap();
        for idx in 0..64 {
            let bit = |k: usize| (idx >> (5 - k)) & 1;
            let on = bit(0) != bit(1) && bit(2) == bit(3) && bit(4) == bit(5);
            let expected = if on { 1.0 / 8f64.sqrt() } else { 0.0 };
            assert!((w.amplitudes()[idx] - real(expected)).norm() < 1e-15);
        }
    }

    #[test]
    fn direct_process_rejects_non_unitary() {
        let id = gates::identity(2);
        let bad = DirectPureProcessSpec { order: CausalOrder::AThenB, t: id.clone() * real(2.0), u: id.clone(), v: id };
        assert!(matches!(build_direct_pure_process(&bad), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn sdpp_single_term_has_trivial_control() {
        let spec = SdppSpec::new(vec![DirectPureProcessSpec::identity(CausalOrder::BThenA, 2)]).unwrap();
        let w = build_sdpp(&spec).unwrap();
        assert_eq!(w.control_dim(), Some(1));
        let direct = build_direct_pure_process(&spec.terms()[0]).unwrap();
        assert_eq!(w.amplitudes(), direct.amplitudes());
    }

    #[test]
    fn sdpp_rejects_mixed_dimensions() {
        let terms = vec![
            DirectPureProcessSpec::identity(CausalOrder::AThenB, 2),
            DirectPureProcessSpec::identity(CausalOrder::AThenB, 3),
        ];
        assert!(matches!(SdppSpec::new(terms), Err(Error::DimensionMismatch(_))));
        assert!(SdppSpec::new(vec![]).is_err());
    }

    #[test]
    fn switch_matches_sdpp_construction() {
        let a = build_switch();
        let b = build_sdpp(&switch_spec()).unwrap();
        assert_eq!(a.layout(), b.layout());
        assert!((a.amplitudes() - b.amplitudes()).norm() < 1e-15);
        assert_eq!(a.amplitudes().len(), 128);
    }

    #[test]
    fn switch_with_identity_channels() {
        let id = channels::identity_channel(2);
        let g = build_switch().apply(&id, &id).unwrap();
        // ρ ↦ |+⟩⟨+| ⊗ ρ, i.e. Kraus |+⟩ ⊗ I
        let k = gates::plus().kronecker(&gates::identity(2));
        let expected = pure_choi(&k);
        assert!(max_abs_diff(g.choi_matrix(), &expected) < 1e-12);
        assert_eq!(g.output().labels(), vec![slot::C, slot::F]);
    }

    #[test]
    fn fast_and_literal_application_agree() {
        let ca = channels::random_cptp(2, 2, 3, 1).unwrap();
        let cb = channels::random_cptp(2, 2, 2, 2).unwrap();
        for w in [build_switch(), build_cnot_sdpp(), build_salek_sdpp()] {
            let fast = w.apply(&ca, &cb).unwrap();
            let literal = w.process_matrix().apply(&ca, &cb).unwrap();
            assert!(max_abs_diff(fast.choi_matrix(), literal.choi_matrix()) < 1e-12);
        }
    }

    #[test]
    fn apply_rejects_mismatched_channel() {
        let dep3 = depolarizing(3).unwrap();
        let id = channels::identity_channel(2);
        assert!(matches!(build_switch().apply(&dep3, &id), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn switch_reduced_process_closed_form() {
        let wr = build_switch().reduced().unwrap();
        assert_eq!(wr.layout().labels(), vec![slot::C, slot::P, slot::F]);
        let off = gates::x();
        let expected = CMatrix::identity(8, 8) * real(0.25) + off.kronecker(&bell_projector()) * real(0.125);
        assert!(max_abs_diff(wr.matrix(), &expected) <= 1e-12);
        let literal = build_switch().process_matrix().reduced().unwrap();
        assert!(max_abs_diff(wr.matrix(), literal.matrix()) <= 1e-12);
    }

    #[test]
    fn cnot_reduced_process_closed_form() {
        let wr = build_cnot_sdpp().reduced().unwrap();
        // (C, P, F) ordering: X^C ⊗ X^P ⊗ I^F
        let xx = gates::x().kronecker(&gates::x()).kronecker(&gates::identity(2));
        let expected = (CMatrix::identity(8, 8) + xx) * real(0.25);
        assert!(max_abs_diff(wr.matrix(), &expected) <= 1e-12);
    }

    #[test]
    fn direct_reduced_is_scaled_partial_trace() {
        let w = build_direct_pure_process(&DirectPureProcessSpec::identity(CausalOrder::AThenB, 2)).unwrap();
        let brute = LabeledOperator::projector(w.vector()).scale(8.0).partial_trace(&slot::PARTY).unwrap().scale(0.25);
        assert!(max_abs_diff(w.reduced().unwrap().matrix(), brute.matrix()) < 1e-14);
    }

    #[test]
    fn shor_target_unitaries() {
        assert_eq!(shor_target_unitary(0b0000), gates::identity(2));
        assert_eq!(shor_target_unitary(0b1000), gates::z());
        assert_eq!(shor_target_unitary(0b0001), gates::x());
        assert_eq!(shor_target_unitary(0b1001), gates::z() * gates::x());
        assert_eq!(shor_target_unitary(0b1100), gates::identity(2));
        let w = build_shor_sdpp();
        assert_eq!(w.control_dim(), Some(16));
        assert_eq!(w.amplitudes().len(), 1024);
    }

    #[test]
    fn parity_kickback_collapses_to_z() {
        let spec = parity_kickback_sdpp_spec(4);
        assert_eq!(spec.terms().len(), 16);
        assert!(max_abs_diff(&spec.terms()[0b1000].t, &gates::z()) < 1e-15);
        assert!(max_abs_diff(&spec.terms()[0b1100].t, &gates::identity(2)) < 1e-15);
    }

    #[test]
    fn validation_passes_for_constructed_processes() {
        for w in [build_switch(), build_cnot_sdpp()] {
            let r = validate_pure_process(&w, 20, 3).unwrap();
            assert!(r.passed, "{r:?}");
            assert!(r.max_second_eigenvalue <= 1e-10);
        }
    }

    #[test]
    fn validation_flags_corrupted_vector() {
        let w = build_switch();
        let mut amps = w.amplitudes().clone();
        let k = amps.iter().position(|z| z.norm() > 0.0).unwrap();
        amps[k] = C64::default();
        let bad = PureProcessVector::new(LabeledVector::new(w.layout().clone(), amps).unwrap()).unwrap();
        let r = validate_pure_process(&bad, 10, 0).unwrap();
        assert!(!r.passed);
        assert!(validate_pure_process(&w, 0, 0).is_err());
    }

    #[test]
    fn path_superposition_noiseless() {
        let id = vec![gates::identity(2)];
        let ch = build_path_superposition(&id, &id, &first_basis_overlap(1), &first_basis_overlap(1)).unwrap();
        let expected = pure_choi(&gates::plus().kronecker(&gates::identity(2)));
        assert!(max_abs_diff(ch.choi_matrix(), &expected) < 1e-12);
    }

    #[test]
    fn path_superposition_errors() {
        let dep = depolarizing(2).unwrap();
        let k = dep.kraus();
        let e = first_basis_overlap(4);
        assert!(matches!(build_path_superposition(k, k, &first_basis_overlap(3), &e), Err(Error::LengthMismatch(_))));
        let half: Vec<C64> = e.iter().map(|z| z * 0.5).collect();
        assert!(matches!(build_path_superposition(k, k, &half, &e), Err(Error::NonUnitOverlap(_))));
    }

    #[test]
    fn unitary_pair_gives_circuit_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let spec = DirectPureProcessSpec::new(
            CausalOrder::BThenA,
            channels::haar_unitary(2, &mut rng),
            channels::haar_unitary(2, &mut rng),
            channels::haar_unitary(2, &mut rng),
        )
        .unwrap();
        let ua = channels::haar_unitary(2, &mut rng);
        let ub = channels::haar_unitary(2, &mut rng);
        let w = build_direct_pure_process(&spec).unwrap();
        let g = w.apply(&unitary_channel(&ua).unwrap(), &unitary_channel(&ub).unwrap()).unwrap();
        let expected = pure_choi(&spec.circuit_unitary(&ua, &ub));
        assert!(max_abs_diff(g.choi_matrix(), &expected) < 1e-12);
    }
}
