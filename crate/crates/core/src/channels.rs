//! CPTP maps in Kraus and Choi form.
//!
//! The Choi operator is unnormalized: `J = Σ_ij |i⟩⟨j| ⊗ M(|i⟩⟨j|)`, input
//! factor first, so a trace-preserving map has `tr J = in_dim`.

use nalgebra::QR;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::tensor::{
    eigh, gates, hermitian_residual, is_psd, real, tol, trace_norm, unitarity_residual, CMatrix, CVector,
    LabeledOperator, SpaceLayout, C64,
};

pub const DEFAULT_INPUT: &str = "in";
pub const DEFAULT_OUTPUT: &str = "out";

/// A completely positive trace-preserving map between labeled spaces.
///
/// Both representations are kept; whichever one the channel was built from
/// determines the other.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    input: SpaceLayout,
    output: SpaceLayout,
    kraus: Vec<CMatrix>,
    choi: LabeledOperator,
}

impl QuantumChannel {
    /// Channel with default labels `in` / `out`.
    pub fn from_kraus(kraus: Vec<CMatrix>) -> Result<Self> {
        let (o, i) = kraus_shape(&kraus)?;
        Self::from_kraus_on(SpaceLayout::single(DEFAULT_INPUT, i), SpaceLayout::single(DEFAULT_OUTPUT, o), kraus)
    }

    pub fn from_kraus_on(input: SpaceLayout, output: SpaceLayout, kraus: Vec<CMatrix>) -> Result<Self> {
        let (o, i) = kraus_shape(&kraus)?;
        if i != input.dim() || o != output.dim() {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operators are {o}x{i} but layouts are {}->{}",
                input.dim(),
                output.dim()
            )));
        }
        let residual = completeness_residual(&kraus);
        if residual > tol::DEFAULT {
            return Err(Error::NotCptp(format!("Kraus completeness residual {residual:.3e}")));
        }
        let choi = choi_of_kraus_on(&input, &output, &kraus)?;
        Ok(Self { input, output, kraus, choi })
    }

    /// Builds the channel from a Choi operator whose layout is
    /// `input ++ output`, where `input` names the leading `n_input` factors.
    pub fn from_choi(choi: LabeledOperator, n_input: usize) -> Result<Self> {
        let factors = choi.layout().factors();
        if n_input == 0 || n_input >= factors.len() {
            return Err(Error::InvalidLayout(format!(
                "cannot split {} factors into {n_input} input factors and a nonempty output",
                factors.len()
            )));
        }
        let input = SpaceLayout::new(factors[..n_input].iter().map(|f| (f.label.clone(), f.dim)))?;
        let output = SpaceLayout::new(factors[n_input..].iter().map(|f| (f.label.clone(), f.dim)))?;
        check_choi(&choi, &input)?;
        let kraus = kraus_of_choi(&choi, input.dim(), tol::RANK)?;
        Ok(Self { input, output, kraus, choi })
    }

    /// Builds from a raw Choi matrix with default labels.
    pub fn from_choi_matrix(in_dim: usize, out_dim: usize, choi: CMatrix) -> Result<Self> {
        let layout = SpaceLayout::new([(DEFAULT_INPUT, in_dim), (DEFAULT_OUTPUT, out_dim)])?;
        Self::from_choi(LabeledOperator::new(layout, choi)?, 1)
    }

    pub fn input(&self) -> &SpaceLayout {
        &self.input
    }

    pub fn output(&self) -> &SpaceLayout {
        &self.output
    }

    pub fn in_dim(&self) -> usize {
        self.input.dim()
    }

    pub fn out_dim(&self) -> usize {
        self.output.dim()
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn choi(&self) -> &LabeledOperator {
        &self.choi
    }

    pub fn choi_matrix(&self) -> &CMatrix {
        self.choi.matrix()
    }

    /// Same channel with new layouts of matching dimensions.
    pub fn relabeled(&self, input: SpaceLayout, output: SpaceLayout) -> Result<Self> {
        if input.dim() != self.in_dim() || output.dim() != self.out_dim() {
            return Err(Error::DimensionMismatch("relabeling must preserve dimensions".into()));
        }
        let choi = LabeledOperator::new(input.concat(&output)?, self.choi.matrix().clone())?;
        Ok(Self { input, output, kraus: self.kraus.clone(), choi })
    }

    /// `Σ K ρ K†` without any state checks.
    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let d = self.out_dim();
        self.kraus.iter().fold(CMatrix::zeros(d, d), |acc, k| acc + k * rho * k.adjoint())
    }

    /// Applies the channel to a density matrix on its input space.
    pub fn apply(&self, rho: &LabeledOperator) -> Result<LabeledOperator> {
        if rho.dim() != self.in_dim() {
            return Err(Error::DimensionMismatch(format!(
                "state has dimension {} but channel input is {}",
                rho.dim(),
                self.in_dim()
            )));
        }
        check_state(rho.matrix())?;
        LabeledOperator::new(self.output.clone(), self.apply_matrix(rho.matrix()))
    }

    /// Convex mixture `Σ p_i M_i` of channels with identical shapes.
    pub fn mixture(parts: &[(f64, &QuantumChannel)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?.1;
        let total: f64 = parts.iter().map(|(p, _)| p).sum();
        if parts.iter().any(|(p, _)| *p < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("mixture weights must be a probability vector".into()));
        }
        let mut kraus = Vec::new();
        for (p, ch) in parts {
            if ch.in_dim() != first.in_dim() || ch.out_dim() != first.out_dim() {
                return Err(Error::DimensionMismatch("mixture of channels with different shapes".into()));
            }
            if *p > 0.0 {
                kraus.extend(ch.kraus.iter().map(|k| k * real(p.sqrt())));
            }
        }
        Self::from_kraus_on(first.input.clone(), first.output.clone(), kraus)
    }

    /// Checks the type invariants within `tol`.
    pub fn is_cptp(&self, tol: f64) -> bool {
        completeness_residual(&self.kraus) <= tol && check_choi_with(&self.choi, &self.input, tol).is_ok()
    }
}

fn kraus_shape(kraus: &[CMatrix]) -> Result<(usize, usize)> {
    let first = kraus.first().ok_or_else(|| Error::InvalidArgument("empty Kraus list".into()))?;
    let shape = first.shape();
    if kraus.iter().any(|k| k.shape() != shape) {
        return Err(Error::DimensionMismatch("Kraus operators of unequal shapes".into()));
    }
    Ok(shape)
}

/// `‖Σ K†K − I‖_F`.
pub fn completeness_residual(kraus: &[CMatrix]) -> f64 {
    let Some(first) = kraus.first() else { return f64::INFINITY };
    let d = first.ncols();
    let sum = kraus.iter().fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k);
    (sum - CMatrix::identity(d, d)).norm()
}

fn check_choi(choi: &LabeledOperator, input: &SpaceLayout) -> Result<()> {
    check_choi_with(choi, input, tol::DEFAULT)
}

fn check_choi_with(choi: &LabeledOperator, input: &SpaceLayout, tol: f64) -> Result<()> {
    let residual = hermitian_residual(choi.matrix());
    if residual > tol {
        return Err(Error::NotHermitian { residual });
    }
    let values = eigh(choi.matrix())?.values;
    let min = values.last().copied().unwrap_or(0.0);
    if min < -tol {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let outputs: Vec<&str> = choi.layout().labels().into_iter().filter(|l| !input.contains(l)).collect();
    let marginal = choi.partial_trace(&outputs)?;
    let d = input.dim();
    let tp = (marginal.matrix() - CMatrix::identity(d, d)).norm();
    if tp > tol {
        return Err(Error::NotCptp(format!("trace-preservation residual {tp:.3e}")));
    }
    Ok(())
}

/// Checks that `rho` is a density matrix within the default tolerance.
pub fn check_state(rho: &CMatrix) -> Result<()> {
    if rho.nrows() != rho.ncols() {
        return Err(Error::NotState("matrix is not square".into()));
    }
    if hermitian_residual(rho) > tol::DEFAULT {
        return Err(Error::NotState("matrix is not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr - real(1.0)).norm() > tol::DEFAULT {
        return Err(Error::NotState(format!("trace is {tr}")));
    }
    if !is_psd(rho, tol::DEFAULT) {
        return Err(Error::NotState("matrix is not positive semidefinite".into()));
    }
    Ok(())
}

/// `J = Σ_k |K_k⟩⟩⟨⟨K_k|` on layout `in ++ out` with labels `in` / `out`.
pub fn choi_of_kraus(kraus: &[CMatrix]) -> Result<LabeledOperator> {
    let (o, i) = kraus_shape(kraus)?;
    choi_of_kraus_on(&SpaceLayout::single(DEFAULT_INPUT, i), &SpaceLayout::single(DEFAULT_OUTPUT, o), kraus)
}

fn choi_of_kraus_on(input: &SpaceLayout, output: &SpaceLayout, kraus: &[CMatrix]) -> Result<LabeledOperator> {
    let layout = input.concat(output)?;
    let d = layout.dim();
    let mut j = CMatrix::zeros(d, d);
    for k in kraus {
        let v = pure_cj(k).vector;
        j += &v * v.adjoint();
    }
    LabeledOperator::new(layout, j)
}

/// Kraus operators from the eigendecomposition of a Choi operator.
///
/// Eigenvalues above `rank_tol` contribute one operator each, in descending
/// order; each operator's largest-magnitude entry is made real and positive.
pub fn kraus_of_choi(choi: &LabeledOperator, in_dim: usize, rank_tol: f64) -> Result<Vec<CMatrix>> {
    kraus_of_choi_matrix(choi.matrix(), in_dim, rank_tol)
}

pub fn kraus_of_choi_matrix(choi: &CMatrix, in_dim: usize, rank_tol: f64) -> Result<Vec<CMatrix>> {
    let d = choi.nrows();
    if in_dim == 0 || !d.is_multiple_of(in_dim) {
        return Err(Error::DimensionMismatch(format!("Choi side {d} is not a multiple of input dimension {in_dim}")));
    }
    let out_dim = d / in_dim;
    let dec = eigh(choi)?;
    let min = dec.values.last().copied().unwrap_or(0.0);
    if min < -tol::DEFAULT {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let mut kraus = Vec::new();
    for (k, &lambda) in dec.values.iter().enumerate() {
        if lambda <= rank_tol {
            break;
        }
        let col = dec.vectors.column(k).into_owned();
        let vec = fix_phase(col) * real(lambda.sqrt());
        kraus.push(PureCjVector::from_parts(in_dim, out_dim, vec).unstack());
    }
    if kraus.is_empty() {
        return Err(Error::Numerical("Choi operator has no eigenvalue above the rank tolerance".into()));
    }
    Ok(kraus)
}

fn fix_phase(v: CVector) -> CVector {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() + 1e-12 {
            best = i;
        }
    }
    let z = v[best];
    if z.norm() == 0.0 {
        return v;
    }
    let phase = z.conj() / z.norm();
    v * phase
}

/// `|K⟩⟩ = Σ_i |i⟩ ⊗ K|i⟩` for `K: in → out`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureCjVector {
    in_dim: usize,
    out_dim: usize,
    vector: CVector,
}

impl PureCjVector {
    fn from_parts(in_dim: usize, out_dim: usize, vector: CVector) -> Self {
        Self { in_dim, out_dim, vector }
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// Recovers `K` from its stacked form.
    pub fn unstack(&self) -> CMatrix {
        CMatrix::from_fn(self.out_dim, self.in_dim, |o, i| self.vector[i * self.out_dim + o])
    }

    /// `⟨⟨K|L⟩⟩ = tr(K†L)`.
    pub fn inner(&self, other: &PureCjVector) -> C64 {
        self.vector.dotc(&other.vector)
    }
}

pub fn pure_cj(k: &CMatrix) -> PureCjVector {
    let (out_dim, in_dim) = k.shape();
    let vector = CVector::from_fn(in_dim * out_dim, |idx, _| k[(idx % out_dim, idx / out_dim)]);
    PureCjVector { in_dim, out_dim, vector }
}

/// `M_second ∘ M_first`.
pub fn compose(second: &QuantumChannel, first: &QuantumChannel) -> Result<QuantumChannel> {
    if first.out_dim() != second.in_dim() {
        return Err(Error::DimensionMismatch(format!(
            "cannot feed a {}-dimensional output into a {}-dimensional input",
            first.out_dim(),
            second.in_dim()
        )));
    }
    let kraus = first.kraus.iter().flat_map(|k| second.kraus.iter().map(move |l| l * k)).collect();
    let output = if first.input.labels().iter().any(|l| second.output.contains(l)) {
        SpaceLayout::single(DEFAULT_OUTPUT, second.out_dim())
    } else {
        second.output.clone()
    };
    let input = if first.input.labels().iter().any(|l| output.contains(l)) {
        SpaceLayout::single(DEFAULT_INPUT, first.in_dim())
    } else {
        first.input.clone()
    };
    QuantumChannel::from_kraus_on(input, output, kraus)
}

/// `K'_j = Σ_i V_ji K_i`. With `V` an isometry the channel is unchanged.
pub fn remix_kraus(kraus: &[CMatrix], v: &CMatrix) -> Result<Vec<CMatrix>> {
    let (o, i) = kraus_shape(kraus)?;
    if v.ncols() != kraus.len() {
        return Err(Error::DimensionMismatch(format!(
            "remixing matrix has {} columns for {} Kraus operators",
            v.ncols(),
            kraus.len()
        )));
    }
    Ok((0..v.nrows())
        .map(|j| kraus.iter().enumerate().fold(CMatrix::zeros(o, i), |acc, (idx, k)| acc + k * v[(j, idx)]))
        .collect())
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidProbability(p));
    }
    Ok(())
}

fn weighted(parts: Vec<(f64, CMatrix)>) -> Vec<CMatrix> {
    parts.into_iter().filter(|(w, _)| *w > 0.0).map(|(w, k)| k * real(w.sqrt())).collect()
}

/// Completely depolarizing channel `ρ ↦ tr(ρ) I/d`.
///
/// For qubits the Kraus set is the Pauli set `{I, X, Y, Z}/2`; otherwise the
/// clock-and-shift operators `X^a Z^b / d`.
pub fn depolarizing(d: usize) -> Result<QuantumChannel> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("depolarizing channel needs d >= 2, got {d}")));
    }
    let kraus = if d == 2 {
        [gates::identity(2), gates::x(), gates::y(), gates::z()].into_iter().map(|p| p * real(0.5)).collect()
    } else {
        let omega = 2.0 * std::f64::consts::PI / d as f64;
        let shift = CMatrix::from_fn(d, d, |r, c| if r == (c + 1) % d { real(1.0) } else { C64::default() });
        let clock =
            CMatrix::from_fn(d, d, |r, c| if r == c { C64::from_polar(1.0, omega * r as f64) } else { C64::default() });
        let mut ops = Vec::with_capacity(d * d);
        let mut xa = CMatrix::identity(d, d);
        for _ in 0..d {
            let mut zb = CMatrix::identity(d, d);
            for _ in 0..d {
                ops.push(&xa * &zb * real(1.0 / d as f64));
                zb = &zb * &clock;
            }
            xa = &xa * &shift;
        }
        ops
    };
    QuantumChannel::from_kraus(kraus)
}

/// `ρ ↦ ½(XρX + YρY)`.
pub fn xy_channel() -> QuantumChannel {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    QuantumChannel::from_kraus(vec![gates::x() * real(s), gates::y() * real(s)]).expect("xy channel")
}

/// `ρ ↦ (1−p)ρ + p XρX`.
pub fn bit_flip(p: f64) -> Result<QuantumChannel> {
    check_probability(p)?;
    QuantumChannel::from_kraus(weighted(vec![(1.0 - p, gates::identity(2)), (p, gates::x())]))
}

/// `ρ ↦ (1−q)ρ + q ZρZ`.
pub fn phase_flip(q: f64) -> Result<QuantumChannel> {
    check_probability(q)?;
    QuantumChannel::from_kraus(weighted(vec![(1.0 - q, gates::identity(2)), (q, gates::z())]))
}

pub fn unitary_channel(u: &CMatrix) -> Result<QuantumChannel> {
    let residual = unitarity_residual(u);
    if residual > tol::DEFAULT {
        return Err(Error::NotUnitary { residual });
    }
    QuantumChannel::from_kraus(vec![u.clone()])
}

pub fn identity_channel(d: usize) -> QuantumChannel {
    QuantumChannel::from_kraus(vec![gates::identity(d)]).expect("identity channel")
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed `rows × cols` isometry (`rows ≥ cols`): QR of a complex
/// Gaussian matrix with the phases of `R`'s diagonal moved into `Q`.
pub fn haar_isometry(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let g = gaussian_matrix(rows, cols, rng);
    let qr = QR::new(g);
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { real(1.0) };
        for i in 0..rows {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn haar_unitary(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    haar_isometry(d, d, rng)
}

/// Random CPTP map from a Haar Stinespring isometry `in → out ⊗ env`.
///
/// Kraus operator `e` is the block of rows `e·out .. (e+1)·out`.
pub fn random_cptp(in_dim: usize, out_dim: usize, env_dim: usize, seed: u64) -> Result<QuantumChannel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_cptp_with(in_dim, out_dim, env_dim, &mut rng)
}

pub fn random_cptp_with(in_dim: usize, out_dim: usize, env_dim: usize, rng: &mut ChaCha8Rng) -> Result<QuantumChannel> {
    if env_dim == 0 || in_dim == 0 || out_dim == 0 {
        return Err(Error::InvalidArgument("dimensions must be positive".into()));
    }
    if out_dim * env_dim < in_dim {
        return Err(Error::InvalidArgument(format!("no isometry from dimension {in_dim} into {out_dim}x{env_dim}")));
    }
    let v = haar_isometry(out_dim * env_dim, in_dim, rng);
    let kraus = (0..env_dim).map(|e| v.rows(e * out_dim, out_dim).into_owned()).collect();
    QuantumChannel::from_kraus(kraus)
}

/// `½‖J₁/d − J₂/d‖₁`, a proxy for channel distinguishability.
pub fn choi_trace_distance(a: &QuantumChannel, b: &QuantumChannel) -> Result<f64> {
    if a.in_dim() != b.in_dim() || a.out_dim() != b.out_dim() {
        return Err(Error::DimensionMismatch("channels of different shapes".into()));
    }
    let diff = (a.choi_matrix() - b.choi_matrix()) * real(1.0 / a.in_dim() as f64);
    Ok((0.5 * trace_norm(&diff)?).clamp(0.0, 1.0))
}

/// Largest absolute entrywise difference between two Choi matrices.
pub fn choi_max_diff(a: &QuantumChannel, b: &QuantumChannel) -> f64 {
    max_abs_diff(a.choi_matrix(), b.choi_matrix())
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho(v: &CVector) -> CMatrix {
        v * v.adjoint()
    }

    #[test]
    fn identity_choi_is_unnormalized_bell_projector() {
        let j = identity_channel(2);
        let mut expected = CMatrix::zeros(4, 4);
        for (a, b) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            expected[(a, b)] = real(1.0);
        }
        assert_eq!(j.choi_matrix(), &expected);
        assert!((j.choi().trace() - real(2.0)).norm() < 1e-15);
    }

    #[test]
    fn depolarizing_choi() {
        let ch = depolarizing(2).unwrap();
        assert!(max_abs_diff(ch.choi_matrix(), &(CMatrix::identity(4, 4) * real(0.5))) < 1e-15);
        let ch3 = depolarizing(3).unwrap();
        assert!(max_abs_diff(ch3.choi_matrix(), &(CMatrix::identity(9, 9) * real(1.0 / 3.0))) < 1e-14);
        assert!(matches!(depolarizing(1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn choi_round_trip_random() {
        for seed in 0..5 {
            let ch = random_cptp(2, 2, 4, seed).unwrap();
            let kraus = kraus_of_choi(ch.choi(), 2, tol::RANK).unwrap();
            let back = choi_of_kraus(&kraus).unwrap();
            assert!(max_abs_diff(back.matrix(), ch.choi_matrix()) <= 1e-10);
            assert!(kraus.len() <= 4);
        }
    }

    #[test]
    fn kraus_of_choi_rejects_non_psd() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![real(1.0), real(-0.5), real(0.5), real(1.0)]));
        assert!(matches!(kraus_of_choi_matrix(&m, 2, tol::RANK), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn kraus_extraction_is_phase_fixed() {
        let ch = unitary_channel(&(gates::y() * C64::new(0.0, 1.0))).unwrap();
        let k = kraus_of_choi(ch.choi(), 2, tol::RANK).unwrap();
        assert_eq!(k.len(), 1);
        // column-major iteration matches the stacking order of |K⟩⟩
        let max = k[0].iter().map(|z| z.norm()).fold(0.0, f64::max);
        let first = k[0].iter().find(|z| z.norm() > max - 1e-12).unwrap();
        assert!(first.im.abs() < 1e-12 && first.re > 0.0);
    }

    #[test]
    fn pure_cj_examples() {
        let v = pure_cj(&gates::identity(2));
        assert_eq!(v.vector().as_slice(), &[real(1.0), real(0.0), real(0.0), real(1.0)]);
        let v = pure_cj(&gates::x());
        assert_eq!(v.vector().as_slice(), &[real(0.0), real(1.0), real(1.0), real(0.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let u = haar_unitary(2, &mut rng);
            let v = pure_cj(&u);
            assert!((v.inner(&v) - real(2.0)).norm() < 1e-12);
            assert_eq!(v.unstack(), u);
        }
        let rect = CMatrix::from_fn(3, 2, |r, c| real((r * 2 + c) as f64));
        assert_eq!(pure_cj(&rect).unstack(), rect);
    }

    #[test]
    fn apply_examples() {
        let psi = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let state = LabeledOperator::new(SpaceLayout::single("in", 2), rho(&psi)).unwrap();
        let out = depolarizing(2).unwrap().apply(&state).unwrap();
        assert!(max_abs_diff(out.matrix(), &(CMatrix::identity(2, 2) * real(0.5))) < 1e-15);
        let out = bit_flip(0.0).unwrap().apply(&state).unwrap();
        assert!(max_abs_diff(out.matrix(), state.matrix()) < 1e-15);
        let zero = LabeledOperator::new(SpaceLayout::single("in", 2), gates::basis_projector(2, 0)).unwrap();
        let out = xy_channel().apply(&zero).unwrap();
        assert!(max_abs_diff(out.matrix(), &gates::basis_projector(2, 1)) < 1e-15);
    }

    #[test]
    fn apply_rejects_bad_input() {
        let ch = xy_channel();
        let big = LabeledOperator::identity(SpaceLayout::single("in", 3));
        assert!(matches!(ch.apply(&big), Err(Error::DimensionMismatch(_))));
        let not_state = LabeledOperator::identity(SpaceLayout::single("in", 2));
        assert!(matches!(ch.apply(&not_state), Err(Error::NotState(_))));
    }

    #[test]
    fn compose_xy_twice_is_half_phase_flip() {
        let c = compose(&xy_channel(), &xy_channel()).unwrap();
        assert!(choi_max_diff(&c, &phase_flip(0.5).unwrap()) <= 1e-10);
    }

    #[test]
    fn hadamard_conjugated_bit_flip_is_phase_flip() {
        let h = unitary_channel(&gates::hadamard()).unwrap();
        for p in [0.0, 0.1, 0.5, 0.9] {
            let c = compose(&h, &compose(&bit_flip(p).unwrap(), &h).unwrap()).unwrap();
            assert!(choi_max_diff(&c, &phase_flip(p).unwrap()) <= 1e-12);
        }
    }

    #[test]
    fn compose_with_identity_and_mismatch() {
        let c = random_cptp(2, 2, 3, 4).unwrap();
        let id = identity_channel(2);
        assert!(choi_max_diff(&compose(&id, &c).unwrap(), &c) <= 1e-10);
        assert!(matches!(compose(&depolarizing(3).unwrap(), &c), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn standard_constructors() {
        assert!(choi_max_diff(&phase_flip(1.0).unwrap(), &unitary_channel(&gates::z()).unwrap()) < 1e-15);
        let k = bit_flip(0.3).unwrap();
        assert_eq!(k.kraus().len(), 2);
        assert!(max_abs_diff(&k.kraus()[0], &(gates::identity(2) * real(0.7f64.sqrt()))) < 1e-15);
        assert!(max_abs_diff(&k.kraus()[1], &(gates::x() * real(0.3f64.sqrt()))) < 1e-15);
        assert!(matches!(bit_flip(1.5), Err(Error::InvalidProbability(_))));
        assert!(matches!(phase_flip(-0.1), Err(Error::InvalidProbability(_))));
        assert!(matches!(unitary_channel(&(gates::x() * real(2.0))), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn random_cptp_properties() {
        let a = random_cptp(2, 2, 4, 11).unwrap();
        let b = random_cptp(2, 2, 4, 11).unwrap();
        assert_eq!(a.choi_matrix(), b.choi_matrix());
        let u = random_cptp(3, 3, 1, 2).unwrap();
        assert_eq!(u.kraus().len(), 1);
        assert!(unitarity_residual(&u.kraus()[0]) < 1e-12);
        assert!(random_cptp(4, 1, 2, 0).is_err());
        let rect = random_cptp(2, 3, 2, 5).unwrap();
        assert!(rect.is_cptp(1e-9));
    }

    #[test]
    fn trace_distance_examples() {
        let a = random_cptp(2, 2, 2, 1).unwrap();
        let b = random_cptp(2, 2, 2, 2).unwrap();
        assert!(choi_trace_distance(&a, &a).unwrap() < 1e-12);
        let d1 = choi_trace_distance(&a, &b).unwrap();
        let d2 = choi_trace_distance(&b, &a).unwrap();
        assert!((d1 - d2).abs() < 1e-12 && d1 > 0.0);
        let i = identity_channel(2);
        let x = unitary_channel(&gates::x()).unwrap();
        assert!((choi_trace_distance(&i, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!(choi_trace_distance(&i, &depolarizing(3).unwrap()).is_err());
    }

    #[test]
    fn from_choi_checks_invariants() {
        let bad = CMatrix::identity(4, 4);
        assert!(matches!(QuantumChannel::from_choi_matrix(2, 2, bad), Err(Error::NotCptp(_))));
        let good = QuantumChannel::from_choi_matrix(2, 2, CMatrix::identity(4, 4) * real(0.5)).unwrap();
        assert!(good.is_cptp(1e-12));
        assert_eq!(good.kraus().len(), 4);
    }

    #[test]
    fn remix_preserves_channel() {
        let dep = depolarizing(2).unwrap();
        let h = gates::hadamard();
        let v = h.kronecker(&h);
        let remixed = remix_kraus(dep.kraus(), &v).unwrap();
        let c2 = QuantumChannel::from_kraus(remixed).unwrap();
        assert!(choi_max_diff(&dep, &c2) <= 1e-12);
    }

    #[test]
    fn mixture_is_convex_combination_of_chois() {
        let a = random_cptp(2, 2, 2, 1).unwrap();
        let b = random_cptp(2, 2, 2, 2).unwrap();
        let m = QuantumChannel::mixture(&[(0.25, &a), (0.75, &b)]).unwrap();
        let expected = a.choi_matrix() * real(0.25) + b.choi_matrix() * real(0.75);
        assert!(max_abs_diff(m.choi_matrix(), &expected) < 1e-12);
    }
}
