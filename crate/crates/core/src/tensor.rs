//! Dense complex operators over labeled tensor-product spaces.
//!
//! Every space is an ordered list of labeled factors. Basis states are
//! ordered with the leftmost factor most significant, so the flat index of
//! the multi-index `(i_0, ..., i_{n-1})` is `i_0 * d_1 * ... * d_{n-1} + ... + i_{n-1}`.
//! All modules in the crate share this convention.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Numerical tolerances shared by the whole crate.
pub mod tol {
    /// Largest anti-Hermitian residual accepted by [`super::eigh`].
    pub const HERMITIAN: f64 = 1e-9;
    /// Reconstruction tolerance for eigendecompositions.
    pub const EIGEN: f64 = 1e-10;
    /// Default tolerance for PSD / unitarity / CPTP predicates.
    pub const DEFAULT: f64 = 1e-9;
    /// Eigenvalues at or below this are dropped when extracting Kraus operators.
    pub const RANK: f64 = 1e-10;
    /// Eigenvalues at or below this count as zero inside entropies.
    pub const ENTROPY_ZERO: f64 = 1e-15;
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of labeled tensor factors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceLayout {
    factors: Vec<Factor>,
}

impl SpaceLayout {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut out: Vec<Factor> = Vec::new();
        for (label, dim) in factors {
            let label = label.into();
            if dim == 0 {
                return Err(Error::InvalidLayout(format!("factor `{label}` has dimension 0")));
            }
            if out.iter().any(|f| f.label == label) {
                return Err(Error::LayoutConflict(label));
            }
            out.push(Factor { label, dim });
        }
        Ok(Self { factors: out })
    }

    pub fn single(label: impl Into<String>, dim: usize) -> Self {
        Self::new([(label.into(), dim)]).expect("single factor layout")
    }

    pub fn empty() -> Self {
        Self { factors: Vec::new() }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.factors.iter().map(|f| f.label.as_str()).collect()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.label == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.position(label).map(|i| self.factors[i].dim).ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn concat(&self, other: &SpaceLayout) -> Result<SpaceLayout> {
        Self::new(self.factors.iter().chain(other.factors.iter()).map(|f| (f.label.clone(), f.dim)))
    }

    /// Layout containing only the factors whose labels are in `labels`, in
    /// this layout's order.
    pub fn restrict(&self, labels: &[&str]) -> SpaceLayout {
        SpaceLayout { factors: self.factors.iter().filter(|f| labels.contains(&f.label.as_str())).cloned().collect() }
    }

    /// Same layout with every label renamed through `map`.
    pub fn relabel(&self, map: &[(&str, &str)]) -> Result<SpaceLayout> {
        Self::new(self.factors.iter().map(|f| {
            let label = map
                .iter()
                .find(|(from, _)| *from == f.label)
                .map(|(_, to)| to.to_string())
                .unwrap_or_else(|| f.label.clone());
            (label, f.dim)
        }))
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.factors.len()];
        for i in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.factors[i + 1].dim;
        }
        strides
    }

    fn check_subset(&self, labels: &[&str]) -> Result<()> {
        for (i, l) in labels.iter().enumerate() {
            if !self.contains(l) {
                return Err(Error::UnknownLabel(l.to_string()));
            }
            if labels[..i].contains(l) {
                return Err(Error::LayoutConflict(l.to_string()));
            }
        }
        Ok(())
    }

    /// Flat offsets contributed by the factors at `positions`, enumerated in
    /// big-endian order over those factors.
    fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut offs = vec![0usize];
        for &p in positions {
            let d = self.factors[p].dim;
            let s = strides[p];
            offs = offs.iter().flat_map(|&o| (0..d).map(move |k| o + k * s)).collect();
        }
        offs
    }

    /// For each flat index of the layout reordered as `new_order`, the flat
    /// index of the same basis state in `self`.
    fn permutation_map(&self, new_order: &[&str]) -> Result<(SpaceLayout, Vec<usize>)> {
        if new_order.len() != self.len() {
            return Err(Error::InvalidPermutation(format!("expected {} labels, got {}", self.len(), new_order.len())));
        }
        let mut positions = Vec::with_capacity(new_order.len());
        for (i, l) in new_order.iter().enumerate() {
            let p = self.position(l).ok_or_else(|| Error::InvalidPermutation(format!("label `{l}` not in layout")))?;
            if new_order[..i].contains(l) {
                return Err(Error::InvalidPermutation(format!("label `{l}` repeated")));
            }
            positions.push(p);
        }
        let layout = SpaceLayout { factors: positions.iter().map(|&p| self.factors[p].clone()).collect() };
        Ok((layout, self.offsets(&positions)))
    }

    fn split(&self, labels: &[&str]) -> (Vec<usize>, Vec<usize>) {
        (0..self.len()).partition(|&i| !labels.contains(&self.factors[i].label.as_str()))
    }
}

/// A dense complex square matrix acting on a labeled space.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledOperator {
    layout: SpaceLayout,
    matrix: CMatrix,
}

impl LabeledOperator {
    pub fn new(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        let d = layout.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "layout dimension {d} but matrix is {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { layout, matrix })
    }

    pub fn identity(layout: SpaceLayout) -> Self {
        let d = layout.dim();
        Self { layout, matrix: CMatrix::identity(d, d) }
    }

    /// `|v⟩⟨v|` for a vector laid out on `layout`.
    pub fn projector(vector: &LabeledVector) -> Self {
        let v = &vector.amplitudes;
        Self { layout: vector.layout.clone(), matrix: v * v.adjoint() }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { layout: self.layout.clone(), matrix: &self.matrix * real(s) }
    }

    pub fn relabel(&self, map: &[(&str, &str)]) -> Result<Self> {
        Ok(Self { layout: self.layout.relabel(map)?, matrix: self.matrix.clone() })
    }

    /// Kronecker product; `self`'s factors come first.
    pub fn tensor(&self, other: &LabeledOperator) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(Self { layout, matrix: self.matrix.kronecker(&other.matrix) })
    }

    pub fn permute_factors(&self, new_order: &[&str]) -> Result<Self> {
        let (layout, map) = self.layout.permutation_map(new_order)?;
        let d = map.len();
        let matrix = CMatrix::from_fn(d, d, |i, j| self.matrix[(map[i], map[j])]);
        Ok(Self { layout, matrix })
    }

    /// Traces out the factors in `labels`; remaining factors keep their order.
    pub fn partial_trace(&self, labels: &[&str]) -> Result<Self> {
        self.layout.check_subset(labels)?;
        let (kept, traced) = self.layout.split(labels);
        let kept_offs = self.layout.offsets(&kept);
        let traced_offs = self.layout.offsets(&traced);
        let d = kept_offs.len();
        let matrix = CMatrix::from_fn(d, d, |a, b| {
            traced_offs.iter().map(|&t| self.matrix[(kept_offs[a] + t, kept_offs[b] + t)]).sum()
        });
        let layout = SpaceLayout { factors: kept.iter().map(|&p| self.layout.factors[p].clone()).collect() };
        Ok(Self { layout, matrix })
    }

    /// Transposes the factors in `labels`, leaving the others untouched.
    pub fn partial_transpose(&self, labels: &[&str]) -> Result<Self> {
        self.layout.check_subset(labels)?;
        let (kept, flipped) = self.layout.split(labels);
        let kept_offs = self.layout.offsets(&kept);
        let flip_offs = self.layout.offsets(&flipped);
        let d = self.dim();
        let mut matrix = CMatrix::zeros(d, d);
        for &ka in &kept_offs {
            for &kb in &kept_offs {
                for &s in &flip_offs {
                    for &t in &flip_offs {
                        matrix[(ka + t, kb + s)] = self.matrix[(ka + s, kb + t)];
                    }
                }
            }
        }
        Ok(Self { layout: self.layout.clone(), matrix })
    }

    pub fn eigh(&self) -> Result<Eigh> {
        eigh(&self.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermitian_residual(&self.matrix) <= tol
    }
}

/// A complex vector on a labeled space.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledVector {
    layout: SpaceLayout,
    amplitudes: CVector,
}

impl LabeledVector {
    pub fn new(layout: SpaceLayout, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::DimensionMismatch(format!(
                "layout dimension {} but vector has length {}",
                layout.dim(),
                amplitudes.len()
            )));
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn tensor(&self, other: &LabeledVector) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(Self { layout, amplitudes: self.amplitudes.kronecker(&other.amplitudes) })
    }

    pub fn permute_factors(&self, new_order: &[&str]) -> Result<Self> {
        let (layout, map) = self.layout.permutation_map(new_order)?;
        let amplitudes = CVector::from_iterator(map.len(), map.iter().map(|&i| self.amplitudes[i]));
        Ok(Self { layout, amplitudes })
    }

    /// Reshapes into a matrix with rows indexed by `row_labels` and columns
    /// by the remaining labels (both in layout order after permutation).
    pub fn to_matrix(&self, row_labels: &[&str]) -> Result<(SpaceLayout, SpaceLayout, CMatrix)> {
        self.layout.check_subset(row_labels)?;
        let cols: Vec<&str> = self.layout.labels().into_iter().filter(|l| !row_labels.contains(l)).collect();
        let order: Vec<&str> = row_labels.iter().copied().chain(cols.iter().copied()).collect();
        let permuted = self.permute_factors(&order)?;
        let rows = permuted.layout.restrict(row_labels);
        let rows = SpaceLayout::new(row_labels.iter().map(|l| (l.to_string(), rows.dim_of(l).unwrap())))?;
        let col_layout = permuted.layout.restrict(&cols);
        let (r, c) = (rows.dim(), col_layout.dim());
        let m = CMatrix::from_fn(r, c, |i, j| permuted.amplitudes[i * c + j]);
        Ok((rows, col_layout, m))
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `values`.
    pub vectors: CMatrix,
}

impl Eigh {
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.values.len();
        let diag = CMatrix::from_fn(d, d, |i, j| if i == j { real(self.values[i]) } else { C64::default() });
        &self.vectors * diag * self.vectors.adjoint()
    }
}

/// Frobenius norm of the anti-Hermitian part, relative to `max(1, ‖m‖_F)`.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let anti = (m - m.adjoint()) * real(0.5);
    anti.norm() / m.norm().max(1.0)
}

pub fn eigh(m: &CMatrix) -> Result<Eigh> {
    let residual = hermitian_residual(m);
    if residual > tol::HERMITIAN {
        return Err(Error::NotHermitian { residual });
    }
    let sym = (m + m.adjoint()) * real(0.5);
    let dec = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..dec.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| dec.eigenvalues[b].total_cmp(&dec.eigenvalues[a]));
    let values = order.iter().map(|&i| dec.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, k| dec.eigenvectors[(r, order[k])]);
    Ok(Eigh { values, vectors })
}

/// Eigenvalues only, descending.
pub fn eigvalsh(m: &CMatrix) -> Result<Vec<f64>> {
    let residual = hermitian_residual(m);
    if residual > tol::HERMITIAN {
        return Err(Error::NotHermitian { residual });
    }
    let sym = (m + m.adjoint()) * real(0.5);
    let mut values: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

pub fn is_psd(m: &CMatrix, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    match eigvalsh(m) {
        Ok(values) => values.last().is_none_or(|&v| v >= -tol),
        Err(_) => false,
    }
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    unitarity_residual(m) <= tol
}

/// `‖U†U − I‖_F`, infinite for non-square input.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    (m.adjoint() * m - CMatrix::identity(m.nrows(), m.ncols())).norm()
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    Ok(eigvalsh(m)?.iter().map(|v| v.abs()).sum())
}

/// Commonly used single-qubit matrices.
pub mod gates {
    use super::{c, real, CMatrix, C64};

    pub fn identity(d: usize) -> CMatrix {
        CMatrix::identity(d, d)
    }

    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), real(1.0), real(0.0)])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[real(0.0), c(0.0, -1.0), c(0.0, 1.0), real(0.0)])
    }

    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[real(1.0), real(0.0), real(0.0), real(-1.0)])
    }

    pub fn hadamard() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[real(s), real(s), real(s), real(-s)])
    }

    /// `|k⟩⟨k|` on a `d`-dimensional space.
    pub fn basis_projector(d: usize, k: usize) -> CMatrix {
        CMatrix::from_fn(d, d, |i, j| if i == k && j == k { real(1.0) } else { C64::default() })
    }

    /// `|k⟩` as a column vector.
    pub fn ket(d: usize, k: usize) -> super::CVector {
        super::CVector::from_fn(d, |i, _| if i == k { real(1.0) } else { C64::default() })
    }

    pub fn plus() -> super::CVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        super::CVector::from_vec(vec![real(s), real(s)])
    }

    pub fn minus() -> super::CVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        super::CVector::from_vec(vec![real(s), real(-s)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        assert_eq!(a.shape(), b.shape());
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn op(label: &str, m: CMatrix) -> LabeledOperator {
        LabeledOperator::new(SpaceLayout::single(label, m.nrows()), m).unwrap()
    }

    fn sample(seed: u64, d: usize) -> CMatrix {
        // small LCG so tests stay independent of the crate's RNG plumbing
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        CMatrix::from_fn(d, d, |_, _| c(next(), next()))
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let a = LabeledOperator::identity(SpaceLayout::single("P", 2));
        let b = LabeledOperator::identity(SpaceLayout::single("F", 2));
        let t = a.tensor(&b).unwrap();
        assert_eq!(t.layout().labels(), vec!["P", "F"]);
        assert_eq!(t.matrix(), &CMatrix::identity(4, 4));
    }

    #[test]
    fn tensor_projector_places_block() {
        let a = op("C", gates::basis_projector(2, 0));
        let b = op("F", gates::x());
        let t = a.tensor(&b).unwrap();
        let m = t.matrix();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i < 2 && j < 2 { gates::x()[(i, j)] } else { C64::default() };
                assert_eq!(m[(i, j)], expected);
            }
        }
    }

    #[test]
    fn tensor_rejects_duplicate_labels() {
        let a = LabeledOperator::identity(SpaceLayout::single("P", 2));
        assert!(matches!(a.tensor(&a), Err(Error::LayoutConflict(l)) if l == "P"));
    }

    #[test]
    fn partial_trace_of_product_brute_force() {
        let a = op("A", sample(1, 2));
        let b = op("B", sample(2, 2));
        let t = a.tensor(&b).unwrap().partial_trace(&["B"]).unwrap();
        // brute force: sum_k (a ⊗ b)[(i,k),(j,k)]
        let full = a.matrix().kronecker(b.matrix());
        for i in 0..2 {
            for j in 0..2 {
                let bf: C64 = (0..2).map(|k| full[(2 * i + k, 2 * j + k)]).sum();
                assert!((t.matrix()[(i, j)] - bf).norm() < 1e-14);
                assert!((t.matrix()[(i, j)] - a.matrix()[(i, j)] * b.trace()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = CVector::from_vec(vec![real(s), real(0.0), real(0.0), real(s)]);
        let phi = LabeledVector::new(SpaceLayout::new([("P", 2), ("F", 2)]).unwrap(), v).unwrap();
        let rho = LabeledOperator::projector(&phi).partial_trace(&["F"]).unwrap();
        assert_eq!(rho.layout().labels(), vec!["P"]);
        assert!(max_diff(rho.matrix(), &(CMatrix::identity(2, 2) * real(0.5))) < 1e-15);
    }

    #[test]
    fn tracing_everything_gives_full_trace() {
        let m = sample(3, 6);
        let o = LabeledOperator::new(SpaceLayout::new([("a", 2), ("b", 3)]).unwrap(), m.clone()).unwrap();
        let t = o.partial_trace(&["a", "b"]).unwrap();
        assert_eq!(t.dim(), 1);
        assert!((t.matrix()[(0, 0)] - m.trace()).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_unknown_label() {
        let o = LabeledOperator::identity(SpaceLayout::single("P", 2));
        assert!(matches!(o.partial_trace(&["Q"]), Err(Error::UnknownLabel(_))));
        assert!(matches!(o.partial_transpose(&["Q"]), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn permute_swaps_tensor_order_exhaustively() {
        let a = op("A", sample(4, 2));
        let b = op("B", sample(5, 3));
        let ab = a.tensor(&b).unwrap().permute_factors(&["B", "A"]).unwrap();
        let ba = b.tensor(&a).unwrap();
        assert_eq!(ab.layout(), ba.layout());
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(ab.matrix()[(i, j)], ba.matrix()[(i, j)]);
            }
        }
    }

    #[test]
    fn permute_identity_and_errors() {
        let l = SpaceLayout::new([("a", 2), ("b", 3), ("c", 2)]).unwrap();
        let id = LabeledOperator::identity(l);
        let p = id.permute_factors(&["c", "a", "b"]).unwrap();
        assert_eq!(p.matrix(), &CMatrix::identity(12, 12));
        assert!(matches!(id.permute_factors(&["a", "b"]), Err(Error::InvalidPermutation(_))));
        assert!(matches!(id.permute_factors(&["a", "b", "d"]), Err(Error::InvalidPermutation(_))));
        assert!(matches!(id.permute_factors(&["a", "a", "b"]), Err(Error::InvalidPermutation(_))));
    }

    #[test]
    fn partial_transpose_full_is_transpose() {
        let m = sample(6, 4);
        let o = LabeledOperator::new(SpaceLayout::new([("a", 2), ("b", 2)]).unwrap(), m.clone()).unwrap();
        let t = o.partial_transpose(&["a", "b"]).unwrap();
        assert_eq!(t.matrix(), &m.transpose());
        assert_eq!(o.partial_transpose(&["b"]).unwrap().partial_transpose(&["b"]).unwrap(), o);
    }

    #[test]
    fn partial_transpose_bell_spectrum() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = CVector::from_vec(vec![real(s), real(0.0), real(0.0), real(s)]);
        let phi = LabeledVector::new(SpaceLayout::new([("P", 2), ("F", 2)]).unwrap(), v).unwrap();
        let pt = LabeledOperator::projector(&phi).partial_transpose(&["F"]).unwrap();
        let ev = pt.eigh().unwrap().values;
        let expected = [0.5, 0.5, 0.5, -0.5];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn eigh_simple_cases() {
        let ev = eigh(&gates::x()).unwrap().values;
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] + 1.0).abs() < 1e-14);
        let ev = eigh(&(CMatrix::identity(2, 2) * real(0.5))).unwrap().values;
        assert!(ev.iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        for seed in 0..10 {
            let a = sample(seed, 7);
            let h = &a + a.adjoint();
            let e = eigh(&h).unwrap();
            assert!((e.reconstruct() - &h).norm() <= tol::EIGEN);
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            assert!(is_unitary(&e.vectors, 1e-10));
        }
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), real(0.0), real(0.0)]);
        assert!(matches!(eigh(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn predicates() {
        assert!(is_psd(&CMatrix::identity(3, 3), tol::DEFAULT));
        assert!(!is_psd(&gates::z(), tol::DEFAULT));
        let h = gates::hadamard();
        assert!(is_unitary(&(&h * &h), tol::DEFAULT));
        assert!(!is_unitary(&(gates::x() * real(2.0)), tol::DEFAULT));
    }

    #[test]
    fn to_matrix_reshapes_by_labels() {
        let l = SpaceLayout::new([("a", 2), ("b", 3)]).unwrap();
        let v = CVector::from_fn(6, |i, _| real(i as f64));
        let lv = LabeledVector::new(l, v).unwrap();
        let (rows, cols, m) = lv.to_matrix(&["b"]).unwrap();
        assert_eq!(rows.labels(), vec!["b"]);
        assert_eq!(cols.labels(), vec!["a"]);
        // m[b, a] = v[a * 3 + b]
        for a in 0..2 {
            for b in 0..3 {
                assert_eq!(m[(b, a)], real((a * 3 + b) as f64));
            }
        }
    }
}
