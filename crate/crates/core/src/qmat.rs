//! Dense complex linear algebra over labeled tensor-product Hilbert spaces.
//!
//! Every operator and state carries a [`SubsystemLayout`]. Basis indices use a
//! mixed-radix encoding in layout order with the leftmost subsystem most
//! significant, so `|d, q, c1, c2⟩` for four qubits sits at `8d + 4q + 2c1 + c2`.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol::TOL;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of labeled subsystems making up a composite Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsystemLayout {
    subsystems: Vec<Subsystem>,
}

impl SubsystemLayout {
    pub fn new<I, S>(parts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let subsystems: Vec<Subsystem> = parts
            .into_iter()
            .map(|(label, dim)| Subsystem { label: label.into(), dim })
            .collect();
        for (i, s) in subsystems.iter().enumerate() {
            if s.dim == 0 {
                return Err(Error::Layout(format!("subsystem `{}` has dimension 0", s.label)));
            }
            if subsystems[..i].iter().any(|o| o.label == s.label) {
                return Err(Error::Layout(format!("duplicate label `{}`", s.label)));
            }
        }
        Ok(Self { subsystems })
    }

    /// A single subsystem.
    pub fn single(label: impl Into<String>, dim: usize) -> Self {
        assert!(dim > 0, "subsystem dimension must be positive");
        Self { subsystems: vec![Subsystem { label: label.into(), dim }] }
    }

    /// `[D (dim n), Q, C1, ..., Cn]`, the register of the charging protocol.
    pub fn protocol(n: usize) -> Self {
        let mut subsystems = vec![
            Subsystem { label: "D".into(), dim: n },
            Subsystem { label: "Q".into(), dim: 2 },
        ];
        subsystems.extend((1..=n).map(|l| Subsystem { label: charger_label(l), dim: 2 }));
        Self { subsystems }
    }

    /// `[Q, C1, ..., Cn]`: battery and chargers without the switch.
    pub fn battery_chargers(n: usize) -> Self {
        let mut subsystems = vec![Subsystem { label: "Q".into(), dim: 2 }];
        subsystems.extend((1..=n).map(|l| Subsystem { label: charger_label(l), dim: 2 }));
        Self { subsystems }
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(|s| s.dim).product()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.dim).collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.subsystems.iter().map(|s| s.label.as_str())
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Concatenation `self ⊗ other`. Labels of `other` that collide with
    /// labels already present get a `'` appended until unique.
    pub fn concat(&self, other: &Self) -> Self {
        let mut subsystems = self.subsystems.clone();
        for s in &other.subsystems {
            let mut label = s.label.clone();
            while subsystems.iter().any(|o| o.label == label) {
                label.push('\'');
            }
            subsystems.push(Subsystem { label, dim: s.dim });
        }
        Self { subsystems }
    }

    /// Mixed-radix encoding of per-subsystem indices.
    pub fn encode(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.subsystems.len());
        digits
            .iter()
            .zip(&self.subsystems)
            .fold(0, |acc, (&d, s)| {
                debug_assert!(d < s.dim);
                acc * s.dim + d
            })
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.subsystems.len()];
        for (slot, s) in digits.iter_mut().zip(&self.subsystems).rev() {
            *slot = index % s.dim;
            index /= s.dim;
        }
        digits
    }

    /// Sub-layout of the given labels (kept in this layout's order) together
    /// with, for every full basis index, its index inside the kept factor and
    /// inside the complementary factor.
    fn split(&self, keep: &[&str]) -> Result<Split> {
        let mut mask = vec![false; self.len()];
        for label in keep {
            mask[self.position(label)?] = true;
        }
        let kept = Self {
            subsystems: self
                .subsystems
                .iter()
                .zip(&mask)
                .filter(|(_, &m)| m)
                .map(|(s, _)| s.clone())
                .collect(),
        };
        let kept_dim = kept.total_dim();
        let rest_dim = self.total_dim() / kept_dim;
        let mut kept_index = Vec::with_capacity(self.total_dim());
        let mut rest_index = Vec::with_capacity(self.total_dim());
        for i in 0..self.total_dim() {
            let digits = self.decode(i);
            let (mut k, mut r) = (0, 0);
            for ((d, s), &m) in digits.iter().zip(&self.subsystems).zip(&mask) {
                if m {
                    k = k * s.dim + d;
                } else {
                    r = r * s.dim + d;
                }
            }
            kept_index.push(k);
            rest_index.push(r);
        }
        Ok(Split { kept, kept_dim, rest_dim, kept_index, rest_index })
    }
}

impl fmt::Display for SubsystemLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .subsystems
            .iter()
            .map(|s| format!("{}({})", s.label, s.dim))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

pub fn charger_label(l: usize) -> String {
    format!("C{l}")
}

struct Split {
    kept: SubsystemLayout,
    kept_dim: usize,
    rest_dim: usize,
    kept_index: Vec<usize>,
    rest_index: Vec<usize>,
}

impl Split {
    /// Full basis index for a (kept, rest) pair.
    fn full_index_table(&self) -> Vec<usize> {
        let mut table = vec![0; self.kept_dim * self.rest_dim];
        for (full, (&k, &r)) in self.kept_index.iter().zip(&self.rest_index).enumerate() {
            table[k * self.rest_dim + r] = full;
        }
        table
    }
}

/// State vector over a labeled layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    layout: SubsystemLayout,
    amplitudes: DVector<C64>,
    normalized: bool,
}

impl PureState {
    /// Normalized state; fails unless the 2-norm is 1 within tolerance.
    pub fn new(layout: SubsystemLayout, amplitudes: DVector<C64>) -> Result<Self> {
        let state = Self::new_unnormalized(layout, amplitudes)?;
        let norm = state.norm();
        if (norm - 1.0).abs() > TOL.norm {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { normalized: true, ..state })
    }

    pub fn new_unnormalized(layout: SubsystemLayout, amplitudes: DVector<C64>) -> Result<Self> {
        check_len(layout.total_dim(), amplitudes.len())?;
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { layout, amplitudes, normalized: false })
    }

    /// Computational basis product state with the given per-subsystem indices.
    pub fn basis(layout: SubsystemLayout, digits: &[usize]) -> Result<Self> {
        check_len(layout.len(), digits.len())?;
        for (d, s) in digits.iter().zip(layout.subsystems()) {
            if *d >= s.dim {
                return Err(Error::IndexOutOfRange { index: *d, max: s.dim - 1 });
            }
        }
        let mut amplitudes = DVector::from_element(layout.total_dim(), ZERO);
        amplitudes[layout.encode(digits)] = ONE;
        Ok(Self { layout, amplitudes, normalized: true })
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    /// Whether this value was constructed (and checked) as a normalized state.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        check_len(self.amplitudes.len(), other.amplitudes.len())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `op |self⟩`. Normalization is kept only when `op` is unitary.
    pub fn apply(&self, op: &DenseOperator) -> Result<Self> {
        check_len(self.layout.total_dim(), op.dim())?;
        let normalized = self.normalized && op.unitarity_error() <= TOL.unitary;
        Ok(Self { layout: self.layout.clone(), amplitudes: &op.matrix * &self.amplitudes, normalized })
    }

    /// Apply an operator defined on a subset of this layout's subsystems,
    /// acting as the identity on everything else.
    pub fn apply_local(&self, op: &DenseOperator) -> Result<Self> {
        let keep: Vec<&str> = op.layout.labels().collect();
        let split = self.layout.split(&keep)?;
        if split.kept != op.layout {
            return Err(Error::Layout(format!(
                "operator layout {} is not an ordered sub-layout of {}",
                op.layout, self.layout
            )));
        }
        let table = split.full_index_table();
        let mut out = DVector::from_element(self.amplitudes.len(), ZERO);
        let mut block = DVector::from_element(split.kept_dim, ZERO);
        for r in 0..split.rest_dim {
            for k in 0..split.kept_dim {
                block[k] = self.amplitudes[table[k * split.rest_dim + r]];
            }
            let mapped = &op.matrix * &block;
            for k in 0..split.kept_dim {
                out[table[k * split.rest_dim + r]] = mapped[k];
            }
        }
        Ok(Self { layout: self.layout.clone(), amplitudes: out, normalized: self.normalized })
    }

    /// `|self⟩⟨self|`.
    pub fn to_density(&self) -> DenseOperator {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DenseOperator { layout: self.layout.clone(), matrix: m }
    }

    /// Reduced operator `Tr_rest |ψ⟩⟨ψ|` on the kept subsystems.
    pub fn reduced(&self, keep: &[&str]) -> Result<DenseOperator> {
        let split = self.layout.split(keep)?;
        let mut m = DMatrix::from_element(split.kept_dim, split.rest_dim, ZERO);
        for (full, a) in self.amplitudes.iter().enumerate() {
            m[(split.kept_index[full], split.rest_index[full])] = *a;
        }
        let matrix = &m * m.adjoint();
        Ok(DenseOperator { layout: split.kept, matrix })
    }
}

/// Square complex matrix acting on a labeled layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    layout: SubsystemLayout,
    matrix: DMatrix<C64>,
}

impl DenseOperator {
    pub fn new(layout: SubsystemLayout, matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        check_len(layout.total_dim(), matrix.nrows())?;
        if matrix.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { layout, matrix })
    }

    /// Row-major construction from real entries.
    pub fn from_real(layout: SubsystemLayout, rows: &[f64]) -> Result<Self> {
        let d = layout.total_dim();
        check_len(d * d, rows.len())?;
        Self::new(layout, DMatrix::from_row_iterator(d, d, rows.iter().map(|&x| C64::new(x, 0.0))))
    }

    pub fn from_fn(layout: SubsystemLayout, f: impl FnMut(usize, usize) -> C64) -> Self {
        let d = layout.total_dim();
        Self { layout, matrix: DMatrix::from_fn(d, d, f) }
    }

    pub fn identity(layout: SubsystemLayout) -> Self {
        let d = layout.total_dim();
        Self { layout, matrix: DMatrix::identity(d, d) }
    }

    pub fn zeros(layout: SubsystemLayout) -> Self {
        let d = layout.total_dim();
        Self { layout, matrix: DMatrix::from_element(d, d, ZERO) }
    }

    pub fn diagonal(layout: SubsystemLayout, diag: &[C64]) -> Result<Self> {
        check_len(layout.total_dim(), diag.len())?;
        Ok(Self { layout, matrix: DMatrix::from_diagonal(&DVector::from_column_slice(diag)) })
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    /// Same matrix, different labels. Dimensions must agree.
    pub fn relabel(&self, layout: SubsystemLayout) -> Result<Self> {
        if layout.dims() != self.layout.dims() {
            return Err(Error::Layout(format!("cannot relabel {} as {}", self.layout, layout)));
        }
        Ok(Self { layout, matrix: self.matrix.clone() })
    }

    pub fn adjoint(&self) -> Self {
        Self { layout: self.layout.clone(), matrix: self.matrix.adjoint() }
    }

    /// Matrix product `self · rhs`; the result keeps `self`'s layout.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        check_len(self.dim(), rhs.dim())?;
        Ok(Self { layout: self.layout.clone(), matrix: &self.matrix * &rhs.matrix })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        check_len(self.dim(), rhs.dim())?;
        Ok(Self { layout: self.layout.clone(), matrix: &self.matrix + &rhs.matrix })
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { layout: self.layout.clone(), matrix: &self.matrix * factor }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Max-entry norm of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "operator dimensions differ");
        max_abs(&(&self.matrix - &other.matrix))
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "operator dimensions differ");
        (&self.matrix - &other.matrix).norm()
    }

    /// `min_φ ‖self - e^{iφ} other‖_F`.
    pub fn phase_insensitive_distance(&self, other: &Self) -> f64 {
        let overlap = (other.matrix.adjoint() * &self.matrix).trace();
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
        (&self.matrix - &other.matrix * phase).norm()
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        max_abs(&(self.matrix.adjoint() * &self.matrix - DMatrix::<C64>::identity(d, d)))
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= TOL.hermitian
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_error() <= TOL.unitary
    }

    /// Max deviation from `P² = P = P†`.
    pub fn projector_error(&self) -> f64 {
        let sq = &self.matrix * &self.matrix;
        max_abs(&(&sq - &self.matrix)).max(self.hermiticity_error())
    }

    /// Hermitian, positive semidefinite, unit trace.
    pub fn check_density(&self) -> Result<()> {
        self.check_unnormalized_density()?;
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TOL.trace || tr.im.abs() > TOL.trace {
            return Err(Error::NotNormalized(tr.re));
        }
        Ok(())
    }

    /// Hermitian and positive semidefinite; any trace.
    pub fn check_unnormalized_density(&self) -> Result<()> {
        let eig = hermitian_eig(self)?;
        if let Some(&min) = eig.values.first() {
            if min < -TOL.psd {
                return Err(Error::Layout(format!("negative eigenvalue {min:.3e}")));
            }
        }
        Ok(())
    }

    /// Real part of the diagonal.
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    /// Largest modulus among off-diagonal entries.
    pub fn max_off_diagonal(&self) -> f64 {
        let d = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    m = m.max(self.matrix[(i, j)].norm());
                }
            }
        }
        m
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Kronecker composition of operators or states.
pub trait Tensor: Sized {
    fn tensor(&self, rhs: &Self) -> Self;
}

impl Tensor for DenseOperator {
    fn tensor(&self, rhs: &Self) -> Self {
        Self { layout: self.layout.concat(&rhs.layout), matrix: self.matrix.kronecker(&rhs.matrix) }
    }
}

impl Tensor for PureState {
    fn tensor(&self, rhs: &Self) -> Self {
        Self {
            layout: self.layout.concat(&rhs.layout),
            amplitudes: self.amplitudes.kronecker(&rhs.amplitudes),
            normalized: self.normalized && rhs.normalized,
        }
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

/// Reduced operator on `keep`, in the original relative order.
pub fn partial_trace(op: &DenseOperator, keep: &[&str]) -> Result<DenseOperator> {
    let split = op.layout.split(keep)?;
    let table = split.full_index_table();
    let (dk, dr) = (split.kept_dim, split.rest_dim);
    let matrix = DMatrix::from_fn(dk, dk, |i, j| {
        (0..dr).map(|r| op.matrix[(table[i * dr + r], table[j * dr + r])]).sum()
    });
    Ok(DenseOperator { layout: split.kept, matrix })
}

/// Extend an operator defined on some of `full`'s subsystems to all of them,
/// acting as the identity elsewhere.
pub fn embed(op: &DenseOperator, full: &SubsystemLayout) -> Result<DenseOperator> {
    let keep: Vec<&str> = op.layout.labels().collect();
    let split = full.split(&keep)?;
    if split.kept != op.layout {
        return Err(Error::Layout(format!(
            "operator layout {} is not an ordered sub-layout of {}",
            op.layout, full
        )));
    }
    let table = split.full_index_table();
    let (dk, dr) = (split.kept_dim, split.rest_dim);
    let d = full.total_dim();
    let mut matrix = DMatrix::from_element(d, d, ZERO);
    for r in 0..dr {
        for i in 0..dk {
            for j in 0..dk {
                let v = op.matrix[(i, j)];
                if v != ZERO {
                    matrix[(table[i * dr + r], table[j * dr + r])] = v;
                }
            }
        }
    }
    Ok(DenseOperator { layout: full.clone(), matrix })
}

/// Spectral decomposition `H = V diag(values) V†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: DMatrix<C64>,
}

impl Eigen {
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&x| C64::new(x, 0.0)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }
}

pub fn hermitian_eig(h: &DenseOperator) -> Result<Eigen> {
    let err = h.hermiticity_error();
    if err > TOL.hermitian {
        return Err(Error::NotHermitian(err));
    }
    // Symmetrize away sub-tolerance noise before handing off to the solver.
    let sym = (&h.matrix + h.matrix.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(h.dim(), h.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// `exp(-i s H)` through the spectral decomposition of `H`.
pub fn exp_neg_i(h: &DenseOperator, s: f64) -> Result<DenseOperator> {
    let eig = hermitian_eig(h)?;
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|&e| C64::from_polar(1.0, -s * e)),
    ));
    let matrix = &eig.vectors * phases * eig.vectors.adjoint();
    Ok(DenseOperator { layout: h.layout.clone(), matrix })
}

/// `(Tr[Π ρ Π], Π ρ Π)` for an orthogonal projector `Π` on the same layout.
pub fn project_unnormalized(rho: &DenseOperator, proj: &DenseOperator) -> Result<(f64, DenseOperator)> {
    check_len(rho.dim(), proj.dim())?;
    let err = proj.projector_error();
    if err > TOL.projector {
        return Err(Error::NotProjector(err));
    }
    let matrix = &proj.matrix * &rho.matrix * &proj.matrix;
    let state = DenseOperator { layout: rho.layout.clone(), matrix };
    Ok((state.trace().re, state))
}
