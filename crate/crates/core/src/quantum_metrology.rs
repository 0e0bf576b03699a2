//! Noisy quantum phase estimation.
//!
//! Density matrices, Kraus channels and POVMs are dense complex matrices.
//! The quantum Fisher information is computed from the spectral formula, and
//! the Fisher caps of lossy/dephased interferometry are turned into MI caps
//! through the finite-support bound on a `2π` phase interval.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bounds::{BoundReport, ValidityFlag};
use crate::numerics::ParameterGrid;
use crate::stat_model::{ConditionalModel, DerivativeSource};
use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Eigenvalue pairs with `λj + λk` below this are dropped from the QFI sum.
pub const QFI_EIGEN_CUTOFF: f64 = 1e-12;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const POSITIVITY_TOL: f64 = 1e-10;
const COMPLETENESS_TOL: f64 = 1e-12;
const STENCIL_STEP: f64 = 1e-3;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn trace_re(m: &CMatrix) -> f64 {
    m.trace().re
}

/// `Re tr(A B)` without forming the product.
fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    let herm = (m + m.adjoint()) * c(0.5);
    SymmetricEigen::new(herm)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidArgument(
                "density matrix must be square and non-empty".into(),
            ));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("density matrix has non-finite entries".into()));
        }
        let herm = hermiticity_error(&m);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix is not Hermitian (max deviation {herm:e})"
            )));
        }
        let tr = trace_re(&m);
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidArgument(format!("density matrix trace is {tr}, not 1")));
        }
        let lmin = min_eigenvalue(&m);
        if lmin < -POSITIVITY_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix has negative eigenvalue {lmin:e}"
            )));
        }
        Ok(Self(m))
    }

    /// `|ψ⟩⟨ψ|` for a normalised copy of `psi`.
    pub fn pure(psi: &DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidArgument(
                "state vector has zero or non-finite norm".into(),
            ));
        }
        let v = psi / c(norm);
        Self::new(&v * v.adjoint())
    }

    /// `|+⟩ = (|0⟩ + |1⟩)/√2` embedded in `dim ≥ 2` levels.
    pub fn plus(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument("|+⟩ needs at least two levels".into()));
        }
        let mut psi = DVector::from_element(dim, c(0.0));
        psi[0] = c(1.0);
        psi[1] = c(1.0);
        Self::pure(&psi)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

/// Single-use noise acting after the phase gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Dephasing,
    AmplitudeDamping,
    /// Photon loss to an orthogonal "erased" level `|2⟩`.
    Erasure,
}

impl NoiseKind {
    /// Hilbert-space dimension the channel acts on.
    pub fn dim(self) -> usize {
        match self {
            NoiseKind::Erasure => 3,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Dephasing => "dephasing",
            NoiseKind::AmplitudeDamping => "amplitude-damping",
            NoiseKind::Erasure => "erasure",
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dephasing" => Ok(NoiseKind::Dephasing),
            "amplitude-damping" | "ampdamp" => Ok(NoiseKind::AmplitudeDamping),
            "erasure" | "loss" => Ok(NoiseKind::Erasure),
            other => Err(Error::InvalidArgument(format!("unknown noise kind '{other}'"))),
        }
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!("efficiency η must lie in (0, 1], got {eta}")));
    }
    Ok(())
}

/// Noise Kraus operators, without the phase gate.
pub fn noise_kraus(kind: NoiseKind, eta: f64) -> Result<Vec<CMatrix>> {
    check_eta(eta)?;
    let ops = match kind {
        NoiseKind::Dephasing => {
            let a = ((1.0 + eta.sqrt()) / 2.0).sqrt();
            let b = ((1.0 - eta.sqrt()) / 2.0).sqrt();
            vec![
                CMatrix::from_diagonal(&DVector::from_vec(vec![c(a), c(a)])),
                CMatrix::from_diagonal(&DVector::from_vec(vec![c(b), c(-b)])),
            ]
        }
        NoiseKind::AmplitudeDamping => {
            let mut k1 = CMatrix::zeros(2, 2);
            k1[(0, 1)] = c((1.0 - eta).sqrt());
            vec![
                CMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(eta.sqrt())])),
                k1,
            ]
        }
        NoiseKind::Erasure => {
            let s = eta.sqrt();
            let l = (1.0 - eta).sqrt();
            let k0 = CMatrix::from_diagonal(&DVector::from_vec(vec![c(s), c(s), c(0.0)]));
            let mut k1 = CMatrix::zeros(3, 3);
            k1[(2, 2)] = c(1.0);
            let mut k2 = CMatrix::zeros(3, 3);
            k2[(2, 0)] = c(l);
            let mut k3 = CMatrix::zeros(3, 3);
            k3[(2, 1)] = c(l);
            vec![k0, k1, k2, k3]
        }
    };
    Ok(ops)
}

/// `diag(1, e^{iφ}, 1, …)`: the phase sits on level `|1⟩` only.
pub fn phase_gate(phi: f64, dim: usize) -> CMatrix {
    let mut u = CMatrix::identity(dim, dim);
    if dim >= 2 {
        u[(1, 1)] = Complex64::from_polar(1.0, phi);
    }
    u
}

/// A phase gate `U_φ` followed by noise, as a Kraus channel.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    kind: NoiseKind,
    eta: f64,
    phi: f64,
    kraus: Vec<CMatrix>,
}

/// Builds `ρ ↦ Σ K_k U_φ ρ U_φ† K_k†`; `η` outside `(0, 1]` is a domain error.
pub fn make_channel(kind: NoiseKind, eta: f64, phi: f64) -> Result<KrausChannel> {
    if !phi.is_finite() {
        return Err(Error::InvalidArgument("phase must be finite".into()));
    }
    let u = phase_gate(phi, kind.dim());
    let kraus = noise_kraus(kind, eta)?.into_iter().map(|k| k * &u).collect();
    Ok(KrausChannel { kind, eta, phi, kraus })
}

impl KrausChannel {
    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn kraus_operators(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// Max-entry deviation of `Σ K†K` from the identity.
    pub fn completeness_error(&self) -> f64 {
        let d = self.dim();
        let mut sum = CMatrix::zeros(d, d);
        for k in &self.kraus {
            sum += k.adjoint() * k;
        }
        max_abs(&(sum - CMatrix::identity(d, d)))
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let d = self.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::InvalidArgument(format!(
                "channel acts on {d} levels, state has {}",
                rho.nrows()
            )));
        }
        let mut out = CMatrix::zeros(d, d);
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        Ok(out)
    }
}

/// A POVM: positive semidefinite elements summing to the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    elements: Vec<CMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidArgument("POVM has no elements".into()))?;
        let d = first.nrows();
        let mut sum = CMatrix::zeros(d, d);
        for (i, e) in elements.iter().enumerate() {
            if e.nrows() != d || e.ncols() != d {
                return Err(Error::InvalidArgument(format!("POVM element {i} has the wrong shape")));
            }
            if hermiticity_error(e) > HERMITIAN_TOL {
                return Err(Error::InvalidArgument(format!("POVM element {i} is not Hermitian")));
            }
            let lmin = min_eigenvalue(e);
            if lmin < -POSITIVITY_TOL {
                return Err(Error::InvalidArgument(format!(
                    "POVM element {i} has negative eigenvalue {lmin:e}"
                )));
            }
            sum += e;
        }
        let err = max_abs(&(sum - CMatrix::identity(d, d)));
        if err > COMPLETENESS_TOL {
            return Err(Error::InvalidArgument(format!(
                "POVM elements do not sum to the identity (max deviation {err:e})"
            )));
        }
        Ok(Self { elements })
    }

    /// Projective measurement onto an orthonormal basis given as columns.
    pub fn from_basis(basis: &CMatrix) -> Result<Self> {
        let elements = basis.column_iter().map(|col| col * col.adjoint()).collect();
        Self::new(elements)
    }

    /// Measurement in the computational basis.
    pub fn computational(dim: usize) -> Result<Self> {
        Self::from_basis(&CMatrix::identity(dim, dim))
    }

    /// `σx` eigenbasis on levels `|0⟩, |1⟩`, plus a projector onto every
    /// remaining level.
    pub fn sigma_x(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument("σx measurement needs two levels".into()));
        }
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut basis = CMatrix::identity(dim, dim);
        basis[(0, 0)] = c(r);
        basis[(1, 0)] = c(r);
        basis[(0, 1)] = c(r);
        basis[(1, 1)] = c(-r);
        Self::from_basis(&basis)
    }

    /// Haar-like random POVM with `outcomes` elements: `M_k = S^{-1/2} G_k G_k† S^{-1/2}`
    /// with Gaussian `G_k` and `S = Σ G_k G_k†`.
    pub fn random<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Result<Self> {
        if dim == 0 || outcomes == 0 {
            return Err(Error::InvalidArgument(
                "random POVM needs dim ≥ 1 and outcomes ≥ 1".into(),
            ));
        }
        let raw: Vec<CMatrix> = (0..outcomes)
            .map(|_| {
                let g = CMatrix::from_fn(dim, dim, |_, _| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                });
                &g * g.adjoint()
            })
            .collect();
        let mut s = CMatrix::zeros(dim, dim);
        for m in &raw {
            s += m;
        }
        let eig = SymmetricEigen::new((&s + s.adjoint()) * c(0.5));
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::Numeric("random POVM normaliser is singular".into()));
        }
        let inv_sqrt = DVector::from_iterator(dim, eig.eigenvalues.iter().map(|&l| c(1.0 / l.sqrt())));
        let v = &eig.eigenvectors;
        let s_inv_half = v * CMatrix::from_diagonal(&inv_sqrt) * v.adjoint();
        let elements = raw
            .iter()
            .map(|m| {
                let e = &s_inv_half * m * &s_inv_half;
                (&e + e.adjoint()) * c(0.5)
            })
            .collect();
        Self::new(elements)
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }
}

/// A one-parameter family of states `ρ(φ)`.
///
/// Derivatives default to five-point stencils with step `1e-3`.
pub trait StateFamily: Sync {
    fn dim(&self) -> usize;

    fn state(&self, phi: f64) -> Result<CMatrix>;

    fn derivative(&self, phi: f64) -> Result<CMatrix> {
        let h = STENCIL_STEP;
        let fp2 = self.state(phi + 2.0 * h)?;
        let fp1 = self.state(phi + h)?;
        let fm1 = self.state(phi - h)?;
        let fm2 = self.state(phi - 2.0 * h)?;
        Ok((fm2 - fp2 + (fp1 - fm1) * c(8.0)) * c(1.0 / (12.0 * h)))
    }

    fn second_derivative(&self, phi: f64) -> Result<CMatrix> {
        let h = STENCIL_STEP;
        let f0 = self.state(phi)?;
        let fp2 = self.state(phi + 2.0 * h)?;
        let fp1 = self.state(phi + h)?;
        let fm1 = self.state(phi - h)?;
        let fm2 = self.state(phi - 2.0 * h)?;
        Ok(((fp1 + fm1) * c(16.0) - fp2 - fm2 - f0 * c(30.0)) * c(1.0 / (12.0 * h * h)))
    }

    fn derivative_source(&self) -> DerivativeSource {
        DerivativeSource::FiniteDifference
    }
}

/// Noiseless phase imprint `ρ(φ) = U(mφ) ρ₀ U(mφ)†` with analytic derivatives.
///
/// With `ρ₀ = |+⟩⟨+|` and `m = N` this is the two-mode N00N state.
#[derive(Debug, Clone)]
pub struct PhaseFamily {
    input: CMatrix,
    multiplier: f64,
}

impl PhaseFamily {
    pub fn new(input: DensityMatrix, multiplier: f64) -> Result<Self> {
        if !(multiplier.is_finite() && multiplier != 0.0) {
            return Err(Error::InvalidArgument(
                "phase multiplier must be finite and non-zero".into(),
            ));
        }
        if input.dim() < 2 {
            return Err(Error::InvalidArgument("phase imprint needs at least two levels".into()));
        }
        Ok(Self {
            input: input.into_matrix(),
            multiplier,
        })
    }

    /// N00N state `(|N,0⟩ + |0,N⟩)/√2` on its two-dimensional span.
    pub fn noon(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("N00N state needs N ≥ 1".into()));
        }
        Self::new(DensityMatrix::plus(2)?, n as f64)
    }

    fn generator(&self) -> CMatrix {
        let d = self.input.nrows();
        let mut g = CMatrix::zeros(d, d);
        g[(1, 1)] = c(self.multiplier);
        g
    }

    fn commutator(&self, m: &CMatrix) -> CMatrix {
        let g = self.generator();
        (&g * m - m * &g) * Complex64::new(0.0, 1.0)
    }
}

impl StateFamily for PhaseFamily {
    fn dim(&self) -> usize {
        self.input.nrows()
    }

    fn state(&self, phi: f64) -> Result<CMatrix> {
        let u = phase_gate(self.multiplier * phi, self.dim());
        Ok(&u * &self.input * u.adjoint())
    }

    fn derivative(&self, phi: f64) -> Result<CMatrix> {
        Ok(self.commutator(&self.state(phi)?))
    }

    fn second_derivative(&self, phi: f64) -> Result<CMatrix> {
        Ok(self.commutator(&self.derivative(phi)?))
    }

    fn derivative_source(&self) -> DerivativeSource {
        DerivativeSource::Analytic
    }
}

/// `uses` sequential passes of a noisy phase gate on an input state.
#[derive(Debug, Clone)]
pub struct ChannelFamily {
    kind: NoiseKind,
    eta: f64,
    uses: usize,
    input: CMatrix,
}

impl ChannelFamily {
    pub fn new(kind: NoiseKind, eta: f64, uses: usize, input: DensityMatrix) -> Result<Self> {
        check_eta(eta)?;
        if uses == 0 {
            return Err(Error::InvalidArgument("channel family needs at least one use".into()));
        }
        if input.dim() != kind.dim() {
            return Err(Error::InvalidArgument(format!(
                "{} channel acts on {} levels, input has {}",
                kind.name(),
                kind.dim(),
                input.dim()
            )));
        }
        Ok(Self {
            kind,
            eta,
            uses,
            input: input.into_matrix(),
        })
    }

    /// `|+⟩` input, the standard probe for a single noisy arm.
    pub fn with_plus_input(kind: NoiseKind, eta: f64, uses: usize) -> Result<Self> {
        Self::new(kind, eta, uses, DensityMatrix::plus(kind.dim())?)
    }
}

impl StateFamily for ChannelFamily {
    fn dim(&self) -> usize {
        self.kind.dim()
    }

    fn state(&self, phi: f64) -> Result<CMatrix> {
        let ch = make_channel(self.kind, self.eta, phi)?;
        let mut rho = self.input.clone();
        for _ in 0..self.uses {
            rho = ch.apply(&rho)?;
        }
        Ok(rho)
    }
}

/// Quantum Fisher information `2 Σ |⟨j|∂ρ|k⟩|² / (λj + λk)` over pairs with
/// `λj + λk > 1e-12`.
pub fn qfi_of(rho: &CMatrix, drho: &CMatrix) -> Result<f64> {
    if rho.shape() != drho.shape() || !rho.is_square() {
        return Err(Error::InvalidArgument(
            "ρ and ∂ρ must be square and the same shape".into(),
        ));
    }
    if hermiticity_error(rho) > HERMITIAN_TOL {
        return Err(Error::InvalidArgument("ρ is not Hermitian".into()));
    }
    let eig = SymmetricEigen::new((rho + rho.adjoint()) * c(0.5));
    let v = &eig.eigenvectors;
    let d = v.adjoint() * drho * v;
    let n = rho.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for k in 0..n {
            let s = eig.eigenvalues[j] + eig.eigenvalues[k];
            if s > QFI_EIGEN_CUTOFF {
                acc += d[(j, k)].norm_sqr() / s;
            }
        }
    }
    Ok(2.0 * acc)
}

pub fn qfi<F: StateFamily + ?Sized>(family: &F, phi: f64) -> Result<f64> {
    qfi_of(&family.state(phi)?, &family.derivative(phi)?)
}

/// Classical Fisher information of a POVM on `ρ(φ)`; `+∞` marks an outcome
/// with zero probability and non-zero slope.
pub fn classical_fi_of_povm<F: StateFamily + ?Sized>(family: &F, povm: &Povm, phi: f64) -> Result<f64> {
    if povm.dim() != family.dim() {
        return Err(Error::InvalidArgument("POVM and state dimensions differ".into()));
    }
    let rho = family.state(phi)?;
    let drho = family.derivative(phi)?;
    let mut fi = 0.0;
    for m in povm.elements() {
        let p = trace_product_re(&rho, m).max(0.0);
        let dp = trace_product_re(&drho, m);
        if p > 0.0 {
            fi += dp * dp / p;
        } else if dp.abs() > 1e-12 {
            return Ok(f64::INFINITY);
        }
    }
    Ok(fi)
}

/// Outcome model `p(x|φ) = tr(ρ(φ) M_x)` tabulated on a grid.
pub fn povm_outcome_model<F: StateFamily + ?Sized>(
    family: &F,
    povm: &Povm,
    grid: ParameterGrid,
) -> Result<ConditionalModel> {
    if povm.dim() != family.dim() {
        return Err(Error::InvalidArgument("POVM and state dimensions differ".into()));
    }
    let k = povm.len();
    let n = grid.len();
    let mut prob = vec![vec![0.0; n]; k];
    let mut deriv = vec![vec![0.0; n]; k];
    let mut second = vec![vec![0.0; n]; k];
    for (i, phi) in grid.nodes().enumerate() {
        let rho = family.state(phi)?;
        let d1 = family.derivative(phi)?;
        let d2 = family.second_derivative(phi)?;
        for (x, m) in povm.elements().iter().enumerate() {
            let p = trace_product_re(&rho, m);
            if p < -1e-10 {
                return Err(Error::Numeric(format!("negative outcome probability {p:e}")));
            }
            prob[x][i] = p.max(0.0);
            deriv[x][i] = trace_product_re(&d1, m);
            second[x][i] = trace_product_re(&d2, m);
        }
    }
    ConditionalModel::from_tables(grid, prob, deriv, Some(second), family.derivative_source())
}

/// N00N-state interferometer read out with `povm` on the two-level span.
pub fn noon_outcome_model(n: usize, povm: &Povm, grid: ParameterGrid) -> Result<ConditionalModel> {
    povm_outcome_model(&PhaseFamily::noon(n)?, povm, grid)
}

/// Asymptotic single-pass Fisher constant `F_as = η/(1−η)`; `None` at `η = 1`.
pub fn asymptotic_fisher_constant(eta: f64) -> Result<Option<f64>> {
    check_eta(eta)?;
    if eta == 1.0 {
        Ok(None)
    } else {
        Ok(Some(eta / (1.0 - eta)))
    }
}

fn check_resources(n: f64) -> Result<()> {
    if !(n.is_finite() && n >= 1.0) {
        return Err(Error::InvalidArgument(format!("resource count N must be ≥ 1, got {n}")));
    }
    Ok(())
}

/// `N η/(1−η)`: the large-`N` Fisher cap. `None` (unbounded) at `η = 1`.
pub fn asymptotic_fi_cap(n: f64, eta: f64) -> Result<Option<f64>> {
    check_resources(n)?;
    Ok(asymptotic_fisher_constant(eta)?.map(|f| n * f))
}

/// `N F_as / (1 + F_as/N)`: the finite-`N` cap, which tends to `N²` as
/// `η → 1`. Derived for optical loss; for dephasing it is used as stated.
pub fn finite_n_fi_cap(n: f64, eta: f64) -> Result<Option<f64>> {
    check_resources(n)?;
    Ok(asymptotic_fisher_constant(eta)?.map(|f| finite_n_cap_from_constant(n, f)))
}

fn finite_n_cap_from_constant(n: f64, f_as: f64) -> f64 {
    n * f_as / (1.0 + f_as / n)
}

/// MI cap for a Fisher cap constant over a full `2π` phase interval:
/// `ln(1 + ½·2π·√F) = ln(1 + π√F)`.
pub fn mi_cap_from_fisher(fisher_cap: f64) -> f64 {
    (PI * fisher_cap.sqrt()).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapRegime {
    Asymptotic,
    FiniteN,
}

impl CapRegime {
    pub fn name(self) -> &'static str {
        match self {
            CapRegime::Asymptotic => "asymptotic",
            CapRegime::FiniteN => "finite-n",
        }
    }
}

impl std::str::FromStr for CapRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asymptotic" => Ok(CapRegime::Asymptotic),
            "finite-n" | "finite" => Ok(CapRegime::FiniteN),
            other => Err(Error::InvalidArgument(format!("unknown cap regime '{other}'"))),
        }
    }
}

fn fisher_cap(n: f64, f_as: f64, regime: CapRegime) -> f64 {
    match regime {
        CapRegime::Asymptotic => n * f_as,
        CapRegime::FiniteN => finite_n_cap_from_constant(n, f_as),
    }
}

/// MI cap `ln(1 + π√F_cap)` for `N` resources at efficiency `η`.
///
/// At `η = 1` the report carries no value and the
/// [`ValidityFlag::NoiselessUnbounded`] flag.
pub fn mi_cap(n: f64, eta: f64, regime: CapRegime) -> Result<BoundReport> {
    check_resources(n)?;
    let report = match asymptotic_fisher_constant(eta)? {
        None => BoundReport::mi_flagged("mi_cap", ValidityFlag::NoiselessUnbounded),
        Some(f_as) => {
            let cap = fisher_cap(n, f_as, regime);
            BoundReport::mi("mi_cap", mi_cap_from_fisher(cap)).with_detail("fisher_cap", cap)
        }
    };
    Ok(report
        .with_input("eta", eta)
        .with_input("N", n)
        .with_input("regime", regime.name()))
}

/// [`mi_cap`] for a specific noise model.
///
/// Dephasing and erasure use `F_as = η/(1−η)`. Amplitude damping uses
/// `configured_constant` when given, else the same formula with
/// [`ValidityFlag::AmplitudeDampingCapAssumed`].
pub fn mi_cap_for_noise(
    kind: NoiseKind,
    n: f64,
    eta: f64,
    regime: CapRegime,
    configured_constant: Option<f64>,
) -> Result<BoundReport> {
    if kind != NoiseKind::AmplitudeDamping {
        return Ok(mi_cap(n, eta, regime)?.with_input("noise", kind.name()));
    }
    match configured_constant {
        None => Ok(mi_cap(n, eta, regime)?
            .with_input("noise", kind.name())
            .with_flag(ValidityFlag::AmplitudeDampingCapAssumed)),
        Some(f_as) => {
            check_resources(n)?;
            check_eta(eta)?;
            if !(f_as.is_finite() && f_as > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "configured Fisher constant must be positive, got {f_as}"
                )));
            }
            let cap = fisher_cap(n, f_as, regime);
            Ok(BoundReport::mi("mi_cap", mi_cap_from_fisher(cap))
                .with_detail("fisher_cap", cap)
                .with_input("eta", eta)
                .with_input("N", n)
                .with_input("regime", regime.name())
                .with_input("noise", kind.name())
                .with_input("fisher_constant", f_as))
        }
    }
}

/// One row of the Heisenberg-to-standard-quantum-limit sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eta: f64,
    pub n: f64,
    /// `None` when the cap is unbounded (`η = 1`).
    pub mi_cap: Option<f64>,
    /// `ln N`: the Heisenberg-scaling reference.
    pub hs_ref: f64,
    /// `½ ln N`: the standard-quantum-limit reference.
    pub sql_ref: f64,
    /// `d ln √F_cap / d ln N`; 1 is Heisenberg scaling, ½ is SQL.
    pub slope: f64,
}

/// Sweep of [`mi_cap`] over resource counts `ns`.
pub fn transition_sweep(eta: f64, ns: &[f64], regime: CapRegime) -> Result<Vec<SweepRow>> {
    sweep_rows(eta, asymptotic_fisher_constant(eta)?, ns, regime)
}

/// [`transition_sweep`] for a noise model, with the amplitude-damping
/// constant handled as in [`mi_cap_for_noise`]. The returned flag is set
/// when the dephasing formula stood in for amplitude damping.
pub fn transition_sweep_for_noise(
    kind: NoiseKind,
    eta: f64,
    ns: &[f64],
    regime: CapRegime,
    configured_constant: Option<f64>,
) -> Result<(Vec<SweepRow>, Option<ValidityFlag>)> {
    check_eta(eta)?;
    match (kind, configured_constant) {
        (NoiseKind::AmplitudeDamping, Some(f_as)) => {
            if !(f_as.is_finite() && f_as > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "configured Fisher constant must be positive, got {f_as}"
                )));
            }
            Ok((sweep_rows(eta, Some(f_as), ns, regime)?, None))
        }
        (NoiseKind::AmplitudeDamping, None) => Ok((
            transition_sweep(eta, ns, regime)?,
            Some(ValidityFlag::AmplitudeDampingCapAssumed),
        )),
        _ => Ok((transition_sweep(eta, ns, regime)?, None)),
    }
}

fn sweep_rows(eta: f64, f_as: Option<f64>, ns: &[f64], regime: CapRegime) -> Result<Vec<SweepRow>> {
    ns.iter()
        .map(|&n| {
            check_resources(n)?;
            let (mi_cap, slope) = match f_as {
                None => (None, 1.0),
                Some(f) => {
                    let slope = match regime {
                        CapRegime::Asymptotic => 0.5,
                        CapRegime::FiniteN => 1.0 - n / (2.0 * (n + f)),
                    };
                    (Some(mi_cap_from_fisher(fisher_cap(n, f, regime))), slope)
                }
            };
            Ok(SweepRow {
                eta,
                n,
                mi_cap,
                hs_ref: n.ln(),
                sql_ref: 0.5 * n.ln(),
                slope,
            })
        })
        .collect()
}

/// Resource count where the finite-`N` slope falls through 3/4. This
/// happens at `N = F_as = η/(1−η)`; `None` at `η = 1`.
pub fn transition_resource_count(eta: f64) -> Result<Option<f64>> {
    asymptotic_fisher_constant(eta)
}

/// First crossing of slope 3/4 in a sweep, interpolated in `ln N`.
pub fn transition_from_sweep(rows: &[SweepRow]) -> Option<f64> {
    rows.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.slope >= 0.75 && b.slope < 0.75 {
            let t = (a.slope - 0.75) / (a.slope - b.slope);
            Some((a.n.ln() + t * (b.n.ln() - a.n.ln())).exp())
        } else {
            None
        }
    })
}

/// `points` log-spaced values from `min` to `max` inclusive.
pub fn log_spaced(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && max.is_finite()) || points == 0 {
        return Err(Error::InvalidArgument(format!(
            "log spacing needs 0 < min ≤ max and points ≥ 1, got [{min}, {max}] × {points}"
        )));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    let (a, b) = (min.ln(), max.ln());
    let mut v: Vec<f64> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect();
    v[0] = min;
    v[points - 1] = max;
    Ok(v)
}
