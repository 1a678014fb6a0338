//! Uniform matrix product states and the momentum excitation ansatz.
//!
//! For an injective tensor `A` with transfer fixed points `l` and `r`, the
//! half-infinite entanglement spectrum is `eig(Ξ)` with `Ξ = L^H r L` and
//! `l = L L^H`. Replacing one `A` by a gauge-fixed `B` in a momentum
//! superposition yields a reduced density matrix similar to `½(Ξ ⊕ Ξ)`, whatever
//! the bond dimension. The finite-window constructions in [`window`] check
//! that statement independently.

pub mod window;

use nalgebra::{Cholesky, DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Largest supported bond dimension.
pub const MAX_BOND_DIM: usize = 16;
/// Smallest relative gap below the leading transfer eigenvalue.
pub const INJECTIVITY_GAP: f64 = 1e-6;
pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITERS: usize = 10_000;
/// Accepted residual of the fixed-point equations.
pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const GAUGE_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `X ↦ Σ_s A^s X A^s†`.
pub fn transfer_right(a: &[CMatrix], x: &CMatrix) -> CMatrix {
    a.iter()
        .fold(CMatrix::zeros(x.nrows(), x.ncols()), |acc, m| acc + m * x * m.adjoint())
}

/// `Y ↦ Σ_s A^s† Y A^s`.
pub fn transfer_left(a: &[CMatrix], y: &CMatrix) -> CMatrix {
    a.iter()
        .fold(CMatrix::zeros(y.nrows(), y.ncols()), |acc, m| acc + m.adjoint() * y * m)
}

/// `E = Σ_s conj(A^s) ⊗ A^s`, so that `E vec(X) = vec(transfer_right(X))`
/// for column-major `vec`.
pub fn transfer_matrix(a: &[CMatrix]) -> CMatrix {
    let d = a[0].nrows();
    let mut e = CMatrix::zeros(d * d, d * d);
    for m in a {
        e += m.map(|z| z.conj()).kronecker(m);
    }
    e
}

/// Transfer eigenvalues sorted by decreasing modulus.
pub fn transfer_eigenvalues(a: &[CMatrix]) -> Vec<Complex64> {
    let e = transfer_matrix(a);
    let mut ev: Vec<Complex64> = Schur::new(e)
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .unwrap_or_default();
    ev.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    ev
}

fn check_tensor(a: &[CMatrix]) -> Result<usize> {
    let Some(first) = a.first() else {
        return Err(Error::InvalidInput("tensor has no physical components".into()));
    };
    let d = first.nrows();
    if d == 0 || d > MAX_BOND_DIM {
        return Err(Error::InvalidInput(format!(
            "bond dimension {d} outside 1..={MAX_BOND_DIM}"
        )));
    }
    if a.iter().any(|m| m.nrows() != d || m.ncols() != d) {
        return Err(Error::InvalidInput("tensor components must all be D x D".into()));
    }
    if a.iter().any(|m| m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
        return Err(Error::InvalidInput("tensor has non-finite entries".into()));
    }
    Ok(d)
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn frob(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

fn unvec(v: &DVector<Complex64>, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

/// Fixed point of `map` by power iteration, else from the null space of
/// `dense - I`.
fn fixed_point<F: Fn(&CMatrix) -> CMatrix>(map: F, dense: impl FnOnce() -> CMatrix, d: usize) -> CMatrix {
    let mut x = CMatrix::identity(d, d);
    for _ in 0..POWER_MAX_ITERS {
        let y = hermitize(&map(&x));
        let y = &y / trace(&y);
        let res = frob(&(&y - &x)) / frob(&y);
        x = y;
        if res <= POWER_TOL {
            return x;
        }
    }
    let m = dense() - CMatrix::identity(d * d, d * d);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let v = v_t.row(idx).adjoint();
    let x = hermitize(&unvec(&v, d));
    &x / trace(&x)
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    SymmetricEigen::new(hermitize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Translation-invariant MPS with its transfer fixed points.
#[derive(Clone, Debug)]
pub struct UniformMPS {
    a: Vec<CMatrix>,
    l: CMatrix,
    r: CMatrix,
    gap: f64,
}

impl UniformMPS {
    /// Physical components `A^s`, normalized to transfer spectral radius 1.
    pub fn tensor(&self) -> &[CMatrix] {
        &self.a
    }

    pub fn physical_dim(&self) -> usize {
        self.a.len()
    }

    pub fn bond_dim(&self) -> usize {
        self.l.nrows()
    }

    /// Left fixed point: `Σ A† l A = l`.
    pub fn left(&self) -> &CMatrix {
        &self.l
    }

    /// Right fixed point: `Σ A r A† = r`.
    pub fn right(&self) -> &CMatrix {
        &self.r
    }

    /// `1 - |λ_2| / λ_1` of the transfer matrix.
    pub fn transfer_gap(&self) -> f64 {
        self.gap
    }

    /// `max(‖E†(l) - l‖, ‖E(r) - r‖)`, relative.
    pub fn fixed_point_residual(&self) -> f64 {
        let rl = frob(&(transfer_left(&self.a, &self.l) - &self.l)) / frob(&self.l);
        let rr = frob(&(transfer_right(&self.a, &self.r) - &self.r)) / frob(&self.r);
        rl.max(rr)
    }
}

/// Normalize `A` and compute its fixed points, with `tr(l r) = 1`.
pub fn fixed_points(a: Vec<CMatrix>) -> Result<UniformMPS> {
    let d = check_tensor(&a)?;
    let ev = transfer_eigenvalues(&a);
    let lead = ev.first().map_or(0.0, |z| z.norm());
    if lead <= 0.0 {
        return Err(Error::NonInjective { gap: 0.0 });
    }
    let gap = ev.get(1).map_or(1.0, |z| 1.0 - z.norm() / lead);
    if gap < INJECTIVITY_GAP {
        return Err(Error::NonInjective { gap });
    }
    let scale = Complex64::new(1.0 / lead.sqrt(), 0.0);
    let a: Vec<CMatrix> = a.into_iter().map(|m| m * scale).collect();

    let r = fixed_point(|x| transfer_right(&a, x), || transfer_matrix(&a), d);
    let l = fixed_point(
        |y| transfer_left(&a, y),
        || transfer_matrix(&a).adjoint(),
        d,
    );
    let min_l = min_eigenvalue(&l);
    let min_r = min_eigenvalue(&r);
    if min_l <= 0.0 || min_r <= 0.0 {
        return Err(Error::NotPositiveDefinite(min_l.min(min_r)));
    }
    let norm = trace(&(&l * &r)).re;
    let l = hermitize(&(l / Complex64::new(norm, 0.0)));
    let ump = UniformMPS {
        a,
        l,
        r: hermitize(&r),
        gap,
    };
    let res = ump.fixed_point_residual();
    if res > FIXED_POINT_TOL {
        return Err(Error::NonConvergence {
            iterations: POWER_MAX_ITERS,
            residuals: vec![res],
        });
    }
    Ok(ump)
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// `d` matrices `D x D` of i.i.d. standard complex Gaussian entries.
pub fn random_tensor(d: usize, bond: usize, rng: &mut ChaCha8Rng) -> Vec<CMatrix> {
    (0..d)
        .map(|_| CMatrix::from_fn(bond, bond, |_, _| complex_gaussian(rng)))
        .collect()
}

/// Random injective uniform MPS; non-injective draws are rejected and redrawn.
pub fn random_mps(d: usize, bond: usize, rng: &mut ChaCha8Rng) -> Result<UniformMPS> {
    for _ in 0..100 {
        match fixed_points(random_tensor(d, bond, rng)) {
            Err(Error::NonInjective { .. }) => continue,
            other => return other,
        }
    }
    Err(Error::NonInjective { gap: 0.0 })
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Half-infinite ground-state entanglement data.
#[derive(Clone, Debug)]
pub struct GroundSpectrum {
    pub xi: CMatrix,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub entropy: f64,
}

fn entropy_of(probs: &[f64]) -> f64 {
    probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum()
}

fn hermitian_eigenvalues_desc(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(hermitize(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// `Ξ = L^H r L` with `l = L L^H`, its spectrum and entropy.
pub fn ground_spectrum(ump: &UniformMPS) -> Result<GroundSpectrum> {
    let chol = Cholesky::new(ump.l.clone()).ok_or_else(|| Error::NotPositiveDefinite(min_eigenvalue(&ump.l)))?;
    let lf = chol.l();
    let xi = hermitize(&(lf.adjoint() * &ump.r * &lf));
    let mut eigenvalues = hermitian_eigenvalues_desc(&xi);
    if let Some(&bad) = eigenvalues.iter().find(|&&x| x < -1e-12) {
        return Err(Error::NotPositiveDefinite(bad));
    }
    eigenvalues.iter_mut().for_each(|x| *x = x.max(0.0));
    let entropy = entropy_of(&eigenvalues);
    Ok(GroundSpectrum {
        xi,
        eigenvalues,
        entropy,
    })
}

/// Tangent tensor `B` for the state `Σ_m e^{iκm} |… A B_m A …>`.
#[derive(Clone, Debug)]
pub struct ExcitationTensor {
    pub b: Vec<CMatrix>,
    pub momentum: f64,
}

/// `Σ_s A^s† l B^s`, which vanishes exactly when the excitation is
/// orthogonal to the ground state at every momentum.
pub fn gauge_overlap(ump: &UniformMPS, b: &[CMatrix]) -> CMatrix {
    ump.a
        .iter()
        .zip(b)
        .fold(CMatrix::zeros(ump.bond_dim(), ump.bond_dim()), |acc, (a, b)| {
            acc + a.adjoint() * &ump.l * b
        })
}

/// `tr(Σ_s B^s† l B^s r)`.
pub fn excitation_norm(ump: &UniformMPS, b: &[CMatrix]) -> f64 {
    b.iter()
        .fold(ZERO, |acc, m| acc + trace(&(m.adjoint() * &ump.l * m * &ump.r)))
        .re
}

/// Project `B_raw` onto the left gauge `Σ A† l B = 0` via
/// `B ↦ B - A l^{-1} Σ A† l B`, then normalize.
pub fn gauge_fix(ump: &UniformMPS, b_raw: &[CMatrix], momentum: f64) -> Result<ExcitationTensor> {
    if b_raw.len() != ump.physical_dim()
        || b_raw
            .iter()
            .any(|m| m.nrows() != ump.bond_dim() || m.ncols() != ump.bond_dim())
    {
        return Err(Error::InvalidInput("B must match the shape of A".into()));
    }
    let l_inv = ump
        .l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite(min_eigenvalue(&ump.l)))?;
    let project = |b: &[CMatrix]| -> Vec<CMatrix> {
        let correction = &l_inv * gauge_overlap(ump, b);
        ump.a.iter().zip(b).map(|(a, b)| b - a * &correction).collect()
    };
    // the second pass removes what rounding in l^{-1} left behind
    let b = project(&project(b_raw));
    let raw = b_raw.iter().map(frob).fold(0.0, f64::max);
    let left = b.iter().map(frob).fold(0.0, f64::max);
    if raw == 0.0 || left <= 1e-10 * raw {
        return Err(Error::DegenerateExcitation);
    }
    let norm = excitation_norm(ump, &b);
    if norm <= 0.0 {
        return Err(Error::DegenerateExcitation);
    }
    let s = Complex64::new(1.0 / norm.sqrt(), 0.0);
    Ok(ExcitationTensor {
        b: b.into_iter().map(|m| m * s).collect(),
        momentum,
    })
}

/// Half-infinite entanglement data of the excitation ansatz.
#[derive(Clone, Debug)]
pub struct ExcitationSpectrum {
    /// Descending; each `λ_i / 2` of `eig(Ξ)` twice.
    pub eigenvalues: Vec<f64>,
    pub entropy: f64,
    pub ground_entropy: f64,
}

pub fn excitation_spectrum(ump: &UniformMPS, exc: &ExcitationTensor) -> Result<ExcitationSpectrum> {
    let overlap = frob(&gauge_overlap(ump, &exc.b));
    let scale = exc.b.iter().map(frob).fold(0.0, f64::max).max(1.0);
    if overlap > GAUGE_TOL * scale {
        return Err(Error::GaugeViolation(overlap));
    }
    let ground = ground_spectrum(ump)?;
    let mut eigenvalues: Vec<f64> = ground
        .eigenvalues
        .iter()
        .flat_map(|&l| [0.5 * l, 0.5 * l])
        .collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let entropy = entropy_of(&eigenvalues);
    Ok(ExcitationSpectrum {
        eigenvalues,
        entropy,
        ground_entropy: ground.entropy,
    })
}

/// `A^s ↦ X A^s X^{-1}`, which leaves the state unchanged.
pub fn conjugate_tensor(a: &[CMatrix], x: &CMatrix) -> Result<Vec<CMatrix>> {
    let inv = x
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("gauge matrix is singular".into()))?;
    Ok(a.iter().map(|m| x * m * &inv).collect())
}

/// Basis tensor `A^s = e_s` at `D = 1` scaled to one component, a product state.
pub fn product_tensor(d: usize, s: usize) -> Vec<CMatrix> {
    (0..d)
        .map(|t| CMatrix::from_element(1, 1, if t == s { ONE } else { ZERO }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::LN_2;

    #[test]
    fn product_state_has_trivial_spectrum() {
        let ump = fixed_points(product_tensor(2, 0)).unwrap();
        assert!((ump.left()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((ump.right()[(0, 0)].re - 1.0).abs() < 1e-15);
        let g = ground_spectrum(&ump).unwrap();
        assert_eq!(g.eigenvalues, vec![1.0]);
        assert_eq!(g.entropy, 0.0);

        let b = vec![CMatrix::from_element(1, 1, ONE * 0.3), CMatrix::from_element(1, 1, ONE * -1.2)];
        let exc = gauge_fix(&ump, &b, 0.0).unwrap();
        let s = excitation_spectrum(&ump, &exc).unwrap();
        assert_eq!(s.eigenvalues, vec![0.5, 0.5]);
        assert!((s.entropy - LN_2).abs() < 1e-15);
    }

    #[test]
    fn random_fixed_points_are_accurate() {
        let mut rng = seeded_rng(11);
        for bond in [2, 4, 8] {
            let ump = random_mps(2, bond, &mut rng).unwrap();
            assert!(ump.fixed_point_residual() <= 1e-10);
            let l = ump.left();
            assert!(frob(&(l - l.adjoint())) <= 1e-12);
            assert!((trace(&(ump.left() * ump.right())).re - 1.0).abs() < 1e-12);
            let ev = transfer_eigenvalues(ump.tensor());
            assert!((ev[0].norm() - 1.0).abs() < 1e-10);
            let g = ground_spectrum(&ump).unwrap();
            assert!((trace(&g.xi).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_injective_tensor_is_rejected() {
        // block diagonal tensor: two disconnected sectors, doubly degenerate
        let mut a0 = CMatrix::zeros(2, 2);
        a0[(0, 0)] = ONE;
        a0[(1, 1)] = ONE;
        let a1 = CMatrix::zeros(2, 2);
        assert!(matches!(fixed_points(vec![a0, a1]), Err(Error::NonInjective { .. })));
    }

    #[test]
    fn gauge_fix_is_an_idempotent_projection() {
        let mut rng = seeded_rng(3);
        let ump = random_mps(2, 4, &mut rng).unwrap();
        let raw = random_tensor(2, 4, &mut rng);
        let exc = gauge_fix(&ump, &raw, 0.5).unwrap();
        assert!(frob(&gauge_overlap(&ump, &exc.b)) <= 1e-10);
        assert!((excitation_norm(&ump, &exc.b) - 1.0).abs() < 1e-12);
        let again = gauge_fix(&ump, &exc.b, 0.5).unwrap();
        for (x, y) in exc.b.iter().zip(&again.b) {
            assert!(frob(&(x - y)) <= 1e-12, "{}", frob(&(x - y)));
        }
        assert!(matches!(
            gauge_fix(&ump, ump.tensor(), 0.0),
            Err(Error::DegenerateExcitation)
        ));
    }

    #[test]
    fn unfixed_tensor_is_refused() {
        let mut rng = seeded_rng(5);
        let ump = random_mps(2, 3, &mut rng).unwrap();
        let exc = ExcitationTensor {
            b: random_tensor(2, 3, &mut rng),
            momentum: 0.0,
        };
        assert!(matches!(excitation_spectrum(&ump, &exc), Err(Error::GaugeViolation(_))));
    }

    #[test]
    fn ground_entropy_is_gauge_invariant() {
        let mut rng = seeded_rng(8);
        let ump = random_mps(2, 4, &mut rng).unwrap();
        let s0 = ground_spectrum(&ump).unwrap().entropy;
        let x = CMatrix::identity(4, 4) + CMatrix::from_fn(4, 4, |_, _| complex_gaussian(&mut rng) * 0.4);
        let other = fixed_points(conjugate_tensor(ump.tensor(), &x).unwrap()).unwrap();
        let s1 = ground_spectrum(&other).unwrap().entropy;
        assert!((s0 - s1).abs() <= 1e-8, "{s0} vs {s1}");
    }
}
