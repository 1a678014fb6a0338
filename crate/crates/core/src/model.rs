//! Spin-chain Hamiltonians, their Jordan-Wigner Majorana forms and explicit
//! spin-basis matrices.
//!
//! Basis convention for every explicit vector in this crate: a basis index is
//! a bit string of length `n` with site 0 in the most significant position,
//! bit value 0 meaning σ^z = +1.
//!
//! Majorana convention: for site `j` (0-based) the operators
//! `w[2j] = (Π_{l<j} σ^z_l) σ^x_j` and `w[2j+1] = (Π_{l<j} σ^z_l) σ^y_j`.
//! A quadratic Hamiltonian is stored as a real antisymmetric `A` with
//! `Ĥ = Σ_ab w_a (iA)_ab w_b`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default cap on the number of sites for explicit spin matrices.
pub const DEFAULT_MAX_SITES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Open,
    Periodic,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    /// `Σ (1+γ)/2 σ^x σ^x + (1-γ)/2 σ^y σ^y + h Σ σ^z`.
    Xy { gamma: f64, h: f64 },
    /// `Σ J σ^x σ^x + hz Σ σ^z + hx Σ σ^x`.
    TiltedIsing { coupling: f64, hz: f64, hx: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinChainModel {
    kind: ModelKind,
    n: usize,
    boundary: Boundary,
}

impl SpinChainModel {
    pub fn new(kind: ModelKind, n: usize, boundary: Boundary) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidModel(format!("need at least 2 sites, got {n}")));
        }
        let finite = match kind {
            ModelKind::Xy { gamma, h } => gamma.is_finite() && h.is_finite(),
            ModelKind::TiltedIsing { coupling, hz, hx } => {
                coupling.is_finite() && hz.is_finite() && hx.is_finite()
            }
        };
        if !finite {
            return Err(Error::InvalidModel("non-finite coupling".into()));
        }
        Ok(Self { kind, n, boundary })
    }

    /// Open XY chain.
    pub fn xy(gamma: f64, h: f64, n: usize) -> Result<Self> {
        Self::new(ModelKind::Xy { gamma, h }, n, Boundary::Open)
    }

    /// Open tilted Ising chain.
    pub fn tilted_ising(coupling: f64, hz: f64, hx: f64, n: usize) -> Result<Self> {
        Self::new(ModelKind::TiltedIsing { coupling, hz, hx }, n, Boundary::Open)
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Whether `Π σ^z` is a symmetry of the chain.
    pub fn conserves_parity(&self) -> bool {
        match self.kind {
            ModelKind::Xy { .. } => true,
            ModelKind::TiltedIsing { hx, .. } => hx == 0.0,
        }
    }

    /// Compact label used in output files; contains no commas.
    pub fn descriptor(&self) -> String {
        match self.kind {
            ModelKind::Xy { gamma, h } => format!("xy:gamma={gamma}:h={h}"),
            ModelKind::TiltedIsing { coupling, hz, hx } => {
                format!("tilted_ising:J={coupling}:hz={hz}:hx={hx}")
            }
        }
    }

    fn bonds(&self) -> Vec<(usize, usize)> {
        let mut bonds: Vec<_> = (0..self.n - 1).map(|j| (j, j + 1)).collect();
        if self.boundary == Boundary::Periodic && self.n > 2 {
            bonds.push((self.n - 1, 0));
        }
        bonds
    }
}

/// Quadratic Majorana Hamiltonian `Ĥ = Σ_ab w_a (iA)_ab w_b`.
#[derive(Clone, Debug)]
pub struct MajoranaQuadraticForm {
    a: DMatrix<f64>,
    n: usize,
}

impl MajoranaQuadraticForm {
    /// Validates antisymmetry and stores the exactly antisymmetrized matrix.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let dim = a.nrows();
        if dim != a.ncols() || dim == 0 || dim % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "coupling matrix must be 2n x 2n, got {} x {}",
                a.nrows(),
                a.ncols()
            )));
        }
        let scale = a.amax().max(1.0);
        let asym = (&a + a.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::NotAntisymmetric(asym));
        }
        let a = (&a - a.transpose()) * 0.5;
        Ok(Self { a, n: dim / 2 })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The `n x n` block `M[j][k] = A[2j][2k+1]` when `A` only couples
    /// x-type to y-type Majoranas, which holds for every XY chain.
    pub fn chiral_block(&self) -> Option<DMatrix<f64>> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                if self.a[(2 * i, 2 * j)] != 0.0 || self.a[(2 * i + 1, 2 * j + 1)] != 0.0 {
                    return None;
                }
            }
        }
        Some(DMatrix::from_fn(n, n, |j, k| self.a[(2 * j, 2 * k + 1)]))
    }
}

/// Jordan-Wigner form of an open XY chain.
pub fn build_xy_majorana(model: &SpinChainModel) -> Result<MajoranaQuadraticForm> {
    let (gamma, h) = match model.kind {
        ModelKind::Xy { gamma, h } => (gamma, h),
        ModelKind::TiltedIsing { .. } => {
            return Err(Error::NotQuadratic(
                "the longitudinal field of the tilted Ising chain has no quadratic form".into(),
            ))
        }
    };
    if model.boundary != Boundary::Open {
        return Err(Error::InvalidModel(
            "the fermionic route supports open chains only".into(),
        ));
    }
    let n = model.n;
    let jx = 0.5 * (1.0 + gamma);
    let jy = 0.5 * (1.0 - gamma);
    let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
    // c * (-i) w_a w_b  ->  A_ab = -c/2 ;  c * (+i) w_a w_b  ->  A_ab = +c/2
    let mut couple = |p: usize, q: usize, value: f64| {
        a[(p, q)] += value;
        a[(q, p)] -= value;
    };
    for j in 0..n {
        // σ^z_j = -i w_2j w_2j+1
        couple(2 * j, 2 * j + 1, -0.5 * h);
    }
    for j in 0..n - 1 {
        // σ^x_j σ^x_j+1 = -i w_2j+1 w_2j+2
        couple(2 * j + 1, 2 * j + 2, -0.5 * jx);
        // σ^y_j σ^y_j+1 = +i w_2j w_2j+3
        couple(2 * j, 2 * j + 3, 0.5 * jy);
    }
    MajoranaQuadraticForm::new(a)
}

/// Real symmetric spin-basis Hamiltonian in compressed-row storage.
#[derive(Clone, Debug)]
pub struct SpinHamiltonianMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SpinHamiltonianMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// `out = H x`.
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        let row = |i: usize| -> f64 {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.cols[k]];
            }
            acc
        };
        if self.dim() >= 1 << 12 {
            out.par_iter_mut().enumerate().for_each(|(i, o)| *o = row(i));
        } else {
            out.iter_mut().enumerate().for_each(|(i, o)| *o = row(i));
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn matvec_complex(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim())
            .map(|i| self.row(i).map(|(j, v)| x[j] * v).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Upper bound on the spectral norm (max absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max |H_ij - H_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `max |[H, R]_ij|` for a basis permutation `R`.
    pub fn commutator_with_permutation(&self, perm: &BasisPermutation) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                let mapped = self.get(perm.image(i), perm.image(j));
                worst = worst.max((v - mapped).abs());
            }
            // entries present only in the permuted row
            for (j, v) in self.row(perm.image(i)) {
                let back = self.get(i, perm.image(j));
                worst = worst.max((v - back).abs());
            }
        }
        worst
    }

    /// `max |[H, D]_ij|` for a diagonal operator `D`.
    pub fn commutator_with_diagonal(&self, diag: &DiagonalOperator) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                worst = worst.max((v * (diag.entry(j) - diag.entry(i))).abs());
            }
        }
        worst
    }
}

#[inline]
fn site_bit(n: usize, site: usize) -> usize {
    1 << (n - 1 - site)
}

fn check_cap(n: usize, max_sites: usize) -> Result<()> {
    if n > max_sites || n >= usize::BITS as usize - 1 {
        return Err(Error::SizeCap {
            sites: n,
            cap: max_sites,
        });
    }
    Ok(())
}

/// Explicit spin-basis matrix with the default site cap.
pub fn build_spin_matrix(model: &SpinChainModel) -> Result<SpinHamiltonianMatrix> {
    build_spin_matrix_capped(model, DEFAULT_MAX_SITES)
}

pub fn build_spin_matrix_capped(
    model: &SpinChainModel,
    max_sites: usize,
) -> Result<SpinHamiltonianMatrix> {
    let n = model.n;
    check_cap(n, max_sites)?;
    let dim = 1usize << n;
    let bonds = model.bonds();

    let rows: Vec<Vec<(usize, f64)>> = (0..dim)
        .into_par_iter()
        .map(|x| {
            let mut entries: Vec<(usize, f64)> = Vec::with_capacity(bonds.len() + n + 1);
            let spin = |site: usize| if x & site_bit(n, site) == 0 { 1.0 } else { -1.0 };
            let mut diagonal = 0.0;
            match model.kind {
                ModelKind::Xy { gamma, h } => {
                    let jx = 0.5 * (1.0 + gamma);
                    let jy = 0.5 * (1.0 - gamma);
                    for site in 0..n {
                        diagonal += h * spin(site);
                    }
                    for &(j, k) in &bonds {
                        let y = x ^ site_bit(n, j) ^ site_bit(n, k);
                        // σ^y σ^y picks up -1 on aligned pairs, +1 on anti-aligned
                        let yy = -spin(j) * spin(k);
                        entries.push((y, jx + jy * yy));
                    }
                }
                ModelKind::TiltedIsing { coupling, hz, hx } => {
                    for site in 0..n {
                        diagonal += hz * spin(site);
                        entries.push((x ^ site_bit(n, site), hx));
                    }
                    for &(j, k) in &bonds {
                        entries.push((x ^ site_bit(n, j) ^ site_bit(n, k), coupling));
                    }
                }
            }
            entries.push((x, diagonal));
            entries.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
            for (c, v) in entries {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            merged.retain(|&(_, v)| v != 0.0);
            merged
        })
        .collect();

    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for row in rows {
        for (c, v) in row {
            cols.push(c);
            values.push(v);
        }
        row_ptr.push(cols.len());
    }
    Ok(SpinHamiltonianMatrix {
        n,
        row_ptr,
        cols,
        values,
    })
}

/// A permutation of basis states, used for the site reflection.
#[derive(Clone, Debug)]
pub struct BasisPermutation {
    images: Vec<usize>,
}

impl BasisPermutation {
    pub fn image(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn dim(&self) -> usize {
        self.images.len()
    }

    /// `(R v)[R(i)] = v[i]`.
    pub fn apply<T: Copy + Default>(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); v.len()];
        for (i, &x) in v.iter().enumerate() {
            out[self.images[i]] = x;
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (i, &j) in self.images.iter().enumerate() {
            m[(j, i)] = 1.0;
        }
        m
    }
}

/// Diagonal operator in the product basis, used for `P = Π σ^z`.
#[derive(Clone, Debug)]
pub struct DiagonalOperator {
    entries: Vec<f64>,
}

impl DiagonalOperator {
    pub fn entry(&self, i: usize) -> f64 {
        self.entries[i]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        v.iter().zip(&self.entries).map(|(x, d)| x * *d).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.entries))
    }
}

/// Site reflection `j -> n-1-j` acting on basis states.
pub fn reflection_matrix(n: usize) -> BasisPermutation {
    assert!(n >= 1 && n < usize::BITS as usize - 1, "site count out of range");
    let images = (0..1usize << n)
        .map(|x| x.reverse_bits() >> (usize::BITS as usize - n))
        .collect();
    BasisPermutation { images }
}

/// Fermion parity `Π σ^z`.
pub fn parity_matrix(n: usize) -> DiagonalOperator {
    assert!(n >= 1 && n < usize::BITS as usize - 1, "site count out of range");
    let entries = (0..1usize << n)
        .map(|x: usize| if x.count_ones() % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    DiagonalOperator { entries }
}

/// Apply the Jordan-Wigner Majorana operator `w[index]` to a state vector.
pub fn apply_majorana(n: usize, index: usize, psi: &[Complex64]) -> Vec<Complex64> {
    assert!(index < 2 * n, "Majorana index {index} out of range for {n} sites");
    assert_eq!(psi.len(), 1 << n);
    let site = index / 2;
    let is_y = index % 2 == 1;
    let flip = site_bit(n, site);
    let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
    for (x, &amp) in psi.iter().enumerate() {
        if amp == Complex64::new(0.0, 0.0) {
            continue;
        }
        let string = if site == 0 { 0 } else { (x >> (n - site)).count_ones() };
        let mut factor = if string % 2 == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(-1.0, 0.0)
        };
        if is_y {
            // σ^y|0> = i|1>, σ^y|1> = -i|0>
            factor *= if x & flip == 0 {
                Complex64::new(0.0, 1.0)
            } else {
                Complex64::new(0.0, -1.0)
            };
        }
        out[x ^ flip] += factor * amp;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        a.kronecker(b)
    }

    #[test]
    fn tilted_ising_two_sites_by_hand() {
        let model = SpinChainModel::tilted_ising(1.0, 1.0, 1.0, 2).unwrap();
        let h = build_spin_matrix(&model).unwrap().to_dense();
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let id = DMatrix::<f64>::identity(2, 2);
        let expected = kron(&x, &x) + kron(&z, &id) + kron(&id, &z) + kron(&x, &id) + kron(&id, &x);
        assert_eq!(h, expected);
    }

    #[test]
    fn xy_two_sites_by_hand() {
        let (gamma, hf) = (0.3, 0.7);
        let model = SpinChainModel::xy(gamma, hf, 2).unwrap();
        let h = build_spin_matrix(&model).unwrap().to_dense();
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        // σ^y ⊗ σ^y is real: [[0,0,0,-1],[0,0,1,0],[0,1,0,0],[-1,0,0,0]]
        let yy = DMatrix::from_row_slice(
            4,
            4,
            &[0., 0., 0., -1., 0., 0., 1., 0., 0., 1., 0., 0., -1., 0., 0., 0.],
        );
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let id = DMatrix::<f64>::identity(2, 2);
        let expected = kron(&x, &x) * (0.5 * (1.0 + gamma))
            + yy * (0.5 * (1.0 - gamma))
            + (kron(&z, &id) + kron(&id, &z)) * hf;
        assert!((h - expected).amax() < 1e-15);
    }

    #[test]
    fn reflection_and_parity_basics() {
        let r1 = reflection_matrix(1);
        assert_eq!(r1.image(0), 0);
        assert_eq!(r1.image(1), 1);
        let r2 = reflection_matrix(2);
        assert_eq!(r2.image(0b01), 0b10);
        assert_eq!(r2.image(0b10), 0b01);
        assert_eq!(r2.image(0b11), 0b11);
        for n in 1..=6 {
            let r = reflection_matrix(n).to_dense();
            let p = parity_matrix(n).to_dense();
            let id = DMatrix::<f64>::identity(1 << n, 1 << n);
            assert_eq!(&r * &r, id);
            assert_eq!(&p * &p, id);
            assert_eq!(r.transpose(), r);
            assert_eq!(p.transpose(), p);
        }
    }

    #[test]
    fn symmetries_commute_with_hamiltonians() {
        let ti = SpinChainModel::tilted_ising(1.0, 1.0, 1.0, 10).unwrap();
        let h = build_spin_matrix(&ti).unwrap();
        assert!(h.commutator_with_permutation(&reflection_matrix(10)) <= 1e-12);
        assert!(h.commutator_with_diagonal(&parity_matrix(10)) > 0.5);

        for boundary in [Boundary::Open, Boundary::Periodic] {
            let xy = SpinChainModel::xy(0.5, 0.9, 8).unwrap().with_boundary(boundary);
            let h = build_spin_matrix(&xy).unwrap();
            assert!(h.commutator_with_permutation(&reflection_matrix(8)) <= 1e-12);
            assert!(h.commutator_with_diagonal(&parity_matrix(8)) <= 1e-12);
            assert!(h.max_asymmetry() <= 1e-14);
        }
    }

    #[test]
    fn size_cap_is_enforced() {
        let model = SpinChainModel::tilted_ising(1.0, 1.0, 1.0, 17).unwrap();
        assert!(matches!(
            build_spin_matrix(&model),
            Err(Error::SizeCap { sites: 17, cap: 16 })
        ));
        let small = SpinChainModel::xy(1.0, 1.0, 6).unwrap();
        assert!(build_spin_matrix_capped(&small, 5).unwrap_err().is_size_cap());
    }

    #[test]
    fn majorana_form_rejects_non_quadratic_and_periodic() {
        let ti = SpinChainModel::tilted_ising(1.0, 1.0, 1.0, 4).unwrap();
        assert!(matches!(build_xy_majorana(&ti), Err(Error::NotQuadratic(_))));
        let periodic = SpinChainModel::xy(1.0, 2.0, 4)
            .unwrap()
            .with_boundary(Boundary::Periodic);
        assert!(build_xy_majorana(&periodic).is_err());
        assert!(SpinChainModel::xy(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn majorana_form_is_exactly_antisymmetric_and_chiral() {
        let form = build_xy_majorana(&SpinChainModel::xy(0.37, 1.3, 7).unwrap()).unwrap();
        let a = form.matrix();
        assert_eq!((a + a.transpose()).amax(), 0.0);
        assert!(form.chiral_block().is_some());

        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(matches!(
            MajoranaQuadraticForm::new(bad),
            Err(Error::NotAntisymmetric(_))
        ));
    }

    #[test]
    fn majorana_operators_satisfy_clifford_algebra() {
        let n = 3;
        let dim = 1 << n;
        let basis: Vec<Vec<Complex64>> = (0..dim)
            .map(|i| {
                let mut v = vec![Complex64::new(0.0, 0.0); dim];
                v[i] = Complex64::new(1.0, 0.0);
                v
            })
            .collect();
        for a in 0..2 * n {
            for b in 0..2 * n {
                for e in &basis {
                    let ab = apply_majorana(n, a, &apply_majorana(n, b, e));
                    let ba = apply_majorana(n, b, &apply_majorana(n, a, e));
                    let expected = if a == b { 2.0 } else { 0.0 };
                    for (x, (p, q)) in ab.iter().zip(&ba).enumerate() {
                        let target = if e[x].re == 1.0 { expected } else { 0.0 };
                        assert!((p + q - target).norm() < 1e-14);
                    }
                }
            }
        }
    }

    /// The quadratic form, re-expanded through the Jordan-Wigner operators,
    /// reproduces the spin matrix entry by entry.
    #[test]
    fn majorana_form_matches_spin_matrix() {
        let n = 4;
        let model = SpinChainModel::xy(0.6, 0.8, n).unwrap();
        let form = build_xy_majorana(&model).unwrap();
        let spin = build_spin_matrix(&model).unwrap().to_dense();
        let dim = 1 << n;
        for col in 0..dim {
            let mut e = vec![Complex64::new(0.0, 0.0); dim];
            e[col] = Complex64::new(1.0, 0.0);
            let mut acc = vec![Complex64::new(0.0, 0.0); dim];
            for a in 0..2 * n {
                for b in 0..2 * n {
                    let coeff = Complex64::new(0.0, form.matrix()[(a, b)]);
                    if coeff.norm() == 0.0 {
                        continue;
                    }
                    let v = apply_majorana(n, a, &apply_majorana(n, b, &e));
                    for (t, s) in acc.iter_mut().zip(v) {
                        *t += coeff * s;
                    }
                }
            }
            for row in 0..dim {
                assert!((acc[row] - Complex64::new(spin[(row, col)], 0.0)).norm() < 1e-13);
            }
        }
    }
}
