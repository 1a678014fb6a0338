//! Exact diagonalization of small spin chains.
//!
//! Serves as an independent check on the free-fermion results and as the
//! only route to nonintegrable chains. States are rotated into reflection
//! (and, where it is a symmetry, parity) eigenstates before their Schmidt
//! spectra are taken.

mod lanczos;

pub use lanczos::LanczosOptions;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::freefermion::QuasiparticleBasis;
use crate::model::{
    apply_majorana, build_spin_matrix_capped, parity_matrix, reflection_matrix, BasisPermutation,
    DiagonalOperator, SpinChainModel, SpinHamiltonianMatrix, DEFAULT_MAX_SITES,
};
use crate::{Error, Parity, Result};

/// Largest number of requested states.
pub const MAX_STATES: usize = 64;
/// Chains up to this many sites are diagonalized densely.
pub const DENSE_MAX_SITES: usize = 8;
/// Relative energy window of a degeneracy cluster.
pub const CLUSTER_TOL: f64 = 1e-9;
/// Tolerance on `|Sv ∓ v|` for a symmetry label to count as resolved.
pub const LABEL_TOL: f64 = 1e-8;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug)]
pub struct EdOptions {
    pub lanczos: LanczosOptions,
    pub dense_max_sites: usize,
    /// Largest chain [`excess_table_with`] will build a matrix for.
    pub max_sites: usize,
    /// Restrict the search to one eigenspace of `Π σ^z`.
    pub parity_sector: Option<Parity>,
}

impl Default for EdOptions {
    fn default() -> Self {
        Self {
            lanczos: LanczosOptions::default(),
            dense_max_sites: DENSE_MAX_SITES,
            max_sites: DEFAULT_MAX_SITES,
            parity_sector: None,
        }
    }
}

/// An eigenvector of a spin Hamiltonian with its symmetry labels.
#[derive(Clone, Debug)]
pub struct EigenState {
    pub vector: Vec<Complex64>,
    pub energy: f64,
    pub reflection_eig: Option<Parity>,
    pub parity_eig: Option<Parity>,
}

impl EigenState {
    pub fn n(&self) -> usize {
        self.vector.len().trailing_zeros() as usize
    }

    pub fn residual(&self, h: &SpinHamiltonianMatrix) -> f64 {
        let hv = h.matvec_complex(&self.vector);
        hv.iter()
            .zip(&self.vector)
            .map(|(a, b)| (a - b * self.energy).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Schmidt coefficients of a pure state across one cut.
#[derive(Clone, Debug)]
pub struct SchmidtData {
    /// Descending.
    pub singular_values: Vec<f64>,
    pub entropy: f64,
    /// Number of sites on the left.
    pub cut: usize,
}

fn cluster_scale(energies: impl Iterator<Item = f64>) -> f64 {
    energies.fold(1.0f64, |m, e| m.max(e.abs()))
}

/// `M` lowest eigenstates, ascending, with any degeneracy cluster that
/// straddles the `M`-th state returned whole. Labels are left unresolved;
/// see [`symmetry_rotate`].
pub fn lowest_eigenstates(h: &SpinHamiltonianMatrix, m: usize) -> Result<Vec<EigenState>> {
    lowest_eigenstates_with(h, m, &EdOptions::default())
}

pub fn lowest_eigenstates_with(
    h: &SpinHamiltonianMatrix,
    m: usize,
    opts: &EdOptions,
) -> Result<Vec<EigenState>> {
    if m == 0 || m > MAX_STATES {
        return Err(Error::InvalidInput(format!(
            "state count must be in 1..={MAX_STATES}, got {m}"
        )));
    }
    let n = h.n();
    let sector: Option<Vec<usize>> = opts.parity_sector.map(|p| {
        let diag = parity_matrix(n);
        (0..h.dim()).filter(|&i| diag.entry(i) == p.sign()).collect()
    });
    let dim = sector.as_ref().map_or(h.dim(), Vec::len);
    let norm = h.norm_bound();

    let pairs: Vec<(f64, Vec<f64>)> = if n <= opts.dense_max_sites {
        dense_lowest(h, sector.as_deref())
    } else {
        let parity = opts.parity_sector.map(|p| (parity_matrix(n), p.sign()));
        let project = |v: &mut [f64]| {
            if let Some((diag, s)) = &parity {
                v.iter_mut()
                    .zip(diag.entries())
                    .for_each(|(x, d)| if d != s { *x = 0.0 });
            }
        };
        let scale_guess = norm;
        lanczos::lowest_pairs(
            |x, out| h.matvec_into(x, out),
            h.dim(),
            dim,
            norm,
            m,
            CLUSTER_TOL * scale_guess,
            project,
            &opts.lanczos,
        )?
    };

    let scale = cluster_scale(pairs.iter().take(m).map(|p| p.0));
    let keep = cluster_end(&pairs, m, CLUSTER_TOL * scale);
    let states: Vec<EigenState> = pairs
        .into_iter()
        .take(keep)
        .map(|(energy, v)| EigenState {
            vector: v.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
            energy,
            reflection_eig: None,
            parity_eig: opts.parity_sector,
        })
        .collect();

    let bound = opts.lanczos.tol * norm;
    for s in &states {
        let r = s.residual(h);
        if r > bound.max(1e-12 * norm) {
            return Err(Error::NonConvergence {
                iterations: 0,
                residuals: vec![r],
            });
        }
    }
    Ok(states)
}

/// Index one past the cluster that contains entry `m - 1`.
fn cluster_end(pairs: &[(f64, Vec<f64>)], m: usize, tol: f64) -> usize {
    let m = m.min(pairs.len());
    if m == 0 {
        return 0;
    }
    let mut end = m;
    while end < pairs.len() && pairs[end].0 - pairs[end - 1].0 <= tol {
        end += 1;
    }
    end
}

fn dense_lowest(h: &SpinHamiltonianMatrix, sector: Option<&[usize]>) -> Vec<(f64, Vec<f64>)> {
    let full = h.to_dense();
    let (mat, index): (DMatrix<f64>, Vec<usize>) = match sector {
        Some(idx) => (
            DMatrix::from_fn(idx.len(), idx.len(), |i, j| full[(idx[i], idx[j])]),
            idx.to_vec(),
        ),
        None => (full, (0..h.dim()).collect()),
    };
    let eig = SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..index.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order
        .into_iter()
        .map(|c| {
            let mut v = vec![0.0; h.dim()];
            for (r, &i) in index.iter().enumerate() {
                v[i] = eig.eigenvectors[(r, c)];
            }
            (eig.eigenvalues[c], v)
        })
        .collect()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn distance(a: &[Complex64], b: &[Complex64], sign: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y * sign).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Rotate `vectors` by the unitary that diagonalizes `op` projected on their
/// span, `+1` eigenvalues first.
fn rotate_by(vectors: &[Vec<Complex64>], op: &dyn Fn(&[Complex64]) -> Vec<Complex64>) -> Vec<Vec<Complex64>> {
    let c = vectors.len();
    if c == 0 {
        return Vec::new();
    }
    let images: Vec<Vec<Complex64>> = vectors.iter().map(|v| op(v)).collect();
    let proj = DMatrix::from_fn(c, c, |i, j| inner(&vectors[i], &images[j]));
    let proj = (&proj + proj.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(proj);
    let mut order: Vec<usize> = (0..c).collect();
    // descending: +1 block before -1 block; ties keep solver order
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order
        .into_iter()
        .map(|col| {
            let mut out = vec![ZERO; vectors[0].len()];
            for (i, v) in vectors.iter().enumerate() {
                let coeff = eig.eigenvectors[(i, col)];
                out.iter_mut().zip(v).for_each(|(o, x)| *o += coeff * x);
            }
            fix_phase(&mut out);
            out
        })
        .collect()
}

/// Make the largest-magnitude amplitude real and positive, for reproducible
/// output.
fn fix_phase(v: &mut [Complex64]) {
    let Some(big) = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
    else {
        return;
    };
    if big.norm() == 0.0 {
        return;
    }
    let phase = big.conj() / big.norm();
    v.iter_mut().for_each(|x| *x *= phase);
}

fn label(v: &[Complex64], image: &[Complex64]) -> Option<Parity> {
    [Parity::Plus, Parity::Minus]
        .into_iter()
        .find(|p| distance(image, v, p.sign()) <= LABEL_TOL)
}

/// Rotate each degeneracy cluster into simultaneous eigenvectors of the
/// reflection `r` and, if given, the parity `p`. Labels that cannot be
/// resolved to within [`LABEL_TOL`] are left as `None`.
pub fn symmetry_rotate(
    states: Vec<EigenState>,
    r: &BasisPermutation,
    p: Option<&DiagonalOperator>,
) -> Vec<EigenState> {
    if states.is_empty() {
        return states;
    }
    let tol = CLUSTER_TOL * cluster_scale(states.iter().map(|s| s.energy));
    let mut out = Vec::with_capacity(states.len());
    let mut start = 0;
    while start < states.len() {
        let mut end = start + 1;
        while end < states.len() && states[end].energy - states[end - 1].energy <= tol {
            end += 1;
        }
        let cluster = &states[start..end];
        let vectors: Vec<Vec<Complex64>> = cluster.iter().map(|s| s.vector.clone()).collect();

        let mut rotated = Vec::with_capacity(vectors.len());
        match p {
            Some(p) => {
                let by_parity = rotate_by(&vectors, &|v| p.apply(v));
                // split on the parity label, then diagonalize R inside each block
                let mut plus = Vec::new();
                let mut minus = Vec::new();
                let mut rest = Vec::new();
                for v in by_parity {
                    match label(&v, &p.apply(&v)) {
                        Some(Parity::Plus) => plus.push(v),
                        Some(Parity::Minus) => minus.push(v),
                        None => rest.push(v),
                    }
                }
                for block in [plus, minus, rest] {
                    rotated.extend(rotate_by(&block, &|v| r.apply(v)));
                }
            }
            None => rotated = rotate_by(&vectors, &|v| r.apply(v)),
        }

        for (v, orig) in rotated.into_iter().zip(cluster) {
            let reflection_eig = label(&v, &r.apply(&v));
            let parity_eig = p.and_then(|p| label(&v, &p.apply(&v)));
            out.push(EigenState {
                vector: v,
                energy: orig.energy,
                reflection_eig,
                parity_eig,
            });
        }
        start = end;
    }
    // energies inside a cluster agree to tolerance; keep them ascending
    out
}

/// Singular values of the `2^cut x 2^(n-cut)` amplitude matrix.
pub fn schmidt_spectrum(state: &[Complex64], cut: usize) -> Result<SchmidtData> {
    let dim = state.len();
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::InvalidInput(format!("state length {dim} is not 2^n")));
    }
    let n = dim.trailing_zeros() as usize;
    if cut == 0 || cut >= n {
        return Err(Error::InvalidInput(format!("cut {cut} outside 1..{n}")));
    }
    let right = 1usize << (n - cut);
    let left = 1usize << cut;
    // site 0 is the most significant bit, so rows index the left block
    let psi = DMatrix::from_fn(left, right, |a, b| state[a * right + b]);
    let mut sv: Vec<f64> = psi.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let entropy = sv
        .iter()
        .map(|s| s * s)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    Ok(SchmidtData {
        singular_values: sv,
        entropy,
        cut,
    })
}

/// `b_k† ψ = 2^{-1/2} Σ_a V_ak w_a ψ`.
pub fn create_quasiparticle(basis: &QuasiparticleBasis, k: usize, psi: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = basis.n();
    if k >= n {
        return Err(Error::InvalidExcitation(format!("mode {k} out of range")));
    }
    if psi.len() != 1 << n {
        return Err(Error::InvalidInput(format!(
            "state length {} does not match {n} sites",
            psi.len()
        )));
    }
    let mut out = vec![ZERO; psi.len()];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for a in 0..2 * n {
        let c = basis.modes()[(a, k)] * s;
        if c == ZERO {
            continue;
        }
        let wpsi = apply_majorana(n, a, psi);
        out.iter_mut().zip(&wpsi).for_each(|(o, x)| *o += c * x);
    }
    Ok(out)
}

/// `Γ_ab = Im <ψ| w_a w_b |ψ>` for `a != b` on the first `sites` sites.
pub fn majorana_correlation(psi: &[Complex64], sites: usize) -> Result<DMatrix<f64>> {
    let n = psi.len().trailing_zeros() as usize;
    if sites == 0 || sites > n {
        return Err(Error::InvalidInput(format!("subsystem size {sites} outside 1..={n}")));
    }
    let images: Vec<Vec<Complex64>> = (0..2 * sites).map(|a| apply_majorana(n, a, psi)).collect();
    Ok(DMatrix::from_fn(2 * sites, 2 * sites, |a, b| {
        if a == b {
            0.0
        } else {
            // <ψ|w_a w_b|ψ> = <w_a ψ | w_b ψ>
            inner(&images[a], &images[b]).im
        }
    }))
}

/// One row of an ED entanglement table.
#[derive(Clone, Debug)]
pub struct ExcessRow {
    pub index: usize,
    pub energy: f64,
    pub reflection: Option<Parity>,
    pub parity: Option<Parity>,
    pub entropy: f64,
    pub excess: f64,
}

/// Labelled half-chain entropies of the `m` lowest states, relative to the
/// ground state.
pub fn excess_table(model: &SpinChainModel, m: usize) -> Result<Vec<ExcessRow>> {
    excess_table_with(model, m, &EdOptions::default())
}

pub fn excess_table_with(model: &SpinChainModel, m: usize, opts: &EdOptions) -> Result<Vec<ExcessRow>> {
    let n = model.n();
    let h = build_spin_matrix_capped(model, opts.max_sites)?;
    let states = lowest_eigenstates_with(&h, m, opts)?;
    let parity = model.conserves_parity().then(|| parity_matrix(n));
    let states = symmetry_rotate(states, &reflection_matrix(n), parity.as_ref());
    let cut = n / 2;
    let mut rows = Vec::with_capacity(states.len());
    let mut ground_entropy = 0.0;
    for (index, s) in states.iter().enumerate() {
        let entropy = schmidt_spectrum(&s.vector, cut)?.entropy;
        if index == 0 {
            ground_entropy = entropy;
        }
        rows.push(ExcessRow {
            index,
            energy: s.energy,
            reflection: s.reflection_eig,
            parity: s.parity_eig,
            entropy,
            excess: if index == 0 { 0.0 } else { entropy - ground_entropy },
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_spin_matrix;
    use crate::freefermion::{correlation_excited, correlation_ground, diagonalize, many_body_levels, ExcitationSpec};
    use crate::model::build_xy_majorana;

    #[test]
    fn two_site_tilted_ising_matches_dense() {
        let model = SpinChainModel::tilted_ising(1.0, 1.0, 1.0, 2).unwrap();
        let h = build_spin_matrix(&model).unwrap();
        let dense = SymmetricEigen::new(h.to_dense());
        let mut expected: Vec<f64> = dense.eigenvalues.iter().copied().collect();
        expected.sort_by(f64::total_cmp);
        let states = lowest_eigenstates(&h, 4).unwrap();
        for (s, e) in states.iter().zip(&expected) {
            assert!((s.energy - e).abs() < 1e-12);
        }
    }

    #[test]
    fn xy_energies_are_free_fermion_levels() {
        let model = SpinChainModel::xy(1.0, 2.0, 10).unwrap();
        let basis = diagonalize(&build_xy_majorana(&model).unwrap()).unwrap();
        let levels = many_body_levels(&basis).unwrap();
        let h = build_spin_matrix(&model).unwrap();
        let states = symmetry_rotate(
            lowest_eigenstates(&h, 8).unwrap(),
            &reflection_matrix(10),
            Some(&parity_matrix(10)),
        );
        for (s, level) in states.iter().zip(&levels) {
            assert!((s.energy - level.0).abs() < 1e-9, "{} vs {}", s.energy, level.0);
        }
        // single excitations sit in the odd sector relative to the vacuum
        assert_eq!(states[0].parity_eig, Some(basis.vacuum_parity()));
        assert_eq!(states[1].parity_eig, Some(basis.vacuum_parity().flip()));
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let model = SpinChainModel::tilted_ising(1.0, 1.0, 1.0, 10).unwrap();
        let h = build_spin_matrix(&model).unwrap();
        let dense_opts = EdOptions {
            dense_max_sites: 10,
            ..EdOptions::default()
        };
        let dense = lowest_eigenstates_with(&h, 12, &dense_opts).unwrap();
        let sparse = lowest_eigenstates(&h, 12).unwrap();
        assert!(sparse.len() >= 12);
        for (a, b) in dense.iter().zip(&sparse).take(12) {
            assert!((a.energy - b.energy).abs() < 1e-9);
            assert!(b.residual(&h) <= 1e-8 * h.norm_bound());
        }
    }

    #[test]
    fn ground_state_is_symmetric() {
        let model = SpinChainModel::tilted_ising(1.0, 1.0, 1.0, 8).unwrap();
        let h = build_spin_matrix(&model).unwrap();
        let states = symmetry_rotate(lowest_eigenstates(&h, 1).unwrap(), &reflection_matrix(8), None);
        assert_eq!(states[0].reflection_eig, Some(Parity::Plus));
        assert_eq!(states[0].parity_eig, None);
    }

    #[test]
    fn ising_ground_state_has_marshall_signs() {
        // σ^z on odd sites maps -H to a matrix with nonnegative off-diagonals
        let n = 8;
        let model = SpinChainModel::xy(1.0, 2.0, n).unwrap();
        let h = build_spin_matrix(&model).unwrap();
        let g = &lowest_eigenstates(&h, 1).unwrap()[0];
        let odd_mask: usize = (0..n).filter(|j| j % 2 == 1).map(|j| 1 << (n - 1 - j)).sum();
        let signs: Vec<f64> = g
            .vector
            .iter()
            .enumerate()
            .map(|(x, a)| if (x & odd_mask).count_ones() % 2 == 0 { a.re } else { -a.re })
            .collect();
        // the other parity sector carries exact zeros
        let support: Vec<f64> = signs.into_iter().filter(|a| a.abs() > 1e-14).collect();
        assert_eq!(support.len(), 1 << (n - 1));
        let positive = support.iter().all(|&a| a > 0.0);
        let negative = support.iter().all(|&a| a < 0.0);
        assert!(positive || negative);
    }

    #[test]
    fn degenerate_pair_splits_by_reflection() {
        // two product states mirrored into each other: R has trace 0 on their span
        let n = 4;
        let mut a = vec![ZERO; 16];
        let mut b = vec![ZERO; 16];
        a[0b1000] = Complex64::new(1.0, 0.0);
        b[0b0001] = Complex64::new(1.0, 0.0);
        let states = vec![
            EigenState { vector: a, energy: 1.0, reflection_eig: None, parity_eig: None },
            EigenState { vector: b, energy: 1.0, reflection_eig: None, parity_eig: None },
        ];
        let out = symmetry_rotate(states, &reflection_matrix(n), Some(&parity_matrix(n)));
        assert_eq!(out[0].reflection_eig, Some(Parity::Plus));
        assert_eq!(out[1].reflection_eig, Some(Parity::Minus));
        assert_eq!(out[0].parity_eig, Some(Parity::Minus));
    }

    #[test]
    fn schmidt_of_simple_states() {
        let mut product = vec![ZERO; 64];
        product[0b101100] = Complex64::new(0.0, 1.0);
        let s = schmidt_spectrum(&product, 3).unwrap();
        assert_eq!(s.entropy, 0.0);
        assert!((s.singular_values[0] - 1.0).abs() < 1e-15);
        assert!(s.singular_values[1..].iter().all(|&x| x < 1e-15));

        // one flipped spin spread evenly over the chain
        let n = 6;
        let mut w = vec![ZERO; 1 << n];
        for j in 0..n {
            w[1 << j] = Complex64::new((1.0 / n as f64).sqrt(), 0.0);
        }
        let s = schmidt_spectrum(&w, 3).unwrap();
        assert!((s.entropy - std::f64::consts::LN_2).abs() < 1e-14);
    }

    #[test]
    fn entropy_is_phase_and_reflection_invariant() {
        let model = SpinChainModel::tilted_ising(1.0, 1.0, 1.0, 8).unwrap();
        let h = build_spin_matrix(&model).unwrap();
        let states = lowest_eigenstates(&h, 3).unwrap();
        let mut mixed: Vec<Complex64> = states[1]
            .vector
            .iter()
            .zip(&states[2].vector)
            .map(|(a, b)| a * 0.6 + b * Complex64::new(0.0, 0.8))
            .collect();
        let s0 = schmidt_spectrum(&mixed, 4).unwrap().entropy;
        let phase = Complex64::from_polar(1.0, 0.37);
        mixed.iter_mut().for_each(|x| *x *= phase);
        assert!((schmidt_spectrum(&mixed, 4).unwrap().entropy - s0).abs() < 1e-12);
        let reflected = reflection_matrix(8).apply(&mixed);
        assert!((schmidt_spectrum(&reflected, 4).unwrap().entropy - s0).abs() < 1e-12);
    }

    #[test]
    fn correlations_match_free_fermions() {
        let n = 8;
        let model = SpinChainModel::xy(1.0, 2.0, n).unwrap();
        let basis = diagonalize(&build_xy_majorana(&model).unwrap()).unwrap();
        let h = build_spin_matrix(&model).unwrap();
        let ground = &lowest_eigenstates(&h, 1).unwrap()[0].vector;
        let ed = majorana_correlation(ground, 4).unwrap();
        let ff = correlation_ground(&basis, 4).unwrap();
        assert!((&ed - ff.matrix()).amax() < 1e-9);

        for k in [0, 3] {
            let excited = create_quasiparticle(&basis, k, ground).unwrap();
            let ed = majorana_correlation(&excited, 4).unwrap();
            let ff = correlation_excited(&basis, &ExcitationSpec::single(k), 4).unwrap();
            assert!((&ed - ff.matrix()).amax() < 1e-9, "mode {k}");
        }
    }

    #[test]
    fn ground_row_has_zero_excess() {
        let model = SpinChainModel::tilted_ising(1.0, 1.0, 1.0, 6).unwrap();
        let rows = excess_table(&model, 5).unwrap();
        assert_eq!(rows[0].excess, 0.0);
        assert!(rows.len() >= 5);
    }
}
