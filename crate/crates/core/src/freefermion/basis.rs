use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::model::MajoranaQuadraticForm;
use crate::{Parity, Result};

/// Relative energy below which a mode is flagged as a zero mode.
pub const ZERO_MODE_TOL: f64 = 1e-8;
/// Relative energy window inside which modes are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Quasiparticle modes `b_k = 2^{-1/2} Σ_a conj(V_ak) w_a` of a quadratic
/// Majorana Hamiltonian, so that `Ĥ = E_0 + Σ_k ε_k b_k† b_k`.
#[derive(Clone, Debug)]
pub struct QuasiparticleBasis {
    modes: DMatrix<Complex64>,
    energies: Vec<f64>,
    mode_reflection: Vec<f64>,
    reflection: Vec<Option<Parity>>,
    momentum: Vec<f64>,
    vacuum_parity: Parity,
    zero_modes: Vec<usize>,
    chiral: Option<ChiralModes>,
}

/// Real mode data for forms that only couple x-type to y-type Majoranas:
/// `V[2j][k] = U[j][k]/√2`, `V[2j+1][k] = -i W[j][k]/√2`.
#[derive(Clone, Debug)]
pub(crate) struct ChiralModes {
    pub(crate) u: DMatrix<f64>,
    pub(crate) w: DMatrix<f64>,
}

impl QuasiparticleBasis {
    pub fn n(&self) -> usize {
        self.energies.len()
    }

    /// The `2n x n` isometry `V`, one column per mode.
    pub fn modes(&self) -> &DMatrix<Complex64> {
        &self.modes
    }

    /// Single-particle energies, ascending.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// `E_0 = -1/2 Σ ε_k`.
    pub fn vacuum_energy(&self) -> f64 {
        -0.5 * self.energies.iter().sum::<f64>()
    }

    /// Reflection eigenvalue of `b_k†|Ω>` relative to `|Ω>`; `None` when the
    /// mode is not a reflection eigenvector.
    pub fn reflection(&self) -> &[Option<Parity>] {
        &self.reflection
    }

    /// Approximate quasimomentum `π (k+1)/(n+1)` of each mode.
    pub fn momentum(&self) -> &[f64] {
        &self.momentum
    }

    /// Eigenvalue of `Π σ^z` on the quasiparticle vacuum.
    pub fn vacuum_parity(&self) -> Parity {
        self.vacuum_parity
    }

    /// Modes whose energy is below [`ZERO_MODE_TOL`] relative to the band top.
    pub fn zero_modes(&self) -> &[usize] {
        &self.zero_modes
    }

    pub(crate) fn chiral(&self) -> Option<&ChiralModes> {
        self.chiral.as_ref()
    }

    /// `max |V^H V - I|`.
    pub fn isometry_defect(&self) -> f64 {
        let n = self.n();
        (self.modes.adjoint() * &self.modes - DMatrix::<Complex64>::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `max |V^T V|`.
    pub fn pairing_defect(&self) -> f64 {
        (self.modes.transpose() * &self.modes)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `(V diag(ε) V^H - V* diag(ε) V^T) / 4`, which equals `iA`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let eps = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.n(),
            self.energies.iter().map(|&e| Complex64::new(0.25 * e, 0.0)),
        ));
        let v = &self.modes;
        let vc = v.map(|z| z.conj());
        v * &eps * v.adjoint() - &vc * eps * v.transpose()
    }

    /// Reflection eigenvalue of `Π_{k∈K} b_k† |Ω>` relative to `|Ω>`.
    pub fn state_reflection(&self, occupied: &[usize]) -> Option<Parity> {
        let k = occupied.len();
        let mut sign = if (k * (k + 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        for &m in occupied {
            let t = self.mode_reflection[m];
            if (t.abs() - 1.0).abs() > 1e-6 {
                return None;
            }
            sign *= t.signum() * self.vacuum_parity.sign();
        }
        Some(Parity::from_sign(sign))
    }

    /// Eigenvalue of `Π σ^z` on `Π_{k∈K} b_k† |Ω>`.
    pub fn state_parity(&self, occupied: &[usize]) -> Parity {
        if occupied.len() % 2 == 0 {
            self.vacuum_parity
        } else {
            self.vacuum_parity.flip()
        }
    }
}

/// Image of a Majorana coefficient vector under the site reflection:
/// `R b_v† R = P b_{Tv}†`.
pub fn reflect_mode_vector(v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len() / 2;
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for m in 0..n {
        let src = n - 1 - m;
        out[2 * m] = -I * v[2 * src + 1];
        out[2 * m + 1] = I * v[2 * src];
    }
    out
}

/// Diagonalize `iA` into quasiparticle modes.
pub fn diagonalize(form: &MajoranaQuadraticForm) -> Result<QuasiparticleBasis> {
    match form.chiral_block() {
        Some(block) => Ok(diagonalize_chiral(&block)),
        None => Ok(diagonalize_general(form.matrix())),
    }
}

fn energy_clusters(energies: &[f64]) -> Vec<std::ops::Range<usize>> {
    let top = energies.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut clusters = Vec::new();
    let mut start = 0;
    for k in 1..=energies.len() {
        if k == energies.len() || energies[k] - energies[k - 1] >= DEGENERACY_TOL * top {
            clusters.push(start..k);
            start = k;
        }
    }
    clusters
}

fn finish(
    modes: DMatrix<Complex64>,
    energies: Vec<f64>,
    mode_reflection: Vec<f64>,
    vacuum_parity: Parity,
    chiral: Option<ChiralModes>,
) -> QuasiparticleBasis {
    let n = energies.len();
    let top = energies.iter().copied().fold(0.0, f64::max);
    let zero_modes = (0..n)
        .filter(|&k| energies[k] <= ZERO_MODE_TOL * top.max(1e-300))
        .collect();
    let reflection = mode_reflection
        .iter()
        .map(|&t| {
            if (t.abs() - 1.0).abs() <= 1e-6 {
                // R b† |Ω> = t P b† |Ω> = -t p_Ω b† |Ω>
                Some(Parity::from_sign(-t).times(vacuum_parity))
            } else {
                None
            }
        })
        .collect();
    let momentum = (0..n)
        .map(|k| std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64)
        .collect();
    QuasiparticleBasis {
        modes,
        energies,
        mode_reflection,
        reflection,
        momentum,
        vacuum_parity,
        zero_modes,
        chiral,
    }
}

fn diagonalize_chiral(block: &DMatrix<f64>) -> QuasiparticleBasis {
    let n = block.nrows();
    // M = U S W^T; the mode (U_k, -i W_k)/√2 has iA-eigenvalue s_k.
    let svd = block.clone().svd(true, true);
    let (u_raw, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let w_raw = vt.transpose();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let mut u = DMatrix::from_fn(n, n, |i, k| u_raw[(i, order[k])]);
    let mut w = DMatrix::from_fn(n, n, |i, k| w_raw[(i, order[k])]);
    let energies: Vec<f64> = order.iter().map(|&k| 4.0 * svd.singular_values[k]).collect();

    // v_a^H T v_b = -(U_a·JW_b + W_a·JU_b)/2, real symmetric.
    let reflect_cols = |m: &DMatrix<f64>| DMatrix::from_fn(n, m.ncols(), |i, k| m[(n - 1 - i, k)]);
    for cluster in energy_clusters(&energies) {
        if cluster.len() < 2 {
            continue;
        }
        let uc = u.columns(cluster.start, cluster.len()).into_owned();
        let wc = w.columns(cluster.start, cluster.len()).into_owned();
        let t = (uc.transpose() * reflect_cols(&wc) + wc.transpose() * reflect_cols(&uc)) * -0.5;
        let t = (&t + t.transpose()) * 0.5;
        let eig = SymmetricEigen::new(t);
        let mut idx: Vec<usize> = (0..cluster.len()).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let q = DMatrix::from_fn(cluster.len(), cluster.len(), |i, k| eig.eigenvectors[(i, idx[k])]);
        u.columns_mut(cluster.start, cluster.len()).copy_from(&(&uc * &q));
        w.columns_mut(cluster.start, cluster.len()).copy_from(&(&wc * &q));
    }

    let jw = reflect_cols(&w);
    let ju = reflect_cols(&u);
    let mode_reflection = (0..n)
        .map(|k| -0.5 * (u.column(k).dot(&jw.column(k)) + w.column(k).dot(&ju.column(k))))
        .collect();

    // <P> = Pf(Γ) = det(U W^T) on the full chain.
    let det = u.clone().determinant() * w.clone().determinant();
    let vacuum_parity = Parity::from_sign(det);

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let modes = DMatrix::from_fn(2 * n, n, |a, k| {
        let j = a / 2;
        if a % 2 == 0 {
            Complex64::new(u[(j, k)] * s, 0.0)
        } else {
            Complex64::new(0.0, -w[(j, k)] * s)
        }
    });
    finish(
        modes,
        energies,
        mode_reflection,
        vacuum_parity,
        Some(ChiralModes { u, w }),
    )
}

fn diagonalize_general(a: &DMatrix<f64>) -> QuasiparticleBasis {
    let dim = a.nrows();
    let n = dim / 2;
    let h = a.map(|x| Complex64::new(0.0, x));
    let eig = SymmetricEigen::new(h);
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let tol = 1e-10 * scale.max(1.0);

    let mut positive: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > tol).collect();
    positive.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));

    // Real kernel basis of A, paired into isotropic complex vectors.
    let ata = a.transpose() * a;
    let kernel_eig = SymmetricEigen::new(ata);
    let mut kernel: Vec<usize> = (0..dim)
        .filter(|&i| kernel_eig.eigenvalues[i] <= tol * tol)
        .collect();
    kernel.sort_by(|&x, &y| kernel_eig.eigenvalues[x].total_cmp(&kernel_eig.eigenvalues[y]));
    // the ± spectrum must account for every direction exactly once
    let zero_pairs = n - positive.len().min(n);
    kernel.truncate(2 * zero_pairs);
    debug_assert_eq!(kernel.len(), 2 * zero_pairs, "odd-dimensional kernel");

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut columns: Vec<nalgebra::DVector<Complex64>> = Vec::with_capacity(n);
    let mut energies = Vec::with_capacity(n);
    for pair in kernel.chunks(2) {
        let e1 = kernel_eig.eigenvectors.column(pair[0]);
        let e2 = kernel_eig.eigenvectors.column(pair[1]);
        columns.push(nalgebra::DVector::from_fn(dim, |i, _| {
            Complex64::new(e1[i] * s, e2[i] * s)
        }));
        energies.push(0.0);
    }
    for &i in positive.iter().rev().take(n - zero_pairs).rev() {
        columns.push(eig.eigenvectors.column(i).into_owned());
        energies.push(4.0 * eig.eigenvalues[i]);
    }
    let mut modes = DMatrix::from_columns(&columns);

    for cluster in energy_clusters(&energies) {
        if cluster.len() < 2 {
            continue;
        }
        let vc = modes.columns(cluster.start, cluster.len()).into_owned();
        let tv = DMatrix::from_columns(
            &(0..cluster.len())
                .map(|k| {
                    let col: Vec<Complex64> = vc.column(k).iter().copied().collect();
                    nalgebra::DVector::from_vec(reflect_mode_vector(&col))
                })
                .collect::<Vec<_>>(),
        );
        let t = vc.adjoint() * tv;
        let t = (&t + t.adjoint()) * Complex64::new(0.5, 0.0);
        let teig = SymmetricEigen::new(t);
        let mut idx: Vec<usize> = (0..cluster.len()).collect();
        idx.sort_by(|&x, &y| teig.eigenvalues[y].total_cmp(&teig.eigenvalues[x]));
        let q = DMatrix::from_fn(cluster.len(), cluster.len(), |i, k| teig.eigenvectors[(i, idx[k])]);
        modes
            .columns_mut(cluster.start, cluster.len())
            .copy_from(&(vc * q));
    }

    let mode_reflection = (0..n)
        .map(|k| {
            let col: Vec<Complex64> = modes.column(k).iter().copied().collect();
            let tv = reflect_mode_vector(&col);
            col.iter().zip(&tv).map(|(x, y)| x.conj() * y).sum::<Complex64>().re
        })
        .collect();

    let full_gamma = (&modes * modes.adjoint()).map(|z| 2.0 * z.im);
    let full_gamma = (&full_gamma - full_gamma.transpose()) * 0.5;
    let vacuum_parity = Parity::from_sign(pfaffian(full_gamma));

    finish(modes, energies, mode_reflection, vacuum_parity, None)
}

/// Pfaffian of a real antisymmetric matrix by Parlett-Reid elimination
/// with pivoting.
pub fn pfaffian(mut a: DMatrix<f64>) -> f64 {
    let dim = a.nrows();
    assert_eq!(dim, a.ncols());
    if dim % 2 == 1 {
        return 0.0;
    }
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < dim {
        let mut pivot = k + 1;
        for i in k + 2..dim {
            if a[(i, k)].abs() > a[(pivot, k)].abs() {
                pivot = i;
            }
        }
        if pivot != k + 1 {
            a.swap_rows(k + 1, pivot);
            a.swap_columns(k + 1, pivot);
            pf = -pf;
        }
        if a[(k + 1, k)] == 0.0 {
            return 0.0;
        }
        pf *= a[(k, k + 1)];
        if k + 2 < dim {
            let head = a[(k, k + 1)];
            let tau: Vec<f64> = (k + 2..dim).map(|j| a[(k, j)] / head).collect();
            let col: Vec<f64> = (k + 2..dim).map(|i| a[(i, k + 1)]).collect();
            for (ii, i) in (k + 2..dim).enumerate() {
                for (jj, j) in (k + 2..dim).enumerate() {
                    a[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    pf
}
