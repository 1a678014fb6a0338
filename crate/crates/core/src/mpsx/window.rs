//! Finite windows of uniform MPS, used only as oracles.

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use super::{CMatrix, ExcitationTensor, UniformMPS};
use crate::{Error, Result};

/// Cap on `d^W` for explicit amplitudes.
pub const MAX_WINDOW_STATES: usize = 1 << 20;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn cholesky_factor(m: &CMatrix) -> Result<CMatrix> {
    nalgebra::Cholesky::new(m.clone())
        .map(|c| c.l())
        .ok_or_else(|| Error::NotPositiveDefinite(f64::NAN))
}

/// Explicit amplitudes of `Σ_m e^{iκm} L^H A…B_m…A R` over a window of `w`
/// sites (`l = L L^H`, `r = R R^H`), or of `L^H A…A R` when `exc` is `None`.
///
/// Index order is `(left bond, s_1, …, s_w, right bond)` with the last index
/// fastest. The closures make the window's half-chain spectra those of the
/// infinite chain.
pub fn finite_window_state(ump: &UniformMPS, exc: Option<&ExcitationTensor>, w: usize) -> Result<Vec<Complex64>> {
    let d = ump.physical_dim();
    let bond = ump.bond_dim();
    let states = (d as u128).checked_pow(w as u32).filter(|&x| x <= MAX_WINDOW_STATES as u128);
    let Some(states) = states else {
        return Err(Error::SizeCap {
            sites: w,
            cap: (MAX_WINDOW_STATES as f64).log(d as f64).floor() as usize,
        });
    };
    let states = states as usize;
    if w == 0 {
        return Err(Error::InvalidInput("window must have at least one site".into()));
    }
    let left = cholesky_factor(ump.left())?.adjoint();
    let right = cholesky_factor(ump.right())?;

    // amplitudes for each configuration, as a D x D matrix before closing
    let a = ump.tensor();
    let mut out = vec![ZERO; bond * states * bond];
    let mut digits = vec![0usize; w];
    for config in 0..states {
        let mut rem = config;
        for site in (0..w).rev() {
            digits[site] = rem % d;
            rem /= d;
        }
        let mut total = CMatrix::zeros(bond, bond);
        match exc {
            None => {
                let mut m = left.clone();
                for &s in &digits {
                    m *= &a[s];
                }
                total += m;
            }
            Some(exc) => {
                for pos in 0..w {
                    let mut m = left.clone();
                    for (site, &s) in digits.iter().enumerate() {
                        if site == pos {
                            m *= &exc.b[s];
                        } else {
                            m *= &a[s];
                        }
                    }
                    let phase = Complex64::from_polar(1.0, exc.momentum * (pos + 1) as f64);
                    total += m * phase;
                }
            }
        }
        total *= &right;
        for x in 0..bond {
            for y in 0..bond {
                out[(x * states + config) * bond + y] = total[(x, y)];
            }
        }
    }
    Ok(out)
}

/// Squared singular values (descending) of `amplitudes` reshaped to
/// `rows x (len / rows)`, normalized to unit sum.
pub fn bipartite_probabilities(amplitudes: &[Complex64], rows: usize) -> Result<Vec<f64>> {
    if rows == 0 || amplitudes.len() % rows != 0 {
        return Err(Error::InvalidInput("row count must divide the state length".into()));
    }
    let cols = amplitudes.len() / rows;
    let m = CMatrix::from_fn(rows, cols, |i, j| amplitudes[i * cols + j]);
    let mut p: Vec<f64> = m.svd(false, false).singular_values.iter().map(|s| s * s).collect();
    let total: f64 = p.iter().sum();
    if total == 0.0 {
        return Err(Error::InvalidInput("zero state".into()));
    }
    p.iter_mut().for_each(|x| *x /= total);
    p.sort_by(|a, b| b.total_cmp(a));
    Ok(p)
}

/// Half-window spectrum of explicit window amplitudes, cut after `w / 2`
/// sites.
pub fn window_center_probabilities(ump: &UniformMPS, amplitudes: &[Complex64], w: usize) -> Result<Vec<f64>> {
    let rows = ump.bond_dim() * ump.physical_dim().pow((w / 2) as u32);
    bipartite_probabilities(amplitudes, rows)
}

fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let roots = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&x| Complex64::new(x.max(0.0).sqrt(), 0.0)),
    );
    &eig.eigenvectors * CMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// Nonzero spectrum of `ρ_left` for environments `y` (left Gram) and `x`
/// (right), i.e. `eig(y^{1/2} x y^{1/2}) / tr(y x)`, descending.
pub fn environment_spectrum(y: &CMatrix, x: &CMatrix) -> Vec<f64> {
    let sy = hermitian_sqrt(y);
    let m = &sy * x * &sy;
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let norm: f64 = m.trace().re;
    let mut ev: Vec<f64> = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .map(|&v| v / norm)
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Block tensor `C^s = [[e^{iκ} A^s, e^{iκ} B^s], [0, A^s]]`. A product of
/// these carries `Σ_m e^{iκ m} A…B_m…A` in its upper right block.
pub fn block_tensor(ump: &UniformMPS, exc: &ExcitationTensor) -> Vec<CMatrix> {
    let bond = ump.bond_dim();
    let phase = Complex64::from_polar(1.0, exc.momentum);
    ump.tensor()
        .iter()
        .zip(&exc.b)
        .map(|(a, b)| {
            let mut c = CMatrix::zeros(2 * bond, 2 * bond);
            c.view_mut((0, 0), (bond, bond)).copy_from(&(a * phase));
            c.view_mut((0, bond), (bond, bond)).copy_from(&(b * phase));
            c.view_mut((bond, bond), (bond, bond)).copy_from(a);
            c
        })
        .collect()
}

/// Center-cut spectrum of the `w`-site excitation window with fixed-point
/// closures, through `2D x 2D` environments instead of amplitudes.
pub fn block_window_spectrum(ump: &UniformMPS, exc: &ExcitationTensor, w: usize) -> Vec<f64> {
    let bond = ump.bond_dim();
    let c = block_tensor(ump, exc);
    let mut y = CMatrix::zeros(2 * bond, 2 * bond);
    y.view_mut((0, 0), (bond, bond)).copy_from(ump.left());
    let mut x = CMatrix::zeros(2 * bond, 2 * bond);
    x.view_mut((bond, bond), (bond, bond)).copy_from(ump.right());
    for _ in 0..w / 2 {
        y = super::transfer_left(&c, &y);
    }
    for _ in 0..w - w / 2 {
        x = super::transfer_right(&c, &x);
    }
    environment_spectrum(&y, &x)
}

/// Center-cut spectrum of a `w`-site ground-state window closed by random
/// boundary vectors instead of the fixed points. Converges to `eig(Ξ)` with
/// the transfer gap, independently of `l` and `r`.
pub fn open_window_spectrum<R: Rng>(ump: &UniformMPS, w: usize, rng: &mut R) -> Vec<f64> {
    let bond = ump.bond_dim();
    let vec = |rng: &mut R| {
        CMatrix::from_fn(bond, 1, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    };
    let vl = vec(rng);
    let vr = vec(rng);
    let mut y = &vl * vl.adjoint();
    let mut x = &vr * vr.adjoint();
    let a = ump.tensor();
    for _ in 0..w / 2 {
        y = super::transfer_left(a, &y);
        y /= Complex64::new(y.norm(), 0.0);
    }
    for _ in 0..w - w / 2 {
        x = super::transfer_right(a, &x);
        x /= Complex64::new(x.norm(), 0.0);
    }
    environment_spectrum(&y, &x)
}
