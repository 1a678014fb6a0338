use nalgebra::DMatrix;
use num_complex::Complex64;

use super::basis::QuasiparticleBasis;
use crate::{Error, Result};

/// Occupied-mode set `K` of the state `Π_{k∈K} b_k† |Ω>`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExcitationSpec {
    occupied: Vec<usize>,
}

impl ExcitationSpec {
    pub fn new(occupied: impl Into<Vec<usize>>) -> Result<Self> {
        let occupied = occupied.into();
        let mut sorted = occupied.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidExcitation(format!(
                "mode indices must be distinct, got {occupied:?}"
            )));
        }
        Ok(Self { occupied })
    }

    pub fn ground() -> Self {
        Self::default()
    }

    pub fn single(mode: usize) -> Self {
        Self {
            occupied: vec![mode],
        }
    }

    pub fn occupied(&self) -> &[usize] {
        &self.occupied
    }

    /// Number of quasiparticles.
    pub fn count(&self) -> usize {
        self.occupied.len()
    }

    pub(crate) fn check_range(&self, n: usize) -> Result<()> {
        if let Some(&bad) = self.occupied.iter().find(|&&k| k >= n) {
            return Err(Error::InvalidExcitation(format!(
                "mode {bad} out of range for {n} modes"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StateSource {
    Ground,
    Excited(Vec<usize>),
    External,
}

/// Real antisymmetric `Γ` with `<w_a w_b> = δ_ab + i Γ_ab`, restricted to the
/// Majoranas of the first `sites` sites.
#[derive(Clone, Debug)]
pub struct CorrelationMatrix {
    gamma: DMatrix<f64>,
    sites: usize,
    source: StateSource,
}

impl CorrelationMatrix {
    /// Wrap an externally computed matrix; antisymmetry is checked and then
    /// imposed exactly.
    pub fn from_matrix(gamma: DMatrix<f64>) -> Result<Self> {
        let dim = gamma.nrows();
        if dim != gamma.ncols() || dim % 2 != 0 || dim == 0 {
            return Err(Error::InvalidInput(format!(
                "correlation matrix must be 2L x 2L, got {} x {}",
                gamma.nrows(),
                gamma.ncols()
            )));
        }
        let asym = (&gamma + gamma.transpose()).amax();
        if asym > 1e-10 {
            return Err(Error::NotAntisymmetric(asym));
        }
        Ok(Self {
            gamma: antisymmetrize(gamma),
            sites: dim / 2,
            source: StateSource::External,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn source(&self) -> &StateSource {
        &self.source
    }

    /// The `L x L` block `Γ[2i][2j+1]` when the x-x and y-y blocks vanish
    /// identically.
    pub fn chiral_block(&self) -> Option<DMatrix<f64>> {
        let l = self.sites;
        for i in 0..l {
            for j in 0..l {
                if self.gamma[(2 * i, 2 * j)] != 0.0 || self.gamma[(2 * i + 1, 2 * j + 1)] != 0.0 {
                    return None;
                }
            }
        }
        Some(DMatrix::from_fn(l, l, |i, j| self.gamma[(2 * i, 2 * j + 1)]))
    }
}

fn antisymmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m - m.transpose()) * 0.5
}

fn check_sites(basis: &QuasiparticleBasis, sites: usize) -> Result<()> {
    if sites == 0 || sites > basis.n() {
        return Err(Error::InvalidInput(format!(
            "subsystem size {sites} outside 1..={}",
            basis.n()
        )));
    }
    Ok(())
}

/// Top `2L` rows of mode `k`.
fn restricted_mode(basis: &QuasiparticleBasis, k: usize, sites: usize) -> nalgebra::DVector<Complex64> {
    basis.modes().view((0, k), (2 * sites, 1)).column(0).into_owned()
}

/// `Γ^[Ω] = i(u* u^T - u u^H) = 2 Im(u u^H)` with `u` the first `2L` rows of `V`.
pub fn correlation_ground(basis: &QuasiparticleBasis, sites: usize) -> Result<CorrelationMatrix> {
    check_sites(basis, sites)?;
    let gamma = match basis.chiral() {
        Some(ch) => {
            let g = ch.u.rows(0, sites) * ch.w.rows(0, sites).transpose();
            let mut gamma = DMatrix::zeros(2 * sites, 2 * sites);
            for i in 0..sites {
                for j in 0..sites {
                    gamma[(2 * i, 2 * j + 1)] = g[(i, j)];
                    gamma[(2 * j + 1, 2 * i)] = -g[(i, j)];
                }
            }
            gamma
        }
        None => {
            let u = basis.modes().rows(0, 2 * sites);
            antisymmetrize((&u * u.adjoint()).map(|z| 2.0 * z.im))
        }
    };
    Ok(CorrelationMatrix {
        gamma,
        sites,
        source: StateSource::Ground,
    })
}

/// Rank-2 update `χ_k = 2i(v̄_k v_k^T - v_k v_k^H) = 4 Im(v_k v_k^H)` restricted
/// to the first `2L` rows.
pub fn chi(basis: &QuasiparticleBasis, k: usize, sites: usize) -> Result<DMatrix<f64>> {
    check_sites(basis, sites)?;
    if k >= basis.n() {
        return Err(Error::InvalidExcitation(format!("mode {k} out of range")));
    }
    let v = restricted_mode(basis, k, sites);
    let chi = DMatrix::from_fn(2 * sites, 2 * sites, |a, b| {
        if a == b {
            0.0
        } else {
            4.0 * (v[a] * v[b].conj()).im
        }
    });
    Ok(antisymmetrize(chi))
}

/// `Γ^[Φ] = Γ^[Ω] - Σ_{κ∈K} χ_κ`.
pub fn correlation_excited(
    basis: &QuasiparticleBasis,
    spec: &ExcitationSpec,
    sites: usize,
) -> Result<CorrelationMatrix> {
    let ground = correlation_ground(basis, sites)?;
    correlation_excited_from(&ground, basis, spec)
}

/// Same as [`correlation_excited`], reusing an already computed ground-state
/// matrix of the same basis and subsystem.
pub fn correlation_excited_from(
    ground: &CorrelationMatrix,
    basis: &QuasiparticleBasis,
    spec: &ExcitationSpec,
) -> Result<CorrelationMatrix> {
    spec.check_range(basis.n())?;
    if ground.source != StateSource::Ground {
        return Err(Error::InvalidInput("expected a ground-state correlation matrix".into()));
    }
    let mut gamma = ground.gamma.clone();
    for &k in spec.occupied() {
        gamma -= chi(basis, k, ground.sites)?;
    }
    Ok(CorrelationMatrix {
        gamma: antisymmetrize(gamma),
        sites: ground.sites,
        source: if spec.count() == 0 {
            StateSource::Ground
        } else {
            StateSource::Excited(spec.occupied().to_vec())
        },
    })
}

/// `<Ω| b_{k;L}† b_{k;L} |Ω> = Σ_l |u_k · u_l|²`, the weight mode `k` keeps on
/// the first `L` sites beyond what a clean left/right split would give.
pub fn half_chain_mode_weight(basis: &QuasiparticleBasis, k: usize, sites: usize) -> Result<f64> {
    check_sites(basis, sites)?;
    if k >= basis.n() {
        return Err(Error::InvalidExcitation(format!("mode {k} out of range")));
    }
    let u = basis.modes().rows(0, 2 * sites);
    let uk = u.column(k);
    // bilinear, not sesquilinear: (u^T u_k)_l = Σ_a u_al u_ak
    let overlaps = u.transpose() * uk;
    Ok(overlaps.iter().map(|z| z.norm_sqr()).sum())
}
