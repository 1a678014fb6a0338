//! Quasiparticles and entanglement of quadratic Majorana Hamiltonians.
//!
//! A Gaussian state is fully described by its Majorana correlation matrix, so
//! the entropy of a block of `L` sites comes from a `2L x 2L` eigenproblem.
//! Exciting mode `k` changes that matrix by the rank-2 term [`chi`].

mod basis;
mod correlation;
mod spectrum;

pub use basis::{
    diagonalize, pfaffian, reflect_mode_vector, QuasiparticleBasis, DEGENERACY_TOL, ZERO_MODE_TOL,
};
pub use correlation::{
    chi, correlation_excited, correlation_excited_from, correlation_ground, half_chain_mode_weight,
    CorrelationMatrix, ExcitationSpec, StateSource,
};
pub use spectrum::{
    binary_entropy, kernel_dimension, schmidt_probabilities, spectrum_from_gamma,
    EntanglementSpectrum, CLAMP_TOL, KERNEL_TOL, MAX_SCHMIDT_VALUES, SCHMIDT_WEIGHT_TOL,
};

use crate::model::MajoranaQuadraticForm;
use crate::{Error, Result};

/// Ground and excited entropies of one bipartition of one basis.
#[derive(Clone, Debug)]
pub struct Bipartition<'a> {
    basis: &'a QuasiparticleBasis,
    ground: CorrelationMatrix,
    ground_entropy: f64,
}

impl<'a> Bipartition<'a> {
    pub fn new(basis: &'a QuasiparticleBasis, sites: usize) -> Result<Self> {
        let ground = correlation_ground(basis, sites)?;
        let ground_entropy = spectrum_from_gamma(&ground)?.entropy;
        Ok(Self {
            basis,
            ground,
            ground_entropy,
        })
    }

    pub fn sites(&self) -> usize {
        self.ground.sites()
    }

    pub fn ground(&self) -> &CorrelationMatrix {
        &self.ground
    }

    pub fn ground_entropy(&self) -> f64 {
        self.ground_entropy
    }

    pub fn excited(&self, spec: &ExcitationSpec) -> Result<EntanglementSpectrum> {
        let corr = correlation_excited_from(&self.ground, self.basis, spec)?;
        spectrum_from_gamma(&corr)
    }

    /// `S(Φ) - S(Ω)`.
    pub fn excess(&self, spec: &ExcitationSpec) -> Result<f64> {
        if spec.count() == 0 {
            spec.check_range(self.basis.n())?;
            return Ok(0.0);
        }
        Ok(self.excited(spec)?.entropy - self.ground_entropy)
    }
}

/// Excess entanglement `ΔS = S(Φ) - S(Ω)` of `Π_{k∈K} b_k† |Ω>` on the first
/// `sites` sites, or on half the chain when `sites` is `None`.
pub fn excess_entropy(
    form: &MajoranaQuadraticForm,
    spec: &ExcitationSpec,
    sites: Option<usize>,
) -> Result<f64> {
    let basis = diagonalize(form)?;
    let sites = sites.unwrap_or(basis.n() / 2);
    Bipartition::new(&basis, sites)?.excess(spec)
}

/// Every many-body level `E_0 + Σ_{k∈K} ε_k` with the fermion parity of its
/// state, sorted by energy. Only sensible for small `n`.
pub fn many_body_levels(basis: &QuasiparticleBasis) -> Result<Vec<(f64, crate::Parity)>> {
    let n = basis.n();
    if n > 20 {
        return Err(Error::SizeCap { sites: n, cap: 20 });
    }
    let e0 = basis.vacuum_energy();
    let eps = basis.energies();
    let mut levels: Vec<(f64, crate::Parity)> = (0u32..1 << n)
        .map(|mask| {
            let e: f64 = (0..n).filter(|&k| mask >> k & 1 == 1).map(|k| eps[k]).sum();
            let parity = if mask.count_ones() % 2 == 0 {
                basis.vacuum_parity()
            } else {
                basis.vacuum_parity().flip()
            };
            (e0 + e, parity)
        })
        .collect();
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(levels)
}
