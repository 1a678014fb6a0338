use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::correlation::CorrelationMatrix;
use crate::{Error, Result};

/// Values of `ν` within this distance outside `[0, 1]` are clamped.
pub const CLAMP_TOL: f64 = 1e-9;
/// Default threshold below which `ν` counts toward the kernel of `Γ`.
pub const KERNEL_TOL: f64 = 1e-8;
pub const MAX_SCHMIDT_VALUES: usize = 1 << 20;
pub const SCHMIDT_WEIGHT_TOL: f64 = 1e-12;

/// Entanglement data of a Gaussian state restricted to `L` sites.
#[derive(Clone, Debug)]
pub struct EntanglementSpectrum {
    /// `ν_j ∈ [0, 1]`, descending.
    pub nu: Vec<f64>,
    /// Von Neumann entropy in nats.
    pub entropy: f64,
    /// Largest reduced-density eigenvalues `Π (1 ± ν_j)/2`, when requested.
    pub schmidt_probs: Option<Vec<f64>>,
}

impl EntanglementSpectrum {
    /// Build from a list of `ν` values, clamping and validating them.
    pub fn from_nu(nu: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut nu: Vec<f64> = nu.into_iter().map(clamp_nu).collect::<Result<_>>()?;
        nu.sort_by(|a, b| b.total_cmp(a));
        let entropy = nu.iter().map(|&v| binary_entropy(v)).sum();
        Ok(Self {
            nu,
            entropy,
            schmidt_probs: None,
        })
    }

    pub fn with_schmidt_probs(mut self, max_count: usize) -> Self {
        self.schmidt_probs = Some(schmidt_probabilities(&self.nu, max_count));
        self
    }

    /// Dimension of the kernel of `Γ`: two per `ν` below `tol`.
    pub fn kernel_dimension(&self, tol: f64) -> usize {
        2 * self.nu.iter().filter(|&&v| v < tol).count()
    }
}

fn clamp_nu(v: f64) -> Result<f64> {
    if !v.is_finite() || v > 1.0 + CLAMP_TOL || v < -CLAMP_TOL {
        return Err(Error::Unphysical { value: v });
    }
    Ok(v.clamp(0.0, 1.0))
}

/// `h(ν) = -p ln p - q ln q` with `p = (1+ν)/2`, `q = (1-ν)/2`; `0 ln 0 = 0`.
pub fn binary_entropy(nu: f64) -> f64 {
    let xlogx = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    xlogx(0.5 * (1.0 + nu)) + xlogx(0.5 * (1.0 - nu))
}

/// `ν` values from the nonnegative half of the spectrum of `iΓ`.
pub fn spectrum_from_gamma(corr: &CorrelationMatrix) -> Result<EntanglementSpectrum> {
    let sites = corr.sites();
    if let Some(block) = corr.chiral_block() {
        // Γ = [[0, G], [-G^T, 0]] up to interleaving: ±ν are the singular values of G.
        let sv = block.svd(false, false).singular_values;
        return EntanglementSpectrum::from_nu(sv.iter().copied());
    }
    let h = corr.matrix().map(|x| Complex64::new(0.0, x));
    let eig = SymmetricEigen::new(h);
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if let Some(&bad) = values.iter().find(|v| v.abs() > 1.0 + CLAMP_TOL) {
        return Err(Error::Unphysical { value: bad });
    }
    values.sort_by(|a, b| b.total_cmp(a));
    values.truncate(sites);
    EntanglementSpectrum::from_nu(values)
}

/// `dim ker Γ` counted through `ν_j < tol`.
pub fn kernel_dimension(corr: &CorrelationMatrix, tol: f64) -> Result<usize> {
    Ok(spectrum_from_gamma(corr)?.kernel_dimension(tol))
}

#[derive(PartialEq)]
struct Candidate {
    value: f64,
    last: usize,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.total_cmp(&other.value)
    }
}

/// Largest reduced-density eigenvalues `Π_j (1 + m_j ν_j)/2`, descending.
///
/// Products are enumerated lazily as flips of the largest one, so the cost is
/// `O(count log count)`. Stops after `max_count` values (capped at 2^20) or
/// when the cumulative weight reaches `1 - 1e-12`.
pub fn schmidt_probabilities(nu: &[f64], max_count: usize) -> Vec<f64> {
    let max_count = max_count.min(MAX_SCHMIDT_VALUES);
    if max_count == 0 {
        return Vec::new();
    }
    // ratio of the flipped factor to the unflipped one, descending
    let mut ratios: Vec<f64> = nu.iter().map(|&v| (1.0 - v) / (1.0 + v)).collect();
    ratios.sort_by(|a, b| b.total_cmp(a));
    let top: f64 = nu.iter().map(|&v| 0.5 * (1.0 + v)).product();

    let mut out = vec![top];
    let mut total = top;
    let mut heap = BinaryHeap::new();
    if let Some(&r) = ratios.first() {
        heap.push(Candidate {
            value: top * r,
            last: 0,
        });
    }
    while out.len() < max_count && total < 1.0 - SCHMIDT_WEIGHT_TOL {
        let Some(Candidate { value, last }) = heap.pop() else {
            break;
        };
        if value <= 0.0 {
            break;
        }
        out.push(value);
        total += value;
        if last + 1 < ratios.len() {
            // extend the flip set by the next factor
            heap.push(Candidate {
                value: value * ratios[last + 1],
                last: last + 1,
            });
            // or move its last flip one factor further
            heap.push(Candidate {
                value: value / ratios[last] * ratios[last + 1],
                last: last + 1,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn entropy_of_simple_spectra() {
        let pure = EntanglementSpectrum::from_nu([1.0, 1.0, 1.0]).unwrap();
        assert_eq!(pure.entropy, 0.0);

        let mixed = EntanglementSpectrum::from_nu([0.0]).unwrap().with_schmidt_probs(16);
        assert!((mixed.entropy - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(mixed.schmidt_probs.unwrap(), vec![0.5, 0.5]);

        let half = EntanglementSpectrum::from_nu([0.5]).unwrap();
        let expected = -0.75 * 0.75f64.ln() - 0.25 * 0.25f64.ln();
        assert!((half.entropy - expected).abs() < 1e-15);
    }

    #[test]
    fn clamping_and_physicality() {
        let s = EntanglementSpectrum::from_nu([1.0 + 5e-10, -5e-10]).unwrap();
        assert_eq!(s.nu, vec![1.0, 0.0]);
        assert!(matches!(
            EntanglementSpectrum::from_nu([1.01]),
            Err(Error::Unphysical { .. })
        ));
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.5, -1.5, 0.0]);
        let corr = CorrelationMatrix::from_matrix(bad).unwrap();
        assert!(spectrum_from_gamma(&corr).is_err());
    }

    #[test]
    fn general_and_chiral_routes_agree() {
        // rotate a chiral Γ by an x/y-mixing orthogonal map on one site
        let g = DMatrix::from_row_slice(2, 2, &[0.3, -0.2, 0.1, 0.6]);
        let mut gamma = DMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                gamma[(2 * i, 2 * j + 1)] = g[(i, j)];
                gamma[(2 * j + 1, 2 * i)] = -g[(i, j)];
            }
        }
        let chiral = CorrelationMatrix::from_matrix(gamma.clone()).unwrap();
        assert!(chiral.chiral_block().is_some());
        let (c, s) = (0.8f64, 0.6f64);
        let mut o = DMatrix::<f64>::identity(4, 4);
        o[(0, 0)] = c;
        o[(0, 1)] = -s;
        o[(1, 0)] = s;
        o[(1, 1)] = c;
        let rotated = CorrelationMatrix::from_matrix(&o * gamma * o.transpose()).unwrap();
        assert!(rotated.chiral_block().is_none());
        let a = spectrum_from_gamma(&chiral).unwrap();
        let b = spectrum_from_gamma(&rotated).unwrap();
        for (x, y) in a.nu.iter().zip(&b.nu) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.entropy - b.entropy).abs() < 1e-12);
    }

    #[test]
    fn schmidt_enumeration_matches_brute_force() {
        let nu = [0.9, 0.2, 0.55, 0.0, 0.97];
        let mut brute = Vec::new();
        for mask in 0..(1 << nu.len()) {
            let p: f64 = nu
                .iter()
                .enumerate()
                .map(|(j, &v)| if mask >> j & 1 == 0 { 0.5 * (1.0 + v) } else { 0.5 * (1.0 - v) })
                .product();
            brute.push(p);
        }
        brute.sort_by(|a, b| b.total_cmp(a));
        let lazy = schmidt_probabilities(&nu, 1 << nu.len());
        assert_eq!(lazy.len(), brute.len());
        for (a, b) in lazy.iter().zip(&brute) {
            assert!((a - b).abs() < 1e-15);
        }
        let top = schmidt_probabilities(&nu, 7);
        assert_eq!(top.len(), 7);
        assert!(top.iter().sum::<f64>() <= 1.0);
    }

    #[test]
    fn schmidt_enumeration_stops_at_full_weight() {
        let probs = schmidt_probabilities(&[1.0, 1.0, 0.0], 100);
        assert_eq!(probs, vec![0.5, 0.5]);
    }

    #[test]
    fn kernel_counts_pairs() {
        let s = EntanglementSpectrum::from_nu([1.0, 1e-12, 0.4]).unwrap();
        assert_eq!(s.kernel_dimension(KERNEL_TOL), 2);
        let pure = EntanglementSpectrum::from_nu([1.0; 4]).unwrap();
        assert_eq!(pure.kernel_dimension(KERNEL_TOL), 0);
    }
}
