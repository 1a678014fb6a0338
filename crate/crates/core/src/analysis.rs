//! Scans over sizes and excitations, finite-size fits and quasiparticle
//! counting.
//!
//! Every scan fans out over independent work items with rayon and collects
//! them in input order, so results do not depend on the thread count.

use std::ops::Range;

use rayon::prelude::*;

use crate::ed::ExcessRow;
use crate::freefermion::{correlation_ground, diagonalize, Bipartition, ExcitationSpec, QuasiparticleBasis};
use crate::model::{build_xy_majorana, Boundary, MajoranaQuadraticForm, ModelKind, SpinChainModel};
use crate::{Error, Parity, Result, LN_2};

/// Default `|ΔS/log 2 - k|` below which a state counts as `k` free
/// quasiparticles.
pub const CLASSIFY_THRESHOLD: f64 = 0.1;
/// Half-width of the three-particle exclusion windows is `n / EXCLUSION_DIVISOR`.
pub const EXCLUSION_DIVISOR: usize = 16;
/// Fraction of sites dropped at each end of the chain in [`estimate_xi`].
pub const XI_EDGE_FRACTION: f64 = 0.1;
/// Correlations below this are not resolvable and are left out of the fit.
pub const XI_FLOOR: f64 = 1e-12;
/// A chain is treated as gapless when its bulk gap is below
/// `XI_GAP_FACTOR * ε_max / n`.
pub const XI_GAP_FACTOR: f64 = 10.0;

/// A model at every size of a scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelFamily {
    pub kind: ModelKind,
    pub boundary: Boundary,
}

impl ModelFamily {
    pub fn xy(gamma: f64, h: f64) -> Self {
        Self {
            kind: ModelKind::Xy { gamma, h },
            boundary: Boundary::Open,
        }
    }

    pub fn at(&self, n: usize) -> Result<SpinChainModel> {
        SpinChainModel::new(self.kind, n, self.boundary)
    }
}

/// Which modes a single-particle scan excites at each size.
#[derive(Clone, Debug, PartialEq)]
pub enum ModeSelection {
    All,
    Indices(Vec<usize>),
    /// The mode whose momentum label is closest to the given value.
    NearestMomentum(f64),
}

impl ModeSelection {
    fn resolve(&self, basis: &QuasiparticleBasis) -> Result<Vec<usize>> {
        let n = basis.n();
        match self {
            ModeSelection::All => Ok((0..n).collect()),
            ModeSelection::Indices(v) => {
                if let Some(&k) = v.iter().find(|&&k| k >= n) {
                    return Err(Error::InvalidExcitation(format!("mode {k} out of range for n = {n}")));
                }
                Ok(v.clone())
            }
            ModeSelection::NearestMomentum(q) => Ok(vec![nearest_momentum(basis, *q)]),
        }
    }
}

/// Index of the mode whose momentum label is closest to `q`; the lower
/// index wins a tie.
pub fn nearest_momentum(basis: &QuasiparticleBasis, q: f64) -> usize {
    let mut best = 0;
    for (k, &p) in basis.momentum().iter().enumerate() {
        if (p - q).abs() < (basis.momentum()[best] - q).abs() - 1e-12 {
            best = k;
        }
    }
    best
}

/// What a row describes: a set of occupied modes, or an ED eigenstate.
#[derive(Clone, Debug, PartialEq)]
pub enum StateLabel {
    Modes(Vec<usize>),
    EdState(usize),
}

impl StateLabel {
    /// `3;17` for modes, `ground` for the empty set, `ed:4` for ED states.
    pub fn render(&self) -> String {
        match self {
            StateLabel::Modes(m) if m.is_empty() => "ground".into(),
            StateLabel::Modes(m) => m.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";"),
            StateLabel::EdState(i) => format!("ed:{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub model: String,
    pub n: usize,
    /// Sites in the left block.
    pub cut: usize,
    pub boundary: Boundary,
    pub state: StateLabel,
    pub reflection: Option<Parity>,
    pub parity: Option<Parity>,
    pub momentum: Vec<f64>,
    pub s_ground: f64,
    pub s_excited: f64,
    pub ds: f64,
    pub ds_over_log2: f64,
}

impl ScanRow {
    fn new(model: &SpinChainModel, cut: usize, state: StateLabel, s_ground: f64, s_excited: f64, ds: f64) -> Self {
        Self {
            model: model.descriptor(),
            n: model.n(),
            cut,
            boundary: model.boundary(),
            state,
            reflection: None,
            parity: None,
            momentum: Vec::new(),
            s_ground,
            s_excited,
            ds,
            ds_over_log2: ds / LN_2,
        }
    }
}

fn half_cut(n: usize) -> Result<usize> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidInput(format!("half-chain cuts need even n >= 4, got {n}")));
    }
    Ok(n / 2)
}

fn free_row(model: &SpinChainModel, basis: &QuasiparticleBasis, cut: &Bipartition, occupied: Vec<usize>) -> Result<ScanRow> {
    let spec = ExcitationSpec::new(occupied.clone())?;
    let ds = cut.excess(&spec)?;
    let ground = cut.ground_entropy();
    let mut row = ScanRow::new(model, cut.sites(), StateLabel::Modes(occupied.clone()), ground, ground + ds, ds);
    row.reflection = basis.state_reflection(&occupied);
    row.parity = Some(basis.state_parity(&occupied));
    row.momentum = occupied.iter().map(|&k| basis.momentum()[k]).collect();
    Ok(row)
}

struct Prepared {
    model: SpinChainModel,
    basis: QuasiparticleBasis,
}

fn prepare(family: &ModelFamily, sizes: &[usize]) -> Result<Vec<Prepared>> {
    sizes
        .par_iter()
        .map(|&n| {
            half_cut(n)?;
            let model = family.at(n)?;
            let basis = diagonalize(&build_xy_majorana(&model)?)?;
            Ok(Prepared { model, basis })
        })
        .collect()
}

/// Half-chain row of the quasiparticle vacuum at size `n`.
pub fn ground_row(family: &ModelFamily, n: usize) -> Result<ScanRow> {
    let p = prepare(family, &[n])?.pop().expect("one size");
    let cut = Bipartition::new(&p.basis, half_cut(n)?)?;
    free_row(&p.model, &p.basis, &cut, Vec::new())
}

/// `ΔS` of `b_k†|Ω>` at the half-chain cut, one row per `(n, k)` in the
/// order of `sizes` and then of the selected modes.
pub fn scan_single_particle(family: &ModelFamily, sizes: &[usize], modes: &ModeSelection) -> Result<Vec<ScanRow>> {
    let prepared = prepare(family, sizes)?;
    let per_size: Vec<Vec<ScanRow>> = prepared
        .par_iter()
        .map(|p| {
            let selected = modes.resolve(&p.basis)?;
            let cut = Bipartition::new(&p.basis, p.model.n() / 2)?;
            selected
                .par_iter()
                .map(|&k| free_row(&p.model, &p.basis, &cut, vec![k]))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(per_size.into_iter().flatten().collect())
}

/// The two fixed modes of the three-particle sweep, the `n/4`-th and
/// `3n/4`-th lowest.
pub fn three_particle_fixed_modes(n: usize) -> (usize, usize) {
    (n / 4 - 1, 3 * n / 4 - 1)
}

/// Whether sweep index `i` lies within `n / EXCLUSION_DIVISOR` of either
/// fixed mode.
pub fn in_exclusion_window(n: usize, i: usize) -> bool {
    let (a, b) = three_particle_fixed_modes(n);
    let w = n / EXCLUSION_DIVISOR;
    i.abs_diff(a) <= w || i.abs_diff(b) <= w
}

/// Requested sweep indices at one size.
#[derive(Clone, Debug, PartialEq)]
pub enum Sweep {
    All,
    Indices(Vec<usize>),
}

#[derive(Clone, Debug, Default)]
pub struct ThreeParticleScan {
    pub rows: Vec<ScanRow>,
    /// `(n, i)` pairs dropped because `i` collides with a fixed mode.
    pub skipped: Vec<(usize, usize)>,
}

/// `ΔS` of `b_i† b_a† b_b†|Ω>` with the fixed modes from
/// [`three_particle_fixed_modes`].
pub fn scan_three_particle(family: &ModelFamily, sizes: &[usize], sweep: &Sweep) -> Result<ThreeParticleScan> {
    if let Some(&n) = sizes.iter().find(|&&n| n % 4 != 0) {
        return Err(Error::InvalidInput(format!("three-particle scans need n divisible by 4, got {n}")));
    }
    let prepared = prepare(family, sizes)?;
    let mut out = ThreeParticleScan::default();
    for p in &prepared {
        let n = p.model.n();
        let (a, b) = three_particle_fixed_modes(n);
        let indices: Vec<usize> = match sweep {
            Sweep::All => (0..n).collect(),
            Sweep::Indices(v) => v.clone(),
        };
        if let Some(&i) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidExcitation(format!("mode {i} out of range for n = {n}")));
        }
        let (kept, skipped): (Vec<usize>, Vec<usize>) = indices.into_iter().partition(|&i| i != a && i != b);
        out.skipped.extend(skipped.into_iter().map(|i| (n, i)));
        let cut = Bipartition::new(&p.basis, n / 2)?;
        let rows = kept
            .par_iter()
            .map(|&i| {
                let mut occ = vec![i, a, b];
                occ.sort_unstable();
                free_row(&p.model, &p.basis, &cut, occ)
            })
            .collect::<Result<Vec<_>>>()?;
        out.rows.extend(rows);
    }
    Ok(out)
}

/// Rows for an ED entanglement table.
pub fn rows_from_ed(model: &SpinChainModel, table: &[ExcessRow]) -> Vec<ScanRow> {
    let ground = table.first().map_or(0.0, |r| r.entropy);
    table
        .iter()
        .map(|r| {
            let mut row =
                ScanRow::new(model, model.n() / 2, StateLabel::EdState(r.index), ground, r.entropy, r.excess);
            row.reflection = r.reflection;
            row.parity = r.parity;
            row
        })
        .collect()
}

/// Power law `value ≈ amplitude · n^exponent`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    /// Points that entered the fit.
    pub points: Vec<(f64, f64)>,
    /// Points dropped for a nonpositive or non-finite value.
    pub excluded: Vec<(f64, f64)>,
}

/// Straight-line least squares, returning `(slope, intercept, r²)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2.clamp(0.0, 1.0))
}

/// Ordinary least squares of `ln value` against `ln n`.
///
/// `points` are `(n, log 2 - ΔS)` pairs. Nonpositive values are left out and
/// reported in `excluded`; at least three distinct sizes must remain.
pub fn fit_correction(points: &[(f64, f64)]) -> Result<ScalingFit> {
    let (good, excluded): (Vec<(f64, f64)>, Vec<(f64, f64)>) =
        points.iter().partition(|(_, v)| *v > 0.0 && v.is_finite());
    if let Some(&(n, _)) = good.iter().find(|(n, _)| !(*n > 0.0 && n.is_finite())) {
        return Err(Error::InvalidInput(format!("size {n} must be positive")));
    }
    let x: Vec<f64> = good.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = good.iter().map(|p| p.1.ln()).collect();
    let mut distinct = x.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 distinct sizes with positive deviation, got {}",
            distinct.len()
        )));
    }
    let (slope, intercept, r_squared) = linear_fit(&x, &y);
    Ok(ScalingFit {
        exponent: slope,
        amplitude: intercept.exp(),
        r_squared,
        points: good,
        excluded,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Classification {
    pub k: u32,
    pub is_regular: bool,
}

/// Nearest number of quasiparticles to `ΔS / log 2`, and whether `ΔS` lies
/// within `threshold` (in units of log 2) of it.
pub fn classify_quasiparticles(ds: f64, threshold: f64) -> Classification {
    let x = ds / LN_2;
    let k = x.round().max(0.0);
    Classification {
        k: k as u32,
        is_regular: (x - k).abs() < threshold,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationLengthEstimate {
    pub xi: f64,
    /// Sites `j` whose correlation with the first interior site was used.
    pub fit_window: Range<usize>,
    /// RMS deviation of `ln |Γ|` from the fitted line; 0 when the
    /// correlations fall below [`XI_FLOOR`] beyond the first site.
    pub residual: f64,
    pub points: usize,
}

/// Ground-state correlation length from the decay of
/// `max_ab |Γ_{2i0+a, 2j+b}|` with `j - i0`, where `i0` is the first site
/// inside the window that drops [`XI_EDGE_FRACTION`] of the sites at each
/// end.
pub fn estimate_xi(form: &MajoranaQuadraticForm) -> Result<CorrelationLengthEstimate> {
    let basis = diagonalize(form)?;
    let n = basis.n();
    let eps = basis.energies();
    let top = eps.last().copied().unwrap_or(0.0);
    let gap = eps
        .iter()
        .enumerate()
        .filter(|(k, _)| !basis.zero_modes().contains(k))
        .map(|(_, &e)| e)
        .fold(f64::INFINITY, f64::min);
    if !gap.is_finite() || gap < XI_GAP_FACTOR * top / n as f64 {
        return Err(Error::Gapless { gap: if gap.is_finite() { gap } else { 0.0 } });
    }
    let edge = (XI_EDGE_FRACTION * n as f64).floor() as usize;
    let window = edge..n - edge;
    if window.len() < 2 {
        return Err(Error::InvalidInput(format!("chain of {n} sites is too short for a fit window")));
    }
    let gamma = correlation_ground(&basis, n)?;
    let g = gamma.matrix();
    let i0 = window.start;
    let block_max = |j: usize| {
        let mut m: f64 = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                m = m.max(g[(2 * i0 + a, 2 * j + b)].abs());
            }
        }
        m
    };
    let (x, y): (Vec<f64>, Vec<f64>) = window
        .clone()
        .skip(1)
        .map(|j| ((j - i0) as f64, block_max(j)))
        .take_while(|&(_, v)| v > XI_FLOOR)
        .map(|(d, v)| (d, v.ln()))
        .unzip();
    if x.len() < 2 {
        return Ok(CorrelationLengthEstimate {
            xi: -1.0 / XI_FLOOR.ln(),
            fit_window: window,
            residual: 0.0,
            points: x.len(),
        });
    }
    let (slope, intercept, _) = linear_fit(&x, &y);
    let residual = (x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / x.len() as f64)
        .sqrt();
    if slope >= 0.0 {
        return Err(Error::Gapless { gap });
    }
    Ok(CorrelationLengthEstimate {
        xi: -1.0 / slope,
        fit_window: window,
        residual,
        points: x.len(),
    })
}
