use quasient::analysis::{
    estimate_xi, fit_correction, ground_row, rows_from_ed, scan_single_particle, scan_three_particle, ModeSelection,
    ModelFamily, ScanRow, EXCLUSION_DIVISOR, XI_EDGE_FRACTION, XI_FLOOR, XI_GAP_FACTOR,
};
use quasient::ed::{excess_table_with, EdOptions, ExcessRow};
use quasient::freefermion::{diagonalize, Bipartition, ExcitationSpec, QuasiparticleBasis};
use quasient::model::{build_xy_majorana, Boundary, ModelKind, SpinChainModel};
use quasient::mpsx::{excitation_spectrum, gauge_fix, ground_spectrum, random_mps, random_tensor, seeded_rng};
use quasient::LN_2;
use serde::{Deserialize, Serialize};

use crate::config::{Command, ModeItem, RunConfig};
use crate::output::{emit, float, Metadata, OutputRow, Record};
use crate::CliError;

/// Largest ED chain whose free-fermion levels are enumerated exhaustively.
const ENUMERATION_MAX_SITES: usize = 20;
/// Levels closer than this are treated as one degenerate level.
const LEVEL_TOL: f64 = 1e-8;

pub fn dispatch(cfg: &RunConfig) -> Result<(), CliError> {
    match cfg.command {
        Command::XyScan => xy_scan(cfg),
        Command::ThreeScan => three_scan(cfg),
        Command::EdExcess => ed_excess(cfg),
        Command::EdCompare => ed_compare(cfg),
        Command::MpsCheck => mps_check(cfg),
        Command::Scaling => scaling(cfg),
        Command::Xi => xi(cfg),
    }
}

fn family(cfg: &RunConfig) -> ModelFamily {
    ModelFamily {
        kind: cfg.model,
        boundary: cfg.boundary,
    }
}

fn boundary_note(b: Boundary) -> &'static str {
    match b {
        Boundary::Open => "open chain; site 0 at the left end; half-chain cut keeps sites 0..L with L = n/2",
        Boundary::Periodic => "periodic chain; site 0 at the left end; half-chain cut keeps sites 0..L with L = n/2",
    }
}

fn base_meta(cfg: &RunConfig) -> Metadata {
    let mut m = Metadata::default();
    m.push("tool", format!("quasient {}", env!("CARGO_PKG_VERSION")));
    m.push("command", cfg.command);
    m.push("rerun", cfg.rerun_line());
    m.push("boundary", boundary_note(cfg.boundary));
    m.push("seed", cfg.seed);
    m.push("classifier_threshold", cfg.threshold);
    m.push("tolerance", format!("{:e}", cfg.tolerance));
    m.push("lanczos_tolerance", format!("{:e}", cfg.lanczos_tol));
    m
}

fn mode_note(m: &mut Metadata) {
    m.push(
        "mode_indexing",
        "modes count ascending single-particle energies from 0; ground is the quasiparticle vacuum",
    );
    m.push("labels", "reflection and parity of the state; blank when unresolved");
}

fn write<R: Record>(cfg: &RunConfig, meta: &Metadata, rows: &[R]) -> Result<(), CliError> {
    emit(meta, rows, cfg.format, cfg.output.as_deref()).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

enum Resolved {
    Ground,
    Select(ModeSelection),
}

fn resolve(item: &ModeItem, n: usize) -> Result<Resolved, CliError> {
    Ok(match item {
        ModeItem::All => Resolved::Select(ModeSelection::All),
        ModeItem::Ground => Resolved::Ground,
        ModeItem::Index(k) => Resolved::Select(ModeSelection::Indices(vec![*k])),
        ModeItem::Middle(o) => {
            let k = (n / 2) as i64 + o;
            if k < 0 || k >= n as i64 {
                return Err(CliError::Config(format!("mode n/2{o:+} is out of range for n = {n}")));
            }
            Resolved::Select(ModeSelection::Indices(vec![k as usize]))
        }
        ModeItem::Momentum(q) => Resolved::Select(ModeSelection::NearestMomentum(*q)),
    })
}

fn single_rows(cfg: &RunConfig, n: usize, item: &ModeItem) -> Result<Vec<ScanRow>, CliError> {
    let fam = family(cfg);
    Ok(match resolve(item, n)? {
        Resolved::Ground => vec![ground_row(&fam, n)?],
        Resolved::Select(sel) => scan_single_particle(&fam, &[n], &sel)?,
    })
}

fn output_rows(cfg: &RunConfig, rows: &[ScanRow]) -> Vec<OutputRow> {
    rows.iter().map(|r| OutputRow::from_scan(r, cfg.threshold)).collect()
}

fn xy_scan(cfg: &RunConfig) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        for item in &cfg.modes {
            rows.extend(single_rows(cfg, n, item)?);
        }
    }
    let mut meta = base_meta(cfg);
    mode_note(&mut meta);
    write(cfg, &meta, &output_rows(cfg, &rows))
}

fn three_scan(cfg: &RunConfig) -> Result<(), CliError> {
    let scan = scan_three_particle(&family(cfg), &cfg.sizes, &cfg.sweep)?;
    let mut meta = base_meta(cfg);
    mode_note(&mut meta);
    meta.push("fixed_modes", "n/4-1 and 3n/4-1");
    meta.push(
        "exclusion_window",
        format!("sweep indices within n/{EXCLUSION_DIVISOR} of a fixed mode form the peak region"),
    );
    let skipped = if scan.skipped.is_empty() {
        "none".to_string()
    } else {
        scan.skipped.iter().map(|(n, i)| format!("n={n}:i={i}")).collect::<Vec<_>>().join(";")
    };
    meta.push("skipped_collisions", skipped);
    write(cfg, &meta, &output_rows(cfg, &scan.rows))
}

fn ed_options(cfg: &RunConfig) -> EdOptions {
    let mut opts = EdOptions {
        max_sites: cfg.max_sites,
        ..EdOptions::default()
    };
    opts.lanczos.tol = cfg.lanczos_tol;
    opts.lanczos.seed = cfg.seed;
    opts
}

fn ed_table(cfg: &RunConfig, n: usize) -> Result<(SpinChainModel, Vec<ExcessRow>), CliError> {
    let model = SpinChainModel::new(cfg.model, n, cfg.boundary)?;
    let table = excess_table_with(&model, cfg.states, &ed_options(cfg))?;
    Ok((model, table))
}

fn ed_excess(cfg: &RunConfig) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let (model, table) = ed_table(cfg, n)?;
        rows.extend(rows_from_ed(&model, &table));
    }
    let mut meta = base_meta(cfg);
    meta.push("ed_states", cfg.states);
    meta.push("max_sites", cfg.max_sites);
    meta.push("labels", "reflection and parity of the state; blank when unresolved");
    meta.push("modes", "ed:i is the i-th lowest eigenstate after symmetry resolution");
    write(cfg, &meta, &output_rows(cfg, &rows))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub n: usize,
    pub state: usize,
    pub modes: String,
    pub energy: f64,
    #[serde(rename = "S_ed")]
    pub s_ed: f64,
    #[serde(rename = "S_fermion")]
    pub s_fermion: f64,
    pub abs_diff: f64,
}

impl Record for CompareRow {
    const COLUMNS: &'static [&'static str] = &["n", "state", "modes", "energy", "S_ed", "S_fermion", "abs_diff"];

    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.state.to_string(),
            self.modes.clone(),
            float(self.energy),
            float(self.s_ed),
            float(self.s_fermion),
            float(self.abs_diff),
        ]
    }
}

/// Many-body levels as `(energy, occupation mask)`, ascending.
fn enumerate_levels(basis: &QuasiparticleBasis) -> Vec<(f64, u32)> {
    let n = basis.n();
    let eps = basis.energies();
    let mut levels: Vec<(f64, u32)> = (0u32..1 << n)
        .map(|mask| {
            let e: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| eps[k]).sum();
            (basis.vacuum_energy() + e, mask)
        })
        .collect();
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    levels
}

/// The occupation at energy `e` when exactly one level lies there.
fn unique_occupation(levels: &[(f64, u32)], e: f64, n: usize) -> Option<Vec<usize>> {
    let lo = levels.partition_point(|l| l.0 < e - LEVEL_TOL);
    let hi = levels.partition_point(|l| l.0 <= e + LEVEL_TOL);
    (hi == lo + 1).then(|| (0..n).filter(|k| levels[lo].1 >> k & 1 == 1).collect())
}

fn ed_compare(cfg: &RunConfig) -> Result<(), CliError> {
    if !matches!(cfg.model, ModelKind::Xy { .. }) {
        return Err(CliError::Config("ed-compare needs the xy model".into()));
    }
    if let Some(&n) = cfg.sizes.iter().find(|&&n| n > ENUMERATION_MAX_SITES) {
        return Err(CliError::SizeCap(format!("{n} sites exceeds the cap of {ENUMERATION_MAX_SITES}")));
    }
    let mut rows = Vec::new();
    let mut ambiguous = 0;
    for &n in &cfg.sizes {
        let (model, table) = ed_table(cfg, n)?;
        let basis = diagonalize(&build_xy_majorana(&model)?)?;
        let cut = Bipartition::new(&basis, n / 2)?;
        let levels = enumerate_levels(&basis);
        for row in &table {
            let Some(occ) = unique_occupation(&levels, row.energy, n) else {
                ambiguous += 1;
                continue;
            };
            let s_fermion = cut.excited(&ExcitationSpec::new(occ.clone())?)?.entropy;
            rows.push(CompareRow {
                n,
                state: row.index,
                modes: quasient::analysis::StateLabel::Modes(occ).render(),
                energy: row.energy,
                s_ed: row.entropy,
                s_fermion,
                abs_diff: (row.entropy - s_fermion).abs(),
            });
        }
    }
    let worst = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    let pass = !rows.is_empty() && worst <= cfg.tolerance;
    let mut meta = base_meta(cfg);
    meta.push("ed_states", cfg.states);
    meta.push("skipped_degenerate", ambiguous);
    meta.push("max_abs_diff", float(worst));
    meta.push("pass", pass);
    write(cfg, &meta, &rows)?;
    if rows.is_empty() {
        return Err(CliError::Numerical("no nondegenerate ED states to compare".into()));
    }
    if !pass {
        return Err(CliError::Numerical(format!(
            "max |S_fermion - S_ed| = {worst:e} exceeds tolerance {:e}",
            cfg.tolerance
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawRow {
    pub draw: usize,
    pub bond_dim: usize,
    pub kappa: f64,
    #[serde(rename = "S_ground")]
    pub s_ground: f64,
    #[serde(rename = "S_excited")]
    pub s_excited: f64,
    /// `|S[Φ] - S[Ω] - log 2|`.
    pub deviation: f64,
    /// Largest gap between the excited spectrum and the halved ground one.
    pub spectrum_deviation: f64,
}

impl Record for DrawRow {
    const COLUMNS: &'static [&'static str] =
        &["draw", "bond_dim", "kappa", "S_ground", "S_excited", "deviation", "spectrum_deviation"];

    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.draw.to_string(),
            self.bond_dim.to_string(),
            float(self.kappa),
            float(self.s_ground),
            float(self.s_excited),
            float(self.deviation),
            float(self.spectrum_deviation),
        ]
    }
}

fn mps_check(cfg: &RunConfig) -> Result<(), CliError> {
    let mut rng = seeded_rng(cfg.seed);
    let mut rows = Vec::with_capacity(cfg.draws);
    for draw in 0..cfg.draws {
        let ump = random_mps(2, cfg.bond_dim, &mut rng)?;
        let exc = gauge_fix(&ump, &random_tensor(2, cfg.bond_dim, &mut rng), cfg.kappa)?;
        let ground = ground_spectrum(&ump)?;
        let spec = excitation_spectrum(&ump, &exc)?;
        let mut halves: Vec<f64> = ground.eigenvalues.iter().flat_map(|&x| [0.5 * x, 0.5 * x]).collect();
        halves.sort_by(|a, b| b.total_cmp(a));
        let spectrum_deviation = spec
            .eigenvalues
            .iter()
            .zip(&halves)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rows.push(DrawRow {
            draw,
            bond_dim: cfg.bond_dim,
            kappa: cfg.kappa,
            s_ground: ground.entropy,
            s_excited: spec.entropy,
            deviation: (spec.entropy - ground.entropy - LN_2).abs(),
            spectrum_deviation,
        });
    }
    let worst = rows.iter().map(|r| r.deviation.max(r.spectrum_deviation)).fold(0.0, f64::max);
    let pass = worst <= cfg.tolerance;
    let mut meta = base_meta(cfg);
    meta.push("physical_dim", 2);
    meta.push("max_deviation", float(worst));
    meta.push("pass", pass);
    write(cfg, &meta, &rows)?;
    if !pass {
        return Err(CliError::Numerical(format!(
            "max |S[Phi] - S[Omega] - log 2| = {worst:e} exceeds tolerance {:e}",
            cfg.tolerance
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub modes: String,
    pub reflection: Option<String>,
    #[serde(rename = "dS")]
    pub ds: f64,
    /// `log 2 - dS`.
    pub deficit: f64,
}

impl Record for ScalingRow {
    const COLUMNS: &'static [&'static str] = &["n", "modes", "reflection", "dS", "deficit"];

    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.modes.clone(),
            self.reflection.clone().unwrap_or_default(),
            float(self.ds),
            float(self.deficit),
        ]
    }
}

fn scaling(cfg: &RunConfig) -> Result<(), CliError> {
    let item = match cfg.modes.as_slice() {
        [item @ (ModeItem::Index(_) | ModeItem::Middle(_) | ModeItem::Momentum(_))] => item,
        _ => return Err(CliError::Config("scaling needs exactly one mode: an index, mid[+-k] or momentum:<q>".into())),
    };
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let row = single_rows(cfg, n, item)?.swap_remove(0);
        rows.push(ScalingRow {
            n,
            modes: row.state.render(),
            reflection: row.reflection.map(|p| p.symbol().to_string()),
            ds: row.ds,
            deficit: LN_2 - row.ds,
        });
    }
    let fit = fit_correction(&rows.iter().map(|r| (r.n as f64, r.deficit)).collect::<Vec<_>>())?;
    let mut meta = base_meta(cfg);
    mode_note(&mut meta);
    meta.push("fit", "least squares of ln(deficit) against ln(n)");
    meta.push("fit_exponent", float(fit.exponent));
    meta.push("fit_amplitude", float(fit.amplitude));
    meta.push("fit_r_squared", float(fit.r_squared));
    meta.push("fit_points", fit.points.len());
    meta.push("fit_excluded", fit.excluded.len());
    write(cfg, &meta, &rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiRow {
    pub n: usize,
    pub xi: f64,
    pub residual: f64,
    pub points: usize,
    pub window_start: usize,
    pub window_end: usize,
}

impl Record for XiRow {
    const COLUMNS: &'static [&'static str] = &["n", "xi", "residual", "points", "window_start", "window_end"];

    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            float(self.xi),
            float(self.residual),
            self.points.to_string(),
            self.window_start.to_string(),
            self.window_end.to_string(),
        ]
    }
}

fn xi(cfg: &RunConfig) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let model = SpinChainModel::new(cfg.model, n, cfg.boundary)?;
        let est = estimate_xi(&build_xy_majorana(&model)?)?;
        rows.push(XiRow {
            n,
            xi: est.xi,
            residual: est.residual,
            points: est.points,
            window_start: est.fit_window.start,
            window_end: est.fit_window.end,
        });
    }
    let mut meta = base_meta(cfg);
    meta.push("edge_fraction", XI_EDGE_FRACTION);
    meta.push("correlation_floor", format!("{XI_FLOOR:e}"));
    meta.push("gapless_below", format!("{XI_GAP_FACTOR} * max energy / n"));
    write(cfg, &meta, &rows)
}
