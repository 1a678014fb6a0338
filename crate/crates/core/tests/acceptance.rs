//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use quasient::analysis::{
    classify_quasiparticles, fit_correction, in_exclusion_window, scan_single_particle, scan_three_particle,
    three_particle_fixed_modes, ModeSelection, ModelFamily, ScanRow, StateLabel, Sweep,
};
use quasient::ed::{create_quasiparticle, excess_table, lowest_eigenstates_with, schmidt_spectrum, EdOptions};
use quasient::freefermion::{
    diagonalize, half_chain_mode_weight, schmidt_probabilities, Bipartition, ExcitationSpec, QuasiparticleBasis,
};
use quasient::model::{build_spin_matrix, build_xy_majorana, SpinChainModel};
use quasient::mpsx::window::block_window_spectrum;
use quasient::mpsx::{excitation_spectrum, gauge_fix, ground_spectrum, random_mps, random_tensor, seeded_rng};
use quasient::{Result, LN_2};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn xy_basis(gamma: f64, h: f64, n: usize) -> Result<QuasiparticleBasis> {
    diagonalize(&build_xy_majorana(&SpinChainModel::xy(gamma, h, n)?)?)
}

/// Excess entropies of every single excitation, gathered for criterion 5.
#[derive(Default)]
struct SingleExcitations {
    values: Vec<f64>,
}

impl SingleExcitations {
    fn extend(&mut self, v: impl IntoIterator<Item = f64>) {
        self.values.extend(v);
    }
}

fn criterion_1(singles: &mut SingleExcitations) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    let mut states = 0;
    for gamma in [0.25, 0.5, 1.0] {
        for h in [0.5, 0.9, 2.0] {
            for n in [6, 8, 10, 12] {
                let model = SpinChainModel::xy(gamma, h, n)?;
                let basis = diagonalize(&build_xy_majorana(&model)?)?;
                let cut = Bipartition::new(&basis, n / 2)?;
                let hmat = build_spin_matrix(&model)?;
                let mut opts = EdOptions {
                    parity_sector: Some(basis.vacuum_parity()),
                    ..EdOptions::default()
                };
                opts.lanczos.tol = 1e-11;
                let ground = lowest_eigenstates_with(&hmat, 1, &opts)?.swap_remove(0);
                worst_residual = worst_residual.max(ground.residual(&hmat));
                let s_ed = schmidt_spectrum(&ground.vector, n / 2)?.entropy;
                worst = worst.max((s_ed - cut.ground_entropy()).abs());
                states += 1;
                for k in 0..n {
                    let psi = create_quasiparticle(&basis, k, &ground.vector)?;
                    let s_ed_k = schmidt_spectrum(&psi, n / 2)?.entropy;
                    let s_ff = cut.excited(&ExcitationSpec::single(k))?.entropy;
                    worst = worst.max((s_ed_k - s_ff).abs());
                    singles.extend([s_ff - cut.ground_entropy(), s_ed_k - s_ed]);
                    // the created state must be an eigenstate at E_0 + ε_k
                    let e = ground.energy + basis.energies()[k];
                    let hpsi = hmat.matvec_complex(&psi);
                    let r = hpsi.iter().zip(&psi).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt();
                    worst_residual = worst_residual.max(r);
                    states += 1;
                }
            }
        }
    }
    Ok(outcome(
        worst <= 1e-9,
        format!("{states} states, max |S_fermion - S_ED| = {worst:.2e} (tol 1e-9), max eigen-residual {worst_residual:.1e}"),
    ))
}

fn bulk_modes(basis: &QuasiparticleBasis) -> Vec<usize> {
    let n = basis.n();
    let edge = (0.05 * n as f64).ceil() as usize;
    (edge..n - edge).filter(|k| !basis.zero_modes().contains(k)).collect()
}

fn criterion_2(singles: &mut SingleExcitations) -> Result<Outcome> {
    let n = 512;
    let basis = xy_basis(0.5, 0.9, n)?;
    let rows = scan_single_particle(&ModelFamily::xy(0.5, 0.9), &[n], &ModeSelection::All)?;
    singles.extend(rows.iter().map(|r| r.ds));
    let bulk = bulk_modes(&basis);
    let mut max_dev: f64 = 0.0;
    let mut below = true;
    for &k in &bulk {
        let ds = rows[k].ds;
        below &= ds < LN_2;
        max_dev = max_dev.max(LN_2 - ds);
    }
    // ± labels alternate mode by mode along the band
    let labels: Vec<_> = bulk.iter().map(|&k| rows[k].reflection).collect();
    let resolved = labels.iter().all(|l| l.is_some());
    let alternating = labels.windows(2).all(|w| w[0] != w[1]);
    Ok(outcome(
        below && max_dev <= 0.02 && resolved && alternating,
        format!(
            "{} bulk modes of {n}: all below log 2: {below}, max (log 2 - dS) = {max_dev:.2e} (tol 0.02), \
             labels alternate: {}",
            bulk.len(),
            resolved && alternating
        ),
    ))
}

fn criterion_3(singles: &mut SingleExcitations) -> Result<Outcome> {
    let sizes = [128, 256, 512, 1024];
    let fam = ModelFamily::xy(0.5, 0.9);
    let mut details = Vec::new();
    let mut pass = true;
    // the modes just below and above phase π/2 form two branches; at every n
    // they carry opposite reflection labels, though which branch is + can
    // change with n
    let mut branches: Vec<Vec<(f64, f64)>> = vec![Vec::new(), Vec::new()];
    let mut labels: Vec<String> = vec![String::new(), String::new()];
    for &n in &sizes {
        let rows = scan_single_particle(&fam, &[n], &ModeSelection::Indices(vec![n / 2 - 1, n / 2]))?;
        pass &= rows[0].reflection.is_some() && rows[1].reflection.is_some() && rows[0].reflection != rows[1].reflection;
        for (b, row) in rows.into_iter().enumerate() {
            singles.extend([row.ds]);
            labels[b] += row.reflection.map_or("?", |l| l.symbol());
            branches[b].push((n as f64, LN_2 - row.ds));
        }
    }
    for (b, points) in branches.iter().enumerate() {
        let fit = fit_correction(points)?;
        pass &= (fit.exponent + 1.0).abs() <= 0.15 && fit.excluded.is_empty();
        details.push(format!(
            "mode n/2{} (labels {}): exponent {:.4} (r2 {:.5})",
            if b == 0 { "-1" } else { "" },
            labels[b],
            fit.exponent,
            fit.r_squared
        ));
    }
    Ok(outcome(pass, format!("{} (target -1 +/- 0.15)", details.join(", "))))
}

fn criterion_4() -> Result<Outcome> {
    let n = 512;
    let scan = scan_three_particle(&ModelFamily::xy(1.0, 2.0), &[n], &Sweep::All)?;
    let mut plateau_dev: f64 = 0.0;
    let mut peak_min = f64::INFINITY;
    for row in &scan.rows {
        let i = sweep_index(row, n);
        if in_exclusion_window(n, i) {
            peak_min = peak_min.min(row.ds);
        } else {
            plateau_dev = plateau_dev.max((row.ds - 3.0 * LN_2).abs());
        }
    }
    Ok(outcome(
        plateau_dev <= 0.05 && peak_min > 2.0 * LN_2,
        format!(
            "{} rows, {} collisions skipped; plateau max |dS - 3 log 2| = {plateau_dev:.2e} (tol 0.05), \
             peak-region min dS/log 2 = {:.4} (> 2)",
            scan.rows.len(),
            scan.skipped.len(),
            peak_min / LN_2
        ),
    ))
}

fn sweep_index(row: &ScanRow, n: usize) -> usize {
    let (a, b) = three_particle_fixed_modes(n);
    let StateLabel::Modes(m) = &row.state else { unreachable!() };
    *m.iter().find(|&&k| k != a && k != b).expect("sweep mode")
}

fn criterion_5(singles: &SingleExcitations) -> Outcome {
    let max = singles.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        max <= LN_2 + 1e-9,
        format!("{} single-excitation values, max dS - log 2 = {:.2e} (tol 1e-9)", singles.values.len(), max - LN_2),
    )
}

/// Largest relative spread inside consecutive groups of `size`.
fn group_spread(p: &[f64], size: usize) -> f64 {
    p.chunks_exact(size)
        .map(|g| {
            let hi = g.iter().copied().fold(f64::MIN, f64::max);
            let lo = g.iter().copied().fold(f64::MAX, f64::min);
            (hi - lo) / hi
        })
        .fold(0.0, f64::max)
}

fn criterion_6() -> Result<Outcome> {
    let n = 512;
    let basis = xy_basis(1.0, 1.02, n)?;
    let cut = Bipartition::new(&basis, n / 2)?;
    let (k1, k2) = (n / 4, n / 4 + 2);
    let same_class = basis.state_reflection(&[k1]) == basis.state_reflection(&[k2]);
    let single = cut.excited(&ExcitationSpec::single(k1))?;
    let double = cut.excited(&ExcitationSpec::new(vec![k1, k2])?)?;
    let p1 = schmidt_probabilities(&single.nu, 64);
    let p2 = schmidt_probabilities(&double.nu, 64);
    let s1 = group_spread(&p1, 2);
    let s2 = group_spread(&p2, 4);
    Ok(outcome(
        same_class && p1.len() == 64 && p2.len() == 64 && s1 <= 1e-3 && s2 <= 1e-2,
        format!("XY(1,1.02) n={n} modes {k1},{k2} (same class {same_class}), {} and {} probabilities: pair spread {s1:.2e} (tol 1e-3), quartet spread {s2:.2e} (tol 1e-2)", p1.len(), p2.len()),
    ))
}

fn criterion_7() -> Result<Outcome> {
    let sizes = [128usize, 256, 512];
    let mut details = Vec::new();
    let mut pass = true;
    for (name, pick) in [
        ("lowest bulk", (|_n: usize| 1usize) as fn(usize) -> usize),
        ("phase pi/2 (-)", |n| n / 2 - 1),
        ("phase pi/2 (+)", |n| n / 2),
    ] {
        let mut scaled = Vec::new();
        for &n in &sizes {
            let basis = xy_basis(0.5, 0.9, n)?;
            scaled.push(half_chain_mode_weight(&basis, pick(n), n / 2)? * n as f64);
        }
        let dev = scaled.iter().map(|s| (s / scaled[0] - 1.0).abs()).fold(0.0, f64::max);
        pass &= dev <= 0.25;
        let shown: Vec<String> = scaled.iter().map(|x| format!("{x:.4e}")).collect();
        details.push(format!("{name}: n*w = [{}], max rel dev {dev:.3}", shown.join(", ")));
    }
    Ok(outcome(pass, format!("{} (tol 0.25)", details.join("; "))))
}

fn criterion_8() -> Result<Outcome> {
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); 2];
    let mut in_range = true;
    let mut last = Vec::new();
    for n in [10, 12, 14] {
        let model = SpinChainModel::tilted_ising(1.0, 1.0, 1.0, n)?;
        let table = excess_table(&model, 8)?;
        for (j, s) in series.iter_mut().enumerate() {
            s.push(table[j + 1].excess);
        }
        in_range &= table[1..3].iter().all(|r| r.excess > 0.0 && r.excess <= LN_2 + 0.02);
        last = table[1..3].iter().map(|r| r.excess).collect();
    }
    let monotone = series.iter().all(|s| s.windows(2).all(|w| w[1] > w[0]));
    let relaxed = last.iter().all(|&ds| {
        let c = classify_quasiparticles(ds, 0.35);
        c.k == 1 && c.is_regular
    });
    let fmt: Vec<String> = series
        .iter()
        .enumerate()
        .map(|(j, s)| format!("state {}: dS/log 2 = {:.4?}", j + 1, s.iter().map(|x| x / LN_2).collect::<Vec<_>>()))
        .collect();
    Ok(outcome(
        monotone && in_range && relaxed,
        format!("n = 10,12,14; {}; monotone {monotone}, in range {in_range}, k=1 at n=14 {relaxed}", fmt.join("; ")),
    ))
}

fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

fn criterion_9() -> Result<(Outcome, Outcome)> {
    let mut rng = seeded_rng(2024);
    let mut ds_dev: f64 = 0.0;
    let mut spec_dev: f64 = 0.0;
    let mut oracle_ds: f64 = 0.0;
    let mut oracle_spec: f64 = 0.0;
    let mut draws = 0;
    for bond in [2, 4, 8] {
        for kappa in [0.0, FRAC_PI_2, PI] {
            for draw in 0..20 {
                let ump = random_mps(2, bond, &mut rng)?;
                let ground = ground_spectrum(&ump)?;
                let exc = gauge_fix(&ump, &random_tensor(2, bond, &mut rng), kappa)?;
                let spec = excitation_spectrum(&ump, &exc)?;
                ds_dev = ds_dev.max((spec.entropy - ground.entropy - LN_2).abs());
                let mut twice: Vec<f64> = ground.eigenvalues.iter().flat_map(|&x| [0.5 * x, 0.5 * x]).collect();
                twice.sort_by(|a, b| b.total_cmp(a));
                for (a, b) in spec.eigenvalues.iter().zip(&twice) {
                    spec_dev = spec_dev.max((a - b).abs());
                }
                spec_dev = spec_dev.max((spec.eigenvalues.len() as f64 - twice.len() as f64).abs());
                draws += 1;
                if draw == 0 {
                    // finite windows approach the identity as 1/W; two Richardson
                    // steps over W, 2W, 4W remove the leading corrections
                    let w = 8192;
                    let p: Vec<Vec<f64>> = [w, 2 * w, 4 * w].iter().map(|&x| block_window_spectrum(&ump, &exc, x)).collect();
                    let rich = |f: &dyn Fn(&[f64]) -> f64| (8.0 * f(&p[2]) - 6.0 * f(&p[1]) + f(&p[0])) / 3.0;
                    oracle_ds = oracle_ds.max((rich(&entropy) - ground.entropy - LN_2).abs());
                    // degenerate pairs split as W^{-1/2} but their means converge as 1/W
                    for i in 0..bond {
                        let mean = rich(&|q: &[f64]| 0.5 * (q[2 * i] + q[2 * i + 1]));
                        oracle_spec = oracle_spec.max((mean - 0.5 * ground.eigenvalues[i]).abs());
                    }
                }
            }
        }
    }
    let identity = outcome(
        ds_dev <= 1e-8 && spec_dev <= 1e-8,
        format!("{draws} draws: max |S[Phi] - S[Omega] - log 2| = {ds_dev:.2e}, max spectrum dev = {spec_dev:.2e} (tol 1e-8)"),
    );
    let oracle = outcome(
        oracle_ds <= 1e-7 && oracle_spec <= 1e-7,
        format!(
            "finite-window oracle (W = 8192..32768, extrapolated), 9 cases: dS dev {oracle_ds:.2e}, pair-mean dev {oracle_spec:.2e} (tol 1e-7)"
        ),
    );
    Ok((identity, oracle))
}

fn criterion_10() -> Result<Outcome> {
    let n = 1024;
    let basis = xy_basis(0.5, 0.9, n)?;
    let cut = Bipartition::new(&basis, n / 2)?;
    let modes = [n / 4 - 1, n / 2 - 1, 3 * n / 4 - 1];
    let class = basis.state_reflection(&[modes[0]]);
    let same = modes.iter().all(|&k| basis.state_reflection(&[k]) == class);
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for k in 1..=3 {
        let ds = cut.excess(&ExcitationSpec::new(modes[..k].to_vec())?)?;
        worst = worst.max((ds - k as f64 * LN_2).abs());
        parts.push(format!("k={k}: {:.4}", ds / LN_2));
    }
    Ok(outcome(
        same && worst <= 0.05,
        format!("XY(0.5,0.9) n={n} modes {modes:?}: dS/log 2 {}; max |dS - k log 2| = {worst:.2e} (tol 0.05)", parts.join(", ")),
    ))
}

fn report(label: &str, result: Result<Outcome>, started: Instant, failures: &mut Vec<String>) {
    let secs = started.elapsed().as_secs_f64();
    match result {
        Ok(o) => {
            println!("{} criterion {label}: {} [{secs:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            if !o.pass {
                failures.push(label.to_string());
            }
        }
        Err(e) => {
            println!("FAIL criterion {label}: error {e} [{secs:.1}s]");
            failures.push(label.to_string());
        }
    }
}

fn main() {
    let mut failures = Vec::new();
    let mut singles = SingleExcitations::default();

    let t = Instant::now();
    report("1", criterion_1(&mut singles), t, &mut failures);
    let t = Instant::now();
    report("2", criterion_2(&mut singles), t, &mut failures);
    let t = Instant::now();
    report("3", criterion_3(&mut singles), t, &mut failures);
    let t = Instant::now();
    report("4", criterion_4(), t, &mut failures);
    let t = Instant::now();
    report("5", Ok(criterion_5(&singles)), t, &mut failures);
    let t = Instant::now();
    report("6", criterion_6(), t, &mut failures);
    let t = Instant::now();
    report("7", criterion_7(), t, &mut failures);
    let t = Instant::now();
    report("8", criterion_8(), t, &mut failures);
    let t = Instant::now();
    match criterion_9() {
        Ok((identity, oracle)) => {
            report("9", Ok(identity), t, &mut failures);
            report("9 (oracle)", Ok(oracle), t, &mut failures);
        }
        Err(e) => report("9", Err(e), t, &mut failures),
    }
    let t = Instant::now();
    report("10", criterion_10(), t, &mut failures);

    if failures.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {}", failures.join(", "));
        std::process::exit(1);
    }
}
