//! Acceptance gate: runs every criterion and prints one line each.
//! Exits non-zero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spinstar::classical_geometric::{
    classical_ensemble, collapse_table, entanglement_phase_identity, pancharatnam_phase, resolve_m,
    LoopSpec, Orientation,
};
use spinstar::coherent_states::{husimi_q, CoherentPoint};
use spinstar::parametric_rep::{
    effective_field, field_intensity, p_density, p_distribution, qubit_state, theta_map,
    uniform_grid, Endpoints, DEFAULT_GRID_POINTS,
};
use spinstar::ring_spectrum::{critical_ratios, diagonalize_ring, RingConfig};
use spinstar::star_model::{eigenstate, entanglement, StarEigenstate, StarModel};
use spinstar::{Branch, HalfInt};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const COLLAPSE_RATIOS: [f64; 4] = [9.0 / 11.0, 3.0 / 11.0, -3.0 / 11.0, -9.0 / 11.0];
const COLLAPSE_SPINS: [i32; 5] = [5, 16, 27, 38, 49];

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn all_states(spin: i32) -> Vec<StarEigenstate> {
    let mut out = Vec::new();
    for m_twice in (-(2 * spin) - 1..=2 * spin + 1).step_by(2) {
        for branch in [Branch::Plus, Branch::Minus] {
            if let Ok(st) = eigenstate(
                HalfInt::from_int(spin),
                HalfInt::from_twice(m_twice),
                branch,
            ) {
                out.push(st);
            }
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    for sites in [4, 6, 8, 10, 12] {
        let start = Instant::now();
        let spec = diagonalize_ring(&RingConfig::new(sites, 1.0).map_err(err)?).map_err(err)?;
        let alpha0 = critical_ratios(&spec).map_err(err)?.alphas()[0];
        let secs = start.elapsed().as_secs_f64();
        worst = worst.max((alpha0 - 0.25).abs());
        slowest = slowest.max(secs);
        if (alpha0 - 0.25).abs() > 1e-10 || secs >= 60.0 {
            return Err(format!("N={sites}: alpha_0={alpha0:.17} in {secs:.2}s"));
        }
    }
    Ok(format!(
        "max |alpha_0 - 1/4| = {worst:.2e}, slowest ED {slowest:.2}s"
    ))
}

fn criterion_2() -> Outcome {
    for sites in (2..=12).step_by(2) {
        let spec = diagonalize_ring(&RingConfig::new(sites, 1.0).map_err(err)?).map_err(err)?;
        let e = spec.energies();
        if let Some(s) = (0..e.len() - 1).find(|&s| e[s] >= e[s + 1]) {
            return Err(format!(
                "N={sites}: E_B({s}) = {} >= E_B({}) = {}",
                e[s],
                s + 1,
                e[s + 1]
            ));
        }
        if !spec.lieb_mattis_holds() {
            return Err(format!("N={sites}: lieb_mattis_holds() is false"));
        }
    }
    Ok("E_B(S) < E_B(S+1) for every S, N = 2..12".into())
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for sites in (2..=12).step_by(2) {
        let spec = diagonalize_ring(&RingConfig::new(sites, 1.0).map_err(err)?).map_err(err)?;
        let e = spec.energy(sites / 2 - 1);
        let expected = 0.25 - 2.0 / sites as f64;
        worst = worst.max((e - expected).abs());
    }
    if worst > 1e-10 {
        return Err(format!("max deviation {worst:.2e}"));
    }
    Ok(format!("max |E_B(N/2-1) - (1/4 - 2/N)| = {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for sites in [4, 6] {
        let model = StarModel::new(RingConfig::new(sites, 1.0).map_err(err)?, 1.0).map_err(err)?;
        for spin in 1..=sites as i32 / 2 {
            for st in all_states(spin) {
                let dense = model.build_dense_eigenstate(&st).map_err(err)?;
                worst = worst.max(model.residual(&dense, model.energy(&st).map_err(err)?));
                count += 1;
            }
        }
    }
    if worst >= 1e-8 {
        return Err(format!("max residual {worst:.2e}"));
    }
    Ok(format!(
        "{count} eigenstates, max |H psi - E psi| = {worst:.2e}"
    ))
}

fn criterion_5() -> Outcome {
    let grid = uniform_grid(100);
    let mut worst: f64 = 0.0;
    for sites in [4, 6] {
        let model = StarModel::new(RingConfig::new(sites, 1.0).map_err(err)?, 1.0).map_err(err)?;
        for spin in 1..=sites as i32 / 2 {
            let ladder = model.ring_ladder(spin as usize).map_err(err)?;
            for st in all_states(spin) {
                let rho = model
                    .build_dense_eigenstate(&st)
                    .map_err(err)?
                    .reduced_ring(&ladder);
                for &theta in &grid {
                    let point = CoherentPoint::new(st.spin(), theta, 0.7).map_err(err)?;
                    let lhs = st.s_tilde() * theta.sin() * husimi_q(&rho, &point).map_err(err)?;
                    worst = worst.max((lhs - p_density(&st, theta)).abs());
                }
            }
        }
    }
    if worst > 1e-10 {
        return Err(format!("max deviation {worst:.2e}"));
    }
    Ok(format!("max |S~ sin(theta) Q - p| = {worst:.2e}"))
}

fn criterion_6() -> Outcome {
    let grid = uniform_grid(DEFAULT_GRID_POINTS);
    let mut worst: f64 = 0.0;
    for &s in &COLLAPSE_SPINS {
        let spin = HalfInt::from_int(s);
        for ratio in COLLAPSE_RATIOS {
            for branch in [Branch::Plus, Branch::Minus] {
                let m = resolve_m(spin, ratio, branch).map_err(err)?;
                let st = eigenstate(spin, m, branch).map_err(err)?;
                let dist = p_distribution(&st, &grid).map_err(err)?;
                worst = worst.max((dist.integral - 1.0).abs());
            }
        }
    }
    if worst > 1e-8 {
        return Err(format!("max |integral - 1| = {worst:.2e}"));
    }
    Ok(format!(
        "max |integral - 1| = {worst:.2e} over 40 distributions"
    ))
}

fn criterion_7() -> Outcome {
    let spins: Vec<HalfInt> = COLLAPSE_SPINS.iter().map(|&s| HalfInt::from_int(s)).collect();
    let mut ratios = Vec::new();
    for target in COLLAPSE_RATIOS {
        let table = collapse_table(&spins, target, Branch::Minus).map_err(err)?;
        let r = table.rows[4].std / table.rows[0].std;
        if !table.is_collapsing() {
            return Err(format!(
                "M/S~ = {target:.4}: std or shift not strictly decreasing"
            ));
        }
        if !(0.25..=0.45).contains(&r) {
            return Err(format!("M/S~ = {target:.4}: std ratio {r:.4}"));
        }
        ratios.push(format!("{r:.3}"));
    }
    Ok(format!(
        "strictly collapsing; std(49)/std(5) = [{}]",
        ratios.join(", ")
    ))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for s in [5, 49] {
        for st in all_states(s)
            .into_iter()
            .filter(|st| st.branch() == Branch::Minus)
        {
            for _ in 0..1000 {
                let theta = rng.random_range(0.0..=PI);
                let big = theta_map(&st, theta, Endpoints::Limit).map_err(err)?;
                worst = worst.max((big - (PI - theta)).abs());
            }
        }
    }
    if worst > 1e-14 {
        return Err(format!("max deviation {worst:.2e}"));
    }
    Ok(format!("max |Theta - (pi - theta)| = {worst:.2e}"))
}

fn criterion_9() -> Outcome {
    let mut worst: f64 = 0.0;
    for s in [5, 49] {
        for st in all_states(s) {
            let ens = classical_ensemble(st.spin(), st.m(), st.branch()).map_err(err)?;
            let e = entanglement(st.spin(), st.m()).map_err(err)?;
            worst = worst.max((ens.entropy - e).abs());
        }
    }
    if worst > 1e-12 {
        return Err(format!("max deviation {worst:.2e}"));
    }
    Ok(format!("max |S_vN - E| = {worst:.2e}"))
}

fn criterion_10() -> Outcome {
    const K: usize = 100_000;
    let mut worst_phase: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for m_twice in (-11..=11).step_by(2) {
        let (spin, m) = (HalfInt::from_int(5), HalfInt::from_twice(m_twice));
        let x = f64::from(m_twice) / 11.0;
        if x.abs() < 1.0 {
            let polar = x.acos();
            let plus = pancharatnam_phase(
                &LoopSpec::new(polar, Orientation::Counterclockwise, K).map_err(err)?,
            )
            .map_err(err)?;
            let minus =
                pancharatnam_phase(&LoopSpec::new(polar, Orientation::Clockwise, K).map_err(err)?)
                    .map_err(err)?;
            worst_phase = worst_phase
                .max((plus - PI * (1.0 + x)).abs())
                .max((minus - PI * (1.0 - x)).abs());
        }
        let id = entanglement_phase_identity(spin, m, K).map_err(err)?;
        worst_residual = worst_residual.max(id.residual);
    }
    if worst_phase >= 1e-6 || worst_residual >= 1e-8 {
        return Err(format!(
            "phase error {worst_phase:.2e}, identity residual {worst_residual:.2e}"
        ));
    }
    Ok(format!(
        "K=1e5: max |gamma_K - gamma| = {worst_phase:.2e}, max residual = {worst_residual:.2e}"
    ))
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = 1.0;
    let mut worst: f64 = 0.0;
    for st in all_states(5) {
        for _ in 0..50 {
            let theta = rng.random_range(0.0..=PI);
            let phi = rng.random_range(0.0..TAU);
            let field = effective_field(&st, g, 10, theta, phi).map_err(err)?;
            let ket = qubit_state(&st, theta, phi, Endpoints::Limit)
                .map_err(err)?
                .ket();
            let h = field.zeeman();
            let applied = [
                h[(0, 0)] * ket[0] + h[(0, 1)] * ket[1],
                h[(1, 0)] * ket[0] + h[(1, 1)] * ket[1],
            ];
            let target: [Complex64; 2] = [
                ket[0] * (0.5 * field.epsilon),
                ket[1] * (0.5 * field.epsilon),
            ];
            worst = worst
                .max((applied[0] - target[0]).norm())
                .max((applied[1] - target[1]).norm());
            let closed = st.branch().sign() * (g / 10.0) * (st.s_tilde() - st.branch().sign());
            if (field.epsilon - closed).abs() > 1e-15 {
                return Err(format!(
                    "epsilon {} differs from closed form {closed}",
                    field.epsilon
                ));
            }
        }
    }
    if worst > 1e-12 {
        return Err(format!("eigen-relation defect {worst:.2e}"));
    }
    let mut previous = [f64::INFINITY; 2];
    let mut last = [0.0; 2];
    for sites in [10usize, 100, 1_000, 10_000, 100_000, 1_000_000] {
        let spin = HalfInt::from_int(sites as i32 / 2);
        for (i, branch) in [Branch::Plus, Branch::Minus].into_iter().enumerate() {
            let m = if branch == Branch::Plus {
                spin.twice() + 1
            } else {
                spin.twice() - 1
            };
            let st = eigenstate(spin, HalfInt::from_twice(m), branch).map_err(err)?;
            let gap = (field_intensity(&st, g, sites).abs() - g / 2.0).abs();
            if gap >= previous[i] {
                return Err(format!("| |epsilon| - g/2 | not decreasing at N={sites}"));
            }
            previous[i] = gap;
            last[i] = gap;
        }
    }
    if last[0] > 1e-5 || last[1] > 1e-5 {
        return Err(format!("| |epsilon| - g/2 | at N=1e6: {last:?}"));
    }
    Ok(format!(
        "eigen-relation defect {worst:.2e}; | |epsilon| - g/2 | at N=1e6: {:.1e} (+), {:.1e} (-)",
        last[0], last[1]
    ))
}

fn run_cli(args: &[&str], out: &Path) -> Result<(), String> {
    let mut full: Vec<&str> = args.to_vec();
    let out = out.to_str().ok_or("non-UTF-8 path")?;
    full.extend(["--out", out]);
    let status = Command::new(env!("CARGO_BIN_EXE_spinstar"))
        .args(&full)
        .status()
        .map_err(err)?;
    if !status.success() {
        return Err(format!("{args:?} exited with {status}"));
    }
    Ok(())
}

fn snapshot(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(err)? {
            let path = entry.map_err(err)?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let name = path
                    .strip_prefix(dir)
                    .map_err(err)?
                    .to_string_lossy()
                    .into_owned();
                files.push((name, fs::read(&path).map_err(err)?));
            }
        }
    }
    files.sort();
    Ok(files)
}

fn criterion_12() -> Outcome {
    let runs: [&[&str]; 5] = [
        &[
            "distributions",
            "--S",
            "5,16",
            "--M-ratio",
            "9/11",
            "--branch",
            "minus",
        ],
        &["phase-diagram", "--N", "8", "--format", "json"],
        &["crossover", "--M-ratio", "-3/11", "--S", "5,16,27"],
        &["berry", "--S", "5", "--M", "9/2", "--K", "4096"],
        &["selftest", "--seed", "3"],
    ];
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        let root = tempfile::tempdir().map_err(err)?;
        for (i, args) in runs.iter().enumerate() {
            let target = if args[0] == "distributions" {
                root.path().join(format!("run{i}"))
            } else {
                root.path().join(format!("run{i}.out"))
            };
            run_cli(args, &target)?;
        }
        snapshots.push(snapshot(root.path())?);
    }
    if snapshots[0] != snapshots[1] {
        return Err("outputs differ between identical runs".into());
    }
    let bytes: usize = snapshots[0].iter().map(|(_, b)| b.len()).sum();
    Ok(format!(
        "{} files, {bytes} bytes identical across two runs",
        snapshots[0].len()
    ))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("phase diagram alpha_0 = 1/4", criterion_1),
        ("Lieb-Mattis ordering", criterion_2),
        ("one-magnon energy", criterion_3),
        ("eigenstate oracle", criterion_4),
        ("Husimi identity", criterion_5),
        ("normalization", criterion_6),
        ("crossover", criterion_7),
        ("ground-state map", criterion_8),
        ("classical ensemble entropy", criterion_9),
        ("Berry identity", criterion_10),
        ("effective field", criterion_11),
        ("determinism", criterion_12),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
