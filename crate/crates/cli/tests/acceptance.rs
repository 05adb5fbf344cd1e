//! Acceptance run: one PASS/FAIL line per criterion, every tolerance pinned
//! below. Built without the libtest harness so the lines always reach the
//! console; a failing criterion makes the process exit non-zero.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use steerkit::assemblage::{make_assemblage, Direction, Efficiency};
use steerkit::measurements::{mub, take_settings};
use steerkit::states::{qutrit_pes, QutritAngles};
use steerkit::steering::{loss_counted_sw, steering_weight, unsteerability_q, GeneralBoundConfig};

/// Reference plane for BtoA with four MUB settings.
const PLANE: f64 = 0.4818;
const PLANE_TOL: f64 = 2e-3;
const PLANE_SPREAD: f64 = 1e-3;
const ANALYTIC_TOL: f64 = 1e-6;
const QUBIT_TOL: f64 = 2e-3;
const LOSS_TOL: f64 = 1e-6;
const CHEAT_TOL: f64 = 1e-7;
const ONE_WAY_EXCESS: f64 = 0.05;
const ISOTROPIC_PHI: f64 = 0.9553;
const PHI_STEP: f64 = 0.1;
const LOSSY_EFFICIENCY: f64 = 0.85;
const DOMINANCE_SLACK: f64 = 1e-3;
const Q_TOL: f64 = 1e-6;
const FIXTURE_OBJECTIVE_TOL: f64 = 1e-6;
const FIXTURE_GAP_TOL: f64 = 1e-8;
/// Grid used by the surface criteria: 5x5, 0.1 rad from the range ends.
const GRID: [&str; 6] = ["--n-theta", "5", "--n-phi", "5", "--margin", "0.1"];

fn steerkit(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_steerkit"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn json(args: &[&str]) -> Result<Value, String> {
    let out = steerkit(args, &[]);
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()));
    }
    serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())
}

struct Cell {
    theta: f64,
    phi: f64,
    a2b: Option<f64>,
    b2a: Option<f64>,
}

fn parse_field(s: &str) -> Option<f64> {
    (!s.is_empty()).then(|| s.parse().expect("numeric CSV field"))
}

fn surface(dir: &Path, name: &str, extra: &[&str], threads: &str) -> Result<(Vec<u8>, Vec<Cell>), String> {
    let path = dir.join(name);
    let mut args = vec!["surface"];
    args.extend(GRID);
    args.extend(extra);
    let p = path.to_str().unwrap().to_string();
    args.extend(["--out", &p]);
    let out = steerkit(&args, &[("STEERKIT_THREADS", threads)]);
    if !out.status.success() {
        return Err(format!("surface {extra:?}: {}", String::from_utf8_lossy(&out.stderr).trim()));
    }
    let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| e.to_string())?;
    let cells = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            Cell { theta: f[0].parse().unwrap(), phi: f[1].parse().unwrap(), a2b: parse_field(f[2]), b2a: parse_field(f[3]) }
        })
        .collect();
    Ok((bytes, cells))
}

type Verdict = Result<(bool, String), String>;

fn plane_stats(cells: &[Cell]) -> Option<(f64, f64)> {
    let vals: Option<Vec<f64>> = cells.iter().map(|c| c.b2a).collect();
    let vals = vals?;
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Some((lo, hi))
}

fn c1(cells: &[Cell]) -> Verdict {
    let Some((lo, hi)) = plane_stats(cells) else {
        return Ok((false, "a BtoA threshold is missing".into()));
    };
    let within = (lo - PLANE).abs() <= PLANE_TOL && (hi - PLANE).abs() <= PLANE_TOL;
    let spread = hi - lo;
    Ok((
        within && spread <= PLANE_SPREAD,
        format!("{} cells, BtoA in [{lo:.6}, {hi:.6}], spread {spread:.2e} (tol {PLANE_TOL:e}, spread <= {PLANE_SPREAD:e})", cells.len()),
    ))
}

fn c2() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (d, want) in [(2, 0.5), (3, 0.416667), (5, 0.320833)] {
        let v = json(&["analytic", "--dim", &d.to_string()])?;
        let got = v["pstar_bta_general"].as_f64().unwrap();
        ok &= (got - want).abs() <= ANALYTIC_TOL;
        parts.push(format!("d={d}: {got:.6}"));
    }
    for (d, want) in [(2, 0.57735), (3, 0.25)] {
        let v = json(&["analytic", "--dim", &d.to_string()])?;
        let got = v["eta_mub"].as_f64().unwrap();
        ok &= (got - want).abs() <= ANALYTIC_TOL;
        parts.push(format!("eta d={d}: {got:.6}"));
    }
    Ok((ok, format!("{} (tol {ANALYTIC_TOL:e})", parts.join(", "))))
}

fn c3() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (m, want) in [(2, 0.5f64.sqrt()), (3, (1.0f64 / 3.0).sqrt())] {
        let v = json(&["pstar", "--state", "iso", "--dim", "2", "--settings", &m.to_string(), "--direction", "a2b"])?;
        let got = v["p_star"].as_f64();
        ok &= got.is_some_and(|g| (g - want).abs() <= QUBIT_TOL);
        parts.push(format!("m={m}: {got:?} vs {want:.6}"));
    }
    Ok((ok, format!("{} (tol {QUBIT_TOL:e})", parts.join(", "))))
}

fn c4() -> Verdict {
    let all = mub::<f64>(3).map_err(|e| e.to_string())?;
    let ms = take_settings(&all, 4).map_err(|e| e.to_string())?;
    let m = ms.settings() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_match, mut worst_cheat) = (0.0f64, 0.0f64);
    for i in 0..20 {
        let p = rng.gen_range(0.0..1.0);
        let angles = QutritAngles::new(rng.gen_range(0.0..FRAC_PI_4), rng.gen_range(0.0..std::f64::consts::FRAC_PI_2))
            .map_err(|e| e.to_string())?;
        let dir = if i % 2 == 0 { Direction::AtoB } else { Direction::BtoA };
        let rho = qutrit_pes(p, angles).map_err(|e| e.to_string())?;
        let asm = make_assemblage(&rho, &ms, dir).map_err(|e| e.to_string())?;
        let plain = steering_weight(&asm).map_err(|e| e.to_string())?.sw;
        let full = loss_counted_sw(&rho, &ms, dir, &Efficiency::Uniform(1.0)).map_err(|e| e.to_string())?.sw;
        worst_match = worst_match.max((plain - full).abs());
        for eps in [1.0 / m, 0.5 / m] {
            let cheat = loss_counted_sw(&rho, &ms, dir, &Efficiency::Uniform(eps)).map_err(|e| e.to_string())?.sw;
            worst_cheat = worst_cheat.max(cheat.abs());
        }
    }
    Ok((
        worst_match <= LOSS_TOL && worst_cheat <= CHEAT_TOL,
        format!(
            "20 points: max |sw(eps=1) - sw| = {worst_match:.1e} (tol {LOSS_TOL:e}), max sw(eps<=1/m) = {worst_cheat:.1e} (tol {CHEAT_TOL:e})"
        ),
    ))
}

fn c5(cells: &[Cell]) -> Verdict {
    let bar = PLANE + ONE_WAY_EXCESS;
    let witnesses: Vec<&Cell> = cells.iter().filter(|c| c.a2b.map_or(true, |v| v > bar)).collect();
    let best = cells.iter().filter_map(|c| c.a2b).fold(f64::NEG_INFINITY, f64::max);
    let detail = match witnesses.first() {
        Some(c) => format!(
            "{} cells with AtoB > {bar:.4}, e.g. (theta {:.4}, phi {:.4}) at {:?}; max AtoB {best:.6}",
            witnesses.len(),
            c.theta,
            c.phi,
            c.a2b
        ),
        None => format!("no cell above {bar:.4}; max AtoB {best:.6}"),
    };
    Ok((!witnesses.is_empty(), detail))
}

fn slice(eps: f64, phis: &[f64]) -> Result<Vec<Option<f64>>, String> {
    let theta = format!("{FRAC_PI_4}");
    let eps = format!("{eps}");
    phis.iter()
        .map(|phi| {
            let phi = format!("{phi}");
            let v = json(&[
                "pstar", "--state", "pes", "--dim", "3", "--theta", &theta, "--phi", &phi, "--direction", "a2b",
                "--settings", "4", "--efficiency", &eps,
            ])?;
            Ok(v["p_star"].as_f64())
        })
        .collect()
}

fn c6(plane: Option<f64>) -> Verdict {
    let phis: Vec<f64> = (0..11).map(|j| ISOTROPIC_PHI + (j as f64 - 5.0) * PHI_STEP).collect();
    let lossless = slice(1.0, &phis)?;
    let lossy = slice(LOSSY_EFFICIENCY, &phis)?;
    let value = |v: &Option<f64>| v.unwrap_or(f64::INFINITY);
    let dominates = lossless.iter().zip(&lossy).all(|(a, b)| a.is_some() && value(b) > value(a));
    let lossy_min = lossy.iter().map(value).fold(f64::INFINITY, f64::min);
    let (arg, lossless_min) = lossless
        .iter()
        .map(value)
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best });
    let reference = plane.unwrap_or(PLANE);
    let near = (phis[arg] - ISOTROPIC_PHI).abs() <= PHI_STEP / 2.0;
    let matches = (lossless_min - reference).abs() <= PLANE_TOL;
    Ok((
        dominates && lossy_min > PLANE && near && matches,
        format!(
            "11 phi samples: eps={LOSSY_EFFICIENCY} dominates pointwise: {dominates}, its min {lossy_min:.6} (> {PLANE}); eps=1 min {lossless_min:.6} at phi {:.4} vs BtoA plane {reference:.6} (tol {PLANE_TOL:e})",
            phis[arg]
        ),
    ))
}

fn c7(dir: &Path, sw: &[Cell]) -> Verdict {
    let (_, general) = surface(dir, "general.csv", &["--mode", "general", "--directions", "a2b"], "1")?;
    let mut worst = f64::NEG_INFINITY;
    let mut dominated = true;
    for (g, s) in general.iter().zip(sw) {
        let gv = g.a2b.unwrap_or(0.0);
        let sv = s.a2b.unwrap_or(f64::INFINITY);
        worst = worst.max(gv - sv);
        dominated &= gv <= sv + DOMINANCE_SLACK;
    }
    let gmin = general.iter().filter_map(|c| c.a2b).fold(f64::INFINITY, f64::min);
    let gmax = general.iter().filter_map(|c| c.a2b).fold(f64::NEG_INFINITY, f64::max);

    let ms = mub::<f64>(3).map_err(|e| e.to_string())?;
    let cfg = GeneralBoundConfig::new(0.25, ms).map_err(|e| e.to_string())?;
    let product = qutrit_pes(0.0, QutritAngles::new(0.3, 0.0).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let q = unsteerability_q(&product, &cfg, Direction::AtoB).map_err(|e| e.to_string())?;
    let q_ok = q.certified_unsteerable && q.q.is_some_and(|v| (v - 1.0).abs() <= Q_TOL);
    Ok((
        dominated && q_ok,
        format!(
            "{} cells, general AtoB in [{gmin:.6}, {gmax:.6}], max(general - sw) = {worst:.6} (slack {DOMINANCE_SLACK:e}); product Q = {:?} (tol {Q_TOL:e})",
            general.len(),
            q.q
        ),
    ))
}

fn c8(dir: &Path) -> Verdict {
    let (_, cells) = surface(dir, "two.csv", &["--settings", "2", "--directions", "both"], "1")?;
    let tol = 1e-4;
    let candidate = cells.iter().find_map(|c| {
        let a = c.a2b?;
        match c.b2a {
            None => Some((c, (a + 1.0) / 2.0)),
            Some(b) if b > a + 4.0 * tol => Some((c, (a + b) / 2.0)),
            _ => None,
        }
    });
    let Some((cell, p)) = candidate else {
        return Ok((false, "no cell with AtoB below BtoA".into()));
    };
    let (theta, phi, pp) = (format!("{}", cell.theta), format!("{}", cell.phi), format!("{p}"));
    let at = |d: &str| {
        json(&[
            "sw", "--state", "pes", "--dim", "3", "--p", &pp, "--theta", &theta, "--phi", &phi, "--direction", d, "--settings", "2",
        ])
    };
    let a = at("a2b")?;
    let b = at("b2a")?;
    let ok = a["steerable"] == true && b["steerable"] == false;
    Ok((
        ok,
        format!(
            "witness (p {p:.6}, theta {:.4}, phi {:.4}): AtoB sw {:.3e} steerable {}, BtoA sw {:.3e} steerable {} (first two MUBs)",
            cell.theta, cell.phi, a["sw"].as_f64().unwrap_or(f64::NAN), a["steerable"], b["sw"].as_f64().unwrap_or(f64::NAN), b["steerable"]
        ),
    ))
}

fn c9() -> Verdict {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures");
    let text = std::fs::read_to_string(root.join("oracle.json")).map_err(|e| e.to_string())?;
    let oracle: BTreeMap<String, Value> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    let (mut worst_obj, mut worst_gap) = (0.0f64, 0.0f64);
    let mut infeasible = 0;
    for (name, want) in &oracle {
        let path = root.join("sdp").join(format!("{name}.json"));
        let out = steerkit(&["solve-sdp", "--problem", path.to_str().unwrap()], &[]);
        let sol: Value = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
        if sol["status"] != want["status"] {
            bad.push(format!("{name}: {} vs {}", sol["status"], want["status"]));
            continue;
        }
        if want["status"] == "optimal" {
            let err = (sol["objective_value"].as_f64().unwrap_or(f64::NAN) - want["objective"].as_f64().unwrap()).abs();
            let gap = sol["gap"].as_f64().unwrap_or(f64::NAN);
            worst_obj = worst_obj.max(err);
            worst_gap = worst_gap.max(gap);
            if !(err <= FIXTURE_OBJECTIVE_TOL && gap <= FIXTURE_GAP_TOL) {
                bad.push(format!("{name}: objective error {err:e}, gap {gap:e}"));
            }
        } else {
            infeasible += 1;
        }
    }
    Ok((
        bad.is_empty() && oracle.len() == 25 && infeasible == 5,
        format!(
            "{} fixtures ({infeasible} infeasible), max objective error {worst_obj:.1e} (tol {FIXTURE_OBJECTIVE_TOL:e}), max gap {worst_gap:.1e} (tol {FIXTURE_GAP_TOL:e}){}",
            oracle.len(),
            if bad.is_empty() { String::new() } else { format!("; mismatches: {}", bad.join("; ")) }
        ),
    ))
}

fn c10(dir: &Path, first: &[u8]) -> Verdict {
    let (second, _) = surface(dir, "rerun.csv", &["--directions", "both"], "8")?;
    Ok((first == second.as_slice(), format!("{} bytes, STEERKIT_THREADS=1 vs 8, identical: {}", first.len(), first == second.as_slice())))
}

fn report(n: usize, verdict: Verdict, started: Instant, failures: &mut usize) {
    let (pass, detail) = verdict.unwrap_or_else(|e| (false, format!("error: {e}")));
    if !pass {
        *failures += 1;
    }
    println!("criterion {n:>2}: {} | {detail} | {:.0}s", if pass { "PASS" } else { "FAIL" }, started.elapsed().as_secs_f64());
}

fn main() {
    // Respect `cargo test -- <filter>` style invocations that target other tests.
    if std::env::args().skip(1).any(|a| !a.starts_with('-') && !"acceptance".contains(a.as_str())) {
        return;
    }
    let dir = tempfile::tempdir().expect("scratch directory");
    let mut failures = 0;

    let t = Instant::now();
    let sweep = surface(dir.path(), "four.csv", &["--directions", "both"], "1");
    let (bytes, cells) = match sweep {
        Ok(s) => s,
        Err(e) => {
            println!("criterion  1: FAIL | error: {e}");
            std::process::exit(1);
        }
    };
    report(1, c1(&cells), t, &mut failures);
    report(2, c2(), Instant::now(), &mut failures);
    report(3, c3(), Instant::now(), &mut failures);
    report(4, c4(), Instant::now(), &mut failures);
    report(5, c5(&cells), Instant::now(), &mut failures);
    let plane = plane_stats(&cells).map(|(lo, hi)| (lo + hi) / 2.0);
    report(6, c6(plane), Instant::now(), &mut failures);
    report(7, c7(dir.path(), &cells), Instant::now(), &mut failures);
    report(8, c8(dir.path()), Instant::now(), &mut failures);
    report(9, c9(), Instant::now(), &mut failures);
    report(10, c10(dir.path(), &bytes), Instant::now(), &mut failures);

    println!("acceptance: {} of 10 criteria pass", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
