//! Parallel threshold sweeps. Cells are independent; results are gathered
//! by index so output order never depends on scheduling.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use steerkit::assemblage::Direction;
use steerkit::states::{QutritAngles, StateFamily};
use steerkit::steering::{critical_p, CriticalPoint, Mode};

use crate::args::{DirectionsArg, LosscurveArgs, SurfaceArgs};
use crate::commands::{measurement_set, threshold_spec};
use crate::output::{emit, fixed6, to_json, write_atomic, VERSION};
use crate::CliError;

pub const THREADS_ENV: &str = "STEERKIT_THREADS";

/// Worker pool sized by `STEERKIT_THREADS` (all cores when unset).
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSpec {
    pub dim: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub margin: f64,
    pub settings: usize,
    pub setting_order: Option<Vec<usize>>,
    pub efficiency: f64,
    pub directions: Vec<Direction>,
    pub mode: Mode,
    pub eta: Option<f64>,
    pub tol_p: f64,
}

impl SweepSpec {
    pub fn from_args(args: &SurfaceArgs) -> Result<Self, CliError> {
        if args.dim != 3 {
            return Err(CliError::Usage(format!("surface sweeps are two-qutrit only (--dim 3), got {}", args.dim)));
        }
        if args.n_theta < 2 || args.n_phi < 2 {
            return Err(CliError::Usage("grid counts must be at least 2".into()));
        }
        if !(args.margin >= 0.0 && args.margin < FRAC_PI_4 / 2.0) {
            return Err(CliError::Usage(format!("margin {} outside [0, pi/8)", args.margin)));
        }
        let directions = match args.directions {
            DirectionsArg::A2b => vec![Direction::AtoB],
            DirectionsArg::B2a => vec![Direction::BtoA],
            DirectionsArg::Both => vec![Direction::AtoB, Direction::BtoA],
        };
        Ok(Self {
            dim: args.dim,
            n_theta: args.n_theta,
            n_phi: args.n_phi,
            margin: args.margin,
            settings: args.setting_order.as_ref().map_or(args.settings, Vec::len),
            setting_order: args.setting_order.clone(),
            efficiency: args.efficiency,
            directions,
            mode: args.mode.into(),
            eta: args.eta,
            tol_p: args.tol,
        })
    }

    pub fn thetas(&self) -> Vec<f64> {
        grid(self.margin, FRAC_PI_4 - self.margin, self.n_theta)
    }

    pub fn phis(&self) -> Vec<f64> {
        grid(self.margin, FRAC_PI_2 - self.margin, self.n_phi)
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceCell {
    pub theta: f64,
    pub phi: f64,
    pub a2b: Option<CriticalPoint<f64>>,
    pub b2a: Option<CriticalPoint<f64>>,
}

/// Thresholds on the grid in theta-major order.
pub fn run_surface(spec: &SweepSpec) -> Result<Vec<SurfaceCell>, CliError> {
    let ms = measurement_set(spec.dim, Some(spec.settings), spec.setting_order.as_deref())?;
    let thetas = spec.thetas();
    let phis = spec.phis();
    let jobs: Vec<(usize, usize, Direction)> = (0..thetas.len())
        .flat_map(|i| (0..phis.len()).flat_map(move |j| spec.directions.iter().map(move |&d| (i, j, d))))
        .collect();
    let specs = spec
        .directions
        .iter()
        .map(|&d| threshold_spec(d, ms.clone(), spec.mode, spec.efficiency, spec.eta, spec.tol_p, None))
        .collect::<Result<Vec<_>, _>>()?;
    let pool = thread_pool()?;
    let results: Vec<Result<CriticalPoint<f64>, CliError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, j, d)| {
                let family = StateFamily::qutrit(QutritAngles::new(thetas[i], phis[j])?);
                let k = spec.directions.iter().position(|&x| x == d).expect("listed direction");
                Ok(critical_p(&family, &specs[k])?)
            })
            .collect()
    });
    let mut cells: Vec<SurfaceCell> = thetas
        .iter()
        .flat_map(|&theta| phis.iter().map(move |&phi| SurfaceCell { theta, phi, a2b: None, b2a: None }))
        .collect();
    for ((i, j, d), r) in jobs.into_iter().zip(results) {
        let cp = r?;
        let cell = &mut cells[i * phis.len() + j];
        match d {
            Direction::AtoB => cell.a2b = Some(cp),
            Direction::BtoA => cell.b2a = Some(cp),
        }
    }
    Ok(cells)
}

pub fn surface_csv(cells: &[SurfaceCell]) -> String {
    let mut out = String::from("theta,phi,pstar_a2b,pstar_b2a\n");
    for c in cells {
        let a = c.a2b.as_ref().and_then(|cp| cp.p_star);
        let b = c.b2a.as_ref().and_then(|cp| cp.p_star);
        out.push_str(&format!("{:.6},{:.6},{},{}\n", c.theta, c.phi, fixed6(a), fixed6(b)));
    }
    out
}

pub fn sidecar_path(out: &Path) -> std::path::PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".json");
    out.with_file_name(name)
}

pub fn cmd_surface(args: &SurfaceArgs) -> Result<String, CliError> {
    let spec = SweepSpec::from_args(args)?;
    let cells = run_surface(&spec)?;
    let csv = surface_csv(&cells);
    #[derive(Serialize)]
    struct Sidecar<'a> {
        spec: &'a SweepSpec,
        csv: String,
        version: &'static str,
        timestamp: String,
        cells: &'a [SurfaceCell],
    }
    let sidecar = Sidecar {
        spec: &spec,
        csv: args.out.display().to_string(),
        version: VERSION,
        timestamp: chrono::Utc::now().to_rfc3339(),
        cells: &cells,
    };
    write_atomic(&args.out, &csv)?;
    write_atomic(&sidecar_path(&args.out), &to_json(&sidecar)?)?;
    Ok(String::new())
}

/// `(epsilon, threshold)` rows for the isotropic family.
pub fn run_losscurve(args: &LosscurveArgs) -> Result<Vec<(f64, CriticalPoint<f64>)>, CliError> {
    let ms = measurement_set(args.dim, Some(args.settings), None)?;
    let family = StateFamily::Isotropic { dim: args.dim };
    let specs = args
        .eps_grid
        .iter()
        .map(|&e| threshold_spec(Direction::AtoB, ms.clone(), Mode::Sw, e, None, args.tol, None))
        .collect::<Result<Vec<_>, _>>()?;
    let pool = thread_pool()?;
    let results: Vec<Result<CriticalPoint<f64>, CliError>> =
        pool.install(|| specs.par_iter().map(|s| Ok(critical_p(&family, s)?)).collect());
    args.eps_grid.iter().zip(results).map(|(&e, r)| Ok((e, r?))).collect()
}

pub fn cmd_losscurve(args: &LosscurveArgs) -> Result<String, CliError> {
    let rows = run_losscurve(args)?;
    let mut csv = String::from("epsilon,p_star\n");
    for (e, cp) in &rows {
        csv.push_str(&format!("{:.6},{}\n", e, fixed6(cp.p_star)));
    }
    emit(args.out.as_deref(), csv)
}
