use std::fs;

use serde::Serialize;
use serde_json::json;
use steerkit::assemblage::{make_assemblage, Direction, Efficiency};
use steerkit::measurements::{mub, mub_vectors, reorder_settings, take_settings, verify_mub, MeasurementSet};
use steerkit::sdp::{solve, ProblemDocument, SdpStatus, SolutionDocument};
use steerkit::states::{QutritAngles, StateFamily};
use steerkit::steering::{
    analytic_pstar_bta, analytic_pstar_bta_exact, critical_p, harmonic, harmonic_number, loss_counted_sw, shrinking_factor_mub,
    steering_weight, Mode, ThresholdSpec,
};

use crate::args::{AnalyticArgs, DirectionArg, FamilyArgs, ModeArg, MubArgs, PstarArgs, SolveSdpArgs, StateKind, SwArgs};
use crate::output::{emit, to_json, ResultRecord};
use crate::CliError;

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::A2b => Direction::AtoB,
            DirectionArg::B2a => Direction::BtoA,
        }
    }
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sw => Mode::Sw,
            ModeArg::General => Mode::General,
        }
    }
}

/// MUB settings: `order` picks explicit indices, otherwise the first
/// `settings` in canonical order (all `d + 1` by default).
pub fn measurement_set(
    dim: usize,
    settings: Option<usize>,
    order: Option<&[usize]>,
) -> Result<MeasurementSet<f64>, CliError> {
    let all = mub::<f64>(dim)?;
    let ms = match order {
        Some(order) => {
            if let Some(m) = settings {
                if m != order.len() {
                    return Err(CliError::Usage(format!(
                        "--settings {m} disagrees with {} indices in --setting-order",
                        order.len()
                    )));
                }
            }
            reorder_settings(&all, order)?
        }
        None => take_settings(&all, settings.unwrap_or(dim + 1))?,
    };
    Ok(ms)
}

pub fn state_family(args: &FamilyArgs) -> Result<StateFamily<f64>, CliError> {
    match args.state {
        StateKind::Iso => {
            if args.theta.is_some() || args.phi.is_some() || args.amps.is_some() {
                return Err(CliError::Usage("isotropic states take no --theta/--phi/--amps".into()));
            }
            Ok(StateFamily::Isotropic { dim: args.dim })
        }
        StateKind::Pes => match (&args.amps, args.theta, args.phi) {
            (Some(amps), None, None) => {
                if amps.len() != args.dim {
                    return Err(CliError::Usage(format!(
                        "{} amplitudes given for dimension {}",
                        amps.len(),
                        args.dim
                    )));
                }
                Ok(StateFamily::PartiallyEntangled { amps: amps.clone() })
            }
            (None, Some(theta), Some(phi)) => {
                if args.dim != 3 {
                    return Err(CliError::Usage("--theta/--phi describe two-qutrit states; use --amps".into()));
                }
                Ok(StateFamily::qutrit(QutritAngles::new(theta, phi)?))
            }
            _ => Err(CliError::Usage("pes states need either --theta and --phi, or --amps".into())),
        },
    }
}

#[derive(Debug, Serialize)]
struct FamilyParams {
    state: &'static str,
    dim: usize,
    theta: Option<f64>,
    phi: Option<f64>,
    amps: Option<Vec<f64>>,
    direction: Direction,
    settings: usize,
    setting_order: Option<Vec<usize>>,
    efficiency: f64,
}

fn family_params(args: &FamilyArgs, settings: usize) -> FamilyParams {
    FamilyParams {
        state: match args.state {
            StateKind::Pes => "pes",
            StateKind::Iso => "iso",
        },
        dim: args.dim,
        theta: args.theta,
        phi: args.phi,
        amps: args.amps.clone(),
        direction: args.direction.into(),
        settings,
        setting_order: args.setting_order.clone(),
        efficiency: args.efficiency,
    }
}

pub fn cmd_sw(args: &SwArgs) -> Result<String, CliError> {
    let fam = &args.family;
    let ms = measurement_set(fam.dim, fam.settings, fam.setting_order.as_deref())?;
    let family = state_family(fam)?;
    let rho = family.at(args.p)?;
    let dir: Direction = fam.direction.into();
    let eps = Efficiency::Uniform(fam.efficiency);
    let verdict = if fam.efficiency == 1.0 {
        steering_weight(&make_assemblage(&rho, &ms, dir)?)?
    } else {
        loss_counted_sw(&rho, &ms, dir, &eps)?
    };
    #[derive(Serialize)]
    struct Out {
        sw: f64,
        mu: f64,
        steerable: bool,
        status: SdpStatus,
        gap: f64,
        iterations: usize,
    }
    #[derive(Serialize)]
    struct Params {
        #[serde(flatten)]
        family: FamilyParams,
        p: f64,
    }
    let record = ResultRecord::new(
        Out {
            sw: verdict.sw,
            mu: verdict.mu,
            steerable: verdict.steerable,
            status: verdict.solver.status,
            gap: verdict.solver.gap,
            iterations: verdict.solver.iterations,
        },
        Params { family: family_params(fam, ms.settings()), p: args.p },
    );
    emit(fam.out.as_deref(), to_json(&record)?)
}

pub fn threshold_spec(
    dir: Direction,
    ms: MeasurementSet<f64>,
    mode: Mode,
    efficiency: f64,
    eta: Option<f64>,
    tol: f64,
    scan: Option<usize>,
) -> Result<ThresholdSpec<f64>, CliError> {
    let dim = ms.dim();
    let mut spec = ThresholdSpec::new(dir, ms, mode);
    spec.efficiency = Efficiency::Uniform(efficiency);
    spec.tol_p = tol;
    spec.scan = scan;
    spec.eta = match eta {
        Some(e) => e,
        None => shrinking_factor_mub(dim)?,
    };
    Ok(spec)
}

pub fn cmd_pstar(args: &PstarArgs) -> Result<String, CliError> {
    let fam = &args.family;
    let ms = measurement_set(fam.dim, fam.settings, fam.setting_order.as_deref())?;
    let settings = ms.settings();
    let family = state_family(fam)?;
    let spec = threshold_spec(fam.direction.into(), ms, args.mode.into(), fam.efficiency, args.eta, args.tol, args.scan)?;
    let cp = critical_p(&family, &spec)?;
    #[derive(Serialize)]
    struct Out {
        p_star: Option<f64>,
        mode: Mode,
        bracket: Option<(f64, f64)>,
        solves: usize,
        uncertified: usize,
    }
    #[derive(Serialize)]
    struct Params {
        #[serde(flatten)]
        family: FamilyParams,
        tol: f64,
        eta: Option<f64>,
        scan: Option<usize>,
    }
    let eta = (spec.mode == Mode::General).then_some(spec.eta);
    let record = ResultRecord::new(
        Out { p_star: cp.p_star, mode: cp.mode, bracket: cp.bracket, solves: cp.solves, uncertified: cp.uncertified },
        Params { family: family_params(fam, settings), tol: args.tol, eta, scan: args.scan },
    );
    emit(fam.out.as_deref(), to_json(&record)?)
}

pub fn cmd_analytic(args: &AnalyticArgs) -> Result<String, CliError> {
    let d = args.dim;
    if d < 2 {
        return Err(CliError::Usage(format!("--dim must be at least 2, got {d}")));
    }
    let h = harmonic_number(d);
    let value = json!({
        "dim": d,
        "pstar_bta_general": analytic_pstar_bta::<f64>(d)?,
        "eta_mub": shrinking_factor_mub::<f64>(d)?,
        "harmonic": harmonic::<f64>(d),
        "harmonic_exact": h.to_string(),
        "pstar_bta_exact": analytic_pstar_bta_exact(d)?.to_string(),
        "prime_power_note": "eta_mub applies only for prime-power dimension",
        "version": crate::output::VERSION,
    });
    to_json(&value)
}

pub fn cmd_mub(args: &MubArgs) -> Result<String, CliError> {
    let bases = mub_vectors::<f64>(args.dim)?;
    let report = verify_mub(&bases);
    let value = json!({
        "dim": args.dim,
        "bases": bases.len(),
        "max_gram_error": report.max_gram_error,
        "max_overlap_error": report.max_overlap_error,
        "passed": report.passed(1e-12),
    });
    to_json(&value)
}

pub fn cmd_solve_sdp(args: &SolveSdpArgs) -> Result<String, CliError> {
    let text = fs::read_to_string(&args.problem).map_err(|e| CliError::Io(format!("{}: {e}", args.problem.display())))?;
    let doc: ProblemDocument =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", args.problem.display())))?;
    let problem = doc.to_problem::<f64>()?;
    let sol = solve(&problem)?;
    let out = to_json(&SolutionDocument::from_solution(&sol))?;
    if sol.status == SdpStatus::NumericFailure {
        return Err(CliError::Solver { message: "solver reported numeric failure".into(), report: Some(out) });
    }
    Ok(out)
}
