use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use multisym::acceptance::{run_all, AcceptanceOptions, CriterionReport};
use multisym::checks::{legendre_table, run_check, Check, ClosedFormCase, VerifyConfig, VerifyReport};
use multisym::dynamics::{InitPreset, Lattice1p1};
use multisym::perturbation::{fit_slope, geometric, lambda_scaling_study, Phi1Preset, ScalingConfig, ScalingReport};

use crate::{CliError, EvolveArgs, LegendreArgs, Outcome, PerturbArgs, SuiteArgs, VerifyArgs};

/// Largest Newton-versus-closed-form gap accepted by `legendre`.
const LEGENDRE_TOL: f64 = 1e-8;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty JSON with a trailing newline. Struct fields keep declaration
/// order and maps are sorted, so equal inputs give equal bytes.
fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    writeln!(w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
        path: PathBuf::from("<stdout>"),
        source,
    })?;
    println!("{text}");
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn outcome(pass: bool) -> Outcome {
    if pass {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

fn parse_init(s: &str) -> Result<InitPreset, CliError> {
    s.parse().map_err(|e: multisym::dynamics::DynamicsError| CliError::Usage(e.to_string()))
}

pub fn legendre(a: LegendreArgs) -> Result<Outcome, CliError> {
    let cases: Vec<ClosedFormCase> = if a.lagrangian == "all" {
        ClosedFormCase::ALL.to_vec()
    } else {
        vec![a.lagrangian.parse()?]
    };
    let rows = legendre_table(&cases, a.samples, a.seed)?;
    let sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    let worst = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    eprintln!("legendre: {} points, max abs error {worst:e}", rows.len());
    Ok(outcome(worst <= LEGENDRE_TOL))
}

/// Everything needed to reproduce an `evolve` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub lattice: Lattice1p1,
    pub m: f64,
    pub lambda: f64,
    pub init: InitPreset,
    pub h0: f64,
}

pub fn evolve(a: EvolveArgs) -> Result<Outcome, CliError> {
    let cfg = match &a.config {
        Some(p) => read_json(p)?,
        None => EvolveConfig {
            lattice: Lattice1p1::new(a.nt, a.nx, a.dt, a.dx)?,
            m: a.m,
            lambda: a.lambda,
            init: parse_init(&a.init)?,
            h0: 0.0,
        },
    };
    cfg.lattice.validate()?;
    let (phi0, phidot0) = cfg.init.data(&cfg.lattice, cfg.m);
    let phi = multisym::dynamics::evolve_scalar(&phi0, &phidot0, cfg.m, cfg.lambda, &cfg.lattice)?;
    let curve = multisym::dynamics::lift_to_curve(phi, cfg.m, cfg.lambda, cfg.h0, &cfg.lattice);
    let l = &cfg.lattice;
    let mut w = csv::Writer::from_writer(create(&a.out)?);
    let mut header = vec!["n".to_string(), "t".to_string()];
    for name in ["phi", "p0", "p1", "e"] {
        header.extend((0..l.nx).map(|j| format!("{name}_{j}")));
    }
    w.write_record(&header)?;
    for n in 0..l.nt {
        let mut record = vec![n.to_string(), l.time(n).to_string()];
        for g in [&curve.phi, &curve.p[0], &curve.p[1], &curve.e] {
            record.extend(g.row(n).iter().map(f64::to_string));
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(csv::Error::from)?;
    write_json(&sidecar(&a.out), &cfg)?;
    Ok(Outcome::Pass)
}

pub fn verify(a: VerifyArgs) -> Result<Outcome, CliError> {
    let check: Check = a.check.parse()?;
    let cfg: VerifyConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => VerifyConfig::default(),
    };
    let report: VerifyReport = run_check(check, &cfg)?;
    print_json(&report)?;
    if let Some(p) = &a.out {
        write_json(p, &report)?;
    }
    Ok(outcome(report.pass))
}

/// A verdict file carries its configuration under `config`; a bare
/// configuration is accepted too.
#[derive(Deserialize)]
#[serde(untagged)]
enum SavedScaling {
    Verdict { config: ScalingConfig },
    Config(ScalingConfig),
}

fn scaling_config(a: &PerturbArgs) -> Result<ScalingConfig, CliError> {
    if let Some(p) = &a.config {
        return Ok(match read_json::<SavedScaling>(p)? {
            SavedScaling::Verdict { config } | SavedScaling::Config(config) => config,
        });
    }
    if a.n_lambda == 0 {
        return Err(CliError::Usage("--n-lambda must be at least 1".into()));
    }
    if a.n_lambda > 1 && !(a.lambda_min > 0.0 && a.lambda_max > a.lambda_min) {
        return Err(CliError::Usage("a geometric λ grid needs 0 < --lambda-min < --lambda-max".into()));
    }
    let lattice = Lattice1p1::new(a.nt, a.nx, a.dt, a.dx)?;
    // rows are snapped to the lattice; the slab edges sit half a step outside
    let row = |t: f64| (t / a.dt + 1e-9).floor();
    let n0 = a.t0.map_or(4.0, |t| (t / a.dt - 1e-9).ceil());
    let n1 = a.t1.map_or(a.nt.saturating_sub(8) as f64, row);
    if !(n0 >= 0.0 && n1 >= 0.0) {
        return Err(CliError::Usage("--t0 and --t1 must be non-negative".into()));
    }
    Ok(ScalingConfig {
        lattice,
        m: a.m,
        lambdas: geometric(a.lambda_min, a.lambda_max, a.n_lambda),
        init: parse_init(&a.init)?,
        phi1: a.phi1.parse::<Phi1Preset>().map_err(|e| CliError::Usage(e.to_string()))?,
        n0: n0 as usize,
        n1: n1 as usize,
    })
}

#[derive(Serialize)]
struct ScalingCsvRow {
    lambda: f64,
    r1: f64,
    r2: f64,
    volume: f64,
    /// Slope of `|R₁|` between this λ and the previous one.
    local_slope1: Option<f64>,
    local_slope2: Option<f64>,
}

#[derive(Serialize)]
struct Verdict<'a> {
    slope1: Option<f64>,
    slope2: Option<f64>,
    free_residual: Option<f64>,
    pass: bool,
    config: &'a ScalingConfig,
}

pub fn perturb(a: PerturbArgs) -> Result<Outcome, CliError> {
    let cfg = scaling_config(&a)?;
    let report: ScalingReport = lambda_scaling_study(&cfg)?;
    let verdict = Verdict {
        slope1: report.slope1,
        slope2: report.slope2,
        free_residual: report.free_residual,
        pass: report.pass,
        config: &report.config,
    };
    if let Some(path) = &a.out {
        let mut w = csv::Writer::from_writer(create(path)?);
        for (i, row) in report.rows.iter().enumerate() {
            let local = |f: fn(&multisym::perturbation::ScalingRow) -> f64| {
                (i > 0).then(|| fit_slope(&[report.rows[i - 1].lambda, row.lambda], &[f(&report.rows[i - 1]), f(row)])).flatten()
            };
            w.serialize(ScalingCsvRow {
                lambda: row.lambda,
                r1: row.r1,
                r2: row.r2,
                volume: row.volume,
                local_slope1: local(|r| r.r1),
                local_slope2: local(|r| r.r2),
            })?;
        }
        w.flush().map_err(csv::Error::from)?;
        write_json(&sidecar(path), &verdict)?;
    }
    print_json(&verdict)?;
    Ok(outcome(report.pass))
}

#[derive(Serialize)]
struct SuiteReport<'a> {
    options: AcceptanceOptions,
    pass: bool,
    criteria: &'a [CriterionReport],
}

pub fn suite(a: SuiteArgs) -> Result<Outcome, CliError> {
    let options = AcceptanceOptions {
        quick: a.quick,
        seed: a.seed,
    };
    let reports = run_all(&options);
    for r in &reports {
        println!("{}", r.summary());
    }
    let pass = reports.iter().all(|r| r.pass);
    if let Some(p) = &a.out {
        write_json(
            p,
            &SuiteReport {
                options,
                pass,
                criteria: &reports,
            },
        )?;
    }
    Ok(outcome(pass))
}
