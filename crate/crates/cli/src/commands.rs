use std::env;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use saddlepoint::generate::{box_instance, entropy_instance, rng_from_seed, transport_instance};
use saddlepoint::oracles::grid::MAX_GRID_POINTS;
use saddlepoint::oracles::vertices::MAX_SIDE;
use saddlepoint::{
    certify_candidate, certify_transport, entropy_oracle_grid, gauge, ot_oracle_vertices, pgauge_sandwich,
    potentials_from_plan, solve_box, solve_equality, solve_ot, support_of_levelset, Certificate, Constraint,
    MomentProblem, Potentials, SolveOptions, SolveStatus, Tolerances, TransportPlan, TransportProblem,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Exit};
use crate::files::{
    floats, reals, to_json, CertificateFile, EntropyProblemFile, EntropySolutionFile, GaugeSpecFile, MetaFile,
    OracleFile, OtProblemFile, OtSolutionFile, ProblemFile, Real, SolutionFile,
};
use crate::{CertifyArgs, Format, GaugeArgs, GaugeOp, GenArgs, GenKind, SolveEntropyArgs, SolveOtArgs};

/// Environment variable consulted when `--tol` is absent.
pub const TOL_ENV: &str = "SADDLEPOINT_TOL";

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Grid spacing of the entropy oracle and its slack as a multiple of it.
const GRID_STEP: f64 = 1e-3;
const GRID_SLACK: f64 = 4.0;

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => io::stdout().write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

/// Writes the JSON document to `--out` (or stdout), and with `--format csv`
/// the flat table to stdout.
fn emit<T: Serialize>(
    doc: &T,
    out: Option<&Path>,
    format: Format,
    csv: impl FnOnce() -> Result<String, CliError>,
) -> Result<(), CliError> {
    match format {
        Format::Json => write_text(out, &to_json(doc)),
        Format::Csv => {
            if out.is_some() {
                write_text(out, &to_json(doc))?;
            }
            write_text(None, &csv()?)
        }
    }
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::structural(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

fn check_tol(tol: f64, source: &str) -> Result<f64, CliError> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(CliError::structural(format!(
            "{source}: tolerance must be positive and finite"
        )));
    }
    Ok(tol)
}

fn parse_tol(text: &str, source: &str) -> Result<f64, CliError> {
    let tol: f64 = text
        .trim()
        .parse()
        .map_err(|_| CliError::structural(format!("{source}: {text:?} is not a number")))?;
    check_tol(tol, source)
}

/// `--tol`, then `SADDLEPOINT_TOL`, then `None`.
pub fn resolve_tol(flag: Option<f64>) -> Result<Option<f64>, CliError> {
    if let Some(t) = flag {
        return check_tol(t, "--tol").map(Some);
    }
    match env::var(TOL_ENV) {
        Ok(v) => parse_tol(&v, TOL_ENV).map(Some),
        Err(env::VarError::NotPresent) => Ok(None),
        Err(env::VarError::NotUnicode(_)) => Err(CliError::structural(format!("{TOL_ENV} is not valid unicode"))),
    }
}

fn load_entropy(path: &Path) -> Result<MomentProblem<f64>, CliError> {
    match read_json::<ProblemFile>(path)? {
        ProblemFile::Entropy(f) => f.build(),
        ProblemFile::Ot(_) => Err(CliError::structural(format!(
            "{}: expected an entropy problem, found kind \"ot\"",
            path.display()
        ))),
    }
}

fn load_ot(path: &Path) -> Result<TransportProblem<f64>, CliError> {
    match read_json::<ProblemFile>(path)? {
        ProblemFile::Ot(f) => f.build(),
        ProblemFile::Entropy(_) => Err(CliError::structural(format!(
            "{}: expected a transport problem, found kind \"entropy\"",
            path.display()
        ))),
    }
}

fn report_certificate(c: &Certificate<f64>) -> Exit {
    if c.passes() {
        Exit::Success
    } else {
        eprintln!("saddlepoint: certificate failed: {}", c.failures().join(", "));
        Exit::CertificateFailed
    }
}

// ------------------------------------------------------------ solve-entropy

fn grid_oracle(p: &MomentProblem<f64>, value: f64, converged: bool) -> OracleFile {
    let unavailable = |note: String| OracleFile {
        method: "grid".into(),
        available: false,
        value: None,
        bound: None,
        step: None,
        agrees: false,
        note: Some(note),
    };
    if p.target().is_none() {
        return unavailable("the grid oracle handles equality constraints only".into());
    }
    if p.n_points() > MAX_GRID_POINTS {
        return unavailable(format!("support larger than {MAX_GRID_POINTS} points"));
    }
    // about (cap/h)^free · (2·slack/h)^K points are visited, so coarsen the
    // grid as the number of free directions grows
    let free = p.n_points().saturating_sub(p.n_features());
    let step = match free {
        0 | 1 => GRID_STEP,
        2 => GRID_STEP * 10.0,
        _ => GRID_STEP * 30.0,
    };
    match entropy_oracle_grid(p, step, GRID_SLACK * step) {
        Err(e) => unavailable(e.to_string()),
        Ok(rep) => {
            let (agrees, note) = match rep.value {
                Some(v) => (value >= v - 1e-9 && value <= v + rep.bound, None),
                // no grid point meets the constraints: agreement means the
                // solver did not claim a solution either
                None => (!converged, Some("no feasible grid point".to_string())),
            };
            OracleFile {
                method: "grid".into(),
                available: true,
                value: rep.value.map(Real),
                bound: Some(Real(rep.bound)),
                step: Some(Real(step)),
                agrees,
                note,
            }
        }
    }
}

pub fn solve_entropy(args: &SolveEntropyArgs) -> Result<Exit, CliError> {
    let p = load_entropy(&args.problem)?;
    let tol = resolve_tol(args.tol)?;
    let tolerances = tol.map_or_else(Tolerances::entropy, Tolerances::uniform);
    let mut opts = SolveOptions::<f64>::default();
    if let Some(t) = tol {
        opts.tol = opts.tol.min(t);
    }
    if let Some(n) = args.max_iter {
        opts.max_iter = n;
    }

    let mut doc = match p.constraint() {
        Constraint::Equality(_) => {
            let s = solve_equality(&p, &opts)?;
            EntropySolutionFile {
                y: reals(&s.dual.y),
                q: reals(s.primal.q.weights()),
                value: Real(s.primal.value),
                moments: Some(reals(&s.primal.moments)),
                target: None,
                bounds: None,
                certificate: CertificateFile::from(&Certificate {
                    tolerances,
                    ..s.certificate
                }),
                oracle: None,
                meta: MetaFile {
                    version: VERSION.into(),
                    tolerances: tolerances.into(),
                    iterations: s.dual.iterations,
                    status: s.dual.status.name().into(),
                    solver_tol: Some(Real(opts.tol)),
                    qualification_margin: s.qualification.and_then(|q| q.margin).map(Real),
                },
            }
        }
        Constraint::Box { .. } => {
            let s = solve_box(&p, &opts)?;
            EntropySolutionFile {
                y: reals(&s.dual.y),
                q: reals(s.primal.q.weights()),
                value: Real(s.primal.value),
                moments: Some(reals(&s.primal.moments)),
                target: Some(reals(&s.target)),
                bounds: Some(s.bounds.iter().map(|b| format!("{b:?}").to_lowercase()).collect()),
                certificate: CertificateFile::from(&Certificate {
                    tolerances,
                    ..s.certificate
                }),
                oracle: None,
                meta: MetaFile {
                    version: VERSION.into(),
                    tolerances: tolerances.into(),
                    iterations: s.outer_iterations,
                    status: s.dual.status.name().into(),
                    solver_tol: Some(Real(opts.tol)),
                    qualification_margin: None,
                },
            }
        }
    };
    let converged = doc.meta.status == SolveStatus::Converged.name();
    if args.oracle {
        doc.oracle = Some(grid_oracle(&p, doc.value.0, converged));
    }

    let ids: Vec<String> = p.reference().support().iter().map(|s| s.id.clone()).collect();
    emit(
        &SolutionFile::Entropy(doc.clone()),
        args.out.as_deref(),
        args.format,
        || {
            csv_table(
                &["id", "reference", "Q"],
                ids.iter().enumerate().map(|(z, id)| {
                    vec![
                        id.clone(),
                        p.reference().weights()[z].to_string(),
                        doc.q[z].0.to_string(),
                    ]
                }),
            )
        },
    )?;

    if !converged {
        eprintln!(
            "saddlepoint: solve did not converge (status={}, qualification={})",
            doc.meta.status, doc.certificate.qualification
        );
        return Ok(Exit::NotConverged);
    }
    let cert = doc.certificate.to_certificate()?;
    let exit = report_certificate(&cert);
    if exit != Exit::Success {
        return Ok(exit);
    }
    if let Some(o) = doc.oracle.as_ref().filter(|o| o.available && !o.agrees) {
        eprintln!(
            "saddlepoint: oracle disagrees: solver {} vs grid {:?} (bound {:?})",
            doc.value.0,
            o.value.map(|v| v.0),
            o.bound.map(|v| v.0)
        );
        return Ok(Exit::CertificateFailed);
    }
    Ok(Exit::Success)
}

// ----------------------------------------------------------------- solve-ot

fn vertex_oracle(p: &TransportProblem<f64>, cost: f64) -> OracleFile {
    if p.m() > MAX_SIDE || p.n() > MAX_SIDE {
        return OracleFile {
            method: "vertices".into(),
            available: false,
            value: None,
            bound: None,
            step: None,
            agrees: false,
            note: Some(format!("more than {MAX_SIDE} sources or sinks")),
        };
    }
    match ot_oracle_vertices(p) {
        Ok(rep) => {
            let bound = 1e-9 * (1.0 + rep.cost.abs());
            OracleFile {
                method: "vertices".into(),
                available: true,
                value: Some(Real(rep.cost)),
                bound: Some(Real(bound)),
                step: None,
                agrees: (cost - rep.cost).abs() <= bound,
                note: None,
            }
        }
        Err(e) => OracleFile {
            method: "vertices".into(),
            available: false,
            value: None,
            bound: None,
            step: None,
            agrees: false,
            note: Some(e.to_string()),
        },
    }
}

fn plan_rows(plan: &TransportPlan<f64>) -> Vec<Vec<Real>> {
    plan.rows().map(reals).collect()
}

pub fn solve_transport(args: &SolveOtArgs) -> Result<Exit, CliError> {
    let p = load_ot(&args.problem)?;
    let tolerances = resolve_tol(args.tol)?.map_or_else(Tolerances::transport, Tolerances::uniform);
    let s = solve_ot(&p)?;
    let cert = certify_transport(&p, &s.plan, &s.potentials, tolerances)?;
    let cost = p.cost_of(&s.plan);
    let doc = OtSolutionFile {
        plan: plan_rows(&s.plan),
        f: Some(reals(&s.potentials.f)),
        g: Some(reals(&s.potentials.g)),
        value: Some(Real(cost)),
        certificate: Some(CertificateFile::from(&cert)),
        oracle: args.oracle.then(|| vertex_oracle(&p, cost)),
        meta: Some(MetaFile {
            version: VERSION.into(),
            tolerances: tolerances.into(),
            iterations: s.augmentations,
            status: SolveStatus::Converged.name().into(),
            solver_tol: None,
            qualification_margin: None,
        }),
    };
    let solution = SolutionFile::Ot(doc);
    emit(&solution, args.out.as_deref(), args.format, || {
        csv_table(
            &["i", "j", "plan", "cost"],
            (0..p.m()).flat_map(|i| {
                let (p, plan) = (&p, &s.plan);
                (0..p.n()).map(move |j| {
                    vec![
                        i.to_string(),
                        j.to_string(),
                        plan.get(i, j).to_string(),
                        p.cost(i, j).to_string(),
                    ]
                })
            }),
        )
    })?;

    let exit = report_certificate(&cert);
    if exit != Exit::Success {
        return Ok(exit);
    }
    let SolutionFile::Ot(doc) = &solution else {
        unreachable!()
    };
    if let Some(o) = doc.oracle.as_ref().filter(|o| o.available && !o.agrees) {
        eprintln!(
            "saddlepoint: oracle disagrees: solver {cost} vs vertices {:?}",
            o.value.map(|v| v.0)
        );
        return Ok(Exit::CertificateFailed);
    }
    Ok(Exit::Success)
}

// ------------------------------------------------------------------ certify

pub fn certify(args: &CertifyArgs) -> Result<Exit, CliError> {
    let problem: ProblemFile = read_json(&args.problem)?;
    let solution: SolutionFile = read_json(&args.solution)?;
    let flag = resolve_tol(args.tol)?;
    let cert = match (problem, solution) {
        (ProblemFile::Entropy(pf), SolutionFile::Entropy(sf)) => {
            let p = pf.build()?;
            let tolerances = flag.map_or_else(|| sf.meta.tolerances.into(), Tolerances::uniform);
            let q = p.reference().with_weights(floats(&sf.q))?;
            certify_candidate(&p, &q, &floats(&sf.y), tolerances)?
        }
        (ProblemFile::Ot(pf), SolutionFile::Ot(sf)) => {
            let p = pf.build()?;
            let recorded = sf
                .meta
                .as_ref()
                .map(|m| m.tolerances.into())
                .or_else(|| sf.certificate.as_ref().map(|c| c.tolerances.into()));
            let tolerances = flag
                .map(Tolerances::uniform)
                .or(recorded)
                .unwrap_or_else(Tolerances::transport);
            let plan = sf.plan_for(&p)?;
            let potentials = match (&sf.f, &sf.g) {
                (Some(f), Some(g)) => Potentials {
                    f: floats(f),
                    g: floats(g),
                },
                (None, None) => potentials_from_plan(&p, &plan),
                _ => return Err(CliError::structural("give both potentials f and g, or neither")),
            };
            certify_transport(&p, &plan, &potentials, tolerances)?
        }
        _ => return Err(CliError::structural("problem and solution kinds differ")),
    };
    write_text(args.out.as_deref(), &to_json(&CertificateFile::from(&cert)))?;
    Ok(report_certificate(&cert))
}

// -------------------------------------------------------------------- gauge

#[derive(Serialize)]
struct GaugeOutput {
    op: &'static str,
    point: Vec<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mid: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tightness: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ok: Option<bool>,
}

pub fn parse_point(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|v| {
            let v = v.trim();
            v.parse::<f64>()
                .ok()
                .filter(|x| !x.is_nan())
                .ok_or_else(|| CliError::structural(format!("--point: {v:?} is not a number")))
        })
        .collect()
}

pub fn gauge_command(args: &GaugeArgs) -> Result<Exit, CliError> {
    let spec = read_json::<GaugeSpecFile>(&args.spec)?.build()?;
    let s = parse_point(&args.point)?;
    let mut out = GaugeOutput {
        op: args.op.name(),
        point: reals(&s),
        value: None,
        lower: None,
        mid: None,
        upper: None,
        tightness: None,
        ok: None,
    };
    let exit = match args.op {
        GaugeOp::Gauge => {
            out.value = Some(Real(gauge(&spec, &s)?));
            Exit::Success
        }
        GaugeOp::Support => {
            out.value = Some(Real(support_of_levelset(&spec, &s)?));
            Exit::Success
        }
        GaugeOp::Sandwich => {
            let w = pgauge_sandwich(&spec, &s)?;
            out.lower = Some(Real(w.lower));
            out.mid = Some(Real(w.mid));
            out.upper = Some(Real(w.upper));
            out.tightness = w.tightness().map(Real);
            out.ok = Some(w.ok);
            if w.ok {
                Exit::Success
            } else {
                eprintln!("saddlepoint: sandwich estimate violated");
                Exit::CertificateFailed
            }
        }
    };
    write_text(None, &to_json(&out))?;
    Ok(exit)
}

// ---------------------------------------------------------------------- gen

fn parse_size(text: &str) -> Result<(usize, Option<usize>), CliError> {
    let bad = || CliError::structural(format!("--size: expected N or NxM, found {text:?}"));
    let mut parts = text.split(['x', 'X']);
    let a = parts.next().and_then(|v| v.trim().parse().ok()).ok_or_else(bad)?;
    let b = match parts.next() {
        Some(v) => Some(v.trim().parse().map_err(|_| bad())?),
        None => None,
    };
    if parts.next().is_some() || a == 0 || b == Some(0) {
        return Err(bad());
    }
    Ok((a, b))
}

/// Features per generated entropy instance when `--size` gives only `N`.
const DEFAULT_FEATURES: usize = 3;

pub fn generate(args: &GenArgs) -> Result<Exit, CliError> {
    let (a, b) = parse_size(&args.size)?;
    let mut rng = rng_from_seed(args.seed);
    let file = match args.kind {
        GenKind::Entropy => {
            let k = b.unwrap_or(DEFAULT_FEATURES);
            let p = if args.boxed {
                box_instance(&mut rng, a, k)?
            } else {
                entropy_instance(&mut rng, a, k)?
            };
            ProblemFile::Entropy(EntropyProblemFile::from_problem(&p))
        }
        GenKind::Ot => {
            if args.boxed {
                return Err(CliError::structural("--box applies to entropy instances only"));
            }
            ProblemFile::Ot(OtProblemFile::from_problem(&transport_instance(
                &mut rng,
                a,
                b.unwrap_or(a),
            )?))
        }
    };
    write_text(args.out.as_deref(), &to_json(&file))?;
    Ok(Exit::Success)
}
