//! Command-line front end: loads JSON models, dispatches operations, and
//! emits machine-readable JSON on standard output.
//!
//! Exit codes: 0 on success, 2 on any validation failure (bad file, schema
//! violation, unmet precondition), 1 on an internal invariant violation.

mod model;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use buildings::deformation::{self, LiftOutcome};
use buildings::error::Error;
use buildings::harmonic::{self, EquivMapState, TargetPoint, Termination};
use buildings::monodromy::{
    self, graded_nearby_cycles, quasiunipotent_order, residue_exponential, semisimplify,
    GaussRat, WeightFiltration,
};
use buildings::norms::{self, DiagNorm};
use buildings::scalars::{PrimePlace, Rat, Scalar};

use model::{
    canonical, parse_model, parse_rational, parse_word_arg, point_value, rational_string,
    rep_file, ModelFile, ParsedRep,
};

#[derive(Parser)]
#[command(name = "buildings", version, about = "Exact norms, harmonic maps, and monodromy")]
struct Cli {
    /// Number of worker threads for batch inputs (0 = rayon default).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Operations on norm files.
    Norm {
        #[command(subcommand)]
        cmd: NormCmd,
    },
    /// Energy-minimising maps on graphs.
    Harmonic {
        #[command(subcommand)]
        cmd: HarmonicCmd,
    },
    /// Monodromy operations on representation files.
    Rep {
        #[command(subcommand)]
        cmd: RepCmd,
    },
    /// Cocycle-level deformation theory.
    Deform {
        #[command(subcommand)]
        cmd: DeformCmd,
    },
    /// KMS rescaling and residue bookkeeping.
    Kms {
        #[command(subcommand)]
        cmd: KmsCmd,
    },
}

#[derive(Subcommand)]
enum NormCmd {
    /// d_2^2 and d_inf between pairs of norms; extra pairs run as a batch.
    Dist {
        /// Norm files, in pairs.
        files: Vec<PathBuf>,
    },
    /// Relative spectrum of a pair of norms.
    Spectrum { a: PathBuf, b: PathBuf },
    /// Weighted center of mass of norm files.
    Com {
        files: Vec<PathBuf>,
        /// Comma-separated positive masses, one per file (default: all 1).
        #[arg(long)]
        masses: Option<String>,
        #[arg(long, default_value = "1/1000000000000")]
        tol: String,
        #[arg(long, default_value_t = 10_000)]
        max_sweeps: usize,
    },
}

#[derive(Subcommand)]
enum HarmonicCmd {
    /// Solve the Dirichlet problem (graph file) or the equivariant problem
    /// (voltage-graph file plus --rep).
    Solve(SolveArgs),
}

#[derive(Args)]
struct SolveArgs {
    graph: PathBuf,
    /// Representation file; required for voltage graphs.
    #[arg(long)]
    rep: Option<PathBuf>,
    /// Prime place for the default initial state of equivariant solves.
    #[arg(long)]
    place: Option<u64>,
    #[arg(long, default_value = "1/1000000000000")]
    tol: String,
    #[arg(long, default_value_t = 100_000)]
    max_sweeps: usize,
}

#[derive(Subcommand)]
enum RepCmd {
    /// Weight filtration of rho(gamma) - 1; gamma must act unipotently.
    Weightfilt {
        rep: PathBuf,
        /// Word, comma-separated signed generator indices (default "1").
        #[arg(long, default_value = "1")]
        gamma: String,
    },
    /// Graded nearby cycles along a central unipotent gamma.
    Grpsi {
        rep: PathBuf,
        #[arg(long, default_value = "1")]
        gamma: String,
    },
    /// Semisimplification.
    Ss { rep: PathBuf },
    /// Quasiunipotence of the image of a word.
    Qu {
        rep: PathBuf,
        #[arg(long, default_value = "1")]
        word: String,
    },
    /// Characteristic polynomial of the image of a word.
    Charb {
        rep: PathBuf,
        #[arg(long, default_value = "1")]
        word: String,
    },
}

#[derive(Subcommand)]
enum DeformCmd {
    /// Z^1, B^1 and H^1 dimensions.
    Tangent { rep: PathBuf },
    /// Order-by-order lifting of a cocycle from the Z^1 basis.
    Lift {
        rep: PathBuf,
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Index into the deterministic Z^1 basis.
        #[arg(long, default_value_t = 0)]
        basis_index: usize,
    },
}

#[derive(Subcommand)]
enum KmsCmd {
    /// Exact rescaling of a (parabolic weight, residue) pair.
    Rescale {
        #[arg(long)]
        a: String,
        #[arg(long, default_value = "0")]
        alpha_re: String,
        #[arg(long, default_value = "0")]
        alpha_im: String,
        #[arg(long, default_value = "0")]
        lambda_re: String,
        #[arg(long, default_value = "0")]
        lambda_im: String,
    },
    /// Roots of unity attached to a residue multiset file.
    Exp { residues: PathBuf },
}

/// Validation failure (exit 2) or internal invariant violation (exit 1).
enum CliError {
    Validation(Value),
    Internal(String),
}

impl CliError {
    fn validation(path: &str, reason: impl Into<String>) -> Self {
        CliError::Validation(json!({
            "error": { "path": path, "reason": reason.into() }
        }))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Internal(m) => CliError::Internal(m),
            other => CliError::validation("$", other.to_string()),
        }
    }
}

impl From<model::ParseError> for CliError {
    fn from(e: model::ParseError) -> Self {
        CliError::validation(&e.path, e.reason)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        // rayon reads this at pool construction; set it before any batch use
        std::env::set_var("RAYON_NUM_THREADS", cli.jobs.to_string());
    }
    match run(cli.command) {
        Ok(value) => {
            println!("{}", canonical(&value));
            ExitCode::SUCCESS
        }
        Err(CliError::Validation(v)) => {
            eprintln!("{}", canonical(&v));
            ExitCode::from(2)
        }
        Err(CliError::Internal(m)) => {
            eprintln!("{}", canonical(&json!({ "error": { "internal": m } })));
            ExitCode::from(1)
        }
    }
}

fn load(path: &PathBuf) -> Result<ModelFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::validation("$", format!("cannot read {}: {e}", path.display()))
    })?;
    Ok(parse_model(&text)?)
}

fn load_norm(path: &PathBuf) -> Result<DiagNorm, CliError> {
    match load(path)? {
        ModelFile::Norm(n) => Ok(n),
        _ => Err(CliError::validation(
            "$.kind",
            format!("{} is not a norm file", path.display()),
        )),
    }
}

fn load_rep(path: &PathBuf) -> Result<ParsedRep, CliError> {
    match load(path)? {
        ModelFile::Rep(r) => Ok(r),
        _ => Err(CliError::validation(
            "$.kind",
            format!("{} is not a rep file", path.display()),
        )),
    }
}

fn rat_arg(s: &str, what: &str) -> Result<Rat, CliError> {
    parse_rational(s, what).map_err(CliError::from)
}

fn word_arg(s: &str) -> Result<Vec<i32>, CliError> {
    parse_word_arg(s).map_err(|m| CliError::validation("--word", m))
}

fn run(cmd: Command) -> Result<Value, CliError> {
    match cmd {
        Command::Norm { cmd } => run_norm(cmd),
        Command::Harmonic { cmd } => run_harmonic(cmd),
        Command::Rep { cmd } => run_rep(cmd),
        Command::Deform { cmd } => run_deform(cmd),
        Command::Kms { cmd } => run_kms(cmd),
    }
}

fn dist_value(a: &DiagNorm, b: &DiagNorm) -> Result<Value, Error> {
    let (d2_sq, d_inf) = norms::distances(a, b)?;
    let approx = d2_sq.to_f64().unwrap_or(f64::NAN).sqrt();
    Ok(json!({
        "d2_sq": rational_string(&d2_sq),
        "d2_approx": approx,
        "d_inf": rational_string(&d_inf),
    }))
}

fn run_norm(cmd: NormCmd) -> Result<Value, CliError> {
    match cmd {
        NormCmd::Dist { files } => {
            if files.len() < 2 || files.len() % 2 != 0 {
                return Err(CliError::validation(
                    "files",
                    "norm dist expects an even number of files (pairs)",
                ));
            }
            let mut pairs = Vec::new();
            for chunk in files.chunks(2) {
                pairs.push((load_norm(&chunk[0])?, load_norm(&chunk[1])?));
            }
            if pairs.len() == 1 {
                return Ok(dist_value(&pairs[0].0, &pairs[0].1)?);
            }
            // batch mode: results in input order regardless of scheduling
            let results = buildings::batch::map_collect(&pairs, |(a, b)| dist_value(a, b))?;
            Ok(Value::Array(results))
        }
        NormCmd::Spectrum { a, b } => {
            let na = load_norm(&a)?;
            let nb = load_norm(&b)?;
            let spectrum = norms::relative_spectrum(&na, &nb)?;
            Ok(json!({
                "lambdas": spectrum.lambdas().iter().map(rational_string).collect::<Vec<_>>(),
            }))
        }
        NormCmd::Com {
            files,
            masses,
            tol,
            max_sweeps,
        } => {
            if files.is_empty() {
                return Err(CliError::validation("files", "need at least one norm file"));
            }
            let points: Vec<DiagNorm> =
                files.iter().map(load_norm).collect::<Result<_, _>>()?;
            let masses: Vec<Rat> = match masses {
                None => vec![Rat::from_integer(1.into()); points.len()],
                Some(s) => s
                    .split(',')
                    .map(|t| rat_arg(t.trim(), "--masses"))
                    .collect::<Result<_, _>>()?,
            };
            let tol = rat_arg(&tol, "--tol")?;
            let bary = norms::center_of_mass(&points, &masses, &tol, max_sweeps)?;
            Ok(json!({
                "point": model::norm_file(&bary.point),
                "objective": rational_string(&bary.objective),
                "objective_approx": bary.objective.to_f64().unwrap_or(f64::NAN),
                "exact": bary.exact,
                "sweeps": bary.sweeps,
                "converged": bary.converged,
            }))
        }
    }
}

fn state_value(state: &EquivMapState) -> Value {
    Value::Array(state.values.iter().map(point_value).collect())
}

fn run_harmonic(cmd: HarmonicCmd) -> Result<Value, CliError> {
    let HarmonicCmd::Solve(args) = cmd;
    let tol = rat_arg(&args.tol, "--tol")?;
    match load(&args.graph)? {
        ModelFile::Graph {
            graph,
            boundary_values,
        } => {
            let report =
                harmonic::solve_dirichlet(&graph, &boundary_values, &tol, args.max_sweeps)?;
            Ok(report_value(&report))
        }
        ModelFile::VoltageGraph(vg) => {
            let rep_path = args.rep.as_ref().ok_or_else(|| {
                CliError::validation("--rep", "voltage graphs need a representation")
            })?;
            let rep = match load_rep(rep_path)? {
                ParsedRep::Rational(r) => r,
                ParsedRep::NumberField(_) => {
                    return Err(CliError::validation(
                        "--rep",
                        "equivariant solves take rational representations",
                    ))
                }
            };
            let p = args.place.ok_or_else(|| {
                CliError::validation("--place", "equivariant solves need a prime place")
            })?;
            let place = PrimePlace::new(p).map_err(CliError::from)?;
            let zero_weights = vec![Rat::from_integer(0.into()); rep.rank()];
            let init = EquivMapState::constant(
                vg.graph().vertex_count(),
                TargetPoint::Building(DiagNorm::standard(place, zero_weights)),
            );
            let report = harmonic::solve_equivariant(&vg, &rep, init, &tol, args.max_sweeps)?;
            Ok(report_value(&report))
        }
        _ => Err(CliError::validation(
            "$.kind",
            "harmonic solve expects a graph or voltage-graph file",
        )),
    }
}

fn report_value(report: &harmonic::SolveReport) -> Value {
    json!({
        "energy": rational_string(&report.energy),
        "energy_approx": report.energy.to_f64().unwrap_or(f64::NAN),
        "sweeps": report.sweeps,
        "termination": match report.termination {
            Termination::Converged => "converged",
            Termination::MaxSweeps => "max_sweeps",
        },
        "residual": report.state.residual.as_ref().map(rational_string),
        "state": state_value(&report.state),
    })
}

fn gr_dims_value<T: Scalar>(wf: &WeightFiltration<T>) -> Value {
    let mut obj = serde_json::Map::new();
    for (k, d) in wf.gr_dims() {
        if d > 0 {
            obj.insert(k.to_string(), Value::from(d as u64));
        }
    }
    Value::Object(obj)
}

fn w_dims_value<T: Scalar>(wf: &WeightFiltration<T>) -> Value {
    let mut obj = serde_json::Map::new();
    for (k, _) in wf.gr_dims() {
        obj.insert(k.to_string(), Value::from(wf.w_dim(k) as u64));
    }
    Value::Object(obj)
}

fn weightfilt_of<T: Scalar>(
    rep: &monodromy::GroupRep<T>,
    gamma: &[i32],
) -> Result<Value, CliError> {
    let t = rep.eval(&gamma.to_vec())?;
    let one = buildings::matrix::Matrix::identity_like(rep.rank(), t.sample());
    let n = t.sub(&one);
    let wf = monodromy::weight_filtration(&n)?;
    Ok(json!({
        "gr_dims": gr_dims_value(&wf),
        "w_dims": w_dims_value(&wf),
    }))
}

fn run_rep(cmd: RepCmd) -> Result<Value, CliError> {
    match cmd {
        RepCmd::Weightfilt { rep, gamma } => {
            let gamma = word_arg(&gamma)?;
            match load_rep(&rep)? {
                ParsedRep::Rational(r) => weightfilt_of(&r, &gamma),
                ParsedRep::NumberField(r) => weightfilt_of(&r, &gamma),
            }
        }
        RepCmd::Grpsi { rep, gamma } => {
            let gamma = word_arg(&gamma)?;
            match load_rep(&rep)? {
                ParsedRep::Rational(r) => {
                    let out = graded_nearby_cycles(&r, &gamma)?;
                    Ok(json!({ "rep": rep_file(&ParsedRep::Rational(out)) }))
                }
                ParsedRep::NumberField(r) => {
                    let out = graded_nearby_cycles(&r, &gamma)?;
                    Ok(json!({ "rep": rep_file(&ParsedRep::NumberField(out)) }))
                }
            }
        }
        RepCmd::Ss { rep } => match load_rep(&rep)? {
            ParsedRep::Rational(r) => {
                let out = semisimplify(&r)?;
                Ok(json!({ "rep": rep_file(&ParsedRep::Rational(out)) }))
            }
            ParsedRep::NumberField(r) => {
                let out = semisimplify(&r)?;
                Ok(json!({ "rep": rep_file(&ParsedRep::NumberField(out)) }))
            }
        },
        RepCmd::Qu { rep, word } => {
            let word = word_arg(&word)?;
            let order = match load_rep(&rep)? {
                ParsedRep::Rational(r) => quasiunipotent_order(&r.eval(&word)?),
                ParsedRep::NumberField(r) => quasiunipotent_order(&r.eval(&word)?),
            };
            Ok(json!({ "order": order }))
        }
        RepCmd::Charb { rep, word } => {
            let word = word_arg(&word)?;
            match load_rep(&rep)? {
                ParsedRep::Rational(r) => {
                    let coeffs = r.char_b(&word)?;
                    Ok(json!({
                        "coeffs": coeffs.iter().map(rational_string).collect::<Vec<_>>(),
                    }))
                }
                ParsedRep::NumberField(r) => {
                    let coeffs = r.char_b(&word)?;
                    let vals: Vec<Value> = coeffs
                        .iter()
                        .map(|c| {
                            Value::Array(
                                c.coeffs()
                                    .iter()
                                    .map(|x| Value::String(rational_string(x)))
                                    .collect(),
                            )
                        })
                        .collect();
                    Ok(json!({ "coeffs": vals }))
                }
            }
        }
    }
}

fn run_deform(cmd: DeformCmd) -> Result<Value, CliError> {
    match cmd {
        DeformCmd::Tangent { rep } => {
            let ParsedRep::Rational(r) = load_rep(&rep)? else {
                return Err(CliError::validation(
                    "$.minpoly",
                    "deformation commands take rational representations",
                ));
            };
            let fox = deformation::FoxSystem::new(&r)?;
            let dim_z1 = fox.dim_z1();
            let dim_b1 = deformation::dim_b1(&r);
            Ok(json!({
                "dimZ1": dim_z1,
                "dimB1": dim_b1,
                "dimH1": dim_z1 - dim_b1,
            }))
        }
        DeformCmd::Lift {
            rep,
            order,
            basis_index,
        } => {
            let ParsedRep::Rational(r) = load_rep(&rep)? else {
                return Err(CliError::validation(
                    "$.minpoly",
                    "deformation commands take rational representations",
                ));
            };
            let fox = deformation::FoxSystem::new(&r)?;
            let dim_z1 = fox.dim_z1();
            let dim_b1 = deformation::dim_b1(&r);
            let basis = fox.z1_basis();
            let cocycle = basis.get(basis_index).ok_or_else(|| {
                CliError::validation(
                    "--basis-index",
                    format!("index {basis_index} out of range 0..{}", basis.len()),
                )
            })?;
            let lift = match deformation::lift_order(&r, cocycle, order)? {
                LiftOutcome::Lifted { .. } => json!({
                    "order": order,
                    "status": "lifted",
                }),
                LiftOutcome::Obstructed {
                    order: at,
                    residuals,
                } => json!({
                    "order": order,
                    "status": "obstructed",
                    "failed_at": at,
                    "residuals": residuals.iter().map(model::rat_matrix_value).collect::<Vec<_>>(),
                }),
            };
            Ok(json!({
                "dimZ1": dim_z1,
                "dimB1": dim_b1,
                "dimH1": dim_z1 - dim_b1,
                "lift": lift,
            }))
        }
    }
}

fn run_kms(cmd: KmsCmd) -> Result<Value, CliError> {
    match cmd {
        KmsCmd::Rescale {
            a,
            alpha_re,
            alpha_im,
            lambda_re,
            lambda_im,
        } => {
            let a = rat_arg(&a, "--a")?;
            let alpha = GaussRat::new(
                rat_arg(&alpha_re, "--alpha-re")?,
                rat_arg(&alpha_im, "--alpha-im")?,
            );
            let lambda = GaussRat::new(
                rat_arg(&lambda_re, "--lambda-re")?,
                rat_arg(&lambda_im, "--lambda-im")?,
            );
            let (p, e) = monodromy::kms_rescale_exact(&a, &alpha, &lambda);
            Ok(json!({
                "p": rational_string(&p),
                "p_approx": p.to_f64().unwrap_or(f64::NAN),
                "e_re": rational_string(&e.re),
                "e_im": rational_string(&e.im),
                "e_re_approx": e.re.to_f64().unwrap_or(f64::NAN),
                "e_im_approx": e.im.to_f64().unwrap_or(f64::NAN),
            }))
        }
        KmsCmd::Exp { residues } => {
            let ModelFile::Residues(r) = load(&residues)? else {
                return Err(CliError::validation(
                    "$.kind",
                    "kms exp expects a residues file",
                ));
            };
            let roots = residue_exponential(&r);
            Ok(json!({
                "roots": roots.roots.iter().map(rational_string).collect::<Vec<_>>(),
            }))
        }
    }
}
