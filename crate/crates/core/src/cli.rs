//! Command-line front end.
//!
//! [`run`] never panics on bad input: every failure becomes a [`RunReport`]
//! with a diagnostic and an exit code.
//!
//! Exit codes: 0 success, 1 negative verdict (`classify`, `oracle`),
//! 2 indeterminate (`classify`), 64 usage error, 65 input rejected by a
//! domain check, 66 unreadable or malformed file.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::classify::{
    sampling_oracle_with, ClassificationReport, Classifier, OracleConfig, OracleVerdict, Verdict,
};
use crate::error::QpError;
use crate::families::{make_example1, make_example2, random_map, EntryRange, Profile};
use crate::io::{map_to_json, parse_map, parse_qmt, save_trajectory_csv, MapFile};
use crate::jacobian::{analytic_jacobian, delta3_expansion_with};
use crate::map::{canonicalize_logged, QPMap, State};
use crate::reduce::{lift_trajectory, reduce_conservative_with, reduce_with_qmt_eps, solve_2d};
use crate::scalar::Scalar;
use crate::transform::{class_invariant, transformed_parts};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INDETERMINATE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_FILE: i32 = 66;

#[derive(Parser, Debug)]
#[command(name = "qpmap", version, about = "Quasipolynomial discrete-time maps")]
struct Cli {
    /// Absolute tolerance for structural checks on double entries.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol_struct: f64,
    /// Tolerance for numerical comparisons along trajectories.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_num: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (CSV for `iterate`, JSON otherwise).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the structured result as JSON instead of the text summary.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CriterionArg {
    Auto,
    Dim1,
    Thm1,
    Thm3,
    Necessary,
    Symplectic,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a map file and print its canonical form.
    Validate { map: PathBuf },
    /// Classify conservativity.
    Classify {
        map: PathBuf,
        #[arg(long, value_enum, default_value_t = CriterionArg::Auto)]
        criterion: CriterionArg,
        /// Also run the Jacobian sampling oracle.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 200)]
        npoints: usize,
    },
    /// Iterate from `--x0`; `--out` writes a CSV trajectory.
    Iterate {
        map: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Jacobian, determinant and (n = 3) determinant expansion at a point.
    Jacobian {
        map: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        at: Vec<f64>,
    },
    /// Apply a QMT file `{"C": ...}`.
    Transform {
        map: PathBuf,
        #[arg(long)]
        qmt: PathBuf,
    },
    /// Reduce by one dimension on the leaf of `--x0`, or analyze a custom QMT.
    Reduce {
        map: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        x0: Vec<f64>,
        #[arg(long)]
        qmt: Option<PathBuf>,
        /// Lift manifest path; defaults to `<out>.lift.json` when `--out` is set.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Steps used to verify the lift against direct iteration.
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Closed-form solution of a conservative 2-d map.
    Solve2d {
        map: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        x0: Vec<f64>,
    },
    /// Quasimonomial first integrals.
    Integrals { map: PathBuf },
    /// Jacobian sampling oracle only.
    Oracle {
        map: PathBuf,
        #[arg(long, default_value_t = 200)]
        npoints: usize,
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
    },
    /// Write a map from a profile.
    Generate {
        /// unconstrained | thm1 | example1 | example2 | lv | symplectic | zero_trace
        #[arg(long)]
        profile: String,
        /// Explicit parameters for example1 (l1,l2,a13) or example2 (l1,l2,a13,a14,a24).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        params: Option<Vec<String>>,
        /// Half-dimension for the symplectic profile.
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        hi: f64,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    /// `(path, hex digest)` of every input file read.
    pub input_digests: Vec<(String, String)>,
    pub result: Value,
    pub summary: String,
    pub exit_code: i32,
    /// Present when the command failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<QpError> for Failure {
    fn from(e: QpError) -> Self {
        Failure::new(EXIT_DATA, e.to_string())
    }
}

struct Outcome {
    result: Value,
    summary: String,
    code: i32,
}

struct Ctx {
    eps: f64,
    tol_num: f64,
    seed: u64,
    out: Option<PathBuf>,
    digests: Vec<(String, String)>,
}

impl Ctx {
    fn read(&mut self, path: &Path) -> Result<String, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::new(EXIT_FILE, format!("{}: {e}", path.display())))?;
        let mut h = DefaultHasher::new();
        text.hash(&mut h);
        self.digests.push((path.display().to_string(), format!("{:016x}", h.finish())));
        Ok(text)
    }

    fn load_map(&mut self, path: &Path) -> Result<QPMap, Failure> {
        let text = self.read(path)?;
        parse_map(&text).map_err(|d| Failure::new(EXIT_FILE, format!("{}#{}: {}", path.display(), d.pointer, d.reason)))
    }

    fn write(&self, path: &Path, text: &str) -> Result<(), Failure> {
        std::fs::write(path, text).map_err(|e| Failure::new(EXIT_FILE, format!("{}: {e}", path.display())))
    }
}

fn state_for(map: &QPMap, x0: &[f64]) -> Result<State, Failure> {
    if x0.len() != map.n() {
        return Err(Failure::new(
            EXIT_USAGE,
            format!("--x0 has {} entries, the map has n = {}", x0.len(), map.n()),
        ));
    }
    State::from_x(x0).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Conservative | Verdict::NecessaryConditionsHold => EXIT_OK,
        Verdict::NotConservative => EXIT_NEGATIVE,
        Verdict::Indeterminate => EXIT_INDETERMINATE,
    }
}

fn format_report(r: &ClassificationReport) -> String {
    let mut s = format!("criterion: {:?}\nverdict: {:?}\norientation: {:?}\n", r.criterion, r.verdict, r.orientation);
    for (title, rows) in [("hypotheses", &r.hypotheses), ("conditions", &r.conditions)] {
        if rows.is_empty() {
            continue;
        }
        s.push_str(&format!("{title}:\n"));
        for c in rows {
            let mark = if c.holds { "holds" } else { "FAILS" };
            s.push_str(&format!("  [{}] {:<5} {}", c.id, mark, c.description));
            if let Some(w) = &c.witness {
                s.push_str(&format!("  (at {:?}", w.indices));
                if let Some(v) = &w.value {
                    s.push_str(&format!(", value {v}"));
                }
                s.push(')');
            }
            s.push('\n');
        }
    }
    s
}

fn classify_cmd(ctx: &mut Ctx, path: &Path, criterion: CriterionArg, oracle: bool, npoints: usize) -> Result<Outcome, Failure> {
    let map = ctx.load_map(path)?;
    let cl = Classifier::new(ctx.eps);
    let report = match criterion {
        CriterionArg::Dim1 => cl.check_dim1(&map)?,
        CriterionArg::Thm1 => cl.check_thm1(&map)?,
        CriterionArg::Thm3 => cl.check_thm3(&map)?,
        CriterionArg::Necessary => cl.check_thm5_necessary(&map)?,
        CriterionArg::Symplectic => cl.check_symplectic(&map)?,
        CriterionArg::Auto => {
            let base = cl.check_thm5_necessary(&map)?;
            // an inconclusive or necessary-only verdict can be sharpened by the symplectic check
            let sharpen = map.n() >= 4 && map.n() % 2 == 0 && base.verdict != Verdict::NotConservative;
            match sharpen.then(|| cl.check_symplectic(&map)).transpose()? {
                Some(sym) if sym.verdict == Verdict::Conservative => sym,
                _ => base,
            }
        }
    };
    let mut summary = format_report(&report);
    let mut result = json!({ "report": to_value(&report) });
    if oracle {
        let cfg = OracleConfig::default();
        let o = sampling_oracle_with(&map, ctx.seed, npoints, &cfg)?;
        summary.push_str(&format!(
            "oracle: {:?}, max |det J - 1| = {:e} over {} points (seed {})\n",
            o.verdict, o.max_deviation, o.points, ctx.seed
        ));
        result["oracle"] = to_value(&o);
        result["seed"] = json!(ctx.seed);
    }
    Ok(Outcome {
        result,
        summary,
        code: verdict_code(report.verdict),
    })
}

fn iterate_cmd(ctx: &mut Ctx, path: &Path, x0: &[f64], steps: usize) -> Result<Outcome, Failure> {
    let map = ctx.load_map(path)?;
    let s0 = state_for(&map, x0)?;
    let traj = map.iterate(&s0, steps)?;
    let sum0: f64 = s0.log().iter().sum();
    let drift = traj
        .states
        .iter()
        .map(|s| (s.log().iter().sum::<f64>() - sum0).abs())
        .fold(0.0, f64::max);
    let last = traj.states.last().expect("steps >= 1").x();
    if let Some(out) = &ctx.out {
        save_trajectory_csv(&traj, out).map_err(|e| Failure::new(EXIT_FILE, format!("{}: {e}", out.display())))?;
    }
    let summary = format!(
        "{} steps; final x = {:?}; max drift of sum(ln x) = {:e}{}\n",
        steps,
        last,
        drift,
        ctx.out.as_ref().map_or(String::new(), |p| format!("; wrote {}", p.display()))
    );
    Ok(Outcome {
        result: json!({ "steps": steps, "final_x": last, "log_product_drift": drift }),
        summary,
        code: EXIT_OK,
    })
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn jacobian_cmd(ctx: &mut Ctx, path: &Path, at: &[f64]) -> Result<Outcome, Failure> {
    let map = ctx.load_map(path)?;
    let s = state_for(&map, at)?;
    let ev = analytic_jacobian(&map, &s)?;
    let mut result = json!({ "J": matrix_rows(&ev.j), "det": ev.det, "K": matrix_rows(&ev.k) });
    if map.n() == 3 {
        if let Ok(exp) = delta3_expansion_with(&map, ctx.eps) {
            result["delta3_expansion"] = to_value(&exp);
        }
    }
    let summary = format!("{}\n", serde_json::to_string_pretty(&result).expect("json"));
    Ok(Outcome {
        result,
        summary,
        code: EXIT_OK,
    })
}

fn emit_json(ctx: &Ctx, text: &str) -> Result<String, Failure> {
    match &ctx.out {
        Some(p) => {
            ctx.write(p, text)?;
            Ok(format!("wrote {}\n", p.display()))
        }
        None => Ok(format!("{text}\n")),
    }
}

fn transform_cmd(ctx: &mut Ctx, path: &Path, qmt_path: &Path) -> Result<Outcome, Failure> {
    let map = ctx.load_map(path)?;
    let qtext = ctx.read(qmt_path)?;
    let t = parse_qmt(&qtext).map_err(|d| Failure::new(EXIT_FILE, format!("{}#{}: {}", qmt_path.display(), d.pointer, d.reason)))?;
    let raw = transformed_parts(&map, &t)?;
    // compared before canonicalization, which may merge rows of B M
    let raw_bm = raw.b.mul(&raw.a.prepend_col(&raw.lambda));
    let invariant_preserved = class_invariant(&map).bm.approx_eq(&raw_bm, ctx.eps);
    let (image, events) = canonicalize_logged(raw, ctx.eps);
    let text = map_to_json(&image);
    let summary = emit_json(ctx, &text)?;
    Ok(Outcome {
        result: json!({
            "map": to_value(&MapFile::from(&image)),
            "canonicalization": to_value(&events),
            "class_invariant_unchanged": invariant_preserved,
        }),
        summary,
        code: EXIT_OK,
    })
}

fn reduce_cmd(ctx: &mut Ctx, path: &Path, x0: &[f64], qmt: Option<&Path>, manifest: Option<&Path>, steps: usize) -> Result<Outcome, Failure> {
    let map = ctx.load_map(path)?;
    let s0 = state_for(&map, x0)?;
    if let Some(qp) = qmt {
        let qtext = ctx.read(qp)?;
        let t = parse_qmt(&qtext).map_err(|d| Failure::new(EXIT_FILE, format!("{}#{}: {}", qp.display(), d.pointer, d.reason)))?;
        let (image, analysis) = reduce_with_qmt_eps(&map, &t, &s0, ctx.eps)?;
        if let Some(out) = &ctx.out {
            ctx.write(out, &map_to_json(&image))?;
        }
        return Ok(Outcome {
            summary: format!("{}\n", analysis.describe()),
            result: json!({ "map": to_value(&MapFile::from(&image)), "analysis": to_value(&analysis) }),
            code: EXIT_OK,
        });
    }

    let red = reduce_conservative_with(&map, &s0, ctx.eps)?;
    let lift_deviation = if steps > 0 {
        let z = red.reduced_map.iterate(&red.reduced_x0, steps)?;
        let lifted = lift_trajectory(&red, &z)?;
        lifted.max_log_deviation(&map.iterate(&s0, steps)?)
    } else {
        0.0
    };
    let man = red.manifest();
    let man_text = serde_json::to_string_pretty(&man).expect("manifest serializes");
    let man_path = manifest
        .map(Path::to_path_buf)
        .or_else(|| ctx.out.as_ref().map(|o| PathBuf::from(format!("{}.lift.json", o.display()))));
    let mut summary = emit_json(ctx, &map_to_json(&red.reduced_map))?;
    if let Some(p) = &man_path {
        ctx.write(p, &man_text)?;
        summary.push_str(&format!("wrote lift manifest {}\n", p.display()));
    }
    summary.push_str(&format!(
        "constant coordinate prod x_i(0) = {:.17e}; lift deviation over {steps} steps = {:e}\n",
        red.constant_coordinate, lift_deviation
    ));
    let ok = lift_deviation <= ctx.tol_num.max(1e-8);
    Ok(Outcome {
        result: json!({
            "reduced_map": to_value(&MapFile::from(&red.reduced_map)),
            "lift_manifest": to_value(&man),
            "lift_deviation": lift_deviation,
            "lift_ok": ok,
        }),
        summary,
        code: EXIT_OK,
    })
}

fn solve2d_cmd(ctx: &mut Ctx, path: &Path, x0: &[f64]) -> Result<Outcome, Failure> {
    let map = ctx.load_map(path)?;
    let s0 = state_for(&map, x0)?;
    let cf = solve_2d(&map, &s0)?;
    Ok(Outcome {
        summary: format!("k = {:.17e}\n{}\n", cf.k, cf.describe()),
        result: json!({ "k": cf.k, "ln_k": cf.ln_k, "x0": s0.x(), "closed_form": cf.describe() }),
        code: EXIT_OK,
    })
}

fn integrals_cmd(ctx: &mut Ctx, path: &Path) -> Result<Outcome, Failure> {
    let map = ctx.load_map(path)?;
    let basis = Classifier::new(ctx.eps).find_integrals(&map);
    let mut summary = format!("{} independent quasimonomial integral(s)\n", basis.len());
    for c in &basis.exponent_vectors {
        let terms: Vec<String> = c
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero_tol(ctx.eps))
            .map(|(i, e)| format!("x{}^{}", i + 1, e))
            .collect();
        summary.push_str(&format!("  {}\n", terms.join(" * ")));
    }
    Ok(Outcome {
        result: to_value(&basis),
        summary,
        code: EXIT_OK,
    })
}

fn oracle_cmd(ctx: &mut Ctx, path: &Path, npoints: usize, threshold: f64) -> Result<Outcome, Failure> {
    let map = ctx.load_map(path)?;
    let cfg = OracleConfig {
        threshold,
        ..OracleConfig::default()
    };
    let o = sampling_oracle_with(&map, ctx.seed, npoints, &cfg)?;
    let code = match o.verdict {
        OracleVerdict::ConsistentWithConservative => EXIT_OK,
        OracleVerdict::NotConservative => EXIT_NEGATIVE,
    };
    Ok(Outcome {
        summary: format!(
            "{:?}: max ||det J| - 1| = {:e}, max |det J - 1| = {:e} over {} points (seed {}, {} redraws)\n",
            o.verdict, o.max_abs_deviation, o.max_deviation, o.points, ctx.seed, o.resampled
        ),
        result: json!({ "oracle": to_value(&o), "seed": ctx.seed }),
        code,
    })
}

struct GenerateArgs<'a> {
    profile: &'a str,
    params: Option<&'a [String]>,
    s: Option<usize>,
    n: Option<usize>,
    m: Option<usize>,
    lo: f64,
    hi: f64,
}

fn generate_cmd(ctx: &mut Ctx, g: GenerateArgs<'_>) -> Result<Outcome, Failure> {
    let mut profile: Profile = g.profile.parse()?;
    if let (Profile::Symplectic(_), Some(s)) = (profile, g.s) {
        profile = Profile::Symplectic(s);
    }
    let map = match (profile, g.params) {
        (Profile::Example1Family | Profile::Example2Family, Some(raw)) => {
            let p = raw.iter().map(|s| Scalar::parse_lenient(s)).collect::<Result<Vec<_>, _>>()?;
            match (profile, p.as_slice()) {
                (Profile::Example1Family, [l1, l2, a13]) => make_example1(l1.clone(), l2.clone(), a13.clone())?,
                (Profile::Example2Family, [l1, l2, a13, a14, a24]) => {
                    make_example2(l1.clone(), l2.clone(), a13.clone(), a14.clone(), a24.clone())?
                }
                _ => return Err(Failure::new(EXIT_USAGE, format!("wrong number of --params for profile {profile}"))),
            }
        }
        (_, Some(_)) => return Err(Failure::new(EXIT_USAGE, format!("profile {profile} takes no --params"))),
        (_, None) => {
            let n = g.n.unwrap_or(match profile {
                Profile::Thm1Conservative => 2,
                Profile::Example1Family | Profile::Example2Family => 3,
                Profile::Symplectic(s) => 2 * s,
                _ => 3,
            });
            let m = g.m.unwrap_or(match profile {
                Profile::Symplectic(s) => s,
                _ => 2,
            });
            random_map(ctx.seed, n, m, EntryRange { lo: g.lo, hi: g.hi }, profile)?
        }
    };
    let text = map_to_json(&map);
    let summary = emit_json(ctx, &text)?;
    Ok(Outcome {
        result: json!({ "profile": profile.to_string(), "seed": ctx.seed, "map": to_value(&MapFile::from(&map)) }),
        summary,
        code: EXIT_OK,
    })
}

fn validate_cmd(ctx: &mut Ctx, path: &Path) -> Result<Outcome, Failure> {
    let map = ctx.load_map(path)?;
    Ok(Outcome {
        summary: format!("valid: n = {}, m = {}, exact = {}\n", map.n(), map.m(), map.is_exact()),
        result: json!({ "valid": true, "n": map.n(), "m": map.m(), "exact": map.is_exact(), "digest": format!("{:016x}", map.digest()) }),
        code: EXIT_OK,
    })
}

/// Parses `argv` (including the program name) and runs one subcommand.
pub fn run<I, T>(argv: I) -> RunReport
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let command: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let fail = |code: i32, msg: String, digests: Vec<(String, String)>| RunReport {
        command: command.clone(),
        input_digests: digests,
        result: Value::Null,
        summary: msg.clone(),
        exit_code: code,
        diagnostic: Some(msg),
    };

    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            return RunReport {
                diagnostic: (code != EXIT_OK).then(|| text.clone()),
                ..fail(code, text, vec![])
            };
        }
    };
    if !(cli.tol_struct >= 0.0 && cli.tol_num >= 0.0) {
        return fail(EXIT_USAGE, "tolerances must be non-negative".into(), vec![]);
    }

    let mut ctx = Ctx {
        eps: cli.tol_struct,
        tol_num: cli.tol_num,
        seed: cli.seed,
        out: cli.out.clone(),
        digests: Vec::new(),
    };
    let outcome = match &cli.command {
        Command::Validate { map } => validate_cmd(&mut ctx, map),
        Command::Classify {
            map,
            criterion,
            oracle,
            npoints,
        } => classify_cmd(&mut ctx, map, *criterion, *oracle, *npoints),
        Command::Iterate { map, x0, steps } => iterate_cmd(&mut ctx, map, x0, *steps),
        Command::Jacobian { map, at } => jacobian_cmd(&mut ctx, map, at),
        Command::Transform { map, qmt } => transform_cmd(&mut ctx, map, qmt),
        Command::Reduce {
            map,
            x0,
            qmt,
            manifest,
            steps,
        } => reduce_cmd(&mut ctx, map, x0, qmt.as_deref(), manifest.as_deref(), *steps),
        Command::Solve2d { map, x0 } => solve2d_cmd(&mut ctx, map, x0),
        Command::Integrals { map } => integrals_cmd(&mut ctx, map),
        Command::Oracle { map, npoints, threshold } => oracle_cmd(&mut ctx, map, *npoints, *threshold),
        Command::Generate {
            profile,
            params,
            s,
            n,
            m,
            lo,
            hi,
        } => generate_cmd(
            &mut ctx,
            GenerateArgs {
                profile,
                params: params.as_deref(),
                s: *s,
                n: *n,
                m: *m,
                lo: *lo,
                hi: *hi,
            },
        ),
    };
    match outcome {
        Ok(o) => RunReport {
            command,
            input_digests: ctx.digests,
            result: o.result,
            summary: o.summary,
            exit_code: o.code,
            diagnostic: None,
        },
        Err(f) => fail(f.code, f.message, ctx.digests),
    }
}

/// Entry point used by the binary: prints the report and returns the exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let json_mode = args.iter().any(|a| a == "--json");
    let report = run(args);
    if let Some(d) = &report.diagnostic {
        eprint!("{d}");
        if !d.ends_with('\n') {
            eprintln!();
        }
    }
    if json_mode && report.diagnostic.is_none() {
        println!("{}", serde_json::to_string_pretty(&report.result).expect("json"));
    } else if report.diagnostic.is_none() {
        print!("{}", report.summary);
    } else if report.exit_code == EXIT_OK {
        print!("{}", report.summary);
    }
    report.exit_code
}
