use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chernlab::builders::{build, Built, Descriptor};
use chernlab::chernforms::{ch_total, cs_exact, cs_form, Homotopy};
use chernlab::geomgrid::{integrate, read_grid_file, Codomain, GradedForm, SampledMap};
use chernlab::khat::classify;
use chernlab::kops::{conjugation_homotopy, inversion_homotopy_even, inversion_homotopy_odd, ExpPath, Grading, DEFAULT_TIME_NODES};
use chernlab::numkernel::{fixtures, ComplexMatrix};
use chernlab::periodicity::{bloch_loop, bott_consistency, kato_transport, BottConfig, SampledLoopPath, KATO_STEPS};
use chernlab::stiefel::{decay_diagnostics, virtual_dimension_spec, PolarizedWindow, SubspaceSpecJson};
use chernlab::suite::{self, SuiteConfig, DEFAULT_SEED};
use chernlab::{par, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

/// Chern character and Chern–Simons numerics at finite truncation.
#[derive(Parser)]
#[command(name = "chernlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chern character forms of a map and their cycle integrals.
    Ch(Common),
    /// Chern–Simons forms of a canonical homotopy and their exactness.
    Cs {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = HomotopyKind::InversionOdd)]
        homotopy: HomotopyKind,
    },
    /// Toeplitz/winding/Chern consistency for unitary loops, Kato holonomy for
    /// projection loops.
    Bott(Common),
    /// Restricted-Grassmannian data: even forms of a projection map, or the
    /// virtual dimension of a subspace spec (`--input spec.json`).
    Grass(Common),
    /// Differential K-theory class data on the circle.
    Khat(Common),
    /// Run the verification suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Prefix of a group name or of `group/check`.
        #[arg(long)]
        filter: Option<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HomotopyKind {
    Constant,
    InversionOdd,
    InversionEven,
    Conjugation,
    /// `f · e^{2πi c t}` with `c = 1/4`: CS₀ is a nonzero constant.
    Phase,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CodomainArg {
    Unitary,
    Projection,
    Frame,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    builder: Option<String>,
    /// Builder parameters as a JSON object.
    #[arg(long)]
    params: Option<String>,
    /// Shorthand for `"n"` in the builder parameters.
    #[arg(long, allow_negative_numbers = true)]
    n: Option<i64>,
    /// Binary grid file, or a subspace spec (`.json`) for `grass`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Codomain of a grid file.
    #[arg(long, value_enum, default_value_t = CodomainArg::Unitary)]
    codomain: CodomainArg,
    /// Per-axis resolutions; the last entry repeats.
    #[arg(long, value_delimiter = ',')]
    res: Vec<usize>,
    /// `M,B`: modes per side and bandwidth (`bott`), or `n_minus,n_plus`.
    #[arg(long, value_delimiter = ',')]
    window: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    kmax: usize,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; `CHERNLAB_JOBS` takes precedence.
    #[arg(long)]
    jobs: Option<usize>,
    /// Write per-node form samples as CSV (`ch`, `grass`).
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Config(String),
    Numeric(String),
    Suite,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Format(_)
            | Error::Io(_)
            | Error::BadResolution(_)
            | Error::WindowTooSmall(_)
            | Error::UnsupportedDomain(_)
            | Error::AsymmetricWindow { .. } => Failure::Config(e.to_string()),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

type Outcome = std::result::Result<Value, Failure>;

fn config<T>(msg: impl Into<String>) -> std::result::Result<T, Failure> {
    Err(Failure::Config(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Ch(c) | Command::Bott(c) | Command::Grass(c) | Command::Khat(c) => c,
        Command::Cs { common, .. } | Command::Verify { common, .. } => common,
    };
    let jobs = match jobs_setting(common.jobs) {
        Ok(j) => j,
        Err(f) => return report_failure(f),
    };
    let run = || -> std::result::Result<(), Failure> {
        validate(common)?;
        let (report, failed) = match &cli.command {
            Command::Ch(c) => (cmd_ch(c)?, false),
            Command::Cs { common, homotopy } => (cmd_cs(common, *homotopy)?, false),
            Command::Bott(c) => (cmd_bott(c)?, false),
            Command::Grass(c) => (cmd_grass(c)?, false),
            Command::Khat(c) => (cmd_khat(c)?, false),
            Command::Verify { common, filter } => cmd_verify(common, filter.clone())?,
        };
        emit(&report, common.out.as_deref())?;
        if failed {
            return Err(Failure::Suite);
        }
        Ok(())
    };
    let result = match jobs {
        Some(j) => par::with_jobs(j, run),
        None => run(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report_failure(f),
    }
}

fn report_failure(f: Failure) -> ExitCode {
    match f {
        Failure::Config(m) => {
            eprintln!("chernlab: configuration error: {m}");
            ExitCode::from(2)
        }
        Failure::Numeric(m) => {
            eprintln!("chernlab: numerical failure: {m}");
            ExitCode::from(3)
        }
        Failure::Suite => ExitCode::from(1),
    }
}

fn jobs_setting(flag: Option<usize>) -> std::result::Result<Option<usize>, Failure> {
    let jobs = match std::env::var("CHERNLAB_JOBS") {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(j) => Some(j),
            Err(_) => return config(format!("CHERNLAB_JOBS must be a positive integer, got {v:?}")),
        },
        _ => flag,
    };
    if jobs == Some(0) {
        return config("jobs must be positive");
    }
    Ok(jobs)
}

fn validate(c: &Common) -> std::result::Result<(), Failure> {
    if let Some(t) = c.tol {
        if !(t.is_finite() && t > 0.0) {
            return config("tolerance must be positive");
        }
    }
    if c.kmax == 0 {
        return config("kmax must be positive");
    }
    if c.res.contains(&0) {
        return config("resolutions must be positive");
    }
    if !c.window.is_empty() && c.window.len() != 2 {
        return config("window takes two numbers: M,B");
    }
    Ok(())
}

fn emit(report: &Value, out: Option<&Path>) -> std::result::Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Failure::Numeric(e.to_string()))?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Config(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn descriptor(c: &Common) -> std::result::Result<Option<Descriptor>, Failure> {
    let Some(name) = &c.builder else {
        if c.params.is_some() || c.n.is_some() {
            return config("--params and --n need --builder");
        }
        return Ok(None);
    };
    let mut params = match &c.params {
        Some(text) => serde_json::from_str::<Value>(text).map_err(|e| Failure::Config(format!("--params: {e}")))?,
        None => Value::Null,
    };
    if let Some(n) = c.n {
        if params.is_null() {
            params = json!({});
        }
        match params.as_object_mut() {
            Some(m) => {
                m.insert("n".into(), json!(n));
            }
            None => return config("--params must be a JSON object"),
        }
    }
    Ok(Some(Descriptor { builder: name.clone(), params }))
}

struct Input {
    built: Built,
    source: Value,
}

fn load_map(c: &Common) -> std::result::Result<Input, Failure> {
    match (descriptor(c)?, &c.input) {
        (Some(_), Some(_)) => config("give either --builder or --input"),
        (None, None) => config("no input: give --builder NAME or --input PATH"),
        (Some(d), None) => {
            let built = build(&d, &c.res)?;
            Ok(Input { source: json!({ "builder": d.builder, "params": d.params }), built })
        }
        (None, Some(path)) => {
            let codomain = match c.codomain {
                CodomainArg::Unitary => Codomain::Unitary,
                CodomainArg::Projection => Codomain::Projection,
                CodomainArg::Frame => Codomain::Frame,
            };
            let map = read_grid_file(path, codomain)?;
            Ok(Input {
                source: json!({ "input": path.display().to_string() }),
                built: Built { map, bandwidth: None, bloch: None },
            })
        }
    }
}

fn with_window(map: SampledMap, c: &Common) -> std::result::Result<SampledMap, Failure> {
    if c.window.len() == 2 && map.window().is_none() {
        let win = PolarizedWindow::with_fiber(c.window[0], c.window[1], 1);
        if win.dim() == map.shape().0 {
            return Ok(map.with_window(win)?);
        }
    }
    Ok(map)
}

fn domain_json(map: &SampledMap) -> Value {
    let g = map.domain();
    json!({
        "kind": g.kind().name(),
        "resolutions": g.resolutions(),
        "nodes": g.n_nodes(),
        "fiber": map.shape().0,
    })
}

fn form_json(form: &GradedForm) -> Value {
    let mut v = serde_json::to_value(form.report()).expect("form reports serialize");
    if form.degree == form.domain.dim() {
        if let Ok(z) = integrate(form) {
            v["integral"] = json!([z.re, z.im]);
        }
    }
    v
}

fn write_csv(path: &Path, forms: &[GradedForm]) -> std::result::Result<(), Failure> {
    let mut text = String::from("degree,component,chart,node,coords,re,im\n");
    for f in forms {
        for idx in f.index_list() {
            let label: String = idx.iter().map(|a| a.to_string()).collect::<Vec<_>>().join("");
            for node in 0..f.domain.n_nodes() {
                let (chart, x) = f.domain.coords(node);
                let coords = x.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(" ");
                let z = f.component(&idx, node);
                let _ = writeln!(text, "{},{label},{chart},{node},{coords},{:.17e},{:.17e}", f.degree, z.re, z.im);
            }
        }
    }
    std::fs::write(path, text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn cmd_ch(c: &Common) -> Outcome {
    let input = load_map(c)?;
    let map = input.built.map;
    let forms = ch_total(&map, c.kmax)?;
    if let Some(p) = &c.csv {
        write_csv(p, &forms)?;
    }
    Ok(json!({
        "command": "ch",
        "source": input.source,
        "domain": domain_json(&map),
        "kmax": c.kmax,
        "forms": forms.iter().map(form_json).collect::<Vec<_>>(),
    }))
}

fn cmd_cs(c: &Common, kind: HomotopyKind) -> Outcome {
    let input = load_map(c)?;
    let map = with_window(input.built.map, c)?;
    let n_t = DEFAULT_TIME_NODES;
    let h = match kind {
        HomotopyKind::Constant => Homotopy::constant(&map, n_t)?,
        HomotopyKind::InversionOdd => inversion_homotopy_odd(&map, Grading::Ungraded, n_t)?,
        HomotopyKind::InversionEven => inversion_homotopy_even(&map, None, n_t)?,
        HomotopyKind::Conjugation => {
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
            let path = ExpPath { generator: fixtures::skew_hermitian(&mut rng, map.shape().0) };
            conjugation_homotopy(&map, &path, n_t)?
        }
        HomotopyKind::Phase => {
            if map.codomain() != Codomain::Unitary {
                return Err(Failure::Numeric("the phase homotopy needs a unitary map".into()));
            }
            let i = chernlab::numkernel::I;
            Homotopy::build(map.domain(), Codomain::Unitary, 0.0, 1.0, n_t, |t, node| {
                let phase = (i * std::f64::consts::FRAC_PI_2 * t).exp();
                let v = map.value(node) * phase;
                let dv = &v * (i * std::f64::consts::FRAC_PI_2);
                (v, dv)
            })?
        }
    };
    let tol = c.tol.unwrap_or(1e-6);
    let exact = cs_exact(&h, c.kmax, tol)?;
    let forms = exact.residuals.iter().map(|r| cs_form(&h, r.k).map(|f| form_json(&f))).collect::<chernlab::Result<Vec<_>>>()?;
    Ok(json!({
        "command": "cs",
        "source": input.source,
        "homotopy": kind.to_possible_value().map(|v| v.get_name().to_string()),
        "domain": domain_json(&map),
        "time_nodes": h.n_times(),
        "forms": forms,
        "exactness": exact,
    }))
}

fn cmd_bott(c: &Common) -> Outcome {
    let input = load_map(c)?;
    let Built { map, bandwidth, bloch } = input.built;
    match map.codomain() {
        Codomain::Unitary => {
            let modes = c.window.first().copied().unwrap_or(64);
            // An undeclared band defaults to 1; rough loops then fail the leak check.
            let band = c.window.get(1).copied().or(bandwidth).unwrap_or(1);
            let report = bott_consistency(&map, BottConfig { modes, bandwidth: band })?;
            Ok(json!({ "command": "bott", "source": input.source, "domain": domain_json(&map), "report": report }))
        }
        Codomain::Projection => {
            let steps = KATO_STEPS;
            let result = match bloch {
                Some((beta, s)) => kato_transport(&bloch_loop(beta, s), steps)?,
                None => kato_transport(&SampledLoopPath::new(&map)?, steps)?,
            };
            Ok(json!({ "command": "bott", "source": input.source, "domain": domain_json(&map), "holonomy": result.to_json() }))
        }
        _ => Err(Failure::Numeric("bott needs a unitary or projection loop".into())),
    }
}

fn cmd_grass(c: &Common) -> Outcome {
    if let Some(path) = c.input.as_ref().filter(|p| p.extension().is_some_and(|e| e == "json")) {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        let spec: SubspaceSpecJson = serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        let spec = spec.resolve(path.parent())?;
        let report = virtual_dimension_spec(&spec)?;
        let frame = spec.frame()?;
        let pi = chernlab::stiefel::projection_from_frame(&frame);
        let decay = decay_diagnostics(&pi, &frame.window())?;
        return Ok(json!({
            "command": "grass",
            "source": { "input": path.display().to_string() },
            "virtual_dimension": report,
            "decay": decay,
        }));
    }
    let input = load_map(c)?;
    let map = with_window(input.built.map, c)?;
    if map.codomain() == Codomain::Unitary {
        return Err(Failure::Numeric("grass needs a projection or frame map".into()));
    }
    let forms = ch_total(&map, c.kmax)?;
    if let Some(p) = &c.csv {
        write_csv(p, &forms)?;
    }
    let mut report = json!({
        "command": "grass",
        "source": input.source,
        "domain": domain_json(&map),
        "forms": forms.iter().map(form_json).collect::<Vec<_>>(),
    });
    if let (Some(win), Codomain::Projection) = (map.window(), map.codomain()) {
        let p: &ComplexMatrix = map.value(0);
        let rank = chernlab::numkernel::numerical_rank_default(p).numerical_rank as i64;
        report["virtual_dimension"] = json!(rank - win.plus_dim() as i64);
        report["decay"] = serde_json::to_value(decay_diagnostics(p, &win)?).expect("serializable");
    } else if map.codomain() == Codomain::Projection {
        let rank = chernlab::numkernel::numerical_rank_default(map.value(0)).numerical_rank;
        report["rank"] = json!(rank);
    }
    Ok(report)
}

fn cmd_khat(c: &Common) -> Outcome {
    let input = load_map(c)?;
    let map = with_window(input.built.map, c)?;
    let data = classify(&map, c.kmax)?;
    Ok(json!({ "command": "khat", "source": input.source, "domain": domain_json(&map), "class": data.report() }))
}

fn cmd_verify(c: &Common, filter: Option<String>) -> std::result::Result<(Value, bool), Failure> {
    if c.builder.is_some() || c.input.is_some() {
        return config("verify takes no map input");
    }
    let cfg = SuiteConfig { seed: c.seed, tolerance: c.tol, filter };
    let report = suite::run(&cfg)?;
    for check in &report.checks {
        eprintln!(
            "{} {}/{}: {:.3e} (bound {:.0e})",
            if check.pass { "PASS" } else { "FAIL" },
            check.group,
            check.name,
            check.measured,
            check.tolerance
        );
    }
    eprintln!("{} passed, {} failed", report.passed, report.failed);
    let failed = !report.all_pass;
    Ok((serde_json::to_value(&report).expect("suite reports serialize"), failed))
}
