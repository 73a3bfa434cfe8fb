use clap::{Parser, Subcommand, ValueEnum};
use helicity_lab::acceptance;
use helicity_lab::blocks::{
    make_bundle, make_helical, make_pipe, random_shear, shear, BundleSpec, BundlingSpec, CutoffTiles, HelicalSpec, PipeSpec,
};
use helicity_lab::geometry::RationalDirection;
use helicity_lab::helicity::{
    generalized_helicity, helicity_classical, helicity_fourier, helicity_mollified, shell_matrix, GeneralizedOptions,
};
use helicity_lab::kernels::{ClassAKernel, KernelSpec, Mollifier, MollifierProfile, ShellFamily};
use helicity_lab::spectral::io::{read_vf3, write_vf3};
use helicity_lab::spectral::{Grid, TrigSeries3, VectorField3};
use helicity_lab::toy::{beltrami_background, perturb, step0, ProfilePair, ToyParams};
use helicity_lab::transport::{deformation_bound_check, solve_flow};
use helicity_lab::{Error, Result};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Helicity diagnostics, building blocks and a toy iteration step on the 3-torus.
#[derive(Parser, Debug)]
#[command(name = "helicity-lab", version)]
struct Cli {
    /// Seed for every random construction.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a field and write it as VF3 with a JSON sidecar.
    Gen(GenArgs),
    /// Measure the helicity of a VF3 field.
    Helicity(HelicityArgs),
    /// Shell helicity matrix of a VF3 field as CSV.
    Shells(ShellArgs),
    /// Run acceptance criteria; exits nonzero if any fails.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Print the full JSON report instead of one line per criterion.
        #[arg(long)]
        json: bool,
    },
    /// Initial step `u₁` from constant profiles.
    Step0(Step0Args),
    /// One toy perturbation step on a Beltrami background.
    Perturb(PerturbArgs),
    /// Flow map of a VF3 background and its deformation diagnostics.
    Flow(FlowArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Shear,
    Pipe,
    Bundle,
    Helical,
    Beltrami,
}

#[derive(clap::Args, Debug)]
struct GenArgs {
    kind: GenKind,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
    /// Direction numerator and denominator, e.g. `0,3,4,5`.
    #[arg(long, default_value = "0,0,1,1")]
    xi: String,
    #[arg(long, default_value_t = 8)]
    lambda: u32,
    #[arg(long, default_value_t = 0.5)]
    r: f64,
    #[arg(long, default_value_t = 2)]
    order: usize,
    #[arg(long)]
    band: Option<f64>,
    #[arg(long, default_value_t = 2)]
    lambda_star: u32,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    sign: i8,
    #[arg(long, default_value_t = 4)]
    bundle_lambda: u32,
    #[arg(long, default_value_t = 0.5)]
    bundle_r: f64,
    /// Cutoff tile counts `a,b`.
    #[arg(long, default_value = "1,1")]
    tiles: String,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Classical,
    Fourier,
    Mollified,
    Shells,
    Generalized,
}

#[derive(clap::Args, Debug)]
struct HelicityArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Fourier)]
    mode: Mode,
    /// Kernel JSON object or array, inline or `@path`.
    #[arg(long)]
    kernel: Option<String>,
    /// Comma separated mollification scales.
    #[arg(long, default_value = "0.2,0.1,0.05,0.025")]
    eps_ladder: String,
    #[arg(long, default_value_t = 6)]
    max_shell: usize,
}

#[derive(clap::Args, Debug)]
struct ShellArgs {
    file: PathBuf,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long, default_value_t = 6)]
    max_shell: usize,
}

#[derive(clap::Args, Debug)]
struct Step0Args {
    #[arg(long, default_value_t = 1.0)]
    e: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    h: f64,
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    /// ToyParams JSON file; missing fields take their defaults.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Also write `u₁` as VF3.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct PerturbArgs {
    #[arg(long, default_value_t = 1.0)]
    e: f64,
    /// Target helicity minus the background helicity.
    #[arg(long, default_value_t = 1.0)]
    h_gap: f64,
    /// Beltrami background amplitude `A`, so `‖u‖² = A²`.
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    amplitude: f64,
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    #[arg(long)]
    params: Option<PathBuf>,
    /// Also write the perturbation `w` as VF3.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct FlowArgs {
    #[arg(long)]
    bg: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t0: f64,
    #[arg(long, allow_negative_numbers = true)]
    t1: f64,
    #[arg(long)]
    steps: usize,
    /// Grid on which the map is solved.
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Relative cutoff for the background's Fourier modes.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| Error::InvalidParams(format!("bad {what} entry {p:?}"))))
        .collect()
}

fn parse_xi(s: &str) -> Result<RationalDirection> {
    let v: Vec<i64> = parse_list(s, "direction")?;
    match v.as_slice() {
        [a, b, c, d] => RationalDirection::new([*a, *b, *c], *d),
        [a, b, c] => RationalDirection::from_integer([*a, *b, *c]),
        _ => Err(Error::InvalidParams("direction needs three or four integers".into())),
    }
}

fn read_json_arg(s: &str) -> Result<Value> {
    let text = match s.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)?,
        None => s.to_string(),
    };
    Ok(serde_json::from_str(&text)?)
}

fn kernel_specs(arg: Option<&str>) -> Result<Vec<KernelSpec>> {
    let Some(arg) = arg else {
        return Ok(vec![
            KernelSpec { kind: "classA".into(), delta: Some(0.25), support: Some(1.0), eps: None },
            KernelSpec { kind: "classA".into(), delta: Some(0.4), support: Some(1.2), eps: None },
            KernelSpec { kind: "gaussian".into(), delta: None, support: None, eps: None },
        ]);
    };
    Ok(match read_json_arg(arg)? {
        Value::Array(items) => items.into_iter().map(serde_json::from_value).collect::<std::result::Result<_, _>>()?,
        v => vec![serde_json::from_value(v)?],
    })
}

fn first_class_a(specs: &[KernelSpec]) -> Result<ClassAKernel> {
    specs
        .iter()
        .find_map(|s| s.class_a().ok())
        .ok_or_else(|| Error::InvalidKernel("need at least one classA kernel".into()))
}

fn load_params(path: Option<&Path>) -> Result<ToyParams> {
    match path {
        Some(p) => Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?),
        None => Ok(ToyParams::default()),
    }
}

fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json(v: &Value) -> Result<()> {
    emit(&(serde_json::to_string_pretty(v)? + "\n"))
}

fn gen(args: &GenArgs, seed: u64) -> Result<Value> {
    let grid = Grid::new(args.n)?;
    let xi = parse_xi(&args.xi)?;
    let mut pipe = PipeSpec::new(xi, args.lambda, args.r).with_order(args.order);
    if let Some(b) = args.band {
        pipe = pipe.with_band(b);
    }
    let (field, spec): (VectorField3, Value) = match args.kind {
        GenKind::Shear => {
            let spec = random_shear(args.band.map(|b| b as i64).unwrap_or(4), seed);
            (shear(grid, &spec), serde_json::to_value(&spec)?)
        }
        GenKind::Pipe => (make_pipe(&pipe, grid)?.w(), serde_json::to_value(&pipe)?),
        GenKind::Bundle => {
            let counts: Vec<usize> = parse_list(&args.tiles, "tile count")?;
            if counts.len() != 2 {
                return Err(Error::InvalidParams("tiles needs two counts".into()));
            }
            let spec = BundleSpec {
                pipe: pipe.clone(),
                bundling: BundlingSpec { xi, lambda: args.bundle_lambda, r: args.bundle_r, shift: [0, 0] },
                tiles: CutoffTiles { xi, counts: [counts[0], counts[1]] },
            };
            (make_bundle(&spec, grid)?.field, serde_json::to_value(&spec)?)
        }
        GenKind::Helical => {
            let base = PipeSpec { xi: RationalDirection::axis(1), ..pipe };
            let spec = HelicalSpec { base, lambda_star: args.lambda_star, sign: args.sign };
            let hp = make_helical(&spec, grid)?;
            (hp.fields().h, serde_json::to_value(&spec)?)
        }
        GenKind::Beltrami => (beltrami_background(grid, args.amplitude), json!({ "amplitude": args.amplitude })),
    };
    let kind = format!("{:?}", args.kind).to_lowercase();
    let meta = json!({ "kind": kind, "n": args.n, "seed": seed, "spec": spec });
    write_vf3(&args.out, &field, Some(&meta))?;
    Ok(json!({ "written": args.out, "kind": kind, "n": args.n, "l2_norm": field.l2_norm() }))
}

fn helicity_cmd(args: &HelicityArgs) -> Result<Option<Value>> {
    let u = read_vf3(&args.file)?;
    let specs = kernel_specs(args.kernel.as_deref())?;
    let ladder: Vec<f64> = parse_list(&args.eps_ladder, "eps")?;
    Ok(Some(match args.mode {
        Mode::Classical => json!({ "mode": "classical", "helicity": helicity_classical(&u) }),
        Mode::Fourier => json!({ "mode": "fourier", "helicity": helicity_fourier(&u) }),
        Mode::Mollified => {
            let mut rows = Vec::new();
            for s in &specs {
                let profile = s.profile()?;
                let eps_list = match s.eps {
                    Some(e) => vec![e],
                    None => ladder.clone(),
                };
                for eps in eps_list {
                    let h = helicity_mollified(&u, &Mollifier::new(profile, eps)?)?;
                    rows.push(json!({ "kernel": profile.label(), "eps": eps, "helicity": h }));
                }
            }
            json!({ "mode": "mollified", "values": rows })
        }
        Mode::Shells => {
            let fam = ShellFamily::new(first_class_a(&specs)?);
            emit(&shell_matrix(&u, &fam, args.max_shell).to_csv())?;
            return Ok(None);
        }
        Mode::Generalized => {
            let fams: Vec<ShellFamily> = specs.iter().filter_map(|s| s.class_a().ok()).map(ShellFamily::new).collect();
            let profiles: Vec<MollifierProfile> = specs.iter().map(|s| s.profile()).collect::<Result<_>>()?;
            let rep = generalized_helicity(&u, &fams, &profiles, &ladder, args.max_shell, GeneralizedOptions::default())?;
            json!({ "mode": "generalized", "report": rep })
        }
    }))
}

fn verify(suite: &str, as_json: bool) -> Result<bool> {
    let ids = acceptance::suite(suite)?;
    let mut results = Vec::new();
    for id in ids {
        let r = acceptance::run(id);
        if !as_json {
            emit(&(r.line() + "\n"))?;
        }
        results.push(r);
    }
    let pass = results.iter().all(|r| r.pass);
    if as_json {
        print_json(&json!({ "suite": suite, "pass": pass, "criteria": results }))?;
    }
    Ok(pass)
}

fn flow_cmd(args: &FlowArgs) -> Result<Value> {
    let bg = read_vf3(&args.bg)?;
    let series = TrigSeries3::from_spectral(&bg.to_spectral(), args.tol);
    let grid = Grid::new(args.n)?;
    let flow = solve_flow(&series, grid, args.t0, args.t1, args.steps)?;
    Ok(json!({
        "background": args.bg,
        "modes": series.mode_count(),
        "deformation": deformation_bound_check(&flow),
        "inverse_error": flow.inverse_error(),
    }))
}

fn execute(cli: &Cli) -> Result<bool> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Gen(a) => print_json(&gen(a, cli.seed)?)?,
        Command::Helicity(a) => {
            if let Some(v) = helicity_cmd(a)? {
                print_json(&v)?;
            }
        }
        Command::Shells(a) => {
            let u = read_vf3(&a.file)?;
            let fam = ShellFamily::new(first_class_a(&kernel_specs(a.kernel.as_deref())?)?);
            emit(&shell_matrix(&u, &fam, a.max_shell).to_csv())?;
        }
        Command::Verify { suite, json } => return verify(suite, *json),
        Command::Step0(a) => {
            let p = load_params(a.params.as_deref())?;
            let (u, rep) = step0(&ProfilePair::constant(a.e, a.h), &p, a.t)?;
            if let Some(out) = &a.out {
                write_vf3(out, &u, Some(&json!({ "kind": "step0", "params": p, "report": rep })))?;
            }
            print_json(&serde_json::to_value(&rep)?)?;
        }
        Command::Perturb(a) => {
            let mut p = load_params(a.params.as_deref())?;
            p.seed = cli.seed;
            let u = beltrami_background(p.grid()?, a.amplitude);
            let h = helicity_fourier(&u) + a.h_gap;
            let (w, rep) = perturb(&u, &ProfilePair::constant(a.e, h), &p, a.t)?;
            if let Some(out) = &a.out {
                write_vf3(out, &w.total, Some(&json!({ "kind": "perturbation", "params": p })))?;
            }
            print_json(&serde_json::to_value(&rep)?)?;
        }
        Command::Flow(a) => print_json(&flow_cmd(a)?)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{}", json!({ "error": "usage", "message": e.to_string().trim_end() }));
            return ExitCode::from(2);
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
