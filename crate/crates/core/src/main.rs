use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use unbounded_cap::geom::bbox_diameter;
use unbounded_cap::io::generate::{generate, Distribution, GeneratorConfig};
use unbounded_cap::io::obj::{emit_cap_obj, emit_obj};
use unbounded_cap::io::off::{emit_off, parse_off};
use unbounded_cap::io::scene::{CapDoc, ExtensionDoc, LimitAngleDoc, MeshDoc, SceneDocument, SceneMetadata};
use unbounded_cap::limit_angle::DEFAULT_IDENTITY_TOL;
use unbounded_cap::pipeline::{self, Report, Run, RunMetadata, RunOptions, Stage, Status};
use unbounded_cap::{Polyhedron, Tolerances, Vec3};

#[derive(Parser)]
#[command(name = "unbounded-cap", version, about = "Caps of convex polyhedra, their unbounded extensions and limit angles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random convex polyhedron.
    Gen(GenArgs),
    /// Extract the cap and check that it is a disk.
    Cap(RunArgs),
    /// Extend the cap to an unbounded polyhedron.
    Extend(RunArgs),
    /// Build the limit angle of the extension.
    Limit(RunArgs),
    /// Run every stage and check the curvature identity.
    Check(CheckArgs),
    /// Like check, writing the extension as OBJ (stdout unless --out).
    Export(RunArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Off,
    Obj,
    Json,
}

#[derive(Args)]
struct SourceArgs {
    /// OFF file; without it a random polyhedron is generated.
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Points sampled for a generated polyhedron.
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value = "sphere-cap", value_parser = parse_distribution)]
    distribution: Distribution,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Cap angle in degrees, stored with JSON output.
    #[arg(long, default_value_t = 90.0)]
    phi: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "off")]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Cap angle in degrees, in (0, 90].
    #[arg(long, default_value_t = 90.0)]
    phi: f64,
    /// Relative geometric tolerance; multiplied by the bounding-box diameter.
    #[arg(long, default_value_t = Tolerances::REL_GEOM)]
    tol: f64,
    /// Apex of the limit angle.
    #[arg(long, default_value = "0,0,0", value_parser = parse_point)]
    apex: Vec3,
    /// Length of exported rays; defaults to twice the bounding-box diameter.
    #[arg(long)]
    ray_length: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// obj or json; json by default, obj for export.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Check this many fuzz instances, seeds --seed onwards, instead of one
    /// polyhedron.
    #[arg(long)]
    fuzz: Option<usize>,
}

fn parse_distribution(s: &str) -> Result<Distribution, String> {
    s.parse()
}

fn parse_point(s: &str) -> Result<Vec3, String> {
    let c: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match c[..] {
        [x, y, z] => Vec3::try_new(x, y, z).map_err(|e| e.to_string()),
        _ => Err(format!("expected x,y,z, got {} values", c.len())),
    }
}

/// Input problems; always exit 1.
struct Fail(String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(e.to_string())
    }
}

fn write_out(path: &Path, text: &str) -> Result<(), Fail> {
    fs::write(path, text).map_err(|e| Fail(format!("{}: {e}", path.display())))
}

fn load(src: &SourceArgs, phi: f64) -> Result<(Polyhedron, RunMetadata), Fail> {
    let meta = |tol| RunMetadata {
        input: src.input.as_ref().map(|p| p.display().to_string()),
        seed: src.input.is_none().then_some(src.seed),
        n: src.input.is_none().then_some(src.n),
        distribution: src.input.is_none().then_some(src.distribution),
        phi_degrees: phi,
        tolerances: tol,
        identity_tolerance: DEFAULT_IDENTITY_TOL,
        apex: [0.0; 3],
    };
    let p = match &src.input {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Fail(format!("{}: {e}", path.display())))?;
            parse_off(&text).map_err(|e| Fail(format!("{}: {e}", path.display())))?
        }
        None => generate(&GeneratorConfig { n: src.n, seed: src.seed, distribution: src.distribution, phi_degrees: phi })?,
    };
    let tol = Tolerances::for_points(p.vertices());
    Ok((p, meta(tol)))
}

fn gen(a: &GenArgs) -> Result<ExitCode, Fail> {
    let (p, meta) = load(&a.source, a.phi)?;
    let text = match a.format {
        Format::Off => emit_off(&p),
        Format::Json => {
            let mut doc = SceneDocument::new(SceneMetadata {
                phi_degrees: Some(a.phi),
                seed: meta.seed,
                tolerances: Some(meta.tolerances),
                ..Default::default()
            });
            doc.polyhedron = Some(MeshDoc::from_polyhedron(&p));
            doc.count_parts();
            doc.to_json()
        }
        Format::Obj => return Err(Fail("gen writes off or json".into())),
    };
    match &a.out {
        Some(path) => {
            write_out(path, &text)?;
            let mut report = Report::new("gen", meta);
            report.polyhedron_vertex_count = Some(p.vertices().len());
            report.polyhedron_face_count = Some(p.faces().len());
            println!("{}", report.to_json());
        }
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn scene(run: &Run, p: &Polyhedron, meta: &RunMetadata) -> String {
    let mut doc = SceneDocument::new(SceneMetadata {
        phi_degrees: Some(meta.phi_degrees),
        seed: meta.seed,
        tolerances: Some(meta.tolerances),
        ..Default::default()
    });
    doc.polyhedron = Some(MeshDoc::from_polyhedron(p));
    doc.cap = run.cap.as_ref().map(CapDoc::from_cap);
    doc.extension = run.extension.as_ref().map(ExtensionDoc::from_extension);
    doc.limit_angle = run.limit.as_ref().map(LimitAngleDoc::from_limit_angle);
    doc.count_parts();
    doc.to_json()
}

fn artifact(run: &Run, p: &Polyhedron, meta: &RunMetadata, format: Format, ray_length: f64) -> Result<String, String> {
    match format {
        Format::Json => Ok(scene(run, p, meta)),
        Format::Obj => match (&run.extension, &run.cap) {
            (Some(u), _) => emit_obj(u, ray_length, run.limit.as_ref()).map_err(|e| e.to_string()),
            (None, Some(c)) => Ok(emit_cap_obj(c)),
            (None, None) => Err("nothing to export: no cap was built".into()),
        },
        Format::Off => Err("off output is only available from gen".into()),
    }
}

fn run_command(name: &str, stage: Stage, a: &RunArgs, export: bool) -> Result<ExitCode, Fail> {
    if !(a.tol > 0.0 && a.tol.is_finite()) {
        return Err(Fail(format!("--tol must be positive, got {}", a.tol)));
    }
    if let Some(r) = a.ray_length {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Fail(format!("--ray-length must be positive, got {r}")));
        }
    }
    let format = a.format.unwrap_or(if export { Format::Obj } else { Format::Json });
    if format == Format::Off {
        return Err(Fail("off output is only available from gen".into()));
    }
    let (p, mut meta) = load(&a.source, a.phi)?;
    let diameter = bbox_diameter(p.vertices());
    meta.tolerances = Tolerances::with_relative(diameter, a.tol);
    meta.apex = a.apex.to_array();
    let opts = RunOptions {
        phi_degrees: a.phi,
        tol: meta.tolerances,
        apex: a.apex,
        identity_tol: meta.identity_tolerance,
    };
    let mut run = pipeline::run(&p, stage, &opts, Report::new(name, meta.clone()));

    let ray_length = a.ray_length.unwrap_or(2.0 * diameter);
    let to_stdout = export && a.out.is_none();
    if a.out.is_some() || to_stdout {
        match artifact(&run, &p, &meta, format, ray_length) {
            Ok(text) => match &a.out {
                Some(path) => write_out(path, &text)?,
                None => print!("{text}"),
            },
            Err(e) => run.report.fail(Status::InvalidInput, format!("export: {e}")),
        }
    }
    for d in &run.report.diagnostics {
        eprintln!("{name}: {d}");
    }
    if !to_stdout {
        println!("{}", run.report.to_json());
    }
    Ok(ExitCode::from(run.report.status.exit_code()))
}

fn fuzz_command(a: &RunArgs, count: usize) -> Result<ExitCode, Fail> {
    if a.source.input.is_some() {
        return Err(Fail("--fuzz generates its own instances and takes no input file".into()));
    }
    let report = pipeline::fuzz(a.source.seed, count, DEFAULT_IDENTITY_TOL);
    for f in &report.failures {
        eprintln!("check: seed {}: {}", f.seed, f.message);
    }
    println!("{}", report.to_json());
    Ok(ExitCode::from(report.status.exit_code()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Cap(a) => run_command("cap", Stage::Cap, a, false),
        Command::Extend(a) => run_command("extend", Stage::Extend, a, false),
        Command::Limit(a) => run_command("limit", Stage::Limit, a, false),
        Command::Check(CheckArgs { run, fuzz: Some(n) }) => fuzz_command(run, *n),
        Command::Check(CheckArgs { run, fuzz: None }) => run_command("check", Stage::Check, run, false),
        Command::Export(a) => run_command("export", Stage::Check, a, true),
    };
    match result {
        Ok(code) => code,
        Err(Fail(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
