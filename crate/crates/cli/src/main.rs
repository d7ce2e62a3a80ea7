mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use gomboc::curvature::{self, BetaSearchOptions, CurvatureReport};
use gomboc::equilibria::{self, EquilibriumReport};
use gomboc::mesh::{tessellate, write_obj, write_stl, StlMode};
use gomboc::moments::{com_residuals, MomentReport};
use gomboc::quadrature::SphericalGrid;
use gomboc::GombocError;
use serde_json::{json, Map, Value};

use config::{GridArgs, MeshFormat, ShapeArgs, ShapeEcho};

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "gomboc", version, about = "Analytic Gömböc shapes: verification, search and mesh export")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Center of mass, equilibria and convexity; exit 0 iff the shape is a Gömböc.
    /// --ntheta/--nphi set the curvature scan.
    Verify(VerifyArgs),
    /// Same checks as verify, printed in full.
    Report(VerifyArgs),
    /// Equilibrium census. --ntheta/--nphi set the critical-point scan.
    Equilibria(CommonArgs),
    /// Principal-curvature scan. --ntheta/--nphi set the scan grid.
    Convexity(CommonArgs),
    /// Largest convex amplitude for the phase law. --ntheta/--nphi set the scan grid.
    BetaMax(BetaMaxArgs),
    /// Tessellate and write a mesh. --ntheta/--nphi set the tessellation.
    Mesh(MeshArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Write a JSON report to this path ("-" for stdout).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(clap::Args)]
struct BetaMaxArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Bracket width at which bisection stops.
    #[arg(long)]
    tol: Option<f64>,
    /// Initial bracket; must be convex at LO and non-convex at HI.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    bracket: Option<Vec<f64>>,
}

#[derive(clap::Args)]
struct MeshArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output file.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<MeshFormat>,
}

/// Deterministic body plus a separate timing block.
struct Report {
    body: Map<String, Value>,
    timings: Map<String, Value>,
}

impl Report {
    fn new(command: &str, shape: &ShapeEcho) -> Self {
        let mut body = Map::new();
        body.insert("schema".into(), json!(SCHEMA));
        body.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        body.insert("command".into(), json!(command));
        body.insert("shape".into(), json!(shape));
        Self {
            body,
            timings: Map::new(),
        }
    }

    fn insert(&mut self, key: &str, value: impl serde::Serialize) -> Result<()> {
        self.body.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    fn timed<T>(&mut self, key: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings
            .insert(format!("{key}_seconds"), json!(start.elapsed().as_secs_f64()));
        out
    }

    fn write(mut self, path: Option<&Path>) -> Result<()> {
        let Some(path) = path else { return Ok(()) };
        self.body.insert("timings".into(), Value::Object(self.timings));
        let text = serde_json::to_string_pretty(&Value::Object(self.body))? + "\n";
        if path == Path::new("-") {
            std::io::stdout().write_all(text.as_bytes())?;
        } else {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

fn exit_code(pass: bool) -> u8 {
    if pass {
        0
    } else {
        1
    }
}

fn verdict(ok: bool, yes: &str, no: &str) -> String {
    if ok { yes } else { no }.to_string()
}

fn shape_line(e: &ShapeEcho) -> String {
    let preset = e.preset.map(|p| format!("{p:?} ").to_lowercase()).unwrap_or_default();
    format!("{preset}beta={} phase={} r0={}", e.beta, e.phase, e.scale_r0)
}

struct Verification {
    moments: MomentReport,
    equilibria: EquilibriumReport,
    curvature: CurvatureReport,
    is_gomboc: bool,
}

fn verify(args: &CommonArgs, command: &str) -> Result<(Verification, Report, ShapeEcho)> {
    let file = args.shape.file()?;
    let (shape, echo) = args.shape.resolve(&file)?;
    let (qt, qp) = GridArgs::default().pick(file.quadrature, (SphericalGrid::DEFAULT_THETA, SphericalGrid::DEFAULT_PHI));
    let (et, ep) = GridArgs::default().pick(
        file.equilibrium_scan,
        (equilibria::DEFAULT_SCAN_THETA, equilibria::DEFAULT_SCAN_PHI),
    );
    let (ct, cp) = args.grid.pick(
        file.curvature_scan,
        (curvature::DEFAULT_SCAN_THETA, curvature::DEFAULT_SCAN_PHI),
    );
    let grid = SphericalGrid::new(qt, qp)?;

    let mut report = Report::new(command, &echo);
    let moments = report.timed("moments", || com_residuals(&shape, &grid));
    let equilibria = report.timed("equilibria", || equilibria::census_with(&shape, et, ep))?;
    let curvature = report.timed("convexity", || curvature::convexity_scan(&shape, ct, cp))?;
    let is_gomboc = moments.com_at_origin && equilibria.is_mono_monostatic && curvature.is_convex;
    report.insert("moments", &moments)?;
    report.insert("equilibria", &equilibria)?;
    report.insert("curvature", &curvature)?;
    report.insert("is_gomboc", is_gomboc)?;
    Ok((
        Verification {
            moments,
            equilibria,
            curvature,
            is_gomboc,
        },
        report,
        echo,
    ))
}

fn print_equilibria(r: &EquilibriumReport, scale: f64) {
    println!("  {:>14} {:>14} {:>9} {:>10} {:>12}", "theta", "phi", "kind", "|grad|", "radius");
    for p in &r.points {
        println!(
            "  {:>14.10} {:>14.10} {:>9} {:>10.2e} {:>12.8}",
            p.theta,
            p.phi,
            format!("{:?}", p.kind),
            p.grad_norm,
            p.radius * scale
        );
    }
}

fn cmd_verify(args: &VerifyArgs, full: bool) -> Result<u8> {
    let command = if full { "report" } else { "verify" };
    let (v, report, echo) = verify(&args.common, command)?;
    let m = &v.moments;
    let e = &v.equilibria;
    let c = &v.curvature;
    println!("shape: {}", shape_line(&echo));
    println!(
        "center of mass: |z| = {:.2e}, |xy| = {:.2e} -> {}",
        m.com_residual_z.abs(),
        m.com_residual_xy.norm(),
        verdict(m.com_at_origin, "at origin", "off origin")
    );
    println!(
        "equilibria: {} stable, {} unstable, {} saddle (index {}) -> {}",
        e.counts.stable,
        e.counts.unstable,
        e.counts.saddle,
        e.index_sum,
        verdict(e.is_mono_monostatic, "mono-monostatic", "not mono-monostatic")
    );
    println!(
        "convexity: min kappa1 = {:.6} at (theta, phi) = ({:.6}, {:.6}) -> {}",
        c.min_kappa1,
        c.argmin.theta,
        c.argmin.phi,
        verdict(c.is_convex, "convex", "not convex")
    );
    if full {
        println!("volume: {:.10}", m.volume);
        println!("center of mass: ({:.3e}, {:.3e}, {:.3e})", m.com[0], m.com[1], m.com[2]);
        print_equilibria(e, echo.scale_r0);
        println!(
            "curvature scan: {}x{} plus two {}x{} pole caps, {} samples, min mean curvature {:.6}",
            c.n_theta, c.n_phi, c.cap_nodes, c.cap_nodes, c.samples, c.min_mean
        );
        for (k, t) in &report.timings {
            println!("{k}: {:.3}", t.as_f64().unwrap_or(0.0));
        }
    }
    println!("is_gomboc: {}", v.is_gomboc);
    report.write(args.common.json.as_deref())?;
    Ok(exit_code(v.is_gomboc))
}

fn cmd_equilibria(args: &CommonArgs) -> Result<u8> {
    let file = args.shape.file()?;
    let (shape, echo) = args.shape.resolve(&file)?;
    let (nt, np) = args.grid.pick(
        file.equilibrium_scan,
        (equilibria::DEFAULT_SCAN_THETA, equilibria::DEFAULT_SCAN_PHI),
    );
    let mut report = Report::new("equilibria", &echo);
    let r = report.timed("equilibria", || equilibria::census_with(&shape, nt, np))?;
    println!("shape: {}", shape_line(&echo));
    print_equilibria(&r, echo.scale_r0);
    println!("index sum {}, mono-monostatic: {}", r.index_sum, r.is_mono_monostatic);
    report.insert("equilibria", &r)?;
    report.write(args.json.as_deref())?;
    Ok(0)
}

fn cmd_convexity(args: &CommonArgs) -> Result<u8> {
    let file = args.shape.file()?;
    let (shape, echo) = args.shape.resolve(&file)?;
    let (nt, np) = args.grid.pick(
        file.curvature_scan,
        (curvature::DEFAULT_SCAN_THETA, curvature::DEFAULT_SCAN_PHI),
    );
    let mut report = Report::new("convexity", &echo);
    let r = report.timed("convexity", || curvature::convexity_scan(&shape, nt, np))?;
    println!("shape: {}", shape_line(&echo));
    println!(
        "min kappa1 = {:.6} at (theta, phi) = ({:.6}, {:.6}), {:?} chart",
        r.min_kappa1, r.argmin.theta, r.argmin.phi, r.argmin.chart
    );
    println!("convex: {}", r.is_convex);
    report.insert("curvature", &r)?;
    report.write(args.json.as_deref())?;
    Ok(exit_code(r.is_convex))
}

fn cmd_beta_max(args: &BetaMaxArgs) -> Result<u8> {
    let c = &args.common;
    let file = c.shape.file()?;
    let (phase, preset) = c.shape.resolve_phase(&file)?;
    let defaults = BetaSearchOptions::default();
    let (nt, np) = c
        .grid
        .pick(file.curvature_scan, (defaults.n_theta, defaults.n_phi));
    let [lo, hi] = match (&args.bracket, file.bracket) {
        (Some(b), _) => [b[0], b[1]],
        (None, Some(b)) => b,
        (None, None) => [defaults.lo, defaults.hi],
    };
    let opts = BetaSearchOptions {
        lo,
        hi,
        tol: args.tol.or(file.tol).unwrap_or(defaults.tol),
        n_theta: nt,
        n_phi: np,
    };
    let echo = ShapeEcho {
        preset,
        beta: f64::NAN,
        phase: phase.name(),
        scale_r0: c.shape.scale.or(file.scale).unwrap_or(1.0),
    };
    let mut report = Report::new("beta-max", &echo);
    report.body.insert("shape".into(), json!({ "preset": preset, "phase": phase.name() }));
    let r = report.timed("search", || curvature::beta_max_with(&phase, opts))?;
    println!("phase: {}", phase.name());
    println!(
        "beta_max = {:.6} (bracket [{:.6}, {:.6}] on {}x{}, verified at {}x{}: {})",
        r.beta_max,
        r.bracket[0],
        r.bracket[1],
        r.n_theta,
        r.n_phi,
        r.verification.n_theta,
        r.verification.n_phi,
        r.verified
    );
    report.insert("options", opts)?;
    report.insert("result", &r)?;
    report.write(c.json.as_deref())?;
    Ok(0)
}

fn cmd_mesh(args: &MeshArgs) -> Result<u8> {
    let c = &args.common;
    let file = c.shape.file()?;
    let (shape, echo) = c.shape.resolve(&file)?;
    let (nt, np) = c.grid.pick(file.mesh, (128, 256));
    let Some(out) = &args.output else {
        bail!("mesh needs an output path (-o)");
    };
    let format = args.format.or(file.format).unwrap_or(MeshFormat::StlBin);
    let mut report = Report::new("mesh", &echo);
    let mesh = report.timed("tessellate", || tessellate(&shape, nt, np))?;
    report.timed("write", || match format {
        MeshFormat::StlBin => write_stl(&mesh, out, StlMode::Binary),
        MeshFormat::StlAscii => write_stl(&mesh, out, StlMode::Ascii),
        MeshFormat::Obj => write_obj(&mesh, out),
    })?;
    let integrity = mesh.integrity();
    let volume = mesh.volume();
    println!("shape: {}", shape_line(&echo));
    println!(
        "{}: {} vertices, {} triangles ({nt}x{np})",
        out.display(),
        mesh.vertices.len(),
        mesh.triangles.len()
    );
    println!("volume: {volume:.8} (unit-scale {:.8})", volume / echo.scale_r0.powi(3));
    println!(
        "watertight: {}, consistently oriented: {}, outward: {}, min triangle area {:.3e}",
        integrity.watertight, integrity.consistently_oriented, integrity.outward, integrity.min_area
    );
    report.insert("path", out)?;
    report.insert("format", format)?;
    report.insert("grid", [nt, np])?;
    report.insert("vertices", mesh.vertices.len())?;
    report.insert("triangles", mesh.triangles.len())?;
    report.insert("volume", volume)?;
    report.insert("integrity", integrity)?;
    report.write(c.json.as_deref())?;
    Ok(exit_code(integrity.ok()))
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Verify(a) => cmd_verify(a, false),
        Command::Report(a) => cmd_verify(a, true),
        Command::Equilibria(a) => cmd_equilibria(a),
        Command::Convexity(a) => cmd_convexity(a),
        Command::BetaMax(a) => cmd_beta_max(a),
        Command::Mesh(a) => cmd_mesh(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let numeric = err
                .chain()
                .find_map(|e| e.downcast_ref::<GombocError>())
                .is_some_and(GombocError::is_numeric);
            ExitCode::from(if numeric { 3 } else { 2 })
        }
    }
}
