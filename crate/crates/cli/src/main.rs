use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use plate_haptics::model::synthetic::{self, EllipsoidSpec};
use plate_haptics::model::{save_csv_fixed, MaterialConfig};
use plate_haptics::plate::matrix_io::{read_matrix, write_matrix};
use plate_haptics::plate::{solve_plate, CancelToken, GridSpec, LoadField, RigidityGrid, SolverMethod, SolverSettings};
use plate_haptics::session::{self, load_model_file, parse_script, EngineConfig, Pipeline, RecordOptions};

#[derive(Parser)]
#[command(name = "plate-haptics", version, about = "Haptic rendering of thin point-cloud surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a HIP trajectory and write one JSON record per step.
    Render(RenderArgs),
    /// Serve the length-prefixed text protocol over TCP.
    Serve(ServeArgs),
    /// Solve one plate problem from rigidity and load matrices.
    SolvePlate(SolvePlateArgs),
    /// Write the synthetic ellipsoid model as CSV.
    GenerateEllipsoid(EllipsoidArgs),
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Plate solver.
    #[arg(long, default_value = "direct", value_parser = parse_method)]
    solver: SolverMethod,
    /// Relative change that stops Jacobi.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Jacobi damping factor.
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iterations: usize,
}

impl SolverArgs {
    fn settings(&self) -> SolverSettings {
        SolverSettings {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            relaxation: self.omega,
            method: self.solver,
        }
    }
}

fn parse_method(s: &str) -> Result<SolverMethod, String> {
    s.parse()
}

#[derive(Args, Clone)]
struct EngineArgs {
    /// Plate grid nodes per side.
    #[arg(long, default_value_t = 64)]
    grid_n: usize,
    #[arg(long, default_value_t = 0.2)]
    poisson: f64,
    /// Shell thickness h.
    #[arg(long, default_value_t = 0.2)]
    thickness: f64,
    /// Proxy ball radius; also sets the spatial index cell size.
    #[arg(long, default_value_t = 0.1)]
    proxy_radius: f64,
    /// Patch radius around the contact (default: 8 proxy radii).
    #[arg(long)]
    neighborhood_radius: Option<f64>,
    /// Contact area A in the stiffness EA/h.
    #[arg(long, default_value_t = 0.01)]
    contact_area: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

impl EngineArgs {
    fn config(&self) -> Result<EngineConfig> {
        let material = MaterialConfig {
            thickness: self.thickness,
            poisson: self.poisson,
            contact_area: self.contact_area,
            ..MaterialConfig::with_proxy_radius(self.proxy_radius)
        };
        let material = match self.neighborhood_radius {
            Some(r) => MaterialConfig { neighborhood_radius: r, ..material },
            None => material,
        };
        let config = EngineConfig { material, grid_n: self.grid_n, solver: self.solver.settings() };
        config.validate().map_err(anyhow::Error::msg)?;
        Ok(config)
    }
}

#[derive(Args)]
struct RenderArgs {
    /// Model file (.csv or .ply).
    #[arg(long)]
    model: PathBuf,
    /// Trajectory CSV with `t,x,y,z` rows.
    #[arg(long)]
    script: PathBuf,
    /// Output file; `-` for stdout.
    #[arg(long, default_value = "-")]
    out: PathBuf,
    /// Write `solver_ms` as null so output is reproducible.
    #[arg(long)]
    omit_timing: bool,
    /// Include every deformed patch point in the records.
    #[arg(long)]
    with_patch: bool,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Port to listen on; 0 picks a free one.
    #[arg(long, default_value_t = 7878)]
    port: u16,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct SolvePlateArgs {
    /// Rigidity matrix D (grid matrix text format).
    #[arg(long)]
    rigidity: PathBuf,
    /// Pressure matrix q on the same grid.
    #[arg(long)]
    load: PathBuf,
    /// Output deflection matrix; `-` for stdout.
    #[arg(long, default_value = "-")]
    out: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    poisson: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct EllipsoidArgs {
    #[arg(long, default_value = "-")]
    out: PathBuf,
    #[arg(long, default_value_t = 40_000)]
    count: usize,
    /// Semi-axes a,b,c.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [2.0, 1.5, 1.0])]
    semi_axes: Vec<f64>,
    #[arg(long, default_value_t = 20.0)]
    modulus_min: f64,
    #[arg(long, default_value_t = 200.0)]
    modulus_max: f64,
    /// Decimals written per value.
    #[arg(long, default_value_t = 6)]
    decimals: usize,
}

fn open_output(path: &PathBuf) -> Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufWriter::new(std::io::stdout().lock())));
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(Box::new(BufWriter::new(file)))
}

fn render(args: &RenderArgs) -> Result<()> {
    let config = args.engine.config()?;
    let model = load_model_file(&args.model, config.material.proxy_radius)
        .with_context(|| format!("loading {}", args.model.display()))?;
    let script_file = File::open(&args.script).with_context(|| format!("opening {}", args.script.display()))?;
    let script = parse_script(BufReader::new(script_file)).with_context(|| format!("reading {}", args.script.display()))?;
    log::info!("{} points, {} steps", model.len(), script.len());

    let options = RecordOptions { omit_timing: args.omit_timing, include_patch: args.with_patch };
    let mut out = open_output(&args.out)?;
    let mut pipeline = Pipeline::new(&model, config);
    for step in &script {
        let record = pipeline.step(step.t, step.hip);
        writeln!(out, "{}", session::record_line(&record, options))?;
    }
    out.flush()?;
    Ok(())
}

fn serve(args: &ServeArgs) -> Result<()> {
    let config = args.engine.config()?;
    let model = load_model_file(&args.model, config.material.proxy_radius)
        .with_context(|| format!("loading {}", args.model.display()))?;
    let listener = TcpListener::bind((args.host.as_str(), args.port))
        .with_context(|| format!("binding {}:{}", args.host, args.port))?;
    eprintln!("listening on {}", listener.local_addr()?);
    session::server::serve(listener, Arc::new(model), config)?;
    Ok(())
}

fn read_grid(path: &PathBuf) -> Result<plate_haptics::plate::matrix_io::GridMatrix> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_matrix(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn solve_plate_cmd(args: &SolvePlateArgs) -> Result<()> {
    let rigidity = read_grid(&args.rigidity)?;
    let load = read_grid(&args.load)?;
    if rigidity.values.n() != load.values.n() || rigidity.spacing != load.spacing {
        bail!(
            "rigidity grid ({} nodes, spacing {}) and load grid ({} nodes, spacing {}) differ",
            rigidity.values.n(),
            rigidity.spacing,
            load.values.n(),
            load.spacing
        );
    }
    let settings = args.solver.settings();
    settings.validate()?;
    let spec = GridSpec::new(rigidity.values.n(), rigidity.spacing, [0.0, 0.0])?;
    let rig = RigidityGrid::from_nodes(spec, args.poisson, rigidity.values)?;
    let load = LoadField::from_nodes(spec, load.values)?;
    let field = solve_plate(&rig, &load, &settings, &CancelToken::new())?;
    log::info!("solved in {} iterations, residual {:e}", field.iterations, field.residual);
    let mut out = open_output(&args.out)?;
    write_matrix(&mut out, spec.spacing, &field.w)?;
    out.flush()?;
    Ok(())
}

fn generate_ellipsoid(args: &EllipsoidArgs) -> Result<()> {
    let spec = EllipsoidSpec {
        semi_axes: [args.semi_axes[0], args.semi_axes[1], args.semi_axes[2]],
        count: args.count,
        modulus_min: args.modulus_min,
        modulus_max: args.modulus_max,
    };
    let points = synthetic::ellipsoid(&spec);
    let mut out = open_output(&args.out)?;
    save_csv_fixed(&mut out, &points, args.decimals)?;
    out.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Render(a) => render(a),
        Command::Serve(a) => serve(a),
        Command::SolvePlate(a) => solve_plate_cmd(a),
        Command::GenerateEllipsoid(a) => generate_ellipsoid(a),
    }
}
