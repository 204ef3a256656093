//! `optmix`: optimal-stirring simulations from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use optmix::io::runner;
use optmix::io::RawConfig;
use optmix::validation::{self, SuiteOptions};
use optmix::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICS: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

#[derive(Parser)]
#[command(name = "optmix", version, about = "Passive-scalar mixing by locally optimal stirring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write diagnostics.csv plus snapshots.
    Simulate(RunArgs),
    /// Smallest nonzero Laplacian eigenvalue of a domain.
    Eigen(RunArgs),
    /// Mix, L2 and sup norms and l0 of an initial condition.
    Norms(RunArgs),
    /// Run the built-in property suite; exits 4 if any check fails.
    Validate(ValidateArgs),
    /// Run periodic and no-flux versions of a rectangle setup and compare.
    CompareBc(RunArgs),
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// JSON configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// square | rectangle | circle | lshape | annulus | square-mesh | mesh
    #[arg(long)]
    shape: Option<String>,
    /// Grid intervals per side (rectangles) or 2/h (meshes).
    #[arg(long)]
    resolution: Option<usize>,
    /// Mesh file (implies shape `mesh`).
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// energy | enstrophy
    #[arg(long)]
    constraint: Option<String>,
    /// Root-mean-square speed for the energy constraint.
    #[arg(long = "U", visible_alias = "u-rms", allow_negative_numbers = true)]
    u_rms: Option<f64>,
    /// Strain rate 1/tau for the enstrophy constraint.
    #[arg(long = "inv-tau", allow_negative_numbers = true)]
    inv_tau: Option<f64>,
    /// no-flux | periodic
    #[arg(long)]
    bc: Option<String>,
    #[arg(long = "t-end", allow_negative_numbers = true)]
    t_end: Option<f64>,
    #[arg(long = "macro-dt", allow_negative_numbers = true)]
    macro_dt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    cfl: Option<f64>,
    /// Preset name or expression in x and y.
    #[arg(long)]
    ic: Option<String>,
    /// Comma-separated snapshot times.
    #[arg(long = "snapshot-times", value_delimiter = ',')]
    snapshot_times: Option<Vec<f64>>,
    /// two-thirds | half
    #[arg(long)]
    dealias: Option<String>,
    /// compensated | plain
    #[arg(long)]
    advection: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the result as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = SuiteOptions::default().seed)]
    seed: u64,
    /// Mesh size of the disk rotation check.
    #[arg(long = "rotation-h", default_value_t = SuiteOptions::default().rotation_h)]
    rotation_h: f64,
    #[arg(long)]
    json: bool,
}

impl RunArgs {
    fn raw(&self) -> Result<RawConfig, Error> {
        let base = match &self.config {
            Some(p) => RawConfig::from_file(p)?,
            None => RawConfig::default(),
        };
        Ok(base.merge(RawConfig {
            shape: self.shape.clone(),
            resolution: self.resolution,
            mesh: self.mesh.clone(),
            bc: self.bc.clone(),
            constraint: self.constraint.clone(),
            u_rms: self.u_rms,
            inv_tau: self.inv_tau,
            ic: self.ic.clone(),
            macro_dt: self.macro_dt,
            cfl: self.cfl,
            t_end: self.t_end,
            snapshot_times: self.snapshot_times.clone(),
            output_dir: self.output.clone(),
            dealias: self.dealias.clone(),
            advection: self.advection.clone(),
            seed: self.seed,
            ..Default::default()
        }))
    }

    /// Like [`RunArgs::raw`] but supplies a stirring setup when the
    /// command does not need one.
    fn raw_with_placeholders(&self, ic: bool) -> Result<RawConfig, Error> {
        let mut raw = self.raw()?;
        if raw.constraint.is_none() {
            raw.constraint = Some("energy".into());
            if raw.u_rms.is_none() {
                raw.u_rms = Some(1.0);
            }
        }
        if ic && raw.ic.is_none() {
            raw.ic = Some("x".into());
        }
        Ok(raw)
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        EXIT_NUMERICS
    } else {
        match e {
            Error::InvalidSeries(_) => EXIT_NUMERICS,
            _ => EXIT_CONFIG,
        }
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<(), Error> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn simulate(args: &RunArgs) -> Result<u8, Error> {
    let cfg = args.raw()?.resolve()?;
    for line in &cfg.provenance {
        log::info!("{line}");
    }
    let s = runner::simulate(&cfg)?;
    let last = s.records.last().expect("a run records at least t = 0");
    if args.json {
        print_json(&s.records)?;
    } else {
        println!("ic                 {}", cfg.ic.label());
        println!("steps              {}", s.records.len() - 1);
        println!("substeps           {}", s.total_substeps);
        println!("final t            {}", last.t);
        println!("mix norm           {:.6e}", last.mix_norm);
        println!("normalized         {:.6e}", last.mix_norm_normalized);
        println!("output             {}", cfg.output_dir.display());
    }
    Ok(0)
}

fn eigen(args: &RunArgs) -> Result<u8, Error> {
    let cfg = args.raw_with_placeholders(true)?.resolve()?;
    let r = runner::eigen(&cfg)?;
    if args.json {
        print_json(&r)?;
    } else {
        println!("domain     {}", r.domain);
        println!("lambda1    {:.6}", r.lambda1);
        println!("residual   {:.2e}", r.residual);
        println!("iterations {}", r.iterations);
        println!("dofs       {}", r.vertices);
        println!("seconds    {:.2}", r.seconds);
    }
    Ok(0)
}

fn norms(args: &RunArgs) -> Result<u8, Error> {
    let mut raw = args.raw_with_placeholders(false)?;
    if raw.ic.is_none() {
        return Err(Error::InvalidParameter {
            key: "ic".into(),
            reason: "missing".into(),
        });
    }
    if raw.shape.is_none() && raw.mesh.is_none() {
        raw.shape = Some("square".into());
    }
    let cfg = raw.resolve()?;
    let n = runner::norms(&cfg)?;
    if args.json {
        print_json(&n)?;
    } else {
        println!("ic         {}", n.ic);
        println!("mix norm   {:.6}", n.mix_norm);
        println!("l2         {:.6}", n.l2);
        println!("linf       {:.6}", n.linf);
        println!("l0         {:.6}", n.l0);
        println!("bound coef {:.4}", n.energy_bound_coefficient);
    }
    Ok(0)
}

fn validate(args: &ValidateArgs) -> Result<u8, Error> {
    if !(args.rotation_h > 0.0) {
        return Err(Error::InvalidParameter {
            key: "rotation-h".into(),
            reason: "must be positive".into(),
        });
    }
    let checks = validation::run_suite(SuiteOptions {
        seed: args.seed,
        rotation_h: args.rotation_h,
    })?;
    if args.json {
        print_json(&checks)?;
    } else {
        for c in &checks {
            println!("{}", c.line());
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        eprintln!("{failed} of {} checks failed", checks.len());
        Ok(EXIT_VALIDATION)
    } else {
        Ok(0)
    }
}

fn compare_bc(args: &RunArgs) -> Result<u8, Error> {
    let cfg = args.raw()?.resolve()?;
    let out = args.output.clone().or_else(|| args.config.as_ref().map(|_| cfg.output_dir.clone()));
    let c = runner::compare_bc(&cfg, out.as_deref())?;
    if args.json {
        print_json(&c)?;
    } else {
        let (p, n) = (c.periodic.last().unwrap(), c.no_flux.last().unwrap());
        println!("final t                  {}", c.times.last().unwrap());
        println!("periodic (normalized)    {p:.6e}");
        println!("no-flux (normalized)     {n:.6e}");
        println!("max relative difference  {:.3e}", c.max_relative_difference);
        let faster = match c.final_sign {
            -1 => "periodic mixes faster",
            1 => "no-flux mixes faster",
            _ => "identical",
        };
        println!("final sign               {} ({faster})", c.final_sign);
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Ok(v) = std::env::var("OPTMIX_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                optmix::par::init_threads(n);
            }
            _ => {
                eprintln!("error: OPTMIX_THREADS must be a positive integer, got `{v}`");
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Eigen(a) => eigen(a),
        Command::Norms(a) => norms(a),
        Command::Validate(a) => validate(a),
        Command::CompareBc(a) => compare_bc(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
