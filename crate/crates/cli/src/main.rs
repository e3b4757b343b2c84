use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qbgk_core::config::{build_simulation, parse_config, scenario_preset, to_config_text, SimConfig, PRESET_NAMES};
use qbgk_core::diagnostics::profile;
use qbgk_core::integrators::RunOutput;
use qbgk_core::output::{write_profile, write_series};
use qbgk_core::{BoundaryMode, Error, ErrorKind, FluxOrder, ParticleStatistics, Scheme};

#[derive(Parser)]
#[command(name = "qbgk", version, about = "Multi-species quantum BGK solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a configuration file.
    Run(RunArgs),
    /// Print the configuration text of a preset.
    Preset { name: String },
    /// List the preset names.
    List,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Time integrator order (1 or 2).
    #[arg(long)]
    order: Option<u32>,
    /// Finite-volume flux order (1 or 2).
    #[arg(long)]
    flux_order: Option<u32>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Momentum grid intervals per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Spatial cells.
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    /// Abort on any invariant violation.
    #[arg(long)]
    strict: bool,
    /// Run the invariant suite without writing output files.
    #[arg(long)]
    check: bool,
}

fn load(args: &RunArgs) -> Result<SimConfig, Error> {
    let mut cfg = match (&args.scenario, &args.config) {
        (Some(name), None) => scenario_preset(name)?,
        (None, Some(path)) => parse_config(&fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read {}: {e}", path.display()))
        })?)?,
        _ => return Err(Error::Config("scenario required (--scenario NAME or --config FILE)".into())),
    };
    if let Some(o) = args.order {
        cfg.scheme = Scheme::from_int(o).ok_or_else(|| Error::Config(format!("--order must be 1 or 2, got {o}")))?;
    }
    if let Some(o) = args.flux_order {
        let order = FluxOrder::from_int(o).ok_or_else(|| Error::Config(format!("--flux-order must be 1 or 2, got {o}")))?;
        match cfg.space.as_mut() {
            Some(s) => s.flux_order = order,
            None => return Err(Error::Config("--flux-order needs a spatial scenario".into())),
        }
    }
    if let Some(dt) = args.dt {
        cfg.dt = Some(dt);
    }
    if let Some(t) = args.t_end {
        cfg.t_end = t;
    }
    if let Some(g) = args.grid {
        cfg.grid_intervals = g;
    }
    if let Some(c) = args.cells {
        match cfg.space.as_mut() {
            Some(s) => s.cells = c,
            None => return Err(Error::Config("--cells needs a spatial scenario".into())),
        }
    }
    if let Some(s) = args.stride {
        cfg.stride = s;
    }
    if let Some(o) = &args.output {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn invariant_checks(cfg: &SimConfig, out: &RunOutput) -> Vec<Check> {
    let closed = cfg.space.map_or(true, |s| s.boundary != BoundaryMode::Copy);
    let mut checks = vec![Check {
        name: "conservation",
        pass: out.max_drift <= 1e-12,
        detail: format!(
            "max relative drift {:.3e}{}",
            out.max_drift,
            if closed { "" } else { " (net of boundary flux)" }
        ),
    }];
    checks.push(Check {
        name: "positivity",
        pass: out.min_f >= 0.0,
        detail: format!("min f {:.3e}", out.min_f),
    });
    if cfg.species.iter().any(|s| s.statistics == ParticleStatistics::Fermion) {
        checks.push(Check {
            name: "fermion bound",
            pass: out.max_fermion_f < 1.0,
            detail: format!("max fermion f {:.6}", out.max_fermion_f),
        });
    }
    if cfg.scheme == Scheme::FirstOrder && cfg.space.is_none() {
        let worst = out.records.windows(2).map(|w| w[1].entropy - w[0].entropy).fold(f64::NEG_INFINITY, f64::max);
        let min_dhdt = out.records.iter().skip(1).map(|r| -r.dhdt).fold(f64::INFINITY, f64::min);
        checks.push(Check {
            name: "entropy",
            pass: worst <= 0.0 || out.records.len() < 2,
            detail: format!("largest increase {worst:.3e}, min dissipation {min_dhdt:.3e}"),
        });
    }
    checks
}

fn run(args: RunArgs) -> Result<(), Error> {
    let cfg = load(&args)?;
    let (mut sim, mut state, dt) = build_simulation(&cfg)?;
    sim.strict = args.strict || args.check;
    eprintln!(
        "{}: {} species, scheme {}, dt {dt:e}, t_end {}, grid {}^3",
        cfg.scenario,
        cfg.species.len(),
        cfg.scheme.as_int(),
        cfg.t_end,
        cfg.grid_intervals + 1
    );
    let mut out = RunOutput::default();
    let result = sim.run(&mut state, cfg.t_end, dt, cfg.stride, &mut out);
    if args.strict && result.is_ok() && !out.warnings.is_empty() {
        return Err(Error::Invariant(out.warnings[0].clone()));
    }

    if args.check {
        result?;
        let checks = invariant_checks(&cfg, &out);
        for c in &checks {
            println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        if let Some(bad) = checks.iter().find(|c| !c.pass) {
            return Err(Error::Invariant(format!("{} check failed", bad.name)));
        }
        return Ok(());
    }

    // Write what was produced even when the run stopped early.
    fs::create_dir_all(&cfg.output_dir)?;
    let labels: Vec<String> = cfg.species.iter().map(|s| s.label.clone()).collect();
    fs::write(cfg.output_dir.join("config.txt"), to_config_text(&cfg))?;
    write_series(&out.records, &labels, &cfg.output_dir.join("series.csv"))?;
    result?;
    if let Some(mesh) = &sim.mesh {
        let rows = profile(&sim.set, &state, mesh, &sim.newton)?;
        write_profile(&rows, &labels, &cfg.output_dir.join("profile.csv"))?;
    }
    eprintln!(
        "{} steps, {} records, max drift {:.3e}, min f {:.3e}, min stage input {:.3e}, output in {}",
        out.steps,
        out.records.len(),
        out.max_drift,
        out.min_f,
        out.min_stage_input,
        cfg.output_dir.display()
    );
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Solver => 3,
        ErrorKind::Invariant => 4,
        ErrorKind::Other => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Preset { name } => scenario_preset(&name).map(|cfg| print!("{}", to_config_text(&cfg))),
        Command::List => {
            PRESET_NAMES.iter().for_each(|n| println!("{n}"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
