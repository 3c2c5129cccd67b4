//! `slabforge`: generate meshes, extrude and validate space-time slabs, run coupled simulations.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use slabforge::coupling::{annulus_radii, initial_state, run_simulation, CouplingError, StepRecord};
use slabforge::extrude::{
    all_prism_cuts, extrude_slab, is_valid_cut, swap_between, validate_slab, BlockConnectivityCache, SpaceTimeSlab,
};
use slabforge::io::{self, parse_config, CsvWriter, MeshSource, ParsedConfig};
use slabforge::mesh::{generate_mesh, validate_spatial_mesh, SpatialMesh};

#[derive(Parser)]
#[command(name = "slabforge", version, about = "Space-time sliding-mesh slabs and staggered rigid-body coupling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the spatial mesh described by a config file.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Extrude the slab between two consecutive meshes.
    Extrude {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long = "mesh-next")]
        mesh_next: PathBuf,
        /// Allow a sliding-layer swap between the two meshes.
        #[arg(long)]
        swap: bool,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write a VTK file.
        #[arg(long)]
        vtk: Option<PathBuf>,
    },
    /// Check a slab file for conformity.
    Validate { slab: PathBuf },
    /// Run the staggered loop over the configured time grid.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        /// Export every slab as VTK (overrides the config).
        #[arg(long)]
        vtk: bool,
    },
    /// Enumerate the eight prism diagonal assignments.
    CutsCensus,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Validation(anyhow::Error),
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load_config(path: &Path) -> Result<ParsedConfig, Failure> {
    parse_config(path).with_context(|| format!("reading config {}", path.display())).map_err(Failure::Usage)
}

fn mesh_from(cfg: &ParsedConfig) -> Result<SpatialMesh> {
    Ok(match &cfg.mesh {
        MeshSource::Generate(p) => generate_mesh(p)?,
        MeshSource::File(f) => io::read_mesh(f).with_context(|| format!("reading mesh {}", f.display()))?,
    })
}

fn generate(config: &Path, output: &Path) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let mesh = mesh_from(&cfg)?;
    let report = validate_spatial_mesh(&mesh);
    if !report.is_empty() {
        for v in &report.violations {
            eprintln!("  {v}");
        }
        return Err(Failure::Validation(anyhow::anyhow!("generated mesh has {} violations", report.violations.len())));
    }
    io::write_mesh(&mesh, output).with_context(|| format!("writing {}", output.display()))?;
    println!(
        "wrote {}: {} vertices, {} triangles, {} quads",
        output.display(),
        mesh.n_vertices(),
        mesh.triangles.len(),
        mesh.quads.len()
    );
    Ok(())
}

fn extrude(mesh: &Path, next: &Path, allow_swap: bool, output: &Path, vtk: Option<&Path>) -> Result<(), Failure> {
    let a = io::read_mesh(mesh).with_context(|| format!("reading {}", mesh.display()))?;
    let b = io::read_mesh(next).with_context(|| format!("reading {}", next.display()))?;
    let swap = swap_between(&a, &b).map_err(anyhow::Error::from)?;
    if swap.is_some() && !allow_swap {
        return Err(Failure::Usage(anyhow::anyhow!("the sliding offset changes between the meshes; pass --swap")));
    }
    let cache = match (swap, annulus_radii(&a)) {
        (Some(_), Some((r0, r1, r2, n))) => Some(BlockConnectivityCache::derive(r0, r1, r2, n).map_err(anyhow::Error::from)?),
        _ => None,
    };
    let slab = extrude_slab(&a, &b, swap, cache.as_ref()).map_err(anyhow::Error::from)?;
    io::write_slab(&slab, output).with_context(|| format!("writing {}", output.display()))?;
    if let Some(v) = vtk {
        io::write_slab_vtk(&slab, v).with_context(|| format!("writing {}", v.display()))?;
    }
    println!("wrote {}: {} tets, swap {:?}", output.display(), slab.tets.len(), swap);
    Ok(())
}

fn report_slab(slab: &SpaceTimeSlab) -> bool {
    let r = validate_slab(slab);
    let s = &r.stats;
    println!("tets: {}", s.tets);
    println!("facets: {} interior, {} boundary", s.interior_facets, s.boundary_facets);
    println!("volume: {:e} (area integral {:e}, boundary twist {:e})", s.total_volume, s.simpson_volume, s.boundary_twist);
    println!("max column volume error: {:e}", s.max_column_error);
    for v in &r.violations {
        println!("violation: {v}");
    }
    r.is_empty()
}

fn validate(path: &Path) -> Result<(), Failure> {
    let slab = io::read_slab(path).with_context(|| format!("reading {}", path.display()))?;
    if report_slab(&slab) {
        println!("conforming");
        Ok(())
    } else {
        Err(Failure::Validation(anyhow::anyhow!("{} is not conforming", path.display())))
    }
}

fn simulate(config: &Path, out_dir: &Path, vtk_flag: bool) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    for d in &cfg.defaults {
        log::info!("default used for {d}");
    }
    let mesh = mesh_from(&cfg)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let csv_path = out_dir.join("time_series.csv");
    let file = File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    let mut csv = CsvWriter::new(BufWriter::new(file)).map_err(anyhow::Error::from)?;
    let vtk = vtk_flag || cfg.output.vtk;
    let start = initial_state(&cfg.coupling, &mesh).map_err(|e| Failure::Usage(e.into()))?;
    csv.push(&StepRecord::from_state(cfg.coupling.time.t0, &start, 0, false)).map_err(anyhow::Error::from)?;
    let mut slab_index = 0usize;
    let io_err = |e: io::IoError| CouplingError::Config(e.to_string());
    let result = run_simulation(&cfg.coupling, &mesh, |rec, out| {
        csv.push(rec).map_err(io_err)?;
        if vtk && slab_index % cfg.output.vtk_every == 0 {
            io::write_slab_vtk(&out.slab, &out_dir.join(format!("slab_{slab_index:05}.vtk"))).map_err(io_err)?;
        }
        if cfg.output.slabs {
            io::write_slab(&out.slab, &out_dir.join(format!("slab_{slab_index:05}.sts"))).map_err(io_err)?;
        }
        slab_index += 1;
        Ok(())
    });
    let res = result.with_context(|| format!("simulation stopped after {slab_index} slabs"))?;
    println!(
        "{} slabs, {} swaps; final d={:e} theta={:e}; wrote {}",
        res.records.len() - 1,
        res.swaps,
        res.final_state.body.translation.value,
        res.final_state.body.rotation.value,
        csv_path.display()
    );
    Ok(())
}

fn cuts_census() {
    let mut valid = 0;
    for cut in all_prism_cuts() {
        let ok = is_valid_cut(&cut);
        valid += usize::from(ok);
        let desc: Vec<String> = cut.iter().map(|(b, t)| format!("n{b}-n{t}")).collect();
        println!("{} {}", if ok { "valid  " } else { "invalid" }, desc.join(", "));
    }
    println!("{valid} valid, {} invalid", 8 - valid);
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env = env_logger::Env::new().filter_or("SLABFORGE_LOG", "warn");
    env_logger::Builder::from_env(env).format_timestamp(None).init();

    let result = match &cli.command {
        Command::Generate { config, output } => generate(config, output),
        Command::Extrude { mesh, mesh_next, swap, output, vtk } => extrude(mesh, mesh_next, *swap, output, vtk.as_deref()),
        Command::Validate { slab } => validate(slab),
        Command::Simulate { config, out_dir, vtk } => simulate(config, out_dir, *vtk),
        Command::CutsCensus => {
            cuts_census();
            Ok(())
        }
    };
    let (code, err) = match result {
        Ok(()) => return ExitCode::SUCCESS,
        Err(Failure::Validation(e)) | Err(Failure::Runtime(e)) => (1, e),
        Err(Failure::Usage(e)) => (2, e),
    };
    eprintln!("error: {}", error_chain(&err));
    ExitCode::from(code)
}

/// Joins the cause chain, dropping causes already quoted by the message above them.
fn error_chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut prev = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !prev.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
        prev = msg;
    }
    out
}
