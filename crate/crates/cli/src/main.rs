mod bundle;
mod config;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use cmi_core::codegen::{
    bits_to_string, gen_gold, gen_msequence, gen_rademacher, gen_walsh, select_bocp_with, verify_bocp,
    BocpSearchOptions, Code, LfsrSpec,
};
use cmi_core::demod::calibrate_zero_baseline;
use cmi_core::geometry::{baselines, builtin, find_full_coverage_linear, fov_resolution, BUILTIN_NAMES};
use cmi_core::imaging::{dift_with, local_maxima, peak, sidecar, to_csv, to_pgm_ascii, DiftOptions, Taper};
use cmi_core::oracle::compare;
use cmi_core::sensitivity::RadiometricParams;
use cmi_core::{ArrayGeometry, VisibilityFunction};

use crate::bundle::{default_out_dir, write_atomic};
use crate::config::{preset_names, ExperimentConfig};

#[derive(Parser)]
#[command(name = "cmi", version, about = "Code-modulated interferometry simulator")]
struct Cli {
    /// Override the RNG seed of a simulation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use a built-in experiment instead of a config file.
    #[arg(long, global = true)]
    preset: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and check code families.
    Codes {
        #[command(subcommand)]
        family: CodesCmd,
    },
    /// Inspect array layouts.
    Geometry {
        #[command(subcommand)]
        action: GeometryCmd,
    },
    /// Run a full acquisition and write a run directory.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Print the resolved config and exit.
        #[arg(long)]
        dry_run: bool,
        /// List the built-in presets.
        #[arg(long)]
        list_presets: bool,
    },
    /// Image a visibility dump.
    Image {
        #[arg(long)]
        vis: PathBuf,
        /// Builtin name or layout file.
        #[arg(long)]
        geometry: String,
        #[arg(long)]
        calibrate: bool,
        #[arg(long)]
        normalized: bool,
        #[arg(long, value_enum, default_value_t = TaperArg::Rectangular)]
        taper: TaperArg,
    },
    /// Radiometric sensitivity.
    Sensitivity {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        tsys: f64,
        /// Predetection bandwidth in Hz.
        #[arg(long)]
        bw: f64,
        /// Integration time in seconds.
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 1.0)]
        pixels: f64,
    },
    /// Compare two visibility dumps.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Check the built-in code and geometry tables.
    Verify {
        #[arg(long)]
        golden_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CodesCmd {
    Walsh {
        #[arg(long)]
        len: usize,
    },
    Rademacher {
        #[arg(long)]
        len: usize,
    },
    /// Search the Walsh family for a BOCP set.
    Bocp {
        #[arg(long)]
        len: usize,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 60.0)]
        time_limit: f64,
    },
    Mseq {
        #[arg(long)]
        stages: u32,
        #[arg(long, value_delimiter = ',')]
        taps: Vec<u32>,
    },
    Gold {
        #[arg(long, default_value_t = 5)]
        stages: u32,
        #[arg(long, value_delimiter = ',', default_value = "5,3")]
        taps1: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "5,4,3,2")]
        taps2: Vec<u32>,
        /// Single shift; all shifts when omitted.
        #[arg(long)]
        shift: Option<usize>,
    },
}

#[derive(Subcommand)]
enum GeometryCmd {
    List,
    /// Baselines, pixels, field of view and resolution of a layout.
    Info { name: String },
    /// Smallest linear layout with hole-free coverage of 1..=span.
    Search {
        #[arg(long)]
        elements: usize,
        #[arg(long)]
        span: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TaperArg {
    Rectangular,
    Hann,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Codes { family } => codes(family)?,
        Command::Geometry { action } => geometry(action)?,
        Command::Simulate {
            config,
            dry_run,
            list_presets,
        } => {
            if list_presets {
                for name in preset_names() {
                    println!("{name}");
                }
                return Ok(ExitCode::SUCCESS);
            }
            let mut cfg = match (config, &cli.preset) {
                (Some(_), Some(_)) => bail!("give either --config or --preset, not both"),
                (None, None) => bail!("simulate needs --config FILE or --preset NAME"),
                (Some(path), None) => ExperimentConfig::load(&path)?,
                (None, Some(name)) => ExperimentConfig::preset(name)?,
            };
            if let Some(seed) = cli.seed {
                cfg.sim.seed = seed;
            }
            if dry_run {
                cfg.resolve()?;
                print!("{}", cfg.to_toml()?);
                return Ok(ExitCode::SUCCESS);
            }
            let out = cli.out.unwrap_or_else(|| default_out_dir(&cfg));
            let s = bundle::simulate(&cfg, &out)?;
            println!("wrote {}", s.dir.display());
            println!("peak bin ({}, {})", s.peak.0, s.peak.1);
            let maxima: Vec<String> = s.maxima.iter().map(|(i, j)| format!("({i}, {j})")).collect();
            println!("maxima {}", maxima.join(" "));
            if let Some((rms, max)) = s.oracle {
                println!("oracle rms {:.3}% max {:.3}%", 100.0 * rms, 100.0 * max);
            }
        }
        Command::Image {
            vis,
            geometry,
            calibrate,
            normalized,
            taper,
        } => {
            let geom = load_geometry(&geometry)?;
            let (mut v, _) = read_vis(&vis)?;
            if calibrate {
                v = calibrate_zero_baseline(&v);
            }
            let opts = DiftOptions {
                normalized,
                taper: match taper {
                    TaperArg::Rectangular => Taper::Rectangular,
                    TaperArg::Hann => Taper::Hann,
                },
                half_extent: None,
            };
            let map = dift_with(&v, &geom, opts)?;
            let out = cli.out.unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            write_atomic(&out.join("image.csv"), to_csv(&map).as_bytes())?;
            write_atomic(&out.join("image.pgm"), to_pgm_ascii(&map).as_bytes())?;
            write_atomic(&out.join("image.axes.toml"), sidecar(&map).as_bytes())?;
            let (i, j) = peak(&map)?;
            let (l, m) = map.lm(i, j);
            println!("{}x{} image in {}", map.cols(), map.rows(), out.display());
            println!("peak bin ({i}, {j}) at l={l:.4} m={m:.4}");
            println!("maxima {:?}", local_maxima(&map, 0.5));
        }
        Command::Sensitivity {
            n,
            tsys,
            bw,
            tau,
            pixels,
        } => {
            let p = RadiometricParams {
                n_elements: n,
                t_sys: tsys,
                bandwidth_hz: bw,
                tau_s: tau,
                pixels,
            };
            p.validate()?;
            println!("delta_t_vis       {:.4} K", p.delta_t_vis()?);
            println!("delta_t_image     {:.4} K", p.delta_t_image()?);
            println!("delta_t_image_cmi {:.4} K", p.delta_t_image_cmi()?);
        }
        Command::Compare { a, b } => {
            let (va, _) = read_vis(&a)?;
            let (vb, _) = read_vis(&b)?;
            let r = compare(&va, &vb)?;
            println!("samples {}", r.deltas.len());
            println!("rms_rel_error {:.6e}", r.rms_rel_error);
            println!("max_rel_error {:.6e}", r.max_rel_error);
        }
        Command::Verify { golden_dir } => {
            let mut failed = 0;
            for c in verify::run(golden_dir.as_deref()) {
                match c.result {
                    Ok(msg) => println!("PASS {}: {msg}", c.name),
                    Err(e) => {
                        failed += 1;
                        println!("FAIL {}: {e:#}", c.name);
                    }
                }
            }
            if failed > 0 {
                eprintln!("{failed} check(s) failed");
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_codes(codes: &[Code]) {
    for c in codes {
        println!("{c}");
    }
}

fn codes(cmd: CodesCmd) -> Result<()> {
    match cmd {
        CodesCmd::Walsh { len } => print_codes(&gen_walsh(len)?),
        CodesCmd::Rademacher { len } => print_codes(&gen_rademacher(len)?),
        CodesCmd::Bocp {
            len,
            count,
            time_limit,
        } => {
            if !(time_limit.is_finite() && time_limit > 0.0) {
                bail!("--time-limit must be positive");
            }
            let opts = BocpSearchOptions {
                time_limit: Duration::from_secs_f64(time_limit),
            };
            let set = select_bocp_with(len, count, opts)?;
            let report = verify_bocp(&set.members);
            if !report.ok {
                bail!("search returned a set that fails verification: {:?}", report.first_violation);
            }
            let idx: Vec<String> = set.walsh_indices.iter().map(usize::to_string).collect();
            println!("walsh indices {}", idx.join(" "));
            print_codes(&set.members);
        }
        CodesCmd::Mseq { stages, taps } => {
            let m = gen_msequence(&LfsrSpec::with_ones(stages, &taps)?);
            println!("period {}{}", m.period, if m.maximal { "" } else { " (not maximal)" });
            println!("{}", bits_to_string(&m.bits));
        }
        CodesCmd::Gold {
            stages,
            taps1,
            taps2,
            shift,
        } => {
            let s1 = LfsrSpec::with_ones(stages, &taps1)?;
            let s2 = LfsrSpec::with_ones(stages, &taps2)?;
            let period = gen_msequence(&s1).period;
            let shifts: Vec<usize> = match shift {
                Some(s) => vec![s],
                None => (0..period).collect(),
            };
            for s in shifts {
                println!("{s:>3} {}", bits_to_string(&gen_gold(&s1, &s2, s)?));
            }
        }
    }
    Ok(())
}

fn load_geometry(spec: &str) -> Result<ArrayGeometry> {
    if BUILTIN_NAMES.contains(&spec) {
        return Ok(builtin(spec)?);
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!("'{spec}' is neither a builtin ({}) nor a file", BUILTIN_NAMES.join(", "));
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {spec}"))?;
    Ok(ArrayGeometry::parse(&text)?)
}

fn read_vis(path: &Path) -> Result<(VisibilityFunction, Vec<(String, String)>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    VisibilityFunction::parse_dump(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn describe(g: &ArrayGeometry) {
    let b = baselines(g);
    let (hu, hv) = g.image_half_extent();
    println!("elements   {}", g.len());
    let pos: Vec<String> = g.positions().iter().map(|(x, y)| format!("({x},{y})")).collect();
    println!("positions  {}", pos.join(" "));
    println!("pitch      {} x {} wavelengths", g.pitch_x(), g.pitch_y());
    println!("samples    {} distinct", b.distinct());
    println!("redundant  {} of {} ordered pairs", b.redundant(), b.off_zero_total());
    println!("image      {} x {} pixels", 2 * hu + 1, 2 * hv + 1);
    let f = fov_resolution(g);
    for (axis, a) in [("x", f.x), ("y", f.y)] {
        if let Some(a) = a {
            println!(
                "{axis}-axis     fov ±{:.2}°, resolution {:.2}°, beamwidth {:.2}°",
                a.fov_deg, a.resolution_deg, a.beamwidth_deg
            );
        }
    }
    println!("digest     {:016x}", g.digest());
}

fn geometry(cmd: GeometryCmd) -> Result<()> {
    match cmd {
        GeometryCmd::List => {
            for name in BUILTIN_NAMES {
                let g = builtin(name)?;
                println!("{name:<20} {:>3} elements {:>4} samples", g.len(), baselines(&g).distinct());
            }
        }
        GeometryCmd::Info { name } => describe(&load_geometry(&name)?),
        GeometryCmd::Search { elements, span } => {
            let g = find_full_coverage_linear(elements, span)?;
            print!("{}", g.to_text());
        }
    }
    Ok(())
}
