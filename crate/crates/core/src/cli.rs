//! Command-line front end. Reports are JSON on stdout (and in `--out` when
//! given); exit code 0 on success, 1 when a check ran and failed, 2 when the
//! input could not be processed.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::currents::{boundary, mass, SimplicialCurrent};
use crate::curves::decompose_1current;
use crate::error::{Error, Result};
use crate::experiments::{generate, stability_run, InstanceSpec, StabilityOptions, DEFAULT_GRID, DEFAULT_SEGMENTS};
use crate::flatnorm::{flat_norm_with, overlay_2d, FlatNormOptions};
use crate::io::{ChainRecord, CurrentFile, Loaded};
use crate::mesh::{EmbeddedComplex, MetricMode};
use crate::pa_maps::{pushforward, PiecewiseAffineMap};
use crate::rigidity::{euclidean_rigidity_chain, rigidity_check, RigidityOptions, Verdict, DEFAULT_HYPOTHESIS_TOL, DEFAULT_SAMPLES};
use crate::slicing::{slice, slice_boundary_check, slice_mass_integral, uniform_levels, Projector, DEFAULT_LEVELS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "intcur", version, about = "Integral currents on simplicial complexes and a rigidity checker")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Input {
    /// Current file (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Chain name in the input file.
    #[arg(long, default_value = "T")]
    chain: String,
}

#[derive(Args, Debug)]
struct Out {
    /// Write the report (JSON, or CSV when the path ends in .csv) here too.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Target {
    /// File whose mesh is the target; defaults to the input's target section.
    #[arg(long)]
    input2: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Sampling {
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `ambient` or `length:K` (K points per edge).
    #[arg(long, default_value = "ambient", value_parser = parse_metric)]
    metric: MetricMode,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Mass of a chain.
    Mass {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        out: Out,
    },
    /// Boundary of a chain; `--out` with a .json path writes a current file.
    Boundary {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        out: Out,
    },
    /// Pushforward of a chain along a map onto the target mesh.
    Pushforward {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "psi")]
        map: String,
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        out: Out,
    },
    /// Slices of a top-dimensional chain by lines parallel to `--direction`.
    Slice {
        #[command(flatten)]
        input: Input,
        /// Map to slice through; identity when omitted.
        #[arg(long)]
        map: Option<String>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        direction: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_LEVELS)]
        levels: usize,
        #[command(flatten)]
        out: Out,
    },
    /// Split a 1-chain into curves and loops.
    Decompose {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        out: Out,
    },
    /// Simplicial flat norm in the input mesh.
    Flatnorm {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        dump_lp: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
    /// Flat distance between two chains; meshes that differ are overlaid (2D).
    Flatdist {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        input2: Option<PathBuf>,
        /// Chain name in the second file; defaults to `--chain`.
        #[arg(long)]
        chain2: Option<String>,
        #[arg(long)]
        dump_lp: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
    /// Rigidity hypotheses, distortion and verdict.
    RigidityCheck {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "psi")]
        map: String,
        /// Ball chain in the target.
        #[arg(long, default_value = "ball")]
        ball: String,
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = DEFAULT_HYPOTHESIS_TOL)]
        tol: f64,
        #[command(flatten)]
        out: Out,
    },
    /// The five-term mass chain for a top-dimensional map.
    ChainCheck {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "psi")]
        map: String,
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = DEFAULT_HYPOTHESIS_TOL)]
        tol: f64,
        #[command(flatten)]
        out: Out,
    },
    /// Write a generated instance as a current file.
    Generate {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, default_value_t = DEFAULT_SEGMENTS)]
        segments: usize,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        m: f64,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        /// Inner radius; defaults to 2m.
        #[arg(long)]
        r0: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convergence table over a family.
    StabilityRun {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        m: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_SEGMENTS)]
        segments: usize,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Disk,
    Annulus,
    SplitDisks,
    Schwarzschild,
}

fn parse_metric(s: &str) -> std::result::Result<MetricMode, String> {
    if s == "ambient" {
        return Ok(MetricMode::AmbientEuclidean);
    }
    match s.strip_prefix("length:").map(str::parse::<usize>) {
        Some(Ok(k)) if k >= 1 => Ok(MetricMode::LengthGraph { refinement: k }),
        _ => Err(format!("expected `ambient` or `length:K` with K >= 1, got `{s}`")),
    }
}

fn load(path: &Path) -> Result<Loaded> {
    CurrentFile::read(path)?.load()
}

fn target_of(loaded: &Loaded, input2: &Option<PathBuf>) -> Result<(Arc<EmbeddedComplex>, Option<Loaded>)> {
    match input2 {
        Some(p) => {
            let l = load(p)?;
            Ok((l.complex.clone(), Some(l)))
        }
        None => match &loaded.target {
            Some((c, _)) => Ok((c.clone(), None)),
            None => Err(Error::Input("no target mesh: pass --input2 or add a `target` section".into())),
        },
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

/// Prints the report and writes `--out` (JSON, or `csv` when given and the path ends in .csv).
fn emit<T: Serialize>(report: &T, out: &Option<PathBuf>, csv: Option<&dyn Fn(&mut Vec<u8>) -> Result<()>>) -> Result<()> {
    let text = to_json(report);
    std::io::stdout().write_all(text.as_bytes())?;
    if let Some(path) = out {
        let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        match (is_csv, csv) {
            (true, Some(f)) => {
                let mut buf = Vec::new();
                f(&mut buf)?;
                std::fs::write(path, buf)?;
            }
            (true, None) => return Err(Error::Input(format!("{}: this report has no CSV form", path.display()))),
            (false, _) => std::fs::write(path, text)?,
        }
    }
    Ok(())
}

fn chain_report(t: &SimplicialCurrent) -> serde_json::Value {
    json!({
        "dim": t.dim(),
        "mass": mass(t).total,
        "entries": ChainRecord::from_current(t).entries,
    })
}

/// Writes a current file holding `t` under `name` when `out` is a .json path.
fn emit_chain(t: &SimplicialCurrent, name: &str, out: &Option<PathBuf>) -> Result<()> {
    std::io::stdout().write_all(to_json(&chain_report(t)).as_bytes())?;
    if let Some(path) = out {
        let mut f = CurrentFile::new(t.complex());
        f.chains.insert(name.to_string(), ChainRecord::from_current(t));
        f.write(path)?;
    }
    Ok(())
}

fn flag(ok: bool) -> i32 {
    if ok {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn dispatch(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Mass { input, out } => {
            let l = load(&input.input)?;
            let t = l.chain(&input.chain)?;
            emit(&json!({"chain": input.chain, "dim": t.dim(), "mass": mass(t).total}), &out.out, None)?;
            Ok(EXIT_OK)
        }
        Cmd::Boundary { input, out } => {
            let l = load(&input.input)?;
            let b = boundary(l.chain(&input.chain)?)?;
            emit_chain(&b, &format!("boundary_{}", input.chain), &out.out)?;
            Ok(EXIT_OK)
        }
        Cmd::Pushforward { input, map, target, out } => {
            let l = load(&input.input)?;
            let (tc, _) = target_of(&l, &target.input2)?;
            let p = pushforward(l.map(&map)?, l.chain(&input.chain)?, &tc)?;
            emit_chain(&p, "pushforward", &out.out)?;
            Ok(EXIT_OK)
        }
        Cmd::Slice { input, map, direction, levels, out } => {
            let l = load(&input.input)?;
            let t = l.chain(&input.chain)?;
            let psi = match &map {
                Some(m) => l.map(m)?.clone(),
                None => PiecewiseAffineMap::identity(l.complex.clone()),
            };
            if direction.is_empty() {
                return Err(Error::Input("--direction is required (comma-separated unit vector)".into()));
            }
            let proj = Projector::new(&direction)?;
            let lv = uniform_levels(t, &psi, &proj, levels);
            let fam = slice(t, &psi, &direction, &lv)?;
            let bc = slice_boundary_check(&fam)?;
            let integral = slice_mass_integral(&fam);
            let rows: Vec<_> = fam
                .slices
                .iter()
                .zip(&bc.per_level)
                .map(|(s, d)| json!({"z": s.z, "weight": s.weight, "mass": mass(&s.current).total, "boundary_defect": d}))
                .collect();
            let report = json!({
                "direction": direction,
                "levels": rows,
                "shifted_levels": fam.levels.shifts.len(),
                "integral": integral.integral,
                "mass_bound": integral.mass_bound,
                "integral_within_bound": integral.holds,
                "max_boundary_defect": bc.max_defect,
            });
            let csv = |buf: &mut Vec<u8>| -> Result<()> {
                let mut w = csv::Writer::from_writer(buf);
                let fmt = |e: csv::Error| Error::Format(e.to_string());
                w.write_record(["level", "z", "weight", "mass", "boundary_defect"]).map_err(fmt)?;
                for (i, (s, d)) in fam.slices.iter().zip(&bc.per_level).enumerate() {
                    let z: Vec<String> = s.z.iter().map(|x| x.to_string()).collect();
                    w.write_record([i.to_string(), z.join(" "), s.weight.to_string(), mass(&s.current).total.to_string(), d.to_string()])
                        .map_err(fmt)?;
                }
                w.flush()?;
                Ok(())
            };
            emit(&report, &out.out, Some(&csv))?;
            Ok(flag(integral.holds))
        }
        Cmd::Decompose { input, out } => {
            let l = load(&input.input)?;
            let d = decompose_1current(l.chain(&input.chain)?)?;
            emit(&json!({"curves": d.curves, "loops": d.loops, "total_length": d.total_length()}), &out.out, None)?;
            Ok(EXIT_OK)
        }
        Cmd::Flatnorm { input, dump_lp, out } => {
            let l = load(&input.input)?;
            let opts = FlatNormOptions {
                dump_lp: dump_lp.as_deref(),
                ..Default::default()
            };
            let r = flat_norm_with(l.chain(&input.chain)?, &l.complex, &opts)?;
            emit(&flat_report(&r, &l.complex), &out.out, None)?;
            Ok(EXIT_OK)
        }
        Cmd::Flatdist { input, input2, chain2, dump_lp, out } => {
            let l1 = load(&input.input)?;
            let l2 = match &input2 {
                Some(p) => load(p)?,
                None => l1.clone(),
            };
            let a = l1.chain(&input.chain)?;
            let b = l2.chain(chain2.as_deref().unwrap_or(&input.chain))?;
            let (a, b, ambient) = if *l1.complex == *l2.complex {
                (a.clone(), SimplicialCurrent::from_entries(l1.complex.clone(), b.dim(), b.entries().iter().map(|(&i, &m)| (i, m)))?, l1.complex.clone())
            } else {
                let ov = overlay_2d(&l1.complex, &l2.complex)?;
                (ov.lift(1, a)?, ov.lift(2, b)?, ov.merged.clone())
            };
            let diff = crate::currents::current_sub(&a, &b)?;
            let opts = FlatNormOptions {
                dump_lp: dump_lp.as_deref(),
                ..Default::default()
            };
            let r = flat_norm_with(&diff, &ambient, &opts)?;
            emit(&flat_report(&r, &ambient), &out.out, None)?;
            Ok(EXIT_OK)
        }
        Cmd::RigidityCheck { input, map, ball, target, sampling, tol, out } => {
            let l = load(&input.input)?;
            let (_, other) = target_of(&l, &target.input2)?;
            let chains = match (&other, &l.target) {
                (Some(o), _) => &o.chains,
                (None, Some((_, ch))) => ch,
                (None, None) => unreachable!("target_of checked the target"),
            };
            let ball_t = chains.get(&ball).ok_or_else(|| Error::Input(format!("target has no chain named `{ball}`")))?;
            let opts = RigidityOptions {
                metric: sampling.metric,
                samples: sampling.samples,
                seed: sampling.seed,
                tol,
                distortion_tol: None,
            };
            let r = rigidity_check(l.chain(&input.chain)?, l.map(&map)?, ball_t, &opts)?;
            emit(&r, &out.out, None)?;
            Ok(flag(r.verdict == Verdict::ConsistentWithIsometry))
        }
        Cmd::ChainCheck { input, map, target, tol, out } => {
            let l = load(&input.input)?;
            let (tc, _) = target_of(&l, &target.input2)?;
            let r = euclidean_rigidity_chain(l.chain(&input.chain)?, l.map(&map)?, &tc, tol)?;
            emit(&r, &out.out, None)?;
            Ok(flag(r.all_equal))
        }
        Cmd::Generate { family, segments, eps, m, r, r0, grid, out } => {
            let spec = family_spec(family, segments, eps, m, r, r0, grid);
            let inst = generate(&spec)?;
            CurrentFile::from_instance(&inst).write(&out)?;
            let report = json!({"spec": spec, "mesh_size": inst.mesh_size, "mass": mass(&inst.t).total, "out": out});
            std::io::stdout().write_all(to_json(&report).as_bytes())?;
            Ok(EXIT_OK)
        }
        Cmd::StabilityRun { family, eps, m, segments, r, grid, sampling, out } => {
            let specs: Vec<InstanceSpec> = match family {
                Family::Annulus => eps.iter().map(|&e| family_spec(family, segments, e, 0.0, r, None, grid)).collect(),
                Family::Schwarzschild => m.iter().map(|&x| family_spec(family, segments, 0.0, x, r, None, grid)).collect(),
                Family::Disk | Family::SplitDisks => vec![family_spec(family, segments, 0.0, 0.0, r, None, grid)],
            };
            if specs.is_empty() {
                return Err(Error::Input("empty family: pass --eps (annulus) or --m (schwarzschild)".into()));
            }
            let opts = StabilityOptions {
                metric: sampling.metric,
                samples: sampling.samples,
                seed: sampling.seed,
                ..Default::default()
            };
            let table = stability_run(&specs, &opts)?;
            let csv = |buf: &mut Vec<u8>| table.write_csv(buf);
            emit(&table, &out.out, Some(&csv))?;
            Ok(EXIT_OK)
        }
    }
}

fn flat_report(r: &crate::flatnorm::FlatNormResult, ambient: &EmbeddedComplex) -> serde_json::Value {
    json!({
        "value": r.value,
        "dim": r.dim,
        "filling_mass": r.filling_mass(ambient),
        "residual_mass": r.residual_mass(ambient),
        "integral_solution": r.is_integral(),
        "solver_status": r.solver_status,
        "pivots": r.pivots,
    })
}

fn family_spec(family: Family, segments: usize, eps: f64, m: f64, r: f64, r0: Option<f64>, grid: usize) -> InstanceSpec {
    match family {
        Family::Disk => InstanceSpec::Disk { n_segments: segments },
        Family::Annulus => InstanceSpec::Annulus { eps, n_segments: segments },
        Family::SplitDisks => InstanceSpec::SplitDisks { n_segments: segments },
        Family::Schwarzschild => InstanceSpec::SchwarzschildGraph {
            m,
            r,
            r0: r0.unwrap_or(2.0 * m),
            grid,
        },
    }
}

/// Parses `argv` (program name first), runs the command, returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            let kind = match &e {
                Error::Hypothesis(_) => EXIT_CHECK_FAILED,
                _ => EXIT_INPUT,
            };
            eprintln!("error: {e}");
            kind
        }
    }
}
