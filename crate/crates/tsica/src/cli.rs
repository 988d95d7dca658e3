//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input/output failure, 3 numerical failure,
//! 64 usage or configuration error. Reports go to stdout and diagnostics to
//! stderr.

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tsica_core::analysis::{
    binary_assign, disambiguate, dominant_frequency_phase, pearson_assign, select_signed_part,
    threshold_map, Assignment, BinarySequence, Spectral, ThresholdMode, TimeCourse,
};
use tsica_core::duality::{ComponentCount, Orientation};
use tsica_core::fastica::Scheme;
use tsica_core::math::circular_distance;
use tsica_core::pipeline::{run_ica_with, IcaRunConfig};
use tsica_core::simgen;
use tsica_core::{MaskVolume, Volume4D};

use crate::error::IoError;
use crate::exec::Threaded;
use crate::format::{self, DataType, FormatKind};
use crate::image::{self, SliceAxis};
use crate::store::{self, Metadata, VolumeFormat};
use crate::table::Table;

pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(IoError),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::SliceOutOfRange { .. } => CliError::Usage(e.to_string()),
            other => CliError::Io(other),
        }
    }
}

fn core_error(e: tsica_core::Error) -> CliError {
    use tsica_core::Error::*;
    match e {
        ExtentMismatch | InvalidArgument(_) | ShapeMismatch(_) | IndexOutOfRange { .. } | EmptyMask => {
            CliError::Usage(e.to_string())
        }
        _ => CliError::Numerical(e.to_string()),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "tsica", version, about = "Spatial and temporal ICA of 4D volumes")]
pub struct Cli {
    /// key=value file supplying defaults for any flag; flags win
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print every header field of an ANALYZE or NIFTI volume
    Header { path: PathBuf },
    /// Generate a tube phantom with its ground truth
    Simulate(SimulateArgs),
    /// Run spatial or temporal ICA
    Ica(IcaArgs),
    /// Frequency, phase and assignment report for a decomposition
    Analyze(AnalyzeArgs),
    /// Write a slice image of a volume or component map
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Multisignal,
    Event,
    Wave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Nii,
    Pair,
    Analyze,
}

impl OutFormat {
    fn kind(self) -> FormatKind {
        match self {
            OutFormat::Nii => FormatKind::NiftiSingle,
            OutFormat::Pair => FormatKind::NiftiPair,
            OutFormat::Analyze => FormatKind::Analyze75,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub variant: Variant,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutFormat>,
    /// Sample type: u8, i16, i32, f32 or f64
    #[arg(long)]
    pub datatype: Option<String>,
}

#[derive(Debug, Args)]
pub struct IcaArgs {
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub orientation: Option<String>,
    /// `auto` or a positive count
    #[arg(long)]
    pub components: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Smoothing FWHM in mm as X,Y,Z
    #[arg(long)]
    pub fwhm: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutFormat>,
    #[arg(long)]
    pub datatype: Option<String>,
    /// `deflation` or `symmetric`
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub standardize: bool,
    /// Mask before smoothing instead of after
    #[arg(long)]
    pub mask_first: bool,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Directory written by `tsica ica`
    pub decomposition: Option<PathBuf>,
    /// TSV of reference time courses, one column per source
    #[arg(long)]
    pub references: Option<PathBuf>,
    /// Upper and lower map quantiles as HI,LO
    #[arg(long)]
    pub thresholds: Option<String>,
    /// Report and mask directory (defaults to the decomposition directory)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// A volume file or a decomposition directory
    pub input: Option<PathBuf>,
    /// 1-based component index (decomposition input)
    #[arg(long)]
    pub component: Option<usize>,
    /// 0-based frame (volume input)
    #[arg(long)]
    pub frame: Option<usize>,
    /// axial, coronal or sagittal
    #[arg(long)]
    pub axis: Option<String>,
    #[arg(long)]
    pub slice: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Signed red/blue rendering
    #[arg(long)]
    pub diverging: bool,
    /// Colour voxels whose absolute map value exceeds its Q quantile over a gray rendering
    #[arg(long, value_name = "Q")]
    pub overlay: Option<f64>,
    /// Also write the component time course as TSV and a line plot
    #[arg(long)]
    pub timecourse: bool,
}

/// Keys accepted in a configuration file.
pub const CONFIG_KEYS: &[&str] = &[
    "input", "mask", "orientation", "components", "seed", "fwhm", "out", "format", "datatype",
    "scheme", "standardize", "mask_first", "tol", "max_iter", "references", "thresholds",
    "component", "frame", "axis", "slice", "diverging", "overlay", "timecourse",
];

struct Config(Metadata);

impl Config {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Config(Metadata::default()));
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(IoError::io(path, e)))?;
        let meta = Metadata::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        for (k, _) in &meta.0 {
            if !CONFIG_KEYS.contains(&k.as_str()) {
                return Err(usage(format!("{}: unknown key {k:?}", path.display())));
            }
        }
        Ok(Config(meta))
    }

    fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.0
            .get(key)
            .map(|v| v.parse().map_err(|_| usage(format!("config {key}: cannot parse {v:?}"))))
            .transpose()
    }

    /// The flag if given, else the configured value.
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    fn switch(&self, flag: bool, key: &str) -> CliResult<bool> {
        Ok(flag || self.get::<bool>(key)?.unwrap_or(false))
    }
}

fn required<T>(v: Option<T>, name: &str) -> CliResult<T> {
    v.ok_or_else(|| usage(format!("missing required {name}")))
}

fn parse_out_format(s: &str) -> CliResult<OutFormat> {
    OutFormat::from_str(s, false).map_err(|_| usage(format!("unknown format {s:?}")))
}

fn volume_format(cfg: &Config, flag: Option<OutFormat>, datatype: Option<String>) -> CliResult<VolumeFormat> {
    let kind = match flag {
        Some(f) => f,
        None => cfg
            .get::<String>("format")?
            .map(|s| parse_out_format(&s))
            .transpose()?
            .unwrap_or(OutFormat::Nii),
    }
    .kind();
    let datatype = match cfg.pick(datatype, "datatype")? {
        Some(s) => DataType::parse(&s).ok_or_else(|| usage(format!("unknown datatype {s:?}")))?,
        None => DataType::F32,
    };
    Ok(VolumeFormat { kind, datatype })
}

fn parse_orientation(s: &str) -> CliResult<Orientation> {
    match s {
        "temporal" => Ok(Orientation::Temporal),
        "spatial" => Ok(Orientation::Spatial),
        _ => Err(usage(format!("orientation must be spatial or temporal, got {s:?}"))),
    }
}

fn parse_components(s: &str) -> CliResult<ComponentCount> {
    if s == "auto" {
        return Ok(ComponentCount::Auto);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(ComponentCount::Fixed(n)),
        _ => Err(usage(format!("components must be auto or a positive integer, got {s:?}"))),
    }
}

fn parse_fwhm(s: &str) -> CliResult<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("fwhm must be X,Y,Z, got {s:?}")))?;
    match parts.as_slice() {
        [x] => Ok([*x; 3]),
        [x, y, z] => Ok([*x, *y, *z]),
        _ => Err(usage(format!("fwhm must be X,Y,Z, got {s:?}"))),
    }
}

fn parse_scheme(s: &str) -> CliResult<Scheme> {
    match s {
        "deflation" => Ok(Scheme::Deflation),
        "symmetric" => Ok(Scheme::Symmetric),
        _ => Err(usage(format!("scheme must be deflation or symmetric, got {s:?}"))),
    }
}

fn parse_thresholds(s: &str) -> CliResult<(f64, f64)> {
    let bad = || usage(format!("thresholds must be HI,LO in (0,1), got {s:?}"));
    let (hi, lo) = s.split_once(',').ok_or_else(bad)?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    if !(0.0 < lo && lo < 1.0 && 0.0 < hi && hi < 1.0) {
        return Err(bad());
    }
    Ok((hi, lo))
}

fn warn(err: &mut dyn Write, warnings: &[String]) {
    for w in warnings {
        let _ = writeln!(err, "warning: {w}");
    }
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Io(IoError::io("<stdout>", e)))
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Header { path } => cmd_header(&path, out),
        Command::Simulate(a) => cmd_simulate(a, &cfg, out, err),
        Command::Ica(a) => cmd_ica(a, &cfg, out, err),
        Command::Analyze(a) => cmd_analyze(a, &cfg, out, err),
        Command::Export(a) => cmd_export(a, &cfg, out, err),
    }
}

fn cmd_header(path: &Path, out: &mut dyn Write) -> CliResult<i32> {
    let header = format::read_header(path)?;
    let mut text = String::new();
    for (name, value) in header.fields() {
        text.push_str(&format!("{name}: {value}\n"));
    }
    emit(out, &text)?;
    Ok(0)
}

fn cmd_simulate(a: SimulateArgs, cfg: &Config, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(1);
    let dir: PathBuf = required(cfg.pick(a.out, "out")?, "--out")?;
    let format = volume_format(cfg, a.format, a.datatype)?;
    let (volume, truth) = match a.variant {
        Variant::Multisignal => simgen::simulate_multisignal(seed),
        Variant::Event => simgen::simulate_event_related(seed),
        Variant::Wave => simgen::simulate_traveling_wave(seed),
    }
    .map_err(core_error)?;
    let warnings = store::save_simulation(&dir, &volume, &truth, format)?;
    warn(err, &warnings);
    let [nx, ny, nz, nt] = volume.extents();
    let mut text = format!("extents: {nx},{ny},{nz}\nframes: {nt}\nseed: {seed}\n");
    for (k, v) in &store::region_summary(&truth).0 {
        text.push_str(&format!("{k}: {v}\n"));
    }
    for (k, n) in truth.event_counts().iter().enumerate() {
        if let Some(n) = n {
            text.push_str(&format!("tube_{}_events: {n}\n", k + 1));
        }
    }
    emit(out, &text)?;
    Ok(0)
}

fn read_mask(path: &Path, volume: &Volume4D) -> CliResult<MaskVolume> {
    let (mask, _) = format::read_volume(path)?;
    let [nx, ny, nz, _] = mask.extents();
    if [nx, ny, nz] != volume.spatial_extents() {
        return Err(usage(format!(
            "mask extents {:?} differ from volume extents {:?}",
            [nx, ny, nz],
            volume.spatial_extents()
        )));
    }
    MaskVolume::from_values([nx, ny, nz], mask.frame(0)).map_err(core_error)
}

fn cmd_ica(a: IcaArgs, cfg: &Config, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let input: PathBuf = required(cfg.pick(a.input, "input")?, "input volume")?;
    let mask_path: Option<PathBuf> = cfg.pick(a.mask, "mask")?;
    let dir: PathBuf = required(cfg.pick(a.out, "out")?, "--out")?;
    let defaults = IcaRunConfig::default();
    let run_cfg = IcaRunConfig {
        orientation: match cfg.pick(a.orientation, "orientation")? {
            Some(s) => parse_orientation(&s)?,
            None => defaults.orientation,
        },
        components: match cfg.pick(a.components, "components")? {
            Some(s) => parse_components(&s)?,
            None => defaults.components,
        },
        seed: cfg.pick(a.seed, "seed")?.unwrap_or(defaults.seed),
        fwhm: match cfg.pick(a.fwhm, "fwhm")? {
            Some(s) => parse_fwhm(&s)?,
            None => defaults.fwhm,
        },
        smooth_before_mask: !cfg.switch(a.mask_first, "mask_first")?,
        standardize: cfg.switch(a.standardize, "standardize")?,
        scheme: match cfg.pick(a.scheme, "scheme")? {
            Some(s) => parse_scheme(&s)?,
            None => defaults.scheme,
        },
        tol: cfg.pick(a.tol, "tol")?.unwrap_or(defaults.tol),
        max_iter: cfg.pick(a.max_iter, "max_iter")?.unwrap_or(defaults.max_iter),
    };
    run_cfg.validate().map_err(core_error)?;
    let format = volume_format(cfg, a.format, a.datatype)?;

    let (volume, _) = format::read_volume(&input)?;
    let mask = match &mask_path {
        Some(p) => read_mask(p, &volume)?,
        None => MaskVolume::full(volume.spatial_extents()),
    };
    let dec = run_ica_with(&volume, &mask, &run_cfg, &Threaded::from_env()).map_err(core_error)?;
    warn(err, &dec.warnings);

    let mut extra = Metadata::default();
    extra.push("input", input.display());
    extra.push("mask", mask_path.as_ref().map_or("none".to_string(), |p| p.display().to_string()));
    extra.push("fwhm", store::join(&run_cfg.fwhm));
    extra.push("smooth_before_mask", run_cfg.smooth_before_mask);
    extra.push("standardize", run_cfg.standardize);
    extra.push(
        "scheme",
        match run_cfg.scheme {
            Scheme::Deflation => "deflation",
            Scheme::Symmetric => "symmetric",
        },
    );
    extra.push("tol", run_cfg.tol);
    extra.push("max_iter", run_cfg.max_iter);
    let warnings = store::save_decomposition(&dir, &dec, format, &extra)?;
    warn(err, &warnings);

    let conv = &dec.convergence;
    let text = format!(
        "components: {}\norientation: {}\nconverged: {}\niterations: {}\n",
        dec.count(),
        dec.orientation.name(),
        conv.all_converged(),
        store::join(&conv.iterations)
    );
    emit(out, &text)?;
    Ok(0)
}

/// A reference column holding only zero and one other value is an event
/// sequence.
fn as_events(values: &[f64]) -> Option<BinarySequence> {
    let level = values.iter().copied().find(|&v| v != 0.0)?;
    if values.iter().all(|&v| v == 0.0 || v == level) {
        Some(BinarySequence::from_events(&values.iter().map(|&v| v != 0.0).collect::<Vec<_>>()))
    } else {
        None
    }
}

struct References {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

fn read_references(path: &Path, frames: usize) -> CliResult<References> {
    let table = Table::read(path)?;
    if table.rows() != frames {
        return Err(usage(format!(
            "references have {} rows, decomposition has {frames} frames",
            table.rows()
        )));
    }
    let (names, columns): (Vec<_>, Vec<_>) = table
        .names
        .into_iter()
        .zip(table.columns)
        .filter(|(n, _)| n != "time")
        .unzip();
    if names.is_empty() {
        return Err(usage("references table has no source column"));
    }
    Ok(References { names, columns })
}

fn cmd_analyze(a: AnalyzeArgs, cfg: &Config, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let dir: PathBuf = required(cfg.pick(a.decomposition, "input")?, "decomposition directory")?;
    let refs_path: Option<PathBuf> = cfg.pick(a.references, "references")?;
    let (q_hi, q_lo) = match cfg.pick(a.thresholds, "thresholds")? {
        Some(s) => parse_thresholds(&s)?,
        None => (0.9, 0.1),
    };
    let out_dir: PathBuf = cfg.pick(a.out, "out")?.unwrap_or_else(|| dir.clone());

    let saved = store::load_decomposition(&dir)?;
    let frames = saved.time_courses.first().map_or(0, Vec::len);
    let refs = refs_path.as_deref().map(|p| read_references(p, frames)).transpose()?;
    let name = store::component_stem;

    let mut lines = vec![
        format!("orientation: {}", saved.orientation.name()),
        format!("components: {}", saved.count()),
        format!("time_step: {}", saved.time_step),
    ];
    let mut degenerate = Vec::new();
    let mut spectra: Vec<Option<Spectral>> = Vec::new();
    for (k, tc) in saved.time_courses.iter().enumerate() {
        let s = TimeCourse::new(tc.clone(), saved.time_step).and_then(|t| dominant_frequency_phase(&t));
        match s {
            Ok(s) => {
                lines.push(format!(
                    "{}: frequency={} phase={} magnitude={} bin={}",
                    name(k),
                    s.frequency,
                    s.phase,
                    s.magnitude,
                    s.bin
                ));
                spectra.push(Some(s));
            }
            Err(e) => {
                lines.push(format!("{}: degenerate ({e})", name(k)));
                degenerate.push(k);
                spectra.push(None);
            }
        }
    }

    // Components with a usable time course, by position in the input.
    let live: Vec<usize> = (0..saved.count()).filter(|k| !degenerate.contains(k)).collect();
    let mut polarity: Vec<Option<bool>> = vec![None; saved.count()];
    if let Some(refs) = &refs {
        let tcs: Vec<&[f64]> = live.iter().map(|&k| saved.time_courses[k].as_slice()).collect();
        let events: Option<Vec<BinarySequence>> = refs.columns.iter().map(|c| as_events(c)).collect();
        let (method, assignment, contests) = match events {
            Some(events) => {
                let qs: Vec<f64> = events
                    .iter()
                    .map(|e| 1.0 - e.count_nonzero() as f64 / e.len() as f64)
                    .collect();
                let raw = binary_assign(&tcs, &events, &qs).map_err(core_error)?;
                let parts = tcs
                    .iter()
                    .map(|t| select_signed_part(t).map(|p| p.0))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(core_error)?;
                let (resolved, contests) = disambiguate(&raw, &parts, &qs).map_err(core_error)?;
                ("binary", resolved, contests)
            }
            None => {
                let asg = pearson_assign(&tcs, &refs.columns).map_err(core_error)?;
                ("pearson", asg, Vec::new())
            }
        };
        let Assignment { pairs, unassigned } = assignment;
        lines.push(format!("assignment: {method}"));
        for p in &pairs {
            let k = live[p.component];
            polarity[k] = Some(p.score >= 0.0);
            let mut line = format!("{} -> {} score={}", name(k), refs.names[p.source], p.score);
            let source_spectrum = TimeCourse::new(refs.columns[p.source].clone(), saved.time_step)
                .and_then(|t| dominant_frequency_phase(&t));
            if let (Some(c), Ok(r), "pearson") = (&spectra[k], source_spectrum, method) {
                let d = circular_distance(c.phase, r.phase, std::f64::consts::PI);
                line.push_str(&format!(" phase_difference={d}"));
            }
            lines.push(line);
        }
        let lost: Vec<String> = unassigned.iter().map(|&c| name(live[c])).collect();
        lines.push(format!(
            "unassigned: {}",
            if lost.is_empty() { "none".to_string() } else { lost.join(",") }
        ));
        for (source, e) in contests {
            lines.push(format!(
                "contest {}: e1={} e2={} threshold={} winner={}",
                refs.names[source],
                e.e1,
                e.e2,
                e.threshold,
                if e.winner == 0 { "first" } else { "second" }
            ));
        }
    }

    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::Io(IoError::io(&out_dir, e)))?;
    let mask_format = VolumeFormat {
        kind: saved.kind,
        datatype: DataType::U8,
    };
    for k in 0..saved.count() {
        let values = saved.masked_map(k);
        let positive = polarity[k].unwrap_or_else(|| {
            let (lo, hi) = values.iter().fold((0.0f64, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
            hi >= -lo
        });
        let kept = match threshold_map(&values, ThresholdMode::TwoSided { q_hi, q_lo, positive }) {
            Ok(kept) => kept,
            Err(e) => {
                lines.push(format!("{}_mask: skipped ({e})", name(k)));
                continue;
            }
        };
        let mut full = vec![0.0; saved.mask.len()];
        let voxels = saved.mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i);
        for (v, keep) in voxels.zip(&kept) {
            full[v] = if *keep { 1.0 } else { 0.0 };
        }
        let [nx, ny, nz] = saved.extents;
        let vol = Volume4D::new([nx, ny, nz, 1], full)
            .map_err(core_error)?
            .with_geometry(saved.voxel_size, saved.time_step);
        let stem = format!("{}_mask", name(k));
        warn(err, &store::write_volume_as(&out_dir, &stem, &vol, mask_format)?.1);
        lines.push(format!(
            "{stem}: voxels={} polarity={}",
            kept.iter().filter(|&&b| b).count(),
            if positive { "positive" } else { "negative" }
        ));
    }

    let mut report = lines.join("\n");
    report.push('\n');
    let path = out_dir.join("report.txt");
    std::fs::write(&path, &report).map_err(|e| CliError::Io(IoError::io(&path, e)))?;
    emit(out, &report)?;
    if degenerate.is_empty() {
        Ok(0)
    } else {
        let _ = writeln!(err, "degenerate components: {}", degenerate.len());
        Ok(EXIT_NUMERICAL)
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_export(a: ExportArgs, cfg: &Config, out: &mut dyn Write, _err: &mut dyn Write) -> CliResult<i32> {
    let input: PathBuf = required(cfg.pick(a.input, "input")?, "input")?;
    let target: PathBuf = required(cfg.pick(a.out, "out")?, "--out")?;
    let axis = match cfg.pick(a.axis, "axis")? {
        Some(s) => SliceAxis::parse(&s).ok_or_else(|| usage(format!("unknown axis {s:?}")))?,
        None => SliceAxis::Axial,
    };
    let index: usize = required(cfg.pick(a.slice, "slice")?, "--slice")?;
    let diverging = cfg.switch(a.diverging, "diverging")?;
    let overlay: Option<f64> = cfg.pick(a.overlay, "overlay")?;
    if let Some(q) = overlay {
        if !(0.5 < q && q < 1.0) {
            return Err(usage(format!("overlay quantile must lie in (0.5, 1), got {q}")));
        }
    }
    let timecourse = cfg.switch(a.timecourse, "timecourse")?;
    let component: Option<usize> = cfg.pick(a.component, "component")?;

    let (values, extents, series) = if input.is_dir() {
        let k = required(component, "--component")?;
        let saved = store::load_decomposition(&input)?;
        if k == 0 || k > saved.count() {
            return Err(usage(format!("component {k} out of range 1..={}", saved.count())));
        }
        (saved.maps[k - 1].clone(), saved.extents, Some(saved.time_courses[k - 1].clone()))
    } else {
        if timecourse {
            return Err(usage("--timecourse needs a decomposition directory"));
        }
        let (vol, _) = format::read_volume(&input)?;
        let t = cfg.pick(a.frame, "frame")?.unwrap_or(0);
        if t >= vol.frames() {
            return Err(usage(format!("frame {t} out of range (have {})", vol.frames())));
        }
        (vol.frame(t).to_vec(), vol.spatial_extents(), None)
    };

    let slice = image::slice_of(&values, extents, axis, index)?;
    let mut written = vec![target.clone()];
    if let Some(q) = overlay {
        let kept = threshold_map(&values, ThresholdMode::AbsQuantile(q)).map_err(core_error)?;
        let (_, _, mask) = image::extract_slice(&kept, extents, axis, index)?;
        image::overlay(&slice, &mask).write(&target)?;
    } else if diverging {
        image::diverging(&slice).write(&target)?;
    } else {
        image::grayscale(&slice).write(&target)?;
    }
    if let (true, Some(series)) = (timecourse, series) {
        let tsv = sibling(&target, "_timecourse.tsv");
        let time: Vec<f64> = (0..series.len()).map(|t| t as f64).collect();
        Table::new(vec!["frame".into(), "value".into()], vec![time, series.clone()])?.write(&tsv)?;
        let plot = sibling(&target, "_timecourse.pgm");
        image::line_plot(&series, 640, 240).write(&plot)?;
        written.extend([tsv, plot]);
    }
    let text: String = written.iter().map(|p| format!("wrote: {}\n", p.display())).collect();
    emit(out, &text)?;
    Ok(0)
}
