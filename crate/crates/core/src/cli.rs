//! Command-line front end.
//!
//! Every subcommand reads its parameters from flags, optionally preceded by a
//! `--config` file of `key = value` lines. Flags given on the command line
//! override values from the file.

use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C;
use serde::Serialize;

use crate::contour::{self, winding_profile, ContourSpec, SampledContour, BRANCH_POINTS};
use crate::descriptor::{count_allowed, enumerate_allowed, EnumerationMode};
use crate::error::Error;
use crate::io::{contour_svg, fmt_num, read_contour_csv, round_sig, write_contour_csv, write_ueff_csv};
use crate::models::{self, default_grid, real_core, Model, TwoBranchSetup};
use crate::rectify::{effective_potential, mu_closed_form, PotentialSpec, RectificationMap};
use crate::schrod::{
    find_spectrum, sturmian_energies, OdeProblem, ScanConfig, Spectrum, DEFAULT_W_TOL, EQUIVALENCE_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "toboggan", version, about = "Bound states on winding complex contours", args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List allowed winding descriptors of a given length.
    Enumerate(EnumerateArgs),
    /// Sample a contour to CSV or SVG.
    Contour(ContourArgs),
    /// Tabulate the effective potential of the two-branch map along a path.
    Ueff(UeffArgs),
    /// Locate eigenvalues of a model.
    Spectrum(SpectrumArgs),
    /// Compare a toboggan spectrum with its rectified partner.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    /// Word length.
    #[arg(long, default_value_t = 2)]
    n: i64,
    /// `paper` also reports the published total for this length.
    #[arg(long, value_enum, default_value_t = ModeArg::Freegroup)]
    mode: ModeArg,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Freegroup,
    Paper,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum KindArg {
    Line,
    Wedge,
    U,
    Toboggan,
    Image,
}

/// Parameter range and sampling of a path.
#[derive(Args, Debug)]
struct RangeArgs {
    /// Start of the parameter range [default depends on the kind or model].
    #[arg(long, allow_negative_numbers = true)]
    s_min: Option<f64>,
    /// End of the parameter range [default depends on the kind or model].
    #[arg(long, allow_negative_numbers = true)]
    s_max: Option<f64>,
    #[arg(long, default_value_t = 2001)]
    samples: usize,
}

impl RangeArgs {
    fn range(&self, default: (f64, f64)) -> (f64, f64) {
        (self.s_min.unwrap_or(default.0), self.s_max.unwrap_or(default.1))
    }
}

#[derive(Args, Debug)]
struct ContourArgs {
    #[arg(long, value_enum, default_value_t = KindArg::Line)]
    kind: KindArg,
    /// Exponent of the two-branch map.
    #[arg(long, default_value_t = 2.4, allow_negative_numbers = true)]
    kappa: f64,
    /// Downward shift of the straight line.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    eps: f64,
    /// Turns of the single-branch toboggan.
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    n: i64,
    /// Turning radius of the toboggan and U contours.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Parameter value at the centre of the winding.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    eta: f64,
    /// Tilt of the asymptotes.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    xi: f64,
    #[command(flatten)]
    range: RangeArgs,
    /// Output file; `.svg` selects a drawing, anything else CSV. CSV goes to
    /// stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct UeffArgs {
    #[arg(long, default_value_t = 2.4)]
    kappa: f64,
    /// Strength of the centrifugal poles at `±1`.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    ell: f64,
    /// Spectral parameter embedded in the potential.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    energy: f64,
    /// Contour CSV whose points are taken as the `z` path.
    #[arg(long)]
    along: Option<PathBuf>,
    /// Shift of the straight `z` line used when `--along` is absent.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    eps: f64,
    /// Comma-separated coefficients `c_k` of `V = Σ c_k (ix)^k`.
    #[arg(long, default_value = "0,0,0,0,-1", allow_hyphen_values = true)]
    core: String,
    #[command(flatten)]
    range: RangeArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum ModelArg {
    PtHo,
    SpikedHo,
    Toboggan1,
    TwoBranch,
    File,
}

#[derive(Args, Debug)]
struct ScanArgs {
    /// Lower end of the energy window [default depends on the model].
    #[arg(long, allow_negative_numbers = true)]
    emin: Option<f64>,
    /// Upper end of the energy window [default depends on the model].
    #[arg(long, allow_negative_numbers = true)]
    emax: Option<f64>,
    /// Scan points [default: ten per unit energy].
    #[arg(long)]
    grid: Option<usize>,
    /// Matching-determinant tolerance for the polish.
    #[arg(long, default_value_t = DEFAULT_W_TOL)]
    tol: f64,
}

impl ScanArgs {
    fn config(&self, default: (f64, f64)) -> ScanConfig {
        let window = (self.emin.unwrap_or(default.0), self.emax.unwrap_or(default.1));
        let mut cfg = ScanConfig::new(window, self.grid.unwrap_or_else(|| default_grid(window)));
        cfg.tol = self.tol;
        cfg
    }
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::PtHo)]
    model: ModelArg,
    /// Spike strength.
    #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    ell: f64,
    /// Line shift [default: 0.3, or 0.05 for two-branch].
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 2.4)]
    kappa: f64,
    /// Toboggan turning radius.
    #[arg(long, default_value_t = 0.3)]
    delta: f64,
    /// Potential coefficients for the two-branch and file models
    /// [default: 0,0,0,0,-1 and 0,0,-1].
    #[arg(long, allow_hyphen_values = true)]
    core: Option<String>,
    /// Contour CSV for the file model.
    #[arg(long)]
    contour: Option<PathBuf>,
    #[command(flatten)]
    scan: ScanArgs,
    /// JSON output; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum CaseArg {
    SingleBranch,
    TwoBranch,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    case: CaseArg,
    #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 2.4)]
    kappa: f64,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    ell: f64,
    #[arg(long, default_value_t = 0.3)]
    delta: f64,
    #[arg(long, default_value = "0,0,0,0,-1", allow_hyphen_values = true)]
    core: String,
    /// Levels that must be found on both sides [default: 4 single-branch, 3 two-branch].
    #[arg(long)]
    levels: Option<usize>,
    /// Largest accepted per-level difference.
    #[arg(long, default_value_t = EQUIVALENCE_TOL)]
    max_delta: f64,
    #[command(flatten)]
    scan: ScanArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Numerical(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Io(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Entry point of the binary.
pub fn main() -> ! {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code)
}

/// Runs one invocation and returns its exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = match expand_config(args.into_iter().map(Into::into).collect()) {
        Ok(a) => a,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            // first line only: the offending parameter
            let text = e.render().to_string();
            let _ = writeln!(err, "{}", text.lines().next().unwrap_or("error: invalid arguments"));
            return code;
        }
    };
    let result = match cli.command {
        Command::Enumerate(a) => enumerate(a, out),
        Command::Contour(a) => contour_cmd(a, out),
        Command::Ueff(a) => ueff(a, out),
        Command::Spectrum(a) => spectrum(a, out, err),
        Command::Verify(a) => verify(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Numerical(m)) => {
            let _ = writeln!(err, "numerical failure: {m}");
            EXIT_NUMERICAL
        }
        Err(Failure::Verification(m)) => {
            let _ = writeln!(err, "verification failed: {m}");
            EXIT_VERIFY
        }
    }
}

/// Splices `key = value` lines of a `--config` file in after the subcommand
/// name, so that later command-line flags take precedence.
fn expand_config(args: Vec<OsString>) -> std::result::Result<Vec<OsString>, String> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            config = Some(it.next().ok_or("--config needs a file")?);
        } else if let Some(path) = s.strip_prefix("--config=") {
            config = Some(OsString::from(path));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else { return Ok(rest) };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let from_file = parse_config(&text)?;
    // position right after the subcommand, which is the first non-flag argument
    let sub = rest.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|i| i + 2);
    let at = sub.ok_or("a subcommand is required")?;
    let tail = rest.split_off(at);
    rest.extend(from_file);
    rest.extend(tail);
    Ok(rest)
}

fn parse_config(text: &str) -> std::result::Result<Vec<OsString>, String> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| format!("config line {}: expected `key = value`", i + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            return Err(format!("config line {}: invalid key {key:?}", i + 1));
        }
        args.push(OsString::from(format!("--{key}={}", value.trim())));
    }
    Ok(args)
}

fn parse_core(s: &str) -> std::result::Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("--core: bad coefficient {t:?}"))))
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn enumerate(a: EnumerateArgs, out: &mut dyn Write) -> Outcome {
    let mode = match a.mode {
        ModeArg::Freegroup => EnumerationMode::FreeGroup,
        ModeArg::Paper => EnumerationMode::Published,
    };
    let words = enumerate_allowed(a.n, mode)?;
    let count = count_allowed(a.n, mode)?;
    for w in &words {
        writeln!(out, "{w}")?;
    }
    if let Some(p) = count.published {
        writeln!(out, "# published={p}")?;
    }
    if let Some(note) = &count.discrepancy {
        writeln!(out, "# {note}")?;
    }
    writeln!(out, "count={}", words.len())?;
    Ok(())
}

fn build_contour(a: &ContourArgs) -> crate::Result<SampledContour> {
    let n = a.range.samples;
    match a.kind {
        KindArg::Line => contour::build_line(&ContourSpec::line(a.eps, a.range.range((-8.0, 8.0)), n)),
        KindArg::Wedge => contour::build_wedge(&ContourSpec::wedge(a.eps, a.xi, a.range.range((-8.0, 8.0)), n)),
        KindArg::U => {
            contour::build_u_contour(&ContourSpec::u_shaped(a.eps, a.xi, a.delta, a.range.range((-6.0, 6.0)), n))
        }
        KindArg::Toboggan => {
            let mut spec = ContourSpec::toboggan(a.n, a.delta, a.eta, a.xi, 7.0, n);
            spec.s_range = a.range.range(spec.s_range);
            contour::build_toboggan_single(&spec)
        }
        KindArg::Image => {
            let line = contour::build_line(&ContourSpec::line(a.eps, a.range.range((-3.0, 3.0)), n))?;
            contour::image_contour(&line, a.kappa)
        }
    }
}

fn contour_cmd(a: ContourArgs, out: &mut dyn Write) -> Outcome {
    let c = build_contour(&a)?;
    let Some(path) = &a.out else {
        write_contour_csv(&c, out)?;
        return Ok(());
    };
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("svg")) {
        let title = format!("{:?} contour", a.kind).to_lowercase();
        write_file(path, contour_svg(&c, &title).as_bytes())?;
    } else {
        let mut buf = Vec::new();
        write_contour_csv(&c, &mut buf)?;
        write_file(path, &buf)?;
    }
    let w = winding_profile(&c, BRANCH_POINTS);
    let (s0, s1) = c.s_range();
    writeln!(out, "{:<12} {}", "samples", c.len())?;
    writeln!(out, "{:<12} {} {}", "s_range", fmt_num(s0), fmt_num(s1))?;
    writeln!(out, "{:<12} {}", "turns_left", fmt_num(w.turns_left))?;
    writeln!(out, "{:<12} {}", "turns_right", fmt_num(w.turns_right))?;
    writeln!(
        out,
        "{:<12} {}",
        "word",
        if w.inferred_word.is_empty() { "-".to_string() } else { w.inferred_word.to_string() }
    )?;
    Ok(())
}

fn ueff(a: UeffArgs, out: &mut dyn Write) -> Outcome {
    let base = match &a.along {
        Some(p) => {
            let f = fs::File::open(p).map_err(|e| Failure::Usage(format!("cannot open {}: {e}", p.display())))?;
            read_contour_csv(BufReader::new(f))?
        }
        None => contour::build_line(&ContourSpec::line(a.eps, a.range.range((-3.0, 3.0)), a.range.samples))?,
    };
    let image = contour::image_contour(&base, a.kappa)?;
    let states = image.branch.as_ref().expect("image contours carry branch states");
    let pot = PotentialSpec::two_pole(real_core(&parse_core(&a.core)?), a.ell);
    let mut ep = effective_potential(&pot, C::new(a.energy, 0.0), RectificationMap::TwoBranchKappa { kappa: a.kappa })?;
    let mut rows = Vec::with_capacity(base.len());
    for (p, st) in base.samples.iter().zip(states) {
        rows.push((p.s, p.x, ep.eval(p.x, Some(st))?));
    }
    let Some(path) = &a.out else {
        write_ueff_csv(&rows, out)?;
        return Ok(());
    };
    let mut buf = Vec::new();
    write_ueff_csv(&rows, &mut buf)?;
    write_file(path, &buf)?;

    writeln!(out, "{:<14} {}", "points", rows.len())?;
    writeln!(out, "{:<14} {}", "mu_closed_form", fmt_num(mu_closed_form(a.kappa, a.ell)))?;
    // the fit starts from the sample nearest to the pole at z = 1
    let near = base
        .samples
        .iter()
        .zip(states)
        .min_by(|(p, _), (q, _)| (p.x - 1.0).norm().total_cmp(&(q.x - 1.0).norm()))
        .map(|(p, st)| (p.x, *st));
    match near.map(|start| ep.fit_mu(start)) {
        Some(Ok(mu)) => writeln!(out, "{:<14} {}", "mu_fit", fmt_num(mu))?,
        _ => writeln!(out, "{:<14} unavailable", "mu_fit")?,
    }
    Ok(())
}

#[derive(Serialize)]
struct LevelRecord {
    energy_re: f64,
    energy_im: f64,
    residual: f64,
    real: bool,
}

fn records(s: &Spectrum) -> Vec<LevelRecord> {
    s.levels
        .iter()
        .map(|l| LevelRecord {
            energy_re: round_sig(l.energy.re),
            energy_im: round_sig(l.energy.im),
            residual: round_sig(l.match_residual),
            real: l.real,
        })
        .collect()
}

fn spectrum(a: SpectrumArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let eps = a.eps;
    let spec = match a.model {
        ModelArg::PtHo => find_spectrum(
            &models::pt_oscillator(eps.unwrap_or(0.3))?,
            &a.scan.config(Model::PtOscillator.default_window()),
        )?,
        ModelArg::SpikedHo => find_spectrum(
            &models::spiked_oscillator(a.alpha, eps.unwrap_or(0.3))?,
            &a.scan.config(Model::SpikedOscillator.default_window()),
        )?,
        ModelArg::Toboggan1 => find_spectrum(
            &models::toboggan_n1(a.alpha, a.delta, 0.0)?,
            &a.scan.config(Model::TobogganN1.default_window()),
        )?,
        ModelArg::TwoBranch => {
            let core = parse_core(a.core.as_deref().unwrap_or("0,0,0,0,-1"))?;
            let setup = TwoBranchSetup::new(a.kappa, eps.unwrap_or(0.05), &core, a.ell, 3.0, 2001)?;
            find_spectrum(&setup.direct(), &a.scan.config(Model::TwoBranch.default_window()))?
        }
        ModelArg::File => {
            let path = a.contour.as_ref().ok_or_else(|| Failure::Usage("--model file needs --contour <csv>".into()))?;
            let f = fs::File::open(path).map_err(|e| Failure::Usage(format!("cannot open {}: {e}", path.display())))?;
            let c = read_contour_csv(BufReader::new(f))?;
            let core = real_core(&parse_core(a.core.as_deref().unwrap_or("0,0,-1"))?);
            let pot = if a.ell != 0.0 { PotentialSpec::two_pole(core, a.ell) } else { PotentialSpec::polynomial(core) };
            let p = OdeProblem::new(Arc::new(c), pot, C::new(0.0, 0.0));
            find_spectrum(&p, &a.scan.config((0.0, 10.0)))?
        }
    };
    for (lo, hi) in &spec.unconverged {
        writeln!(err, "warning: no converged root in bracket [{}, {}]", fmt_num(*lo), fmt_num(*hi))?;
    }
    let json = serde_json::to_string_pretty(&records(&spec)).expect("plain records serialize") + "\n";
    match &a.out {
        None => out.write_all(json.as_bytes())?,
        Some(path) => {
            write_file(path, json.as_bytes())?;
            writeln!(out, "{:>3}  {:>18}  {:>18}  {:>18}  real", "n", "re E", "im E", "residual")?;
            for (i, r) in records(&spec).iter().enumerate() {
                writeln!(
                    out,
                    "{i:>3}  {:>18}  {:>18}  {:>18}  {}",
                    fmt_num(r.energy_re),
                    fmt_num(r.energy_im),
                    fmt_num(r.residual),
                    r.real
                )?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct LevelPair {
    n: usize,
    toboggan_re: f64,
    toboggan_im: f64,
    rectified_re: f64,
    rectified_im: f64,
    delta: f64,
}

#[derive(Serialize)]
struct VerifyReport {
    case: &'static str,
    max_delta_allowed: f64,
    levels_required: usize,
    toboggan_found: usize,
    rectified_found: usize,
    levels: Vec<LevelPair>,
    passed: bool,
}

/// Pairs each direct level, taken in order of increasing `|E|`, with the
/// nearest rectified one.
fn pair_levels(direct: &[C], rectified: &[C]) -> Vec<LevelPair> {
    let mut d = direct.to_vec();
    d.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    d.iter()
        .enumerate()
        .filter_map(|(n, &e)| {
            let r = rectified.iter().min_by(|a, b| (**a - e).norm().total_cmp(&(**b - e).norm()))?;
            Some(LevelPair {
                n,
                toboggan_re: round_sig(e.re),
                toboggan_im: round_sig(e.im),
                rectified_re: round_sig(r.re),
                rectified_im: round_sig(r.im),
                delta: round_sig((e - r).norm()),
            })
        })
        .collect()
}

fn verify(a: VerifyArgs, out: &mut dyn Write) -> Outcome {
    let (name, direct, rectified, required) = match a.case {
        CaseArg::SingleBranch => {
            let cfg = a.scan.config(Model::TobogganN1.default_window());
            let direct = find_spectrum(&models::toboggan_n1(a.alpha, a.delta, 0.0)?, &cfg)?;
            let (family, path) = models::sextic_partner(a.alpha)?;
            let rect = sturmian_energies(&family, &path, &cfg)?;
            ("single-branch", direct, rect, a.levels.unwrap_or(4))
        }
        CaseArg::TwoBranch => {
            let cfg = a.scan.config(Model::TwoBranch.default_window());
            let setup = TwoBranchSetup::new(a.kappa, a.eps, &parse_core(&a.core)?, a.ell, 3.0, 2001)?;
            let direct = find_spectrum(&setup.direct(), &cfg)?;
            let rect = sturmian_energies(&setup.rectified(), &setup.image, &cfg)?;
            ("two-branch", direct, rect, a.levels.unwrap_or(3))
        }
    };
    let mut levels = pair_levels(&direct.energies(), &rectified.energies());
    levels.truncate(required);
    let passed =
        levels.len() >= required && rectified.levels.len() >= required && levels.iter().all(|l| l.delta <= a.max_delta);
    let report = VerifyReport {
        case: name,
        max_delta_allowed: a.max_delta,
        levels_required: required,
        toboggan_found: direct.levels.len(),
        rectified_found: rectified.levels.len(),
        levels,
        passed,
    };
    let json = serde_json::to_string_pretty(&report).expect("plain records serialize") + "\n";
    if let Some(path) = &a.out {
        write_file(path, json.as_bytes())?;
    } else {
        out.write_all(json.as_bytes())?;
    }
    writeln!(out, "{:>3}  {:>18}  {:>18}  {:>18}", "n", "toboggan", "rectified", "delta")?;
    for l in &report.levels {
        writeln!(
            out,
            "{:>3}  {:>18}  {:>18}  {:>18}",
            l.n,
            fmt_num(l.toboggan_re),
            fmt_num(l.rectified_re),
            fmt_num(l.delta)
        )?;
    }
    writeln!(out, "{}", if passed { "PASS" } else { "FAIL" })?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "{name}: {} of {required} levels within {}",
            report.levels.iter().filter(|l| l.delta <= a.max_delta).count(),
            fmt_num(a.max_delta)
        )))
    }
}
