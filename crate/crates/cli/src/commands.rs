use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lagbonnet_core::bonnet::{
    bonnet_admissibility, deform, integrate_pfaff, pair_decompose, umbilic_analysis, AdmissibilityOptions, PfaffOptions,
    UmbilicReport, Unresolved,
};
use lagbonnet_core::catalog::{make_constant_solution, perturb, solve_profile_ode, Bump, PerturbTarget};
use lagbonnet_core::chart::ConformalChart;
use lagbonnet_core::integrability::{classify, integrability_residuals, Criterion, Tolerance, ToleranceClass};
use lagbonnet_core::reconstruction::{monodromy, reconstruct_grid, IntegratorOptions, ReconstructOptions};
use lagbonnet_core::surface::SpaceForm;
use lagbonnet_core::winding::GridLoop;
use lagbonnet_core::Error as CoreError;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::export::immersion_csv;
use crate::format::{emit_surface, read_surface, FormatError};
use crate::report::{merge, Report, ToleranceEntry};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "lagbonnet",
    version,
    about = "Lagrangian surface data: integrability, reconstruction, Bonnet analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TolClass {
    Exact,
    H2,
    H4,
}

#[derive(Args, Debug, Clone)]
struct TolArgs {
    /// Threshold of the exact class.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long = "tol-class", value_enum, default_value_t = TolClass::Exact)]
    tol_class: TolClass,
    /// `C` in `C h^2` and `C h^4`.
    #[arg(long = "tol-constant", default_value_t = 10.0)]
    tol_constant: f64,
}

impl TolArgs {
    fn tolerance(&self) -> Tolerance {
        let class = match self.tol_class {
            TolClass::Exact => ToleranceClass::Exact,
            TolClass::H2 => ToleranceClass::H2,
            TolClass::H4 => ToleranceClass::H4,
        };
        Tolerance {
            class,
            value: self.tol,
            constant: self.tol_constant,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct ReportArgs {
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    #[arg(long, default_value_t = 64)]
    nx: usize,
    #[arg(long, default_value_t = 64)]
    ny: usize,
    #[arg(long = "x-range", value_parser = parse_pair_f64, default_value = "0,1")]
    x_range: (f64, f64),
    #[arg(long = "y-range", value_parser = parse_pair_f64, default_value = "0,1")]
    y_range: (f64, f64),
    #[arg(long = "periodic-x")]
    periodic_x: bool,
    #[arg(long = "periodic-y")]
    periodic_y: bool,
}

impl GridArgs {
    fn chart(&self) -> Result<ConformalChart, Failure> {
        ConformalChart::with_periodicity(self.nx, self.ny, self.x_range, self.y_range, self.periodic_x, self.periodic_y)
            .map_err(|e| Failure::Input(e.to_string()))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrability residuals and classification.
    Check {
        input: PathBuf,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        out: ReportArgs,
    },
    /// Rebuild the immersion; reports cross-path defect, invariant drift and monodromy.
    Reconstruct {
        input: PathBuf,
        #[command(flatten)]
        tol: TolArgs,
        /// Base node `ix,iy`.
        #[arg(long, value_parser = parse_base, default_value = "0,0")]
        base: (usize, usize),
        /// CSV export of the immersion.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Renormalize lift frames onto the quadric after every step.
        #[arg(long)]
        project: bool,
        #[arg(long = "override-integrability")]
        override_integrability: bool,
        /// Bound on invariant drift and monodromy.
        #[arg(long = "drift-tol", default_value_t = 1e-6)]
        drift_tol: f64,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Solve the deformation Pfaff system from `t0` and write the deformed data.
    Deform {
        input: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        t0: f64,
        #[arg(long, value_parser = parse_base, default_value = "0,0")]
        base: (usize, usize),
        #[command(flatten)]
        tol: TolArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Decompose the cubic differentials of two data files as a pair.
    Pair {
        first: PathBuf,
        second: PathBuf,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Zeros of psi and their indices.
    Umbilics {
        input: PathBuf,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Bonnet admissibility residuals.
    Bonnet {
        input: PathBuf,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Generate test data.
    Catalog {
        #[command(subcommand)]
        kind: CatalogKind,
        /// Data file to write; standard output otherwise.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Merge JSON reports.
    Report {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FieldName {
    U,
    Phi,
    Psi,
}

#[derive(Subcommand, Debug)]
enum CatalogKind {
    /// Constant data; the Gauss equation must hold.
    Constant {
        #[arg(long, allow_negative_numbers = true)]
        c: i64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        u0: f64,
        #[arg(long, value_parser = parse_complex, allow_negative_numbers = true, default_value = "0")]
        phi: Complex64,
        #[arg(long, value_parser = parse_complex, allow_negative_numbers = true, default_value = "0")]
        psi: Complex64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// One-dimensional solution of the Gauss equation with phi = 0.
    Profile {
        #[arg(long, allow_negative_numbers = true)]
        c: i64,
        #[arg(long, value_parser = parse_complex, allow_negative_numbers = true)]
        psi: Complex64,
        #[arg(long = "u-init", allow_negative_numbers = true, default_value_t = 0.0)]
        u_init: f64,
        #[arg(long = "du-init", allow_negative_numbers = true, default_value_t = 0.0)]
        du_init: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Add a Gaussian bump to one field of existing data.
    Perturb {
        input: PathBuf,
        #[arg(long, value_enum)]
        field: FieldName,
        #[arg(long, allow_negative_numbers = true)]
        epsilon: f64,
        /// Bump centre `x,y`; the chart centre by default.
        #[arg(long, value_parser = parse_pair_f64, allow_negative_numbers = true)]
        centre: Option<(f64, f64)>,
        #[arg(long, default_value_t = 0.15)]
        width: f64,
        #[command(flatten)]
        report: ReportArgs,
    },
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> Result<(T, T), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `a,b`, got `{s}`"))?;
    let p = |v: &str| v.trim().parse::<T>().map_err(|_| format!("cannot parse `{v}`"));
    Ok((p(a)?, p(b)?))
}

fn parse_pair_f64(s: &str) -> Result<(f64, f64), String> {
    parse_pair(s)
}

fn parse_base(s: &str) -> Result<(usize, usize), String> {
    parse_pair(s)
}

/// `re` or `re,im`.
fn parse_complex(s: &str) -> Result<Complex64, String> {
    if s.contains(',') {
        parse_pair::<f64>(s).map(|(a, b)| Complex64::new(a, b))
    } else {
        s.trim()
            .parse::<f64>()
            .map(|a| Complex64::new(a, 0.0))
            .map_err(|_| format!("cannot parse `{s}`"))
    }
}

#[derive(Debug)]
enum Failure {
    Input(String),
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Failure::Input(format!("{}: {e}", e.code()))
    }
}

/// Core errors that describe the data rather than the request.
fn is_verdict(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::IntegrabilityRejected { .. }
            | CoreError::ReconstructionFailed { .. }
            | CoreError::QuadricViolation { .. }
            | CoreError::DegenerateMetric { .. }
            | CoreError::NonFiniteCoefficients { .. }
            | CoreError::NotAdmissible { .. }
            | CoreError::PsiVanishes { .. }
            | CoreError::ClosureDefect { .. }
            | CoreError::NotHarmonic { .. }
            | CoreError::NotHolomorphic { .. }
            | CoreError::MultivaluedConjugate { .. }
            | CoreError::ModulusMismatch { .. }
            | CoreError::BranchHolonomy { .. }
    )
}

/// A verdict failure becomes a failing report; anything else is an input error.
fn verdict_or_input(mut report: Report, name: &str, e: CoreError) -> Result<Report, Failure> {
    if is_verdict(&e) {
        report.verdict(name, false).detail("error", e.to_string());
        Ok(report.finish())
    } else {
        Err(Failure::Input(e.to_string()))
    }
}

fn input_name(p: &Path) -> Value {
    Value::String(p.display().to_string())
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn emit_report(report: &Report, target: &ReportArgs) -> Result<(), Failure> {
    match &target.report {
        Some(path) => write_file(path, &report.to_json()),
        None => {
            print!("{}", report.to_json());
            Ok(())
        }
    }
}

fn criterion(c: &Criterion) -> Value {
    json!({ "residual": c.residual, "verdict": c.verdict })
}

fn check(input: &Path, tol: &TolArgs) -> Result<Report, Failure> {
    let data = read_surface(input)?;
    let tolerance = tol.tolerance();
    let chart = *data.chart();
    let mut report = Report::new(
        "check",
        input_name(input),
        Some(ToleranceEntry::new(&tolerance, Some(&chart))),
    );
    let r = integrability_residuals(&data);
    report
        .norm("closedness", r.closedness_norms)
        .norm("gauss", r.gauss_norms)
        .norm("codazzi", r.codazzi_norms)
        .verdict("integrable", r.passes(&tolerance));
    let k = classify(&data, &tolerance);
    let mut classification = json!({
        "minimal": criterion(&k.minimal),
        "hamiltonian_stationary": criterion(&k.hamiltonian_stationary),
        "conformal_maslov": criterion(&k.conformal_maslov),
    });
    if let Some(t) = &k.codazzi_transfer {
        classification["codazzi_transfer"] = criterion(t);
    }
    report.detail("classification", classification);
    Ok(report.finish())
}

#[allow(clippy::too_many_arguments)]
fn reconstruct(
    input: &Path,
    tol: &TolArgs,
    base: (usize, usize),
    out: Option<&Path>,
    project: bool,
    override_integrability: bool,
    drift_tol: f64,
) -> Result<Report, Failure> {
    let data = read_surface(input)?;
    let tolerance = tol.tolerance();
    let chart = *data.chart();
    let mut report = Report::new(
        "reconstruct",
        input_name(input),
        Some(ToleranceEntry::new(&tolerance, Some(&chart))),
    );
    let options = ReconstructOptions {
        tolerance,
        override_integrability,
        integrator: IntegratorOptions { project },
        ..ReconstructOptions::default()
    };
    let r = match reconstruct_grid(&data, base, &options) {
        Ok(r) => r,
        Err(e) => return verdict_or_input(report, "reconstructed", e),
    };
    let m = monodromy(&data, &GridLoop::boundary(&chart)).map_err(|e| Failure::Input(e.to_string()))?;
    let d = r.drift;
    report
        .scalar("cross_defect", r.cross_defect)
        .scalar("drift.conformality", d.conformality)
        .scalar("drift.metric", d.metric)
        .scalar("drift.lagrangian", d.lagrangian)
        .scalar("monodromy.frame", m.frame)
        .scalar("monodromy.position", m.position)
        .verdict("reconstructed", true)
        .verdict("cross_defect", r.cross_defect <= drift_tol)
        .verdict("invariants", d.max() <= drift_tol)
        .verdict("monodromy", m.frame <= drift_tol);
    if data.space() != SpaceForm::Flat {
        report
            .scalar("drift.quadric", d.quadric)
            .scalar("drift.horizontality", d.horizontality)
            .scalar("quadric_deviation", r.immersion.quadric_deviation());
    }
    if let Some(path) = out {
        let csv = immersion_csv(&r.immersion).map_err(|e| Failure::Input(e.to_string()))?;
        write_file(path, &csv)?;
        report.detail("export", path.display().to_string());
    }
    Ok(report.finish())
}

fn deform_command(input: &Path, t0: f64, base: (usize, usize), tol: &TolArgs, out: Option<&Path>) -> Result<Report, Failure> {
    let data = read_surface(input)?;
    let tolerance = tol.tolerance();
    let chart = *data.chart();
    let mut report = Report::new(
        "deform",
        input_name(input),
        Some(ToleranceEntry::new(&tolerance, Some(&chart))),
    );
    let options = PfaffOptions {
        admissibility: AdmissibilityOptions {
            tolerance,
            ..AdmissibilityOptions::default()
        },
        ..PfaffOptions::default()
    };
    let solution = match integrate_pfaff(&data, t0, base, &options) {
        Ok(s) => s,
        Err(e) => return verdict_or_input(report, "admissible", e),
    };
    let deformed = deform(&data, &solution.state).map_err(|e| Failure::Input(e.to_string()))?;
    let before = integrability_residuals(&data);
    let after = integrability_residuals(&deformed);
    let bound = 2.0 * before.linf() + solution.closure_defect + 1e-12;
    report
        .scalar("closure_defect", solution.closure_defect)
        .norm("closedness", after.closedness_norms)
        .norm("gauss", after.gauss_norms)
        .norm("codazzi", after.codazzi_norms)
        .verdict("admissible", true)
        .verdict("integrability_preserved", after.linf() <= bound);
    if let Some(path) = out {
        write_file(path, &emit_surface(&deformed))?;
        report.detail("output", path.display().to_string());
    }
    Ok(report.finish())
}

fn umbilic_json(chart: &ConformalChart, u: &UmbilicReport) -> Value {
    let points: Vec<Value> = u
        .points
        .iter()
        .map(|p| {
            let (ix, iy) = p.location;
            json!({ "ix": ix, "iy": iy, "x": chart.x(ix), "y": chart.y(iy), "index": p.index, "margin": p.margin })
        })
        .collect();
    let unresolved: Vec<Value> = u
        .unresolved
        .iter()
        .map(|c| {
            let reason = match c.reason {
                Unresolved::Boundary => "boundary",
                Unresolved::Undetermined => "undetermined",
            };
            json!({ "ix": c.location.0, "iy": c.location.1, "reason": reason })
        })
        .collect();
    json!({ "points": points, "unresolved": unresolved, "degree": u.degree, "threshold": u.threshold })
}

fn pair(first: &Path, second: &Path, tol: &TolArgs) -> Result<Report, Failure> {
    let a = read_surface(first)?;
    let b = read_surface(second)?;
    let tolerance = tol.tolerance();
    let chart = *a.chart();
    let inputs = Value::Array(vec![input_name(first), input_name(second)]);
    let mut report = Report::new("pair", inputs, Some(ToleranceEntry::new(&tolerance, Some(&chart))));
    let d = pair_decompose(a.psi(), b.psi(), &Default::default()).map_err(|e| Failure::Input(e.to_string()))?;
    let threshold = tolerance.threshold(&chart);
    let scale = a.psi().max_modulus().max(1.0);
    report
        .norm("cr", d.cr)
        .norm("modulus_gap", d.modulus_gap)
        .norm("alpha_imag", d.alpha_imag)
        .norm("orthogonality", d.orthogonality)
        .verdict("h_holomorphic", d.cr.linf <= threshold)
        .verdict("moduli_equal", d.modulus_gap.linf <= tolerance.value * scale)
        .verdict("alpha_real", d.alpha_imag.linf <= tolerance.value * scale);
    report.detail("filled", d.filled.len());
    report.detail("same_metric_and_phi", a.u() == b.u() && a.phi() == b.phi());
    if let Ok(u) = umbilic_analysis(&d.h, &Default::default()) {
        report.detail("umbilics", umbilic_json(&chart, &u));
    }
    Ok(report.finish())
}

fn umbilics(input: &Path) -> Result<Report, Failure> {
    let data = read_surface(input)?;
    let chart = *data.chart();
    let mut report = Report::new("umbilics", input_name(input), None);
    let u = umbilic_analysis(data.psi(), &Default::default()).map_err(|e| Failure::Input(e.to_string()))?;
    report.verdict("resolved", u.unresolved.is_empty());
    if let Some(ok) = u.genus_one_consistent {
        report.verdict("genus_one_consistent", ok);
    }
    report.detail("umbilics", umbilic_json(&chart, &u));
    Ok(report.finish())
}

fn bonnet(input: &Path, tol: &TolArgs) -> Result<Report, Failure> {
    let data = read_surface(input)?;
    let tolerance = tol.tolerance();
    let chart = *data.chart();
    let mut report = Report::new(
        "bonnet",
        input_name(input),
        Some(ToleranceEntry::new(&tolerance, Some(&chart))),
    );
    let options = AdmissibilityOptions {
        tolerance,
        ..AdmissibilityOptions::default()
    };
    let r = bonnet_admissibility(&data, &options).map_err(|e| Failure::Input(e.to_string()))?;
    report
        .norm("r17", r.r17.norms)
        .norm("r18", r.r18.norms)
        .norm("r19", r.r19.norms)
        .norm("r20", r.r20.norms)
        .norm("r21", r.r21.norms)
        .norm("r_iso", r.r_iso.norms)
        .norm("r_invpsi", r.r_invpsi.norms)
        .verdict("admissible", r.admissible())
        .verdict("r17_r18_agree", r.equivalence_agrees());
    report.detail(
        "properties",
        json!({ "isothermic": r.isothermic(), "inverse_psi_harmonic": r.inverse_psi_harmonic() }),
    );
    Ok(report.finish())
}

fn space(c: i64) -> Result<SpaceForm, Failure> {
    SpaceForm::from_c(c).map_err(|e| Failure::Input(e.to_string()))
}

fn catalog(kind: &CatalogKind, out: Option<&Path>) -> Result<Option<(Report, ReportArgs)>, Failure> {
    let core = |e: CoreError| Failure::Input(e.to_string());
    let (data, report) = match kind {
        CatalogKind::Constant { c, u0, phi, psi, grid } => (
            make_constant_solution(grid.chart()?, space(*c)?, *u0, *phi, *psi).map_err(core)?,
            None,
        ),
        CatalogKind::Profile {
            c,
            psi,
            u_init,
            du_init,
            grid,
        } => (
            solve_profile_ode(space(*c)?, *psi, *u_init, *du_init, grid.chart()?).map_err(core)?,
            None,
        ),
        CatalogKind::Perturb {
            input,
            field,
            epsilon,
            centre,
            width,
            report,
        } => {
            let base = read_surface(input)?;
            let chart = *base.chart();
            let (x0, x1) = chart.x_range();
            let (y0, y1) = chart.y_range();
            let bump = Bump {
                centre: centre.unwrap_or((0.5 * (x0 + x1), 0.5 * (y0 + y1))),
                width: *width,
            };
            let target = match field {
                FieldName::U => PerturbTarget::U,
                FieldName::Phi => PerturbTarget::Phi,
                FieldName::Psi => PerturbTarget::Psi,
            };
            let p = perturb(&base, target, *epsilon, &bump).map_err(core)?;
            let mut r = Report::new("catalog", input_name(input), None);
            r.norm("predicted_gauss", p.predicted_gauss.norms());
            (p.data, Some((r.finish(), report.clone())))
        }
    };
    let text = emit_surface(&data);
    match out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(report)
}

fn merge_reports(inputs: &[PathBuf], out: Option<&Path>) -> Result<Report, Failure> {
    let mut reports = Vec::new();
    for path in inputs {
        let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
        let r: Report =
            serde_json::from_str(&text).map_err(|e| Failure::Input(format!("malformed report {}: {e}", path.display())))?;
        reports.push((path.display().to_string(), r));
    }
    let merged = merge(&reports);
    if let Some(path) = out {
        write_file(path, &merged.to_json())?;
    }
    Ok(merged)
}

fn dispatch(cli: Cli) -> Result<i32, Failure> {
    let (report, target) = match cli.command {
        Command::Check { input, tol, out } => (check(&input, &tol)?, out),
        Command::Reconstruct {
            input,
            tol,
            base,
            out,
            project,
            override_integrability,
            drift_tol,
            report,
        } => (
            reconstruct(&input, &tol, base, out.as_deref(), project, override_integrability, drift_tol)?,
            report,
        ),
        Command::Deform {
            input,
            t0,
            base,
            tol,
            out,
            report,
        } => (deform_command(&input, t0, base, &tol, out.as_deref())?, report),
        Command::Pair {
            first,
            second,
            tol,
            report,
        } => (pair(&first, &second, &tol)?, report),
        Command::Umbilics { input, report } => (umbilics(&input)?, report),
        Command::Bonnet { input, tol, report } => (bonnet(&input, &tol)?, report),
        Command::Catalog { kind, out } => match catalog(&kind, out.as_deref())? {
            Some((report, target)) => (report, target),
            None => return Ok(EXIT_PASS),
        },
        Command::Report { inputs, out } => {
            let merged = merge_reports(&inputs, out.as_deref())?;
            let exit = merged.exit;
            if out.is_none() {
                print!("{}", merged.to_json());
            }
            return Ok(exit);
        }
    };
    emit_report(&report, &target)?;
    Ok(report.exit)
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
    }
}
