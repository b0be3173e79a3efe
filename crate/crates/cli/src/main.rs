use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use hlab::domain::DomainSpec;
use hlab::experiment::{compute_means, compute_modulus, emit_report, run_experiment, CurveData, ExperimentConfig, VerificationReport};
use hlab::geodesic::weighted_distance;
use hlab::growth::ExponentFit;
use hlab::kernel::{fit_kernel_on, KernelBasis, KernelModel};
use hlab::metric::MetricDensity;

#[derive(Parser)]
#[command(name = "hlab", version, about = "Weighted metrics, Bergman kernels and growth-exponent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bergman kernel models.
    Kernel {
        #[command(subcommand)]
        action: KernelAction,
    },
    /// Metric densities.
    Density {
        #[command(subcommand)]
        action: DensityAction,
    },
    /// Weighted distance between two points.
    Distance(DistanceArgs),
    /// Integral means of the weighted derivative of a map.
    Means(CurveArgs),
    /// Lipschitz modulus of a boundary trace.
    Modulus(CurveArgs),
    /// Run a verification experiment and write its report.
    Verify(VerifyArgs),
    /// Print the verdicts stored in a summary file.
    Report {
        /// `<name>.summary.json` written by `verify`.
        summary: PathBuf,
    },
}

#[derive(Subcommand)]
enum KernelAction {
    /// Fit a kernel model and save it as text.
    Fit {
        #[command(flatten)]
        model: ModelArgs,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum DensityAction {
    /// Evaluate a density at points.
    Eval {
        #[command(flatten)]
        density: DensityArgs,
        /// Point as `re,im`; repeatable.
        #[arg(long = "point", required = true, value_parser = parse_point, allow_hyphen_values = true)]
        points: Vec<Complex64>,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Domain descriptor, e.g. `disc` or `ellipse 1.5 1`.
    #[arg(long, default_value = "disc")]
    domain: String,
    /// Read the domain and kernel settings from an experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    degree: usize,
    /// Quadrature resolution.
    #[arg(long, default_value_t = 0.01)]
    resolution: f64,
    #[arg(long, default_value = "monomial")]
    basis: KernelBasis,
}

impl ModelArgs {
    fn fit(&self) -> Result<KernelModel> {
        if let Some(path) = &self.config {
            let cfg = load_config(path, None)?;
            return Ok(cfg.fit_kernel(&cfg.build_domain()?)?);
        }
        let domain = DomainSpec::parse_descriptor(&self.domain)?;
        Ok(fit_kernel_on(&domain, self.resolution, self.degree, self.basis)?)
    }
}

#[derive(Args)]
struct DensityArgs {
    /// hyperbolic, quasihyperbolic, bergman or constant.
    #[arg(long, default_value = "hyperbolic")]
    density: String,
    /// Domain descriptor, e.g. `disc` or `ellipse 1.5 1`.
    #[arg(long, default_value = "disc")]
    domain: String,
    /// Saved kernel model for the bergman density.
    #[arg(long)]
    kernel: Option<PathBuf>,
    /// Degree of a kernel fitted on the fly.
    #[arg(long, default_value_t = 40)]
    degree: usize,
    /// Quadrature resolution of a kernel fitted on the fly.
    #[arg(long, default_value_t = 0.01)]
    kernel_resolution: f64,
    #[arg(long, default_value = "monomial")]
    basis: KernelBasis,
}

impl DensityArgs {
    fn build(&self) -> Result<MetricDensity> {
        let domain = DomainSpec::parse_descriptor(&self.domain)?;
        Ok(match self.density.as_str() {
            "hyperbolic" => {
                if !domain.is_unit_disc() {
                    bail!("the hyperbolic density lives on the unit disc");
                }
                MetricDensity::hyperbolic()
            }
            "quasihyperbolic" => MetricDensity::quasihyperbolic(domain),
            "constant" => MetricDensity::constant(domain, 1.0)?,
            "bergman" => {
                let model = match &self.kernel {
                    Some(path) => KernelModel::load(path)?,
                    None => fit_kernel_on(&domain, self.kernel_resolution, self.degree, self.basis)?,
                };
                if model.domain() != &domain {
                    bail!("kernel was fitted on {}, not {}", model.domain(), domain);
                }
                MetricDensity::bergman(Arc::new(model))
            }
            other => bail!("unknown density {other:?}"),
        })
    }
}

#[derive(Args)]
struct DistanceArgs {
    #[command(flatten)]
    density: DensityArgs,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    from: Complex64,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    to: Complex64,
    /// Geodesic solver resolution.
    #[arg(long, default_value_t = 0.01)]
    resolution: f64,
    /// Write the path as two-column text.
    #[arg(long)]
    path_out: Option<PathBuf>,
}

#[derive(Args)]
struct Overrides {
    /// Geodesic solver resolution.
    #[arg(long)]
    resolution: Option<f64>,
    /// Kernel degree.
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tolerance: Option<f64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(v) = self.resolution {
            cfg.resolution = v;
        }
        if let Some(v) = self.degree {
            cfg.degree = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.tolerance {
            cfg.tolerance = v;
        }
        Ok(cfg.validate()?)
    }
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to the config's `output`, then `.`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct VerifyArgs {
    /// hl1, hl2, yamashita, qh-compare or nt-bounds.
    experiment: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

fn parse_point(s: &str) -> std::result::Result<Complex64, String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected re,im, got {s:?}"))?;
    let re = re.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let im = im.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok(Complex64::new(re, im))
}

fn load_config(path: &Path, experiment: Option<&str>) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = match experiment {
        Some(e) => ExperimentConfig::from_toml_for(&text, e),
        None => ExperimentConfig::from_toml(&text),
    };
    cfg.with_context(|| format!("in config {}", path.display()))
}

fn out_dir(out: &Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    out.clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn fit_line(fit: &Result<ExponentFit, hlab::Error>) -> String {
    match fit {
        Ok(f) => format!("slope {:.6} r_squared {:.6} samples {}", f.slope, f.r_squared, f.samples),
        Err(e) => format!("no fit: {e}"),
    }
}

fn write_curve(dir: &Path, stem: &str, curve: CurveData, fit: &Result<ExponentFit, hlab::Error>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let name = &curve.name;
    fs::write(dir.join(format!("{stem}.{name}.dat")), curve.to_text())?;
    if let Ok(f) = fit {
        let text = format!(
            "slope {:.16e}\nintercept {:.16e}\nr_squared {:.16e}\nmax_residual {:.16e}\nsamples {}\nexcluded {}\n",
            f.slope, f.intercept, f.r_squared, f.max_residual, f.samples, f.excluded
        );
        fs::write(dir.join(format!("{stem}.{name}.fit.txt")), text)?;
    }
    Ok(())
}

/// Exit 0 when every criterion passed, 1 when one failed.
fn verdict(report: &VerificationReport) -> ExitCode {
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Kernel { action: KernelAction::Fit { model, out } } => {
            let m = model.fit()?;
            m.save(&out)?;
            println!("degree {} basis {} defect {:e} -> {}", m.degree, m.basis_kind(), m.defect, out.display());
        }
        Command::Density { action: DensityAction::Eval { density, points } } => {
            let omega = density.build()?;
            for z in points {
                println!("{:.17e} {:.17e} {:.17e}", z.re, z.im, omega.eval(z)?);
            }
        }
        Command::Distance(args) => {
            let omega = args.density.build()?;
            let r = weighted_distance(&omega, args.from, args.to, args.resolution)?;
            println!("{:.17e}", r.distance);
            if let Some(path) = args.path_out {
                fs::write(&path, r.path.to_text())?;
            }
        }
        Command::Means(args) => {
            let mut cfg = load_config(&args.config, Some("hl2"))?;
            args.overrides.apply(&mut cfg)?;
            let curve = compute_means(&cfg)?;
            let fit = curve.fit();
            println!("means p={} {}", curve.p, fit_line(&fit));
            let data = CurveData::new("means", "1-r", "m_p", curve.points());
            write_curve(&out_dir(&args.out, &cfg), &format!("means-{}", cfg.hash()), data, &fit)?;
        }
        Command::Modulus(args) => {
            let mut cfg = load_config(&args.config, Some("hl2"))?;
            args.overrides.apply(&mut cfg)?;
            let curve = compute_modulus(&cfg)?;
            let fit = curve.fit();
            println!("modulus p={} {}", curve.p, fit_line(&fit));
            let data = CurveData::new("modulus", "h", "M", curve.points());
            write_curve(&out_dir(&args.out, &cfg), &format!("modulus-{}", cfg.hash()), data, &fit)?;
        }
        Command::Verify(args) => {
            let mut cfg = match &args.config {
                Some(path) => load_config(path, Some(&args.experiment))?,
                None => ExperimentConfig::from_toml_for("", &args.experiment)?,
            };
            args.overrides.apply(&mut cfg)?;
            let report = run_experiment(&cfg)?;
            let files = emit_report(&report, &out_dir(&args.out, &cfg))?;
            print!("{}", report.summary_text());
            println!("summary: {}", files[0].display());
            return Ok(verdict(&report));
        }
        Command::Report { summary } => {
            let text = fs::read_to_string(&summary).with_context(|| format!("reading {}", summary.display()))?;
            let report = VerificationReport::from_json(&text)?;
            print!("{}", report.summary_text());
            return Ok(verdict(&report));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", format_chain(&e));
            ExitCode::from(2)
        }
    }
}

fn format_chain(e: &anyhow::Error) -> String {
    e.chain().map(|c| c.to_string()).collect::<Vec<_>>().join(": ")
}
