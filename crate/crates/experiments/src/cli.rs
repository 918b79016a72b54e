//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use nitsche_iga::model::ModelDescription;
use nitsche_iga::nitsche::{GammaPolicy, NitscheConfig};

use crate::block::{run_block_contact, BlockParams, BlockVariant};
use crate::common::{config_from, dyadic, Variant};
use crate::coupling::{default_layouts, run_coupling_statics, CouplingParams, Layout};
use crate::error::{ExperimentError, Result};
use crate::hertz::{run_hertz, HertzStudy};
use crate::kirchhoff::{run_kirchhoff_plate, PlateParams};
use crate::patch::{patch_test_table, run_circle_study};
use crate::report::ExperimentReport;
use crate::rod::{run_rod_modal, run_rod_study, RodParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// `fixed:tiny` stands for `1e-4` times the reference stabilization `2 lambda_max`.
const TINY_EIGEN_MULTIPLIER: f64 = 2e-4;

#[derive(Debug, Parser)]
#[command(name = "nitsche-iga", version, about = "Isogeometric Nitsche benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rectangular patch tests for each degree and test order.
    PatchTest {
        #[command(flatten)]
        common: CommonArgs,
        /// Total degree of the imposed field (1..=4); all orders by default.
        #[arg(long)]
        order: Option<u32>,
    },
    /// Weak Dirichlet data on a disk; energy convergence per degree.
    CircleTest(CommonArgs),
    /// Simply supported quarter plate.
    Kirchhoff(CommonArgs),
    /// Square split into two weakly coupled patches.
    Coupling {
        #[command(flatten)]
        common: CommonArgs,
        /// Give the right patch one more element in each direction.
        #[arg(long)]
        nonmatching: bool,
    },
    /// Spectrum and outlier frequencies of a rod.
    RodModal(CommonArgs),
    /// Disk on a rigid plane.
    Hertz(CommonArgs),
    /// Two stacked blocks in contact.
    Block(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Spline degree; the benchmark's default set when absent.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Finest dyadic refinement level (2^r elements per side).
    #[arg(long)]
    pub refinements: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// free | eigen:<m> | fixed:<value> | fixed:tiny
    #[arg(long, value_parser = parse_gamma)]
    pub gamma: Option<GammaPolicy>,
    /// Output directory for report.json and the CSV tables.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Model description file with `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn parse_gamma(s: &str) -> std::result::Result<GammaPolicy, String> {
    if s.trim() == "fixed:tiny" {
        return Ok(GammaPolicy::EigenScaled(TINY_EIGEN_MULTIPLIER));
    }
    s.parse::<GammaPolicy>().map_err(|e| e.to_string())
}

/// Command-line flags merged over the description file.
struct Settings {
    args: CommonArgs,
    file: ModelDescription,
}

impl Settings {
    fn new(args: CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => ModelDescription::parse(&std::fs::read_to_string(p)?)?,
            None => ModelDescription::default(),
        };
        Ok(Self { args, file })
    }

    fn value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        Ok(self.file.parse_value(key)?)
    }

    fn degrees(&self, default: &[usize]) -> Result<Vec<usize>> {
        Ok(match self.args.degree.or(self.value("degree")?) {
            Some(p) => vec![p],
            None => default.to_vec(),
        })
    }

    fn refinements(&self, default: usize) -> Result<usize> {
        Ok(self.args.refinements.or(self.value("refinements")?).unwrap_or(default))
    }

    fn theta(&self) -> Result<Option<f64>> {
        Ok(self.args.theta.or(self.value("theta")?))
    }

    fn gamma(&self) -> Result<Option<GammaPolicy>> {
        match self.args.gamma {
            Some(g) => Ok(Some(g)),
            None => self.file.get("gamma").map(parse_gamma).transpose().map_err(ExperimentError::Config),
        }
    }

    fn overridden(&self) -> Result<bool> {
        Ok(self.theta()?.is_some() || self.gamma()?.is_some())
    }

    fn config(&self, default: NitscheConfig) -> Result<NitscheConfig> {
        config_from(self.theta()?, self.gamma()?, default)
    }

    fn set<T: std::str::FromStr>(&self, key: &str, target: &mut T) -> Result<()> {
        if let Some(v) = self.value(key)? {
            *target = v;
        }
        Ok(())
    }
}

fn meshes(first: usize, last: usize) -> Result<Vec<usize>> {
    if last < first + 2 {
        return Err(ExperimentError::Config(format!("--refinements must be at least {} for a rate", first + 2)));
    }
    Ok(dyadic(first, last))
}

fn patch_test(s: &Settings, order: Option<u32>) -> Result<ExperimentReport> {
    let orders = match order.or(s.value("order")?) {
        Some(k) => vec![k],
        None => vec![1, 2, 3, 4],
    };
    let elements = 1usize << s.refinements(2)?;
    patch_test_table(&s.degrees(&[2, 3, 4])?, &orders, &s.config(NitscheConfig::skew_free())?, elements)
}

fn circle(s: &Settings) -> Result<ExperimentReport> {
    let variants = if s.overridden()? {
        vec![Variant::custom(s.config(NitscheConfig::skew_free())?)]
    } else {
        vec![Variant::skew(), Variant::standard()]
    };
    run_circle_study(&s.degrees(&[2, 3, 4])?, &meshes(2, s.refinements(5)?)?, &variants)
}

fn kirchhoff(s: &Settings) -> Result<ExperimentReport> {
    let mut params = PlateParams::default();
    s.set("thickness", &mut params.thickness)?;
    s.set("E", &mut params.modulus)?;
    s.set("nu", &mut params.poisson)?;
    s.set("load", &mut params.load)?;
    let config = s.config(NitscheConfig::skew_free())?;
    let m = meshes(1, s.refinements(5)?)?;
    let mut rep = ExperimentReport::new("kirchhoff");
    for p in s.degrees(&[3, 4])? {
        rep.absorb(run_kirchhoff_plate(p, &m, &params, &config)?, &format!("p{p}"));
    }
    Ok(rep)
}

fn coupling(s: &Settings, nonmatching: bool) -> Result<ExperimentReport> {
    let mut params = CouplingParams { nonmatching, ..CouplingParams::default() };
    s.set("nonmatching", &mut params.nonmatching)?;
    s.set("cond_limit", &mut params.cond_limit)?;
    let layouts = if s.overridden()? {
        vec![Layout::Conforming, Layout::TwoPatch(Variant::custom(s.config(NitscheConfig::skew_free())?))]
    } else {
        default_layouts().to_vec()
    };
    let m = meshes(2, s.refinements(4)?)?;
    let mut rep = ExperimentReport::new("coupling");
    for p in s.degrees(&[2, 3, 4, 5])? {
        rep.absorb(run_coupling_statics(p, &layouts, &m, &params)?, &format!("p{p}"));
    }
    Ok(rep)
}

fn rod(s: &Settings) -> Result<ExperimentReport> {
    let mut params = RodParams { elements_per_patch: 1 << s.refinements(7)?, ..RodParams::default() };
    s.set("patches", &mut params.patches)?;
    s.set("delta", &mut params.delta)?;
    s.set("weak_ends", &mut params.weak_ends)?;
    s.set("exported_modes", &mut params.exported_modes)?;
    let degrees = s.degrees(&[2, 3, 4, 5])?;
    if !s.overridden()? {
        return run_rod_study(&degrees, &params);
    }
    let v = Variant::custom(s.config(NitscheConfig::skew_free())?);
    let mut rep = ExperimentReport::new("rod-modal");
    for p in degrees {
        rep.absorb(run_rod_modal(p, &params, &v.config, v.name)?, &format!("p{p}"));
    }
    Ok(rep)
}

fn hertz(s: &Settings) -> Result<ExperimentReport> {
    let mut study = HertzStudy::default();
    let p = &mut study.params;
    if let Some(d) = s.args.degree.or(s.value("degree")?) {
        p.degree = d;
    }
    s.set("E", &mut p.modulus)?;
    s.set("nu", &mut p.poisson)?;
    s.set("radius", &mut p.radius)?;
    s.set("half_width", &mut p.half_width)?;
    s.set("reference_mesh", &mut p.reference_mesh)?;
    s.set("max_iter", &mut p.max_iter)?;
    s.set("tol", &mut p.tol)?;
    study.meshes = dyadic(2, s.refinements(6)?);
    study.profile_mesh = study.meshes.last().copied().unwrap_or(4).min(64);
    if let Some(t) = s.theta()? {
        study.thetas = vec![t];
    }
    match s.gamma()? {
        None => {}
        Some(GammaPolicy::EigenScaled(m)) => study.multipliers = vec![m / 2.0],
        Some(g) => {
            return Err(ExperimentError::Config(format!(
                "contact stabilization is set relative to 2 lambda_max; use eigen:<m> or fixed:tiny, not {g}"
            )))
        }
    }
    run_hertz(&study)
}

fn block(s: &Settings) -> Result<ExperimentReport> {
    let mut params = BlockParams::default();
    if let Some(d) = s.args.degree.or(s.value("degree")?) {
        params.degree = d;
    }
    if let Some(r) = s.args.refinements.or(s.value("refinements")?) {
        params.lower_elements = (1usize << r).max(2);
        params.upper_elements = params.lower_elements - 1;
    }
    s.set("upper_elements", &mut params.upper_elements)?;
    s.set("E", &mut params.modulus)?;
    s.set("nu", &mut params.poisson)?;
    s.set("pressure", &mut params.pressure)?;
    match s.gamma()? {
        None => {}
        Some(GammaPolicy::EigenScaled(m)) => params.gamma_factor = m,
        Some(g) => {
            return Err(ExperimentError::Config(format!(
                "contact stabilization is set relative to lambda_max; use eigen:<m>, not {g}"
            )))
        }
    }
    let mut variants = BlockVariant::all().to_vec();
    if let Some(t) = s.theta()? {
        variants.retain(|v| v.theta == 1.0);
        for v in &mut variants {
            v.theta = t;
        }
    }
    run_block_contact(&variants, &params)
}

/// Runs one parsed command; returns the report and where it belongs.
pub fn execute(command: Command) -> Result<(ExperimentReport, PathBuf)> {
    let (common, name) = match &command {
        Command::PatchTest { common, .. } => (common.clone(), "patch-test"),
        Command::CircleTest(c) => (c.clone(), "circle-test"),
        Command::Kirchhoff(c) => (c.clone(), "kirchhoff"),
        Command::Coupling { common, .. } => (common.clone(), "coupling"),
        Command::RodModal(c) => (c.clone(), "rod-modal"),
        Command::Hertz(c) => (c.clone(), "hertz"),
        Command::Block(c) => (c.clone(), "block"),
    };
    let out = common.out.clone().unwrap_or_else(|| Path::new("results").join(name));
    let s = Settings::new(common)?;
    let rep = match command {
        Command::PatchTest { order, .. } => patch_test(&s, order)?,
        Command::CircleTest(_) => circle(&s)?,
        Command::Kirchhoff(_) => kirchhoff(&s)?,
        Command::Coupling { nonmatching, .. } => coupling(&s, nonmatching)?,
        Command::RodModal(_) => rod(&s)?,
        Command::Hertz(_) => hertz(&s)?,
        Command::Block(_) => block(&s)?,
    };
    Ok((rep, out))
}

fn summarize(rep: &ExperimentReport, out: &Path) {
    for c in &rep.checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    let stalled: Vec<String> = rep
        .cells
        .iter()
        .filter(|c| c.converged == Some(false))
        .map(|c| format!("{} n{}", c.variant, c.mesh))
        .collect();
    if !stalled.is_empty() {
        println!("not converged: {}", stalled.join(", "));
    }
    println!("report written to {}", out.display());
}

/// Full command-line run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(cli.command) {
        Ok((rep, out)) => {
            if let Err(e) = rep.write_to(&out) {
                eprintln!("error: {e}");
                return EXIT_SOLVER;
            }
            summarize(&rep, &out);
            if rep.all_checks_passed() {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(ExperimentError::Config(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_SOLVER
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_aliases() {
        assert_eq!(parse_gamma("free").unwrap(), GammaPolicy::ParameterFree);
        assert_eq!(parse_gamma("eigen:2").unwrap(), GammaPolicy::EigenScaled(2.0));
        assert_eq!(parse_gamma("fixed:3.5").unwrap(), GammaPolicy::Fixed(3.5));
        assert_eq!(parse_gamma("fixed:tiny").unwrap(), GammaPolicy::EigenScaled(TINY_EIGEN_MULTIPLIER));
        assert!(parse_gamma("eigen:-1").is_err());
        assert!(parse_gamma("sometimes").is_err());
    }

    #[test]
    fn negative_theta_parses() {
        let cli = Cli::try_parse_from(["nitsche-iga", "circle-test", "--theta", "-1", "--gamma", "free"]).unwrap();
        match cli.command {
            Command::CircleTest(c) => {
                assert_eq!(c.theta, Some(-1.0));
                assert_eq!(c.gamma, Some(GammaPolicy::ParameterFree));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn short_sequences_refused() {
        assert!(meshes(2, 3).is_err());
        assert_eq!(meshes(2, 5).unwrap(), vec![4, 8, 16, 32]);
    }
}
