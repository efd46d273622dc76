//! Command-line front end. Every subcommand is a thin adapter over the
//! library; data goes to stdout or files, diagnostics to stderr.
//!
//! Exit codes: 0 success, 2 input error, 3 degenerate computation,
//! 4 gamut violation, 5 partial grid failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::agreement::AgreementError;
use crate::colorspace::{LinearRgb, WhitePoint};
use crate::estimators::{
    estimate_illuminant, von_kries_correct, EstimateError, EstimatorParams, IlluminantEstimate,
    Method, Minkowski,
};
use crate::harness::{
    compare, config_hash, delta_records, format_delta_table, load_manifest, read_human_csv,
    read_records_csv, run_grid, write_battery, write_records_csv, BatteryOptions, CompareOptions,
    Granularity, HarnessError, ManifestError, Predictor, PredictorSource, RunReport,
};
use crate::image::{
    read_image, write_image, write_mask, BitDepth, ColorSpace, ImageError, LabelImage,
};
use crate::psychophys::PsychophysError;
use crate::scenegen::{
    apply_mechanism, render, IlluminantSpec, MechanismSpec, SceneError, SceneSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_GAMUT: i32 = 4;
pub const EXIT_PARTIAL: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "constancy",
    version,
    about = "Color constancy estimation and evaluation"
)]
pub struct Cli {
    /// Reference white as X,Y,Z (Y = 1).
    #[arg(long, global = true, env = "CONSTANCY_WHITE_POINT", value_parser = parse_triplet)]
    pub white_point: Option<[f64; 3]>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the illuminant direction of an image.
    Estimate(EstimateArgs),
    /// White-balance an image by von Kries correction.
    Correct(CorrectArgs),
    /// Render synthetic scenes.
    Synth(SynthArgs),
    /// Run a predictor over a manifest grid.
    Evaluate(EvaluateArgs),
    /// Compare model records against human data.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    /// gray-world, white-patch, shades-of-gray, gray-edge or weighted-gray-edge.
    #[arg(long, short)]
    pub method: Option<String>,
    /// Minkowski exponent (`inf` for a maximum).
    #[arg(short = 'p', long = "minkowski")]
    pub p: Option<String>,
    /// Derivative order (0, 1 or 2).
    #[arg(long)]
    pub order: Option<u32>,
    /// Gaussian scale in pixels.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Edge-weight exponent for weighted-gray-edge.
    #[arg(long)]
    pub kappa: Option<f64>,
}

impl EstimatorArgs {
    fn params(&self, method: Method) -> Result<EstimatorParams, CliError> {
        let mut p = EstimatorParams::default_for(method);
        if let Some(raw) = &self.p {
            p.minkowski = if raw.eq_ignore_ascii_case("inf") {
                Minkowski::Max
            } else {
                Minkowski::P(
                    raw.parse()
                        .map_err(|_| CliError::input(format!("bad -p value `{raw}`")))?,
                )
            };
        }
        if let Some(o) = self.order {
            p.order = o;
        }
        if let Some(s) = self.sigma {
            p.sigma = s;
        }
        if let Some(k) = self.kappa {
            p.kappa = k;
        }
        p.validate().map_err(CliError::from)?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    pub image: PathBuf,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// How stored pixel values are to be read.
    #[arg(long, default_value = "srgb")]
    pub space: ColorSpace,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
    /// Also write the estimate as JSON to this file.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrectArgs {
    pub image: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    /// Illuminant as r,g,b (any positive scale).
    #[arg(long, value_parser = parse_triplet, conflicts_with = "truth")]
    pub illuminant: Option<[f64; 3]>,
    /// With `--method oracle`: JSON file holding the true light.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, default_value = "srgb")]
    pub space: ColorSpace,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Write the full standard mechanism battery with a manifest here.
    #[arg(long, conflicts_with_all = ["scene", "out"])]
    pub battery: Option<PathBuf>,
    /// Scene description (JSON); the standard scene when omitted.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Named light or r,g,b.
    #[arg(long, default_value = "neutral")]
    pub illuminant: String,
    /// baseline, local-surround, maximum-flux, spatial-mean-add-objects or
    /// spatial-mean-change-reflectances, with battery settings.
    #[arg(long, default_value = "baseline")]
    pub mechanism: String,
    /// Mechanism as JSON, overriding `--mechanism`.
    #[arg(long)]
    pub mechanism_file: Option<PathBuf>,
    /// Output directory for a single scene.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// `identity`, `external:DIR[:SPACE]`, or an estimator name.
    #[arg(long, default_value = "gray-world")]
    pub predictor: String,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Worker threads (all cores when omitted).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Directory for records.csv and report.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Model results (CSV with scene,condition,illuminant,subject,cci).
    #[arg(long)]
    pub records: PathBuf,
    /// Human data (CSV with scene,condition,illuminant,subject,cci).
    #[arg(long)]
    pub humans: PathBuf,
    #[arg(long, default_value = "baseline")]
    pub baseline: String,
    /// Manifest supplying scene environments for the indoor/outdoor scopes.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Scene environments as scene=indoor,scene=outdoor.
    #[arg(long, value_delimiter = ',')]
    pub environment: Vec<String>,
    #[arg(long, value_enum, default_value = "cells")]
    pub granularity: GranularityArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::agreement::BOOTSTRAP_RESAMPLES)]
    pub resamples: usize,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
    /// Write the report JSON here as well.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write the model's ΔCCI table (two decimals) here.
    #[arg(long)]
    pub delta_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GranularityArg {
    Cells,
    ConditionMeans,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn degenerate(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DEGENERATE,
            message: message.into(),
        }
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        match e {
            EstimateError::AllZeroImage
            | EstimateError::DegenerateEstimate
            | EstimateError::ZeroChannelIlluminant { .. } => CliError::degenerate(e.to_string()),
            _ => CliError::input(e.to_string()),
        }
    }
}

impl From<ImageError> for CliError {
    fn from(e: ImageError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<SceneError> for CliError {
    fn from(e: SceneError) -> Self {
        match e {
            SceneError::OutOfGamut { .. } => CliError {
                code: EXIT_GAMUT,
                message: e.to_string(),
            },
            SceneError::Competitors(_) => CliError::degenerate(e.to_string()),
            SceneError::InvalidSpec(_) => CliError::input(e.to_string()),
        }
    }
}

impl From<ManifestError> for CliError {
    fn from(e: ManifestError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Estimate(e) => e.into(),
            HarnessError::Scene(e) => e.into(),
            HarnessError::Psychophys(PsychophysError::DegenerateAxis)
            | HarnessError::Agreement(AgreementError::ZeroVariance)
            | HarnessError::Agreement(AgreementError::DegenerateInputs) => {
                CliError::degenerate(e.to_string())
            }
            _ => CliError::input(e.to_string()),
        }
    }
}

fn parse_triplet(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{p}` is not a number"))
        })
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(parts)
        .map_err(|_| format!("expected three comma-separated values, got `{s}`"))
}

fn white_point(cli: &Cli) -> Result<WhitePoint, CliError> {
    match cli.white_point {
        None => Ok(WhitePoint::D65),
        Some([x, y, z]) => WhitePoint::new(x, y, z).map_err(|e| CliError::input(e.to_string())),
    }
}

fn parse_method(s: &str) -> Result<Method, CliError> {
    s.parse().map_err(CliError::input)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn cmd_estimate(a: &EstimateArgs, wp: WhitePoint) -> Result<i32, CliError> {
    let method = parse_method(a.estimator.method.as_deref().unwrap_or("gray-world"))?;
    let params = a.estimator.params(method)?;
    let (img, _) = read_image(&a.image, a.space)?;
    let e = estimate_illuminant(&img.to_linear(wp), &params)?;
    let d = e.direction.to_array();
    let json = to_json(&serde_json::json!({ "params": params, "direction": d }));
    match a.format {
        OutputFormat::Json => print!("{json}"),
        OutputFormat::Csv => println!("r,g,b\n{:.6},{:.6},{:.6}", d[0], d[1], d[2]),
        OutputFormat::Text => println!("{:.6} {:.6} {:.6}", d[0], d[1], d[2]),
    }
    if let Some(p) = &a.json {
        write_file(p, &json)?;
    }
    Ok(EXIT_OK)
}

fn cmd_correct(a: &CorrectArgs, wp: WhitePoint) -> Result<i32, CliError> {
    let (img, depth) = read_image(&a.image, a.space)?;
    let linear = img.to_linear(wp);
    let estimate = if let Some(rgb) = a.illuminant {
        IlluminantEstimate::from_rgb(LinearRgb::from_array(rgb))?
    } else {
        match a.estimator.method.as_deref() {
            Some("oracle") => {
                let truth = a
                    .truth
                    .as_ref()
                    .ok_or_else(|| CliError::input("--method oracle needs --truth FILE"))?;
                let spec: IlluminantSpec = read_json(truth)?;
                IlluminantEstimate::from_rgb(LinearRgb::from_array(spec.direction))?
            }
            Some(m) => {
                let params = a.estimator.params(parse_method(m)?)?;
                estimate_illuminant(&linear, &params)?
            }
            None => return Err(CliError::input("give --illuminant r,g,b or --method")),
        }
    };
    let corrected = von_kries_correct(&linear, &estimate)?;
    let out = match a.space {
        ColorSpace::Linear => corrected,
        ColorSpace::Srgb => corrected.to_srgb(wp),
        ColorSpace::Lab => corrected.to_lab(wp),
    };
    write_image(&a.output, &out, depth)?;
    Ok(EXIT_OK)
}

fn illuminant_arg(s: &str) -> Result<IlluminantSpec, CliError> {
    if let Some(l) = IlluminantSpec::named(s) {
        return Ok(l);
    }
    let rgb = parse_triplet(s).map_err(|e| CliError::input(format!("illuminant: {e}")))?;
    Ok(IlluminantSpec::new("custom", rgb)?)
}

fn mechanism_arg(a: &SynthArgs) -> Result<MechanismSpec, CliError> {
    if let Some(p) = &a.mechanism_file {
        return read_json(p);
    }
    MechanismSpec::battery()
        .into_iter()
        .find(|m| m.name() == a.mechanism)
        .ok_or_else(|| CliError::input(format!("unknown mechanism `{}`", a.mechanism)))
}

fn cmd_synth(a: &SynthArgs, wp: WhitePoint) -> Result<i32, CliError> {
    if let Some(dir) = &a.battery {
        create_dir(dir)?;
        let mut opts = BatteryOptions::standard(a.seed);
        opts.white_point = wp;
        let manifest = write_battery(dir, &opts)?;
        eprintln!("wrote {}", manifest.display());
        return Ok(EXIT_OK);
    }
    let out = a
        .out
        .as_ref()
        .ok_or_else(|| CliError::input("give --out DIR or --battery DIR"))?;
    let scene = match &a.scene {
        Some(p) => read_json(p)?,
        None => SceneSpec::standard(a.seed),
    };
    let illum = illuminant_arg(&a.illuminant)?;
    let mech = mechanism_arg(a)?;
    let scene = apply_mechanism(&scene, &mech, &illum, wp)?;
    let r = render(&scene, &illum)?;
    create_dir(out)?;
    write_image(&out.join("image.png"), &r.image, BitDepth::Sixteen)?;
    write_image(
        &out.join("reflectance.png"),
        &r.reflectance,
        BitDepth::Sixteen,
    )?;
    let target_mask = LabelImage::new(
        r.patches.width(),
        r.patches.height(),
        r.patches
            .labels()
            .iter()
            .map(|&p| u32::from(p as usize == scene.target + 1))
            .collect(),
    )?;
    write_mask(&out.join("target_mask.png"), &target_mask)?;
    if let Err(e) = write_mask(&out.join("patches.png"), &r.patches) {
        eprintln!("patches.png skipped: {e}");
    }
    write_file(&out.join("scene.json"), &to_json(&scene))?;
    write_file(&out.join("illuminant.json"), &to_json(&illum))?;
    write_file(&out.join("mechanism.json"), &to_json(&mech))?;
    Ok(EXIT_OK)
}

fn predictor_arg(a: &EvaluateArgs) -> Result<PredictorSource, CliError> {
    let p = a.predictor.as_str();
    if p == "identity" {
        return Ok(PredictorSource::Identity);
    }
    if let Some(rest) = p.strip_prefix("external:") {
        let (dir, space) = match rest.rsplit_once(':') {
            Some((d, s)) if s.parse::<ColorSpace>().is_ok() => (d, s.parse().expect("checked")),
            _ => (rest, ColorSpace::Lab),
        };
        return Ok(PredictorSource::External {
            dir: PathBuf::from(dir),
            space,
        });
    }
    let name = p.strip_prefix("builtin:").unwrap_or(p);
    let method = a.estimator.method.as_deref().unwrap_or(name);
    Ok(PredictorSource::Builtin(
        a.estimator.params(parse_method(method)?)?,
    ))
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<i32, CliError> {
    let manifest = load_manifest(&a.manifest)?;
    let predictor = predictor_arg(a)?;
    if let PredictorSource::External { dir, .. } = &predictor {
        if !dir.is_dir() {
            return Err(CliError::input(format!(
                "{}: not a directory",
                dir.display()
            )));
        }
    }
    let run = run_grid(&manifest, &predictor, a.jobs);
    create_dir(&a.out)?;
    write_records_csv(&a.out.join("records.csv"), &run.records)?;
    let report = RunReport::new(
        &run,
        config_hash(&manifest.source, &predictor.describe()),
        predictor.describe(),
    );
    report.write(&a.out.join("report.json"))?;
    for e in &run.errors {
        eprintln!("cell {}: {}", e.key, e.error);
    }
    if run.is_partial() {
        eprintln!("{} of {} cells failed", run.errors.len(), report.cells);
        return Ok(EXIT_PARTIAL);
    }
    Ok(EXIT_OK)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

fn cmd_compare(a: &CompareArgs) -> Result<i32, CliError> {
    let model = read_records_csv(&a.records)?;
    let humans = read_human_csv(&a.humans)?;
    let mut environments = BTreeMap::new();
    if let Some(m) = &a.manifest {
        environments = load_manifest(m)?.environments();
    }
    for pair in &a.environment {
        let (scene, env) = pair.split_once('=').ok_or_else(|| {
            CliError::input(format!("--environment expects scene=env, got `{pair}`"))
        })?;
        environments.insert(scene.to_string(), env.parse().map_err(CliError::input)?);
    }
    let opts = CompareOptions {
        baseline: a.baseline.clone(),
        environments,
        granularity: match a.granularity {
            GranularityArg::Cells => Granularity::Cells,
            GranularityArg::ConditionMeans => Granularity::ConditionMeans,
        },
        seed: a.seed,
        resamples: a.resamples,
    };
    let reports = compare(&model, &humans, &opts)?;
    let json = to_json(&reports);
    match a.format {
        OutputFormat::Json => print!("{json}"),
        OutputFormat::Csv => {
            println!("model,scope,measure,n,accuracy,bias,normalized_error,ccc,ceiling,nccc");
            for r in &reports {
                for s in &r.scopes {
                    if let Some(m) = &s.metrics {
                        println!(
                            "{},{},{},{},{},{:.4},{},{},{},{}",
                            r.model,
                            serde_json::to_value(s.scope)
                                .expect("enum")
                                .as_str()
                                .unwrap_or(""),
                            serde_json::to_value(s.measure)
                                .expect("enum")
                                .as_str()
                                .unwrap_or(""),
                            m.n,
                            fmt_opt(m.accuracy),
                            m.bias,
                            fmt_opt(m.normalized_error),
                            fmt_opt(m.ccc),
                            fmt_opt(m.ceiling),
                            fmt_opt(m.nccc)
                        );
                    }
                }
            }
        }
        OutputFormat::Text => {
            for r in &reports {
                println!("model {}", r.model);
                println!(
                    "  {:<8} {:<10} {:>4} {:>9} {:>9} {:>9} {:>9} {:>9}",
                    "scope", "measure", "n", "accuracy", "bias", "norm.err", "ccc", "nccc"
                );
                for s in &r.scopes {
                    let scope = format!("{:?}", s.scope).to_lowercase();
                    let measure = match s.measure {
                        crate::harness::Measure::Cci => "cci",
                        crate::harness::Measure::DeltaCci => "delta-cci",
                    };
                    match (&s.metrics, &s.error) {
                        (Some(m), _) => println!(
                            "  {:<8} {:<10} {:>4} {:>9} {:>9.4} {:>9} {:>9} {:>9}",
                            scope,
                            measure,
                            m.n,
                            fmt_opt(m.accuracy),
                            m.bias,
                            fmt_opt(m.normalized_error),
                            fmt_opt(m.ccc),
                            fmt_opt(m.nccc)
                        ),
                        (None, e) => println!(
                            "  {:<8} {:<10} unavailable: {}",
                            scope,
                            measure,
                            e.as_deref().unwrap_or("")
                        ),
                    }
                }
            }
        }
    }
    if let Some(p) = &a.json {
        write_file(p, &json)?;
    }
    if let Some(p) = &a.delta_out {
        write_file(p, &format_delta_table(&delta_records(&model, &a.baseline)))?;
    }
    Ok(EXIT_OK)
}

/// Parses `args` and runs the chosen subcommand, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = white_point(&cli).and_then(|wp| match &cli.command {
        Command::Estimate(a) => cmd_estimate(a, wp),
        Command::Correct(a) => cmd_correct(a, wp),
        Command::Synth(a) => cmd_synth(a, wp),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Compare(a) => cmd_compare(a),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
