//! `radlabel` command-line driver.
//!
//! Exit codes: 0 success, 1 configuration or fatal error, 2 some frames were
//! skipped or failed (the manifest or report lists them).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use radlabel::io::ply::{Palette, PlyFormat};
use radlabel::pipeline::config::{FrameRange, PipelineConfig, SegSelection};
use radlabel::pipeline::tools::EncodeOptions;
use radlabel::pipeline::{self, FrameStatus, Manifest};
use radlabel::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_PARTIAL: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "radlabel", version, about = "Radar point labeling, fog synthesis and evaluation")]
struct Cli {
    /// Log filter when RUST_LOG is unset.
    #[arg(long, global = true, default_value = "info")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transfer segmentation labels onto radar points and refine them.
    Label(Common),
    /// Render fogged camera images, one per attenuation coefficient.
    FogSweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated attenuation coefficients, 1/m.
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
        /// Fog sRGB-decoded intensities instead of raw values.
        #[arg(long)]
        gamma: bool,
    },
    /// Compare predicted labeled clouds with reference clouds.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Fog level written into report rows.
        #[arg(long)]
        fog_level: Option<f64>,
        /// Method name written into report rows.
        #[arg(long)]
        method: Option<String>,
    },
    /// Fold a RAED radar cube into an RAE volume.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write raw mean power instead of the standardized log volume.
        #[arg(long)]
        no_normalize: bool,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        /// Accept cubes other than 2x128x240x500.
        #[arg(long)]
        any_shape: bool,
    },
    /// Re-encode labeled PLY files with the class palette.
    Export {
        /// A labeled PLY file or a directory of them.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Binary)]
        format: FormatArg,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scene ids; comma-separated or repeated.
    #[arg(long, value_delimiter = ',')]
    scene: Option<Vec<u32>>,
    /// Half-open frame id range `a..b`.
    #[arg(long)]
    frames: Option<FrameRange>,
    #[arg(long, value_enum)]
    seg_source: Option<SegArg>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SegArg {
    Camera,
    Radar,
    Fused,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Ascii,
    Binary,
    BinaryBigEndian,
}

impl From<FormatArg> for PlyFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Ascii => PlyFormat::Ascii,
            FormatArg::Binary => PlyFormat::BinaryLittleEndian,
            FormatArg::BinaryBigEndian => PlyFormat::BinaryBigEndian,
        }
    }
}

impl Common {
    /// Loads the config (or defaults when `required` is false and none is
    /// given) and applies flag overrides.
    fn resolve(&self, required: bool) -> Result<PipelineConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None if required => return Err(Error::Config("--config is required for this command".into())),
            None => PipelineConfig::new("."),
        };
        if let Some(scenes) = &self.scene {
            cfg.scenes = scenes.clone();
        }
        if let Some(frames) = self.frames {
            cfg.frames = Some(frames);
        }
        if let Some(seg) = self.seg_source {
            cfg.seg_source = match seg {
                SegArg::Camera => SegSelection::Camera,
                SegArg::Radar => SegSelection::Radar,
                SegArg::Fused => SegSelection::Fused,
            };
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        Ok(cfg)
    }
}

fn report_manifest(manifest: &Manifest, dir: &Path) -> ExitCode {
    println!(
        "{}: {} ok, {} skipped, {} failed; manifest {}",
        manifest.command,
        manifest.count(FrameStatus::Ok),
        manifest.count(FrameStatus::Skipped),
        manifest.count(FrameStatus::Failed),
        dir.join(pipeline::MANIFEST_FILE).display()
    );
    if manifest.is_complete() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_PARTIAL)
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Label(common) => {
            let cfg = common.resolve(true)?;
            cfg.validate()?;
            let manifest = pipeline::run_label(&cfg)?;
            Ok(report_manifest(&manifest, &cfg.output_dir.join(pipeline::label::LABEL_DIR)))
        }
        Command::FogSweep { common, betas, gamma } => {
            let mut cfg = common.resolve(true)?;
            if let Some(b) = betas {
                cfg.fog.betas = b;
            }
            cfg.fog.gamma |= gamma;
            cfg.validate()?;
            let manifest = pipeline::run_fog_sweep(&cfg)?;
            Ok(report_manifest(&manifest, &cfg.output_dir.join(pipeline::fog_sweep::FOG_DIR)))
        }
        Command::Eval { common, pred, truth, fog_level, method } => {
            let mut cfg = common.resolve(false)?;
            if let Some(f) = fog_level {
                cfg.eval.fog_level = f;
            }
            if method.is_some() {
                cfg.eval.method = method;
            }
            cfg.validate()?;
            let outcome = pipeline::run_eval(&cfg, &pred, &truth)?;
            print!("{}", pipeline::eval::summary_text(&outcome));
            println!("report {}", cfg.output_dir.join(pipeline::eval::EVAL_DIR).display());
            Ok(if outcome.skipped() == 0 { ExitCode::SUCCESS } else { ExitCode::from(EXIT_PARTIAL) })
        }
        Command::Encode { input, out, no_normalize, epsilon, any_shape } => {
            let options =
                EncodeOptions { normalize: (!no_normalize).then_some(epsilon), require_standard_shape: !any_shape };
            pipeline::run_encode(&input, &out, options)?;
            println!("encode: wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { input, out, format } => {
            let written = pipeline::run_export(&input, &out, &Palette::default(), format.into())?;
            println!("export: wrote {} file(s) to {}", written.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(&cli.log_level))
        .format_timestamp(None)
        .init();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
