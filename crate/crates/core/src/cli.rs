//! `inbed` command line: subcommands, monitoring loop and report writers.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 partial
//! failure (some frames or events could not be processed). Machine-readable
//! outputs go under `--out`; human summaries go to stderr.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, EstimatorSpec, PipelineConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hog::calibrate_block_size;
use crate::imaging::{frame_file_name, load_sequence, save_sequence, write_manifest, GrayFrame, MANIFEST_NAME};
use crate::orientation::{
    calibrate_from_frames, cross_validate, detect_orientation, north_target, training_samples,
    vertical_view, CvReport, LabeledFrame, Orientation,
};
use crate::pck::evaluate;
use crate::pgm::{load_pgm, save_pgm};
use crate::pose::{
    load_pose_records, save_pose_records, Pose, PoseEstimator, PoseFileEstimator, PoseRecord,
    StubEstimator, NUM_JOINTS,
};
use crate::segmentation::{otsu_threshold, BoundingBox, SegmentationConfig};
use crate::svm::{train_orientation, OrientationModel};
use crate::synth::{
    render_dataset, render_sequence, DatasetConfig, Posture, SequenceScript,
};
use crate::trigger::{StepOutcome, TriggerConfig, TriggerEvent, TriggerState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "inbed", version, about = "In-bed pose monitoring pipeline")]
pub struct Cli {
    /// Pipeline config (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "inbed-out")]
    pub out: PathBuf,
    /// Disable data-parallel batch work.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive block size and threshold suggestions from sample frames.
    Calibrate {
        /// Frame directory, sequence manifest or PGM files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Train the orientation classifier with k-fold cross-validation.
    TrainOrientation {
        /// Labels file: JSON array of {frame, orientation}.
        labels: PathBuf,
    },
    /// Detect orientation of individual frames.
    Detect(DetectArgs),
    /// Detect orientation and write head-up frames.
    Rectify(DetectArgs),
    /// Run the trigger over a sequence and estimate pose on each trigger.
    Monitor {
        /// Sequence directory or manifest.
        sequence: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// PCK of predicted poses against ground truth.
    Evaluate { pred: PathBuf, gt: PathBuf },
    /// Render synthetic data.
    Synth {
        #[command(subcommand)]
        what: SynthCommand,
    },
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Labeled single frames with balanced orientations.
    Dataset {
        #[arg(long, default_value_t = 419)]
        count: usize,
        /// Canvas side in pixels.
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[arg(long, default_value_t = 4.0)]
        noise: f64,
    },
    /// Monitoring sequence with scripted relocations.
    Sequence {
        #[arg(long, default_value_t = 5)]
        episodes: usize,
        #[arg(long, default_value_t = 80)]
        hold: usize,
        #[arg(long, default_value_t = 12)]
        transition: usize,
        #[arg(long, default_value_t = 11.28)]
        fps: f64,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(e) => write!(f, "error: {e}"),
        }
    }
}

/// How a successful run ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Completion {
    Full,
    /// Some items failed; the count is reported.
    Partial(usize),
}

/// Parses nothing; runs an already parsed command line and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(&cli) {
        Ok(Completion::Full) => EXIT_OK,
        Ok(Completion::Partial(n)) => {
            eprintln!("{n} item(s) failed; see output logs");
            EXIT_PARTIAL
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Completion, CliError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    create_dir(&cli.out)?;
    match &cli.command {
        Command::Calibrate { inputs } => cmd_calibrate(inputs, &config, &cli.out, exec),
        Command::TrainOrientation { labels } => cmd_train_orientation(labels, &config, &cli.out, exec),
        Command::Detect(args) => cmd_detect(args, &config, &cli.out, exec, false),
        Command::Rectify(args) => cmd_detect(args, &config, &cli.out, exec, true),
        Command::Monitor { sequence, model } => cmd_monitor(sequence, model.as_deref(), &config, &cli.out),
        Command::Evaluate { pred, gt } => cmd_evaluate(pred, gt, &config, &cli.out),
        Command::Synth { what } => cmd_synth(what, &config, &cli.out, exec),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(Error::io(format!("create {}", dir.display()), e)))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(format!("write {}", path.display()), e))
}

fn json_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("record serializes") + "\n"
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes") + "\n"
}

/// Named frames from directories (manifest order if present, else sorted
/// `*.pgm`), manifests, or single PGM files.
pub fn collect_frames(inputs: &[PathBuf]) -> Result<Vec<(String, GrayFrame)>> {
    let mut out = Vec::new();
    for input in inputs {
        let is_manifest = input.extension().is_some_and(|e| e == "json");
        if is_manifest || input.join(MANIFEST_NAME).is_file() {
            let (seq, manifest) = load_sequence(input)?;
            out.extend(manifest.frames.into_iter().zip(seq.frames().iter().cloned()));
        } else if input.is_dir() {
            let mut names: Vec<PathBuf> = fs::read_dir(input)
                .map_err(|e| Error::io(format!("list {}", input.display()), e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
                .collect();
            names.sort();
            for p in names {
                out.push((file_name(&p), load_pgm(&p)?));
            }
        } else {
            out.push((file_name(input), load_pgm(input)?));
        }
    }
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub frames: usize,
    pub detected: usize,
    pub mean_w: f64,
    pub mean_h: f64,
    pub l_block: usize,
    pub suggested_tau: u8,
}

/// Box statistics over frames whose subject can be segmented. Boxes are
/// taken after horizontal subjects are turned upright, as the classifier
/// sees them.
pub fn calibrate(frames: &[GrayFrame], seg: &SegmentationConfig, exec: Execution) -> Result<CalibrationReport> {
    let boxes: Vec<BoundingBox> = exec
        .map(frames, |f| vertical_view(f, seg).map(|v| v.bbox))
        .into_iter()
        .filter_map(Result::ok)
        .collect();
    let l_block = calibrate_block_size(&boxes)?;
    let n = boxes.len() as f64;
    Ok(CalibrationReport {
        frames: frames.len(),
        detected: boxes.len(),
        mean_w: boxes.iter().map(|b| b.w as f64).sum::<f64>() / n,
        mean_h: boxes.iter().map(|b| b.h as f64).sum::<f64>() / n,
        l_block,
        suggested_tau: otsu_threshold(frames),
    })
}

fn cmd_calibrate(inputs: &[PathBuf], config: &PipelineConfig, out: &Path, exec: Execution) -> Result<Completion, CliError> {
    let frames: Vec<GrayFrame> = collect_frames(inputs)?.into_iter().map(|(_, f)| f).collect();
    let report = calibrate(&frames, &config.segmentation, exec)?;
    eprintln!(
        "calibrate: {}/{} frames with a subject, mean box {:.1}x{:.1}, l_block {}, suggested tau {}",
        report.detected, report.frames, report.mean_w, report.mean_h, report.l_block, report.suggested_tau
    );
    let mut tuned = config.clone();
    tuned.hog.l_block = report.l_block;
    tuned.segmentation.tau = report.suggested_tau;
    tuned.training.calibrate_block = false;
    write_text(&out.join("calibration.json"), &pretty(&report))?;
    write_text(&out.join("config.json"), &tuned.to_json())?;
    Ok(Completion::Full)
}

/// Entry of a labels file written by `synth dataset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneLabel {
    pub frame: String,
    pub orientation: Orientation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posture: Option<Posture>,
}

pub fn load_labeled_frames(labels: &Path) -> Result<Vec<LabeledFrame>> {
    let text = fs::read_to_string(labels).map_err(|e| Error::io(format!("read {}", labels.display()), e))?;
    let entries: Vec<SceneLabel> =
        serde_json::from_str(&text).map_err(|e| Error::json(format!("parse {}", labels.display()), e))?;
    let base = labels.parent().unwrap_or_else(|| Path::new("."));
    entries
        .iter()
        .map(|e| {
            Ok(LabeledFrame {
                frame: load_pgm(&base.join(&e.frame))?,
                is_north: north_target(e.orientation),
                orientation: Some(e.orientation),
            })
        })
        .collect()
}

pub fn cv_csv(report: &CvReport) -> String {
    let mut out = String::from("fold,train_size,test_size,north_accuracy,orientation_accuracy\n");
    let opt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
    for f in &report.folds {
        out.push_str(&format!(
            "{},{},{},{:.6},{}\n",
            f.fold,
            f.train_size,
            f.test_size,
            f.north_accuracy,
            opt(f.orientation_accuracy)
        ));
    }
    out.push_str(&format!(
        "mean,,,{:.6},{}\n",
        report.mean_north_accuracy,
        opt(report.mean_orientation_accuracy)
    ));
    out
}

/// Block calibration (optional), k-fold CV, then a final model on all data.
pub fn train_with_cv(
    data: &[LabeledFrame],
    config: &PipelineConfig,
    exec: Execution,
) -> Result<(OrientationModel, CvReport)> {
    let mut params = config.hog.clone();
    if config.training.calibrate_block {
        let frames: Vec<GrayFrame> = data.iter().map(|d| d.frame.clone()).collect();
        params.l_block = calibrate_from_frames(&frames, &config.segmentation, exec)?;
    }
    let hyper = config.hyper();
    let pairs: Vec<(GrayFrame, bool)> = data.iter().map(|d| (d.frame.clone(), d.is_north)).collect();
    let samples = training_samples(&pairs, &config.segmentation, &params, exec)?;
    let model = train_orientation(&samples, &params, &hyper)?;
    let cv = cross_validate(data, config.training.folds, &config.segmentation, &params, &hyper, exec)?;
    Ok((model, cv))
}

fn cmd_train_orientation(labels: &Path, config: &PipelineConfig, out: &Path, exec: Execution) -> Result<Completion, CliError> {
    let data = load_labeled_frames(labels)?;
    let (model, cv) = train_with_cv(&data, config, exec)?;
    model.save(&out.join("model.json"))?;
    write_text(&out.join("cv.csv"), &cv_csv(&cv))?;
    write_text(&out.join("cv.json"), &pretty(&cv))?;
    eprintln!(
        "train-orientation: {} frames, l_block {}, {}-fold bit_N accuracy {:.4}, orientation accuracy {}",
        data.len(),
        model.hog_params.l_block,
        cv.folds.len(),
        cv.mean_north_accuracy,
        cv.mean_orientation_accuracy
            .map(|a| format!("{a:.4}"))
            .unwrap_or_else(|| "n/a".into())
    );
    Ok(Completion::Full)
}

fn resolve_model(flag: Option<&Path>, config: &PipelineConfig) -> Result<OrientationModel, CliError> {
    let path = flag
        .map(Path::to_path_buf)
        .or_else(|| config.model_path.clone())
        .ok_or_else(|| CliError::Config("no orientation model: pass --model or set model_path".into()))?;
    OrientationModel::load(&path).map_err(|e| CliError::Config(format!("model {}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectRecord {
    pub frame: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Orientation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bit_h: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bit_n: Option<bool>,
    /// Box in the input frame.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BoundingBox>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn cmd_detect(args: &DetectArgs, config: &PipelineConfig, out: &Path, exec: Execution, write_frames: bool) -> Result<Completion, CliError> {
    let model = resolve_model(args.model.as_deref(), config)?;
    let frames = collect_frames(&args.inputs)?;
    let results = exec.map(&frames, |(_, f)| detect_orientation(f, &model, &config.segmentation));
    let frame_dir = out.join("rectified");
    if write_frames {
        create_dir(&frame_dir)?;
    }
    let mut log = String::new();
    let mut failed = 0;
    for ((name, _), res) in frames.iter().zip(results) {
        let record = match res {
            Ok(d) => {
                if write_frames {
                    save_pgm(&frame_dir.join(name), &d.rectified).map_err(Error::from)?;
                }
                DetectRecord {
                    frame: name.clone(),
                    orientation: Some(d.orientation),
                    bit_h: Some(d.bit_h),
                    bit_n: Some(d.bit_n),
                    bbox: Some(d.raw_bbox),
                    error: None,
                }
            }
            Err(e) => {
                failed += 1;
                DetectRecord {
                    frame: name.clone(),
                    orientation: None,
                    bit_h: None,
                    bit_n: None,
                    bbox: None,
                    error: Some(e.to_string()),
                }
            }
        };
        log.push_str(&json_line(&record));
    }
    let name = if write_frames { "rectify.jsonl" } else { "detections.jsonl" };
    write_text(&out.join(name), &log)?;
    eprintln!("{}: {} frames, {} failed", if write_frames { "rectify" } else { "detect" }, frames.len(), failed);
    Ok(if failed == 0 {
        Completion::Full
    } else {
        Completion::Partial(failed)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLine {
    pub frame_index: usize,
    pub event: TriggerEvent,
}

/// Result of estimation at one trigger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub frame_index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Orientation>,
    /// Subject box in the rectified frame.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BoundingBox>,
    /// Joints in the rectified frame.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joints: Option<[[f64; 2]; NUM_JOINTS]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct MonitorRun {
    pub outcomes: Vec<StepOutcome>,
    pub records: Vec<MonitorRecord>,
    /// Rectified frame for each successful record, by frame index.
    pub rectified: Vec<(usize, GrayFrame)>,
}

impl MonitorRun {
    pub fn estimator_calls(&self) -> usize {
        self.records.iter().filter(|r| r.joints.is_some()).count()
    }

    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }
}

/// The monitoring loop: trigger on raw frames; on each falling edge, detect
/// orientation, rectify, and estimate pose. Per-event failures are recorded
/// and processing continues.
pub fn run_monitor(
    frames: &[GrayFrame],
    model: &OrientationModel,
    seg: &SegmentationConfig,
    trigger: &TriggerConfig,
    estimator: &dyn PoseEstimator,
) -> Result<MonitorRun> {
    trigger.validate()?;
    let mut state = TriggerState::new(trigger.n_bf);
    let mut run = MonitorRun {
        outcomes: Vec::with_capacity(frames.len()),
        records: Vec::new(),
        rectified: Vec::new(),
    };
    for frame in frames {
        let outcome = state.step(frame, trigger)?;
        run.outcomes.push(outcome);
        if outcome.event.is_none() {
            continue;
        }
        let record = match detect_orientation(frame, model, seg) {
            Ok(det) => match estimator.estimate(&det.rectified, &det.bbox) {
                Ok(pose) => {
                    run.rectified.push((outcome.frame_index, det.rectified));
                    MonitorRecord {
                        frame_index: outcome.frame_index,
                        orientation: Some(det.orientation),
                        bbox: Some(det.bbox),
                        joints: Some(pose.joints),
                        error: None,
                    }
                }
                Err(e) => MonitorRecord {
                    frame_index: outcome.frame_index,
                    orientation: Some(det.orientation),
                    bbox: Some(det.bbox),
                    joints: None,
                    error: Some(e.to_string()),
                },
            },
            Err(e) => MonitorRecord {
                frame_index: outcome.frame_index,
                orientation: None,
                bbox: None,
                joints: None,
                error: Some(e.to_string()),
            },
        };
        run.records.push(record);
    }
    Ok(run)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSummary {
    pub frames: usize,
    pub triggers: usize,
    pub estimator_calls: usize,
    pub failures: usize,
    /// `1 - estimator_calls / frames`.
    pub reduction: f64,
}

fn build_estimator(spec: &EstimatorSpec) -> Result<Box<dyn PoseEstimator>, CliError> {
    Ok(match spec {
        EstimatorSpec::Stub => Box::new(StubEstimator),
        EstimatorSpec::PoseFile(p) => Box::new(
            PoseFileEstimator::open(p).map_err(|e| CliError::Config(e.to_string()))?,
        ),
    })
}

fn cmd_monitor(sequence: &Path, model: Option<&Path>, config: &PipelineConfig, out: &Path) -> Result<Completion, CliError> {
    let model = resolve_model(model, config)?;
    let estimator = build_estimator(&config.estimator)?;
    let (seq, manifest) = load_sequence(sequence)?;
    let run = run_monitor(seq.frames(), &model, &config.segmentation, &config.trigger, estimator.as_ref())?;

    let mut events = String::new();
    for o in &run.outcomes {
        if let Some(event) = o.event {
            events.push_str(&json_line(&EventLine {
                frame_index: o.frame_index,
                event,
            }));
        }
    }
    write_text(&out.join("events.jsonl"), &events)?;
    let records: String = run.records.iter().map(json_line).collect();
    write_text(&out.join("records.jsonl"), &records)?;

    let frame_dir = out.join("rectified");
    create_dir(&frame_dir)?;
    for (i, f) in &run.rectified {
        save_pgm(&frame_dir.join(frame_file_name(*i)), f).map_err(Error::from)?;
    }
    let poses: Vec<PoseRecord> = run
        .records
        .iter()
        .filter_map(|r| {
            r.joints.map(|j| PoseRecord {
                frame: manifest.frames[r.frame_index].clone(),
                pose: Pose::new(j),
            })
        })
        .collect();
    save_pose_records(&out.join("poses.json"), &poses).map_err(Error::from)?;

    let summary = MonitorSummary {
        frames: seq.len(),
        triggers: run.records.len(),
        estimator_calls: run.estimator_calls(),
        failures: run.failures(),
        reduction: 1.0 - run.estimator_calls() as f64 / seq.len() as f64,
    };
    write_text(&out.join("summary.json"), &pretty(&summary))?;
    eprintln!(
        "monitor: {} frames, {} triggers, {} estimations ({:.1}% fewer than per-frame), {} failed",
        summary.frames,
        summary.triggers,
        summary.estimator_calls,
        100.0 * summary.reduction,
        summary.failures
    );
    Ok(if summary.failures == 0 {
        Completion::Full
    } else {
        Completion::Partial(summary.failures)
    })
}

fn cmd_evaluate(pred: &Path, gt: &Path, config: &PipelineConfig, out: &Path) -> Result<Completion, CliError> {
    let preds = load_pose_records(pred).map_err(Error::from)?;
    let gts = load_pose_records(gt).map_err(Error::from)?;
    let p: Vec<Pose> = preds.iter().map(|r| r.pose).collect();
    let g: Vec<Pose> = gts.iter().map(|r| r.pose).collect();
    let report = evaluate(&p, &g, &config.pck).map_err(Error::from)?;
    write_text(&out.join("pck.csv"), &report.to_csv())?;
    write_text(&out.join("pck.json"), &report.to_json())?;
    eprint!("{}", report.to_csv());
    Ok(Completion::Full)
}

fn cmd_synth(what: &SynthCommand, config: &PipelineConfig, out: &Path, exec: Execution) -> Result<Completion, CliError> {
    match *what {
        SynthCommand::Dataset { count, size, noise } => {
            let cfg = DatasetConfig {
                count,
                frame_size: (size, size),
                noise_sigma: noise,
                seed: config.seed,
                ..DatasetConfig::default()
            };
            let scenes = render_dataset(&cfg, exec).map_err(Error::from)?;
            let mut labels = Vec::with_capacity(scenes.len());
            let mut annotations = Vec::with_capacity(scenes.len());
            for (i, (spec, scene)) in scenes.iter().enumerate() {
                let name = frame_file_name(i);
                save_pgm(&out.join(&name), &scene.frame).map_err(Error::from)?;
                labels.push(SceneLabel {
                    frame: name.clone(),
                    orientation: spec.orientation,
                    posture: Some(spec.posture),
                });
                annotations.push(PoseRecord {
                    frame: name,
                    pose: scene.pose,
                });
            }
            write_text(&out.join("labels.json"), &pretty(&labels))?;
            save_pose_records(&out.join("annotations.json"), &annotations).map_err(Error::from)?;
            eprintln!("synth dataset: {count} scenes in {}", out.display());
        }
        SynthCommand::Sequence {
            episodes,
            hold,
            transition,
            fps,
        } => {
            let script = SequenceScript::relocations(episodes, hold, transition, fps, config.seed);
            let rendered = render_sequence(&script).map_err(Error::from)?;
            let mut manifest = save_sequence(out, &rendered.sequence)?;
            // ground truth in the head-up frame, keyed by each episode's first static frame
            let (w, h) = (rendered.sequence.frames()[0].width(), rendered.sequence.frames()[0].height());
            let gt: Vec<PoseRecord> = rendered
                .episodes
                .iter()
                .map(|e| PoseRecord {
                    frame: frame_file_name(e.first_static_frame),
                    pose: Pose::new(e.joints).rotated(e.orientation.rectification(), w, h),
                })
                .collect();
            save_pose_records(&out.join("rectified_gt.json"), &gt).map_err(Error::from)?;
            manifest.states = Some(rendered.states);
            manifest.trigger_frames = Some(rendered.trigger_frames);
            manifest.episodes = Some(rendered.episodes);
            write_manifest(out, &manifest)?;
            write_text(&out.join("script.json"), &pretty(&script))?;
            eprintln!("synth sequence: {} frames in {}", rendered.sequence.len(), out.display());
        }
    }
    Ok(Completion::Full)
}
