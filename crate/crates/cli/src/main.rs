//! `depthpose` command-line driver.
//!
//! Exit status: 0 on success, 1 for usage and input errors, 2 for internal
//! failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use depthpose::io::{parse_camera, read_json, read_scene, read_stack, write_json, write_scene, write_stack};
use depthpose::metrics::MetricAccumulator;
use depthpose::prelude::*;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(
    name = "depthpose",
    version,
    about = "Encode, decode and score multi-person 3D pose map stacks"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Worker threads for per-frame work (0 picks one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Skeleton definition JSON (defaults to the built-in 15-joint body).
    #[arg(long, global = true)]
    skeleton: Option<PathBuf>,
    /// Mean bone lengths JSON matching the skeleton.
    #[arg(long, global = true)]
    bone_stats: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic scene from a generator config.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Frame index within the seeded sequence.
        #[arg(long, default_value_t = 0)]
        frame: usize,
    },
    /// Render the map stack of a scene.
    Encode {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        paf_width: Option<f64>,
        #[arg(long)]
        root_disk: Option<f64>,
        #[arg(long)]
        map_stride: Option<f64>,
    },
    /// Recover absolute 3D poses from a map stack.
    Decode {
        #[arg(long)]
        stack: PathBuf,
        /// Camera JSON; a scene file works too. Defaults to the camera recorded next to the stack.
        #[arg(long)]
        camera: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value = "dapa")]
        assoc: AssocMethod,
        #[arg(long)]
        nms_radius: Option<f64>,
        #[arg(long)]
        detect_threshold: Option<f64>,
    },
    /// Score predicted people against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        pck_threshold: Option<f64>,
        #[arg(long)]
        pcod_tie: Option<f64>,
        #[arg(long)]
        gate_px: Option<f64>,
    },
    /// Synthesize, encode, decode and score in one run.
    Roundtrip {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Time keypoint extraction plus association on precomputed maps.
    Bench {
        #[arg(long, default_value_t = 20)]
        people: usize,
        #[arg(long, default_value_t = 21)]
        repeat: usize,
        #[arg(long, default_value_t = 9)]
        seed: u64,
        #[arg(long, default_value = "dapa")]
        assoc: AssocMethod,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Settings for `roundtrip`; every section falls back to its defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RoundtripConfig {
    synth: SynthConfig,
    encoder: EncoderConfig,
    assoc: AssocConfig,
    method: AssocMethod,
    eval: EvalConfig,
}

enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

type Outcome<T> = Result<T, Failure>;

trait Classify<T> {
    fn input(self, what: impl FnOnce() -> String) -> Outcome<T>;
    fn internal(self, what: impl FnOnce() -> String) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self, what: impl FnOnce() -> String) -> Outcome<T> {
        self.map_err(|e| Failure::Input(e.into().context(what())))
    }
    fn internal(self, what: impl FnOnce() -> String) -> Outcome<T> {
        self.map_err(|e| Failure::Internal(e.into().context(what())))
    }
}

struct Model {
    spec: SkeletonSpec,
    stats: BoneStats,
    source: Value,
}

impl Model {
    fn load(g: &Global) -> Outcome<Self> {
        let spec: SkeletonSpec = match &g.skeleton {
            Some(p) => read_json(p).input(|| format!("reading skeleton {}", p.display()))?,
            None => default_skeleton(),
        };
        let stats: BoneStats = match &g.bone_stats {
            Some(p) => read_json(p).input(|| format!("reading bone stats {}", p.display()))?,
            None => default_bone_stats(),
        };
        stats
            .validate(&spec)
            .input(|| "bone stats do not fit the skeleton".into())?;
        let source = json!({
            "skeleton": spec.name(),
            "skeleton_file": g.skeleton.as_ref().map(|p| p.display().to_string()),
            "bone_stats": stats.mean_length,
            "bone_stats_file": g.bone_stats.as_ref().map(|p| p.display().to_string()),
        });
        Ok(Self { spec, stats, source })
    }
}

fn provenance(command: &str, body: Value) -> Value {
    let mut p = json!({ "tool": "depthpose", "version": VERSION, "command": command });
    if let (Value::Object(p), Value::Object(b)) = (&mut p, body) {
        p.extend(b);
    }
    p
}

fn shown(p: &Path) -> String {
    p.display().to_string()
}

fn sidecar(stack: &Path) -> PathBuf {
    let mut s = stack.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn load_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Outcome<T> {
    match path {
        Some(p) => read_json(p).input(|| format!("reading config {}", p.display())),
        None => Ok(T::default()),
    }
}

fn synth(model: &Model, config: Option<&Path>, out: &Path, frame: usize) -> Outcome<()> {
    let cfg: SynthConfig = load_config(config)?;
    let scene = synth_frame(&cfg, &model.spec, &model.stats, frame).input(|| "generating scene".into())?;
    let prov = provenance("synth", json!({ "frame": frame, "config": cfg, "model": model.source }));
    write_scene(out, &scene, &model.spec, prov).input(|| format!("writing {}", out.display()))?;
    println!("wrote {} ({} people)", out.display(), scene.people.len());
    Ok(())
}

fn encode_cmd(model: &Model, scene_path: &Path, out: &Path, cfg: EncoderConfig) -> Outcome<()> {
    let (scene, scene_prov) =
        read_scene(scene_path, &model.spec).input(|| format!("reading scene {}", scene_path.display()))?;
    cfg.validate().input(|| "encoder settings".into())?;
    let stack = encode(&scene, &model.spec, &cfg).input(|| "encoding scene".into())?;
    write_stack(out, &stack).input(|| format!("writing {}", out.display()))?;
    let meta = json!({
        "format": "depthpose-stack-meta",
        "version": 1,
        "shape": stack.shape(),
        "joints": stack.joints(),
        "layout": "heatmaps by joint, PAF (x, y) pairs by part, root depth, relative depth by part",
        "camera": scene.cam,
        "provenance": provenance("encode", json!({
            "scene": shown(scene_path),
            "scene_provenance": scene_prov,
            "config": cfg,
            "model": model.source,
        })),
    });
    let meta_path = sidecar(out);
    write_json(&meta_path, &meta).input(|| format!("writing {}", meta_path.display()))?;
    let [c, h, w] = stack.shape();
    println!("wrote {} ({c} x {h} x {w}) and {}", out.display(), meta_path.display());
    Ok(())
}

fn decode_cmd(
    model: &Model,
    stack_path: &Path,
    camera: Option<&Path>,
    out: &Path,
    cfg: AssocConfig,
    method: AssocMethod,
) -> Outcome<()> {
    cfg.validate().input(|| "association settings".into())?;
    let stack = read_stack(stack_path).input(|| format!("reading stack {}", stack_path.display()))?;
    let meta_path = sidecar(stack_path);
    let meta: Option<Value> = if meta_path.exists() {
        Some(read_json(&meta_path).input(|| format!("reading {}", meta_path.display()))?)
    } else {
        None
    };
    let cam = match (camera, &meta) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).input(|| format!("reading camera {}", p.display()))?;
            parse_camera(&text).input(|| format!("reading camera {}", p.display()))?
        }
        (None, Some(m)) => serde_json::from_value(m["camera"].clone())
            .input(|| format!("camera recorded in {}", meta_path.display()))?,
        (None, None) => {
            return Err(Failure::Input(anyhow!(
                "no --camera given and no {} next to the stack",
                meta_path.display()
            )))
        }
    };
    if stack.joints() != model.spec.joint_count() {
        return Err(Failure::Input(anyhow!(
            "stack holds {} joints, skeleton `{}` has {}",
            stack.joints(),
            model.spec.name(),
            model.spec.joint_count()
        )));
    }
    let people = Decoder::new(&model.spec, &model.stats, cfg)
        .with_method(method)
        .decode(&stack, &cam)
        .input(|| "decoding stack".into())?;
    let prov = provenance(
        "decode",
        json!({
            "stack": shown(stack_path),
            "stack_provenance": meta.map(|m| m["provenance"].clone()),
            "camera_file": camera.map(shown),
            "method": method,
            "config": cfg,
            "model": model.source,
        }),
    );
    let scene = Scene::new(cam, people);
    write_scene(out, &scene, &model.spec, prov).input(|| format!("writing {}", out.display()))?;
    println!("wrote {} ({} people)", out.display(), scene.people.len());
    Ok(())
}

fn report_doc(report: &MetricReport, prov: Value) -> Value {
    json!({ "format": "depthpose-report", "version": 1, "report": report, "provenance": prov })
}

fn eval_cmd(model: &Model, pred: &Path, gt: &Path, out: &Path, cfg: EvalConfig) -> Outcome<()> {
    let (p, _) = read_scene(pred, &model.spec).input(|| format!("reading prediction {}", pred.display()))?;
    let (g, _) = read_scene(gt, &model.spec).input(|| format!("reading ground truth {}", gt.display()))?;
    let frame = Frame {
        pred: &p.people,
        gt: &g.people,
        cam: g.cam,
    };
    let report = evaluate(&[frame], model.spec.root(), &cfg).input(|| "evaluation settings".into())?;
    let prov = provenance(
        "eval",
        json!({ "pred": shown(pred), "gt": shown(gt), "model": model.source }),
    );
    write_json(out, &report_doc(&report, prov)).input(|| format!("writing {}", out.display()))?;
    print!("{report}");
    Ok(())
}

fn roundtrip(model: &Model, config: Option<&Path>, out: &Path, pool: &rayon::ThreadPool) -> Outcome<()> {
    let cfg: RoundtripConfig = load_config(config)?;
    cfg.synth.validate().input(|| "synth settings".into())?;
    cfg.encoder.validate().input(|| "encoder settings".into())?;
    cfg.assoc.validate().input(|| "association settings".into())?;
    cfg.eval.validate().input(|| "evaluation settings".into())?;
    let (spec, stats) = (&model.spec, &model.stats);
    let decoder = Decoder::new(spec, stats, cfg.assoc).with_method(cfg.method);
    let per_frame = pool.install(|| {
        (0..cfg.synth.frames)
            .into_par_iter()
            .map(|i| -> Outcome<MetricAccumulator> {
                let scene = synth_frame(&cfg.synth, spec, stats, i).input(|| format!("generating frame {i}"))?;
                let stack = encode(&scene, spec, &cfg.encoder).internal(|| format!("encoding frame {i}"))?;
                let pred = decoder
                    .decode(&stack, &scene.cam)
                    .internal(|| format!("decoding frame {i}"))?;
                let frame = Frame {
                    pred: &pred,
                    gt: &scene.people,
                    cam: scene.cam,
                };
                Ok(MetricAccumulator::frame(&frame, spec.root(), &cfg.eval))
            })
            .collect::<Outcome<Vec<_>>>()
    })?;
    let report = per_frame
        .iter()
        .fold(MetricAccumulator::default(), |a, b| a.merge(b))
        .finish(&cfg.eval);
    let prov = provenance("roundtrip", json!({ "config": cfg, "model": model.source }));
    write_json(out, &report_doc(&report, prov)).input(|| format!("writing {}", out.display()))?;
    print!("{report}");
    Ok(())
}

fn bench(
    model: &Model,
    people: usize,
    repeat: usize,
    seed: u64,
    method: AssocMethod,
    out: Option<&Path>,
) -> Outcome<()> {
    if repeat == 0 {
        return Err(Failure::Input(anyhow!("--repeat must be at least 1")));
    }
    let synth = SynthConfig {
        people: (people, people),
        depth_mm: (4000.0, 14000.0),
        margin_px: 4.0,
        seed,
        ..Default::default()
    };
    let (spec, stats) = (&model.spec, &model.stats);
    let scene = synth_scene(&synth, spec, stats).input(|| format!("placing {people} people"))?;
    let stack = encode(&scene, spec, &EncoderConfig::default()).internal(|| "encoding bench scene".into())?;
    let cfg = AssocConfig::default();
    let mut times = Vec::with_capacity(repeat);
    let mut grouped = 0;
    for _ in 0..repeat {
        let t = Instant::now();
        let cands = extract_keypoints(stack.heatmaps(), &cfg);
        let hyps = match method {
            AssocMethod::Dapa => depth_aware_associate(&cands, &stack, spec, stats, &cfg),
            AssocMethod::TwoD => associate_2d(&cands, &stack, spec, &cfg),
        }
        .internal(|| "associating".into())?;
        times.push(t.elapsed().as_secs_f64() * 1e3);
        grouped = hyps.len();
    }
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    println!(
        "{people} people, {grouped} grouped, {repeat} runs: median {median:.3} ms, min {:.3} ms, mean {mean:.3} ms",
        sorted[0]
    );
    if let Some(out) = out {
        let doc = json!({
            "format": "depthpose-bench",
            "version": 1,
            "people": people,
            "grouped": grouped,
            "times_ms": times,
            "median_ms": median,
            "mean_ms": mean,
            "provenance": provenance("bench", json!({
                "repeat": repeat, "method": method, "synth": synth, "assoc": cfg, "model": model.source,
            })),
        });
        write_json(out, &doc).input(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome<()> {
    let model = Model::load(&cli.global)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.jobs)
        .build()
        .internal(|| "starting worker pool".into())?;
    match cli.command {
        Command::Synth { config, out, frame } => synth(&model, config.as_deref(), &out, frame),
        Command::Encode {
            scene,
            out,
            sigma,
            paf_width,
            root_disk,
            map_stride,
        } => {
            let d = EncoderConfig::default();
            let cfg = EncoderConfig {
                sigma: sigma.unwrap_or(d.sigma),
                paf_width: paf_width.unwrap_or(d.paf_width),
                root_disk_radius: root_disk.unwrap_or(d.root_disk_radius),
                map_stride: map_stride.unwrap_or(d.map_stride),
            };
            encode_cmd(&model, &scene, &out, cfg)
        }
        Command::Decode {
            stack,
            camera,
            out,
            lambda,
            assoc,
            nms_radius,
            detect_threshold,
        } => {
            let d = AssocConfig::default();
            let cfg = AssocConfig {
                lambda: lambda.unwrap_or(d.lambda),
                nms_radius: nms_radius.unwrap_or(d.nms_radius),
                detect_threshold: detect_threshold.unwrap_or(d.detect_threshold),
                ..d
            };
            decode_cmd(&model, &stack, camera.as_deref(), &out, cfg, assoc)
        }
        Command::Eval {
            pred,
            gt,
            out,
            pck_threshold,
            pcod_tie,
            gate_px,
        } => {
            let d = EvalConfig::default();
            let cfg = EvalConfig {
                pck_threshold: pck_threshold.unwrap_or(d.pck_threshold),
                pcod_tie: pcod_tie.unwrap_or(d.pcod_tie),
                gate_px: gate_px.unwrap_or(d.gate_px),
                ..d
            };
            eval_cmd(&model, &pred, &gt, &out, cfg)
        }
        Command::Roundtrip { config, report } => roundtrip(&model, config.as_deref(), &report, &pool),
        Command::Bench {
            people,
            repeat,
            seed,
            assoc,
            out,
        } => bench(&model, people, repeat, seed, assoc, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Input(e))) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Internal(e))) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(2),
    }
}
