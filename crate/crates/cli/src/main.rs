use clap::{Args, Parser, Subcommand};
use evtrack::bench::run_benchmark;
use evtrack::io;
use evtrack::pgm::GrayImage;
use evtrack::projection::{ProjectionHistogram, Region};
use evtrack::synth::{self, SceneScript, TruthTracks};
use evtrack::tracker::{Telemetry, TELEMETRY_HEADER};
use evtrack::{Config, EventStream, SensorGeometry, TrackerBank, Velocity};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "evtrack", version, about = "Event-based feature tracking harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic stream and its ground truth.
    Synth(Common),
    /// Run a tracker bank over a stream and write per-correction telemetry.
    Track(Common),
    /// Project a stream along one velocity and write the pdf and contour.
    Reconstruct(Common),
    /// Track against ground truth and write an accuracy report.
    Bench(Common),
    /// Write fixed-duration accumulation frames with tracker boxes.
    Render(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Event stream (.csv or binary) or scene script (.txt/.scene).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file, prefix or directory depending on the subcommand.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Tracker configuration, key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sensor size as WxH.
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Built-in scene (only `fig4`).
    #[arg(long)]
    builtin: Option<String>,
    /// Frame duration for `render`.
    #[arg(long, default_value_t = 5.0)]
    window_ms: f64,
    /// Contour threshold on the normalized pdf.
    #[arg(long)]
    pi: Option<f64>,
    /// Grid cells per pixel and axis.
    #[arg(long)]
    subpixel: Option<u32>,
    /// Projection velocity `vx,vy` for `reconstruct`, px/s.
    #[arg(long, allow_hyphen_values = true)]
    velocity: Option<String>,
    /// Reference time of the projection plane for `reconstruct`.
    #[arg(long)]
    t_ref_us: Option<u64>,
    /// Window centers `x,y` per line, when the input has no ground truth.
    #[arg(long)]
    positions: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<evtrack::Error> for Failure {
    fn from(e: evtrack::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Synth(c) => synth_cmd(c),
        Command::Track(c) => track_cmd(c),
        Command::Reconstruct(c) => reconstruct_cmd(c),
        Command::Bench(c) => bench_cmd(c),
        Command::Render(c) => render_cmd(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

struct Scene {
    stream: EventStream,
    truth: Option<TruthTracks>,
}

fn is_script(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("txt") | Some("scene")
    )
}

/// `out.bin` -> `out.truth.csv`.
fn truth_path(stream: &Path) -> PathBuf {
    stream.with_extension("truth.csv")
}

fn geometry(c: &Common) -> Outcome<Option<SensorGeometry>> {
    c.geometry
        .as_deref()
        .map(|g| SensorGeometry::parse(g).map_err(|e| Failure::Usage(e.to_string())))
        .transpose()
}

fn script(c: &Common) -> Outcome<Option<SceneScript>> {
    let mut s = match (&c.builtin, &c.input) {
        (Some(_), Some(_)) => return Err(Failure::Usage("--builtin and --input are exclusive".into())),
        (Some(b), None) if b == "fig4" => synth::fig4_script(),
        (Some(b), None) => return Err(Failure::Usage(format!("unknown builtin '{b}'"))),
        (None, Some(p)) if is_script(p) => SceneScript::load(p)?,
        _ => return Ok(None),
    };
    if let Some(g) = geometry(c)? {
        s.geometry = g;
    }
    Ok(Some(s))
}

fn seed(c: &Common) -> u64 {
    c.seed.unwrap_or(if c.builtin.is_some() { synth::fig4::SEED } else { 0 })
}

fn load_scene(c: &Common) -> Outcome<Scene> {
    if let Some(s) = script(c)? {
        let (stream, truth) = synth::generate(&s, seed(c))?;
        return Ok(Scene {
            stream,
            truth: Some(truth.tracks(0)),
        });
    }
    let Some(path) = &c.input else {
        return Err(Failure::Usage("--input or --builtin is required".into()));
    };
    let mut stream = io::read_auto(path)?;
    if let Some(g) = geometry(c)? {
        stream = EventStream::new(g, stream.into_events())?;
    }
    let tp = truth_path(path);
    let truth = if tp.exists() {
        Some(TruthTracks::parse_csv(&fs::read_to_string(&tp)?)?)
    } else {
        None
    };
    Ok(Scene { stream, truth })
}

fn load_config(c: &Common) -> Outcome<Config> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    if let Some(pi) = c.pi {
        cfg.pi = pi;
    }
    if let Some(s) = c.subpixel {
        cfg.subpixel = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_pair(s: &str, what: &str) -> Outcome<Velocity> {
    let bad = || Failure::Usage(format!("{what}: expected 'x,y', got '{s}'"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let x: f64 = a.trim().parse().map_err(|_| bad())?;
    let y: f64 = b.trim().parse().map_err(|_| bad())?;
    Ok(Velocity::new(x, y))
}

/// Window centers and the time they refer to.
fn seed_positions(c: &Common, scene: &Scene) -> Outcome<(Vec<Velocity>, Option<u64>)> {
    if let Some(p) = &c.positions {
        let pts = synth::read_points_csv(&fs::read_to_string(p)?)?;
        return Ok((pts, None));
    }
    if let Some(truth) = &scene.truth {
        let start = (0..truth.feature_count()).filter_map(|f| truth.span(f).map(|s| s.0)).min();
        if let Some(t0) = start {
            let pts = (0..truth.feature_count())
                .filter_map(|f| truth.position(f, t0))
                .collect();
            return Ok((pts, Some(t0)));
        }
    }
    Err(Failure::Usage(
        "no window positions: pass --positions or an input with ground truth".into(),
    ))
}

fn create(path: &Path) -> Outcome<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn require_output(c: &Common) -> Outcome<&Path> {
    c.output
        .as_deref()
        .ok_or_else(|| Failure::Usage("--output is required".into()))
}

fn synth_cmd(c: &Common) -> Outcome {
    let Some(s) = script(c)? else {
        return Err(Failure::Usage("synth needs --builtin fig4 or a scene script as --input".into()));
    };
    let out = require_output(c)?;
    let (stream, truth) = synth::generate(&s, seed(c))?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    io::write_auto(&stream, out)?;
    let mut w = create(&truth_path(out))?;
    truth.tracks(0).write_csv(&mut w)?;
    w.flush()?;
    println!("{} events, {} features -> {}", stream.len(), truth.feature_count(), out.display());
    Ok(())
}

fn track_cmd(c: &Common) -> Outcome {
    let scene = load_scene(c)?;
    let cfg = load_config(c)?;
    let (positions, start) = seed_positions(c, &scene)?;
    let mut bank = TrackerBank::with_grid(&positions, cfg)?;
    if let Some(t0) = start {
        bank.start_at(t0);
    }
    let mut w: Box<dyn Write> = match &c.output {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    for tr in bank.trackers() {
        let v = tr.seed_velocity();
        writeln!(w, "# tracker {} feature {} seed {} {}", tr.id(), tr.feature(), v.x, v.y)?;
    }
    writeln!(w, "{TELEMETRY_HEADER}")?;
    let mut failed = None;
    let mut sink = |t: &Telemetry<f64>| {
        if failed.is_none() {
            if let Err(e) = writeln!(w, "{}", t.csv_row()) {
                failed = Some(e);
            }
        }
    };
    bank.process_all(scene.stream.events(), &mut sink)?;
    if let Some(e) = failed {
        return Err(e.into());
    }
    w.flush()?;
    for f in 0..bank.feature_count() {
        match bank.best_for_feature(f) {
            Some(tr) => {
                let v = tr.velocity();
                eprintln!("feature {f}: tracker {} v=({:.2}, {:.2}) status={}", tr.id(), v.x, v.y, tr.status());
            }
            None => eprintln!("feature {f}: no tracker with a reference"),
        }
    }
    Ok(())
}

fn reconstruct_cmd(c: &Common) -> Outcome {
    let scene = load_scene(c)?;
    let cfg = load_config(c)?;
    let out = require_output(c)?;
    let truth_start = scene
        .truth
        .as_ref()
        .and_then(|t| (0..t.feature_count()).filter_map(|f| t.span(f).map(|s| s.0)).min());
    let v = match &c.velocity {
        Some(s) => parse_pair(s, "--velocity")?,
        None => scene
            .truth
            .as_ref()
            .zip(truth_start)
            .and_then(|(t, t0)| t.velocity(0, t0))
            .ok_or_else(|| Failure::Usage("--velocity is required without ground truth".into()))?,
    };
    let t_ref = c
        .t_ref_us
        .or(truth_start)
        .or_else(|| scene.stream.span().map(|s| s.0))
        .unwrap_or(0);
    let t_end = scene.stream.span().map_or(t_ref, |s| s.1);
    let g = scene.stream.geometry();
    let region = Region::full_frame(g.width as usize, g.height as usize, cfg.subpixel);
    let mut hist = ProjectionHistogram::new(region, v, t_ref);
    hist.accumulate(scene.stream.events(), t_end);
    let contour = hist.contour(cfg.pi)?;
    let pdf = hist.to_pdf()?;

    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let prefix = out.to_string_lossy().into_owned();
    pdf.to_image().save(format!("{prefix}.pdf.pgm"))?;
    contour.to_image().save(format!("{prefix}.contour.pgm"))?;
    let mut w = create(Path::new(&format!("{prefix}.pdf.csv")))?;
    pdf.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(Path::new(&format!("{prefix}.contour.csv")))?;
    contour.write_csv(&mut w)?;
    w.flush()?;
    println!(
        "{} events projected ({} outside), {} contour cells",
        hist.accepted(),
        hist.rejected(),
        contour.len()
    );
    Ok(())
}

fn bench_cmd(c: &Common) -> Outcome {
    let scene = load_scene(c)?;
    let cfg = load_config(c)?;
    let Some(truth) = &scene.truth else {
        return Err(Failure::Usage("bench needs ground truth (scene script, builtin or sidecar)".into()));
    };
    let report = run_benchmark(scene.stream.events(), truth, cfg)?;
    match &c.output {
        Some(p) => {
            let mut w = create(p)?;
            report.write_csv(&mut w)?;
            w.flush()?;
        }
        None => print!("{}", report.to_csv()),
    }
    eprintln!("{}", report.summary());
    Ok(())
}

fn render_cmd(c: &Common) -> Outcome {
    let scene = load_scene(c)?;
    let out = require_output(c)?;
    if !(c.window_ms > 0.0 && c.window_ms.is_finite()) {
        return Err(Failure::Usage("--window-ms must be positive".into()));
    }
    fs::create_dir_all(out)?;
    let events = scene.stream.events();
    let Some((first, last)) = scene.stream.span() else {
        println!("0 frames");
        return Ok(());
    };
    let cfg = load_config(c)?;
    let mut bank = match seed_positions(c, &scene) {
        Ok((positions, start)) => {
            let mut b = TrackerBank::with_grid(&positions, cfg)?;
            if let Some(t0) = start {
                b.start_at(t0);
            }
            Some(b)
        }
        Err(_) => None,
    };
    let g = scene.stream.geometry();
    let window_us = ((c.window_ms * 1000.0).round() as u64).max(1);
    let frames = (last - first) / window_us + 1;
    let mut counts = vec![0f64; g.width as usize * g.height as usize];
    let mut i = 0;
    for k in 0..frames {
        let end = first + (k + 1) * window_us;
        counts.iter_mut().for_each(|c| *c = 0.0);
        let from = i;
        while i < events.len() && events[i].t < end {
            let e = &events[i];
            counts[e.y as usize * g.width as usize + e.x as usize] += 1.0;
            i += 1;
        }
        let mut img = GrayImage::from_max_normalized(g.width as usize, g.height as usize, &counts);
        if let Some(b) = bank.as_mut() {
            b.process_all(&events[from..i], &mut |_: &Telemetry<f64>| {})?;
            let half = (b.config().window / 2) as i64;
            for f in 0..b.feature_count() {
                if let Some(tr) = b.best_for_feature(f) {
                    let p = tr.position_at(end);
                    img.draw_box(p.x.round() as i64, p.y.round() as i64, half, 128);
                }
            }
        }
        img.save(out.join(format!("frame_{k:05}.pgm")))?;
    }
    println!("{frames} frames");
    Ok(())
}
