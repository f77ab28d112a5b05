use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use psgan_core::gan::{pretrain_discriminator, train as train_gan, GanModel, TrainConfig, TrainingLog};
use psgan_core::protogen::{synth_prototype, SyntheticScenario};
use psgan_core::signal::{frame_tensor, load_iq, normalize_frames, save_iq, sidecar_path, Component, FrameStats, IqFormat, IqRecording, PrototypeTensor};
use psgan_core::synthesis::{synthesize, FrameChoice, SynthesisConfig};
use psgan_core::validation::{final_quartile_accuracy, validate as validate_models, validate_streams, ValidationConfig, ValidationReport, ValidationTables};

use crate::manifest::RunManifest;
use crate::run::{RunInfo, I_LOG, I_MODEL, Q_LOG, Q_MODEL, RUN_FILE};
use crate::{GenerateArgs, Global, InspectArgs, Profile, ProtogenArgs, Sweep, TrainArgs, ValidateArgs};

fn out_path(g: &Global, p: &Path) -> PathBuf {
    match &g.out_dir {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

fn ensure_parent(p: &Path) -> Result<()> {
    if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn say(g: &Global, msg: impl AsRef<str>) {
    if !g.quiet {
        eprintln!("{}", msg.as_ref());
    }
}

pub fn protogen(g: &Global, a: &ProtogenArgs) -> Result<ExitCode> {
    let seed = g.seed.unwrap_or(0);
    let mut sc = SyntheticScenario::preset(&a.preset, seed)?;
    if let Some(n) = a.n_samples {
        sc.n_samples = n;
    }
    if let Some(s) = a.snr_db {
        sc.snr_db = s;
    }
    if let Some(d) = a.duty {
        sc.burst_duty_cycle = d;
    }
    let rec = synth_prototype(&sc)?;
    let out = out_path(g, &a.out);
    ensure_parent(&out)?;
    save_iq(&out, &rec)?;

    let mut m = RunManifest::start("protogen", seed);
    m.config = format!("preset = {}\n{}", a.preset, rec.meta.to_text().replace('=', " = "));
    m.output(&out);
    m.output(&sidecar_path(&out));
    m.write(&out.with_extension("manifest"))?;
    say(g, format!("wrote {} ({} samples, mean power {:.4})", out.display(), rec.len(), rec.mean_power()));
    Ok(ExitCode::SUCCESS)
}

fn resolve_train_config(g: &Global, a: &TrainArgs) -> Result<(TrainConfig, usize)> {
    let (mut cfg, mut n_fft) = match a.profile {
        Profile::Full => (TrainConfig::default(), 2048),
        Profile::Desk => (TrainConfig::desk(), 256),
    };
    if let Some(path) = &g.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg = cfg.apply_text(&text).with_context(|| format!("parsing {}", path.display()))?;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.nfft {
        n_fft = n;
    }
    if let Some(e) = a.epochs {
        cfg.n_epoch = e;
    }
    if let Some(r) = &a.snr_range {
        cfg = cfg.apply_text(&format!("snr_range_db = {r}"))?;
    }
    if let Some(n) = a.examples {
        cfg.n_examples = n;
    }
    if let Some(b) = a.batch {
        cfg.s_batch = b;
    }
    if a.timing {
        cfg.record_timing = true;
    }
    cfg.validate(n_fft)?;
    Ok((cfg, n_fft))
}

struct Trained {
    models: [GanModel; 2],
    logs: [TrainingLog; 2],
}

/// Pretrains and trains both components. With zero epochs nothing is
/// trained, pretraining included, so the models stay at initialization.
fn train_pair(g: &Global, tensor: &PrototypeTensor, stats: &FrameStats, frame: usize, cfg: &TrainConfig) -> Result<Trained> {
    let n_fft = tensor.packet_len();
    let mut out = Vec::new();
    for comp in Component::BOTH {
        let mut model = GanModel::new(n_fft, comp, cfg)?;
        let log = if cfg.n_epoch == 0 {
            TrainingLog::default()
        } else {
            pretrain_discriminator(&mut model, &tensor.component_matrix(frame, comp)?, cfg)?;
            let (m, log) = train_gan(model, tensor, stats, frame, cfg)?;
            model = m;
            log
        };
        say(
            g,
            format!(
                "{} model: {} epochs, mean accuracy over the last 100 {:.4}",
                comp.name(),
                log.len(),
                log.mean_accuracy_last(100).unwrap_or(f64::NAN)
            ),
        );
        out.push((model, log));
    }
    let (q, i) = (out.pop().unwrap(), out.pop().unwrap());
    Ok(Trained { models: [i.0, q.0], logs: [i.1, q.1] })
}

fn save_run(dir: &Path, t: &Trained, info: &RunInfo, m: &mut RunManifest) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (model, log, mname, lname) in [(&t.models[0], &t.logs[0], I_MODEL, I_LOG), (&t.models[1], &t.logs[1], Q_MODEL, Q_LOG)] {
        let mp = dir.join(mname);
        model.save(&mp)?;
        let lp = dir.join(lname);
        write(&lp, &log.to_csv())?;
        m.output(&mp);
        m.output(&lp);
    }
    let rp = dir.join(RUN_FILE);
    write(&rp, &info.to_text())?;
    m.output(&rp);
    Ok(())
}

fn load_prototype(path: &Path, n_fft: usize, n_frames: usize) -> Result<(IqRecording, PrototypeTensor, PrototypeTensor, FrameStats)> {
    let rec = load_iq(path, IqFormat::Cf32Le).with_context(|| format!("loading prototype {}", path.display()))?;
    let raw = frame_tensor(&rec, n_fft, n_frames)?;
    let (norm, stats) = normalize_frames(&raw)?;
    Ok((rec, raw, norm, stats))
}

pub fn train(g: &Global, a: &TrainArgs) -> Result<ExitCode> {
    let (cfg, n_fft) = resolve_train_config(g, a)?;
    let (rec, _, tensor, stats) = load_prototype(&a.prototype, n_fft, a.frames)?;
    tensor.check_frame(a.frame)?;
    let dir = g.out_dir.clone().unwrap_or_else(|| PathBuf::from("run"));
    let info = RunInfo {
        n_fft,
        n_frames: a.frames,
        n_packets: tensor.n_packets(),
        train_frame: a.frame,
        frame_powers: stats.per_frame_power.clone(),
        snr_range_db: cfg.snr_range_db,
        seed: cfg.seed,
        epochs: cfg.n_epoch,
        meta: rec.meta.clone(),
    };
    say(g, format!("{} packets of {} samples per frame, {} frames", tensor.n_packets(), n_fft, a.frames));

    if a.sweep == Some(Sweep::Regularization) {
        return sweep(g, &dir, &tensor, &stats, &info, &cfg, &a.prototype);
    }

    let mut m = RunManifest::start("train", cfg.seed);
    m.config = format!("n_fft = {n_fft}\nn_frames = {}\ntrain_frame = {}\n{}", a.frames, a.frame, cfg.to_text());
    m.input(&a.prototype);
    let trained = train_pair(g, &tensor, &stats, a.frame, &cfg)?;
    save_run(&dir, &trained, &info, &mut m)?;
    m.write(&dir.join("train.manifest"))?;
    say(g, format!("wrote {}", dir.display()));
    Ok(ExitCode::SUCCESS)
}

/// Settings of the regularization comparison, each with one technique on.
fn sweep_configs(base: &TrainConfig) -> Vec<(&'static str, TrainConfig)> {
    let mut bare = base.clone();
    bare.arch.d_dropout = 0.0;
    bare.arch.d_weight_decay = 0.0;
    bare.arch.g_weight_decay = 0.0;
    bare.label_smoothing_alpha = 0.0;
    let pick = |v: f64, fallback: f64| if v > 0.0 { v } else { fallback };
    let mut dropout = bare.clone();
    dropout.arch.d_dropout = pick(base.arch.d_dropout, 0.5);
    let mut decay = bare.clone();
    decay.arch.d_weight_decay = pick(base.arch.d_weight_decay, 1e-4);
    decay.arch.g_weight_decay = pick(base.arch.g_weight_decay, 1e-3);
    let mut smoothing = bare.clone();
    smoothing.label_smoothing_alpha = pick(base.label_smoothing_alpha, 0.2);
    vec![("none", bare), ("dropout", dropout), ("weight-decay", decay), ("label-smoothing", smoothing)]
}

fn mean_accuracy(log: &TrainingLog) -> f64 {
    log.mean_accuracy_last(log.len()).unwrap_or(f64::NAN)
}

fn sweep(
    g: &Global,
    dir: &Path,
    tensor: &PrototypeTensor,
    stats: &FrameStats,
    info: &RunInfo,
    base: &TrainConfig,
    prototype: &Path,
) -> Result<ExitCode> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut m = RunManifest::start("train --sweep regularization", base.seed);
    m.config = base.to_text();
    m.input(prototype);
    let mut csv = String::from(
        "config,d_dropout,g_weight_decay,d_weight_decay,label_smoothing_alpha,mean_accuracy,mean_accuracy_i,mean_accuracy_q,final_quartile_accuracy,runtime_s\n",
    );
    for (name, cfg) in sweep_configs(base) {
        say(g, format!("sweep: {name}"));
        let started = Instant::now();
        let trained = train_pair(g, tensor, stats, info.train_frame, &cfg)?;
        let runtime = started.elapsed().as_secs_f64();
        save_run(&dir.join(name), &trained, info, &mut m)?;
        let (ai, aq) = (mean_accuracy(&trained.logs[0]), mean_accuracy(&trained.logs[1]));
        let fq = final_quartile_accuracy(&[&trained.logs[0], &trained.logs[1]]).unwrap_or(f64::NAN);
        let _ = writeln!(
            csv,
            "{name},{},{},{},{},{},{ai},{aq},{fq},{runtime:.3}",
            cfg.arch.d_dropout,
            cfg.arch.g_weight_decay,
            cfg.arch.d_weight_decay,
            cfg.label_smoothing_alpha,
            (ai + aq) / 2.0
        );
    }
    let path = dir.join("sweep.csv");
    write(&path, &csv)?;
    m.output(&path);
    m.write(&dir.join("sweep.manifest"))?;
    say(g, format!("wrote {}", path.display()));
    Ok(ExitCode::SUCCESS)
}

fn load_models(dir: &Path, info: &RunInfo) -> Result<(GanModel, GanModel)> {
    let load = |name: &str, comp: Component| -> Result<GanModel> {
        let p = dir.join(name);
        let m = GanModel::load(&p).with_context(|| format!("loading {}", p.display()))?;
        if m.component != comp {
            bail!("{} holds the {} model", p.display(), m.component.name());
        }
        if m.n_fft() != info.n_fft {
            bail!("{} is {} wide but the run used n_fft = {}", p.display(), m.n_fft(), info.n_fft);
        }
        Ok(m)
    };
    Ok((load(I_MODEL, Component::I)?, load(Q_MODEL, Component::Q)?))
}

pub fn generate(g: &Global, a: &GenerateArgs) -> Result<ExitCode> {
    let info = RunInfo::load(&a.model_dir)?;
    let (i, q) = load_models(&a.model_dir, &info)?;
    let stats = info.stats()?;
    let seed = g.seed.unwrap_or(info.seed);
    let frame: FrameChoice = a.frame.parse()?;
    let cfg = SynthesisConfig {
        n_gen: a.ngen.unwrap_or(20 * info.n_packets),
        snr_db: a.snr_db.unwrap_or(0.5 * (info.snr_range_db.0 + info.snr_range_db.1)),
        rc_length: a.rc_length,
        rolloff: a.rolloff,
        seed,
        frame,
    };
    let mut meta = info.meta.clone();
    meta.extra.insert("source".into(), "generated".into());
    meta.extra.insert("generated.n_gen".into(), cfg.n_gen.to_string());
    meta.extra.insert("generated.n_fft".into(), info.n_fft.to_string());
    let rec = synthesize(&i.generator, &q.generator, &cfg, &stats, &meta)?;
    let out = out_path(g, &a.out);
    ensure_parent(&out)?;
    save_iq(&out, &rec)?;

    let mut m = RunManifest::start("generate", seed);
    m.config = format!(
        "n_gen = {}\nsnr_db = {:?}\nrc_length = {}\nrolloff = {:?}\nframe = {}\n",
        cfg.n_gen, cfg.snr_db, cfg.rc_length, cfg.rolloff, a.frame
    );
    m.input(&a.model_dir.join(I_MODEL));
    m.input(&a.model_dir.join(Q_MODEL));
    m.input(&a.model_dir.join(RUN_FILE));
    m.output(&out);
    m.output(&sidecar_path(&out));
    m.write(&out.with_extension("manifest"))?;
    say(g, format!("wrote {} ({} samples, {:.3} ms)", out.display(), rec.len(), rec.duration_s() * 1e3));
    Ok(ExitCode::SUCCESS)
}

fn read_log(path: &Path) -> Result<TrainingLog> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(TrainingLog::from_csv(&text)?)
}

fn write_tables(dir: &Path, tables: &ValidationTables, m: &mut RunManifest) -> Result<()> {
    for (name, text) in [
        ("spectrum.csv", tables.spectrum_csv()),
        ("pdf.csv", tables.pdf_csv()),
        ("spectral_proto.csv", tables.spectral_proto.to_csv()),
        ("spectral_gen.csv", tables.spectral_gen.to_csv()),
    ] {
        let p = dir.join(name);
        write(&p, &text)?;
        m.output(&p);
    }
    Ok(())
}

pub fn validate(g: &Global, a: &ValidateArgs) -> Result<ExitCode> {
    let info = RunInfo::load(&a.model_dir)?;
    let (i, q) = load_models(&a.model_dir, &info)?;
    let (_, raw, tensor, stats) = load_prototype(&a.prototype, info.n_fft, info.n_frames)?;
    let logs = [read_log(&a.model_dir.join(I_LOG))?, read_log(&a.model_dir.join(Q_LOG))?];
    let seed = g.seed.unwrap_or(info.seed);
    let cfg = ValidationConfig {
        frame: a.frame.unwrap_or(info.train_frame),
        n_gen: a.ngen.unwrap_or(0),
        snr_db: a.snr_db.unwrap_or(0.5 * (info.snr_range_db.0 + info.snr_range_db.1)),
        seed,
        ..ValidationConfig::default()
    };

    let mut m = RunManifest::start("validate", seed);
    m.config = format!("frame = {}\nn_gen = {}\nsnr_db = {:?}\nn_bins = {}\n", cfg.frame, cfg.n_gen, cfg.snr_db, cfg.n_bins);
    m.input(&a.prototype);
    m.input(&a.model_dir.join(I_MODEL));
    m.input(&a.model_dir.join(Q_MODEL));

    let (report, tables): (ValidationReport, ValidationTables) = match &a.generated {
        None => validate_models(&i.generator, &q.generator, &tensor, &stats, &[&logs[0], &logs[1]], &cfg)?,
        Some(path) => {
            m.input(path);
            let gen = load_iq(path, IqFormat::Cf32Le).with_context(|| format!("loading {}", path.display()))?;
            let mut packets: Vec<Vec<Complex64>> = gen.samples().chunks_exact(info.n_fft).map(<[_]>::to_vec).collect();
            if cfg.n_gen > 0 {
                packets.truncate(cfg.n_gen);
            }
            if packets.is_empty() {
                bail!("{} holds fewer than {} samples", path.display(), info.n_fft);
            }
            let proto = raw.frame_packets(cfg.frame)?;
            let acc = final_quartile_accuracy(&[&logs[0], &logs[1]])?;
            validate_streams(&proto, &packets, acc, &cfg)?
        }
    };

    let dir = g.out_dir.clone().unwrap_or_else(|| PathBuf::from("validation"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let rp = dir.join("report.txt");
    write(&rp, &report.to_text())?;
    m.output(&rp);
    write_tables(&dir, &tables, &mut m)?;
    m.write(&dir.join("validate.manifest"))?;
    if !g.quiet {
        print!("{}", report.to_text());
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

pub fn inspect(_g: &Global, a: &InspectArgs) -> Result<ExitCode> {
    let rec = load_iq(&a.path, IqFormat::Cf32Le).with_context(|| format!("loading {}", a.path.display()))?;
    let peak = rec.samples().iter().map(|s| s.norm_sqr()).fold(0.0, f64::max);
    let power = rec.mean_power();
    println!("path={}", a.path.display());
    println!("samples={}", rec.len());
    println!("sample_rate_hz={}", rec.sample_rate_hz());
    println!("center_freq_hz={}", rec.meta.center_freq_hz);
    println!("duration_s={}", rec.duration_s());
    println!("mean_power={power}");
    println!("peak_power={peak}");
    if power > 0.0 {
        println!("papr_db={:.3}", 10.0 * (peak / power).log10());
    }
    for (k, v) in &rec.meta.extra {
        println!("meta.{k}={v}");
    }
    if let Some(n_fft) = a.nfft {
        let t = frame_tensor(&rec, n_fft, a.frames)?;
        println!("n_fft={n_fft}");
        println!("n_frames={}", a.frames);
        println!("packets_per_frame={}", t.n_packets());
        for f in 0..a.frames {
            println!("frame_power.{f}={}", t.frame_power(f));
        }
    }
    Ok(ExitCode::SUCCESS)
}
