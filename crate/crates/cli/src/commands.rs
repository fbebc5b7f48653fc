//! Subcommand bodies. Each writes its deterministic report to `out` and
//! progress/timing (which varies run to run) to `log`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use hopgr::archive::{read_archive, to_csv, write_archive};
use hopgr::eval::{det_csv, ImpostorSampling};
use hopgr::ingest::save_pgm;
use hopgr::prior::accumulate_into;
use hopgr::synth::{generate_dataset, DatasetPlan};
use hopgr::{
    compute_eer, index_dataset, load_image, load_prior, make_scores, save_prior, select_directions,
    EvalReport, FilterBank, GrayImage, HcrHistogram, HopgrExtractor, LabeledDescriptor,
    PriorDirections, SynthSpec,
};

use crate::config::{angle_label, degrees, Mode, RunConfig, SynthGeometry};
use crate::error::CliError;

/// Images decoded at once while learning the prior.
const LOAD_CHUNK: usize = 64;

type CmdResult = Result<(), CliError>;

fn required<'a>(value: &'a Option<PathBuf>, key: &'static str) -> Result<&'a Path, CliError> {
    value.as_deref().ok_or(CliError::Missing(key))
}

fn create_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

pub fn learn_prior(cfg: &RunConfig, out: &mut dyn Write, log: &mut dyn Write) -> CmdResult {
    let root = cfg.resolve(required(&cfg.train_dir, "train_dir")?);
    let index = index_dataset(&root, cfg.layout)?;
    let bank = FilterBank::uniform(cfg.orientations, cfg.bank)?;
    let roi = cfg.roi_handling();

    let mut hcr = HcrHistogram::empty(&bank);
    let total = index.entries.len();
    for (i, chunk) in index.entries.chunks(LOAD_CHUNK).enumerate() {
        let images = chunk
            .par_iter()
            .map(|e| load_image(&index.full_path(e), roi))
            .collect::<hopgr::Result<Vec<GrayImage>>>()?;
        accumulate_into(&mut hcr, &images, &bank)?;
        writeln!(
            log,
            "accumulated {}/{total}",
            (i * LOAD_CHUNK + chunk.len())
        )?;
    }

    let dataset_id = cfg.dataset_id.clone().unwrap_or_else(|| {
        root.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });
    let prior = select_directions(&hcr, cfg.selected)?.with_dataset_id(dataset_id)?;
    let path = cfg.resolve(&cfg.prior);
    create_parent(&path)?;
    save_prior(&prior, &path)?;

    out.write_all(hcr_table(&prior).as_bytes())?;
    writeln!(out, "prior={} id={}", path.display(), hex(&prior.id()))?;
    Ok(())
}

/// Per-direction HCR values, most negative first, with the kept set marked.
pub fn hcr_table(prior: &PriorDirections) -> String {
    let hcr = &prior.hcr;
    let o = hcr.orientation_count();
    let mut order: Vec<usize> = (0..o).collect();
    order.sort_by(|&a, &b| hcr.sums[a].total_cmp(&hcr.sums[b]).then(a.cmp(&b)));

    let mut s = String::new();
    let _ = writeln!(
        s,
        "HCR over {} images ({} pixels), O={o}, kept {}",
        hcr.image_count,
        hcr.pixel_count,
        prior.selected_count()
    );
    let _ = writeln!(s, "rank  bin  theta      deg        HCR");
    for (rank, &k) in order.iter().enumerate() {
        let kept = if prior.selected_bins().contains(&k) {
            "*"
        } else {
            ""
        };
        let _ = writeln!(
            s,
            "{:>4}  {:>3}  {:<9}  {:>7.3}  {:>14.6e} {kept}",
            rank + 1,
            k,
            angle_label(k, o),
            degrees(hcr.bin_thetas[k]),
            hcr.sums[k]
        );
    }
    let kept: Vec<String> = prior
        .selected_bins()
        .iter()
        .map(|&k| angle_label(k, o))
        .collect();
    let _ = writeln!(s, "selected: {}", kept.join(", "));
    s
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn extraction_prior(cfg: &RunConfig) -> Result<PriorDirections, CliError> {
    match cfg.mode {
        Mode::Uniform => Ok(PriorDirections::uniform(cfg.orientations, cfg.bank)?),
        Mode::Physio => {
            let prior = load_prior(&cfg.resolve(&cfg.prior))?;
            if prior.bank() != cfg.bank {
                let b = prior.bank();
                return Err(hopgr::Error::PriorMismatch(format!(
                    "prior learned with f0={:?} sigma={:?} half_size={}, config has f0={:?} sigma={:?} half_size={}",
                    b.f0, b.sigma, b.half_size, cfg.bank.f0, cfg.bank.sigma, cfg.bank.half_size
                ))
                .into());
            }
            Ok(prior)
        }
    }
}

pub fn extract(cfg: &RunConfig, out: &mut dyn Write, log: &mut dyn Write) -> CmdResult {
    let root = cfg.resolve(required(&cfg.dataset_dir, "dataset_dir")?);
    let index = index_dataset(&root, cfg.layout)?;
    let prior = extraction_prior(cfg)?;
    let extractor = HopgrExtractor::new(&prior, cfg.grid, cfg.bank)?;
    let roi = cfg.roi_handling();

    let results = index
        .entries
        .par_iter()
        .map(|e| {
            let image = load_image(&index.full_path(e), roi)?;
            let start = Instant::now();
            let descriptor = extractor.extract(&image)?;
            let labeled = LabeledDescriptor {
                class_id: e.class_id.clone(),
                sample_id: e.sample_id.clone(),
                descriptor,
            };
            Ok((labeled, start.elapsed()))
        })
        .collect::<hopgr::Result<Vec<_>>>()?;

    let mut total = 0.0;
    for ((_, t), e) in results.iter().zip(&index.entries) {
        let ms = t.as_secs_f64() * 1e3;
        total += ms;
        writeln!(log, "{} {:.3} ms", e.path.display(), ms)?;
    }
    if !results.is_empty() {
        writeln!(log, "mean {:.3} ms/image", total / results.len() as f64)?;
    }
    let entries: Vec<LabeledDescriptor> = results.into_iter().map(|(d, _)| d).collect();

    let archive = cfg.resolve(&cfg.archive);
    create_parent(&archive)?;
    write_archive(&archive, &entries)?;
    if let Some(csv) = &cfg.csv {
        let csv = cfg.resolve(csv);
        create_parent(&csv)?;
        std::fs::write(&csv, to_csv(&entries))?;
    }

    let layout = entries[0].descriptor.layout;
    writeln!(
        out,
        "extracted {} descriptors ({} classes), mode={} bins={} length={} prior={}",
        entries.len(),
        index.class_count(),
        cfg.mode,
        extractor.bins(),
        layout.len(),
        hex(&extractor.prior_id())
    )?;
    writeln!(out, "archive={}", archive.display())?;
    Ok(())
}

fn evaluate_archive(cfg: &RunConfig, path: &Path) -> Result<EvalReport, CliError> {
    let entries = read_archive(path)?;
    let sampling = ImpostorSampling {
        cap: cfg.impostor_cap,
        seed: cfg.seed,
    };
    let scores = make_scores(&entries, cfg.metric, sampling)?;
    Ok(compute_eer(&scores)?)
}

pub fn evaluate(cfg: &RunConfig, out: &mut dyn Write, _log: &mut dyn Write) -> CmdResult {
    let archive = cfg.resolve(&cfg.archive);
    let report = evaluate_archive(cfg, &archive)?;

    let det = cfg.resolve(&cfg.det);
    create_parent(&det)?;
    std::fs::write(&det, det_csv(&report))?;

    let mut record = format!(
        "eer={:?} threshold={:?} genuine={} impostor={} metric={} estimator=interpolated",
        report.eer, report.threshold_at_eer, report.n_genuine, report.n_impostor, cfg.metric
    );
    writeln!(out, "{}", report.summary())?;

    if let Some(base) = &cfg.baseline_archive {
        let baseline = evaluate_archive(cfg, &cfg.resolve(base))?;
        writeln!(out, "baseline {}", baseline.summary())?;
        writeln!(out, "delta EER={:+.4} points", report.eer - baseline.eer)?;
        let _ = write!(record, " baseline_eer={:?}", baseline.eer);
    }

    let report_path = cfg.resolve(&cfg.report);
    create_parent(&report_path)?;
    std::fs::write(&report_path, record + "\n")?;
    writeln!(
        out,
        "det={} report={}",
        det.display(),
        report_path.display()
    )?;
    Ok(())
}

pub fn synth(cfg: &RunConfig, out: &mut dyn Write, _log: &mut dyn Write) -> CmdResult {
    let s = &cfg.synth;
    let base = SynthSpec {
        width: s.width,
        height: s.height,
        line_count: s.lines,
        line_width: s.line_width,
        contrast: s.contrast,
        background: s.background,
        noise_sigma: s.noise,
        seed: cfg.seed,
        ..SynthSpec::default()
    };
    let plan = DatasetPlan {
        base,
        class_orientations: (0..s.classes).map(|c| cfg.synth_angles(c)).collect(),
        samples_per_class: s.samples,
        persistent_geometry: s.geometry == SynthGeometry::Persistent,
        jitter: s.jitter,
    };
    let samples = generate_dataset(&plan)?;

    let root = cfg.resolve(&s.out);
    std::fs::create_dir_all(&root)?;
    let mut truth = String::from("class\tsample\tangle\tanchor_x\tanchor_y\twidth\n");
    for smp in &samples {
        let rel = sample_path(smp.class, smp.sample);
        let path = root.join(&rel);
        create_parent(&path)?;
        save_pgm(&smp.image.image, &path)?;
        for l in &smp.image.lines {
            let _ = writeln!(
                truth,
                "{}\t{}\t{:?}\t{:?}\t{:?}\t{:?}",
                smp.class, smp.sample, l.angle, l.anchor.0, l.anchor.1, l.width
            );
        }
    }
    std::fs::write(root.join("truth.tsv"), truth)?;
    writeln!(
        out,
        "wrote {} images ({} classes x {} samples, {}x{}) to {}",
        samples.len(),
        s.classes,
        s.samples,
        s.width,
        s.height,
        root.display()
    )?;
    Ok(())
}

/// Nested-layout location of a synthetic sample: one subject per class,
/// a single finger each.
pub fn sample_path(class: usize, sample: usize) -> PathBuf {
    PathBuf::from(format!("s{class:03}"))
        .join("f1")
        .join(format!("{sample:03}.pgm"))
}

pub fn show_config(cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    out.write_all(cfg.to_text().as_bytes())?;
    Ok(())
}
