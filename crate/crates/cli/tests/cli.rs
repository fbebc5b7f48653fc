use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hopgr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hopgr"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_dataset(dir: &Path) {
    fs::write(
        dir.join("run.cfg"),
        "synth_out=data\nsynth_classes=4\nsynth_samples=3\nsynth_width=80\nsynth_height=40\n\
         train_dir=data\ndataset_dir=data\n",
    )
    .unwrap();
    let o = hopgr(dir, &["synth", "--config", "run.cfg"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn show_config_output_is_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = hopgr(
        dir.path(),
        &["show-config", "--metric", "chi2", "--set", "cell=8"],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("metric=chi2\n") && text.contains("cell_w=8\n"));
    fs::write(dir.path().join("shown.cfg"), &text).unwrap();
    let again = hopgr(dir.path(), &["show-config", "--config", "shown.cfg"]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn empty_dataset_exits_2_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("empty")).unwrap();
    let o = hopgr(dir.path(), &["learn-prior", "--set", "train_dir=empty"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: empty-dataset"), "{err}");
}

#[test]
fn missing_directory_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = hopgr(
        dir.path(),
        &["extract", "--mode", "uniform", "--set", "dataset_dir=nope"],
    );
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error: io-error"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "sigma=4\nselected=99\n").unwrap();
    let o = hopgr(dir.path(), &["show-config", "--config", "bad.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    fs::write(dir.path().join("bad.cfg"), "colour=blue\n").unwrap();
    let o = hopgr(dir.path(), &["show-config", "--config", "bad.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).starts_with("error: invalid-config: line 1"),
        "{}",
        stderr(&o)
    );
    let o = hopgr(dir.path(), &["extract"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dataset_dir"));
}

#[test]
fn prior_mismatch_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path());
    let o = hopgr(dir.path(), &["learn-prior", "--config", "run.cfg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("selected: "));
    let o = hopgr(
        dir.path(),
        &["extract", "--config", "run.cfg", "--set", "sigma=3"],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error: prior-mismatch"));
}

#[test]
fn strict_dims_rejects_non_roi_images() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path());
    let o = hopgr(
        dir.path(),
        &[
            "extract",
            "--config",
            "run.cfg",
            "--mode",
            "uniform",
            "--strict-dims",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).starts_with("error: wrong-dimensions"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn physio_and_uniform_side_by_side() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    let run = |args: &[&str]| {
        let o = hopgr(d, args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        stdout(&o)
    };
    run(&["learn-prior", "--config", "run.cfg"]);
    let physio = run(&["extract", "--config", "run.cfg", "--set", "csv=desc.csv"]);
    assert!(physio.contains("mode=physio bins=8"), "{physio}");
    let uniform = run(&[
        "extract",
        "--config",
        "run.cfg",
        "--mode",
        "uniform",
        "--set",
        "archive=uniform.hpga",
    ]);
    assert!(uniform.contains("mode=uniform bins=16"), "{uniform}");
    let report = run(&[
        "evaluate",
        "--config",
        "run.cfg",
        "--metric",
        "cosine",
        "--set",
        "baseline_archive=uniform.hpga",
    ]);
    let lines: Vec<&str> = report.lines().collect();
    assert!(
        lines[0].starts_with("EER=") && lines[0].contains("genuine=12 impostor=54"),
        "{report}"
    );
    assert!(lines[1].starts_with("baseline EER="), "{report}");
    let record = fs::read_to_string(d.join("report.txt")).unwrap();
    assert!(record.contains("metric=cosine") && record.contains("baseline_eer="));
    assert!(fs::read_to_string(d.join("det.csv"))
        .unwrap()
        .starts_with("threshold,far,frr\n"));
    assert_eq!(
        fs::read_to_string(d.join("desc.csv"))
            .unwrap()
            .lines()
            .count(),
        12
    );
}

#[test]
fn mixing_priors_in_one_archive_is_a_compatibility_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_dataset(d);
    let a = hopgr(
        d,
        &[
            "extract",
            "--config",
            "run.cfg",
            "--mode",
            "uniform",
            "--set",
            "archive=a.hpga",
        ],
    );
    assert!(a.status.success());
    hopgr(
        d,
        &["learn-prior", "--config", "run.cfg", "--set", "selected=16"],
    );
    let b = hopgr(
        d,
        &["extract", "--config", "run.cfg", "--set", "archive=b.hpga"],
    );
    assert!(b.status.success(), "{}", stderr(&b));
    let mut entries = hopgr::archive::read_archive(&d.join("a.hpga")).unwrap();
    entries.truncate(6);
    entries.extend(
        hopgr::archive::read_archive(&d.join("b.hpga"))
            .unwrap()
            .into_iter()
            .skip(6),
    );
    hopgr::archive::write_archive(&d.join("mixed.hpga"), &entries).unwrap();
    let o = hopgr(d, &["evaluate", "--set", "archive=mixed.hpga"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}
