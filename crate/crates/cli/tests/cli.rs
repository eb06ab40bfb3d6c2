use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use edgeframe_core::image::io::{self, BitDepth};
use edgeframe_core::Image;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_edgeframe"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn step(n: usize) -> Image {
    Image::from_fn(n, n, |r, c| {
        let base = 40.0 + r as f64;
        if c >= n / 2 {
            base + 140.0
        } else {
            base
        }
    })
}

fn save(dir: &Path, name: &str, img: &Image) -> PathBuf {
    let path = dir.join(name);
    io::save(img, &path, BitDepth::Eight).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn eval_identical_images_prints_inf() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(dir.path(), "a.pgm", &step(16));
    let csv = dir.path().join("psnr.csv");
    let o = run(&["eval", "--ref", s(&a), "--test", s(&a), "--out", s(&csv)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "inf");
    run(&["eval", "--ref", s(&a), "--test", s(&a), "--out", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "ref,test,psnr");
    assert!(lines[1].ends_with(",inf"));
}

#[test]
fn noop_degradation_keeps_pixels() {
    let dir = tempfile::tempdir().unwrap();
    let input = save(dir.path(), "in.pgm", &step(32));
    let out = dir.path().join("out.pgm");
    let o = run(&[
        "degrade",
        "--op",
        "inpaint",
        "--mask-fraction",
        "0",
        "--noise-sigma",
        "0",
        s(&input),
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(io::load(&out).unwrap(), io::load(&input).unwrap());
    let mask = io::load(dir.path().join("out_mask.pgm")).unwrap();
    assert!(mask.as_slice().iter().all(|&v| v == 255.0));
}

#[test]
fn degrade_is_reproducible_with_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let input = save(dir.path(), "in.pgm", &step(32));
    let (a, b) = (dir.path().join("a.pgm"), dir.path().join("b.pgm"));
    for out in [&a, &b] {
        let o = run(&[
            "degrade",
            "--op",
            "inpaint",
            "--seed",
            "7",
            s(&input),
            s(out),
        ]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        std::fs::read(dir.path().join("a_mask.pgm")).unwrap(),
        std::fs::read(dir.path().join("b_mask.pgm")).unwrap()
    );
}

#[test]
fn deblur_pipeline_improves_psnr() {
    let dir = tempfile::tempdir().unwrap();
    let truth = save(dir.path(), "truth.pgm", &step(64));
    let degraded = dir.path().join("f.pgm");
    let restored = dir.path().join("u.pgm");
    let trace = dir.path().join("trace.csv");
    let o = run(&[
        "degrade",
        "--op",
        "blur",
        "--hsize",
        "5",
        "--sigma-blur",
        "1",
        "--noise-sigma",
        "4",
        "--seed",
        "3",
        s(&truth),
        s(&degraded),
    ]);
    assert!(o.status.success());
    let o = run(&[
        "restore",
        "--preset",
        "deblur-default",
        "--kernel-hsize",
        "5",
        "--kernel-sigma",
        "1",
        "--ref",
        s(&truth),
        "--trace",
        s(&trace),
        "--dump-v",
        s(&dir.path().join("v")),
        "--quiet",
        s(&degraded),
        s(&restored),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let psnr_of = |test: &Path| -> f64 {
        let o = run(&["eval", "--ref", s(&truth), "--test", s(test)]);
        stdout(&o).trim().parse().unwrap()
    };
    let (before, after) = (psnr_of(&degraded), psnr_of(&restored));
    assert!(
        after >= before,
        "restored {after} dB vs degraded {before} dB"
    );

    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().next(), Some("round,energy,psnr"));
    assert!(text.lines().count() >= 2);
    for l in 0..2 {
        let v = io::load(dir.path().join(format!("v_l{l}.pgm"))).unwrap();
        assert!(v.as_slice().iter().all(|&x| (0.0..=255.0).contains(&x)));
    }
}

#[test]
fn restore_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let truth = save(dir.path(), "truth.pgm", &step(32));
    let f = dir.path().join("f.pgm");
    assert!(run(&[
        "degrade",
        "--op",
        "inpaint",
        "--noise-sigma",
        "4",
        "--seed",
        "5",
        s(&truth),
        s(&f)
    ])
    .status
    .success());
    let mask = dir.path().join("f_mask.pgm");
    let mut outputs = Vec::new();
    for name in ["u1.pgm", "u2.pgm"] {
        let out = dir.path().join(name);
        let trace = dir.path().join(format!("{name}.csv"));
        let o = run(&[
            "restore",
            "--task",
            "inpaint",
            "--mask",
            s(&mask),
            "--outer",
            "3",
            "--ref",
            s(&truth),
            "--trace",
            s(&trace),
            "--quiet",
            s(&f),
            s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push((std::fs::read(&out).unwrap(), std::fs::read(&trace).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn config_file_drives_restore() {
    let dir = tempfile::tempdir().unwrap();
    let input = save(dir.path(), "in.pgm", &step(32));
    let out = dir.path().join("out.pgm");
    let cfg = dir.path().join("job.toml");
    std::fs::write(
        &cfg,
        format!(
            "preset = \"denoise-default\"\nouter = 2\ninput = \"{}\"\noutput = \"{}\"\n",
            s(&input),
            s(&out)
        ),
    )
    .unwrap();
    let o = run(&["restore", "--config", s(&cfg), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.is_file());
}

#[test]
fn validation_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = save(dir.path(), "in.pgm", &step(32));
    let out = dir.path().join("out.pgm");
    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "task = \"denoise\"\nlambdaa = 1.0\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["restore", "--task", "inpaint", s(&input), s(&out)],
        vec![
            "restore",
            "--task",
            "denoise",
            "--edge-t",
            "1.5",
            s(&input),
            s(&out),
        ],
        vec![
            "restore",
            "--task",
            "denoise",
            "--levels-p",
            "0",
            s(&input),
            s(&out),
        ],
        vec!["restore", "--config", s(&bad_cfg), s(&input), s(&out)],
        vec!["restore", "--task", "denoise", "missing.pgm", s(&out)],
        vec!["eval", "--ref", s(&input), "--test", "missing.pgm"],
        vec![
            "degrade",
            "--op",
            "inpaint",
            "--mask-fraction",
            "1.5",
            s(&input),
            s(&out),
        ],
        vec!["convergence-test", "--n-list", "5,4"],
        vec!["restore", "--task", "sharpen", s(&input), s(&out)],
    ];
    for args in cases {
        let o = run(&args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let err = String::from_utf8_lossy(&o.stderr);
        if !args.contains(&"sharpen") {
            assert_eq!(err.trim().lines().count(), 1, "{args:?}: {err}");
        }
    }
    let o = bin()
        .env("FRAMELET_THREADS", "zero")
        .args(["eval", "--ref", s(&input), "--test", s(&input)])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn write_failure_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = save(dir.path(), "in.pgm", &step(16));
    let out = dir.path().join("no/such/dir/out.pgm");
    let o = run(&["degrade", s(&input), s(&out)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn filters_dump_and_convergence_csv() {
    let dir = tempfile::tempdir().unwrap();
    let filters = dir.path().join("filters.csv");
    assert!(
        run(&["filters", "dump", "--bank", "cubic", "--out", s(&filters)])
            .status
            .success()
    );
    let text = std::fs::read_to_string(&filters).unwrap();
    assert_eq!(text.lines().next(), Some("band,offset,value"));
    assert_eq!(text.lines().filter(|l| l.starts_with("4,")).count(), 5);
    assert!(text.lines().any(|l| l == "xi,deviation"));

    let csv = dir.path().join("conv.csv");
    let o = run(&[
        "convergence-test",
        "--test-fn",
        "poly",
        "--n-list",
        "3,4,5",
        "--out",
        s(&csv),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,E_n,E,rel_err");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("5,"));
}
