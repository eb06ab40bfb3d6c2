//! Restoration job files.
//!
//! A job file is flat TOML. Every key is optional; unknown keys are rejected.
//! Resolution order: preset, then the file, then command-line flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use edgeframe_core::{Model, SolverParams, Task};
use serde::Deserialize;

use crate::exit::usage;
use crate::RestoreArgs;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub preset: Option<String>,
    pub task: Option<String>,
    pub model: Option<String>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub dump_v: Option<PathBuf>,
    pub kernel_hsize: Option<usize>,
    pub kernel_sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub rho: Option<f64>,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub mu: Option<f64>,
    pub outer: Option<usize>,
    pub inner_u: Option<usize>,
    pub inner_v: Option<usize>,
    pub tol: Option<f64>,
    pub edge_t: Option<f64>,
    pub tau: Option<f64>,
    pub levels: Option<usize>,
    pub levels_p: Option<usize>,
    pub levels_dd: Option<usize>,
    pub bank_w: Option<String>,
    pub bank_wp: Option<String>,
    pub bank_dd: Option<String>,
}

impl JobConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| usage(e.message().to_string()))
    }
}

/// Fully resolved restoration job.
#[derive(Debug)]
pub struct Job {
    pub task: Task,
    pub params: SolverParams,
    pub input: PathBuf,
    pub output: PathBuf,
    pub reference: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub dump_v: Option<PathBuf>,
    pub kernel_hsize: usize,
    pub kernel_sigma: f64,
}

fn parse_field<T: std::str::FromStr<Err = String>>(
    key: &str,
    value: &Option<String>,
) -> anyhow::Result<Option<T>> {
    value
        .as_deref()
        .map(|s| s.parse().map_err(|e| usage(format!("{key}: {e}"))))
        .transpose()
}

fn preset_task(name: &str) -> anyhow::Result<Task> {
    match name {
        "inpaint-default" => Ok(Task::Inpaint),
        "deblur-default" => Ok(Task::Deblur),
        "denoise-default" => Ok(Task::Denoise),
        other => Err(usage(format!(
            "unknown preset '{other}' (expected inpaint-default, deblur-default or denoise-default)"
        ))),
    }
}

pub fn resolve(args: &RestoreArgs) -> anyhow::Result<Job> {
    let file = match &args.config {
        Some(path) => JobConfig::load(path)?,
        None => JobConfig::default(),
    };

    let preset = args.preset.as_deref().or(file.preset.as_deref());
    let preset_task = preset.map(preset_task).transpose()?;
    let task = match (
        args.task,
        parse_field::<Task>("task", &file.task)?,
        preset_task,
    ) {
        (Some(t), _, _) => t.into(),
        (None, Some(t), _) => t,
        (None, None, Some(t)) => t,
        (None, None, None) => {
            return Err(usage(
                "no task given (use --task, --preset or a config file)",
            ))
        }
    };
    let mut p = SolverParams::preset(preset_task.unwrap_or(task));

    macro_rules! merge {
        ($($field:ident => $target:ident),* $(,)?) => {
            $(
                if let Some(v) = file.$field {
                    p.$target = v;
                }
                if let Some(v) = args.$field {
                    p.$target = v;
                }
            )*
        };
    }
    merge!(
        lambda => lambda, gamma => gamma, rho => rho, mu1 => mu1, mu2 => mu2, mu => mu,
        outer => outer, inner_u => inner_u, inner_v => inner_v, tol => tol,
        edge_t => edge_t, tau => init_tau, levels => levels, levels_p => levels_p,
        levels_dd => levels_dd,
    );
    if let Some(m) = parse_field::<Model>("model", &file.model)? {
        p.model = m;
    }
    if let Some(m) = args.model {
        p.model = m.into();
    }
    if let Some(b) = parse_field("bank_w", &file.bank_w)? {
        p.bank_w = b;
    }
    if let Some(b) = parse_field("bank_wp", &file.bank_wp)? {
        p.bank_wp = b;
    }
    if let Some(b) = parse_field("bank_dd", &file.bank_dd)? {
        p.bank_dd = b;
    }
    p.validate()?;

    let pick = |flag: &Option<PathBuf>, key: &Option<PathBuf>| flag.clone().or_else(|| key.clone());
    let input = pick(&args.input, &file.input).ok_or_else(|| usage("no input image given"))?;
    let output = pick(&args.output, &file.output).ok_or_else(|| usage("no output path given"))?;
    let mask = pick(&args.mask, &file.mask);
    if task == Task::Inpaint && mask.is_none() {
        return Err(usage("the inpaint task requires --mask"));
    }
    if task != Task::Inpaint && mask.is_some() {
        return Err(usage("--mask is only valid for the inpaint task"));
    }
    let kernel_hsize = args.kernel_hsize.or(file.kernel_hsize).unwrap_or(2);
    let kernel_sigma = args.kernel_sigma.or(file.kernel_sigma).unwrap_or(15.0);
    if task != Task::Deblur && (args.kernel_hsize.is_some() || args.kernel_sigma.is_some()) {
        return Err(usage(
            "--kernel-hsize and --kernel-sigma are only valid for the deblur task",
        ));
    }

    Ok(Job {
        task,
        params: p,
        input,
        output,
        reference: pick(&args.reference, &file.reference),
        mask,
        trace: pick(&args.trace, &file.trace),
        dump_v: pick(&args.dump_v, &file.dump_v),
        kernel_hsize,
        kernel_sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> RestoreArgs {
        RestoreArgs {
            input: Some("in.pgm".into()),
            output: Some("out.pgm".into()),
            ..Default::default()
        }
    }

    #[test]
    fn presets_carry_task_levels() {
        let mut a = args();
        a.preset = Some("deblur-default".into());
        let job = resolve(&a).unwrap();
        assert_eq!(job.task, Task::Deblur);
        assert_eq!(
            (job.params.levels, job.params.levels_p, job.params.levels_dd),
            (2, 2, 2)
        );

        a.preset = Some("inpaint-default".into());
        a.mask = Some("m.pgm".into());
        let job = resolve(&a).unwrap();
        assert_eq!(
            (job.params.levels, job.params.levels_p, job.params.levels_dd),
            (1, 1, 4)
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = JobConfig::parse("lambda = 1.0\nlamda = 2.0\n").unwrap_err();
        assert_eq!(crate::exit::code_for(&err), crate::exit::USAGE);
        assert!(format!("{err:#}").contains("lamda"));
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("job.toml");
        std::fs::write(&path, "task = \"denoise\"\nlambda = 2.0\nrho = 3.0\n").unwrap();
        let mut a = args();
        a.config = Some(path);
        a.lambda = Some(7.0);
        let job = resolve(&a).unwrap();
        assert_eq!(job.params.lambda, 7.0);
        assert_eq!(job.params.rho, 3.0);
    }

    #[test]
    fn invalid_combinations() {
        let mut a = args();
        a.task = Some(crate::TaskArg::Inpaint);
        assert!(resolve(&a).is_err());

        let mut a = args();
        a.task = Some(crate::TaskArg::Denoise);
        a.edge_t = Some(1.5);
        assert!(resolve(&a).is_err());

        let mut a = args();
        a.task = Some(crate::TaskArg::Denoise);
        a.levels_p = Some(0);
        assert!(resolve(&a).is_err());
    }
}
