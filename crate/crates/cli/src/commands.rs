use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use edgeframe_core::degrade::{make_mask, matlab_gaussian_kernel, MaskKind};
use edgeframe_core::energy::{
    convergence_table, ConvergenceOptions, HarnessOperator, QuadratureOptions,
};
use edgeframe_core::framelet::{uep_profile, FrameTransform};
use edgeframe_core::image::io::{self, BitDepth};
use edgeframe_core::solver::init_v_deblur;
use edgeframe_core::{
    add_gaussian_noise, alternate, psnr, BankKind, BinaryPlane, DegradationOp, EdgeField,
    EnergySpec, Image, Task, TensorFilterBank, TestFunctionPair,
};

use crate::config::{resolve, Job};
use crate::exit::usage;
use crate::{ConvergenceArgs, DegradeArgs, DumpArgs, EvalArgs, OpKind, RestoreArgs, TestFn};

fn read_image(path: &Path) -> anyhow::Result<Image> {
    if !path.is_file() {
        return Err(usage(format!(
            "input file {} does not exist",
            path.display()
        )));
    }
    io::load(path).with_context(|| format!("reading {}", path.display()))
}

fn write_image(img: &Image, path: &Path) -> anyhow::Result<()> {
    io::save(img, path, BitDepth::Eight).with_context(|| format!("writing {}", path.display()))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Nonzero pixels are observed.
fn mask_from_image(img: &Image) -> BinaryPlane {
    BinaryPlane::from_fn(img.width(), img.height(), |r, c| img.get(r, c) != 0.0)
}

fn default_mask_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = output.extension().and_then(|s| s.to_str()).unwrap_or("pgm");
    output.with_file_name(format!("{stem}_mask.{ext}"))
}

pub fn degrade(a: &DegradeArgs) -> anyhow::Result<()> {
    let u = read_image(&a.input)?;
    let (w, h) = u.dims();
    let op = match a.op {
        OpKind::Identity => DegradationOp::Identity,
        OpKind::Inpaint => {
            let kind = match &a.mask_image {
                Some(path) => {
                    if !path.is_file() {
                        return Err(usage(format!(
                            "mask image {} does not exist",
                            path.display()
                        )));
                    }
                    MaskKind::FromImage {
                        path: path.clone(),
                        threshold: 128.0,
                    }
                }
                None => MaskKind::Random {
                    fraction: a.mask_fraction,
                    seed: a.seed,
                },
            };
            DegradationOp::InpaintMask(make_mask(&kind, w, h)?)
        }
        OpKind::Blur => DegradationOp::PeriodicBlur(matlab_gaussian_kernel(a.hsize, a.sigma_blur)?),
    };
    let f = add_gaussian_noise(&op.apply(&u)?, a.noise_sigma, a.seed.wrapping_add(1))?;
    write_image(&f, &a.output)?;
    if let DegradationOp::InpaintMask(m) = &op {
        let path = a
            .mask_out
            .clone()
            .unwrap_or_else(|| default_mask_path(&a.output));
        write_image(&m.to_image().scale(255.0), &path)?;
        eprintln!(
            "mask: {} ({} of {} pixels missing)",
            path.display(),
            m.count_zeros(),
            w * h
        );
    }
    Ok(())
}

fn operator_for(job: &Job, dims: (usize, usize)) -> anyhow::Result<DegradationOp> {
    Ok(match job.task {
        Task::Denoise => DegradationOp::Identity,
        Task::Inpaint => {
            let path = job.mask.as_ref().expect("validated by resolve");
            let mask = mask_from_image(&read_image(path)?);
            if mask.dims() != dims {
                return Err(usage(format!(
                    "mask is {}x{} but the image is {}x{}",
                    mask.width(),
                    mask.height(),
                    dims.0,
                    dims.1
                )));
            }
            DegradationOp::InpaintMask(mask)
        }
        Task::Deblur => {
            DegradationOp::PeriodicBlur(matlab_gaussian_kernel(job.kernel_hsize, job.kernel_sigma)?)
        }
    })
}

pub fn restore(a: &RestoreArgs) -> anyhow::Result<()> {
    let job = resolve(a)?;
    let f = read_image(&job.input)?;
    let (w, h) = f.dims();
    let reference = job.reference.as_deref().map(read_image).transpose()?;
    if let Some(r) = &reference {
        if r.dims() != f.dims() {
            return Err(usage("reference and input differ in size"));
        }
    }
    let op = operator_for(&job, (w, h))?;
    let p = &job.params;
    // Pixels outside the mask carry no information.
    let f = match &op {
        DegradationOp::InpaintMask(_) => op.apply(&f)?,
        _ => f,
    };
    let v0 = match job.task {
        Task::Deblur => {
            let wt = FrameTransform::new(TensorFilterBank::new(BankKind::Cubic.bank())?, p.levels)?;
            init_v_deblur(&f, &wt, p.init_tau)?
        }
        _ => EdgeField::zeros(p.levels, w, h),
    };

    let r = alternate(&f, &op, p, &Image::zeros(w, h), &v0, reference.as_ref())?;
    if !a.quiet {
        eprintln!("initial energy {:.6e}", r.initial_energy);
        for t in &r.trace {
            match t.psnr {
                Some(db) => eprintln!(
                    "round {:>3}  energy {:.6e}  psnr {db:.3}",
                    t.round, t.energy
                ),
                None => eprintln!("round {:>3}  energy {:.6e}", t.round, t.energy),
            }
        }
    }

    write_image(&r.u, &job.output)?;
    if let Some(path) = &job.trace {
        let mut out = create(path)?;
        writeln!(out, "round,energy,psnr")?;
        for t in &r.trace {
            let db = t.psnr.map(|x| x.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{}", t.round, t.energy, db)?;
        }
        out.flush()?;
    }
    if let Some(prefix) = &job.dump_v {
        let stem = prefix.to_string_lossy();
        for (l, plane) in r.v.planes().iter().enumerate() {
            write_image(
                &plane.map(|x| 255.0 * x.clamp(0.0, 1.0)),
                Path::new(&format!("{stem}_l{l}.pgm")),
            )?;
        }
    }
    Ok(())
}

pub fn eval(a: &EvalArgs) -> anyhow::Result<()> {
    let reference = read_image(&a.reference)?;
    let test = read_image(&a.test)?;
    let db = psnr(&reference, &test)?;
    println!("{db}");
    if let Some(path) = &a.out {
        let fresh = !path.exists();
        let mut out = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("opening {}", path.display()))?;
        if fresh {
            writeln!(out, "ref,test,psnr")?;
        }
        writeln!(out, "{},{},{db}", a.reference.display(), a.test.display())?;
    }
    Ok(())
}

pub fn filters_dump(a: &DumpArgs) -> anyhow::Result<()> {
    if a.n_freq < 2 {
        return Err(usage("--n-freq must be at least 2"));
    }
    let bank = BankKind::from(a.bank).bank();
    let mut out: Box<dyn Write> = match &a.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(std::io::stdout().lock()),
    };
    writeln!(out, "band,offset,value")?;
    for (l, q) in bank.filters().iter().enumerate() {
        for (k, v) in q.iter() {
            writeln!(out, "{l},{k},{v}")?;
        }
    }
    writeln!(out, "xi,deviation")?;
    for (xi, d) in uep_profile(&bank, a.n_freq) {
        writeln!(out, "{xi},{d:e}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn convergence_test(a: &ConvergenceArgs) -> anyhow::Result<()> {
    if a.n_list.is_empty() || a.n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("--n-list must be non-empty and strictly ascending"));
    }
    let pair = match a.test_fn {
        TestFn::Sine => TestFunctionPair::sine(),
        TestFn::Poly => TestFunctionPair::poly(),
        TestFn::Constant => TestFunctionPair::constant(1.0),
    };
    let operator = match a.indicator.as_deref() {
        None => HarnessOperator::Identity,
        Some(&[x0, x1, y0, y1]) => {
            if !(0.0 <= x0 && x0 < x1 && x1 <= 1.0 && 0.0 <= y0 && y0 < y1 && y1 <= 1.0) {
                return Err(usage(
                    "--indicator needs 0 <= a < b <= 1 and 0 <= c < d <= 1",
                ));
            }
            HarnessOperator::Indicator {
                x1: (x0, x1),
                x2: (y0, y1),
            }
        }
        Some(_) => return Err(usage("--indicator takes four values a,b,c,d")),
    };
    let opts = ConvergenceOptions {
        bank: a.bank.into(),
        quad_resolution: a.quad_resolution,
        min_depth: a.min_depth,
        check_sampling: true,
        operator,
        quadrature: QuadratureOptions {
            order: a.gauss_order,
            ..Default::default()
        },
    };
    let first = a.n_list[0];
    let spec = EnergySpec::new(vec![(1, 0), (0, 1)], vec![], vec![(1, 0), (0, 1)], first)?;
    let table = convergence_table(&pair, &spec, &a.n_list, &opts)?;
    print!("{}", table.render());
    if let Some(path) = &a.out {
        let mut out = create(path)?;
        writeln!(out, "n,E_n,E,rel_err")?;
        for r in &table.rows {
            writeln!(
                out,
                "{},{},{},{}",
                r.n, r.e_n, table.continuous.total, r.rel_err
            )?;
        }
        out.flush()?;
    }
    table.verify()?;
    Ok(())
}
