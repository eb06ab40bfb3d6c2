use std::f64::consts::PI;

use edgeframe_core::degrade::DegradationOp;
use edgeframe_core::energy::{
    a2_weights, continuous_energy, convergence_experiment, convergence_table, discrete_energy,
    index_range, interior_range, sample_t_n, semi_discrete_energy, Boundary, ConvergenceOptions,
    EnergySpec, Field, HarnessOperator, QuadratureOptions, SeparableTerm, TestFunctionPair,
    Univariate,
};
use edgeframe_core::{BankKind, Image, TensorFilterBank};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn linear() -> TensorFilterBank {
    TensorFilterBank::new(BankKind::Linear.bank()).unwrap()
}

fn random_image(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Image {
    Image::from_fn(n, n, |_, _| rng.random_range(lo..hi))
}

fn full_spec(n: u32) -> EnergySpec {
    EnergySpec::new(
        vec![(1, 0), (0, 1), (2, 0), (1, 1)],
        vec![(1, 0)],
        vec![(1, 0), (0, 1)],
        n,
    )
    .unwrap()
    .with_weights(1.3, 0.7, 0.4)
}

#[test]
fn only_fidelity_survives_for_zero_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = random_image(&mut rng, 8, -5.0, 5.0);
    let z = Image::zeros(8, 8);
    let spec = full_spec(3);
    let e = discrete_energy(&z, &z, &linear(), &spec, &DegradationOp::Identity, &f).unwrap();
    let expected = 0.5 * spec.meshsize().powi(2) * f.as_slice().iter().map(|x| x * x).sum::<f64>();
    assert!((e.total - expected).abs() <= 1e-14 * expected);
    assert_eq!((e.smooth, e.edge, e.regularity), (0.0, 0.0, 0.0));
}

#[test]
fn constants_cost_nothing() {
    let c = Image::constant(8, 8, 3.7);
    let one = Image::constant(8, 8, 1.0);
    for boundary in [Boundary::Periodic, Boundary::Interior] {
        let spec = full_spec(3).with_boundary(boundary);
        let e = discrete_energy(&c, &one, &linear(), &spec, &DegradationOp::Identity, &c).unwrap();
        assert!(e.total.abs() <= 1e-12, "{e:?}");
    }
}

/// Periodic `F_n` summed term by term from explicit 2-D masks.
fn naive_energy(
    u: &Image,
    v: &Image,
    f: &Image,
    bank: &TensorFilterBank,
    spec: &EnergySpec,
) -> f64 {
    let n = u.width() as isize;
    let h2 = spec.meshsize().powi(2);
    let wrap = |i: isize| i.rem_euclid(n) as usize;
    let coeff = |x: &Image, band, r: usize, c: usize| -> f64 {
        let mut acc = 0.0;
        for ((k1, k2), t) in bank.mask(band).iter() {
            acc += t * x.get(wrap(r as isize + k2), wrap(c as isize + k1));
        }
        acc
    };
    let weight = |set: &[(usize, usize)], band: (usize, usize)| -> f64 {
        if !set.contains(&band) {
            return 0.0;
        }
        let order = (band.0 + band.1) as i32;
        (2f64.powi(order * (spec.n as i32 - 1)) / bank.c_alpha(band)).powi(2)
    };
    let mut total = 0.0;
    for r in 0..u.height() {
        for c in 0..u.width() {
            let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
            for &band in bank.bands() {
                let wu = coeff(u, band, r, c);
                let wv = coeff(v, band, r, c);
                s1 += weight(&spec.i_set, band) * wu * wu;
                s2 += weight(&spec.i_prime, band) * wu * wu;
                s3 += weight(&spec.i_dprime, band) * wv * wv;
            }
            let vk = v.get(r, c);
            total += h2
                * (spec.lambda * (1.0 - vk) * s1.sqrt()
                    + spec.gamma * vk * s2.sqrt()
                    + spec.rho * s3.sqrt());
            total += 0.5 * h2 * (u.get(r, c) - f.get(r, c)).powi(2);
        }
    }
    total
}

#[test]
fn matches_an_independent_resummation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for kind in [BankKind::Linear, BankKind::Cubic] {
        let bank = TensorFilterBank::new(kind.bank()).unwrap();
        let spec = full_spec(3);
        let u = random_image(&mut rng, 8, -10.0, 10.0);
        let v = random_image(&mut rng, 8, 0.0, 1.0);
        let f = random_image(&mut rng, 8, -10.0, 10.0);
        let e = discrete_energy(&u, &v, &bank, &spec, &DegradationOp::Identity, &f)
            .unwrap()
            .total;
        let oracle = naive_energy(&u, &v, &f, &bank, &spec);
        assert!(
            (e - oracle).abs() <= 1e-12 * oracle.abs(),
            "{e} vs {oracle}"
        );
    }
}

#[test]
fn v_zero_has_no_edge_or_regularity_contribution() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = random_image(&mut rng, 8, -10.0, 10.0);
    let e = discrete_energy(
        &u,
        &Image::zeros(8, 8),
        &linear(),
        &full_spec(2),
        &DegradationOp::Identity,
        &u,
    )
    .unwrap();
    assert_eq!((e.edge, e.regularity, e.fidelity), (0.0, 0.0, 0.0));
    assert!(e.smooth > 0.0);
}

#[test]
fn dominance_condition_is_enforced() {
    assert!(EnergySpec::new(vec![(2, 0)], vec![(1, 0)], vec![], 3).is_ok());
    assert!(EnergySpec::new(vec![(1, 1)], vec![(1, 0), (0, 1)], vec![], 3).is_ok());
    assert!(EnergySpec::new(vec![(1, 0)], vec![(1, 0)], vec![], 3).is_err());
    assert!(EnergySpec::new(vec![(2, 0), (0, 2)], vec![(1, 1)], vec![], 3).is_err());
    assert_eq!(
        EnergySpec::new(vec![(1, 0)], vec![], vec![], 5)
            .unwrap()
            .meshsize(),
        1.0 / 32.0
    );
}

#[test]
fn a2_weight_examples() {
    for kind in [BankKind::Linear, BankKind::Cubic] {
        let bank = TensorFilterBank::new(kind.bank()).unwrap();
        let all: Vec<_> = bank.bands().to_vec();
        let w1 = a2_weights(&bank, 1, &all).unwrap();
        for (i, &band) in bank.bands().iter().enumerate() {
            let c = bank.c_alpha(band);
            if band.0 + band.1 == 1 {
                assert!((w1[i] - c.powi(-2)).abs() <= 1e-15 * w1[i]);
            }
            for n in 1..8 {
                let a = a2_weights(&bank, n, &all).unwrap()[i];
                let b = a2_weights(&bank, n + 1, &all).unwrap()[i];
                assert_eq!(b / a, 2f64.powi(2 * (band.0 + band.1) as i32));
            }
        }
        let w3 = a2_weights(&bank, 3, &[(1, 1)]).unwrap();
        let i = bank.band_index((1, 1)).unwrap();
        assert!((w3[i] - 256.0 / bank.c_alpha((1, 1)).powi(2)).abs() <= 1e-12 * w3[i]);
        assert_eq!(w3.iter().filter(|&&x| x != 0.0).count(), 1);
    }
}

#[test]
fn sampling_examples() {
    let bank = linear();
    let q0 = bank.univariate().lowpass();
    let ones = sample_t_n(&Field::constant(1.0), 5, q0, 6).unwrap();
    assert!(ones
        .values
        .as_slice()
        .iter()
        .all(|x| (x - 1.0).abs() <= 1e-12));
    let x1 = sample_t_n(&TestFunctionPair::linear().u, 5, q0, 6).unwrap();
    for r in 0..x1.values.height() {
        for c in 0..x1.values.width() {
            let centroid = (x1.first + c) as f64 * x1.meshsize();
            assert!((x1.values.get(r, c) - centroid).abs() <= 1e-8);
        }
    }
}

#[test]
fn interior_set_by_support_arithmetic() {
    for kind in [BankKind::Linear, BankKind::Cubic] {
        let uni = kind.bank();
        for n in 3..8 {
            let (m0, m1) = index_range(uni.lowpass(), n).unwrap();
            let (k0, k1) = interior_range(&uni, n).unwrap();
            let inside = |k: usize| {
                uni.filters().iter().all(|q| {
                    let (a, b) = (k as isize + q.first(), k as isize + q.last());
                    a >= m0 as isize && b <= m1 as isize
                })
            };
            assert!((k0..=k1).all(inside));
            assert!(!inside(k0 - 1) && !inside(k1 + 1));
        }
    }
}

#[test]
fn semi_discrete_energy_sums_over_the_interior_set() {
    let bank = linear();
    let pair = TestFunctionPair::sine_bump();
    let spec = EnergySpec::new(vec![(1, 0), (0, 1)], vec![], vec![(1, 0), (0, 1)], 4).unwrap();
    let e = semi_discrete_energy(&pair, &spec, &bank, &HarnessOperator::Identity, 8, true).unwrap();
    let q0 = bank.univariate().lowpass();
    let (tu, tv) = (
        sample_t_n(&pair.u, 4, q0, 8).unwrap(),
        sample_t_n(&pair.v, 4, q0, 8).unwrap(),
    );
    let (k0, k1) = interior_range(bank.univariate(), 4).unwrap();
    let lam = a2_weights(&bank, 4, &spec.i_set).unwrap();
    let h2 = spec.meshsize().powi(2);
    let mut smooth = 0.0;
    for k2 in k0..=k1 {
        for k1_ in k0..=k1 {
            let mut s = 0.0;
            for (i, &band) in bank.bands().iter().enumerate() {
                let mut w = 0.0;
                for ((j1, j2), t) in bank.mask(band).iter() {
                    let (r, c) = (
                        (k2 as isize + j2) as usize - tu.first,
                        (k1_ as isize + j1) as usize - tu.first,
                    );
                    w += t * tu.values.get(r, c);
                }
                s += lam[i] * w * w;
            }
            smooth += h2 * (1.0 - tv.values.get(k2 - tv.first, k1_ - tv.first)) * s.sqrt();
        }
    }
    assert!((e.smooth - smooth).abs() <= 1e-12 * smooth);
}

#[test]
fn continuous_examples() {
    let opts = QuadratureOptions::default();
    let spec = EnergySpec::new(vec![(1, 0), (0, 1)], vec![], vec![(1, 0), (0, 1)], 4).unwrap();
    let zero = TestFunctionPair::new("zero", Field::constant(0.0), Field::constant(0.0));
    assert_eq!(
        continuous_energy(&zero, &spec, &HarnessOperator::Identity, &opts)
            .unwrap()
            .total,
        0.0
    );

    let lin = TestFunctionPair::linear();
    let pair =
        TestFunctionPair::new("x1", lin.u.clone(), Field::constant(0.0)).with_data(lin.u.clone());
    let spec2 = EnergySpec::new(vec![(2, 0)], vec![(1, 0)], vec![(1, 0)], 4)
        .unwrap()
        .with_weights(1.0, 1.0, 0.0);
    let e = continuous_energy(&pair, &spec2, &HarnessOperator::Identity, &opts).unwrap();
    assert!(e.total.abs() <= 1e-14);
}

#[test]
fn sine_smooth_term_matches_a_midpoint_oracle() {
    let spec = EnergySpec::new(vec![(1, 0), (0, 1)], vec![], vec![(1, 0), (0, 1)], 4).unwrap();
    let e = continuous_energy(
        &TestFunctionPair::sine(),
        &spec,
        &HarnessOperator::Identity,
        &QuadratureOptions::default(),
    )
    .unwrap();
    let m = 4000;
    let h = 1.0 / m as f64;
    let w = 2.0 * PI;
    let mut acc = 0.0;
    for i in 0..m {
        let y = (i as f64 + 0.5) * h;
        for j in 0..m {
            let x = (j as f64 + 0.5) * h;
            let ux = w * (w * x).cos() * (w * y).sin();
            let uy = w * (w * x).sin() * (w * y).cos();
            acc += (ux * ux + uy * uy).sqrt();
        }
    }
    let oracle = 0.5 * acc * h * h;
    assert!(
        (e.smooth - oracle).abs() <= 1e-6 * oracle,
        "{} vs {oracle}",
        e.smooth
    );
    assert!((e.fidelity - 0.125).abs() <= 1e-12);
}

#[test]
fn constant_pair_with_matching_data_has_zero_energy_at_every_resolution() {
    let c = 2.5;
    let pair = TestFunctionPair::constant(c).with_data(Field::constant(c));
    let spec = EnergySpec::new(vec![(1, 0), (0, 1)], vec![], vec![(1, 0), (0, 1)], 4).unwrap();
    let t = convergence_table(&pair, &spec, &[3, 4, 5], &ConvergenceOptions::default()).unwrap();
    assert_eq!(t.continuous.total, 0.0);
    for row in &t.rows {
        assert!(row.e_n.abs() <= 1e-12, "{row:?}");
    }
}

#[test]
fn constant_pair_without_data_keeps_only_fidelity() {
    let c = 2.5;
    let pair = TestFunctionPair::constant(c);
    let bank = linear();
    for n in 3..7 {
        let spec = EnergySpec::new(vec![(1, 0), (0, 1)], vec![], vec![(1, 0), (0, 1)], n).unwrap();
        let e =
            semi_discrete_energy(&pair, &spec, &bank, &HarnessOperator::Identity, 6, true).unwrap();
        let (m0, m1) = index_range(bank.univariate().lowpass(), n).unwrap();
        let count = (m1 - m0 + 1) as f64;
        assert!(e.smooth.abs() <= 1e-12 && e.regularity.abs() <= 1e-12);
        assert!(
            (e.fidelity - 0.5 * c * c * count * count * spec.meshsize().powi(2)).abs() <= 1e-12
        );
    }
}

#[test]
fn sine_pair_converges() {
    let spec = EnergySpec::new(vec![(1, 0), (0, 1)], vec![], vec![(1, 0), (0, 1)], 4).unwrap();
    let t = convergence_experiment(
        &TestFunctionPair::sine(),
        &spec,
        &[4, 5, 6, 7],
        &ConvergenceOptions::default(),
    )
    .unwrap();
    let err = |n: u32| t.rows.iter().find(|r| r.n == n).unwrap().rel_err;
    assert!(err(7) < err(4));
    assert!(err(7) / err(5) < 1.0);
    assert!(t.final_error_is_smallest());
}

#[test]
fn indicator_operator_variant_converges() {
    let spec = EnergySpec::new(vec![(1, 0), (0, 1)], vec![], vec![(1, 0), (0, 1)], 4).unwrap();
    let opts = ConvergenceOptions {
        operator: HarnessOperator::Indicator {
            x1: (0.25, 0.75),
            x2: (0.0, 0.5),
        },
        ..Default::default()
    };
    let data = Field::separable(vec![SeparableTerm {
        coef: 0.3,
        x1: Univariate::sin(2.0 * PI),
        x2: Univariate::constant(1.0),
    }]);
    let pair = TestFunctionPair::sine().with_data(data);
    convergence_experiment(&pair, &spec, &[4, 5, 6, 7], &opts).unwrap();
}
