//! Acceptance checks: the numeric claims the crate is built around, each one
//! pinned with its tolerance. One test per claim; each prints a single PASS
//! line with the measured quantities when it holds.

use std::collections::BTreeSet;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use simplicial_flows::coloring::{
    enumerate_balanced, invariance_oracle, is_balanced, AntiColoring, SignedColor,
    SimplexPartition,
};
use simplicial_flows::complex::{diamond, diamond_relabeled, random_complex, tetrahedron};
use simplicial_flows::dynamics::{
    assemble, CouplingFunction, Direction, VectorFieldSpec,
};
use simplicial_flows::expr::ScalarFunction;
use simplicial_flows::hodge::{max_norm, pseudoinverse, to_f64, triple_decomposition};
use simplicial_flows::relabel::{
    commutation_witness, find_symmetries, relabel_map_t, symmetry_map_s, symmetry_map_s_tilde,
    verify_relabel_conjugacy, verify_symmetry, Permutation,
};
use simplicial_flows::simulate::{
    inertia, inertia_of_product, integrate, scenario_guckenheimer_holmes,
    scenario_lorenz_selkov, GhParams, LsParams,
};

/// The vertex renaming 2 -> 3 -> 4 -> 2 that turns the first labelling of
/// the two-triangle complex into the second.
fn diamond_relabeling() -> Permutation {
    Permutation::from_map([(1, 1), (2, 3), (3, 4), (4, 2)].into_iter().collect()).unwrap()
}

/// The vertex swap 1 <-> 3, a symmetry of the two-triangle complex.
fn swap13() -> Permutation {
    Permutation::from_cycles(&[1, 2, 3, 4], &[vec![1, 3]]).unwrap()
}

#[test]
fn acceptance_01_boundary_composition_is_exactly_zero() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acc_0001);
    let mut products = 0usize;
    for _ in 0..200 {
        let x = random_complex(&mut rng, 8, 6, 5);
        for d in 1..x.d_max() {
            let bd = x.boundary_or_zero(d);
            let bup = x.boundary_or_zero(d + 1);
            assert_eq!(
                &bd * &bup,
                DMatrix::<i64>::zeros(bd.nrows(), bup.ncols()),
                "B_{d} * B_{} is nonzero",
                d + 1
            );
            products += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(products > 100, "only {products} boundary products were exercised");
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}, budget is 5 s");
    println!(
        "acceptance 1 (exact boundary composition): PASS \
         ({products} integer products over 200 complexes in {elapsed:?})"
    );
}

#[test]
fn acceptance_02_reference_matrices_are_reproduced_bit_exactly() {
    let x = diamond();
    let expected_b1 = DMatrix::from_row_slice(
        4,
        5,
        &[
            -1, 0, -1, -1, 0, //
            1, -1, 0, 0, 0, //
            0, 1, 1, 0, -1, //
            0, 0, 0, 1, 1,
        ],
    );
    assert_eq!(x.boundary_matrix(1).unwrap(), expected_b1);
    let expected_b2 = DMatrix::from_row_slice(5, 2, &[1, 0, 1, 0, -1, 1, 0, -1, 0, 1]);
    assert_eq!(x.boundary_matrix(2).unwrap(), expected_b2);

    let y = diamond_relabeled();
    let expected_b2_relabeled =
        DMatrix::from_row_slice(5, 2, &[1, 0, 1, 0, -1, -1, 0, 1, 0, 1]);
    assert_eq!(y.boundary_matrix(2).unwrap(), expected_b2_relabeled);

    let sigma = diamond_relabeling();
    let mut expected_t1 = DMatrix::<i64>::identity(5, 5);
    expected_t1[(4, 4)] = -1;
    assert_eq!(relabel_map_t(&x, &sigma, 1).unwrap(), expected_t1);
    let mut expected_t2 = DMatrix::<i64>::identity(2, 2);
    expected_t2[(1, 1)] = -1;
    assert_eq!(relabel_map_t(&x, &sigma, 2).unwrap(), expected_t2);

    let expected_s1 = DMatrix::from_row_slice(
        5,
        5,
        &[
            0, -1, 0, 0, 0, //
            -1, 0, 0, 0, 0, //
            0, 0, -1, 0, 0, //
            0, 0, 0, 0, 1, //
            0, 0, 0, 1, 0,
        ],
    );
    assert_eq!(symmetry_map_s(&x, &swap13(), 1).unwrap(), expected_s1);
    println!("acceptance 2 (frozen reference matrices): PASS (B_1, B_2, both labellings, T and S maps)");
}

#[test]
fn acceptance_03_relabeling_conjugacy_holds_for_random_odd_couplings() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acc_0003);
    let sigma = diamond_relabeling();
    let mut runs = 0usize;
    for (x, tau) in [(diamond(), sigma.clone()), (diamond_relabeled(), sigma.inverse())] {
        for _ in 0..10 {
            let f_down = CouplingFunction::componentwise(
                (0..4).map(|_| ScalarFunction::random_odd(&mut rng)).collect(),
            );
            assert!(
                verify_relabel_conjugacy(&x, &tau, &f_down, 1, Direction::Down).unwrap(),
                "down conjugacy failed"
            );
            let f_up = CouplingFunction::componentwise(
                (0..2).map(|_| ScalarFunction::random_odd(&mut rng)).collect(),
            );
            assert!(
                verify_relabel_conjugacy(&x, &tau, &f_up, 2, Direction::Up).unwrap(),
                "up conjugacy failed"
            );
            runs += 2;
        }
    }
    println!(
        "acceptance 3 (relabeling conjugacy): PASS \
         ({runs} random odd couplings over both labellings, tolerance 1e-9)"
    );
}

#[test]
fn acceptance_04_signed_symmetry_commutes_and_the_unsigned_map_fails() {
    let x = diamond();
    let swap = swap13();
    let odd = ScalarFunction::parse("2*x - 0.3*x^3").unwrap();
    assert!(
        verify_symmetry(&x, &swap, &CouplingFunction::uniform(2, odd.clone()), 2, Direction::Up)
            .unwrap(),
        "signed map does not commute with the up coupling"
    );
    assert!(
        verify_symmetry(&x, &swap, &CouplingFunction::uniform(4, odd.clone()), 1, Direction::Down)
            .unwrap(),
        "signed map does not commute with the down coupling"
    );

    let mut spec = VectorFieldSpec::new(1);
    spec.up = Some(CouplingFunction::uniform(2, odd));
    let field = assemble(&x, &spec).unwrap();
    let s = to_f64(&symmetry_map_s(&x, &swap, 1).unwrap());
    assert!(
        commutation_witness(&s, |p| field.eval(p), 5, 25, 0x0acc_0004, 1e-9).is_none(),
        "signed map unexpectedly fails to commute"
    );
    let s_tilde = to_f64(&symmetry_map_s_tilde(&x, &swap, 1).unwrap());
    let (point, residual) =
        commutation_witness(&s_tilde, |p| field.eval(p), 5, 25, 0x0acc_0004, 1e-9)
            .expect("the unsigned map must fail to commute");
    assert_eq!(point.len(), 5);
    assert!(residual > 1e-9);

    assert_eq!(find_symmetries(&x).len(), 4);
    assert_eq!(find_symmetries(&tetrahedron()).len(), 24);
    println!(
        "acceptance 4 (signed symmetry commutation): PASS \
         (unsigned witness residual {residual:.3e}; group orders 4 and 24)"
    );
}

/// Stable comparison key: `(color index or -1, sign)` per simplex.
fn coloring_key(k: &AntiColoring) -> Vec<(i64, i64)> {
    k.values()
        .iter()
        .map(|v| (v.color().map_or(-1, |c| c as i64), v.sign()))
        .collect()
}

/// All canonical anti-colorings of `n` simplices with at most `max_colors`
/// colors: colors are numbered by first occurrence, first occurrence is
/// positive.
fn canonical_colorings(n: usize, max_colors: usize, d: usize) -> Vec<AntiColoring> {
    fn rec(
        values: &mut Vec<SignedColor>,
        pos: usize,
        used: usize,
        max_colors: usize,
        d: usize,
        out: &mut Vec<AntiColoring>,
    ) {
        if pos == values.len() {
            let colors = (1..=used).map(|i| format!("c{i}")).collect();
            out.push(AntiColoring::new(d, values.clone(), colors).unwrap());
            return;
        }
        let mut options = vec![SignedColor::Zero];
        for c in 0..used {
            options.push(SignedColor::Plus(c));
            options.push(SignedColor::Minus(c));
        }
        if used < max_colors {
            options.push(SignedColor::Plus(used));
        }
        for option in options {
            values[pos] = option;
            let next_used = used.max(option.color().map_or(0, |c| c + 1));
            rec(values, pos + 1, next_used, max_colors, d, out);
        }
        values[pos] = SignedColor::Zero;
    }
    let mut values = vec![SignedColor::Zero; n];
    let mut out = Vec::new();
    rec(&mut values, 0, 0, max_colors, d, &mut out);
    out
}

#[test]
fn acceptance_05_balanced_classes_of_the_two_triangle_complex() {
    let start = Instant::now();
    let x = diamond();

    let trivial = SimplexPartition::trivial(5);
    let classes = enumerate_balanced(&x, 2, &trivial, Direction::Down, None).unwrap();
    let got: BTreeSet<Vec<(i64, i64)>> = classes.iter().map(coloring_key).collect();
    let expected: BTreeSet<Vec<(i64, i64)>> = BTreeSet::from([
        vec![(0, 1), (1, 1)],   // independent colors: the full space
        vec![(0, 1), (0, 1)],   // x1 = x2
        vec![(0, 1), (0, -1)],  // x1 = -x2
        vec![(-1, 0), (-1, 0)], // both pinned to zero
    ]);
    assert_eq!(got, expected, "trivial partition classes differ");

    let split = SimplexPartition::new(5, vec![vec![0], vec![1, 2, 3, 4]]).unwrap();
    let split_classes = enumerate_balanced(&x, 2, &split, Direction::Down, None).unwrap();
    let got_split: BTreeSet<Vec<(i64, i64)>> = split_classes.iter().map(coloring_key).collect();
    let expected_split: BTreeSet<Vec<(i64, i64)>> =
        BTreeSet::from([vec![(0, 1), (1, 1)], vec![(-1, 0), (-1, 0)]]);
    assert_eq!(got_split, expected_split, "split partition classes differ");

    let mut seed = 0x0acc_0005u64;
    let mut cases = 0usize;
    for partition in [&trivial, &split] {
        for k in canonical_colorings(2, 2, 2) {
            let algebraic = is_balanced(&x, &k, partition, Direction::Down).unwrap().balanced;
            seed += 1;
            let dynamic =
                invariance_oracle(&x, &k, partition, Direction::Down, 100, seed).unwrap();
            assert_eq!(
                algebraic, dynamic,
                "oracle disagrees on {:?} under partition {:?}",
                coloring_key(&k),
                partition.classes()
            );
            cases += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}, budget is 30 s");
    println!(
        "acceptance 5 (balanced class enumeration): PASS \
         (4 and 2 classes as expected; oracle agrees on {cases} cases x 100 couplings in {elapsed:?})"
    );
}

#[test]
fn acceptance_06_algebraic_balance_matches_the_dynamic_oracle_at_scale() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acc_0006);
    let mut seed = 0u64;
    let mut colorings = 0usize;
    let mut settings = 0usize;
    for _ in 0..50 {
        let x = random_complex(&mut rng, 5, 3, 3);
        for d in 0..=x.d_max() {
            if x.size(d) > 5 {
                continue;
            }
            let mut directions = Vec::new();
            if d >= 1 {
                directions.push(Direction::Down);
            }
            if d < x.d_max() {
                directions.push(Direction::Up);
            }
            for direction in directions {
                let level = match direction {
                    Direction::Down => d - 1,
                    Direction::Up => d + 1,
                };
                let partition = SimplexPartition::trivial(x.size(level));
                for k in canonical_colorings(x.size(d), 2, d) {
                    let algebraic = is_balanced(&x, &k, &partition, direction).unwrap().balanced;
                    seed += 1;
                    let dynamic =
                        invariance_oracle(&x, &k, &partition, direction, 5, seed).unwrap();
                    assert_eq!(
                        algebraic,
                        dynamic,
                        "disagreement on {:?} at d = {d} ({direction:?})",
                        coloring_key(&k)
                    );
                    colorings += 1;
                }
                settings += 1;
            }
        }
    }
    assert!(settings >= 40, "only {settings} (complex, level, direction) settings were covered");
    assert!(colorings >= 500, "only {colorings} colorings were covered");
    println!(
        "acceptance 6 (balance oracle equivalence at scale): PASS \
         ({colorings} colorings over {settings} settings, zero disagreements)"
    );
}

#[test]
fn acceptance_07_realized_benchmarks_round_trip() {
    let gh = scenario_guckenheimer_holmes(&GhParams::default(), 1e-3, 50.0, 0x0acc_0007).unwrap();
    assert!(gh.raw.aborted_at.is_none(), "cycling run aborted");
    assert!(
        gh.max_conjugacy_residual <= 1e-8,
        "cycling conjugacy residual {} exceeds 1e-8",
        gh.max_conjugacy_residual
    );
    let third = 1.0 / 3.0;
    let mut worst_drift = 0.0f64;
    for k in 0..gh.transformed.len() {
        worst_drift = worst_drift.max((gh.transformed.states[(k, 3)] - third).abs());
    }
    assert!(worst_drift <= 1e-7, "adjoined coordinate drifts {worst_drift:.3e} from 1/3");

    let ls = scenario_lorenz_selkov(&LsParams::default(), 1e-3, 100.0, 0x0acc_0007).unwrap();
    assert!(ls.raw.aborted_at.is_none(), "mixed-block run aborted");
    assert!(
        ls.max_conjugacy_residual <= 1e-8,
        "mixed-block conjugacy residual {} exceeds 1e-8",
        ls.max_conjugacy_residual
    );
    // In transformed coordinates the two blocks evolve independently: the
    // chaotic block's third coordinate sweeps its attractor band while the
    // oscillator pair settles to a stationary late-window amplitude.
    let z_max = ls.transformed.coordinate(2).iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    assert!(
        (25.0..=50.0).contains(&z_max),
        "chaotic block coordinate peak {z_max} escapes [25, 50]"
    );
    let window_amplitude = |lo: f64, hi: f64| -> f64 {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for k in 0..ls.transformed.len() {
            let t = ls.transformed.times[k];
            if t >= lo && t <= hi {
                let v = ls.transformed.states[(k, 3)];
                min = min.min(v);
                max = max.max(v);
            }
        }
        max - min
    };
    let early = window_amplitude(70.0, 85.0);
    let late = window_amplitude(85.0, 100.0);
    assert!(
        (early - late).abs() <= 0.02 * (1.0 + early.max(late)),
        "late-window amplitude is not stationary: {early} vs {late}"
    );
    println!(
        "acceptance 7 (realized benchmark round trips): PASS \
         (residuals {:.3e} and {:.3e}; drift {:.3e}; peak {:.4}; amplitudes {:.4e} vs {:.4e})",
        gh.max_conjugacy_residual, ls.max_conjugacy_residual, worst_drift, z_max, early, late
    );
}

#[test]
fn acceptance_08_positive_weights_preserve_inertia() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acc_0008);
    for trial in 0..100 {
        let n = rng.random_range(1..=6);
        let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = (&raw + raw.transpose()) * 0.5;
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let l = &g * g.transpose() + DMatrix::identity(n, n) * 0.1;
        let direct = inertia(&a, 1e-9).unwrap();
        let weighted = inertia_of_product(&l, &a, 1e-9).unwrap();
        assert_eq!(direct, weighted, "sign counts differ on trial {trial} (dim {n})");
    }
    println!("acceptance 8 (inertia preservation): PASS (100 random pairs, zero failures)");
}

#[test]
fn acceptance_09_projection_and_penrose_identities_on_random_complexes() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acc_0009);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let x = random_complex(&mut rng, 8, 5, 5);
        for d in 0..=x.d_max() {
            let dec = triple_decomposition(&x, d).unwrap();
            let eye = DMatrix::identity(dec.n, dec.n);
            worst = worst.max(max_norm(&(&dec.p + &dec.q + &dec.r - &eye)));
            worst = worst.max(max_norm(&(&dec.p * &dec.p - &dec.p)));
            worst = worst.max(max_norm(&(&dec.q * &dec.q - &dec.q)));
            worst = worst.max(max_norm(&(&dec.r * &dec.r - &dec.r)));
            worst = worst.max(max_norm(&(&dec.p * &dec.q)));
            worst = worst.max(max_norm(&(&dec.p * &dec.r)));
            worst = worst.max(max_norm(&(&dec.q * &dec.r)));
            let bdt = to_f64(&x.boundary_or_zero(d)).transpose();
            if bdt.ncols() > 0 {
                worst = worst.max(max_norm(&(&dec.p * &bdt - &bdt)));
            }
            let bup = to_f64(&x.boundary_or_zero(d + 1));
            if bup.ncols() > 0 {
                worst = worst.max(max_norm(&(&dec.q * &bup - &bup)));
            }
            for b in [to_f64(&x.boundary_or_zero(d)), bup] {
                if b.nrows() == 0 || b.ncols() == 0 {
                    continue;
                }
                let p = pseudoinverse(&b).pinv;
                worst = worst.max(max_norm(&(&b * &p * &b - &b)));
                worst = worst.max(max_norm(&(&p * &b * &p - &p)));
                let bp = &b * &p;
                let pb = &p * &b;
                worst = worst.max(max_norm(&(&bp - bp.transpose())));
                worst = worst.max(max_norm(&(&pb - pb.transpose())));
            }
        }
    }
    assert!(worst <= 1e-9, "worst identity residual {worst:.3e} exceeds 1e-9");
    println!(
        "acceptance 9 (projection and Penrose identities): PASS \
         (worst max-norm residual {worst:.3e} over 200 complexes)"
    );
}

#[test]
fn acceptance_10_integrator_error_shrinks_at_fourth_order() {
    let decay = CouplingFunction::uniform(1, ScalarFunction::parse("-x").unwrap());
    let field = simplicial_flows::dynamics::AssembledField::from_parts(
        1,
        Some(decay),
        None,
        None,
    )
    .unwrap();
    let x0 = DVector::from_vec(vec![1.0]);
    let exact = (-1.0f64).exp();
    let endpoint_error = |h: f64| -> f64 {
        let traj = integrate(&field, &x0, h, 1.0).unwrap();
        (traj.final_state()[0] - exact).abs()
    };
    let ratio = endpoint_error(0.01) / endpoint_error(0.005);
    assert!(
        (12.0..=20.0).contains(&ratio),
        "error ratio {ratio} for a halved step is outside [12, 20]"
    );
    println!("acceptance 10 (integrator convergence order): PASS (error ratio {ratio:.6})");
}
