use super::*;
use crate::flexnum::round_to_precision;

fn cfg(p: &[u32]) -> PrecisionConfig {
    PrecisionConfig::new(p.to_vec()).unwrap()
}

fn input(values: Vec<Vec<f64>>) -> InputSet {
    InputSet::new(values, 0).unwrap()
}

#[test]
fn catalog_variable_counts_match() {
    let expected = [
        ("fwt", 2usize),
        ("saxpy", 3),
        ("convolution", 4),
        ("dwt", 7),
        ("correlation", 7),
        ("blackscholes", 15),
    ];
    let cat = catalog();
    assert_eq!(cat.len(), expected.len());
    for (bench, (name, n_var)) in cat.iter().zip(expected) {
        assert_eq!(bench.name(), name);
        assert_eq!(bench.n_var(), n_var, "{name}");
        assert_eq!(bench.graph().n_nodes(), n_var, "{name}");
    }
    assert!(by_name("nope").is_err());
}

/// Every kernel's executed cast sites must equal its declared edge set.
#[test]
fn kernels_match_declared_graphs() {
    let mut all: Vec<Benchmark> = catalog();
    all.push(fig1_expr());
    for bench in &all {
        let config = cfg(&(0..bench.n_var())
            .map(|i| 2 + (i as u32 * 7) % 51)
            .collect::<Vec<_>>());
        let inp = &bench.generate_input_sets(1, 5)[0];
        let (_, _, trace) = bench.run_traced(&config, inp).unwrap();
        let declared: std::collections::BTreeSet<(usize, usize)> =
            bench.graph().edges().iter().copied().collect();
        assert_eq!(
            trace,
            declared,
            "{}: cast sites diverge from declared graph",
            bench.name()
        );
        assert_eq!(declared.len(), bench.graph().edges().len());
    }
}

#[test]
fn saxpy_hand_reference() {
    let bench = by_name("saxpy").unwrap();
    let inp = input(vec![vec![2.0], vec![1.0, 2.0], vec![3.0, 4.0]]);
    assert_eq!(bench.reference_output(&inp).unwrap(), vec![5.0, 8.0]);
}

/// Recursive textbook Walsh-Hadamard transform, natural ordering.
fn wht_oracle(x: &[f64]) -> Vec<f64> {
    if x.len() == 1 {
        return x.to_vec();
    }
    let h = x.len() / 2;
    let plus: Vec<f64> = (0..h).map(|i| x[i] + x[i + h]).collect();
    let minus: Vec<f64> = (0..h).map(|i| x[i] - x[i + h]).collect();
    let mut out = wht_oracle(&plus);
    out.extend(wht_oracle(&minus));
    out
}

#[test]
fn fwt_reference_matches_walsh_hadamard_oracle() {
    let bench = by_name("fwt").unwrap();
    let impulse = input(vec![vec![1.0, 0.0, 0.0, 0.0]]);
    assert_eq!(
        bench.reference_output(&impulse).unwrap(),
        vec![1.0, 1.0, 1.0, 1.0]
    );

    let mut rng = <StdRng as SeedableRng>::seed_from_u64(11);
    for len in [8usize, 16, 64] {
        let row: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let inp = input(vec![row.clone()]);
        let got = bench.reference_output(&inp).unwrap();
        let want = wht_oracle(&row);
        // The oracle sums in a different association order, so compare to
        // rounding noise rather than bitwise.
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-12 * w.abs().max(1.0), "len={len}");
        }
    }
}

#[test]
fn fig1_fixture_shape() {
    let bench = fig1_expr();
    assert_eq!(bench.n_var(), 4);
    assert_eq!(bench.graph().edges().len(), 3);
    assert_eq!(bench.graph().edges(), &[(1, 3), (2, 3), (3, 0)]);
}

/// Hand-evaluates the cast chain of the expression fixture at the worked
/// configuration [x1, x2, x3, x4] = [27, 45, 35, 40]: operands round at
/// their variables, cast to the temporary's 40 bits, the sum rounds at 40,
/// and the assignment into V1 rounds at 27.
#[test]
fn fig1_cast_chain() {
    let bench = fig1_expr();
    let config = cfg(&[27, 45, 35, 40]);
    let spec = |m: u32| crate::flexnum::PrecisionSpec::new(m).unwrap();
    let cases = [(0.7234881123, -0.1901229), (0.33333333333, 0.1010101)];
    for (a, b) in cases {
        let (out, flags) = bench.run(&config, &input(vec![vec![a, b]])).unwrap();
        let a45 = round_to_precision(a, spec(45));
        let b35 = round_to_precision(b, spec(35));
        let a40 = round_to_precision(a45, spec(40));
        let b40 = round_to_precision(b35, spec(40));
        let sum40 = round_to_precision(a40 + b40, spec(40));
        let v1 = round_to_precision(sum40, spec(27));
        assert_eq!(out, vec![v1]);
        assert!(!flags.any());
    }
}

#[test]
fn max_precision_bit_matches_plain_kernels() {
    // saxpy written in plain f64.
    let bench = by_name("saxpy").unwrap();
    let inp = &bench.generate_input_sets(1, 3)[0];
    let (out, flags) = bench.run(&cfg(&[52, 52, 52]), inp).unwrap();
    assert!(!flags.any());
    let a = inp.values[0][0];
    for (i, o) in out.iter().enumerate() {
        let plain = a * inp.values[1][i] + inp.values[2][i];
        assert_eq!(o.to_bits(), plain.to_bits());
    }

    // fwt written in plain f64 (iterative, same traversal).
    let bench = by_name("fwt").unwrap();
    let inp = &bench.generate_input_sets(1, 4)[0];
    let (out, _) = bench.run(&cfg(&[52, 52]), inp).unwrap();
    let mut plain = inp.values[0].clone();
    let n = plain.len();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(h * 2) {
            for j in block..block + h {
                let (x, y) = (plain[j], plain[j + h]);
                plain[j] = x + y;
                plain[j + h] = x - y;
            }
        }
        h *= 2;
    }
    for (o, p) in out.iter().zip(&plain) {
        assert_eq!(o.to_bits(), p.to_bits());
    }
}

#[test]
fn reference_equals_max_precision_run() {
    let mut all = catalog();
    all.push(fig1_expr());
    for bench in &all {
        for inp in bench.generate_input_sets(2, 21) {
            let reference = bench.reference_output(&inp).unwrap();
            let (run_out, flags) = bench
                .run(&PrecisionConfig::all_max(bench.n_var()), &inp)
                .unwrap();
            assert_eq!(reference, run_out, "{}", bench.name());
            assert!(!flags.fatal(), "{}", bench.name());
        }
    }
}

#[test]
fn runs_are_deterministic() {
    for bench in catalog() {
        let config = cfg(&(0..bench.n_var())
            .map(|i| 3 + (i as u32 * 11) % 49)
            .collect::<Vec<_>>());
        let inp = &bench.generate_input_sets(1, 9)[0];
        let (a, fa) = bench.run(&config, inp).unwrap();
        let (b, fb) = bench.run(&config, inp).unwrap();
        assert_eq!(a, b);
        assert_eq!(fa, fb);
    }
}

#[test]
fn convolution_low_precision_accumulator_deviates() {
    let bench = by_name("convolution").unwrap();
    let config = cfg(&[52, 52, 2, 52]); // 2-bit accumulator
    let mut worst = 0f64;
    for seed in 0..5 {
        let inp = &bench.generate_input_sets(1, seed)[0];
        let reference = bench.reference_output(inp).unwrap();
        let (out, _) = bench.run(&config, inp).unwrap();
        for (o, r) in out.iter().zip(&reference) {
            if r.abs() > 0.01 {
                let e = (o - r) * (o - r) / (r * r);
                worst = worst.max(e);
            }
        }
    }
    assert!(worst > 1e-3, "expected a large deviation, got {worst}");
}

#[test]
fn input_generation_is_deterministic_and_in_range() {
    let bench = by_name("blackscholes").unwrap();
    let a = bench.generate_input_sets(30, 42);
    let b = bench.generate_input_sets(30, 42);
    assert_eq!(a, b);
    assert_eq!(a.len(), 30);
    for (i, set) in a.iter().enumerate() {
        for (j, other) in a.iter().enumerate() {
            if i != j {
                assert_ne!(set.values, other.values, "input sets {i} and {j} collide");
            }
        }
        for row in &set.values {
            assert!(row[0] > 0.0 && row[1] > 0.0 && row[3] > 0.0 && row[4] > 0.0);
        }
    }
    let c = bench.generate_input_sets(30, 43);
    assert_ne!(a[0].values, c[0].values);
}

#[test]
fn validation_errors() {
    let bench = by_name("saxpy").unwrap();
    let inp = input(vec![vec![2.0], vec![1.0], vec![1.0]]);
    // Wrong arity.
    assert!(matches!(
        bench.run(&cfg(&[52, 52]), &inp),
        Err(Error::ArityMismatch {
            expected: 3,
            got: 2
        })
    ));
    // Wrong shape.
    let bad = input(vec![vec![2.0], vec![1.0, 2.0], vec![1.0]]);
    assert!(matches!(
        bench.run(&cfg(&[52, 52, 52]), &bad),
        Err(Error::InvalidInput(_))
    ));
    // Non-finite inputs rejected at construction.
    assert!(InputSet::new(vec![vec![f64::NAN]], 0).is_err());
    // Non-power-of-two FWT vector.
    let fwt = by_name("fwt").unwrap();
    assert!(fwt
        .run(&cfg(&[52, 52]), &input(vec![vec![1.0; 6]]))
        .is_err());
    // BlackScholes domain bounds.
    let bs = by_name("blackscholes").unwrap();
    let bad = input(vec![vec![-5.0, 100.0, 0.05, 0.2, 1.0]]);
    assert!(bs.run(&PrecisionConfig::all_max(15), &bad).is_err());
}
