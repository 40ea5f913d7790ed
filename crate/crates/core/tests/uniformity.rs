use loopcast::harness::{chi_square_test, uniform_counts, uniform_reference, UNIFORM_BINS};

#[test]
fn flat_disk_reference_is_rejected() {
    let counts = uniform_counts(19, 400_000, 50).unwrap();
    let w = 2.0 / UNIFORM_BINS as f64;
    let mut flat = vec![0.0; UNIFORM_BINS * UNIFORM_BINS];
    for j in 0..UNIFORM_BINS {
        for i in 0..UNIFORM_BINS {
            let (x, y) = (-1.0 + (i as f64 + 0.5) * w, -1.0 + (j as f64 + 0.5) * w);
            if x.hypot(y) < 1.0 {
                flat[j * UNIFORM_BINS + i] = 1.0;
            }
        }
    }
    let total: f64 = flat.iter().sum();
    let flat: Vec<f64> = flat.iter().map(|v| v / total).collect();
    let (stat, _, q) = chi_square_test(&counts, &flat).unwrap();
    assert!(stat > 2.0 * q, "{stat} vs {q}");
    let (stat, _, q) = chi_square_test(&counts, &uniform_reference()).unwrap();
    assert!(stat < q, "{stat} vs {q}");
}

#[test]
fn reference_is_radially_decreasing_and_normalised() {
    let p = uniform_reference();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let h = UNIFORM_BINS / 2;
    let center = p[h * UNIFORM_BINS + h];
    let rim = p[h * UNIFORM_BINS + UNIFORM_BINS - 2];
    assert!(center > rim);
    assert_eq!(p[0], 0.0);
}
