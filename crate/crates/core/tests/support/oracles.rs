//! Hand-counted metric tables and independent recomputations.

use semff::eval::{
    harmonic_mean, mrr, output_speedup, overall_performance, precision_recall_f1, roc_auc, uniform_selection,
    uniform_skip, OS_SIGMA_FRACTION,
};

/// Counts relevant frames by brute force over the whole video.
fn oracle_prf(selected: &[usize], segments: &[(usize, usize)]) -> (f64, f64, f64) {
    let rel = |f: usize| segments.iter().any(|&(s, e)| s <= f && f <= e);
    let hits = selected.iter().filter(|&&f| rel(f)).count() as f64;
    let relevant: usize = segments.iter().map(|&(s, e)| e - s + 1).sum();
    let p = hits / selected.len() as f64;
    let r = hits / relevant as f64;
    let f1 = if hits == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f1)
}

pub fn f1_table() {
    let cases: Vec<(Vec<usize>, Vec<(usize, usize)>, usize)> = vec![
        ((1..=10).collect(), vec![(1, 5)], 20),
        ((1..=5).collect(), vec![(1, 5)], 5),
        (vec![6, 7, 8], vec![(1, 5)], 10),
        (vec![1, 13, 25, 37, 49], vec![(10, 30), (40, 45)], 50),
        (uniform_skip(1200, 12), vec![(100, 199), (500, 649), (900, 1000)], 1200),
    ];
    for (sel, segs, n) in cases {
        let got = precision_recall_f1(&sel, &segs, n).unwrap();
        let (p, r, f1) = oracle_prf(&sel, &segs);
        assert!((got.precision - p).abs() < 1e-15);
        assert!((got.recall - r).abs() < 1e-15);
        assert!((got.f1 - f1).abs() < 1e-12);
    }
    let half = precision_recall_f1(&(1..=10).collect::<Vec<_>>(), &[(1, 5)], 20).unwrap();
    assert_eq!((half.precision, half.recall), (0.5, 1.0));
    assert!((half.f1 - 2.0 / 3.0).abs() < 1e-12);
}

pub fn mrr_table() {
    assert_eq!(mrr(&[1, 1, 1]).unwrap(), 1.0);
    assert!((mrr(&[1, 2, 4]).unwrap() - 1.75 / 3.0).abs() < 1e-15);
    assert!(mrr(&[1_000_000]).unwrap() < 1.1e-6);
    assert!(mrr(&[]).is_err());
    assert!(mrr(&[0]).is_err());
}

pub fn overall_performance_recomputes_published_rows() {
    // written out without the library's helpers
    let op = |f1: f64, os: f64, s: f64| {
        let g = (-0.5 * ((os - s) / (0.0838 * s)).powi(2)).exp();
        2.0 * f1 * g / (f1 + g)
    };
    assert!((overall_performance(0.1786, 11.68, 12.0) - 0.3007).abs() <= 5e-4);
    assert!((overall_performance(0.1886, 11.90, 12.0) - 0.3171).abs() <= 5e-4);
    for (f1, os, s) in [(0.1786, 11.68, 12.0), (0.5, 3.0, 4.0), (0.9, 20.0, 20.0)] {
        assert!((overall_performance(f1, os, s) - op(f1, os, s)).abs() < 1e-15);
    }
    assert_eq!(OS_SIGMA_FRACTION, 0.0838);
}

pub fn overall_performance_is_a_symmetric_bounded_mean() {
    for &(a, b) in &[(0.2, 0.7), (0.0, 0.4), (1.0, 1.0), (0.0, 0.0), (0.33, 0.33)] {
        assert_eq!(harmonic_mean(a, b), harmonic_mean(b, a));
        let h = harmonic_mean(a, b);
        assert!((0.0..=1.0).contains(&h));
        assert_eq!(h == 0.0, a == 0.0 || b == 0.0);
    }
}

pub fn speedup_and_auc_examples() {
    assert_eq!(output_speedup(1200, 100).unwrap(), 12.0);
    assert!(output_speedup(10, 0).is_err());
    assert_eq!(roc_auc(&[0.9, 0.8, 0.4, 0.3], &[true, false, true, false]).unwrap(), 0.75);
    assert_eq!(roc_auc(&[0.5, 0.5], &[true, false]).unwrap(), 0.5);
    assert_eq!(roc_auc(&[0.1, 0.9], &[false, true]).unwrap(), 1.0);
}

pub fn uniform_baselines() {
    assert_eq!(uniform_skip(25, 12), vec![1, 13, 25]);
    assert_eq!(output_speedup(1200, uniform_skip(1200, 12).len()).unwrap(), 12.0);
    let u = uniform_selection(1000, 7);
    assert_eq!(u.len(), 7);
    assert_eq!((u[0], u[6]), (1, 1000));
    assert!(u.windows(2).all(|w| w[1] > w[0]));
}
