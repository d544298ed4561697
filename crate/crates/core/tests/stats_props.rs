use clue_core::difficulty::{difficulty_ratings, Band, TaskFeatures};
use clue_core::passk::{pass_at_k, pass_at_k_single, TaskSampleRecord};
use clue_core::stats::{mean_stderr, pearson, spearman};
use proptest::prelude::*;

fn paired(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    len.prop_flat_map(|n| (prop::collection::vec(-50.0f64..50.0, n), prop::collection::vec(-50.0f64..50.0, n)))
        .prop_filter("non-constant", |(x, y)| {
            x.iter().any(|v| *v != x[0]) && y.iter().any(|v| *v != y[0])
        })
}

/// Subsets of size k drawn from n samples of which c pass, counted directly.
fn pass_by_enumeration(n: usize, c: usize, k: usize) -> f64 {
    let (mut hit, mut all) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        all += 1;
        // samples 0..c pass
        if mask & ((1u32 << c) - 1) != 0 {
            hit += 1;
        }
    }
    hit as f64 / all as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pearson_is_symmetric((x, y) in paired(3..=40)) {
        let a = pearson(&x, &y).unwrap();
        let b = pearson(&y, &x).unwrap();
        prop_assert!((a.coefficient - b.coefficient).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&a.coefficient));
        prop_assert!((0.0..=1.0).contains(&a.p_value));
    }

    #[test]
    fn pearson_is_affine_invariant((x, y) in paired(3..=40), a in 0.1f64..10.0, b in -100.0f64..100.0) {
        let r = pearson(&x, &y).unwrap().coefficient;
        let up: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let down: Vec<f64> = x.iter().map(|v| -a * v + b).collect();
        prop_assert!((pearson(&up, &y).unwrap().coefficient - r).abs() < 1e-9);
        prop_assert!((pearson(&down, &y).unwrap().coefficient + r).abs() < 1e-9);
    }

    #[test]
    fn spearman_ignores_monotone_transforms((x, y) in paired(3..=40)) {
        let r = spearman(&x, &y).unwrap().coefficient;
        let cubed: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v).collect();
        let exp: Vec<f64> = y.iter().map(|v| (v / 10.0).exp()).collect();
        prop_assert!((spearman(&cubed, &exp).unwrap().coefficient - r).abs() < 1e-12);
    }

    #[test]
    fn stderr_shrinks_with_duplication(values in prop::collection::vec(0.0f64..1.0, 2..20), copies in 2usize..6) {
        let (m1, s1) = mean_stderr(&values).unwrap();
        let repeated: Vec<f64> = values.iter().cycle().take(values.len() * copies).copied().collect();
        let (m2, s2) = mean_stderr(&repeated).unwrap();
        prop_assert!((m1 - m2).abs() < 1e-12);
        prop_assert!(s2 <= s1 + 1e-15);
    }

    #[test]
    fn pass_at_k_matches_subset_counting(n in 1usize..=10, c_frac in 0.0f64..=1.0, k_frac in 0.0f64..=1.0) {
        let c = (c_frac * n as f64).round() as usize;
        let k = 1 + (k_frac * (n - 1) as f64).round() as usize;
        let got = pass_at_k_single(&TaskSampleRecord::new(0, n, c), k).unwrap();
        prop_assert!((got - pass_by_enumeration(n, c, k)).abs() < 1e-12);
    }

    #[test]
    fn pass_at_k_grows_with_k(counts in prop::collection::vec((1usize..=8, 0.0f64..=1.0), 1..10)) {
        let records: Vec<TaskSampleRecord> = counts
            .iter()
            .enumerate()
            .map(|(i, &(n, f))| TaskSampleRecord::new(i as u64, n, (f * n as f64).floor() as usize))
            .collect();
        let max_k = records.iter().map(|r| r.n).min().unwrap();
        let mut last = 0.0;
        for k in 1..=max_k {
            let v = pass_at_k(&records, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!(v >= last - 1e-12);
            last = v;
        }
    }
}

#[test]
fn stderr_of_two_points() {
    // sample std of [0, 1] is 1/sqrt(2); over sqrt(2) gives 0.5
    let (m, se) = mean_stderr(&[0.0, 1.0]).unwrap();
    assert_eq!(m, 0.5);
    assert!((se - 0.5).abs() < 1e-15);
    assert_eq!(mean_stderr(&[0.5, 0.5, 0.5]).unwrap(), (0.5, 0.0));
    assert!(mean_stderr(&[1.0]).is_err());
}

#[test]
fn pass_at_k_errors() {
    assert!(pass_at_k(&[], 1).is_err());
    assert!(pass_at_k_single(&TaskSampleRecord::new(0, 3, 1), 4).is_err());
    assert!(pass_at_k_single(&TaskSampleRecord::new(0, 3, 4), 1).is_err());
    assert!(pass_at_k_single(&TaskSampleRecord::new(0, 3, 1), 0).is_err());
}

// ---------------------------------------------------------------------------
// Difficulty: a spreadsheet-style recomputation over a fixed 10-task set.

fn synthetic_tasks() -> Vec<TaskFeatures> {
    let rows = [
        (3.0, 2.0, 1.0, 2.0, 80.0),
        (5.0, 3.5, 2.0, 4.0, 70.5),
        (4.0, 1.0, 0.5, 3.0, 65.0),
        (8.0, 4.0, 3.0, 9.0, 40.2),
        (6.0, 2.5, 1.5, 5.0, 55.0),
        (12.0, 3.0, 2.5, 14.0, 30.0),
        (7.0, 5.0, 4.0, 6.0, 62.3),
        (9.0, 2.0, 1.0, 10.0, 48.8),
        (10.0, 4.5, 3.5, 12.0, 35.1),
        (2.0, 1.5, 0.0, 1.0, 90.0),
    ];
    rows.iter()
        .map(|&(c, a, m, r, read)| TaskFeatures {
            class_count: c,
            avg_attributes: a,
            avg_methods: m,
            relationship_count: r,
            readability: read,
        })
        .collect()
}

#[test]
fn difficulty_matches_column_by_column_recomputation() {
    let tasks = synthetic_tasks();
    let report = difficulty_ratings(&tasks).unwrap();
    let n = tasks.len();
    let cols: Vec<Vec<f64>> = vec![
        tasks.iter().map(|t| t.class_count).collect(),
        tasks.iter().map(|t| t.avg_attributes).collect(),
        tasks.iter().map(|t| t.avg_methods).collect(),
        tasks.iter().map(|t| t.relationship_count).collect(),
        tasks.iter().map(|t| t.readability).collect(),
    ];
    // normalize; readability is a benefit-type column, so it is inverted
    let norm: Vec<Vec<f64>> = cols
        .iter()
        .enumerate()
        .map(|(j, col)| {
            let lo = col.iter().cloned().fold(f64::MAX, f64::min);
            let hi = col.iter().cloned().fold(f64::MIN, f64::max);
            col.iter().map(|v| if j == 4 { (hi - v) / (hi - lo) } else { (v - lo) / (hi - lo) }).collect()
        })
        .collect();
    let d: Vec<f64> = norm
        .iter()
        .map(|col| {
            let s: f64 = col.iter().sum();
            let e: f64 = col.iter().filter(|v| **v > 0.0).map(|v| (v / s) * (v / s).ln()).sum::<f64>() / -(n as f64).ln();
            1.0 - e
        })
        .collect();
    let dsum: f64 = d.iter().sum();
    let weights: Vec<f64> = d.iter().map(|x| x / dsum).collect();
    for (got, want) in report.weights.iter().zip(&weights) {
        assert!((got - want).abs() < 1e-9);
    }
    let ratings: Vec<f64> = (0..n).map(|i| (0..5).map(|j| norm[j][i] * weights[j]).sum()).collect();
    for (got, want) in report.ratings.iter().zip(&ratings) {
        assert!((got - want).abs() < 1e-9);
    }

    let mut sorted = ratings.clone();
    sorted.sort_by(f64::total_cmp);
    let pct = |q: f64| {
        let pos = q * (n - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    };
    let (t1, t2) = (pct(0.33), pct(0.67));
    assert!((report.thresholds.0 - t1).abs() < 1e-9 && (report.thresholds.1 - t2).abs() < 1e-9);
    for (band, r) in report.bands.iter().zip(&ratings) {
        let want = if *r <= t1 {
            Band::Simple
        } else if *r <= t2 {
            Band::Moderate
        } else {
            Band::Hard
        };
        assert_eq!(*band, want);
    }
    // the smallest, most readable task is simple; the largest is hard
    assert_eq!(report.bands[9], Band::Simple);
    assert_eq!(report.bands[5], Band::Hard);
}
