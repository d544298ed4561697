mod common;

use clue_core::matching::{matching_score, optimal_matching, SimilarityMatrix};
use proptest::prelude::*;

fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(n, m)| prop::collection::vec(prop::collection::vec(0.0f64..=1.0, m), n))
}

fn build(rows: &[Vec<f64>]) -> SimilarityMatrix {
    SimilarityMatrix::from_rows(rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn agrees_with_enumeration(rows in matrix_strategy()) {
        let m = rows[0].len();
        let got = optimal_matching(&build(&rows));
        let (want, pairs) = common::brute_matching(&rows, m);
        prop_assert!((got.score - want).abs() < 1e-9);
        prop_assert_eq!(got.pairs, pairs);
        prop_assert!((matching_score(&build(&rows)) - want).abs() < 1e-9);
    }

    #[test]
    fn pairs_are_an_injection(rows in matrix_strategy()) {
        let (n, m) = (rows.len(), rows[0].len());
        let r = optimal_matching(&build(&rows));
        prop_assert_eq!(r.pairs.len(), n.min(m));
        let mut cols: Vec<usize> = r.pairs.iter().map(|p| p.1).collect();
        cols.sort_unstable();
        cols.dedup();
        prop_assert_eq!(cols.len(), r.pairs.len());
        prop_assert!(r.pairs.windows(2).all(|w| w[0].0 < w[1].0));
        prop_assert!((0.0..=1.0).contains(&r.score));
    }

    #[test]
    fn column_order_does_not_matter(rows in matrix_strategy(), seed in any::<u64>()) {
        let m = rows[0].len();
        let mut perm: Vec<usize> = (0..m).collect();
        let mut s = seed;
        for i in (1..m).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let shuffled: Vec<Vec<f64>> = rows.iter().map(|r| perm.iter().map(|&j| r[j]).collect()).collect();
        let a = matching_score(&build(&rows));
        let b = matching_score(&build(&shuffled));
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn extra_candidates_never_hurt(rows in matrix_strategy(), extra in prop::collection::vec(0.0f64..=1.0, 6)) {
        let before = matching_score(&build(&rows));
        let wider: Vec<Vec<f64>> = rows.iter().zip(&extra).map(|(r, &e)| {
            let mut r = r.clone();
            r.push(e);
            r
        }).collect();
        prop_assert!(matching_score(&build(&wider)) >= before - 1e-12);
    }

    #[test]
    fn perfect_diagonal_scores_one(n in 1usize..=8, noise in prop::collection::vec(0.0f64..0.99, 64)) {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { noise[(i * 8 + j) % 64] }).collect())
            .collect();
        let r = optimal_matching(&build(&rows));
        prop_assert_eq!(r.score, 1.0);
        prop_assert_eq!(r.pairs, (0..n).map(|i| (i, i)).collect::<Vec<_>>());
    }
}

#[test]
fn surplus_reference_rows_are_penalized() {
    // 3 reference elements, one candidate: best single pair over n = 3
    let rows = vec![vec![0.2], vec![0.9], vec![0.4]];
    let r = optimal_matching(&build(&rows));
    assert!((r.score - 0.3).abs() < 1e-12);
    assert_eq!(r.pairs, vec![(1, 0)]);
}

#[test]
fn larger_instances_stay_fast() {
    let n = 40;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| ((i * 31 + j * 17) % 97) as f64 / 96.0).collect())
        .collect();
    let start = std::time::Instant::now();
    let r = optimal_matching(&build(&rows));
    assert!(r.score > 0.0 && r.score <= 1.0);
    assert!(start.elapsed().as_secs() < 5);
}
