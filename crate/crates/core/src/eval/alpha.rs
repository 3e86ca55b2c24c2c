use std::collections::BTreeMap;

use serde::Serialize;

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Alpha {
    pub value: f64,
    /// Set when every pairable value was identical, so expected
    /// disagreement is zero and the value is defined as 1.
    pub degenerate: bool,
}

/// Krippendorff's alpha for nominal data.
///
/// `matrix[item][annotator]` holds a category or `None` for a missing
/// rating. Items with fewer than two ratings are not pairable and are
/// ignored.
pub fn krippendorff_alpha_nominal(matrix: &[Vec<Option<u32>>]) -> Result<Alpha, EvalError> {
    let Some(first) = matrix.first() else {
        return Err(EvalError::NoItems);
    };
    let annotators = first.len();
    if annotators < 2 {
        return Err(EvalError::TooFewAnnotators(annotators));
    }
    // Coincidence counts o[(c, k)].
    let mut coincidence: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for (item, row) in matrix.iter().enumerate() {
        if row.len() != annotators {
            return Err(EvalError::RaggedMatrix {
                item,
                expected: annotators,
                got: row.len(),
            });
        }
        let values: Vec<u32> = row.iter().flatten().copied().collect();
        let m = values.len();
        if m < 2 {
            continue;
        }
        let w = 1.0 / (m - 1) as f64;
        for (i, &c) in values.iter().enumerate() {
            for (j, &k) in values.iter().enumerate() {
                if i != j {
                    *coincidence.entry((c, k)).or_default() += w;
                }
            }
        }
    }
    let mut marginals: BTreeMap<u32, f64> = BTreeMap::new();
    for (&(c, _), &o) in &coincidence {
        *marginals.entry(c).or_default() += o;
    }
    let n: f64 = marginals.values().sum();
    if n == 0.0 {
        return Err(EvalError::NoItems);
    }
    let observed: f64 = coincidence.iter().filter(|((c, k), _)| c != k).map(|(_, o)| o).sum::<f64>() / n;
    let mut expected = 0.0;
    for (&c, &nc) in &marginals {
        for (&k, &nk) in &marginals {
            if c != k {
                expected += nc * nk;
            }
        }
    }
    expected /= n * (n - 1.0);
    if expected == 0.0 {
        return Ok(Alpha {
            value: 1.0,
            degenerate: true,
        });
    }
    Ok(Alpha {
        value: 1.0 - observed / expected,
        degenerate: false,
    })
}

/// Binary item matrix from per-annotator selections.
///
/// `selections[task][annotator]` lists the chosen utterance indices of that
/// task; each task contributes `items_per_task` items, one per utterance.
pub fn selection_matrix(selections: &[Vec<Vec<usize>>], items_per_task: usize) -> Vec<Vec<Option<u32>>> {
    let mut rows = Vec::with_capacity(selections.len() * items_per_task);
    for task in selections {
        for u in 0..items_per_task {
            rows.push(task.iter().map(|sel| Some(u32::from(sel.contains(&u)))).collect());
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn binary(rows: &[&[u32]]) -> Vec<Vec<Option<u32>>> {
        rows.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect()
    }

    #[test]
    fn perfect_agreement() {
        let a = krippendorff_alpha_nominal(&binary(&[&[1, 1, 1], &[0, 0, 0], &[1, 1, 1]])).unwrap();
        assert_eq!(a, Alpha { value: 1.0, degenerate: false });
    }

    #[test]
    fn constant_data_is_flagged() {
        let a = krippendorff_alpha_nominal(&binary(&[&[1, 1], &[1, 1]])).unwrap();
        assert!(a.degenerate);
        assert_eq!(a.value, 1.0);
    }

    #[test]
    fn textbook_two_coder_example() {
        // 2 coders, 10 items; hand count: o01 = o10 = 2, o00 = 8, o11 = 8, n = 20.
        // D_o = 4/20, D_e = 2*10*10/(20*19) ⇒ alpha = 1 - 0.2 * 380/200 = 0.62.
        let a: &[&[u32]] = &[
            &[0, 0], &[0, 0], &[0, 0], &[0, 0], &[1, 1], &[1, 1], &[1, 1], &[1, 1], &[0, 1], &[1, 0],
        ];
        let got = krippendorff_alpha_nominal(&binary(a)).unwrap().value;
        assert!((got - 0.62).abs() < 1e-12, "{got}");
    }

    #[test]
    fn input_errors() {
        assert_eq!(krippendorff_alpha_nominal(&[]), Err(EvalError::NoItems));
        assert_eq!(krippendorff_alpha_nominal(&binary(&[&[1]])), Err(EvalError::TooFewAnnotators(1)));
        let ragged = vec![vec![Some(1), Some(0)], vec![Some(1)]];
        assert!(matches!(krippendorff_alpha_nominal(&ragged), Err(EvalError::RaggedMatrix { item: 1, .. })));
    }

    #[test]
    fn missing_ratings_are_skipped() {
        let m = vec![vec![Some(1), Some(1), None], vec![Some(0), Some(0), Some(0)], vec![None, Some(1), None]];
        let a = krippendorff_alpha_nominal(&m).unwrap();
        assert_eq!(a.value, 1.0);
    }

    #[test]
    fn random_ratings_give_alpha_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m: Vec<Vec<Option<u32>>> = (0..10_000)
            .map(|_| (0..4).map(|_| Some(rng.random_range(0..2))).collect())
            .collect();
        let a = krippendorff_alpha_nominal(&m).unwrap().value;
        assert!(a.abs() < 0.05, "{a}");
    }

    #[test]
    fn selection_matrix_layout() {
        let m = selection_matrix(&[vec![vec![1], vec![1, 2]]], 3);
        assert_eq!(m, vec![vec![Some(0), Some(0)], vec![Some(1), Some(1)], vec![Some(0), Some(1)]]);
    }

    proptest! {
        #[test]
        fn invariant_to_row_and_column_order(
            m in prop::collection::vec(prop::collection::vec(0u32..2, 3), 2..30),
            seed in any::<u64>(),
        ) {
            let base: Vec<Vec<Option<u32>>> = m.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect();
            let a = krippendorff_alpha_nominal(&base).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rows = base.clone();
            for i in (1..rows.len()).rev() {
                rows.swap(i, rng.random_range(0..=i));
            }
            let cols = rows.iter().map(|r| vec![r[2], r[0], r[1]]).collect::<Vec<_>>();
            let b = krippendorff_alpha_nominal(&cols).unwrap();
            prop_assert_eq!(a.degenerate, b.degenerate);
            prop_assert!((a.value - b.value).abs() < 1e-12);
        }
    }
}
