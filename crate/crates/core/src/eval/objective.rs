use std::collections::BTreeSet;

/// Weight of the firing-count penalty in [`objective_synaptic`].
pub const FIRING_PENALTY: f64 = 0.15;

/// Sum over tasks of the share of score mass on label memories.
///
/// `scores[n][i]` is the score of memory `i` in task `n`. A task whose
/// scores sum to zero contributes nothing.
pub fn objective_adapted(scores: &[Vec<f64>], labels: &[Vec<usize>]) -> f64 {
    let mut total = 0.0;
    for (n, (s, y)) in scores.iter().zip(labels).enumerate() {
        let sum: f64 = s.iter().sum();
        if sum == 0.0 {
            log::warn!("task {n}: all memory scores are zero, contributes 0");
            continue;
        }
        let y: BTreeSet<usize> = y.iter().copied().collect();
        total += y.iter().filter_map(|&j| s.get(j)).sum::<f64>() / sum;
    }
    total
}

/// Missed-label fraction `A` and fired count relative to the label count `B`.
fn miss_and_load(fired: &[usize], labels: &[usize]) -> (f64, f64) {
    let y: BTreeSet<usize> = labels.iter().copied().collect();
    let f: BTreeSet<usize> = fired.iter().copied().collect();
    let m = y.len() as f64;
    let hit = f.intersection(&y).count() as f64;
    let missed = if m > hit { (m - hit) / m } else { 0.0 };
    (missed, f.len() as f64 / m)
}

/// `−(A + penalty·B)` for one task.
pub fn synaptic_task_term(fired: &[usize], labels: &[usize], penalty: f64) -> f64 {
    let (a, b) = miss_and_load(fired, labels);
    -(a + penalty * b)
}

/// `−(ΣA + penalty·ΣB)`. The sums are kept apart so exact retrieval on `N`
/// tasks gives exactly `−penalty·N`.
pub fn objective_synaptic(fired: &[Vec<usize>], labels: &[Vec<usize>], penalty: f64) -> f64 {
    let (a, b) = fired
        .iter()
        .zip(labels)
        .map(|(f, y)| miss_and_load(f, y))
        .fold((0.0, 0.0), |(sa, sb), (a, b)| (sa + a, sb + b));
    -(a + penalty * b)
}
