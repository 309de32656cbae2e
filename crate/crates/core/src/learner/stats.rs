use crate::error::{Error, Result};

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation (Pearson correlation of average ranks).
///
/// When both inputs are constant they rank identically and the result is 1;
/// when only one is constant the result is 0.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("rankings of length {} and {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::Insufficient("spearman needs at least 2 items".into()));
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    Ok(match (va == 0.0, vb == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => (cov / (va * vb).sqrt()).clamp(-1.0, 1.0),
    })
}

/// Mean of Spearman's ρ over all unordered pairs of score vectors.
pub fn mean_pairwise_spearman(scores: &[Vec<f64>]) -> Result<f64> {
    if scores.len() < 2 {
        return Err(Error::Insufficient(format!(
            "need at least two models for rank stability, got {}",
            scores.len()
        )));
    }
    let mut total = 0.0;
    let mut pairs = 0;
    for i in 0..scores.len() {
        for j in i + 1..scores.len() {
            total += spearman(&scores[i], &scores[j])?;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}
