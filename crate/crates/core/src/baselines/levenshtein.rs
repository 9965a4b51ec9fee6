/// Edit distance with unit-cost insertions, deletions and substitutions,
/// over characters.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    distance_bounded(&a, &b, usize::MAX).unwrap_or(usize::MAX)
}

/// `levenshtein(a, b) >= d`, stopping as soon as every cell of a DP row has
/// reached `d`.
pub fn levenshtein_at_least(a: &str, b: &str, d: usize) -> bool {
    if d == 0 {
        return true;
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.len().abs_diff(b.len()) >= d {
        return true;
    }
    distance_bounded(&a, &b, d).is_none()
}

/// Exact distance if it is below `cutoff`, otherwise `None`.
fn distance_bounded(a: &[char], b: &[char], cutoff: usize) -> Option<usize> {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        let mut row_min = cur[0];
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
            row_min = row_min.min(cur[j + 1]);
        }
        if row_min >= cutoff {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let d = prev[b.len()];
    (d < cutoff).then_some(d)
}
