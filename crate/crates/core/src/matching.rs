//! Token-level F1 between entity spans and the optimal one-to-one matching
//! between predicted and gold entity lists.
//!
//! The score between two spans is built from their longest contiguous token
//! overlap; the assignment maximizing total F1 is found with the Hungarian
//! algorithm and then refined so that ties between equal-total assignments
//! resolve to the lexicographically smallest (pred, gold) pair sequence.

use crate::model::EntityTriple;

/// Token-level precision/recall/F1 between one predicted span and one gold
/// span. `overlap` is the length of the longest contiguous token overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenF1 {
    pub overlap: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl TokenF1 {
    pub const ZERO: TokenF1 = TokenF1 {
        overlap: 0,
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
}

/// One matched (pred, gold) index pair with its span score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub pred: usize,
    pub gold: usize,
    pub score: TokenF1,
}

/// The matched pair set between a prediction list and a gold list. Pairs
/// form a partial bijection, are sorted by predicted index, and always have
/// token overlap >= 1; indices missing from `pairs` appear in the unmatched
/// lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_pred: Vec<usize>,
    pub unmatched_gold: Vec<usize>,
}

impl Matching {
    /// Number of matched pairs.
    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    pub fn pred_count(&self) -> usize {
        self.pairs.len() + self.unmatched_pred.len()
    }

    pub fn gold_count(&self) -> usize {
        self.pairs.len() + self.unmatched_gold.len()
    }

    /// Sum of matched F1 scores.
    pub fn total_f1(&self) -> f64 {
        self.pairs.iter().map(|p| p.score.f1).sum()
    }
}

/// Whitespace tokenization: split on whitespace runs, dropping empties.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// Length of the longest common contiguous token run between `a` and `b`.
pub fn longest_contiguous_overlap<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    // suffix[j] = longest common run ending at a[i-1], b[j-1]
    let mut best = 0usize;
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            cur[j] = if a[i - 1] == b[j - 1] {
                prev[j - 1] + 1
            } else {
                0
            };
            best = best.max(cur[j]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

/// Token-level F1 between a predicted and a gold entity span. With `w` the
/// longest contiguous overlap and `n`, `m` the token counts, precision is
/// `w/n`, recall `w/m`, and F1 their harmonic mean (0 when both are 0).
/// A span with no tokens yields the all-zero score.
pub fn token_f1(pred: &str, gold: &str) -> TokenF1 {
    let p = tokenize(pred);
    let g = tokenize(gold);
    if p.is_empty() || g.is_empty() {
        return TokenF1::ZERO;
    }
    let w = longest_contiguous_overlap(&p, &g);
    let precision = w as f64 / p.len() as f64;
    let recall = w as f64 / g.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    TokenF1 {
        overlap: w,
        precision,
        recall,
        f1,
    }
}

const TIE_EPS: f64 = 1e-9;

/// Match predicted entities against gold entities by maximizing the total
/// token-level F1 over injective assignments. Assigned pairs with zero
/// token overlap are not considered matches and are dropped; leaving an
/// item unmatched costs nothing. Duplicated surface forms on either side
/// are distinct items and resolve positionally.
pub fn match_entities(preds: &[EntityTriple], golds: &[EntityTriple]) -> Matching {
    let scores: Vec<Vec<TokenF1>> = preds
        .iter()
        .map(|p| {
            golds
                .iter()
                .map(|g| token_f1(&p.entity, &g.entity))
                .collect()
        })
        .collect();
    let f1: Vec<Vec<f64>> = scores
        .iter()
        .map(|row| row.iter().map(|s| s.f1).collect())
        .collect();

    let assignment = lexicographic_max_assignment(&f1);

    let mut pairs = Vec::new();
    let mut unmatched_pred = Vec::new();
    let mut gold_used = vec![false; golds.len()];
    for (i, choice) in assignment.iter().enumerate() {
        match choice {
            Some(j) if scores[i][*j].overlap >= 1 => {
                gold_used[*j] = true;
                pairs.push(MatchedPair {
                    pred: i,
                    gold: *j,
                    score: scores[i][*j],
                });
            }
            _ => unmatched_pred.push(i),
        }
    }
    let unmatched_gold = (0..golds.len()).filter(|j| !gold_used[*j]).collect();
    Matching {
        pairs,
        unmatched_pred,
        unmatched_gold,
    }
}

/// Among all assignments achieving the maximum total score, pick the one
/// whose positive (pred, gold) pair sequence is lexicographically smallest:
/// each predicted index in turn takes the smallest feasible gold index, and
/// zero-score pairings are never taken (they are equivalent to staying
/// unmatched but would consume a gold slot).
fn lexicographic_max_assignment(f1: &[Vec<f64>]) -> Vec<Option<usize>> {
    let p = f1.len();
    let g = if p == 0 { 0 } else { f1[0].len() };
    let mut out = vec![None; p];
    if p == 0 || g == 0 {
        return out;
    }

    let best = max_assignment_value(f1, 0, &vec![false; g]);
    let mut gold_used = vec![false; g];
    let mut committed = 0.0;
    for i in 0..p {
        let mut chosen = None;
        for j in 0..g {
            if gold_used[j] || f1[i][j] <= 0.0 {
                continue;
            }
            gold_used[j] = true;
            let rest = max_assignment_value(f1, i + 1, &gold_used);
            gold_used[j] = false;
            if committed + f1[i][j] + rest >= best - TIE_EPS {
                chosen = Some(j);
                break;
            }
        }
        if let Some(j) = chosen {
            gold_used[j] = true;
            committed += f1[i][j];
            out[i] = Some(j);
        }
    }
    out
}

/// Maximum achievable total score assigning preds `from..` to the golds not
/// yet used, each pred optionally left unmatched at zero. Solved by the
/// Hungarian algorithm with shortest augmenting paths over the cost matrix
/// `-score`, padded with one zero-cost dummy column per row.
fn max_assignment_value(f1: &[Vec<f64>], from: usize, gold_used: &[bool]) -> f64 {
    let rows: Vec<usize> = (from..f1.len()).collect();
    let cols: Vec<usize> = (0..gold_used.len()).filter(|j| !gold_used[*j]).collect();
    if rows.is_empty() {
        return 0.0;
    }
    let n = rows.len();
    let m = cols.len() + n; // dummy column per row so every row can opt out
    let cost = |i: usize, j: usize| -> f64 {
        if j < cols.len() {
            -f1[rows[i]][cols[j]]
        } else {
            0.0
        }
    };

    // Hungarian algorithm with row/column potentials; O(n^2 * m).
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut assigned_row = vec![usize::MAX; m + 1]; // row matched to each column (m = virtual start)
    for (r, _) in rows.iter().enumerate() {
        let mut j_cur = m; // virtual column holding the unassigned row r
        assigned_row[m] = r;
        let mut min_to = vec![f64::INFINITY; m + 1];
        let mut prev = vec![usize::MAX; m + 1];
        let mut visited = vec![false; m + 1];
        loop {
            visited[j_cur] = true;
            let i_cur = assigned_row[j_cur];
            let mut delta = f64::INFINITY;
            let mut j_next = m;
            for j in 0..m {
                if visited[j] {
                    continue;
                }
                let reduced = cost(i_cur, j) - u[i_cur] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    prev[j] = j_cur;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j_next = j;
                }
            }
            for j in 0..=m {
                if visited[j] {
                    u[assigned_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j_cur = j_next;
            if assigned_row[j_cur] == usize::MAX {
                break;
            }
        }
        // augment along the alternating path back to the virtual column
        while j_cur != m {
            let j_prev = prev[j_cur];
            assigned_row[j_cur] = assigned_row[j_prev];
            j_cur = j_prev;
        }
    }

    let mut total = 0.0;
    for j in 0..cols.len() {
        let r = assigned_row[j];
        if r != usize::MAX {
            total += f1[rows[r]][cols[j]];
        }
    }
    total
}
