use serde::Serialize;

use crate::error::{Error, Result};
use crate::similarity::SimilarityMatrix;

/// Row-wise rank correlation between two similarity matrices.
///
/// The integer counts are exact: `numerator` is the concordant minus
/// discordant pair count summed over all diagonal-deleted rows, and the
/// denominators count the pairs that are untied in each matrix. When either
/// denominator is zero (everything tied on one side) the correlation is
/// undefined; `value` is reported as 0 and `defined` as false so callers can
/// distinguish "no agreement" from "nothing to compare".
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowwiseCorr {
    pub value: f64,
    pub numerator: i64,
    pub denom_x: u64,
    pub denom_y: u64,
    pub defined: bool,
}

impl RowwiseCorr {
    fn from_counts(numerator: i64, denom_x: u64, denom_y: u64) -> Self {
        let defined = denom_x > 0 && denom_y > 0;
        let value = if defined {
            numerator as f64 / (denom_x as f64 * denom_y as f64).sqrt()
        } else {
            0.0
        };
        Self {
            value,
            numerator,
            denom_x,
            denom_y,
            defined,
        }
    }
}

fn sign(a: f64, b: f64) -> i64 {
    if a > b {
        1
    } else if a < b {
        -1
    } else {
        0
    }
}

/// Descending mid-ranks: the largest value gets rank 1 and tied values share
/// the mean of the ordinal ranks they occupy, so ranks always sum to
/// `n(n+1)/2`.
pub fn midrank_descending(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        // ordinal ranks i+1 ..= j, averaged over the tie group
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Merge sort counting strict inversions; ties contribute nothing.
fn count_inversions(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let mut count = count_inversions(&mut v[..mid], buf) + count_inversions(&mut v[mid..], buf);
    buf[..n].copy_from_slice(v);
    let (left, right) = buf[..n].split_at(mid);
    let (mut i, mut j) = (0, 0);
    for slot in v.iter_mut() {
        if i < left.len() && (j >= right.len() || left[i] <= right[j]) {
            *slot = left[i];
            i += 1;
        } else {
            *slot = right[j];
            j += 1;
            count += (left.len() - i) as u64;
        }
    }
    count
}

/// Exact pair counts for one aligned row pair in O(L log L).
///
/// Sorts by x (ties broken by y), counts tie groups, then counts discordant
/// pairs as strict inversions of the y sequence. With `P` total pairs, `tx`
/// (`ty`) pairs tied in x (y) and `txy` tied in both, concordant minus
/// discordant is `P - tx - ty + txy - 2 * swaps`.
fn row_counts(x: &[f64], y: &[f64]) -> (i64, u64, u64) {
    let l = x.len();
    if l < 2 {
        return (0, 0, 0);
    }
    let pairs = (l as u64) * (l as u64 - 1) / 2;
    let mut idx: Vec<usize> = (0..l).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let mut tx = 0u64;
    let mut txy = 0u64;
    let mut i = 0;
    while i < l {
        let mut j = i + 1;
        while j < l && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        let g = (j - i) as u64;
        tx += g * (g - 1) / 2;
        let mut a = i;
        while a < j {
            let mut b = a + 1;
            while b < j && y[idx[b]] == y[idx[a]] {
                b += 1;
            }
            let h = (b - a) as u64;
            txy += h * (h - 1) / 2;
            a = b;
        }
        i = j;
    }

    let mut ys: Vec<f64> = idx.iter().map(|&k| y[k]).collect();
    let mut buf = vec![0.0; l];
    let swaps = count_inversions(&mut ys, &mut buf);

    let mut ty = 0u64;
    let mut i = 0;
    while i < l {
        let mut j = i + 1;
        while j < l && ys[j] == ys[i] {
            j += 1;
        }
        let g = (j - i) as u64;
        ty += g * (g - 1) / 2;
        i = j;
    }

    let numerator =
        pairs as i64 - tx as i64 - ty as i64 + txy as i64 - 2 * swaps as i64;
    (numerator, pairs - tx, pairs - ty)
}

/// Correlation of two aligned rows (already diagonal-deleted when they come
/// from similarity matrices).
pub fn row_kendall(x: &[f64], y: &[f64]) -> Result<RowwiseCorr> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let (num, dx, dy) = row_counts(x, y);
    Ok(RowwiseCorr::from_counts(num, dx, dy))
}

/// Row-wise rank correlation between two similarity matrices of equal size.
///
/// Every row is compared with the diagonal cell removed (a project is not
/// its own analogy candidate) and the integer pair counts are summed over
/// rows before the final division.
pub fn rowwise_kendall(x: &SimilarityMatrix, y: &SimilarityMatrix) -> Result<RowwiseCorr> {
    if x.n() != y.n() {
        return Err(Error::DimensionMismatch {
            expected: x.n(),
            got: y.n(),
        });
    }
    let n = x.n();
    let mut num = 0i64;
    let mut dx = 0u64;
    let mut dy = 0u64;
    for i in 0..n {
        let rx = x.row_excluding_diagonal(i);
        let ry = y.row_excluding_diagonal(i);
        let (rn, rdx, rdy) = row_counts(&rx, &ry);
        num += rn;
        dx += rdx;
        dy += rdy;
    }
    Ok(RowwiseCorr::from_counts(num, dx, dy))
}

/// Textbook triple-loop evaluation of the same correlation, kept as an
/// independent check of the sort-based counting. O(n^3), only use on small
/// matrices.
pub fn rowwise_kendall_reference(
    x: &SimilarityMatrix,
    y: &SimilarityMatrix,
) -> Result<RowwiseCorr> {
    if x.n() != y.n() {
        return Err(Error::DimensionMismatch {
            expected: x.n(),
            got: y.n(),
        });
    }
    let n = x.n();
    let mut num = 0i64;
    let mut dx = 0u64;
    let mut dy = 0u64;
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            for k in (j + 1)..n {
                if k == i {
                    continue;
                }
                let sx = sign(x.get(i, j), x.get(i, k));
                let sy = sign(y.get(i, j), y.get(i, k));
                num += sx * sy;
                dx += (sx * sx) as u64;
                dy += (sy * sy) as u64;
            }
        }
    }
    Ok(RowwiseCorr::from_counts(num, dx, dy))
}
