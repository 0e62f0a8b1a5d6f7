//! Perron root of a nonnegative matrix by shifted power iteration.

const REL_TOL: f64 = 1e-12;
const MAX_ITER: usize = 1_000_000;
const TINY: f64 = 1e-280;

/// Sparse nonnegative matrix stored row-wise as `(column, weight)` pairs.
pub(crate) type SparseRows = Vec<Vec<(usize, f64)>>;

/// Spectral radius of a nonnegative matrix: the largest root over its
/// irreducible diagonal blocks.
pub(crate) fn perron_root(rows: &SparseRows) -> f64 {
    let mut best = 0.0_f64;
    for comp in components(rows) {
        let mut index = vec![usize::MAX; rows.len()];
        for (k, &i) in comp.iter().enumerate() {
            index[i] = k;
        }
        let block: SparseRows = comp
            .iter()
            .map(|&i| {
                rows[i]
                    .iter()
                    .filter(|&&(j, w)| w > 0.0 && index[j] != usize::MAX)
                    .map(|&(j, w)| (index[j], w))
                    .collect()
            })
            .collect();
        if block.len() == 1 && block[0].is_empty() {
            continue;
        }
        best = best.max(irreducible_root(&block));
    }
    best
}

/// Strongly connected components of the positive pattern (Kosaraju).
fn components(rows: &SparseRows) -> Vec<Vec<usize>> {
    let n = rows.len();
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, row) in rows.iter().enumerate() {
        for &(j, w) in row {
            if w > 0.0 {
                rev[j].push(i);
            }
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![(start, 0usize)];
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&(j, w)) = rows[v].get(*next) {
                *next += 1;
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push((j, 0));
                }
            } else {
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut comp_of = vec![usize::MAX; n];
    let mut comps = Vec::new();
    for &root in order.iter().rev() {
        if comp_of[root] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = vec![root];
        comp_of[root] = id;
        let mut k = 0;
        while k < members.len() {
            for &u in &rev[members[k]] {
                if comp_of[u] == usize::MAX {
                    comp_of[u] = id;
                    members.push(u);
                }
            }
            k += 1;
        }
        members.sort_unstable();
        comps.push(members);
    }
    comps
}

/// Iterates with `A + I`, which is primitive for irreducible `A`, until the
/// Collatz-Wielandt bounds agree to a relative `1e-12`.
fn irreducible_root(rows: &SparseRows) -> f64 {
    let n = rows.len();
    if n == 0 {
        return 0.0;
    }
    let mut x = vec![1.0_f64; n];
    let mut y = vec![0.0_f64; n];
    let mut last_hi = f64::INFINITY;
    let mut stalled = 0usize;
    let mut hi: f64 = 1.0;
    for _ in 0..MAX_ITER {
        for (i, row) in rows.iter().enumerate() {
            let mut acc = x[i];
            for &(j, w) in row {
                acc += w * x[j];
            }
            y[i] = acc;
        }
        let mut lo = f64::INFINITY;
        hi = 0.0;
        for i in 0..n {
            if x[i] > TINY {
                let r = y[i] / x[i];
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        if hi - lo <= REL_TOL * hi {
            return 0.5 * (hi + lo) - 1.0;
        }
        let norm = y.iter().cloned().fold(0.0, f64::max);
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        if (hi - last_hi).abs() <= 1e-15 * hi {
            stalled += 1;
            if stalled > 1000 {
                break;
            }
        } else {
            stalled = 0;
        }
        last_hi = hi;
    }
    hi - 1.0
}
