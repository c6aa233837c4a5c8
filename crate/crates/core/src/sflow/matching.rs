/// Assignment maximizing Σ w[k][perm[k]] over permutations (Hungarian method,
/// O(n³)). `w` is square.
pub fn max_weight_assignment(w: &[Vec<f64>]) -> Vec<usize> {
    let n = w.len();
    if n == 0 {
        return vec![];
    }
    let big = w.iter().flatten().fold(0.0f64, |m, &x| m.max(x));
    // Minimize cost = big - w; rows and columns 1-based with a 0 sentinel.
    let cost = |i: usize, j: usize| big - w[i - 1][j - 1];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    perm
}

/// Greedy pairing on the largest remaining weight.
pub fn greedy_assignment(w: &[Vec<f64>]) -> Vec<usize> {
    let n = w.len();
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    pairs.sort_by(|a, b| w[b.0][b.1].total_cmp(&w[a.0][a.1]).then(a.cmp(b)));
    let mut perm = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (i, j) in pairs {
        if perm[i] == usize::MAX && !taken[j] {
            perm[i] = j;
            taken[j] = true;
        }
    }
    perm
}

/// Branch matching between two eigenbases: greedy on |⟨v_i, w_j⟩|, optimal
/// assignment when some greedy overlap falls below `threshold`. Returns the
/// permutation and the smallest matched overlap.
pub fn match_branches(overlap: &[Vec<f64>], threshold: f64) -> (Vec<usize>, f64) {
    let min_of = |perm: &[usize]| {
        perm.iter()
            .enumerate()
            .map(|(i, &j)| overlap[i][j])
            .fold(f64::INFINITY, f64::min)
    };
    let greedy = greedy_assignment(overlap);
    let g = min_of(&greedy);
    if g >= threshold {
        return (greedy, g);
    }
    let squared: Vec<Vec<f64>> = overlap
        .iter()
        .map(|r| r.iter().map(|x| x * x).collect())
        .collect();
    let opt = max_weight_assignment(&squared);
    let o = min_of(&opt);
    (opt, o)
}
