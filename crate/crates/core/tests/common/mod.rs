//! Independent test oracles. Nothing here calls into the crate's analytics.
#![allow(dead_code)]

use rand::Rng;

/// Random liability matrix (B in 2..=max_b, random sparsity) and capitals.
pub fn random_instance<R: Rng>(rng: &mut R, max_b: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let b = rng.gen_range(2..=max_b);
    let density: f64 = rng.gen_range(0.0..1.0);
    let mut l = vec![vec![0.0; b]; b];
    for (i, row) in l.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            if i != j && rng.gen_bool(density) {
                *x = rng.gen_range(0.0..100.0);
            }
        }
    }
    let c = (0..b)
        .map(|_| if rng.gen_bool(0.05) { 0.0 } else { rng.gen_range(1.0..150.0) })
        .collect();
    (l, c)
}

/// Literal three-state DebtRank with naive loops over every node pair.
/// Returns (h(T), R' of the set, R of the set).
pub fn oracle_debtrank(l: &[Vec<f64>], c: &[f64], seeds: &[usize], psi: f64, t_max: usize) -> (Vec<f64>, f64, f64) {
    let b = l.len();
    let mut w = vec![vec![0.0; b]; b];
    for i in 0..b {
        for j in 0..b {
            if l[i][j] > 0.0 {
                w[i][j] = if c[j] > 0.0 { f64::min(1.0, l[i][j] / c[j]) } else { 1.0 };
            }
        }
    }
    let mut exposure = vec![0.0; b];
    for i in 0..b {
        for j in 0..b {
            exposure[i] += l[j][i];
        }
    }
    let total: f64 = exposure.iter().sum();
    let v: Vec<f64> = exposure.iter().map(|x| if total > 0.0 { x / total } else { 0.0 }).collect();

    // 'U', 'D', 'I'
    let mut s = vec!['U'; b];
    let mut h = vec![0.0; b];
    for &i in seeds {
        h[i] = psi;
        s[i] = 'D';
    }
    let h1 = h.clone();
    let mut t = 1;
    while t < t_max && s.contains(&'D') {
        let prev_h = h.clone();
        let prev_s = s.clone();
        for i in 0..b {
            let mut sum = 0.0;
            for j in 0..b {
                if prev_s[j] == 'D' {
                    sum += w[j][i] * prev_h[j];
                }
            }
            h[i] = f64::min(1.0, prev_h[i] + sum);
        }
        for i in 0..b {
            s[i] = if prev_s[i] == 'D' {
                'I'
            } else if h[i] > 0.0 && prev_s[i] != 'I' {
                'D'
            } else {
                prev_s[i]
            };
        }
        t += 1;
    }
    let r_incl: f64 = (0..b).map(|j| h[j] * v[j]).sum();
    let r_init: f64 = (0..b).map(|j| h1[j] * v[j]).sum();
    (h, r_incl - r_init, r_incl)
}

/// Expected loss by brute force: EL = V * sum_i p_i R_i (R including the
/// seed's own loss), every single-seed run done by the oracle above.
pub fn oracle_el(l: &[Vec<f64>], c: &[f64], p: &[f64]) -> f64 {
    let b = l.len();
    let total: f64 = l.iter().flatten().sum();
    let mut acc = 0.0;
    for i in 0..b {
        let (_, _, r) = oracle_debtrank(l, c, &[i], 1.0, b + 2);
        acc += p[i] * r;
    }
    total * acc
}

pub fn net(l: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let b = l.len();
    let mut out = vec![vec![0.0; b]; b];
    for i in 0..b {
        for j in 0..b {
            out[i][j] = f64::max(0.0, l[i][j] - l[j][i]);
        }
    }
    out
}
