//! Independent oracles shared by the integration suites.

#![allow(dead_code)]

use netfuse::model::{Coef, DyadCategory, DyadPaths, DyadSeries, ThetaTriple};

/// Kolmogorov survival function `P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.3 {
        // the alternating series converges badly here; the value is ~1
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample KS p-value of `xs` against `cdf` (Stephens' small-sample correction).
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((k + 1) as f64 / n - f).abs()).max((f - k as f64 / n).abs());
    }
    let sn = n.sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

/// Two-sample KS p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let se = ne.sqrt();
    kolmogorov_sf((se + 0.12 + 0.11 / se) * d)
}

pub fn laplace_cdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / scale).exp()
    } else {
        1.0 - 0.5 * (-x / scale).exp()
    }
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for i in 0..7 {
        let dx = h * GK_X[i];
        let s = f(c - dx) + f(c + dx);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7, 15) quadrature on a finite interval.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol.max(8.0 * f64::EPSILON * v.abs()) || depth > 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    if a >= b {
        return 0.0;
    }
    rec(&f, a, b, tol, 0)
}

/// Inverse of a small dense symmetric positive-definite matrix (Gauss–Jordan).
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for row in 0..n {
            if row != col {
                let f = a[row][col];
                for j in 0..n {
                    a[row][j] -= f * a[col][j];
                    inv[row][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

/// Brute-force concordance AUC over all positive/negative pairs, ties ½.
pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut twice: u64 = 0;
    let (mut p, mut n) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if li {
            p += 1;
        } else {
            n += 1;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                twice += if scores[i] > scores[j] {
                    2
                } else if scores[i] == scores[j] {
                    1
                } else {
                    0
                };
            }
        }
    }
    twice as f64 / (2 * p * n) as f64
}

fn category_log_probs(th: &ThetaTriple) -> [f64; 4] {
    let w = [0.0, th.theta1, th.theta2, th.theta1 + th.theta2 + th.theta3];
    let m = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + w.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    w.map(|x| x - lse)
}

/// Response vector `(y_ij, y_ji, y_ij y_ji)` of a category.
fn stats(cat: DyadCategory) -> [f64; 3] {
    [cat.response(Coef::Forward), cat.response(Coef::Backward), cat.response(Coef::Mutual)]
}

/// Log-likelihood and its gradient in θ at one time point, from first principles.
fn point_terms(th: &ThetaTriple, cat: DyadCategory) -> (f64, [f64; 3]) {
    let lp = category_log_probs(th);
    let mut mean = [0.0; 3];
    for c in DyadCategory::ALL {
        let p = lp[c.index()].exp();
        let s = stats(c);
        for r in 0..3 {
            mean[r] += p * s[r];
        }
    }
    let s = stats(cat);
    (lp[cat.index()], [s[0] - mean[0], s[1] - mean[1], s[2] - mean[2]])
}

/// Minimizer of `−V(θ) + λ Σ|Δθ|` by FISTA with adaptive restart on the
/// difference parametrization `θ_t = θ_0 + Σ_{s≤t} d_s`, where the penalty is a
/// plain ℓ1 norm with an exact proximal map.
pub fn convex_oracle(obs: &DyadSeries, theta0: ThetaTriple, lambda: f64, max_iter: usize) -> DyadPaths {
    let len = obs.len();
    let anchor = theta0.to_array();
    let lipschitz = 0.75 * (len * (len + 1)) as f64 / 2.0;
    let step = 1.0 / lipschitz;
    let objective = |d: &[[f64; 3]]| -> f64 {
        let mut th = anchor;
        let mut v = 0.0;
        for t in 0..len {
            for r in 0..3 {
                th[r] += d[t][r];
                v += lambda * d[t][r].abs();
            }
            v -= point_terms(&ThetaTriple::from_array(th), obs.at(t + 1)).0;
        }
        v
    };
    let gradient = |d: &[[f64; 3]]| -> Vec<[f64; 3]> {
        let mut th = anchor;
        let mut g = vec![[0.0; 3]; len];
        for t in 0..len {
            for r in 0..3 {
                th[r] += d[t][r];
            }
            g[t] = point_terms(&ThetaTriple::from_array(th), obs.at(t + 1)).1;
        }
        // d/d d_s of −V = −Σ_{t ≥ s} g_t
        let mut acc = [0.0; 3];
        let mut out = vec![[0.0; 3]; len];
        for t in (0..len).rev() {
            for r in 0..3 {
                acc[r] += g[t][r];
                out[t][r] = -acc[r];
            }
        }
        out
    };
    let prox = |y: &[[f64; 3]], grad: &[[f64; 3]]| -> Vec<[f64; 3]> {
        y.iter()
            .zip(grad)
            .map(|(yt, gt)| {
                let mut z = [0.0; 3];
                for r in 0..3 {
                    let w = yt[r] - step * gt[r];
                    let k = step * lambda;
                    z[r] = if w > k { w - k } else if w < -k { w + k } else { 0.0 };
                }
                z
            })
            .collect()
    };
    let mut x = vec![[0.0; 3]; len];
    let mut y = x.clone();
    let mut tk = 1.0f64;
    let mut fx = objective(&x);
    for _ in 0..max_iter {
        let g = gradient(&y);
        let xn = prox(&y, &g);
        let fxn = objective(&xn);
        let moved: f64 = xn.iter().zip(&x).flat_map(|(a, b)| (0..3).map(move |r| (a[r] - b[r]).abs())).fold(0.0, f64::max);
        if fxn > fx {
            if tk == 1.0 {
                // a plain proximal step no longer descends
                break;
            }
            y = x.clone();
            tk = 1.0;
            continue;
        }
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        let beta = (tk - 1.0) / tn;
        y = xn.iter().zip(&x).map(|(a, b)| [0, 1, 2].map(|r| a[r] + beta * (a[r] - b[r]))).collect();
        x = xn;
        fx = fxn;
        tk = tn;
        if moved < 1e-14 {
            break;
        }
    }
    let mut paths = DyadPaths::constant(theta0, len);
    let mut th = anchor;
    for t in 0..len {
        for c in Coef::ALL {
            th[c.index()] += x[t][c.index()];
            paths.path_mut(c).free_mut()[t] = th[c.index()];
        }
    }
    paths
}

/// Max-norm distance between two sets of paths.
pub fn max_abs_diff(a: &DyadPaths, b: &DyadPaths) -> f64 {
    Coef::ALL
        .iter()
        .flat_map(|&c| a.path(c).free().iter().zip(b.path(c).free()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}
