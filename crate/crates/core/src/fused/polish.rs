//! Active-set refinement of a Bregman solution.
//!
//! The soft-threshold step gives exact zeros in `b`, which fixes a block
//! pattern with signed jumps. With the pattern fixed the penalty is linear,
//! so the block levels solve a smooth concave problem. Jumps whose sign
//! flips are fused and the worst fused row violating `|s_t| ≤ 1` is split,
//! until the pattern is self-consistent.

use nalgebra::{DMatrix, DVector};

use crate::model::{masses, point_grad_info, point_loglik, Coef, DyadPaths, DyadSeries};

const MAX_NEWTON: usize = 100;
const GRAD_TOL: f64 = 1e-12;
/// Levels beyond this are treated as diverging.
const MAX_LEVEL: f64 = 1e6;

/// `pattern[t-1]` is 0 when `θ_t = θ_{t−1}` and the jump sign otherwise.
type Pattern = Vec<i8>;

#[derive(Debug, Clone, Copy)]
struct Segment {
    start: usize,
    end: usize,
    s_in: f64,
    s_out: f64,
}

fn segments(pattern: &Pattern) -> Vec<Segment> {
    // times 1..=T; a segment starts at every non-zero row
    let len = pattern.len();
    let mut starts: Vec<usize> = (1..=len).filter(|&t| pattern[t - 1] != 0).collect();
    starts.push(len + 1);
    starts
        .windows(2)
        .map(|w| Segment {
            start: w[0],
            end: w[1] - 1,
            s_in: f64::from(pattern[w[0] - 1]),
            s_out: if w[1] <= len { f64::from(pattern[w[1] - 1]) } else { 0.0 },
        })
        .collect()
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

pub(crate) fn refine(
    obs: &DyadSeries,
    start: &DyadPaths,
    split: &[Vec<f64>; 3],
    lambda: f64,
) -> Option<DyadPaths> {
    let len = obs.len();
    let mut patterns: [Pattern; 3] = [0, 1, 2].map(|r| split[r].iter().map(|&b| sign(b)).collect());
    let mut paths = start.clone();
    for _ in 0..(4 * len + 16) {
        solve_levels(obs, &mut paths, &patterns, lambda)?;
        let mut changed = false;
        for c in Coef::ALL {
            let diffs = paths.path(c).differences();
            for (p, d) in patterns[c.index()].iter_mut().zip(&diffs) {
                if *p != 0 && sign(*d) != *p {
                    *p = 0;
                    changed = true;
                }
            }
        }
        if changed {
            continue;
        }
        // the worst fused row whose implied subgradient leaves [-1, 1]
        let mut worst: Option<(usize, usize, f64, i8)> = None;
        for c in Coef::ALL {
            let mut s = 0.0;
            for t in (1..=len).rev() {
                s += point_grad_info(&paths.at(t), obs.at(t), c).0 / lambda;
                let excess = s.abs() - 1.0;
                if patterns[c.index()][t - 1] == 0
                    && excess > 1e-9
                    && worst.is_none_or(|w| excess > w.2)
                {
                    worst = Some((c.index(), t, excess, sign(s)));
                }
                if patterns[c.index()][t - 1] != 0 {
                    // a jump pins s_t to its sign
                    s = f64::from(patterns[c.index()][t - 1]);
                }
            }
        }
        match worst {
            None => return Some(paths),
            Some((r, t, _, s)) => patterns[r][t - 1] = s,
        }
    }
    Some(paths)
}

/// Levels of every segment by damped Newton on the smooth concave problem the
/// fixed pattern leaves. `None` when a level runs off towards infinity.
fn solve_levels(obs: &DyadSeries, paths: &mut DyadPaths, patterns: &[Pattern; 3], lambda: f64) -> Option<()> {
    let len = obs.len();
    let mut owner = [vec![None; len], vec![None; len], vec![None; len]];
    let mut vars: Vec<(Coef, Segment)> = Vec::new();
    for c in Coef::ALL {
        let segs = segments(&patterns[c.index()]);
        // rows before the first jump are fused to the anchor
        let anchor = paths.path(c).anchor();
        let first = segs.first().map_or(len + 1, |s| s.start);
        paths.path_mut(c).free_mut()[..first - 1].fill(anchor);
        for seg in segs {
            let level = paths.path(c).at(seg.start);
            paths.path_mut(c).free_mut()[seg.start - 1..seg.end].fill(level);
            owner[c.index()][seg.start - 1..seg.end].fill(Some(vars.len()));
            vars.push((c, seg));
        }
    }
    let m = vars.len();
    if m == 0 {
        return Some(());
    }
    let linear: Vec<f64> = vars.iter().map(|(_, s)| lambda * (s.s_in - s.s_out)).collect();
    let levels = |paths: &DyadPaths| -> Vec<f64> { vars.iter().map(|(c, s)| paths.path(*c).at(s.start)).collect() };
    let set = |paths: &mut DyadPaths, x: &[f64]| {
        for ((c, s), &v) in vars.iter().zip(x) {
            paths.path_mut(*c).free_mut()[s.start - 1..s.end].fill(v);
        }
    };
    let objective = |paths: &DyadPaths, x: &[f64]| -> f64 {
        let ll: f64 = (1..=len).map(|t| point_loglik(&paths.at(t), obs.at(t))).sum();
        ll - x.iter().zip(&linear).map(|(v, l)| v * l).sum::<f64>()
    };

    let mut x = levels(paths);
    let mut f = objective(paths, &x);
    for _ in 0..MAX_NEWTON {
        let mut grad: Vec<f64> = linear.iter().map(|l| -l).collect();
        let mut info = DMatrix::<f64>::zeros(m, m);
        for t in 1..=len {
            let idx = [0, 1, 2].map(|r| owner[r][t - 1]);
            if idx.iter().all(Option::is_none) {
                continue;
            }
            let p = masses(&paths.at(t));
            let p11 = p.to_array()[3];
            let mean = Coef::ALL.map(|c| p.mean_response(c));
            let cat = obs.at(t);
            for a in 0..3 {
                let Some(va) = idx[a] else { continue };
                grad[va] += cat.response(Coef::ALL[a]) - mean[a];
                for b in 0..3 {
                    let Some(vb) = idx[b] else { continue };
                    // the three responses share the C11 indicator
                    info[(va, vb)] += if a == b { mean[a] * (1.0 - mean[a]) } else { p11 - mean[a] * mean[b] };
                }
            }
        }
        if grad.iter().all(|g| g.abs() <= GRAD_TOL * (1.0 + lambda)) {
            return Some(());
        }
        // a tiny ridge keeps nearly saturated levels solvable
        let ridge = 1e-12 * (1.0 + (0..m).map(|k| info[(k, k)]).fold(0.0, f64::max));
        for k in 0..m {
            info[(k, k)] += ridge;
        }
        let step = info.cholesky()?.solve(&DVector::from_column_slice(&grad));
        let slope: f64 = grad.iter().zip(step.iter()).map(|(g, d)| g * d).sum();
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(v, d)| v + alpha * d).collect();
            set(paths, &trial);
            let ft = objective(paths, &trial);
            // below the objective's rounding level only the gradient is informative
            let tiny = slope <= 1e-13 * (1.0 + f.abs());
            if ft >= f + 1e-4 * alpha * slope || (tiny && alpha == 1.0) {
                f = ft;
                x = trial;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                // no further ascent at working precision
                set(paths, &x);
                return Some(());
            }
        }
        if x.iter().any(|v| !v.is_finite() || v.abs() > MAX_LEVEL) {
            return None;
        }
        let scale = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if alpha * step.amax() <= 1e-15 * scale {
            return Some(());
        }
    }
    Some(())
}
