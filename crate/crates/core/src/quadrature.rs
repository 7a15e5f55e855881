//! One-dimensional quadrature: adaptive Gauss–Kronrod (7/15) for smooth
//! integrands, composite Simpson weights for uniform grids, and a cached
//! cumulative integral for repeated `∫_{t0}^{t}` queries.

use crate::error::{Error, Result};

// Kronrod 15-point nodes (non-negative half) and weights; Gauss 7-point
// weights for the nodes at odd positions.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Kronrod estimate and |Kronrod − Gauss| on one panel.
fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx)? + f(c + dx)?;
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

/// Options for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-10, rel_tol: 0.0, max_panels: 4000 }
    }
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]` (either orientation).
///
/// Panels are bisected, largest error first, until the summed error estimate
/// drops below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let (value, err) = gk15(&mut f, a, b)?;
    let mut panels = vec![(a, b, value, err)];
    let mut total = value;
    let mut total_err = err;
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= target {
            return Ok(total);
        }
        if panels.len() >= opts.max_panels {
            return Err(Error::QuadratureFailure { a, b, tol: target, estimate: total_err });
        }
        let (idx, _) = panels.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).expect("non-empty");
        let (pa, pb, pv, pe) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        if mid == pa || mid == pb {
            return Err(Error::QuadratureFailure { a, b, tol: target, estimate: total_err });
        }
        let (lv, le) = gk15(&mut f, pa, mid)?;
        let (rv, re) = gk15(&mut f, mid, pb)?;
        total += lv + rv - pv;
        total_err += le + re - pe;
        panels.push((pa, mid, lv, le));
        panels.push((mid, pb, rv, re));
        // Re-sum periodically so cancellation in the running totals cannot stall.
        if panels.len() % 64 == 0 {
            total = panels.iter().map(|p| p.2).sum();
            total_err = panels.iter().map(|p| p.3).sum();
        }
    }
}

/// Composite Simpson weights for `n` uniformly spaced points with spacing `h`.
///
/// An even point count (odd number of intervals) closes the last three
/// intervals with Simpson's 3/8 rule.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 4, "Simpson weights need at least 4 points");
    let mut w = vec![0.0; n];
    let simpson_end = if n % 2 == 1 { n - 1 } else { n - 4 };
    for i in (0..simpson_end).step_by(2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if n.is_multiple_of(2) {
        let s = n - 4;
        w[s] += 3.0 * h / 8.0;
        w[s + 1] += 9.0 * h / 8.0;
        w[s + 2] += 9.0 * h / 8.0;
        w[s + 3] += 3.0 * h / 8.0;
    }
    w
}

/// `∫_{t0}^{t} f` with the integral to a set of nodes precomputed once.
///
/// A query adds one adaptive integral over `[node, t]` to the stored value at
/// the nearest node at or below `t`.
#[derive(Debug, Clone)]
pub struct CumulativeIntegral {
    nodes: Vec<f64>,
    values: Vec<f64>,
    opts: QuadOptions,
}

impl CumulativeIntegral {
    pub fn build<F>(mut f: F, t0: f64, t1: f64, n_cells: usize, opts: QuadOptions) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let nodes = crate::profiles::uniform(t0, t1, n_cells.max(1) + 1);
        let mut values = Vec::with_capacity(nodes.len());
        values.push(0.0);
        let mut acc = 0.0;
        for w in nodes.windows(2) {
            acc += integrate(&mut f, w[0], w[1], opts)?;
            values.push(acc);
        }
        Ok(CumulativeIntegral { nodes, values, opts })
    }

    pub fn t0(&self) -> f64 {
        self.nodes[0]
    }

    pub fn node_values(&self) -> (&[f64], &[f64]) {
        (&self.nodes, &self.values)
    }

    /// `∫_{t0}^{t} f`, for `t` anywhere (extrapolates by direct integration
    /// outside the node range).
    pub fn at<F>(&self, f: F, t: f64) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let k = match self.nodes.partition_point(|&n| n <= t) {
            0 => 0,
            p => p - 1,
        };
        let base = self.nodes[k];
        if t == base {
            return Ok(self.values[k]);
        }
        Ok(self.values[k] + integrate(f, base, t, self.opts)?)
    }
}
