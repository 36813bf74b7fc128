use rayon::prelude::*;
use serde::Serialize;

use super::{build_data, third_iterate, Construction, ConstructionId, Window};
use crate::error::{pre, Result};
use crate::fit::{loglog_fit, LineFit};

/// Largest ladder point accepted by the fits.
pub const MAX_LADDER_N: f64 = 262_144.0;
/// Pass band for a fitted slope.
pub const SLOPE_TOL: f64 = 0.1;

/// Growth exponent of the windowed iterate norm.
pub fn predicted_exponent(kind: Construction, s: f64) -> f64 {
    match kind {
        Construction::BetaPositive => (1.0 - 2.0 * s) / 2.0,
        Construction::BetaNegative => (1.0 - 4.0 * s) / 2.0,
        Construction::BetaZero => 0.75 - s,
        Construction::GeneralAlpha => -s,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LadderPoint {
    pub n: f64,
    pub norm: f64,
    pub max_node_spacing: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    pub construction: ConstructionId,
    pub t: f64,
    pub ladder: Vec<LadderPoint>,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub predicted: f64,
    pub pass: bool,
    /// Slope with the two smallest `N` left out.
    pub tail_slope: Option<f64>,
}

pub(crate) fn check_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.len() < 5 {
        return pre("ladder needs at least 5 points");
    }
    for w in ladder.windows(2) {
        if !(w[1] > w[0]) {
            return pre("ladder must be increasing");
        }
    }
    for &n in ladder {
        if !(n >= 2.0) || n.log2().fract() != 0.0 {
            return pre(format!("ladder point {n} is not a power of two"));
        }
        if n > MAX_LADDER_N {
            return pre(format!("ladder point {n} exceeds 2^18"));
        }
    }
    Ok(())
}

/// Norm of the iterate over the construction's window at one `N`.
pub fn window_norm(c: &ConstructionId, t: f64, nodes_per_bump: usize) -> Result<LadderPoint> {
    let data = build_data(c)?;
    let f = data.iterate(t, &Window::Interval(data.window), nodes_per_bump)?;
    let norm = super::windowed_norm(&f, c.s, &Window::Interval(data.window))?;
    Ok(LadderPoint { n: c.n, norm, max_node_spacing: f.max_node_spacing })
}

/// Windowed norms over a dyadic ladder and their log-log slope.
pub fn growth_fit(c: &ConstructionId, t: f64, ladder: &[f64], nodes_per_bump: usize) -> Result<GrowthFit> {
    check_ladder(ladder)?;
    let pts = ladder
        .par_iter()
        .map(|&n| window_norm(&c.with_n(n)?, t, nodes_per_bump))
        .collect::<Result<Vec<_>>>()?;
    let ns: Vec<f64> = pts.iter().map(|p| p.n).collect();
    let vs: Vec<f64> = pts.iter().map(|p| p.norm).collect();
    let fit = loglog_fit(&ns, &vs)?;
    let tail_slope = if ns.len() >= 4 { Some(loglog_fit(&ns[2..], &vs[2..])?.slope) } else { None };
    let predicted = predicted_exponent(c.kind, c.s);
    Ok(GrowthFit {
        construction: *c,
        t,
        ladder: pts,
        slope: fit.slope,
        intercept: fit.intercept,
        residual: fit.residual,
        predicted,
        pass: (fit.slope - predicted).abs() <= SLOPE_TOL,
        tail_slope,
    })
}

/// Block magnitudes of the third iterate over the window at one `N`.
/// Bump 0 is `B1` (near `+N`), bump 1 is `B2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockPoint {
    pub n: f64,
    /// `max |I11| + |I21|`.
    pub b11: f64,
    pub i12_min: f64,
    pub i12_max: f64,
    pub i22_max: f64,
    /// `max |I13| + |I23|`.
    pub b21: f64,
    /// `max |I14| + |I24|`.
    pub b22: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockLadder {
    pub construction: ConstructionId,
    pub t: f64,
    pub points: Vec<BlockPoint>,
    pub i12: LineFit,
    pub i22: LineFit,
    pub b21: LineFit,
    pub b22: LineFit,
}

pub fn block_point(c: &ConstructionId, t: f64, nodes_per_bump: usize) -> Result<BlockPoint> {
    if c.kind != Construction::BetaNegative {
        return pre("block structure is defined for the beta-negative construction");
    }
    let data = build_data(c)?;
    let f = third_iterate(&data.psi, &c.phase(), t, &Window::Interval(data.window), nodes_per_bump)?;
    let blk = |i, j| f.block(i, j).expect("two-bump data has four blocks");
    let sum_max = |i, j| {
        let b = blk(i, j);
        b.i1.iter().zip(&b.i2).map(|(a, c)| a.norm() + c.norm()).fold(0.0, f64::max)
    };
    let b12 = blk(0, 1);
    Ok(BlockPoint {
        n: c.n,
        b11: sum_max(0, 0),
        i12_min: b12.i1.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min),
        i12_max: b12.i1.iter().map(|z| z.norm()).fold(0.0, f64::max),
        i22_max: b12.i2.iter().map(|z| z.norm()).fold(0.0, f64::max),
        b21: sum_max(1, 0),
        b22: sum_max(1, 1),
    })
}

pub fn block_ladder(c: &ConstructionId, t: f64, ladder: &[f64], nodes_per_bump: usize) -> Result<BlockLadder> {
    check_ladder(ladder)?;
    let points = ladder
        .par_iter()
        .map(|&n| block_point(&c.with_n(n)?, t, nodes_per_bump))
        .collect::<Result<Vec<_>>>()?;
    let ns: Vec<f64> = points.iter().map(|p| p.n).collect();
    let col = |f: fn(&BlockPoint) -> f64| points.iter().map(f).collect::<Vec<_>>();
    Ok(BlockLadder {
        construction: *c,
        t,
        i12: loglog_fit(&ns, &col(|p| p.i12_min))?,
        i22: loglog_fit(&ns, &col(|p| p.i22_max))?,
        b21: loglog_fit(&ns, &col(|p| p.b21))?,
        b22: loglog_fit(&ns, &col(|p| p.b22))?,
        points,
    })
}
