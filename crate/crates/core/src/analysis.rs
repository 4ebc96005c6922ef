//! Power-law fits, the effective coherent-error model and logical lifetimes.
//!
//! * `p_L = A·p^ξ`, fitted by least squares in log-log space;
//! * `p_L = A·(B·p)^ξ` per over-rotation ratio `c` with `A, ξ` held fixed,
//!   then `B = 1 + α·c²`;
//! * `p = 1 − exp(−t_g/t_c)` and `t_L = d·N_steps·t_g / p_L`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::ResultRow;

/// Default fit window in p.
pub const DEFAULT_FIT_RANGE: (f64, f64) = (1e-3, 3e-3);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DataPoint {
    pub p: f64,
    pub c: f64,
    pub p_l: f64,
    pub stderr: f64,
}

impl From<&ResultRow> for DataPoint {
    fn from(r: &ResultRow) -> Self {
        Self { p: r.p, c: r.c, p_l: r.p_l, stderr: r.stderr }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Unweighted,
    /// Weights `(p_L/stderr)²`, the inverse variance of `ln p_L`.
    Stderr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    #[serde(rename = "A")]
    pub a: f64,
    pub xi: f64,
    pub fit_range: (f64, f64),
    /// Sum of squared (weighted) log-space residuals.
    pub residual: f64,
    pub points_used: usize,
    /// p values in range dropped because p_L = 0.
    pub excluded: Vec<f64>,
}

impl PowerLawFit {
    pub fn eval(&self, p: f64) -> f64 {
        self.a * p.powf(self.xi)
    }
}

fn in_range(p: f64, range: (f64, f64)) -> bool {
    let tol = 1e-12 * range.1.abs().max(1.0);
    p >= range.0 - tol && p <= range.1 + tol
}

fn weight(pt: &DataPoint, w: Weighting) -> f64 {
    match w {
        Weighting::Unweighted => 1.0,
        Weighting::Stderr if pt.stderr > 0.0 => (pt.p_l / pt.stderr).powi(2),
        Weighting::Stderr => 1.0,
    }
}

/// Least squares on `(ln p, ln p_L)` over the points with `p` in `range`.
pub fn fit_power_law(points: &[DataPoint], range: (f64, f64), weighting: Weighting) -> Result<PowerLawFit> {
    let mut excluded = Vec::new();
    let used: Vec<&DataPoint> = points
        .iter()
        .filter(|pt| in_range(pt.p, range))
        .filter(|pt| {
            if pt.p_l > 0.0 {
                true
            } else {
                log::warn!("p = {}: p_L = 0 excluded from the fit", pt.p);
                excluded.push(pt.p);
                false
            }
        })
        .collect();
    let distinct = {
        let mut ps: Vec<f64> = used.iter().map(|pt| pt.p).collect();
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        ps.len()
    };
    if used.len() < 3 || distinct < 2 {
        return Err(Error::Fit(format!(
            "need at least 3 points with p_L > 0 in [{}, {}], have {}",
            range.0,
            range.1,
            used.len()
        )));
    }
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for pt in &used {
        let (x, y, w) = (pt.p.ln(), pt.p_l.ln(), weight(pt, weighting));
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let xi = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
    let ln_a = (sy - xi * sx) / sw;
    let residual = used
        .iter()
        .map(|pt| weight(pt, weighting) * (pt.p_l.ln() - ln_a - xi * pt.p.ln()).powi(2))
        .sum();
    Ok(PowerLawFit { a: ln_a.exp(), xi, fit_range: range, residual, points_used: used.len(), excluded })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveModel {
    pub alpha: f64,
    /// `(c, B)` in increasing c.
    pub b_values: Vec<(f64, f64)>,
}

impl EffectiveModel {
    pub fn b(&self, c: f64) -> f64 {
        1.0 + self.alpha * c * c
    }
}

/// Per-c scale `B` with `A, ξ` fixed (closed-form one-parameter least
/// squares in log space), then `α` from `B ≈ 1 + αc²`.
pub fn fit_effective_alpha(points: &[DataPoint], fit: &PowerLawFit) -> Result<EffectiveModel> {
    let mut cs: Vec<f64> = points.iter().map(|pt| pt.c).collect();
    cs.sort_by(f64::total_cmp);
    cs.dedup();
    if !cs.contains(&0.0) {
        return Err(Error::Fit("no c = 0 series".into()));
    }
    if cs.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 distinct c values, have {}", cs.len())));
    }
    let ln_a = fit.a.ln();
    let mut b_values = Vec::new();
    for &c in &cs {
        let logs: Vec<f64> = points
            .iter()
            .filter(|pt| pt.c == c && pt.p_l > 0.0 && in_range(pt.p, fit.fit_range))
            .map(|pt| (pt.p_l.ln() - ln_a) / fit.xi - pt.p.ln())
            .collect();
        if logs.is_empty() {
            return Err(Error::Fit(format!("c = {c}: no usable points in the fit range")));
        }
        b_values.push((c, (logs.iter().sum::<f64>() / logs.len() as f64).exp()));
    }
    let num: f64 = b_values.iter().map(|&(c, b)| c * c * (b - 1.0)).sum();
    let den: f64 = b_values.iter().map(|&(c, _)| c.powi(4)).sum();
    Ok(EffectiveModel { alpha: num / den, b_values })
}

/// `A·((1 + αc²)·p)^ξ`.
pub fn predict_p_l(p: f64, c: f64, alpha: f64, fit: &PowerLawFit) -> f64 {
    fit.a * ((1.0 + alpha * c * c) * p).powf(fit.xi)
}

/// Physical error probability of one gate: `1 − exp(−t_g/t_c)`.
pub fn p_from_times(t_g: f64, t_c: f64) -> f64 {
    -(-t_g / t_c).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LifetimeParams {
    pub t_g: f64,
    pub t_c: f64,
    pub d: usize,
    pub n_steps: usize,
    pub c: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub xi: f64,
    pub alpha: f64,
}

impl LifetimeParams {
    /// Fitted d = 5 constants (A = 6.5e5, ξ = 2.92, α = 0.872) with `t_c = 1`.
    pub fn default_d5(t_g_over_t_c: f64, c: f64) -> Self {
        Self { t_g: t_g_over_t_c, t_c: 1.0, d: 5, n_steps: 11, c, a: 6.5e5, xi: 2.92, alpha: 0.872 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_g > 0.0 && self.t_c > 0.0) {
            return Err(Error::Config("t_g and t_c must be positive".into()));
        }
        if self.n_steps == 0 || self.d == 0 {
            return Err(Error::Config("d and N_steps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lifetime {
    pub ratio: f64,
    pub p_l: f64,
    /// The predicted p_L reached 1; the ratio uses p_L = 1.
    pub saturated: bool,
}

/// `t_L/t_c = d·N_steps·(t_g/t_c) / p_L(p(t_g, t_c), c)`.
pub fn lifetime_ratio(params: &LifetimeParams) -> Result<Lifetime> {
    params.validate()?;
    let fit = PowerLawFit {
        a: params.a,
        xi: params.xi,
        fit_range: DEFAULT_FIT_RANGE,
        residual: 0.0,
        points_used: 0,
        excluded: Vec::new(),
    };
    let p = p_from_times(params.t_g, params.t_c);
    let p_l = predict_p_l(p, params.c, params.alpha, &fit);
    let saturated = p_l >= 1.0;
    if saturated {
        log::debug!("predicted p_L = {p_l} ≥ 1 at t_g/t_c = {}; lifetime saturated", params.t_g / params.t_c);
    }
    let ratio = (params.d * params.n_steps) as f64 * (params.t_g / params.t_c) / p_l.min(1.0);
    Ok(Lifetime { ratio, p_l, saturated })
}

/// The smallest `t_g/t_c` in `[lo, hi]` where `t_L = t_c`: a log-spaced scan
/// brackets the first sign change of `ln(t_L/t_c)`, then bisection refines
/// it. `None` if the ratio never crosses 1 there. (Past saturation the ratio
/// grows again as `d·N_steps·t_g/t_c`, so the first crossing is the physical
/// one.)
pub fn break_even(base: &LifetimeParams, lo: f64, hi: f64) -> Result<Option<f64>> {
    let f = |lx: f64| -> Result<f64> { Ok(lifetime_ratio(&LifetimeParams { t_g: lx.exp() * base.t_c, ..*base })?.ratio.ln()) };
    const SCAN: usize = 400;
    let (l0, l1) = (lo.ln(), hi.ln());
    let mut a = l0;
    let fa = f(a)?;
    for k in 1..=SCAN {
        let b = l0 + (l1 - l0) * k as f64 / SCAN as f64;
        let fb = f(b)?;
        if fb == 0.0 {
            return Ok(Some(b.exp()));
        }
        if fa.signum() != fb.signum() {
            let (mut a, mut b) = (a, b);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if f(m)?.signum() == fa.signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Ok(Some((0.5 * (a + b)).exp()));
        }
        a = b;
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub t_g_over_t_c: f64,
    pub c: f64,
    pub ratio: f64,
    pub saturated: bool,
}

/// `t_L/t_c` over a log-spaced `t_g/t_c` axis and a linear c axis.
pub fn lifetime_grid(base: &LifetimeParams, x_range: (f64, f64), nx: usize, c_range: (f64, f64), nc: usize) -> Result<Vec<GridPoint>> {
    let mut out = Vec::with_capacity(nx * nc);
    for ic in 0..nc {
        let c = if nc == 1 { c_range.0 } else { c_range.0 + (c_range.1 - c_range.0) * ic as f64 / (nc - 1) as f64 };
        for ix in 0..nx {
            let t = if nx == 1 { 0.0 } else { ix as f64 / (nx - 1) as f64 };
            let x = (x_range.0.ln() + (x_range.1.ln() - x_range.0.ln()) * t).exp();
            let l = lifetime_ratio(&LifetimeParams { t_g: x * base.t_c, c, ..*base })?;
            out.push(GridPoint { t_g_over_t_c: x, c, ratio: l.ratio, saturated: l.saturated });
        }
    }
    Ok(out)
}

/// Text report of a fit and (optionally) the effective model.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub fit: PowerLawFit,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective: Option<EffectiveModel>,
}

impl FitReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(a: f64, xi: f64, alpha: f64, ps: &[f64], cs: &[f64]) -> Vec<DataPoint> {
        cs.iter()
            .flat_map(|&c| ps.iter().map(move |&p| DataPoint { p, c, p_l: a * ((1.0 + alpha * c * c) * p).powf(xi), stderr: 0.0 }))
            .collect()
    }

    #[test]
    fn recovers_identity_power_law() {
        let pts = synth(1.0, 1.0, 0.0, &[0.1, 0.2, 0.3, 0.4], &[0.0]);
        let f = fit_power_law(&pts, (0.0, 1.0), Weighting::Unweighted).unwrap();
        assert!((f.a - 1.0).abs() < 1e-12 && (f.xi - 1.0).abs() < 1e-12);
        assert!(f.residual < 1e-20);
    }

    #[test]
    fn zero_points_are_excluded() {
        let mut pts = synth(2.0, 2.0, 0.0, &[1e-3, 1.5e-3, 2e-3, 2.5e-3, 3e-3], &[0.0]);
        pts[2].p_l = 0.0;
        let f = fit_power_law(&pts, DEFAULT_FIT_RANGE, Weighting::Unweighted).unwrap();
        assert_eq!(f.excluded, vec![2e-3]);
        assert_eq!(f.points_used, 4);
        assert!((f.xi - 2.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let pts = synth(2.0, 2.0, 0.0, &[1e-3, 2e-3, 1e-2], &[0.0]);
        assert!(fit_power_law(&pts, DEFAULT_FIT_RANGE, Weighting::Unweighted).is_err());
    }

    #[test]
    fn alpha_needs_c_zero() {
        let pts = synth(2.0, 2.0, 0.5, &[1e-3, 2e-3, 3e-3], &[0.5, 0.75, 1.0]);
        let f = fit_power_law(&synth(2.0, 2.0, 0.0, &[1e-3, 2e-3, 3e-3], &[0.0]), DEFAULT_FIT_RANGE, Weighting::Unweighted).unwrap();
        assert!(fit_effective_alpha(&pts, &f).is_err());
    }

    #[test]
    fn alpha_zero_when_b_is_one() {
        let pts = synth(3.0, 2.5, 0.0, &[1e-3, 2e-3, 3e-3], &[0.0, 0.5, 1.0]);
        let f = fit_power_law(&pts, DEFAULT_FIT_RANGE, Weighting::Unweighted).unwrap();
        let m = fit_effective_alpha(&pts, &f).unwrap();
        assert!(m.alpha.abs() < 1e-10);
    }

    #[test]
    fn p_from_times_limits() {
        assert_eq!(p_from_times(0.0, 1.0), 0.0);
        assert!((p_from_times(1e-3, 1.0) - 9.995e-4).abs() < 1e-7);
        assert!(p_from_times(1e-9, 1.0) > 0.0);
    }

    #[test]
    fn saturation_is_flagged() {
        let l = lifetime_ratio(&LifetimeParams::default_d5(0.5, 1.0)).unwrap();
        assert!(l.saturated);
        assert!((l.ratio - 55.0 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_lifetime_params() {
        assert!(lifetime_ratio(&LifetimeParams { t_g: 0.0, ..LifetimeParams::default_d5(1e-3, 0.0) }).is_err());
        assert!(lifetime_ratio(&LifetimeParams { n_steps: 0, ..LifetimeParams::default_d5(1e-3, 0.0) }).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = lifetime_grid(&LifetimeParams::default_d5(1e-3, 0.0), (1e-4, 1e-2), 5, (0.0, 1.0), 3).unwrap();
        assert_eq!(g.len(), 15);
        assert!((g[0].t_g_over_t_c - 1e-4).abs() < 1e-15 && (g[4].t_g_over_t_c - 1e-2).abs() < 1e-15);
        assert_eq!((g[0].c, g[14].c), (0.0, 1.0));
    }
}
