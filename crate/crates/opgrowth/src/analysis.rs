//! Rate, exponent, and front-velocity extraction from measured curves.

use crate::error::{Error, Result};
use crate::observables::{CurveEstimate, Profile};
use crate::stream::RngStream;
use rand::Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    /// Growth/decay rate, power-law exponent, or velocity.
    pub rate: f64,
    pub uncertainty: f64,
    /// Time (or abscissa) window actually used.
    pub window: (f64, f64),
    pub n_points: usize,
    /// Coefficient of determination of the underlying linear fit.
    pub quality: f64,
    pub method: String,
}

#[derive(Debug, Clone, Copy)]
pub enum WindowPolicy {
    /// Keep points with `value - baseline` above the pointwise noise floor
    /// (8x the point's own standard error, falling back to the median when a
    /// point reports none) and below 10% of the saturation value, i.e. inside
    /// the exponential window before the saturation bend.
    Auto { saturation: f64 },
    /// Explicit inclusive time window.
    Explicit { t_lo: usize, t_hi: usize },
    /// Use every point with a positive residual.
    All,
}

/// Weighted least squares of y on x; weights may be empty (unweighted).
/// Returns (slope, intercept, slope stderr, r^2).
fn linear_fit(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len();
    let w_owned: Vec<f64>;
    let w = if w.is_empty() {
        w_owned = vec![1.0; n];
        &w_owned
    } else {
        w
    };
    let sw: f64 = w.iter().sum();
    let mx: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my: f64 = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - mx) * (a - mx)).sum();
    let sxy: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((a, c), b)| b * (a - mx) * (c - my))
        .sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // residual variance (weighted) and r^2
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for i in 0..n {
        let r = y[i] - (intercept + slope * x[i]);
        ss_res += w[i] * r * r;
        ss_tot += w[i] * (y[i] - my) * (y[i] - my);
    }
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    let dof = (n as f64 - 2.0).max(1.0);
    let slope_err = (ss_res / dof / sxx).sqrt();
    (slope, intercept, slope_err, r2)
}

/// Weighted least-squares slope of log(value - baseline) vs t. A positive
/// slope is a growth rate; a negative one is returned as the decay rate
/// kappa = |slope|.
pub fn fit_exponential_rate(
    curve: &CurveEstimate,
    baseline: f64,
    policy: WindowPolicy,
) -> Result<FitResult> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    let mut stderr_present = false;

    let mut positive_stderr: Vec<f64> = curve.stderr.iter().copied().filter(|&e| e > 0.0).collect();
    positive_stderr.sort_by(|a, b| a.total_cmp(b));
    let median_stderr = if positive_stderr.is_empty() {
        0.0
    } else {
        positive_stderr[positive_stderr.len() / 2]
    };

    for idx in 0..curve.times.len() {
        let t = curve.times[idx] as f64;
        let y = curve.values[idx] - baseline;
        let keep = match policy {
            WindowPolicy::Auto { saturation } => {
                let noise = if curve.stderr[idx] > 0.0 { curve.stderr[idx] } else { median_stderr };
                y > 8.0 * noise && y < 0.1 * (saturation - baseline).abs()
            }
            WindowPolicy::Explicit { t_lo, t_hi } => {
                let ti = curve.times[idx];
                ti >= t_lo && ti <= t_hi
            }
            WindowPolicy::All => y > 0.0,
        };
        if !keep {
            continue;
        }
        if y <= 0.0 {
            return Err(Error::Window(format!("non-positive residual {y} at t = {t} inside window")));
        }
        xs.push(t);
        ys.push(y.ln());
        let e = curve.stderr[idx];
        if e > 0.0 {
            stderr_present = true;
            let sigma_log = e / y;
            ws.push(1.0 / (sigma_log * sigma_log));
        } else {
            ws.push(0.0); // patched below if any stderr present
        }
    }
    if xs.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} usable points in fit window, need 4",
            xs.len()
        )));
    }
    let weights: Vec<f64> = if stderr_present {
        let max_w = ws.iter().cloned().fold(0.0f64, f64::max);
        ws.iter().map(|&w| if w > 0.0 { w } else { max_w }).collect()
    } else {
        Vec::new()
    };
    let (slope, _b, err, r2) = linear_fit(&xs, &ys, &weights);
    Ok(FitResult {
        rate: slope.abs(),
        uncertainty: err,
        window: (xs[0], *xs.last().unwrap()),
        n_points: xs.len(),
        quality: r2,
        method: if slope >= 0.0 { "exponential-growth".into() } else { "exponential-decay".into() },
    })
}

/// Growth rate of a saturating (logistic) curve.
///
/// At late times an exponentially growing correlator bends over towards its
/// saturation value s; a plain log-linear fit then under-estimates the rate.
/// For logistic growth y(t) = s / (1 + e^{-lambda (t - t0)}) the transform
/// z = y / (1 - y/s) is exactly s e^{lambda (t - t0)}, so the weighted
/// least-squares slope of ln z vs t recovers lambda without choosing a
/// narrow early-time window.  Points are kept while y (above `baseline`)
/// lies between 3% and 70% of the saturation residual, which excludes both
/// the noise floor and the saturated tail where the transform diverges.
pub fn fit_logistic_rate(
    curve: &CurveEstimate,
    baseline: f64,
    saturation: f64,
) -> Result<FitResult> {
    let s = saturation - baseline;
    if !(s > 0.0) {
        return Err(Error::Window(format!(
            "saturation {saturation} must exceed baseline {baseline}"
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    let mut stderr_present = false;
    for idx in 0..curve.times.len() {
        let t = curve.times[idx] as f64;
        let y = curve.values[idx] - baseline;
        if y < 0.03 * s || y > 0.7 * s {
            continue;
        }
        let z = y / (1.0 - y / s);
        xs.push(t);
        ys.push(z.ln());
        let e = curve.stderr[idx];
        if e > 0.0 {
            stderr_present = true;
            // d(ln z)/dy = 1/y + 1/(s - y)
            let sigma_log = e * (1.0 / y + 1.0 / (s - y));
            ws.push(1.0 / (sigma_log * sigma_log));
        } else {
            ws.push(0.0); // patched below if any stderr present
        }
    }
    if xs.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} usable points in logistic band, need 4",
            xs.len()
        )));
    }
    let weights: Vec<f64> = if stderr_present {
        let max_w = ws.iter().cloned().fold(0.0f64, f64::max);
        ws.iter().map(|&w| if w > 0.0 { w } else { max_w }).collect()
    } else {
        Vec::new()
    };
    let (slope, _b, err, r2) = linear_fit(&xs, &ys, &weights);
    Ok(FitResult {
        rate: slope,
        uncertainty: err,
        window: (xs[0], *xs.last().unwrap()),
        n_points: xs.len(),
        quality: r2,
        method: "logistic-growth".into(),
    })
}

/// Least-squares slope of log(rate) vs log(n̄).
pub fn fit_powerlaw_exponent(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} points for power-law fit, need 3",
            points.len()
        )));
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::Window("power-law fit requires positive abscissas and rates".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, _b, err, r2) = linear_fit(&xs, &ys, &[]);
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(FitResult {
        rate: slope,
        uncertainty: err,
        window: (sorted[0].0, sorted.last().unwrap().0),
        n_points: points.len(),
        quality: r2,
        method: "power-law".into(),
    })
}

#[derive(Debug, Clone, Copy)]
pub enum FrontMethod {
    /// Linear-interpolation crossing of theta * global max, per time slice,
    /// then a least-squares slope of the front position.
    Threshold { theta: f64 },
    /// Velocity minimizing the dispersion of C plotted against r - v t.
    Collapse,
}

/// Largest-r crossing of `level` in one slice, linearly interpolated.
fn front_position(distances: &[usize], values: &[f64], level: f64) -> Option<f64> {
    for ri in (0..values.len() - 1).rev() {
        let (a, b) = (values[ri], values[ri + 1]);
        if a >= level && b < level {
            let r0 = distances[ri] as f64;
            let r1 = distances[ri + 1] as f64;
            return Some(r0 + (r1 - r0) * (a - level) / (a - b).max(f64::MIN_POSITIVE));
        }
    }
    // front entirely above level out to the last reported distance
    if *values.last().unwrap() >= level {
        return Some(*distances.last().unwrap() as f64);
    }
    None
}

fn collapse_objective(profile: &Profile, v: f64, x_grid: &[f64]) -> f64 {
    // Interpolate each slice onto the shared x = r - v t grid and sum squared
    // deviations from the cross-slice mean.  Only the front region counts:
    // columns whose mean sits between 5% and 60% of the (normalised) bulk
    // maximum.  The source site (r = 0) and the still-equilibrating interior
    // do not collapse under x = r - v t and would otherwise bias the velocity.
    let n_t = profile.times.len();
    // Per-slice bulk amplitudes (r >= 1).  Slices still dominated by noise
    // (amplitude below 30% of the most developed slice) are excluded.
    let slice_maxima: Vec<f64> = profile
        .values
        .iter()
        .map(|slice| slice.iter().skip(1).cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let peak = slice_maxima.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return f64::INFINITY;
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(n_t); x_grid.len()];
    for (ti, &t) in profile.times.iter().enumerate() {
        let slice = &profile.values[ti];
        // Normalise each slice by its own bulk amplitude: before the bulk has
        // saturated the front grows in height as well as position, and a pure
        // shift cannot superimpose slices of different amplitude.
        let scale = slice_maxima[ti];
        if !(scale > 0.3 * peak) {
            continue;
        }
        for (xi, &x) in x_grid.iter().enumerate() {
            let r = x + v * t as f64;
            if r < 0.0 || r > *profile.distances.last().unwrap() as f64 {
                continue;
            }
            let lo = r.floor() as usize;
            let hi = (lo + 1).min(profile.distances.len() - 1);
            let frac = r - lo as f64;
            columns[xi].push((slice[lo] * (1.0 - frac) + slice[hi] * frac) / scale);
        }
    }
    let mut obj = 0.0;
    for col in &columns {
        if col.len() < 2 {
            continue;
        }
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        if !(0.05..=0.6).contains(&mean) {
            continue;
        }
        obj += col.iter().map(|&c| (c - mean) * (c - mean)).sum::<f64>();
    }
    obj
}

/// Ballistic front velocity of a spatial profile.
pub fn front_velocity(profile: &Profile, method: FrontMethod) -> Result<FitResult> {
    // Reference level from the bulk (r >= 1): the perturbed site itself can
    // retain a large residual value that never travels, and it must not set
    // the scale for the front.
    let global_max = profile
        .values
        .iter()
        .flat_map(|slice| slice.iter().skip(1))
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(global_max > 0.0) {
        return Err(Error::NoFront);
    }
    match method {
        FrontMethod::Threshold { theta } => {
            let level = theta * global_max;
            let mut ts = Vec::new();
            let mut rs = Vec::new();
            for (ti, &t) in profile.times.iter().enumerate() {
                // skip slices whose peak has not reached the level yet
                let slice_max = profile.values[ti].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if slice_max < level {
                    continue;
                }
                if let Some(r) = front_position(&profile.distances, &profile.values[ti], level) {
                    ts.push(t as f64);
                    rs.push(r);
                }
            }
            if ts.len() < 4 {
                return Err(Error::NoFront);
            }
            let (slope, _b, err, r2) = linear_fit(&ts, &rs, &[]);
            Ok(FitResult {
                rate: slope,
                uncertainty: err,
                window: (ts[0], *ts.last().unwrap()),
                n_points: ts.len(),
                quality: r2,
                method: format!("threshold-front(theta={theta})"),
            })
        }
        FrontMethod::Collapse => {
            let n_slices = profile.times.iter().filter(|&&t| t > 0).count();
            if n_slices < 4 {
                return Err(Error::NoFront);
            }
            let r_max = *profile.distances.last().unwrap() as f64;
            let t_max = *profile.times.last().unwrap() as f64;
            let x_grid: Vec<f64> = {
                let lo = -t_max.max(1.0);
                let n = 256usize;
                (0..n).map(|i| lo + (r_max - lo) * i as f64 / (n - 1) as f64).collect()
            };
            // coarse scan, then golden-section refinement
            let v_hi = (r_max / t_max.max(1.0)).max(1e-3) * 2.0;
            let n_scan = 128;
            let mut best = (0usize, f64::INFINITY);
            for i in 0..=n_scan {
                let v = v_hi * i as f64 / n_scan as f64;
                let obj = collapse_objective(profile, v, &x_grid);
                if obj < best.1 {
                    best = (i, obj);
                }
            }
            let mut lo = v_hi * best.0.saturating_sub(1) as f64 / n_scan as f64;
            let mut hi = v_hi * (best.0 + 1).min(n_scan) as f64 / n_scan as f64;
            let phi = (5f64.sqrt() - 1.0) / 2.0;
            let mut x1 = hi - phi * (hi - lo);
            let mut x2 = lo + phi * (hi - lo);
            let mut f1 = collapse_objective(profile, x1, &x_grid);
            let mut f2 = collapse_objective(profile, x2, &x_grid);
            for _ in 0..60 {
                if f1 < f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - phi * (hi - lo);
                    f1 = collapse_objective(profile, x1, &x_grid);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + phi * (hi - lo);
                    f2 = collapse_objective(profile, x2, &x_grid);
                }
            }
            let v = 0.5 * (lo + hi);
            // curvature-based uncertainty with the bracket width as a floor
            let h = (v_hi / n_scan as f64).max(1e-6);
            let f0 = collapse_objective(profile, v, &x_grid);
            let fp = collapse_objective(profile, v + h, &x_grid);
            let fm = collapse_objective(profile, (v - h).max(0.0), &x_grid);
            let curv = (fp + fm - 2.0 * f0) / (h * h);
            let unc = if curv > 0.0 {
                (2.0 * f0.max(f64::MIN_POSITIVE) / curv).sqrt().max(hi - lo)
            } else {
                hi - lo
            };
            Ok(FitResult {
                rate: v,
                uncertainty: unc,
                window: (profile.times[0] as f64, t_max),
                n_points: profile.times.len(),
                quality: 1.0 - f0 / collapse_objective(profile, 0.0, &x_grid).max(f64::MIN_POSITIVE),
                method: "collapse".into(),
            })
        }
    }
}

/// Percentile bootstrap interval for `statistic` at confidence `level`.
pub fn bootstrap_ci(
    samples: &[f64],
    statistic: impl Fn(&[f64]) -> f64,
    n_resamples: usize,
    level: f64,
    stream: &RngStream,
) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("empty sample set".into()));
    }
    if n_resamples < 100 {
        return Err(Error::InsufficientData(format!(
            "n_resamples = {n_resamples}, need >= 100"
        )));
    }
    let mut rng = stream.rng();
    let mut stats = Vec::with_capacity(n_resamples);
    let mut resample = vec![0.0; samples.len()];
    for _ in 0..n_resamples {
        for slot in resample.iter_mut() {
            *slot = samples[rng.gen_range(0..samples.len())];
        }
        stats.push(statistic(&resample));
    }
    stats.sort_by(|a, b| a.total_cmp(b));
    let alpha = (1.0 - level) / 2.0;
    let lo_idx = ((n_resamples as f64 * alpha) as usize).min(n_resamples - 1);
    let hi_idx = ((n_resamples as f64 * (1.0 - alpha)) as usize).min(n_resamples - 1);
    Ok((stats[lo_idx], stats[hi_idx]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::CurveMeta;
    use crate::stream::{Role, StreamKey};
    use approx::assert_relative_eq;

    fn meta() -> CurveMeta {
        CurveMeta {
            n_sites: 0,
            n_up: 0,
            density: 0.0,
            geometry: "test".into(),
            k: 3,
            f: 0.5,
            averaging: "synthetic".into(),
        }
    }

    fn curve(times: Vec<usize>, values: Vec<f64>) -> CurveEstimate {
        let n = values.len();
        CurveEstimate { times, values, stderr: vec![0.0; n], n_samples: 1, meta: meta() }
    }

    #[test]
    fn exponential_growth_exact() {
        let times: Vec<usize> = (0..20).collect();
        let values: Vec<f64> = times.iter().map(|&t| 1e-3 * (0.5 * t as f64).exp()).collect();
        let fit = fit_exponential_rate(&curve(times, values), 0.0, WindowPolicy::All).unwrap();
        assert_relative_eq!(fit.rate, 0.5, epsilon = 1e-6);
        assert!(fit.quality > 0.999999);
    }

    #[test]
    fn exponential_decay_with_baseline() {
        let times: Vec<usize> = (0..30).collect();
        let values: Vec<f64> = times.iter().map(|&t| 0.36 + 0.5 * (-0.2 * t as f64).exp()).collect();
        let fit = fit_exponential_rate(&curve(times, values), 0.36, WindowPolicy::All).unwrap();
        assert_relative_eq!(fit.rate, 0.2, epsilon = 1e-9);
        assert_eq!(fit.method, "exponential-decay");
    }

    #[test]
    fn logistic_rate_exact() {
        // y(t) = s / (1 + e^{-lambda (t - t0)}): the logit slope is exactly lambda.
        let s = 0.72;
        let lambda = 0.037;
        let t0 = 180.0;
        let times: Vec<usize> = (0..400).step_by(5).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|&t| s / (1.0 + (-lambda * (t as f64 - t0)).exp()))
            .collect();
        let fit = fit_logistic_rate(&curve(times, values), 0.0, s).unwrap();
        assert_relative_eq!(fit.rate, lambda, epsilon = 1e-9);
        assert!(fit.quality > 0.999999);
    }

    #[test]
    fn logistic_rate_with_baseline_and_weights() {
        let s = 1.0;
        let base = 0.25;
        let lambda = 0.08;
        let times: Vec<usize> = (0..300).step_by(3).collect();
        let mut c = curve(
            times.clone(),
            times
                .iter()
                .map(|&t| base + s / (1.0 + (-lambda * (t as f64 - 100.0)).exp()))
                .collect(),
        );
        c.stderr = c.values.iter().map(|v| 0.01 * v).collect();
        let fit = fit_logistic_rate(&c, base, base + s).unwrap();
        assert_relative_eq!(fit.rate, lambda, epsilon = 1e-9);
    }

    #[test]
    fn logistic_rate_rejects_bad_saturation() {
        let c = curve(vec![0, 1, 2, 3], vec![0.1, 0.2, 0.3, 0.4]);
        assert!(matches!(fit_logistic_rate(&c, 0.5, 0.5), Err(Error::Window(_))));
    }

    #[test]
    fn exponential_insufficient_points() {
        let fit = fit_exponential_rate(&curve(vec![0, 1, 2], vec![1.0, 2.0, 4.0]), 0.0, WindowPolicy::All);
        assert!(matches!(fit, Err(Error::InsufficientData(_))));
    }

    #[test]
    fn powerlaw_exact_and_scale_invariant() {
        let points: Vec<(f64, f64)> = [0.02, 0.05, 0.1, 0.2]
            .iter()
            .map(|&n| (n, 3.7 * n * n))
            .collect();
        let fit = fit_powerlaw_exponent(&points).unwrap();
        assert_relative_eq!(fit.rate, 2.0, epsilon = 1e-12);

        let scaled: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x, 17.0 * y)).collect();
        let fit2 = fit_powerlaw_exponent(&scaled).unwrap();
        assert_relative_eq!(fit.rate, fit2.rate, epsilon = 1e-12);
    }

    #[test]
    fn powerlaw_errors() {
        assert!(fit_powerlaw_exponent(&[(0.1, 1.0)]).is_err());
        assert!(fit_powerlaw_exponent(&[(0.1, 1.0), (0.2, -1.0), (0.3, 2.0)]).is_err());
    }

    fn step_profile(v: f64, t_slices: &[usize], r_max: usize, width: f64) -> Profile {
        // smooth traveling front: C = 4 / (1 + exp((r - v t)/width))
        let distances: Vec<usize> = (0..=r_max).collect();
        let values: Vec<Vec<f64>> = t_slices
            .iter()
            .map(|&t| {
                distances
                    .iter()
                    .map(|&r| 4.0 / (1.0 + ((r as f64 - v * t as f64) / width).exp()))
                    .collect()
            })
            .collect();
        Profile {
            distances,
            times: t_slices.to_vec(),
            stderr: values.iter().map(|row| vec![0.0; row.len()]).collect(),
            values,
            n_samples: 1,
            meta: meta(),
        }
    }

    #[test]
    fn front_threshold_ballistic_step() {
        // sharp step C = 4 * [r < 0.25 t]
        let distances: Vec<usize> = (0..=50).collect();
        let times: Vec<usize> = (0..=200).step_by(40).collect();
        let values: Vec<Vec<f64>> = times
            .iter()
            .map(|&t| distances.iter().map(|&r| if (r as f64) < 0.25 * t as f64 { 4.0 } else { 0.0 }).collect())
            .collect();
        let p = Profile {
            distances,
            times,
            stderr: values.iter().map(|r| vec![0.0; r.len()]).collect(),
            values,
            n_samples: 1,
            meta: meta(),
        };
        let fit = front_velocity(&p, FrontMethod::Threshold { theta: 0.5 }).unwrap();
        assert!((fit.rate - 0.25).abs() < 0.02, "v = {}", fit.rate);
    }

    #[test]
    fn front_methods_agree_on_diffusive_front() {
        let times: Vec<usize> = (40..=200).step_by(20).collect();
        let p = step_profile(0.31, &times, 120, 3.0);
        let a = front_velocity(&p, FrontMethod::Threshold { theta: 0.5 }).unwrap();
        let b = front_velocity(&p, FrontMethod::Collapse).unwrap();
        assert!((a.rate - 0.31).abs() < 0.02, "threshold v = {}", a.rate);
        assert!((b.rate - 0.31).abs() < 0.02, "collapse v = {}", b.rate);
        assert!((a.rate - b.rate).abs() <= (a.uncertainty + b.uncertainty).max(0.02));
    }

    #[test]
    fn front_invariances() {
        let times: Vec<usize> = (40..=200).step_by(20).collect();
        let p = step_profile(0.2, &times, 100, 2.0);
        let base = front_velocity(&p, FrontMethod::Threshold { theta: 0.5 }).unwrap();
        // positive rescaling of the whole profile
        let mut scaled = p.clone();
        for row in &mut scaled.values {
            for v in row.iter_mut() {
                *v *= 0.37;
            }
        }
        let s = front_velocity(&scaled, FrontMethod::Threshold { theta: 0.5 }).unwrap();
        assert_relative_eq!(base.rate, s.rate, epsilon = 1e-12);
        // time relabeling t -> t + 13 leaves the slope unchanged (same slices)
        let mut shifted = p.clone();
        for t in &mut shifted.times {
            *t += 13;
        }
        // recompute values so the front still matches the new labels? No:
        // invariance is about the fitted slope under relabeling of an
        // otherwise consistent profile, so rebuild at shifted times.
        let shifted = step_profile(0.2, &shifted.times, 100, 2.0);
        let sh = front_velocity(&shifted, FrontMethod::Threshold { theta: 0.5 }).unwrap();
        assert!((base.rate - sh.rate).abs() < 1e-6);
    }

    #[test]
    fn front_flat_profile_errors() {
        let distances: Vec<usize> = (0..=10).collect();
        let times: Vec<usize> = vec![0, 1, 2, 3, 4];
        let values = vec![vec![0.0; 11]; 5];
        let p = Profile {
            distances,
            times,
            stderr: values.clone(),
            values,
            n_samples: 1,
            meta: meta(),
        };
        assert!(matches!(front_velocity(&p, FrontMethod::Threshold { theta: 0.5 }), Err(Error::NoFront)));
    }

    #[test]
    fn bootstrap_basics() {
        let stream = RngStream::new(3, StreamKey::new(Role::Bootstrap, 0, 0, 0));
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let (lo, hi) = bootstrap_ci(&[2.0; 50], &mean, 200, 0.68, &stream).unwrap();
        assert_eq!((lo, hi), (2.0, 2.0));
        assert!(bootstrap_ci(&[], &mean, 200, 0.68, &stream).is_err());
        assert!(bootstrap_ci(&[1.0], &mean, 0, 0.68, &stream).is_err());
    }

    #[test]
    fn bootstrap_coverage() {
        // mean of {0,4} Bernoulli samples: 68% interval covers the truth in
        // >= 60% of synthetic trials
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let p_true = 0.3;
        let mu_true = 4.0 * p_true;
        let mut covered = 0;
        let n_trials = 200;
        for trial in 0..n_trials {
            let stream = RngStream::new(99, StreamKey::new(Role::Bootstrap, trial, 0, 0));
            let mut rng = stream.rng();
            let samples: Vec<f64> = (0..200)
                .map(|_| if rng.gen_bool(p_true) { 4.0 } else { 0.0 })
                .collect();
            let (lo, hi) = bootstrap_ci(
                &samples,
                &mean,
                300,
                0.68,
                &RngStream::new(99, StreamKey::new(Role::Bootstrap, trial, 1, 0)),
            )
            .unwrap();
            if lo <= mu_true && mu_true <= hi {
                covered += 1;
            }
        }
        let frac = covered as f64 / n_trials as f64;
        assert!(frac >= 0.60, "coverage {frac}");
    }
}
