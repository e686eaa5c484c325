//! Monte Carlo estimators for OTOCs, autocorrelators, and spatial profiles.
//!
//! Every trajectory is an independent pure computation keyed by
//! (seed, trajectory index); reduction to means is done in index order so
//! results are bit-identical regardless of worker count.

use crate::circuit::{build_schedule, evolve_pair_recorded, evolve_recorded, CircuitRealization, GateRule, Geometry};
use crate::error::{Error, Result};
use crate::lattice::{flip_bit, sample_sector_state_rng, ChargeSector};
use crate::stream::{Role, RngStream, StreamKey};
use rand::Rng;
use rayon::prelude::*;

/// A measured curve with per-time standard errors.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CurveEstimate {
    pub times: Vec<usize>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_samples: usize,
    pub meta: CurveMeta,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CurveMeta {
    pub n_sites: usize,
    pub n_up: usize,
    pub density: f64,
    pub geometry: String,
    pub k: usize,
    pub f: f64,
    pub averaging: String,
}

/// C(r, t) on a periodic chain, axes (times x distances).
#[derive(Debug, Clone, serde::Serialize)]
pub struct Profile {
    pub distances: Vec<usize>,
    pub times: Vec<usize>,
    /// values[ti][ri]
    pub values: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub n_samples: usize,
    pub meta: CurveMeta,
}

/// One OTOC draw: flip bit i, evolve both branches under the same circuit,
/// compare bit j. The squared Z difference is 0 or 4.
pub fn otoc_sample(
    sector: &ChargeSector,
    i: usize,
    j: usize,
    circuit: &CircuitRealization,
    t: usize,
    stream: &RngStream,
) -> Result<f64> {
    let n = sector.n_sites;
    if i >= n {
        return Err(Error::SiteOutOfRange { index: i, n_sites: n });
    }
    if j >= n {
        return Err(Error::SiteOutOfRange { index: j, n_sites: n });
    }
    let mut rng = stream.rng();
    let s = sample_sector_state_rng(sector, &mut rng);
    let s_star = flip_bit(&s, i)?;
    let mut val = 0.0;
    evolve_pair_recorded(&s, &s_star, circuit, t, |step, a, b| {
        if step == t {
            val = if a.get(j) != b.get(j) { 4.0 } else { 0.0 };
        }
    })?;
    Ok(val)
}

fn mean_stderr(sum: f64, sumsq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sumsq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

const CHUNK: usize = 1024;

// Deterministic reduction: trajectories are computed in chunks, each chunk in
// parallel, and the per-time accumulators are summed in trajectory order.
fn reduce_curves(
    n_samples: usize,
    t_len: usize,
    traj: impl Fn(usize) -> Vec<f64> + Sync,
) -> (Vec<f64>, Vec<f64>) {
    let mut sum = vec![0.0; t_len];
    let mut sumsq = vec![0.0; t_len];
    for chunk_start in (0..n_samples).step_by(CHUNK) {
        let chunk_end = (chunk_start + CHUNK).min(n_samples);
        let rows: Vec<Vec<f64>> = (chunk_start..chunk_end)
            .into_par_iter()
            .map(&traj)
            .collect();
        for row in rows {
            for (ti, v) in row.into_iter().enumerate() {
                sum[ti] += v;
                sumsq[ti] += v * v;
            }
        }
    }
    let n = n_samples;
    let mut values = vec![0.0; t_len];
    let mut stderr = vec![0.0; t_len];
    for ti in 0..t_len {
        let (m, e) = mean_stderr(sum[ti], sumsq[ti], n);
        values[ti] = m;
        stderr[ti] = e;
    }
    (values, stderr)
}

/// OTOC curve C_XZ(t): per trajectory a fresh circuit realization, a fresh
/// sector state and a uniform flip site i; the j average runs over all
/// j != i of the evolved pair (the "all-j" policy, same expectation as a
/// uniform single j at much lower variance).
pub fn otoc_curve(
    sector: &ChargeSector,
    geometry: Geometry,
    rule: GateRule,
    f: f64,
    t_max: usize,
    n_samples: usize,
    stream: &RngStream,
) -> Result<CurveEstimate> {
    if n_samples == 0 {
        return Err(Error::InsufficientData("n_samples must be >= 1".into()));
    }
    let n = sector.n_sites;
    // validate geometry/f once up front
    build_schedule(geometry, rule, f, t_max, stream)?;
    let sector = *sector;
    let (values, stderr) = reduce_curves(n_samples, t_max + 1, |m| {
        let circuit = build_schedule(
            geometry,
            rule,
            f,
            t_max,
            &stream.fork(StreamKey::new(Role::Trajectory, m as u64, 0, 0)),
        )
        .expect("validated");
        let mut rng = stream
            .fork(StreamKey::new(Role::Trajectory, m as u64, 1, 0))
            .rng();
        let s = sample_sector_state_rng(&sector, &mut rng);
        let i = rng.gen_range(0..n);
        let s_star = flip_bit(&s, i).expect("in range");
        let mut row = vec![0.0; t_max + 1];
        evolve_pair_recorded(&s, &s_star, &circuit, t_max, |t, a, b| {
            let mut d = a.hamming(b);
            if a.get(i) != b.get(i) {
                d -= 1; // exclude j = i
            }
            row[t] = 4.0 * d as f64 / (n - 1) as f64;
        })
        .expect("t <= n_steps");
        row
    });
    Ok(CurveEstimate {
        times: (0..=t_max).collect(),
        values,
        stderr,
        n_samples,
        meta: meta(&sector, geometry, rule, f, "site-averaged over all j != i, uniform i"),
    })
}

/// Autocorrelator C_Z(t), site-averaged per trajectory.
pub fn autocorr_curve(
    sector: &ChargeSector,
    geometry: Geometry,
    rule: GateRule,
    f: f64,
    t_max: usize,
    n_samples: usize,
    stream: &RngStream,
) -> Result<CurveEstimate> {
    if n_samples == 0 {
        return Err(Error::InsufficientData("n_samples must be >= 1".into()));
    }
    let n = sector.n_sites;
    build_schedule(geometry, rule, f, t_max, stream)?;
    let sector = *sector;
    let (values, stderr) = reduce_curves(n_samples, t_max + 1, |m| {
        let circuit = build_schedule(
            geometry,
            rule,
            f,
            t_max,
            &stream.fork(StreamKey::new(Role::Trajectory, m as u64, 0, 0)),
        )
        .expect("validated");
        let mut rng = stream
            .fork(StreamKey::new(Role::Trajectory, m as u64, 1, 0))
            .rng();
        let s0 = sample_sector_state_rng(&sector, &mut rng);
        let mut row = vec![0.0; t_max + 1];
        evolve_recorded(&s0, &circuit, t_max, |t, st| {
            let d = s0.hamming(st);
            // z_i(0) z_i(t) = +1 on agreeing sites, -1 on differing ones
            row[t] = (n as f64 - 2.0 * d as f64) / n as f64;
        })
        .expect("t <= n_steps");
        row
    });
    Ok(CurveEstimate {
        times: (0..=t_max).collect(),
        values,
        stderr,
        n_samples,
        meta: meta(&sector, geometry, rule, f, "site-averaged over i"),
    })
}

/// Spatial OTOC profile C(r, t) on a periodic chain, averaged over both
/// directions from the source site.
pub fn otoc_profile(
    sector: &ChargeSector,
    i0: usize,
    rule: GateRule,
    f: f64,
    times: &[usize],
    n_samples: usize,
    stream: &RngStream,
) -> Result<Profile> {
    if n_samples == 0 {
        return Err(Error::InsufficientData("n_samples must be >= 1".into()));
    }
    let l = sector.n_sites;
    if i0 >= l {
        return Err(Error::SiteOutOfRange { index: i0, n_sites: l });
    }
    let geometry = Geometry::Chain { l_sites: l };
    let t_max = times.iter().copied().max().unwrap_or(0);
    build_schedule(geometry, rule, f, t_max, stream)?;
    let r_max = l / 2;
    let n_r = r_max + 1;
    let record: Vec<bool> = {
        let mut v = vec![false; t_max + 1];
        for &t in times {
            v[t] = true;
        }
        v
    };
    let t_index: Vec<usize> = {
        let mut idx = vec![usize::MAX; t_max + 1];
        for (ti, &t) in times.iter().enumerate() {
            idx[t] = ti;
        }
        idx
    };
    let sector = *sector;

    let mut sum = vec![vec![0.0; n_r]; times.len()];
    let mut sumsq = vec![vec![0.0; n_r]; times.len()];
    for chunk_start in (0..n_samples).step_by(CHUNK) {
        let chunk_end = (chunk_start + CHUNK).min(n_samples);
        let rows: Vec<Vec<Vec<f64>>> = (chunk_start..chunk_end)
            .into_par_iter()
            .map(|m| {
                let circuit = build_schedule(
                    geometry,
                    rule,
                    f,
                    t_max,
                    &stream.fork(StreamKey::new(Role::Trajectory, m as u64, 0, 0)),
                )
                .expect("validated");
                let mut rng = stream
                    .fork(StreamKey::new(Role::Trajectory, m as u64, 1, 0))
                    .rng();
                let s = sample_sector_state_rng(&sector, &mut rng);
                let s_star = flip_bit(&s, i0).expect("in range");
                let mut grid = vec![vec![0.0; n_r]; times.len()];
                evolve_pair_recorded(&s, &s_star, &circuit, t_max, |t, a, b| {
                    if t > t_max || !record[t] {
                        return;
                    }
                    let row = &mut grid[t_index[t]];
                    for site in a.diff_sites(b) {
                        let d = (site as i64 - i0 as i64).unsigned_abs() as usize;
                        let r = d.min(l - d);
                        // two directions contribute at each 0 < r < L/2
                        let w = if r == 0 || 2 * r == l { 4.0 } else { 2.0 };
                        row[r] += w;
                    }
                })
                .expect("t <= n_steps");
                grid
            })
            .collect();
        for grid in rows {
            for (ti, row) in grid.into_iter().enumerate() {
                for (ri, v) in row.into_iter().enumerate() {
                    sum[ti][ri] += v;
                    sumsq[ti][ri] += v * v;
                }
            }
        }
    }
    let mut values = vec![vec![0.0; n_r]; times.len()];
    let mut stderr = vec![vec![0.0; n_r]; times.len()];
    for ti in 0..times.len() {
        for ri in 0..n_r {
            let (m, e) = mean_stderr(sum[ti][ri], sumsq[ti][ri], n_samples);
            values[ti][ri] = m;
            stderr[ti][ri] = e;
        }
    }
    Ok(Profile {
        distances: (0..=r_max).collect(),
        times: times.to_vec(),
        values,
        stderr,
        n_samples,
        meta: meta(&sector, geometry, rule, f, "two-direction average from source"),
    })
}

fn meta(sector: &ChargeSector, geometry: Geometry, rule: GateRule, f: f64, averaging: &str) -> CurveMeta {
    CurveMeta {
        n_sites: sector.n_sites,
        n_up: sector.n_up,
        density: sector.density(),
        geometry: match geometry {
            Geometry::AllToAll { .. } => "all-to-all".into(),
            Geometry::Chain { .. } => "chain".into(),
        },
        k: rule.k(),
        f,
        averaging: averaging.into(),
    }
}

/// CSV with header `t,value,stderr,n_samples`.
pub fn curve_csv(curve: &CurveEstimate) -> String {
    let mut out = String::from("t,value,stderr,n_samples\n");
    for i in 0..curve.times.len() {
        out.push_str(&format!(
            "{},{:e},{:e},{}\n",
            curve.times[i], curve.values[i], curve.stderr[i], curve.n_samples
        ));
    }
    out
}

/// CSV with header `t,r,value,stderr`.
pub fn profile_csv(profile: &Profile) -> String {
    let mut out = String::from("t,r,value,stderr\n");
    for (ti, &t) in profile.times.iter().enumerate() {
        for (ri, &r) in profile.distances.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{:e},{:e}\n",
                t, r, profile.values[ti][ri], profile.stderr[ti][ri]
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FillingConvention;

    fn stream(c: u64) -> RngStream {
        RngStream::new(13, StreamKey::new(Role::Generic, c, 0, 0))
    }

    fn sector(n: usize, up: usize) -> ChargeSector {
        ChargeSector::new(n, up, FillingConvention::UpFraction).unwrap()
    }

    #[test]
    fn otoc_sample_t0() {
        let rule = GateRule::new(3).unwrap();
        let c = build_schedule(Geometry::AllToAll { n_sites: 8 }, rule, 0.5, 0, &stream(0)).unwrap();
        let sec = sector(8, 3);
        for m in 0..20 {
            let v = otoc_sample(&sec, 2, 5, &c, 0, &stream(m)).unwrap();
            assert_eq!(v, 0.0);
            let v = otoc_sample(&sec, 2, 2, &c, 0, &stream(m)).unwrap();
            assert_eq!(v, 4.0);
        }
    }

    #[test]
    fn otoc_sample_values_in_0_4() {
        let rule = GateRule::new(3).unwrap();
        let c = build_schedule(Geometry::AllToAll { n_sites: 9 }, rule, 0.5, 6, &stream(1)).unwrap();
        let sec = sector(9, 4);
        for m in 0..100 {
            let v = otoc_sample(&sec, 1, 7, &c, 6, &stream(m)).unwrap();
            assert!(v == 0.0 || v == 4.0);
        }
    }

    #[test]
    fn otoc_curve_f0_is_zero() {
        let rule = GateRule::new(3).unwrap();
        let sec = sector(12, 4);
        let c = otoc_curve(&sec, Geometry::AllToAll { n_sites: 12 }, rule, 0.0, 5, 50, &stream(2)).unwrap();
        assert!(c.values.iter().all(|&v| v == 0.0));
        assert_eq!(c.values[0], 0.0); // i = j excluded at t = 0
    }

    #[test]
    fn otoc_curve_values_bounded() {
        let rule = GateRule::new(3).unwrap();
        let sec = sector(12, 6);
        let c = otoc_curve(&sec, Geometry::AllToAll { n_sites: 12 }, rule, 0.8, 10, 200, &stream(3)).unwrap();
        assert!(c.values.iter().all(|&v| (0.0..=4.0).contains(&v)));
        assert!(c.stderr.iter().all(|&e| e >= 0.0));
    }

    #[test]
    fn autocorr_t0_and_saturation() {
        let rule = GateRule::new(3).unwrap();
        // half filling saturates to (1 - 2*0.5)^2 = 0
        let sec = sector(16, 8);
        let c = autocorr_curve(&sec, Geometry::AllToAll { n_sites: 16 }, rule, 0.9, 60, 400, &stream(4)).unwrap();
        assert_eq!(c.values[0], 1.0);
        let late = c.values[60];
        assert!(late.abs() < 0.1, "late value {late}");
        assert!(c.values.iter().all(|&v| (-1.0..=1.0).contains(&v)));
    }

    #[test]
    fn autocorr_saturation_low_density() {
        let rule = GateRule::new(3).unwrap();
        let sec = sector(20, 4); // nbar = 0.2, saturation (1-0.4)^2 = 0.36
        let c = autocorr_curve(&sec, Geometry::AllToAll { n_sites: 20 }, rule, 0.9, 150, 600, &stream(5)).unwrap();
        let late: f64 = c.values[120..].iter().sum::<f64>() / 31.0;
        assert!((late - 0.36).abs() < 0.05, "late value {late}");
    }

    #[test]
    fn profile_t0_and_cone() {
        let rule = GateRule::new(3).unwrap();
        let sec = sector(30, 24); // chain uses mostly-occupied sectors
        let times = [0usize, 1, 2, 3];
        let p = otoc_profile(&sec, 15, rule, 0.5, &times, 100, &stream(6)).unwrap();
        // t = 0: nonzero only at r = 0
        assert_eq!(p.values[0][0], 4.0);
        assert!(p.values[0][1..].iter().all(|&v| v == 0.0));
        // outside the deterministic cone the profile is exactly zero
        let cone = rule.cone_per_period();
        for (ti, &t) in times.iter().enumerate() {
            for (ri, &r) in p.distances.iter().enumerate() {
                if r > cone * t {
                    assert_eq!(p.values[ti][ri], 0.0, "t={t} r={r}");
                }
                assert!((0.0..=4.0).contains(&p.values[ti][ri]));
            }
        }
    }

    #[test]
    fn charge_sector_closure_both_branches() {
        let rule = GateRule::new(3).unwrap();
        let sec = sector(24, 6);
        for m in 0..50u64 {
            let c = build_schedule(Geometry::AllToAll { n_sites: 24 }, rule, 0.7, 12, &stream(m)).unwrap();
            let mut rng = stream(200 + m).rng();
            let s = sample_sector_state_rng(&sec, &mut rng);
            let i = rng.gen_range(0..24);
            let s_star = flip_bit(&s, i).unwrap();
            let q = s.charge();
            let q_star = s_star.charge();
            evolve_pair_recorded(&s, &s_star, &c, 12, |_, a, b| {
                assert_eq!(a.charge(), q);
                assert_eq!(b.charge(), q_star);
            })
            .unwrap();
        }
    }

    #[test]
    fn csv_schemas() {
        let rule = GateRule::new(3).unwrap();
        let sec = sector(9, 3);
        let c = otoc_curve(&sec, Geometry::AllToAll { n_sites: 9 }, rule, 0.5, 2, 10, &stream(7)).unwrap();
        let csv = curve_csv(&c);
        assert!(csv.starts_with("t,value,stderr,n_samples\n"));
        assert_eq!(csv.lines().count(), 4);

        let p = otoc_profile(&sector(12, 9), 6, rule, 0.5, &[0, 1], 10, &stream(8)).unwrap();
        let csv = profile_csv(&p);
        assert!(csv.starts_with("t,r,value,stderr\n"));
        assert_eq!(csv.lines().count(), 1 + 2 * 7);
    }

    #[test]
    fn deterministic_rerun() {
        let rule = GateRule::new(3).unwrap();
        let sec = sector(10, 3);
        let a = otoc_curve(&sec, Geometry::AllToAll { n_sites: 10 }, rule, 0.5, 5, 64, &stream(9)).unwrap();
        let b = otoc_curve(&sec, Geometry::AllToAll { n_sites: 10 }, rule, 0.5, 5, 64, &stream(9)).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.stderr, b.stderr);
    }
}
