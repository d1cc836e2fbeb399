//! Time-shift alignment of observed and synthetic traces.
//!
//! When a trial source has roughly the right position but the wrong
//! origin time, each synthetic trace is close to the observed one slid
//! in time. Scanning the relative misfit of the slid synthetic over a
//! lattice of shifts exposes that slide as a sharp minimum, and a
//! cluster of stations that agree on the shift yields a robust
//! origin-time correction even when the trial position is far off.

use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::wave::{Seismogram, SeismogramSet};

/// Two cluster windows whose spreads differ by less than this count as
/// tied; ties prefer the smaller correction, then the earlier window.
const TIE_EPS: f64 = 1e-15;

/// Relative misfit of a shifted synthetic against one observed trace,
/// sampled on integer multiples of dt.
#[derive(Clone, Debug)]
pub struct ShiftCurve {
    pub dt: f64,
    /// Shifts run from -max_shift to +max_shift samples.
    pub max_shift: usize,
    /// 2*max_shift + 1 error values, one per shift sample.
    pub errors: Vec<f64>,
}

impl ShiftCurve {
    /// Shift in seconds at position `i` of `errors`.
    pub fn shift_at(&self, i: usize) -> f64 {
        (i as f64 - self.max_shift as f64) * self.dt
    }

    /// Shift axis matching `errors`, for dumps.
    pub fn taus(&self) -> Vec<f64> {
        (0..self.errors.len()).map(|i| self.shift_at(i)).collect()
    }
}

/// Misfit of the synthetic slid by each lattice shift: at shift tau the
/// synthetic is read at t - tau, taken as zero outside its recorded
/// window, and compared against the observed trace in relative L2 norm.
///
/// `scan_half_width` caps the scan at |tau| <= that many seconds; `None`
/// scans every shift that still overlaps the record.
pub fn relative_error_curve(
    data: &Seismogram,
    synth: &Seismogram,
    scan_half_width: Option<f64>,
) -> Result<ShiftCurve> {
    assert!(data.same_clock(synth), "traces must share the clock");
    let nt = data.nt();
    let dt = data.dt;
    let max_shift = match scan_half_width {
        Some(w) => {
            assert!(w >= 0.0, "scan half width must be nonnegative");
            ((w / dt).floor() as usize).min(nt - 1)
        }
        None => nt - 1,
    };
    let d = &data.samples;
    let s = &synth.samples;
    let norm2: f64 = d.iter().map(|v| v * v).sum();
    if norm2 <= 0.0 {
        return Err(Error::degenerate("observed trace has zero energy"));
    }
    // Prefix sums of d^2 pay for the samples the slid synthetic no
    // longer covers.
    let mut pref = vec![0.0; nt + 1];
    for i in 0..nt {
        pref[i + 1] = pref[i] + d[i] * d[i];
    }
    let m0 = max_shift as i64;
    let errors: Vec<f64> = (-m0..=m0)
        .map(|m| {
            // d[i] overlaps s[i - m] while both indices are in window.
            let (lo, hi) = if m >= 0 { (m as usize, nt) } else { (0, nt - m.unsigned_abs() as usize) };
            let mut acc = pref[lo] + (pref[nt] - pref[hi]);
            for i in lo..hi {
                let r = d[i] - s[(i as i64 - m) as usize];
                acc += r * r;
            }
            (acc / norm2).sqrt()
        })
        .collect();
    Ok(ShiftCurve { dt, max_shift, errors })
}

/// Optimal shift of one curve: the lattice minimizer, refined by a
/// three-point parabola when it is interior. Exact ties go to the
/// smallest |shift|.
pub fn best_shift_single(curve: &ShiftCurve) -> f64 {
    let v = &curve.errors;
    assert!(!v.is_empty());
    let mut best = 0usize;
    for i in 1..v.len() {
        let better = v[i] < v[best]
            || (v[i] == v[best] && curve.shift_at(i).abs() < curve.shift_at(best).abs());
        if better {
            best = i;
        }
    }
    let mut tau = curve.shift_at(best);
    if best > 0 && best + 1 < v.len() {
        let (y1, y2, y3) = (v[best - 1], v[best], v[best + 1]);
        let den = y1 - 2.0 * y2 + y3;
        // den > 0 means genuine curvature; the offset then stays within
        // half a sample of the lattice minimizer.
        if den > 0.0 {
            tau += 0.5 * curve.dt * (y1 - y3) / den;
        }
    }
    tau
}

/// Tightest cluster of n shifts and its mean. For a fixed subset the
/// best center is the mean, and the best fixed-size subset is always
/// contiguous in sorted order, so sorting and scanning the contiguous
/// windows is an exact minimizer over all n-subsets.
///
/// Returns 1-based station ids in ascending order and the cluster mean.
pub fn select_receivers(tau_stars: &[f64], n: usize) -> Result<(Vec<usize>, f64)> {
    if n == 0 || n > tau_stars.len() {
        return Err(Error::contract(format!(
            "subset size {n} not in 1..={}",
            tau_stars.len()
        )));
    }
    assert!(tau_stars.iter().all(|t| t.is_finite()), "shifts must be finite");
    let mut order: Vec<usize> = (0..tau_stars.len()).collect();
    order.sort_by(|&a, &b| tau_stars[a].total_cmp(&tau_stars[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| tau_stars[i]).collect();
    let mut best: Option<(f64, f64, usize)> = None; // (spread, mean, start)
    for start in 0..=(sorted.len() - n) {
        let w = &sorted[start..start + n];
        let mean = w.iter().sum::<f64>() / n as f64;
        let ssd = w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
        let take = match best {
            None => true,
            Some((bs, bm, _)) => {
                ssd < bs - TIE_EPS || ((ssd - bs).abs() <= TIE_EPS && mean.abs() < bm.abs() - TIE_EPS)
            }
        };
        if take {
            best = Some((ssd, mean, start));
        }
    }
    let (_, mean, start) = best.unwrap();
    let mut ids: Vec<usize> = order[start..start + n].iter().map(|&i| i + 1).collect();
    ids.sort_unstable();
    Ok((ids, mean))
}

/// Pointwise sum of per-station curves on a shared shift lattice.
pub fn summed_curve(curves: &[&ShiftCurve]) -> ShiftCurve {
    assert!(!curves.is_empty());
    let first = curves[0];
    let mut errors = vec![0.0; first.errors.len()];
    for c in curves {
        assert!(
            c.dt == first.dt && c.max_shift == first.max_shift,
            "curves must share the shift lattice"
        );
        for (a, e) in errors.iter_mut().zip(&c.errors) {
            *a += e;
        }
    }
    ShiftCurve { dt: first.dt, max_shift: first.max_shift, errors }
}

/// Joint shift for a fixed station subset: minimizes the sum of the
/// member curves, with the same parabolic refinement as the
/// single-station estimate.
pub fn refine_shift(
    data: &SeismogramSet,
    synth: &SeismogramSet,
    selected: &[usize],
    scan_half_width: Option<f64>,
) -> Result<f64> {
    assert!(!selected.is_empty(), "empty station subset");
    let curves: Vec<ShiftCurve> = selected
        .iter()
        .map(|&r| relative_error_curve(data.trace(r), synth.trace(r), scan_half_width))
        .collect::<Result<_>>()?;
    let refs: Vec<&ShiftCurve> = curves.iter().collect();
    Ok(best_shift_single(&summed_curve(&refs)))
}

/// Origin time corrected by a measured shift. Sliding the synthetic by
/// tau_star is the same as moving the trial origin time by it, so the
/// correction is additive.
pub fn shifted_origin(tau: f64, tau_star: f64) -> f64 {
    tau + tau_star
}

/// Everything one alignment pass learned: per-station shifts, the
/// agreeing subset, and the joint correction.
#[derive(Clone, Debug)]
pub struct ShiftEstimate {
    /// Optimal shift per station, index r - 1.
    pub tau_star_r: Vec<f64>,
    /// Selected station ids, 1-based, ascending.
    pub selected: Vec<usize>,
    /// Mean shift of the selected cluster.
    pub tau_bar: f64,
    /// Joint shift refined on the summed curves of the cluster.
    pub tau_star: f64,
}

/// Full alignment pass: per-station curves (computed concurrently),
/// per-station shifts, tightest n-cluster, then joint refinement on the
/// cluster's summed curves.
pub fn estimate_shift(
    data: &SeismogramSet,
    synth: &SeismogramSet,
    n: usize,
    scan_half_width: Option<f64>,
    exec: ExecMode,
) -> Result<ShiftEstimate> {
    assert_eq!(data.len(), synth.len(), "station counts must match");
    let curves = map_indexed(exec, data.len(), |k| {
        relative_error_curve(data.trace(k + 1), synth.trace(k + 1), scan_half_width)
    });
    let curves: Vec<ShiftCurve> = curves.into_iter().collect::<Result<_>>()?;
    let tau_star_r: Vec<f64> = curves.iter().map(best_shift_single).collect();
    let (selected, tau_bar) = select_receivers(&tau_star_r, n)?;
    let member: Vec<&ShiftCurve> = selected.iter().map(|&r| &curves[r - 1]).collect();
    let tau_star = best_shift_single(&summed_curve(&member));
    Ok(ShiftEstimate { tau_star_r, selected, tau_bar, tau_star })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ricker;
    use proptest::prelude::*;

    fn pulse(delay: f64, dt: f64, nt: usize) -> Vec<f64> {
        (0..nt).map(|i| ricker(i as f64 * dt - delay, 2.0, 1.0)).collect()
    }

    fn trace(r: usize, dt: f64, samples: Vec<f64>) -> Seismogram {
        Seismogram::new(r, dt, samples)
    }

    #[test]
    fn identical_traces_align_at_zero() {
        let dt = 0.015;
        let d = trace(1, dt, pulse(5.0, dt, 800));
        let c = relative_error_curve(&d, &d, None).unwrap();
        assert_eq!(c.errors.len(), 2 * 799 + 1);
        assert_eq!(c.errors[c.max_shift], 0.0);
        assert_eq!(best_shift_single(&c), 0.0);
    }

    #[test]
    fn zero_synthetic_gives_a_flat_unit_curve() {
        let dt = 0.01;
        let d = trace(1, dt, pulse(2.0, dt, 400));
        let s = trace(1, dt, vec![0.0; 400]);
        let c = relative_error_curve(&d, &s, Some(1.0)).unwrap();
        assert_eq!(c.max_shift, 100);
        for e in &c.errors {
            assert!((e - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_data_is_degenerate() {
        let dt = 0.01;
        let d = trace(1, dt, vec![0.0; 100]);
        let s = trace(1, dt, pulse(0.3, dt, 100));
        assert!(relative_error_curve(&d, &s, None).is_err());
    }

    #[test]
    fn a_delayed_copy_is_recovered_with_opposite_sign() {
        // synthetic = data delayed by 0.3 s, so the best shift is -0.3:
        // sliding it back by 0.3 reproduces the data exactly on the
        // overlap, and the pulse coda is already zero at the window end.
        let dt = 0.015;
        let d = trace(1, dt, pulse(5.0, dt, 1000));
        let s = trace(1, dt, pulse(5.3, dt, 1000));
        let c = relative_error_curve(&d, &s, None).unwrap();
        let tau = best_shift_single(&c);
        assert!((tau + 0.3).abs() < 1e-3, "tau = {tau}");
    }

    #[test]
    fn scan_window_caps_the_lattice() {
        let dt = 0.015;
        let d = trace(1, dt, pulse(5.0, dt, 600));
        let c = relative_error_curve(&d, &d, Some(1.5)).unwrap();
        assert_eq!(c.max_shift, 100);
        assert_eq!(c.shift_at(0), -1.5);
    }

    #[test]
    fn cluster_of_three_nearby_values_wins() {
        let shifts = [0.10, 0.12, 0.11, 0.50, -0.30];
        let (ids, mean) = select_receivers(&shifts, 3).unwrap();
        assert_eq!(ids, vec![1, 2, 3]);
        assert!((mean - 0.11).abs() < 1e-15);
    }

    #[test]
    fn equal_shifts_pick_the_lowest_stations() {
        let shifts = [0.2; 7];
        let (ids, mean) = select_receivers(&shifts, 4).unwrap();
        assert_eq!(ids, vec![1, 2, 3, 4]);
        assert_eq!(mean, 0.2);
    }

    #[test]
    fn oversized_subset_is_a_contract_error() {
        assert!(select_receivers(&[0.1, 0.2], 3).is_err());
        assert!(select_receivers(&[0.1, 0.2], 0).is_err());
    }

    #[test]
    fn origin_correction_is_additive() {
        assert_eq!(shifted_origin(10.0, 0.0), 10.0);
        assert_eq!(shifted_origin(10.0, -0.2), 9.8);
    }

    #[test]
    fn joint_refinement_matches_the_single_station_case() {
        let dt = 0.015;
        let d = SeismogramSet::new(vec![trace(1, dt, pulse(5.0, dt, 900))]);
        let s = SeismogramSet::new(vec![trace(1, dt, pulse(5.45, dt, 900))]);
        let single =
            best_shift_single(&relative_error_curve(d.trace(1), s.trace(1), None).unwrap());
        let joint = refine_shift(&d, &s, &[1], None).unwrap();
        assert_eq!(joint, single);
        assert!((joint + 0.45).abs() < 1e-3);
    }

    #[test]
    fn common_delay_across_stations_is_recovered_jointly() {
        let dt = 0.015;
        let delay = 0.6; // exactly 40 samples
        let d = SeismogramSet::new(
            (1..=5).map(|r| trace(r, dt, pulse(4.0 + 0.3 * r as f64, dt, 1000))).collect(),
        );
        let s = SeismogramSet::new(
            (1..=5)
                .map(|r| trace(r, dt, pulse(4.0 + 0.3 * r as f64 + delay, dt, 1000)))
                .collect(),
        );
        let est = estimate_shift(&d, &s, 4, None, ExecMode::Sequential).unwrap();
        assert_eq!(est.selected.len(), 4);
        assert!((est.tau_star + delay).abs() < 1e-3, "tau_star = {}", est.tau_star);
        assert!((est.tau_bar + delay).abs() < 1e-3);
    }

    #[test]
    fn parallel_and_sequential_estimates_agree_exactly() {
        let dt = 0.02;
        let d = SeismogramSet::new(
            (1..=6).map(|r| trace(r, dt, pulse(3.0 + 0.2 * r as f64, dt, 500))).collect(),
        );
        let s = SeismogramSet::new(
            (1..=6).map(|r| trace(r, dt, pulse(3.3 + 0.21 * r as f64, dt, 500))).collect(),
        );
        let a = estimate_shift(&d, &s, 3, None, ExecMode::Sequential).unwrap();
        let b = estimate_shift(&d, &s, 3, None, ExecMode::Parallel).unwrap();
        assert_eq!(a.tau_star_r, b.tau_star_r);
        assert_eq!(a.selected, b.selected);
        assert_eq!(a.tau_star, b.tau_star);
    }

    /// Exhaustive subset minimizer used as an oracle for the sort-and-scan
    /// selection.
    fn brute_force_select(shifts: &[f64], n: usize) -> (Vec<usize>, f64, f64) {
        fn walk(
            shifts: &[f64],
            n: usize,
            start: usize,
            chosen: &mut Vec<usize>,
            best: &mut Option<(f64, f64, Vec<usize>)>,
        ) {
            if chosen.len() == n {
                let mean = chosen.iter().map(|&i| shifts[i]).sum::<f64>() / n as f64;
                let ssd = chosen
                    .iter()
                    .map(|&i| (shifts[i] - mean) * (shifts[i] - mean))
                    .sum::<f64>();
                let replace = match best {
                    None => true,
                    Some((bs, _, _)) => ssd < *bs - TIE_EPS,
                };
                if replace {
                    *best = Some((ssd, mean, chosen.clone()));
                }
                return;
            }
            for i in start..shifts.len() {
                chosen.push(i);
                walk(shifts, n, i + 1, chosen, best);
                chosen.pop();
            }
        }
        let mut best = None;
        walk(shifts, n, 0, &mut Vec::new(), &mut best);
        let (ssd, mean, idx) = best.unwrap();
        (idx.into_iter().map(|i| i + 1).collect(), mean, ssd)
    }

    proptest! {
        #[test]
        fn selection_matches_exhaustive_enumeration(
            shifts in prop::collection::vec(-2.0f64..2.0, 7..=10),
            n in 2usize..=5,
        ) {
            let (ids, mean) = select_receivers(&shifts, n).unwrap();
            let (bids, bmean, bssd) = brute_force_select(&shifts, n);
            // Random reals make exact objective ties measure zero, so the
            // memberships must agree outright.
            prop_assert_eq!(ids, bids);
            prop_assert!((mean - bmean).abs() < 1e-12);
            let _ = bssd;
        }

        #[test]
        fn a_larger_cluster_never_spreads_less(
            shifts in prop::collection::vec(-1.0f64..1.0, 8..=12),
        ) {
            let spread = |n: usize| {
                let (ids, mean) = select_receivers(&shifts, n).unwrap();
                ids.iter().map(|&r| {
                    let x = shifts[r - 1] - mean;
                    x * x
                }).sum::<f64>()
            };
            let (s3, s5, s7) = (spread(3), spread(5), spread(7));
            prop_assert!(s3 <= s5 + 1e-12);
            prop_assert!(s5 <= s7 + 1e-12);
        }
    }
}
