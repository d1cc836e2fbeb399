//! Point-source description and the Ricker wavelet pair.

use super::grid::Point;
use std::f64::consts::PI;

/// Event description: where and when the source acts, and the wavelet it
/// radiates.
#[derive(Clone, Copy, Debug)]
pub struct SourceParams {
    /// Hypocenter (km).
    pub xi: Point,
    /// Origin time (s).
    pub tau: f64,
    /// Dominant frequency (Hz).
    pub f0: f64,
    /// Wavelet amplitude.
    pub a: f64,
}

impl SourceParams {
    pub fn new(xi: Point, tau: f64, f0: f64, a: f64) -> Self {
        assert!(f0 > 0.0, "dominant frequency must be positive");
        assert!(a != 0.0, "amplitude must be nonzero");
        Self { xi, tau, f0, a }
    }

    /// Source time function at simulation time t.
    pub fn wavelet(&self, t: f64) -> f64 {
        ricker(t - self.tau, self.f0, self.a)
    }

    pub fn wavelet_rate(&self, t: f64) -> f64 {
        ricker_derivative(t - self.tau, self.f0, self.a)
    }

    /// True when the wavelet is negligible at t = 0, so a zero initial
    /// condition is consistent with the source history. Advisory only:
    /// the location loop proposes trial origin times freely.
    pub fn quiet_at_start(&self) -> bool {
        ricker(-self.tau, self.f0, self.a).abs() < 1e-8 * self.a.abs()
    }

    pub fn with_xi_tau(&self, xi: Point, tau: f64) -> Self {
        Self { xi, tau, ..*self }
    }
}

/// Ricker wavelet A(1 - 2 pi^2 f0^2 t^2) exp(-pi^2 f0^2 t^2).
pub fn ricker(t: f64, f0: f64, a: f64) -> f64 {
    let q = PI * PI * f0 * f0 * t * t;
    a * (1.0 - 2.0 * q) * (-q).exp()
}

/// Analytic time derivative of `ricker`.
pub fn ricker_derivative(t: f64, f0: f64, a: f64) -> f64 {
    let p = PI * PI * f0 * f0;
    a * (-6.0 * p * t + 4.0 * p * p * t * t * t) * (-p * t * t).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ricker_peak_is_the_amplitude() {
        assert_eq!(ricker(0.0, 2.0, 1.0), 1.0);
        assert_eq!(ricker(0.0, 0.5, -3.0), -3.0);
    }

    #[test]
    fn ricker_zero_crossing_at_the_analytic_root() {
        // 1 - 2 pi^2 f0^2 t^2 = 0 at t = 1/(sqrt(2) pi f0)
        let f0 = 2.0;
        let t = 1.0 / (2.0f64.sqrt() * PI * f0);
        assert!(ricker(t, f0, 1.0).abs() < 1e-15);
    }

    #[test]
    fn ricker_frozen_values() {
        // extended-precision evaluations of the closed form
        assert!((ricker(0.25, 2.0, 1.0) - -0.33369079229646944).abs() < 1e-15);
        assert!((ricker(-0.1, 2.0, 1.0) - 0.14179420010825119).abs() < 1e-15);
        assert!((ricker(0.5, 2.0, 1.0) - -0.00096925158618720836).abs() < 1e-17);
    }

    #[test]
    fn derivative_frozen_values_and_origin() {
        assert_eq!(ricker_derivative(0.0, 2.0, 1.0), 0.0);
        assert!((ricker_derivative(0.25, 2.0, 1.0) - 3.2388261063637939).abs() < 1e-13);
        assert!((ricker_derivative(-0.1, 2.0, 1.0) - 11.760187151613520).abs() < 1e-13);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let f0 = 2.0;
        let h = 1e-6;
        for &t in &[0.1, 0.13, -0.2, 0.33] {
            let fd = (ricker(t + h, f0, 1.0) - ricker(t - h, f0, 1.0)) / (2.0 * h);
            let an = ricker_derivative(t, f0, 1.0);
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "t={t}: fd={fd} an={an}");
        }
    }

    #[test]
    fn wavelet_decays_fast() {
        for &f0 in &[0.5, 1.0, 2.0] {
            let t = 2.5 / f0;
            assert!(ricker(t, f0, 1.0).abs() < 1e-12);
            assert!(ricker_derivative(t, f0, 1.0).abs() < 1e-12 * f0);
        }
    }

    #[test]
    fn quiet_start_check() {
        let s = SourceParams::new(Point::new(50.0, -30.0), 10.0, 2.0, 1.0);
        assert!(s.quiet_at_start());
        let late = SourceParams::new(Point::new(50.0, -30.0), 0.1, 2.0, 1.0);
        assert!(!late.quiet_at_start());
    }

    proptest! {
        #[test]
        fn ricker_is_even_and_derivative_odd(t in -3.0f64..3.0, f0 in 0.3f64..4.0) {
            let a = 1.7;
            prop_assert!((ricker(t, f0, a) - ricker(-t, f0, a)).abs() < 1e-12);
            prop_assert!((ricker_derivative(t, f0, a) + ricker_derivative(-t, f0, a)).abs() < 1e-12);
        }
    }
}
