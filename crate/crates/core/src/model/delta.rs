//! Discretized point source: a piecewise-quintic approximate delta with
//! support |x| <= 3h. The 2D delta is the tensor product of two 1D
//! evaluations. The quintic reproduces the zeroth through second moments
//! of the delta on the grid for arbitrary sub-grid source positions,
//! which keeps the injected wavefield accurate to the stencil order.

/// Weight (1/km) that a grid node at signed offset `x` from the source
/// receives.
pub fn discrete_delta_1d(x: f64, h: f64) -> f64 {
    assert!(h > 0.0, "spacing must be positive");
    let z = (x / h).abs();
    let p = if z <= 1.0 {
        1.0 - 5.0 / 4.0 * z.powi(2) - 35.0 / 12.0 * z.powi(3) + 21.0 / 4.0 * z.powi(4)
            - 25.0 / 12.0 * z.powi(5)
    } else if z <= 2.0 {
        -4.0 + 75.0 / 4.0 * z - 245.0 / 8.0 * z.powi(2) + 545.0 / 24.0 * z.powi(3)
            - 63.0 / 8.0 * z.powi(4)
            + 25.0 / 24.0 * z.powi(5)
    } else if z <= 3.0 {
        18.0 - 153.0 / 4.0 * z + 255.0 / 8.0 * z.powi(2) - 313.0 / 24.0 * z.powi(3)
            + 21.0 / 8.0 * z.powi(4)
            - 5.0 / 24.0 * z.powi(5)
    } else {
        0.0
    };
    p / h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_weight_is_inverse_spacing() {
        assert_eq!(discrete_delta_1d(0.0, 0.25), 4.0);
        assert_eq!(discrete_delta_1d(0.0, 0.5), 2.0);
    }

    #[test]
    fn vanishes_beyond_three_spacings() {
        assert_eq!(discrete_delta_1d(3.5 * 0.25, 0.25), 0.0);
        assert_eq!(discrete_delta_1d(-10.0, 0.25), 0.0);
    }

    #[test]
    fn interpolating_on_nodes() {
        // with the source on a node, every other node gets weight zero
        let h = 0.25;
        for k in 1..=3 {
            assert!(discrete_delta_1d(k as f64 * h, h).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn frozen_values() {
        let h = 0.25;
        assert!((discrete_delta_1d(0.1, h) - 2.9056).abs() < 1e-12);
        assert!((discrete_delta_1d(0.3, h) - -0.3904).abs() < 1e-12);
        assert!((discrete_delta_1d(0.6, h) - 0.0576).abs() < 1e-12);
        // near the outer joint the branch sums large terms to a tiny value,
        // so only absolute accuracy at the cancellation level is available
        assert!((discrete_delta_1d(0.74, h) - 0.000069632).abs() < 1e-9);
    }

    #[test]
    fn continuous_at_branch_joints() {
        let h = 0.25;
        for k in 1..=3 {
            let x = k as f64 * h;
            let lo = discrete_delta_1d(x - 1e-9, h);
            let hi = discrete_delta_1d(x + 1e-9, h);
            assert!((lo - hi).abs() < 1e-6, "joint {k}: {lo} vs {hi}");
        }
    }

    #[test]
    fn moments_for_subgrid_offsets() {
        for h in [0.25, 0.5, 1.1] {
            for frac in [0.0, 0.3, 0.5, 0.77] {
                let a = frac * h;
                let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
                for j in -5i32..=5 {
                    let x = j as f64 * h - a;
                    let w = discrete_delta_1d(x, h);
                    m0 += w * h;
                    m1 += x * w * h;
                    m2 += x * x * w * h;
                }
                assert!((m0 - 1.0).abs() < 1e-8, "h={h} a={a}: m0={m0}");
                assert!(m1.abs() < 1e-8, "h={h} a={a}: m1={m1}");
                assert!(m2.abs() < 1e-8, "h={h} a={a}: m2={m2}");
            }
        }
    }
}
