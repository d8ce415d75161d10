//! The accumulated work field `W(x, t) = int_0^t g(x, t') dt'`.
//!
//! The integrands depend only on instantaneous fields, so the history is
//! carried as a running sum per grid point plus the last integrand sample.

use crate::error::{check_len, Result, SolverError};

#[derive(Debug, Clone, PartialEq)]
pub struct WorkField {
    w: Vec<f64>,
    g_prev: Vec<f64>,
    t_elapsed: f64,
}

impl WorkField {
    /// Zero field with a zero left-endpoint integrand.
    pub fn new(len: usize) -> Self {
        WorkField {
            w: vec![0.0; len],
            g_prev: vec![0.0; len],
            t_elapsed: 0.0,
        }
    }

    /// Zero field whose first trapezoid panel starts from `g_initial`, the
    /// integrand evaluated at `t = 0`.
    pub fn primed(g_initial: Vec<f64>) -> Self {
        WorkField {
            w: vec![0.0; g_initial.len()],
            g_prev: g_initial,
            t_elapsed: 0.0,
        }
    }

    /// Replaces the left-endpoint integrand of the first panel. Only valid
    /// before any panel has been added.
    pub fn reprime(&mut self, g_initial: &[f64]) -> Result<()> {
        check_len(self.w.len(), g_initial.len())?;
        if self.t_elapsed != 0.0 {
            return Err(SolverError::param("work", "cannot reprime after the first panel"));
        }
        self.g_prev.copy_from_slice(g_initial);
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    /// The most recent integrand sample.
    pub fn last_integrand(&self) -> &[f64] {
        &self.g_prev
    }

    pub fn t_elapsed(&self) -> f64 {
        self.t_elapsed
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Advances by one trapezoid panel: `w += dt (g_prev + g_now) / 2`.
    pub fn update(&mut self, g_now: &[f64], dt: f64) -> Result<()> {
        check_len(self.w.len(), g_now.len())?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SolverError::param("dt", format!("must be > 0, got {dt}")));
        }
        let half = 0.5 * dt;
        for ((w, gp), &gn) in self.w.iter_mut().zip(self.g_prev.iter_mut()).zip(g_now) {
            *w += half * (*gp + gn);
            *gp = gn;
        }
        self.t_elapsed += dt;
        Ok(())
    }

    /// The field `w + s * g_prev`, a first-order extrapolation `s` ahead.
    pub fn extrapolated(&self, s: f64) -> Vec<f64> {
        self.w.iter().zip(&self.g_prev).map(|(w, g)| w + s * g).collect()
    }
}

/// `kappa (v_now^2 - v_init^2) / 2`: the exact value of `kappa int v dv` that the
/// acceleration-drag work field approximates.
pub fn accel_drag_closed_form(v_now: &[f64], v_init: &[f64], kappa: f64) -> Result<Vec<f64>> {
    check_len(v_now.len(), v_init.len())?;
    Ok(v_now
        .iter()
        .zip(v_init)
        .map(|(a, b)| 0.5 * kappa * (a * a - b * b))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_integrand_is_exact() {
        let c0 = 1.75;
        let dt = 0.125;
        let mut field = WorkField::primed(vec![c0; 4]);
        for _ in 0..40 {
            field.update(&[c0; 4], dt).unwrap();
        }
        assert!(field.values().iter().all(|&w| w == c0 * 40.0 * dt));
        assert_eq!(field.t_elapsed(), 5.0);
    }

    #[test]
    fn reprime_only_before_the_first_panel() {
        let mut field = WorkField::primed(vec![0.0; 2]);
        field.reprime(&[2.0, 4.0]).unwrap();
        field.update(&[2.0, 0.0], 0.5).unwrap();
        assert_eq!(field.values(), &[1.0, 1.0]);
        assert!(field.reprime(&[0.0, 0.0]).is_err());
        assert!(WorkField::new(3).reprime(&[0.0]).is_err());
    }

    #[test]
    fn linear_integrand_is_exact() {
        let dt = 0.01;
        let mut field = WorkField::new(1);
        for n in 1..=300 {
            field.update(&[n as f64 * dt], dt).unwrap();
        }
        let t = field.t_elapsed();
        assert!((field.values()[0] - t * t / 2.0).abs() < 1e-12);
    }

    #[test]
    fn sine_integrand_second_order() {
        let dt = 0.01;
        let mut field = WorkField::new(1);
        for n in 1..=100 {
            field.update(&[(n as f64 * dt).sin()], dt).unwrap();
        }
        let exact = 1.0 - 1f64.cos();
        assert!((field.values()[0] - exact).abs() < 1e-5);
        assert!((exact - 0.459_70).abs() < 1e-5);
    }

    #[test]
    fn starts_at_zero_and_rejects_bad_input() {
        let mut field = WorkField::new(3);
        assert!(field.values().iter().all(|&w| w == 0.0));
        assert_eq!(field.t_elapsed(), 0.0);
        assert!(field.update(&[1.0; 3], 0.0).is_err());
        assert!(field.update(&[1.0; 3], -1.0).is_err());
        assert!(field.update(&[1.0; 2], 0.1).is_err());
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(accel_drag_closed_form(&[1.0, -2.0], &[1.0, -2.0], 3.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(accel_drag_closed_form(&[3.0], &[0.0], 1.0).unwrap(), vec![4.5]);
        assert!(accel_drag_closed_form(&[3.0], &[0.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn trapezoid_of_v_dv_converges_at_second_order() {
        // v(t) = sin(3t) + t^2, a = dv/dt from the second-order backward stencil.
        let v = |t: f64| (3.0 * t).sin() + t * t;
        let run = |dt: f64| {
            let n = (1.0 / dt).round() as usize;
            let mut field = WorkField::new(1);
            for i in 1..=n {
                let t = i as f64 * dt;
                let a = if i == 1 {
                    (v(t) - v(t - dt)) / dt
                } else {
                    (3.0 * v(t) - 4.0 * v(t - dt) + v(t - 2.0 * dt)) / (2.0 * dt)
                };
                field.update(&[v(t) * a], dt).unwrap();
            }
            let closed = accel_drag_closed_form(&[v(1.0)], &[v(0.0)], 1.0).unwrap();
            (field.values()[0] - closed[0]).abs()
        };
        let errs: Vec<f64> = [4e-3, 2e-3, 1e-3].iter().map(|&dt| run(dt)).collect();
        for pair in errs.windows(2) {
            assert!((pair[0] / pair[1]).log2() > 1.9, "{errs:?}");
        }
    }

    proptest! {
        #[test]
        fn update_is_linear_in_the_integrand(
            g1 in proptest::collection::vec(-10.0..10.0f64, 1..20),
            shift in -5.0..5.0f64,
            dt in 1e-3..1.0f64,
        ) {
            let g2: Vec<f64> = g1.iter().map(|g| g * 0.5 + shift).collect();
            let sum: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a + b).collect();
            let (mut a, mut b, mut c) =
                (WorkField::new(g1.len()), WorkField::new(g1.len()), WorkField::new(g1.len()));
            for _ in 0..3 {
                a.update(&g1, dt).unwrap();
                b.update(&g2, dt).unwrap();
                c.update(&sum, dt).unwrap();
            }
            for i in 0..g1.len() {
                let lhs = c.values()[i];
                let rhs = a.values()[i] + b.values()[i];
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }

        #[test]
        fn nonnegative_integrand_gives_monotone_work(
            g in proptest::collection::vec(proptest::collection::vec(0.0..10.0f64, 4), 1..30),
        ) {
            let mut field = WorkField::new(4);
            let mut last = field.values().to_vec();
            for gi in &g {
                field.update(gi, 0.01).unwrap();
                for (now, before) in field.values().iter().zip(&last) {
                    prop_assert!(now >= before);
                }
                last = field.values().to_vec();
            }
        }
    }
}
