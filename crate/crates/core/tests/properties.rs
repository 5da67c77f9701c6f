use std::f64::consts::PI;

use proptest::prelude::*;
use tvwhittle::inference::{interpolate_path, quantiles};
use tvwhittle::localper::{moving_freq_index, segment_geometry};
use tvwhittle::metrics::{efficiency, rmse};
use tvwhittle::modify::{apply_modification, Modification};
use tvwhittle::spectral::{dft, fourier_frequencies, periodogram, squared_gain};
use tvwhittle::tvar::{is_stable, phi_to_r, r_to_phi, r_to_theta, theta_to_phi, theta_to_r};
use tvwhittle::TimeSeries64;

fn series(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, min..max)
}

fn theta(max_p: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5..1.5f64, 1..=max_p)
}

proptest! {
    #[test]
    fn parseval(x in series(2, 80)) {
        let n = x.len();
        let energy: f64 = x.iter().map(|v| v * v).sum();
        let spec: f64 = (0..n).map(|k| dft(&x, 2.0 * PI * k as f64 / n as f64).norm_sqr()).sum::<f64>() / n as f64;
        prop_assert!((spec - energy).abs() <= 1e-9 * energy.max(1.0));
    }

    #[test]
    fn periodogram_nonnegative(x in series(4, 60)) {
        let ts = TimeSeries64::new(x).unwrap();
        let pg = periodogram(&ts, &fourier_frequencies(ts.len(), true).unwrap()).unwrap();
        prop_assert!(pg.ordinates.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn nonnegative_modifications(x in series(12, 40), k in 0usize..3) {
        let scheme = [Modification::None, Modification::Taper, Modification::Prewhiten][k];
        let grid = fourier_frequencies(x.len(), false).unwrap();
        let ord = apply_modification(scheme, &x, &grid, 4).unwrap();
        prop_assert!(ord.iter().all(|v| *v >= 0.0 && v.is_finite()));
    }

    #[test]
    fn theta_r_phi_round_trip(t in theta(6)) {
        let r = theta_to_r(&t).into_inner();
        prop_assert!(r.iter().all(|v| v.abs() < 1.0));
        let back = r_to_theta(&r).unwrap().into_inner();
        let phi = r_to_phi(&r).unwrap().into_inner();
        let r2 = phi_to_r(&phi).unwrap().into_inner();
        for i in 0..t.len() {
            prop_assert!((t[i] - back[i]).abs() < 1e-10);
            prop_assert!((r[i] - r2[i]).abs() < 1e-10);
        }
        prop_assert_eq!(theta_to_phi(&t).into_inner(), phi.clone());
        prop_assert!(is_stable(&phi));
    }

    #[test]
    fn squared_gain_symmetric_and_positive(t in theta(4), w in 0.0..PI) {
        let phi = theta_to_phi(&t).into_inner();
        let a = squared_gain(&phi, w);
        prop_assert!(a > 0.0);
        prop_assert!((a - squared_gain(&phi, -w)).abs() < 1e-12 * a.max(1.0));
        prop_assert!((a - squared_gain(&phi, 2.0 * PI - w)).abs() < 1e-9 * a.max(1.0));
    }

    #[test]
    fn segment_centers_follow_step(n_half in 2usize..20, s in 1usize..20, m in 1usize..20) {
        let n = 2 * n_half;
        prop_assume!(s <= n);
        let t = n + s * (m - 1);
        let g = segment_geometry(t, n, s).unwrap();
        prop_assert_eq!(g.n_segments(), m);
        for (j, &c) in g.centers.iter().enumerate() {
            prop_assert_eq!(c, s * j + n / 2);
        }
    }

    #[test]
    fn moving_index_cycles(m in 1usize..30, t in 1usize..500) {
        let k = moving_freq_index(t, m);
        prop_assert!((1..=m).contains(&k));
        prop_assert_eq!(moving_freq_index(t + m, m), k);
    }

    #[test]
    fn interpolation_is_piecewise_constant(gaps in prop::collection::vec(1usize..6, 1..10), extra in 0usize..5) {
        let mut centers = Vec::new();
        let mut c = 0;
        for g in gaps {
            c += g;
            centers.push(c);
        }
        let t_len = c + extra;
        let values: Vec<f64> = (0..centers.len()).map(|i| i as f64).collect();
        let path = interpolate_path(&values, &centers, t_len).unwrap();
        for t in 1..=t_len {
            let want = centers.iter().rposition(|&c| c <= t).unwrap_or(0) as f64;
            prop_assert_eq!(path[t - 1], want);
        }
    }

    #[test]
    fn quantiles_ordered_and_bounded(d in prop::collection::vec(-100.0..100.0f64, 2..60)) {
        let probs = [0.0, 0.025, 0.5, 0.975, 1.0];
        let q = quantiles(&d, &probs).unwrap();
        prop_assert!(q.windows(2).all(|w| w[0] <= w[1]));
        let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(q[0], lo);
        prop_assert_eq!(q[4], hi);
    }

    #[test]
    fn rmse_of_shifted_estimates(truth in prop::collection::vec(-1.0..1.0f64, 1..20), shift in -1.0..1.0f64) {
        let est = vec![truth.iter().map(|v| v + shift).collect::<Vec<_>>(); 3];
        let r = rmse(&est, &truth).unwrap();
        prop_assert!((r - shift.abs()).abs() < 1e-12);
        if r > 0.0 {
            prop_assert!((efficiency(r, r).unwrap() - 1.0).abs() < 1e-15);
        }
    }
}
