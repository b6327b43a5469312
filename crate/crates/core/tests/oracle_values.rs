//! Stationary variances frozen from an independent dense Lyapunov solve and
//! adaptive quadrature (scipy), plus a few closed-form levels.

use ews_core::oracle::{
    continuous_variance_quadrature, jordan_lyapunov_variance, jordan_variance_formula, probe_variance_oracle,
    scalar_red_noise_variance, JordanSpec,
};
use ews_core::probes::ProbeSpec;
use ews_core::sweep::oracle_variance;
use ews_core::systems::{DriftProfile, SystemSpec};

fn assert_rel(a: f64, b: f64, tol: f64) {
    assert!(((a - b) / b).abs() <= tol, "{a} vs {b}");
}

#[test]
fn cable_leading_mode_level() {
    assert_rel(scalar_red_noise_variance(-0.5, 2.0, 0.1, 1.0).unwrap(), 2.0e-3, 1e-14);
    let spec = SystemSpec::cable(200, -0.5).unwrap();
    let probe = ProbeSpec::Eigen(1).resolve(&spec, 2.0).unwrap();
    assert_rel(probe_variance_oracle(&spec, 2.0, 0.1, &probe).unwrap(), 2.0e-3, 1e-10);
}

#[test]
fn jordan_chain_reference_values() {
    let cases: [(f64, f64, [f64; 4], f64, f64); 2] = [
        (
            -0.5,
            2.0,
            [
                0.0020000000000000005,
                0.004000000000000001,
                0.008800000000000004,
                0.02352000000000001,
            ],
            6.399999999999982e-05,
            0.0028000000000000013,
        ),
        (
            -0.1,
            0.5,
            [
                0.16666666666666669,
                8.111111111111112,
                610.4259259259259,
                50965.36419753086,
            ],
            20.756172839506174,
            61.037037037037024,
        ),
    ];
    for (p, kappa, diag, c14, c23) in cases {
        let spec = JordanSpec::new(p, 4, kappa, 0.1, 1.0).unwrap();
        for k in 1..=4 {
            assert_rel(jordan_variance_formula(&spec, k, k).unwrap(), diag[k - 1], 1e-10);
            assert_rel(jordan_lyapunov_variance(&spec, k, k).unwrap(), diag[k - 1], 1e-10);
        }
        assert_rel(jordan_variance_formula(&spec, 1, 4).unwrap(), c14, 1e-9);
        assert_rel(jordan_variance_formula(&spec, 2, 3).unwrap(), c23, 1e-10);
    }
}

#[test]
fn jordan_oracle_is_regular_at_kappa_equal_minus_p() {
    let spec = SystemSpec::jordan(4, -0.5).unwrap();
    let below = ProbeSpec::Eigen(3).resolve(&spec, 0.5 - 1e-6).unwrap();
    let at = ProbeSpec::Eigen(3).resolve(&spec, 0.5).unwrap();
    let v_below = probe_variance_oracle(&spec, 0.5 - 1e-6, 0.1, &below).unwrap();
    let v_at = probe_variance_oracle(&spec, 0.5, 0.1, &at).unwrap();
    assert_rel(v_at, v_below, 1e-4);
    assert!(JordanSpec::new(-0.5, 4, 0.5, 0.1, 1.0).is_err());
}

#[test]
fn continuous_spectrum_reference_values() {
    let cases = [
        (2.0, -1e-2, 0.002479278707593142),
        (2.0, -1e-6, 3.677806685973915),
        (1.0, -1e-4, 0.011525333060185085),
        (1.5, -1e-3, 0.018665045138169863),
    ];
    for (alpha, p, expected) in cases {
        let profile = DriftProfile::PowerLaw { alpha };
        let v = continuous_variance_quadrature(&profile, p, 2.0, 0.1, 1.0, (-0.01, 0.01)).unwrap();
        assert_rel(v, expected, 1e-9);
    }
    let profile = DriftProfile::PowerLaw { alpha: 2.0 };
    let off = continuous_variance_quadrature(&profile, -0.3, 0.7, 0.1, 1.0, (0.1, 0.4)).unwrap();
    assert_rel(off, 0.005521284486926895, 1e-9);
}

#[test]
fn indicator_oracle_uses_the_probe_interval() {
    let spec = SystemSpec::multiplication(2.0, -0.01, 0.01, 21, -1e-6).unwrap();
    let probe: ProbeSpec = "indicator[-0.01,0.01]".parse().unwrap();
    assert_rel(
        oracle_variance(&spec, 2.0, 0.1, &probe).unwrap(),
        3.677806685973915,
        1e-9,
    );
}
