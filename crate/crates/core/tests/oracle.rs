//! Cross-validation of the analytic layer against the event-driven
//! simulator, away from equilibrium: the transient PGF at a finite age is
//! compared with the Monte Carlo estimate of `E[z^load]` over surviving
//! hosts.

use macroparasite::{
    equilibrium_pgf, run_ensemble, transient_pgf, ClumpDistribution, ModelParams, SimConfig,
};

#[test]
fn transient_pgf_matches_monte_carlo() {
    // small alpha keeps rejection conditioning affordable; age 2 is far
    // from equilibrium (decay e^{-1.1} ~ 0.33), so this genuinely tests
    // the transient form rather than the equilibrium limit
    let params = ModelParams::new(
        3.0,
        0.05,
        0.5,
        ClumpDistribution::geometric(0.5).unwrap(),
    )
    .unwrap();
    let age = 2.0;

    let cfg = SimConfig {
        params: params.clone(),
        age,
        replicates: 200_000,
        seed: 1234,
        phi_mixture: None,
    };
    let result = run_ensemble(&cfg).unwrap();
    assert!(result.survivors > 100_000);

    let n = result.survivors as f64;
    for z in [0.2f64, 0.5, 0.8] {
        let analytic = transient_pgf(&params, age, z).unwrap();

        // E[z^M] and its standard error from the empirical pmf
        let mut first = 0.0;
        let mut second = 0.0;
        for (k, p) in result.empirical_pmf.mass().iter().enumerate() {
            first += p * z.powi(k as i32);
            second += p * z.powi(2 * k as i32);
        }
        let se = ((second - first * first).max(0.0) / n).sqrt();
        assert!(
            (analytic - first).abs() < 4.0 * se,
            "z={z}: transient {analytic} vs MC {first} (se {se})"
        );

        // the transient value is far from the equilibrium one at this age,
        // so the agreement above is not vacuous
        let at_equilibrium = equilibrium_pgf(&params, z).unwrap();
        assert!(
            (analytic - at_equilibrium).abs() > 20.0 * se,
            "z={z}: age {age} too close to equilibrium to discriminate"
        );
    }
}

#[test]
fn equilibrium_pgf_matches_monte_carlo_at_large_age() {
    let params = ModelParams::new(
        3.0,
        0.02,
        0.5,
        ClumpDistribution::geometric(0.5).unwrap(),
    )
    .unwrap();
    // ~8 relaxation times: transient residue is ~4e-4, well below the
    // Monte Carlo resolution at this replicate count
    let cfg = SimConfig {
        params: params.clone(),
        age: 15.0,
        replicates: 150_000,
        seed: 77,
        phi_mixture: None,
    };
    let result = run_ensemble(&cfg).unwrap();
    let n = result.survivors as f64;
    assert!(n > 10_000.0);

    for z in [0.0f64, 0.5] {
        let analytic = equilibrium_pgf(&params, z).unwrap();
        let mut first = 0.0;
        let mut second = 0.0;
        for (k, p) in result.empirical_pmf.mass().iter().enumerate() {
            first += p * z.powi(k as i32);
            second += p * z.powi(2 * k as i32);
        }
        let se = ((second - first * first).max(0.0) / n).sqrt().max(1e-12);
        assert!(
            (analytic - first).abs() < 4.0 * se,
            "z={z}: equilibrium {analytic} vs MC {first} (se {se})"
        );
    }
}
