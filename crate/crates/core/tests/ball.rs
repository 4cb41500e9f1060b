use hardy_radial::ball_shooting::{
    amplitude_scale, first_eigenvalue, pohozaev_defect, pohozaev_radii, scan, shoot, solve_ball, BallConfig,
};
use hardy_radial::{derive, Error, Params};

#[test]
fn ball_solution_is_unique_and_satisfies_pohozaev() {
    let base = Params::ground(5, 2.0, 0.5, 0.0).unwrap();
    let lam1 = first_eigenvalue(5, 2.0, 0.5, 1e-10).unwrap();
    let pr = base.with_lambda(0.3 * lam1).unwrap();
    let sol = solve_ball(&pr, None, &BallConfig::default()).unwrap();
    eprintln!(
        "lambda1={lam1} C={} slope={} u1={} pohozaev={:e} start={:e}",
        sol.amplitude_c, sol.boundary_slope, sol.boundary_value, sol.pohozaev_defect, sol.start_check
    );
    assert!(sol.boundary_slope < 0.0);
    assert!(sol.boundary_value.abs() < 1e-10);
    for r in pohozaev_radii() {
        let d = pohozaev_defect(&sol, r).unwrap();
        assert!(d <= 1e-5, "r={r}: {d:e}");
    }
    assert!(sol.profile.u[..sol.profile.len() - 1].iter().all(|&u| u > 0.0));
}

#[test]
fn uniqueness_over_lambda_fractions() {
    for &(n, p, mu, s) in &[(5u32, 2.0, 0.5, 0.0), (4, 2.0, 0.2, 0.5), (6, 2.0, -1.0, 0.0)] {
        let base = Params::ground(n, p, mu, s).unwrap();
        let lam1 = first_eigenvalue(n, p, mu, 1e-10).unwrap();
        for frac in [0.1, 0.3, 0.6, 0.9] {
            let pr = base.with_lambda(frac * lam1).unwrap();
            match solve_ball(&pr, None, &BallConfig::default()) {
                Ok(sol) => assert!(sol.boundary_slope < 0.0),
                Err(Error::NoSignChange { .. }) => {}
                Err(e) => panic!("{pr:?}: {e}"),
            }
        }
    }
}

#[test]
fn no_sign_change_for_nonpositive_lambda() {
    let base = Params::ground(5, 2.0, 0.5, 0.0).unwrap();
    let e = derive(&base).unwrap();
    let cfg = BallConfig::default();
    let scale = amplitude_scale(&base, 1e-12).unwrap();
    for lambda in [0.0, -1.0] {
        let pr = base.with_lambda(lambda).unwrap();
        let vals = scan(&pr, &e, 1e-3 * scale, 1e3 * scale, 40, &cfg).unwrap();
        assert!(vals.iter().all(|&(_, v)| v > 0.0), "{vals:?}");
        assert!(matches!(solve_ball(&pr, None, &cfg), Err(Error::NoSignChange { .. })));
    }
    assert!(shoot(1.0, &base, &e, &cfg).unwrap() > 0.0);
}
