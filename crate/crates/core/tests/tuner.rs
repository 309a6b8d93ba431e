use kgcred::tuner::{coordinate_descent, ParamGrid};
use kgcred::Error;

fn grids() -> Vec<ParamGrid> {
    vec![
        ParamGrid::new("a", vec![0.0, 1.0, 2.0, 3.0, 4.0]),
        ParamGrid::new("b", vec![-1.0, 0.0, 1.0, 2.0]),
    ]
}

fn brute_argmax(grids: &[ParamGrid], f: impl Fn(&[f64]) -> f64) -> (Vec<f64>, f64) {
    let mut best = (vec![], f64::NEG_INFINITY);
    for &a in &grids[0].values {
        for &b in &grids[1].values {
            let v = f(&[a, b]);
            if v > best.1 {
                best = (vec![a, b], v);
            }
        }
    }
    best
}

#[test]
fn separable_objective_reaches_the_grid_optimum() {
    let f = |x: &[f64]| -(x[0] - 3.0).powi(2) - 2.0 * (x[1] - 1.0).powi(2);
    let g = grids();
    let out = coordinate_descent(&g, &[0.0, -1.0], 5, |x| Ok(f(x))).unwrap();
    let (want, value) = brute_argmax(&g, f);
    assert_eq!(out.best, want);
    assert_eq!(out.best_metric, value);
    assert_eq!(out.log[0].param, "initial");
}

#[test]
fn coupled_objective_ends_at_a_coordinatewise_maximum() {
    // the interaction term makes one-at-a-time moves matter
    let f = |x: &[f64]| -(x[0] - x[1] - 2.0).powi(2) - 0.3 * (x[1] - 1.5).powi(2);
    let g = grids();
    let out = coordinate_descent(&g, &[0.0, 0.0], 10, |x| Ok(f(x))).unwrap();
    for (i, grid) in g.iter().enumerate() {
        for &v in &grid.values {
            let mut y = out.best.clone();
            y[i] = v;
            assert!(f(&y) <= out.best_metric, "moving {} to {v} improves", grid.name);
        }
    }
}

#[test]
fn ties_keep_the_incumbent() {
    let out = coordinate_descent(&grids(), &[2.0, 0.0], 3, |_| Ok(1.0)).unwrap();
    assert_eq!(out.best, vec![2.0, 0.0]);
    assert!(out.log[1..].iter().all(|r| !r.accepted));
    // one sweep only: 4 + 3 alternatives
    assert_eq!(out.log.len(), 1 + 7);
}

#[test]
fn trial_errors_name_the_configuration() {
    let err = coordinate_descent(&grids(), &[0.0, 0.0], 2, |x| {
        if x[0] == 2.0 {
            Err(Error::Invalid("diverged".into()))
        } else {
            Ok(x[0])
        }
    })
    .unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("a=2") && msg.contains("diverged"), "{msg}");
}
