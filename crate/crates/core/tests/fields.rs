use youngflow_core::field::{self, estimate_lip_norm, LipschitzField, Monomial, PolynomialField, WorkingBox};

fn bundled() -> Vec<LipschitzField> {
    vec![
        field::zero(2, 1),
        field::constant(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
        field::linear_scalar(3.0),
        field::linear(2, vec![vec![0.0, -1.0, 1.0, 0.0], vec![0.5, 0.0, 0.0, -0.5]]).unwrap(),
        field::sine(1.3, 2.0),
        field::rotation(2.0, 0.8),
        field::coupled(1.5, 1.0, 0.7),
        field::polynomial(
            PolynomialField::new(
                2,
                1,
                vec![
                    vec![Monomial { coefficient: 0.5, powers: vec![2, 1] }],
                    vec![Monomial { coefficient: -1.0, powers: vec![0, 3] }, Monomial { coefficient: 2.0, powers: vec![1, 0] }],
                ],
            )
            .unwrap(),
            2.0,
        )
        .unwrap(),
    ]
}

// deterministic probe points in [-1.5, 1.5]^d
fn probes(d: usize, count: usize) -> Vec<Vec<f64>> {
    let mut state = 0x9e3779b97f4a7c15u64;
    (0..count)
        .map(|_| {
            (0..d)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state >> 11) as f64 / (1u64 << 53) as f64 * 3.0 - 1.5
                })
                .collect()
        })
        .collect()
}

fn max_fd_error(f: &LipschitzField, pts: &[Vec<f64>], h: f64) -> f64 {
    let d = f.state_dim();
    let width = d * f.driver_dim();
    let mut worst = 0.0f64;
    for x in pts {
        let g = f.grad(x).unwrap();
        for j in 0..d {
            let mut up = x.clone();
            let mut down = x.clone();
            up[j] += h;
            down[j] -= h;
            let (fu, fd) = (f.eval(&up).unwrap(), f.eval(&down).unwrap());
            for e in 0..width {
                let fd_val = (fu[e] - fd[e]) / (2.0 * h);
                worst = worst.max((fd_val - g[e * d + j]).abs());
            }
        }
    }
    worst
}

#[test]
fn analytic_gradients_agree_with_central_differences() {
    for f in bundled() {
        let pts = probes(f.state_dim(), 64);
        let coarse = max_fd_error(&f, &pts, 1e-3);
        let fine = max_fd_error(&f, &pts, 5e-4);
        if coarse < 1e-10 {
            // exact for fields of degree <= 2
            assert!(fine < 1e-8, "{}: {fine:e}", f.name());
            continue;
        }
        let order = (coarse / fine).log2();
        assert!(order >= 1.9, "{}: observed order {order}", f.name());
        assert!(max_fd_error(&f, &pts, 1e-6) < 1e-6, "{}", f.name());
    }
}

#[test]
fn rotation_matches_closed_form() {
    let (omega, width) = (2.0, 0.8);
    let f = field::rotation(omega, width);
    for x in probes(2, 32) {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let g = omega * (-r2 / (2.0 * width * width)).exp();
        let v = f.eval(&x).unwrap();
        assert!((v[0] + g * x[1]).abs() < 1e-15 && (v[1] - g * x[0]).abs() < 1e-15);
        // divergence free
        let grad = f.grad(&x).unwrap();
        assert!((grad[0] + grad[3]).abs() < 1e-14);
    }
}

#[test]
fn sine_norm_estimate_approaches_dense_grid_value_from_below() {
    // dense 1-D oracle on [-pi, pi]: sup|sin| + sup|cos| + Lipschitz constant of cos
    let n = 4000;
    let xs: Vec<f64> = (0..=n).map(|i| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / n as f64).collect();
    let sup_f = xs.iter().map(|x| x.sin().abs()).fold(0.0, f64::max);
    let sup_df = xs.iter().map(|x| x.cos().abs()).fold(0.0, f64::max);
    let lip_df = xs.windows(2).map(|w| (w[1].cos() - w[0].cos()).abs() / (w[1] - w[0])).fold(0.0, f64::max);
    let oracle = sup_f + sup_df + lip_df;
    assert!((oracle - 3.0).abs() < 1e-5);

    let f = field::sine(1.0, 1.0);
    let domain = WorkingBox::cube(1, std::f64::consts::PI);
    let small = estimate_lip_norm(&f, 2.0, 8, &domain, 3).unwrap();
    let large = estimate_lip_norm(&f, 2.0, 400, &domain, 3).unwrap();
    assert!(small <= oracle + 1e-9 && large <= oracle + 1e-9);
    assert!(large >= small - 1e-12);
    assert!(oracle - large < 0.05, "estimate {large} vs {oracle}");
    assert_eq!(f.lip_norm(), Some(3.0));
}

#[test]
fn declared_bounds_dominate_probe_values() {
    for f in bundled() {
        if let Some(norm) = f.lip_norm() {
            for x in probes(f.state_dim(), 64) {
                let v = f.eval(&x).unwrap();
                assert!(v.iter().map(|a| a * a).sum::<f64>().sqrt() <= norm + 1e-12, "{}", f.name());
            }
        }
    }
}
