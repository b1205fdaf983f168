use cfp_split::sets::SetSpec;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Linear description `a.y <= b` (or `= b` when `eq`).
struct Row {
    a: Vec<f64>,
    b: f64,
    eq: bool,
}

/// Projection onto a polyhedron by enumerating active sets: each candidate
/// solves the equality-constrained least-distance problem, and the closest
/// feasible candidate is the projection. The first `2 * bound_pairs` rows
/// are upper/lower bound pairs, which are never active together.
fn active_set_projection(x: &[f64], rows: &[Row], bound_pairs: usize) -> Vec<f64> {
    let n = x.len();
    let ineq: Vec<usize> = (0..rows.len()).filter(|&r| !rows[r].eq).collect();
    let eq: Vec<usize> = (0..rows.len()).filter(|&r| rows[r].eq).collect();
    let feasible = |y: &DVector<f64>| {
        rows.iter().all(|r| {
            let v: f64 = r.a.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
            if r.eq {
                (v - r.b).abs() <= 1e-9
            } else {
                v <= r.b + 1e-9
            }
        })
    };
    let xv = DVector::from_column_slice(x);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << ineq.len()) {
        if (0..bound_pairs).any(|i| mask >> (2 * i) & 3 == 3) {
            continue;
        }
        let active: Vec<usize> = eq
            .iter()
            .copied()
            .chain(ineq.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &r)| r))
            .collect();
        let y = if active.is_empty() {
            xv.clone()
        } else {
            let a = DMatrix::from_fn(active.len(), n, |i, j| rows[active[i]].a[j]);
            let b = DVector::from_fn(active.len(), |i, _| rows[active[i]].b);
            let pinv = a.clone().pseudo_inverse(1e-12).unwrap();
            &xv - pinv * (&a * &xv - b)
        };
        if !feasible(&y) {
            continue;
        }
        let d = (&y - &xv).norm();
        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
            best = Some((d, y));
        }
    }
    best.expect("polyhedron is nonempty").1.as_slice().to_vec()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// A box, one to three halfspaces and optionally a hyperplane, all through
/// a common anchor point inside the box so the intersection is nonempty.
#[derive(Debug, Clone)]
struct Polytope {
    lower: Vec<f64>,
    upper: Vec<f64>,
    halves: Vec<(Vec<f64>, f64)>,
    plane: Option<(Vec<f64>, f64)>,
}

impl Polytope {
    fn set(&self) -> SetSpec {
        let mut members = vec![SetSpec::boxed(self.lower.clone(), self.upper.clone()).unwrap()];
        for (a, b) in &self.halves {
            members.push(SetSpec::halfspace(a.clone(), *b).unwrap());
        }
        if let Some((a, b)) = &self.plane {
            members.push(SetSpec::hyperplane(a.clone(), *b).unwrap());
        }
        SetSpec::composite(members).unwrap()
    }

    fn rows(&self) -> Vec<Row> {
        let n = self.lower.len();
        let mut rows = Vec::new();
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            rows.push(Row { a: e.clone(), b: self.upper[i], eq: false });
            e[i] = -1.0;
            rows.push(Row { a: e, b: -self.lower[i], eq: false });
        }
        for (a, b) in &self.halves {
            rows.push(Row { a: a.clone(), b: *b, eq: false });
        }
        if let Some((a, b)) = &self.plane {
            rows.push(Row { a: a.clone(), b: *b, eq: true });
        }
        rows
    }
}

fn normal(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0f64..2.0, n)
        .prop_filter("nonzero normal", |a| a.iter().map(|x| x * x).sum::<f64>() > 0.1)
}

fn polytope() -> impl Strategy<Value = Polytope> {
    (1usize..=5).prop_flat_map(|n| {
        (
            proptest::collection::vec(-3.0f64..0.0, n),
            proptest::collection::vec(0.1f64..3.0, n),
            proptest::collection::vec(0.0f64..1.0, n),
            proptest::collection::vec((normal(n), 0.0f64..1.0), 1..=3),
            proptest::option::of(normal(n)),
        )
            .prop_map(|(lower, width, t, halves, plane)| {
                let upper: Vec<f64> = lower.iter().zip(&width).map(|(l, w)| l + w).collect();
                let anchor: Vec<f64> = lower
                    .iter()
                    .zip(&width)
                    .zip(&t)
                    .map(|((l, w), t)| l + w * t)
                    .collect();
                let dot = |v: &[f64]| v.iter().zip(&anchor).map(|(x, y)| x * y).sum::<f64>();
                let halves = halves
                    .into_iter()
                    .map(|(a, slack)| {
                        let b = dot(&a) + slack;
                        (a, b)
                    })
                    .collect();
                let plane = plane.map(|p| {
                    let c = dot(&p);
                    (p, c)
                });
                Polytope { lower, upper, halves, plane }
            })
    })
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-6.0f64..6.0, n)
}

fn primitive() -> impl Strategy<Value = SetSpec> {
    (1usize..=4).prop_flat_map(|n| {
        prop_oneof![
            (proptest::collection::vec(-3.0f64..0.0, n), proptest::collection::vec(0.0f64..3.0, n))
                .prop_map(|(l, w)| {
                    let u = l.iter().zip(&w).map(|(a, b)| a + b).collect();
                    SetSpec::boxed(l, u).unwrap()
                }),
            (normal(n), -2.0f64..2.0).prop_map(|(a, b)| SetSpec::halfspace(a, b).unwrap()),
            (normal(n), -2.0f64..2.0).prop_map(|(a, b)| SetSpec::hyperplane(a, b).unwrap()),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn composite_matches_active_set_oracle(
        (poly, x) in polytope().prop_flat_map(|p| { let n = p.lower.len(); (Just(p), point(n)) })
    ) {
        let ours = poly.set().project(&x).unwrap();
        let oracle = active_set_projection(&x, &poly.rows(), poly.lower.len());
        prop_assert!(dist(&ours, &oracle) <= 1e-6, "{:?} vs {:?}", ours, oracle);
    }

    #[test]
    fn primitive_projection_is_idempotent_and_nonexpansive(
        (set, x, y) in primitive().prop_flat_map(|s| { let n = s.dim(); (Just(s), point(n), point(n)) })
    ) {
        let px = set.project(&x).unwrap();
        prop_assert!(dist(&set.project(&px).unwrap(), &px) <= 1e-12);
        prop_assert!(set.contains(&px, 1e-9).unwrap());
        let py = set.project(&y).unwrap();
        prop_assert!(dist(&px, &py) <= dist(&x, &y) + 1e-12);
        // obtuse angle: <x - Px, z - Px> <= 0 for z = Py in C
        let ip: f64 = x.iter().zip(&px).zip(&py).map(|((x, p), q)| (x - p) * (q - p)).sum();
        prop_assert!(ip <= 1e-9);
    }

    #[test]
    fn composite_projection_is_idempotent_and_nonexpansive(
        (poly, x, y) in polytope().prop_flat_map(|p| { let n = p.lower.len(); (Just(p), point(n), point(n)) })
    ) {
        let set = poly.set();
        let px = set.project(&x).unwrap();
        prop_assert!(set.contains(&px, 1e-10).unwrap());
        prop_assert!(dist(&set.project(&px).unwrap(), &px) <= 1e-8);
        let py = set.project(&y).unwrap();
        prop_assert!(dist(&px, &py) <= dist(&x, &y) + 1e-7);
    }

    #[test]
    fn prox_is_convex_combination(
        (set, x) in primitive().prop_flat_map(|s| { let n = s.dim(); (Just(s), point(n)) }),
        mu in 0.01f64..100.0,
    ) {
        let p = set.project(&x).unwrap();
        let prox = set.prox_scaled(&x, mu).unwrap();
        for i in 0..x.len() {
            let expected = (x[i] + mu * p[i]) / (1.0 + mu);
            prop_assert!((prox[i] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
        let d = set.dist(&x).unwrap();
        prop_assert!((set.dist(&prox).unwrap() - d / (1.0 + mu)).abs() <= 1e-9 * (1.0 + d));
    }
}

#[test]
fn primitive_examples() {
    let b = SetSpec::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    assert_eq!(b.project(&[2.0, -1.0]).unwrap(), vec![1.0, 0.0]);
    let h = SetSpec::halfspace(vec![1.0, 1.0], 1.0).unwrap();
    let p = h.project(&[1.0, 1.0]).unwrap();
    assert!(dist(&p, &[0.5, 0.5]) < 1e-15);
    assert_eq!(h.project(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    let e = SetSpec::hyperplane(vec![1.0], 1.0).unwrap();
    assert_eq!(e.project(&[5.0]).unwrap(), vec![1.0]);
    assert!(SetSpec::boxed(vec![1.0], vec![0.0]).is_err());
    assert!(SetSpec::halfspace(vec![0.0, 0.0], 1.0).is_err());
    assert!(b.project(&[1.0]).is_err());
    assert!(b.prox_scaled(&[0.5, 0.5], 0.0).is_err());

    let simplex = SetSpec::composite(vec![
        SetSpec::hyperplane(vec![1.0, 1.0], 1.0).unwrap(),
        SetSpec::boxed(vec![0.0, 0.0], vec![f64::INFINITY, f64::INFINITY]).unwrap(),
    ])
    .unwrap();
    let p = simplex.project(&[2.0, 2.0]).unwrap();
    assert!(dist(&p, &[0.5, 0.5]) < 1e-10);
    let rows = vec![
        Row { a: vec![-1.0, 0.0], b: 0.0, eq: false },
        Row { a: vec![0.0, -1.0], b: 0.0, eq: false },
        Row { a: vec![1.0, 1.0], b: 1.0, eq: true },
    ];
    assert!(dist(&active_set_projection(&[2.0, 2.0], &rows, 0), &[0.5, 0.5]) < 1e-12);
    let p = simplex.project(&[3.0, -1.0]).unwrap();
    assert!(dist(&p, &[1.0, 0.0]) < 1e-10);
}
