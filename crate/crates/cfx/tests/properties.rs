//! Randomized invariants of the product-space primitives and operator
//! combinators.

use cfx::operators::{project_ball, project_box, project_hyperplane, OperatorSpec, RelaxationVector};
use cfx::space::{BlockStructure, ProductVector};
use proptest::prelude::*;

fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, n)
}

/// A structure with 1..=4 blocks of dimension 1..=4 plus matching flat data.
fn structured_vecs(copies: usize) -> impl Strategy<Value = (Vec<usize>, Vec<Vec<f64>>)> {
    prop::collection::vec(1usize..=4, 1..=4).prop_flat_map(move |dims| {
        let total: usize = dims.iter().sum();
        (Just(dims), prop::collection::vec(coords(total), copies))
    })
}

fn vectors(dims: &[usize], flats: &[Vec<f64>]) -> (BlockStructure, Vec<ProductVector>) {
    let structure = BlockStructure::new(dims.to_vec()).unwrap();
    let vs = flats
        .iter()
        .map(|f| ProductVector::from_flat(&structure, f).unwrap())
        .collect();
    (structure, vs)
}

proptest! {
    #[test]
    fn inner_product_satisfies_cauchy_schwarz((dims, flats) in structured_vecs(2)) {
        let (_, vs) = vectors(&dims, &flats);
        let (x, y) = (&vs[0], &vs[1]);
        prop_assert!(x.inner(y).unwrap().abs() <= x.norm() * y.norm() + 1e-9);
    }

    #[test]
    fn norm_decomposes_over_components((dims, flats) in structured_vecs(1)) {
        let (structure, vs) = vectors(&dims, &flats);
        let x = &vs[0];
        let sum: f64 = (0..structure.block_count())
            .map(|j| x.component_norm(j).unwrap().powi(2))
            .sum();
        prop_assert!((x.norm().powi(2) - sum).abs() <= 1e-9 * (1.0 + sum));
    }

    #[test]
    fn distance_decomposes_over_components((dims, flats) in structured_vecs(2)) {
        let (structure, vs) = vectors(&dims, &flats);
        let (x, y) = (&vs[0], &vs[1]);
        let sum: f64 = (0..structure.block_count())
            .map(|j| x.component_distance(y, j).unwrap().powi(2))
            .sum();
        prop_assert!((x.distance(y).unwrap().powi(2) - sum).abs() <= 1e-9 * (1.0 + sum));
    }

    #[test]
    fn block_update_leaves_other_blocks_untouched(
        (dims, flats) in structured_vecs(2),
        scale in -10.0f64..10.0,
    ) {
        let (structure, vs) = vectors(&dims, &flats);
        let j = dims.len() - 1;
        let delta: Vec<f64> = vs[1].block(j).unwrap().to_vec();
        let x = vs[0].axpy_block(j, scale, &delta).unwrap();
        for other in 0..structure.block_count() {
            if other != j {
                prop_assert_eq!(x.block(other).unwrap(), vs[0].block(other).unwrap());
            }
        }
        for ((new, old), d) in x.block(j).unwrap().iter().zip(vs[0].block(j).unwrap()).zip(&delta) {
            prop_assert_eq!(*new, old + scale * d);
        }
    }

    #[test]
    fn text_round_trip_is_exact((dims, flats) in structured_vecs(1)) {
        let (_, vs) = vectors(&dims, &flats);
        let back = ProductVector::from_text(&vs[0].to_text()).unwrap();
        prop_assert_eq!(back.flatten(), vs[0].flatten());
    }

    #[test]
    fn hyperplane_projection_is_idempotent_and_feasible(
        a in coords(5), b in -50.0f64..50.0, z in coords(5),
    ) {
        prop_assume!(a.iter().any(|&v| v.abs() > 1e-6));
        let p = project_hyperplane(&a, b, &z).unwrap();
        let residual: f64 = a.iter().zip(&p).map(|(ai, pi)| ai * pi).sum::<f64>() - b;
        let scale = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(residual.abs() <= 1e-8 * (1.0 + b.abs() + scale));
        let pp = project_hyperplane(&a, b, &p).unwrap();
        for (v, w) in p.iter().zip(&pp) {
            prop_assert!((v - w).abs() <= 1e-9 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn ball_projection_lands_inside_and_fixes_interior(
        c in coords(4), r in 0.1f64..20.0, z in coords(4),
    ) {
        let p = project_ball(&c, r, &z).unwrap();
        let d: f64 = p.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assert!(d <= r + 1e-9);
        // idempotent up to boundary rounding
        let again = project_ball(&c, r, &p).unwrap();
        for (v, w) in p.iter().zip(&again) {
            prop_assert!((v - w).abs() <= 1e-9 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn box_projection_clamps_coordinatewise(z in coords(6), w in coords(6)) {
        let lo: Vec<f64> = w.iter().map(|v| -v.abs()).collect();
        let hi: Vec<f64> = w.iter().map(|v| v.abs()).collect();
        let p = project_box(&lo, &hi, &z).unwrap();
        for ((v, l), h) in p.iter().zip(&lo).zip(&hi) {
            prop_assert!(l <= v && v <= h);
        }
    }

    #[test]
    fn unit_relaxation_is_the_operator_itself(z in coords(2), lambda in 0.1f64..1.9) {
        let structure = BlockStructure::new(vec![2]).unwrap();
        let x = ProductVector::from_flat(&structure, &z).unwrap();
        let p = OperatorSpec::hyperplane(vec![3.0, 4.0], 5.0).unwrap();
        let relaxed = p.clone().relaxed(lambda).unwrap();
        // displacement scaling: T_lambda x - x = lambda (T x - x)
        let tx = p.apply(&x).unwrap();
        let rx = relaxed.apply(&x).unwrap();
        for i in 0..2 {
            let lhs = rx.flatten()[i] - z[i];
            let rhs = lambda * (tx.flatten()[i] - z[i]);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn componental_relaxation_matches_global_when_uniform(
        z in coords(2), lambda in 0.1f64..1.9,
    ) {
        let structure = BlockStructure::new(vec![1, 1]).unwrap();
        let x = ProductVector::from_flat(&structure, &z).unwrap();
        let base = OperatorSpec::hyperplane(vec![1.0, -2.0], 1.0).unwrap();
        let global = base.clone().relaxed(lambda).unwrap().apply(&x).unwrap();
        let cw = base
            .cw_relaxed(RelaxationVector::constant(lambda, 2).unwrap())
            .apply(&x)
            .unwrap();
        for (a, b) in global.flatten().iter().zip(cw.flatten()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
}
