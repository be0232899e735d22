mod common;

use std::collections::HashMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use simap::data::{split, NormalizationTransform};
use simap::layer::{loss, Init};
use simap::subdivision::{
    locate, locate_ordering, locate_with, subdivide_coords, Ordering, SubdivisionMatrices,
};
use simap::{EnclosingSimplex, LabeledDataset, SimapModel, TrainConfig, VertexKey};

use common::{dense_loss, permutations, BruteSubdivision};

/// Barycentric vector of dimension `n + 1`, a few exact ties thrown in by
/// rounding to a coarse grid on request.
fn bary(n: usize, coarse: bool) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n + 1).prop_map(move |mut w| {
        if coarse {
            w.iter_mut().for_each(|v| *v = (*v * 4.0).round());
        }
        let s: f64 = w.iter().sum();
        if s == 0.0 {
            return vec![1.0 / (n + 1) as f64; n + 1];
        }
        w.iter().map(|v| v / s).collect()
    })
}

fn ambient(simplex: &EnclosingSimplex, b: &[f64]) -> Vec<f64> {
    simplex.ambient_from_barycentric(b).unwrap()
}

fn cube(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, n)
}

fn dense(located: &simap::Located) -> HashMap<VertexKey, f64> {
    let mut m = HashMap::new();
    for (k, &c) in located.keys.iter().zip(&located.coefficients) {
        if c.abs() > 1e-13 {
            m.insert(k.clone(), c);
        }
    }
    m
}

fn same_dense(a: &HashMap<VertexKey, f64>, b: &HashMap<VertexKey, f64>, tol: f64) -> bool {
    a.keys()
        .chain(b.keys())
        .all(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn barycentric_round_trip(n in 1usize..7, seed in any::<u64>()) {
        let simplex = EnclosingSimplex::new(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = common::simplex_point(&mut rng, n);
        let b = simplex.barycentric_from_ambient(&x).unwrap();
        prop_assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let back = ambient(&simplex, &b);
        for (u, v) in back.iter().zip(&x) {
            prop_assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_points_are_inside(x in (1usize..7).prop_flat_map(cube)) {
        let simplex = EnclosingSimplex::new(x.len()).unwrap();
        prop_assert!(simplex.contains(&x, 1e-12));
        let b = simplex.barycentric_from_ambient(&x).unwrap();
        prop_assert!(b.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn ordering_is_a_valid_sort(b in (1usize..6).prop_flat_map(|n| bary(n, true))) {
        let ord = locate_ordering(&b).unwrap();
        let valid: Vec<Vec<usize>> = permutations(b.len())
            .into_iter()
            .filter(|p| p.windows(2).all(|w| b[w[0]] >= b[w[1]]))
            .collect();
        prop_assert!(valid.contains(&ord.as_slice().to_vec()));
        // among equal coordinates, lower indices come first
        for w in ord.as_slice().windows(2) {
            if b[w[0]] == b[w[1]] {
                prop_assert!(w[0] < w[1]);
            }
        }
        // every sorting permutation yields nonnegative child coordinates,
        // no other permutation does unless it only swaps ties
        for p in permutations(b.len()) {
            let sorted = valid.contains(&p);
            let coords = subdivide_coords(&b, &Ordering::new(p).unwrap());
            prop_assert_eq!(coords.is_ok(), sorted);
        }
    }

    #[test]
    fn subdivision_reconstructs_parent(b in (1usize..7).prop_flat_map(|n| bary(n, false))) {
        let ord = locate_ordering(&b).unwrap();
        let b1 = subdivide_coords(&b, &ord).unwrap();
        prop_assert!((b1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(b1.iter().all(|&v| v >= 0.0));
        let back = SubdivisionMatrices::new(b.len() - 1).reconstruct(&b1);
        for (j, &i) in ord.as_slice().iter().enumerate() {
            prop_assert!((back[j] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn located_vertices_reproduce_the_point(n in 1usize..5, level in 0usize..4, seed in any::<u64>()) {
        let simplex = EnclosingSimplex::new(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = common::simplex_point(&mut rng, n);
        let located = locate(&simplex, &x, level).unwrap();
        let mut acc = vec![0.0; n];
        for (k, c) in located.keys.iter().zip(&located.coefficients) {
            for (a, p) in acc.iter_mut().zip(simap::subdivision::vertex_ambient_position(k, &simplex)) {
                *a += c * p;
            }
        }
        for (a, v) in acc.iter().zip(&x) {
            prop_assert!((a - v).abs() < 1e-10);
        }
    }

    #[test]
    fn ties_do_not_change_the_activation(level in 1usize..3, b in (1usize..4).prop_flat_map(|n| bary(n, true)), pick in any::<u64>()) {
        let n = b.len() - 1;
        let simplex = EnclosingSimplex::new(n).unwrap();
        let x = ambient(&simplex, &b);
        let canonical = locate(&simplex, &x, level).unwrap();
        // any sorting permutation, picked pseudo-randomly at every level
        let mut rng = ChaCha8Rng::seed_from_u64(pick);
        let other = locate_with(&simplex, &x, level, |c| {
            let valid: Vec<Vec<usize>> = permutations(c.len())
                .into_iter()
                .filter(|p| p.windows(2).all(|w| c[w[0]] >= c[w[1]]))
                .collect();
            let i = rand::Rng::random_range(&mut rng, 0..valid.len());
            Ordering::new(valid[i].clone())
        })
        .unwrap();
        prop_assert!(same_dense(&dense(&canonical), &dense(&other), 1e-12));
    }

    #[test]
    fn probabilities_sum_to_one(n in 1usize..5, classes in 2usize..6, level in 0usize..3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = SimapModel::new(n, classes, Init::Uniform { low: -50.0, high: 50.0 }, &mut rng).unwrap();
        for _ in 0..level {
            model = model.subdivided();
        }
        let x = common::simplex_point(&mut rng, n);
        let p = model.predict(&x).unwrap();
        prop_assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.probs.iter().all(|&q| (0.0..=1.0).contains(&q)));
        prop_assert_eq!(p.label, simap::layer::argmax(&p.probs));
    }

    #[test]
    fn gradient_matches_finite_differences(n in 1usize..4, classes in 2usize..5, level in 0usize..3, label in 0usize..5, seed in any::<u64>()) {
        let label = label % classes;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = SimapModel::new(n, classes, Init::Uniform { low: -1.0, high: 1.0 }, &mut rng).unwrap();
        for _ in 0..level {
            model = model.subdivided();
        }
        let x = common::simplex_point(&mut rng, n);
        let act = model.activate(&x).unwrap();
        let mut onehot = vec![0.0; classes];
        onehot[label] = 1.0;
        let grads = model.gradient(&act, &onehot).unwrap();
        let coeffs: Vec<f64> = act.entries.iter().map(|e| e.1).collect();
        let rows: Vec<Vec<f64>> = act.entries.iter().map(|e| model.row(e.0).to_vec()).collect();
        let pred = model.forward(&act).unwrap();
        prop_assert!((loss(&pred, &onehot) - dense_loss(&rows, &coeffs, &onehot)).abs() < 1e-12);
        let h = 1e-6;
        for (t, (_, g)) in grads.rows.iter().enumerate() {
            for j in 0..classes {
                let mut plus = rows.clone();
                plus[t][j] += h;
                let mut minus = rows.clone();
                minus[t][j] -= h;
                let fd = (dense_loss(&plus, &coeffs, &onehot) - dense_loss(&minus, &coeffs, &onehot)) / (2.0 * h);
                prop_assert!((g[j] - fd).abs() < 1e-7, "{} vs {}", g[j], fd);
            }
        }
    }

    #[test]
    fn subdividing_keeps_the_function(n in 1usize..5, level in 0usize..3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = SimapModel::new(n, 3, Init::Uniform { low: -2.0, high: 2.0 }, &mut rng).unwrap();
        for _ in 0..level {
            model = model.subdivided();
        }
        let child = model.subdivided();
        for _ in 0..20 {
            let x = common::simplex_point(&mut rng, n);
            let a = model.predict(&x).unwrap();
            let b = child.predict(&x).unwrap();
            for (p, q) in a.probs.iter().zip(&b.probs) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normalization_is_idempotent_and_lands_in_the_simplex(
        points in (1usize..5).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(-100.0f64..100.0, n), 2..30))
    ) {
        let t = NormalizationTransform::fit_points(&points).unwrap();
        let once = t.apply(&points, false).unwrap();
        prop_assert!(once.out_of_range.is_empty());
        let simplex = EnclosingSimplex::new(points[0].len()).unwrap();
        for p in &once.points {
            prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(simplex.contains(p, 1e-9));
        }
        let refit = NormalizationTransform::fit_points(&once.points).unwrap();
        let twice = refit.apply(&once.points, false).unwrap();
        for (a, b) in twice.points.iter().flatten().zip(once.points.iter().flatten()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn split_is_a_deterministic_partition(len in 2usize..60, frac in 0.05f64..0.95, seed in any::<u64>()) {
        // tag each point with its index so the partition can be checked
        let points: Vec<Vec<f64>> = (0..len).map(|i| vec![i as f64]).collect();
        let labels: Vec<usize> = (0..len).map(|i| i % 2).collect();
        let ds = LabeledDataset::new(points, labels, 2).unwrap();
        let (a, b) = split(&ds, frac, seed).unwrap();
        let (a2, b2) = split(&ds, frac, seed).unwrap();
        prop_assert_eq!(a.points(), a2.points());
        prop_assert_eq!(b.points(), b2.points());
        let mut all: Vec<usize> = a.points().iter().chain(b.points()).map(|p| p[0] as usize).collect();
        all.sort();
        prop_assert_eq!(all, (0..len).collect::<Vec<_>>());
        for (p, &l) in a.points().iter().zip(a.labels()).chain(b.points().iter().zip(b.labels())) {
            prop_assert_eq!(l, p[0] as usize % 2);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fast_path_matches_brute_force(n in 1usize..4, k in 0usize..3, seed in any::<u64>()) {
        let brute = BruteSubdivision::new(n, k);
        let simplex = EnclosingSimplex::new(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let x = common::simplex_point(&mut rng, n);
            let fast = dense(&locate(&simplex, &x, k).unwrap());
            let slow: HashMap<VertexKey, f64> = brute
                .coordinates(&x)
                .unwrap()
                .into_iter()
                .filter(|(_, c)| c.abs() > 1e-13)
                .collect();
            prop_assert!(same_dense(&fast, &slow, 1e-10));
        }
    }

    #[test]
    fn training_is_deterministic(seed in any::<u64>(), full_batch in any::<bool>()) {
        let raw = simap::data::generate_classification(40, 3, 1.0, seed).unwrap();
        let t = NormalizationTransform::fit(&raw).unwrap();
        let ds = t.apply_dataset(&raw, true).unwrap().0;
        let config = TrainConfig {
            epochs: 20,
            seed,
            batch_mode: if full_batch { simap::BatchMode::FullBatch } else { simap::BatchMode::PerSample },
            ..TrainConfig::default()
        };
        let a = simap::train(&ds, 2, &config, None).unwrap();
        let b = simap::train(&ds, 2, &config, None).unwrap();
        prop_assert_eq!(&a.metrics, &b.metrics);
        for (m, n) in a.models.iter().zip(&b.models) {
            let sa = simap::SavedModel::new(m.clone()).to_json().unwrap();
            let sb = simap::SavedModel::new(n.clone()).to_json().unwrap();
            prop_assert_eq!(sa, sb);
        }
    }
}

#[test]
fn brute_force_census_matches_closed_form() {
    for (n, k) in [(1, 3), (2, 1), (2, 2), (3, 1), (3, 2)] {
        let brute = BruteSubdivision::new(n, k);
        let census = simap::subdivision::subdivision_census(n, k).unwrap();
        assert_eq!(brute.simplices.len() as u128, census.maximal_simplices);
        let positions = brute.vertex_positions();
        if k == 1 {
            assert_eq!(positions.len() as u128, census.level_one_vertices);
        }
    }
}
