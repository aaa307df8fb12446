mod common;

use morse_smale::gradient::validate_gradient;
use morse_smale::msc::{compute, compute_pipeline, ComputeOptions};
use proptest::prelude::*;

use common::{enumerate_gradient_paths, random_field};

fn dims() -> impl Strategy<Value = [usize; 3]> {
    [2usize..9, 2usize..9, 2usize..9]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn computed_complexes_are_consistent(n in dims(), seed in any::<u64>()) {
        let f = random_field(n, seed);
        let p = compute_pipeline(&f, ComputeOptions::default()).unwrap();
        let m = &p.complex;
        prop_assert_eq!(m.euler(), 1);
        prop_assert!(m.counts()[0] >= 1 && m.counts()[3] >= 1);
        prop_assert!(m.validate().is_ok());
        prop_assert!(m.boundary_check().is_clean());
        prop_assert!(validate_gradient(&p.gradient).is_valid());

        let cp = &m.critical_points;
        for a in &m.arcs {
            prop_assert_eq!(cp[a.src as usize].index + 1, cp[a.dst as usize].index);
            prop_assert!(a.multiplicity >= 1);
            if cp[a.src as usize].index == 1 {
                prop_assert!(p.marked.two_saddles.binary_search(&cp[a.dst as usize].cell).is_ok());
            }
        }
        let sums = m.degree_sums();
        for s in cp.iter().filter(|p| p.index == 1) {
            prop_assert_eq!(sums.get(&(s.id, 0)).copied(), Some(2));
        }
        for s in cp.iter().filter(|p| p.index == 2) {
            let up = sums.get(&(s.id, 3)).copied().unwrap_or(0);
            let expected = if f.dims().on_boundary(s.cell) { 1 } else { 2 };
            prop_assert_eq!(up, expected);
        }
    }

    #[test]
    fn path_counts_match_enumeration(n in dims(), seed in any::<u64>()) {
        let f = random_field(n, seed);
        let p = compute_pipeline(&f, ComputeOptions::default()).unwrap();
        let oracle = enumerate_gradient_paths(&p.gradient, &p.critical.saddles1, 10_000_000);
        prop_assert_eq!(p.path_counts.to_map(), oracle);
    }
}

#[test]
fn result_is_independent_of_thread_count() {
    let f = random_field([17, 13, 11], 77);
    let run = |t: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .unwrap();
        pool.install(|| {
            compute(
                &f,
                ComputeOptions {
                    segmentation: true,
                    ..Default::default()
                },
            )
            .unwrap()
        })
    };
    let one = run(1);
    for t in [2, 5] {
        let other = run(t);
        assert_eq!(other, one);
        assert_eq!(other.to_json(), one.to_json());
    }
}

#[test]
fn repeated_runs_are_identical() {
    let f = random_field([10, 10, 10], 3);
    let a = compute(&f, ComputeOptions::default()).unwrap().to_json();
    let b = compute(&f, ComputeOptions::default()).unwrap().to_json();
    assert_eq!(a, b);
}
