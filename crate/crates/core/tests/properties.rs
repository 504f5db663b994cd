use std::path::PathBuf;
use std::sync::Arc;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use toric_ic::cohom::{self, gamma_table, h_vector_oracle, serre_duality_report};
use toric_ic::gem::dualize_d;
use toric_ic::ic::{build_ic, build_ic_ordered, duality_pairing_check, support_box, verify_conditions, BuildOptions};
use toric_ic::random::random_gem_complex;
use toric_ic::{DimTable, Fan, Perversity, Sites};

fn load(name: &str) -> Arc<Sites> {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus", &format!("{name}.json")].iter().collect();
    Sites::new(Fan::from_json(&std::fs::read_to_string(p).unwrap()).unwrap())
}

fn random_perversity(fan: &Fan, seed: u64) -> Perversity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cones: Vec<String> = (0..fan.len())
        .filter(|&s| s != fan.zero_cone())
        .map(|s| format!(r#"{{"cone":{:?},"value":{}}}"#, fan.cone(s).rays, rand::Rng::random_range(&mut rng, -2..=2)))
        .collect();
    Perversity::parse(fan, &format!(r#"{{"by_cone":[{}]}}"#, cones.join(","))).unwrap()
}

fn small_fan() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("p1"), Just("p2"), Just("p1xp1"), Just("quadrant")]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ic_any_perversity(name in small_fan(), seed in any::<u64>()) {
        let sites = load(name);
        let p = random_perversity(sites.fan(), seed);
        let ic = build_ic(&sites, &p).unwrap();
        prop_assert!(ic.is_valid());
        prop_assert!(verify_conditions(&ic, &p).is_empty());
        prop_assert!(duality_pairing_check(&sites, &p).unwrap().ok());
    }

    #[test]
    fn ic_order_independent(name in small_fan(), seed in any::<u64>()) {
        let sites = load(name);
        let fan = sites.fan();
        let p = random_perversity(fan, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..fan.len()).filter(|&s| s != fan.zero_cone()).collect();
        order.shuffle(&mut rng);
        order.sort_by_key(|&s| fan.cone(s).dim);
        let a = build_ic(&sites, &p).unwrap();
        let b = build_ic_ordered(&sites, &p, &order, BuildOptions::default()).unwrap();
        for s in 0..fan.len() {
            prop_assert_eq!(a.part(s).dim_table(), b.part(s).dim_table());
        }
    }

    #[test]
    fn global_duality_on_random_complexes(name in prop_oneof![Just("p1"), Just("p2"), Just("p1xp1")], seed in any::<u64>()) {
        let sites = load(name);
        let r = sites.fan().rank() as i32;
        let l = random_gem_complex(&sites, &mut ChaCha8Rng::seed_from_u64(seed));
        let d = dualize_d(&l).unwrap();
        let flipped: DimTable = gamma_table(&d).iter().map(|(&(p, q), &n)| ((r - p, -r - q), n)).collect();
        prop_assert_eq!(gamma_table(&l), flipped);
    }
}

#[test]
fn restriction_compatible() {
    for name in ["p2", "p1xp1", "octahedron", "cube"] {
        let sites = load(name);
        let fan = sites.fan();
        for p in [Perversity::middle(fan), Perversity::top(fan), Perversity::bottom(fan)] {
            let whole = build_ic(&sites, &p).unwrap();
            for &top in fan.maximal() {
                let (sub, ids) = fan.face_fan(top);
                let local = build_ic(&Sites::new(sub), &p.pull_back(&ids)).unwrap();
                for (new, &old) in ids.iter().enumerate() {
                    assert_eq!(local.part(new).dim_table(), whole.part(old).dim_table(), "{name} cone {old}");
                }
            }
        }
    }
}

#[test]
fn corpus_betti_invariants() {
    for name in ["point", "p1", "p2", "p1xp1", "octahedron", "cube"] {
        let sites = load(name);
        let fan = sites.fan();
        let m = Perversity::middle(fan);
        let b = cohom::ih_betti(&sites, &m).unwrap();
        let rev: Vec<usize> = b.iter().rev().copied().collect();
        assert_eq!(b, rev, "{name}: Poincaré symmetry");
        assert!(b.iter().skip(1).step_by(2).all(|&x| x == 0), "{name}: odd Betti numbers");
        assert_eq!(b[0], 1);
        if fan.is_simplicial() {
            let h: Vec<usize> = h_vector_oracle(fan).unwrap().into_iter().map(|x| x as usize).collect();
            let even: Vec<usize> = b.iter().step_by(2).copied().collect();
            assert_eq!(even, h, "{name}");
        }
        for p in [Perversity::top(fan), Perversity::bottom(fan)] {
            let ic = build_ic(&sites, &p).unwrap();
            assert!(support_box(&ic).is_empty(), "{name}");
            assert!(serre_duality_report(&sites, &p).unwrap().ok, "{name}");
        }
    }
}
