//! Seeded random modules, complexes and complexes on fans, for property checks.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::exactq::Q;
use crate::extalg::{free_hom, summand_inclusion, ConeAlgebra, ExtModule, ModHom};
use crate::gem::{gt_pi_ge, j_shriek_extend, GemComplex, Sites};
use crate::gmcx::{gt_ge, gt_le, GmComplex};

fn small(rng: &mut ChaCha8Rng) -> Q {
    Q::from_int(rng.random_range(-2..=2))
}

/// A direct sum of twisted free modules and trivial modules.
pub fn random_module(alg: &Arc<ConeAlgebra>, rng: &mut ChaCha8Rng) -> ExtModule {
    let mut parts = Vec::new();
    for _ in 0..rng.random_range(1..=2) {
        parts.push(ExtModule::free(alg).twist(rng.random_range(-1..=1)));
    }
    if rng.random_bool(0.5) {
        let k = alg.dim() as i32;
        parts.push(ExtModule::trivial(alg, rng.random_range(-k..=0)));
    }
    let refs: Vec<&ExtModule> = parts.iter().collect();
    ExtModule::direct_sum(alg, &refs).0
}

/// A two-term complex `A(σ)(s) → W` placed in degrees `i, i + 1`.
fn random_arrow(alg: &Arc<ConeAlgebra>, rng: &mut ChaCha8Rng) -> GmComplex {
    let w = random_module(alg, rng);
    let degs: Vec<i32> = w.dims().keys().copied().collect();
    let s = degs[rng.random_range(0..degs.len())];
    let v: Vec<Q> = (0..w.dim(s)).map(|_| small(rng)).collect();
    let f = free_hom(s, &w, &v);
    let src = ExtModule::free(alg).twist(s);
    let i = rng.random_range(-1..=1);
    GmComplex::new(
        alg,
        BTreeMap::from([(i, src), (i + 1, w)]),
        BTreeMap::from([(i, f)]),
    )
}

/// A sum of single modules and random arrows, possibly truncated.
pub fn random_gm_complex(alg: &Arc<ConeAlgebra>, rng: &mut ChaCha8Rng) -> GmComplex {
    let mut pieces = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        if rng.random_bool(0.6) {
            pieces.push(random_arrow(alg, rng));
        } else {
            let i = rng.random_range(-1..=1);
            pieces.push(GmComplex::concentrated(random_module(alg, rng), i));
        }
    }
    let refs: Vec<&GmComplex> = pieces.iter().collect();
    let c = GmComplex::direct_sum(alg, &refs).0;
    let k = rng.random_range(-2..=2);
    match rng.random_range(0..4) {
        0 => gt_le(k, &c).0,
        1 => gt_ge(k, &c).0,
        _ => c,
    }
}

/// Adds `r` as a direct summand of `L(π)` with zero mixing into it.
fn add_summand(l: &GemComplex, pi: usize, r: &GmComplex) -> GemComplex {
    let alg = l.sites().alg(pi).clone();
    let old = l.part(pi);
    let (sum, offs) = GmComplex::direct_sum(&alg, &[&old, r]);
    let mut out = l.clone();
    let into: Vec<(usize, BTreeMap<i32, ModHom>)> = l
        .mixings()
        .iter()
        .filter(|((_, b), _)| *b == pi)
        .map(|(&(a, _), m)| (a, m.clone()))
        .collect();
    for (a, m) in into {
        let m = m
            .into_iter()
            .map(|(i, f)| {
                let inc = summand_inclusion(&old.term(i + 1), &sum.term(i + 1), &offs[0][&(i + 1)]);
                (i, inc.after(&f))
            })
            .collect();
        out.set_mixing(a, pi, m);
    }
    out.set_part(pi, sum);
    out
}

/// A valid complex on the fan: cones are visited by dimension, each one
/// receiving a random mix of zero extension, an extra local summand and a
/// truncation. Extra summands get rarer as the rank grows, since every one
/// is induced up through all of its cofaces.
pub fn random_gem_complex(sites: &Arc<Sites>, rng: &mut ChaCha8Rng) -> GemComplex {
    let fan = sites.fan();
    let z = fan.zero_cone();
    let extra = 0.6 / (fan.rank().max(1) + 1) as f64;
    let mut l = GemComplex::zero(sites);
    let zero_part = if rng.random_bool(1.0 - extra) {
        GmComplex::concentrated(ExtModule::trivial(sites.alg(z), 0), rng.random_range(-1..=1))
    } else {
        random_gm_complex(sites.alg(z), rng)
    };
    l.set_part(z, zero_part);
    let mut order: Vec<usize> = (0..fan.len()).filter(|&s| s != z).collect();
    order.sort_by_key(|&s| fan.cone(s).dim);
    for pi in order {
        if rng.random_bool(0.8) {
            l = j_shriek_extend(&l, pi).expect("cones visited by dimension");
        }
        if rng.random_bool(extra) {
            let r = random_gm_complex(sites.alg(pi), rng);
            l = add_summand(&l, pi, &r);
        }
        if rng.random_bool(0.5) {
            let k = rng.random_range(-1..=2);
            l = gt_pi_ge(k, pi, &l).expect("cones visited by dimension");
        }
    }
    l
}
