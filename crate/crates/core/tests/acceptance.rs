//! The acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p toric-ic --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use toric_ic::cohom::{self, gamma_table, serre_duality_report};
use toric_ic::fan::{e_complex, is_acyclic_z, ConeSet};
use toric_ic::gem::{dualize_d, dualize_dhat, gamma, shallow_resolve};
use toric_ic::gmcx::{gt_ge, gt_le, mapping_cone};
use toric_ic::ic::{build_ic, support_box, verify_conditions};
use toric_ic::random::{random_gem_complex, random_gm_complex};
use toric_ic::{DimTable, Fan, GemComplex, GmComplex, Perversity, Sites};

/// Wall-clock limit for each end-to-end Betti computation.
const BETTI_TIME_LIMIT: Duration = Duration::from_secs(60);
const RANDOM_COMPLEXES: u64 = 20;
const RANDOM_LOCAL: usize = 100;
const MAX_CONE_DIM: usize = 3;
const SEED: u64 = 20_240_601;

/// Criteria whose stated constant disagrees with an independent oracle. Each
/// entry names the criterion and the row; the row must still agree with the
/// oracle, and is reported as FAIL against the stated constant.
const KNOWN_DIVERGENCES: &[(u32, &str)] = &[(1, "cube")];

const FANS: &[&str] = &["point", "p1", "p2", "p1xp1", "octahedron", "cube", "quadrant"];

fn load(name: &str) -> Arc<Sites> {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus", &format!("{name}.json")].iter().collect();
    Sites::new(Fan::from_json(&std::fs::read_to_string(p).unwrap()).unwrap())
}

fn presets(fan: &Fan) -> [Perversity; 3] {
    [Perversity::middle(fan), Perversity::top(fan), Perversity::bottom(fan)]
}

fn binom(n: usize, k: usize) -> i64 {
    (0..k).fold(1, |a, i| a * (n - i) as i64 / (i as i64 + 1))
}

/// Polynomial helpers on coefficient vectors, lowest degree first.
fn poly_add(a: &mut Vec<i64>, b: &[i64]) {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

fn times_x_minus_1_pow(p: &[i64], e: usize) -> Vec<i64> {
    let mut out = vec![0; p.len() + e];
    for (i, &c) in p.iter().enumerate() {
        for k in 0..=e {
            let s = if (e - k).is_multiple_of(2) { 1 } else { -1 };
            out[i + k] += c * s * binom(e, k);
        }
    }
    out
}

/// h-vector of a complete simplicial fan straight from its f-vector.
fn simplicial_h(fan: &Fan) -> Vec<i64> {
    let r = fan.rank();
    let mut h = vec![0i64; r + 1];
    for i in 0..=r {
        let f = fan.cones().iter().filter(|c| c.dim == i).count() as i64;
        for (k, c) in times_x_minus_1_pow(&[f], r - i).into_iter().enumerate() {
            h[k] += c;
        }
    }
    // Palindromic for complete simplicial fans, so the orientation does not matter.
    h
}

/// The toric g-polynomial of every cone, by the standard recursion on the face poset,
/// and the resulting h-polynomial of the complete fan.
fn stanley_h(fan: &Fan) -> Vec<i64> {
    let mut order: Vec<usize> = (0..fan.len()).collect();
    order.sort_by_key(|&s| fan.cone(s).dim);
    let mut g: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
    for &s in &order {
        let d = fan.cone(s).dim;
        if d == 0 {
            g.insert(s, vec![1]);
            continue;
        }
        let mut h = Vec::new();
        for (&t, gt) in &g {
            if t != s && brute_force_is_face(fan, t, s) {
                poly_add(&mut h, &times_x_minus_1_pow(gt, d - 1 - fan.cone(t).dim));
            }
        }
        let mut gs = vec![h[0]];
        for i in 1..=(d - 1) / 2 {
            gs.push(h[i] - h[i - 1]);
        }
        g.insert(s, gs);
    }
    let r = fan.rank();
    let mut h = Vec::new();
    for (&s, gs) in &g {
        poly_add(&mut h, &times_x_minus_1_pow(gs, r - fan.cone(s).dim));
    }
    h.resize(r + 1, 0);
    h
}

/// `t` is a face of `s` iff some integer functional (searched in a small box)
/// is ≥ 0 on the rays of `s` and vanishes exactly on the rays of `t`.
fn brute_force_is_face(fan: &Fan, t: usize, s: usize) -> bool {
    let (rt, rs) = (&fan.cone(t).rays, &fan.cone(s).rays);
    if !rt.iter().all(|x| rs.contains(x)) {
        return false;
    }
    let r = fan.rank();
    let rays = fan.rays();
    let range: Vec<i64> = (-2..=2).collect();
    let mut m = vec![-2i64; r];
    loop {
        let ok = rs.iter().all(|&i| {
            let v: i64 = rays[i].iter().zip(&m).map(|(a, b)| a * b).sum();
            if rt.contains(&i) {
                v == 0
            } else {
                v > 0
            }
        });
        if ok {
            return true;
        }
        let mut k = 0;
        loop {
            if k == r {
                return false;
            }
            if m[k] < *range.last().unwrap() {
                m[k] += 1;
                break;
            }
            m[k] = range[0];
            k += 1;
        }
    }
}

fn betti_from_h(h: &[i64]) -> Vec<usize> {
    let mut b = vec![0; 2 * h.len() - 1];
    for (k, &x) in h.iter().enumerate() {
        b[2 * k] = x as usize;
    }
    b
}

fn flip(t: &DimTable, r: i32) -> DimTable {
    t.iter().map(|(&(p, q), &n)| ((r - p, -r - q), n)).collect()
}

struct Outcome {
    criterion: u32,
    pass: bool,
    /// A failure not covered by a known divergence.
    hard: bool,
    detail: String,
    /// Rows failing only against a stated constant while matching the oracle.
    divergent: Vec<String>,
}

fn ic_corpus(sites: &Arc<Sites>) -> Vec<GemComplex> {
    presets(sites.fan()).iter().map(|p| build_ic(sites, p).unwrap()).collect()
}

fn random_corpus(sites: &Arc<Sites>) -> Vec<GemComplex> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..RANDOM_COMPLEXES).map(|_| random_gem_complex(sites, &mut rng)).collect()
}

fn criterion_1() -> Outcome {
    let stated: &[(&str, &[usize])] = &[
        ("p1", &[1, 0, 1]),
        ("p2", &[1, 0, 1, 0, 1]),
        ("p1xp1", &[1, 0, 2, 0, 1]),
        ("octahedron", &[1, 0, 3, 0, 3, 0, 1]),
        ("cube", &[1, 0, 3, 0, 3, 0, 1]),
    ];
    let mut hard = false;
    let mut detail = Vec::new();
    let mut divergent = Vec::new();
    for &(name, want) in stated {
        let sites = load(name);
        let fan = sites.fan();
        let t = Instant::now();
        let got = cohom::ih_betti(&sites, &Perversity::middle(fan)).unwrap();
        let took = t.elapsed();
        let oracle = if fan.is_simplicial() { betti_from_h(&simplicial_h(fan)) } else { betti_from_h(&stanley_h(fan)) };
        let in_time = took < BETTI_TIME_LIMIT;
        let matches_oracle = got == oracle;
        if got != want {
            detail.push(format!("{name}: {got:?} vs stated {want:?}, independent oracle {oracle:?}"));
            if matches_oracle && in_time {
                divergent.push(name.to_string());
            } else {
                hard = true;
            }
        }
        if !matches_oracle || !in_time {
            hard = true;
            detail.push(format!("{name}: {got:?}, oracle {oracle:?}, {took:?}"));
        }
    }
    let pass = !hard && divergent.is_empty();
    Outcome { criterion: 1, pass, hard, detail: detail.join("; "), divergent }
}

fn outcome(criterion: u32, failures: Vec<String>) -> Outcome {
    Outcome {
        criterion,
        pass: failures.is_empty(),
        hard: !failures.is_empty(),
        detail: failures.into_iter().take(5).collect::<Vec<_>>().join("; "),
        divergent: Vec::new(),
    }
}

fn criterion_2() -> Outcome {
    let mut bad = Vec::new();
    for name in FANS {
        let sites = load(name);
        for p in presets(sites.fan()) {
            let v = verify_conditions(&build_ic(&sites, &p).unwrap(), &p);
            if !v.is_empty() {
                bad.push(format!("{name}/{:?}: {:?}", p.name, v[0]));
            }
        }
    }
    outcome(2, bad)
}

fn complete_fans() -> impl Iterator<Item = (&'static str, Arc<Sites>)> {
    FANS.iter().map(|&n| (n, load(n))).filter(|(_, s)| s.fan().is_complete())
}

/// Criteria 3, 4 and 6 share the complexes, so they are computed together.
fn criteria_3_4_6() -> [Outcome; 3] {
    let (mut c3, mut c4, mut c6) = (Vec::new(), Vec::new(), Vec::new());
    for name in FANS {
        let sites = load(name);
        let fan = sites.fan();
        let complete = fan.is_complete();
        let r = fan.rank() as i32;
        let corpus: Vec<(String, GemComplex)> = ic_corpus(&sites)
            .into_iter()
            .enumerate()
            .map(|(i, l)| (format!("ic{i}"), l))
            .chain(random_corpus(&sites).into_iter().enumerate().map(|(i, l)| (format!("random{i}"), l)))
            .collect();
        for (tag, l) in &corpus {
            if complete {
                let d = dualize_d(l).unwrap();
                if gamma_table(l) != flip(&gamma_table(&d), r) {
                    c3.push(format!("{name}/{tag}"));
                }
                let dh = dualize_dhat(l).unwrap();
                if !gamma(&dh).cohomology_dims().is_empty() {
                    c4.push(format!("{name}/{tag}"));
                }
            }
            let (t, f) = shallow_resolve(l).unwrap();
            for s in 0..fan.len() {
                let cone = mapping_cone(&f.diagonal(s), &l.part(s), &t.part(s)).unwrap();
                if !cone.cohomology_dims().is_empty() {
                    c6.push(format!("{name}/{tag}/cone {s}"));
                }
            }
        }
    }
    [outcome(3, c3), outcome(4, c4), outcome(6, c6)]
}

fn dual_flip_holds(v: &GmComplex) -> bool {
    let r = v.alg().dim() as i32;
    let want: DimTable = v.cohomology_dims().iter().map(|(&(p, q), &n)| ((-p, -r - q), n)).collect();
    v.dual().cohomology_dims() == want
}

fn criterion_5() -> Outcome {
    let sites = load("octahedron");
    let fan = sites.fan();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut bad = Vec::new();
    for d in 0..=MAX_CONE_DIM {
        let alg = sites.alg(fan.of_dim(d)[0]);
        let r = d as i32;
        for n in 0..RANDOM_LOCAL {
            let v = random_gm_complex(alg, &mut rng);
            if !dual_flip_holds(&v) {
                bad.push(format!("dim {d} sample {n}: dual dimensions"));
            }
            for k in -r - 2..=r + 2 {
                let a = gt_le(k, &v.dual()).0.cohomology_dims().is_empty();
                let b = gt_ge(-r - k, &v).0.cohomology_dims().is_empty();
                if a != b {
                    bad.push(format!("dim {d} sample {n}: truncation at k = {k}"));
                }
            }
        }
    }
    outcome(5, bad)
}

fn criterion_7() -> Outcome {
    let mut bad = Vec::new();
    for name in FANS {
        let sites = load(name);
        for p in presets(sites.fan()) {
            let v = support_box(&build_ic(&sites, &p).unwrap());
            if !v.is_empty() {
                bad.push(format!("{name}/{:?}: {:?}", p.name, v[0]));
            }
        }
    }
    outcome(7, bad)
}

fn criterion_8() -> Outcome {
    let mut bad = Vec::new();
    for (name, sites) in complete_fans() {
        for p in presets(sites.fan()) {
            let rep = serre_duality_report(&sites, &p).unwrap();
            if !rep.ok {
                bad.push(format!("{name}/{:?}: {:?}", p.name, rep.violations[0]));
            }
        }
    }
    outcome(8, bad)
}

fn criterion_9() -> Outcome {
    let mut bad = Vec::new();
    for (name, sites) in complete_fans() {
        let fan = sites.fan();
        for s in 0..fan.len() {
            for &rho in &fan.cone(s).cofaces {
                if fan.cone(rho).dim != fan.cone(s).dim + 2 {
                    continue;
                }
                let mids: Vec<usize> = fan.cone(s).cofaces.iter().copied().filter(|&t| {
                    fan.cone(t).dim == fan.cone(s).dim + 1 && fan.cone(rho).faces.contains(&t)
                }).collect();
                let sum: i32 = mids
                    .iter()
                    .map(|&t| fan.incidence_sign(s, t).unwrap() * fan.incidence_sign(t, rho).unwrap())
                    .sum();
                if mids.len() != 2 || sum != 0 {
                    bad.push(format!("{name}: codim-2 at {s} < {rho}"));
                }
            }
            let star: ConeSet = fan.star(s).into_iter().collect();
            if !is_acyclic_z(&e_complex(fan, &star, true).unwrap()) {
                bad.push(format!("{name}: augmented star of {s}"));
            }
        }
    }
    outcome(9, bad)
}

fn criterion_10() -> Outcome {
    let dump = || {
        let sites = load("p2");
        let fan = sites.fan();
        let rep = cohom::report(&sites, &Perversity::middle(fan)).unwrap();
        let l = random_gem_complex(&sites, &mut ChaCha8Rng::seed_from_u64(SEED));
        let ic = build_ic(&sites, &Perversity::top(fan)).unwrap();
        let value = serde_json::json!({
            "report": rep,
            "random": l.to_debug_json(),
            "ic": ic.to_debug_json(),
        });
        serde_json::to_string(&value).unwrap()
    };
    let (a, b) = (dump(), dump());
    outcome(10, if a == b { vec![] } else { vec!["outputs differ".into()] })
}

#[test]
fn acceptance() {
    let [c3, c4, c6] = criteria_3_4_6();
    let mut all = vec![criterion_1(), criterion_2(), c3, c4, criterion_5(), c6];
    all.extend([criterion_7(), criterion_8(), criterion_9(), criterion_10()]);
    all.sort_by_key(|o| o.criterion);

    for o in &all {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if o.divergent.is_empty() { String::new() } else { format!(" [known divergence: {}]", o.divergent.join(", ")) };
        println!("criterion {:>2}: {tag}{note} {}", o.criterion, o.detail);
    }

    for o in &all {
        if o.pass {
            continue;
        }
        let known: Vec<&str> = KNOWN_DIVERGENCES.iter().filter(|(c, _)| *c == o.criterion).map(|(_, r)| *r).collect();
        assert!(!o.hard, "criterion {} failed: {}", o.criterion, o.detail);
        assert!(
            o.divergent.iter().map(String::as_str).eq(known.iter().copied()),
            "criterion {}: unexpected divergence {:?}",
            o.criterion,
            o.divergent
        );
    }
}

#[test]
fn oracles_on_known_fans() {
    assert_eq!(simplicial_h(load("p2").fan()), vec![1, 1, 1]);
    assert_eq!(simplicial_h(load("octahedron").fan()), vec![1, 3, 3, 1]);
    assert_eq!(stanley_h(load("octahedron").fan()), vec![1, 3, 3, 1]);
    assert_eq!(stanley_h(load("p1xp1").fan()), vec![1, 2, 1]);
    assert_eq!(stanley_h(load("cube").fan()), vec![1, 5, 5, 1]);
    let fan = load("cube");
    let fan = fan.fan();
    for s in 0..fan.len() {
        for t in 0..fan.len() {
            assert_eq!(brute_force_is_face(fan, t, s), fan.is_face(t, s), "{t} {s}");
        }
    }
}
