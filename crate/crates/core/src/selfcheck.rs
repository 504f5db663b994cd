//! Seeded run of the invariant suites on one fan and perversity.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cohom::serre_duality_report;
use crate::fan::{e_complex, is_acyclic_z, ConeSet, Fan};
use crate::gem::{dualize_d, dualize_dhat, gamma, shallow_resolve, GemComplex, Sites};
use crate::gmcx::{gt_ge, gt_le, DimTable, GmComplex};
use crate::ic::{build_ic_with, duality_pairing_check, support_box, verify_conditions, BuildOptions, Perversity};
use crate::random::{random_gem_complex, random_gm_complex};
use crate::Result;

#[derive(Clone, Debug)]
pub struct SelfCheckConfig {
    pub seed: u64,
    /// Random complexes on the fan.
    pub complexes: usize,
    /// Random local complexes per cone dimension.
    pub local_complexes: usize,
    pub build: BuildOptions,
}

impl Default for SelfCheckConfig {
    fn default() -> Self {
        SelfCheckConfig { seed: 0, complexes: 5, local_complexes: 20, build: BuildOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub property: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SelfCheckReport {
    pub passed: Vec<String>,
    pub failure: Option<Failure>,
}

impl SelfCheckReport {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

/// `H^p(dual V)_q` against `H^{−p}(V)_{−r_σ−q}`.
pub fn dual_dims_match(v: &GmComplex) -> bool {
    let r = v.alg().dim() as i32;
    let flipped: DimTable = v.cohomology_dims().iter().map(|(&(p, q), &n)| ((-p, -r - q), n)).collect();
    v.dual().cohomology_dims() == flipped
}

/// `gt_{≤k}(dual V)` is acyclic exactly when `gt^{≥−r_σ−k}(V)` is, for the given `k`.
pub fn truncation_duality_holds(v: &GmComplex, k: i32) -> bool {
    let r = v.alg().dim() as i32;
    gt_le(k, &v.dual()).0.is_acyclic() == gt_ge(-r - k, v).0.is_acyclic()
}

pub fn codim2_relation_holds(fan: &Fan) -> bool {
    (0..fan.len()).all(|s| {
        fan.cone(s).cofaces.iter().all(|&rho| {
            if fan.cone(rho).dim != fan.cone(s).dim + 2 {
                return true;
            }
            let mids: Vec<usize> = fan
                .interval(s, rho)
                .into_iter()
                .filter(|&t| t != s && t != rho)
                .collect();
            mids.len() == 2
                && mids
                    .iter()
                    .map(|&t| fan.incidence_sign(s, t).unwrap() * fan.incidence_sign(t, rho).unwrap())
                    .sum::<i32>()
                    == 0
        })
    })
}

/// Acyclicity of the augmented incidence complex on the star of every cone.
pub fn augmented_stars_acyclic(fan: &Fan) -> Result<bool> {
    for s in 0..fan.len() {
        let phi: ConeSet = fan.star(s).into_iter().collect();
        if !is_acyclic_z(&e_complex(fan, &phi, true)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn flip(t: &DimTable, r: i32) -> DimTable {
    t.iter().map(|(&(p, q), &n)| ((r - p, -r - q), n)).collect()
}

/// Problems with the fan-level duality statements for one complex, if any.
pub fn complex_properties(l: &GemComplex) -> Result<Option<Failure>> {
    let fail = |property: &str, detail: String| Ok(Some(Failure { property: property.into(), detail }));
    let fan = l.fan();
    if let Err(v) = l.validate() {
        return fail("valid input", format!("{v:?}"));
    }
    let (t, f) = shallow_resolve(l)?;
    for s in 0..fan.len() {
        if !crate::gmcx::is_quasi_iso(&f.diagonal(s), &l.part(s), &t.part(s))? {
            return fail("shallow resolution", format!("not a quasi-isomorphism on cone {s}"));
        }
    }
    let d = dualize_d(l)?;
    if let Err(v) = d.validate() {
        return fail("dual is valid", format!("{v:?}"));
    }
    let dd = dualize_d(&d)?;
    for s in 0..fan.len() {
        if dd.part(s).cohomology_dims() != l.part(s).cohomology_dims() {
            return fail("double dual", format!("cohomology differs on cone {s}"));
        }
        if dd.part(s).dim_table() != t.part(s).dim_table() {
            return fail("double dual", format!("terms differ from the shallow resolution on cone {s}"));
        }
    }
    if fan.is_complete() {
        let r = fan.rank() as i32;
        if gamma(l).cohomology_dims() != flip(&gamma(&d).cohomology_dims(), r) {
            return fail("global duality", "Γ tables are not dual".into());
        }
        if !gamma(&dualize_dhat(l)?).is_acyclic() {
            return fail("augmented dual acyclic", "Γ of the augmented dual has cohomology".into());
        }
    }
    Ok(None)
}

/// Runs every property in a fixed order and stops at the first failure.
pub fn run(sites: &Arc<Sites>, p: &Perversity, cfg: &SelfCheckConfig) -> Result<SelfCheckReport> {
    let fan = sites.fan();
    let mut rep = SelfCheckReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    macro_rules! check {
        ($name:expr, $ok:expr, $detail:expr) => {
            if $ok {
                rep.passed.push($name.to_string());
            } else {
                rep.failure = Some(Failure { property: $name.to_string(), detail: $detail });
                return Ok(rep);
            }
        };
    }

    check!("codim-2 relation", codim2_relation_holds(fan), String::new());
    if fan.is_complete() {
        check!("augmented stars acyclic", augmented_stars_acyclic(fan)?, String::new());
    }

    let r = fan.rank() as i32;
    let mut dims_bad = None;
    let mut trunc_bad = None;
    for d in 0..=fan.rank() {
        let Some(&s) = fan.of_dim(d).first() else { continue };
        let alg = sites.alg(s);
        for n in 0..cfg.local_complexes {
            let v = random_gm_complex(alg, &mut rng);
            if dims_bad.is_none() && !dual_dims_match(&v) {
                dims_bad = Some(format!("cone dimension {d}, sample {n}"));
            }
            if trunc_bad.is_none() {
                if let Some(k) = (-r - 2..=r + 2).find(|&k| !truncation_duality_holds(&v, k)) {
                    trunc_bad = Some(format!("cone dimension {d}, sample {n}, k = {k}"));
                }
            }
        }
    }
    check!("local dual dimensions", dims_bad.is_none(), dims_bad.unwrap_or_default());
    check!("truncation duality", trunc_bad.is_none(), trunc_bad.unwrap_or_default());

    let ic = build_ic_with(sites, p, cfg.build)?;
    let conds = verify_conditions(&ic, p);
    check!("ic conditions", conds.is_empty(), format!("{:?}", conds.first()));
    let boxes = support_box(&ic);
    check!("support boxes", boxes.is_empty(), format!("{:?}", boxes.first()));
    let pairing = duality_pairing_check(sites, p)?;
    check!("dual of ic", pairing.ok(), format!("{pairing:?}"));
    if fan.is_complete() {
        let serre = serre_duality_report(sites, p)?;
        check!("serre duality", serre.ok, format!("{:?}", serre.violations.first()));
    }

    let mut corpus = vec![ic];
    corpus.extend((0..cfg.complexes).map(|_| random_gem_complex(sites, &mut rng)));
    for (n, l) in corpus.iter().enumerate() {
        if let Some(f) = complex_properties(l)? {
            rep.failure = Some(Failure { property: f.property, detail: format!("complex {n}: {}", f.detail) });
            return Ok(rep);
        }
    }
    rep.passed.push("complex properties".into());
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fan::tests::{p1, p2};

    #[test]
    fn passes_on_small_fans() {
        for fan in [p1(), p2(), Fan::new(0, vec![], vec![vec![]]).unwrap()] {
            let sites = Sites::new(fan.clone());
            let rep = run(&sites, &Perversity::middle(&fan), &SelfCheckConfig { seed: 42, ..Default::default() }).unwrap();
            assert!(rep.ok(), "{:?}", rep.failure);
        }
    }

    #[test]
    fn corrupt_builder_is_named() {
        let fan = p2();
        let sites = Sites::new(fan.clone());
        let cfg = SelfCheckConfig { build: BuildOptions { skip_truncation: true }, ..Default::default() };
        let rep = run(&sites, &Perversity::middle(&fan), &cfg).unwrap();
        assert_eq!(rep.failure.unwrap().property, "ic conditions");
    }
}
