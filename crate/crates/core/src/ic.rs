//! Perversities and the intersection complex `ic_p(Δ)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fan::Fan;
use crate::gem::{dualize_d, gamma, gt_pi_ge, i_circ, i_star, j_shriek_extend, GemComplex, Sites};
use crate::gmcx::DimTable;

/// The JSON forms accepted for a perversity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerversitySpec {
    Named { name: String },
    ByDimension { by_dimension: BTreeMap<String, i32> },
    ByCone { by_cone: Vec<ConeValue> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeValue {
    pub cone: Vec<usize>,
    pub value: i32,
}

/// An integer on every nonzero cone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Perversity {
    pub name: Option<String>,
    values: BTreeMap<usize, i32>,
}

impl Perversity {
    pub fn from_fn(fan: &Fan, name: Option<&str>, f: impl Fn(usize) -> i32) -> Perversity {
        let z = fan.zero_cone();
        Perversity {
            name: name.map(str::to_string),
            values: (0..fan.len()).filter(|&s| s != z).map(|s| (s, f(fan.cone(s).dim))).collect(),
        }
    }

    pub fn middle(fan: &Fan) -> Perversity {
        Perversity::from_fn(fan, Some("middle"), |_| 0)
    }

    pub fn top(fan: &Fan) -> Perversity {
        Perversity::from_fn(fan, Some("top"), |d| d as i32 - 1)
    }

    pub fn bottom(fan: &Fan) -> Perversity {
        Perversity::from_fn(fan, Some("bottom"), |d| 1 - d as i32)
    }

    pub fn named(fan: &Fan, name: &str) -> Result<Perversity> {
        match name {
            "middle" => Ok(Perversity::middle(fan)),
            "top" => Ok(Perversity::top(fan)),
            "bottom" => Ok(Perversity::bottom(fan)),
            other => Err(Error::InvalidPerversity(format!("unknown preset {other:?}"))),
        }
    }

    pub fn from_spec(fan: &Fan, spec: &PerversitySpec) -> Result<Perversity> {
        match spec {
            PerversitySpec::Named { name } => Perversity::named(fan, name),
            PerversitySpec::ByDimension { by_dimension } => {
                let mut by_dim = BTreeMap::new();
                for (k, &v) in by_dimension {
                    let d: usize = k
                        .parse()
                        .map_err(|_| Error::InvalidPerversity(format!("bad dimension key {k:?}")))?;
                    by_dim.insert(d, v);
                }
                for d in 1..=fan.rank() {
                    if !by_dim.contains_key(&d) && !fan.of_dim(d).is_empty() {
                        return Err(Error::InvalidPerversity(format!("no value for dimension {d}")));
                    }
                }
                Ok(Perversity::from_fn(fan, None, |d| by_dim.get(&d).copied().unwrap_or(0)))
            }
            PerversitySpec::ByCone { by_cone } => {
                let mut values = BTreeMap::new();
                for cv in by_cone {
                    let mut rays = cv.cone.clone();
                    rays.sort_unstable();
                    let id = fan
                        .find(&rays)
                        .ok_or_else(|| Error::InvalidPerversity(format!("{:?} is not a cone", cv.cone)))?;
                    values.insert(id, cv.value);
                }
                let z = fan.zero_cone();
                values.remove(&z);
                if let Some(missing) = (0..fan.len()).find(|&s| s != z && !values.contains_key(&s)) {
                    return Err(Error::InvalidPerversity(format!(
                        "no value for cone {:?}",
                        fan.cone(missing).rays
                    )));
                }
                Ok(Perversity { name: None, values })
            }
        }
    }

    /// Accepts the JSON forms, or a bare preset name.
    pub fn parse(fan: &Fan, text: &str) -> Result<Perversity> {
        let t = text.trim();
        if !t.starts_with('{') {
            return Perversity::named(fan, t);
        }
        let spec: PerversitySpec =
            serde_json::from_str(t).map_err(|e| Error::InvalidPerversity(e.to_string()))?;
        Perversity::from_spec(fan, &spec)
    }

    pub fn value(&self, s: usize) -> i32 {
        self.values[&s]
    }

    pub fn values(&self) -> &BTreeMap<usize, i32> {
        &self.values
    }

    /// `−p`; the presets map to their duals.
    pub fn dual(&self) -> Perversity {
        let name = self.name.as_deref().map(|n| match n {
            "top" => "bottom".to_string(),
            "bottom" => "top".to_string(),
            other => other.to_string(),
        });
        Perversity {
            name,
            values: self.values.iter().map(|(&s, &v)| (s, -v)).collect(),
        }
    }

    /// The same values on a subfan, through its id map.
    pub fn pull_back(&self, ids: &[usize]) -> Perversity {
        Perversity {
            name: self.name.clone(),
            values: ids
                .iter()
                .enumerate()
                .filter_map(|(new, old)| self.values.get(old).map(|&v| (new, v)))
                .collect(),
        }
    }
}

/// Deliberate defects for exercising the checkers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildOptions {
    pub skip_truncation: bool,
}

/// Builds `ic_p(Δ)` over the nonzero cones in the given order, which must
/// list every face before its cofaces.
pub fn build_ic_ordered(sites: &Arc<Sites>, p: &Perversity, order: &[usize], opts: BuildOptions) -> Result<GemComplex> {
    let fan = sites.fan();
    let mut l = GemComplex::point(sites);
    let mut seen = vec![false; fan.len()];
    seen[fan.zero_cone()] = true;
    for &pi in order {
        if fan.cone(pi).faces.iter().any(|&f| f != pi && !seen[f]) {
            return Err(Error::InvalidInput(format!("cone {pi} visited before its faces")));
        }
        seen[pi] = true;
        l = j_shriek_extend(&l, pi)?;
        if !opts.skip_truncation {
            l = gt_pi_ge(p.value(pi) + 1, pi, &l)?;
        }
    }
    Ok(l)
}

pub fn build_ic_with(sites: &Arc<Sites>, p: &Perversity, opts: BuildOptions) -> Result<GemComplex> {
    let fan = sites.fan();
    let z = fan.zero_cone();
    let mut order: Vec<usize> = (0..fan.len()).filter(|&s| s != z).collect();
    order.sort_by_key(|&s| fan.cone(s).dim);
    build_ic_ordered(sites, p, &order, opts)
}

pub fn build_ic(sites: &Arc<Sites>, p: &Perversity) -> Result<GemComplex> {
    build_ic_with(sites, p, BuildOptions::default())
}

/// A bidegree where one of the three defining conditions fails.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionViolation {
    pub condition: u8,
    pub cone: usize,
    pub i: i32,
    pub j: i32,
}

fn local_violations(l: &GemComplex, p: &Perversity, s: usize) -> Vec<ConditionViolation> {
    let pv = p.value(s);
    let mut out = Vec::new();
    for &(i, j) in l.part(s).cohomology_dims().keys() {
        if i + j <= pv {
            out.push(ConditionViolation { condition: 2, cone: s, i, j });
        }
    }
    let star = i_star(l, s).expect("cone of the fan").complex.cohomology_dims();
    for &(i, j) in star.keys() {
        if i + j >= pv {
            out.push(ConditionViolation { condition: 3, cone: s, i, j });
        }
    }
    out
}

/// Checks the three defining conditions of `ic_p` exactly and lists every
/// failing bidegree.
pub fn verify_conditions(l: &GemComplex, p: &Perversity) -> Vec<ConditionViolation> {
    let fan = l.fan();
    let z = fan.zero_cone();
    let mut out = Vec::new();
    let h0 = l.part(z).cohomology_dims();
    if h0.get(&(0, 0)) != Some(&1) {
        out.push(ConditionViolation { condition: 1, cone: z, i: 0, j: 0 });
    }
    for &(i, j) in h0.keys() {
        if i != 0 {
            out.push(ConditionViolation { condition: 1, cone: z, i, j });
        }
    }
    let cones: Vec<usize> = (0..fan.len()).filter(|&s| s != z).collect();
    let rest: Vec<Vec<ConditionViolation>> = cones.par_iter().map(|&s| local_violations(l, p, s)).collect();
    out.extend(rest.into_iter().flatten());
    out
}

/// A term lying outside its expected box.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoxViolation {
    pub what: &'static str,
    pub cone: usize,
    pub i: i32,
    pub j: i32,
}

fn outside(t: &DimTable, i_range: (i32, i32), j_range: (i32, i32)) -> Vec<(i32, i32)> {
    t.keys()
        .copied()
        .filter(|&(i, j)| i < i_range.0 || i > i_range.1 || j < j_range.0 || j > j_range.1)
        .collect()
}

/// Checks the support boxes of `L(σ)`, `i_σ^∘`, `i_σ^*` and `Γ` on the terms.
pub fn support_box(l: &GemComplex) -> Vec<BoxViolation> {
    let fan = l.fan();
    let z = fan.zero_cone();
    let r = fan.rank() as i32;
    let mut out = Vec::new();
    for (i, j) in outside(&l.part(z).dim_table(), (0, 0), (0, 0)) {
        out.push(BoxViolation { what: "local", cone: z, i, j });
    }
    let per_cone: Vec<Vec<BoxViolation>> = (0..fan.len())
        .into_par_iter()
        .filter(|&s| s != z)
        .map(|s| {
            let rs = fan.cone(s).dim as i32;
            let mut v = Vec::new();
            let checks = [
                ("local", l.part(s).dim_table(), (1, rs)),
                ("circ", i_circ(l, s).unwrap().complex.dim_table(), (0, rs - 1)),
                ("star", i_star(l, s).unwrap().complex.dim_table(), (0, rs)),
            ];
            for (what, t, ir) in checks {
                for (i, j) in outside(&t, ir, (-rs, 0)) {
                    v.push(BoxViolation { what, cone: s, i, j });
                }
            }
            v
        })
        .collect();
    out.extend(per_cone.into_iter().flatten());
    for (i, j) in outside(&gamma(l).dim_table(), (0, r), (-r, 0)) {
        out.push(BoxViolation { what: "gamma", cone: l.sites().apex(), i, j });
    }
    out
}

/// Outcome of comparing `D(ic_p)` with `ic_{−p}`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PairingReport {
    pub condition_violations: Vec<ConditionViolation>,
    /// Cones where the local or pulled-back cohomology tables differ.
    pub table_mismatches: Vec<usize>,
}

impl PairingReport {
    pub fn ok(&self) -> bool {
        self.condition_violations.is_empty() && self.table_mismatches.is_empty()
    }
}

pub fn duality_pairing_check(sites: &Arc<Sites>, p: &Perversity) -> Result<PairingReport> {
    let ic = build_ic(sites, p)?;
    let q = p.dual();
    let ic_dual = build_ic(sites, &q)?;
    let d = dualize_d(&ic)?;
    let mut report = PairingReport {
        condition_violations: verify_conditions(&d, &q),
        ..Default::default()
    };
    for s in 0..sites.fan().len() {
        let same_local = d.part(s).cohomology_dims() == ic_dual.part(s).cohomology_dims();
        let same_star =
            i_star(&d, s)?.complex.cohomology_dims() == i_star(&ic_dual, s)?.complex.cohomology_dims();
        if !same_local || !same_star {
            report.table_mismatches.push(s);
        }
    }
    Ok(report)
}
