//! Complexes of graded exterior modules on a fan: one complex per cone plus
//! mixing maps between comparable cones.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::exactq::{QMatrix, Q};
use crate::extalg::{
    assemble_hom, dualize, dualize_hom, extend_hom, induce, induce_dual_iso, induce_hom,
    summand_inclusion, unit_inclusion, ConeAlgebra, ExtModule, Induced, ModHom,
};
use crate::fan::Fan;
use crate::gmcx::{gt_ge, mapping_cone, ChainMap, GmComplex, Offsets};

/// The cones of a fan together with the imaginary apex `α` of the augmented
/// fan, which has id `fan.len()`, algebra `A`, and every cone as a face.
#[derive(Debug)]
pub struct Sites {
    fan: Fan,
    algs: Vec<Arc<ConeAlgebra>>,
}

impl Sites {
    pub fn new(fan: Fan) -> Arc<Sites> {
        let mut algs: Vec<Arc<ConeAlgebra>> = (0..fan.len()).map(|i| ConeAlgebra::for_cone(&fan, i)).collect();
        algs.push(ConeAlgebra::full(fan.len(), fan.rank()));
        Arc::new(Sites { fan, algs })
    }

    pub fn fan(&self) -> &Fan {
        &self.fan
    }

    pub fn apex(&self) -> usize {
        self.fan.len()
    }

    pub fn alg(&self, s: usize) -> &Arc<ConeAlgebra> {
        &self.algs[s]
    }

    /// `r_σ`, with `r_α = r + 1`.
    pub fn dim(&self, s: usize) -> i32 {
        if s == self.apex() {
            self.fan.rank() as i32 + 1
        } else {
            self.fan.cone(s).dim as i32
        }
    }

    /// `F(σ)` in id order, including `σ`.
    pub fn faces(&self, s: usize) -> Vec<usize> {
        if s == self.apex() {
            (0..=s).collect()
        } else {
            self.fan.cone(s).faces.clone()
        }
    }

    pub fn is_face(&self, a: usize, b: usize) -> bool {
        b == self.apex() || (a != self.apex() && self.fan.is_face(a, b))
    }

    pub fn facets(&self, s: usize) -> Vec<usize> {
        if s == self.apex() {
            self.fan.of_dim(self.fan.rank())
        } else {
            self.fan.cone(s).facets.clone()
        }
    }

    /// Cones `τ` with `a ≺ τ ≺ b`.
    pub fn interval(&self, a: usize, b: usize) -> Vec<usize> {
        self.faces(b).into_iter().filter(|&t| self.is_face(a, t)).collect()
    }

    /// The incidence sign of a facet pair; `+1` into the apex.
    pub fn sign(&self, a: usize, b: usize) -> Result<i32> {
        if b == self.apex() {
            if self.sites_dim_ok(a) {
                return Ok(1);
            }
            return Err(Error::NotFacet(a, b));
        }
        self.fan.incidence_sign(a, b)
    }

    fn sites_dim_ok(&self, a: usize) -> bool {
        a < self.apex() && self.fan.cone(a).dim == self.fan.rank()
    }

    fn check(&self, s: usize) -> Result<()> {
        if s > self.apex() {
            return Err(Error::ConeNotInFan(s));
        }
        Ok(())
    }
}

type Mixing = BTreeMap<i32, ModHom>;

/// An object of `CGEM(Δ)`. `mix[(σ, τ)][i]` maps `L(σ)^i → L(τ)^{i+1}`.
#[derive(Clone, Debug)]
pub struct GemComplex {
    sites: Arc<Sites>,
    parts: BTreeMap<usize, GmComplex>,
    mix: BTreeMap<(usize, usize), Mixing>,
}

/// The first failure found by [`GemComplex::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub rho: usize,
    pub mu: usize,
    pub degree: i32,
    pub what: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}) in degree {}: {}", self.rho, self.mu, self.degree, self.what)
    }
}

impl GemComplex {
    pub fn zero(sites: &Arc<Sites>) -> GemComplex {
        GemComplex {
            sites: sites.clone(),
            parts: BTreeMap::new(),
            mix: BTreeMap::new(),
        }
    }

    /// `Q` in bidegree `(0, 0)` on the zero cone.
    pub fn point(sites: &Arc<Sites>) -> GemComplex {
        let z = sites.fan().zero_cone();
        let mut l = GemComplex::zero(sites);
        l.set_part(z, GmComplex::concentrated(ExtModule::trivial(sites.alg(z), 0), 0));
        l
    }

    /// Assembles a complex, dropping zero parts and zero mixing maps.
    pub fn from_parts(
        sites: &Arc<Sites>,
        parts: BTreeMap<usize, GmComplex>,
        mix: BTreeMap<(usize, usize), Mixing>,
    ) -> GemComplex {
        let mut l = GemComplex::zero(sites);
        for (s, c) in parts {
            l.set_part(s, c);
        }
        for ((a, b), m) in mix {
            l.set_mixing(a, b, m);
        }
        l
    }

    pub fn sites(&self) -> &Arc<Sites> {
        &self.sites
    }

    pub fn fan(&self) -> &Fan {
        self.sites.fan()
    }

    pub fn part(&self, s: usize) -> GmComplex {
        match self.parts.get(&s) {
            Some(c) => c.clone(),
            None => GmComplex::zero(self.sites.alg(s)),
        }
    }

    pub fn part_ref(&self, s: usize) -> Option<&GmComplex> {
        self.parts.get(&s)
    }

    pub fn parts(&self) -> &BTreeMap<usize, GmComplex> {
        &self.parts
    }

    pub fn mixings(&self) -> &BTreeMap<(usize, usize), Mixing> {
        &self.mix
    }

    pub fn set_part(&mut self, s: usize, c: GmComplex) {
        if c.is_zero() {
            self.parts.remove(&s);
        } else {
            self.parts.insert(s, c);
        }
    }

    pub fn set_mixing(&mut self, a: usize, b: usize, m: Mixing) {
        let m: Mixing = m.into_iter().filter(|(_, f)| !f.is_zero()).collect();
        if m.is_empty() {
            self.mix.remove(&(a, b));
        } else {
            self.mix.insert((a, b), m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    /// Sites carrying a nonzero complex.
    pub fn support(&self) -> BTreeSet<usize> {
        self.parts.keys().copied().collect()
    }

    /// `d(a/b)^i`, the differential itself when `a = b`.
    pub fn d(&self, a: usize, b: usize, i: i32) -> ModHom {
        if a == b {
            return self.part(a).diff(i);
        }
        match self.mix.get(&(a, b)).and_then(|m| m.get(&i)) {
            Some(f) => f.clone(),
            None => ModHom::zero(&self.part(a).term(i), &self.part(b).term(i + 1)),
        }
    }

    fn d_ref(&self, a: usize, b: usize, i: i32) -> Option<&ModHom> {
        if a == b {
            self.parts.get(&a).and_then(|c| c.diffs().get(&i))
        } else {
            self.mix.get(&(a, b)).and_then(|m| m.get(&i))
        }
    }

    /// Checks every part, the linearity of every mixing map, and
    /// `Σ_{σ∈F[ρ,μ]} d(σ/μ)^{i+1} d(ρ/σ)^i = 0`.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let bad = |rho, mu, degree, what: &str| Violation {
            rho,
            mu,
            degree,
            what: what.to_string(),
        };
        for (&s, c) in &self.parts {
            if !c.is_valid() {
                let i = c.terms().keys().next().copied().unwrap_or(0);
                return Err(bad(s, s, i, "local complex is not a complex of modules"));
            }
        }
        for (&(a, b), m) in &self.mix {
            if a == b || !self.sites.is_face(a, b) {
                return Err(bad(a, b, 0, "mixing map between non-comparable cones"));
            }
            let sub = self.sites.alg(a);
            for (&i, f) in m {
                let src = self.part(a).term(i);
                let tgt = self.part(b).term(i + 1).restrict(sub);
                if f.src_dims() != src.dims() || f.tgt_dims() != tgt.dims() || !f.is_hom(&src, &tgt) {
                    return Err(bad(a, b, i, "mixing map is not a module map"));
                }
            }
        }
        let support: Vec<usize> = self.parts.keys().copied().collect();
        for &rho in &support {
            for mu in 0..=self.sites.apex() {
                if rho == mu || !self.sites.is_face(rho, mu) {
                    continue;
                }
                let between = self.sites.interval(rho, mu);
                for (&i, v) in self.part(rho).terms() {
                    let tgt = self.part(mu).term(i + 2);
                    let mut total = ModHom::zero(v, &tgt);
                    for &s in &between {
                        let (Some(first), Some(second)) = (self.d_ref(rho, s, i), self.d_ref(s, mu, i + 1)) else {
                            continue;
                        };
                        total = total.add(&second.after(first));
                    }
                    if !total.is_zero() {
                        return Err(bad(rho, mu, i, "mixing relation fails"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// Per-site graded cohomology of the local complexes.
    pub fn local_cohomology(&self) -> BTreeMap<usize, crate::gmcx::DimTable> {
        self.parts.iter().map(|(&s, c)| (s, c.cohomology_dims())).collect()
    }

    /// `L[n]`: every part shifted, mixing maps multiplied by `(−1)^n`.
    pub fn shift(&self, n: i32) -> GemComplex {
        GemComplex {
            sites: self.sites.clone(),
            parts: self.parts.iter().map(|(&s, c)| (s, c.shift(n))).collect(),
            mix: self
                .mix
                .iter()
                .map(|(&k, m)| (k, m.iter().map(|(&i, f)| (i - n, f.signed(n as i64))).collect()))
                .collect(),
        }
    }

    /// The restriction `L|Φ` to a set of sites.
    pub fn restrict_to(&self, keep: &BTreeSet<usize>) -> GemComplex {
        GemComplex {
            sites: self.sites.clone(),
            parts: self.parts.iter().filter(|(s, _)| keep.contains(s)).map(|(&s, c)| (s, c.clone())).collect(),
            mix: self
                .mix
                .iter()
                .filter(|((a, b), _)| keep.contains(a) && keep.contains(b))
                .map(|(&k, m)| (k, m.clone()))
                .collect(),
        }
    }

    /// Debug dump: per cone and cohomological degree, graded dimensions and
    /// matrices with entries written as `"a/b"`.
    pub fn to_debug_json(&self) -> Value {
        let cones: Vec<Value> = self
            .parts
            .iter()
            .map(|(&s, c)| {
                let mut terms = Map::new();
                for (&i, v) in c.terms() {
                    let dims: Map<String, Value> = v.dims().iter().map(|(j, d)| (j.to_string(), json!(d))).collect();
                    let d = c.diffs().get(&i).map(hom_json).unwrap_or_else(|| json!({}));
                    terms.insert(i.to_string(), json!({ "dims": dims, "d": d }));
                }
                json!({ "site": s, "rays": self.site_rays(s), "terms": terms })
            })
            .collect();
        let mixing: Vec<Value> = self
            .mix
            .iter()
            .map(|(&(a, b), m)| {
                let maps: Map<String, Value> = m.iter().map(|(i, f)| (i.to_string(), hom_json(f))).collect();
                json!({ "from": a, "to": b, "maps": maps })
            })
            .collect();
        json!({ "cones": cones, "mixing": mixing })
    }

    fn site_rays(&self, s: usize) -> Value {
        if s == self.sites.apex() {
            json!("apex")
        } else {
            json!(self.fan().cone(s).rays)
        }
    }

    fn check_same_sites(&self, other: &GemComplex) -> Result<()> {
        if !Arc::ptr_eq(&self.sites, &other.sites) {
            return Err(Error::SourceTargetMismatch("complexes on different fans".into()));
        }
        Ok(())
    }
}

fn matrix_json(m: &QMatrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|r| Value::Array(m.row(r).iter().map(|x| json!(x.to_fraction_string())).collect()))
            .collect(),
    )
}

fn hom_json(f: &ModHom) -> Value {
    let mut out = Map::new();
    for &j in f.degrees() {
        out.insert(j.to_string(), matrix_json(f.mat_ref(j).unwrap()));
    }
    Value::Object(out)
}

/// A homomorphism of complexes on a fan: components `f(σ/ρ)^i: L(σ)^i → K(ρ)^i`
/// for `σ ≺ ρ`.
#[derive(Clone, Debug, Default)]
pub struct GemHom {
    pub comps: BTreeMap<(usize, usize), BTreeMap<i32, ModHom>>,
}

impl GemHom {
    pub fn comp(&self, a: usize, b: usize, i: i32, src: &GemComplex, tgt: &GemComplex) -> ModHom {
        match self.comps.get(&(a, b)).and_then(|m| m.get(&i)) {
            Some(f) => f.clone(),
            None => ModHom::zero(&src.part(a).term(i), &tgt.part(b).term(i)),
        }
    }

    pub fn is_unmixed(&self) -> bool {
        self.comps.iter().all(|(&(a, b), m)| a == b || m.values().all(ModHom::is_zero))
    }

    /// The diagonal component `f(σ/σ)` as a chain map.
    pub fn diagonal(&self, s: usize) -> ChainMap {
        ChainMap {
            maps: self.comps.get(&(s, s)).cloned().unwrap_or_default(),
        }
    }

    /// `(g·f)(σ/ρ) = Σ_{τ∈F[σ,ρ]} g(τ/ρ)·f(σ/τ)`.
    pub fn then(&self, g: &GemHom, src: &GemComplex, tgt: &GemComplex) -> GemHom {
        let sites = src.sites();
        let mut comps: BTreeMap<(usize, usize), BTreeMap<i32, ModHom>> = BTreeMap::new();
        for &a in src.parts.keys() {
            for b in 0..=sites.apex() {
                if !sites.is_face(a, b) {
                    continue;
                }
                for &i in src.part(a).terms().keys() {
                    let mut total = ModHom::zero(&src.part(a).term(i), &tgt.part(b).term(i));
                    for t in sites.interval(a, b) {
                        let (Some(f), Some(h)) = (
                            self.comps.get(&(a, t)).and_then(|m| m.get(&i)),
                            g.comps.get(&(t, b)).and_then(|m| m.get(&i)),
                        ) else {
                            continue;
                        };
                        total = total.add(&h.after(f));
                    }
                    if !total.is_zero() {
                        comps.entry((a, b)).or_default().insert(i, total);
                    }
                }
            }
        }
        GemHom { comps }
    }

    /// Linearity of each component and `f·d_L = d_K·f`.
    pub fn is_chain_map(&self, src: &GemComplex, tgt: &GemComplex) -> bool {
        let sites = src.sites();
        for (&(a, b), m) in &self.comps {
            if !sites.is_face(a, b) {
                return false;
            }
            for (&i, f) in m {
                let w = tgt.part(b).term(i).restrict(sites.alg(a));
                if !f.is_hom(&src.part(a).term(i), &w) {
                    return false;
                }
            }
        }
        for &a in src.parts.keys() {
            for b in 0..=sites.apex() {
                if !sites.is_face(a, b) {
                    continue;
                }
                let between = sites.interval(a, b);
                for &i in src.part(a).terms().keys() {
                    let mut lhs = ModHom::zero(&src.part(a).term(i), &tgt.part(b).term(i + 1));
                    let mut rhs = lhs.clone();
                    for &t in &between {
                        lhs = lhs.add(&self.comp(t, b, i + 1, src, tgt).after(&src.d(a, t, i)));
                        rhs = rhs.add(&tgt.d(t, b, i).after(&self.comp(a, t, i, src, tgt)));
                    }
                    if lhs != rhs {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// `f(σ/σ)` is a quasi-isomorphism for every `σ`.
    pub fn is_quasi_iso(&self, src: &GemComplex, tgt: &GemComplex) -> Result<bool> {
        src.check_same_sites(tgt)?;
        let sites: BTreeSet<usize> = src.parts.keys().chain(tgt.parts.keys()).copied().collect();
        for s in sites {
            if !mapping_cone(&self.diagonal(s), &src.part(s), &tgt.part(s))?.is_acyclic() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Memoized inductions `L(σ)^i ↦ L(σ)^i_{A(ρ)}` and extended mixing maps.
struct Lift<'a> {
    l: &'a GemComplex,
    cache: BTreeMap<(usize, usize, i32), Arc<Induced>>,
}

impl<'a> Lift<'a> {
    fn new(l: &'a GemComplex) -> Lift<'a> {
        Lift { l, cache: BTreeMap::new() }
    }

    fn ind(&mut self, s: usize, rho: usize, i: i32) -> Arc<Induced> {
        let l = self.l;
        self.cache
            .entry((s, rho, i))
            .or_insert_with(|| {
                let v = l.part(s).term(i);
                Arc::new(induce(&v, l.sites.alg(rho)).expect("face algebra embeds"))
            })
            .clone()
    }

    /// `d(σ/τ)^i_{A(ρ)}`, or `None` when it vanishes.
    fn ext(&mut self, s: usize, t: usize, i: i32, rho: usize) -> Option<ModHom> {
        let f = self.l.d_ref(s, t, i)?.clone();
        let src = self.ind(s, rho, i);
        let tgt = self.ind(t, rho, i + 1);
        let out = if s == t {
            induce_hom(&f, &src, &tgt)
        } else {
            let g = unit_inclusion(&self.l.part(t).term(i + 1), &tgt).after(&f);
            extend_hom(&src, &g, &tgt.module)
        };
        (!out.is_zero()).then_some(out)
    }

    /// The natural inclusion `L(σ)^i_{A(ρ)} → L(σ)^i_{A(μ)}` for `ρ ≺ μ`.
    fn widen(&mut self, s: usize, rho: usize, mu: usize, i: i32) -> ModHom {
        let src = self.ind(s, rho, i);
        let tgt = self.ind(s, mu, i);
        let unit = unit_inclusion(&self.l.part(s).term(i), &tgt);
        extend_hom(&src, &unit, &tgt.module)
    }
}

/// `i_ρ^*(L)` with its block structure.
#[derive(Clone, Debug)]
pub struct Pullback {
    pub complex: GmComplex,
    /// Sites whose induced complexes form the blocks, in order.
    pub blocks: Vec<usize>,
    /// `offsets[b][i][j]`: start of block `b` in bidegree `(i, j)`.
    pub offsets: Vec<BTreeMap<i32, BTreeMap<i32, usize>>>,
}

impl Pullback {
    fn offset_list(&self, i: i32) -> Vec<BTreeMap<i32, usize>> {
        self.offsets.iter().map(|o| o.get(&i).cloned().unwrap_or_default()).collect()
    }
}

fn pullback(lift: &mut Lift, rho: usize, blocks: Vec<usize>) -> Pullback {
    let l = lift.l;
    let alg = l.sites.alg(rho).clone();
    let degrees: BTreeSet<i32> = blocks.iter().flat_map(|&b| l.part(b).terms().keys().copied().collect::<Vec<_>>()).collect();
    let mut terms = BTreeMap::new();
    let mut offsets: Vec<BTreeMap<i32, BTreeMap<i32, usize>>> = vec![BTreeMap::new(); blocks.len()];
    for &i in &degrees {
        let mods: Vec<Arc<Induced>> = blocks.iter().map(|&b| lift.ind(b, rho, i)).collect();
        let refs: Vec<&ExtModule> = mods.iter().map(|x| &x.module).collect();
        let (sum, off) = ExtModule::direct_sum(&alg, &refs);
        for (b, o) in off.into_iter().enumerate() {
            offsets[b].insert(i, o);
        }
        terms.insert(i, sum);
    }
    let mut d = BTreeMap::new();
    for &i in &degrees {
        let Some(next) = terms.get(&(i + 1)) else { continue };
        let mut pieces = Vec::new();
        for (a, &s) in blocks.iter().enumerate() {
            for (b, &t) in blocks.iter().enumerate() {
                if !l.sites.is_face(s, t) {
                    continue;
                }
                if let Some(m) = lift.ext(s, t, i, rho) {
                    pieces.push((a, b, m));
                }
            }
        }
        let src_off: Vec<_> = offsets.iter().map(|o| o[&i].clone()).collect();
        let tgt_off: Vec<_> = offsets.iter().map(|o| o[&(i + 1)].clone()).collect();
        d.insert(
            i,
            assemble_hom(&terms[&i], &src_off, next, &tgt_off, pieces.iter().map(|(a, b, m)| (*a, *b, m))),
        );
    }
    Pullback {
        complex: GmComplex::new(&alg, terms, d),
        blocks,
        offsets,
    }
}

fn nonzero_faces(l: &GemComplex, rho: usize, include_self: bool) -> Vec<usize> {
    l.sites
        .faces(rho)
        .into_iter()
        .filter(|&s| (include_self || s != rho) && l.parts.contains_key(&s))
        .collect()
}

/// `i_ρ^*(L) = ⊕_{σ∈F(ρ)} L(σ)_{A(ρ)}`; at the apex this is `Γ(L)`.
pub fn i_star(l: &GemComplex, rho: usize) -> Result<Pullback> {
    l.sites.check(rho)?;
    Ok(pullback(&mut Lift::new(l), rho, nonzero_faces(l, rho, true)))
}

/// `i_ρ^!(L) = L(ρ)`.
pub fn i_shriek(l: &GemComplex, rho: usize) -> Result<GmComplex> {
    l.sites.check(rho)?;
    Ok(l.part(rho))
}

/// `i_ρ^∘(L)`: the pullback of the restriction to the proper faces of `ρ`.
pub fn i_circ(l: &GemComplex, rho: usize) -> Result<Pullback> {
    l.sites.check(rho)?;
    Ok(pullback(&mut Lift::new(l), rho, nonzero_faces(l, rho, false)))
}

/// `Γ(L) = i_α^*(L)`.
pub fn gamma(l: &GemComplex) -> GmComplex {
    i_star(l, l.sites.apex()).expect("apex is a site").complex
}

fn check_top(l: &GemComplex, pi: usize) -> Result<()> {
    let sites = &l.sites;
    if pi >= sites.apex() {
        return Err(Error::ConeNotInFan(pi));
    }
    let above = sites.fan().cone(pi).cofaces.iter().any(|&t| t != pi && l.parts.contains_key(&t));
    if above {
        return Err(Error::NotMaximal(pi));
    }
    Ok(())
}

/// `j_!`: puts `i_π^∘(L)[−1]` on `π`, with the inclusions as mixing maps, so
/// that `i_π^*` of the result is the mapping cone of an identity.
pub fn j_shriek_extend(l: &GemComplex, pi: usize) -> Result<GemComplex> {
    check_top(l, pi)?;
    if l.parts.contains_key(&pi) || l.mix.keys().any(|&(_, b)| b == pi) {
        return Err(Error::InvalidInput(format!("cone {pi} already carries data")));
    }
    let mut lift = Lift::new(l);
    let circ = pullback(&mut lift, pi, nonzero_faces(l, pi, false));
    let new_part = circ.complex.shift(-1);
    let mut out = l.clone();
    for (b, &s) in circ.blocks.iter().enumerate() {
        let mut m = Mixing::new();
        for (&i, v) in l.part(s).terms() {
            let ind = lift.ind(s, pi, i);
            let unit = unit_inclusion(v, &ind);
            let place = summand_inclusion(&ind.module, &circ.complex.term(i), &circ.offsets[b][&i]);
            m.insert(i, place.after(&unit));
        }
        out.set_mixing(s, pi, m);
    }
    out.set_part(pi, new_part);
    Ok(out)
}

/// `gt_π^{≥k}`: truncates the complex on `π` and composes the mixing maps
/// into `π` with the quotient map.
pub fn gt_pi_ge(k: i32, pi: usize, l: &GemComplex) -> Result<GemComplex> {
    check_top(l, pi)?;
    let old = l.part(pi);
    let (new, proj) = gt_ge(k, &old);
    let mut out = l.clone();
    let into: Vec<(usize, Mixing)> = l
        .mix
        .iter()
        .filter(|((_, b), _)| *b == pi)
        .map(|(&(a, _), m)| (a, m.clone()))
        .collect();
    for (a, m) in into {
        let m = m.into_iter().map(|(i, f)| (i, proj.at(i + 1, &old, &new).after(&f))).collect();
        out.set_mixing(a, pi, m);
    }
    out.set_part(pi, new);
    Ok(out)
}

/// The shallow complex `L̃` and the homomorphism `f_L: L → L̃`.
pub fn shallow_resolve(l: &GemComplex) -> Result<(GemComplex, GemHom)> {
    let sites = l.sites.clone();
    let n = sites.apex();
    let mut lift = Lift::new(l);
    let r = |s: usize| sites.dim(s);

    // For each ρ: blocks (σ, η) with η ≺ σ ≺ ρ, the block in degree i being
    // L(η)^{i + r_σ − r_ρ}_{A(ρ)}.
    type Layout = (Vec<(usize, usize)>, GmComplex, Offsets);
    let mut layouts: BTreeMap<usize, Layout> = BTreeMap::new();
    for rho in 0..n {
        let pairs: Vec<(usize, usize)> = sites
            .faces(rho)
            .into_iter()
            .flat_map(|s| {
                sites.faces(s).into_iter().filter(|e| l.parts.contains_key(e)).map(move |e| (s, e))
            })
            .collect();
        if pairs.is_empty() {
            continue;
        }
        let alg = sites.alg(rho).clone();
        let shift = |(s, _): (usize, usize)| r(s) - r(rho);
        let degrees: BTreeSet<i32> = pairs
            .iter()
            .flat_map(|&p| l.part(p.1).terms().keys().map(|&i| i - shift(p)).collect::<Vec<_>>())
            .collect();
        let mut terms = BTreeMap::new();
        let mut offsets: Vec<BTreeMap<i32, BTreeMap<i32, usize>>> = vec![BTreeMap::new(); pairs.len()];
        for &i in &degrees {
            let mods: Vec<Arc<Induced>> = pairs.iter().map(|&p| lift.ind(p.1, rho, i + shift(p))).collect();
            let refs: Vec<&ExtModule> = mods.iter().map(|x| &x.module).collect();
            let (sum, off) = ExtModule::direct_sum(&alg, &refs);
            for (b, o) in off.into_iter().enumerate() {
                offsets[b].insert(i, o);
            }
            terms.insert(i, sum);
        }
        let index: BTreeMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        let mut d = BTreeMap::new();
        for &i in &degrees {
            let Some(next) = terms.get(&(i + 1)) else { continue };
            let mut pieces: Vec<(usize, usize, ModHom)> = Vec::new();
            for (a, &(s, e)) in pairs.iter().enumerate() {
                let deg = i + r(s) - r(rho);
                let sign_a = Q::from_int(if (r(rho) - r(s)) % 2 == 0 { 1 } else { -1 });
                for z in sites.faces(s) {
                    if !sites.is_face(e, z) {
                        continue;
                    }
                    let Some(&b) = index.get(&(s, z)) else { continue };
                    if let Some(m) = lift.ext(e, z, deg, rho) {
                        pieces.push((a, b, m.scale(&sign_a)));
                    }
                }
                for t in sites.facets(s) {
                    if !sites.is_face(e, t) {
                        continue;
                    }
                    let b = index[&(t, e)];
                    let eps = sites.sign(t, s)? as i64;
                    let sign = if (r(rho) - r(s) - 1) % 2 == 0 { eps } else { -eps };
                    let ind = lift.ind(e, rho, deg);
                    if !ind.module.is_zero() {
                        pieces.push((a, b, ModHom::identity(&ind.module).scale(&Q::from_int(sign))));
                    }
                }
            }
            let src_off: Vec<_> = offsets.iter().map(|o| o.get(&i).cloned().unwrap_or_default()).collect();
            let tgt_off: Vec<_> = offsets.iter().map(|o| o.get(&(i + 1)).cloned().unwrap_or_default()).collect();
            d.insert(
                i,
                assemble_hom(&terms[&i], &src_off, next, &tgt_off, pieces.iter().map(|(a, b, m)| (*a, *b, m))),
            );
        }
        layouts.insert(rho, (pairs, GmComplex::new(&alg, terms, d), offsets));
    }

    let mut out = GemComplex::zero(&sites);
    for (&rho, (_, c, _)) in &layouts {
        out.set_part(rho, c.clone());
    }
    for (&rho, (pairs, c, offs)) in &layouts {
        for &mu in &sites.fan().cone(rho).cofaces {
            if r(mu) != r(rho) + 1 {
                continue;
            }
            let eps = Q::from_int(sites.sign(rho, mu)? as i64);
            let (mu_pairs, mu_c, mu_offs) = &layouts[&mu];
            let mu_index: BTreeMap<(usize, usize), usize> =
                mu_pairs.iter().enumerate().map(|(k, &p)| (p, k)).collect();
            let mut m = Mixing::new();
            for (&i, v) in c.terms() {
                let w = mu_c.term(i + 1);
                let mut pieces = Vec::new();
                for (a, &(s, e)) in pairs.iter().enumerate() {
                    let deg = i + r(s) - r(rho);
                    let b = mu_index[&(s, e)];
                    let f = lift.widen(e, rho, mu, deg);
                    if !f.is_zero() {
                        pieces.push((a, b, f.scale(&eps)));
                    }
                }
                let src_off: Vec<_> = offs.iter().map(|o| o.get(&i).cloned().unwrap_or_default()).collect();
                let tgt_off: Vec<_> = mu_offs.iter().map(|o| o.get(&(i + 1)).cloned().unwrap_or_default()).collect();
                m.insert(i, assemble_hom(v, &src_off, &w, &tgt_off, pieces.iter().map(|(a, b, f)| (*a, *b, f))));
            }
            out.set_mixing(rho, mu, m);
        }
    }

    let mut f = GemHom::default();
    for (&rho, (pairs, c, offs)) in &layouts {
        for (b, &(s, e)) in pairs.iter().enumerate() {
            if s != rho {
                continue;
            }
            let mut comp = BTreeMap::new();
            for (&i, v) in l.part(e).terms() {
                let ind = lift.ind(e, rho, i);
                let unit = unit_inclusion(v, &ind);
                let place = summand_inclusion(&ind.module, &c.term(i), &offs[b][&i]);
                comp.insert(i, place.after(&unit));
            }
            f.comps.insert((e, rho), comp);
        }
    }
    Ok((out, f))
}

/// The left inverse of `J: (X_{A(ρ)})_{A(μ)} ≅ (F(ρ)-blocks of X_μ)` that
/// vanishes on the remaining blocks.
fn block_projection(
    x_rho: &Pullback,
    x_mu: &Pullback,
    i: i32,
    ind: &Induced,
    lift: &mut Lift,
    rho: usize,
    mu: usize,
) -> ModHom {
    let v = x_rho.complex.term(i);
    let w = x_mu.complex.term(i);
    let mut g_pieces = Vec::new();
    for (a, &s) in x_rho.blocks.iter().enumerate() {
        let b = x_mu.blocks.iter().position(|&t| t == s).expect("faces of ρ are faces of μ");
        g_pieces.push((a, b, lift.widen(s, rho, mu, i)));
    }
    let g = assemble_hom(
        &v,
        &x_rho.offset_list(i),
        &w,
        &x_mu.offset_list(i),
        g_pieces.iter().map(|(a, b, f)| (*a, *b, f)),
    );
    let j = extend_hom(ind, &g, &w);
    let mut p = ModHom::zero(&w, &ind.module);
    for (&deg, &dim) in ind.module.dims() {
        let mut rows = Vec::new();
        for (a, &s) in x_rho.blocks.iter().enumerate() {
            let _ = a;
            let b = x_mu.blocks.iter().position(|&t| t == s).unwrap();
            if let Some(&off) = x_mu.offsets[b].get(&i).and_then(|o| o.get(&deg)) {
                let len = lift.ind(s, mu, i).module.dim(deg);
                rows.extend(off..off + len);
            }
        }
        debug_assert_eq!(rows.len(), dim);
        let sq = j.mat(deg).select_rows(&rows);
        let inv = sq.inverse().expect("two-step induction is an isomorphism");
        let mut full = QMatrix::zeros(dim, w.dim(deg));
        for (c, &row) in rows.iter().enumerate() {
            for k in 0..dim {
                full[(k, row)] = inv[(k, c)].clone();
            }
        }
        p.set(deg, full);
    }
    p
}

fn dual_functor(l: &GemComplex, with_apex: bool) -> Result<GemComplex> {
    let sites = l.sites.clone();
    let n = sites.apex();
    let mut lift = Lift::new(l);
    let all: Vec<usize> = if with_apex { (0..=n).collect() } else { (0..n).collect() };
    let mut pulls: BTreeMap<usize, Pullback> = BTreeMap::new();
    for &rho in &all {
        let p = pullback(&mut lift, rho, nonzero_faces(l, rho, true));
        if !p.complex.is_zero() {
            pulls.insert(rho, p);
        }
    }
    let mut out = GemComplex::zero(&sites);
    for (&rho, p) in &pulls {
        out.set_part(rho, p.complex.dual().shift(-sites.dim(rho)));
    }
    for (&rho, x_rho) in &pulls {
        let covers: Vec<usize> = all
            .iter()
            .copied()
            .filter(|&mu| mu != rho && sites.is_face(rho, mu) && sites.dim(mu) == sites.dim(rho) + 1)
            .collect();
        for mu in covers {
            let x_mu = &pulls[&mu];
            let eps = sites.sign(rho, mu)? as i64;
            let mut m = Mixing::new();
            for (&k, v) in x_rho.complex.terms() {
                let (ind, _, phi) = induce_dual_iso(v, sites.alg(mu))?;
                let dv = dualize(v);
                let ind_dual = induce(&dv, sites.alg(mu))?;
                let incl = unit_inclusion(&dv, &ind_dual);
                let p = block_projection(x_rho, x_mu, k, &ind, &mut lift, rho, mu);
                let dp = dualize_hom(&p, sites.alg(mu).dim());
                let map = dp.after(&phi).after(&incl).signed(if eps == 1 { 0 } else { 1 });
                m.insert(sites.dim(rho) - k, map);
            }
            out.set_mixing(rho, mu, m);
        }
    }
    Ok(out)
}

/// `D(L)(ρ) = det(ρ) ⊗ d_ρ(i_ρ^* L)[−r_ρ]`, a shallow complex.
pub fn dualize_d(l: &GemComplex) -> Result<GemComplex> {
    dual_functor(l, false)
}

/// `D̂(L)` on the augmented fan; requires a complete fan.
pub fn dualize_dhat(l: &GemComplex) -> Result<GemComplex> {
    if !l.fan().is_complete() {
        return Err(Error::FanNotComplete);
    }
    dual_functor(l, true)
}

/// `Γ(D̂(L))`, acyclic for every `L` on a complete fan.
pub fn dualize_dhat_gamma(l: &GemComplex) -> Result<GmComplex> {
    Ok(gamma(&dualize_dhat(l)?))
}
