//! Finite complexes of graded exterior modules over a single algebra.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exactq::{decompose, extend_basis, QMatrix};
use crate::extalg::{
    assemble_hom, dualize, dualize_hom, induce, induce_hom, ConeAlgebra, ExtModule, Induced,
    ModHom,
};

/// `(cohomological degree, internal degree) → dimension`, nonzero entries only.
pub type DimTable = BTreeMap<(i32, i32), usize>;

/// Per summand, per degree: internal degree ↦ offset of that summand's block.
pub type Offsets = Vec<BTreeMap<i32, BTreeMap<i32, usize>>>;

#[derive(Clone, Debug)]
pub struct GmComplex {
    alg: Arc<ConeAlgebra>,
    terms: BTreeMap<i32, ExtModule>,
    /// `d[i]: terms[i] → terms[i + 1]`, stored when nonzero.
    d: BTreeMap<i32, ModHom>,
}

/// A degree-preserving map of complexes, one module map per cohomological degree.
#[derive(Clone, Debug, Default)]
pub struct ChainMap {
    pub maps: BTreeMap<i32, ModHom>,
}

impl ChainMap {
    pub fn identity(c: &GmComplex) -> ChainMap {
        ChainMap {
            maps: c.terms.iter().map(|(&i, v)| (i, ModHom::identity(v))).collect(),
        }
    }

    /// The component in degree `i`, zero if absent.
    pub fn at(&self, i: i32, src: &GmComplex, tgt: &GmComplex) -> ModHom {
        match self.maps.get(&i) {
            Some(f) => f.clone(),
            None => ModHom::zero(&src.term(i), &tgt.term(i)),
        }
    }

    /// `self ∘ f`.
    pub fn after(&self, f: &ChainMap, src: &GmComplex, mid: &GmComplex, tgt: &GmComplex) -> ChainMap {
        let degrees: BTreeSet<i32> = src.terms.keys().copied().collect();
        ChainMap {
            maps: degrees
                .into_iter()
                .map(|i| (i, self.at(i, mid, tgt).after(&f.at(i, src, mid))))
                .filter(|(_, m)| !m.is_zero())
                .collect(),
        }
    }

    pub fn is_chain_map(&self, src: &GmComplex, tgt: &GmComplex) -> bool {
        let degrees: BTreeSet<i32> = src.terms.keys().chain(tgt.terms.keys()).copied().collect();
        degrees.into_iter().all(|i| {
            let f = self.at(i, src, tgt);
            let f1 = self.at(i + 1, src, tgt);
            f.is_hom(&src.term(i), &tgt.term(i))
                && f1.after(&src.diff(i)) == tgt.diff(i).after(&f)
        })
    }
}

impl GmComplex {
    pub fn zero(alg: &Arc<ConeAlgebra>) -> GmComplex {
        GmComplex {
            alg: alg.clone(),
            terms: BTreeMap::new(),
            d: BTreeMap::new(),
        }
    }

    /// A single module placed in cohomological degree `i`.
    pub fn concentrated(v: ExtModule, i: i32) -> GmComplex {
        let mut c = GmComplex::zero(v.alg());
        if !v.is_zero() {
            c.terms.insert(i, v);
        }
        c
    }

    /// Assembles a complex, dropping zero terms and zero differentials.
    pub fn new(alg: &Arc<ConeAlgebra>, terms: BTreeMap<i32, ExtModule>, d: BTreeMap<i32, ModHom>) -> GmComplex {
        let terms: BTreeMap<i32, ExtModule> = terms.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        let d = d
            .into_iter()
            .filter(|(i, f)| terms.contains_key(i) && terms.contains_key(&(i + 1)) && !f.is_zero())
            .collect();
        GmComplex {
            alg: alg.clone(),
            terms,
            d,
        }
    }

    pub fn alg(&self) -> &Arc<ConeAlgebra> {
        &self.alg
    }

    pub fn terms(&self) -> &BTreeMap<i32, ExtModule> {
        &self.terms
    }

    pub fn diffs(&self) -> &BTreeMap<i32, ModHom> {
        &self.d
    }

    pub fn term(&self, i: i32) -> ExtModule {
        self.terms.get(&i).cloned().unwrap_or_else(|| ExtModule::zero(&self.alg))
    }

    pub fn term_ref(&self, i: i32) -> Option<&ExtModule> {
        self.terms.get(&i)
    }

    pub fn diff(&self, i: i32) -> ModHom {
        match self.d.get(&i) {
            Some(f) => f.clone(),
            None => ModHom::zero(&self.term(i), &self.term(i + 1)),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn term_dim(&self, i: i32, j: i32) -> usize {
        self.terms.get(&i).map_or(0, |v| v.dim(j))
    }

    /// Graded dimensions of the terms themselves.
    pub fn dim_table(&self) -> DimTable {
        self.terms
            .iter()
            .flat_map(|(&i, v)| v.dims().iter().map(move |(&j, &d)| ((i, j), d)))
            .collect()
    }

    /// Checks `d² = 0` and that every differential is a module map.
    pub fn is_valid(&self) -> bool {
        self.terms.keys().all(|&i| {
            self.diff(i).is_hom(&self.term(i), &self.term(i + 1))
                && self.diff(i + 1).after(&self.diff(i)).is_zero()
        })
    }

    /// `dim H^i(C)_j` for every bidegree with nonzero cohomology.
    pub fn cohomology_dims(&self) -> DimTable {
        let mut ranks: BTreeMap<(i32, i32), usize> = BTreeMap::new();
        let jobs: Vec<(i32, i32, &QMatrix)> = self
            .d
            .iter()
            .flat_map(|(&i, f)| f.degrees().map(move |&j| (i, j, f.mat_ref(j).unwrap())))
            .collect();
        let computed: Vec<((i32, i32), usize)> = jobs.par_iter().map(|&(i, j, m)| ((i, j), m.rank())).collect();
        ranks.extend(computed);
        let rank = |i: i32, j: i32| ranks.get(&(i, j)).copied().unwrap_or(0);
        self.dim_table()
            .into_iter()
            .map(|((i, j), d)| ((i, j), d - rank(i, j) - rank(i - 1, j)))
            .filter(|&(_, h)| h > 0)
            .collect()
    }

    pub fn is_acyclic(&self) -> bool {
        self.cohomology_dims().is_empty()
    }

    /// `C[n]^i = C^{i+n}` with differential `(−1)^n d`.
    pub fn shift(&self, n: i32) -> GmComplex {
        GmComplex {
            alg: self.alg.clone(),
            terms: self.terms.iter().map(|(&i, v)| (i - n, v.clone())).collect(),
            d: self.d.iter().map(|(&i, f)| (i - n, f.signed(n as i64))).collect(),
        }
    }

    pub fn direct_sum(alg: &Arc<ConeAlgebra>, parts: &[&GmComplex]) -> (GmComplex, Offsets) {
        let degrees: BTreeSet<i32> = parts.iter().flat_map(|c| c.terms.keys().copied()).collect();
        let mut terms = BTreeMap::new();
        let mut offsets: Vec<BTreeMap<i32, BTreeMap<i32, usize>>> = vec![BTreeMap::new(); parts.len()];
        for &i in &degrees {
            let mods: Vec<ExtModule> = parts.iter().map(|c| c.term(i)).collect();
            let refs: Vec<&ExtModule> = mods.iter().collect();
            let (sum, off) = ExtModule::direct_sum(alg, &refs);
            for (p, o) in off.into_iter().enumerate() {
                offsets[p].insert(i, o);
            }
            terms.insert(i, sum);
        }
        let mut d = BTreeMap::new();
        for &i in &degrees {
            let Some(next) = terms.get(&(i + 1)) else { continue };
            let diffs: Vec<ModHom> = parts.iter().map(|c| c.diff(i)).collect();
            let f = assemble_hom(
                &terms[&i],
                &offsets.iter().map(|o| o[&i].clone()).collect::<Vec<_>>(),
                next,
                &offsets.iter().map(|o| o[&(i + 1)].clone()).collect::<Vec<_>>(),
                diffs.iter().enumerate().map(|(p, f)| (p, p, f)),
            );
            d.insert(i, f);
        }
        (GmComplex::new(alg, terms, d), offsets)
    }

    /// Induces every term along `A(σ) ⊂ A(ρ)`.
    pub fn induce(&self, target: &Arc<ConeAlgebra>) -> Result<(GmComplex, BTreeMap<i32, Induced>)> {
        let mut ind = BTreeMap::new();
        for (&i, v) in &self.terms {
            ind.insert(i, induce(v, target)?);
        }
        let mut d = BTreeMap::new();
        for (&i, f) in &self.d {
            d.insert(i, induce_hom(f, &ind[&i], &ind[&(i + 1)]));
        }
        let terms = ind.iter().map(|(&i, x)| (i, x.module.clone())).collect();
        Ok((GmComplex::new(target, terms, d), ind))
    }

    /// The dual complex `d(C)^i = d(C^{−i})`, `d^i = (−1)^{i+1} d(d^{−i−1})`.
    pub fn dual(&self) -> GmComplex {
        let k = self.alg.dim();
        let terms = self.terms.iter().map(|(&i, v)| (-i, dualize(v))).collect();
        let d = self
            .d
            .iter()
            .map(|(&i, f)| {
                let di = -i - 1;
                (di, dualize_hom(f, k).signed(di as i64 + 1))
            })
            .collect();
        GmComplex::new(&self.alg, terms, d)
    }

    /// Restricts scalars to a subalgebra.
    pub fn restrict(&self, sub: &Arc<ConeAlgebra>) -> GmComplex {
        GmComplex::new(
            sub,
            self.terms.iter().map(|(&i, v)| (i, v.restrict(sub))).collect(),
            self.d.clone(),
        )
    }

    /// Euler characteristic `Σ_i (−1)^i dim C^i_j` for each internal degree `j`.
    pub fn euler(table: &DimTable) -> BTreeMap<i32, i64> {
        let mut out: BTreeMap<i32, i64> = BTreeMap::new();
        for (&(i, j), &d) in table {
            *out.entry(j).or_insert(0) += if i.rem_euclid(2) == 0 { d as i64 } else { -(d as i64) };
        }
        out.retain(|_, v| *v != 0);
        out
    }

    fn check_same_alg(&self, other: &GmComplex) -> Result<()> {
        if *self.alg != *other.alg {
            return Err(Error::SourceTargetMismatch("complexes over different algebras".into()));
        }
        Ok(())
    }
}

/// `cone(f)^i = L^{i+1} ⊕ K^i`, `d = [[−d_L, 0], [f, d_K]]` for `f: L → K`.
pub fn mapping_cone(f: &ChainMap, l: &GmComplex, k: &GmComplex) -> Result<GmComplex> {
    l.check_same_alg(k)?;
    for (i, m) in &f.maps {
        if m.src_dims() != l.term(*i).dims() || m.tgt_dims() != k.term(*i).dims() {
            return Err(Error::SourceTargetMismatch(format!("chain map component {i} has wrong shape")));
        }
    }
    let alg = &l.alg;
    let degrees: BTreeSet<i32> = l.terms.keys().map(|i| i - 1).chain(k.terms.keys().copied()).collect();
    let mut terms = BTreeMap::new();
    let mut offs = BTreeMap::new();
    for &i in &degrees {
        let (a, b) = (l.term(i + 1), k.term(i));
        let (sum, off) = ExtModule::direct_sum(alg, &[&a, &b]);
        terms.insert(i, sum);
        offs.insert(i, off);
    }
    let mut d = BTreeMap::new();
    for &i in &degrees {
        let Some(next) = terms.get(&(i + 1)) else { continue };
        let neg_dl = l.diff(i + 1).neg();
        let fi = f.at(i + 1, l, k);
        let dk = k.diff(i);
        let m = assemble_hom(
            &terms[&i],
            &offs[&i],
            next,
            &offs[&(i + 1)],
            [(0, 0, &neg_dl), (0, 1, &fi), (1, 1, &dk)],
        );
        d.insert(i, m);
    }
    Ok(GmComplex::new(alg, terms, d))
}

pub fn is_quasi_iso(f: &ChainMap, l: &GmComplex, k: &GmComplex) -> Result<bool> {
    Ok(mapping_cone(f, l, k)?.is_acyclic())
}

/// Subspace bases (columns) per bidegree; missing entries mean zero.
type Subspaces = BTreeMap<(i32, i32), QMatrix>;

struct Split {
    /// Left inverse on the subspace (rows = sub dimension).
    left: QMatrix,
    /// Complement basis columns.
    complement: QMatrix,
    /// Projection onto complement coordinates.
    proj: QMatrix,
    sub: QMatrix,
}

fn split(sub: &QMatrix, n: usize) -> Split {
    let complement = extend_basis(sub, n).expect("independent subspace basis");
    let inv = sub.hstack(&complement).inverse().expect("basis");
    let u = sub.cols();
    Split {
        left: inv.block(0, u, 0, n),
        proj: inv.block(u, n - u, 0, n),
        complement,
        sub: sub.clone(),
    }
}

fn splits(c: &GmComplex, u: &Subspaces) -> BTreeMap<(i32, i32), Split> {
    c.dim_table()
        .into_keys()
        .map(|(i, j)| {
            let n = c.term_dim(i, j);
            let sub = u.get(&(i, j)).cloned().unwrap_or_else(|| QMatrix::zeros(n, 0));
            ((i, j), split(&sub, n))
        })
        .collect()
}

fn materialize(c: &GmComplex, u: &Subspaces, quotient: bool) -> (GmComplex, ChainMap) {
    let sp = splits(c, u);
    let basis = |s: &Split| if quotient { s.complement.clone() } else { s.sub.clone() };
    let coord = |s: &Split| if quotient { s.proj.clone() } else { s.left.clone() };
    let alg = &c.alg;
    let mut terms = BTreeMap::new();
    for (&i, v) in &c.terms {
        let dims: BTreeMap<i32, usize> = v.dims().keys().map(|&j| (j, basis(&sp[&(i, j)]).cols())).collect();
        let mut act = vec![BTreeMap::new(); alg.dim()];
        for (t, fam) in act.iter_mut().enumerate() {
            for &j in v.dims().keys() {
                let (Some(src), Some(dst)) = (sp.get(&(i, j)), sp.get(&(i, j - 1))) else { continue };
                let Some(a) = v.act_ref(t, j) else { continue };
                fam.insert(j, coord(dst).mul(a).mul(&basis(src)));
            }
        }
        terms.insert(i, ExtModule::from_parts(alg, dims, act));
    }
    let mut d = BTreeMap::new();
    for (&i, f) in &c.d {
        let (src_mod, dst_mod) = (&terms[&i], &terms[&(i + 1)]);
        let mut g = ModHom::zero(src_mod, dst_mod);
        for &j in f.degrees() {
            let (Some(s), Some(t)) = (sp.get(&(i, j)), sp.get(&(i + 1, j))) else { continue };
            if basis(s).cols() == 0 || basis(t).cols() == 0 {
                continue;
            }
            g.set(j, coord(t).mul(f.mat_ref(j).unwrap()).mul(&basis(s)));
        }
        d.insert(i, g);
    }
    let out = GmComplex::new(alg, terms, d);
    let mut maps = BTreeMap::new();
    for (&i, v) in &c.terms {
        let w = out.term(i);
        let mut m = if quotient { ModHom::zero(v, &w) } else { ModHom::zero(&w, v) };
        for &j in v.dims().keys() {
            let s = &sp[&(i, j)];
            let b = basis(s);
            if b.cols() == 0 {
                continue;
            }
            m.set(j, if quotient { s.proj.clone() } else { b });
        }
        if !m.is_zero() {
            maps.insert(i, m);
        }
    }
    (out, ChainMap { maps })
}

/// Sub-complex spanned by the given subspaces, with its inclusion.
pub fn sub_complex(c: &GmComplex, u: &Subspaces) -> (GmComplex, ChainMap) {
    materialize(c, u, false)
}

/// Quotient by the given sub-complex, with the projection.
pub fn quotient_complex(c: &GmComplex, u: &Subspaces) -> (GmComplex, ChainMap) {
    materialize(c, u, true)
}

fn kernel_basis(c: &GmComplex, i: i32, j: i32) -> QMatrix {
    let n = c.term_dim(i, j);
    match c.d.get(&i).and_then(|f| f.mat_ref(j)) {
        Some(m) => decompose(m).kernel,
        None => QMatrix::identity(n),
    }
}

fn image_basis(c: &GmComplex, i: i32, j: i32) -> QMatrix {
    let n = c.term_dim(i, j);
    match c.d.get(&(i - 1)).and_then(|f| f.mat_ref(j)) {
        Some(m) => decompose(m).image,
        None => QMatrix::zeros(n, 0),
    }
}

fn truncation_subspaces(c: &GmComplex, k: i32, tilde: bool) -> Subspaces {
    c.dim_table()
        .into_keys()
        .filter_map(|(i, j)| {
            let n = c.term_dim(i, j);
            let s = i + j;
            let u = if !tilde {
                match s.cmp(&k) {
                    std::cmp::Ordering::Less => QMatrix::identity(n),
                    std::cmp::Ordering::Equal => kernel_basis(c, i, j),
                    std::cmp::Ordering::Greater => return None,
                }
            } else if s <= k {
                QMatrix::identity(n)
            } else if s == k + 1 {
                image_basis(c, i, j)
            } else {
                return None;
            };
            Some(((i, j), u))
        })
        .collect()
}

/// `gt_{≤k}`: keeps `i+j < k`, the cocycles at `i+j = k`, nothing above.
pub fn gt_le(k: i32, c: &GmComplex) -> (GmComplex, ChainMap) {
    sub_complex(c, &truncation_subspaces(c, k, false))
}

/// `g̃t_{≤k}`: keeps `i+j ≤ k` and the coboundaries at `i+j = k+1`.
pub fn tgt_le(k: i32, c: &GmComplex) -> (GmComplex, ChainMap) {
    sub_complex(c, &truncation_subspaces(c, k, true))
}

/// `gt^{≥k} = C / g̃t_{≤k−1}`, with the projection.
pub fn gt_ge(k: i32, c: &GmComplex) -> (GmComplex, ChainMap) {
    quotient_complex(c, &truncation_subspaces(c, k - 1, true))
}

/// `g̃t^{≥k} = C / gt_{≤k−1}`, with the projection.
pub fn tgt_ge(k: i32, c: &GmComplex) -> (GmComplex, ChainMap) {
    quotient_complex(c, &truncation_subspaces(c, k - 1, false))
}

/// Restricts a table to bidegrees satisfying `keep(i + j)`.
pub fn filter_total(t: &DimTable, keep: impl Fn(i32) -> bool) -> DimTable {
    t.iter().filter(|(&(i, j), _)| keep(i + j)).map(|(&k, &v)| (k, v)).collect()
}
