//! Graded modules over exterior algebras of cone lattices.
//!
//! The algebra `A(σ)` is generated in degree −1 by the canonical lattice basis
//! of the cone, so a module is presented by its graded dimensions and one
//! family of action matrices per generator.

use std::collections::BTreeMap;
use std::sync::Arc;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::exactq::{extend_basis, QMatrix, Q};
use crate::fan::Fan;

/// `A(σ) = ⋀ N(σ)_Q`, embedded in `⋀ N_Q` through an integer basis.
#[derive(Debug)]
pub struct ConeAlgebra {
    /// The cone (or apex) this algebra belongs to; used in error reports.
    pub id: usize,
    basis: QMatrix,
    coord_map: QMatrix,
}

impl PartialEq for ConeAlgebra {
    fn eq(&self, other: &ConeAlgebra) -> bool {
        self.basis == other.basis
    }
}

impl ConeAlgebra {
    /// `basis` must have independent columns.
    pub fn new(id: usize, basis: QMatrix) -> Arc<ConeAlgebra> {
        let coord_map = if basis.cols() == 0 {
            QMatrix::zeros(0, basis.rows())
        } else {
            let bt = basis.transpose();
            bt.mul(&basis).inverse().expect("independent basis").mul(&bt)
        };
        Arc::new(ConeAlgebra { id, basis, coord_map })
    }

    pub fn for_cone(fan: &Fan, id: usize) -> Arc<ConeAlgebra> {
        ConeAlgebra::new(id, fan.cone(id).basis.clone())
    }

    /// The whole algebra `A = ⋀ N_Q`.
    pub fn full(id: usize, rank: usize) -> Arc<ConeAlgebra> {
        ConeAlgebra::new(id, QMatrix::identity(rank))
    }

    /// Number of degree −1 generators.
    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn ambient(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &QMatrix {
        &self.basis
    }

    pub fn generator(&self, t: usize) -> Vec<Q> {
        self.basis.col(t)
    }

    pub fn coords(&self, v: &[Q]) -> Option<Vec<Q>> {
        let c = self.coord_map.mul_vec(v);
        (self.basis.mul_vec(&c) == v).then_some(c)
    }

    pub fn coords_of_cols(&self, m: &QMatrix) -> Option<QMatrix> {
        let c = self.coord_map.mul(m);
        (self.basis.mul(&c) == *m).then_some(c)
    }

    pub fn contains(&self, other: &ConeAlgebra) -> bool {
        self.coords_of_cols(&other.basis).is_some()
    }
}

/// A finite-dimensional graded left module over a [`ConeAlgebra`].
#[derive(Clone, Debug)]
pub struct ExtModule {
    alg: Arc<ConeAlgebra>,
    dims: BTreeMap<i32, usize>,
    /// `act[t][j]`: multiplication by generator `t`, from degree `j` to `j − 1`.
    act: Vec<BTreeMap<i32, QMatrix>>,
}

fn nonzero_dims(dims: BTreeMap<i32, usize>) -> BTreeMap<i32, usize> {
    dims.into_iter().filter(|&(_, d)| d > 0).collect()
}

impl ExtModule {
    pub fn zero(alg: &Arc<ConeAlgebra>) -> ExtModule {
        ExtModule {
            alg: alg.clone(),
            dims: BTreeMap::new(),
            act: vec![BTreeMap::new(); alg.dim()],
        }
    }

    /// Builds a module from raw action matrices, dropping zero blocks.
    pub fn from_parts(
        alg: &Arc<ConeAlgebra>,
        dims: BTreeMap<i32, usize>,
        act: Vec<BTreeMap<i32, QMatrix>>,
    ) -> ExtModule {
        assert_eq!(act.len(), alg.dim(), "one action family per generator");
        let dims = nonzero_dims(dims);
        let act = act
            .into_iter()
            .map(|fam| {
                fam.into_iter()
                    .filter(|(j, m)| {
                        let (src, dst) = (dims.get(j).copied().unwrap_or(0), dims.get(&(j - 1)).copied().unwrap_or(0));
                        if src == 0 || dst == 0 {
                            return false;
                        }
                        assert_eq!((m.rows(), m.cols()), (dst, src), "action block has wrong shape");
                        !m.is_zero()
                    })
                    .collect()
            })
            .collect();
        ExtModule {
            alg: alg.clone(),
            dims,
            act,
        }
    }

    /// `Q` in degree `deg`, annihilated by every generator.
    pub fn trivial(alg: &Arc<ConeAlgebra>, deg: i32) -> ExtModule {
        let mut m = ExtModule::zero(alg);
        m.dims.insert(deg, 1);
        m
    }

    /// `Det(σ)_Q`: one dimension in degree `−dim A(σ)`.
    pub fn det(alg: &Arc<ConeAlgebra>) -> ExtModule {
        ExtModule::trivial(alg, -(alg.dim() as i32))
    }

    /// `A(σ)` as a module over itself, with monomials in lexicographic order.
    pub fn free(alg: &Arc<ConeAlgebra>) -> ExtModule {
        let k = alg.dim();
        let monomials: Vec<Vec<u32>> = (0..=k)
            .map(|s| (0..k).combinations(s).map(|c| vec![mask_of(&c)]).concat())
            .collect();
        let index = |s: usize, mask: u32| monomials[s].iter().position(|&m| m == mask).unwrap();
        let dims = (0..=k).map(|s| (-(s as i32), monomials[s].len())).collect();
        let mut act = vec![BTreeMap::new(); k];
        for (t, fam) in act.iter_mut().enumerate() {
            for s in 0..k {
                let mut m = QMatrix::zeros(monomials[s + 1].len(), monomials[s].len());
                for (col, &mask) in monomials[s].iter().enumerate() {
                    if mask >> t & 1 == 1 {
                        continue;
                    }
                    let row = index(s + 1, mask | 1 << t);
                    m[(row, col)] = Q::from_int(insertion_sign(t, mask));
                }
                fam.insert(-(s as i32), m);
            }
        }
        ExtModule::from_parts(alg, dims, act)
    }

    pub fn alg(&self) -> &Arc<ConeAlgebra> {
        &self.alg
    }

    pub fn dims(&self) -> &BTreeMap<i32, usize> {
        &self.dims
    }

    pub fn dim(&self, j: i32) -> usize {
        self.dims.get(&j).copied().unwrap_or(0)
    }

    pub fn total_dim(&self) -> usize {
        self.dims.values().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.dims.is_empty()
    }

    /// Generator `t` acting from degree `j`.
    pub fn act(&self, t: usize, j: i32) -> QMatrix {
        match self.act[t].get(&j) {
            Some(m) => m.clone(),
            None => QMatrix::zeros(self.dim(j - 1), self.dim(j)),
        }
    }

    pub fn act_ref(&self, t: usize, j: i32) -> Option<&QMatrix> {
        self.act[t].get(&j)
    }

    /// Left multiplication from degree `j` by a degree −1 element given by
    /// its coordinates in the algebra's generators.
    pub fn act_coords(&self, c: &[Q], j: i32) -> QMatrix {
        let mut out = QMatrix::zeros(self.dim(j - 1), self.dim(j));
        for (t, x) in c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            if let Some(m) = self.act[t].get(&j) {
                out = out.add(&m.scale(x));
            }
        }
        out
    }

    /// Left multiplication by the ambient lattice vector `n ∈ N(σ)_Q`.
    pub fn act_vec(&self, n: &[Q], j: i32) -> QMatrix {
        let c = self.alg.coords(n).expect("vector outside the algebra's span");
        self.act_coords(&c, j)
    }

    /// Right multiplication by `n`, `x·n = (−1)^j n·x` for `x` of degree `j`.
    pub fn right_act_vec(&self, n: &[Q], j: i32) -> QMatrix {
        self.act_vec(n, j).signed(j as i64)
    }

    /// The same module with every internal degree raised by `n`.
    pub fn twist(&self, n: i32) -> ExtModule {
        ExtModule {
            alg: self.alg.clone(),
            dims: self.dims.iter().map(|(&j, &d)| (j + n, d)).collect(),
            act: self
                .act
                .iter()
                .map(|fam| fam.iter().map(|(&j, m)| (j + n, m.clone())).collect())
                .collect(),
        }
    }

    /// Checks `x_t² = 0` and `x_s x_t = −x_t x_s`.
    pub fn check_axioms(&self) -> bool {
        let k = self.alg.dim();
        for &j in self.dims.keys() {
            for s in 0..k {
                for t in s..k {
                    let st = self.act(s, j - 1).mul(&self.act(t, j));
                    let ts = self.act(t, j - 1).mul(&self.act(s, j));
                    if !st.add(&ts).is_zero() {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Restricts scalars to a subalgebra.
    pub fn restrict(&self, sub: &Arc<ConeAlgebra>) -> ExtModule {
        let k = sub.dim();
        let mut act = vec![BTreeMap::new(); k];
        for (t, fam) in act.iter_mut().enumerate() {
            let g = sub.generator(t);
            for &j in self.dims.keys() {
                fam.insert(j, self.act_vec(&g, j));
            }
        }
        ExtModule::from_parts(sub, self.dims.clone(), act)
    }

    /// The direct sum of `parts`, in order; block `p` of degree `j` starts at
    /// `offsets[p][j]`.
    pub fn direct_sum(alg: &Arc<ConeAlgebra>, parts: &[&ExtModule]) -> (ExtModule, Vec<BTreeMap<i32, usize>>) {
        let mut dims: BTreeMap<i32, usize> = BTreeMap::new();
        let mut offsets = Vec::with_capacity(parts.len());
        for p in parts {
            assert!(*p.alg == **alg, "direct sum over different algebras");
            let mut off = BTreeMap::new();
            for (&j, &d) in &p.dims {
                let e = dims.entry(j).or_insert(0);
                off.insert(j, *e);
                *e += d;
            }
            offsets.push(off);
        }
        let mut act = vec![BTreeMap::new(); alg.dim()];
        for (t, fam) in act.iter_mut().enumerate() {
            for (&j, &d) in &dims {
                let below = dims.get(&(j - 1)).copied().unwrap_or(0);
                if below == 0 {
                    continue;
                }
                let mut m = QMatrix::zeros(below, d);
                for (p, off) in parts.iter().zip(&offsets) {
                    if let Some(a) = p.act[t].get(&j) {
                        m.set_block(off[&(j - 1)], off[&j], a);
                    }
                }
                fam.insert(j, m);
            }
        }
        (ExtModule::from_parts(alg, dims, act), offsets)
    }
}

/// Builds a map between direct sums from blocks `(source part, target part, map)`;
/// blocks sharing a position are added.
pub fn assemble_hom<'a>(
    src: &ExtModule,
    src_off: &[BTreeMap<i32, usize>],
    tgt: &ExtModule,
    tgt_off: &[BTreeMap<i32, usize>],
    blocks: impl IntoIterator<Item = (usize, usize, &'a ModHom)>,
) -> ModHom {
    let mut acc: BTreeMap<i32, QMatrix> = BTreeMap::new();
    for (a, b, f) in blocks {
        for (&j, m) in &f.map {
            let full = acc.entry(j).or_insert_with(|| QMatrix::zeros(tgt.dim(j), src.dim(j)));
            full.add_block(tgt_off[b][&j], src_off[a][&j], m);
        }
    }
    let mut out = ModHom::zero(src, tgt);
    for (j, m) in acc {
        out.set(j, m);
    }
    out
}

/// Inclusion of part `p` into a direct sum.
pub fn summand_inclusion(part: &ExtModule, sum: &ExtModule, off: &BTreeMap<i32, usize>) -> ModHom {
    let mut out = ModHom::zero(part, sum);
    for (&j, &d) in part.dims() {
        let mut m = QMatrix::zeros(sum.dim(j), d);
        m.set_block(off[&j], 0, &QMatrix::identity(d));
        out.set(j, m);
    }
    out
}

/// Projection of a direct sum onto part `p`.
pub fn summand_projection(sum: &ExtModule, part: &ExtModule, off: &BTreeMap<i32, usize>) -> ModHom {
    let mut out = ModHom::zero(sum, part);
    for (&j, &d) in part.dims() {
        let mut m = QMatrix::zeros(d, sum.dim(j));
        m.set_block(0, off[&j], &QMatrix::identity(d));
        out.set(j, m);
    }
    out
}

fn mask_of(idx: &[usize]) -> u32 {
    idx.iter().fold(0, |m, &i| m | 1 << i)
}

/// Sign of `x_t ∧ x_S = ± x_{S ∪ t}` for a lexicographically ordered monomial.
fn insertion_sign(t: usize, mask: u32) -> i64 {
    if (mask & ((1u32 << t) - 1)).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// A degree-zero map between graded modules, stored per degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModHom {
    src: BTreeMap<i32, usize>,
    tgt: BTreeMap<i32, usize>,
    map: BTreeMap<i32, QMatrix>,
}

impl ModHom {
    pub fn zero(src: &ExtModule, tgt: &ExtModule) -> ModHom {
        ModHom::zero_dims(src.dims.clone(), tgt.dims.clone())
    }

    pub fn zero_dims(src: BTreeMap<i32, usize>, tgt: BTreeMap<i32, usize>) -> ModHom {
        ModHom {
            src,
            tgt,
            map: BTreeMap::new(),
        }
    }

    pub fn identity(v: &ExtModule) -> ModHom {
        ModHom::scalar(v, Q::one())
    }

    pub fn scalar(v: &ExtModule, c: Q) -> ModHom {
        let mut f = ModHom::zero(v, v);
        for (&j, &d) in &v.dims {
            f.set(j, QMatrix::scalar(d, c.clone()));
        }
        f
    }

    pub fn src_dims(&self) -> &BTreeMap<i32, usize> {
        &self.src
    }

    pub fn tgt_dims(&self) -> &BTreeMap<i32, usize> {
        &self.tgt
    }

    fn src_dim(&self, j: i32) -> usize {
        self.src.get(&j).copied().unwrap_or(0)
    }

    fn tgt_dim(&self, j: i32) -> usize {
        self.tgt.get(&j).copied().unwrap_or(0)
    }

    /// The matrix in degree `j` (zero if not stored).
    pub fn mat(&self, j: i32) -> QMatrix {
        match self.map.get(&j) {
            Some(m) => m.clone(),
            None => QMatrix::zeros(self.tgt_dim(j), self.src_dim(j)),
        }
    }

    pub fn mat_ref(&self, j: i32) -> Option<&QMatrix> {
        self.map.get(&j)
    }

    pub fn set(&mut self, j: i32, m: QMatrix) {
        assert_eq!((m.rows(), m.cols()), (self.tgt_dim(j), self.src_dim(j)), "hom block has wrong shape");
        if m.is_zero() {
            self.map.remove(&j);
        } else {
            self.map.insert(j, m);
        }
    }

    pub fn add_to(&mut self, j: i32, m: &QMatrix) {
        let cur = self.mat(j);
        self.set(j, cur.add(m));
    }

    pub fn is_zero(&self) -> bool {
        self.map.is_empty()
    }

    pub fn degrees(&self) -> impl Iterator<Item = &i32> {
        self.map.keys()
    }

    /// `self ∘ f`.
    pub fn after(&self, f: &ModHom) -> ModHom {
        assert_eq!(f.tgt, self.src, "composition of incompatible maps");
        let mut out = ModHom::zero_dims(f.src.clone(), self.tgt.clone());
        for (j, a) in &f.map {
            if let Some(b) = self.map.get(j) {
                out.set(*j, b.mul(a));
            }
        }
        out
    }

    pub fn add(&self, other: &ModHom) -> ModHom {
        assert_eq!((&self.src, &self.tgt), (&other.src, &other.tgt), "sum of incompatible maps");
        let mut out = self.clone();
        for (j, m) in &other.map {
            out.add_to(*j, m);
        }
        out
    }

    pub fn scale(&self, c: &Q) -> ModHom {
        let mut out = ModHom::zero_dims(self.src.clone(), self.tgt.clone());
        for (j, m) in &self.map {
            out.set(*j, m.scale(c));
        }
        out
    }

    pub fn neg(&self) -> ModHom {
        self.scale(&-Q::one())
    }

    pub fn signed(&self, k: i64) -> ModHom {
        if k.rem_euclid(2) == 0 {
            self.clone()
        } else {
            self.neg()
        }
    }

    /// Checks `f ∘ x_t = x_t ∘ f` for the generators of `v`'s algebra.
    pub fn is_hom(&self, v: &ExtModule, w: &ExtModule) -> bool {
        if self.src != v.dims || self.tgt != w.dims {
            return false;
        }
        for t in 0..v.alg.dim() {
            let g = v.alg.generator(t);
            for &j in v.dims.keys() {
                let lhs = self.mat(j - 1).mul(&v.act(t, j));
                let rhs = w.act_vec(&g, j).mul(&self.mat(j));
                if lhs != rhs {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_iso(&self) -> bool {
        self.src == self.tgt
            && self.src.iter().all(|(&j, &d)| {
                let m = self.mat(j);
                m.rows() == d && m.rank() == d
            })
    }

    pub fn inverse(&self) -> Option<ModHom> {
        let mut out = ModHom::zero_dims(self.tgt.clone(), self.src.clone());
        for &j in self.src.keys() {
            out.set(j, self.mat(j).inverse()?);
        }
        Some(out)
    }

    pub fn transpose_dims(&self) -> (BTreeMap<i32, usize>, BTreeMap<i32, usize>) {
        (self.tgt.clone(), self.src.clone())
    }
}

/// Bookkeeping for `V_{A(ρ)} = V ⊗ ⋀H`: which block holds `V_p ⊗ h_S`.
#[derive(Clone, Debug)]
pub struct InduceLayout {
    /// Ambient vectors spanning the complement `H`.
    pub h: Vec<Vec<Q>>,
    /// `det[σ basis | H]` in ρ-coordinates.
    pub det: Q,
    /// `(p, S)` → offset of the block `V_p ⊗ h_S` inside degree `p − |S|`.
    offsets: BTreeMap<(i32, u32), usize>,
    src_dims: BTreeMap<i32, usize>,
}

impl InduceLayout {
    pub fn codim(&self) -> usize {
        self.h.len()
    }

    /// Offset of `V_p ⊗ h_S` inside degree `p − |S|`.
    pub fn offset(&self, p: i32, mask: u32) -> Option<usize> {
        self.offsets.get(&(p, mask)).copied()
    }

    pub fn blocks(&self) -> impl Iterator<Item = (i32, u32, usize)> + '_ {
        self.offsets.iter().map(|(&(p, s), &o)| (p, s, o))
    }

    pub fn src_dim(&self, p: i32) -> usize {
        self.src_dims.get(&p).copied().unwrap_or(0)
    }
}

/// `V_{A(ρ)}` together with its block layout.
#[derive(Clone, Debug)]
pub struct Induced {
    pub module: ExtModule,
    pub layout: InduceLayout,
}

fn subsets(m: usize) -> Vec<u32> {
    (0..=m).flat_map(|s| (0..m).combinations(s).map(|c| mask_of(&c))).collect()
}

/// Induction along `A(σ) ⊂ A(ρ)` with the canonical complement.
pub fn induce(v: &ExtModule, target: &Arc<ConeAlgebra>) -> Result<Induced> {
    let src = &v.alg;
    let p = target
        .coords_of_cols(&src.basis)
        .ok_or(Error::NotAFace(src.id, target.id))?;
    let ext = extend_basis(&p, target.dim())?;
    induce_with(v, target, &p, &ext)
}

/// Induction with an explicit complement, given in ρ-coordinates.
pub fn induce_with_complement(v: &ExtModule, target: &Arc<ConeAlgebra>, complement: &QMatrix) -> Result<Induced> {
    let p = target
        .coords_of_cols(&v.alg.basis)
        .ok_or(Error::NotAFace(v.alg.id, target.id))?;
    if p.hstack(complement).rank() != target.dim() || complement.cols() + p.cols() != target.dim() {
        return Err(Error::InvalidInput("not a complement".into()));
    }
    induce_with(v, target, &p, complement)
}

fn induce_with(v: &ExtModule, target: &Arc<ConeAlgebra>, p: &QMatrix, ext: &QMatrix) -> Result<Induced> {
    let ks = p.cols();
    let m = ext.cols();
    let split = p.hstack(ext);
    let det = split.determinant();
    let split_inv = split.inverse().expect("complement spans");
    let h: Vec<Vec<Q>> = (0..m).map(|u| target.basis.mul_vec(&ext.col(u))).collect();

    let masks = subsets(m);
    let mut dims: BTreeMap<i32, usize> = BTreeMap::new();
    let mut offsets = BTreeMap::new();
    let lo = v.dims.keys().next().copied().unwrap_or(0) - m as i32;
    let hi = v.dims.keys().last().copied().unwrap_or(0);
    for d in lo..=hi {
        for &mask in &masks {
            let s = mask.count_ones() as i32;
            let pdeg = d + s;
            let len = v.dim(pdeg);
            if len == 0 {
                continue;
            }
            let e = dims.entry(d).or_insert(0);
            offsets.insert((pdeg, mask), *e);
            *e += len;
        }
    }

    let kt = target.dim();
    let mut act = vec![BTreeMap::new(); kt];
    for (t, fam) in act.iter_mut().enumerate() {
        let coeffs = split_inv.col(t);
        let (a, b) = coeffs.split_at(ks);
        for (&d, &dd) in &dims {
            let below = dims.get(&(d - 1)).copied().unwrap_or(0);
            if below == 0 {
                continue;
            }
            let mut mat = QMatrix::zeros(below, dd);
            for &mask in &masks {
                let s = mask.count_ones() as i32;
                let pdeg = d + s;
                let Some(&col) = offsets.get(&(pdeg, mask)) else { continue };
                if let Some(&row) = offsets.get(&(pdeg - 1, mask)) {
                    mat.set_block(row, col, &v.act_coords(a, pdeg));
                }
                for (u, bu) in b.iter().enumerate() {
                    if bu.is_zero() || mask >> u & 1 == 1 {
                        continue;
                    }
                    let Some(&row) = offsets.get(&(pdeg, mask | 1 << u)) else { continue };
                    let sign = insertion_sign(u, mask) * if pdeg.rem_euclid(2) == 0 { 1 } else { -1 };
                    let c = bu * &Q::from_int(sign);
                    for i in 0..v.dim(pdeg) {
                        mat[(row + i, col + i)] = c.clone();
                    }
                }
            }
            fam.insert(d, mat);
        }
    }
    Ok(Induced {
        module: ExtModule::from_parts(target, dims, act),
        layout: InduceLayout {
            h,
            det,
            offsets,
            src_dims: v.dims.clone(),
        },
    })
}

/// `f ⊗ id` between two modules induced along the same inclusion.
pub fn induce_hom(f: &ModHom, src: &Induced, tgt: &Induced) -> ModHom {
    let mut out = ModHom::zero(&src.module, &tgt.module);
    for (pdeg, mask, col) in src.layout.blocks() {
        let Some(row) = tgt.layout.offset(pdeg, mask) else { continue };
        let Some(block) = f.mat_ref(pdeg) else { continue };
        let d = pdeg - mask.count_ones() as i32;
        let mut m = out.mat(d);
        m.set_block(row, col, block);
        out.set(d, m);
    }
    out
}

/// The `A(ρ)`-linear extension `v ⊗ h_S ↦ g(v)·h_S` of an `A(σ)`-linear map
/// `g: V → W` into an `A(ρ)`-module `W`.
pub fn extend_hom(src: &Induced, g: &ModHom, w: &ExtModule) -> ModHom {
    let layout = &src.layout;
    let mut right: BTreeMap<(usize, i32), QMatrix> = BTreeMap::new();
    let mut out = ModHom::zero(&src.module, w);
    let mut acc: BTreeMap<i32, QMatrix> = BTreeMap::new();
    for (pdeg, mask, col) in layout.blocks() {
        let Some(gm) = g.mat_ref(pdeg) else { continue };
        let mut m = gm.clone();
        let mut q = pdeg;
        for u in 0..layout.codim() {
            if mask >> u & 1 == 0 {
                continue;
            }
            let r = right
                .entry((u, q))
                .or_insert_with(|| w.right_act_vec(&layout.h[u], q));
            m = r.mul(&m);
            q -= 1;
        }
        if m.is_zero() {
            continue;
        }
        let d = q;
        let full = acc
            .entry(d)
            .or_insert_with(|| QMatrix::zeros(w.dim(d), src.module.dim(d)));
        full.set_block(0, col, &m);
    }
    for (d, m) in acc {
        out.set(d, m);
    }
    out
}

/// The map `A(σ)(s) → W` sending the generator (in degree `s`) to `w ∈ W_s`.
pub fn free_hom(s: i32, w: &ExtModule, vec: &[Q]) -> ModHom {
    let alg = w.alg().clone();
    let k = alg.dim();
    let src = ExtModule::free(&alg).twist(s);
    let mut out = ModHom::zero(&src, w);
    for size in 0..=k {
        let deg = s - size as i32;
        let mut m = QMatrix::zeros(w.dim(deg), src.dim(deg));
        for (col, c) in (0..k).combinations(size).enumerate() {
            let mut x = vec.to_vec();
            let mut q = s;
            for &t in c.iter().rev() {
                x = w.act(t, q).mul_vec(&x);
                q -= 1;
            }
            for (row, v) in x.into_iter().enumerate() {
                m[(row, col)] = v;
            }
        }
        out.set(deg, m);
    }
    out
}

/// The inclusion `V → V_{A(ρ)}`, `v ↦ v ⊗ 1`, as a map of graded spaces.
pub fn unit_inclusion(v: &ExtModule, ind: &Induced) -> ModHom {
    let mut out = ModHom::zero(v, &ind.module);
    for (&p, &d) in &v.dims {
        let off = ind.layout.offset(p, 0).expect("unit block present");
        let mut m = QMatrix::zeros(ind.module.dim(p), d);
        m.set_block(off, 0, &QMatrix::identity(d));
        out.set(p, m);
    }
    out
}

/// `d_σ(V) = Hom_Q(V, Det(σ)_Q)` in the dual basis: `dim d(V)_j = dim V_{−k−j}`.
pub fn dualize(v: &ExtModule) -> ExtModule {
    let k = v.alg.dim() as i32;
    let dims: BTreeMap<i32, usize> = v.dims.iter().map(|(&j, &d)| (-k - j, d)).collect();
    let act = v
        .act
        .iter()
        .map(|fam| {
            fam.iter()
                .map(|(&j, m)| {
                    // act_t[j]: V_j → V_{j−1} dualizes to d(V)_q → d(V)_{q−1} with q = −k−j+1.
                    let q = -k - j + 1;
                    (q, m.transpose().signed(q as i64))
                })
                .collect()
        })
        .collect();
    ExtModule::from_parts(&v.alg, dims, act)
}

/// `d(f): d(W) → d(V)` for `f: V → W`.
pub fn dualize_hom(f: &ModHom, k: usize) -> ModHom {
    let k = k as i32;
    let flip = |dims: &BTreeMap<i32, usize>| dims.iter().map(|(&j, &d)| (-k - j, d)).collect();
    let mut out = ModHom::zero_dims(flip(&f.tgt), flip(&f.src));
    for (&j, m) in &f.map {
        out.set(-k - j, m.transpose());
    }
    out
}

/// The canonical isomorphism `V → d(d(V))`.
pub fn double_dual_iso(v: &ExtModule) -> ModHom {
    let k = v.alg.dim() as i64;
    let mut out = ModHom::zero(v, v);
    for (&j, &d) in &v.dims {
        out.set(j, QMatrix::identity(d).signed(j as i64 * (k + 1)));
    }
    out
}

/// The isomorphism `d_σ(V)_{A(ρ)} → d_ρ(V_{A(ρ)})`, together with the two
/// induced modules it connects.
pub fn induce_dual_iso(v: &ExtModule, target: &Arc<ConeAlgebra>) -> Result<(Induced, ExtModule, ModHom)> {
    let ind = induce(v, target)?;
    let dual_of_ind = dualize(&ind.module);
    let dv = dualize(v);
    let ind_dual = induce(&dv, target)?;
    let ks = v.alg.dim() as i32;
    let kr = target.dim() as i32;
    let m = ind.layout.codim();
    let full_mask = if m == 0 { 0 } else { (1u32 << m) - 1 };
    let c = ind.layout.det.clone();

    // A(σ)-linear seed y ↦ c·(e ⊗ h_all)^* on d_σ(V), then extend.
    let mut seed = ModHom::zero(&dv, &dual_of_ind);
    for (&j, &d) in dv.dims() {
        let p = -ks - j;
        let off = ind.layout.offset(p, full_mask).expect("top block present");
        let q = -kr - (p - m as i32);
        debug_assert_eq!(q, j);
        let mut mat = QMatrix::zeros(dual_of_ind.dim(j), d);
        for i in 0..d {
            mat[(off + i, i)] = c.clone();
        }
        seed.set(j, mat);
    }
    let phi = extend_hom(&ind_dual, &seed, &dual_of_ind);
    Ok((ind, dual_of_ind, phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn alg(rank: usize, cols: &[Vec<i64>]) -> Arc<ConeAlgebra> {
        ConeAlgebra::new(0, QMatrix::from_i64_cols(rank, cols))
    }

    /// Shifted free modules plus a trivial summand, in a random basis per degree.
    fn random_module(a: &Arc<ConeAlgebra>, rng: &mut ChaCha8Rng) -> ExtModule {
        let trivial = ExtModule::trivial(a, rng.random_range(-2..=0));
        let parts: Vec<ExtModule> = (0..rng.random_range(1..3))
            .map(|_| {
                let shift = rng.random_range(-1..=1);
                let f = ExtModule::free(a);
                let dims = f.dims.iter().map(|(&j, &d)| (j + shift, d)).collect();
                let act = f
                    .act
                    .iter()
                    .map(|fam| fam.iter().map(|(&j, m)| (j + shift, m.clone())).collect())
                    .collect();
                ExtModule::from_parts(a, dims, act)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .chain(std::iter::once(trivial))
            .collect();
        let refs: Vec<&ExtModule> = parts.iter().collect();
        let sum = ExtModule::direct_sum(a, &refs).0;
        let change: BTreeMap<i32, QMatrix> = sum
            .dims
            .iter()
            .map(|(&j, &d)| {
                let mut m = QMatrix::identity(d);
                for r in 0..d {
                    for c in r + 1..d {
                        m[(r, c)] = Q::from_int(rng.random_range(-2..=2));
                    }
                }
                (j, m)
            })
            .collect();
        let act = sum
            .act
            .iter()
            .map(|fam| {
                fam.iter()
                    .map(|(&j, m)| (j, change[&(j - 1)].mul(m).mul(&change[&j].inverse().unwrap())))
                    .collect()
            })
            .collect();
        ExtModule::from_parts(a, sum.dims.clone(), act)
    }

    #[test]
    fn free_module_examples() {
        let a0 = ConeAlgebra::new(0, QMatrix::zeros(2, 0));
        let f = ExtModule::free(&a0);
        assert_eq!(f.dims, BTreeMap::from([(0, 1)]));

        let a1 = alg(1, &[vec![1]]);
        let f = ExtModule::free(&a1);
        assert_eq!(f.dims, BTreeMap::from([(-1, 1), (0, 1)]));
        assert_eq!(f.act(0, 0), QMatrix::from_i64_rows(&[vec![1]]));
        assert_eq!(f.act(0, -1).rows(), 0);

        let a2 = alg(2, &[vec![1, 0], vec![0, 1]]);
        let f = ExtModule::free(&a2);
        assert_eq!(f.dims, BTreeMap::from([(-2, 1), (-1, 2), (0, 1)]));
        assert!(f.check_axioms());
        let lhs = f.act(1, -1).mul(&f.act(0, 0));
        let rhs = f.act(0, -1).mul(&f.act(1, 0)).neg();
        assert_eq!(lhs, rhs);
        assert!(!lhs.is_zero());
    }

    #[test]
    fn induce_examples() {
        let zero = ConeAlgebra::new(0, QMatrix::zeros(2, 0));
        let ray = ConeAlgebra::new(1, QMatrix::from_i64_cols(2, &[vec![1, 0]]));
        let top = ConeAlgebra::new(2, QMatrix::identity(2));

        let q = ExtModule::trivial(&zero, 0);
        let ind = induce(&q, &ray).unwrap();
        assert_eq!(ind.module.dims, BTreeMap::from([(-1, 1), (0, 1)]));
        assert!(ind.module.check_axioms());

        let fr = ExtModule::free(&ray);
        let ind = induce(&fr, &top).unwrap();
        assert_eq!(ind.module.total_dim(), 4);
        assert!(ind.module.check_axioms());

        let mut act = vec![BTreeMap::new()];
        act[0].insert(0, QMatrix::from_i64_rows(&[vec![1, 0]]));
        let v = ExtModule::from_parts(&ray, BTreeMap::from([(0, 2), (-1, 1)]), act);
        let ind = induce(&v, &top).unwrap();
        assert_eq!(ind.module.dims, BTreeMap::from([(0, 2), (-1, 3), (-2, 1)]));
        assert!(ind.module.check_axioms());

        assert!(matches!(induce(&fr, &zero), Err(Error::NotAFace(1, 0))));
    }

    #[test]
    fn dual_examples() {
        let zero = ConeAlgebra::new(0, QMatrix::zeros(1, 0));
        let q = ExtModule::trivial(&zero, 0);
        assert_eq!(dualize(&q).dims, q.dims);
        assert_eq!(double_dual_iso(&q), ModHom::identity(&q));

        let ray = alg(1, &[vec![1]]);
        let mut act = vec![BTreeMap::new()];
        act[0].insert(0, QMatrix::from_i64_rows(&[vec![1], vec![0]]));
        let v = ExtModule::from_parts(&ray, BTreeMap::from([(0, 1), (-1, 2)]), act);
        let d = dualize(&v);
        assert_eq!(d.dims, BTreeMap::from([(-1, 1), (0, 2)]));
        assert!(d.check_axioms());

        let f = ExtModule::free(&ray);
        let df = dualize(&f);
        // Free of rank one: the top-degree functional generates.
        assert_eq!(df.dims, f.dims);
        assert!(!df.act(0, 0).is_zero());
        let iota = double_dual_iso(&f);
        assert!(iota.is_hom(&f, &dualize(&df)));
    }

    #[test]
    fn induce_dual_free_generator() {
        let zero = ConeAlgebra::new(0, QMatrix::zeros(1, 0));
        let ray = alg(1, &[vec![-1]]);
        let q = ExtModule::free(&zero);
        let (_, dual_ind, phi) = induce_dual_iso(&q, &ray).unwrap();
        assert!(phi.is_iso());
        assert_eq!(dual_ind.dims, BTreeMap::from([(-1, 1), (0, 1)]));
    }

    /// Interior product by a dual basis vector on monomials of `⋀Q^k`.
    fn interior(k: usize, t: usize) -> BTreeMap<i32, QMatrix> {
        let mono = |s: usize| (0..k).combinations(s).map(|c| mask_of(&c)).collect::<Vec<_>>();
        let mut out = BTreeMap::new();
        for s in 1..=k {
            let (src, dst) = (mono(s), mono(s - 1));
            let mut m = QMatrix::zeros(dst.len(), src.len());
            for (c, &mask) in src.iter().enumerate() {
                if mask >> t & 1 == 0 {
                    continue;
                }
                let r = dst.iter().position(|&x| x == mask & !(1 << t)).unwrap();
                m[(r, c)] = Q::from_int(insertion_sign(t, mask & !(1 << t)));
            }
            out.insert(-(s as i32), m);
        }
        out
    }

    #[test]
    fn left_actions_commute_with_interior_products_off_sigma() {
        // A(σ) spanned by the first `ks` generators, interior products by the
        // dual vectors of the remaining ones (the annihilator of N(σ)).
        for k in 1..=3usize {
            let full = alg(k, &(0..k).map(|i| (0..k).map(|j| (i == j) as i64).collect()).collect::<Vec<_>>());
            let a = ExtModule::free(&full);
            for ks in 0..=k {
                for t in 0..ks {
                    for u in ks..k {
                        let iu = interior(k, u);
                        for s in 0..k as i32 {
                            let j = -s;
                            let x = a.act(t, j);
                            let lhs = match iu.get(&(j - 1)) {
                                Some(i) => i.mul(&x),
                                None => continue,
                            };
                            let rhs = match iu.get(&j) {
                                Some(i) => a.act(t, j + 1).mul(i),
                                None => QMatrix::zeros(lhs.rows(), lhs.cols()),
                            };
                            // Graded commutation: both operators have odd degree.
                            assert_eq!(lhs, rhs.neg(), "k={k} t={t} u={u} j={j}");
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn module_axioms_survive_constructions(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ray = alg(3, &[vec![1, 0, 0]]);
            let plane = alg(3, &[vec![1, 0, 0], vec![0, 1, 0]]);
            let full = ConeAlgebra::full(9, 3);
            let v = random_module(&ray, &mut rng);
            prop_assert!(v.check_axioms());
            let d = dualize(&v);
            prop_assert!(d.check_axioms());
            let ind = induce(&v, &plane).unwrap();
            prop_assert!(ind.module.check_axioms());
            prop_assert_eq!(ind.module.total_dim(), 2 * v.total_dim());
            for (&m, &dim) in ind.module.dims() {
                let expect: usize = v.dims().iter().map(|(&i, &dv)| {
                    let s = i - m;
                    if s == 0 || s == 1 { dv } else { 0 }
                }).sum();
                prop_assert_eq!(dim, expect);
            }
            let ind2 = induce(&ind.module, &full).unwrap();
            prop_assert!(ind2.module.check_axioms());

            let iota = double_dual_iso(&v);
            prop_assert!(iota.is_hom(&v, &dualize(&d)));

            let (_, target, phi) = induce_dual_iso(&v, &full).unwrap();
            prop_assert!(phi.is_iso());
            prop_assert!(phi.is_hom(&induce(&d, &full).unwrap().module, &target));
        }

        #[test]
        fn dual_hom_naturality(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let plane = alg(2, &[vec![1, 0], vec![1, 1]]);
            let v = random_module(&plane, &mut rng);
            let c = Q::from_int(rng.random_range(1..4));
            let w_parts = [v.clone(), ExtModule::free(&plane)];
            let refs: Vec<&ExtModule> = w_parts.iter().collect();
            let (w, off) = ExtModule::direct_sum(&plane, &refs);
            let mut f = ModHom::zero(&v, &w);
            for (&j, &d) in v.dims() {
                let mut m = QMatrix::zeros(w.dim(j), d);
                m.set_block(off[0][&j], 0, &QMatrix::scalar(d, c.clone()));
                f.set(j, m);
            }
            prop_assert!(f.is_hom(&v, &w));
            let k = plane.dim();
            let ddf = dualize_hom(&dualize_hom(&f, k), k);
            prop_assert_eq!(double_dual_iso(&w).after(&f), ddf.after(&double_dual_iso(&v)));
            let df = dualize_hom(&f, k);
            prop_assert!(df.is_hom(&dualize(&w), &dualize(&v)));
        }

        #[test]
        fn complement_choice_preserves_dimensions(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ray = alg(2, &[vec![1, 1]]);
            let top = ConeAlgebra::full(3, 2);
            let v = random_module(&ray, &mut rng);
            let a = induce(&v, &top).unwrap();
            let b = induce_with_complement(&v, &top, &QMatrix::from_i64_cols(2, &[vec![0, 1]])).unwrap();
            prop_assert!(b.module.check_axioms());
            prop_assert_eq!(a.module.dims(), b.module.dims());
        }
    }
}
