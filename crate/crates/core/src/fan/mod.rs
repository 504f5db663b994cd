//! Fans, their face lattices and incidence signs.

mod dd;
mod ecomplex;

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactq::{decompose, hnf_lattice_basis, QMatrix, Q};

pub use dd::extreme_rays;
pub use ecomplex::{e_complex, is_acyclic_z, ConeSet, ZComplex, ZLabel};

/// On-disk fan description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanSpec {
    pub rank: usize,
    pub rays: Vec<Vec<i64>>,
    pub maximal_cones: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct Cone {
    pub id: usize,
    /// Sorted indices into [`Fan::rays`].
    pub rays: Vec<usize>,
    pub dim: usize,
    /// Canonical Z-basis of the lattice `N ∩ span(σ)`, one column per generator.
    pub basis: QMatrix,
    /// Maps a vector of `span(σ)` to its coordinates in `basis`.
    coord_map: QMatrix,
    pub facets: Vec<usize>,
    /// All faces including the cone itself, sorted by id.
    pub faces: Vec<usize>,
    /// All cones having this one as a face, including itself, sorted by id.
    pub cofaces: Vec<usize>,
}

impl Cone {
    /// Coordinates of `v` in the canonical basis, or `None` if `v ∉ span(σ)`.
    pub fn coords(&self, v: &[Q]) -> Option<Vec<Q>> {
        let c = self.coord_map.mul_vec(v);
        (self.basis.mul_vec(&c) == v).then_some(c)
    }

    /// Coordinates of the columns of `m`; panics if some column leaves the span.
    pub fn coords_of_cols(&self, m: &QMatrix) -> QMatrix {
        let c = self.coord_map.mul(m);
        assert_eq!(self.basis.mul(&c), *m, "vectors outside the span of cone {}", self.id);
        c
    }
}

#[derive(Clone, Debug)]
pub struct Fan {
    rank: usize,
    rays: Vec<Vec<i64>>,
    cones: Vec<Cone>,
    index: BTreeMap<Vec<usize>, usize>,
    maximal: Vec<usize>,
    signs: BTreeMap<(usize, usize), i32>,
    complete: bool,
}

struct ConeData {
    dim: usize,
    basis: QMatrix,
    facets: Vec<Vec<usize>>,
}

fn ray_vec(r: &[i64]) -> Vec<Q> {
    r.iter().map(|&x| Q::from_int(x)).collect()
}

fn left_inverse(basis: &QMatrix) -> QMatrix {
    if basis.cols() == 0 {
        return QMatrix::zeros(0, basis.rows());
    }
    let bt = basis.transpose();
    bt.mul(basis).inverse().expect("independent basis").mul(&bt)
}

impl Fan {
    pub fn from_spec(spec: &FanSpec) -> Result<Fan> {
        Fan::new(spec.rank, spec.rays.clone(), spec.maximal_cones.clone())
    }

    pub fn from_json(text: &str) -> Result<Fan> {
        let spec: FanSpec = serde_json::from_str(text)?;
        Fan::from_spec(&spec)
    }

    pub fn to_spec(&self) -> FanSpec {
        FanSpec {
            rank: self.rank,
            rays: self.rays.clone(),
            maximal_cones: self.maximal.iter().map(|&m| self.cones[m].rays.clone()).collect(),
        }
    }

    /// Loads and validates a fan, computing its full face lattice.
    pub fn new(rank: usize, rays: Vec<Vec<i64>>, maximal_cones: Vec<Vec<usize>>) -> Result<Fan> {
        for (i, r) in rays.iter().enumerate() {
            if r.len() != rank {
                return Err(Error::InvalidInput(format!(
                    "ray {i} has {} coordinates, expected {rank}",
                    r.len()
                )));
            }
            let g = r.iter().fold(0i64, |g, &x| g.gcd(&x));
            if g != 1 {
                return Err(Error::NonPrimitiveRay(i));
            }
        }
        if let Some((i, j)) = (0..rays.len()).tuple_combinations().find(|&(i, j)| rays[i] == rays[j]) {
            return Err(Error::InvalidInput(format!("rays {i} and {j} coincide")));
        }

        let mut listed: Vec<Vec<usize>> = Vec::new();
        for c in &maximal_cones {
            let set: Vec<usize> = c.iter().copied().sorted().collect();
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidInput(format!("cone {c:?} repeats a ray")));
            }
            if let Some(&bad) = set.iter().find(|&&i| i >= rays.len()) {
                return Err(Error::InvalidInput(format!("ray index {bad} out of range")));
            }
            if listed.contains(&set) {
                return Err(Error::DuplicateCone(set));
            }
            listed.push(set);
        }
        if listed.is_empty() {
            listed.push(Vec::new());
        }

        let vecs: Vec<Vec<Q>> = rays.iter().map(|r| ray_vec(r)).collect();
        let mut memo: BTreeMap<Vec<usize>, ConeData> = BTreeMap::new();
        for set in &listed {
            validate_top_cone(rank, &vecs, set)?;
            collect_faces(rank, &vecs, set.clone(), &mut memo);
        }

        for (a, b) in listed.iter().tuple_combinations() {
            check_intersection(rank, &vecs, a, b, &memo)?;
        }

        let used: BTreeSet<usize> = listed.iter().flatten().copied().collect();
        if let Some(i) = (0..rays.len()).find(|i| !used.contains(i)) {
            return Err(Error::InvalidInput(format!("ray {i} lies in no cone")));
        }

        let mut order: Vec<(usize, Vec<usize>)> = memo.iter().map(|(k, v)| (v.dim, k.clone())).collect();
        order.sort();
        let index: BTreeMap<Vec<usize>, usize> =
            order.iter().enumerate().map(|(i, (_, k))| (k.clone(), i)).collect();

        let mut cones: Vec<Cone> = order
            .iter()
            .enumerate()
            .map(|(id, (dim, key))| {
                let data = &memo[key];
                let mut facets: Vec<usize> = data.facets.iter().map(|f| index[f]).collect();
                facets.sort_unstable();
                Cone {
                    id,
                    rays: key.clone(),
                    dim: *dim,
                    coord_map: left_inverse(&data.basis),
                    basis: data.basis.clone(),
                    facets,
                    faces: Vec::new(),
                    cofaces: Vec::new(),
                }
            })
            .collect();

        for id in 0..cones.len() {
            let mut faces: BTreeSet<usize> = BTreeSet::from([id]);
            for &f in &cones[id].facets {
                faces.extend(cones[f].faces.iter().copied());
            }
            cones[id].faces = faces.into_iter().collect();
        }
        for id in 0..cones.len() {
            for f in cones[id].faces.clone() {
                cones[f].cofaces.push(id);
            }
        }
        let maximal: Vec<usize> = (0..cones.len()).filter(|&i| cones[i].cofaces.len() == 1).collect();

        let mut fan = Fan {
            rank,
            rays,
            cones,
            index,
            maximal,
            signs: BTreeMap::new(),
            complete: false,
        };
        let mut signs = BTreeMap::new();
        for tau in &fan.cones {
            for &sigma in &tau.facets {
                signs.insert((sigma, tau.id), fan.compute_sign(sigma, tau.id));
            }
        }
        fan.signs = signs;
        fan.complete = fan.compute_complete();
        Ok(fan)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rays(&self) -> &[Vec<i64>] {
        &self.rays
    }

    pub fn ray(&self, i: usize) -> Vec<Q> {
        ray_vec(&self.rays[i])
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    pub fn cone(&self, id: usize) -> &Cone {
        &self.cones[id]
    }

    pub fn len(&self) -> usize {
        self.cones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cones.is_empty()
    }

    pub fn zero_cone(&self) -> usize {
        0
    }

    pub fn maximal(&self) -> &[usize] {
        &self.maximal
    }

    pub fn is_maximal(&self, id: usize) -> bool {
        self.cones[id].cofaces.len() == 1
    }

    pub fn find(&self, rays: &[usize]) -> Option<usize> {
        let key: Vec<usize> = rays.iter().copied().sorted().collect();
        self.index.get(&key).copied()
    }

    /// Cones of dimension `d`, in id order.
    pub fn of_dim(&self, d: usize) -> Vec<usize> {
        self.cones.iter().filter(|c| c.dim == d).map(|c| c.id).collect()
    }

    /// Number of cones of each dimension `0..=rank`.
    pub fn census(&self) -> Vec<usize> {
        (0..=self.rank).map(|d| self.of_dim(d).len()).collect()
    }

    /// `σ ≺ τ` (reflexive).
    pub fn is_face(&self, sigma: usize, tau: usize) -> bool {
        self.cones[tau].faces.binary_search(&sigma).is_ok()
    }

    /// `F[ρ, μ]`: the cones σ with `ρ ≺ σ ≺ μ`.
    pub fn interval(&self, rho: usize, mu: usize) -> Vec<usize> {
        self.cones[mu]
            .faces
            .iter()
            .copied()
            .filter(|&s| self.is_face(rho, s))
            .collect()
    }

    pub fn is_simplicial(&self) -> bool {
        self.cones.iter().all(|c| c.rays.len() == c.dim)
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// The sign ε with `q'_{σ/τ}(det σ) = ε · det τ` for a facet `σ` of `τ`.
    pub fn incidence_sign(&self, sigma: usize, tau: usize) -> Result<i32> {
        self.signs
            .get(&(sigma, tau))
            .copied()
            .ok_or(Error::NotFacet(sigma, tau))
    }

    fn compute_sign(&self, sigma: usize, tau: usize) -> i32 {
        let (s, t) = (&self.cones[sigma], &self.cones[tau]);
        let outside = t
            .rays
            .iter()
            .find(|r| !s.rays.contains(r))
            .expect("facet pair has an extra ray");
        let a = t.coords(&self.ray(*outside)).expect("ray lies in its cone");
        let mut m = QMatrix::zeros(t.dim, t.dim);
        for (i, x) in a.into_iter().enumerate() {
            m[(i, 0)] = x;
        }
        m.set_block(0, 1, &t.coords_of_cols(&s.basis));
        m.determinant().signum()
    }

    fn compute_complete(&self) -> bool {
        let r = self.rank;
        let top = self.of_dim(r);
        if top.is_empty() {
            return false;
        }
        if r == 0 {
            return true;
        }
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for tau in self.of_dim(r - 1) {
            let over: Vec<usize> = self.cones[tau]
                .cofaces
                .iter()
                .copied()
                .filter(|&c| self.cones[c].dim == r)
                .collect();
            if over.len() != 2 {
                return false;
            }
            adj.entry(over[0]).or_default().push(over[1]);
            adj.entry(over[1]).or_default().push(over[0]);
        }
        let mut seen = BTreeSet::from([top[0]]);
        let mut stack = vec![top[0]];
        while let Some(c) = stack.pop() {
            for &n in adj.get(&c).into_iter().flatten() {
                if seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        seen.len() == top.len()
    }

    /// `Δ(σ≺)`: all cones having `σ` as a face.
    pub fn star(&self, sigma: usize) -> Vec<usize> {
        self.cones[sigma].cofaces.clone()
    }

    /// The fan `F(σ)` of faces of a single cone, as a standalone fan together
    /// with the map from its cone ids to ids in `self`.
    pub fn face_fan(&self, sigma: usize) -> (Fan, Vec<usize>) {
        let used: Vec<usize> = self.cones[sigma].rays.clone();
        let rays: Vec<Vec<i64>> = used.iter().map(|&i| self.rays[i].clone()).collect();
        let sub = Fan::new(self.rank, rays, vec![(0..used.len()).collect()]).expect("faces of a valid cone");
        let map = sub
            .cones
            .iter()
            .map(|c| {
                let orig: Vec<usize> = c.rays.iter().map(|&i| used[i]).collect();
                self.index[&orig]
            })
            .collect();
        (sub, map)
    }
}

fn cone_span_data(rank: usize, vecs: &[Vec<Q>], set: &[usize]) -> (QMatrix, QMatrix) {
    let gens = QMatrix::from_cols(rank, &set.iter().map(|&i| vecs[i].clone()).collect::<Vec<_>>());
    let basis = hnf_lattice_basis(&gens);
    let coords = left_inverse(&basis).mul(&gens);
    (basis, coords)
}

/// Facet normals (in span coordinates) of the cone on `set`.
fn facet_normals(coords: &QMatrix) -> Vec<Vec<Q>> {
    extreme_rays(&coords.transpose())
}

fn validate_top_cone(rank: usize, vecs: &[Vec<Q>], set: &[usize]) -> Result<()> {
    let (basis, coords) = cone_span_data(rank, vecs, set);
    let d = basis.cols();
    if d == 0 {
        return Ok(());
    }
    let normals = facet_normals(&coords);
    if QMatrix::from_rows_with_cols(normals.clone(), d).rank() < d {
        return Err(Error::NotStronglyConvex(set.to_vec()));
    }
    for (k, &ray) in set.iter().enumerate() {
        let c = coords.col(k);
        let tight: Vec<Vec<Q>> = normals
            .iter()
            .filter(|m| dot(m, &c).is_zero())
            .cloned()
            .collect();
        if QMatrix::from_rows_with_cols(tight, d).rank() + 1 != d {
            return Err(Error::InvalidInput(format!(
                "ray {ray} is not an extreme ray of cone {set:?}"
            )));
        }
    }
    Ok(())
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn collect_faces(rank: usize, vecs: &[Vec<Q>], set: Vec<usize>, memo: &mut BTreeMap<Vec<usize>, ConeData>) {
    if memo.contains_key(&set) {
        return;
    }
    let (basis, coords) = cone_span_data(rank, vecs, &set);
    let dim = basis.cols();
    let facets: Vec<Vec<usize>> = if dim == 0 {
        Vec::new()
    } else {
        facet_normals(&coords)
            .iter()
            .map(|m| {
                set.iter()
                    .enumerate()
                    .filter(|&(k, _)| dot(m, &coords.col(k)).is_zero())
                    .map(|(_, &i)| i)
                    .collect()
            })
            .collect()
    };
    memo.insert(set, ConeData { dim, basis, facets: facets.clone() });
    for f in facets {
        collect_faces(rank, vecs, f, memo);
    }
}

/// Normals of the facets of `set` containing all of `face`, as functionals on `Q^rank`.
fn ambient_facet_functionals(rank: usize, vecs: &[Vec<Q>], set: &[usize]) -> (Vec<Vec<Q>>, QMatrix) {
    let (basis, coords) = cone_span_data(rank, vecs, set);
    let linv = left_inverse(&basis);
    let normals = if basis.cols() == 0 { Vec::new() } else { facet_normals(&coords) };
    let rows = normals
        .iter()
        .map(|m| {
            let row = QMatrix::from_rows_with_cols(vec![m.clone()], basis.cols()).mul(&linv);
            row.row(0).to_vec()
        })
        .collect();
    (rows, basis)
}

fn check_intersection(
    rank: usize,
    vecs: &[Vec<Q>],
    a: &[usize],
    b: &[usize],
    memo: &BTreeMap<Vec<usize>, ConeData>,
) -> Result<()> {
    let shared: Vec<usize> = a.iter().copied().filter(|i| b.contains(i)).collect();
    let is_face_of = |top: &[usize]| -> bool {
        let mut stack = vec![top.to_vec()];
        let mut seen = BTreeSet::new();
        while let Some(s) = stack.pop() {
            if s == shared {
                return true;
            }
            if seen.insert(s.clone()) {
                stack.extend(memo[&s].facets.iter().cloned());
            }
        }
        false
    };
    let not_fan = || Error::NotAFan(format!("cones {a:?} and {b:?} do not meet in a common face"));
    if !is_face_of(a) || !is_face_of(b) {
        return Err(not_fan());
    }

    let (fa, basis_a) = ambient_facet_functionals(rank, vecs, a);
    let (fb, basis_b) = ambient_facet_functionals(rank, vecs, b);
    // Basis of span(a) ∩ span(b): kernel of [Ba | -Bb].
    let k = decompose(&basis_a.hstack(&basis_b.neg())).kernel;
    let common = basis_a.mul(&k.block(0, basis_a.cols(), 0, k.cols()));
    let common = decompose(&common).image;
    let u = common.cols();
    if u == 0 {
        return Ok(());
    }
    let constraint_rows: Vec<Vec<Q>> = fa
        .iter()
        .chain(fb.iter())
        .map(|f| QMatrix::from_rows_with_cols(vec![f.clone()], rank).mul(&common).row(0).to_vec())
        .collect();
    let gens = extreme_rays(&QMatrix::from_rows_with_cols(constraint_rows, u));
    let shared_vecs: Vec<Vec<Q>> = shared.iter().map(|&i| vecs[i].clone()).collect();
    let supporting: Vec<&Vec<Q>> = fa
        .iter()
        .filter(|f| shared_vecs.iter().all(|v| dot(f, v).is_zero()))
        .collect();
    for g in gens {
        let x = common.mul_vec(&g);
        if supporting.iter().any(|f| !dot(f, &x).is_zero()) {
            return Err(not_fan());
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn p1() -> Fan {
        Fan::new(1, vec![vec![1], vec![-1]], vec![vec![0], vec![1]]).unwrap()
    }

    pub(crate) fn p2() -> Fan {
        Fan::new(
            2,
            vec![vec![1, 0], vec![0, 1], vec![-1, -1]],
            vec![vec![0, 1], vec![1, 2], vec![2, 0]],
        )
        .unwrap()
    }

    fn cube() -> Fan {
        let rays: Vec<Vec<i64>> = (0..8)
            .map(|m| (0..3).map(|b| if m >> b & 1 == 1 { 1 } else { -1 }).collect())
            .collect();
        let mut maximal = Vec::new();
        for axis in 0..3 {
            for side in [-1, 1] {
                maximal.push(rays.iter().enumerate().filter(|(_, r)| r[axis] == side).map(|(i, _)| i).collect());
            }
        }
        Fan::new(3, rays, maximal).unwrap()
    }

    #[test]
    fn small_fans() {
        let f = p1();
        assert_eq!(f.len(), 3);
        assert!(f.is_complete());
        assert_eq!(f.incidence_sign(0, 1).unwrap(), 1);
        assert_eq!(f.incidence_sign(0, 2).unwrap(), -1);
        assert!(matches!(f.incidence_sign(1, 2), Err(Error::NotFacet(1, 2))));

        let f = p2();
        assert_eq!(f.census(), vec![1, 3, 3]);
        assert!(f.is_complete());
        assert!(f.is_simplicial());
    }

    #[test]
    fn cube_fan() {
        let f = cube();
        assert_eq!(f.census(), vec![1, 8, 12, 6]);
        assert!(f.is_complete());
        assert!(!f.is_simplicial());
        for c in f.of_dim(3) {
            assert_eq!(f.cone(c).facets.len(), 4);
            assert_eq!(f.cone(c).faces.len(), 1 + 4 + 4 + 1);
        }
    }

    #[test]
    fn rank_zero() {
        let f = Fan::new(0, vec![], vec![]).unwrap();
        assert_eq!(f.len(), 1);
        assert!(f.is_complete());
        let f = Fan::new(0, vec![], vec![vec![]]).unwrap();
        assert!(f.is_complete());
    }

    #[test]
    fn incomplete_single_cone() {
        let f = Fan::new(2, vec![vec![1, 0], vec![0, 1]], vec![vec![0, 1]]).unwrap();
        assert_eq!(f.len(), 4);
        assert!(!f.is_complete());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            Fan::new(1, vec![vec![2]], vec![vec![0]]),
            Err(Error::NonPrimitiveRay(0))
        ));
        assert!(matches!(
            Fan::new(1, vec![vec![1], vec![-1]], vec![vec![0, 1]]),
            Err(Error::NotStronglyConvex(_))
        ));
        assert!(matches!(
            Fan::new(1, vec![vec![1]], vec![vec![0], vec![0]]),
            Err(Error::DuplicateCone(_))
        ));
        // Two overlapping quadrant-like cones.
        assert!(matches!(
            Fan::new(
                2,
                vec![vec![1, 0], vec![0, 1], vec![1, 1], vec![-1, 1]],
                vec![vec![0, 1], vec![2, 3]]
            ),
            Err(Error::NotAFan(_))
        ));
        assert!(matches!(
            Fan::new(2, vec![vec![1, 0], vec![0, 1], vec![1, 1]], vec![vec![0, 1, 2]]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn codim_two_relation() {
        for f in [p1(), p2(), cube()] {
            for rho in 0..f.len() {
                for &mu in &f.cone(rho).cofaces {
                    if f.cone(mu).dim != f.cone(rho).dim + 2 {
                        continue;
                    }
                    let mids: Vec<usize> = f
                        .interval(rho, mu)
                        .into_iter()
                        .filter(|&s| f.cone(s).dim == f.cone(rho).dim + 1)
                        .collect();
                    assert_eq!(mids.len(), 2);
                    let total: i32 = mids
                        .iter()
                        .map(|&s| f.incidence_sign(rho, s).unwrap() * f.incidence_sign(s, mu).unwrap())
                        .sum();
                    assert_eq!(total, 0);
                }
            }
        }
    }

    #[test]
    fn face_fan_maps_back() {
        let f = cube();
        let top = f.of_dim(3)[0];
        let (sub, map) = f.face_fan(top);
        assert_eq!(sub.len(), 10);
        assert_eq!(map.len(), 10);
        assert!(map.iter().all(|&c| f.is_face(c, top)));
    }
}
