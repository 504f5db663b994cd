use std::collections::{BTreeMap, BTreeSet};

use super::Fan;
use crate::error::{Error, Result};
use crate::exactq::{QMatrix, Q};

pub type ConeSet = BTreeSet<usize>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ZLabel {
    Cone(usize),
    Apex,
}

/// A cochain complex of free Z-modules with one generator per label.
#[derive(Clone, Debug, Default)]
pub struct ZComplex {
    pub labels: BTreeMap<i32, Vec<ZLabel>>,
    /// `d[i]` maps degree `i` to degree `i + 1`.
    pub d: BTreeMap<i32, QMatrix>,
}

impl ZComplex {
    fn dim(&self, i: i32) -> usize {
        self.labels.get(&i).map_or(0, Vec::len)
    }

    fn rank(&self, i: i32) -> usize {
        self.d.get(&i).map_or(0, QMatrix::rank)
    }

    /// Rational Betti numbers by degree, omitting zeros.
    pub fn betti(&self) -> BTreeMap<i32, usize> {
        self.labels
            .keys()
            .map(|&i| (i, self.dim(i) - self.rank(i) - self.rank(i - 1)))
            .filter(|&(_, b)| b > 0)
            .collect()
    }

    pub fn squares_to_zero(&self) -> bool {
        self.d.iter().all(|(i, m)| match self.d.get(&(i + 1)) {
            Some(n) => n.mul(m).is_zero(),
            None => true,
        })
    }
}

pub fn is_locally_star_closed(fan: &Fan, phi: &ConeSet) -> bool {
    phi.iter().all(|&s| {
        fan.cone(s)
            .cofaces
            .iter()
            .filter(|rho| phi.contains(rho))
            .all(|&rho| fan.interval(s, rho).iter().all(|t| phi.contains(t)))
    })
}

pub fn is_one_complete(fan: &Fan, phi: &ConeSet) -> bool {
    let r = fan.rank();
    if r == 0 {
        return true;
    }
    phi.iter()
        .filter(|&&s| fan.cone(s).dim == r - 1)
        .all(|&s| {
            fan.cone(s)
                .cofaces
                .iter()
                .filter(|t| phi.contains(t) && fan.cone(**t).dim == r)
                .count()
                == 2
        })
}

/// The incidence complex `E(Φ, Z)`, optionally augmented by the apex in degree `r + 1`.
pub fn e_complex(fan: &Fan, phi: &ConeSet, augmented: bool) -> Result<ZComplex> {
    if !is_locally_star_closed(fan, phi) {
        return Err(Error::NotLocallyStarClosed);
    }
    if augmented && !is_one_complete(fan, phi) {
        return Err(Error::NotOneComplete);
    }
    let mut labels: BTreeMap<i32, Vec<ZLabel>> = BTreeMap::new();
    for &s in phi {
        labels.entry(fan.cone(s).dim as i32).or_default().push(ZLabel::Cone(s));
    }
    let r = fan.rank() as i32;
    if augmented {
        labels.insert(r + 1, vec![ZLabel::Apex]);
    }
    let mut d = BTreeMap::new();
    for (&i, src) in &labels {
        let Some(dst) = labels.get(&(i + 1)) else {
            continue;
        };
        let mut m = QMatrix::zeros(dst.len(), src.len());
        for (a, t) in dst.iter().enumerate() {
            for (b, s) in src.iter().enumerate() {
                let ZLabel::Cone(s) = *s else { continue };
                let v = match *t {
                    ZLabel::Apex => 1,
                    ZLabel::Cone(t) => fan.incidence_sign(s, t).unwrap_or(0),
                };
                if v != 0 {
                    m[(a, b)] = Q::from_int(v as i64);
                }
            }
        }
        d.insert(i, m);
    }
    Ok(ZComplex { labels, d })
}

/// True iff the complex has no rational cohomology.
pub fn is_acyclic_z(c: &ZComplex) -> bool {
    c.betti().is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fan::tests::{p1, p2};

    #[test]
    fn single_cone() {
        let f = p2();
        let top = f.of_dim(2)[0];
        let c = e_complex(&f, &ConeSet::from([top]), false).unwrap();
        assert_eq!(c.betti(), BTreeMap::from([(2, 1)]));
        assert!(!is_acyclic_z(&c));
        assert!(is_acyclic_z(&ZComplex::default()));
    }

    #[test]
    fn p1_top_layer() {
        let f = p1();
        let phi: ConeSet = [1, 2].into();
        let plain = e_complex(&f, &phi, false).unwrap();
        assert_eq!(plain.betti(), BTreeMap::from([(1, 2)]));
        let full: ConeSet = f.star(0).into_iter().collect();
        let c = e_complex(&f, &full, false).unwrap();
        assert_eq!(c.betti(), BTreeMap::from([(1, 1)]));
        let aug = e_complex(&f, &full, true).unwrap();
        assert!(aug.squares_to_zero());
        assert!(is_acyclic_z(&aug));
    }

    #[test]
    fn stars_are_acyclic() {
        let f = p2();
        for s in 0..f.len() {
            let phi: ConeSet = f.star(s).into_iter().collect();
            let c = e_complex(&f, &phi, true).unwrap();
            assert!(c.squares_to_zero());
            assert!(is_acyclic_z(&c), "star of {s}");
        }
    }

    #[test]
    fn rejects_gaps() {
        let f = p2();
        let top = f.of_dim(2)[0];
        let phi: ConeSet = [0, top].into();
        assert!(matches!(e_complex(&f, &phi, false), Err(Error::NotLocallyStarClosed)));
        let phi: ConeSet = [f.cone(top).facets[0], top].into();
        assert!(matches!(e_complex(&f, &phi, true), Err(Error::NotOneComplete)));
    }
}
