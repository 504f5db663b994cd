//! Double-description conversion from an H-representation to extreme rays.

use itertools::Itertools;

use crate::exactq::{primitive_integer_vector, QMatrix, Q};

struct Generator {
    v: Vec<Q>,
    zeros: Vec<usize>,
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .map(|(x, y)| x * y)
        .sum()
}

fn normalize(v: &[Q]) -> Vec<Q> {
    primitive_integer_vector(v)
        .into_iter()
        .map(|x| Q::from_big(num_rational::BigRational::from_integer(x)))
        .collect()
}

/// Extreme rays of the pointed cone `{x : a·x ≥ 0}`, as primitive integer
/// vectors in lexicographic order. `a` must have full column rank.
pub fn extreme_rays(a: &QMatrix) -> Vec<Vec<Q>> {
    let u = a.cols();
    if u == 0 {
        return Vec::new();
    }
    let rows: Vec<Vec<Q>> = (0..a.rows()).map(|i| a.row(i).to_vec()).collect();

    let mut chosen = Vec::new();
    let mut basis_rows: Vec<Vec<Q>> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut trial = basis_rows.clone();
        trial.push(r.clone());
        if QMatrix::from_rows_with_cols(trial.clone(), u).rank() == trial.len() {
            basis_rows = trial;
            chosen.push(i);
            if chosen.len() == u {
                break;
            }
        }
    }
    assert_eq!(chosen.len(), u, "constraint matrix must have full column rank");
    let inv = QMatrix::from_rows_with_cols(basis_rows, u)
        .inverse()
        .expect("independent rows");

    let mut gens: Vec<Generator> = (0..u)
        .map(|k| Generator {
            v: normalize(&inv.col(k)),
            zeros: chosen.iter().enumerate().filter(|&(t, _)| t != k).map(|(_, &i)| i).collect(),
        })
        .collect();

    for (i, row) in rows.iter().enumerate() {
        if chosen.contains(&i) {
            continue;
        }
        let vals: Vec<Q> = gens.iter().map(|g| dot(row, &g.v)).collect();
        let pos: Vec<usize> = (0..gens.len()).filter(|&k| vals[k].signum() > 0).collect();
        let neg: Vec<usize> = (0..gens.len()).filter(|&k| vals[k].signum() < 0).collect();
        let mut next = Vec::new();
        for (p, n) in pos.iter().cartesian_product(neg.iter()) {
            let common: Vec<usize> = gens[*p]
                .zeros
                .iter()
                .filter(|z| gens[*n].zeros.contains(z))
                .copied()
                .collect();
            if common.len() + 2 < u {
                continue;
            }
            let tight = QMatrix::from_rows_with_cols(common.iter().map(|&z| rows[z].clone()).collect(), u);
            if tight.rank() + 2 != u {
                continue;
            }
            let (vp, vn) = (&vals[*p], &vals[*n]);
            let v: Vec<Q> = gens[*p]
                .v
                .iter()
                .zip(&gens[*n].v)
                .map(|(x, y)| &(vp * y) - &(vn * x))
                .collect();
            let mut zeros = common;
            zeros.push(i);
            next.push(Generator { v: normalize(&v), zeros });
        }
        for (k, g) in gens.into_iter().enumerate() {
            if vals[k].signum() >= 0 {
                let mut g = g;
                if vals[k].is_zero() {
                    g.zeros.push(i);
                }
                next.push(g);
            }
        }
        gens = next;
    }

    let mut out: Vec<Vec<Q>> = gens.into_iter().map(|g| g.v).collect();
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&x| Q::from_int(x)).collect()
    }

    #[test]
    fn orthant() {
        let rays = extreme_rays(&QMatrix::identity(3));
        assert_eq!(rays, vec![q(&[0, 0, 1]), q(&[0, 1, 0]), q(&[1, 0, 0])]);
    }

    #[test]
    fn square_cone_dual() {
        // Dual of the cone over a square with rays (±1,±1,1).
        let a = QMatrix::from_i64_rows(&[vec![1, 1, 1], vec![1, -1, 1], vec![-1, 1, 1], vec![-1, -1, 1]]);
        let rays = extreme_rays(&a);
        assert_eq!(
            rays,
            vec![q(&[-1, 0, 1]), q(&[0, -1, 1]), q(&[0, 1, 1]), q(&[1, 0, 1])]
        );
    }

    #[test]
    fn line_has_no_rays() {
        let a = QMatrix::from_i64_rows(&[vec![1], vec![-1]]);
        assert!(extreme_rays(&a).is_empty());
    }

    #[test]
    fn redundant_constraints() {
        let a = QMatrix::from_i64_rows(&[vec![1, 0], vec![0, 1], vec![1, 1], vec![2, 1]]);
        assert_eq!(extreme_rays(&a), vec![q(&[0, 1]), q(&[1, 0])]);
    }
}
