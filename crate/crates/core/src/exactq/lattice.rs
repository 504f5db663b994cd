use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{decompose, QMatrix, Q};

/// Column operations on integer columns, pivoting on the first `nrows`
/// coordinates only. Returns the number of pivots; afterwards the first
/// `rank` columns are in column Hermite normal form on those coordinates and
/// the remaining columns vanish there.
fn column_hnf(cols: &mut [Vec<BigInt>], nrows: usize) -> usize {
    let mut c = 0;
    for i in 0..nrows {
        if c == cols.len() {
            break;
        }
        loop {
            // Euclid across columns c.. on row i until a single nonzero entry remains.
            let nz: Vec<usize> = (c..cols.len()).filter(|&j| !cols[j][i].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let p = *nz.iter().min_by(|&&a, &&b| cols[a][i].abs().cmp(&cols[b][i].abs())).unwrap();
            cols.swap(c, p);
            if nz.len() == 1 {
                break;
            }
            let piv = cols[c][i].clone();
            for j in c + 1..cols.len() {
                if cols[j][i].is_zero() {
                    continue;
                }
                let f = cols[j][i].div_floor(&piv);
                let (src, dst) = split_pair(cols, c, j);
                for (d, s) in dst.iter_mut().zip(src.iter()) {
                    *d -= &f * s;
                }
            }
        }
        if c == cols.len() || cols[c][i].is_zero() {
            continue;
        }
        if cols[c][i].is_negative() {
            for x in cols[c].iter_mut() {
                *x = -x.clone();
            }
        }
        let piv = cols[c][i].clone();
        for l in 0..c {
            let f = cols[l][i].div_floor(&piv);
            if f.is_zero() {
                continue;
            }
            let (src, dst) = split_pair(cols, c, l);
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d -= &f * s;
            }
        }
        c += 1;
    }
    c
}

fn split_pair<T>(v: &mut [T], src: usize, dst: usize) -> (&T, &mut T) {
    assert_ne!(src, dst);
    if src < dst {
        let (a, b) = v.split_at_mut(dst);
        (&a[src], &mut b[0])
    } else {
        let (a, b) = v.split_at_mut(src);
        (&b[0], &mut a[dst])
    }
}

fn to_int(q: &Q) -> BigInt {
    assert!(q.is_integer(), "expected an integer entry, got {q}");
    q.numer()
}

/// Scales a rational vector to a primitive integer vector with the same direction.
pub fn primitive_integer_vector(v: &[Q]) -> Vec<BigInt> {
    let mut l = BigInt::one();
    for x in v {
        l = l.lcm(&x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| (x.numer() * &l) / x.denom()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

/// A Z-basis of the integer points of `ker(m)` for an integer matrix `m`.
pub fn integer_kernel(m: &QMatrix) -> QMatrix {
    let (rows, n) = (m.rows(), m.cols());
    let mut cols: Vec<Vec<BigInt>> = (0..n)
        .map(|j| {
            let mut c: Vec<BigInt> = (0..rows).map(|i| to_int(&m[(i, j)])).collect();
            c.extend((0..n).map(|k| if k == j { BigInt::one() } else { BigInt::zero() }));
            c
        })
        .collect();
    let rank = column_hnf(&mut cols, rows);
    let kernel: Vec<Vec<Q>> = cols[rank..]
        .iter()
        .map(|c| c[rows..].iter().map(big_to_q).collect())
        .collect();
    QMatrix::from_cols(n, &kernel)
}

fn big_to_q(x: &BigInt) -> Q {
    Q::from_big(BigRational::from_integer(x.clone()))
}

/// Canonical column Hermite normal form of the lattice generated by the
/// integer columns of `gens`, with zero columns dropped.
pub fn column_hnf_basis(gens: &QMatrix) -> QMatrix {
    let r = gens.rows();
    let mut cols: Vec<Vec<BigInt>> = (0..gens.cols())
        .map(|j| (0..r).map(|i| to_int(&gens[(i, j)])).collect())
        .collect();
    let rank = column_hnf(&mut cols, r);
    let basis: Vec<Vec<Q>> = cols[..rank].iter().map(|c| c.iter().map(big_to_q).collect()).collect();
    QMatrix::from_cols(r, &basis)
}

/// Canonical Z-basis (column Hermite normal form) of the saturated lattice
/// `Z^r ∩ span_Q(gens)`.
pub fn hnf_lattice_basis(gens: &QMatrix) -> QMatrix {
    let r = gens.rows();
    let span = decompose(gens).image;
    if span.cols() == 0 {
        return QMatrix::zeros(r, 0);
    }
    // Integer normals to the span; the saturation is their common integer kernel.
    let normals = decompose(&span.transpose()).kernel;
    let normal_rows: Vec<Vec<Q>> = (0..normals.cols())
        .map(|j| primitive_integer_vector(&normals.col(j)).iter().map(big_to_q).collect())
        .collect();
    let constraint = QMatrix::from_rows_with_cols(normal_rows, r);
    column_hnf_basis(&integer_kernel(&constraint))
}
