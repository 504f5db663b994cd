//! Global cohomology of complexes on a fan and the Betti numbers derived from it.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fan::Fan;
use crate::gem::{gamma, GemComplex, Sites};
use crate::gmcx::DimTable;
use crate::ic::{build_ic, Perversity};

/// `(p, q) ↦ dim H^p(Γ(L))_q`. On an incomplete fan the numbers are still
/// exact, but they are not hypercohomology of a variety.
pub fn gamma_table(l: &GemComplex) -> DimTable {
    gamma(l).cohomology_dims()
}

/// `B_m = Σ_{p+q=m−r} dim H^p_q` for `m = 0..=2r`.
pub fn betti_from_table(table: &DimTable, rank: usize) -> Vec<usize> {
    let r = rank as i32;
    let mut b = vec![0; 2 * rank + 1];
    for (&(p, q), &n) in table {
        let m = p + q + r;
        assert!((0..=2 * r).contains(&m), "Γ cohomology at ({p},{q}) is out of range");
        b[m as usize] += n;
    }
    b
}

fn require_complete(sites: &Sites) -> Result<()> {
    if sites.fan().is_complete() {
        Ok(())
    } else {
        Err(Error::FanNotComplete)
    }
}

pub fn ih_betti(sites: &Arc<Sites>, p: &Perversity) -> Result<Vec<usize>> {
    require_complete(sites)?;
    let ic = build_ic(sites, p)?;
    Ok(betti_from_table(&gamma_table(&ic), sites.fan().rank()))
}

/// `dim H^i(Γ(ic_p))_{−j}` for `i = 0..=r`.
pub fn omega_betti(sites: &Arc<Sites>, p: &Perversity, j: i64) -> Result<Vec<usize>> {
    require_complete(sites)?;
    let rank = sites.fan().rank();
    if !(0..=rank as i64).contains(&j) {
        return Err(Error::JOutOfRange { j, rank });
    }
    let table = gamma_table(&build_ic(sites, p)?);
    Ok(omega_slice(&table, rank, j as i32))
}

pub fn omega_slice(table: &DimTable, rank: usize, j: i32) -> Vec<usize> {
    (0..=rank as i32).map(|i| table.get(&(i, -j)).copied().unwrap_or(0)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DualityViolation {
    pub i: i32,
    pub j: i32,
    pub lhs: usize,
    pub rhs: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DualityReport {
    pub ok: bool,
    pub violations: Vec<DualityViolation>,
}

/// Compares `H^i(Γ ic_p)_{−j}` with `H^{r−i}(Γ ic_{−p})_{−(r−j)}` for all `i, j`.
pub fn compare_dual_tables(t: &DimTable, t_dual: &DimTable, rank: usize) -> DualityReport {
    let r = rank as i32;
    let get = |t: &DimTable, i: i32, j: i32| t.get(&(i, -j)).copied().unwrap_or(0);
    let mut cells: Vec<(i32, i32)> = (0..=r).flat_map(|i| (0..=r).map(move |j| (i, j))).collect();
    cells.extend(t.keys().map(|&(i, q)| (i, -q)));
    cells.extend(t_dual.keys().map(|&(i, q)| (r - i, r + q)));
    cells.sort_unstable();
    cells.dedup();
    let violations: Vec<DualityViolation> = cells
        .into_iter()
        .filter_map(|(i, j)| {
            let (lhs, rhs) = (get(t, i, j), get(t_dual, r - i, r - j));
            (lhs != rhs).then_some(DualityViolation { i, j, lhs, rhs })
        })
        .collect();
    DualityReport { ok: violations.is_empty(), violations }
}

pub fn serre_duality_report(sites: &Arc<Sites>, p: &Perversity) -> Result<DualityReport> {
    require_complete(sites)?;
    let t = gamma_table(&build_ic(sites, p)?);
    let t_dual = gamma_table(&build_ic(sites, &p.dual())?);
    Ok(compare_dual_tables(&t, &t_dual, sites.fan().rank()))
}

fn binomial(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i as i64 + 1))
}

/// The h-vector `h_0..h_r` of a complete simplicial fan, from
/// `h(t) = Σ_i f_{i−1} (t − 1)^{r−i}` with `f_{i−1}` the number of `i`-dimensional cones.
pub fn h_vector_oracle(fan: &Fan) -> Result<Vec<i64>> {
    if !fan.is_complete() {
        return Err(Error::FanNotComplete);
    }
    if !fan.is_simplicial() {
        return Err(Error::NotSimplicial);
    }
    let r = fan.rank();
    let census = fan.census();
    // Coefficient of t^{r−k} collected into h[k].
    let mut h = vec![0i64; r + 1];
    for (i, &f) in census.iter().enumerate().take(r + 1) {
        let e = r - i;
        for a in 0..=e {
            let sign = if (e - a).is_multiple_of(2) { 1 } else { -1 };
            h[r - a] += f as i64 * sign * binomial(e, a);
        }
    }
    Ok(h)
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub betti: Vec<usize>,
    pub gamma: BTreeMap<String, usize>,
    pub duality: DualityReport,
}

pub fn table_json(t: &DimTable) -> BTreeMap<String, usize> {
    t.iter().map(|(&(p, q), &n)| (format!("{p},{q}"), n)).collect()
}

/// Betti numbers, the `Γ` table and the duality check for `ic_p`.
pub fn report(sites: &Arc<Sites>, p: &Perversity) -> Result<Report> {
    require_complete(sites)?;
    let rank = sites.fan().rank();
    let t = gamma_table(&build_ic(sites, p)?);
    let t_dual = gamma_table(&build_ic(sites, &p.dual())?);
    Ok(Report {
        betti: betti_from_table(&t, rank),
        gamma: table_json(&t),
        duality: compare_dual_tables(&t, &t_dual, rank),
    })
}
