//! Exhaustive membership and closeness checks for set functions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::itemset::{all_bundles, ItemSet};
use crate::simplex::{self, Cmp, LpProblem, LpStatus};
use crate::valuation::{tabulate, SetFunction, ValuationSpec};

/// Outcome of a membership check: `witness` is set exactly when the property fails.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict<W> {
    pub holds: bool,
    pub witness: Option<W>,
}

impl<W> Verdict<W> {
    fn from_witness(witness: Option<W>) -> Verdict<W> {
        Verdict { holds: witness.is_none(), witness }
    }
}

/// `max(1, max |v(S)|)`, the scale for absolute slacks.
pub fn value_scale(values: &[f64]) -> f64 {
    values.iter().fold(1.0f64, |a, x| a.max(x.abs()))
}

/// Fails with `(S, j)` when `v(S + j) < v(S)`.
pub fn is_monotone<F: SetFunction + ?Sized>(v: &F) -> Verdict<(ItemSet, usize)> {
    let m = v.num_items();
    let t = tabulate(v);
    let tol = 1e-12 * value_scale(&t);
    for s in all_bundles(m) {
        for j in 0..m {
            if !s.contains(j) && t[s.with(j).index()] < t[s.index()] - tol {
                return Verdict::from_witness(Some((s, j)));
            }
        }
    }
    Verdict::from_witness(None)
}

/// Fails with `(S, a, b)` when `v(S+a) + v(S+b) < v(S+a+b) + v(S)`.
pub fn is_submodular<F: SetFunction + ?Sized>(v: &F) -> Verdict<(ItemSet, usize, usize)> {
    let m = v.num_items();
    let t = tabulate(v);
    let tol = 1e-12 * value_scale(&t);
    for s in all_bundles(m) {
        for a in 0..m {
            if s.contains(a) {
                continue;
            }
            for b in a + 1..m {
                if s.contains(b) {
                    continue;
                }
                let lhs = t[s.with(a).index()] + t[s.with(b).index()];
                let rhs = t[s.with(a).with(b).index()] + t[s.index()];
                if lhs < rhs - tol {
                    return Verdict::from_witness(Some((s, a, b)));
                }
            }
        }
    }
    Verdict::from_witness(None)
}

/// Per-item marginal table: `out[S] = v(j | S)` for `S ∌ j`, `+∞` for `S ∋ j`.
/// Marginals within `zero` of zero are snapped to zero.
fn marginal_table(t: &[f64], j: usize, zero: f64) -> Vec<f64> {
    let bit = 1usize << j;
    (0..t.len())
        .map(|s| {
            if s & bit != 0 {
                f64::INFINITY
            } else {
                let d = t[s | bit] - t[s];
                if d.abs() <= zero {
                    0.0
                } else {
                    d
                }
            }
        })
        .collect()
}

fn ratio(num: f64, den: f64) -> f64 {
    match (num > 0.0, den > 0.0) {
        (false, _) => 1.0,
        (true, false) => f64::INFINITY,
        (true, true) => num / den,
    }
}

/// Smallest `α ≥ 1` with `α·v(j | S) ≥ v(j | T)` for all `S ⊆ T`, `j ∉ T`. Uses the
/// conventions `0/0 → 1` and `positive/0 → ∞`. Marginals below `1e-12` times the value
/// scale count as zero.
pub fn alpha_of<F: SetFunction + ?Sized>(v: &F) -> f64 {
    let m = v.num_items();
    let t = tabulate(v);
    let zero = 1e-12 * value_scale(&t);
    let mut alpha = 1.0f64;
    for j in 0..m {
        let marg = marginal_table(&t, j, zero);
        // g[T] = min over S ⊆ T of v(j | S), by a subset-min transform skipping bit j.
        let mut g = marg.clone();
        for k in (0..m).filter(|&k| k != j) {
            let bit = 1usize << k;
            for s in 0..g.len() {
                if s & bit != 0 && g[s ^ bit] < g[s] {
                    g[s] = g[s ^ bit];
                }
            }
        }
        for s in 0..t.len() {
            if s & (1 << j) == 0 {
                alpha = alpha.max(ratio(marg[s], g[s]));
            }
        }
        if alpha.is_infinite() {
            break;
        }
    }
    alpha
}

/// Closeness of each item's marginal function to the nonincreasing function that takes the
/// highest admissible value: `g_j(S) = min_{T ⊆ S} v(j | T)`. Returns `max_j max_S v(j|S)/g_j(S) − 1`.
/// Computed by removing one item at a time, independently of [`alpha_of`].
pub fn decreasing_marginal_fit<F: SetFunction + ?Sized>(v: &F) -> f64 {
    let m = v.num_items();
    let t = tabulate(v);
    let zero = 1e-12 * value_scale(&t);
    let mut worst = 1.0f64;
    for j in 0..m {
        let marg = marginal_table(&t, j, zero);
        let mut g = vec![f64::INFINITY; t.len()];
        // Process bundles by increasing size so that every S − k is final before S.
        let mut order: Vec<usize> = (0..t.len()).filter(|s| s & (1 << j) == 0).collect();
        order.sort_by_key(|s| s.count_ones());
        for s in order {
            let mut best = marg[s];
            for k in ItemSet(s as u32).iter() {
                best = best.min(g[s & !(1 << k)]);
            }
            g[s] = best;
            worst = worst.max(ratio(marg[s], best));
        }
    }
    worst - 1.0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Curvature {
    Value(f64),
    /// Every singleton marginal is zero.
    AllZeroSingletons,
    /// Item `item` has zero singleton marginal but a positive marginal at `bundle`.
    ZeroSingletonGrows { item: usize, bundle: ItemSet },
}

/// Smallest `c` with `v(j | S) ≥ (1 − c)·v(j | ∅)` for all `j`, `S ∌ j`.
pub fn curvature_of<F: SetFunction + ?Sized>(v: &F) -> Curvature {
    let m = v.num_items();
    let t = tabulate(v);
    let zero = 1e-12 * value_scale(&t);
    let mut min_ratio = f64::INFINITY;
    let mut any_positive = false;
    for j in 0..m {
        let marg = marginal_table(&t, j, zero);
        let single = marg[0];
        if single > 0.0 {
            any_positive = true;
        }
        for s in 0..t.len() {
            if s & (1 << j) != 0 {
                continue;
            }
            if single > 0.0 {
                min_ratio = min_ratio.min(marg[s] / single);
            } else if marg[s] > 0.0 {
                return Curvature::ZeroSingletonGrows { item: j, bundle: ItemSet(s as u32) };
            }
        }
    }
    if !any_positive {
        return Curvature::AllZeroSingletons;
    }
    Curvature::Value((1.0 - min_ratio).max(0.0))
}

/// Exchange test: for all `S`, `T` and `i ∈ S∖T` there is `j ∈ (T∖S) ∪ {none}` with
/// `v(S) + v(T) ≤ v(S − i + j) + v(T + i − j)`. Fails with `(S, T, i)`.
pub fn is_gross_substitutes<F: SetFunction + ?Sized>(v: &F) -> Verdict<(ItemSet, ItemSet, usize)> {
    let m = v.num_items();
    assert!(m <= 16, "the exchange test is limited to 16 items");
    let t = tabulate(v);
    let tol = 1e-9 * value_scale(&t);
    for s in all_bundles(m) {
        for tt in all_bundles(m) {
            let lhs = t[s.index()] + t[tt.index()];
            for i in s.difference(tt).iter() {
                let s_minus = s.without(i);
                let t_plus = tt.with(i);
                let mut ok = lhs <= t[s_minus.index()] + t[t_plus.index()] + tol;
                if !ok {
                    ok = tt.difference(s).iter().any(|j| lhs <= t[s_minus.with(j).index()] + t[t_plus.without(j).index()] + tol);
                }
                if !ok {
                    return Verdict::from_witness(Some((s, tt, i)));
                }
            }
        }
    }
    Verdict::from_witness(None)
}

/// Smallest `ε` with `base(S) ≤ v(S) ≤ (1+ε)·base(S)` for every bundle.
pub fn epsilon_between<F: SetFunction + ?Sized, G: SetFunction + ?Sized>(v: &F, base: &G) -> Result<f64> {
    let m = v.num_items();
    if base.num_items() != m {
        return Err(Error::Dimension("valuations are over different item counts".into()));
    }
    let mut eps = 0.0f64;
    for s in all_bundles(m) {
        let (x, b) = (v.value(s), base.value(s));
        let tol = 1e-12 * b.abs().max(1.0);
        if x < b - tol {
            return Err(Error::LowerSandwich { bundle: s, value: x, base: b });
        }
        if b <= 0.0 {
            if x > tol {
                return Err(Error::ZeroBase { bundle: s, value: x });
            }
            continue;
        }
        eps = eps.max(x / b - 1.0);
    }
    Ok(eps)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    /// `f64::INFINITY` when no linear function sandwiches `v`.
    pub epsilon: f64,
    /// Fitted linear valuation with `ℓ ≤ v ≤ (1+ε)ℓ`, when one exists.
    pub fitted: Option<ValuationSpec>,
    /// A bundle with positive value that the fitted function values at zero.
    pub violating: Option<ItemSet>,
}

/// Given a nonnegative candidate `(c, l)`, rescales it to touch `v` from below and returns
/// the exact closeness it certifies.
pub fn certify_linear(values: &[f64], m: usize, c: f64, l: &[f64]) -> FitResult {
    let c = c.max(0.0);
    let l: Vec<f64> = l.iter().map(|x| x.max(0.0)).collect();
    let lin = |s: ItemSet| c + s.iter().map(|j| l[j]).sum::<f64>();
    let scale = value_scale(values);
    let mut shrink = f64::INFINITY;
    for s in all_bundles(m) {
        let ls = lin(s);
        if ls > 0.0 {
            shrink = shrink.min(values[s.index()] / ls);
        }
    }
    let pos = values.iter().enumerate().filter(|(_, x)| **x > 1e-12 * scale);
    if !shrink.is_finite() || shrink <= 0.0 {
        let witness = pos.max_by(|a, b| a.1.total_cmp(b.1)).map(|(s, _)| ItemSet(s as u32));
        return match witness {
            None => FitResult { epsilon: 0.0, fitted: Some(ValuationSpec::Linear { c: 0.0, l: vec![0.0; m] }), violating: None },
            Some(w) => FitResult { epsilon: f64::INFINITY, fitted: None, violating: Some(w) },
        };
    }
    let c = c * shrink;
    let l: Vec<f64> = l.iter().map(|x| x * shrink).collect();
    let lin = |s: ItemSet| c + s.iter().map(|j| l[j]).sum::<f64>();
    let mut eps = 0.0f64;
    for s in all_bundles(m) {
        let (x, ls) = (values[s.index()], lin(s));
        if ls <= 0.0 {
            if x > 1e-12 * scale {
                return FitResult { epsilon: f64::INFINITY, fitted: None, violating: Some(s) };
            }
            continue;
        }
        eps = eps.max(x / ls - 1.0);
    }
    FitResult { epsilon: eps, fitted: Some(ValuationSpec::Linear { c, l }), violating: None }
}

/// Smallest `ε` such that some linear `ℓ = c + Σ l_j` (with `c, l ≥ 0`) satisfies
/// `ℓ ≤ v ≤ (1+ε)ℓ`. Solves `max λ` subject to `ℓ(S) ≤ v(S)` and `λ·v(S) ≤ ℓ(S)` through its
/// dual, which has `m + 2` rows; then `ε = 1/λ − 1`, certified against the fitted `ℓ`.
pub fn fit_linear_closeness<F: SetFunction + ?Sized>(v: &F) -> Result<FitResult> {
    let m = v.num_items();
    if m > 12 {
        return Err(Error::Precondition(format!("linear fitting is limited to 12 items, got {m}")));
    }
    let values = tabulate(v);
    if values.iter().any(|x| *x < 0.0) {
        return Err(Error::Precondition("linear fitting needs a nonnegative valuation".into()));
    }
    let lam_row = m + 1;
    let mut cmp = vec![Cmp::Ge; m + 2];
    cmp[lam_row] = Cmp::Ge;
    let mut rhs = vec![0.0; m + 2];
    rhs[lam_row] = 1.0;
    let mut lp = LpProblem::new(cmp, rhs);
    for s in all_bundles(m) {
        let vs = values[s.index()];
        let mut y = vec![(0, 1.0)];
        y.extend(s.iter().map(|j| (j + 1, 1.0)));
        lp.add_column(-vs, y);
        let mut z = vec![(0, -1.0)];
        z.extend(s.iter().map(|j| (j + 1, -1.0)));
        if vs != 0.0 {
            z.push((lam_row, vs));
        }
        lp.add_column(0.0, z);
    }
    lp.add_column(-1.0, vec![(lam_row, 1.0)]);
    let res = simplex::solve(&lp)?;
    if res.status != LpStatus::Optimal {
        return Err(Error::Simplex(format!("closeness LP ended with status {:?}", res.status)));
    }
    let c = -res.duals[0];
    let l: Vec<f64> = (0..m).map(|j| -res.duals[j + 1]).collect();
    Ok(certify_linear(&values, m, c, &l))
}

/// Bisection on `ε` with a feasibility LP per step (`ℓ(S) ≤ v(S) ≤ (1+ε)ℓ(S)` over `c, l ≥ 0`).
/// Has `2^(m+1)` rows; intended for small `m` as a cross-check of [`fit_linear_closeness`].
pub fn fit_linear_closeness_bisect<F: SetFunction + ?Sized>(v: &F, tol: f64) -> Result<FitResult> {
    let m = v.num_items();
    let values = tabulate(v);
    let feasible = |eps: f64| -> Result<Option<(f64, Vec<f64>)>> {
        let mut cmp = Vec::new();
        let mut rhs = Vec::new();
        for s in all_bundles(m) {
            cmp.push(Cmp::Le);
            rhs.push(values[s.index()]);
            cmp.push(Cmp::Ge);
            rhs.push(values[s.index()] / (1.0 + eps));
        }
        let mut lp = LpProblem::new(cmp, rhs);
        let rows_with = |pred: &dyn Fn(ItemSet) -> bool| -> Vec<(usize, f64)> {
            all_bundles(m).filter(|s| pred(*s)).flat_map(|s| [(2 * s.index(), 1.0), (2 * s.index() + 1, 1.0)]).collect()
        };
        lp.add_column(0.0, rows_with(&|_| true));
        for j in 0..m {
            lp.add_column(0.0, rows_with(&|s| s.contains(j)));
        }
        let r = simplex::solve(&lp)?;
        Ok(match r.status {
            LpStatus::Optimal => Some((r.x[0], r.x[1..].to_vec())),
            _ => None,
        })
    };
    let hi0 = 1e6;
    let Some(mut best) = feasible(hi0)? else {
        // The all-zero candidate reports a positive bundle as the witness.
        return Ok(certify_linear(&values, m, 0.0, &vec![0.0; m]));
    };
    let (mut lo, mut hi) = (0.0, hi0);
    if let Some(sol) = feasible(0.0)? {
        return Ok(certify_linear(&values, m, sol.0, &sol.1));
    }
    while hi - lo > tol * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        match feasible(mid)? {
            Some(sol) => {
                hi = mid;
                best = sol;
            }
            None => lo = mid,
        }
    }
    let mut fit = certify_linear(&values, m, best.0, &best.1);
    fit.epsilon = fit.epsilon.min(hi);
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::Table;

    fn complements() -> Table {
        Table::new(2, vec![0.0, 0.0, 0.0, 1.0])
    }

    #[test]
    fn monotonicity_witness() {
        let t = Table::new(2, vec![0.0, 1.0, 1.0, 0.5]);
        let r = is_monotone(&t);
        assert!(!r.holds);
        assert_eq!(r.witness, Some((ItemSet::singleton(0), 1)));
        let lin = ValuationSpec::Linear { c: 1.0, l: vec![1.0, 0.0, 2.0] };
        assert!(is_monotone(&lin.bind(3)).holds);
    }

    #[test]
    fn complements_are_not_submodular_and_have_unbounded_alpha() {
        assert!(!is_submodular(&complements()).holds);
        assert_eq!(alpha_of(&complements()), f64::INFINITY);
        assert!(is_submodular(&ValuationSpec::Linear { c: 0.0, l: vec![1.0, 2.0] }.bind(2)).holds);
    }

    #[test]
    fn curvature_examples() {
        assert_eq!(curvature_of(&ValuationSpec::Additive { l: vec![1.0, 2.0, 3.0] }.bind(3)), Curvature::Value(0.0));
        assert_eq!(curvature_of(&ValuationSpec::UnitDemand { rho: vec![1.0, 1.0] }.bind(2)), Curvature::Value(1.0));
        assert_eq!(curvature_of(&Table::new(1, vec![3.0, 3.0])), Curvature::AllZeroSingletons);
        assert!(matches!(curvature_of(&complements()), Curvature::ZeroSingletonGrows { .. }));
    }

    #[test]
    fn unit_demand_pair_needs_factor_two() {
        let v = ValuationSpec::UnitDemand { rho: vec![1.0, 1.0] };
        let f = fit_linear_closeness(&v.bind(2)).unwrap();
        assert!((f.epsilon - 1.0).abs() < 1e-9, "{f:?}");
        let b = fit_linear_closeness_bisect(&v.bind(2), 1e-7).unwrap();
        assert!((b.epsilon - 1.0).abs() < 1e-6, "{b:?}");
    }

    #[test]
    fn exact_linear_fits_with_zero() {
        let v = ValuationSpec::Linear { c: 0.7, l: vec![1.0, 0.0, 2.5, 0.3] };
        let f = fit_linear_closeness(&v.bind(4)).unwrap();
        assert!(f.epsilon < 1e-9, "{f:?}");
        let Some(ValuationSpec::Linear { c, l }) = f.fitted else { panic!() };
        assert!((c - 0.7).abs() < 1e-6);
        for (a, b) in l.iter().zip([1.0, 0.0, 2.5, 0.3]) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn complements_have_no_linear_sandwich() {
        let f = fit_linear_closeness(&complements()).unwrap();
        assert_eq!(f.epsilon, f64::INFINITY);
        assert_eq!(f.violating, Some(ItemSet::full(2)));
    }

    #[test]
    fn epsilon_between_errors() {
        let a = Table::new(1, vec![0.0, 2.0]);
        let b = Table::new(1, vec![0.0, 1.0]);
        assert!((epsilon_between(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(epsilon_between(&b, &a), Err(Error::LowerSandwich { .. })));
        let z = Table::new(1, vec![0.0, 0.0]);
        assert!(matches!(epsilon_between(&a, &z), Err(Error::ZeroBase { .. })));
        assert_eq!(epsilon_between(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn gross_substitutes_simple_cases() {
        assert!(is_gross_substitutes(&ValuationSpec::Additive { l: vec![1.0, 2.0, 0.5] }.bind(3)).holds);
        assert!(is_gross_substitutes(&ValuationSpec::UnitDemand { rho: vec![1.0, 2.0, 0.5] }.bind(3)).holds);
        assert!(!is_gross_substitutes(&complements()).holds);
    }
}
