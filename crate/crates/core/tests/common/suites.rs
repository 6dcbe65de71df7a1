//! Property suites over random instances, each driven by a single seed.

use rand::seq::SliceRandom;
use rand::Rng;
use welfare_lab::equilibrium::beta_si_probe;
use welfare_lab::itemset::all_bundles;
use welfare_lab::properties::{
    alpha_of, curvature_of, decreasing_marginal_fit, epsilon_between, fit_linear_closeness, is_gross_substitutes, is_submodular,
    value_scale, Curvature,
};
use welfare_lab::valuation::{random_perturbation, smooth_perturbation, tabulate, Region};
use welfare_lab::{ItemSet, SetFunction, Table, ValuationSpec};

use super::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a.is_infinite() && b.is_infinite()) || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Coverage with a private region per item, so curvature stays below one.
fn bounded_curvature_coverage(rng: &mut ChaCha8Rng, m: usize) -> ValuationSpec {
    let mut regions: Vec<Region> = (0..m).map(|j| Region { w: 0.2 + rng.random::<f64>(), items: ItemSet::singleton(j) }).collect();
    for _ in 0..rng.random_range(0..=m) {
        regions.push(Region { w: rng.random::<f64>(), items: random_set(rng, m, 0.5) });
    }
    ValuationSpec::Coverage { regions }
}

/// Marginal ratio `num/den` with the zero conventions: `0/0 = 1`, `x/0 = ∞` for `x > 0`.
fn ratio(num: f64, den: f64, zero: f64) -> f64 {
    let (num, den) = (if num <= zero { 0.0 } else { num }, if den <= zero { 0.0 } else { den });
    match (num == 0.0, den == 0.0) {
        (true, _) => 1.0,
        (false, true) => f64::INFINITY,
        _ => num / den,
    }
}

/// Marginal-decrease factor by direct comparison of every pair `S ⊆ T`, and the smallest `ε` for
/// which each `v(j | ·)` is `ε`-close to the nonincreasing `g_j(S) = min_{T ⊆ S} v(j | T)`.
fn alpha_and_fit_by_enumeration(m: usize, t: &[f64]) -> (f64, f64) {
    let zero = 1e-12 * value_scale(t);
    let marg = |j: usize, s: ItemSet| t[s.with(j).index()] - t[s.index()];
    let (mut alpha, mut fit) = (1.0f64, 0.0f64);
    for j in 0..m {
        let rest = ItemSet::full(m).without(j);
        for big in rest.subsets() {
            let mut g = f64::INFINITY;
            for small in big.subsets() {
                alpha = alpha.max(ratio(marg(j, big), marg(j, small), zero));
                g = g.min(marg(j, small));
            }
            fit = fit.max(ratio(marg(j, big), g, zero) - 1.0);
        }
    }
    (alpha, fit)
}

/// Decreasing-marginal closeness and marginal-decrease factor agree, on both routes.
pub fn decreasing_marginals(seed: u64) -> Result<(), String> {
    let mut rng = rng(seed);
    let m = rng.random_range(1..=6);
    let spec = if rng.random::<bool>() {
        ValuationSpec::Table { values: monotone_table(&mut rng, m) }
    } else {
        let base = bounded_curvature_coverage(&mut rng, m);
        smooth_perturbation(&base, m, 0.5 * rng.random::<f64>(), rng.random_range(0.3..1.0))
    };
    let v = spec.bind(m);
    let (alpha, fit) = alpha_and_fit_by_enumeration(m, &tabulate(&v));
    let got_alpha = alpha_of(&v);
    let got_fit = decreasing_marginal_fit(&v);
    if !close(got_alpha, alpha, 1e-9) {
        return Err(format!("alpha_of {got_alpha} vs enumeration {alpha}"));
    }
    if !close(got_fit, fit, 1e-9) {
        return Err(format!("decreasing_marginal_fit {got_fit} vs enumeration {fit}"));
    }
    if !close(got_alpha, 1.0 + got_fit, 1e-9) {
        return Err(format!("alpha {got_alpha} but fit {got_fit}"));
    }
    Ok(())
}

/// Marginals of an `ε`-close pair differ by at most the stated error terms.
pub fn close_marginals(seed: u64) -> Result<(), String> {
    let mut rng = rng(seed);
    let m = rng.random_range(1..=6);
    let vp = monotone_table(&mut rng, m);
    let eps = 0.5 * rng.random::<f64>();
    let v: Vec<f64> = vp.iter().map(|x| x * (1.0 + eps * rng.random::<f64>())).collect();
    let (tv, tvp) = (Table::new(m, v.clone()), Table::new(m, vp.clone()));
    let e = epsilon_between(&tv, &tvp).map_err(|e| e.to_string())?;
    let tol = 1e-12 * value_scale(&v);
    for s in all_bundles(m) {
        for t in all_bundles(m) {
            let u = s.union(t).index();
            let (dv, dvp) = (v[u] - v[t.index()], vp[u] - vp[t.index()]);
            if dvp - e * vp[t.index()] > dv + tol || dv > dvp + e * vp[u] + tol {
                return Err(format!("S = {s}, T = {t}: v(S|T) = {dv}, v'(S|T) = {dvp}, eps = {e}"));
            }
        }
    }
    Ok(())
}

/// Marginal-decrease factor plus curvature bound the linear-closeness fit.
pub fn curvature_bound(seed: u64) -> Result<(), String> {
    let mut rng = rng(seed);
    let m = rng.random_range(1..=8);
    let base = bounded_curvature_coverage(&mut rng, m);
    let spec = smooth_perturbation(&base, m, 0.3 * rng.random::<f64>(), rng.random_range(0.3..1.0));
    let v = spec.bind(m);
    let alpha = alpha_of(&v);
    let Curvature::Value(c) = curvature_of(&v) else { return Err("curvature undefined".into()) };
    if c >= 1.0 {
        return Err(format!("curvature {c}"));
    }
    let fit = fit_linear_closeness(&v).map_err(|e| e.to_string())?.epsilon;
    let bound = (alpha - 1.0 + c) / (1.0 - c);
    if fit > bound + 1e-6 {
        return Err(format!("fit {fit} exceeds (α−1+c)/(1−c) = {bound} with α = {alpha}, c = {c}"));
    }
    Ok(())
}

/// Library gross-substitutes classes pass the checker, and passing implies submodular.
pub fn hierarchy(seed: u64) -> Result<(), String> {
    let mut rng = rng(seed);
    let m = rng.random_range(1..=6);
    let gs = random_gs(&mut rng, m);
    let v = gs.bind(m);
    if !is_gross_substitutes(&v).holds {
        return Err(format!("{} failed the gross-substitutes check", gs.kind()));
    }
    if !is_submodular(&v).holds {
        return Err(format!("{} failed the submodularity check", gs.kind()));
    }
    let other = random_spec(&mut rng, m);
    let w = other.bind(m);
    if is_gross_substitutes(&w).holds && !is_submodular(&w).holds {
        return Err(format!("{} passes gross substitutes but not submodularity", other.kind()));
    }
    Ok(())
}

/// `α·Σ v(x_j | Y_j) ≥ Σ ℓ(x_j) − ε·ℓ(Z)` for the fitted linear `ℓ`.
pub fn marginal_sum_bound(seed: u64) -> Result<(), String> {
    let mut rng = rng(seed);
    let m = rng.random_range(2..=8);
    let base = ValuationSpec::Linear { c: rng.random::<f64>(), l: (0..m).map(|_| rng.random_range(0.1..1.0)).collect() };
    let eps = 0.3 * rng.random::<f64>();
    let spec = if rng.random::<bool>() {
        smooth_perturbation(&base, m, eps, rng.random_range(0.3..1.0))
    } else {
        random_perturbation(&base, m, eps, rng.random(), true).map_err(|e| e.to_string())?
    };
    let v = spec.bind(m);
    let alpha = alpha_of(&v);
    if alpha.is_infinite() {
        return Ok(());
    }
    let fit = fit_linear_closeness(&v).map_err(|e| e.to_string())?;
    let Some(ValuationSpec::Linear { c, l }) = fit.fitted else { return Err("no linear fit".into()) };
    let ell = |s: ItemSet| c + s.iter().map(|j| l[j]).sum::<f64>();
    let scale = value_scale(&tabulate(&v));
    let mut items: Vec<usize> = (0..m).collect();
    items.shuffle(&mut rng);
    let kx = rng.random_range(1..=m);
    let x = &items[..kx];
    let z = ItemSet::from_items(items[kx..].iter().copied().filter(|_| rng.random::<bool>()));
    for _ in 0..5 {
        let mut lhs = 0.0;
        for (k, &xj) in x.iter().enumerate() {
            let pool = ItemSet::from_items(x[..k].iter().copied()).union(z);
            let y = ItemSet::from_items(pool.iter().filter(|_| rng.random::<bool>()));
            lhs += v.value(y.with(xj)) - v.value(y);
        }
        let rhs = x.iter().map(|&j| l[j]).sum::<f64>() - fit.epsilon * ell(z);
        if alpha * lhs < rhs - 1e-9 * scale {
            return Err(format!("α·Σ = {} < {rhs} (α = {alpha}, ε = {})", alpha * lhs, fit.epsilon));
        }
    }
    Ok(())
}

/// Coverage valuations are 0-SI-clean, gross-substitutes ones 1-SI-clean, and non-submodular
/// tables fail 0-SI at the structured prices.
pub fn single_improvement(seed: u64) -> Result<(), String> {
    let mut rng = rng(seed);
    let m = rng.random_range(1..=5);
    let r = rng.random_range(1..=2 * m);
    let cov = random_coverage(&mut rng, m, r);
    if let Some(v) = beta_si_probe(&cov.bind(m), 0.0, 50, seed).map_err(|e| e.to_string())? {
        return Err(format!("coverage valuation violates 0-SI: {v:?}"));
    }
    let gs = random_gs(&mut rng, m);
    if let Some(v) = beta_si_probe(&gs.bind(m), 1.0, 50, seed).map_err(|e| e.to_string())? {
        return Err(format!("{} violates 1-SI: {v:?}", gs.kind()));
    }
    let table = Table::new(m, monotone_table(&mut rng, m));
    if !is_submodular(&table).holds && beta_si_probe(&table, 0.0, 0, seed).map_err(|e| e.to_string())?.is_none() {
        return Err("non-submodular table passes 0-SI at the structured prices".into());
    }
    Ok(())
}

pub const SUITES: [(&str, fn(u64) -> Result<(), String>); 6] = [
    ("decreasing marginals", decreasing_marginals),
    ("close marginals", close_marginals),
    ("curvature bound", curvature_bound),
    ("class hierarchy", hierarchy),
    ("marginal sum bound", marginal_sum_bound),
    ("single improvement", single_improvement),
];
