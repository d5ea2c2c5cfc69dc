//! Optimal generation regulation: minimise `sum q_j p_j^2 / 2` subject to
//! `sum p_j = total load`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct OgrProblem<T> {
    /// Cost coefficient per generator bus.
    pub costs: BTreeMap<usize, T>,
    pub total_load: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dispatch<T> {
    pub allocation: BTreeMap<usize, T>,
    /// Common marginal cost.
    pub nu: T,
}

impl<T: Real> OgrProblem<T> {
    pub fn new(costs: BTreeMap<usize, T>, total_load: T) -> Self {
        Self { costs, total_load }
    }

    pub fn validate(&self) -> Result<()> {
        if self.costs.is_empty() {
            return Err(Error::NoGenerators);
        }
        for &q in self.costs.values() {
            crate::generation::positive("q", q)?;
        }
        Ok(())
    }

    pub fn cost(&self, allocation: &BTreeMap<usize, T>) -> T {
        self.costs
            .iter()
            .map(|(id, &q)| {
                let p = allocation.get(id).copied().unwrap_or_else(T::zero);
                T::lit(0.5) * q * p * p
            })
            .sum()
    }
}

/// Closed-form optimum: `nu = load / sum(1/q)`, `p_j = nu / q_j`.
pub fn solve_ogr<T: Real>(prob: &OgrProblem<T>) -> Result<Dispatch<T>> {
    prob.validate()?;
    let inv_sum: T = prob.costs.values().map(|&q| T::one() / q).sum();
    let nu = prob.total_load / inv_sum;
    let allocation = prob.costs.iter().map(|(&id, &q)| (id, nu / q)).collect();
    Ok(Dispatch { allocation, nu })
}

/// `q_j p_j` per generator.
pub fn marginal_costs<T: Real>(
    allocation: &BTreeMap<usize, T>,
    costs: &BTreeMap<usize, T>,
) -> Result<BTreeMap<usize, T>> {
    if allocation.len() != costs.len() || allocation.keys().any(|k| !costs.contains_key(k)) {
        return Err(Error::KeyMismatch);
    }
    Ok(allocation
        .iter()
        .map(|(&id, &p)| (id, costs[&id] * p))
        .collect())
}

/// Stationarity (every marginal within `tol` of their mean) and balance
/// (`|sum p - load| <= tol`).
pub fn check_kkt<T: Real>(allocation: &BTreeMap<usize, T>, prob: &OgrProblem<T>, tol: T) -> bool {
    let Ok(mc) = marginal_costs(allocation, &prob.costs) else {
        return false;
    };
    if mc.is_empty() {
        return false;
    }
    let mean = mc.values().copied().sum::<T>() / T::lit(mc.len() as f64);
    let stationary = mc.values().all(|&m| (m - mean).abs() <= tol);
    let supplied: T = allocation.values().copied().sum();
    stationary && (supplied - prob.total_load).abs() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(usize, f64)]) -> BTreeMap<usize, f64> {
        pairs.iter().copied().collect()
    }

    /// Brute force over the constraint line p1 = load - p2.
    fn grid_oracle(q1: f64, q2: f64, load: f64) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0);
        let steps = 600_000;
        for i in 0..=steps {
            let p2 = -load + 3.0 * load * i as f64 / steps as f64;
            let p1 = load - p2;
            let c = 0.5 * q1 * p1 * p1 + 0.5 * q2 * p2 * p2;
            if c < best.0 {
                best = (c, p2);
            }
        }
        (load - best.1, best.1)
    }

    #[test]
    fn two_generator_example() {
        let prob = OgrProblem::new(map(&[(1, 1.0), (2, 2.0)]), 3.0);
        let d = solve_ogr(&prob).unwrap();
        assert!((d.nu - 2.0).abs() < 1e-12);
        assert!((d.allocation[&1] - 2.0).abs() < 1e-12);
        assert!((d.allocation[&2] - 1.0).abs() < 1e-12);
        let (p1, p2) = grid_oracle(1.0, 2.0, 3.0);
        assert!((p1 - 2.0).abs() < 1e-4 && (p2 - 1.0).abs() < 1e-4);
        assert!(check_kkt(&d.allocation, &prob, 1e-9));
    }

    #[test]
    fn single_generator_and_zero_load() {
        let d = solve_ogr(&OgrProblem::new(map(&[(1, 1.0)]), 5.0)).unwrap();
        assert_eq!((d.nu, d.allocation[&1]), (5.0, 5.0));
        let d = solve_ogr(&OgrProblem::new(map(&[(1, 0.3), (4, 7.0)]), 0.0)).unwrap();
        assert_eq!(d.nu, 0.0);
        assert!(d.allocation.values().all(|&p| p == 0.0));
    }

    #[test]
    fn empty_problem_rejected() {
        assert_eq!(
            solve_ogr(&OgrProblem::<f64>::new(BTreeMap::new(), 1.0)),
            Err(Error::NoGenerators)
        );
        assert!(solve_ogr(&OgrProblem::new(map(&[(0, -1.0)]), 1.0)).is_err());
    }

    #[test]
    fn marginal_cost_examples() {
        let costs = map(&[(1, 1.0), (2, 2.0)]);
        assert_eq!(
            marginal_costs(&map(&[(1, 2.0), (2, 1.0)]), &costs).unwrap(),
            map(&[(1, 2.0), (2, 2.0)])
        );
        assert_eq!(
            marginal_costs(&map(&[(1, 0.0), (2, 0.0)]), &costs).unwrap(),
            map(&[(1, 0.0), (2, 0.0)])
        );
        let eq = marginal_costs(&map(&[(1, 0.5), (2, 0.5)]), &map(&[(1, 3.0), (2, 3.0)])).unwrap();
        assert_eq!(eq[&1], eq[&2]);
        assert_eq!(
            marginal_costs(&map(&[(1, 1.0)]), &costs),
            Err(Error::KeyMismatch)
        );
    }

    #[test]
    fn kkt_rejects_unbalanced_or_unequal() {
        let prob = OgrProblem::new(map(&[(1, 1.0), (2, 2.0)]), 3.0);
        assert!(!check_kkt(&map(&[(1, 3.0), (2, 0.0)]), &prob, 1e-9));
        assert!(!check_kkt(&map(&[(1, 2.0), (2, 2.0)]), &prob, 1e-9));
    }
}
