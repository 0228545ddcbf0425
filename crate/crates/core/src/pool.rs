//! Pool and ecosystem state.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{AmmError, Result};
use crate::num::Scalar;

/// Opaque pool identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PoolId(pub u32);

impl fmt::Display for PoolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Asset a swap sends into the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    SendX,
    SendY,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::SendX => Side::SendY,
            Side::SendY => Side::SendX,
        }
    }
}

/// Reserves of one two-asset pool. Both reserves are strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolState<T> {
    pub id: PoolId,
    pub x: T,
    pub y: T,
}

impl<T: Scalar> PoolState<T> {
    pub fn new(id: PoolId, x: T, y: T) -> Result<Self> {
        if !x.is_positive() || !y.is_positive() {
            return Err(AmmError::NonPositiveReserve { pool: id });
        }
        Ok(PoolState { id, x, y })
    }

    /// Reserve ratio `y / x`.
    pub fn ratio(&self) -> T {
        self.y.clone() / self.x.clone()
    }

    /// Constant-product invariant `x * y`.
    pub fn product(&self) -> T {
        self.x.clone() * self.y.clone()
    }

    /// The same pool with the asset labels swapped.
    pub fn relabeled(&self) -> Self {
        PoolState {
            id: self.id,
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }

    /// Reserve of the asset a `side` order sends in.
    pub fn reserve_in(&self, side: Side) -> &T {
        match side {
            Side::SendX => &self.x,
            Side::SendY => &self.y,
        }
    }

    /// Reserve of the asset a `side` order receives.
    pub fn reserve_out(&self, side: Side) -> &T {
        match side {
            Side::SendX => &self.y,
            Side::SendY => &self.x,
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> PoolState<U> {
        PoolState {
            id: self.id,
            x: f(&self.x),
            y: f(&self.y),
        }
    }
}

/// Ordered collection of pools trading the same pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecosystem<T> {
    pools: Vec<PoolState<T>>,
}

impl<T: Scalar> Ecosystem<T> {
    pub fn new(pools: Vec<PoolState<T>>) -> Result<Self> {
        if pools.is_empty() {
            return Err(AmmError::EmptyEcosystem);
        }
        for (i, p) in pools.iter().enumerate() {
            if !p.x.is_positive() || !p.y.is_positive() {
                return Err(AmmError::NonPositiveReserve { pool: p.id });
            }
            if pools[..i].iter().any(|q| q.id == p.id) {
                return Err(AmmError::DuplicatePool(p.id));
            }
        }
        Ok(Ecosystem { pools })
    }

    /// Builds an ecosystem from `(x, y)` pairs with ids `0..n`.
    pub fn from_reserves(reserves: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        let pools = reserves
            .into_iter()
            .enumerate()
            .map(|(i, (x, y))| PoolState::new(PoolId(i as u32), x, y))
            .collect::<Result<Vec<_>>>()?;
        Ecosystem::new(pools)
    }

    pub fn pools(&self) -> &[PoolState<T>] {
        &self.pools
    }

    pub fn len(&self) -> usize {
        self.pools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pools.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = PoolId> + '_ {
        self.pools.iter().map(|p| p.id)
    }

    pub fn index_of(&self, id: PoolId) -> Result<usize> {
        self.pools
            .iter()
            .position(|p| p.id == id)
            .ok_or(AmmError::UnknownPool(id))
    }

    pub fn pool(&self, id: PoolId) -> Result<&PoolState<T>> {
        self.index_of(id).map(|i| &self.pools[i])
    }

    /// Aggregate `x = sum x_j`.
    pub fn total_x(&self) -> T {
        self.pools.iter().fold(T::zero(), |acc, p| acc + p.x.clone())
    }

    /// Aggregate `y = sum y_j`.
    pub fn total_y(&self) -> T {
        self.pools.iter().fold(T::zero(), |acc, p| acc + p.y.clone())
    }

    /// Global reserve ratio `r = y / x`.
    pub fn global_ratio(&self) -> T {
        self.total_y() / self.total_x()
    }

    /// `(x_{-i}, y_{-i})`: aggregate reserves of every pool except `id`.
    pub fn complement(&self, id: PoolId) -> Result<(T, T)> {
        let i = self.index_of(id)?;
        let (mut x, mut y) = (T::zero(), T::zero());
        for (j, p) in self.pools.iter().enumerate() {
            if j != i {
                x = x + p.x.clone();
                y = y + p.y.clone();
            }
        }
        Ok((x, y))
    }

    /// The ecosystem with X and Y swapped in every pool.
    pub fn relabeled(&self) -> Self {
        Ecosystem {
            pools: self.pools.iter().map(PoolState::relabeled).collect(),
        }
    }

    /// Replaces the reserves of one pool, checking positivity.
    pub fn with_pool(&self, id: PoolId, x: T, y: T) -> Result<Self> {
        let i = self.index_of(id)?;
        let updated = PoolState::new(id, x, y)?;
        let mut pools = self.pools.clone();
        pools[i] = updated;
        Ok(Ecosystem { pools })
    }

    /// Lowest-index pool with the largest product `x_j * y_j`.
    pub fn max_product_pool(&self) -> PoolId {
        let mut best = &self.pools[0];
        let mut best_k = best.product();
        for p in &self.pools[1..] {
            let k = p.product();
            if k > best_k {
                best = p;
                best_k = k;
            }
        }
        best.id
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Ecosystem<U> {
        Ecosystem {
            pools: self.pools.iter().map(|p| p.map(&f)).collect(),
        }
    }

    pub fn to_f64(&self) -> Ecosystem<f64> {
        self.map(|v| v.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Exact;

    fn q(n: i64) -> Exact {
        Exact::from_int(n)
    }

    #[test]
    fn aggregates_and_complements() {
        let eco = Ecosystem::from_reserves([(q(90), q(440_000)), (q(210), q(760_000))]).unwrap();
        assert_eq!(eco.total_x(), q(300));
        assert_eq!(eco.total_y(), q(1_200_000));
        assert_eq!(eco.global_ratio(), q(4000));
        assert_eq!(eco.complement(PoolId(0)).unwrap(), (q(210), q(760_000)));
        assert_eq!(eco.max_product_pool(), PoolId(1));
    }

    #[test]
    fn rejects_bad_pools() {
        assert_eq!(
            Ecosystem::<Exact>::from_reserves([]).unwrap_err(),
            AmmError::EmptyEcosystem
        );
        assert!(matches!(
            Ecosystem::from_reserves([(q(0), q(1))]),
            Err(AmmError::NonPositiveReserve { .. })
        ));
        let p = PoolState::new(PoolId(3), q(1), q(1)).unwrap();
        assert_eq!(
            Ecosystem::new(vec![p.clone(), p]).unwrap_err(),
            AmmError::DuplicatePool(PoolId(3))
        );
    }

    #[test]
    fn max_product_ties_go_to_lowest_index() {
        let eco = Ecosystem::from_reserves([(q(2), q(8)), (q(4), q(4)), (q(1), q(16))]).unwrap();
        assert_eq!(eco.max_product_pool(), PoolId(0));
    }
}
