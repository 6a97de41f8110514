//! Truncated periodic domains paired with their spectral splitting, cached by size.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use crate::spectral::{DiscreteOperator, PeriodicPotential, SpectralError, SpectralSplit};

/// An operator on `cells` whole periods together with its `Y ⊕ Z` splitting.
#[derive(Debug, Clone)]
pub struct Domain {
    pub op: DiscreteOperator,
    pub split: SpectralSplit,
}

impl Domain {
    pub fn new(op: DiscreteOperator) -> Result<Self, SpectralError> {
        let split = SpectralSplit::build(&op)?;
        Ok(Self { op, split })
    }

    pub fn cells(&self) -> usize {
        self.op.cells()
    }

    pub fn len(&self) -> usize {
        self.op.len()
    }

    pub fn is_empty(&self) -> bool {
        self.op.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.op.spacing()
    }
}

/// Smallest even cell count with room for a function supported in `|x| ≤ 2R`
/// plus one spare cell on each side.
pub fn cells_for_radius(r: f64) -> usize {
    round_up_even((4.0 * r).ceil() as usize + 2)
}

pub fn round_up_even(cells: usize) -> usize {
    cells + cells % 2
}

/// Domains of one potential and resolution, built on demand.
#[derive(Debug)]
pub struct DomainCache {
    potential: PeriodicPotential,
    points_per_cell: usize,
    built: Mutex<BTreeMap<usize, Arc<Domain>>>,
}

impl DomainCache {
    pub fn new(potential: PeriodicPotential, points_per_cell: usize) -> Self {
        Self { potential, points_per_cell, built: Mutex::new(BTreeMap::new()) }
    }

    pub fn potential(&self) -> &PeriodicPotential {
        &self.potential
    }

    pub fn points_per_cell(&self) -> usize {
        self.points_per_cell
    }

    pub fn get(&self, cells: usize) -> Result<Arc<Domain>, SpectralError> {
        if let Some(d) = self.built.lock().expect("domain cache poisoned").get(&cells) {
            return Ok(Arc::clone(d));
        }
        let op = DiscreteOperator::new(self.potential.clone(), cells, self.points_per_cell)?;
        let domain = Arc::new(Domain::new(op)?);
        self.built.lock().expect("domain cache poisoned").insert(cells, Arc::clone(&domain));
        Ok(domain)
    }

    /// Drop every cached domain.
    pub fn clear(&self) {
        self.built.lock().expect("domain cache poisoned").clear();
    }

    pub fn cached_sizes(&self) -> Vec<usize> {
        self.built.lock().expect("domain cache poisoned").keys().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_sizing() {
        assert_eq!(cells_for_radius(1.0), 6);
        assert_eq!(cells_for_radius(10.0), 42);
        assert_eq!(cells_for_radius(10.2), 44);
        assert!(cells_for_radius(31.7) as f64 >= 4.0 * 31.7 + 2.0);
    }

    #[test]
    fn cache_reuses_domains() {
        let cache = DomainCache::new(PeriodicPotential::mathieu(1.0).unwrap().shifted(9.85), 16);
        let a = cache.get(8).unwrap();
        let b = cache.get(8).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        cache.get(10).unwrap();
        assert_eq!(cache.cached_sizes(), vec![8, 10]);
    }
}
