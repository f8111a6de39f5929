//! Generated structures with sampling boxes that avoid their singular loci.

use pq_core::expr::{h_id, h_one, Point};
use pq_core::geometry::{
    commuting_conjugator, conjugate_structure, flat_model, propo_structure, pullback_structure,
    random_conjugator, random_diffeomorphism, random_fiber_rotation, rotate_basis, PqStructure,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Flat,
    Conjugated,
    Pullback,
    KeepsJ1,
    KeepsJ2,
    Rotated,
    Propo,
}

pub struct Case {
    pub name: String,
    pub kind: Kind,
    pub h: PqStructure,
    pub lo: f64,
    pub hi: f64,
}

impl Case {
    pub fn points(&self, count: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.h.dim();
        (0..count)
            .map(|_| {
                let c = (0..n).map(|_| rng.gen_range(self.lo..self.hi)).collect();
                self.h.chart().point(c).unwrap()
            })
            .collect()
    }
}

pub fn case(kind: Kind, seed: u64) -> Case {
    let flat = flat_model(2).unwrap();
    let chart = flat.chart().clone();
    let (h, lo, hi) = match kind {
        Kind::Flat => (flat, -1.0, 1.0),
        Kind::Conjugated => {
            let g = random_conjugator(&chart, seed, 0.03);
            (conjugate_structure(&flat, &g).unwrap(), -0.5, 0.5)
        }
        Kind::Pullback => {
            let phi = random_diffeomorphism(&chart, seed, 0.05);
            (pullback_structure(&flat, &phi).unwrap(), -0.5, 0.5)
        }
        Kind::KeepsJ1 | Kind::KeepsJ2 => {
            let i = if kind == Kind::KeepsJ1 { 0 } else { 1 };
            let g = commuting_conjugator(&flat, i, seed, 0.04).unwrap();
            (conjugate_structure(&flat, &g).unwrap(), -0.5, 0.5)
        }
        Kind::Rotated => {
            let g = random_conjugator(&chart, seed, 0.03);
            let h = conjugate_structure(&flat, &g).unwrap();
            let l = random_fiber_rotation(&chart, seed ^ 0x55, true);
            (rotate_basis(&h, &l).unwrap(), -0.5, 0.5)
        }
        Kind::Propo => {
            let def = if seed % 2 == 0 { h_one() } else { h_id() };
            (propo_structure(2, &Arc::new(def)).unwrap(), 0.6, 1.4)
        }
    };
    Case {
        name: format!("{kind:?}#{seed}"),
        kind,
        h,
        lo,
        hi,
    }
}

const CYCLE: [Kind; 6] = [
    Kind::Conjugated,
    Kind::Pullback,
    Kind::KeepsJ1,
    Kind::KeepsJ2,
    Kind::Rotated,
    Kind::Propo,
];

/// `count` structures cycling through the non-flat generators.
pub fn zoo(count: usize, seed: u64) -> Vec<Case> {
    (0..count)
        .map(|k| case(CYCLE[k % CYCLE.len()], seed + k as u64))
        .collect()
}
