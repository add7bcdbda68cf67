//! Free-streaming classical N-particle ensemble: the ballistic analogy for
//! intra-packet interference and its disappearance.
//!
//! Every particle moves at constant velocity, so evolution, crossing times,
//! and the eventual momentum-sorted ordering are all closed-form. The
//! interesting configuration is the "inverted" one — the fastest particle
//! starting at the rear — whose last pairwise crossing time plays the same
//! role as the interference time of the wavepacket.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Initial-condition constraint applied after random placement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintMode {
    /// Keep the raw draws.
    None,
    /// Put the fastest particle at the leftmost drawn position and the
    /// slowest at the rightmost, maximizing the inversion.
    ExtremalSwapped,
}

/// A set of free classical particles with fixed momenta.
#[derive(Clone, Debug)]
pub struct ClassicalEnsemble {
    x0: Vec<f64>,
    p: Vec<f64>,
    mass: f64,
    seed: u64,
    constraint: ConstraintMode,
}

impl ClassicalEnsemble {
    pub fn positions(&self) -> &[f64] {
        &self.x0
    }

    pub fn momenta(&self) -> &[f64] {
        &self.p
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn constraint(&self) -> ConstraintMode {
        self.constraint
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

fn apply_extremal_swap(x0: &mut [f64], p: &[f64]) {
    let argmax = |v: &[f64]| {
        v.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &x)| {
                if x > acc.1 {
                    (i, x)
                } else {
                    acc
                }
            })
            .0
    };
    let argmin = |v: &[f64]| {
        v.iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &x)| {
                if x < acc.1 {
                    (i, x)
                } else {
                    acc
                }
            })
            .0
    };
    let fastest = argmax(p);
    x0.swap(fastest, argmin(x0));
    let slowest = argmin(p);
    x0.swap(slowest, argmax(x0));
}

/// Draws `n` particles with uniform random positions and momenta in the
/// given ranges; deterministic per seed.
pub fn init_ensemble(
    n: usize,
    x_range: (f64, f64),
    p_range: (f64, f64),
    mass: f64,
    seed: u64,
    constraint: ConstraintMode,
) -> Result<ClassicalEnsemble> {
    if n < 2 {
        return Err(Error::InvalidParams("ensemble needs at least 2 particles"));
    }
    if !(x_range.1 > x_range.0) || !(p_range.1 > p_range.0) {
        return Err(Error::InvalidParams("empty position or momentum range"));
    }
    if !(mass > 0.0) {
        return Err(Error::InvalidParams("mass must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x0: Vec<f64> = (0..n)
        .map(|_| x_range.0 + rng.gen::<f64>() * (x_range.1 - x_range.0))
        .collect();
    let p: Vec<f64> = (0..n)
        .map(|_| p_range.0 + rng.gen::<f64>() * (p_range.1 - p_range.0))
        .collect();
    if constraint == ConstraintMode::ExtremalSwapped {
        apply_extremal_swap(&mut x0, &p);
    }
    Ok(ClassicalEnsemble {
        x0,
        p,
        mass,
        seed,
        constraint,
    })
}

/// Seed used by [`showcase_preset`], chosen so the last crossing happens
/// between t = 0.5 and t = 1 (inverted at t = 0.5, fully ordered from
/// t = 1 on).
pub const SHOWCASE_SEED: u64 = 17;

/// Seven particles with velocities 1.0 to 2.3, unit mass, random positions
/// on [0, 1] with the fastest started leftmost and the slowest rightmost.
pub fn showcase_preset() -> ClassicalEnsemble {
    let p = alloc::vec![1.0, 1.3, 1.5, 1.7, 1.9, 2.1, 2.3];
    let mut rng = ChaCha8Rng::seed_from_u64(SHOWCASE_SEED);
    let mut x0: Vec<f64> = (0..p.len()).map(|_| rng.gen::<f64>()).collect();
    apply_extremal_swap(&mut x0, &p);
    ClassicalEnsemble {
        x0,
        p,
        mass: 1.0,
        seed: SHOWCASE_SEED,
        constraint: ConstraintMode::ExtremalSwapped,
    }
}

/// Exact ballistic positions at time `t`.
pub fn evolve_ensemble(ens: &ClassicalEnsemble, t: f64) -> Vec<f64> {
    ens.x0
        .iter()
        .zip(&ens.p)
        .map(|(&x, &p)| x + p * t / ens.mass)
        .collect()
}

/// Last pairwise crossing time: the maximum over inverted pairs (slower
/// particle ahead of a faster one) of `m (x_i - x_j) / (p_j - p_i)`. Zero
/// when already ordered; for all later times the ordering is monotone in
/// momentum and stays so forever.
pub fn ordering_time(ens: &ClassicalEnsemble) -> Result<f64> {
    let n = ens.len();
    for i in 0..n {
        for j in i + 1..n {
            if ens.p[i] == ens.p[j] {
                return Err(Error::DuplicateMomenta);
            }
        }
    }
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            if ens.p[i] < ens.p[j] && ens.x0[i] > ens.x0[j] {
                worst = worst.max(ens.mass * (ens.x0[i] - ens.x0[j]) / (ens.p[j] - ens.p[i]));
            }
        }
    }
    Ok(worst)
}

/// True when positions at time `t` are strictly sorted by momentum.
pub fn is_ordered(ens: &ClassicalEnsemble, t: f64) -> bool {
    let xt = evolve_ensemble(ens, t);
    let mut order: Vec<usize> = (0..ens.len()).collect();
    order.sort_by(|&a, &b| ens.p[a].partial_cmp(&ens.p[b]).unwrap());
    order.windows(2).all(|w| xt[w[0]] < xt[w[1]])
}

/// Consecutive-pair separations at time `t`, taken in momentum order;
/// each grows as `dp t / m` plus the initial offset.
pub fn pairwise_separation_growth(ens: &ClassicalEnsemble, t: f64) -> Vec<f64> {
    let xt = evolve_ensemble(ens, t);
    let mut order: Vec<usize> = (0..ens.len()).collect();
    order.sort_by(|&a, &b| ens.p[a].partial_cmp(&ens.p[b]).unwrap());
    order.windows(2).map(|w| xt[w[1]] - xt[w[0]]).collect()
}
