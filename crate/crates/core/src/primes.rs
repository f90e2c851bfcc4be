//! The first `d` primes and their natural logarithms.

use crate::error::{Error, Result};

/// The first `d` primes `p_1 < ... < p_d` with `log p_j` precomputed once.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeBasis {
    primes: Vec<u64>,
    logs: Vec<f64>,
}

impl PrimeBasis {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Dimension("prime basis dimension must be positive".into()));
        }
        let primes = first_primes(dimension);
        let logs = primes.iter().map(|&p| (p as f64).ln()).collect();
        Ok(Self { primes, logs })
    }

    pub fn dimension(&self) -> usize {
        self.primes.len()
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn logs(&self) -> &[f64] {
        &self.logs
    }

    pub fn prime(&self, j: usize) -> u64 {
        self.primes[j]
    }

    pub fn log(&self, j: usize) -> f64 {
        self.logs[j]
    }

    /// Exponent vector of `n` over this basis, or `None` when `n` has a prime
    /// factor outside it. `n = 1` gives all zeros.
    pub fn factor(&self, n: u64) -> Option<Vec<u32>> {
        if n == 0 {
            return None;
        }
        let mut rest = n;
        let mut exponents = vec![0u32; self.primes.len()];
        for (e, &p) in exponents.iter_mut().zip(&self.primes) {
            while rest % p == 0 {
                rest /= p;
                *e += 1;
            }
        }
        (rest == 1).then_some(exponents)
    }
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| candidate % p != 0)
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}
