use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;

use super::instance::{ItemDraw, WeightedInstance};
use crate::error::{Error, Result};

/// Draws `(a, w(a))` with probability `w(a) / W`.
pub trait ProportionalOracle {
    fn sample_proportional(&mut self) -> Result<ItemDraw>;
}

/// Draws `(a, w(a))` with probability `1 / n`.
pub trait UniformOracle {
    fn sample_uniform(&mut self) -> Result<ItemDraw>;
}

/// Both oracles over the same universe.
pub trait HybridOracle: ProportionalOracle + UniformOracle {}

impl<T: ProportionalOracle + UniformOracle + ?Sized> HybridOracle for T {}

impl<T: ProportionalOracle + ?Sized> ProportionalOracle for &mut T {
    fn sample_proportional(&mut self) -> Result<ItemDraw> {
        (**self).sample_proportional()
    }
}

impl<T: UniformOracle + ?Sized> UniformOracle for &mut T {
    fn sample_uniform(&mut self) -> Result<ItemDraw> {
        (**self).sample_uniform()
    }
}

/// Exact per-kind draw counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DrawCounters {
    pub proportional: u64,
    pub uniform: u64,
}

impl DrawCounters {
    pub fn total(&self) -> u64 {
        self.proportional + self.uniform
    }
}

/// Seeded oracle facade over a [`WeightedInstance`].
///
/// Equal seeds and equal call sequences give identical draws.
#[derive(Debug, Clone)]
pub struct SamplerHandle<'a, R = ChaCha8Rng> {
    instance: &'a WeightedInstance,
    rng: R,
    counters: DrawCounters,
}

impl<'a, R: RngCore> SamplerHandle<'a, R> {
    pub fn new(instance: &'a WeightedInstance, rng: R) -> Self {
        Self {
            instance,
            rng,
            counters: DrawCounters::default(),
        }
    }

    pub fn instance(&self) -> &'a WeightedInstance {
        self.instance
    }

    pub fn counters(&self) -> DrawCounters {
        self.counters
    }
}

impl<R: RngCore> ProportionalOracle for SamplerHandle<'_, R> {
    fn sample_proportional(&mut self) -> Result<ItemDraw> {
        let index = self.instance.table().sample(&mut self.rng);
        self.counters.proportional += 1;
        Ok(self.instance.draw_at(index))
    }
}

impl<R: RngCore> UniformOracle for SamplerHandle<'_, R> {
    fn sample_uniform(&mut self) -> Result<ItemDraw> {
        let index = self.rng.gen_range(0..self.instance.len());
        self.counters.uniform += 1;
        Ok(self.instance.draw_at(index))
    }
}

/// Caps the total number of draws forwarded to the wrapped oracle.
///
/// Once `budget` draws have been made, every further draw fails with
/// [`Error::BudgetExhausted`] without touching the inner oracle, so the inner
/// counters never exceed the budget.
#[derive(Debug)]
pub struct DrawBudget<'a, O: ?Sized> {
    inner: &'a mut O,
    budget: u64,
    used: u64,
}

impl<'a, O: ?Sized> DrawBudget<'a, O> {
    pub fn new(inner: &'a mut O, budget: u64) -> Self {
        Self {
            inner,
            budget,
            used: 0,
        }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    fn charge(&mut self) -> Result<()> {
        if self.used >= self.budget {
            return Err(Error::BudgetExhausted {
                budget: self.budget,
            });
        }
        self.used += 1;
        Ok(())
    }
}

impl<O: ProportionalOracle + ?Sized> ProportionalOracle for DrawBudget<'_, O> {
    fn sample_proportional(&mut self) -> Result<ItemDraw> {
        self.charge()?;
        self.inner.sample_proportional()
    }
}

impl<O: UniformOracle + ?Sized> UniformOracle for DrawBudget<'_, O> {
    fn sample_uniform(&mut self) -> Result<ItemDraw> {
        self.charge()?;
        self.inner.sample_uniform()
    }
}
