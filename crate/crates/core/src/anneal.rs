//! Classical simulated annealing over QUBO problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{BitString, LocalFields, QuboProblem, SolutionDistribution};

/// Cooling schedule and restart budget for [`sa_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub sweeps: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl AnnealSchedule {
    /// Default temperatures scaled to the problem: `t_start = max|Q|·n`,
    /// `t_end = 1e-3·max|Q|`.
    pub fn for_problem(p: &QuboProblem, sweeps: usize, restarts: usize, seed: u64) -> Self {
        let scale = match p.max_abs() {
            m if m > 0.0 => m,
            _ => 1.0,
        };
        Self {
            sweeps,
            t_start: scale * p.n() as f64,
            t_end: 1e-3 * scale,
            restarts,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.restarts == 0 {
            return Err(Error::InvalidParameter(
                "sweeps and restarts must be positive".into(),
            ));
        }
        if !(self.t_end > 0.0 && self.t_start >= self.t_end && self.t_start.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "temperatures must satisfy t_start >= t_end > 0 (got {} and {})",
                self.t_start, self.t_end
            )));
        }
        Ok(())
    }

    pub fn cooling(&self) -> GeometricCooling {
        GeometricCooling::new(self.t_start, self.t_end, self.sweeps)
    }
}

/// Geometric interpolation between two temperatures over a fixed number of stages.
#[derive(Debug, Clone, Copy)]
pub struct GeometricCooling {
    t_start: f64,
    ratio: f64,
    stages: usize,
}

impl GeometricCooling {
    pub fn new(t_start: f64, t_end: f64, stages: usize) -> Self {
        let ratio = if stages > 1 {
            (t_end / t_start).powf(1.0 / (stages - 1) as f64)
        } else {
            t_end / t_start
        };
        Self {
            t_start,
            ratio,
            stages,
        }
    }

    /// Temperature at stage `s`; the last stage is exactly at `t_end` up to rounding.
    pub fn temperature(&self, s: usize) -> f64 {
        if self.stages == 1 {
            return self.t_start * self.ratio;
        }
        self.t_start * self.ratio.powi(s as i32)
    }

    pub fn stages(&self) -> usize {
        self.stages
    }
}

/// Metropolis acceptance for an energy change `delta` at temperature `t`.
#[inline]
pub fn metropolis_accept<R: Rng + ?Sized>(rng: &mut R, delta: f64, t: f64) -> bool {
    delta <= 0.0 || rng.random::<f64>() < (-delta / t).exp()
}

/// Per-chain RNG keyed by `(seed, stream)` so results do not depend on scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn run_chain(p: &QuboProblem, sched: &AnnealSchedule, restart: usize) -> BitString {
    let mut rng = stream_rng(sched.seed, restart as u64);
    let n = p.n();
    let init: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
    let mut state = LocalFields::new(p, init);
    let cooling = sched.cooling();
    for s in 0..cooling.stages() {
        let t = cooling.temperature(s);
        for i in 0..n {
            let d = state.delta(p, i);
            if metropolis_accept(&mut rng, d, t) {
                state.flip(p, i, d);
            }
        }
    }
    BitString::new(state.bits).expect("chain state is binary")
}

/// Runs `restarts` independent single-flip Metropolis chains and returns the
/// distribution of their final states. Deterministic for a fixed seed.
pub fn sa_solve(p: &QuboProblem, sched: &AnnealSchedule) -> Result<SolutionDistribution> {
    sched.validate()?;
    let finals: Vec<BitString> = (0..sched.restarts)
        .into_par_iter()
        .map(|r| run_chain(p, sched, r))
        .collect();
    SolutionDistribution::from_samples(finals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_problem_modal_state() {
        let p = QuboProblem::from_rows(&[vec![-1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let d = sa_solve(&p, &AnnealSchedule::for_problem(&p, 200, 20, 1)).unwrap();
        assert_eq!(d.modal().to_string(), "10");
    }

    #[test]
    fn single_variable_descends() {
        let p = QuboProblem::from_rows(&[vec![-5.0]]).unwrap();
        let d = sa_solve(&p, &AnnealSchedule::for_problem(&p, 500, 40, 3)).unwrap();
        assert_eq!(d.modal().to_string(), "1");
        assert_eq!(d.entries()[0].probability, 1.0);
    }

    #[test]
    fn seed_determinism() {
        let p = QuboProblem::from_dense(6, (0..36).map(|k| (k as f64 * 0.37).sin()).collect()).unwrap();
        let s = AnnealSchedule::for_problem(&p, 50, 30, 42);
        assert_eq!(sa_solve(&p, &s).unwrap(), sa_solve(&p, &s).unwrap());
    }

    #[test]
    fn rejects_bad_schedule() {
        let p = QuboProblem::zeros(2).unwrap();
        let mut s = AnnealSchedule::for_problem(&p, 10, 1, 0);
        s.t_end = 2.0 * s.t_start;
        assert!(sa_solve(&p, &s).is_err());
        s = AnnealSchedule::for_problem(&p, 0, 1, 0);
        assert!(sa_solve(&p, &s).is_err());
    }

    #[test]
    fn cooling_endpoints() {
        let c = GeometricCooling::new(10.0, 0.01, 5);
        assert!((c.temperature(0) - 10.0).abs() < 1e-12);
        assert!((c.temperature(4) - 0.01).abs() < 1e-12);
    }
}
