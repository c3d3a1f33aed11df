//! State-vector simulation of a globally driven neutral-atom register.
//!
//! Units: ħ = 1, frequencies and energies in rad/µs, times in µs, distances in
//! µm. The Hamiltonian is
//!
//! ```text
//! H(t) = Ω(t)/2 Σ_i σx_i − δ(t)/2 Σ_i σz_i + Σ_{i<j} U_ij n_i n_j,   U_ij = C6 / r_ij⁶
//! ```
//!
//! with `n_i = (1 + σz_i)/2`, so the Rydberg state has `σz = +1` and reads as
//! bit 1. Atom `i` is bit `n − 1 − i` of the basis index, which makes basis
//! order coincide with lexicographic bitstring order.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::anneal::stream_rng;
use crate::error::{Error, Result};
use crate::qubo::{BitString, QuboProblem, SolutionDistribution};

/// Interaction coefficient for Rb 70S, rad·µs⁻¹·µm⁶.
pub const DEFAULT_C6: f64 = 5_420_000.0;
/// Largest register the state-vector simulator accepts.
pub const MAX_ATOMS: usize = 16;
/// Largest register for which spectral gaps are computed.
pub const MAX_GAP_ATOMS: usize = 8;
pub const DEFAULT_OMEGA_MAX: f64 = 15.71;
pub const DEFAULT_DURATION: f64 = 10.0;
pub const QPU_REPLICA_DURATION: f64 = 5.0;
pub const MIN_STEPS: usize = 500;
/// Shot presets used in the experiment roster.
pub const SHOT_PRESETS: [usize; 3] = [1000, 500, 100];
/// Average shots per training run on the hardware.
pub const QPU_AVERAGE_SHOTS: usize = 76;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRegister {
    pub coords: Vec<[f64; 2]>,
    pub c6: f64,
    pub min_distance: f64,
}

impl AtomRegister {
    pub fn new(coords: Vec<[f64; 2]>, c6: f64, min_distance: f64) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("register"));
        }
        if !(c6 > 0.0 && c6.is_finite()) {
            return Err(Error::InvalidParameter(format!("c6 must be positive, got {c6}")));
        }
        if let Some(i) = coords.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidParameter(format!("atom {i} has non-finite coordinates")));
        }
        let reg = Self {
            coords,
            c6,
            min_distance,
        };
        for i in 0..reg.len() {
            for j in (i + 1)..reg.len() {
                let r = reg.distance(i, j);
                if r == 0.0 {
                    return Err(Error::CoincidentAtoms(i, j));
                }
                if r < min_distance * (1.0 - 1e-9) {
                    return Err(Error::InvalidParameter(format!(
                        "atoms {i} and {j} are {r:.4} µm apart, below the minimum {min_distance}"
                    )));
                }
            }
        }
        Ok(reg)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.coords[i], self.coords[j]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.len() as f64;
        let (sx, sy) = self
            .coords
            .iter()
            .fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
        [sx / n, sy / n]
    }

    /// `U_ij = c6 / r_ij⁶`, zero diagonal, row-major.
    pub fn interaction_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.len();
        let mut u = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let r = self.distance(i, j);
                if r == 0.0 {
                    return Err(Error::CoincidentAtoms(i, j));
                }
                let v = self.c6 / r.powi(6);
                u[i][j] = v;
                u[j][i] = v;
            }
        }
        Ok(u)
    }

    /// Coordinates as `index,x,y` CSV rows.
    pub fn coordinate_table(&self) -> String {
        let mut out = String::from("atom,x_um,y_um\n");
        for (i, p) in self.coords.iter().enumerate() {
            out.push_str(&format!("{i},{},{}\n", p[0], p[1]));
        }
        out
    }
}

/// A control waveform evaluated on `[0, duration]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Waveform {
    Constant { value: f64 },
    /// Linear ramp from `start` at `t = 0` to `end` at `t = duration`.
    Ramp { start: f64, end: f64 },
    /// `sin²` rise over `rise·duration`, flat at `peak`, mirrored fall.
    SmoothPlateau { peak: f64, rise: f64 },
    /// Linear interpolation through `(t, value)` points, held flat outside.
    Piecewise { points: Vec<(f64, f64)> },
}

impl Waveform {
    pub fn at(&self, t: f64, duration: f64) -> f64 {
        match self {
            Waveform::Constant { value } => *value,
            Waveform::Ramp { start, end } => {
                let s = (t / duration).clamp(0.0, 1.0);
                start + (end - start) * s
            }
            Waveform::SmoothPlateau { peak, rise } => {
                let edge = rise * duration;
                let s = if edge <= 0.0 {
                    1.0
                } else if t < edge {
                    (std::f64::consts::FRAC_PI_2 * t.max(0.0) / edge).sin().powi(2)
                } else if t > duration - edge {
                    (std::f64::consts::FRAC_PI_2 * (duration - t).max(0.0) / edge)
                        .sin()
                        .powi(2)
                } else {
                    1.0
                };
                peak * s
            }
            Waveform::Piecewise { points } => {
                if points.is_empty() {
                    return 0.0;
                }
                if t <= points[0].0 {
                    return points[0].1;
                }
                for w in points.windows(2) {
                    let ((t0, v0), (t1, v1)) = (w[0], w[1]);
                    if t <= t1 {
                        if t1 == t0 {
                            return v1;
                        }
                        return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
                    }
                }
                points[points.len() - 1].1
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Waveform::Piecewise { points } => points.iter().map(|p| p.0).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub duration: f64,
    pub omega: Waveform,
    pub delta: Waveform,
    pub omega_max: f64,
}

impl PulseSchedule {
    pub fn new(duration: f64, omega: Waveform, delta: Waveform, omega_max: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pulse duration must be positive, got {duration}"
            )));
        }
        let s = Self {
            duration,
            omega,
            delta,
            omega_max,
        };
        let probes = (0..=1000)
            .map(|k| duration * k as f64 / 1000.0)
            .chain(s.omega.breakpoints());
        for t in probes {
            let w = s.omega.at(t, duration);
            if !(w >= 0.0 && w <= omega_max * (1.0 + 1e-12)) {
                return Err(Error::InvalidParameter(format!(
                    "amplitude {w} at t = {t} outside [0, {omega_max}]"
                )));
            }
        }
        Ok(s)
    }

    pub fn omega_at(&self, t: f64) -> f64 {
        self.omega.at(t, self.duration)
    }

    pub fn delta_at(&self, t: f64) -> f64 {
        self.delta.at(t, self.duration)
    }

    /// `(t, Ω, δ)` at `points` evenly spaced times including both ends.
    pub fn table(&self, points: usize) -> Vec<(f64, f64, f64)> {
        let points = points.max(2);
        (0..points)
            .map(|k| {
                let t = self.duration * k as f64 / (points - 1) as f64;
                (t, self.omega_at(t), self.delta_at(t))
            })
            .collect()
    }

    pub fn table_csv(&self, points: usize) -> String {
        let mut out = String::from("t_us,omega_rad_per_us,delta_rad_per_us\n");
        for (t, o, d) in self.table(points) {
            out.push_str(&format!("{t},{o},{d}\n"));
        }
        out
    }

    fn max_abs_delta(&self) -> f64 {
        self.table(201)
            .iter()
            .fold(0.0f64, |m, &(_, _, d)| m.max(d.abs()))
    }
}

/// Plateau amplitude for a QUBO: `median(Q)` capped at `omega_max`.
///
/// A nonpositive median cannot be used as an amplitude, so the median of
/// `|Q|` is taken instead in that case.
pub fn plateau_amplitude(q: &QuboProblem, omega_max: f64) -> f64 {
    let m = q.median();
    let level = if m > 0.0 {
        m
    } else {
        let abs = QuboProblem::from_dense(q.n(), q.as_slice().iter().map(|v| v.abs()).collect())
            .expect("same shape");
        abs.median()
    };
    if level < omega_max {
        level
    } else {
        omega_max
    }
}

/// Smooth amplitude bump at the QUBO-derived plateau with a linear detuning
/// ramp from −10 to +10 rad/µs.
pub fn default_schedule(q: &QuboProblem, duration: f64, omega_max: f64) -> Result<PulseSchedule> {
    PulseSchedule::new(
        duration,
        Waveform::SmoothPlateau {
            peak: plateau_amplitude(q, omega_max),
            rise: 0.25,
        },
        Waveform::Ramp {
            start: -10.0,
            end: 10.0,
        },
        omega_max,
    )
}

/// Noise channels. Each channel is multiplied by `scale_percent / 100`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Probability an atom is not prepared and reads as ground.
    pub spam_prep: f64,
    /// Probability a ground-state atom reads as 1.
    pub spam_false_pos: f64,
    /// Probability a Rydberg atom reads as 0.
    pub spam_false_neg: f64,
    /// Per-realization relative standard deviation of Ω.
    pub amp_fluctuation_rel: f64,
    /// Per-atom, per-realization detuning standard deviation (rad/µs).
    pub doppler_sigma: f64,
    /// Gaussian beam waist (µm).
    pub laser_waist: f64,
    pub scale_percent: f64,
    /// Independent noise realizations the shots are split across.
    #[serde(default = "default_realizations")]
    pub realizations: usize,
}

fn default_realizations() -> usize {
    10
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            spam_prep: 0.005,
            spam_false_pos: 0.01,
            spam_false_neg: 0.05,
            amp_fluctuation_rel: 0.05,
            doppler_sigma: 0.5,
            laser_waist: 148.0,
            scale_percent: 100.0,
            realizations: default_realizations(),
        }
    }
}

/// Noise after applying the scale factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveNoise {
    pub prep: f64,
    pub false_pos: f64,
    pub false_neg: f64,
    pub amp_rel: f64,
    pub doppler_sigma: f64,
    /// 0 disables the waist profile, 1 is the physical Gaussian falloff.
    pub waist_strength: f64,
    pub waist: f64,
}

impl NoiseConfig {
    pub fn ideal() -> Self {
        Self {
            scale_percent: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("spam_prep", self.spam_prep),
            ("spam_false_pos", self.spam_false_pos),
            ("spam_false_neg", self.spam_false_neg),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} = {p} is not a probability")));
            }
        }
        for (name, v) in [
            ("amp_fluctuation_rel", self.amp_fluctuation_rel),
            ("doppler_sigma", self.doppler_sigma),
            ("scale_percent", self.scale_percent),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if !(self.laser_waist > 0.0) {
            return Err(Error::InvalidParameter("laser_waist must be positive".into()));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidParameter("realizations must be positive".into()));
        }
        Ok(())
    }

    pub fn effective(&self) -> EffectiveNoise {
        let s = self.scale_percent / 100.0;
        EffectiveNoise {
            prep: (self.spam_prep * s).min(1.0),
            false_pos: (self.spam_false_pos * s).min(1.0),
            false_neg: (self.spam_false_neg * s).min(1.0),
            amp_rel: self.amp_fluctuation_rel * s,
            doppler_sigma: self.doppler_sigma * s,
            waist_strength: s,
            waist: self.laser_waist,
        }
    }
}

impl EffectiveNoise {
    pub fn has_spam(&self) -> bool {
        self.prep > 0.0 || self.false_pos > 0.0 || self.false_neg > 0.0
    }

    pub fn has_analog(&self) -> bool {
        self.amp_rel > 0.0 || self.doppler_sigma > 0.0 || (self.waist_strength > 0.0 && self.waist.is_finite())
    }
}

/// Per-atom modifications of the drive: `Ω_i(t) = omega_factor[i]·Ω(t)`,
/// `δ_i(t) = δ(t) + detuning_offset[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivePerturbation {
    pub omega_factor: Vec<f64>,
    pub detuning_offset: Vec<f64>,
}

impl DrivePerturbation {
    pub fn none(n: usize) -> Self {
        Self {
            omega_factor: vec![1.0; n],
            detuning_offset: vec![0.0; n],
        }
    }

    fn is_none(&self) -> bool {
        self.omega_factor.iter().all(|&f| f == 1.0) && self.detuning_offset.iter().all(|&d| d == 0.0)
    }

    /// Draws one realization of the analog noise channels.
    pub fn sample<R: Rng + ?Sized>(reg: &AtomRegister, noise: &EffectiveNoise, rng: &mut R) -> Self {
        let n = reg.len();
        let g: f64 = rng.sample(StandardNormal);
        let global = (1.0 + noise.amp_rel * g).max(0.0);
        let c = reg.centroid();
        let omega_factor = reg
            .coords
            .iter()
            .map(|p| {
                let r2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
                let falloff = 1.0 - (-r2 / (noise.waist * noise.waist)).exp();
                global * (1.0 - noise.waist_strength * falloff).max(0.0)
            })
            .collect();
        let detuning_offset = (0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                noise.doppler_sigma * z
            })
            .collect();
        Self {
            omega_factor,
            detuning_offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub final_state: Vec<Complex64>,
    /// `|‖ψ‖ − 1|` before the final renormalization.
    pub norm_drift: f64,
    /// Smallest gap between the two lowest instantaneous eigenvalues over the
    /// sampled times, when computed.
    pub min_gap_estimate: Option<f64>,
    pub n_atoms: usize,
}

impl EvolutionResult {
    pub fn probabilities(&self) -> Vec<f64> {
        self.final_state.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability that atom `i` is in the Rydberg state.
    pub fn excitation_probability(&self, atom: usize) -> f64 {
        let mask = 1usize << (self.n_atoms - 1 - atom);
        self.final_state
            .iter()
            .enumerate()
            .filter(|(b, _)| b & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub dt: f64,
    /// Number of times at which the spectral gap is sampled (registers of at
    /// most [`MAX_GAP_ATOMS`] atoms); 0 disables it.
    pub gap_samples: usize,
}

impl EvolveOptions {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, gap_samples: 0 }
    }
}

/// A time step resolving the largest energy scale of the problem, with between
/// 1000 and 20000 steps over the schedule.
pub fn default_dt(reg: &AtomRegister, sched: &PulseSchedule) -> Result<f64> {
    let u = reg.interaction_matrix()?;
    let umax = u.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
    let omax = sched
        .table(201)
        .iter()
        .fold(0.0f64, |m, &(_, o, _)| m.max(o));
    let scale = umax.max(omax).max(sched.max_abs_delta()).max(1.0);
    let steps = ((sched.duration * scale / 0.05).ceil() as usize).clamp(1000, 20_000);
    Ok(sched.duration / steps as f64)
}

fn check_register(n: usize) -> Result<()> {
    if n > MAX_ATOMS {
        return Err(Error::RegisterTooLarge {
            atoms: n,
            max: MAX_ATOMS,
        });
    }
    Ok(())
}

/// Evolves the all-ground state under the schedule with `dt`, computing the
/// spectral gap at 16 sampled times for small registers.
pub fn evolve(reg: &AtomRegister, sched: &PulseSchedule, dt: f64) -> Result<EvolutionResult> {
    let opts = EvolveOptions {
        dt,
        gap_samples: if reg.len() <= MAX_GAP_ATOMS { 16 } else { 0 },
    };
    evolve_with(reg, sched, &opts, &DrivePerturbation::none(reg.len()))
}

/// Second-order split-operator integration: each step of length `dt` is the
/// unitary `e^{−iD dt/2} · Π_i e^{−iΩ_i σx_i dt/2} · e^{−iD dt/2}` with the
/// drive evaluated at the step midpoint, where `D` is the diagonal part.
pub fn evolve_with(
    reg: &AtomRegister,
    sched: &PulseSchedule,
    opts: &EvolveOptions,
    pert: &DrivePerturbation,
) -> Result<EvolutionResult> {
    let n = reg.len();
    check_register(n)?;
    if pert.omega_factor.len() != n || pert.detuning_offset.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: pert.omega_factor.len(),
        });
    }
    let steps = (sched.duration / opts.dt).round() as usize;
    if !(opts.dt > 0.0) || steps < MIN_STEPS {
        return Err(Error::InvalidParameter(format!(
            "dt = {} gives {steps} steps; at least {MIN_STEPS} are required",
            opts.dt
        )));
    }
    let dt = sched.duration / steps as f64;
    let u = reg.interaction_matrix()?;
    let dim = 1usize << n;
    let atom_mask = |i: usize| 1usize << (n - 1 - i);

    // D(b) = fixed(b) − δ(t)·half_excess(b)
    let mut fixed = vec![0.0; dim];
    let mut half_excess = vec![0.0; dim];
    for b in 0..dim {
        let mut e = 0.0;
        let mut pop = 0usize;
        for i in 0..n {
            if b & atom_mask(i) == 0 {
                e += 0.5 * pert.detuning_offset[i];
                continue;
            }
            pop += 1;
            e -= 0.5 * pert.detuning_offset[i];
            for j in (i + 1)..n {
                if b & atom_mask(j) != 0 {
                    e += u[i][j];
                }
            }
        }
        fixed[b] = e;
        half_excess[b] = pop as f64 - 0.5 * n as f64;
    }

    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    psi[0] = Complex64::new(1.0, 0.0);

    let apply_diag = |psi: &mut [Complex64], delta: f64, tau: f64| {
        for (b, a) in psi.iter_mut().enumerate() {
            let phase = -(fixed[b] - delta * half_excess[b]) * tau;
            *a *= Complex64::from_polar(1.0, phase);
        }
    };
    let apply_drive = |psi: &mut [Complex64], omega: f64| {
        for i in 0..n {
            let theta = 0.5 * omega * pert.omega_factor[i] * dt;
            if theta == 0.0 {
                continue;
            }
            let (s, c) = theta.sin_cos();
            let mis = Complex64::new(0.0, -s);
            let m = atom_mask(i);
            for b in 0..dim {
                if b & m == 0 {
                    let (a0, a1) = (psi[b], psi[b | m]);
                    psi[b] = a0 * c + a1 * mis;
                    psi[b | m] = a0 * mis + a1 * c;
                }
            }
        }
    };

    let mid = |k: usize| (k as f64 + 0.5) * dt;
    apply_diag(&mut psi, sched.delta_at(mid(0)), 0.5 * dt);
    for k in 0..steps {
        let tm = mid(k);
        apply_drive(&mut psi, sched.omega_at(tm));
        if k + 1 < steps {
            // Merge this step's closing half with the next step's opening half.
            let d0 = sched.delta_at(tm);
            let d1 = sched.delta_at(mid(k + 1));
            for (b, a) in psi.iter_mut().enumerate() {
                let phase = -(fixed[b] * dt - 0.5 * dt * (d0 + d1) * half_excess[b]);
                *a *= Complex64::from_polar(1.0, phase);
            }
        } else {
            apply_diag(&mut psi, sched.delta_at(tm), 0.5 * dt);
        }
    }

    let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let norm_drift = (norm - 1.0).abs();
    for a in &mut psi {
        *a /= norm;
    }

    let min_gap_estimate = if opts.gap_samples > 0 && n <= MAX_GAP_ATOMS {
        Some(min_gap(&fixed, &half_excess, n, sched, pert, opts.gap_samples))
    } else {
        None
    };

    Ok(EvolutionResult {
        final_state: psi,
        norm_drift,
        min_gap_estimate,
        n_atoms: n,
    })
}

fn min_gap(
    fixed: &[f64],
    half_excess: &[f64],
    n: usize,
    sched: &PulseSchedule,
    pert: &DrivePerturbation,
    samples: usize,
) -> f64 {
    let dim = 1usize << n;
    let mut best = f64::INFINITY;
    for s in 0..samples {
        let t = if samples == 1 {
            0.5 * sched.duration
        } else {
            sched.duration * s as f64 / (samples - 1) as f64
        };
        let (omega, delta) = (sched.omega_at(t), sched.delta_at(t));
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for b in 0..dim {
            h[(b, b)] = fixed[b] - delta * half_excess[b];
            for i in 0..n {
                let m = 1usize << (n - 1 - i);
                h[(b, b ^ m)] = 0.5 * omega * pert.omega_factor[i];
            }
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        if ev.len() >= 2 {
            best = best.min(ev[1] - ev[0]);
        }
    }
    best
}

fn sample_basis<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

fn apply_spam<R: Rng + ?Sized>(bits: &mut [u8], noise: &EffectiveNoise, rng: &mut R) {
    for b in bits.iter_mut() {
        if noise.prep > 0.0 && rng.random::<f64>() < noise.prep {
            *b = 0;
        }
        let flip = if *b == 0 { noise.false_pos } else { noise.false_neg };
        if flip > 0.0 && rng.random::<f64>() < flip {
            *b ^= 1;
        }
    }
}

fn draw_shots<R: Rng + ?Sized>(
    res: &EvolutionResult,
    shots: usize,
    noise: &EffectiveNoise,
    rng: &mut R,
    out: &mut Vec<BitString>,
) {
    let mut acc = 0.0;
    let cdf: Vec<f64> = res
        .final_state
        .iter()
        .map(|a| {
            acc += a.norm_sqr();
            acc
        })
        .collect();
    for _ in 0..shots {
        let idx = sample_basis(&cdf, rng);
        let mut bits = BitString::from_index(idx as u64, res.n_atoms).bits().to_vec();
        if noise.has_spam() {
            apply_spam(&mut bits, noise, rng);
        }
        out.push(BitString::new(bits).expect("binary"));
    }
}

/// Samples measurement outcomes from `|amplitude|²` and applies the readout
/// (SPAM) channels of `noise`. Analog channels need a fresh evolution per
/// realization and are handled by [`sample_noisy`].
pub fn sample_shots(
    res: &EvolutionResult,
    shots: usize,
    noise: &NoiseConfig,
    seed: u64,
) -> Result<SolutionDistribution> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be positive".into()));
    }
    noise.validate()?;
    let eff = noise.effective();
    let mut rng = stream_rng(seed, 0);
    let mut out = Vec::with_capacity(shots);
    draw_shots(res, shots, &eff, &mut rng, &mut out);
    SolutionDistribution::from_samples(out)
}

/// Diagnostics of a full noisy anneal.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealOutcome {
    pub distribution: SolutionDistribution,
    /// Largest norm drift across the evolutions performed.
    pub norm_drift: f64,
    pub min_gap_estimate: Option<f64>,
    pub evolutions: usize,
}

/// Full shot pipeline. Without analog noise a single evolution is sampled
/// `shots` times; otherwise the shots are split over `noise.realizations`
/// groups, each evolved under its own drive perturbation.
pub fn sample_noisy(
    reg: &AtomRegister,
    sched: &PulseSchedule,
    opts: &EvolveOptions,
    shots: usize,
    noise: &NoiseConfig,
    seed: u64,
) -> Result<AnnealOutcome> {
    noise.validate()?;
    check_register(reg.len())?;
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be positive".into()));
    }
    let eff = noise.effective();
    if !eff.has_analog() {
        let res = evolve_with(reg, sched, opts, &DrivePerturbation::none(reg.len()))?;
        let distribution = sample_shots(&res, shots, noise, seed)?;
        return Ok(AnnealOutcome {
            distribution,
            norm_drift: res.norm_drift,
            min_gap_estimate: res.min_gap_estimate,
            evolutions: 1,
        });
    }
    let groups = noise.realizations.min(shots);
    let mut samples = Vec::with_capacity(shots);
    let mut norm_drift = 0.0f64;
    let mut gap: Option<f64> = None;
    for g in 0..groups {
        let mut rng = stream_rng(seed, 1 + g as u64);
        let pert = DrivePerturbation::sample(reg, &eff, &mut rng);
        let res = if pert.is_none() {
            evolve_with(reg, sched, opts, &DrivePerturbation::none(reg.len()))?
        } else {
            evolve_with(reg, sched, opts, &pert)?
        };
        norm_drift = norm_drift.max(res.norm_drift);
        if let Some(v) = res.min_gap_estimate {
            gap = Some(gap.map_or(v, |m| m.min(v)));
        }
        let group_shots = shots / groups + usize::from(g < shots % groups);
        draw_shots(&res, group_shots, &eff, &mut rng, &mut samples);
    }
    Ok(AnnealOutcome {
        distribution: SolutionDistribution::from_samples(samples)?,
        norm_drift,
        min_gap_estimate: gap,
        evolutions: groups,
    })
}

/// Anneals an embedded QUBO: evolve under `sched` and sample `shots` outcomes.
pub fn anneal_qubo(
    q: &QuboProblem,
    reg: &AtomRegister,
    sched: &PulseSchedule,
    noise: &NoiseConfig,
    shots: usize,
    seed: u64,
) -> Result<SolutionDistribution> {
    Ok(anneal_qubo_detailed(q, reg, sched, noise, shots, seed)?.distribution)
}

pub fn anneal_qubo_detailed(
    q: &QuboProblem,
    reg: &AtomRegister,
    sched: &PulseSchedule,
    noise: &NoiseConfig,
    shots: usize,
    seed: u64,
) -> Result<AnnealOutcome> {
    if q.n() != reg.len() {
        return Err(Error::DimensionMismatch {
            expected: q.n(),
            got: reg.len(),
        });
    }
    check_register(reg.len())?;
    let opts = EvolveOptions {
        dt: default_dt(reg, sched)?,
        gap_samples: 0,
    };
    sample_noisy(reg, sched, &opts, shots, noise, seed)
}
