//! Placement of atoms so that the register's interactions approximate the
//! pairwise couplings of a QUBO.
//!
//! Only the off-diagonal structure can be realized by positions: the target
//! coupling for `i < j` is `max(q_ij + q_ji, 0)`. Negative couplings and the
//! diagonal are reported as unrepresented mass.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::anneal::{metropolis_accept, stream_rng, GeometricCooling};
use crate::error::{Error, Result};
use crate::qubo::QuboProblem;
use crate::rydberg::{AtomRegister, DEFAULT_C6};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMode {
    #[default]
    Continuous,
    TriangularLattice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub mode: EmbeddingMode,
    pub lattice_constant: f64,
    pub min_distance: f64,
    pub max_radius: f64,
    pub max_iters: usize,
    pub seed: u64,
    #[serde(default = "default_c6")]
    pub c6: f64,
}

fn default_c6() -> f64 {
    DEFAULT_C6
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            mode: EmbeddingMode::Continuous,
            lattice_constant: 5.0,
            min_distance: 4.0,
            max_radius: 35.0,
            max_iters: 2000,
            seed: 0,
            c6: DEFAULT_C6,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lattice_constant < self.min_distance {
            return Err(Error::InvalidParameter(format!(
                "lattice constant {} is below the minimum distance {}",
                self.lattice_constant, self.min_distance
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.min_distance > 0.0 && self.max_radius > 0.0 && self.c6 > 0.0) {
            return Err(Error::InvalidParameter(
                "distances and c6 must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Off-diagonal couplings realizable by a register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTarget {
    /// Symmetric, zero diagonal; `t[i][j] = max(q_ij + q_ji, 0)`.
    pub t: Vec<Vec<f64>>,
    /// `Σ_{i<j} max(−(q_ij + q_ji), 0)`.
    pub clipped_mass: f64,
    /// `Σ_i |q_ii|`.
    pub diagonal_mass: f64,
}

pub fn coupling_target(q: &QuboProblem) -> CouplingTarget {
    let n = q.n();
    let mut t = vec![vec![0.0; n]; n];
    let mut clipped_mass = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let c = q.get(i, j) + q.get(j, i);
            if c > 0.0 {
                t[i][j] = c;
                t[j][i] = c;
            } else {
                clipped_mass -= c;
            }
        }
    }
    let diagonal_mass = (0..n).map(|i| q.get(i, i).abs()).sum();
    CouplingTarget {
        t,
        clipped_mass,
        diagonal_mass,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub register: AtomRegister,
    /// `Σ_{i<j} (c6/r_ij⁶ − T_ij)²`.
    pub objective: f64,
    pub target: CouplingTarget,
}

/// `Σ_{i<j} (c6/r_ij⁶ − T_ij)²` for a coordinate list.
pub fn residual(coords: &[[f64; 2]], t: &[Vec<f64>], c6: f64) -> f64 {
    let n = coords.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let r2 = (coords[i][0] - coords[j][0]).powi(2) + (coords[i][1] - coords[j][1]).powi(2);
            let d = c6 / (r2 * r2 * r2) - t[i][j];
            s += d * d;
        }
    }
    s
}

pub fn embed(q: &QuboProblem, cfg: &EmbeddingConfig) -> Result<EmbeddingReport> {
    match cfg.mode {
        EmbeddingMode::Continuous => embed_continuous(q, cfg),
        EmbeddingMode::TriangularLattice => embed_lattice(q, cfg),
    }
}

fn max_packed(cfg: &EmbeddingConfig) -> usize {
    let r = cfg.max_radius + 0.5 * cfg.min_distance;
    let cell = 0.5 * 3f64.sqrt() * cfg.min_distance * cfg.min_distance;
    (std::f64::consts::PI * r * r / cell).floor() as usize
}

/// Continuous placement by a derivative-free simplex search under
/// min-distance and max-radius penalties, started from a ring layout and from
/// the best lattice layout; the best feasible result is returned.
pub fn embed_continuous(q: &QuboProblem, cfg: &EmbeddingConfig) -> Result<EmbeddingReport> {
    cfg.validate()?;
    let n = q.n();
    if n > max_packed(cfg) {
        return Err(Error::Infeasible(format!(
            "{n} atoms cannot fit within radius {} at spacing {}",
            cfg.max_radius, cfg.min_distance
        )));
    }
    let target = coupling_target(q);
    if n == 1 {
        return finish(vec![[0.0, 0.0]], target, cfg);
    }

    let mut candidates: Vec<Vec<[f64; 2]>> = Vec::new();
    let ring = ring_layout(n, cfg);
    let t = &target.t;
    let penalty_scale = 1e6 * (1.0 + t.iter().flatten().fold(0.0f64, |m, v| m.max(v * v)));
    let f = |x: &[f64]| {
        let coords: Vec<[f64; 2]> = x.chunks(2).map(|p| [p[0], p[1]]).collect();
        let mut pen = 0.0;
        for i in 0..n {
            let rad = coords[i][0].hypot(coords[i][1]);
            if rad > cfg.max_radius {
                pen += (rad - cfg.max_radius).powi(2);
            }
            for j in (i + 1)..n {
                let r = (coords[i][0] - coords[j][0]).hypot(coords[i][1] - coords[j][1]);
                if r < cfg.min_distance {
                    pen += (cfg.min_distance - r).powi(2);
                }
                if r < 1e-3 {
                    return f64::MAX;
                }
            }
        }
        residual(&coords, t, cfg.c6) + penalty_scale * pen
    };

    let lattice = embed_lattice(
        q,
        &EmbeddingConfig {
            mode: EmbeddingMode::TriangularLattice,
            ..cfg.clone()
        },
    )
    .ok();

    let mut starts = vec![ring];
    if let Some(l) = &lattice {
        starts.push(l.register.coords.clone());
    }
    let budget = cfg.max_iters;
    for start in starts {
        let x0: Vec<f64> = start.iter().flat_map(|p| [p[0], p[1]]).collect();
        let x = nelder_mead(&f, x0, 0.5 * cfg.min_distance, budget);
        let mut coords: Vec<[f64; 2]> = x.chunks(2).map(|p| [p[0], p[1]]).collect();
        repair(&mut coords, cfg);
        if feasible(&coords, cfg) {
            candidates.push(coords);
        }
    }
    if let Some(l) = lattice {
        candidates.push(l.register.coords);
    }
    let best = candidates
        .into_iter()
        .map(|c| (residual(&c, t, cfg.c6), c))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::Infeasible("no feasible layout found".into()))?
        .1;
    finish(best, target, cfg)
}

fn finish(coords: Vec<[f64; 2]>, target: CouplingTarget, cfg: &EmbeddingConfig) -> Result<EmbeddingReport> {
    let objective = residual(&coords, &target.t, cfg.c6);
    let register = AtomRegister::new(coords, cfg.c6, cfg.min_distance)?;
    Ok(EmbeddingReport {
        register,
        objective,
        target,
    })
}

fn ring_layout(n: usize, cfg: &EmbeddingConfig) -> Vec<[f64; 2]> {
    let chord = 1.05 * cfg.min_distance / (2.0 * (std::f64::consts::PI / n as f64).sin());
    let radius = chord.max(0.25 * cfg.min_distance * n as f64).min(cfg.max_radius);
    (0..n)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            [radius * a.cos(), radius * a.sin()]
        })
        .collect()
}

fn min_pair_distance(coords: &[[f64; 2]]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..coords.len() {
        for j in (i + 1)..coords.len() {
            m = m.min((coords[i][0] - coords[j][0]).hypot(coords[i][1] - coords[j][1]));
        }
    }
    m
}

/// Removes the small constraint violations a penalty method leaves behind.
fn repair(coords: &mut [[f64; 2]], cfg: &EmbeddingConfig) {
    let n = coords.len() as f64;
    let cx = coords.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = coords.iter().map(|p| p[1]).sum::<f64>() / n;
    for p in coords.iter_mut() {
        p[0] -= cx;
        p[1] -= cy;
    }
    let m = min_pair_distance(coords);
    if m < cfg.min_distance && m > 0.0 {
        let s = cfg.min_distance / m * (1.0 + 1e-12);
        for p in coords.iter_mut() {
            p[0] *= s;
            p[1] *= s;
        }
    }
}

fn feasible(coords: &[[f64; 2]], cfg: &EmbeddingConfig) -> bool {
    coords.iter().all(|p| p[0].hypot(p[1]) <= cfg.max_radius * (1.0 + 1e-9))
        && min_pair_distance(coords) >= cfg.min_distance * (1.0 - 1e-9)
}

/// Nelder–Mead with dimension-adapted coefficients, restarted from the best
/// vertex until the evaluation budget (`iters` iterations) is exhausted or a
/// restart no longer improves.
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, x0: Vec<f64>, step: f64, iters: usize) -> Vec<f64> {
    let dim = x0.len();
    let d = dim as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / d, 0.75 - 0.5 / d, 1.0 - 1.0 / d);
    let mut best = x0;
    let mut best_f = f(&best);
    let mut used = 0usize;
    let mut scale = step;
    while used < iters {
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        simplex.push((best.clone(), best_f));
        for i in 0..dim {
            let mut v = best.clone();
            v[i] += scale;
            let fv = f(&v);
            simplex.push((v, fv));
        }
        let start_f = best_f;
        while used < iters {
            used += 1;
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[dim].1 - simplex[0].1;
            if spread <= 1e-16 * (1.0 + simplex[0].1.abs()) {
                break;
            }
            let mut centroid = vec![0.0; dim];
            for (v, _) in &simplex[..dim] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / d;
                }
            }
            let worst = simplex[dim].0.clone();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&worst).map(|(c, w)| c + t * (c - w)).collect()
            };
            let xr = along(alpha);
            let fr = f(&xr);
            if fr < simplex[0].1 {
                let xe = along(alpha * gamma);
                let fe = f(&xe);
                simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[dim - 1].1 {
                simplex[dim] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[dim].1 {
                    let xc = along(alpha * rho);
                    let fc = f(&xc);
                    (xc, fc)
                } else {
                    let xc = along(-rho);
                    let fc = f(&xc);
                    (xc, fc)
                };
                if fc < simplex[dim].1.min(fr) {
                    simplex[dim] = (xc, fc);
                } else {
                    let b = simplex[0].0.clone();
                    for (v, fv) in simplex.iter_mut().skip(1) {
                        for (x, bx) in v.iter_mut().zip(&b) {
                            *x = bx + sigma * (*x - bx);
                        }
                        *fv = f(v);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best_f {
            best = simplex[0].0.clone();
            best_f = simplex[0].1;
        }
        if start_f - best_f <= 1e-14 * (1.0 + best_f.abs()) {
            if scale < step * 1e-6 {
                break;
            }
            scale *= 0.1;
        }
    }
    best
}

/// Sites of a triangular lattice within `radius` of the origin, nearest first.
pub fn lattice_sites(lattice_constant: f64, radius: f64) -> Vec<[f64; 2]> {
    let h = 0.5 * 3f64.sqrt();
    let span = (radius / (h * lattice_constant)).ceil() as i64 + 1;
    let mut sites = Vec::new();
    for j in -span..=span {
        for i in -2 * span..=2 * span {
            let x = lattice_constant * (i as f64 + 0.5 * j as f64);
            let y = lattice_constant * h * j as f64;
            if x.hypot(y) <= radius * (1.0 + 1e-12) {
                sites.push([x, y]);
            }
        }
    }
    sites.sort_by(|a, b| {
        let (ra, rb) = (a[0].hypot(a[1]), b[0].hypot(b[1]));
        ra.total_cmp(&rb)
            .then(a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])))
    });
    sites
}

/// Site-swap simulated annealing over placements on a triangular lattice.
pub fn embed_lattice(q: &QuboProblem, cfg: &EmbeddingConfig) -> Result<EmbeddingReport> {
    cfg.validate()?;
    let n = q.n();
    let sites = lattice_sites(cfg.lattice_constant, cfg.max_radius);
    if sites.len() < n {
        return Err(Error::Infeasible(format!(
            "lattice window holds {} sites, {n} atoms requested",
            sites.len()
        )));
    }
    let target = coupling_target(q);
    let t = &target.t;
    let pair = |a: usize, b: usize| -> f64 {
        let (p, s) = (sites[a], sites[b]);
        let r2 = (p[0] - s[0]).powi(2) + (p[1] - s[1]).powi(2);
        cfg.c6 / (r2 * r2 * r2)
    };
    // Cost contribution of atom `i` sitting at `site`, given the others.
    let atom_cost = |place: &[usize], i: usize, site: usize, skip: Option<usize>| -> f64 {
        (0..n)
            .filter(|&j| j != i && Some(j) != skip)
            .map(|j| (pair(site, place[j]) - t[i][j]).powi(2))
            .sum()
    };

    let mut place: Vec<usize> = (0..n).collect();
    let mut occupant: Vec<Option<usize>> = vec![None; sites.len()];
    for (i, &s) in place.iter().enumerate() {
        occupant[s] = Some(i);
    }
    let coords_of = |place: &[usize]| -> Vec<[f64; 2]> { place.iter().map(|&s| sites[s]).collect() };
    let mut cost = residual(&coords_of(&place), t, cfg.c6);
    let mut best = (cost, place.clone());
    if n <= 1 {
        return finish(coords_of(&place), target, cfg);
    }

    let mut rng = stream_rng(cfg.seed, 0x1a77);
    let propose = |rng: &mut rand_chacha::ChaCha8Rng, place: &[usize], occupant: &[Option<usize>]| {
        let i = rng.random_range(0..n);
        let s = rng.random_range(0..sites.len());
        let delta = match occupant[s] {
            Some(j) if j == i => 0.0,
            Some(j) => {
                let (si, sj) = (place[i], place[j]);
                let before = atom_cost(place, i, si, Some(j)) + atom_cost(place, j, sj, Some(i));
                let after = atom_cost(place, i, sj, Some(j)) + atom_cost(place, j, si, Some(i));
                after - before
            }
            None => atom_cost(place, i, s, None) - atom_cost(place, i, place[i], None),
        };
        (i, s, delta)
    };

    let mut scale = 0.0;
    for _ in 0..64 {
        scale += propose(&mut rng, &place, &occupant).2.abs();
    }
    let t_start = (scale / 64.0).max(1e-12);
    let cooling = GeometricCooling::new(t_start, 1e-6 * t_start, cfg.max_iters);
    for stage in 0..cooling.stages() {
        let temp = cooling.temperature(stage);
        for _ in 0..4 * n {
            let (i, s, delta) = propose(&mut rng, &place, &occupant);
            if delta == 0.0 && occupant[s] == Some(i) {
                continue;
            }
            if metropolis_accept(&mut rng, delta, temp) {
                let from = place[i];
                match occupant[s] {
                    Some(j) => {
                        place[j] = from;
                        occupant[from] = Some(j);
                    }
                    None => occupant[from] = None,
                }
                place[i] = s;
                occupant[s] = Some(i);
                cost += delta;
                if cost < best.0 {
                    best = (cost, place.clone());
                }
            }
        }
    }
    finish(coords_of(&best.1), target, cfg)
}
