use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rustfft::num_complex::Complex64;

use super::combine::{combine_sampled, PulseCombination, PulseTerm};
use super::gaussian::{gaussian_derivative_pulse, GaussianPulseSpec, DEFAULT_SUPPORT_SIGMAS};
use super::mask::SpectralMask;
use super::psd::dtft_power;
use crate::error::{Error, Result, Warning};
use crate::units::dbm_per_mhz_to_density;
use crate::waveform::SampledWaveform;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Grid on which the returned design is guaranteed compliant, Hz.
    pub grid_spacing: f64,
    /// Grid used inside the delay search, Hz.
    pub search_spacing: f64,
    /// Simulation sample period; delays are multiples of it.
    pub sample_period: f64,
    /// Reweighting passes per delay configuration.
    pub reweight_iterations: usize,
    /// Cap on delay configurations evaluated during the search.
    pub max_evaluations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            grid_spacing: 1e6,
            search_spacing: 10e6,
            sample_period: 6.25e-12,
            reweight_iterations: 25,
            max_evaluations: 600,
        }
    }
}

/// Result of the mask-constrained design.
#[derive(Debug, Clone)]
pub struct PulseDesign {
    /// Unit-energy combination on the simulation grid.
    pub combination: PulseCombination,
    /// Largest average transmit power, in watts, that keeps the PSD under the mask.
    pub max_tx_power_w: f64,
    /// `max_f PSD/mask` per watt after the closed-form step.
    pub step1_objective: f64,
    /// Same after refinement; never above `step1_objective`.
    pub step2_objective: f64,
    pub converged: bool,
    pub evaluations: usize,
    pub warnings: Vec<Warning>,
}

impl PulseDesign {
    pub fn waveform(&self, sample_period: f64) -> Result<SampledWaveform> {
        Ok(super::combine::combine_pulses(&self.combination, sample_period)?.waveform)
    }

    /// Transmit gain (in dB) over a single base pulse designed for the same mask.
    pub fn objective_db(&self) -> f64 {
        -10.0 * self.step2_objective.log10()
    }
}

/// Precomputed spectral data on one frequency grid.
struct Grid {
    freqs: Vec<f64>,
    /// 2|P(f)|^2 / M(f), the per-watt PSD-to-mask ratio of the base pulse.
    gain: Vec<f64>,
}

impl Grid {
    fn new(mask: &SpectralMask, base: &SampledWaveform, spacing: f64) -> Result<Self> {
        let n = (mask.f_max() / spacing).floor() as usize;
        let freqs: Vec<f64> = (0..=n).map(|k| k as f64 * spacing).collect();
        let pulse = dtft_power(base, &freqs);
        let mut gain = Vec::with_capacity(freqs.len());
        let mut any_open = false;
        for (&f, &p) in freqs.iter().zip(&pulse) {
            let limit = dbm_per_mhz_to_density(mask.limit_at(f).unwrap_or(f64::NEG_INFINITY));
            if limit > 0.0 {
                any_open = true;
            }
            gain.push(if p == 0.0 {
                0.0
            } else if limit > 0.0 {
                2.0 * p / limit
            } else {
                f64::INFINITY
            });
        }
        if !any_open {
            return Err(Error::InfeasibleMask("mask limit is zero at every frequency".into()));
        }
        Ok(Self { freqs, gain })
    }

    fn phasors(&self, delays: &[f64]) -> Vec<Complex64> {
        let mut e = Vec::with_capacity(self.freqs.len() * delays.len());
        for &f in &self.freqs {
            for &xi in delays {
                e.push(Complex64::from_polar(1.0, -2.0 * PI * f * xi));
            }
        }
        e
    }

    /// Per-frequency ratio g_f |Σ u_i e^{-j2πfξ_i}|^2.
    fn ratios(&self, phasors: &[Complex64], u: &[f64]) -> Vec<f64> {
        let m = u.len();
        self.gain
            .iter()
            .enumerate()
            .map(|(k, &g)| {
                if g == 0.0 {
                    return 0.0;
                }
                let a: Complex64 = phasors[k * m..(k + 1) * m].iter().zip(u).map(|(e, &w)| e * w).sum();
                let r = g * a.norm_sqr();
                if r.is_nan() {
                    f64::INFINITY
                } else {
                    r
                }
            })
            .collect()
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

/// Discrete autocorrelation of the sampled base pulse at integer lags.
fn discrete_autocorr(base: &SampledWaveform) -> Vec<f64> {
    let s = base.samples();
    let dt = base.sample_period();
    (0..s.len())
        .map(|m| s.iter().zip(&s[m..]).map(|(a, b)| a * b).sum::<f64>() * dt)
        .collect()
}

fn gram(ac: &[f64], ks: &[i64]) -> DMatrix<f64> {
    let n = ks.len();
    DMatrix::from_fn(n, n, |i, j| {
        let lag = (ks[i] - ks[j]).unsigned_abs() as usize;
        ac.get(lag).copied().unwrap_or(0.0)
    })
}

/// Minimizer of `uᵀQu` subject to `uᵀRu = 1`.
fn min_generalized_eigvec(q: &DMatrix<f64>, r: &DMatrix<f64>) -> Option<Vec<f64>> {
    let n = r.nrows();
    let chol = r.clone().cholesky().or_else(|| {
        let ridge = 1e-12 * r.trace().max(f64::MIN_POSITIVE);
        (r + DMatrix::identity(n, n) * ridge).cholesky()
    })?;
    let l = chol.l();
    let linv = l.clone().try_inverse()?;
    let c = &linv * q * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let imin = (0..n).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))?;
    let y = eig.eigenvectors.column(imin).into_owned();
    let u = linv.transpose() * y;
    let norm = (u.transpose() * r * &u)[(0, 0)].sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let mut u: Vec<f64> = u.iter().map(|x| x / norm).collect();
    if let Some(first) = u.iter().find(|x| x.abs() > 1e-14) {
        if *first < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Some(u)
}

/// Weighted quadratic form Q_ij = Σ_f v_f g_f Re(e_fi conj(e_fj)).
fn weighted_q(grid: &Grid, phasors: &[Complex64], weights: &[f64], m: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(m, m);
    for (k, (&g, &v)) in grid.gain.iter().zip(weights).enumerate() {
        let w = g * v;
        if w == 0.0 || !w.is_finite() {
            continue;
        }
        let e = &phasors[k * m..(k + 1) * m];
        for i in 0..m {
            for j in 0..=i {
                q[(i, j)] += w * (e[i] * e[j].conj()).re;
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            q[(j, i)] = q[(i, j)];
        }
    }
    q
}

struct Solve {
    u: Vec<f64>,
    objective: f64,
}

/// Closed-form weighted-LS solution, then multiplicative reweighting toward
/// the worst frequencies; returns the best iterate under the min-max objective.
fn solve_weights(grid: &Grid, ac: &[f64], ks: &[i64], dt: f64, iterations: usize) -> Option<(Solve, Solve)> {
    let m = ks.len();
    let delays: Vec<f64> = ks.iter().map(|&k| k as f64 * dt).collect();
    let phasors = grid.phasors(&delays);
    let r = gram(ac, ks);
    let finite = grid.gain.iter().filter(|g| g.is_finite()).count().max(1) as f64;
    let mut v: Vec<f64> = grid
        .gain
        .iter()
        .map(|g| if g.is_finite() { 1.0 / finite } else { 0.0 })
        .collect();
    let mut first: Option<Solve> = None;
    let mut best: Option<Solve> = None;
    for _ in 0..=iterations {
        let q = weighted_q(grid, &phasors, &v, m);
        let scale = q.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let q = if scale > 0.0 { q / scale } else { q };
        let u = min_generalized_eigvec(&q, &r)?;
        let ratios = grid.ratios(&phasors, &u);
        let objective = max_of(&ratios);
        if first.is_none() {
            first = Some(Solve {
                u: u.clone(),
                objective,
            });
        }
        if best.as_ref().is_none_or(|b| objective < b.objective) {
            best = Some(Solve { u, objective });
        }
        let mut total = 0.0;
        for (vf, (rf, g)) in v.iter_mut().zip(ratios.iter().zip(&grid.gain)) {
            if g.is_finite() {
                *vf *= rf.sqrt();
                total += *vf;
            }
        }
        if !(total > 0.0) || !total.is_finite() {
            break;
        }
        v.iter_mut().for_each(|x| *x /= total);
    }
    Some((first?, best?))
}

fn evaluate(grid: &Grid, ks: &[i64], dt: f64, u: &[f64]) -> f64 {
    let delays: Vec<f64> = ks.iter().map(|&k| k as f64 * dt).collect();
    max_of(&grid.ratios(&grid.phasors(&delays), u))
}

/// Design `M+1` weighted, delayed base pulses that carry the most power under `mask`.
///
/// Step 1 solves the uniformly weighted least-squares relaxation in closed form
/// (a generalized eigenproblem) with delays spread evenly over `delay_range`.
/// Step 2 reweights the frequency grid toward the worst ratios and runs a
/// deterministic pattern search over the delays, keeping the best iterate.
pub fn optimize_pulse_design(
    mask: &SpectralMask,
    base: &GaussianPulseSpec,
    m: usize,
    delay_range: f64,
    cfg: &OptimizerConfig,
) -> Result<PulseDesign> {
    mask.validate()?;
    base.validate()?;
    if !(delay_range >= 0.0) || !delay_range.is_finite() {
        return Err(Error::invalid("delay range must be finite and non-negative"));
    }
    let dt = cfg.sample_period;
    let pulse = gaussian_derivative_pulse(base, dt, DEFAULT_SUPPORT_SIGMAS * base.sigma)?;
    let ac = discrete_autocorr(&pulse);
    let fine = Grid::new(mask, &pulse, cfg.grid_spacing)?;
    let coarse = Grid::new(mask, &pulse, cfg.search_spacing.max(cfg.grid_spacing))?;

    let k_max = (delay_range / dt + 1e-9).floor() as i64;
    if (m as i64) > k_max && m > 0 {
        return Err(Error::invalid(format!(
            "delay range holds {} grid points, fewer than the {} pulses requested",
            k_max + 1,
            m + 1
        )));
    }
    let mut ks: Vec<i64> = (0..=m)
        .map(|i| {
            if m == 0 {
                0
            } else {
                (i as f64 * k_max as f64 / m as f64).round() as i64
            }
        })
        .collect();

    let infeasible = || Error::InfeasibleMask("no finite transmit power satisfies the mask".into());
    let (step1, _) = solve_weights(&fine, &ac, &ks, dt, 0).ok_or_else(infeasible)?;
    let step1_objective = step1.objective;
    let mut best_u = step1.u.clone();
    let mut best_fine = step1_objective;
    let mut best_ks = ks.clone();

    let mut evaluations = 0usize;
    let mut converged = true;
    if m > 0 {
        let score = |ks: &[i64], evals: &mut usize| -> Option<Solve> {
            *evals += 1;
            solve_weights(&coarse, &ac, ks, dt, cfg.reweight_iterations).map(|(_, b)| b)
        };
        let mut current = score(&ks, &mut evaluations).ok_or_else(infeasible)?;
        let mut step = (k_max / 4).max(1);
        'search: loop {
            let mut improved = false;
            for i in 1..=m {
                for dir in [-1i64, 1] {
                    let cand = ks[i] + dir * step;
                    if cand < 0 || cand > k_max || ks.contains(&cand) {
                        continue;
                    }
                    if evaluations >= cfg.max_evaluations {
                        converged = false;
                        break 'search;
                    }
                    let mut trial = ks.clone();
                    trial[i] = cand;
                    if let Some(s) = score(&trial, &mut evaluations) {
                        if s.objective < current.objective * (1.0 - 1e-9) {
                            current = s;
                            ks = trial;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                if step == 1 {
                    break;
                }
                step /= 2;
            }
        }
        let candidates = [
            Some(current.u.clone()),
            solve_weights(&fine, &ac, &ks, dt, cfg.reweight_iterations).map(|(_, b)| b.u),
        ];
        for u in candidates.into_iter().flatten() {
            let j = evaluate(&fine, &ks, dt, &u);
            if j < best_fine {
                best_fine = j;
                best_u = u;
                best_ks = ks.clone();
            }
        }
    }
    if !best_fine.is_finite() || !(best_fine > 0.0) {
        return Err(infeasible());
    }

    // Order terms by delay and shift so the earliest pulse sits at zero.
    let mut order: Vec<usize> = (0..best_ks.len()).collect();
    order.sort_by_key(|&i| best_ks[i]);
    let k0 = best_ks[order[0]];
    let terms = order
        .iter()
        .map(|&i| PulseTerm {
            weight: best_u[i],
            delay: (best_ks[i] - k0) as f64 * dt,
        })
        .collect();
    let combination = PulseCombination { base: *base, terms };
    let mut warnings = Vec::new();
    if !converged {
        warnings.push(Warning::NotConverged {
            iterations: evaluations,
        });
    }
    // The snapped combination must reproduce the optimized energy exactly.
    debug_assert!({
        let w = combine_sampled(&pulse, &combination.weights(), &combination.delays()).map(|c| c.waveform.energy());
        w.is_ok_and(|e| (e - 1.0).abs() < 1e-6)
    });
    Ok(PulseDesign {
        combination,
        max_tx_power_w: 1.0 / best_fine,
        step1_objective,
        step2_objective: best_fine,
        converged,
        evaluations,
        warnings,
    })
}
