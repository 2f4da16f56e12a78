//! Group velocities on the Brillouin torus and their large-coupling
//! scaling.
//!
//! The transport content of the operator sits in the fiber derivatives
//! `p_i · ∂λ_n/∂θ_i`: their sup over bands and quasimomenta is the norm
//! of the velocity component `G_i`, the sup of the Euclidean row norm is
//! the asymptotic velocity, and the `δ₀`-weighted quadrature
//! `‖G_i δ₀‖² = p_i² ∫ Σ_n |∂λ_n/∂θ_i|² ‖Π_n e₀‖² dθ/|𝕋^d|` gives the
//! spreading rate of a walker started at the origin. Derivatives are
//! evaluated by the Hellmann–Feynman identity `⟨v, (∂H/∂θ_i) v⟩` with
//! the θ-derivative taken on the symbolic Laplacian, so there is no
//! finite differencing anywhere in the chain.
//!
//! Coupling sweeps fit `log v` against `log μ` and compare the slope
//! with `−(p₀−1)` and the prefactor with the straight-loop prediction.

use crate::error::{Error, Result};
use crate::fit::{power_law_fit, PowerLawFit};
use crate::floquet::{floquet_laplacian, torus_point, LaurentMatrix};
use crate::lattice::LatticeModel;
use crate::laurent::rat_to_f64;
use crate::linalg::{self, C64};
use crate::perturb::straight_loop_constant;
use nalgebra::DMatrix;

/// Uniform tensor grid on the torus with nodes `θ_j = 2πk/N_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaGrid {
    pub counts: Vec<usize>,
}

impl ThetaGrid {
    pub fn uniform(dims: usize, n: usize) -> Self {
        ThetaGrid {
            counts: vec![n; dims],
        }
    }

    pub fn total_nodes(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn doubled(&self) -> Self {
        ThetaGrid {
            counts: self.counts.iter().map(|&n| n * 2).collect(),
        }
    }

    /// Row-major iteration over all nodes.
    pub fn nodes(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        let dims = self.counts.len();
        let total = self.total_nodes();
        (0..total).map(move |flat| {
            let mut rem = flat;
            let mut theta = vec![0.0; dims];
            for j in (0..dims).rev() {
                let n = self.counts[j];
                theta[j] = 2.0 * std::f64::consts::PI * (rem % n) as f64 / n as f64;
                rem /= n;
            }
            theta
        })
    }
}

/// Which scaling of the pencil the fiber solves use.
#[derive(Clone, Copy, Debug)]
pub enum OperatorForm {
    /// `H_μ(z) = Δ(z) + μ·diag V`
    HMu(f64),
    /// `A_ε(z) = ε·Δ(z) + diag V`
    AEps(f64),
}

/// Cached symbolic data for repeated fiber evaluations.
struct FiberWorkspace<'m> {
    model: &'m LatticeModel,
    delta: LaurentMatrix,
    ddelta: Vec<LaurentMatrix>,
}

impl<'m> FiberWorkspace<'m> {
    fn new(model: &'m LatticeModel) -> Self {
        let delta = floquet_laplacian(model);
        let ddelta = (0..model.dims()).map(|i| delta.theta_derivative(i)).collect();
        FiberWorkspace {
            model,
            delta,
            ddelta,
        }
    }

    fn operator_at(&self, form: OperatorForm, theta: &[f64]) -> Result<DMatrix<C64>> {
        let z = torus_point(theta);
        let delta = self.delta.evaluate(&z)?;
        let p_count = self.model.cell_size();
        let (hop_scale, pot_scale) = match form {
            OperatorForm::HMu(mu) => (1.0, mu),
            OperatorForm::AEps(eps) => (eps, 1.0),
        };
        let mut h = delta * C64::new(hop_scale, 0.0);
        for i in 0..p_count {
            h[(i, i)] += C64::new(pot_scale * self.model.potential_f64(i), 0.0);
        }
        Ok(h)
    }

    fn hop_scale(&self, form: OperatorForm) -> f64 {
        match form {
            OperatorForm::HMu(_) => 1.0,
            OperatorForm::AEps(eps) => eps,
        }
    }
}

/// Per-fiber Hellmann–Feynman data.
#[derive(Clone, Debug)]
pub struct FiberVelocity {
    /// `velocities[n][i] = p_i · ∂λ_n/∂θ_i`, bands in ascending order.
    pub velocities: Vec<Vec<f64>>,
    /// Sorted band energies.
    pub energies: Vec<f64>,
    /// `‖Π_n e₀‖² = |v_n(0)|²` per band.
    pub origin_weights: Vec<f64>,
    /// Smallest neighboring-band gap, for degeneracy flagging.
    pub min_gap: f64,
}

impl FiberVelocity {
    /// The sorted-band labeling makes per-band values ambiguous within
    /// `min_gap → 0`; everything consumed downstream is a max or a sum
    /// over bands.
    pub fn degenerate(&self) -> bool {
        self.min_gap < 1e-10
    }
}

fn fiber_velocity_ws(
    ws: &FiberWorkspace<'_>,
    form: OperatorForm,
    theta: &[f64],
) -> Result<FiberVelocity> {
    let h = ws.operator_at(form, theta)?;
    let (energies, vectors) = linalg::eigh_complex(&h)?;
    let p_count = energies.len();
    let d = ws.model.dims();
    let z = torus_point(theta);
    let hop = ws.hop_scale(form);
    let mut velocities = vec![vec![0.0; d]; p_count];
    for i in 0..d {
        let dh = ws.ddelta[i].evaluate(&z)? * C64::new(hop, 0.0);
        for n in 0..p_count {
            let v = vectors.column(n);
            let val = v.dotc(&(&dh * v));
            velocities[n][i] = ws.model.period(i) as f64 * val.re;
        }
    }
    let origin_weights = (0..p_count).map(|n| vectors[(0, n)].norm_sqr()).collect();
    let min_gap = energies
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    Ok(FiberVelocity {
        velocities,
        energies,
        origin_weights,
        min_gap,
    })
}

/// Group-velocity matrix `p_i ∂λ_n/∂θ_i` of `H_μ(e^{iθ})`.
pub fn fiber_group_velocity(
    model: &LatticeModel,
    mu: f64,
    theta: &[f64],
) -> Result<FiberVelocity> {
    let ws = FiberWorkspace::new(model);
    fiber_velocity_ws(&ws, OperatorForm::HMu(mu), theta)
}

/// Same, for the rescaled pencil `A_ε`.
pub fn fiber_group_velocity_rescaled(
    model: &LatticeModel,
    eps: f64,
    theta: &[f64],
) -> Result<FiberVelocity> {
    let ws = FiberWorkspace::new(model);
    fiber_velocity_ws(&ws, OperatorForm::AEps(eps), theta)
}

/// Everything the sweep consumes for one coupling value.
#[derive(Clone, Debug)]
pub struct VelocityReport {
    /// `‖G_i‖` per direction.
    pub gi_norms: Vec<f64>,
    /// `sup_{n,θ} ‖(p_i ∂λ_n/∂θ_i)_i‖₂`.
    pub v_asy: f64,
    /// `√(Σ_i ‖G_i δ₀‖²)`.
    pub v_asy_delta0: f64,
    /// Band and node attaining the `v_asy` sup.
    pub argmax_band: usize,
    pub argmax_theta: Vec<f64>,
    /// Grid at which the refinement loop stopped.
    pub grid: ThetaGrid,
    /// A near-degenerate fiber was met during scanning.
    pub degenerate_flag: bool,
}

const SUP_RELATIVE_TOL: f64 = 1e-6;
const MAX_TOTAL_NODES: usize = 1 << 22;

struct ScanOutcome {
    gi_max: Vec<f64>,
    gi_arg: Vec<(usize, Vec<f64>)>,
    speed_max: f64,
    speed_arg: (usize, Vec<f64>),
    delta0_sq: Vec<f64>,
    degenerate: bool,
}

fn scan_grid(
    ws: &FiberWorkspace<'_>,
    form: OperatorForm,
    grid: &ThetaGrid,
) -> Result<ScanOutcome> {
    let d = ws.model.dims();
    let mut gi_max = vec![0.0f64; d];
    let mut gi_arg = vec![(0usize, vec![0.0; d]); d];
    let mut speed_max = 0.0f64;
    let mut speed_arg = (0usize, vec![0.0; d]);
    let mut delta0_sq = vec![0.0f64; d];
    let mut degenerate = false;
    let weight = 1.0 / grid.total_nodes() as f64;
    for theta in grid.nodes() {
        let fv = fiber_velocity_ws(ws, form, &theta)?;
        degenerate |= fv.degenerate();
        for (n, row) in fv.velocities.iter().enumerate() {
            let mut norm_sq = 0.0;
            for i in 0..d {
                let a = row[i].abs();
                if a > gi_max[i] {
                    gi_max[i] = a;
                    gi_arg[i] = (n, theta.clone());
                }
                norm_sq += row[i] * row[i];
                delta0_sq[i] += row[i] * row[i] * fv.origin_weights[n] * weight;
            }
            let norm = norm_sq.sqrt();
            if norm > speed_max {
                speed_max = norm;
                speed_arg = (n, theta.clone());
            }
        }
    }
    Ok(ScanOutcome {
        gi_max,
        gi_arg,
        speed_max,
        speed_arg,
        delta0_sq,
        degenerate,
    })
}

/// Golden-section maximization on a bracket.
fn golden_max(mut f: impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..80 {
        if hi - lo < 1e-12 {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    Ok((f(mid)?, mid))
}

/// Coordinate-wise golden refinement of a torus supremum around a grid
/// argmax. The objective is the max over bands, so it stays continuous
/// across band reorderings.
fn refine_sup(
    ws: &FiberWorkspace<'_>,
    form: OperatorForm,
    objective: &dyn Fn(&FiberVelocity) -> f64,
    theta0: &[f64],
    h: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let d = theta0.len();
    let mut theta = theta0.to_vec();
    let mut best = objective(&fiber_velocity_ws(ws, form, &theta)?);
    for _sweep in 0..3 {
        for j in 0..d {
            let base = theta.clone();
            let eval = |s: f64| -> Result<f64> {
                let mut t = base.clone();
                t[j] = base[j] + s;
                Ok(objective(&fiber_velocity_ws(ws, form, &t)?))
            };
            let (val, s) = golden_max(eval, -h[j], h[j])?;
            if val > best {
                best = val;
                theta[j] += s;
            }
        }
    }
    Ok((best, theta))
}

fn report_for_grid(
    ws: &FiberWorkspace<'_>,
    form: OperatorForm,
    grid: &ThetaGrid,
) -> Result<VelocityReport> {
    let d = ws.model.dims();
    let scan = scan_grid(ws, form, grid)?;
    let h: Vec<f64> = grid
        .counts
        .iter()
        .map(|&n| 2.0 * std::f64::consts::PI / n as f64)
        .collect();

    let mut gi_norms = Vec::with_capacity(d);
    for i in 0..d {
        let obj = move |fv: &FiberVelocity| {
            fv.velocities
                .iter()
                .map(|row| row[i].abs())
                .fold(0.0, f64::max)
        };
        let (val, _) = refine_sup(ws, form, &obj, &scan.gi_arg[i].1, &h)?;
        gi_norms.push(val.max(scan.gi_max[i]));
    }

    let speed_obj = |fv: &FiberVelocity| {
        fv.velocities
            .iter()
            .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    };
    let (v_refined, theta_star) = refine_sup(ws, form, &speed_obj, &scan.speed_arg.1, &h)?;
    let v_asy = v_refined.max(scan.speed_max);

    let v_asy_delta0 = scan.delta0_sq.iter().sum::<f64>().sqrt();

    Ok(VelocityReport {
        gi_norms,
        v_asy,
        v_asy_delta0,
        argmax_band: scan.speed_arg.0,
        argmax_theta: theta_star,
        grid: grid.clone(),
        degenerate_flag: scan.degenerate,
    })
}

/// Compute all velocity functionals with automatic grid doubling until
/// every one of them moves by less than `1e-6` relative.
pub fn velocity_report_for(
    model: &LatticeModel,
    form: OperatorForm,
    start: &ThetaGrid,
) -> Result<VelocityReport> {
    let ws = FiberWorkspace::new(model);
    let mut grid = start.clone();
    let mut prev = report_for_grid(&ws, form, &grid)?;
    loop {
        let next_grid = grid.doubled();
        if next_grid.total_nodes() > MAX_TOTAL_NODES {
            return Err(Error::NoConvergence(format!(
                "θ-grid exceeded {MAX_TOTAL_NODES} nodes"
            )));
        }
        let next = report_for_grid(&ws, form, &next_grid)?;
        let close = |a: f64, b: f64| (a - b).abs() <= SUP_RELATIVE_TOL * b.abs().max(1e-300);
        let converged = close(prev.v_asy, next.v_asy)
            && close(prev.v_asy_delta0, next.v_asy_delta0)
            && prev
                .gi_norms
                .iter()
                .zip(&next.gi_norms)
                .all(|(a, b)| close(*a, *b));
        grid = next_grid;
        prev = next;
        if converged {
            return Ok(prev);
        }
    }
}

/// Velocity functionals of `H_μ` starting from a default 64-point grid.
pub fn velocity_report(model: &LatticeModel, mu: f64, grid: &ThetaGrid) -> Result<VelocityReport> {
    velocity_report_for(model, OperatorForm::HMu(mu), grid)
}

/// `‖G_i‖ = p_i sup_{n,θ} |∂λ_n/∂θ_i|` per direction.
pub fn gi_norm(model: &LatticeModel, mu: f64, grid: &ThetaGrid) -> Result<Vec<f64>> {
    Ok(velocity_report(model, mu, grid)?.gi_norms)
}

/// Asymptotic velocity: fiber ess-sup of the group-speed.
pub fn v_asy(model: &LatticeModel, mu: f64, grid: &ThetaGrid) -> Result<f64> {
    Ok(velocity_report(model, mu, grid)?.v_asy)
}

/// Asymptotic velocity of the state started at the origin.
pub fn v_asy_delta0(model: &LatticeModel, mu: f64, grid: &ThetaGrid) -> Result<f64> {
    Ok(velocity_report(model, mu, grid)?.v_asy_delta0)
}

/// Leading constants predicted by the straight-loop weights:
/// `C_pred = 2p₀·max_n √(Σ_{i:p_i=p₀} c_{i,n}²)` for `μ^{p₀−1}·v_asy`
/// and `c_pred = p₀·√(2·Σ_{i:p_i=p₀} c_{i,0}²)` for the δ₀ variant.
pub fn predicted_leading_constant(model: &LatticeModel) -> (f64, f64) {
    let p0 = model.min_period();
    let d = model.dims();
    let mut best = 0.0f64;
    for n in 0..model.cell_size() {
        let mut sum_sq = 0.0;
        for i in 0..d {
            if model.period(i) == p0 {
                let c = rat_to_f64(&straight_loop_constant(model, n, i));
                sum_sq += c * c;
            }
        }
        best = best.max(sum_sq.sqrt());
    }
    let c_pred = 2.0 * p0 as f64 * best;

    let mut sum0 = 0.0;
    for i in 0..d {
        if model.period(i) == p0 {
            let c = rat_to_f64(&straight_loop_constant(model, 0, i));
            sum0 += c * c;
        }
    }
    let c_pred_delta0 = p0 as f64 * (2.0 * sum0).sqrt();
    (c_pred, c_pred_delta0)
}

/// Result of a coupling sweep with the power-law fits.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub mus: Vec<f64>,
    pub reports: Vec<VelocityReport>,
    pub fit_v_asy: PowerLawFit,
    pub fit_delta0: PowerLawFit,
    /// Per-direction fits of `‖G_i‖` against `μ`.
    pub fit_gi: Vec<PowerLawFit>,
    /// `−(p₀−1)`.
    pub predicted_exponent: f64,
    pub predicted_constant: f64,
    pub predicted_constant_delta0: f64,
    /// Any fit with `R² < 0.999`.
    pub poor_fit: bool,
}

/// Sweep strictly increasing couplings (≥ 4 values spanning at least a
/// decade) and fit the velocity scaling laws.
pub fn sweep_and_fit(
    model: &LatticeModel,
    mus: &[f64],
    grid: &ThetaGrid,
) -> Result<SweepResult> {
    if mus.len() < 4 {
        return Err(Error::InsufficientPoints {
            need: 4,
            got: mus.len(),
        });
    }
    if mus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "couplings must be strictly increasing".into(),
        ));
    }
    if mus[mus.len() - 1] / mus[0] < 10.0 {
        return Err(Error::InvalidParameter(
            "coupling sweep must span at least one decade".into(),
        ));
    }
    let d = model.dims();
    let mut reports = Vec::with_capacity(mus.len());
    for &mu in mus {
        reports.push(velocity_report(model, mu, grid)?);
    }
    let vs: Vec<f64> = reports.iter().map(|r| r.v_asy).collect();
    let v0s: Vec<f64> = reports.iter().map(|r| r.v_asy_delta0).collect();
    let fit_v_asy = power_law_fit(mus, &vs)?;
    let fit_delta0 = power_law_fit(mus, &v0s)?;
    let mut fit_gi = Vec::with_capacity(d);
    for i in 0..d {
        let gis: Vec<f64> = reports.iter().map(|r| r.gi_norms[i]).collect();
        fit_gi.push(power_law_fit(mus, &gis)?);
    }
    let (c_pred, c_pred_delta0) = predicted_leading_constant(model);
    let poor_fit = fit_v_asy.r2 < 0.999
        || fit_delta0.r2 < 0.999
        || fit_gi.iter().any(|f| f.r2 < 0.999);
    Ok(SweepResult {
        mus: mus.to_vec(),
        reports,
        fit_v_asy,
        fit_delta0,
        fit_gi,
        predicted_exponent: -((model.min_period() as f64) - 1.0),
        predicted_constant: c_pred,
        predicted_constant_delta0: c_pred_delta0,
        poor_fit,
    })
}
