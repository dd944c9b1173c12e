//! Negative gradient flow of the energy and Kempf–Ness norm minimization.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moment::{gradient_at_unit, moment_explicit};
use crate::pairs::{group_act, project_to_variety, GroupElement, Pair};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FlowOptions {
    pub step_init: f64,
    pub tol_grad: f64,
    pub max_steps: usize,
    pub residual_guard: f64,
    pub record_every: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { step_init: 1e-2, tol_grad: 1e-8, max_steps: 200_000, residual_guard: 1e-6, record_every: 100 }
    }
}

impl FlowOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.step_init > 0.0
            && self.tol_grad > 0.0
            && self.tol_grad < 1e-3
            && self.max_steps > 0
            && self.residual_guard > 0.0
            && self.record_every > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!("invalid flow options {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub jacobi_res: f64,
    pub hom_res: f64,
    /// Norm of the iterate before renormalization.
    pub norm: f64,
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub limit: Pair,
    pub limit_energy: f64,
    pub stratum_label: f64,
    pub steps: usize,
    pub converged: bool,
    pub final_grad_norm: f64,
    pub final_step_size: f64,
    pub trajectory: Vec<TrajectoryRecord>,
}

const STEP_MAX: f64 = 1e3;
const STEP_MIN: f64 = 1e-18;
const ARMIJO: f64 = 1e-4;
/// Residual level above which the iterate is pulled back onto the variety.
const REPROJECT: f64 = 1e-11;

fn exp_step(x: &Pair, a: &DMatrix<f64>, v: &DVector<f64>, h: f64) -> Result<(Pair, GroupElement)> {
    let g = GroupElement::exp(x.codomain(), &(a * -h), &(v * -h));
    Ok((group_act(&g, x)?, g))
}

/// Descends `E` on the unit sphere of `V_n(g)`.
///
/// Each step moves along the group direction of the gradient,
/// `x ← normalize(exp(−h·4(D,u))·x)`, so iterates never leave the orbit of
/// the starting point; `h` is chosen by Armijo backtracking and doubled after
/// each accepted step. Near critical points rounding errors transverse to
/// `L_n(g)` are amplified, so iterates whose residuals exceed `1e-11` are
/// projected back by Gauss–Newton.
pub fn flow_energy(p: &Pair, opts: &FlowOptions) -> Result<FlowResult> {
    opts.validate()?;
    let mut x = p.normalized()?;
    let (j0, h0) = x.residuals();
    if j0.max(h0) > opts.residual_guard {
        return Err(Error::ResidualGuard { residual: j0.max(h0), guard: opts.residual_guard, step: 0 });
    }
    let mut h = opts.step_init;
    let mut trajectory = Vec::new();
    let (mut mv, grad) = gradient_at_unit(&x)?;
    let mut gnorm = x.tangent_norm(&grad);
    let mut raw_norm = p.norm();
    let mut res = (j0, h0);
    let mut step = 0usize;
    let mut converged = false;
    loop {
        if step.is_multiple_of(opts.record_every) {
            trajectory.push(TrajectoryRecord {
                step,
                energy: mv.energy,
                grad_norm: gnorm,
                jacobi_res: res.0,
                hom_res: res.1,
                norm: raw_norm,
            });
        }
        if gnorm <= opts.tol_grad {
            converged = true;
            break;
        }
        if step >= opts.max_steps {
            break;
        }
        let e_old = mv.energy;
        let mut accepted = None;
        while h >= STEP_MIN {
            let (cand, _) = exp_step(&x, &mv.d.scale(4.0), &mv.u.scale(4.0), h)?;
            let cand_norm = cand.norm();
            let cand = cand.normalized()?;
            let (cmv, cgrad) = gradient_at_unit(&cand)?;
            let cg = cand.tangent_norm(&cgrad);
            let drop = e_old - cmv.energy;
            let sufficient = -drop <= -ARMIJO * h * gnorm * gnorm;
            let stalled = -drop <= 1e-14 * e_old.max(1.0) && cg < gnorm;
            if sufficient || stalled {
                accepted = Some((cand, cmv, cg, cand_norm));
                break;
            }
            h *= 0.5;
        }
        let Some((cand, cmv, cg, cand_norm)) = accepted else {
            break;
        };
        step += 1;
        x = cand;
        mv = cmv;
        gnorm = cg;
        raw_norm = cand_norm;
        res = x.residuals();
        if res.0.max(res.1) > REPROJECT {
            x = project_to_variety(&x, 3, 1e-15)?.normalized()?;
            let (pmv, pgrad) = gradient_at_unit(&x)?;
            mv = pmv;
            gnorm = x.tangent_norm(&pgrad);
            res = x.residuals();
        }
        if res.0.max(res.1) > opts.residual_guard {
            return Err(Error::ResidualGuard { residual: res.0.max(res.1), guard: opts.residual_guard, step });
        }
        h = (h * 2.0).min(STEP_MAX);
    }
    if trajectory.last().map(|r| r.step) != Some(step) {
        trajectory.push(TrajectoryRecord {
            step,
            energy: mv.energy,
            grad_norm: gnorm,
            jacobi_res: res.0,
            hom_res: res.1,
            norm: raw_norm,
        });
    }
    Ok(FlowResult {
        limit_energy: mv.energy,
        stratum_label: mv.energy,
        limit: x,
        steps: step,
        converged,
        final_grad_norm: gnorm,
        final_step_size: h,
        trajectory,
    })
}

/// Groups energies that are within `tol` of a neighbour (after sorting) and
/// returns, for each input, the mean of its cluster.
pub fn cluster_energies(energies: &[f64], tol: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
    let mut labels = vec![0.0; energies.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && energies[order[end]] - energies[order[end - 1]] <= tol {
            end += 1;
        }
        let mean = order[start..end].iter().map(|&i| energies[i]).sum::<f64>() / (end - start) as f64;
        for &i in &order[start..end] {
            labels[i] = mean;
        }
        start = end;
    }
    labels
}

/// Sets `stratum_label` of each result to its energy-cluster mean.
pub fn assign_strata(results: &mut [FlowResult], tol: f64) {
    let energies: Vec<f64> = results.iter().map(|r| r.limit_energy).collect();
    for (r, l) in results.iter_mut().zip(cluster_energies(&energies, tol)) {
        r.stratum_label = l;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subgroup {
    /// `GL(n) × Inn(g)`.
    Full,
    /// `SL±(n) × Inn(g)`: the trace of the `gl` part of the moment is removed.
    Det1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    PolystableCandidate,
    UnstableCandidate,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub step_init: f64,
    /// Stop when `‖m_R‖ = ‖M_R‖/‖p‖² ≤ tol`.
    pub tol: f64,
    pub max_steps: usize,
    /// Declare collapse when `‖p‖ < collapse·‖p_0‖`.
    pub collapse: f64,
    pub record_every: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { step_init: 1e-2, tol: 1e-10, max_steps: 200_000, collapse: 1e-8, record_every: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub minimizer: Pair,
    pub group_log: GroupElement,
    pub initial_norm: f64,
    pub final_norm: f64,
    /// `(step, ‖p‖)` samples.
    pub norm_history: Vec<(usize, f64)>,
    /// `‖m_R‖` at the last iterate.
    pub moment_norm: f64,
    pub steps: usize,
    pub verdict: Verdict,
}

/// Moment projected to the subgroup: `(M_gl [traceless for det1], u)`.
pub fn projected_moment(p: &Pair, subgroup: Subgroup) -> Result<(DMatrix<f64>, DVector<f64>, f64)> {
    let mv = moment_explicit(p)?;
    let n = p.n();
    let mut a = mv.m_gl.clone();
    if subgroup == Subgroup::Det1 && n > 0 {
        let t = a.trace() / n as f64;
        a -= DMatrix::identity(n, n) * t;
    }
    let nsq = a.norm_squared() + p.codomain().norm_sq(&mv.u);
    Ok((a, mv.u, nsq))
}

/// Gradient descent of `g ↦ ‖g·p‖²` along `exp(−h·M_R/‖p‖²)`.
pub fn kempf_ness_minimize(p: &Pair, subgroup: Subgroup, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    let initial_norm = p.norm();
    if initial_norm == 0.0 {
        return Err(Error::ZeroPair);
    }
    let n = p.n();
    let d = p.codomain().dim();
    let mut q = p.clone();
    let mut log = GroupElement::identity(n, d);
    let mut h = opts.step_init;
    let mut history = Vec::new();
    let mut step = 0usize;
    let mut nsq = p.norm_sq();
    let (mut a, mut u, mut msq) = projected_moment(&q, subgroup)?;
    let verdict = loop {
        let nrm = nsq.sqrt();
        if step.is_multiple_of(opts.record_every.max(1)) {
            history.push((step, nrm));
        }
        if nrm < opts.collapse * initial_norm {
            break Verdict::UnstableCandidate;
        }
        if msq.sqrt() / nsq <= opts.tol {
            break Verdict::PolystableCandidate;
        }
        if step >= opts.max_steps {
            break Verdict::Inconclusive;
        }
        let za = &a / nsq;
        let zu = &u / nsq;
        let slope = 2.0 * msq / nsq;
        let mut accepted = None;
        while h >= STEP_MIN {
            let g = GroupElement::exp(q.codomain(), &(&za * -h), &(&zu * -h));
            let cand = group_act(&g, &q)?;
            let cn = cand.norm_sq();
            if cn <= nsq - ARMIJO * h * slope {
                accepted = Some((g, cand, cn));
                break;
            }
            // near the minimum the norm decrease drops below roundoff; accept on moment decrease
            if cn <= nsq * (1.0 + 4.0 * f64::EPSILON) {
                let (_, _, cm) = projected_moment(&cand, subgroup)?;
                if cm.sqrt() / cn < msq.sqrt() / nsq {
                    accepted = Some((g, cand, cn));
                    break;
                }
            }
            h *= 0.5;
        }
        let Some((g, cand, cn)) = accepted else {
            break Verdict::Inconclusive;
        };
        step += 1;
        log = g.compose(&log);
        q = cand;
        nsq = cn;
        (a, u, msq) = projected_moment(&q, subgroup)?;
        h = (h * 2.0).min(STEP_MAX);
    };
    if history.last().map(|r| r.0) != Some(step) {
        history.push((step, nsq.sqrt()));
    }
    Ok(MinimizeResult {
        minimizer: q,
        group_log: log,
        initial_norm,
        final_norm: nsq.sqrt(),
        norm_history: history,
        moment_norm: msq.sqrt() / nsq,
        steps: step,
        verdict,
    })
}
