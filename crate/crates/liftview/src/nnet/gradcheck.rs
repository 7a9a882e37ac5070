//! Central finite-difference verification of analytic gradients.

use super::arch::ParamGroup;
use super::params::Params;
use super::scalar::Scalar;
use crate::error::{LiftError, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Probe step, applied symmetrically to each checked parameter.
pub const FD_STEP: f64 = 1e-4;
/// At most this many randomly selected parameters are probed per call.
pub const MAX_PROBES: usize = 64;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub probes: usize,
    /// Probes discarded because the loss was locally non-smooth (a ReLU kink
    /// inside the probe interval); smoothness at the probe point is the
    /// check's precondition.
    pub skipped: usize,
    pub max_rel_err: f64,
    pub worst_param: String,
    pub tolerance: f64,
    pub pass: bool,
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {} probes ({} skipped as non-smooth), max rel err {:.3e} (worst {}) vs tol {:.1e}",
            if self.pass { "pass" } else { "FAIL" },
            self.probes,
            self.skipped,
            self.max_rel_err,
            self.worst_param,
            self.tolerance
        )
    }
}

/// Compare the analytic gradient of a scalar-valued operation against
/// central finite differences on a random subset of at most [`MAX_PROBES`]
/// parameters.
///
/// The relative error denominator is floored at a small multiple of the
/// gradient's RMS so near-zero components do not divide by noise.
pub fn grad_check<T: Scalar>(
    params: &Params<T>,
    loss_and_grad: impl Fn(&Params<T>) -> Result<(f64, Vec<T>)>,
    loss_only: impl Fn(&Params<T>) -> Result<f64>,
    tolerance: f64,
    rng: &mut ChaCha8Rng,
) -> Result<GradCheckReport> {
    grad_check_groups(params, loss_and_grad, loss_only, tolerance, None, rng)
}

/// [`grad_check`] restricted to parameters of the given groups. Losses with
/// stop-gradient semantics (the actor objective treats critics and features
/// as constants, the critic objective treats its bootstrap target as
/// constant) are verifiable only on the parameter groups they optimize.
pub fn grad_check_groups<T: Scalar>(
    params: &Params<T>,
    loss_and_grad: impl Fn(&Params<T>) -> Result<(f64, Vec<T>)>,
    loss_only: impl Fn(&Params<T>) -> Result<f64>,
    tolerance: f64,
    groups: Option<&[ParamGroup]>,
    rng: &mut ChaCha8Rng,
) -> Result<GradCheckReport> {
    let (loss, grad) = loss_and_grad(params)?;
    if !loss.is_finite() {
        return Err(LiftError::Training("non-finite loss at probe point".into()));
    }
    if let Some(bad) = grad.iter().position(|v| !v.is_finite()) {
        return Err(LiftError::Training(format!(
            "non-finite gradient in tensor {}",
            params.layout.name_at(bad)
        )));
    }
    let total = params.layout.total;
    let candidate: Vec<usize> = match groups {
        None => (0..total).collect(),
        Some(gs) => {
            let mut v = Vec::new();
            for g in gs {
                for r in params.layout.group_ranges(*g) {
                    v.extend(r);
                }
            }
            v
        }
    };
    let rms = {
        let sum: f64 = candidate.iter().map(|&i| grad[i].as_f64().powi(2)).sum();
        (sum / candidate.len().max(1) as f64).sqrt()
    };
    let floor = (0.05 * rms).max(1e-9);

    let probes = MAX_PROBES.min(candidate.len());
    let mut indices: Vec<usize> = (0..probes)
        .map(|_| candidate[rng.random_range(0..candidate.len())])
        .collect();
    indices.sort_unstable();
    indices.dedup();

    let mut work = params.clone();
    let mut max_rel = 0.0f64;
    let mut worst = String::new();
    let mut skipped = 0usize;
    let mut fd_at = |work: &mut Params<T>, i: usize, h: f64| -> Result<f64> {
        let orig = work.data[i];
        let wp = orig + T::from_f64(h);
        let wm = orig - T::from_f64(h);
        work.data[i] = wp;
        let lp = loss_only(work)?;
        work.data[i] = wm;
        let lm = loss_only(work)?;
        work.data[i] = orig;
        if !lp.is_finite() || !lm.is_finite() {
            return Err(LiftError::Training(format!(
                "non-finite perturbed loss in tensor {}",
                params.layout.name_at(i)
            )));
        }
        // Divide by the interval actually representable in the element type,
        // not the nominal step, to cancel probe-point quantization.
        Ok((lp - lm) / (wp.as_f64() - wm.as_f64()))
    };
    for &i in &indices {
        let fd_full = fd_at(&mut work, i, FD_STEP)?;
        let fd_half = fd_at(&mut work, i, FD_STEP * 0.5)?;
        // For a smooth loss both estimates agree to O(h^2); a split beyond
        // the tolerance scale means a kink inside the probe interval,
        // violating the smoothness precondition, so the probe carries no
        // information about the analytic gradient.
        let scale = fd_full.abs().max(fd_half.abs()).max(floor);
        if (fd_full - fd_half).abs() > (0.25 * tolerance).max(1e-6) * scale {
            skipped += 1;
            continue;
        }
        let an = grad[i].as_f64();
        let rel = (an - fd_half).abs() / an.abs().max(fd_half.abs()).max(floor);
        if rel > max_rel {
            max_rel = rel;
            worst = params.layout.name_at(i).to_string();
        }
    }
    if skipped == indices.len() {
        return Err(LiftError::Training(
            "every finite-difference probe hit a non-smooth point".into(),
        ));
    }
    Ok(GradCheckReport {
        probes: indices.len() - skipped,
        skipped,
        max_rel_err: max_rel,
        worst_param: worst,
        tolerance,
        pass: max_rel < tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::arch::{ArchConfig, Layout};
    use crate::rng::child_rng;

    #[test]
    fn quadratic_gradient_is_exact() {
        // Loss ||w||^2 over the whole parameter vector: the analytic gradient
        // 2w matches finite differences to rounding.
        let layout = Layout::new(ArchConfig::new(1, false));
        let params = Params::init(layout, &mut child_rng(0, "init", 0));
        let loss = |p: &Params| -> crate::error::Result<f64> {
            Ok(p.data.iter().map(|v| (*v as f64).powi(2)).sum())
        };
        let report = grad_check(
            &params,
            |p| {
                let l = p.data.iter().map(|v| (*v as f64).powi(2)).sum();
                let g = p.data.iter().map(|v| 2.0 * v).collect();
                Ok((l, g))
            },
            loss,
            1e-3,
            &mut child_rng(1, "probe", 0),
        )
        .unwrap();
        assert!(report.pass, "{report}");
        // Linear gradient: agreement down to f32 rounding of the probe points.
        assert!(report.max_rel_err < 1e-6, "{report}");
    }

    #[test]
    fn wrong_gradient_is_flagged() {
        let layout = Layout::new(ArchConfig::new(1, false));
        let params = Params::init(layout, &mut child_rng(2, "init", 0));
        let report = grad_check(
            &params,
            |p| {
                let l = p.data.iter().map(|v| (*v as f64).powi(2)).sum();
                // Deliberately scaled-off gradient.
                let g = p.data.iter().map(|v| 3.0 * v).collect();
                Ok((l, g))
            },
            |p| Ok(p.data.iter().map(|v| (*v as f64).powi(2)).sum()),
            1e-3,
            &mut child_rng(3, "probe", 0),
        )
        .unwrap();
        assert!(!report.pass, "{report}");
    }

    #[test]
    fn non_finite_gradient_names_the_tensor() {
        let layout = Layout::new(ArchConfig::new(1, false));
        let params = Params::init(layout.clone(), &mut child_rng(4, "init", 0));
        let seg = layout.segment("conv5.w");
        let bad_index = seg.offset + 3;
        let err = grad_check(
            &params,
            |p| {
                let mut g = vec![0.0f32; p.layout.total];
                g[bad_index] = f32::NAN;
                Ok((0.0, g))
            },
            |_| Ok(0.0),
            1e-3,
            &mut child_rng(5, "probe", 0),
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("conv5.w"), "{msg}");
    }
}
