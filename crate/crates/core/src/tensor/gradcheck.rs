use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{ParamStore, Tape, TensorError, Var};

/// Settings for [`grad_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckConfig {
    /// Central-difference half step.
    pub eps: f64,
    /// Maximum tolerated relative error.
    pub tol: f64,
    /// Lower bound on the relative-error denominator, so entries whose true
    /// gradient is zero are judged by absolute error instead.
    pub floor: f64,
    /// Check at most this many entries of each parameter, evenly strided.
    pub max_entries_per_param: Option<usize>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            eps: 5e-5,
            tol: 1e-4,
            floor: 1e-6,
            max_entries_per_param: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub groups: Vec<GroupReport>,
    pub tol: f64,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.groups.iter().map(|g| g.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.groups.iter().all(|g| g.max_rel_error < self.tol)
    }

    pub fn worst(&self) -> Option<&GroupReport> {
        self.groups
            .iter()
            .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
    }
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(floor);
    (analytic - numeric).abs() / denom
}

/// Compares tape gradients of the scalar built by `loss` against central
/// differences `(f(p + eps) - f(p - eps)) / (2 eps)` for every parameter
/// in `store`.
pub fn grad_check<F, E>(store: &ParamStore, loss: F, cfg: &GradCheckConfig) -> Result<GradCheckReport, E>
where
    F: for<'a> Fn(&mut Tape<'a>) -> Result<Var, E>,
    E: From<TensorError>,
{
    let analytic = {
        let mut tape = Tape::with_params(store);
        let out = loss(&mut tape)?;
        tape.backward(out)?.into_param_grads(store)
    };

    let eval = |s: &ParamStore| -> Result<f64, E> {
        let mut tape = Tape::with_params(s).no_grad();
        let out = loss(&mut tape)?;
        Ok(tape.scalar(out))
    };

    let mut work = store.clone();
    let mut groups = Vec::with_capacity(store.len());
    for id in store.ids() {
        let n = store.get(id).len();
        let stride = match cfg.max_entries_per_param {
            Some(cap) if cap > 0 && n > cap => n.div_ceil(cap),
            _ => 1,
        };
        let mut report = GroupReport {
            name: store.name(id).to_string(),
            checked: 0,
            max_rel_error: 0.0,
            max_abs_error: 0.0,
        };
        for j in (0..n).step_by(stride) {
            let original = store.get(id).data()[j];
            work.get_mut(id).data_mut()[j] = original + cfg.eps;
            let plus = eval(&work)?;
            work.get_mut(id).data_mut()[j] = original - cfg.eps;
            let minus = eval(&work)?;
            work.get_mut(id).data_mut()[j] = original;

            let numeric = (plus - minus) / (2.0 * cfg.eps);
            let a = analytic.grads[id.index()][j];
            report.checked += 1;
            report.max_abs_error = report.max_abs_error.max((a - numeric).abs());
            report.max_rel_error = report.max_rel_error.max(relative_error(a, numeric, cfg.floor));
        }
        groups.push(report);
    }
    Ok(GradCheckReport { groups, tol: cfg.tol })
}
