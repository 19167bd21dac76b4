/// Settings for [`grad_check`].
#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub step: f64,
    pub tolerance: f64,
    /// Check at most this many evenly spaced entries per block.
    pub max_per_block: Option<usize>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            tolerance: 1e-4,
            max_per_block: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockError {
    pub name: String,
    pub max_rel_error: f64,
    pub checked: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockError>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn worst(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.worst() < self.tolerance
    }

    pub fn failing(&self) -> impl Iterator<Item = &BlockError> {
        self.blocks.iter().filter(move |b| b.max_rel_error >= self.tolerance)
    }
}

/// `|a - n| / max(|a|, |n|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares analytic gradients against central differences of `loss`.
///
/// `params` and `analytic` are parallel lists of flattened parameter blocks;
/// `loss` is evaluated on perturbed copies of `params`.
pub fn grad_check<F>(
    names: &[&str],
    params: &[Vec<f64>],
    analytic: &[Vec<f64>],
    mut loss: F,
    opts: GradCheckOptions,
) -> GradCheckReport
where
    F: FnMut(&[Vec<f64>]) -> f64,
{
    assert_eq!(params.len(), analytic.len());
    assert_eq!(params.len(), names.len());
    let mut work = params.to_vec();
    let mut blocks = Vec::with_capacity(params.len());
    for (b, name) in names.iter().enumerate() {
        let len = params[b].len();
        let stride = match opts.max_per_block {
            Some(cap) if cap > 0 && len > cap => len.div_ceil(cap),
            _ => 1,
        };
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        for i in (0..len).step_by(stride) {
            let orig = work[b][i];
            work[b][i] = orig + opts.step;
            let plus = loss(&work);
            work[b][i] = orig - opts.step;
            let minus = loss(&work);
            work[b][i] = orig;
            let numeric = (plus - minus) / (2.0 * opts.step);
            worst = worst.max(relative_error(analytic[b][i], numeric));
            checked += 1;
        }
        blocks.push(BlockError {
            name: (*name).to_string(),
            max_rel_error: worst,
            checked,
        });
    }
    GradCheckReport {
        blocks,
        tolerance: opts.tolerance,
    }
}
