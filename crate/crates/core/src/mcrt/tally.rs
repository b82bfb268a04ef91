use crate::renewal::mean_with_stderr;

/// Per-ray fates and weighted power fractions of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct TallyResult {
    pub n_rays: u64,
    pub rho: f64,
    pub tau: f64,
    /// `1 - rho - tau`: matrix absorption, weight cutoffs and censored rays.
    pub absorbed: f64,
    pub rho_stderr: f64,
    pub tau_stderr: f64,
    /// Rays aborted by a step or bounce guard; counted as absorbed.
    pub censored: u64,
    /// Rays stopped because their weight fell below the cutoff.
    pub cutoff: u64,
}

impl TallyResult {
    /// `rho + tau + absorbed - 1`.
    pub fn conservation_error(&self) -> f64 {
        self.rho + self.tau + self.absorbed - 1.0
    }
}

/// Mergeable sums behind a [`TallyResult`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TallyAccumulator {
    pub n: u64,
    pub reflected: f64,
    pub reflected_sq: f64,
    pub transmitted: f64,
    pub transmitted_sq: f64,
    pub censored: u64,
    pub cutoff: u64,
}

impl TallyAccumulator {
    pub fn reflect(&mut self, w: f64) {
        self.n += 1;
        self.reflected += w;
        self.reflected_sq += w * w;
    }

    pub fn transmit(&mut self, w: f64) {
        self.n += 1;
        self.transmitted += w;
        self.transmitted_sq += w * w;
    }

    pub fn absorb(&mut self) {
        self.n += 1;
    }

    pub fn absorb_cutoff(&mut self) {
        self.n += 1;
        self.cutoff += 1;
    }

    pub fn absorb_censored(&mut self) {
        self.n += 1;
        self.censored += 1;
    }

    pub fn merge(mut self, o: Self) -> Self {
        self.n += o.n;
        self.reflected += o.reflected;
        self.reflected_sq += o.reflected_sq;
        self.transmitted += o.transmitted;
        self.transmitted_sq += o.transmitted_sq;
        self.censored += o.censored;
        self.cutoff += o.cutoff;
        self
    }

    pub fn finish(&self) -> TallyResult {
        let n = self.n as usize;
        let r = mean_with_stderr(self.reflected, self.reflected_sq, n, 0);
        let t = mean_with_stderr(self.transmitted, self.transmitted_sq, n, 0);
        TallyResult {
            n_rays: self.n,
            rho: r.estimate,
            tau: t.estimate,
            absorbed: 1.0 - r.estimate - t.estimate,
            rho_stderr: r.stderr,
            tau_stderr: t.stderr,
            censored: self.censored,
            cutoff: self.cutoff,
        }
    }
}
