use rand::Rng;

use super::StepDistribution;
use crate::error::{invalid, Result};

/// Default cap on the number of steps of one walk.
pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Barrier {
    /// Absorbing barrier at 0 only.
    OneSided,
    /// Absorbing barriers at 0 and at `h`.
    TwoSided { h: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    pub x0: f64,
    /// Probability of an upward (depth-increasing) step.
    pub p: f64,
    pub step: StepDistribution,
    pub barrier: Barrier,
}

impl WalkConfig {
    pub fn new(x0: f64, p: f64, step: StepDistribution, barrier: Barrier) -> Result<Self> {
        if !(x0.is_finite() && x0 >= 0.0) {
            return Err(invalid(format!("start depth must be >= 0, got {x0}")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("up-step probability must be in [0, 1], got {p}")));
        }
        if let Barrier::TwoSided { h } = barrier {
            if !(h.is_finite() && h > 0.0) {
                return Err(invalid(format!("slab height must be > 0, got {h}")));
            }
            if x0 > h {
                return Err(invalid(format!("start depth {x0} exceeds height {h}")));
            }
        }
        Ok(Self { x0, p, step, barrier })
    }

    pub fn symmetric_one_sided(x0: f64, step: StepDistribution) -> Result<Self> {
        Self::new(x0, 0.5, step, Barrier::OneSided)
    }

    pub fn symmetric_two_sided(x0: f64, h: f64, step: StepDistribution) -> Result<Self> {
        Self::new(x0, 0.5, step, Barrier::TwoSided { h })
    }
}

/// Guards that stop a walk before it exits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkLimits {
    pub max_steps: u64,
    /// Stop once the accumulated travel of a still-running walk exceeds this.
    pub max_travel: f64,
}

impl Default for WalkLimits {
    fn default() -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            max_travel: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitSide {
    Bottom,
    Top,
}

/// A walk that crossed a barrier at step `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkOutcome {
    pub t: u64,
    /// Sum of all step magnitudes up to and including step `t`.
    pub travel_l: f64,
    pub z_minus: f64,
    pub z_plus: f64,
    pub exit_side: ExitSide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensorReason {
    MaxSteps,
    TravelBudget,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WalkEnd {
    Exited(WalkOutcome),
    /// The walk was still inside after `steps` steps and `travel` length.
    Censored {
        steps: u64,
        travel: f64,
        reason: CensorReason,
    },
}

impl WalkEnd {
    pub fn outcome(&self) -> Option<&WalkOutcome> {
        match self {
            WalkEnd::Exited(o) => Some(o),
            WalkEnd::Censored { .. } => None,
        }
    }
}

/// Run one stopped walk. A position landing exactly on a barrier counts as
/// an exit with zero overshoot.
pub fn sample_walk<R: Rng + ?Sized>(cfg: &WalkConfig, limits: &WalkLimits, rng: &mut R) -> WalkEnd {
    let top = match cfg.barrier {
        Barrier::OneSided => f64::INFINITY,
        Barrier::TwoSided { h } => h,
    };
    let mut pos = cfg.x0;
    let mut travel = 0.0;
    let mut t = 0u64;
    loop {
        if t >= limits.max_steps {
            return WalkEnd::Censored {
                steps: t,
                travel,
                reason: CensorReason::MaxSteps,
            };
        }
        let up = rng.gen::<f64>() < cfg.p;
        let y = cfg.step.sample(rng);
        t += 1;
        travel += y;
        if up {
            pos += y;
            if pos >= top {
                return WalkEnd::Exited(WalkOutcome {
                    t,
                    travel_l: travel,
                    z_minus: 0.0,
                    z_plus: pos - top,
                    exit_side: ExitSide::Top,
                });
            }
        } else {
            pos -= y;
            if pos <= 0.0 {
                return WalkEnd::Exited(WalkOutcome {
                    t,
                    travel_l: travel,
                    z_minus: -pos,
                    z_plus: 0.0,
                    exit_side: ExitSide::Bottom,
                });
            }
        }
        if travel > limits.max_travel {
            return WalkEnd::Censored {
                steps: t,
                travel,
                reason: CensorReason::TravelBudget,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::RngCore;

    /// Replays a fixed sequence of raw 64-bit words.
    struct Scripted(Vec<u64>, usize);

    impl RngCore for Scripted {
        fn next_u32(&mut self) -> u32 {
            self.next_u64() as u32
        }
        fn next_u64(&mut self) -> u64 {
            let v = self.0[self.1 % self.0.len()];
            self.1 += 1;
            v
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            rand_core_fill(self, dest)
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
            rand_core_fill(self, dest);
            Ok(())
        }
    }

    fn rand_core_fill(r: &mut Scripted, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let b = r.next_u64().to_le_bytes();
            chunk.copy_from_slice(&b[..chunk.len()]);
        }
    }

    // gen::<f64>() uses the top 53 bits; 0 gives 0.0 (< p: up), MAX gives ~1 (down).
    const UP: u64 = 0;
    const DOWN: u64 = u64::MAX;

    fn exp1() -> StepDistribution {
        StepDistribution::exponential(1.0).unwrap()
    }

    #[test]
    fn first_step_down_from_zero_exits_bottom() {
        // open_unit(u64::MAX >> 11 ...) ~ 1 - 2^-54 gives a tiny step, use a mid value
        let word = 1u64 << 63; // open_unit ~ 0.5 => y = ln 2
        let mut rng = Scripted(vec![DOWN, word], 0);
        let cfg = WalkConfig::symmetric_one_sided(0.0, exp1()).unwrap();
        let end = sample_walk(&cfg, &WalkLimits::default(), &mut rng);
        let o = end.outcome().unwrap();
        assert_eq!(o.t, 1);
        assert_eq!(o.exit_side, ExitSide::Bottom);
        assert!((o.z_minus - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(o.travel_l, o.z_minus);
    }

    #[test]
    fn first_step_up_from_top_exits_top() {
        let word = 1u64 << 63;
        let mut rng = Scripted(vec![UP, word], 0);
        let cfg = WalkConfig::symmetric_two_sided(3.0, 3.0, exp1()).unwrap();
        let o = *sample_walk(&cfg, &WalkLimits::default(), &mut rng).outcome().unwrap();
        assert_eq!(o.t, 1);
        assert_eq!(o.exit_side, ExitSide::Top);
        assert!((o.z_plus - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(o.z_minus, 0.0);
    }

    #[test]
    fn max_steps_censors() {
        let cfg = WalkConfig::new(1.0, 1.0, exp1(), Barrier::OneSided).unwrap();
        let limits = WalkLimits {
            max_steps: 50,
            ..Default::default()
        };
        match sample_walk(&cfg, &limits, &mut stream(1, 0)) {
            WalkEnd::Censored { steps, reason, .. } => {
                assert_eq!(steps, 50);
                assert_eq!(reason, CensorReason::MaxSteps);
            }
            other => panic!("expected censoring, got {other:?}"),
        }
    }

    #[test]
    fn travel_budget_censors() {
        let cfg = WalkConfig::new(1.0, 1.0, exp1(), Barrier::OneSided).unwrap();
        let limits = WalkLimits {
            max_travel: 10.0,
            ..Default::default()
        };
        match sample_walk(&cfg, &limits, &mut stream(1, 0)) {
            WalkEnd::Censored { travel, reason, .. } => {
                assert!(travel > 10.0);
                assert_eq!(reason, CensorReason::TravelBudget);
            }
            other => panic!("expected censoring, got {other:?}"),
        }
    }

    #[test]
    fn outcome_invariants_hold() {
        let cfg = WalkConfig::symmetric_two_sided(1.5, 4.0, exp1()).unwrap();
        for i in 0..20_000 {
            let o = *sample_walk(&cfg, &WalkLimits::default(), &mut stream(9, i))
                .outcome()
                .unwrap();
            assert!(o.t >= 1);
            assert!(o.z_minus >= 0.0 && o.z_plus >= 0.0);
            assert!(o.z_minus == 0.0 || o.z_plus == 0.0);
            assert!(o.travel_l >= o.z_minus + o.z_plus);
            match o.exit_side {
                ExitSide::Bottom => assert_eq!(o.z_plus, 0.0),
                ExitSide::Top => assert_eq!(o.z_minus, 0.0),
            }
        }
    }

    #[test]
    fn one_sided_never_exits_top() {
        let cfg = WalkConfig::symmetric_one_sided(2.0, exp1()).unwrap();
        for i in 0..5_000 {
            if let WalkEnd::Exited(o) = sample_walk(&cfg, &WalkLimits::default(), &mut stream(2, i)) {
                assert_eq!(o.exit_side, ExitSide::Bottom);
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(WalkConfig::symmetric_two_sided(5.0, 4.0, exp1()).is_err());
        assert!(WalkConfig::new(-1.0, 0.5, exp1(), Barrier::OneSided).is_err());
        assert!(WalkConfig::new(1.0, 1.5, exp1(), Barrier::OneSided).is_err());
        assert!(WalkConfig::symmetric_two_sided(0.0, 0.0, exp1()).is_err());
    }
}
