//! PR box as a retrocausal box.
//!
//! Both parties' setting choices are carried back to the common source
//! point, where a single fair coin fixes the outcome pair: equal outcomes
//! for `(a,b)`, `(a,b')`, `(a',b)` and opposite outcomes for `(a',b')`.
//! Nothing travels between the wings, yet the statistics are exactly those
//! of the nonlocal box.

use rand::Rng;
use serde::Serialize;

use crate::boxmodel::{flat_index, BehaviorTable, Outcome, PrConvention, Setting};
use crate::signaling::{
    run_experiment, BlockRecord, ExperimentConfig, PairRealization, PairSource, SignalReport,
};
use crate::Result;

/// One use of the box: both settings and the outcome pair fixed at the source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RetroEvent {
    pub x: Setting,
    pub y: Setting,
    pub outcomes: (Outcome, Outcome),
}

/// Outcome pair for settings `(x, y)` given the source coin.
pub fn retro_outcomes(
    convention: PrConvention,
    x: Setting,
    y: Setting,
    coin: Outcome,
) -> (Outcome, Outcome) {
    (coin, coin.times(convention.product(x, y)))
}

/// Samples one event of the standard retrocausal box.
pub fn retro_sample<R: Rng + ?Sized>(x: Setting, y: Setting, rng: &mut R) -> RetroEvent {
    retro_sample_with(PrConvention::STANDARD, x, y, rng)
}

pub fn retro_sample_with<R: Rng + ?Sized>(
    convention: PrConvention,
    x: Setting,
    y: Setting,
    rng: &mut R,
) -> RetroEvent {
    let coin = Outcome::from_sign(rng.random::<bool>());
    RetroEvent {
        x,
        y,
        outcomes: retro_outcomes(convention, x, y, coin),
    }
}

/// Exact behaviour induced by the sampling rule: each of the two coin
/// values carries weight 1/2.
pub fn retro_behavior_table() -> BehaviorTable {
    retro_behavior_table_with(PrConvention::STANDARD)
}

pub fn retro_behavior_table_with(convention: PrConvention) -> BehaviorTable {
    let mut p = [0.0; 16];
    for x in Setting::BOTH {
        for y in Setting::BOTH {
            for coin in Outcome::BOTH {
                let (a, b) = retro_outcomes(convention, x, y, coin);
                p[flat_index(a, b, x, y)] += 0.5;
            }
        }
    }
    BehaviorTable::new(p).expect("retrocausal box is a valid no-signalling table")
}

/// Pair source for the block protocol. Alice's consistent bit fixes `x`;
/// Bob's two counterfactual values come from one coin with both `y` rules
/// applied.
#[derive(Clone, Copy, Debug, Default)]
pub struct RetroSource {
    pub convention: PrConvention,
}

impl PairSource for RetroSource {
    fn kind(&self) -> &'static str {
        "retro"
    }

    fn realize<R: Rng + ?Sized>(&self, alice_bit: Setting, rng: &mut R) -> PairRealization {
        let coin = Outcome::from_sign(rng.random::<bool>());
        let (a_out, b_val) = retro_outcomes(self.convention, alice_bit, Setting::Unprimed, coin);
        let (_, bprime_val) = retro_outcomes(self.convention, alice_bit, Setting::Primed, coin);
        PairRealization {
            a_out,
            b_val,
            bprime_val,
        }
    }
}

/// The signaling experiment run on the standard retrocausal box.
pub fn retro_signaling_bridge(
    config: &ExperimentConfig,
) -> Result<(SignalReport, Vec<BlockRecord>)> {
    run_experiment(&RetroSource::default(), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxmodel::{make_pr_box, make_pr_box_with};
    use crate::rng::stream_rng;
    use crate::signaling::PrSource;
    use crate::stats::two_proportion_se;

    #[test]
    fn outcome_rule_per_setting_pair() {
        let mut rng = stream_rng(1, 0);
        for x in Setting::BOTH {
            for y in Setting::BOTH {
                for _ in 0..1000 {
                    let e = retro_sample(x, y, &mut rng);
                    let equal = e.outcomes.0 == e.outcomes.1;
                    assert_eq!(equal, !(x == Setting::Primed && y == Setting::Primed));
                }
            }
        }
    }

    #[test]
    fn table_equals_pr_box_exactly() {
        assert_eq!(retro_behavior_table(), make_pr_box());
        assert_eq!(retro_behavior_table().chsh_value(), 4.0);
        assert!(retro_behavior_table().check_no_signalling(1e-12).passed);
        for c in PrConvention::all() {
            assert_eq!(retro_behavior_table_with(c), make_pr_box_with(c));
        }
    }

    #[test]
    fn sampled_frequencies_match_table() {
        let samples = 1_000_000;
        let table = retro_behavior_table();
        for x in Setting::BOTH {
            for y in Setting::BOTH {
                let mut rng = stream_rng(2, (x.index() * 2 + y.index()) as u64);
                let mut counts = [0u64; 4];
                for _ in 0..samples {
                    let e = retro_sample(x, y, &mut rng);
                    counts[e.outcomes.0.index() * 2 + e.outcomes.1.index()] += 1;
                }
                let mut tv = 0.0;
                for a in Outcome::BOTH {
                    for b in Outcome::BOTH {
                        let f = counts[a.index() * 2 + b.index()] as f64 / samples as f64;
                        tv += (f - table.prob(a, b, x, y)).abs();
                    }
                }
                assert!(0.5 * tv < 0.005, "tv {tv}");
                if (x, y) == (Setting::Unprimed, Setting::Primed) {
                    let pp = counts[0] as f64 / samples as f64;
                    assert!((pp - 0.5).abs() < 0.002);
                }
            }
        }
    }

    #[test]
    fn bridge_noiseless_accuracy_is_one() {
        let (report, _) =
            retro_signaling_bridge(&ExperimentConfig::new(100, 1000, 0.0, 1)).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.kind, "retro");
    }

    #[test]
    fn bridge_matches_nonlocal_box() {
        let cfg = ExperimentConfig::new(20, 5000, 0.2, 3);
        let (pr, _) = run_experiment(&PrSource, &cfg).unwrap();
        let other = ExperimentConfig { seed: 4, ..cfg };
        let (retro, _) = retro_signaling_bridge(&other).unwrap();
        let se = two_proportion_se(
            pr.accuracy,
            pr.n_informative,
            retro.accuracy,
            retro.n_informative,
        );
        assert!((pr.accuracy - retro.accuracy).abs() < 3.0 * se);
    }

    #[test]
    fn noise_degrades_but_keeps_signal() {
        let (r, _) = retro_signaling_bridge(&ExperimentConfig::new(1, 10_000, 1.0, 5)).unwrap();
        // 99% one-sided bounds
        let half = 2.576 * r.accuracy_se();
        assert!(r.accuracy - half > 0.5, "{}", r.accuracy);
        assert!(r.accuracy + half < 1.0);
    }
}
