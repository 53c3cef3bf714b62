use serde::{Deserialize, Serialize};

use super::PrivacyError;

/// Numerical slack allowed before an indistinguishability violation counts
/// as real. Mechanisms that are exactly tight sit at zero slack up to
/// rounding, so the check passes anything within this margin.
pub const DP_SLACK_TOLERANCE: f64 = 1e-12;

const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// A randomized mechanism over finitely many inputs and outcomes, described
/// exhaustively: `prob[i][j]` is the probability that input `i` produces
/// outcome `j`. `neighbors` lists the input pairs the privacy inequality
/// must relate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMechanism {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub prob: Vec<Vec<f64>>,
    pub neighbors: Vec<(usize, usize)>,
}

impl FiniteMechanism {
    pub fn new(
        inputs: Vec<String>,
        outputs: Vec<String>,
        prob: Vec<Vec<f64>>,
        neighbors: Vec<(usize, usize)>,
    ) -> Result<Self, PrivacyError> {
        let m = Self { inputs, outputs, prob, neighbors };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), PrivacyError> {
        if self.prob.len() != self.inputs.len() {
            return Err(PrivacyError::MalformedMechanism(format!(
                "{} probability rows for {} inputs",
                self.prob.len(),
                self.inputs.len()
            )));
        }
        for (i, row) in self.prob.iter().enumerate() {
            if row.len() != self.outputs.len() {
                return Err(PrivacyError::MalformedMechanism(format!(
                    "row {i} has {} entries for {} outputs",
                    row.len(),
                    self.outputs.len()
                )));
            }
            let mut sum = 0.0;
            for &p in row {
                if !(0.0..=1.0).contains(&p) {
                    return Err(PrivacyError::MalformedMechanism(format!(
                        "row {i} contains probability {p}"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(PrivacyError::MalformedMechanism(format!(
                    "row {i} sums to {sum}"
                )));
            }
        }
        for &(a, b) in &self.neighbors {
            if a >= self.inputs.len() || b >= self.inputs.len() {
                return Err(PrivacyError::MalformedMechanism(format!(
                    "neighbor pair ({a}, {b}) out of range for {} inputs",
                    self.inputs.len()
                )));
            }
        }
        Ok(())
    }
}

/// The input pair and outcome set where the inequality is closest to (or
/// past) violation. `d1` is the input on the large side of the comparison:
/// the binding constraint is P(d1 in S) <= e^eps * P(d2 in S) + delta for
/// the reported `outcome_set`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpWitness {
    pub d1: usize,
    pub d2: usize,
    pub outcome_set: Vec<usize>,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpVerdict {
    pub holds: bool,
    pub witness: Option<DpWitness>,
}

/// Brute-force check that the mechanism satisfies (eps, delta)
/// indistinguishability across every declared neighbor pair, in both
/// directions.
///
/// For each ordered pair the maximising outcome set is exactly
/// S* = {j : P1(j) > e^eps * P2(j)}: adding any other outcome can only
/// shrink the gap, so no subset enumeration is needed. The verdict carries
/// the worst witness even when the check passes; it is `None` only when no
/// neighbor pairs are declared.
pub fn verify_dp_inequality(
    m: &FiniteMechanism,
    eps: f64,
    delta: f64,
) -> Result<DpVerdict, PrivacyError> {
    m.validate()?;
    if !eps.is_finite() || eps < 0.0 {
        return Err(PrivacyError::InvalidEpsilonBound(eps));
    }
    if !delta.is_finite() || !(0.0..=1.0).contains(&delta) {
        return Err(PrivacyError::InvalidDeltaBound(delta));
    }

    let threshold = eps.exp();
    let mut worst: Option<DpWitness> = None;
    for &(a, b) in &m.neighbors {
        for (d1, d2) in [(a, b), (b, a)] {
            let mut outcome_set = Vec::new();
            let mut mass = 0.0;
            for j in 0..m.outputs.len() {
                let p1 = m.prob[d1][j];
                let p2 = m.prob[d2][j];
                let scaled = if p2 == 0.0 { 0.0 } else { threshold * p2 };
                if p1 > scaled {
                    outcome_set.push(j);
                    mass += p1 - scaled;
                }
            }
            let slack = mass - delta;
            if worst.as_ref().map_or(true, |w| slack > w.slack) {
                worst = Some(DpWitness { d1, d2, outcome_set, slack });
            }
        }
    }
    let holds = worst.as_ref().map_or(true, |w| w.slack <= DP_SLACK_TOLERANCE);
    Ok(DpVerdict { holds, witness: worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Randomized response over one bit: report the truth with probability
    /// e^eps / (1 + e^eps), otherwise flip.
    fn randomized_response(eps: f64) -> FiniteMechanism {
        let p = eps.exp() / (1.0 + eps.exp());
        FiniteMechanism::new(
            vec!["0".into(), "1".into()],
            vec!["0".into(), "1".into()],
            vec![vec![p, 1.0 - p], vec![1.0 - p, p]],
            vec![(0, 1)],
        )
        .unwrap()
    }

    fn random_mechanism_from(
        rng: &mut ChaCha8Rng,
        inputs: usize,
        outputs: usize,
        weight_floor: f64,
    ) -> FiniteMechanism {
        let prob: Vec<Vec<f64>> = (0..inputs)
            .map(|_| {
                let raw: Vec<f64> =
                    (0..outputs).map(|_| rng.random_range(weight_floor..1.0)).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|p| p / total).collect()
            })
            .collect();
        let mut neighbors = Vec::new();
        for a in 0..inputs {
            for b in (a + 1)..inputs {
                neighbors.push((a, b));
            }
        }
        FiniteMechanism::new(
            (0..inputs).map(|i| format!("d{i}")).collect(),
            (0..outputs).map(|j| format!("o{j}")).collect(),
            prob,
            neighbors,
        )
        .unwrap()
    }

    fn random_mechanism(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize) -> FiniteMechanism {
        random_mechanism_from(rng, inputs, outputs, 0.01)
    }

    /// Worst slack by explicit enumeration of every outcome subset for every
    /// ordered neighbor pair.
    fn worst_slack_by_enumeration(m: &FiniteMechanism, eps: f64, delta: f64) -> f64 {
        let threshold = eps.exp();
        let k = m.outputs.len();
        let mut worst = f64::NEG_INFINITY;
        for &(a, b) in &m.neighbors {
            for (d1, d2) in [(a, b), (b, a)] {
                for mask in 0u32..(1 << k) {
                    let mut mass = 0.0;
                    for j in 0..k {
                        if mask & (1 << j) != 0 {
                            mass += m.prob[d1][j] - threshold * m.prob[d2][j];
                        }
                    }
                    worst = worst.max(mass - delta);
                }
            }
        }
        worst
    }

    #[test]
    fn delta_one_is_vacuous() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let m = random_mechanism(&mut rng, 3, 4);
            assert!(verify_dp_inequality(&m, 0.0, 1.0).unwrap().holds);
        }
    }

    #[test]
    fn randomized_response_is_tight() {
        for eps in [0.3, 0.5, 1.0, 2.0] {
            let m = randomized_response(eps);
            let verdict = verify_dp_inequality(&m, eps, 0.0).unwrap();
            assert!(verdict.holds, "eps = {eps}");
            let w = verdict.witness.unwrap();
            assert!(w.slack.abs() <= DP_SLACK_TOLERANCE, "slack = {}", w.slack);
        }
    }

    #[test]
    fn randomized_response_fails_below_its_budget() {
        let eps = 1.0;
        let m = randomized_response(eps);
        let verdict = verify_dp_inequality(&m, eps - 0.1, 0.0).unwrap();
        assert!(!verdict.holds);
        let w = verdict.witness.unwrap();
        // The binding outcome is the truthful report of the large-side input.
        assert_eq!(w.outcome_set, vec![w.d1]);
        assert!(w.slack > 0.0);
    }

    #[test]
    fn disjoint_supports_fail_totally() {
        let m = FiniteMechanism::new(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![(0, 1)],
        )
        .unwrap();
        let verdict = verify_dp_inequality(&m, 5.0, 0.0).unwrap();
        assert!(!verdict.holds);
        assert!((verdict.witness.unwrap().slack - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shortcut_agrees_with_subset_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for i in 0..40 {
            let m = random_mechanism(&mut rng, 3, 4);
            let eps = rng.random_range(0.0..2.0);
            let delta = rng.random_range(0.0..0.3);
            let verdict = verify_dp_inequality(&m, eps, delta).unwrap();
            let direct = worst_slack_by_enumeration(&m, eps, delta);
            let shortcut = verdict.witness.unwrap().slack;
            assert!(
                (shortcut - direct).abs() <= 1e-12,
                "case {i}: shortcut {shortcut} vs direct {direct}"
            );
            assert_eq!(verdict.holds, direct <= DP_SLACK_TOLERANCE);
        }
    }

    #[test]
    fn holding_is_monotone_in_eps_and_delta() {
        // Rows drawn from a narrow weight range keep likelihood ratios small
        // so a decent share of sampled bounds actually hold.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut holds_seen = 0;
        for _ in 0..20 {
            let m = random_mechanism_from(&mut rng, 3, 4, 0.5);
            let eps = rng.random_range(0.0..1.5);
            let delta = rng.random_range(0.0..0.2);
            if verify_dp_inequality(&m, eps, delta).unwrap().holds {
                holds_seen += 1;
                assert!(verify_dp_inequality(&m, eps + 0.5, delta).unwrap().holds);
                assert!(verify_dp_inequality(&m, eps, (delta + 0.1).min(1.0)).unwrap().holds);
            }
        }
        assert!(holds_seen > 0, "no holding cases sampled, test is vacuous");
    }

    #[test]
    fn no_neighbors_holds_vacuously() {
        let m = FiniteMechanism::new(
            vec!["a".into()],
            vec!["x".into()],
            vec![vec![1.0]],
            vec![],
        )
        .unwrap();
        let verdict = verify_dp_inequality(&m, 0.0, 0.0).unwrap();
        assert!(verdict.holds);
        assert!(verdict.witness.is_none());
    }

    #[test]
    fn malformed_mechanisms_are_rejected() {
        let good = randomized_response(1.0);

        let mut bad_sum = good.clone();
        bad_sum.prob[0][0] += 0.01;
        assert!(verify_dp_inequality(&bad_sum, 1.0, 0.0).is_err());

        let mut negative = good.clone();
        negative.prob[0][0] = -0.1;
        negative.prob[0][1] = 1.1;
        assert!(verify_dp_inequality(&negative, 1.0, 0.0).is_err());

        let mut ragged = good.clone();
        ragged.prob[1].pop();
        assert!(verify_dp_inequality(&ragged, 1.0, 0.0).is_err());

        let mut bad_pair = good.clone();
        bad_pair.neighbors.push((0, 9));
        assert!(verify_dp_inequality(&bad_pair, 1.0, 0.0).is_err());
    }

    #[test]
    fn bad_bounds_are_rejected() {
        let m = randomized_response(1.0);
        assert!(matches!(
            verify_dp_inequality(&m, -0.1, 0.0),
            Err(PrivacyError::InvalidEpsilonBound(_))
        ));
        assert!(matches!(
            verify_dp_inequality(&m, f64::NAN, 0.0),
            Err(PrivacyError::InvalidEpsilonBound(_))
        ));
        assert!(matches!(
            verify_dp_inequality(&m, 1.0, 1.5),
            Err(PrivacyError::InvalidDeltaBound(_))
        ));
        assert!(matches!(
            verify_dp_inequality(&m, 1.0, -0.1),
            Err(PrivacyError::InvalidDeltaBound(_))
        ));
    }
}
