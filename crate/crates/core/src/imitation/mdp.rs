use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::policy::Policy;
use crate::error::{ColError, Result};

/// Size limits that keep parsed instances (and fuzz inputs) bounded.
pub const MAX_STATES: usize = 512;
pub const MAX_ACTIONS: usize = 64;
pub const MAX_HORIZON: usize = 100_000;

const STOCHASTIC_TOL: f64 = 1e-12;

/// Finite-horizon episodic MDP with tabular transitions.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularMdp {
    states: usize,
    actions: usize,
    horizon: usize,
    /// P(s' | s, a) at index (s * A + a) * S + s'.
    transitions: Vec<f64>,
    initial: Vec<f64>,
}

impl TabularMdp {
    pub fn new(
        states: usize,
        actions: usize,
        horizon: usize,
        transitions: Vec<f64>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        if states == 0 || actions == 0 || horizon == 0 {
            return Err(ColError::InvalidParameter(
                "MDP sizes must be positive".into(),
            ));
        }
        if states > MAX_STATES || actions > MAX_ACTIONS || horizon > MAX_HORIZON {
            return Err(ColError::InvalidParameter(format!(
                "MDP {states}x{actions}x{horizon} exceeds limits {MAX_STATES}x{MAX_ACTIONS}x{MAX_HORIZON}"
            )));
        }
        if transitions.len() != states * actions * states {
            return Err(ColError::DimensionMismatch {
                expected: states * actions * states,
                found: transitions.len(),
            });
        }
        if initial.len() != states {
            return Err(ColError::DimensionMismatch {
                expected: states,
                found: initial.len(),
            });
        }
        for (k, row) in transitions.chunks(states).enumerate() {
            check_distribution(row).map_err(|m| {
                ColError::InvalidParameter(format!("P(.|s={}, a={}) {m}", k / actions, k % actions))
            })?;
        }
        check_distribution(&initial)
            .map_err(|m| ColError::InvalidParameter(format!("initial distribution {m}")))?;
        Ok(TabularMdp {
            states,
            actions,
            horizon,
            transitions,
            initial,
        })
    }

    /// Random instance: Dirichlet(1) transition rows and initial distribution.
    pub fn random(states: usize, actions: usize, horizon: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dirichlet = |k: usize| -> Vec<f64> {
            let e: Vec<f64> = (0..k).map(|_| Exp1.sample(&mut rng)).collect();
            let z: f64 = e.iter().sum();
            e.into_iter().map(|v| v / z).collect()
        };
        let mut transitions = Vec::with_capacity(states * actions * states);
        for _ in 0..states * actions {
            transitions.extend(dirichlet(states));
        }
        let initial = dirichlet(states);
        Self::new(states, actions, horizon, transitions, initial)
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition(&self, s: usize, a: usize) -> &[f64] {
        let k = (s * self.actions + a) * self.states;
        &self.transitions[k..k + self.states]
    }

    /// d_1 .. d_H under `policy`.
    pub fn step_distributions(&self, policy: &[f64]) -> Vec<Vec<f64>> {
        let (ns, na) = (self.states, self.actions);
        let mut out = Vec::with_capacity(self.horizon);
        let mut d = self.initial.clone();
        for t in 0..self.horizon {
            if t + 1 < self.horizon {
                let mut next = vec![0.0; ns];
                for s in 0..ns {
                    if d[s] == 0.0 {
                        continue;
                    }
                    for a in 0..na {
                        let w = d[s] * policy[s * na + a];
                        if w == 0.0 {
                            continue;
                        }
                        for (nx, p) in next.iter_mut().zip(self.transition(s, a)) {
                            *nx += w * p;
                        }
                    }
                }
                out.push(std::mem::replace(&mut d, next));
            } else {
                out.push(d.clone());
            }
        }
        out
    }

    /// d^pi = (1/H) sum_t d_t^pi.
    pub fn state_distribution(&self, policy: &Policy) -> Result<Vec<f64>> {
        if policy.states() != self.states || policy.actions() != self.actions {
            return Err(ColError::DimensionMismatch {
                expected: self.states * self.actions,
                found: policy.states() * policy.actions(),
            });
        }
        Ok(self.average_distribution(policy.as_slice()))
    }

    pub(crate) fn average_distribution(&self, policy: &[f64]) -> Vec<f64> {
        let steps = self.step_distributions(policy);
        let h = self.horizon as f64;
        let mut avg = vec![0.0; self.states];
        for d in &steps {
            for (a, v) in avg.iter_mut().zip(d) {
                *a += v;
            }
        }
        avg.iter_mut().for_each(|a| *a /= h);
        avg
    }

    /// Plain-text layout: header `S A H`, then S*A rows of S probabilities in
    /// (s, a) order, then an optional row with the initial distribution
    /// (uniform when absent). `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hl, head) = lines.next().ok_or(ColError::Parse {
            line: 0,
            msg: "missing `S A H` header".into(),
        })?;
        let dims: Vec<usize> = head
            .split_whitespace()
            .map(|t| {
                t.parse().map_err(|_| ColError::Parse {
                    line: hl,
                    msg: format!("bad size `{t}`"),
                })
            })
            .collect::<Result<_>>()?;
        let [s, a, h] = dims[..] else {
            return Err(ColError::Parse {
                line: hl,
                msg: "header must be `S A H`".into(),
            });
        };
        if s == 0 || a == 0 || h == 0 || s > MAX_STATES || a > MAX_ACTIONS || h > MAX_HORIZON {
            return Err(ColError::Parse {
                line: hl,
                msg: format!("sizes {s} {a} {h} out of range"),
            });
        }
        let mut rows = Vec::with_capacity(s * a + 1);
        for (ln, l) in lines {
            if rows.len() > s * a {
                return Err(ColError::Parse {
                    line: ln,
                    msg: "unexpected trailing row".into(),
                });
            }
            let row: Vec<f64> = l
                .split_whitespace()
                .map(|t| match t.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(ColError::Parse {
                        line: ln,
                        msg: format!("bad probability `{t}`"),
                    }),
                })
                .collect::<Result<_>>()?;
            if row.len() != s {
                return Err(ColError::Parse {
                    line: ln,
                    msg: format!("expected {s} entries, found {}", row.len()),
                });
            }
            if let Err(m) = check_distribution(&row) {
                return Err(ColError::Parse {
                    line: ln,
                    msg: format!("row {m}"),
                });
            }
            rows.push(row);
        }
        if rows.len() < s * a {
            return Err(ColError::Parse {
                line: 0,
                msg: format!("expected {} transition rows, found {}", s * a, rows.len()),
            });
        }
        let initial = if rows.len() > s * a {
            rows.pop().unwrap()
        } else {
            vec![1.0 / s as f64; s]
        };
        Self::new(s, a, h, rows.concat(), initial)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.states, self.actions, self.horizon);
        let line = |out: &mut String, row: &[f64]| {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        };
        for row in self.transitions.chunks(self.states) {
            line(&mut out, row);
        }
        line(&mut out, &self.initial);
        out
    }
}

fn check_distribution(row: &[f64]) -> std::result::Result<(), String> {
    if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err("has a negative or non-finite entry".into());
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(format!("sums to {sum}, not 1"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_state_is_a_point_mass() {
        let m = TabularMdp::new(1, 3, 4, vec![1.0; 3], vec![1.0]).unwrap();
        let pi = Policy::uniform(1, 3);
        assert_eq!(m.state_distribution(&pi).unwrap(), vec![1.0]);
    }

    #[test]
    fn two_state_chain_by_hand() {
        // action 0 stays, action 1 switches; start in state 0
        let p = vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let m = TabularMdp::new(2, 2, 2, p, vec![1.0, 0.0]).unwrap();
        let always_switch = Policy::new(2, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        // d_1 = (1, 0), d_2 = (0, 1)
        assert_eq!(
            m.state_distribution(&always_switch).unwrap(),
            vec![0.5, 0.5]
        );
        let stay = Policy::new(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(m.state_distribution(&stay).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn random_distributions_are_normalized() {
        for seed in 0..20 {
            let m = TabularMdp::random(4, 3, 7, seed).unwrap();
            let d = m
                .state_distribution(&Policy::random(4, 3, seed + 100))
                .unwrap();
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn text_round_trip() {
        let m = TabularMdp::random(3, 2, 5, 7).unwrap();
        assert_eq!(TabularMdp::parse(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn parse_defaults_to_uniform_start() {
        let text = "# two states\n2 1 3\n0.5 0.5\n0 1 # absorbing\n";
        let m = TabularMdp::parse(text).unwrap();
        assert_eq!(m.initial(), &[0.5, 0.5]);
        assert_eq!(m.transition(1, 0), &[0.0, 1.0]);
    }

    #[test]
    fn parse_errors() {
        for bad in [
            "",
            "2 1\n",
            "2 1 3\n0.5 0.5\n",
            "2 1 3\n0.5 0.6\n0 1\n",
            "2 1 3\n0.5 0.5\n0 1\n1 0\n1 0\n",
            "1 1 1\nnan\n",
        ] {
            assert!(TabularMdp::parse(bad).is_err(), "{bad:?}");
        }
        assert!(TabularMdp::parse("100000 2 2\n").is_err());
    }
}
