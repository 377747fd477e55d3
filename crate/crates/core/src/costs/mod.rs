//! Cost functions. Pre-generation models price a program from its rule and
//! children alone; post-generation models add a penalty that depends on the
//! program's outputs through a probability oracle.

pub mod oracle;
pub mod signature;
pub mod spline;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grammar::{Grammar, Pcfg, RuleId};

pub use oracle::{BoundOracle, Network, Oracle};
pub use signature::{property_signature, PROPERTY_COUNT};
pub use spline::NaturalSpline;

/// Bin edges of the discrete penalty.
pub const DELTA_BINS: [f64; 7] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 1.0];
/// Knots of the interpolated penalty.
pub const SPLINE_KNOTS: [(f64, f64); 6] = [
    (0.00, 0.0),
    (0.15, 1.0),
    (0.25, 2.0),
    (0.35, 3.0),
    (0.50, 4.0),
    (1.00, 5.0),
];

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Probability(p))
    }
}

/// Index of the bin holding `p`; the last bin is closed at 1.
pub fn delta_binned(p: f64) -> Result<u8> {
    check_probability(p)?;
    let bin = DELTA_BINS[1..].iter().position(|&edge| p < edge).unwrap_or(5);
    Ok(bin as u8)
}

fn knot_spline() -> &'static NaturalSpline {
    static SPLINE: OnceLock<NaturalSpline> = OnceLock::new();
    SPLINE.get_or_init(|| {
        let xs: Vec<f64> = SPLINE_KNOTS.iter().map(|k| k.0).collect();
        let ys: Vec<f64> = SPLINE_KNOTS.iter().map(|k| k.1).collect();
        NaturalSpline::new(&xs, &ys)
    })
}

/// Natural cubic spline through [`SPLINE_KNOTS`], clamped to `[0, 5]`.
pub fn delta_spline(p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(knot_spline().eval(p).clamp(0.0, 5.0))
}

/// `w(r) + sum of child costs`.
pub fn w_probe(rule_cost: f64, children: &[f64]) -> f64 {
    rule_cost + children.iter().sum::<f64>()
}

/// Integer rule cost used by the truncating baselines.
pub fn rounded_rule_cost(cost: f64) -> i64 {
    (cost.round() as i64).max(1)
}

pub fn w_probe_rounded(rule_cost: f64, children: &[i64]) -> i64 {
    rounded_rule_cost(rule_cost) + children.iter().sum::<i64>()
}

/// Grouped so that `w' >= w` also holds in floating point.
pub fn w_bustle_post(w: f64, delta: f64) -> f64 {
    w + (5.0 - delta)
}

pub fn w_u_post(w: f64, p: f64) -> f64 {
    w - p.log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostKind {
    /// Every rule costs 1: plain size-based enumeration.
    Size,
    Probe,
    ProbeRounded,
    BustleBinned,
    BustleSpline,
    U,
}

impl CostKind {
    pub const ALL: [CostKind; 6] = [
        CostKind::Size,
        CostKind::Probe,
        CostKind::ProbeRounded,
        CostKind::BustleBinned,
        CostKind::BustleSpline,
        CostKind::U,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CostKind::Size => "size",
            CostKind::Probe => "probe",
            CostKind::ProbeRounded => "probe-rounded",
            CostKind::BustleBinned => "bustle-binned",
            CostKind::BustleSpline => "bustle-spline",
            CostKind::U => "u",
        }
    }

    pub fn is_post(self) -> bool {
        matches!(self, CostKind::BustleBinned | CostKind::BustleSpline | CostKind::U)
    }

    /// Whether every cost the model produces is an integer.
    pub fn is_integral(self) -> bool {
        matches!(self, CostKind::Size | CostKind::ProbeRounded | CostKind::BustleBinned)
    }

    pub fn uses_pcfg(self) -> bool {
        matches!(self, CostKind::Probe | CostKind::ProbeRounded)
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<CostKind> {
        CostKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown cost model `{s}`")))
    }
}

/// A cost function over a fixed grammar.
#[derive(Debug, Clone)]
pub struct CostModel {
    kind: CostKind,
    rule_costs: Vec<f64>,
    oracle: Option<Oracle>,
}

impl CostModel {
    pub fn new(kind: CostKind, pcfg: &Pcfg, oracle: Option<Oracle>) -> CostModel {
        let rule_costs = match kind {
            CostKind::Probe => pcfg.costs().to_vec(),
            CostKind::ProbeRounded => pcfg.costs().iter().map(|&c| rounded_rule_cost(c) as f64).collect(),
            _ => vec![1.0; pcfg.costs().len()],
        };
        let oracle = kind.is_post().then(|| oracle.unwrap_or(Oracle::Heuristic));
        CostModel {
            kind,
            rule_costs,
            oracle,
        }
    }

    pub fn size(grammar: &Grammar) -> CostModel {
        CostModel {
            kind: CostKind::Size,
            rule_costs: vec![1.0; grammar.rules().len()],
            oracle: None,
        }
    }

    pub fn probe(pcfg: &Pcfg) -> CostModel {
        CostModel::new(CostKind::Probe, pcfg, None)
    }

    pub fn probe_rounded(pcfg: &Pcfg) -> CostModel {
        CostModel::new(CostKind::ProbeRounded, pcfg, None)
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn is_post(&self) -> bool {
        self.kind.is_post()
    }

    pub fn oracle(&self) -> Option<&Oracle> {
        self.oracle.as_ref()
    }

    pub fn rule_cost(&self, r: RuleId) -> f64 {
        self.rule_costs[r]
    }

    pub fn rule_costs(&self) -> &[f64] {
        &self.rule_costs
    }

    /// `w = rule cost + sum of the children's costs` (their `w'` for post models).
    pub fn combine(&self, r: RuleId, children: &[f64]) -> f64 {
        w_probe(self.rule_costs[r], children)
    }

    /// `w'` from `w` and the oracle probability; identity for pre-generation models.
    pub fn post_cost(&self, w: f64, p: f64) -> f64 {
        match self.kind {
            CostKind::BustleBinned => {
                w_bustle_post(w, delta_binned(p).expect("oracle probabilities are clamped") as f64)
            }
            CostKind::BustleSpline => {
                w_bustle_post(w, delta_spline(p).expect("oracle probabilities are clamped"))
            }
            CostKind::U => w_u_post(w, p),
            _ => w,
        }
    }

    /// Binds the oracle to a task (post-generation models only).
    pub fn bind(&self, task: &crate::interp::Task) -> Result<Option<BoundOracle>> {
        self.oracle.as_ref().map(|o| o.bind(task)).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_arithmetic() {
        let concat = 14.28771;
        assert!((w_probe(concat, &[9.966013, 9.966013]) - 34.219736).abs() < 1e-5);
        assert!((w_probe(concat, &[9.816589, 9.816589]) - 33.920888).abs() < 1e-5);
        assert_eq!(w_probe(3.5, &[]), 3.5);
        assert_eq!(w_probe_rounded(concat, &[10, 10]), 34);
        assert_eq!(rounded_rule_cost(9.816589), 10);
        assert_eq!(rounded_rule_cost(0.4), 1);
    }

    #[test]
    fn binned_delta() {
        assert_eq!(delta_binned(0.05).unwrap(), 0);
        assert_eq!(delta_binned(1.0).unwrap(), 5);
        assert_eq!(delta_binned(0.1).unwrap(), 1);
        assert_eq!(delta_binned(0.39999).unwrap(), 3);
        assert_eq!(delta_binned(0.6).unwrap(), 5);
        assert_eq!(delta_binned(0.59).unwrap(), 4);
        assert!(delta_binned(-0.1).is_err());
        assert!(delta_binned(1.1).is_err());
    }

    #[test]
    fn spline_delta_endpoints() {
        assert_eq!(delta_spline(0.0).unwrap(), 0.0);
        assert!((delta_spline(1.0).unwrap() - 5.0).abs() < 1e-12);
        assert!((delta_spline(0.25).unwrap() - 2.0).abs() < 1e-12);
        assert!(delta_spline(2.0).is_err());
    }

    #[test]
    fn post_costs() {
        assert_eq!(w_bustle_post(3.0, delta_binned(0.05).unwrap() as f64), 8.0);
        assert_eq!(w_bustle_post(3.0, delta_binned(1.0).unwrap() as f64), 3.0);
        assert_eq!(w_u_post(1.0, 0.5), 2.0);
        assert!((w_u_post(4.0, 0.01) - (4.0 + 100f64.log2())).abs() < 1e-12);
    }

    #[test]
    fn names_round_trip() {
        for k in CostKind::ALL {
            assert_eq!(k.name().parse::<CostKind>().unwrap(), k);
        }
        assert!("bustle".parse::<CostKind>().is_err());
    }
}
