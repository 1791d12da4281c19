//! Lorenz curves, Gini and Pietra indices, and certified stochastic-order
//! comparisons between finite pmfs on the nonnegative integers.
//!
//! Convex order is decided through stop-loss transforms, which are
//! piecewise linear with integer breakpoints for integer-supported
//! distributions, so an integer grid of check points is a complete
//! certificate. Verdicts are issued only when margins clear both a
//! floating-point tie tolerance and an allowance for truncated tail mass.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inversion::Pmf;
use crate::numeric::KahanSum;

/// Margins within this band of zero are ties, never order evidence.
pub const ORDER_TIE_TOL: f64 = 1e-10;

const MEAN_MATCH_TOL: f64 = 1e-9;

/// Piecewise-linear Lorenz curve, stored as its knots. `L(0) = 0`,
/// `L(1) = 1`, convex, and never above the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LorenzCurve {
    knots: Vec<(f64, f64)>,
}

impl LorenzCurve {
    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Evaluate by linear interpolation between knots.
    pub fn eval(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self
            .knots
            .binary_search_by(|(x, _)| x.total_cmp(&u))
        {
            Ok(i) => self.knots[i].1,
            Err(i) => {
                if i == 0 {
                    return 0.0;
                }
                if i >= self.knots.len() {
                    return 1.0;
                }
                let (x0, y0) = self.knots[i - 1];
                let (x1, y1) = self.knots[i];
                if x1 == x0 {
                    y1
                } else {
                    y0 + (y1 - y0) * (u - x0) / (x1 - x0)
                }
            }
        }
    }

    /// Exact area under the curve (trapezoid rule on the knots).
    pub fn area(&self) -> f64 {
        let mut acc = KahanSum::new();
        for w in self.knots.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            acc.add(0.5 * (x1 - x0) * (y0 + y1));
        }
        acc.value()
    }

    /// Largest vertical gap to the diagonal, attained at a knot.
    pub fn max_gap(&self) -> f64 {
        self.knots
            .iter()
            .map(|(u, l)| u - l)
            .fold(0.0, f64::max)
    }
}

/// Normalized masses and their mean; shared entry point for the index
/// computations. Truncated pmfs are treated as conditioned on their
/// support.
fn normalized(pmf: &Pmf) -> Result<(Vec<f64>, f64)> {
    let total = pmf.total_mass();
    if total <= 0.0 {
        return Err(Error::ZeroMean);
    }
    let probs: Vec<f64> = pmf.mass().iter().map(|m| m / total).collect();
    let mut mean = KahanSum::new();
    for (k, p) in probs.iter().enumerate() {
        mean.add(k as f64 * p);
    }
    let mean = mean.value();
    if mean <= 0.0 {
        return Err(Error::ZeroMean);
    }
    Ok((probs, mean))
}

/// Lorenz curve of a pmf with positive mean.
pub fn lorenz_curve(pmf: &Pmf) -> Result<LorenzCurve> {
    let (probs, mean) = normalized(pmf)?;
    let mut knots = Vec::with_capacity(probs.len() + 1);
    knots.push((0.0, 0.0));
    let mut cum_u = KahanSum::new();
    let mut cum_l = KahanSum::new();
    for (k, p) in probs.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        cum_u.add(*p);
        cum_l.add(k as f64 * p / mean);
        knots.push((cum_u.value().min(1.0), cum_l.value().min(1.0)));
    }
    if let Some(last) = knots.last_mut() {
        *last = (1.0, 1.0);
    }
    Ok(LorenzCurve { knots })
}

/// Gini index `E|X - X'| / (2 E X)`, by the double sum over the support;
/// reconciled against the Lorenz-area route `1 - 2 integral(L)` within
/// 1e-12 before being returned.
pub fn gini(pmf: &Pmf) -> Result<f64> {
    let (probs, mean) = normalized(pmf)?;
    let mut acc = KahanSum::new();
    for i in 1..probs.len() {
        if probs[i] == 0.0 {
            continue;
        }
        for j in 0..i {
            acc.add(probs[i] * probs[j] * (i - j) as f64);
        }
    }
    let double_sum = acc.value() / mean;

    let via_area = 1.0 - 2.0 * lorenz_curve(pmf)?.area();
    if (double_sum - via_area).abs() > 1e-12 {
        return Err(Error::ConsistencyGate {
            what: "gini double sum vs Lorenz area".into(),
            got: double_sum,
            want: via_area,
            tol: 1e-12,
        });
    }
    Ok(double_sum)
}

/// Pietra index `E|X - E X| / (2 E X)`, reconciled against the maximal
/// Lorenz gap `max_u (u - L(u))` within 1e-12.
pub fn pietra(pmf: &Pmf) -> Result<f64> {
    let (probs, mean) = normalized(pmf)?;
    let mut acc = KahanSum::new();
    for (k, p) in probs.iter().enumerate() {
        acc.add((k as f64 - mean).abs() * p);
    }
    let single_sum = acc.value() / (2.0 * mean);

    let via_gap = lorenz_curve(pmf)?.max_gap();
    if (single_sum - via_gap).abs() > 1e-12 {
        return Err(Error::ConsistencyGate {
            what: "pietra sum vs Lorenz gap".into(),
            got: single_sum,
            want: via_gap,
            tol: 1e-12,
        });
    }
    Ok(single_sum)
}

/// Direction of a certified comparison. `LeftSmaller` means the first
/// argument precedes the second in the order under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    LeftSmaller,
    RightSmaller,
    Equal,
    Incomparable,
}

/// Evidence backing a verdict: the evaluation grid, the signed margin at
/// each point (positive favors `LeftSmaller`), and the tie/truncation
/// allowance that margins had to clear. For `Incomparable` the witness
/// indices point at two grid points with opposite strict signs.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub points: Vec<f64>,
    pub margins: Vec<f64>,
    pub slack: f64,
    pub witness: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderVerdict {
    pub relation: Relation,
    pub certificate: Certificate,
}

/// Allowance for mass hidden beyond the truncation point; assumes the
/// residual sits within one support length past the cut.
fn stop_loss_slack(pmf: &Pmf) -> f64 {
    pmf.tail_bound() * (pmf.len() as f64 + 16.0)
}

fn survival(probs: &[f64], len: usize) -> Vec<f64> {
    // survival[t] = P(X > t) for t = 0..len-1
    let mut out = vec![0.0; len];
    let mut acc = KahanSum::new();
    for t in (0..len).rev() {
        if t + 1 < probs.len() {
            acc.add(probs[t + 1]);
        }
        out[t] = acc.value();
    }
    out
}

fn stop_loss(surv: &[f64]) -> Vec<f64> {
    // E (X - t)^+ = sum_{s >= t} P(X > s)
    let mut out = vec![0.0; surv.len()];
    let mut acc = KahanSum::new();
    for t in (0..surv.len()).rev() {
        acc.add(surv[t]);
        out[t] = acc.value();
    }
    out
}

fn classify(points: Vec<f64>, margins: Vec<f64>, slack: f64) -> OrderVerdict {
    let mut any_pos = None;
    let mut any_neg = None;
    for (i, d) in margins.iter().enumerate() {
        if *d > slack && any_pos.is_none() {
            any_pos = Some(i);
        }
        if *d < -slack && any_neg.is_none() {
            any_neg = Some(i);
        }
    }
    let (relation, witness) = match (any_pos, any_neg) {
        (None, None) => (Relation::Equal, None),
        (Some(_), None) => (Relation::LeftSmaller, None),
        (None, Some(_)) => (Relation::RightSmaller, None),
        (Some(p), Some(n)) => (Relation::Incomparable, Some((p, n))),
    };
    OrderVerdict {
        relation,
        certificate: Certificate {
            points,
            margins,
            slack,
            witness,
        },
    }
}

/// Convex-order comparison via stop-loss transforms on the integer grid.
/// Requires equal means (within 1e-9); `LeftSmaller` means every stop-loss
/// value of the left pmf is dominated by the right one.
pub fn convex_order_check(p: &Pmf, q: &Pmf) -> Result<OrderVerdict> {
    let (probs_p, mean_p) = normalized(p)?;
    let (probs_q, mean_q) = normalized(q)?;
    if (mean_p - mean_q).abs() > MEAN_MATCH_TOL {
        return Err(Error::UnequalMeans {
            left: mean_p,
            right: mean_q,
        });
    }
    let len = probs_p.len().max(probs_q.len());
    let sl_p = stop_loss(&survival(&probs_p, len));
    let sl_q = stop_loss(&survival(&probs_q, len));
    let slack = ORDER_TIE_TOL + stop_loss_slack(p) + stop_loss_slack(q);
    let points: Vec<f64> = (0..len).map(|t| t as f64).collect();
    let margins: Vec<f64> = sl_q.iter().zip(&sl_p).map(|(q, p)| q - p).collect();
    Ok(classify(points, margins, slack))
}

/// Lorenz-order comparison by pointwise curve dominance on the merged knot
/// set (exact for piecewise-linear curves). `LeftSmaller` means the left
/// curve lies on or above the right one everywhere.
pub fn lorenz_order_check(p: &Pmf, q: &Pmf) -> Result<OrderVerdict> {
    let (_, mean_p) = normalized(p)?;
    let (_, mean_q) = normalized(q)?;
    let curve_p = lorenz_curve(p)?;
    let curve_q = lorenz_curve(q)?;

    let mut us: Vec<f64> = curve_p
        .knots()
        .iter()
        .chain(curve_q.knots())
        .map(|(u, _)| *u)
        .collect();
    us.sort_by(f64::total_cmp);
    us.dedup();

    let slack = ORDER_TIE_TOL
        + p.tail_bound() * (p.len() as f64 + 16.0) / mean_p
        + q.tail_bound() * (q.len() as f64 + 16.0) / mean_q;
    let margins: Vec<f64> = us
        .iter()
        .map(|u| curve_p.eval(*u) - curve_q.eval(*u))
        .collect();
    Ok(classify(us, margins, slack))
}

/// Equal-mean comparison through the survival-difference sign pattern:
/// a single sign change of `P(X_left > k) - P(X_right > k)` from negative
/// to positive certifies that the right pmf is convex-order smaller
/// (`RightSmaller`), and symmetrically. Ambiguous patterns fall back to
/// the full stop-loss check.
pub fn survival_crossing_check(p: &Pmf, q: &Pmf) -> Result<OrderVerdict> {
    let (probs_p, mean_p) = normalized(p)?;
    let (probs_q, mean_q) = normalized(q)?;
    if (mean_p - mean_q).abs() > MEAN_MATCH_TOL {
        return Err(Error::UnequalMeans {
            left: mean_p,
            right: mean_q,
        });
    }
    let len = probs_p.len().max(probs_q.len());
    let surv_p = survival(&probs_p, len);
    let surv_q = survival(&probs_q, len);
    let slack = ORDER_TIE_TOL + p.tail_bound() + q.tail_bound();
    let points: Vec<f64> = (0..len).map(|k| k as f64).collect();
    let margins: Vec<f64> = surv_p.iter().zip(&surv_q).map(|(a, b)| a - b).collect();

    let signs: Vec<i8> = margins
        .iter()
        .filter(|d| d.abs() > slack)
        .map(|d| if *d > 0.0 { 1 } else { -1 })
        .collect();
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();

    if signs.is_empty() {
        return Ok(OrderVerdict {
            relation: Relation::Equal,
            certificate: Certificate {
                points,
                margins,
                slack,
                witness: None,
            },
        });
    }
    if changes == 1 {
        let relation = if signs[0] < 0 {
            // negative then positive: heavier left tail, left is the spread
            Relation::RightSmaller
        } else {
            Relation::LeftSmaller
        };
        return Ok(OrderVerdict {
            relation,
            certificate: Certificate {
                points,
                margins,
                slack,
                witness: None,
            },
        });
    }
    // no crossing with a consistent sign (truncation noise) or several
    // crossings: defer to the full stop-loss comparison
    convex_order_check(p, q)
}
