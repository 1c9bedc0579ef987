//! Compact flag syntax for strategies, schedules, pools and ground truth.

use crate::betting::BettingStrategy;
use crate::streams::{GroundTruth, ScorePool, ShiftSchedule};
use crate::trackers::TrackerKind;

fn split(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((head, rest)) => (head.trim(), Some(rest.trim())),
        None => (s.trim(), None),
    }
}

fn num<T: std::str::FromStr>(what: &str, s: &str) -> Result<T, String> {
    s.trim().parse().map_err(|_| format!("{what}: cannot parse `{s}`"))
}

/// `agra`, `fixed:LAMBDA`, `eb` or `eb:CAP`.
pub fn strategy(s: &str) -> Result<BettingStrategy, String> {
    match split(s) {
        ("agra", None) => Ok(BettingStrategy::Agra),
        ("fixed", Some(l)) => Ok(BettingStrategy::Fixed { lambda: num("fixed rate", l)? }),
        ("eb" | "eb_plugin", None) => Ok(BettingStrategy::eb_default()),
        ("eb" | "eb_plugin", Some(c)) => Ok(BettingStrategy::EbPlugin { cap: num("eb cap", c)? }),
        _ => Err(format!("unknown strategy `{s}` (agra, fixed:L, eb, eb:CAP)")),
    }
}

/// `TRACKER=STRATEGY`.
pub fn tracker_strategy(s: &str) -> Result<(TrackerKind, BettingStrategy), String> {
    let (kind, strat) = s
        .split_once('=')
        .ok_or_else(|| format!("expected TRACKER=STRATEGY, got `{s}`"))?;
    Ok((kind.trim().parse().map_err(|e: <TrackerKind as std::str::FromStr>::Err| e.to_string())?, strategy(strat)?))
}

/// `iid`, `immediate[:START]`, `stepwise[:T_OUT[:INCREMENT]]`.
pub fn schedule(s: &str) -> Result<ShiftSchedule, String> {
    match split(s) {
        ("iid", None) => Ok(ShiftSchedule::Iid),
        ("immediate", None) => Ok(ShiftSchedule::Immediate { start: 1 }),
        ("immediate", Some(t)) => Ok(ShiftSchedule::Immediate { start: num("start", t)? }),
        ("stepwise", None) => Ok(ShiftSchedule::default()),
        ("stepwise", Some(rest)) => {
            let (t_out, inc) = split(rest);
            let base = ShiftSchedule::stepwise(num("t_out", t_out)?);
            match (base, inc) {
                (ShiftSchedule::Stepwise { t_out, .. }, Some(i)) => Ok(ShiftSchedule::Stepwise {
                    t_out,
                    increment: num("increment", i)?,
                }),
                (base, _) => Ok(base),
            }
        }
        _ => Err(format!("unknown schedule `{s}` (iid, immediate[:START], stepwise[:T_OUT[:INC]])")),
    }
}

/// `beta:A,B`.
pub fn pool(s: &str) -> Result<ScorePool, String> {
    match split(s) {
        ("beta", Some(ab)) => {
            let (a, b) = ab.split_once(',').ok_or_else(|| format!("expected beta:A,B, got `{s}`"))?;
            Ok(ScorePool::Beta { a: num("beta a", a)?, b: num("beta b", b)? })
        }
        _ => Err(format!("unknown score pool `{s}` (beta:A,B)")),
    }
}

/// `exact`, `oracle:SIZE` or `none`.
pub fn ground_truth(s: &str) -> Result<GroundTruth, String> {
    match split(s) {
        ("exact", None) => Ok(GroundTruth::Exact),
        ("none", None) => Ok(GroundTruth::None),
        ("oracle", Some(n)) => Ok(GroundTruth::Oracle { size: num("oracle size", n)? }),
        _ => Err(format!("unknown ground truth `{s}` (exact, oracle:SIZE, none)")),
    }
}
