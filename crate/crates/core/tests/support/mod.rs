#![allow(dead_code)]

use std::collections::BTreeMap;

use collabnet::model::founding_network;
use collabnet::{Esr, EsrId, Network, Partner, PartnerId, PartnerKind, Roster, Scalar};
use rand::Rng;

pub fn p(i: u16) -> PartnerId {
    PartnerId(i)
}

pub fn founding_table() -> Vec<Vec<i64>> {
    vec![
        vec![0, 0, 8, 3],
        vec![2, 0, 16, 0],
        vec![8, 8, 0, 0],
        vec![15, 0, 3, 0],
    ]
}

pub fn founding() -> Network {
    founding_network(&founding_table()).unwrap()
}

pub fn roster() -> Roster {
    let experimental = [1, 2, 3, 7, 8, 9, 11, 14];
    Roster::new(
        (1..=14)
            .map(|i| Partner {
                id: p(i),
                kind: if experimental.contains(&i) {
                    PartnerKind::Experimental
                } else {
                    PartnerKind::Computational
                },
                founding: i <= 4,
            })
            .collect(),
    )
    .unwrap()
}

pub fn esr(id: u16, home: u16, a: u32, b: u32) -> Esr {
    Esr::new(EsrId(id), p(home), a, b).unwrap()
}

/// New researchers in dataset order, with ESR13 filled in.
pub fn new_esrs(esr13: (u32, u32)) -> Vec<Esr> {
    vec![
        esr(5, 5, 9, 4),
        esr(6, 5, 8, 6),
        esr(7, 6, 8, 4),
        esr(8, 6, 10, 4),
        esr(9, 7, 9, 4),
        esr(10, 7, 6, 5),
        esr(11, 8, 8, 7),
        esr(12, 9, 10, 4),
        esr(13, 10, esr13.0, esr13.1),
        esr(14, 11, 10, 3),
        esr(15, 12, 8, 5),
        esr(16, 13, 8, 4),
        esr(17, 14, 6, 3),
    ]
}

/// Random network on partners `1..=n`. When `connected`, a random spanning
/// tree is laid down first.
pub fn random_network<R: Rng>(rng: &mut R, n: u16, connected: bool, extra: f64) -> Network {
    let mut net = Network::with_partners((1..=n).map(p));
    if connected {
        for i in 2..=n {
            let j = rng.gen_range(1..i);
            net.add_months(p(i), p(j), rng.gen_range(1..=20)).unwrap();
        }
    }
    for i in 1..=n {
        for j in (i + 1)..=n {
            if rng.gen_bool(extra) {
                net.add_months(p(i), p(j), rng.gen_range(1..=20)).unwrap();
            }
        }
    }
    net
}

pub fn random_roster<R: Rng>(rng: &mut R, n: u16) -> Roster {
    Roster::new(
        (1..=n)
            .map(|i| Partner {
                id: p(i),
                kind: if rng.gen_bool(0.5) {
                    PartnerKind::Experimental
                } else {
                    PartnerKind::Computational
                },
                founding: false,
            })
            .collect(),
    )
    .unwrap()
}

/// Shortest distances by enumerating every simple path. Independent of the
/// library's all-pairs routine; exponential, so keep graphs small.
pub fn brute_force_shortest<T: Scalar>(net: &Network) -> BTreeMap<(PartnerId, PartnerId), Option<T>> {
    let nodes: Vec<PartnerId> = net.partners().iter().copied().collect();
    let mut out = BTreeMap::new();
    for &s in &nodes {
        for &t in &nodes {
            let best = if s == t {
                Some(T::zero())
            } else {
                let mut best: Option<T> = None;
                let mut visited = vec![s];
                walk(net, &nodes, s, t, T::zero(), &mut visited, &mut best);
                best
            };
            out.insert((s, t), best);
        }
    }
    out
}

fn walk<T: Scalar>(
    net: &Network,
    nodes: &[PartnerId],
    at: PartnerId,
    target: PartnerId,
    acc: T,
    visited: &mut Vec<PartnerId>,
    best: &mut Option<T>,
) {
    for &next in nodes {
        if visited.contains(&next) {
            continue;
        }
        let Some(m) = net.months(at, next) else {
            continue;
        };
        let len = acc.clone() + T::one() / T::from_months(m);
        if next == target {
            if best.as_ref().is_none_or(|b| len < *b) {
                *best = Some(len);
            }
            continue;
        }
        visited.push(next);
        walk(net, nodes, next, target, len, visited, best);
        visited.pop();
    }
}
