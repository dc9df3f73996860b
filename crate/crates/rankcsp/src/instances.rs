//! Instance generation and bit-exact serialization.
//!
//! Planted instances hide a uniformly drawn reference ranking: every
//! constraint is first made consistent with it, then independently with
//! probability rho replaced by a uniform choice among the payloads that
//! disagree with the reference. Generation is fully determined by the seed:
//! the reference shuffle is drawn first, then one coin per subset in lex
//! order (plus one replacement draw when the coin fires).
//!
//! The serialized form is canonical JSON: fixed key order, constraints one
//! per line in lex subset order, rationals as num/den pairs, no floats.
//! Re-serializing a parsed instance reproduces the bytes exactly.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::combin::{
    binomial, colex_rank, factorial, for_each_combination, permutation_by_lex_rank,
    permutation_lex_rank,
};
use crate::csp::{ConstraintSystem, Family};
use crate::error::{Error, Result};
use crate::order::{pos_int, Pos, Ranking, Vertex};
use crate::MAX_ARITY;

pub const FORMAT_TAG: &str = "rankcsp-v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlantedInstance {
    pub system: ConstraintSystem,
    pub planted: Ranking,
    pub noise: Pos,
    /// Constraints whose payload was re-randomized away from the planted-
    /// consistent choice.
    pub noised_count: u64,
    pub seed: u64,
}

fn check_family_arity(family: Family, k: usize) -> Result<()> {
    let ok = match family {
        Family::Betweenness3 => k == 3,
        Family::KFast => (2..=MAX_ARITY).contains(&k),
        Family::KBetweenness => k >= 4,
        Family::ExplicitTable => (2..=MAX_ARITY).contains(&k),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::IncompatibleFamily {
            family: family.as_str().into(),
            k,
        })
    }
}

fn check_noise(rho: Pos) -> Result<()> {
    if rho < pos_int(0) || rho > pos_int(1) {
        return Err(Error::InvalidNoise {
            rho: crate::order::format_pos(&rho),
        });
    }
    Ok(())
}

/// Exact Bernoulli(num/den) draw; consumes exactly one RNG value.
fn coin(rng: &mut ChaCha8Rng, num: u64, den: u64) -> bool {
    rng.random_range(0..den) < num
}

/// Subset `s` sorted by planted rank.
fn induced_order(s: &[Vertex], ranks: &std::collections::BTreeMap<Vertex, usize>) -> Vec<Vertex> {
    let mut v = s.to_vec();
    v.sort_by_key(|x| ranks[x]);
    v
}

/// Draw uniformly from 0..count-1 skipping `skip`.
fn draw_other(rng: &mut ChaCha8Rng, count: u64, skip: u64) -> u64 {
    let r = rng.random_range(0..count - 1);
    if r >= skip {
        r + 1
    } else {
        r
    }
}

pub fn gen_planted(
    family: Family,
    n: usize,
    k: usize,
    rho: Pos,
    seed: u64,
) -> Result<PlantedInstance> {
    check_family_arity(family, k)?;
    check_noise(rho)?;
    if family == Family::ExplicitTable {
        return Err(Error::IncompatibleFamily {
            family: family.as_str().into(),
            k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<Vertex> = (0..n).collect();
    order.shuffle(&mut rng);
    let planted = Ranking::from_order(order).unwrap();
    let ranks = planted.ranks();
    let (num, den) = (*rho.numer() as u64, *rho.denom() as u64);
    let mut noised = 0u64;
    let system = match family {
        Family::Betweenness3 => ConstraintSystem::betweenness3(n, |s| {
            let induced = induced_order(s, &ranks);
            if coin(&mut rng, num, den) {
                noised += 1;
                let ends = [induced[0], induced[2]];
                ends[rng.random_range(0..2usize)]
            } else {
                induced[1]
            }
        })?,
        Family::KFast => ConstraintSystem::k_fast(n, k, |s| {
            let induced = induced_order(s, &ranks);
            if coin(&mut rng, num, den) {
                noised += 1;
                // q maps induced slots to sorted-subset indices; skip its rank.
                let q: Vec<usize> = induced
                    .iter()
                    .map(|v| s.iter().position(|x| x == v).unwrap())
                    .collect();
                let skip = permutation_lex_rank(&q) as u64;
                let r = draw_other(&mut rng, factorial(k), skip);
                permutation_by_lex_rank(k, r as usize)
                    .into_iter()
                    .map(|i| s[i])
                    .collect()
            } else {
                induced
            }
        })?,
        Family::KBetweenness => ConstraintSystem::k_betweenness(n, k, |s| {
            let induced = induced_order(s, &ranks);
            let (a, b) = (induced[0], induced[k - 1]);
            if coin(&mut rng, num, den) {
                noised += 1;
                // Unordered pairs of s in lex order of index pairs.
                let ia = s.iter().position(|&x| x == a.min(b)).unwrap();
                let ib = s.iter().position(|&x| x == a.max(b)).unwrap();
                let pairs: Vec<(usize, usize)> = (0..k)
                    .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
                    .collect();
                let skip = pairs.iter().position(|&p| p == (ia, ib)).unwrap() as u64;
                let r = draw_other(&mut rng, binomial(k, 2), skip) as usize;
                (s[pairs[r].0], s[pairs[r].1])
            } else {
                (a, b)
            }
        })?,
        Family::ExplicitTable => unreachable!("rejected above"),
    };
    Ok(PlantedInstance {
        system,
        planted,
        noise: rho,
        noised_count: noised,
        seed,
    })
}

/// Uniform random system: every constraint payload drawn uniformly from all
/// choices for its family (tables get k! independent fair bits).
pub fn gen_uniform(family: Family, n: usize, k: usize, seed: u64) -> Result<ConstraintSystem> {
    check_family_arity(family, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match family {
        Family::Betweenness3 => {
            ConstraintSystem::betweenness3(n, |s| s[rng.random_range(0..3usize)])
        }
        Family::KFast => ConstraintSystem::k_fast(n, k, |s| {
            let r = rng.random_range(0..factorial(k)) as usize;
            permutation_by_lex_rank(k, r).into_iter().map(|i| s[i]).collect()
        }),
        Family::KBetweenness => ConstraintSystem::k_betweenness(n, k, |s| {
            let pairs: Vec<(usize, usize)> = (0..k)
                .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
                .collect();
            let (i, j) = pairs[rng.random_range(0..pairs.len())];
            (s[i], s[j])
        }),
        Family::ExplicitTable => ConstraintSystem::explicit_table(n, k, |_| {
            (0..factorial(k)).map(|_| rng.random_range(0..2u8)).collect()
        }),
    }
}

/// A system plus the optional generation metadata that serializes with it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceFile {
    pub system: ConstraintSystem,
    pub planted: Option<Ranking>,
    pub noise: Option<Pos>,
    pub noised_count: Option<u64>,
    pub seed: Option<u64>,
}

impl From<ConstraintSystem> for InstanceFile {
    fn from(system: ConstraintSystem) -> Self {
        InstanceFile {
            system,
            planted: None,
            noise: None,
            noised_count: None,
            seed: None,
        }
    }
}

impl From<PlantedInstance> for InstanceFile {
    fn from(p: PlantedInstance) -> Self {
        InstanceFile {
            system: p.system,
            planted: Some(p.planted),
            noise: Some(p.noise),
            noised_count: Some(p.noised_count),
            seed: Some(p.seed),
        }
    }
}

impl InstanceFile {
    /// Canonical serialization; see the module docs. Byte-stable: equal
    /// values always produce equal output.
    pub fn to_json(&self) -> String {
        let c = &self.system;
        let (n, k) = (c.n(), c.k());
        let mut out = String::new();
        out.push_str(&format!(
            "{{\"format\":\"{FORMAT_TAG}\",\"n\":{n},\"k\":{k},\"family\":\"{}\"",
            c.family()
        ));
        if let Some(p) = &self.planted {
            out.push_str(",\"planted\":[");
            push_ids(&mut out, p.order().iter().map(|&v| v as u64));
            out.push(']');
        }
        if let Some(rho) = self.noise {
            out.push_str(&format!(
                ",\"noise\":{{\"num\":{},\"den\":{}}}",
                rho.numer(),
                rho.denom()
            ));
        }
        if let Some(nc) = self.noised_count {
            out.push_str(&format!(",\"noised_count\":{nc}"));
        }
        if let Some(seed) = self.seed {
            out.push_str(&format!(",\"seed\":{seed}"));
        }
        out.push_str(",\"constraints\":[\n");
        let mut first = true;
        let scalar_payload = c.family() == Family::Betweenness3;
        for_each_combination(n, k, |s| {
            if !first {
                out.push_str(",\n");
            }
            first = false;
            out.push_str("{\"s\":[");
            push_ids(&mut out, s.iter().map(|&v| v as u64));
            out.push_str("],\"d\":");
            let tokens = c.payload_tokens(s);
            if scalar_payload {
                out.push_str(&tokens[0].to_string());
            } else {
                out.push('[');
                push_ids(&mut out, tokens.iter().copied());
                out.push(']');
            }
            out.push('}');
        });
        out.push_str("\n]}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<InstanceFile> {
        let parse_err = |message: String| Error::Parse { message };
        let root: Value =
            serde_json::from_str(text).map_err(|e| parse_err(format!("not valid JSON: {e}")))?;
        let obj = root
            .as_object()
            .ok_or_else(|| parse_err("top level must be an object".into()))?;
        for key in obj.keys() {
            if !matches!(
                key.as_str(),
                "format" | "n" | "k" | "family" | "planted" | "noise" | "noised_count" | "seed"
                    | "constraints"
            ) {
                return Err(parse_err(format!("unknown key {key:?}")));
            }
        }
        match obj.get("format").and_then(Value::as_str) {
            Some(FORMAT_TAG) => {}
            Some(other) => return Err(parse_err(format!("unsupported format {other:?}"))),
            None => return Err(parse_err("missing format header".into())),
        }
        let n = get_usize(obj, "n")?;
        let k = get_usize(obj, "k")?;
        if !(2..=MAX_ARITY).contains(&k) {
            return Err(Error::InvalidArity { k });
        }
        if n < k {
            return Err(Error::DomainTooSmall { n, k });
        }
        let family = Family::parse(
            obj.get("family")
                .and_then(Value::as_str)
                .ok_or_else(|| parse_err("missing family".into()))?,
        )?;
        check_family_arity(family, k)?;

        let planted = match obj.get("planted") {
            None => None,
            Some(v) => {
                let ids = id_array(v, "planted")?;
                let r = Ranking::from_order(ids).map_err(|_| Error::NotARanking)?;
                if !r.is_ranking_of_range(n) {
                    return Err(Error::NotARanking);
                }
                Some(r)
            }
        };
        let noise = match obj.get("noise") {
            None => None,
            Some(v) => {
                let o = v
                    .as_object()
                    .ok_or_else(|| parse_err("noise must be {num, den}".into()))?;
                let num = get_usize(o, "num")? as i64;
                let den = get_usize(o, "den")? as i64;
                if den == 0 || den > 1_000_000 {
                    return Err(parse_err("noise denominator out of range".into()));
                }
                let rho = Pos::new(num, den);
                check_noise(rho)?;
                Some(rho)
            }
        };
        let noised_count = match obj.get("noised_count") {
            None => None,
            Some(v) => Some(
                v.as_u64()
                    .ok_or_else(|| parse_err("noised_count must be a nonnegative integer".into()))?,
            ),
        };
        let seed = match obj.get("seed") {
            None => None,
            Some(v) => Some(
                v.as_u64()
                    .ok_or_else(|| parse_err("seed must be a nonnegative integer".into()))?,
            ),
        };

        let entries = obj
            .get("constraints")
            .and_then(Value::as_array)
            .ok_or_else(|| parse_err("missing constraints array".into()))?;
        let expected = binomial(n, k);
        if entries.len() as u64 != expected {
            return Err(Error::CountMismatch {
                expected,
                actual: entries.len() as u64,
            });
        }
        let count = expected as usize;
        let fact = factorial(k) as usize;
        let mut payloads: Vec<Option<Vec<u64>>> = vec![None; count];
        for entry in entries {
            let eo = entry
                .as_object()
                .ok_or_else(|| parse_err("constraint entries must be objects".into()))?;
            for key in eo.keys() {
                if !matches!(key.as_str(), "s" | "d") {
                    return Err(parse_err(format!("unknown constraint key {key:?}")));
                }
            }
            let s = id_array(
                eo.get("s")
                    .ok_or_else(|| parse_err("constraint missing \"s\"".into()))?,
                "s",
            )?;
            if s.len() != k {
                return Err(parse_err(format!("subset {s:?} must have {k} vertices")));
            }
            for w in s.windows(2) {
                if w[0] >= w[1] {
                    return Err(parse_err(format!("subset {s:?} must be sorted ascending")));
                }
            }
            if let Some(&v) = s.iter().find(|&&v| v >= n) {
                return Err(Error::VertexOutOfRange { v, n });
            }
            let rank = colex_rank(&s);
            if payloads[rank].is_some() {
                return Err(Error::DuplicateSubset { subset: s });
            }
            let d = eo
                .get("d")
                .ok_or_else(|| parse_err("constraint missing \"d\"".into()))?;
            let tokens: Vec<u64> = match family {
                Family::Betweenness3 => vec![d
                    .as_u64()
                    .ok_or_else(|| parse_err("designated vertex must be an integer".into()))?],
                Family::KFast => {
                    let ids = id_array(d, "d")?;
                    if ids.len() != k {
                        return Err(parse_err("satisfying order must list k vertices".into()));
                    }
                    ids.iter().map(|&v| v as u64).collect()
                }
                Family::KBetweenness => {
                    let ids = id_array(d, "d")?;
                    if ids.len() != 2 {
                        return Err(parse_err("endpoint payload must list 2 vertices".into()));
                    }
                    ids.iter().map(|&v| v as u64).collect()
                }
                Family::ExplicitTable => {
                    let arr = d
                        .as_array()
                        .ok_or_else(|| parse_err("table payload must be an array".into()))?;
                    if arr.len() != fact {
                        return Err(parse_err(format!("table payload must have {fact} entries")));
                    }
                    let mut t = Vec::with_capacity(fact);
                    for x in arr {
                        match x.as_u64() {
                            Some(b @ (0 | 1)) => t.push(b),
                            _ => return Err(parse_err("table entries must be 0 or 1".into())),
                        }
                    }
                    t
                }
            };
            payloads[rank] = Some(tokens);
        }

        // Count + dedup above guarantee every colex rank is filled.
        let system = match family {
            Family::Betweenness3 => ConstraintSystem::betweenness3(n, |s| {
                payloads[colex_rank(s)].as_ref().unwrap()[0] as usize
            })?,
            Family::KFast => ConstraintSystem::k_fast(n, k, |s| {
                payloads[colex_rank(s)]
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|&v| v as usize)
                    .collect()
            })?,
            Family::KBetweenness => ConstraintSystem::k_betweenness(n, k, |s| {
                let p = payloads[colex_rank(s)].as_ref().unwrap();
                (p[0] as usize, p[1] as usize)
            })?,
            Family::ExplicitTable => ConstraintSystem::explicit_table(n, k, |s| {
                payloads[colex_rank(s)]
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|&v| v as u8)
                    .collect()
            })?,
        };
        Ok(InstanceFile {
            system,
            planted,
            noise,
            noised_count,
            seed,
        })
    }
}

fn push_ids(out: &mut String, ids: impl Iterator<Item = u64>) {
    let mut first = true;
    for v in ids {
        if !first {
            out.push(',');
        }
        first = false;
        out.push_str(&v.to_string());
    }
}

fn get_usize(obj: &serde_json::Map<String, Value>, key: &str) -> Result<usize> {
    obj.get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| Error::Parse {
            message: format!("missing or non-integer {key:?}"),
        })
}

fn id_array(v: &Value, what: &str) -> Result<Vec<usize>> {
    let arr = v.as_array().ok_or_else(|| Error::Parse {
        message: format!("{what} must be an array of vertex ids"),
    })?;
    let mut out = Vec::with_capacity(arr.len());
    for x in arr {
        out.push(x.as_u64().ok_or_else(|| Error::Parse {
            message: format!("{what} entries must be nonnegative integers"),
        })? as usize);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_zero_noise_costs_zero() {
        for (family, k) in [
            (Family::Betweenness3, 3),
            (Family::KFast, 2),
            (Family::KFast, 3),
            (Family::KFast, 4),
            (Family::KBetweenness, 4),
        ] {
            let p = gen_planted(family, 7, k, pos_int(0), 11).unwrap();
            assert_eq!(p.noised_count, 0);
            assert_eq!(p.system.cost_ranking(&p.planted).unwrap(), 0, "{family} k={k}");
        }
    }

    #[test]
    fn full_noise_betweenness_violates_everything_at_planted() {
        let p = gen_planted(Family::Betweenness3, 7, 3, pos_int(1), 3).unwrap();
        assert_eq!(p.noised_count, binomial(7, 3));
        assert_eq!(p.system.cost_ranking(&p.planted).unwrap(), binomial(7, 3));
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let a = gen_planted(Family::Betweenness3, 8, 3, Pos::new(1, 20), 42).unwrap();
        let b = gen_planted(Family::Betweenness3, 8, 3, Pos::new(1, 20), 42).unwrap();
        assert_eq!(a, b);
        let c = gen_planted(Family::Betweenness3, 8, 3, Pos::new(1, 20), 43).unwrap();
        assert_ne!(a, c);
        assert_eq!(
            gen_uniform(Family::ExplicitTable, 5, 3, 9).unwrap(),
            gen_uniform(Family::ExplicitTable, 5, 3, 9).unwrap()
        );
    }

    #[test]
    fn family_arity_validation() {
        assert!(gen_planted(Family::Betweenness3, 6, 2, pos_int(0), 0).is_err());
        assert!(gen_planted(Family::KBetweenness, 6, 3, pos_int(0), 0).is_err());
        assert!(gen_planted(Family::ExplicitTable, 6, 3, pos_int(0), 0).is_err());
        assert!(gen_planted(Family::Betweenness3, 6, 3, pos_int(2), 0).is_err());
    }

    #[test]
    fn canonical_serialization_fixed_example() {
        // Single-subset betweenness instance pinned byte for byte.
        let system = ConstraintSystem::betweenness3(3, |s| s[1]).unwrap();
        let file = InstanceFile {
            system,
            planted: Some(Ranking::from_order(vec![2, 0, 1]).unwrap()),
            noise: Some(Pos::new(1, 20)),
            noised_count: Some(0),
            seed: Some(7),
        };
        let expect = concat!(
            "{\"format\":\"rankcsp-v1\",\"n\":3,\"k\":3,\"family\":\"betweenness\",",
            "\"planted\":[2,0,1],\"noise\":{\"num\":1,\"den\":20},\"noised_count\":0,",
            "\"seed\":7,\"constraints\":[\n",
            "{\"s\":[0,1,2],\"d\":1}\n",
            "]}\n"
        );
        assert_eq!(file.to_json(), expect);
        let back = InstanceFile::from_json(expect).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_json(), expect);
    }

    #[test]
    fn roundtrip_all_families() {
        for (family, k) in [
            (Family::Betweenness3, 3),
            (Family::KFast, 2),
            (Family::KFast, 4),
            (Family::KBetweenness, 4),
            (Family::ExplicitTable, 3),
        ] {
            let sys = gen_uniform(family, 6, k, 5).unwrap();
            let file = InstanceFile::from(sys);
            let text = file.to_json();
            let back = InstanceFile::from_json(&text).unwrap();
            assert_eq!(back, file, "{family}");
            assert_eq!(back.to_json(), text, "{family} canonical");
        }
    }

    #[test]
    fn parse_rejects_malformed_input() {
        let good = InstanceFile::from(gen_uniform(Family::Betweenness3, 4, 3, 0).unwrap()).to_json();
        let lines: Vec<&str> = good.lines().collect();
        // lines[1..=4] are the constraint entries; the first three end with a
        // comma, so deleting or duplicating among them keeps the JSON valid.
        let mut missing_lines = lines.clone();
        missing_lines.remove(1);
        assert!(matches!(
            InstanceFile::from_json(&missing_lines.join("\n")),
            Err(Error::CountMismatch { .. })
        ));
        let mut dup_lines = lines.clone();
        dup_lines[1] = dup_lines[2];
        assert!(matches!(
            InstanceFile::from_json(&dup_lines.join("\n")),
            Err(Error::DuplicateSubset { .. })
        ));
        // Wrong header.
        assert!(matches!(
            InstanceFile::from_json(&good.replacen("rankcsp-v1", "rankcsp-v9", 1)),
            Err(Error::Parse { .. })
        ));
        // Payload outside its subset and float rejection, on a pinned
        // one-constraint instance.
        let one = InstanceFile::from(ConstraintSystem::betweenness3(3, |s| s[1]).unwrap()).to_json();
        assert!(one.contains("{\"s\":[0,1,2],\"d\":1}"));
        assert!(matches!(
            InstanceFile::from_json(&one.replacen("\"d\":1}", "\"d\":3}", 1)),
            Err(Error::PayloadOutOfSubset { .. })
        ));
        assert!(matches!(
            InstanceFile::from_json(&one.replacen("\"n\":3", "\"n\":3.0", 1)),
            Err(Error::Parse { .. })
        ));
    }
}
