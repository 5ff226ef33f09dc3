//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed or ran over its time budget.
//!
//! Expected values are computed here from first principles (binomial
//! moments, exact tail sums, brute-force lattice scans, linear scans) and do
//! not call into the library code under test.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use dsf_core::authentication::{
    agg_build, agg_query, agg_verify, auth_tag, merkle_build, merkle_prove, merkle_update, merkle_verify,
    AggAnswer, Aggregate, AggregateProof, AuthError, AuthScheme, MembershipProof, ProofNode,
};
use dsf_core::confidentiality::{
    binary_search, canonical_word, discernibility_metric, equivalence_classes, index_build, index_search,
    naive_search, AnonError, GeneralizationHierarchy, SearchKeys, SearchParams,
};
use dsf_core::config::{SecurityConfig, WatermarkSettings};
use dsf_core::integrity::{
    decode_pgm, detect_threshold, encode_pgm, wm_detect, wm_insert, wong_embed, wong_verify, Bitmap,
    FixedClock, ImageBlockWatermark, WatermarkParams, WongMode,
};
use dsf_core::keys::{KeyKind, KeyMaterial, KeyStore};
use dsf_core::model::{Column, Record, Schema, Table, Value, ValueKind};
use dsf_core::provider::{seeded_rng, AlgorithmProvider, Bits, Classic, HashChoice, Modern, Rng};
use dsf_core::sqlrand::{
    derandomize, key_update_apply, key_update_compose, keygen, randomize, spawn_proxy, suffix_from_key,
    KeywordSet, Proxy, ProxyClient, ProxyMode, RandomizationKey, RejectReason, Request, Response, Upstream,
};
use dsf_core::storage::{ErrorClass, SecureStore};
use image::GrayImage;
use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore};

type Outcome = Result<String, String>;

/// Name, time budget in seconds, check.
type Criterion = (&'static str, u64, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn binomial_band(n: f64, p: f64) -> (f64, f64) {
    let mean = n * p;
    (mean, 3.0 * (n * p * (1.0 - p)).sqrt())
}

// 1 -------------------------------------------------------------------------

fn search_keys(seed: u64) -> SearchKeys {
    let mut rng = seeded_rng(seed);
    let mut k = |id: &str| KeyMaterial::generate(&Classic, id, KeyKind::Prf, &mut rng);
    SearchKeys::new(k("w"), k("l"), k("s")).unwrap()
}

fn criterion_search() -> Outcome {
    const CELLS: usize = 10_000;
    let keys = search_keys(1);
    let words: Vec<Bits> = (0..CELLS).map(|i| canonical_word(&format!("w{i}"), 64)).collect();
    let absent = canonical_word("absent", 64);
    let mut report = Vec::new();
    for m in [2usize, 4, 8] {
        let params = SearchParams::new(64, m).unwrap();
        let idx = index_build(&Classic, params, &keys, &words).unwrap();
        let fp = index_search(&Classic, &idx, &keys, &absent).unwrap().len() as f64;
        let (mean, band) = binomial_band(CELLS as f64, 0.5f64.powi(m as i32));
        ensure!((fp - mean).abs() <= band, "m={m}: {fp} false positives, expected {mean}±{band:.1}");
        report.push(format!("m={m}:{fp}"));
    }

    let vocab: Vec<String> = (0..40).map(|i| format!("v{i}")).collect();
    let mut rng = seeded_rng(2);
    let params = SearchParams::new(32, 8).unwrap();
    for set in 0..1000 {
        let len = rng.gen_range(1..=12);
        let ws: Vec<&String> = (0..len).map(|_| vocab.choose(&mut rng).unwrap()).collect();
        let bits: Vec<Bits> = ws.iter().map(|w| canonical_word(w, 32)).collect();
        let keys = search_keys(1000 + set);
        let idx = index_build(&Classic, params, &keys, &bits).unwrap();
        for w in ws.iter().collect::<HashSet<_>>() {
            let hits: HashSet<usize> = index_search(&Classic, &idx, &keys, &canonical_word(w, 32))
                .unwrap()
                .into_iter()
                .collect();
            for (i, _) in ws.iter().enumerate().filter(|(_, x)| x == &w) {
                ensure!(hits.contains(&i), "false negative: set {set} word {w} position {i}");
            }
        }
    }
    Ok(format!("{} fn=0/1000 sets", report.join(" ")))
}

// 2 -------------------------------------------------------------------------

/// Smallest tau with P[Binomial(n, 1/2) >= tau] < alpha, in exact integers.
fn exact_tau(n: u32, alpha_num: u128, alpha_den: u128) -> u64 {
    let mut c = vec![1u128; n as usize + 1];
    for k in 1..=n as usize {
        c[k] = c[k - 1] * (n as u128 + 1 - k as u128) / k as u128;
    }
    let total = 1u128 << n;
    let mut tail = 0u128;
    let mut tau = n as u64 + 1;
    for t in (0..=n).rev() {
        tail += c[t as usize];
        if tail * alpha_den < alpha_num * total {
            tau = t as u64;
        } else {
            break;
        }
    }
    tau
}

fn wm_table(rows: u64, rng: &mut Rng) -> Table {
    let schema = Schema::new(vec![
        Column::new("a", ValueKind::Int),
        Column::new("b", ValueKind::Int),
        Column::new("note", ValueKind::Str),
    ])
    .unwrap();
    let recs = (0..rows)
        .map(|_| {
            Record::new(
                rng.next_u64() >> 1,
                vec![
                    Value::Int(rng.gen_range(-1_000_000..1_000_000)),
                    Value::Int(rng.gen_range(-1_000_000..1_000_000)),
                    Value::Str(String::new()),
                ],
            )
        })
        .collect::<Vec<_>>();
    let mut seen = HashSet::new();
    let recs = recs.into_iter().filter(|r| seen.insert(r.id)).collect();
    Table::with_records("t", schema, recs).unwrap()
}

fn criterion_watermark() -> Outcome {
    let tau = exact_tau(100, 1, 100);
    ensure!(tau == 63, "exact tail oracle gives tau={tau}");
    ensure!(detect_threshold(100, 0.01) == tau, "detect_threshold(100, 0.01) != {tau}");

    let settings = WatermarkSettings { nu: 2, xi: 2, gamma: 10, alpha: 0.01 };
    let params = WatermarkParams::new(settings, b"owner secret".to_vec()).unwrap();
    let mut rng = seeded_rng(3);
    let t = wm_table(10_000, &mut rng);
    ensure!(t.len() == 10_000, "fixture has {} rows", t.len());
    let (marked, omega) = wm_insert(&Classic, &t, &params).unwrap();
    let (mean, band) = binomial_band(10_000.0, 0.1);
    ensure!((omega as f64 - mean).abs() <= band, "omega={omega}, expected {mean}±{band}");
    let rep = wm_detect(&Classic, &marked, &params).unwrap();
    ensure!(rep.totalcount == omega && rep.matchcount == omega && rep.detected, "self-detect: {rep:?}");

    let mut false_detections = 0;
    let mut min_omega = u64::MAX;
    for trial in 0..1000u64 {
        let table = wm_table(1000, &mut rng);
        let key = trial.to_be_bytes().to_vec();
        let p = WatermarkParams::new(settings, key).unwrap();
        let r = wm_detect(&Classic, &table, &p).unwrap();
        min_omega = min_omega.min(r.totalcount);
        if r.detected {
            false_detections += 1;
        }
    }
    ensure!(min_omega >= 50, "a Monte Carlo table had omega={min_omega} < 50");
    let rate = false_detections as f64 / 1000.0;
    ensure!(rate <= 0.01, "false detection rate {rate} > alpha");
    Ok(format!("tau(100,0.01)=63 omega={omega} self-detect ok false-detect={false_detections}/1000"))
}

// 3 -------------------------------------------------------------------------

const ZIPS: [&str; 6] = ["47677", "47678", "47602", "47605", "47901", "47906"];
const AGES: [&str; 6] = ["21", "23", "27", "29", "34", "38"];

fn zip_level(z: &str, h: usize) -> String {
    match h {
        0 => z.to_string(),
        1 => format!("{}*", &z[..4]),
        _ => "*".into(),
    }
}

fn age_level(a: &str, h: usize) -> String {
    let v: u32 = a.parse().unwrap();
    match h {
        0 => a.to_string(),
        1 => if v < 30 { "20-29" } else { "30-39" }.into(),
        _ => "*".into(),
    }
}

fn hierarchies() -> Vec<GeneralizationHierarchy> {
    let zip_rows: Vec<Vec<String>> = ZIPS.iter().map(|z| (0..3).map(|h| zip_level(z, h)).collect()).collect();
    let age_rows: Vec<Vec<String>> = AGES.iter().map(|a| (0..3).map(|h| age_level(a, h)).collect()).collect();
    vec![
        GeneralizationHierarchy::from_rows("zip", zip_rows).unwrap(),
        GeneralizationHierarchy::from_rows("age", age_rows).unwrap(),
    ]
}

fn hand_dm(sizes: &[usize], k: usize, total: usize) -> u64 {
    sizes
        .iter()
        .map(|&s| if s >= k { s * s } else { total * s } as u64)
        .sum()
}

/// Brute force over all nine vectors: lowest total height, then
/// lexicographically smallest, with its DM.
fn lattice_oracle(rows: &[(&str, &str)], k: usize, max_suppress: usize) -> Option<(Vec<usize>, u64)> {
    let mut best: Option<(usize, Vec<usize>, u64)> = None;
    for hz in 0..=2 {
        for ha in 0..=2 {
            let mut classes: HashMap<(String, String), usize> = HashMap::new();
            for (z, a) in rows {
                *classes.entry((zip_level(z, hz), age_level(a, ha))).or_default() += 1;
            }
            let sizes: Vec<usize> = classes.values().copied().collect();
            let suppressed: usize = sizes.iter().filter(|&&s| s < k).sum();
            if suppressed > max_suppress {
                continue;
            }
            let cand = (hz + ha, vec![hz, ha], hand_dm(&sizes, k, rows.len()));
            if best.as_ref().is_none_or(|b| (cand.0, &cand.1) < (b.0, &b.1)) {
                best = Some(cand);
            }
        }
    }
    best.map(|(_, v, dm)| (v, dm))
}

fn anon_table(rows: &[(&str, &str)]) -> Table {
    let schema = Schema::new(vec![
        Column::new("zip", ValueKind::Str),
        Column::new("age", ValueKind::Str),
        Column::new("disease", ValueKind::Str),
    ])
    .unwrap();
    let recs = rows
        .iter()
        .enumerate()
        .map(|(i, (z, a))| Record::new(i as u64, vec![Value::from(*z), Value::from(*a), Value::from("flu")]))
        .collect();
    Table::with_records("p", schema, recs).unwrap()
}

fn criterion_anonymization() -> Outcome {
    let hs = hierarchies();
    let mut rng = seeded_rng(4);
    let mut fixtures = 0;
    let mut solved = 0;
    for n in 6..=12 {
        for _ in 0..30 {
            let rows: Vec<(&str, &str)> =
                (0..n).map(|_| (*ZIPS.choose(&mut rng).unwrap(), *AGES.choose(&mut rng).unwrap())).collect();
            let table = anon_table(&rows);
            for k in [2, 3] {
                for max_suppress in [0, 1, 2] {
                    fixtures += 1;
                    let oracle = lattice_oracle(&rows, k, max_suppress);
                    let naive = naive_search(&table, &hs, k, max_suppress);
                    let binary = binary_search(&table, &hs, k, max_suppress);
                    match (oracle, naive, binary) {
                        (None, Err(AnonError::NoSolution), Err(AnonError::NoSolution)) => {}
                        (Some((v, dm)), Ok(a), Ok(b)) => {
                            let h: usize = v.iter().sum();
                            ensure!(
                                a.vector.total_height() == h && b.vector.total_height() == h,
                                "n={n} k={k} s={max_suppress}: heights naive={} binary={} oracle={h}",
                                a.vector.total_height(),
                                b.vector.total_height()
                            );
                            ensure!(a.vector.0 == v && b.vector.0 == v, "tie-break differs from oracle {v:?}");
                            ensure!(a.dm_cost == dm && b.dm_cost == dm, "DM {} vs oracle {dm}", a.dm_cost);
                            solved += 1;
                        }
                        (o, a, b) => {
                            return Err(format!("n={n} k={k} s={max_suppress}: oracle {o:?} naive {a:?} binary {b:?}"))
                        }
                    }
                }
            }
        }
    }

    ensure!(discernibility_metric(&[3, 2], 2, 5) == 13, "DM{{3,2}} != 13");
    ensure!(discernibility_metric(&[3, 2, 1], 2, 6) == 19, "DM{{3,2,1}} != 19");
    let t13 = anon_table(&[("47677", "21"); 3].iter().chain(&[("47602", "34"); 2]).copied().collect::<Vec<_>>());
    let t19 = anon_table(
        &[("47677", "21"); 3]
            .iter()
            .chain(&[("47602", "34"); 2])
            .chain(&[("47901", "38")])
            .copied()
            .collect::<Vec<_>>(),
    );
    for (t, want) in [(t13, 13), (t19, 19)] {
        let sizes: Vec<usize> = equivalence_classes(&t, &["zip", "age"]).unwrap().iter().map(|c| c.size()).collect();
        let dm = discernibility_metric(&sizes, 2, t.len());
        ensure!(dm == want && hand_dm(&sizes, 2, t.len()) == want, "fixture DM {dm}, want {want}");
    }
    Ok(format!("{fixtures} fixtures ({solved} solvable) agree; DM fixtures 13, 19"))
}

// 4 -------------------------------------------------------------------------

fn owner(p: &dyn AlgorithmProvider, seed: u64) -> (KeyMaterial, KeyMaterial) {
    let sk = KeyMaterial::generate(p, "owner", KeyKind::SignaturePrivate, &mut seeded_rng(seed));
    let pk = sk.public_half(p).unwrap();
    (sk, pk)
}

fn entries(n: usize, rng: &mut Rng) -> Vec<(u64, Vec<u8>)> {
    (0..n)
        .map(|i| {
            let mut v = vec![0u8; rng.gen_range(1..24)];
            rng.fill_bytes(&mut v);
            (3 * i as u64 + 1, v)
        })
        .collect()
}

fn ceil_log2(n: usize) -> usize {
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

fn criterion_merkle() -> Outcome {
    let p = &Classic;
    let (sk, pk) = owner(p, 5);
    let mut rng = seeded_rng(6);

    for n in 2..=1024 {
        let tree = merkle_build(p, entries(n, &mut rng), &sk).unwrap();
        for i in [0, n / 2, n - 1] {
            let len = merkle_prove(&tree, i).unwrap().siblings.len();
            ensure!(len == ceil_log2(n), "n={n} index {i}: proof length {len}");
        }
    }

    let es = entries(16, &mut rng);
    let tree = merkle_build(p, es.clone(), &sk).unwrap();
    let root = tree.signed_root();
    for (i, (k, v)) in es.iter().enumerate() {
        let proof = merkle_prove(&tree, i).unwrap();
        ensure!(merkle_verify(p, &proof, (*k, v), &root, &pk), "n=16 index {i} did not verify");
        for (j, (k2, v2)) in es.iter().enumerate() {
            if j != i {
                ensure!(!merkle_verify(p, &proof, (*k2, v2), &root, &pk), "proof {i} accepted entry {j}");
            }
        }
    }

    // A claim is true when the padded leaf at the claimed index holds the entry.
    let mut false_accepts = 0;
    for case in 0..1000 {
        let n = rng.gen_range(2..=64);
        let es = entries(n, &mut rng);
        let tree = merkle_build(p, es.clone(), &sk).unwrap();
        let i = rng.gen_range(0..n);
        let mut entry = es[i].clone();
        let mut proof_bytes = merkle_prove(&tree, i).unwrap().to_bytes();
        let mut root = tree.signed_root();
        let flip = |buf: &mut [u8], rng: &mut Rng| {
            let b = rng.gen_range(0..buf.len() * 8);
            buf[b / 8] ^= 0x80 >> (b % 8);
        };
        match case % 5 {
            0 => entry.0 ^= 1 << rng.gen_range(0..64),
            1 => flip(&mut entry.1, &mut rng),
            2 => flip(&mut proof_bytes, &mut rng),
            3 => flip(&mut root.root, &mut rng),
            _ => flip(&mut root.signature, &mut rng),
        }
        let Ok(proof) = MembershipProof::from_bytes(&proof_bytes) else {
            continue;
        };
        if merkle_verify(p, &proof, (entry.0, &entry.1), &root, &pk) {
            let padded = 1usize << ceil_log2(n);
            let idx = proof.index as usize;
            let truthful = root == tree.signed_root()
                && idx < padded
                && proof.siblings.len() == ceil_log2(n)
                && es[idx.min(n - 1)] == entry;
            if !truthful {
                false_accepts += 1;
            }
        }
    }
    ensure!(false_accepts == 0, "{false_accepts} false accepts in the mutation suite");

    let mut es = entries(50, &mut rng);
    let mut tree = merkle_build(p, es.clone(), &sk).unwrap();
    for _ in 0..100 {
        let i = rng.gen_range(0..es.len());
        let mut v = vec![0u8; 8];
        rng.fill_bytes(&mut v);
        tree = merkle_update(p, &tree, i, v.clone(), &sk).unwrap();
        es[i].1 = v;
        let rebuilt = merkle_build(p, es.clone(), &sk).unwrap();
        ensure!(tree.root() == rebuilt.root(), "update of index {i} diverged from rebuild");
    }
    Ok("lengths n=2..1024, n=16 sweep, 1000 mutations 0 false accepts, 100 updates".into())
}

// 5 -------------------------------------------------------------------------

fn scan(es: &[(u64, i64)], a: u64, b: u64, agg: Aggregate) -> Result<AggAnswer, AuthError> {
    let vals: Vec<i64> = es.iter().filter(|e| e.0 >= a && e.0 <= b).map(|e| e.1).collect();
    let sum: i128 = vals.iter().map(|&v| v as i128).sum();
    Ok(match agg {
        Aggregate::Sum => AggAnswer::Sum(sum),
        Aggregate::Count => AggAnswer::Count(vals.len() as u64),
        Aggregate::Avg => AggAnswer::Avg { sum, count: vals.len() as u64 },
        Aggregate::Min => AggAnswer::Min(*vals.iter().min().ok_or(AuthError::EmptyRange)?),
        Aggregate::Max => AggAnswer::Max(*vals.iter().max().ok_or(AuthError::EmptyRange)?),
        Aggregate::Median => unreachable!(),
    })
}

fn implied(proof: &AggregateProof, agg: Aggregate) -> Option<AggAnswer> {
    let mut sum = 0i128;
    let mut count = 0u64;
    let mut min = i64::MAX;
    let mut max = i64::MIN;
    for it in &proof.items {
        if let ProofNode::Covered(s) = &it.node {
            sum += s.sum;
            count += s.count;
            min = min.min(s.min);
            max = max.max(s.max);
        }
    }
    Some(match agg {
        Aggregate::Sum => AggAnswer::Sum(sum),
        Aggregate::Count => AggAnswer::Count(count),
        Aggregate::Avg => AggAnswer::Avg { sum, count },
        Aggregate::Min if count > 0 => AggAnswer::Min(min),
        Aggregate::Max if count > 0 => AggAnswer::Max(max),
        _ => return None,
    })
}

fn forge_answer(a: AggAnswer, rng: &mut Rng) -> AggAnswer {
    let d = if rng.gen() { 1 } else { -1 };
    match a {
        AggAnswer::Sum(s) => AggAnswer::Sum(s + d as i128),
        AggAnswer::Count(c) => AggAnswer::Count(c.wrapping_add_signed(d)),
        AggAnswer::Avg { sum, count } if rng.gen() => AggAnswer::Avg { sum: sum + d as i128, count },
        AggAnswer::Avg { sum, count } => AggAnswer::Avg { sum, count: count + 1 },
        AggAnswer::Min(v) => AggAnswer::Min(v.wrapping_add(d)),
        AggAnswer::Max(v) => AggAnswer::Max(v.wrapping_add(d)),
    }
}

fn forge_proof(proof: &mut AggregateProof, rng: &mut Rng) {
    let n = proof.items.len();
    let i = rng.gen_range(0..n);
    match rng.gen_range(0..6) {
        0 if n > 1 => {
            proof.items.remove(i);
        }
        1 => {
            let dup = proof.items[i].clone();
            proof.items.push(dup);
        }
        2 => proof.items[i].position ^= 1,
        3 => {
            let it = &mut proof.items[i].node;
            *it = match it.clone() {
                ProofNode::Covered(s) => ProofNode::Outside(s),
                ProofNode::Outside(s) => ProofNode::Covered(s),
                ProofNode::Boundary { key, value } => ProofNode::Boundary { key, value: value ^ 1 },
            };
        }
        _ => match &mut proof.items[i].node {
            ProofNode::Covered(s) | ProofNode::Outside(s) => match rng.gen_range(0..8) {
                0 => s.sum += 1,
                1 => s.count += 1,
                2 => s.min -= 1,
                3 => s.max += 1,
                4 => s.key_lo ^= 1,
                5 => s.key_hi ^= 1,
                6 => s.inner[0] ^= 1,
                _ => s.hash[0] ^= 1,
            },
            ProofNode::Boundary { key, value } => {
                if rng.gen() {
                    *key ^= 1
                } else {
                    *value += 1
                }
            }
        },
    }
}

fn criterion_aggregate() -> Outcome {
    let p = &Modern;
    let (sk, pk) = owner(p, 7);
    let mut rng = seeded_rng(8);
    let mut keys: Vec<u64> = (0..64).map(|_| rng.gen_range(0..10_000)).collect::<HashSet<_>>().into_iter().collect();
    while keys.len() < 64 {
        let k = rng.gen_range(0..10_000);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.sort_unstable();
    let es: Vec<(u64, i64)> = keys.iter().map(|&k| (k, rng.gen_range(-1_000_000_000..1_000_000_000))).collect();
    let tree = agg_build(p, es.clone(), &sk).unwrap();
    let root = tree.signed_root();
    let aggs = [Aggregate::Sum, Aggregate::Count, Aggregate::Avg, Aggregate::Min, Aggregate::Max];

    let mut honest = Vec::new();
    for i in 0..500 {
        let x = rng.gen_range(0..10_500);
        let y = rng.gen_range(0..10_500);
        let (a, b) = (x.min(y), x.max(y));
        let agg = aggs[i % aggs.len()];
        let want = scan(&es, a, b, agg);
        match (agg_query(&tree, a, b, agg), want) {
            (Ok((ans, proof)), Ok(w)) => {
                ensure!(ans == w, "[{a},{b}] {agg:?}: {ans:?} vs scan {w:?}");
                let proof = AggregateProof::from_bytes(&proof.to_bytes()).unwrap();
                ensure!(agg_verify(p, &proof, a, b, &ans, &root, &pk), "[{a},{b}] {agg:?}: honest proof rejected");
                honest.push((a, b, agg, ans, proof));
            }
            (Err(AuthError::EmptyRange), Err(AuthError::EmptyRange)) => {}
            (got, w) => return Err(format!("[{a},{b}] {agg:?}: {got:?} vs scan {w:?}")),
        }
    }

    for case in 0..500 {
        let (a, b, agg, ans, proof) = honest[case % honest.len()].clone();
        if case % 2 == 0 {
            let forged = forge_answer(ans, &mut rng);
            ensure!(!agg_verify(p, &proof, a, b, &forged, &root, &pk), "forged answer {forged:?} accepted");
        } else {
            let mut forged = proof.clone();
            forge_proof(&mut forged, &mut rng);
            ensure!(forged != proof, "mutation was a no-op");
            for claim in [Some(ans), implied(&forged, agg)].into_iter().flatten() {
                ensure!(!agg_verify(p, &forged, a, b, &claim, &root, &pk), "forged proof accepted for {claim:?}");
            }
        }
    }
    Ok(format!("500 ranges match scan ({} proofs verified, rest empty MIN/MAX), 500 forgeries rejected", honest.len()))
}

// 6 -------------------------------------------------------------------------

#[derive(Default)]
struct Recording {
    calls: AtomicUsize,
    seen: std::sync::Mutex<Vec<String>>,
}

impl Upstream for Recording {
    fn execute(&self, sql: &str) -> Result<Vec<u8>, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.seen.lock().unwrap().push(sql.to_string());
        Ok(b"1 row".to_vec())
    }
}

const CORPUS: [&str; 50] = [
    "select * from t",
    "SELECT a, b FROM t WHERE a = 1",
    "select name from users where id = 42 and active = 1",
    "select * from t where a = 'select' or b = 'from'",
    "select count(*) from orders group by customer having count(*) > 2",
    "select a from t order by a limit 10",
    "insert into t values (1, 'x')",
    "insert into t (a, b) values (2, 'it''s')",
    "update t set a = 1 where b is null",
    "update accounts set balance = balance - 10 where id = 7",
    "delete from t where a in (1, 2, 3)",
    "delete from sessions where expires < 100",
    "create table t (a int, b text)",
    "drop table t",
    "select a from t union select b from u",
    "select t.a, u.b from t join u on t.id = u.id",
    "select * from t where name like 'a%'",
    "select * from t where not a = 1",
    "select * from t where a is not null",
    "select \"select\" from t",
    "select a -- trailing comment with or and select\n",
    "SeLeCt MiXeD FrOm CaSe",
    "select a from t where b = 'O''Brien'",
    "select 1",
    "select a+b*c from t",
    "select * from t where x = -5 and y <> 3",
    "select * from t1, t2 where t1.k = t2.k",
    "select max(a) from t",
    "select distinct_col from t",
    "select a as selected from t",
    "select * from orders1 where total >= 100",
    "select * from t where a between 1 and 5",
    "select * from t where s = ''",
    "insert into log values ('update set where')",
    "update t set s = 'drop table t' where id = 1",
    "select * from t order by a, b",
    "select a from t group by a order by a",
    "select * from t where a = 1 or a = 2",
    "select * from \"weird table\"",
    "select tab.col from tab",
    "select * from t limit 5",
    "select * from t where b in (select b from u)",
    "select * from t where exists_flag = 1",
    "create table orders (id int, total int)",
    "select * from t where a = 1;",
    "select\ta\nfrom\tt",
    "  select   a   from   t  ",
    "select * from t where c is null or d is not null",
    "select * from t join u on t.a = u.a where t.b like '%x%'",
    "delete from t",
];

fn criterion_sqlrand() -> Outcome {
    let p = &Classic;
    let kw = KeywordSet::standard();
    let (chain, key) = keygen(p, "maplesyrup", b"deployment-7").unwrap();

    for q in CORPUS {
        let r = randomize(q, &key, &kw).map_err(|e| format!("randomize {q:?}: {e}"))?;
        let back = derandomize(&r, &key, &kw).map_err(|e| format!("derandomize {q:?}: {e}"))?;
        ensure!(back == q, "round trip changed {q:?} into {back:?}");
    }

    let up = Arc::new(Recording::default());
    let proxy = Arc::new(Proxy::new(p, ProxyMode::Dynamic, chain.digest2.clone(), up.clone()));
    let addr = spawn_proxy("127.0.0.1:0", proxy).map_err(|e| e.to_string())?;
    let mut client = ProxyClient::connect(addr).map_err(|e| e.to_string())?;

    let template = randomize(
        "select * from userTable where username = \"$uid\" and password = password('$pwd');",
        &key,
        &kw,
    )
    .unwrap();
    let attack = template.replace("$uid\"", "\" or 1=1; --").replace("$pwd", "anything");
    let resp = client.send(&Request::Query(attack)).map_err(|e| e.to_string())?;
    ensure!(resp == Response::Reject(RejectReason::BareKeyword), "injection got {resp:?}");
    ensure!(up.calls.load(Ordering::SeqCst) == 0, "upstream invoked for the injection");

    let honest = template.replace("$uid", "alice").replace("$pwd", "pw");
    let resp = client.send(&Request::Query(honest)).map_err(|e| e.to_string())?;
    ensure!(resp == Response::Ok(b"1 row".to_vec()), "honest query got {resp:?}");
    ensure!(
        up.seen.lock().unwrap()[0]
            == "select * from userTable where username = \"alice\" and password = password('pw');",
        "upstream did not receive standard SQL"
    );

    let mut rng = seeded_rng(9);
    let mut random = vec![0u8; 16];
    rng.fill_bytes(&mut random);
    let mut next = vec![0u8; chain.digest2.len()];
    rng.fill_bytes(&mut next);
    let msg = key_update_compose(p, &chain.digest2, &next, &random).unwrap();
    let resp = client.send(&Request::KeyChange(msg)).map_err(|e| e.to_string())?;
    ensure!(resp == Response::Ack(1), "key change got {resp:?}");
    let new_key = RandomizationKey { suffix: suffix_from_key(&next), epoch: 1 };
    let q = "select a from t";
    let old = client.send(&Request::Query(randomize(q, &key, &kw).unwrap())).map_err(|e| e.to_string())?;
    ensure!(matches!(old, Response::Reject(_)), "old suffix got {old:?}");
    let new = client.send(&Request::Query(randomize(q, &new_key, &kw).unwrap())).map_err(|e| e.to_string())?;
    ensure!(new == Response::Ok(b"1 row".to_vec()), "new suffix got {new:?}");

    let mut current = chain.digest2.clone();
    for round in 0..100 {
        let mut k_new = vec![0u8; current.len()];
        rng.fill_bytes(&mut k_new);
        let mut r = vec![0u8; rng.gen_range(1..40)];
        rng.fill_bytes(&mut r);
        let msg = key_update_compose(p, &current, &k_new, &r).unwrap();
        // Independent evaluation of hashA(old || r) xor new.
        let digest = p.hash_parts(HashChoice::A, &[&current, &r]);
        let delta: Vec<u8> = digest.iter().zip(&k_new).map(|(d, k)| d ^ k).collect();
        ensure!(msg == [r.as_slice(), &delta].concat(), "round {round}: message layout");
        let got = key_update_apply(p, &current, &msg).unwrap();
        ensure!(got == k_new, "round {round}: recovered key differs");
        current = got;
    }
    Ok("injection rejected upstream untouched, 50-query round trip, epoch rotation, 100 key updates".into())
}

// 7 -------------------------------------------------------------------------

fn store_keys(dir: &std::path::Path) -> KeyStore {
    let ks = KeyStore::open(dir.join("keys")).unwrap();
    let mut rng = seeded_rng(10);
    for (id, kind) in [("conf", KeyKind::Cipher), ("lock", KeyKind::Hmac), ("auth", KeyKind::Hmac), ("foreign", KeyKind::Hmac)] {
        ks.put(&KeyMaterial::generate(&Classic, id, kind, &mut rng)).unwrap();
    }
    ks
}

fn lattice_config(mask: u8) -> SecurityConfig {
    let mut cfg = SecurityConfig::all_on("conf", "lock", "auth");
    cfg.confidentiality.enabled = mask & 1 != 0;
    cfg.integrity.enabled = mask & 2 != 0;
    cfg.authentication.enabled = mask & 4 != 0;
    cfg
}

fn person(id: u64, rng: &mut Rng) -> Record {
    let mut blob = vec![0u8; rng.gen_range(0..40)];
    rng.fill_bytes(&mut blob);
    Record::new(
        id,
        vec![Value::from(format!("name-{id}-{}", rng.gen::<u32>())), Value::Int(rng.gen()), Value::Bytes(blob)],
    )
}

fn person_schema() -> Schema {
    Schema::new(vec![
        Column::new("name", ValueKind::Str),
        Column::new("salary", ValueKind::Int),
        Column::new("photo", ValueKind::Bytes),
    ])
    .unwrap()
}

fn criterion_pipeline() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let ks = store_keys(dir.path());
    let mut rng = seeded_rng(11);
    let records: Vec<Record> = (1..=20).map(|id| person(id, &mut rng)).collect();
    let mut stores = Vec::new();
    for mask in 0..8u8 {
        let mut s = SecureStore::open(dir.path().join(format!("db{mask}")), lattice_config(mask), &ks)
            .unwrap()
            .with_clock(FixedClock(1_000))
            .with_rng(seeded_rng(mask as u64));
        s.create_table("people", &person_schema()).unwrap();
        for r in &records {
            s.put("people", r).unwrap();
        }
        for r in &records {
            let got = s.get("people", r.id).map_err(|e| format!("config {mask:03b}: {e}"))?;
            ensure!(&got == r, "config {mask:03b}: record {} changed", r.id);
        }
        stores.push(s);
    }

    let foreign = ks.get(&Classic, "foreign").unwrap();
    // (store mask, fault, expected class)
    let plan: [(u8, &str, ErrorClass); 5] = [
        (0b111, "payload", ErrorClass::Authentication),
        (0b111, "retag", ErrorClass::Authentication),
        (0b011, "payload", ErrorClass::Integrity),
        (0b010, "stamp", ErrorClass::Integrity),
        (0b001, "last-block", ErrorClass::Confidentiality),
    ];
    let mut correct = 0;
    for trial in 0..100 {
        let (mask, fault, want) = plan[trial % plan.len()];
        let s = &stores[mask as usize];
        let id = rng.gen_range(1..=20u64);
        let original = s.read_envelope("people", id).unwrap();
        let mut env = original.clone();
        match fault {
            "payload" => {
                let i = rng.gen_range(0..env.payload.len());
                env.payload[i] ^= 1 << rng.gen_range(0..8);
            }
            "retag" => {
                let signed = env.signed_bytes().unwrap();
                env.auth_tag = Some(auth_tag(&Classic, &signed, &foreign, AuthScheme::Hmac).unwrap());
            }
            "stamp" => {
                let st = env.integrity_stamp.as_mut().unwrap();
                let i = rng.gen_range(0..st.mac.len());
                st.mac[i] ^= 0x01;
            }
            _ => {
                let n = env.payload.len();
                env.payload[n - 1 - rng.gen_range(0..16)] ^= 0x80;
            }
        }
        s.write_envelope("people", &env).unwrap();
        let got = s.get("people", id);
        let others_ok = records.iter().filter(|r| r.id != id).all(|r| s.get("people", r.id).ok().as_ref() == Some(r));
        s.write_envelope("people", &original).unwrap();
        match got {
            Err(e) if e.class() == want && others_ok => correct += 1,
            other => {
                return Err(format!("trial {trial} ({fault} under {mask:03b}): {other:?}, others ok={others_ok}"))
            }
        }
    }
    ensure!(correct == 100, "{correct}/100 faults classified");
    Ok("get(put(r)) == r under 8 configs, 100/100 faults classified".into())
}

// 8 -------------------------------------------------------------------------

fn criterion_wong() -> Outcome {
    let p = &Classic;
    let mut rng = seeded_rng(12);
    let mut px = vec![0u8; 64 * 64];
    rng.fill_bytes(&mut px);
    let img = GrayImage::from_raw(64, 64, px).unwrap();
    let logo_small = Bitmap { rows: 8, cols: 8, bits: (0..64).map(|i| (i / 8 + i % 8) % 3 == 0).collect() };
    let wm = ImageBlockWatermark {
        block_rows: 8,
        block_cols: 16,
        mode: WongMode::Cipher,
        key: KeyMaterial::generate(p, "img", KeyKind::Cipher, &mut rng),
        logo: logo_small.tiled(64, 64),
    };
    let marked = decode_pgm(&encode_pgm(&wong_embed(p, &img, &wm).unwrap()).unwrap()).unwrap();
    let report = wong_verify(p, &marked, &wm).unwrap();
    ensure!(report.all_ok(), "untouched image fails: {:?}", report.tampered_blocks());
    ensure!(
        img.pixels().zip(marked.pixels()).all(|(a, b)| a.0[0] & 0xFE == b.0[0] & 0xFE),
        "a non-LSB bit changed"
    );
    for block_row in 0..8u32 {
        for block_col in 0..4u32 {
            let mut t = marked.clone();
            let x = block_col * 16 + rng.gen_range(0..16);
            let y = block_row * 8 + rng.gen_range(0..8);
            t.get_pixel_mut(x, y).0[0] ^= 1 << rng.gen_range(1..8);
            let r = wong_verify(p, &t, &wm).unwrap();
            let want = vec![(block_row as usize, block_col as usize)];
            ensure!(r.tampered_blocks() == want, "pixel ({x},{y}): flagged {:?}", r.tampered_blocks());
        }
    }
    Ok("64x64 8x16 round trip, 32/32 single-pixel tampers localized, high planes intact".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("encrypted-search false positives", 30, criterion_search),
        ("watermark statistics", 60, criterion_watermark),
        ("anonymization oracle equivalence", 10, criterion_anonymization),
        ("merkle suite", 30, criterion_merkle),
        ("aggregate authentication", 30, criterion_aggregate),
        ("sqlrand behavior", 10, criterion_sqlrand),
        ("pipeline lattice", 20, criterion_pipeline),
        ("image block watermark", 5, criterion_wong),
    ];
    let mut failed = 0;
    for (n, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = start.elapsed();
        let over = took > Duration::from_secs(*budget);
        let line = match (&result, over) {
            (Ok(detail), false) => format!("PASS {detail}"),
            (Ok(detail), true) => format!("FAIL over budget ({detail})"),
            (Err(why), _) => format!("FAIL {why}"),
        };
        if result.is_err() || over {
            failed += 1;
        }
        println!("AC{} {name} [{:.2}s/{budget}s]: {line}", n + 1, took.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 8 acceptance criteria passed");
}
