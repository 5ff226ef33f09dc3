//! Every library operation is reachable from some subcommand, and every
//! subcommand's help renders.

mod common;

use std::collections::BTreeSet;

use common::Dsf;

/// (library operation, subcommand that exercises it)
const COVERAGE: &[(&str, &str)] = &[
    ("config::SecurityConfig::load", "store get"),
    ("envelope::SecurityEnvelope::encode", "store put"),
    ("provider::cbc_encrypt", "store put"),
    ("provider::cbc_decrypt", "store get"),
    ("provider::hmac_tag", "auth tag"),
    ("provider::prf_bits", "search build"),
    ("confidentiality::index_build", "search build"),
    ("confidentiality::index_search", "search query"),
    ("confidentiality::generalize", "anon generalize"),
    ("confidentiality::k_anonymity_check", "anon check"),
    ("confidentiality::minimal_generalization", "anon minimize"),
    ("confidentiality::discernibility_metric", "anon dm"),
    ("confidentiality::l_diversity_check", "anon ldiv"),
    ("integrity::stamp", "store put"),
    ("integrity::verify_stamp", "store get"),
    ("integrity::wm_insert", "wm insert"),
    ("integrity::wm_detect", "wm detect"),
    ("integrity::detect_threshold", "wm detect"),
    ("integrity::wong_embed", "img embed"),
    ("integrity::wong_verify", "img verify"),
    ("authentication::auth_tag", "auth tag"),
    ("authentication::auth_verify", "auth verify"),
    ("authentication::merkle_build", "merkle build"),
    ("authentication::merkle_prove", "merkle prove"),
    ("authentication::merkle_verify", "merkle verify"),
    ("authentication::merkle_update", "merkle update"),
    ("authentication::agg_build", "agg query"),
    ("authentication::agg_query", "agg query"),
    ("authentication::agg_verify", "agg verify"),
    ("sqlrand::keygen", "sqlrand keygen"),
    ("sqlrand::randomize", "sqlrand randomize"),
    ("sqlrand::derandomize", "sqlrand derandomize"),
    ("sqlrand::key_update_compose", "sqlrand keyupdate"),
    ("sqlrand::key_update_apply", "sqlrand proxy"),
    ("sqlrand::run_proxy", "sqlrand proxy"),
    ("storage::SecureStore::put", "store put"),
    ("storage::SecureStore::get", "store get"),
    ("storage::SecureStore::ingest_csv", "store ingest"),
    ("storage::SecureStore::export_csv", "store export"),
];

/// Subcommands listed under `Commands:` in a help page.
fn listed(help: &str) -> Vec<String> {
    help.lines()
        .skip_while(|l| !l.starts_with("Commands:"))
        .skip(1)
        .take_while(|l| l.starts_with("  "))
        .filter_map(|l| l.split_whitespace().next())
        .filter(|c| *c != "help")
        .map(str::to_string)
        .collect()
}

#[test]
fn every_subcommand_is_mapped_and_documented() {
    let dsf = Dsf::new();
    let top = dsf.run(&["--help"]).ok();
    let mut leaves = BTreeSet::new();
    for group in listed(&top.stdout) {
        let help = dsf.run(&[&group, "--help"]).ok();
        let subs = listed(&help.stdout);
        assert!(!subs.is_empty(), "`{group}` lists no subcommands");
        for sub in subs {
            dsf.run(&[&group, &sub, "--help"]).ok();
            leaves.insert(format!("{group} {sub}"));
        }
    }
    let mapped: BTreeSet<String> = COVERAGE.iter().map(|(_, c)| c.to_string()).collect();
    for c in &mapped {
        assert!(leaves.contains(c), "coverage table names `{c}`, which does not exist");
    }
    let helpers = ["keys gen", "keys public", "sqlrand query"];
    for leaf in &leaves {
        assert!(mapped.contains(leaf) || helpers.contains(&leaf.as_str()), "`{leaf}` exercises no listed operation");
    }
}

#[test]
fn operations_are_listed_once() {
    let ops: BTreeSet<&str> = COVERAGE.iter().map(|(op, _)| *op).collect();
    assert_eq!(ops.len(), COVERAGE.len());
}
