//! Randomized checks of the framework permission model against naive set
//! oracles: intent delivery, API checks, and the URI grant table.

use std::collections::{BTreeSet, HashMap};

use droidflow::asf::{
    check_api_permission, check_intent_delivery, deliver_intent, PolicyDecision, UriGrantTable,
    UriMode,
};
use droidflow::model::{ComponentRef, Layer};
use proptest::prelude::*;

const PERMS: [&str; 6] = ["P0", "P1", "P2", "P3", "P4", "P5"];

fn perm_set() -> impl Strategy<Value = BTreeSet<String>> {
    prop::collection::btree_set(prop::sample::select(PERMS.to_vec()), 0..PERMS.len())
        .prop_map(|s| s.into_iter().map(str::to_string).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// Naive oracle: delivery is allowed exactly when required ⊆ granted.
    #[test]
    fn intent_delivery_is_subset_containment(granted in perm_set(), required in perm_set()) {
        let decision = check_intent_delivery(&granted, &required);
        prop_assert_eq!(decision.is_allow(), required.is_subset(&granted));
    }

    /// Monotonicity: shrinking the requirement never turns Allow into Deny.
    #[test]
    fn intent_delivery_is_monotone_in_the_requirement(
        granted in perm_set(),
        required in perm_set(),
    ) {
        if check_intent_delivery(&granted, &required).is_allow() {
            let mut shrunk = required.clone();
            while shrunk.pop_last().is_some() {
                prop_assert!(check_intent_delivery(&granted, &shrunk).is_allow());
            }
        }
    }

    /// Growing the granted set never turns Allow into Deny.
    #[test]
    fn intent_delivery_is_monotone_in_the_grant(
        granted in perm_set(),
        extra in perm_set(),
        required in perm_set(),
    ) {
        if check_intent_delivery(&granted, &required).is_allow() {
            let grown: BTreeSet<String> = granted.union(&extra).cloned().collect();
            prop_assert!(check_intent_delivery(&grown, &required).is_allow());
        }
    }

    /// The denial names the lexicographically first missing permission.
    #[test]
    fn denial_names_the_first_missing_permission(
        granted in perm_set(),
        required in perm_set(),
    ) {
        match check_intent_delivery(&granted, &required) {
            PolicyDecision::Allow => {}
            PolicyDecision::Deny { reason } => {
                let first_missing = required.difference(&granted).next().unwrap();
                prop_assert_eq!(reason, format!("missing-permission:{first_missing}"));
            }
        }
    }

    /// Fan-out equals per-recipient checks; no recipient affects another.
    #[test]
    fn fanout_is_independent_per_recipient(
        granted in perm_set(),
        requirement_sets in prop::collection::vec(perm_set(), 0..5),
    ) {
        let recipients: Vec<(ComponentRef, BTreeSet<String>)> = requirement_sets
            .iter()
            .enumerate()
            .map(|(i, req)| (ComponentRef::new(format!("R{i}"), Layer::A), req.clone()))
            .collect();
        let results = deliver_intent(&granted, &recipients);
        prop_assert_eq!(results.len(), recipients.len());
        for ((component, required), (got_component, decision)) in
            recipients.iter().zip(&results)
        {
            prop_assert_eq!(component, got_component);
            prop_assert_eq!(decision, &check_intent_delivery(&granted, required));
        }
    }

    #[test]
    fn api_check_is_membership(granted in perm_set(), required in prop::sample::select(PERMS.to_vec())) {
        let decision = check_api_permission(&granted, required);
        prop_assert_eq!(decision.is_allow(), granted.contains(required));
    }
}

/// One scripted operation against the grant table.
#[derive(Debug, Clone)]
enum GrantOp {
    Grant(u32, &'static str, UriMode),
    Revoke(u32, &'static str),
}

fn grant_op() -> impl Strategy<Value = GrantOp> {
    let uid = prop::sample::select(vec![10000u32, 10001, 10002]);
    let uri = prop::sample::select(vec!["content://a/1", "content://a/2", "content://b/9"]);
    let mode = prop::sample::select(vec![UriMode::Read, UriMode::Write, UriMode::ReadWrite]);
    prop_oneof![
        (uid.clone(), uri.clone(), mode).prop_map(|(u, r, m)| GrantOp::Grant(u, r, m)),
        (uid, uri).prop_map(|(u, r)| GrantOp::Revoke(u, r)),
    ]
}

/// Naive oracle: a (read, write) pair per key, OR-ed by grants, dropped by
/// revokes.
#[derive(Default)]
struct NaiveGrants {
    map: HashMap<(u32, &'static str), (bool, bool)>,
}

impl NaiveGrants {
    fn apply(&mut self, op: &GrantOp) {
        match *op {
            GrantOp::Grant(uid, uri, mode) => {
                let entry = self.map.entry((uid, uri)).or_insert((false, false));
                entry.0 |= matches!(mode, UriMode::Read | UriMode::ReadWrite);
                entry.1 |= matches!(mode, UriMode::Write | UriMode::ReadWrite);
            }
            GrantOp::Revoke(uid, uri) => {
                self.map.remove(&(uid, uri));
            }
        }
    }

    fn allows(&self, uid: u32, uri: &'static str, wanted: UriMode) -> bool {
        let Some(&(read, write)) = self.map.get(&(uid, uri)) else {
            return false;
        };
        match wanted {
            UriMode::Read => read,
            UriMode::Write => write,
            UriMode::ReadWrite => read && write,
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn uri_grants_agree_with_the_naive_oracle(
        ops in prop::collection::vec(grant_op(), 0..30),
    ) {
        let mut table = UriGrantTable::new();
        let mut naive = NaiveGrants::default();
        for op in &ops {
            match *op {
                GrantOp::Grant(uid, uri, mode) => table.grant(uid, uri, mode),
                GrantOp::Revoke(uid, uri) => table.revoke(uid, uri),
            }
            naive.apply(op);
        }
        for uid in [10000u32, 10001, 10002] {
            for uri in ["content://a/1", "content://a/2", "content://b/9"] {
                for wanted in [UriMode::Read, UriMode::Write, UriMode::ReadWrite] {
                    prop_assert_eq!(
                        table.check(uid, uri, wanted).is_allow(),
                        naive.allows(uid, uri, wanted),
                        "uid {} uri {} wanted {:?}", uid, uri, wanted
                    );
                }
            }
        }
    }

    /// Grant then revoke of the same key restores the original answer for
    /// that key and perturbs no other key.
    #[test]
    fn grant_revoke_round_trips(
        setup in prop::collection::vec(grant_op(), 0..15),
        uid in prop::sample::select(vec![10000u32, 10001, 10002]),
        uri in prop::sample::select(vec!["content://a/1", "content://a/2", "content://b/9"]),
        mode in prop::sample::select(vec![UriMode::Read, UriMode::Write, UriMode::ReadWrite]),
    ) {
        let mut table = UriGrantTable::new();
        for op in &setup {
            match *op {
                GrantOp::Grant(u, r, m) => table.grant(u, r, m),
                GrantOp::Revoke(u, r) => table.revoke(u, r),
            }
        }
        let mut touched = table.clone();
        touched.grant(uid, uri, mode);
        prop_assert!(touched.check(uid, uri, mode).is_allow());
        touched.revoke(uid, uri);
        prop_assert!(!touched.check(uid, uri, mode).is_allow());

        // Every other key answers as it did before the grant/revoke pair.
        for u in [10000u32, 10001, 10002] {
            for r in ["content://a/1", "content://a/2", "content://b/9"] {
                if (u, r) == (uid, uri) {
                    continue;
                }
                for wanted in [UriMode::Read, UriMode::Write, UriMode::ReadWrite] {
                    prop_assert_eq!(
                        touched.check(u, r, wanted).is_allow(),
                        table.check(u, r, wanted).is_allow()
                    );
                }
            }
        }
    }
}
