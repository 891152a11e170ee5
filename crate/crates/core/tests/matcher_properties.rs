mod common;

use std::collections::BTreeSet;

use chrono::{TimeZone, Utc};
use meshkit::{Matcher, Pattern, Utterance};
use proptest::prelude::*;

fn reference() -> chrono::DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn scan_matches_the_brute_force_oracle(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let doc = common::random_library(&mut rng, 10);
        let lib = common::load(&doc);
        let m = Matcher::new(&lib, reference());
        for _ in 0..5 {
            let text = common::random_utterance(&mut rng, 20);
            let got = m.scan_library(&Utterance::user(text.clone(), 0), &BTreeSet::new());
            prop_assert_eq!(got, common::oracle_scan(&doc, &text, &BTreeSet::new()), "utterance {:?}", text);
        }
    }

    #[test]
    fn matching_is_deterministic(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let lib = common::load(&common::random_library(&mut rng, 8));
        let u = Utterance::user(common::random_utterance(&mut rng, 12), 0);
        let m = Matcher::new(&lib, reference());
        for b in lib.behaviours() {
            prop_assert_eq!(
                m.match_utterance(&u, b, &BTreeSet::new()),
                m.match_utterance(&u, b, &BTreeSet::new())
            );
        }
    }

    #[test]
    fn wider_exclusion_gives_a_subset(seed in any::<u64>(), mask in any::<u16>(), extra in any::<u16>()) {
        let mut rng = common::rng(seed);
        let lib = common::load(&common::random_library(&mut rng, 8));
        let u = Utterance::user(common::random_utterance(&mut rng, 12), 0);
        let m = Matcher::new(&lib, reference());
        let ids: Vec<String> = lib.behaviours().iter().map(|b| b.id.clone()).collect();
        let small: BTreeSet<String> = ids.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, id)| id.clone()).collect();
        let mut large = small.clone();
        large.extend(ids.iter().enumerate().filter(|(i, _)| extra >> i & 1 == 1).map(|(_, id)| id.clone()));
        let wide = m.scan_library(&u, &large);
        let narrow = m.scan_library(&u, &small);
        for r in &wide {
            prop_assert!(narrow.contains(r));
            prop_assert!(!large.contains(&r.behaviour_id));
        }
    }

    #[test]
    fn spans_slice_text_the_rule_accepts(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let lib = common::load(&common::random_library(&mut rng, 8));
        let text = common::random_utterance(&mut rng, 12);
        let m = Matcher::new(&lib, reference());
        let n = text.chars().count();
        for r in m.scan_library(&Utterance::user(text.clone(), 0), &BTreeSet::new()) {
            let b = lib.get(&r.behaviour_id).unwrap();
            for f in &r.fills {
                prop_assert!(f.span.0 < f.span.1 && f.span.1 <= n);
                prop_assert!(!f.value.is_empty());
                let slice: String = text.chars().skip(f.span.0).take(f.span.1 - f.span.0).collect();
                let rule = b.slot(&f.slot).unwrap().fill_rules.iter().find(|x| x.id == f.rule_id).unwrap();
                match &rule.pattern {
                    Pattern::Regex { regex, .. } => prop_assert!(regex.is_match(&slice), "{:?} on {:?}", regex, slice),
                    Pattern::Literal { tokens, .. } => prop_assert_eq!(&meshkit::text::token_texts(&slice), tokens),
                }
            }
        }
    }

    #[test]
    fn filled_slots_are_skipped(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let lib = common::load(&common::random_library(&mut rng, 6));
        let u = Utterance::user(common::random_utterance(&mut rng, 12), 0);
        let m = Matcher::new(&lib, reference());
        for b in lib.behaviours() {
            let all = m.match_utterance(&u, b, &BTreeSet::new());
            let done: BTreeSet<String> = all.fills.iter().take(1).map(|f| f.slot.clone()).collect();
            let rest = m.match_utterance(&u, b, &done);
            prop_assert_eq!(rest.triggered, all.triggered);
            prop_assert_eq!(&rest.fills[..], &all.fills[done.len()..]);
        }
    }
}
