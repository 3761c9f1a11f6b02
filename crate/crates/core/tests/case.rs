//! Case distinction over every state triple of a three-value domain.

use cfexplain::{classify, ConfusionContext, ExplanationCase};

#[test]
fn every_triple_gets_exactly_one_case() {
    let values = ["a", "b", "c"];
    let mut counts = [0usize; 3];
    let mut rejected = 0;
    for prev in values {
        for curr in values {
            for exp in values {
                let ctx = ConfusionContext {
                    device: "d".into(),
                    previous_state: prev.into(),
                    current_state: curr.into(),
                    expected_state: exp.into(),
                    t0: 0,
                    t1: 1,
                };
                let got = classify(&ctx);
                if exp == curr {
                    assert_eq!(got.unwrap_err().code(), "no-explanandum");
                    rejected += 1;
                    continue;
                }
                let e1 = prev == exp && exp != curr;
                let e2 = prev == curr && curr != exp;
                let e3 = prev != curr && curr != exp && prev != exp;
                assert_eq!([e1, e2, e3].iter().filter(|x| **x).count(), 1);
                let want = if e1 {
                    ExplanationCase::E1
                } else if e2 {
                    ExplanationCase::E2
                } else {
                    ExplanationCase::E3
                };
                assert_eq!(got.unwrap(), want, "({prev}, {curr}, {exp})");
                counts[want as usize] += 1;
            }
        }
    }
    assert_eq!(rejected, 9);
    assert_eq!(counts, [6, 6, 6]);
}
