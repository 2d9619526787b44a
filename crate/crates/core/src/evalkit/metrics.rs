//! Reference-overlap metrics over normalized tokens.

use std::collections::HashMap;

use crate::text::normalized_tokens;

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

/// Clipped n-gram matches and candidate n-gram total for one segment.
fn clipped(cand: &[String], refs: &[Vec<String>], n: usize) -> (usize, usize) {
    let c = ngrams(cand, n);
    let mut max_ref: HashMap<&[String], usize> = HashMap::new();
    for r in refs {
        for (g, k) in ngrams(r, n) {
            let e = max_ref.entry(g).or_insert(0);
            *e = (*e).max(k);
        }
    }
    let matched = c
        .iter()
        .map(|(g, k)| (*k).min(max_ref.get(g).copied().unwrap_or(0)))
        .sum();
    (matched, cand.len().saturating_sub(n - 1))
}

/// Corpus-level BLEU-2: clipped unigram and bigram precision combined by
/// geometric mean, times the brevity penalty against the closest reference
/// length. An order with no matches is add-one smoothed.
pub fn bleu2_corpus<S: AsRef<str>>(pairs: &[(S, Vec<S>)]) -> f64 {
    let mut matched = [0usize; 2];
    let mut total = [0usize; 2];
    let (mut c_len, mut r_len) = (0usize, 0usize);
    for (cand, refs) in pairs {
        let cand = normalized_tokens(cand.as_ref());
        let refs: Vec<Vec<String>> = refs.iter().map(|r| normalized_tokens(r.as_ref())).collect();
        for n in 1..=2 {
            let (m, t) = clipped(&cand, &refs, n);
            matched[n - 1] += m;
            total[n - 1] += t;
        }
        c_len += cand.len();
        r_len += refs
            .iter()
            .map(Vec::len)
            .min_by_key(|&l| (l.abs_diff(cand.len()), l))
            .unwrap_or(0);
    }
    if c_len == 0 {
        return 0.0;
    }
    let log_p: f64 = (0..2)
        .map(|i| {
            let (m, t) = (matched[i] as f64, total[i] as f64);
            if matched[i] == 0 {
                ((m + 1.0) / (t + 1.0)).ln()
            } else {
                (m / t).ln()
            }
        })
        .sum::<f64>()
        / 2.0;
    let bp = if c_len < r_len {
        (1.0 - r_len as f64 / c_len as f64).exp()
    } else {
        1.0
    };
    bp * log_p.exp()
}

/// BLEU-2 of a single candidate against its references.
pub fn bleu2<S: AsRef<str>>(candidate: &str, references: &[S]) -> f64 {
    let refs: Vec<&str> = references.iter().map(AsRef::as_ref).collect();
    bleu2_corpus(&[(candidate, refs)])
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    for x in a {
        let mut cur = vec![0usize; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        prev = cur;
    }
    prev[b.len()]
}

/// LCS-based F-measure: `(1 + b^2) * lcs / (len(candidate) + b^2 * len(reference))`.
pub fn rouge_l_beta(candidate: &str, reference: &str, beta: f64) -> f64 {
    let c = normalized_tokens(candidate);
    let r = normalized_tokens(reference);
    if c.is_empty() || r.is_empty() {
        return 0.0;
    }
    let l = lcs_len(&c, &r) as f64;
    let b2 = beta * beta;
    (1.0 + b2) * l / (c.len() as f64 + b2 * r.len() as f64)
}

/// Rouge-L F1.
pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    rouge_l_beta(candidate, reference, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn bleu_identity_and_golden() {
        assert!((bleu2("the cat sat", &["the cat sat"]) - 1.0).abs() < EPS);
        // Unigrams 3/4, bigrams 1/3 (a b), equal lengths: sqrt(3/4 * 1/3) = 0.5.
        assert!((bleu2("a b c d", &["a b x d"]) - 0.5).abs() < EPS);
    }

    #[test]
    fn bleu_brevity_penalty() {
        // Two tokens against four: precisions 1, penalty exp(1 - 4/2).
        let got = bleu2("a b", &["a b c d"]);
        assert!((got - (-1.0f64).exp()).abs() < EPS);
        // The closest reference length is used.
        assert!((bleu2("a b", &["a b c d", "a b"]) - 1.0).abs() < EPS);
    }

    #[test]
    fn bleu_smoothing_keeps_disjoint_pairs_positive() {
        let tiny = bleu2("a", &["b"]);
        assert!(tiny > 0.0 && tiny < 1.0);
        assert!((tiny - 0.5f64.sqrt()).abs() < EPS);
        let long = bleu2("a b c d e f g h i j", &["k l m n o p q r s t"]);
        assert!(long > 0.0 && long < 0.1, "{long}");
    }

    #[test]
    fn bleu_corpus_pools_counts() {
        let pairs = vec![("a b c d", vec!["a b x d"]), ("a b c d", vec!["a b c d"])];
        // Unigrams 7/8, bigrams 4/6.
        let want = (7.0f64 / 8.0 * 4.0 / 6.0).sqrt();
        assert!((bleu2_corpus(&pairs) - want).abs() < EPS);
    }

    #[test]
    fn rouge_golden_values() {
        assert!((rouge_l("a b c", "a c") - 0.8).abs() < EPS);
        assert_eq!(rouge_l("", "a"), 0.0);
        assert!((rouge_l("x y z", "x y z") - 1.0).abs() < EPS);
        // P = 2/3, R = 1; beta = 2 weights recall: 5 * 2 / (3 + 4 * 2).
        assert!((rouge_l_beta("a b c", "a c", 2.0) - 10.0 / 11.0).abs() < EPS);
    }

    #[test]
    fn punctuation_spacing_does_not_matter() {
        assert!((rouge_l("Yes, I love this song,", "Yes , I love this song ,") - 1.0).abs() < EPS);
        assert!((bleu2("Yes, I love it.", &["yes , i love it ."]) - 1.0).abs() < EPS);
    }

    proptest! {
        #[test]
        fn corruption_never_raises_scores(words in proptest::collection::vec("[a-e]{1,3}", 2..15), idx in any::<prop::sample::Index>()) {
            let reference = words.join(" ");
            let mut bad = words.clone();
            let i = idx.index(bad.len());
            bad[i] = "zzz".to_string();
            let corrupted = bad.join(" ");
            prop_assert!((bleu2(&reference, &[&reference]) - 1.0).abs() < EPS);
            prop_assert!((rouge_l(&reference, &reference) - 1.0).abs() < EPS);
            prop_assert!(bleu2(&corrupted, &[&reference]) <= 1.0 + EPS);
            prop_assert!(rouge_l(&corrupted, &reference) <= 1.0);
            prop_assert!(rouge_l(&corrupted, &reference) < 1.0);
            prop_assert!(bleu2(&corrupted, &[&reference]) < 1.0);
        }
    }
}
