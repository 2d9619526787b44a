//! Tokenization and normalization shared by task derivation and scoring.
//!
//! Text is split on whitespace and every punctuation character becomes its
//! own token, so `"song,"` and `"song ,"` tokenize identically. Apostrophes
//! and hyphens between two alphanumeric characters stay inside the word
//! (`That's`, `well-known`).

/// Splits `s` into case-preserving tokens.
pub fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in s.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let mut cur = String::new();
        for (i, &c) in chars.iter().enumerate() {
            if c.is_alphanumeric() || is_word_joiner(&chars, i) {
                cur.push(c);
            } else {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

fn is_word_joiner(chars: &[char], i: usize) -> bool {
    let c = chars[i];
    if !matches!(c, '\'' | '’' | '-') {
        return false;
    }
    let before = i > 0 && chars[i - 1].is_alphanumeric();
    let after = chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
    before && after
}

/// Lowercased tokens.
pub fn normalized_tokens(s: &str) -> Vec<String> {
    tokenize(s).into_iter().map(|t| t.to_lowercase()).collect()
}

/// Lowercased tokens joined by single spaces. Idempotent.
pub fn normalize(s: &str) -> String {
    normalized_tokens(s).join(" ")
}

pub fn token_count(s: &str) -> usize {
    tokenize(s).len()
}

/// True when the token carries at least one letter or digit.
pub fn is_wordlike(token: &str) -> bool {
    token.chars().any(|c| c.is_alphanumeric())
}

/// Fixed English stopword list used by the keyword extractor. Includes
/// common discourse fillers (`yes`, `absolutely`, `really`) that never make
/// useful keyword constraints.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "absolutely", "actually", "after", "again", "against", "ah", "all",
    "also", "am", "an", "and", "any", "are", "aren't", "as", "at", "be", "because", "been",
    "before", "being", "below", "between", "both", "but", "by", "can", "can't", "cannot",
    "could", "couldn't", "did", "didn't", "do", "does", "doesn't", "doing", "don't", "down",
    "during", "each", "even", "ever", "few", "for", "from", "further", "get", "got", "had",
    "hadn't", "has", "hasn't", "have", "haven't", "having", "he", "he'd", "he'll", "he's",
    "her", "here", "here's", "hers", "herself", "hi", "him", "himself", "his", "how", "how's",
    "i", "i'd", "i'll", "i'm", "i've", "if", "in", "into", "is", "isn't", "it", "it's", "its",
    "itself", "just", "let's", "like", "m", "me", "more", "most", "much", "must", "mustn't",
    "my", "myself", "no", "nor", "not", "now", "of", "off", "oh", "ok", "okay", "on", "once",
    "only", "or", "other", "ought", "our", "ours", "ourselves", "out", "over", "own", "re",
    "really", "s", "same", "shall", "shan't", "she", "she'd", "she'll", "she's", "should",
    "shouldn't", "so", "some", "such", "sure", "t", "than", "that", "that's", "the", "their",
    "theirs", "them", "themselves", "then", "there", "there's", "these", "they", "they'd",
    "they'll", "they're", "they've", "this", "those", "through", "to", "too", "under",
    "until", "up", "us", "very", "was", "wasn't", "we", "we'd", "we'll", "we're", "we've",
    "well", "were", "weren't", "what", "what's", "when", "when's", "where", "where's",
    "which", "while", "who", "who's", "whom", "why", "why's", "will", "with", "won't",
    "would", "wouldn't", "yeah", "yes", "you", "you'd", "you'll", "you're", "you've", "your",
    "yours", "yourself", "yourselves",
];

pub fn is_stopword(token: &str) -> bool {
    let lower = token.to_lowercase().replace('’', "'");
    STOPWORDS.binary_search(&lower.as_str()).is_ok()
}

/// Word-like, non-stopword tokens.
pub fn content_tokens(s: &str) -> Vec<String> {
    tokenize(s)
        .into_iter()
        .filter(|t| is_wordlike(t) && !is_stopword(t))
        .collect()
}

/// Joins items as `a`, `a and b`, or `a, b, and c`.
pub fn oxford_join<S: AsRef<str>>(items: &[S]) -> String {
    match items {
        [] => String::new(),
        [a] => a.as_ref().to_string(),
        [a, b] => format!("{} and {}", a.as_ref(), b.as_ref()),
        [init @ .., last] => {
            let head: Vec<&str> = init.iter().map(|s| s.as_ref()).collect();
            format!("{}, and {}", head.join(", "), last.as_ref())
        }
    }
}

/// Position of `needle` as a contiguous subsequence of `hay`.
pub fn find_subsequence<T: PartialEq>(hay: &[T], needle: &[T]) -> Option<usize> {
    if needle.is_empty() {
        return Some(0);
    }
    if needle.len() > hay.len() {
        return None;
    }
    hay.windows(needle.len()).position(|w| w == needle)
}
