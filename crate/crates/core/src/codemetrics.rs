//! Length, token, and similarity metrics over operator source text.
//!
//! Sources are Python-like: `#` starts a line comment. Similarity is a BLEU
//! score over lexical tokens with n-grams containing a keyword counted twice.

use std::collections::HashMap;

const KEYWORDS: [&str; 35] = [
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

const OPERATORS_3: [&str; 5] = ["**=", "//=", ">>=", "<<=", "..."];
const OPERATORS_2: [&str; 19] = [
    "==", "!=", "<=", ">=", "**", "//", "->", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<",
    ">>", ":=", "@=",
];
const STRING_PREFIXES: [&str; 8] = ["r", "b", "f", "u", "rb", "br", "fr", "rf"];
const MAX_ORDER: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeStats {
    pub effective_lines: usize,
    pub approx_tokens: usize,
    pub token_sequence: Vec<String>,
}

pub fn code_stats(source: &str) -> CodeStats {
    let token_sequence = tokenize(source);
    CodeStats {
        effective_lines: effective_line_count(source),
        approx_tokens: token_sequence.len(),
        token_sequence,
    }
}

/// Lines with content whose first non-blank character is not `#`.
pub fn effective_line_count(source: &str) -> usize {
    source
        .lines()
        .map(str::trim_start)
        .filter(|l| !l.trim_end().is_empty() && !l.starts_with('#'))
        .count()
}

pub fn approx_token_count(source: &str) -> usize {
    tokenize(source).len()
}

pub fn is_keyword(token: &str) -> bool {
    KEYWORDS.contains(&token)
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_char(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

/// Python-like lexical tokens: identifiers, numbers, strings, operators, and
/// punctuation. Whitespace, newlines, and comments are dropped.
pub fn tokenize(source: &str) -> Vec<String> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let text = |a: usize, b: usize| chars[a..b].iter().collect::<String>();
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() || c == '\\' {
            i += 1;
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let word = text(start, i).to_ascii_lowercase();
            if i < chars.len()
                && (chars[i] == '"' || chars[i] == '\'')
                && STRING_PREFIXES.contains(&word.as_str())
            {
                i = scan_string(&chars, i);
            }
            tokens.push(text(start, i));
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() {
                let d = chars[i];
                let exponent_sign = (d == '+' || d == '-')
                    && matches!(chars[i - 1], 'e' | 'E')
                    && !text(start, i).starts_with("0x");
                if d.is_ascii_alphanumeric() || d == '.' || d == '_' || exponent_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            tokens.push(text(start, i));
        } else if c == '"' || c == '\'' {
            let start = i;
            i = scan_string(&chars, i);
            tokens.push(text(start, i));
        } else {
            let rest = |n: usize| -> Option<String> { (i + n <= chars.len()).then(|| text(i, i + n)) };
            let op = rest(3)
                .filter(|s| OPERATORS_3.contains(&s.as_str()))
                .or_else(|| rest(2).filter(|s| OPERATORS_2.contains(&s.as_str())))
                .unwrap_or_else(|| c.to_string());
            i += op.chars().count();
            tokens.push(op);
        }
    }
    tokens
}

/// Returns the index just past the string literal starting at `start`.
fn scan_string(chars: &[char], start: usize) -> usize {
    let quote = chars[start];
    let triple = chars.get(start + 1) == Some(&quote) && chars.get(start + 2) == Some(&quote);
    let mut i = start + if triple { 3 } else { 1 };
    while i < chars.len() {
        match chars[i] {
            '\\' => i += 2,
            '\n' if !triple => return i,
            c if c == quote => {
                if !triple {
                    return i + 1;
                }
                if chars.get(i + 1) == Some(&quote) && chars.get(i + 2) == Some(&quote) {
                    return i + 3;
                }
                i += 1;
            }
            _ => i += 1,
        }
    }
    chars.len()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

fn gram_weight(gram: &[String]) -> f64 {
    if gram.iter().any(|t| is_keyword(t)) {
        2.0
    } else {
        1.0
    }
}

/// Keyword-weighted clipped precision of candidate `n`-grams.
pub fn weighted_precision(reference: &[String], candidate: &[String], n: usize) -> f64 {
    let cand = ngram_counts(candidate, n);
    let refc = ngram_counts(reference, n);
    let mut matched = 0.0;
    let mut total = 0.0;
    for (gram, &count) in &cand {
        let w = gram_weight(gram);
        total += w * count as f64;
        matched += w * count.min(refc.get(gram).copied().unwrap_or(0)) as f64;
    }
    if total == 0.0 {
        0.0
    } else {
        matched / total
    }
}

/// Similarity of `candidate` to `reference` in `[0, 1]`: brevity penalty times
/// the geometric mean of 1..4-gram weighted precisions. Orders longer than the
/// candidate are skipped. Only identical token sequences score exactly 1.
pub fn code_similarity(reference: &str, candidate: &str) -> f64 {
    token_similarity(&tokenize(reference), &tokenize(candidate))
}

pub fn token_similarity(reference: &[String], candidate: &[String]) -> f64 {
    if reference == candidate {
        return 1.0;
    }
    if reference.is_empty() || candidate.is_empty() {
        return 0.0;
    }
    let orders = candidate.len().min(MAX_ORDER);
    let mut log_sum = 0.0;
    for n in 1..=orders {
        let p = weighted_precision(reference, candidate, n);
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln();
    }
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let brevity = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    let score = brevity * (log_sum / orders as f64).exp();
    score.min(1.0 - f64::EPSILON)
}
