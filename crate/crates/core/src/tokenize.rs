//! Splitting source text and natural language into bags of word tokens.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Splits `text` into lowercase word tokens.
///
/// Boundaries are every non-alphanumeric character, a lowercase letter
/// followed by an uppercase one (`entrySet` → `entry`, `set`), and any
/// switch between digits and non-digits (`utf8` → `utf`, `8`). Nothing is
/// stemmed or filtered, and repeated tokens are kept.
pub fn tokenize(text: &str) -> TokenBag {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut prev: Option<char> = None;

    for c in text.chars() {
        if !c.is_alphanumeric() {
            flush(&mut current, &mut tokens);
            prev = None;
            continue;
        }
        if let Some(p) = prev {
            let camel = p.is_lowercase() && c.is_uppercase();
            let digit_switch = p.is_numeric() != c.is_numeric();
            if camel || digit_switch {
                flush(&mut current, &mut tokens);
            }
        }
        // Lowercasing can yield combining marks; keep only word characters
        // so that re-tokenizing the output is a no-op.
        current.extend(c.to_lowercase().filter(|l| l.is_alphanumeric()));
        prev = Some(c);
    }
    flush(&mut current, &mut tokens);
    TokenBag(tokens)
}

fn flush(current: &mut String, tokens: &mut Vec<String>) {
    if !current.is_empty() {
        tokens.push(core::mem::take(current));
    }
}

/// A multiset of normalized tokens.
///
/// Token order is kept (skip-gram windows read it) but equality and every
/// pooling operation treat the bag as order-insensitive.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenBag(Vec<String>);

impl TokenBag {
    /// Normalizes already-split tokens by running each through [`tokenize`].
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out = Vec::new();
        for t in tokens {
            out.extend(tokenize(t.as_ref()).0);
        }
        TokenBag(out)
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    /// Token counts, enumerated in sorted token order.
    pub fn counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for t in &self.0 {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
        counts
    }

    /// Tokens sorted; two bags are equal iff their keys are equal.
    pub fn multiset_key(&self) -> Vec<&str> {
        let mut key: Vec<&str> = self.iter().collect();
        key.sort_unstable();
        key
    }

    /// Number of distinct tokens.
    pub fn unique_len(&self) -> usize {
        self.counts().len()
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.0
    }
}

impl PartialEq for TokenBag {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.multiset_key() == other.multiset_key()
    }
}

impl Eq for TokenBag {}
