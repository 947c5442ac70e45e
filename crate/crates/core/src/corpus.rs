//! Aligned training pairs, search documents, and the forum-ingestion
//! heuristics.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenize::TokenBag;

/// A code snippet paired with its natural-language description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub id: String,
    pub code: TokenBag,
    pub description: TokenBag,
    pub raw_code: String,
    pub source_url: Option<String>,
}

impl AlignedPair {
    /// Fails with [`Error::EmptyBag`] if either side has no tokens.
    pub fn new(
        id: impl Into<String>,
        code: TokenBag,
        description: TokenBag,
        raw_code: impl Into<String>,
        source_url: Option<String>,
    ) -> Result<Self> {
        if code.is_empty() {
            return Err(Error::EmptyBag("code"));
        }
        if description.is_empty() {
            return Err(Error::EmptyBag("description"));
        }
        Ok(AlignedPair {
            id: id.into(),
            code,
            description,
            raw_code: raw_code.into(),
            source_url,
        })
    }
}

/// One entry of a search corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchDocument {
    pub id: String,
    pub code: TokenBag,
    pub raw_code: String,
}

impl SearchDocument {
    pub fn new(id: impl Into<String>, raw_code: impl Into<String>) -> Self {
        let raw_code = raw_code.into();
        SearchDocument {
            id: id.into(),
            code: crate::tokenize(&raw_code),
            raw_code,
        }
    }
}

const EXCLUDED_TITLE_KEYWORDS: [&str; 3] = ["gradle", "studio", "emulator"];

/// Keeps a forum (title, snippet) pair only if the snippet has no XML tags,
/// contains a `(`, and the title avoids build-tool keywords.
pub fn filter_forum_pair(title: &str, snippet: &str) -> bool {
    if contains_xml_tag(snippet) || !snippet.contains('(') {
        return false;
    }
    let title = title.to_lowercase();
    !EXCLUDED_TITLE_KEYWORDS.iter().any(|kw| title.contains(kw))
}

/// Looks for `<name ...>`, `</name>` or `<?name ...>` where the `<` does not
/// directly follow an identifier character. The last condition keeps Java
/// generics such as `List<String>` from counting as markup.
pub fn contains_xml_tag(text: &str) -> bool {
    let bytes = text.as_bytes();
    let is_ident = |b: u8| b.is_ascii_alphanumeric() || b == b'_';

    for (i, &b) in bytes.iter().enumerate() {
        if b != b'<' || (i > 0 && is_ident(bytes[i - 1])) {
            continue;
        }
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'/' || bytes[j] == b'?') {
            j += 1;
        }
        if j >= bytes.len() || !(bytes[j].is_ascii_alphabetic() || bytes[j] == b'_') {
            continue;
        }
        while j < bytes.len()
            && (is_ident(bytes[j]) || matches!(bytes[j], b':' | b'.' | b'-'))
        {
            j += 1;
        }
        if j >= bytes.len() || !matches!(bytes[j], b'>' | b'/' | b' ' | b'\t' | b'\n' | b'\r') {
            continue;
        }
        if bytes[j..].iter().take_while(|&&c| c != b'<').any(|&c| c == b'>') {
            return true;
        }
    }
    false
}

/// Keeps the first document of every distinct token multiset, in order.
pub fn dedup(docs: Vec<SearchDocument>) -> Vec<SearchDocument> {
    let mut seen: BTreeSet<Vec<String>> = BTreeSet::new();
    docs.into_iter()
        .filter(|d| {
            let key = d.code.multiset_key().into_iter().map(String::from).collect();
            seen.insert(key)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn doc(id: &str, toks: &[&str]) -> SearchDocument {
        SearchDocument {
            id: id.into(),
            code: TokenBag::from_tokens(toks),
            raw_code: toks.join(" "),
        }
    }

    fn ids(docs: &[SearchDocument]) -> Vec<&str> {
        docs.iter().map(|d| d.id.as_str()).collect()
    }

    #[test]
    fn forum_filter_rules() {
        assert!(!filter_forum_pair("how to gradle sync", "foo();"));
        assert!(!filter_forum_pair("Android Studio crash", "foo();"));
        assert!(!filter_forum_pair("EMULATOR is slow", "foo();"));
        assert!(!filter_forum_pair("read file", "int x = 1;"));
        assert!(filter_forum_pair("read file", "read(path);"));
        assert!(!filter_forum_pair(
            "layout",
            "<LinearLayout android:id=\"@+id/a\">setContentView(x)</LinearLayout>"
        ));
    }

    #[test]
    fn xml_detection() {
        assert!(contains_xml_tag("<TextView android:text=\"hi\" />"));
        assert!(contains_xml_tag("</item>"));
        assert!(contains_xml_tag("<?xml version=\"1.0\"?>"));
        assert!(contains_xml_tag("x = foo(); <br>"));
        assert!(!contains_xml_tag("List<String> xs = new ArrayList<>();"));
        assert!(!contains_xml_tag("if (a < b && c > d) f();"));
        assert!(!contains_xml_tag("a <"));
    }

    #[test]
    fn dedup_examples() {
        let docs = vec![doc("d1", &["a", "b"]), doc("d2", &["b", "a"]), doc("d3", &["c"])];
        assert_eq!(ids(&dedup(docs)), ["d1", "d3"]);
        assert!(dedup(Vec::new()).is_empty());
        let distinct = vec![doc("x", &["a"]), doc("y", &["b"]), doc("z", &["a", "a"])];
        assert_eq!(ids(&dedup(distinct)), ["x", "y", "z"]);
    }

    #[test]
    fn aligned_pair_requires_tokens() {
        let code = TokenBag::from_tokens(["f"]);
        assert_eq!(
            AlignedPair::new("1", code.clone(), TokenBag::default(), "f()", None),
            Err(Error::EmptyBag("description"))
        );
        assert!(AlignedPair::new("1", code.clone(), code, "f()", None).is_ok());
    }

    proptest! {
        #[test]
        fn dedup_idempotent_and_stable(
            bags in proptest::collection::vec(proptest::collection::vec("[abc]", 0..4), 0..20)
        ) {
            let docs: Vec<SearchDocument> = bags
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let refs: Vec<&str> = b.iter().map(String::as_str).collect();
                    doc(&alloc::format!("d{i}"), &refs)
                })
                .collect();
            let once = dedup(docs.clone());
            prop_assert!(once.len() <= docs.len());
            prop_assert_eq!(&dedup(once.clone()), &once);
            // order-stable: survivors appear in their original relative order
            let positions: Vec<usize> = once
                .iter()
                .map(|d| docs.iter().position(|x| x.id == d.id).unwrap())
                .collect();
            prop_assert!(positions.windows(2).all(|w| w[0] < w[1]));
        }

        #[test]
        fn forum_filter_is_pure(title in ".{0,20}", snippet in ".{0,30}") {
            prop_assert_eq!(filter_forum_pair(&title, &snippet), filter_forum_pair(&title, &snippet));
        }
    }
}
