use std::collections::HashMap;

use crate::error::{Error, Result};

/// Default cap on caption length in tokens.
pub const DEFAULT_MAX_CAPTION_LEN: usize = 32;

/// Lowercase and split on anything that is not alphanumeric or an apostrophe.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Caption vocabulary with dense indices in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    frequencies: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(entries: impl IntoIterator<Item = (String, u64)>) -> Result<Self> {
        let mut words = Vec::new();
        let mut frequencies = Vec::new();
        let mut index = HashMap::new();
        for (word, freq) in entries {
            if word.is_empty() {
                return Err(Error::InvalidArgument("empty vocabulary word".into()));
            }
            if freq == 0 {
                return Err(Error::InvalidArgument(format!(
                    "word {word:?} has frequency 0"
                )));
            }
            if index.insert(word.clone(), words.len()).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate word {word:?}")));
            }
            words.push(word);
            frequencies.push(freq);
        }
        Ok(Self {
            words,
            frequencies,
            index,
        })
    }

    /// Build from raw caption texts; words are indexed by first appearance.
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut words: Vec<String> = Vec::new();
        let mut frequencies: Vec<u64> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for text in texts {
            for token in tokenize(text) {
                match index.get(&token) {
                    Some(&i) => frequencies[i] += 1,
                    None => {
                        index.insert(token.clone(), words.len());
                        words.push(token);
                        frequencies.push(1);
                    }
                }
            }
        }
        Self {
            words,
            frequencies,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn frequency(&self, index: usize) -> u64 {
        self.frequencies[index]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn require(&self, word: &str) -> Result<usize> {
        self.index_of(word)
            .ok_or_else(|| Error::UnknownWord(word.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &str, u64)> + '_ {
        self.words
            .iter()
            .zip(&self.frequencies)
            .enumerate()
            .map(|(i, (w, &f))| (i, w.as_str(), f))
    }
}

/// A tokenized caption paired with one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Caption {
    pub image_id: String,
    pub tokens: Vec<usize>,
    pub raw_text: String,
}

impl Caption {
    pub fn new(
        image_id: impl Into<String>,
        tokens: Vec<usize>,
        raw_text: impl Into<String>,
        vocab_len: usize,
    ) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::InvalidArgument("caption has no tokens".into()));
        }
        if let Some(&t) = tokens.iter().find(|&&t| t >= vocab_len) {
            return Err(Error::InvalidArgument(format!(
                "token index {t} outside vocabulary of {vocab_len}"
            )));
        }
        Ok(Self {
            image_id: image_id.into(),
            tokens,
            raw_text: raw_text.into(),
        })
    }

    /// Tokenize `text` against `vocab`. Out-of-vocabulary tokens are dropped
    /// and the result is truncated to `max_len`.
    pub fn encode(
        image_id: impl Into<String>,
        text: &str,
        vocab: &Vocabulary,
        max_len: usize,
    ) -> Result<Self> {
        let tokens: Vec<usize> = tokenize(text)
            .iter()
            .filter_map(|t| vocab.index_of(t))
            .take(max_len)
            .collect();
        Self::new(image_id, tokens, text, vocab.len())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_lowercases_and_splits_punctuation() {
        assert_eq!(
            tokenize("A Bear, near a tree-stump!"),
            vec!["a", "bear", "near", "a", "tree", "stump"]
        );
    }

    #[test]
    fn vocabulary_rejects_duplicates_and_zero_frequency() {
        assert!(Vocabulary::new([("a".into(), 1), ("a".into(), 2)]).is_err());
        assert!(Vocabulary::new([("a".into(), 0)]).is_err());
    }

    #[test]
    fn vocabulary_from_texts_counts() {
        let v = Vocabulary::from_texts(["a bear", "a cake and a bear"]);
        assert_eq!(v.words(), &["a", "bear", "cake", "and"]);
        assert_eq!(v.frequency(v.index_of("a").unwrap()), 3);
        assert_eq!(v.frequency(v.index_of("bear").unwrap()), 2);
    }

    #[test]
    fn caption_encoding_drops_unknown_and_truncates() {
        let v = Vocabulary::from_texts(["a bear near a stump"]);
        let c = Caption::encode("img", "A giraffe near a bear", &v, 3).unwrap();
        assert_eq!(
            c.tokens,
            vec![v.index_of("a").unwrap(), v.index_of("near").unwrap(), v.index_of("a").unwrap()]
        );
        assert!(Caption::encode("img", "giraffe", &v, 3).is_err());
    }
}
