pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

/// Lowercases, drops punctuation other than apostrophes, splits on
/// whitespace. Boundary tokens are added by the models, not here.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().filter_map(normalize_token).collect()
}

/// Normalises one pre-split token; `None` if nothing is left.
pub fn normalize_token(tok: &str) -> Option<String> {
    if tok == UNK {
        return Some(UNK.to_string());
    }
    let t: String = tok
        .chars()
        .filter(|c| c.is_alphanumeric() || *c == '\'')
        .flat_map(char::to_lowercase)
        .collect();
    (!t.is_empty()).then_some(t)
}

/// Normalises an already tokenised word list.
pub fn normalize_words<S: AsRef<str>>(words: &[S]) -> Vec<String> {
    words.iter().filter_map(|w| normalize_token(w.as_ref())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_case_and_strips_punctuation() {
        assert_eq!(tokenize("Well, I don't KNOW -- uh-huh."), ["well", "i", "don't", "know", "uhhuh"]);
        assert!(tokenize(" ?! ").is_empty());
    }
}
