/// Word tokens: maximal runs of alphanumeric characters. Everything else
/// (whitespace, punctuation, symbols) separates. Case is kept.
pub fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty())
}

pub fn contains_token(text: &str, word: &str) -> bool {
    tokens(text).any(|t| t == word)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_punctuation() {
        let t: Vec<_> = tokens("Found. of Databases, 1995!").collect();
        assert_eq!(t, ["Found", "of", "Databases", "1995"]);
        assert!(contains_token("Found. of Databases", "Databases"));
        assert!(!contains_token("Found. of Databases", "databases"));
    }
}
