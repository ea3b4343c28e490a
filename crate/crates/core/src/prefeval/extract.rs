/// First standalone option letter A–D in `response`, as an index 0..=3.
///
/// A letter counts when it is a one-letter word: neither neighbour is a
/// letter, digit, underscore or apostrophe. Case is ignored, and any
/// punctuation such as `.` or `)` may follow. Scanning starts at the
/// beginning of the text.
pub fn extract_choice(response: &str) -> Option<usize> {
    let chars: Vec<char> = response.chars().collect();
    let is_word = |c: char| c.is_alphanumeric() || c == '_' || c == '\'' || c == '’';
    chars.iter().enumerate().find_map(|(i, &c)| {
        let idx = match c.to_ascii_uppercase() {
            'A' => 0,
            'B' => 1,
            'C' => 2,
            'D' => 3,
            _ => return None,
        };
        let before_ok = i == 0 || !is_word(chars[i - 1]);
        let after_ok = chars.get(i + 1).is_none_or(|&n| !is_word(n));
        (before_ok && after_ok).then_some(idx)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_cases() {
        assert_eq!(extract_choice("Answer: B. Engaging in workshops…"), Some(1));
        assert_eq!(extract_choice("I would pick (c) because…"), Some(2));
        assert_eq!(extract_choice("Both options have merit."), None);
    }

    #[test]
    fn apostrophes_do_not_create_letters() {
        assert_eq!(extract_choice("I'd go with D"), Some(3));
        assert_eq!(extract_choice("we'd"), None);
    }
}
