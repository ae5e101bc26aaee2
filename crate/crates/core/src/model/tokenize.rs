/// Word-level tokenizer shared by questions, column names and cell values.
///
/// Text is lowercased and split on whitespace. Word characters are
/// alphanumerics and `_`; every other character becomes a token of its own.
/// A `.` between two digits of a numeral stays inside the numeral, so
/// `3.5` is one token.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();

    let flush = |current: &mut String, tokens: &mut Vec<String>| {
        if !current.is_empty() {
            tokens.push(std::mem::take(current));
        }
    };

    for (i, &c) in chars.iter().enumerate() {
        if c.is_whitespace() {
            flush(&mut current, &mut tokens);
        } else if is_word_char(c) {
            current.push(c);
        } else if c == '.'
            && is_numeral(&current)
            && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit())
        {
            current.push('.');
        } else {
            flush(&mut current, &mut tokens);
            tokens.push(c.to_string());
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_numeral(s: &str) -> bool {
    !s.is_empty() && !s.contains('.') && s.chars().all(|c| c.is_ascii_digit())
}

/// Whether `s` is a decimal numeral: optional minus sign, digits, optional
/// fractional part.
pub fn is_decimal_numeral(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
    digits(int) && frac.is_none_or(digits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn splits_punctuation() {
        assert_eq!(toks("Show height!"), ["show", "height", "!"]);
    }

    #[test]
    fn empty_input() {
        assert!(toks("").is_empty());
        assert!(toks("   \t\n").is_empty());
    }

    #[test]
    fn numerals_preserved() {
        assert_eq!(toks("between 1 and 2"), ["between", "1", "and", "2"]);
        assert_eq!(toks("over 3.75 points."), ["over", "3.75", "points", "."]);
        assert_eq!(toks("-5"), ["-", "5"]);
    }

    #[test]
    fn underscores_stay_inside_words() {
        assert_eq!(toks("Stadium_ID, name"), ["stadium_id", ",", "name"]);
    }

    #[test]
    fn decimal_numerals() {
        for ok in ["0", "10", "-3", "3.25", "-0.5"] {
            assert!(is_decimal_numeral(ok), "{ok}");
        }
        for bad in ["", "-", "1.", ".5", "1e3", "1,000", "abc", " 1"] {
            assert!(!is_decimal_numeral(bad), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn idempotent_on_joined_output(s in "\\PC{0,40}") {
            let once = tokenize(&s);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(&once, &twice);
            for t in &once {
                prop_assert!(!t.is_empty());
                prop_assert_eq!(t.to_lowercase(), t.clone());
            }
        }
    }
}
