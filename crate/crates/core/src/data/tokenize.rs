//! Rule-based approximation of Penn Treebank tokenization.
//!
//! Rules, applied in order to each whitespace-separated chunk:
//! 1. URLs and lexicon emoticons are kept whole.
//! 2. Leading opening punctuation and quotes are split off.
//! 3. Trailing closing punctuation is split off; `...` stays one token and
//!    repeated `!`/`?` are grouped.
//! 4. `? ! ; ( ) [ ] { } "` inside a chunk always split; `,` splits unless
//!    between digits.
//! 5. English contractions split before the clitic: `it's` → `it 's`,
//!    `don't` → `do n't`.
//!
//! Known divergences from the reference tokenizer are listed in
//! `tests/fixtures/tokenizer_divergences.tsv`.

/// Sentinel emitted for utterances with no tokens.
pub const EMPTY_TOKEN: &str = "<empty>";

const EMOTICONS: &[&str] = &[
    ":)", ":-)", ":(", ":-(", ":D", ":-D", ":P", ":-P", ":p", ":-p", ";)", ";-)", ":/", ":-/", ":o", ":O", ":'(", ":|",
    "<3", "xD", "XD", "^^", "^_^", "-_-", "o_O", "O_o", ":*", "8)", "B)",
];

const CLITICS: &[&str] = &["'s", "'re", "'ve", "'ll", "'d", "'m"];

fn is_url(chunk: &str) -> bool {
    let lower = chunk.to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

fn is_opening(c: char) -> bool {
    matches!(c, '(' | '[' | '{' | '"' | '\'' | '`')
}

fn is_closing(c: char) -> bool {
    matches!(c, '.' | ',' | '!' | '?' | ';' | ':' | ')' | ']' | '}' | '"' | '\'')
}

fn is_always_split(c: char) -> bool {
    matches!(c, '?' | '!' | ';' | '(' | ')' | '[' | ']' | '{' | '}' | '"')
}

/// Tokenizes raw utterance text. Total and deterministic; case is preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        tokenize_chunk(chunk, &mut out);
    }
    out
}

/// Tokenizes, substituting [`EMPTY_TOKEN`] when nothing remains.
pub fn tokenize_utterance(text: &str) -> Vec<String> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        vec![EMPTY_TOKEN.to_string()]
    } else {
        tokens
    }
}

fn tokenize_chunk(chunk: &str, out: &mut Vec<String>) {
    if is_url(chunk) || EMOTICONS.contains(&chunk) {
        out.push(chunk.to_string());
        return;
    }
    let chars: Vec<char> = chunk.chars().collect();
    let mut start = 0;
    let mut end = chars.len();

    while start < end && is_opening(chars[start]) && !(chars[start] == '\'' && starts_clitic(&chars[start..end])) {
        out.push(chars[start].to_string());
        start += 1;
    }

    let mut trailing: Vec<String> = Vec::new();
    while start < end && is_closing(chars[end - 1]) {
        let c = chars[end - 1];
        let mut run = end - 1;
        if c == '.' || c == '!' || c == '?' {
            while run > start && chars[run - 1] == c {
                run -= 1;
            }
        }
        // A lone trailing quote may belong to a clitic like "goin'"; keep it.
        if c == '\''
            && run == end - 1
            && run > start
            && chars[run - 1].is_alphabetic()
            && !chars[start..run].contains(&'\'')
        {
            break;
        }
        trailing.push(chars[run..end].iter().collect());
        end = run;
    }

    if start < end {
        split_inner(&chars[start..end], out);
    }
    out.extend(trailing.into_iter().rev());
}

fn starts_clitic(chars: &[char]) -> bool {
    let s: String = chars.iter().collect::<String>().to_lowercase();
    CLITICS.iter().any(|c| s == *c)
}

fn split_inner(chars: &[char], out: &mut Vec<String>) {
    let mut word = String::new();
    let n = chars.len();
    let mut i = 0;
    while i < n {
        let c = chars[i];
        let split_here = is_always_split(c)
            || (c == ',' && !(i > 0 && i + 1 < n && chars[i - 1].is_ascii_digit() && chars[i + 1].is_ascii_digit()));
        if split_here {
            flush_word(&mut word, out);
            let mut j = i + 1;
            if c == '?' || c == '!' {
                while j < n && chars[j] == c {
                    j += 1;
                }
            }
            out.push(chars[i..j].iter().collect());
            i = j;
        } else {
            word.push(c);
            i += 1;
        }
    }
    flush_word(&mut word, out);
}

fn flush_word(word: &mut String, out: &mut Vec<String>) {
    if word.is_empty() {
        return;
    }
    let w = std::mem::take(word);
    let lower = w.to_lowercase();
    if lower.len() > 3 && lower.ends_with("n't") {
        let cut = w.len() - 3;
        out.push(w[..cut].to_string());
        out.push(w[cut..].to_string());
        return;
    }
    if lower == "can't" {
        out.push(w[..2].to_string());
        out.push(w[2..].to_string());
        return;
    }
    for clitic in CLITICS {
        if lower.len() > clitic.len() && lower.ends_with(clitic) {
            let cut = w.len() - clitic.len();
            out.push(w[..cut].to_string());
            out.push(w[cut..].to_string());
            return;
        }
    }
    out.push(w);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn pretokenized_text_round_trips() {
        let t = toks("can i get a clay from someone ?");
        assert_eq!(t.len(), 8);
        assert_eq!(t.join(" "), "can i get a clay from someone ?");
    }

    #[test]
    fn emoticons_stay_whole() {
        assert_eq!(toks(":D"), vec![":D"]);
        assert_eq!(toks("ok :) thanks"), vec!["ok", ":)", "thanks"]);
    }

    #[test]
    fn contractions_split() {
        assert_eq!(toks("it's"), vec!["it", "'s"]);
        assert_eq!(toks("don't"), vec!["do", "n't"]);
        assert_eq!(toks("can't"), vec!["ca", "n't"]);
        assert_eq!(toks("I'm"), vec!["I", "'m"]);
        assert_eq!(toks("we'll"), vec!["we", "'ll"]);
    }

    #[test]
    fn punctuation_splits() {
        assert_eq!(toks("clay, anyone?"), vec!["clay", ",", "anyone", "?"]);
        assert_eq!(toks("anyone need sheep?I"), vec!["anyone", "need", "sheep", "?", "I"]);
        assert_eq!(toks("roll..."), vec!["roll", "..."]);
        assert_eq!(toks("what?!"), vec!["what", "?", "!"]);
        assert_eq!(toks("(maybe)"), vec!["(", "maybe", ")"]);
        assert_eq!(toks("1,000"), vec!["1,000"]);
        assert_eq!(toks("\"hi\""), vec!["\"", "hi", "\""]);
        assert_eq!(toks("great!!"), vec!["great", "!!"]);
    }

    #[test]
    fn internal_periods_and_urls_kept() {
        assert_eq!(toks("tomas.kostan"), vec!["tomas.kostan"]);
        assert_eq!(toks("see http://example.com/a?b=c."), vec!["see", "http://example.com/a?b=c."]);
        assert_eq!(toks("3.5"), vec!["3.5"]);
    }

    #[test]
    fn case_preserved_and_empty_sentinel() {
        assert_eq!(toks("LJ has one"), vec!["LJ", "has", "one"]);
        assert!(toks("   ").is_empty());
        assert_eq!(tokenize_utterance(""), vec![EMPTY_TOKEN]);
    }

    #[test]
    fn odd_inputs_do_not_panic() {
        for s in ["'", "''", "'s", "n't", "...", "?", "'''hello'''", "é'ñ", ")(", ":", "'tis"] {
            let _ = tokenize(s);
        }
    }
}
