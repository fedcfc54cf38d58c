use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Digits of a natural literal.
    Nat(String),
    /// Integer and fractional digits of a decimal literal.
    Decimal(String, String),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Nat(s) => format!("number {s}"),
            Tok::Decimal(a, b) => format!("number {a}.{b}"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

// Longest symbols first so that `..` wins over `.` and `<=` over `<`.
const SYMBOLS: [&str; 25] = [
    "..", "!=", "<=", ">=", "->", "{", "}", "(", ")", "[", "]", ":", ";", ",", ".", "!", "?",
    "*", "+", "-", "/", "=", "<", ">", "|",
];

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let bump = |i: &mut usize, col: &mut usize, n: usize| {
        *i += n;
        *col += n;
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            bump(&mut i, &mut col, 1);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            let n = j - i;
            bump(&mut i, &mut col, n);
            out.push(Token { tok: Tok::Ident(word), line: start_line, col: start_col });
            continue;
        }
        if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let int: String = chars[i..j].iter().collect();
            let tok = if chars.get(j) == Some(&'.') && chars.get(j + 1).is_some_and(|d| d.is_ascii_digit()) {
                let mut k = j + 1;
                while k < chars.len() && chars[k].is_ascii_digit() {
                    k += 1;
                }
                let frac: String = chars[j + 1..k].iter().collect();
                j = k;
                Tok::Decimal(int, frac)
            } else {
                Tok::Nat(int)
            };
            let n = j - i;
            bump(&mut i, &mut col, n);
            out.push(Token { tok, line: start_line, col: start_col });
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                bump(&mut i, &mut col, sym.len());
                out.push(Token { tok: Tok::Sym(sym), line: start_line, col: start_col });
            }
            None => {
                return Err(ParseError {
                    line,
                    col,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn ranges_and_decimals() {
        assert_eq!(
            toks("[0..2] 1.5"),
            vec![
                Tok::Sym("["),
                Tok::Nat("0".into()),
                Tok::Sym(".."),
                Tok::Nat("2".into()),
                Tok::Sym("]"),
                Tok::Decimal("1".into(), "5".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("// note\n  x != y").unwrap();
        assert_eq!((t[0].line, t[0].col), (2, 3));
        assert_eq!(t[1].tok, Tok::Sym("!="));
        assert!(tokenize("a # b").is_err());
    }
}
