//! Tolerant SQL lexer and bracket tree.
//!
//! Identifier chains (`a.b.c`, `t.*`) and call sites (`dbo.f(...)`) are folded
//! into single nodes; everything else stays flat inside parenthesized groups.
//! Unbalanced input never fails: stray `)` are dropped and open groups are
//! closed at end of input.

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    QuotedIdent(String),
    Literal,
    Variable,
    Op(String),
    Star,
    Dot,
    Comma,
    Semicolon,
    LParen,
    RParen,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    /// Lowercased reserved word.
    Keyword(String),
    /// Lowercased, unquoted name parts.
    Ident(Vec<String>),
    QualifiedStar(Vec<String>),
    Call { name: Vec<String>, args: Vec<Node> },
    Group(Vec<Node>),
    Star,
    Op(String),
    Comma,
    Literal,
    Variable,
    Semicolon,
}

const KEYWORDS: &[&str] = &[
    "all", "alter", "and", "any", "apply", "as", "asc", "begin", "between", "by", "case", "collate", "create",
    "cross", "declare", "delete", "desc", "distinct", "drop", "else", "end", "escape", "except", "exec",
    "execute", "exists", "false", "from", "full", "go", "group", "having", "in", "index", "inner", "insert",
    "intersect", "into", "is", "join", "left", "like", "limit", "natural", "not", "null", "offset", "on", "or",
    "order", "outer", "over", "partition", "percent", "right", "select", "set", "some", "table", "then", "ties",
    "top", "true", "union", "update", "using", "values", "view", "when", "where", "with",
];

/// Keywords that stay keywords even when directly followed by `(`.
const NON_CALL: &[&str] = &[
    "all", "alter", "and", "any", "apply", "as", "begin", "between", "by", "case", "collate", "create", "cross",
    "declare", "delete", "distinct", "drop", "else", "end", "escape", "except", "exec", "execute", "exists",
    "from", "full", "go", "group", "having", "in", "inner", "insert", "intersect", "into", "is", "join", "like",
    "natural", "not", "on", "or", "order", "outer", "over", "partition", "percent", "select", "set", "some",
    "table", "then", "top", "union", "update", "using", "values", "view", "when", "where", "with",
];

pub(crate) fn is_keyword(word: &str) -> bool {
    KEYWORDS.binary_search(&word).is_ok()
}

fn lex(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let n = chars.len();
    let is_ident_start = |c: char| c.is_alphabetic() || c == '_' || c == '#';
    let is_ident_char = |c: char| c.is_alphanumeric() || c == '_' || c == '#' || c == '$';

    while i < n {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        match c {
            _ if c.is_whitespace() => i += 1,
            '-' if next == Some('-') => {
                while i < n && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if next == Some('*') => {
                i += 2;
                while i < n && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                    i += 1;
                }
                i = (i + 2).min(n);
            }
            '\'' => {
                i = skip_quoted(&chars, i + 1, '\'');
                out.push(Token::Literal);
            }
            'N' | 'n' if next == Some('\'') => {
                i = skip_quoted(&chars, i + 2, '\'');
                out.push(Token::Literal);
            }
            '"' | '[' | '`' => {
                let close = match c {
                    '[' => ']',
                    other => other,
                };
                let start = i + 1;
                let end = chars[start..].iter().position(|&x| x == close).map_or(n, |p| start + p);
                out.push(Token::QuotedIdent(chars[start..end].iter().collect::<String>().to_lowercase()));
                i = (end + 1).min(n);
            }
            _ if c.is_ascii_digit() || (c == '.' && next.is_some_and(|d| d.is_ascii_digit())) => {
                i += 1;
                while i < n {
                    let d = chars[i];
                    let exp_sign = (d == '+' || d == '-') && matches!(chars[i - 1], 'e' | 'E');
                    if d.is_ascii_alphanumeric() || d == '.' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push(Token::Literal);
            }
            '@' => {
                i += 1;
                while i < n && (is_ident_char(chars[i]) || chars[i] == '@') {
                    i += 1;
                }
                out.push(Token::Variable);
            }
            _ if is_ident_start(c) => {
                let start = i;
                while i < n && is_ident_char(chars[i]) {
                    i += 1;
                }
                out.push(Token::Word(chars[start..i].iter().collect::<String>().to_lowercase()));
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            ';' => {
                out.push(Token::Semicolon);
                i += 1;
            }
            '.' => {
                out.push(Token::Dot);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '<' | '>' | '!' | '=' | '|' => {
                let two: String = [c, next.unwrap_or(' ')].iter().collect();
                if matches!(two.as_str(), "<=" | ">=" | "<>" | "!=" | "!<" | "!>" | "||" | "==") {
                    out.push(Token::Op(two));
                    i += 2;
                } else {
                    out.push(Token::Op(c.to_string()));
                    i += 1;
                }
            }
            _ => {
                out.push(Token::Op(c.to_string()));
                i += 1;
            }
        }
    }
    out
}

fn skip_quoted(chars: &[char], mut i: usize, quote: char) -> usize {
    while i < chars.len() {
        if chars[i] == quote {
            if chars.get(i + 1) == Some(&quote) {
                i += 2;
                continue;
            }
            return i + 1;
        }
        i += 1;
    }
    chars.len()
}

struct TreeBuilder {
    tokens: Vec<Token>,
    pos: usize,
}

impl TreeBuilder {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    /// Parses until the matching `)` (consumed) or end of input.
    fn sequence(&mut self, nested: bool) -> Vec<Node> {
        let mut nodes = Vec::new();
        while let Some(tok) = self.bump() {
            let node = match tok {
                Token::RParen if nested => return nodes,
                Token::RParen => continue,
                Token::LParen => Node::Group(self.sequence(true)),
                Token::Word(w) if is_keyword(&w) => {
                    if self.peek() == Some(&Token::LParen) && NON_CALL.binary_search(&w.as_str()).is_err() {
                        self.pos += 1;
                        Node::Call {
                            name: vec![w],
                            args: self.sequence(true),
                        }
                    } else {
                        Node::Keyword(w)
                    }
                }
                Token::Word(w) | Token::QuotedIdent(w) => self.chain(w),
                Token::Literal => Node::Literal,
                Token::Variable => Node::Variable,
                Token::Op(o) => Node::Op(o),
                Token::Star => Node::Star,
                Token::Dot => Node::Op(".".into()),
                Token::Comma => Node::Comma,
                Token::Semicolon => Node::Semicolon,
            };
            nodes.push(node);
        }
        nodes
    }

    fn chain(&mut self, first: String) -> Node {
        let mut parts = vec![first];
        while self.peek() == Some(&Token::Dot) {
            self.pos += 1;
            match self.peek().cloned() {
                Some(Token::Word(w)) | Some(Token::QuotedIdent(w)) => {
                    parts.push(w);
                    self.pos += 1;
                }
                Some(Token::Star) => {
                    self.pos += 1;
                    return Node::QualifiedStar(parts);
                }
                // `db..table`
                Some(Token::Dot) => {}
                _ => break,
            }
        }
        if self.peek() == Some(&Token::LParen) {
            self.pos += 1;
            Node::Call {
                name: parts,
                args: self.sequence(true),
            }
        } else {
            Node::Ident(parts)
        }
    }
}

pub(crate) fn parse_tree(text: &str) -> Vec<Node> {
    let mut builder = TreeBuilder {
        tokens: lex(text),
        pos: 0,
    };
    builder.sequence(false)
}
