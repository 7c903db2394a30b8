use super::{blocks, parse_bracket_tag, FormatError};
use crate::model::{ParseNode, Sentence, Span, Token};

/// Parses syntax columns: word, POS, chunk (B-I-O), clause brackets,
/// named entities (B-I-O) and an optional parse column (`(S(NP*`, `*))`).
/// Predicates are left empty; they come from the props files.
pub fn parse_syntax(text: &str) -> Result<Vec<Sentence>, FormatError> {
    let mut out = Vec::new();
    for (id, block) in blocks(text).into_iter().enumerate() {
        let ncols = block[0].1.len();
        if ncols != 5 && ncols != 6 {
            return Err(FormatError::at(block[0].0, format!("expected 5 or 6 columns, found {ncols}")));
        }
        let mut tokens = Vec::with_capacity(block.len());
        for (t, (line, f)) in block.iter().enumerate() {
            if f.len() != ncols {
                return Err(FormatError::at(*line, format!("expected {ncols} columns, found {}", f.len())));
            }
            tokens.push(Token {
                index: t,
                form: f[0].to_string(),
                pos: f[1].to_string(),
                chunk: f[2].to_string(),
                clause: f[3].to_string(),
                ne: f[4].to_string(),
            });
        }
        let lines: Vec<usize> = block.iter().map(|(l, _)| *l).collect();
        check_bio(&tokens, |t| &t.chunk, &lines, "chunk")?;
        check_bio(&tokens, |t| &t.ne, &lines, "named-entity")?;
        check_clauses(&tokens, &lines)?;
        let parse = if ncols == 6 {
            let tags: Vec<&str> = block.iter().map(|(_, f)| f[5]).collect();
            Some(parse_tree(&tags, &lines)?)
        } else {
            None
        };
        out.push(Sentence { id, tokens, predicates: Vec::new(), parse });
    }
    Ok(out)
}

fn check_bio(tokens: &[Token], tag: impl Fn(&Token) -> &str, lines: &[usize], what: &str) -> Result<(), FormatError> {
    let mut prev: Option<&str> = None;
    for (t, tok) in tokens.iter().enumerate() {
        let tg = tag(tok);
        if tg == "O" {
            prev = None;
        } else if let Some(ty) = tg.strip_prefix("B-") {
            if ty.is_empty() {
                return Err(FormatError::at(lines[t], format!("malformed {what} tag `{tg}`")));
            }
            prev = Some(ty);
        } else if let Some(ty) = tg.strip_prefix("I-") {
            if prev != Some(ty) {
                return Err(FormatError::at(lines[t], format!("{what} tag `{tg}` does not continue a chunk")));
            }
        } else {
            return Err(FormatError::at(lines[t], format!("malformed {what} tag `{tg}`")));
        }
    }
    Ok(())
}

fn check_clauses(tokens: &[Token], lines: &[usize]) -> Result<(), FormatError> {
    let mut depth = 0usize;
    let mut last_open = 0;
    for (t, tok) in tokens.iter().enumerate() {
        let tag = parse_bracket_tag(&tok.clause, true)
            .ok_or_else(|| FormatError::at(lines[t], format!("malformed clause tag `{}`", tok.clause)))?;
        if !tag.opens.is_empty() {
            last_open = lines[t];
        }
        depth += tag.opens.len();
        depth = depth
            .checked_sub(tag.closes)
            .ok_or_else(|| FormatError::at(lines[t], "unbalanced clause bracket"))?;
    }
    if depth != 0 {
        return Err(FormatError::at(last_open, "unclosed clause bracket"));
    }
    Ok(())
}

fn parse_tree(tags: &[&str], lines: &[usize]) -> Result<ParseNode, FormatError> {
    struct Open {
        label: String,
        start: usize,
        line: usize,
        children: Vec<ParseNode>,
    }
    let mut stack: Vec<Open> = Vec::new();
    let mut roots: Vec<ParseNode> = Vec::new();
    for (t, tag) in tags.iter().enumerate() {
        let parsed = parse_bracket_tag(tag, false)
            .ok_or_else(|| FormatError::at(lines[t], format!("malformed parse tag `{tag}`")))?;
        for label in parsed.opens {
            stack.push(Open { label: label.to_string(), start: t, line: lines[t], children: Vec::new() });
        }
        for _ in 0..parsed.closes {
            let open = stack.pop().ok_or_else(|| FormatError::at(lines[t], "unbalanced parse bracket"))?;
            let node = ParseNode { label: open.label, span: Span::new(open.start, t), children: open.children };
            match stack.last_mut() {
                Some(parent) => parent.children.push(node),
                None => roots.push(node),
            }
        }
    }
    if let Some(open) = stack.pop() {
        return Err(FormatError::at(open.line, format!("unclosed parse bracket `({}`", open.label)));
    }
    if roots.len() != 1 {
        return Err(FormatError::at(lines[0], format!("parse column has {} roots, expected 1", roots.len())));
    }
    Ok(roots.pop().unwrap())
}

fn tree_column(root: &ParseNode, n: usize) -> Vec<String> {
    fn walk(node: &ParseNode, opens: &mut [String], closes: &mut [usize]) {
        opens[node.span.start].push('(');
        opens[node.span.start].push_str(&node.label);
        closes[node.span.end] += 1;
        for c in &node.children {
            walk(c, opens, closes);
        }
    }
    let mut opens = vec![String::new(); n];
    let mut closes = vec![0; n];
    walk(root, &mut opens, &mut closes);
    opens
        .into_iter()
        .zip(closes)
        .map(|(mut s, c)| {
            s.push('*');
            s.extend(std::iter::repeat(')').take(c));
            s
        })
        .collect()
}

pub fn emit_syntax(sentences: &[Sentence]) -> Result<String, FormatError> {
    let mut out = String::new();
    for s in sentences {
        if s.tokens.is_empty() {
            return Err(FormatError::Serialize(format!("sentence {} has no tokens", s.id)));
        }
        let parse_col = match &s.parse {
            Some(root) => {
                if !root.is_well_formed() || root.span.end >= s.tokens.len() {
                    return Err(FormatError::Serialize(format!("sentence {}: malformed parse tree", s.id)));
                }
                Some(tree_column(root, s.tokens.len()))
            }
            None => None,
        };
        for (t, tok) in s.tokens.iter().enumerate() {
            out.push_str(&format!("{} {} {} {} {}", tok.form, tok.pos, tok.chunk, tok.clause, tok.ne));
            if let Some(col) = &parse_col {
                out.push(' ');
                out.push_str(&col[t]);
            }
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}

/// B-I-O spans with their type. Assumes well-formed tags.
pub fn chunk_spans<'a>(tokens: &'a [Token], tag: impl Fn(&'a Token) -> &'a str) -> Vec<(&'a str, Span)> {
    let mut out: Vec<(&str, Span)> = Vec::new();
    for (t, tok) in tokens.iter().enumerate() {
        let tg = tag(tok);
        if let Some(ty) = tg.strip_prefix("B-") {
            out.push((ty, Span::single(t)));
        } else if tg.starts_with("I-") {
            if let Some(last) = out.last_mut() {
                if last.1.end + 1 == t {
                    last.1.end = t;
                }
            }
        }
    }
    out
}

/// Clause spans from the clause bracket column, outermost first for equal
/// starts.
pub fn clause_spans(tokens: &[Token]) -> Vec<Span> {
    let mut stack = Vec::new();
    let mut out = Vec::new();
    for (t, tok) in tokens.iter().enumerate() {
        if let Some(tag) = parse_bracket_tag(&tok.clause, true) {
            for _ in tag.opens {
                stack.push(t);
            }
            for _ in 0..tag.closes {
                if let Some(s) = stack.pop() {
                    out.push(Span::new(s, t));
                }
            }
        }
    }
    out.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
    out
}

/// A sentence with placeholder annotations, used when no syntax file is
/// available.
pub fn plain_sentence(id: usize, n_tokens: usize) -> Sentence {
    Sentence {
        id,
        tokens: (0..n_tokens)
            .map(|i| Token {
                index: i,
                form: "_".into(),
                pos: "-".into(),
                chunk: "O".into(),
                clause: "*".into(),
                ne: "O".into(),
            })
            .collect(),
        predicates: Vec::new(),
        parse: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
The DT B-NP (S* O (S(NP*
man NN I-NP * O *)
sold VBD B-VP * O (VP*
cars NNS B-NP *S) O (NP*)))
";

    #[test]
    fn chunks_and_clauses() {
        let s = &parse_syntax(SAMPLE).unwrap()[0];
        assert_eq!(chunk_spans(&s.tokens, |t| &t.chunk), vec![("NP", Span::new(0, 1)), ("VP", Span::new(2, 2)), ("NP", Span::new(3, 3))]);
        assert_eq!(clause_spans(&s.tokens), vec![Span::new(0, 3)]);
    }

    #[test]
    fn parse_tree_round_trip() {
        let sents = parse_syntax(SAMPLE).unwrap();
        let root = sents[0].parse.as_ref().unwrap();
        assert_eq!(root.label, "S");
        assert_eq!(root.children.len(), 2);
        assert_eq!(root.children[1].children[0].span, Span::new(3, 3));
        let text = emit_syntax(&sents).unwrap();
        assert_eq!(parse_syntax(&text).unwrap(), sents);
        assert_eq!(text, format!("{SAMPLE}\n"));
    }

    #[test]
    fn parse_column_optional() {
        let text = "a DT B-NP (S* O\nb NN I-NP *S) O\n";
        let s = &parse_syntax(text).unwrap()[0];
        assert!(s.parse.is_none());
        assert_eq!(emit_syntax(&[s.clone()]).unwrap(), format!("{text}\n"));
    }

    #[test]
    fn malformed_inputs() {
        assert_eq!(parse_syntax("a DT I-NP * O\n").unwrap_err().line(), Some(1));
        assert_eq!(parse_syntax("a DT B-NP (S* O\nb NN O * O\n").unwrap_err().line(), Some(1));
        assert_eq!(parse_syntax("a DT B-NP * O (S*\nb NN O * O *))\n").unwrap_err().line(), Some(2));
        assert_eq!(parse_syntax("a DT B-NP * O (S(NP*\nb NN O * O *)\n").unwrap_err().line(), Some(1));
        assert!(parse_syntax("a DT B-NP * O (NP*)\nb NN O * O (NP*)\n").is_err());
    }
}
