use std::collections::{BTreeSet, HashMap};

use super::lexer::{tokenize, Tok, Token};
use super::{ConcernEntry, Disposition, Relevance, SpecDocument, Status, FORMAT_VERSION};
use crate::catalog::{Catalog, ConcernId, PerspectiveId, RoleCode};
use crate::diagnostics::{Code, Finding, Span};

/// Parses `.psml` source against `catalog`.
///
/// Any error-level finding means no document is returned; the parser keeps
/// going after each error so that all of them are reported at once.
pub fn parse_spec(source: &str, catalog: &Catalog) -> Result<SpecDocument, Vec<Finding>> {
    let mut p = Parser {
        tokens: tokenize(source),
        pos: 0,
        catalog,
        findings: Vec::new(),
    };
    let doc = p.document();
    if p.findings.is_empty() {
        Ok(doc)
    } else {
        let mut findings = p.findings;
        // Stable by position: the order a reader fixes them in.
        findings.sort_by_key(|f| f.span.map(|s| s.start));
        findings.dedup();
        Err(findings)
    }
}

/// Parse failure already recorded; the caller should resynchronize.
struct Recover;

type PResult<T> = Result<T, Recover>;

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    catalog: &'a Catalog,
    findings: Vec<Finding>,
}

/// Word shaped like a concern id: one ASCII uppercase letter then digits.
fn looks_like_concern(word: &str) -> bool {
    let mut chars = word.chars();
    chars.next().is_some_and(|c| c.is_ascii_uppercase())
        && !chars.as_str().is_empty()
        && chars.all(|c| c.is_ascii_digit())
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    /// Start of a block header or an entry line.
    fn at_sync(&self) -> bool {
        let t = self.peek();
        match &t.tok {
            Tok::Eof => true,
            Tok::LBracket => t.line_start,
            Tok::Word(w) => t.line_start && looks_like_concern(w),
            _ => false,
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.bump();
        }
    }

    fn recover(&mut self) {
        while !self.at_sync() {
            self.bump();
        }
    }

    fn error(&mut self, code: Code, span: Span, message: impl Into<String>) {
        self.findings.push(Finding::new(code, message).with_span(span));
    }

    fn unexpected<T>(&mut self, expected: &str) -> PResult<T> {
        let t = self.peek().clone();
        let message = match &t.tok {
            Tok::Error(msg) => msg.clone(),
            other => format!("expected {expected}, found {}", other.describe()),
        };
        self.error(Code::E004, t.span, message);
        Err(Recover)
    }

    fn expect_word(&mut self, expected: &str) -> PResult<(String, Span)> {
        match &self.peek().tok {
            Tok::Word(w) => {
                let w = w.clone();
                let span = self.bump().span;
                Ok((w, span))
            }
            _ => self.unexpected(expected),
        }
    }

    fn expect_str(&mut self, expected: &str) -> PResult<String> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.unexpected(expected),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> PResult<Span> {
        if self.peek().tok == tok {
            Ok(self.bump().span)
        } else {
            self.unexpected(expected)
        }
    }

    fn end_of_line(&mut self) -> PResult<()> {
        match self.peek().tok {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => self.unexpected("end of line"),
        }
    }

    fn document(&mut self) -> SpecDocument {
        self.skip_newlines();
        let (format_version, project_name) = match self.header() {
            Ok(h) => h,
            Err(Recover) => {
                self.recover();
                (FORMAT_VERSION, String::new())
            }
        };
        let mut doc = SpecDocument {
            format_version,
            project_name,
            entries: Vec::new(),
        };
        let mut block: Option<Option<PerspectiveId>> = None;
        let mut seen: HashMap<ConcernId, Span> = HashMap::new();

        loop {
            self.skip_newlines();
            if self.at_eof() {
                break;
            }
            let t = self.peek().clone();
            let start = self.pos;
            let step = match &t.tok {
                Tok::LBracket if t.line_start => self.block_header().map(|p| {
                    block = Some(p);
                }),
                Tok::Word(w) if t.line_start && looks_like_concern(w) => {
                    self.entry(block, &mut seen).map(|e| {
                        if let Some(e) = e {
                            doc.entries.push(e);
                        }
                    })
                }
                _ => self.unexpected("a [perspective] block or a concern entry"),
            };
            if step.is_err() {
                // Guarantee progress when the failing token is itself a sync point.
                if self.pos == start {
                    self.bump();
                }
                self.recover();
            }
        }
        doc
    }

    fn header(&mut self) -> PResult<(u32, String)> {
        let (kw, span) = match &self.peek().tok {
            Tok::Word(_) => self.expect_word("header")?,
            _ => {
                let span = self.peek().span;
                self.error(
                    Code::E004,
                    span,
                    "missing header: expected `perspecml 1` followed by `project \"name\"`",
                );
                return Err(Recover);
            }
        };
        if kw != "perspecml" {
            self.error(
                Code::E004,
                span,
                format!("malformed header: expected `perspecml`, found {kw:?}"),
            );
            return Err(Recover);
        }
        let (version, vspan) = self.expect_word("format version")?;
        let version = match version.parse::<u32>() {
            Ok(v) if v == FORMAT_VERSION => v,
            _ => {
                self.error(
                    Code::E004,
                    vspan,
                    format!("unsupported format version {version:?}; expected {FORMAT_VERSION}"),
                );
                return Err(Recover);
            }
        };
        self.end_of_line()?;
        self.skip_newlines();
        let (kw, span) = self.expect_word("`project`")?;
        if kw != "project" {
            self.error(
                Code::E004,
                span,
                format!("malformed header: expected `project`, found {kw:?}"),
            );
            return Err(Recover);
        }
        let name = self.expect_str("quoted project name")?;
        self.end_of_line()?;
        Ok((version, name))
    }

    fn block_header(&mut self) -> PResult<Option<PerspectiveId>> {
        self.bump();
        let (name, span) = self.expect_word("perspective name")?;
        self.expect(Tok::RBracket, "']'")?;
        self.end_of_line()?;
        match name.parse::<PerspectiveId>() {
            Ok(p) => Ok(Some(p)),
            Err(_) => {
                self.error(
                    Code::E004,
                    span,
                    format!(
                        "unknown perspective block {name:?}; expected one of objectives, ux, infrastructure, model, data"
                    ),
                );
                // Entries under an unknown block are still checked.
                Ok(None)
            }
        }
    }

    fn entry(
        &mut self,
        block: Option<Option<PerspectiveId>>,
        seen: &mut HashMap<ConcernId, Span>,
    ) -> PResult<Option<ConcernEntry>> {
        let (raw, id_span) = self.expect_word("concern id")?;
        let mut valid = true;
        let id = match raw.parse::<ConcernId>() {
            Ok(id) if self.catalog.contains(id) => Some(id),
            _ => {
                self.findings.push(
                    Finding::new(Code::E001, format!("unknown concern id {raw:?}"))
                        .with_span(id_span),
                );
                valid = false;
                None
            }
        };
        match (block, id) {
            (None, _) => {
                self.error(
                    Code::E004,
                    id_span,
                    "entry appears before any [perspective] block",
                );
                valid = false;
            }
            (Some(Some(p)), Some(id)) if id.perspective() != p => {
                self.findings.push(
                    Finding::new(
                        Code::E002,
                        format!(
                            "{id} is in the [{p}] block, but {} belongs to perspective {}",
                            id.perspective().prefix(),
                            id.perspective()
                        ),
                    )
                    .with_concern(id)
                    .with_span(id_span),
                );
                valid = false;
            }
            _ => {}
        }
        if let Some(id) = id {
            if let Some(first) = seen.get(&id) {
                self.findings.push(
                    Finding::new(
                        Code::E003,
                        format!("duplicate entry for {id}; first entry at {}", first.start),
                    )
                    .with_concern(id)
                    .with_span(id_span),
                );
                valid = false;
            } else {
                seen.insert(id, id_span);
            }
        }

        let disposition = self.disposition()?;
        let end = self.tokens[self.pos.saturating_sub(1)].span.end;
        self.end_of_line()?;
        Ok(match (valid, id) {
            (true, Some(concern)) => Some(ConcernEntry {
                concern,
                disposition,
                span: Some(Span::new(id_span.start, end)),
            }),
            _ => None,
        })
    }

    fn disposition(&mut self) -> PResult<Disposition> {
        let (word, span) = self.expect_word("relevance (desirable, important, essential) or n/a")?;
        if word == "n/a" {
            let reason = match &self.peek().tok {
                Tok::Word(w) if w == "because" => {
                    self.bump();
                    Some(self.expect_str("quoted reason after `because`")?)
                }
                _ => None,
            };
            return Ok(Disposition::NotApplicable { reason });
        }
        let Ok(relevance) = word.parse::<Relevance>() else {
            self.error(
                Code::E004,
                span,
                format!("expected relevance (desirable, important, essential) or n/a, found {word:?}"),
            );
            return Err(Recover);
        };
        let mut experimental_override = None;
        if matches!(&self.peek().tok, Tok::Word(w) if w == "experimental") {
            self.bump();
            experimental_override = Some(true);
        }
        let mut spec_text = String::new();
        let mut by = BTreeSet::new();
        let mut status = Status::Draft;
        if self.peek().tok == Tok::LBrace {
            self.attrs(
                &mut spec_text,
                &mut by,
                &mut status,
                &mut experimental_override,
            )?;
        }
        Ok(Disposition::Applicable {
            relevance,
            spec_text,
            by,
            status,
            experimental_override,
        })
    }

    fn attrs(
        &mut self,
        spec_text: &mut String,
        by: &mut BTreeSet<RoleCode>,
        status: &mut Status,
        experimental: &mut Option<bool>,
    ) -> PResult<()> {
        let open = self.bump().span;
        let mut keys: Vec<String> = Vec::new();
        let flag_set = experimental.is_some();
        loop {
            self.skip_newlines();
            if self.peek().tok == Tok::RBrace {
                self.bump();
                return Ok(());
            }
            if self.at_sync() {
                self.error(Code::E004, open, "unclosed '{' in entry attributes");
                return Err(Recover);
            }
            let (key, key_span) = self.expect_word("attribute name (by, spec, status)")?;
            if keys.contains(&key) {
                self.error(Code::E004, key_span, format!("attribute {key:?} given twice"));
                return Err(Recover);
            }
            self.expect(Tok::Colon, "':' after attribute name")?;
            match key.as_str() {
                "by" => {
                    loop {
                        let (code, span) = self.expect_word("role code")?;
                        match code.parse::<RoleCode>() {
                            Ok(c) => {
                                by.insert(c);
                            }
                            Err(_) => {
                                self.error(
                                    Code::E004,
                                    span,
                                    format!(
                                        "unknown role code {code:?}; expected BO, DE, DG, SE, DS or RE"
                                    ),
                                );
                                return Err(Recover);
                            }
                        }
                        // A comma either continues the role list or separates
                        // attributes; role codes and attribute names are disjoint.
                        if self.peek().tok == Tok::Comma {
                            let next = &self.tokens[self.pos + 1].tok;
                            if matches!(next, Tok::Word(w) if w.parse::<RoleCode>().is_ok()) {
                                self.bump();
                                continue;
                            }
                        }
                        break;
                    }
                }
                "spec" => *spec_text = self.expect_str("quoted specification text")?,
                "status" => {
                    let (word, span) = self.expect_word("status (draft, refined, approved)")?;
                    match word.parse() {
                        Ok(s) => *status = s,
                        Err(_) => {
                            self.error(
                                Code::E004,
                                span,
                                format!("expected status draft, refined or approved, found {word:?}"),
                            );
                            return Err(Recover);
                        }
                    }
                }
                "experimental" => {
                    let (word, span) = self.expect_word("true or false")?;
                    let value = match word.as_str() {
                        "true" => true,
                        "false" => false,
                        _ => {
                            self.error(
                                Code::E004,
                                span,
                                format!("expected true or false, found {word:?}"),
                            );
                            return Err(Recover);
                        }
                    };
                    if flag_set {
                        self.error(
                            Code::E004,
                            key_span,
                            "experimental given both as keyword and attribute",
                        );
                        return Err(Recover);
                    }
                    *experimental = Some(value);
                }
                _ => {
                    self.error(
                        Code::E004,
                        key_span,
                        format!("unknown attribute {key:?}; expected by, spec or status"),
                    );
                    return Err(Recover);
                }
            }
            keys.push(key);
            if self.peek().tok == Tok::Comma {
                self.bump();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::Position;

    fn cat() -> &'static Catalog {
        Catalog::builtin()
    }

    const HEADER: &str = "perspecml 1\nproject \"Demo\"\n";

    fn parse(body: &str) -> Result<SpecDocument, Vec<Finding>> {
        parse_spec(&format!("{HEADER}{body}"), cat())
    }

    fn errs(body: &str) -> Vec<(Code, u32)> {
        parse(body)
            .unwrap_err()
            .into_iter()
            .map(|f| (f.code, f.span.unwrap().start.line))
            .collect()
    }

    #[test]
    fn minimal_entry() {
        let d = parse("[model]\nM5 essential { spec: \"F1 ≥ 0.8 on holdout\" }\n").unwrap();
        assert_eq!(d.project_name, "Demo");
        assert_eq!(d.entries.len(), 1);
        let e = &d.entries[0];
        assert_eq!(e.concern.to_string(), "M5");
        assert_eq!(e.relevance(), Some(Relevance::Essential));
        assert_eq!(e.disposition.spec_text(), Some("F1 ≥ 0.8 on holdout"));
        assert_eq!(e.span.unwrap().start, Position::new(4, 1));
    }

    #[test]
    fn wrong_perspective_block() {
        let f = parse("[model]\nU3 important { spec: \"x\" }\n").unwrap_err();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].code, Code::E002);
        assert_eq!(f[0].span.unwrap().start, Position::new(4, 1));
        assert!(f[0].message.contains("U belongs to perspective ux"), "{}", f[0].message);
    }

    #[test]
    fn duplicate_entry_flags_the_second() {
        assert_eq!(
            errs("[objectives]\nO1 essential\nO1 desirable\n"),
            vec![(Code::E003, 5)]
        );
    }

    #[test]
    fn unknown_ids() {
        assert_eq!(
            errs("[model]\nM99 essential\nZ9 important\nM1 important\n"),
            vec![(Code::E001, 4), (Code::E001, 5)]
        );
    }

    #[test]
    fn malformed_pieces_all_reported() {
        let got = errs(
            "[model]\nM1 crucial\nM2 essential { status: done }\nM3 essential { colour: \"x\" }\nM4 essential { by: XX }\nM5 essential extra\n[nowhere]\nM6 essential\n",
        );
        assert_eq!(
            got,
            vec![
                (Code::E004, 4),
                (Code::E004, 5),
                (Code::E004, 6),
                (Code::E004, 7),
                (Code::E004, 8),
                (Code::E004, 9),
            ]
        );
    }

    #[test]
    fn header_errors() {
        let f = parse_spec("[model]\nM1 essential\n", cat()).unwrap_err();
        assert_eq!(f[0].code, Code::E004);
        assert!(f[0].message.contains("missing header"));
        let f = parse_spec("perspecml 2\nproject \"x\"\n", cat()).unwrap_err();
        assert!(f[0].message.contains("unsupported format version"));
        let f = parse_spec("perspecml 1\nproject x\n[model]\nM1 essential\n", cat()).unwrap_err();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].span.unwrap().start.line, 2);
    }

    #[test]
    fn recovery_after_unclosed_brace() {
        let got = errs("[model]\nM1 essential {\n  spec: \"a\"\nM2 important\nM3 essential { status: nope }\n");
        assert_eq!(got, vec![(Code::E004, 4), (Code::E004, 7)]);
    }

    #[test]
    fn full_entry_forms() {
        let d = parse(
            "# comment\n[objectives]\nO1 essential experimental {\n  by: BO, DE, RE,\n  spec: \"\"\"multi\nline\"\"\",\n  status: approved\n}\nO2 n/a because \"out of scope\"\nO3 n/a # trailing comment\n[model]\nM1 important { experimental: false }\n",
        )
        .unwrap();
        assert_eq!(d.entries.len(), 4);
        match &d.entries[0].disposition {
            Disposition::Applicable {
                relevance,
                spec_text,
                by,
                status,
                experimental_override,
            } => {
                assert_eq!(*relevance, Relevance::Essential);
                assert_eq!(spec_text, "multi\nline");
                assert_eq!(
                    by.iter().copied().collect::<Vec<_>>(),
                    vec![RoleCode::BO, RoleCode::DE, RoleCode::RE]
                );
                assert_eq!(*status, Status::Approved);
                assert_eq!(*experimental_override, Some(true));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            d.entries[1].disposition,
            Disposition::not_applicable(Some("out of scope"))
        );
        assert_eq!(d.entries[2].disposition, Disposition::not_applicable(None));
        assert!(matches!(
            d.entries[3].disposition,
            Disposition::Applicable {
                experimental_override: Some(false),
                ..
            }
        ));
    }

    #[test]
    fn single_line_attrs_with_commas() {
        let d = parse("[data]\nD1 desirable { by: DS, DE, spec: \"warehouse\", status: refined }\n")
            .unwrap();
        match &d.entries[0].disposition {
            Disposition::Applicable { by, status, .. } => {
                assert_eq!(by.len(), 2);
                assert_eq!(*status, Status::Refined);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn crlf_input() {
        let d = parse_spec("perspecml 1\r\nproject \"W\"\r\n[ux]\r\nU1 important\r\n", cat()).unwrap();
        assert_eq!(d.entries.len(), 1);
    }

    #[test]
    fn stray_tokens_are_errors() {
        let got = errs("[model]\n  } essential\nM1 essential\n");
        assert_eq!(got, vec![(Code::E004, 4)]);
    }

    #[test]
    fn empty_document() {
        let d = parse_spec(HEADER, cat()).unwrap();
        assert!(d.entries.is_empty());
    }
}
