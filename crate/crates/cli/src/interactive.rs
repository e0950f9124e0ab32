use std::collections::BTreeSet;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use perspecml_core::analysis::coverage;
use perspecml_core::catalog::{Catalog, Direction, RoleCode};
use perspecml_core::session::{Decision, LogWriter, Prompt, Session};
use perspecml_core::specformat::{serialize_spec, Relevance, SpecDocument, Status};
use perspecml_core::Finding;
use serde_json::json;

const HELP: &str = "\
commands:
  <desirable|important|essential> [by=BO,DS] [status=draft|refined|approved] [experimental[=false]] TEXT
  n/a [REASON]
  skip
  revisit ID
  export FILE
  status
  quit";

#[derive(Debug, PartialEq)]
pub enum Command {
    Decide(Decision),
    Revisit(String),
    Export(String),
    Status,
    Help,
    Quit,
}

pub fn parse_command(line: &str) -> Result<Command, String> {
    let line = line.trim();
    let (head, rest) = line
        .split_once(char::is_whitespace)
        .map_or((line, ""), |(h, r)| (h, r.trim_start()));
    match head {
        "skip" if rest.is_empty() => Ok(Command::Decide(Decision::Skip)),
        "n/a" => Ok(Command::Decide(Decision::NotApplicable {
            reason: (!rest.is_empty()).then(|| rest.to_owned()),
        })),
        "revisit" if !rest.is_empty() => Ok(Command::Revisit(rest.to_owned())),
        "export" if !rest.is_empty() => Ok(Command::Export(rest.to_owned())),
        "status" => Ok(Command::Status),
        "help" | "?" => Ok(Command::Help),
        "quit" | "exit" => Ok(Command::Quit),
        _ => {
            let relevance: Relevance = head
                .parse()
                .map_err(|_| format!("unrecognized command {head:?}; type `help`"))?;
            parse_applicable(relevance, rest)
        }
    }
}

fn parse_applicable(relevance: Relevance, mut rest: &str) -> Result<Command, String> {
    let mut by = BTreeSet::new();
    let mut status = Status::Draft;
    let mut experimental = None;
    loop {
        let (word, tail) = rest
            .split_once(char::is_whitespace)
            .map_or((rest, ""), |(w, t)| (w, t.trim_start()));
        if let Some(roles) = word.strip_prefix("by=") {
            for r in roles.split(',').filter(|r| !r.is_empty()) {
                let role: RoleCode = r.parse().map_err(|_| format!("unknown role {r:?}"))?;
                by.insert(role);
            }
        } else if let Some(s) = word.strip_prefix("status=") {
            status = s.parse().map_err(|_| format!("unknown status {s:?}"))?;
        } else if word == "experimental" || word == "experimental=true" {
            experimental = Some(true);
        } else if word == "experimental=false" {
            experimental = Some(false);
        } else {
            break;
        }
        rest = tail;
    }
    Ok(Command::Decide(Decision::Applicable {
        relevance,
        spec_text: rest.to_owned(),
        by,
        status,
        experimental_override: experimental,
    }))
}

fn open(c: &Catalog, path: &Path, project: &str, seed: Option<&SpecDocument>) -> Result<(Session, LogWriter)> {
    if path.exists() {
        if seed.is_some() {
            bail!("{} already exists; --seed only applies to a new session", path.display());
        }
        let session = Session::load(c, path).map_err(|f| anyhow::anyhow!("{f}"))?;
        let log = LogWriter::open(path).with_context(|| format!("opening {}", path.display()))?;
        Ok((session, log))
    } else {
        let session = Session::start(c, project, seed).map_err(|f| anyhow::anyhow!("{f}"))?;
        let mut log = LogWriter::create(path).with_context(|| format!("creating {}", path.display()))?;
        log.append_all(session.log())?;
        Ok((session, log))
    }
}

struct Out {
    json: bool,
}

impl Out {
    fn emit(&self, value: serde_json::Value, text: impl FnOnce() -> String) {
        let mut stdout = io::stdout().lock();
        if self.json {
            let _ = writeln!(stdout, "{value}");
        } else {
            let _ = writeln!(stdout, "{}", text());
        }
        let _ = stdout.flush();
    }

    fn error(&self, f: &Finding) {
        self.emit(json!({ "error": f }), || format!("! {f}"));
    }

    fn message(&self, m: &str) {
        self.emit(json!({ "message": m }), || m.to_owned());
    }
}

fn prompt_text(p: &Prompt) -> String {
    let mut s = format!(
        "\n[{}/{}{}] {} {}{}\n",
        p.position,
        p.total,
        if p.pass > 1 { ", pass 2" } else { "" },
        p.concern.id,
        p.concern.name,
        if p.experimental { " (experimental)" } else { "" },
    );
    s.push_str(&format!("{}: {}\n", p.perspective.display_name, p.concern.prompt));
    if let Some(t) = &p.task {
        let roles: Vec<&str> = t.suggested_roles.iter().map(|r| r.as_str()).collect();
        s.push_str(&format!("task {} {} ({})\n", t.id, t.name, roles.join(", ")));
    }
    for r in &p.related {
        let arrow = match r.direction {
            Direction::Outgoing => "->",
            Direction::Incoming => "<-",
            Direction::Undirected => "<->",
        };
        let mark = if r.addressed { "x" } else { " " };
        s.push_str(&format!(
            "  [{mark}] {arrow} {} {} ({}): {}\n",
            r.concern,
            r.name,
            r.kind.as_str(),
            r.rationale
        ));
    }
    if let Some(current) = &p.current {
        s.push_str(&format!("current: {current}\n"));
    }
    s.push_str("> ");
    s
}

fn show_prompt(out: &Out, c: &Catalog, session: &Session) {
    match session.next_prompt(c) {
        Some(p) => out.emit(json!({ "prompt": p }), || prompt_text(&p)),
        None => {
            let cov = coverage(c, session.document());
            out.emit(json!({ "done": true, "coverage": cov }), || {
                format!("session complete\n{cov}")
            });
        }
    }
}

pub fn run(c: &Catalog, path: &Path, project: &str, seed: Option<&SpecDocument>, json: bool) -> Result<u8> {
    let (mut session, mut log) = open(c, path, project, seed)?;
    let out = Out { json };
    show_prompt(&out, c, &session);
    for line in io::stdin().lock().lines() {
        let line = line?;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let command = match parse_command(&line) {
            Ok(cmd) => cmd,
            Err(m) => {
                out.emit(json!({ "error": { "code": "usage", "message": m } }), || format!("! {m}"));
                continue;
            }
        };
        let event = match command {
            Command::Quit => break,
            Command::Help => {
                out.message(HELP);
                continue;
            }
            Command::Status => {
                let cov = coverage(c, session.document());
                out.emit(json!({ "session": session.state(), "coverage": cov }), || cov.to_string());
                continue;
            }
            Command::Export(file) => {
                fs::write(&file, serialize_spec(session.document()))
                    .with_context(|| format!("writing {file}"))?;
                out.emit(json!({ "exported": file }), || format!("wrote {file}"));
                continue;
            }
            Command::Revisit(id) => session.plan_revisit(&id),
            Command::Decide(decision) => match session.cursor() {
                Some(concern) => session.plan_decision(concern, &decision),
                None => {
                    out.message("session complete; use `revisit ID`, `export FILE` or `quit`");
                    continue;
                }
            },
        };
        match event {
            Ok(ev) => {
                log.append(&ev)?;
                session.apply(ev).map_err(|f| anyhow::anyhow!("{f}"))?;
                show_prompt(&out, c, &session);
            }
            Err(f) => out.error(&f),
        }
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_applicable_with_options() {
        let cmd = parse_command("important by=BO,DS status=refined experimental  Accuracy above 0.9").unwrap();
        let Command::Decide(Decision::Applicable {
            relevance,
            spec_text,
            by,
            status,
            experimental_override,
        }) = cmd
        else {
            panic!("{cmd:?}");
        };
        assert_eq!(relevance, Relevance::Important);
        assert_eq!(spec_text, "Accuracy above 0.9");
        assert_eq!(by.len(), 2);
        assert_eq!(status, Status::Refined);
        assert_eq!(experimental_override, Some(true));
    }

    #[test]
    fn parses_simple_commands() {
        assert_eq!(parse_command("skip").unwrap(), Command::Decide(Decision::Skip));
        assert_eq!(
            parse_command("n/a  no users").unwrap(),
            Command::Decide(Decision::NotApplicable { reason: Some("no users".into()) })
        );
        assert_eq!(
            parse_command("n/a").unwrap(),
            Command::Decide(Decision::NotApplicable { reason: None })
        );
        assert_eq!(parse_command("revisit O2").unwrap(), Command::Revisit("O2".into()));
        assert!(parse_command("maybe text").is_err());
        assert!(parse_command("essential by=XX text").is_err());
    }
}
