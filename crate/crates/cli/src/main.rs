mod interactive;

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use perspecml_core::analysis::{check, coverage, prioritize};
use perspecml_core::catalog::{load_catalog, Catalog, CatalogError, PerspectiveId};
use perspecml_core::diagnostics::{has_errors, Finding, Severity};
use perspecml_core::render::{render_diagram, render_template, DiagramOptions};
use perspecml_core::session::Session;
use perspecml_core::specformat::{escape_string, parse_spec, serialize_spec, SpecDocument};
use serde_json::json;

#[derive(Parser)]
#[command(name = "perspecml", version, about = "Perspective-based ML requirements specification toolkit")]
struct Cli {
    /// JSON file merged over the built-in catalog.
    #[arg(long, global = true, value_name = "FILE")]
    catalog_overlay: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Treat warnings as failures.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Write a skeleton specification with every concern as a comment.
    Init {
        project: String,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Parse and analyze a specification; print findings and coverage.
    Check { file: PathBuf },
    /// List applicable concerns by priority.
    Report { file: PathBuf },
    /// Render the concern diagram as DOT.
    Diagram {
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Leave out relationship edges.
        #[arg(long)]
        no_relationships: bool,
    },
    /// Render the specification template as Markdown.
    Template {
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Run or resume a guided session recorded in LOGFILE, reading commands from stdin.
    Session {
        logfile: PathBuf,
        /// Project name for a new session.
        #[arg(long)]
        project: Option<String>,
        /// Specification whose entries are taken as already decided.
        #[arg(long, value_name = "FILE")]
        seed: Option<PathBuf>,
    },
    /// Write the specification built so far by a session log.
    Export {
        logfile: PathBuf,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Print the catalog.
    Catalog,
    /// Serve the HTTP API and web board.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080", env = "PERSPECML_BIND")]
        bind: SocketAddr,
        #[arg(long, value_name = "DIR", env = "PERSPECML_DATA_DIR", default_value = "perspecml-data")]
        data: PathBuf,
        #[arg(long, value_name = "DIR", env = "PERSPECML_ASSETS_DIR")]
        assets: Option<PathBuf>,
    },
}

/// Failure carrying its own exit status.
struct Exit(u8);

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if let Some(Exit(code)) = e.downcast_ref::<Exit>() {
                return ExitCode::from(*code);
            }
            match format {
                Format::Json => println!(
                    "{}",
                    json!({ "error": { "code": "io", "message": format!("{e:#}") } })
                ),
                Format::Text => eprintln!("error: {e:#}"),
            }
            ExitCode::from(2)
        }
    }
}

impl std::fmt::Debug for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit {}", self.0)
    }
}

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit {}", self.0)
    }
}

impl std::error::Error for Exit {}

fn print_findings(format: Format, findings: &[Finding]) {
    match format {
        Format::Json => println!("{}", json!({ "findings": findings })),
        Format::Text => {
            for f in findings {
                println!("{f}");
            }
        }
    }
}

fn catalog(cli: &Cli) -> Result<Catalog> {
    let Some(path) = &cli.catalog_overlay else {
        return Ok(Catalog::builtin().clone());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match load_catalog(Some(&text)) {
        Ok(c) => Ok(c),
        Err(CatalogError::Rejected(findings)) => {
            print_findings(cli.format, &findings);
            Err(Exit(2).into())
        }
        Err(e) => bail!("{}: {e}", path.display()),
    }
}

fn read_spec(cli: &Cli, c: &Catalog, path: &Path) -> Result<SpecDocument> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_spec(&text, c).map_err(|findings| {
        print_findings(cli.format, &findings);
        Exit(1).into()
    })
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn skeleton(c: &Catalog, project: &str) -> String {
    let mut out = format!("perspecml 1\nproject {}\n", escape_string(project));
    out.push_str("# Uncomment a line and give it a relevance (desirable, important, essential)\n");
    out.push_str("# or mark it `n/a because \"...\"`.\n");
    for p in PerspectiveId::ALL {
        out.push_str(&format!("\n[{p}]\n"));
        let mut concerns: Vec<_> = c.concerns_in(p).collect();
        concerns.sort_by_key(|x| x.id);
        for concern in concerns {
            let e = if concern.experimental { " (experimental)" } else { "" };
            out.push_str(&format!(
                "# {} essential {{ spec: \"\" }}  # {}{e}: {}\n",
                concern.id,
                concern.name,
                concern.prompt.replace('\n', " ")
            ));
        }
    }
    out
}

fn run(cli: Cli) -> Result<u8> {
    let c = catalog(&cli)?;
    let format = cli.format;
    match &cli.command {
        Command::Init { project, output } => {
            let text = skeleton(&c, project);
            if let Some(path) = output {
                if path.exists() {
                    bail!("{} already exists; refusing to overwrite", path.display());
                }
            }
            write_output(output.as_deref(), &text)?;
            Ok(0)
        }
        Command::Check { file } => {
            let doc = read_spec(&cli, &c, file)?;
            let findings = check(&c, &doc);
            let cov = coverage(&c, &doc);
            match format {
                Format::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({ "findings": findings, "coverage": cov }))?
                ),
                Format::Text => {
                    for f in &findings {
                        println!("{f}");
                    }
                    println!("{cov}");
                }
            }
            let warned = findings.iter().any(|f| f.severity == Severity::Warning);
            Ok(if has_errors(&findings) || (cli.strict && warned) {
                1
            } else {
                0
            })
        }
        Command::Report { file } => {
            let doc = read_spec(&cli, &c, file)?;
            let ranked = prioritize(&c, &doc);
            match format {
                Format::Json => {
                    let rows: Vec<_> = ranked
                        .iter()
                        .map(|e| {
                            json!({
                                "concern": e.concern,
                                "name": c.concern(e.concern).map(|x| x.name.as_str()),
                                "relevance": e.relevance(),
                                "spec": e.disposition.spec_text(),
                            })
                        })
                        .collect();
                    println!("{}", serde_json::to_string_pretty(&rows)?);
                }
                Format::Text => {
                    for (i, e) in ranked.iter().enumerate() {
                        let name = c.concern(e.concern).map_or("", |x| x.name.as_str());
                        let rel = e.relevance().map_or("", |r| r.as_str());
                        let spec = e.disposition.spec_text().unwrap_or("").replace('\n', " ");
                        println!("{:>3}. {rel:<10} {:<4} {name}: {spec}", i + 1, e.concern.to_string());
                    }
                }
            }
            Ok(0)
        }
        Command::Diagram {
            spec,
            output,
            no_relationships,
        } => {
            let doc = spec.as_deref().map(|p| read_spec(&cli, &c, p)).transpose()?;
            let opts = DiagramOptions {
                include_relationships: !no_relationships,
                overlay: doc.as_ref(),
                ..Default::default()
            };
            match render_diagram(&c, &opts) {
                Ok(dot) => write_output(output.as_deref(), &dot).map(|_| 0),
                Err(f) => {
                    print_findings(format, &f);
                    Ok(1)
                }
            }
        }
        Command::Template { spec, output } => {
            let doc = spec.as_deref().map(|p| read_spec(&cli, &c, p)).transpose()?;
            match render_template(&c, doc.as_ref()) {
                Ok(md) => write_output(output.as_deref(), &md).map(|_| 0),
                Err(f) => {
                    print_findings(format, &f);
                    Ok(1)
                }
            }
        }
        Command::Session {
            logfile,
            project,
            seed,
        } => {
            let seed = seed.as_deref().map(|p| read_spec(&cli, &c, p)).transpose()?;
            let project = project.clone().unwrap_or_else(|| {
                logfile
                    .file_stem()
                    .map_or("untitled".into(), |s| s.to_string_lossy().into_owned())
            });
            interactive::run(&c, logfile, &project, seed.as_ref(), format == Format::Json)
        }
        Command::Export { logfile, output } => {
            let session = Session::load(&c, logfile).map_err(|f| {
                print_findings(format, std::slice::from_ref(&f));
                anyhow::Error::from(Exit(1))
            })?;
            write_output(output.as_deref(), &serialize_spec(session.document()))?;
            Ok(0)
        }
        Command::Catalog => {
            match format {
                Format::Json => write_output(None, &c.to_json())?,
                Format::Text => {
                    for p in PerspectiveId::ALL {
                        let persp = c.perspective(p).context("perspective missing")?;
                        println!("{} ({})", persp.display_name, persp.color);
                        for t in c.tasks_in(p) {
                            let roles: Vec<&str> = t.suggested_roles.iter().map(|r| r.as_str()).collect();
                            println!("  {} {} [{}]", t.id, t.name, roles.join(", "));
                            for id in &t.concern_ids {
                                let concern = c.concern(*id).context("concern missing")?;
                                let e = if concern.experimental { " E" } else { "" };
                                println!("    {id:<4} {}{e}", concern.name);
                            }
                        }
                    }
                }
            }
            Ok(0)
        }
        Command::Serve { bind, data, assets } => {
            let config = perspecml_server::ServerConfig {
                bind: *bind,
                data_dir: data.clone(),
                assets_dir: assets.clone(),
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(perspecml_server::run(c, config, |addr| {
                println!("listening on http://{addr}");
                let _ = io::stdout().flush();
            }))?;
            Ok(0)
        }
    }
}
