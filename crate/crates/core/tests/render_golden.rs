use std::path::PathBuf;

use perspecml_core::render::{render_diagram, render_template, DiagramOptions};
use perspecml_core::Catalog;

fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with UPDATE_GOLDEN=1)", path.display()));
    assert!(expected == actual, "{name} differs from golden file");
}

#[test]
fn diagram_matches_golden() {
    let dot = render_diagram(Catalog::builtin(), &DiagramOptions::default()).unwrap();
    golden("diagram.dot", &dot);
}

#[test]
fn template_matches_golden() {
    let md = render_template(Catalog::builtin(), None).unwrap();
    golden("template.md", &md);
}

#[test]
fn diagram_census() {
    let c = Catalog::builtin();
    let dot = render_diagram(c, &DiagramOptions::default()).unwrap();
    assert!(dot.contains("digraph perspecml {"));
    assert_eq!(dot.matches("subgraph cluster_").count(), 5);
    let nodes = dot
        .lines()
        .filter(|l| l.trim_start().starts_with("\"T-") && !l.contains(" -> "))
        .count();
    assert_eq!(nodes, 28);
    let mut ports = 0;
    for concern in c.concerns() {
        let n = dot.matches(&format!("<{}> {} ", concern.id, concern.id)).count();
        assert_eq!(n, 1, "{}", concern.id);
        ports += n;
    }
    assert_eq!(ports, 59);
    assert_eq!(dot.lines().filter(|l| l.contains(" -> ")).count(), c.relationships().len());

    let bare = render_diagram(
        c,
        &DiagramOptions {
            include_relationships: false,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(bare.lines().filter(|l| l.contains(" -> ")).count(), 0);
    assert_eq!(dot, render_diagram(c, &DiagramOptions::default()).unwrap());
}

#[test]
fn template_census() {
    let c = Catalog::builtin();
    let md = render_template(c, None).unwrap();
    let rows: Vec<&str> = md
        .lines()
        .filter(|l| l.starts_with("| ") && !l.starts_with("| Id "))
        .collect();
    assert_eq!(rows.len(), 59);
    for concern in c.concerns() {
        let prefix = format!("| {} |", concern.id);
        assert_eq!(rows.iter().filter(|r| r.starts_with(&prefix)).count(), 1);
    }
    let marked: Vec<&str> = rows
        .iter()
        .filter(|r| r.split(" | ").nth(2) == Some("E"))
        .map(|r| r[2..].split(' ').next().unwrap())
        .collect();
    assert_eq!(marked, ["M1", "D14"]);
    let headings: Vec<&str> = md.lines().filter(|l| l.starts_with("## ")).collect();
    assert_eq!(
        headings,
        ["## System objectives", "## User experience", "## Infrastructure", "## Model", "## Data"]
    );
}
