//! Reading trees and taxon maps.

use std::path::Path;

use treebridge::treespace::{newick_labels, parse_newick, summarize, DatasetSummary};
use treebridge::{TaxonSet, Tree};

use crate::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_taxa(path: &Path) -> Result<TaxonSet, CliError> {
    TaxonSet::from_map_text(&read_text(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Taxa from a map file if given, else from the labels of `newick`.
pub fn taxa_for(taxa_path: Option<&str>, newick: &str) -> Result<TaxonSet, CliError> {
    match taxa_path {
        Some(p) => load_taxa(Path::new(p)),
        None => {
            let labels = newick_labels(newick).map_err(|e| CliError::Input(e.to_string()))?;
            TaxonSet::from_unordered(&labels).map_err(|e| CliError::Input(e.to_string()))
        }
    }
}

/// A tree given inline or, with a leading `@`, as a file holding one Newick string.
pub fn tree_text(arg: &str) -> Result<String, CliError> {
    match arg.strip_prefix('@') {
        Some(p) => Ok(read_text(Path::new(p))?.trim().to_string()),
        None => Ok(arg.to_string()),
    }
}

pub fn parse_tree(text: &str, taxa: &TaxonSet, what: &str) -> Result<Tree, CliError> {
    parse_newick(text, taxa).map_err(|e| CliError::Input(format!("{what}: {e}")))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses one Newick tree per line on a shared taxon set; errors carry line numbers.
pub fn parse_dataset(text: &str, taxa: Option<&TaxonSet>) -> Result<Vec<Tree>, CliError> {
    let mut lines = data_lines(text).peekable();
    let Some(&(_, first)) = lines.peek() else {
        return Err(CliError::Input("dataset is empty".into()));
    };
    let taxa = match taxa {
        Some(t) => t.clone(),
        None => taxa_for(None, first).map_err(|e| CliError::Input(format!("line 1: {e}")))?,
    };
    lines
        .map(|(n, l)| parse_newick(l, &taxa).map_err(|e| CliError::Input(format!("line {n}: {e}"))))
        .collect()
}

pub fn load_dataset(path: &Path, taxa_path: Option<&str>) -> Result<(Vec<Tree>, DatasetSummary), CliError> {
    let taxa = taxa_path.map(|p| load_taxa(Path::new(p))).transpose()?;
    let trees = parse_dataset(&read_text(path)?, taxa.as_ref())
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let summary = summarize(&trees);
    Ok((trees, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_parsing() {
        let text = "((a,b):1,c,d);\n\n# skip\n((a,c):2,b,d);\n";
        let t = parse_dataset(text, None).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].taxa().labels(), ["a", "b", "c", "d"]);
        let err = parse_dataset("((a,b):1,c,d);\n((a,b):1,c,e);\n", None).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(parse_dataset("\n  \n", None).is_err());
    }

    #[test]
    fn identical_trees_summary() {
        let text = "((a,b):1,c,(d,e):0.5);\n".repeat(6);
        let s = summarize(&parse_dataset(&text, None).unwrap());
        assert_eq!((s.n, s.distinct_topologies, s.modal_count, s.distinct_splits), (6, 1, 6, 2));
    }
}
