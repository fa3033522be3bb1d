//! Corpus files, embedding banks and their mutual consistency.

mod bank;
mod document;

use std::collections::HashSet;
use std::fmt;

pub use bank::{
    read_bank, write_bank, BankDims, BankRecord, EmbeddingBank, NodeRole, BANK_MAGIC, BANK_VERSION,
};
pub use document::{parse_corpus, read_corpus, write_corpus, Document, Split};

/// Vectors a document of `n` sentences needs: sentence, past and future per
/// sentence plus one global vector.
pub fn expected_vector_count(n: usize) -> usize {
    3 * n + 1
}

#[derive(Clone, Debug, PartialEq)]
pub enum Finding {
    MissingDocument(String),
    ExtraDocument(String),
    VectorCount {
        doc_id: String,
        expected: usize,
        found: usize,
    },
    NonFinite {
        doc_id: String,
        role: NodeRole,
    },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::MissingDocument(id) => write!(f, "missing from bank: `{id}`"),
            Finding::ExtraDocument(id) => write!(f, "not in corpus: `{id}`"),
            Finding::VectorCount {
                doc_id,
                expected,
                found,
            } => write!(f, "`{doc_id}`: {found} vectors, expected {expected}"),
            Finding::NonFinite { doc_id, role } => {
                write!(f, "`{doc_id}`: non-finite {} vector value", role.name())
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Cross-checks a corpus against a bank. Never fails; problems become findings.
pub fn validate_bank(corpus: &[Document], bank: &EmbeddingBank) -> ValidationReport {
    let mut findings = Vec::new();
    let ids: HashSet<&str> = corpus.iter().map(|d| d.doc_id.as_str()).collect();

    for doc in corpus {
        let Some(rec) = bank.get(&doc.doc_id) else {
            findings.push(Finding::MissingDocument(doc.doc_id.clone()));
            continue;
        };
        let n = doc.len();
        let per_role_ok = NodeRole::ALL
            .iter()
            .all(|&r| rec.count(r) == if r == NodeRole::Global { 1 } else { n });
        if !per_role_ok {
            findings.push(Finding::VectorCount {
                doc_id: doc.doc_id.clone(),
                expected: expected_vector_count(n),
                found: rec.total_vectors(),
            });
        }
        for role in NodeRole::ALL {
            if !rec.vectors(role).is_finite() {
                findings.push(Finding::NonFinite {
                    doc_id: doc.doc_id.clone(),
                    role,
                });
            }
        }
    }
    for (id, _) in bank.iter() {
        if !ids.contains(id) {
            findings.push(Finding::ExtraDocument(id.to_string()));
        }
    }
    ValidationReport { findings }
}
