//! Embed raw text with the hashed toy embedder, check it against the corpus
//! and round-trip the bank through its binary form.

use stack_order::corpus::{parse_corpus, validate_bank, EmbeddingBank, NodeRole};
use stack_order::embed::toy_embed;

const CORPUS: &str = r#"{"doc_id":"morning","split":"train","sentences":["Sam woke up late.","He skipped breakfast.","He ran to the bus stop.","The bus had already left."]}
{"doc_id":"cake","split":"val","sentences":["Ana bought flour and eggs.","She baked a cake.","Her friends ate it all."]}
"#;

fn main() -> stack_order::Result<()> {
    let docs = parse_corpus(CORPUS)?;
    let bank = toy_embed(&docs, 16, 7)?;
    let report = validate_bank(&docs, &bank);
    println!("validation ok: {}", report.ok());

    let bytes = bank.to_bytes();
    let back = EmbeddingBank::from_bytes(&bytes)?;
    println!("{} bytes, round trip equal: {}", bytes.len(), back == bank);

    for (id, record) in bank.iter() {
        let counts: Vec<String> = NodeRole::ALL
            .iter()
            .map(|&r| format!("{}={}", r.name(), record.count(r)))
            .collect();
        println!("{id}: {} vectors ({})", record.total_vectors(), counts.join(", "));
    }
    Ok(())
}
