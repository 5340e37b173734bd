//! Map embeddings into a generator's input space with an affine projection,
//! and build backends from JSON config.
//!
//! cargo run --example projection

use std::sync::Arc;

use sara::assemble::Assembler;
use sara::embed::{apply_projection, EmbedBackendConfig, HashStub, ProjectionMap};
use sara::textcore::chunk_document;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // 4 -> 2, row-major out x in.
    let map = ProjectionMap::new(4, 2, vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0], vec![0.0, 0.5], "example")?;
    let stub = HashStub::with_normalization(4, false)?;
    let v = stub.embed("salt salt delta");
    println!("{:?} -> {:?}", v.values(), apply_projection(&v, &map)?.values());

    let path = std::env::temp_dir().join("sara-projection.json");
    map.save(&path)?;
    let map = ProjectionMap::load(&path)?;

    let assembler = Assembler::new(Arc::new(HashStub::new(4)?)).with_projection(Some(map));
    let chunk = chunk_document("d", "The tide rose. Salt reached the delta.", 256)?.remove(0);
    for v in assembler.compress(&chunk)? {
        println!("compressed sentence -> {:?}", v.values());
    }

    let cfg: EmbedBackendConfig = serde_json::from_str(r#"{"kind":"hash-stub","dim":8}"#)?;
    println!("backend from config: dim {}", cfg.build()?.dim());
    Ok(())
}
