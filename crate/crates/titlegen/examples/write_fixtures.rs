//! Regenerates the bundled corpora: `cargo run --example write_fixtures [DIR]`.

use std::path::PathBuf;

fn main() -> Result<(), titlegen::AppError> {
    let dir = std::env::args_os().nth(1).map_or_else(|| PathBuf::from("fixtures"), PathBuf::from);
    for (name, posts) in titlegen::fixtures::bundled() {
        titlegen::jsonl::write(&dir.join(name), &posts)?;
        println!("{} posts -> {}", posts.len(), dir.join(name).display());
    }
    Ok(())
}
