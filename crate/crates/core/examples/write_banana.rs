//! Writes the procedural banana base mesh used by the sample configuration.
//!
//! Usage: cargo run -p latticepose --example write_banana -- data/banana.obj

use latticepose::geometry::obj::write_obj;
use latticepose::shapes;

fn main() -> latticepose::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "banana.obj".into());
    let mesh = shapes::banana(24, 16);
    write_obj(&path, &mesh)?;
    println!("wrote {path}: {} vertices, {} faces", mesh.len(), mesh.faces().len());
    Ok(())
}
