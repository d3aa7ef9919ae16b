//! Starts the HTTP session API on the bundled worlds.
//!
//!     cargo run --release --example serve [port]
//!
//! Then, for example:
//!
//!     curl -X POST localhost:8080/sessions
//!     curl -X POST localhost:8080/sessions/<id>/command -d '{"text":"pickup the sphere"}'
//!     curl -X POST localhost:8080/sessions/<id>/step

use groundsmith::bundled::{library, world_by_id, WORLD_IDS};
use groundsmith::service::{serve, ServiceConfig, WorldEntry};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let port: u16 = std::env::args().nth(1).map_or(Ok(8080), |p| p.parse())?;
    let entry = |id: &str| {
        let (w, l) = world_by_id(id).expect("bundled id");
        WorldEntry::new(w, l)
    };
    let mut config = ServiceConfig::new("toy_4x1".into(), entry("toy_4x1")?, library());
    for id in WORLD_IDS.into_iter().skip(1) {
        config.worlds.insert(id.into(), entry(id)?);
    }
    serve(config, port).await?;
    Ok(())
}
