use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use outfit_core::catalog::{load_catalog, Catalog};
use outfit_core::config::EngineConfig;
use outfit_core::embedding::SyntheticProvider;
use outfit_core::Engine;
use outfit_service::{router, AppState};

#[derive(Parser)]
#[command(name = "outfit-service", about = "Serve outfit recommendations over HTTP")]
struct Cli {
    /// Engine configuration (TOML); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog as JSON lines. Starts empty when omitted.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// State file for ingested items, user profiles and the cache.
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
}

fn build(cli: &Cli) -> Result<AppState, String> {
    let config = match &cli.config {
        Some(p) => EngineConfig::from_file(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => EngineConfig::default(),
    };
    let catalog = match &cli.catalog {
        Some(p) => {
            let provider = SyntheticProvider::new(config.embedding.synthetic_seed);
            load_catalog(p, &provider).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => Catalog::new(),
    };
    let engine = Engine::with_synthetic(config, catalog).map_err(|e| e.to_string())?;
    match &cli.state {
        Some(p) => AppState::open(engine, p.clone()).map_err(|e| e.to_string()),
        None => Ok(AppState::new(engine, None)),
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    let state = match build(&cli) {
        Ok(s) => Arc::new(s),
        Err(e) => {
            eprintln!("outfit-service: {e}");
            return ExitCode::from(2);
        }
    };
    let listener = match tokio::net::TcpListener::bind(cli.addr).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("outfit-service: bind {}: {e}", cli.addr);
            return ExitCode::from(1);
        }
    };
    eprintln!("outfit-service: listening on {}", cli.addr);
    let app = router(Arc::clone(&state));
    let served = axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    // Anonymous cache fills are only written with the next mutation; flush
    // them on the way out.
    if let Err(e) = state.persist().await {
        eprintln!("outfit-service: {}", e.message);
    }
    match served {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("outfit-service: {e}");
            ExitCode::from(1)
        }
    }
}
