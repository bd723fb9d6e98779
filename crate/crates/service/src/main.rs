use std::net::SocketAddr;
use std::time::Duration;

use clap::Parser;
use tracing_subscriber::EnvFilter;
use vizrec_service::{router, spawn_sweeper, AppState, Config};

#[derive(Debug, Parser)]
#[command(name = "vizrec-server", version, about = "Serve vizrec sessions over HTTP")]
struct Cli {
    #[arg(long, env = "VIZREC_HOST", default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    #[arg(long, short, env = "VIZREC_PORT", default_value_t = 8080)]
    port: u16,
    #[command(flatten)]
    config: Config,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let cli = Cli::parse();
    let state = AppState::new(&cli.config);
    spawn_sweeper(state.store.clone(), Duration::from_secs(60));
    let addr = SocketAddr::new(cli.host, cli.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, ttl_secs = cli.config.ttl, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
