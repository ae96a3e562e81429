use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use assocpin_core::session::EngineConfig;
use assocpin_service::{load_or_create_vault, router, AppState, ServiceConfig, UserStore};
use clap::Parser;

#[derive(Debug, Parser)]
#[command(version, about = "Two-layer torus PIN login service")]
struct Args {
    #[arg(long, env = "ASSOCPIN_BIND", default_value = "127.0.0.1")]
    bind: std::net::IpAddr,
    #[arg(long, env = "ASSOCPIN_PORT", default_value_t = 8080)]
    port: u16,
    /// User store, one JSON record per line.
    #[arg(long, env = "ASSOCPIN_STORE", default_value = "assocpin-users.jsonl")]
    store: PathBuf,
    /// Hex key sealing plaintext-recoverable credentials; created if missing.
    #[arg(long, env = "ASSOCPIN_KEY_FILE", default_value = "assocpin-vault.key")]
    key_file: PathBuf,
    #[arg(long, env = "ASSOCPIN_LOCKOUT", default_value_t = 5)]
    lockout_threshold: u32,
    #[arg(long, env = "ASSOCPIN_IDLE_SECS", default_value_t = 120)]
    idle_timeout_secs: u64,
    /// Largest candidate set hash-only validation will enumerate.
    #[arg(long, default_value_t = 10_000_000)]
    candidate_ceiling: u128,
    /// Deterministic tokens and boards. Never use outside tests.
    #[arg(long, env = "ASSOCPIN_TEST_SEED")]
    test_seed: Option<u64>,
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args = Args::parse();
    if args.test_seed.is_some() {
        eprintln!("warning: test seed set, tokens and boards are predictable");
    }
    let store = UserStore::open(&args.store)?;
    let vault = load_or_create_vault(&args.key_file)?;
    let config = ServiceConfig {
        lockout_threshold: args.lockout_threshold,
        idle_timeout: Duration::from_secs(args.idle_timeout_secs),
        test_seed: args.test_seed,
        engine: EngineConfig {
            candidate_ceiling: args.candidate_ceiling,
            ..EngineConfig::default()
        },
    };
    eprintln!("{} users loaded from {}", store.len(), args.store.display());
    let app = router(Arc::new(AppState::new(config, store, Some(vault))));
    let addr = SocketAddr::new(args.bind, args.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {addr}");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
