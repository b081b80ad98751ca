//! `dsage serve`. Settings come from defaults, then the config file, then
//! `DSAGE_*` variables, then flags.

use std::io::Write;

use dsage_service::{app, ctrl_c, open_store, Config};

use crate::failure::{Failure, Outcome};
use crate::ServeArgs;

fn config(args: ServeArgs) -> Result<Config, Failure> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path.display(), e))?;
            Config::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => Config::default(),
    };
    config
        .apply_env(std::env::vars())
        .map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(listen) = args.listen {
        config.listen = listen
            .parse()
            .map_err(|e| Failure::Usage(format!("--listen `{listen}`: {e}")))?;
    }
    if let Some(store) = args.store {
        config.store = store;
    }
    if let Some(origin) = args.cors_origin {
        config.cors_origin = Some(origin);
    }
    Ok(config)
}

pub fn serve(args: ServeArgs) -> Outcome {
    let config = config(args)?;
    let store = open_store(&config.store).map_err(|e| Failure::io(config.store.display(), e))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::io("runtime", e))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(config.listen)
            .await
            .map_err(|e| Failure::io(format!("bind {}", config.listen), e))?;
        let addr = listener.local_addr().map_err(|e| Failure::io("listener", e))?;
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        dsage_service::serve(listener, app(store, config.cors_origin.as_deref()), ctrl_c())
            .await
            .map_err(|e| Failure::io("server", e))
    })
}
