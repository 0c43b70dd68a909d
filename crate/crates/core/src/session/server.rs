//! TCP transport for [`LiveSession`], one thread per client.

use std::io::{self, BufReader, BufWriter};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;

use crate::model::PointCloudModel;

use super::live::LiveSession;
use super::wire::{encode_error, encode_model, encode_state, parse_hip, read_frame, write_frame};
use super::EngineConfig;

/// Accepts clients until the listener fails.
pub fn serve(listener: TcpListener, model: Arc<PointCloudModel>, config: EngineConfig) -> io::Result<()> {
    log::info!("serving {} points on {}", model.len(), listener.local_addr()?);
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                log::warn!("accept failed: {e}");
                continue;
            }
        };
        let model = Arc::clone(&model);
        std::thread::Builder::new().name("client".into()).spawn(move || {
            let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
            match handle_client(stream, model, config) {
                Ok(()) => log::info!("client {peer} disconnected"),
                Err(e) => log::warn!("client {peer}: {e}"),
            }
        })?;
    }
    Ok(())
}

/// Runs one connection: MODEL first, then a STATE or ERROR per message.
pub fn handle_client(stream: TcpStream, model: Arc<PointCloudModel>, config: EngineConfig) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    write_frame(&mut writer, &encode_model(&model))?;
    let mut session = LiveSession::new(model, config);
    while let Some(body) = read_frame(&mut reader)? {
        let reply = match parse_hip(&body) {
            Ok(hip) => encode_state(&session.handle_hip(hip.t, hip.hip)),
            Err(e) => encode_error(&e.0),
        };
        write_frame(&mut writer, &reply)?;
    }
    Ok(())
}
