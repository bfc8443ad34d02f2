use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::mpsc::{self, TryRecvError};
use std::thread;
use std::time::{Duration, Instant};

use crate::control::Variant;
use crate::engine::write_log;
use crate::error::{Error, Result};
use crate::harness::Scenario;

use super::protocol::{encode, parse_client_line, ServerMessage};
use super::session::Session;

/// Telemetry rate in snapshots per simulated second.
pub const TELEMETRY_HZ: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub variant: Variant,
    pub seed: u64,
    /// Simulated seconds per wall-clock second.
    pub realtime_factor: f64,
    /// Stop after this many client sessions; `None` serves forever.
    pub max_sessions: Option<usize>,
    /// Where to write each session's decision log and command recording.
    pub record_dir: Option<PathBuf>,
}

pub fn serve(scenario: &Scenario, port: u16, opts: &ServeOptions) -> Result<()> {
    let listener = TcpListener::bind(("127.0.0.1", port))?;
    serve_on(listener, scenario, opts)
}

/// Serves one client at a time on an already bound listener.
pub fn serve_on(listener: TcpListener, scenario: &Scenario, opts: &ServeOptions) -> Result<()> {
    if !(opts.realtime_factor > 0.0 && opts.realtime_factor.is_finite()) {
        return Err(Error::Protocol("realtime factor must be positive".into()));
    }
    for (served, stream) in listener.incoming().enumerate() {
        let session = run_connection(stream?, scenario, opts)?;
        if let Some(dir) = &opts.record_dir {
            save_session(dir, served, &session)?;
        }
        if opts.max_sessions.is_some_and(|m| served + 1 >= m) {
            break;
        }
    }
    Ok(())
}

fn save_session(dir: &std::path::Path, index: usize, session: &Session) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let log_path = dir.join(format!("session_{index}.jsonl"));
    let mut buf = Vec::new();
    write_log(session.log(), &mut buf)?;
    std::fs::write(&log_path, buf).map_err(|e| Error::io(&log_path, e))?;
    let rec_path = dir.join(format!("session_{index}.recording.json"));
    let json = serde_json::to_vec_pretty(&session.recording())?;
    std::fs::write(&rec_path, json).map_err(|e| Error::io(&rec_path, e))
}

fn send(out: &mut impl Write, msg: &ServerMessage) -> bool {
    out.write_all(encode(msg).as_bytes()).is_ok()
}

/// Runs a session until the client disconnects. Reception happens on a
/// separate thread; this thread owns the session and does all writes.
fn run_connection(stream: TcpStream, scenario: &Scenario, opts: &ServeOptions) -> Result<Session> {
    let mut session = Session::new(scenario.clone(), opts.variant, opts.seed)?;
    let reader = stream.try_clone()?;
    let mut out = BufWriter::new(stream);
    let (tx, rx) = mpsc::channel::<String>();
    thread::spawn(move || {
        for line in BufReader::new(reader).lines() {
            let Ok(line) = line else { break };
            if tx.send(line).is_err() {
                break;
            }
        }
    });

    let dt = session.engine().config().dt;
    let period = Duration::from_secs_f64(dt / opts.realtime_factor);
    let every = ((1.0 / TELEMETRY_HZ) / dt).round().max(1.0) as u64;
    let mut alive = send(&mut out, &session.hello()) && out.flush().is_ok();
    let mut next = Instant::now();
    let mut iteration = 0u64;
    while alive {
        loop {
            match rx.try_recv() {
                Ok(line) if line.trim().is_empty() => {}
                Ok(line) => {
                    let replies = match parse_client_line(&line) {
                        Ok(env) => session.handle(env.seq, env.message),
                        Err((seq, reason)) => vec![ServerMessage::Error { seq, reason }],
                    };
                    for r in &replies {
                        alive &= send(&mut out, r);
                    }
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => {
                    alive = false;
                    break;
                }
            }
        }
        if !alive {
            break;
        }
        session.step();
        if iteration.is_multiple_of(every) {
            let snap = session.snapshot();
            alive &= send(&mut out, &ServerMessage::Telemetry(snap));
        }
        alive &= out.flush().is_ok();
        iteration += 1;
        next += period;
        let now = Instant::now();
        if next > now {
            thread::sleep(next - now);
        } else {
            next = now;
        }
    }
    Ok(session)
}
