//! The simulation runs on its own thread; callers talk to it through a
//! command channel and block for each reply.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{channel, Sender};
use std::sync::Arc;
use std::thread::JoinHandle;

use super::interp::{run_script, Expectation, RunTrace, RuntimeScriptError};
use super::state::{Checkpoint, WorkcellState};
use crate::wcs::WcsScript;

enum Command {
    Run {
        script: Arc<WcsScript>,
        source: Arc<str>,
        expect: Option<Expectation>,
        reply: Sender<Result<RunTrace, RuntimeScriptError>>,
    },
    Snapshot(Sender<WorkcellState>),
    Checkpoint(String, Sender<Checkpoint>),
    Restore(Checkpoint, Sender<()>),
    Stop,
}

/// Owner of the live simulation thread. Stopping is idempotent from the
/// outside: `stop` consumes the handle and dropping an unstopped handle stops
/// the thread too.
pub struct SimHandle {
    tx: Sender<Command>,
    thread: Option<JoinHandle<WorkcellState>>,
}

impl SimHandle {
    pub fn start(state: WorkcellState) -> Self {
        Self::start_counted(state, Arc::new(AtomicUsize::new(0)))
    }

    /// Like [`SimHandle::start`], incrementing `stops` when the thread exits.
    pub fn start_counted(mut state: WorkcellState, stops: Arc<AtomicUsize>) -> Self {
        let (tx, rx) = channel::<Command>();
        let thread = std::thread::Builder::new()
            .name("workcell-sim".into())
            .spawn(move || {
                for cmd in rx {
                    match cmd {
                        Command::Run { script, source, expect, reply } => {
                            let result = run_script(&script, &source, &mut state, expect.as_ref());
                            let _ = reply.send(result);
                        }
                        Command::Snapshot(reply) => {
                            let _ = reply.send(state.clone());
                        }
                        Command::Checkpoint(label, reply) => {
                            let _ = reply.send(state.checkpoint(label));
                        }
                        Command::Restore(cp, reply) => {
                            state = WorkcellState::restore(&cp);
                            let _ = reply.send(());
                        }
                        Command::Stop => break,
                    }
                }
                stops.fetch_add(1, Ordering::SeqCst);
                tracing::debug!("simulation stopped");
                state
            })
            .expect("spawn simulation thread");
        Self { tx, thread: Some(thread) }
    }

    fn request<T>(&self, make: impl FnOnce(Sender<T>) -> Command) -> T {
        let (reply, rx) = channel();
        self.tx.send(make(reply)).expect("simulation thread is running");
        rx.recv().expect("simulation thread replied")
    }

    pub fn run(
        &self,
        script: Arc<WcsScript>,
        source: Arc<str>,
        expect: Option<Expectation>,
    ) -> Result<RunTrace, RuntimeScriptError> {
        self.request(|reply| Command::Run { script, source, expect, reply })
    }

    /// A deep copy of the live state.
    pub fn snapshot(&self) -> WorkcellState {
        self.request(Command::Snapshot)
    }

    pub fn checkpoint(&self, label: impl Into<String>) -> Checkpoint {
        let label = label.into();
        self.request(|reply| Command::Checkpoint(label, reply))
    }

    pub fn restore(&self, checkpoint: Checkpoint) {
        self.request(|reply| Command::Restore(checkpoint, reply))
    }

    /// Stops the thread and returns the final state.
    pub fn stop(mut self) -> WorkcellState {
        self.shutdown().expect("handle not yet stopped")
    }

    fn shutdown(&mut self) -> Option<WorkcellState> {
        let thread = self.thread.take()?;
        let _ = self.tx.send(Command::Stop);
        Some(thread.join().expect("simulation thread panicked"))
    }
}

impl Drop for SimHandle {
    fn drop(&mut self) {
        if self.thread.is_some() && !std::thread::panicking() {
            self.shutdown();
        }
    }
}
