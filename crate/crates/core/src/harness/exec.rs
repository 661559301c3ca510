//! Running external tools with a timeout, a scratch directory and a
//! scrubbed environment.

use std::io::{self, Read};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::thread;
use std::time::Duration;

use wait_timeout::ChildExt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Code(i32),
    Signal(i32),
    TimedOut,
}

#[derive(Clone, Debug)]
pub struct Finished {
    pub exit: Exit,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
}

/// Temp root for invocations: `SPE_TMPDIR` or the system default.
pub fn temp_root() -> std::path::PathBuf {
    std::env::var_os("SPE_TMPDIR").map_or_else(std::env::temp_dir, Into::into)
}

pub fn run(program: &Path, args: &[String], cwd: &Path, timeout: Duration) -> io::Result<Finished> {
    let mut cmd = Command::new(program);
    cmd.args(args)
        .current_dir(cwd)
        .env_clear()
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    if let Some(path) = std::env::var_os("PATH") {
        cmd.env("PATH", path);
    }
    let mut child = cmd.spawn()?;
    let out = drain(&mut child.stdout.take());
    let err = drain(&mut child.stderr.take());
    let exit = match child.wait_timeout(timeout)? {
        Some(status) => exit_of(status),
        None => {
            kill(&mut child);
            Exit::TimedOut
        }
    };
    Ok(Finished {
        exit,
        stdout: out.join().unwrap_or_default(),
        stderr: err.join().unwrap_or_default(),
    })
}

fn drain<R: Read + Send + 'static>(pipe: &mut Option<R>) -> thread::JoinHandle<Vec<u8>> {
    let pipe = pipe.take();
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut p) = pipe {
            let _ = p.read_to_end(&mut buf);
        }
        buf
    })
}

fn kill(child: &mut Child) {
    let _ = child.kill();
    let _ = child.wait();
}

#[cfg(unix)]
fn exit_of(status: std::process::ExitStatus) -> Exit {
    use std::os::unix::process::ExitStatusExt;
    match (status.code(), status.signal()) {
        (Some(c), _) => Exit::Code(c),
        (None, Some(s)) => Exit::Signal(s),
        (None, None) => Exit::Code(-1),
    }
}

#[cfg(not(unix))]
fn exit_of(status: std::process::ExitStatus) -> Exit {
    Exit::Code(status.code().unwrap_or(-1))
}
