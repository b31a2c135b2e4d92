//! Child process execution with a wall-clock deadline, rlimits and capped
//! output capture.

use std::io::{self, Read};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::Path;
use std::process::{Child, Command, ExitStatus, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use super::NetworkIsolation;

const POLL_INTERVAL: Duration = Duration::from_millis(2);
/// Bytes kept from the end of stdout, independent of the head cap.
const TAIL_KEEP: usize = 256;

pub(crate) struct ProcessSpec<'a> {
    pub argv: &'a [String],
    pub workdir: &'a Path,
    pub timeout: Duration,
    pub memory_cap: Option<u64>,
    pub output_cap: usize,
    pub network: NetworkIsolation,
}

#[derive(Debug)]
pub(crate) struct Captured {
    pub head: Vec<u8>,
    pub tail: Vec<u8>,
    pub truncated: bool,
}

#[derive(Debug)]
pub(crate) struct ProcessOutcome {
    pub status: Option<ExitStatus>,
    pub timed_out: bool,
    pub stdout: Captured,
    pub stderr: Captured,
}

impl ProcessOutcome {
    pub fn signal(&self) -> Option<i32> {
        self.status.and_then(|s| s.signal())
    }

    pub fn success(&self) -> bool {
        !self.timed_out && self.status.map(|s| s.success()).unwrap_or(false)
    }
}

fn reader<R: Read + Send + 'static>(mut r: R, cap: usize) -> thread::JoinHandle<Captured> {
    thread::spawn(move || {
        let mut head = Vec::new();
        let mut tail: Vec<u8> = Vec::new();
        let mut truncated = false;
        let mut buf = [0u8; 8192];
        loop {
            let n = match r.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(_) => break,
            };
            let chunk = &buf[..n];
            let room = cap.saturating_sub(head.len());
            if room > 0 {
                head.extend_from_slice(&chunk[..room.min(n)]);
            }
            if n > room {
                truncated = true;
            }
            tail.extend_from_slice(chunk);
            if tail.len() > TAIL_KEEP {
                tail.drain(..tail.len() - TAIL_KEEP);
            }
        }
        Captured { head, tail, truncated }
    })
}

fn set_limit(resource: libc::__rlimit_resource_t, value: u64) -> io::Result<()> {
    let lim = libc::rlimit { rlim_cur: value, rlim_max: value };
    if unsafe { libc::setrlimit(resource, &lim) } != 0 {
        return Err(io::Error::last_os_error());
    }
    Ok(())
}

fn isolate_network(mode: NetworkIsolation) -> io::Result<()> {
    match mode {
        NetworkIsolation::Off => Ok(()),
        NetworkIsolation::BestEffort | NetworkIsolation::Required => {
            if unsafe { libc::unshare(libc::CLONE_NEWNET) } == 0 {
                return Ok(());
            }
            // unprivileged fallback: a user namespace grants CAP_SYS_ADMIN over the new netns
            if unsafe { libc::unshare(libc::CLONE_NEWUSER | libc::CLONE_NEWNET) } == 0 {
                return Ok(());
            }
            if mode == NetworkIsolation::Required {
                Err(io::Error::last_os_error())
            } else {
                Ok(())
            }
        }
    }
}

fn kill_group(child: &Child) {
    unsafe {
        libc::kill(-(child.id() as i32), libc::SIGKILL);
    }
}

/// Runs `spec.argv` in its own process group, killing the whole group on
/// timeout. Spawn failures (including isolation setup) surface as `Err`.
pub(crate) fn run(spec: &ProcessSpec<'_>) -> io::Result<ProcessOutcome> {
    let (prog, args) = spec
        .argv
        .split_first()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "empty argv"))?;
    let mut cmd = Command::new(prog);
    cmd.args(args)
        .current_dir(spec.workdir)
        .env_clear()
        .env("PATH", std::env::var_os("PATH").unwrap_or_else(|| "/usr/bin:/bin".into()))
        .env("HOME", spec.workdir)
        .env("TMPDIR", spec.workdir)
        .env("LANG", "C.UTF-8")
        .env("PYTHONDONTWRITEBYTECODE", "1")
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    let memory_cap = spec.memory_cap;
    let network = spec.network;
    unsafe {
        cmd.pre_exec(move || {
            if libc::setsid() < 0 {
                return Err(io::Error::last_os_error());
            }
            set_limit(libc::RLIMIT_CORE, 0)?;
            if let Some(bytes) = memory_cap {
                set_limit(libc::RLIMIT_AS, bytes)?;
            }
            isolate_network(network)
        });
    }

    let mut child = cmd.spawn()?;
    let out = reader(child.stdout.take().expect("piped stdout"), spec.output_cap);
    let err = reader(child.stderr.take().expect("piped stderr"), spec.output_cap);

    let deadline = Instant::now() + spec.timeout;
    let mut timed_out = false;
    let status = loop {
        match child.try_wait()? {
            Some(s) => break Some(s),
            None if Instant::now() >= deadline => {
                timed_out = true;
                kill_group(&child);
                break child.wait().ok();
            }
            None => thread::sleep(POLL_INTERVAL),
        }
    };
    // stray descendants may still hold the pipes open
    kill_group(&child);
    let stdout = out.join().expect("reader thread");
    let stderr = err.join().expect("reader thread");
    Ok(ProcessOutcome {
        status: if timed_out { None } else { status },
        timed_out,
        stdout,
        stderr,
    })
}
