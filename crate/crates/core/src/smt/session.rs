//! Long-lived solver processes speaking SMT-LIB 2 over pipes.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use super::encode::EncodedQuery;
use super::sexp::{self, Sexp};
use super::{Logic, QueryVerdict, SmtError, Status};
use crate::eval::Assignment;

/// Extra wall time granted beyond the solver's own timeout before the
/// process is killed.
const GRACE: Duration = Duration::from_millis(500);

#[derive(Clone, Debug)]
pub struct SolverCommand {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl Default for SolverCommand {
    fn default() -> Self {
        SolverCommand {
            program: PathBuf::from("z3"),
            args: vec!["-in".into(), "-smt2".into()],
        }
    }
}

pub(crate) struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    /// Everything sent and received, for protocol-error reports.
    log: String,
}

enum Reply {
    Text(String),
    TimedOut,
    Closed,
}

impl Session {
    pub(crate) fn spawn(cmd: &SolverCommand, logic: Logic) -> Result<Session, SmtError> {
        let mut child = Command::new(&cmd.program)
            .args(&cmd.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| {
                SmtError::Unavailable(format!("cannot start `{}`: {e}", cmd.program.display()))
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => {
                        if tx.send(l).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });
        let mut session = Session {
            child,
            stdin,
            lines: rx,
            log: String::new(),
        };
        session.send(&format!(
            "(set-option :print-success false)\n(set-option :produce-models true)\n(set-logic {})\n",
            logic.smtlib_name()
        ))?;
        Ok(session)
    }

    fn send(&mut self, text: &str) -> Result<(), SmtError> {
        self.log.push_str(text);
        self.stdin
            .write_all(text.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| SmtError::Crashed(format!("write to solver failed: {e}")))
    }

    /// Reads one complete s-expression or atom line.
    fn read(&mut self, deadline: Instant) -> Reply {
        let mut text = String::new();
        loop {
            let now = Instant::now();
            if now >= deadline {
                return Reply::TimedOut;
            }
            match self.lines.recv_timeout(deadline - now) {
                Ok(line) => {
                    if text.is_empty() && line.trim().is_empty() {
                        continue;
                    }
                    if !text.is_empty() {
                        text.push('\n');
                    }
                    text.push_str(&line);
                    if sexp::paren_balance(&text) <= 0 {
                        self.log.push_str(&text);
                        self.log.push('\n');
                        return Reply::Text(text);
                    }
                }
                Err(RecvTimeoutError::Timeout) => return Reply::TimedOut,
                Err(RecvTimeoutError::Disconnected) => return Reply::Closed,
            }
        }
    }

    fn expect(&mut self, deadline: Instant) -> Result<String, SmtError> {
        match self.read(deadline) {
            Reply::Text(t) if t.trim_start().starts_with("(error") => Err(SmtError::Protocol {
                message: t,
                transcript: self.log.clone(),
            }),
            Reply::Text(t) => Ok(t),
            Reply::TimedOut => Err(SmtError::WallTimeout),
            Reply::Closed => Err(SmtError::Crashed("solver closed its output".into())),
        }
    }

    pub(crate) fn run(&mut self, q: &EncodedQuery, timeout: Duration) -> Result<QueryVerdict, SmtError> {
        let ms = timeout.as_millis().max(1);
        self.log.clear();
        self.send(&format!(
            "(push 1)\n(set-option :timeout {ms})\n{}(check-sat)\n",
            q.body
        ))?;
        let deadline = Instant::now() + timeout + GRACE;
        let answer = self.expect(deadline)?;
        let verdict = match answer.trim() {
            "unsat" => QueryVerdict::valid(),
            "sat" => {
                let model = match q.value_request() {
                    Some(req) => {
                        self.send(&format!("{req}\n"))?;
                        let reply = self.expect(deadline + GRACE)?;
                        parse_model(&reply, &q.vars).map_err(|message| SmtError::Protocol {
                            message,
                            transcript: self.log.clone(),
                        })?
                    }
                    None => Assignment::new(),
                };
                QueryVerdict::invalid(model)
            }
            "unknown" | "timeout" => {
                self.send("(get-info :reason-unknown)\n")?;
                let reason = self.expect(deadline + GRACE)?;
                let reason = reason_text(&reason);
                if answer.trim() == "timeout" || reason.contains("timeout") || reason.contains("canceled") {
                    QueryVerdict::with_status(Status::Timeout, Some(reason))
                } else {
                    QueryVerdict::with_status(Status::Unknown, Some(reason))
                }
            }
            other => {
                return Err(SmtError::Protocol {
                    message: format!("unexpected reply `{other}`"),
                    transcript: self.log.clone(),
                })
            }
        };
        self.send("(pop 1)\n")?;
        Ok(verdict)
    }

    pub(crate) fn version(&mut self) -> Result<String, SmtError> {
        self.send("(get-info :version)\n")?;
        let reply = self.expect(Instant::now() + Duration::from_secs(5))?;
        Ok(reason_text(&reply))
    }

    fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        let _ = self.stdin.write_all(b"(exit)\n");
        self.kill();
    }
}

fn reason_text(reply: &str) -> String {
    match sexp::parse(reply) {
        Ok(Sexp::List(items)) if items.len() == 2 => match &items[1] {
            Sexp::Atom(a) => a.trim_matches('"').to_string(),
            other => format!("{other:?}"),
        },
        _ => reply.trim().to_string(),
    }
}

fn parse_model(reply: &str, vars: &[String]) -> Result<Assignment, String> {
    let Sexp::List(pairs) = sexp::parse(reply)? else {
        return Err(format!("expected a value list, got `{reply}`"));
    };
    let mut model = Assignment::new();
    for pair in pairs {
        match pair {
            Sexp::List(kv) if kv.len() == 2 => {
                let Sexp::Atom(name) = &kv[0] else {
                    return Err(format!("bad model entry in `{reply}`"));
                };
                let value = sexp::int_value(&kv[1])
                    .ok_or_else(|| format!("non-integer model value in `{reply}`"))?;
                model.insert(sexp::symbol_name(name).to_string(), value);
            }
            _ => return Err(format!("bad model entry in `{reply}`")),
        }
    }
    for v in vars {
        if !model.contains_key(v) {
            return Err(format!("model lacks a value for `{v}`"));
        }
    }
    Ok(model)
}

/// Idle sessions per logic.
pub(crate) struct Pool {
    cmd: SolverCommand,
    idle: Mutex<HashMap<Logic, Vec<Session>>>,
}

impl Pool {
    pub(crate) fn new(cmd: SolverCommand) -> Pool {
        Pool {
            cmd,
            idle: Mutex::new(HashMap::new()),
        }
    }

    fn take(&self, logic: Logic) -> Result<Session, SmtError> {
        let reused = self
            .idle
            .lock()
            .expect("pool lock")
            .get_mut(&logic)
            .and_then(Vec::pop);
        match reused {
            Some(s) => Ok(s),
            None => Session::spawn(&self.cmd, logic),
        }
    }

    fn give_back(&self, logic: Logic, s: Session) {
        self.idle
            .lock()
            .expect("pool lock")
            .entry(logic)
            .or_default()
            .push(s);
    }

    /// Runs a query on a pooled session. A crashed process is replaced and
    /// the query retried once; a process that overruns its deadline is killed.
    pub(crate) fn run(&self, q: &EncodedQuery, timeout: Duration) -> Result<QueryVerdict, SmtError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            let mut session = self.take(q.logic)?;
            match session.run(q, timeout) {
                Ok(v) => {
                    self.give_back(q.logic, session);
                    return Ok(v);
                }
                Err(SmtError::WallTimeout) => {
                    session.kill();
                    return Ok(QueryVerdict::with_status(
                        Status::Timeout,
                        Some("solver exceeded its time limit and was stopped".into()),
                    ));
                }
                Err(SmtError::Crashed(_)) if attempts < 2 => continue,
                Err(e) => return Err(e),
            }
        }
    }

    pub(crate) fn version(&self) -> Result<String, SmtError> {
        let mut s = self.take(Logic::LinearInts)?;
        let v = s.version()?;
        self.give_back(Logic::LinearInts, s);
        Ok(v)
    }
}
