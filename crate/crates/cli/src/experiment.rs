//! Terminal front end for one ranking session.
//!
//! Stimuli are labelled A, B, C, ... by their position in the presentation
//! pass, so labels carry no hint of the underlying waveform.

use std::collections::hash_map::RandomState;
use std::hash::{BuildHasher, Hasher};
use std::io::{self, BufRead, Write};
use std::time::Duration;

use vibrobench_core::experiment::{Cue, SessionStore};
use vibrobench_core::synth::assemble_program;
use vibrobench_core::{ExperimentSession, PlaybackMode, Player};

use crate::args::RunArgs;
use crate::commands::{preset_battery, Output};
use crate::error::{CliError, CliResult};

pub fn run(args: RunArgs) -> CliResult {
    let battery = preset_battery(&args.preset)?;
    let seed = args.seed.unwrap_or_else(|| RandomState::new().build_hasher().finish());
    let mut session = ExperimentSession::new(battery, args.participant.clone(), seed)?;
    let store = SessionStore::open(&args.records)?;
    store.save_session(&session)?;

    let output = Output::open(&args.backend)?;
    let mut runner = Runner {
        session: &mut session,
        store: &store,
        player: output.player(),
        device: args.device,
        clock_speed: args.backend.clock_speed,
        input: io::stdin().lock(),
        out: io::stdout().lock(),
    };
    let result = runner.drive();
    if let Err(err) = &result {
        if err.code == "interrupted" {
            eprintln!(
                "progress saved to {} (session {}, phase {})",
                store.path_for(session.session_id()).display(),
                session.session_id(),
                session.phase().name()
            );
        }
    }
    result
}

struct Runner<'a, R, W> {
    session: &'a mut ExperimentSession,
    store: &'a SessionStore,
    player: Player,
    device: usize,
    clock_speed: f64,
    input: R,
    out: W,
}

impl<R: BufRead, W: Write> Runner<'_, R, W> {
    fn drive(&mut self) -> CliResult {
        let n = self.session.len();
        self.say(&format!(
            "session {}  participant {}  seed {}",
            self.session.session_id(),
            self.session.participant(),
            self.session.seed()
        ))?;
        self.say(&format!(
            "{n} stimuli will play once each, labelled {}.",
            labels(n).join(", ")
        ))?;

        for _ in 0..n {
            let cue = self.session.advance_presentation()?;
            self.save()?;
            self.present(&cue, &format!("stimulus {}", label(cue.position)))?;
        }

        let mut ranking = self.ask_ranking("rank from strongest to weakest")?;
        self.session.submit_ranking(ranking)?;
        self.save()?;

        loop {
            self.say("confirmation: replaying in your order, strongest first")?;
            for _ in 0..n {
                let cue = self.session.advance_confirmation()?;
                self.save()?;
                let shown = self.label_of(cue.stimulus);
                self.present(&cue, &format!("rank {}: {shown}", cue.position + 1))?;
            }
            if self.ask_decision()? {
                break;
            }
            ranking = self.ask_ranking("revised ranking, strongest to weakest")?;
            self.session.amend_ranking(ranking)?;
            self.save()?;
        }

        let record = self.session.finalize()?;
        self.store.save_session(self.session)?;
        self.store.save_record(&record)?;
        let order: Vec<String> = record.ranking.iter().map(|&s| self.label_of(s)).collect();
        self.say(&format!(
            "finalized: {}  saved to {}",
            order.join(" > "),
            self.store.path_for(&record.session_id).display()
        ))
    }

    fn save(&self) -> CliResult {
        Ok(self.store.save_session(self.session)?)
    }

    fn present(&mut self, cue: &Cue, caption: &str) -> CliResult {
        self.say(&format!("  playing {caption}"))?;
        let program = &self.session.battery().programs[cue.stimulus];
        let buffer = assemble_program(program)?;
        let handle = self.player.play(&buffer, PlaybackMode::Once, self.device)?;
        let budget = buffer.duration_secs() / self.clock_speed + 5.0;
        handle.wait(Duration::from_secs_f64(budget));
        self.player.stop(&handle);
        match handle.error() {
            Some(err) => Err(err.into()),
            None => Ok(()),
        }
    }

    /// Reads letters until they name every stimulus exactly once.
    fn ask_ranking(&mut self, prompt: &str) -> CliResult<Vec<usize>> {
        let n = self.session.len();
        loop {
            let line = self.prompt(&format!("{prompt} (e.g. {}): ", labels(n).concat()))?;
            match parse_labels(&line, n) {
                Ok(positions) => {
                    let order = self.session.presentation_order();
                    return Ok(positions.into_iter().map(|p| order[p]).collect());
                }
                Err(message) => self.say(&format!("  {message}"))?,
            }
        }
    }

    /// `true` to finalize, `false` to revise.
    fn ask_decision(&mut self) -> CliResult<bool> {
        loop {
            let line = self.prompt("[c]onfirm or [r]evise? ")?;
            match line.trim().to_ascii_lowercase().as_str() {
                "c" | "confirm" => return Ok(true),
                "r" | "revise" => return Ok(false),
                _ => self.say("  answer c or r")?,
            }
        }
    }

    fn label_of(&self, stimulus: usize) -> String {
        let position = self
            .session
            .presentation_order()
            .iter()
            .position(|&s| s == stimulus)
            .expect("stimulus is in the presentation order");
        label(position)
    }

    fn prompt(&mut self, text: &str) -> CliResult<String> {
        write!(self.out, "{text}").and_then(|()| self.out.flush()).map_err(stdout_err)?;
        let mut line = String::new();
        let n = self
            .input
            .read_line(&mut line)
            .map_err(|e| CliError::new("io", "stdin", e.to_string()))?;
        if n == 0 {
            return Err(CliError::new("interrupted", "stdin", "input closed before the session finished"));
        }
        Ok(line)
    }

    fn say(&mut self, text: &str) -> CliResult {
        writeln!(self.out, "{text}").map_err(stdout_err)
    }
}

fn stdout_err(e: io::Error) -> CliError {
    CliError::new("io", "stdout", e.to_string())
}

fn label(position: usize) -> String {
    char::from(b'A' + position as u8).to_string()
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(label).collect()
}

/// Parses a ranking such as `CABED`, `c a b e d` or `C,A,B,E,D` into
/// presentation positions.
fn parse_labels(line: &str, n: usize) -> Result<Vec<usize>, String> {
    let mut positions = Vec::with_capacity(n);
    for c in line.chars().filter(|c| !c.is_whitespace() && *c != ',' && *c != '>') {
        let upper = c.to_ascii_uppercase();
        let position = (upper as usize).wrapping_sub('A' as usize);
        if !upper.is_ascii_uppercase() || position >= n {
            return Err(format!("{c:?} is not one of {}", labels(n).concat()));
        }
        if positions.contains(&position) {
            return Err(format!("{upper} appears more than once"));
        }
        positions.push(position);
    }
    if positions.len() != n {
        return Err(format!("name all {n} stimuli, each once"));
    }
    Ok(positions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_parse_in_any_common_spelling() {
        assert_eq!(parse_labels("CABED\n", 5), Ok(vec![2, 0, 1, 4, 3]));
        assert_eq!(parse_labels("c, a, b, e, d", 5), Ok(vec![2, 0, 1, 4, 3]));
        assert_eq!(parse_labels("C > A > B > E > D", 5), Ok(vec![2, 0, 1, 4, 3]));
    }

    #[test]
    fn bad_rankings_are_explained() {
        assert!(parse_labels("CABE", 5).unwrap_err().contains("all 5"));
        assert!(parse_labels("CABEC", 5).unwrap_err().contains("more than once"));
        assert!(parse_labels("CABEF", 5).unwrap_err().contains("not one of"));
        assert!(parse_labels("CAB3D", 5).unwrap_err().contains("not one of"));
    }
}
