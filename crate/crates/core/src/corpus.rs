//! Litmus files and corpus runs.

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::checker::{explore, CheckerConfig};
use crate::normal_form::normalize_violation;
use crate::oracle::{check_robustness_oracle, Bounds};
use crate::program::{parse_program, Expectation, Program, ProgramError};
use crate::witness::{witness_to_json, WitnessJson};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Engine {
    Oracle,
    Checker,
    Both,
}

impl Engine {
    pub fn parse(s: &str) -> Option<Engine> {
        match s {
            "oracle" => Some(Engine::Oracle),
            "checker" => Some(Engine::Checker),
            "both" => Some(Engine::Both),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunConfig {
    pub engine: Engine,
    pub bounds: Bounds,
    pub checker: CheckerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bounds = Bounds::default();
        RunConfig {
            engine: Engine::Both,
            bounds,
            checker: CheckerConfig { loop_bound: Some(bounds.loop_bound), ..CheckerConfig::default() },
        }
    }
}

#[derive(Clone, Debug)]
pub struct LitmusCase {
    pub path: PathBuf,
    pub program: Program,
    pub expectation: Option<Expectation>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: ProgramError },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    ExpectationMismatch,
    Disagreement,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::ExpectationMismatch => "expectation-mismatch",
            Status::Disagreement => "disagreement",
            Status::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LitmusReport {
    pub path: PathBuf,
    pub expectation: Option<Expectation>,
    /// `None` when the oracle did not run.
    pub oracle: Option<bool>,
    /// `None` when the checker did not run or was inconclusive.
    pub checker: Option<bool>,
    pub checker_states: usize,
    /// Largest pending-write counter seen by the checker.
    pub checker_max_pending: usize,
    pub status: Status,
    pub witness: Option<WitnessJson>,
}

impl LitmusReport {
    /// The verdict of whichever engine decided.
    pub fn robust(&self) -> Option<bool> {
        self.checker.or(self.oracle)
    }
}

pub fn load_case(path: &Path) -> Result<LitmusCase, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.into(), source })?;
    let program = parse_program(&text).map_err(|source| CorpusError::Parse { path: path.into(), source })?;
    Ok(LitmusCase { path: path.into(), expectation: program.expectation(), program })
}

pub fn run_case(case: &LitmusCase, cfg: &RunConfig) -> LitmusReport {
    let p = &case.program;
    let sym = p.symbols();
    let mut witness = None;
    let oracle = match cfg.engine {
        Engine::Oracle | Engine::Both => {
            let v = check_robustness_oracle(p, cfg.bounds);
            if let Some(t) = &v.witness {
                witness = normalize_violation(t).ok().map(|n| witness_to_json(&n.witness, &sym));
            }
            Some(v.robust)
        }
        Engine::Checker => None,
    };
    let (checker, states, max_pending) = match cfg.engine {
        Engine::Checker | Engine::Both => {
            let v = explore(p, &cfg.checker);
            if let Some(w) = v.witness() {
                witness = Some(witness_to_json(&w.normal_form, &sym));
            }
            (v.is_robust(), v.explored_states, v.stats.max_pending)
        }
        Engine::Oracle => (None, 0, 0),
    };
    let status = if let (Some(o), Some(c)) = (oracle, checker) {
        if o != c {
            Status::Disagreement
        } else {
            expectation_status(case.expectation, o)
        }
    } else {
        match checker.or(oracle) {
            Some(r) => expectation_status(case.expectation, r),
            None => Status::Inconclusive,
        }
    };
    LitmusReport {
        path: case.path.clone(),
        expectation: case.expectation,
        oracle,
        checker,
        checker_states: states,
        checker_max_pending: max_pending,
        status,
        witness,
    }
}

fn expectation_status(e: Option<Expectation>, robust: bool) -> Status {
    match e {
        Some(Expectation::Robust) if !robust => Status::ExpectationMismatch,
        Some(Expectation::NotRobust) if robust => Status::ExpectationMismatch,
        _ => Status::Pass,
    }
}

pub fn run_litmus(path: &Path, cfg: &RunConfig) -> Result<LitmusReport, CorpusError> {
    Ok(run_case(&load_case(path)?, cfg))
}

/// All `.lit` files below `dir`, sorted by path.
pub fn collect_cases(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    fn walk(d: &Path, out: &mut Vec<PathBuf>) -> Result<(), CorpusError> {
        let rd = std::fs::read_dir(d).map_err(|source| CorpusError::Io { path: d.into(), source })?;
        for entry in rd {
            let p = entry.map_err(|source| CorpusError::Io { path: d.into(), source })?.path();
            if p.is_dir() {
                walk(&p, out)?;
            } else if p.extension().is_some_and(|e| e == "lit") {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, &mut out)?;
    out.sort();
    Ok(out)
}

/// Run every case below `dir`. Reports are sorted by path.
pub fn run_corpus(dir: &Path, cfg: &RunConfig) -> Result<Vec<LitmusReport>, CorpusError> {
    let cases = collect_cases(dir)?.iter().map(|p| load_case(p)).collect::<Result<Vec<_>, _>>()?;
    Ok(cases.par_iter().map(|c| run_case(c, cfg)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(src: &str) -> LitmusCase {
        let program = parse_program(src).unwrap();
        LitmusCase { path: "inline.lit".into(), expectation: program.expectation(), program }
    }

    #[test]
    fn expectation_is_checked() {
        let src = "node N1 { x=1, y=0 } node N2 { z=0, w=1 } thread T on N1 { y := N2.w; N2.z := x; x := 2 }";
        let r = run_case(&case(&format!("{src} expect not-robust")), &RunConfig::default());
        assert_eq!(r.status, Status::Pass);
        assert_eq!((r.oracle, r.checker), (Some(false), Some(false)));
        assert!(r.witness.is_some());
        let r = run_case(&case(&format!("{src} expect robust")), &RunConfig::default());
        assert_eq!(r.status, Status::ExpectationMismatch);
    }

    #[test]
    fn single_engine() {
        let cfg = RunConfig { engine: Engine::Oracle, ..RunConfig::default() };
        let r = run_case(&case("node N1 { x=0 } thread T on N1 { x := 1 } expect robust"), &cfg);
        assert_eq!((r.oracle, r.checker, r.status), (Some(true), None, Status::Pass));
    }
}
