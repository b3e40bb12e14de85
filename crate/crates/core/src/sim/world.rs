use std::panic::{self, AssertUnwindSafe};
use std::thread;

use super::config::TransportConfig;
use super::error::SimError;
use super::log::EventLog;
use super::rank::{AbortToken, Rank, Shared};
use super::state::{Action, SlotStatus, TransportStats};
use super::RankId;
use crate::rma::Violation;

/// Everything a finished world leaves behind.
#[derive(Debug)]
pub struct WorldOutput<T> {
    /// Per-rank return values, indexed by rank.
    pub results: Vec<T>,
    pub log: EventLog,
    pub violations: Vec<Violation>,
    pub stats: TransportStats,
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_string()
    }
}

/// Runs `program` once per rank on its own worker and drives the scheduler
/// until every rank has returned.
///
/// Only one worker executes at a time; the scheduler hands control to a
/// rank or performs a delivery at each step, so the whole run is a single
/// interleaving fixed by the config and seed.
pub fn spawn_world<T, F>(config: TransportConfig, program: F) -> Result<WorldOutput<T>, SimError>
where
    T: Send,
    F: Fn(&Rank<'_>) -> T + Sync,
{
    config.validate().map_err(SimError::InvalidConfig)?;
    let n = config.n_ranks;
    let max_steps = config.max_steps;
    let shared = Shared::new(config);
    let program = &program;
    let shared_ref = &shared;

    let (outcome, results) = thread::scope(|scope| {
        let handles: Vec<_> = (0..n)
            .map(|r| {
                thread::Builder::new()
                    .name(format!("rank-{r}"))
                    .spawn_scoped(scope, move || {
                        let rank = Rank::new(r, shared_ref);
                        if !rank.wait_for_turn() {
                            return None;
                        }
                        let res = panic::catch_unwind(AssertUnwindSafe(|| program(&rank)));
                        let mut st = shared_ref.state.lock();
                        let value = match res {
                            Ok(v) => {
                                st.slots[r].status = SlotStatus::Done;
                                Some(v)
                            }
                            Err(payload) => {
                                if payload.is::<AbortToken>() {
                                    return None;
                                }
                                st.slots[r].status = SlotStatus::Done;
                                st.slots[r].panic = Some(panic_message(payload.as_ref()));
                                None
                            }
                        };
                        if st.running == Some(r) {
                            st.running = None;
                            shared_ref.sched_cv.notify_one();
                        }
                        value
                    })
                    .expect("spawning a rank worker")
            })
            .collect();

        let outcome = drive(shared_ref, max_steps);
        if outcome.is_err() {
            let mut st = shared_ref.state.lock();
            st.abort = true;
            for cv in &shared_ref.rank_cv {
                cv.notify_all();
            }
        }
        let results: Vec<Option<T>> = handles.into_iter().map(|h| h.join().unwrap_or(None)).collect();
        (outcome, results)
    });
    outcome?;

    let mut st = shared.state.lock();
    let events = std::mem::take(&mut st.events);
    let violations = std::mem::take(&mut st.rma.violations);
    Ok(WorldOutput {
        results: results.into_iter().map(|r| r.expect("every rank finished")).collect(),
        log: EventLog::from_unsorted(events),
        violations,
        stats: st.stats,
    })
}

fn drive(shared: &Shared, max_steps: u64) -> Result<(), SimError> {
    let mut st = shared.state.lock();
    loop {
        if let Some((r, msg)) = st
            .slots
            .iter()
            .enumerate()
            .find_map(|(r, s)| s.panic.clone().map(|m| (r, m)))
        {
            return Err(SimError::RankPanicked {
                rank: RankId(r),
                message: msg,
            });
        }
        if st.step >= max_steps {
            return Err(SimError::StepLimit(max_steps));
        }
        match st.choose() {
            Action::Finished => return Ok(()),
            Action::Deadlock(blocked) => return Err(SimError::Deadlock { blocked }),
            Action::Deliver(i) => st.deliver(i),
            Action::Run(r, t) => {
                st.resume(r, t);
                shared.rank_cv[r].notify_one();
                while st.running.is_some() {
                    shared.sched_cv.wait(&mut st);
                }
            }
        }
        st.step += 1;
    }
}
