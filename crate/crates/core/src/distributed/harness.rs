//! In-process stand-in for an MPI communicator.
//!
//! `k` logical PEs each own a private state value. Work happens in
//! supersteps, where every PE runs on its own state only; collectives sit
//! between supersteps and are the only way data moves between PEs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::Serialize;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CommError {
    #[error("PE {pe} made no submission to the collective")]
    MissingSubmission { pe: usize },
    #[error("PE {pe} submitted {got} messages, expected one per destination ({expected})")]
    WrongFanout { pe: usize, got: usize, expected: usize },
    #[error("root {root} out of range for {k} PEs")]
    BadRoot { root: usize, k: usize },
}

/// Order in which supersteps execute PE bodies. Results never depend on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// One OS thread per PE.
    Threads,
    /// PE 0, 1, .. in turn.
    Sequential,
    /// A seeded random permutation of PEs, run in turn.
    Shuffled(u64),
}

impl Default for Schedule {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Schedule::Threads
        } else {
            Schedule::Sequential
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CommStats {
    pub sent_bytes: Vec<u64>,
    pub received_bytes: Vec<u64>,
    pub messages: u64,
}

impl CommStats {
    pub fn total_sent(&self) -> u64 {
        self.sent_bytes.iter().sum()
    }

    pub fn total_received(&self) -> u64 {
        self.received_bytes.iter().sum()
    }
}

pub struct Harness {
    k: usize,
    schedule: Schedule,
    stats: CommStats,
}

impl Harness {
    pub fn new(k: usize) -> Self {
        Self::with_schedule(k, Schedule::default())
    }

    pub fn with_schedule(k: usize, schedule: Schedule) -> Self {
        assert!(k >= 1, "need at least one PE");
        Self { k, schedule, stats: CommStats { sent_bytes: vec![0; k], received_bytes: vec![0; k], messages: 0 } }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn stats(&self) -> &CommStats {
        &self.stats
    }

    /// Runs `body(pe, &mut states[pe])` for every PE; results in PE order.
    pub fn superstep<S, T, F>(&self, states: &mut [S], body: F) -> Vec<T>
    where
        S: Send,
        T: Send,
        F: Fn(usize, &mut S) -> T + Sync,
    {
        assert_eq!(states.len(), self.k, "one state per PE");
        match self.schedule {
            Schedule::Threads => std::thread::scope(|scope| {
                let body = &body;
                let handles: Vec<_> =
                    states.iter_mut().enumerate().map(|(pe, st)| scope.spawn(move || body(pe, st))).collect();
                handles.into_iter().map(|h| h.join().expect("PE panicked")).collect()
            }),
            Schedule::Sequential => states.iter_mut().enumerate().map(|(pe, st)| body(pe, st)).collect(),
            Schedule::Shuffled(seed) => {
                let mut order: Vec<usize> = (0..self.k).collect();
                order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let mut slots: Vec<Option<&mut S>> = states.iter_mut().map(Some).collect();
                let mut out: Vec<Option<T>> = (0..self.k).map(|_| None).collect();
                for pe in order {
                    let st = slots[pe].take().unwrap();
                    out[pe] = Some(body(pe, st));
                }
                out.into_iter().map(Option::unwrap).collect()
            }
        }
    }

    /// Variable-length all-to-all. `outboxes[src][dst]` is the message from
    /// `src` to `dst`; the result is `inboxes[dst][src]`, ordered by source.
    pub fn all_to_all(&mut self, outboxes: Vec<Vec<Vec<u8>>>) -> Result<Vec<Vec<Vec<u8>>>, CommError> {
        if outboxes.len() < self.k {
            return Err(CommError::MissingSubmission { pe: outboxes.len() });
        }
        if let Some((pe, o)) = outboxes.iter().enumerate().find(|(_, o)| o.len() != self.k) {
            return Err(CommError::WrongFanout { pe, got: o.len(), expected: self.k });
        }
        let mut inboxes: Vec<Vec<Vec<u8>>> = (0..self.k).map(|_| Vec::with_capacity(self.k)).collect();
        for (src, outbox) in outboxes.into_iter().enumerate().take(self.k) {
            for (dst, msg) in outbox.into_iter().enumerate() {
                self.stats.sent_bytes[src] += msg.len() as u64;
                self.stats.received_bytes[dst] += msg.len() as u64;
                self.stats.messages += 1;
                inboxes[dst].push(msg);
            }
        }
        Ok(inboxes)
    }

    /// Every PE sends one message to `root`, which receives them by source.
    pub fn gather(&mut self, root: usize, parts: Vec<Vec<u8>>) -> Result<Vec<Vec<u8>>, CommError> {
        if root >= self.k {
            return Err(CommError::BadRoot { root, k: self.k });
        }
        if parts.len() < self.k {
            return Err(CommError::MissingSubmission { pe: parts.len() });
        }
        for (src, p) in parts.iter().enumerate() {
            self.stats.sent_bytes[src] += p.len() as u64;
            self.stats.received_bytes[root] += p.len() as u64;
            self.stats.messages += 1;
        }
        Ok(parts.into_iter().take(self.k).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn self_send_with_one_pe() {
        let mut h = Harness::new(1);
        let got = h.all_to_all(vec![vec![vec![1, 2, 3]]]).unwrap();
        assert_eq!(got, vec![vec![vec![1, 2, 3]]]);
    }

    #[test]
    fn received_is_transpose_of_sent() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let k = 3;
        let sent: Vec<Vec<Vec<u8>>> = (0..k)
            .map(|_| (0..k).map(|_| (0..rng.random_range(0..40)).map(|_| rng.random()).collect()).collect())
            .collect();
        let mut h = Harness::new(k);
        let recv = h.all_to_all(sent.clone()).unwrap();
        for (s, row) in sent.iter().enumerate() {
            for (d, msg) in row.iter().enumerate() {
                assert_eq!(&recv[d][s], msg);
            }
        }
        assert_eq!(h.stats().total_sent(), h.stats().total_received());
        assert_eq!(h.stats().messages, 9);
    }

    #[test]
    fn missing_submissions_name_the_pe() {
        let mut h = Harness::new(3);
        let err = h.all_to_all(vec![vec![vec![]; 3], vec![vec![]; 3]]).unwrap_err();
        assert_eq!(err, CommError::MissingSubmission { pe: 2 });
        let err = h.all_to_all(vec![vec![vec![]; 3], vec![vec![]; 2], vec![vec![]; 3]]).unwrap_err();
        assert_eq!(err, CommError::WrongFanout { pe: 1, got: 2, expected: 3 });
    }

    #[test]
    fn superstep_results_independent_of_schedule() {
        for schedule in [Schedule::Threads, Schedule::Sequential, Schedule::Shuffled(9)] {
            let h = Harness::with_schedule(5, schedule);
            let mut states: Vec<u64> = (0..5).collect();
            let out = h.superstep(&mut states, |pe, s| {
                *s *= 10;
                pe as u64 + *s
            });
            assert_eq!(out, vec![0, 11, 22, 33, 44]);
            assert_eq!(states, vec![0, 10, 20, 30, 40]);
        }
    }

    #[test]
    fn gather_collects_by_source() {
        let mut h = Harness::new(3);
        let got = h.gather(0, vec![vec![0], vec![1, 1], vec![2, 2, 2]]).unwrap();
        assert_eq!(got[2], vec![2, 2, 2]);
        assert_eq!(h.stats().received_bytes[0], 6);
        assert!(h.gather(5, vec![]).is_err());
    }
}
