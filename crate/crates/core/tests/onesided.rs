use rma_halo::rma::{consistency_report, write_violations, Assertions, LockKind, VIOLATION_HEADER};
use rma_halo::sim::{spawn_world, CommError, EventKind, MemoryModel, RankId, Schedule, TransportConfig};

fn all(n: usize) -> Vec<RankId> {
    (0..n).map(RankId).collect()
}

fn ring(n: usize, me: usize) -> Vec<RankId> {
    vec![RankId((me + n - 1) % n), RankId((me + 1) % n)]
}

#[test]
fn regions_are_zeroed_with_distinct_ids() {
    let out = spawn_world(TransportConfig::new(1, 0), |r| {
        let empty = r.alloc_region(0);
        let big = r.alloc_region(65536);
        assert!(empty.is_empty());
        assert_eq!(big.len(), 65536);
        assert_ne!(empty.id(), big.id());
        let v = r.read_region(&big, 0, 65536).unwrap();
        v.bytes().iter().all(|&b| b == 0)
    })
    .unwrap();
    assert!(out.results[0]);
}

#[test]
fn nine_ranks_create_neighbourhood_windows() {
    let out = spawn_world(TransportConfig::new(9, 4).with_schedule(Schedule::Adversarial), |r| {
        let me = r.id().0;
        let (x, y) = (me % 3, me / 3);
        let mut group = Vec::new();
        for dy in [2, 0, 1] {
            for dx in [2, 0, 1] {
                group.push(RankId((x + dx) % 3 + 3 * ((y + dy) % 3)));
            }
        }
        let region = r.alloc_region(8);
        r.win_create(&region, &group).unwrap().group().len()
    })
    .unwrap();
    assert_eq!(out.results, vec![9; 9]);
    let last_enter = out.log.of_kind(EventKind::WinCreateEnter).map(|e| e.seq).max().unwrap();
    let first_exit = out.log.of_kind(EventKind::WinCreateExit).map(|e| e.seq).min().unwrap();
    assert_eq!(out.log.count(EventKind::WinCreateExit), 9);
    // In a full 3x3 torus every group is everyone, so no exit can precede
    // the last entry.
    assert!(first_exit > last_enter);
}

#[test]
fn window_of_one_is_immediate() {
    let out = spawn_world(TransportConfig::new(2, 0), |r| {
        let region = r.alloc_region(4);
        let w = r.win_create(&region, &[r.id()]).unwrap();
        (w.group().to_vec(), r.now())
    })
    .unwrap();
    assert_eq!(out.results[1], (vec![RankId(1)], 0));
}

#[test]
fn fenced_put_reaches_both_copies() {
    for model in [MemoryModel::Separate, MemoryModel::Unified] {
        let out = spawn_world(TransportConfig::new(2, 1).with_memory_model(model), |r| {
            let region = r.alloc_region(16);
            let win = r.win_create(&region, &all(2)).unwrap();
            r.fence(&win, Assertions::NONE).unwrap();
            if r.id().0 == 0 {
                r.put(&win, RankId(1), 0, &[9; 8]).unwrap();
            }
            r.fence(&win, Assertions::NOSUCCEED).unwrap();
            (r.public_snapshot(&win).unwrap(), r.private_snapshot(&win).unwrap())
        })
        .unwrap();
        let (public, private) = &out.results[1];
        assert_eq!(&public[..8], &[9; 8]);
        assert_eq!(public, private);
        assert_eq!(&private[8..], &[0; 8]);
    }
}

#[test]
fn two_origins_fill_disjoint_ranges() {
    for seed in 0..5 {
        let out = spawn_world(
            TransportConfig::new(3, seed).with_schedule(Schedule::Adversarial),
            |r| {
                let me = r.id().0;
                let region = r.alloc_region(8);
                let win = r.win_create(&region, &all(3)).unwrap();
                r.fence(&win, Assertions::NONE).unwrap();
                if me > 0 {
                    r.put(&win, RankId(0), 4 * (me - 1), &[me as u8; 4]).unwrap();
                }
                r.fence(&win, Assertions::NOSUCCEED).unwrap();
                r.read_window(&win, 0, 8).unwrap().bytes().to_vec()
            },
        )
        .unwrap();
        assert_eq!(out.results[0], vec![1, 1, 1, 1, 2, 2, 2, 2]);
        assert!(out.violations.is_empty());
    }
}

#[test]
fn get_returns_fenced_data_and_zeros_elsewhere() {
    let out = spawn_world(TransportConfig::new(2, 0), |r| {
        let me = r.id().0;
        let region = r.alloc_region(8);
        let dest = r.alloc_region(8);
        let win = r.win_create(&region, &all(2)).unwrap();
        r.write_window(&win, 0, &[me as u8 + 1; 4]).unwrap();
        r.fence(&win, Assertions::NONE).unwrap();
        r.get(&win, RankId(1 - me), 0, 8, &dest, 0).unwrap();
        r.fence(&win, Assertions::NOSUCCEED).unwrap();
        r.read_region(&dest, 0, 8).unwrap().bytes().to_vec()
    })
    .unwrap();
    assert_eq!(out.results[0], vec![2, 2, 2, 2, 0, 0, 0, 0]);
    assert_eq!(out.results[1], vec![1, 1, 1, 1, 0, 0, 0, 0]);
}

#[test]
fn unhonored_fence_is_a_barrier() {
    for seed in 0..8 {
        let c = TransportConfig::new(4, seed).with_schedule(Schedule::Adversarial);
        let out = spawn_world(c, |r| {
            let region = r.alloc_region(8);
            let win = r.win_create(&region, &all(4)).unwrap();
            r.compute(1_000 * r.id().0 as u64);
            r.fence(&win, Assertions::NOPRECEDE).unwrap();
            r.fence(&win, Assertions::NOSUCCEED).unwrap();
        })
        .unwrap();
        let first_exit = out.log.of_kind(EventKind::FenceExit).map(|e| e.seq).min().unwrap();
        let mut first_enter = [u64::MAX; 4];
        for e in out.log.of_kind(EventKind::FenceEnter) {
            first_enter[e.rank.0] = first_enter[e.rank.0].min(e.seq);
        }
        assert!(first_enter.iter().all(|&s| s < first_exit), "seed {seed}");
    }
}

#[test]
fn honored_noprecede_lets_a_rank_run_ahead() {
    let found = (0..50).any(|seed| {
        let c = TransportConfig::new(3, seed)
            .with_schedule(Schedule::Adversarial)
            .with_honor_assertions(true);
        let out = spawn_world(c, |r| {
            let region = r.alloc_region(8);
            let win = r.win_create(&region, &all(3)).unwrap();
            r.compute(5_000 * r.id().0 as u64);
            r.fence(&win, Assertions::NOPRECEDE).unwrap();
            r.fence(&win, Assertions::NOSUCCEED).unwrap();
        })
        .unwrap();
        let mut first_enter = [u64::MAX; 3];
        let mut first_exit = [u64::MAX; 3];
        for e in out.log.of_kind(EventKind::FenceEnter) {
            first_enter[e.rank.0] = first_enter[e.rank.0].min(e.seq);
        }
        for e in out.log.of_kind(EventKind::FenceExit) {
            first_exit[e.rank.0] = first_exit[e.rank.0].min(e.seq);
        }
        first_exit.iter().min() < first_enter.iter().max()
    });
    assert!(found);
}

#[test]
fn pscw_pair_is_correct_in_both_models() {
    for model in [MemoryModel::Separate, MemoryModel::Unified] {
        for seed in 0..4 {
            let c = TransportConfig::new(2, seed)
                .with_schedule(Schedule::Adversarial)
                .with_memory_model(model);
            let out = spawn_world(c, |r| {
                let me = r.id().0;
                let other = [RankId(1 - me)];
                let region = r.alloc_region(4);
                let win = r.win_create(&region, &all(2)).unwrap();
                r.post(&win, &other).unwrap();
                r.start(&win, &other).unwrap();
                r.put(&win, other[0], 0, &[me as u8 + 10; 4]).unwrap();
                r.complete(&win).unwrap();
                r.wait_exposure(&win).unwrap();
                r.read_window(&win, 0, 4).unwrap().bytes().to_vec()
            })
            .unwrap();
            assert_eq!(out.results, vec![vec![11; 4], vec![10; 4]]);
            assert!(out.violations.is_empty());
        }
    }
}

#[test]
fn origin_may_complete_before_target_waits() {
    let found = (0..40).any(|seed| {
        let c = TransportConfig::new(2, seed).with_schedule(Schedule::Adversarial);
        let out = spawn_world(c, |r| {
            let region = r.alloc_region(4);
            let win = r.win_create(&region, &all(2)).unwrap();
            if r.id().0 == 0 {
                r.start(&win, &[RankId(1)]).unwrap();
                r.put(&win, RankId(1), 0, &[1; 4]).unwrap();
                r.complete(&win).unwrap();
            } else {
                r.post(&win, &[RankId(0)]).unwrap();
                r.compute(50_000);
                r.wait_exposure(&win).unwrap();
                drop(r.read_window(&win, 0, 4).unwrap());
            }
        })
        .unwrap();
        assert!(out.violations.is_empty());
        let done = out
            .log
            .of_kind(EventKind::Complete)
            .find(|e| e.rank == RankId(0))
            .unwrap()
            .seq;
        let wait = out
            .log
            .of_kind(EventKind::WaitEnter)
            .find(|e| e.rank == RankId(1))
            .unwrap()
            .seq;
        done < wait
    });
    assert!(found);
}

#[test]
fn epoch_rules_are_enforced() {
    let out = spawn_world(TransportConfig::new(2, 0), |r| {
        let region = r.alloc_region(4);
        let win = r.win_create(&region, &all(2)).unwrap();
        let other = RankId(1 - r.id().0);
        let mut errs = Vec::new();
        r.start(&win, &[other]).unwrap();
        errs.push(r.fence(&win, Assertions::NONE).unwrap_err());
        r.post(&win, &[other]).unwrap();
        r.complete(&win).unwrap();
        r.wait_exposure(&win).unwrap();
        errs.push(r.put(&win, other, 0, &[1]).unwrap_err());
        assert!(r.epoch_state(&win).unwrap().is_idle());
        errs
    })
    .unwrap();
    assert!(matches!(out.results[0][0], CommError::Epoch(_)));
    assert_eq!(out.results[0][1], CommError::OutsideEpoch);
}

#[test]
fn one_lock_serves_many_rounds() {
    let rounds = 6;
    let out = spawn_world(TransportConfig::new(3, 2).with_schedule(Schedule::Adversarial), |r| {
        let n = r.size();
        let me = r.id().0;
        let nb = ring(n, me);
        let region = r.alloc_region(2);
        let win = r.win_create(&region, &nb).unwrap();
        r.lock_all(&win, Assertions::NOCHECK).unwrap();
        let mut seen = Vec::new();
        for round in 0..rounds {
            r.set_window_generation(&win, round + 1).unwrap();
            r.put(&win, RankId((me + 1) % n), 0, &[round as u8, me as u8]).unwrap();
            r.flush_all(&win).unwrap();
            let s = r.isend(RankId((me + 1) % n), 5, &[]).unwrap();
            let q = r.irecv(RankId((me + n - 1) % n), 5).unwrap();
            r.wait(&q).unwrap();
            r.win_sync(&win).unwrap();
            seen.push(r.read_window(&win, 0, 2).unwrap().bytes().to_vec());
            r.wait(&s).unwrap();
            r.barrier(&all(n)).unwrap();
        }
        r.unlock_all(&win).unwrap();
        seen
    })
    .unwrap();
    assert!(out.violations.is_empty(), "{:?}", out.violations);
    assert_eq!(out.log.count(EventKind::LockAll), 3);
    for (me, seen) in out.results.iter().enumerate() {
        for (round, v) in seen.iter().enumerate() {
            assert_eq!(v, &vec![round as u8, ((me + 2) % 3) as u8]);
        }
    }
}

fn notified_read(model: MemoryModel, sync: bool) -> usize {
    let c = TransportConfig::new(2, 1).with_memory_model(model);
    let out = spawn_world(c, |r| {
        let me = r.id().0;
        let region = r.alloc_region(8);
        let win = r.win_create(&region, &all(2)).unwrap();
        r.set_window_generation(&win, 1).unwrap();
        r.lock_all(&win, Assertions::NOCHECK).unwrap();
        if me == 0 {
            r.put(&win, RankId(1), 0, &[3; 8]).unwrap();
            r.flush_all(&win).unwrap();
            let s = r.isend(RankId(1), 1, &[]).unwrap();
            r.wait(&s).unwrap();
        } else {
            let q = r.irecv(RankId(0), 1).unwrap();
            r.wait(&q).unwrap();
            if sync {
                r.win_sync(&win).unwrap();
            }
            assert_eq!(r.read_window(&win, 0, 8).unwrap().bytes(), &[3; 8][..]);
        }
        r.unlock_all(&win).unwrap();
    });
    match out {
        Ok(o) => o.violations.len(),
        // the separate model without win_sync reads stale zeros
        Err(_) => usize::MAX,
    }
}

#[test]
fn win_sync_matters_only_for_separate_copies() {
    assert_eq!(notified_read(MemoryModel::Separate, true), 0);
    assert_eq!(notified_read(MemoryModel::Unified, false), 0);
    assert_eq!(notified_read(MemoryModel::Unified, true), 0);
}

#[test]
fn stale_separate_read_sees_old_bytes_and_is_reported() {
    let c = TransportConfig::new(2, 1).with_memory_model(MemoryModel::Separate);
    let out = spawn_world(c, |r| {
        let me = r.id().0;
        let region = r.alloc_region(8);
        let win = r.win_create(&region, &all(2)).unwrap();
        r.set_window_generation(&win, 1).unwrap();
        r.lock_all(&win, Assertions::NOCHECK).unwrap();
        let mut got = Vec::new();
        if me == 0 {
            r.put(&win, RankId(1), 0, &[3; 8]).unwrap();
            r.flush_all(&win).unwrap();
            let s = r.isend(RankId(1), 1, &[]).unwrap();
            r.wait(&s).unwrap();
        } else {
            let q = r.irecv(RankId(0), 1).unwrap();
            r.wait(&q).unwrap();
            got = r.read_window(&win, 0, 8).unwrap().bytes().to_vec();
        }
        r.unlock_all(&win).unwrap();
        got
    })
    .unwrap();
    assert_eq!(out.results[1], vec![0; 8]);
    assert_eq!(out.violations.len(), 1);
    let report = consistency_report(&out.violations);
    assert!(report.contains("win_sync"), "{report}");
    let mut csv = Vec::new();
    write_violations(&mut csv, &out.violations).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next(), Some(VIOLATION_HEADER));
    assert_eq!(text.lines().nth(1).unwrap(), format!("{}", out.violations[0]));
    assert!(text.lines().nth(1).unwrap().starts_with("1,0,0,8,"));
}

#[test]
fn shared_locks_coexist() {
    let out = spawn_world(TransportConfig::new(3, 0), |r| {
        let region = r.alloc_region(4);
        let win = r.win_create(&region, &all(3)).unwrap();
        r.lock_all_with(&win, LockKind::Shared, Assertions::NONE).unwrap();
        let t = r.now();
        r.barrier(&all(3)).unwrap();
        r.unlock_all(&win).unwrap();
        t
    })
    .unwrap();
    assert!(out.violations.is_empty());
    assert!(out.results.iter().all(|&t| t < 1_000_000));
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// Fenced puts land exactly, and the unified model never differs
        /// between its two views.
        #[test]
        fn fenced_puts_land_in_place(
            seed in 0u64..1_000,
            writes in proptest::collection::vec((0usize..3, 0usize..3, 1usize..5), 1..12),
            unified in any::<bool>(),
        ) {
            let model = if unified { MemoryModel::Unified } else { MemoryModel::Separate };
            let c = TransportConfig::new(3, seed).with_schedule(Schedule::Adversarial).with_memory_model(model);
            let ops = writes.clone();
            let out = spawn_world(c, move |r| {
                let me = r.id().0;
                let region = r.alloc_region(64);
                let win = r.win_create(&region, &all(3)).unwrap();
                r.fence(&win, Assertions::NONE).unwrap();
                for (i, &(origin, target, len)) in ops.iter().enumerate() {
                    if origin == me {
                        // write i owns bytes 5i..5i+5, so writes never overlap
                        r.put(&win, RankId(target), 5 * i, &vec![i as u8 + 1; len]).unwrap();
                    }
                }
                r.fence(&win, Assertions::NOSUCCEED).unwrap();
                (r.public_snapshot(&win).unwrap(), r.private_snapshot(&win).unwrap())
            }).unwrap();
            let mut expect = vec![vec![0u8; 64]; 3];
            for (i, &(_, target, len)) in writes.iter().enumerate() {
                for b in &mut expect[target][5 * i..5 * i + len] {
                    *b = i as u8 + 1;
                }
            }
            for (t, (public, private)) in out.results.iter().enumerate() {
                prop_assert_eq!(public, private);
                prop_assert_eq!(public, &expect[t]);
            }
            prop_assert!(out.violations.is_empty());
        }
    }
}
