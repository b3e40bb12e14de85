use rma_halo::halo::{
    plan_weak, plan_with_grid, Backend, DecompositionPlan, Direction, Driving, EpochPlacement, FieldDescriptor,
    HaloError, HaloOptions, HaloSwapContext, PassiveVariant,
};
use rma_halo::sim::{spawn_world, EventKind, MemoryModel, RankId, Schedule, TransportConfig};

fn descriptors(plan: &DecompositionPlan, rank: RankId, n: usize) -> Vec<FieldDescriptor> {
    (0..n)
        .map(|i| FieldDescriptor::for_rank(format!("f{i}"), plan, rank))
        .collect()
}

const RMA: [Backend; 3] = [Backend::Fence, Backend::Pscw, Backend::Passive];

#[test]
fn offsets_are_dual_for_every_grid_up_to_five_by_five() {
    for px in 1..=5 {
        for py in 1..=5 {
            for periodic in [true, false] {
                let plan = plan_with_grid((3 * px + 1, 2 * py + 1, 2), (px, py), periodic, 1).unwrap();
                let n = px * py;
                let out = spawn_world(TransportConfig::new(n, 0), |r| {
                    let ctx = HaloSwapContext::init(
                        r,
                        &plan,
                        descriptors(&plan, r.id(), 2),
                        HaloOptions::new(Backend::Fence),
                    )
                    .unwrap();
                    let t = (
                        ctx.neighbors().clone(),
                        ctx.incoming_offsets().to_vec(),
                        ctx.remote_offsets().to_vec(),
                    );
                    drop(ctx);
                    t
                })
                .unwrap();
                for (a, (table, _, remote)) in out.results.iter().enumerate() {
                    for (e, nb) in table.entries.iter().enumerate() {
                        let (b_table, b_incoming, _) = &out.results[nb.rank.0];
                        let back = b_table.position(nb.direction.opposite()).unwrap();
                        assert_eq!(b_table.entries[back].rank, RankId(a));
                        assert_eq!(
                            remote[e], b_incoming[back],
                            "{px}x{py} periodic={periodic} edge {a}->{}",
                            nb.rank
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn incoming_regions_partition_the_buffer() {
    for n in [1, 2, 4, 6, 9] {
        for periodic in [true, false] {
            let plan = plan_weak((5, 3, 2), n, periodic, 2).unwrap();
            let out = spawn_world(TransportConfig::new(n, 0), |r| {
                let ctx =
                    HaloSwapContext::init(r, &plan, descriptors(&plan, r.id(), 3), HaloOptions::new(Backend::Pscw))
                        .unwrap();
                (
                    ctx.incoming_offsets().to_vec(),
                    ctx.incoming_lens().to_vec(),
                    ctx.buffer_len(),
                )
            })
            .unwrap();
            for (offsets, lens, total) in out.results {
                let mut at = 0;
                for (o, l) in offsets.iter().zip(&lens) {
                    assert_eq!(*o, at);
                    assert!(*l > 0);
                    at += l;
                }
                assert_eq!(at, total);
            }
        }
    }
}

#[test]
fn uneven_neighbor_regions_get_prefix_offsets() {
    // rank 0 of a bounded 2x2 grid: x+ face 96 B, y+ face 32 B, one corner
    let plan = plan_with_grid((8, 24, 1), (2, 2), false, 1).unwrap();
    let out = spawn_world(TransportConfig::new(4, 0), |r| {
        let ctx = HaloSwapContext::init(
            r,
            &plan,
            descriptors(&plan, r.id(), 1),
            HaloOptions::new(Backend::Fence),
        )
        .unwrap();
        (
            ctx.neighbors().clone(),
            ctx.incoming_offsets().to_vec(),
            ctx.incoming_lens().to_vec(),
            ctx.remote_offsets().to_vec(),
        )
    })
    .unwrap();
    let (table, incoming, lens, _) = &out.results[0];
    let ranks: Vec<usize> = table.entries.iter().map(|n| n.rank.0).collect();
    assert_eq!(ranks, vec![1, 2, 3]);
    assert_eq!(lens, &vec![96, 32, 8]);
    assert_eq!(incoming, &vec![0, 96, 128]);
    let told = |rank: usize| {
        let (t, _, _, remote) = &out.results[rank];
        remote[t.entries.iter().position(|n| n.rank == RankId(0)).unwrap()]
    };
    assert_eq!((told(1), told(2), told(3)), (0, 96, 128));
}

fn fill(rank: usize, dir: Direction) -> u8 {
    (rank * 8 + dir.index() + 1) as u8
}

/// Every byte of the region reserved for neighbor n holds n's marker.
fn marker_swap(backend: Backend, variant: PassiveVariant, n: usize, seed: u64, model: MemoryModel) {
    let plan = plan_weak((4, 3, 2), n, true, 2).unwrap();
    let c = TransportConfig::new(n, seed)
        .with_schedule(Schedule::Adversarial)
        .with_memory_model(model);
    let out = spawn_world(c, |r| {
        let me = r.id().0;
        let opts = HaloOptions::new(backend).with_passive_variant(variant);
        let mut ctx = HaloSwapContext::init(r, &plan, descriptors(&plan, r.id(), 2), opts).unwrap();
        let mut checked = 0;
        for _ in 0..2 {
            ctx.initiate(|dir, _, out| {
                out.fill(fill(me, dir));
                Ok(())
            })
            .unwrap();
            ctx.complete(|view, bytes| {
                let want = fill(view.neighbor.0, view.direction.opposite());
                if bytes.iter().any(|&b| b != want) {
                    return Err(format!(
                        "{:?} from {} holds foreign bytes",
                        view.direction, view.neighbor
                    ));
                }
                checked += bytes.len();
                Ok(())
            })
            .unwrap();
        }
        let total = ctx.buffer_len();
        ctx.finalise().unwrap();
        (checked, total)
    })
    .unwrap();
    assert!(out.violations.is_empty());
    for (checked, total) in out.results {
        assert_eq!(checked, 2 * total);
    }
}

#[test]
fn puts_stay_inside_their_reserved_region() {
    for n in [1, 2, 4, 9] {
        for seed in 0..3 {
            for b in RMA {
                marker_swap(b, PassiveVariant::Adopted, n, seed, MemoryModel::Separate);
            }
            marker_swap(Backend::Passive, PassiveVariant::Simple, n, seed, MemoryModel::Unified);
            marker_swap(Backend::P2p, PassiveVariant::Adopted, n, seed, MemoryModel::Separate);
        }
    }
}

#[test]
fn shifted_epochs_open_once_more_than_swaps() {
    let swaps = 100;
    let plan = plan_weak((3, 3, 2), 4, true, 2).unwrap();
    for backend in [Backend::Fence, Backend::Pscw] {
        let out = spawn_world(TransportConfig::new(4, 1), |r| {
            let mut ctx =
                HaloSwapContext::init(r, &plan, descriptors(&plan, r.id(), 1), HaloOptions::new(backend)).unwrap();
            assert!(ctx.epoch_open());
            for _ in 0..swaps {
                ctx.initiate(|_, _, out| {
                    out.fill(1);
                    Ok(())
                })
                .unwrap();
                ctx.complete(|_, _| Ok(())).unwrap();
                let s = ctx.stats();
                assert!(ctx.epoch_open());
                assert_eq!(s.epochs_opened, s.epochs_closed + 1);
            }
            ctx.finalise().unwrap();
            assert!(!ctx.epoch_open());
            ctx.stats().clone()
        })
        .unwrap();
        for s in &out.results {
            assert_eq!(s.epochs_opened, swaps + 1);
            assert_eq!(s.epochs_closed, swaps + 1);
            assert_eq!(s.swaps, swaps);
        }
        assert_eq!(out.log.count(EventKind::EpochOpen), 4 * (swaps as usize + 1));
    }
}

#[test]
fn naive_epochs_open_per_swap() {
    let plan = plan_weak((3, 3, 2), 2, true, 2).unwrap();
    let out = spawn_world(TransportConfig::new(2, 1), |r| {
        let opts = HaloOptions::new(Backend::Fence).with_placement(EpochPlacement::Naive);
        let mut ctx = HaloSwapContext::init(r, &plan, descriptors(&plan, r.id(), 1), opts).unwrap();
        assert!(!ctx.epoch_open());
        for _ in 0..5 {
            ctx.initiate(|_, _, _| Ok(())).unwrap();
            assert!(ctx.epoch_open());
            ctx.complete(|_, _| Ok(())).unwrap();
            assert!(!ctx.epoch_open());
        }
        ctx.finalise().unwrap();
        ctx.stats().clone()
    })
    .unwrap();
    assert_eq!((out.results[0].epochs_opened, out.results[0].epochs_closed), (5, 5));
}

#[test]
fn passive_context_holds_one_epoch_throughout() {
    let plan = plan_weak((3, 3, 2), 4, true, 2).unwrap();
    let out = spawn_world(TransportConfig::new(4, 1), |r| {
        let mut ctx = HaloSwapContext::init(
            r,
            &plan,
            descriptors(&plan, r.id(), 1),
            HaloOptions::new(Backend::Passive),
        )
        .unwrap();
        for _ in 0..10 {
            ctx.initiate(|_, _, _| Ok(())).unwrap();
            ctx.complete(|_, _| Ok(())).unwrap();
            assert!(ctx.epoch_open());
        }
        ctx.finalise().unwrap();
        ctx.stats().clone()
    })
    .unwrap();
    assert_eq!((out.results[0].epochs_opened, out.results[0].epochs_closed), (1, 1));
    assert_eq!(out.log.count(EventKind::LockAll), 4);
    assert_eq!(out.log.count(EventKind::UnlockAll), 4);
}

#[test]
fn single_rank_swaps_through_eight_self_puts() {
    let plan = plan_weak((4, 4, 2), 1, true, 2).unwrap();
    for backend in RMA {
        let out = spawn_world(TransportConfig::new(1, 0), |r| {
            let mut ctx =
                HaloSwapContext::init(r, &plan, descriptors(&plan, r.id(), 1), HaloOptions::new(backend)).unwrap();
            ctx.initiate(|dir, _, out| {
                out.fill(fill(0, dir));
                Ok(())
            })
            .unwrap();
            let mut seen = Vec::new();
            ctx.complete(|view, bytes| {
                seen.push((view.direction, bytes[0]));
                Ok(())
            })
            .unwrap();
            ctx.finalise().unwrap();
            seen
        })
        .unwrap();
        assert_eq!(out.log.count(EventKind::Put), 8, "{backend}");
        assert_eq!(out.log.count(EventKind::PutApply), 8);
        let mut seen = out.results[0].clone();
        seen.sort_by_key(|(d, _)| d.index());
        for (d, b) in seen {
            assert_eq!(b, fill(0, d.opposite()));
        }
    }
}

#[test]
fn two_rank_put_lands_at_the_exchanged_offset() {
    let plan = plan_weak((3, 2, 2), 2, true, 2).unwrap();
    let out = spawn_world(TransportConfig::new(2, 3), |r| {
        let me = r.id().0;
        let mut ctx = HaloSwapContext::init(
            r,
            &plan,
            descriptors(&plan, r.id(), 1),
            HaloOptions::new(Backend::Fence),
        )
        .unwrap();
        ctx.initiate(|dir, _, out| {
            out.fill(fill(me, dir));
            Ok(())
        })
        .unwrap();
        ctx.complete(|_, _| Ok(())).unwrap();
        let views = ctx.subbuffer_views(Direction::XMinus).unwrap();
        let got = ctx.read_view(&views[0]).unwrap().bytes().to_vec();
        got
    })
    .unwrap();
    for (me, got) in out.results.iter().enumerate() {
        assert!(got.iter().all(|&b| b == fill(1 - me, Direction::XPlus)));
    }
}

#[test]
fn subbuffer_views_tile_the_neighbor_region() {
    let plan = plan_weak((4, 3, 2), 4, true, 2).unwrap();
    let out = spawn_world(TransportConfig::new(4, 0), |r| {
        let one = HaloSwapContext::init(
            r,
            &plan,
            descriptors(&plan, r.id(), 1),
            HaloOptions::new(Backend::Fence),
        )
        .unwrap();
        let v = one.subbuffer_views(Direction::YPlus).unwrap();
        let e = one.neighbors().position(Direction::YPlus).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(
            (v[0].offset, v[0].len),
            (one.incoming_offsets()[e], one.incoming_lens()[e])
        );

        let three = HaloSwapContext::init(
            r,
            &plan,
            descriptors(&plan, r.id(), 3),
            HaloOptions::new(Backend::Fence),
        )
        .unwrap();
        for d in Direction::ALL {
            let e = three.neighbors().position(d).unwrap();
            let views = three.subbuffer_views(d).unwrap();
            assert_eq!(views.len(), 3);
            let mut at = three.incoming_offsets()[e];
            for (f, v) in views.iter().enumerate() {
                assert_eq!((v.field, v.offset), (f, at));
                at += v.len;
            }
            assert_eq!(at, three.incoming_offsets()[e] + three.incoming_lens()[e]);
        }
        let v = three.subbuffer_views(Direction::XPlusYPlus).unwrap()[1];
        let data: Vec<u8> = (0..v.len).map(|i| i as u8).collect();
        three.write_view(&v, &data).unwrap();
        let back = three.read_view(&v).unwrap().bytes().to_vec();
        let snap = r.private_snapshot(three.window().unwrap()).unwrap();
        (back == data, snap[v.range()] == data[..])
    })
    .unwrap();
    assert!(out.results.iter().all(|&(a, b)| a && b));
}

#[test]
fn finalised_context_refuses_further_use() {
    let plan = plan_weak((3, 3, 2), 2, true, 2).unwrap();
    let out = spawn_world(TransportConfig::new(2, 0), |r| {
        let mut ctx =
            HaloSwapContext::init(r, &plan, descriptors(&plan, r.id(), 1), HaloOptions::new(Backend::Pscw)).unwrap();
        ctx.finalise().unwrap();
        assert!(ctx.is_finalised());
        (
            ctx.initiate(|_, _, _| Ok(())).unwrap_err(),
            ctx.finalise().unwrap_err(),
            ctx.subbuffer_views(Direction::XMinus).unwrap_err(),
        )
    })
    .unwrap();
    assert!(out.violations.is_empty());
    assert_eq!(
        out.results[0],
        (HaloError::Finalised, HaloError::Finalised, HaloError::Finalised)
    );
}

#[test]
fn call_order_and_setup_errors() {
    let plan = plan_weak((3, 3, 2), 1, true, 2).unwrap();
    let out = spawn_world(TransportConfig::new(1, 0), |r| {
        let mut errs = Vec::new();
        errs.push(HaloSwapContext::init(r, &plan, Vec::new(), HaloOptions::new(Backend::Fence)).err());
        let mut mixed = descriptors(&plan, r.id(), 2);
        mixed[1].lz += 1;
        errs.push(HaloSwapContext::init(r, &plan, mixed, HaloOptions::new(Backend::Fence)).err());
        let get_passive = HaloOptions::new(Backend::Passive).with_driving(Driving::Get);
        errs.push(HaloSwapContext::init(r, &plan, descriptors(&plan, r.id(), 1), get_passive).err());
        let mut ctx = HaloSwapContext::init(
            r,
            &plan,
            descriptors(&plan, r.id(), 1),
            HaloOptions::new(Backend::Fence),
        )
        .unwrap();
        errs.push(ctx.complete(|_, _| Ok(())).err());
        ctx.initiate(|_, _, _| Ok(())).unwrap();
        errs.push(ctx.initiate(|_, _, _| Ok(())).err());
        errs.push(ctx.finalise().err());
        ctx.complete(|_, _| Ok(())).unwrap();
        errs.push(ctx.initiate(|_, _, _| Err("no data".into())).err());
        errs
    })
    .unwrap();
    assert_eq!(
        out.results[0],
        vec![
            Some(HaloError::NoFields),
            Some(HaloError::MixedFieldDims),
            Some(HaloError::UnsupportedDriving),
            Some(HaloError::NoSwapInFlight),
            Some(HaloError::SwapInFlight),
            Some(HaloError::SwapInFlight),
            Some(HaloError::Pack("no data".into())),
        ]
    );
}

#[test]
fn empty_lifetime_is_clean() {
    for backend in Backend::ALL {
        let plan = plan_weak((3, 3, 2), 4, false, 2).unwrap();
        let out = spawn_world(TransportConfig::new(4, 2).with_schedule(Schedule::Adversarial), |r| {
            let mut ctx =
                HaloSwapContext::init(r, &plan, descriptors(&plan, r.id(), 1), HaloOptions::new(*backend)).unwrap();
            assert_eq!(ctx.epoch_open(), backend.is_rma());
            ctx.finalise().unwrap();
        })
        .unwrap();
        assert!(out.violations.is_empty());
    }
}

#[test]
fn contexts_use_disjoint_tags() {
    let plan = plan_weak((3, 3, 2), 2, true, 2).unwrap();
    let out = spawn_world(TransportConfig::new(2, 0), |r| {
        let a = HaloSwapContext::init(r, &plan, descriptors(&plan, r.id(), 1), HaloOptions::new(Backend::P2p)).unwrap();
        let b = HaloSwapContext::init(r, &plan, descriptors(&plan, r.id(), 1), HaloOptions::new(Backend::P2p)).unwrap();
        (a.tag_base(), b.tag_base())
    })
    .unwrap();
    let (a, b) = out.results[0];
    assert!(b - a >= 64);
    assert_eq!(out.results[0], out.results[1]);
}

#[test]
fn separate_passive_reads_follow_a_win_sync() {
    let plan = plan_weak((3, 3, 2), 4, true, 2).unwrap();
    let c = TransportConfig::new(4, 5)
        .with_schedule(Schedule::Adversarial)
        .with_memory_model(MemoryModel::Separate);
    let out = spawn_world(c, |r| {
        let mut ctx = HaloSwapContext::init(
            r,
            &plan,
            descriptors(&plan, r.id(), 1),
            HaloOptions::new(Backend::Passive),
        )
        .unwrap();
        for _ in 0..3 {
            ctx.initiate(|_, _, out| {
                out.fill(2);
                Ok(())
            })
            .unwrap();
            ctx.complete(|_, _| Ok(())).unwrap();
        }
        ctx.finalise().unwrap();
    })
    .unwrap();
    assert!(out.violations.is_empty());
    for rank in 0..4 {
        let mut synced = false;
        for e in out.log.iter().filter(|e| e.rank == RankId(rank)) {
            match e.kind {
                EventKind::WinSync => synced = true,
                EventKind::Read => assert!(synced, "rank {rank} read at seq {} before win_sync", e.seq),
                EventKind::Write | EventKind::Put => synced = false,
                _ => {}
            }
        }
    }
}
