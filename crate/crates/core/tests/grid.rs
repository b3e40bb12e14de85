use proptest::prelude::*;
use rma_halo::grid::{
    make_field, pack_halo, parse_duration, simulate, unpack_halo, verify_halos, verify_interior, ComputeDelay,
    Encoding, Field, TimestepConfig, SENTINEL_BITS,
};
use rma_halo::halo::{plan_weak, Backend, Direction, EpochPlacement, HaloOptions};
use rma_halo::sim::{RankId, TransportConfig, MILLISECOND};

/// Every self-swap of a one-rank periodic world, optionally skipping one
/// direction.
fn self_swap(f: &mut Field, skip: Option<Direction>) {
    for dir in Direction::ALL {
        if Some(dir) == skip {
            continue;
        }
        let mut buf = vec![0u8; f.region_bytes(dir)];
        pack_halo(f, dir, &mut buf).unwrap();
        unpack_halo(f, dir.opposite(), &buf).unwrap();
    }
}

#[test]
fn one_by_one_field_holds_its_encoding() {
    let plan = plan_weak((1, 1, 1), 1, false, 1).unwrap();
    let f = make_field(&plan, RankId(0), 3);
    assert_eq!(f.data.len(), 9);
    assert_eq!(f.get(1, 1, 0), Encoding::encode(3, 0, 0, 0));
    for (i, j) in [(0, 0), (0, 1), (2, 2), (1, 0)] {
        assert_eq!(f.get(i, j, 0).to_bits(), SENTINEL_BITS);
        assert_eq!(f.expected(i, j, 0), None);
    }
    assert!(verify_interior(&f).is_empty());
    assert!(verify_halos(&f).is_empty());
}

#[test]
fn encoding_covers_the_largest_benchmark_grid() {
    assert!(Encoding::fits(2048, 2048, 128, 28));
    assert!(Encoding::fits(8192, 8192, 8192, 16384));
    assert!(!Encoding::fits(8193, 1, 1, 1));
    let a = Encoding::encode(27, 2047, 2047, 127);
    assert_eq!(a as u64 as f64, a);
    assert_ne!(a, Encoding::encode(27, 2047, 2047, 126));
}

#[test]
fn pack_sizes_follow_the_region_shape() {
    let plan = plan_weak((5, 3, 4), 1, true, 2).unwrap();
    let f = make_field(&plan, RankId(0), 0);
    assert_eq!(f.region_bytes(Direction::XMinus), 2 * 3 * 4 * 8);
    assert_eq!(f.region_bytes(Direction::YPlus), 5 * 2 * 4 * 8);
    assert_eq!(f.region_bytes(Direction::XPlusYMinus), 2 * 2 * 4 * 8);
    let mut short = vec![0u8; 8];
    assert!(pack_halo(&f, Direction::XMinus, &mut short).is_err());
}

#[test]
fn x_faces_pack_layer_major_with_z_fastest() {
    let plan = plan_weak((4, 2, 2), 1, true, 2).unwrap();
    let f = make_field(&plan, RankId(0), 0);
    let mut buf = vec![0u8; f.region_bytes(Direction::XPlus)];
    pack_halo(&f, Direction::XPlus, &mut buf).unwrap();
    let vals: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    // global x 2 and 3, then y 0 and 1, then z
    let mut want = Vec::new();
    for gx in [2, 3] {
        for gy in [0, 1] {
            for gz in [0, 1] {
                want.push(Encoding::encode(0, gx, gy, gz));
            }
        }
    }
    assert_eq!(vals, want);

    let mut buf = vec![0u8; f.region_bytes(Direction::YMinus)];
    pack_halo(&f, Direction::YMinus, &mut buf).unwrap();
    let first: Vec<f64> = buf
        .chunks_exact(8)
        .take(4)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    assert_eq!(
        first,
        vec![
            Encoding::encode(0, 0, 0, 0),
            Encoding::encode(0, 0, 0, 1),
            Encoding::encode(0, 1, 0, 0),
            Encoding::encode(0, 1, 0, 1)
        ]
    );
}

#[test]
fn self_swap_on_a_periodic_rank_fills_every_halo() {
    let plan = plan_weak((4, 3, 2), 1, true, 2).unwrap();
    let mut f = make_field(&plan, RankId(0), 1);
    assert_eq!(verify_halos(&f).len(), (8 * 7 - 12) * 2);
    self_swap(&mut f, None);
    assert!(verify_halos(&f).is_empty());
    assert!(verify_interior(&f).is_empty());
}

#[test]
fn skipped_corner_leaves_depth_squared_columns() {
    let (depth, lz) = (2, 3);
    let plan = plan_weak((4, 4, lz), 1, true, depth).unwrap();
    for corner in [Direction::XMinusYMinus, Direction::XPlusYPlus] {
        let mut f = make_field(&plan, RankId(0), 0);
        self_swap(&mut f, Some(corner));
        assert_eq!(verify_halos(&f).len(), depth * depth * lz);
    }
}

#[test]
fn one_corrupt_cell_is_one_mismatch() {
    let plan = plan_weak((4, 3, 2), 2, false, 2).unwrap();
    let sender = make_field(&plan, RankId(1), 0);
    let mut receiver = make_field(&plan, RankId(0), 0);
    let mut buf = vec![0u8; sender.region_bytes(Direction::XMinus)];
    pack_halo(&sender, Direction::XMinus, &mut buf).unwrap();

    let mut clean = receiver.clone();
    unpack_halo(&mut clean, Direction::XPlus, &buf).unwrap();
    assert!(verify_halos(&clean).is_empty());

    buf[5 * 8] ^= 1;
    unpack_halo(&mut receiver, Direction::XPlus, &buf).unwrap();
    let bad = verify_halos(&receiver);
    assert_eq!(bad.len(), 1);
    assert_ne!(bad[0].found.to_bits(), bad[0].expected.to_bits());
}

#[test]
fn repeated_swaps_change_nothing() {
    let plan = plan_weak((3, 5, 2), 1, true, 1).unwrap();
    let mut f = make_field(&plan, RankId(0), 0);
    self_swap(&mut f, None);
    let once = f.data.clone();
    self_swap(&mut f, None);
    assert!(once.iter().zip(&f.data).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn unpack_touches_only_its_halo_box() {
    let plan = plan_weak((4, 4, 2), 1, true, 2).unwrap();
    for dir in Direction::ALL {
        let mut f = make_field(&plan, RankId(0), 0);
        let before = f.data.clone();
        let bytes = vec![0xAB; f.region_bytes(dir)];
        unpack_halo(&mut f, dir, &bytes).unwrap();
        let (xr, yr) = f.halo_box(dir);
        for i in 0..8 {
            for j in 0..8 {
                for k in 0..2 {
                    let at = f.idx(i, j, k);
                    let changed = before[at].to_bits() != f.data[at].to_bits();
                    assert_eq!(changed, xr.contains(&i) && yr.contains(&j), "{dir} ({i},{j},{k})");
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pack_unpack_round_trips(lx in 1usize..6, ly in 1usize..6, lz in 1usize..4, depth in 1usize..3, d in 0usize..8) {
        prop_assume!(lx >= depth && ly >= depth);
        let plan = plan_weak((lx, ly, lz), 1, true, depth).unwrap();
        let dir = Direction::ALL[d];
        let f = make_field(&plan, RankId(0), 0);
        let mut buf = vec![0u8; f.region_bytes(dir)];
        pack_halo(&f, dir, &mut buf).unwrap();
        let mut g = f.clone();
        unpack_halo(&mut g, dir.opposite(), &buf).unwrap();
        let mut again = vec![0u8; f.region_bytes(dir)];
        // the unpacked halo, re-read in pack order, is the same bytes
        let (hx, hy) = g.halo_box(dir.opposite());
        prop_assert_eq!(hx.len() * hy.len() * lz * 8, buf.len());
        pack_halo(&g, dir, &mut again).unwrap();
        prop_assert_eq!(&again, &buf);
        let outside = verify_halos(&g).iter().all(|m| !(hx.contains(&m.i) && hy.contains(&m.j)));
        prop_assert!(outside);
    }

    #[test]
    fn wrapped_periodic_swap_is_exact(lx in 1usize..6, ly in 1usize..6, depth in 1usize..3) {
        prop_assume!(lx >= depth && ly >= depth);
        let plan = plan_weak((lx, ly, 2), 1, true, depth).unwrap();
        let mut f = make_field(&plan, RankId(0), 2);
        self_swap(&mut f, None);
        prop_assert!(verify_halos(&f).is_empty());
    }
}

#[test]
fn zero_timesteps_give_empty_stats() {
    let plan = plan_weak((4, 4, 2), 4, true, 2).unwrap();
    let cfg = TimestepConfig::new(HaloOptions::new(Backend::Fence), 2, 0);
    let out = simulate(TransportConfig::new(4, 0), &plan, &cfg).unwrap();
    assert!(out.ranks.iter().all(|r| r.steps.is_empty() && r.mismatches == 0));
    assert_eq!(out.mean_comm_time(), 0.0);
    assert!(out.step_comm_times().is_empty());
    assert!(out.violations.is_empty());
}

#[test]
fn shifted_initiate_is_free_without_imbalance() {
    let plan = plan_weak((4, 4, 2), 4, true, 2).unwrap();
    for backend in [Backend::Fence, Backend::Pscw] {
        let cfg = TimestepConfig::new(HaloOptions::new(backend), 1, 5);
        let out = simulate(TransportConfig::new(4, 0), &plan, &cfg).unwrap();
        assert!(out.mean_initiate_time() < out.mean_comm_time() / 2.0, "{backend}");
    }
    let mut cfg = TimestepConfig::new(HaloOptions::new(Backend::Fence), 1, 5);
    cfg.compute_delay = ComputeDelay::Uniform { lo: 0, hi: MILLISECOND };
    let shifted = simulate(TransportConfig::new(4, 0), &plan, &cfg).unwrap();
    cfg.options = cfg.options.with_placement(EpochPlacement::Naive);
    let naive = simulate(TransportConfig::new(4, 0), &plan, &cfg).unwrap();
    assert!(shifted.mean_initiate_time() < naive.mean_initiate_time());
}

#[test]
fn four_ranks_with_many_fields_on_every_backend() {
    let plan = plan_weak((4, 4, 2), 4, true, 2).unwrap();
    for backend in Backend::ALL {
        let cfg = TimestepConfig::new(HaloOptions::new(*backend), 28, 3);
        let out = simulate(TransportConfig::new(4, 1), &plan, &cfg).unwrap();
        assert!(out.violations.is_empty(), "{backend}");
        out.check().unwrap();
        assert_eq!(out.ranks.len(), 4);
    }
}

#[test]
fn plan_and_world_sizes_must_agree() {
    let plan = plan_weak((4, 4, 2), 4, true, 2).unwrap();
    let cfg = TimestepConfig::new(HaloOptions::new(Backend::P2p), 1, 1);
    assert!(simulate(TransportConfig::new(2, 0), &plan, &cfg).is_err());
}

#[test]
fn compute_delay_specs() {
    assert_eq!("none".parse::<ComputeDelay>().unwrap(), ComputeDelay::None);
    assert_eq!(
        "fixed:250us".parse::<ComputeDelay>().unwrap(),
        ComputeDelay::Fixed(250_000)
    );
    let u: ComputeDelay = "uniform:0:10ms".parse().unwrap();
    assert_eq!(
        u,
        ComputeDelay::Uniform {
            lo: 0,
            hi: 10 * MILLISECOND
        }
    );
    assert_eq!(u.to_string(), "uniform:0ms:10ms");
    assert!("uniform:5ms:1ms".parse::<ComputeDelay>().is_err());
    assert!("fixed:3parsecs".parse::<ComputeDelay>().is_err());
    assert!("sometimes".parse::<ComputeDelay>().is_err());
    assert_eq!(parse_duration("1.5us").unwrap(), 1500);
    assert_eq!(parse_duration("2s").unwrap(), 2_000 * MILLISECOND);
    assert!(ComputeDelay::Fixed(0).is_zero());
    for step in 0..50 {
        let t = u.sample(3, 1, step);
        assert!(t <= 10 * MILLISECOND);
        assert_eq!(t, u.sample(3, 1, step));
    }
}
