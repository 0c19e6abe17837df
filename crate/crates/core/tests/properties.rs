use evtrack::descriptor::bhattacharyya_distance;
use evtrack::io::{decode_binary, encode_binary, format_csv, parse_csv};
use evtrack::projection::{project_event, threshold_contour, Cell, Region};
use evtrack::synth::{self, SceneScript};
use evtrack::{merge_sorted, DecayingMap, Descriptor, Event, EventStream, Histogram, Polarity, SensorGeometry, Velocity};
use proptest::prelude::*;

const W: u16 = 64;
const H: u16 = 48;

fn geometry() -> SensorGeometry {
    SensorGeometry::new(W, H).unwrap()
}

/// Sorted event list built from non-negative time steps.
fn events(max_len: usize) -> impl Strategy<Value = Vec<Event>> {
    prop::collection::vec((0u64..50, 0..W, 0..H, any::<bool>()), 0..max_len).prop_map(|raw| {
        let mut t = 0;
        raw.into_iter()
            .map(|(dt, x, y, on)| {
                t += dt;
                Event::new(t, x, y, if on { Polarity::On } else { Polarity::Off })
            })
            .collect()
    })
}

fn stream(ev: Vec<Event>) -> EventStream {
    EventStream::new(geometry(), ev).unwrap()
}

fn descriptor(cols: usize) -> impl Strategy<Value = Descriptor> {
    prop::collection::vec(0.0f64..10.0, cols * cols)
        .prop_filter("needs mass", |v| v.iter().sum::<f64>() > 1e-6)
        .prop_map(move |v| Descriptor::from_grid(cols, cols, &v).unwrap())
}

proptest! {
    #[test]
    fn binary_round_trip_is_byte_identical(ev in events(200)) {
        let s = stream(ev);
        let bytes = encode_binary(&s);
        let back = decode_binary(&bytes).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(encode_binary(&back), bytes);
    }

    #[test]
    fn csv_and_binary_agree(ev in events(100)) {
        let s = stream(ev);
        let mut text = Vec::new();
        format_csv(&s, &mut text).unwrap();
        let from_csv = parse_csv(&text[..]).unwrap();
        prop_assert_eq!(from_csv.events(), s.events());
    }

    #[test]
    fn merge_is_a_sorted_stable_permutation(a in events(80), b in events(80)) {
        let (sa, sb) = (stream(a.clone()), stream(b.clone()));
        let m = merge_sorted(&sa, &sb).unwrap();
        let out = m.events();
        prop_assert_eq!(out.len(), a.len() + b.len());
        prop_assert!(out.windows(2).all(|w| w[0].t <= w[1].t));
        // Tag events by origin through their position in the output.
        let (mut i, mut j) = (0, 0);
        for e in out {
            if i < a.len() && *e == a[i] && (j >= b.len() || b[j].t >= a[i].t) {
                i += 1;
            } else {
                prop_assert!(j < b.len() && *e == b[j]);
                // Ties go to the first stream.
                prop_assert!(i >= a.len() || b[j].t < a[i].t);
                j += 1;
            }
        }
        prop_assert_eq!((i, j), (a.len(), b.len()));
    }

    #[test]
    fn contour_shrinks_as_threshold_rises(ev in events(300), lo in 0.05f64..1.0, hi in 0.05f64..1.0) {
        prop_assume!(!ev.is_empty());
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let mut h = Histogram::new(Region::full_frame(W as usize, H as usize, 1), Velocity::new(0.0, 0.0), 0);
        h.accumulate(&ev, u64::MAX);
        let pdf = h.to_pdf().unwrap();
        let (wide, narrow) = (threshold_contour(&pdf, lo).unwrap(), threshold_contour(&pdf, hi).unwrap());
        prop_assert!(!narrow.is_empty());
        prop_assert!(narrow.cells().iter().all(|c| wide.contains(*c)));
    }

    #[test]
    fn descriptor_distance_is_symmetric_and_zero_on_itself(a in descriptor(5), b in descriptor(5)) {
        let ab = bhattacharyya_distance(&a, &b).unwrap();
        let ba = bhattacharyya_distance(&b, &a).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
        prop_assert_eq!(bhattacharyya_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn descriptor_ignores_overall_scale(v in prop::collection::vec(0.0f64..10.0, 16), k in 0.01f64..100.0, other in descriptor(4)) {
        prop_assume!(v.iter().sum::<f64>() > 1e-6);
        let a = Descriptor::from_grid(4, 4, &v).unwrap();
        let scaled: Vec<f64> = v.iter().map(|x| x * k).collect();
        let b = Descriptor::from_grid(4, 4, &scaled).unwrap();
        let (da, db) = (bhattacharyya_distance(&a, &other).unwrap(), bhattacharyya_distance(&b, &other).unwrap());
        prop_assert!((da - db).abs() < 1e-9);
    }

    #[test]
    fn decaying_map_matches_direct_sum(
        steps in prop::collection::vec((0u64..3000, 0u32..4, 0u32..4), 1..60),
        tau_ms in 0.2f64..20.0,
    ) {
        let tau = tau_ms * 1e-3;
        let mut map = DecayingMap::new(4, 4, 2, tau);
        let mut t = 0u64;
        let mut log = Vec::new();
        for (dt, ix, iy) in steps {
            t += dt;
            map.update(Cell { ix, iy }, t).unwrap();
            log.push((t, ix, iy));
        }
        let weight = |tj: u64| (-((t - tj) as f64 * 1e-6) / tau).exp();
        let mut sum = 0.0;
        let (mut mx, mut my) = (0.0, 0.0);
        for iy in 0..4 {
            for ix in 0..4 {
                let direct: f64 = log.iter().filter(|e| e.1 == ix && e.2 == iy).map(|e| weight(e.0)).sum();
                let got = map.value(Cell { ix, iy });
                prop_assert!((got - direct).abs() <= 1e-9 * direct.max(1.0));
                sum += direct;
                mx += direct * ix as f64 / 2.0;
                my += direct * iy as f64 / 2.0;
            }
        }
        prop_assert!((map.sum() - sum).abs() <= 1e-9 * sum.max(1.0));
        if sum > 1e-200 {
            let m = map.mean_position().unwrap();
            prop_assert!((m.x - mx / sum).abs() < 1e-6 && (m.y - my / sum).abs() < 1e-6);
        }
    }

    #[test]
    fn projection_follows_the_hypothesis(
        x in 0u16..W, y in 0u16..H, t in 0u64..1_000_000, t_ref in 0u64..1_000_000,
        vx in -2000.0f64..2000.0, vy in -2000.0f64..2000.0,
    ) {
        let e = Event::new(t, x, y, Polarity::On);
        let v = Velocity::new(vx, vy);
        // At the reference time, and for a static hypothesis, nothing moves.
        let same = project_event(&Event::new(t_ref, x, y, Polarity::On), v, t_ref);
        prop_assert_eq!((same.x, same.y), (x as f64, y as f64));
        let still = project_event(&e, Velocity::new(0.0, 0.0), t_ref);
        prop_assert_eq!((still.x, still.y), (x as f64, y as f64));
        // Moving the reference by dt moves the projection by v dt.
        let p = project_event(&e, v, t_ref);
        let q = project_event(&e, v, t_ref + 1000);
        prop_assert!(((q.x - p.x) - vx * 1e-3).abs() < 1e-6);
        prop_assert!(((q.y - p.y) - vy * 1e-3).abs() < 1e-6);
    }

    #[test]
    fn generator_is_deterministic_and_ordered(
        seed in any::<u64>(), vx in -900.0f64..900.0, vy in -900.0f64..900.0,
        jitter in 0u64..200, dither in any::<bool>(), noise in 0.0f64..20_000.0,
    ) {
        let mut s = SceneScript::new(synth::diamond(4), Velocity::new(120.0, 90.0), Velocity::new(vx, vy), 20_000);
        s.jitter_us = jitter;
        s.dither = dither;
        s.noise_rate = noise;
        let (a, _) = synth::generate(&s, seed).unwrap();
        let (b, _) = synth::generate(&s, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.events().windows(2).all(|w| w[0].t <= w[1].t));
        let g = a.geometry();
        prop_assert!(a.events().iter().all(|e| g.contains(e.x as u32, e.y as u32)));
    }
}
