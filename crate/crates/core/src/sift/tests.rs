use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

/// Exhaustive 26-neighbour scan written independently of the detector.
pub(crate) fn brute_force_extrema(dog: &DoGPyramid) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (octave, levels) in dog.octaves.iter().enumerate() {
        let (w, h) = (levels[0].width(), levels[0].height());
        for level in 1..levels.len() - 1 {
            for y in 1..h.saturating_sub(1) {
                for x in 1..w.saturating_sub(1) {
                    let v = levels[level].get(x, y);
                    let mut neighbours = Vec::with_capacity(26);
                    for l in level - 1..=level + 1 {
                        for yy in y - 1..=y + 1 {
                            for xx in x - 1..=x + 1 {
                                if (l, yy, xx) != (level, y, x) {
                                    neighbours.push(levels[l].get(xx, yy));
                                }
                            }
                        }
                    }
                    if neighbours.iter().all(|&n| v > n) || neighbours.iter().all(|&n| v < n) {
                        out.push(Candidate { octave, level, y, x });
                    }
                }
            }
        }
    }
    out
}

fn blob_image(w: usize, h: usize, blobs: &[(f64, f64, f64, f64)]) -> GrayImage {
    GrayImage::from_fn(w, h, |x, y| {
        let v: f64 = 0.5
            + blobs
                .iter()
                .map(|&(cx, cy, r, a)| {
                    let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                    a * (-d2 / (2.0 * r * r)).exp()
                })
                .sum::<f64>();
        v.clamp(0.0, 1.0) as f32
    })
    .unwrap()
}

fn random_blobs(rng: &mut ChaCha8Rng, w: usize, h: usize, n: usize) -> Vec<(f64, f64, f64, f64)> {
    (0..n)
        .map(|_| {
            (
                rng.random_range(0.0..w as f64),
                rng.random_range(0.0..h as f64),
                rng.random_range(1.5..5.0),
                rng.random_range(-0.35..0.35),
            )
        })
        .collect()
}

#[test]
fn extrema_match_brute_force_on_random_images() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let img = GrayImage::from_fn(48, 40, |_, _| rng.random::<f32>()).unwrap();
        let dog = build_dog(&build_scale_space(&img, &SiftParams::default()).unwrap());
        assert_eq!(detect_extrema(&dog), brute_force_extrema(&dog));
    }
}

#[test]
fn flat_and_plateau_have_no_extrema() {
    let flat = GrayImage::filled(40, 40, 0.6).unwrap();
    let dog = build_dog(&build_scale_space(&flat, &SiftParams::default()).unwrap());
    assert!(detect_extrema(&dog).is_empty());

    // A plateau planted directly into the DoG: equal values are never strict extrema.
    let mut dog = dog;
    for level in dog.octaves[0].iter_mut() {
        *level = GrayImage::filled(level.width(), level.height(), 0.25).unwrap();
    }
    assert!(detect_extrema(&dog).is_empty());
}

#[test]
fn single_blob_has_one_dominant_extremum() {
    let img = blob_image(64, 64, &[(32.0, 32.0, 4.0, -0.4)]);
    let ss = build_scale_space(&img, &SiftParams::default()).unwrap();
    let dog = build_dog(&ss);
    let cands = detect_extrema(&dog);
    assert_eq!(cands, brute_force_extrema(&dog));
    let strongest = cands
        .iter()
        .max_by(|a, b| {
            let va = dog.octaves[a.octave][a.level].get(a.x, a.y).abs();
            let vb = dog.octaves[b.octave][b.level].get(b.x, b.y).abs();
            va.total_cmp(&vb)
        })
        .expect("blob produces a candidate");
    let scale = ss.octave_scale(strongest.octave);
    let (x, y) = (strongest.x as f64 * scale, strongest.y as f64 * scale);
    assert!((x - 32.0).abs() <= 2.0 && (y - 32.0).abs() <= 2.0, "({x},{y})");

    let kps = refine_keypoints(&cands, &dog, &ss, &SiftParams::default().refine());
    assert!(!kps.is_empty());
    let near: Vec<_> = kps.iter().filter(|k| (k.x - 32.0).hypot(k.y - 32.0) < 2.0).collect();
    assert!(!near.is_empty(), "blob keypoint retained");
    // A Gaussian blob of standard deviation 4 has characteristic scale 4.
    assert!(near.iter().any(|k| (k.sigma / 4.0 - 1.0).abs() < 0.2), "{near:?}");
}

#[test]
fn zero_contrast_candidate_is_dropped() {
    let flat = GrayImage::filled(40, 40, 0.6).unwrap();
    let ss = build_scale_space(&flat, &SiftParams::default()).unwrap();
    let dog = build_dog(&ss);
    let c = Candidate {
        octave: 0,
        level: 1,
        y: 20,
        x: 20,
    };
    assert!(refine_candidate(&c, &dog, &ss, &SiftParams::default().refine()).is_none());
}

#[test]
fn diverging_interpolation_is_dropped() {
    // A DoG that keeps rising along the scale axis pushes the offset out of range.
    let img = GrayImage::filled(32, 32, 0.5).unwrap();
    let ss = build_scale_space(&img, &SiftParams::default()).unwrap();
    let mut dog = build_dog(&ss);
    for (i, level) in dog.octaves[0].iter_mut().enumerate() {
        *level = GrayImage::from_fn(32, 32, |x, y| {
            let d2 = (x as f32 - 16.0).powi(2) + (y as f32 - 16.0).powi(2);
            0.5 * (i as f32 + 1.0) - 0.001 * d2
        })
        .unwrap();
    }
    let c = Candidate {
        octave: 0,
        level: 3,
        y: 16,
        x: 16,
    };
    assert!(refine_candidate(&c, &dog, &ss, &SiftParams::default().refine()).is_none());
}

#[test]
fn straight_edge_candidates_are_rejected() {
    let img = GrayImage::from_fn(64, 64, |x, _| if x < 32 { 0.1 } else { 0.9 }).unwrap();
    let ss = build_scale_space(&img, &SiftParams::default()).unwrap();
    let dog = build_dog(&ss);
    let params = SiftParams::default().refine();
    let cands = detect_extrema(&dog);
    for c in &cands {
        // Direct curvature-ratio evaluation along the edge line.
        let d = &dog.octaves[c.octave][c.level];
        let at = |dx: isize, dy: isize| f64::from(d.get((c.x as isize + dx) as usize, (c.y as isize + dy) as usize));
        let dxx = at(1, 0) + at(-1, 0) - 2.0 * at(0, 0);
        let dyy = at(0, 1) + at(0, -1) - 2.0 * at(0, 0);
        let dxy = (at(1, 1) - at(-1, 1) - at(1, -1) + at(-1, -1)) / 4.0;
        let (tr, det) = (dxx + dyy, dxx * dyy - dxy * dxy);
        let edge_like = det <= 0.0 || tr * tr * 10.0 >= 121.0 * det;
        let on_edge_line = (c.x as f64 * ss.octave_scale(c.octave) - 31.5).abs() < 6.0 * ss.octave_scale(c.octave);
        if on_edge_line && c.y > 2 && c.y + 3 < d.height() {
            assert!(edge_like || refine_candidate(c, &dog, &ss, &params).is_none());
        }
    }
    let kept = refine_keypoints(&cands, &dog, &ss, &params);
    // Only the image corners (where the edge meets the border) may survive.
    for k in &kept {
        assert!(k.y < 12.0 || k.y > 52.0, "{k:?}");
    }
}

fn manual_keypoint(ss: &ScaleSpace, x: f64, y: f64) -> Keypoint {
    Keypoint {
        x,
        y,
        octave: 0,
        interval: 1.0,
        sigma: ss.level_sigma(1.0),
        orientation: 0.0,
        response: 1.0,
    }
}

#[test]
fn ramp_orientations() {
    let horiz = GrayImage::from_fn(48, 48, |x, _| x as f32 / 48.0).unwrap();
    let ss = build_scale_space(&horiz, &SiftParams::default()).unwrap();
    let oriented = assign_orientations(&manual_keypoint(&ss, 24.0, 24.0), &ss);
    assert_eq!(oriented.len(), 1);
    assert!(oriented[0].orientation.abs() < 1e-9, "{}", oriented[0].orientation);

    let vert = GrayImage::from_fn(48, 48, |_, y| y as f32 / 48.0).unwrap();
    let ss = build_scale_space(&vert, &SiftParams::default()).unwrap();
    let oriented = assign_orientations(&manual_keypoint(&ss, 24.0, 24.0), &ss);
    assert_eq!(oriented.len(), 1);
    assert!((oriented[0].orientation - FRAC_PI_2).abs() < 1e-9);
}

#[test]
fn roof_gives_two_opposite_orientations() {
    // Symmetric ridge along x = 35: gradients point at 0 on one side and pi on the other.
    let img = GrayImage::from_fn(72, 72, |x, _| (0.2 + (x as f64 - 35.0).abs() / 80.0) as f32).unwrap();
    let ss = build_scale_space(&img, &SiftParams::default()).unwrap();
    let kp = manual_keypoint(&ss, 35.0, 35.0);

    // Direct accumulation oracle over the same window.
    let level = &ss.octaves[0][1];
    let sigma_w = 1.5 * kp.sigma;
    let radius = (3.0 * sigma_w).round() as i64;
    let mut hist = [0.0f64; ORIENTATION_BINS];
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            if dx * dx + dy * dy > radius * radius {
                continue;
            }
            let (px, py) = ((35 + dx) as usize, (35 + dy) as usize);
            let gx = f64::from(level.get(px + 1, py)) - f64::from(level.get(px - 1, py));
            let gy = f64::from(level.get(px, py + 1)) - f64::from(level.get(px, py - 1));
            let mut deg = gy.atan2(gx).to_degrees();
            if deg < -5.0 {
                deg += 360.0;
            }
            let bin = ((deg + 5.0) / 10.0).floor() as usize % 36;
            hist[bin] += gx.hypot(gy) * (-((dx * dx + dy * dy) as f64) / (2.0 * sigma_w * sigma_w)).exp();
        }
    }
    let raw = orientation_histogram(&kp, &ss);
    for (a, b) in raw.iter().zip(&hist) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!((hist[0] / hist[18] - 1.0).abs() < 1e-3, "{} vs {}", hist[0], hist[18]);

    let oriented = assign_orientations(&kp, &ss);
    assert_eq!(oriented.len(), 2, "{oriented:?}");
    let near = |target: f64| {
        oriented.iter().any(|k| {
            let d = (k.orientation - target).rem_euclid(TAU);
            d.min(TAU - d) < 0.05
        })
    };
    assert!(near(0.0) && near(PI), "{oriented:?}");
}

fn rotate90(img: &GrayImage) -> GrayImage {
    // Output (x', y') = (H - 1 - y, x).
    let (w, h) = (img.width(), img.height());
    GrayImage::from_fn(h, w, |xo, yo| img.get(yo, h - 1 - xo)).unwrap()
}

fn descriptor_distance(a: &Descriptor, b: &Descriptor) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| f64::from(x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn descriptor_survives_quarter_turn() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let blobs = random_blobs(&mut rng, 80, 80, 60);
    let img = blob_image(80, 80, &blobs);
    let rot = rotate90(&img);
    let params = SiftParams::default();
    let ss = build_scale_space(&img, &params).unwrap();
    let ss_rot = build_scale_space(&rot, &params).unwrap();

    let kp = manual_keypoint(&ss, 40.0, 40.0);
    let kp_rot = manual_keypoint(&ss_rot, 80.0 - 1.0 - 40.0, 40.0);
    let a = assign_orientations(&kp, &ss);
    let b = assign_orientations(&kp_rot, &ss_rot);
    assert!(!a.is_empty() && a.len() == b.len());
    let circular = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(TAU);
        d.min(TAU - d)
    };
    for ka in &a {
        let target = ka.orientation + FRAC_PI_2;
        let kb = b
            .iter()
            .min_by(|p, q| circular(p.orientation, target).total_cmp(&circular(q.orientation, target)))
            .unwrap();
        assert!(circular(kb.orientation, target) < 1e-6);
        let da = compute_descriptor(ka, &ss).unwrap();
        let db = compute_descriptor(kb, &ss_rot).unwrap();
        let dist = descriptor_distance(&da, &db);
        assert!(dist < 0.35, "distance {dist}");
    }
}

#[test]
fn descriptor_invariants_and_clamp() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let img = blob_image(96, 96, &random_blobs(&mut rng, 96, 96, 80));
    let feats = extract(&img, None, &SiftParams::default()).unwrap();
    assert!(!feats.is_empty());
    for (kp, d) in &feats {
        assert!((d.norm() - 1.0).abs() < 1e-6);
        assert!(d.values().iter().all(|&v| v >= 0.0));
        assert!((0.0..TAU).contains(&kp.orientation));
        assert!(kp.sigma > 0.0 && kp.x >= 0.0 && kp.y >= 0.0 && kp.x < 96.0 && kp.y < 96.0);
    }

    // A constant-gradient patch concentrates energy in a few bins; clamping caps them.
    let ramp = GrayImage::from_fn(64, 64, |x, y| (x as f32 * 0.7 + y as f32 * 0.2) / 64.0).unwrap();
    let ss = build_scale_space(&ramp, &SiftParams::default()).unwrap();
    let kp = assign_orientations(&manual_keypoint(&ss, 32.0, 32.0), &ss)[0];
    let d = compute_descriptor(&kp, &ss).unwrap();
    // Clamped entries share the maximum after renormalization.
    let max = d.values().iter().copied().fold(0.0f32, f32::max);
    assert!(max > 0.2);
    let at_max = d.values().iter().filter(|&&v| (max - v) < 1e-6).count();
    assert!(at_max >= 4, "{at_max} entries at the cap");
}

#[test]
fn descriptor_window_outside_is_dropped() {
    let img = blob_image(64, 64, &[(32.0, 32.0, 4.0, 0.3)]);
    let ss = build_scale_space(&img, &SiftParams::default()).unwrap();
    let kp = manual_keypoint(&ss, 3.0, 32.0);
    assert!(compute_descriptor(&kp, &ss).is_none());
}

#[test]
fn mask_filtering() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let img = blob_image(96, 80, &random_blobs(&mut rng, 96, 80, 70));
    let params = SiftParams::default();
    let unmasked = extract(&img, None, &params).unwrap();

    let zeros = SoftMask::filled(96, 80, 0.0).unwrap();
    assert!(extract(&img, Some(&zeros), &params).unwrap().is_empty());
    let ones = SoftMask::filled(96, 80, 1.0).unwrap();
    assert_eq!(extract(&img, Some(&ones), &params).unwrap(), unmasked);

    let left = SoftMask::new(96, 80, (0..96 * 80).map(|i| if i % 96 < 48 { 1.0 } else { 0.0 }).collect()).unwrap();
    let masked = extract(&img, Some(&left), &params).unwrap();
    assert!(!masked.is_empty() && masked.len() < unmasked.len());
    for (kp, _) in &masked {
        assert!(left.at_rounded(kp.x, kp.y) >= params.keypoint_threshold);
        assert!(unmasked.iter().any(|(u, _)| u == kp));
    }
    let expected: Vec<_> = unmasked
        .iter()
        .filter(|(kp, _)| left.at_rounded(kp.x, kp.y) >= params.keypoint_threshold)
        .cloned()
        .collect();
    assert_eq!(masked, expected);

    let wrong = SoftMask::filled(10, 10, 1.0).unwrap();
    assert!(extract(&img, Some(&wrong), &params).is_err());
}

#[test]
fn extraction_is_deterministic_across_pools() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let img = blob_image(96, 96, &random_blobs(&mut rng, 96, 96, 80));
    let params = SiftParams::default();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| extract(&img, None, &params).unwrap());
    let b = three.install(|| extract(&img, None, &params).unwrap());
    assert_eq!(a, b);
}
