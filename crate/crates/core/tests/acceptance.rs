//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line (run with `cargo test --test acceptance -- --nocapture` to see
//! them). Criterion 9 (CLI determinism and file formats) lives in the
//! CLI crate's own acceptance target.

mod common;

use std::time::Instant;

use nalgebra::Vector3;
use rand::RngExt;

use common::*;
use faceflow::losses::{
    appearance_loss, reconstruction_loss, total_loss, IdentityExtractor, LossWeights,
};
use faceflow::morphable_model::{reconstruct_shape, recombine, Coefficients};
use faceflow::rasterizer::{rasterize_projected, Image};
use faceflow::rcn::{
    rcn_forward, rcn_gradients, FeatureMap, RcnParams, RegionMask, DEFAULT_ALPHA, DEFAULT_BETA,
    EPS_STD,
};
use faceflow::sampling::{sample, sample_stats, sampler_rng, DatasetManifest, Provenance, VideoEntry};
use faceflow::temporal_flow::{dense_flow, sparse_flow, temporal_loss, temporal_loss_interior, warp, DenseFlowField};
use faceflow::Provenance::{Inter, Intra};

fn report(criterion: &str, pass: bool) {
    println!(
        "acceptance {criterion}: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion failed: {criterion}");
}

#[test]
fn criterion_1_blendshape_linearity_and_recombination() {
    let start = Instant::now();
    let mut rng = rng(101);
    let mut ok = true;
    for _ in 0..100 {
        let v = rng.random_range(3..10);
        let k_id = rng.random_range(1..5);
        let k_exp = rng.random_range(1..5);
        let model = random_model(&mut rng, v, k_id, k_exp);
        let c1 = random_coefficients(&mut rng, &model);
        let c2 = random_coefficients(&mut rng, &model);
        let sum = Coefficients {
            alpha_id: c1
                .alpha_id
                .iter()
                .zip(&c2.alpha_id)
                .map(|(a, b)| a + b)
                .collect(),
            alpha_exp: c1
                .alpha_exp
                .iter()
                .zip(&c2.alpha_exp)
                .map(|(a, b)| a + b)
                .collect(),
        };
        let s1 = reconstruct_shape(&model, &c1).unwrap();
        let s2 = reconstruct_shape(&model, &c2).unwrap();
        let s12 = reconstruct_shape(&model, &sum).unwrap();
        for i in 0..v {
            let mean = model.mean_shape()[i];
            let lhs = s12.vertices[i] - mean;
            let rhs = (s1.vertices[i] - mean) + (s2.vertices[i] - mean);
            if (lhs - rhs).abs().max() > 1e-10 {
                ok = false;
            }
        }
        // Self-recombination must be bit-for-bit.
        let direct = reconstruct_shape(&model, &c1).unwrap();
        let mixed = recombine(&model, &c1, &c1).unwrap();
        if direct.vertices != mixed.vertices {
            ok = false;
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed.as_secs_f64() < 1.0;
    println!("  (100 models in {elapsed:?})");
    report("1 (blendshape linearity & recombination, 1e-10, <1s)", ok);
}

#[test]
fn criterion_2_rasterizer_oracle_equivalence() {
    let start = Instant::now();
    let (w, h) = (64usize, 64usize);
    let mut ok = true;
    for seed in 0..25u64 {
        let mut r = rng(200 + seed);
        let tri_count = r.random_range(5..=50);
        let (verts, tris) = random_projected_scene(&mut r, tri_count, w, h);
        let tex = gray_texture(verts.len());
        let raster = rasterize_projected(&verts, &tris, &tex, w, h).unwrap();
        let oracle = oracle_rasterize(&verts, &tris, w, h);
        for row in 0..h {
            for col in 0..w {
                if oracle.is_boundary(row, col) {
                    continue;
                }
                let idx = row * w + col;
                if raster.mask[idx] != oracle.mask[idx] {
                    eprintln!("seed {seed}: mask mismatch at interior ({row},{col})");
                    ok = false;
                } else if oracle.mask[idx] == 1 {
                    if raster.tri_index[idx] != oracle.winner[idx] {
                        eprintln!("seed {seed}: winner mismatch at interior ({row},{col})");
                        ok = false;
                    }
                    if (raster.depth[idx] - oracle.depth[idx]).abs() > 1e-6 {
                        eprintln!("seed {seed}: depth mismatch at interior ({row},{col})");
                        ok = false;
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed.as_secs_f64() < 30.0;
    println!("  (25 scenes in {elapsed:?})");
    report("2 (rasterizer vs exhaustive per-pixel oracle, <30s)", ok);
}

/// Independent re-derivation of the dense flow field: oracle coverage and
/// winners at both frames, Cramer barycentrics, from-scratch visibility.
fn oracle_flow_field(
    verts_t: &[Vector3<f64>],
    verts_prev: &[Vector3<f64>],
    tris: &[[u32; 3]],
    w: usize,
    h: usize,
) -> Vec<[f64; 3]> {
    let orc_t = oracle_rasterize(verts_t, tris, w, h);
    let orc_prev = oracle_rasterize(verts_prev, tris, w, h);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in verts_t.iter().chain(verts_prev) {
        lo = lo.min(v.z);
        hi = hi.max(v.z);
    }
    let eps = if hi > lo { 1e-5 * (hi - lo) } else { 0.0 };

    let sample_prev = |x: f64, y: f64| -> Option<f64> {
        if !(0.0..=w as f64).contains(&x) || !(0.0..=h as f64).contains(&y) {
            return None;
        }
        let gx = x - 0.5;
        let gy = y - 0.5;
        let (x0, y0) = (gx.floor(), gy.floor());
        let (fx, fy) = (gx - x0, gy - y0);
        let corners = [
            (x0, y0, (1.0 - fx) * (1.0 - fy)),
            (x0 + 1.0, y0, fx * (1.0 - fy)),
            (x0, y0 + 1.0, (1.0 - fx) * fy),
            (x0 + 1.0, y0 + 1.0, fx * fy),
        ];
        let mut covered: Vec<(usize, f64, f64)> = Vec::new();
        for &(cx, cy, weight) in &corners {
            if cx < 0.0 || cy < 0.0 || cx >= w as f64 || cy >= h as f64 {
                continue;
            }
            let idx = cy as usize * w + cx as usize;
            if orc_prev.mask[idx] == 1 {
                let d2 = (cx - gx) * (cx - gx) + (cy - gy) * (cy - gy);
                covered.push((idx, weight, d2));
            }
        }
        match covered.len() {
            0 => None,
            4 => Some(covered.iter().map(|&(i, wt, _)| wt * orc_prev.depth[i]).sum()),
            _ => covered
                .iter()
                .min_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
                .map(|&(i, _, _)| orc_prev.depth[i]),
        }
    };

    let mut field = vec![[0.0; 3]; w * h];
    for row in 0..h {
        for col in 0..w {
            let idx = row * w + col;
            if orc_t.mask[idx] == 0 {
                continue;
            }
            let tri = tris[orc_t.winner[idx] as usize];
            let p = (col as f64 + 0.5, row as f64 + 0.5);
            let (a, b, c) = (
                &verts_t[tri[0] as usize],
                &verts_t[tri[1] as usize],
                &verts_t[tri[2] as usize],
            );
            let l = oracle_barycentric(p, a, b, c).expect("winner is nondegenerate");
            let mut flow = [0.0; 3];
            let mut qz = 0.0;
            for k in 0..3 {
                let vt = &verts_t[tri[k] as usize];
                let vp = &verts_prev[tri[k] as usize];
                flow[0] += l[k] * (vt.x - vp.x);
                flow[1] += l[k] * (vt.y - vp.y);
                flow[2] += l[k] * (vt.z - vp.z);
                qz += l[k] * vt.z;
            }
            let s_t = qz >= orc_t.depth[idx] - eps;
            let s_prev = match sample_prev(p.0 - flow[0], p.1 - flow[1]) {
                Some(depth) => (qz - flow[2]) >= depth - eps,
                None => false,
            };
            if s_t && s_prev {
                field[idx] = flow;
            }
        }
    }
    field
}

#[test]
fn criterion_3_dense_flow_pipeline() {
    let start = Instant::now();
    let (w, h) = (64usize, 64usize);
    let mut ok = true;

    // Static mesh: identically zero flow.
    {
        let mut r = rng(300);
        let (verts, tris) = random_projected_scene(&mut r, 12, w, h);
        let geom = geometry_from_projected(verts.clone(), verts, tris, w, h);
        let field = dense_flow(&geom);
        if !field.final_flow.iter().all(|f| *f == [0.0; 3]) {
            eprintln!("static mesh produced nonzero flow");
            ok = false;
        }
    }

    // Rigid translation: constant field on support, within 1e-6.
    {
        let quad = vec![
            Vector3::new(8.0, 8.0, 0.5),
            Vector3::new(52.0, 10.0, 0.5),
            Vector3::new(50.0, 54.0, 0.5),
            Vector3::new(6.0, 50.0, 0.5),
        ];
        let shift = Vector3::new(3.2, -1.7, 0.0);
        let verts_t: Vec<_> = quad.iter().map(|v| v + shift).collect();
        let geom =
            geometry_from_projected(verts_t, quad, vec![[0, 1, 2], [0, 2, 3]], w, h);
        let field = dense_flow(&geom);
        let sup = support(&field.final_flow);
        if sup.is_empty() {
            ok = false;
        }
        for idx in sup {
            let f = field.final_flow[idx];
            if (f[0] - 3.2).abs() > 1e-6 || (f[1] + 1.7).abs() > 1e-6 || f[2].abs() > 1e-6 {
                eprintln!("translation flow off at {idx}: {f:?}");
                ok = false;
            }
        }
    }

    // 25 random scenes vs the from-scratch oracle: >= 99% of covered
    // pixels agree.
    for seed in 0..25u64 {
        let mut r = rng(310 + seed);
        let (verts_prev, tris) = random_projected_scene(&mut r, 20, w, h);
        let verts_t: Vec<_> = verts_prev
            .iter()
            .map(|v| {
                v + Vector3::new(
                    r.random_range(-3.0..3.0),
                    r.random_range(-3.0..3.0),
                    r.random_range(-0.5..0.5),
                )
            })
            .collect();
        let geom =
            geometry_from_projected(verts_t.clone(), verts_prev.clone(), tris.clone(), w, h);
        let field = dense_flow(&geom);
        let oracle = oracle_flow_field(&verts_t, &verts_prev, &tris, w, h);
        let mut covered = 0usize;
        let mut agree = 0usize;
        for idx in 0..field.final_flow.len() {
            if geom.raster_t.mask[idx] == 0 {
                continue;
            }
            covered += 1;
            let d = &field.final_flow[idx];
            let o = &oracle[idx];
            if (0..3).all(|k| (d[k] - o[k]).abs() <= 1e-6) {
                agree += 1;
            }
        }
        let fraction = agree as f64 / covered.max(1) as f64;
        if fraction < 0.99 {
            eprintln!("seed {seed}: oracle agreement {fraction:.4} on {covered} covered pixels");
            ok = false;
        }
    }

    // Occlusion fixture: a square plane sits in front only at t-1; the
    // backward visibility must be 0 exactly on its pixel footprint.
    {
        let big = |z: f64| {
            vec![
                Vector3::new(-80.0, -80.0, z),
                Vector3::new(280.0, -80.0, z),
                Vector3::new(-80.0, 280.0, z),
            ]
        };
        let square = |z: f64| {
            vec![
                Vector3::new(16.0, 16.0, z),
                Vector3::new(48.0, 16.0, z),
                Vector3::new(48.0, 48.0, z),
                Vector3::new(16.0, 48.0, z),
            ]
        };
        let mut verts_t = big(0.0);
        verts_t.extend(square(-5.0));
        let mut verts_prev = big(0.0);
        verts_prev.extend(square(5.0));
        let tris = vec![[0u32, 1, 2], [3, 4, 5], [3, 5, 6]];
        let geom = geometry_from_projected(verts_t, verts_prev, tris, w, h);
        let field = dense_flow(&geom);
        for row in 0..h {
            for col in 0..w {
                let idx = row * w + col;
                let occluded = (16..48).contains(&col) && (16..48).contains(&row);
                let expected = if occluded { 0 } else { 1 };
                if field.vis_prev[idx] != expected {
                    eprintln!("occlusion fixture: vis_prev wrong at ({row},{col})");
                    ok = false;
                }
            }
        }
    }

    let elapsed = start.elapsed();
    ok &= elapsed.as_secs_f64() < 60.0;
    println!("  (flow pipeline checks in {elapsed:?})");
    report("3 (dense flow: static, rigid, oracle >=99%, occlusion, <60s)", ok);
}

#[test]
fn criterion_4_warp_and_temporal_loss() {
    let mut ok = true;
    let (w, h) = (16usize, 12usize);
    let n = w * h;

    // Warp identity must be bit-exact.
    let mut r = rng(400);
    let pixels: Vec<[f64; 3]> = (0..n)
        .map(|_| {
            [
                r.random_range(0.0..1.0),
                r.random_range(0.0..1.0),
                r.random_range(0.0..1.0),
            ]
        })
        .collect();
    let img = Image::from_pixels(w, h, pixels).unwrap();
    let zero = DenseFlowField {
        width: w,
        height: h,
        flow: vec![[0.0; 3]; n],
        vis_t: vec![1; n],
        vis_prev: vec![1; n],
        final_flow: vec![[0.0; 3]; n],
    };
    if warp(&img, &zero).unwrap() != img {
        eprintln!("warp identity not bit-exact");
        ok = false;
    }

    // One-pixel-shift fixture: interior temporal loss < 1e-12.
    let mut shifted = Image::new(w, h);
    for row in 0..h {
        for col in 0..w {
            let src = (col + 1).min(w - 1);
            shifted.set_pixel(row, col, img.pixel(row, src));
        }
    }
    let one = DenseFlowField {
        width: w,
        height: h,
        flow: vec![[1.0, 0.0, 0.0]; n],
        vis_t: vec![1; n],
        vis_prev: vec![1; n],
        final_flow: vec![[1.0, 0.0, 0.0]; n],
    };
    let interior = temporal_loss_interior(&img, &shifted, &one, 1).unwrap();
    if interior >= 1e-12 {
        eprintln!("one-pixel shift interior loss {interior}");
        ok = false;
    }

    // Zero-flow loss equals the plain MSE loop oracle within 1e-12.
    let other_pixels: Vec<[f64; 3]> = (0..n)
        .map(|_| {
            [
                r.random_range(0.0..1.0),
                r.random_range(0.0..1.0),
                r.random_range(0.0..1.0),
            ]
        })
        .collect();
    let other = Image::from_pixels(w, h, other_pixels).unwrap();
    let loss = temporal_loss(&img, &other, &zero).unwrap();
    let mut oracle = 0.0;
    for row in 0..h {
        for col in 0..w {
            for ch in 0..3 {
                let d = other.pixel(row, col)[ch] - img.pixel(row, col)[ch];
                oracle += d * d;
            }
        }
    }
    oracle /= (n * 3) as f64;
    if (loss - oracle).abs() > 1e-12 {
        eprintln!("zero-flow loss {loss} vs oracle {oracle}");
        ok = false;
    }

    report("4 (warp identity bit-exact, shift loss <1e-12, MSE oracle)", ok);
}

/// Scalar step-by-step recomputation of the full normalization layer.
fn rcn_scalar_oracle(
    u: &FeatureMap,
    t: &FeatureMap,
    h: &RegionMask,
    params: &RcnParams,
) -> FeatureMap {
    let (cs, hs, ws) = (u.channels(), u.height(), u.width());
    let mut out = FeatureMap::zeros(cs, hs, ws);
    for c in 0..cs {
        let mut face = Vec::new();
        let mut nonface = Vec::new();
        for y in 0..hs {
            for x in 0..ws {
                if h.active(y, x) {
                    face.push(u.get(c, y, x));
                } else {
                    nonface.push(t.get(c, y, x));
                }
            }
        }
        let stats = |vals: &[f64]| {
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var =
                vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
            (mean, var.sqrt().max(EPS_STD))
        };
        let (mu1, s1) = stats(&face);
        let (mu2, s2) = stats(&nonface);
        let (a, b) = (params.alpha(c), params.beta(c));
        for y in 0..hs {
            for x in 0..ws {
                let v = if h.active(y, x) {
                    let up = u.get(c, y, x);
                    a * (s2 * (up - mu1) / s1 + mu2) + (1.0 - a) * up
                } else {
                    let tp = t.get(c, y, x);
                    b * (s1 * (tp - mu2) / s2 + mu1) + (1.0 - b) * tp
                };
                out.set(c, y, x, v);
            }
        }
    }
    out
}

#[test]
fn criterion_5_rcn_forward_and_gradients() {
    let start = Instant::now();
    let mut ok = true;

    // Paper defaults load as the initialization.
    let defaults = RcnParams::defaults(4);
    for c in 0..4 {
        ok &= defaults.alpha(c) == DEFAULT_ALPHA && defaults.beta(c) == DEFAULT_BETA;
    }
    ok &= DEFAULT_ALPHA == 0.8 && DEFAULT_BETA == 0.1;

    // 50 random fixtures against the scalar oracle, 1e-10.
    let mut r = rng(500);
    for _ in 0..50 {
        let c = r.random_range(1..4);
        let hs = r.random_range(2..7);
        let ws = r.random_range(2..7);
        let data = |r: &mut rand_pcg::Pcg64| -> Vec<f64> {
            (0..c * hs * ws).map(|_| r.random_range(-2.0..2.0)).collect()
        };
        let u = FeatureMap::new(c, hs, ws, data(&mut r)).unwrap();
        let t = FeatureMap::new(c, hs, ws, data(&mut r)).unwrap();
        let mut mask: Vec<u8> = (0..hs * ws).map(|_| r.random_range(0..2)).collect();
        mask[0] = 1;
        mask[hs * ws - 1] = 0;
        let h = RegionMask::new(hs, ws, mask).unwrap();
        let params = RcnParams::new(
            (0..c).map(|_| r.random_range(0.0..1.0)).collect(),
            (0..c).map(|_| r.random_range(0.0..1.0)).collect(),
        )
        .unwrap();
        let out = rcn_forward(&u, &t, &h, &params).unwrap();
        let oracle = rcn_scalar_oracle(&u, &t, &h, &params);
        for (got, want) in out.data().iter().zip(oracle.data()) {
            if (got - want).abs() > 1e-10 {
                eprintln!("rcn forward vs scalar oracle: {got} vs {want}");
                ok = false;
            }
        }
    }

    // Degenerate identity: moments matched, any (alpha, beta) in [0,1].
    {
        let hs = 4;
        let ws = 4;
        let mask: Vec<u8> = (0..16).map(|i| ((i / 4 + i % 4) % 2) as u8).collect();
        let h = RegionMask::new(hs, ws, mask).unwrap();
        let vals = [0.7, -0.9, 1.3, 0.1, -1.5, 0.4, 2.0, -0.6];
        let mut u = FeatureMap::zeros(1, hs, ws);
        let mut t = FeatureMap::zeros(1, hs, ws);
        let (mut i, mut j) = (0, 0);
        for y in 0..hs {
            for x in 0..ws {
                if h.active(y, x) {
                    u.set(0, y, x, vals[i]);
                    i += 1;
                } else {
                    t.set(0, y, x, vals[7 - j]);
                    j += 1;
                }
            }
        }
        for k in 0..20 {
            let a = k as f64 / 19.0;
            let b = 1.0 - a;
            let params = RcnParams::new(vec![a], vec![b]).unwrap();
            let out = rcn_forward(&u, &t, &h, &params).unwrap();
            for y in 0..hs {
                for x in 0..ws {
                    let expected = if h.active(y, x) {
                        u.get(0, y, x)
                    } else {
                        t.get(0, y, x)
                    };
                    if (out.get(0, y, x) - expected).abs() > 1e-9 {
                        eprintln!("degenerate identity broke at alpha={a}");
                        ok = false;
                    }
                }
            }
        }
    }

    // Gradient check on 20 seeds, central differences, step 1e-5.
    const STEP: f64 = 1e-5;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-6);
    for seed in 0..20u64 {
        let mut r = rng(550 + seed);
        let (c, hs, ws) = (2usize, 4usize, 4usize);
        let data = |r: &mut rand_pcg::Pcg64| -> Vec<f64> {
            (0..c * hs * ws).map(|_| r.random_range(-2.0..2.0)).collect()
        };
        let u0 = data(&mut r);
        let t0 = data(&mut r);
        let mut mask: Vec<u8> = (0..hs * ws).map(|_| r.random_range(0..2)).collect();
        mask[0] = 1;
        mask[hs * ws - 1] = 0;
        let h = RegionMask::new(hs, ws, mask).unwrap();
        let a0: Vec<f64> = (0..c).map(|_| r.random_range(0.1..0.9)).collect();
        let b0: Vec<f64> = (0..c).map(|_| r.random_range(0.1..0.9)).collect();
        let upstream = FeatureMap::new(c, hs, ws, data(&mut r)).unwrap();

        let loss = |uv: &[f64], tv: &[f64], av: &[f64], bv: &[f64]| -> f64 {
            let u = FeatureMap::new(c, hs, ws, uv.to_vec()).unwrap();
            let t = FeatureMap::new(c, hs, ws, tv.to_vec()).unwrap();
            let p = RcnParams::new(av.to_vec(), bv.to_vec()).unwrap();
            rcn_forward(&u, &t, &h, &p)
                .unwrap()
                .data()
                .iter()
                .zip(upstream.data())
                .map(|(o, g)| o * g)
                .sum()
        };
        let u = FeatureMap::new(c, hs, ws, u0.clone()).unwrap();
        let t = FeatureMap::new(c, hs, ws, t0.clone()).unwrap();
        let params = RcnParams::new(a0.clone(), b0.clone()).unwrap();
        let grads = rcn_gradients(&u, &t, &h, &params, &upstream).unwrap();

        let mut max_err = 0.0f64;
        let mut fd_vec = |vals: &[f64], which: usize| {
            for idx in 0..vals.len() {
                let mut plus_v = vals.to_vec();
                plus_v[idx] += STEP;
                let mut minus_v = vals.to_vec();
                minus_v[idx] -= STEP;
                let (plus, minus) = match which {
                    0 => (loss(&plus_v, &t0, &a0, &b0), loss(&minus_v, &t0, &a0, &b0)),
                    1 => (loss(&u0, &plus_v, &a0, &b0), loss(&u0, &minus_v, &a0, &b0)),
                    2 => (loss(&u0, &t0, &plus_v, &b0), loss(&u0, &t0, &minus_v, &b0)),
                    _ => (loss(&u0, &t0, &a0, &plus_v), loss(&u0, &t0, &a0, &minus_v)),
                };
                let fd = (plus - minus) / (2.0 * STEP);
                let analytic = match which {
                    0 => grads.grad_u.data()[idx],
                    1 => grads.grad_t.data()[idx],
                    2 => grads.grad_alpha[idx],
                    _ => grads.grad_beta[idx],
                };
                max_err = max_err.max(rel(analytic, fd));
            }
        };
        fd_vec(&u0, 0);
        fd_vec(&t0, 1);
        fd_vec(&a0, 2);
        fd_vec(&b0, 3);
        if max_err >= 1e-4 {
            eprintln!("seed {seed}: gradient max rel err {max_err:.3e}");
            ok = false;
        }
    }

    let elapsed = start.elapsed();
    ok &= elapsed.as_secs_f64() < 30.0;
    println!("  (rcn checks in {elapsed:?})");
    report("5 (rcn scalar oracle 1e-10, identity, gradients <1e-4, <30s)", ok);
}

#[test]
fn criterion_6_dynamic_training_sample_selection() {
    let mut ok = true;
    let manifest = DatasetManifest::new(
        (0..7)
            .map(|n| VideoEntry {
                id: format!("v{n}"),
                frames: 4 + 3 * (n as u32 % 4),
                template: String::new(),
            })
            .collect(),
    )
    .unwrap();

    // 10^4 seeded draws at sigma = 0.5: intra fraction in [0.47, 0.53],
    // every triplet obeys consecutiveness and distinctness.
    let mut rng = sampler_rng(600);
    let mut intra = 0usize;
    for _ in 0..10_000 {
        let t = sample(&manifest, 0.5, &mut rng).unwrap();
        if t.validate(&manifest).is_err() {
            ok = false;
        }
        for pair in t.pairs() {
            if pair.at_t().frame != pair.at_prev().frame + 1 {
                ok = false;
            }
        }
        if t.provenance == Provenance::Intra {
            intra += 1;
        }
    }
    let fraction = intra as f64 / 10_000.0;
    if !(0.47..=0.53).contains(&fraction) {
        eprintln!("intra fraction {fraction}");
        ok = false;
    }

    // Pure streams at the extremes.
    let stats0 = sample_stats(&manifest, 0.0, 601, 500).unwrap();
    let stats1 = sample_stats(&manifest, 1.0, 602, 500).unwrap();
    ok &= stats0.intra_count == 0 && stats1.intra_count == 500;

    report("6 (sample selection: fraction, invariants, extremes)", ok);
}

#[test]
fn criterion_7_loss_arithmetic() {
    let mut ok = true;
    let weights = LossWeights::default();
    ok &= weights.adv == 10.0 && weights.app == 1.0 && weights.rec == 10.0 && weights.tmp == 5.0;
    ok &= total_loss(1.0, 1.0, 1.0, 1.0, &weights) == 26.0;

    let mut r = rng(700);
    let (w, h) = (9usize, 7usize);
    let rand_img = |r: &mut rand_pcg::Pcg64| {
        let px = (0..w * h)
            .map(|_| {
                [
                    r.random_range(0.0..1.0),
                    r.random_range(0.0..1.0),
                    r.random_range(0.0..1.0),
                ]
            })
            .collect();
        Image::from_pixels(w, h, px).unwrap()
    };
    let a = rand_img(&mut r);
    let b = rand_img(&mut r);

    // Inter-mode reconstruction is identically zero.
    ok &= reconstruction_loss(&a, &b, Inter).unwrap() == 0.0;

    // Loop oracles for both L1 losses, 1e-12.
    let mut l1 = 0.0;
    for row in 0..h {
        for col in 0..w {
            for ch in 0..3 {
                l1 += (a.pixel(row, col)[ch] - b.pixel(row, col)[ch]).abs();
            }
        }
    }
    l1 /= (w * h * 3) as f64;
    let rec = reconstruction_loss(&a, &b, Intra).unwrap();
    let app = appearance_loss(&IdentityExtractor, &a, &b).unwrap();
    ok &= (rec - l1).abs() < 1e-12;
    ok &= (app - l1).abs() < 1e-12;

    report("7 (loss arithmetic: weights 26, inter rec 0, L1 oracles)", ok);
}

#[test]
fn criterion_8_sparse_support_is_strict_subset_of_dense() {
    let mut ok = true;
    // Fan mesh under rigid translation; interior vertex guarantees at
    // least one sparse splat.
    let center = Vector3::new(30.0, 30.0, 0.0);
    let mut verts_prev = vec![center];
    for k in 0..8 {
        let ang = k as f64 * std::f64::consts::TAU / 8.0;
        verts_prev.push(center + Vector3::new(22.0 * ang.cos(), 22.0 * ang.sin(), 0.0));
    }
    let shift = Vector3::new(2.0, 1.0, 0.0);
    let verts_t: Vec<_> = verts_prev.iter().map(|v| v + shift).collect();
    let triangles: Vec<[u32; 3]> = (0..8)
        .map(|k| [0u32, 1 + k as u32, 1 + ((k + 1) % 8) as u32])
        .collect();
    let geom = geometry_from_projected(verts_t, verts_prev, triangles, 64, 64);
    let dense = dense_flow(&geom);
    let sparse = sparse_flow(&geom);

    let dense_support = support(&dense.final_flow);
    let sparse_support = support(&sparse.final_flow);
    ok &= !sparse_support.is_empty();
    for idx in &sparse_support {
        if !dense_support.contains(idx) {
            eprintln!("sparse pixel {idx} outside dense support");
            ok = false;
        }
    }
    ok &= dense_support.len() > sparse_support.len();
    println!(
        "  (dense support {} px, sparse support {} px)",
        dense_support.len(),
        sparse_support.len()
    );
    report("8 (sparse flow support strictly inside dense support)", ok);
}
