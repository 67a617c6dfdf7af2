use super::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn p2(x: f64, y: f64) -> DVector<f64> {
    DVector::from_vec(vec![x, y])
}

fn p1(x: f64) -> DVector<f64> {
    DVector::from_vec(vec![x])
}

fn box2(a: f64, b: f64) -> ConvexPolytope {
    ConvexPolytope::box_from_bounds(&[-a, -b], &[a, b]).unwrap()
}

#[test]
fn hull_drops_interior_point() {
    let pts = vec![p2(0.0, 0.0), p2(1.0, 0.0), p2(0.0, 1.0), p2(0.2, 0.2)];
    let hull = convex_hull(&pts, 2).unwrap();
    assert_eq!(hull.vertices().len(), 3);
    for v in hull.vertices() {
        assert!((v[0] - 0.2).abs() > 1e-12 || (v[1] - 0.2).abs() > 1e-12);
    }
}

#[test]
fn hull_of_singleton() {
    let hull = convex_hull(&[p2(1.0, 1.0)], 2).unwrap();
    assert_eq!(hull.vertices().len(), 1);
    assert_eq!(hull.vertices()[0], p2(1.0, 1.0));
}

#[test]
fn hull_rejects_dim_above_three() {
    let p = DVector::from_vec(vec![0.0; 4]);
    match convex_hull(&[p], 4) {
        Err(GeometryError::DimensionUnsupported(4)) => {}
        other => panic!("expected DimensionUnsupported, got {other:?}"),
    }
}

/// Cross-check against a pairwise orientation oracle: every returned vertex
/// must be extreme (lie outside the hull of the others), and re-hulling is
/// idempotent.
#[test]
fn hull_of_random_square_cloud_is_extreme_and_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pts: Vec<DVector<f64>> =
        (0..100).map(|_| p2(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0))).collect();
    let hull = convex_hull(&pts, 2).unwrap();
    let k = hull.vertices().len();
    // Orientation oracle: consecutive CCW turns must all be strictly left.
    for i in 0..k {
        let o = &hull.vertices()[i];
        let a = &hull.vertices()[(i + 1) % k];
        let b = &hull.vertices()[(i + 2) % k];
        assert!(cross2(o, a, b) > 0.0, "vertices not in strictly convex CCW position");
    }
    // Every input point lies inside.
    for p in &pts {
        assert!(hull.contains_point(p, 1e-9).unwrap());
    }
    let rehull = convex_hull(hull.vertices(), 2).unwrap();
    assert_eq!(rehull.vertices().len(), k);
    for (a, b) in rehull.vertices().iter().zip(hull.vertices()) {
        assert!((a - b).norm() <= 1e-12);
    }
}

#[test]
fn linear_image_scales_box() {
    let b = box2(1.0, 1.0);
    let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
    let img = linear_image(&b, &m).unwrap();
    assert!(img.approx_eq(&box2(2.0, 2.0), 1e-12).unwrap());
}

#[test]
fn linear_image_column_embeds_interval() {
    let seg = convex_hull(&[p1(-1.0), p1(1.0)], 1).unwrap();
    let m = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
    let img = linear_image(&seg, &m).unwrap();
    let expect = convex_hull(&[p2(-1.0, -1.0), p2(1.0, 1.0)], 2).unwrap();
    assert!(img.approx_eq(&expect, 1e-12).unwrap());
}

#[test]
fn linear_image_rotation_preserves_square() {
    let b = box2(1.0, 1.0);
    let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let img = linear_image(&b, &m).unwrap();
    assert!(img.approx_eq(&b, 1e-12).unwrap());
}

#[test]
fn minkowski_intervals() {
    let a = convex_hull(&[p1(-1.0), p1(1.0)], 1).unwrap();
    let s = minkowski_sum(&a, &a).unwrap();
    let expect = convex_hull(&[p1(-2.0), p1(2.0)], 1).unwrap();
    assert!(s.approx_eq(&expect, 1e-12).unwrap());
}

/// Square + diagonal segment: verified against a brute-force oracle that sums
/// dense samples of both sets and hulls the result.
#[test]
fn minkowski_square_plus_segment_is_hexagon() {
    let square = box2(1.0, 1.0);
    let seg = convex_hull(&[p2(-1.0, -1.0), p2(1.0, 1.0)], 2).unwrap();
    let sum = minkowski_sum(&square, &seg).unwrap();
    assert_eq!(sum.vertices().len(), 6);

    // Oracle: dense samples of square and segment, summed pairwise.
    let mut samples = Vec::new();
    let n = 12;
    for i in 0..=n {
        for j in 0..=n {
            let sq = p2(-1.0 + 2.0 * i as f64 / n as f64, -1.0 + 2.0 * j as f64 / n as f64);
            for t in 0..=n {
                let tt = -1.0 + 2.0 * t as f64 / n as f64;
                samples.push(&sq + p2(tt, tt));
            }
        }
    }
    let oracle = convex_hull(&samples, 2).unwrap();
    assert!(sum.approx_eq(&oracle, 1e-9).unwrap());
}

#[test]
fn minkowski_identity_element() {
    let square = box2(1.0, 1.0);
    let zero = convex_hull(&[p2(0.0, 0.0)], 2).unwrap();
    let s = minkowski_sum(&square, &zero).unwrap();
    assert!(s.approx_eq(&square, 1e-12).unwrap());
}

#[test]
fn minkowski_rejects_dim_above_three() {
    let b = ConvexPolytope::box_from_bounds(&[0.0; 4], &[1.0; 4]).unwrap();
    match minkowski_sum(&b, &b) {
        Err(GeometryError::DimensionUnsupported(4)) => {}
        other => panic!("expected DimensionUnsupported, got {other:?}"),
    }
}

#[test]
fn contains_point_examples() {
    let b = box2(1.0, 1.0);
    assert!(b.contains_point(&p2(0.0, 0.0), 0.0).unwrap());
    assert!(b.contains_point(&p2(1.0000005, 0.0), 1e-6).unwrap());
    assert!(!b.contains_point(&p2(2.0, 0.0), 1e-6).unwrap());
}

/// Dense-grid rasterization oracle on a 2D instance; the LP membership test
/// must agree at every probe outside the tolerance band.
#[test]
fn contains_point_agrees_with_rasterization() {
    let tri = convex_hull(&[p2(0.0, 0.0), p2(2.0, 0.0), p2(0.5, 1.5)], 2).unwrap();
    let hs = tri.halfspaces().unwrap();
    let mut checked = 0;
    for i in 0..40 {
        for j in 0..40 {
            let x = p2(-0.5 + 3.0 * i as f64 / 39.0, -0.5 + 2.5 * j as f64 / 39.0);
            let margin = hs.iter().map(|h| h.margin(&x)).fold(f64::INFINITY, f64::min);
            if margin.abs() < 1e-7 {
                continue; // tolerance band
            }
            let expect = margin > 0.0;
            assert_eq!(tri.contains_point(&x, 1e-9).unwrap(), expect, "probe {x:?}");
            checked += 1;
        }
    }
    assert!(checked > 1000);
}

#[test]
fn hausdorff_examples() {
    let b = box2(1.0, 1.0);
    assert!(hausdorff_distance(&b, &b).unwrap() <= 1e-12);

    let i1 = convex_hull(&[p1(-1.0), p1(1.0)], 1).unwrap();
    let i2 = convex_hull(&[p1(-2.0), p1(2.0)], 1).unwrap();
    assert!((hausdorff_distance(&i1, &i2).unwrap() - 1.0).abs() <= 1e-12);
}

/// Shifted unit square: checked against a dense boundary-sampling oracle.
#[test]
fn hausdorff_shifted_square() {
    let a = ConvexPolytope::box_from_bounds(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
    let b = ConvexPolytope::box_from_bounds(&[0.3, 0.4], &[1.3, 1.4]).unwrap();
    let d = hausdorff_distance(&a, &b).unwrap();
    assert!((d - 0.5).abs() <= 1e-9, "got {d}");

    // Oracle: sample both boundaries densely and take the max-min distance.
    let sample_boundary = |lo: [f64; 2], hi: [f64; 2]| -> Vec<DVector<f64>> {
        let mut pts = Vec::new();
        let n = 200;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            pts.push(p2(lo[0] + t * (hi[0] - lo[0]), lo[1]));
            pts.push(p2(lo[0] + t * (hi[0] - lo[0]), hi[1]));
            pts.push(p2(lo[0], lo[1] + t * (hi[1] - lo[1])));
            pts.push(p2(hi[0], lo[1] + t * (hi[1] - lo[1])));
        }
        pts
    };
    let pa = sample_boundary([0.0, 0.0], [1.0, 1.0]);
    let pb = sample_boundary([0.3, 0.4], [1.3, 1.4]);
    let mut oracle = 0.0f64;
    for q in &pa {
        oracle = oracle.max(b.distance(q));
    }
    for q in &pb {
        oracle = oracle.max(a.distance(q));
    }
    assert!((d - oracle).abs() <= 1e-6);
}

#[test]
fn box_shorthand_rejects_large_dimension() {
    let lower = vec![0.0; 21];
    let upper = vec![1.0; 21];
    match ConvexPolytope::box_from_bounds(&lower, &upper) {
        Err(GeometryError::BoxTooLarge(21)) => {}
        other => panic!("expected BoxTooLarge, got {other:?}"),
    }
}

#[test]
fn halfspaces_tight_and_satisfied() {
    let hull = convex_hull(&[p2(0.0, 0.0), p2(2.0, 0.0), p2(0.5, 1.5), p2(1.0, -1.0)], 2).unwrap();
    let hs = hull.halfspaces().unwrap();
    for h in hs {
        assert!((h.normal.norm() - 1.0).abs() < 1e-12);
        let mut tight = 0;
        for v in hull.vertices() {
            let m = h.margin(v);
            assert!(m >= -1e-9, "vertex violates halfspace by {m}");
            if m.abs() <= 1e-9 {
                tight += 1;
            }
        }
        assert!(tight >= 1, "halfspace not tight at any vertex");
    }
}

#[test]
fn hull_3d_box_and_flat_sets() {
    let cube = ConvexPolytope::box_from_bounds(&[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0]).unwrap();
    assert_eq!(cube.vertices().len(), 8);
    let hs = cube.halfspaces().unwrap();
    assert_eq!(hs.len(), 6);
    assert!((cube.inradius().unwrap() - 1.0).abs() < 1e-9);

    // With an interior and a face-center point added, the vertex set is
    // unchanged.
    let mut pts: Vec<DVector<f64>> = cube.vertices().to_vec();
    pts.push(DVector::from_vec(vec![0.0, 0.0, 0.0]));
    pts.push(DVector::from_vec(vec![1.0, 0.0, 0.0]));
    let rehull = convex_hull(&pts, 3).unwrap();
    assert_eq!(rehull.vertices().len(), 8);

    // A planar square embedded in 3D keeps its four corners.
    let flat = convex_hull(
        &[
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
            DVector::from_vec(vec![1.0, 0.0, 1.0]),
            DVector::from_vec(vec![0.0, 1.0, 1.0]),
            DVector::from_vec(vec![1.0, 1.0, 1.0]),
            DVector::from_vec(vec![0.5, 0.5, 1.0]),
        ],
        3,
    )
    .unwrap();
    assert_eq!(flat.vertices().len(), 4);
    assert!(flat.contains_point(&DVector::from_vec(vec![0.5, 0.5, 1.0]), 1e-9).unwrap());
    assert!(!flat.contains_point(&DVector::from_vec(vec![0.5, 0.5, 1.1]), 1e-6).unwrap());
}

#[test]
fn intersect_boxes() {
    let a = box2(1.0, 2.0);
    let b = ConvexPolytope::box_from_bounds(&[0.0, -1.0], &[3.0, 1.0]).unwrap();
    let i = intersect(&a, &b).unwrap();
    let expect = ConvexPolytope::box_from_bounds(&[0.0, -1.0], &[1.0, 1.0]).unwrap();
    assert!(i.approx_eq(&expect, 1e-9).unwrap());
}

#[test]
fn intersect_segments_at_origin() {
    let s1 = convex_hull(&[p2(-1.0, -1.0), p2(1.0, 1.0)], 2).unwrap();
    let s2 = convex_hull(&[p2(-1.0, 1.0), p2(1.0, -1.0)], 2).unwrap();
    let i = intersect(&s1, &s2).unwrap();
    assert_eq!(i.vertices().len(), 1);
    assert!(i.vertices()[0].norm() <= 1e-9);
}

#[test]
fn euclidean_projection_matches_hand_values() {
    let b = box2(1.0, 1.0);
    let (d, proj) = b.euclidean_projection(&p2(3.0, 0.0));
    assert!((d - 2.0).abs() < 1e-10);
    assert!((proj - p2(1.0, 0.0)).norm() < 1e-9);
    let (d, _) = b.euclidean_projection(&p2(2.0, 2.0));
    assert!((d - std::f64::consts::SQRT_2).abs() < 1e-10);
    let (d, _) = b.euclidean_projection(&p2(0.5, -0.5));
    assert!(d <= 1e-12);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn arb_cloud() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 3..25)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn hull_idempotent(cloud in arb_cloud()) {
            let pts: Vec<DVector<f64>> = cloud.iter().map(|&(x, y)| p2(x, y)).collect();
            let h1 = convex_hull(&pts, 2).unwrap();
            let h2 = convex_hull(h1.vertices(), 2).unwrap();
            prop_assert!(hausdorff_distance(&h1, &h2).unwrap() <= 1e-12);
            prop_assert_eq!(h1.vertices().len(), h2.vertices().len());
        }

        #[test]
        fn minkowski_commutes(c1 in arb_cloud(), c2 in arb_cloud()) {
            let p: Vec<DVector<f64>> = c1.iter().map(|&(x, y)| p2(x, y)).collect();
            let q: Vec<DVector<f64>> = c2.iter().map(|&(x, y)| p2(x, y)).collect();
            let hp = convex_hull(&p, 2).unwrap();
            let hq = convex_hull(&q, 2).unwrap();
            let pq = minkowski_sum(&hp, &hq).unwrap();
            let qp = minkowski_sum(&hq, &hp).unwrap();
            prop_assert!(hausdorff_distance(&pq, &qp).unwrap() <= 1e-9);
        }

        #[test]
        fn linear_image_composes(cloud in arb_cloud(), m1 in prop::array::uniform4(-2.0..2.0f64), m2 in prop::array::uniform4(-2.0..2.0f64)) {
            let pts: Vec<DVector<f64>> = cloud.iter().map(|&(x, y)| p2(x, y)).collect();
            let h = convex_hull(&pts, 2).unwrap();
            let a = DMatrix::from_row_slice(2, 2, &m1);
            let b = DMatrix::from_row_slice(2, 2, &m2);
            let ab = &a * &b;
            let lhs = linear_image(&h, &ab).unwrap();
            let rhs = linear_image(&linear_image(&h, &b).unwrap(), &a).unwrap();
            prop_assert!(hausdorff_distance(&lhs, &rhs).unwrap() <= 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn minkowski_associates(c1 in arb_cloud(), c2 in arb_cloud(), c3 in arb_cloud()) {
            let hp = convex_hull(&c1.iter().map(|&(x, y)| p2(x, y)).collect::<Vec<_>>(), 2).unwrap();
            let hq = convex_hull(&c2.iter().map(|&(x, y)| p2(x, y)).collect::<Vec<_>>(), 2).unwrap();
            let hr = convex_hull(&c3.iter().map(|&(x, y)| p2(x, y)).collect::<Vec<_>>(), 2).unwrap();
            let left = minkowski_sum(&minkowski_sum(&hp, &hq).unwrap(), &hr).unwrap();
            let right = minkowski_sum(&hp, &minkowski_sum(&hq, &hr).unwrap()).unwrap();
            prop_assert!(hausdorff_distance(&left, &right).unwrap() <= 1e-9);
        }
    }
}
