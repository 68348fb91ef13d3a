//! Invariants checked on random inputs.

use std::f64::consts::PI;
use std::sync::OnceLock;

use lpm_core::pohozaev::{beta_weight, identity_integral, ProjectiveField};
use lpm_core::sphere::SphereGrid;
use lpm_core::support::{hessian_frame, lp_integral, unit_ball_volume, volume, Constant, SupportFunction};
use lpm_core::symmetry::{SimplexFrame, SymmetryGroup};
use lpm_core::variational::{normalize, normalized_objective, objective};
use proptest::prelude::*;

fn circle() -> &'static SphereGrid {
    static G: OnceLock<SphereGrid> = OnceLock::new();
    G.get_or_init(|| SphereGrid::new(1, 384).unwrap())
}

fn sphere() -> &'static SphereGrid {
    static G: OnceLock<SphereGrid> = OnceLock::new();
    G.get_or_init(|| SphereGrid::new(2, 48).unwrap())
}

/// Rotation of R³ from Z-Y-Z Euler angles.
fn rotation3(a: f64, b: f64, c: f64) -> Vec<Vec<f64>> {
    let rz = |t: f64| [[t.cos(), -t.sin(), 0.0], [t.sin(), t.cos(), 0.0], [0.0, 0.0, 1.0]];
    let ry = |t: f64| [[t.cos(), 0.0, t.sin()], [0.0, 1.0, 0.0], [-t.sin(), 0.0, t.cos()]];
    let mul = |x: [[f64; 3]; 3], y: [[f64; 3]; 3]| {
        let mut z = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                z[i][j] = (0..3).map(|k| x[i][k] * y[k][j]).sum();
            }
        }
        z
    };
    mul(mul(rz(a), ry(b)), rz(c)).iter().map(|r| r.to_vec()).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn axes3() -> impl Strategy<Value = [f64; 3]> {
    [0.7f64..1.4, 0.7f64..1.4, 0.7f64..1.4]
}

fn angles() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0..2.0 * PI, 0.0..PI, 0.0..2.0 * PI)
}

fn field(n: usize) -> impl Strategy<Value = ProjectiveField> {
    let m = n * n + 2 * n + 1;
    prop::collection::vec(-1.0f64..1.0, m).prop_map(move |v| {
        // symmetric and trace-free
        let raw: Vec<Vec<f64>> = v[..n * n].chunks(n).map(<[f64]>::to_vec).collect();
        let mut a: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| 0.5 * (raw[i][j] + raw[j][i])).collect()).collect();
        let mean = (0..n).map(|i| a[i][i]).sum::<f64>() / n as f64;
        for (i, row) in a.iter_mut().enumerate() {
            row[i] -= mean;
        }
        let b = v[n * n..n * n + n].to_vec();
        let c = v[n * n + n..n * n + 2 * n].to_vec();
        ProjectiveField::new(a, b, c, v[m - 1]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ellipse_volume_is_pi_ab(a in 0.5f64..2.0, b in 0.5f64..2.0) {
        let v = volume(&SupportFunction::ellipse(a, b).unwrap(), circle()).unwrap();
        prop_assert!(rel(v, PI * a * b) < 1e-10, "{v} vs {}", PI * a * b);
    }

    #[test]
    fn ellipsoid_volume_is_rotation_invariant(ax in axes3(), (s, t, u) in angles()) {
        let r = rotation3(s, t, u);
        let exact = unit_ball_volume(2) * ax.iter().product::<f64>();
        let plain = volume(&SupportFunction::ellipsoid(&ax, None).unwrap(), sphere()).unwrap();
        let turned = volume(&SupportFunction::ellipsoid(&ax, Some(&r)).unwrap(), sphere()).unwrap();
        prop_assert!(rel(plain, exact) < 1e-6, "{plain} vs {exact}");
        prop_assert!(rel(turned, exact) < 1e-6, "{turned} vs {exact}");
    }

    #[test]
    fn rotated_support_function_is_composition(ax in axes3(), (s, t, u) in angles(), (x, y, _) in angles()) {
        let r = rotation3(s, t, u);
        let h = SupportFunction::ellipsoid(&ax, None).unwrap();
        let hr = h.rotated(&r);
        let p = vec![y.sin() * x.cos(), y.sin() * x.sin(), y.cos()];
        let rp: Vec<f64> = r.iter().map(|row| row.iter().zip(&p).map(|(a, b)| a * b).sum()).collect();
        prop_assert!((hr.value(&p) - h.value(&rp)).abs() < 1e-12);
    }

    #[test]
    fn volume_and_lp_integral_are_homogeneous(a in 0.6f64..1.6, b in 0.6f64..1.6, c in 0.3f64..3.0, p in -12.0f64..-2.5) {
        let h = SupportFunction::ellipse(a, b).unwrap();
        let hc = h.scaled(c);
        let g = circle();
        prop_assert!(rel(volume(&hc, g).unwrap(), c * c * volume(&h, g).unwrap()) < 1e-12);
        prop_assert!(rel(lp_integral(&hc, p, g).unwrap(), c.powf(p) * lp_integral(&h, p, g).unwrap()) < 1e-12);
    }

    #[test]
    fn normalization_fixes_the_lp_integral(a in 0.6f64..1.6, b in 0.6f64..1.6, c in 0.3f64..3.0, p in -12.0f64..-2.5) {
        let g = circle();
        let h = SupportFunction::ellipse(a, b).unwrap();
        let u = normalize(&h, p, g).unwrap();
        prop_assert!(rel(lp_integral(&u, p, g).unwrap(), 2.0 * PI) < 1e-12);
        let again = normalize(&u, p, g).unwrap();
        prop_assert!((again.value(&[1.0, 0.0]) - u.value(&[1.0, 0.0])).abs() < 1e-12);
        let j = normalized_objective(&h, p, g).unwrap();
        prop_assert!(rel(normalized_objective(&h.scaled(c), p, g).unwrap(), j) < 1e-12);
        prop_assert!(rel(objective(&u, g).unwrap(), j) < 1e-12);
    }

    #[test]
    fn identity_integral_is_linear_in_the_field(
        xi in field(1), eta in field(1), l in -2.0f64..2.0, m in -2.0f64..2.0,
        a in 0.6f64..1.6, b in 0.6f64..1.6, p in -9.0f64..-2.5,
    ) {
        let g = circle();
        let h = SupportFunction::ellipse(a, b).unwrap();
        let f = Constant(1.0);
        let i = |pf: &ProjectiveField| identity_integral(&f, &h, p, pf, g).unwrap();
        let combined = i(&xi.combine(l, &eta, m));
        let scale = i(&xi).abs() + i(&eta).abs() + 1.0;
        prop_assert!((combined - (l * i(&xi) + m * i(&eta))).abs() < 1e-12 * scale);
    }

    #[test]
    fn constant_solution_balances_every_field(xi in field(2), p in -12.0f64..-2.5) {
        let h = SupportFunction::constant(2, 1.0);
        let v = identity_integral(&Constant(1.0), &h, p, &xi, sphere()).unwrap();
        prop_assert!(v.abs() < 1e-11, "{v}");
    }

    #[test]
    fn rotational_fields_have_no_weight(w in prop::array::uniform2(-1.0f64..1.0), (x, y, _z) in angles(), p in -12.0f64..-2.5) {
        // C = −B with A = 0, D = 0 makes the generator antisymmetric
        let pf = ProjectiveField::new(vec![vec![0.0; 2]; 2], vec![w[0], w[1]], vec![-w[0], -w[1]], 0.0).unwrap();
        let pt = [y.sin() * x.cos(), y.sin() * x.sin(), y.cos()];
        prop_assert!(beta_weight(&pf, &pt, p).abs() < 1e-14);
    }

    #[test]
    fn mixed_volume_identity_holds(ah in axes3(), ap in axes3(), (s, t, u) in angles()) {
        // ∫ φ det W(h) = ½ ∫ h tr(cof W(h) W(φ)) on S²
        let g = sphere();
        let h = SupportFunction::ellipsoid(&ah, None).unwrap();
        let phi = SupportFunction::ellipsoid(&ap, Some(&rotation3(s, t, u))).unwrap();
        let (mut lhs, mut rhs) = (0.0, 0.0);
        for (x, w) in g.nodes.iter().zip(&g.weights) {
            let wh = hessian_frame(&h, x).unwrap();
            let wp = hessian_frame(&phi, x).unwrap();
            let cof = wh.cofactor();
            let tr: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| cof[i][j] * wp.matrix[j][i]).sum();
            lhs += w * wp.value * wh.det();
            rhs += w * 0.5 * wh.value * tr;
        }
        prop_assert!(rel(lhs, rhs) < 1e-7, "{lhs} vs {rhs}");
    }
}

fn triangle_group(special: bool) -> SymmetryGroup {
    SymmetryGroup::build(&SimplexFrame::regular(1).unwrap(), special).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn group_average_is_an_orthogonal_projector(
        u in prop::collection::vec(-1.0f64..1.0, 384),
        v in prop::collection::vec(-1.0f64..1.0, 384),
        special in any::<bool>(),
    ) {
        let g = circle();
        let group = triangle_group(special);
        let pu = group.symmetrize_nodal(g, &u).unwrap();
        let ppu = group.symmetrize_nodal(g, &pu).unwrap();
        let pv = group.symmetrize_nodal(g, &v).unwrap();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        prop_assert!(pu.iter().zip(&ppu).all(|(a, b)| (a - b).abs() < 1e-14));
        prop_assert!((dot(&pu, &v) - dot(&u, &pv)).abs() < 1e-11);
    }
}

#[test]
fn group_orders_and_closure() {
    for (n, special, order) in [(1, true, 3), (1, false, 6), (2, true, 12), (2, false, 24)] {
        let group = SymmetryGroup::build(&SimplexFrame::regular(n).unwrap(), special).unwrap();
        assert_eq!(group.order(), order, "n = {n}, special = {special}");
        assert!(group.closure_defect() < 1e-12);
    }
}
