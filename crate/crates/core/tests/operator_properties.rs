//! Property tests: linearity of the discrete operators in their field
//! argument, and exact zeros on constant fields.

mod common;

use common::V3;
use nalgebra::Vector3;
use proptest::prelude::*;
use vortiflow::boundary::BoundarySet;
use vortiflow::dfsph::ParticleState;
use vortiflow::kernel::SmoothingConfig;
use vortiflow::neighbors::build_neighbor_table;
use vortiflow::sphops::{self, SphContext};

fn cloud_strategy() -> impl Strategy<Value = (Vec<[f64; 3]>, Vec<[f64; 3]>, Vec<[f64; 3]>, f64, f64)>
{
    (8usize..32).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::array::uniform3(-0.5f64..0.5), n),
            prop::collection::vec(prop::array::uniform3(-2.0f64..2.0), n),
            prop::collection::vec(prop::array::uniform3(-2.0f64..2.0), n),
            -3.0f64..3.0,
            -3.0f64..3.0,
        )
    })
}

fn as_vec3(a: &[[f64; 3]]) -> Vec<V3> {
    a.iter().map(|p| Vector3::new(p[0], p[1], p[2])).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vector_operators_are_linear((pts, f, g, a, b) in cloud_strategy()) {
        let positions = as_vec3(&pts);
        let field_f = as_vec3(&f);
        let field_g = as_vec3(&g);
        let n = positions.len();
        let state = ParticleState {
            positions,
            velocities: vec![Vector3::zeros(); n],
            masses: vec![1.0; n],
            densities: vec![1000.0; n],
        };
        let cfg = SmoothingConfig::new(0.3).unwrap();
        let boundary = BoundarySet::empty();
        let table = build_neighbor_table(&state.positions, &[], &cfg).unwrap();
        let ctx = SphContext {
            positions: &state.positions,
            masses: &state.masses,
            densities: &state.densities,
            boundary: &boundary,
            table: &table,
            cfg,
        };

        let combo: Vec<V3> = field_f.iter().zip(&field_g).map(|(x, y)| x * a + y * b).collect();
        for i in 0..n {
            let tol = 1e-9;

            let d_combo = sphops::div_vec(i, &combo, None, &ctx).unwrap();
            let d_f = sphops::div_vec(i, &field_f, None, &ctx).unwrap();
            let d_g = sphops::div_vec(i, &field_g, None, &ctx).unwrap();
            prop_assert!((d_combo - (a * d_f + b * d_g)).abs() <= tol * (1.0 + d_combo.abs()));

            let c_combo = sphops::curl_vec(i, &combo, None, &ctx).unwrap();
            let c_f = sphops::curl_vec(i, &field_f, None, &ctx).unwrap();
            let c_g = sphops::curl_vec(i, &field_g, None, &ctx).unwrap();
            prop_assert!((c_combo - (c_f * a + c_g * b)).norm() <= tol * (1.0 + c_combo.norm()));

            let l_combo = sphops::laplacian_vec(i, &combo, None, &ctx).unwrap();
            let l_f = sphops::laplacian_vec(i, &field_f, None, &ctx).unwrap();
            let l_g = sphops::laplacian_vec(i, &field_g, None, &ctx).unwrap();
            prop_assert!((l_combo - (l_f * a + l_g * b)).norm() <= tol * (1.0 + l_combo.norm()));
        }
    }

    #[test]
    fn scalar_gradient_is_linear((pts, f, g, a, b) in cloud_strategy()) {
        let positions = as_vec3(&pts);
        let n = positions.len();
        let sf: Vec<f64> = f.iter().map(|v| v[0]).collect();
        let sg: Vec<f64> = g.iter().map(|v| v[1]).collect();
        let state = ParticleState {
            positions,
            velocities: vec![Vector3::zeros(); n],
            masses: vec![1.0; n],
            densities: vec![1000.0; n],
        };
        let cfg = SmoothingConfig::new(0.3).unwrap();
        let boundary = BoundarySet::empty();
        let table = build_neighbor_table(&state.positions, &[], &cfg).unwrap();
        let ctx = SphContext {
            positions: &state.positions,
            masses: &state.masses,
            densities: &state.densities,
            boundary: &boundary,
            table: &table,
            cfg,
        };

        let combo: Vec<f64> = sf.iter().zip(&sg).map(|(x, y)| a * x + b * y).collect();
        for i in 0..n {
            let g_combo = sphops::grad_scalar(i, &combo, None, &ctx).unwrap();
            let g_f = sphops::grad_scalar(i, &sf, None, &ctx).unwrap();
            let g_g = sphops::grad_scalar(i, &sg, None, &ctx).unwrap();
            prop_assert!(
                (g_combo - (g_f * a + g_g * b)).norm() <= 1e-9 * (1.0 + g_combo.norm())
            );
        }
    }

    #[test]
    fn constant_fields_are_exact_zeros((pts, f, _g, _a, _b) in cloud_strategy()) {
        let positions = as_vec3(&pts);
        let n = positions.len();
        let c = Vector3::new(f[0][0], f[0][1], f[0][2]);
        let constant = vec![c; n];
        let constant_scalar = vec![f[0][0]; n];
        let state = ParticleState {
            positions,
            velocities: vec![Vector3::zeros(); n],
            masses: vec![1.0; n],
            densities: vec![1000.0; n],
        };
        let cfg = SmoothingConfig::new(0.3).unwrap();
        let boundary = BoundarySet::empty();
        let table = build_neighbor_table(&state.positions, &[], &cfg).unwrap();
        let ctx = SphContext {
            positions: &state.positions,
            masses: &state.masses,
            densities: &state.densities,
            boundary: &boundary,
            table: &table,
            cfg,
        };
        for i in 0..n {
            prop_assert_eq!(sphops::curl_vec(i, &constant, None, &ctx).unwrap(), Vector3::zeros());
            prop_assert_eq!(sphops::div_vec(i, &constant, None, &ctx).unwrap(), 0.0);
            prop_assert_eq!(
                sphops::grad_scalar(i, &constant_scalar, None, &ctx).unwrap(),
                Vector3::zeros()
            );
        }
    }
}
