use contraction_lab::functionals::{Evaluation, FunctionalReport};
use contraction_lab::{Grid, Reference, State, WaveParams};
use proptest::prelude::*;

fn bump(x: f64, c: f64, w: f64) -> f64 {
    (-((x - c) / w).powi(2)).exp()
}

/// `V` carries a compact perturbation of the unshifted wave; `U(xi) = V(xi - X)`
/// with `X = k dx` lives on the same nodes, padded with the shifted wave.
fn pair(p: &WaveParams, g: Grid, k: usize, an: f64, aq: f64, c: f64) -> (State, State) {
    let v0 = Reference::new(p, g, 0.0);
    let m = g.num_nodes();
    let vn: Vec<f64> = g
        .nodes()
        .zip(&v0.n)
        .map(|(x, nt)| nt * (1.0 + an * bump(x, c, 3.0)))
        .collect();
    let vq: Vec<f64> = g
        .nodes()
        .zip(&v0.q)
        .map(|(x, qt)| qt + aq * bump(x, c + 1.0, 4.0))
        .collect();
    let x_shift = k as f64 * g.dx();
    let rx = Reference::new(p, g, x_shift);
    let un: Vec<f64> = (0..m).map(|i| if i >= k { vn[i - k] } else { rx.n[i] }).collect();
    let uq: Vec<f64> = (0..m).map(|i| if i >= k { vq[i - k] } else { rx.q[i] }).collect();
    (
        State::from_values(g, un, uq).unwrap(),
        State::from_values(g, vn, vq).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shifted_reference_equals_translated_state(
        k in 1usize..40,
        an in -0.4f64..0.6,
        aq in -0.5f64..0.5,
        c in -8.0f64..8.0,
    ) {
        let p = WaveParams::new(2.0, 0.0, 0.4, 0.3).unwrap();
        let g = Grid::symmetric(p.default_half_width(), 1200).unwrap();
        let (u, v) = pair(&p, g, k, an, aq, c);
        let shifted = FunctionalReport::evaluate(&Reference::new(&p, g, k as f64 * g.dx()), &u, 0.01, 0.25).unwrap();
        let plain = FunctionalReport::evaluate(&Reference::new(&p, g, 0.0), &v, 0.01, 0.25).unwrap();
        let scale = plain.values().iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        for (name, (a, b)) in FunctionalReport::COLUMNS.iter().zip(shifted.values().iter().zip(plain.values())) {
            prop_assert!((a - b).abs() <= 1e-13 * scale, "{name}: {a} vs {b}");
        }
    }

    #[test]
    fn wave_in_its_own_frame_has_zero_functionals(x_shift in -20.0f64..20.0) {
        let p = WaveParams::new(1.0, 0.5, 0.1, 0.2).unwrap();
        let g = Grid::symmetric(p.default_half_width(), 800).unwrap();
        let r = Reference::new(&p, g, x_shift);
        let u = State::wave(&p, g, x_shift);
        let e = Evaluation::new(&r, &u).unwrap();
        prop_assert_eq!(e.eta_weighted(), 0.0);
        prop_assert_eq!(e.y(), 0.0);
        prop_assert_eq!(e.i_bad(), 0.0);
        prop_assert_eq!(e.i_good(), 0.0);
        prop_assert_eq!(e.dissipation(), 0.0);
    }
}
