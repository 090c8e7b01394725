use h2pinn::autodiff::{distance, SpatialJet, Tape};
use proptest::prelude::*;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-300)
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-5.0..5.0f64)
}

proptest! {
    #[test]
    fn laplacian_of_radius_squared(r in point()) {
        let [x, y, z] = SpatialJet::coordinates(r);
        let f = x * x + y * y + z * z;
        let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
        prop_assert!(close(f.value, r2, 1e-12));
        for i in 0..3 {
            prop_assert!((f.grad[i] - 2.0 * r[i]).abs() <= 1e-12 * (1.0 + r[i].abs()));
        }
        prop_assert!(close(f.lap, 6.0, 1e-12));
    }

    #[test]
    fn laplacian_of_slater_orbital(r in point()) {
        let d = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        prop_assume!(d > 1e-3);
        let coords = SpatialJet::coordinates(r);
        let f = distance(&coords, [0.0; 3]).unwrap().scale(-1.0).exp();
        let e = (-d).exp();
        prop_assert!(close(f.value, e, 1e-12));
        for i in 0..3 {
            prop_assert!((f.grad[i] + r[i] / d * e).abs() <= 1e-12 * e);
        }
        prop_assert!(close(f.lap, (1.0 - 2.0 / d) * e, 1e-12) || (f.lap - (1.0 - 2.0 / d) * e).abs() < 1e-14);
    }

    #[test]
    fn laplacian_of_x_exp_y(r in point()) {
        let [x, y, _] = SpatialJet::coordinates(r);
        let f = x * y.exp();
        let ey = r[1].exp();
        prop_assert!(close(f.value, r[0] * ey, 1e-12) || (f.value - r[0] * ey).abs() < 1e-14);
        prop_assert!(close(f.grad[0], ey, 1e-12));
        prop_assert!((f.grad[1] - r[0] * ey).abs() <= 1e-12 * ey * (1.0 + r[0].abs()));
        prop_assert!(f.grad[2] == 0.0);
        prop_assert!((f.lap - r[0] * ey).abs() <= 1e-12 * ey * (1.0 + r[0].abs()));
    }

    #[test]
    fn jets_match_finite_differences(r in point(), a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let f = |p: [f64; 3]| -> SpatialJet {
            let [x, y, z] = SpatialJet::coordinates(p);
            (x * a + y * y * b + z).sigmoid() * (y * b).exp()
        };
        let jet = f(r);
        let h = 1e-4;
        let mut lap = 0.0;
        for i in 0..3 {
            let mut p = r;
            p[i] += h;
            let fp = f(p).value;
            p[i] -= 2.0 * h;
            let fm = f(p).value;
            prop_assert!((jet.grad[i] - (fp - fm) / (2.0 * h)).abs() < 1e-6);
            let mut p2 = r;
            p2[i] += 1e-3;
            let fp2 = f(p2).value;
            p2[i] -= 2e-3;
            let fm2 = f(p2).value;
            lap += (fp2 - 2.0 * jet.value + fm2) / 1e-6;
        }
        prop_assert!((jet.lap - lap).abs() < 1e-5 * (1.0 + lap.abs()));
    }

    #[test]
    fn tape_gradients_match_finite_differences(
        params in prop::collection::vec(-1.5..1.5f64, 11),
        r in point(),
    ) {
        // Two-neuron layer, sigmoid, linear readout, then the Laplacian.
        let eval = |p: &[f64]| -> (f64, Vec<f64>) {
            let mut tape = Tape::new(p);
            let x = tape.input(&SpatialJet::coordinates(r), true, false);
            let h = tape.affine(x, 0, 2);
            let s = tape.sigmoid(h);
            let w = tape.affine(s, 8, 1);
            let l = tape.laplacian(w);
            let v = tape.scalar(l);
            let g = tape.backward(l).unwrap();
            (v, g)
        };
        let (_, grad) = eval(&params);
        for i in 0..11 {
            let mut p = params.clone();
            p[i] += 1e-5;
            let fp = eval(&p).0;
            p[i] -= 2e-5;
            let fm = eval(&p).0;
            let fd = (fp - fm) / 2e-5;
            prop_assert!((grad[i] - fd).abs() <= 1e-6 * fd.abs().max(1e-3), "param {}: {} vs {}", i, grad[i], fd);
        }
    }
}

#[test]
fn seeds_match_examples() {
    let j = SpatialJet::seed([3.0, 4.0, 0.0], 0);
    assert_eq!((j.value, j.grad, j.lap), (3.0, [1.0, 0.0, 0.0], 0.0));
    let j = SpatialJet::seed([0.0, 0.0, 0.0], 2);
    assert_eq!((j.value, j.grad, j.lap), (0.0, [0.0, 0.0, 1.0], 0.0));
    let j = SpatialJet::seed([1.0, 2.0, 3.0], 1);
    assert_eq!((j.value, j.grad, j.lap), (2.0, [0.0, 1.0, 0.0], 0.0));
}

#[test]
fn radius_jet_example() {
    let coords = SpatialJet::coordinates([3.0, 4.0, 0.0]);
    let d = distance(&coords, [0.0; 3]).unwrap();
    assert!((d.value - 5.0).abs() < 1e-15);
    assert!((d.grad[0] - 0.6).abs() < 1e-15 && (d.grad[1] - 0.8).abs() < 1e-15);
    assert!((d.lap - 0.4).abs() < 1e-15);
}

#[test]
fn unused_parameters_get_exact_zero() {
    let params = [2.0, 5.0];
    let mut tape = Tape::new(&params);
    let c = tape.scalar_input(3.0, false);
    let p = tape.param(0, 1);
    let out = tape.mul(p, c);
    let g = tape.backward(out).unwrap();
    assert_eq!(g, vec![3.0, 0.0]);
}
