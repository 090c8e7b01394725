//! Value, gradient and Laplacian of a few fields through spatial jets.

use h2pinn::autodiff::{distance, SpatialJet};

fn main() {
    let r = [0.3, -0.4, 1.2];
    let [x, y, z] = SpatialJet::coordinates(r);
    let fields = [
        ("|r|^2", x * x + y * y + z * z),
        ("exp(-|r|)", distance(&SpatialJet::coordinates(r), [0.0; 3]).unwrap().scale(-1.0).exp()),
        ("x exp(y)", x * y.exp()),
        ("sigmoid(x + y z)", (x + y * z).sigmoid()),
    ];
    println!("point {r:?}");
    for (name, f) in fields {
        println!("{name:>18}  value {:>10.6}  grad [{:>9.5}, {:>9.5}, {:>9.5}]  lap {:>10.6}", f.value, f.grad[0], f.grad[1], f.grad[2], f.lap);
    }
}
