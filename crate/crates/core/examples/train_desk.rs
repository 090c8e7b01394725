//! Desk-scale training followed by energy-unit fine-tuning.
//!
//! Usage: `train_desk [epochs_main] [epochs_finetune] [checkpoint.json]`

use std::path::PathBuf;

use h2pinn::model::{Evaluator, NetworkConfig};
use h2pinn::sampler::SamplerConfig;
use h2pinn::trainer::{fine_tune, train, TrainingConfig};

fn main() -> h2pinn::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs_main = args.next().map(|s| s.parse().expect("epochs_main")).unwrap_or(3000);
    let epochs_finetune = args.next().map(|s| s.parse().expect("epochs_finetune")).unwrap_or(2000);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "desk_checkpoint.json".into()));

    let network = NetworkConfig::default();
    let sampler = SamplerConfig::default();
    let training = TrainingConfig {
        epochs_main,
        epochs_finetune,
        ..TrainingConfig::desk()
    };
    let report = |row: &h2pinn::trainer::TrainLogRow| {
        if row.epoch % 250 == 0 {
            println!("{:>8} {:>5}  total {:.3e}  pde {:.3e}  bc {:.3e}", row.phase.as_str(), row.epoch, row.loss.total, row.loss.pde, row.loss.bc);
        }
    };
    let main = train(&network, &sampler, &training, report)?;
    println!("best main epoch {} loss {:.3e}", main.checkpoint.metadata.epoch, main.checkpoint.metadata.best_total_loss);
    let tuned = fine_tune(&main.checkpoint, &sampler, &training, report)?;
    tuned.checkpoint.save(&out)?;

    let mut ev = Evaluator::new(&tuned.checkpoint.params);
    for r in [0.5, 1.0, 1.5, 2.0, 2.5] {
        println!("R {r:.1}  E_nn {:.5}  gate {:.4}", ev.energy(r), ev.gate(r));
    }
    println!("checkpoint written to {}", out.display());
    Ok(())
}
