//! Node availability from MTTF/MTTR, and required spare capacity for a
//! gang-scheduled 608-GPU job at a 99.9% availability target.

use fleet_reliability::metrics::{availability, AvailabilityInput};
use fleet_reliability::simulate::{required_overprovision, sweep_recovery_time, SimConfig};

fn main() -> fleet_reliability::Result<()> {
    for (name, mttf, mttr) in [("fleet A", 154.0, 0.88), ("fleet B", 292.0, 2.2)] {
        let a = availability(AvailabilityInput { mttf, mttr })?;
        println!("{name}: MTTF {mttf}h, MTTR {mttr}h -> availability {:.3}%", a * 100.0);
    }

    let cfg = SimConfig {
        job_gpus: 608,
        gpus_per_node: 4,
        duration_hours: 720.0,
        node_mtbf_hours: 292.0,
        recovery_time_hours: 2.2,
        spare_gpus: 0,
        seed: 7,
        replications: 100,
        time_step_hours: 0.5,
    };
    let r = required_overprovision(&cfg, 0.999)?;
    println!(
        "\n608-GPU job, 30 days, 2.2h recovery: {} spare GPUs ({} nodes, {:.1}%) -> availability {:.4}",
        r.spare_gpus,
        r.spare_nodes,
        r.fraction * 100.0,
        r.achieved_availability
    );

    println!("\nrecovery-time sweep (target 99.9%):");
    for row in sweep_recovery_time(&cfg, &[5.0 / 60.0, 0.5, 1.0, 2.2, 4.0], 0.999)? {
        println!(
            "  recovery {:>5.2}h -> {:>2} spare GPUs ({:.1}%)",
            row.recovery_time_hours,
            row.spare_gpus,
            row.overprovision_fraction * 100.0
        );
    }
    Ok(())
}
