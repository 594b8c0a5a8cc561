//! Reduced photoreceptor grid: passive membranes coupled by gap junctions and
//! driven by a double-exponential photocurrent.

mod banded;
mod grid;
mod params;
mod photocurrent;
mod simulate;
mod system;

pub use banded::BandedCholesky;
pub use grid::GridTopology;
pub use params::NetworkParams;
pub use photocurrent::{photocurrent, PhotoKernel};
pub use simulate::{
    simulate, simulate_timevarying, simulate_traced, DriveField, SimResult, Traces,
};
pub use system::{build_system, FactorizedSystem, SystemMatrix};

#[cfg(test)]
mod tests {
    use super::*;

    fn system(w: usize, h: usize, g_gap: f64) -> FactorizedSystem {
        let p = NetworkParams::default().with_g_gap(g_gap);
        build_system(&GridTopology::new(w, h).unwrap(), &p).unwrap()
    }

    #[test]
    fn zero_drive_gives_zero_deflection() {
        let sys = system(6, 5, 10.0);
        let r = simulate(&sys, &DriveField::zeros(30)).unwrap();
        assert!(r.peak_deflection.iter().all(|&d| d.abs() < 1e-9));
    }

    #[test]
    fn uniform_drive_matches_isolated_cell() {
        let single = simulate(&system(1, 1, 0.0), &DriveField::uniform(1, 17.0).unwrap())
            .unwrap()
            .peak_deflection[0];
        let sys = system(7, 4, 10.0);
        let r = simulate(&sys, &DriveField::uniform(28, 17.0).unwrap()).unwrap();
        for d in r.peak_deflection {
            assert!((d - single).abs() < 1e-9 * single, "{d} vs {single}");
        }
    }

    #[test]
    fn deterministic() {
        let sys = system(5, 5, 10.0);
        let drive = DriveField::new((0..25).map(|i| (i % 7) as f64).collect()).unwrap();
        let a = simulate(&sys, &drive).unwrap();
        let b = simulate(&sys, &drive).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn traced_trace_starts_at_rest_and_matches_peak() {
        let sys = system(3, 3, 10.0);
        let drive = DriveField::impulse(9, 4, 40.0).unwrap();
        let r = simulate_traced(&sys, &drive, &[4, 0]).unwrap();
        let tr = r.traces.unwrap();
        let v_rest = sys.params().v_rest();
        assert_eq!(tr.voltages[0][0], v_rest);
        assert_eq!(tr.voltages[0].len(), sys.params().steps() + 1);
        let peak = tr.voltages[0]
            .iter()
            .map(|v| (v - v_rest).abs())
            .fold(0.0, f64::max);
        assert!((peak - r.peak_deflection[4]).abs() < 1e-12);
        // light hyperpolarizes
        assert!(tr.voltages[0].iter().all(|&v| v <= v_rest));
    }

    #[test]
    fn one_frame_matches_flash() {
        let sys = system(4, 3, 10.0);
        let drive = DriveField::new((0..12).map(|i| i as f64 * 2.5).collect()).unwrap();
        let flash = simulate_traced(&sys, &drive, &[5, 11]).unwrap();
        let movie =
            simulate_timevarying(&sys, std::slice::from_ref(&drive), sys.params().t_end, &[5, 11])
                .unwrap();
        assert_eq!(flash.traces.unwrap(), movie);
    }

    #[test]
    fn frame_dt_must_be_multiple_of_dt() {
        let sys = system(2, 2, 1.0);
        let f = DriveField::zeros(4);
        assert!(simulate_timevarying(&sys, &[f.clone()], 2.5, &[0]).is_err());
        assert!(simulate_timevarying(&sys, &[f.clone()], 0.0, &[0]).is_err());
        assert!(simulate_timevarying(&sys, &[f], 2.0, &[0]).is_ok());
    }

    #[test]
    fn drive_length_checked() {
        let sys = system(2, 2, 1.0);
        assert!(simulate(&sys, &DriveField::zeros(5)).is_err());
        assert!(DriveField::new(vec![-1.0]).is_err());
    }
}
