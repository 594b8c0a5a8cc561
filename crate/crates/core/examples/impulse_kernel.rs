//! Equivalent spatial kernel of the network for a sweep of gap-junction strengths.

use prfilter::filters::Kernel;
use prfilter::sta::fit_gaussian_to_map;
use prfilter::{impulse_response, NetworkParams};

fn main() -> prfilter::Result<()> {
    println!("g_gap   centre    tail(r>=2)  fit tail   sigma");
    for g in [0.0, 1.0, 5.0, 10.0, 20.0] {
        let k = impulse_response(&NetworkParams::default().with_g_gap(g), 5)?;
        let (tail, fit_tail, sigma) = match fit_gaussian_to_map(k.weights(), 11, 11) {
            Ok(fit) => {
                let fitted = Kernel::new(11, fit.sample(11, 11))?;
                (k.tail_mass(2), fitted.tail_mass(2), fit.sigma)
            }
            Err(_) => (k.tail_mass(2), 0.0, 0.0),
        };
        println!("{g:5.1}   {:.5}   {tail:.5}     {fit_tail:.5}    {sigma:.3}", k.center());
    }
    let k = impulse_response(&NetworkParams::default(), 3)?;
    println!("\ng_gap = 10 nS, 7x7:");
    for row in k.weights().chunks(k.size()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
        println!("  {}", cells.join(" "));
    }
    Ok(())
}
