use consortium::docp::*;
use consortium::model::{ControlPoint, ModelParams, X_INIT};
use consortium::pmp::*;

fn main() {
    let p = ModelParams::default();
    for (n, iters, gtol) in [(1400usize, 3000usize, 1e-8f64), (1400, 20000, 1e-9)] {
        let mut spec = DocpSpec::with_constant_start(X_INIT, 20.0, n, 1.0, 0.8251, 0.4409);
        spec.settings.max_iterations = iters;
        spec.settings.grad_tol = gtol;
        spec.settings.improvement_tol = 0.0;  // keep pushing
        let sol = transcribe_and_optimize(&spec, &p).unwrap();
        let path = integrate_costates(&sol.trajectory, &p).unwrap();
        // H affine in u: worst admissible u is a box corner
        let mut worst = 0.0f64;
        let mut worst_node = 0;
        let nn = sol.trajectory.n_steps();
        for node in 0..=nn {
            let x = sol.trajectory.states[node];
            let lam = path.costates[node];
            let u_star = sol.trajectory.controls[node.min(nn - 1)];
            let h_star = hamiltonian(&x, &lam, &u_star, &p);
            for ca in [0.0, 1.0] {
                for cd in [0.0, 1.0] {
                    let h = hamiltonian(&x, &lam, &ControlPoint::new(ca, cd), &p);
                    if h - h_star > worst { worst = h - h_star; worst_node = node; }
                }
            }
        }
        println!("n={n} iters={} gnorm={:.2e} term={:?}: worst corner violation {:.3e} at node {} (t={:.3})",
            sol.iterations, sol.gradient_norm_projected, sol.termination, worst, worst_node, sol.trajectory.times[worst_node]);
    }
}
