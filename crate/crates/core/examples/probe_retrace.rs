// probe: retrace error vs steps and reprojection cadence
use pptforge_core::flow::*;
use pptforge_core::perturb::TangentMode;
use pptforge_core::*;

fn main() {
    let t = Tolerances::default();
    let dims = BipartiteDims::new(3, 3).unwrap();
    use rand::SeedableRng;
    use rand::Rng;
    use rand_distr::StandardNormal;
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(19);
    // well-conditioned random separable rank-5 state
    let rho = loop {
        let mut m = CMatrix::zeros(9, 9);
        for _ in 0..5 {
            let u = CVector::from_fn(3, |_, _| C64::new(r.sample(StandardNormal), r.sample(StandardNormal)));
            let v = CVector::from_fn(3, |_, _| C64::new(r.sample(StandardNormal), r.sample(StandardNormal)));
            let mut w = tensor_product(&u, &v);
            w /= C64::new(w.norm(), 0.0);
            let weight: f64 = r.random_range(0.5..1.5);
            m.gerc(C64::new(weight, 0.0), &w, &w, C64::new(1.0, 0.0));
        }
        let cand = HermitianMatrix::new(dims, m).unwrap().normalized_trace().unwrap();
        let sd = cand.spectral_decompose(&t);
        let sd_pt = cand.partial_transpose().spectral_decompose(&t);
        if sd.smallest_retained().unwrap() > 0.08 && sd_pt.smallest_retained().unwrap() > 0.08 {
            break cand;
        }
    };
    {
        let sd = rho.spectral_decompose(&t);
        println!("lambda_min retained: {:.4}", sd.smallest_retained().unwrap());
    }
    let dir = random_tangent(&rho, TangentMode::Free, &t, 1234).unwrap();
    for (steps, reproj) in [(200usize, 10usize), (200, 1000), (500, 10), (500, 1000), (500, 50)] {
        let st = FlowState::new(rho.clone(), dir.a.clone(), &t).unwrap();
        let cfg = FlowConfig { steps, step_size: 1e-4, record_every: steps, reproject_every: reproj, ..Default::default() };
        let fwd = integrate(&st, &cfg, &t).unwrap();
        let end = fwd.final_state.clone().unwrap();
        let back_state = FlowState::new(end.rho.clone(), end.a.scale(-1.0), &t).unwrap();
        let back = integrate(&back_state, &cfg, &t).unwrap();
        let ret = back.final_state.unwrap();
        let err = (&ret.rho - &rho).frobenius_norm();
        // also: trace drift and a-trace at end
        println!("steps {steps} reproj {reproj}: retrace {err:.3e} tr_end {:.3e} trA_end {:.3e}",
            end.rho.trace() - 1.0, end.a.trace());
    }
}
