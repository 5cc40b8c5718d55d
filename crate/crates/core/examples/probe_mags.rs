// probe: magnitudes along the geodesic flow
use pptforge_core::flow::*;
use pptforge_core::perturb::TangentMode;
use pptforge_core::superop::HermBasis;
use pptforge_core::*;
use rand::Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

fn main() {
    let t = Tolerances::default();
    let dims = BipartiteDims::new(3, 3).unwrap();
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(19);
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
    let dir = random_tangent(&rho, TangentMode::Free, &t, 1234).unwrap();
    let st = FlowState::new(rho.clone(), dir.a.clone(), &t).unwrap();
    let basis = HermBasis::new(dims);
    let rhs = geodesic_rhs(&st, &basis, TangentMode::Free, &t);
    println!("|a_dot| = {:.3}", rhs.a_dot.frobenius_norm());
    let ops = tangent_constraint_operator(&st, &basis, TangentMode::Free);
    let (vals, _) = ops.t.symmetric_eigen();
    let nonzero: Vec<f64> = vals.iter().copied().filter(|v| v.abs() > 1e-8).collect();
    println!("T spectrum: null dim {}, smallest nonzero {:.4}, largest {:.4}",
        81 - nonzero.len(), nonzero.first().unwrap(), nonzero.last().unwrap());
    println!("|T_dot| = {:.3}", ops.t_dot.matrix().norm());
    println!("|rho_plus| = {:.3}", st.rho_plus.frobenius_norm());

    // h-scaling of the retrace error at fixed T = 0.02
    for (h, steps) in [(2e-4, 100usize), (1e-4, 200), (5e-5, 400)] {
        let cfg = FlowConfig { steps, step_size: h, record_every: steps, reproject_every: 10_000, ..Default::default() };
        let fwd = integrate(&st, &cfg, &t).unwrap();
        let end = fwd.final_state.clone().unwrap();
        let back_state = FlowState::new(end.rho.clone(), end.a.scale(-1.0), &t).unwrap();
        let back = integrate(&back_state, &cfg, &t).unwrap();
        let ret = back.final_state.unwrap();
        let err = (&ret.rho - &rho).frobenius_norm();
        println!("h {h:.1e} steps {steps}: retrace {err:.3e}");
    }
}
