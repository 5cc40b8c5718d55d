use pptforge_core::flow::*;
use pptforge_core::perturb::TangentMode;
use pptforge_core::*;
use rand::Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

fn main() {
    let t = Tolerances::default();
    let dims = BipartiteDims::new(3, 3).unwrap();
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(17);
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
        if sd.rank == 5 && sd_pt.rank == 5
            && sd.smallest_retained().unwrap() > 0.1 && sd_pt.smallest_retained().unwrap() > 0.1 {
            break cand;
        }
    };
    let dir = random_tangent(&rho, TangentMode::Free, &t, 17 ^ 0x5eed).unwrap();
    let st = FlowState::new(rho, dir.a, &t).unwrap();
    let cfg = FlowConfig { mode: FlowMode::GeodesicFree, steps: 20, step_size: 1e-4, record_every: 1, reproject_every: 1000, ..Default::default() };
    let traj = integrate(&st, &cfg, &t).unwrap();
    for s in &traj.samples {
        println!("t {:.4} arc-t {:.3e} |A| {:.3e} trAdotA {:.3e} drift {:.3e}",
            s.t, s.arc_length - s.t, s.a_norm - 1.0, s.tr_adot_a, s.image_drift);
    }
}
