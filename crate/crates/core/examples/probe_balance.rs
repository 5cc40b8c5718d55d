// probe: balance a pipeline (5,5) state and examine conditioning + retrace
use pptforge_core::flow::*;
use pptforge_core::perturb::*;
use pptforge_core::products::OrthParams;
use pptforge_core::superop::HermBasis;
use pptforge_core::*;

fn main() {
    let t = Tolerances::default();
    let ctx = UpbContext::from_orth_params(&OrthParams::new(1.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
    let c: [C64; 5] = [
        C64::new(0.4, 0.1), C64::new(-0.3, 0.2), C64::new(0.5, -0.1),
        C64::new(0.2, 0.3), C64::new(0.35, -0.25),
    ];
    let seed = rank45_seed(&ctx, c, [0.1, -0.05, 0.2, 0.0]).unwrap();
    let dir = rank45_direction(&ctx, &seed, TangentMode::Free, &t).unwrap();
    let rho55 = step_onto_surface(&ctx.rho, &dir.direction, 1e-3, (5, 5), &t).unwrap().rho_prime;
    println!("pipeline state rank pair {:?}", rho55.rank_pair(&t));
    let sd = rho55.spectral_decompose(&t);
    println!("lam5 = {:.3e}", sd.smallest_retained().unwrap());

    let bal_cfg = FlowConfig { steps: 4000, step_size: 0.02, ..Default::default() };
    let start = std::time::Instant::now();
    let bal = balance_interior(&rho55, 0.12, &bal_cfg, &t).unwrap();
    println!("balance took {:?}", start.elapsed());
    let sd = bal.spectral_decompose(&t);
    let sd_pt = bal.partial_transpose().spectral_decompose(&t);
    println!("balanced rank pair {:?}, lam5 rho {:.3}, lam5 rhopt {:.3}",
        bal.rank_pair(&t), sd.smallest_retained().unwrap(), sd_pt.smallest_retained().unwrap());
    // extremality
    let rep = pptforge_core::superop::extremality_test(&bal, &t).unwrap();
    println!("extremal: {} (multiplicity {})", rep.is_extremal, rep.multiplicity_of_two);
    // tangent dims
    let free = tangent_rank_preserving(&bal, &t);
    let fixed = tangent_fixed_image(&bal, &t);
    println!("tangent dims: free {} fixed {}", free.dimension, fixed.dimension);
    // T spectrum gap
    let basis = HermBasis::new(bal.dims());
    let dir2 = random_tangent(&bal, TangentMode::FixedImage, &t, 7).unwrap();
    let st = FlowState::new(bal.clone(), dir2.a.clone(), &t).unwrap();
    let ops = tangent_constraint_operator(&st, &basis, TangentMode::FixedImage);
    let (vals, _) = ops.t.symmetric_eigen();
    let nonzero: Vec<f64> = vals.iter().copied().filter(|v| v.abs() > 1e-8).collect();
    println!("fixed-image T: null {}, smallest nonzero {:.4}", 81 - nonzero.len(), nonzero[0]);

    // retrace test on the balanced state (fixed image mode)
    for (h, steps) in [(1e-4, 500usize), (1e-4, 1000)] {
        let cfg = FlowConfig { mode: FlowMode::GeodesicFixedImage, steps, step_size: h,
            record_every: steps, reproject_every: 10, ..Default::default() };
        let fwd = integrate(&st, &cfg, &t).unwrap();
        let end = fwd.final_state.clone().unwrap();
        let back_state = FlowState::new(end.rho.clone(), end.a.scale(-1.0), &t).unwrap();
        let back = integrate(&back_state, &cfg, &t).unwrap();
        let ret = back.final_state.unwrap();
        let err = (&ret.rho - &bal).frobenius_norm();
        println!("fixed-image h {h:.1e} steps {steps}: retrace {err:.3e}");
    }
    println!("|rho^P - rho| of balanced: {:.3e}", (&bal.partial_transpose() - &bal).frobenius_norm());
    // break the partial-transpose symmetry with a random SL transform
    use rand::SeedableRng;
    let mut r2 = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    use rand_distr::StandardNormal;
    use rand::Rng;
    let gl = |r: &mut rand_chacha::ChaCha8Rng| {
        CMatrix::from_fn(3, 3, |i, j| {
            let eye = if i == j { 1.0 } else { 0.0 };
            C64::new(eye + 0.35 * r.sample::<f64, _>(StandardNormal), 0.35 * r.sample::<f64, _>(StandardNormal))
        })
    };
    let bal2 = pptforge_core::hermitian::sl_product_transform(&bal, &gl(&mut r2), &gl(&mut r2)).unwrap();
    println!("transformed rank pair {:?} lam5 {:.3} lam5pt {:.3}", bal2.rank_pair(&t),
        bal2.spectral_decompose(&t).smallest_retained().unwrap(),
        bal2.partial_transpose().spectral_decompose(&t).smallest_retained().unwrap());
    let dir4 = random_tangent(&bal2, TangentMode::FixedImage, &t, 9).unwrap();
    let st4 = FlowState::new(bal2.clone(), dir4.a.clone(), &t).unwrap();
    let ops4 = tangent_constraint_operator(&st4, &basis, TangentMode::FixedImage);
    let (vals4, _) = ops4.t.symmetric_eigen();
    let nz: Vec<f64> = vals4.iter().copied().filter(|v| v.abs() > 1e-8).collect();
    println!("transformed fixed-image T: null {}, smallest nonzero {:.4}", 81 - nz.len(), nz[0]);
    for steps in [500usize, 1000] {
        let cfg = FlowConfig { mode: FlowMode::GeodesicFixedImage, steps, step_size: 1e-4,
            record_every: steps, reproject_every: 10, ..Default::default() };
        let fwd = integrate(&st4, &cfg, &t).unwrap();
        let end = fwd.final_state.clone().unwrap();
        let back_state = FlowState::new(end.rho.clone(), end.a.scale(-1.0), &t).unwrap();
        let back = integrate(&back_state, &cfg, &t).unwrap();
        let ret = back.final_state.unwrap();
        println!("transformed fixed-image steps {steps}: retrace {:.3e}", (&ret.rho - &bal2).frobenius_norm());
    }
    // free mode retrace
    let dir3 = random_tangent(&bal, TangentMode::Free, &t, 8).unwrap();
    let st3 = FlowState::new(bal.clone(), dir3.a.clone(), &t).unwrap();
    let cfg = FlowConfig { mode: FlowMode::GeodesicFree, steps: 1000, step_size: 1e-4,
        record_every: 1000, reproject_every: 10, ..Default::default() };
    let fwd = integrate(&st3, &cfg, &t).unwrap();
    let end = fwd.final_state.clone().unwrap();
    let back_state = FlowState::new(end.rho.clone(), end.a.scale(-1.0), &t).unwrap();
    let back = integrate(&back_state, &cfg, &t).unwrap();
    let ret = back.final_state.unwrap();
    println!("free mode 1000 steps: retrace {:.3e}", (&ret.rho - &bal).frobenius_norm());
}
// appended: symmetry check + SL-transformed retrace
