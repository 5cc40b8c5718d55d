use pptforge_core::flow::*;
use pptforge_core::perturb::*;
use pptforge_core::products::OrthParams;
use pptforge_core::superop::HermBasis;
use pptforge_core::*;
use nalgebra::DVector;

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
    let dims = rho55.dims();
    let basis = HermBasis::new(dims);

    // balance-style direction
    let sd = rho55.spectral_decompose(&t);
    let psi = sd.eigenvector(4);
    let pt = rho55.partial_transpose();
    let t_op = {
        use pptforge_core::flow as fl;
        let _ = &fl::FlowMode::GeodesicFree;
        // use tangent operator through perturb
        pptforge_core::perturb::tangent_operator(&rho55, &basis, TangentMode::Free, &t)
    };
    let null = t_op.null_space(&basis, &t);
    println!("null dim {}", null.dimension);
    let g = DVector::from_fn(null.dimension, |k, _| null.basis[k].expectation(&psi).re);
    let tr = DVector::from_fn(null.dimension, |k, _| null.basis[k].trace());
    let mut ascent = g.clone();
    let that = &tr / tr.norm();
    ascent.axpy(-g.dot(&that), &that, 1.0);
    let coeff = &ascent / ascent.norm();
    let mut a = HermitianMatrix::zeros(dims);
    for (k, b) in null.basis.iter().enumerate() {
        a = HermitianMatrix::lin_comb(1.0, &a, coeff[k], b);
    }
    let a = a.scale(1.0 / a.frobenius_norm());
    let slope = a.expectation(&psi).re;
    println!("slope {slope:.4e} lam5 {:.4e} lam5pt {:.4e}", sd.eigenvalues[4],
        pt.spectral_decompose(&t).eigenvalues[4]);
    let dt = 2.9e-4;
    let stepped = HermitianMatrix::lin_comb(1.0, &rho55, dt, &a);
    // manual alternating truncation with diagnostics
    let mut x = stepped.clone();
    for sweep in 0..12 {
        let mut sd = x.spectral_decompose(&t);
        let e: Vec<f64> = sd.eigenvalues.iter().copied().collect();
        sd.rank = 5;
        x = sd.filtered_rebuild(dims, |l| l.max(0.0));
        let mut sd2 = x.partial_transpose().spectral_decompose(&t);
        let e2: Vec<f64> = sd2.eigenvalues.iter().copied().collect();
        sd2.rank = 5;
        x = sd2.filtered_rebuild(dims, |l| l.max(0.0)).partial_transpose();
        x = x.normalized_trace().unwrap();
        println!("sweep {sweep}: rho kernel [{:.2e} {:.2e} {:.2e} {:.2e}] pt kernel [{:.2e} {:.2e} {:.2e} {:.2e}]",
            e[0], e[1], e[2], e[3], e2[0], e2[1], e2[2], e2[3]);
    }
    let final_rp = x.rank_pair(&t);
    println!("final rank pair {final_rp:?} min eig {:.2e} / {:.2e}", x.min_eigenvalue(&t),
        x.partial_transpose().min_eigenvalue(&t));
}
