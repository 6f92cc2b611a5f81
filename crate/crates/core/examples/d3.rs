use catseye_core::longeq::{self};
use catseye_core::*;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let g = Grid::cgl(256);
    // bisect the well strength to lambda_min = -1
    let (mut lo, mut hi) = (0.3, 0.9);
    let lam_of = |a: f64| {
        let pair = ShearPair::sinwell(a, 0.3, &g).unwrap();
        smallest_eigenvalue(&pair).unwrap().lambda_min
    };
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if lam_of(mid) > -1.0 { lo = mid } else { hi = mid }
    }
    let a = 0.5 * (lo + hi);
    let pair = ShearPair::sinwell(a, 0.3, &g).unwrap();
    let spec = smallest_eigenvalue(&pair).unwrap();
    println!("[{:?}] a = {a:.10}, lambda_min = {:.12}", t0.elapsed(), spec.lambda_min);

    let (k0, phi0) = kernel_mode(&pair).unwrap();
    println!("k0 = {k0:.12}");
    let tables = Arc::new(build_gl(&pair).unwrap());
    println!("table certs: {:?}", tables.certificates);
    let fgrid = Arc::new(FourierGrid::new(64));
    let kc = longeq::kernel_certificate(&tables, &fgrid, k0, &phi0).unwrap();
    println!("kernel certificate = {kc:.3e}");
    let psi0f = Field2D::from_profile(&fgrid, &g, &tables.psi0.values);
    let res0 = long_residual(&tables, k0, &psi0f).unwrap();
    println!("background residual L2 = {:.3e} max = {:.3e}", res0.l2_norm(1.0), res0.max_abs());

    let t1 = Instant::now();
    let pts = continue_branch(tables.clone(), &fgrid, k0, &phi0, 0.0, 0.05, 10, &Default::default()).unwrap();
    println!("branch: {} points in {:?}", pts.len(), t1.elapsed());
    for p in &pts {
        println!("  alpha={:.4} k={:.10} res={:.2e} iters={}", p.alpha, p.k, p.state.residual_norm, p.newton_iters);
    }
    let last = pts.last().unwrap();
    let certs = certify_state(&last.state, &tables, 0.0).unwrap();
    println!("certs at alpha={}: {certs:?}", last.alpha);

    let mut errs = vec![];
    for p in pts[1..].iter() {
        let lead = psi0f.add(&{
            let mode = Field2D::from_fn(&fgrid, &g, |z, _| z.cos());
            let prof = Field2D::from_profile(&fgrid, &g, &phi0.values);
            mode.zip(&prof, |c, q| c * q).scale(p.alpha)
        });
        errs.push((p.alpha, p.state.psi.sub(&lead).l2_norm(1.0)));
    }
    for w in errs.windows(2) {
        let slope = (w[1].1 / w[0].1).ln() / (w[1].0 / w[0].0).ln();
        println!("  remainder slope over [{:.4},{:.4}]: {slope:.3}", w[0].0, w[1].0);
    }
    println!("total {:?}", t0.elapsed());
}
