use catseye_core::longeq::{solution_size, TuneOptions};
use catseye_core::*;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let g = Grid::mapped(256, 2.0);
    let base = ShearPair::preset("tanh", &g).unwrap();
    let params = ModificationParams { delta: 0.2, m: 0.0, l: 0.4, gamma: 0.18, eta: 0.18 };
    let bumps = default_bumps();
    // sweep m for the bracket
    for m in [0.2, 0.5, 0.8, 1.1, 1.4] {
        let mut p = params; p.m = m;
        let modified = modify_profiles(&base, p.delta).unwrap();
        let pair = perturb_profiles(&modified, &p, &bumps).unwrap();
        match smallest_eigenvalue(&pair) {
            Ok(s) => println!("m={m}: lambda={:.6}", s.lambda_min),
            Err(e) => println!("m={m}: {e}"),
        }
    }
    // probe r(alpha) at one m
    let mut p = params; p.m = 0.8;
    let modified = modify_profiles(&base, p.delta).unwrap();
    let pair = perturb_profiles(&modified, &p, &bumps).unwrap();
    let (k0, phi0) = kernel_mode(&pair).unwrap();
    let tables = Arc::new(build_gl(&pair).unwrap());
    let fgrid = Arc::new(FourierGrid::new(64));
    let pts = continue_branch(tables.clone(), &fgrid, k0, &phi0, 0.8, 0.004, 2, &Default::default()).unwrap();
    for q in &pts[1..] {
        let r = solution_size(&q.state, &tables).unwrap();
        println!("alpha={:.4}: k={:.8} r={:.6}", q.alpha, q.k, r);
    }
    println!("[{:?}] now tune", t0.elapsed());
    let opts = TuneOptions::default();
    let res = tune_wavenumber(&base, &params, &bumps, (0.4, 1.3), 0.35, &opts);
    match res {
        Ok(t) => {
            println!("tuned: m0={:.8} k={:.10} alpha={:.6} lambda={:.8}", t.m0, t.point.k, t.point.alpha, t.lambda_min);
            let c = certify_state(&t.point.state, &t.tables, 0.0).unwrap();
            println!("certs: {c:?}");
            let (u, v, th) = extract_fields(&t.point.state, &t.tables).unwrap();
            let _ = (u, th);
            println!("||v|| = {:.6e} vs 0.5*a*k*phi-scale {:.6e}", v.l2_norm(1.0), 0.5*t.point.alpha*t.point.k*std::f64::consts::PI.sqrt());
        }
        Err(e) => println!("tune failed: {e}"),
    }
    println!("total {:?}", t0.elapsed());
}
