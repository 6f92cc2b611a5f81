use catseye_core::longeq::{self, BranchOptions};
use catseye_core::*;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let g = Grid::mapped(256, 2.0);
    let base = ShearPair::preset("couette", &g).unwrap();
    let modified = modify_profiles(&base, 0.24).unwrap();
    let params = ModificationParams {
        delta: 0.24,
        m: 2.8,
        l: 0.6,
        gamma: 0.22,
        eta: 0.22,
    };
    let pair = perturb_profiles(&modified, &params, &default_bumps()).unwrap();
    let spec = smallest_eigenvalue(&pair).unwrap();
    println!(
        "[{:?}] lambda_min = {:.12}  rq_dev = {:.2e}",
        t0.elapsed(),
        spec.lambda_min,
        spec.rq_deviation
    );

    let (k0, phi0) = kernel_mode(&pair).unwrap();
    println!("k0 = {k0:.12}");

    let tables = Arc::new(build_gl(&pair).unwrap());
    println!("certs: {:?}", tables.certificates);

    let fgrid = Arc::new(FourierGrid::new(64));

    // cross-check: mode-0 apply_linearized vs -H
    let psi_test = Field2D::from_fn(&fgrid, &g, |_z, y| (1.0 - y * y) * (0.7 * y).cos());
    let lin = longeq::apply_linearized(&tables, k0, &psi_test).unwrap();
    let prof: Vec<f64> = psi_test.data.row(0).iter().copied().collect();
    let h_of = rayleigh::apply_operator(&pair, &prof);
    let mut worst = 0.0f64;
    for j in 1..g.len() - 1 {
        worst = worst.max((lin.data[(0, j)] + h_of[j]).abs());
    }
    println!("mode-0 cross-check max diff = {worst:.3e}");

    let kc = longeq::kernel_certificate(&tables, &fgrid, k0, &phi0).unwrap();
    println!("kernel certificate = {kc:.3e}");

    // background residual
    let psi0f = Field2D::from_profile(&fgrid, &g, &tables.psi0.values);
    let res0 = long_residual(&tables, k0, &psi0f).unwrap();
    println!(
        "background residual L2 = {:.3e}  max = {:.3e}",
        res0.l2_norm(1.0),
        res0.max_abs()
    );

    // branch
    let t1 = Instant::now();
    let pts = continue_branch(
        tables.clone(),
        &fgrid,
        k0,
        &phi0,
        params.m,
        0.05,
        10,
        &BranchOptions::default(),
    )
    .unwrap();
    println!("branch: {} points in {:?}", pts.len(), t1.elapsed());
    for p in &pts {
        println!(
            "  alpha={:.4} k={:.10} res={:.2e} iters={}",
            p.alpha, p.k, p.state.residual_norm, p.newton_iters
        );
    }
    let last = pts.last().unwrap();
    let certs = certify_state(&last.state, &tables, 0.0).unwrap();
    println!("certs at alpha={}: {certs:?}", last.alpha);

    // small-alpha expansion order
    let mut errs = vec![];
    for p in &pts[1..] {
        let lead = psi0f.add(&{
            let mode = Field2D::from_fn(&fgrid, &g, |z, _| z.cos());
            let prof = Field2D::from_profile(&fgrid, &g, &phi0.values);
            mode.zip(&prof, |c, q| c * q).scale(p.alpha)
        });
        let e = p.state.psi.sub(&lead).l2_norm(1.0);
        errs.push((p.alpha, e));
    }
    for w in errs.windows(2) {
        let slope = (w[1].1 / w[0].1).ln() / (w[1].0 / w[0].0).ln();
        println!(
            "  alpha {:.4} -> {:.4}: remainder slope {slope:.3}",
            w[0].0, w[1].0
        );
    }
    println!("total {:?}", t0.elapsed());
}
