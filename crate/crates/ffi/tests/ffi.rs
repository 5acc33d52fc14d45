use std::ffi::CStr;
use std::ptr;

use pqwalk_ffi::*;

fn last_error() -> String {
    let p = pqw_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn topology(kind: PqwTopologyKind, n: usize) -> *mut PqwTopology {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { pqw_topology_new(kind, n, &mut t) }, PqwStatus::Ok);
    t
}

const SINGLET: [f64; 8] = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];

#[test]
fn census_through_handles() {
    unsafe {
        let t = topology(PqwTopologyKind::Line, 3);
        let mut b = ptr::null_mut();
        assert_eq!(pqw_attractor_basis_new(t, 2, &mut b), PqwStatus::Ok);
        let mut sizes = [0usize; 4];
        assert_eq!(pqw_attractor_basis_sector_sizes(b, sizes.as_mut_ptr()), PqwStatus::Ok);
        assert_eq!(sizes, [21, 10, 10, 2]);
        pqw_attractor_basis_free(b);
        pqw_topology_free(t);
    }
}

#[test]
fn evolution_approaches_projection() {
    unsafe {
        let t = topology(PqwTopologyKind::Circle, 3);
        let mut b = ptr::null_mut();
        assert_eq!(pqw_attractor_basis_new(t, 2, &mut b), PqwStatus::Ok);
        let mut rho = ptr::null_mut();
        assert_eq!(pqw_density_from_bell(t, 0, 0, SINGLET.as_ptr(), &mut rho), PqwStatus::Ok);
        let (mut late, mut proj) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(pqw_evolve_exact(t, 2, 0.5, rho, 200, &mut late), PqwStatus::Ok);
        assert_eq!(pqw_project_asymptotic(b, rho, 200, &mut proj), PqwStatus::Ok);
        let mut d = f64::NAN;
        assert_eq!(pqw_hs_distance(late, proj, &mut d), PqwStatus::Ok);
        assert!(d < 1e-6, "distance {d}");

        let mut dim = 0;
        assert_eq!(pqw_density_dim(proj, &mut dim), PqwStatus::Ok);
        assert_eq!(dim, 36);
        let mut buf = vec![0.0; 2 * dim * dim];
        assert_eq!(pqw_density_copy(proj, buf.as_mut_ptr(), buf.len()), PqwStatus::Ok);
        let trace: f64 = (0..dim).map(|k| buf[2 * (k * dim + k)]).sum();
        assert!((trace - 1.0).abs() < 1e-12);
        assert_eq!(pqw_density_copy(proj, buf.as_mut_ptr(), 3), PqwStatus::DimensionMismatch);

        let mut neg = f64::NAN;
        assert_eq!(pqw_negativity(proj, 6, 6, &mut neg), PqwStatus::Ok);
        // |λ1| = 1/(2N) is the only negative PT eigenvalue at b = 1
        assert!((neg - 1.0 / 6.0).abs() < 1e-10);
        let mut coins = ptr::null_mut();
        assert_eq!(pqw_reduced_coin_state(proj, &mut coins), PqwStatus::Ok);
        let mut c = f64::NAN;
        assert_eq!(pqw_concurrence(coins, &mut c), PqwStatus::Ok);
        assert!((0.0..=1.0).contains(&c));

        for m in [rho, late, proj, coins] {
            pqw_density_free(m);
        }
        pqw_attractor_basis_free(b);
        pqw_topology_free(t);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(pqw_topology_new(PqwTopologyKind::Line, 1, &mut t), PqwStatus::InvalidArgument);
        assert!(t.is_null());
        assert!(last_error().contains("at least 2 sites"));
        assert_eq!(pqw_topology_new(PqwTopologyKind::Line, 3, ptr::null_mut()), PqwStatus::NullPointer);

        let t = topology(PqwTopologyKind::Line, 3);
        let mut b = ptr::null_mut();
        assert_eq!(pqw_attractor_basis_new(t, 3, &mut b), PqwStatus::InvalidArgument);
        assert_eq!(pqw_attractor_basis_new(ptr::null(), 2, &mut b), PqwStatus::NullPointer);
        let unnormalized = [1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let mut rho = ptr::null_mut();
        assert_eq!(pqw_density_from_bell(t, 0, 0, unnormalized.as_ptr(), &mut rho), PqwStatus::InvalidArgument);
        assert_eq!(pqw_density_from_bell(t, 0, 0, SINGLET.as_ptr(), &mut rho), PqwStatus::Ok);
        let mut c = 0.0;
        assert_eq!(pqw_concurrence(rho, &mut c), PqwStatus::DimensionMismatch);
        let mut big = ptr::null_mut();
        let t30 = topology(PqwTopologyKind::Line, 30);
        assert_eq!(pqw_evolve_exact(t30, 2, 0.5, rho, 1, &mut big), PqwStatus::Guard);
        pqw_density_free(rho);
        pqw_topology_free(t);
        pqw_topology_free(t30);
        pqw_density_free(ptr::null_mut());
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"pqw.h\"\nint main(void) { PqwTopology *t = 0; PqwStatus s = pqw_topology_new(PQW_TOPOLOGY_KIND_LINE, 3, &t); pqw_topology_free(t); return s != PQW_STATUS_OK; }\n",
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(format!("{dir}/include"))
        .arg(&src)
        .status()
        .expect("a C compiler named cc");
    assert!(status.success());
}
