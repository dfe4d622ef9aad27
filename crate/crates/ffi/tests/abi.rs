use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use bisis_ffi::*;

fn last_error() -> Option<String> {
    let p = bisis_last_error_message();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn star(leaves: u32) -> *mut BisisGraph {
    let src: Vec<u32> = vec![0; leaves as usize];
    let dst: Vec<u32> = (1..=leaves).collect();
    let mut g = ptr::null_mut();
    let st = unsafe {
        bisis_graph_from_edges(
            leaves as usize + 1,
            src.as_ptr(),
            dst.as_ptr(),
            src.len(),
            &mut g,
        )
    };
    assert_eq!(st, BisisStatus::Ok);
    g
}

#[test]
fn graph_handle_lifecycle() {
    let g = star(4);
    unsafe {
        assert_eq!(bisis_graph_node_count(g), 5);
        assert_eq!(bisis_graph_edge_count(g), 4);
        bisis_graph_free(g);
        bisis_graph_free(ptr::null_mut());
        assert_eq!(bisis_graph_node_count(ptr::null()), 0);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut g = ptr::null_mut();
    let (src, dst) = ([0u32, 2], [1u32, 3]);
    let st = unsafe { bisis_graph_from_edges(4, src.as_ptr(), dst.as_ptr(), 2, &mut g) };
    assert_eq!(st, BisisStatus::InvalidGraph);
    assert!(g.is_null());
    assert!(last_error().unwrap().contains("connected"));

    let st = unsafe { bisis_graph_from_edges(2, ptr::null(), dst.as_ptr(), 1, &mut g) };
    assert_eq!(st, BisisStatus::NullPointer);

    let path = CString::new("/no/such/edge/list.txt").unwrap();
    assert_eq!(
        unsafe { bisis_graph_load(path.as_ptr(), &mut g) },
        BisisStatus::Io
    );

    // A success clears the message.
    let ok = star(2);
    assert!(last_error().is_none());
    let mut x = [0.0; 2];
    let st = unsafe { bisis_sis_fixed_point(ok, 0.9, x.as_mut_ptr(), 2) };
    assert_eq!(st, BisisStatus::InvalidArgument);
    assert!(last_error().unwrap().contains("3"));
    unsafe { bisis_graph_free(ok) };
}

#[test]
fn load_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tri.txt");
    std::fs::write(&path, "1 2\n2 3\n3 1\n").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(
        unsafe { bisis_graph_load(c.as_ptr(), &mut g) },
        BisisStatus::Ok
    );
    unsafe {
        assert_eq!(bisis_graph_node_count(g), 3);
        assert_eq!(bisis_graph_edge_count(g), 3);
        bisis_graph_free(g);
    }
}

#[test]
fn spectral_and_fixed_point_on_star() {
    // Star with 4 leaves: lambda(A) = 2, centre entry twice a leaf entry.
    let g = star(4);
    let ones = [1.0; 5];
    let mut lambda = 0.0;
    let mut v = [0.0; 5];
    let st = unsafe { bisis_pf_eigenpair(g, ones.as_ptr(), 5, &mut lambda, v.as_mut_ptr()) };
    assert_eq!(st, BisisStatus::Ok);
    assert!((lambda - 2.0).abs() < 1e-9);
    assert!((v[0] / v[1] - 2.0).abs() < 1e-8);

    // Complete graph K3 with tau = 1: x = 1 - 1/(2 tau) = 0.5.
    let (src, dst) = ([0u32, 1, 2], [1u32, 2, 0]);
    let mut k3 = ptr::null_mut();
    unsafe { bisis_graph_from_edges(3, src.as_ptr(), dst.as_ptr(), 3, &mut k3) };
    let mut x = [0.0; 3];
    assert_eq!(
        unsafe { bisis_sis_fixed_point(k3, 1.0, x.as_mut_ptr(), 3) },
        BisisStatus::Ok
    );
    assert!(x.iter().all(|&xi| (xi - 0.5).abs() < 1e-10));
    unsafe {
        bisis_graph_free(g);
        bisis_graph_free(k3);
    }
}

#[test]
fn lp_matches_greedy_optimum() {
    // Unit costs: the optimum moves +eps on the two best nodes and -eps on the two worst.
    let nu = [0.4, 0.1, 0.3, 0.2];
    let w = [1.0; 4];
    let mut alpha = [0.0; 4];
    let mut obj = 0.0;
    let st = unsafe {
        bisis_solve_lp(
            nu.as_ptr(),
            w.as_ptr(),
            4,
            0.1,
            alpha.as_mut_ptr(),
            &mut obj,
        )
    };
    assert_eq!(st, BisisStatus::Ok);
    assert_eq!(alpha, [0.1, -0.1, 0.1, -0.1]);
    assert!((obj - 0.04).abs() < 1e-15);
}

#[test]
fn plans_and_equilibrium() {
    let g = star(6);
    let n = 7;
    let (tau1, tau2) = (0.8, 0.3);
    let w = vec![1.0; n];
    let mut x_star = vec![0.0; n];
    unsafe { bisis_sis_fixed_point(g, tau1, x_star.as_mut_ptr(), n) };

    let mut crit = ptr::null_mut();
    let st =
        unsafe { bisis_critical_plan(g, x_star.as_ptr(), w.as_ptr(), n, tau2, 0.5, &mut crit) };
    assert_eq!(st, BisisStatus::Ok, "{:?}", last_error());
    let mut ls = ptr::null_mut();
    let st = unsafe { bisis_local_search(g, tau1, tau2, w.as_ptr(), n, 0.05, &mut ls) };
    assert_eq!(st, BisisStatus::Ok, "{:?}", last_error());
    unsafe {
        assert_eq!(bisis_plan_len(ls), n);
        assert!(bisis_plan_margin(crit).abs() < 1e-8);
        assert!(bisis_plan_margin(ls) > 0.0);
        assert!(
            (bisis_plan_budget(ls) - bisis_plan_budget(crit)).abs()
                < 1e-9 * bisis_plan_budget(crit)
        );
        assert!((bisis_plan_gamma(ls) - bisis_plan_gamma(crit)).abs() < 1e-12);
        assert!(bisis_plan_gamma(ptr::null()).is_nan());
    }

    let mut u = vec![0.0; n];
    assert_eq!(
        unsafe { bisis_plan_u(ls, u.as_mut_ptr(), n) },
        BisisStatus::Ok
    );
    assert!(u.iter().all(|&ui| (0.0..=1.0).contains(&ui)));
    assert_eq!(
        unsafe { bisis_plan_u(ls, u.as_mut_ptr(), n - 1) },
        BisisStatus::InvalidArgument
    );

    // Rebuilding the same plan explicitly reproduces its margin.
    let mut again = ptr::null_mut();
    let st = unsafe {
        bisis_plan_new(
            g,
            tau1,
            tau2,
            bisis_plan_gamma(ls),
            u.as_ptr(),
            w.as_ptr(),
            n,
            &mut again,
        )
    };
    assert_eq!(st, BisisStatus::Ok);
    assert!(unsafe { (bisis_plan_margin(again) - bisis_plan_margin(ls)).abs() } < 1e-8);

    let (mut x, mut y) = (vec![0.0; n], vec![0.0; n]);
    let st =
        unsafe { bisis_equilibrium(g, tau1, tau2, ls, 1e-3, x.as_mut_ptr(), y.as_mut_ptr(), n) };
    assert_eq!(st, BisisStatus::Ok, "{:?}", last_error());
    assert!(y.iter().sum::<f64>() > 0.0);
    assert!(x.iter().zip(&y).all(|(a, b)| a + b <= 1.0 + 1e-12));

    // Without a community the entrant (tau2 lambda = 0.3 * sqrt(6) * s < 1) dies out.
    let st = unsafe {
        bisis_equilibrium(
            g,
            tau1,
            tau2,
            ptr::null(),
            1e-3,
            x.as_mut_ptr(),
            y.as_mut_ptr(),
            n,
        )
    };
    assert_eq!(st, BisisStatus::Ok);
    assert!(y.iter().all(|&yi| yi == 0.0));
    for (a, b) in x.iter().zip(&x_star) {
        assert!((a - b).abs() < 1e-9);
    }

    unsafe {
        bisis_plan_free(crit);
        bisis_plan_free(ls);
        bisis_plan_free(again);
        bisis_plan_free(ptr::null_mut());
        bisis_graph_free(g);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(bisis_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("bisis.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    let src = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs"))
        .unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 18);
    for name in exports {
        assert!(
            text.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
    for item in [
        "typedef struct BisisGraph BisisGraph;",
        "typedef struct BisisPlan BisisPlan;",
        "BISIS_STATUS_OK = 0",
    ] {
        assert!(text.contains(item), "{item}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
    else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let main = dir.path().join("main.c");
    std::fs::write(
        &main,
        "#include \"bisis.h\"\n\
         int main(void) {\n\
           BisisGraph *g = 0;\n\
           unsigned s[1] = {0}, d[1] = {1};\n\
           BisisStatus st = bisis_graph_from_edges(2, s, d, 1, &g);\n\
           bisis_graph_free(g);\n\
           return st == BISIS_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header().parent().unwrap())
        .arg(&main)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
