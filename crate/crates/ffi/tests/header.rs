use std::path::Path;
use std::process::Command;

fn header() -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ramdiv.h")).unwrap()
}

#[test]
fn header_declares_the_api() {
    let h = header();
    for name in [
        "typedef struct RamdivModel RamdivModel;",
        "typedef struct RamdivMixture RamdivMixture;",
        "RAMDIV_STATUS_NON_FINITE = 8",
        "RAMDIV_KIND_F_ALPHA = 6",
        "RAMDIV_PROPOSAL_MIXTURE = 1",
        "ramdiv_f0(",
        "ramdiv_closed_form(",
        "ramdiv_model_new(",
        "ramdiv_model_free(",
        "ramdiv_mixture_new(",
        "ramdiv_mixture_from_model(",
        "ramdiv_mixture_log_density(",
        "ramdiv_mixture_free(",
        "ramdiv_ram_mc(",
        "ramdiv_last_error_message(",
    ] {
        assert!(h.contains(name), "missing `{name}`");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile_dir();
    let src = dir.join("use_header.c");
    std::fs::write(
        &src,
        "#include \"ramdiv.h\"\nint main(void) { RamdivDivergence d = { RAMDIV_KIND_KL, 0.0 }; double v; \
         RamdivStatus (*f)(RamdivDivergence, double, double *) = ramdiv_f0; (void)f; (void)d; (void)v; return 0; }\n",
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = Command::new(cc).arg("-fsyntax-only").arg("-Wall").arg("-Werror").arg("-I").arg(include).arg(&src).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join("ramdiv-header");
    std::fs::create_dir_all(&d).unwrap();
    d
}
