//! Compiles `tests/smoke.c` against the generated header and the static
//! library, then runs it. Skips when no C compiler is on PATH.

use std::path::PathBuf;
use std::process::Command;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = manifest.join("include");
    let source = manifest.join("tests").join("smoke.c");

    // target/<profile>/ holds the staticlib; the test binary sits in deps/.
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();

    // `cargo test` does not always refresh the staticlib artifact, so build
    // it explicitly. A no-op when already fresh.
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".to_string());
    let mut build_cmd = Command::new(cargo);
    build_cmd.args(["build", "-p", "colabel-ffi", "--quiet"]);
    if profile_dir.file_name().is_some_and(|n| n == "release") {
        build_cmd.arg("--release");
    }
    let build = build_cmd
        .current_dir(&manifest)
        .output()
        .expect("cargo runs");
    assert!(
        build.status.success(),
        "staticlib build failed:\n{}",
        String::from_utf8_lossy(&build.stderr)
    );

    let staticlib = profile_dir.join("libcolabel_ffi.a");
    assert!(staticlib.exists(), "staticlib missing at {staticlib:?}");

    let out_dir = tempfile::tempdir().unwrap();
    let binary = out_dir.path().join("smoke");
    let compile = Command::new("cc")
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Wextra")
        .arg("-Werror")
        .arg("-I")
        .arg(&include_dir)
        .arg(&source)
        .arg(&staticlib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&binary)
        .output();
    let compile = match compile {
        Ok(output) => output,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            eprintln!("skipping: cc not found");
            return;
        }
        Err(e) => panic!("failed to spawn cc: {e}"),
    };
    assert!(
        compile.status.success(),
        "cc failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&binary).output().unwrap();
    assert!(
        run.status.success(),
        "smoke binary failed:\n{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
