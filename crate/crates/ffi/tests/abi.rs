use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use thuwb_ffi::*;

fn last_error() -> String {
    let p = thuwb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(thuwb_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn pulse_samples_and_buffer_sizing() {
    let mut len = 0usize;
    let mut start = 0i64;
    let st = unsafe { thuwb_gaussian_pulse(5, 5.08e-11, 6.25e-12, 3.0e-10, ptr::null_mut(), 0, &mut len, &mut start) };
    assert_eq!(st, ThuwbStatus::BufferTooSmall);
    assert!(len > 0);
    let mut buf = vec![0.0; len];
    let st = unsafe {
        thuwb_gaussian_pulse(
            5,
            5.08e-11,
            6.25e-12,
            3.0e-10,
            buf.as_mut_ptr(),
            len,
            &mut len,
            &mut start,
        )
    };
    assert_eq!(st, ThuwbStatus::Ok);
    assert!(thuwb_last_error().is_null());
    assert_eq!(start, -(len as i64 - 1) / 2);
    let energy: f64 = buf.iter().map(|x| x * x).sum::<f64>() * 6.25e-12;
    assert!((energy - 1.0).abs() < 1e-9);

    let st = unsafe { thuwb_gaussian_pulse(5, -1.0, 6.25e-12, 3.0e-10, buf.as_mut_ptr(), len, &mut len, &mut start) };
    assert_eq!(st, ThuwbStatus::InvalidParameter);
    assert!(!last_error().is_empty());
}

#[test]
fn encode_then_decode() {
    let bits: Vec<u8> = (0..50).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect();
    let mut coded = vec![0u8; 200];
    let mut n = 0;
    assert_eq!(
        unsafe { thuwb_conv_encode(bits.as_ptr(), bits.len(), coded.as_mut_ptr(), coded.len(), &mut n) },
        ThuwbStatus::Ok
    );
    assert_eq!(n, 2 * (50 + 6));
    let mut llrs: Vec<f64> = coded[..n].iter().map(|&c| if c == 0 { 1.0 } else { -1.0 }).collect();
    llrs[3] = -llrs[3];
    llrs[40] = -llrs[40];
    let mut out = vec![0u8; 50];
    let mut m = 0;
    assert_eq!(
        unsafe { thuwb_viterbi_decode(llrs.as_ptr(), n, out.as_mut_ptr(), out.len(), &mut m) },
        ThuwbStatus::Ok
    );
    assert_eq!(&out[..m], &bits[..]);
    let bad = [2u8];
    assert_eq!(
        unsafe { thuwb_conv_encode(bad.as_ptr(), 1, out.as_mut_ptr(), out.len(), &mut m) },
        ThuwbStatus::InvalidParameter
    );
    assert_eq!(
        unsafe { thuwb_viterbi_decode(ptr::null(), 4, out.as_mut_ptr(), out.len(), &mut m) },
        ThuwbStatus::NullPointer
    );
}

#[test]
fn channel_handle_lifecycle() {
    let model = CString::new("CM3").unwrap();
    let mut ch: *mut ThuwbChannel = ptr::null_mut();
    assert_eq!(
        unsafe { thuwb_channel_generate(model.as_ptr(), 42, &mut ch) },
        ThuwbStatus::Ok
    );
    let mut count = 0;
    assert_eq!(unsafe { thuwb_channel_path_count(ch, &mut count) }, ThuwbStatus::Ok);
    assert!(count > 10);
    let mut d = vec![0.0; count];
    let mut g = vec![0.0; count];
    let mut n = 0;
    assert_eq!(
        unsafe { thuwb_channel_paths(ch, d.as_mut_ptr(), g.as_mut_ptr(), count, &mut n) },
        ThuwbStatus::Ok
    );
    assert_eq!(n, count);
    assert_eq!(d[0], 0.0);
    assert!((g.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);
    let mut rms = 0.0;
    assert_eq!(unsafe { thuwb_channel_rms_delay_spread(ch, &mut rms) }, ThuwbStatus::Ok);
    assert!(rms > 1e-9 && rms < 1e-7);
    unsafe { thuwb_channel_free(ch) };
    unsafe { thuwb_channel_free(ptr::null_mut()) };

    let bad = CString::new("CM9").unwrap();
    let mut ch2: *mut ThuwbChannel = ptr::null_mut();
    assert_eq!(
        unsafe { thuwb_channel_generate(bad.as_ptr(), 1, &mut ch2) },
        ThuwbStatus::Parse
    );
    assert!(ch2.is_null());
    assert_eq!(
        unsafe { thuwb_channel_path_count(ptr::null(), &mut count) },
        ThuwbStatus::NullPointer
    );
}

#[test]
fn link_trial_through_the_abi() {
    let toml = CString::new(
        "channel = \"AWGN\"\nsnr_ref_db = 80.0\npacket_bytes = 16\npackets_per_realization = 2\n\
         [acquisition]\ngenie = true\n",
    )
    .unwrap();
    let mut link: *mut ThuwbLink = ptr::null_mut();
    assert_eq!(unsafe { thuwb_link_new(toml.as_ptr(), &mut link) }, ThuwbStatus::Ok);
    let mut r = ThuwbTrialResult::default();
    assert_eq!(unsafe { thuwb_link_run_trial(link, 0, 1.0, &mut r) }, ThuwbStatus::Ok);
    assert!(r.acquired && r.success && !r.aborted);
    assert_eq!((r.packets, r.packet_errors), (2, 0));
    assert_eq!(
        unsafe { thuwb_link_run_trial(link, 0, -1.0, &mut r) },
        ThuwbStatus::InvalidParameter
    );
    unsafe { thuwb_link_free(link) };

    let bad = CString::new("realizations = 0").unwrap();
    let mut l2: *mut ThuwbLink = ptr::null_mut();
    assert_eq!(
        unsafe { thuwb_link_new(bad.as_ptr(), &mut l2) },
        ThuwbStatus::InvalidParameter
    );
    let junk = CString::new("channel = [").unwrap();
    assert_eq!(unsafe { thuwb_link_new(junk.as_ptr(), &mut l2) }, ThuwbStatus::Parse);
    assert!(l2.is_null());
}

#[test]
fn experiment_runs_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let toml =
        CString::new("command = \"ber-study\"\nsnrs_db = [3.0]\nsymbols_per_trial = 100\nmodes = [\"mrc\"]\n").unwrap();
    let mut e: *mut ThuwbExperiment = ptr::null_mut();
    assert_eq!(
        unsafe { thuwb_experiment_from_toml(toml.as_ptr(), &mut e) },
        ThuwbStatus::Ok
    );
    assert_eq!(unsafe { thuwb_experiment_set_seed(e, 3) }, ThuwbStatus::Ok);
    assert_eq!(
        unsafe { thuwb_experiment_set_trials(e, 0) },
        ThuwbStatus::InvalidParameter
    );
    assert_eq!(unsafe { thuwb_experiment_set_trials(e, 2) }, ThuwbStatus::Ok);
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { thuwb_experiment_run(e, out.as_ptr(), 1) }, ThuwbStatus::Ok);
    unsafe { thuwb_experiment_free(e) };
    let manifest = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"ber-study\""));
    assert!(dir.path().join("ber_mrc.csv").exists());
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/thuwb.h")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header()).unwrap();
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| {
            l.trim_start()
                .strip_prefix("pub unsafe extern \"C\" fn ")
                .or(l.trim_start().strip_prefix("pub extern \"C\" fn "))
        })
        .map(|l| l.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for f in exports {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(h.contains("THUWB_STATUS_BUFFER_TOO_SMALL = 7"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let Ok(_) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipped");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"thuwb.h\"\nint main(void) { ThuwbTrialResult r; r.success = false; (void)r; \
         return thuwb_version() == 0 ? THUWB_STATUS_INTERNAL : THUWB_STATUS_OK; }\n",
    )
    .unwrap();
    let inc = header().parent().unwrap().to_path_buf();
    for (compiler, std) in [("cc", "-std=c11"), ("c++", "-std=c++17")] {
        let mut cmd = Command::new(compiler);
        if compiler == "c++" {
            cmd.args(["-x", "c++"]);
        }
        let out = cmd
            .args([std, "-Wall", "-Wextra", "-Werror", "-fsyntax-only", "-I"])
            .arg(&inc)
            .arg(&src)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{compiler}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "thuwb.h"

int main(void) {
    uint8_t bits[8] = {1, 0, 1, 1, 0, 0, 1, 0};
    uint8_t coded[64];
    size_t n = 0;
    if (thuwb_conv_encode(bits, 8, coded, 64, &n) != THUWB_STATUS_OK || n != 28) return 1;
    double llr[28];
    for (size_t i = 0; i < n; i++) llr[i] = coded[i] ? -1.0 : 1.0;
    uint8_t out[8];
    size_t m = 0;
    if (thuwb_viterbi_decode(llr, n, out, 8, &m) != THUWB_STATUS_OK || m != 8) return 2;
    for (int i = 0; i < 8; i++) if (out[i] != bits[i]) return 3;
    ThuwbChannel *ch = NULL;
    if (thuwb_channel_generate("CM9", 1, &ch) != THUWB_STATUS_PARSE || ch != NULL) return 4;
    if (thuwb_last_error() == NULL) return 5;
    if (thuwb_channel_generate("CM1", 1, &ch) != THUWB_STATUS_OK) return 6;
    size_t paths = 0;
    thuwb_channel_path_count(ch, &paths);
    thuwb_channel_free(ch);
    printf("%s %zu\n", thuwb_version(), paths);
    return paths > 0 ? 0 : 7;
}
"#;

/// Directory holding the built shared library, next to the test's `deps/`.
fn library_dir() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?.to_path_buf();
    dir.join("libthuwb_ffi.so").exists().then_some(dir)
}

#[test]
fn c_program_links_and_runs() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipped");
        return;
    }
    let Some(lib) = library_dir() else {
        eprintln!("shared library not built on this platform; skipped");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("prog.c");
    let exe = dir.path().join("prog");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let out = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-I"])
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg("-o")
        .arg(&exe)
        .arg(format!("-L{}", lib.display()))
        .arg(format!("-Wl,-rpath,{}", lib.display()))
        .arg("-lthuwb_ffi")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.starts_with(env!("CARGO_PKG_VERSION")));
}
