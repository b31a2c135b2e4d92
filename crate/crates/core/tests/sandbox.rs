use polytrans_core::sandbox::{ExecutionLimits, Outcome, Sandbox, SandboxConfig, SandboxError, Toolchain, Verifier};
use polytrans_core::testspec::{EntrypointSignature, LiteralValue, SemanticType, TestCase, TestSuite};
use polytrans_core::transpiler::emit_harness;
use polytrans_core::LanguageId;

fn square_suite() -> TestSuite {
    let sig = EntrypointSignature::new("square", vec![SemanticType::Int], SemanticType::Int);
    let cases = (0..8)
        .map(|i| TestCase { args: vec![LiteralValue::Int(i)], expected: LiteralValue::Int(i * i) })
        .collect();
    TestSuite::new("square", sig, cases)
}

fn sandbox() -> Sandbox {
    Sandbox::default()
}

const PY_OK: &str = "def square(x: int) -> int:\n    return x * x\n";
const CPP_OK: &str = "long long square(long long x) { return x * x; }\n";

#[test]
fn python_verdicts() {
    let sb = sandbox();
    let py = LanguageId::python();
    let h = emit_harness(&square_suite(), &py).unwrap();
    let lim = ExecutionLimits::default();

    let (v, r) = sb.verify(PY_OK, &py, &h, &lim).unwrap();
    assert_eq!((v.outcome, r), (Outcome::Pass, 1), "{}", v.diagnostics);
    assert_eq!(v.first_failing_case, None);

    let (v, r) = sb.verify("def square(x):\n    return x *\n", &py, &h, &lim).unwrap();
    assert_eq!((v.outcome, r), (Outcome::CompileError, 0));

    // wrong only on the last case
    let seven = "def square(x):\n    return 0 if x == 7 else x * x\n";
    let (v, r) = sb.verify(seven, &py, &h, &lim).unwrap();
    assert_eq!((v.outcome, r, v.first_failing_case), (Outcome::WrongAnswer, 0, Some(7)));

    let (v, _) = sb.verify("def square(x):\n    raise ValueError('boom')\n", &py, &h, &lim).unwrap();
    assert_eq!(v.outcome, Outcome::RuntimeError);
    assert!(v.diagnostics.contains("ValueError"));
}

#[test]
fn early_exit_is_not_a_pass() {
    let sb = sandbox();
    let py = LanguageId::python();
    let h = emit_harness(&square_suite(), &py).unwrap();
    let sneaky = "import sys\nsys.exit(0)\ndef square(x):\n    return 0\n";
    let (v, r) = sb.verify(sneaky, &py, &h, &ExecutionLimits::default()).unwrap();
    assert_eq!((v.outcome, r), (Outcome::RuntimeError, 0));
}

#[test]
fn timeout_is_enforced() {
    let sb = sandbox();
    let py = LanguageId::python();
    let h = emit_harness(&square_suite(), &py).unwrap();
    let lim = ExecutionLimits::default().with_run_timeout(2.0);
    let (v, r) = sb.verify("def square(x):\n    while True:\n        pass\n", &py, &h, &lim).unwrap();
    assert_eq!((v.outcome, r), (Outcome::Timeout, 0));
    assert!(v.wall_time >= 2.0);
    assert!(v.wall_time < 8.0);
}

#[test]
fn cpp_verdicts() {
    let sb = sandbox();
    let cpp = LanguageId::cpp();
    let h = emit_harness(&square_suite(), &cpp).unwrap();
    let lim = ExecutionLimits::default();
    let (v, r) = sb.verify(CPP_OK, &cpp, &h, &lim).unwrap();
    assert_eq!((v.outcome, r), (Outcome::Pass, 1), "{}", v.diagnostics);
    let (v, _) = sb.verify("long long square(long long x) { return x * }\n", &cpp, &h, &lim).unwrap();
    assert_eq!(v.outcome, Outcome::CompileError);
    assert!(!v.diagnostics.is_empty());
    let (v, _) = sb
        .verify("long long square(long long x) { return x == 3 ? 10 : x * x; }\n", &cpp, &h, &lim)
        .unwrap();
    assert_eq!((v.outcome, v.first_failing_case), (Outcome::WrongAnswer, Some(3)));
    let crash = "#include <cstdlib>\nlong long square(long long x) { if (x == 2) abort(); return x * x; }\n";
    let (v, _) = sb.verify(crash, &cpp, &h, &lim).unwrap();
    assert_eq!(v.outcome, Outcome::RuntimeError);
}

#[test]
fn memory_cap_is_enforced() {
    let sb = sandbox();
    let py = LanguageId::python();
    let h = emit_harness(&square_suite(), &py).unwrap();
    let lim = ExecutionLimits { memory_cap: 256 * 1024 * 1024, ..Default::default() };
    let hog = "def square(x):\n    b = bytearray(1024 * 1024 * 1024)\n    return x * x\n";
    let (v, _) = sb.verify(hog, &py, &h, &lim).unwrap();
    assert_eq!(v.outcome, Outcome::RuntimeError);
}

#[test]
fn output_is_capped() {
    let sb = sandbox();
    let py = LanguageId::python();
    let h = emit_harness(&square_suite(), &py).unwrap();
    let lim = ExecutionLimits { output_cap: 1000, ..Default::default() };
    let flood = "import sys\ndef square(x):\n    sys.stderr.write('x' * 100000)\n    raise SystemExit(3)\n";
    let (v, _) = sb.verify(flood, &py, &h, &lim).unwrap();
    assert_eq!(v.outcome, Outcome::RuntimeError);
    assert!(v.diagnostics.len() <= 1000);
    assert!(v.diagnostics.ends_with("…truncated"));
}

#[test]
fn group_is_ordered_and_parallelism_invariant() {
    let sb = sandbox();
    let py = LanguageId::python();
    let h = emit_harness(&square_suite(), &py).unwrap();
    let lim = ExecutionLimits::default().with_run_timeout(2.0);
    let batch: Vec<String> = vec![
        PY_OK.into(),
        "def square(x):\n    return x *\n".into(),
        "def square(x):\n    while True:\n        pass\n".into(),
        "def square(x):\n    return x + x\n".into(),
        PY_OK.into(),
        "import os\nopen('shared.txt', 'w').write('x')\ndef square(x):\n    return x * x\n".into(),
    ];
    let want = [
        Outcome::Pass,
        Outcome::CompileError,
        Outcome::Timeout,
        Outcome::WrongAnswer,
        Outcome::Pass,
        Outcome::Pass,
    ];
    let seq: Vec<_> = sb.verify_group(&batch, &py, &h, &lim, 1).into_iter().map(|r| r.unwrap().0).collect();
    let par: Vec<_> = sb.verify_group(&batch, &py, &h, &lim, 8).into_iter().map(|r| r.unwrap().0).collect();
    let outcomes = |v: &[polytrans_core::sandbox::Verdict]| {
        v.iter().map(|x| (x.outcome, x.first_failing_case)).collect::<Vec<_>>()
    };
    assert_eq!(outcomes(&seq), outcomes(&par));
    assert_eq!(seq.iter().map(|v| v.outcome).collect::<Vec<_>>(), want);

    let eight = vec![PY_OK.to_string(); 8];
    for r in sb.verify_group(&eight, &py, &h, &lim, 8) {
        assert_eq!(r.unwrap().1, 1);
    }
}

#[test]
fn errors_are_not_verdicts() {
    let sb = sandbox();
    let py = LanguageId::python();
    let h = emit_harness(&square_suite(), &py).unwrap();
    let lim = ExecutionLimits::default();
    assert!(matches!(
        sb.verify(PY_OK, &LanguageId::cpp(), &h, &lim),
        Err(SandboxError::LanguageMismatch { .. })
    ));

    let mut cfg = SandboxConfig::default();
    cfg.toolchains.insert(
        "python".into(),
        Toolchain { run_cmd: vec!["no-such-interpreter-xyz".into(), "{source}".into()], compile_cmd: vec![], ..Toolchain::python() },
    );
    let broken = Sandbox::new(cfg);
    assert!(matches!(broken.verify(PY_OK, &py, &h, &lim), Err(SandboxError::Unavailable { .. })));

    let rust = LanguageId::new("rust");
    let hr = polytrans_core::transpiler::HarnessSource { language: rust.clone(), ..h.clone() };
    assert!(matches!(sb.verify("", &rust, &hr, &lim), Err(SandboxError::Unavailable { .. })));
}

#[test]
fn working_directories_are_cleaned_up() {
    let root = tempfile::tempdir().unwrap();
    let cfg = SandboxConfig { scratch_root: Some(root.path().to_path_buf()), ..Default::default() };
    let sb = Sandbox::new(cfg);
    if std::env::var_os(polytrans_core::sandbox::SANDBOX_ROOT_ENV).is_some() {
        return;
    }
    let py = LanguageId::python();
    let h = emit_harness(&square_suite(), &py).unwrap();
    sb.verify(PY_OK, &py, &h, &ExecutionLimits::default()).unwrap();
    assert_eq!(std::fs::read_dir(root.path()).unwrap().count(), 0);
}

#[test]
fn network_namespace_when_required() {
    use polytrans_core::sandbox::NetworkIsolation;
    let sb = Sandbox::new(SandboxConfig { network: NetworkIsolation::Required, ..Default::default() });
    let py = LanguageId::python();
    let h = emit_harness(&square_suite(), &py).unwrap();
    let probe = "import socket\nassert [n for _, n in socket.if_nameindex()] == ['lo']\ndef square(x):\n    return x * x\n";
    match sb.verify(probe, &py, &h, &ExecutionLimits::default()) {
        Ok((v, _)) => assert_eq!(v.outcome, Outcome::Pass, "{}", v.diagnostics),
        // host forbids namespaces; the failure must surface as an error, not a verdict
        Err(e) => assert!(matches!(e, SandboxError::Internal(_)), "{e}"),
    }
}
