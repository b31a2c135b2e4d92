//! Rule-based conversion of a [`TestSuite`] into target-language harnesses.
//!
//! Each target has one fixed template under `templates/v1/`. A harness runs
//! every case in order and on the first mismatch prints `FAIL case=<k>` to
//! stderr and exits 1. Crashes and timeouts are left to the sandbox.
//!
//! Candidate code is spliced in at the `@@CANDIDATE@@` marker by
//! [`assemble`]. The entrypoint conventions per target are:
//!
//! * python: a module-level function named like the entrypoint.
//! * cpp: a free function at global scope, invoked as `::name(...)`.
//! * java: a (non-public) class `Solution` with a method named like the
//!   entrypoint, invoked as `new Solution().name(...)`.

use std::fmt::Write as _;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::lang::LanguageId;
use crate::testspec::{format_float, python_literal, validate_suite, EntrypointSignature, LiteralValue, SemanticType, TestSuite};

pub const TEMPLATE_VERSION: &str = "v1";

const PYTHON_TEMPLATE: &str = include_str!("../templates/v1/python.tmpl");
const CPP_TEMPLATE: &str = include_str!("../templates/v1/cpp.tmpl");
const JAVA_TEMPLATE: &str = include_str!("../templates/v1/java.tmpl");

const CANDIDATE_MARKER: &str = "@@CANDIDATE@@";
const IMPORTS_MARKER: &str = "@@IMPORTS@@";

/// Name of the Java class that must hold the entrypoint.
pub const JAVA_SOLUTION_CLASS: &str = "Solution";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranspileError {
    #[error("{what} has no mapping in `{language}`")]
    UnmappableType { language: LanguageId, what: String },
    #[error("cannot emit harness: {0}")]
    Emit(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Python,
    Cpp,
    Java,
}

impl Target {
    fn of(language: &LanguageId) -> Result<Self, TranspileError> {
        match language.as_str() {
            "python" => Ok(Target::Python),
            "cpp" => Ok(Target::Cpp),
            "java" => Ok(Target::Java),
            _ => Err(TranspileError::UnmappableType {
                language: language.clone(),
                what: "every type".into(),
            }),
        }
    }
}

/// Target-language denotation of a [`SemanticType`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeRendering {
    /// Usable in parameter and return position.
    pub text: String,
    /// Form usable as a generic argument (differs from `text` only for Java
    /// primitives).
    pub boxed: String,
}

pub fn map_type(ty: &SemanticType, target: &LanguageId) -> Result<TypeRendering, TranspileError> {
    Ok(match Target::of(target)? {
        Target::Python => {
            let text = python_type(ty);
            TypeRendering { boxed: text.clone(), text }
        }
        Target::Cpp => {
            let text = cpp_type(ty);
            TypeRendering { boxed: text.clone(), text }
        }
        Target::Java => TypeRendering {
            text: java_type(ty, false),
            boxed: java_type(ty, true),
        },
    })
}

fn python_type(ty: &SemanticType) -> String {
    match ty {
        SemanticType::Int => "int".into(),
        SemanticType::Float => "float".into(),
        SemanticType::Bool => "bool".into(),
        SemanticType::Str => "str".into(),
        SemanticType::ListOf(inner) => format!("list[{}]", python_type(inner)),
    }
}

fn cpp_type(ty: &SemanticType) -> String {
    match ty {
        SemanticType::Int => "long long".into(),
        SemanticType::Float => "double".into(),
        SemanticType::Bool => "bool".into(),
        SemanticType::Str => "std::string".into(),
        SemanticType::ListOf(inner) => format!("std::vector<{}>", cpp_type(inner)),
    }
}

fn java_type(ty: &SemanticType, boxed: bool) -> String {
    match (ty, boxed) {
        (SemanticType::Int, false) => "long".into(),
        (SemanticType::Int, true) => "Long".into(),
        (SemanticType::Float, false) => "double".into(),
        (SemanticType::Float, true) => "Double".into(),
        (SemanticType::Bool, false) => "boolean".into(),
        (SemanticType::Bool, true) => "Boolean".into(),
        (SemanticType::Str, _) => "String".into(),
        (SemanticType::ListOf(inner), _) => format!("List<{}>", java_type(inner, true)),
    }
}

/// Renders a literal as a standalone expression of type `ty` in `target`.
/// The type is needed to give empty lists an element type.
pub fn emit_literal(
    value: &LiteralValue,
    ty: &SemanticType,
    target: &LanguageId,
) -> Result<String, TranspileError> {
    let t = Target::of(target)?;
    if !value.conforms_to(ty) {
        return Err(match value {
            LiteralValue::Null => TranspileError::UnmappableType {
                language: target.clone(),
                what: "null literal".into(),
            },
            v => TranspileError::Emit(format!("{} literal does not fit type {ty}", v.kind_name())),
        });
    }
    Ok(match t {
        Target::Python => python_literal(value),
        Target::Cpp => cpp_literal(value, ty),
        Target::Java => java_literal(value, ty),
    })
}

fn cpp_literal(value: &LiteralValue, ty: &SemanticType) -> String {
    match (value, ty) {
        (LiteralValue::Int(i), _) if *i == i64::MIN => "(-9223372036854775807LL - 1)".into(),
        (LiteralValue::Int(i), _) => format!("{i}LL"),
        (LiteralValue::Float(x), _) => format_float(*x),
        (LiteralValue::Bool(b), _) => b.to_string(),
        (LiteralValue::Str(s), _) => cpp_string(s),
        (LiteralValue::List(items), SemanticType::ListOf(inner)) => {
            let parts: Vec<String> = items.iter().map(|v| cpp_literal(v, inner)).collect();
            format!("{}{{{}}}", cpp_type(ty), parts.join(", "))
        }
        _ => unreachable!("conformance checked by caller"),
    }
}

fn cpp_string(s: &str) -> String {
    let mut out = String::from("std::string(\"");
    for b in s.bytes() {
        match b {
            b'"' => out.push_str("\\\""),
            b'\\' => out.push_str("\\\\"),
            b'\n' => out.push_str("\\n"),
            b'\r' => out.push_str("\\r"),
            b'\t' => out.push_str("\\t"),
            b'?' => out.push_str("\\?"),
            0x20..=0x7e => out.push(b as char),
            _ => {
                let _ = write!(out, "\\{b:03o}");
            }
        }
    }
    out.push('"');
    if s.as_bytes().contains(&0) {
        let _ = write!(out, ", {}", s.len());
    }
    out.push(')');
    out
}

fn java_literal(value: &LiteralValue, ty: &SemanticType) -> String {
    match (value, ty) {
        (LiteralValue::Int(i), _) => format!("{i}L"),
        (LiteralValue::Float(x), _) => format_float(*x),
        (LiteralValue::Bool(b), _) => b.to_string(),
        (LiteralValue::Str(s), _) => java_string(s),
        (LiteralValue::List(items), SemanticType::ListOf(inner)) => {
            let elem = java_type(inner, true);
            if items.is_empty() {
                format!("new ArrayList<{elem}>()")
            } else {
                let parts: Vec<String> = items.iter().map(|v| java_literal(v, inner)).collect();
                format!("new ArrayList<{elem}>(Arrays.<{elem}>asList({}))", parts.join(", "))
            }
        }
        _ => unreachable!("conformance checked by caller"),
    }
}

fn java_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            // Unicode escapes are decoded before lexing in Java, so ASCII
            // controls must use octal escapes instead.
            c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                let _ = write!(out, "\\{:03o}", c as u32);
            }
            c if c.is_ascii() => out.push(c),
            c => {
                let mut buf = [0u16; 2];
                for unit in c.encode_utf16(&mut buf) {
                    let _ = write!(out, "\\u{unit:04x}");
                }
            }
        }
    }
    out.push('"');
    out
}

/// A compilable test harness for one suite in one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarnessSource {
    pub language: LanguageId,
    pub source_text: String,
    pub entrypoint: EntrypointSignature,
    pub suite_id: String,
}

pub fn emit_harness(suite: &TestSuite, target: &LanguageId) -> Result<HarnessSource, TranspileError> {
    let t = Target::of(target)?;
    let report = validate_suite(suite);
    if let Some(v) = report.violations.first() {
        return Err(TranspileError::Emit(format!("invalid suite `{}`: {v}", suite.suite_id)));
    }
    let sig = &suite.entrypoint;
    let mut cases = String::new();
    for (k, case) in suite.cases.iter().enumerate() {
        let args = case
            .args
            .iter()
            .zip(&sig.param_types)
            .map(|(v, ty)| emit_literal(v, ty, target))
            .collect::<Result<Vec<_>, _>>()?;
        let expected = emit_literal(&case.expected, &sig.return_type, target)?;
        match t {
            Target::Python => {
                let _ = writeln!(
                    cases,
                    "    _bt_check({k}, {}({}), {expected})",
                    sig.function_name,
                    args.join(", ")
                );
            }
            Target::Cpp => {
                cases.push_str("    {\n");
                let mut names = Vec::new();
                for (i, (a, ty)) in args.iter().zip(&sig.param_types).enumerate() {
                    let _ = writeln!(cases, "        {} a{i} = {a};", cpp_type(ty));
                    names.push(format!("a{i}"));
                }
                let ret = cpp_type(&sig.return_type);
                let _ = writeln!(cases, "        {ret} bt_actual = ::{}({});", sig.function_name, names.join(", "));
                let _ = writeln!(cases, "        {ret} bt_expected = {expected};");
                let _ = writeln!(cases, "        if (!bt_eq(bt_actual, bt_expected)) bt_fail({k});");
                cases.push_str("    }\n");
            }
            Target::Java => {
                cases.push_str("        {\n");
                let mut names = Vec::new();
                for (i, (a, ty)) in args.iter().zip(&sig.param_types).enumerate() {
                    let _ = writeln!(cases, "            {} a{i} = {a};", java_type(ty, false));
                    names.push(format!("a{i}"));
                }
                let ret = java_type(&sig.return_type, false);
                let _ = writeln!(
                    cases,
                    "            {ret} btActual = new {JAVA_SOLUTION_CLASS}().{}({});",
                    sig.function_name,
                    names.join(", ")
                );
                let _ = writeln!(cases, "            {ret} btExpected = {expected};");
                let _ = writeln!(cases, "            btCheck({k}, btActual, btExpected);");
                cases.push_str("        }\n");
            }
        }
    }
    let template = match t {
        Target::Python => PYTHON_TEMPLATE,
        Target::Cpp => CPP_TEMPLATE,
        Target::Java => JAVA_TEMPLATE,
    };
    let source_text = template
        .replace("{{SUITE_ID}}", &comment_safe(&suite.suite_id))
        .replace("{{TOLERANCE}}", &format_float(suite.float_tolerance))
        .replace("{{CASES}}\n", &cases);
    Ok(HarnessSource {
        language: target.clone(),
        source_text,
        entrypoint: sig.clone(),
        suite_id: suite.suite_id.clone(),
    })
}

fn comment_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect::<String>()
        .replace("*/", "* /")
}

/// Declaration of the entrypoint in `target`, as shown to the policy in the
/// prompt. Candidates must implement exactly this declaration.
pub fn render_declaration(sig: &EntrypointSignature, target: &LanguageId) -> Result<String, TranspileError> {
    let names = sig.param_names();
    Ok(match Target::of(target)? {
        Target::Python => {
            let params: Vec<String> = names
                .iter()
                .zip(&sig.param_types)
                .map(|(n, t)| format!("{n}: {}", python_type(t)))
                .collect();
            format!("def {}({}) -> {}:\n", sig.function_name, params.join(", "), python_type(&sig.return_type))
        }
        Target::Cpp => {
            let params: Vec<String> = names
                .iter()
                .zip(&sig.param_types)
                .map(|(n, t)| format!("{} {n}", cpp_type(t)))
                .collect();
            format!("{} {}({}) {{\n", cpp_type(&sig.return_type), sig.function_name, params.join(", "))
        }
        Target::Java => {
            let params: Vec<String> = names
                .iter()
                .zip(&sig.param_types)
                .map(|(n, t)| format!("{} {n}", java_type(t, false)))
                .collect();
            format!(
                "class {JAVA_SOLUTION_CLASS} {{\n    public {} {}({}) {{\n",
                java_type(&sig.return_type, false),
                sig.function_name,
                params.join(", ")
            )
        }
    })
}

static JAVA_IMPORT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*(import\s+[\w.]+(\.\*)?\s*;|import\s+static\s+[\w.]+(\.\*)?\s*;)\s*$").unwrap());
static JAVA_PACKAGE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*package\s+[\w.]+\s*;\s*$").unwrap());
static JAVA_PUBLIC_TOP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^public\s+((?:final\s+|abstract\s+)*(?:class|interface|enum|record)\b)").unwrap());

/// Splices a candidate into its harness, producing the single source file
/// that gets compiled and run.
pub fn assemble(harness: &HarnessSource, candidate: &str) -> String {
    let mut candidate = candidate.to_string();
    if !candidate.ends_with('\n') {
        candidate.push('\n');
    }
    let mut imports = String::new();
    if harness.language.as_str() == "java" {
        let mut body = String::new();
        for line in candidate.lines() {
            if JAVA_IMPORT.is_match(line) {
                imports.push_str(line.trim());
                imports.push('\n');
            } else if JAVA_PACKAGE.is_match(line) {
                continue;
            } else {
                body.push_str(&JAVA_PUBLIC_TOP.replace(line, "$1"));
                body.push('\n');
            }
        }
        candidate = body;
    }
    let mut out = String::with_capacity(harness.source_text.len() + candidate.len());
    for line in harness.source_text.split_inclusive('\n') {
        if line.contains(CANDIDATE_MARKER) {
            out.push_str(&candidate);
        } else if line.contains(IMPORTS_MARKER) {
            out.push_str(&imports);
        } else {
            out.push_str(line);
        }
    }
    out
}
