use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::TestSpecError;

/// Deepest list nesting accepted for literals and declared types.
pub const MAX_NESTING: usize = 4;

/// Absolute tolerance attached to float-returning suites unless the scaffold
/// annotates its own.
pub const DEFAULT_FLOAT_TOLERANCE: f64 = 1e-6;

/// Language-neutral type of an entrypoint parameter or return value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SemanticType {
    Int,
    Float,
    Bool,
    Str,
    ListOf(Box<SemanticType>),
}

impl SemanticType {
    pub fn list_of(inner: SemanticType) -> Self {
        SemanticType::ListOf(Box::new(inner))
    }

    /// Number of `ListOf` layers.
    pub fn depth(&self) -> usize {
        match self {
            SemanticType::ListOf(inner) => 1 + inner.depth(),
            _ => 0,
        }
    }

    /// Innermost scalar type.
    pub fn scalar(&self) -> &SemanticType {
        match self {
            SemanticType::ListOf(inner) => inner.scalar(),
            other => other,
        }
    }

    pub fn contains_float(&self) -> bool {
        matches!(self.scalar(), SemanticType::Float)
    }
}

impl fmt::Display for SemanticType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemanticType::Int => f.write_str("int"),
            SemanticType::Float => f.write_str("float"),
            SemanticType::Bool => f.write_str("bool"),
            SemanticType::Str => f.write_str("str"),
            SemanticType::ListOf(inner) => write!(f, "list[{inner}]"),
        }
    }
}

impl FromStr for SemanticType {
    type Err = TestSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "int" => return Ok(SemanticType::Int),
            "float" => return Ok(SemanticType::Float),
            "bool" => return Ok(SemanticType::Bool),
            "str" => return Ok(SemanticType::Str),
            _ => {}
        }
        let inner = s
            .strip_prefix("list[")
            .or_else(|| s.strip_prefix("List["))
            .and_then(|rest| rest.strip_suffix(']'))
            .ok_or_else(|| TestSpecError::InvalidType(s.to_string()))?;
        let inner: SemanticType = inner.parse()?;
        let ty = SemanticType::list_of(inner);
        if ty.depth() > MAX_NESTING {
            return Err(TestSpecError::InvalidType(format!(
                "{s}: nesting deeper than {MAX_NESTING}"
            )));
        }
        Ok(ty)
    }
}

impl Serialize for SemanticType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SemanticType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A test literal. Serialized as the plain JSON value (integers without a
/// fractional part, floats always with one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LiteralValue {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<LiteralValue>),
}

/// Shape of a literal with empty lists left open.
#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Null,
    Scalar(SemanticType),
    List(Option<Box<Shape>>),
}

impl Shape {
    fn unify(&self, other: &Shape) -> Option<Shape> {
        match (self, other) {
            (Shape::Null, Shape::Null) => Some(Shape::Null),
            (Shape::Scalar(a), Shape::Scalar(b)) if a == b => Some(self.clone()),
            (Shape::List(None), Shape::List(x)) | (Shape::List(x), Shape::List(None)) => {
                Some(Shape::List(x.clone()))
            }
            (Shape::List(Some(a)), Shape::List(Some(b))) => {
                a.unify(b).map(|s| Shape::List(Some(Box::new(s))))
            }
            _ => None,
        }
    }
}

impl LiteralValue {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LiteralValue::Null => "null",
            LiteralValue::Bool(_) => "boolean",
            LiteralValue::Int(_) => "integer",
            LiteralValue::Float(_) => "float",
            LiteralValue::Str(_) => "string",
            LiteralValue::List(_) => "list",
        }
    }

    /// List nesting depth; scalars are 0.
    pub fn depth(&self) -> usize {
        match self {
            LiteralValue::List(items) => 1 + items.iter().map(|v| v.depth()).max().unwrap_or(0),
            _ => 0,
        }
    }

    fn shape(&self) -> Option<Shape> {
        Some(match self {
            LiteralValue::Null => Shape::Null,
            LiteralValue::Bool(_) => Shape::Scalar(SemanticType::Bool),
            LiteralValue::Int(_) => Shape::Scalar(SemanticType::Int),
            LiteralValue::Float(_) => Shape::Scalar(SemanticType::Float),
            LiteralValue::Str(_) => Shape::Scalar(SemanticType::Str),
            LiteralValue::List(items) => {
                let mut acc: Option<Shape> = None;
                for item in items {
                    let s = item.shape()?;
                    acc = Some(match acc {
                        None => s,
                        Some(prev) => prev.unify(&s)?,
                    });
                }
                Shape::List(acc.map(Box::new))
            }
        })
    }

    /// True when every list (at every level) holds elements of one kind.
    pub fn is_homogeneous(&self) -> bool {
        self.shape().is_some()
    }

    /// True when no float anywhere inside is NaN or infinite.
    pub fn is_finite(&self) -> bool {
        match self {
            LiteralValue::Float(x) => x.is_finite(),
            LiteralValue::List(items) => items.iter().all(|v| v.is_finite()),
            _ => true,
        }
    }

    /// Checks the literal against a declared type without coercion.
    pub fn conforms_to(&self, ty: &SemanticType) -> bool {
        match (self, ty) {
            (LiteralValue::Int(_), SemanticType::Int)
            | (LiteralValue::Float(_), SemanticType::Float)
            | (LiteralValue::Bool(_), SemanticType::Bool)
            | (LiteralValue::Str(_), SemanticType::Str) => true,
            (LiteralValue::List(items), SemanticType::ListOf(inner)) => {
                items.iter().all(|v| v.conforms_to(inner))
            }
            _ => false,
        }
    }

    /// Converts the literal into the canonical form for `ty`, widening
    /// integers to floats where a float is declared.
    pub fn conform(self, ty: &SemanticType) -> Result<LiteralValue, LiteralValue> {
        match (self, ty) {
            (LiteralValue::Int(i), SemanticType::Float) => Ok(LiteralValue::Float(i as f64)),
            (LiteralValue::List(items), SemanticType::ListOf(inner)) => {
                let mut out = Vec::with_capacity(items.len());
                let mut items = items.into_iter();
                while let Some(item) = items.next() {
                    match item.conform(inner) {
                        Ok(v) => out.push(v),
                        Err(bad) => {
                            out.push(bad);
                            out.extend(items);
                            return Err(LiteralValue::List(out));
                        }
                    }
                }
                Ok(LiteralValue::List(out))
            }
            (v, ty) if v.conforms_to(ty) => Ok(v),
            (v, _) => Err(v),
        }
    }
}

/// Name and declared types of the function every harness invokes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntrypointSignature {
    pub function_name: String,
    pub param_types: Vec<SemanticType>,
    pub return_type: SemanticType,
}

impl EntrypointSignature {
    pub fn new(
        function_name: impl Into<String>,
        param_types: Vec<SemanticType>,
        return_type: SemanticType,
    ) -> Self {
        Self {
            function_name: function_name.into(),
            param_types,
            return_type,
        }
    }

    pub fn arity(&self) -> usize {
        self.param_types.len()
    }

    /// Parameter names used when rendering declarations; the dataset format
    /// carries types only.
    pub fn param_names(&self) -> Vec<String> {
        (0..self.arity()).map(|i| format!("arg{i}")).collect()
    }

    pub fn has_valid_name(&self) -> bool {
        is_portable_identifier(&self.function_name)
    }
}

/// Letters, digits and underscore, no leading digit, and not a keyword in
/// any of the reference languages.
pub fn is_portable_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    if !(first.is_ascii_alphabetic() || first == '_') {
        return false;
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return false;
    }
    !RESERVED_WORDS.contains(&name)
}

const RESERVED_WORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if",
    "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try",
    "while", "with", "yield", "abstract", "boolean", "byte", "case", "catch", "char", "const",
    "default", "do", "double", "enum", "extends", "final", "float", "goto", "implements",
    "instanceof", "int", "interface", "long", "native", "new", "package", "private",
    "protected", "public", "short", "static", "super", "switch", "synchronized", "this",
    "throw", "throws", "transient", "void", "volatile", "auto", "bool", "delete", "explicit",
    "extern", "friend", "inline", "mutable", "namespace", "operator", "register", "signed",
    "sizeof", "struct", "template", "typedef", "typename", "union", "unsigned", "using",
    "virtual", "main",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub args: Vec<LiteralValue>,
    pub expected: LiteralValue,
}

/// Ordered, language-neutral test oracle for one entrypoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSuite {
    pub suite_id: String,
    pub entrypoint: EntrypointSignature,
    pub cases: Vec<TestCase>,
    /// Absolute tolerance for float comparisons.
    #[serde(
        default = "default_tolerance",
        skip_serializing_if = "is_default_tolerance"
    )]
    pub float_tolerance: f64,
}

fn default_tolerance() -> f64 {
    DEFAULT_FLOAT_TOLERANCE
}

fn is_default_tolerance(t: &f64) -> bool {
    *t == DEFAULT_FLOAT_TOLERANCE
}

impl TestSuite {
    pub fn new(
        suite_id: impl Into<String>,
        entrypoint: EntrypointSignature,
        cases: Vec<TestCase>,
    ) -> Self {
        Self {
            suite_id: suite_id.into(),
            entrypoint,
            cases,
            float_tolerance: DEFAULT_FLOAT_TOLERANCE,
        }
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }
}
