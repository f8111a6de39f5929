use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

type UnaryFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-registered univariate function together with its derivative.
///
/// If the derivative of a derivative was never registered it falls back to a
/// central difference of the registered derivative closure.
pub struct FunctionDef {
    name: String,
    value: UnaryFn,
    derivative: OnceLock<Arc<FunctionDef>>,
}

impl FunctionDef {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        FunctionDef {
            name: name.into(),
            value: Arc::new(value),
            derivative: OnceLock::new(),
        }
    }

    pub fn with_derivative(mut self, derivative: FunctionDef) -> Self {
        self.derivative = OnceLock::from(Arc::new(derivative));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.value)(s)
    }

    pub fn derivative(&self) -> Arc<FunctionDef> {
        self.derivative
            .get_or_init(|| {
                let f = self.value.clone();
                Arc::new(FunctionDef::new(format!("{}'", self.name), move |s| {
                    let h = 1e-5 * (1.0 + s.abs());
                    (f(s + h) - f(s - h)) / (2.0 * h)
                }))
            })
            .clone()
    }
}

impl fmt::Debug for FunctionDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionDef").field("name", &self.name).finish()
    }
}

/// Named univariate functions available to the parser.
#[derive(Clone, Debug)]
pub struct FunctionRegistry {
    functions: BTreeMap<String, Arc<FunctionDef>>,
}

/// Names reserved for built-in nodes.
pub const BUILTINS: [&str; 2] = ["sqrt", "exp"];

impl FunctionRegistry {
    pub fn empty() -> Self {
        FunctionRegistry {
            functions: BTreeMap::new(),
        }
    }

    /// `h_one(s) = 1` and `h_id(s) = s`, plus `h` as an alias of `h_one`.
    pub fn with_defaults() -> Self {
        let mut reg = Self::empty();
        reg.register_with(h_one());
        reg.register_with(h_id());
        let alias = FunctionDef::new("h", |_| 1.0)
            .with_derivative(FunctionDef::new("h'", |_| 0.0).with_derivative(zero_fn("h''")));
        reg.register_with(alias);
        reg
    }

    /// Registers `name` with value and derivative closures.
    pub fn register(
        &mut self,
        name: &str,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Arc<FunctionDef> {
        let def = FunctionDef::new(name, value)
            .with_derivative(FunctionDef::new(format!("{name}'"), derivative));
        self.register_with(def)
    }

    pub fn register_with(&mut self, def: FunctionDef) -> Arc<FunctionDef> {
        assert!(
            !BUILTINS.contains(&def.name()),
            "`{}` is a built-in function",
            def.name()
        );
        let def = Arc::new(def);
        self.functions.insert(def.name().to_string(), def.clone());
        def
    }

    pub fn get(&self, name: &str) -> Option<&Arc<FunctionDef>> {
        self.functions.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.functions.keys().map(String::as_str)
    }
}

impl Default for FunctionRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

fn zero_fn(name: &str) -> FunctionDef {
    FunctionDef::new(name, |_| 0.0)
}

pub fn h_one() -> FunctionDef {
    FunctionDef::new("h_one", |_| 1.0).with_derivative(
        FunctionDef::new("h_one'", |_| 0.0).with_derivative(zero_fn("h_one''")),
    )
}

pub fn h_id() -> FunctionDef {
    FunctionDef::new("h_id", |s| s).with_derivative(
        FunctionDef::new("h_id'", |_| 1.0).with_derivative(zero_fn("h_id''")),
    )
}
