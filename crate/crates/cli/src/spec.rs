use std::fmt;
use std::path::PathBuf;

use clap::ValueEnum;
use itercur::adaptive::Backend;
use itercur::CurError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Deim,
    Qdeim,
    Maxvol,
    Volume,
    Lvg,
    CadpCx,
    CadpCur,
    DadpCx,
    DadpCur,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Deim => "deim",
            Method::Qdeim => "qdeim",
            Method::Maxvol => "maxvol",
            Method::Volume => "volume",
            Method::Lvg => "lvg",
            Method::CadpCx => "cadp-cx",
            Method::CadpCur => "cadp-cur",
            Method::DadpCx => "dadp-cx",
            Method::DadpCur => "dadp-cur",
        }
    }

    fn takes_rounds(self) -> bool {
        matches!(self, Method::Volume | Method::Lvg | Method::CadpCx | Method::CadpCur)
    }

    fn takes_decay(self) -> bool {
        matches!(self, Method::DadpCx | Method::DadpCur)
    }

    pub fn takes_backend(self) -> bool {
        !matches!(self, Method::Volume | Method::Lvg)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendArg {
    Dense,
    Krylov,
    Auto,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Dense => Backend::Dense,
            BackendArg::Krylov => Backend::Krylov,
            BackendArg::Auto => Backend::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Spectral,
    Frobenius,
    #[default]
    Both,
}

impl NormKind {
    pub fn spectral(self) -> bool {
        self != NormKind::Frobenius
    }

    pub fn frobenius(self) -> bool {
        self != NormKind::Spectral
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InputSpec {
    File {
        path: PathBuf,
    },
    Synth {
        rows: usize,
        cols: usize,
        density: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        terms: Option<usize>,
        #[serde(default)]
        seed: u64,
    },
}

/// Method parameters; unset fields take their defaults at resolution time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub input: InputSpec,
    pub method: Method,
    pub k: usize,
    #[serde(flatten)]
    pub params: MethodParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendArg>,
    #[serde(default)]
    pub norm: NormKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub normalize_rows: bool,
    #[serde(default = "default_svd_tol")]
    pub svd_tol: f64,
}

pub fn default_svd_tol() -> f64 {
    1e-10
}

/// Parameters after defaults are filled in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resolved {
    pub c: Option<usize>,
    pub t: Option<usize>,
    pub delta: Option<f64>,
    pub cap: Option<usize>,
    pub backend: Backend,
}

fn invalid(msg: String) -> CurError {
    CurError::InvalidArgument(msg)
}

impl RunSpec {
    /// Checks method/parameter compatibility and fills in defaults: ten
    /// rounds (`c = ⌈k/t⌉`), `δ = 0.8`, `ℓ = ⌈k/10⌉`. Volume sampling needs
    /// `t·c = k` and defaults to one column per round.
    pub fn resolve(&self) -> Result<Resolved, CurError> {
        let m = self.method;
        let p = &self.params;
        let k = self.k;
        if k == 0 {
            return Err(invalid("rank k must be at least 1".into()));
        }
        if !(self.svd_tol > 0.0 && self.svd_tol < 1.0) {
            return Err(invalid(format!("svd_tol {} outside (0, 1)", self.svd_tol)));
        }
        if !m.takes_rounds() && (p.t.is_some() || p.c.is_some()) {
            return Err(invalid(format!("{m} takes no t or c")));
        }
        if !m.takes_decay() && (p.delta.is_some() || p.cap.is_some()) {
            return Err(invalid(format!("{m} takes no delta or cap")));
        }
        if !m.takes_backend() && self.backend.is_some() {
            return Err(invalid(format!("{m} does not use an SVD backend")));
        }
        if p.t.is_some() && p.c.is_some() {
            return Err(invalid("give t or c, not both".into()));
        }
        if p.t == Some(0) || p.c == Some(0) || p.cap == Some(0) {
            return Err(invalid("t, c and cap must be at least 1".into()));
        }
        let mut r = Resolved {
            c: None,
            t: None,
            delta: None,
            cap: None,
            backend: self.backend.unwrap_or(BackendArg::Auto).into(),
        };
        if m == Method::Volume {
            let (t, c) = match (p.t, p.c) {
                (Some(t), None) => (t, k / t),
                (None, Some(c)) => (k / c, c),
                _ => (k, 1),
            };
            if t * c != k {
                return Err(invalid(format!("volume sampling needs t*c = k, got k = {k}")));
            }
            r.t = Some(t);
            r.c = Some(c);
        } else if m.takes_rounds() {
            let c = match (p.t, p.c) {
                (_, Some(c)) => c,
                (t, None) => k.div_ceil(t.unwrap_or(10)),
            };
            if c > k {
                return Err(invalid(format!("c = {c} exceeds k = {k}")));
            }
            r.c = Some(c);
            r.t = Some(k.div_ceil(c));
        }
        if m.takes_decay() {
            let delta = p.delta.unwrap_or(0.8);
            if !(0.0..=1.0).contains(&delta) {
                return Err(invalid(format!("delta {delta} outside [0, 1]")));
            }
            r.delta = Some(delta);
            r.cap = Some(p.cap.unwrap_or(k.div_ceil(10)));
        }
        Ok(r)
    }

    /// Compact parameter label, e.g. `c=3` or `delta=0.8,cap=3`.
    pub fn param_string(&self) -> String {
        let p = &self.params;
        let mut parts = Vec::new();
        if let Some(t) = p.t {
            parts.push(format!("t={t}"));
        }
        if let Some(c) = p.c {
            parts.push(format!("c={c}"));
        }
        if let Some(d) = p.delta {
            parts.push(format!("delta={d}"));
        }
        if let Some(l) = p.cap {
            parts.push(format!("cap={l}"));
        }
        parts.join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(method: Method, k: usize, params: MethodParams) -> RunSpec {
        RunSpec {
            input: InputSpec::Synth {
                rows: 10,
                cols: 10,
                density: 1.0,
                terms: None,
                seed: 0,
            },
            method,
            k,
            params,
            backend: None,
            norm: NormKind::Both,
            seed: 0,
            normalize_rows: false,
            svd_tol: 1e-10,
        }
    }

    #[test]
    fn defaults() {
        let r = spec(Method::CadpCx, 30, MethodParams::default()).resolve().unwrap();
        assert_eq!((r.c, r.t), (Some(3), Some(10)));
        let r = spec(Method::DadpCur, 50, MethodParams::default()).resolve().unwrap();
        assert_eq!((r.delta, r.cap), (Some(0.8), Some(5)));
        let r = spec(Method::Volume, 4, MethodParams::default()).resolve().unwrap();
        assert_eq!((r.t, r.c), (Some(4), Some(1)));
    }

    #[test]
    fn incompatible_parameters_rejected() {
        let delta = MethodParams {
            delta: Some(0.5),
            ..Default::default()
        };
        assert!(spec(Method::CadpCx, 4, delta.clone()).resolve().is_err());
        assert!(spec(Method::Deim, 4, delta).resolve().is_err());
        let both = MethodParams {
            t: Some(2),
            c: Some(2),
            ..Default::default()
        };
        assert!(spec(Method::CadpCur, 4, both).resolve().is_err());
        let uneven = MethodParams {
            c: Some(3),
            ..Default::default()
        };
        assert!(spec(Method::Volume, 4, uneven).resolve().is_err());
        let mut s = spec(Method::Lvg, 4, MethodParams::default());
        s.backend = Some(BackendArg::Dense);
        assert!(s.resolve().is_err());
    }

    #[test]
    fn spec_json_roundtrip() {
        let s = spec(
            Method::DadpCx,
            5,
            MethodParams {
                delta: Some(0.7),
                cap: Some(2),
                ..Default::default()
            },
        );
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<RunSpec>(&text).unwrap(), s);
        assert_eq!(s.param_string(), "delta=0.7,cap=2");
    }
}
