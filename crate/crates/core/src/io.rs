//! Spec files, builtin names and deterministic text output.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{DirichletMatrix, HarmonicStructure};
use crate::structure::{generate_spec, FractalKind, FractalSpec};

/// Fixed 17-significant-digit formatting used by every numeric output.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    format!("{x:.16e}")
}

/// On-disk form of a structure with an optional harmonic structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub name: String,
    pub letters: usize,
    pub boundary: usize,
    pub fixed_letters: Vec<usize>,
    pub glue: Vec<[usize; 4]>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
}

/// A validated spec with the optional `(D, r)` it was loaded with.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSpec {
    pub spec: FractalSpec,
    pub d: Option<DirichletMatrix>,
    pub r: Option<Vec<f64>>,
}

impl LoadedSpec {
    /// Complete-graph `D` when absent; missing `r` is solved for.
    pub fn harmonic_structure(&self) -> Result<HarmonicStructure> {
        let d = self
            .d
            .clone()
            .unwrap_or_else(|| DirichletMatrix::complete_graph(self.spec.boundary));
        HarmonicStructure::new(&self.spec, d, self.r.clone())
    }

    pub fn to_file(&self) -> SpecFile {
        SpecFile {
            name: self.spec.name.clone(),
            letters: self.spec.letters,
            boundary: self.spec.boundary,
            fixed_letters: self.spec.fixed_letters.clone(),
            glue: self.spec.glue.iter().map(|&g| g.into()).collect(),
            d: self.d.as_ref().map(|d| d.rows()),
            r: self.r.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("spec serializes");
        s.push('\n');
        s
    }
}

pub fn parse_spec(text: &str, context: &str) -> Result<LoadedSpec> {
    let file: SpecFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        context: format!("{context}:{}:{}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let spec = FractalSpec {
        name: file.name,
        letters: file.letters,
        boundary: file.boundary,
        fixed_letters: file.fixed_letters,
        glue: file.glue.into_iter().map(Into::into).collect(),
    };
    spec.validate()?;
    let d = file.d.map(|rows| DirichletMatrix::from_rows(&rows)).transpose()?;
    if let Some(r) = &file.r {
        if r.len() != spec.letters {
            return Err(Error::InvalidSpec(format!(
                "r has {} entries, spec has {} letters",
                r.len(),
                spec.letters
            )));
        }
    }
    Ok(LoadedSpec { spec, d, r: file.r })
}

pub fn load_spec(path: &Path) -> Result<LoadedSpec> {
    let text = fs::read_to_string(path)?;
    parse_spec(&text, &path.display().to_string())
}

pub fn save_spec(path: &Path, spec: &LoadedSpec) -> Result<()> {
    fs::write(path, spec.to_json())?;
    Ok(())
}

/// `gasket:L`, `hexagasket`, `nonagasket` or `polygasket:N`.
pub fn builtin_spec(name: &str) -> Result<FractalSpec> {
    let bad = || Error::InvalidArgument(format!("unknown builtin spec {name:?}"));
    let (kind, param) = match name.split_once(':') {
        Some(("gasket", p)) => (FractalKind::Gasket, p.parse().map_err(|_| bad())?),
        Some(("polygasket", p)) => (FractalKind::Polygasket, p.parse().map_err(|_| bad())?),
        None if name == "hexagasket" => (FractalKind::Polygasket, 6),
        None if name == "nonagasket" => (FractalKind::Polygasket, 9),
        _ => return Err(bad()),
    };
    generate_spec(kind, param)
}

/// A builtin name, or else a path to a spec file.
pub fn resolve_spec(source: &str) -> Result<LoadedSpec> {
    match builtin_spec(source) {
        Ok(spec) => Ok(LoadedSpec { spec, d: None, r: None }),
        Err(e) => {
            let path = Path::new(source);
            if path.exists() {
                load_spec(path)
            } else {
                Err(e)
            }
        }
    }
}

pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}
