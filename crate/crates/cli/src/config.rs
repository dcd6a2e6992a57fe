//! Strict key = value configuration with `[sphere]` sections. Unknown keys
//! are fatal; all numeric fields are validated; the fully-resolved
//! configuration can be echoed back for provenance.

use nalgebra::Vector3;
use num_complex::Complex64;
use subwave_core::geometry::{ResonatorSystem, SphereSpec};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unknown key `{key}` at line {line}")]
    UnknownKey { line: usize, key: String },
    #[error("invalid value for {field}: {message}")]
    Semantic { field: String, message: String },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Linear,
    LeadingOrder,
    KerrPencil,
}

impl std::fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelChoice::Linear => "linear",
            ModelChoice::LeadingOrder => "leading_order",
            ModelChoice::KerrPencil => "kerr_pencil",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeScale {
    Linear,
    Log,
}

impl std::fmt::Display for AmplitudeScale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}",
            match self {
                AmplitudeScale::Linear => "linear",
                AmplitudeScale::Log => "log",
            }
        )
    }
}

#[derive(Debug, Clone)]
pub struct SphereConfig {
    pub center: Vector3<f64>,
    pub radius: f64,
    pub cr: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: ModelChoice,
    pub c0: f64,
    pub cr: f64,
    pub delta: f64,
    pub beta: Complex64,
    pub refinement: u32,
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    pub amplitude_count: usize,
    pub amplitude_scale: AmplitudeScale,
    pub starts: usize,
    pub seed: u64,
    pub emit_csv: bool,
    pub emit_svg: bool,
    pub separation_threshold: f64,
    pub spheres: Vec<SphereConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelChoice::LeadingOrder,
            c0: 1.0,
            cr: 1.0,
            delta: 1e-3,
            beta: Complex64::new(0.0, 0.0),
            refinement: 4,
            amplitude_min: 0.0,
            amplitude_max: 3.0,
            amplitude_count: 200,
            amplitude_scale: AmplitudeScale::Linear,
            starts: 64,
            seed: 7,
            emit_csv: true,
            emit_svg: true,
            separation_threshold: 0.1,
            spheres: Vec::new(),
        }
    }
}

struct PendingSphere {
    line: usize,
    center: Option<Vector3<f64>>,
    radius: Option<f64>,
    cr: Option<f64>,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut pending: Option<PendingSphere> = None;
    let mut seen: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();

    let finish_sphere = |pending: &mut Option<PendingSphere>,
                             spheres: &mut Vec<SphereConfig>|
     -> Result<(), ConfigError> {
        if let Some(s) = pending.take() {
            let index = spheres.len();
            let center = s.center.ok_or_else(|| ConfigError::Semantic {
                field: format!("sphere[{index}].center"),
                message: format!("missing center for [sphere] opened at line {}", s.line),
            })?;
            let radius = s.radius.ok_or_else(|| ConfigError::Semantic {
                field: format!("sphere[{index}].radius"),
                message: format!("missing radius for [sphere] opened at line {}", s.line),
            })?;
            spheres.push(SphereConfig {
                center,
                radius,
                cr: s.cr,
            });
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let col = line.find('[').unwrap_or(0) + 1;
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                col,
                message: "unterminated section header".into(),
            })?;
            if name.trim() != "sphere" {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    col,
                    message: format!("unknown section `[{}]`", name.trim()),
                });
            }
            finish_sphere(&mut pending, &mut cfg.spheres)?;
            pending = Some(PendingSphere {
                line: line_no,
                center: None,
                radius: None,
                cr: None,
            });
            continue;
        }
        let eq = trimmed.find('=').ok_or_else(|| ConfigError::Syntax {
            line: line_no,
            col: line.len().max(1),
            message: "expected `key = value`".into(),
        })?;
        let key = trimmed[..eq].trim();
        let value = trimmed[eq + 1..].trim();
        let value_col = line.find('=').map(|p| p + 2).unwrap_or(1);
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: line_no,
                col: 1,
                message: "empty key".into(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Syntax {
                line: line_no,
                col: value_col,
                message: format!("empty value for `{key}`"),
            });
        }

        if let Some(sphere) = pending.as_mut() {
            match key {
                "center" => sphere.center = Some(parse_vector3(value, line_no, value_col)?),
                "radius" => sphere.radius = Some(parse_number(value, line_no, value_col, key)?),
                "cr" => sphere.cr = Some(parse_number(value, line_no, value_col, key)?),
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line: line_no,
                        key: key.to_string(),
                    })
                }
            }
            continue;
        }

        if !seen.insert(key.to_string()) {
            return Err(ConfigError::Semantic {
                field: key.to_string(),
                message: format!("duplicate key at line {line_no}"),
            });
        }
        match key {
            "model" => {
                cfg.model = match value {
                    "linear" => ModelChoice::Linear,
                    "leading_order" => ModelChoice::LeadingOrder,
                    "kerr_pencil" => ModelChoice::KerrPencil,
                    other => {
                        return Err(ConfigError::Semantic {
                            field: "model".into(),
                            message: format!(
                                "`{other}` is not one of linear, leading_order, kerr_pencil"
                            ),
                        })
                    }
                }
            }
            "c0" => cfg.c0 = parse_number(value, line_no, value_col, key)?,
            "cr" => cfg.cr = parse_number(value, line_no, value_col, key)?,
            "delta" => cfg.delta = parse_number(value, line_no, value_col, key)?,
            "beta" => cfg.beta = parse_complex(value, line_no, value_col)?,
            "refinement" => cfg.refinement = parse_integer(value, line_no, value_col, key)? as u32,
            "amplitude_min" => cfg.amplitude_min = parse_number(value, line_no, value_col, key)?,
            "amplitude_max" => cfg.amplitude_max = parse_number(value, line_no, value_col, key)?,
            "amplitude_count" => {
                cfg.amplitude_count = parse_integer(value, line_no, value_col, key)? as usize
            }
            "amplitude_scale" => {
                cfg.amplitude_scale = match value {
                    "linear" => AmplitudeScale::Linear,
                    "log" => AmplitudeScale::Log,
                    other => {
                        return Err(ConfigError::Semantic {
                            field: "amplitude_scale".into(),
                            message: format!("`{other}` is not one of linear, log"),
                        })
                    }
                }
            }
            "starts" => cfg.starts = parse_integer(value, line_no, value_col, key)? as usize,
            "seed" => cfg.seed = parse_integer(value, line_no, value_col, key)?,
            "emit_csv" => cfg.emit_csv = parse_bool(value, line_no, value_col, key)?,
            "emit_svg" => cfg.emit_svg = parse_bool(value, line_no, value_col, key)?,
            "separation_threshold" => {
                cfg.separation_threshold = parse_number(value, line_no, value_col, key)?
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: line_no,
                    key: key.to_string(),
                })
            }
        }
    }
    finish_sphere(&mut pending, &mut cfg.spheres)?;
    validate(&cfg)?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

fn parse_number(value: &str, line: usize, col: usize, key: &str) -> Result<f64, ConfigError> {
    value.parse::<f64>().map_err(|_| ConfigError::Syntax {
        line,
        col,
        message: format!("`{value}` is not a number (key `{key}`)"),
    })
}

fn parse_integer(value: &str, line: usize, col: usize, key: &str) -> Result<u64, ConfigError> {
    value.parse::<u64>().map_err(|_| ConfigError::Syntax {
        line,
        col,
        message: format!("`{value}` is not a nonnegative integer (key `{key}`)"),
    })
}

fn parse_bool(value: &str, line: usize, col: usize, key: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::Syntax {
            line,
            col,
            message: format!("`{value}` is not true/false (key `{key}`)"),
        }),
    }
}

fn parse_complex(value: &str, line: usize, col: usize) -> Result<Complex64, ConfigError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(ConfigError::Syntax {
            line,
            col,
            message: format!("`{value}` is not a complex `re,im` pair"),
        });
    }
    let re = parse_number(parts[0], line, col, "beta")?;
    let im = parse_number(parts[1], line, col, "beta")?;
    Ok(Complex64::new(re, im))
}

fn parse_vector3(value: &str, line: usize, col: usize) -> Result<Vector3<f64>, ConfigError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(ConfigError::Syntax {
            line,
            col,
            message: format!("`{value}` is not an `x,y,z` triple"),
        });
    }
    Ok(Vector3::new(
        parse_number(parts[0], line, col, "center")?,
        parse_number(parts[1], line, col, "center")?,
        parse_number(parts[2], line, col, "center")?,
    ))
}

fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    let fail = |field: &str, message: String| {
        Err(ConfigError::Semantic {
            field: field.to_string(),
            message,
        })
    };
    if cfg.spheres.is_empty() {
        return fail("sphere", "at least one [sphere] section is required".into());
    }
    for (i, s) in cfg.spheres.iter().enumerate() {
        if !(s.radius > 0.0) {
            return Err(ConfigError::Semantic {
                field: format!("sphere[{i}].radius"),
                message: format!("must be positive, got {}", s.radius),
            });
        }
        if let Some(cr) = s.cr {
            if !(cr > 0.0) {
                return Err(ConfigError::Semantic {
                    field: format!("sphere[{i}].cr"),
                    message: format!("must be positive, got {cr}"),
                });
            }
        }
    }
    if !(cfg.c0 > 0.0) {
        return fail("c0", format!("must be positive, got {}", cfg.c0));
    }
    if !(cfg.cr > 0.0) {
        return fail("cr", format!("must be positive, got {}", cfg.cr));
    }
    if !(cfg.delta >= 0.0) {
        return fail("delta", format!("must be nonnegative, got {}", cfg.delta));
    }
    if cfg.model == ModelChoice::KerrPencil && !(cfg.delta > 0.0) {
        return fail("delta", "the kerr_pencil model needs delta > 0".into());
    }
    if cfg.refinement > subwave_core::geometry::DEFAULT_MAX_REFINEMENT {
        return fail(
            "refinement",
            format!(
                "must be at most {}, got {}",
                subwave_core::geometry::DEFAULT_MAX_REFINEMENT,
                cfg.refinement
            ),
        );
    }
    if cfg.amplitude_count < 2 {
        return fail(
            "amplitude_count",
            format!("must be at least 2, got {}", cfg.amplitude_count),
        );
    }
    if !(cfg.amplitude_min >= 0.0) {
        return fail(
            "amplitude_min",
            format!("must be nonnegative, got {}", cfg.amplitude_min),
        );
    }
    if !(cfg.amplitude_max > cfg.amplitude_min) {
        return fail(
            "amplitude_max",
            format!(
                "must exceed amplitude_min = {}, got {}",
                cfg.amplitude_min, cfg.amplitude_max
            ),
        );
    }
    if cfg.amplitude_scale == AmplitudeScale::Log && !(cfg.amplitude_min > 0.0) {
        return fail(
            "amplitude_min",
            "log-scaled grids need a positive amplitude_min".into(),
        );
    }
    if cfg.starts == 0 {
        return fail("starts", "must be at least 1".into());
    }
    if !(cfg.separation_threshold >= 0.0) {
        return fail(
            "separation_threshold",
            format!("must be nonnegative, got {}", cfg.separation_threshold),
        );
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn to_system(&self) -> Result<ResonatorSystem, ConfigError> {
        let spheres: Vec<SphereSpec> = self
            .spheres
            .iter()
            .map(|s| SphereSpec::new(s.center, s.radius))
            .collect();
        let cr: Vec<f64> = self
            .spheres
            .iter()
            .map(|s| s.cr.unwrap_or(self.cr))
            .collect();
        ResonatorSystem::with_component_cr(spheres, self.c0, cr, self.delta, self.beta)
            .map(|sys| sys.with_separation_threshold(self.separation_threshold))
            .map_err(|e| ConfigError::Semantic {
                field: "sphere".into(),
                message: e.to_string(),
            })
    }

    /// The amplitude grid defined by the sweep fields.
    pub fn amplitude_grid(&self) -> Vec<f64> {
        let n = self.amplitude_count;
        match self.amplitude_scale {
            AmplitudeScale::Linear => (0..n)
                .map(|k| {
                    self.amplitude_min
                        + (self.amplitude_max - self.amplitude_min) * k as f64 / (n - 1) as f64
                })
                .collect(),
            AmplitudeScale::Log => {
                let (a, b) = (self.amplitude_min.ln(), self.amplitude_max.ln());
                (0..n)
                    .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
                    .collect()
            }
        }
    }

    /// Fully-resolved echo written next to results for provenance.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("model = {}\n", self.model));
        out.push_str(&format!("c0 = {}\n", fmt_f64(self.c0)));
        out.push_str(&format!("cr = {}\n", fmt_f64(self.cr)));
        out.push_str(&format!("delta = {}\n", fmt_f64(self.delta)));
        out.push_str(&format!(
            "beta = {}, {}\n",
            fmt_f64(self.beta.re),
            fmt_f64(self.beta.im)
        ));
        out.push_str(&format!("refinement = {}\n", self.refinement));
        out.push_str(&format!("amplitude_min = {}\n", fmt_f64(self.amplitude_min)));
        out.push_str(&format!("amplitude_max = {}\n", fmt_f64(self.amplitude_max)));
        out.push_str(&format!("amplitude_count = {}\n", self.amplitude_count));
        out.push_str(&format!("amplitude_scale = {}\n", self.amplitude_scale));
        out.push_str(&format!("starts = {}\n", self.starts));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("emit_csv = {}\n", self.emit_csv));
        out.push_str(&format!("emit_svg = {}\n", self.emit_svg));
        out.push_str(&format!(
            "separation_threshold = {}\n",
            fmt_f64(self.separation_threshold)
        ));
        for s in &self.spheres {
            out.push_str("\n[sphere]\n");
            out.push_str(&format!(
                "center = {}, {}, {}\n",
                fmt_f64(s.center.x),
                fmt_f64(s.center.y),
                fmt_f64(s.center.z)
            ));
            out.push_str(&format!("radius = {}\n", fmt_f64(s.radius)));
            if let Some(cr) = s.cr {
                out.push_str(&format!("cr = {}\n", fmt_f64(cr)));
            }
        }
        out
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.17e}")
}
