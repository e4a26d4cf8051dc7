//! Run configuration: the TOML schema, material-parameter derivation, sweep
//! overrides and resolution into a ready-to-run [`Simulation`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::driver::{Protocol, Scheme, Simulation};
use crate::error::{Error, Result};
use crate::interface::InterfaceParams;
use crate::material::{Material, Phases, PhysicalConstants};
use crate::mesh::{CrackLocation, Grading, MeshResolution, ParticleSpec};
use crate::metrics::ClassifierSettings;
use crate::ocp::OcpCurve;
use crate::real::Real;

/// Toughness from a plane-strain stress intensity factor,
/// `G_c = (1 - nu^2) K_c^2 / E`, with `K_c` in MPa m^0.5 and `E` in Pa.
pub fn gc_from_kc<T: Real>(k_c_mpa: T, youngs: T, poisson: T) -> T {
    let k = k_c_mpa * T::lit(1e6);
    (T::one() - poisson * poisson) * k * k / youngs
}

/// AT2 length scale `27 / 256 (K_c / sigma_c)^2` (m), both inputs in MPa units.
pub fn ell_from_strength<T: Real>(k_c_mpa: T, sigma_c_mpa: T) -> T {
    let l_ch = (k_c_mpa / sigma_c_mpa).powi(2);
    T::lit(27.0 / 256.0) * l_ch
}

/// Default relative size of the seeded crack for each location.
pub fn default_relative_crack_size(location: CrackLocation) -> f64 {
    match location {
        CrackLocation::Surface => 0.3,
        CrackLocation::Interface | CrackLocation::Center => 0.6,
        CrackLocation::None => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParticleConfig {
    /// Core radius `R` (m).
    pub core_radius: f64,
    /// Shell thickness relative to the core radius.
    pub hbar: f64,
    pub grading: Grading,
    pub crack: CrackLocation,
    /// `a / h` for shell and interface cracks, `a / R` for central cracks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_crack_size: Option<f64>,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        ParticleConfig {
            core_radius: 4e-6,
            hbar: 0.2,
            grading: Grading::UniformShell,
            crack: CrackLocation::Surface,
            relative_crack_size: None,
        }
    }
}

impl ParticleConfig {
    pub fn relative_size(&self) -> f64 {
        self.relative_crack_size
            .unwrap_or_else(|| default_relative_crack_size(self.crack))
    }

    /// Absolute crack length `a` (m).
    pub fn crack_size(&self) -> f64 {
        let abar = self.relative_size();
        match self.crack {
            CrackLocation::Surface | CrackLocation::Interface => abar * self.hbar * self.core_radius,
            CrackLocation::Center => abar * self.core_radius,
            CrackLocation::None => 0.0,
        }
    }

    pub fn spec(&self) -> ParticleSpec<f64> {
        let mut spec = ParticleSpec::from_relative(self.core_radius, self.hbar);
        spec.grading = self.grading;
        spec.with_crack(self.crack, self.crack_size())
    }
}

/// One phase: a preset, optional property overrides, optionally `K_c` and
/// `sigma_c` from which `G_c` and `ell` are derived.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaterialConfig {
    /// `nmc811` or `nmc532`; without a preset every property and `ocp` are required.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub youngs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poisson: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    /// Fracture toughness (MPa m^0.5).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_c: Option<f64>,
    /// Tensile strength (MPa).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_c: Option<f64>,
    /// CSV table `stoichiometry,volts`; relative paths resolve against the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ocp: Option<PathBuf>,
}

/// Quantities computed from indentation data for one phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedMaterial {
    pub k_c: f64,
    pub youngs: f64,
    pub poisson: f64,
    pub g_c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_ch: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
}

impl MaterialConfig {
    pub fn preset(name: &str) -> Self {
        MaterialConfig {
            preset: Some(name.to_string()),
            ..MaterialConfig::default()
        }
    }

    fn base(&self, name: &str) -> Result<Option<Material<f64>>> {
        match self.preset.as_deref() {
            Some("nmc811") => Ok(Some(Material::nmc811())),
            Some("nmc532") => Ok(Some(Material::nmc532())),
            Some(other) => Err(Error::Config(format!(
                "{name}.preset: unknown preset `{other}` (expected nmc811 or nmc532)"
            ))),
            None => Ok(None),
        }
    }

    /// `G_c` and `ell` implied by `k_c` / `sigma_c`, if given.
    pub fn derive(&self, name: &str) -> Result<Option<DerivedMaterial>> {
        let Some(k_c) = self.k_c else {
            if self.sigma_c.is_some() {
                return Err(Error::Config(format!("{name}.sigma_c needs {name}.k_c")));
            }
            return Ok(None);
        };
        let base = self.base(name)?;
        let youngs = self
            .youngs
            .or(base.as_ref().map(|m| m.props.youngs))
            .ok_or_else(|| Error::Config(format!("{name}.youngs is required to derive g_c")))?;
        let poisson = self
            .poisson
            .or(base.as_ref().map(|m| m.props.poisson))
            .ok_or_else(|| Error::Config(format!("{name}.poisson is required to derive g_c")))?;
        if !(k_c >= 0.0) || !(youngs > 0.0) {
            return Err(Error::Config(format!("{name}: k_c must be >= 0 and youngs > 0")));
        }
        let (l_ch, ell) = match self.sigma_c {
            Some(s) if s > 0.0 => (Some((k_c / s).powi(2)), Some(ell_from_strength(k_c, s))),
            Some(s) => return Err(Error::Config(format!("{name}.sigma_c must be positive, got {s}"))),
            None => (None, None),
        };
        Ok(Some(DerivedMaterial {
            k_c,
            youngs,
            poisson,
            g_c: gc_from_kc(k_c, youngs, poisson),
            sigma_c: self.sigma_c,
            l_ch,
            ell,
        }))
    }

    pub fn resolve(&self, name: &str) -> Result<(Material<f64>, Option<DerivedMaterial>)> {
        let derived = self.derive(name)?;
        if derived.is_some() && self.g_c.is_some() {
            return Err(Error::Config(format!("{name}: give either g_c or k_c, not both")));
        }
        if derived.is_some_and(|d| d.ell.is_some()) && self.ell.is_some() {
            return Err(Error::Config(format!("{name}: give either ell or sigma_c, not both")));
        }
        let ocp = match &self.ocp {
            Some(path) => Some(Arc::new(OcpCurve::from_csv_file(path)?)),
            None => None,
        };
        let mut material = match self.base(name)? {
            Some(m) => m,
            None => {
                let missing: Vec<&str> = [
                    ("c_max", self.c_max.is_none()),
                    ("omega", self.omega.is_none()),
                    ("d0", self.d0.is_none()),
                    ("youngs", self.youngs.is_none()),
                    ("poisson", self.poisson.is_none()),
                    ("g_c", self.g_c.is_none() && derived.is_none()),
                    ("ell", self.ell.is_none() && derived.and_then(|d| d.ell).is_none()),
                    ("ocp", ocp.is_none()),
                ]
                .into_iter()
                .filter_map(|(k, miss)| miss.then_some(k))
                .collect();
                if !missing.is_empty() {
                    return Err(Error::Config(format!(
                        "{name}: without a preset these keys are required: {}",
                        missing.join(", ")
                    )));
                }
                Material::nmc811()
            }
        };
        let p = &mut material.props;
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut p.c_max, self.c_max);
        set(&mut p.omega, self.omega);
        set(&mut p.d0, self.d0);
        set(&mut p.youngs, self.youngs);
        set(&mut p.poisson, self.poisson);
        set(&mut p.g_c, self.g_c.or(derived.map(|d| d.g_c)));
        set(&mut p.ell, self.ell.or(derived.and_then(|d| d.ell)));
        if let Some(ocp) = ocp {
            material.ocp = ocp;
        }
        material.validate(name)?;
        Ok((material, derived))
    }

    /// Fully explicit form: every property spelled out, derivation inputs dropped.
    fn effective(&self, m: &Material<f64>) -> MaterialConfig {
        let p = &m.props;
        MaterialConfig {
            preset: self.preset.clone(),
            c_max: Some(p.c_max),
            omega: Some(p.omega),
            d0: Some(p.d0),
            youngs: Some(p.youngs),
            poisson: Some(p.poisson),
            g_c: Some(p.g_c),
            ell: Some(p.ell),
            k_c: None,
            sigma_c: None,
            ocp: self.ocp.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InterfaceConfig {
    /// Diffuse interface width (m).
    pub l_zeta: f64,
    /// `G_c,I / G_c,ave`; used when `g_c` is absent (default 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bonding_ratio: Option<f64>,
    /// Absolute interfacial toughness (N/m).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_c: Option<f64>,
}

impl Default for InterfaceConfig {
    fn default() -> Self {
        InterfaceConfig {
            l_zeta: 1e-7,
            bonding_ratio: None,
            g_c: None,
        }
    }
}

impl InterfaceConfig {
    pub fn resolve(&self, phases: &Phases<f64>) -> Result<InterfaceParams<f64>> {
        let params = match (self.g_c, self.bonding_ratio) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "interface: give either g_c or bonding_ratio, not both".into(),
                ))
            }
            (Some(g), None) => InterfaceParams {
                l_zeta: self.l_zeta,
                g_c_interface: g,
            },
            (None, r) => InterfaceParams::from_bonding_ratio(self.l_zeta, r.unwrap_or(1.0), phases),
        };
        params.validate()?;
        Ok(params)
    }
}

/// Element sizes. Defaults follow the length scales: `l_min / 4` in
/// crackable regions and `l_zeta / 3` in the interface band, both multiplied
/// by `coarsening`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeshConfig {
    pub coarsening: f64,
    /// Size far from every band (m).
    pub bulk: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crack_band: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interface_band: Option<f64>,
    /// Size growth per unit distance from a band.
    pub grading: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            coarsening: 1.0,
            bulk: 0.5e-6,
            crack_band: None,
            interface_band: None,
            grading: 0.3,
        }
    }
}

impl MeshConfig {
    pub fn resolve(&self, phases: &Phases<f64>, l_zeta: f64) -> Result<MeshResolution<f64>> {
        if !(self.coarsening > 0.0) {
            return Err(Error::Config(format!("mesh.coarsening must be positive, got {}", self.coarsening)));
        }
        let mut res = MeshResolution::from_length_scales(self.coarsening * phases.ell_min(), self.coarsening * l_zeta, self.bulk);
        if let Some(s) = self.crack_band {
            res.crack_band = s;
        }
        if let Some(s) = self.interface_band {
            res.interface_band = s;
        }
        res.grading = self.grading;
        res.validate()?;
        Ok(res)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    /// Run label used in records and sweep directory names.
    pub name: String,
    /// Output directory; relative paths resolve against the output root.
    pub dir: PathBuf,
    /// Field snapshot cadence in accepted steps (0: initial and final only).
    pub snapshot_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            name: "run".into(),
            dir: PathBuf::from("output"),
            snapshot_every: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub particle: ParticleConfig,
    pub core: MaterialConfig,
    pub shell: MaterialConfig,
    pub interface: InterfaceConfig,
    pub protocol: Protocol,
    pub scheme: Scheme,
    pub mesh: MeshConfig,
    pub classifier: ClassifierSettings,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            particle: ParticleConfig::default(),
            core: MaterialConfig::preset("nmc811"),
            shell: MaterialConfig::preset("nmc532"),
            interface: InterfaceConfig::default(),
            protocol: Protocol::default(),
            scheme: Scheme::default(),
            mesh: MeshConfig::default(),
            classifier: ClassifierSettings::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Everything a run needs, resolved from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub spec: ParticleSpec<f64>,
    pub phases: Phases<f64>,
    pub interface: InterfaceParams<f64>,
    pub resolution: MeshResolution<f64>,
    pub derived: BTreeMap<String, DerivedMaterial>,
}

impl RunConfig {
    /// Parses TOML text; keys the schema does not know are all reported at once.
    /// Relative OCP paths are made absolute against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Self::from_value(toml::Value::Table(table), base_dir)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn from_value(value: toml::Value, base_dir: &Path) -> Result<Self> {
        let mut unknown = Vec::new();
        let mut cfg: RunConfig = serde_ignored::deserialize(value, |path| unknown.push(path.to_string()))
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if !unknown.is_empty() {
            return Err(Error::UnknownKeys(unknown));
        }
        for m in [&mut cfg.core, &mut cfg.shell] {
            if let Some(p) = &m.ocp {
                if p.is_relative() {
                    m.ocp = Some(base_dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_value(&self) -> Result<toml::Value> {
        toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve(&self) -> Result<ResolvedRun> {
        self.protocol.validate()?;
        self.scheme.validate()?;
        let (core, d_core) = self.core.resolve("core")?;
        let (shell, d_shell) = self.shell.resolve("shell")?;
        let spec = self.particle.spec();
        spec.validate()?;
        let phases = Phases::new(core, shell, self.particle.grading, spec.core_radius, spec.outer_radius());
        let interface = self.interface.resolve(&phases)?;
        let resolution = self.mesh.resolve(&phases, interface.l_zeta)?;
        let mut derived = BTreeMap::new();
        if let Some(d) = d_core {
            derived.insert("core".to_string(), d);
        }
        if let Some(d) = d_shell {
            derived.insert("shell".to_string(), d);
        }
        Ok(ResolvedRun {
            spec,
            phases,
            interface,
            resolution,
            derived,
        })
    }

    /// Copy with every default and derived quantity written out; re-parsing
    /// this yields the same run.
    pub fn effective(&self) -> Result<RunConfig> {
        let r = self.resolve()?;
        let mut eff = self.clone();
        eff.core = self.core.effective(&r.phases.core);
        eff.shell = self.shell.effective(&r.phases.shell);
        eff.particle.relative_crack_size = Some(self.particle.relative_size());
        if self.interface.g_c.is_none() {
            eff.interface.bonding_ratio = Some(self.interface.bonding_ratio.unwrap_or(1.0));
        }
        eff.mesh.crack_band = Some(r.resolution.crack_band);
        eff.mesh.interface_band = Some(r.resolution.interface_band);
        Ok(eff)
    }

    pub fn build(&self) -> Result<Simulation<f64>> {
        let r = self.resolve()?;
        Simulation::new(
            r.spec,
            r.phases,
            PhysicalConstants::default(),
            r.interface,
            self.protocol,
            self.scheme,
            self.classifier,
            &r.resolution,
        )
    }
}

/// Short parameter names accepted by sweeps, with the factor converting the
/// given value into the stored SI value.
pub const SWEEP_ALIASES: &[(&str, &str, f64)] = &[
    ("hbar", "particle.hbar", 1.0),
    ("R", "particle.core_radius", 1e-6),
    ("R_um", "particle.core_radius", 1e-6),
    ("C", "protocol.c_rate", 1.0),
    ("c_rate", "protocol.c_rate", 1.0),
    ("abar", "particle.relative_crack_size", 1.0),
    ("bonding", "interface.bonding_ratio", 1.0),
    ("gc_ratio", "interface.bonding_ratio", 1.0),
    ("crack", "particle.crack", 1.0),
    ("coarsening", "mesh.coarsening", 1.0),
    ("degrade", "scheme.degrade_diffusivity", 1.0),
];

/// Maps a sweep parameter to its dotted config path and unit factor.
pub fn resolve_parameter(name: &str) -> (String, f64) {
    SWEEP_ALIASES
        .iter()
        .find(|(alias, _, _)| *alias == name)
        .map_or((name.to_string(), 1.0), |&(_, path, f)| (path.to_string(), f))
}

fn parse_scalar(raw: &str, factor: f64) -> toml::Value {
    let raw = raw.trim();
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if factor == 1.0 {
        if let Ok(i) = raw.parse::<i64>() {
            return toml::Value::Integer(i);
        }
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f * factor);
    }
    toml::Value::String(raw.to_string())
}

/// Sets `path` (dotted) in a config tree, creating intermediate tables.
pub fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{}` is not a table", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Err(Error::Config("empty parameter path".into()))
}

/// One member of a parameter sweep.
#[derive(Debug, Clone)]
pub struct SweepMember {
    /// `param=value` as given on the command line.
    pub label: String,
    /// Dotted path actually changed.
    pub path: String,
    pub value: toml::Value,
    pub config: RunConfig,
}

/// Expands `param=v1,v2,...` over a base configuration. Members share every
/// other setting; each gets its own output subdirectory.
pub fn expand_sweep(base: &RunConfig, vary: &str) -> Result<Vec<SweepMember>> {
    let (name, list) = vary
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--vary expects param=v1,v2,..., got `{vary}`")))?;
    let (path, factor) = resolve_parameter(name.trim());
    let base_value = base.to_value()?;
    let mut out = Vec::new();
    for raw in list.split(',').filter(|s| !s.trim().is_empty()) {
        let value = parse_scalar(raw, factor);
        let mut tree = base_value.clone();
        set_path(&mut tree, &path, value.clone())?;
        let mut config = RunConfig::from_value(tree, Path::new("."))?;
        let label = format!("{}={}", name.trim(), raw.trim());
        config.output.name = format!("{}_{}_{}", base.output.name, name.trim(), raw.trim());
        config.output.dir = base.output.dir.join(format!("{}_{}", name.trim(), raw.trim()));
        out.push(SweepMember {
            label,
            path: path.clone(),
            value,
            config,
        });
    }
    if out.is_empty() {
        return Err(Error::Config(format!("--vary `{vary}` lists no values")));
    }
    Ok(out)
}

/// Dotted paths whose values differ between two configs.
pub fn config_diff(a: &RunConfig, b: &RunConfig) -> Result<Vec<String>> {
    fn walk(prefix: &str, a: &toml::Value, b: Option<&toml::Value>, out: &mut Vec<String>) {
        match (a, b) {
            (toml::Value::Table(ta), Some(toml::Value::Table(tb))) => {
                for (k, va) in ta {
                    let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&p, va, tb.get(k), out);
                }
                for k in tb.keys().filter(|k| !ta.contains_key(*k)) {
                    out.push(if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") });
                }
            }
            (va, Some(vb)) if va == vb => {}
            _ => out.push(prefix.to_string()),
        }
    }
    let mut out = Vec::new();
    walk("", &a.to_value()?, Some(&b.to_value()?), &mut out);
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_builds_reference_geometry() {
        let r = RunConfig::default().resolve().unwrap();
        assert!((r.spec.core_radius - 4e-6).abs() < 1e-18);
        assert!((r.spec.crack.size - 0.3 * 0.8e-6).abs() < 1e-15);
        assert!((r.interface.g_c_interface - r.phases.g_c_average()).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_all_listed() {
        let err = RunConfig::from_toml_str("[particle]\nhbar = 0.1\nradius = 3\n[mesh]\nfoo = 1\n", Path::new(".")).unwrap_err();
        match err {
            Error::UnknownKeys(mut keys) => {
                keys.sort();
                assert_eq!(keys, vec!["mesh.foo".to_string(), "particle.radius".to_string()]);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn conflicting_toughness_inputs_are_rejected() {
        let text = "[core]\npreset = \"nmc811\"\ng_c = 0.3\nk_c = 0.271\n";
        assert!(RunConfig::from_toml_str(text, Path::new(".")).unwrap().resolve().is_err());
    }

    #[test]
    fn sweep_alias_converts_micrometres() {
        let m = expand_sweep(&RunConfig::default(), "R=2,8").unwrap();
        assert_eq!(m.len(), 2);
        assert!((m[1].config.particle.core_radius - 8e-6).abs() < 1e-18);
        assert_eq!(config_diff(&RunConfig::default(), &m[0].config).unwrap(), [
            "output.dir",
            "output.name",
            "particle.core_radius"
        ]);
    }
}
