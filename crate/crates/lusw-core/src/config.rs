//! Flat key-value run configuration.
//!
//! One `key = value` pair per line, keys dotted one level deep, `#` starts a
//! comment. Unknown keys are rejected; every violated rule is reported with
//! the rule spelled out. Example:
//!
//! ```text
//! grid.j = 5
//! params.regime = untruncated-weak
//! params.alpha = -0.5
//! params.beta = -0.5
//! params.nu = 0.05
//! params.eta = 0.05
//! noise.family = stream-function
//! noise.wavenumbers = 1,0; 0,1
//! noise.scale = 0.05
//! time.t_end = 1.0
//! time.dt = 0.002
//! rng.seed = 42
//! study.kind = run
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Regime};
use crate::noise::{NoiseFamily, NoiseSpec};
use crate::spectral::GridSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum StudyKind {
    Run,
    Cauchy,
    EnergyAudit,
    OracleTransport,
}

impl StudyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StudyKind::Run => "run",
            StudyKind::Cauchy => "cauchy",
            StudyKind::EnergyAudit => "energy-audit",
            StudyKind::OracleTransport => "oracle-transport",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitProfile {
    /// Divergence-free random velocity + random height perturbation.
    SmoothRandom,
    /// u = (A sin y, 0), h = h_mean + A_h cos x.
    Shear,
    /// Constant velocity `init.u` + random height perturbation.
    Transport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitSpec {
    pub profile: InitProfile,
    pub amplitude: f64,
    pub h_amplitude: f64,
    pub h_mean: f64,
    pub bandwidth: i64,
    pub u_const: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSpec {
    pub t_end: f64,
    pub dt: f64,
    pub snapshot_stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RngSpec {
    pub seed: u64,
    pub realizations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: ModelParams,
    pub noise: NoiseSpec,
    pub time: TimeSpec,
    pub rng: RngSpec,
    /// None means the default 10³ · ‖X₀‖_{k,2} chosen at run time.
    pub stop_threshold: Option<f64>,
    pub study: StudyKind,
    pub cauchy_levels: Vec<u32>,
    /// dt halvings performed by the oracle-transport study.
    pub oracle_halvings: usize,
    pub init: InitSpec,
    pub output_dir: PathBuf,
    pub record_flux: bool,
}

struct Doc {
    entries: BTreeMap<String, String>,
    used: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl Doc {
    fn parse(text: &str) -> Result<Doc> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::validation(format!(
                    "line {}: expected 'key = value', got {raw:?}",
                    lineno + 1
                ))
            })?;
            let key = key.trim().to_string();
            if key.is_empty() || key.matches('.').count() > 1 {
                return Err(Error::validation(format!(
                    "line {}: keys are 'section.name' with a single dot: {key:?}",
                    lineno + 1
                )));
            }
            if entries
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::validation(format!("duplicate key: {key}")));
            }
        }
        Ok(Doc {
            entries,
            used: Default::default(),
        })
    }

    fn get(&self, key: &str) -> Option<&str> {
        if self.entries.contains_key(key) {
            self.used.borrow_mut().insert(key.to_string());
        }
        self.entries.get(key).map(|s| s.as_str())
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::validation(format!("{key}: expected a number, got {v:?}"))),
        }
    }

    fn u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::validation(format!("{key}: expected an integer, got {v:?}"))),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.u64(key, default as u64)? as usize)
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(Error::validation(format!(
                "{key}: expected true or false, got {v:?}"
            ))),
        }
    }

    fn reject_unknown(&self) -> Result<()> {
        let used = self.used.borrow();
        for key in self.entries.keys() {
            if !used.contains(key) {
                return Err(Error::validation(format!("unknown key: {key}")));
            }
        }
        Ok(())
    }
}

fn parse_pair(key: &str, v: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::validation(format!(
            "{key}: expected 'x,y', got {v:?}"
        )));
    }
    let x = parts[0]
        .parse()
        .map_err(|_| Error::validation(format!("{key}: bad number {:?}", parts[0])))?;
    let y = parts[1]
        .parse()
        .map_err(|_| Error::validation(format!("{key}: bad number {:?}", parts[1])))?;
    Ok((x, y))
}

fn parse_wavenumbers(v: &str) -> Result<Vec<(i64, i64)>> {
    let mut out = Vec::new();
    for part in v.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let nums: Vec<&str> = part.split(',').map(str::trim).collect();
        if nums.len() != 2 {
            return Err(Error::validation(format!(
                "noise.wavenumbers: expected 'k1,k2; k1,k2; ...', got {part:?}"
            )));
        }
        let k1 = nums[0].parse().map_err(|_| {
            Error::validation(format!("noise.wavenumbers: bad integer {:?}", nums[0]))
        })?;
        let k2 = nums[1].parse().map_err(|_| {
            Error::validation(format!("noise.wavenumbers: bad integer {:?}", nums[1]))
        })?;
        out.push((k1, k2));
    }
    Ok(out)
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let doc = Doc::parse(text)?;

    // grid
    let j = doc.u64("grid.j", 5)? as u32;
    if j < 1 {
        return Err(Error::validation("grid.j must be at least 1"));
    }
    if j > 10 {
        return Err(Error::validation("grid.j above 10 is not supported"));
    }
    let default_m = 1usize << (j + 2);
    let m = doc.usize("grid.m", default_m)?;
    let grid = GridSpec::new(j, m).map_err(|e| Error::validation(e.to_string()))?;

    // params
    let regime = match doc.get("params.regime").unwrap_or("untruncated-weak") {
        "untruncated-weak" => Regime::UntruncatedWeak,
        "truncated-strong" => Regime::TruncatedStrong,
        other => {
            return Err(Error::validation(format!(
                "params.regime: expected untruncated-weak or truncated-strong, got {other:?}"
            )))
        }
    };
    let params = ModelParams {
        alpha: doc.f64("params.alpha", -0.5)?,
        beta: doc.f64("params.beta", -0.5)?,
        nu: doc.f64("params.nu", 0.0)?,
        eta: doc.f64("params.eta", 0.0)?,
        g: doc.f64("params.g", 9.81)?,
        f: doc.f64("params.f", 1e-4)?,
        rho: doc.f64("params.rho", 1.0)?,
        k: doc.u64(
            "params.k",
            if regime == Regime::UntruncatedWeak {
                0
            } else {
                1
            },
        )? as u32,
        r: doc.f64("params.r", 1e3)?,
        regime,
    };
    params.validate()?;

    // noise
    let scale = doc.f64("noise.scale", 0.0)?;
    if scale < 0.0 {
        return Err(Error::validation("noise.scale must be >= 0"));
    }
    let family = match doc.get("noise.family").unwrap_or("constant") {
        "constant" => {
            let c = match doc.get("noise.c") {
                Some(v) => parse_pair("noise.c", v)?,
                None => (1.0, 0.0),
            };
            if scale > 0.0 && c == (0.0, 0.0) {
                return Err(Error::validation(
                    "noise.c must be nonzero when noise.scale > 0",
                ));
            }
            NoiseFamily::ConstantVector { direction: c }
        }
        "stream-function" => {
            let wavenumbers = match doc.get("noise.wavenumbers") {
                Some(v) => parse_wavenumbers(v)?,
                None => vec![(1, 0), (0, 1)],
            };
            if wavenumbers.is_empty() {
                return Err(Error::validation(
                    "noise.wavenumbers must list at least one mode",
                ));
            }
            if wavenumbers.contains(&(0, 0)) {
                return Err(Error::validation("noise.wavenumbers must be nonzero"));
            }
            let decay = doc.f64("noise.decay", 2.0)?;
            if decay <= 1.0 {
                return Err(Error::validation(
                    "noise.decay must exceed 1 (summable amplitudes)",
                ));
            }
            NoiseFamily::StreamFunction { wavenumbers, decay }
        }
        other => {
            return Err(Error::validation(format!(
                "noise.family: expected constant or stream-function, got {other:?}"
            )))
        }
    };
    let noise = NoiseSpec {
        family,
        scale,
        require_solenoidal_isd: doc.bool("noise.require_solenoidal_isd", false)?,
    };

    // time
    let t_end = doc.f64("time.t_end", 1.0)?;
    let dt = doc.f64("time.dt", 1e-3)?;
    if !(dt > 0.0) {
        return Err(Error::validation("time.dt must be positive"));
    }
    if !(t_end > 0.0) {
        return Err(Error::validation("time.t_end must be positive"));
    }
    let snapshot_stride = doc.usize("time.snapshot_stride", 0)?;
    let time = TimeSpec {
        t_end,
        dt,
        snapshot_stride,
    };

    // rng
    let rng = RngSpec {
        seed: doc.u64("rng.seed", 0)?,
        realizations: doc.usize("rng.realizations", 1)?,
    };
    if rng.realizations == 0 {
        return Err(Error::validation("rng.realizations must be at least 1"));
    }

    // stopping
    let stop_threshold = match doc.get("stopping.threshold") {
        None => None,
        Some(v) => {
            let t: f64 = v
                .parse()
                .map_err(|_| Error::validation("stopping.threshold: expected a number"))?;
            if !(t > 0.0) {
                return Err(Error::validation("stopping.threshold must be positive"));
            }
            Some(t)
        }
    };

    // study
    let study = match doc.get("study.kind").unwrap_or("run") {
        "run" => StudyKind::Run,
        "cauchy" => StudyKind::Cauchy,
        "energy-audit" => StudyKind::EnergyAudit,
        "oracle-transport" => StudyKind::OracleTransport,
        other => {
            return Err(Error::validation(format!(
                "study.kind: expected run, cauchy, energy-audit or oracle-transport, got {other:?}"
            )))
        }
    };
    let cauchy_levels: Vec<u32> = match doc.get("study.levels") {
        None => vec![],
        Some(v) => {
            let mut levels = Vec::new();
            for part in v.split(',') {
                let lv: u32 = part
                    .trim()
                    .parse()
                    .map_err(|_| Error::validation(format!("study.levels: bad level {part:?}")))?;
                levels.push(lv);
            }
            levels
        }
    };
    if study == StudyKind::Cauchy {
        if cauchy_levels.len() < 2 {
            return Err(Error::validation(
                "cauchy study requires study.levels with at least 2 levels",
            ));
        }
        if !cauchy_levels.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::validation("study.levels must be strictly ascending"));
        }
        let coarsest = cauchy_levels[0];
        if noise.max_wavenumber() > (1i64 << coarsest) {
            return Err(Error::validation(
                "noise wavenumbers must lie in the block of the coarsest cauchy level",
            ));
        }
    }
    let oracle_halvings = doc.usize("study.halvings", 4)?;

    // init
    let profile = match doc.get("init.profile").unwrap_or("smooth-random") {
        "smooth-random" => InitProfile::SmoothRandom,
        "shear" => InitProfile::Shear,
        "transport" => InitProfile::Transport,
        other => {
            return Err(Error::validation(format!(
                "init.profile: expected smooth-random, shear or transport, got {other:?}"
            )))
        }
    };
    let amplitude = doc.f64("init.amplitude", 0.1)?;
    let init = InitSpec {
        profile,
        amplitude,
        h_amplitude: doc.f64("init.h_amplitude", amplitude)?,
        h_mean: doc.f64("init.h_mean", 1.0)?,
        bandwidth: doc.u64("init.bandwidth", 4)? as i64,
        u_const: match doc.get("init.u") {
            Some(v) => parse_pair("init.u", v)?,
            None => (0.0, 0.0),
        },
    };
    if init.bandwidth < 1 {
        return Err(Error::validation("init.bandwidth must be at least 1"));
    }
    let max_level = if study == StudyKind::Cauchy {
        *cauchy_levels.last().unwrap()
    } else {
        j
    };
    if init.bandwidth > (1i64 << max_level) {
        return Err(Error::validation(
            "init.bandwidth exceeds the finest resolved block",
        ));
    }

    let output_dir = PathBuf::from(doc.get("output.dir").unwrap_or("out"));
    let record_flux = doc.bool("diag.flux", false)?;

    doc.reject_unknown()?;
    Ok(RunConfig {
        grid,
        params,
        noise,
        time,
        rng,
        stop_threshold,
        study,
        cauchy_levels,
        oracle_halvings,
        init,
        output_dir,
        record_flux,
    })
}

impl RunConfig {
    /// Canonical one-line-per-key rendering; the digest input.
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        let mut push = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        push("grid.j", self.grid.level().to_string());
        push("grid.m", self.grid.points().to_string());
        push(
            "params.regime",
            match self.params.regime {
                Regime::UntruncatedWeak => "untruncated-weak".into(),
                Regime::TruncatedStrong => "truncated-strong".into(),
            },
        );
        for (k, v) in [
            ("params.alpha", self.params.alpha),
            ("params.beta", self.params.beta),
            ("params.nu", self.params.nu),
            ("params.eta", self.params.eta),
            ("params.g", self.params.g),
            ("params.f", self.params.f),
            ("params.rho", self.params.rho),
            ("params.r", self.params.r),
        ] {
            push(k, format!("{v:e}"));
        }
        push("params.k", self.params.k.to_string());
        match &self.noise.family {
            NoiseFamily::ConstantVector { direction } => {
                push("noise.family", "constant".into());
                push("noise.c", format!("{:e},{:e}", direction.0, direction.1));
            }
            NoiseFamily::StreamFunction { wavenumbers, decay } => {
                push("noise.family", "stream-function".into());
                let list: Vec<String> = wavenumbers
                    .iter()
                    .map(|w| format!("{},{}", w.0, w.1))
                    .collect();
                push("noise.wavenumbers", list.join(";"));
                push("noise.decay", format!("{decay:e}"));
            }
        }
        push("noise.scale", format!("{:e}", self.noise.scale));
        push("time.t_end", format!("{:e}", self.time.t_end));
        push("time.dt", format!("{:e}", self.time.dt));
        push(
            "time.snapshot_stride",
            self.time.snapshot_stride.to_string(),
        );
        push("rng.seed", self.rng.seed.to_string());
        push("rng.realizations", self.rng.realizations.to_string());
        if let Some(t) = self.stop_threshold {
            push("stopping.threshold", format!("{t:e}"));
        }
        // study.kind and output.dir are workflow, not physics: the digest
        // must match between the run that wrote a snapshot and its audit.
        s
    }

    /// FNV-1a digest of the canonical rendering, stored in snapshot headers.
    pub fn digest(&self) -> u64 {
        fnv1a(self.canonical_string().as_bytes())
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    hash
}
