use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rmt_bulk::appendix::{HMesh, Mesh, H_MESH, L_MESH};
use rmt_bulk::Potential;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Recurrence,
    Kernel,
    Limits,
    Dets,
    Riccati,
    Appendix,
    Universality,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Recurrence,
        Suite::Kernel,
        Suite::Limits,
        Suite::Dets,
        Suite::Riccati,
        Suite::Appendix,
        Suite::Universality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Recurrence => "recurrence",
            Suite::Kernel => "kernel",
            Suite::Limits => "limits",
            Suite::Dets => "dets",
            Suite::Riccati => "riccati",
            Suite::Appendix => "appendix",
            Suite::Universality => "universality",
        }
    }

    /// Suites that build beta = 1, 4 kernels and therefore need even `N`.
    pub fn needs_even_n(self) -> bool {
        matches!(self, Suite::Kernel | Suite::Universality)
    }

    /// Suites that work on an orthonormal basis.
    pub fn needs_basis(self) -> bool {
        matches!(self, Suite::Recurrence | Suite::Kernel | Suite::Universality)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown suite '{s}'")))
    }
}

/// Appendix meshes; unset fields keep the defaults, and overrides may only refine.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshOverrides {
    pub l_ne: Option<usize>,
    pub l_ni: Option<usize>,
    pub h_ne03: Option<usize>,
    pub h_ni03: Option<usize>,
    pub h_ne36: Option<usize>,
    pub h_ni_factor: Option<f64>,
}

impl MeshOverrides {
    pub fn l_mesh(&self) -> Mesh {
        Mesh { ne: self.l_ne.unwrap_or(L_MESH.ne), ni: self.l_ni.unwrap_or(L_MESH.ni) }
    }

    pub fn h_mesh(&self) -> HMesh {
        HMesh {
            ne03: self.h_ne03.unwrap_or(H_MESH.ne03),
            ni03: self.h_ni03.unwrap_or(H_MESH.ni03),
            ne36: self.h_ne36.unwrap_or(H_MESH.ne36),
            ni_factor: self.h_ni_factor.unwrap_or(H_MESH.ni_factor),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Potential as `"k4=1,k2=-0.5"`; when unset the basis suites use `x^{2m}` for each `m`.
    pub potential: Option<String>,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub precision_bits: u32,
    /// Recurrence depth; defaults to `max N + 2m + 8`.
    pub jmax: Option<usize>,
    pub mesh: MeshOverrides,
    pub output_dir: PathBuf,
    /// Defaults to `<output_dir>/cache`.
    pub cache_dir: Option<PathBuf>,
    pub suites: Vec<Suite>,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            potential: None,
            n: vec![20],
            m: vec![2],
            precision_bits: 256,
            jmax: None,
            mesh: MeshOverrides::default(),
            output_dir: PathBuf::from("rmt-out"),
            cache_dir: None,
            suites: Vec::new(),
            jobs: 1,
        }
    }
}

/// One basis to build: the potential, a file tag and the recurrence depth.
#[derive(Clone, Debug)]
pub struct BasisPlan {
    pub potential: Potential,
    pub tag: String,
    pub jmax: usize,
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.output_dir.join("cache"))
    }

    fn selected(&self, f: impl Fn(Suite) -> bool) -> bool {
        self.suites.iter().any(|&s| f(s))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.precision_bits < 64 {
            return bad(format!("precision_bits must be at least 64, got {}", self.precision_bits));
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        let mut seen = Vec::new();
        for s in &self.suites {
            if seen.contains(s) {
                return bad(format!("suite '{s}' listed twice"));
            }
            seen.push(*s);
        }
        if self.m.contains(&0) {
            return bad("m must be at least 1".into());
        }
        let m_suites = self.selected(|s| matches!(s, Suite::Limits | Suite::Dets | Suite::Riccati))
            || (self.potential.is_none() && self.selected(Suite::needs_basis));
        if m_suites && self.m.is_empty() {
            return bad("the selected suites need a non-empty m list".into());
        }
        if self.selected(|s| s == Suite::Dets) {
            if let Some(m) = self.m.iter().find(|&&m| m < 2) {
                return bad(format!("the dets suite needs m >= 2, got {m}"));
            }
        }
        if self.selected(Suite::needs_even_n) {
            if self.n.is_empty() {
                return bad("the kernel and universality suites need a non-empty N list".into());
            }
            if let Some(n) = self.n.iter().find(|&&n| n % 2 == 1) {
                return bad(format!("N must be even for the beta = 1, 4 suites, got {n}"));
            }
        }
        if let Some(p) = &self.potential {
            Potential::parse(p).map_err(|e| CliError::Config(e.to_string()))?;
        }
        if self.selected(Suite::needs_basis) {
            for plan in self.basis_plans()? {
                let n = plan.potential.n();
                if let Some(&big) = self.n.iter().find(|&&x| x + n > plan.jmax) {
                    return bad(format!("N = {big} needs Jmax >= {} for {}", big + n, plan.tag));
                }
                if self.selected(Suite::needs_even_n) {
                    if let Some(&small) = self.n.iter().find(|&&x| x <= n) {
                        return bad(format!("N = {small} must exceed 2m-1 = {n} for {}", plan.tag));
                    }
                }
            }
        }
        if self.selected(|s| s == Suite::Appendix) {
            let (l, h) = (self.mesh.l_mesh(), self.mesh.h_mesh());
            if l.ne < L_MESH.ne
                || l.ni < L_MESH.ni
                || h.ne03 < H_MESH.ne03
                || h.ni03 < H_MESH.ni03
                || h.ne36 < H_MESH.ne36
                || !(h.ni_factor >= H_MESH.ni_factor)
            {
                return bad("appendix meshes may only be refined".into());
            }
        }
        Ok(())
    }

    pub fn basis_plans(&self) -> Result<Vec<BasisPlan>> {
        let max_n = self.n.iter().copied().max().unwrap_or(40);
        let plan = |potential: Potential, tag: String| {
            let jmax = self.jmax.unwrap_or(max_n + 2 * potential.m() + 8);
            BasisPlan { potential, tag, jmax }
        };
        match &self.potential {
            Some(spec) => {
                let v = Potential::parse(spec).map_err(|e| CliError::Config(e.to_string()))?;
                let tag = format!("v{}", &hex_digest(v.spec_string().as_bytes())[..8]);
                Ok(vec![plan(v, tag)])
            }
            None => self
                .m
                .iter()
                .map(|&m| Ok(plan(Potential::monomial(m, 1.0)?, format!("m{m}"))))
                .collect(),
        }
    }

    /// Hash of everything that affects computed values; paths and `jobs` are excluded.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            for k in ["output_dir", "cache_dir", "jobs"] {
                obj.remove(k);
            }
        }
        hex_digest(v.to_string().as_bytes())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("plots".parse::<Suite>().is_err());
    }

    #[test]
    fn hash_ignores_paths_and_jobs() {
        let a = RunConfig::default();
        let b = RunConfig { output_dir: "elsewhere".into(), jobs: 4, ..RunConfig::default() };
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig { precision_bits: 128, ..RunConfig::default() };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn validation_rules() {
        let ok = RunConfig { suites: vec![Suite::Dets], ..RunConfig::default() };
        assert!(ok.validate().is_ok());
        let dets_m1 = RunConfig { m: vec![1], ..ok.clone() };
        assert!(dets_m1.validate().is_err());
        let odd = RunConfig { n: vec![21], suites: vec![Suite::Universality], ..RunConfig::default() };
        assert!(matches!(odd.validate(), Err(CliError::Config(_))));
        // odd N is fine when no beta = 1, 4 suite runs
        let rec = RunConfig { n: vec![21], suites: vec![Suite::Recurrence], ..RunConfig::default() };
        assert!(rec.validate().is_ok());
        let coarse = RunConfig {
            suites: vec![Suite::Appendix],
            mesh: MeshOverrides { l_ne: Some(10), ..Default::default() },
            ..RunConfig::default()
        };
        assert!(coarse.validate().is_err());
        let twice = RunConfig { suites: vec![Suite::Dets, Suite::Dets], ..RunConfig::default() };
        assert!(twice.validate().is_err());
    }

    #[test]
    fn default_jmax_covers_largest_n() {
        let c = RunConfig { n: vec![20, 40], m: vec![1, 2], ..RunConfig::default() };
        let plans = c.basis_plans().unwrap();
        assert_eq!(plans[0].jmax, 50);
        assert_eq!(plans[1].jmax, 52);
        assert_eq!(plans[1].tag, "m2");
    }
}
