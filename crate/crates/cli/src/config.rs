//! Run configuration: one self-describing JSON file per run.

use anyhow::{anyhow, bail, Context};
use num::Zero;
use serde::Deserialize;

use berk_core::berkline::BerkPoint;
use berk_core::dendrite::{CombSystem, LetterStream, SymbolicPoint, Tail, Word};
use berk_core::group::MoebiusMap;
use berk_core::padic::{PrimeContext, Rat};
use berk_core::schottky::SchottkyGroup;

pub fn parse_rat(s: &str) -> anyhow::Result<Rat> {
    s.trim()
        .parse::<Rat>()
        .map_err(|e| anyhow!("bad rational {s:?}: {e}"))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub p: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub disks: Vec<DiskSpec>,
    #[serde(default)]
    pub morphism: Option<MorphismSpec>,
    #[serde(default)]
    pub tower: Option<TowerSpec>,
    #[serde(default)]
    pub comb: Option<CombSpec>,
    #[serde(default)]
    pub dendrite: Option<DendriteSpec>,
    #[serde(default)]
    pub shift: Option<ShiftSpec>,
    #[serde(default)]
    pub group: Option<GroupSpec>,
}

#[derive(Debug, Deserialize)]
pub struct DiskSpec {
    pub center: String,
    pub radius_exp: String,
    #[serde(default)]
    pub irrational: bool,
}

#[derive(Debug, Deserialize)]
pub struct MorphismSpec {
    pub source_disks: Vec<DiskSpec>,
    pub target_disks: Vec<DiskSpec>,
}

#[derive(Debug, Deserialize)]
pub struct TowerSpec {
    pub stages: Vec<Vec<DiskSpec>>,
    #[serde(default = "default_lambda_im")]
    pub lambda_im: f64,
    #[serde(default)]
    pub lambda_re: f64,
}

fn default_lambda_im() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
pub struct CombSpec {
    /// alphabet size N (first letters of the enumeration)
    pub letters: usize,
    /// word depth D (total power budget)
    pub depth: u32,
    /// explicit teeth; the default comb over `letters` letters otherwise
    #[serde(default)]
    pub pairs: Option<Vec<[String; 2]>>,
    #[serde(default)]
    pub extra_tails: Vec<TailSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailSpec {
    Letter { value: String },
    Real { value: String, irrational: bool },
    End { tooth: usize },
    Stream { start: String, theta: String },
}

#[derive(Debug, Deserialize)]
pub struct PointSpec {
    #[serde(default)]
    pub prefix: String,
    pub tail: TailSpec,
}

#[derive(Debug, Deserialize)]
pub struct DendriteSpec {
    #[serde(default)]
    pub words: Vec<String>,
    #[serde(default)]
    pub points: Vec<PointSpec>,
}

#[derive(Debug, Deserialize)]
pub struct ShiftSpec {
    /// basis vector e_x named by the word whose closure is x
    #[serde(default)]
    pub pf_word: Option<String>,
    /// simple function Σ c χ_{Z(word)} for the spectral integral
    #[serde(default)]
    pub simple_function: Vec<SimpleTermSpec>,
    #[serde(default)]
    pub cyclic: Option<CyclicSpec>,
}

#[derive(Debug, Deserialize)]
pub struct SimpleTermSpec {
    pub coeff: String,
    pub word: String,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CyclicSpec {
    /// uniform mass on all depth-1 basis points
    Uniform,
    /// the delta vector at the closure of a word
    Delta { word: String },
}

#[derive(Debug, Deserialize)]
pub struct GroupSpec {
    /// explicit generators as 2x2 rational matrices
    #[serde(default)]
    pub generators: Vec<[[String; 2]; 2]>,
    /// or a named preset: "scaling" (rank 1) or "symmetric-rank2"
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default = "default_length")]
    pub length: usize,
    /// Poincaré/measure exponent; defaults to the estimated critical
    /// exponent where one is needed
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "default_depth")]
    pub depth: String,
    #[serde(default)]
    pub poincare_mode: Option<String>,
    /// optional ping-pong disks (attracting, repelling) per generator
    #[serde(default)]
    pub pingpong: Option<Vec<[DiskSpec; 2]>>,
    /// 1-based generator index compared in the quasiconformality report
    #[serde(default = "default_qc_generator")]
    pub qc_generator: usize,
}

fn default_length() -> usize {
    8
}

fn default_depth() -> String {
    "2".to_string()
}

fn default_qc_generator() -> usize {
    1
}

impl DiskSpec {
    pub fn to_point(&self) -> anyhow::Result<BerkPoint> {
        let center = parse_rat(&self.center)?;
        if self.radius_exp == "inf" {
            if self.irrational {
                bail!("a zero radius cannot be irrational");
            }
            return Ok(BerkPoint::type1(center));
        }
        let e = parse_rat(&self.radius_exp)?;
        Ok(if self.irrational {
            BerkPoint::type3(center, e)
        } else {
            BerkPoint::type2(center, e)
        })
    }
}

impl TailSpec {
    pub fn to_tail(&self, cs: &CombSystem) -> anyhow::Result<Tail> {
        Ok(match self {
            TailSpec::Letter { value } => {
                let q = parse_rat(value)?;
                let idx = cs
                    .index_of(&q)
                    .ok_or_else(|| anyhow!("letter {q} is not in the comb"))?;
                Tail::Letter(idx)
            }
            TailSpec::Real { value, irrational } => Tail::Real {
                value: parse_rat(value)?,
                irrational: *irrational,
            },
            TailSpec::End { tooth } => {
                if *tooth == 0 || *tooth > cs.len() {
                    bail!("tooth index {tooth} out of range (1-based)");
                }
                Tail::End(tooth - 1)
            }
            TailSpec::Stream { start, theta } => Tail::Stream(
                LetterStream::new(parse_rat(start)?, parse_rat(theta)?)
                    .map_err(|e| anyhow!("bad stream: {e}"))?,
            ),
        })
    }
}

impl PointSpec {
    pub fn to_point(&self, cs: &CombSystem) -> anyhow::Result<SymbolicPoint> {
        let prefix = Word::parse(cs, &self.prefix).map_err(|e| anyhow!("bad prefix: {e}"))?;
        let tail = self.tail.to_tail(cs)?;
        SymbolicPoint::new(cs, prefix, tail).map_err(|e| anyhow!("bad point: {e}"))
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text).context("parsing config")?;
        if cfg.p < 2 {
            bail!("p must be a prime >= 2");
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Eagerly parses every rational and structured field, so that a
    /// malformed config is a parse error and not a computation error.
    fn validate(&self) -> anyhow::Result<()> {
        self.ctx()?;
        for d in &self.disks {
            d.to_point()?;
        }
        if let Some(m) = &self.morphism {
            for d in m.source_disks.iter().chain(&m.target_disks) {
                d.to_point()?;
            }
        }
        if let Some(t) = &self.tower {
            for stage in &t.stages {
                for d in stage {
                    d.to_point()?;
                }
            }
        }
        if self.comb.is_some() {
            let (cs, _, _, _) = self.comb_system()?;
            if let Some(d) = &self.dendrite {
                for w in &d.words {
                    Word::parse(&cs, w).map_err(|e| anyhow!("bad word {w:?}: {e}"))?;
                }
                for p in &d.points {
                    p.to_point(&cs)?;
                }
            }
            if let Some(s) = &self.shift {
                if let Some(w) = &s.pf_word {
                    Word::parse(&cs, w).map_err(|e| anyhow!("bad word {w:?}: {e}"))?;
                }
                for t in &s.simple_function {
                    parse_rat(&t.coeff)?;
                    Word::parse(&cs, &t.word).map_err(|e| anyhow!("bad word: {e}"))?;
                }
                if let Some(CyclicSpec::Delta { word }) = &s.cyclic {
                    Word::parse(&cs, word).map_err(|e| anyhow!("bad word: {e}"))?;
                }
            }
        } else if self.dendrite.is_some() || self.shift.is_some() {
            bail!("dendrite/shift blocks require a comb block");
        }
        if let Some(g) = &self.group {
            if g.length > 12 {
                bail!("word length cap is 12, got {}", g.length);
            }
            for m in &g.generators {
                for row in m {
                    for entry in row {
                        parse_rat(entry)?;
                    }
                }
            }
            parse_rat(&g.depth)?;
            if let Some(pp) = &g.pingpong {
                for [a, r] in pp {
                    a.to_point()?;
                    r.to_point()?;
                }
            }
        }
        Ok(())
    }

    pub fn ctx(&self) -> anyhow::Result<PrimeContext> {
        PrimeContext::new(self.p).map_err(|e| anyhow!("{e}"))
    }

    pub fn comb_system(&self) -> anyhow::Result<(CombSystem, usize, u32, Vec<Tail>)> {
        let spec = self
            .comb
            .as_ref()
            .ok_or_else(|| anyhow!("config block \"comb\" is required"))?;
        let cs = match &spec.pairs {
            Some(pairs) => {
                let mut ps = Vec::new();
                for [q, b] in pairs {
                    ps.push((parse_rat(q)?, parse_rat(b)?));
                }
                CombSystem::new(ps).map_err(|e| anyhow!("bad comb: {e}"))?
            }
            None => CombSystem::default_comb(spec.letters.max(1)),
        };
        if spec.letters == 0 || spec.letters > cs.len() {
            bail!("alphabet size {} out of range", spec.letters);
        }
        let mut extras = Vec::new();
        for t in &spec.extra_tails {
            extras.push(t.to_tail(&cs)?);
        }
        if extras.is_empty() {
            // default designated off-alphabet tails
            extras.push(Tail::Real {
                value: parse_rat("7/10")?,
                irrational: false,
            });
            extras.push(Tail::Real {
                value: parse_rat("17/24")?,
                irrational: true,
            });
        }
        Ok((cs, spec.letters, spec.depth, extras))
    }

    pub fn schottky(&self) -> anyhow::Result<(SchottkyGroup, &GroupSpec)> {
        let spec = self
            .group
            .as_ref()
            .ok_or_else(|| anyhow!("config block \"group\" is required"))?;
        let ctx = self.ctx()?;
        let group = match spec.preset.as_deref() {
            Some("scaling") => berk_core::schottky::scaling_group(ctx),
            Some("symmetric-rank2") => berk_core::schottky::symmetric_rank2_group(ctx)
                .map_err(|e| anyhow!("{e}"))?,
            Some(other) => bail!("unknown group preset {other:?}"),
            None => {
                if spec.generators.is_empty() {
                    bail!("group needs generators or a preset");
                }
                let mut gens = Vec::new();
                for m in &spec.generators {
                    let a = parse_rat(&m[0][0])?;
                    let b = parse_rat(&m[0][1])?;
                    let c = parse_rat(&m[1][0])?;
                    let d = parse_rat(&m[1][1])?;
                    gens.push(MoebiusMap::new(a, b, c, d).map_err(|e| anyhow!("{e}"))?);
                }
                SchottkyGroup::new(ctx, gens).map_err(|e| anyhow!("{e}"))?
            }
        };
        if let Some(pp) = &spec.pingpong {
            let mut disks = Vec::new();
            for [a, r] in pp {
                disks.push((a.to_point()?, r.to_point()?));
            }
            group
                .validate_ping_pong(&disks)
                .map_err(|e| anyhow!("ping-pong validation failed: {e}"))?;
        }
        Ok((group, spec))
    }

    pub fn depth_rat(&self) -> anyhow::Result<Rat> {
        let spec = self.group.as_ref().ok_or_else(|| anyhow!("no group block"))?;
        let d = parse_rat(&spec.depth)?;
        if d <= Rat::zero() {
            bail!("depth must be positive");
        }
        Ok(d)
    }
}
