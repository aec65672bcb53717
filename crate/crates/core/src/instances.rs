//! Chimera topologies, Ising instances on them, and the instance file format.
//!
//! Sites are indexed cell-major: cell `(row, col)` has index `row * cols + col`
//! and owns the `2 * cell_half` consecutive sites starting at
//! `cell * 2 * cell_half`. Within a cell the left block (coupled vertically
//! to the cells above and below) precedes the right block (coupled
//! horizontally to the cells left and right).

use std::collections::{BTreeSet, HashSet};
use std::fmt::{self, Write as _};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a Chimera graph plus its set of inactive ("broken") sites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChimeraSpec {
    pub rows: usize,
    pub cols: usize,
    pub cell_half: usize,
    pub broken: BTreeSet<usize>,
}

/// Which half of a unit cell a site sits in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Vertically coupled block.
    Left,
    /// Horizontally coupled block.
    Right,
}

impl ChimeraSpec {
    pub fn new(rows: usize, cols: usize, cell_half: usize) -> Self {
        ChimeraSpec {
            rows,
            cols,
            cell_half,
            broken: BTreeSet::new(),
        }
    }

    pub fn with_broken(mut self, broken: impl IntoIterator<Item = usize>) -> Self {
        self.broken = broken.into_iter().collect();
        self
    }

    pub fn total_sites(&self) -> usize {
        self.rows * self.cols * 2 * self.cell_half
    }

    pub fn active_count(&self) -> usize {
        self.total_sites() - self.broken.len()
    }

    pub fn is_active(&self, site: usize) -> bool {
        site < self.total_sites() && !self.broken.contains(&site)
    }

    pub fn cell_size(&self) -> usize {
        2 * self.cell_half
    }

    pub fn site(&self, row: usize, col: usize, side: Side, k: usize) -> usize {
        let base = (row * self.cols + col) * self.cell_size();
        match side {
            Side::Left => base + k,
            Side::Right => base + self.cell_half + k,
        }
    }

    /// Inverse of [`ChimeraSpec::site`].
    pub fn coords(&self, site: usize) -> (usize, usize, Side, usize) {
        let cell = site / self.cell_size();
        let offset = site % self.cell_size();
        let (row, col) = (cell / self.cols, cell % self.cols);
        if offset < self.cell_half {
            (row, col, Side::Left, offset)
        } else {
            (row, col, Side::Right, offset - self.cell_half)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.cell_half == 0 {
            return Err(Error::Shape(format!(
                "rows, cols and cell_half must be >= 1 (got {}x{}x{})",
                self.rows, self.cols, self.cell_half
            )));
        }
        let total = self.total_sites();
        if let Some(&site) = self.broken.iter().find(|&&b| b >= total) {
            return Err(Error::SiteOutOfRange { site, total });
        }
        Ok(())
    }

    /// Whether `(i, j)` is an edge of the full (unmasked) Chimera graph.
    pub fn is_chimera_edge(&self, i: usize, j: usize) -> bool {
        let total = self.total_sites();
        if i >= total || j >= total || i == j {
            return false;
        }
        let (ri, ci, si, ki) = self.coords(i);
        let (rj, cj, sj, kj) = self.coords(j);
        if (ri, ci) == (rj, cj) {
            return si != sj;
        }
        if si != sj || ki != kj {
            return false;
        }
        match si {
            Side::Left => ci == cj && ri.abs_diff(rj) == 1,
            Side::Right => ri == rj && ci.abs_diff(cj) == 1,
        }
    }
}

/// Edge list of a Chimera graph with broken sites removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    pub spec: ChimeraSpec,
    /// Sorted `(i, j)` pairs with `i < j`.
    pub edges: Vec<(usize, usize)>,
}

/// Builds the Chimera adjacency: intra-cell complete bipartite edges plus
/// vertical links between left blocks and horizontal links between right
/// blocks, skipping any edge that touches a broken site.
pub fn build_chimera(spec: &ChimeraSpec) -> Result<Adjacency> {
    spec.validate()?;
    let half = spec.cell_half;
    let mut edges = Vec::new();
    let mut push = |a: usize, b: usize| {
        if spec.is_active(a) && spec.is_active(b) {
            edges.push((a.min(b), a.max(b)));
        }
    };
    for row in 0..spec.rows {
        for col in 0..spec.cols {
            for a in 0..half {
                for b in 0..half {
                    push(
                        spec.site(row, col, Side::Left, a),
                        spec.site(row, col, Side::Right, b),
                    );
                }
            }
            for k in 0..half {
                if row + 1 < spec.rows {
                    push(
                        spec.site(row, col, Side::Left, k),
                        spec.site(row + 1, col, Side::Left, k),
                    );
                }
                if col + 1 < spec.cols {
                    push(
                        spec.site(row, col, Side::Right, k),
                        spec.site(row, col + 1, Side::Right, k),
                    );
                }
            }
        }
    }
    edges.sort_unstable();
    Ok(Adjacency {
        spec: spec.clone(),
        edges,
    })
}

/// One coupling `J` between sites `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub coupling: f64,
}

/// An Ising spin-glass instance on (a subgraph of) a Chimera graph.
///
/// Energy convention: `H = -sum_{edges} J_ij z_i z_j - sum_i h_i z_i`.
#[derive(Debug, Clone)]
pub struct IsingInstance {
    id: String,
    spec: ChimeraSpec,
    edges: Vec<Edge>,
    fields: Option<Vec<f64>>,
    // CSR neighbour lists
    offsets: Vec<usize>,
    neighbors: Vec<(usize, f64)>,
}

impl PartialEq for IsingInstance {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.spec == other.spec
            && self.edges == other.edges
            && self.fields == other.fields
    }
}

impl IsingInstance {
    /// Validates and builds an instance. Edges are normalized to `i < j`
    /// and sorted.
    pub fn new(
        id: impl Into<String>,
        spec: ChimeraSpec,
        edges: Vec<Edge>,
        fields: Option<Vec<f64>>,
    ) -> Result<Self> {
        spec.validate()?;
        let total = spec.total_sites();
        let mut seen = HashSet::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for e in edges {
            let (i, j) = (e.i.min(e.j), e.i.max(e.j));
            for s in [i, j] {
                if s >= total {
                    return Err(Error::SiteOutOfRange { site: s, total });
                }
                if !spec.is_active(s) {
                    return Err(Error::BrokenSite(s));
                }
            }
            if !spec.is_chimera_edge(i, j) {
                return Err(Error::Instance(format!("({i}, {j}) is not a chimera edge")));
            }
            if !(-1.0..=1.0).contains(&e.coupling) {
                return Err(Error::Instance(format!(
                    "coupling {} on ({i}, {j}) outside [-1, 1]",
                    e.coupling
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::Instance(format!("duplicate edge ({i}, {j})")));
            }
            normalized.push(Edge {
                i,
                j,
                coupling: e.coupling,
            });
        }
        normalized.sort_by_key(|e| (e.i, e.j));

        if let Some(h) = &fields {
            if h.len() != total {
                return Err(Error::LengthMismatch {
                    expected: total,
                    got: h.len(),
                });
            }
            for (site, &value) in h.iter().enumerate() {
                if !(-1.0..=1.0).contains(&value) {
                    return Err(Error::Instance(format!(
                        "field {value} at site {site} outside [-1, 1]"
                    )));
                }
                if value != 0.0 && !spec.is_active(site) {
                    return Err(Error::BrokenSite(site));
                }
            }
        }

        let mut degree = vec![0usize; total];
        for e in &normalized {
            degree[e.i] += 1;
            degree[e.j] += 1;
        }
        let mut offsets = Vec::with_capacity(total + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..total].to_vec();
        let mut neighbors = vec![(0usize, 0.0f64); normalized.len() * 2];
        for e in &normalized {
            neighbors[cursor[e.i]] = (e.j, e.coupling);
            cursor[e.i] += 1;
            neighbors[cursor[e.j]] = (e.i, e.coupling);
            cursor[e.j] += 1;
        }

        Ok(IsingInstance {
            id: id.into(),
            spec,
            edges: normalized,
            fields,
            offsets,
            neighbors,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn set_id(&mut self, id: impl Into<String>) {
        self.id = id.into();
    }

    pub fn spec(&self) -> &ChimeraSpec {
        &self.spec
    }

    /// Total number of sites, including broken ones.
    pub fn n(&self) -> usize {
        self.spec.total_sites()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn fields(&self) -> Option<&[f64]> {
        self.fields.as_deref()
    }

    pub fn field(&self, site: usize) -> f64 {
        self.fields.as_ref().map_or(0.0, |h| h[site])
    }

    /// True when no site carries a nonzero local field.
    pub fn has_zero_fields(&self) -> bool {
        self.fields
            .as_ref()
            .is_none_or(|h| h.iter().all(|&v| v == 0.0))
    }

    pub fn is_active(&self, site: usize) -> bool {
        self.spec.is_active(site)
    }

    pub fn active_sites(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&s| self.spec.is_active(s))
    }

    pub fn active_count(&self) -> usize {
        self.spec.active_count()
    }

    /// `(neighbor, J)` pairs of `site`.
    pub fn neighbors(&self, site: usize) -> &[(usize, f64)] {
        &self.neighbors[self.offsets[site]..self.offsets[site + 1]]
    }

    /// True when every coupling is ±1 and every field is in {-1, 0, 1}, so
    /// energies are integers and can be compared exactly.
    pub fn is_integral(&self) -> bool {
        self.edges.iter().all(|e| e.coupling.abs() == 1.0)
            && self
                .fields
                .as_ref()
                .is_none_or(|h| h.iter().all(|&v| v == 0.0 || v.abs() == 1.0))
    }
}

/// Spin configuration: `+1`/`-1` on active sites, `0` on broken sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig(pub Vec<i8>);

impl SpinConfig {
    /// All active sites up, broken sites at the sentinel.
    pub fn all_up(inst: &IsingInstance) -> Self {
        SpinConfig(
            (0..inst.n())
                .map(|s| if inst.is_active(s) { 1 } else { 0 })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    /// Global flip `z -> -z`; broken sentinels stay at 0.
    pub fn flipped(&self) -> Self {
        SpinConfig(self.0.iter().map(|&z| -z).collect())
    }

    /// Parses the `+`/`-`/`.` string form.
    pub fn parse(text: &str) -> Option<Self> {
        text.chars()
            .map(|c| match c {
                '+' => Some(1),
                '-' => Some(-1),
                '.' => Some(0),
                _ => None,
            })
            .collect::<Option<Vec<i8>>>()
            .map(SpinConfig)
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &z in &self.0 {
            f.write_char(match z {
                1 => '+',
                -1 => '-',
                _ => '.',
            })?;
        }
        Ok(())
    }
}

impl Serialize for SpinConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SpinConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        SpinConfig::parse(&text).ok_or_else(|| serde::de::Error::custom("bad spin string"))
    }
}

fn check_len(config: &SpinConfig, inst: &IsingInstance) -> Result<()> {
    if config.len() != inst.n() {
        return Err(Error::LengthMismatch {
            expected: inst.n(),
            got: config.len(),
        });
    }
    Ok(())
}

/// `-sum J_ij z_i z_j - sum h_i z_i`.
pub fn ising_energy(config: &SpinConfig, inst: &IsingInstance) -> Result<f64> {
    check_len(config, inst)?;
    let z = config.spins();
    let mut energy = 0.0;
    for e in inst.edges() {
        energy -= e.coupling * f64::from(z[e.i]) * f64::from(z[e.j]);
    }
    if let Some(h) = inst.fields() {
        for site in inst.active_sites() {
            energy -= h[site] * f64::from(z[site]);
        }
    }
    Ok(energy)
}

/// Exact integer energy, available when [`IsingInstance::is_integral`].
pub fn ising_energy_exact(config: &SpinConfig, inst: &IsingInstance) -> Result<Option<i64>> {
    check_len(config, inst)?;
    if !inst.is_integral() {
        return Ok(None);
    }
    let z = config.spins();
    let mut energy = 0i64;
    for e in inst.edges() {
        energy -= e.coupling as i64 * i64::from(z[e.i]) * i64::from(z[e.j]);
    }
    if let Some(h) = inst.fields() {
        for site in inst.active_sites() {
            energy -= h[site] as i64 * i64::from(z[site]);
        }
    }
    Ok(Some(energy))
}

/// Distribution of coupling (or field) values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingModel {
    /// Uniform on {-1, +1}.
    Pm1,
    /// Uniform over `r >= 2` evenly spaced values in [-1, 1].
    Range(u32),
}

impl CouplingModel {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            CouplingModel::Pm1 => {
                if rng.gen_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            }
            CouplingModel::Range(r) => {
                let k = rng.gen_range(0..r);
                -1.0 + 2.0 * f64::from(k) / f64::from(r - 1)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            CouplingModel::Range(r) if *r < 2 => {
                Err(Error::Param(format!("range model needs r >= 2, got {r}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for CouplingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CouplingModel::Pm1 => f.write_str("pm1"),
            CouplingModel::Range(r) => write!(f, "range{r}"),
        }
    }
}

impl std::str::FromStr for CouplingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "pm1" {
            return Ok(CouplingModel::Pm1);
        }
        let r = s
            .strip_prefix("range")
            .and_then(|r| r.trim_start_matches(['_', '-']).parse::<u32>().ok())
            .ok_or_else(|| Error::Param(format!("unknown coupling model '{s}'")))?;
        let model = CouplingModel::Range(r);
        model.validate()?;
        Ok(model)
    }
}

/// Draws one coupling per edge, independently. Fields are zero.
pub fn random_instance<R: Rng + ?Sized>(
    adjacency: &Adjacency,
    rng: &mut R,
    model: CouplingModel,
    id: impl Into<String>,
) -> Result<IsingInstance> {
    model.validate()?;
    if adjacency.edges.is_empty() {
        return Err(Error::Instance("empty adjacency".into()));
    }
    let edges = adjacency
        .edges
        .iter()
        .map(|&(i, j)| Edge {
            i,
            j,
            coupling: model.sample(rng),
        })
        .collect();
    IsingInstance::new(id, adjacency.spec.clone(), edges, None)
}

/// Returns a copy of `inst` with random local fields on every active site.
pub fn with_random_fields<R: Rng + ?Sized>(
    inst: &IsingInstance,
    rng: &mut R,
    model: CouplingModel,
) -> Result<IsingInstance> {
    model.validate()?;
    let h = (0..inst.n())
        .map(|s| {
            if inst.is_active(s) {
                model.sample(rng)
            } else {
                0.0
            }
        })
        .collect();
    IsingInstance::new(
        inst.id().to_string(),
        inst.spec().clone(),
        inst.edges().to_vec(),
        Some(h),
    )
}

/// Renders the text instance format.
pub fn format_instance(inst: &IsingInstance) -> String {
    let spec = inst.spec();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "n {} rows {} cols {} half {}",
        spec.total_sites(),
        spec.rows,
        spec.cols,
        spec.cell_half
    );
    let _ = writeln!(out, "id {}", inst.id());
    if !spec.broken.is_empty() {
        out.push_str("broken");
        for b in &spec.broken {
            let _ = write!(out, " {b}");
        }
        out.push('\n');
    }
    for e in inst.edges() {
        let _ = writeln!(out, "{} {} {}", e.i, e.j, e.coupling);
    }
    if let Some(h) = inst.fields() {
        for (site, &value) in h.iter().enumerate() {
            if value != 0.0 {
                let _ = writeln!(out, "field {site} {value}");
            }
        }
    }
    out
}

/// Parses the text instance format. `default_id` is used when the file has
/// no `id` line; `origin` only labels error messages.
pub fn parse_instance(text: &str, default_id: &str, origin: &Path) -> Result<IsingInstance> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut header: Option<(usize, ChimeraSpec)> = None;
    let mut id = None;
    let mut broken = BTreeSet::new();
    let mut edges = Vec::new();
    let mut field_entries = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let parse_usize = |t: &str| {
            t.parse::<usize>().map_err(|_| {
                err(
                    lineno,
                    format!("expected a non-negative integer, got '{t}'"),
                )
            })
        };
        let parse_f64 = |t: &str| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(lineno, format!("expected a number, got '{t}'")))
        };
        match tokens[0] {
            "n" => {
                if header.is_some() {
                    return Err(err(lineno, "repeated header".into()));
                }
                if tokens.len() != 8
                    || tokens[2] != "rows"
                    || tokens[4] != "cols"
                    || tokens[6] != "half"
                {
                    return Err(err(
                        lineno,
                        "header must be `n <sites> rows <r> cols <c> half <k>`".into(),
                    ));
                }
                let n = parse_usize(tokens[1])?;
                let spec = ChimeraSpec::new(
                    parse_usize(tokens[3])?,
                    parse_usize(tokens[5])?,
                    parse_usize(tokens[7])?,
                );
                header = Some((n, spec));
            }
            _ if header.is_none() => {
                return Err(err(lineno, "expected header line first".into()));
            }
            "id" => {
                if tokens.len() != 2 {
                    return Err(err(lineno, "id line takes one label".into()));
                }
                id = Some(tokens[1].to_string());
            }
            "broken" => {
                for t in &tokens[1..] {
                    broken.insert(parse_usize(t)?);
                }
            }
            "field" => {
                if tokens.len() != 3 {
                    return Err(err(lineno, "field line must be `field i h`".into()));
                }
                field_entries.push((lineno, parse_usize(tokens[1])?, parse_f64(tokens[2])?));
            }
            _ => {
                if tokens.len() != 3 {
                    return Err(err(lineno, "edge line must be `i j J`".into()));
                }
                edges.push((
                    lineno,
                    Edge {
                        i: parse_usize(tokens[0])?,
                        j: parse_usize(tokens[1])?,
                        coupling: parse_f64(tokens[2])?,
                    },
                ));
            }
        }
    }

    let (n, mut spec) = header.ok_or_else(|| err(0, "missing header".into()))?;
    spec.broken = broken;
    spec.validate().map_err(|e| err(0, e.to_string()))?;
    if n != spec.total_sites() {
        return Err(err(
            1,
            format!("n = {n} but the shape has {} sites", spec.total_sites()),
        ));
    }

    // Per-line checks so errors carry a line number.
    let mut seen = HashSet::new();
    for (lineno, e) in &edges {
        let key = (e.i.min(e.j), e.i.max(e.j));
        for s in [e.i, e.j] {
            if s >= n {
                return Err(err(*lineno, format!("site {s} out of range")));
            }
            if !spec.is_active(s) {
                return Err(err(*lineno, format!("site {s} is broken")));
            }
        }
        if !spec.is_chimera_edge(key.0, key.1) {
            return Err(err(
                *lineno,
                format!("({}, {}) is not a chimera edge", e.i, e.j),
            ));
        }
        if !seen.insert(key) {
            return Err(err(*lineno, format!("duplicate edge ({}, {})", e.i, e.j)));
        }
    }

    let fields = if field_entries.is_empty() {
        None
    } else {
        let mut h = vec![0.0; n];
        let mut set = HashSet::new();
        for (lineno, site, value) in field_entries {
            if site >= n {
                return Err(err(lineno, format!("site {site} out of range")));
            }
            if !spec.is_active(site) {
                return Err(err(lineno, format!("site {site} is broken")));
            }
            if !set.insert(site) {
                return Err(err(lineno, format!("duplicate field for site {site}")));
            }
            h[site] = value;
        }
        Some(h)
    };

    let id = id.unwrap_or_else(|| default_id.to_string());
    IsingInstance::new(
        id,
        spec,
        edges.into_iter().map(|(_, e)| e).collect(),
        fields,
    )
    .map_err(|e| err(0, e.to_string()))
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<IsingInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_instance(&text, &stem, path)
}

pub fn write_instance(inst: &IsingInstance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_instance(inst)).map_err(|e| Error::io(path, e))
}

/// Reads a broken-site mask: whitespace-separated site indices, `#` comments.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BTreeSet<usize>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut mask = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        for t in line.split_whitespace() {
            let site = t.parse::<usize>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                msg: format!("bad site index '{t}'"),
            })?;
            mask.insert(site);
        }
    }
    Ok(mask)
}
